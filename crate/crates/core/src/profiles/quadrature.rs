//! Composite Simpson and cumulative trapezoid rules.

/// Composite Simpson rule for `fun` on `[a, b]` with `n` subintervals.
///
/// `n` must be even and at least 2; odd `n` is rounded up.
pub fn integrate<F: Fn(f64) -> f64>(fun: F, a: f64, b: f64, n: usize) -> f64 {
    let n = (n.max(2) + 1) & !1;
    let h = (b - a) / n as f64;
    let mut odd = 0.0;
    let mut even = 0.0;
    for i in 1..n {
        let v = fun(a + h * i as f64);
        if i % 2 == 1 {
            odd += v;
        } else {
            even += v;
        }
    }
    h / 3.0 * (fun(a) + fun(b) + 4.0 * odd + 2.0 * even)
}

/// Simpson rule on equally spaced samples. An odd number of intervals is
/// handled with a 3/8 rule on the last three.
pub fn simpson_samples(v: &[f64], h: f64) -> f64 {
    let n = v.len().saturating_sub(1);
    match n {
        0 => 0.0,
        1 => 0.5 * h * (v[0] + v[1]),
        _ => {
            let (m, tail) = if n % 2 == 0 { (n, 0.0) } else { (n - 3, 3.0 * h / 8.0 * (v[n - 3] + 3.0 * v[n - 2] + 3.0 * v[n - 1] + v[n])) };
            let mut s = v[0] + v[m];
            for (i, x) in v.iter().enumerate().take(m).skip(1) {
                s += if i % 2 == 1 { 4.0 * x } else { 2.0 * x };
            }
            h / 3.0 * s + tail
        }
    }
}

/// Running trapezoid integral: `out[i]` approximates the integral from the
/// first sample to sample `i`.
pub fn cumulative_trapezoid(v: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(v.len());
    let mut acc = 0.0;
    for (i, x) in v.iter().enumerate() {
        if i > 0 {
            acc += 0.5 * h * (v[i - 1] + x);
        }
        out.push(acc);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_on_cubics() {
        assert!((integrate(|x| x * x, 0.0, 1.0, 2) - 1.0 / 3.0).abs() < 1e-15);
        assert!((integrate(|x| x * x * x, 0.0, 1.0, 2) - 0.25).abs() < 1e-15);
        // Leading error term (b - a) h^4 / 180 * mean f'''' is 6.45e-8 here.
        let s = integrate(f64::sin, 0.0, std::f64::consts::PI, 64);
        assert!((s - 2.0 - 6.453e-8).abs() < 1e-10);
        let s = integrate(f64::sin, 0.0, std::f64::consts::PI, 128);
        assert!((s - 2.0).abs() < 1e-8);
    }

    #[test]
    fn sampled_rule_matches_function_rule() {
        let h = 0.1;
        let v: Vec<f64> = (0..=10).map(|i| (i as f64 * h).exp()).collect();
        assert!((simpson_samples(&v, h) - integrate(f64::exp, 0.0, 1.0, 10)).abs() < 1e-14);
        let w: Vec<f64> = (0..=9).map(|i| (i as f64 * h).powi(3)).collect();
        assert!((simpson_samples(&w, h) - 0.9f64.powi(4) / 4.0).abs() < 1e-14);
    }

    #[test]
    fn cumulative_ends_at_total() {
        let v = [0.0, 1.0, 4.0];
        assert_eq!(cumulative_trapezoid(&v, 1.0), vec![0.0, 0.5, 3.0]);
    }

    fn simpson_refinement_slope(a: f64, b: f64, k: f64) -> f64 {
        let f = |x: f64| (k * x).exp() + x * x * x;
        let e1 = (integrate(f, a, b, 16) - integrate(f, a, b, 32)).abs();
        let e2 = (integrate(f, a, b, 32) - integrate(f, a, b, 64)).abs();
        (e1 / e2).log2()
    }

    proptest! {
        #[test]
        fn simpson_is_fourth_order(a in -1.0f64..0.0, len in 0.5f64..2.0, k in 0.5f64..3.0) {
            let slope = simpson_refinement_slope(a, a + len, k);
            prop_assert!((slope - 4.0).abs() < 0.5, "slope {}", slope);
        }
    }
}
