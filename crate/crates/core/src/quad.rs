//! Adaptive Simpson quadrature.

const MAX_DEPTH: u32 = 40;

/// Integrates `f` over `[a, b]` to absolute tolerance `tol` by recursive
/// interval halving with Richardson correction. `b < a` yields the negated
/// integral.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    refine(&f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    // below a few ulps of the estimate further halving only chases rounding
    let floor = 4.0 * f64::EPSILON * (left.abs() + right.abs());
    if depth == 0 || delta.abs() <= 15.0 * tol.max(floor) {
        return left + right + delta / 15.0;
    }
    refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let v = adaptive_simpson(|x| x * x * x - 2.0 * x, 0.0, 3.0, 1e-12);
        assert!((v - (81.0 / 4.0 - 9.0)).abs() < 1e-12);
    }

    #[test]
    fn unreachable_tolerance_terminates() {
        let v = adaptive_simpson(|x: f64| 1e8 * (x.sin() + 2.0), 0.0, 50.0, 1e-30);
        let exact = 1e8 * (1.0 - 50f64.cos() + 100.0);
        assert!(((v - exact) / exact).abs() < 1e-12);
    }

    #[test]
    fn exponential() {
        let v = adaptive_simpson(|x: f64| (-0.3 * x).exp(), 0.0, 10.0, 1e-13);
        let exact = (1.0 - (-3.0f64).exp()) / 0.3;
        assert!((v - exact).abs() < 1e-11);
    }

    #[test]
    fn reversed_limits_and_empty() {
        let fwd = adaptive_simpson(f64::sin, 0.0, 2.0, 1e-12);
        let rev = adaptive_simpson(f64::sin, 2.0, 0.0, 1e-12);
        assert!((fwd + rev).abs() < 1e-12);
        assert_eq!(adaptive_simpson(f64::sin, 1.0, 1.0, 1e-12), 0.0);
    }
}
