//! Adaptive Simpson quadrature for smooth pieces of real integrands.

fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn refine(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(fa, flm, fm, a, m);
    let right = simpson(fm, frm, fb, m, b);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= 15.0 * tol {
        return left + right + diff / 15.0;
    }
    refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// `∫_a^b f` to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    refine(f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, 48)
}

/// Integral over consecutive breakpoints, so jumps never fall inside a panel.
/// Endpoint values are taken as one-sided limits by nudging inward.
pub fn integrate_pieces(f: &dyn Fn(f64) -> f64, breaks: &[f64], tol: f64) -> f64 {
    let n = breaks.len().saturating_sub(1).max(1);
    breaks
        .windows(2)
        .map(|ab| {
            let (a, b) = (ab[0], ab[1]);
            let eps = 1e-13 * (b - a).abs().max(1.0);
            let g = |x: f64| f(x.clamp(a + eps, b - eps));
            adaptive_simpson(&g, a, b, tol / n as f64)
        })
        .sum()
}
