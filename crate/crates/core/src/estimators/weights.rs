//! Numerical check of the four balance conditions on scalar lag weights
//! `φ_{T,t} = w(b_T t) e^{iλt}`, for which operator norms reduce to `|w(b_T t)|`.

use serde::{Deserialize, Serialize};

use super::bandwidth::BandwidthRule;
use super::window::Window;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightRow {
    pub t_len: usize,
    pub bandwidth: f64,
    /// `‖Φ_T‖²_F = Σ_{s,t} w²(b(t−s))`.
    pub phi_f2: f64,
    /// `ϱ²_T = Σ_{t=1}^{T} w²(b t)`.
    pub rho2: f64,
    pub max_w2: f64,
    /// `Σ_{t=1}^{T} (w(bt) − w(b(t−1)))²`.
    pub smoothness: f64,
    /// `Σ_j Σ_{s<j} (Σ_{t>j} w(b(s−t)) w(b(j−t)))²`.
    pub overlap: f64,
    /// `T ϱ² / ‖Φ‖²_F`.
    pub ratio_i: f64,
    pub ratio_ii: f64,
    pub ratio_iii: f64,
    /// `overlap / ‖Φ‖⁴_F`.
    pub ratio_iv: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightVerdict {
    pub i_bounded: bool,
    pub ii_decreasing: bool,
    pub iii_decreasing: bool,
    pub iv_decreasing: bool,
}

impl WeightVerdict {
    pub fn satisfied(&self) -> bool {
        self.i_bounded && self.ii_decreasing && self.iii_decreasing && self.iv_decreasing
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightDiagnostics {
    pub window: String,
    pub rule: BandwidthRule,
    pub rows: Vec<WeightRow>,
    /// Band used for the boundedness flag of ratio (i).
    pub band_i: (f64, f64),
    /// Largest log-log slope across the ladder still counted as decay.
    pub decay_slope: f64,
    pub verdict: WeightVerdict,
    pub notes: Vec<String>,
}

/// Default band for ratio (i).
pub const BAND_I: (f64, f64) = (0.5, 2.0);
/// A "decreasing" ratio must also shrink at least like `T^{-0.05}` overall,
/// so that a sequence creeping down to a positive constant is not accepted.
pub const DECAY_SLOPE: f64 = -0.05;

/// Quantities for one sample length.
pub fn weight_row(window: &Window, bandwidth: f64, t_len: usize) -> WeightRow {
    let b = bandwidth;
    let w = |h: i64| window.eval(b * h as f64);
    let tt = t_len as i64;
    let l = window.max_lag(b, t_len) as i64;
    let mut phi_f2 = tt as f64 * w(0).powi(2);
    for h in 1..=l {
        phi_f2 += 2.0 * (tt - h) as f64 * w(h).powi(2);
    }
    let rho2: f64 = (1..=tt).map(|t| w(t).powi(2)).sum();
    let max_w2 = (1..=tt).map(|t| w(t).powi(2)).fold(0.0, f64::max);
    let smoothness: f64 = (1..=tt).map(|t| (w(t) - w(t - 1)).powi(2)).sum();
    // With d = j − s and u = t − s the inner sum is a prefix sum in u,
    // cut at min(T − s, L). Only d < L contributes.
    let mut overlap = 0.0;
    let mut prefix = Vec::with_capacity(l.max(0) as usize + 1);
    for d in 1..l.min(tt - 1) {
        prefix.clear();
        prefix.push(0.0);
        let mut acc = 0.0;
        for u in (d + 1)..=l {
            acc += w(-u) * w(d - u);
            prefix.push(acc);
        }
        // prefix[k] sums u = d+1 ..= d+k
        for s in 1..(tt - d) {
            let cap = (tt - s).min(l);
            let inner = prefix[(cap - d).max(0) as usize];
            overlap += inner * inner;
        }
    }
    WeightRow {
        t_len,
        bandwidth: b,
        phi_f2,
        rho2,
        max_w2,
        smoothness,
        overlap,
        ratio_i: tt as f64 * rho2 / phi_f2,
        ratio_ii: max_w2 / rho2,
        ratio_iii: smoothness / rho2,
        ratio_iv: overlap / (phi_f2 * phi_f2),
    }
}

fn decays(xs: &[f64], ts: &[f64]) -> bool {
    if xs.iter().all(|x| *x == 0.0) {
        return true;
    }
    if !xs.windows(2).all(|p| p[1] < p[0]) || xs.iter().any(|x| *x <= 0.0) {
        return false;
    }
    let n = xs.len() as f64;
    let lx: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx <= DECAY_SLOPE
}

/// Evaluate the conditions over a ladder of sample lengths.
pub fn check_weight_conditions(window: &Window, rule: BandwidthRule, ladder: &[usize]) -> Result<WeightDiagnostics> {
    if ladder.len() < 3 {
        return Err(Error::InvalidArgument("weight check needs at least three ladder points".into()));
    }
    if ladder.windows(2).any(|p| p[1] <= p[0]) || ladder[0] < 2 {
        return Err(Error::InvalidArgument("ladder must be strictly increasing and start at T ≥ 2".into()));
    }
    let rows: Vec<WeightRow> = ladder.iter().map(|&t| weight_row(window, rule.at(t), t)).collect();
    let ts: Vec<f64> = ladder.iter().map(|&t| t as f64).collect();
    let col = |f: fn(&WeightRow) -> f64| rows.iter().map(f).collect::<Vec<_>>();
    let verdict = WeightVerdict {
        i_bounded: rows.iter().all(|r| r.ratio_i >= BAND_I.0 && r.ratio_i <= BAND_I.1),
        ii_decreasing: decays(&col(|r| r.ratio_ii), &ts),
        iii_decreasing: decays(&col(|r| r.ratio_iii), &ts),
        iv_decreasing: decays(&col(|r| r.ratio_iv), &ts),
    };
    let mut notes = Vec::new();
    if !window.support().is_finite() {
        notes.push("window support is unbounded; every lag below T enters the sums".to_string());
    }
    if !verdict.iv_decreasing {
        notes.push("overlap ratio does not decay: no local smoothing".to_string());
    }
    Ok(WeightDiagnostics {
        window: window.name().to_string(),
        rule,
        rows,
        band_i: BAND_I,
        decay_slope: DECAY_SLOPE,
        verdict,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::window::WindowKind;

    /// Direct evaluation over all index triples, no support truncation.
    fn overlap_bruteforce(w: &Window, b: f64, t_len: usize) -> f64 {
        let tt = t_len as i64;
        let f = |h: i64| w.eval(b * h as f64);
        let mut acc = 0.0;
        for j in 1..tt {
            for s in 1..j {
                let inner: f64 = ((j + 1)..=tt).map(|t| f(s - t) * f(j - t)).sum();
                acc += inner * inner;
            }
        }
        acc
    }

    #[test]
    fn overlap_matches_bruteforce() {
        for kind in [WindowKind::Bartlett, WindowKind::Truncated, WindowKind::Parzen] {
            let w = Window::new(kind);
            for (b, t) in [(0.2, 30), (0.05, 40), (1.0 / 25.0, 25)] {
                let r = weight_row(&w, b, t);
                let bf = overlap_bruteforce(&w, b, t);
                assert!((r.overlap - bf).abs() <= 1e-12 * bf.max(1.0), "{kind:?} {b} {t}");
            }
        }
    }

    #[test]
    fn truncated_all_lags_closed_form() {
        // w ≡ 1 over all lags: ‖Φ‖² = T², overlap = Σ_j (j−1)(T−j)²
        let t = 20usize;
        let r = weight_row(&Window::new(WindowKind::Truncated), 1.0 / t as f64, t);
        assert_eq!(r.phi_f2, (t * t) as f64);
        let want: f64 = (1..t).map(|j| ((j - 1) * (t - j) * (t - j)) as f64).sum();
        assert_eq!(r.overlap, want);
        assert_eq!(r.rho2, t as f64);
    }

    #[test]
    fn bartlett_ratios_decrease() {
        let ladder: Vec<usize> = (8..=11).map(|k| 1usize << k).collect();
        let d = check_weight_conditions(&Window::new(WindowKind::Bartlett), BandwidthRule::CUBE_ROOT, &ladder).unwrap();
        assert!(d.verdict.ii_decreasing && d.verdict.iii_decreasing && d.verdict.iv_decreasing);
        for r in &d.rows {
            assert!(r.ratio_i > 0.0 && r.ratio_i < 0.5);
        }
    }

    #[test]
    fn no_smoothing_flagged() {
        let ladder: Vec<usize> = (5..=8).map(|k| 1usize << k).collect();
        let d = check_weight_conditions(&Window::new(WindowKind::Truncated), BandwidthRule::inverse_t(), &ladder).unwrap();
        assert!(!d.verdict.iv_decreasing);
        let c = check_weight_conditions(&Window::new(WindowKind::Constant), BandwidthRule::Fixed(0.3), &ladder).unwrap();
        assert!(c.verdict.ii_decreasing && !c.verdict.iv_decreasing);
        assert!(!c.notes.is_empty());
    }

    #[test]
    fn short_ladder_rejected() {
        assert!(check_weight_conditions(&Window::new(WindowKind::Bartlett), BandwidthRule::CUBE_ROOT, &[64, 128]).is_err());
    }
}
