//! Lag windows `w` and their Fourier partners `K` used for smoothing.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::integrate_pieces;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    Bartlett,
    Parzen,
    TukeyHanning,
    FlatTop,
    Truncated,
    /// `w ≡ 1`; infinite support, only meaningful for the weight checker.
    Constant,
}

impl WindowKind {
    pub const LIBRARY: [WindowKind; 5] = [
        WindowKind::Bartlett,
        WindowKind::Parzen,
        WindowKind::TukeyHanning,
        WindowKind::FlatTop,
        WindowKind::Truncated,
    ];

    pub fn name(self) -> &'static str {
        match self {
            WindowKind::Bartlett => "bartlett",
            WindowKind::Parzen => "parzen",
            WindowKind::TukeyHanning => "tukey_hanning",
            WindowKind::FlatTop => "flat_top",
            WindowKind::Truncated => "truncated",
            WindowKind::Constant => "constant",
        }
    }

    fn eval(self, x: f64) -> f64 {
        let a = x.abs();
        match self {
            WindowKind::Bartlett => (1.0 - a).max(0.0),
            WindowKind::Parzen => {
                if a <= 0.5 {
                    1.0 - 6.0 * a * a + 6.0 * a * a * a
                } else if a <= 1.0 {
                    2.0 * (1.0 - a).powi(3)
                } else {
                    0.0
                }
            }
            WindowKind::TukeyHanning => {
                if a <= 1.0 {
                    0.5 * (1.0 + (PI * a).cos())
                } else {
                    0.0
                }
            }
            WindowKind::FlatTop => {
                if a <= 0.5 {
                    1.0
                } else if a <= 1.0 {
                    2.0 * (1.0 - a)
                } else {
                    0.0
                }
            }
            WindowKind::Truncated => {
                if a <= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            WindowKind::Constant => 1.0,
        }
    }

    fn breakpoints(self) -> &'static [f64] {
        match self {
            WindowKind::Parzen | WindowKind::FlatTop => &[0.0, 0.5, 1.0],
            WindowKind::Constant => &[],
            _ => &[0.0, 1.0],
        }
    }
}

/// An even, bounded lag window with `w(0) = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Window {
    kind: WindowKind,
    support: f64,
    kappa: f64,
    lipschitz_at_zero: bool,
}

impl Window {
    pub fn new(kind: WindowKind) -> Self {
        let (support, kappa) = match kind {
            WindowKind::Constant => (f64::INFINITY, f64::INFINITY),
            _ => {
                let half = integrate_pieces(&|x| kind.eval(x).powi(2), kind.breakpoints(), 1e-14);
                (1.0, 2.0 * half)
            }
        };
        Window { kind, support, kappa, lipschitz_at_zero: true }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        let key = name.trim().to_ascii_lowercase().replace('-', "_");
        WindowKind::LIBRARY
            .iter()
            .chain(std::iter::once(&WindowKind::Constant))
            .find(|k| k.name() == key)
            .map(|k| Window::new(*k))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown window '{name}'")))
    }

    pub fn kind(&self) -> WindowKind {
        self.kind
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.kind.eval(x)
    }

    /// Radius outside which `w` vanishes (`∞` for unbounded support).
    pub fn support(&self) -> f64 {
        self.support
    }

    /// `κ = ∫ w²`.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn lipschitz_at_zero(&self) -> bool {
        self.lipschitz_at_zero
    }

    /// Largest lag `h` with `w(b h)` possibly nonzero, capped at `t_len − 1`.
    pub fn max_lag(&self, bandwidth: f64, t_len: usize) -> usize {
        let cap = t_len.saturating_sub(1);
        if !self.support.is_finite() {
            return cap;
        }
        let l = (self.support / bandwidth).floor();
        if l >= cap as f64 {
            cap
        } else {
            l as usize
        }
    }

    /// Spectral window `K(u) = (2π)^{-1} ∫ w(x) e^{-iux} dx` when registered.
    pub fn spectral_kernel(&self) -> Option<fn(f64) -> f64> {
        match self.kind {
            WindowKind::Bartlett => Some(fejer),
            WindowKind::Parzen => Some(parzen_kernel),
            _ => None,
        }
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

fn fejer(u: f64) -> f64 {
    sinc(0.5 * u).powi(2) / (2.0 * PI)
}

fn parzen_kernel(u: f64) -> f64 {
    3.0 / (8.0 * PI) * sinc(0.25 * u).powi(4)
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for Window {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Window {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Window::by_name(&s).map_err(serde::de::Error::custom)
    }
}

/// The five library windows.
pub fn window_library() -> Vec<Window> {
    WindowKind::LIBRARY.iter().map(|k| Window::new(*k)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    // closed-form ∫w² values worked out by hand
    const KAPPA: [(WindowKind, f64); 5] = [
        (WindowKind::Bartlett, 2.0 / 3.0),
        (WindowKind::Parzen, 151.0 / 280.0),
        (WindowKind::TukeyHanning, 0.75),
        (WindowKind::FlatTop, 4.0 / 3.0),
        (WindowKind::Truncated, 2.0),
    ];

    #[test]
    fn kappa_matches_closed_forms() {
        for (k, want) in KAPPA {
            let got = Window::new(k).kappa();
            assert!((got - want).abs() < 1e-10, "{k:?}: {got} vs {want}");
        }
    }

    #[test]
    fn kappa_matches_riemann_sum() {
        // midpoint rule on a fine grid, independent of the adaptive scheme
        let n = 200_000;
        for w in window_library() {
            let s: f64 = (0..n).map(|i| w.eval(-1.0 + (i as f64 + 0.5) * 2.0 / n as f64).powi(2)).sum::<f64>() * 2.0 / n as f64;
            assert!((s - w.kappa()).abs() < 1e-5, "{}", w.name());
        }
    }

    #[test]
    fn unit_at_zero_and_even() {
        for w in window_library() {
            assert_eq!(w.eval(0.0), 1.0);
            for i in 0..1000 {
                let x = -3.0 + 6.0 * i as f64 / 999.0;
                assert_eq!(w.eval(x), w.eval(-x));
                assert!(w.eval(x).abs() <= 1.0);
            }
            assert_eq!(w.eval(1.0 + 1e-9), 0.0);
        }
    }

    #[test]
    fn spectral_pairs_invert() {
        // ∫ K(u) e^{iux} du = w(x), checked by a wide trapezoid sum
        for w in [Window::new(WindowKind::Bartlett), Window::new(WindowKind::Parzen)] {
            let k = w.spectral_kernel().unwrap();
            let (lim, n) = (4000.0, 800_000);
            let h = 2.0 * lim / n as f64;
            for x in [0.0, 0.3, 0.7] {
                let s: f64 = (0..=n).map(|i| {
                    let u = -lim + i as f64 * h;
                    k(u) * (u * x).cos()
                }).sum::<f64>() * h;
                assert!((s - w.eval(x)).abs() < 2e-3, "{} at {x}: {s}", w.name());
            }
        }
        assert!(Window::new(WindowKind::Truncated).spectral_kernel().is_none());
    }

    #[test]
    fn names_round_trip() {
        for w in window_library() {
            assert_eq!(Window::by_name(w.name()).unwrap(), w);
        }
        assert!(Window::by_name("tukey-hanning").is_ok());
        assert!(Window::by_name("boxcar").is_err());
        assert_eq!(Window::new(WindowKind::Bartlett).max_lag(0.1, 1000), 10);
        assert_eq!(Window::new(WindowKind::Constant).max_lag(0.1, 50), 49);
    }
}
