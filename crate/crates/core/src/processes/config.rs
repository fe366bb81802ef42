//! Model specification files.
//!
//! TOML with the following keys:
//!
//! ```toml
//! kind = "far1"              # white | far1 | maq | bilinear1
//! grid = 16                  # number of grid points
//! quadrature = "trapezoid"   # trapezoid | gauss-legendre
//!
//! [noise]
//! distribution = "gaussian"  # gaussian | scaled-uniform
//! rank_cap = 20
//! eigenvalues = [1.0, 0.5, 0.25]   # on the Fourier basis
//! # or: covariance = { brownian = 1.0 } / { file = "cov.bin" } / { values = [...] }
//!
//! [rho]                      # far1
//! gaussian = 0.3             # exp(−(x−y)²/(2·0.3²)) ...
//! norm = 0.5                 # ... rescaled to operator norm 0.5
//!
//! # maq: one [[b]] table per coefficient b_0..b_q
//! # bilinear1: [a] and [c] tables
//! ```
//!
//! A kernel table takes exactly one source: `scale` (multiple of the
//! identity), `gaussian` (bandwidth), `brownian` (`σ² min(x,y)`), `values`
//! (row-major real `P×P`) or `file` (binary array, relative to the model
//! file). An optional `norm` rescales the result to that operator norm.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::model::{ModelKind, NoiseDistribution, NoiseModel, ProcessModel, DEFAULT_RANK_CAP};
use crate::error::{Error, Result};
use crate::hilbert::io::ArrayRecord;
use crate::hilbert::{Grid, HSOp};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: String,
    pub grid: usize,
    #[serde(default = "default_quadrature")]
    pub quadrature: String,
    pub noise: NoiseSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<KernelSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub b: Vec<KernelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<KernelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<KernelSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    #[serde(default = "default_distribution")]
    pub distribution: NoiseDistribution,
    #[serde(default = "default_rank_cap")]
    pub rank_cap: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigenvalues: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covariance: Option<KernelSpec>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gaussian: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub brownian: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm: Option<f64>,
}

fn default_quadrature() -> String {
    "trapezoid".into()
}

fn default_distribution() -> NoiseDistribution {
    NoiseDistribution::Gaussian
}

fn default_rank_cap() -> usize {
    DEFAULT_RANK_CAP
}

impl KernelSpec {
    pub fn scaled_identity(s: f64) -> Self {
        KernelSpec { scale: Some(s), ..Default::default() }
    }

    pub fn gaussian(bandwidth: f64, norm: f64) -> Self {
        KernelSpec { gaussian: Some(bandwidth), norm: Some(norm), ..Default::default() }
    }

    pub fn build(&self, grid: &Arc<Grid>, base: &Path) -> Result<HSOp> {
        let sources = [
            self.scale.is_some(),
            self.gaussian.is_some(),
            self.brownian.is_some(),
            self.values.is_some(),
            self.file.is_some(),
        ];
        if sources.iter().filter(|s| **s).count() != 1 {
            return Err(Error::Config("a kernel needs exactly one of scale/gaussian/brownian/values/file".into()));
        }
        let op = if let Some(s) = self.scale {
            HSOp::identity(grid).scale_real(s)
        } else if let Some(bw) = self.gaussian {
            if bw <= 0.0 {
                return Err(Error::Config("gaussian bandwidth must be positive".into()));
            }
            HSOp::from_real_fn(grid, |x, y| (-(x - y).powi(2) / (2.0 * bw * bw)).exp())
        } else if let Some(s2) = self.brownian {
            HSOp::from_real_fn(grid, |x, y| s2 * x.min(y))
        } else if let Some(v) = &self.values {
            HSOp::from_real_rows(grid.clone(), v)?
        } else {
            let path = base.join(self.file.as_ref().expect("checked above"));
            let op = ArrayRecord::load(&path)?.into_operator()?;
            if !Grid::same(op.grid(), grid) {
                return Err(Error::Config(format!("{} lives on a different grid", path.display())));
            }
            HSOp::new(grid.clone(), op.into_kernel())?
        };
        match self.norm {
            Some(n) => {
                let cur = op.op_norm();
                if cur == 0.0 {
                    return Err(Error::Config("cannot rescale a zero kernel".into()));
                }
                Ok(op.scale_real(n / cur))
            }
            None => Ok(op),
        }
    }
}

impl ModelSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec serialises")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<(Self, PathBuf)> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((ModelSpec::from_toml(&text)?, base))
    }

    pub fn build_grid(&self) -> Result<Arc<Grid>> {
        match self.quadrature.as_str() {
            "trapezoid" => Grid::uniform(self.grid),
            "gauss-legendre" => Grid::gauss_legendre(self.grid),
            other => Err(Error::Config(format!("unknown quadrature '{other}'"))),
        }
    }

    pub fn build(&self, base: &Path) -> Result<ProcessModel> {
        let grid = self.build_grid()?;
        let noise = match (&self.noise.eigenvalues, &self.noise.covariance) {
            (Some(ev), None) => NoiseModel::fourier(&grid, ev, self.noise.distribution)?,
            (None, Some(k)) => NoiseModel::new(k.build(&grid, base)?, self.noise.distribution, self.noise.rank_cap)?,
            _ => return Err(Error::Config("noise needs exactly one of eigenvalues/covariance".into())),
        };
        let need = |k: &Option<KernelSpec>, name: &str| -> Result<HSOp> {
            k.as_ref().ok_or_else(|| Error::Config(format!("missing [{name}] table")))?.build(&grid, base)
        };
        let kind = match self.kind.as_str() {
            "white" => ModelKind::White,
            "far1" => ModelKind::Far1 { rho: need(&self.rho, "rho")? },
            "maq" => {
                if self.b.is_empty() {
                    return Err(Error::Config("maq needs at least one [[b]] table".into()));
                }
                ModelKind::Maq { b: self.b.iter().map(|k| k.build(&grid, base)).collect::<Result<_>>()? }
            }
            "bilinear1" => ModelKind::Bilinear1 { a: need(&self.a, "a")?, c: need(&self.c, "c")? },
            other => return Err(Error::Config(format!("unknown model kind '{other}'"))),
        };
        ProcessModel::new(kind, noise)
    }

    /// Reference models used throughout the tests and the CLI presets.
    pub fn preset(name: &str) -> Result<Self> {
        let noise = |ev: Vec<f64>| NoiseSpec {
            distribution: NoiseDistribution::Gaussian,
            rank_cap: DEFAULT_RANK_CAP,
            eigenvalues: Some(ev),
            covariance: None,
        };
        let base = |kind: &str, grid: usize, ev: Vec<f64>| ModelSpec {
            kind: kind.into(),
            grid,
            quadrature: default_quadrature(),
            noise: noise(ev),
            rho: None,
            b: vec![],
            a: None,
            c: None,
        };
        Ok(match name {
            "ar1" => ModelSpec { rho: Some(KernelSpec::scaled_identity(0.5)), ..base("far1", 1, vec![1.0]) },
            "far1" => ModelSpec { rho: Some(KernelSpec::gaussian(0.3, 0.5)), ..base("far1", 16, vec![1.0, 0.5, 0.25]) },
            "white" => base("white", 16, vec![1.0, 0.5, 0.25]),
            "bilinear1" => ModelSpec {
                a: Some(KernelSpec::scaled_identity(0.5)),
                c: Some(KernelSpec::gaussian(0.3, 0.6)),
                ..base("bilinear1", 8, vec![1.0, 0.5, 0.25])
            },
            "far1-small" => ModelSpec { rho: Some(KernelSpec::gaussian(0.3, 0.5)), ..base("far1", 8, vec![1.0, 0.5, 0.25]) },
            other => return Err(Error::Config(format!("unknown preset '{other}'"))),
        })
    }

    pub fn preset_names() -> &'static [&'static str] {
        &["ar1", "far1", "far1-small", "white", "bilinear1"]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_example() {
        let text = r#"
kind = "far1"
grid = 16
[noise]
eigenvalues = [1.0, 0.5, 0.25]
[rho]
gaussian = 0.3
norm = 0.5
"#;
        let spec = ModelSpec::from_toml(text).unwrap();
        let model = spec.build(Path::new(".")).unwrap();
        assert_eq!(model.name(), "far1");
        assert!((model.rho_norm() - 0.5).abs() < 1e-12);
        assert_eq!(spec, ModelSpec::from_toml(&spec.to_toml()).unwrap());
    }

    #[test]
    fn presets_build() {
        for name in ModelSpec::preset_names() {
            ModelSpec::preset(name).unwrap().build(Path::new(".")).unwrap();
        }
    }

    #[test]
    fn kernel_from_file() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid::uniform(4).unwrap();
        let rho = HSOp::from_real_fn(&g, |x, y| 0.2 * (x + y));
        ArrayRecord::from(&rho).save(dir.path().join("rho.bin")).unwrap();
        let text = "kind = \"far1\"\ngrid = 4\n[noise]\ncovariance = { brownian = 1.0 }\nrank_cap = 3\n[rho]\nfile = \"rho.bin\"\n";
        let model = ModelSpec::from_toml(text).unwrap().build(dir.path()).unwrap();
        assert_eq!(model.noise().rank(), 3);
        if let ModelKind::Far1 { rho: got } = model.kind() {
            assert_eq!(got.kernel(), rho.kernel());
        } else {
            panic!("wrong kind");
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(ModelSpec::from_toml("kind = \"far1\"\ngrid = 4\n[noise]\neigenvalues=[1.0]\n")
            .unwrap()
            .build(Path::new("."))
            .is_err());
        assert!(ModelSpec::from_toml("kind = \"x\"\ngrid = 4\nbogus = 1\n[noise]\n").is_err());
        let two = "kind = \"far1\"\ngrid = 4\n[noise]\neigenvalues=[1.0]\n[rho]\nscale = 0.5\ngaussian = 0.2\n";
        assert!(ModelSpec::from_toml(two).unwrap().build(Path::new(".")).is_err());
    }
}
