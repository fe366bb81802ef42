//! Quadrature grids on [0,1].
//!
//! A grid carries nodes and positive weights summing to one. All algebra in
//! the crate only touches the weights; the nodes are used to evaluate
//! functions when building test objects.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Quadrature rule on the unit interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl Grid {
    /// Validating constructor.
    pub fn new(points: Vec<f64>, weights: Vec<f64>) -> Result<Arc<Grid>> {
        if points.is_empty() {
            return Err(Error::InvalidGrid("empty grid".into()));
        }
        if points.len() != weights.len() {
            return Err(Error::InvalidGrid(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if points.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::InvalidGrid("points must lie in [0,1]".into()));
        }
        if points.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::InvalidGrid("points must be strictly increasing".into()));
        }
        if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidGrid("weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidGrid(format!("weights sum to {total}, expected 1")));
        }
        Ok(Arc::new(Grid { points, weights }))
    }

    /// Uniform nodes with trapezoid weights. `p = 1` is the single midpoint.
    pub fn uniform(p: usize) -> Result<Arc<Grid>> {
        match p {
            0 => Err(Error::InvalidGrid("grid size must be positive".into())),
            1 => Grid::new(vec![0.5], vec![1.0]),
            _ => {
                let h = 1.0 / (p - 1) as f64;
                let points = (0..p).map(|i| i as f64 * h).collect();
                let weights = (0..p)
                    .map(|i| if i == 0 || i == p - 1 { h / 2.0 } else { h })
                    .collect();
                Grid::new(points, weights)
            }
        }
    }

    /// Gauss-Legendre rule mapped to [0,1].
    pub fn gauss_legendre(p: usize) -> Result<Arc<Grid>> {
        if p == 0 {
            return Err(Error::InvalidGrid("grid size must be positive".into()));
        }
        let (nodes, weights) = gauss_legendre_nodes(p);
        let points = nodes.iter().map(|x| 0.5 * (x + 1.0)).collect();
        let weights: Vec<f64> = weights.iter().map(|w| 0.5 * w).collect();
        // renormalise away the last few ulps
        let s: f64 = weights.iter().sum();
        Grid::new(points, weights.iter().map(|w| w / s).collect())
    }

    /// Rebuild a grid from its weights alone, as stored in the binary format.
    ///
    /// Trapezoid and Gauss-Legendre weight patterns are recognised and get
    /// their canonical nodes; any other pattern gets cumulative-midpoint nodes.
    pub fn from_weights(weights: Vec<f64>) -> Result<Arc<Grid>> {
        let p = weights.len();
        for candidate in [Grid::uniform(p), Grid::gauss_legendre(p)].into_iter().flatten() {
            if candidate.weights == weights {
                return Ok(candidate);
            }
        }
        let mut acc = 0.0;
        let points = weights
            .iter()
            .map(|w| {
                let x = acc + w / 2.0;
                acc += w;
                x
            })
            .collect();
        Grid::new(points, weights)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Two grids are interchangeable when their weights agree exactly.
    pub fn same(a: &Arc<Grid>, b: &Arc<Grid>) -> bool {
        Arc::ptr_eq(a, b) || a.weights == b.weights
    }
}

pub(crate) fn check_same(a: &Arc<Grid>, b: &Arc<Grid>) -> Result<()> {
    if Grid::same(a, b) {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

fn gauss_legendre_nodes(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pnm1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_weights_sum_to_one() {
        for p in [1, 2, 3, 16, 64] {
            let g = Grid::uniform(p).unwrap();
            let s: f64 = g.weights().iter().sum();
            assert!((s - 1.0).abs() < 1e-14);
            assert_eq!(g.len(), p);
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let g = Grid::gauss_legendre(6).unwrap();
        // exact up to degree 11
        for k in 0..12 {
            let q: f64 = g
                .points()
                .iter()
                .zip(g.weights())
                .map(|(x, w)| w * x.powi(k))
                .sum();
            assert!((q - 1.0 / (k as f64 + 1.0)).abs() < 1e-13, "degree {k}");
        }
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(vec![0.2, 0.1], vec![0.5, 0.5]).is_err());
        assert!(Grid::new(vec![0.1, 0.2], vec![0.5, 0.4]).is_err());
        assert!(Grid::new(vec![0.1, 0.2], vec![1.0, 0.0]).is_err());
        assert!(Grid::uniform(0).is_err());
    }

    #[test]
    fn from_weights_recovers_known_rules() {
        let u = Grid::uniform(9).unwrap();
        assert_eq!(*Grid::from_weights(u.weights().to_vec()).unwrap(), *u);
        let gl = Grid::gauss_legendre(7).unwrap();
        assert_eq!(*Grid::from_weights(gl.weights().to_vec()).unwrap(), *gl);
        let odd = Grid::from_weights(vec![0.2, 0.5, 0.3]).unwrap();
        let expect = [0.1, 0.45, 0.85];
        for (a, b) in odd.points().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }
}
