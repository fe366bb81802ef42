//! Joint cumulant tensors and the summability diagnostics built on them.
//!
//! Moments are Monte Carlo averages of `X_{t_1} ⊗ … ⊗ X_{t_n}` over paths
//! shared by every requested time tuple. A cumulant is the alternating sum
//! over set partitions of products of block moments, with axes permuted
//! back into tuple order. All supported models have mean zero, so
//! partitions containing a singleton block contribute nothing and are
//! skipped. Error bars come from re-running the (nonlinear) partition sum
//! on independent replicate batches.

mod partition;

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

pub use partition::{mask, partition_coefficient, set_partitions};

use crate::error::{Error, Result};
use crate::hilbert::{invert_perm, Grid, GridTensor, HSOp};
use crate::processes::{nu_batch, simulate_replicate, true_cov, ProcessModel};

/// Largest supported order.
pub const MAX_ORDER: usize = 4;
/// Grid size limit for rank-four tensors.
pub const MAX_P_ORDER4: usize = 12;
/// Independent replicate batches used for cumulant standard errors.
pub const BATCHES: usize = 10;

/// Monte Carlo moment tensor `E[X_{t_1} ⊗ … ⊗ X_{t_n}]`.
#[derive(Debug, Clone)]
pub struct MomentTensor {
    pub times: Vec<i64>,
    pub tensor: GridTensor,
    /// Entrywise standard error (real parts).
    pub se: GridTensor,
    pub replicates: usize,
}

/// Estimated joint cumulant `cum(X_{t_1}, …, X_{t_n})`.
#[derive(Debug, Clone)]
pub struct CumTensor {
    pub order: usize,
    pub times: Vec<i64>,
    pub tensor: GridTensor,
    /// Entrywise standard error from batch spread (real parts).
    pub se: GridTensor,
    /// HS norm of the standard-error tensor.
    pub se_hs: f64,
    pub replicates: usize,
    pub batches: usize,
}

impl CumTensor {
    /// Lags relative to the last time, `t_i − t_n` for `i < n`.
    pub fn lags(&self) -> Vec<i64> {
        let last = *self.times.last().expect("non-empty tuple");
        self.times[..self.times.len() - 1].iter().map(|t| t - last).collect()
    }

    pub fn hs_norm(&self) -> f64 {
        self.tensor.hs_norm()
    }

    /// Order-two cumulant as an operator.
    pub fn to_operator(&self) -> Result<HSOp> {
        self.tensor.to_operator()
    }

    /// `‖cum‖ ≤ k · se_hs`.
    pub fn within_noise(&self, k: f64) -> bool {
        self.hs_norm() <= k * self.se_hs
    }
}

/// Moment, cumulant and the cumulant-product reconstruction on one tuple.
#[derive(Debug, Clone)]
pub struct CumulantEstimate {
    pub moment: MomentTensor,
    pub cumulant: CumTensor,
    /// Sum over partitions with at least two blocks of the permuted products
    /// of lower-order cumulants.
    pub reconstruction: GridTensor,
}

#[derive(Debug, Clone)]
struct Accum {
    /// Indexed by subset mask; only the masks the partition sums need.
    sums: Vec<Option<Vec<Complex64>>>,
    sumsq: Vec<f64>,
    count: usize,
}

impl Accum {
    fn new(n: usize, p: usize) -> Self {
        let needed = needed_masks(n);
        let sums = (0..1usize << n)
            .map(|m| needed[m].then(|| vec![Complex64::new(0.0, 0.0); p.pow(m.count_ones())]))
            .collect();
        Accum { sums, sumsq: vec![0.0; p.pow(n as u32)], count: 0 }
    }

    fn add(&mut self, other: &Accum) {
        for (a, b) in self.sums.iter_mut().zip(&other.sums) {
            if let (Some(a), Some(b)) = (a.as_mut(), b.as_ref()) {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
            }
        }
        self.sumsq.iter_mut().zip(&other.sumsq).for_each(|(x, y)| *x += y);
        self.count += other.count;
    }

    fn mean(&self, grid: &Arc<Grid>, m: usize) -> Result<GridTensor> {
        let s = self.sums[m].as_ref().ok_or_else(|| Error::InvalidArgument(format!("moment for mask {m} not tracked")))?;
        let c = self.count as f64;
        GridTensor::new(grid.clone(), m.count_ones() as usize, s.iter().map(|v| v / c).collect())
    }
}

/// Masks whose moments enter some singleton-free partition, plus the full set.
fn needed_masks(n: usize) -> Vec<bool> {
    let mut needed = vec![false; 1 << n];
    needed[(1 << n) - 1] = true;
    for part in set_partitions(n) {
        if part.iter().all(|b| b.len() > 1) {
            for b in &part {
                needed[mask(b)] = true;
            }
        }
    }
    needed
}

fn validate(model: &ProcessModel, tuples: &[Vec<i64>], replicates: usize) -> Result<()> {
    if tuples.is_empty() {
        return Err(Error::InvalidArgument("no time tuples".into()));
    }
    let p = model.grid().len();
    for t in tuples {
        if t.is_empty() || t.len() > MAX_ORDER {
            return Err(Error::InvalidArgument(format!("order {} outside 1..={MAX_ORDER}", t.len())));
        }
        if t.len() == 4 && p > MAX_P_ORDER4 {
            return Err(Error::InvalidArgument(format!(
                "order-4 tensors need P <= {MAX_P_ORDER4} (got {p}); use a coarser grid"
            )));
        }
    }
    if replicates < 2 * BATCHES {
        return Err(Error::InvalidArgument(format!("at least {} replicates are required", 2 * BATCHES)));
    }
    Ok(())
}

/// Accumulate moment sums for every tuple on shared paths, batch by batch.
fn accumulate(model: &ProcessModel, tuples: &[Vec<i64>], replicates: usize, seed: u64) -> Result<Vec<Vec<Accum>>> {
    validate(model, tuples, replicates)?;
    let p = model.grid().len();
    let tmin = tuples.iter().flatten().copied().min().unwrap_or(0);
    let tmax = tuples.iter().flatten().copied().max().unwrap_or(0);
    let span = (tmax - tmin + 1) as usize;
    (0..BATCHES)
        .into_par_iter()
        .map(|b| {
            let mut accs: Vec<Accum> = tuples.iter().map(|t| Accum::new(t.len(), p)).collect();
            let lo = b * replicates / BATCHES;
            let hi = (b + 1) * replicates / BATCHES;
            let mut buf = Vec::new();
            for r in lo..hi {
                let path = simulate_replicate(model, span, seed, r as u64, None)?;
                let series = path.series();
                for (t, acc) in tuples.iter().zip(accs.iter_mut()) {
                    let rows: Vec<usize> = t.iter().map(|s| (s - tmin) as usize).collect();
                    for (m, slot) in acc.sums.iter_mut().enumerate() {
                        let Some(slot) = slot else { continue };
                        buf.clear();
                        buf.push(Complex64::new(1.0, 0.0));
                        for (k, &row) in rows.iter().enumerate() {
                            if m & (1 << k) == 0 {
                                continue;
                            }
                            let prev = std::mem::take(&mut buf);
                            buf.reserve(prev.len() * p);
                            for a in &prev {
                                for i in 0..p {
                                    buf.push(a * series[(row, i)]);
                                }
                            }
                        }
                        slot.iter_mut().zip(&buf).for_each(|(s, v)| *s += v);
                        if m == (1 << t.len()) - 1 {
                            acc.sumsq.iter_mut().zip(&buf).for_each(|(s, v)| *s += v.norm_sqr());
                        }
                    }
                    acc.count += 1;
                }
            }
            Ok(accs)
        })
        .collect()
}

/// Sum over set partitions of the positions in `full` of products of
/// `block(mask)` tensors, permuted back into increasing position order.
/// Partitions with singleton blocks are skipped (mean zero).
fn partition_sum(
    grid: &Arc<Grid>,
    full: usize,
    block: &dyn Fn(usize) -> Result<GridTensor>,
    alternating: bool,
    include_whole: bool,
) -> Result<GridTensor> {
    let positions: Vec<usize> = (0..usize::BITS as usize).filter(|k| full & (1 << k) != 0).collect();
    let n = positions.len();
    let mut total = GridTensor::zeros(grid, n);
    for part in set_partitions(n) {
        if part.iter().any(|b| b.len() == 1) || (!include_whole && part.len() == 1) {
            continue;
        }
        let coef = if alternating { partition_coefficient(part.len()) } else { 1.0 };
        let mut order = Vec::with_capacity(n);
        let mut prod: Option<GridTensor> = None;
        for b in &part {
            let m = b.iter().fold(0, |acc, &i| acc | (1 << positions[i]));
            let t = block(m)?;
            prod = Some(match prod {
                None => t,
                Some(acc) => GridTensor::outer_pair(&acc, &t)?,
            });
            order.extend_from_slice(b);
        }
        let prod = prod.expect("partition has blocks").permute(&invert_perm(&order))?;
        total = total.add(&prod.scale(coef))?;
    }
    Ok(total)
}

/// Cumulant on the positions of `full` from a moment oracle.
fn cumulant_from(grid: &Arc<Grid>, full: usize, moment: &dyn Fn(usize) -> Result<GridTensor>) -> Result<GridTensor> {
    if full.count_ones() == 1 {
        return moment(full);
    }
    partition_sum(grid, full, moment, true, true)
}

fn finish(grid: &Arc<Grid>, times: &[i64], batches: &[Accum]) -> Result<CumulantEstimate> {
    let n = times.len();
    let full = (1usize << n) - 1;
    let mut total = Accum::new(n, grid.len());
    for b in batches {
        total.add(b);
    }
    let r = total.count;
    let moment = |m: usize| total.mean(grid, m);
    let cum = cumulant_from(grid, full, &moment)?;
    let reconstruction = if n == 1 {
        GridTensor::zeros(grid, 1)
    } else {
        partition_sum(grid, full, &|m| cumulant_from(grid, m, &moment), false, false)?
    };

    let batch_cums: Vec<GridTensor> =
        batches.iter().map(|b| cumulant_from(grid, full, &|m| b.mean(grid, m))).collect::<Result<_>>()?;
    let nb = batch_cums.len() as f64;
    let len = cum.data().len();
    let mut se = vec![Complex64::new(0.0, 0.0); len];
    for (k, slot) in se.iter_mut().enumerate() {
        let mean: Complex64 = batch_cums.iter().map(|c| c.data()[k]).sum::<Complex64>() / nb;
        let var = batch_cums.iter().map(|c| (c.data()[k] - mean).norm_sqr()).sum::<f64>() / (nb - 1.0);
        *slot = Complex64::new((var / nb).sqrt(), 0.0);
    }
    let se = GridTensor::new(grid.clone(), n, se)?;

    let mtensor = moment(full)?;
    let rf = r as f64;
    let mse: Vec<Complex64> = mtensor
        .data()
        .iter()
        .zip(&total.sumsq)
        .map(|(m, s)| {
            let var = ((s / rf - m.norm_sqr()) * rf / (rf - 1.0)).max(0.0);
            Complex64::new((var / rf).sqrt(), 0.0)
        })
        .collect();

    Ok(CumulantEstimate {
        moment: MomentTensor {
            times: times.to_vec(),
            tensor: mtensor,
            se: GridTensor::new(grid.clone(), n, mse)?,
            replicates: r,
        },
        cumulant: CumTensor {
            order: n,
            times: times.to_vec(),
            tensor: cum,
            se_hs: se.hs_norm(),
            se,
            replicates: r,
            batches: batches.len(),
        },
        reconstruction,
    })
}

/// Moments, cumulants and reconstructions for several time tuples on common
/// paths. Results are independent of the thread count.
pub fn cumulant_batch(model: &ProcessModel, tuples: &[Vec<i64>], replicates: usize, seed: u64) -> Result<Vec<CumulantEstimate>> {
    let accs = accumulate(model, tuples, replicates, seed)?;
    let grid = model.grid();
    tuples
        .par_iter()
        .enumerate()
        .map(|(i, t)| {
            let per_batch: Vec<Accum> = accs.iter().map(|b| b[i].clone()).collect();
            finish(grid, t, &per_batch)
        })
        .collect()
}

fn times_from_lags(lags: &[i64]) -> Vec<i64> {
    lags.iter().copied().chain(std::iter::once(0)).collect()
}

/// `E[X_{t_1} ⊗ … ⊗ X_{t_{n−1}} ⊗ X_0]` for lags `(t_1, …, t_{n−1})`.
pub fn moment_tensor(model: &ProcessModel, lags: &[i64], replicates: usize, seed: u64) -> Result<MomentTensor> {
    Ok(cumulant_batch(model, &[times_from_lags(lags)], replicates, seed)?.remove(0).moment)
}

/// `cum(X_{t_1}, …, X_{t_{n−1}}, X_0)` for lags `(t_1, …, t_{n−1})`.
pub fn cumulant(model: &ProcessModel, lags: &[i64], replicates: usize, seed: u64) -> Result<CumTensor> {
    cumulant_at(model, &times_from_lags(lags), replicates, seed)
}

/// Cumulant at explicit times.
pub fn cumulant_at(model: &ProcessModel, times: &[i64], replicates: usize, seed: u64) -> Result<CumTensor> {
    Ok(cumulant_batch(model, &[times.to_vec()], replicates, seed)?.remove(0).cumulant)
}

/// Pair-partition (Isserlis) fourth moment from the closed-form covariance:
/// `Σ_{pairings} Π C_{t_a − t_b}` with each pair's kernel on its two axes.
pub fn isserlis_moment(model: &ProcessModel, times: &[i64]) -> Result<GridTensor> {
    let n = times.len();
    if n % 2 == 1 || n == 0 || n > MAX_ORDER {
        return Err(Error::InvalidArgument(format!("pairings need an even order up to {MAX_ORDER}, got {n}")));
    }
    let grid = model.grid();
    let full = (1usize << n) - 1;
    let pair = |m: usize| -> Result<GridTensor> {
        let idx: Vec<usize> = (0..n).filter(|k| m & (1 << k) != 0).collect();
        if idx.len() != 2 {
            return Ok(GridTensor::zeros(grid, idx.len()));
        }
        // E[X_a(x) X_b(y)] = C_{t_a − t_b}(x, y) for real processes.
        Ok(GridTensor::from_operator(&true_cov(model, times[idx[0]] - times[idx[1]])?))
    };
    partition_sum(grid, full, &pair, false, true)
}

/// Entrywise agreement of the Monte Carlo moment with a reference tensor.
#[derive(Debug, Clone, Serialize)]
pub struct EntrywiseReport {
    pub times: Vec<i64>,
    pub entries: usize,
    pub max_abs_diff: f64,
    /// Largest `|m̂ − m| / se` over entries.
    pub max_z: f64,
    /// Share of entries with `|z| > 3`.
    pub frac_beyond_3se: f64,
    pub z_bound: f64,
    pub pass: bool,
}

fn entrywise(times: &[i64], est: &GridTensor, reference: &GridTensor, se: &GridTensor, z_bound: f64) -> EntrywiseReport {
    let mut max_abs: f64 = 0.0;
    let mut max_z: f64 = 0.0;
    let mut beyond = 0usize;
    for ((a, b), s) in est.data().iter().zip(reference.data()).zip(se.data()) {
        let d = (a - b).norm();
        max_abs = max_abs.max(d);
        let z = if s.re > 0.0 { d / s.re } else if d > 1e-12 { f64::INFINITY } else { 0.0 };
        max_z = max_z.max(z);
        if z > 3.0 {
            beyond += 1;
        }
    }
    let entries = est.data().len();
    EntrywiseReport {
        times: times.to_vec(),
        entries,
        max_abs_diff: max_abs,
        max_z,
        frac_beyond_3se: beyond as f64 / entries as f64,
        z_bound,
        pass: max_z <= z_bound,
    }
}

/// Largest z-score accepted in the Isserlis comparison. With a few thousand
/// correlated entries, 3 would flag noise; 4.5 keeps the family-wise false
/// alarm rate small.
pub const ISSERLIS_Z: f64 = 4.5;

/// Raw fourth moment against the pair-partition products of the true
/// covariance (Gaussian linear models).
pub fn isserlis_check(model: &ProcessModel, lags: &[i64], replicates: usize, seed: u64) -> Result<(EntrywiseReport, CumTensor)> {
    let times = times_from_lags(lags);
    let reference = isserlis_moment(model, &times)?;
    let est = cumulant_batch(model, std::slice::from_ref(&times), replicates, seed)?.remove(0);
    let report = entrywise(&times, &est.moment.tensor, &reference, &est.moment.se, ISSERLIS_Z);
    Ok((report, est.cumulant))
}

/// Moment versus cumulant plus cumulant-product reconstruction.
pub fn cumcov_check(est: &CumulantEstimate) -> Result<EntrywiseReport> {
    let rebuilt = est.cumulant.tensor.add(&est.reconstruction)?;
    let mut r = entrywise(&est.moment.times, &est.moment.tensor, &rebuilt, &est.moment.se, 3.0);
    // exact identity up to rounding; the z-score only guards degenerate se
    r.pass = r.max_z <= 3.0 || r.max_abs_diff <= 1e-10 * est.moment.tensor.max_abs().max(1.0);
    Ok(r)
}

/// Sort and shift so the smallest time is zero. The HS norm of a cumulant
/// is invariant under axis permutation and, by stationarity, translation.
fn canonical(times: &[i64]) -> Vec<i64> {
    let mut t = times.to_vec();
    t.sort_unstable();
    let m = t[0];
    t.iter_mut().for_each(|x| *x -= m);
    t
}

/// One radius of the summability ladder.
#[derive(Debug, Clone, Serialize)]
pub struct SummabilityRow {
    pub radius: usize,
    /// `Σ_{|t_i| ≤ L} ‖cum(X_{t_1}, …, X_{t_{n−1}}, X_0)‖`.
    pub partial_sum: f64,
    /// Contribution of the shell added at this radius.
    pub increment: f64,
    /// Sum of HS standard errors over the shell.
    pub shell_noise: f64,
    /// Closed form for second-order sums of linear models.
    pub exact: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SummabilityReport {
    pub model: String,
    pub order: usize,
    pub replicates: usize,
    pub distinct_tuples: usize,
    pub rows: Vec<SummabilityRow>,
}

impl SummabilityReport {
    /// Last increment within `k` shell noise units.
    pub fn converged(&self, k: f64) -> bool {
        self.rows.last().is_some_and(|r| r.increment <= k * r.shell_noise)
    }
}

fn lag_box(dim: usize, radius: i64) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|v| (-radius..=radius).map(move |x| [v.clone(), vec![x]].concat()))
            .collect();
    }
    out
}

/// Partial sums of cumulant HS norms over growing lag boxes.
pub fn cumulant_summability(
    model: &ProcessModel,
    order: usize,
    radii: &[usize],
    replicates: usize,
    seed: u64,
) -> Result<SummabilityReport> {
    if !(2..=3).contains(&order) {
        return Err(Error::InvalidArgument(format!(
            "summability is computed for orders 2 and 3 (got {order}); order 4 is too costly"
        )));
    }
    if radii.is_empty() || radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("radii must be non-empty and strictly increasing".into()));
    }
    let big = *radii.last().expect("non-empty") as i64;
    let mut keys: BTreeMap<Vec<i64>, usize> = BTreeMap::new();
    for lags in lag_box(order - 1, big) {
        let k = canonical(&times_from_lags(&lags));
        let next = keys.len();
        keys.entry(k).or_insert(next);
    }
    let mut tuples = vec![vec![]; keys.len()];
    for (k, &i) in &keys {
        tuples[i] = k.clone();
    }
    let est = cumulant_batch(model, &tuples, replicates, seed)?;
    let norms: Vec<(f64, f64)> = est.iter().map(|e| (e.cumulant.hs_norm(), e.cumulant.se_hs)).collect();

    let exact_norm = |h: i64| -> Option<f64> { true_cov(model, h).ok().map(|c| c.hs_norm()) };
    let mut rows = Vec::with_capacity(radii.len());
    let mut prev: Option<i64> = None;
    let mut running = 0.0;
    for &radius in radii {
        let l = radius as i64;
        let mut inc = 0.0;
        let mut noise = 0.0;
        for lags in lag_box(order - 1, l) {
            let inner = prev.is_some_and(|p| lags.iter().all(|x| x.abs() <= p));
            if inner {
                continue;
            }
            let (v, s) = norms[keys[&canonical(&times_from_lags(&lags))]];
            inc += v;
            noise += s;
        }
        running += inc;
        let exact = if order == 2 && model.is_linear() {
            (-l..=l).map(exact_norm).sum::<Option<f64>>()
        } else {
            None
        };
        rows.push(SummabilityRow { radius, partial_sum: running, increment: inc, shell_noise: noise, exact });
        prev = Some(l);
    }
    Ok(SummabilityReport {
        model: model.name().into(),
        order,
        replicates,
        distinct_tuples: tuples.len(),
        rows,
    })
}

/// Weighted dependence-coefficient sums against their single-lag bound.
#[derive(Debug, Clone, Serialize)]
pub struct SufconReport {
    pub model: String,
    pub k: usize,
    pub j_max: usize,
    pub p: u32,
    pub replicates: usize,
    /// `Σ ν̂(j_1, …, j_k)` over `0 ≤ j_1 < … < j_k ≤ J`.
    pub lhs: f64,
    pub lhs_se: f64,
    /// `2^{k−1} Σ_{j ≤ J} j^{k−1} ν̂(j)`.
    pub rhs: f64,
    pub rhs_se: f64,
    pub diff: f64,
    pub diff_se: f64,
    /// `lhs ≤ rhs + 3 se`; for `k = 1`, `|lhs − rhs| ≤ 3 se`.
    pub pass: bool,
    /// `lhs < rhs − 3 se`.
    pub strict: bool,
}

fn increasing_tuples(k: usize, j_max: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    fn rec(start: usize, k: usize, j_max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for j in start..=j_max {
            cur.push(j);
            rec(j + 1, k, j_max, cur, out);
            cur.pop();
        }
    }
    rec(0, k, j_max, &mut Vec::new(), &mut out);
    out
}

/// Compare the generalised coefficients with the weighted single-lag sum.
/// Tuples have distinct, increasing lags; a repeated lag reduces to the
/// single-lag coefficient and is not part of the multi-lag sum.
pub fn sufcon_bound_check(model: &ProcessModel, k: usize, j_max: usize, p: u32, replicates: usize, seed: u64) -> Result<SufconReport> {
    if !(1..=2).contains(&k) {
        return Err(Error::InvalidArgument(format!("k = {k}; supported values are 1 and 2")));
    }
    let singles: Vec<Vec<usize>> = (0..=j_max).map(|j| vec![j]).collect();
    let multi = increasing_tuples(k, j_max);
    let n_multi = multi.len();
    let tuples: Vec<Vec<usize>> = multi.into_iter().chain(singles).collect();
    let batch = nu_batch(model, &tuples, p, replicates, seed)?;
    let mut lhs_c = vec![0.0; tuples.len()];
    let mut rhs_c = vec![0.0; tuples.len()];
    lhs_c[..n_multi].iter_mut().for_each(|c| *c = 1.0);
    for j in 0..=j_max {
        rhs_c[n_multi + j] = 2f64.powi(k as i32 - 1) * (j as f64).powi(k as i32 - 1);
    }
    let diff_c: Vec<f64> = lhs_c.iter().zip(&rhs_c).map(|(a, b)| a - b).collect();
    let (lhs, lhs_se) = batch.combination(&lhs_c);
    let (rhs, rhs_se) = batch.combination(&rhs_c);
    let (diff, diff_se) = batch.combination(&diff_c);
    let tol = 3.0 * diff_se + 1e-12;
    let pass = if k == 1 { diff.abs() <= tol } else { diff <= tol };
    Ok(SufconReport {
        model: model.name().into(),
        k,
        j_max,
        p,
        replicates,
        lhs,
        lhs_se,
        rhs,
        rhs_se,
        diff,
        diff_se,
        pass,
        strict: diff < -tol,
    })
}

/// `ν(j_1, …, j_n) ≤ 2 min` over the drop-one sub-tuples.
#[derive(Debug, Clone, Serialize)]
pub struct MinboundReport {
    pub tuple: Vec<usize>,
    pub p: u32,
    pub nu: f64,
    pub nu_se: f64,
    pub sub_tuples: Vec<Vec<usize>>,
    pub sub_nu: Vec<f64>,
    pub bound: f64,
    pub diff: f64,
    pub diff_se: f64,
    /// The tuple repeats a lag, so the bound reduces to `ν ≤ 2ν`.
    pub duplicate_lags: bool,
    pub pass: bool,
}

pub fn minbound_check(model: &ProcessModel, tuple: &[usize], p: u32, replicates: usize, seed: u64) -> Result<MinboundReport> {
    if !(2..=3).contains(&tuple.len()) {
        return Err(Error::InvalidArgument(format!("tuple of length {}; 2 or 3 lags are supported", tuple.len())));
    }
    let subs: Vec<Vec<usize>> = (0..tuple.len())
        .map(|i| tuple.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, v)| *v).collect())
        .collect();
    let tuples: Vec<Vec<usize>> = std::iter::once(tuple.to_vec()).chain(subs.iter().cloned()).collect();
    let batch = nu_batch(model, &tuples, p, replicates, seed)?;
    let own = batch.estimate(0);
    let sub_nu: Vec<f64> = (1..tuples.len()).map(|i| batch.estimate(i).estimate).collect();
    let (imin, &min) = sub_nu
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("at least one sub-tuple");
    let mut coeffs = vec![0.0; tuples.len()];
    coeffs[0] = 1.0;
    coeffs[imin + 1] = -2.0;
    let (diff, diff_se) = batch.combination(&coeffs);
    let mut sorted = tuple.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    Ok(MinboundReport {
        tuple: tuple.to_vec(),
        p,
        nu: own.estimate,
        nu_se: own.se,
        sub_tuples: subs,
        sub_nu,
        bound: 2.0 * min,
        diff,
        diff_se,
        duplicate_lags: sorted.len() < tuple.len(),
        pass: diff <= 3.0 * diff_se + 1e-12,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::processes::{ModelSpec, NoiseDistribution};

    fn preset(name: &str) -> ProcessModel {
        ModelSpec::preset(name).unwrap().build(std::path::Path::new(".")).unwrap()
    }

    #[test]
    fn order_two_cumulant_is_the_moment() {
        let m = preset("far1-small");
        let est = cumulant_batch(&m, &[vec![1, 0]], 400, 3).unwrap().remove(0);
        assert!(est.cumulant.tensor.sub(&est.moment.tensor).unwrap().max_abs() < 1e-14);
        assert!(est.reconstruction.max_abs() == 0.0);
    }

    #[test]
    fn far1_lag_one_moment_tracks_true_cov() {
        let m = preset("far1-small");
        let mt = moment_tensor(&m, &[1], 4000, 11).unwrap();
        let truth = GridTensor::from_operator(&true_cov(&m, 1).unwrap());
        let r = entrywise(&mt.times, &mt.tensor, &truth, &mt.se, 4.5);
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn first_moment_near_zero_and_white_cross_moment_near_zero() {
        let m = preset("white");
        let est = cumulant_batch(&m, &[vec![0], vec![2, 0]], 2000, 5).unwrap();
        for e in &est {
            let zero = GridTensor::zeros(m.grid(), e.moment.times.len());
            let r = entrywise(&e.moment.times, &e.moment.tensor, &zero, &e.moment.se, 4.5);
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn permutation_oracle_against_direct_sum() {
        // order-three cumulant of a zero-mean model is the third moment
        let m = preset("bilinear1");
        let est = cumulant_batch(&m, &[vec![1, 0, 1]], 200, 9).unwrap().remove(0);
        assert!(est.cumulant.tensor.sub(&est.moment.tensor).unwrap().max_abs() < 1e-14);
        // order four on a scalar model: cum = m4 − 3 m2², by hand
        let s = ProcessModel::scalar_ar1(0.4, 1.0, NoiseDistribution::Gaussian).unwrap();
        let e = cumulant_batch(&s, &[vec![0, 0, 0, 0]], 400, 2).unwrap().remove(0);
        let mut m2 = 0.0;
        let mut m4 = 0.0;
        for r in 0..400u64 {
            let x = simulate_replicate(&s, 1, 2, r, None).unwrap().series()[(0, 0)].re;
            m2 += x * x / 400.0;
            m4 += x.powi(4) / 400.0;
        }
        assert!((e.moment.tensor.data()[0].re - m4).abs() < 1e-10);
        assert!((e.cumulant.tensor.data()[0].re - (m4 - 3.0 * m2 * m2)).abs() < 1e-10);
    }

    #[test]
    fn mixed_blocks_are_permuted_into_place() {
        // scalar paths make every axis length one, so use P = 8 and compare
        // the (02)(13) pairing term with an explicit index formula
        let m = preset("bilinear1");
        let times = vec![0, 1, 0, 1];
        let pairs_idx = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        let mut tuples = vec![times.clone()];
        tuples.extend(pairs_idx.iter().map(|&(a, b)| vec![times[a], times[b]]));
        let all = cumulant_batch(&m, &tuples, 200, 4).unwrap();
        let est = &all[0];
        let c = |q: usize, i: usize, j: usize| all[q + 1].moment.tensor.get(&[i, j]);
        let (c01, c02, c03, c12, c13, c23) = (
            |i, j| c(0, i, j),
            |i, j| c(1, i, j),
            |i, j| c(2, i, j),
            |i, j| c(3, i, j),
            |i, j| c(4, i, j),
            |i, j| c(5, i, j),
        );
        for (i, j, k, l) in [(0, 1, 2, 3), (3, 1, 4, 0), (7, 2, 2, 5)] {
            let pairs = c01(i, j) * c23(k, l) + c02(i, k) * c13(j, l) + c03(i, l) * c12(j, k);
            let direct = est.moment.tensor.get(&[i, j, k, l]) - pairs;
            let got = est.cumulant.tensor.get(&[i, j, k, l]);
            assert!((got - direct).norm() < 1e-12, "{got} vs {direct}");
        }
    }

    #[test]
    fn gaussian_third_cumulant_vanishes() {
        let m = preset("far1-small");
        let c = cumulant(&m, &[1, 0], 4000, 8).unwrap();
        assert!(c.within_noise(3.0), "{} vs {}", c.hs_norm(), c.se_hs);
    }

    #[test]
    fn isserlis_on_small_grid() {
        let spec = ModelSpec { grid: 4, ..ModelSpec::preset("far1-small").unwrap() };
        let m = spec.build(std::path::Path::new(".")).unwrap();
        let (r, cum) = isserlis_check(&m, &[0, 0, 0], 4000, 21).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(cum.within_noise(3.0), "{} vs {}", cum.hs_norm(), cum.se_hs);
    }

    #[test]
    fn isserlis_oracle_scalar() {
        let s = ProcessModel::scalar_ar1(0.5, 1.0, NoiseDistribution::Gaussian).unwrap();
        let c0 = 1.0 / (1.0 - 0.25);
        let t = isserlis_moment(&s, &[0, 0, 0, 0]).unwrap();
        assert!((t.data()[0].re - 3.0 * c0 * c0).abs() < 1e-9);
        let t = isserlis_moment(&s, &[1, 0, 0, 0]).unwrap();
        assert!((t.data()[0].re - 3.0 * 0.5 * c0 * c0).abs() < 1e-9);
        assert!(isserlis_moment(&s, &[0, 0, 0]).is_err());
    }

    #[test]
    fn reconstruction_identity_bilinear() {
        let m = preset("bilinear1");
        let est = cumulant_batch(&m, &[vec![1, 0, 0], vec![0, 1, 0, 1]], 400, 6).unwrap();
        for e in &est {
            let r = cumcov_check(e).unwrap();
            assert!(r.pass && r.max_abs_diff < 1e-12, "{r:?}");
        }
    }

    #[test]
    fn translation_invariance() {
        let m = preset("bilinear1");
        let est = cumulant_batch(&m, &[vec![0, 1, 1], vec![3, 4, 4]], 4000, 12).unwrap();
        let d = est[0].cumulant.tensor.sub(&est[1].cumulant.tensor).unwrap();
        let se = (est[0].cumulant.se_hs.powi(2) + est[1].cumulant.se_hs.powi(2)).sqrt();
        assert!(d.hs_norm() <= 3.0 * se, "{} vs {se}", d.hs_norm());
        assert!(est[0].cumulant.hs_norm() > 3.0 * est[0].cumulant.se_hs);
    }

    #[test]
    fn order_four_guard() {
        let m = preset("far1");
        assert!(cumulant(&m, &[0, 0, 0], 100, 1).is_err());
        assert!(cumulant(&m, &[0, 0], 100, 1).is_ok());
        assert!(cumulant(&m, &[0, 0], 10, 1).is_err());
    }

    #[test]
    fn canonical_keys() {
        assert_eq!(canonical(&[3, -1, 0]), vec![0, 1, 4]);
        assert_eq!(lag_box(2, 1).len(), 9);
        assert_eq!(increasing_tuples(2, 3).len(), 6);
    }

    #[test]
    fn summability_white_and_far1() {
        let w = preset("white");
        let r = cumulant_summability(&w, 2, &[0, 1, 2], 2000, 1).unwrap();
        let r0 = &r.rows[0];
        assert!((r0.partial_sum - r0.exact.unwrap()).abs() <= 3.0 * r0.shell_noise + 0.02);
        assert!(r.rows[1].increment <= 3.0 * r.rows[1].shell_noise);

        let s = ProcessModel::scalar_ar1(0.5, 1.0, NoiseDistribution::Gaussian).unwrap();
        let r = cumulant_summability(&s, 2, &[0, 2, 4], 20000, 2).unwrap();
        // geometric series: C_h = (4/3) 0.5^|h|
        let closed = |l: i32| (4.0 / 3.0) * (1.0 + 2.0 * (1..=l).map(|h| 0.5f64.powi(h)).sum::<f64>());
        for (row, l) in r.rows.iter().zip([0, 2, 4]) {
            assert!((row.exact.unwrap() - closed(l)).abs() < 1e-9);
            let noise: f64 = r.rows.iter().take_while(|x| x.radius <= row.radius).map(|x| x.shell_noise).sum();
            assert!((row.partial_sum - closed(l)).abs() <= 3.0 * noise, "{row:?}");
        }
        assert!(cumulant_summability(&s, 4, &[1], 100, 1).is_err());
    }

    #[test]
    fn sufcon_equality_and_linear_zero() {
        let m = preset("far1-small");
        let r1 = sufcon_bound_check(&m, 1, 3, 4, 400, 1).unwrap();
        assert!(r1.pass && r1.diff.abs() < 1e-12);
        let r2 = sufcon_bound_check(&m, 2, 3, 4, 400, 1).unwrap();
        assert!(r2.pass && r2.lhs.abs() < 1e-12 && r2.rhs > 0.0);
        assert!(sufcon_bound_check(&m, 3, 3, 4, 400, 1).is_err());
    }

    #[test]
    fn sufcon_bilinear_strict() {
        let m = preset("bilinear1");
        let r = sufcon_bound_check(&m, 2, 3, 4, 2000, 5).unwrap();
        assert!(r.pass && r.strict && r.lhs > 0.0, "{r:?}");
    }

    #[test]
    fn minbound_cases() {
        let b = preset("bilinear1");
        let r = minbound_check(&b, &[0, 1], 2, 2000, 3).unwrap();
        assert!(r.pass && r.nu > 0.0, "{r:?}");
        let r = minbound_check(&b, &[1, 1], 2, 500, 3).unwrap();
        assert!(r.duplicate_lags && r.pass);
        let l = preset("far1-small");
        let r = minbound_check(&l, &[0, 2], 2, 200, 3).unwrap();
        assert!(r.nu.abs() < 1e-12 && r.pass);
        assert!(minbound_check(&l, &[1], 2, 200, 3).is_err());
    }
}
