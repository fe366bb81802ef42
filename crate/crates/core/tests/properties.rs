//! Property checks on estimator symmetries, cumulant tensor layout and the
//! binary array format.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use ftsa::cumulants::cumulant_batch;
use ftsa::estimators::{lag_window_sdo, Centering, EstimationConfig, LagCovariances, Window, WindowKind};
use ftsa::hilbert::io::ArrayRecord;
use ftsa::hilbert::{invert_perm, Grid};
use ftsa::processes::{ModelSpec, SamplePath};

fn series(t_len: usize, p: usize, values: &[f64]) -> SamplePath {
    let m = DMatrix::from_fn(t_len, p, |t, i| Complex64::new(values[(t * p + i) % values.len()], 0.0));
    SamplePath::from_series(Grid::uniform(p).unwrap(), m).unwrap()
}

fn permutation(n: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..n).collect::<Vec<_>>()).prop_shuffle()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn estimate_is_hermitian_and_conjugate_even(
        values in prop::collection::vec(-3.0f64..3.0, 24..96),
        t_len in 8usize..40,
        b in 0.1f64..1.0,
        lambda in 0.0f64..PI,
        kind in prop::sample::select(vec![WindowKind::Bartlett, WindowKind::Parzen]),
    ) {
        let path = series(t_len, 4, &values);
        let window = Window::new(kind);
        let cfg = EstimationConfig::new(window.clone(), b, vec![lambda]).unwrap();
        let plus = lag_window_sdo(&path, &cfg).unwrap().operators[0].kernel().clone();
        let covs = LagCovariances::new(&path, window.max_lag(b, t_len), Centering::KnownZeroMean).unwrap();
        let minus = covs.sdo(&window, b, -lambda).into_kernel();
        let scale = plus.norm().max(1e-12);
        prop_assert!((&plus - plus.adjoint()).norm() <= 1e-12 * scale);
        prop_assert!((&minus - plus.map(|v| v.conj())).norm() <= 1e-12 * scale);
    }

    #[test]
    fn inverse_permutation_round_trips(perm in (1usize..7).prop_flat_map(permutation)) {
        let inv = invert_perm(&perm);
        for (k, &p) in perm.iter().enumerate() {
            prop_assert_eq!(inv[p], k);
        }
        prop_assert_eq!(invert_perm(&inv), perm);
    }

    #[test]
    fn binary_record_round_trips(
        dims in prop::collection::vec(1usize..4, 1..4),
        p in 1usize..5,
        seed in any::<u64>(),
    ) {
        let grid = Grid::uniform(p).unwrap();
        let n: usize = dims.iter().product();
        let data: Vec<Complex64> = (0..n)
            .map(|k| {
                let x = seed.wrapping_mul(6364136223846793005).wrapping_add(k as u64) as f64;
                Complex64::new(x.sin(), (x * 0.5).cos())
            })
            .collect();
        let rec = ArrayRecord::new(dims, grid, data).unwrap();
        let back = ArrayRecord::read_from(&mut rec.to_bytes().as_slice()).unwrap();
        prop_assert_eq!(back, rec);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    // Both time orders are estimated from the same replicate paths, so the
    // tensors agree up to rounding once the axes are permuted.
    #[test]
    fn cumulant_follows_time_permutation(
        times in prop::collection::vec(0i64..3, 3),
        perm in permutation(3),
        seed in 0u64..1000,
    ) {
        let model = ModelSpec::preset("bilinear1").unwrap().build(Path::new(".")).unwrap();
        let permuted: Vec<i64> = perm.iter().map(|&k| times[k]).collect();
        let est = cumulant_batch(&model, &[times.clone(), permuted], 40, seed).unwrap();
        let direct = &est[1].cumulant.tensor;
        let moved = est[0].cumulant.tensor.permute(&perm).unwrap();
        let diff = direct.sub(&moved).unwrap().max_abs();
        prop_assert!(diff <= 1e-10 * (1.0 + direct.max_abs()), "diff {}", diff);
    }
}
