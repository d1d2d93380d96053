use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Tabulated Latin-hypercube offsets (in units of 10⁻³) around (1, 1).
const DATASET_2D_OFFSETS: [[i32; 2]; 10] = [
    [1, 1],
    [9, -3],
    [7, 7],
    [-9, 3],
    [-5, 5],
    [-7, -9],
    [-3, -7],
    [5, 9],
    [3, -1],
    [-1, -5],
];

/// The fixed 10×2 design clustered around the Rosenbrock minimum.
pub fn reference_design_2d() -> DMatrix<f64> {
    DMatrix::from_fn(10, 2, |i, j| 1e-3 * f64::from(DATASET_2D_OFFSETS[i][j]) + 1.0)
}

/// Evaluation points of the one-dimensional demonstration.
pub fn sin_demo_points() -> DMatrix<f64> {
    DMatrix::from_column_slice(4, 1, &[3.5, 4.5, 5.5, 6.5])
}

/// Latin-hypercube design of `n` points inside the box `[lower, upper]`.
///
/// Each column is an independent random permutation of the `n` strata with
/// a uniform jitter inside each stratum, drawn from a ChaCha8 stream seeded
/// by `seed`.
pub fn latin_hypercube(n: usize, lower: &[f64], upper: &[f64], seed: u64) -> Result<DMatrix<f64>> {
    let d = lower.len();
    if n == 0 || d == 0 {
        return Err(Error::InvalidInput(format!("latin hypercube needs n, d >= 1, got n={n}, d={d}")));
    }
    if upper.len() != d {
        return Err(Error::InvalidInput("lower and upper bounds differ in length".into()));
    }
    for (l, u) in lower.iter().zip(upper) {
        if !(l < u) || !l.is_finite() || !u.is_finite() {
            return Err(Error::InvalidInput(format!("bounds must satisfy lower < upper, got [{l}, {u}]")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = DMatrix::zeros(n, d);
    let mut strata: Vec<usize> = (0..n).collect();
    for j in 0..d {
        strata.shuffle(&mut rng);
        let width = (upper[j] - lower[j]) / n as f64;
        for (i, &s) in strata.iter().enumerate() {
            let u: f64 = rng.gen();
            let v = lower[j] + (s as f64 + u) * width;
            // guard against rounding onto the next stratum edge
            out[(i, j)] = v.min(lower[j] + (s as f64 + 1.0) * width).min(upper[j]);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::min_pairwise_distance;

    fn bin_counts(col: &[f64], lo: f64, hi: f64) -> Vec<usize> {
        let n = col.len();
        let mut counts = vec![0; n];
        for &v in col {
            let b = (((v - lo) / (hi - lo)) * n as f64).floor() as usize;
            counts[b.min(n - 1)] += 1;
        }
        counts
    }

    #[test]
    fn dataset_rows_and_bounds() {
        let x = reference_design_2d();
        assert_eq!(x.shape(), (10, 2));
        assert_eq!((x[(0, 0)], x[(0, 1)]), (1.001, 1.001));
        assert!(x.iter().all(|&v| (0.991..=1.009).contains(&v)));
    }

    #[test]
    fn dataset_min_distance() {
        let v = min_pairwise_distance(&reference_design_2d()).unwrap();
        assert!((v - 2f64.sqrt() / 500.0).abs() < 1e-15, "{v}");
        assert!((v - 2.8e-3).abs() < 0.05e-3);
    }

    #[test]
    fn one_dimensional_strata() {
        let x = latin_hypercube(4, &[0.0], &[4.0], 3).unwrap();
        let mut bins: Vec<usize> = x.iter().map(|v| v.floor() as usize).collect();
        bins.sort();
        assert_eq!(bins, vec![0, 1, 2, 3]);
    }

    #[test]
    fn deterministic_for_seed() {
        let a = latin_hypercube(7, &[0.0, -1.0], &[1.0, 1.0], 42).unwrap();
        let b = latin_hypercube(7, &[0.0, -1.0], &[1.0, 1.0], 42).unwrap();
        let c = latin_hypercube(7, &[0.0, -1.0], &[1.0, 1.0], 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn high_dimensional_histogram() {
        let lo = vec![-10.0; 15];
        let hi = vec![10.0; 15];
        let x = latin_hypercube(20, &lo, &hi, 1).unwrap();
        assert!(x.iter().all(|&v| (-10.0..=10.0).contains(&v)));
        for j in 0..15 {
            let col: Vec<f64> = x.column(j).iter().copied().collect();
            assert!(bin_counts(&col, -10.0, 10.0).iter().all(|&c| c == 1));
        }
    }

    #[test]
    fn stratification_over_many_seeds() {
        for seed in 0..50 {
            for (n, d) in [(1, 1), (3, 2), (11, 4), (32, 3)] {
                let lo: Vec<f64> = (0..d).map(|j| -(j as f64) - 0.5).collect();
                let hi: Vec<f64> = (0..d).map(|j| 2.0 * j as f64 + 1.0).collect();
                let x = latin_hypercube(n, &lo, &hi, seed).unwrap();
                for j in 0..d {
                    let col: Vec<f64> = x.column(j).iter().copied().collect();
                    assert!(bin_counts(&col, lo[j], hi[j]).iter().all(|&c| c == 1));
                }
            }
        }
    }

    #[test]
    fn rejects_bad_bounds() {
        assert!(latin_hypercube(3, &[1.0], &[1.0], 0).is_err());
        assert!(latin_hypercube(3, &[2.0], &[1.0], 0).is_err());
        assert!(latin_hypercube(0, &[0.0], &[1.0], 0).is_err());
        assert!(latin_hypercube(3, &[0.0, 0.0], &[1.0], 0).is_err());
    }
}
