//! Candidate-set construction: quasi-random discretization of a trust
//! region for Thompson sampling, plus Latin hypercube initial designs.

pub mod sobol;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::{cast, Scalar};

pub use sobol::{sobol, SobolSequence};

/// Default candidate-set size for a `d`-dimensional region.
pub fn default_candidate_count(d: usize) -> usize {
    (100 * d).min(5000)
}

/// Probability of taking the quasi-random coordinate instead of the
/// region center's coordinate.
pub fn perturb_probability(d: usize) -> f64 {
    (20.0 / d as f64).min(1.0)
}

/// Discretized search set inside one trust region.
#[derive(Debug, Clone)]
pub struct CandidateSet<F: Scalar> {
    /// Candidate points, one per row, inside the region bounds.
    pub points: DMatrix<F>,
    /// True where the quasi-random value replaced the center coordinate.
    pub perturb_mask: DMatrix<bool>,
}

impl<F: Scalar> CandidateSet<F> {
    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }
}

/// Latin hypercube design: `n` points in `[0, 1]^d` with exactly one point
/// in each of the `n` equal bins per dimension.
pub fn latin_hypercube<F: Scalar, R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> DMatrix<F> {
    assert!(n >= 1, "latin hypercube needs at least one point");
    let mut out = DMatrix::zeros(n, d);
    let inv_n = cast::<F>(1.0 / n as f64);
    let mut bins: Vec<usize> = (0..n).collect();
    for j in 0..d {
        bins.shuffle(rng);
        for i in 0..n {
            let jitter = F::unit_uniform(rng);
            out[(i, j)] = (cast::<F>(bins[i] as f64) + jitter) * inv_n;
        }
    }
    out
}

/// Builds a fresh candidate set for one trust region.
///
/// `r` scrambled Sobol points are mapped affinely into the region bounds;
/// each coordinate then keeps its quasi-random value with probability
/// `min(1, 20/d)` and otherwise copies the center. A row that ends up with
/// no perturbed coordinate would duplicate the center exactly, so one
/// uniformly chosen coordinate is forced back to its quasi-random value.
pub fn generate<F: Scalar, R: Rng + ?Sized>(
    lower: &DVector<F>,
    upper: &DVector<F>,
    center: &DVector<F>,
    r: usize,
    rng: &mut R,
) -> Result<CandidateSet<F>> {
    let d = center.len();
    if lower.len() != d || upper.len() != d {
        return Err(Error::invalid("bounds dimension mismatch"));
    }
    if r == 0 {
        return Err(Error::invalid("candidate count must be positive"));
    }
    for i in 0..d {
        if !(lower[i] <= center[i] && center[i] <= upper[i]) {
            return Err(Error::invalid("center outside region bounds"));
        }
    }

    let seed: u64 = rng.random();
    let mut quasi = sobol::sobol::<F>(r, d, seed)?;
    for j in 0..d {
        let lo = lower[j];
        let width = upper[j] - lower[j];
        for v in quasi.column_mut(j).iter_mut() {
            *v = lo + *v * width;
        }
    }

    let p = perturb_probability(d);
    perturb_toward_center(quasi, center, p, rng)
}

/// Applies the per-coordinate keep-or-copy rule and repairs rows that lost
/// every perturbation.
fn perturb_toward_center<F: Scalar, R: Rng + ?Sized>(
    quasi: DMatrix<F>,
    center: &DVector<F>,
    p: f64,
    rng: &mut R,
) -> Result<CandidateSet<F>> {
    let (r, d) = quasi.shape();
    let mut points = quasi.clone();
    let mut mask = DMatrix::from_element(r, d, true);
    if p < 1.0 {
        for i in 0..r {
            let mut kept = 0usize;
            for j in 0..d {
                if rng.random_bool(p) {
                    kept += 1;
                } else {
                    points[(i, j)] = center[j];
                    mask[(i, j)] = false;
                }
            }
            if kept == 0 {
                let j = rng.random_range(0..d);
                points[(i, j)] = quasi[(i, j)];
                mask[(i, j)] = true;
            }
        }
    }
    Ok(CandidateSet {
        points,
        perturb_mask: mask,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    #[test]
    fn candidate_count_and_probability_defaults() {
        assert_eq!(default_candidate_count(10), 1000);
        assert_eq!(default_candidate_count(200), 5000);
        assert_eq!(perturb_probability(10), 1.0);
        assert!((perturb_probability(200) - 0.1).abs() < 1e-15);
        assert!((perturb_probability(60) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn latin_hypercube_single_point() {
        let mut rng = StdRng::seed_from_u64(0);
        let x = latin_hypercube::<f64, _>(1, 3, &mut rng);
        assert!(x.iter().all(|&v| (0.0..1.0).contains(&v)));
    }

    #[test]
    fn latin_hypercube_fills_every_bin_once() {
        let mut rng = StdRng::seed_from_u64(1);
        let n = 20;
        let x = latin_hypercube::<f64, _>(n, 10, &mut rng);
        for j in 0..10 {
            let mut bins = vec![0usize; n];
            for i in 0..n {
                bins[(x[(i, j)] * n as f64) as usize] += 1;
            }
            assert!(bins.iter().all(|&c| c == 1), "dim {j}: {bins:?}");
        }
    }

    #[test]
    fn latin_hypercube_sorted_coordinates_hit_their_bins() {
        let mut rng = StdRng::seed_from_u64(2);
        let n = 13;
        let x = latin_hypercube::<f64, _>(n, 4, &mut rng);
        for j in 0..4 {
            let mut col: Vec<f64> = x.column(j).iter().copied().collect();
            col.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (i, &v) in col.iter().enumerate() {
                assert!(
                    v >= i as f64 / n as f64 && v < (i + 1) as f64 / n as f64,
                    "dim {j} rank {i}: {v}"
                );
            }
        }
    }

    #[test]
    fn generate_low_dim_perturbs_everything() {
        let mut rng = StdRng::seed_from_u64(3);
        let d = 10;
        let lower = DVector::from_element(d, 0.2);
        let upper = DVector::from_element(d, 0.8);
        let center = DVector::from_element(d, 0.5);
        let set = generate(&lower, &upper, &center, 64, &mut rng).unwrap();
        assert!(set.perturb_mask.iter().all(|&m| m));
        assert!(set.points.iter().all(|&v| (0.2..=0.8).contains(&v)));
    }

    #[test]
    fn generate_containment_under_random_regions() {
        let mut rng = StdRng::seed_from_u64(4);
        for _ in 0..20 {
            let d = 1 + rng.random_range(0..30);
            let mut lower = DVector::zeros(d);
            let mut upper = DVector::zeros(d);
            let mut center = DVector::zeros(d);
            for j in 0..d {
                let a = f64::unit_uniform(&mut rng);
                let b = f64::unit_uniform(&mut rng);
                lower[j] = a.min(b);
                upper[j] = a.max(b) + 1e-9;
                center[j] = lower[j] + (upper[j] - lower[j]) * f64::unit_uniform(&mut rng);
            }
            let set = generate(&lower, &upper, &center, 50, &mut rng).unwrap();
            for i in 0..set.len() {
                for j in 0..d {
                    let v = set.points[(i, j)];
                    assert!(v >= lower[j] && v <= upper[j]);
                    assert!((0.0..=1.0).contains(&v) || (lower[j] >= 0.0 && upper[j] <= 1.0));
                }
            }
        }
    }

    #[test]
    fn generate_is_deterministic_in_the_rng_stream() {
        let d = 25;
        let lower = DVector::from_element(d, 0.0);
        let upper = DVector::from_element(d, 1.0);
        let center = DVector::from_element(d, 0.4);
        let mut rng_a = StdRng::seed_from_u64(5);
        let mut rng_b = StdRng::seed_from_u64(5);
        let a = generate(&lower, &upper, &center, 40, &mut rng_a).unwrap();
        let b = generate(&lower, &upper, &center, 40, &mut rng_b).unwrap();
        assert_eq!(a.points, b.points);
        assert_eq!(a.perturb_mask, b.perturb_mask);
    }

    #[test]
    fn perturbation_frequency_matches_probability() {
        let mut rng = StdRng::seed_from_u64(6);
        let d = 60;
        let lower = DVector::from_element(d, 0.0);
        let upper = DVector::from_element(d, 1.0);
        let center = DVector::from_element(d, 0.5);
        let rows = 10_000;
        let set = generate(&lower, &upper, &center, rows, &mut rng).unwrap();
        let perturbed = set.perturb_mask.iter().filter(|&&m| m).count();
        let fraction = perturbed as f64 / (rows * d) as f64;
        assert!(
            (fraction - 1.0 / 3.0).abs() < 0.01,
            "perturbed fraction {fraction}"
        );
    }

    #[test]
    fn rows_without_perturbations_are_repaired() {
        // p = 0 forces the repair path on every row: exactly one coordinate
        // must come from the quasi-random matrix.
        let mut rng = StdRng::seed_from_u64(7);
        let d = 8;
        let quasi = DMatrix::from_fn(30, d, |i, j| ((i * d + j) % 97) as f64 / 97.0);
        let center = DVector::from_element(d, 0.25);
        let set = perturb_toward_center(quasi.clone(), &center, 0.0, &mut rng).unwrap();
        for i in 0..30 {
            let kept: Vec<usize> = (0..d).filter(|&j| set.perturb_mask[(i, j)]).collect();
            assert_eq!(kept.len(), 1, "row {i}");
            let j = kept[0];
            assert_eq!(set.points[(i, j)], quasi[(i, j)]);
            for other in (0..d).filter(|&c| c != j) {
                assert_eq!(set.points[(i, other)], 0.25);
            }
        }
    }
}
