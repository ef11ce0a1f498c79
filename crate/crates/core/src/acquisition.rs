//! Batch Thompson sampling across trust regions.
//!
//! For each of the `q` batch slots, one joint realization of the posterior
//! is drawn on every region's candidate set and the candidate with the
//! smallest realized value across all regions wins. Regions standardize
//! their targets independently, so realizations are mapped back to raw
//! objective units before they are compared.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::candidates::CandidateSet;
use crate::error::{Error, Result};
use crate::gp::{GpModel, JointSampler, StandardizationStats};
use crate::scalar::Scalar;

/// Result of one batch selection.
#[derive(Debug, Clone)]
pub struct BatchSelection<F: Scalar> {
    /// Selected points, one per row.
    pub points: DMatrix<F>,
    /// Index (into the caller's region list) owning each point.
    pub tr_assignment: Vec<usize>,
    /// Realized (standardized) value of each winning candidate.
    pub sampled_values: DVector<F>,
}

/// One region's pre-factored sampler plus the statistics needed to map its
/// realizations back to raw units.
pub struct RegionSampler<F: Scalar> {
    pub sampler: JointSampler<F>,
    pub stats: StandardizationStats<F>,
    pub candidates: DMatrix<F>,
}

/// Selects a batch of `q` points across the given regions.
///
/// `models` and `candidate_sets` run in parallel; entry `l` describes one
/// active region. The posterior on each candidate set is factored once and
/// reused for all `q` draws.
pub fn select_batch<F: Scalar, R: Rng + ?Sized>(
    models: &[&GpModel<F>],
    candidate_sets: &[&CandidateSet<F>],
    q: usize,
    rng: &mut R,
) -> Result<BatchSelection<F>> {
    if models.is_empty() {
        return Err(Error::NoActiveRegion);
    }
    if models.len() != candidate_sets.len() {
        return Err(Error::invalid("one candidate set per model required"));
    }
    let mut regions = Vec::with_capacity(models.len());
    for (model, set) in models.iter().zip(candidate_sets) {
        if set.is_empty() {
            return Err(Error::invalid("empty candidate set"));
        }
        let posterior = model.posterior(&set.points)?;
        regions.push(RegionSampler {
            sampler: JointSampler::new(&posterior)?,
            stats: *model.stats(),
            candidates: set.points.clone(),
        });
    }
    select_batch_from_samplers(&regions, q, rng)
}

/// Core selection rule over pre-factored region samplers.
pub fn select_batch_from_samplers<F: Scalar, R: Rng + ?Sized>(
    regions: &[RegionSampler<F>],
    q: usize,
    rng: &mut R,
) -> Result<BatchSelection<F>> {
    if regions.is_empty() {
        return Err(Error::NoActiveRegion);
    }
    if q == 0 {
        return Err(Error::invalid("batch size must be positive"));
    }
    let d = regions[0].candidates.ncols();
    let base: u64 = rng.random();

    let mut points = DMatrix::zeros(q, d);
    let mut tr_assignment = vec![0usize; q];
    let mut sampled_values = DVector::zeros(q);

    for i in 0..q {
        let mut best: Option<(usize, usize, F, F)> = None; // (region, cand, raw, std)
        for (l, region) in regions.iter().enumerate() {
            let mut draw_rng = draw_stream(base, i, l);
            let sample = region.sampler.draw(&mut draw_rng);
            for (j, &value) in sample.iter().enumerate() {
                let raw = region.stats.unstandardize(value);
                if best.as_ref().map(|&(_, _, b, _)| raw < b).unwrap_or(true) {
                    best = Some((l, j, raw, value));
                }
            }
        }
        let (l, j, _, std_value) = best.expect("at least one candidate");
        points.row_mut(i).copy_from(&regions[l].candidates.row(j));
        tr_assignment[i] = l;
        sampled_values[i] = std_value;
    }

    Ok(BatchSelection {
        points,
        tr_assignment,
        sampled_values,
    })
}

/// Deterministic per-(draw, region) random stream.
fn draw_stream(base: u64, draw: usize, region: usize) -> ChaCha8Rng {
    let tag = ((draw as u64) << 32) ^ region as u64;
    ChaCha8Rng::seed_from_u64(splitmix(base ^ splitmix(tag)))
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}
