//! Trust-region lifecycle: anisotropic side lengths, success/failure
//! counters with doubling/halving, termination, and restart.
//!
//! A region is a hyperrectangle centered at its incumbent. Its base side
//! length L doubles after `tau_succ` consecutive successful batches and
//! halves once the failure counter reaches `tau_fail`; both counters reset
//! whenever the size changes. A region whose L falls below `l_min` is
//! terminated and replaced by a fresh one seeded from a new Latin
//! hypercube design.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::candidates::latin_hypercube;
use crate::error::{Error, Result};
use crate::gp::GpModel;
use crate::scalar::{cast, Scalar};

/// Size/counter thresholds of a trust region.
#[derive(Debug, Clone, PartialEq)]
pub struct TrConfig<F: Scalar> {
    /// Consecutive successes before the region doubles.
    pub tau_succ: usize,
    /// Accumulated failures before the region halves.
    pub tau_fail: usize,
    /// Base length below which the region terminates.
    pub l_min: F,
    /// Largest allowed base length.
    pub l_max: F,
    /// Base length of a fresh region.
    pub l_init: F,
}

impl<F: Scalar> TrConfig<F> {
    /// Standard thresholds: `tau_succ = 3`, `tau_fail = ceil(d/q)`,
    /// `l_min = 2^-7`, `l_max = 1.6`, `l_init = 0.8`.
    pub fn standard(dim: usize, batch_size: usize) -> Self {
        TrConfig {
            tau_succ: 3,
            tau_fail: dim.div_ceil(batch_size.max(1)).max(1),
            l_min: cast(2f64.powi(-7)),
            l_max: cast(1.6),
            l_init: cast(0.8),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.tau_succ == 0 || self.tau_fail == 0 {
            return Err(Error::invalid("counter thresholds must be positive"));
        }
        if !(self.l_min > F::zero() && self.l_min < self.l_init && self.l_init <= self.l_max) {
            return Err(Error::invalid("need 0 < l_min < l_init <= l_max"));
        }
        Ok(())
    }
}

/// Lifecycle phase of a region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrStatus {
    Active,
    Terminated,
}

/// One evaluated point owned by a region.
#[derive(Debug, Clone)]
pub struct Observation<F: Scalar> {
    pub point: DVector<F>,
    pub value: F,
}

/// State of a single trust region.
#[derive(Debug, Clone)]
pub struct TrustRegionState<F: Scalar> {
    observations: Vec<Observation<F>>,
    pending_design: Vec<DVector<F>>,
    center_index: Option<usize>,
    incumbent_value: F,
    base_length: F,
    success_count: usize,
    failure_count: usize,
    status: TrStatus,
    generation: usize,
}

/// Rescales the base length into per-dimension side lengths proportional
/// to the lengthscales, normalized so the volume stays `base_length^d`.
pub fn side_lengths<F: Scalar>(base_length: F, lengthscales: &DVector<F>) -> DVector<F> {
    let d = lengthscales.len();
    let log_geo_mean = lengthscales
        .iter()
        .map(|l| l.ln())
        .fold(F::zero(), |a, b| a + b)
        / cast::<F>(d as f64);
    let geo_mean = log_geo_mean.exp();
    lengthscales.map(|l| l * base_length / geo_mean)
}

impl<F: Scalar> TrustRegionState<F> {
    /// Fresh region: base length `l_init`, zeroed counters, and a Latin
    /// hypercube design that stays pending until the orchestrator
    /// evaluates it.
    pub fn restart<R: Rng + ?Sized>(
        config: &TrConfig<F>,
        rng: &mut R,
        init_design_size: usize,
        dim: usize,
        generation: usize,
    ) -> Self {
        assert!(init_design_size >= 1, "initial design needs a point");
        let design = latin_hypercube::<F, R>(init_design_size, dim, rng);
        let pending_design = (0..init_design_size)
            .map(|i| design.row(i).transpose())
            .collect();
        TrustRegionState {
            observations: Vec::new(),
            pending_design,
            center_index: None,
            incumbent_value: F::zero(),
            base_length: config.l_init,
            success_count: 0,
            failure_count: 0,
            status: TrStatus::Active,
            generation,
        }
    }

    pub fn status(&self) -> TrStatus {
        self.status
    }

    pub fn is_active(&self) -> bool {
        self.status == TrStatus::Active
    }

    pub fn base_length(&self) -> F {
        self.base_length
    }

    pub fn success_count(&self) -> usize {
        self.success_count
    }

    pub fn failure_count(&self) -> usize {
        self.failure_count
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn observations(&self) -> &[Observation<F>] {
        &self.observations
    }

    /// Design points still waiting for evaluation.
    pub fn pending_design(&self) -> &[DVector<F>] {
        &self.pending_design
    }

    pub fn take_pending_design(&mut self) -> Vec<DVector<F>> {
        std::mem::take(&mut self.pending_design)
    }

    /// Current center, if the region has any observation.
    pub fn center(&self) -> Option<&DVector<F>> {
        self.center_index.map(|i| &self.observations[i].point)
    }

    /// Incumbent value per the center rule: best raw observation in
    /// noise-free mode, smallest (raw-unit) posterior mean in noisy mode.
    pub fn incumbent_value(&self) -> F {
        self.incumbent_value
    }

    /// Raw observed value of the incumbent point; improvement comparisons
    /// use this even in noisy mode.
    pub fn incumbent_raw(&self) -> F {
        self.center_index
            .map(|i| self.observations[i].value)
            .unwrap_or_else(|| cast(f64::INFINITY))
    }

    /// Appends an evaluated observation to this region.
    pub fn ingest(&mut self, point: DVector<F>, value: F) {
        self.observations.push(Observation { point, value });
    }

    /// Region bounds: the side-length box around the center, intersected
    /// with the unit cube.
    pub fn region_bounds(&self, lengthscales: &DVector<F>) -> Result<(DVector<F>, DVector<F>)> {
        if !self.is_active() {
            return Err(Error::contract("region_bounds on terminated region"));
        }
        let center = self
            .center()
            .ok_or_else(|| Error::contract("region has no center yet"))?;
        let lens = side_lengths(self.base_length, lengthscales);
        let half = cast::<F>(0.5);
        let lower = DVector::from_fn(center.len(), |i, _| {
            (center[i] - lens[i] * half).max(F::zero())
        });
        let upper = DVector::from_fn(center.len(), |i, _| {
            (center[i] + lens[i] * half).min(F::one())
        });
        Ok((lower, upper))
    }

    /// Applies one batch outcome to the counters and the base length.
    ///
    /// A success increments the success counter and clears failures; a
    /// failure clears successes and adds the number of points this region
    /// received, capping at `tau_fail`. Hitting `tau_succ` doubles the
    /// region (up to `l_max`); hitting `tau_fail` halves it; both reset the
    /// counters. If the base length drops below `l_min` the region
    /// terminates.
    pub fn record_batch(
        &mut self,
        improved: bool,
        points_assigned: usize,
        config: &TrConfig<F>,
    ) -> Result<()> {
        if !self.is_active() {
            return Err(Error::contract("record_batch on terminated region"));
        }
        if points_assigned == 0 {
            return Err(Error::contract(
                "record_batch requires at least one assigned point",
            ));
        }
        if improved {
            self.success_count += 1;
            self.failure_count = 0;
        } else {
            self.success_count = 0;
            self.failure_count = (self.failure_count + points_assigned).min(config.tau_fail);
        }
        if self.success_count == config.tau_succ {
            self.base_length = (self.base_length + self.base_length).min(config.l_max);
            self.success_count = 0;
            self.failure_count = 0;
        } else if self.failure_count == config.tau_fail {
            self.base_length *= cast(0.5);
            self.success_count = 0;
            self.failure_count = 0;
        }
        if self.base_length < config.l_min {
            self.status = TrStatus::Terminated;
        }
        Ok(())
    }

    /// Re-derives the center and incumbent from the observations.
    ///
    /// Noise-free mode picks the smallest raw value; noisy mode picks the
    /// observation with the smallest posterior mean under `model` and
    /// stores that mean (in raw units) as the incumbent value. Ties keep
    /// the earliest observation.
    pub fn update_center(&mut self, model: &GpModel<F>, noisy: bool) -> Result<()> {
        if noisy {
            let n = self.observations.len();
            if n == 0 {
                return Err(Error::contract("update_center with no observations"));
            }
            let d = self.observations[0].point.len();
            let points = DMatrix::from_fn(n, d, |i, j| self.observations[i].point[j]);
            let means = model.posterior_mean(&points)?;
            let mut best = 0usize;
            for i in 1..n {
                if means[i] < means[best] {
                    best = i;
                }
            }
            self.center_index = Some(best);
            self.incumbent_value = model.stats().unstandardize(means[best]);
            Ok(())
        } else {
            self.update_center_noise_free()
        }
    }

    /// Center rule without a surrogate: argmin of the raw observations.
    /// Also used as the provisional rule right after initialization.
    pub fn update_center_noise_free(&mut self) -> Result<()> {
        if self.observations.is_empty() {
            return Err(Error::contract("update_center with no observations"));
        }
        let mut best = 0usize;
        for i in 1..self.observations.len() {
            if self.observations[i].value < self.observations[best].value {
                best = i;
            }
        }
        self.center_index = Some(best);
        self.incumbent_value = self.observations[best].value;
        Ok(())
    }
}
