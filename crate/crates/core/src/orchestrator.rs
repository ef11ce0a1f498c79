//! The multi-region optimization loop.
//!
//! Each batch: refit every active region's surrogate on its own
//! observations, rebuild candidate sets inside the region bounds, pick the
//! batch by Thompson sampling across regions, evaluate, update counters and
//! centers, and replace any region whose base length fell below the
//! minimum. The loop is exposed both as a closed loop ([`Turbo::run`]) and
//! as an ask/tell pair for externally evaluated objectives.
//!
//! Regions are strictly independent: a surrogate only ever sees the
//! observations its own region produced in its current generation.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::acquisition::select_batch;
use crate::benchmarks::UnitObjective;
use crate::candidates::{default_candidate_count, generate, CandidateSet};
use crate::error::{Error, Result};
use crate::gp::{fit_hyperparameters, GpModel, KernelParams};
use crate::scalar::Scalar;
use crate::trace::RunTrace;
use crate::trust_region::{TrConfig, TrustRegionState};

/// Iterations granted to each surrogate refit (split across the three
/// restarts of the hyperparameter search).
const DEFAULT_FIT_BUDGET: usize = 30;

/// Configuration of one optimization run.
#[derive(Debug, Clone)]
pub struct TurboConfig<F: Scalar> {
    /// Number of simultaneous trust regions (m).
    pub num_regions: usize,
    /// Points proposed per batch (q).
    pub batch_size: usize,
    /// Total evaluation budget, including initial designs.
    pub max_evaluations: usize,
    /// Latin hypercube size evaluated when a region starts or restarts.
    pub init_points_per_region: usize,
    /// Problem dimension; the domain is always the unit cube.
    pub dim: usize,
    /// Region thresholds.
    pub tr_config: TrConfig<F>,
    /// Noisy-objective mode: centers follow posterior means instead of raw
    /// observations.
    pub noisy: bool,
    /// Seed of the run's random stream.
    pub seed: u64,
    /// Iteration budget per surrogate refit.
    pub fit_budget: usize,
    /// Candidate-set size per region; `None` means `min(100 d, 5000)`.
    pub candidate_count: Option<usize>,
}

impl<F: Scalar> TurboConfig<F> {
    pub fn new(
        num_regions: usize,
        batch_size: usize,
        max_evaluations: usize,
        init_points_per_region: usize,
        dim: usize,
        seed: u64,
    ) -> Self {
        TurboConfig {
            num_regions,
            batch_size,
            max_evaluations,
            init_points_per_region,
            dim,
            tr_config: TrConfig::standard(dim, batch_size),
            noisy: false,
            seed,
            fit_budget: DEFAULT_FIT_BUDGET,
            candidate_count: None,
        }
    }

    pub fn with_tr_config(mut self, tr_config: TrConfig<F>) -> Self {
        self.tr_config = tr_config;
        self
    }

    pub fn with_noisy(mut self, noisy: bool) -> Self {
        self.noisy = noisy;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_regions == 0 || self.batch_size == 0 || self.dim == 0 {
            return Err(Error::invalid(
                "regions, batch size, and dim must be positive",
            ));
        }
        if self.init_points_per_region == 0 {
            return Err(Error::invalid("initial design size must be positive"));
        }
        if self.num_regions * self.init_points_per_region >= self.max_evaluations {
            return Err(Error::invalid(
                "evaluation budget must exceed the initial designs",
            ));
        }
        self.tr_config.validate()
    }

    fn candidate_count(&self) -> usize {
        self.candidate_count
            .unwrap_or_else(|| default_candidate_count(self.dim))
    }
}

enum PendingKind {
    /// Initial or restart design for one region slot.
    Design { slot: usize },
    /// Thompson-sampling batch; one owning slot per point.
    Selection { assignment: Vec<usize> },
}

struct PendingBatch<F: Scalar> {
    points: DMatrix<F>,
    kind: PendingKind,
    /// Per-point (slot, base_length at selection, generation).
    meta: Vec<(usize, F, usize)>,
}

/// Optimizer state: regions, their surrogates, the run trace, and the
/// random stream everything draws from.
pub struct Turbo<F: Scalar> {
    config: TurboConfig<F>,
    regions: Vec<TrustRegionState<F>>,
    models: Vec<Option<GpModel<F>>>,
    warm_params: Vec<Option<KernelParams<F>>>,
    rng: ChaCha8Rng,
    trace: RunTrace<F>,
    pending: Option<PendingBatch<F>>,
}

impl<F: Scalar> Turbo<F> {
    /// Creates the optimizer with `m` fresh regions; their initial designs
    /// are evaluated by the first `step`/`ask`.
    pub fn new(config: TurboConfig<F>) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let regions = (0..config.num_regions)
            .map(|_| {
                TrustRegionState::restart(
                    &config.tr_config,
                    &mut rng,
                    config.init_points_per_region,
                    config.dim,
                    0,
                )
            })
            .collect();
        let models = (0..config.num_regions).map(|_| None).collect();
        let warm_params = (0..config.num_regions).map(|_| None).collect();
        Ok(Turbo {
            config,
            regions,
            models,
            warm_params,
            rng,
            trace: RunTrace::new(),
            pending: None,
        })
    }

    pub fn config(&self) -> &TurboConfig<F> {
        &self.config
    }

    pub fn trace(&self) -> &RunTrace<F> {
        &self.trace
    }

    pub fn evaluations(&self) -> usize {
        self.trace.len()
    }

    pub fn is_finished(&self) -> bool {
        self.trace.len() >= self.config.max_evaluations
    }

    /// Read-only view of the region states.
    pub fn regions(&self) -> &[TrustRegionState<F>] {
        &self.regions
    }

    /// Read-only view of the most recent surrogate per region slot.
    pub fn models(&self) -> &[Option<GpModel<F>>] {
        &self.models
    }

    fn remaining_budget(&self) -> usize {
        self.config.max_evaluations - self.trace.len()
    }

    /// Proposes the next batch of points to evaluate.
    ///
    /// While any region still has an unevaluated design, the design (or its
    /// budget-truncated prefix) is returned first, one region per call.
    /// Otherwise every active region's surrogate is refit, candidate sets
    /// are rebuilt, and a Thompson-sampling batch of (at most) `q` points
    /// is returned. Calling `ask` again before `tell` is an error.
    pub fn ask(&mut self) -> Result<DMatrix<F>> {
        if self.pending.is_some() {
            return Err(Error::contract("ask called with an outstanding batch"));
        }
        if self.is_finished() {
            return Err(Error::contract("evaluation budget exhausted"));
        }

        // Pending designs take priority, lowest slot first.
        if let Some(slot) = (0..self.regions.len())
            .find(|&s| self.regions[s].is_active() && !self.regions[s].pending_design().is_empty())
        {
            let design = self.regions[slot].take_pending_design();
            let take = design.len().min(self.remaining_budget());
            let d = self.config.dim;
            let points = DMatrix::from_fn(take, d, |i, j| design[i][j]);
            let base = self.regions[slot].base_length();
            let generation = self.regions[slot].generation();
            let meta = (0..take).map(|_| (slot, base, generation)).collect();
            self.pending = Some(PendingBatch {
                points: points.clone(),
                kind: PendingKind::Design { slot },
                meta,
            });
            return Ok(points);
        }

        // Thompson-sampling batch over all active regions.
        let active: Vec<usize> = (0..self.regions.len())
            .filter(|&s| self.regions[s].is_active())
            .collect();
        if active.is_empty() {
            return Err(Error::NoActiveRegion);
        }

        let mut sets: Vec<CandidateSet<F>> = Vec::with_capacity(active.len());
        for &slot in &active {
            self.refit_region(slot)?;
            let model = self.models[slot].as_ref().expect("model just fitted");
            let lengthscales = model.params().lengthscales.clone();
            self.regions[slot].update_center(model, self.config.noisy)?;
            let (lower, upper) = self.regions[slot].region_bounds(&lengthscales)?;
            let center = self.regions[slot].center().expect("center exists").clone();
            let set = generate(
                &lower,
                &upper,
                &center,
                self.config.candidate_count(),
                &mut self.rng,
            )?;
            sets.push(set);
        }

        let models: Vec<&GpModel<F>> = active
            .iter()
            .map(|&s| self.models[s].as_ref().expect("fitted"))
            .collect();
        let set_refs: Vec<&CandidateSet<F>> = sets.iter().collect();
        let q = self.config.batch_size.min(self.remaining_budget());
        let selection = select_batch(&models, &set_refs, q, &mut self.rng)?;

        let assignment: Vec<usize> = selection
            .tr_assignment
            .iter()
            .map(|&local| active[local])
            .collect();
        let meta = assignment
            .iter()
            .map(|&slot| {
                (
                    slot,
                    self.regions[slot].base_length(),
                    self.regions[slot].generation(),
                )
            })
            .collect();
        self.pending = Some(PendingBatch {
            points: selection.points.clone(),
            kind: PendingKind::Selection { assignment },
            meta,
        });
        Ok(selection.points)
    }

    /// Ingests evaluation results for the batch returned by the last `ask`.
    pub fn tell(&mut self, points: &DMatrix<F>, values: &[F]) -> Result<()> {
        let batch = self
            .pending
            .take()
            .ok_or_else(|| Error::contract("tell without an outstanding ask"))?;
        if points != &batch.points || values.len() != batch.points.nrows() {
            self.pending = Some(batch);
            return Err(Error::contract(
                "tell must echo the asked points with one value each",
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            self.pending = Some(batch);
            return Err(Error::contract("objective values must be finite"));
        }

        // Trace and ingest in candidate order.
        for (i, &(slot, base, generation)) in batch.meta.iter().enumerate() {
            let point = batch.points.row(i).transpose();
            self.trace
                .push(point.clone(), values[i], slot, base, generation);
            self.regions[slot].ingest(point, values[i]);
        }

        match batch.kind {
            PendingKind::Design { slot } => {
                // Provisional center: raw argmin until the first fit.
                self.regions[slot].update_center_noise_free()?;
            }
            PendingKind::Selection { assignment } => {
                let mut slots: Vec<usize> = assignment.clone();
                slots.sort_unstable();
                slots.dedup();
                for &slot in &slots {
                    let incumbent_raw = {
                        let region = &self.regions[slot];
                        let newly = region.observations().len()
                            - assignment.iter().filter(|&&s| s == slot).count();
                        let new_best = region.observations()[newly..]
                            .iter()
                            .map(|o| o.value)
                            .fold(crate::scalar::cast::<F>(f64::INFINITY), |a, b| a.min(b));
                        (region.incumbent_raw(), new_best)
                    };
                    let (old_raw, new_best) = incumbent_raw;
                    let improved = new_best < old_raw;
                    let assigned = assignment.iter().filter(|&&s| s == slot).count();
                    self.regions[slot].record_batch(improved, assigned, &self.config.tr_config)?;
                    if self.regions[slot].is_active() {
                        let model = self.models[slot].as_ref().expect("selection slot fitted");
                        self.regions[slot].update_center(model, self.config.noisy)?;
                    } else {
                        self.replace_region(slot);
                    }
                }
            }
        }
        Ok(())
    }

    /// Replaces a terminated region with a fresh one (next generation); the
    /// new design stays pending until evaluated.
    fn replace_region(&mut self, slot: usize) {
        let generation = self.regions[slot].generation() + 1;
        self.regions[slot] = TrustRegionState::restart(
            &self.config.tr_config,
            &mut self.rng,
            self.config.init_points_per_region,
            self.config.dim,
            generation,
        );
        self.models[slot] = None;
        self.warm_params[slot] = None;
    }

    fn refit_region(&mut self, slot: usize) -> Result<()> {
        let region = &self.regions[slot];
        let n = region.observations().len();
        debug_assert!(n > 0, "refit requires observations");
        let d = self.config.dim;
        let x = DMatrix::from_fn(n, d, |i, j| region.observations()[i].point[j]);
        let y = DVector::from_fn(n, |i, _| region.observations()[i].value);
        let init = self.warm_params[slot]
            .clone()
            .unwrap_or_else(|| KernelParams::centered(d));
        let model = fit_hyperparameters(&x, &y, &init, self.config.fit_budget, &mut self.rng)?;
        self.warm_params[slot] = Some(model.params().clone());
        self.models[slot] = Some(model);
        Ok(())
    }

    /// Evaluates all pending designs (initial or post-restart), consuming
    /// budget; stops early if the budget runs out.
    fn drain_designs<O: UnitObjective<F>>(&mut self, objective: &mut O) -> Result<()> {
        while !self.is_finished()
            && self
                .regions
                .iter()
                .any(|r| r.is_active() && !r.pending_design().is_empty())
        {
            let points = self.ask()?;
            let values = self.evaluate_batch(objective, &points)?;
            self.tell(&points, &values)?;
        }
        Ok(())
    }

    fn evaluate_batch<O: UnitObjective<F>>(
        &self,
        objective: &mut O,
        points: &DMatrix<F>,
    ) -> Result<Vec<F>> {
        let mut values = Vec::with_capacity(points.nrows());
        for i in 0..points.nrows() {
            let row: Vec<F> = points.row(i).iter().copied().collect();
            let value = objective.eval(&row).map_err(|e| Error::ObjectiveFailed {
                point: row.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect(),
                message: e.to_string(),
            })?;
            values.push(value);
        }
        Ok(values)
    }

    /// Evaluates every region's initial design.
    pub fn initialize<O: UnitObjective<F>>(&mut self, objective: &mut O) -> Result<()> {
        self.drain_designs(objective)
    }

    /// One full batch: drain pending designs, then propose, evaluate, and
    /// ingest one Thompson-sampling batch, immediately evaluating the
    /// designs of any region that restarted.
    pub fn step<O: UnitObjective<F>>(&mut self, objective: &mut O) -> Result<()> {
        if self.is_finished() {
            return Err(Error::contract("step after the budget was exhausted"));
        }
        if self.pending.is_some() {
            return Err(Error::contract("step called with an outstanding ask"));
        }
        self.drain_designs(objective)?;
        if self.is_finished() {
            return Ok(());
        }
        let points = self.ask()?;
        let values = self.evaluate_batch(objective, &points)?;
        self.tell(&points, &values)?;
        // Regions that died this batch restart immediately.
        self.drain_designs(objective)
    }

    /// Runs until the evaluation budget is consumed and returns the trace.
    pub fn run<O: UnitObjective<F>>(&mut self, objective: &mut O) -> Result<RunTrace<F>> {
        while !self.is_finished() {
            self.step(objective)?;
        }
        Ok(self.trace.clone())
    }
}
