//! Per-evaluation run records shared by the optimizer and the baselines.

use nalgebra::DVector;

use crate::scalar::Scalar;

/// One objective evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord<F: Scalar> {
    /// Zero-based evaluation index.
    pub eval_index: usize,
    /// Evaluated point in unit-cube coordinates.
    pub point: DVector<F>,
    /// Raw objective value.
    pub value: F,
    /// Smallest raw value seen up to and including this evaluation.
    pub best_so_far: F,
    /// Trust-region slot that proposed the point (0 for baselines).
    pub tr_id: usize,
    /// Base side length of that region when the point was selected.
    pub base_length: F,
    /// Restart generation of that region.
    pub restart_gen: usize,
}

/// Chronological record of a whole run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunTrace<F: Scalar> {
    records: Vec<TraceRecord<F>>,
}

impl<F: Scalar> RunTrace<F> {
    pub fn new() -> Self {
        RunTrace {
            records: Vec::new(),
        }
    }

    /// Appends one evaluation; the running best is maintained here so the
    /// best-so-far curve is nonincreasing by construction.
    pub fn push(
        &mut self,
        point: DVector<F>,
        value: F,
        tr_id: usize,
        base_length: F,
        restart_gen: usize,
    ) {
        let best_so_far = match self.records.last() {
            Some(last) if last.best_so_far < value => last.best_so_far,
            _ => value,
        };
        self.records.push(TraceRecord {
            eval_index: self.records.len(),
            point,
            value,
            best_so_far,
            tr_id,
            base_length,
            restart_gen,
        });
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[TraceRecord<F>] {
        &self.records
    }

    /// Best value over the whole run, if any evaluation happened.
    pub fn final_best(&self) -> Option<F> {
        self.records.last().map(|r| r.best_so_far)
    }

    /// The nonincreasing best-so-far curve.
    pub fn best_curve(&self) -> Vec<F> {
        self.records.iter().map(|r| r.best_so_far).collect()
    }
}
