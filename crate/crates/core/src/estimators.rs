//! Streaming estimators of `∫ f dπ`.
//!
//! An [`Accumulator`] watches every grid time of every ensemble and keeps, per
//! particle, the left-endpoint Riemann sum of the observable, plus the
//! cross-sectional sums needed by the self-interacting estimator and the final
//! snapshot used by the Monte Carlo average. The five finalizers then only do
//! arithmetic on those sums.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dynamics::{CostLedger, EnsembleState, ParticleCloud, TimeGrid};
use crate::error::{config, precondition, Result};
use crate::model::Observable;
use crate::numeric::{ceil_tol, exact_sum, ExactSum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EstimatorKind {
    Ea,
    Mca,
    Aea,
    CAea,
    CsAea,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 5] = [Self::Ea, Self::Mca, Self::Aea, Self::CAea, Self::CsAea];

    pub fn label(&self) -> &'static str {
        match self {
            Self::Ea => "EA",
            Self::Mca => "MCA",
            Self::Aea => "AEA",
            Self::CAea => "C-AEA",
            Self::CsAea => "CS-AEA",
        }
    }
}

/// Running sums for one ensemble.
#[derive(Debug, Clone, Default)]
pub struct EnsembleAverages {
    index: usize,
    time_sums: Vec<f64>,
    active_steps: Vec<usize>,
    cross_sum: f64,
    included: usize,
    final_values: Option<Vec<f64>>,
}

impl EnsembleAverages {
    pub fn new(index: usize) -> Self {
        Self {
            index,
            ..Self::default()
        }
    }

    pub fn index(&self) -> usize {
        self.index
    }

    /// Add the observable values of the active particles at one included
    /// (left-endpoint) grid time.
    pub fn ingest(&mut self, values: &[f64]) {
        if values.is_empty() {
            return;
        }
        if self.time_sums.len() < values.len() {
            self.time_sums.resize(values.len(), 0.0);
            self.active_steps.resize(values.len(), 0);
        }
        for (i, &v) in values.iter().enumerate() {
            self.time_sums[i] += v;
            self.active_steps[i] += 1;
        }
        self.cross_sum += exact_sum(values) / values.len() as f64;
        self.included += 1;
    }

    /// Record the observable values at the final grid time.
    pub fn ingest_final(&mut self, values: &[f64]) {
        self.final_values = Some(values.to_vec());
    }

    /// Number of grid times that entered the time averages.
    pub fn included_steps(&self) -> usize {
        self.included
    }

    /// `Σ_k f(y^i_{t_k})` over the included grid times of particle `i`.
    pub fn time_sum(&self, i: usize) -> Option<f64> {
        self.time_sums.get(i).copied()
    }

    /// Time average of particle `i` over the grid times it was active.
    pub fn particle_average(&self, i: usize) -> Result<f64> {
        match self.active_steps.get(i) {
            Some(&c) if c > 0 => Ok(self.time_sums[i] / c as f64),
            _ => Err(precondition("no steps ingested for this particle")),
        }
    }

    pub fn final_values(&self) -> Option<&[f64]> {
        self.final_values.as_deref()
    }

    /// Single-path ergodic average of particle 0.
    pub fn ea(&self) -> Result<f64> {
        self.particle_average(0)
    }

    /// Mean of `f` over the final snapshot.
    pub fn mca(&self) -> Result<f64> {
        match self.final_values.as_deref() {
            Some(v) if !v.is_empty() => Ok(exact_sum(v) / v.len() as f64),
            _ => Err(precondition("final snapshot not recorded")),
        }
    }

    /// Mean over particles of per-particle time averages.
    pub fn aea(&self) -> Result<f64> {
        if self.included == 0 {
            return Err(precondition("no steps ingested"));
        }
        let mut acc = ExactSum::new();
        let mut count = 0usize;
        for i in 0..self.time_sums.len() {
            if self.active_steps[i] > 0 {
                acc.add(self.time_sums[i] / self.active_steps[i] as f64);
                count += 1;
            }
        }
        Ok(acc.value() / count as f64)
    }

    /// Time average of the cross-sectional mean over active particles.
    pub fn cross_sectional(&self) -> Result<f64> {
        if self.included == 0 {
            return Err(precondition("no steps ingested"));
        }
        Ok(self.cross_sum / self.included as f64)
    }
}

/// Streaming accumulator for one observable over all ensembles of a run.
#[derive(Debug, Clone)]
pub struct Accumulator {
    observable: Observable,
    steps: usize,
    first_included: usize,
    ensembles: Vec<EnsembleAverages>,
    values: Vec<f64>,
}

impl Accumulator {
    /// Grid times `k` with `k/n ≥ burn_in` and `k < ⌈tn⌉` enter the time averages.
    pub fn new(observable: Observable, grid: &TimeGrid, burn_in: f64) -> Result<Self> {
        if !(burn_in.is_finite() && burn_in >= 0.0) {
            return Err(config("burn-in must be a non-negative number"));
        }
        let first_included = ceil_tol(burn_in * grid.n() as f64) as usize;
        if first_included >= grid.steps() {
            return Err(config(
                "burn-in must leave at least one step before the horizon",
            ));
        }
        Ok(Self {
            observable,
            steps: grid.steps(),
            first_included,
            ensembles: Vec::new(),
            values: Vec::new(),
        })
    }

    pub fn observable(&self) -> &Observable {
        &self.observable
    }

    /// Feed the state of one ensemble at one grid time.
    pub fn observe(&mut self, state: &EnsembleState) {
        let k = state.step();
        if k < self.first_included || k > self.steps {
            return;
        }
        self.values.clear();
        for x in state.active_positions().chunks_exact(state.dim()) {
            self.values.push(self.observable.value(x));
        }
        let slot = match self.ensembles.iter().position(|e| e.index == state.index()) {
            Some(pos) => pos,
            None => {
                self.ensembles.push(EnsembleAverages::new(state.index()));
                self.ensembles.len() - 1
            }
        };
        let ens = &mut self.ensembles[slot];
        if k == self.steps {
            ens.ingest_final(&self.values);
        } else {
            ens.ingest(&self.values);
        }
    }

    /// Absorb the ensembles of another accumulator for the same run.
    pub fn merge(&mut self, other: Accumulator) {
        self.ensembles.extend(other.ensembles);
        self.ensembles.sort_by_key(|e| e.index);
    }

    /// Per-ensemble sums, ordered by ensemble index.
    pub fn ensembles(&self) -> Vec<&EnsembleAverages> {
        let mut out: Vec<&EnsembleAverages> = self.ensembles.iter().collect();
        out.sort_by_key(|e| e.index);
        out
    }

    fn first(&self) -> Result<&EnsembleAverages> {
        self.ensembles
            .iter()
            .min_by_key(|e| e.index)
            .ok_or_else(|| precondition("no ensemble observed"))
    }

    pub fn finalize(&self, kind: EstimatorKind) -> Result<f64> {
        match kind {
            EstimatorKind::Ea => finalize_ea(self),
            EstimatorKind::Mca => finalize_mca(self),
            EstimatorKind::Aea => finalize_aea(self),
            EstimatorKind::CAea => finalize_c_aea(self),
            EstimatorKind::CsAea => finalize_cs_aea(self),
        }
    }
}

/// Ergodic average along particle 1 of ensemble 1.
pub fn finalize_ea(acc: &Accumulator) -> Result<f64> {
    acc.first()?.ea()
}

/// Mean of `f` over ensemble 1 at the final time.
pub fn finalize_mca(acc: &Accumulator) -> Result<f64> {
    acc.first()?.mca()
}

/// Monte Carlo average computed directly from a final particle cloud.
pub fn mca_from_cloud(cloud: &ParticleCloud, f: &Observable) -> Result<f64> {
    let ens = cloud
        .ensembles
        .iter()
        .min_by_key(|e| e.index())
        .ok_or_else(|| precondition("empty particle cloud"))?;
    let values: Vec<f64> = ens
        .active_positions()
        .chunks_exact(ens.dim())
        .map(|x| f.value(x))
        .collect();
    Ok(exact_sum(&values) / values.len() as f64)
}

/// Averaged ergodic average over the particles of ensemble 1.
pub fn finalize_aea(acc: &Accumulator) -> Result<f64> {
    acc.first()?.aea()
}

/// Mean over ensembles of the per-ensemble averaged ergodic averages.
pub fn finalize_c_aea(acc: &Accumulator) -> Result<f64> {
    let values = acc
        .ensembles()
        .into_iter()
        .map(EnsembleAverages::aea)
        .collect::<Result<Vec<_>>>()?;
    combine_ensembles(&values)
}

/// Mean over self-interacting ensembles of the time-averaged cross-sectional mean.
pub fn finalize_cs_aea(acc: &Accumulator) -> Result<f64> {
    let values = acc
        .ensembles()
        .into_iter()
        .map(EnsembleAverages::cross_sectional)
        .collect::<Result<Vec<_>>>()?;
    combine_ensembles(&values)
}

/// Mean of per-ensemble values, in ensemble order.
pub fn combine_ensembles(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(precondition("no ensembles to combine"));
    }
    Ok(exact_sum(values) / values.len() as f64)
}

/// Outcome of one estimator on one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub algorithm: String,
    pub estimate: f64,
    pub t: f64,
    pub n: usize,
    pub particles: usize,
    pub ensembles: usize,
    pub schedule: String,
    pub seed: u64,
    pub ledger: CostLedger,
    pub wall_time: Option<f64>,
    pub reference: Option<f64>,
    pub error: Option<f64>,
}

impl ExperimentResult {
    pub fn with_reference(mut self, reference: Option<f64>) -> Self {
        self.reference = reference;
        self.error = reference.map(|r| (self.estimate - r).abs());
        self
    }
}
