//! One estimator run: model + plan + observable + seed.

use alloc::vec::Vec;

use crate::dynamics::{run_ensemble, CostLedger, EnsembleState, Evaluation, SimulationConfig};
use crate::error::{config, Result};
use crate::estimators::{Accumulator, ExperimentResult};
use crate::model::{ModelSpec, Observable};
use crate::planner::ParameterPlan;

/// Seed and mirroring flag of replication `r`.
///
/// Replications use `seed + r`. With antithetic pairing, replications `2p` and
/// `2p + 1` share `seed + p` and the odd one negates every Gaussian draw.
pub fn replication_seed(seed: u64, replication: u64, antithetic: bool) -> (u64, bool) {
    if antithetic {
        (seed.wrapping_add(replication / 2), replication % 2 == 1)
    } else {
        (seed.wrapping_add(replication), false)
    }
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub model: ModelSpec,
    pub plan: ParameterPlan,
    pub observable: Observable,
    pub burn_in: f64,
    pub evaluation: Evaluation,
    pub seed: u64,
    pub antithetic: bool,
}

impl Experiment {
    pub fn new(model: ModelSpec, plan: ParameterPlan, observable: Observable) -> Self {
        Self {
            model,
            plan,
            observable,
            burn_in: 0.0,
            evaluation: Evaluation::Naive,
            seed: 0,
            antithetic: false,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_burn_in(mut self, burn_in: f64) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn with_evaluation(mut self, evaluation: Evaluation) -> Self {
        self.evaluation = evaluation;
        self
    }

    pub fn with_antithetic(mut self, on: bool) -> Self {
        self.antithetic = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.observable.min_dim() > self.model.dim() {
            return Err(config(
                "observable needs more coordinates than the model has",
            ));
        }
        let cfg = self.simulation_config(0)?;
        cfg.validate(&self.model)?;
        Accumulator::new(self.observable.clone(), &cfg.grid, self.burn_in)?;
        Ok(())
    }

    pub fn simulation_config(&self, replication: u64) -> Result<SimulationConfig> {
        let (seed, mirror) = replication_seed(self.seed, replication, self.antithetic);
        Ok(self
            .plan
            .simulation_config(seed, self.evaluation)?
            .with_antithetic(mirror))
    }

    pub fn new_accumulator(&self) -> Result<Accumulator> {
        Accumulator::new(self.observable.clone(), &self.plan.grid()?, self.burn_in)
    }

    /// Simulate one ensemble of one replication.
    pub fn run_ensemble(
        &self,
        replication: u64,
        ensemble: usize,
    ) -> Result<(Accumulator, EnsembleState, CostLedger)> {
        let cfg = self.simulation_config(replication)?;
        let mut acc = self.new_accumulator()?;
        let (state, ledger) = run_ensemble(&self.model, &cfg, ensemble, &mut |s| acc.observe(s))?;
        Ok((acc, state, ledger))
    }

    /// Reduce per-ensemble parts (any order) into the replication result.
    pub fn finish(
        &self,
        replication: u64,
        parts: Vec<(Accumulator, CostLedger)>,
        wall_time: Option<f64>,
    ) -> Result<ExperimentResult> {
        let mut acc = self.new_accumulator()?;
        let mut ledger = CostLedger::default();
        for (a, l) in parts {
            acc.merge(a);
            ledger.merge(&l);
        }
        let estimate = acc.finalize(self.plan.algorithm.estimator())?;
        let cfg = self.simulation_config(replication)?;
        Ok(ExperimentResult {
            algorithm: self.plan.algorithm.label().into(),
            estimate,
            t: self.plan.t,
            n: self.plan.n,
            particles: self.plan.particles,
            ensembles: self.plan.ensembles,
            schedule: self.plan.schedule.label(),
            seed: cfg.seed,
            ledger,
            wall_time,
            reference: None,
            error: None,
        })
    }

    /// Run every ensemble of replication `r` on the current thread.
    pub fn run_replication(&self, replication: u64) -> Result<ExperimentResult> {
        let mut parts = Vec::with_capacity(self.plan.ensembles);
        for j in 0..self.plan.ensembles {
            let (acc, _, ledger) = self.run_ensemble(replication, j)?;
            parts.push((acc, ledger));
        }
        self.finish(replication, parts, None)
    }
}
