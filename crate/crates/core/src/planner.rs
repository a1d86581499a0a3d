//! Closed-form parameter allocations for a target tolerance ε, and the
//! matching cost formulas.
//!
//! Every "≈" allocation uses implied constant 1 (scaled by an optional
//! `cost_constant`) and rounds integer parameters up. Where an allocation
//! involves `ln(1/ε)` we use `L = max(ln(1/ε), 1)` so that horizons stay at
//! least `1/λ` for loose tolerances and every parameter is monotone in ε.

use alloc::format;
use alloc::string::String;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dynamics::{
    naive_kernel_evals, CostLedger, DynamicsKind, Evaluation, ParticleSchedule, SimulationConfig,
    TimeGrid,
};
use crate::error::{config, Error, Result};
use crate::estimators::EstimatorKind;
use crate::numeric::ceil_tol;

/// Particle schedule used by the single self-interacting system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EsSchedule {
    /// `N_t` decreasing like `1/t`, horizon `λ⁻¹ ln(1/ε)`.
    Harmonic,
    /// One particle, horizon `ε⁻²`.
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Algorithm {
    Ea,
    Mca,
    Aea,
    CAea,
    EsAea(EsSchedule),
    CsAea,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Self::Ea,
        Self::Mca,
        Self::Aea,
        Self::CAea,
        Self::EsAea(EsSchedule::Harmonic),
        Self::EsAea(EsSchedule::Constant),
        Self::CsAea,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Self::Ea => "EA",
            Self::Mca => "MCA",
            Self::Aea => "AEA",
            Self::CAea => "C_AEA",
            Self::EsAea(EsSchedule::Harmonic) => "ES_AEA",
            Self::EsAea(EsSchedule::Constant) => "ES_AEA_CONSTANT",
            Self::CsAea => "CS_AEA",
        }
    }

    pub fn dynamics(&self) -> DynamicsKind {
        match self {
            Self::EsAea(_) | Self::CsAea => DynamicsKind::SelfInteracting,
            _ => DynamicsKind::Ips,
        }
    }

    /// Estimator that finalizes a run of this algorithm. A single
    /// self-interacting system is the one-ensemble case of CS-AEA.
    pub fn estimator(&self) -> EstimatorKind {
        match self {
            Self::Ea => EstimatorKind::Ea,
            Self::Mca => EstimatorKind::Mca,
            Self::Aea => EstimatorKind::Aea,
            Self::CAea => EstimatorKind::CAea,
            Self::EsAea(_) | Self::CsAea => EstimatorKind::CsAea,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl From<Algorithm> for String {
    fn from(a: Algorithm) -> String {
        a.label().into()
    }
}

impl TryFrom<String> for Algorithm {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .trim()
            .chars()
            .map(|c| {
                if c == '-' {
                    '_'
                } else {
                    c.to_ascii_uppercase()
                }
            })
            .collect();
        Ok(match key.as_str() {
            "EA" => Self::Ea,
            "MCA" => Self::Mca,
            "AEA" => Self::Aea,
            "C_AEA" | "CAEA" => Self::CAea,
            "ES_AEA" | "ES_AEA_HARMONIC" => Self::EsAea(EsSchedule::Harmonic),
            "ES_AEA_CONSTANT" => Self::EsAea(EsSchedule::Constant),
            "CS_AEA" | "CSAEA" => Self::CsAea,
            _ => return Err(config(format!("unknown algorithm '{s}'"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerInput {
    pub algorithm: Algorithm,
    pub epsilon: f64,
    pub lambda: f64,
    pub cost_constant: f64,
}

impl PlannerInput {
    pub fn new(algorithm: Algorithm, epsilon: f64, lambda: f64) -> Self {
        Self {
            algorithm,
            epsilon,
            lambda,
            cost_constant: 1.0,
        }
    }

    pub fn with_cost_constant(mut self, c: f64) -> Self {
        self.cost_constant = c;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(config(format!(
                "epsilon must lie in (0, 1), got {}",
                self.epsilon
            )));
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(config(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        if !(self.cost_constant.is_finite() && self.cost_constant > 0.0) {
            return Err(config("cost constant must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterPlan {
    pub algorithm: Algorithm,
    pub t: f64,
    pub n: usize,
    #[serde(rename = "N")]
    pub particles: usize,
    #[serde(rename = "M")]
    pub ensembles: usize,
    pub schedule: ParticleSchedule,
    pub predicted_cost: f64,
}

impl ParameterPlan {
    /// Build a plan from explicit parameters; the schedule follows the algorithm.
    pub fn from_parameters(
        algorithm: Algorithm,
        t: f64,
        n: usize,
        particles: usize,
        ensembles: usize,
    ) -> Result<Self> {
        let schedule = match algorithm {
            Algorithm::EsAea(EsSchedule::Harmonic) => ParticleSchedule::harmonic(particles, n),
            _ => ParticleSchedule::Constant(particles),
        };
        let predicted_cost = theoretical_cost(algorithm, t, n, particles, ensembles)?;
        Ok(Self {
            algorithm,
            t,
            n,
            particles,
            ensembles,
            schedule,
            predicted_cost,
        })
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.n, self.t)
    }

    pub fn simulation_config(&self, seed: u64, evaluation: Evaluation) -> Result<SimulationConfig> {
        Ok(SimulationConfig::new(
            self.grid()?,
            self.particles,
            self.algorithm.dynamics(),
            seed,
        )
        .with_schedule(self.schedule)
        .with_ensembles(self.ensembles)
        .with_evaluation(evaluation))
    }
}

fn log_factor(epsilon: f64) -> f64 {
    libm::log(1.0 / epsilon).max(1.0)
}

fn up(x: f64) -> usize {
    (ceil_tol(x) as usize).max(1)
}

/// The allocation `(t, n, N, M)` for a target tolerance.
pub fn plan(input: &PlannerInput) -> Result<ParameterPlan> {
    input.validate()?;
    let eps = input.epsilon;
    let lambda = input.lambda;
    let c = input.cost_constant;
    let l = log_factor(eps);
    let inv = 1.0 / eps;
    let relax = l / lambda;
    let (t, n, particles, ensembles) = match input.algorithm {
        Algorithm::Ea => ((inv * inv).max(relax) * c, up(c * inv), up(c * inv), 1),
        Algorithm::Mca => (relax * c, up(c * inv), up(c * inv * inv), 1),
        Algorithm::Aea => (inv * c, up(c * inv), up(c * inv), 1),
        Algorithm::CAea => (relax * c, up(c * inv), up(c * inv), up(c * inv / relax)),
        Algorithm::EsAea(EsSchedule::Harmonic) => {
            (relax * c, up(c * inv), up(c * inv * inv / l), 1)
        }
        Algorithm::EsAea(EsSchedule::Constant) => (inv * inv * c, up(c * inv), 1, 1),
        Algorithm::CsAea => (relax * c, up(c * inv), 1, up(c * inv * inv / relax)),
    };
    ParameterPlan::from_parameters(input.algorithm, t, n, particles, ensembles)
}

/// Generalised harmonic number `H(x) = ψ(x + 1) + γ`; equals `Σ_{k=1}^{x} 1/k`
/// at integers.
pub fn harmonic_number(x: f64) -> f64 {
    let r = libm::round(x);
    if libm::fabs(x - r) < 1e-12 && r <= 1e7 {
        return (1..=r as u64).rev().map(|k| 1.0 / k as f64).sum();
    }
    digamma(x + 1.0) + 0.577_215_664_901_532_9
}

fn digamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 10.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let f = 1.0 / (x * x);
    let tail =
        f * (1.0 / 12.0 - f * (1.0 / 120.0 - f * (1.0 / 252.0 - f * (1.0 / 240.0 - f / 132.0))));
    acc + libm::log(x) - 0.5 / x - tail
}

/// Cost formula of each algorithm in units of kernel evaluations.
pub fn theoretical_cost(
    algorithm: Algorithm,
    t: f64,
    n: usize,
    particles: usize,
    ensembles: usize,
) -> Result<f64> {
    if !(t.is_finite() && t > 0.0) || n == 0 || particles == 0 || ensembles == 0 {
        return Err(config("cost parameters must be positive"));
    }
    let (nf, np, m) = (n as f64, particles as f64, ensembles as f64);
    let tn = t * nf;
    Ok(match algorithm {
        Algorithm::Ea | Algorithm::Mca => tn * np * np,
        Algorithm::Aea => tn * np * np + t * np,
        Algorithm::CAea => (tn * np * np + t * np) * m,
        Algorithm::EsAea(EsSchedule::Harmonic) => {
            let scale = (nf * np) * (nf * np);
            let r = libm::round(tn);
            if libm::fabs(tn - r) < 1e-12 && r <= 1e7 {
                // Σ scale/k summed exactly, so integer-valued terms give integer totals
                let mut acc = crate::numeric::ExactSum::new();
                (1..=r as u64).for_each(|k| acc.add(scale / k as f64));
                acc.value()
            } else {
                scale * harmonic_number(tn)
            }
        }
        Algorithm::EsAea(EsSchedule::Constant) => np * np * 0.5 * tn * (1.0 + tn),
        Algorithm::CsAea => m * np * np * 0.5 * tn * (1.0 + tn),
    })
}

/// Leading-order cost as a function of ε.
pub fn asymptotic_cost_order(algorithm: Algorithm, epsilon: f64, lambda: f64) -> f64 {
    let inv = 1.0 / epsilon;
    let ln = libm::log(inv);
    match algorithm {
        Algorithm::Mca => ln * libm::pow(inv, 5.0) / lambda,
        Algorithm::Ea => libm::pow(inv, 5.0),
        Algorithm::Aea | Algorithm::CAea => libm::pow(inv, 4.0),
        Algorithm::EsAea(_) => libm::pow(inv, 6.0),
        Algorithm::CsAea => libm::pow(inv, 4.0) * ln / lambda,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    /// Exact kernel-evaluation count of a naive pairwise run of this plan.
    pub expected_kernel_evals: u64,
    pub observed_kernel_evals: u64,
    pub theoretical_cost: f64,
    /// `observed / theoretical_cost`.
    pub ratio: f64,
    /// Naive run whose ledger equals the expected count exactly.
    pub matches: bool,
}

/// Compare a run's ledger with the plan's cost.
///
/// The expected count uses `⌈tn⌉` steps and the executed schedule; it differs
/// from [`theoretical_cost`] only through that rounding, the `tN` averaging
/// term and, for the harmonic schedule, rounding of `N_k`.
pub fn consistency_check(
    plan: &ParameterPlan,
    ledger: &CostLedger,
    evaluation: Evaluation,
) -> Result<ConsistencyReport> {
    let cfg = plan.simulation_config(0, evaluation)?;
    let expected = naive_kernel_evals(&cfg);
    let theory = theoretical_cost(
        plan.algorithm,
        plan.t,
        plan.n,
        plan.particles,
        plan.ensembles,
    )?;
    Ok(ConsistencyReport {
        expected_kernel_evals: expected,
        observed_kernel_evals: ledger.kernel_evals,
        theoretical_cost: theory,
        ratio: ledger.kernel_evals as f64 / theory,
        matches: evaluation == Evaluation::Naive && ledger.kernel_evals == expected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn plan_examples() {
        let p = plan(&PlannerInput::new(Algorithm::Mca, 0.1, 1.0)).unwrap();
        assert!(close(p.t, 10f64.ln(), 1e-12));
        assert_eq!((p.particles, p.n, p.ensembles), (100, 10, 1));

        let p = plan(&PlannerInput::new(Algorithm::Aea, 0.1, 1.0)).unwrap();
        assert!(close(p.t, 10.0, 1e-12));
        assert_eq!((p.particles, p.n, p.ensembles), (10, 10, 1));

        let p = plan(&PlannerInput::new(Algorithm::CAea, 0.1, 1.0)).unwrap();
        assert!(close(p.t, 10f64.ln(), 1e-12));
        assert_eq!((p.particles, p.n, p.ensembles), (10, 10, 5));
    }

    #[test]
    fn plan_rejects_bad_input() {
        assert!(plan(&PlannerInput::new(Algorithm::Aea, 1.0, 1.0)).is_err());
        assert!(plan(&PlannerInput::new(Algorithm::Aea, 0.0, 1.0)).is_err());
        assert!(plan(&PlannerInput::new(Algorithm::Mca, 0.1, 0.0)).is_err());
    }

    #[test]
    fn cost_examples() {
        assert_eq!(
            theoretical_cost(Algorithm::Mca, 2.0, 10, 100, 1).unwrap(),
            200_000.0
        );
        let h = theoretical_cost(Algorithm::EsAea(EsSchedule::Harmonic), 2.0, 2, 3, 1).unwrap();
        assert!(close(h, 75.0, 1e-14));
        let c = theoretical_cost(Algorithm::EsAea(EsSchedule::Constant), 2.0, 2, 1, 1).unwrap();
        assert_eq!(c, 10.0);
        assert!(theoretical_cost(Algorithm::Mca, 0.0, 10, 1, 1).is_err());
    }

    #[test]
    fn asymptotic_examples() {
        let ln10 = 10f64.ln();
        assert!(close(
            asymptotic_cost_order(Algorithm::Mca, 0.1, 1.0),
            ln10 * 1e5,
            1e-12
        ));
        assert!(close(
            asymptotic_cost_order(Algorithm::Aea, 0.1, 1.0),
            1e4,
            1e-12
        ));
        assert!(close(
            asymptotic_cost_order(Algorithm::CsAea, 0.1, 1.0),
            1e4 * ln10,
            1e-12
        ));
    }

    #[test]
    fn generalised_harmonic_number_is_continuous_and_increasing() {
        assert!(close(harmonic_number(4.0), 25.0 / 12.0, 1e-15));
        assert!(close(harmonic_number(4.0 + 1e-9), 25.0 / 12.0, 1e-8));
        assert!(close(harmonic_number(0.5), 2.0 - 2.0 * 2f64.ln(), 1e-12));
        let mut prev = 0.0;
        for i in 1..400 {
            let h = harmonic_number(i as f64 * 0.37);
            assert!(h > prev);
            prev = h;
        }
    }

    #[test]
    fn parse_algorithms() {
        for a in Algorithm::ALL {
            assert_eq!(a.label().parse::<Algorithm>().unwrap(), a);
        }
        assert_eq!("c-aea".parse::<Algorithm>().unwrap(), Algorithm::CAea);
        assert!("mlmc".parse::<Algorithm>().is_err());
    }
}
