//! McKean-Vlasov model coefficients.
//!
//! Measure dependence comes in two concrete shapes:
//!
//! * [`PairwiseKernel`]: `b(x, μ) = ∫ b(x, y) μ(dy)`, evaluated against an
//!   empirical measure as the average of `b(x, y)` over its atoms;
//! * [`FeatureKernel`]: `b(x, μ) = B(x, ∫ h dμ)` for a feature map `h: R^d → R^p`.
//!
//! A model that can be written both ways carries the feature form as an
//! optional fast path next to its primary kernel.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::dynamics::CostLedger;
use crate::error::{config, precondition, Error, Result};
use crate::numeric::ExactSum;
use crate::rng::RngStream;

pub type PairFn = Arc<dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync>;
pub type MapFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// `(x, y) ↦ b(x, y)`, averaged over the atoms `y` of the measure.
#[derive(Clone)]
pub struct PairwiseKernel {
    input_dim: usize,
    output_dim: usize,
    f: PairFn,
}

impl PairwiseKernel {
    pub fn new<F>(input_dim: usize, output_dim: usize, f: F) -> Self
    where
        F: Fn(&[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self {
            input_dim,
            output_dim,
            f: Arc::new(f),
        }
    }

    #[inline]
    pub fn eval(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        (self.f)(x, y, out)
    }
}

/// `B(x, h̄)` with `h̄` the mean of the feature map `h` under the measure.
#[derive(Clone)]
pub struct FeatureKernel {
    input_dim: usize,
    feature_dim: usize,
    output_dim: usize,
    feature: MapFn,
    combine: PairFn,
}

impl FeatureKernel {
    pub fn new<H, B>(
        input_dim: usize,
        feature_dim: usize,
        output_dim: usize,
        feature: H,
        combine: B,
    ) -> Self
    where
        H: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
        B: Fn(&[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self {
            input_dim,
            feature_dim,
            output_dim,
            feature: Arc::new(feature),
            combine: Arc::new(combine),
        }
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    #[inline]
    pub fn feature(&self, y: &[f64], out: &mut [f64]) {
        (self.feature)(y, out)
    }

    #[inline]
    pub fn combine(&self, x: &[f64], mean_feature: &[f64], out: &mut [f64]) {
        (self.combine)(x, mean_feature, out)
    }
}

#[derive(Clone)]
pub enum InteractionKernel {
    Pairwise(PairwiseKernel),
    FeatureAverage(FeatureKernel),
}

impl fmt::Debug for InteractionKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Pairwise(k) => write!(f, "Pairwise({} -> {})", k.input_dim, k.output_dim),
            Self::FeatureAverage(k) => write!(
                f,
                "FeatureAverage({} -> {} -> {})",
                k.input_dim, k.feature_dim, k.output_dim
            ),
        }
    }
}

impl InteractionKernel {
    /// The kernel `b ≡ 0`.
    pub fn zero(input_dim: usize, output_dim: usize) -> Self {
        Self::Pairwise(PairwiseKernel::new(input_dim, output_dim, |_, _, out| {
            out.iter_mut().for_each(|o| *o = 0.0)
        }))
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Self::Pairwise(k) => k.input_dim,
            Self::FeatureAverage(k) => k.input_dim,
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            Self::Pairwise(k) => k.output_dim,
            Self::FeatureAverage(k) => k.output_dim,
        }
    }

    pub fn is_pairwise(&self) -> bool {
        matches!(self, Self::Pairwise(_))
    }

    /// Average the kernel at `x` against the uniform measure on `atoms`.
    ///
    /// Pairwise kernels cost one evaluation per atom; feature kernels cost one
    /// feature evaluation per atom plus one combiner call.
    pub(crate) fn average_against<'a, I>(
        &self,
        x: &[f64],
        atoms: I,
        ledger: &mut CostLedger,
        scratch: &mut KernelScratch,
        out: &mut [f64],
    ) where
        I: IntoIterator<Item = &'a [f64]>,
    {
        match self {
            Self::Pairwise(k) => {
                scratch.reset(k.output_dim, k.output_dim);
                let mut count = 0u64;
                for y in atoms {
                    k.eval(x, y, &mut scratch.term);
                    for (s, &t) in scratch.sums.iter_mut().zip(&scratch.term) {
                        s.add(t);
                    }
                    count += 1;
                }
                ledger.kernel_evals += count;
                for (o, s) in out.iter_mut().zip(&scratch.sums) {
                    *o = s.value() / count as f64;
                }
            }
            Self::FeatureAverage(k) => {
                scratch.reset(k.feature_dim, k.feature_dim);
                let mut count = 0u64;
                for y in atoms {
                    k.feature(y, &mut scratch.term);
                    for (s, &t) in scratch.sums.iter_mut().zip(&scratch.term) {
                        s.add(t);
                    }
                    count += 1;
                }
                for (m, s) in scratch.mean.iter_mut().zip(&scratch.sums) {
                    *m = s.value() / count as f64;
                }
                k.combine(x, &scratch.mean, out);
                ledger.kernel_evals += count + 1;
            }
        }
    }
}

/// Reusable buffers for kernel averaging.
#[derive(Debug, Default, Clone)]
pub struct KernelScratch {
    sums: Vec<ExactSum>,
    term: Vec<f64>,
    mean: Vec<f64>,
}

impl KernelScratch {
    pub fn new() -> Self {
        Self::default()
    }

    fn reset(&mut self, sums: usize, term: usize) {
        self.sums.resize_with(sums, ExactSum::new);
        self.sums.iter_mut().for_each(ExactSum::clear);
        self.term.resize(term, 0.0);
        self.mean.resize(sums, 0.0);
    }
}

/// Uniform measure on a finite set of atoms in `R^d`, stored row-major.
#[derive(Debug, Clone, Copy)]
pub struct EmpiricalMeasure<'a> {
    dim: usize,
    atoms: &'a [f64],
}

impl<'a> EmpiricalMeasure<'a> {
    pub fn new(dim: usize, atoms: &'a [f64]) -> Result<Self> {
        if dim == 0 || !atoms.len().is_multiple_of(dim) {
            return Err(config(format!(
                "measure storage of length {} is not a multiple of dimension {dim}",
                atoms.len()
            )));
        }
        Ok(Self { dim, atoms })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.atoms.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> core::slice::ChunksExact<'a, f64> {
        self.atoms.chunks_exact(self.dim)
    }
}

/// Evaluate `kernel(x, measure)` and charge the cost to `ledger`.
pub fn eval_drift(
    kernel: &InteractionKernel,
    x: &[f64],
    measure: &EmpiricalMeasure<'_>,
    ledger: &mut CostLedger,
) -> Result<Vec<f64>> {
    if measure.is_empty() {
        return Err(precondition("drift evaluated against an empty measure"));
    }
    if x.len() != kernel.input_dim() || measure.dim() != kernel.input_dim() {
        return Err(config(format!(
            "kernel expects dimension {}, got state of dimension {} and measure of dimension {}",
            kernel.input_dim(),
            x.len(),
            measure.dim()
        )));
    }
    let mut out = vec![0.0; kernel.output_dim()];
    let mut scratch = KernelScratch::new();
    kernel.average_against(x, measure.atoms(), ledger, &mut scratch, &mut out);
    Ok(out)
}

#[derive(Clone)]
pub enum Diffusion {
    /// Constant `d × k` matrix, row-major.
    Constant(Vec<f64>),
    /// Measure-dependent; the kernel output is a row-major `d × k` matrix.
    Interacting(InteractionKernel),
}

impl fmt::Debug for Diffusion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(m) => f.debug_tuple("Constant").field(m).finish(),
            Self::Interacting(k) => f.debug_tuple("Interacting").field(k).finish(),
        }
    }
}

/// Decomposition `b(x, μ) = V(x) + ∫ W(x, y) μ(dy)`.
#[derive(Clone)]
pub struct StructuralSplit {
    pub confining: MapFn,
    pub interaction: PairwiseKernel,
}

#[derive(Clone)]
pub struct ModelSpec {
    name: String,
    dim: usize,
    noise_dim: usize,
    drift: InteractionKernel,
    drift_features: Option<FeatureKernel>,
    diffusion: Diffusion,
    split: Option<StructuralSplit>,
    initial: InitialLaw,
}

impl fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelSpec")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("noise_dim", &self.noise_dim)
            .field("drift", &self.drift)
            .field("fast_path", &self.drift_features.is_some())
            .field("diffusion", &self.diffusion)
            .field("split", &self.split.is_some())
            .field("initial", &self.initial)
            .finish()
    }
}

impl ModelSpec {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        noise_dim: usize,
        drift: InteractionKernel,
        diffusion: Diffusion,
        initial: InitialLaw,
    ) -> Result<Self> {
        if dim == 0 || noise_dim == 0 {
            return Err(config("state and noise dimensions must be at least 1"));
        }
        if drift.input_dim() != dim || drift.output_dim() != dim {
            return Err(config(format!(
                "drift kernel maps {} -> {}, model dimension is {dim}",
                drift.input_dim(),
                drift.output_dim()
            )));
        }
        match &diffusion {
            Diffusion::Constant(m) if m.len() != dim * noise_dim => {
                return Err(config(format!(
                    "constant diffusion has {} entries, expected {dim}x{noise_dim}",
                    m.len()
                )))
            }
            Diffusion::Interacting(k)
                if k.input_dim() != dim || k.output_dim() != dim * noise_dim =>
            {
                return Err(config("diffusion kernel dimensions do not match the model"))
            }
            _ => {}
        }
        if initial.dim() != dim {
            return Err(config(format!(
                "initial law has dimension {}, model dimension is {dim}",
                initial.dim()
            )));
        }
        Ok(Self {
            name: name.into(),
            dim,
            noise_dim,
            drift,
            drift_features: None,
            diffusion,
            split: None,
            initial,
        })
    }

    /// Attach an equivalent feature-average form of the drift, used by the O(N) path.
    pub fn with_feature_form(mut self, kernel: FeatureKernel) -> Result<Self> {
        if kernel.input_dim != self.dim || kernel.output_dim != self.dim {
            return Err(config("feature form dimensions do not match the model"));
        }
        self.drift_features = Some(kernel);
        Ok(self)
    }

    pub fn with_split(mut self, split: StructuralSplit) -> Result<Self> {
        if split.interaction.input_dim != self.dim || split.interaction.output_dim != self.dim {
            return Err(config("structural split dimensions do not match the model"));
        }
        self.split = Some(split);
        Ok(self)
    }

    pub fn with_initial(mut self, initial: InitialLaw) -> Result<Self> {
        if initial.dim() != self.dim {
            return Err(config(format!(
                "initial law has dimension {}, model dimension is {}",
                initial.dim(),
                self.dim
            )));
        }
        self.initial = initial;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn noise_dim(&self) -> usize {
        self.noise_dim
    }

    pub fn drift(&self) -> &InteractionKernel {
        &self.drift
    }

    pub fn diffusion(&self) -> &Diffusion {
        &self.diffusion
    }

    pub fn initial(&self) -> &InitialLaw {
        &self.initial
    }

    pub fn split(&self) -> Option<&StructuralSplit> {
        self.split.as_ref()
    }

    /// Feature form used by the fast path, if the model has one.
    pub fn fast_drift(&self) -> Option<&FeatureKernel> {
        match &self.drift {
            InteractionKernel::FeatureAverage(k) => Some(k),
            InteractionKernel::Pairwise(_) => self.drift_features.as_ref(),
        }
    }

    /// Largest coordinate gap between the drift and `V + W` at `(x, measure)`.
    pub fn split_deviation(&self, x: &[f64], measure: &EmpiricalMeasure<'_>) -> Result<f64> {
        let split = self
            .split
            .as_ref()
            .ok_or_else(|| precondition("model declares no structural split"))?;
        let mut ledger = CostLedger::default();
        let full = eval_drift(&self.drift, x, measure, &mut ledger)?;
        let mut v = vec![0.0; self.dim];
        (split.confining)(x, &mut v);
        let w = eval_drift(
            &InteractionKernel::Pairwise(split.interaction.clone()),
            x,
            measure,
            &mut ledger,
        )?;
        Ok(full
            .iter()
            .zip(v.iter().zip(&w))
            .map(|(f, (a, b))| (f - (a + b)).abs())
            .fold(0.0, f64::max))
    }
}

/// Scalar test function `f: R^d → R`.
#[derive(Clone)]
pub enum Observable {
    Coordinate(usize),
    SquaredNorm,
    /// `c_0 + c_1 x_0 + c_2 x_0^2 + ...` in the first coordinate.
    Polynomial(Vec<f64>),
    Custom {
        name: String,
        f: ScalarFn,
    },
}

impl fmt::Debug for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl Observable {
    pub fn custom<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self::Custom {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Self::Coordinate(j) => format!("x[{j}]"),
            Self::SquaredNorm => "|x|^2".to_string(),
            Self::Polynomial(c) => {
                let terms: Vec<String> = c.iter().map(|v| format!("{v}")).collect();
                format!("poly[{}]", terms.join(","))
            }
            Self::Custom { name, .. } => name.clone(),
        }
    }

    /// Smallest state dimension on which the observable is defined.
    pub fn min_dim(&self) -> usize {
        match self {
            Self::Coordinate(j) => j + 1,
            _ => 1,
        }
    }

    /// Evaluate without input checks; the simulation guarantees finite states.
    #[inline]
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Self::Coordinate(j) => x[*j],
            Self::SquaredNorm => x.iter().map(|v| v * v).sum(),
            Self::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &ci| acc * x[0] + ci),
            Self::Custom { f, .. } => f(x),
        }
    }
}

/// `f(x)` with dimension and finiteness checks.
pub fn eval_observable(f: &Observable, x: &[f64]) -> Result<f64> {
    if x.len() < f.min_dim() {
        return Err(config(format!(
            "observable {} needs dimension {}, got {}",
            f.name(),
            f.min_dim(),
            x.len()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!("non-finite input to {}", f.name())));
    }
    Ok(f.value(x))
}

/// Law of the initial condition `x_0`.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialLaw {
    PointMass(Vec<f64>),
    Gaussian {
        mean: Vec<f64>,
        covariance: Vec<f64>,
        /// Lower-triangular factor `L` with `L Lᵀ = covariance`.
        factor: Vec<f64>,
    },
    /// Uniform resampling from stored atoms (row-major).
    Empirical {
        dim: usize,
        atoms: Vec<f64>,
    },
}

impl InitialLaw {
    pub fn point(x0: Vec<f64>) -> Result<Self> {
        if x0.is_empty() || x0.iter().any(|v| !v.is_finite()) {
            return Err(config("point mass needs a finite, non-empty location"));
        }
        Ok(Self::PointMass(x0))
    }

    /// Gaussian with row-major `d × d` covariance; must be symmetric positive semidefinite.
    pub fn gaussian(mean: Vec<f64>, covariance: Vec<f64>) -> Result<Self> {
        let d = mean.len();
        if d == 0 || covariance.len() != d * d {
            return Err(config(format!(
                "gaussian covariance must be {d}x{d}, got {} entries",
                covariance.len()
            )));
        }
        if mean.iter().chain(&covariance).any(|v| !v.is_finite()) {
            return Err(config("gaussian parameters must be finite"));
        }
        let scale = covariance.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for i in 0..d {
            for j in 0..i {
                if (covariance[i * d + j] - covariance[j * d + i]).abs() > 1e-12 * scale {
                    return Err(config("gaussian covariance is not symmetric"));
                }
            }
        }
        let factor = psd_cholesky(&covariance, d, 1e-12 * scale)?;
        Ok(Self::Gaussian {
            mean,
            covariance,
            factor,
        })
    }

    pub fn empirical(dim: usize, atoms: Vec<f64>) -> Result<Self> {
        if dim == 0 || atoms.is_empty() || !atoms.len().is_multiple_of(dim) {
            return Err(config(
                "empirical law needs at least one atom of the stated dimension",
            ));
        }
        if atoms.iter().any(|v| !v.is_finite()) {
            return Err(config("empirical law contains non-finite values"));
        }
        Ok(Self::Empirical { dim, atoms })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::PointMass(x) => x.len(),
            Self::Gaussian { mean, .. } => mean.len(),
            Self::Empirical { dim, .. } => *dim,
        }
    }

    /// First moment, used for analytic references.
    pub fn mean(&self) -> Vec<f64> {
        match self {
            Self::PointMass(x) => x.clone(),
            Self::Gaussian { mean, .. } => mean.clone(),
            Self::Empirical { dim, atoms } => {
                let count = (atoms.len() / dim) as f64;
                (0..*dim)
                    .map(|c| atoms.iter().skip(c).step_by(*dim).sum::<f64>() / count)
                    .collect()
            }
        }
    }

    /// Diagonal of the covariance.
    pub fn variance(&self) -> Vec<f64> {
        match self {
            Self::PointMass(x) => vec![0.0; x.len()],
            Self::Gaussian {
                mean, covariance, ..
            } => (0..mean.len())
                .map(|i| covariance[i * mean.len() + i])
                .collect(),
            Self::Empirical { dim, atoms } => {
                let m = self.mean();
                let count = (atoms.len() / dim) as f64;
                (0..*dim)
                    .map(|c| {
                        atoms
                            .iter()
                            .skip(c)
                            .step_by(*dim)
                            .map(|v| (v - m[c]) * (v - m[c]))
                            .sum::<f64>()
                            / count
                    })
                    .collect()
            }
        }
    }

    /// Draw one sample into `out`.
    pub fn sample_into(&self, rng: &mut RngStream, out: &mut [f64]) {
        match self {
            Self::PointMass(x) => out.copy_from_slice(x),
            Self::Gaussian { mean, factor, .. } => {
                let d = mean.len();
                let mut z = [0.0f64; 8];
                let mut heap;
                let z: &mut [f64] = if d <= z.len() {
                    &mut z[..d]
                } else {
                    heap = vec![0.0; d];
                    &mut heap
                };
                for zi in z.iter_mut() {
                    *zi = rng.normal();
                }
                for i in 0..d {
                    out[i] = mean[i] + (0..=i).map(|j| factor[i * d + j] * z[j]).sum::<f64>();
                }
            }
            Self::Empirical { dim, atoms } => {
                let k = rng.index(atoms.len() / dim);
                out.copy_from_slice(&atoms[k * dim..(k + 1) * dim]);
            }
        }
    }
}

fn psd_cholesky(a: &[f64], d: usize, tol: f64) -> Result<Vec<f64>> {
    let mut l = vec![0.0; d * d];
    for j in 0..d {
        let s = a[j * d + j] - (0..j).map(|k| l[j * d + k] * l[j * d + k]).sum::<f64>();
        if s < -tol {
            return Err(config("gaussian covariance is not positive semidefinite"));
        }
        if s <= tol {
            // degenerate direction: the remaining column must vanish
            for i in j + 1..d {
                let r = a[i * d + j] - (0..j).map(|k| l[i * d + k] * l[j * d + k]).sum::<f64>();
                if r.abs() > tol.max(1e-12) * 1e3 {
                    return Err(config("gaussian covariance is not positive semidefinite"));
                }
            }
            continue;
        }
        let diag = libm::sqrt(s);
        l[j * d + j] = diag;
        for i in j + 1..d {
            let r = a[i * d + j] - (0..j).map(|k| l[i * d + k] * l[j * d + k]).sum::<f64>();
            l[i * d + j] = r / diag;
        }
    }
    Ok(l)
}

/// `count` i.i.d. draws from `law`, in stream order.
pub fn sample_initial(
    law: &InitialLaw,
    count: usize,
    rng: &mut RngStream,
) -> Result<Vec<Vec<f64>>> {
    if count == 0 {
        return Err(precondition("sample count must be at least 1"));
    }
    Ok((0..count)
        .map(|_| {
            let mut x = vec![0.0; law.dim()];
            law.sample_into(rng, &mut x);
            x
        })
        .collect())
}

/// `dx = (−α x + β E[x]) dt + σ dw`, coordinatewise in dimension `dim`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearModel {
    pub alpha: f64,
    pub beta: f64,
    pub sigma: f64,
    pub dim: usize,
}

impl LinearModel {
    /// Ergodic linear mean-field model; requires `α > 0` and `α > β`.
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite()) {
            return Err(config("alpha and beta must be finite"));
        }
        if alpha <= 0.0 {
            return Err(config(format!("alpha must be positive, got {alpha}")));
        }
        if alpha <= beta {
            return Err(config(format!(
                "linear model is not ergodic: need alpha > beta, got alpha={alpha}, beta={beta}"
            )));
        }
        Ok(Self {
            alpha,
            beta,
            sigma: 1.0,
            dim: 1,
        })
    }

    pub fn with_sigma(mut self, sigma: f64) -> Result<Self> {
        if !sigma.is_finite() || sigma < 0.0 {
            return Err(config("sigma must be finite and nonnegative"));
        }
        self.sigma = sigma;
        Ok(self)
    }

    pub fn with_dim(mut self, dim: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(config("built-in linear model supports dimensions 1 to 3"));
        }
        self.dim = dim;
        Ok(self)
    }

    /// `b(x, y) = −α x + β y`.
    pub fn pairwise_kernel(&self) -> PairwiseKernel {
        let (a, b) = (self.alpha, self.beta);
        PairwiseKernel::new(self.dim, self.dim, move |x, y, out| {
            for ((o, xi), yi) in out.iter_mut().zip(x).zip(y) {
                *o = -a * xi + b * yi;
            }
        })
    }

    /// `h(y) = y`, `B(x, h̄) = −α x + β h̄`.
    pub fn feature_kernel(&self) -> FeatureKernel {
        let (a, b) = (self.alpha, self.beta);
        FeatureKernel::new(
            self.dim,
            self.dim,
            self.dim,
            |y, out| out.copy_from_slice(y),
            move |x, h, out| {
                for ((o, xi), hi) in out.iter_mut().zip(x).zip(h) {
                    *o = -a * xi + b * hi;
                }
            },
        )
    }

    pub fn split(&self) -> StructuralSplit {
        let (a, b) = (self.alpha, self.beta);
        StructuralSplit {
            confining: Arc::new(move |x, out| {
                for (o, xi) in out.iter_mut().zip(x) {
                    *o = -a * xi;
                }
            }),
            interaction: PairwiseKernel::new(self.dim, self.dim, move |_, y, out| {
                for (o, yi) in out.iter_mut().zip(y) {
                    *o = b * yi;
                }
            }),
        }
    }

    /// Model with the pairwise kernel as primary drift and the feature form as fast path.
    pub fn spec(&self, initial: InitialLaw) -> Result<ModelSpec> {
        let d = self.dim;
        let mut sigma = vec![0.0; d * d];
        for i in 0..d {
            sigma[i * d + i] = self.sigma;
        }
        ModelSpec::new(
            "linear",
            d,
            d,
            InteractionKernel::Pairwise(self.pairwise_kernel()),
            Diffusion::Constant(sigma),
            initial,
        )?
        .with_feature_form(self.feature_kernel())?
        .with_split(self.split())
    }
}

/// `b ≡ 0`, `σ ≡ 0`: particles never move.
pub fn zero_model(dim: usize, initial: InitialLaw) -> Result<ModelSpec> {
    ModelSpec::new(
        "zero",
        dim,
        dim,
        InteractionKernel::zero(dim, dim),
        Diffusion::Constant(vec![0.0; dim * dim]),
        initial,
    )?
    .with_feature_form(FeatureKernel::new(
        dim,
        1,
        dim,
        |_, out| out[0] = 0.0,
        |_, _, out| out.iter_mut().for_each(|o| *o = 0.0),
    ))
}

/// Scalar model `b(x, y) = P(x) + κ (y − x)` with `P(x) = Σ c_j x^j` and noise `σ`.
///
/// `P` is the confining part, `κ (y − x)` the mean-field attraction.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialModel {
    pub confining: Vec<f64>,
    pub coupling: f64,
    pub sigma: f64,
}

impl PolynomialModel {
    pub fn new(confining: Vec<f64>, coupling: f64, sigma: f64) -> Result<Self> {
        if confining.is_empty() {
            return Err(config("polynomial model needs at least one coefficient"));
        }
        if confining.iter().any(|c| !c.is_finite()) || !coupling.is_finite() || !sigma.is_finite() {
            return Err(config("polynomial model parameters must be finite"));
        }
        Ok(Self {
            confining,
            coupling,
            sigma,
        })
    }

    pub fn spec(&self, initial: InitialLaw) -> Result<ModelSpec> {
        let poly = self.confining.clone();
        let k = self.coupling;
        let p = move |x: f64| poly.iter().rev().fold(0.0, |acc, &c| acc * x + c);
        let (p1, p2, p3) = (p.clone(), p.clone(), p);
        ModelSpec::new(
            "polynomial",
            1,
            1,
            InteractionKernel::Pairwise(PairwiseKernel::new(1, 1, move |x, y, out| {
                out[0] = p1(x[0]) + k * (y[0] - x[0]);
            })),
            Diffusion::Constant(vec![self.sigma]),
            initial,
        )?
        .with_feature_form(FeatureKernel::new(
            1,
            1,
            1,
            |y, out| out[0] = y[0],
            move |x, h, out| out[0] = p2(x[0]) + k * (h[0] - x[0]),
        ))?
        .with_split(StructuralSplit {
            confining: Arc::new(move |x, out| out[0] = p3(x[0])),
            interaction: PairwiseKernel::new(1, 1, move |x, y, out| out[0] = k * (y[0] - x[0])),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamId;

    fn measure(atoms: &[f64]) -> EmpiricalMeasure<'_> {
        EmpiricalMeasure::new(1, atoms).unwrap()
    }

    #[test]
    fn linear_drift_single_atom() {
        let lin = LinearModel::new(1.0, 0.5).unwrap();
        let mut ledger = CostLedger::default();
        let out = eval_drift(
            &InteractionKernel::Pairwise(lin.pairwise_kernel()),
            &[2.0],
            &measure(&[2.0]),
            &mut ledger,
        )
        .unwrap();
        assert_eq!(out, vec![-1.0]);
        assert_eq!(ledger.kernel_evals, 1);
    }

    #[test]
    fn linear_drift_two_atoms() {
        let lin = LinearModel::new(1.0, 0.5).unwrap();
        let mut ledger = CostLedger::default();
        let k = InteractionKernel::Pairwise(lin.pairwise_kernel());
        let out = eval_drift(&k, &[0.0], &measure(&[1.0, 3.0]), &mut ledger).unwrap();
        assert_eq!(out, vec![1.0]);
        assert_eq!(ledger.kernel_evals, 2);

        let f = InteractionKernel::FeatureAverage(lin.feature_kernel());
        let mut ledger = CostLedger::default();
        let out = eval_drift(&f, &[0.0], &measure(&[1.0, 3.0]), &mut ledger).unwrap();
        assert_eq!(out, vec![1.0]);
        assert_eq!(ledger.kernel_evals, 3);
    }

    #[test]
    fn zero_kernel_gives_zero() {
        let mut ledger = CostLedger::default();
        let out = eval_drift(
            &InteractionKernel::zero(2, 2),
            &[5.0, -1.0],
            &EmpiricalMeasure::new(2, &[1.0, 2.0, 3.0, 4.0]).unwrap(),
            &mut ledger,
        )
        .unwrap();
        assert_eq!(out, vec![0.0, 0.0]);
    }

    #[test]
    fn drift_errors() {
        let k = InteractionKernel::zero(1, 1);
        let mut ledger = CostLedger::default();
        assert!(matches!(
            eval_drift(&k, &[1.0], &measure(&[]), &mut ledger),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            eval_drift(&k, &[1.0, 2.0], &measure(&[1.0]), &mut ledger),
            Err(Error::Config(_))
        ));
        assert!(EmpiricalMeasure::new(2, &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn observables() {
        assert_eq!(
            eval_observable(&Observable::SquaredNorm, &[3.0, 4.0]).unwrap(),
            25.0
        );
        assert_eq!(
            eval_observable(&Observable::Coordinate(0), &[7.0, 1.0]).unwrap(),
            7.0
        );
        assert_eq!(
            eval_observable(&Observable::Polynomial(vec![1.0, 2.0]), &[3.0]).unwrap(),
            7.0
        );
        assert!(matches!(
            eval_observable(&Observable::SquaredNorm, &[f64::NAN]),
            Err(Error::Numeric(_))
        ));
        assert!(eval_observable(&Observable::Coordinate(2), &[1.0]).is_err());
    }

    #[test]
    fn linear_model_rejects_non_ergodic() {
        assert!(LinearModel::new(0.5, 1.0).is_err());
        assert!(LinearModel::new(1.0, 1.0).is_err());
        assert!(LinearModel::new(0.0, -1.0).is_err());
    }

    #[test]
    fn initial_samples() {
        let mut rng = RngStream::new(1, StreamId::new(0, 0));
        let pm = InitialLaw::point(vec![1.5]).unwrap();
        assert_eq!(
            sample_initial(&pm, 3, &mut rng).unwrap(),
            vec![vec![1.5]; 3]
        );
        let g0 = InitialLaw::gaussian(vec![0.0], vec![0.0]).unwrap();
        assert_eq!(
            sample_initial(&g0, 2, &mut rng).unwrap(),
            vec![vec![0.0]; 2]
        );
        assert!(sample_initial(&pm, 0, &mut rng).is_err());
    }

    #[test]
    fn gaussian_sample_mean_within_clt_bound() {
        let g = InitialLaw::gaussian(vec![0.0], vec![1.0]).unwrap();
        let mut rng = RngStream::new(2024, StreamId::new(0, 0));
        let xs = sample_initial(&g, 100_000, &mut rng).unwrap();
        let m = xs.iter().map(|x| x[0]).sum::<f64>() / xs.len() as f64;
        assert!(m.abs() < 0.02, "sample mean {m}");
    }

    #[test]
    fn gaussian_covariance_validation() {
        assert!(InitialLaw::gaussian(vec![0.0, 0.0], vec![1.0, 2.0, 2.0, 1.0]).is_err());
        assert!(InitialLaw::gaussian(vec![0.0, 0.0], vec![1.0, 0.5, 0.4, 1.0]).is_err());
        assert!(InitialLaw::gaussian(vec![0.0, 0.0], vec![1.0, 1.0, 1.0, 1.0]).is_ok());
        assert!(InitialLaw::gaussian(vec![0.0], vec![-1.0]).is_err());
    }

    #[test]
    fn correlated_gaussian_reproduces_covariance() {
        let g = InitialLaw::gaussian(vec![1.0, -1.0], vec![2.0, 0.6, 0.6, 1.0]).unwrap();
        let mut rng = RngStream::new(5, StreamId::new(0, 0));
        let xs = sample_initial(&g, 50_000, &mut rng).unwrap();
        let n = xs.len() as f64;
        let m0 = xs.iter().map(|x| x[0]).sum::<f64>() / n;
        let m1 = xs.iter().map(|x| x[1]).sum::<f64>() / n;
        let c01 = xs.iter().map(|x| (x[0] - m0) * (x[1] - m1)).sum::<f64>() / n;
        assert!((m0 - 1.0).abs() < 0.03 && (m1 + 1.0).abs() < 0.03);
        assert!((c01 - 0.6).abs() < 0.05, "cov {c01}");
    }

    #[test]
    fn empirical_law_resamples_atoms() {
        let law = InitialLaw::empirical(1, vec![2.0, 4.0]).unwrap();
        let mut rng = RngStream::new(9, StreamId::new(0, 0));
        let xs = sample_initial(&law, 200, &mut rng).unwrap();
        assert!(xs.iter().all(|x| x[0] == 2.0 || x[0] == 4.0));
        assert!(xs.iter().any(|x| x[0] == 2.0) && xs.iter().any(|x| x[0] == 4.0));
        assert_eq!(law.mean(), vec![3.0]);
        assert_eq!(law.variance(), vec![1.0]);
    }

    #[test]
    fn split_matches_drift() {
        let lin = LinearModel::new(1.0, 0.5).unwrap();
        let spec = lin.spec(InitialLaw::point(vec![1.0]).unwrap()).unwrap();
        let atoms = [0.3, -1.2, 2.5];
        assert!(spec.split_deviation(&[0.7], &measure(&atoms)).unwrap() <= 1e-12);
        let poly = PolynomialModel::new(vec![0.0, 1.0, 0.0, -1.0], 0.3, 1.0).unwrap();
        let spec = poly.spec(InitialLaw::point(vec![0.0]).unwrap()).unwrap();
        assert!(spec.split_deviation(&[0.7], &measure(&atoms)).unwrap() <= 1e-12);
    }

    #[test]
    fn model_dimension_checks() {
        let init = InitialLaw::point(vec![0.0, 0.0]).unwrap();
        assert!(ModelSpec::new(
            "bad",
            1,
            1,
            InteractionKernel::zero(1, 1),
            Diffusion::Constant(vec![1.0]),
            init.clone()
        )
        .is_err());
        assert!(ModelSpec::new(
            "bad",
            2,
            2,
            InteractionKernel::zero(2, 2),
            Diffusion::Constant(vec![1.0]),
            init
        )
        .is_err());
    }
}
