//! Small numeric helpers shared by the simulation engine and the planner.

use alloc::vec::Vec;

/// Correctly rounded floating-point summation (Shewchuk partials).
///
/// The result does not depend on the order in which terms are added, which is
/// what makes particle dynamics exactly exchangeable: permuting particles
/// permutes the output bit for bit.
#[derive(Debug, Clone, Default)]
pub struct ExactSum {
    partials: Vec<f64>,
    non_finite: f64,
    saw_non_finite: bool,
}

impl ExactSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn clear(&mut self) {
        self.partials.clear();
        self.non_finite = 0.0;
        self.saw_non_finite = false;
    }

    pub fn add(&mut self, value: f64) {
        if !value.is_finite() {
            self.saw_non_finite = true;
            self.non_finite += value;
            return;
        }
        let mut x = value;
        let mut kept = 0;
        for idx in 0..self.partials.len() {
            let mut y = self.partials[idx];
            if libm::fabs(x) < libm::fabs(y) {
                core::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                self.partials[kept] = lo;
                kept += 1;
            }
            x = hi;
        }
        self.partials.truncate(kept);
        self.partials.push(x);
    }

    /// The correctly rounded value of the sum of all terms added so far.
    pub fn value(&self) -> f64 {
        if self.saw_non_finite {
            return self.non_finite;
        }
        let p = &self.partials;
        let mut n = p.len();
        if n == 0 {
            return 0.0;
        }
        n -= 1;
        let mut hi = p[n];
        let mut lo = 0.0;
        while n > 0 {
            let x = hi;
            n -= 1;
            let y = p[n];
            hi = x + y;
            let yr = hi - x;
            lo = y - yr;
            if lo != 0.0 {
                break;
            }
        }
        // half-way case: the remaining partials decide the rounding direction
        if n > 0 && ((lo < 0.0 && p[n - 1] < 0.0) || (lo > 0.0 && p[n - 1] > 0.0)) {
            let y = lo * 2.0;
            let x = hi + y;
            let yr = x - hi;
            if y == yr {
                hi = x;
            }
        }
        hi
    }
}

/// Correctly rounded sum of a slice.
pub fn exact_sum(values: &[f64]) -> f64 {
    let mut acc = ExactSum::new();
    for &v in values {
        acc.add(v);
    }
    acc.value()
}

const ROUNDING_SLACK: f64 = 1e-9;

/// `ceil(x)`, except that values within a relative 1e-9 of an integer snap to
/// that integer. Keeps `ceil(1/0.05) == 20` despite representation error.
pub fn ceil_tol(x: f64) -> f64 {
    let r = libm::round(x);
    if libm::fabs(x - r) <= ROUNDING_SLACK * r.abs().max(1.0) {
        r
    } else {
        libm::ceil(x)
    }
}

/// `floor(x)` with the same snapping rule as [`ceil_tol`].
pub fn floor_tol(x: f64) -> f64 {
    let r = libm::round(x);
    if libm::fabs(x - r) <= ROUNDING_SLACK * r.abs().max(1.0) {
        r
    } else {
        libm::floor(x)
    }
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Unbiased sample variance; zero for fewer than two values.
pub fn sample_variance(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64
}

/// Ordinary least squares line through `(x, y)`: returns (slope, intercept, r²).
pub(crate) fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let r2 = if syy <= f64::EPSILON * f64::EPSILON * n {
        1.0
    } else {
        let ss_res: f64 = xs
            .iter()
            .zip(ys)
            .map(|(&x, &y)| {
                let e = y - (intercept + slope * x);
                e * e
            })
            .sum();
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    (slope, intercept, r2)
}
