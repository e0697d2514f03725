use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::Partition;
use crate::measure::UrnModel;

use super::rng::{categorical, UniformSource};

/// Default stick truncation threshold.
pub const DEFAULT_EPS: f64 = 1e-8;

/// Inverse CDF of Beta(1, α): `1 - (1 - u)^(1/α)`.
pub fn beta_stick(u: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidAlpha(alpha));
    }
    if !(0.0..1.0).contains(&u) {
        return Err(Error::InvalidUniform(u));
    }
    Ok(1.0 - (1.0 - u).powf(1.0 / alpha))
}

/// Truncated draw of `Σⱼ Vⱼ R_{Zⱼ}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RandomMeasureDraw {
    /// Stick fractions `Wⱼ`.
    pub sticks: Vec<f64>,
    /// `Vⱼ = Wⱼ Π_{i<j} (1 - Wᵢ)`.
    pub weights: Vec<f64>,
    /// Colors `Zⱼ`.
    pub sources: Vec<usize>,
    /// `Π (1 - Wⱼ)`, the stick left over at truncation.
    pub truncation_mass: f64,
    /// `Σ Vⱼ R̃_{Zⱼ} / Σ Vⱼ` with unit-mass rows `R̃`.
    pub composite: Vec<f64>,
}

impl RandomMeasureDraw {
    pub fn total_weight(&self) -> f64 {
        crate::scalar::compensated_sum(self.weights.iter().copied())
    }

    /// Composite mass of each block.
    pub fn block_masses(&self, partition: &Partition) -> Vec<f64> {
        partition
            .blocks()
            .iter()
            .map(|b| b.iter().map(|&c| self.composite[c]).sum())
            .collect()
    }
}

/// Stick-breaking draw with concentration `theta_over_m`, atoms `Zⱼ ~ ν`, and
/// truncation once the remaining stick drops below `eps`.
///
/// Each stick consumes two variates: one for `Wⱼ`, then one for `Zⱼ`. Rows of
/// `model` are rescaled to unit mass before forming the composite.
pub fn stick_breaking<U: UniformSource>(
    theta_over_m: f64,
    model: &UrnModel<f64>,
    eps: f64,
    rng: &mut U,
) -> Result<RandomMeasureDraw> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::NonPositiveEps(eps));
    }
    let k = model.k();
    let nu = model.nu().weights();
    let nu_total: f64 = nu.iter().sum();

    let mut sticks = Vec::new();
    let mut weights = Vec::new();
    let mut sources = Vec::new();
    let mut remaining = 1.0_f64;
    while remaining >= eps {
        let w = beta_stick(rng.next_uniform(), theta_over_m)?;
        let z = categorical(nu, nu_total, rng.next_uniform());
        sticks.push(w);
        weights.push(w * remaining);
        sources.push(z);
        remaining *= 1.0 - w;
    }

    let mut composite = vec![0.0; k];
    for (&v, &z) in weights.iter().zip(&sources) {
        let row = model.kernel().normalized_row(z)?;
        for (c, r) in composite.iter_mut().zip(row) {
            *c += v * r;
        }
    }
    let total = crate::scalar::compensated_sum(weights.iter().copied());
    for c in &mut composite {
        *c /= total;
    }

    Ok(RandomMeasureDraw {
        sticks,
        weights,
        sources,
        truncation_mass: remaining,
        composite,
    })
}
