use crate::error::{Error, Result};

use super::rng::UniformSource;

/// Path of the singular/absolutely-continuous example on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridPath {
    pub theta: f64,
    pub s: f64,
    pub values: Vec<f64>,
    /// Entry `t` is `P(X_{t+1} ∈ [0, s) | X₁..X_t)`.
    pub in_s_predictive: Vec<f64>,
}

impl HybridPath {
    pub fn fraction_in_s(&self) -> f64 {
        self.values.iter().filter(|&&v| v < self.s).count() as f64 / self.values.len() as f64
    }
}

/// Simulates the urn sequence with `ν = Uniform[0,1]`, `R_x = δ_x` for
/// `x < s` and `R_x = Uniform[s,1]` otherwise.
///
/// Step `t + 1` draws fresh from `ν` with probability `θ/(θ+t)`; otherwise it
/// picks a past index uniformly and copies that value if it lies below `s`,
/// or draws fresh from `[s, 1)` if not. Copies reproduce the stored bits.
pub fn hybrid_example_path<U: UniformSource>(
    theta: f64,
    s: f64,
    n: usize,
    rng: &mut U,
) -> Result<HybridPath> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidS(s));
    }
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(Error::InvalidTheta(theta));
    }
    if n == 0 {
        return Err(Error::ZeroLength);
    }
    let mut values: Vec<f64> = Vec::with_capacity(n);
    let mut in_s_predictive = Vec::with_capacity(n);
    let mut in_s = 0usize;
    for t in 0..n {
        let tf = t as f64;
        in_s_predictive.push((theta * s + in_s as f64) / (theta + tf));
        let value = if rng.next_uniform() * (theta + tf) < theta {
            rng.next_uniform()
        } else {
            let i = ((rng.next_uniform() * tf) as usize).min(t - 1);
            let past = values[i];
            if past < s {
                past
            } else {
                s + (1.0 - s) * rng.next_uniform()
            }
        };
        if value < s {
            in_s += 1;
        }
        values.push(value);
    }
    Ok(HybridPath {
        theta,
        s,
        values,
        in_s_predictive,
    })
}
