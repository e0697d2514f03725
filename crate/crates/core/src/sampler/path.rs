use crate::error::{Error, Result};
use crate::measure::UrnModel;

use super::rng::{categorical, UniformSource};

/// Running urn composition `θν + Σ R_{Xᵢ}` and its total mass.
#[derive(Debug, Clone)]
pub struct UrnState<'a> {
    model: &'a UrnModel<f64>,
    urn: Vec<f64>,
    total: f64,
    observed: usize,
}

impl<'a> UrnState<'a> {
    pub fn new(model: &'a UrnModel<f64>) -> Self {
        let theta = *model.theta();
        Self {
            urn: model.nu().weights().iter().map(|w| theta * w).collect(),
            total: theta,
            model,
            observed: 0,
        }
    }

    /// Number of colors observed so far.
    pub fn observed(&self) -> usize {
        self.observed
    }

    pub fn composition(&self) -> &[f64] {
        &self.urn
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    /// Predictive law of the next color.
    pub fn predictive(&self) -> Vec<f64> {
        self.urn.iter().map(|w| w / self.total).collect()
    }

    pub fn draw<U: UniformSource>(&self, rng: &mut U) -> usize {
        categorical(&self.urn, self.total, rng.next_uniform())
    }

    pub fn observe(&mut self, color: usize) {
        let row = self.model.kernel().row(color);
        for (u, r) in self.urn.iter_mut().zip(row) {
            *u += r;
        }
        self.total += self.model.kernel().row_mass(color);
        self.observed += 1;
    }

    /// Draws the next color and reinforces the urn with it.
    pub fn step<U: UniformSource>(&mut self, rng: &mut U) -> usize {
        let color = self.draw(rng);
        self.observe(color);
        color
    }
}

/// A realized sequence together with the predictive used at each step.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub colors: Vec<usize>,
    /// Entry `t` is the law `colors[t]` was drawn from.
    pub predictive_trace: Vec<Vec<f64>>,
}

/// Simulates `n` steps of the urn sequence.
pub fn sample_path<U: UniformSource>(
    model: &UrnModel<f64>,
    n: usize,
    rng: &mut U,
) -> Result<PathSample> {
    if n == 0 {
        return Err(Error::ZeroLength);
    }
    let mut state = UrnState::new(model);
    let mut colors = Vec::with_capacity(n);
    let mut predictive_trace = Vec::with_capacity(n);
    for _ in 0..n {
        predictive_trace.push(state.predictive());
        colors.push(state.step(rng));
    }
    Ok(PathSample {
        colors,
        predictive_trace,
    })
}

/// Per-color counts of a path of length `n`, without recording the trace.
pub fn sample_counts<U: UniformSource>(
    model: &UrnModel<f64>,
    n: usize,
    rng: &mut U,
) -> Result<Vec<usize>> {
    if n == 0 {
        return Err(Error::ZeroLength);
    }
    let mut state = UrnState::new(model);
    let mut counts = vec![0; model.k()];
    for _ in 0..n {
        counts[state.step(rng)] += 1;
    }
    Ok(counts)
}
