use crate::error::{Error, Result};
use crate::kernel::{block_measure, Verdict};

use super::rng::{categorical, UniformSource};

/// Block labels `ξₙ` and colors `Xₙ` of the Dirichlet-process mixture form.
#[derive(Debug, Clone, PartialEq)]
pub struct MixturePath {
    pub labels: Vec<usize>,
    pub colors: Vec<usize>,
}

/// Simulates the mixture representation of an exchangeable model: labels follow
/// a Pólya sequence on the blocks with parameters `(θ/m, ν*)`, `ν*(k) = ν(D_k)`,
/// and each color is drawn from `ν(·|D_ξ)`.
///
/// Indices refer to the validated model carried by the verdict.
pub fn dp_mixture_path<U: UniformSource>(
    verdict: &Verdict<f64>,
    n: usize,
    rng: &mut U,
) -> Result<MixturePath> {
    let (Some(partition), Some(model)) = (verdict.partition.as_ref(), verdict.normalized.as_ref())
    else {
        return Err(Error::MissingPartition);
    };
    if !verdict.is_exchangeable() {
        return Err(Error::MissingPartition);
    }
    if n == 0 {
        return Err(Error::ZeroLength);
    }
    let concentration = *model.theta();
    let nu = model.nu();
    let block_nu = block_measure(nu, partition);
    let conditionals: Vec<Vec<f64>> = partition
        .blocks()
        .iter()
        .map(|b| b.iter().map(|&c| nu.weights()[c]).collect())
        .collect();

    let mut urn: Vec<f64> = block_nu.iter().map(|w| concentration * w).collect();
    let mut total = concentration;
    let mut labels = Vec::with_capacity(n);
    let mut colors = Vec::with_capacity(n);
    for _ in 0..n {
        let label = categorical(&urn, total, rng.next_uniform());
        urn[label] += 1.0;
        total += 1.0;
        let within = &conditionals[label];
        let pick = categorical(within, block_nu[label], rng.next_uniform());
        labels.push(label);
        colors.push(partition.blocks()[label][pick]);
    }
    Ok(MixturePath { labels, colors })
}
