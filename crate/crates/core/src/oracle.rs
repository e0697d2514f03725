//! Exact finite-depth laws of an urn sequence.
//!
//! Everything here is enumeration: the joint pmf of `(X₁,…,Xₙ)` is the product
//! of predictives along each of the `kⁿ` paths. With a rational scalar the
//! results are exact.

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::measure::UrnModel;
use crate::scalar::{abs_diff, Scalar, Tolerance};

/// Default number of paths an enumeration may visit.
pub const DEFAULT_BUDGET: u128 = 1_000_000;
/// Default enumeration depth for exchangeability checks.
pub const DEFAULT_DEPTH: usize = 4;

/// Predictive law of the next color given `history`:
/// `(θν + Σᵢ R_{hᵢ}) / (θ + Σᵢ R_{hᵢ}(X))`.
pub fn predictive_exact<S: Scalar>(model: &UrnModel<S>, history: &[usize]) -> Result<Vec<S>> {
    let mut urn = initial_urn(model);
    let mut total = model.theta().clone();
    for &h in history {
        if h >= model.k() {
            return Err(Error::UnknownColor(h));
        }
        reinforce(model, &mut urn, &mut total, h);
    }
    Ok(urn.into_iter().map(|w| w / total.clone()).collect())
}

fn initial_urn<S: Scalar>(model: &UrnModel<S>) -> Vec<S> {
    model
        .nu()
        .weights()
        .iter()
        .map(|w| model.theta().clone() * w.clone())
        .collect()
}

fn reinforce<S: Scalar>(model: &UrnModel<S>, urn: &mut [S], total: &mut S, color: usize) {
    let row = model.kernel().row(color);
    for (u, r) in urn.iter_mut().zip(row) {
        *u = u.clone() + r.clone();
    }
    *total = total.clone() + model.kernel().row_mass(color);
}

/// Probabilities of every color sequence of a fixed length, indexed in
/// lexicographic order (`x₁` most significant).
#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf<S> {
    k: usize,
    depth: usize,
    probs: Vec<S>,
}

impl<S: Scalar> JointPmf<S> {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn probs(&self) -> &[S] {
        &self.probs
    }

    pub fn index_of(&self, sequence: &[usize]) -> Option<usize> {
        if sequence.len() != self.depth {
            return None;
        }
        sequence
            .iter()
            .try_fold(0usize, |acc, &c| (c < self.k).then_some(acc * self.k + c))
    }

    pub fn sequence_at(&self, mut index: usize) -> Vec<usize> {
        let mut seq = vec![0; self.depth];
        for slot in seq.iter_mut().rev() {
            *slot = index % self.k;
            index /= self.k;
        }
        seq
    }

    pub fn prob(&self, sequence: &[usize]) -> Option<&S> {
        self.index_of(sequence).map(|i| &self.probs[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (Vec<usize>, &S)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, p)| (self.sequence_at(i), p))
    }

    pub fn total(&self) -> S {
        crate::scalar::sum(&self.probs)
    }

    /// Law of the first `depth - 1` coordinates.
    pub fn marginalize_last(&self) -> Option<JointPmf<S>> {
        if self.depth <= 1 {
            return None;
        }
        let probs = self.probs.chunks(self.k).map(crate::scalar::sum).collect();
        Some(JointPmf {
            k: self.k,
            depth: self.depth - 1,
            probs,
        })
    }
}

/// Joint pmf at depth `n` with the default path budget.
pub fn joint_pmf<S: Scalar>(model: &UrnModel<S>, n: usize) -> Result<JointPmf<S>> {
    joint_pmf_with_budget(model, n, DEFAULT_BUDGET)
}

pub fn joint_pmf_with_budget<S: Scalar>(
    model: &UrnModel<S>,
    n: usize,
    budget: u128,
) -> Result<JointPmf<S>> {
    if n == 0 {
        return Err(Error::ZeroDepth);
    }
    let k = model.k();
    let needed = (k as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let first = predictive_exact(model, &[])?;
    // branches of the first coordinate are independent
    let branches: Vec<Vec<S>> = (0..k)
        .into_par_iter()
        .map(|x1| {
            let mut urn = initial_urn(model);
            let mut total = model.theta().clone();
            reinforce(model, &mut urn, &mut total, x1);
            let mut out = Vec::with_capacity(needed as usize / k);
            enumerate(model, &urn, &total, first[x1].clone(), n - 1, &mut out);
            out
        })
        .collect();
    Ok(JointPmf {
        k,
        depth: n,
        probs: branches.into_iter().flatten().collect(),
    })
}

fn enumerate<S: Scalar>(
    model: &UrnModel<S>,
    urn: &[S],
    total: &S,
    prob: S,
    remaining: usize,
    out: &mut Vec<S>,
) {
    if remaining == 0 {
        out.push(prob);
        return;
    }
    for color in 0..model.k() {
        let step = prob.clone() * urn[color].clone() / total.clone();
        if remaining == 1 {
            out.push(step);
            continue;
        }
        let mut next = urn.to_vec();
        let mut next_total = total.clone();
        reinforce(model, &mut next, &mut next_total, color);
        enumerate(model, &next, &next_total, step, remaining - 1, out);
    }
}

/// A sequence whose probability differs from that of its sorted rearrangement.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleWitness<S> {
    pub depth: usize,
    pub sequence: Vec<usize>,
    pub permuted: Vec<usize>,
    pub residual: S,
}

/// Result of a finite-depth permutation-invariance check.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthCheck<S> {
    pub depth: usize,
    /// Largest `|p(x) - p(sort(x))|` at each depth `1..=depth`.
    pub residual_by_depth: Vec<S>,
    /// Largest residual at the shallowest violating depth.
    pub witness: Option<OracleWitness<S>>,
    /// Largest `|Σ_last p_n - p_{n-1}|` across depths.
    pub marginal_residual: S,
}

impl<S: Scalar> DepthCheck<S> {
    pub fn passed(&self) -> bool {
        self.witness.is_none()
    }

    pub fn max_residual(&self) -> S {
        self.residual_by_depth
            .iter()
            .fold(S::zero(), |acc, r| if *r > acc { r.clone() } else { acc })
    }

    pub fn violation_depth(&self) -> Option<usize> {
        self.witness.as_ref().map(|w| w.depth)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "depth": self.depth,
            "pass": self.passed(),
            "exact": S::EXACT,
            "max_residual": self.max_residual().to_json(),
            "residual_by_depth": self.residual_by_depth.iter().map(Scalar::to_json).collect::<Vec<_>>(),
            "marginal_residual": self.marginal_residual.to_json(),
            "violation_depth": self.violation_depth(),
            "witness": self.witness.as_ref().map(|w| json!({
                "depth": w.depth,
                "sequence": w.sequence,
                "permuted": w.permuted,
                "residual": w.residual.to_json(),
            })),
        })
    }
}

/// Checks that the joint law at every depth `≤ n` is invariant under
/// permutations, comparing each sequence against its sorted rearrangement.
pub fn exchangeability_depth_check<S: Scalar>(
    model: &UrnModel<S>,
    n: usize,
    tol: &Tolerance,
) -> Result<DepthCheck<S>> {
    exchangeability_depth_check_with_budget(model, n, tol, DEFAULT_BUDGET)
}

pub fn exchangeability_depth_check_with_budget<S: Scalar>(
    model: &UrnModel<S>,
    n: usize,
    tol: &Tolerance,
    budget: u128,
) -> Result<DepthCheck<S>> {
    let deepest = joint_pmf_with_budget(model, n, budget)?;
    let mut laws = vec![deepest];
    while let Some(next) = laws.last().and_then(JointPmf::marginalize_last) {
        laws.push(next);
    }
    laws.reverse();

    let mut marginal_residual = S::zero();
    for pair in laws.windows(2) {
        // recomputing the shallower law directly guards the bookkeeping
        let direct = joint_pmf_with_budget(model, pair[0].depth, budget)?;
        for (a, b) in direct.probs.iter().zip(&pair[0].probs) {
            let r = abs_diff(a, b);
            if r > marginal_residual {
                marginal_residual = r;
            }
        }
    }

    let mut residual_by_depth = Vec::with_capacity(n);
    let mut witness = None;
    for law in &laws {
        let mut worst: Option<(usize, Vec<usize>, S)> = None;
        let mut max = S::zero();
        let mut violated = false;
        for (i, p) in law.probs.iter().enumerate() {
            let seq = law.sequence_at(i);
            let mut sorted = seq.clone();
            sorted.sort_unstable();
            if sorted == seq {
                continue;
            }
            let q = law.prob(&sorted).expect("sorted sequence is in range");
            let r = abs_diff(p, q);
            if !p.within(q, tol) {
                violated = true;
            }
            if r > max {
                max = r.clone();
                worst = Some((i, sorted, r));
            }
        }
        if violated && witness.is_none() {
            let (i, permuted, residual) = worst.expect("a violation has a positive residual");
            witness = Some(OracleWitness {
                depth: law.depth,
                sequence: law.sequence_at(i),
                permuted,
                residual,
            });
        }
        residual_by_depth.push(max);
    }

    Ok(DepthCheck {
        depth: n,
        residual_by_depth,
        witness,
        marginal_residual,
    })
}
