//! Exact classification of finite-color reinforcement kernels.
//!
//! A finite-color urn sequence is exchangeable exactly when it is i.i.d.
//! (every normalized row equals the base measure) or when it is balanced and
//! each normalized row is the base measure conditioned on the block of a
//! partition containing that row's color. [`classify`] decides which case
//! applies and, when none does, returns a [`Witness`] naming the failed check.

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::measure::{tv_distance, validate_model, FiniteMeasure, ReinforcementKernel, UrnModel};
use crate::scalar::{abs_diff, Scalar, Tolerance};

/// Row masses `R_x(X)` and whether they agree.
#[derive(Debug, Clone, PartialEq)]
pub struct BalanceProfile<S> {
    pub row_masses: Vec<S>,
    pub balanced: bool,
    /// Common row mass, present iff `balanced`.
    pub m: Option<S>,
}

impl<S: Scalar> BalanceProfile<S> {
    /// Colors carrying the smallest and the largest row mass.
    pub fn extremes(&self) -> (usize, usize) {
        let mut low = 0;
        let mut high = 0;
        for (i, mass) in self.row_masses.iter().enumerate() {
            if *mass < self.row_masses[low] {
                low = i;
            }
            if *mass > self.row_masses[high] {
                high = i;
            }
        }
        (low, high)
    }

    fn unbalanced_error(&self) -> Error {
        let (low, high) = self.extremes();
        Error::Unbalanced {
            low_color: low,
            low: self.row_masses[low].to_f64(),
            high_color: high,
            high: self.row_masses[high].to_f64(),
        }
    }
}

pub fn balance_profile<S: Scalar>(model: &UrnModel<S>) -> BalanceProfile<S> {
    balance_profile_with(model, &Tolerance::default())
}

pub fn balance_profile_with<S: Scalar>(model: &UrnModel<S>, tol: &Tolerance) -> BalanceProfile<S> {
    let kernel = model.kernel();
    let row_masses: Vec<S> = (0..model.k()).map(|i| kernel.row_mass(i)).collect();
    let first = row_masses[0].clone();
    let balanced = first > S::zero() && row_masses.iter().all(|m| m.within(&first, tol));
    BalanceProfile {
        m: balanced.then_some(first),
        row_masses,
        balanced,
    }
}

/// `true` iff every normalized row equals the base measure.
pub fn is_iid<S: Scalar>(model: &UrnModel<S>) -> bool {
    is_iid_with(model, &Tolerance::default())
}

pub fn is_iid_with<S: Scalar>(model: &UrnModel<S>, tol: &Tolerance) -> bool {
    let nu = model.nu().weights();
    (0..model.k()).all(|i| match model.kernel().normalized_row(i) {
        Ok(row) => row.iter().zip(nu).all(|(a, b)| a.within(b, tol)),
        Err(_) => false,
    })
}

/// Disjoint, covering blocks of color indices.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
#[serde(transparent)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    /// Builds a partition of `0..k`; blocks are sorted internally and ordered
    /// by their smallest element.
    pub fn new(mut blocks: Vec<Vec<usize>>, k: usize) -> Result<Self> {
        let mut seen = vec![false; k];
        for block in &mut blocks {
            if block.is_empty() {
                return Err(Error::InvalidParameter("empty partition block".into()));
            }
            block.sort_unstable();
            for &c in block.iter() {
                if c >= k {
                    return Err(Error::UnknownColor(c));
                }
                if std::mem::replace(&mut seen[c], true) {
                    return Err(Error::InvalidParameter(format!(
                        "color {c} appears in two blocks"
                    )));
                }
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidParameter(format!(
                "color {missing} is not covered by the partition"
            )));
        }
        blocks.sort_unstable_by_key(|b| b[0]);
        Ok(Self { blocks })
    }

    pub fn single_block(k: usize) -> Self {
        Self {
            blocks: vec![(0..k).collect()],
        }
    }

    pub fn singletons(k: usize) -> Self {
        Self {
            blocks: (0..k).map(|i| vec![i]).collect(),
        }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Number of colors covered.
    pub fn colors(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    /// Block index of every color.
    pub fn assignment(&self) -> Vec<usize> {
        let mut out = vec![0; self.colors()];
        for (b, block) in self.blocks.iter().enumerate() {
            for &c in block {
                out[c] = b;
            }
        }
        out
    }

    pub fn block_of(&self, color: usize) -> Option<usize> {
        self.blocks.iter().position(|b| b.contains(&color))
    }

    /// The same partition expressed after relabeling colors with `perm`
    /// (new color `i` is old color `perm[i]`).
    pub fn relabeled(&self, perm: &[usize]) -> Self {
        let mut inverse = vec![0; perm.len()];
        for (new, &old) in perm.iter().enumerate() {
            inverse[old] = new;
        }
        let blocks = self
            .blocks
            .iter()
            .map(|b| b.iter().map(|&c| inverse[c]).collect())
            .collect();
        Self::new(blocks, perm.len()).expect("relabeling preserves a partition")
    }
}

/// Concrete failed check backing a `NotExchangeable` verdict.
#[derive(Debug, Clone, PartialEq)]
pub enum Witness<S> {
    /// Row masses differ and the kernel is not i.i.d.
    Unbalanced {
        low_color: usize,
        low: S,
        high_color: usize,
        high: S,
    },
    /// A surviving color reinforces a base-measure-null color.
    MassLeak { from: usize, to: usize, mass: S },
    /// Normalized row of `color` differs from the base measure conditioned on
    /// the row's support.
    ConditionalMismatch {
        color: usize,
        support: Vec<usize>,
        residual: S,
    },
    /// Colors sharing a row do not coincide with that row's support.
    SupportMismatch {
        color: usize,
        block: Vec<usize>,
        support: Vec<usize>,
        residual: S,
    },
    /// `ν_i R_i(j) ≠ ν_j R_j(i)`.
    DetailedBalance { i: usize, j: usize, residual: S },
    /// `R_x(y) R_y(z) ≠ R_x(z) R_z(y)`.
    TwoStep {
        x: usize,
        y: usize,
        z: usize,
        residual: S,
    },
}

impl<S: Scalar> Witness<S> {
    pub fn residual(&self) -> S {
        match self {
            Witness::Unbalanced { low, high, .. } => abs_diff(high, low),
            Witness::MassLeak { mass, .. } => mass.clone(),
            Witness::ConditionalMismatch { residual, .. }
            | Witness::SupportMismatch { residual, .. }
            | Witness::DetailedBalance { residual, .. }
            | Witness::TwoStep { residual, .. } => residual.clone(),
        }
    }

    pub fn check_name(&self) -> &'static str {
        match self {
            Witness::Unbalanced { .. } => "balance",
            Witness::MassLeak { .. } => "mass_leak",
            Witness::ConditionalMismatch { .. } => "conditional_row",
            Witness::SupportMismatch { .. } => "block_support",
            Witness::DetailedBalance { .. } => "detailed_balance",
            Witness::TwoStep { .. } => "two_step",
        }
    }

    pub fn to_json(&self) -> Value {
        let mut out = match self {
            Witness::Unbalanced {
                low_color,
                low,
                high_color,
                high,
            } => json!({
                "low_color": low_color, "low_mass": low.to_json(),
                "high_color": high_color, "high_mass": high.to_json(),
                "reason": "exchangeable sequences with unbalanced reinforcement are i.i.d.; this kernel is neither balanced nor i.i.d.",
            }),
            Witness::MassLeak { from, to, mass } => {
                json!({ "from": from, "to": to, "mass": mass.to_json() })
            }
            Witness::ConditionalMismatch { color, support, .. } => {
                json!({ "color": color, "support": support })
            }
            Witness::SupportMismatch {
                color,
                block,
                support,
                ..
            } => json!({ "color": color, "block": block, "support": support }),
            Witness::DetailedBalance { i, j, .. } => json!({ "i": i, "j": j }),
            Witness::TwoStep { x, y, z, .. } => json!({ "x": x, "y": y, "z": z }),
        };
        out["check"] = json!(self.check_name());
        out["residual"] = self.residual().to_json();
        out
    }
}

/// Outcome of one symmetry identity over all index tuples.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityCheck<S> {
    pub holds: bool,
    pub max_residual: S,
    /// Index tuple attaining `max_residual` (first in iteration order on ties).
    pub indices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryReport<S> {
    /// `ν_i R_i(j) = ν_j R_j(i)` for all `i, j`.
    pub detailed_balance: IdentityCheck<S>,
    /// `R_x(y) R_y(z) = R_x(z) R_z(y)` for all `x, y, z`.
    pub two_step: IdentityCheck<S>,
}

impl<S: Scalar> SymmetryReport<S> {
    pub fn holds(&self) -> bool {
        self.detailed_balance.holds && self.two_step.holds
    }

    /// Witness for the first failing identity.
    pub fn witness(&self) -> Option<Witness<S>> {
        let db = &self.detailed_balance;
        let ts = &self.two_step;
        if !db.holds {
            Some(Witness::DetailedBalance {
                i: db.indices[0],
                j: db.indices[1],
                residual: db.max_residual.clone(),
            })
        } else if !ts.holds {
            Some(Witness::TwoStep {
                x: ts.indices[0],
                y: ts.indices[1],
                z: ts.indices[2],
                residual: ts.max_residual.clone(),
            })
        } else {
            None
        }
    }
}

struct Tracker<S> {
    holds: bool,
    max: S,
    at: Vec<usize>,
}

impl<S: Scalar> Tracker<S> {
    fn new(arity: usize) -> Self {
        Self {
            holds: true,
            max: S::zero(),
            at: vec![0; arity],
        }
    }

    fn record(&mut self, lhs: S, rhs: S, at: &[usize], tol: &Tolerance) {
        if !lhs.within(&rhs, tol) {
            self.holds = false;
        }
        let residual = abs_diff(&lhs, &rhs);
        if residual > self.max {
            self.max = residual;
            self.at.copy_from_slice(at);
        }
    }

    fn finish(self) -> IdentityCheck<S> {
        IdentityCheck {
            holds: self.holds,
            max_residual: self.max,
            indices: self.at,
        }
    }
}

/// Evaluates both symmetry identities on the unit-mass rows of a balanced
/// model. Unbalanced kernels are rejected.
pub fn symmetry_checks<S: Scalar>(
    model: &UrnModel<S>,
    tol: &Tolerance,
) -> Result<SymmetryReport<S>> {
    let profile = balance_profile_with(model, tol);
    let m = profile
        .m
        .clone()
        .ok_or_else(|| profile.unbalanced_error())?;
    let k = model.k();
    let nu = model.nu().weights();
    let r: Vec<Vec<S>> = model
        .kernel()
        .rows()
        .iter()
        .map(|row| row.iter().map(|v| v.clone() / m.clone()).collect())
        .collect();

    let mut db = Tracker::new(2);
    for i in 0..k {
        for j in i + 1..k {
            let lhs = nu[i].clone() * r[i][j].clone();
            let rhs = nu[j].clone() * r[j][i].clone();
            db.record(lhs, rhs, &[i, j], tol);
        }
    }

    // swapping y and z negates the residual, so z < y covers every case
    let mut ts = Tracker::new(3);
    for x in 0..k {
        for y in 0..k {
            for z in 0..y {
                let lhs = r[x][y].clone() * r[y][z].clone();
                let rhs = r[x][z].clone() * r[z][y].clone();
                ts.record(lhs, rhs, &[x, y, z], tol);
            }
        }
    }

    Ok(SymmetryReport {
        detailed_balance: db.finish(),
        two_step: ts.finish(),
    })
}

/// Groups colors by identical normalized rows and checks that every row is
/// the base measure conditioned on its support, with the supports forming a
/// partition. Returns the partition, or the witness with the largest residual.
pub fn detect_partition<S: Scalar>(
    model: &UrnModel<S>,
    row_tol: &Tolerance,
) -> std::result::Result<Partition, Witness<S>> {
    let k = model.k();
    let nu = model.nu();
    let rows: Vec<Vec<S>> = (0..k)
        .map(|i| {
            model
                .kernel()
                .normalized_row(i)
                .expect("validated models have rows with positive mass")
        })
        .collect();
    let supports: Vec<Vec<usize>> = rows
        .iter()
        .map(|row| (0..k).filter(|&j| row[j].is_significant(row_tol)).collect())
        .collect();

    let mut worst: Option<(usize, S)> = None;
    for i in 0..k {
        let conditional = nu
            .conditional_on(&supports[i])
            .expect("support of a row has positive base-measure mass");
        let residual = tv_distance(&rows[i], &conditional).expect("same dimension");
        if !residual.is_negligible(row_tol) && worst.as_ref().is_none_or(|(_, w)| residual > *w) {
            worst = Some((i, residual));
        }
    }
    if let Some((color, residual)) = worst {
        return Err(Witness::ConditionalMismatch {
            support: supports[color].clone(),
            color,
            residual,
        });
    }

    // group by identical rows, in color order
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..k {
        let found = groups.iter_mut().find(|g| {
            tv_distance(&rows[g[0]], &rows[i])
                .expect("same dimension")
                .is_negligible(row_tol)
        });
        match found {
            Some(g) => g.push(i),
            None => groups.push(vec![i]),
        }
    }

    let mut worst: Option<(usize, usize, S)> = None;
    for (g, group) in groups.iter().enumerate() {
        for &i in group {
            if supports[i] == *group {
                continue;
            }
            // mass the row puts outside its group, or base mass of group
            // members the row never reinforces
            let outside = (0..k)
                .filter(|j| !group.contains(j))
                .fold(S::zero(), |acc, j| acc + rows[i][j].clone());
            let missing: Vec<usize> = group
                .iter()
                .copied()
                .filter(|j| !supports[i].contains(j))
                .collect();
            let unreached = nu.mass_of(&missing) / nu.mass_of(group);
            let residual = if outside > unreached {
                outside
            } else {
                unreached
            };
            if worst.as_ref().is_none_or(|(_, _, w)| residual > *w) {
                worst = Some((g, i, residual));
            }
        }
    }
    if let Some((g, color, residual)) = worst {
        return Err(Witness::SupportMismatch {
            color,
            block: groups[g].clone(),
            support: supports[color].clone(),
            residual,
        });
    }

    Ok(Partition::new(groups, k).expect("groups cover every color once"))
}

/// `(θ/m, ν, R/m)` for a balanced model with common row mass `m`.
pub fn normalize_model<S: Scalar>(model: &UrnModel<S>) -> Result<UrnModel<S>> {
    let profile = balance_profile(model);
    let m = profile
        .m
        .clone()
        .ok_or_else(|| profile.unbalanced_error())?;
    let inv = S::one() / m;
    UrnModel::new(
        model.theta().clone() * inv.clone(),
        model.space().clone(),
        model.nu().clone(),
        model.kernel().scaled(&inv),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum VerdictKind {
    #[serde(rename = "IID")]
    Iid,
    Exchangeable,
    NotExchangeable,
}

impl VerdictKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            VerdictKind::Iid => "IID",
            VerdictKind::Exchangeable => "Exchangeable",
            VerdictKind::NotExchangeable => "NotExchangeable",
        }
    }
}

/// Classifier output. Color indices refer to the validated (pruned) model.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict<S> {
    pub kind: VerdictKind,
    /// Block partition; a single block for i.i.d. verdicts.
    pub partition: Option<Partition>,
    /// Common row mass, when the kernel is balanced.
    pub m: Option<S>,
    pub witness: Option<Witness<S>>,
    /// Equivalent model with unit-mass rows, when one exists.
    pub normalized: Option<UrnModel<S>>,
}

impl<S: Scalar> Verdict<S> {
    pub fn is_exchangeable(&self) -> bool {
        self.kind != VerdictKind::NotExchangeable
    }

    /// `θ/m` of the normalized model.
    pub fn theta_over_m(&self) -> Option<S> {
        self.normalized.as_ref().map(|m| m.theta().clone())
    }

    pub fn to_json(&self) -> Value {
        let mut out = json!({ "kind": self.kind.as_str() });
        if let Some(p) = &self.partition {
            out["partition"] = json!(p.blocks());
            if let Some(n) = &self.normalized {
                let labels: Vec<Vec<&str>> = p
                    .blocks()
                    .iter()
                    .map(|b| b.iter().filter_map(|&c| n.space().label(c)).collect())
                    .collect();
                out["partition_labels"] = json!(labels);
            }
        }
        if let Some(m) = &self.m {
            out["m"] = m.to_json();
        }
        if let Some(w) = &self.witness {
            out["witness"] = w.to_json();
        }
        if let Some(n) = &self.normalized {
            out["normalized"] = n.to_json();
        }
        out["exact"] = json!(S::EXACT);
        out
    }
}

/// Tolerances used by [`classify_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyOptions {
    /// Comparisons of masses and of the symmetry identities.
    pub tolerance: Tolerance,
    /// Total-variation threshold under which two rows count as identical.
    pub row_tolerance: Tolerance,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            tolerance: Tolerance::default(),
            row_tolerance: Tolerance::row_grouping(),
        }
    }
}

/// Decides whether the model is i.i.d., exchangeable with a block partition,
/// or not exchangeable. Validation errors propagate.
pub fn classify<S: Scalar>(model: &UrnModel<S>) -> Result<Verdict<S>> {
    classify_with(model, &ClassifyOptions::default())
}

pub fn classify_with<S: Scalar>(model: &UrnModel<S>, opts: &ClassifyOptions) -> Result<Verdict<S>> {
    let model = validate_model(model)?;
    let k = model.k();
    let profile = balance_profile_with(&model, &opts.tolerance);

    if is_iid_with(&model, &opts.tolerance) {
        let normalized = match &profile.m {
            Some(_) => normalize_model(&model)?,
            // an unbalanced i.i.d. kernel behaves like rows equal to ν
            None => UrnModel::new(
                model.theta().clone(),
                model.space().clone(),
                model.nu().clone(),
                ReinforcementKernel::new(vec![model.nu().weights().to_vec(); k])?,
            )?,
        };
        return Ok(Verdict {
            kind: VerdictKind::Iid,
            partition: Some(Partition::single_block(k)),
            m: profile.m,
            witness: None,
            normalized: Some(normalized),
        });
    }

    let Some(m) = profile.m.clone() else {
        let (low, high) = profile.extremes();
        return Ok(Verdict {
            kind: VerdictKind::NotExchangeable,
            partition: None,
            m: None,
            witness: Some(Witness::Unbalanced {
                low_color: low,
                low: profile.row_masses[low].clone(),
                high_color: high,
                high: profile.row_masses[high].clone(),
            }),
            normalized: None,
        });
    };

    let normalized = normalize_model(&model)?;
    let partition = detect_partition(&normalized, &opts.row_tolerance);
    let symmetry = symmetry_checks(&normalized, &opts.tolerance)?;
    // a failed symmetry identity is the more direct witness, so it wins
    let (kind, partition, witness) = match (partition, symmetry.witness()) {
        (Ok(p), None) => (VerdictKind::Exchangeable, Some(p), None),
        (_, Some(w)) | (Err(w), None) => (VerdictKind::NotExchangeable, None, Some(w)),
    };
    Ok(Verdict {
        kind,
        partition,
        m: Some(m),
        witness,
        normalized: Some(normalized),
    })
}

/// Like [`classify`], but a model whose surviving colors reinforce a
/// base-measure-null color yields a `NotExchangeable` verdict with a
/// [`Witness::MassLeak`] instead of an error.
pub fn classify_reporting_leaks<S: Scalar>(model: &UrnModel<S>) -> Result<Verdict<S>> {
    classify_reporting_leaks_with(model, &ClassifyOptions::default())
}

pub fn classify_reporting_leaks_with<S: Scalar>(
    model: &UrnModel<S>,
    opts: &ClassifyOptions,
) -> Result<Verdict<S>> {
    match classify_with(model, opts) {
        Err(Error::MassLeak { from, to, .. }) => Ok(Verdict {
            kind: VerdictKind::NotExchangeable,
            partition: None,
            m: None,
            witness: Some(Witness::MassLeak {
                from,
                to,
                mass: model.kernel().entry(from, to).clone(),
            }),
            normalized: None,
        }),
        other => other,
    }
}

/// Base measure collapsed onto the blocks of a partition: `ν*(k) = ν(D_k)`.
pub fn block_measure<S: Scalar>(nu: &FiniteMeasure<S>, partition: &Partition) -> Vec<S> {
    partition.blocks().iter().map(|b| nu.mass_of(b)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    fn model(theta: f64, nu: &[f64], rows: &[&[f64]]) -> UrnModel<f64> {
        UrnModel::from_parts(
            theta,
            nu.to_vec(),
            rows.iter().map(|r| r.to_vec()).collect(),
        )
        .unwrap()
    }

    fn block_model() -> UrnModel<f64> {
        model(
            1.0,
            &[0.2, 0.3, 0.5],
            &[&[0.4, 0.6, 0.0], &[0.4, 0.6, 0.0], &[0.0, 0.0, 1.0]],
        )
    }

    fn flip2() -> UrnModel<f64> {
        model(1.0, &[0.5, 0.5], &[&[0.0, 1.0], &[1.0, 0.0]])
    }

    fn iid_unbalanced() -> UrnModel<f64> {
        let nu = [0.2, 0.3, 0.5];
        let rows: Vec<Vec<f64>> = [2.0, 3.0, 1.0]
            .iter()
            .map(|m| nu.iter().map(|w| m * w).collect())
            .collect();
        UrnModel::from_parts(1.0, nu.to_vec(), rows).unwrap()
    }

    #[test]
    fn balance_profile_examples() {
        let polya = model(
            1.0,
            &[0.2, 0.3, 0.5],
            &[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]],
        );
        let p = balance_profile(&polya);
        assert!(p.balanced);
        assert_eq!(p.m, Some(1.0));

        let p = balance_profile(&iid_unbalanced());
        assert!(!p.balanced);
        assert_eq!(p.m, None);
        assert_eq!(p.extremes(), (2, 1));

        let p = balance_profile(&block_model());
        assert!(p.balanced);
        assert_eq!(p.m, Some(1.0));
    }

    #[test]
    fn is_iid_examples() {
        assert!(is_iid(&iid_unbalanced()));
        assert!(!is_iid(&model(
            1.0,
            &[0.5, 0.5],
            &[&[1.0, 0.0], &[0.0, 1.0]]
        )));
        assert!(is_iid(&model(3.0, &[1.0], &[&[7.0]])));
    }

    #[test]
    fn symmetry_checks_examples() {
        let tol = Tolerance::default();
        let identity = model(1.0, &[0.1, 0.9], &[&[1.0, 0.0], &[0.0, 1.0]]);
        assert!(symmetry_checks(&identity, &tol).unwrap().holds());

        let report = symmetry_checks(&flip2(), &tol).unwrap();
        assert!(report.detailed_balance.holds);
        assert!(!report.two_step.holds);
        // (x, y, z) = (1, 2, 1) one-based: R_1(2) R_2(1) = 1 against R_1(1) R_1(2) = 0
        assert_eq!(report.two_step.indices, vec![0, 1, 0]);
        assert_eq!(report.two_step.max_residual, 1.0);

        assert!(symmetry_checks(&block_model(), &tol).unwrap().holds());

        assert!(matches!(
            symmetry_checks(&iid_unbalanced(), &tol),
            Err(Error::Unbalanced { .. })
        ));
    }

    #[test]
    fn detect_partition_examples() {
        let rows = Tolerance::row_grouping();
        assert_eq!(
            detect_partition(&block_model(), &rows).unwrap().blocks(),
            &[vec![0, 1], vec![2]]
        );
        let polya = model(
            1.0,
            &[0.2, 0.3, 0.5],
            &[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]],
        );
        assert_eq!(
            detect_partition(&polya, &rows).unwrap(),
            Partition::singletons(3)
        );

        let sticky = model(1.0, &[0.5, 0.5], &[&[0.9, 0.1], &[0.1, 0.9]]);
        match detect_partition(&sticky, &rows) {
            Err(Witness::ConditionalMismatch {
                color,
                support,
                residual,
            }) => {
                assert_eq!(color, 0);
                assert_eq!(support, vec![0, 1]);
                assert!((residual - 0.4).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rows_sharing_a_conditional_must_match_their_support() {
        // both rows equal ν(·|{1}) but color 2 is not in that block
        let m = model(1.0, &[0.5, 0.5], &[&[1.0, 0.0], &[1.0, 0.0]]);
        assert!(matches!(
            detect_partition(&m, &Tolerance::row_grouping()),
            Err(Witness::SupportMismatch { .. })
        ));
        assert_eq!(classify(&m).unwrap().kind, VerdictKind::NotExchangeable);
    }

    #[test]
    fn normalize_model_examples() {
        let m = model(2.0, &[0.5, 0.5], &[&[2.0, 0.0], &[0.0, 2.0]]);
        let n = normalize_model(&m).unwrap();
        assert_eq!(*n.theta(), 1.0);
        assert_eq!(n.kernel().rows(), &[vec![1.0, 0.0], vec![0.0, 1.0]]);

        let half = block_model().scaled(&0.5).unwrap().convert(|v| *v).unwrap();
        let half = UrnModel::new(
            3.0,
            half.space().clone(),
            half.nu().clone(),
            half.kernel().clone(),
        )
        .unwrap();
        let n = normalize_model(&half).unwrap();
        assert_eq!(*n.theta(), 6.0);
        for i in 0..3 {
            assert!((n.kernel().row_mass(i) - 1.0).abs() < 1e-15);
        }

        assert_eq!(normalize_model(&block_model()).unwrap(), block_model());
        assert!(matches!(
            normalize_model(&iid_unbalanced()),
            Err(Error::Unbalanced { .. })
        ));
    }

    #[test]
    fn classify_examples() {
        let v = classify(&iid_unbalanced()).unwrap();
        assert_eq!(v.kind, VerdictKind::Iid);
        assert_eq!(v.partition, Some(Partition::single_block(3)));

        let v = classify(&block_model()).unwrap();
        assert_eq!(v.kind, VerdictKind::Exchangeable);
        assert_eq!(v.partition.unwrap().blocks(), &[vec![0, 1], vec![2]]);
        assert_eq!(v.m, Some(1.0));

        let v = classify(&flip2()).unwrap();
        assert_eq!(v.kind, VerdictKind::NotExchangeable);
        assert!(matches!(
            v.witness,
            Some(Witness::TwoStep {
                x: 0,
                y: 1,
                z: 0,
                ..
            })
        ));

        let unbalanced = model(1.0, &[0.5, 0.5], &[&[1.0, 0.0], &[0.0, 2.0]]);
        let v = classify(&unbalanced).unwrap();
        assert_eq!(v.kind, VerdictKind::NotExchangeable);
        assert!(matches!(
            v.witness,
            Some(Witness::Unbalanced {
                low_color: 0,
                high_color: 1,
                ..
            })
        ));
    }

    #[test]
    fn classify_reports_mass_leak_as_verdict() {
        let m = model(
            1.0,
            &[0.5, 0.5, 0.0],
            &[&[0.5, 0.0, 0.5], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]],
        );
        assert!(matches!(classify(&m), Err(Error::MassLeak { .. })));
        let v = classify_reporting_leaks(&m).unwrap();
        assert_eq!(v.kind, VerdictKind::NotExchangeable);
        assert_eq!(v.witness.unwrap().check_name(), "mass_leak");
    }

    #[test]
    fn verdict_json_layout() {
        let r = |n| BigRational::from_ratio(n, 1).unwrap();
        let polya = UrnModel::from_parts(
            r(1),
            vec![r(1), r(1), r(1)],
            vec![
                vec![r(1), r(0), r(0)],
                vec![r(0), r(1), r(0)],
                vec![r(0), r(0), r(1)],
            ],
        )
        .unwrap();
        let json = classify(&polya).unwrap().to_json();
        assert_eq!(json["kind"], "Exchangeable");
        assert_eq!(json["partition"], json!([[0], [1], [2]]));
        assert_eq!(json["m"], json!(1));
        assert_eq!(json["exact"], json!(true));
    }

    #[test]
    fn partition_construction_checks_cover() {
        assert!(Partition::new(vec![vec![0], vec![0, 1]], 2).is_err());
        assert!(Partition::new(vec![vec![0]], 2).is_err());
        assert!(Partition::new(vec![vec![], vec![0, 1]], 2).is_err());
        let p = Partition::new(vec![vec![2, 0], vec![1]], 3).unwrap();
        assert_eq!(p.blocks(), &[vec![0, 2], vec![1]]);
        assert_eq!(p.assignment(), vec![0, 1, 0]);
        assert_eq!(p.relabeled(&[1, 2, 0]).blocks(), &[vec![0], vec![1, 2]]);
    }
}
