//! Finite color spaces, finite measures, reinforcement kernels and the urn
//! model that ties them together.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::scalar::{abs_diff, sum, Scalar, Tolerance};

/// Ordered list of distinct color labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorSpace {
    labels: Vec<String>,
}

impl ColorSpace {
    pub fn new<I, L>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = L>,
        L: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::EmptySpace);
        }
        let mut seen = HashSet::with_capacity(labels.len());
        for label in &labels {
            if !seen.insert(label.as_str()) {
                return Err(Error::DuplicateLabel(label.clone()));
            }
        }
        Ok(Self { labels })
    }

    /// Colors labelled `"1"`, `"2"`, ..., `"k"`.
    pub fn numbered(k: usize) -> Result<Self> {
        Self::new((1..=k).map(|i| i.to_string()))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, index: usize) -> Option<&str> {
        self.labels.get(index).map(String::as_str)
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

fn check_weight<S: Scalar>(value: &S, location: impl FnOnce() -> String) -> Result<()> {
    let as_f64 = value.to_f64();
    if *value < S::zero() || !as_f64.is_finite() {
        return Err(Error::InvalidWeight {
            location: location(),
            value: as_f64,
        });
    }
    Ok(())
}

/// Non-negative mass per color.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMeasure<S> {
    weights: Vec<S>,
}

impl<S: Scalar> FiniteMeasure<S> {
    pub fn new(weights: Vec<S>) -> Result<Self> {
        for (i, w) in weights.iter().enumerate() {
            check_weight(w, || format!("measure entry {i}"))?;
        }
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total(&self) -> S {
        sum(&self.weights)
    }

    /// Mass of a set of color indices.
    pub fn mass_of(&self, indices: &[usize]) -> S {
        indices
            .iter()
            .fold(S::zero(), |acc, &i| acc + self.weights[i].clone())
    }

    /// Measure conditioned on `indices`, as a full-length probability vector.
    pub fn conditional_on(&self, indices: &[usize]) -> Result<Vec<S>> {
        let mass = self.mass_of(indices);
        if mass.is_zero() {
            return Err(Error::ZeroMass);
        }
        let mut out = vec![S::zero(); self.weights.len()];
        for &i in indices {
            out[i] = self.weights[i].clone() / mass.clone();
        }
        Ok(out)
    }

    pub fn into_weights(self) -> Vec<S> {
        self.weights
    }
}

/// Rescales a measure to total mass one.
pub fn normalize<S: Scalar>(measure: &FiniteMeasure<S>) -> Result<FiniteMeasure<S>> {
    let total = measure.total();
    if total.is_zero() {
        return Err(Error::ZeroMass);
    }
    Ok(FiniteMeasure {
        weights: measure
            .weights
            .iter()
            .map(|w| w.clone() / total.clone())
            .collect(),
    })
}

/// Square matrix of reinforcement masses: entry `(i, j)` is the mass added to
/// color `j` after color `i` is observed.
#[derive(Debug, Clone, PartialEq)]
pub struct ReinforcementKernel<S> {
    rows: Vec<Vec<S>>,
}

impl<S: Scalar> ReinforcementKernel<S> {
    pub fn new(rows: Vec<Vec<S>>) -> Result<Self> {
        let k = rows.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    found: row.len(),
                });
            }
            for (j, w) in row.iter().enumerate() {
                check_weight(w, || format!("kernel entry ({i}, {j})"))?;
            }
        }
        Ok(Self { rows })
    }

    pub fn identity(k: usize) -> Self {
        let rows = (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| if i == j { S::one() } else { S::zero() })
                    .collect()
            })
            .collect();
        Self { rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[Vec<S>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.rows[i]
    }

    pub fn entry(&self, i: usize, j: usize) -> &S {
        &self.rows[i][j]
    }

    /// Total mass `R_x(X)` of row `i`.
    pub fn row_mass(&self, i: usize) -> S {
        sum(&self.rows[i])
    }

    /// Row `i` divided by its total mass.
    pub fn normalized_row(&self, i: usize) -> Result<Vec<S>> {
        let mass = self.row_mass(i);
        if mass.is_zero() {
            return Err(Error::ZeroRow { color: i });
        }
        Ok(self.rows[i]
            .iter()
            .map(|w| w.clone() / mass.clone())
            .collect())
    }

    pub fn scaled(&self, factor: &S) -> Self {
        Self {
            rows: self
                .rows
                .iter()
                .map(|row| row.iter().map(|w| w.clone() * factor.clone()).collect())
                .collect(),
        }
    }

    pub fn into_rows(self) -> Vec<Vec<S>> {
        self.rows
    }
}

/// Parameters `(θ, colors, ν, R)` of a measure-valued Pólya urn sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct UrnModel<S> {
    theta: S,
    space: ColorSpace,
    nu: FiniteMeasure<S>,
    kernel: ReinforcementKernel<S>,
}

impl<S: Scalar> UrnModel<S> {
    /// Builds a model whose base measure already sums to one.
    pub fn new(
        theta: S,
        space: ColorSpace,
        nu: FiniteMeasure<S>,
        kernel: ReinforcementKernel<S>,
    ) -> Result<Self> {
        let k = space.len();
        if nu.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: nu.len(),
            });
        }
        if kernel.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: kernel.len(),
            });
        }
        if theta <= S::zero() || !theta.to_f64().is_finite() {
            return Err(Error::InvalidTheta(theta.to_f64()));
        }
        let total = nu.total();
        if !total.within(&S::one(), &Tolerance::default()) {
            return Err(Error::NotNormalized(total.to_f64()));
        }
        Ok(Self {
            theta,
            space,
            nu,
            kernel,
        })
    }

    /// Builds a model from an unnormalized base measure.
    pub fn from_unnormalized(
        theta: S,
        space: ColorSpace,
        nu: FiniteMeasure<S>,
        kernel: ReinforcementKernel<S>,
    ) -> Result<Self> {
        if nu.len() != space.len() {
            return Err(Error::DimensionMismatch {
                expected: space.len(),
                found: nu.len(),
            });
        }
        Self::new(theta, space, normalize(&nu)?, kernel)
    }

    /// Convenience constructor from plain vectors with numbered colors.
    pub fn from_parts(theta: S, nu: Vec<S>, rows: Vec<Vec<S>>) -> Result<Self> {
        let space = ColorSpace::numbered(nu.len())?;
        Self::from_unnormalized(
            theta,
            space,
            FiniteMeasure::new(nu)?,
            ReinforcementKernel::new(rows)?,
        )
    }

    pub fn theta(&self) -> &S {
        &self.theta
    }

    pub fn space(&self) -> &ColorSpace {
        &self.space
    }

    pub fn nu(&self) -> &FiniteMeasure<S> {
        &self.nu
    }

    pub fn kernel(&self) -> &ReinforcementKernel<S> {
        &self.kernel
    }

    /// Number of colors.
    pub fn k(&self) -> usize {
        self.space.len()
    }

    /// Same model with `θ → cθ` and `R → cR`.
    pub fn scaled(&self, factor: &S) -> Result<Self> {
        Self::new(
            self.theta.clone() * factor.clone(),
            self.space.clone(),
            self.nu.clone(),
            self.kernel.scaled(factor),
        )
    }

    /// Relabels colors: new color `i` is old color `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let k = self.k();
        if perm.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: perm.len(),
            });
        }
        let mut seen = vec![false; k];
        for &p in perm {
            if p >= k || std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidParameter(format!(
                    "{perm:?} is not a permutation"
                )));
            }
        }
        let space = ColorSpace::new(perm.iter().map(|&p| self.space.labels[p].clone()))?;
        let nu = perm.iter().map(|&p| self.nu.weights[p].clone()).collect();
        let rows = perm
            .iter()
            .map(|&p| {
                perm.iter()
                    .map(|&q| self.kernel.rows[p][q].clone())
                    .collect()
            })
            .collect();
        Self::new(
            self.theta.clone(),
            space,
            FiniteMeasure::new(nu)?,
            ReinforcementKernel::new(rows)?,
        )
    }

    /// Converts every parameter to another scalar type.
    pub fn convert<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Result<UrnModel<T>> {
        UrnModel::from_unnormalized(
            f(&self.theta),
            self.space.clone(),
            FiniteMeasure::new(self.nu.weights.iter().map(&f).collect())?,
            ReinforcementKernel::new(
                self.kernel
                    .rows
                    .iter()
                    .map(|row| row.iter().map(&f).collect())
                    .collect(),
            )?,
        )
    }

    pub fn to_f64(&self) -> Result<UrnModel<f64>> {
        self.convert(|v| v.to_f64())
    }

    /// JSON object in the model-file layout.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "theta": self.theta.to_json(),
            "colors": self.space.labels(),
            "nu": self.nu.weights.iter().map(Scalar::to_json).collect::<Vec<_>>(),
            "R": self.kernel.rows.iter()
                .map(|row| row.iter().map(Scalar::to_json).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        })
    }
}

/// Removes base-measure-null colors after checking that no surviving color
/// reinforces them.
///
/// Rows are also required to have positive total mass on the surviving
/// colors. A row that leaks mass onto a pruned color yields
/// [`Error::MassLeak`] naming the largest leak.
pub fn validate_model<S: Scalar>(model: &UrnModel<S>) -> Result<UrnModel<S>> {
    let tol = Tolerance::default();
    let nu = model.nu.weights();
    let keep: Vec<usize> = (0..model.k())
        .filter(|&i| nu[i].is_significant(&tol))
        .collect();
    if keep.is_empty() {
        return Err(Error::ZeroMass);
    }
    let dropped: Vec<usize> = (0..model.k()).filter(|i| !keep.contains(i)).collect();

    let mut worst: Option<(usize, usize, S)> = None;
    for &i in &keep {
        for &j in &dropped {
            let mass = model.kernel.entry(i, j);
            if mass.is_significant(&tol) && worst.as_ref().is_none_or(|(_, _, w)| mass > w) {
                worst = Some((i, j, mass.clone()));
            }
        }
    }
    if let Some((from, to, mass)) = worst {
        return Err(Error::MassLeak {
            from,
            to,
            mass: mass.to_f64(),
        });
    }

    for &i in &keep {
        let mass = keep
            .iter()
            .fold(S::zero(), |acc, &j| acc + model.kernel.entry(i, j).clone());
        if !mass.is_significant(&tol) {
            return Err(Error::ZeroRow { color: i });
        }
    }

    if dropped.is_empty() {
        return Ok(model.clone());
    }
    let space = ColorSpace::new(keep.iter().map(|&i| model.space.labels[i].clone()))?;
    let nu = FiniteMeasure::new(keep.iter().map(|&i| nu[i].clone()).collect())?;
    let rows = keep
        .iter()
        .map(|&i| {
            keep.iter()
                .map(|&j| model.kernel.entry(i, j).clone())
                .collect()
        })
        .collect();
    UrnModel::from_unnormalized(
        model.theta.clone(),
        space,
        nu,
        ReinforcementKernel::new(rows)?,
    )
}

/// Total variation distance between two probability vectors on the same
/// finite space: `max_B |p(B) - q(B)| = ½ Σ |pᵢ - qᵢ|`.
pub fn tv_distance<S: Scalar>(p: &[S], q: &[S]) -> Result<S> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            found: q.len(),
        });
    }
    let l1 = p
        .iter()
        .zip(q)
        .fold(S::zero(), |acc, (a, b)| acc + abs_diff(a, b));
    Ok(l1 / S::from_u8(2).expect("2 is representable"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;
    use proptest::prelude::*;

    fn fm(w: &[f64]) -> FiniteMeasure<f64> {
        FiniteMeasure::new(w.to_vec()).unwrap()
    }

    fn model(theta: f64, nu: &[f64], rows: &[&[f64]]) -> UrnModel<f64> {
        UrnModel::from_parts(
            theta,
            nu.to_vec(),
            rows.iter().map(|r| r.to_vec()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn normalize_scales_proportionally() {
        let n = normalize(&fm(&[2.0, 3.0, 5.0])).unwrap();
        assert_eq!(n.weights(), &[0.2, 0.3, 0.5]);
        assert_eq!(normalize(&fm(&[1.0, 0.0])).unwrap().weights(), &[1.0, 0.0]);
        assert_eq!(normalize(&fm(&[0.0, 0.0])), Err(Error::ZeroMass));
    }

    #[test]
    fn negative_weights_are_rejected() {
        assert!(matches!(
            FiniteMeasure::new(vec![1.0, -0.5]),
            Err(Error::InvalidWeight { .. })
        ));
        assert!(matches!(
            ReinforcementKernel::new(vec![vec![1.0, f64::NAN], vec![0.0, 1.0]]),
            Err(Error::InvalidWeight { .. })
        ));
    }

    #[test]
    fn model_structure_is_checked() {
        let space = ColorSpace::numbered(2).unwrap();
        let kernel = ReinforcementKernel::<f64>::identity(2);
        assert!(matches!(
            UrnModel::new(0.0, space.clone(), fm(&[0.5, 0.5]), kernel.clone()),
            Err(Error::InvalidTheta(_))
        ));
        assert!(matches!(
            UrnModel::new(1.0, space.clone(), fm(&[0.5, 0.25, 0.25]), kernel.clone()),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            UrnModel::new(1.0, space, fm(&[0.5, 0.6]), kernel),
            Err(Error::NotNormalized(_))
        ));
        assert!(matches!(
            ColorSpace::new(["a", "a"]),
            Err(Error::DuplicateLabel(_))
        ));
        assert_eq!(
            ColorSpace::new(Vec::<String>::new()),
            Err(Error::EmptySpace)
        );
    }

    #[test]
    fn validate_prunes_null_color_without_incoming_mass() {
        let m = model(
            1.0,
            &[0.5, 0.5, 0.0],
            &[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]],
        );
        let v = validate_model(&m).unwrap();
        assert_eq!(v.k(), 2);
        assert_eq!(v.nu().weights(), &[0.5, 0.5]);
        assert_eq!(v.kernel().rows(), &[vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(v.space().labels(), &["1", "2"]);
    }

    #[test]
    fn validate_reports_mass_leak() {
        let m = model(
            1.0,
            &[0.5, 0.5, 0.0],
            &[&[0.5, 0.0, 0.5], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]],
        );
        assert_eq!(
            validate_model(&m),
            Err(Error::MassLeak {
                from: 0,
                to: 2,
                mass: 0.5
            })
        );
    }

    #[test]
    fn validate_keeps_full_support_model() {
        let m = model(
            2.0,
            &[0.2, 0.3, 0.5],
            &[&[1.0, 2.0, 0.0], &[0.0, 1.0, 0.0], &[0.3, 0.0, 4.0]],
        );
        assert_eq!(validate_model(&m).unwrap(), m);
    }

    #[test]
    fn validate_rejects_rows_without_mass() {
        let m = model(1.0, &[0.5, 0.5], &[&[1.0, 0.0], &[0.0, 0.0]]);
        assert_eq!(validate_model(&m), Err(Error::ZeroRow { color: 1 }));
    }

    #[test]
    fn tv_distance_examples() {
        assert_eq!(tv_distance(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        assert_eq!(tv_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(tv_distance(&[0.75, 0.25], &[0.5, 0.5]).unwrap(), 0.25);
        assert!(matches!(
            tv_distance(&[1.0], &[0.5, 0.5]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn rational_model_round_trips_through_json() {
        let r = |n, d| BigRational::from_ratio(n, d).unwrap();
        let m = UrnModel::from_parts(
            r(3, 1),
            vec![r(1, 1), r(2, 1)],
            vec![vec![r(1, 2), r(0, 1)], vec![r(0, 1), r(1, 2)]],
        )
        .unwrap();
        let json = m.to_json();
        assert_eq!(json["theta"], serde_json::json!(3));
        assert_eq!(json["nu"][0], serde_json::json!({"num": 1, "den": 3}));
    }

    fn prob_vec(k: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..1.0, k).prop_filter_map("positive mass", |w| {
            let total: f64 = w.iter().sum();
            (total > 1e-6).then(|| w.iter().map(|x| x / total).collect())
        })
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(w in prop::collection::vec(0.0f64..10.0, 1..6)) {
            prop_assume!(w.iter().sum::<f64>() > 1e-9);
            let once = normalize(&fm(&w)).unwrap();
            let twice = normalize(&once).unwrap();
            for (a, b) in once.weights().iter().zip(twice.weights()) {
                prop_assert!(a.within(b, &Tolerance::default()));
            }
        }

        #[test]
        fn tv_distance_is_a_metric(
            (p, q, r) in (1usize..6).prop_flat_map(|k| (prob_vec(k), prob_vec(k), prob_vec(k)))
        ) {
            let pq = tv_distance(&p, &q).unwrap();
            let qp = tv_distance(&q, &p).unwrap();
            let pr = tv_distance(&p, &r).unwrap();
            let rq = tv_distance(&r, &q).unwrap();
            prop_assert_eq!(pq, qp);
            prop_assert!(pq <= pr + rq + 1e-12);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&pq));
            prop_assert_eq!(tv_distance(&p, &p).unwrap(), 0.0);
        }

        #[test]
        fn validate_is_a_fixed_point(
            nu in prop::collection::vec(prop_oneof![Just(0.0f64), 0.1f64..1.0], 1..5),
        ) {
            prop_assume!(nu.iter().any(|&w| w > 0.0));
            let k = nu.len();
            // identity rows never leak onto null colors
            let rows = (0..k).map(|i| (0..k).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
            let m = UrnModel::from_parts(1.5, nu, rows).unwrap();
            let v = validate_model(&m).unwrap();
            prop_assert!(v.nu().weights().iter().all(|&w| w > 0.0));
            prop_assert_eq!(validate_model(&v).unwrap(), v);
        }
    }
}
