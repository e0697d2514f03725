use std::collections::HashMap;

use mvps::kernel::{classify, Partition};
use mvps::oracle::{joint_pmf, predictive_exact};
use mvps::sampler::{
    beta_stick, dp_mixture_path, hybrid_example_path, sample_path, stick_breaking, FixedUniforms,
    RngStream,
};
use mvps::{Error, UrnModel};
use proptest::prelude::*;

fn model(theta: f64, nu: &[f64], rows: &[&[f64]]) -> UrnModel<f64> {
    UrnModel::from_parts(
        theta,
        nu.to_vec(),
        rows.iter().map(|r| r.to_vec()).collect(),
    )
    .unwrap()
}

fn polya(theta: f64, k: usize) -> UrnModel<f64> {
    let nu = vec![1.0 / k as f64; k];
    let rows = (0..k)
        .map(|i| (0..k).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    UrnModel::from_parts(theta, nu, rows).unwrap()
}

fn block_model() -> UrnModel<f64> {
    model(
        1.0,
        &[0.2, 0.3, 0.5],
        &[&[0.4, 0.6, 0.0], &[0.4, 0.6, 0.0], &[0.0, 0.0, 1.0]],
    )
}

#[test]
fn beta_stick_inverts_the_cdf() {
    assert_eq!(beta_stick(0.0, 3.7).unwrap(), 0.0);
    assert_eq!(beta_stick(0.5, 1.0).unwrap(), 0.5);
    assert_eq!(beta_stick(0.75, 2.0).unwrap(), 0.5);
    assert_eq!(beta_stick(0.5, 0.0), Err(Error::InvalidAlpha(0.0)));
    assert!(matches!(
        beta_stick(1.0, 1.0),
        Err(Error::InvalidUniform(_))
    ));
}

#[test]
fn path_predictive_follows_the_urn() {
    let m = polya(2.0, 2);
    // first variate 0.9 selects the second color
    let mut rng = FixedUniforms::new(vec![0.9, 0.1]);
    let path = sample_path(&m, 2, &mut rng).unwrap();
    assert_eq!(path.colors[0], 1);
    assert_eq!(path.predictive_trace[0], vec![0.5, 0.5]);
    assert!((path.predictive_trace[1][0] - 1.0 / 3.0).abs() < 1e-15);
    assert!((path.predictive_trace[1][1] - 2.0 / 3.0).abs() < 1e-15);
    assert_eq!(sample_path(&m, 0, &mut rng), Err(Error::ZeroLength));
}

#[test]
fn iid_paths_always_predict_the_base_measure() {
    let nu = [0.2, 0.3, 0.5];
    let rows: Vec<Vec<f64>> = [2.0, 3.0, 1.0]
        .iter()
        .map(|m| nu.iter().map(|w| m * w).collect())
        .collect();
    let m = UrnModel::from_parts(1.0, nu.to_vec(), rows).unwrap();
    let path = sample_path(&m, 200, &mut RngStream::new(3, 0)).unwrap();
    for entry in &path.predictive_trace {
        for (p, w) in entry.iter().zip(&nu) {
            assert!((p - w).abs() < 1e-12);
        }
    }
}

#[test]
fn stick_breaking_with_halving_sticks() {
    let eps = 1e-8;
    let draw =
        stick_breaking(1.0, &polya(1.0, 2), eps, &mut FixedUniforms::new(vec![0.5])).unwrap();
    let expected = (1.0 / eps).log2().ceil() as usize;
    assert_eq!(draw.weights.len(), expected);
    for (j, v) in draw.weights.iter().enumerate() {
        assert_eq!(*v, 0.5f64.powi(j as i32 + 1));
    }
    assert!(draw.truncation_mass < eps);
    assert!(matches!(
        stick_breaking(1.0, &polya(1.0, 2), 0.0, &mut RngStream::new(0, 0)),
        Err(Error::NonPositiveEps(_))
    ));
    assert!(matches!(
        stick_breaking(1.0, &polya(1.0, 2), 1.0, &mut RngStream::new(0, 0)),
        Err(Error::NonPositiveEps(_))
    ));
}

#[test]
fn polya_composite_is_a_weighted_sum_of_point_masses() {
    let draw = stick_breaking(2.0, &polya(2.0, 3), 1e-10, &mut RngStream::new(11, 0)).unwrap();
    let total: f64 = draw.weights.iter().sum();
    let mut expected = [0.0; 3];
    for (v, z) in draw.weights.iter().zip(&draw.sources) {
        expected[*z] += v / total;
    }
    for (a, b) in draw.composite.iter().zip(expected) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn block_composite_is_conditional_within_blocks() {
    let m = block_model();
    let nu = [0.2, 0.3, 0.5];
    for seed in 0..50 {
        let draw = stick_breaking(1.0, &m, 1e-8, &mut RngStream::new(seed, 0)).unwrap();
        let block = draw.composite[0] + draw.composite[1];
        if block > 0.0 {
            assert!((draw.composite[0] / block - nu[0] / 0.5).abs() < 1e-12);
            assert!((draw.composite[1] / block - nu[1] / 0.5).abs() < 1e-12);
        }
        let masses = draw.block_masses(&Partition::new(vec![vec![0, 1], vec![2]], 3).unwrap());
        assert!((masses.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn mixture_path_examples() {
    let single = model(1.0, &[0.25, 0.75], &[&[0.25, 0.75], &[0.25, 0.75]]);
    let verdict = classify(&single).unwrap();
    let path = dp_mixture_path(&verdict, 100, &mut RngStream::new(1, 0)).unwrap();
    assert!(path.labels.iter().all(|&l| l == 0));

    let verdict = classify(&polya(1.0, 3)).unwrap();
    let path = dp_mixture_path(&verdict, 100, &mut RngStream::new(1, 0)).unwrap();
    assert_eq!(path.labels, path.colors);

    let verdict = classify(&block_model()).unwrap();
    let path = dp_mixture_path(&verdict, 500, &mut RngStream::new(2, 0)).unwrap();
    for (l, c) in path.labels.iter().zip(&path.colors) {
        assert_eq!(*l, if *c == 2 { 1 } else { 0 });
    }

    let flip = model(1.0, &[0.5, 0.5], &[&[0.0, 1.0], &[1.0, 0.0]]);
    let verdict = classify(&flip).unwrap();
    assert_eq!(
        dp_mixture_path(&verdict, 10, &mut RngStream::new(0, 0)),
        Err(Error::MissingPartition)
    );
}

/// Empirical law of the first three colors against the exact joint pmf,
/// cell by cell within 4 Monte Carlo standard errors.
fn assert_matches_depth3(m: &UrnModel<f64>, mut draw: impl FnMut(u64) -> Vec<usize>, reps: u64) {
    let pmf = joint_pmf(m, 3).unwrap();
    let mut counts: HashMap<Vec<usize>, u64> = HashMap::new();
    for r in 0..reps {
        *counts.entry(draw(r)).or_default() += 1;
    }
    for (seq, p) in pmf.iter() {
        let observed = *counts.get(&seq).unwrap_or(&0) as f64 / reps as f64;
        let se = (p * (1.0 - p) / reps as f64).sqrt();
        assert!(
            (observed - p).abs() <= 4.0 * se + 1e-12,
            "{seq:?}: observed {observed}, exact {p}"
        );
    }
}

#[test]
fn path_frequencies_match_exact_law() {
    let m = model(
        1.5,
        &[0.2, 0.3, 0.5],
        &[&[1.0, 0.5, 0.0], &[0.2, 0.1, 1.2], &[0.3, 0.3, 0.9]],
    );
    assert_matches_depth3(
        &m,
        |r| {
            sample_path(&m, 3, &mut RngStream::new(99, r))
                .unwrap()
                .colors
        },
        100_000,
    );
}

#[test]
fn mixture_and_urn_paths_share_a_law() {
    let m = block_model();
    let verdict = classify(&m).unwrap();
    assert_matches_depth3(
        &m,
        |r| {
            dp_mixture_path(&verdict, 3, &mut RngStream::new(5, r))
                .unwrap()
                .colors
        },
        100_000,
    );
}

#[test]
fn hybrid_repeats_live_in_the_atomic_part() {
    for (s, seed) in [(0.5, 1u64), (0.05, 2), (0.95, 3)] {
        let path = hybrid_example_path(1.0, s, 3000, &mut RngStream::new(seed, 0)).unwrap();
        let mut seen: HashMap<u64, usize> = HashMap::new();
        for v in &path.values {
            *seen.entry(v.to_bits()).or_default() += 1;
        }
        for (bits, count) in seen {
            if count > 1 {
                assert!(f64::from_bits(bits) < s);
            }
        }
    }
    assert_eq!(
        hybrid_example_path(1.0, 1.0, 10, &mut RngStream::new(0, 0)),
        Err(Error::InvalidS(1.0))
    );
    assert_eq!(
        hybrid_example_path(1.0, 0.0, 10, &mut RngStream::new(0, 0)),
        Err(Error::InvalidS(0.0))
    );
}

#[test]
fn hybrid_limits_in_s() {
    // s near 1: almost every reinforcement copies, so ties abound
    let path = hybrid_example_path(1.0, 0.999, 2000, &mut RngStream::new(4, 0)).unwrap();
    let mut sorted = path.values.clone();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    assert!(sorted.len() < 100);

    // s near 0: the path is essentially i.i.d. uniform
    let path = hybrid_example_path(1.0, 1e-6, 2000, &mut RngStream::new(4, 0)).unwrap();
    let mean = path.values.iter().sum::<f64>() / 2000.0;
    assert!((mean - 0.5).abs() < 4.0 * (1.0 / 12.0 / 2000.0f64).sqrt());
    // the in-S predictive is exactly a two-color Polya urn
    assert!(path.in_s_predictive.iter().all(|p| (0.0..=1.0).contains(p)));
}

fn random_model() -> impl Strategy<Value = UrnModel<f64>> {
    (1usize..5).prop_flat_map(|k| {
        (
            0.1f64..5.0,
            prop::collection::vec(0.05f64..1.0, k),
            prop::collection::vec(prop::collection::vec(0.0f64..2.0, k), k),
        )
            .prop_filter_map("rows need mass", |(theta, nu, mut rows)| {
                for (i, row) in rows.iter_mut().enumerate() {
                    row[i] += 0.1;
                }
                UrnModel::from_parts(theta, nu, rows).ok()
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stored_trace_matches_exact_predictive(m in random_model(), seed in any::<u64>()) {
        let path = sample_path(&m, 30, &mut RngStream::new(seed, 0)).unwrap();
        for t in 0..30 {
            let exact = predictive_exact(&m, &path.colors[..t]).unwrap();
            let sum: f64 = path.predictive_trace[t].iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
            for (a, b) in exact.iter().zip(&path.predictive_trace[t]) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sampling_is_deterministic(m in random_model(), seed in any::<u64>(), stream in 0u64..8) {
        let a = sample_path(&m, 40, &mut RngStream::new(seed, stream)).unwrap();
        let b = sample_path(&m, 40, &mut RngStream::new(seed, stream)).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn stick_mass_is_accounted(alpha in 0.05f64..20.0, seed in any::<u64>()) {
        let draw = stick_breaking(alpha, &polya(alpha, 2), 1e-8, &mut RngStream::new(seed, 0)).unwrap();
        prop_assert!(draw.truncation_mass < 1e-8);
        prop_assert!(draw.weights.iter().all(|&v| v >= 0.0));
        prop_assert!((draw.total_weight() + draw.truncation_mass - 1.0).abs() <= 1e-12);
    }
}
