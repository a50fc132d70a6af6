mod common;

use nalgebra::DMatrix;
use proptest::prelude::*;

use common::{column_loss, residuals_naive};
use sptcl::datamodel::io::{load_features, load_labels, save_features, save_labels};
use sptcl::datamodel::{inject_label_noise, Format};
use sptcl::eval::{accuracy, confidence_histogram};
use sptcl::graph::build_affinity;
use sptcl::solver::{p_step, pace_select, residuals, v_step, PaceSchedule};
use sptcl::NoiseSpec;

fn matrix(
    rows: std::ops::RangeInclusive<usize>,
    cols: std::ops::RangeInclusive<usize>,
    range: f64,
) -> impl Strategy<Value = DMatrix<f64>> {
    (rows, cols).prop_flat_map(move |(r, c)| {
        prop::collection::vec(-range..range, r * c).prop_map(move |v| DMatrix::from_vec(r, c, v))
    })
}

fn any_finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e3..1e3f64,
        prop::num::f64::NORMAL,
        prop::num::f64::SUBNORMAL,
        Just(0.0),
        Just(-0.0),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn feature_files_round_trip(
        (n, m, values) in (1usize..12, 1usize..6)
            .prop_flat_map(|(n, m)| (Just(n), Just(m), prop::collection::vec(any_finite(), n * m)))
    ) {
        let x = DMatrix::from_vec(m, n, values);
        let dir = tempfile::tempdir().unwrap();
        for format in [Format::Csv, Format::Binary] {
            let path = dir.path().join("x");
            save_features(&x, &path, format).unwrap();
            prop_assert_eq!(Format::detect(&path).unwrap(), format);
            let back = load_features(&path, format).unwrap();
            // bitwise, so -0.0 and subnormals must survive
            let same = back.features().iter().zip(x.iter()).all(|(a, b)| a.to_bits() == b.to_bits());
            prop_assert!(same && back.features().shape() == x.shape());
        }
    }

    #[test]
    fn label_files_round_trip(labels in prop::collection::vec(prop::option::of(0usize..1000), 0..40)) {
        let dir = tempfile::tempdir().unwrap();
        for format in [Format::Csv, Format::Binary] {
            let path = dir.path().join("y");
            save_labels(&labels, &path, format).unwrap();
            prop_assert_eq!(load_labels(&path, format).unwrap(), labels.clone());
        }
    }

    #[test]
    fn laplacian_quadratic_form(x in matrix(2..=6, 2..=25, 1.0), k in 1usize..6, f in prop::collection::vec(-2.0..2.0f64, 25)) {
        let n = x.ncols();
        prop_assume!(x.column_iter().all(|c| c.norm() > 1e-6));
        let g = build_affinity(&x, k).unwrap();
        let l = g.normalized_laplacian();
        let f = nalgebra::DVector::from_column_slice(&f[..n]);
        let quad = f.dot(&(l * &f));
        let m = g.affinity_dense();
        let d = g.degrees();
        let mut expect = 0.0;
        for i in 0..n {
            for j in 0..n {
                if m[(i, j)] > 0.0 {
                    let diff = f[i] / d[i].sqrt() - f[j] / d[j].sqrt();
                    expect += 0.5 * m[(i, j)] * diff * diff;
                }
            }
        }
        prop_assert!((quad - expect).abs() <= 1e-9 * (1.0 + expect.abs()), "{} vs {}", quad, expect);
        prop_assert!(quad >= -1e-10);
    }

    #[test]
    fn affinity_is_or_symmetric(x in matrix(2..=5, 2..=20, 1.0), k in 1usize..6) {
        prop_assume!(x.column_iter().all(|c| c.norm() > 1e-6));
        let n = x.ncols();
        let g = build_affinity(&x, k).unwrap();
        let m = g.affinity_dense();
        prop_assert_eq!(&m, &m.transpose());
        let unit: Vec<_> = x.column_iter().map(|c| c.normalize()).collect();
        let cos = |i: usize, j: usize| unit[i].dot(&unit[j]);
        for i in 0..n {
            prop_assert_eq!(m[(i, i)], 0.0);
            // brute-force top-k with ties to the lower index
            let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            order.sort_by(|&a, &b| cos(i, b).total_cmp(&cos(i, a)).then(a.cmp(&b)));
            for &j in order.iter().take(k) {
                let w = cos(i, j);
                if w > 1e-12 {
                    prop_assert!(m[(i, j)] > 0.0, "{} lists {} but the edge is missing", i, j);
                }
            }
            for j in 0..n {
                prop_assert!((0.0..=1.0).contains(&m[(i, j)]));
            }
        }
    }

    #[test]
    fn accuracy_is_permutation_invariant(
        pairs in prop::collection::vec((0usize..4, 0usize..4), 1..50),
        seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let (pred, truth): (Vec<_>, Vec<_>) = pairs.iter().copied().unzip();
        let mut shuffled = pairs.clone();
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let (sp, st): (Vec<_>, Vec<_>) = shuffled.into_iter().unzip();
        prop_assert_eq!(accuracy(&pred, &truth).unwrap(), accuracy(&sp, &st).unwrap());
    }

    #[test]
    fn p_step_stays_on_simplex(q in matrix(1..=6, 1..=8, 1.0), r in 1.0..4.0f64, zero_some in any::<bool>()) {
        let mut q = q.map(|v| v.abs() * 5.0);
        if zero_some {
            q[(0, 0)] = 0.0;
        }
        for r in [1.0, r] {
            let p = p_step(&q, r, 1e-12);
            for (i, col) in p.column_iter().enumerate() {
                prop_assert!(col.iter().all(|&v| (0.0..=1.0).contains(&v)));
                prop_assert!((col.sum() - 1.0).abs() <= 1e-9);
                // no vertex of the simplex beats the closed form
                let qc: Vec<f64> = q.column(i).iter().copied().collect();
                let got = column_loss(&col.iter().copied().collect::<Vec<_>>(), &qc, r);
                let vertex = qc.iter().copied().fold(f64::INFINITY, f64::min);
                prop_assert!(got <= vertex + 1e-9 * (1.0 + vertex));
            }
            prop_assert!(confidence_histogram(&p).is_ok());
        }
    }

    #[test]
    fn residuals_match_definition(s in matrix(1..=6, 1..=6, 3.0)) {
        let q = residuals(&s);
        for i in 0..s.ncols() {
            let naive = residuals_naive(&s.column(i).iter().copied().collect::<Vec<_>>());
            for (c, v) in naive.iter().enumerate() {
                prop_assert!((q[(c, i)] - v).abs() <= 1e-12 * (1.0 + v));
                prop_assert!(q[(c, i)] >= 0.0);
            }
        }
    }

    #[test]
    fn pace_selects_exact_count(losses in prop::collection::vec(prop_oneof![0.0..3.0f64, Just(1.0)], 0..30), frac in 0.0..=1.0f64) {
        let count = ((losses.len() as f64) * frac) as usize;
        let (lambda, v) = pace_select(&losses, count);
        prop_assert_eq!(v.iter().filter(|&&s| s).count(), count);
        // whatever is selected is no worse than whatever is not
        let worst_in = losses.iter().zip(&v).filter(|(_, &s)| s).map(|(&l, _)| l).fold(f64::NEG_INFINITY, f64::max);
        let best_out = losses.iter().zip(&v).filter(|(_, &s)| !s).map(|(&l, _)| l).fold(f64::INFINITY, f64::min);
        prop_assert!(worst_in <= best_out);
        if v == v_step(&losses, lambda) {
            prop_assert!(losses.iter().zip(&v).all(|(&l, &s)| s == (l < lambda)));
        }
    }

    #[test]
    fn schedule_counts_are_monotone(outer in 2usize..20, n in 0usize..500) {
        let s = PaceSchedule::new(outer);
        prop_assert_eq!(s.keep_count(1, n), n);
        prop_assert_eq!(s.keep_count(outer, n), 0);
        for t in 1..outer {
            prop_assert!(s.keep_count(t + 1, n) <= s.keep_count(t, n));
            let c = s.keep_count(t, n);
            // ceil((T - t) n / (T - 1)) without floating point
            prop_assert!(c * (outer - 1) >= (outer - t) * n);
            prop_assert!(c == 0 || (c - 1) * (outer - 1) < (outer - t) * n);
        }
    }

    #[test]
    fn noise_never_keeps_a_flipped_label(
        labels in prop::collection::vec(0usize..5, 1..200),
        p in 0.0..=1.0f64,
        seed in any::<u64>(),
    ) {
        let (noisy, mask) = inject_label_noise(&labels, 5, &NoiseSpec::new(p, seed)).unwrap();
        for i in 0..labels.len() {
            prop_assert!(noisy[i] < 5);
            prop_assert_eq!(mask[i], noisy[i] != labels[i]);
        }
        let again = inject_label_noise(&labels, 5, &NoiseSpec::new(p, seed)).unwrap();
        prop_assert_eq!(again.0, noisy);
    }
}

#[test]
fn noise_extremes() {
    let y: Vec<usize> = (0..100).map(|i| i % 3).collect();
    let (same, mask) = inject_label_noise(&y, 3, &NoiseSpec::new(0.0, 1)).unwrap();
    assert_eq!(same, y);
    assert!(mask.iter().all(|&m| !m));
    let (all, mask) = inject_label_noise(&y, 3, &NoiseSpec::new(1.0, 1)).unwrap();
    assert!(all.iter().zip(&y).all(|(a, b)| a != b));
    assert!(mask.iter().all(|&m| m));
}
