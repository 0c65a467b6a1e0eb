use proptest::prelude::*;
use tfmseg::matrix::vech_len;
use tfmseg::modeid::{loading_distance, threshold_zeta, xi_from_covariances};
use tfmseg::segmentation::intervals::level_intervals;
use tfmseg::segmentation::{cusum, detector, generate_seeded_intervals};
use tfmseg::{Matrix, PseudoFactorStats, SymMatrix, Tensor, TensorSeries};

fn naive_cusum(values: &[f64], d: usize, a: usize, tau: usize, b: usize) -> Vec<f64> {
    let scale = (((tau - a) * (b - tau)) as f64 / (b - a) as f64).sqrt();
    (0..d)
        .map(|c| {
            let left: f64 = (a..tau).map(|t| values[t * d + c]).sum::<f64>() / (tau - a) as f64;
            let right: f64 = (tau..b).map(|t| values[t * d + c]).sum::<f64>() / (b - tau) as f64;
            scale * (right - left)
        })
        .collect()
}

fn random_sym(n: usize, entries: &[f64]) -> SymMatrix {
    // B Bᵀ + I is positive definite, so the trace is positive.
    let b = Matrix::new(n, n, entries[..n * n].to_vec()).unwrap();
    let g = b.transpose().gram();
    SymMatrix::from_vech(n, g.vech().iter().copied().collect()).unwrap()
}

#[test]
fn prefix_cusum_equals_naive_on_fifty_instances() {
    let mut s = 0x9e3779b97f4a7c15u64;
    let mut next = move || {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        s
    };
    for _ in 0..50 {
        let ranks: Vec<usize> = (0..1 + next() % 3).map(|_| 1 + (next() % 3) as usize).collect();
        let d: usize = ranks.iter().map(|&r| vech_len(r)).sum();
        let len = 3 + (next() % 60) as usize;
        let values: Vec<f64> = (0..len * d)
            .map(|_| (next() % 20_000) as f64 / 1000.0 - 10.0)
            .collect();
        let stats = PseudoFactorStats::from_values(ranks, len, values.clone()).unwrap();
        let a = (next() % (len as u64 - 2)) as usize;
        let b = a + 2 + (next() % (len - a - 1) as u64) as usize;
        let tau = a + 1 + (next() % (b - a - 1) as u64) as usize;
        let got = cusum(&stats, a, tau, b).unwrap();
        let want = naive_cusum(&values, d, a, tau, b);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() <= 1e-10 * (1.0 + w.abs()), "{g} vs {w}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 64,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn fold_inverts_unfold(
        dims in prop::collection::vec(1usize..5, 1..4),
        seed in any::<u64>(),
    ) {
        let n: usize = dims.iter().product();
        let data: Vec<f64> = (0..n).map(|i| ((seed.wrapping_add(i as u64 * 2654435761)) % 1000) as f64).collect();
        let x = Tensor::new(dims.clone(), data).unwrap();
        for k in 0..dims.len() {
            let u = x.unfold(k).unwrap();
            prop_assert!((u.frobenius_norm() - x.frobenius_norm()).abs() < 1e-9);
            prop_assert_eq!(Tensor::fold(&u, k, &dims).unwrap(), x.clone());
        }
    }

    #[test]
    fn scalar_change_gives_zero_xi(
        n in 1usize..6,
        entries in prop::collection::vec(-3.0f64..3.0, 36),
        c in 0.05f64..20.0,
    ) {
        let prev = random_sym(n, &entries);
        prop_assume!(prev.trace() > 1e-6);
        let next = prev.scaled(c * c);
        let xi = xi_from_covariances(&prev, &next, (0, 10), (10, 20)).unwrap();
        prop_assert!(xi.norm <= 1e-12, "norm {}", xi.norm);
    }

    #[test]
    fn xi_is_traceless(
        n in 1usize..6,
        e1 in prop::collection::vec(-3.0f64..3.0, 36),
        e2 in prop::collection::vec(-3.0f64..3.0, 36),
    ) {
        let (a, b) = (random_sym(n, &e1), random_sym(n, &e2));
        prop_assume!(a.trace() > 1e-6 && b.trace() > 1e-6);
        let xi = xi_from_covariances(&a, &b, (0, 3), (3, 6)).unwrap();
        prop_assert!(xi.matrix.trace().abs() < 1e-12);
        prop_assert!(xi.norm <= 1.0 + 1e-12);
    }

    #[test]
    fn scaling_factors_scales_cusum_quadratically(
        g in prop::collection::vec(-5.0f64..5.0, 24),
        c in 0.1f64..10.0,
    ) {
        let s1 = PseudoFactorStats::new(&TensorSeries::new(vec![2], 12, g.clone()).unwrap()).unwrap();
        let scaled: Vec<f64> = g.iter().map(|v| c * v).collect();
        let s2 = PseudoFactorStats::new(&TensorSeries::new(vec![2], 12, scaled).unwrap()).unwrap();
        let m1 = cusum(&s1, 1, 6, 11).unwrap();
        let m2 = cusum(&s2, 1, 6, 11).unwrap();
        for (a, b) in m1.iter().zip(&m2) {
            prop_assert!((b - c * c * a).abs() <= 1e-9 * (1.0 + (c * c * a).abs()));
        }
        let w = [1.0, 2.0, 0.5];
        let t1 = detector(&m1, &w);
        let t2 = detector(&m1, &w.map(|x| 2.0 * x));
        prop_assert!((t2 * t2 - t1 * t1 / 2.0).abs() <= 1e-9 * (1.0 + t1 * t1));
    }

    #[test]
    fn seeded_intervals_respect_their_construction(t in 8usize..3000) {
        let set = generate_seeded_intervals(t, (4.0 * (t as f64).ln()).log2()).unwrap();
        let mut bound = 0;
        for h in 1..=set.finest_level {
            bound += level_intervals(t, h).len();
        }
        prop_assert!(set.intervals.len() <= bound);
        for iv in &set.intervals {
            prop_assert!(iv.start < iv.end && iv.end <= t);
            let m = t as f64 / 2f64.powi(iv.level as i32);
            // floor on the left, ceiling on the right
            let len = iv.len() as f64;
            prop_assert!(len >= 2.0 * m - 1e-9 && len < 2.0 * m + 2.0);
        }
        let mut seen = std::collections::HashSet::new();
        for iv in &set.intervals {
            prop_assert!(seen.insert((iv.start, iv.end)));
        }
    }

    #[test]
    fn rotation_leaves_the_span_unchanged(
        entries in prop::collection::vec(-2.0f64..2.0, 15),
        angle in 0.0f64..std::f64::consts::TAU,
    ) {
        let a = Matrix::new(5, 3, entries).unwrap();
        let (s, c) = angle.sin_cos();
        let q = Matrix::from_rows(&[&[c, -s, 0.0], &[s, c, 0.0], &[0.0, 0.0, -1.0]]).unwrap();
        let aq = a.matmul(&q).unwrap();
        if let Ok(dist) = loading_distance(&aq, &a) {
            prop_assert!(dist < 1e-8);
        }
    }

    #[test]
    fn zeta_shrinks_with_t_and_p(t in 10usize..100_000, p in 2usize..100_000) {
        let z = threshold_zeta(t, p, 3.5);
        prop_assert!(threshold_zeta(t + 1, p, 3.5) < z);
        prop_assert!(threshold_zeta(t, p + 1, 3.5) < z);
    }
}
