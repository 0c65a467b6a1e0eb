//! Hand-derived values and brute-force cross-checks through the public API.

use nalgebra::DMatrix;
use tfmseg::factor::{estimate_loadings, estimate_pseudo_factors, mode_covariance, LoadingSet};
use tfmseg::matrix::kron;
use tfmseg::modeid::{
    adjusted_endpoints, loading_distance, threshold_zeta, xi_from_covariances, EndpointMode,
};
use tfmseg::segmentation::cusum::bartlett_long_run_diag;
use tfmseg::segmentation::intervals::level_intervals;
use tfmseg::segmentation::threshold::{regressors, vech_dimension};
use tfmseg::segmentation::{cusum, detector, generate_seeded_intervals, threshold_pi};
use tfmseg::sim::metrics::{evaluate_detection, evaluate_mode_id};
use tfmseg::sim::size_of_change;
use tfmseg::{
    GroundTruth, Matrix, Provenance, PseudoFactorStats, Scenario, SymMatrix, Tensor,
    TensorSeries, ThresholdCoefficients,
};

fn lcg(seed: u64) -> impl FnMut() -> f64 {
    let mut s = seed;
    move || {
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    }
}

fn to_dmatrix(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_column_slice(m.rows(), m.cols(), m.data())
}

#[test]
fn seeded_intervals_for_sixteen() {
    let set = generate_seeded_intervals(16, 2.5).unwrap();
    let got: Vec<(usize, usize)> = set.intervals.iter().map(|iv| (iv.start, iv.end)).collect();
    assert_eq!(got, vec![(0, 16), (0, 8), (4, 12), (8, 16)]);
    let finer: Vec<(usize, usize)> = set.finer.iter().map(|iv| (iv.start, iv.end)).collect();
    assert_eq!(
        finer,
        vec![(0, 4), (2, 6), (4, 8), (6, 10), (8, 12), (10, 14), (12, 16)]
    );
    assert_eq!(level_intervals(16, 3).len(), 7);
}

#[test]
fn theoretical_endpoints_around_nine() {
    let set = generate_seeded_intervals(16, 2.0).unwrap();
    let e = adjusted_endpoints(&[9], &set.finer, EndpointMode::Theoretical);
    assert_eq!((e[0].minus, e[0].plus), (4, 14));
    let p = adjusted_endpoints(&[9], &set.finer, EndpointMode::Practical);
    assert_eq!((p[0].minus, p[0].plus), (9, 9));
    // (a, b] with b = θ̂ counts on the left; a = θ̂ does not count on the right.
    let e = adjusted_endpoints(&[8], &set.finer, EndpointMode::Theoretical);
    assert_eq!((e[0].minus, e[0].plus), (4, 14));
}

#[test]
fn cusum_and_detector_hand_example() {
    let g: Vec<f64> = [1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 2.0].to_vec();
    let series = TensorSeries::new(vec![1], 8, g).unwrap();
    let stats = PseudoFactorStats::new(&series).unwrap();
    let m = cusum(&stats, 0, 4, 8).unwrap();
    assert!((m[0] - 3.0 * 2f64.sqrt()).abs() < 1e-12);
    assert!((detector(&m, &[1.0]) - 4.242640687119285).abs() < 1e-12);
    let t1 = detector(&m, &[1.0]);
    let t2 = detector(&m, &[2.0]);
    assert!((t2 * t2 - t1 * t1 / 2.0).abs() < 1e-12);
}

#[test]
fn bartlett_hand_example() {
    let w = bartlett_long_run_diag(&[1.0, -1.0, 1.0, -1.0], 1, 1);
    assert!((w[0] - 0.25).abs() < 1e-15);
}

#[test]
fn bartlett_matches_direct_autocovariances() {
    let mut rng = lcg(9);
    let (t, d, bw) = (37, 3, 2);
    let rows: Vec<f64> = (0..t * d).map(|_| rng()).collect();
    let got = bartlett_long_run_diag(&rows, d, bw);
    for i in 0..d {
        let gamma = |l: usize| -> f64 {
            (l..t).map(|s| rows[s * d + i] * rows[(s - l) * d + i]).sum::<f64>() / t as f64
        };
        let mut want = gamma(0);
        for l in 1..=bw {
            want += (1.0 - l as f64 / (bw + 1) as f64) * 2.0 * gamma(l);
        }
        assert!((got[i] - want).abs() < 1e-12);
    }
}

#[test]
fn xi_hand_example() {
    let prev = SymMatrix::identity(2);
    let next = SymMatrix::from_diagonal(&[3.0, 1.0]);
    let xi = xi_from_covariances(&prev, &next, (0, 5), (5, 10)).unwrap();
    assert!((xi.matrix.get(0, 0) - 0.25).abs() < 1e-15);
    assert!((xi.matrix.get(1, 1) + 0.25).abs() < 1e-15);
    assert_eq!(xi.matrix.get(0, 1), 0.0);
    assert!((xi.norm - 0.25).abs() < 1e-15);
}

#[test]
fn zeta_and_threshold_arithmetic() {
    assert!((threshold_zeta(400, 1000, 3.5) - 0.1785).abs() < 1e-12);
    assert_eq!(vech_dimension(&[3, 3, 3]), 18);
    let t = std::f64::consts::E.powi(4).round() as usize;
    let c = ThresholdCoefficients::from_array([0.0, 0.0, 1.0, 0.0, 0.0]);
    // ln(55) is within 0.2% of 4, so √ln T ≈ 2.
    assert!((threshold_pi(t, &[1], &c) - 2.0).abs() < 5e-3);
    let x = regressors(1000, 18);
    assert_eq!(x[0], 1.0);
    assert!((x[1] - 18f64.sqrt()).abs() < 1e-15);
}

#[test]
fn size_of_change_toy() {
    let truth = GroundTruth {
        scenario: Scenario::S0,
        t: 10,
        dims: vec![2],
        ranks: vec![2],
        locations: vec![5],
        mode_sets: vec![vec![0]],
        base_loadings: vec![Matrix::identity(2)],
        transforms: vec![vec![Matrix::identity(2).scaled(2.0)]],
    };
    let (per_mode, total) = size_of_change(&truth, 0).unwrap();
    assert!((per_mode[0] - 3.0 * 2f64.sqrt()).abs() < 1e-12);
    assert!((total - 4.242640687119285).abs() < 1e-12);
}

#[test]
fn metric_boundaries() {
    let t = 400;
    let r = (2.0 * (t as f64).ln()).floor() as usize;
    assert!(evaluate_detection(&[100 + r], &[100], t).accurate[0]);
    assert!(!evaluate_detection(&[100 + r + 1], &[100], t).accurate[0]);
    assert_eq!(evaluate_mode_id(&[1], &[0], 3), (0.0, 0.5));
    assert_eq!(evaluate_mode_id(&[], &[], 3), (0.0, 0.0));
}

#[test]
fn unfold_and_mode_product_against_brute_force() {
    let mut rng = lcg(3);
    let dims = vec![3, 4, 5];
    let x = Tensor::new(dims.clone(), (0..60).map(|_| rng()).collect()).unwrap();
    for k in 0..3 {
        let u = x.unfold(k).unwrap();
        // mat_k(X) = Σ over multi-indices; column index runs over the other
        // modes with the lowest mode fastest.
        for i0 in 0..3 {
            for i1 in 0..4 {
                for i2 in 0..5 {
                    let idx = [i0, i1, i2];
                    let others: Vec<usize> = (0..3).filter(|&m| m != k).collect();
                    let col = idx[others[0]] + dims[others[0]] * idx[others[1]];
                    assert_eq!(u.get(idx[k], col), x.get(&idx));
                }
            }
        }
        let m = Matrix::from_fn(2, dims[k], |_, _| rng());
        let y = x.mode_product(&m, k).unwrap();
        let mut out_dims = dims.clone();
        out_dims[k] = 2;
        for i0 in 0..out_dims[0] {
            for i1 in 0..out_dims[1] {
                for i2 in 0..out_dims[2] {
                    let idx = [i0, i1, i2];
                    let want: f64 = (0..dims[k])
                        .map(|j| {
                            let mut src = idx;
                            src[k] = j;
                            m.get(idx[k], j) * x.get(&src)
                        })
                        .sum();
                    assert!((y.get(&idx) - want).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn kron_against_definition() {
    let mut rng = lcg(5);
    let a = Matrix::from_fn(2, 2, |_, _| rng());
    let b = Matrix::from_fn(3, 3, |_, _| rng());
    let k = kron(&[&a, &b]).unwrap();
    let want = to_dmatrix(&a).kronecker(&to_dmatrix(&b));
    for i in 0..6 {
        for j in 0..6 {
            assert!((k.get(i, j) - want[(i, j)]).abs() < 1e-15);
        }
    }
}

#[test]
fn mode_covariance_against_naive_loops() {
    let mut rng = lcg(11);
    let dims = vec![3, 2, 4];
    let p = 24;
    let series = TensorSeries::new(dims.clone(), 6, (0..6 * p).map(|_| rng()).collect()).unwrap();
    for k in 0..3 {
        let c = mode_covariance(&series, k, 1, 5).unwrap();
        for i in 0..dims[k] {
            for j in 0..dims[k] {
                let mut s = 0.0;
                for t in 1..5 {
                    let u = series.tensor(t).unfold(k).unwrap();
                    for c in 0..u.cols() {
                        s += u.get(i, c) * u.get(j, c);
                    }
                }
                let want = s / (4.0 * p as f64);
                assert!((c.get(i, j) - want).abs() < 1e-12, "mode {k} ({i},{j})");
            }
        }
    }
}

#[test]
fn pseudo_factors_against_nested_contraction() {
    let mut rng = lcg(13);
    let dims = vec![4, 3, 5];
    let ranks = [2, 1, 2];
    let p = 60;
    let series = TensorSeries::new(dims.clone(), 2, (0..2 * p).map(|_| rng()).collect()).unwrap();
    let loadings: Vec<Matrix> = (0..3).map(|k| Matrix::from_fn(dims[k], ranks[k], |_, _| rng())).collect();
    let set = LoadingSet {
        loadings: loadings.clone(),
        provenance: Provenance::Global,
    };
    let g = estimate_pseudo_factors(&series, &set).unwrap();
    for t in 0..2 {
        let x = series.tensor(t);
        for a in 0..2 {
            for b in 0..1 {
                for c in 0..2 {
                    let mut s = 0.0;
                    for i in 0..4 {
                        for j in 0..3 {
                            for l in 0..5 {
                                s += x.get(&[i, j, l])
                                    * loadings[0].get(i, a)
                                    * loadings[1].get(j, b)
                                    * loadings[2].get(l, c);
                            }
                        }
                    }
                    let got = g.tensor(t).get(&[a, b, c]);
                    assert!((got - s / p as f64).abs() < 1e-12);
                }
            }
        }
    }
}

/// `‖P_Â − P_A‖ = sin θ_max`, the largest principal angle between the spans.
fn principal_angle_distance(a: &Matrix, b: &Matrix) -> f64 {
    if a.cols() != b.cols() {
        return 1.0;
    }
    let qa = to_dmatrix(a).qr().q();
    let qb = to_dmatrix(b).qr().q();
    let s = (qa.transpose() * &qb).singular_values();
    let min_cos = s.iter().cloned().fold(f64::INFINITY, f64::min).min(1.0);
    (1.0 - min_cos * min_cos).max(0.0).sqrt()
}

#[test]
fn loading_distance_matches_principal_angles() {
    let mut rng = lcg(17);
    for _ in 0..20 {
        let a = Matrix::from_fn(7, 3, |_, _| rng());
        let noise = Matrix::from_fn(7, 3, |_, _| 0.2 * rng());
        let q = to_dmatrix(&Matrix::from_fn(3, 3, |_, _| rng())).qr().q();
        let rotated = to_dmatrix(&a) * q + to_dmatrix(&noise);
        let b = Matrix::new(7, 3, rotated.as_slice().to_vec()).unwrap();
        let got = loading_distance(&b, &a).unwrap();
        assert!((got - principal_angle_distance(&b, &a)).abs() < 1e-10);
    }
    let e1 = Matrix::new(2, 1, vec![1.0, 0.0]).unwrap();
    let e2 = Matrix::new(2, 1, vec![0.0, 1.0]).unwrap();
    assert!((loading_distance(&e1, &e2).unwrap() - 1.0).abs() < 1e-15);
}

#[test]
fn rank_one_noiseless_series_recovers_the_span() {
    let mut rng = lcg(21);
    let p = 12;
    let lambda: Vec<f64> = (0..p).map(|_| rng()).collect();
    let norm = lambda.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut data = Vec::new();
    for _ in 0..30 {
        let f = rng();
        data.extend(lambda.iter().map(|l| l / norm * f));
    }
    let series = TensorSeries::new(vec![p], 30, data).unwrap();
    let est = estimate_loadings(&series, &[1]).unwrap();
    let target = Matrix::new(p, 1, lambda).unwrap();
    assert!(loading_distance(&est.loadings[0], &target).unwrap() < 1e-10);
}
