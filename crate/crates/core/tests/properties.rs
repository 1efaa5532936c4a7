use nalgebra::DMatrix;
use proptest::prelude::*;

use stochdd::adapt::{build_isometry, hilbert_kl, hilbert_kl_factored, truncation_error_indicator};
use stochdd::chaos::MultiIndexSet;
use stochdd::diffusion::{assemble, solve, BcCase};
use stochdd::mesh::{build_grid, Rect};
use stochdd::sparse_grid::{node_count, smolyak};
use stochdd::validation::{ks_distance, rel_l2_error, RunningStats};

fn dfact(k: u32) -> f64 {
    (1..=k).map(|i| (2 * i - 1) as f64).product()
}

fn gaussian_moment(alpha: &[u32]) -> f64 {
    alpha.iter().map(|&a| if a % 2 == 1 { 0.0 } else { dfact(a / 2) }).product()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn smolyak_integrates_total_degree(d in 1usize..5, level in 0usize..4, seed in any::<u64>()) {
        let sg = smolyak(d, level).unwrap();
        let max = 2 * level + 1;
        let mut s = seed;
        let mut alpha = vec![0u32; d];
        let mut budget = max as u32;
        for a in alpha.iter_mut() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let take = ((s >> 33) % (budget as u64 + 1)) as u32;
            *a = take;
            budget -= take;
        }
        let q = sg.integrate(|z| z.iter().zip(&alpha).map(|(x, &a)| x.powi(a as i32)).product());
        let exact = gaussian_moment(&alpha);
        prop_assert!((q - exact).abs() <= 1e-10 * exact.max(1.0), "alpha={:?} q={} exact={}", alpha, q, exact);
    }

    #[test]
    fn node_count_matches_grid(d in 1usize..7, level in 0usize..5) {
        prop_assert_eq!(node_count(d, level), smolyak(d, level).unwrap().len());
    }

    #[test]
    fn isometry_is_orthogonal(n in 8usize..40, d in 1usize..7, entries in prop::collection::vec(-3.0f64..3.0, 280)) {
        let u = DMatrix::from_fn(n, d, |r, c| entries[(r * 7 + c) % entries.len()] + 0.01 * (r * d + c) as f64);
        let w: Vec<f64> = (0..n).map(|k| 0.5 + (k % 4) as f64 * 0.25).collect();
        let pairs = hilbert_kl_factored(&u, &w).unwrap();
        for pair in pairs.values.windows(2) {
            prop_assert!(pair[0] >= pair[1]);
        }
        let trace: f64 = (0..n).map(|k| w[k] * u.row(k).norm_squared()).sum();
        prop_assert!((pairs.values.iter().sum::<f64>() - trace).abs() <= 1e-8 * trace);
        let map = build_isometry(1, &u, &pairs.values, &pairs.vectors, &w, 1).unwrap();
        prop_assert!(map.isometry_error() <= 1e-10);
        let xi = map.map_node(&[1.7]).unwrap();
        let norm: f64 = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!((norm - 1.7).abs() < 1e-12);
    }

    #[test]
    fn indicator_monotone(mu in prop::collection::vec(0.0f64..10.0, 1..12)) {
        let mut mu = mu;
        mu.sort_by(|a, b| b.total_cmp(a));
        prop_assume!(mu[0] > 0.0);
        let mut last = 1.0;
        for r in 0..=mu.len() {
            let v = truncation_error_indicator(&mu, r).unwrap();
            prop_assert!(v <= last + 1e-15 && (0.0..=1.0).contains(&v));
            last = v;
        }
        prop_assert_eq!(truncation_error_indicator(&mu, mu.len()).unwrap(), 0.0);
    }

    #[test]
    fn maximum_principle_and_conservation(g in prop::collection::vec(-2.0f64..2.0, 15 * 6)) {
        let grid = build_grid(Rect::new(0.0, 240.0, 0.0, 60.0), 15, 6).unwrap();
        let a: Vec<f64> = g.iter().map(|x| x.exp()).collect();
        let f = vec![0.0; grid.len()];
        let sys = assemble(&grid, &a, BcCase::Mixed, &f).unwrap();
        let m = sys.matrix.to_dense();
        prop_assert_eq!(&m, &m.transpose());
        let u = solve(&sys).unwrap().values;
        for &v in &u {
            prop_assert!((10.0 - 1e-10..=100.0 + 1e-10).contains(&v));
        }
        let flux = sys.boundary_flux(&u);
        prop_assert!((flux.left + flux.right).abs() <= 1e-8 * flux.left.abs());
        let sys = assemble(&grid, &a, BcCase::AllDirichlet, &f).unwrap();
        for v in solve(&sys).unwrap().values {
            prop_assert!((-1e-10..=100.0 + 1e-10).contains(&v));
        }
    }

    #[test]
    fn relative_error_is_scale_free(f in prop::collection::vec(-5.0f64..5.0, 20), g in prop::collection::vec(0.5f64..5.0, 20), c in prop_oneof![-10.0f64..-0.1, 0.1f64..10.0]) {
        let w = vec![0.7; 20];
        let e = rel_l2_error(&f, &g, &w, None).unwrap();
        let cf: Vec<f64> = f.iter().map(|x| c * x).collect();
        let cg: Vec<f64> = g.iter().map(|x| c * x).collect();
        prop_assert!((rel_l2_error(&cf, &cg, &w, None).unwrap() - e).abs() <= 1e-12 * e.max(1.0));
    }

    #[test]
    fn streaming_variance_matches_two_pass(xs in prop::collection::vec(-1e3f64..1e3, 2..200)) {
        let mut s = RunningStats::new(1);
        for &x in &xs {
            s.push(&[x]);
        }
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        prop_assert!((s.variance()[0] - v).abs() <= 1e-10 * v.max(1e-300) + 1e-20);
    }

    #[test]
    fn ks_is_a_symmetric_distance(a in prop::collection::vec(-3.0f64..3.0, 1..60), b in prop::collection::vec(-3.0f64..3.0, 1..60)) {
        let ab = ks_distance(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert!((ab - ks_distance(&b, &a).unwrap()).abs() < 1e-15);
        prop_assert_eq!(ks_distance(&a, &a).unwrap(), 0.0);
    }
}

#[test]
fn eta_basis_orthonormal_on_reduced_grid() {
    let basis = MultiIndexSet::new(3, 3).unwrap();
    let sg = smolyak(3, 4).unwrap();
    let psi: Vec<Vec<f64>> = sg.nodes.iter().map(|z| basis.eval_all(z).unwrap()).collect();
    for i in 0..basis.len() {
        for j in 0..basis.len() {
            let ip: f64 = psi.iter().zip(&sg.weights).map(|(p, w)| w * p[i] * p[j]).sum();
            let expect = if i == j { 1.0 } else { 0.0 };
            assert!((ip - expect).abs() < 1e-10, "({i},{j}) {ip}");
        }
    }
}

#[test]
fn covariance_eigenproblem_is_psd_with_rank_at_most_d() {
    let n = 30;
    let u = DMatrix::from_fn(n, 3, |r, c| ((r + 1) as f64 * (c + 2) as f64).sin());
    let cov = &u * u.transpose();
    let w = vec![1.0; n];
    let pairs = hilbert_kl(&cov, &w, 6).unwrap();
    assert!(pairs.values[3..].iter().all(|&m| m.abs() <= 1e-10 * pairs.values[0]));
    let min = nalgebra::SymmetricEigen::new(cov).eigenvalues.min();
    assert!(min >= -1e-10 * pairs.values[0]);
}
