use nalgebra::DMatrix;
use proptest::prelude::*;
use rhomix_core::conv::{conv_inverse, convolve, ToeplitzKernel};
use rhomix_core::discrete::{event_extremes, markov_chain_checks, maxcorr_blocks, maxcorr_pair, subjective_maxcorr_blocks};
use rhomix_core::event::lambda_fn;
use rhomix_core::gaussian::{condition, maxcorr_gaussian};
use rhomix_core::lattice::{quadratic_covariance, QuadraticModel};
use rhomix_core::seeds::rng;
use rhomix_core::tensor::sweep::{check_instance, random_instance, random_system};
use rhomix_core::{FinitePair, FiniteSystem, GaussianSystem};

const TOL: f64 = 1e-9;

fn joint(n: usize, m: usize) -> impl Strategy<Value = FinitePair> {
    prop::collection::vec(prop_oneof![1 => Just(0.0), 4 => 0.01f64..1.0], n * m).prop_filter_map("nonzero", move |raw| {
        let s: f64 = raw.iter().sum();
        (s > 0.0).then(|| {
            let rows: Vec<Vec<f64>> = raw.chunks(m).map(|c| c.iter().map(|v| v / s).collect()).collect();
            FinitePair::from_rows(&rows).unwrap()
        })
    })
}

fn any_pair() -> impl Strategy<Value = FinitePair> {
    (2usize..6, 2usize..6).prop_flat_map(|(n, m)| joint(n, m))
}

fn distribution(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..1.0, k).prop_map(|v| {
        let s: f64 = v.iter().sum();
        v.iter().map(|x| x / s).collect()
    })
}

fn covariance(d: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-1.0f64..1.0, d * d).prop_map(move |v| {
        let a = DMatrix::from_vec(d, d, v);
        &a * a.transpose() + DMatrix::identity(d, d) * 0.1
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn maxcorr_lies_in_the_unit_interval(pair in any_pair()) {
        let rho = maxcorr_pair(&pair).rho;
        prop_assert!((0.0..=1.0).contains(&rho));
    }

    #[test]
    fn product_laws_are_uncorrelated(px in distribution(4), py in distribution(3)) {
        let rho = maxcorr_pair(&FinitePair::product(&px, &py).unwrap()).rho;
        prop_assert!(rho < 1e-7, "rho = {rho}");
    }

    #[test]
    fn witnesses_attain_the_correlation(pair in any_pair()) {
        let rep = maxcorr_pair(&pair);
        prop_assume!(!rep.degenerate && rep.rho > 1e-6);
        let (px, py) = (pair.marginal_x(), pair.marginal_y());
        let mut cov = 0.0;
        for a in 0..px.len() {
            for b in 0..py.len() {
                cov += pair.joint[(a, b)] * rep.optimal_f[a] * rep.optimal_g[b];
            }
        }
        let mean_f: f64 = px.iter().zip(&rep.optimal_f).map(|(p, f)| p * f).sum();
        let var_f: f64 = px.iter().zip(&rep.optimal_f).map(|(p, f)| p * f * f).sum();
        let var_g: f64 = py.iter().zip(&rep.optimal_g).map(|(p, g)| p * g * g).sum();
        prop_assert!(mean_f.abs() < 1e-9);
        prop_assert!((var_f - 1.0).abs() < 1e-9 && (var_g - 1.0).abs() < 1e-9);
        prop_assert!((cov - rep.rho).abs() < 1e-9, "{cov} vs {}", rep.rho);
    }

    #[test]
    fn coarsening_cannot_increase_correlation(pair in (3usize..6, 2usize..5).prop_flat_map(|(n, m)| joint(n, m))) {
        let rho = maxcorr_pair(&pair).rho;
        let n = pair.joint.nrows();
        let merged = DMatrix::from_fn(n - 1, pair.joint.ncols(), |r, c| {
            if r == 0 { pair.joint[(0, c)] + pair.joint[(1, c)] } else { pair.joint[(r + 1, c)] }
        });
        let coarse = maxcorr_pair(&FinitePair::from_matrix(merged).unwrap()).rho;
        prop_assert!(coarse <= rho + TOL, "{coarse} > {rho}");
    }

    #[test]
    fn event_ratio_sandwiches_maxcorr(pair in any_pair()) {
        let rho = maxcorr_pair(&pair).rho;
        let ratio = event_extremes(&pair).unwrap().max_ratio;
        prop_assert!(ratio <= rho + TOL, "event {ratio} > rho {rho}");
        prop_assert!(rho <= lambda_fn(ratio) + TOL, "rho {rho} > Λ({ratio})");
    }

    #[test]
    fn independent_pairs_tensorize_to_the_maximum(a in any_pair(), b in any_pair()) {
        let to_system = |p: &FinitePair| {
            let flat: Vec<f64> = p.joint.row_iter().flat_map(|r| r.iter().copied().collect::<Vec<_>>()).collect();
            FiniteSystem::with_sizes(&[p.joint.nrows(), p.joint.ncols()], flat).unwrap()
        };
        let sys = to_system(&a).tensor(&to_system(&b)).unwrap();
        let joint = maxcorr_blocks(&sys, &[0, 2], &[1, 3]).unwrap();
        let expect = maxcorr_pair(&a).rho.max(maxcorr_pair(&b).rho);
        prop_assert!((joint - expect).abs() < 1e-7, "{joint} vs {expect}");
    }

    #[test]
    fn markov_correlations_contract(raw in prop::collection::vec(0.05f64..1.0, 16)) {
        let mut p = DMatrix::from_vec(4, 4, raw);
        for mut col in p.column_iter_mut() {
            let s = col.sum();
            col /= s;
        }
        let rep = markov_chain_checks(&p, 6).unwrap();
        for w in rep.lagged_maxcorr.windows(2) {
            prop_assert!(w[1] <= w[0] + TOL);
        }
        for (m, b) in rep.lagged_maxcorr.iter().zip(&rep.product_bound) {
            prop_assert!(*m <= b + TOL);
        }
    }

    #[test]
    fn conditioning_on_nothing_is_plain_correlation(seed in any::<u64>()) {
        let sys = random_system(&mut rng(seed), &[2, 3, 2]);
        let plain = maxcorr_blocks(&sys, &[0], &[1]).unwrap();
        let cond = subjective_maxcorr_blocks(&sys, &[0], &[1], &[]).unwrap();
        prop_assert!((plain - cond).abs() < 1e-9);
        let clamped = subjective_maxcorr_blocks(&sys, &[0], &[1], &[2]).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&clamped));
    }

    #[test]
    fn conditioning_an_independent_factor_changes_nothing(pair in any_pair(), extra in distribution(3)) {
        let flat: Vec<f64> = pair.joint.row_iter().flat_map(|r| r.iter().copied().collect::<Vec<_>>()).collect();
        let base = FiniteSystem::with_sizes(&[pair.joint.nrows(), pair.joint.ncols()], flat).unwrap();
        let sys = base.tensor(&FiniteSystem::with_sizes(&[3], extra).unwrap()).unwrap();
        let cond = subjective_maxcorr_blocks(&sys, &[0], &[1], &[2]).unwrap();
        prop_assert!((cond - maxcorr_pair(&pair).rho).abs() < 1e-7);
    }

    #[test]
    fn gaussian_correlation_dominates_linear(cov in covariance(4), scale in 0.1f64..10.0) {
        let sys = GaussianSystem::unlabeled(cov.clone()).unwrap();
        let rho = maxcorr_gaussian(&sys, &[0, 1], &[2, 3]).unwrap();
        prop_assert!((0.0..=1.0).contains(&rho));
        for i in 0..2 {
            for j in 2..4 {
                let r = cov[(i, j)] / (cov[(i, i)] * cov[(j, j)]).sqrt();
                prop_assert!(r.abs() <= rho + TOL);
            }
        }
        let mut scaled = cov.clone();
        scaled.row_mut(0).scale_mut(scale);
        scaled.column_mut(0).scale_mut(scale);
        let again = maxcorr_gaussian(&GaussianSystem::unlabeled(scaled).unwrap(), &[0, 1], &[2, 3]).unwrap();
        prop_assert!((again - rho).abs() < 1e-9);
        let given = condition(&sys, &[3]).unwrap();
        prop_assert_eq!(given.dim(), 3);
    }

    #[test]
    fn tensorization_bounds_are_sound(seed in any::<u64>()) {
        let inst = random_instance(&mut rng(seed), 3, 3);
        let out = check_instance(&inst, 10).unwrap();
        prop_assert!(out.nm_slack >= -TOL, "nm slack {}", out.nm_slack);
        prop_assert!(out.zz_slack >= -TOL, "zz slack {}", out.zz_slack);
        if let Some(s) = out.simple_slack {
            prop_assert!(s >= -TOL, "simple slack {s}");
        }
        prop_assert!(out.event_lower_slack >= -TOL && out.event_upper_slack >= -TOL);
    }

    #[test]
    fn convolution_inverse_solves_the_identity(w in prop::collection::vec(0.0f64..1.0, 4), mass in 0.05f64..0.8) {
        let total: f64 = w.iter().sum::<f64>() * 2.0;
        prop_assume!(total > 0.0);
        let a = ToeplitzKernel::from_fn(1, 4, |z| {
            let k = z[0].unsigned_abs() as usize;
            if k == 0 { 0.0 } else { w[k - 1] * mass / total }
        }).unwrap();
        let inv = conv_inverse(&a).unwrap();
        prop_assert!(inv.identity_residual < 1e-12);
        prop_assert!(inv.kernel.is_nonnegative());
        let r = inv.kernel.radius.min(8);
        let ab = convolve(&a, &inv.kernel, r).unwrap();
        for d in -(r as i64) + 4..=(r as i64) - 4 {
            let lhs = inv.kernel.get(&[d]);
            let rhs = a.get(&[d]) + ab.get(&[d]);
            prop_assert!((lhs - rhs).abs() < 1e-12 + inv.error_bound, "offset {d}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn attractive_gaussian_lattices_have_nonnegative_kernels(gamma in 0.0f64..0.9, n in 1usize..3) {
        let cov = quadratic_covariance(&QuadraticModel::nearest_neighbour(n, gamma).unwrap()).unwrap();
        prop_assert!(cov.a_inv.is_nonnegative());
        for (_, v) in cov.kernel.points() {
            prop_assert!((0.0..=1.0 + 1e-12).contains(&v));
        }
    }
}
