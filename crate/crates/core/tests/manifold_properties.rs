//! Randomized invariants of qf, tangent projection and retraction.

use gbp::linalg::{matmul, matmul_tn, qf, Matrix};
use gbp::manifold::{stiefel_defect, Manifold};
use gbp::optim::gbp_update;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn shape() -> impl Strategy<Value = (usize, usize)> {
    (1usize..12).prop_flat_map(|n| (Just(n), 1..=n))
}

fn gaussian(n: usize, p: usize, seed: u64) -> Matrix {
    Matrix::random_normal(n, p, 1.0, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn skew_defect(w: &Matrix, t: &Matrix) -> f64 {
    let a = matmul_tn(w, t).unwrap();
    a.add(&a.transpose()).unwrap().frobenius_norm()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn qf_is_orthonormal_and_idempotent((n, p) in shape(), seed in any::<u64>()) {
        let q = qf(&gaussian(n, p, seed)).unwrap();
        prop_assert!(stiefel_defect(&q) < 1e-12);
        let again = qf(&q).unwrap();
        prop_assert!(again.sub(&q).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn qf_spans_the_input((n, p) in shape(), seed in any::<u64>()) {
        // A = Q·R with R = Qᵀ A upper triangular, positive diagonal
        let a = gaussian(n, p, seed);
        let q = qf(&a).unwrap();
        let r = matmul_tn(&q, &a).unwrap();
        prop_assert!(matmul(&q, &r).unwrap().sub(&a).unwrap().max_abs() < 1e-10);
        for i in 0..p {
            prop_assert!(r.get(i, i) > 0.0);
            for j in 0..i {
                prop_assert!(r.get(i, j).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn tangent_projection_is_tangent_and_idempotent((n, p) in shape(), seed in any::<u64>()) {
        let m = Manifold::stiefel(n, p).unwrap();
        let w = m.random_point(seed);
        let g = gaussian(n, p, seed ^ 1);
        let t = m.tangent_project(&w, &g).unwrap();
        prop_assert!(skew_defect(&w, &t) < 1e-12);
        let tt = m.tangent_project(&w, &t).unwrap();
        prop_assert!(tt.sub(&t).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn oblique_projection_is_tangent((n, p) in shape(), seed in any::<u64>()) {
        let m = Manifold::oblique(n, p).unwrap();
        let w = m.random_point(seed);
        let t = m.tangent_project(&w, &gaussian(n, p, seed ^ 2)).unwrap();
        for j in 0..p {
            let dot: f64 = (0..n).map(|i| w.get(i, j) * t.get(i, j)).sum();
            prop_assert!(dot.abs() < 1e-12);
        }
    }

    #[test]
    fn retraction_stays_feasible((n, p) in shape(), seed in any::<u64>(), scale in 0.0f64..10.0) {
        let m = Manifold::stiefel(n, p).unwrap();
        let w = m.random_point(seed);
        let t = m.tangent_project(&w, &gaussian(n, p, seed ^ 3)).unwrap();
        let norm = t.frobenius_norm();
        prop_assume!(norm > 1e-12);
        let xi = t.scale(scale / norm);
        let r = m.retract(&w, &xi).unwrap();
        prop_assert!(m.defect(&r) < 1e-10);
    }

    #[test]
    fn retraction_agrees_to_first_order((n, p) in shape(), seed in any::<u64>()) {
        let m = Manifold::stiefel(n, p).unwrap();
        let w = m.random_point(seed);
        let t = m.tangent_project(&w, &gaussian(n, p, seed ^ 4)).unwrap();
        prop_assume!(t.frobenius_norm() > 1e-3);
        let xi = t.scale(1.0 / t.frobenius_norm());
        let gap = |eps: f64| {
            let step = xi.scale(eps);
            m.retract(&w, &step).unwrap().sub(&w.add(&step).unwrap()).unwrap().frobenius_norm()
        };
        // second-order remainder: dividing eps by 10 divides the gap by ~100
        prop_assert!(gap(1e-4) <= 1e-2 * gap(1e-3) * 3.0 + 1e-14);
        prop_assert!(gap(1e-3) < 1e-5);
    }

    #[test]
    fn small_gbp_step_descends((n, p) in shape(), seed in any::<u64>()) {
        // f(W) = ⟨G, W⟩, so ∇f = G
        let m = Manifold::stiefel(n, p).unwrap();
        let w = m.random_point(seed);
        let g = gaussian(n, p, seed ^ 5);
        let rg = m.tangent_project(&w, &g).unwrap();
        prop_assume!(rg.frobenius_norm() > 1e-6);
        let f = |x: &Matrix| -> f64 {
            x.as_slice().iter().zip(g.as_slice()).map(|(a, b)| a * b).sum()
        };
        let next = gbp_update(&m, &w, &g, 1e-3 / rg.frobenius_norm()).unwrap();
        prop_assert!(f(&next) < f(&w));
    }

    #[test]
    fn polar_projection_is_nearest_among_samples((n, p) in shape(), seed in any::<u64>()) {
        let m = Manifold::stiefel(n, p).unwrap();
        let a = gaussian(n, p, seed);
        let proj = m.project(&a).unwrap();
        prop_assert!(m.defect(&proj) < 1e-10);
        let best = proj.sub(&a).unwrap().frobenius_norm();
        for k in 0..5 {
            let other = m.random_point(seed.wrapping_add(k));
            prop_assert!(other.sub(&a).unwrap().frobenius_norm() >= best - 1e-10);
        }
    }
}
