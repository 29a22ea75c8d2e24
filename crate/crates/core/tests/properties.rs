use proptest::prelude::*;

use landing_core::geometry::{
    ortho_residual, penalty_gradient, relative_gradient_from, residual, riemannian_gradient,
    skew_part, sym_part,
};
use landing_core::landing::{momentum_landing_step, safe_step_size};
use landing_core::problems::{Procrustes, Side};
use landing_core::retractions::retract;
use landing_core::{
    GeometryKind, Matrix, OptimizerConfig, OptimizerState, RetractionKind, RngState,
};

/// Invertible point `Q + s·G` with `Q` orthogonal.
fn near_orthogonal(rng: &mut RngState, p: usize, s: f64) -> Matrix<f64> {
    let mut x = rng.orthogonal::<f64>(p);
    x.axpy(s / (p as f64).sqrt(), &rng.gaussian(p, p));
    x
}

/// Point with `‖XXᵀ - I‖ = d` exactly, built as `(I + Δ)^{1/2} Q` from a
/// symmetric `Δ` whose eigenvalues exceed -1.
fn at_residual(rng: &mut RngState, p: usize, d: f64) -> Matrix<f64> {
    let q = rng.orthogonal::<f64>(p);
    let mut lam: Vec<f64> = (0..p).map(|_| rng.normal()).collect();
    let norm = lam.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
    lam.iter_mut()
        .for_each(|v| *v = (*v * d / norm).max(-0.999));
    let v = rng.orthogonal::<f64>(p);
    let root = Matrix::from_diag(&lam.iter().map(|l| (1.0 + l).sqrt()).collect::<Vec<_>>());
    v.matmul(&root).matmul_t(&v).matmul(&q)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn skew_and_sym_parts_recompose(seed in any::<u64>(), p in 1usize..9) {
        let m = RngState::new(seed).gaussian::<f64>(p, p);
        let a = skew_part(&m);
        prop_assert_eq!(a.transpose(), a.scale(-1.0));
        prop_assert!((&(&a + &sym_part(&m)) - &m).max_abs() <= 1e-15 * m.max_abs());
    }

    #[test]
    fn riemannian_gradient_is_orthogonal_to_penalty_gradient(seed in any::<u64>(), p in 2usize..12) {
        let mut rng = RngState::new(seed);
        let x = near_orthogonal(&mut rng, p, 0.5);
        let g = rng.gaussian::<f64>(p, p);
        let field = relative_gradient_from(&g, &x).matmul(&x);
        let pen = penalty_gradient(&x, GeometryKind::Orthogonal(p));
        prop_assert!(field.dot(&pen).abs() <= 1e-10 * field.norm() * pen.norm());
    }

    #[test]
    fn residual_norm_inequality(seed in any::<u64>(), p in 1usize..10, s in 0.0f64..3.0) {
        let mut rng = RngState::new(seed);
        let x = near_orthogonal(&mut rng, p, s);
        let delta = residual(&x, GeometryKind::Orthogonal(p));
        let d = delta.norm();
        prop_assert!(delta.matmul(&x).norm_sq() >= d * d - d * d * d - 1e-12);
    }

    #[test]
    fn safe_step_keeps_iterates_in_the_tube(
        seed in any::<u64>(), p in 2usize..8, frac in 0.0f64..1.0, a_scale in 0.0f64..5.0,
    ) {
        let eps = 0.5;
        let lambda = 1.0;
        let mut rng = RngState::new(seed);
        let x = at_residual(&mut rng, p, frac * eps);
        let kind = GeometryKind::Orthogonal(p);
        let a = rng.skew::<f64>(p, a_scale);
        let delta = residual(&x, kind);
        let d = delta.norm();
        let eta = safe_step_size(a.norm(), d, eps, lambda).unwrap().clamp(10.0) * rng.uniform();
        let mut dir = delta.scale(lambda);
        dir += &a;
        let mut next = x.clone();
        next.axpy(-eta, &dir.matmul(&x));
        prop_assert!(ortho_residual(&next, kind) <= eps * (1.0 + 1e-12));
    }

    #[test]
    fn retractions_are_first_order_and_feasible(seed in any::<u64>(), p in 2usize..10) {
        let mut rng = RngState::new(seed);
        let x = rng.orthogonal::<f64>(p);
        let a = rng.skew::<f64>(p, 1.0);
        let kind = GeometryKind::Orthogonal(p);
        for r in RetractionKind::ALL {
            let err = |t: f64| {
                let mut lin = x.clone();
                lin.axpy(t, &a.matmul(&x));
                (retract(r, &x, &a.scale(t)).unwrap() - &lin).norm()
            };
            let (e2, e4) = (err(1e-2), err(1e-4));
            let slope = (e2 / e4).log10() / 2.0;
            prop_assert!(slope >= 1.9 || e4 <= 1e-13, "{r}: slope {slope}");
            let y = retract(r, &x, &a.scale(0.1)).unwrap();
            prop_assert!(ortho_residual(&y, kind) <= 1e-11 * p as f64);
        }
    }

    #[test]
    fn momentum_buffer_stays_skew(seed in any::<u64>()) {
        let mut rng = RngState::new(seed);
        let prob = Procrustes::<f64>::random(5, Side::Right, &mut rng).unwrap();
        let cfg = OptimizerConfig { gamma: 0.5, ..OptimizerConfig::with_step(0.1) };
        let mut state = OptimizerState::new(prob.start_point(&mut rng));
        let kind = GeometryKind::Orthogonal(5);
        for _ in 0..30 {
            momentum_landing_step(&prob, &mut state, &cfg, kind).unwrap();
            let m = &state.momentum;
            prop_assert!((m + &m.transpose()).norm() <= 1e-12 * m.norm());
            prop_assert!(ortho_residual(&state.x, kind) <= cfg.eps);
        }
    }

    #[test]
    fn riemannian_gradient_norm_on_manifold(seed in any::<u64>(), p in 2usize..10) {
        let mut rng = RngState::new(seed);
        let prob = Procrustes::<f64>::random(p, Side::Left, &mut rng).unwrap();
        let x = rng.orthogonal::<f64>(p);
        let psi = relative_gradient_from(&landing_core::Problem::egrad(&prob, &x), &x);
        let g = riemannian_gradient(&prob, &x);
        prop_assert!((g.norm() - psi.norm()).abs() <= 1e-12 * psi.norm().max(1.0));
    }
}
