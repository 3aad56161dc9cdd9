mod common;

use blockgraph::bounds::{certify, lower_bounds, spectral_shift, upper_bounds};
use blockgraph::ensemble::unitary_invariance;
use blockgraph::linalg::{self, Subspace};
use blockgraph::model::{generate, GeneratorSpec};
use blockgraph::projections::norm_relations;
use blockgraph::riccati::{family_member, solve_detailed};
use blockgraph::{Matrix, Tolerances};
use common::*;
use proptest::prelude::*;

fn complex_matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), rows * cols)
        .prop_map(move |v| Matrix::from_fn(rows, cols, |i, j| cplx(v[i * cols + j].0, v[i * cols + j].1)))
}

fn sized_matrix(max: usize) -> impl Strategy<Value = Matrix> {
    (1..=max, 1..=max).prop_flat_map(|(r, c)| complex_matrix(r, c))
}

fn hermitian(max: usize) -> impl Strategy<Value = Matrix> {
    (1..=max).prop_flat_map(|n| complex_matrix(n, n)).prop_map(|m| (&m + m.adjoint()).scale(0.5))
}

fn degenerate_spec() -> impl Strategy<Value = GeneratorSpec> {
    (1usize..=8, 1usize..=8, any::<u64>(), 0.1f64..2.5, prop::bool::ANY).prop_flat_map(
        |(n0, n1, seed, vnorm, link)| {
            (1..=n0.div_ceil(2), 1..=n1.div_ceil(2)).prop_map(move |(k0, k1)| GeneratorSpec {
                ker0_dim: k0,
                ker1_dim: k1,
                link_dim: link as usize,
                ..GeneratorSpec::simple(n0, n1, 0.0, vnorm, seed)
            })
        },
    )
}

fn any_spec() -> impl Strategy<Value = GeneratorSpec> {
    prop_oneof![
        (1usize..=10, 1usize..=10, 0.0f64..2.0, 0.0f64..3.0, any::<u64>())
            .prop_map(|(n0, n1, gap, v, seed)| GeneratorSpec::simple(n0, n1, gap, v, seed)),
        degenerate_spec(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigendecomposition_reassembles(m in hermitian(10)) {
        let e = linalg::eig_hermitian(&m, &Tolerances::default()).unwrap();
        let n = m.nrows();
        let lam = Matrix::from_fn(n, n, |i, j| if i == j { cplx(e.evals[i], 0.0) } else { cplx(0.0, 0.0) });
        let back = &e.evecs * lam * e.evecs.adjoint();
        prop_assert!(spec_norm(&(back - &m)) <= 1e-12 * spec_norm(&m).max(1.0));
        prop_assert!(spec_norm(&(e.evecs.adjoint() * &e.evecs - linalg::identity(n))) <= 1e-12);
        prop_assert!(e.evals.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn svd_reassembles(m in sized_matrix(12)) {
        let s = linalg::svd(&m).unwrap();
        let k = s.sigma.len();
        let sig = Matrix::from_fn(k, k, |i, j| if i == j { cplx(s.sigma[i], 0.0) } else { cplx(0.0, 0.0) });
        prop_assert!(spec_norm(&(&s.u * sig * s.w.adjoint() - &m)) <= 1e-12 * spec_norm(&m).max(1.0));
        prop_assert!(s.sigma.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn polar_isometry_is_partial_isometry(m in sized_matrix(8)) {
        let s = linalg::polar_isometry(&m, &Tolerances::default()).unwrap();
        prop_assert!(spec_norm(&(&s * s.adjoint() * &s - &s)) <= 1e-12);
        let oracle = partial_isometry_of_adjoint(&m, 1e-6 * spec_norm(&m));
        prop_assert!(spec_norm(&(&s - oracle)) <= 1e-8);
    }

    #[test]
    fn kernel_and_intersection_agree(m in sized_matrix(8)) {
        let tol = Tolerances::default();
        let k = linalg::kernel(&m, &tol).unwrap();
        prop_assert!(spec_norm(&(&m * k.basis())) <= 1e-10 * spec_norm(&m).max(1.0));
        let r = linalg::range(&m.adjoint(), &tol).unwrap();
        prop_assert_eq!(k.dim() + r.dim(), m.ncols());
        prop_assert!(linalg::intersect(&k, &r, &tol).unwrap().is_trivial());
        prop_assert_eq!(linalg::intersect(&r, &r, &tol).unwrap().dim(), r.dim());
    }

    #[test]
    fn principal_angles_are_symmetric(a in complex_matrix(7, 3), b in complex_matrix(7, 3)) {
        let tol = Tolerances::default();
        let (sa, sb) = (Subspace::span(&a, &tol).unwrap(), Subspace::span(&b, &tol).unwrap());
        let ab = linalg::principal_angles(&sa, &sb).unwrap();
        let ba = linalg::principal_angles(&sb, &sa).unwrap();
        for (x, y) in ab.iter().zip(&ba) {
            prop_assert!((x - y).abs() <= 1e-10);
        }
        prop_assert!((ab.last().unwrap() - max_angle(sa.basis(), sb.basis())).abs() <= 1e-7);
    }

    #[test]
    fn norm_relations_match_projectors(x in (1usize..=32, 1usize..=32).prop_flat_map(|(r, c)| complex_matrix(r, c))) {
        let x = x.scale(0.5);
        let rel = norm_relations(&x).unwrap();
        let (n1, n0) = x.shape();
        let mut g = Matrix::zeros(n0 + n1, n0);
        g.rows_mut(0, n0).copy_from(&linalg::identity(n0));
        g.rows_mut(n0, n1).copy_from(&x);
        let q = &g * (g.adjoint() * &g).try_inverse().unwrap() * g.adjoint();
        let mut p = Matrix::zeros(n0 + n1, n0 + n1);
        p.view_mut((0, 0), (n0, n0)).copy_from(&linalg::identity(n0));
        prop_assert!((spec_norm(&(p - q)) - rel.norm_p_minus_q).abs() <= 1e-10);
        prop_assert!((rel.norm_x_from_pq() - rel.norm_x).abs() <= 1e-9 * rel.norm_x.max(1.0));
        prop_assert!((rel.angles.last().unwrap().tan() - rel.norm_x).abs() <= 1e-10);
    }

    #[test]
    fn upper_bound_is_monotone(d in 0.01f64..5.0, v in 0.01f64..5.0, step in 0.01f64..1.0) {
        let (u, s) = upper_bounds(d, v).unwrap();
        let (u_more_v, _) = upper_bounds(d, v + step).unwrap();
        let (u_more_d, _) = upper_bounds(d + step, v).unwrap();
        prop_assert!(u_more_v > u);
        prop_assert!(u_more_d < u);
        prop_assert!(u < 1.0 && s < std::f64::consts::FRAC_1_SQRT_2);
        prop_assert!((s - u / (1.0 + u * u).sqrt()).abs() <= 1e-14);
    }

    #[test]
    fn lower_bounds_never_exceed_the_trivial_ones(delta in 0.0f64..3.0, v in 0.01f64..3.0) {
        let delta = delta.min(v);
        let (lx, lp) = lower_bounds(delta, v);
        prop_assert!(lx <= 1.0 + 1e-15);
        prop_assert!(lp <= std::f64::consts::FRAC_1_SQRT_2 + 1e-15);
    }

    #[test]
    fn certification_passes(spec in any_spec()) {
        let op = generate(&spec).unwrap();
        let r = certify(&op, &Tolerances::default()).unwrap();
        let failed: Vec<_> = r.failed_checks().collect();
        prop_assert!(r.all_pass, "{:?}", failed);
        prop_assert!(r.lower_x <= r.norm_x + 1e-9 && r.norm_x <= r.upper_x + 1e-9);
        prop_assert!(r.lower_pq <= r.norm_pq + 1e-9 && r.norm_pq <= r.upper_pq + 1e-9);
        prop_assert!(r.delta >= 0.0 && r.delta <= r.vnorm + 1e-9);
        prop_assert!(r.mu1_multiplicity <= r.dim_ker_a0.min(r.dim_ker_a1));
        if r.d > 0.0 {
            prop_assert!(r.gap_empty);
        }
        if r.verdict.unique {
            prop_assert!(r.verdict.strictly_contractive && r.verdict.isolated);
        }
    }

    #[test]
    fn residual_is_small(spec in any_spec()) {
        let op = generate(&spec).unwrap();
        let s = solve_detailed(&op, &Tolerances::default()).unwrap();
        prop_assert!(riccati_residual(&op, &s.solution.x) <= 1e-10 * op.norm().max(1.0));
    }

    #[test]
    fn solution_is_unitarily_covariant(spec in any_spec(), seed in any::<u64>()) {
        let op = generate(&spec).unwrap();
        for c in unitary_invariance(&op, seed, &Tolerances::default()).unwrap() {
            prop_assert!(c.passed, "{:?}", c);
        }
    }

    #[test]
    fn scalar_case_is_sharp(a0 in -2.0f64..0.0, gap in 0.01f64..3.0, re in -2.0f64..2.0, im in -2.0f64..2.0) {
        prop_assume!(re.hypot(im) > 1e-3);
        let a1 = a0 + gap;
        let lambda = 0.5 * (a0 + a1);
        let op = blockgraph::model::BlockOperator::new(
            linalg::from_real(1, 1, &[a0]),
            linalg::from_real(1, 1, &[a1]),
            Matrix::from_element(1, 1, cplx(re, im)),
            lambda,
        ).unwrap();
        let tol = Tolerances::default();
        let r = certify(&op, &tol).unwrap();
        let v = re.hypot(im);
        let sharp = v * (0.5 * (2.0 * v / gap).atan()).tan();
        prop_assert!((r.norm_x - r.upper_x).abs() <= 1e-10);
        let s = spectral_shift(&op, &tol).unwrap();
        prop_assert!((s.delta_minus - sharp).abs() <= 1e-10);
        prop_assert!((s.delta_plus - sharp).abs() <= 1e-10);
        let x = solve_detailed(&op, &tol).unwrap().solution.x[(0, 0)];
        prop_assert!((x - scalar_oracle(a0, a1, cplx(re, im))).norm() <= 1e-12);
    }

    #[test]
    fn family_members_respect_kernel_structure(seed in any::<u64>(), scale in 0.0f64..1.0) {
        let spec = GeneratorSpec {
            ker0_dim: 2,
            ker1_dim: 2,
            couple_kernels: true,
            ..GeneratorSpec::simple(5, 4, 0.0, 1.0, seed)
        };
        let op = generate(&spec).unwrap();
        let tol = Tolerances::default();
        let s = solve_detailed(&op, &tol).unwrap();
        let (d0, d1) = (s.kernels.n0.dim(), s.kernels.n1.dim());
        let t = Matrix::from_fn(d1, d0, |i, j| cplx(scale, (i + 2 * j) as f64 * 0.1 * scale));
        let m = family_member(&op, &s.solution, &s.kernels, &t, &tol).unwrap();
        let image = &m.solution.x * s.kernels.n0.basis();
        let n1 = s.kernels.n1.basis();
        prop_assert!(spec_norm(&(&image - n1 * (n1.adjoint() * &image))) <= 1e-12);
        prop_assert!(riccati_residual(&op, &m.solution.x) <= 1e-10 * op.norm());
    }
}
