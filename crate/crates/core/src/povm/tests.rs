use super::*;
use crate::fockspace::build_space;
use crate::linalg::to_complex;
use nalgebra::DMatrix;

fn vacuum(space: &FockSpace) -> DensityMatrix {
    DensityMatrix::vacuum(space)
}

fn number_state(space: &FockSpace, flat: usize) -> DensityMatrix {
    DensityMatrix::pure(space, &space.basis_vector(flat)).unwrap()
}

#[test]
fn vacuum_husimi_matches_gaussian() {
    let space = build_space(1, 6, 1.0).unwrap();
    let t = vacuum(&space);
    for (q, p) in [(0.0, 0.0), (1.0, -0.5), (-2.0, 1.5)] {
        let x = PhasePoint::new(&[q], &[p]).unwrap();
        let got = prob_density(&space, &t, &t, &x).unwrap();
        let want = (-(q * q + p * p) / 2.0).exp() / (2.0 * std::f64::consts::PI);
        assert!((got - want).abs() < 1e-14, "{got} vs {want}");
    }
}

#[test]
fn density_operator_has_unit_trace_per_normalization() {
    let space = build_space(1, 10, 1.0).unwrap();
    let t = vacuum(&space);
    let x = PhasePoint::new(&[0.3], &[-0.2]).unwrap();
    let g = povm_density(&space, &t, &x).unwrap();
    let tr = g.trace().re * 2.0 * std::f64::consts::PI;
    assert!((tr - 1.0).abs() < 1e-12);
    assert!(g.hermiticity_defect() < 1e-15);
}

#[test]
fn full_box_gives_identity_d1() {
    let space = build_space(1, 6, 1.0).unwrap();
    let rule = QuadratureRule::for_space(&space, 60).unwrap();
    let whole = PhaseRegion::Box(rule.bounds().clone());
    for t in [vacuum(&space), number_state(&space, 3)] {
        let e = measure_region(&space, &t, &whole, &rule).unwrap();
        let defect = linalg::operator_norm(&(e.matrix() - space.identity().matrix()));
        assert!(defect < 1e-8, "defect {defect:e}");
    }
}

#[test]
fn factorized_matches_direct_sum_d3() {
    let space = build_space(3, 2, 1.3).unwrap();
    let rule = QuadratureRule::uniform(3, 4, 3.0).unwrap();
    let domain = PhaseBox::new(vec![
        (-1.0, 0.5),
        (-0.3, 2.0),
        (-2.0, 2.0),
        (0.0, 1.0),
        (-1.5, 0.7),
        (-2.5, 1.0),
    ])
    .unwrap();
    let v = space.basis_vector(1) * C64::new(0.6, 0.0) + space.basis_vector(5) * C64::new(0.0, 0.8);
    let t = DensityMatrix::pure(&space, &v).unwrap();
    let fast = factorized(&space, t.matrix(), &domain, &rule);
    let slow = brute_force(
        &space,
        &spectral_terms(t.matrix()).unwrap(),
        &domain,
        &rule,
        None,
    );
    assert!(linalg::max_abs(&(fast - slow)) < 1e-13);
}

#[test]
fn disjoint_union_is_additive() {
    let space = build_space(1, 4, 1.0).unwrap();
    let rule = QuadratureRule::for_space(&space, 30).unwrap();
    let t = number_state(&space, 1);
    let a = PhaseRegion::boxed(&[(-2.0, 0.0)], &[(-1.0, 1.0)]).unwrap();
    let b = PhaseRegion::boxed(&[(0.0, 1.0)], &[(-1.0, 2.0)]).unwrap();
    let u = PhaseRegion::union(vec![a.clone(), b.clone()]).unwrap();
    let ea = measure_region(&space, &t, &a, &rule).unwrap();
    let eb = measure_region(&space, &t, &b, &rule).unwrap();
    let eu = measure_region(&space, &t, &u, &rule).unwrap();
    assert!(linalg::max_abs(&(eu.matrix() - (ea.matrix() + eb.matrix()))) < 1e-15);
    let empty = measure_region(&space, &t, &PhaseRegion::empty(), &rule).unwrap();
    assert_eq!(linalg::max_abs(empty.matrix()), 0.0);
}

#[test]
fn region_outside_bounds_is_rejected() {
    let space = build_space(1, 2, 1.0).unwrap();
    let rule = QuadratureRule::uniform(1, 10, 2.0).unwrap();
    let z = PhaseRegion::boxed(&[(-3.0, 0.0)], &[(0.0, 1.0)]).unwrap();
    assert_eq!(
        measure_region(&space, &vacuum(&space), &z, &rule).unwrap_err(),
        Error::RegionOutsideBounds
    );
}

#[test]
fn identity_element_has_zero_covariance_residual() {
    let space = build_space(1, 5, 2.0).unwrap();
    let rule = QuadratureRule::for_space(&space, 20).unwrap();
    let z = PhaseRegion::boxed(&[(-1.0, 0.5)], &[(0.0, 1.0)]).unwrap();
    let r = covariance_residual(
        &space,
        &number_state(&space, 2),
        &GalileiElement::identity(1),
        &z,
        &rule,
    )
    .unwrap();
    assert_eq!(r, 0.0);
}

#[test]
fn translation_covariance_d1() {
    let space = build_space(1, 16, 1.0).unwrap();
    let rule = QuadratureRule::for_space(&space, 40).unwrap();
    let z = PhaseRegion::boxed(&[(-1.0, 0.5)], &[(-0.5, 1.0)]).unwrap();
    let g = GalileiElement::translation(&[0.4]).unwrap();
    let r = covariance_residual(&space, &vacuum(&space), &g, &z, &rule).unwrap();
    assert!(r < 1e-6, "residual {r:e}");
}

#[test]
fn negative_operator_density_is_clamped() {
    let space = build_space(1, 2, 1.0).unwrap();
    let eval = DensityEvaluator {
        space: space.clone(),
        s_terms: vec![(-1.0, space.basis_vector(0))],
        t_terms: vec![(1.0, space.basis_vector(0))],
        norm: 1.0,
    };
    assert!(eval.raw(&[0.0, 0.0]) < 0.0);
    assert_eq!(eval.density(&[0.0, 0.0]), 0.0);
}

#[test]
fn marginal_two_ways_agree() {
    let space = build_space(1, 4, 1.0).unwrap();
    let rule = QuadratureRule::for_space(&space, 40).unwrap();
    let h = default_half_width(4);
    let edges: Vec<f64> = (0..=6).map(|i| -h + 2.0 * h * i as f64 / 6.0).collect();
    let slabs: Vec<Vec<(f64, f64)>> = edges.windows(2).map(|e| vec![(e[0], e[1])]).collect();
    let t = vacuum(&space);
    let s = number_state(&space, 2);
    let m = marginal_position(&space, &s, &t, &slabs, &rule).unwrap();
    assert!(m.max_discrepancy < 1e-12);
    assert!((m.total() - 1.0).abs() < 1e-6);
}

#[test]
fn grid_follows_row_major_order() {
    let space = build_space(1, 1, 1.0).unwrap();
    let axes = [
        GridAxis {
            lo: -1.0,
            hi: 1.0,
            count: 3,
        },
        GridAxis {
            lo: 0.0,
            hi: 1.0,
            count: 2,
        },
    ];
    let rows = density_grid(&space, &vacuum(&space), &vacuum(&space), &axes).unwrap();
    assert_eq!(rows.len(), 6);
    assert_eq!(rows[1].0, vec![-1.0, 1.0]);
    assert_eq!(rows[2].0, vec![0.0, 0.0]);
}

#[test]
fn sampling_is_seeded_and_centered() {
    let space = build_space(1, 3, 1.0).unwrap();
    let rule = QuadratureRule::for_space(&space, 30).unwrap();
    let t = vacuum(&space);
    let bbox = PhaseBox::cube(1, 6.0).unwrap();
    let a = sample(&space, &t, &t, 400, 7, &bbox, &rule).unwrap();
    let b = sample(&space, &t, &t, 400, 7, &bbox, &rule).unwrap();
    assert_eq!(a, b);
    let mean_q: f64 = a.iter().map(|x| x.q[0]).sum::<f64>() / 400.0;
    let var_q: f64 = a.iter().map(|x| x.q[0] * x.q[0]).sum::<f64>() / 400.0;
    // vacuum Husimi has unit variance per coordinate
    assert!(mean_q.abs() < 0.2);
    assert!((var_q - 1.0).abs() < 0.25);
}

#[test]
fn sampling_rejects_small_box() {
    let space = build_space(1, 3, 1.0).unwrap();
    let rule = QuadratureRule::for_space(&space, 20).unwrap();
    let t = vacuum(&space);
    let bbox = PhaseBox::cube(1, 1.0).unwrap();
    assert!(matches!(
        sample(&space, &t, &t, 5, 1, &bbox, &rule),
        Err(Error::Sampling(_))
    ));
}

#[test]
fn non_hermitian_input_is_rejected() {
    let m = to_complex(&DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]));
    assert!(spectral_terms(&m).is_err());
}
