use nalgebra::DMatrix;
use phasecov::galilei::rotation_matrix;
use phasecov::linalg::CMat;
use phasecov::povm::{measure_region, prob_density, QuadratureRule};
use phasecov::rotinv::haar_rotation;
use phasecov::{
    act, build_space, compose, multiplier, validate_density, DensityMatrix, GalileiElement,
    OperatorMatrix, PhasePoint, PhaseRegion, C64,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn element(d: usize) -> impl Strategy<Value = GalileiElement> {
    (
        prop::collection::vec(-2.0..2.0f64, d),
        prop::collection::vec(-2.0..2.0f64, d),
        any::<u64>(),
    )
        .prop_map(move |(a, v, seed)| {
            let r = if d == 3 {
                haar_rotation(&mut ChaCha8Rng::seed_from_u64(seed))
            } else {
                DMatrix::identity(1, 1)
            };
            GalileiElement::from_parts(&a, &v, r).unwrap()
        })
}

fn point(d: usize) -> impl Strategy<Value = PhasePoint> {
    (
        prop::collection::vec(-3.0..3.0f64, d),
        prop::collection::vec(-3.0..3.0f64, d),
    )
        .prop_map(|(q, p)| PhasePoint::new(&q, &p).unwrap())
}

fn close(a: &GalileiElement, b: &GalileiElement) -> bool {
    (a.a() - b.a()).amax() < 1e-12
        && (a.v() - b.v()).amax() < 1e-12
        && (a.r() - b.r()).amax() < 1e-12
}

/// Random pure state on the first `dim` basis vectors from real and imaginary parts.
fn state(re: &[f64], im: &[f64]) -> Option<nalgebra::DVector<C64>> {
    let v = nalgebra::DVector::from_iterator(
        re.len(),
        re.iter().zip(im).map(|(r, i)| C64::new(*r, *i)),
    );
    let n = v.norm();
    (n > 1e-3).then(|| v / C64::new(n, 0.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn composition_is_associative_d1(g1 in element(1), g2 in element(1), g3 in element(1)) {
        prop_assert!(close(&compose(&compose(&g1, &g2), &g3), &compose(&g1, &compose(&g2, &g3))));
    }

    #[test]
    fn composition_is_associative_d3(g1 in element(3), g2 in element(3), g3 in element(3)) {
        prop_assert!(close(&compose(&compose(&g1, &g2), &g3), &compose(&g1, &compose(&g2, &g3))));
    }

    #[test]
    fn multiplier_is_a_cocycle(g1 in element(3), g2 in element(3), g3 in element(3), m in 0.2..3.0f64) {
        let lhs = multiplier(&g1, &g2, m) * multiplier(&compose(&g1, &g2), &g3, m);
        let rhs = multiplier(&g1, &compose(&g2, &g3), m) * multiplier(&g2, &g3, m);
        prop_assert!((lhs - rhs).norm() < 1e-10);
        prop_assert!((multiplier(&g1, &g2, m).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn action_is_a_left_action(g1 in element(3), g2 in element(3), x in point(3), m in 0.2..3.0f64) {
        let lhs = act(&compose(&g1, &g2), &x, m);
        let rhs = act(&g1, &act(&g2, &x, m), m);
        for (a, b) in lhs.coords().iter().zip(rhs.coords()) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn inverse_composes_to_identity(g in element(3)) {
        prop_assert!(close(&compose(&g, &g.inverse()), &GalileiElement::identity(3)));
    }

    #[test]
    fn convex_combinations_stay_valid(
        re1 in prop::collection::vec(-1.0..1.0f64, 6),
        im1 in prop::collection::vec(-1.0..1.0f64, 6),
        re2 in prop::collection::vec(-1.0..1.0f64, 6),
        im2 in prop::collection::vec(-1.0..1.0f64, 6),
        lambda in 0.0..1.0f64,
    ) {
        let space = build_space(1, 5, 1.0).unwrap();
        let (Some(a), Some(b)) = (state(&re1, &im1), state(&re2, &im2)) else { return Ok(()) };
        let mix = &OperatorMatrix::projector(&a).scaled(lambda) + &OperatorMatrix::projector(&b).scaled(1.0 - lambda);
        let mix = OperatorMatrix::new(&space, mix.into_matrix()).unwrap();
        prop_assert!(validate_density(&mix, 1e-10).pass);
    }

    #[test]
    fn injected_negative_eigenvalue_is_detected(
        re in prop::collection::vec(-1.0..1.0f64, 6),
        im in prop::collection::vec(-1.0..1.0f64, 6),
        eps in 1e-6..0.5f64,
    ) {
        let Some(v) = state(&re, &im) else { return Ok(()) };
        let space = build_space(1, 5, 1.0).unwrap();
        // 1+eps on e0 and -eps on v orthogonalized against e0 keeps trace one
        let e0 = space.basis_vector(0);
        let mut w = &v - &e0 * e0.dotc(&v);
        if w.norm() < 1e-3 {
            return Ok(());
        }
        w /= C64::new(w.norm(), 0.0);
        let m: CMat = &e0 * e0.adjoint() * C64::new(1.0 + eps, 0.0) - &w * w.adjoint() * C64::new(eps, 0.0);
        let report = validate_density(&OperatorMatrix::new(&space, m).unwrap(), 1e-10);
        prop_assert!(!report.pass);
        prop_assert!((report.min_eigenvalue + eps).abs() < 1e-10);
    }

    #[test]
    fn density_is_bounded(x in point(1), re in prop::collection::vec(-1.0..1.0f64, 5), im in prop::collection::vec(-1.0..1.0f64, 5)) {
        let space = build_space(1, 4, 1.0).unwrap();
        let Some(v) = state(&re, &im) else { return Ok(()) };
        let s = DensityMatrix::pure(&space, &v).unwrap();
        let t = DensityMatrix::vacuum(&space);
        let value = prob_density(&space, &s, &t, &x).unwrap();
        prop_assert!(value >= 0.0);
        prop_assert!(value <= 1.0 / (2.0 * std::f64::consts::PI) + 1e-15);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn measures_are_positive_and_monotone(
        lo in prop::collection::vec(-3.0..0.0f64, 2),
        width in prop::collection::vec(0.2..3.0f64, 2),
        grow in 0.1..2.0f64,
        re in prop::collection::vec(-1.0..1.0f64, 5),
        im in prop::collection::vec(-1.0..1.0f64, 5),
    ) {
        let space = build_space(1, 4, 1.0).unwrap();
        let rule = QuadratureRule::uniform(1, 24, 6.0).unwrap();
        let Some(v) = state(&re, &im) else { return Ok(()) };
        let t = DensityMatrix::pure(&space, &v).unwrap();
        let inner = PhaseRegion::boxed(&[(lo[0], lo[0] + width[0])], &[(lo[1], lo[1] + width[1])]).unwrap();
        let outer = PhaseRegion::boxed(&[(lo[0] - grow, lo[0] + width[0])], &[(lo[1], lo[1] + width[1] + grow)]).unwrap();
        let e_in = measure_region(&space, &t, &inner, &rule).unwrap();
        let e_out = measure_region(&space, &t, &outer, &rule).unwrap();
        prop_assert!(e_in.min_eigenvalue() >= -1e-10);
        prop_assert!((&e_out - &e_in).min_eigenvalue() >= -1e-10);
    }
}

#[test]
fn quarter_turn_composes_to_half_turn() {
    let q = GalileiElement::rotation(rotation_matrix(
        [0.0, 0.0, 1.0],
        std::f64::consts::FRAC_PI_2,
    ))
    .unwrap();
    let h =
        GalileiElement::rotation(rotation_matrix([0.0, 0.0, 1.0], std::f64::consts::PI)).unwrap();
    assert!(close(&compose(&q, &q), &h));
}
