//! Fixtures shared by the kernel benchmarks.

use phasecov::linalg::CMat;
use phasecov::povm::QuadratureRule;
use phasecov::rotinv::{build_invariant, InvariantBlocks};
use phasecov::{build_space, DensityMatrix, FockSpace, PhasePoint, PhaseRegion, C64};

/// A space, a rotation-invariant generator and a quadrature rule.
pub struct Fixture {
    pub space: FockSpace,
    pub t: DensityMatrix,
    pub rule: QuadratureRule,
}

/// `d = 1` vacuum with the default box.
pub fn line(n_cut: usize, nodes: usize) -> Fixture {
    let space = build_space(1, n_cut, 1.0).expect("valid space");
    let t = DensityMatrix::vacuum(&space);
    let rule = QuadratureRule::for_space(&space, nodes).expect("valid rule");
    Fixture { space, t, rule }
}

/// `d = 3` invariant generator supported on the radial ground state.
pub fn solid(n_cut: usize, nodes: usize) -> Fixture {
    let space = build_space(3, n_cut, 1.0).expect("valid space");
    let k = n_cut / 2 + 1;
    let mut b = CMat::zeros(k, k);
    b[(0, 0)] = C64::new(1.0, 0.0);
    let t = build_invariant(&space, &InvariantBlocks::new().with(0, b)).expect("valid blocks");
    let rule = QuadratureRule::for_space(&space, nodes).expect("valid rule");
    Fixture { space, t, rule }
}

/// Ball of the given radius centred at the origin.
pub fn centred_ball(d: usize, radius: f64) -> PhaseRegion {
    PhaseRegion::ball(PhasePoint::origin(d), radius).expect("positive radius")
}

/// Off-centre box in `d = 3`, evaluated on the factorized path.
pub fn solid_box() -> PhaseRegion {
    PhaseRegion::boxed(
        &[(-1.0, 0.5), (-0.5, 1.0), (-0.8, 0.6)],
        &[(-0.5, 1.0), (-1.0, 0.4), (-0.3, 0.9)],
    )
    .expect("ordered bounds")
}
