//! The isochronous Galilei group `(a, v, R)`, its central extension by the
//! torus, the phase-space action, and the (projective) representation on the
//! truncated space.
//!
//! Two operator realizations are provided:
//!
//! * [`Realization::TruncatedExponential`]: exponentials of the truncated
//!   generators. Exactly unitary on the space, but wrong far from the origin.
//! * [`Realization::Compressed`]: the exact infinite-dimensional operator
//!   restricted to the space, from closed-form Fock matrix elements. Not
//!   unitary, but every matrix element is exact, so `P W P T P W* P = P W T W* P`
//!   whenever `T` lives on the space. All POVM quantities use this one.

use nalgebra::{DMatrix, DVector, Matrix3, Rotation3, UnitQuaternion, Vector3};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fockspace::{FockSpace, OperatorMatrix};
use crate::linalg::{self, CMat};
use crate::rotinv;

const ROTATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct GalileiElement {
    a: DVector<f64>,
    v: DVector<f64>,
    r: DMatrix<f64>,
}

impl GalileiElement {
    pub fn new(a: DVector<f64>, v: DVector<f64>, r: DMatrix<f64>) -> Result<Self> {
        let d = a.len();
        if d != 1 && d != 3 {
            return Err(Error::UnsupportedDimension(d));
        }
        if v.len() != d || r.nrows() != d || r.ncols() != d {
            return Err(Error::InvalidElement(format!(
                "component sizes a={}, v={}, R={}x{} disagree",
                d,
                v.len(),
                r.nrows(),
                r.ncols()
            )));
        }
        if a.iter()
            .chain(v.iter())
            .chain(r.iter())
            .any(|x| !x.is_finite())
        {
            return Err(Error::InvalidElement("non-finite component".into()));
        }
        let orth = (r.transpose() * &r - DMatrix::identity(d, d)).amax();
        if orth > ROTATION_TOL {
            return Err(Error::InvalidElement(format!(
                "R is not orthogonal (defect {orth:e})"
            )));
        }
        let det = r.determinant();
        if (det - 1.0).abs() > ROTATION_TOL {
            return Err(Error::InvalidElement(format!("det R = {det}")));
        }
        Ok(GalileiElement { a, v, r })
    }

    pub fn from_parts(a: &[f64], v: &[f64], r: DMatrix<f64>) -> Result<Self> {
        Self::new(
            DVector::from_column_slice(a),
            DVector::from_column_slice(v),
            r,
        )
    }

    pub fn identity(d: usize) -> Self {
        GalileiElement {
            a: DVector::zeros(d),
            v: DVector::zeros(d),
            r: DMatrix::identity(d, d),
        }
    }

    pub fn translation(a: &[f64]) -> Result<Self> {
        Self::from_parts(a, &vec![0.0; a.len()], DMatrix::identity(a.len(), a.len()))
    }

    pub fn boost(v: &[f64]) -> Result<Self> {
        Self::from_parts(&vec![0.0; v.len()], v, DMatrix::identity(v.len(), v.len()))
    }

    pub fn rotation(r: DMatrix<f64>) -> Result<Self> {
        let d = r.nrows();
        Self::new(DVector::zeros(d), DVector::zeros(d), r)
    }

    pub fn d(&self) -> usize {
        self.a.len()
    }

    pub fn a(&self) -> &DVector<f64> {
        &self.a
    }

    pub fn v(&self) -> &DVector<f64> {
        &self.v
    }

    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }

    /// `(-R^-1 a, -R^-1 v, R^-1)`.
    pub fn inverse(&self) -> Self {
        let rt = self.r.transpose();
        GalileiElement {
            a: -(&rt * &self.a),
            v: -(&rt * &self.v),
            r: rt,
        }
    }

    pub fn is_rotation_only(&self) -> bool {
        self.a.iter().chain(self.v.iter()).all(|&x| x == 0.0)
    }
}

/// Rotation by `angle` about `axis` (normalized internally).
pub fn rotation_matrix(axis: [f64; 3], angle: f64) -> DMatrix<f64> {
    let axis = nalgebra::Unit::new_normalize(Vector3::from(axis));
    let m = Rotation3::from_axis_angle(&axis, angle).into_inner();
    DMatrix::from_fn(3, 3, |i, j| m[(i, j)])
}

/// Rotation vector `theta * n` of a 3x3 rotation matrix.
pub fn rotation_vector(r: &DMatrix<f64>) -> Vector3<f64> {
    let m = Matrix3::from_fn(|i, j| r[(i, j)]);
    UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(m)).scaled_axis()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CentralExtElement {
    z: C64,
    g: GalileiElement,
}

impl CentralExtElement {
    pub fn new(z: C64, g: GalileiElement) -> Result<Self> {
        if (z.norm() - 1.0).abs() > ROTATION_TOL {
            return Err(Error::InvalidElement(format!(
                "|z| = {} is not 1",
                z.norm()
            )));
        }
        Ok(CentralExtElement { z, g })
    }

    pub fn identity(d: usize) -> Self {
        CentralExtElement {
            z: C64::new(1.0, 0.0),
            g: GalileiElement::identity(d),
        }
    }

    pub fn z(&self) -> C64 {
        self.z
    }

    pub fn g(&self) -> &GalileiElement {
        &self.g
    }
}

/// A point `(q, p)` of phase space.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub q: DVector<f64>,
    pub p: DVector<f64>,
}

impl PhasePoint {
    pub fn new(q: &[f64], p: &[f64]) -> Result<Self> {
        if q.len() != p.len() {
            return Err(Error::DimensionMismatch {
                expected: q.len(),
                found: p.len(),
            });
        }
        if q.iter().chain(p).any(|x| !x.is_finite()) {
            return Err(Error::InvalidRegion("non-finite phase-space point".into()));
        }
        Ok(PhasePoint {
            q: DVector::from_column_slice(q),
            p: DVector::from_column_slice(p),
        })
    }

    pub fn origin(d: usize) -> Self {
        PhasePoint {
            q: DVector::zeros(d),
            p: DVector::zeros(d),
        }
    }

    pub fn d(&self) -> usize {
        self.q.len()
    }

    /// Coordinates in the order `q_1..q_d, p_1..p_d`.
    pub fn coords(&self) -> Vec<f64> {
        self.q.iter().chain(self.p.iter()).copied().collect()
    }

    pub fn from_coords(c: &[f64]) -> Self {
        let d = c.len() / 2;
        PhasePoint {
            q: DVector::from_column_slice(&c[..d]),
            p: DVector::from_column_slice(&c[d..]),
        }
    }
}

pub fn compose(g1: &GalileiElement, g2: &GalileiElement) -> GalileiElement {
    assert_eq!(g1.d(), g2.d(), "composing elements of different dimension");
    GalileiElement {
        a: &g1.a + &g1.r * &g2.a,
        v: &g1.v + &g1.r * &g2.v,
        r: &g1.r * &g2.r,
    }
}

/// `alpha_g(q, p) = (a + R q, m v + R p)`.
pub fn act(g: &GalileiElement, x: &PhasePoint, mass: f64) -> PhasePoint {
    assert_eq!(g.d(), x.d(), "element and point of different dimension");
    PhasePoint {
        q: &g.a + &g.r * &x.q,
        p: &g.v * mass + &g.r * &x.p,
    }
}

/// `omega(g1, g2) = exp(i m v1 . R1 a2)`.
pub fn multiplier(g1: &GalileiElement, g2: &GalileiElement, mass: f64) -> C64 {
    let phase = mass * g1.v.dot(&(&g1.r * &g2.a));
    C64::from_polar(1.0, phase)
}

pub fn compose_ext(h1: &CentralExtElement, h2: &CentralExtElement, mass: f64) -> CentralExtElement {
    CentralExtElement {
        z: h1.z * h2.z * multiplier(&h1.g, &h2.g, mass),
        g: compose(&h1.g, &h2.g),
    }
}

fn check_dims(space: &FockSpace, d: usize) -> Result<()> {
    if space.d() != d {
        Err(Error::DimensionMismatch {
            expected: space.d(),
            found: d,
        })
    } else {
        Ok(())
    }
}

/// `exp(-i theta n.L)`; identity for `d = 1`.
pub fn rotation_operator(space: &FockSpace, r: &DMatrix<f64>) -> Result<OperatorMatrix> {
    check_dims(space, r.nrows())?;
    if space.d() == 1 {
        return Ok(space.identity());
    }
    let w = rotation_vector(r);
    if w.norm() == 0.0 {
        return Ok(space.identity());
    }
    let l = rotinv::angular_momentum(space)?;
    let gen = l.x.matrix() * C64::new(w[0], 0.0)
        + l.y.matrix() * C64::new(w[1], 0.0)
        + l.z.matrix() * C64::new(w[2], 0.0);
    Ok(OperatorMatrix::from_matrix(linalg::expi_hermitian(
        &gen, -1.0,
    )))
}

/// `U_g = exp(-i a.P) exp(i m v.Q) exp(-i theta n.L)` from truncated generators.
pub fn rep_operator(space: &FockSpace, g: &GalileiElement) -> Result<OperatorMatrix> {
    check_dims(space, g.d())?;
    let n = space.dim();
    let mut a_gen = CMat::zeros(n, n);
    let mut v_gen = CMat::zeros(n, n);
    for axis in 0..space.d() {
        let (q, p) = space.position_momentum(axis)?;
        a_gen += p.matrix() * C64::new(g.a[axis], 0.0);
        v_gen += q.matrix() * C64::new(space.mass() * g.v[axis], 0.0);
    }
    let mut u = linalg::expi_hermitian(&a_gen, -1.0) * linalg::expi_hermitian(&v_gen, 1.0);
    if space.d() == 3 {
        u *= rotation_operator(space, &g.r)?.matrix();
    }
    Ok(OperatorMatrix::from_matrix(u))
}

/// `exp(i (p.Q - q.P))` from truncated generators; exactly unitary on the space.
pub fn displacement(space: &FockSpace, x: &PhasePoint) -> Result<OperatorMatrix> {
    check_dims(space, x.d())?;
    let n = space.dim();
    let mut gen = CMat::zeros(n, n);
    for axis in 0..space.d() {
        let (q, p) = space.position_momentum(axis)?;
        gen += q.matrix() * C64::new(x.p[axis], 0.0) - p.matrix() * C64::new(x.q[axis], 0.0);
    }
    Ok(OperatorMatrix::from_matrix(linalg::expi_hermitian(
        &gen, 1.0,
    )))
}

/// Single-mode Weyl operator `exp(i(pQ - qP))` restricted to levels `0..=n_cut`,
/// exact matrix elements. Columns are `D|n> = (a^dag - conj(alpha))^n |alpha> / sqrt(n!)`
/// with `alpha = (q + i p)/sqrt 2`; every intermediate is a true matrix element,
/// so the recursion stays bounded.
pub fn weyl_mode(n_cut: usize, q: f64, p: f64) -> CMat {
    let k = n_cut + 1;
    if q == 0.0 && p == 0.0 {
        return CMat::identity(k, k);
    }
    let alpha = C64::new(q, p) * std::f64::consts::FRAC_1_SQRT_2;
    let alpha_c = alpha.conj();
    let mut m = CMat::zeros(k, k);
    let mut amp = C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for row in 0..k {
        if row > 0 {
            amp = amp * alpha / (row as f64).sqrt();
        }
        m[(row, 0)] = amp;
    }
    for col in 1..k {
        let inv = 1.0 / (col as f64).sqrt();
        for row in 0..k {
            let raised = if row > 0 {
                m[(row - 1, col - 1)] * (row as f64).sqrt()
            } else {
                C64::new(0.0, 0.0)
            };
            m[(row, col)] = (raised - alpha_c * m[(row, col - 1)]) * inv;
        }
    }
    m
}

/// Per-mode Weyl factors at `x`.
pub(crate) fn weyl_factors(space: &FockSpace, x: &PhasePoint) -> Vec<CMat> {
    (0..space.d())
        .map(|k| weyl_mode(space.n_cut(), x.q[k], x.p[k]))
        .collect()
}

pub(crate) fn assemble_product(space: &FockSpace, factors: &[CMat]) -> CMat {
    if space.d() == 1 {
        return factors[0].clone();
    }
    let n = space.dim();
    CMat::from_fn(n, n, |i, j| {
        let (si, sj) = (space.multi_index(i), space.multi_index(j));
        factors
            .iter()
            .enumerate()
            .fold(C64::new(1.0, 0.0), |acc, (k, f)| {
                acc * f[(si[k] as usize, sj[k] as usize)]
            })
    })
}

/// Compression of the exact Weyl operator `exp(i(p.Q - q.P))` onto the space.
pub fn weyl_compressed(space: &FockSpace, x: &PhasePoint) -> Result<OperatorMatrix> {
    check_dims(space, x.d())?;
    Ok(OperatorMatrix::from_matrix(assemble_product(
        space,
        &weyl_factors(space, x),
    )))
}

/// Compression of the exact `U_g`: `exp(-i m a.v / 2) W(a, m v) U_R`.
pub fn rep_operator_compressed(space: &FockSpace, g: &GalileiElement) -> Result<OperatorMatrix> {
    check_dims(space, g.d())?;
    let m = space.mass();
    let x = PhasePoint {
        q: g.a.clone(),
        p: &g.v * m,
    };
    let phase = C64::from_polar(1.0, -0.5 * m * g.a.dot(&g.v));
    let mut u = weyl_compressed(space, &x)?.into_matrix() * phase;
    if space.d() == 3 {
        u *= rotation_operator(space, &g.r)?.matrix();
    }
    Ok(OperatorMatrix::from_matrix(u))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Realization {
    TruncatedExponential,
    Compressed,
}

pub fn group_operator(
    space: &FockSpace,
    g: &GalileiElement,
    realization: Realization,
) -> Result<OperatorMatrix> {
    match realization {
        Realization::TruncatedExponential => rep_operator(space, g),
        Realization::Compressed => rep_operator_compressed(space, g),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectiveResidual {
    pub residual: f64,
    pub guard_band: usize,
    /// Size of the retained sub-block (states with `N <= n_cut - guard_band`).
    pub block_dim: usize,
}

/// `|| U_g1 U_g2 - omega(g1, g2) U_g1g2 ||` on the levels `N <= n_cut - guard_band`.
pub fn projective_residual(
    space: &FockSpace,
    g1: &GalileiElement,
    g2: &GalileiElement,
    guard_band: usize,
    realization: Realization,
) -> Result<ProjectiveResidual> {
    if guard_band > space.n_cut() {
        return Err(Error::GuardBandTooLarge {
            band: guard_band,
            n_cut: space.n_cut(),
        });
    }
    let u1 = group_operator(space, g1, realization)?;
    let u2 = group_operator(space, g2, realization)?;
    let u12 = group_operator(space, &compose(g1, g2), realization)?;
    let w = multiplier(g1, g2, space.mass());
    let diff = u1.matrix() * u2.matrix() - u12.matrix() * w;
    let k = space.prefix_dim(space.n_cut() - guard_band);
    let block = diff.view((0, 0), (k, k)).into_owned();
    Ok(ProjectiveResidual {
        residual: linalg::operator_norm(&block),
        guard_band,
        block_dim: k,
    })
}

/// Phase `c` with `displacement(q, p) ~ c U_(q, p/m, I)`, measured from the
/// top-left entry, and the guard-banded defect `|| D - c U ||`.
pub fn weyl_rep_phase(space: &FockSpace, x: &PhasePoint, guard_band: usize) -> Result<(C64, f64)> {
    if guard_band > space.n_cut() {
        return Err(Error::GuardBandTooLarge {
            band: guard_band,
            n_cut: space.n_cut(),
        });
    }
    let d = displacement(space, x)?;
    let v: Vec<f64> = x.p.iter().map(|p| p / space.mass()).collect();
    let g = GalileiElement::from_parts(x.q.as_slice(), &v, DMatrix::identity(x.d(), x.d()))?;
    let u = rep_operator(space, &g)?;
    let ratio = d.matrix()[(0, 0)] / u.matrix()[(0, 0)];
    let c = ratio / ratio.norm();
    let k = space.prefix_dim(space.n_cut() - guard_band);
    let diff = (d.matrix() - u.matrix() * c)
        .view((0, 0), (k, k))
        .into_owned();
    Ok((c, linalg::operator_norm(&diff)))
}
