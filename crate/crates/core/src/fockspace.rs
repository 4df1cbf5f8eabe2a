//! Truncated multi-mode oscillator space.
//!
//! Basis states are occupation multi-indices `(n_1, .., n_d)` with total quanta
//! `N = sum n_i <= n_cut`. States are ordered by `N` first, then
//! lexicographically (descending in the first mode), so every level `N` occupies
//! a contiguous range and the states with `N <= k` form a prefix. Truncating by
//! total quanta keeps the space invariant under rotations.
//!
//! Units: hbar = 1, oscillator frequency and length 1; the mass is carried as a
//! parameter because it enters the boost generator and the multiplier.

use std::collections::HashMap;
use std::ops::Range;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec};

pub const DEFAULT_MAX_DIM: usize = 4096;
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct FockSpace {
    d: usize,
    n_cut: usize,
    mass: f64,
    states: Vec<Vec<u32>>,
    lookup: HashMap<Vec<u32>, usize>,
    level_starts: Vec<usize>,
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Builds the truncated space with the default memory bound.
pub fn build_space(d: usize, n_cut: usize, mass: f64) -> Result<FockSpace> {
    FockSpace::with_bound(d, n_cut, mass, DEFAULT_MAX_DIM)
}

fn compositions(total: usize, parts: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if parts == 1 {
        prefix.push(total as u32);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for first in (0..=total).rev() {
        prefix.push(first as u32);
        compositions(total - first, parts - 1, prefix, out);
        prefix.pop();
    }
}

impl FockSpace {
    pub fn with_bound(d: usize, n_cut: usize, mass: f64, max_dim: usize) -> Result<Self> {
        if d != 1 && d != 3 {
            return Err(Error::UnsupportedDimension(d));
        }
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidMass(mass));
        }
        let dim = binomial(n_cut + d, d);
        if dim > max_dim {
            return Err(Error::SpaceTooLarge { dim, max: max_dim });
        }
        let mut states = Vec::with_capacity(dim);
        let mut level_starts = Vec::with_capacity(n_cut + 2);
        for level in 0..=n_cut {
            level_starts.push(states.len());
            compositions(level, d, &mut Vec::with_capacity(d), &mut states);
        }
        level_starts.push(states.len());
        debug_assert_eq!(states.len(), dim);
        let lookup = states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        Ok(FockSpace {
            d,
            n_cut,
            mass,
            states,
            lookup,
            level_starts,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n_cut(&self) -> usize {
        self.n_cut
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn multi_index(&self, flat: usize) -> &[u32] {
        &self.states[flat]
    }

    pub fn flat_index(&self, occupation: &[u32]) -> Option<usize> {
        self.lookup.get(occupation).copied()
    }

    /// Total quanta of basis state `flat`.
    pub fn level_of(&self, flat: usize) -> usize {
        self.states[flat].iter().map(|&n| n as usize).sum()
    }

    /// Flat index range of the states with exactly `level` quanta.
    pub fn level_range(&self, level: usize) -> Range<usize> {
        assert!(
            level <= self.n_cut,
            "level {level} above cutoff {}",
            self.n_cut
        );
        self.level_starts[level]..self.level_starts[level + 1]
    }

    /// Number of states with total quanta `<= level` (a prefix of the basis).
    pub fn prefix_dim(&self, level: usize) -> usize {
        self.level_starts[level.min(self.n_cut) + 1]
    }

    pub fn basis_vector(&self, flat: usize) -> CVec {
        let mut v = CVec::zeros(self.dim());
        v[flat] = C64::new(1.0, 0.0);
        v
    }

    pub fn vacuum(&self) -> CVec {
        self.basis_vector(0)
    }

    pub fn identity(&self) -> OperatorMatrix {
        OperatorMatrix::from_matrix(CMat::identity(self.dim(), self.dim()))
    }

    fn check_axis(&self, axis: usize) -> Result<()> {
        if axis >= self.d {
            Err(Error::InvalidAxis { axis, d: self.d })
        } else {
            Ok(())
        }
    }

    /// Lowering operator `a` for mode `axis` (0-based), restricted to the space.
    pub fn annihilation(&self, axis: usize) -> Result<OperatorMatrix> {
        self.check_axis(axis)?;
        let n = self.dim();
        let mut m = CMat::zeros(n, n);
        let mut lowered = vec![0u32; self.d];
        for (col, occ) in self.states.iter().enumerate() {
            if occ[axis] == 0 {
                continue;
            }
            lowered.copy_from_slice(occ);
            lowered[axis] -= 1;
            let row = self.lookup[&lowered];
            m[(row, col)] = C64::new((occ[axis] as f64).sqrt(), 0.0);
        }
        Ok(OperatorMatrix::from_matrix(m))
    }

    /// Mode number operator `a^dag a` for `axis`; diagonal and exact on the space.
    pub fn mode_number(&self, axis: usize) -> Result<OperatorMatrix> {
        self.check_axis(axis)?;
        let diag = self.states.iter().map(|s| C64::new(s[axis] as f64, 0.0));
        Ok(OperatorMatrix::from_matrix(CMat::from_diagonal(
            &CVec::from_iterator(self.dim(), diag),
        )))
    }

    pub fn number_operator(&self) -> OperatorMatrix {
        let diag = (0..self.dim()).map(|i| C64::new(self.level_of(i) as f64, 0.0));
        OperatorMatrix::from_matrix(CMat::from_diagonal(&CVec::from_iterator(self.dim(), diag)))
    }

    /// Position and momentum quadratures for mode `axis` (0-based):
    /// `Q = (a + a^dag)/sqrt 2`, `P = (a - a^dag)/(i sqrt 2)`.
    pub fn position_momentum(&self, axis: usize) -> Result<(OperatorMatrix, OperatorMatrix)> {
        let a = self.annihilation(axis)?.into_matrix();
        let ad = a.adjoint();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let q = (&a + &ad) * C64::new(s, 0.0);
        let p = (&a - &ad) * C64::new(0.0, -s);
        Ok((
            OperatorMatrix::from_matrix(q),
            OperatorMatrix::from_matrix(p),
        ))
    }
}

/// Dense complex operator on a truncated space.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    mat: CMat,
}

impl OperatorMatrix {
    /// Wraps `mat` after checking it is square with the space's dimension.
    pub fn new(space: &FockSpace, mat: CMat) -> Result<Self> {
        let op = Self::from_matrix(mat);
        op.check_space(space)?;
        Ok(op)
    }

    pub(crate) fn from_matrix(mat: CMat) -> Self {
        assert!(mat.is_square(), "operator matrices are square");
        OperatorMatrix { mat }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_matrix(CMat::zeros(dim, dim))
    }

    pub fn projector(v: &CVec) -> Self {
        Self::from_matrix(v * v.adjoint())
    }

    pub fn from_real(mat: &DMatrix<f64>) -> Self {
        Self::from_matrix(linalg::to_complex(mat))
    }

    pub fn check_space(&self, space: &FockSpace) -> Result<()> {
        if self.dim() != space.dim() {
            Err(Error::DimensionMismatch {
                expected: space.dim(),
                found: self.dim(),
            })
        } else {
            Ok(())
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    pub fn adjoint(&self) -> Self {
        Self::from_matrix(self.mat.adjoint())
    }

    pub fn trace(&self) -> C64 {
        linalg::trace(&self.mat)
    }

    pub fn norm(&self) -> f64 {
        linalg::operator_norm(&self.mat)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        linalg::max_abs(&(&self.mat - self.mat.adjoint()))
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        linalg::hermitian_eigen(&self.mat)
            .0
            .first()
            .copied()
            .unwrap_or(0.0)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::from_matrix(&self.mat * C64::new(s, 0.0))
    }

    /// Top-left `k x k` block.
    pub fn leading_block(&self, k: usize) -> CMat {
        self.mat.view((0, 0), (k, k)).into_owned()
    }
}

impl std::ops::Sub for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn sub(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix::from_matrix(&self.mat - &rhs.mat)
    }
}

impl std::ops::Add for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn add(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix::from_matrix(&self.mat + &rhs.mat)
    }
}

impl std::ops::Mul for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix::from_matrix(&self.mat * &rhs.mat)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub hermiticity_defect: f64,
    pub min_eigenvalue: f64,
    pub trace_defect: f64,
    pub tol: f64,
    pub pass: bool,
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "hermiticity_defect={:e} min_eigenvalue={:e} trace_defect={:e} tol={:e} pass={}",
            self.hermiticity_defect, self.min_eigenvalue, self.trace_defect, self.tol, self.pass
        )
    }
}

pub fn validate_density(op: &OperatorMatrix, tol: f64) -> ValidationReport {
    assert!(tol > 0.0, "tolerance must be positive");
    let hermiticity_defect = op.hermiticity_defect();
    let min_eigenvalue = op.min_eigenvalue();
    let trace_defect = (op.trace() - C64::new(1.0, 0.0)).norm();
    let pass = hermiticity_defect <= tol && min_eigenvalue >= -tol && trace_defect <= tol;
    ValidationReport {
        hermiticity_defect,
        min_eigenvalue,
        trace_defect,
        tol,
        pass,
    }
}

/// A validated state: Hermitian, positive and trace one within `tol`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    op: OperatorMatrix,
    tol: f64,
}

impl DensityMatrix {
    pub fn new(op: OperatorMatrix, tol: f64) -> Result<Self> {
        let report = validate_density(&op, tol);
        if !report.pass {
            return Err(Error::InvalidDensity(report.to_string()));
        }
        Ok(DensityMatrix { op, tol })
    }

    pub fn on_space(space: &FockSpace, op: OperatorMatrix) -> Result<Self> {
        op.check_space(space)?;
        Self::new(op, DEFAULT_TOL)
    }

    /// Pure state `|v><v| / <v|v>`.
    pub fn pure(space: &FockSpace, v: &CVec) -> Result<Self> {
        let norm2 = v.norm_squared();
        if norm2 == 0.0 {
            return Err(Error::InvalidDensity("zero state vector".into()));
        }
        Self::on_space(
            space,
            OperatorMatrix::projector(&(v / C64::new(norm2.sqrt(), 0.0))),
        )
    }

    pub fn vacuum(space: &FockSpace) -> Self {
        Self::pure(space, &space.vacuum()).expect("vacuum projector is a state")
    }

    pub fn operator(&self) -> &OperatorMatrix {
        &self.op
    }

    pub fn matrix(&self) -> &CMat {
        self.op.matrix()
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn purity(&self) -> f64 {
        linalg::trace(&(self.matrix() * self.matrix())).re
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_count(d: usize, n_cut: usize) -> usize {
        // enumerate the full box and keep multi-indices with total <= n_cut
        let side = n_cut + 1;
        (0..side.pow(d as u32))
            .filter(|&code| {
                let mut c = code;
                let mut total = 0;
                for _ in 0..d {
                    total += c % side;
                    c /= side;
                }
                total <= n_cut
            })
            .count()
    }

    #[test]
    fn dimension_examples() {
        assert_eq!(build_space(1, 0, 1.0).unwrap().dim(), 1);
        assert_eq!(build_space(3, 2, 1.0).unwrap().dim(), 10);
        assert_eq!(build_space(3, 6, 1.0).unwrap().dim(), 84);
    }

    #[test]
    fn dimension_formula_matches_enumeration() {
        for d in [1, 3] {
            for n_cut in 0..=8 {
                let space = build_space(d, n_cut, 1.0).unwrap();
                assert_eq!(space.dim(), brute_count(d, n_cut));
                assert_eq!(space.dim(), binomial(n_cut + d, d));
            }
        }
    }

    #[test]
    fn index_map_round_trips() {
        let space = build_space(3, 5, 1.0).unwrap();
        for i in 0..space.dim() {
            let occ = space.multi_index(i).to_vec();
            assert_eq!(space.flat_index(&occ), Some(i));
        }
        assert_eq!(space.flat_index(&[6, 0, 0]), None);
    }

    #[test]
    fn levels_are_contiguous_prefixes() {
        let space = build_space(3, 4, 1.0).unwrap();
        for level in 0..=4 {
            for i in space.level_range(level) {
                assert_eq!(space.level_of(i), level);
            }
            assert_eq!(space.prefix_dim(level), binomial(level + 3, 3));
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert_eq!(build_space(2, 3, 1.0), Err(Error::UnsupportedDimension(2)));
        assert!(matches!(build_space(1, 3, 0.0), Err(Error::InvalidMass(_))));
        assert!(matches!(
            FockSpace::with_bound(3, 40, 1.0, 1000),
            Err(Error::SpaceTooLarge {
                dim: 12341,
                max: 1000
            })
        ));
        let space = build_space(1, 3, 1.0).unwrap();
        assert_eq!(
            space.position_momentum(1).unwrap_err(),
            Error::InvalidAxis { axis: 1, d: 1 }
        );
    }

    #[test]
    fn vacuum_moments() {
        let space = build_space(1, 4, 1.0).unwrap();
        let (q, _) = space.position_momentum(0).unwrap();
        let vac = space.vacuum();
        let q2 = q.matrix() * q.matrix();
        assert!(((vac.adjoint() * &q2 * &vac)[(0, 0)].re - 0.5).abs() < 1e-15);
        assert!((vac.adjoint() * q.matrix() * &vac)[(0, 0)].norm() < 1e-15);
    }

    #[test]
    fn canonical_commutator_below_the_boundary() {
        for (d, n_cut) in [(1, 8), (3, 5)] {
            let space = build_space(d, n_cut, 1.0).unwrap();
            let k = space.prefix_dim(n_cut - 2);
            for axis in 0..d {
                let (q, p) = space.position_momentum(axis).unwrap();
                let c = linalg::commutator(q.matrix(), p.matrix());
                let block = c.view((0, 0), (k, k)).into_owned();
                let expected = CMat::identity(k, k) * C64::new(0.0, 1.0);
                assert!(linalg::max_abs(&(block - expected)) < 1e-13);
            }
        }
    }

    #[test]
    fn quadratures_are_hermitian() {
        let space = build_space(3, 4, 1.0).unwrap();
        for axis in 0..3 {
            let (q, p) = space.position_momentum(axis).unwrap();
            assert_eq!(q.hermiticity_defect(), 0.0);
            assert!(p.hermiticity_defect() < 1e-16);
        }
    }

    #[test]
    fn number_operator_has_integer_spectrum() {
        let space = build_space(3, 3, 1.0).unwrap();
        let mut total = CMat::zeros(space.dim(), space.dim());
        for axis in 0..3 {
            let a = space.annihilation(axis).unwrap().into_matrix();
            total += a.adjoint() * &a;
        }
        assert!(linalg::max_abs(&(&total - space.number_operator().matrix())) < 1e-14);
        let (values, _) = linalg::hermitian_eigen(&total);
        for v in &values {
            assert!((v - v.round()).abs() < 1e-12);
            assert!(*v > -0.5 && *v < 3.5);
        }
    }

    #[test]
    fn validation_examples() {
        let space = build_space(1, 3, 1.0).unwrap();
        let vac = OperatorMatrix::projector(&space.vacuum());
        assert!(validate_density(&vac, 1e-10).pass);

        let half = validate_density(&vac.scaled(0.5), 1e-10);
        assert!(!half.pass);
        assert!((half.trace_defect - 0.5).abs() < 1e-15);

        let mut m = CMat::zeros(4, 4);
        m[(0, 1)] = C64::new(1.0, 0.0);
        let report = validate_density(&OperatorMatrix::from_matrix(m), 1e-10);
        assert!(!report.pass);
        assert!(report.hermiticity_defect > 0.5);
    }

    #[test]
    fn density_matrix_rejects_invalid_input() {
        let space = build_space(1, 2, 1.0).unwrap();
        let bad = OperatorMatrix::projector(&space.vacuum()).scaled(2.0);
        assert!(matches!(
            DensityMatrix::on_space(&space, bad),
            Err(Error::InvalidDensity(_))
        ));
        let wrong = OperatorMatrix::zeros(5);
        assert!(matches!(
            DensityMatrix::on_space(&space, wrong),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
