//! Rotation symmetry of the truncated three-dimensional space.
//!
//! Each level `N` carries the angular momenta `l = N, N-2, ..`, so the space
//! splits into sectors `l` of the form `M_l (x) C^radial_dim(l)` where `M_l` is
//! the `(2l+1)`-dimensional irrep. A density matrix commutes with all rotations
//! iff it acts as `I_(2l+1) (x) T_l` on every sector, and then
//! `tr T = sum_l (2l+1) tr T_l`.
//!
//! The sector bases are found numerically: `L^2` is diagonalized within every
//! level, the `m = l` vector is extracted from `L_z`, and the remaining `m` are
//! generated with `L_-` (Condon-Shortley phases), so the radial label is shared
//! consistently by all `m`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, UnitQuaternion, Vector4};
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::fockspace::{DensityMatrix, FockSpace, OperatorMatrix, DEFAULT_TOL};
use crate::galilei::{rotation_matrix, rotation_operator};
use crate::linalg::{self, CMat, CVec};

/// Eigenvalue clustering tolerance for `L^2` and `L_z`.
pub const CLUSTER_TOL: f64 = 1e-8;
/// Tolerance on `sum (2l+1) tr T_l = 1` and on block positivity.
pub const BLOCK_TOL: f64 = 1e-12;
pub const DEFAULT_HAAR_SAMPLES: usize = 512;
const PANEL_SEED: u64 = 0x005e_ed0f_5033;
const PANEL_RANDOM: usize = 10;

#[derive(Debug, Clone)]
pub struct AngularMomentum {
    pub x: OperatorMatrix,
    pub y: OperatorMatrix,
    pub z: OperatorMatrix,
    pub l2: OperatorMatrix,
}

impl AngularMomentum {
    /// `L_- = L_x - i L_y`.
    pub fn lowering(&self) -> CMat {
        self.x.matrix() - self.y.matrix() * C64::new(0.0, 1.0)
    }
}

/// `L_i = eps_ijk Q_j P_k`, assembled in the number-conserving form
/// `L_z = -i (a_x^dag a_y - a_y^dag a_x)` so each level is preserved exactly.
pub fn angular_momentum(space: &FockSpace) -> Result<AngularMomentum> {
    if space.d() != 3 {
        return Err(Error::TrivialRotationGroup);
    }
    let a: Vec<CMat> = (0..3)
        .map(|k| space.annihilation(k).map(OperatorMatrix::into_matrix))
        .collect::<Result<_>>()?;
    let hop = |j: usize, k: usize| a[j].adjoint() * &a[k];
    let minus_i = C64::new(0.0, -1.0);
    let component = |j: usize, k: usize| (hop(j, k) - hop(k, j)) * minus_i;
    let x = component(1, 2);
    let y = component(2, 0);
    let z = component(0, 1);
    let l2 = &x * &x + &y * &y + &z * &z;
    Ok(AngularMomentum {
        x: OperatorMatrix::from_matrix(x),
        y: OperatorMatrix::from_matrix(y),
        z: OperatorMatrix::from_matrix(z),
        l2: OperatorMatrix::from_matrix(l2),
    })
}

#[derive(Debug, Clone)]
pub struct AngularBlock {
    pub ell: usize,
    pub radial_dim: usize,
    /// Level `N` of each radial index.
    pub levels: Vec<usize>,
    /// `basis[r][m + l]`, orthonormal vectors of the full space.
    pub basis: Vec<Vec<CVec>>,
    pub projector: OperatorMatrix,
}

impl AngularBlock {
    pub fn multiplicity(&self) -> usize {
        2 * self.ell + 1
    }

    pub fn rank(&self) -> usize {
        self.multiplicity() * self.radial_dim
    }
}

/// `#{N <= n_cut : N >= l, N = l mod 2}`.
pub fn radial_dim(n_cut: usize, ell: usize) -> usize {
    if ell > n_cut {
        0
    } else {
        (n_cut - ell) / 2 + 1
    }
}

fn phase_fixed(v: CVec) -> CVec {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let pivot = v
        .iter()
        .find(|z| z.norm() >= max * (1.0 - 1e-9))
        .copied()
        .unwrap_or(C64::new(1.0, 0.0));
    v * (pivot.conj() / pivot.norm())
}

fn sub_block(m: &CMat, start: usize, len: usize) -> CMat {
    m.view((start, start), (len, len)).into_owned()
}

pub fn angular_blocks(space: &FockSpace) -> Result<Vec<AngularBlock>> {
    let l = angular_momentum(space)?;
    let lminus = l.lowering();
    let dim = space.dim();
    let mut sectors: BTreeMap<usize, (Vec<usize>, Vec<Vec<CVec>>)> = BTreeMap::new();

    for level in 0..=space.n_cut() {
        let range = space.level_range(level);
        let (start, len) = (range.start, range.len());
        let (values, vectors) = linalg::hermitian_eigen(&sub_block(l.l2.matrix(), start, len));
        let mut by_ell: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, &lambda) in values.iter().enumerate() {
            let ell = ((-1.0 + (1.0 + 4.0 * lambda.max(0.0)).sqrt()) / 2.0).round() as usize;
            if (lambda - (ell * (ell + 1)) as f64).abs() > CLUSTER_TOL {
                return Err(Error::AngularStructure(format!(
                    "L^2 eigenvalue {lambda} at level {level} is not l(l+1)"
                )));
            }
            by_ell.entry(ell).or_default().push(i);
        }
        let lz = sub_block(l.z.matrix(), start, len);
        let lm = sub_block(&lminus, start, len);
        for (ell, cols) in by_ell {
            let mult = 2 * ell + 1;
            if cols.len() % mult != 0 {
                return Err(Error::AngularStructure(format!(
                    "sector l={ell} at level {level} has dimension {} not divisible by {mult}",
                    cols.len()
                )));
            }
            let v = CMat::from_fn(len, cols.len(), |r, c| vectors[(r, cols[c])]);
            let (mvals, mvecs) = linalg::hermitian_eigen(&(v.adjoint() * &lz * &v));
            let tops: Vec<CVec> = mvals
                .iter()
                .enumerate()
                .filter(|(_, &m)| (m - ell as f64).abs() <= CLUSTER_TOL)
                .map(|(i, _)| phase_fixed(&v * mvecs.column(i)))
                .collect();
            if tops.len() * mult != cols.len() {
                return Err(Error::AngularStructure(format!(
                    "expected {} highest-weight vectors for l={ell} at level {level}, found {}",
                    cols.len() / mult,
                    tops.len()
                )));
            }
            let entry = sectors.entry(ell).or_default();
            for top in tops {
                // ladder down from m = l to m = -l
                let mut ladder = vec![top];
                for k in 0..(mult - 1) {
                    let m = ell as f64 - k as f64;
                    let norm = ((ell * (ell + 1)) as f64 - m * (m - 1.0)).sqrt();
                    let next = &lm * ladder.last().unwrap() / C64::new(norm, 0.0);
                    ladder.push(next);
                }
                ladder.reverse();
                let embedded = ladder
                    .into_iter()
                    .map(|local| {
                        let mut full = CVec::zeros(dim);
                        full.rows_mut(start, len).copy_from(&local);
                        full
                    })
                    .collect();
                entry.0.push(level);
                entry.1.push(embedded);
            }
        }
    }

    Ok(sectors
        .into_iter()
        .map(|(ell, (levels, basis))| {
            let mut proj = CMat::zeros(dim, dim);
            for radial in &basis {
                for v in radial {
                    proj += v * v.adjoint();
                }
            }
            AngularBlock {
                ell,
                radial_dim: levels.len(),
                levels,
                basis,
                projector: OperatorMatrix::from_matrix(proj),
            }
        })
        .collect())
}

/// The family `l -> T_l` of radial matrices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct InvariantBlocks {
    blocks: BTreeMap<usize, CMat>,
}

impl InvariantBlocks {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, ell: usize, block: CMat) -> Self {
        self.insert(ell, block);
        self
    }

    pub fn insert(&mut self, ell: usize, block: CMat) {
        self.blocks.insert(ell, block);
    }

    pub fn get(&self, ell: usize) -> Option<&CMat> {
        self.blocks.get(&ell)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &CMat)> {
        self.blocks.iter().map(|(&l, b)| (l, b))
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// `sum_l (2l+1) tr T_l`.
    pub fn trace_sum(&self) -> f64 {
        self.iter()
            .map(|(ell, b)| (2 * ell + 1) as f64 * linalg::trace(b).re)
            .sum()
    }

    /// Largest entrywise difference, treating absent blocks as zero.
    pub fn max_difference(&self, other: &InvariantBlocks) -> f64 {
        let mut ells: Vec<usize> = self
            .blocks
            .keys()
            .chain(other.blocks.keys())
            .copied()
            .collect();
        ells.sort_unstable();
        ells.dedup();
        ells.into_iter()
            .map(|ell| match (self.get(ell), other.get(ell)) {
                (Some(a), Some(b)) if a.shape() == b.shape() => linalg::max_abs(&(a - b)),
                (Some(a), None) | (None, Some(a)) => linalg::max_abs(a),
                _ => f64::INFINITY,
            })
            .fold(0.0, f64::max)
    }
}

fn check_blocks(sectors: &[AngularBlock], blocks: &InvariantBlocks) -> Result<()> {
    for (ell, b) in blocks.iter() {
        let sector = sectors
            .iter()
            .find(|s| s.ell == ell)
            .ok_or(Error::UnknownSector { ell })?;
        if b.nrows() != sector.radial_dim || b.ncols() != sector.radial_dim {
            return Err(Error::BlockSize {
                ell,
                expected: sector.radial_dim,
                found: b.nrows().max(b.ncols()),
            });
        }
        let defect = linalg::max_abs(&(b - b.adjoint()));
        if defect > BLOCK_TOL {
            return Err(Error::NonHermitianBlock { ell, defect });
        }
        let min = linalg::hermitian_eigen(b).0.first().copied().unwrap_or(0.0);
        if min < -BLOCK_TOL {
            return Err(Error::NegativeBlock {
                ell,
                min_eigenvalue: min,
            });
        }
    }
    let sum = blocks.trace_sum();
    if (sum - 1.0).abs() > BLOCK_TOL {
        return Err(Error::Normalization { sum });
    }
    Ok(())
}

pub(crate) fn assemble(
    space: &FockSpace,
    sectors: &[AngularBlock],
    blocks: &InvariantBlocks,
) -> CMat {
    let dim = space.dim();
    let mut t = CMat::zeros(dim, dim);
    for sector in sectors {
        let Some(b) = blocks.get(sector.ell) else {
            continue;
        };
        for m in 0..sector.multiplicity() {
            for r in 0..sector.radial_dim {
                for s in 0..sector.radial_dim {
                    if b[(r, s)] != C64::new(0.0, 0.0) {
                        t += &sector.basis[r][m] * sector.basis[s][m].adjoint() * b[(r, s)];
                    }
                }
            }
        }
    }
    t
}

/// Assembles `T = sum_l P_l (x) T_l` after checking sizes, positivity and normalization.
pub fn build_invariant(space: &FockSpace, blocks: &InvariantBlocks) -> Result<DensityMatrix> {
    let sectors = angular_blocks(space)?;
    check_blocks(&sectors, blocks)?;
    DensityMatrix::new(
        OperatorMatrix::from_matrix(assemble(space, &sectors, blocks)),
        DEFAULT_TOL,
    )
}

pub(crate) fn extract_with(sectors: &[AngularBlock], t: &CMat) -> InvariantBlocks {
    let mut out = InvariantBlocks::new();
    for sector in sectors {
        let k = sector.radial_dim;
        let mut b = CMat::zeros(k, k);
        for m in 0..sector.multiplicity() {
            for r in 0..k {
                let left = sector.basis[r][m].adjoint() * t;
                for s in 0..k {
                    b[(r, s)] += left.dot(&sector.basis[s][m].transpose());
                }
            }
        }
        out.insert(sector.ell, b / C64::new(sector.multiplicity() as f64, 0.0));
    }
    out
}

/// `T_l[r, s] = (1/(2l+1)) sum_m <l r m| T |l s m>` for every sector.
pub fn extract_blocks(space: &FockSpace, t: &OperatorMatrix) -> Result<InvariantBlocks> {
    t.check_space(space)?;
    let sectors = angular_blocks(space)?;
    Ok(extract_with(&sectors, t.matrix()))
}

/// Orthogonal projection onto the commutant of the rotations (m-averaging per sector).
pub fn commutant_projection(space: &FockSpace, t: &OperatorMatrix) -> Result<OperatorMatrix> {
    t.check_space(space)?;
    let sectors = angular_blocks(space)?;
    let blocks = extract_with(&sectors, t.matrix());
    Ok(OperatorMatrix::from_matrix(assemble(
        space, &sectors, &blocks,
    )))
}

/// Uniformly distributed rotation (normalized Gaussian quaternion).
pub fn haar_rotation<R: rand::Rng>(rng: &mut R) -> DMatrix<f64> {
    let q = Vector4::from_fn(|_, _| StandardNormal.sample(rng));
    let q = UnitQuaternion::from_quaternion(nalgebra::Quaternion::from(q));
    let m = q.to_rotation_matrix().into_inner();
    DMatrix::from_fn(3, 3, |i, j| m[(i, j)])
}

/// The 24 proper rotations of the cube (signed permutation matrices, det +1).
pub fn octahedral_group() -> Vec<DMatrix<f64>> {
    const PERMS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let mut out = Vec::with_capacity(24);
    for perm in PERMS {
        for signs in 0..8u32 {
            let mut m = DMatrix::zeros(3, 3);
            for (row, &col) in perm.iter().enumerate() {
                m[(row, col)] = if signs & (1 << row) != 0 { -1.0 } else { 1.0 };
            }
            if m.determinant() > 0.0 {
                out.push(m);
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct GroupAverage {
    /// Exactly invariant result (sampled average projected onto the commutant).
    pub averaged: OperatorMatrix,
    /// Raw Monte-Carlo Haar average.
    pub sampled: OperatorMatrix,
    /// `|| sampled - averaged ||`; shrinks like `n_samples^-1/2`.
    pub sampling_deviation: f64,
    pub n_samples: usize,
    pub note: Option<String>,
}

/// Haar average of `U_R T U_R^dag`, followed by exact m-averaging per sector.
pub fn group_average(
    space: &FockSpace,
    t: &OperatorMatrix,
    n_samples: usize,
    seed: u64,
) -> Result<GroupAverage> {
    t.check_space(space)?;
    if space.d() == 1 {
        return Ok(GroupAverage {
            averaged: t.clone(),
            sampled: t.clone(),
            sampling_deviation: 0.0,
            n_samples: 0,
            note: Some("d = 1: rotation group is trivial, operator returned unchanged".into()),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = angular_momentum(space)?;
    let dim = space.dim();
    let mut sum = CMat::zeros(dim, dim);
    for _ in 0..n_samples.max(1) {
        let r = haar_rotation(&mut rng);
        let w = crate::galilei::rotation_vector(&r);
        let gen = l.x.matrix() * C64::new(w[0], 0.0)
            + l.y.matrix() * C64::new(w[1], 0.0)
            + l.z.matrix() * C64::new(w[2], 0.0);
        let u = linalg::expi_hermitian(&gen, -1.0);
        sum += &u * t.matrix() * u.adjoint();
    }
    let sampled = sum / C64::new(n_samples.max(1) as f64, 0.0);
    let sectors = angular_blocks(space)?;
    let averaged = assemble(space, &sectors, &extract_with(&sectors, &sampled));
    Ok(GroupAverage {
        sampling_deviation: linalg::operator_norm(&(&sampled - &averaged)),
        averaged: OperatorMatrix::from_matrix(averaged),
        sampled: OperatorMatrix::from_matrix(sampled),
        n_samples: n_samples.max(1),
        note: None,
    })
}

/// Quarter turns about the coordinate axes plus a fixed set of seeded random rotations.
pub fn rotation_panel() -> Vec<DMatrix<f64>> {
    let half_pi = std::f64::consts::FRAC_PI_2;
    let mut panel = vec![
        rotation_matrix([1.0, 0.0, 0.0], half_pi),
        rotation_matrix([0.0, 1.0, 0.0], half_pi),
        rotation_matrix([0.0, 0.0, 1.0], half_pi),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(PANEL_SEED);
    panel.extend((0..PANEL_RANDOM).map(|_| haar_rotation(&mut rng)));
    panel
}

/// `max_R || [T, U_R] ||` over [`rotation_panel`]; zero for `d = 1`.
pub fn invariance_residual(space: &FockSpace, t: &OperatorMatrix) -> Result<f64> {
    t.check_space(space)?;
    if space.d() == 1 {
        return Ok(0.0);
    }
    let mut worst: f64 = 0.0;
    for r in rotation_panel() {
        let u = rotation_operator(space, &r)?;
        worst = worst.max(linalg::operator_norm(&linalg::commutator(
            t.matrix(),
            u.matrix(),
        )));
    }
    Ok(worst)
}
