//! Covariant phase-space POVMs `E_T(Z) = (2 pi)^-d int_Z W(x) T W(x)^dag dx`.
//!
//! `W(x)` is the compressed exact Weyl operator (see [`crate::galilei`]), so for
//! `T` on the truncated space every density `W T W^dag` is the exact operator
//! restricted to the space and big-box measures converge to the identity.
//!
//! Integrals are tensor Gauss-Legendre sums. Two evaluation paths exist:
//! a direct sum over the grid (any region, indicator weighting for balls and
//! overlapping unions), and for boxes in `d = 3` a mode-factorized sum that
//! uses `W = W_1 (x) W_2 (x) W_3` on the product basis. Both give the same
//! quadrature value; the second costs `dim^4` instead of `nodes^6 dim^2`.
//! Node sums run in fixed chunks combined by pairwise summation, so results do
//! not depend on the thread count.

pub mod quadrature;
pub mod region;

use log::warn;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fockspace::{DensityMatrix, FockSpace, OperatorMatrix};
use crate::galilei::{
    assemble_product, rep_operator_compressed, weyl_compressed, weyl_factors, weyl_mode,
    GalileiElement, PhasePoint,
};
use crate::linalg::{self, CMat, CVec};

pub use quadrature::{default_half_width, gauss_legendre, QuadratureRule, TensorGrid};
pub use region::{PhaseBox, PhaseRegion};

const CHUNK: usize = 256;

/// `(2 pi)^-d`.
pub fn density_normalization(d: usize) -> f64 {
    (2.0 * std::f64::consts::PI).powi(-(d as i32))
}

fn check_space(space: &FockSpace, op: &OperatorMatrix) -> Result<()> {
    op.check_space(space)
}

fn check_point(space: &FockSpace, x: &PhasePoint) -> Result<()> {
    if x.d() != space.d() {
        return Err(Error::DimensionMismatch {
            expected: space.d(),
            found: x.d(),
        });
    }
    Ok(())
}

/// Eigen-terms `(lambda, v)` of a Hermitian operator, dropping negligible ones.
pub(crate) fn spectral_terms(op: &CMat) -> Result<Vec<(f64, CVec)>> {
    let defect = linalg::max_abs(&(op - op.adjoint()));
    if defect > 1e-10 {
        return Err(Error::InvalidDensity(format!(
            "operator is not Hermitian (defect {defect:e})"
        )));
    }
    let (values, vectors) = linalg::hermitian_eigen(op);
    let scale = values
        .iter()
        .map(|v| v.abs())
        .fold(0.0, f64::max)
        .max(1e-300);
    Ok(values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() > 1e-15 * scale)
        .map(|(i, &v)| (v, vectors.column(i).into_owned()))
        .collect())
}

/// `G_T(x) = (2 pi)^-d W(x) T W(x)^dag`.
pub fn povm_density(
    space: &FockSpace,
    t: &DensityMatrix,
    x: &PhasePoint,
) -> Result<OperatorMatrix> {
    check_space(space, t.operator())?;
    check_point(space, x)?;
    let w = weyl_compressed(space, x)?.into_matrix();
    let g = &w * t.matrix() * w.adjoint() * C64::new(density_normalization(space.d()), 0.0);
    Ok(OperatorMatrix::from_matrix(g))
}

/// Fast evaluation of `tr[S G_T(x)]` from the spectral terms of `S` and `T`.
#[derive(Debug, Clone)]
pub struct DensityEvaluator {
    space: FockSpace,
    s_terms: Vec<(f64, CVec)>,
    t_terms: Vec<(f64, CVec)>,
    norm: f64,
}

impl DensityEvaluator {
    pub fn new(space: &FockSpace, s: &DensityMatrix, t: &DensityMatrix) -> Result<Self> {
        check_space(space, s.operator())?;
        check_space(space, t.operator())?;
        Ok(DensityEvaluator {
            space: space.clone(),
            s_terms: spectral_terms(s.matrix())?,
            t_terms: spectral_terms(t.matrix())?,
            norm: density_normalization(space.d()),
        })
    }

    /// Unclamped `tr[S G_T(x)]` at coordinates `q_1..q_d, p_1..p_d`.
    pub fn raw(&self, coords: &[f64]) -> f64 {
        let d = self.space.d();
        let factors: Vec<CMat> = (0..d)
            .map(|k| weyl_mode(self.space.n_cut(), coords[k], coords[d + k]))
            .collect();
        let w = assemble_product(&self.space, &factors);
        let mut total = 0.0;
        for (lt, t) in &self.t_terms {
            let wt = &w * t;
            for (ls, s) in &self.s_terms {
                total += lt * ls * s.dotc(&wt).norm_sqr();
            }
        }
        total * self.norm
    }

    /// Density clamped at zero; clamping is logged.
    pub fn density(&self, coords: &[f64]) -> f64 {
        let value = self.raw(coords);
        if value < 0.0 {
            warn!("negative probability density {value:e} at {coords:?} clamped to 0");
            0.0
        } else {
            value
        }
    }
}

/// `tr[S G_T(x)]`, clamped at zero (logged).
pub fn prob_density(
    space: &FockSpace,
    s: &DensityMatrix,
    t: &DensityMatrix,
    x: &PhasePoint,
) -> Result<f64> {
    check_point(space, x)?;
    Ok(DensityEvaluator::new(space, s, t)?.density(&x.coords()))
}

fn brute_force(
    space: &FockSpace,
    terms: &[(f64, CVec)],
    domain: &PhaseBox,
    rule: &QuadratureRule,
    indicator: Option<&PhaseRegion>,
) -> CMat {
    let dim = space.dim();
    let grid = rule.grid(domain);
    let total = grid.len();
    let n_chunks = total.div_ceil(CHUNK);
    let scale = density_normalization(space.d());
    let parts: Vec<CMat> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut acc = CMat::zeros(dim, dim);
            let mut coords = vec![0.0; grid.axes.len()];
            for flat in chunk * CHUNK..((chunk + 1) * CHUNK).min(total) {
                let w = grid.node(flat, &mut coords);
                if let Some(region) = indicator {
                    if !region.contains(&coords) {
                        continue;
                    }
                }
                let x = PhasePoint::from_coords(&coords);
                let wm = assemble_product(space, &weyl_factors(space, &x));
                for (lambda, t) in terms {
                    let u = &wm * t;
                    acc.gerc(
                        C64::new(w * lambda * scale, 0.0),
                        &u,
                        &u,
                        C64::new(1.0, 0.0),
                    );
                }
            }
            acc
        })
        .collect();
    linalg::pairwise_sum(parts, dim, dim)
}

/// Single-mode moment tensor `F[n][a][n2][b] = sum_x w W_na conj(W_n2b)` over a face.
pub(crate) fn mode_tensor(
    n_cut: usize,
    q: &(Vec<f64>, Vec<f64>),
    p: &(Vec<f64>, Vec<f64>),
) -> Vec<C64> {
    let k = n_cut + 1;
    let mut parts = Vec::with_capacity(q.0.len());
    for (qi, wq) in q.0.iter().zip(&q.1) {
        let mut f = vec![C64::new(0.0, 0.0); k * k * k * k];
        for (pi, wp) in p.0.iter().zip(&p.1) {
            let w = weyl_mode(n_cut, *qi, *pi);
            let weight = wq * wp;
            for n in 0..k {
                for a in 0..k {
                    let left = w[(n, a)] * weight;
                    if left == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let base = (n * k + a) * k * k;
                    for n2 in 0..k {
                        for b in 0..k {
                            f[base + n2 * k + b] += left * w[(n2, b)].conj();
                        }
                    }
                }
            }
        }
        parts.push(f);
    }
    // pairwise over q nodes
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(mut a) = it.next() {
            if let Some(b) = it.next() {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
            }
            next.push(a);
        }
        parts = next;
    }
    parts.pop().unwrap_or_default()
}

fn factorized(space: &FockSpace, t: &CMat, domain: &PhaseBox, rule: &QuadratureRule) -> CMat {
    let d = space.d();
    let k = space.n_cut() + 1;
    let tensors: Vec<Vec<C64>> = (0..d)
        .map(|m| {
            let (lo, hi) = domain.bounds()[m];
            let (plo, phi) = domain.bounds()[d + m];
            mode_tensor(
                space.n_cut(),
                &rule.axis(m, lo, hi),
                &rule.axis(d + m, plo, phi),
            )
        })
        .collect();
    let dim = space.dim();
    let scale = density_normalization(d);
    let idx = |n: usize, a: usize, n2: usize, b: usize| ((n * k + a) * k + n2) * k + b;
    let nonzero: Vec<(usize, usize, C64)> = (0..dim)
        .flat_map(|a| (0..dim).map(move |b| (a, b)))
        .filter(|&(a, b)| t[(a, b)] != C64::new(0.0, 0.0))
        .map(|(a, b)| (a, b, t[(a, b)]))
        .collect();
    let rows: Vec<Vec<C64>> = (0..dim)
        .into_par_iter()
        .map(|i| {
            let si = space.multi_index(i);
            (0..dim)
                .map(|j| {
                    let sj = space.multi_index(j);
                    let mut acc = C64::new(0.0, 0.0);
                    for &(a, b, tab) in &nonzero {
                        let (sa, sb) = (space.multi_index(a), space.multi_index(b));
                        let mut prod = tab;
                        for (m, f) in tensors.iter().enumerate() {
                            prod *= f[idx(
                                si[m] as usize,
                                sa[m] as usize,
                                sj[m] as usize,
                                sb[m] as usize,
                            )];
                        }
                        acc += prod;
                    }
                    acc * scale
                })
                .collect()
        })
        .collect();
    CMat::from_fn(dim, dim, |i, j| rows[i][j])
}

fn measure_inner(
    space: &FockSpace,
    t: &CMat,
    region: &PhaseRegion,
    rule: &QuadratureRule,
) -> Result<CMat> {
    let dim = space.dim();
    let Some(bbox) = region.bounding_box() else {
        return Ok(CMat::zeros(dim, dim));
    };
    if !rule.bounds().covers(&bbox) {
        return Err(Error::RegionOutsideBounds);
    }
    match region {
        PhaseRegion::Box(b) if space.d() == 3 => Ok(factorized(space, t, b, rule)),
        PhaseRegion::Box(b) => Ok(brute_force(space, &spectral_terms(t)?, b, rule, None)),
        PhaseRegion::Ball { .. } => Ok(brute_force(
            space,
            &spectral_terms(t)?,
            &bbox,
            rule,
            Some(region),
        )),
        PhaseRegion::Union(_) => {
            let members = region.flat_members();
            let disjoint = members
                .iter()
                .enumerate()
                .all(|(i, a)| members[i + 1..].iter().all(|b| a.disjoint_from(b)));
            if disjoint {
                let parts = members
                    .iter()
                    .map(|m| measure_inner(space, t, m, rule))
                    .collect::<Result<Vec<_>>>()?;
                Ok(linalg::pairwise_sum(parts, dim, dim))
            } else {
                Ok(brute_force(
                    space,
                    &spectral_terms(t)?,
                    &bbox,
                    rule,
                    Some(region),
                ))
            }
        }
    }
}

fn check_region(space: &FockSpace, region: &PhaseRegion, rule: &QuadratureRule) -> Result<()> {
    if let Some(d) = region.d() {
        if d != space.d() {
            return Err(Error::DimensionMismatch {
                expected: space.d(),
                found: d,
            });
        }
    }
    if rule.d() != space.d() {
        return Err(Error::DimensionMismatch {
            expected: space.d(),
            found: rule.d(),
        });
    }
    Ok(())
}

/// `E_T(Z)` for an operator `T` that has not been validated as a state.
pub fn measure_operator(
    space: &FockSpace,
    t: &OperatorMatrix,
    region: &PhaseRegion,
    rule: &QuadratureRule,
) -> Result<OperatorMatrix> {
    check_space(space, t)?;
    check_region(space, region, rule)?;
    Ok(OperatorMatrix::from_matrix(measure_inner(
        space,
        t.matrix(),
        region,
        rule,
    )?))
}

pub fn measure_region(
    space: &FockSpace,
    t: &DensityMatrix,
    region: &PhaseRegion,
    rule: &QuadratureRule,
) -> Result<OperatorMatrix> {
    measure_operator(space, t.operator(), region, rule)
}

/// `tr[S E_T(Z)]`, clamped to `[0, 1]` (logged).
pub fn outcome_probability(
    space: &FockSpace,
    s: &DensityMatrix,
    t: &DensityMatrix,
    region: &PhaseRegion,
    rule: &QuadratureRule,
) -> Result<f64> {
    check_space(space, s.operator())?;
    let e = measure_region(space, t, region, rule)?;
    let value = linalg::trace(&(s.matrix() * e.matrix())).re;
    Ok(clamp_probability(value))
}

fn clamp_probability(value: f64) -> f64 {
    if value < 0.0 {
        warn!("probability {value:e} clamped to 0");
        0.0
    } else if value > 1.0 {
        warn!("probability {value} clamped to 1");
        1.0
    } else {
        value
    }
}

/// `|| U_g E_T(Z) U_g^dag - E_T(alpha_g Z) ||`, both sides by independent quadrature.
pub fn covariance_residual(
    space: &FockSpace,
    t: &DensityMatrix,
    g: &GalileiElement,
    region: &PhaseRegion,
    rule: &QuadratureRule,
) -> Result<f64> {
    let moved = region.transformed(g, space.mass())?;
    let u = rep_operator_compressed(space, g)?.into_matrix();
    let e = measure_region(space, t, region, rule)?;
    let lhs = &u * e.matrix() * u.adjoint();
    let rhs = measure_region(space, t, &moved, rule)?;
    Ok(linalg::operator_norm(&(lhs - rhs.matrix())))
}

/// Position marginal on a set of slabs, computed two ways.
#[derive(Debug, Clone)]
pub struct Marginal {
    pub slabs: Vec<Vec<(f64, f64)>>,
    /// Probability per slab from `tr[S E_T(slab x momenta)]`.
    pub masses: Vec<f64>,
    /// Probability per slab from direct integration of the scalar density.
    pub density_masses: Vec<f64>,
    /// `mass / slab volume`.
    pub densities: Vec<f64>,
    pub max_discrepancy: f64,
}

impl Marginal {
    pub fn total(&self) -> f64 {
        linalg::pairwise_sum_f64(&self.masses)
    }
}

fn integrate_scalar(eval: &DensityEvaluator, domain: &PhaseBox, rule: &QuadratureRule) -> f64 {
    let grid = rule.grid(domain);
    let total = grid.len();
    let parts: Vec<f64> = (0..total.div_ceil(CHUNK))
        .into_par_iter()
        .map(|chunk| {
            let mut coords = vec![0.0; grid.axes.len()];
            let values: Vec<f64> = (chunk * CHUNK..((chunk + 1) * CHUNK).min(total))
                .map(|flat| {
                    let w = grid.node(flat, &mut coords);
                    w * eval.raw(&coords)
                })
                .collect();
            linalg::pairwise_sum_f64(&values)
        })
        .collect();
    linalg::pairwise_sum_f64(&parts)
}

pub fn marginal_position(
    space: &FockSpace,
    s: &DensityMatrix,
    t: &DensityMatrix,
    slabs: &[Vec<(f64, f64)>],
    rule: &QuadratureRule,
) -> Result<Marginal> {
    let d = space.d();
    if slabs.is_empty() {
        return Err(Error::InvalidRegion("no slabs".into()));
    }
    let momenta = &rule.bounds().bounds()[d..];
    let boxes = slabs
        .iter()
        .map(|slab| {
            if slab.len() != d {
                return Err(Error::InvalidRegion(format!(
                    "slab has {} intervals, expected {d}",
                    slab.len()
                )));
            }
            PhaseBox::from_qp(slab, momenta)
        })
        .collect::<Result<Vec<_>>>()?;
    for (i, a) in boxes.iter().enumerate() {
        if boxes[i + 1..].iter().any(|b| !a.disjoint_from(b)) {
            return Err(Error::InvalidRegion("position slabs overlap".into()));
        }
    }
    let hull = PhaseRegion::Union(boxes.iter().cloned().map(PhaseRegion::Box).collect())
        .bounding_box()
        .expect("nonempty");
    let covered: f64 = boxes.iter().map(PhaseBox::volume).sum();
    if (covered - hull.volume()).abs() > 1e-9 * hull.volume() {
        return Err(Error::InvalidRegion(
            "slabs do not partition a position box".into(),
        ));
    }

    let eval = DensityEvaluator::new(space, s, t)?;
    let mut masses = Vec::with_capacity(boxes.len());
    let mut density_masses = Vec::with_capacity(boxes.len());
    for b in &boxes {
        masses.push(outcome_probability(
            space,
            s,
            t,
            &PhaseRegion::Box(b.clone()),
            rule,
        )?);
        density_masses.push(integrate_scalar(&eval, b, rule));
    }
    let max_discrepancy = masses
        .iter()
        .zip(&density_masses)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let densities = masses
        .iter()
        .zip(slabs)
        .map(|(m, slab)| m / slab.iter().map(|(lo, hi)| hi - lo).product::<f64>())
        .collect();
    Ok(Marginal {
        slabs: slabs.to_vec(),
        masses,
        density_masses,
        densities,
        max_discrepancy,
    })
}

/// One grid axis: `count` equally spaced values from `lo` to `hi` inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridAxis {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl GridAxis {
    pub fn value(&self, i: usize) -> f64 {
        if self.count == 1 {
            self.lo
        } else {
            self.lo + (self.hi - self.lo) * i as f64 / (self.count - 1) as f64
        }
    }
}

/// `tr[S G_T(x)]` on a regular grid; rows ordered with the last coordinate fastest.
pub fn density_grid(
    space: &FockSpace,
    s: &DensityMatrix,
    t: &DensityMatrix,
    axes: &[GridAxis],
) -> Result<Vec<(Vec<f64>, f64)>> {
    if axes.len() != 2 * space.d() {
        return Err(Error::DimensionMismatch {
            expected: 2 * space.d(),
            found: axes.len(),
        });
    }
    let eval = DensityEvaluator::new(space, s, t)?;
    let total: usize = axes.iter().map(|a| a.count).product();
    Ok((0..total)
        .into_par_iter()
        .map(|mut flat| {
            let mut coords = vec![0.0; axes.len()];
            for (c, axis) in axes.iter().enumerate().rev() {
                coords[c] = axis.value(flat % axis.count);
                flat /= axis.count;
            }
            let v = eval.density(&coords);
            (coords, v)
        })
        .collect())
}

/// Minimum mass the sampling box must capture.
pub const SAMPLING_MASS: f64 = 0.999;
/// Safety factor applied to the grid maximum of the density.
pub const ENVELOPE_FACTOR: f64 = 1.1;

/// Grid nodes refined by pattern search before taking the maximum.
const REFINED_STARTS: usize = 8;

/// Maximum of the density over `bbox`: quadrature-grid maximum, refined by a
/// compass search from the best nodes (the grid alone can miss a peak between
/// sparse central nodes).
fn density_maximum(eval: &DensityEvaluator, bbox: &PhaseBox, rule: &QuadratureRule) -> f64 {
    let grid = rule.grid(bbox);
    let mut values: Vec<(f64, usize)> = (0..grid.len())
        .into_par_iter()
        .map(|flat| {
            let mut coords = vec![0.0; grid.axes.len()];
            grid.node(flat, &mut coords);
            (eval.raw(&coords), flat)
        })
        .collect();
    values.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    values
        .iter()
        .take(REFINED_STARTS)
        .map(|&(value, flat)| {
            let mut x = vec![0.0; grid.axes.len()];
            grid.node(flat, &mut x);
            let mut best = value;
            let mut step = 0.5;
            while step > 1e-6 {
                let mut moved = false;
                for c in 0..x.len() {
                    let (lo, hi) = bbox.bounds()[c];
                    for dir in [1.0, -1.0] {
                        let old = x[c];
                        x[c] = (old + dir * step).clamp(lo, hi);
                        let v = eval.raw(&x);
                        if v > best {
                            best = v;
                            moved = true;
                        } else {
                            x[c] = old;
                        }
                    }
                }
                if !moved {
                    step *= 0.5;
                }
            }
            best
        })
        .fold(0.0, f64::max)
}

/// Rejection sampling of measurement outcomes inside `bbox`.
///
/// The envelope is `min(1.1 * max, (2 pi)^-d)` with the refined grid maximum.
/// The second bound holds for every state pair, so a proposal above the
/// envelope means the density evaluation itself is broken and sampling aborts.
pub fn sample(
    space: &FockSpace,
    s: &DensityMatrix,
    t: &DensityMatrix,
    n: usize,
    seed: u64,
    bbox: &PhaseBox,
    rule: &QuadratureRule,
) -> Result<Vec<PhasePoint>> {
    if bbox.d() != space.d() {
        return Err(Error::DimensionMismatch {
            expected: space.d(),
            found: bbox.d(),
        });
    }
    let region = PhaseRegion::Box(bbox.clone());
    let mass = outcome_probability(space, s, t, &region, rule)?;
    if mass < SAMPLING_MASS {
        return Err(Error::Sampling(format!(
            "sampling box captures probability {mass}, below {SAMPLING_MASS}"
        )));
    }
    let eval = DensityEvaluator::new(space, s, t)?;
    let grid_max = density_maximum(&eval, bbox, rule);
    let envelope = (ENVELOPE_FACTOR * grid_max).min(density_normalization(space.d()));
    if envelope <= 0.0 {
        return Err(Error::Sampling("density vanishes on the grid".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_proposals = n.saturating_mul(1_000_000).max(1_000_000);
    let mut out = Vec::with_capacity(n);
    let mut coords = vec![0.0; 2 * space.d()];
    let mut proposals = 0usize;
    while out.len() < n {
        proposals += 1;
        if proposals > max_proposals {
            return Err(Error::Sampling(format!(
                "acceptance too low after {proposals} proposals"
            )));
        }
        for (c, &(lo, hi)) in coords.iter_mut().zip(bbox.bounds()) {
            *c = rng.random_range(lo..hi);
        }
        let u: f64 = rng.random::<f64>() * envelope;
        let value = eval.density(&coords);
        if value > envelope * (1.0 + 1e-12) {
            return Err(Error::Sampling(format!(
                "density {value} exceeds envelope {envelope} at {coords:?}"
            )));
        }
        if u < value {
            out.push(PhasePoint::from_coords(&coords));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
