//! Numerical checks of the covariance construction: formal degree, POVM axioms,
//! round trip of the generating operator, and an end-to-end report.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fockspace::{DensityMatrix, FockSpace, OperatorMatrix};
use crate::galilei::{rotation_matrix, rotation_operator, weyl_mode, GalileiElement, PhasePoint};
use crate::linalg::{self, CVec};
use crate::povm::{self, mode_tensor, PhaseBox, PhaseRegion, QuadratureRule};
use crate::rotinv::{self, haar_rotation, octahedral_group};

/// Named check kinds; keys of the tolerance table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Check {
    Invariance,
    TraceIdentity,
    Covariance,
    RotationCovariance,
    Positivity,
    Normalization,
    Additivity,
    FormalDegree,
    FormalDegreePanel,
    HaarAgreement,
    FormalDegreeTail,
    RoundTrip,
}

/// `(check, largest n_cut, smallest node count, tolerance)`; first match wins.
const TOLERANCES: &[(Check, usize, usize, f64)] = &[
    (Check::Invariance, usize::MAX, 0, 1e-10),
    (Check::TraceIdentity, usize::MAX, 0, 1e-12),
    // truncation error of the transported measure shrinks ~3x per level
    (Check::Covariance, 4, 0, 1e-3),
    (Check::Covariance, 6, 0, 1e-4),
    (Check::Covariance, usize::MAX, 0, 1e-5),
    (Check::RotationCovariance, usize::MAX, 0, 1e-5),
    (Check::Positivity, usize::MAX, 0, 1e-10),
    (Check::Normalization, usize::MAX, 0, 1e-6),
    (Check::Additivity, usize::MAX, 0, 1e-8),
    (Check::FormalDegree, usize::MAX, 0, 1e-4),
    (Check::FormalDegreePanel, usize::MAX, 0, 1e-3),
    (Check::HaarAgreement, usize::MAX, 0, 1e-3),
    (Check::FormalDegreeTail, usize::MAX, 0, 1e-6),
    (Check::RoundTrip, usize::MAX, 0, 1e-10),
];

/// Frozen tolerance for `check` at the given settings.
pub fn tolerance(check: Check, n_cut: usize, nodes: usize) -> f64 {
    TOLERANCES
        .iter()
        .find(|(c, max_cut, min_nodes, _)| *c == check && n_cut <= *max_cut && nodes >= *min_nodes)
        .map(|e| e.3)
        .expect("every check has a fallback entry")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSettings {
    pub n_cut: usize,
    pub nodes: usize,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub anchor: String,
    pub computed: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub settings: CheckSettings,
}

impl CheckResult {
    /// Pass iff `|computed - expected| <= tolerance`.
    pub fn near(
        name: &str,
        anchor: &str,
        computed: f64,
        expected: f64,
        tolerance: f64,
        settings: CheckSettings,
    ) -> Self {
        CheckResult {
            name: name.into(),
            anchor: anchor.into(),
            computed,
            expected,
            tolerance,
            pass: computed.is_finite() && (computed - expected).abs() <= tolerance,
            settings,
        }
    }

    /// Pass iff `computed >= expected - tolerance`.
    pub fn at_least(
        name: &str,
        anchor: &str,
        computed: f64,
        expected: f64,
        tolerance: f64,
        settings: CheckSettings,
    ) -> Self {
        CheckResult {
            name: name.into(),
            anchor: anchor.into(),
            computed,
            expected,
            tolerance,
            pass: computed.is_finite() && computed >= expected - tolerance,
            settings,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckResult>,
    pub pass: bool,
    pub notes: Vec<String>,
}

impl VerificationReport {
    pub fn push(&mut self, check: CheckResult) {
        self.checks.push(check);
        self.pass = self.checks.iter().all(|c| c.pass);
    }

    pub fn extend(&mut self, other: VerificationReport) {
        self.notes.extend(other.notes);
        for c in other.checks {
            self.push(c);
        }
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failed(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.name.as_str())
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{} {:<24} computed={:.3e} expected={:.3e} tol={:.1e}",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.computed,
                c.expected,
                c.tolerance
            )?;
        }
        for n in &self.notes {
            writeln!(f, "note: {n}")?;
        }
        Ok(())
    }
}

/// Random rotations compared against the octahedral panel.
pub const HAAR_RANDOM: usize = 120;
/// Inner box fraction used for the tail estimate.
const TAIL_FRACTION: f64 = 0.8;

/// Result of the square-integrability integral.
#[derive(Debug, Clone, PartialEq)]
pub struct FormalDegree {
    /// Integral over `(a, v, R)` divided by `||phi||^4`.
    pub ratio: f64,
    /// Relative mass between the inner and the full box.
    pub tail: f64,
    /// Random-Haar estimate for `d = 3` (`ratio` is the octahedral panel).
    pub haar_ratio: Option<f64>,
}

/// Grid over `(a, v)`: the rule's box read as `(a, m v)`, node counts per coordinate.
fn av_axes(rule: &QuadratureRule, mass: f64, shrink: f64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let d = rule.d();
    rule.bounds()
        .bounds()
        .iter()
        .enumerate()
        .map(|(c, &(lo, hi))| {
            let s = if c < d { 1.0 } else { 1.0 / mass };
            rule.axis(c, lo * s * shrink, hi * s * shrink)
        })
        .collect()
}

/// `int |<phi, U_(a,v,1) psi>|^2 (m / 2 pi)^d da dv` on the `(a, v)` grid.
fn translation_integral(
    space: &FockSpace,
    phi: &CVec,
    psis: &[CVec],
    axes: &[(Vec<f64>, Vec<f64>)],
) -> Vec<f64> {
    let d = space.d();
    let m = space.mass();
    let scale = (m / (2.0 * std::f64::consts::PI)).powi(d as i32);
    if d == 1 {
        let (a, wa) = &axes[0];
        let (v, wv) = &axes[1];
        let per_a: Vec<Vec<f64>> = a
            .par_iter()
            .zip(wa)
            .map(|(ai, wai)| {
                let mut acc = vec![Vec::with_capacity(v.len()); psis.len()];
                for (vj, wvj) in v.iter().zip(wv) {
                    let w = weyl_mode(space.n_cut(), *ai, m * vj);
                    for (slot, psi) in acc.iter_mut().zip(psis) {
                        slot.push(wai * wvj * phi.dotc(&(&w * psi)).norm_sqr());
                    }
                }
                acc.iter()
                    .map(|vals| linalg::pairwise_sum_f64(vals))
                    .collect()
            })
            .collect();
        return (0..psis.len())
            .map(|k| {
                let column: Vec<f64> = per_a.iter().map(|row| row[k]).collect();
                scale * linalg::pairwise_sum_f64(&column)
            })
            .collect();
    }

    // Product basis: the integral contracts one moment tensor per mode.
    let k = space.n_cut() + 1;
    let tensors: Vec<Vec<C64>> = (0..d)
        .map(|i| {
            let (vx, vw) = &axes[d + i];
            let p = (vx.iter().map(|v| m * v).collect::<Vec<_>>(), vw.clone());
            mode_tensor(space.n_cut(), &axes[i], &p)
        })
        .collect();
    let dim = space.dim();
    let occ: Vec<Vec<usize>> = (0..dim)
        .map(|i| space.multi_index(i).iter().map(|&x| x as usize).collect())
        .collect();
    let idx = |n: usize, a: usize, n2: usize, b: usize| ((n * k + a) * k + n2) * k + b;
    psis.par_iter()
        .map(|psi| {
            let rows: Vec<f64> = (0..dim)
                .map(|n| {
                    let mut acc = C64::new(0.0, 0.0);
                    for np in 0..dim {
                        let left = phi[n].conj() * psi[np];
                        if left == C64::new(0.0, 0.0) {
                            continue;
                        }
                        for mm in 0..dim {
                            let mid = left * phi[mm];
                            if mid == C64::new(0.0, 0.0) {
                                continue;
                            }
                            for mp in 0..dim {
                                let mut prod = mid * psi[mp].conj();
                                for (t, f) in tensors.iter().enumerate() {
                                    prod *= f[idx(occ[n][t], occ[np][t], occ[mm][t], occ[mp][t])];
                                }
                                acc += prod;
                            }
                        }
                    }
                    acc.re
                })
                .collect();
            scale * linalg::pairwise_sum_f64(&rows)
        })
        .collect()
}

/// `int |<phi, U_(a,v,R) phi>|^2 (m/2 pi)^d da dv dR / ||phi||^4`.
///
/// For `d = 3` the rotation integral is the mean over the octahedral group,
/// compared against `HAAR_RANDOM` seeded Haar samples.
pub fn formal_degree_integral(
    space: &FockSpace,
    phi: &CVec,
    rule: &QuadratureRule,
    seed: u64,
) -> Result<FormalDegree> {
    if phi.len() != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            found: phi.len(),
        });
    }
    if rule.d() != space.d() {
        return Err(Error::DimensionMismatch {
            expected: space.d(),
            found: rule.d(),
        });
    }
    let norm4 = phi.norm_squared().powi(2);
    if norm4 == 0.0 {
        return Err(Error::InvalidDensity("zero test vector".into()));
    }
    let m = space.mass();
    let full = av_axes(rule, m, 1.0);
    let inner = av_axes(rule, m, TAIL_FRACTION);
    let tol = tolerance(Check::FormalDegreeTail, space.n_cut(), rule.nodes()[0]);

    if space.d() == 1 {
        let outer = translation_integral(space, phi, std::slice::from_ref(phi), &full)[0];
        let core = translation_integral(space, phi, std::slice::from_ref(phi), &inner)[0];
        let tail = (outer - core).abs() / norm4;
        if tail > tol {
            return Err(Error::QuadratureBoxTooSmall {
                tail,
                tolerance: tol,
            });
        }
        return Ok(FormalDegree {
            ratio: outer / norm4,
            tail,
            haar_ratio: None,
        });
    }

    let rotate =
        |r: &DMatrix<f64>| -> Result<CVec> { Ok(rotation_operator(space, r)?.matrix() * phi) };
    let panel = octahedral_group()
        .iter()
        .map(rotate)
        .collect::<Result<Vec<_>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let random = (0..HAAR_RANDOM)
        .map(|_| rotate(&haar_rotation(&mut rng)))
        .collect::<Result<Vec<_>>>()?;

    let panel_vals = translation_integral(space, phi, &panel, &full);
    let random_vals = translation_integral(space, phi, &random, &full);
    let core = translation_integral(space, phi, &panel[..1], &inner)[0];
    let tail = (panel_vals[0] - core).abs() / norm4;
    if tail > tol {
        return Err(Error::QuadratureBoxTooSmall {
            tail,
            tolerance: tol,
        });
    }
    let ratio = linalg::pairwise_sum_f64(&panel_vals) / panel_vals.len() as f64 / norm4;
    let haar = linalg::pairwise_sum_f64(&random_vals) / random_vals.len() as f64 / norm4;
    let agreement = tolerance(Check::HaarAgreement, space.n_cut(), rule.nodes()[0]);
    if (ratio - haar).abs() > agreement {
        return Err(Error::Quadrature(format!(
            "octahedral panel {ratio} and Haar samples {haar} disagree beyond {agreement}"
        )));
    }
    Ok(FormalDegree {
        ratio,
        tail,
        haar_ratio: Some(haar),
    })
}

/// `cells` equal slabs of `bounds` along the first position coordinate.
pub fn slab_partition(bounds: &PhaseBox, cells: usize) -> Result<Vec<PhaseBox>> {
    if cells == 0 {
        return Err(Error::InvalidRegion(
            "partition needs at least one cell".into(),
        ));
    }
    let (lo, hi) = bounds.bounds()[0];
    let edges: Vec<f64> = (0..=cells)
        .map(|i| {
            if i == cells {
                hi
            } else {
                lo + (hi - lo) * i as f64 / cells as f64
            }
        })
        .collect();
    edges
        .windows(2)
        .map(|e| {
            let mut b = bounds.bounds().to_vec();
            b[0] = (e[0], e[1]);
            PhaseBox::new(b)
        })
        .collect()
}

fn check_partition(cells: &[PhaseBox], outer: &PhaseBox) -> Result<()> {
    for (i, a) in cells.iter().enumerate() {
        if !outer.covers(a) {
            return Err(Error::InvalidRegion(format!(
                "cell {i} leaves the partitioned box"
            )));
        }
        if cells[i + 1..].iter().any(|b| !a.disjoint_from(b)) {
            return Err(Error::InvalidRegion(format!(
                "cell {i} overlaps another cell"
            )));
        }
    }
    let covered: f64 = cells.iter().map(PhaseBox::volume).sum();
    if (covered - outer.volume()).abs() > 1e-9 * outer.volume() {
        return Err(Error::InvalidRegion("cells do not cover the box".into()));
    }
    Ok(())
}

/// Positivity per cell, `sum_cells E = I`, and additivity of a seeded random
/// run of adjacent cells against one direct quadrature of their hull.
///
/// `t` need not be a valid state, so invalid inputs show up as failed checks.
pub fn povm_axioms_report(
    space: &FockSpace,
    t: &OperatorMatrix,
    partition: &[PhaseBox],
    rule: &QuadratureRule,
    seed: u64,
) -> Result<VerificationReport> {
    check_partition(partition, rule.bounds())?;
    let nodes = rule.nodes()[0];
    let settings = |seeds: Vec<u64>| CheckSettings {
        n_cut: space.n_cut(),
        nodes,
        seeds,
    };
    let cells = partition
        .iter()
        .map(|b| povm::measure_operator(space, t, &PhaseRegion::Box(b.clone()), rule))
        .collect::<Result<Vec<_>>>()?;

    let mut report = VerificationReport {
        pass: true,
        ..Default::default()
    };
    let min_eig = cells
        .iter()
        .map(OperatorMatrix::min_eigenvalue)
        .fold(f64::INFINITY, f64::min);
    report.push(CheckResult::at_least(
        "povm_positivity",
        "E(Z) >= 0",
        min_eig,
        0.0,
        tolerance(Check::Positivity, space.n_cut(), nodes),
        settings(vec![]),
    ));

    let dim = space.dim();
    let total = linalg::pairwise_sum(cells.iter().map(|c| c.matrix().clone()).collect(), dim, dim);
    let defect = linalg::operator_norm(&(total - space.identity().matrix()));
    report.push(CheckResult::near(
        "povm_normalization",
        "E(X) = I",
        defect,
        0.0,
        tolerance(Check::Normalization, space.n_cut(), nodes),
        settings(vec![]),
    ));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (start, end) = if partition.len() == 1 {
        (0, 1)
    } else {
        let start = rng.random_range(0..partition.len() - 1);
        (start, rng.random_range(start + 2..=partition.len()))
    };
    let run = &partition[start..end];
    let hull = PhaseRegion::Union(run.iter().cloned().map(PhaseRegion::Box).collect())
        .bounding_box()
        .expect("nonempty run");
    let covered: f64 = run.iter().map(PhaseBox::volume).sum();
    let summed = linalg::pairwise_sum(
        cells[start..end]
            .iter()
            .map(|c| c.matrix().clone())
            .collect(),
        dim,
        dim,
    );
    let additivity = if (covered - hull.volume()).abs() <= 1e-9 * hull.volume() {
        let direct = povm::measure_operator(space, t, &PhaseRegion::Box(hull), rule)?;
        linalg::operator_norm(&(summed - direct.matrix()))
    } else {
        report.notes.push(format!(
            "cells {start}..{end} do not form a box; additivity compared against the union measure"
        ));
        let union = PhaseRegion::Union(run.iter().cloned().map(PhaseRegion::Box).collect());
        let direct = povm::measure_operator(space, t, &union, rule)?;
        linalg::operator_norm(&(summed - direct.matrix()))
    };
    report.push(CheckResult::near(
        "povm_additivity",
        "E(Z1 u Z2) = E(Z1) + E(Z2)",
        additivity,
        0.0,
        tolerance(Check::Additivity, space.n_cut(), nodes),
        settings(vec![seed]),
    ));
    Ok(report)
}

/// `T' = (2 pi)^d G_T(0)`, revalidated as a state; returns `(T', ||T' - T||)`.
pub fn round_trip(space: &FockSpace, t: &DensityMatrix) -> Result<(DensityMatrix, f64)> {
    let g = povm::povm_density(space, t, &PhasePoint::origin(space.d()))?;
    let scale = (2.0 * std::f64::consts::PI).powi(space.d() as i32);
    let rebuilt = DensityMatrix::on_space(space, g.scaled(scale))?;
    let diff = linalg::operator_norm(&(rebuilt.matrix() - t.matrix()));
    Ok((rebuilt, diff))
}

/// Settings for [`theorem_suite`].
#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub space: FockSpace,
    pub t: DensityMatrix,
    /// Gauss-Legendre nodes per coordinate for region measures.
    pub nodes: usize,
    /// Nodes per coordinate for the formal-degree integral.
    pub formal_nodes: usize,
    /// Slabs in the normalization partition.
    pub cells: usize,
    pub seed: u64,
    /// Translations and boosts for the covariance panel.
    pub panel: Vec<GalileiElement>,
    /// Axis-permuting rotations (`d = 3` only).
    pub rotations: Vec<DMatrix<f64>>,
    /// Region whose measure is transported; must be representable under the panel.
    pub region: PhaseRegion,
}

impl SuiteConfig {
    /// Reference settings: six translations and boosts, three axis-permuting
    /// rotations, and an off-center box.
    pub fn reference(space: FockSpace, t: DensityMatrix) -> Self {
        let d = space.d();
        let vec_of = |x: f64, y: f64, z: f64| -> Vec<f64> { [x, y, z][..d].to_vec() };
        let panel = vec![
            GalileiElement::translation(&vec_of(0.5, -0.2, 0.1)),
            GalileiElement::translation(&vec_of(-0.3, 0.4, -0.25)),
            GalileiElement::boost(&vec_of(0.4, 0.1, -0.3)),
            GalileiElement::boost(&vec_of(-0.6, -0.2, 0.2)),
            GalileiElement::from_parts(
                &vec_of(0.3, 0.2, -0.1),
                &vec_of(0.5, -0.3, 0.2),
                DMatrix::identity(d, d),
            ),
            GalileiElement::from_parts(
                &vec_of(-0.2, -0.4, 0.3),
                &vec_of(-0.3, 0.25, 0.4),
                DMatrix::identity(d, d),
            ),
        ]
        .into_iter()
        .collect::<Result<Vec<_>>>()
        .expect("reference panel is valid");
        let rotations = if d == 3 {
            axis_permuting_rotations()
        } else {
            Vec::new()
        };
        let q: Vec<(f64, f64)> = [(-1.0, 0.5), (-0.5, 1.0), (-0.8, 0.6)][..d].to_vec();
        let p: Vec<(f64, f64)> = [(-0.5, 1.0), (-1.0, 0.4), (-0.3, 0.9)][..d].to_vec();
        let (nodes, formal_nodes) = if d == 1 { (60, 60) } else { (60, 40) };
        SuiteConfig {
            space,
            t,
            nodes,
            formal_nodes,
            cells: 8,
            seed: 2024,
            panel,
            rotations,
            region: PhaseRegion::boxed(&q, &p).expect("reference region is valid"),
        }
    }
}

/// Quarter turns about `z` and `y`, and the third turn about `(1, 1, 1)`.
pub fn axis_permuting_rotations() -> Vec<DMatrix<f64>> {
    let snap = |r: DMatrix<f64>| r.map(|x| x.round());
    let half_pi = std::f64::consts::FRAC_PI_2;
    vec![
        snap(rotation_matrix([0.0, 0.0, 1.0], half_pi)),
        snap(rotation_matrix([0.0, 1.0, 0.0], half_pi)),
        snap(rotation_matrix(
            [1.0, 1.0, 1.0],
            2.0 * std::f64::consts::PI / 3.0,
        )),
    ]
}

/// Every check of the covariance statement for one generating operator `T`.
///
/// Rotation checks are skipped for `d = 1` (trivial stabilizer), with a note.
pub fn theorem_suite(config: &SuiteConfig) -> Result<VerificationReport> {
    let space = &config.space;
    let t = &config.t;
    let n_cut = space.n_cut();
    let nodes = config.nodes;
    let settings = |nodes: usize, seeds: Vec<u64>| CheckSettings {
        n_cut,
        nodes,
        seeds,
    };
    let mut report = VerificationReport {
        pass: true,
        ..Default::default()
    };

    if space.d() == 3 {
        report.push(CheckResult::near(
            "rotation_invariance",
            "[T, U_R] = 0",
            rotinv::invariance_residual(space, t.operator())?,
            0.0,
            tolerance(Check::Invariance, n_cut, 0),
            settings(0, vec![]),
        ));
        let blocks = rotinv::extract_blocks(space, t.operator())?;
        report.push(CheckResult::near(
            "trace_identity",
            "sum_l (2l+1) tr T_l = 1",
            blocks.trace_sum(),
            1.0,
            tolerance(Check::TraceIdentity, n_cut, 0),
            settings(0, vec![]),
        ));
    } else {
        report.notes.push(
            "d = 1: rotation group is trivial; invariance and rotation covariance checks skipped"
                .into(),
        );
        report.push(CheckResult::near(
            "trace_identity",
            "tr T = 1",
            t.operator().trace().re,
            1.0,
            tolerance(Check::TraceIdentity, n_cut, 0),
            settings(0, vec![]),
        ));
    }

    let rule = QuadratureRule::for_space(space, nodes)?;
    let worst = config
        .panel
        .iter()
        .map(|g| povm::covariance_residual(space, t, g, &config.region, &rule))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    report.push(CheckResult::near(
        "covariance_translations_boosts",
        "U_g E(Z) U_g^dag = E(alpha_g Z)",
        worst,
        0.0,
        tolerance(Check::Covariance, n_cut, nodes),
        settings(nodes, vec![]),
    ));

    if space.d() == 3 {
        let worst = config
            .rotations
            .iter()
            .map(|r| {
                let g = GalileiElement::rotation(r.clone())?;
                povm::covariance_residual(space, t, &g, &config.region, &rule)
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        report.push(CheckResult::near(
            "covariance_rotations",
            "U_R E(Z) U_R^dag = E(alpha_R Z)",
            worst,
            0.0,
            tolerance(Check::RotationCovariance, n_cut, nodes),
            settings(nodes, vec![]),
        ));
    }

    let partition = slab_partition(rule.bounds(), config.cells)?;
    report.extend(povm_axioms_report(
        space,
        t.operator(),
        &partition,
        &rule,
        config.seed,
    )?);

    let formal_rule = QuadratureRule::for_space(space, config.formal_nodes)?;
    let fd = formal_degree_integral(space, &space.vacuum(), &formal_rule, config.seed)?;
    report.push(CheckResult::near(
        "formal_degree",
        "int |<phi, U_g phi>|^2 dg = ||phi||^4",
        fd.ratio,
        1.0,
        tolerance(Check::FormalDegree, n_cut, config.formal_nodes),
        settings(
            config.formal_nodes,
            if space.d() == 3 {
                vec![config.seed]
            } else {
                vec![]
            },
        ),
    ));

    let (_, diff) = round_trip(space, t)?;
    report.push(CheckResult::near(
        "round_trip",
        "T = (2 pi)^d G_T(0)",
        diff,
        0.0,
        tolerance(Check::RoundTrip, n_cut, 0),
        settings(0, vec![]),
    ));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::build_space;
    use crate::linalg::CMat;
    use crate::rotinv::{build_invariant, InvariantBlocks};

    fn cvec(space: &FockSpace, entries: &[(usize, C64)]) -> CVec {
        let mut v = CVec::zeros(space.dim());
        for &(i, c) in entries {
            v[i] = c;
        }
        v
    }

    #[test]
    fn tolerance_table_is_total() {
        for c in [
            Check::Invariance,
            Check::TraceIdentity,
            Check::Covariance,
            Check::RotationCovariance,
            Check::Positivity,
            Check::Normalization,
            Check::Additivity,
            Check::FormalDegree,
            Check::FormalDegreePanel,
            Check::HaarAgreement,
            Check::FormalDegreeTail,
            Check::RoundTrip,
        ] {
            assert!(tolerance(c, 100, 2) > 0.0);
        }
    }

    #[test]
    fn formal_degree_vacuum_and_excited_d1() {
        let space = build_space(1, 16, 1.0).unwrap();
        let rule = QuadratureRule::for_space(&space, 60).unwrap();
        for n in [0, 1] {
            let fd = formal_degree_integral(&space, &space.basis_vector(n), &rule, 0).unwrap();
            assert!((fd.ratio - 1.0).abs() < 1e-4, "n={n}: {}", fd.ratio);
        }
    }

    #[test]
    fn formal_degree_is_homogeneous_and_mass_independent() {
        let space = build_space(1, 8, 2.5).unwrap();
        let rule = QuadratureRule::for_space(&space, 50).unwrap();
        let phi = cvec(&space, &[(0, C64::new(0.6, 0.0)), (2, C64::new(0.0, 0.8))]);
        let a = formal_degree_integral(&space, &phi, &rule, 0)
            .unwrap()
            .ratio;
        let b = formal_degree_integral(&space, &(phi * C64::new(2.0, 0.0)), &rule, 0)
            .unwrap()
            .ratio;
        assert!((a - 1.0).abs() < 1e-6, "{a}");
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn formal_degree_box_too_small() {
        let space = build_space(1, 6, 1.0).unwrap();
        let rule = QuadratureRule::uniform(1, 30, 2.0).unwrap();
        let err = formal_degree_integral(&space, &space.vacuum(), &rule, 0).unwrap_err();
        assert!(matches!(err, Error::QuadratureBoxTooSmall { .. }));
    }

    #[test]
    fn formal_degree_d3_panel_and_haar_agree() {
        let space = build_space(3, 2, 1.0).unwrap();
        let rule = QuadratureRule::for_space(&space, 30).unwrap();
        let phi = cvec(
            &space,
            &[
                (0, C64::new(0.5, 0.0)),
                (1, C64::new(0.0, 0.5)),
                (5, C64::new(0.7, 0.1)),
            ],
        );
        let fd = formal_degree_integral(&space, &phi, &rule, 3).unwrap();
        assert!((fd.ratio - 1.0).abs() < 1e-4, "{}", fd.ratio);
        assert!((fd.haar_ratio.unwrap() - 1.0).abs() < 1e-4);
    }

    #[test]
    fn axioms_report_and_refinement() {
        let space = build_space(1, 6, 1.0).unwrap();
        let rule = QuadratureRule::for_space(&space, 60).unwrap();
        let t = DensityMatrix::vacuum(&space);
        let coarse = povm_axioms_report(
            &space,
            t.operator(),
            &slab_partition(rule.bounds(), 8).unwrap(),
            &rule,
            1,
        )
        .unwrap();
        assert!(coarse.pass, "{coarse}");
        let fine = povm_axioms_report(
            &space,
            t.operator(),
            &slab_partition(rule.bounds(), 16).unwrap(),
            &rule,
            1,
        )
        .unwrap();
        let a = coarse.check("povm_normalization").unwrap().computed;
        let b = fine.check("povm_normalization").unwrap().computed;
        assert!((a - b).abs() < 1e-8);
    }

    #[test]
    fn negative_generator_fails_positivity_only() {
        let space = build_space(1, 4, 1.0).unwrap();
        let rule = QuadratureRule::for_space(&space, 40).unwrap();
        let mut m = CMat::zeros(space.dim(), space.dim());
        m[(0, 0)] = C64::new(1.2, 0.0);
        m[(1, 1)] = C64::new(-0.2, 0.0);
        let t = OperatorMatrix::new(&space, m).unwrap();
        let r = povm_axioms_report(
            &space,
            &t,
            &slab_partition(rule.bounds(), 4).unwrap(),
            &rule,
            0,
        )
        .unwrap();
        assert_eq!(r.failed(), vec!["povm_positivity"]);
    }

    #[test]
    fn partition_must_cover() {
        let space = build_space(1, 2, 1.0).unwrap();
        let rule = QuadratureRule::for_space(&space, 10).unwrap();
        let mut cells = slab_partition(rule.bounds(), 4).unwrap();
        cells.pop();
        let t = DensityMatrix::vacuum(&space);
        assert!(povm_axioms_report(&space, t.operator(), &cells, &rule, 0).is_err());
    }

    #[test]
    fn round_trip_recovers_generator() {
        let space = build_space(3, 2, 1.0).unwrap();
        let blocks = InvariantBlocks::new()
            .with(0, CMat::from_diagonal_element(2, 2, C64::new(0.35, 0.0)))
            .with(1, CMat::from_diagonal_element(1, 1, C64::new(0.1, 0.0)));
        let t = build_invariant(&space, &blocks).unwrap();
        let (_, diff) = round_trip(&space, &t).unwrap();
        assert!(diff < 1e-10);
    }

    #[test]
    fn suite_d1_passes_and_skips_rotations() {
        let space = build_space(1, 10, 1.0).unwrap();
        let t = DensityMatrix::vacuum(&space);
        let report = theorem_suite(&SuiteConfig::reference(space, t)).unwrap();
        assert!(report.pass, "{report}");
        assert!(report.check("rotation_invariance").is_none());
        assert_eq!(report.notes.len(), 1);
        let json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        let first = &json["checks"][0];
        for key in [
            "name",
            "anchor",
            "computed",
            "expected",
            "tolerance",
            "pass",
            "settings",
        ] {
            assert!(first.get(key).is_some(), "{key}");
        }
    }

    #[test]
    fn axis_permuting_rotations_are_exact() {
        for r in axis_permuting_rotations() {
            assert!(GalileiElement::rotation(r.clone()).is_ok());
            assert!(r.iter().all(|x| *x == 0.0 || x.abs() == 1.0));
        }
    }
}
