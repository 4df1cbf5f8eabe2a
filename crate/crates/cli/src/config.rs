//! Experiment configuration (TOML). Unknown keys are rejected everywhere.

use std::path::{Path, PathBuf};

use phasecov::io::{blocks_from_documents, parse_blocks, parse_operator, BlockDocument};
use phasecov::povm::GridAxis;
use phasecov::rotinv::build_invariant;
use phasecov::{
    build_space, DensityMatrix, FockSpace, OperatorMatrix, PhaseBox, PhasePoint, PhaseRegion,
    QuadratureRule,
};
use serde::Deserialize;

use crate::failure::Failure;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub space: SpaceConfig,
    pub t: StateSpec,
    pub s: Option<StateSpec>,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub regions: Vec<RegionSpec>,
    pub density: Option<DensityConfig>,
    pub sample: Option<SampleConfig>,
    #[serde(default)]
    pub verify: VerifyConfig,
    pub seed: Option<u64>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    pub d: usize,
    pub n_cut: usize,
    #[serde(default = "one")]
    pub mass: f64,
}

fn one() -> f64 {
    1.0
}

/// Exactly one source per state.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpec {
    pub preset: Option<String>,
    /// Number state given by its occupation numbers.
    pub occupation: Option<Vec<u32>>,
    pub blocks: Option<Vec<BlockDocument>>,
    pub blocks_file: Option<PathBuf>,
    pub matrix_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    pub nodes: Option<usize>,
    pub half_width: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum RegionSpec {
    Box {
        name: Option<String>,
        q: Vec<(f64, f64)>,
        p: Vec<(f64, f64)>,
    },
    Ball {
        name: Option<String>,
        center_q: Vec<f64>,
        center_p: Vec<f64>,
        radius: f64,
    },
    Union {
        name: Option<String>,
        members: Vec<RegionSpec>,
    },
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityConfig {
    /// One axis per coordinate, `q_1..q_d` then `p_1..p_d`.
    pub axes: Vec<AxisSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    pub n: usize,
    /// Sampling box half-width; defaults to the quadrature box.
    pub half_width: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub nodes: Option<usize>,
    pub formal_nodes: Option<usize>,
    pub cells: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
}

pub const DEFAULT_NODES: usize = 60;

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, Failure> {
        toml::from_str(text).map_err(|e| Failure::parse("config", e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::parse("config", format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn space(&self) -> Result<FockSpace, Failure> {
        Ok(build_space(
            self.space.d,
            self.space.n_cut,
            self.space.mass,
        )?)
    }

    pub fn rule(&self, space: &FockSpace) -> Result<QuadratureRule, Failure> {
        let nodes = self.quadrature.nodes.unwrap_or(DEFAULT_NODES);
        Ok(match self.quadrature.half_width {
            Some(h) => QuadratureRule::uniform(space.d(), nodes, h)?,
            None => QuadratureRule::for_space(space, nodes)?,
        })
    }

    pub fn regions(&self, d: usize) -> Result<Vec<(String, PhaseRegion)>, Failure> {
        self.regions
            .iter()
            .enumerate()
            .map(|(i, spec)| {
                let region = spec.build()?;
                if let Some(rd) = region.d() {
                    if rd != d {
                        return Err(Failure::validation(
                            "dimension_mismatch",
                            format!("region {i} has dimension {rd}, space has {d}"),
                        ));
                    }
                }
                Ok((
                    spec.name()
                        .map_or_else(|| format!("region{i}"), str::to_string),
                    region,
                ))
            })
            .collect()
    }

    pub fn density_axes(&self) -> Result<Vec<GridAxis>, Failure> {
        let cfg = self.density.as_ref().ok_or_else(|| {
            Failure::validation(
                "missing_section",
                "density command needs a [density] section",
            )
        })?;
        cfg.axes
            .iter()
            .map(|a| {
                if a.count == 0 || !(a.lo.is_finite() && a.hi.is_finite()) || a.lo > a.hi {
                    Err(Failure::validation(
                        "invalid_grid",
                        format!("bad axis {a:?}"),
                    ))
                } else {
                    Ok(GridAxis {
                        lo: a.lo,
                        hi: a.hi,
                        count: a.count,
                    })
                }
            })
            .collect()
    }

    pub fn sample_box(
        &self,
        space: &FockSpace,
        rule: &QuadratureRule,
    ) -> Result<(usize, PhaseBox), Failure> {
        let cfg = self.sample.as_ref().ok_or_else(|| {
            Failure::validation("missing_section", "sample command needs a [sample] section")
        })?;
        let bbox = match cfg.half_width {
            Some(h) => PhaseBox::cube(space.d(), h)?,
            None => rule.bounds().clone(),
        };
        Ok((cfg.n, bbox))
    }
}

impl RegionSpec {
    fn name(&self) -> Option<&str> {
        match self {
            RegionSpec::Box { name, .. }
            | RegionSpec::Ball { name, .. }
            | RegionSpec::Union { name, .. } => name.as_deref(),
        }
    }

    fn build(&self) -> Result<PhaseRegion, Failure> {
        Ok(match self {
            RegionSpec::Box { q, p, .. } => PhaseRegion::boxed(q, p)?,
            RegionSpec::Ball {
                center_q,
                center_p,
                radius,
                ..
            } => PhaseRegion::ball(PhasePoint::new(center_q, center_p)?, *radius)?,
            RegionSpec::Union { members, .. } => PhaseRegion::union(
                members
                    .iter()
                    .map(RegionSpec::build)
                    .collect::<Result<_, _>>()?,
            )?,
        })
    }
}

impl StateSpec {
    /// Builds and validates the state; relative paths resolve against `base`.
    pub fn build(
        &self,
        space: &FockSpace,
        base: &Path,
        label: &str,
    ) -> Result<DensityMatrix, Failure> {
        let given = [
            self.preset.is_some(),
            self.occupation.is_some(),
            self.blocks.is_some(),
            self.blocks_file.is_some(),
            self.matrix_file.is_some(),
        ]
        .iter()
        .filter(|&&b| b)
        .count();
        if given != 1 {
            return Err(Failure::parse(
                "config",
                format!("[{label}] needs exactly one of preset, occupation, blocks, blocks_file, matrix_file"),
            ));
        }
        let read = |p: &PathBuf| {
            let path = base.join(p);
            std::fs::read_to_string(&path)
                .map_err(|e| Failure::parse("input_file", format!("{}: {e}", path.display())))
        };
        if let Some(preset) = &self.preset {
            return match preset.as_str() {
                "vacuum" => Ok(DensityMatrix::vacuum(space)),
                other => Err(Failure::parse(
                    "config",
                    format!("[{label}] unknown preset {other:?}"),
                )),
            };
        }
        if let Some(occ) = &self.occupation {
            let index = space.flat_index(occ).ok_or_else(|| {
                Failure::validation(
                    "invalid_state",
                    format!("[{label}] occupation {occ:?} is outside the space"),
                )
            })?;
            return Ok(DensityMatrix::pure(space, &space.basis_vector(index))?);
        }
        let blocks = match (&self.blocks, &self.blocks_file) {
            (Some(docs), _) => Some(blocks_from_documents(docs)?),
            (_, Some(path)) => Some(parse_blocks(&read(path)?)?),
            _ => None,
        };
        if let Some(blocks) = blocks {
            return Ok(build_invariant(space, &blocks)?);
        }
        let path = self.matrix_file.as_ref().expect("one source is present");
        let m = parse_operator(&read(path)?)?;
        Ok(DensityMatrix::on_space(
            space,
            OperatorMatrix::new(space, m)?,
        )?)
    }
}
