use std::fs;
use std::path::{Path, PathBuf};

use phasecov::io::{BlocksDocument, OperatorDocument};
use phasecov::povm::{density_grid, measure_region, outcome_probability, sample};
use phasecov::rotinv::{extract_blocks, invariance_residual};
use phasecov::verify::{theorem_suite, SuiteConfig};
use phasecov::{validate_density, DensityMatrix, FockSpace, ValidationReport};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::failure::{ensure_finite, Failure};

/// Resolved inputs shared by every command.
pub struct Context {
    pub config: ExperimentConfig,
    pub base: PathBuf,
    pub out: PathBuf,
    pub seed: u64,
}

impl Context {
    fn space(&self) -> Result<FockSpace, Failure> {
        self.config.space()
    }

    fn t(&self, space: &FockSpace) -> Result<DensityMatrix, Failure> {
        self.config.t.build(space, &self.base, "t")
    }

    fn s(&self, space: &FockSpace) -> Result<DensityMatrix, Failure> {
        self.config
            .s
            .as_ref()
            .ok_or_else(|| {
                Failure::validation("missing_section", "this command needs an [s] state")
            })?
            .build(space, &self.base, "s")
    }

    fn write(&self, name: &str, contents: &[u8]) -> Result<PathBuf, Failure> {
        fs::create_dir_all(&self.out)
            .map_err(|e| Failure::io(format!("{}: {e}", self.out.display())))?;
        let path = self.out.join(name);
        fs::write(&path, contents).map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
        Ok(path)
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, Failure> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| Failure::numerical("non_finite", e.to_string()))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    fn write_csv(
        &self,
        name: &str,
        header: &[String],
        rows: impl Iterator<Item = Vec<f64>>,
    ) -> Result<PathBuf, Failure> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)
            .map_err(|e| Failure::io(e.to_string()))?;
        for row in rows {
            ensure_finite(name, &row)?;
            w.write_record(row.iter().map(f64::to_string))
                .map_err(|e| Failure::io(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Failure::io(e.to_string()))?;
        self.write(name, &bytes)
    }
}

fn coordinate_header(d: usize) -> Vec<String> {
    (1..=d)
        .map(|i| format!("q{i}"))
        .chain((1..=d).map(|i| format!("p{i}")))
        .collect()
}

#[derive(Serialize)]
struct StateReport {
    validation: ValidationReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    invariance_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace_sum: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    blocks: Option<BlocksDocument>,
}

fn state_report(space: &FockSpace, state: &DensityMatrix) -> Result<StateReport, Failure> {
    let validation = validate_density(state.operator(), state.tol());
    let (residual, trace_sum, blocks) = if space.d() == 3 {
        let blocks = extract_blocks(space, state.operator())?;
        (
            Some(invariance_residual(space, state.operator())?),
            Some(blocks.trace_sum()),
            Some(BlocksDocument::from_blocks(&blocks)),
        )
    } else {
        (None, None, None)
    };
    Ok(StateReport {
        validation,
        invariance_residual: residual,
        trace_sum,
        blocks,
    })
}

#[derive(Serialize)]
struct ValidateOutput {
    t: StateReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    s: Option<StateReport>,
}

pub fn validate(ctx: &Context) -> Result<Vec<PathBuf>, Failure> {
    let space = ctx.space()?;
    let t = state_report(&space, &ctx.t(&space)?)?;
    let s = match ctx.config.s {
        Some(_) => Some(state_report(&space, &ctx.s(&space)?)?),
        None => None,
    };
    for r in std::iter::once(&t).chain(s.as_ref()) {
        if !r.validation.pass {
            return Err(Failure::validation(
                "invalid_density",
                r.validation.to_string(),
            ));
        }
    }
    Ok(vec![
        ctx.write_json("validation.json", &ValidateOutput { t, s })?
    ])
}

/// CSV columns `q1..qd, p1..pd, value`.
pub fn density(ctx: &Context) -> Result<Vec<PathBuf>, Failure> {
    let space = ctx.space()?;
    let (t, s) = (ctx.t(&space)?, ctx.s(&space)?);
    let axes = ctx.config.density_axes()?;
    let rows = density_grid(&space, &s, &t, &axes)?;
    let mut header = coordinate_header(space.d());
    header.push("value".into());
    let path = ctx.write_csv(
        "density.csv",
        &header,
        rows.into_iter().map(|(mut coords, v)| {
            coords.push(v);
            coords
        }),
    )?;
    Ok(vec![path])
}

#[derive(Serialize)]
struct RegionMeasure {
    name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    probability: Option<f64>,
    operator: OperatorDocument,
}

#[derive(Serialize)]
struct MeasureOutput {
    regions: Vec<RegionMeasure>,
}

pub fn measure(ctx: &Context) -> Result<Vec<PathBuf>, Failure> {
    let space = ctx.space()?;
    let t = ctx.t(&space)?;
    let s = match ctx.config.s {
        Some(_) => Some(ctx.s(&space)?),
        None => None,
    };
    let rule = ctx.config.rule(&space)?;
    let regions = ctx.config.regions(space.d())?;
    if regions.is_empty() {
        return Err(Failure::validation(
            "missing_section",
            "measure needs at least one [[regions]] entry",
        ));
    }
    let mut out = Vec::with_capacity(regions.len());
    for (name, region) in regions {
        let e = measure_region(&space, &t, &region, &rule)?;
        let probability = match &s {
            Some(s) => Some(outcome_probability(&space, s, &t, &region, &rule)?),
            None => None,
        };
        let operator = OperatorDocument::from_operator(&e);
        ensure_finite(
            &name,
            operator.re.iter().chain(&operator.im).chain(&probability),
        )?;
        out.push(RegionMeasure {
            name,
            probability,
            operator,
        });
    }
    Ok(vec![ctx.write_json(
        "measure.json",
        &MeasureOutput { regions: out },
    )?])
}

/// CSV columns `q1..qd, p1..pd`.
pub fn sample_cmd(ctx: &Context) -> Result<Vec<PathBuf>, Failure> {
    let space = ctx.space()?;
    let (t, s) = (ctx.t(&space)?, ctx.s(&space)?);
    let rule = ctx.config.rule(&space)?;
    let (n, bbox) = ctx.config.sample_box(&space, &rule)?;
    let points = sample(&space, &s, &t, n, ctx.seed, &bbox, &rule)?;
    let path = ctx.write_csv(
        "samples.csv",
        &coordinate_header(space.d()),
        points.iter().map(|x| x.coords()),
    )?;
    Ok(vec![path])
}

/// Writes the report, then fails with status 1 if any check failed.
pub fn verify(ctx: &Context) -> Result<Vec<PathBuf>, Failure> {
    let space = ctx.space()?;
    let t = ctx.t(&space)?;
    let mut suite = SuiteConfig::reference(space, t);
    let v = &ctx.config.verify;
    if let Some(n) = v.nodes.or(ctx.config.quadrature.nodes) {
        suite.nodes = n;
    }
    if let Some(n) = v.formal_nodes {
        suite.formal_nodes = n;
    }
    if let Some(n) = v.cells {
        suite.cells = n;
    }
    suite.seed = ctx.seed;
    let report = theorem_suite(&suite)?;
    ensure_finite(
        "report",
        report
            .checks
            .iter()
            .flat_map(|c| [&c.computed, &c.expected, &c.tolerance]),
    )?;
    let path = ctx.write_json("report.json", &report)?;
    if !report.pass {
        return Err(Failure::validation(
            "verification_failed",
            format!("failed checks: {}", report.failed().join(",")),
        ));
    }
    Ok(vec![path])
}

pub fn output_dir(flag: Option<&Path>, config: &ExperimentConfig, base: &Path) -> PathBuf {
    match (flag, &config.output.dir) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(p)) => base.join(p),
        (None, None) => PathBuf::from("."),
    }
}
