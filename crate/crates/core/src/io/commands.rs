//! `check`, `limit`, `map`, `simulate` and `ensemble`.
//!
//! Each command returns a human-readable report (rounded to three decimals),
//! an optional artifact (results table or model file) and an exit code. The
//! binary decides where the artifact goes.

use std::fmt::Write as _;

use serde_json::json;

use crate::dynamics::fj_to_gossip;
use crate::linalg::{
    classify_stochasticity, substochastic_schur_stable, StochasticityClass, StochasticityKind,
    STOCHASTIC_TOL,
};
use crate::sim::{
    decade_checkpoints, run_ensemble, run_fj_trajectory, run_trajectory, EnsembleConfig, RngStream,
    Storage, Trajectory, TrajectoryConfig,
};

use super::{
    Cell, Format, IoError, LoadedModel, Manifest, Metadata, ModelFile, ModelSource, OpinionModel,
    ResultsFile, Table,
};

pub const TOOL_NAME: &str = "gossip-opinions";
pub const DEFAULT_SIMULATE_STEPS: u64 = 10_000;
pub const DEFAULT_ENSEMBLE_STEPS: u64 = 100_000;
pub const DEFAULT_REPLICATES: u64 = 200;
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct RunContext {
    pub source: ModelSource,
    pub renormalize: bool,
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub contents: String,
    /// File name used when only an output directory is known.
    pub default_name: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandOutput {
    pub report: String,
    pub warnings: Vec<String>,
    pub artifact: Option<Artifact>,
    pub exit_code: i32,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SimulateOptions {
    pub steps: Option<u64>,
    pub seed: Option<u64>,
    pub checkpoints: Option<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EnsembleOptions {
    pub steps: Option<u64>,
    pub replicates: Option<u64>,
    pub seed: Option<u64>,
    pub checkpoints: Option<Vec<u64>>,
}

fn round3(v: f64) -> String {
    format!("{v:.3}")
}

fn vec3(v: &[f64]) -> String {
    let cells: Vec<String> = v.iter().map(|x| round3(*x)).collect();
    format!("[{}]", cells.join(", "))
}

fn describe_class(c: &StochasticityClass) -> String {
    let ids = || {
        c.deficiency_nodes
            .iter()
            .map(|i| (i + 1).to_string())
            .collect::<Vec<_>>()
            .join(", ")
    };
    match c.kind {
        StochasticityKind::RowStochastic => "row-stochastic".into(),
        StochasticityKind::SubstochasticStrict => {
            format!("substochastic, deficiency nodes {{{}}}", ids())
        }
        StochasticityKind::NotSubstochastic => "not substochastic".into(),
    }
}

impl RunContext {
    fn load(&self) -> Result<LoadedModel, IoError> {
        self.source.load(self.renormalize)
    }

    fn manifest(&self, command: &str, kind: &str, mut args: Vec<String>) -> Manifest {
        let mut argv = vec![command.to_string(), self.source.label.clone()];
        argv.append(&mut args);
        if self.renormalize {
            argv.push("--renormalize".into());
        }
        argv.push("--format".into());
        argv.push(self.format.extension().into());
        Manifest {
            tool: TOOL_NAME.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            model: self.source.label.clone(),
            model_sha256: self.source.sha256(),
            kind: kind.into(),
            seed: None,
            steps: None,
            replicates: None,
            checkpoints: None,
            renormalize: self.renormalize,
            format: self.format,
            argv,
        }
    }

    fn artifact(&self, command: &str, results: &ResultsFile) -> Artifact {
        Artifact {
            contents: results.render(),
            default_name: format!("{command}.{}", self.format.extension()),
        }
    }
}

/// Assumption validation, stochasticity classes, stability verdicts and the
/// spectral radius of the relevant iteration matrix.
pub fn check(ctx: &RunContext) -> Result<CommandOutput, IoError> {
    let loaded = ctx.load()?;
    let mut r = String::new();
    let g = loaded.model.graph();
    writeln!(
        r,
        "model: {} ({}, n = {}, |E| = {})",
        ctx.source.label,
        loaded.model.kind().as_str(),
        g.n(),
        g.edge_count()
    )
    .unwrap();
    let holds = match &loaded.model {
        OpinionModel::Fj(m) => {
            let lw = m.lambda_w();
            writeln!(
                r,
                "W: {}",
                describe_class(&classify_stochasticity(m.w(), STOCHASTIC_TOL)?)
            )
            .unwrap();
            let class = classify_stochasticity(&lw, STOCHASTIC_TOL)?;
            writeln!(r, "Lambda W: {}", describe_class(&class)).unwrap();
            if class.is_substochastic() {
                let stable = substochastic_schur_stable(&lw, STOCHASTIC_TOL)?;
                writeln!(
                    r,
                    "Lambda W Schur stable (reachability test): {}",
                    yes_no(stable)
                )
                .unwrap();
            }
            writeln!(
                r,
                "spectral radius of Lambda W: {}",
                round3(m.spectral_radius()?)
            )
            .unwrap();
            let holds = m.assumption_holds();
            writeln!(
                r,
                "every agent reaches an agent with W_mm > 0: {}",
                yes_no(holds)
            )
            .unwrap();
            holds
        }
        OpinionModel::Gossip(m) => {
            writeln!(
                r,
                "Gamma: {}",
                describe_class(&classify_stochasticity(m.gamma(), STOCHASTIC_TOL)?)
            )
            .unwrap();
            writeln!(r, "H: {}", vec3(m.h())).unwrap();
            let ed = m.expected_dynamics()?;
            let class = classify_stochasticity(&ed.abar, STOCHASTIC_TOL)?;
            writeln!(r, "Abar: {}", describe_class(&class)).unwrap();
            if class.is_substochastic() {
                let stable = substochastic_schur_stable(&ed.abar, STOCHASTIC_TOL)?;
                writeln!(
                    r,
                    "Abar Schur stable (reachability test): {}",
                    yes_no(stable)
                )
                .unwrap();
            }
            let rho = match &ed.limit {
                Some(l) => l.rho,
                None => crate::linalg::spectral_radius(&ed.abar)?,
            };
            writeln!(r, "spectral radius of Abar: {}", round3(rho)).unwrap();
            let holds = m.assumption_holds();
            writeln!(
                r,
                "every agent reaches an agent with h_m < 1: {}",
                yes_no(holds)
            )
            .unwrap();
            holds
        }
    };
    writeln!(
        r,
        "assumptions: {}",
        if holds { "hold" } else { "VIOLATED" }
    )
    .unwrap();
    Ok(CommandOutput {
        report: r,
        warnings: loaded.warnings,
        artifact: None,
        exit_code: if holds { 0 } else { 1 },
    })
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn matrix_columns(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (1..=n).map(move |j| format!("{prefix}_{j}"))
}

/// Limit opinions: `x'` and `V` for FJ models, `x*`, `Ā` and `ρ(Ā)` for
/// gossip models.
pub fn limit(ctx: &RunContext) -> Result<CommandOutput, IoError> {
    let loaded = ctx.load()?;
    let mut report = String::new();
    let results = match &loaded.model {
        OpinionModel::Fj(m) => {
            let lim = m.limit()?;
            let rho = m.spectral_radius()?;
            let n = m.n();
            let max_row_dev = lim
                .v
                .row_sums()
                .iter()
                .map(|s| (s - 1.0).abs())
                .fold(0.0, f64::max);
            let mut columns = vec!["agent".to_string(), "x_prime".to_string()];
            columns.extend(matrix_columns("V", n));
            let rows = (0..n)
                .map(|i| {
                    let mut row = vec![Cell::Int(i as u64 + 1), Cell::Num(lim.x_prime[i])];
                    row.extend(lim.v.row(i).iter().map(|&v| Cell::Num(v)));
                    row
                })
                .collect();
            writeln!(report, "x' = {}", vec3(&lim.x_prime)).unwrap();
            write!(report, "V =\n{}", lim.v).unwrap();
            writeln!(report, "spectral radius of Lambda W: {}", round3(rho)).unwrap();
            ResultsFile {
                manifest: ctx.manifest("limit", "fj", vec![]),
                summary: json!({
                    "kind": "fj",
                    "assumption_holds": true,
                    "spectral_radius": rho,
                    "v_row_sum_max_deviation": max_row_dev,
                }),
                table: Table { columns, rows },
            }
        }
        OpinionModel::Gossip(m) => {
            let ed = m.expected_dynamics()?;
            let lim = ed.limit.ok_or_else(|| {
                IoError::Assumption(
                    "some agent has no path to an agent with openness below one".into(),
                )
            })?;
            let n = m.n();
            let mut columns = vec![
                "agent".to_string(),
                "x_star".to_string(),
                "bbar_u".to_string(),
            ];
            columns.extend(matrix_columns("Abar", n));
            let rows = (0..n)
                .map(|i| {
                    let mut row = vec![
                        Cell::Int(i as u64 + 1),
                        Cell::Num(lim.x_star[i]),
                        Cell::Num(ed.bbar_u[i]),
                    ];
                    row.extend(ed.abar.row(i).iter().map(|&v| Cell::Num(v)));
                    row
                })
                .collect();
            writeln!(report, "x* = {}", vec3(&lim.x_star)).unwrap();
            write!(report, "Abar =\n{}", ed.abar).unwrap();
            writeln!(report, "spectral radius of Abar: {}", round3(lim.rho)).unwrap();
            ResultsFile {
                manifest: ctx.manifest("limit", "gossip", vec![]),
                summary: json!({
                    "kind": "gossip",
                    "assumption_holds": true,
                    "spectral_radius": lim.rho,
                    "edges": m.graph().edge_count(),
                }),
                table: Table { columns, rows },
            }
        }
    };
    Ok(CommandOutput {
        report,
        warnings: loaded.warnings,
        artifact: Some(ctx.artifact("limit", &results)),
        exit_code: 0,
    })
}

/// Maps an FJ model to the gossip model with the same expected limit and
/// emits it as a model file.
pub fn map(ctx: &RunContext) -> Result<CommandOutput, IoError> {
    let loaded = ctx.load()?;
    let OpinionModel::Fj(fj) = &loaded.model else {
        return Err(IoError::Validation("map expects an fj model".into()));
    };
    let (gossip, residuals) = fj_to_gossip(fj)?;
    let name = loaded
        .metadata
        .as_ref()
        .and_then(|m| m.name.clone())
        .unwrap_or_else(|| "model".into());
    let metadata = Metadata {
        name: Some(name.replace("friedkin", "gossip")),
        description: Some(format!("gossip mapping of {name}")),
    };
    let file = ModelFile::from_model(&OpinionModel::Gossip(gossip.clone()), Some(metadata));
    let mut report = String::new();
    writeln!(report, "H = {}", vec3(gossip.h())).unwrap();
    write!(report, "Gamma =\n{}", gossip.gamma()).unwrap();
    writeln!(report, "D = {:?}", gossip.graph().degree_matrix().diagonal).unwrap();
    writeln!(
        report,
        "residual |D(I-H) - (I-Lambda)|_max = {:e}",
        residuals.susceptibility
    )
    .unwrap();
    writeln!(
        report,
        "residual |D(I-H) + H(I-Gamma) - (I-Lambda W)|_max = {:e}",
        residuals.system
    )
    .unwrap();
    Ok(CommandOutput {
        report,
        warnings: loaded.warnings,
        artifact: Some(Artifact {
            contents: file.to_toml(),
            default_name: format!("{}.model", name.replace("friedkin", "gossip")),
        }),
        exit_code: 0,
    })
}

fn trajectory_table(t: &Trajectory, n: usize) -> Table {
    let mut columns = vec!["k".to_string()];
    columns.extend(matrix_columns("x", n));
    columns.extend(matrix_columns("xbar", n));
    let mut all: Vec<_> = t.samples.iter().chain(&t.checkpoints).collect();
    all.sort_by_key(|s| s.step);
    all.dedup_by_key(|s| s.step);
    let rows = all
        .into_iter()
        .map(|s| {
            let mut row = vec![Cell::Int(s.step)];
            row.extend(s.x.iter().map(|&v| Cell::Num(v)));
            row.extend(s.xbar.iter().map(|&v| Cell::Num(v)));
            row
        })
        .collect();
    Table { columns, rows }
}

fn join_u64(v: &[u64]) -> String {
    v.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
}

/// One trajectory with running time averages. FJ models iterate the
/// synchronous map; gossip models sample edges from `(seed, stream 0)`.
pub fn simulate(ctx: &RunContext, opts: &SimulateOptions) -> Result<CommandOutput, IoError> {
    let loaded = ctx.load()?;
    let steps = opts.steps.unwrap_or(DEFAULT_SIMULATE_STEPS);
    let checkpoints = opts
        .checkpoints
        .clone()
        .unwrap_or_else(|| decade_checkpoints(steps));
    let cfg = TrajectoryConfig {
        steps,
        checkpoints: checkpoints.clone(),
        storage: Storage::Auto,
        log_edges: false,
    };
    let mut args = vec!["--steps".to_string(), steps.to_string()];
    if opts.checkpoints.is_some() {
        args.push("--checkpoints".into());
        args.push(join_u64(&checkpoints));
    }
    let mut report = String::new();
    let (t, n, limit, seed) = match &loaded.model {
        OpinionModel::Fj(m) => {
            let t = run_fj_trajectory(m, &cfg);
            let limit = m.limit().ok().map(|l| l.x_prime);
            (t, m.n(), limit, None)
        }
        OpinionModel::Gossip(m) => {
            let seed = opts.seed.unwrap_or(DEFAULT_SEED);
            args.push("--seed".into());
            args.push(seed.to_string());
            let t = run_trajectory(m, &cfg, RngStream::new(seed, 0));
            let limit = m.fixed_point().ok();
            (t, m.n(), limit, Some(seed))
        }
    };
    let last = t.samples.last().expect("step K is always stored");
    writeln!(report, "steps: {steps}").unwrap();
    writeln!(report, "x(K) = {}", vec3(&last.x)).unwrap();
    writeln!(report, "xbar(K) = {}", vec3(&last.xbar)).unwrap();
    let deviation = limit
        .as_ref()
        .map(|l| crate::linalg::max_abs_diff(l, &last.xbar));
    if let (Some(l), Some(d)) = (&limit, deviation) {
        writeln!(report, "limit = {}", vec3(l)).unwrap();
        writeln!(report, "max |xbar(K) - limit| = {}", round3(d)).unwrap();
    }
    let mut manifest = ctx.manifest("simulate", loaded.model.kind().as_str(), args);
    manifest.seed = seed;
    manifest.steps = Some(steps);
    manifest.checkpoints = Some(checkpoints);
    let results = ResultsFile {
        manifest,
        summary: json!({
            "kind": loaded.model.kind().as_str(),
            "limit": limit,
            "final_xbar_max_deviation": deviation,
            "visited_min": t.visited_min,
            "visited_max": t.visited_max,
            "stored_stride": t.samples.get(1).map(|s| s.step),
        }),
        table: trajectory_table(&t, n),
    };
    Ok(CommandOutput {
        report,
        warnings: loaded.warnings,
        artifact: Some(ctx.artifact("simulate", &results)),
        exit_code: 0,
    })
}

/// Mean-square error of time averages across independent replicates.
pub fn ensemble(ctx: &RunContext, opts: &EnsembleOptions) -> Result<CommandOutput, IoError> {
    let loaded = ctx.load()?;
    let OpinionModel::Gossip(model) = &loaded.model else {
        return Err(IoError::Validation(
            "ensemble expects a gossip model; run map on fj models first".into(),
        ));
    };
    let steps = opts.steps.unwrap_or(DEFAULT_ENSEMBLE_STEPS);
    let replicates = opts.replicates.unwrap_or(DEFAULT_REPLICATES);
    let seed = opts.seed.unwrap_or(DEFAULT_SEED);
    let checkpoints = opts
        .checkpoints
        .clone()
        .unwrap_or_else(|| decade_checkpoints(steps));
    let stats = run_ensemble(
        model,
        &EnsembleConfig {
            steps,
            replicates,
            base_seed: seed,
            checkpoints: checkpoints.clone(),
        },
    )?;
    let mut args = vec![
        "--steps".to_string(),
        steps.to_string(),
        "--replicates".into(),
        replicates.to_string(),
        "--seed".into(),
        seed.to_string(),
    ];
    if opts.checkpoints.is_some() {
        args.push("--checkpoints".into());
        args.push(join_u64(&checkpoints));
    }
    let mut report = String::new();
    writeln!(report, "x* = {}", vec3(&stats.x_star)).unwrap();
    writeln!(report, "spectral radius of Abar: {}", round3(stats.rho)).unwrap();
    for (k, m) in stats.checkpoints.iter().zip(&stats.mse) {
        writeln!(report, "k = {k:>10}  mse = {m:.6e}").unwrap();
    }
    match stats.decay_fit {
        Some(f) => writeln!(
            report,
            "decay fit: mse ~ {:.3e} / k^{:.3} ({} points)",
            f.constant, f.exponent, f.points
        )
        .unwrap(),
        None => writeln!(report, "decay fit: not enough positive checkpoints").unwrap(),
    }
    let mut manifest = ctx.manifest("ensemble", "gossip", args);
    manifest.seed = Some(seed);
    manifest.steps = Some(steps);
    manifest.replicates = Some(replicates);
    manifest.checkpoints = Some(stats.checkpoints.clone());
    let rows = stats
        .checkpoints
        .iter()
        .zip(&stats.mse)
        .map(|(&k, &m)| vec![Cell::Int(k), Cell::Num(m), Cell::Int(replicates)])
        .collect();
    let results = ResultsFile {
        manifest,
        summary: json!({
            "x_star": stats.x_star,
            "spectral_radius": stats.rho,
            "decay_exponent": stats.decay_fit.map(|f| f.exponent),
            "decay_constant": stats.decay_fit.map(|f| f.constant),
            "decay_points": stats.decay_fit.map(|f| f.points),
            "visited_min": stats.visited_min,
            "visited_max": stats.visited_max,
        }),
        table: Table {
            columns: vec!["checkpoint".into(), "mse".into(), "replicates".into()],
            rows,
        },
    };
    Ok(CommandOutput {
        report,
        warnings: loaded.warnings,
        artifact: Some(ctx.artifact("ensemble", &results)),
        exit_code: 0,
    })
}
