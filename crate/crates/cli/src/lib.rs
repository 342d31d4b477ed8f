//! `rigidity` command-line front end.
//!
//! Every subcommand reads an optional JSON configuration, applies the flag
//! overrides (flags win over `RIGIDITY_SEED`, which wins over the file),
//! writes its outputs under `--out` and exits with
//! 0 (pass), 1 (a check failed), 2 (bad configuration) or 3 (degenerate
//! scenario).

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rigidity_core::experiments::{
    run_asymptotic, run_multiscale, run_rigidity_on, run_scaling, AsymptoticConfig, MultiscaleConfig, ScalingConfig,
};
use rigidity_core::immersion::{energies, DiffScheme, Measure};
use rigidity_core::io::{
    csv_string, gnuplot_string, read_text, to_json_pretty, unix_now, write_text, CheckResult, CsvRow, FieldSnapshot,
    RunManifest,
};
use rigidity_core::lemmas::{run_lemma_suite, LemmaConfig};
use rigidity_core::rigidity::local_rigidity;
use rigidity_core::scenario::{scenario_generate, ScenarioField, ScenarioSpec};
use rigidity_core::RigidityError;
use serde::de::DeserializeOwned;
use serde::Serialize;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;

/// Isometry constraint tolerance for fitted maps.
const CONSTRAINT_TOL: f64 = 1e-10;
/// Largest accepted relative change of `lhs` when the resolution doubles.
const RESOLUTION_TOL: f64 = 0.05;

#[derive(Debug, Parser)]
#[command(name = "rigidity", version, about = "Rigidity experiments for immersions with prescribed metric")]
pub struct Cli {
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Record wall-clock timestamps in the manifest (outputs are then no
    /// longer byte-identical across reruns).
    #[arg(long, global = true)]
    pub timestamps: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sampled property suite for the linear-algebra and immersion lemmas.
    Lemmas(Overrides),
    /// Rigidity fit of one scenario.
    Rigidity(Overrides),
    /// Sweep over epsilon (and optionally resolution).
    Scaling(Overrides),
    /// Multiscale rotation fields and translation moduli.
    Multiscale(Overrides),
    /// Epsilon sequence of the perturbation family.
    Asymptotic(Overrides),
    /// Write or read an immersion snapshot.
    #[command(subcommand)]
    Snapshot(SnapshotCommand),
}

#[derive(Debug, Subcommand)]
pub enum SnapshotCommand {
    /// Generate a scenario and store its immersion and metric.
    Write {
        #[command(flatten)]
        overrides: Overrides,
        /// File name inside the output directory.
        #[arg(long, default_value = "snapshot.json")]
        name: String,
    },
    /// Load a snapshot and report its energies and rigidity fit.
    Read {
        /// Snapshot file.
        file: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, value_enum, default_value = "forward")]
        scheme: SchemeArg,
    },
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum SchemeArg {
    Forward,
    Central,
}

impl From<SchemeArg> for DiffScheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Forward => DiffScheme::Forward,
            SchemeArg::Central => DiffScheme::Central,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// JSON configuration file.
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    /// Integration exponent.
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long, env = "RIGIDITY_SEED")]
    pub seed: Option<u64>,
    /// Grid resolution.
    #[arg(long)]
    pub n: Option<usize>,
    /// Perturbation size; a comma-separated list for sweeps and schedules.
    #[arg(long, value_delimiter = ',')]
    pub eps: Option<Vec<f64>>,
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Degenerate(String),
}

impl From<RigidityError> for Failure {
    fn from(e: RigidityError) -> Self {
        match e {
            RigidityError::Degenerate(_) => Failure::Degenerate(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

type Outcome = Result<bool, Failure>;

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    manifest: &'a RunManifest,
    report: &'a T,
}

struct Session<'a> {
    cli: &'a Cli,
    manifest: RunManifest,
}

impl<'a> Session<'a> {
    fn new(cli: &'a Cli, command: &str, seed: u64, spec: &impl Serialize) -> Result<Self, Failure> {
        let spec = serde_json::to_value(spec).map_err(|e| Failure::Config(e.to_string()))?;
        let mut manifest = RunManifest::new(command, seed, spec);
        manifest.tool = "rigidity".into();
        if cli.timestamps {
            manifest.started_at = Some(unix_now());
        }
        Ok(Self { cli, manifest })
    }

    fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.manifest.push_check(CheckResult::new(name, passed, detail));
    }

    fn extend_checks(&mut self, checks: &[CheckResult]) {
        for c in checks {
            self.manifest.push_check(c.clone());
        }
    }

    fn write(&mut self, name: &str, text: &str) -> Result<(), Failure> {
        write_text(&self.cli.out.join(name), text)?;
        self.manifest.outputs.push(name.to_string());
        Ok(())
    }

    fn csv(&mut self, name: &str, rows: &[CsvRow]) -> Result<(), Failure> {
        let text = csv_string(rows)?;
        self.write(name, &text)
    }

    /// Writes `<name>.json` holding the manifest and the report, prints the
    /// check summary and returns whether every check passed.
    fn finish<T: Serialize>(mut self, name: &str, report: &T) -> Outcome {
        let file = format!("{name}.json");
        self.manifest.outputs.push(file.clone());
        if self.cli.timestamps {
            self.manifest.finished_at = Some(unix_now());
        }
        let text = to_json_pretty(&Envelope { manifest: &self.manifest, report })?;
        write_text(&self.cli.out.join(&file), &text)?;
        for c in &self.manifest.checks {
            println!("check {}: {} ({})", c.name, if c.passed { "pass" } else { "FAIL" }, c.detail);
        }
        println!("wrote {}", self.cli.out.join(&file).display());
        Ok(self.manifest.all_passed())
    }
}

pub fn run(cli: &Cli) -> i32 {
    let outcome = match &cli.command {
        Command::Lemmas(o) => cmd_lemmas(cli, o),
        Command::Rigidity(o) => cmd_rigidity(cli, o),
        Command::Scaling(o) => cmd_scaling(cli, o),
        Command::Multiscale(o) => cmd_multiscale(cli, o),
        Command::Asymptotic(o) => cmd_asymptotic(cli, o),
        Command::Snapshot(SnapshotCommand::Write { overrides, name }) => cmd_snapshot_write(cli, overrides, name),
        Command::Snapshot(SnapshotCommand::Read { file, p, scheme }) => {
            cmd_snapshot_read(cli, file, *p, (*scheme).into())
        }
    };
    match outcome {
        Ok(true) => EXIT_PASS,
        Ok(false) => EXIT_CHECK_FAILED,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            EXIT_CONFIG
        }
        Err(Failure::Degenerate(msg)) => {
            eprintln!("error: {msg}");
            EXIT_DEGENERATE
        }
    }
}

fn load<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn load_or_default<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, Failure> {
    path.map_or_else(|| Ok(T::default()), load)
}

fn require<T: DeserializeOwned>(o: &Overrides, what: &str) -> Result<T, Failure> {
    let path = o.config.as_deref().ok_or_else(|| Failure::Config(format!("{what} needs --config <file>")))?;
    load(path)
}

fn single_eps(o: &Overrides) -> Result<Option<f64>, Failure> {
    match o.eps.as_deref() {
        None => Ok(None),
        Some([e]) => Ok(Some(*e)),
        Some(_) => Err(Failure::Config("this command takes a single --eps value".into())),
    }
}

/// Applies `--p`, `--seed`, `--n` to a scenario.
fn apply(spec: ScenarioSpec, o: &Overrides) -> Result<ScenarioSpec, Failure> {
    let mut spec = spec;
    if let Some(p) = o.p {
        spec = spec.with_p(p);
    }
    if let Some(seed) = o.seed {
        spec = spec.with_seed(seed);
    }
    if let Some(n) = o.n {
        spec = spec.with_resolution(n)?;
    }
    Ok(spec)
}

fn cmd_lemmas(cli: &Cli, o: &Overrides) -> Outcome {
    let mut cfg: LemmaConfig = load_or_default(o.config.as_deref())?;
    if let Some(seed) = o.seed {
        cfg.seed = seed;
    }
    if o.p.is_some() || o.n.is_some() || o.eps.is_some() {
        return Err(Failure::Config("lemmas accepts only --config and --seed".into()));
    }
    let report = run_lemma_suite(&cfg)?;
    let mut session = Session::new(cli, "lemmas", cfg.seed, &cfg)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    for p in &report.properties {
        let slack = p.min_slack.map_or("none".to_string(), |s| format!("{s:.3e}"));
        session.check(
            &p.name,
            p.passed,
            format!("{} samples, min slack {slack}, tolerance {:e}", p.samples, p.tolerance),
        );
    }
    for (d, s) in &report.orientation_stability {
        println!(
            "orientation stability d = {d}, threshold {:.4}: {}/{} preserved",
            s.threshold, s.preserved, s.samples
        );
    }
    session.finish("lemmas", &report)
}

fn cmd_rigidity(cli: &Cli, o: &Overrides) -> Outcome {
    let mut spec = apply(require::<ScenarioSpec>(o, "rigidity")?, o)?;
    if let Some(eps) = single_eps(o)? {
        spec = spec.with_epsilon(eps)?;
    }
    let scenario = scenario_generate(&spec)?;
    let run = run_rigidity_on(&scenario)?;
    let mut session = Session::new(cli, "rigidity", spec.seed, &spec)?;
    let r = run.primary();
    println!(
        "lhs {:.6e}  rhs: osc {:.6e} stretch {:.6e} bend {:.6e}  constant {:.6e}",
        r.lhs, r.rhs.osc_term, r.rhs.stretch, r.rhs.bend_scale, r.empirical_constant
    );
    if let Some(pv) = r.plane_variation {
        println!("plane variation {pv:.6e}");
    }
    session.check(
        "fitted_map_constraint",
        r.constraint_defect <= CONSTRAINT_TOL,
        format!("defect {:.3e}", r.constraint_defect),
    );
    session.csv("rigidity.csv", &[run.csv_row()])?;
    session.finish("rigidity", &run)
}

fn cmd_scaling(cli: &Cli, o: &Overrides) -> Outcome {
    let mut cfg: ScalingConfig = require(o, "scaling")?;
    cfg.scenario = apply(cfg.scenario, o)?;
    if let Some(eps) = &o.eps {
        cfg.epsilons = eps.clone();
    }
    let seed = cfg.scenario.seed;
    let report = run_scaling(&cfg)?;
    let mut session = Session::new(cli, "scaling", seed, &cfg)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    for ((n, slope), (_, spread)) in report.slope_vs_epsilon.iter().zip(&report.constant_spread) {
        let fmt = |v: &Option<f64>| v.map_or("undefined".to_string(), |x| format!("{x:.5}"));
        println!("n = {n}: slope of lhs^(1/p) vs epsilon {}, constant spread {}", fmt(slope), fmt(spread));
    }
    if let Some(change) = report.resolution_change {
        session.check(
            "resolution_stability",
            change < RESOLUTION_TOL,
            format!("largest relative lhs change {change:.3e} between resolutions"),
        );
    }
    session.csv("scaling.csv", &report.csv_rows())?;
    let dat = gnuplot_string(&["epsilon", "n", "lhs_norm", "stretch_norm", "constant"], &report.gnuplot_rows());
    session.write("scaling.dat", &dat)?;
    session.finish("scaling", &report)
}

fn cmd_multiscale(cli: &Cli, o: &Overrides) -> Outcome {
    let mut cfg: MultiscaleConfig = require(o, "multiscale")?;
    cfg.scenario = apply(cfg.scenario, o)?;
    if let Some(eps) = single_eps(o)? {
        cfg.scenario = cfg.scenario.with_epsilon(eps)?;
    }
    let report = run_multiscale(&cfg)?;
    let mut session = Session::new(cli, "multiscale", cfg.scenario.seed, &cfg)?;
    session.extend_checks(&report.checks);
    session.csv("multiscale.csv", &report.csv_rows())?;
    let rows: Vec<Vec<f64>> = report.residuals.iter().map(|&(t, r)| vec![t as f64, r]).collect();
    session.write("multiscale_residual.dat", &gnuplot_string(&["t", "residual"], &rows))?;
    let rows: Vec<Vec<f64>> = report
        .moduli
        .iter()
        .map(|m| {
            vec![
                m.t as f64,
                m.modulus.zeta.iter().map(|z| z * z).sum::<f64>().sqrt(),
                m.modulus.value,
                m.modulus.covered_fraction,
            ]
        })
        .collect();
    session.write("multiscale_modulus.dat", &gnuplot_string(&["t", "shift", "modulus", "covered_fraction"], &rows))?;
    session.finish("multiscale", &report)
}

fn cmd_asymptotic(cli: &Cli, o: &Overrides) -> Outcome {
    let mut cfg: AsymptoticConfig = require(o, "asymptotic")?;
    cfg.scenario = apply(cfg.scenario, o)?;
    if let Some(eps) = &o.eps {
        cfg.epsilons = eps.clone();
    }
    let report = run_asymptotic(&cfg)?;
    let mut session = Session::new(cli, "asymptotic", cfg.scenario.seed, &cfg)?;
    let seq = &report.sequence;
    println!("final isometry defect {:.6e}, final S-recovery error {:.6e}", seq.final_defect, seq.final_shape_error);
    if let Some(j) = &report.joint {
        println!(
            "joint refinement: error {:.6e} at (n = {}, eps = {:e}) -> {:.6e} at (n = {}, eps = {:e}), ratio {:.4}",
            j.coarse.2, j.coarse.0, j.coarse.1, j.fine.2, j.fine.0, j.fine.1, j.ratio
        );
    }
    session.extend_checks(&report.checks);
    session.csv("asymptotic.csv", &report.csv_rows())?;
    let rows: Vec<Vec<f64>> = seq
        .members
        .iter()
        .map(|m| vec![m.epsilon, m.energies.stretch, m.energies.bend, m.gap_to_final, m.defect, m.shape_error])
        .collect();
    let dat = gnuplot_string(&["epsilon", "stretch", "bend", "gap_to_final", "defect", "shape_error"], &rows);
    session.write("asymptotic.dat", &dat)?;
    session.finish("asymptotic", &report)
}

fn cmd_snapshot_write(cli: &Cli, o: &Overrides, name: &str) -> Outcome {
    let mut spec = apply(require::<ScenarioSpec>(o, "snapshot write")?, o)?;
    if let Some(eps) = single_eps(o)? {
        spec = spec.with_epsilon(eps)?;
    }
    let scenario = scenario_generate(&spec)?;
    let ScenarioField::Immersion(u) = &scenario.field else {
        return Err(Failure::Config("snapshots store immersions; this scenario is equidimensional".into()));
    };
    let snapshot = FieldSnapshot::capture(u, &scenario.metric)?;
    write_text(&cli.out.join(name), &snapshot.to_json()?)?;
    println!("wrote {}", cli.out.join(name).display());
    Ok(true)
}

#[derive(Serialize)]
struct SnapshotSummary {
    grid: rigidity_core::immersion::GridDomain,
    target: rigidity_core::immersion::TargetSpec,
    lambda: f64,
    lipschitz: f64,
    degenerate_cells: usize,
    energies: rigidity_core::immersion::EnergyReport,
    rigidity: rigidity_core::rigidity::RigidityReport,
}

fn cmd_snapshot_read(cli: &Cli, file: &Path, p: f64, scheme: DiffScheme) -> Outcome {
    let snapshot = FieldSnapshot::from_json(&read_text(file)?)?;
    let (u, g) = snapshot.restore(scheme)?;
    let e = energies(&u, &g, None, p, Measure::Riemannian)?;
    if e.degenerate_cells == e.cells {
        return Err(Failure::Degenerate("every cell of the snapshot is degenerate".into()));
    }
    let report = local_rigidity(&u, &g, p)?;
    let mut session = Session::new(cli, "snapshot read", 0, &file.display().to_string())?;
    println!(
        "grid d = {} n = {}, lambda {:.4}, E_s {:.6e}, E_b {:.6e}, lhs {:.6e}, constant {:.6e}",
        u.grid().d,
        u.grid().n,
        g.lambda(),
        e.stretch,
        e.bend,
        report.lhs,
        report.empirical_constant
    );
    session.check(
        "fitted_map_constraint",
        report.constraint_defect <= CONSTRAINT_TOL,
        format!("defect {:.3e}", report.constraint_defect),
    );
    let summary = SnapshotSummary {
        grid: *u.grid(),
        target: snapshot.target,
        lambda: g.lambda(),
        lipschitz: g.lipschitz(),
        degenerate_cells: u.degenerate_count(),
        energies: e,
        rigidity: report,
    };
    session.finish("snapshot_report", &summary)
}
