//! Batch front-end: configuration parsing, the four subcommands, and
//! output management. Config files use JSON with a flat flag-override
//! layer; unknown keys are rejected. Every output file is fully
//! determined by (config, seed, code version).

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::diagnostics::{diagnostics, mf_residual, multipliers};
use crate::dynamics::{
    run_trajectory_on, Advection, FlowKind, Scheme, StepConfig, Stepper,
};
use crate::error::{Error, Result};
use crate::field::{self, VorticityField};
use crate::grid::Grid;
use crate::io;
use crate::meanfield;
use crate::particles::{self, SdeOptions, VortexScheme};
use crate::spectral::SpectralOps;
use crate::stream::StreamSolver;

// ---------------------------------------------------------------------
// configuration types
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_l")]
    pub l: f64,
    #[serde(default = "default_n")]
    pub n: usize,
}

fn default_l() -> f64 {
    12.0
}
fn default_n() -> usize {
    256
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            l: default_l(),
            n: default_n(),
        }
    }
}

impl GridConfig {
    pub fn build(&self) -> Result<Grid> {
        Grid::new(self.l, self.n)
    }
}

/// Named initial-condition families (plus snapshot restart).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "family", rename_all = "kebab-case")]
pub enum InitialCondition {
    Gaussian { i: f64 },
    Oseen { t: f64 },
    Ring { r0: f64, width: f64 },
    TwoBlob { separation: f64 },
    RandomSmooth { seed: u64 },
    Snapshot { path: PathBuf },
}

impl Default for InitialCondition {
    fn default() -> Self {
        InitialCondition::Ring {
            r0: 3.0,
            width: 0.5,
        }
    }
}

impl InitialCondition {
    pub fn build(&self, grid: Grid) -> Result<VorticityField> {
        let f = match self {
            InitialCondition::Gaussian { i } => field::gaussian(grid, *i)?,
            InitialCondition::Oseen { t } => field::oseen(grid, *t)?,
            InitialCondition::Ring { r0, width } => field::ring(grid, *r0, *width)?,
            InitialCondition::TwoBlob { separation } => field::two_blob(grid, *separation)?,
            InitialCondition::RandomSmooth { seed } => field::random_smooth(grid, *seed)?,
            InitialCondition::Snapshot { path } => {
                let (f, header) = io::read_snapshot(path)?;
                if header.n != grid.n() || (header.l - grid.half_width()).abs() > 1e-12 {
                    return Err(Error::InvalidConfig(format!(
                        "snapshot grid ({}, {}) does not match configured grid ({}, {})",
                        header.l,
                        header.n,
                        grid.half_width(),
                        grid.n()
                    )));
                }
                f
            }
        };
        f.validate()?;
        Ok(f)
    }
}

/// Field-evolution run configuration (subcommand `run`).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_mode")]
    pub mode: FlowKind,
    #[serde(default)]
    pub initial: InitialCondition,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default = "default_nu")]
    pub nu: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_output_every")]
    pub output_every: usize,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    #[serde(default = "default_advection")]
    pub advection: Advection,
    /// Regularized-kernel width for mode = constrained-regularized
    /// (default: twice the grid spacing).
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Write a field snapshot every k-th record (0: first and last only).
    #[serde(default)]
    pub snapshot_every: usize,
}

fn default_mode() -> FlowKind {
    FlowKind::Constrained
}
fn default_nu() -> f64 {
    1e-2
}
fn default_dt() -> f64 {
    1e-2
}
fn default_t_end() -> f64 {
    1.0
}
fn default_output_every() -> usize {
    10
}
fn default_scheme() -> Scheme {
    Scheme::Projected
}
fn default_advection() -> Advection {
    Advection::Spectral
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("default run config")
    }
}

impl RunConfig {
    pub fn step_config(&self) -> StepConfig {
        StepConfig {
            nu: self.nu,
            dt: self.dt,
            scheme: self.scheme,
            advection: self.advection,
            t_end: self.t_end,
            output_every: self.output_every,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.build()?;
        self.step_config().validate()?;
        if let Some(d) = self.delta {
            if !(d > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "delta must be > 0, got {d}"
                )));
            }
        }
        Ok(())
    }
}

/// Mean-field solver configuration (subcommand `meanfield`).
///
/// Either a canonical table over `a_list x b_list`, or a microcanonical
/// solve when both `e` and `i` are given.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct MeanfieldConfig {
    #[serde(default)]
    pub a_list: Vec<f64>,
    #[serde(default)]
    pub b_list: Vec<f64>,
    #[serde(default)]
    pub e: Option<f64>,
    #[serde(default)]
    pub i: Option<f64>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

impl MeanfieldConfig {
    pub fn validate(&self) -> Result<()> {
        for &a in &self.a_list {
            if !(a < 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "canonical table needs a < 0, got {a}"
                )));
            }
        }
        for &b in &self.b_list {
            if b >= meanfield::B_MAX {
                return Err(Error::InvalidConfig(format!(
                    "b = {b} rejected: the admissible range is b < 8*pi = {:.6}",
                    meanfield::B_MAX
                )));
            }
        }
        if self.e.is_some() != self.i.is_some() {
            return Err(Error::InvalidConfig(
                "microcanonical mode needs both e and i".into(),
            ));
        }
        if let Some(i) = self.i {
            if !(i > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "microcanonical target needs i > 0, got {i}"
                )));
            }
        }
        if self.e.is_none() && (self.a_list.is_empty() || self.b_list.is_empty()) {
            return Err(Error::InvalidConfig(
                "nothing to do: give a_list and b_list, or e and i".into(),
            ));
        }
        Ok(())
    }
}

/// Vortex-ensemble run configuration (subcommand `particles`).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticlesConfig {
    #[serde(default = "default_n_particles")]
    pub n_particles: usize,
    /// Kernel regularization (default: twice the grid spacing).
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default = "default_particle_dt")]
    pub dt: f64,
    #[serde(default = "default_particle_t_end")]
    pub t_end: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_vortex_scheme")]
    pub scheme: String,
    #[serde(default = "default_particle_initial")]
    pub initial: InitialCondition,
    #[serde(default)]
    pub grid: GridConfig,
    /// Deposition bandwidth (default: the grid spacing).
    #[serde(default)]
    pub bandwidth: Option<f64>,
    #[serde(default = "default_output_every")]
    pub output_every: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_n_particles() -> usize {
    1000
}
fn default_particle_dt() -> f64 {
    1e-3
}
fn default_particle_t_end() -> f64 {
    0.5
}
fn default_vortex_scheme() -> String {
    "essential".into()
}
fn default_particle_initial() -> InitialCondition {
    InitialCondition::Gaussian { i: 2.0 }
}

impl Default for ParticlesConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("default particles config")
    }
}

impl ParticlesConfig {
    pub fn vortex_scheme(&self) -> Result<VortexScheme> {
        match self.scheme.as_str() {
            "plain" => Ok(VortexScheme::Plain),
            "essential" => Ok(VortexScheme::Essential),
            "projected" => Ok(VortexScheme::Projected),
            other => Err(Error::InvalidConfig(format!(
                "unknown particle scheme {other:?}; expected plain, essential or projected"
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let grid = self.grid.build()?;
        if self.n_particles < 2 {
            return Err(Error::InvalidConfig(format!(
                "n_particles must be >= 2, got {}",
                self.n_particles
            )));
        }
        if !(self.dt > 0.0) {
            return Err(Error::InvalidConfig(format!("dt must be > 0, got {}", self.dt)));
        }
        if self.t_end < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "t_end must be >= 0, got {}",
                self.t_end
            )));
        }
        if self.output_every == 0 {
            return Err(Error::InvalidConfig("output_every must be >= 1".into()));
        }
        for v in [self.delta, self.bandwidth].into_iter().flatten() {
            if !(v > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "length parameters must be > 0, got {v}"
                )));
            }
        }
        let _ = grid;
        self.vortex_scheme()?;
        Ok(())
    }
}

// ---------------------------------------------------------------------
// config loading with flag overrides
// ---------------------------------------------------------------------

/// Load a JSON config (or `{}` when absent); unknown keys are rejected
/// with the offending key named.
pub fn parse_config<T: for<'de> Deserialize<'de>>(path: Option<&Path>) -> Result<T> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p)?,
        None => "{}".to_string(),
    };
    let value: T = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidConfig(format!("config error: {e}")))?;
    Ok(value)
}

fn parse_enum_flag<T: for<'de> Deserialize<'de>>(name: &str, raw: &str) -> Result<T> {
    serde_json::from_value(serde_json::Value::String(raw.to_string()))
        .map_err(|e| Error::InvalidConfig(format!("invalid {name} {raw:?}: {e}")))
}

fn parse_initial_flag(raw: &str) -> Result<InitialCondition> {
    serde_json::from_str(raw)
        .map_err(|e| Error::InvalidConfig(format!("invalid initial condition {raw:?}: {e}")))
}

// ---------------------------------------------------------------------
// command-line surface
// ---------------------------------------------------------------------

#[derive(Parser)]
#[command(
    name = "vorlab",
    version,
    about = "Laboratory for energy- and inertia-conserving 2-D vorticity dynamics"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Integrate one of the field equations and record diagnostics.
    Run(RunArgs),
    /// Solve mean-field states: canonical table or microcanonical target.
    Meanfield(MeanfieldArgs),
    /// Integrate a stochastic vortex ensemble.
    Particles(ParticlesArgs),
    /// Print the scalar functionals of a stored field snapshot.
    Diagnose(DiagnoseArgs),
}

#[derive(Args)]
pub struct RunArgs {
    /// JSON config file; flags below override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub mode: Option<String>,
    /// Inline JSON initial condition, e.g. '{"family":"ring","r0":3.0,"width":0.5}'.
    #[arg(long)]
    pub initial: Option<String>,
    #[arg(long)]
    pub l: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub output_every: Option<usize>,
    #[arg(long)]
    pub scheme: Option<String>,
    #[arg(long)]
    pub advection: Option<String>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    #[arg(long)]
    pub snapshot_every: Option<usize>,
}

impl RunArgs {
    pub fn into_config(self) -> Result<RunConfig> {
        let mut cfg: RunConfig = parse_config(self.config.as_deref())?;
        if let Some(m) = self.mode {
            cfg.mode = parse_enum_flag("mode", &m)?;
        }
        if let Some(i) = self.initial {
            cfg.initial = parse_initial_flag(&i)?;
        }
        if let Some(l) = self.l {
            cfg.grid.l = l;
        }
        if let Some(n) = self.n {
            cfg.grid.n = n;
        }
        if let Some(v) = self.nu {
            cfg.nu = v;
        }
        if let Some(v) = self.dt {
            cfg.dt = v;
        }
        if let Some(v) = self.t_end {
            cfg.t_end = v;
        }
        if let Some(v) = self.output_every {
            cfg.output_every = v;
        }
        if let Some(s) = self.scheme {
            cfg.scheme = parse_enum_flag("scheme", &s)?;
        }
        if let Some(s) = self.advection {
            cfg.advection = parse_enum_flag("advection", &s)?;
        }
        if let Some(v) = self.delta {
            cfg.delta = Some(v);
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.output_dir {
            cfg.output_dir = v;
        }
        if let Some(v) = self.snapshot_every {
            cfg.snapshot_every = v;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
pub struct MeanfieldArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated multiplier lists, e.g. --a-list=-0.5,-0.4
    #[arg(long, allow_hyphen_values = true)]
    pub a_list: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub b_list: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub e: Option<f64>,
    #[arg(long)]
    pub i: Option<f64>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

fn parse_list(name: &str, raw: &str) -> Result<Vec<f64>> {
    raw.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::InvalidConfig(format!("invalid {name} entry {s:?}: {e}")))
        })
        .collect()
}

impl MeanfieldArgs {
    pub fn into_config(self) -> Result<MeanfieldConfig> {
        let mut cfg: MeanfieldConfig = parse_config(self.config.as_deref())?;
        if let Some(s) = self.a_list {
            cfg.a_list = parse_list("a_list", &s)?;
        }
        if let Some(s) = self.b_list {
            cfg.b_list = parse_list("b_list", &s)?;
        }
        if let Some(v) = self.e {
            cfg.e = Some(v);
        }
        if let Some(v) = self.i {
            cfg.i = Some(v);
        }
        if let Some(v) = self.output_dir {
            cfg.output_dir = v;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
pub struct ParticlesArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n_particles: Option<usize>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub scheme: Option<String>,
    #[arg(long)]
    pub initial: Option<String>,
    #[arg(long)]
    pub l: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub bandwidth: Option<f64>,
    #[arg(long)]
    pub output_every: Option<usize>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

impl ParticlesArgs {
    pub fn into_config(self) -> Result<ParticlesConfig> {
        let mut cfg: ParticlesConfig = parse_config(self.config.as_deref())?;
        if let Some(v) = self.n_particles {
            cfg.n_particles = v;
        }
        if let Some(v) = self.delta {
            cfg.delta = Some(v);
        }
        if let Some(v) = self.dt {
            cfg.dt = v;
        }
        if let Some(v) = self.t_end {
            cfg.t_end = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(s) = self.scheme {
            cfg.scheme = s;
        }
        if let Some(i) = self.initial {
            cfg.initial = parse_initial_flag(&i)?;
        }
        if let Some(l) = self.l {
            cfg.grid.l = l;
        }
        if let Some(n) = self.n {
            cfg.grid.n = n;
        }
        if let Some(v) = self.bandwidth {
            cfg.bandwidth = Some(v);
        }
        if let Some(v) = self.output_every {
            cfg.output_every = v;
        }
        if let Some(v) = self.output_dir {
            cfg.output_dir = v;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
pub struct DiagnoseArgs {
    /// Field snapshot to analyze.
    #[arg(long)]
    pub snapshot: PathBuf,
}

// ---------------------------------------------------------------------
// commands
// ---------------------------------------------------------------------

fn write_manifest<T: Serialize>(dir: &Path, command: &str, cfg: &T) -> Result<()> {
    #[derive(Serialize)]
    struct Manifest<'a, T> {
        command: &'a str,
        version: &'a str,
        config: &'a T,
    }
    let manifest = Manifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
    };
    let text = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(dir.join("manifest.json"), text + "\n")?;
    Ok(())
}

/// Integrate a field equation, writing diagnostics.csv, snapshots and the
/// run manifest into the output directory.
pub fn cmd_run(cfg: &RunConfig) -> Result<()> {
    cfg.validate()?;
    let grid = cfg.grid.build()?;
    let omega0 = cfg.initial.build(grid)?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    write_manifest(&cfg.output_dir, "run", cfg)?;

    let stepper = match cfg.mode {
        FlowKind::ConstrainedRegularized => {
            let delta = cfg.delta.unwrap_or(2.0 * grid.spacing());
            Stepper::regularized(grid, delta)
        }
        _ => Stepper::new(grid),
    };

    let step_cfg = cfg.step_config();
    let total_records = (cfg.t_end / cfg.dt).round() as usize / cfg.output_every + 1;
    let mut record_idx = 0usize;
    let mut observer = |f: &VorticityField, s: &crate::dynamics::TrajectorySample| {
        let want = if cfg.snapshot_every == 0 {
            record_idx == 0 || record_idx + 1 >= total_records
        } else {
            record_idx % cfg.snapshot_every == 0 || record_idx + 1 >= total_records
        };
        if want {
            let path = cfg.output_dir.join(format!("snapshot_{record_idx:06}.snap"));
            // IO errors inside the observer surface at the diagnostics write
            let _ = io::write_snapshot(&path, f, s.t, &s.diag);
        }
        record_idx += 1;
    };
    let record = run_trajectory_on(&stepper, &omega0, &step_cfg, cfg.mode, &mut observer)?;
    io::write_diagnostics_csv(&cfg.output_dir.join("diagnostics.csv"), &record)?;

    let last = record.samples.last().expect("at least the initial record");
    eprintln!(
        "run finished: t = {}, E = {:.6e}, I = {:.6e}, S = {:.6e}, min omega seen = {:.3e}",
        last.t, last.diag.e, last.diag.i, last.diag.s, record.min_value_seen
    );
    Ok(())
}

/// Canonical table and/or microcanonical solve.
pub fn cmd_meanfield(cfg: &MeanfieldConfig) -> Result<()> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    write_manifest(&cfg.output_dir, "meanfield", cfg)?;

    if !cfg.a_list.is_empty() && !cfg.b_list.is_empty() {
        let table = meanfield::canonical_table(&cfg.a_list, &cfg.b_list)?;
        io::write_thermo_csv(&cfg.output_dir.join("thermo.csv"), &table.points)?;
        println!(
            "canonical table: {} states; concavity: max supporting-plane violation \
             {:.3e}, max Hessian eigenvalue {}; identities: |dF/da + I| <= {:.3e} rel, \
             |dF/db + E| <= {:.3e} rel",
            table.points.len(),
            table.checks.max_plane_violation,
            table
                .checks
                .max_hessian_eigenvalue
                .map_or("n/a".to_string(), |v| format!("{v:.3e}")),
            table.checks.max_da_identity_err,
            table.checks.max_db_identity_err,
        );
    }

    if let (Some(e), Some(i)) = (cfg.e, cfg.i) {
        let st = meanfield::microcanonical_state(e, i)?;
        io::write_radial_state(&cfg.output_dir.join("microcanonical.csv"), &st)?;
        println!(
            "microcanonical state: a = {:.8}, b = {:.8}, E = {:.8e}, I = {:.8e}, S = {:.8e}",
            st.a, st.b, st.e, st.i, st.s
        );
    }
    Ok(())
}

/// Integrate a vortex ensemble, writing the statistics CSV plus initial,
/// final and deposited-density files.
pub fn cmd_particles(cfg: &ParticlesConfig) -> Result<()> {
    cfg.validate()?;
    let grid = cfg.grid.build()?;
    let scheme = cfg.vortex_scheme()?;
    let delta = cfg.delta.unwrap_or(2.0 * grid.spacing());
    let bandwidth = cfg.bandwidth.unwrap_or(grid.spacing());
    std::fs::create_dir_all(&cfg.output_dir)?;
    write_manifest(&cfg.output_dir, "particles", cfg)?;

    let omega0 = cfg.initial.build(grid)?;
    let mut ensemble = particles::init_ensemble(&omega0, cfg.n_particles, delta, cfg.seed)?;
    io::write_ensemble(&cfg.output_dir.join("ensemble_initial.csv"), &ensemble, 0.0)?;

    use std::io::Write;
    let stats_path = cfg.output_dir.join("stats.csv");
    let mut stats = std::io::BufWriter::new(std::fs::File::create(&stats_path)?);
    writeln!(stats, "{}", io::PARTICLE_CSV_HEADER)?;
    let emit = |stats: &mut std::io::BufWriter<std::fs::File>,
                    e: &particles::VortexEnsemble,
                    t: f64|
     -> Result<()> {
        let h = particles::hamiltonian_n(e);
        let b = particles::b_n(e)?;
        writeln!(
            stats,
            "{}",
            io::particle_csv_row(t, h, b, e.inertia(), e.energy_estimate())
        )?;
        Ok(())
    };

    emit(&mut stats, &ensemble, 0.0)?;
    let n_steps = (cfg.t_end / cfg.dt).round() as usize;
    for step in 1..=n_steps {
        particles::step_ensemble(&mut ensemble, cfg.dt, scheme, SdeOptions::default())
            .map_err(|e| e.at_time(step as f64 * cfg.dt))?;
        if step % cfg.output_every == 0 || step == n_steps {
            emit(&mut stats, &ensemble, step as f64 * cfg.dt)?;
        }
    }
    stats.flush()?;

    io::write_ensemble(
        &cfg.output_dir.join("ensemble_final.csv"),
        &ensemble,
        n_steps as f64 * cfg.dt,
    )?;
    let deposited = particles::deposit_density(&ensemble, grid, bandwidth)?;
    let solver = StreamSolver::new(grid);
    let sv = solver.solve(&deposited)?;
    let d = diagnostics(&deposited, &sv);
    io::write_snapshot(
        &cfg.output_dir.join("deposited.snap"),
        &deposited,
        n_steps as f64 * cfg.dt,
        &d,
    )?;
    eprintln!(
        "particles finished: N = {}, H = {:.6e}, I_emp = {:.6e}",
        ensemble.len(),
        particles::hamiltonian_n(&ensemble),
        ensemble.inertia()
    );
    Ok(())
}

/// Print the seven functionals plus multipliers and residual of a snapshot.
pub fn cmd_diagnose(args: &DiagnoseArgs) -> Result<()> {
    let (field, header) = io::read_snapshot(&args.snapshot)?;
    let solver = StreamSolver::new(*field.grid());
    let sv = solver.solve(&field)?;
    let d = diagnostics(&field, &sv);
    let m = multipliers(&d)?;
    let ops = SpectralOps::new(field.grid());
    let residual = mf_residual(&field, &sv, &m, &ops);

    #[derive(Serialize)]
    struct Report {
        time: f64,
        mx: f64,
        my: f64,
        e: f64,
        i: f64,
        s: f64,
        z2: f64,
        k: f64,
        v: f64,
        a: f64,
        b: f64,
        residual: f64,
    }
    let report = Report {
        time: header.time,
        mx: d.m[0],
        my: d.m[1],
        e: d.e,
        i: d.i,
        s: d.s,
        z2: d.z2,
        k: d.k,
        v: d.v,
        a: m.a,
        b: m.b,
        residual,
    };
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

/// Entry point used by the binary.
pub fn main() {
    if let Ok(raw) = std::env::var("VORLAB_THREADS") {
        match raw.parse::<usize>() {
            Ok(n) if n >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("warning: VORLAB_THREADS must be a positive integer, got {raw:?}");
            }
        }
    }
    let cli = Cli::parse();
    let started = Instant::now();
    let result = match cli.command {
        Command::Run(args) => args.into_config().and_then(|c| cmd_run(&c)),
        Command::Meanfield(args) => args.into_config().and_then(|c| cmd_meanfield(&c)),
        Command::Particles(args) => args.into_config().and_then(|c| cmd_particles(&c)),
        Command::Diagnose(args) => cmd_diagnose(&args),
    };
    match result {
        Ok(()) => {
            eprintln!("wall time: {:.3} s", started.elapsed().as_secs_f64());
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    }
}
