//! Command-line front end: config loading, ensemble runs, persistence and
//! run manifests.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, bail, Context};
use cavsim::csv::{Table, VERSION};
use cavsim::ensemble::{run_ensemble, EnsembleOptions, EnsembleResult, SnapshotPolicy};
use cavsim::observables::{
    excess_kurtosis, fit_alpha, kurtosis_std_error, msd, theta_histogram, PositionTrace, DEFAULT_THETA_BINS,
};
use cavsim::oracle::{compare, sample_equilibrium, McmcConfig, DEFAULT_DISTANCE_BOUND};
use cavsim::params::threshold_nbar;
use cavsim::spectral::{g1, g2, spectrum, Window};
use cavsim::{parse_config, render_config, Checkpoint, SampleMode, SimConfig};
use clap::{Args, Parser, Subcommand};
use serde_json::json;
use sha2::{Digest, Sha256};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERIC: i32 = 2;
pub const EXIT_ORACLE_FAIL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "cavsim", version, about = "Stochastic simulation of atoms self-organizing in a lossy cavity")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Quench experiment: trace CSVs, snapshots and ensemble aggregates.
    Run(RunArgs),
    /// Steady-state sweep over one parameter.
    Scan(ScanArgs),
    /// Coherence functions and intensity spectrum of a stationary run.
    Spectrum(SpectrumArgs),
    /// Compares the long-time SDE ensemble with a Metropolis sampler.
    Oracle(OracleArgs),
    /// P(Θ), momentum kurtosis and MSD exponent from a saved `run`.
    Analyze(AnalyzeArgs),
    /// Repeats a recorded command from its manifest.
    Rerun(RerunArgs),
}

#[derive(Debug, Args, Clone)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the number of trajectories.
    #[arg(long)]
    pub traj: Option<usize>,
}

#[derive(Debug, Args, Clone)]
pub struct ScanArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// One of nbar, nbar_rel, delta_c, n_atoms.
    #[arg(long)]
    pub param: String,
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Clone)]
pub struct SpectrumArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Welch segment length in samples (power of two).
    #[arg(long, default_value_t = 1024)]
    pub segment: usize,
    #[arg(long, default_value = "hann")]
    pub window: String,
    /// Largest lag of g1/g2 in samples.
    #[arg(long, default_value_t = 256)]
    pub max_lag: usize,
}

#[derive(Debug, Args, Clone)]
pub struct OracleArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 20_000)]
    pub sweeps: usize,
    #[arg(long, default_value_t = 4)]
    pub chains: usize,
    /// Bound on the KS distance between the |Θ| distributions.
    #[arg(long, default_value_t = DEFAULT_DISTANCE_BOUND)]
    pub bound: f64,
}

#[derive(Debug, Args, Clone)]
pub struct AnalyzeArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Fit window `t1,t2` for the MSD exponent.
    #[arg(long, default_value = "100,10000", value_parser = parse_window)]
    pub msd_window: (f64, f64),
}

fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected `t1,t2`")?;
    let t1: f64 = a.trim().parse().map_err(|_| format!("bad number `{a}`"))?;
    let t2: f64 = b.trim().parse().map_err(|_| format!("bad number `{b}`"))?;
    if !(t1 > 0.0 && t2 > t1) {
        return Err(format!("need 0 < t1 < t2, got {t1},{t2}"));
    }
    Ok((t1, t2))
}

#[derive(Debug, Args, Clone)]
pub struct RerunArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

/// Failure classes, each with its own exit code.
#[derive(Debug)]
pub enum Failure {
    Config(anyhow::Error),
    Numeric(anyhow::Error),
    OracleFail(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Numeric(_) => EXIT_NUMERIC,
            Failure::OracleFail(_) => EXIT_ORACLE_FAIL,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(e) => write!(f, "error: {e:#}"),
            Failure::Numeric(e) => write!(f, "numeric failure: {e:#}"),
            Failure::OracleFail(s) => write!(f, "oracle comparison FAILED: {s}"),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Config(e)
    }
}

type Outcome = Result<(), Failure>;

/// Parses `argv` (including the program name) and runs the command.
/// Returns the process exit code; messages go to stdout/stderr.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_CONFIG,
            };
        }
    };
    let result = match worker_limit() {
        Ok(Some(n)) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(&cli.command)),
            Err(e) => Err(Failure::Config(anyhow!("cannot build thread pool: {e}"))),
        },
        Ok(None) => dispatch(&cli.command),
        Err(e) => Err(Failure::Config(e)),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("{f}");
            f.exit_code()
        }
    }
}

fn worker_limit() -> anyhow::Result<Option<usize>> {
    match std::env::var("CAVSIM_THREADS") {
        Ok(v) => {
            let n: usize = v.trim().parse().with_context(|| format!("CAVSIM_THREADS=`{v}` is not a count"))?;
            if n == 0 {
                bail!("CAVSIM_THREADS must be at least 1");
            }
            Ok(Some(n))
        }
        Err(_) => Ok(None),
    }
}

pub fn dispatch(cmd: &Command) -> Outcome {
    match cmd {
        Command::Run(a) => cmd_run(a),
        Command::Scan(a) => cmd_scan(a),
        Command::Spectrum(a) => cmd_spectrum(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Rerun(a) => cmd_rerun(a),
    }
}

fn load_config(path: &Path) -> anyhow::Result<SimConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    parse_config(&text).with_context(|| format!("in {}", path.display()))
}

fn resolve_mode(cfg: &mut SimConfig, wanted: SampleMode, command: &str) -> anyhow::Result<()> {
    match cfg.sample_mode {
        Some(m) if m != wanted => {
            bail!("`{command}` needs sample_mode = {}, config has {}", wanted.as_str(), m.as_str())
        }
        _ => cfg.sample_mode = Some(wanted),
    }
    Ok(())
}

fn prepare_out(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn ensemble(cfg: &SimConfig, opts: &EnsembleOptions) -> Result<EnsembleResult, Failure> {
    cfg.validate().map_err(|e| Failure::Config(e.into()))?;
    run_ensemble(cfg, opts).map_err(|e| Failure::Config(e.into()))
}

fn numeric_check(res: &EnsembleResult) -> Outcome {
    let failed = res.failed();
    if failed.is_empty() {
        return Ok(());
    }
    let first = res.trajectories.iter().find_map(|t| t.failure.as_ref()).unwrap();
    Err(Failure::Numeric(anyhow!(
        "{} of {} trajectories failed (indices {:?}); first: {first}",
        failed.len(),
        res.trajectories.len(),
        failed
    )))
}

fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// Records the files written under `out` and what produced them.
struct Manifest {
    command: serde_json::Value,
    config: String,
    seed: u64,
    n_traj: usize,
    started: f64,
    files: Vec<PathBuf>,
}

impl Manifest {
    fn new(command: serde_json::Value, cfg: &SimConfig) -> Self {
        Manifest {
            command,
            config: render_config(cfg),
            seed: cfg.seed,
            n_traj: cfg.n_traj,
            started: unix_now(),
            files: Vec::new(),
        }
    }

    fn table(&mut self, out: &Path, name: &str, t: &Table) -> anyhow::Result<()> {
        let p = out.join(name);
        if let Some(dir) = p.parent() {
            fs::create_dir_all(dir)?;
        }
        t.write(&p).with_context(|| format!("writing {}", p.display()))?;
        self.files.push(PathBuf::from(name));
        Ok(())
    }

    fn bytes(&mut self, out: &Path, name: &str, data: &[u8]) -> anyhow::Result<()> {
        let p = out.join(name);
        if let Some(dir) = p.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(&p, data).with_context(|| format!("writing {}", p.display()))?;
        self.files.push(PathBuf::from(name));
        Ok(())
    }

    fn finish(mut self, out: &Path) -> anyhow::Result<()> {
        self.files.sort();
        let mut inventory = Vec::new();
        for f in &self.files {
            let data = fs::read(out.join(f))?;
            inventory.push(json!({
                "path": f.to_string_lossy(),
                "bytes": data.len(),
                "sha256": hex(&Sha256::digest(&data)),
            }));
        }
        let seeds: Vec<_> =
            (0..self.n_traj).map(|k| json!({ "trajectory": k, "master_seed": self.seed, "stream": k })).collect();
        let doc = json!({
            "cavsim_version": VERSION,
            "command": self.command,
            "config": self.config,
            "master_seed": self.seed,
            "trajectory_seeds": seeds,
            "started_unix": self.started,
            "finished_unix": unix_now(),
            "files": inventory,
        });
        fs::write(out.join("manifest.json"), serde_json::to_string_pretty(&doc)?)?;
        Ok(())
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn trace_table(tr: &cavsim::TrajectoryResult) -> Table {
    let mut t = Table::new(&["t", "theta", "p_s", "kinetic", "photon"]);
    for s in &tr.samples {
        t.push(vec![s.t, s.theta, s.p_s, s.kinetic, s.photon]);
    }
    t
}

fn run_with(cfg: SimConfig, out: &Path, command: serde_json::Value) -> Outcome {
    prepare_out(out)?;
    let mut opts = EnsembleOptions::new(SampleMode::Log);
    if cfg.snapshots > 0 {
        opts.snapshots = SnapshotPolicy::LogSpaced(cfg.snapshots);
    }
    let res = ensemble(&cfg, &opts)?;
    let mut m = Manifest::new(command, &cfg);
    fs::write(out.join("config.txt"), render_config(&cfg)).map_err(anyhow::Error::from)?;
    m.files.push("config.txt".into());
    for tr in &res.trajectories {
        m.table(out, &format!("traces/traj_{:05}.csv", tr.index), &trace_table(tr))?;
        if cfg.snapshots > 0 {
            let mut state = tr.final_state.clone();
            let dir = format!("snapshots/traj_{:05}", tr.index);
            let all = std::iter::once(&tr.initial).chain(&tr.snapshots);
            for (k, snap) in all.enumerate() {
                state.x.clone_from(&snap.x);
                state.p.clone_from(&snap.p);
                state.t = snap.t;
                let cp = Checkpoint { state: state.clone(), traj_index: tr.index };
                m.bytes(out, &format!("{dir}/s{k:04}.cavs"), &cp.to_bytes())?;
            }
        }
        m.bytes(out, &format!("checkpoints/traj_{:05}.cavs", tr.index), &tr.checkpoint().to_bytes())?;
    }
    let agg = res.time_aggregate();
    let mut t = Table::new(&["t", "abs_theta", "abs_theta_err", "theta2", "photon", "kinetic_temp"]);
    for k in 0..agg.t.len() {
        t.push(vec![
            agg.t[k],
            agg.abs_theta[k],
            agg.abs_theta_err[k],
            agg.theta2[k],
            agg.photon[k],
            agg.kinetic_temp[k],
        ]);
    }
    m.table(out, "aggregate.csv", &t)?;
    m.finish(out)?;
    numeric_check(&res)
}

fn cmd_run(a: &RunArgs) -> Outcome {
    let mut cfg = load_config(&a.config)?;
    resolve_mode(&mut cfg, SampleMode::Log, "run")?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(k) = a.traj {
        cfg.n_traj = k;
    }
    run_with(cfg, &a.out, json!({ "name": "run" }))
}

fn with_param(base: &SimConfig, param: &str, v: f64) -> anyhow::Result<SimConfig> {
    let mut c = base.clone();
    match param {
        "nbar" => c.nbar = v,
        "nbar_rel" => c.nbar = v * threshold_nbar(c.delta_c),
        "delta_c" => c.delta_c = v,
        "n_atoms" => {
            if v < 1.0 || v.fract() != 0.0 {
                bail!("n_atoms value {v} is not a positive integer");
            }
            c.n_atoms = v as usize;
        }
        other => bail!("cannot scan `{other}` (expected nbar, nbar_rel, delta_c or n_atoms)"),
    }
    c.validate()?;
    Ok(c)
}

/// Steady-state statistics of one ensemble.
pub struct SteadyState {
    pub nbar: f64,
    pub nbar_rel: f64,
    pub g2_0: f64,
    pub g2_0_err: f64,
    pub chi: f64,
    pub abs_theta: f64,
    pub abs_theta_err: f64,
    pub theta2: f64,
    pub temp_kin: f64,
    pub thetas: Vec<f64>,
}

pub fn steady_state(res: &EnsembleResult) -> anyhow::Result<SteadyState> {
    let cfg = &res.cfg;
    let burn = cfg.burn_in();
    let samples = res.equilibrium_samples(burn);
    let m = samples.moments()?;
    Ok(SteadyState {
        nbar: cfg.nbar,
        nbar_rel: cfg.nbar / threshold_nbar(cfg.delta_c),
        g2_0: m.g2_0.value,
        g2_0_err: m.g2_0.error,
        chi: m.chi.value,
        abs_theta: m.abs_theta.value,
        abs_theta_err: m.abs_theta.error,
        theta2: m.theta2.value,
        temp_kin: res.kinetic_temperature(burn),
        thetas: samples.thetas,
    })
}

fn cmd_scan(a: &ScanArgs) -> Outcome {
    let mut base = load_config(&a.config)?;
    resolve_mode(&mut base, SampleMode::Linear, "scan")?;
    let cfgs = a.values.iter().map(|&v| with_param(&base, &a.param, v)).collect::<anyhow::Result<Vec<_>>>()?;
    prepare_out(&a.out)?;
    let mut m = Manifest::new(json!({ "name": "scan", "param": a.param, "values": a.values }), &base);
    let mut rows = Table::new(&[
        "nbar",
        "nbar_rel",
        "g2_0",
        "g2_0_err",
        "chi",
        "abs_theta",
        "abs_theta_err",
        "theta2",
        "temp_kin",
    ]);
    let mut hist_cols = vec!["theta".to_string()];
    hist_cols.extend((0..cfgs.len()).map(|k| format!("density_{k}")));
    let mut hists = Vec::new();
    let mut failures = Vec::new();
    for (k, cfg) in cfgs.iter().enumerate() {
        log::info!("scan point {k}: {} = {}", a.param, a.values[k]);
        let res = ensemble(cfg, &EnsembleOptions::new(SampleMode::Linear))?;
        if let Err(f) = numeric_check(&res) {
            failures.push(format!("point {k}: {f}"));
        }
        let s = steady_state(&res).map_err(Failure::Numeric)?;
        rows.push(vec![
            s.nbar,
            s.nbar_rel,
            s.g2_0,
            s.g2_0_err,
            s.chi,
            s.abs_theta,
            s.abs_theta_err,
            s.theta2,
            s.temp_kin,
        ]);
        hists.push(theta_histogram(&s.thetas, DEFAULT_THETA_BINS).map_err(|e| Failure::Numeric(e.into()))?);
    }
    m.table(&a.out, "scan.csv", &rows)?;
    let mut ht = Table::new(&hist_cols);
    for (b, c) in hists[0].centers().into_iter().enumerate() {
        let mut row = vec![c];
        row.extend(hists.iter().map(|h| h.density[b]));
        ht.push(row);
    }
    m.table(&a.out, "theta_hist.csv", &ht)?;
    m.finish(&a.out)?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Numeric(anyhow!(failures.join("; "))))
    }
}

fn cmd_spectrum(a: &SpectrumArgs) -> Outcome {
    let mut cfg = load_config(&a.config)?;
    resolve_mode(&mut cfg, SampleMode::Linear, "spectrum")?;
    let window: Window = a.window.parse().map_err(|e| Failure::Config(anyhow::Error::from(e)))?;
    prepare_out(&a.out)?;
    let res = ensemble(&cfg, &EnsembleOptions::new(SampleMode::Linear))?;
    numeric_check(&res)?;
    let series = res.stationary_series(cfg.burn_in());
    let sp = spectrum(&series, a.segment, window).map_err(|e| Failure::Config(e.into()))?;
    let c1 = g1(&series, a.max_lag).map_err(|e| Failure::Config(e.into()))?;
    let c2 = g2(&series, a.max_lag).map_err(|e| Failure::Config(e.into()))?;
    let mut m = Manifest::new(
        json!({ "name": "spectrum", "segment": a.segment, "window": window.as_str(), "max_lag": a.max_lag }),
        &cfg,
    );
    let mut t = Table::new(&["omega", "density"]);
    for (w, d) in sp.omega.iter().zip(&sp.density) {
        t.push(vec![*w, *d]);
    }
    m.table(&a.out, "spectrum.csv", &t)?;
    for (name, c) in [("g1.csv", &c1), ("g2.csv", &c2)] {
        let mut t = Table::new(&["tau", "value", "stderr"]);
        for k in 0..c.lags.len() {
            t.push(vec![c.lags[k], c.values[k], c.stderr[k]]);
        }
        m.table(&a.out, name, &t)?;
    }
    let peaks: Vec<_> = sp.positive_peaks(2).into_iter().map(|(w, s)| json!({ "omega": w, "density": s })).collect();
    let summary = json!({
        "segments": sp.segments,
        "d_omega": sp.d_omega(),
        "dc_weight": sp.dc_weight,
        "positive_peaks": peaks,
        "g2_0": c2.values[0],
    });
    m.bytes(
        &a.out,
        "spectrum_summary.json",
        serde_json::to_string_pretty(&summary).map_err(anyhow::Error::from)?.as_bytes(),
    )?;
    m.finish(&a.out)?;
    Ok(())
}

fn cmd_oracle(a: &OracleArgs) -> Outcome {
    let mut cfg = load_config(&a.config)?;
    resolve_mode(&mut cfg, SampleMode::Linear, "oracle")?;
    prepare_out(&a.out)?;
    let res = ensemble(&cfg, &EnsembleOptions::new(SampleMode::Linear))?;
    numeric_check(&res)?;
    let sde = res.equilibrium_samples(cfg.burn_in());
    let mc = McmcConfig {
        n_sweeps: a.sweeps,
        burn_in: (a.sweeps / 10).max(1),
        chains: a.chains,
        seed: cfg.seed,
        ..McmcConfig::new(cfg.n_atoms, cfg.nbar, cfg.delta_c)
    };
    let oracle = sample_equilibrium(&mc).map_err(|e| Failure::Config(e.into()))?;
    let report = compare(&sde, &oracle, a.bound).map_err(|e| Failure::Config(e.into()))?;
    let mut m =
        Manifest::new(json!({ "name": "oracle", "sweeps": a.sweeps, "chains": a.chains, "bound": a.bound }), &cfg);
    let mut t =
        Table::new(&["source", "theta2", "theta2_err", "abs_theta", "abs_theta_err", "g2_0", "g2_0_err", "chi"]);
    for (k, mo) in [report.left, report.right].iter().enumerate() {
        t.push(vec![
            k as f64,
            mo.theta2.value,
            mo.theta2.error,
            mo.abs_theta.value,
            mo.abs_theta.error,
            mo.g2_0.value,
            mo.g2_0.error,
            mo.chi.value,
        ]);
    }
    m.table(&a.out, "moments.csv", &t)?;
    let text = serde_json::to_string_pretty(&report).map_err(anyhow::Error::from)?;
    m.bytes(&a.out, "compare.json", text.as_bytes())?;
    m.finish(&a.out)?;
    let line = format!(
        "z(theta2) = {:.2}, z(|theta|) = {:.2}, z(g2_0) = {:.2}, KS = {:.3} (bound {})",
        report.z_theta2, report.z_abs_theta, report.z_g2_0, report.distance, report.distance_bound
    );
    if report.pass {
        println!("PASS {line}");
        Ok(())
    } else {
        println!("FAIL {line}");
        Err(Failure::OracleFail(line))
    }
}

fn load_snapshots(dir: &Path) -> anyhow::Result<Vec<Vec<Checkpoint>>> {
    let root = dir.join("snapshots");
    let mut trajs: Vec<PathBuf> = fs::read_dir(&root)
        .with_context(|| format!("no snapshots in {} (set `snapshots` in the config)", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()?;
    trajs.sort();
    trajs
        .iter()
        .map(|d| {
            let mut files: Vec<PathBuf> = fs::read_dir(d)?.map(|e| e.map(|e| e.path())).collect::<Result<_, _>>()?;
            files.sort();
            files.iter().map(|f| Checkpoint::load(f).with_context(|| format!("loading {}", f.display()))).collect()
        })
        .collect()
}

fn cmd_analyze(a: &AnalyzeArgs) -> Outcome {
    let cfg = load_config(&a.input.join("config.txt"))?;
    let (t1, t2) = a.msd_window;
    prepare_out(&a.out)?;
    let mut m = Manifest::new(json!({ "name": "analyze", "input": a.input, "msd_window": [t1, t2] }), &cfg);
    let mut trace_files: Vec<PathBuf> = fs::read_dir(a.input.join("traces"))
        .context("reading traces")?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()
        .map_err(anyhow::Error::from)?;
    trace_files.sort();
    let burn = cfg.burn_in();
    let mut thetas = Vec::new();
    for f in &trace_files {
        let t = Table::read(f).with_context(|| format!("reading {}", f.display()))?;
        let ts = t.column("t").map_err(anyhow::Error::from)?;
        let th = t.column("theta").map_err(anyhow::Error::from)?;
        thetas.extend(ts.iter().zip(&th).filter(|(t, _)| **t >= burn).map(|(_, v)| *v));
    }
    let h = theta_histogram(&thetas, DEFAULT_THETA_BINS).map_err(|e| Failure::Numeric(e.into()))?;
    let mut ht = Table::new(&["theta", "density"]);
    for (c, d) in h.centers().into_iter().zip(&h.density) {
        ht.push(vec![c, *d]);
    }
    m.table(&a.out, "theta_hist.csv", &ht)?;

    let snaps = load_snapshots(&a.input)?;
    let mut summary = json!({ "stationary_samples": thetas.len() });
    if !snaps.is_empty() && snaps[0].len() > 1 {
        let n_t = snaps.iter().map(|s| s.len()).min().unwrap();
        let mut kt = Table::new(&["t", "excess_kurtosis", "stderr"]);
        for k in 1..n_t {
            let p: Vec<f64> = snaps.iter().flat_map(|s| s[k].state.p.iter().copied()).collect();
            let ek = excess_kurtosis(&p).map_err(|e| Failure::Numeric(e.into()))?;
            kt.push(vec![snaps[0][k].state.t, ek, kurtosis_std_error(p.len())]);
        }
        m.table(&a.out, "kurtosis.csv", &kt)?;
        let traces: Vec<PositionTrace> = snaps
            .iter()
            .map(|s| PositionTrace {
                x0: s[0].state.x.clone(),
                times: s[1..n_t].iter().map(|c| c.state.t).collect(),
                positions: s[1..n_t].iter().map(|c| c.state.x.clone()).collect(),
            })
            .collect();
        let curve = msd(&traces, false).map_err(|e| Failure::Numeric(e.into()))?;
        let mut mt = Table::new(&["t", "msd", "stderr"]);
        for k in 0..curve.t.len() {
            mt.push(vec![curve.t[k], curve.msd[k], curve.stderr[k]]);
        }
        m.table(&a.out, "msd.csv", &mt)?;
        match fit_alpha(&curve, (t1, t2)) {
            Ok(fit) => summary["alpha"] = json!({ "value": fit.alpha, "stderr": fit.stderr, "points": fit.points }),
            Err(e) => summary["alpha_error"] = json!(e.to_string()),
        }
    }
    let text = serde_json::to_string_pretty(&summary).map_err(anyhow::Error::from)?;
    m.bytes(&a.out, "analysis.json", text.as_bytes())?;
    m.finish(&a.out)?;
    Ok(())
}

fn cmd_rerun(a: &RerunArgs) -> Outcome {
    let text = fs::read_to_string(&a.manifest).with_context(|| format!("reading {}", a.manifest.display()))?;
    let doc: serde_json::Value = serde_json::from_str(&text).context("manifest is not JSON")?;
    let config = doc["config"].as_str().ok_or_else(|| anyhow!("manifest has no config"))?;
    let cfg = parse_config(config).context("manifest config")?;
    let cmd = &doc["command"];
    prepare_out(&a.out)?;
    let cfg_path = a.out.join("rerun_config.txt");
    fs::write(&cfg_path, config).map_err(anyhow::Error::from)?;
    let result = match cmd["name"].as_str() {
        Some("run") => run_with(cfg, &a.out, cmd.clone()),
        Some("scan") => {
            let values: Vec<f64> = serde_json::from_value(cmd["values"].clone()).context("scan values")?;
            let param = cmd["param"].as_str().ok_or_else(|| anyhow!("scan param"))?.to_string();
            cmd_scan(&ScanArgs { config: cfg_path.clone(), param, values, out: a.out.clone() })
        }
        Some("spectrum") => cmd_spectrum(&SpectrumArgs {
            config: cfg_path.clone(),
            out: a.out.clone(),
            segment: cmd["segment"].as_u64().ok_or_else(|| anyhow!("segment"))? as usize,
            window: cmd["window"].as_str().unwrap_or("hann").to_string(),
            max_lag: cmd["max_lag"].as_u64().ok_or_else(|| anyhow!("max_lag"))? as usize,
        }),
        Some("oracle") => cmd_oracle(&OracleArgs {
            config: cfg_path.clone(),
            out: a.out.clone(),
            sweeps: cmd["sweeps"].as_u64().ok_or_else(|| anyhow!("sweeps"))? as usize,
            chains: cmd["chains"].as_u64().ok_or_else(|| anyhow!("chains"))? as usize,
            bound: cmd["bound"].as_f64().ok_or_else(|| anyhow!("bound"))?,
        }),
        other => Err(Failure::Config(anyhow!("manifest command {other:?} cannot be rerun"))),
    };
    let _ = fs::remove_file(&cfg_path);
    result
}
