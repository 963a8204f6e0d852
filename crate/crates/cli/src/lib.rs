//! Command-line front end: `solve`, `certify`, `asympt`, `sweep`, `strip2d`.
//!
//! Every setting can come from flags or from a TOML file passed with
//! `--config`; flags win. Exit codes: 0 success, 1 a certificate failed
//! (or a sweep point did not complete), 2 bad input or solver error.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use wallforge::asymptotics::{fit_decay, omega_zero_asymptotics, OmegaZeroReport};
use wallforge::certifier::{certify_profile, refs, Certificate, CheckRecord, Target, Tolerances};
use wallforge::pipeline::{
    default_grid, run_sweep, PipelineOptions, DEFAULT_H_LAMBDA, DEFAULT_R_LAMBDA,
};
use wallforge::solver1d::{initial_guess, solve_bvp, solve_on_grid};
use wallforge::strip2d::{certify_strip, relax_strip, StripGrid};
use wallforge::{
    equilibria, linear_data, ContinuationSchedule, FitReport, Grid, Params, Profile, Regime,
    SolveError, SolveOptions, Trace,
};

/// Dirichlet end values written by `solve` are exact; anything further off
/// than this belongs to other parameters.
pub const ENDPOINT_TOL: f64 = 1e-9;

/// `x'`-spread allowed by `strip2d`.
pub const STRIP_SPREAD_TOL: f64 = 1e-6;

pub const WORKERS_ENV: &str = "WALLFORGE_WORKERS";

#[derive(Debug, Parser)]
#[command(
    name = "wallforge",
    version,
    about = "Domain walls of Rabi-coupled two-component condensates"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Continue a wall in R and write profile.csv and trace.txt.
    Solve(CommonArgs),
    /// Certify a profile and write certificate.json.
    Certify {
        #[command(flatten)]
        common: CommonArgs,
        /// profile.csv produced by `solve`.
        profile: PathBuf,
    },
    /// Fit tail rates and amplitudes and write fit.json.
    Asympt {
        #[command(flatten)]
        common: CommonArgs,
        /// Profile to fit; solved afresh when omitted.
        profile: Option<PathBuf>,
    },
    /// Solve, certify and fit a grid of (alpha, omega) points into sweep.json.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// A grid point `ALPHA,OMEGA`; repeatable. Default grid when none are given.
        #[arg(long = "point", value_parser = parse_point)]
        points: Vec<(f64, f64)>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Relax a perturbed wall on a periodic strip and write field.csv.
    Strip2d {
        #[command(flatten)]
        common: CommonArgs,
        /// Columns in x'.
        #[arg(long)]
        n_prime: Option<usize>,
        /// Interior rows in x_N.
        #[arg(long)]
        n_n: Option<usize>,
        /// Period in x'; square cells when omitted.
        #[arg(long)]
        l_prime: Option<f64>,
        /// Perturbation amplitude.
        #[arg(long)]
        amplitude: Option<f64>,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML file with any of the settings below.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub omega: Option<f64>,
    /// Continuation schedule of half-lengths, e.g. `5,10,20,40`.
    #[arg(long = "R", value_delimiter = ',')]
    pub r_schedule: Option<Vec<f64>>,
    /// Grid spacing.
    #[arg(long)]
    pub h: Option<f64>,
    /// Steepness of the tanh initial guess.
    #[arg(long, short = 'k')]
    pub steepness: Option<f64>,
    /// Output directory.
    #[arg(long, short = 'o')]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Tolerance override `NAME=VALUE`; repeatable.
    #[arg(long = "tol", value_parser = parse_tol)]
    pub tol: Vec<(String, f64)>,
}

fn parse_point(s: &str) -> Result<(f64, f64), String> {
    let (a, w) = s
        .split_once(',')
        .ok_or_else(|| format!("expected ALPHA,OMEGA, got {s:?}"))?;
    let a = a.trim().parse::<f64>().map_err(|e| format!("alpha: {e}"))?;
    let w = w.trim().parse::<f64>().map_err(|e| format!("omega: {e}"))?;
    Ok((a, w))
}

fn parse_tol(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected NAME=VALUE, got {s:?}"))?;
    let v = v.trim().parse::<f64>().map_err(|e| format!("{k}: {e}"))?;
    Ok((k.trim().to_string(), v))
}

/// Contents of a `--config` file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub alpha: Option<f64>,
    pub omega: Option<f64>,
    #[serde(rename = "R")]
    pub r_schedule: Option<Vec<f64>>,
    pub h: Option<f64>,
    pub steepness: Option<f64>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub tolerances: Option<toml::Table>,
    pub points: Option<Vec<(f64, f64)>>,
    pub workers: Option<usize>,
    pub strip: Option<StripConfig>,
}

#[derive(Debug, Default, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StripConfig {
    pub n_prime: Option<usize>,
    pub n_n: Option<usize>,
    pub l_prime: Option<f64>,
    pub amplitude: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

/// Settings after merging file and flags.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub alpha: Option<f64>,
    pub omega: Option<f64>,
    pub r_schedule: Option<Vec<f64>>,
    pub h: Option<f64>,
    pub steepness: Option<f64>,
    pub out: PathBuf,
    pub seed: u64,
    pub tolerances: Tolerances,
}

impl RunConfig {
    pub fn resolve(args: &CommonArgs, file: &FileConfig) -> anyhow::Result<Self> {
        let mut table = file.tolerances.clone().unwrap_or_default();
        for (k, v) in &args.tol {
            table.insert(k.clone(), toml::Value::Float(*v));
        }
        let tolerances: Tolerances = table.try_into().map_err(|e| anyhow!("tolerances: {e}"))?;
        Ok(Self {
            alpha: args.alpha.or(file.alpha),
            omega: args.omega.or(file.omega),
            r_schedule: args.r_schedule.clone().or_else(|| file.r_schedule.clone()),
            h: args.h.or(file.h),
            steepness: args.steepness.or(file.steepness),
            out: args
                .out
                .clone()
                .or_else(|| file.out.clone())
                .unwrap_or_else(|| PathBuf::from(".")),
            seed: args.seed.or(file.seed).unwrap_or(0),
            tolerances,
        })
    }

    /// Validated parameters; both `alpha` and `omega` are required.
    pub fn params(&self) -> anyhow::Result<Params> {
        let alpha = self
            .alpha
            .ok_or_else(|| anyhow!("InvalidParams: --alpha is required"))?;
        let omega = self
            .omega
            .ok_or_else(|| anyhow!("InvalidParams: --omega is required"))?;
        Params::new(alpha, omega).map_err(|e| anyhow!("{}: {e}", e.name()))
    }

    pub fn pipeline(&self) -> PipelineOptions {
        PipelineOptions {
            half_length: self.r_schedule.as_ref().and_then(|s| s.last().copied()),
            h: self.h,
            steepness: self.steepness,
            solve: SolveOptions::default(),
            tolerances: self.tolerances,
            seed: self.seed,
        }
    }

    fn out_file(&self, name: &str) -> anyhow::Result<PathBuf> {
        fs::create_dir_all(&self.out)
            .with_context(|| format!("creating {}", self.out.display()))?;
        Ok(self.out.join(name))
    }
}

fn solve_err(e: SolveError) -> anyhow::Error {
    anyhow!("{}: {e}", e.name())
}

fn write(path: &Path, contents: &str) -> anyhow::Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

/// Parses arguments and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    }
}

pub fn run(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::Solve(common) => {
            let (cfg, _) = load(&common)?;
            cmd_solve(&cfg)
        }
        Command::Certify { common, profile } => {
            let (cfg, _) = load(&common)?;
            cmd_certify(&cfg, &profile)
        }
        Command::Asympt { common, profile } => {
            let (cfg, _) = load(&common)?;
            cmd_asympt(&cfg, profile.as_deref())
        }
        Command::Sweep {
            common,
            points,
            workers,
        } => {
            let (cfg, file) = load(&common)?;
            let points = if !points.is_empty() {
                points
            } else {
                file.points.unwrap_or_else(default_grid)
            };
            let workers = match std::env::var(WORKERS_ENV) {
                Ok(s) => s
                    .trim()
                    .parse::<usize>()
                    .with_context(|| format!("{WORKERS_ENV}={s:?}"))?,
                Err(_) => workers
                    .or(file.workers)
                    .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())),
            };
            cmd_sweep(&cfg, &points, workers)
        }
        Command::Strip2d {
            common,
            n_prime,
            n_n,
            l_prime,
            amplitude,
        } => {
            let (cfg, file) = load(&common)?;
            let s = file.strip.unwrap_or_default();
            let strip = StripConfig {
                n_prime: n_prime.or(s.n_prime),
                n_n: n_n.or(s.n_n),
                l_prime: l_prime.or(s.l_prime),
                amplitude: amplitude.or(s.amplitude),
            };
            cmd_strip2d(&cfg, &strip)
        }
    }
}

fn load(common: &CommonArgs) -> anyhow::Result<(RunConfig, FileConfig)> {
    let file = match &common.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    Ok((RunConfig::resolve(common, &file)?, file))
}

/// Solves the wall for `cfg`: the given schedule when there is one, else the
/// default doubling continuation to `R = 30/λ₋`.
pub fn solve_profile(cfg: &RunConfig) -> anyhow::Result<(Params, Profile, Trace)> {
    let p = cfg.params()?;
    equilibria(&p)
        .wall_states(&p)
        .map_err(|e| anyhow!("{}: {e}", e.name()))?;
    let lam = linear_data(&p)
        .map_err(|e| anyhow!("{}: {e}", e.name()))?
        .lambda_minus;
    let h = cfg.h.unwrap_or(DEFAULT_H_LAMBDA / lam);
    let k = cfg.steepness.unwrap_or(lam);
    let opts = SolveOptions::default();
    let mut trace = Trace::default();
    let prof = match &cfg.r_schedule {
        Some(rs) => {
            let sched = ContinuationSchedule::new(rs.clone(), h).map_err(solve_err)?;
            let (prof, t) = wallforge::pipeline::solve_schedule(&p, &sched, Some(k), &opts)
                .map_err(solve_err)?;
            trace = t;
            prof
        }
        None => {
            let grid = Grid::with_spacing(DEFAULT_R_LAMBDA / lam, h)
                .map_err(|e| anyhow!("InvalidGrid: {e}"))?;
            solve_on_grid(&p, grid, &opts, k, &mut trace).map_err(solve_err)?
        }
    };
    Ok((p, prof, trace))
}

pub fn cmd_solve(cfg: &RunConfig) -> anyhow::Result<i32> {
    let (_, prof, trace) = solve_profile(cfg)?;
    write(&cfg.out_file("profile.csv")?, &prof.to_csv())?;
    write(&cfg.out_file("trace.txt")?, &trace.to_text())?;
    Ok(0)
}

fn read_profile(path: &Path) -> anyhow::Result<Profile> {
    let f = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Profile::from_csv(BufReader::new(f)).with_context(|| format!("parsing {}", path.display()))
}

/// Wall profiles must carry `(a, b)` on the left and `(b, a)` on the right.
fn check_endpoints(p: &Params, prof: &Profile) -> anyhow::Result<()> {
    if p.regime() == Regime::ConstantOnly {
        return Ok(());
    }
    let (a, b) = equilibria(p).wall_states(p).map_err(|e| anyhow!("{e}"))?;
    let n = prof.u().len() - 1;
    let ends = [
        (prof.u()[0], a),
        (prof.v()[0], b),
        (prof.u()[n], b),
        (prof.v()[n], a),
    ];
    let off = ends.iter().map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    if off > ENDPOINT_TOL {
        bail!(
            "ParamsMismatch: profile end values are off by {off:e} from (a, b) = ({a}, {b}) at alpha={}, omega={}",
            p.alpha,
            p.omega
        );
    }
    Ok(())
}

/// Certificate of `prof`, with sliding against a fresh steeper-guess solve on
/// the same grid.
pub fn certify(cfg: &RunConfig, p: &Params, prof: &Profile) -> anyhow::Result<Certificate> {
    let tol = &cfg.tolerances;
    if p.regime() == Regime::ConstantOnly {
        return certify_profile(p, prof, None, tol).map_err(|e| anyhow!("{e}"));
    }
    let eq = equilibria(p);
    let k = match cfg.steepness {
        Some(k) => k,
        None => linear_data(p).map_err(|e| anyhow!("{e}"))?.lambda_minus,
    };
    let partner = initial_guess(*prof.grid(), &eq, 2.0 * k)
        .and_then(|g| solve_bvp(p, *prof.grid(), &g, &SolveOptions::default()));
    match partner {
        Ok(other) => certify_profile(p, prof, Some(&other), tol).map_err(|e| anyhow!("{e}")),
        Err(_) => {
            let mut cert = certify_profile(p, prof, None, tol).map_err(|e| anyhow!("{e}"))?;
            cert.checks.push(CheckRecord::new(
                "sliding",
                refs::UNIQUENESS,
                f64::INFINITY,
                Target::Value(0.0),
                tol.sliding,
                false,
            ));
            cert.overall_pass = false;
            Ok(cert)
        }
    }
}

pub fn cmd_certify(cfg: &RunConfig, profile: &Path) -> anyhow::Result<i32> {
    let p = cfg.params()?;
    let prof = read_profile(profile)?;
    check_endpoints(&p, &prof)?;
    let cert = certify(cfg, &p, &prof)?;
    write(&cfg.out_file("certificate.json")?, &cert.to_json())?;
    if cert.overall_pass {
        return Ok(0);
    }
    for c in cert.failures() {
        println!(
            "FAIL {} [{}] measured={:e} tolerance={:e}",
            c.name, c.paper_ref, c.measured, c.tolerance
        );
    }
    Ok(1)
}

#[derive(Debug, Serialize)]
struct OmegaZeroFit {
    alpha: f64,
    omega: f64,
    #[serde(rename = "R")]
    half_length: f64,
    h: f64,
    #[serde(flatten)]
    report: OmegaZeroReport,
}

pub fn cmd_asympt(cfg: &RunConfig, profile: Option<&Path>) -> anyhow::Result<i32> {
    let (p, prof) = match profile {
        Some(path) => {
            let p = cfg.params()?;
            let prof = read_profile(path)?;
            check_endpoints(&p, &prof)?;
            (p, prof)
        }
        None => {
            let (p, prof, _) = solve_profile(cfg)?;
            (p, prof)
        }
    };
    let json = match p.regime() {
        Regime::ConstantOnly => bail!(
            "ConstantOnly: omega/alpha = {} >= 1/2 has no wall to fit",
            p.ratio()
        ),
        Regime::OmegaZero => {
            let report =
                omega_zero_asymptotics(p.alpha, &prof).map_err(|e| anyhow!("{}: {e}", e.name()))?;
            serde_json::to_string_pretty(&OmegaZeroFit {
                alpha: p.alpha,
                omega: p.omega,
                half_length: prof.grid().half_length(),
                h: prof.grid().spacing(),
                report,
            })?
        }
        Regime::Heteroclinic => {
            let ld = linear_data(&p).map_err(|e| anyhow!("{e}"))?;
            let fit =
                fit_decay(&prof, &equilibria(&p), &ld).map_err(|e| anyhow!("{}: {e}", e.name()))?;
            if !fit.reliable() {
                eprintln!(
                    "warning: tail fit residual_rms {:e} flags it as unreliable",
                    fit.residual_rms
                );
            }
            serde_json::to_string_pretty(&FitReport::new(&p, &prof, &ld, &fit))?
        }
    };
    write(&cfg.out_file("fit.json")?, &(json + "\n"))?;
    Ok(0)
}

pub fn cmd_sweep(cfg: &RunConfig, points: &[(f64, f64)], workers: usize) -> anyhow::Result<i32> {
    let outcome = run_sweep(points, &cfg.pipeline(), workers).map_err(solve_err)?;
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    write(&cfg.out_file("sweep.json")?, &outcome.report.to_json())?;
    for r in outcome.report.points.iter().filter(|r| !r.completed) {
        let name = r.error.as_ref().map_or("unknown", |e| e.name.as_str());
        eprintln!(
            "point (alpha={}, omega={}) did not complete: {name}",
            r.alpha, r.omega
        );
    }
    Ok(if outcome.report.all_completed() { 0 } else { 1 })
}

pub fn cmd_strip2d(cfg: &RunConfig, strip: &StripConfig) -> anyhow::Result<i32> {
    let p = cfg.params()?;
    let half_length = cfg
        .r_schedule
        .as_ref()
        .and_then(|s| s.last().copied())
        .unwrap_or(20.0);
    let n_prime = strip.n_prime.unwrap_or(64);
    let n_n = strip.n_n.unwrap_or(800);
    let grid = match strip.l_prime {
        Some(l) => StripGrid::new(l, half_length, n_prime, n_n),
        None => StripGrid::square_cells(half_length, n_prime, n_n),
    }
    .map_err(|e| anyhow!("{}: {e}", e.name()))?;
    let amplitude = match strip.amplitude {
        Some(a) => a,
        None => {
            let (a, b) = equilibria(&p)
                .wall_states(&p)
                .map_err(|e| anyhow!("{}: {e}", e.name()))?;
            0.05 * (b - a)
        }
    };
    let run = relax_strip(&p, grid, amplitude, cfg.seed, &SolveOptions::default())
        .map_err(|e| anyhow!("{}: {e}", e.name()))?;
    let checks = certify_strip(&p, &run, STRIP_SPREAD_TOL, &cfg.tolerances);
    let cert = Certificate::new(&p, &run.base, checks);
    write(&cfg.out_file("field.csv")?, &run.field.to_csv())?;
    write(&cfg.out_file("certificate.json")?, &cert.to_json())?;
    if cert.overall_pass {
        return Ok(0);
    }
    for c in cert.failures() {
        println!(
            "FAIL {} [{}] measured={:e} tolerance={:e}",
            c.name, c.paper_ref, c.measured, c.tolerance
        );
    }
    Ok(1)
}
