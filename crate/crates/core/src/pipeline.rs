//! Solve → certify → fit for single parameter points and sweeps over them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{fit_decay, FitReport};
use crate::certifier::{certify_profile, Certificate, Tolerances};
use crate::grid1d::{Grid, Profile};
use crate::model::{equilibria, linear_data, Params, Regime};
use crate::solver1d::{
    continue_in_r_with, initial_guess, relax_neumann, solve_bvp, solve_on_grid,
    ContinuationSchedule, SolveError, SolveOptions, Trace,
};

/// Half-length in units of `1/λ₋` used when none is given.
pub const DEFAULT_R_LAMBDA: f64 = 30.0;
/// Spacing in units of `1/λ₋` used when none is given.
pub const DEFAULT_H_LAMBDA: f64 = 0.01;
/// Neumann grid for constant-regime points.
pub const CONSTANT_REGIME_HALF_LENGTH: f64 = 10.0;
pub const CONSTANT_REGIME_NODES: usize = 199;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PipelineOptions {
    /// Final half-length; `DEFAULT_R_LAMBDA / λ₋` when absent.
    pub half_length: Option<f64>,
    /// Spacing; `DEFAULT_H_LAMBDA / λ₋` when absent.
    pub h: Option<f64>,
    /// tanh steepness of the main solve; `λ₋` when absent.
    pub steepness: Option<f64>,
    pub solve: SolveOptions,
    pub tolerances: Tolerances,
    pub seed: u64,
}

/// `(R, h)` for a wall at `p`.
pub fn resolution(p: &Params, opts: &PipelineOptions) -> Result<(f64, f64), SolveError> {
    let lam = linear_data(p)?.lambda_minus;
    Ok((
        opts.half_length.unwrap_or(DEFAULT_R_LAMBDA / lam),
        opts.h.unwrap_or(DEFAULT_H_LAMBDA / lam),
    ))
}

/// Continuation on an explicit schedule; returns the final stage and the trace.
pub fn solve_schedule(
    p: &Params,
    sched: &ContinuationSchedule,
    steepness: Option<f64>,
    opts: &SolveOptions,
) -> Result<(Profile, Trace), SolveError> {
    equilibria(p).wall_states(p)?;
    let k = match steepness {
        Some(k) => k,
        None => linear_data(p)?.lambda_minus,
    };
    let mut trace = Trace::default();
    let mut stages = continue_in_r_with(p, sched, opts, k, &mut trace)?;
    Ok((stages.pop().expect("schedules are non-empty"), trace))
}

/// The main wall and an independently initialised partner on the same grid:
/// a single Newton solve from a tanh guess twice as steep, without continuation.
pub fn solve_wall_pair(
    p: &Params,
    opts: &PipelineOptions,
) -> Result<(Profile, Profile, Trace), SolveError> {
    let eq = equilibria(p);
    eq.wall_states(p)?;
    let (r, h) = resolution(p, opts)?;
    let lam = linear_data(p)?.lambda_minus;
    let k = opts.steepness.unwrap_or(lam);
    let grid = Grid::with_spacing(r, h)?;
    let mut trace = Trace::default();
    let main = solve_on_grid(p, grid, &opts.solve, k, &mut trace)?;
    let partner = solve_bvp(p, grid, &initial_guess(grid, &eq, 2.0 * k)?, &opts.solve)?;
    Ok((main, partner, trace))
}

/// Deterministic per-point seed, independent of sweep order.
fn point_seed(base: u64, p: &Params) -> u64 {
    base ^ p.alpha.to_bits().rotate_left(21) ^ p.omega.to_bits().rotate_left(42)
}

/// Seeded uniform guess in `[lo, hi]` on `grid`.
pub fn random_guess(grid: Grid, lo: f64, hi: f64, seed: u64) -> Profile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.len();
    let u = (0..n).map(|_| rng.random_range(lo..=hi)).collect();
    let v = (0..n).map(|_| rng.random_range(lo..=hi)).collect();
    Profile::new(grid, u, v).expect("random values are finite")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointError {
    pub name: String,
    pub message: String,
}

impl From<&SolveError> for PointError {
    fn from(e: &SolveError) -> Self {
        Self {
            name: e.name().to_string(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub alpha: f64,
    pub omega: f64,
    pub regime: Regime,
    pub completed: bool,
    pub overall_pass: bool,
    pub error: Option<PointError>,
    pub newton_iterations: Vec<usize>,
    pub certificate: Option<Certificate>,
    pub fit: Option<FitReport>,
}

impl PointResult {
    fn failed(p: &Params, e: &SolveError) -> Self {
        Self {
            alpha: p.alpha,
            omega: p.omega,
            regime: p.regime(),
            completed: false,
            overall_pass: false,
            error: Some(e.into()),
            newton_iterations: Vec::new(),
            certificate: None,
            fit: None,
        }
    }
}

/// Solve, certify and fit one point. Walls get the full certificate with a
/// sliding check against the partner solve; constant-regime points are
/// relaxed with zero-flux ends from a seeded random guess and checked
/// against `(c, c)`.
pub fn run_point(p: &Params, opts: &PipelineOptions) -> PointResult {
    match run_point_inner(p, opts) {
        Ok(r) => r,
        Err(e) => PointResult::failed(p, &e),
    }
}

fn run_point_inner(p: &Params, opts: &PipelineOptions) -> Result<PointResult, SolveError> {
    let tol = &opts.tolerances;
    if p.regime() == Regime::ConstantOnly {
        let grid = Grid::new(CONSTANT_REGIME_HALF_LENGTH, CONSTANT_REGIME_NODES)?;
        let mut guess = random_guess(grid, 0.2, 1.5, point_seed(opts.seed, p));
        if p.ratio() == 0.5 {
            // the (1,-1) direction is degenerate at (c,c) here: a residual of
            // 1e-10 leaves an O(1e-4) offset along it, so stay on u = v
            let u = guess.u().to_vec();
            guess = Profile::new(grid, u.clone(), u)?;
        }
        let prof = relax_neumann(p, grid, &guess, &opts.solve)?;
        let cert = certify_profile(p, &prof, None, tol).expect("no partner, no pairing error");
        return Ok(PointResult {
            alpha: p.alpha,
            omega: p.omega,
            regime: p.regime(),
            completed: true,
            overall_pass: cert.overall_pass,
            error: None,
            newton_iterations: Vec::new(),
            certificate: Some(cert),
            fit: None,
        });
    }
    let (main, partner, trace) = solve_wall_pair(p, opts)?;
    let cert = certify_profile(p, &main, Some(&partner), tol).expect("same parameters");
    let ld = linear_data(p)?;
    let fit = fit_decay(&main, &equilibria(p), &ld)
        .ok()
        .map(|f| FitReport::new(p, &main, &ld, &f));
    Ok(PointResult {
        alpha: p.alpha,
        omega: p.omega,
        regime: p.regime(),
        completed: true,
        overall_pass: cert.overall_pass,
        error: None,
        newton_iterations: trace.iterations_per_stage(),
        certificate: Some(cert),
        fit,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub points: Vec<PointResult>,
}

impl SweepReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("sweep report is plain data");
        s.push('\n');
        s
    }

    pub fn all_completed(&self) -> bool {
        self.points.iter().all(|p| p.completed)
    }

    pub fn all_pass(&self) -> bool {
        self.points.iter().all(|p| p.overall_pass)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub report: SweepReport,
    /// Human-readable notes, e.g. dropped duplicate points.
    pub warnings: Vec<String>,
}

/// `{0.5, 1, 2, 4, 8} × ω/α ∈ {0.05, 0.2, 0.4}`.
pub fn default_grid() -> Vec<(f64, f64)> {
    let mut pts = Vec::new();
    for alpha in [0.5, 1.0, 2.0, 4.0, 8.0] {
        for ratio in [0.05, 0.2, 0.4] {
            pts.push((alpha, alpha * ratio));
        }
    }
    pts
}

/// Validates, orders by `(α, ω)` and drops exact duplicates.
pub fn prepare_points(points: &[(f64, f64)]) -> Result<(Vec<Params>, Vec<String>), SolveError> {
    let mut ps = points
        .iter()
        .map(|&(a, w)| Params::new(a, w))
        .collect::<Result<Vec<_>, _>>()?;
    ps.sort_by(|x, y| {
        x.alpha
            .total_cmp(&y.alpha)
            .then(x.omega.total_cmp(&y.omega))
    });
    let mut warnings = Vec::new();
    let before = ps.len();
    ps.dedup_by(|x, y| {
        let dup = x == y;
        if dup {
            warnings.push(format!(
                "duplicate point (alpha={}, omega={}) dropped",
                x.alpha, x.omega
            ));
        }
        dup
    });
    debug_assert_eq!(before - ps.len(), warnings.len());
    Ok((ps, warnings))
}

/// Runs every point on a pool of `workers` threads; the report is ordered by
/// `(α, ω)` whatever the completion order.
pub fn run_sweep(
    points: &[(f64, f64)],
    opts: &PipelineOptions,
    workers: usize,
) -> Result<SweepOutcome, SolveError> {
    let (ps, warnings) = prepare_points(points)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| SolveError::InvalidOptions(format!("worker pool: {e}")))?;
    let results = pool.install(|| ps.par_iter().map(|p| run_point(p, opts)).collect());
    Ok(SweepOutcome {
        report: SweepReport { points: results },
        warnings,
    })
}
