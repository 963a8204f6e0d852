//! Finite-interval wall problem, continuation in the interval length, and
//! Neumann relaxation for the constant-solution regime.
//!
//! The discrete residual at interior node `i` is
//! `(f[i-1] − 2f[i] + f[i+1])/h² − F(u_i, v_i)`, stored interleaved as
//! `[r_u(1), r_v(1), r_u(2), r_v(2), ...]`. Its Jacobian is block
//! tridiagonal: `I/h²` off the diagonal and `−2I/h² − J(u_i, v_i)` on it.

use std::fmt::Write as _;

use thiserror::Error;

use crate::grid1d::{Grid, GridError, Profile};
use crate::linalg::{scalar, BlockTridiag};
use crate::model::{equilibria, jacobian, linear_data, rhs, Equilibria, ModelError, Params};
use crate::newton::{self, IterRecord, NewtonSystem};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("MaxIters: no convergence after {iters} iterations (residual {residual:e})")]
    MaxIters { iters: usize, residual: f64 },
    #[error("PositivityLost: iterate left the positive quadrant at iteration {iter}")]
    PositivityLost { iter: usize },
    #[error("SingularJacobian: vanishing pivot at block {block}")]
    SingularJacobian { block: usize },
    #[error("invalid options: {0}")]
    InvalidOptions(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("stage {stage} (R = {half_length}): {source}")]
    Stage {
        stage: usize,
        half_length: f64,
        #[source]
        source: Box<SolveError>,
    },
}

impl SolveError {
    /// Short name of the failure, used on the command line.
    pub fn name(&self) -> &'static str {
        match self {
            SolveError::MaxIters { .. } => "MaxIters",
            SolveError::PositivityLost { .. } => "PositivityLost",
            SolveError::SingularJacobian { .. } => "SingularJacobian",
            SolveError::InvalidOptions(_) => "InvalidOptions",
            SolveError::Model(ModelError::ConstantOnly { .. }) => "ConstantOnly",
            SolveError::Model(ModelError::InvalidParams(_)) => "InvalidParams",
            SolveError::Model(ModelError::Degenerate { .. }) => "Degenerate",
            SolveError::Grid(GridError::NotACrossing) => "NotACrossing",
            SolveError::Grid(_) => "InvalidGrid",
            SolveError::Stage { source, .. } => source.name(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub max_newton_iters: usize,
    /// Sup-norm target for the discrete residual.
    pub residual_tol: f64,
    /// Smallest backtracking step before the iteration is declared stuck.
    pub min_step: f64,
    pub positivity_floor: f64,
    /// Multiplier of `‖r‖∞` in the Levenberg shift; 0 gives plain Newton.
    pub shift_scale: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_newton_iters: 50,
            residual_tol: 1e-10,
            min_step: 2f64.powi(-20),
            positivity_floor: 1e-8,
            shift_scale: 1.0,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<(), SolveError> {
        if self.residual_tol.is_nan() || self.residual_tol <= 0.0 {
            return Err(SolveError::InvalidOptions(
                "residual_tol must be > 0".into(),
            ));
        }
        if self.max_newton_iters < 1 {
            return Err(SolveError::InvalidOptions(
                "max_newton_iters must be >= 1".into(),
            ));
        }
        if !(self.min_step > 0.0 && self.min_step <= 1.0) {
            return Err(SolveError::InvalidOptions(
                "min_step must lie in (0, 1]".into(),
            ));
        }
        if self.shift_scale.is_nan() || self.shift_scale < 0.0 {
            return Err(SolveError::InvalidOptions(
                "shift_scale must be >= 0".into(),
            ));
        }
        Ok(())
    }

    /// Lowest admissible value; relaxed to `-floor` when the end state `a` is
    /// itself below the floor (ω = 0 has `a = 0`).
    pub(crate) fn lower_bound(&self, a: f64) -> f64 {
        if a > self.positivity_floor {
            self.positivity_floor
        } else {
            -self.positivity_floor
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationSchedule {
    half_lengths: Vec<f64>,
    target_h: f64,
}

impl ContinuationSchedule {
    pub fn new(half_lengths: Vec<f64>, target_h: f64) -> Result<Self, SolveError> {
        if half_lengths.is_empty() {
            return Err(SolveError::InvalidOptions("empty R schedule".into()));
        }
        if half_lengths.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(SolveError::InvalidOptions(
                "R values must be positive".into(),
            ));
        }
        if half_lengths.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SolveError::InvalidOptions(
                "R schedule must be strictly increasing".into(),
            ));
        }
        if !(target_h.is_finite() && target_h > 0.0) {
            return Err(SolveError::InvalidOptions("h must be positive".into()));
        }
        Ok(Self {
            half_lengths,
            target_h,
        })
    }

    pub fn half_lengths(&self) -> &[f64] {
        &self.half_lengths
    }

    pub fn target_h(&self) -> f64 {
        self.target_h
    }

    pub fn final_half_length(&self) -> f64 {
        *self.half_lengths.last().unwrap()
    }
}

/// One line of a convergence trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub stage: usize,
    pub half_length: f64,
    pub iter: usize,
    pub residual: f64,
    pub step: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub entries: Vec<TraceEntry>,
}

impl Trace {
    /// `stage R iter residual step_length`, one line per Newton iteration.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let _ = writeln!(
                out,
                "{} {:.16e} {} {:.16e} {:.16e}",
                e.stage, e.half_length, e.iter, e.residual, e.step
            );
        }
        out
    }

    /// Newton steps taken in each stage.
    pub fn iterations_per_stage(&self) -> Vec<usize> {
        let mut out: Vec<usize> = Vec::new();
        for e in &self.entries {
            if e.stage >= out.len() {
                out.resize(e.stage + 1, 0);
            }
            if e.step > 0.0 {
                out[e.stage] += 1;
            }
        }
        out
    }

    fn record(&mut self, stage: usize, half_length: f64) -> impl FnMut(IterRecord) + '_ {
        move |rec| {
            self.entries.push(TraceEntry {
                stage,
                half_length,
                iter: rec.iter,
                residual: rec.residual,
                step: rec.step,
            })
        }
    }
}

/// tanh wall from `(a, b)` to `(b, a)` with the Dirichlet values pinned.
pub fn initial_guess(grid: Grid, eq: &Equilibria, steepness: f64) -> Result<Profile, SolveError> {
    let (a, b) = eq.ab().ok_or_else(|| {
        ModelError::InvalidParams("no ordered end states (a, b) for a wall guess".into())
    })?;
    let (mean, half_gap) = (0.5 * (a + b), 0.5 * (b - a));
    let (_, mut u, mut v) = Profile::from_fn(grid, |x| {
        let t = (steepness * x).tanh();
        // clamped: rounding may step an ulp outside [a, b]
        (
            (mean + half_gap * t).clamp(a, b),
            (mean - half_gap * t).clamp(a, b),
        )
    })?
    .into_parts();
    let n = grid.len();
    u[0] = a;
    v[0] = b;
    u[n - 1] = b;
    v[n - 1] = a;
    Ok(Profile::new(grid, u, v)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Boundary {
    /// Endpoint values fixed; unknowns are the interior nodes.
    Dirichlet,
    /// Zero-flux endpoints via the reflected ghost node; every node unknown.
    Neumann,
}

struct LineSystem<'a> {
    p: &'a Params,
    grid: Grid,
    boundary: Boundary,
    left: (f64, f64),
    right: (f64, f64),
    lower: f64,
}

impl LineSystem<'_> {
    fn nodes(&self) -> usize {
        match self.boundary {
            Boundary::Dirichlet => self.grid.n_interior(),
            Boundary::Neumann => self.grid.len(),
        }
    }

    /// Values of `(u, v)` at unknown index `k ± 1`, including boundary data.
    #[inline]
    fn neighbour(&self, x: &[f64], k: isize) -> (f64, f64) {
        let m = self.nodes() as isize;
        match self.boundary {
            Boundary::Dirichlet => {
                if k < 0 {
                    self.left
                } else if k >= m {
                    self.right
                } else {
                    (x[2 * k as usize], x[2 * k as usize + 1])
                }
            }
            Boundary::Neumann => {
                let j = if k < 0 {
                    1
                } else if k >= m {
                    m - 2
                } else {
                    k
                } as usize;
                (x[2 * j], x[2 * j + 1])
            }
        }
    }
}

impl NewtonSystem for LineSystem<'_> {
    fn unknowns(&self) -> usize {
        2 * self.nodes()
    }

    fn residual(&self, x: &[f64], r: &mut [f64]) {
        let inv_h2 = 1.0 / self.grid.spacing().powi(2);
        for k in 0..self.nodes() {
            let (ul, vl) = self.neighbour(x, k as isize - 1);
            let (ur, vr) = self.neighbour(x, k as isize + 1);
            let (u, v) = (x[2 * k], x[2 * k + 1]);
            let (f1, f2) = rhs(self.p, u, v);
            r[2 * k] = (ul - 2.0 * u + ur) * inv_h2 - f1;
            r[2 * k + 1] = (vl - 2.0 * v + vr) * inv_h2 - f2;
        }
    }

    fn solve_shifted(&self, x: &[f64], shift: f64, rhs: &mut [f64]) -> Result<(), SolveError> {
        let m = self.nodes();
        let inv_h2 = 1.0 / self.grid.spacing().powi(2);
        let mut mat = BlockTridiag::with_len(m);
        for k in 0..m {
            let j = jacobian(self.p, x[2 * k], x[2 * k + 1]);
            let d = -2.0 * inv_h2 - shift;
            mat.diag[k] = [[d - j[0][0], -j[0][1]], [-j[1][0], d - j[1][1]]];
            mat.lower[k] = scalar(inv_h2);
            mat.upper[k] = scalar(inv_h2);
        }
        if self.boundary == Boundary::Neumann {
            mat.upper[0] = scalar(2.0 * inv_h2);
            mat.lower[m - 1] = scalar(2.0 * inv_h2);
        }
        mat.solve(rhs)
            .map_err(|e| SolveError::SingularJacobian { block: e.0 })
    }

    fn admissible(&self, x: &[f64]) -> bool {
        x.iter().all(|&w| w >= self.lower)
    }

    fn indefinite_shift(&self, x: &[f64]) -> f64 {
        if self.boundary == Boundary::Dirichlet {
            return 0.0;
        }
        // pseudo-timestep: enough to make −J − σ negative definite node-wise
        let mut worst = 0.0f64;
        for k in 0..self.nodes() {
            let j = jacobian(self.p, x[2 * k], x[2 * k + 1]);
            let tr = j[0][0] + j[1][1];
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
            let lmin = 0.5 * tr - disc;
            worst = worst.max(-lmin);
        }
        2.0 * worst
    }
}

fn interleave(u: &[f64], v: &[f64]) -> Vec<f64> {
    u.iter().zip(v).flat_map(|(a, b)| [*a, *b]).collect()
}

/// Discrete residual of the Dirichlet problem at interior nodes, interleaved.
pub fn residual(p: &Params, prof: &Profile) -> Vec<f64> {
    let n = prof.grid().len();
    let (u, v) = (prof.u(), prof.v());
    let sys = LineSystem {
        p,
        grid: *prof.grid(),
        boundary: Boundary::Dirichlet,
        left: (u[0], v[0]),
        right: (u[n - 1], v[n - 1]),
        lower: 0.0,
    };
    let x = interleave(&u[1..n - 1], &v[1..n - 1]);
    let mut r = vec![0.0; x.len()];
    sys.residual(&x, &mut r);
    r
}

/// Residual with zero-flux endpoint stencils, all nodes, interleaved.
pub fn residual_neumann(p: &Params, prof: &Profile) -> Vec<f64> {
    let sys = LineSystem {
        p,
        grid: *prof.grid(),
        boundary: Boundary::Neumann,
        left: (0.0, 0.0),
        right: (0.0, 0.0),
        lower: 0.0,
    };
    let x = interleave(prof.u(), prof.v());
    let mut r = vec![0.0; x.len()];
    sys.residual(&x, &mut r);
    r
}

fn check_dirichlet_data(guess: &Profile, a: f64, b: f64) -> Result<(), SolveError> {
    let n = guess.grid().len();
    let (u, v) = (guess.u(), guess.v());
    let tol = 1e-12;
    if (u[0] - a).abs() > tol
        || (v[0] - b).abs() > tol
        || (u[n - 1] - b).abs() > tol
        || (v[n - 1] - a).abs() > tol
    {
        return Err(SolveError::InvalidOptions(
            "guess does not carry the Dirichlet data (a,b) at -R and (b,a) at R".into(),
        ));
    }
    Ok(())
}

fn solve_dirichlet(
    p: &Params,
    grid: Grid,
    guess: &Profile,
    opts: &SolveOptions,
    log: &mut dyn FnMut(IterRecord),
) -> Result<Profile, SolveError> {
    opts.validate()?;
    let eq = equilibria(p);
    let (a, b) = eq
        .ab()
        .ok_or(ModelError::ConstantOnly { ratio: p.ratio() })?;
    if guess.grid() != &grid {
        return Err(SolveError::InvalidOptions(
            "guess is not on the solve grid".into(),
        ));
    }
    check_dirichlet_data(guess, a, b)?;
    let n = grid.len();
    if a == b {
        // ω/α = 1/2: both end states collapse onto (c, c)
        log(IterRecord {
            iter: 0,
            residual: 0.0,
            step: 0.0,
        });
        return Ok(Profile::constant(grid, a, a)?);
    }

    let sys = LineSystem {
        p,
        grid,
        boundary: Boundary::Dirichlet,
        left: (a, b),
        right: (b, a),
        lower: opts.lower_bound(a),
    };
    let mut x = interleave(&guess.u()[1..n - 1], &guess.v()[1..n - 1]);
    if !sys.admissible(&x) {
        return Err(SolveError::PositivityLost { iter: 0 });
    }
    newton::solve(&sys, &mut x, opts, log)?;

    let mut u = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    u.push(a);
    v.push(b);
    for k in 0..grid.n_interior() {
        u.push(x[2 * k]);
        v.push(x[2 * k + 1]);
    }
    u.push(b);
    v.push(a);
    Ok(Profile::new(grid, u, v)?)
}

/// Damped Newton for the wall on `[-R, R]` with Dirichlet data `(a,b)` at
/// `-R` and `(b,a)` at `R`.
pub fn solve_bvp(
    p: &Params,
    grid: Grid,
    guess: &Profile,
    opts: &SolveOptions,
) -> Result<Profile, SolveError> {
    solve_dirichlet(p, grid, guess, opts, &mut |_| {})
}

/// As [`solve_bvp`], appending each iteration to `trace` as stage 0.
pub fn solve_bvp_traced(
    p: &Params,
    grid: Grid,
    guess: &Profile,
    opts: &SolveOptions,
    trace: &mut Trace,
) -> Result<Profile, SolveError> {
    let mut log = trace.record(0, grid.half_length());
    solve_dirichlet(p, grid, guess, opts, &mut log)
}

/// Default tanh steepness: the slow decay rate of the linearization.
pub fn default_steepness(p: &Params) -> Result<f64, SolveError> {
    Ok(linear_data(p)?.lambda_minus)
}

/// Pads `prev` with the end states onto the longer `grid`.
///
/// The finite-interval solution is swap-reflection symmetric about `x = 0`,
/// which is where the next stage's solution sits too, so the padded guess is
/// not translated; shifting it to the `(a+b)/2` crossing would leave an error
/// along the nearly null translation mode of the longer interval.
fn extend(prev: &Profile, grid: Grid, eq: &Equilibria) -> Result<Profile, SolveError> {
    let (a, b) = eq.ab().ok_or(GridError::NotACrossing)?;
    // outside the old interval the cubic sampler clamps to the endpoint values,
    // which are exactly the end states
    let ext = prev.resample(grid, 0.0);
    let (g, mut u, mut v) = ext.into_parts();
    let n = g.len();
    u[0] = a;
    v[0] = b;
    u[n - 1] = b;
    v[n - 1] = a;
    Ok(Profile::new(g, u, v)?)
}

/// Continuation in the interval half-length. Stage `s` starts from the
/// stage `s-1` solution padded with the end states. Returned stages are the
/// raw Dirichlet solutions; compare them after [`crate::grid1d::recenter`].
pub fn continue_in_r(
    p: &Params,
    sched: &ContinuationSchedule,
    opts: &SolveOptions,
) -> Result<Vec<Profile>, SolveError> {
    equilibria(p).wall_states(p)?;
    continue_in_r_with(p, sched, opts, default_steepness(p)?, &mut Trace::default())
}

pub fn continue_in_r_with(
    p: &Params,
    sched: &ContinuationSchedule,
    opts: &SolveOptions,
    steepness: f64,
    trace: &mut Trace,
) -> Result<Vec<Profile>, SolveError> {
    let eq = equilibria(p);
    eq.wall_states(p)?;
    let mut stages: Vec<Profile> = Vec::with_capacity(sched.half_lengths().len());
    for (stage, &half) in sched.half_lengths().iter().enumerate() {
        let wrap = |e: SolveError| SolveError::Stage {
            stage,
            half_length: half,
            source: Box::new(e),
        };
        let grid = Grid::with_spacing(half, sched.target_h()).map_err(|e| wrap(e.into()))?;
        let guess = match stages.last() {
            None => initial_guess(grid, &eq, steepness),
            Some(prev) => extend(prev, grid, &eq),
        }
        .map_err(wrap)?;
        let mut log = trace.record(stage, half);
        let sol = solve_dirichlet(p, grid, &guess, opts, &mut log).map_err(wrap)?;
        stages.push(sol);
    }
    Ok(stages)
}

/// Continuation ending exactly on `final_grid` (useful when the last grid is
/// prescribed by node count rather than spacing).
pub fn solve_on_grid(
    p: &Params,
    final_grid: Grid,
    opts: &SolveOptions,
    steepness: f64,
    trace: &mut Trace,
) -> Result<Profile, SolveError> {
    let eq = equilibria(p);
    eq.wall_states(p)?;
    let r = final_grid.half_length();
    let h = final_grid.spacing();
    let lam = default_steepness(p)?;
    let mut halves = Vec::new();
    let mut s = 5.0 / lam;
    while s < r {
        halves.push(s);
        s *= 2.0;
    }
    let prev = if halves.is_empty() {
        None
    } else {
        let sched = ContinuationSchedule::new(halves, h)?;
        continue_in_r_with(p, &sched, opts, steepness, trace)?.pop()
    };
    let stage = trace.entries.last().map_or(0, |e| e.stage + 1);
    let guess = match &prev {
        None => initial_guess(final_grid, &eq, steepness)?,
        Some(prev) => extend(prev, final_grid, &eq)?,
    };
    let mut log = trace.record(stage, r);
    solve_dirichlet(p, final_grid, &guess, opts, &mut log).map_err(|e| SolveError::Stage {
        stage,
        half_length: r,
        source: Box::new(e),
    })
}

/// Newton relaxation with zero-flux endpoints. In the constant-only regime the
/// only positive solution is `(c, c)`.
pub fn relax_neumann(
    p: &Params,
    grid: Grid,
    guess: &Profile,
    opts: &SolveOptions,
) -> Result<Profile, SolveError> {
    opts.validate()?;
    if guess.grid() != &grid {
        return Err(SolveError::InvalidOptions(
            "guess is not on the solve grid".into(),
        ));
    }
    let sys = LineSystem {
        p,
        grid,
        boundary: Boundary::Neumann,
        left: (0.0, 0.0),
        right: (0.0, 0.0),
        lower: opts.positivity_floor,
    };
    let mut x = interleave(guess.u(), guess.v());
    if !sys.admissible(&x) {
        return Err(SolveError::PositivityLost { iter: 0 });
    }
    newton::solve(&sys, &mut x, opts, &mut |_| {})?;
    let (u, v): (Vec<f64>, Vec<f64>) = x.chunks(2).map(|c| (c[0], c[1])).unzip();
    Ok(Profile::new(grid, u, v)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::newton::sup;

    fn p(alpha: f64, omega: f64) -> Params {
        Params::new(alpha, omega).unwrap()
    }

    #[test]
    fn guess_properties() {
        let q = p(2.0, 0.5);
        let eq = equilibria(&q);
        let (a, b) = eq.ab().unwrap();
        let g = Grid::with_spacing(10.0, 0.1).unwrap();
        let guess = initial_guess(g, &eq, 1.0).unwrap();
        let mid = g.len() / 2;
        assert!((guess.u()[mid] - 0.5 * (a + b)).abs() < 1e-15);
        assert!((guess.v()[mid] - 0.5 * (a + b)).abs() < 1e-15);
        let n = g.len();
        for i in 0..n {
            assert_eq!(guess.v()[i], guess.u()[n - 1 - i]);
        }
        let sharp = initial_guess(g, &eq, 1e4).unwrap();
        for i in 0..n {
            let x = g.node(i);
            if x >= g.spacing() - 1e-12 {
                assert!((sharp.u()[i] - b).abs() < 1e-14);
            } else if x <= -g.spacing() + 1e-12 {
                assert!((sharp.u()[i] - a).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn constant_profile_has_zero_residual() {
        let q = p(2.0, 0.5);
        let c = equilibria(&q).c;
        let g = Grid::new(3.0, 29).unwrap();
        let prof = Profile::constant(g, c, c).unwrap();
        assert!(sup(&residual(&q, &prof)) < 1e-15);
        assert!(sup(&residual_neumann(&q, &prof)) < 1e-15);
    }

    #[test]
    fn solves_and_returns_fast_from_solution() {
        let q = p(2.0, 0.5);
        let eq = equilibria(&q);
        let (a, b) = eq.ab().unwrap();
        let g = Grid::with_spacing(10.0, 0.02).unwrap();
        let guess = initial_guess(g, &eq, 1.0).unwrap();
        let r0 = sup(&residual(&q, &guess));
        assert!(r0 > 1e-3);
        let mut trace = Trace::default();
        let sol = solve_bvp_traced(&q, g, &guess, &SolveOptions::default(), &mut trace).unwrap();
        assert!(sup(&residual(&q, &sol)) <= 1e-10);
        let n = g.len();
        assert!(sol.u()[1..n - 1].iter().all(|&u| a < u && u < b));
        // residual history decreases once damping has engaged
        let hist: Vec<f64> = trace.entries.iter().map(|e| e.residual).collect();
        assert!(hist.windows(2).all(|w| w[1] < w[0]), "{hist:?}");

        let mut again = Trace::default();
        solve_bvp_traced(&q, g, &sol, &SolveOptions::default(), &mut again).unwrap();
        assert!(again.iterations_per_stage()[0] <= 2);
    }

    #[test]
    fn degenerate_ratio_returns_constant() {
        let q = p(2.0, 1.0);
        let eq = equilibria(&q);
        let g = Grid::new(5.0, 99).unwrap();
        let a = eq.a().unwrap();
        let guess = Profile::constant(g, a, a).unwrap();
        let sol = solve_bvp(&q, g, &guess, &SolveOptions::default()).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!(sol.distance_to_constant(r, r) < 1e-15);
        assert!(sup(&residual(&q, &sol)) < 1e-15);
    }

    #[test]
    fn constant_regime_refuses_wall() {
        let q = p(1.0, 1.0);
        let sched = ContinuationSchedule::new(vec![5.0], 0.1).unwrap();
        let err = continue_in_r(&q, &sched, &SolveOptions::default()).unwrap_err();
        assert_eq!(err.name(), "ConstantOnly");
    }

    #[test]
    fn schedule_validation() {
        assert!(ContinuationSchedule::new(vec![], 0.1).is_err());
        assert!(ContinuationSchedule::new(vec![5.0, 5.0], 0.1).is_err());
        assert!(ContinuationSchedule::new(vec![5.0, 2.0], 0.1).is_err());
        assert!(ContinuationSchedule::new(vec![5.0], 0.0).is_err());
        let bad = [
            SolveOptions {
                residual_tol: 0.0,
                ..SolveOptions::default()
            },
            SolveOptions {
                residual_tol: f64::NAN,
                ..SolveOptions::default()
            },
            SolveOptions {
                max_newton_iters: 0,
                ..SolveOptions::default()
            },
            SolveOptions {
                shift_scale: -1.0,
                ..SolveOptions::default()
            },
        ];
        for o in bad {
            assert!(o.validate().is_err(), "{o:?}");
        }
    }

    #[test]
    fn single_stage_equals_direct_solve() {
        let q = p(1.0, 0.2);
        let eq = equilibria(&q);
        let k = default_steepness(&q).unwrap();
        let sched = ContinuationSchedule::new(vec![8.0], 0.02).unwrap();
        let stages = continue_in_r(&q, &sched, &SolveOptions::default()).unwrap();
        let g = Grid::with_spacing(8.0, 0.02).unwrap();
        let direct = solve_bvp(
            &q,
            g,
            &initial_guess(g, &eq, k).unwrap(),
            &SolveOptions::default(),
        )
        .unwrap();
        assert_eq!(stages.len(), 1);
        assert_eq!(stages[0], direct);
    }

    #[test]
    fn neumann_from_constant_returns_immediately() {
        let q = p(1.0, 1.0);
        let c = equilibria(&q).c;
        let g = Grid::new(5.0, 49).unwrap();
        let guess = Profile::constant(g, c, c).unwrap();
        let sol = relax_neumann(&q, g, &guess, &SolveOptions::default()).unwrap();
        assert!(sol.distance_to_constant(c, c) < 1e-14);
    }

    #[test]
    fn neumann_rejects_nonpositive_guess() {
        let q = p(1.0, 1.0);
        let g = Grid::new(5.0, 49).unwrap();
        let guess = Profile::constant(g, -0.1, 0.5).unwrap();
        assert!(matches!(
            relax_neumann(&q, g, &guess, &SolveOptions::default()),
            Err(SolveError::PositivityLost { iter: 0 })
        ));
    }
}
