//! Walls on a periodic strip `[0, L') × [-R, R]`: relax a perturbed copy of
//! the 1D wall and check the result no longer depends on `x'`.
//!
//! The Newton step uses the Jacobian averaged over each row `x_N = const`,
//! which commutes with translations in `x'`; a DFT in `x'` then splits the
//! linear solve into one block-tridiagonal system per Fourier mode. The
//! averaged Jacobian is exact at an `x'`-independent field, so the iteration
//! is a chord method that becomes Newton at the solution.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;
use thiserror::Error;

use crate::certifier::{certify_monotone, refs, sliding_distance, CheckRecord, Target, Tolerances};
use crate::grid1d::{Grid, GridError, Profile};
use crate::linalg::{scalar, BlockTridiag};
use crate::model::{equilibria, jacobian, rhs, Mat2, Params};
use crate::newton::{self, NewtonSystem};
use crate::solver1d::{default_steepness, solve_on_grid, SolveError, SolveOptions, Trace};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StripError {
    #[error("invalid strip grid: {0}")]
    InvalidGrid(String),
    #[error("perturbation amplitude {amplitude} outside [0, {max}] (0.1·(b−a))")]
    InvalidPerturbation { amplitude: f64, max: f64 },
    #[error(transparent)]
    Solve(#[from] SolveError),
}

impl StripError {
    pub fn name(&self) -> &'static str {
        match self {
            StripError::InvalidGrid(_) => "InvalidGrid",
            StripError::InvalidPerturbation { .. } => "InvalidPerturbation",
            StripError::Solve(e) => e.name(),
        }
    }
}

impl From<GridError> for StripError {
    fn from(e: GridError) -> Self {
        StripError::Solve(e.into())
    }
}

/// Periodic in `x'` with `n_prime` columns of spacing `L'/n'`; `x_N` uses a
/// [`Grid`] with `n_n` interior rows and Dirichlet rows at `±R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StripGrid {
    pub l_prime: f64,
    pub line: Grid,
    pub n_prime: usize,
}

impl StripGrid {
    pub fn new(
        l_prime: f64,
        half_length: f64,
        n_prime: usize,
        n_n: usize,
    ) -> Result<Self, StripError> {
        if !(l_prime.is_finite() && l_prime > 0.0) {
            return Err(StripError::InvalidGrid(format!("L' = {l_prime}")));
        }
        if n_prime < 2 {
            return Err(StripError::InvalidGrid(format!("n' = {n_prime}")));
        }
        Ok(Self {
            l_prime,
            line: Grid::new(half_length, n_n)?,
            n_prime,
        })
    }

    /// `L'` chosen so that cells are square.
    pub fn square_cells(half_length: f64, n_prime: usize, n_n: usize) -> Result<Self, StripError> {
        let line = Grid::new(half_length, n_n)?;
        Self::new(n_prime as f64 * line.spacing(), half_length, n_prime, n_n)
    }

    pub fn h_prime(&self) -> f64 {
        self.l_prime / self.n_prime as f64
    }

    pub fn x_prime(&self, j: usize) -> f64 {
        j as f64 * self.h_prime()
    }

    /// Rows including the two Dirichlet rows.
    pub fn rows(&self) -> usize {
        self.line.len()
    }
}

/// Node values, column-major: `u[j * rows + i]` at `(x'_j, x_N,i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StripField {
    pub grid: StripGrid,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl StripField {
    pub fn extend(grid: StripGrid, prof: &Profile) -> Self {
        let u = prof.u().repeat(grid.n_prime);
        let v = prof.v().repeat(grid.n_prime);
        Self { grid, u, v }
    }

    pub fn column(&self, j: usize) -> Profile {
        let rows = self.grid.rows();
        let s = j * rows..(j + 1) * rows;
        Profile::new(
            self.grid.line,
            self.u[s.clone()].to_vec(),
            self.v[s].to_vec(),
        )
        .expect("columns are finite and grid-sized")
    }

    pub fn x_prime_average(&self) -> Profile {
        let rows = self.grid.rows();
        let n = self.grid.n_prime as f64;
        let avg = |f: &[f64]| {
            (0..rows)
                .map(|i| f.chunks(rows).map(|c| c[i]).sum::<f64>() / n)
                .collect::<Vec<_>>()
        };
        Profile::new(self.grid.line, avg(&self.u), avg(&self.v)).expect("averages are finite")
    }

    /// Largest `max − min` over `x'` along any row, over both components.
    pub fn x_prime_spread(&self) -> f64 {
        self.row_stat(|vals| {
            let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
            hi - lo
        })
    }

    /// Largest variance over `x'` along any row, over both components.
    pub fn x_prime_variance(&self) -> f64 {
        self.row_stat(|vals| {
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            vals.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n
        })
    }

    fn row_stat(&self, stat: impl Fn(&[f64]) -> f64) -> f64 {
        let rows = self.grid.rows();
        let mut buf = Vec::with_capacity(self.grid.n_prime);
        let mut worst = 0.0f64;
        for f in [&self.u, &self.v] {
            for i in 0..rows {
                buf.clear();
                buf.extend(f.chunks(rows).map(|c| c[i]));
                worst = worst.max(stat(&buf));
            }
        }
        worst
    }

    /// CSV with header `xp,xN,u,v`, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let rows = self.grid.rows();
        let mut out = String::with_capacity(80 * self.u.len());
        out.push_str("xp,xN,u,v\n");
        for j in 0..self.grid.n_prime {
            let xp = self.grid.x_prime(j);
            for i in 0..rows {
                let k = j * rows + i;
                let _ = writeln!(
                    out,
                    "{:.16e},{:.16e},{:.16e},{:.16e}",
                    xp,
                    self.grid.line.node(i),
                    self.u[k],
                    self.v[k]
                );
            }
        }
        out
    }
}

struct StripSystem<'a> {
    p: &'a Params,
    grid: StripGrid,
    /// Dirichlet rows `(u, v)` at `-R` and `+R`.
    left: (f64, f64),
    right: (f64, f64),
    lower: f64,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl StripSystem<'_> {
    /// Interior rows.
    fn m(&self) -> usize {
        self.grid.line.n_interior()
    }

    #[inline]
    fn idx(&self, j: usize, i: usize) -> usize {
        2 * (j * self.m() + i)
    }

    /// `(u, v)` at column `j` (wrapped) and interior row `i` (`-1` and `m`
    /// address the Dirichlet rows).
    #[inline]
    fn at(&self, x: &[f64], j: usize, i: isize) -> (f64, f64) {
        if i < 0 {
            self.left
        } else if i as usize >= self.m() {
            self.right
        } else {
            let k = self.idx(j, i as usize);
            (x[k], x[k + 1])
        }
    }

    fn row_mean_jacobian(&self, x: &[f64]) -> Vec<Mat2> {
        let n = self.grid.n_prime;
        (0..self.m())
            .map(|i| {
                let mut acc = [[0.0; 2]; 2];
                for j in 0..n {
                    let k = self.idx(j, i);
                    let jac = jacobian(self.p, x[k], x[k + 1]);
                    for (a, b) in acc.iter_mut().flatten().zip(jac.iter().flatten()) {
                        *a += b;
                    }
                }
                acc.iter_mut().flatten().for_each(|a| *a /= n as f64);
                acc
            })
            .collect()
    }
}

impl NewtonSystem for StripSystem<'_> {
    fn unknowns(&self) -> usize {
        2 * self.m() * self.grid.n_prime
    }

    fn residual(&self, x: &[f64], r: &mut [f64]) {
        let n = self.grid.n_prime;
        let inv_h2 = 1.0 / self.grid.line.spacing().powi(2);
        let inv_hp2 = 1.0 / self.grid.h_prime().powi(2);
        for j in 0..n {
            let (jl, jr) = ((j + n - 1) % n, (j + 1) % n);
            for i in 0..self.m() {
                let ii = i as isize;
                let (u, v) = self.at(x, j, ii);
                let (ud, vd) = self.at(x, j, ii - 1);
                let (uu, vu) = self.at(x, j, ii + 1);
                let (ul, vl) = self.at(x, jl, ii);
                let (ur, vr) = self.at(x, jr, ii);
                let (f1, f2) = rhs(self.p, u, v);
                let k = self.idx(j, i);
                r[k] = (ud - 2.0 * u + uu) * inv_h2 + (ul - 2.0 * u + ur) * inv_hp2 - f1;
                r[k + 1] = (vd - 2.0 * v + vu) * inv_h2 + (vl - 2.0 * v + vr) * inv_hp2 - f2;
            }
        }
    }

    fn solve_shifted(&self, x: &[f64], shift: f64, rhs: &mut [f64]) -> Result<(), SolveError> {
        let n = self.grid.n_prime;
        let m = self.m();
        let inv_h2 = 1.0 / self.grid.line.spacing().powi(2);
        let hp = self.grid.h_prime();
        let jbar = self.row_mean_jacobian(x);

        // DFT along x' of each (row, component) sequence
        let mut coeffs = vec![Complex64::new(0.0, 0.0); 2 * m * n];
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..m {
            for c in 0..2 {
                for (j, z) in line.iter_mut().enumerate() {
                    *z = Complex64::new(rhs[self.idx(j, i) + c], 0.0);
                }
                self.fft.process(&mut line);
                for (mode, z) in line.iter().enumerate() {
                    coeffs[2 * (mode * m + i) + c] = *z;
                }
            }
        }

        let mut mat = BlockTridiag::with_len(m);
        let mut re = vec![0.0; 2 * m];
        let mut im = vec![0.0; 2 * m];
        for mode in 0..n {
            let s = (std::f64::consts::PI * mode as f64 / n as f64).sin();
            let sym = 4.0 * s * s / (hp * hp);
            for (i, jb) in jbar.iter().enumerate() {
                let d = -2.0 * inv_h2 - sym - shift;
                mat.diag[i] = [[d - jb[0][0], -jb[0][1]], [-jb[1][0], d - jb[1][1]]];
                mat.lower[i] = scalar(inv_h2);
                mat.upper[i] = scalar(inv_h2);
            }
            let block = &mut coeffs[2 * mode * m..2 * (mode + 1) * m];
            for (k, z) in block.iter().enumerate() {
                re[k] = z.re;
                im[k] = z.im;
            }
            let fail =
                |e: crate::linalg::SingularPivot| SolveError::SingularJacobian { block: e.0 };
            mat.solve(&mut re).map_err(fail)?;
            mat.solve(&mut im).map_err(fail)?;
            for (k, z) in block.iter_mut().enumerate() {
                *z = Complex64::new(re[k], im[k]);
            }
        }

        let scale = 1.0 / n as f64;
        for i in 0..m {
            for c in 0..2 {
                for (mode, z) in line.iter_mut().enumerate() {
                    *z = coeffs[2 * (mode * m + i) + c];
                }
                self.ifft.process(&mut line);
                for (j, z) in line.iter().enumerate() {
                    let k = self.idx(j, i) + c;
                    rhs[k] = z.re * scale;
                }
            }
        }
        Ok(())
    }

    fn admissible(&self, x: &[f64]) -> bool {
        x.iter().all(|&w| w >= self.lower)
    }
}

/// Converged strip field together with the 1D wall it was started from.
#[derive(Debug, Clone)]
pub struct StripRun {
    pub field: StripField,
    pub base: Profile,
    pub iterations: usize,
}

/// Residual tolerance used for strip relaxation.
pub const STRIP_RESIDUAL_TOL: f64 = 1e-8;

/// Extra full chord steps after convergence; see `newton::polish`.
const POLISH_STEPS: usize = 3;

/// Largest admissible perturbation as a fraction of `b − a`.
pub const MAX_PERTURBATION_FRACTION: f64 = 0.1;

/// Solves the 1D wall on the strip's `x_N` grid, extends it in `x'`, adds a
/// seeded uniform perturbation of the given amplitude to every interior node
/// (clipped to stay admissible), and relaxes with the mode-split chord Newton
/// iteration to sup residual [`STRIP_RESIDUAL_TOL`] (or `opts.residual_tol`
/// if that is larger), then polishes toward roundoff where full steps still
/// converge, so that column-wise differences are resolved in long tails.
pub fn relax_strip(
    p: &Params,
    grid: StripGrid,
    amplitude: f64,
    seed: u64,
    opts: &SolveOptions,
) -> Result<StripRun, StripError> {
    let eq = equilibria(p);
    let (a, b) = eq.wall_states(p).map_err(SolveError::from)?;
    let max = MAX_PERTURBATION_FRACTION * (b - a);
    if !(amplitude.is_finite() && (0.0..=max).contains(&amplitude)) {
        return Err(StripError::InvalidPerturbation { amplitude, max });
    }
    let mut opts = *opts;
    opts.residual_tol = opts.residual_tol.max(STRIP_RESIDUAL_TOL);
    opts.validate()?;

    let base = solve_on_grid(
        p,
        grid.line,
        &opts,
        default_steepness(p)?,
        &mut Trace::default(),
    )?;

    let lower = opts.lower_bound(a);
    let clip = lower.max(0.0) + opts.positivity_floor;
    let m = grid.line.n_interior();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Vec::with_capacity(2 * m * grid.n_prime);
    for _ in 0..grid.n_prime {
        for i in 1..=m {
            for f in [base.u()[i], base.v()[i]] {
                let noise = if amplitude > 0.0 {
                    amplitude * rng.random_range(-1.0..=1.0)
                } else {
                    0.0
                };
                x.push(if noise == 0.0 {
                    f
                } else {
                    (f + noise).max(clip)
                });
            }
        }
    }

    let mut planner = FftPlanner::new();
    let sys = StripSystem {
        p,
        grid,
        left: (a, b),
        right: (b, a),
        lower,
        fft: planner.plan_fft_forward(grid.n_prime),
        ifft: planner.plan_fft_inverse(grid.n_prime),
    };
    let mut iterations = newton::solve(&sys, &mut x, &opts, &mut |_| {})?;
    // an unperturbed start is already the 1D solution; leave it as is
    if iterations > 0 {
        iterations += newton::polish(&sys, &mut x, POLISH_STEPS)?;
    }

    let rows = grid.rows();
    let mut u = Vec::with_capacity(rows * grid.n_prime);
    let mut v = Vec::with_capacity(rows * grid.n_prime);
    for col in x.chunks(2 * m) {
        u.push(a);
        v.push(b);
        for node in col.chunks(2) {
            u.push(node[0]);
            v.push(node[1]);
        }
        u.push(b);
        v.push(a);
    }
    Ok(StripRun {
        field: StripField { grid, u, v },
        base,
        iterations,
    })
}

/// Independence of `x'`, column-wise monotonicity, and agreement of the
/// `x'`-average with the 1D wall after recentering.
pub fn certify_strip(
    p: &Params,
    run: &StripRun,
    spread_tol: f64,
    tol: &Tolerances,
) -> Vec<CheckRecord> {
    let f = &run.field;
    let spread = f.x_prime_spread();
    let mut worst_margin = f64::INFINITY;
    let mut all_monotone = true;
    for j in 0..f.grid.n_prime {
        for rec in certify_monotone(&f.column(j), tol) {
            worst_margin = worst_margin.min(rec.measured);
            all_monotone &= rec.pass;
        }
    }
    let avg_dist =
        sliding_distance(&equilibria(p), &f.x_prime_average(), &run.base).unwrap_or(f64::INFINITY);
    vec![
        CheckRecord::new(
            "x_prime_spread",
            refs::ONE_DIMENSIONAL,
            spread,
            Target::Value(0.0),
            spread_tol,
            spread <= spread_tol,
        ),
        CheckRecord::new(
            "column_monotone",
            refs::MONOTONICITY,
            worst_margin,
            Target::Value(0.0),
            0.0,
            all_monotone,
        ),
        CheckRecord::new(
            "x_prime_average_matches_1d",
            refs::ONE_DIMENSIONAL,
            avg_dist,
            Target::Value(0.0),
            tol.sliding,
            avg_dist <= tol.sliding,
        ),
    ]
}
