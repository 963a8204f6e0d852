//! Uniform grids on `[-R, R]`, node-aligned profiles and finite differences.

use std::fmt::Write as _;
use std::io::BufRead;

use thiserror::Error;

use crate::model::Equilibria;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("no level crossing of u through (a+b)/2")]
    NotACrossing,
    #[error("profile csv, line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Uniform grid with `n_interior + 2` nodes from `-R` to `R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    half_length: f64,
    n_interior: usize,
}

impl Grid {
    pub fn new(half_length: f64, n_interior: usize) -> Result<Self, GridError> {
        if !half_length.is_finite() || half_length <= 0.0 {
            return Err(GridError::InvalidGrid(format!(
                "half length must be finite and > 0, got {half_length}"
            )));
        }
        if n_interior < 3 {
            return Err(GridError::InvalidGrid(format!(
                "need at least 3 interior nodes, got {n_interior}"
            )));
        }
        Ok(Self {
            half_length,
            n_interior,
        })
    }

    /// Grid on `[-R, R]` whose spacing is as close as possible to `h`.
    pub fn with_spacing(half_length: f64, h: f64) -> Result<Self, GridError> {
        if !h.is_finite() || h <= 0.0 {
            return Err(GridError::InvalidGrid(format!(
                "spacing must be finite and > 0, got {h}"
            )));
        }
        let cells = (2.0 * half_length / h).round().max(4.0);
        Self::new(half_length, cells as usize - 1)
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn n_interior(&self) -> usize {
        self.n_interior
    }

    /// Total node count including both endpoints.
    pub fn len(&self) -> usize {
        self.n_interior + 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_length / (self.n_interior + 1) as f64
    }

    /// `x_i`, computed symmetrically so that both endpoints and (for odd
    /// `n_interior`) the midpoint are exact.
    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        let cells = (self.n_interior + 1) as f64;
        self.half_length * ((2.0 * i as f64 - cells) / cells)
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.node(i)).collect()
    }
}

/// `(u, v)` samples at every node of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    grid: Grid,
    u: Vec<f64>,
    v: Vec<f64>,
}

impl Profile {
    pub fn new(grid: Grid, u: Vec<f64>, v: Vec<f64>) -> Result<Self, GridError> {
        if u.len() != grid.len() || v.len() != grid.len() {
            return Err(GridError::InvalidProfile(format!(
                "expected {} samples, got u: {}, v: {}",
                grid.len(),
                u.len(),
                v.len()
            )));
        }
        if let Some(i) = (0..u.len()).find(|&i| !u[i].is_finite() || !v[i].is_finite()) {
            return Err(GridError::InvalidProfile(format!(
                "non-finite value at node {i}"
            )));
        }
        Ok(Self { grid, u, v })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> (f64, f64)) -> Result<Self, GridError> {
        let (u, v) = grid.nodes().into_iter().map(f).unzip();
        Self::new(grid, u, v)
    }

    pub fn constant(grid: Grid, u: f64, v: f64) -> Result<Self, GridError> {
        Self::new(grid, vec![u; grid.len()], vec![v; grid.len()])
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn into_parts(self) -> (Grid, Vec<f64>, Vec<f64>) {
        (self.grid, self.u, self.v)
    }

    /// `(u(-x), v(-x))` swapped: the image under the symmetry of the system
    /// that exchanges the two end states.
    pub fn swap_reflect(&self) -> Profile {
        let u = self.v.iter().rev().copied().collect();
        let v = self.u.iter().rev().copied().collect();
        Profile {
            grid: self.grid,
            u,
            v,
        }
    }

    /// Piecewise-cubic (4-point Lagrange) value at `x`; constant extension by
    /// the endpoint values outside `[-R, R]`.
    pub fn sample(&self, x: f64) -> (f64, f64) {
        (
            cubic_sample(&self.grid, &self.u, x),
            cubic_sample(&self.grid, &self.v, x),
        )
    }

    /// Samples `x ↦ self(x + shift)` onto `grid`. Endpoint values of the result
    /// are copied from this profile's endpoints.
    pub fn resample(&self, grid: Grid, shift: f64) -> Profile {
        let n = grid.len();
        let mut u = Vec::with_capacity(n);
        let mut v = Vec::with_capacity(n);
        for i in 0..n {
            let x = grid.node(i) + shift;
            u.push(cubic_sample(&self.grid, &self.u, x));
            v.push(cubic_sample(&self.grid, &self.v, x));
        }
        u[0] = self.u[0];
        v[0] = self.v[0];
        u[n - 1] = *self.u.last().unwrap();
        v[n - 1] = *self.v.last().unwrap();
        Profile { grid, u, v }
    }

    /// Sup-norm distance to the constant state `(cu, cv)`.
    pub fn distance_to_constant(&self, cu: f64, cv: f64) -> f64 {
        self.u
            .iter()
            .zip(&self.v)
            .map(|(u, v)| (u - cu).abs().max((v - cv).abs()))
            .fold(0.0, f64::max)
    }

    /// CSV with header `x,u,v`, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * self.grid.len());
        out.push_str("x,u,v\n");
        for i in 0..self.grid.len() {
            let _ = writeln!(
                out,
                "{:.16e},{:.16e},{:.16e}",
                self.grid.node(i),
                self.u[i],
                self.v[i]
            );
        }
        out
    }

    pub fn from_csv(reader: impl BufRead) -> Result<Profile, GridError> {
        let mut xs = Vec::new();
        let mut u = Vec::new();
        let mut v = Vec::new();
        let mut lines = reader.lines().enumerate();
        match lines.next() {
            Some((_, Ok(h))) if h.trim() == "x,u,v" => {}
            _ => {
                return Err(GridError::Parse {
                    line: 1,
                    msg: "expected header `x,u,v`".into(),
                })
            }
        }
        for (k, line) in lines {
            let line = line.map_err(|e| GridError::Parse {
                line: k + 1,
                msg: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(GridError::Parse {
                    line: k + 1,
                    msg: format!("expected 3 fields, got {}", fields.len()),
                });
            }
            let mut vals = [0.0; 3];
            for (slot, f) in vals.iter_mut().zip(&fields) {
                *slot = f.trim().parse().map_err(|e| GridError::Parse {
                    line: k + 1,
                    msg: format!("{e}: {f:?}"),
                })?;
            }
            xs.push(vals[0]);
            u.push(vals[1]);
            v.push(vals[2]);
        }
        if xs.len() < 5 {
            return Err(GridError::Parse {
                line: xs.len() + 1,
                msg: "need at least 5 nodes".into(),
            });
        }
        let half = -xs[0];
        let grid = Grid::new(half, xs.len() - 2)?;
        let tol = 1e-9 * half.max(1.0);
        if (xs[xs.len() - 1] - half).abs() > tol {
            return Err(GridError::InvalidGrid(
                "grid is not symmetric about 0".into(),
            ));
        }
        if let Some(i) = (0..xs.len()).find(|&i| (xs[i] - grid.node(i)).abs() > tol) {
            return Err(GridError::InvalidGrid(format!(
                "node {i} at {} is not on a uniform grid",
                xs[i]
            )));
        }
        Profile::new(grid, u, v)
    }
}

fn cubic_sample(grid: &Grid, f: &[f64], x: f64) -> f64 {
    let n = f.len();
    let r = grid.half_length();
    if x <= -r {
        return f[0];
    }
    if x >= r {
        return f[n - 1];
    }
    let h = grid.spacing();
    let t = (x + r) / h;
    let i = (t.floor() as usize).min(n - 2);
    // stencil i-1..=i+2, clamped into range
    let start = i.saturating_sub(1).min(n - 4);
    let s = t - start as f64;
    let (f0, f1, f2, f3) = (f[start], f[start + 1], f[start + 2], f[start + 3]);
    // Lagrange basis on nodes 0, 1, 2, 3
    let l0 = -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0;
    let l1 = s * (s - 2.0) * (s - 3.0) / 2.0;
    let l2 = -s * (s - 1.0) * (s - 3.0) / 2.0;
    let l3 = s * (s - 1.0) * (s - 2.0) / 6.0;
    f0 * l0 + f1 * l1 + f2 * l2 + f3 * l3
}

/// Central second differences at interior nodes.
pub fn second_derivative(prof: &Profile) -> (Vec<f64>, Vec<f64>) {
    let inv_h2 = 1.0 / prof.grid.spacing().powi(2);
    let d2 = |f: &[f64]| {
        f.windows(3)
            .map(|w| (w[0] - 2.0 * w[1] + w[2]) * inv_h2)
            .collect::<Vec<_>>()
    };
    (d2(&prof.u), d2(&prof.v))
}

/// First derivatives at all nodes: central inside, one-sided three-point at
/// the ends.
pub fn first_derivative(prof: &Profile) -> (Vec<f64>, Vec<f64>) {
    let h = prof.grid.spacing();
    let d1 = |f: &[f64]| {
        let n = f.len();
        let mut out = Vec::with_capacity(n);
        out.push((-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h));
        out.extend(f.windows(3).map(|w| (w[2] - w[0]) / (2.0 * h)));
        out.push((3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h));
        out
    };
    (d1(&prof.u), d1(&prof.v))
}

/// Trapezoid rule over the grid.
pub fn integrate(grid: &Grid, f: &[f64]) -> f64 {
    let n = f.len();
    let inner: f64 = f[1..n - 1].iter().sum();
    grid.spacing() * (inner + 0.5 * (f[0] + f[n - 1]))
}

/// Location where the cubic interpolant of `f` first crosses `level` upward.
fn upward_crossing(grid: &Grid, f: &[f64], level: f64) -> Option<f64> {
    let i = (0..f.len() - 1).find(|&i| f[i] < level && f[i + 1] >= level && f[i + 1] > f[i])?;
    let (mut lo, mut hi) = (grid.node(i), grid.node(i + 1));
    let g = |x: f64| cubic_sample(grid, f, x) - level;
    // secant start from the linear interpolant, then safeguarded Newton-bisection
    let mut x = lo + (level - f[i]) / (f[i + 1] - f[i]) * (hi - lo);
    let (mut glo, ghi) = (f[i] - level, f[i + 1] - level);
    if ghi == 0.0 {
        return Some(hi);
    }
    for _ in 0..100 {
        let gx = g(x);
        if gx == 0.0 {
            return Some(x);
        }
        if (gx < 0.0) == (glo < 0.0) {
            lo = x;
            glo = gx;
        } else {
            hi = x;
        }
        let dx = 1e-7 * grid.spacing();
        let slope = (g(x + dx) - g(x - dx)) / (2.0 * dx);
        let newton = x - gx / slope;
        x = if slope.is_finite() && slope != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if gx.abs() < 1e-15 || hi - lo < 1e-15 * grid.half_length() {
            break;
        }
    }
    Some(x)
}

/// Translates the profile so that `u(0) = (a+b)/2`, resampling onto the same
/// grid.
pub fn recenter(prof: &Profile, eq: &Equilibria) -> Result<Profile, GridError> {
    let mid = eq.midpoint().ok_or(GridError::NotACrossing)?;
    let x0 = upward_crossing(&prof.grid, &prof.u, mid).ok_or(GridError::NotACrossing)?;
    Ok(prof.resample(prof.grid, x0))
}

/// Position of the `(a+b)/2` crossing of `u`, if any.
pub fn crossing_point(prof: &Profile, eq: &Equilibria) -> Option<f64> {
    upward_crossing(&prof.grid, &prof.u, eq.midpoint()?)
}

/// Position where `u - v` first changes sign upward: the centre of the
/// swap-reflection symmetry of a wall.
pub fn symmetry_center(prof: &Profile) -> Option<f64> {
    let diff: Vec<f64> = prof.u.iter().zip(&prof.v).map(|(u, v)| u - v).collect();
    upward_crossing(&prof.grid, &diff, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{equilibria, Params};

    #[test]
    fn node_layout_is_exact() {
        let g = Grid::new(10.0, 1999).unwrap();
        assert_eq!(g.node(0), -10.0);
        assert_eq!(g.node(g.len() - 1), 10.0);
        assert_eq!(g.node(1000), 0.0);
        assert!((g.spacing() - 0.01).abs() < 1e-15);
        let g2 = Grid::with_spacing(10.0, 0.01).unwrap();
        assert_eq!(g, g2);
        assert!(Grid::new(1.0, 2).is_err());
        assert!(Grid::new(-1.0, 10).is_err());
    }

    #[test]
    fn profile_rejects_bad_input() {
        let g = Grid::new(1.0, 3).unwrap();
        assert!(Profile::new(g, vec![0.0; 4], vec![0.0; 5]).is_err());
        assert!(Profile::new(g, vec![0.0, 1.0, f64::NAN, 0.0, 0.0], vec![0.0; 5]).is_err());
    }

    #[test]
    fn second_derivative_examples() {
        let g = Grid::new(3.0, 59).unwrap();
        let c = Profile::constant(g, 0.3, 0.7).unwrap();
        let (du, dv) = second_derivative(&c);
        assert!(du.iter().chain(&dv).all(|d| *d == 0.0));

        let q = Profile::from_fn(g, |x| (x * x, 1.0 - x)).unwrap();
        let (du, dv) = second_derivative(&q);
        assert_eq!(du.len(), 59);
        assert!(du.iter().all(|d| (d - 2.0).abs() < 1e-10));
        assert!(dv.iter().all(|d| d.abs() < 1e-10));
    }

    #[test]
    fn second_derivative_is_second_order() {
        let err = |n: usize| {
            let g = Grid::new(3.0, n).unwrap();
            let p = Profile::from_fn(g, |x| (x.sin(), 0.0)).unwrap();
            let (du, _) = second_derivative(&p);
            (1..=n)
                .map(|i| (du[i - 1] + g.node(i).sin()).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(59) / err(119);
        assert!((ratio - 4.0).abs() < 0.4, "ratio {ratio}");
    }

    #[test]
    fn first_derivative_examples() {
        let g = Grid::new(2.0, 19).unwrap();
        let p = Profile::from_fn(g, |x| (3.0 * x - 1.0, -0.5 * x)).unwrap();
        let (du, dv) = first_derivative(&p);
        assert!(du.iter().all(|d| (d - 3.0).abs() < 1e-12));
        assert!(dv.iter().all(|d| (d + 0.5).abs() < 1e-12));

        let g = Grid::with_spacing(10.0, 0.01).unwrap();
        let p = Profile::from_fn(g, |x| (x.tanh(), 0.0)).unwrap();
        let (du, _) = first_derivative(&p);
        assert!((du[g.len() / 2] - 1.0).abs() < 1e-4);

        let p = Profile::from_fn(g, |x| (x.tanh() + 0.1 * x * x, (-x).exp())).unwrap();
        let (du, dv) = first_derivative(&p);
        let (ru, rv) = first_derivative(&p.swap_reflect());
        let n = g.len();
        for i in 0..n {
            assert!((ru[i] + dv[n - 1 - i]).abs() < 1e-9);
            assert!((rv[i] + du[n - 1 - i]).abs() < 1e-9);
        }
    }

    #[test]
    fn cubic_sampling_reproduces_cubics() {
        let g = Grid::new(1.0, 9).unwrap();
        let p = Profile::from_fn(g, |x| (x * x * x - x, 2.0 * x * x)).unwrap();
        for k in 0..=40 {
            let x = -1.0 + k as f64 * 0.05;
            let (u, v) = p.sample(x);
            assert!((u - (x * x * x - x)).abs() < 1e-13);
            assert!((v - 2.0 * x * x).abs() < 1e-13);
        }
    }

    fn tanh_wall(grid: Grid, eq: &Equilibria, shift: f64) -> Profile {
        let (a, b) = eq.ab().unwrap();
        let mut p = Profile::from_fn(grid, |x| {
            let t = (x - shift).tanh();
            (
                0.5 * (a + b) + 0.5 * (b - a) * t,
                0.5 * (a + b) - 0.5 * (b - a) * t,
            )
        })
        .unwrap()
        .into_parts();
        let n = grid.len();
        p.1[0] = a;
        p.2[0] = b;
        p.1[n - 1] = b;
        p.2[n - 1] = a;
        Profile::new(p.0, p.1, p.2).unwrap()
    }

    #[test]
    fn recenter_examples() {
        let eq = equilibria(&Params::new(2.0, 0.5).unwrap());
        let g = Grid::with_spacing(10.0, 0.01).unwrap();
        let mid = g.len() / 2;
        let centered = tanh_wall(g, &eq, 0.0);
        let again = recenter(&centered, &eq).unwrap();
        assert!(centered
            .u()
            .iter()
            .zip(again.u())
            .all(|(x, y)| (x - y).abs() < 1e-9));

        let shifted = tanh_wall(g, &eq, 0.5 * g.spacing());
        let fixed = recenter(&shifted, &eq).unwrap();
        assert!((fixed.u()[mid] - eq.midpoint().unwrap()).abs() < 1e-10);

        let shifted = tanh_wall(g, &eq, 1.37);
        let fixed = recenter(&shifted, &eq).unwrap();
        assert!((fixed.u()[mid] - eq.midpoint().unwrap()).abs() < 1e-10);
        let twice = recenter(&fixed, &eq).unwrap();
        let d = fixed
            .u()
            .iter()
            .zip(twice.u())
            .chain(fixed.v().iter().zip(twice.v()))
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(d < 1e-10, "idempotence {d}");

        let flat = Profile::constant(g, eq.c, eq.c).unwrap();
        assert_eq!(recenter(&flat, &eq), Err(GridError::NotACrossing));
    }

    #[test]
    fn csv_roundtrip_is_exact() {
        let g = Grid::new(4.0, 17).unwrap();
        let p = Profile::from_fn(g, |x| ((0.3 * x).tanh() / 3.0, (1.0 + x * x).ln())).unwrap();
        let csv = p.to_csv();
        assert!(csv.starts_with("x,u,v\n"));
        let q = Profile::from_csv(csv.as_bytes()).unwrap();
        assert_eq!(p, q);
        assert!(Profile::from_csv("x,y\n1,2".as_bytes()).is_err());
    }
}
