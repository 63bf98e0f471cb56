//! Radial motion laws `r_i(t)`, `r_o(t)` and their velocities.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectrum::ShellGeometry;

/// Radii and velocities at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionState {
    pub r_inner: f64,
    pub r_outer: f64,
    pub v_inner: f64,
    pub v_outer: f64,
}

impl MotionState {
    pub fn ratio(&self) -> f64 {
        self.r_outer / self.r_inner
    }
}

/// Short tag describing the law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MotionDescriptor {
    Static,
    Harmonic { eps_inner: f64, eps_outer: f64, varpi: f64 },
    Tabulated,
    Custom,
}

/// `r_alpha(t) = r_alpha (1 + eps_alpha sin(varpi t))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Harmonic {
    pub geometry: ShellGeometry,
    pub eps_inner: f64,
    pub eps_outer: f64,
    pub varpi: f64,
}

/// Rows `(t, r_i, r_o, v_i, v_o)` joined by cubic Hermite segments.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated {
    c: f64,
    rows: Vec<[f64; 5]>,
}

pub type StateFn = dyn Fn(f64) -> MotionState + Send + Sync;

/// A user-supplied law with known horizon and bandwidth.
#[derive(Clone)]
pub struct Custom {
    pub c: f64,
    pub horizon: f64,
    /// Largest angular frequency present in the motion.
    pub bandwidth: f64,
    pub state: Arc<StateFn>,
}

impl fmt::Debug for Custom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Custom")
            .field("c", &self.c)
            .field("horizon", &self.horizon)
            .field("bandwidth", &self.bandwidth)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum MotionLaw {
    Static(ShellGeometry),
    Harmonic(Harmonic),
    Tabulated(Tabulated),
    Custom(Custom),
}

/// Relative velocity tolerance for analytic laws.
pub const ANALYTIC_VELOCITY_REL: f64 = 1e-6;
/// Default relative velocity tolerance for tabulated trajectories.
pub const TABLE_VELOCITY_REL: f64 = 1e-2;

impl MotionLaw {
    pub fn fixed(geometry: ShellGeometry) -> Result<Self> {
        geometry.validate()?;
        Ok(Self::Static(geometry))
    }

    pub fn harmonic(geometry: ShellGeometry, eps_inner: f64, eps_outer: f64, varpi: f64) -> Result<Self> {
        geometry.validate()?;
        if !(eps_inner.is_finite() && eps_outer.is_finite()) {
            return Err(Error::Argument("amplitudes must be finite".into()));
        }
        if !(varpi.is_finite() && varpi > 0.0) {
            return Err(Error::Argument(format!("drive frequency must be positive, got {varpi}")));
        }
        if eps_inner.abs() >= 1.0 || eps_outer.abs() >= 1.0 {
            return Err(Error::Argument("amplitudes must satisfy |eps| < 1".into()));
        }
        if geometry.r_outer * (1.0 - eps_outer.abs()) <= geometry.r_inner * (1.0 + eps_inner.abs()) {
            return Err(Error::Argument("the shells would touch during the oscillation".into()));
        }
        let law = Self::Harmonic(Harmonic {
            geometry,
            eps_inner,
            eps_outer,
            varpi,
        });
        law.check_velocities(2.0 * std::f64::consts::PI / varpi, ANALYTIC_VELOCITY_REL)?;
        Ok(law)
    }

    /// Table rows must start at `t = 0` with strictly increasing times.
    pub fn tabulated(c: f64, rows: Vec<[f64; 5]>, velocity_rel: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::Argument(format!("wave speed must be positive, got {c}")));
        }
        if rows.len() < 2 {
            return Err(Error::Argument("a trajectory needs at least two rows".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            if let Some(bad) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::Argument(format!("trajectory row {}: column {} is not finite", i + 1, bad + 1)));
            }
            ShellGeometry::new(row[1], row[2], c)
                .map_err(|e| Error::Argument(format!("trajectory row {}: {e}", i + 1)))?;
        }
        if rows[0][0] != 0.0 {
            return Err(Error::Argument(format!("trajectory row 1: time must be 0, got {}", rows[0][0])));
        }
        for i in 1..rows.len() {
            if rows[i][0] <= rows[i - 1][0] {
                return Err(Error::Argument(format!(
                    "trajectory row {}: times must increase strictly",
                    i + 1
                )));
            }
        }
        check_table_velocities(&rows, velocity_rel)?;
        Ok(Self::Tabulated(Tabulated { c, rows }))
    }

    /// Wraps a closure; velocities are checked against finite differences over `[0, horizon]`.
    pub fn custom(c: f64, horizon: f64, bandwidth: f64, state: Arc<StateFn>) -> Result<Self> {
        if !(c.is_finite() && c > 0.0 && horizon.is_finite() && horizon > 0.0 && bandwidth >= 0.0) {
            return Err(Error::Argument("custom motion needs c > 0, horizon > 0, bandwidth >= 0".into()));
        }
        let law = Self::Custom(Custom {
            c,
            horizon,
            bandwidth,
            state,
        });
        law.check_velocities(horizon, ANALYTIC_VELOCITY_REL)?;
        Ok(law)
    }

    pub fn descriptor(&self) -> MotionDescriptor {
        match self {
            Self::Static(_) => MotionDescriptor::Static,
            Self::Harmonic(h) => MotionDescriptor::Harmonic {
                eps_inner: h.eps_inner,
                eps_outer: h.eps_outer,
                varpi: h.varpi,
            },
            Self::Tabulated(_) => MotionDescriptor::Tabulated,
            Self::Custom(_) => MotionDescriptor::Custom,
        }
    }

    pub fn c(&self) -> f64 {
        match self {
            Self::Static(g) => g.c,
            Self::Harmonic(h) => h.geometry.c,
            Self::Tabulated(t) => t.c,
            Self::Custom(c) => c.c,
        }
    }

    /// Last time at which the law is defined.
    pub fn horizon(&self) -> f64 {
        match self {
            Self::Static(_) | Self::Harmonic(_) => f64::INFINITY,
            Self::Tabulated(t) => t.rows.last().expect("validated")[0],
            Self::Custom(c) => c.horizon,
        }
    }

    /// Angular frequency scale of the motion; zero for static shells.
    pub fn bandwidth(&self) -> f64 {
        match self {
            Self::Static(_) => 0.0,
            Self::Harmonic(h) => h.varpi,
            Self::Tabulated(t) => {
                let dt = t.rows.windows(2).map(|w| w[1][0] - w[0][0]).fold(f64::INFINITY, f64::min);
                std::f64::consts::PI / dt
            }
            Self::Custom(c) => c.bandwidth,
        }
    }

    pub fn is_static(&self) -> bool {
        matches!(self, Self::Static(_))
    }

    /// State at `t`, without range or ordering checks.
    pub fn state_unchecked(&self, t: f64) -> MotionState {
        match self {
            Self::Static(g) => MotionState {
                r_inner: g.r_inner,
                r_outer: g.r_outer,
                v_inner: 0.0,
                v_outer: 0.0,
            },
            Self::Harmonic(h) => {
                let (sn, cs) = (h.varpi * t).sin_cos();
                let g = &h.geometry;
                MotionState {
                    r_inner: g.r_inner * (1.0 + h.eps_inner * sn),
                    r_outer: g.r_outer * (1.0 + h.eps_outer * sn),
                    v_inner: g.r_inner * h.eps_inner * h.varpi * cs,
                    v_outer: g.r_outer * h.eps_outer * h.varpi * cs,
                }
            }
            Self::Tabulated(tab) => tab.interpolate(t),
            Self::Custom(c) => (c.state)(t),
        }
    }

    pub fn state(&self, t: f64) -> Result<MotionState> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::Argument(format!("time must be finite and non-negative, got {t}")));
        }
        if t > self.horizon() * (1.0 + 1e-12) {
            return Err(Error::Domain(format!(
                "t = {t} lies beyond the motion horizon {}",
                self.horizon()
            )));
        }
        let s = self.state_unchecked(t);
        if !(s.r_inner > 0.0 && s.r_inner < s.r_outer) || ![s.v_inner, s.v_outer].iter().all(|v| v.is_finite()) {
            return Err(Error::Domain(format!(
                "invalid shell configuration at t = {t}: r_inner = {}, r_outer = {}",
                s.r_inner, s.r_outer
            )));
        }
        Ok(s)
    }

    /// Instantaneous geometry at `t`.
    pub fn geometry_at(&self, t: f64) -> Result<ShellGeometry> {
        let s = self.state(t)?;
        ShellGeometry::new(s.r_inner, s.r_outer, self.c())
    }

    /// Geometry at `t = 0`.
    pub fn reference(&self) -> ShellGeometry {
        let s = self.state_unchecked(0.0);
        ShellGeometry {
            r_inner: s.r_inner,
            r_outer: s.r_outer,
            c: self.c(),
        }
    }

    /// Compares velocities with central differences of the radii on a 64-point grid over `[0, span]`.
    pub fn check_velocities(&self, span: f64, rel: f64) -> Result<()> {
        let n = 64;
        let mut vmax = 0.0f64;
        let mut samples = Vec::with_capacity(n);
        for k in 0..n {
            let t = span * (k as f64 + 0.5) / n as f64;
            let h = 1e-3 * span.min(1.0 / self.bandwidth().max(1e-300));
            let lo = (t - h).max(0.0);
            let hi = t + h;
            let a = self.state_unchecked(lo);
            let b = self.state_unchecked(hi);
            let s = self.state_unchecked(t);
            let fd = [(b.r_inner - a.r_inner) / (hi - lo), (b.r_outer - a.r_outer) / (hi - lo)];
            vmax = vmax.max(s.v_inner.abs()).max(s.v_outer.abs());
            samples.push((t, [s.v_inner, s.v_outer], fd));
        }
        let floor = vmax.max(1e-300);
        for (t, v, fd) in samples {
            for i in 0..2 {
                if (v[i] - fd[i]).abs() > rel * floor {
                    return Err(Error::Argument(format!(
                        "velocity of the {} shell at t = {t} is {} but the radii change at {}",
                        if i == 0 { "inner" } else { "outer" },
                        v[i],
                        fd[i]
                    )));
                }
            }
        }
        Ok(())
    }
}

fn check_table_velocities(rows: &[[f64; 5]], rel: f64) -> Result<()> {
    let vmax = rows
        .iter()
        .map(|r| r[3].abs().max(r[4].abs()))
        .fold(0.0f64, f64::max);
    let n = rows.len();
    let floor = vmax.max(1e-12 * rows.iter().map(|r| r[2]).fold(0.0, f64::max));
    for i in 0..n {
        let (a, b) = match i {
            0 => (0, 1),
            _ if i == n - 1 => (n - 2, n - 1),
            _ => (i - 1, i + 1),
        };
        let dt = rows[b][0] - rows[a][0];
        for (col, name) in [(1usize, "inner"), (2, "outer")] {
            let fd = (rows[b][col] - rows[a][col]) / dt;
            let v = rows[i][col + 2];
            let err = (fd - v).abs();
            // One-sided differences at the ends are only first order.
            let tol = if i == 0 || i == n - 1 { 10.0 * rel } else { rel };
            if err > tol * floor {
                return Err(Error::Argument(format!(
                    "trajectory row {}: {name} velocity {v} disagrees with the radii (finite difference {fd})",
                    i + 1
                )));
            }
        }
    }
    Ok(())
}

impl Tabulated {
    pub fn rows(&self) -> &[[f64; 5]] {
        &self.rows
    }

    fn interpolate(&self, t: f64) -> MotionState {
        let rows = &self.rows;
        let last = rows.len() - 1;
        let k = match rows.binary_search_by(|r| r[0].total_cmp(&t)) {
            Ok(i) => i.min(last - 1),
            Err(0) => 0,
            Err(i) => (i - 1).min(last - 1),
        };
        let (a, b) = (&rows[k], &rows[k + 1]);
        let h = b[0] - a[0];
        let u = (t - a[0]) / h;
        let herm = |p0: f64, p1: f64, v0: f64, v1: f64| {
            let u2 = u * u;
            let u3 = u2 * u;
            let pos = (2.0 * u3 - 3.0 * u2 + 1.0) * p0
                + (u3 - 2.0 * u2 + u) * h * v0
                + (-2.0 * u3 + 3.0 * u2) * p1
                + (u3 - u2) * h * v1;
            let vel = ((6.0 * u2 - 6.0 * u) * p0 + (-6.0 * u2 + 6.0 * u) * p1) / h
                + (3.0 * u2 - 4.0 * u + 1.0) * v0
                + (3.0 * u2 - 2.0 * u) * v1;
            (pos, vel)
        };
        let (ri, vi) = herm(a[1], b[1], a[3], b[3]);
        let (ro, vo) = herm(a[2], b[2], a[4], b[4]);
        MotionState {
            r_inner: ri,
            r_outer: ro,
            v_inner: vi,
            v_outer: vo,
        }
    }
}

/// Parses whitespace- or comma-separated rows `t r_i r_o v_i v_o`; `#` starts a comment.
pub fn parse_trajectory(text: &str) -> Result<Vec<[f64; 5]>> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let fields: Vec<&str> = body
            .split(|ch: char| ch == ',' || ch.is_whitespace())
            .filter(|f| !f.is_empty())
            .collect();
        if fields.len() != 5 {
            return Err(Error::Argument(format!(
                "trajectory line {}: expected 5 columns (t, r_i, r_o, v_i, v_o), found {}",
                lineno + 1,
                fields.len()
            )));
        }
        let mut row = [0.0; 5];
        for (slot, f) in row.iter_mut().zip(&fields) {
            *slot = f.parse().map_err(|_| {
                Error::Argument(format!("trajectory line {}: cannot parse '{f}' as a number", lineno + 1))
            })?;
        }
        rows.push(row);
    }
    Ok(rows)
}
