//! Eigenfrequencies and normalized radial modes of the spherical-shell cavity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{gl64, integrate_adaptive};
use crate::specfun::{bessel_pair, cross_product_relaxed};

pub const MAX_RATIO: f64 = 1e6;
pub const MAX_L: u32 = 200;

/// Static shell radii and wave speed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShellGeometry {
    pub r_inner: f64,
    pub r_outer: f64,
    pub c: f64,
}

impl ShellGeometry {
    pub fn new(r_inner: f64, r_outer: f64, c: f64) -> Result<Self> {
        let g = Self { r_inner, r_outer, c };
        g.validate()?;
        Ok(g)
    }

    /// Unit wave speed.
    pub fn unit(r_inner: f64, r_outer: f64) -> Result<Self> {
        Self::new(r_inner, r_outer, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        let Self { r_inner, r_outer, c } = *self;
        if !(r_inner.is_finite() && r_outer.is_finite() && c.is_finite()) {
            return Err(Error::Argument(format!(
                "geometry must be finite: r_inner={r_inner}, r_outer={r_outer}, c={c}"
            )));
        }
        if !(r_inner > 0.0 && r_inner < r_outer) {
            return Err(Error::Argument(format!(
                "need 0 < r_inner < r_outer, got r_inner={r_inner}, r_outer={r_outer}"
            )));
        }
        if c <= 0.0 {
            return Err(Error::Argument(format!("wave speed must be positive, got {c}")));
        }
        if r_outer / r_inner > MAX_RATIO {
            return Err(Error::Argument(format!(
                "r_outer/r_inner = {} exceeds the supported maximum {MAX_RATIO}",
                r_outer / r_inner
            )));
        }
        Ok(())
    }

    pub fn gap(&self) -> f64 {
        self.r_outer - self.r_inner
    }

    pub fn ratio(&self) -> f64 {
        self.r_outer / self.r_inner
    }

    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        Self::new(self.r_inner * lambda, self.r_outer * lambda, self.c)
    }

    pub fn radius(&self, which: Shell) -> f64 {
        match which {
            Shell::Inner => self.r_inner,
            Shell::Outer => self.r_outer,
        }
    }
}

/// Which shell a sensitivity refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shell {
    Inner,
    Outer,
}

impl Shell {
    pub const BOTH: [Shell; 2] = [Shell::Inner, Shell::Outer];
}

/// Quantum numbers `(l, s)`; `s` counts roots from 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Mode {
    pub l: u32,
    pub s: u32,
}

impl Mode {
    pub fn new(l: u32, s: u32) -> Result<Self> {
        if s == 0 {
            return Err(Error::Argument("root index s starts at 1".into()));
        }
        if l > MAX_L {
            return Err(Error::Argument(format!("l = {l} exceeds the supported maximum {MAX_L}")));
        }
        Ok(Self { l, s })
    }
}

/// Tunables of the eigenfrequency scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootOptions {
    /// Scan steps per l=0 root spacing `pi/(r_o - r_i)`.
    pub subdivisions: u32,
    /// Relative width at which bisection stops before the Newton polish.
    pub root_rel: f64,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self {
            subdivisions: 8,
            root_rel: 1e-15,
        }
    }
}

fn check_l(l: u32) -> Result<()> {
    if l > MAX_L {
        return Err(Error::Argument(format!("l = {l} exceeds the supported maximum {MAX_L}")));
    }
    Ok(())
}

fn cross_k(l: u32, g: &ShellGeometry, k: f64) -> Result<f64> {
    let d = cross_product_relaxed(l, k * g.r_inner, k * g.r_outer);
    if d.is_finite() {
        Ok(d)
    } else {
        Err(Error::NonFinite(format!(
            "cross product D_{l} at k = {k} (r_inner = {}, r_outer = {})",
            g.r_inner, g.r_outer
        )))
    }
}

/// dD/dk for D(k) = j(k r_o) n(k r_i) - j(k r_i) n(k r_o).
fn cross_k_slope(l: u32, g: &ShellGeometry, k: f64) -> f64 {
    let pa = bessel_pair(l, k * g.r_inner);
    let pb = bessel_pair(l, k * g.r_outer);
    g.r_outer * pb.dj * pa.y + g.r_inner * pb.j * pa.dy
        - g.r_inner * pa.dj * pb.y
        - g.r_outer * pa.j * pb.dy
}

/// The first `s_max` roots of the transcendental equation, as angular frequencies.
pub fn find_eigenfrequencies(geometry: &ShellGeometry, l: u32, s_max: usize) -> Result<Vec<f64>> {
    find_eigenfrequencies_with(geometry, l, s_max, &RootOptions::default())
}

pub fn find_eigenfrequencies_with(
    geometry: &ShellGeometry,
    l: u32,
    s_max: usize,
    opts: &RootOptions,
) -> Result<Vec<f64>> {
    geometry.validate()?;
    check_l(l)?;
    if s_max == 0 {
        return Err(Error::Argument("s_max must be at least 1".into()));
    }
    if opts.subdivisions == 0 {
        return Err(Error::Argument("scan subdivisions must be at least 1".into()));
    }
    let g = geometry;
    let d = g.gap();
    let ll = (l as f64) * (l as f64 + 1.0);
    let spacing = std::f64::consts::PI / d;
    let step = spacing / opts.subdivisions as f64;
    // Rayleigh bounds: k_1^2 >= (pi/d)^2 + l(l+1)/r_o^2, k_s^2 <= (s pi/d)^2 + l(l+1)/r_i^2.
    let k_start = (1e-6 / d).max(0.9 * (spacing * spacing + ll / (g.r_outer * g.r_outer)).sqrt());
    let s_f = s_max as f64;
    let k_end = 1.05 * ((s_f * spacing).powi(2) + ll / (g.r_inner * g.r_inner)).sqrt() + 2.0 * step;

    let mut roots = Vec::with_capacity(s_max);
    let mut lo = k_start;
    let mut d_lo = cross_k(l, g, lo)?;
    while roots.len() < s_max {
        let hi = lo + step;
        if hi > k_end {
            return Err(Error::Bracket {
                lo: lo * g.c,
                hi: hi * g.c,
                found: roots.len(),
                wanted: s_max,
            });
        }
        let d_hi = cross_k(l, g, hi)?;
        if d_hi == 0.0 {
            roots.push(hi);
            lo = hi + 1e-9 * step;
            d_lo = cross_k(l, g, lo)?;
            continue;
        }
        if d_lo.signum() != d_hi.signum() && d_lo != 0.0 {
            roots.push(refine_root(l, g, lo, hi, d_lo, opts.root_rel)?);
        }
        lo = hi;
        d_lo = d_hi;
    }
    Ok(roots.into_iter().map(|k| k * g.c).collect())
}

fn refine_root(l: u32, g: &ShellGeometry, mut lo: f64, mut hi: f64, mut d_lo: f64, rel: f64) -> Result<f64> {
    for _ in 0..200 {
        if hi - lo <= rel * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let d_mid = cross_k(l, g, mid)?;
        if d_mid == 0.0 {
            return Ok(mid);
        }
        if d_mid.signum() == d_lo.signum() {
            lo = mid;
            d_lo = d_mid;
        } else {
            hi = mid;
        }
    }
    let k = 0.5 * (lo + hi);
    let slope = cross_k_slope(l, g, k);
    let polished = k - cross_k(l, g, k)? / slope;
    let width = (hi - lo).max(4.0 * f64::EPSILON * hi);
    if polished.is_finite() && (polished - k).abs() <= width {
        Ok(polished)
    } else {
        Ok(k)
    }
}

/// A normalized radial eigenfunction `F(r) = norm * [j(kr) n(k r_i) - j(k r_i) n(kr)]`, `k = omega/c`.
///
/// `norm` carries the sign that makes `F'(r_i) > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialMode {
    pub mode: Mode,
    pub omega: f64,
    pub norm: f64,
    pub geometry: ShellGeometry,
    j_a: f64,
    n_a: f64,
    dj_a: f64,
    dn_a: f64,
    zeros: Vec<f64>,
}

impl RadialMode {
    pub fn k(&self) -> f64 {
        self.omega / self.geometry.c
    }

    /// The unnormalized profile `B(r)` at wavenumber `self.k()`.
    pub fn shape(&self, r: f64) -> f64 {
        if r == self.geometry.r_inner || r == self.geometry.r_outer {
            return 0.0;
        }
        let p = bessel_pair(self.mode.l, self.k() * r);
        p.j * self.n_a - self.j_a * p.y
    }

    /// `F(r)` without the domain check.
    pub fn value(&self, r: f64) -> f64 {
        self.norm * self.shape(r)
    }

    pub fn eval(&self, r: f64) -> Result<f64> {
        let g = &self.geometry;
        if !(r >= g.r_inner && r <= g.r_outer) {
            return Err(Error::Domain(format!(
                "r = {r} lies outside the gap [{}, {}]",
                g.r_inner, g.r_outer
            )));
        }
        Ok(self.value(r))
    }

    /// dF/dr.
    pub fn slope(&self, r: f64) -> f64 {
        let k = self.k();
        let p = bessel_pair(self.mode.l, k * r);
        self.norm * k * (p.dj * self.n_a - self.j_a * p.dy)
    }

    /// `(j, n, j', n')` of order `l` at `a = k r_i`.
    pub fn inner_values(&self) -> (f64, f64, f64, f64) {
        (self.j_a, self.n_a, self.dj_a, self.dn_a)
    }

    /// Sign changes of `F` strictly inside the gap, ascending.
    pub fn interior_zeros(&self) -> &[f64] {
        &self.zeros
    }

    /// Panel edges `r_i, zeros.., r_o`.
    pub fn panel_edges(&self) -> Vec<f64> {
        let mut e = Vec::with_capacity(self.zeros.len() + 2);
        e.push(self.geometry.r_inner);
        e.extend_from_slice(&self.zeros);
        e.push(self.geometry.r_outer);
        e
    }
}

/// Free-function form of [`RadialMode::eval`].
pub fn eval_f(mode: &RadialMode, r: f64) -> Result<f64> {
    mode.eval(r)
}

/// Builds a single normalized mode.
pub fn radial_mode(geometry: &ShellGeometry, mode: Mode) -> Result<RadialMode> {
    Mode::new(mode.l, mode.s)?;
    let omegas = find_eigenfrequencies(geometry, mode.l, mode.s as usize)?;
    build_mode(geometry, mode, omegas[mode.s as usize - 1])
}

/// Modes `s = 1..=s_max` of one `l`, sharing a single root scan.
pub fn radial_modes(geometry: &ShellGeometry, l: u32, s_max: usize) -> Result<Vec<RadialMode>> {
    radial_modes_with(geometry, l, s_max, &RootOptions::default())
}

pub fn radial_modes_with(
    geometry: &ShellGeometry,
    l: u32,
    s_max: usize,
    opts: &RootOptions,
) -> Result<Vec<RadialMode>> {
    let omegas = find_eigenfrequencies_with(geometry, l, s_max, opts)?;
    omegas
        .iter()
        .enumerate()
        .map(|(i, &w)| build_mode(geometry, Mode { l, s: i as u32 + 1 }, w))
        .collect()
}

/// Normalizes the profile at a known root `omega`.
pub fn build_mode(geometry: &ShellGeometry, mode: Mode, omega: f64) -> Result<RadialMode> {
    geometry.validate()?;
    let k = omega / geometry.c;
    let pa = bessel_pair(mode.l, k * geometry.r_inner);
    let mut rm = RadialMode {
        mode,
        omega,
        norm: 1.0,
        geometry: *geometry,
        j_a: pa.j,
        n_a: pa.y,
        dj_a: pa.dj,
        dn_a: pa.dy,
        zeros: Vec::new(),
    };
    if ![pa.j, pa.y, pa.dj, pa.dy].iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite(format!("Bessel values at the inner shell for l = {}", mode.l)));
    }
    rm.zeros = find_zeros(&rm);
    let edges = rm.panel_edges();
    let mut integral = 0.0;
    for w in edges.windows(2) {
        integral += integrate_adaptive(w[0], w[1], 1e-13, 1e-300, |r| {
            let b = rm.shape(r);
            b * b * r * r
        });
    }
    // B'(r_i) = k (j'(a) n(a) - j(a) n'(a)) = -k / a^2 by the Wronskian.
    let dshape_inner = pa.dj * pa.y - pa.j * pa.dy;
    let norm = dshape_inner.signum() / integral.sqrt();
    if !norm.is_finite() || integral <= 0.0 {
        return Err(Error::NonFinite(format!(
            "normalization of mode (l={}, s={}) at omega = {omega}",
            mode.l, mode.s
        )));
    }
    rm.norm = norm;
    Ok(rm)
}

fn find_zeros(rm: &RadialMode) -> Vec<f64> {
    let g = &rm.geometry;
    let d = g.gap();
    let want = rm.mode.s as usize - 1;
    if want == 0 {
        return Vec::new();
    }
    let mut n = 24 * rm.mode.s as usize + 8;
    let mut best = Vec::new();
    for _ in 0..4 {
        let mut zeros = Vec::with_capacity(want);
        let mut r0 = g.r_inner + d / n as f64;
        let mut b0 = rm.shape(r0);
        for j in 2..n {
            let r1 = g.r_inner + d * j as f64 / n as f64;
            let b1 = rm.shape(r1);
            if b0 != 0.0 && b1 != 0.0 && b0.signum() != b1.signum() {
                zeros.push(bisect_shape(rm, r0, r1, b0));
            } else if b1 == 0.0 {
                zeros.push(r1);
            }
            r0 = r1;
            b0 = b1;
        }
        if zeros.len() == want {
            return zeros;
        }
        best = zeros;
        n *= 2;
    }
    best
}

fn bisect_shape(rm: &RadialMode, mut lo: f64, mut hi: f64, b_lo: f64) -> f64 {
    let s_lo = b_lo.signum();
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let b = rm.shape(mid);
        if b == 0.0 {
            return mid;
        }
        if b.signum() == s_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Partial derivatives of `D(omega r_i / c, omega r_o / c)`.
struct CrossPartials {
    d_ri: f64,
    d_ro: f64,
    d_omega: f64,
    scale: f64,
}

fn cross_partials(rm: &RadialMode) -> CrossPartials {
    let g = &rm.geometry;
    let k = rm.k();
    let pa = bessel_pair(rm.mode.l, k * g.r_inner);
    let pb = bessel_pair(rm.mode.l, k * g.r_outer);
    let da = pb.j * pa.dy - pa.dj * pb.y;
    let db = pb.dj * pa.y - pa.j * pb.dy;
    CrossPartials {
        d_ri: k * da,
        d_ro: k * db,
        d_omega: (g.r_inner * da + g.r_outer * db) / g.c,
        scale: (pb.j * pa.y).abs() + (pa.j * pb.y).abs(),
    }
}

/// `d omega / d r_alpha` by implicit differentiation of the root condition.
pub fn domega_dr(rm: &RadialMode, which: Shell) -> Result<f64> {
    let p = cross_partials(rm);
    if (p.d_omega * rm.omega).abs() < 1e-14 * p.scale {
        return Err(Error::DegenerateRoot {
            omega: rm.omega,
            slope: p.d_omega,
        });
    }
    let num = match which {
        Shell::Inner => p.d_ri,
        Shell::Outer => p.d_ro,
    };
    Ok(-num / p.d_omega)
}

/// Gauss-Legendre nodes and weights over panels whose edges include every interior zero of `modes`.
pub fn shared_grid(modes: &[RadialMode]) -> Vec<(f64, f64)> {
    let Some(first) = modes.first() else {
        return Vec::new();
    };
    let g = first.geometry;
    let mut edges: Vec<f64> = modes.iter().flat_map(|m| m.zeros.iter().copied()).collect();
    edges.push(g.r_inner);
    edges.push(g.r_outer);
    edges.sort_by(|a, b| a.total_cmp(b));
    let min_width = 1e-6 * g.gap();
    let mut merged: Vec<f64> = Vec::with_capacity(edges.len());
    for e in edges {
        match merged.last() {
            Some(&last) if e - last < min_width => {}
            _ => merged.push(e),
        }
    }
    *merged.last_mut().expect("non-empty") = g.r_outer;
    let rule = gl64();
    merged
        .windows(2)
        .flat_map(|w| rule.mapped(w[0], w[1]).collect::<Vec<_>>())
        .collect()
}
