//! Accumulated phases, first-order Bogoliubov coefficients and the full truncated evolution.

use std::f64::consts::PI;
use std::sync::OnceLock;

use log::{debug, warn};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::coupling::raw_couplings;
use crate::error::{Error, Result};
use crate::motion::{MotionLaw, MotionState};
use crate::quadrature::gl16;
use crate::spectrum::{Mode, ShellGeometry};

/// Frequencies and couplings of the truncated mode set at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub omegas: Vec<f64>,
    pub mu: DMatrix<f64>,
}

/// Anything that can report `omega_s(t)` and `mu_ss'(t)` for a fixed truncation.
pub trait CouplingSource: Sync {
    fn size(&self) -> usize;
    fn frequencies(&self, t: f64) -> Result<Vec<f64>>;
    fn snapshot(&self, t: f64) -> Result<Snapshot>;
    /// Angular frequency scale of the coefficients' time dependence.
    fn bandwidth(&self) -> f64;
    /// Largest retained frequency at `t = 0`.
    fn max_frequency(&self) -> f64;
    /// Last time the source can be queried.
    fn horizon(&self) -> f64 {
        f64::INFINITY
    }
}

/// Numerical knobs of the dynamics layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DynamicsOptions {
    /// RK4 steps per period of the highest retained frequency.
    pub points_per_period: f64,
    /// Allowed drift of the row identity `sum |alpha|^2 - |beta|^2 = 1`.
    pub unitarity_budget: f64,
    /// Target relative accuracy of the ratio table.
    pub table_tol: f64,
    /// Gauss panels per period of the fastest phase in the first-order integral.
    pub panels_per_period: f64,
}

impl Default for DynamicsOptions {
    fn default() -> Self {
        Self {
            points_per_period: 40.0,
            unitarity_budget: 1e-6,
            table_tol: 1e-12,
            panels_per_period: 2.0,
        }
    }
}

/// Chebyshev interpolant of the scale-free spectrum and couplings in `rho = r_o / r_i`.
#[derive(Debug, Clone)]
struct RatioTable {
    lo: f64,
    hi: f64,
    /// `coeffs[k]` holds the k-th Chebyshev coefficient of every tabulated scalar.
    coeffs: Vec<Vec<f64>>,
    size: usize,
}

impl RatioTable {
    fn node_values(l: u32, size: usize, rho: f64) -> Result<Vec<f64>> {
        let g = ShellGeometry::new(1.0, rho, 1.0)?;
        let raw = raw_couplings(&g, l, size)?;
        let mut v = Vec::with_capacity(size + 2 * size * size);
        v.extend_from_slice(&raw.omegas);
        v.extend(raw.inner.iter());
        v.extend(raw.outer.iter());
        Ok(v)
    }

    fn build(l: u32, size: usize, lo: f64, hi: f64, tol: f64) -> Result<Self> {
        if hi - lo <= 1e-13 * hi {
            let v = Self::node_values(l, size, 0.5 * (lo + hi))?;
            return Ok(Self {
                lo,
                hi,
                coeffs: vec![v],
                size,
            });
        }
        let mut n = 8;
        loop {
            let mid = 0.5 * (lo + hi);
            let half = 0.5 * (hi - lo);
            let values: Vec<Vec<f64>> = (0..n)
                .into_par_iter()
                .map(|j| {
                    let x = (PI * (j as f64 + 0.5) / n as f64).cos();
                    Self::node_values(l, size, mid + half * x)
                })
                .collect::<Result<_>>()?;
            let m = values[0].len();
            let mut coeffs = vec![vec![0.0; m]; n];
            for (k, ck) in coeffs.iter_mut().enumerate() {
                for (j, vj) in values.iter().enumerate() {
                    let w = (PI * k as f64 * (j as f64 + 0.5) / n as f64).cos();
                    for (c, v) in ck.iter_mut().zip(vj) {
                        *c += w * v;
                    }
                }
                let f = if k == 0 { 1.0 / n as f64 } else { 2.0 / n as f64 };
                ck.iter_mut().for_each(|c| *c *= f);
            }
            let scale: Vec<f64> = (0..m)
                .map(|i| values.iter().map(|v| v[i].abs()).fold(0.0, f64::max))
                .collect();
            let global = scale.iter().cloned().fold(0.0, f64::max);
            let tail_ok = (0..m).all(|i| {
                let floor = scale[i].max(1e-6 * global);
                coeffs[n - 2..].iter().all(|c| c[i].abs() <= tol * floor)
            });
            if tail_ok || n >= 64 {
                if !tail_ok {
                    warn!("ratio table on [{lo}, {hi}] did not reach {tol:e} with {n} nodes");
                }
                debug!("ratio table on [{lo}, {hi}] uses {n} nodes");
                return Ok(Self { lo, hi, coeffs, size });
            }
            n *= 2;
        }
    }

    fn eval_into(&self, rho: f64, out: &mut Vec<f64>) -> Result<()> {
        let slack = 1e-9 * self.hi;
        if rho < self.lo - slack || rho > self.hi + slack || !rho.is_finite() {
            return Err(Error::Domain(format!(
                "radius ratio {rho} left the tabulated range [{}, {}]",
                self.lo, self.hi
            )));
        }
        let m = self.coeffs[0].len();
        out.clear();
        if self.coeffs.len() == 1 {
            out.extend_from_slice(&self.coeffs[0]);
            return Ok(());
        }
        let x = (2.0 * rho - self.lo - self.hi) / (self.hi - self.lo);
        let mut b1 = vec![0.0; m];
        let mut b2 = vec![0.0; m];
        for c in self.coeffs.iter().skip(1).rev() {
            for i in 0..m {
                let b0 = 2.0 * x * b1[i] - b2[i] + c[i];
                b2[i] = b1[i];
                b1[i] = b0;
            }
        }
        out.extend((0..m).map(|i| x * b1[i] - b2[i] + self.coeffs[0][i]));
        Ok(())
    }
}

/// The cavity under a motion law, truncated to `s <= s_trunc` at fixed `l`.
#[derive(Debug, Clone)]
pub struct CavityDynamics {
    pub l: u32,
    pub motion: MotionLaw,
    table: RatioTable,
    omega_max: f64,
}

fn ratio_range(motion: &MotionLaw) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut take = |s: MotionState| {
        let r = s.ratio();
        lo = lo.min(r);
        hi = hi.max(r);
    };
    match motion {
        MotionLaw::Static(_) => take(motion.state_unchecked(0.0)),
        MotionLaw::Harmonic(h) => {
            let g = &h.geometry;
            for x in [-1.0, 1.0] {
                take(MotionState {
                    r_inner: g.r_inner * (1.0 + h.eps_inner * x),
                    r_outer: g.r_outer * (1.0 + h.eps_outer * x),
                    v_inner: 0.0,
                    v_outer: 0.0,
                });
            }
        }
        MotionLaw::Tabulated(tab) => {
            for w in tab.rows().windows(2) {
                for k in 0..8 {
                    take(motion.state_unchecked(w[0][0] + (w[1][0] - w[0][0]) * k as f64 / 8.0));
                }
            }
            take(motion.state_unchecked(motion.horizon()));
        }
        MotionLaw::Custom(c) => {
            let n = 4096;
            for k in 0..=n {
                take(motion.state_unchecked(c.horizon * k as f64 / n as f64));
            }
        }
    }
    let width = hi - lo;
    let pad = match motion {
        MotionLaw::Static(_) | MotionLaw::Harmonic(_) => 1e-12 * hi,
        _ => 0.05 * width + 1e-9 * hi,
    };
    (lo - pad, hi + pad)
}

impl CavityDynamics {
    pub fn new(l: u32, s_trunc: usize, motion: &MotionLaw) -> Result<Self> {
        Self::with_options(l, s_trunc, motion, &DynamicsOptions::default())
    }

    pub fn with_options(l: u32, s_trunc: usize, motion: &MotionLaw, opts: &DynamicsOptions) -> Result<Self> {
        Mode::new(l, 1)?;
        if s_trunc == 0 {
            return Err(Error::Argument("truncation must keep at least one mode".into()));
        }
        motion.state(0.0)?;
        let (lo, hi) = ratio_range(motion);
        if !(lo > 1.0) {
            return Err(Error::Domain(format!("the shells touch or cross (r_o/r_i reaches {lo})")));
        }
        let table = RatioTable::build(l, s_trunc, lo, hi, opts.table_tol)?;
        let mut dynamics = Self {
            l,
            motion: motion.clone(),
            table,
            omega_max: 0.0,
        };
        dynamics.omega_max = dynamics
            .frequencies(0.0)?
            .into_iter()
            .fold(0.0, f64::max);
        Ok(dynamics)
    }

    fn scaled(&self, t: f64, with_couplings: bool) -> Result<(Vec<f64>, Option<DMatrix<f64>>)> {
        let st = self.motion.state(t)?;
        let mut v = Vec::new();
        self.table.eval_into(st.ratio(), &mut v)?;
        let n = self.table.size;
        let c = self.motion.c();
        let omegas: Vec<f64> = v[..n].iter().map(|w| c * w / st.r_inner).collect();
        if !with_couplings {
            return Ok((omegas, None));
        }
        let inner = &v[n..n + n * n];
        let outer = &v[n + n * n..];
        let mu = DMatrix::from_iterator(
            n,
            n,
            inner
                .iter()
                .zip(outer)
                .map(|(a, b)| (a * st.v_inner + b * st.v_outer) / st.r_inner),
        );
        Ok((omegas, Some(mu)))
    }
}

impl CouplingSource for CavityDynamics {
    fn size(&self) -> usize {
        self.table.size
    }

    fn frequencies(&self, t: f64) -> Result<Vec<f64>> {
        Ok(self.scaled(t, false)?.0)
    }

    fn snapshot(&self, t: f64) -> Result<Snapshot> {
        let (omegas, mu) = self.scaled(t, true)?;
        Ok(Snapshot {
            omegas,
            mu: mu.expect("requested"),
        })
    }

    fn bandwidth(&self) -> f64 {
        self.motion.bandwidth()
    }

    fn max_frequency(&self) -> f64 {
        self.omega_max
    }

    fn horizon(&self) -> f64 {
        self.motion.horizon()
    }
}

/// Integration matrix on the 16-point Gauss rule: `M[j][k]` integrates the interpolant of node values
/// from `-1` to node `j`.
fn gl16_integration_matrix() -> &'static [[f64; 16]; 16] {
    static M: OnceLock<[[f64; 16]; 16]> = OnceLock::new();
    M.get_or_init(|| {
        let rule = gl16();
        let x = rule.nodes();
        let w = rule.weights();
        let legendre = |n: usize, z: f64| -> f64 {
            let (mut p0, mut p1) = (1.0, z);
            if n == 0 {
                return 1.0;
            }
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            p1
        };
        let mut m = [[0.0; 16]; 16];
        for j in 0..16 {
            for k in 0..16 {
                let mut acc = 0.5 * (x[j] + 1.0);
                for n in 1..16 {
                    acc += 0.5 * legendre(n, x[k]) * (legendre(n + 1, x[j]) - legendre(n - 1, x[j]));
                }
                m[j][k] = w[k] * acc;
            }
        }
        m
    })
}

fn check_times(times: &[f64]) -> Result<()> {
    let mut last = 0.0;
    for &t in times {
        if !(t.is_finite() && t >= last) {
            return Err(Error::Argument(format!(
                "output times must be finite, non-negative and non-decreasing (got {t} after {last})"
            )));
        }
        last = t;
    }
    Ok(())
}

fn split_interval(a: f64, b: f64, max_width: f64) -> usize {
    if b <= a {
        0
    } else {
        ((b - a) / max_width).ceil().max(1.0) as usize
    }
}

/// Accumulated phases `Omega_s(t) = int_0^t omega_s`.
pub struct PhaseAccumulator<'a, S: CouplingSource + ?Sized> {
    source: &'a S,
    knots: Vec<f64>,
    values: Vec<Vec<f64>>,
    step: f64,
}

impl<'a, S: CouplingSource + ?Sized> PhaseAccumulator<'a, S> {
    pub fn new(source: &'a S) -> Self {
        let bw = source.bandwidth();
        let step = if bw > 0.0 { 2.0 * PI / (4.0 * bw) } else { f64::INFINITY };
        Self {
            source,
            knots: vec![0.0],
            values: vec![vec![0.0; source.size()]],
            step,
        }
    }

    fn segment(&self, a: f64, b: f64) -> Result<Vec<f64>> {
        let mut acc = vec![0.0; self.source.size()];
        for (t, w) in gl16().mapped(a, b) {
            for (o, f) in acc.iter_mut().zip(self.source.frequencies(t)?) {
                *o += w * f;
            }
        }
        Ok(acc)
    }

    /// All phases at `t`; extends the knot cache as needed.
    pub fn phases(&mut self, t: f64) -> Result<Vec<f64>> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::Argument(format!("time must be non-negative, got {t}")));
        }
        if self.step.is_infinite() {
            return Ok(self.source.frequencies(0.0)?.iter().map(|w| w * t).collect());
        }
        while *self.knots.last().expect("seeded") + self.step < t {
            let a = *self.knots.last().expect("seeded");
            let inc = self.segment(a, a + self.step)?;
            let next: Vec<f64> = self.values.last().expect("seeded").iter().zip(&inc).map(|(x, y)| x + y).collect();
            self.knots.push(a + self.step);
            self.values.push(next);
        }
        let k = self.knots.partition_point(|&x| x <= t).saturating_sub(1);
        let base = &self.values[k];
        let inc = self.segment(self.knots[k], t)?;
        Ok(base.iter().zip(&inc).map(|(x, y)| x + y).collect())
    }
}

/// `Omega_ls(t)`.
pub fn phase(mode: Mode, motion: &MotionLaw, t: f64) -> Result<f64> {
    Mode::new(mode.l, mode.s)?;
    let dyns = CavityDynamics::new(mode.l, mode.s as usize, motion)?;
    let mut acc = PhaseAccumulator::new(&dyns);
    Ok(acc.phases(t)?[mode.s as usize - 1])
}

/// First-order `beta_ss'(t)` for all retained pairs, at every time in `times`.
pub fn beta_first_order_series<S: CouplingSource + ?Sized>(
    source: &S,
    times: &[f64],
    opts: &DynamicsOptions,
) -> Result<Vec<DMatrix<Complex64>>> {
    check_times(times)?;
    let n = source.size();
    let fastest = 2.0 * source.max_frequency() + source.bandwidth();
    let width = 2.0 * PI / (opts.panels_per_period * fastest);
    let rule = gl16();
    let integ = gl16_integration_matrix();
    let mut beta = DMatrix::<Complex64>::zeros(n, n);
    let mut omega_base = vec![0.0; n];
    let mut t0 = 0.0;
    let mut out = Vec::with_capacity(times.len());
    let mut snaps: Vec<Snapshot> = Vec::with_capacity(16);
    let mut e = vec![Complex64::new(0.0, 0.0); n];
    for &t1 in times {
        let panels = split_interval(t0, t1, width);
        for p in 0..panels {
            let a = t0 + (t1 - t0) * p as f64 / panels as f64;
            let b = if p + 1 == panels { t1 } else { t0 + (t1 - t0) * (p + 1) as f64 / panels as f64 };
            let half = 0.5 * (b - a);
            snaps.clear();
            for (t, _) in rule.mapped(a, b) {
                snaps.push(source.snapshot(t)?);
            }
            for j in 0..16 {
                for (s, es) in e.iter_mut().enumerate() {
                    let mut om = omega_base[s];
                    for (k, snap) in snaps.iter().enumerate() {
                        om += half * integ[j][k] * snap.omegas[s];
                    }
                    *es = Complex64::from_polar(1.0, om);
                }
                let wj = half * rule.weights()[j];
                let mu = &snaps[j].mu;
                for s in 0..n {
                    for q in 0..n {
                        let sym = 0.5 * (mu[(s, q)] + mu[(q, s)]);
                        beta[(s, q)] += e[s] * e[q] * (wj * sym);
                    }
                }
            }
            for (s, base) in omega_base.iter_mut().enumerate() {
                *base += snaps
                    .iter()
                    .zip(rule.weights())
                    .map(|(snap, w)| half * w * snap.omegas[s])
                    .sum::<f64>();
            }
        }
        t0 = t1;
        out.push(beta.clone());
    }
    Ok(out)
}

/// `beta^(1)_ss'(t)`.
pub fn beta_first_order(l: u32, s: u32, s_prime: u32, motion: &MotionLaw, t: f64) -> Result<Complex64> {
    Mode::new(l, s)?;
    Mode::new(l, s_prime)?;
    let dyns = CavityDynamics::new(l, s.max(s_prime) as usize, motion)?;
    let b = beta_first_order_series(&dyns, &[t], &DynamicsOptions::default())?;
    Ok(b[0][(s as usize - 1, s_prime as usize - 1)])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Perturbative,
    Full,
}

/// Mean number of created particles in one mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CreationNumber {
    pub mode: Mode,
    pub t: f64,
    pub value: f64,
    pub method: Method,
}

/// `sum_{s' <= s_prime_max} |beta_ss'|^2` from a first-order matrix.
pub fn row_number(beta: &DMatrix<Complex64>, s: u32, s_prime_max: usize) -> f64 {
    (0..s_prime_max).map(|q| beta[(s as usize - 1, q)].norm_sqr()).sum()
}

pub fn particle_number_perturbative(
    l: u32,
    s: u32,
    motion: &MotionLaw,
    t: f64,
    s_prime_max: usize,
) -> Result<CreationNumber> {
    Mode::new(l, s)?;
    if s_prime_max == 0 {
        return Err(Error::Argument("s'_max must be at least 1".into()));
    }
    let dyns = CavityDynamics::new(l, s_prime_max.max(s as usize), motion)?;
    let b = beta_first_order_series(&dyns, &[t], &DynamicsOptions::default())?;
    Ok(CreationNumber {
        mode: Mode { l, s },
        t,
        value: row_number(&b[0], s, s_prime_max),
        method: Method::Perturbative,
    })
}

/// Truncated Bogoliubov matrices at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct BogoliubovState {
    pub l: u32,
    pub t: f64,
    pub alpha: DMatrix<Complex64>,
    pub beta: DMatrix<Complex64>,
}

impl BogoliubovState {
    pub fn initial(l: u32, size: usize) -> Self {
        Self {
            l,
            t: 0.0,
            alpha: DMatrix::identity(size, size),
            beta: DMatrix::zeros(size, size),
        }
    }

    /// Largest `|sum_q (|alpha_sq|^2 - |beta_sq|^2) - 1|` over rows.
    pub fn unitarity_deviation(&self) -> f64 {
        (0..self.alpha.nrows())
            .map(|s| {
                let a: f64 = self.alpha.row(s).iter().map(|z| z.norm_sqr()).sum();
                let b: f64 = self.beta.row(s).iter().map(|z| z.norm_sqr()).sum();
                (a - b - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }
}

pub fn particle_number_full(state: &BogoliubovState, s: u32) -> CreationNumber {
    let row = s as usize - 1;
    CreationNumber {
        mode: Mode { l: state.l, s },
        t: state.t,
        value: state.beta.row(row).iter().map(|z| z.norm_sqr()).sum(),
        method: Method::Full,
    }
}

/// One output of the full evolution.
#[derive(Debug, Clone)]
pub struct FullSample {
    pub state: BogoliubovState,
    /// Largest unitarity deviation seen up to this time.
    pub max_deviation: f64,
}

struct Interaction {
    a: DMatrix<Complex64>,
    b: DMatrix<Complex64>,
    phase: Vec<f64>,
}

fn rhs(y: &Interaction, snap: &Snapshot) -> Interaction {
    let n = y.phase.len();
    let e: Vec<Complex64> = y.phase.iter().map(|&p| Complex64::from_polar(1.0, p)).collect();
    let mut ga = DMatrix::<Complex64>::zeros(n, n);
    let mut gs = DMatrix::<Complex64>::zeros(n, n);
    for s in 0..n {
        for q in 0..n {
            let (m_sq, m_qs) = (snap.mu[(s, q)], snap.mu[(q, s)]);
            ga[(s, q)] = e[s] * e[q].conj() * (0.5 * (m_sq - m_qs));
            gs[(s, q)] = e[s] * e[q] * (0.5 * (m_sq + m_qs));
        }
    }
    let a_bar = y.a.map(|z| z.conj());
    let b_bar = y.b.map(|z| z.conj());
    Interaction {
        a: &ga * &y.a + &gs * &b_bar,
        b: &ga * &y.b + &gs * &a_bar,
        phase: snap.omegas.clone(),
    }
}

fn axpy(y: &Interaction, h: f64, k: &Interaction) -> Interaction {
    Interaction {
        a: &y.a + &k.a * Complex64::from(h),
        b: &y.b + &k.b * Complex64::from(h),
        phase: y.phase.iter().zip(&k.phase).map(|(p, w)| p + h * w).collect(),
    }
}

fn to_lab(l: u32, t: f64, y: &Interaction) -> BogoliubovState {
    let n = y.phase.len();
    let mut alpha = y.a.clone();
    let mut beta = y.b.clone();
    for s in 0..n {
        let rot = Complex64::from_polar(1.0, -y.phase[s]);
        for q in 0..n {
            alpha[(s, q)] *= rot;
            beta[(s, q)] *= rot;
        }
    }
    BogoliubovState { l, t, alpha, beta }
}

/// Fixed-step RK4 in the interaction picture, sampled at `times`.
pub fn evolve_series<S: CouplingSource + ?Sized>(
    source: &S,
    l: u32,
    times: &[f64],
    opts: &DynamicsOptions,
) -> Result<Vec<FullSample>> {
    check_times(times)?;
    let n = source.size();
    let dt_max = 2.0 * PI / (opts.points_per_period * source.max_frequency().max(source.bandwidth()));
    let mut y = Interaction {
        a: DMatrix::identity(n, n),
        b: DMatrix::zeros(n, n),
        phase: vec![0.0; n],
    };
    let mut t0 = 0.0;
    let mut worst = 0.0f64;
    let mut out = Vec::with_capacity(times.len());
    let mut snap0 = source.snapshot(0.0)?;
    for &t1 in times {
        let steps = split_interval(t0, t1, dt_max);
        for k in 0..steps {
            let ta = t0 + (t1 - t0) * k as f64 / steps as f64;
            let tb = if k + 1 == steps { t1 } else { t0 + (t1 - t0) * (k + 1) as f64 / steps as f64 };
            let h = tb - ta;
            let mid = source.snapshot(ta + 0.5 * h)?;
            let end = source.snapshot(tb)?;
            let k1 = rhs(&y, &snap0);
            let k2 = rhs(&axpy(&y, 0.5 * h, &k1), &mid);
            let k3 = rhs(&axpy(&y, 0.5 * h, &k2), &mid);
            let k4 = rhs(&axpy(&y, h, &k3), &end);
            let mut next = axpy(&y, h / 6.0, &k1);
            next = axpy(&next, h / 3.0, &k2);
            next = axpy(&next, h / 3.0, &k3);
            next = axpy(&next, h / 6.0, &k4);
            y = next;
            snap0 = end;
            let state = to_lab(l, tb, &y);
            let dev = state.unitarity_deviation();
            worst = worst.max(dev);
            if !(dev <= opts.unitarity_budget) {
                return Err(Error::Unitarity {
                    t: tb,
                    deviation: dev,
                    budget: opts.unitarity_budget,
                    dt: h,
                });
            }
        }
        t0 = t1;
        out.push(FullSample {
            state: to_lab(l, t1, &y),
            max_deviation: worst,
        });
    }
    Ok(out)
}

/// Full truncated evolution from `alpha = 1, beta = 0` to `t_final`.
pub fn evolve_bogoliubov_full(l: u32, motion: &MotionLaw, t_final: f64, s_trunc: usize) -> Result<BogoliubovState> {
    if s_trunc < 2 {
        return Err(Error::Argument("the full evolution needs at least two modes".into()));
    }
    let dyns = CavityDynamics::new(l, s_trunc, motion)?;
    let mut out = evolve_series(&dyns, l, &[t_final], &DynamicsOptions::default())?;
    Ok(out.pop().expect("one time").state)
}
