//! Intermode couplings `mu_ss'(t)` and the first-order coefficients `c^alpha_ss'`.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::motion::MotionLaw;
use crate::quadrature::{gl64, integrate_panels};
use crate::specfun::bessel_pair;
use crate::spectrum::{domega_dr, radial_modes, shared_grid, Mode, RadialMode, Shell, ShellGeometry};

/// Parameter a radial profile is differentiated against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Param {
    RInner,
    ROuter,
    Omega,
}

impl From<Shell> for Param {
    fn from(s: Shell) -> Self {
        match s {
            Shell::Inner => Param::RInner,
            Shell::Outer => Param::ROuter,
        }
    }
}

/// `F` and its parameter derivatives at one radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileJet {
    pub f: f64,
    pub d_rinner: f64,
    pub d_router: f64,
    pub d_omega: f64,
}

/// Normalization derivatives of one mode, reused across radii.
#[derive(Debug, Clone)]
pub struct Sensitivity<'a> {
    mode: &'a RadialMode,
    dnorm_rinner: f64,
    dnorm_router: f64,
    dnorm_omega: f64,
    domega: [f64; 2],
}

struct Pieces {
    b: f64,
    b_ri: f64,
    b_om: f64,
}

fn pieces(rm: &RadialMode, r: f64) -> Pieces {
    let g = &rm.geometry;
    let k = rm.k();
    let (j_a, n_a, dj_a, dn_a) = rm.inner_values();
    let p = bessel_pair(rm.mode.l, k * r);
    let b = if r == g.r_inner { 0.0 } else { p.j * n_a - j_a * p.y };
    Pieces {
        b,
        b_ri: k * (p.j * dn_a - dj_a * p.y),
        b_om: (r * p.dj * n_a + g.r_inner * p.j * dn_a - g.r_inner * dj_a * p.y - r * j_a * p.dy) / g.c,
    }
}

impl<'a> Sensitivity<'a> {
    pub fn new(mode: &'a RadialMode) -> Result<Self> {
        let g = &mode.geometry;
        let edges = mode.panel_edges();
        let (i_ri, i_om) = {
            let mut a = 0.0;
            let mut b = 0.0;
            for w in edges.windows(2) {
                for (r, wt) in gl64().mapped(w[0], w[1]) {
                    let p = pieces(mode, r);
                    a += wt * 2.0 * p.b * p.b_ri * r * r;
                    b += wt * 2.0 * p.b * p.b_om * r * r;
                }
            }
            (a, b)
        };
        // Leibniz boundary term at r_o; the one at r_i vanishes identically.
        let (j_a, n_a, _, _) = mode.inner_values();
        let pb = bessel_pair(mode.mode.l, mode.k() * g.r_outer);
        let b_out = pb.j * n_a - j_a * pb.y;
        let i_ro = b_out * b_out * g.r_outer * g.r_outer;
        let n3 = mode.norm.powi(3);
        let domega = [domega_dr(mode, Shell::Inner)?, domega_dr(mode, Shell::Outer)?];
        let s = Self {
            mode,
            dnorm_rinner: -0.5 * n3 * i_ri,
            dnorm_router: -0.5 * n3 * i_ro,
            dnorm_omega: -0.5 * n3 * i_om,
            domega,
        };
        if ![s.dnorm_rinner, s.dnorm_router, s.dnorm_omega].iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "normalization derivatives of mode (l={}, s={})",
                mode.mode.l, mode.mode.s
            )));
        }
        Ok(s)
    }

    pub fn domega_dr(&self, which: Shell) -> f64 {
        self.domega[which as usize]
    }

    /// Partial derivatives at fixed `omega` (radii) or fixed radii (`omega`).
    pub fn jet(&self, r: f64) -> ProfileJet {
        let n = self.mode.norm;
        let p = pieces(self.mode, r);
        ProfileJet {
            f: n * p.b,
            d_rinner: self.dnorm_rinner * p.b + n * p.b_ri,
            d_router: self.dnorm_router * p.b,
            d_omega: self.dnorm_omega * p.b + n * p.b_om,
        }
    }

    /// `dF/dr_alpha` following the root: the fixed-omega partial plus `(d omega/d r_alpha) dF/d omega`.
    pub fn total(&self, which: Shell, r: f64) -> f64 {
        let j = self.jet(r);
        let partial = match which {
            Shell::Inner => j.d_rinner,
            Shell::Outer => j.d_router,
        };
        partial + self.domega_dr(which) * j.d_omega
    }
}

/// One partial derivative of `F` at radius `r`.
pub fn df_dparam(mode: &RadialMode, which: Param, r: f64) -> Result<f64> {
    mode.eval(r)?;
    let j = Sensitivity::new(mode)?.jet(r);
    Ok(match which {
        Param::RInner => j.d_rinner,
        Param::ROuter => j.d_router,
        Param::Omega => j.d_omega,
    })
}

/// Coefficients multiplying `r_alpha'(t)` in `mu_ss'` at one geometry, for `s, s' <= s_trunc`.
#[derive(Debug, Clone)]
pub struct RawCouplings {
    pub l: u32,
    pub geometry: ShellGeometry,
    pub omegas: Vec<f64>,
    pub domega_inner: Vec<f64>,
    pub domega_outer: Vec<f64>,
    pub inner: DMatrix<f64>,
    pub outer: DMatrix<f64>,
}

impl RawCouplings {
    /// `mu = inner * v_inner + outer * v_outer`.
    pub fn mu(&self, v_inner: f64, v_outer: f64) -> DMatrix<f64> {
        &self.inner * v_inner + &self.outer * v_outer
    }
}

pub fn raw_couplings(geometry: &ShellGeometry, l: u32, s_trunc: usize) -> Result<RawCouplings> {
    let modes = radial_modes(geometry, l, s_trunc)?;
    raw_couplings_from_modes(&modes)
}

pub fn raw_couplings_from_modes(modes: &[RadialMode]) -> Result<RawCouplings> {
    let n = modes.len();
    if n == 0 {
        return Err(Error::Argument("need at least one mode".into()));
    }
    let sens: Vec<Sensitivity> = modes.iter().map(Sensitivity::new).collect::<Result<_>>()?;
    let grid = shared_grid(modes);
    // rows: grid points; per mode (F, dF/dr_i total, dF/dr_o total)
    let mut f = DMatrix::<f64>::zeros(grid.len(), n);
    let mut ti = DMatrix::<f64>::zeros(grid.len(), n);
    let mut to = DMatrix::<f64>::zeros(grid.len(), n);
    for (s, se) in sens.iter().enumerate() {
        let (wi, wo) = (se.domega_dr(Shell::Inner), se.domega_dr(Shell::Outer));
        for (k, &(r, w)) in grid.iter().enumerate() {
            let j = se.jet(r);
            let weight = w * r * r;
            f[(k, s)] = weight * j.f;
            ti[(k, s)] = j.d_rinner + wi * j.d_omega;
            to[(k, s)] = j.d_router + wo * j.d_omega;
        }
    }
    // overlap[s', s] = sum_r w r^2 F_s'(r) dF_s(r)
    let ov_i = f.transpose() * &ti;
    let ov_o = f.transpose() * &to;
    let omegas: Vec<f64> = modes.iter().map(|m| m.omega).collect();
    let domega_inner: Vec<f64> = sens.iter().map(|s| s.domega_dr(Shell::Inner)).collect();
    let domega_outer: Vec<f64> = sens.iter().map(|s| s.domega_dr(Shell::Outer)).collect();
    let mut inner = DMatrix::zeros(n, n);
    let mut outer = DMatrix::zeros(n, n);
    for s in 0..n {
        for sp in 0..n {
            if s == sp {
                inner[(s, s)] = domega_inner[s] / (2.0 * omegas[s]);
                outer[(s, s)] = domega_outer[s] / (2.0 * omegas[s]);
            } else {
                let pre = (omegas[s] / omegas[sp]).sqrt();
                inner[(s, sp)] = pre * ov_i[(sp, s)];
                outer[(s, sp)] = pre * ov_o[(sp, s)];
            }
        }
    }
    if inner.iter().chain(outer.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("coupling integrals".into()));
    }
    Ok(RawCouplings {
        l: modes[0].mode.l,
        geometry: modes[0].geometry,
        omegas,
        domega_inner,
        domega_outer,
        inner,
        outer,
    })
}

/// `mu_ss'` at time `t` under `motion`.
pub fn mu(l: u32, s: u32, s_prime: u32, motion: &MotionLaw, t: f64) -> Result<f64> {
    Mode::new(l, s)?;
    Mode::new(l, s_prime)?;
    let m = coupling_matrix(l, s.max(s_prime) as usize, motion, t)?;
    Ok(m.entries[(s as usize - 1, s_prime as usize - 1)])
}

/// Snapshot of `mu_ss'` for `s, s' <= s_trunc` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    pub l: u32,
    pub t: f64,
    pub entries: DMatrix<f64>,
}

pub fn coupling_matrix(l: u32, s_trunc: usize, motion: &MotionLaw, t: f64) -> Result<CouplingMatrix> {
    let st = motion.state(t)?;
    let n = s_trunc;
    if st.v_inner == 0.0 && st.v_outer == 0.0 {
        motion.geometry_at(t)?;
        return Ok(CouplingMatrix {
            l,
            t,
            entries: DMatrix::zeros(n, n),
        });
    }
    let raw = raw_couplings(&motion.geometry_at(t)?, l, n)?;
    Ok(CouplingMatrix {
        l,
        t,
        entries: raw.mu(st.v_inner, st.v_outer),
    })
}

/// Symmetric and antisymmetric parts.
pub fn mu_split(matrix: &CouplingMatrix) -> (DMatrix<f64>, DMatrix<f64>) {
    split(&matrix.entries)
}

pub fn split(m: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let t = m.transpose();
    ((m + &t) * 0.5, (m - &t) * 0.5)
}

/// First-order harmonic-motion coefficients of one mode pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResonanceCoefficients {
    pub l: u32,
    pub s: u32,
    pub s_prime: u32,
    pub c_inner: f64,
    pub c_outer: f64,
}

/// Symmetrized coefficients `(c_ss' + c_s's)/2`, the ones that drive pair creation.
pub fn c_alpha(l: u32, s: u32, s_prime: u32, geometry: &ShellGeometry) -> Result<ResonanceCoefficients> {
    let raw = pair_couplings(l, s, s_prime, geometry)?;
    let (a, b) = (s as usize - 1, s_prime as usize - 1);
    Ok(ResonanceCoefficients {
        l,
        s,
        s_prime,
        c_inner: 0.5 * (raw.inner[(a, b)] + raw.inner[(b, a)]),
        c_outer: 0.5 * (raw.outer[(a, b)] + raw.outer[(b, a)]),
    })
}

/// Unsymmetrized coefficients `c_ss'`.
pub fn c_alpha_raw(l: u32, s: u32, s_prime: u32, geometry: &ShellGeometry) -> Result<ResonanceCoefficients> {
    let raw = pair_couplings(l, s, s_prime, geometry)?;
    let (a, b) = (s as usize - 1, s_prime as usize - 1);
    Ok(ResonanceCoefficients {
        l,
        s,
        s_prime,
        c_inner: raw.inner[(a, b)],
        c_outer: raw.outer[(a, b)],
    })
}

fn pair_couplings(l: u32, s: u32, s_prime: u32, geometry: &ShellGeometry) -> Result<RawCouplings> {
    Mode::new(l, s)?;
    Mode::new(l, s_prime)?;
    raw_couplings(geometry, l, s.max(s_prime) as usize)
}

/// `int_{r_i}^{r_o} r^2 F_a F_b dr` over the panels of both modes.
pub fn overlap(a: &RadialMode, b: &RadialMode) -> f64 {
    let grid = shared_grid(&[a.clone(), b.clone()]);
    grid.iter().map(|&(r, w)| w * r * r * a.value(r) * b.value(r)).sum()
}

/// `int r^2 F^2 dr` evaluated on the mode's own panels.
pub fn norm_check(m: &RadialMode) -> f64 {
    integrate_panels(gl64(), &m.panel_edges(), |r| {
        let f = m.value(r);
        f * f * r * r
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{build_mode, radial_mode};
    use std::f64::consts::PI;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    fn raw_l0(which: Shell, s: u32, sp: u32, d: f64) -> f64 {
        let (sf, spf) = (s as f64, sp as f64);
        if s == sp {
            return match which {
                Shell::Inner => 0.5 / d,
                Shell::Outer => -0.5 / d,
            };
        }
        let base = (sf / spf).sqrt() * 2.0 * sf * spf / (d * (spf * spf - sf * sf));
        match which {
            Shell::Inner => -base,
            Shell::Outer => if (s + sp) % 2 == 0 { base } else { -base },
        }
    }

    #[test]
    fn l0_raw_and_symmetric_closed_forms() {
        for (ri, ro) in [(1.0, 2.0), (0.5, 2.0), (3.0, 3.4)] {
            let g = ShellGeometry::unit(ri, ro).unwrap();
            let d = ro - ri;
            let raw = raw_couplings(&g, 0, 4).unwrap();
            for s in 1..=4u32 {
                for sp in 1..=4u32 {
                    let (a, b) = (s as usize - 1, sp as usize - 1);
                    assert!(rel(raw.inner[(a, b)], raw_l0(Shell::Inner, s, sp, d)) < 1e-8);
                    assert!(rel(raw.outer[(a, b)], raw_l0(Shell::Outer, s, sp, d)) < 1e-8);
                    let sym = (s as f64 * sp as f64).sqrt() / ((s + sp) as f64 * d);
                    let c = c_alpha(0, s, sp, &g).unwrap();
                    let parity = if (s + sp) % 2 == 0 { 1.0 } else { -1.0 };
                    assert!(rel(c.c_inner, sym) < 1e-8, "s={s} sp={sp}");
                    assert!(rel(-parity * c.c_outer, sym) < 1e-8);
                }
            }
        }
        let g = ShellGeometry::unit(1.0, 2.0).unwrap();
        let c = c_alpha(0, 1, 2, &g).unwrap();
        assert!(rel(c.c_inner, 2f64.sqrt() / 3.0) < 1e-10);
        assert!(rel(c.c_outer, 2f64.sqrt() / 3.0) < 1e-10);
        let c = c_alpha(0, 1, 1, &g).unwrap();
        assert!(rel(c.c_inner, 0.5) < 1e-10);
    }

    fn fd_param(m: &RadialMode, which: Param, r: f64) -> f64 {
        let g = m.geometry;
        let h = match which {
            Param::RInner => 1e-6 * g.r_inner,
            Param::ROuter => 1e-6 * g.r_outer,
            Param::Omega => 1e-6 * m.omega,
        };
        let at = |dh: f64| {
            let mut gg = g;
            let mut w = m.omega;
            match which {
                Param::RInner => gg.r_inner += dh,
                Param::ROuter => gg.r_outer += dh,
                Param::Omega => w += dh,
            }
            build_mode(&gg, m.mode, w).unwrap().value(r)
        };
        (at(h) - at(-h)) / (2.0 * h)
    }

    #[test]
    fn partial_derivatives_match_finite_differences() {
        for (ri, ro, l, s) in [(1.0, 2.0, 0, 2), (1.0, 2.0, 1, 1), (1.0, 3.0, 2, 3)] {
            let g = ShellGeometry::unit(ri, ro).unwrap();
            let m = radial_mode(&g, Mode::new(l, s).unwrap()).unwrap();
            let se = Sensitivity::new(&m).unwrap();
            let scale = (0..=20)
                .map(|k| se.jet(ri + (ro - ri) * k as f64 / 20.0).d_omega.abs())
                .fold(0.0, f64::max);
            for r in [ri + 0.13 * (ro - ri), 0.5 * (ri + ro), ri + 0.91 * (ro - ri)] {
                let j = se.jet(r);
                let fi = fd_param(&m, Param::RInner, r);
                assert!(rel(j.d_rinner, fi) < 1e-5, "l={l} s={s} r={r}: {} vs {fi}", j.d_rinner);
                let fo = fd_param(&m, Param::Omega, r);
                assert!((j.d_omega - fo).abs() < 1e-5 * scale, "{} vs {fo}", j.d_omega);
                let fr = fd_param(&m, Param::ROuter, r);
                assert!((j.d_router - fr).abs() < 1e-5 * scale);
            }
            assert_eq!(df_dparam(&m, Param::ROuter, ri).unwrap(), 0.0);
            assert!(df_dparam(&m, Param::Omega, ro + 0.1).is_err());
        }
    }

    #[test]
    fn l0_total_outer_derivative_matches_symbolic() {
        let (ri, ro) = (1.0, 2.5);
        let g = ShellGeometry::unit(ri, ro).unwrap();
        for s in 1..=3u32 {
            let m = radial_mode(&g, Mode::new(0, s).unwrap()).unwrap();
            let se = Sensitivity::new(&m).unwrap();
            let sp = s as f64 * PI;
            for k in 1..10 {
                let r = ri + (ro - ri) * k as f64 / 10.0;
                let d = ro - ri;
                let th = sp * (r - ri) / d;
                let exact = -0.5 * 2f64.sqrt() * d.powf(-1.5) * th.sin() / r
                    + (2.0 / d).sqrt() * th.cos() * (-sp * (r - ri) / (d * d)) / r;
                assert!((se.total(Shell::Outer, r) - exact).abs() < 1e-8, "s={s} r={r}");
            }
        }
    }

    #[test]
    fn total_derivative_matches_mode_finite_difference() {
        let g = ShellGeometry::unit(1.0, 2.0).unwrap();
        let m = radial_mode(&g, Mode::new(1, 2).unwrap()).unwrap();
        let se = Sensitivity::new(&m).unwrap();
        for which in Shell::BOTH {
            let h = 1e-6 * g.radius(which);
            let at = |dh: f64| {
                let mut gg = g;
                match which {
                    Shell::Inner => gg.r_inner += dh,
                    Shell::Outer => gg.r_outer += dh,
                }
                radial_mode(&gg, m.mode).unwrap().value(1.4)
            };
            let fd = (at(h) - at(-h)) / (2.0 * h);
            assert!(rel(se.total(which, 1.4), fd) < 1e-5);
        }
    }

    #[test]
    fn sign_law_and_gap_scaling() {
        let g = ShellGeometry::unit(1.0, 1.8).unwrap();
        for s in 1..=3u32 {
            for sp in 1..=3u32 {
                let c = c_alpha(0, s, sp, &g).unwrap();
                let parity = if (s + sp) % 2 == 0 { 1.0 } else { -1.0 };
                assert!(rel(c.c_inner, -parity * c.c_outer) < 1e-6);
                for l in [0, 1, 3] {
                    let c = c_alpha(l, s, sp, &g).unwrap();
                    for lambda in [0.2, 7.0] {
                        let cs = c_alpha(l, s, sp, &g.scaled(lambda).unwrap()).unwrap();
                        assert!(rel(lambda * cs.c_inner, c.c_inner) < 1e-6);
                        assert!(rel(lambda * cs.c_outer, c.c_outer) < 1e-6);
                    }
                }
            }
        }
        let g = ShellGeometry::unit(1.0, 2.0).unwrap();
        let c = c_alpha(1, 1, 1, &g).unwrap();
        assert!(rel(c.c_inner, -c.c_outer) > 1e-3);
        assert!(rel(c.c_inner, c.c_outer) > 1e-3);
    }

    #[test]
    fn l1_magnitude_grows_as_gap_closes() {
        for sp in 1..=3u32 {
            for which in Shell::BOTH {
                let mut last = 0.0;
                for ratio in [5.0, 3.0, 2.0, 1.5, 1.2] {
                    let g = ShellGeometry::unit(1.0, ratio).unwrap();
                    let c = c_alpha(1, 1, sp, &g).unwrap();
                    let v = match which {
                        Shell::Inner => c.c_inner,
                        Shell::Outer => c.c_outer,
                    };
                    let scaled = (ratio - 1.0) * v.abs();
                    assert!(scaled > last, "s'={sp} {which:?} ratio={ratio}: {scaled} <= {last}");
                    last = scaled;
                }
            }
        }
    }

    #[test]
    fn static_and_turning_points_vanish() {
        let g = ShellGeometry::unit(1.0, 2.0).unwrap();
        let law = MotionLaw::fixed(g).unwrap();
        assert_eq!(mu(0, 1, 2, &law, 3.0).unwrap(), 0.0);
        let varpi = 2.0 * PI;
        let law = MotionLaw::harmonic(g, 1e-3, 2e-3, varpi).unwrap();
        let t = PI / (2.0 * varpi);
        for (s, sp) in [(1, 1), (1, 2), (2, 3)] {
            assert!(mu(1, s, sp, &law, t).unwrap().abs() < 1e-10);
        }
    }

    #[test]
    fn small_amplitude_matches_coefficients() {
        let g = ShellGeometry::unit(1.0, 2.0).unwrap();
        let (ei, eo, varpi) = (1e-4, -2e-4, 3.0);
        let law = MotionLaw::harmonic(g, ei, eo, varpi).unwrap();
        let t = 0.37;
        let m = coupling_matrix(1, 3, &law, t).unwrap();
        let (sym, _) = mu_split(&m);
        for s in 1..=3u32 {
            for sp in 1..=3u32 {
                let c = c_alpha(1, s, sp, &g).unwrap();
                let cr = c_alpha_raw(1, s, sp, &g).unwrap();
                let amp = (varpi * t).cos() * varpi;
                let want = (c.c_inner * ei + c.c_outer * 2.0 * eo) * amp;
                let want_raw = (cr.c_inner * ei + cr.c_outer * 2.0 * eo) * amp;
                let (a, b) = (s as usize - 1, sp as usize - 1);
                assert!(rel(sym[(a, b)], want) < 1e-3, "{s} {sp}");
                assert!(rel(m.entries[(a, b)], want_raw) < 1e-3);
            }
        }
    }

    #[test]
    fn periodic_in_drive_period() {
        let g = ShellGeometry::unit(1.0, 2.0).unwrap();
        let varpi = 2.5;
        let law = MotionLaw::harmonic(g, 1e-3, 1e-3, varpi).unwrap();
        for t in [0.1, 0.8] {
            let a = mu(0, 1, 2, &law, t).unwrap();
            let b = mu(0, 1, 2, &law, t + 2.0 * PI / varpi).unwrap();
            assert!((a - b).abs() <= 1e-6 * a.abs());
        }
    }

    #[test]
    fn split_examples() {
        let m = CouplingMatrix {
            l: 0,
            t: 0.0,
            entries: DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]),
        };
        let (s, a) = mu_split(&m);
        assert_eq!(s, DMatrix::zeros(2, 2));
        assert_eq!(a, m.entries);
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 2.0, 3.0]));
        let (s, a) = split(&d);
        assert_eq!(s, d);
        assert_eq!(a, DMatrix::zeros(3, 3));
    }

    #[test]
    fn normalization_helpers() {
        let g = ShellGeometry::unit(1.0, 2.0).unwrap();
        let a = radial_mode(&g, Mode::new(2, 1).unwrap()).unwrap();
        let b = radial_mode(&g, Mode::new(2, 3).unwrap()).unwrap();
        assert!((norm_check(&a) - 1.0).abs() < 1e-12);
        assert!(overlap(&a, &b).abs() < 1e-10);
    }
}
