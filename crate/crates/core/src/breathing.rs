//! Harmonic breathing of the shells: resonance laws, scenarios and scans.

use std::f64::consts::PI;

use log::warn;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::coupling::{raw_couplings, ResonanceCoefficients};
use crate::error::{Error, Result};
use crate::motion::MotionLaw;
use crate::spectrum::{find_eigenfrequencies, Mode, ShellGeometry};

/// Ratio between `N` from the first-order integral and the resonance law `(sum c r eps varpi t)^2`.
pub const RESONANCE_PREFACTOR: f64 = 0.25;

/// Harmonic motion `r_alpha(t) = r_alpha (1 + eps_alpha sin(varpi t))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BreathingMotion {
    pub geometry: ShellGeometry,
    pub eps_inner: f64,
    pub eps_outer: f64,
    pub varpi: f64,
}

pub const MAX_EPS: f64 = 0.1;
pub const WARN_EPS: f64 = 0.01;

impl BreathingMotion {
    pub fn new(geometry: ShellGeometry, eps_inner: f64, eps_outer: f64, varpi: f64) -> Result<Self> {
        geometry.validate()?;
        for (name, e) in [("eps_inner", eps_inner), ("eps_outer", eps_outer)] {
            if !e.is_finite() || e.abs() > MAX_EPS {
                return Err(Error::Argument(format!("{name} = {e} must satisfy |eps| <= {MAX_EPS}")));
            }
            if e.abs() > WARN_EPS {
                warn!("{name} = {e} exceeds {WARN_EPS}; second-order results lose accuracy");
            }
        }
        if !(varpi.is_finite() && varpi > 0.0) {
            return Err(Error::Argument(format!("varpi must be positive, got {varpi}")));
        }
        if geometry.r_outer * (1.0 - eps_outer.abs()) <= geometry.r_inner * (1.0 + eps_inner.abs()) {
            return Err(Error::Argument("the shells would touch during the oscillation".into()));
        }
        Ok(Self {
            geometry,
            eps_inner,
            eps_outer,
            varpi,
        })
    }

    pub fn from_scenario(geometry: ShellGeometry, scenario: Scenario, varpi: f64) -> Result<Self> {
        let (ei, eo) = scenario.amplitudes();
        Self::new(geometry, ei, eo, varpi)
    }

    pub fn motion_law(&self) -> Result<MotionLaw> {
        MotionLaw::harmonic(self.geometry, self.eps_inner, self.eps_outer, self.varpi)
    }

    /// `sum_alpha c^alpha r_alpha eps_alpha`.
    pub fn amplitude(&self, c: &ResonanceCoefficients) -> f64 {
        c.c_inner * self.geometry.r_inner * self.eps_inner + c.c_outer * self.geometry.r_outer * self.eps_outer
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioTag {
    /// Inner shell only.
    A,
    /// Outer shell only.
    B,
    /// Both shells in phase.
    C,
    /// Both shells out of phase.
    D,
}

impl ScenarioTag {
    pub const ALL: [ScenarioTag; 4] = [ScenarioTag::A, ScenarioTag::B, ScenarioTag::C, ScenarioTag::D];

    pub fn letter(self) -> char {
        match self {
            Self::A => 'a',
            Self::B => 'b',
            Self::C => 'c',
            Self::D => 'd',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Scenario {
    pub tag: ScenarioTag,
    pub eps: f64,
}

impl Scenario {
    pub fn new(tag: ScenarioTag, eps: f64) -> Self {
        Self { tag, eps }
    }

    /// `(eps_inner, eps_outer)`.
    pub fn amplitudes(&self) -> (f64, f64) {
        let e = self.eps;
        match self.tag {
            ScenarioTag::A => (e, 0.0),
            ScenarioTag::B => (0.0, e),
            ScenarioTag::C => (e, e),
            ScenarioTag::D => (e, -e),
        }
    }
}

fn parity(s: u32, s_prime: u32) -> f64 {
    if (s + s_prime).is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Resonance data of one mode pair under a breathing motion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResonancePrediction {
    pub l: u32,
    pub s: u32,
    pub s_prime: u32,
    /// `omega_s(0) + omega_s'(0)`.
    pub omega_res: f64,
    /// `sum_alpha c^alpha r_alpha eps_alpha`.
    pub amplitude: f64,
}

impl ResonancePrediction {
    /// Quadratic law `(amplitude varpi t)^2` at `varpi = omega_res`.
    pub fn number(&self, t: f64) -> f64 {
        (self.amplitude * self.omega_res * t).powi(2)
    }
}

/// Symmetrized coefficients for all pairs `s, s' <= s_max` at one `l`, plus `omega(0)`.
fn coefficient_table(l: u32, s_max: usize, geometry: &ShellGeometry) -> Result<(Vec<f64>, Vec<Vec<ResonanceCoefficients>>)> {
    let raw = raw_couplings(geometry, l, s_max)?;
    let table = (0..s_max)
        .map(|a| {
            (0..s_max)
                .map(|b| ResonanceCoefficients {
                    l,
                    s: a as u32 + 1,
                    s_prime: b as u32 + 1,
                    c_inner: 0.5 * (raw.inner[(a, b)] + raw.inner[(b, a)]),
                    c_outer: 0.5 * (raw.outer[(a, b)] + raw.outer[(b, a)]),
                })
                .collect()
        })
        .collect();
    Ok((raw.omegas, table))
}

pub fn resonance_prediction(l: u32, s: u32, s_prime: u32, motion: &BreathingMotion) -> Result<ResonancePrediction> {
    Mode::new(l, s)?;
    Mode::new(l, s_prime)?;
    let n = s.max(s_prime) as usize;
    let (w, c) = coefficient_table(l, n, &motion.geometry)?;
    let (a, b) = (s as usize - 1, s_prime as usize - 1);
    Ok(ResonancePrediction {
        l,
        s,
        s_prime,
        omega_res: w[a] + w[b],
        amplitude: motion.amplitude(&c[a][b]),
    })
}

/// `(e^{ixt} - 1) / x`, with the removable point handled as `i t e^{ixt/2} sinc(xt/2)`.
fn detuning_term(x: f64, t: f64) -> Complex64 {
    if (x * t).abs() < 1e-6 {
        let y = 0.5 * x * t;
        let sinc = 1.0 - y * y / 6.0;
        Complex64::i() * t * Complex64::from_polar(1.0, y) * sinc
    } else {
        (Complex64::from_polar(1.0, x * t) - 1.0) / x
    }
}

/// Two-denominator law with frozen frequencies, summed over `s' <= s_prime_max`.
pub fn closed_form_n(l: u32, s: u32, motion: &BreathingMotion, t: f64, s_prime_max: usize) -> Result<f64> {
    Mode::new(l, s)?;
    if s_prime_max == 0 {
        return Err(Error::Argument("s'_max must be at least 1".into()));
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::Argument(format!("time must be non-negative, got {t}")));
    }
    if motion.eps_inner == 0.0 && motion.eps_outer == 0.0 {
        return Ok(0.0);
    }
    let n = s_prime_max.max(s as usize);
    let (w, c) = coefficient_table(l, n, &motion.geometry)?;
    let a = s as usize - 1;
    let vp = motion.varpi;
    Ok((0..s_prime_max)
        .map(|b| {
            let om = w[a] + w[b];
            let bracket = detuning_term(om + vp, t) + detuning_term(om - vp, t);
            bracket.norm_sqr() * (motion.amplitude(&c[a][b]) * vp).powi(2)
        })
        .sum())
}

/// l=0 resonant law at `varpi = (s + s') pi c / (r_o - r_i)`.
pub fn resonant_n_l0(
    s: u32,
    s_prime: u32,
    scenario: ScenarioTag,
    geometry: &ShellGeometry,
    eps: f64,
    t: f64,
    varpi: f64,
) -> Result<f64> {
    Mode::new(0, s)?;
    Mode::new(0, s_prime)?;
    geometry.validate()?;
    let d = geometry.gap();
    let res = (s + s_prime) as f64 * PI * geometry.c / d;
    if (varpi - res).abs() > 1e-9 * res {
        return Err(Error::Precondition(format!(
            "varpi = {varpi} is not the l=0 resonance (s+s') pi c/(r_o-r_i) = {res}"
        )));
    }
    let (ei, eo) = Scenario::new(scenario, eps).amplitudes();
    let (sf, spf) = (s as f64, s_prime as f64);
    let first = sf * spf / (sf + spf).powi(2);
    let second = second_factor(geometry, ei, eo, s, s_prime);
    Ok(first * second * (varpi * t).powi(2))
}

/// `[(eps_o r_o - (-1)^{s+s'} eps_i r_i) / (r_o - r_i)]^2`.
pub fn second_factor(geometry: &ShellGeometry, eps_i: f64, eps_o: f64, s: u32, s_prime: u32) -> f64 {
    let num = eps_o * geometry.r_outer - parity(s, s_prime) * eps_i * geometry.r_inner;
    (num / geometry.gap()).powi(2)
}

/// Whether the second factor stays `<= 1`; false if `r_o - r_i < |r_o eps_o| + |r_i eps_i|`.
pub fn second_factor_bound_check(geometry: &ShellGeometry, eps_i: f64, eps_o: f64, s: u32, s_prime: u32) -> bool {
    let reach = (geometry.r_outer * eps_o).abs() + (geometry.r_inner * eps_i).abs();
    if geometry.gap() < reach * (1.0 - 1e-12) {
        return false;
    }
    second_factor(geometry, eps_i, eps_o, s, s_prime) <= 1.0 + 1e-12
}

/// `sqrt(1 + 1/(4 s (s+1)))`.
pub fn shift_threshold(s: u32) -> f64 {
    let sf = s as f64;
    (1.0 + 1.0 / (4.0 * sf * (sf + 1.0))).sqrt()
}

/// Shift test with general amplitudes: `|(v_o + v_i)/(v_o - v_i)| > threshold`.
pub fn shift_condition(s: u32, geometry: &ShellGeometry, eps_i: f64, eps_o: f64) -> Result<bool> {
    Mode::new(0, s)?;
    let vi = eps_i * geometry.r_inner;
    let vo = eps_o * geometry.r_outer;
    if vo == vi {
        return Err(Error::VacuouslyExtreme);
    }
    let ratio = ((vo + vi) / (vo - vi)).abs();
    let shifted = ratio > shift_threshold(s);
    if shifted {
        let direct = shift_by_direct_comparison(s, geometry, eps_i, eps_o)?;
        if !direct {
            warn!("shift criterion and direct comparison disagree at s = {s}, ratio = {ratio}");
        }
    }
    Ok(shifted)
}

/// Shift test for scenario (d).
pub fn principal_resonance_shift(s: u32, geometry: &ShellGeometry, eps: f64) -> Result<bool> {
    let (ei, eo) = Scenario::new(ScenarioTag::D, eps).amplitudes();
    shift_condition(s, geometry, ei, eo)
}

/// Compares the l=0 resonant law at `(s, s+1)` and `(s, s)` at equal `eps varpi t`.
pub fn shift_by_direct_comparison(s: u32, geometry: &ShellGeometry, eps_i: f64, eps_o: f64) -> Result<bool> {
    let d = geometry.gap();
    let c = geometry.c;
    let ordinate = |sp: u32| -> f64 {
        let (sf, spf) = (s as f64, sp as f64);
        let varpi = (sf + spf) * PI * c / d;
        // equal varpi t for both resonances
        let t = 1.0 / varpi;
        sf * spf / (sf + spf).powi(2) * second_factor(geometry, eps_i, eps_o, s, sp) * (varpi * t).powi(2)
    };
    Ok(ordinate(s + 1) > ordinate(s))
}

/// Whether the first-order amplitude `sum_alpha c^alpha r_alpha eps_alpha` cancels.
pub fn no_creation_condition(l: u32, s: u32, s_prime: u32, geometry: &ShellGeometry, eps_i: f64, eps_o: f64) -> Result<bool> {
    Mode::new(l, s)?;
    Mode::new(l, s_prime)?;
    geometry.validate()?;
    if eps_o == 0.0 {
        return Ok(false);
    }
    let ratio = geometry.ratio();
    if l == 0 {
        let want = eps_i / eps_o * parity(s, s_prime);
        return Ok(want > 1.0 && (ratio - want).abs() <= 1e-9 * ratio);
    }
    let n = s.max(s_prime) as usize;
    let (_, c) = coefficient_table(l, n, geometry)?;
    let cc = &c[s as usize - 1][s_prime as usize - 1];
    if cc.c_outer == 0.0 {
        return Ok(false);
    }
    let want = -eps_i * cc.c_inner / (eps_o * cc.c_outer);
    Ok(want > 1.0 && (ratio - want).abs() <= 1e-6 * ratio)
}

/// One resonance of the scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanRow {
    pub scenario: ScenarioTag,
    pub l: u32,
    pub s: u32,
    pub s_prime: u32,
    /// `omega_s(0) + omega_s'(0)`.
    pub varpi: f64,
    /// `varpi / omega_01(0)`.
    pub abscissa: f64,
    /// `N / (eps varpi t)^2` of the resonance law, `(sum_alpha c^alpha r_alpha eps_alpha / eps)^2`.
    pub coefficient: f64,
}

/// Resonant abscissae and quadratic-growth coefficients for `l <= l_max`, `s, s' <= s_max`.
pub fn resonance_scan(
    l_max: u32,
    s_max: usize,
    scenario: Scenario,
    geometry: &ShellGeometry,
) -> Result<Vec<ScanRow>> {
    resonance_scan_many(l_max, s_max, &[scenario.tag], scenario.eps, geometry)
}

/// Same as [`resonance_scan`] for several scenarios, ordered by (scenario, l, s, s').
pub fn resonance_scan_many(
    l_max: u32,
    s_max: usize,
    tags: &[ScenarioTag],
    eps: f64,
    geometry: &ShellGeometry,
) -> Result<Vec<ScanRow>> {
    if s_max == 0 {
        return Ok(Vec::new());
    }
    if eps == 0.0 || !eps.is_finite() {
        return Err(Error::Argument(format!("eps must be finite and nonzero, got {eps}")));
    }
    let w01 = find_eigenfrequencies(geometry, 0, 1)?[0];
    let per_l: Vec<(Vec<f64>, Vec<Vec<ResonanceCoefficients>>)> = (0..=l_max)
        .into_par_iter()
        .map(|l| coefficient_table(l, s_max, geometry))
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for &tag in tags {
        let (ei, eo) = Scenario::new(tag, eps).amplitudes();
        for (l, (w, c)) in per_l.iter().enumerate() {
            for a in 0..s_max {
                for b in 0..s_max {
                    let cc = &c[a][b];
                    let amp = cc.c_inner * geometry.r_inner * ei + cc.c_outer * geometry.r_outer * eo;
                    let varpi = w[a] + w[b];
                    rows.push(ScanRow {
                        scenario: tag,
                        l: l as u32,
                        s: a as u32 + 1,
                        s_prime: b as u32 + 1,
                        varpi,
                        abscissa: varpi / w01,
                        coefficient: (amp / eps).powi(2),
                    });
                }
            }
        }
    }
    Ok(rows)
}
