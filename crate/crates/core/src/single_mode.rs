//! Closed-form results for one squeezed mode.
//!
//! With the mode polarized along z and propagating along y, the renormalized
//! coherence functional of an electron emitted at t₀ is
//!
//! ```text
//! W_R(t₀) = −(8π α_fs / (V ω̄)) · η [μ cos(2ω̄t₀ − θ) + η] · M
//! ```
//!
//! where M ≥ 0 depends only on the path and ω̄. Everything else in this module
//! (long-time average, emission window, windowed averages, bounds) follows
//! from the range and mean of the bracket.
//!
//! Phase convention: the phase function g uses `alpha0 + beta t₀` with
//! `beta = 2ω̄`. The default `alpha0 = −θ` matches the W_R formula above. An
//! alternative convention adds a constant ω̄T; it only translates the window in
//! t₀ and leaves every width, average and bound unchanged, so it is exposed as
//! [`PhaseFunctionParams::with_offset`].

use std::f64::consts::{PI, TAU};

use crate::error::{ensure_finite, ensure_positive, Error, Result};
use crate::squeezed::{ModeSpec, SqueezeState};
use crate::trajectory::Trajectory;
use crate::FINE_STRUCTURE;

/// Below this argument the bracket is summed from its Taylor series.
const BRACKET_SERIES_CUTOFF: f64 = 0.5;

/// Above this η the windowed average uses its asymptotic series.
const LARGE_ETA: f64 = 100.0;

/// (x² − 3) sin x + 3x cos x.
///
/// Behaves as −x⁵/15 for small x, where direct evaluation cancels
/// catastrophically; there the series Σ_{k≥2} (−1)^{k+1} 4k(k−1) x^{2k+1}/(2k+1)!
/// is used instead.
pub fn envelope_bracket(x: f64) -> f64 {
    if x.abs() < BRACKET_SERIES_CUTOFF {
        let x2 = x * x;
        // term_k = x^{2k+1}/(2k+1)!
        let mut term = x * x2 * x2 / 120.0;
        let mut sum = 0.0;
        for k in 2..20u32 {
            let kf = k as f64;
            let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
            let c = sign * 4.0 * kf * (kf - 1.0) * term;
            sum += c;
            if c.abs() < 1e-18 * sum.abs() {
                break;
            }
            term *= x2 / ((2.0 * kf + 2.0) * (2.0 * kf + 3.0));
        }
        sum
    } else {
        (x * x - 3.0) * x.sin() + 3.0 * x * x.cos()
    }
}

/// Envelope M = (16R/(ω̄⁴T⁴))² [(ω̄²T² − 3) sin ω̄T + 3ω̄T cos ω̄T]².
///
/// Independent of the emission time and never negative.
pub fn envelope_m(mode: &ModeSpec, traj: &Trajectory) -> Result<f64> {
    let x = mode.omega_bar() * traj.half_time();
    let amp = 16.0 * traj.half_separation() * envelope_bracket(x) / x.powi(4);
    let m = amp * amp;
    if !m.is_finite() {
        return Err(Error::range(format!(
            "envelope M overflows at omega_bar*T = {x}"
        )));
    }
    Ok(m)
}

/// 8π α_fs / (V ω̄).
fn coupling(mode: &ModeSpec) -> f64 {
    8.0 * PI * FINE_STRUCTURE / (mode.volume() * mode.omega_bar())
}

/// Phase of the bracket as a function of emission time, `alpha0 + beta t₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseFunctionParams {
    pub alpha0: f64,
    beta: f64,
}

impl PhaseFunctionParams {
    pub fn new(alpha0: f64, beta: f64) -> Result<Self> {
        ensure_finite("alpha0", alpha0)?;
        ensure_positive("beta", beta)?;
        Ok(Self { alpha0, beta })
    }

    /// alpha0 = −θ, beta = 2ω̄.
    pub fn for_mode(state: &SqueezeState, mode: &ModeSpec) -> Self {
        Self {
            alpha0: -state.theta(),
            beta: 2.0 * mode.omega_bar(),
        }
    }

    /// Adds a constant to alpha0, e.g. ω̄T.
    pub fn with_offset(self, offset: f64) -> Self {
        Self {
            alpha0: self.alpha0 + offset,
            ..self
        }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Period of g in t₀.
    pub fn period(&self) -> f64 {
        TAU / self.beta
    }
}

/// g(r, t₀) = η[μ cos(alpha0 + beta t₀) + η].
pub fn g(state: &SqueezeState, params: &PhaseFunctionParams, t0: f64) -> f64 {
    state.weighted_bracket(params.alpha0 + params.beta * t0)
}

/// Minimum of g over t₀: η(η − μ) = −(1 − e^{−2r})/2.
pub fn g_min(state: &SqueezeState) -> f64 {
    0.5 * (-2.0 * state.r()).exp_m1()
}

/// Maximum of g over t₀: η(η + μ) = (e^{2r} − 1)/2.
pub fn g_max(state: &SqueezeState) -> f64 {
    0.5 * (2.0 * state.r()).exp_m1()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceResult {
    pub w_r: f64,
    /// Change of fringe contrast, e^{W_R}.
    pub contrast_factor: f64,
}

impl CoherenceResult {
    pub fn new(w_r: f64) -> Self {
        Self {
            w_r,
            contrast_factor: w_r.exp(),
        }
    }

    /// Contrast is enhanced relative to the vacuum.
    pub fn is_recoherent(&self) -> bool {
        self.contrast_factor > 1.0
    }
}

/// W_R for an electron emitted at `t0`.
pub fn w_r_of_t0(
    state: &SqueezeState,
    mode: &ModeSpec,
    traj: &Trajectory,
    t0: f64,
) -> Result<CoherenceResult> {
    ensure_finite("t0", t0)?;
    let m = envelope_m(mode, traj)?;
    let phase = 2.0 * mode.omega_bar() * t0 - state.theta();
    let w = -coupling(mode) * state.weighted_bracket(phase) * m;
    if !w.is_finite() {
        return Err(Error::range(format!("W_R overflows at r = {}", state.r())));
    }
    Ok(CoherenceResult::new(w))
}

/// Average of W_R over all emission times, −(8π α_fs/(V ω̄)) η² M ≤ 0.
pub fn long_time_average(state: &SqueezeState, mode: &ModeSpec, traj: &Trajectory) -> Result<f64> {
    let m = envelope_m(mode, traj)?;
    let eta = state.eta();
    let w = -coupling(mode) * eta * eta * m;
    if !w.is_finite() {
        return Err(Error::range(format!(
            "long-time average overflows at r = {}",
            state.r()
        )));
    }
    Ok(w)
}

/// Interval of emission times on which g < 0, i.e. W_R > 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmissionWindow {
    pub t_i: f64,
    pub t_f: f64,
    pub width: f64,
    /// Set for r = 0, where g vanishes identically and the width is the
    /// r → 0⁺ limit π/beta.
    pub degenerate: bool,
}

impl EmissionWindow {
    pub fn center(&self) -> f64 {
        0.5 * (self.t_i + self.t_f)
    }

    pub fn contains(&self, t0: f64) -> bool {
        t0 > self.t_i && t0 < self.t_f
    }
}

/// The first window at or after t₀ = 0 (by centre), centred where
/// alpha0 + beta t₀ = π mod 2π, of width (2/beta) arccos(η/μ).
pub fn emission_window(state: &SqueezeState, params: &PhaseFunctionParams) -> EmissionWindow {
    let xi = state.window_half_angle();
    let center = (PI - params.alpha0).rem_euclid(TAU) / params.beta;
    let half = xi / params.beta;
    EmissionWindow {
        t_i: center - half,
        t_f: center + half,
        width: 2.0 * half,
        degenerate: state.is_vacuum(),
    }
}

/// Average of g over the emission window, −η/arccos(η/μ) + η².
///
/// Lies in (−1/3, 0) for r > 0, decreasing towards −1/3; 0 at r = 0.
pub fn windowed_average_g(state: &SqueezeState) -> f64 {
    if state.is_vacuum() {
        return 0.0;
    }
    let eta = state.eta();
    if eta > LARGE_ETA {
        let u = 1.0 / (eta * eta);
        let tail =
            4.0 / 45.0 + u * (-44.0 / 945.0 + u * (428.0 / 14175.0 - u * 10196.0 / 467775.0));
        return -1.0 / 3.0 + u * tail;
    }
    eta * eta - eta / state.window_half_angle()
}

/// W_R averaged over the emission window, −(8π α_fs/(V ω̄)) M g̃(r) > 0.
pub fn windowed_average_w_r(
    state: &SqueezeState,
    mode: &ModeSpec,
    traj: &Trajectory,
) -> Result<f64> {
    Ok(-coupling(mode) * envelope_m(mode, traj)? * windowed_average_g(state))
}

/// Supremum of the windowed average over r, (8π α_fs/(3V ω̄)) M.
pub fn max_recoherence(mode: &ModeSpec, traj: &Trajectory) -> Result<f64> {
    Ok(coupling(mode) * envelope_m(mode, traj)? / 3.0)
}

/// Vacuum plus squeezed contributions of the excited mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitaritySum {
    /// Vacuum contribution of this mode, −(4π α_fs/(V ω̄)) M.
    pub w0: f64,
    /// Bound on the windowed W_R.
    pub w_r_max: f64,
    /// w0 + w_r_max = −(4π α_fs/(3V ω̄)) M.
    pub total: f64,
    /// Largest pointwise W_R over t₀ for the given state.
    pub w_r_peak: f64,
    /// w0 + w_r_peak, also never positive.
    pub pointwise_total: f64,
}

pub fn unitarity_sum(
    state: &SqueezeState,
    mode: &ModeSpec,
    traj: &Trajectory,
) -> Result<UnitaritySum> {
    let m = envelope_m(mode, traj)?;
    let c = coupling(mode);
    let w0 = -0.5 * c * m;
    let w_r_max = c * m / 3.0;
    let w_r_peak = -c * m * g_min(state);
    Ok(UnitaritySum {
        w0,
        w_r_max,
        total: w0 + w_r_max,
        w_r_peak,
        pointwise_total: w0 + w_r_peak,
    })
}
