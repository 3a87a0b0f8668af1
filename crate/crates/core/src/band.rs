//! Finite-bandwidth multimode squeezed vacuum.
//!
//! Modes in a small cone ΔΩ around k̄ with frequencies in the top-hat band
//! [ω̄ − Δω, ω̄ + Δω] share one squeeze parameter. Each mode contributes the
//! single-mode W_R; in the continuum the mode sum becomes
//! (1/V)Σ → ΔΩ/(2π)³ ∫ ω² f(ω) dω.

use std::f64::consts::{PI, TAU};

use crate::error::{ensure_finite, ensure_positive, Error, Result};
use crate::estimates::envelope_f;
use crate::oracle::QuadratureConfig;
use crate::single_mode::{envelope_bracket, windowed_average_g};
use crate::squeezed::SqueezeState;
use crate::trajectory::Trajectory;
use crate::E_SQUARED;

/// Threshold above which a "≪ 1" factor is flagged.
const SMALLNESS_LIMIT: f64 = 0.5;

/// Top-hat band of excited modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandSpec {
    omega_bar: f64,
    delta_omega: f64,
    solid_angle: f64,
}

/// Regime warnings for a band; none of them prevents evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BandFlags {
    /// Δω T is not small.
    pub wide_in_time: bool,
    /// Δω/ω̄ is not small.
    pub wide_in_frequency: bool,
    /// ΔΩ is not small compared with 4π.
    pub wide_cone: bool,
}

impl BandFlags {
    pub fn any(&self) -> bool {
        self.wide_in_time || self.wide_in_frequency || self.wide_cone
    }
}

impl BandSpec {
    pub fn new(omega_bar: f64, delta_omega: f64, solid_angle: f64) -> Result<Self> {
        ensure_positive("omega_bar", omega_bar)?;
        ensure_positive("delta_omega", delta_omega)?;
        ensure_positive("solid_angle", solid_angle)?;
        if delta_omega >= omega_bar {
            return Err(Error::domain(format!(
                "half-bandwidth {delta_omega} must be below the centre frequency {omega_bar}"
            )));
        }
        if solid_angle > 4.0 * PI {
            return Err(Error::domain(format!(
                "solid angle {solid_angle} exceeds 4π"
            )));
        }
        Ok(Self {
            omega_bar,
            delta_omega,
            solid_angle,
        })
    }

    pub fn omega_bar(&self) -> f64 {
        self.omega_bar
    }

    pub fn delta_omega(&self) -> f64 {
        self.delta_omega
    }

    pub fn solid_angle(&self) -> f64 {
        self.solid_angle
    }

    /// Δω/ω̄.
    pub fn bandwidth_ratio(&self) -> f64 {
        self.delta_omega / self.omega_bar
    }

    pub fn lower(&self) -> f64 {
        self.omega_bar - self.delta_omega
    }

    pub fn upper(&self) -> f64 {
        self.omega_bar + self.delta_omega
    }

    /// Top-hat mode distribution f(ω).
    pub fn distribution(&self, omega: f64) -> f64 {
        if omega >= self.lower() && omega <= self.upper() {
            1.0
        } else {
            0.0
        }
    }

    pub fn flags(&self, traj: &Trajectory) -> BandFlags {
        BandFlags {
            wide_in_time: self.delta_omega * traj.half_time() >= SMALLNESS_LIMIT,
            wide_in_frequency: self.bandwidth_ratio() >= SMALLNESS_LIMIT,
            wide_cone: self.solid_angle / (4.0 * PI) >= SMALLNESS_LIMIT,
        }
    }
}

/// What replaces the squeeze bracket μη cos(2ωt₀ − θ) + η² in the band integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BandBracket {
    /// The emission-window average g̃(r), for electrons selected inside the window.
    WindowAveraged,
    /// The bracket at a fixed emission time, with ω running over the band.
    AtEmissionTime(f64),
}

/// (1/ω³)[sin ωT + 3cos ωT/(ωT) − 3 sin ωT/(ω²T²)]².
fn spectral_weight(omega: f64, t_half: f64) -> f64 {
    let x = omega * t_half;
    let b = envelope_bracket(x) / (x * x);
    b * b / (omega * omega * omega)
}

/// −2e² (16R/T²)² ΔΩ/(2π)³.
fn band_prefactor(band: &BandSpec, traj: &Trajectory) -> f64 {
    let t = traj.half_time();
    let amp = 16.0 * traj.half_separation() / (t * t);
    -2.0 * E_SQUARED * amp * amp * band.solid_angle / TAU.powi(3)
}

/// Band-integrated W_R with the default quadrature settings.
pub fn band_w_r_exact(
    state: &SqueezeState,
    band: &BandSpec,
    traj: &Trajectory,
    bracket: BandBracket,
) -> Result<f64> {
    band_w_r_exact_with(state, band, traj, bracket, &QuadratureConfig::default())
}

/// Band-integrated W_R by composite Gauss–Legendre quadrature over the band,
/// checked against a run at twice the node density.
pub fn band_w_r_exact_with(
    state: &SqueezeState,
    band: &BandSpec,
    traj: &Trajectory,
    bracket: BandBracket,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    cfg.validate()?;
    let t_half = traj.half_time();
    let (a, b) = (band.lower(), band.upper());
    let (lag, integrand): (f64, Box<dyn Fn(f64) -> f64 + '_>) = match bracket {
        BandBracket::WindowAveraged => (t_half, Box::new(move |w| spectral_weight(w, t_half))),
        BandBracket::AtEmissionTime(t0) => {
            ensure_finite("t0", t0)?;
            (
                t_half.max(2.0 * t0.abs()),
                Box::new(move |w| {
                    spectral_weight(w, t_half)
                        * state.weighted_bracket(2.0 * w * t0 - state.theta())
                }),
            )
        }
    };
    // the integrand oscillates in ω on the scale 2π/lag
    let coarse = cfg.rule_for(lag, b - a).integrate(&integrand, a, b);
    let fine = cfg
        .refined()
        .rule_for(lag, b - a)
        .integrate(&integrand, a, b);
    let tolerance = cfg.abs_tol.max(cfg.rel_tol * fine.abs());
    if (fine - coarse).abs() > tolerance {
        return Err(Error::NonConvergence {
            what: "band integral".into(),
            coarse,
            fine,
            tolerance,
        });
    }
    let factor = match bracket {
        BandBracket::WindowAveraged => windowed_average_g(state),
        BandBracket::AtEmissionTime(_) => 1.0,
    };
    let w = band_prefactor(band, traj) * factor * fine;
    if !w.is_finite() {
        return Err(Error::range("band integral overflows"));
    }
    Ok(w)
}

/// Leading order in Δω/ω̄ of the window-averaged band result,
/// −e² (R/T)² g̃(r) ΔΩ/(2π)³ F(ω̄T) Δω/ω̄.
pub fn band_w_r_leading(state: &SqueezeState, band: &BandSpec, traj: &Trajectory) -> Result<f64> {
    band_w_r_leading_with_g(windowed_average_g(state), band, traj)
}

/// [`band_w_r_leading`] with an explicit value of the window average g̃.
pub fn band_w_r_leading_with_g(g_avg: f64, band: &BandSpec, traj: &Trajectory) -> Result<f64> {
    let x = band.omega_bar * traj.half_time();
    let aspect = traj.aspect();
    Ok(
        -E_SQUARED * aspect * aspect * g_avg * band.solid_angle / TAU.powi(3)
            * envelope_f(x)?
            * band.bandwidth_ratio(),
    )
}

/// A discrete excited mode with its weight in the sum (1/V for a box
/// mode, ω² δω ΔΩ/(2π)³ for a phase-space cell).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedMode {
    pub omega: f64,
    pub weight: f64,
}

/// W_R = −2e² Σ weight·ω [μη cos(2ωt₀ − θ) + η²] (16R/(ω³T²))² [..]².
pub fn mode_sum(
    state: &SqueezeState,
    modes: &[WeightedMode],
    traj: &Trajectory,
    t0: f64,
) -> Result<f64> {
    ensure_finite("t0", t0)?;
    let t_half = traj.half_time();
    let r_sep = traj.half_separation();
    let total: f64 = modes
        .iter()
        .map(|m| {
            let x = m.omega * t_half;
            let amp =
                16.0 * r_sep / (m.omega.powi(3) * t_half * t_half) * envelope_bracket(x) / (x * x);
            let bracket = state.weighted_bracket(2.0 * m.omega * t0 - state.theta());
            m.weight * m.omega * bracket * amp * amp
        })
        .sum();
    let w = -2.0 * E_SQUARED * total;
    if !w.is_finite() {
        return Err(Error::range("mode sum overflows"));
    }
    Ok(w)
}

/// Discrete mode sum over `n_modes` equal phase-space cells spanning the band,
/// each mode sitting at its cell midpoint.
pub fn mode_sum_oracle(
    state: &SqueezeState,
    band: &BandSpec,
    traj: &Trajectory,
    n_modes: usize,
    t0: f64,
) -> Result<f64> {
    if n_modes == 0 {
        return Err(Error::domain("mode sum needs at least one mode"));
    }
    let cell = 2.0 * band.delta_omega / n_modes as f64;
    let measure = band.solid_angle / TAU.powi(3);
    let modes: Vec<WeightedMode> = (0..n_modes)
        .map(|j| {
            let omega = band.lower() + (j as f64 + 0.5) * cell;
            WeightedMode {
                omega,
                weight: omega * omega * band.distribution(omega) * cell * measure,
            }
        })
        .collect();
    mode_sum(state, &modes, traj, t0)
}
