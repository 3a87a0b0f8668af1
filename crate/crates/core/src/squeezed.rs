//! Single-mode squeezed vacuum: Bogoliubov coefficients, photon number and
//! the renormalized energy density.
//!
//! The squeeze operator S(ζ) = exp[½(ζ* a² − ζ a†²)] with ζ = r e^{iθ} maps
//! a → μ a − ν a†, where μ = cosh r and ν = e^{iθ} sinh r. In the squeezed
//! vacuum ⟨a²⟩ = −μν and ⟨a†a⟩ = |ν|².

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{ensure_finite, ensure_positive, Error, Result};

/// Largest squeeze magnitude accepted. Keeps e^{2r} finite.
pub const MAX_SQUEEZE: f64 = 350.0;

/// Complex squeeze parameter ζ = r e^{iθ}.
///
/// θ is stored as given; use [`SqueezeState::same_phase`] or
/// [`SqueezeState::reduced_theta`] when comparing phases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezeState {
    r: f64,
    theta: f64,
}

impl SqueezeState {
    pub fn new(r: f64, theta: f64) -> Result<Self> {
        ensure_finite("r", r)?;
        ensure_finite("theta", theta)?;
        if r < 0.0 {
            return Err(Error::domain(format!(
                "squeeze magnitude r must be >= 0, got {r}"
            )));
        }
        if r > MAX_SQUEEZE {
            return Err(Error::range(format!(
                "squeeze magnitude r = {r} exceeds {MAX_SQUEEZE}; e^(2r) would overflow"
            )));
        }
        Ok(Self { r, theta })
    }

    /// The unsqueezed vacuum, r = 0.
    pub fn vacuum() -> Self {
        Self { r: 0.0, theta: 0.0 }
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// θ reduced to [0, 2π).
    pub fn reduced_theta(&self) -> f64 {
        self.theta.rem_euclid(TAU)
    }

    /// True when both states have the same r and θ agrees mod 2π.
    pub fn same_phase(&self, other: &Self) -> bool {
        let d = (self.theta - other.theta).rem_euclid(TAU);
        self.r == other.r && (d < 1e-12 || TAU - d < 1e-12)
    }

    pub fn is_vacuum(&self) -> bool {
        self.r == 0.0
    }

    /// μ = cosh r.
    pub fn mu(&self) -> f64 {
        self.r.cosh()
    }

    /// η = sinh r = |ν|.
    pub fn eta(&self) -> f64 {
        self.r.sinh()
    }

    /// ν = e^{iθ} sinh r.
    pub fn nu(&self) -> Complex64 {
        Complex64::from_polar(self.eta(), self.theta)
    }

    /// η[μ cos φ + η], written as 2ημ cos²(φ/2) − (1 − e^{−2r})/2 so that the
    /// negative lobe keeps its precision when μ and η are both large.
    pub fn weighted_bracket(&self, phase: f64) -> f64 {
        let c = (0.5 * phase).cos();
        2.0 * self.eta() * self.mu() * c * c + 0.5 * (-2.0 * self.r).exp_m1()
    }

    /// Half-width ξ of the negative lobe of μ cos φ + η, i.e. arccos(η/μ).
    ///
    /// Evaluated as atan(1/η): tanh r → 1 makes arccos(tanh r) lose all
    /// significant digits for large r.
    pub fn window_half_angle(&self) -> f64 {
        (1.0_f64).atan2(self.eta())
    }
}

/// Bogoliubov coefficients of a squeeze.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bogoliubov {
    pub mu: f64,
    pub nu: Complex64,
    pub eta: f64,
}

impl Bogoliubov {
    /// μ² − |ν|², which is 1 for every squeeze.
    pub fn unimodularity(&self) -> f64 {
        self.mu * self.mu - self.nu.norm_sqr()
    }
}

/// A single excited cavity mode: angular frequency ω̄ and box volume V.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSpec {
    omega_bar: f64,
    volume: f64,
}

impl ModeSpec {
    pub fn new(omega_bar: f64, volume: f64) -> Result<Self> {
        ensure_positive("omega_bar", omega_bar)?;
        ensure_positive("volume", volume)?;
        Ok(Self { omega_bar, volume })
    }

    pub fn omega_bar(&self) -> f64 {
        self.omega_bar
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    /// λ = 2π/ω̄.
    pub fn wavelength(&self) -> f64 {
        TAU / self.omega_bar
    }
}

pub fn bogoliubov(state: &SqueezeState) -> Bogoliubov {
    Bogoliubov {
        mu: state.mu(),
        nu: state.nu(),
        eta: state.eta(),
    }
}

/// ⟨a†a⟩ = sinh² r.
pub fn mean_photon_number(state: &SqueezeState) -> f64 {
    let eta = state.eta();
    eta * eta
}

/// Renormalized energy density (η/V)[μ cos φ + η] ω̄ where φ = 2k̄·x − θ.
///
/// Negative wherever cos φ < −η/μ.
pub fn energy_density(state: &SqueezeState, mode: &ModeSpec, phase: f64) -> Result<f64> {
    ensure_finite("phase", phase)?;
    Ok(state.weighted_bracket(phase) / mode.volume * mode.omega_bar)
}

/// Renormalized total energy η² ω̄ of the mode.
pub fn total_energy(state: &SqueezeState, mode: &ModeSpec) -> f64 {
    mean_photon_number(state) * mode.omega_bar
}
