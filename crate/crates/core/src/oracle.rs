//! Brute-force evaluation of the coherence functional by double quadrature.
//!
//! W = −π α_fs ∮_C dz ∮_C dz′ ⟨{A^z(x), A^z(x′)}⟩ with C = C₁ − C₂. In the
//! co-moving frame the two legs carry z-velocities +v_z and −v_z, and the
//! single-mode field depends on time only. The integral is assembled from the
//! four leg pairs on a tensor grid of composite Gauss–Legendre nodes, and the
//! complex-conjugate half of the kernel is evaluated separately rather than by
//! conjugation, so the imaginary part of the sum is a genuine residue.
//!
//! Nothing here calls the closed forms of [`crate::single_mode`].

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{ensure_finite, Error, Result};
use crate::quadrature::{CompositeRule, GaussLegendre};
use crate::squeezed::{ModeSpec, SqueezeState};
use crate::trajectory::Trajectory;
use crate::FINE_STRUCTURE;

const MIN_PANELS: usize = 2;

/// Fixed-order composite rule family used by the oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Gauss–Legendre panels of the given order.
    GaussLegendre { order: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub nodes_per_period: usize,
    pub scheme: Scheme,
    pub abs_tol: f64,
    pub rel_tol: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            nodes_per_period: 32,
            scheme: Scheme::GaussLegendre { order: 8 },
            abs_tol: 1e-14,
            rel_tol: 1e-8,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nodes_per_period < 16 {
            return Err(Error::domain(format!(
                "nodes_per_period must be >= 16, got {}",
                self.nodes_per_period
            )));
        }
        let Scheme::GaussLegendre { order } = self.scheme;
        if order == 0 {
            return Err(Error::domain("Gauss-Legendre order must be positive"));
        }
        for (name, tol) in [("abs_tol", self.abs_tol), ("rel_tol", self.rel_tol)] {
            ensure_finite(name, tol)?;
            if tol <= 0.0 {
                return Err(Error::domain(format!("{name} must be positive, got {tol}")));
            }
        }
        Ok(())
    }

    /// Same settings with twice the sampling density.
    pub fn refined(&self) -> Self {
        Self {
            nodes_per_period: 2 * self.nodes_per_period,
            ..*self
        }
    }

    /// Composite rule covering `span` for an oscillation at `omega`.
    pub fn rule_for(&self, omega: f64, span: f64) -> CompositeRule {
        let Scheme::GaussLegendre { order } = self.scheme;
        let periods = span * omega / TAU;
        let nodes = (periods * self.nodes_per_period as f64).ceil() as usize;
        let panels = nodes.div_ceil(order).max(MIN_PANELS);
        CompositeRule::new(GaussLegendre::new(order), panels)
    }

    fn tolerance(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

/// Result of one double-quadrature pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleEstimate {
    pub value: f64,
    /// |Im| of the assembled kernel sum, relative to |Re| (absolute when Re = 0).
    pub imag_residue: f64,
    /// Number of nodes per time axis.
    pub points: usize,
}

/// Orientation and z-velocity sign of the two legs of C = C₁ − C₂.
const LEGS: [(f64, f64); 2] = [(1.0, 1.0), (-1.0, -1.0)];

/// Which two-point function to integrate around the loop.
#[derive(Debug, Clone, Copy)]
enum Kernel {
    /// Renormalized squeezed-vacuum anticommutator.
    Squeezed {
        mu: f64,
        nu: Complex64,
        eta_sq: f64,
        t0: f64,
    },
    /// Vacuum anticommutator of the same single mode.
    Vacuum,
}

fn loop_integral(
    kernel: Kernel,
    mode: &ModeSpec,
    traj: &Trajectory,
    cfg: &QuadratureConfig,
) -> OracleEstimate {
    let omega = mode.omega_bar();
    let t_half = traj.half_time();
    let rule = cfg.rule_for(omega, 2.0 * t_half);
    let grid = rule.nodes_and_weights(-t_half, t_half);
    let t0 = match kernel {
        Kernel::Squeezed { t0, .. } => t0,
        Kernel::Vacuum => 0.0,
    };
    // per node: weighted velocity, e^{-iω(t+t0)}, e^{+iω(t+t0)}
    let samples: Vec<(f64, Complex64, Complex64)> = grid
        .iter()
        .map(|&(t, w)| {
            let ph = omega * (t + t0);
            (
                w * traj.velocity_unchecked(t),
                Complex64::from_polar(1.0, -ph),
                Complex64::from_polar(1.0, ph),
            )
        })
        .collect();

    let mut direct = Complex64::new(0.0, 0.0);
    let mut conjugate = Complex64::new(0.0, 0.0);
    for &(orient_a, sign_a) in &LEGS {
        for &(orient_b, sign_b) in &LEGS {
            let leg = orient_a * sign_a * orient_b * sign_b;
            for &(va, em_a, ep_a) in &samples {
                let mut row_direct = Complex64::new(0.0, 0.0);
                let mut row_conj = Complex64::new(0.0, 0.0);
                for &(vb, em_b, ep_b) in &samples {
                    let (d, c) = match kernel {
                        Kernel::Squeezed { mu, nu, eta_sq, .. } => (
                            -mu * nu * em_a * em_b + eta_sq * em_a * ep_b,
                            -mu * nu.conj() * ep_a * ep_b + eta_sq * ep_a * em_b,
                        ),
                        Kernel::Vacuum => (0.5 * em_a * ep_b, 0.5 * ep_a * em_b),
                    };
                    row_direct += vb * d;
                    row_conj += vb * c;
                }
                direct += leg * va * row_direct;
                conjugate += leg * va * row_conj;
            }
        }
    }
    let total = direct + conjugate;
    let scale = -PI * FINE_STRUCTURE / (mode.volume() * omega);
    let imag_residue = if total.re != 0.0 {
        (total.im / total.re).abs()
    } else {
        total.im.abs()
    };
    OracleEstimate {
        value: scale * total.re,
        imag_residue,
        points: samples.len(),
    }
}

fn refine<F>(what: &str, cfg: &QuadratureConfig, eval: F) -> Result<OracleEstimate>
where
    F: Fn(&QuadratureConfig) -> OracleEstimate,
{
    cfg.validate()?;
    let coarse = eval(cfg);
    let fine = eval(&cfg.refined());
    let tolerance = cfg.tolerance(fine.value);
    if (fine.value - coarse.value).abs() > tolerance {
        return Err(Error::NonConvergence {
            what: what.to_string(),
            coarse: coarse.value,
            fine: fine.value,
            tolerance,
        });
    }
    Ok(fine)
}

/// Double-quadrature W_R with its imaginary residue.
pub fn quad_w_r_estimate(
    state: &SqueezeState,
    mode: &ModeSpec,
    traj: &Trajectory,
    t0: f64,
    cfg: &QuadratureConfig,
) -> Result<OracleEstimate> {
    ensure_finite("t0", t0)?;
    let kernel = Kernel::Squeezed {
        mu: state.mu(),
        nu: state.nu(),
        eta_sq: state.eta() * state.eta(),
        t0,
    };
    refine("W_R double integral", cfg, |c| {
        loop_integral(kernel, mode, traj, c)
    })
}

/// W_R at emission time `t0` by double quadrature over the loop.
pub fn quad_w_r(
    state: &SqueezeState,
    mode: &ModeSpec,
    traj: &Trajectory,
    t0: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    quad_w_r_estimate(state, mode, traj, t0, cfg).map(|e| e.value)
}

/// Vacuum contribution W₀ of the single mode by double quadrature.
pub fn quad_w0(mode: &ModeSpec, traj: &Trajectory, cfg: &QuadratureConfig) -> Result<f64> {
    refine("W0 double integral", cfg, |c| {
        loop_integral(Kernel::Vacuum, mode, traj, c)
    })
    .map(|e| e.value)
}

/// M as the square of ∫ v_z sin(ω̄t) dt over the flight.
pub fn quad_envelope(mode: &ModeSpec, traj: &Trajectory, cfg: &QuadratureConfig) -> Result<f64> {
    let omega = mode.omega_bar();
    let t_half = traj.half_time();
    let eval = |c: &QuadratureConfig| {
        let rule = c.rule_for(omega, 2.0 * t_half);
        let s = rule.integrate(
            |t| traj.velocity_unchecked(t) * (omega * t).sin(),
            -t_half,
            t_half,
        );
        OracleEstimate {
            value: s * s,
            imag_residue: 0.0,
            points: rule.point_count(),
        }
    };
    refine("envelope integral", cfg, eval).map(|e| e.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn setup(x: f64, r: f64) -> (SqueezeState, ModeSpec, Trajectory) {
        (
            SqueezeState::new(r, 0.0).unwrap(),
            ModeSpec::new(x, 1.0).unwrap(),
            Trajectory::new(0.1, 1.0).unwrap(),
        )
    }

    #[test]
    fn vacuum_state_integrates_to_zero() {
        let (s, m, t) = setup(3.34, 0.0);
        let cfg = QuadratureConfig::default();
        assert_eq!(quad_w_r(&s, &m, &t, 0.4, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn config_validation() {
        let cfg = QuadratureConfig {
            nodes_per_period: 8,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = QuadratureConfig {
            rel_tol: 0.0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let (s, m, t) = setup(1.0, 1.0);
        assert!(quad_w_r(
            &s,
            &m,
            &t,
            0.0,
            &QuadratureConfig {
                nodes_per_period: 4,
                ..Default::default()
            }
        )
        .is_err());
    }

    #[test]
    fn separable_factorization() {
        // Fubini: ∫∫ v v' e^{-iω(t+t')} = I², ∫∫ v v' e^{-iω(t-t')} = |I|²
        let (s, m, t) = setup(3.34, 1.0);
        let cfg = QuadratureConfig::default();
        let t0 = 0.37;
        let quad = quad_w_r(&s, &m, &t, t0, &cfg).unwrap();
        let omega = m.omega_bar();
        let rule = cfg.refined().rule_for(omega, 2.0);
        let re = rule.integrate(|x| t.velocity_unchecked(x) * (omega * x).cos(), -1.0, 1.0);
        let im = rule.integrate(|x| -t.velocity_unchecked(x) * (omega * x).sin(), -1.0, 1.0);
        let i1 = Complex64::new(re, im);
        let phase = Complex64::from_polar(1.0, -2.0 * omega * t0);
        let z = -s.mu() * s.nu() * phase * i1 * i1 + s.eta() * s.eta() * i1.norm_sqr();
        let product = -4.0 * PI * FINE_STRUCTURE / omega * 2.0 * z.re;
        assert!(((quad - product) / product).abs() < 1e-8);
    }

    #[test]
    fn imaginary_residue_is_negligible() {
        for &x in &[0.5, 3.34, 10.0] {
            let (s, m, t) = setup(x, 1.5);
            let e = quad_w_r_estimate(&s, &m, &t, 0.21, &QuadratureConfig::default()).unwrap();
            assert!(e.imag_residue < 1e-10, "x={x} residue={}", e.imag_residue);
        }
    }

    #[test]
    fn vacuum_term_scaling_and_sign() {
        let cfg = QuadratureConfig::default();
        let traj = Trajectory::new(0.1, 1.0).unwrap();
        for &x in &[0.5, 1.0, 3.34, 10.0] {
            let w1 = quad_w0(&ModeSpec::new(x, 1.0).unwrap(), &traj, &cfg).unwrap();
            let w2 = quad_w0(&ModeSpec::new(x, 2.0).unwrap(), &traj, &cfg).unwrap();
            assert!(w1 <= 0.0);
            assert_relative_eq!(w2, 0.5 * w1, max_relative = 1e-13);
        }
    }

    #[test]
    fn vacuum_term_at_pi() {
        let mode = ModeSpec::new(PI, 1.0).unwrap();
        let traj = Trajectory::new(1.0, 1.0).unwrap();
        let w0 = quad_w0(&mode, &traj, &QuadratureConfig::default()).unwrap();
        let closed = -4.0 * PI * FINE_STRUCTURE / PI * 2304.0 / PI.powi(6);
        assert_relative_eq!(w0, closed, max_relative = 1e-10);
    }

    #[test]
    fn envelope_by_quadrature() {
        let cfg = QuadratureConfig::default();
        let traj = Trajectory::new(1.0, 1.0).unwrap();
        let m = quad_envelope(&ModeSpec::new(PI, 1.0).unwrap(), &traj, &cfg).unwrap();
        assert_relative_eq!(m, 2304.0 / PI.powi(6), max_relative = 1e-12);
        let x: f64 = 0.05;
        let small = quad_envelope(&ModeSpec::new(x, 1.0).unwrap(), &traj, &cfg).unwrap();
        let lim = 256.0 / 225.0 * x * x;
        assert!(((small - lim) / lim).abs() < 0.01);
    }

    #[test]
    fn refinement_shrinks_error() {
        // exact value of ∫_{-1}^{1} 4t(t²−1) sin(πt) dt is −48/π³
        let exact = (48.0 / PI.powi(3)).powi(2);
        let traj = Trajectory::new(1.0, 1.0).unwrap();
        let order2 = QuadratureConfig {
            scheme: Scheme::GaussLegendre { order: 2 },
            nodes_per_period: 16,
            ..Default::default()
        };
        let mut prev = f64::INFINITY;
        let mut cfg = order2;
        for _ in 0..5 {
            let rule = cfg.rule_for(PI, 2.0);
            let s = rule.integrate(|t| traj.velocity_unchecked(t) * (PI * t).sin(), -1.0, 1.0);
            let err = (s * s - exact).abs();
            if prev.is_finite() && prev > 1e-13 {
                assert!(err <= prev / 4.0, "err {err} prev {prev}");
            }
            prev = err;
            cfg = cfg.refined();
        }
    }

    #[test]
    fn non_convergence_reported() {
        let (s, m, t) = setup(10.0, 1.0);
        let cfg = QuadratureConfig {
            nodes_per_period: 16,
            scheme: Scheme::GaussLegendre { order: 1 },
            abs_tol: 1e-30,
            rel_tol: 1e-14,
        };
        assert!(matches!(
            quad_w_r(&s, &m, &t, 0.0, &cfg),
            Err(Error::NonConvergence { .. })
        ));
    }
}
