//! Envelope function F(x) and order-of-magnitude recoherence estimates.
//!
//! F(x) = (32/x³)² [(x² − 3) sin x + 3x cos x]² collects the trajectory and
//! frequency dependence of the maximal windowed W_R. Its large-x form is
//! 1024 sin²x / x²; the estimates replace sin² by its mean 1/2 and also report
//! the exact-F value, since the two can differ by orders of magnitude at a
//! zero of sin x.

use std::f64::consts::{PI, TAU};

use crate::error::{ensure_finite, ensure_positive, Error, Result};
use crate::single_mode::envelope_bracket;
use crate::FINE_STRUCTURE;

/// F(x) for x > 0.
pub fn envelope_f(x: f64) -> Result<f64> {
    ensure_finite("x", x)?;
    if x <= 0.0 {
        return Err(Error::domain(format!("F(x) needs x > 0, got {x}")));
    }
    let a = 32.0 * envelope_bracket(x) / (x * x * x);
    Ok(a * a)
}

/// 1024 sin²x / x², valid for x ≫ 1.
pub fn envelope_f_large(x: f64) -> f64 {
    let s = x.sin();
    1024.0 * s * s / (x * x)
}

/// Large-x form with sin² replaced by 1/2.
pub fn envelope_f_averaged(x: f64) -> f64 {
    512.0 / (x * x)
}

/// Numerator of F′: F′(x) = 2048 B(x) [x B′(x) − 3B(x)] / x⁷ with
/// B′(x) = x² cos x − x sin x.
fn stationarity(x: f64) -> f64 {
    let b = envelope_bracket(x);
    let db = x * x * x.cos() - x * x.sin();
    x * db - 3.0 * b
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeMax {
    pub x_star: f64,
    pub f_star: f64,
}

/// Location and value of the first maximum of F, bracketed in [3.0, 3.7].
///
/// F has no interior zero of B there, so its stationary point is the root of
/// x B′ − 3B, found by bisection to machine precision.
pub fn locate_f_max() -> EnvelopeMax {
    let (mut lo, mut hi) = (3.0_f64, 3.7_f64);
    let s_lo = stationarity(lo).signum();
    debug_assert!(s_lo != stationarity(hi).signum());
    while hi - lo > 4.0 * f64::EPSILON * hi {
        let mid = 0.5 * (lo + hi);
        if stationarity(mid).signum() == s_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x_star = 0.5 * (lo + hi);
    EnvelopeMax {
        x_star,
        f_star: envelope_f(x_star).expect("x_star is positive"),
    }
}

/// Threshold above which a "≪ 1" factor is flagged.
const SMALLNESS_LIMIT: f64 = 0.5;

/// Single excited mode in a cavity of volume V.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityScenario {
    pub wavelength: f64,
    pub volume: f64,
    pub r_sep: f64,
    pub t_half: f64,
}

impl CavityScenario {
    pub fn new(wavelength: f64, volume: f64, r_sep: f64, t_half: f64) -> Result<Self> {
        ensure_positive("wavelength", wavelength)?;
        ensure_positive("volume", volume)?;
        ensure_positive("R", r_sep)?;
        ensure_positive("T", t_half)?;
        Ok(Self {
            wavelength,
            volume,
            r_sep,
            t_half,
        })
    }

    /// Lowest cavity mode with a path separation of the cavity size:
    /// V = λ³, R = λ and T fixed by R/T.
    pub fn lowest_mode(wavelength: f64, ratio_rt: f64) -> Result<Self> {
        ensure_positive("R/T", ratio_rt)?;
        Self::new(
            wavelength,
            wavelength.powi(3),
            wavelength,
            wavelength / ratio_rt,
        )
    }

    /// ω̄T = 2πT/λ.
    pub fn omega_bar_t(&self) -> f64 {
        TAU * self.t_half / self.wavelength
    }

    pub fn ratio_rt(&self) -> f64 {
        self.r_sep / self.t_half
    }

    /// λ³/V.
    pub fn volume_ratio(&self) -> f64 {
        self.wavelength.powi(3) / self.volume
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityEstimate {
    /// sin² in the large-x form replaced by 1/2.
    pub averaged: f64,
    /// Exact F at x = 2πT/λ; equals the single-mode recoherence bound.
    pub exact: f64,
    /// Large-x form with the actual sin² x.
    pub large_x: f64,
}

/// (α_fs/(12π²)) (λ³/V) (R/T)² F(2πT/λ), in its averaged, exact and large-x forms.
pub fn cavity_estimate(scn: &CavityScenario) -> Result<CavityEstimate> {
    let x = scn.omega_bar_t();
    let aspect = scn.ratio_rt();
    let pre = FINE_STRUCTURE / (12.0 * PI * PI) * scn.volume_ratio() * aspect * aspect;
    Ok(CavityEstimate {
        averaged: pre * envelope_f_averaged(x),
        exact: pre * envelope_f(x)?,
        large_x: pre * envelope_f_large(x),
    })
}

/// Coefficient c in W̃_R ≈ c (λ³/V)(R/T)²(λ/T)², i.e. α_fs/(12π²)·512/(4π²).
pub fn cavity_large_x_coefficient() -> f64 {
    FINE_STRUCTURE / (12.0 * PI * PI) * 512.0 / (4.0 * PI * PI)
}

/// Band of modes in free space, described by its dimensionless groups.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmptySpaceScenario {
    pub ratio_rt: f64,
    pub bandwidth_ratio: f64,
    pub solid_angle: f64,
    pub omega_bar_t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EmptySpaceFlags {
    pub large_ratio_rt: bool,
    pub large_bandwidth: bool,
    pub large_solid_angle: bool,
}

impl EmptySpaceScenario {
    pub fn new(
        ratio_rt: f64,
        bandwidth_ratio: f64,
        solid_angle: f64,
        omega_bar_t: f64,
    ) -> Result<Self> {
        ensure_positive("R/T", ratio_rt)?;
        ensure_positive("bandwidth ratio", bandwidth_ratio)?;
        ensure_positive("solid angle", solid_angle)?;
        ensure_positive("omega_bar*T", omega_bar_t)?;
        Ok(Self {
            ratio_rt,
            bandwidth_ratio,
            solid_angle,
            omega_bar_t,
        })
    }

    pub fn flags(&self) -> EmptySpaceFlags {
        EmptySpaceFlags {
            large_ratio_rt: self.ratio_rt >= SMALLNESS_LIMIT,
            large_bandwidth: self.bandwidth_ratio >= SMALLNESS_LIMIT,
            large_solid_angle: self.solid_angle >= SMALLNESS_LIMIT,
        }
    }
}

/// (α_fs/(6π²)) (R/T)² (Δω/ω̄) F(ω̄T) ΔΩ: the band result at g̃ = −1/3.
pub fn empty_space_estimate(scn: &EmptySpaceScenario) -> Result<f64> {
    Ok(FINE_STRUCTURE / (6.0 * PI * PI)
        * scn.ratio_rt
        * scn.ratio_rt
        * scn.bandwidth_ratio
        * envelope_f(scn.omega_bar_t)?
        * scn.solid_angle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Golden-section maximization, derivative-free.
    fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
        let g = (5.0_f64.sqrt() - 1.0) / 2.0;
        let mut c = b - g * (b - a);
        let mut d = a + g * (b - a);
        for _ in 0..200 {
            if f(c) > f(d) {
                b = d;
            } else {
                a = c;
            }
            c = b - g * (b - a);
            d = a + g * (b - a);
        }
        0.5 * (a + b)
    }

    #[test]
    fn envelope_values() {
        assert_relative_eq!(
            envelope_f(PI).unwrap(),
            9216.0 / PI.powi(4),
            max_relative = 1e-13
        );
        assert_relative_eq!(
            envelope_f(PI).unwrap(),
            94.611_292_459_170_83,
            max_relative = 1e-13
        );
        let small = envelope_f(0.1).unwrap();
        assert!(((small - 1024.0 / 225.0 * 1e-4) / small).abs() < 0.01);
        assert_relative_eq!(small, 4.544_613_650_238_229e-4, max_relative = 1e-10);
        assert!(envelope_f(0.0).is_err());
        assert!(envelope_f(-1.0).is_err());
        assert!(envelope_f(f64::NAN).is_err());
    }

    #[test]
    fn large_argument_form() {
        for &x in &[200.3, 500.7, 1000.1] {
            let f = envelope_f(x).unwrap();
            let approx = envelope_f_large(x);
            // relative corrections are O(1/x) once sin x is not small
            assert!((f - approx).abs() <= 10.0 / x * approx.max(1024.0 / (x * x)));
        }
        // near nπ the estimate collapses
        let x = 40.0 * PI;
        assert!(envelope_f(x).unwrap() < 1e-2 * envelope_f_averaged(x));
    }

    #[test]
    fn maximum_of_f() {
        let m = locate_f_max();
        assert!((m.x_star - 3.34).abs() <= 0.01);
        assert!((m.f_star - 96.4).abs() <= 0.2);
        assert_relative_eq!(m.x_star, 3.342_093_657_365_694, max_relative = 1e-13);
        assert_relative_eq!(m.f_star, 96.380_125_114_124_96, max_relative = 1e-13);
        let h = 1e-5;
        let d = (envelope_f(m.x_star + h).unwrap() - envelope_f(m.x_star - h).unwrap()) / (2.0 * h);
        assert!(d.abs() < 1e-8, "F' = {d}");
        assert!(m.f_star >= envelope_f(m.x_star + 0.05).unwrap());
        assert!(m.f_star >= envelope_f(m.x_star - 0.05).unwrap());
        let golden = golden_max(|x| envelope_f(x).unwrap(), 3.0, 3.7);
        assert!((golden - m.x_star).abs() < 1e-6);
    }

    #[test]
    fn cavity_values() {
        let scn = CavityScenario::lowest_mode(1.0, 0.1).unwrap();
        let e = cavity_estimate(&scn).unwrap();
        assert!(e.averaged >= 3e-8 && e.averaged <= 3e-7, "{e:?}");
        let limit = cavity_estimate(&CavityScenario::lowest_mode(1.0, 1.0).unwrap()).unwrap();
        assert!(limit.averaged > 3e-4 && limit.averaged < 3e-3);
        // the quoted 8e-4 coefficient
        assert!((cavity_large_x_coefficient() - 8e-4).abs() < 0.05e-4);
        // approximate path c (R/T)² (λ/T)² agrees with the averaged value exactly
        let approx = cavity_large_x_coefficient() * 0.01 * 0.01;
        assert_relative_eq!(approx, e.averaged, max_relative = 1e-12);
        // exact-F and large-x values stay inside the sin² envelope
        assert!(e.large_x <= 2.0 * e.averaged * (1.0 + 1e-12));
        assert!(e.exact <= 2.0 * e.averaged * 1.1);
    }

    #[test]
    fn empty_space_values() {
        let scn = EmptySpaceScenario::new(0.1, 0.1, 0.1, 3.34).unwrap();
        let w = empty_space_estimate(&scn).unwrap();
        assert!((3e-7..=3e-6).contains(&w), "{w}");
        assert!(scn.flags() == EmptySpaceFlags::default());
        let doubled = EmptySpaceScenario::new(0.1, 0.2, 0.1, 3.34).unwrap();
        assert_relative_eq!(
            empty_space_estimate(&doubled).unwrap(),
            2.0 * w,
            max_relative = 1e-14
        );
        let cone = EmptySpaceScenario::new(0.1, 0.1, 0.3, 3.34).unwrap();
        assert_relative_eq!(
            empty_space_estimate(&cone).unwrap(),
            3.0 * w,
            max_relative = 1e-14
        );
        let at_zero = EmptySpaceScenario::new(0.1, 0.1, 0.1, 30.0 * PI).unwrap();
        assert!(empty_space_estimate(&at_zero).unwrap() < 1e-3 * w);
    }
}
