//! Electron path z(t) = (R/T⁴)(t² − T²)² on [−T, T].
//!
//! 2R is the effective path separation and 2T the flight time. The path
//! starts and ends on the axis with zero sideways velocity.

use crate::error::{ensure_finite, ensure_positive, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trajectory {
    half_separation: f64,
    half_time: f64,
    superluminal: bool,
}

impl Trajectory {
    /// Builds the path with half separation `r_sep` (R) and half flight time
    /// `t_half` (T). Paths whose peak speed exceeds c are accepted but
    /// flagged, see [`Trajectory::is_superluminal`].
    pub fn new(r_sep: f64, t_half: f64) -> Result<Self> {
        ensure_positive("R", r_sep)?;
        ensure_positive("T", t_half)?;
        let superluminal = peak_speed_for(r_sep, t_half) > 1.0;
        Ok(Self {
            half_separation: r_sep,
            half_time: t_half,
            superluminal,
        })
    }

    /// R.
    pub fn half_separation(&self) -> f64 {
        self.half_separation
    }

    /// T.
    pub fn half_time(&self) -> f64 {
        self.half_time
    }

    /// R/T.
    pub fn aspect(&self) -> f64 {
        self.half_separation / self.half_time
    }

    /// max |v_z| = 8R/(3√3 T), reached at t = ±T/√3.
    pub fn peak_speed(&self) -> f64 {
        peak_speed_for(self.half_separation, self.half_time)
    }

    /// Whether the non-relativistic model is being pushed past c.
    pub fn is_superluminal(&self) -> bool {
        self.superluminal
    }

    fn check_time(&self, t: f64) -> Result<()> {
        ensure_finite("t", t)?;
        if t.abs() > self.half_time {
            return Err(Error::domain(format!(
                "time {t} outside the flight interval [-{T}, {T}]",
                T = self.half_time
            )));
        }
        Ok(())
    }

    pub fn position(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(self.position_unchecked(t))
    }

    pub fn velocity(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(self.velocity_unchecked(t))
    }

    /// Position without the interval check, for quadrature inner loops whose
    /// nodes are interior by construction.
    pub(crate) fn position_unchecked(&self, t: f64) -> f64 {
        let t2 = self.half_time * self.half_time;
        let d = t * t - t2;
        self.half_separation * d * d / (t2 * t2)
    }

    pub(crate) fn velocity_unchecked(&self, t: f64) -> f64 {
        let t2 = self.half_time * self.half_time;
        4.0 * self.half_separation * t * (t * t - t2) / (t2 * t2)
    }
}

fn peak_speed_for(r_sep: f64, t_half: f64) -> f64 {
    8.0 / (3.0 * 3.0_f64.sqrt()) * r_sep / t_half
}
