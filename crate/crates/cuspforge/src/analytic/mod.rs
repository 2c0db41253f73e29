//! Floating-point evaluation layer.
//!
//! Everything here is estimation with explicit truncation: the modular lambda
//! function and the dlog contour oracle run at configurable precision
//! (default 256 bits, `CUSPFORGE_BITS`); the Kloosterman zeta battery sums in
//! f64 since the c_max truncation error dwarfs float rounding. No estimator
//! returns a bare value: everything carries an error estimate or a tail
//! heuristic, and anything fed to rational recognition goes through interval
//! logic.

pub mod contour;
pub mod hp;
pub mod kloosterman;
pub mod lambda;
pub mod recognize;
pub mod units;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Truncation and precision controls shared by the estimators.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationParams {
    /// Bound on the lower-left entries in double-coset scans.
    pub c_max: u32,
    /// Fourier truncation for S_D.
    pub r_max: u32,
    /// Evaluation abscissa for the zeta sums; must be > 1.
    pub s: f64,
    /// Cusp offset: contours are truncated at local height 1/eps.
    pub eps: f64,
    /// Base number of contour subdivision nodes.
    pub quad_steps: u32,
    /// Working precision in bits for the high-precision paths.
    pub precision: u32,
}

impl Default for TruncationParams {
    fn default() -> Self {
        TruncationParams {
            c_max: 120,
            r_max: 12,
            s: 1.5,
            eps: 0.02,
            quad_steps: 2048,
            precision: 256,
        }
    }
}

impl TruncationParams {
    pub fn validate(&self) -> Result<()> {
        if self.c_max == 0 && self.r_max == 0 {
            // allowed: empty sums are a documented case
        }
        if self.s <= 1.0 {
            return Err(Error::OutOfRange(format!(
                "abscissa s must be > 1, got {}",
                self.s
            )));
        }
        if self.eps <= 0.0 || self.eps >= 1.0 {
            return Err(Error::OutOfRange(format!(
                "eps must lie in (0, 1), got {}",
                self.eps
            )));
        }
        if self.precision < 64 {
            return Err(Error::OutOfRange(
                "precision below 64 bits is not supported".into(),
            ));
        }
        Ok(())
    }

    /// Default precision, overridable through CUSPFORGE_BITS.
    pub fn from_env() -> Self {
        let mut p = TruncationParams::default();
        if let Ok(bits) = std::env::var("CUSPFORGE_BITS") {
            if let Ok(bits) = bits.parse::<u32>() {
                p.precision = bits.max(64);
            }
        }
        p
    }
}
