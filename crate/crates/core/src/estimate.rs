//! Norm estimates with certified brackets, shared by the spectral and nuclear
//! solvers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ErrorMode {
    /// `upper − lower ≤ ε`.
    Absolute,
    /// `upper − lower ≤ ε · upper`.
    #[default]
    Relative,
}

/// Unit vectors attaining (approximately) the trilinear maximum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    /// Per-mode factors of `x` for order-d inputs (original mode order,
    /// excluding the two matrix modes).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leading: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub epsilon: f64,
    pub mode: ErrorMode,
    /// The bracket is rigorous and meets the requested error.
    pub certified: bool,
    /// Grid resolution for single-grid runs.
    pub q: Option<usize>,
    /// Per-mode resolutions for product grids.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_per_mode: Option<Vec<usize>>,
    pub grid_points: usize,
    pub witness: Option<Witness>,
    pub seconds: f64,
}

impl NormEstimate {
    /// Whether `[lower, upper]` meets the target error.
    pub fn gap_within(&self, epsilon: f64) -> bool {
        let gap = self.upper - self.lower;
        match self.mode {
            ErrorMode::Absolute => gap <= epsilon,
            ErrorMode::Relative => gap <= epsilon * self.upper.abs(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub(crate) fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")))
    }
}

/// Scale used to pick the grid resolution: the supplied upper bound in
/// absolute mode, one in relative mode.
pub(crate) fn resolution_scale(mode: ErrorMode, upper_bound: f64) -> f64 {
    match mode {
        ErrorMode::Absolute => upper_bound,
        ErrorMode::Relative => 1.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let e = NormEstimate {
            value: 1.0 / 3.0,
            lower: 0.1 + 0.2,
            upper: 2.0_f64.sqrt(),
            epsilon: 1e-3,
            mode: ErrorMode::Relative,
            certified: true,
            q: Some(61),
            q_per_mode: None,
            grid_points: 219661,
            witness: Some(Witness { x: vec![0.6, 0.8], y: vec![1.0], z: vec![-1.0, 1e-300], leading: None }),
            seconds: 0.25,
        };
        let s = e.to_json().unwrap();
        assert!(s.contains("\"mode\": \"relative\""));
        let back: NormEstimate = serde_json::from_str(&s).unwrap();
        assert_eq!(back, e);
    }

    #[test]
    fn gap_rules() {
        let mut e = NormEstimate {
            value: 10.0,
            lower: 10.0,
            upper: 10.05,
            epsilon: 1e-2,
            mode: ErrorMode::Absolute,
            certified: true,
            q: None,
            q_per_mode: None,
            grid_points: 0,
            witness: None,
            seconds: 0.0,
        };
        assert!(!e.gap_within(1e-2));
        e.mode = ErrorMode::Relative;
        assert!(e.gap_within(1e-2));
        assert!(check_epsilon(0.0).is_err());
        assert!(check_epsilon(f64::NAN).is_err());
    }
}
