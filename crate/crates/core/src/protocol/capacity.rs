//! Residual capacity estimation.

use serde::{Deserialize, Serialize};

/// How the residual capacity is derived from the local transmit and
/// interference probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ThetaMode {
    /// `max(1 - (d + i), 0)`.
    #[default]
    Linear,
    /// `max(1 - (d + e^i), 0)`, which is zero for any `d >= 0` and `i >= 0`.
    Literal,
}

impl std::str::FromStr for ThetaMode {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "linear" => Ok(ThetaMode::Linear),
            "literal" => Ok(ThetaMode::Literal),
            other => Err(crate::Error::invalid(format!("unknown theta mode `{other}`"))),
        }
    }
}

impl ThetaMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ThetaMode::Linear => "linear",
            ThetaMode::Literal => "literal",
        }
    }
}

/// Residual capacity from the probability `transmit` that the node sends
/// in a slot and the probability `interference` that a neighbor does.
pub fn estimate_theta(transmit: f64, interference: f64, mode: ThetaMode) -> f64 {
    let load = match mode {
        ThetaMode::Linear => transmit + interference,
        ThetaMode::Literal => transmit + interference.exp(),
    };
    (1.0 - load).clamp(0.0, 1.0)
}

/// Share of `thetas` at or above `c_min`; 1 when nothing was observed.
pub fn estimate_phi(thetas: &[f64], c_min: f64) -> f64 {
    if thetas.is_empty() {
        return 1.0;
    }
    thetas.iter().filter(|&&t| t >= c_min).count() as f64 / thetas.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_examples() {
        for mode in [ThetaMode::Linear, ThetaMode::Literal] {
            for i in [0.0, 0.3, 1.0] {
                assert_eq!(estimate_theta(1.0, i, mode), 0.0);
            }
        }
        assert_eq!(estimate_theta(0.0, 0.0, ThetaMode::Literal), 0.0);
        assert!((estimate_theta(0.3, 0.2, ThetaMode::Linear) - 0.5).abs() < 1e-12);
        assert_eq!(estimate_theta(0.0, 0.0, ThetaMode::Linear), 1.0);
    }

    #[test]
    fn phi_examples() {
        assert_eq!(estimate_phi(&[0.5, 0.9, 1.0], 0.5), 1.0);
        assert_eq!(estimate_phi(&[0.9, 0.1, 0.6, 0.2], 0.5), 0.5);
        assert_eq!(estimate_phi(&[], 0.5), 1.0);
    }
}
