use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The six samplers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    Metropolis,
    #[serde(alias = "gwg")]
    OrdinalGwg,
    Ncg,
    Avg,
    Vdhams,
    Odhams,
}

impl SamplerKind {
    pub const ALL: [SamplerKind; 6] = [
        SamplerKind::Metropolis,
        SamplerKind::OrdinalGwg,
        SamplerKind::Ncg,
        SamplerKind::Avg,
        SamplerKind::Vdhams,
        SamplerKind::Odhams,
    ];

    /// Samplers that carry a momentum vector between steps.
    pub fn uses_momentum(self) -> bool {
        matches!(self, SamplerKind::Vdhams | SamplerKind::Odhams)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SamplerKind::Metropolis => "metropolis",
            SamplerKind::OrdinalGwg => "ordinal_gwg",
            SamplerKind::Ncg => "ncg",
            SamplerKind::Avg => "avg",
            SamplerKind::Vdhams => "vdhams",
            SamplerKind::Odhams => "odhams",
        }
    }
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SamplerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "metropolis" => Ok(SamplerKind::Metropolis),
            "ordinal_gwg" | "gwg" => Ok(SamplerKind::OrdinalGwg),
            "ncg" => Ok(SamplerKind::Ncg),
            "avg" => Ok(SamplerKind::Avg),
            "vdhams" | "v_dhams" => Ok(SamplerKind::Vdhams),
            "odhams" | "o_dhams" => Ok(SamplerKind::Odhams),
            other => Err(Error::InvalidParameter(format!("unknown sampler `{other}`"))),
        }
    }
}

/// Tuning parameters shared by all samplers. Each sampler reads only the fields it needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerParams {
    /// Step size `δ > 0`.
    pub delta: f64,
    /// Momentum auto-regression `ε ∈ [0, 1)`.
    pub epsilon: f64,
    /// Gradient correction `φ ≥ 0`.
    pub phi: f64,
    /// Over-relaxation `β ∈ [-1, 1]`.
    pub beta: f64,
    /// L∞ window `r ≥ 1` of Metropolis and ordinal GWG, in support-index units.
    pub window_r: usize,
    /// Hamming radius of GWG. Only 1 is supported.
    pub hamming_radius: usize,
}

impl Default for SamplerParams {
    fn default() -> Self {
        Self {
            delta: 1.0,
            epsilon: 0.9,
            phi: 0.0,
            beta: 1.0,
            window_r: 1,
            hamming_radius: 1,
        }
    }
}

impl SamplerParams {
    /// Checks every field against its range and returns the offending field name on failure.
    pub fn check(&self) -> std::result::Result<(), (&'static str, String)> {
        let finite_in = |x: f64, ok: bool| x.is_finite() && ok;
        if !finite_in(self.delta, self.delta > 0.0) {
            return Err(("delta", format!("must be positive, got {}", self.delta)));
        }
        if !finite_in(self.epsilon, (0.0..1.0).contains(&self.epsilon)) {
            return Err(("epsilon", format!("must lie in [0, 1), got {}", self.epsilon)));
        }
        if !finite_in(self.phi, self.phi >= 0.0) {
            return Err(("phi", format!("must be nonnegative, got {}", self.phi)));
        }
        if !finite_in(self.beta, (-1.0..=1.0).contains(&self.beta)) {
            return Err(("beta", format!("must lie in [-1, 1], got {}", self.beta)));
        }
        if self.window_r == 0 {
            return Err(("window_r", "must be at least 1".into()));
        }
        if self.hamming_radius != 1 {
            return Err((
                "hamming_radius",
                format!("only radius 1 is supported, got {}", self.hamming_radius),
            ));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.check()
            .map_err(|(field, msg)| Error::InvalidParameter(format!("{field} {msg}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        SamplerParams::default().validate().unwrap();
    }

    #[test]
    fn ranges_enforced() {
        let bad = [
            SamplerParams { delta: 0.0, ..Default::default() },
            SamplerParams { epsilon: 1.0, ..Default::default() },
            SamplerParams { phi: -0.1, ..Default::default() },
            SamplerParams { beta: 2.0, ..Default::default() },
            SamplerParams { window_r: 0, ..Default::default() },
            SamplerParams { hamming_radius: 2, ..Default::default() },
            SamplerParams { delta: f64::NAN, ..Default::default() },
        ];
        for p in bad {
            assert!(p.validate().is_err(), "{p:?}");
        }
    }

    #[test]
    fn kind_round_trip() {
        for k in SamplerKind::ALL {
            assert_eq!(k.as_str().parse::<SamplerKind>().unwrap(), k);
        }
        assert_eq!("GWG".parse::<SamplerKind>().unwrap(), SamplerKind::OrdinalGwg);
        assert!("hmc".parse::<SamplerKind>().is_err());
    }
}
