use serde::{Deserialize, Serialize};

use crate::error::{domain, Result, SleError};

/// Qualitative behaviour of the trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// kappa <= 4: simple curve, never touches the real line after time 0.
    Simple,
    /// 4 < kappa < 8: self-touching, swallows regions.
    Touching,
}

/// The SLE parameter kappa together with a = 2/kappa.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct SleParams {
    kappa: f64,
    a: f64,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    kappa: f64,
}

impl TryFrom<RawParams> for SleParams {
    type Error = SleError;
    fn try_from(raw: RawParams) -> Result<Self> {
        SleParams::new(raw.kappa)
    }
}

impl From<SleParams> for RawParams {
    fn from(p: SleParams) -> Self {
        RawParams { kappa: p.kappa }
    }
}

impl SleParams {
    pub fn new(kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa < 8.0) {
            return domain(format!("kappa must lie in (0, 8), got {kappa}"));
        }
        Ok(Self { kappa, a: 2.0 / kappa })
    }

    /// Builds from a = 2/kappa, keeping `a` exact.
    pub fn from_a(a: f64) -> Result<Self> {
        if !(a > 0.25 && a.is_finite()) {
            return domain(format!("a must exceed 1/4, got {a}"));
        }
        Ok(Self { kappa: 2.0 / a, a })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn regime(&self) -> Regime {
        if self.kappa <= 4.0 {
            Regime::Simple
        } else {
            Regime::Touching
        }
    }

    pub(crate) fn require_touching(&self, what: &str) -> Result<()> {
        match self.regime() {
            Regime::Touching => Ok(()),
            Regime::Simple => Err(SleError::Regime(format!(
                "{what} needs 4 < kappa < 8, got kappa = {}",
                self.kappa
            ))),
        }
    }

    pub(crate) fn require_simple(&self, what: &str) -> Result<()> {
        match self.regime() {
            Regime::Simple => Ok(()),
            Regime::Touching => Err(SleError::Regime(format!(
                "{what} needs kappa <= 4, got kappa = {}",
                self.kappa
            ))),
        }
    }
}

/// Parses "8/3", "6" or "2.5".
pub fn parse_kappa(text: &str) -> Result<f64> {
    let text = text.trim();
    let value = match text.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num.trim().parse().map_err(|_| bad_kappa(text))?;
            let den: f64 = den.trim().parse().map_err(|_| bad_kappa(text))?;
            if den == 0.0 {
                return Err(bad_kappa(text));
            }
            num / den
        }
        None => text.parse().map_err(|_| bad_kappa(text))?,
    };
    SleParams::new(value)?;
    Ok(value)
}

fn bad_kappa(text: &str) -> SleError {
    SleError::Domain(format!("cannot parse kappa from {text:?}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range() {
        assert!(SleParams::new(0.0).is_err());
        assert!(SleParams::new(8.0).is_err());
        assert!(SleParams::new(-1.0).is_err());
        assert!(SleParams::new(f64::NAN).is_err());
    }

    #[test]
    fn regime_boundary_at_four() {
        assert_eq!(SleParams::new(4.0).unwrap().regime(), Regime::Simple);
        assert_eq!(SleParams::new(4.000001).unwrap().regime(), Regime::Touching);
        let p = SleParams::new(8.0 / 3.0).unwrap();
        assert_eq!(p.a(), 2.0 / (8.0 / 3.0));
    }

    #[test]
    fn fractions() {
        assert_eq!(parse_kappa("8/3").unwrap(), 8.0 / 3.0);
        assert_eq!(parse_kappa(" 6 ").unwrap(), 6.0);
        assert!(parse_kappa("9").is_err());
        assert!(parse_kappa("1/0").is_err());
        assert!(parse_kappa("x").is_err());
    }

    #[test]
    fn serde_validates() {
        let p: SleParams = serde_json::from_str(r#"{"kappa": 6.0}"#).unwrap();
        assert_eq!(p.a(), 2.0 / 6.0);
        assert!(serde_json::from_str::<SleParams>(r#"{"kappa": 9.0}"#).is_err());
    }
}
