use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

/// Boundary weight multiplying ∂x u ∂x v̄ on the bottom side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightKind {
    /// s·x^α on Γ+.
    HalfPower,
    /// +|x|^α on Γ+ and −|x|^α on Γ−; the sign s is ignored.
    SignChanging,
    /// s·x^α(1−x)^α on Γ+.
    Bridge,
}

impl WeightKind {
    pub fn name(self) -> &'static str {
        match self {
            WeightKind::HalfPower => "half-power",
            WeightKind::SignChanging => "sign-changing",
            WeightKind::Bridge => "bridge",
        }
    }

    pub fn parse(s: &str) -> Result<WeightKind> {
        match s {
            "half-power" => Ok(WeightKind::HalfPower),
            "sign-changing" => Ok(WeightKind::SignChanging),
            "bridge" => Ok(WeightKind::Bridge),
            other => Err(Error::invalid(format!(
                "unknown weight '{other}' (expected half-power, sign-changing or bridge)"
            ))),
        }
    }
}

/// Volume source f.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    Zero,
    Constant(f64),
    CosX,
}

impl Source {
    pub fn eval(self, x: f64, _y: f64) -> f64 {
        match self {
            Source::Zero => 0.0,
            Source::Constant(c) => c,
            Source::CosX => x.cos(),
        }
    }

    pub fn parse(s: &str) -> Result<Source> {
        match s {
            "zero" => Ok(Source::Zero),
            "cos-x" | "cos(x)" => Ok(Source::CosX),
            other => other
                .strip_prefix("const:")
                .and_then(|v| v.parse::<f64>().ok())
                .map(Source::Constant)
                .ok_or_else(|| {
                    Error::invalid(format!(
                        "unknown source '{other}' (expected zero, cos-x or const:<value>)"
                    ))
                }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub alpha: f64,
    pub sign: i8,
    pub weight: WeightKind,
    pub source: Source,
    /// Coefficient c of ∫ c u v̄.
    pub shift: C64,
}

impl ProblemSpec {
    pub fn new(alpha: f64, sign: i8, weight: WeightKind) -> Result<ProblemSpec> {
        let spec = ProblemSpec {
            alpha,
            sign,
            weight,
            source: Source::CosX,
            shift: C64::new(1.0, 0.0),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_source(mut self, source: Source) -> Self {
        self.source = source;
        self
    }

    pub fn with_shift(mut self, shift: C64) -> Self {
        self.shift = shift;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() || self.alpha < 0.0 {
            return Err(Error::invalid("alpha must be ≥ 0"));
        }
        if self.sign != 1 && self.sign != -1 {
            return Err(Error::invalid("sign must be +1 or -1"));
        }
        if !(self.shift.re.is_finite() && self.shift.im.is_finite()) {
            return Err(Error::invalid("shift must be finite"));
        }
        Ok(())
    }

    /// Sign of the weight on Γ− and Γ+ (0 where the weight vanishes identically).
    pub(crate) fn side_signs(&self) -> (f64, f64) {
        let s = f64::from(self.sign);
        match self.weight {
            WeightKind::HalfPower | WeightKind::Bridge => (0.0, s),
            WeightKind::SignChanging => (-1.0, 1.0),
        }
    }

    /// Pointwise weight w(x) on y = 0.
    pub fn weight_at(&self, x: f64) -> f64 {
        let (sm, sp) = self.side_signs();
        let a = self.alpha;
        match self.weight {
            WeightKind::HalfPower => {
                if x > 0.0 {
                    sp * x.powf(a)
                } else {
                    0.0
                }
            }
            WeightKind::Bridge => {
                if x > 0.0 {
                    sp * x.powf(a) * (1.0 - x).max(0.0).powf(a)
                } else {
                    0.0
                }
            }
            WeightKind::SignChanging => {
                if x > 0.0 {
                    sp * x.powf(a)
                } else if x < 0.0 {
                    sm * (-x).powf(a)
                } else {
                    0.0
                }
            }
        }
    }
}
