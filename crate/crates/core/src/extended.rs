use std::fmt;
use std::str::FromStr;

/// A real number extended with both infinities and an explicit undefined
/// marker, so that degenerate odds ratios never turn into a silent NaN.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    PosInf,
    NegInf,
    Undefined,
}

impl ExtReal {
    /// Maps IEEE infinities onto the tagged variants and NaN onto `Undefined`.
    pub fn from_f64(x: f64) -> Self {
        if x.is_nan() {
            ExtReal::Undefined
        } else if x == f64::INFINITY {
            ExtReal::PosInf
        } else if x == f64::NEG_INFINITY {
            ExtReal::NegInf
        } else {
            ExtReal::Finite(x)
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(x) => Some(x),
            _ => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    /// IEEE view: infinities map to infinities, `Undefined` to NaN.
    pub fn to_f64(self) -> f64 {
        match self {
            ExtReal::Finite(x) => x,
            ExtReal::PosInf => f64::INFINITY,
            ExtReal::NegInf => f64::NEG_INFINITY,
            ExtReal::Undefined => f64::NAN,
        }
    }

    /// Natural logarithm for non-negative extended values.
    pub fn ln(self) -> Self {
        match self {
            ExtReal::Finite(x) if x > 0.0 => ExtReal::Finite(x.ln()),
            ExtReal::Finite(0.0) => ExtReal::NegInf,
            ExtReal::PosInf => ExtReal::PosInf,
            _ => ExtReal::Undefined,
        }
    }

    /// -1, 0 or 1; `None` when undefined.
    pub fn signum(self) -> Option<i8> {
        match self {
            ExtReal::Finite(x) if x > 0.0 => Some(1),
            ExtReal::Finite(x) if x < 0.0 => Some(-1),
            ExtReal::Finite(_) => Some(0),
            ExtReal::PosInf => Some(1),
            ExtReal::NegInf => Some(-1),
            ExtReal::Undefined => None,
        }
    }

    pub fn abs(self) -> Self {
        match self {
            ExtReal::Finite(x) => ExtReal::Finite(x.abs()),
            ExtReal::PosInf | ExtReal::NegInf => ExtReal::PosInf,
            ExtReal::Undefined => ExtReal::Undefined,
        }
    }
}

impl From<f64> for ExtReal {
    fn from(x: f64) -> Self {
        ExtReal::from_f64(x)
    }
}

/// Finite values use 17 significant digits so that parsing the text back
/// recovers the identical `f64`.
impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(x) => write!(f, "{x:.16e}"),
            ExtReal::PosInf => f.write_str("inf"),
            ExtReal::NegInf => f.write_str("-inf"),
            ExtReal::Undefined => f.write_str("undefined"),
        }
    }
}

impl FromStr for ExtReal {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "inf" | "+inf" => Ok(ExtReal::PosInf),
            "-inf" => Ok(ExtReal::NegInf),
            "undefined" => Ok(ExtReal::Undefined),
            other => other
                .parse::<f64>()
                .map_err(|e| format!("bad extended real {other:?}: {e}"))
                .and_then(|x| {
                    if x.is_finite() {
                        Ok(ExtReal::Finite(x))
                    } else {
                        Err(format!("bad extended real {other:?}"))
                    }
                }),
        }
    }
}
