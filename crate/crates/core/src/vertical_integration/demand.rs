use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A non-increasing demand curve `d: [0, 1] → [0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum DemandCurve {
    /// One unit demanded up to the valuation `v`, none above it.
    Threshold { v: f64 },
    /// `clamp(a − b·p, 0, 1)`.
    Linear { a: f64, b: f64 },
    /// `levels[k]` on `(breakpoints[k−1], breakpoints[k]]`; `d(b_k) = levels[k−1]`.
    PiecewiseConstant { breakpoints: Vec<f64>, levels: Vec<f64> },
}

impl DemandCurve {
    pub fn threshold(v: f64) -> Result<Self> {
        let d = Self::Threshold { v };
        d.validate()?;
        Ok(d)
    }

    pub fn linear(a: f64, b: f64) -> Result<Self> {
        let d = Self::Linear { a, b };
        d.validate()?;
        Ok(d)
    }

    pub fn piecewise_constant(breakpoints: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        let d = Self::PiecewiseConstant { breakpoints, levels };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Threshold { v } if v.is_finite() => Ok(()),
            Self::Threshold { v } => Err(Error::config(format!("threshold valuation {v} is not finite"))),
            Self::Linear { a, b } if a.is_finite() && b.is_finite() && *b >= 0.0 => Ok(()),
            Self::Linear { a, b } => {
                Err(Error::config(format!("linear demand needs finite a and b >= 0, got a={a} b={b}")))
            }
            Self::PiecewiseConstant { breakpoints, levels } => {
                if levels.len() != breakpoints.len() + 1 {
                    return Err(Error::config("piecewise demand needs one more level than breakpoints"));
                }
                if levels.iter().any(|y| !(0.0..=1.0).contains(y)) {
                    return Err(Error::config("piecewise demand levels must lie in [0, 1]"));
                }
                if levels.windows(2).any(|w| w[1] > w[0]) {
                    return Err(Error::config("piecewise demand levels must be non-increasing"));
                }
                if breakpoints.iter().any(|b| !(0.0..=1.0).contains(b)) || breakpoints.windows(2).any(|w| w[1] <= w[0])
                {
                    return Err(Error::config("piecewise breakpoints must be strictly increasing in [0, 1]"));
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, p: f64) -> f64 {
        match self {
            Self::Threshold { v } => {
                if p <= *v {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Linear { a, b } => (a - b * p).clamp(0.0, 1.0),
            Self::PiecewiseConstant { breakpoints, levels } => levels[breakpoints.partition_point(|&b| b < p)],
        }
    }

    /// Prices in `[0, 1]` where the curve changes shape.
    pub fn critical_prices(&self) -> Vec<f64> {
        let mut out = match self {
            Self::Threshold { v } => vec![*v],
            Self::Linear { a, b } if *b > 0.0 => vec![(a - 1.0) / b, a / b, a / (2.0 * b)],
            Self::Linear { .. } => vec![],
            Self::PiecewiseConstant { breakpoints, .. } => breakpoints.clone(),
        };
        out.retain(|p| (0.0..=1.0).contains(p));
        out
    }

    /// Parses the params column of an instance file.
    pub fn parse(family: &str, params: &str) -> std::result::Result<Self, String> {
        let values = params
            .split(',')
            .map(|s| s.trim())
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>().map_err(|e| format!("bad number `{s}`: {e}")))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let curve = match (family, values.as_slice()) {
            ("threshold", [v]) => Self::Threshold { v: *v },
            ("linear", [a, b]) => Self::Linear { a: *a, b: *b },
            ("piecewise", vs) if vs.len() % 2 == 1 => Self::PiecewiseConstant {
                levels: vs.iter().step_by(2).copied().collect(),
                breakpoints: vs.iter().skip(1).step_by(2).copied().collect(),
            },
            ("threshold" | "linear" | "piecewise", _) => {
                return Err(format!("wrong number of parameters for `{family}`: {}", values.len()))
            }
            _ => return Err(format!("unknown demand family `{family}`")),
        };
        curve.validate().map_err(|e| e.to_string())?;
        Ok(curve)
    }
}

impl fmt::Display for DemandCurve {
    /// The `family<TAB>params` columns of an instance file.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Threshold { v } => write!(f, "threshold\t{v}"),
            Self::Linear { a, b } => write!(f, "linear\t{a},{b}"),
            Self::PiecewiseConstant { breakpoints, levels } => {
                write!(f, "piecewise\t{}", levels[0])?;
                for (b, y) in breakpoints.iter().zip(&levels[1..]) {
                    write!(f, ",{b},{y}")?;
                }
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn threshold_and_linear_values() {
        let d = DemandCurve::threshold(0.4).unwrap();
        assert_eq!((d.eval(0.4), d.eval(0.41)), (1.0, 0.0));
        let l = DemandCurve::linear(1.0, 1.0).unwrap();
        assert_eq!(l.eval(0.25), 0.75);
        assert_eq!(DemandCurve::linear(2.0, 1.0).unwrap().eval(0.5), 1.0);
        assert!(DemandCurve::linear(1.0, -1.0).is_err());
    }

    #[test]
    fn piecewise_is_left_continuous() {
        let d = DemandCurve::piecewise_constant(vec![0.3, 0.6], vec![1.0, 0.5, 0.2]).unwrap();
        assert_eq!(d.eval(0.0), 1.0);
        assert_eq!(d.eval(0.3), 1.0);
        assert_eq!(d.eval(0.31), 0.5);
        assert_eq!(d.eval(0.6), 0.5);
        assert_eq!(d.eval(1.0), 0.2);
        assert!(DemandCurve::piecewise_constant(vec![0.3], vec![0.5, 0.7]).is_err());
        assert!(DemandCurve::piecewise_constant(vec![0.6, 0.3], vec![1.0, 0.5, 0.2]).is_err());
    }

    #[test]
    fn text_round_trip() {
        for d in [
            DemandCurve::threshold(0.37).unwrap(),
            DemandCurve::linear(0.9, 0.5).unwrap(),
            DemandCurve::piecewise_constant(vec![0.25, 0.75], vec![0.9, 0.4, 0.0]).unwrap(),
        ] {
            let text = d.to_string();
            let (family, params) = text.split_once('\t').unwrap();
            assert_eq!(DemandCurve::parse(family, params).unwrap(), d);
        }
        assert!(DemandCurve::parse("step", "0.5").is_err());
        assert!(DemandCurve::parse("linear", "0.5").is_err());
    }

    proptest! {
        #[test]
        fn curves_are_non_increasing_and_bounded(
            a in -1.0f64..2.0, b in 0.0f64..3.0, v in -0.5f64..1.5, x in 0.0f64..=1.0, y in 0.0f64..=1.0,
        ) {
            let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
            for d in [DemandCurve::linear(a, b).unwrap(), DemandCurve::threshold(v).unwrap()] {
                prop_assert!(d.eval(lo) >= d.eval(hi));
                prop_assert!((0.0..=1.0).contains(&d.eval(lo)));
            }
        }
    }
}
