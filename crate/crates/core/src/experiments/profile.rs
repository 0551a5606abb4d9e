use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Named initial profiles on `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    Constant(f64),
    /// `(1 + cos(pi u)) / 2`
    Halfcos,
    /// `cos(2 pi u)`
    Cos2pi,
    /// indicator of `[0, 1/2)`
    Step,
    /// `u`
    LinearSaw,
}

impl Profile {
    pub fn eval(&self, u: f64) -> f64 {
        match *self {
            Profile::Constant(c) => c,
            Profile::Halfcos => 0.5 * (1.0 + (PI * u).cos()),
            Profile::Cos2pi => (2.0 * PI * u).cos(),
            Profile::Step => {
                if u < 0.5 {
                    1.0
                } else {
                    0.0
                }
            }
            Profile::LinearSaw => u,
        }
    }

    /// Usable as a particle density.
    pub fn is_density(&self) -> bool {
        match *self {
            Profile::Constant(c) => (0.0..=1.0).contains(&c),
            Profile::Cos2pi => false,
            _ => true,
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Constant(c) => write!(f, "constant({c})"),
            Profile::Halfcos => f.write_str("halfcos"),
            Profile::Cos2pi => f.write_str("cos2pi"),
            Profile::Step => f.write_str("step"),
            Profile::LinearSaw => f.write_str("linear-saw"),
        }
    }
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(arg) = s
            .strip_prefix("constant(")
            .and_then(|r| r.strip_suffix(')'))
        {
            let c: f64 = arg
                .trim()
                .parse()
                .map_err(|_| Error::config("profile", format!("bad constant {arg:?}")))?;
            if !c.is_finite() {
                return Err(Error::config("profile", "constant must be finite"));
            }
            return Ok(Profile::Constant(c));
        }
        match s {
            "halfcos" => Ok(Profile::Halfcos),
            "cos2pi" => Ok(Profile::Cos2pi),
            "step" => Ok(Profile::Step),
            "linear-saw" | "saw" => Ok(Profile::LinearSaw),
            _ => Err(Error::config(
                "profile",
                format!("unknown profile {s:?}; expected constant(c), halfcos, cos2pi, step or linear-saw"),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_names() {
        for p in [
            Profile::Constant(0.3),
            Profile::Halfcos,
            Profile::Cos2pi,
            Profile::Step,
            Profile::LinearSaw,
        ] {
            assert_eq!(p.to_string().parse::<Profile>().unwrap(), p);
        }
        assert!("constant(x)".parse::<Profile>().is_err());
        assert!("gauss".parse::<Profile>().is_err());
    }

    #[test]
    fn values() {
        assert_eq!(Profile::Halfcos.eval(0.0), 1.0);
        assert!(Profile::Halfcos.eval(1.0).abs() < 1e-16);
        assert_eq!(Profile::Step.eval(0.25), 1.0);
        assert_eq!(Profile::Step.eval(0.5), 0.0);
        assert!(!Profile::Constant(1.5).is_density());
        assert!(Profile::Constant(0.3).is_density());
    }
}
