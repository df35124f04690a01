//! Built-in test functions of several complex variables.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "kebab-case")]
pub enum TestFunction {
    /// `exp(z_1 + … + z_N)`.
    ExpSum,
    /// `1/(p − z_1⋯z_N)`.
    RationalPole {
        #[serde(default = "default_pole")]
        p: f64,
    },
    /// `z_1⋯z_N`.
    Polynomial,
    /// `1/(1 + (z_1 + … + z_N)²/5)`.
    Runge,
    /// `∏ 1/(z_j − a)`.
    RationalProduct {
        #[serde(default = "default_shift")]
        a: f64,
    },
}

fn default_pole() -> f64 {
    2.0
}

fn default_shift() -> f64 {
    3.0
}

impl TestFunction {
    pub const IDS: [&'static str; 5] = ["exp-sum", "rational-pole", "polynomial", "runge", "rational-product"];

    /// Parses an id with default parameters.
    pub fn from_id(id: &str) -> Result<Self> {
        Ok(match id {
            "exp-sum" => TestFunction::ExpSum,
            "rational-pole" => TestFunction::RationalPole { p: default_pole() },
            "polynomial" => TestFunction::Polynomial,
            "runge" => TestFunction::Runge,
            "rational-product" => TestFunction::RationalProduct { a: default_shift() },
            _ => return Err(Error::invalid(format!("unknown test function '{id}'; known: {}", Self::IDS.join(", ")))),
        })
    }

    pub fn id(&self) -> &'static str {
        match self {
            TestFunction::ExpSum => "exp-sum",
            TestFunction::RationalPole { .. } => "rational-pole",
            TestFunction::Polynomial => "polynomial",
            TestFunction::Runge => "runge",
            TestFunction::RationalProduct { .. } => "rational-product",
        }
    }

    pub fn eval(&self, z: &[C64]) -> C64 {
        let one = C64::new(1.0, 0.0);
        match *self {
            TestFunction::ExpSum => z.iter().sum::<C64>().exp(),
            TestFunction::RationalPole { p } => one / (C64::new(p, 0.0) - z.iter().product::<C64>()),
            TestFunction::Polynomial => z.iter().product(),
            TestFunction::Runge => {
                let s: C64 = z.iter().sum();
                one / (one + s * s / 5.0)
            }
            TestFunction::RationalProduct { a } => z.iter().map(|&zj| one / (zj - a)).product(),
        }
    }

    pub fn eval2(&self, z: C64, w: C64) -> C64 {
        self.eval(&[z, w])
    }

    /// Whether the function is holomorphic on a neighbourhood of the closed
    /// polydisk of radius `rho` in `ℂ^n`.
    pub fn holomorphic_on_polydisk(&self, n: usize, rho: f64) -> bool {
        match *self {
            TestFunction::ExpSum | TestFunction::Polynomial => true,
            TestFunction::RationalPole { p } => rho.powi(n as i32) < p.abs(),
            // Poles where z_1 + … + z_N = ±i√5.
            TestFunction::Runge => n as f64 * rho < 5f64.sqrt(),
            TestFunction::RationalProduct { a } => rho < a.abs(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_round_trip() {
        for id in TestFunction::IDS {
            let f = TestFunction::from_id(id).unwrap();
            assert_eq!(f.id(), id);
            let json = serde_json::to_string(&f).unwrap();
            assert_eq!(serde_json::from_str::<TestFunction>(&json).unwrap(), f);
        }
        assert!(TestFunction::from_id("bessel").is_err());
        let f: TestFunction = serde_json::from_str(r#"{"id":"rational-pole"}"#).unwrap();
        assert_eq!(f, TestFunction::RationalPole { p: 2.0 });
    }

    #[test]
    fn values() {
        let z = C64::new(0.6, 0.0);
        let w = C64::new(0.5, 0.0);
        let f = TestFunction::from_id("rational-pole").unwrap();
        assert!((f.eval2(z, w).re - 1.0 / 1.7).abs() < 1e-15);
        assert_eq!(TestFunction::Polynomial.eval2(z, w), z * w);
        assert!((TestFunction::ExpSum.eval2(z, w) - C64::new(1.1f64.exp(), 0.0)).norm() < 1e-14);
        assert!((TestFunction::Runge.eval2(z, w).re - 1.0 / (1.0 + 1.21 / 5.0)).abs() < 1e-15);
        let r = TestFunction::RationalProduct { a: 3.0 }.eval2(z, w);
        assert!((r.re - 1.0 / (2.4 * 2.5)).abs() < 1e-15);
    }

    #[test]
    fn holomorphy_on_the_bidisk() {
        for id in TestFunction::IDS {
            assert!(TestFunction::from_id(id).unwrap().holomorphic_on_polydisk(2, 1.0), "{id}");
        }
        assert!(!TestFunction::RationalPole { p: 0.5 }.holomorphic_on_polydisk(2, 1.0));
    }
}
