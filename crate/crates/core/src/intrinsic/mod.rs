//! Methods whose subspace objective embeds the response: PLS and its
//! γ-extension, Barshan and its γ-extension, LSPCA and SPPCA.

mod barshan;
mod lspca;
mod pls;
mod sppca;

use std::fmt;
use std::str::FromStr;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Result, SdrError};

pub use barshan::{fit_barshan, fit_barshan_extended};
pub use lspca::{fit_lspca, lspca_objective, LspcaOptions, LspcaSolution};
pub use pls::{fit_pls, fit_pls_extended};
pub use sppca::{fit_sppca, predict_sppca, sppca_log_likelihood, SppcaFit, SppcaOptions};

/// Balance between the supervised term and PCA-style reconstruction.
/// `0` is fully supervised; [`Gamma::Infinite`] reproduces classic PCA.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gamma {
    Finite(f64),
    Infinite,
}

impl Gamma {
    pub fn new(value: f64) -> Result<Self> {
        if value == f64::INFINITY {
            Ok(Gamma::Infinite)
        } else if value.is_finite() && value >= 0.0 {
            Ok(Gamma::Finite(value))
        } else {
            Err(SdrError::contract(format!("γ must be nonnegative, got {value}")))
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Gamma::Finite(v) => v,
            Gamma::Infinite => f64::INFINITY,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Gamma::Infinite)
    }

    /// `n` log-spaced values from `lo` to `hi` inclusive.
    pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<Gamma> {
        match n {
            0 => Vec::new(),
            1 => vec![Gamma::Finite(lo)],
            _ => {
                let (a, b) = (lo.log10(), hi.log10());
                (0..n)
                    .map(|i| Gamma::Finite(10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64)))
                    .collect()
            }
        }
    }

    /// Default tuning grid: 0, fifteen log-spaced values in [1e-4, 1e4], ∞.
    pub fn tuning_grid() -> Vec<Gamma> {
        let mut g = vec![Gamma::Finite(0.0)];
        g.extend(Self::log_grid(1e-4, 1e4, 15));
        g.push(Gamma::Infinite);
        g
    }
}

impl fmt::Display for Gamma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gamma::Finite(v) => write!(f, "{v}"),
            Gamma::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Gamma {
    type Err = SdrError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "+inf" => Ok(Gamma::Infinite),
            other => other
                .parse::<f64>()
                .map_err(|_| SdrError::contract(format!("invalid γ `{s}`")))
                .and_then(Gamma::new),
        }
    }
}

impl Serialize for Gamma {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Gamma::Finite(v) => s.serialize_f64(*v),
            Gamma::Infinite => s.serialize_str("INFINITY"),
        }
    }
}

impl<'de> Deserialize<'de> for Gamma {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct GammaVisitor;

        impl Visitor<'_> for GammaVisitor {
            type Value = Gamma;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a nonnegative number or \"INFINITY\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Gamma, E> {
                Gamma::new(v).map_err(E::custom)
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Gamma, E> {
                Ok(Gamma::Finite(v as f64))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Gamma, E> {
                Gamma::new(v as f64).map_err(E::custom)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Gamma, E> {
                v.parse().map_err(E::custom)
            }
        }

        d.deserialize_any(GammaVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_shape() {
        let g = Gamma::tuning_grid();
        assert_eq!(g.len(), 17);
        assert_eq!(g[0], Gamma::Finite(0.0));
        assert!((g[1].value() - 1e-4).abs() < 1e-18);
        assert!((g[15].value() - 1e4).abs() < 1e-9);
        assert!(g[16].is_infinite());
    }

    #[test]
    fn json_forms() {
        assert_eq!(serde_json::to_string(&Gamma::Infinite).unwrap(), "\"INFINITY\"");
        let g: Gamma = serde_json::from_str("0.25").unwrap();
        assert_eq!(g, Gamma::Finite(0.25));
        let g: Gamma = serde_json::from_str("\"INFINITY\"").unwrap();
        assert!(g.is_infinite());
        assert!(serde_json::from_str::<Gamma>("-1.0").is_err());
    }
}
