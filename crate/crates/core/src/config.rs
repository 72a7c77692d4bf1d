//! JSON descriptions of generator systems.
//!
//! A config lists each generator as ascending complex coefficients
//! (`[re, im]` pairs) of its numerator and optional denominator, plus an
//! optional base point and an optional candidate open set for the OSC
//! checker:
//!
//! ```json
//! {
//!   "generators": [
//!     { "num": [[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]] },
//!     { "num": [[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]], "den": [[4.0, 0.0]] }
//!   ],
//!   "base_point": [1.0, 0.0]
//! }
//! ```
//!
//! Unknown keys are rejected so that typos fail loudly instead of silently
//! running a different experiment.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::checks::OpenSet;
use crate::poly::Poly;
use crate::semigroup::GeneratorSystem;
use crate::sphere::{RationalMap, SpherePoint};
use crate::{Error, NumericTolerances, Result};

/// One generator: coefficient lists in ascending degree order.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawGenerator {
    pub num: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub den: Option<Vec<[f64; 2]>>,
}

/// A parsed-but-unvalidated system description.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub generators: Vec<RawGenerator>,
    /// Optional base point for preimage trees (otherwise a repelling fixed
    /// point of some generator is located automatically).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_point: Option<[f64; 2]>,
    /// Optional candidate set for the open set condition checker.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub open_set: Option<OpenSet>,
}

fn poly_from_pairs(pairs: &[[f64; 2]]) -> Poly {
    Poly::new(
        pairs
            .iter()
            .map(|&[re, im]| Complex64::new(re, im))
            .collect(),
    )
}

impl RawConfig {
    /// Parses a config from JSON text.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::InvalidParameter(format!("config parse error: {e}")))
    }

    /// Reads and parses a config file.
    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidParameter(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Validates the description into a ready generator system.
    pub fn to_system(&self, tol: NumericTolerances) -> Result<GeneratorSystem> {
        let gens: Result<Vec<RationalMap>> = self
            .generators
            .iter()
            .map(|g| {
                let num = poly_from_pairs(&g.num);
                let den = match &g.den {
                    Some(d) => poly_from_pairs(d),
                    None => Poly::constant(Complex64::new(1.0, 0.0)),
                };
                RationalMap::new(num, den, &tol)
            })
            .collect();
        GeneratorSystem::new(gens?, tol)
    }

    pub fn base_point(&self) -> Option<SpherePoint> {
        self.base_point.map(|[re, im]| SpherePoint::finite(re, im))
    }

    /// SHA-256 of the canonical re-serialization — identifies the
    /// mathematical content independently of whitespace or key formatting
    /// in the source file.
    pub fn content_hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serialization is total");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Convenience: parse a file and build the system with default tolerances.
pub fn load_system(path: &std::path::Path) -> Result<(RawConfig, GeneratorSystem)> {
    let raw = RawConfig::from_path(path)?;
    let gs = raw.to_system(NumericTolerances::default())?;
    Ok((raw, gs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_builds_a_two_generator_system() {
        let text = r#"{
            "generators": [
                { "num": [[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]] },
                { "num": [[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]], "den": [[4.0, 0.0]] }
            ],
            "base_point": [1.0, 0.0]
        }"#;
        let raw = RawConfig::from_json(text).unwrap();
        let gs = raw.to_system(NumericTolerances::default()).unwrap();
        assert_eq!(gs.generators().len(), 2);
        assert_eq!(gs.total_degree(), 4);
        assert_eq!(raw.base_point(), Some(SpherePoint::finite(1.0, 0.0)));
    }

    #[test]
    fn rejects_unknown_keys_and_bad_polynomials() {
        let typo = r#"{ "generator": [ { "num": [[1.0, 0.0]] } ] }"#;
        assert!(RawConfig::from_json(typo).is_err());

        let inner = r#"{ "generators": [ { "num": [[1.0, 0.0]], "dem": [[1.0, 0.0]] } ] }"#;
        assert!(RawConfig::from_json(inner).is_err());

        // A constant "map" is rejected at validation time.
        let constant = r#"{ "generators": [ { "num": [[1.0, 0.0]] } ] }"#;
        let raw = RawConfig::from_json(constant).unwrap();
        assert!(raw.to_system(NumericTolerances::default()).is_err());
    }

    #[test]
    fn hash_ignores_formatting_but_sees_content() {
        let a = r#"{"generators":[{"num":[[0.0,0.0],[2.0,0.0]]}]}"#;
        let b = r#"{
            "generators": [ { "num": [ [0.0, 0.0], [2.0, 0.0] ] } ]
        }"#;
        let c = r#"{"generators":[{"num":[[0.0,0.0],[3.0,0.0]]}]}"#;
        let ha = RawConfig::from_json(a).unwrap().content_hash();
        let hb = RawConfig::from_json(b).unwrap().content_hash();
        let hc = RawConfig::from_json(c).unwrap().content_hash();
        assert_eq!(ha, hb);
        assert_ne!(ha, hc);
        assert_eq!(ha.len(), 64);
    }

    #[test]
    fn open_set_round_trips_through_config() {
        let text = r#"{
            "generators": [ { "num": [[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]] } ],
            "open_set": { "kind": "annulus", "center": [0.0, 0.0], "r_inner": 0.5, "r_outer": 2.0 }
        }"#;
        let raw = RawConfig::from_json(text).unwrap();
        let u = raw.open_set.as_ref().unwrap();
        u.validate().unwrap();
        assert!(u.contains(SpherePoint::finite(1.0, 0.0)));
        assert!(!u.contains(SpherePoint::finite(3.0, 0.0)));
    }
}
