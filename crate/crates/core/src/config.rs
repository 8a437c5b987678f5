//! Run configuration: curve, point, isogeny parameters, bounds, budgets.
//!
//! The JSON schema is the CLI's config-file format; defaults reproduce the
//! running example (`y^2 = x^3 - 4` with `Q = (2,2)`, descent from
//! `y^2 = x^3 + 108`). Every knob that affects output is here, so a config
//! plus a build hash pins a run exactly.

use crate::curve::{CurveSpec, RatPoint};
use crate::error::{Error, Result};
use crate::isogeny::DescentPair;
use crate::rational::parse_rational;
use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CurveConfig {
    /// `[a1, a2, a3, a4, a6]`.
    pub a: [i64; 5],
    /// `[x, y]` as exact `"num/den"` strings.
    #[serde(rename = "Q")]
    pub q: [String; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct IsogenyConfig {
    pub a: i64,
    pub u: i64,
    pub q: u32,
    #[serde(rename = "Qprime")]
    pub q_prime: [String; 2],
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    /// Tolerance `1/(10 i)` at index i.
    Paper,
    /// Constant tolerance 1/2.
    Relaxed,
    /// Constant tolerance.
    Custom(f64),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct Bounds {
    /// Sequence prefix length N.
    pub term_bound: u32,
    /// Primes scanned when building the exceptional set L.
    pub prime_bound: u32,
    /// Largest prime tried in the index-set search.
    pub search_bound: u64,
    /// Index-set entries to construct.
    pub count: u32,
    /// Clause-1 fragment indices run over primes up to this bound.
    pub fragment_prime_bound: u32,
    /// S-integral points checked for n up to this bound.
    pub ezs_bound: u32,
    /// Individual terms are materialised up to this index (sizes grow like
    /// n^2 in digits).
    pub term_index_cap: u64,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            term_bound: 120,
            prime_bound: 97,
            search_bound: 100_000,
            count: 5,
            fragment_prime_bound: 23,
            ezs_bound: 40,
            term_index_cap: 400,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub curve: CurveConfig,
    pub isogeny: IsogenyConfig,
    pub bounds: Bounds,
    /// Work units (trial divisions + rho iterations) per factoring task.
    pub budget: u64,
    pub rho_seed: u64,
    pub schedule: ScheduleKind,
    /// Decimal digits carried by the real-analytic layer.
    pub precision: u32,
    /// `complementary` or `exact`.
    pub set_mode: String,
    /// Trusted assertion that E(Q) is generated by Q (rank 1); surfaced in
    /// output metadata, not machine-checked.
    pub rank_one_generator: bool,
    pub output_dir: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            curve: CurveConfig {
                a: [0, 0, 0, 0, -4],
                q: ["2/1".into(), "2/1".into()],
            },
            isogeny: IsogenyConfig {
                a: 108,
                u: 3,
                q: 3,
                q_prime: ["6/1".into(), "18/1".into()],
            },
            bounds: Bounds::default(),
            budget: 10_000_000,
            rho_seed: 1,
            schedule: ScheduleKind::Paper,
            precision: 50,
            set_mode: "exact".into(),
            rank_one_generator: true,
            output_dir: None,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let b = &self.bounds;
        if b.term_bound == 0
            || b.prime_bound == 0
            || b.search_bound < 5
            || b.count == 0
            || b.ezs_bound == 0
            || b.term_index_cap == 0
        {
            return Err(Error::BadConfig("all bounds must be positive".into()));
        }
        if b.search_bound > 1_000_000 {
            return Err(Error::BadConfig(
                "search_bound is limited to 10^6 (the shared sieve)".into(),
            ));
        }
        if self.precision < 20 || self.precision > 1_000 {
            return Err(Error::BadConfig(
                "precision must be between 20 and 1000 digits".into(),
            ));
        }
        if let ScheduleKind::Custom(tol) = self.schedule {
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(Error::BadConfig("custom tolerance must be positive".into()));
            }
        }
        if self.set_mode != "exact" && self.set_mode != "complementary" {
            return Err(Error::BadConfig(format!(
                "set_mode must be \"exact\" or \"complementary\", got {:?}",
                self.set_mode
            )));
        }
        if self.budget == 0 {
            return Err(Error::BadConfig("budget must be positive".into()));
        }
        for s in self.curve.q.iter().chain(self.isogeny.q_prime.iter()) {
            parse_rational(s)?;
        }
        Ok(())
    }

    pub fn build_curve(&self) -> Result<CurveSpec> {
        CurveSpec::new(self.curve.a.map(BigInt::from))
    }

    pub fn build_point(&self) -> Result<RatPoint> {
        Ok(RatPoint::affine(
            parse_rational(&self.curve.q[0])?,
            parse_rational(&self.curve.q[1])?,
        ))
    }

    pub fn build_pair(&self) -> Result<DescentPair> {
        let q_prime = RatPoint::affine(
            parse_rational(&self.isogeny.q_prime[0])?,
            parse_rational(&self.isogeny.q_prime[1])?,
        );
        let pair = DescentPair::new(
            BigInt::from(self.isogeny.a),
            BigInt::from(self.isogeny.u),
            self.isogeny.q,
            q_prime,
            self.build_point()?,
        )?;
        // the configured curve must be the target of the configured map
        if pair.target_curve() != &self.build_curve()? {
            return Err(Error::BadConfig(
                "curve does not match -27a/u^6 from the isogeny block".into(),
            ));
        }
        Ok(pair)
    }
}

/// Parse the standalone curve/point JSON (`{"a": [...], "Q": [...]}`).
pub fn parse_curve_json(text: &str) -> Result<(CurveSpec, RatPoint)> {
    let cfg: CurveConfig = serde_json::from_str(text)?;
    let curve = CurveSpec::new(cfg.a.map(BigInt::from))?;
    let point = RatPoint::affine(parse_rational(&cfg.q[0])?, parse_rational(&cfg.q[1])?);
    if !curve.on_curve(&point) {
        return Err(Error::NotOnCurve);
    }
    Ok((curve, point))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid_and_round_trips() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        let back = RunConfig::from_json(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn default_pair_builds() {
        let cfg = RunConfig::default();
        let pair = cfg.build_pair().unwrap();
        assert_eq!(pair.sign_match(), -1);
    }

    #[test]
    fn curve_json_fixture() {
        let (curve, point) =
            parse_curve_json(r#"{"a": [0, 0, 0, 0, -4], "Q": ["2/1", "2/1"]}"#).unwrap();
        assert!(curve.on_curve(&point));
        assert_eq!(curve.discriminant(), &BigInt::from(-6912));
    }

    #[test]
    fn rejects_malformed_configs() {
        assert!(parse_curve_json(r#"{"a": [0,0,0,0,-4], "Q": ["2/1", "3/1"]}"#).is_err());
        assert!(parse_curve_json(r#"{"a": [0,0,0,0,0], "Q": ["0/1", "0/1"]}"#).is_err());
        assert!(parse_curve_json("not json").is_err());
        assert!(parse_curve_json(r#"{"a": [0,0,0,0,-4]}"#).is_err());
        let mut cfg = RunConfig::default();
        cfg.set_mode = "both".into();
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.bounds.count = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.curve.q[0] = "1/0".into();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn mismatched_isogeny_rejected() {
        let mut cfg = RunConfig::default();
        cfg.curve.a = [0, 0, 0, 0, -5];
        cfg.curve.q = ["0/1".into(), "0/1".into()]; // placeholder; fails earlier
        assert!(cfg.build_pair().is_err());
    }
}
