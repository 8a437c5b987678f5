//! The explicit degree-3 map between the j = 0 curves
//! `E': y^2 = x^3 + a` and `E: y^2 = x^3 - 27a/u^6`, and the sequence-level
//! certificates it supports.
//!
//! The map is
//!
//! ```text
//! sigma(x, y) = ( (x^3 + 4a) / (u^2 x^2),  y (x^3 - 8a) / (u^3 x^3) )
//! ```
//!
//! a composition of the kernel-{x = 0} quotient with the scaling isomorphism
//! `(X, Y) -> (X/u^2, Y/u^3)`. It is a group homomorphism (tested, not
//! assumed) and odd, so `sigma(Q') = -Q` is as good as `+Q` for every
//! sequence-level statement; the observed sign is stored, never guessed.
//!
//! With `B` the sequence of `Q` on `E` and `b` the companion sequence of
//! `Q'` on `E'`, the certified facts are, for every good prime `p`:
//! `ord_p(b_n) <= ord_p(B_n) <= ord_p(b_3n)`, and for good `l > 2` with
//! `l | b_n`: `ord_l(b_3n) = ord_l(b_n) + ord_l(3)`. Both are verified for
//! all good primes at once by stripping the (shared) bad primes and checking
//! divisibility of what remains, with per-prime valuations recorded for the
//! small primes actually seen.

use crate::curve::{CurveSpec, RatPoint};
use crate::eds::{ord_in, strip_primes, EdsSequence, PrimitiveClass};
use crate::error::{Error, Result};
use crate::factor::Budget;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

#[derive(Debug, Clone)]
pub struct DescentPair {
    e_prime: CurveSpec,
    e: CurveSpec,
    q_degree: u32,
    a: BigInt,
    u: BigInt,
    q_point: RatPoint,
    q_prime_point: RatPoint,
    sign_match: i8,
}

impl DescentPair {
    /// Assemble the pair from the family parameters and both points, and
    /// certify the descent: `sigma(Q')` must equal `Q` or `-Q`.
    pub fn new(
        a: BigInt,
        u: BigInt,
        degree: u32,
        q_prime_point: RatPoint,
        q_point: RatPoint,
    ) -> Result<Self> {
        if degree != 3 {
            return Err(Error::BadConfig(format!(
                "this isogeny family has degree 3, not {degree}"
            )));
        }
        if u.is_zero() {
            return Err(Error::BadIsogenyParams { a, u });
        }
        let u6 = u.pow(6);
        let neg27a = &a * -27i32;
        if !neg27a.mod_floor(&u6).is_zero() {
            return Err(Error::BadIsogenyParams { a, u });
        }
        let a_target = neg27a / &u6;
        let e_prime = CurveSpec::new([
            BigInt::zero(),
            BigInt::zero(),
            BigInt::zero(),
            BigInt::zero(),
            a.clone(),
        ])?;
        let e = CurveSpec::new([
            BigInt::zero(),
            BigInt::zero(),
            BigInt::zero(),
            BigInt::zero(),
            a_target,
        ])?;
        if !e_prime.on_curve(&q_prime_point) || !e.on_curve(&q_point) {
            return Err(Error::NotOnCurve);
        }
        // the two curves share one bad-prime set; everything downstream
        // strips exactly this set
        debug_assert_eq!(e_prime.bad_primes(), e.bad_primes());

        let mut pair = DescentPair {
            e_prime,
            e,
            q_degree: degree,
            a,
            u,
            q_point,
            q_prime_point,
            sign_match: 0,
        };
        pair.sign_match = pair.verify_descent()?;
        Ok(pair)
    }

    /// The configured example: `y^2 = x^3 + 108 -> y^2 = x^3 - 4` with
    /// `u = 3`, carrying `(6, 18)` to `-(2, 2)`.
    pub fn example() -> Result<Self> {
        DescentPair::new(
            BigInt::from(108),
            BigInt::from(3),
            3,
            RatPoint::from_integers(6, 18),
            RatPoint::from_integers(2, 2),
        )
    }

    pub fn source_curve(&self) -> &CurveSpec {
        &self.e_prime
    }

    pub fn target_curve(&self) -> &CurveSpec {
        &self.e
    }

    pub fn degree(&self) -> u32 {
        self.q_degree
    }

    pub fn sign_match(&self) -> i8 {
        self.sign_match
    }

    pub fn q_point(&self) -> &RatPoint {
        &self.q_point
    }

    pub fn q_prime_point(&self) -> &RatPoint {
        &self.q_prime_point
    }

    /// Evaluate the map. `x = 0` is the kernel x-coordinate (a pole of the
    /// affine formulas) and is rejected; the identity maps to the identity.
    pub fn sigma(&self, p: &RatPoint) -> Result<RatPoint> {
        let (x, y) = match p.coords() {
            None => return Ok(RatPoint::Identity),
            Some(c) => c,
        };
        if x.is_zero() {
            return Err(Error::SigmaPole);
        }
        if !self.e_prime.on_curve(p) {
            return Err(Error::NotOnCurve);
        }
        let a = BigRational::from_integer(self.a.clone());
        let u = BigRational::from_integer(self.u.clone());
        let x3 = x * x * x;
        let four_a = &a * BigRational::from_integer(4.into());
        let eight_a = &a * BigRational::from_integer(8.into());
        let xx = (&x3 + four_a) / (&u * &u * x * x);
        let yy = y * (&x3 - eight_a) / (&u * &u * &u * &x3);
        let image = RatPoint::affine(xx, yy);
        debug_assert!(self.e.on_curve(&image));
        Ok(image)
    }

    /// Recompute the stored sign: +1 if `sigma(Q') = Q`, -1 if `= -Q`.
    pub fn verify_descent(&self) -> Result<i8> {
        let image = self.sigma(&self.q_prime_point)?;
        if image == self.q_point {
            Ok(1)
        } else if image == self.e.neg(&self.q_point) {
            Ok(-1)
        } else {
            Err(Error::NoDescent)
        }
    }

    /// The companion sequence `b = (b_n)` of `Q'` on `E'`.
    pub fn companion_eds(&self, n_max: u32) -> Result<EdsSequence> {
        EdsSequence::generate(&self.e_prime, &self.q_prime_point, n_max)
    }

    /// The main sequence `B = (B_n)` of `Q` on `E`.
    pub fn main_eds(&self, n_max: u32) -> Result<EdsSequence> {
        EdsSequence::generate(&self.e, &self.q_point, n_max)
    }

    /// Certify `ord_p(b_n) <= ord_p(B_n) <= ord_p(b_qn)` for every good p
    /// at once: after stripping bad primes the chain is exactly
    /// `b_n | B_n | b_qn`. Valuations of small witness primes are recorded
    /// alongside.
    pub fn check_div_chain(
        &self,
        b_seq: &EdsSequence,
        big_seq: &EdsSequence,
        n_max: u32,
    ) -> DivChainReport {
        let q = self.q_degree;
        let bad = self.e.bad_primes();
        let n_max = n_max
            .min(big_seq.len())
            .min(b_seq.len() / q);
        let mut rows = Vec::new();
        let mut violations = Vec::new();
        for n in 1..=n_max {
            let gb = strip_primes(b_seq.b(n), bad);
            let gb_big = strip_primes(big_seq.b(n), bad);
            let gb3 = strip_primes(b_seq.b(q * n), bad);
            let left_ok = gb_big.mod_floor(&gb).is_zero();
            let right_ok = gb3.mod_floor(&gb_big).is_zero();
            if !left_ok {
                violations.push((n, "lower".to_string()));
            }
            if !right_ok {
                violations.push((n, "upper".to_string()));
            }
            let witnesses = witness_ords(
                &[b_seq.b(n), big_seq.b(n), b_seq.b(q * n)],
                bad,
                1_000_000,
            );
            rows.push(DivChainRow {
                n,
                left_ok,
                right_ok,
                witnesses,
            });
        }
        DivChainReport {
            degree: q,
            n_max,
            rows,
            violations,
        }
    }

    /// Per-prime form of the valuation-addition law:
    /// `ord_l(b_qn) = ord_l(b_n) + ord_l(q)` for good `l > 2` dividing
    /// `b_n`. Preconditions are rejected, not silently skipped.
    pub fn check_ord_additivity(
        &self,
        b_seq: &EdsSequence,
        l: &BigInt,
        n: u32,
    ) -> Result<OrdAdditivity> {
        if l <= &BigInt::from(2) {
            return Err(Error::BadConfig(format!("l must exceed 2, got {l}")));
        }
        if !self.e_prime.is_good_prime(l) {
            return Err(Error::BadReduction(l.clone()));
        }
        let ord_n = ord_in(b_seq.b(n), l);
        if ord_n == 0 {
            return Err(Error::BadConfig(format!("{l} does not divide b_{n}")));
        }
        let ord_qn = ord_in(b_seq.b(self.q_degree * n), l);
        let ord_q = ord_in(&BigInt::from(self.q_degree), l);
        Ok(OrdAdditivity {
            l: l.to_string(),
            n,
            ord_b_n: ord_n,
            ord_b_qn: ord_qn,
            ord_q,
            holds: ord_qn == ord_n + ord_q,
        })
    }

    /// Aggregate form over all good primes dividing `b_n` at once:
    /// `good(b_n) | good(b_qn)` with coprime quotient. The bad primes (2
    /// and 3 here) are outside the law's hypotheses and are stripped.
    pub fn check_ord_additivity_all(&self, b_seq: &EdsSequence, n_max: u32) -> Vec<(u32, String)> {
        let bad = self.e.bad_primes();
        let q = self.q_degree;
        let mut violations = Vec::new();
        for n in 1..=n_max.min(b_seq.len() / q) {
            let gb = strip_primes(b_seq.b(n), bad);
            let gb3 = strip_primes(b_seq.b(q * n), bad);
            if !gb3.mod_floor(&gb).is_zero() {
                violations.push((n, "quotient not integral".to_string()));
                continue;
            }
            let quotient = &gb3 / &gb;
            if !quotient.gcd(&gb).is_one() {
                violations.push((n, "valuation jumped at a prime of b_n".to_string()));
            }
        }
        violations
    }

    /// For indices coprime to the degree, every good primitive prime of
    /// `b_n` found within budget must divide `B_n` and be primitive for it
    /// (rank of apparition exactly n).
    pub fn primitive_lift_check(
        &self,
        b_seq: &EdsSequence,
        big_seq: &EdsSequence,
        n_max: u32,
        budget_per_index: u64,
        rho_seed: u64,
    ) -> LiftReport {
        let q = self.q_degree;
        let mut rows = Vec::new();
        let mut violations = Vec::new();
        for n in 1..=n_max.min(b_seq.len()).min(big_seq.len()) {
            if n % q == 0 {
                continue;
            }
            let mut budget = Budget::new(budget_per_index);
            let pp = b_seq.primitive_primes(n, &mut budget, rho_seed);
            let mut lifted = Vec::new();
            for l in &pp.good {
                let divides = big_seq.b(n).mod_floor(l).is_zero();
                let rank = big_seq.rank_of_apparition(l);
                let primitive = rank == Some(n);
                if !(divides && primitive) {
                    violations.push((n, l.to_string()));
                }
                lifted.push(LiftedPrime {
                    prime: l.to_string(),
                    divides_main_term: divides,
                    rank_in_main: rank,
                });
            }
            rows.push(LiftRow {
                n,
                factoring_complete: pp.complete,
                lifted,
            });
        }
        LiftReport { rows, violations }
    }

    /// Classification table for the two-primitive-divisor claim over an
    /// index set (callers filter to gcd(n, q) = 1).
    pub fn two_primitive_divisors_report(
        &self,
        big_seq: &EdsSequence,
        indices: &[u32],
        budget_per_index: u64,
    ) -> TwoPrimitiveReport {
        let mut rows = Vec::new();
        let mut counts = ClassCounts::default();
        for &n in indices {
            let mut budget = Budget::new(budget_per_index);
            let class = big_seq.classify_primitive(n, &mut budget);
            match class {
                PrimitiveClass::Zero => counts.zero += 1,
                PrimitiveClass::ExactlyOnePrime { .. } => counts.exactly_one += 1,
                PrimitiveClass::AtLeastTwoPrimes => counts.at_least_two += 1,
                PrimitiveClass::Unknown => counts.unknown += 1,
            }
            rows.push(TwoPrimitiveRow { n, class });
        }
        TwoPrimitiveReport { rows, counts }
    }

    /// The checkable running hypotheses: trivial torsion, one real
    /// component, descent through sigma, and `B_q > 1` (so the degree is
    /// not in the exceptional set L).
    pub fn check_hypotheses(&self, big_seq: &EdsSequence) -> HypothesesReport {
        HypothesesReport {
            torsion_trivial: self.e.torsion_trivial(),
            one_real_component: self.e.real_components() == 1,
            sign_match: self.sign_match,
            b_q_exceeds_one: big_seq.b(self.q_degree) > &BigInt::one(),
            rank_one_generator_assumed: true,
        }
    }
}

/// Ord triples for every prime up to `bound` dividing one of the values,
/// bad primes excluded.
fn witness_ords(values: &[&BigInt; 3], bad: &[BigInt], bound: u32) -> Vec<PrimeOrdTriple> {
    let mut out = Vec::new();
    for &p in crate::factor::small_primes() {
        if p > bound {
            break;
        }
        let pb = BigInt::from(p);
        if bad.contains(&pb) {
            continue;
        }
        let ords: Vec<u32> = values.iter().map(|v| ord_in(v, &pb)).collect();
        if ords.iter().any(|&o| o > 0) {
            out.push(PrimeOrdTriple {
                prime: p,
                ord_b_n: ords[0],
                ord_big_n: ords[1],
                ord_b_qn: ords[2],
            });
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct PrimeOrdTriple {
    pub prime: u32,
    pub ord_b_n: u32,
    pub ord_big_n: u32,
    pub ord_b_qn: u32,
}

#[derive(Debug, Clone, Serialize)]
pub struct DivChainRow {
    pub n: u32,
    pub left_ok: bool,
    pub right_ok: bool,
    pub witnesses: Vec<PrimeOrdTriple>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DivChainReport {
    pub degree: u32,
    pub n_max: u32,
    pub rows: Vec<DivChainRow>,
    pub violations: Vec<(u32, String)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OrdAdditivity {
    pub l: String,
    pub n: u32,
    pub ord_b_n: u32,
    pub ord_b_qn: u32,
    pub ord_q: u32,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LiftedPrime {
    pub prime: String,
    pub divides_main_term: bool,
    pub rank_in_main: Option<u32>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LiftRow {
    pub n: u32,
    pub factoring_complete: bool,
    pub lifted: Vec<LiftedPrime>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LiftReport {
    pub rows: Vec<LiftRow>,
    pub violations: Vec<(u32, String)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TwoPrimitiveRow {
    pub n: u32,
    #[serde(flatten)]
    pub class: PrimitiveClass,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ClassCounts {
    pub zero: u32,
    pub exactly_one: u32,
    pub at_least_two: u32,
    pub unknown: u32,
}

#[derive(Debug, Clone, Serialize)]
pub struct TwoPrimitiveReport {
    pub rows: Vec<TwoPrimitiveRow>,
    pub counts: ClassCounts,
}

#[derive(Debug, Clone, Serialize)]
pub struct HypothesesReport {
    pub torsion_trivial: bool,
    pub one_real_component: bool,
    pub sign_match: i8,
    pub b_q_exceeds_one: bool,
    /// `E(Q) = <Q>` (rank one, Q generating) is a trusted configuration
    /// assertion, not machine-checked here.
    pub rank_one_generator_assumed: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::parse_rational;

    fn pair() -> DescentPair {
        DescentPair::example().unwrap()
    }

    #[test]
    fn example_pair_constructs() {
        let p = pair();
        assert_eq!(p.target_curve().coefficients()[4], &BigInt::from(-4));
        assert_eq!(p.sign_match(), -1);
        assert_eq!(
            p.source_curve().bad_primes(),
            p.target_curve().bad_primes()
        );
    }

    #[test]
    fn sigma_fixtures() {
        let p = pair();
        // sigma(6, 18) = (2, -2) = -Q
        let img = p.sigma(&RatPoint::from_integers(6, 18)).unwrap();
        assert_eq!(img, RatPoint::from_integers(2, -2));
        // identity maps to identity
        assert_eq!(p.sigma(&RatPoint::Identity).unwrap(), RatPoint::Identity);
        // sigma(2Q') = sigma(-3, 9) = (5, 11) = 2 * sigma(Q')
        let img2 = p.sigma(&RatPoint::from_integers(-3, 9)).unwrap();
        assert_eq!(img2, RatPoint::from_integers(5, 11));
        let doubled = p.target_curve().add(&img, &img);
        assert_eq!(doubled, img2);
    }

    #[test]
    fn sigma_rejects_bad_input() {
        let p = pair();
        // x = 0 is the kernel x-coordinate; the affine formulas pole there
        let bad = RatPoint::affine(
            parse_rational("0/1").unwrap(),
            parse_rational("0/1").unwrap(),
        );
        assert!(matches!(p.sigma(&bad), Err(Error::SigmaPole)));
        // (6, 17) is not on E'
        assert!(matches!(
            p.sigma(&RatPoint::from_integers(6, 17)),
            Err(Error::NotOnCurve)
        ));
    }

    #[test]
    fn sigma_is_odd() {
        let p = pair();
        let q1 = RatPoint::from_integers(6, 18);
        let m = p.source_curve().neg(&q1);
        let img = p.sigma(&q1).unwrap();
        let img_m = p.sigma(&m).unwrap();
        assert_eq!(img_m, p.target_curve().neg(&img));
        // so replacing Q' by -Q' flips the stored sign
        let flipped = DescentPair::new(
            BigInt::from(108),
            BigInt::from(3),
            3,
            m,
            RatPoint::from_integers(2, 2),
        )
        .unwrap();
        assert_eq!(flipped.sign_match(), 1);
    }

    #[test]
    fn descent_failure_detected() {
        // right curve, wrong relation: 2Q' maps to 2(-Q), not to +-Q
        let err = DescentPair::new(
            BigInt::from(108),
            BigInt::from(3),
            3,
            RatPoint::from_integers(-3, 9),
            RatPoint::from_integers(2, 2),
        )
        .unwrap_err();
        assert!(matches!(err, Error::NoDescent));
    }

    #[test]
    fn sigma_homomorphism_on_small_multiples() {
        let p = pair();
        let e_prime = p.source_curve();
        let e = p.target_curve();
        let q1 = RatPoint::from_integers(6, 18);
        let mults: Vec<RatPoint> = (1..=6u64)
            .map(|k| e_prime.scalar_mul(&q1, k))
            .collect();
        for p1 in &mults {
            for p2 in &mults {
                let sum = e_prime.add(p1, p2);
                if sum.is_identity() {
                    continue;
                }
                let lhs = p.sigma(&sum).unwrap();
                let rhs = e.add(&p.sigma(p1).unwrap(), &p.sigma(p2).unwrap());
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn companion_sequence_fixtures() {
        let p = pair();
        let b = p.companion_eds(6).unwrap();
        assert_eq!(b.b(1), &BigInt::one());
        assert_eq!(b.b(2), &BigInt::one()); // 2Q' = (-3, 9)
        assert_eq!(b.b(3), &BigInt::one()); // 3Q' = (-2, -10)
        assert_eq!(b.b(4), &BigInt::from(2));
    }

    #[test]
    fn div_chain_holds_to_12() {
        let p = pair();
        let b = p.companion_eds(36).unwrap();
        let big = p.main_eds(12).unwrap();
        let report = p.check_div_chain(&b, &big, 12);
        assert!(report.violations.is_empty());
        // the 11-witness at n = 4: ord_11(b_4) = 0 <= ord_11(B_4) = 1 <=
        // ord_11(b_12) = 1
        let row4 = &report.rows[3];
        let w11 = row4.witnesses.iter().find(|w| w.prime == 11).unwrap();
        assert_eq!((w11.ord_b_n, w11.ord_big_n, w11.ord_b_qn), (0, 1, 1));
    }

    #[test]
    fn ord_additivity_fixtures() {
        let p = pair();
        let b = p.companion_eds(18).unwrap();
        // l = 5, n = 6: ord_5(b_18) = ord_5(b_6) + ord_5(3) = 1 + 0
        let r = p
            .check_ord_additivity(&b, &BigInt::from(5), 6)
            .unwrap();
        assert!(r.holds);
        assert_eq!((r.ord_b_n, r.ord_b_qn, r.ord_q), (1, 1, 0));
        // l = 3 is bad reduction: rejected
        assert!(matches!(
            p.check_ord_additivity(&b, &BigInt::from(3), 6),
            Err(Error::BadReduction(_))
        ));
        // l must divide b_n
        assert!(p.check_ord_additivity(&b, &BigInt::from(7), 6).is_err());
        assert!(p.check_ord_additivity(&b, &BigInt::from(2), 4).is_err());
        assert!(p.check_ord_additivity_all(&b, 6).is_empty());
    }

    #[test]
    fn primitive_lift_small() {
        let p = pair();
        let b = p.companion_eds(14).unwrap();
        let big = p.main_eds(14).unwrap();
        let report = p.primitive_lift_check(&b, &big, 14, 1_000_000, 1);
        assert!(report.violations.is_empty());
        // n = 4: b_4^* = 2 is bad, so nothing lifts; n = 7: b_7^* = 41
        let row7 = report.rows.iter().find(|r| r.n == 7).unwrap();
        assert!(row7.factoring_complete);
        assert_eq!(row7.lifted.len(), 1);
        assert_eq!(row7.lifted[0].prime, "41");
        assert_eq!(row7.lifted[0].rank_in_main, Some(7));
        // multiples of 3 are skipped
        assert!(report.rows.iter().all(|r| r.n % 3 != 0));
    }

    #[test]
    fn hypotheses_hold_for_example() {
        let p = pair();
        let big = p.main_eds(4).unwrap();
        let h = p.check_hypotheses(&big);
        assert!(h.torsion_trivial);
        assert!(h.one_real_component);
        assert_eq!(h.sign_match, -1);
        assert!(h.b_q_exceeds_one); // B_3 = 3
    }

    #[test]
    fn rejects_bad_family_parameters() {
        assert!(matches!(
            DescentPair::new(
                BigInt::from(100),
                BigInt::from(3),
                3,
                RatPoint::from_integers(6, 18),
                RatPoint::from_integers(2, 2)
            ),
            Err(Error::BadIsogenyParams { .. })
        ));
        assert!(DescentPair::new(
            BigInt::from(108),
            BigInt::from(3),
            2,
            RatPoint::from_integers(6, 18),
            RatPoint::from_integers(2, 2)
        )
        .is_err());
    }
}
