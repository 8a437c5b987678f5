//! Elliptic divisibility sequences: generation, primitive parts, ranks of
//! apparition, primitive-divisor classification, and the curve constants
//! that feed the prime-set construction.
//!
//! For a non-torsion point `Q` we have `nQ = (A_n/B_n^2, C_n/B_n^3)` in
//! lowest terms with `B_n > 0`. The sequence `B = (B_n)` satisfies
//! `B_n | B_m` whenever `n | m`, and for a good prime `l` dividing some
//! term, `l | B_m` iff `n_l | m` where the rank of apparition `n_l` is the
//! order of `Q` mod `l`.

use crate::curve::{CurveSpec, RatPoint};
use crate::error::{Error, Result};
use crate::factor::{self, Budget};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use std::collections::BTreeMap;

/// One sequence term: `nQ = (x_num/den_root^2, y_num/den_root^3)` with
/// `den_root > 0` and `gcd(den_root, x_num * y_num) = 1`.
#[derive(Debug, Clone)]
pub struct EdsTerm {
    pub n: u32,
    pub x_num: BigInt,
    pub den_root: BigInt,
    pub y_num: BigInt,
}

impl EdsTerm {
    fn from_point(n: u32, p: &RatPoint) -> Result<Self> {
        let (x, y) = p.coords().ok_or(Error::TorsionPoint { multiple: n })?;
        let den_root = x.denom().sqrt();
        if &(&den_root * &den_root) != x.denom() {
            // cannot happen for points on an integral model
            return Err(Error::NotOnCurve);
        }
        debug_assert_eq!(
            y.denom(),
            &(&den_root * &den_root * &den_root),
            "x- and y-denominators must share the same root at n = {n}"
        );
        Ok(EdsTerm {
            n,
            x_num: x.numer().clone(),
            den_root,
            y_num: y.numer().clone(),
        })
    }
}

/// How many distinct primitive prime divisors a term has.
///
/// The three decisive variants need no factorization: a primitive part
/// equal to 1 is `Zero`; a prime power is `ExactlyOnePrime`; anything
/// composite and not a prime power carries at least two distinct primes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "class")]
pub enum PrimitiveClass {
    Zero,
    ExactlyOnePrime { prime: String, exponent: u32 },
    AtLeastTwoPrimes,
    Unknown,
}

/// The full prefix `B_1..B_N` of a sequence together with its curve and
/// point. Term generation is sequential (each `nQ` from `(n-1)Q + Q`);
/// everything downstream is per-index.
#[derive(Debug, Clone)]
pub struct EdsSequence {
    curve: CurveSpec,
    point: RatPoint,
    terms: Vec<EdsTerm>,
}

impl EdsSequence {
    /// Generate terms 1..=n_max by repeated addition, which visits every
    /// multiple once. Torsion points are detected and rejected.
    pub fn generate(curve: &CurveSpec, q: &RatPoint, n_max: u32) -> Result<Self> {
        if !curve.on_curve(q) {
            return Err(Error::NotOnCurve);
        }
        let mut terms = Vec::with_capacity(n_max as usize);
        let mut acc = RatPoint::Identity;
        for n in 1..=n_max {
            acc = curve.add(&acc, q);
            if acc.is_identity() {
                return Err(Error::TorsionPoint { multiple: n });
            }
            terms.push(EdsTerm::from_point(n, &acc)?);
        }
        Ok(EdsSequence {
            curve: curve.clone(),
            point: q.clone(),
            terms,
        })
    }

    /// `B_n` for a single large index via double-and-add, without
    /// materialising the prefix.
    pub fn term_at(curve: &CurveSpec, q: &RatPoint, n: u64) -> Result<EdsTerm> {
        let p = curve.scalar_mul(q, n);
        if p.is_identity() {
            return Err(Error::TorsionPoint { multiple: n as u32 });
        }
        EdsTerm::from_point(n.min(u32::MAX as u64) as u32, &p)
    }

    pub fn curve(&self) -> &CurveSpec {
        &self.curve
    }

    pub fn point(&self) -> &RatPoint {
        &self.point
    }

    pub fn len(&self) -> u32 {
        self.terms.len() as u32
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term(&self, n: u32) -> &EdsTerm {
        &self.terms[(n - 1) as usize]
    }

    /// `B_n` (1-indexed).
    pub fn b(&self, n: u32) -> &BigInt {
        &self.term(n).den_root
    }

    pub fn terms(&self) -> &[EdsTerm] {
        &self.terms
    }

    /// All pairs `n | m <= n_max` with `B_n` not dividing `B_m` (expected
    /// empty).
    pub fn divisibility_violations(&self, n_max: u32) -> Vec<(u32, u32)> {
        let n_max = n_max.min(self.len());
        let mut out = Vec::new();
        for n in 1..=n_max {
            for m in (2 * n..=n_max).step_by(n as usize) {
                if !self.b(m).mod_floor(self.b(n)).is_zero() {
                    out.push((n, m));
                }
            }
        }
        out
    }

    /// The primitive part `B_n^*`: the maximal divisor of `B_n` coprime to
    /// every earlier term. Any prime shared with an earlier term divides
    /// `B_{n/p}` for some prime `p | n` (its rank divides a proper divisor
    /// of n), so stripping against those few terms suffices.
    pub fn primitive_part(&self, n: u32) -> BigInt {
        let mut x = self.b(n).clone();
        if n == 1 {
            return x;
        }
        let mut modulus = BigInt::one();
        for p in prime_divisors_u32(n) {
            modulus *= self.b(n / p);
        }
        loop {
            let g = x.gcd(&modulus);
            if g.is_one() {
                return x;
            }
            x /= g;
        }
    }

    /// Least index n with `l | B_n`, scanning the generated prefix.
    pub fn rank_of_apparition(&self, l: &BigInt) -> Option<u32> {
        (1..=self.len()).find(|&n| self.b(n).mod_floor(l).is_zero())
    }

    /// Classify the primitive part by number of distinct primitive primes.
    pub fn classify_primitive(&self, n: u32, budget: &mut Budget) -> PrimitiveClass {
        let star = self.primitive_part(n);
        if star.is_one() {
            return PrimitiveClass::Zero;
        }
        // primality and power detection cost roughly bits^2; charge bits
        if !budget.charge(star.bits()) {
            return PrimitiveClass::Unknown;
        }
        match factor::perfect_prime_power(&star) {
            Some((l, k)) => PrimitiveClass::ExactlyOnePrime {
                prime: l.to_string(),
                exponent: k,
            },
            None => PrimitiveClass::AtLeastTwoPrimes,
        }
    }

    /// Factor the primitive part and report its primes, largest first,
    /// split into good- and bad-reduction. Incomplete factorizations leave
    /// `complete = false` and the unfactored cofactor in place; the largest
    /// and second-largest slots are only trusted when complete.
    pub fn primitive_primes(&self, n: u32, budget: &mut Budget, rho_seed: u64) -> PrimitivePrimes {
        let star = self.primitive_part(n);
        let report = factor::factor(&star, budget, rho_seed);
        let complete = report.is_complete();
        let mut good: Vec<BigInt> = Vec::new();
        let mut bad: Vec<BigInt> = Vec::new();
        for (p, _) in &report.known {
            if self.curve.is_good_prime(p) {
                good.push(p.clone());
            } else {
                bad.push(p.clone());
            }
        }
        good.sort();
        bad.sort();
        let largest_good = complete.then(|| good.last().cloned()).flatten();
        let second_good = if complete && good.len() >= 2 {
            Some(good[good.len() - 2].clone())
        } else {
            None
        };
        PrimitivePrimes {
            index: n,
            primitive_part: star,
            good,
            bad,
            complete,
            cofactor: report.cofactor,
            largest_good,
            second_good,
        }
    }

    /// Constants read off the sequence prefix: the set `L` of primes with
    /// `B_l = 1`, the exponents `a_l`, the bad-prime ranks `b_p` and their
    /// maximum `b`.
    pub fn curve_constants(&self, prime_bound: u32, index_bound: u32) -> CurveConstants {
        let index_bound = index_bound.min(self.len());
        let mut l_set = Vec::new();
        let mut a_exponents = BTreeMap::new();
        for &l in factor::small_primes() {
            if l > prime_bound || l > index_bound {
                break;
            }
            if self.b(l).is_one() {
                l_set.push(l);
            }
            // a_l: least k with B_{l^k} > 1, as far as the prefix reaches
            let mut idx = l as u64;
            let mut k = 1u32;
            let mut found = None;
            while idx <= index_bound as u64 {
                if !self.b(idx as u32).is_one() {
                    found = Some(k);
                    break;
                }
                idx *= l as u64;
                k += 1;
            }
            if let Some(k) = found {
                a_exponents.insert(l, k);
            }
        }
        let mut bad_ranks = BTreeMap::new();
        for p in self.curve.bad_primes() {
            if let Some(r) = self.rank_of_apparition(p) {
                bad_ranks.insert(p.to_string(), r);
            }
        }
        let b_max = bad_ranks.values().copied().max().unwrap_or(1);
        CurveConstants {
            l_set,
            a_exponents,
            bad_ranks,
            b_max,
            prime_bound,
            index_bound,
        }
    }

    /// Valuations `ord_p(B_n)` for each bad prime, with a crude growth
    /// slope (max of ord / log2 n) for eyeballing that bad parts stay
    /// logarithmic.
    pub fn bad_prime_growth(&self, n_max: u32) -> Vec<BadPrimeGrowth> {
        let n_max = n_max.min(self.len());
        self.curve
            .bad_primes()
            .iter()
            .map(|p| {
                let ords: Vec<u32> = (1..=n_max).map(|n| ord_in(self.b(n), p)).collect();
                let max_slope = ords
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i >= 1)
                    .map(|(i, &o)| o as f64 / ((i + 1) as f64).log2())
                    .fold(0.0f64, f64::max);
                BadPrimeGrowth {
                    prime: p.to_string(),
                    ords,
                    max_slope,
                }
            })
            .collect()
    }
}

/// Result of factoring one primitive part.
#[derive(Debug, Clone, Serialize)]
pub struct PrimitivePrimes {
    pub index: u32,
    #[serde(with = "crate::certificate::bigint_string")]
    pub primitive_part: BigInt,
    #[serde(serialize_with = "crate::certificate::bigint_vec_string::serialize")]
    pub good: Vec<BigInt>,
    #[serde(serialize_with = "crate::certificate::bigint_vec_string::serialize")]
    pub bad: Vec<BigInt>,
    pub complete: bool,
    #[serde(with = "crate::certificate::bigint_string")]
    pub cofactor: BigInt,
    #[serde(serialize_with = "crate::certificate::bigint_opt_string::serialize")]
    pub largest_good: Option<BigInt>,
    #[serde(serialize_with = "crate::certificate::bigint_opt_string::serialize")]
    pub second_good: Option<BigInt>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CurveConstants {
    /// Primes l with B_l = 1 (within the scanned bounds).
    pub l_set: Vec<u32>,
    /// l -> least k with B_{l^k} > 1, where l^k fits the scanned prefix.
    pub a_exponents: BTreeMap<u32, u32>,
    /// bad prime -> least n with p | B_n.
    pub bad_ranks: BTreeMap<String, u32>,
    /// Largest of the bad-prime ranks.
    pub b_max: u32,
    pub prime_bound: u32,
    pub index_bound: u32,
}

#[derive(Debug, Clone, Serialize)]
pub struct BadPrimeGrowth {
    pub prime: String,
    pub ords: Vec<u32>,
    pub max_slope: f64,
}

pub(crate) fn ord_in(v: &BigInt, p: &BigInt) -> u32 {
    let mut v = v.clone();
    let mut e = 0;
    while !v.is_zero() && v.mod_floor(p).is_zero() {
        v /= p;
        e += 1;
    }
    e
}

/// Part of `v` supported outside `primes` (all listed primes divided out).
pub(crate) fn strip_primes(v: &BigInt, primes: &[BigInt]) -> BigInt {
    let mut v = v.abs();
    for p in primes {
        while v.mod_floor(p).is_zero() {
            v /= p;
        }
    }
    v
}

fn prime_divisors_u32(mut n: u32) -> Vec<u32> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            out.push(p);
            while n % p == 0 {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sequence(n: u32) -> EdsSequence {
        let e = CurveSpec::short(-4).unwrap();
        EdsSequence::generate(&e, &RatPoint::from_integers(2, 2), n).unwrap()
    }

    /// Brute-force primitive part: strip every prime shared with any
    /// earlier term, as in the definition.
    fn primitive_part_oracle(seq: &EdsSequence, n: u32) -> BigInt {
        let mut x = seq.b(n).clone();
        for m in 1..n {
            loop {
                let g = x.gcd(seq.b(m));
                if g.is_one() {
                    break;
                }
                x /= g;
            }
        }
        x
    }

    #[test]
    fn first_terms() {
        let seq = sequence(8);
        let expect: [i64; 8] = [1, 1, 3, 22, 61, 1635, 44239, 241868];
        for (n, e) in expect.iter().enumerate() {
            assert_eq!(seq.b(n as u32 + 1), &BigInt::from(*e), "B_{}", n + 1);
        }
    }

    #[test]
    fn companion_first_terms() {
        let e = CurveSpec::short(108).unwrap();
        let seq = EdsSequence::generate(&e, &RatPoint::from_integers(6, 18), 8).unwrap();
        let expect: [i64; 8] = [1, 1, 1, 2, 1, 5, 41, 92];
        for (n, v) in expect.iter().enumerate() {
            assert_eq!(seq.b(n as u32 + 1), &BigInt::from(*v), "b_{}", n + 1);
        }
    }

    #[test]
    fn torsion_point_rejected() {
        // (0,0) on y^2 = x^3 - x is 2-torsion
        let e = CurveSpec::new([
            BigInt::zero(),
            BigInt::zero(),
            BigInt::zero(),
            BigInt::from(-1),
            BigInt::zero(),
        ])
        .unwrap();
        let err = EdsSequence::generate(&e, &RatPoint::from_integers(0, 0), 5).unwrap_err();
        assert!(matches!(err, Error::TorsionPoint { multiple: 2 }));
    }

    #[test]
    fn divisibility_law_holds() {
        let seq = sequence(40);
        assert!(seq.divisibility_violations(40).is_empty());
        // spot checks from the definition
        assert!(seq.b(6).mod_floor(seq.b(3)).is_zero());
        assert!(seq.b(4).mod_floor(seq.b(2)).is_zero()); // 1 | 22
    }

    #[test]
    fn primitive_parts_match_bruteforce() {
        let seq = sequence(30);
        for n in 1..=30 {
            assert_eq!(
                seq.primitive_part(n),
                primitive_part_oracle(&seq, n),
                "B_{n}^*"
            );
        }
        assert_eq!(seq.primitive_part(1), BigInt::one());
        assert_eq!(seq.primitive_part(4), BigInt::from(22));
        // B_6 = 1635 = 3 * 5 * 109; B_2 = 1, B_3 = 3 strip the 3
        assert_eq!(seq.primitive_part(6), BigInt::from(545));
        for m in 1..6 {
            assert!(seq.primitive_part(6).gcd(seq.b(m)).is_one());
        }
    }

    #[test]
    fn ranks_of_apparition() {
        let seq = sequence(30);
        assert_eq!(seq.rank_of_apparition(&BigInt::from(5)), Some(6));
        assert_eq!(seq.rank_of_apparition(&BigInt::from(11)), Some(4));
        // rank equals the point order mod l for good primes
        for l in [5u32, 7, 11, 13, 17, 19, 23, 29] {
            let lb = BigInt::from(l);
            let rank = seq.rank_of_apparition(&lb).unwrap();
            let order = seq
                .curve()
                .point_order_mod_p(seq.point(), &lb)
                .unwrap();
            assert_eq!(BigInt::from(rank), order, "l = {l}");
        }
    }

    #[test]
    fn rank_apparition_law() {
        // l | B_m iff n_l | m, exhaustively over the prefix
        let seq = sequence(60);
        for l in [5u32, 7, 11, 13, 17, 19, 23] {
            let lb = BigInt::from(l);
            let rank = seq.rank_of_apparition(&lb).unwrap();
            for m in 1..=60 {
                let divides = seq.b(m).mod_floor(&lb).is_zero();
                assert_eq!(divides, m % rank == 0, "l = {l}, m = {m}");
            }
        }
    }

    #[test]
    fn classification_fixtures() {
        let seq = sequence(8);
        let mut budget = Budget::unlimited();
        assert_eq!(seq.classify_primitive(2, &mut budget), PrimitiveClass::Zero);
        assert_eq!(
            seq.classify_primitive(3, &mut budget),
            PrimitiveClass::ExactlyOnePrime {
                prime: "3".into(),
                exponent: 1
            }
        );
        assert_eq!(
            seq.classify_primitive(4, &mut budget),
            PrimitiveClass::AtLeastTwoPrimes
        );
        assert_eq!(
            seq.classify_primitive(5, &mut budget),
            PrimitiveClass::ExactlyOnePrime {
                prime: "61".into(),
                exponent: 1
            }
        );
    }

    #[test]
    fn classification_agrees_with_factorization() {
        // n stops at 22: the next primitive part is a semiprime with an
        // 18-digit least factor, minutes of rho for no extra coverage
        let seq = sequence(22);
        for n in 1..=22 {
            let class = seq.classify_primitive(n, &mut Budget::unlimited());
            let report =
                factor::factor(&seq.primitive_part(n), &mut Budget::unlimited(), 1);
            assert!(report.is_complete());
            let expected = match report.known.len() {
                0 => PrimitiveClass::Zero,
                1 => PrimitiveClass::ExactlyOnePrime {
                    prime: report.known[0].0.to_string(),
                    exponent: report.known[0].1,
                },
                _ => PrimitiveClass::AtLeastTwoPrimes,
            };
            assert_eq!(class, expected, "n = {n}");
        }
    }

    #[test]
    fn largest_primitive_primes() {
        let seq = sequence(8);
        let mut budget = Budget::unlimited();
        // B_4^* = 22 = 2 * 11; 2 is bad, so the largest good prime is 11
        let pp = seq.primitive_primes(4, &mut budget, 1);
        assert!(pp.complete);
        assert_eq!(pp.largest_good, Some(BigInt::from(11)));
        assert_eq!(pp.second_good, None);
        assert_eq!(pp.bad, vec![BigInt::from(2)]);
        // B_3^* = 3 is a bad prime: no good primitive prime at all
        let pp = seq.primitive_primes(3, &mut budget, 1);
        assert!(pp.complete);
        assert_eq!(pp.largest_good, None);
    }

    #[test]
    fn constants_fixtures() {
        let seq = sequence(30);
        let c = seq.curve_constants(97, 30);
        assert_eq!(c.l_set, vec![2]); // B_2 = 1
        assert_eq!(c.a_exponents.get(&2), Some(&2)); // B_4 = 22 > 1
        assert_eq!(c.a_exponents.get(&3), Some(&1)); // B_3 = 3 > 1
        assert_eq!(c.bad_ranks.get("2"), Some(&4));
        assert_eq!(c.bad_ranks.get("3"), Some(&3));
        assert_eq!(c.b_max, 4);
    }

    #[test]
    fn bad_prime_growth_table() {
        let seq = sequence(24);
        let rows = seq.bad_prime_growth(24);
        assert_eq!(rows.len(), 2);
        let ord2 = &rows[0];
        assert_eq!(ord2.prime, "2");
        assert_eq!(ord2.ords[1], 0); // B_2 = 1
        assert_eq!(ord2.ords[3], 1); // B_4 = 22
        let ord3 = &rows[1];
        assert_eq!(ord3.ords[2], 1); // B_3 = 3
        // divisibility forces monotonicity along doubling
        for n in 1..=12u32 {
            assert!(ord2.ords[(n - 1) as usize] <= ord2.ords[(2 * n - 1) as usize]);
        }
    }

    #[test]
    fn term_at_matches_prefix() {
        let e = CurveSpec::short(-4).unwrap();
        let q = RatPoint::from_integers(2, 2);
        let seq = sequence(20);
        for n in [1u64, 7, 13, 20] {
            let t = EdsSequence::term_at(&e, &q, n).unwrap();
            assert_eq!(&t.den_root, seq.b(n as u32));
        }
    }
}
