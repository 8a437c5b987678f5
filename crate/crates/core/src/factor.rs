//! Primality, budgeted factorization and prime-power detection for
//! arbitrary-precision integers.
//!
//! Primality is deterministic below 2^64 (Miller-Rabin with a known-complete
//! base set) and Baillie-PSW above (strong base-2 test plus a strong Lucas
//! test with Selfridge parameters; no counterexample is known, treat the
//! verdict as probabilistic). Factoring runs trial division against a shared
//! sieve and then Brent-cycle Pollard rho, all metered by an explicit work
//! budget so that hundred-digit sequence terms fail gracefully instead of
//! hanging. Given the same `(n, budget, rho_seed)` the outcome is
//! reproducible.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::OnceLock;

const SIEVE_LIMIT: u32 = 1_000_000;

/// Rho is pointless on very large operands at desk budgets (each iteration
/// costs quadratically in the size); composites above this bit size go
/// straight to the cofactor.
const RHO_OPERAND_BIT_CAP: u64 = 1024;

/// Odd primes are sieved once and shared; the slice is immutable after
/// first construction.
pub fn small_primes() -> &'static [u32] {
    static PRIMES: OnceLock<Vec<u32>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        let n = SIEVE_LIMIT as usize;
        let mut composite = vec![false; n + 1];
        let mut primes = Vec::with_capacity(80_000);
        for i in 2..=n {
            if !composite[i] {
                primes.push(i as u32);
                let mut j = i * i;
                while j <= n {
                    composite[j] = true;
                    j += i;
                }
            }
        }
        primes
    })
}

/// Work meter: one unit per trial division or per rho iteration.
#[derive(Debug, Clone)]
pub struct Budget {
    limit: u64,
    spent: u64,
}

impl Budget {
    pub fn new(limit: u64) -> Self {
        Budget { limit, spent: 0 }
    }

    pub fn unlimited() -> Self {
        Budget::new(u64::MAX)
    }

    pub fn spent(&self) -> u64 {
        self.spent
    }

    pub fn exhausted(&self) -> bool {
        self.spent >= self.limit
    }

    /// Charge `units`, saturating at the limit. Returns false once exhausted.
    pub fn charge(&mut self, units: u64) -> bool {
        self.spent = self.spent.saturating_add(units);
        self.spent < self.limit
    }

    pub fn remaining(&self) -> u64 {
        self.limit.saturating_sub(self.spent)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FactorStatus {
    Complete,
    PartialBudgetExceeded,
}

/// Outcome of a budgeted factorization. `known` holds proven prime factors;
/// whatever resisted within budget is left in `cofactor`.
#[derive(Debug, Clone, Serialize)]
pub struct FactorReport {
    #[serde(with = "crate::certificate::bigint_string")]
    pub input: BigInt,
    #[serde(serialize_with = "crate::certificate::ser_factor_list")]
    pub known: Vec<(BigInt, u32)>,
    #[serde(with = "crate::certificate::bigint_string")]
    pub cofactor: BigInt,
    pub status: FactorStatus,
}

impl FactorReport {
    pub fn is_complete(&self) -> bool {
        self.status == FactorStatus::Complete
    }

    /// All distinct prime factors found, ascending.
    pub fn primes(&self) -> Vec<BigInt> {
        self.known.iter().map(|(p, _)| p.clone()).collect()
    }

    /// Multiply the report back together; must reproduce the input.
    pub fn reassemble(&self) -> BigInt {
        let mut acc = self.cofactor.clone();
        for (p, e) in &self.known {
            acc *= p.pow(*e);
        }
        acc
    }
}

// ---------------------------------------------------------------------------
// u64 arithmetic helpers

fn mul_mod64(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod64(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod64(acc, b, m);
        }
        b = mul_mod64(b, b, m);
        e >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin for u64: the twelve-prime base set covers all
/// n < 3.3 * 10^24.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % p == 0 {
            return n == p;
        }
    }
    let d = n - 1;
    let s = d.trailing_zeros();
    let d = d >> s;
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod64(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod64(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

// ---------------------------------------------------------------------------
// Baillie-PSW for BigInt

fn strong_probable_prime(n: &BigUint, base: u32) -> bool {
    let one = BigUint::one();
    let nm1 = n - &one;
    let s = nm1.trailing_zeros().unwrap_or(0);
    let d = &nm1 >> s;
    let mut x = BigUint::from(base).modpow(&d, n);
    if x == one || x == nm1 {
        return true;
    }
    for _ in 1..s {
        x = (&x * &x) % n;
        if x == nm1 {
            return true;
        }
    }
    false
}

/// Jacobi symbol (a/n) for odd positive n.
fn jacobi(mut a: BigInt, mut n: BigInt) -> i32 {
    debug_assert!(n.is_positive() && n.is_odd());
    a = a.mod_floor(&n);
    let mut t = 1i32;
    let three = BigInt::from(3);
    let five = BigInt::from(5);
    let eight = BigInt::from(8);
    let four = BigInt::from(4);
    while !a.is_zero() {
        while a.is_even() {
            a /= 2;
            let r = n.mod_floor(&eight);
            if r == three || r == five {
                t = -t;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a.mod_floor(&four) == three && n.mod_floor(&four) == three {
            t = -t;
        }
        a = a.mod_floor(&n);
    }
    if n.is_one() {
        t
    } else {
        0
    }
}

/// Strong Lucas probable-prime test with Selfridge's parameter choice
/// (method A): first D in 5, -7, 9, -11, ... with (D/n) = -1, P = 1,
/// Q = (1 - D)/4.
fn strong_lucas_probable_prime(n: &BigUint) -> bool {
    let n_int = BigInt::from_biguint(Sign::Plus, n.clone());
    // find D
    let mut d = BigInt::from(5);
    loop {
        match jacobi(d.clone(), n_int.clone()) {
            -1 => break,
            0 => {
                // shares a factor with n unless |D| = n
                if d.abs() != n_int {
                    return false;
                }
            }
            _ => {}
        }
        d = if d.is_positive() {
            -(&d + BigInt::from(2))
        } else {
            -(&d - BigInt::from(2))
        };
        // A perfect square never reaches (D/n) = -1; the caller screens
        // squares before calling us, this is a safety stop.
        if d.abs() > BigInt::from(1_000_000) {
            return false;
        }
    }
    let q: BigInt = (BigInt::one() - &d) / 4;

    // n + 1 = t * 2^s with t odd
    let np1 = n + 1u32;
    let s = np1.trailing_zeros().unwrap_or(0);
    let t = &np1 >> s;

    // Lucas sequences U_t, V_t by binary ladder on (U, V, Q^k)
    let modn = |x: &BigInt| -> BigInt { x.mod_floor(&n_int) };
    let half_mod = |x: &BigInt| -> BigInt {
        // division by 2 mod odd n
        let x = modn(x);
        if x.is_even() {
            x / 2
        } else {
            (x + &n_int) / 2
        }
    };
    let mut u = BigInt::one();
    let mut v = BigInt::one(); // P = 1
    let mut qk = modn(&q);
    let bits = t.bits();
    for i in (0..bits - 1).rev() {
        // double: U_{2k} = U_k V_k, V_{2k} = V_k^2 - 2 Q^k
        u = modn(&(&u * &v));
        v = modn(&(&v * &v - 2 * &qk));
        qk = modn(&(&qk * &qk));
        if (&t >> i) & BigUint::one() == BigUint::one() {
            // increment: U_{k+1} = (U_k + V_k)/2, V_{k+1} = (D U_k + V_k)/2
            let u1 = half_mod(&(&u + &v));
            let v1 = half_mod(&(&d * &u + &v));
            u = u1;
            v = v1;
            qk = modn(&(&qk * &q));
        }
    }

    if u.is_zero() || v.is_zero() {
        return true;
    }
    for _ in 0..s.saturating_sub(1) {
        v = modn(&(&v * &v - 2 * &qk));
        if v.is_zero() {
            return true;
        }
        qk = modn(&(&qk * &qk));
    }
    false
}

fn is_perfect_square(n: &BigUint) -> bool {
    let r = n.sqrt();
    &r * &r == *n
}

/// Primality test: deterministic below 2^64, Baillie-PSW above.
pub fn is_prime(n: &BigInt) -> bool {
    if !n.is_positive() {
        return false;
    }
    let n = n.magnitude();
    if let Some(v) = n.to_u64() {
        return is_prime_u64(v);
    }
    for &p in &small_primes()[..256] {
        if (n % p).is_zero() {
            return false;
        }
    }
    if !strong_probable_prime(n, 2) {
        return false;
    }
    if is_perfect_square(n) {
        return false;
    }
    strong_lucas_probable_prime(n)
}

// ---------------------------------------------------------------------------
// Perfect prime powers

/// Decompose `n = l^k` with `l` prime, `k >= 1`, if such a form exists.
/// Only prime exponents up to log2(n) need root extraction, and a k-th
/// power residue filter mod a few fixed primes rejects almost every
/// exponent before the (expensive, on huge inputs) exact root.
pub fn perfect_prime_power(n: &BigInt) -> Option<(BigInt, u32)> {
    if n < &BigInt::from(2) {
        return None;
    }
    if is_prime(n) {
        return Some((n.clone(), 1));
    }
    let bits = n.bits() as u32;
    // fixed witness moduli with varied q - 1 factorizations
    const WITNESS_PRIMES: [u64; 12] = [
        65537, 65539, 65543, 65551, 65557, 65563, 65579, 65581, 65587, 65599, 65609, 65617,
    ];
    let residues: Vec<(u64, u64)> = WITNESS_PRIMES
        .iter()
        .map(|&q| (q, (n.magnitude() % q).to_u64().unwrap()))
        .collect();
    for &k in small_primes() {
        if k > bits {
            break;
        }
        // n = l^k forces n to be a k-th power residue mod every q
        let plausible = residues.iter().all(|&(q, r)| {
            let d = gcd_u64(k as u64, q - 1);
            d == 1 || r == 0 || pow_mod64(r, (q - 1) / d, q) == 1
        });
        if !plausible {
            continue;
        }
        let root = n.nth_root(k);
        if root.pow(k) == *n {
            // n = root^k; recurse in case root is itself a power
            if let Some((l, j)) = perfect_prime_power(&root) {
                return Some((l, j * k));
            }
            return None; // root composite and not a prime power
        }
    }
    None
}

fn gcd_u64(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd_u64(b, a % b)
    }
}

// ---------------------------------------------------------------------------
// Pollard rho (Brent)

/// One Brent-cycle rho run with polynomial x^2 + c. Returns a non-trivial
/// factor if found within the budget. `n` must be odd, composite, not a
/// perfect power, and coprime to small primes.
fn rho_brent(n: &BigUint, c: u64, budget: &mut Budget) -> Option<BigUint> {
    let one = BigUint::one();
    let cbig = BigUint::from(c);
    let f = |x: &BigUint| (x * x + &cbig) % n;
    let mut y = BigUint::from(2u32);
    let mut r: u64 = 1;
    let mut q = one.clone();
    loop {
        let x = y.clone();
        for _ in 0..r {
            y = f(&y);
        }
        let mut k: u64 = 0;
        while k < r {
            let mut ys = y.clone();
            let m = 128.min(r - k);
            if !budget.charge(m) {
                return None;
            }
            for _ in 0..m {
                y = f(&y);
                let diff = if y > x { &y - &x } else { &x - &y };
                q = (q * diff) % n;
            }
            let g = q.gcd(n);
            if !g.is_one() {
                if g != *n {
                    return Some(g);
                }
                // backtrack one step at a time
                loop {
                    ys = f(&ys);
                    let diff = if ys > x { &ys - &x } else { &x - &ys };
                    let g = diff.gcd(n);
                    if !g.is_one() {
                        return (g != *n).then_some(g);
                    }
                    if !budget.charge(1) {
                        return None;
                    }
                }
            }
            k += m;
        }
        r *= 2;
    }
}

fn push_factor(map: &mut BTreeMap<BigInt, u32>, p: BigInt, e: u32) {
    *map.entry(p).or_insert(0) += e;
}

/// Fully deterministic budgeted factorization.
///
/// Trial division first (charged per division), then recursive splitting
/// with Brent rho seeded from `rho_seed`; composite pieces that resist the
/// budget are multiplied into the cofactor and the status is marked
/// `PartialBudgetExceeded`.
pub fn factor(n: &BigInt, budget: &mut Budget, rho_seed: u64) -> FactorReport {
    assert!(n.is_positive(), "factor() expects n >= 1");
    let input = n.clone();
    let mut known = BTreeMap::new();
    let mut rest = n.magnitude().clone();
    let one = BigUint::one();

    for &p in small_primes() {
        if rest.is_one() {
            break;
        }
        if !budget.charge(1) {
            break;
        }
        let pb = BigUint::from(p);
        if &pb * &pb > rest {
            // remaining part is prime
            if !rest.is_one() {
                push_factor(&mut known, BigInt::from(rest.clone()), 1);
                rest = one.clone();
            }
            break;
        }
        while (&rest % p).is_zero() {
            rest /= p;
            push_factor(&mut known, BigInt::from(p), 1);
        }
    }

    // recursive rho splitting on whatever survived trial division
    let mut stack = Vec::new();
    if !rest.is_one() {
        stack.push(rest);
    }
    let mut unfactored = BigUint::one();
    while let Some(m) = stack.pop() {
        if m.is_one() {
            continue;
        }
        let m_int = BigInt::from(m.clone());
        if is_prime(&m_int) {
            push_factor(&mut known, m_int, 1);
            continue;
        }
        if let Some((l, k)) = perfect_prime_power(&m_int) {
            push_factor(&mut known, l, k);
            continue;
        }
        if budget.exhausted() || m.bits() > RHO_OPERAND_BIT_CAP {
            unfactored *= &m;
            continue;
        }
        let mut split = None;
        for attempt in 0..64u64 {
            let c = rho_seed
                .wrapping_mul(0x9e37_79b9_7f4a_7c15)
                .wrapping_add(attempt)
                % 0xffff
                + 1;
            if let Some(g) = rho_brent(&m, c, budget) {
                split = Some(g);
                break;
            }
            if budget.exhausted() {
                break;
            }
        }
        match split {
            Some(g) => {
                stack.push(&m / &g);
                stack.push(g);
            }
            None => unfactored *= &m,
        }
    }

    let status = if unfactored.is_one() {
        FactorStatus::Complete
    } else {
        FactorStatus::PartialBudgetExceeded
    };
    FactorReport {
        input,
        known: known.into_iter().collect(),
        cofactor: BigInt::from(unfactored),
        status,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::str::FromStr;

    fn big(s: &str) -> BigInt {
        BigInt::from_str(s).unwrap()
    }

    /// Trial-division oracle, independent of the budgeted path.
    fn trial_factor_oracle(mut n: u64) -> Vec<(u64, u32)> {
        let mut out = Vec::new();
        let mut p = 2u64;
        while p * p <= n {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            if e > 0 {
                out.push((p, e));
            }
            p += 1;
        }
        if n > 1 {
            out.push((n, 1));
        }
        out
    }

    #[test]
    fn primality_small_fixtures() {
        assert!(is_prime(&big("2")));
        assert!(!is_prime(&big("432"))); // even
        assert!(!is_prime(&big("1090"))); // 2 * 5 * 109 by trial division
        assert_eq!(trial_factor_oracle(1090), vec![(2, 1), (5, 1), (109, 1)]);
        assert!(!is_prime(&big("1")));
        assert!(!is_prime(&big("0")));
        assert!(!is_prime(&big("-7")));
    }

    #[test]
    fn primality_agrees_with_sieve() {
        let primes: std::collections::HashSet<u64> =
            small_primes().iter().map(|&p| p as u64).collect();
        for n in 0..5_000u64 {
            assert_eq!(is_prime(&BigInt::from(n)), primes.contains(&n), "n = {n}");
        }
    }

    #[test]
    fn primality_large() {
        // 2^127 - 1 is a Mersenne prime; 2^128 + 1 = 59649589127497217 * ...
        let m127 = (BigInt::one() << 127) - 1;
        assert!(is_prime(&m127));
        let f7 = (BigInt::one() << 128) + 1;
        assert!(!is_prime(&f7));
        // strong pseudoprime to base 2 must be rejected by the Lucas stage
        assert!(!is_prime(&big("2047"))); // 23 * 89
        assert!(!is_prime(&big("3215031751"))); // spsp(2,3,5,7)
    }

    #[test]
    fn factor_fixtures() {
        let mut b = Budget::unlimited();
        let r = factor(&big("6912"), &mut b, 1);
        assert_eq!(r.known, vec![(big("2"), 8), (big("3"), 3)]);
        assert!(r.is_complete());

        let r = factor(&big("1"), &mut Budget::unlimited(), 1);
        assert!(r.known.is_empty() && r.is_complete());

        let r = factor(&big("22"), &mut Budget::unlimited(), 1);
        assert_eq!(r.known, vec![(big("2"), 1), (big("11"), 1)]);
        assert!(r.is_complete());
    }

    #[test]
    fn factor_reassembles_and_matches_oracle() {
        let mut x = 987_654_321u64;
        for _ in 0..200 {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let n = x % 1_000_000_000 + 1;
            let r = factor(&BigInt::from(n), &mut Budget::unlimited(), 7);
            assert!(r.is_complete(), "n = {n}");
            assert_eq!(r.reassemble(), BigInt::from(n));
            let oracle: Vec<(BigInt, u32)> = trial_factor_oracle(n)
                .into_iter()
                .map(|(p, e)| (BigInt::from(p), e))
                .collect();
            assert_eq!(r.known, oracle, "n = {n}");
        }
    }

    #[test]
    fn factor_respects_budget() {
        // a 58-digit semiprime with two 29-digit prime factors: hopeless for
        // rho under a small budget
        let p = big("35742549198872617291353508656626642567"); // prime (Bell prime)
        let n = &p * &p + 4; // just a big composite-ish number; force partial
        let mut budget = Budget::new(2_000);
        let r = factor(&n, &mut budget, 1);
        assert_eq!(r.reassemble(), n);
        if !r.is_complete() {
            assert!(r.cofactor > BigInt::one());
        }
    }

    #[test]
    fn factor_deterministic() {
        let n = big("340282366920938463463374607431768211457"); // 2^128 + 1
        let a = factor(&n, &mut Budget::new(500_000), 42);
        let b = factor(&n, &mut Budget::new(500_000), 42);
        assert_eq!(a.known, b.known);
        assert_eq!(a.cofactor, b.cofactor);
        assert_eq!(a.status, b.status);
    }

    #[test]
    fn prime_power_fixtures() {
        assert_eq!(perfect_prime_power(&big("27")), Some((big("3"), 3)));
        assert_eq!(perfect_prime_power(&big("22")), None);
        assert_eq!(perfect_prime_power(&big("6912")), None); // 2^8 * 3^3
        assert_eq!(perfect_prime_power(&big("1024")), Some((big("2"), 10)));
        assert_eq!(perfect_prime_power(&big("7")), Some((big("7"), 1)));
        assert_eq!(perfect_prime_power(&big("36")), None); // 6^2
        assert_eq!(perfect_prime_power(&big("1")), None);
    }

    #[test]
    fn power_witness_moduli_are_prime() {
        // the residue filter is only sound with prime moduli
        for q in [
            65537u64, 65539, 65543, 65551, 65557, 65563, 65579, 65581, 65587, 65599, 65609, 65617,
        ] {
            assert!(is_prime_u64(q), "{q}");
        }
    }

    #[test]
    fn prime_power_agrees_with_factorization() {
        for n in 2..100_000u64 {
            let n_big = BigInt::from(n);
            let via_power = perfect_prime_power(&n_big);
            let oracle = trial_factor_oracle(n);
            let expected = (oracle.len() == 1).then(|| (BigInt::from(oracle[0].0), oracle[0].1));
            assert_eq!(via_power, expected, "n = {n}");
        }
    }
}
