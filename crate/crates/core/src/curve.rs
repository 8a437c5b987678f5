//! Exact arithmetic on elliptic curves over Q and over prime fields.
//!
//! Curves are given by integral Weierstrass coefficients
//! `y^2 + a1 xy + a3 y = x^3 + a2 x^2 + a4 x + a6`. The rational group law
//! works with exact `BigRational` coordinates; reduction mod p and point
//! counting run in u64 arithmetic (primes up to 2^62). Point counting is an
//! exhaustive character sum below 2^16 and baby-step giant-step order
//! determination in the Hasse window above.

use crate::error::{Error, Result};
use crate::factor::{self, Budget};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::HashMap;

/// An elliptic curve over Q with integral coefficients, its discriminant and
/// the (complete) set of bad-reduction primes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurveSpec {
    a1: BigInt,
    a2: BigInt,
    a3: BigInt,
    a4: BigInt,
    a6: BigInt,
    discriminant: BigInt,
    bad_primes: Vec<BigInt>,
}

/// A rational point: the identity, or exact affine coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RatPoint {
    Identity,
    Affine { x: BigRational, y: BigRational },
}

impl RatPoint {
    pub fn affine(x: BigRational, y: BigRational) -> Self {
        RatPoint::Affine { x, y }
    }

    pub fn from_integers(x: i64, y: i64) -> Self {
        RatPoint::Affine {
            x: BigRational::from_integer(x.into()),
            y: BigRational::from_integer(y.into()),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, RatPoint::Identity)
    }

    pub fn coords(&self) -> Option<(&BigRational, &BigRational)> {
        match self {
            RatPoint::Identity => None,
            RatPoint::Affine { x, y } => Some((x, y)),
        }
    }
}

/// A point on the reduced curve mod p.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModPoint {
    Identity,
    Affine { x: u64, y: u64 },
}

impl CurveSpec {
    /// Build a curve from `[a1, a2, a3, a4, a6]`, rejecting singular models.
    /// The discriminant is factored completely so `bad_primes` is exact; a
    /// discriminant that resists factoring is an error rather than a guess.
    pub fn new(a: [BigInt; 5]) -> Result<Self> {
        let [a1, a2, a3, a4, a6] = a;
        let b2 = &a1 * &a1 + &a2 * 4i32;
        let b4 = &a4 * 2i32 + &a1 * &a3;
        let b6 = &a3 * &a3 + &a6 * 4i32;
        let b8 = &a1 * &a1 * &a6 + &a2 * &a6 * 4i32 - &a1 * &a3 * &a4 + &a2 * &a3 * &a3 - &a4 * &a4;
        let discriminant = -(&b2 * &b2 * &b8) - (&b4 * &b4 * &b4) * 8i32 - (&b6 * &b6) * 27i32
            + (&b2 * &b4 * &b6) * 9i32;
        if discriminant.is_zero() {
            return Err(Error::SingularCurve);
        }
        let report = factor::factor(&discriminant.abs(), &mut Budget::new(50_000_000), 1);
        if !report.is_complete() {
            return Err(Error::DiscriminantNotFactored(discriminant));
        }
        let bad_primes = report.primes();
        Ok(CurveSpec {
            a1,
            a2,
            a3,
            a4,
            a6,
            discriminant,
            bad_primes,
        })
    }

    /// Short-form constructor for `y^2 = x^3 + a6`.
    pub fn short(a6: i64) -> Result<Self> {
        Self::new([
            BigInt::zero(),
            BigInt::zero(),
            BigInt::zero(),
            BigInt::zero(),
            BigInt::from(a6),
        ])
    }

    pub fn coefficients(&self) -> [&BigInt; 5] {
        [&self.a1, &self.a2, &self.a3, &self.a4, &self.a6]
    }

    pub fn discriminant(&self) -> &BigInt {
        &self.discriminant
    }

    pub fn bad_primes(&self) -> &[BigInt] {
        &self.bad_primes
    }

    pub fn is_good_prime(&self, p: &BigInt) -> bool {
        !self.bad_primes.contains(p)
    }

    pub fn is_short_form(&self) -> bool {
        self.a1.is_zero() && self.a2.is_zero() && self.a3.is_zero() && self.a4.is_zero()
    }

    /// Exact membership test for the affine equation; the identity is on
    /// every curve.
    pub fn on_curve(&self, p: &RatPoint) -> bool {
        let (x, y) = match p.coords() {
            None => return true,
            Some(c) => c,
        };
        let a1 = BigRational::from_integer(self.a1.clone());
        let a2 = BigRational::from_integer(self.a2.clone());
        let a3 = BigRational::from_integer(self.a3.clone());
        let a4 = BigRational::from_integer(self.a4.clone());
        let a6 = BigRational::from_integer(self.a6.clone());
        let lhs = y * y + &a1 * x * y + &a3 * y;
        let rhs = x * x * x + &a2 * x * x + &a4 * x + &a6;
        lhs == rhs
    }

    /// Group negation: `-(x, y) = (x, -y - a1 x - a3)`.
    pub fn neg(&self, p: &RatPoint) -> RatPoint {
        match p.coords() {
            None => RatPoint::Identity,
            Some((x, y)) => {
                let a1 = BigRational::from_integer(self.a1.clone());
                let a3 = BigRational::from_integer(self.a3.clone());
                RatPoint::Affine {
                    x: x.clone(),
                    y: -y - a1 * x - a3,
                }
            }
        }
    }

    /// Chord-and-tangent addition. Doubling a 2-torsion point yields the
    /// identity, never an error.
    pub fn add(&self, p1: &RatPoint, p2: &RatPoint) -> RatPoint {
        let (x1, y1) = match p1.coords() {
            None => return p2.clone(),
            Some(c) => c,
        };
        let (x2, y2) = match p2.coords() {
            None => return p1.clone(),
            Some(c) => c,
        };
        let a1 = BigRational::from_integer(self.a1.clone());
        let a2 = BigRational::from_integer(self.a2.clone());
        let a3 = BigRational::from_integer(self.a3.clone());
        let a4 = BigRational::from_integer(self.a4.clone());

        let lambda = if x1 == x2 {
            // vertical line (P2 = -P1) gives the identity
            if (y1 + y2 + &a1 * x1 + &a3).is_zero() {
                return RatPoint::Identity;
            }
            let num = BigRational::from_integer(3.into()) * x1 * x1
                + BigRational::from_integer(2.into()) * &a2 * x1
                + &a4
                - &a1 * y1;
            let den = BigRational::from_integer(2.into()) * y1 + &a1 * x1 + &a3;
            num / den
        } else {
            (y2 - y1) / (x2 - x1)
        };
        let x3 = &lambda * &lambda + &a1 * &lambda - &a2 - x1 - x2;
        let y3 = lambda * (x1 - &x3) - y1 - a1 * &x3 - a3;
        RatPoint::Affine { x: x3, y: y3 }
    }

    /// `n`-th multiple by double-and-add; `n >= 1`.
    pub fn scalar_mul(&self, p: &RatPoint, n: u64) -> RatPoint {
        assert!(n >= 1, "scalar_mul expects a positive multiplier");
        let mut acc = RatPoint::Identity;
        let mut base = p.clone();
        let mut k = n;
        while k > 0 {
            if k & 1 == 1 {
                acc = self.add(&acc, &base);
            }
            k >>= 1;
            if k > 0 {
                base = self.add(&base, &base);
            }
        }
        acc
    }

    /// Reduce a rational point mod a good prime. A point whose x-denominator
    /// is divisible by p reduces to the identity.
    pub fn reduce_point(&self, p: &RatPoint, modulus: &BigInt) -> Result<ModPoint> {
        let m = self.mod_curve(modulus)?;
        let (x, y) = match p.coords() {
            None => return Ok(ModPoint::Identity),
            Some(c) => c,
        };
        let pm = modulus;
        if x.denom().mod_floor(pm).is_zero() {
            return Ok(ModPoint::Identity);
        }
        let xm = mod_reduce_rational(x, pm, m.p);
        let ym = mod_reduce_rational(y, pm, m.p);
        Ok(ModPoint::Affine { x: xm, y: ym })
    }

    fn mod_curve(&self, modulus: &BigInt) -> Result<ModCurve> {
        if !self.is_good_prime(modulus) {
            return Err(Error::BadReduction(modulus.clone()));
        }
        let p = modulus
            .to_u64()
            .filter(|&p| p < (1 << 40))
            .ok_or_else(|| Error::PrimeTooLarge(modulus.clone()))?;
        let red = |v: &BigInt| -> u64 { v.mod_floor(modulus).to_u64().unwrap() };
        Ok(ModCurve {
            p,
            a1: red(&self.a1),
            a2: red(&self.a2),
            a3: red(&self.a3),
            a4: red(&self.a4),
            a6: red(&self.a6),
        })
    }

    /// `|E(F_p)|` for a good prime p.
    pub fn group_order_mod_p(&self, modulus: &BigInt) -> Result<BigInt> {
        let m = self.mod_curve(modulus)?;
        Ok(BigInt::from(m.group_order()?))
    }

    /// Order of `Q mod p` in `E(F_p)`.
    pub fn point_order_mod_p(&self, q: &RatPoint, modulus: &BigInt) -> Result<BigInt> {
        let m = self.mod_curve(modulus)?;
        let pt = match self.reduce_point(q, modulus)? {
            ModPoint::Identity => return Ok(BigInt::one()),
            pt => pt,
        };
        Ok(BigInt::from(m.point_order(pt)?))
    }

    /// Lutz-Nagell candidate scan: true iff no nontrivial torsion point
    /// exists. Works on the integral model `Y^2 = X^3 - 27 c4 X - 54 c6`
    /// (isomorphic over Q), whose candidate torsion points have integer
    /// coordinates with `Y = 0` or `Y^2 | disc`.
    pub fn torsion_trivial(&self) -> bool {
        let b2 = &self.a1 * &self.a1 + &self.a2 * 4i32;
        let b4 = &self.a4 * 2i32 + &self.a1 * &self.a3;
        let b6 = &self.a3 * &self.a3 + &self.a6 * 4i32;
        let c4 = &b2 * &b2 - &b4 * 24i32;
        let c6 = -(&b2 * &b2 * &b2) + &b2 * &b4 * 36i32 - &b6 * 216i32;
        let a_coef = &c4 * -27i32;
        let b_coef = &c6 * -54i32;
        // disc of Y^2 = X^3 + AX + B up to sign: 4A^3 + 27B^2 = 2^12 3^12 disc(E)
        let disc = ((&a_coef * &a_coef * &a_coef) * 4i32 + (&b_coef * &b_coef) * 27i32).abs();
        debug_assert!(!disc.is_zero());

        let model = TorsionModel {
            a: a_coef,
            b: b_coef,
        };

        // y = 0: integer roots of the cubic are 2-torsion
        if !model.integer_roots_of_shifted(&BigInt::zero()).is_empty() {
            return false;
        }

        // enumerate y with y^2 | disc from the prime factorization of disc
        let report = factor::factor(&disc, &mut Budget::new(50_000_000), 1);
        debug_assert!(report.is_complete());
        let mut ys = vec![BigInt::one()];
        for (prime, e) in &report.known {
            let mut next = Vec::new();
            for y in &ys {
                let mut pk = BigInt::one();
                for _ in 0..=(e / 2) {
                    next.push(y * &pk);
                    pk *= prime;
                }
            }
            ys = next;
        }
        ys.sort();
        ys.dedup();

        for y in &ys {
            let y2 = y * y;
            for x in model.integer_roots_of_shifted(&y2) {
                let p = RatPoint::Affine {
                    x: BigRational::from_integer(x),
                    y: BigRational::from_integer(y.clone()),
                };
                if model.is_torsion(&p) {
                    return false;
                }
            }
        }
        true
    }

    /// 1 real component when the discriminant is negative, 2 otherwise.
    pub fn real_components(&self) -> u8 {
        if self.discriminant.is_negative() {
            1
        } else {
            2
        }
    }
}

/// Helper model `Y^2 = X^3 + aX + b` used only by the torsion scan.
struct TorsionModel {
    a: BigInt,
    b: BigInt,
}

impl TorsionModel {
    /// Integer roots of `x^3 + a x + (b - y2) = 0`, located by rounding the
    /// real roots (no factorization of the constant term needed).
    fn integer_roots_of_shifted(&self, y2: &BigInt) -> Vec<BigInt> {
        let c = &self.b - y2;
        let af = bigint_to_f64(&self.a);
        let cf = bigint_to_f64(&c);
        let mut out = Vec::new();
        let mut candidates = Vec::new();
        // real roots of x^3 + af x + cf by Newton from coarse seeds
        for seed in [-1.0f64, 0.0, 1.0] {
            let scale = cf.abs().max(af.abs()).max(1.0).powf(1.0 / 3.0);
            let mut x = seed * (scale + 1.0);
            for _ in 0..200 {
                let f = x * x * x + af * x + cf;
                let d = 3.0 * x * x + af;
                if d.abs() < 1e-12 {
                    x += 0.5;
                    continue;
                }
                let step = f / d;
                x -= step;
                if step.abs() < 1e-9 * (1.0 + x.abs()) {
                    break;
                }
            }
            candidates.push(x);
        }
        for x in candidates {
            if !x.is_finite() {
                continue;
            }
            let near = x.round() as i64;
            for dx in -2..=2i64 {
                let cand = BigInt::from(near + dx);
                if &cand * &cand * &cand + &self.a * &cand + &self.b == *y2 {
                    out.push(cand);
                }
            }
        }
        out.sort();
        out.dedup();
        out
    }

    fn add(&self, p1: &RatPoint, p2: &RatPoint) -> RatPoint {
        let (x1, y1) = match p1.coords() {
            None => return p2.clone(),
            Some(c) => c,
        };
        let (x2, y2) = match p2.coords() {
            None => return p1.clone(),
            Some(c) => c,
        };
        let lambda = if x1 == x2 {
            if (y1 + y2).is_zero() {
                return RatPoint::Identity;
            }
            (BigRational::from_integer(3.into()) * x1 * x1
                + BigRational::from_integer(self.a.clone()))
                / (BigRational::from_integer(2.into()) * y1)
        } else {
            (y2 - y1) / (x2 - x1)
        };
        let x3 = &lambda * &lambda - x1 - x2;
        let y3 = lambda * (x1 - &x3) - y1;
        RatPoint::Affine { x: x3, y: y3 }
    }

    /// A candidate is torsion iff some multiple up to 12 (Mazur's bound) is
    /// the identity.
    fn is_torsion(&self, p: &RatPoint) -> bool {
        let mut acc = p.clone();
        for _ in 1..=12 {
            if acc.is_identity() {
                return true;
            }
            // leaving integrality means the point cannot be torsion
            if let Some((x, y)) = acc.coords() {
                if !x.is_integer() || !y.is_integer() {
                    return false;
                }
            }
            acc = self.add(&acc, p);
        }
        acc.is_identity()
    }
}

fn bigint_to_f64(v: &BigInt) -> f64 {
    v.to_f64().unwrap_or(if v.is_negative() {
        f64::NEG_INFINITY
    } else {
        f64::INFINITY
    })
}

fn mod_reduce_rational(x: &BigRational, modulus: &BigInt, p: u64) -> u64 {
    let num = x.numer().mod_floor(modulus).to_u64().unwrap();
    let den = x.denom().mod_floor(modulus).to_u64().unwrap();
    mul_mod(num, inv_mod(den, p), p)
}

// ---------------------------------------------------------------------------
// arithmetic on the reduced curve

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    acc
}

fn inv_mod(a: u64, p: u64) -> u64 {
    // p prime
    pow_mod(a, p - 2, p)
}

#[derive(Debug, Clone, Copy)]
struct ModCurve {
    p: u64,
    a1: u64,
    a2: u64,
    a3: u64,
    a4: u64,
    a6: u64,
}

impl ModCurve {
    fn neg(&self, pt: ModPoint) -> ModPoint {
        match pt {
            ModPoint::Identity => ModPoint::Identity,
            ModPoint::Affine { x, y } => {
                let p = self.p;
                let y2 = (p - y + p - mul_mod(self.a1, x, p) + p - self.a3) % p;
                ModPoint::Affine { x, y: y2 }
            }
        }
    }

    fn add(&self, p1: ModPoint, p2: ModPoint) -> ModPoint {
        let p = self.p;
        let add3 = |a: u64, b: u64, c: u64| -> u64 {
            ((a as u128 + b as u128 + c as u128) % p as u128) as u64
        };
        let sub = |a: u64, b: u64| -> u64 { (a + p - b % p) % p };
        let (x1, y1) = match p1 {
            ModPoint::Identity => return p2,
            ModPoint::Affine { x, y } => (x, y),
        };
        let (x2, y2) = match p2 {
            ModPoint::Identity => return p1,
            ModPoint::Affine { x, y } => (x, y),
        };
        let lambda;
        if x1 == x2 {
            if add3(y1, y2, add3(mul_mod(self.a1, x1, p), self.a3, 0)) == 0 {
                return ModPoint::Identity;
            }
            let x1sq = mul_mod(x1, x1, p);
            let num = sub(
                add3(mul_mod(3, x1sq, p), mul_mod(2, mul_mod(self.a2, x1, p), p), self.a4),
                mul_mod(self.a1, y1, p),
            );
            let den = add3(mul_mod(2, y1, p), mul_mod(self.a1, x1, p), self.a3);
            lambda = mul_mod(num, inv_mod(den, p), p);
        } else {
            lambda = mul_mod(sub(y2, y1), inv_mod(sub(x2, x1), p), p);
        }
        let x3 = sub(
            sub(add3(mul_mod(lambda, lambda, p), mul_mod(self.a1, lambda, p), 0), self.a2),
            add3(x1, x2, 0),
        );
        let y3 = sub(
            sub(mul_mod(lambda, sub(x1, x3), p), y1),
            add3(mul_mod(self.a1, x3, p), self.a3, 0),
        );
        ModPoint::Affine { x: x3, y: y3 }
    }

    fn scalar_mul(&self, pt: ModPoint, n: u64) -> ModPoint {
        let mut acc = ModPoint::Identity;
        let mut base = pt;
        let mut k = n;
        while k > 0 {
            if k & 1 == 1 {
                acc = self.add(acc, base);
            }
            k >>= 1;
            if k > 0 {
                base = self.add(base, base);
            }
        }
        acc
    }

    /// Exhaustive group order for p < 2^16: 1 + sum over x of
    /// (number of y solving the reduced equation).
    fn group_order_exhaustive(&self) -> u64 {
        let p = self.p;
        let mut count = 1u64; // identity
        if p == 2 {
            for x in 0..2u64 {
                for y in 0..2u64 {
                    let lhs = (y * y + self.a1 * x * y + self.a3 * y) % p;
                    let rhs = (x * x * x + self.a2 * x * x + self.a4 * x + self.a6) % p;
                    if lhs == rhs {
                        count += 1;
                    }
                }
            }
            return count;
        }
        // complete the square: (2y + a1 x + a3)^2 = 4x^3 + b2 x^2 + 2b4 x + b6
        let b2 = (mul_mod(self.a1, self.a1, p) + 4 * self.a2) % p;
        let b4 = (2 * self.a4 + mul_mod(self.a1, self.a3, p)) % p;
        let b6 = (mul_mod(self.a3, self.a3, p) + 4 * self.a6) % p;
        let mut is_square = vec![false; p as usize];
        for y in 0..p {
            is_square[mul_mod(y, y, p) as usize] = true;
        }
        for x in 0..p {
            let x2 = mul_mod(x, x, p);
            let rhs = (4 * mul_mod(x2, x, p) % p + mul_mod(b2, x2, p) + 2 * mul_mod(b4, x, p) % p
                + b6)
                % p;
            if rhs == 0 {
                count += 1;
            } else if is_square[rhs as usize] {
                count += 2;
            }
        }
        count
    }

    /// Order of a point by baby-step giant-step over the Hasse window, then
    /// reduction to the minimal multiple.
    fn point_order(&self, pt: ModPoint) -> Result<u64> {
        if matches!(pt, ModPoint::Identity) {
            return Ok(1);
        }
        let p = self.p;
        if p < (1 << 16) {
            // walk the cyclic subgroup directly
            let bound = p + 1 + 2 * ((p as f64).sqrt() as u64) + 4;
            let mut acc = pt;
            let mut k = 1u64;
            while !matches!(acc, ModPoint::Identity) {
                acc = self.add(acc, pt);
                k += 1;
                assert!(k <= bound, "point order exceeds the Hasse bound");
            }
            return Ok(k);
        }
        let sqrt_p = (p as f64).sqrt();
        let width = (4.0 * sqrt_p) as u64 + 4;
        let lo = (p + 1).saturating_sub((2.0 * sqrt_p) as u64 + 2);
        let m = (width as f64).sqrt() as u64 + 1;

        // baby steps: j * pt for j in [0, m)
        let mut table: HashMap<(u64, u64), u64> = HashMap::with_capacity(m as usize);
        let mut acc = pt;
        for j in 1..=m {
            if let ModPoint::Affine { x, y } = acc {
                table.entry((x, y)).or_insert(j);
            }
            acc = self.add(acc, pt);
        }
        // giant steps: candidates N = lo + i*m + j with N*pt = identity,
        // i.e. (lo + i*m)*pt = -j*pt, detected via the negated baby table
        let giant = self.scalar_mul(pt, m);
        let mut candidates = Vec::new();
        let mut cur = self.scalar_mul(pt, lo);
        let steps = width / m + 2;
        for i in 0..=steps {
            match cur {
                ModPoint::Identity => {
                    let n = lo + i * m;
                    if n > 0 {
                        candidates.push(n);
                    }
                }
                _ => {
                    if let ModPoint::Affine { x, y } = self.neg(cur) {
                        if let Some(&j) = table.get(&(x, y)) {
                            let n = lo + i * m + j;
                            if matches!(self.scalar_mul(pt, n), ModPoint::Identity) {
                                candidates.push(n);
                            }
                        }
                    }
                }
            }
            cur = self.add(cur, giant);
        }
        candidates.sort_unstable();
        candidates.dedup();
        let mut ann = match candidates.first() {
            Some(&n) => n,
            None => return Err(Error::AmbiguousGroupOrder(BigInt::from(p))),
        };
        for &c in &candidates[1..] {
            ann = gcd_u64(ann, c);
        }
        if !matches!(self.scalar_mul(pt, ann), ModPoint::Identity) {
            return Err(Error::AmbiguousGroupOrder(BigInt::from(p)));
        }
        // minimise: strip prime factors while the point stays annihilated
        let mut order = ann;
        for (q, e) in factor_u64(ann) {
            for _ in 0..e {
                let t = order / q;
                if matches!(self.scalar_mul(pt, t), ModPoint::Identity) {
                    order = t;
                } else {
                    break;
                }
            }
        }
        Ok(order)
    }

    fn group_order(&self) -> Result<u64> {
        let p = self.p;
        if p < (1 << 16) {
            return Ok(self.group_order_exhaustive());
        }
        let sqrt_p = (p as f64).sqrt();
        let lo = p + 1 - (2.0 * sqrt_p).floor() as u64;
        let hi = p + 1 + (2.0 * sqrt_p).floor() as u64;
        // lcm of point orders until a unique multiple lies in the window
        let mut l = 1u64;
        let mut x = 0u64;
        for _ in 0..2_000 {
            // next point on the curve with this x, if any
            let pt = match self.lift_x(x) {
                Some(pt) => pt,
                None => {
                    x += 1;
                    continue;
                }
            };
            x += 1;
            let ord = self.point_order(pt)?;
            l = l / gcd_u64(l, ord) * ord;
            let first = lo.div_ceil(l) * l;
            if first > hi {
                return Err(Error::AmbiguousGroupOrder(BigInt::from(p)));
            }
            if first + l > hi {
                return Ok(first);
            }
        }
        Err(Error::AmbiguousGroupOrder(BigInt::from(p)))
    }

    /// Smallest point with the given x-coordinate, if the quadratic in y is
    /// solvable.
    fn lift_x(&self, x: u64) -> Option<ModPoint> {
        let p = self.p;
        // (2y + a1 x + a3)^2 = rhs
        let x2 = mul_mod(x, x, p);
        let rhs = (4 * mul_mod(x2, x, p) % p + mul_mod((mul_mod(self.a1, self.a1, p) + 4 * self.a2) % p, x2, p)
            + 2 * mul_mod((2 * self.a4 + mul_mod(self.a1, self.a3, p)) % p, x, p) % p
            + (mul_mod(self.a3, self.a3, p) + 4 * self.a6) % p)
            % p;
        let s = sqrt_mod(rhs, p)?;
        // y = (s - a1 x - a3) / 2
        let num = (s + p - mul_mod(self.a1, x, p) + p - self.a3) % p;
        let y = mul_mod(num, inv_mod(2, p), p);
        Some(ModPoint::Affine { x, y })
    }
}

fn gcd_u64(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd_u64(b, a % b)
    }
}

fn factor_u64(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    for &p in factor::small_primes() {
        let p = p as u64;
        if p * p > n {
            break;
        }
        let mut e = 0;
        while n % p == 0 {
            n /= p;
            e += 1;
        }
        if e > 0 {
            out.push((p, e));
        }
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Tonelli-Shanks square root mod an odd prime.
fn sqrt_mod(a: u64, p: u64) -> Option<u64> {
    if a == 0 {
        return Some(0);
    }
    if p == 2 {
        return Some(a & 1);
    }
    if pow_mod(a, (p - 1) / 2, p) != 1 {
        return None;
    }
    if p % 4 == 3 {
        return Some(pow_mod(a, (p + 1) / 4, p));
    }
    // write p - 1 = q 2^s
    let mut q = p - 1;
    let mut s = 0u32;
    while q % 2 == 0 {
        q /= 2;
        s += 1;
    }
    // find a non-residue
    let mut z = 2;
    while pow_mod(z, (p - 1) / 2, p) != p - 1 {
        z += 1;
    }
    let mut m = s;
    let mut c = pow_mod(z, q, p);
    let mut t = pow_mod(a, q, p);
    let mut r = pow_mod(a, (q + 1) / 2, p);
    while t != 1 {
        let mut i = 0u32;
        let mut tt = t;
        while tt != 1 {
            tt = mul_mod(tt, tt, p);
            i += 1;
        }
        let b = pow_mod(c, 1 << (m - i - 1), p);
        m = i;
        c = mul_mod(b, b, p);
        t = mul_mod(t, c, p);
        r = mul_mod(r, b, p);
    }
    Some(r)
}
