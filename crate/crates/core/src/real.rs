//! Fixed-precision binary floats on top of `BigInt`, with the handful of
//! special functions the real-analytic layer needs: square roots, the
//! arithmetic-geometric mean, Carlson's symmetric integral R_F (real and
//! complex-conjugate arguments), and pi.
//!
//! A value is `mantissa * 2^exp`; operations take a working precision in
//! bits and truncate the mantissa back to it. Truncation error is swamped
//! by the guard bits the callers carry (default 50 decimal digits plus 64
//! guard bits).

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BigFloat {
    mantissa: BigInt,
    exp: i64,
}

impl BigFloat {
    pub fn zero() -> Self {
        BigFloat {
            mantissa: BigInt::zero(),
            exp: 0,
        }
    }

    pub fn from_i64(v: i64) -> Self {
        BigFloat {
            mantissa: BigInt::from(v),
            exp: 0,
        }
    }

    pub fn from_bigint(v: &BigInt) -> Self {
        BigFloat {
            mantissa: v.clone(),
            exp: 0,
        }
    }

    pub fn from_ratio(r: &BigRational, prec: u32) -> Self {
        let num = r.numer() << (prec as usize);
        BigFloat {
            mantissa: num / r.denom(),
            exp: -(prec as i64),
        }
        .normalized(prec)
    }

    pub fn from_f64(v: f64) -> Self {
        assert!(v.is_finite());
        if v == 0.0 {
            return BigFloat::zero();
        }
        let bits = v.to_bits();
        let sign = if bits >> 63 == 1 { -1i64 } else { 1 };
        let raw_exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (m, e) = if raw_exp == 0 {
            (frac, -1074)
        } else {
            (frac | (1 << 52), raw_exp - 1075)
        };
        BigFloat {
            mantissa: BigInt::from(sign * m as i64),
            exp: e,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.mantissa.is_negative()
    }

    pub fn neg(&self) -> Self {
        BigFloat {
            mantissa: -&self.mantissa,
            exp: self.exp,
        }
    }

    pub fn abs(&self) -> Self {
        BigFloat {
            mantissa: self.mantissa.abs(),
            exp: self.exp,
        }
    }

    fn normalized(mut self, prec: u32) -> Self {
        let bits = self.mantissa.bits();
        let target = prec as u64 + 1;
        if bits > target {
            let shift = (bits - target) as i64;
            self.mantissa >>= shift as usize;
            self.exp += shift;
        }
        self
    }

    pub fn add(&self, rhs: &Self, prec: u32) -> Self {
        if self.is_zero() {
            return rhs.clone().normalized(prec);
        }
        if rhs.is_zero() {
            return self.clone().normalized(prec);
        }
        let (hi, lo) = if self.exp >= rhs.exp {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let gap = hi.exp - lo.exp;
        // beyond the precision window the small operand is invisible
        if gap > prec as i64 + hi.mantissa.bits() as i64 + 8 {
            return hi.clone().normalized(prec);
        }
        let m = (&hi.mantissa << gap as usize) + &lo.mantissa;
        BigFloat {
            mantissa: m,
            exp: lo.exp,
        }
        .normalized(prec)
    }

    pub fn sub(&self, rhs: &Self, prec: u32) -> Self {
        self.add(&rhs.neg(), prec)
    }

    pub fn mul(&self, rhs: &Self, prec: u32) -> Self {
        BigFloat {
            mantissa: &self.mantissa * &rhs.mantissa,
            exp: self.exp + rhs.exp,
        }
        .normalized(prec)
    }

    pub fn mul_i64(&self, k: i64, prec: u32) -> Self {
        BigFloat {
            mantissa: &self.mantissa * k,
            exp: self.exp,
        }
        .normalized(prec)
    }

    pub fn div(&self, rhs: &Self, prec: u32) -> Self {
        assert!(!rhs.is_zero(), "division by zero");
        if self.is_zero() {
            return BigFloat::zero();
        }
        let shift = prec as i64 + rhs.mantissa.bits() as i64 + 8;
        let m = (&self.mantissa << shift as usize) / &rhs.mantissa;
        BigFloat {
            mantissa: m,
            exp: self.exp - rhs.exp - shift,
        }
        .normalized(prec)
    }

    /// Floor square root at the working precision; requires a non-negative
    /// value.
    pub fn sqrt(&self, prec: u32) -> Self {
        assert!(!self.is_negative(), "sqrt of a negative value");
        if self.is_zero() {
            return BigFloat::zero();
        }
        // scale so the mantissa has ~2(prec+2) bits and the exponent is even
        let bits = self.mantissa.bits() as i64;
        let mut shift = 2 * (prec as i64 + 2) - bits;
        if (self.exp - shift) % 2 != 0 {
            shift += 1;
        }
        let m = if shift >= 0 {
            &self.mantissa << shift as usize
        } else {
            &self.mantissa >> (-shift) as usize
        };
        let root = m.to_biguint().unwrap().sqrt();
        BigFloat {
            mantissa: BigInt::from_biguint(Sign::Plus, root),
            exp: (self.exp - shift) / 2,
        }
        .normalized(prec)
    }

    /// Sign of `self - rhs`.
    pub fn cmp_val(&self, rhs: &Self) -> std::cmp::Ordering {
        use std::cmp::Ordering;
        let d = self.sub(rhs, 8 + self.mantissa.bits().max(rhs.mantissa.bits()) as u32);
        if d.is_zero() {
            Ordering::Equal
        } else if d.is_negative() {
            Ordering::Less
        } else {
            Ordering::Greater
        }
    }

    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let bits = self.mantissa.bits() as i64;
        let take = 63.min(bits);
        let top = (&self.mantissa >> (bits - take) as usize).to_i64().unwrap() as f64;
        top * 2f64.powi((self.exp + bits - take) as i32)
    }

    /// Fractional part in [0, 1) (value must be non-negative).
    pub fn frac(&self, prec: u32) -> Self {
        assert!(!self.is_negative());
        if self.exp >= 0 {
            return BigFloat::zero();
        }
        let m = &self.mantissa & ((BigInt::from(1) << (-self.exp) as usize) - 1);
        BigFloat {
            mantissa: m,
            exp: self.exp,
        }
        .normalized(prec)
    }

    /// 2^e as a value, for tolerance constants.
    pub fn pow2(e: i64) -> Self {
        BigFloat {
            mantissa: BigInt::from(1),
            exp: e,
        }
    }
}

/// Complex values for the conjugate-root leg of R_F.
#[derive(Debug, Clone)]
pub struct Complex {
    pub re: BigFloat,
    pub im: BigFloat,
}

impl Complex {
    pub fn real(re: BigFloat) -> Self {
        Complex {
            re,
            im: BigFloat::zero(),
        }
    }

    pub fn add(&self, rhs: &Self, prec: u32) -> Self {
        Complex {
            re: self.re.add(&rhs.re, prec),
            im: self.im.add(&rhs.im, prec),
        }
    }

    pub fn mul(&self, rhs: &Self, prec: u32) -> Self {
        Complex {
            re: self
                .re
                .mul(&rhs.re, prec)
                .sub(&self.im.mul(&rhs.im, prec), prec),
            im: self
                .re
                .mul(&rhs.im, prec)
                .add(&self.im.mul(&rhs.re, prec), prec),
        }
    }

    pub fn div_i64(&self, k: i64, prec: u32) -> Self {
        let kf = BigFloat::from_i64(k);
        Complex {
            re: self.re.div(&kf, prec),
            im: self.im.div(&kf, prec),
        }
    }

    pub fn norm(&self, prec: u32) -> BigFloat {
        self.re
            .mul(&self.re, prec)
            .add(&self.im.mul(&self.im, prec), prec)
            .sqrt(prec)
    }

    /// Principal square root.
    pub fn sqrt(&self, prec: u32) -> Self {
        if self.im.is_zero() {
            if !self.re.is_negative() {
                return Complex::real(self.re.sqrt(prec));
            }
            return Complex {
                re: BigFloat::zero(),
                im: self.re.neg().sqrt(prec),
            };
        }
        let m = self.norm(prec);
        let two = BigFloat::from_i64(2);
        if !self.re.is_negative() {
            let t = m.add(&self.re, prec).div(&two, prec).sqrt(prec);
            let im = self.im.div(&t.mul(&two, prec), prec);
            Complex { re: t, im }
        } else {
            let t = m.sub(&self.re, prec).div(&two, prec).sqrt(prec);
            let re = self.im.abs().div(&t.mul(&two, prec), prec);
            let im = if self.im.is_negative() { t.neg() } else { t };
            Complex { re, im }
        }
    }

    pub fn recip_sqrt(&self, prec: u32) -> Complex {
        // 1 / sqrt(w)
        let s = self.sqrt(prec);
        let denom = s
            .re
            .mul(&s.re, prec)
            .add(&s.im.mul(&s.im, prec), prec);
        Complex {
            re: s.re.div(&denom, prec),
            im: s.im.neg().div(&denom, prec),
        }
    }
}

/// Carlson R_F by the duplication theorem. Arguments must avoid the
/// negative real axis; one may be zero (complete-integral case). The
/// iteration contracts the spread by 4 each step, so runs in O(prec)
/// steps of a few big-float multiplies.
pub fn carlson_rf(mut x: Complex, mut y: Complex, mut z: Complex, prec: u32) -> Complex {
    let eps = BigFloat::pow2(-(prec as i64) - 4);
    for _ in 0..(4 * prec as usize + 64) {
        let sx = x.sqrt(prec);
        let sy = y.sqrt(prec);
        let sz = z.sqrt(prec);
        let lambda = sx
            .mul(&sy, prec)
            .add(&sy.mul(&sz, prec), prec)
            .add(&sz.mul(&sx, prec), prec);
        x = x.add(&lambda, prec).div_i64(4, prec);
        y = y.add(&lambda, prec).div_i64(4, prec);
        z = z.add(&lambda, prec).div_i64(4, prec);
        let mu = x.add(&y, prec).add(&z, prec).div_i64(3, prec);
        let mu_norm = mu.norm(prec);
        let spread = |w: &Complex| -> BigFloat {
            Complex {
                re: w.re.sub(&mu.re, prec),
                im: w.im.sub(&mu.im, prec),
            }
            .norm(prec)
        };
        let worst = [spread(&x), spread(&y), spread(&z)]
            .into_iter()
            .max_by(|a, b| a.cmp_val(b))
            .unwrap();
        if worst.cmp_val(&mu_norm.mul(&eps, prec)) == std::cmp::Ordering::Less {
            let mu = x.add(&y, prec).add(&z, prec).div_i64(3, prec);
            return mu.recip_sqrt(prec);
        }
    }
    let mu = x.add(&y, prec).add(&z, prec).div_i64(3, prec);
    mu.recip_sqrt(prec)
}

/// Arithmetic-geometric mean of two positive reals.
pub fn agm(a0: &BigFloat, b0: &BigFloat, prec: u32) -> BigFloat {
    let mut a = a0.clone();
    let mut b = b0.clone();
    let eps = BigFloat::pow2(-(prec as i64) - 4);
    for _ in 0..prec as usize + 64 {
        let am = a.add(&b, prec).div(&BigFloat::from_i64(2), prec);
        let gm = a.mul(&b, prec).sqrt(prec);
        let diff = am.sub(&gm, prec).abs();
        a = am;
        b = gm;
        if diff.cmp_val(&a.mul(&eps, prec)) == std::cmp::Ordering::Less {
            break;
        }
    }
    a
}

/// pi by Machin's formula; the arctangent series are evaluated in scaled
/// integer arithmetic.
pub fn pi(prec: u32) -> BigFloat {
    let guard = prec + 32;
    let scale = BigInt::from(1) << guard as usize;
    let atan_inv = |k: i64| -> BigInt {
        let k2 = BigInt::from(k) * k;
        let mut term = &scale / k;
        let mut sum = term.clone();
        let mut j = 1u32;
        while !term.is_zero() {
            term = term / &k2;
            if term.is_zero() {
                break;
            }
            let contrib = &term / (2 * j + 1);
            if j % 2 == 1 {
                sum -= contrib;
            } else {
                sum += contrib;
            }
            j += 1;
        }
        sum
    };
    let v = atan_inv(5) * 16 - atan_inv(239) * 4;
    BigFloat {
        mantissa: v,
        exp: -(guard as i64),
    }
    .normalized(prec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    const P: u32 = 192;

    fn close(a: &BigFloat, b: f64, tol: f64) {
        assert!(
            (a.to_f64() - b).abs() <= tol,
            "{} vs {}",
            a.to_f64(),
            b
        );
    }

    #[test]
    fn arithmetic_round_trip() {
        let a = BigFloat::from_f64(1.5);
        let b = BigFloat::from_f64(2.25);
        close(&a.add(&b, P), 3.75, 0.0);
        close(&a.mul(&b, P), 3.375, 0.0);
        close(&b.div(&a, P), 1.5, 1e-15);
        close(&a.sub(&b, P), -0.75, 0.0);
        assert!(a.sub(&b, P).is_negative());
    }

    #[test]
    fn sqrt_matches_f64() {
        for v in [2.0f64, 3.0, 10.0, 0.25, 1e10, 1e-10] {
            close(&BigFloat::from_f64(v).sqrt(P), v.sqrt(), v.sqrt() * 1e-14);
        }
        // high-precision check: sqrt(2)^2 = 2 to ~2^-190
        let s = BigFloat::from_f64(2.0).sqrt(P);
        let err = s.mul(&s, P).sub(&BigFloat::from_i64(2), P).abs();
        assert!(err.cmp_val(&BigFloat::pow2(-180)) == std::cmp::Ordering::Less);
    }

    #[test]
    fn fractional_part() {
        let x = BigFloat::from_f64(3.625);
        close(&x.frac(P), 0.625, 0.0);
        let y = BigFloat::from_i64(7);
        assert!(y.frac(P).is_zero());
    }

    #[test]
    fn pi_value() {
        let p = pi(P);
        close(&p, std::f64::consts::PI, 1e-15);
        // 50-digit reference: 3.14159265358979323846264338327950288419716939937510
        let ref50 = BigFloat::from_ratio(
            &num_rational::BigRational::new(
                "314159265358979323846264338327950288419716939937510".parse::<BigInt>().unwrap(),
                BigInt::from(10u8).pow(50),
            ),
            P,
        );
        let err = p.sub(&ref50, P).abs();
        assert!(err.cmp_val(&BigFloat::pow2(-160)) == std::cmp::Ordering::Less);
    }

    #[test]
    fn agm_known_value() {
        // AGM(1, sqrt(2)) = pi / (2 * Gauss constant denominator); numeric
        // reference 1.19814023473559220743992249228...
        let a = BigFloat::from_i64(1);
        let b = BigFloat::from_f64(2.0).sqrt(P);
        close(&agm(&a, &b, P), 1.1981402347355922, 1e-14);
    }

    #[test]
    fn complex_sqrt_branches() {
        let w = Complex {
            re: BigFloat::from_f64(-3.0),
            im: BigFloat::from_f64(4.0),
        };
        let s = w.sqrt(P);
        close(&s.re, 1.0, 1e-14);
        close(&s.im, 2.0, 1e-14);
        let w2 = Complex {
            re: BigFloat::from_f64(-3.0),
            im: BigFloat::from_f64(-4.0),
        };
        let s2 = w2.sqrt(P);
        close(&s2.re, 1.0, 1e-14);
        close(&s2.im, -2.0, 1e-14);
    }

    #[test]
    fn rf_complete_integral() {
        // R_F(0, 1, 2) = integral known: 1.31102877714605990523242...
        // (half the lemniscatic-type value); cross-check against f64 AGM
        // identity R_F(0, a^2, b^2) = pi / (2 agm(a, b))
        let rf = carlson_rf(
            Complex::real(BigFloat::zero()),
            Complex::real(BigFloat::from_i64(1)),
            Complex::real(BigFloat::from_i64(2)),
            P,
        );
        let agm_v = agm(&BigFloat::from_i64(1), &BigFloat::from_f64(2.0).sqrt(P), P);
        let expect = pi(P).div(&agm_v.mul_i64(2, P), P);
        let err = rf.re.sub(&expect, P).abs();
        assert!(err.cmp_val(&BigFloat::pow2(-150)) == std::cmp::Ordering::Less);
        assert!(rf.im.is_zero() || rf.im.abs().cmp_val(&BigFloat::pow2(-150)) == std::cmp::Ordering::Less);
    }

    #[test]
    fn rf_conjugate_pair_is_real() {
        let x = Complex::real(BigFloat::from_f64(0.4127));
        let y = Complex {
            re: BigFloat::from_f64(2.381),
            im: BigFloat::from_f64(1.3747),
        };
        let z = Complex {
            re: BigFloat::from_f64(2.381),
            im: BigFloat::from_f64(-1.3747),
        };
        let rf = carlson_rf(x, y, z, P);
        assert!(rf.im.abs().cmp_val(&BigFloat::pow2(-150)) == std::cmp::Ordering::Less);
        // scaling law: R_F(kx, ky, kz) = R_F(x,y,z) / sqrt(k)
        let k = 4.0;
        let rf4 = carlson_rf(
            Complex::real(BigFloat::from_f64(0.4127 * k)),
            Complex {
                re: BigFloat::from_f64(2.381 * k),
                im: BigFloat::from_f64(1.3747 * k),
            },
            Complex {
                re: BigFloat::from_f64(2.381 * k),
                im: BigFloat::from_f64(-1.3747 * k),
            },
            P,
        );
        let double = rf4.re.mul_i64(2, P);
        let err = double.sub(&rf.re, P).abs();
        assert!(err.cmp_val(&BigFloat::pow2(-140)) == std::cmp::Ordering::Less);
    }
}
