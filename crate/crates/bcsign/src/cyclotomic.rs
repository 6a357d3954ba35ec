//! Exact arithmetic in cyclotomic fields Q(ζ_M).
//!
//! Elements are stored in the power basis 1, ζ, …, ζ^{φ(M)−1} with integer
//! coefficients, so everything here lives in Z[ζ_M]. Binary operations on
//! elements of different conductors embed both sides into Q(ζ_lcm).

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CycError {
    #[error("cannot embed Q(zeta_{from}) into Q(zeta_{to}): {from} does not divide {to}")]
    NonDivisibleModulus { from: u64, to: u64 },
    #[error("reference value is zero")]
    ZeroReference,
    #[error("modulus must be positive")]
    ZeroModulus,
}

fn phi_cache() -> &'static Mutex<HashMap<u64, std::sync::Arc<Vec<i64>>>> {
    static CACHE: OnceLock<Mutex<HashMap<u64, std::sync::Arc<Vec<i64>>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Coefficients (low degree first) of the cyclotomic polynomial Φ_m.
pub fn cyclotomic_poly(m: u64) -> std::sync::Arc<Vec<i64>> {
    if let Some(p) = phi_cache().lock().unwrap().get(&m) {
        return p.clone();
    }
    // x^m - 1 divided by Φ_d for every proper divisor d
    let mut num = vec![0i64; m as usize + 1];
    num[0] = -1;
    num[m as usize] = 1;
    for d in 1..m {
        if m % d == 0 {
            let den = cyclotomic_poly(d);
            num = poly_div_exact(&num, &den);
        }
    }
    let arc = std::sync::Arc::new(num);
    phi_cache().lock().unwrap().insert(m, arc.clone());
    arc
}

fn poly_div_exact(num: &[i64], den: &[i64]) -> Vec<i64> {
    let mut rem = num.to_vec();
    let dn = den.len() - 1;
    let qn = rem.len() - 1 - dn;
    let mut quo = vec![0i64; qn + 1];
    for i in (0..=qn).rev() {
        let c = rem[i + dn];
        quo[i] = c;
        if c != 0 {
            for (j, &d) in den.iter().enumerate() {
                rem[i + j] -= c * d;
            }
        }
    }
    debug_assert!(rem.iter().all(|&r| r == 0));
    quo
}

pub fn euler_phi(m: u64) -> u64 {
    let mut n = m;
    let mut r = m;
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            while n % p == 0 {
                n /= p;
            }
            r -= r / p;
        }
        p += 1;
    }
    if n > 1 {
        r -= r / n;
    }
    r
}

/// An element of Z[ζ_M].
#[derive(Clone, Debug)]
pub struct CycNum {
    m: u64,
    coeffs: Vec<BigInt>,
}

impl CycNum {
    pub fn zero(m: u64) -> Self {
        assert!(m > 0, "modulus must be positive");
        CycNum { m, coeffs: vec![BigInt::zero(); euler_phi(m) as usize] }
    }

    pub fn one(m: u64) -> Self {
        Self::from_int(m, 1)
    }

    pub fn from_int(m: u64, k: impl Into<BigInt>) -> Self {
        let mut z = Self::zero(m);
        z.coeffs[0] = k.into();
        z
    }

    pub fn modulus(&self) -> u64 {
        self.m
    }

    /// Power-basis coefficients, lowest degree first.
    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    /// Σ_k counts[k]·ζ_m^k, with counts indexed by exponent mod m.
    pub fn from_exponent_counts(m: u64, counts: &[i64]) -> Self {
        let mut raw = vec![BigInt::zero(); m as usize];
        for (k, &c) in counts.iter().enumerate() {
            raw[k % m as usize] += c;
        }
        Self::reduce(m, raw)
    }

    pub fn from_big_exponent_counts(m: u64, counts: &[BigInt]) -> Self {
        let mut raw = vec![BigInt::zero(); m as usize];
        for (k, c) in counts.iter().enumerate() {
            raw[k % m as usize] += c;
        }
        Self::reduce(m, raw)
    }

    // reduce a polynomial in ζ_m (any length) modulo Φ_m
    fn reduce(m: u64, mut raw: Vec<BigInt>) -> Self {
        let phi = cyclotomic_poly(m);
        let deg = phi.len() - 1;
        if raw.len() > deg {
            for i in (deg..raw.len()).rev() {
                if raw[i].is_zero() {
                    continue;
                }
                let c = std::mem::take(&mut raw[i]);
                // x^i = x^{i-deg}·(x^deg - Φ)
                for (j, &pj) in phi.iter().enumerate().take(deg) {
                    if pj != 0 {
                        raw[i - deg + j] -= &c * pj;
                    }
                }
            }
        }
        raw.resize(deg, BigInt::zero());
        CycNum { m, coeffs: raw }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// The rational integer this element equals, if it is one.
    pub fn as_integer(&self) -> Option<BigInt> {
        if self.coeffs.iter().skip(1).all(|c| c.is_zero()) {
            Some(self.coeffs[0].clone())
        } else {
            None
        }
    }

    pub fn embed(&self, target: u64) -> Result<CycNum, CycError> {
        if target == 0 {
            return Err(CycError::ZeroModulus);
        }
        if target % self.m != 0 {
            return Err(CycError::NonDivisibleModulus { from: self.m, to: target });
        }
        if target == self.m {
            return Ok(self.clone());
        }
        let step = target / self.m;
        let mut raw = vec![BigInt::zero(); target as usize];
        for (i, c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                raw[(i as u64 * step % target) as usize] += c;
            }
        }
        Ok(Self::reduce(target, raw))
    }

    fn common(a: &CycNum, b: &CycNum) -> (CycNum, CycNum) {
        let l = a.m.lcm(&b.m);
        (a.embed(l).unwrap(), b.embed(l).unwrap())
    }

    pub fn pow(&self, mut e: u64) -> CycNum {
        let mut base = self.clone();
        let mut acc = CycNum::one(self.m);
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }

    pub fn scale(&self, k: &BigInt) -> CycNum {
        CycNum { m: self.m, coeffs: self.coeffs.iter().map(|c| c * k).collect() }
    }

    /// Exact division by a rational integer, if every coefficient is divisible.
    pub fn div_exact_int(&self, k: &BigInt) -> Option<CycNum> {
        if k.is_zero() {
            return None;
        }
        let mut out = Vec::with_capacity(self.coeffs.len());
        for c in &self.coeffs {
            let (q, r) = c.div_rem(k);
            if !r.is_zero() {
                return None;
            }
            out.push(q);
        }
        Some(CycNum { m: self.m, coeffs: out })
    }

    /// Complex conjugate, ζ ↦ ζ^{-1}.
    pub fn conj(&self) -> CycNum {
        let m = self.m as usize;
        let mut raw = vec![BigInt::zero(); m];
        for (i, c) in self.coeffs.iter().enumerate() {
            raw[(m - i) % m] += c;
        }
        Self::reduce(self.m, raw)
    }

    /// If this element is ζ_4^k for some k, return k.
    pub fn fourth_root_index(&self) -> Option<u8> {
        let l = self.m.lcm(&4);
        let v = self.embed(l).ok()?;
        (0..4u8).find(|&k| v == cyc_root(4, k as u64))
    }

    /// Floating point value (re, im), for display only.
    pub fn to_f64_pair(&self) -> (f64, f64) {
        let mut re = 0.0;
        let mut im = 0.0;
        for (i, c) in self.coeffs.iter().enumerate() {
            let cf = c.to_f64().unwrap_or(f64::NAN);
            let ang = 2.0 * std::f64::consts::PI * i as f64 / self.m as f64;
            re += cf * ang.cos();
            im += cf * ang.sin();
        }
        (re, im)
    }
}

/// ζ_m^k in Q(ζ_m).
pub fn cyc_root(m: u64, k: u64) -> CycNum {
    let mut raw = vec![BigInt::zero(); m as usize];
    raw[(k % m) as usize] = BigInt::one();
    CycNum::reduce(m, raw)
}

pub fn cyc_embed(x: &CycNum, m2: u64) -> Result<CycNum, CycError> {
    x.embed(m2)
}

/// Decide whether `value = s·reference` for a sign s ∈ {±1}; returns s or None.
pub fn cyc_is_rational_sign_times(value: &CycNum, reference: &CycNum) -> Result<Option<i8>, CycError> {
    if reference.is_zero() {
        return Err(CycError::ZeroReference);
    }
    if value == reference {
        return Ok(Some(1));
    }
    if *value == -reference {
        return Ok(Some(-1));
    }
    Ok(None)
}

impl PartialEq for CycNum {
    fn eq(&self, other: &Self) -> bool {
        if self.m == other.m {
            return self.coeffs == other.coeffs;
        }
        let (a, b) = CycNum::common(self, other);
        a.coeffs == b.coeffs
    }
}

impl Eq for CycNum {}

impl<'a> Add<&'a CycNum> for &'a CycNum {
    type Output = CycNum;
    fn add(self, rhs: &CycNum) -> CycNum {
        if self.m != rhs.m {
            let (a, b) = CycNum::common(self, rhs);
            return &a + &b;
        }
        CycNum { m: self.m, coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(x, y)| x + y).collect() }
    }
}

impl<'a> Sub<&'a CycNum> for &'a CycNum {
    type Output = CycNum;
    fn sub(self, rhs: &CycNum) -> CycNum {
        self + &(-rhs)
    }
}

impl Neg for &CycNum {
    type Output = CycNum;
    fn neg(self) -> CycNum {
        CycNum { m: self.m, coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }
}

impl Neg for CycNum {
    type Output = CycNum;
    fn neg(self) -> CycNum {
        -&self
    }
}

impl<'a> Mul<&'a CycNum> for &'a CycNum {
    type Output = CycNum;
    fn mul(self, rhs: &CycNum) -> CycNum {
        if self.m != rhs.m {
            let (a, b) = CycNum::common(self, rhs);
            return &a * &b;
        }
        let m = self.m as usize;
        let mut raw = vec![BigInt::zero(); m];
        for (i, x) in self.coeffs.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in rhs.coeffs.iter().enumerate() {
                if !y.is_zero() {
                    raw[(i + j) % m] += x * y;
                }
            }
        }
        CycNum::reduce(self.m, raw)
    }
}

macro_rules! owned_ops {
    ($tr:ident, $f:ident) => {
        impl $tr<CycNum> for CycNum {
            type Output = CycNum;
            fn $f(self, rhs: CycNum) -> CycNum {
                (&self).$f(&rhs)
            }
        }
    };
}
owned_ops!(Add, add);
owned_ops!(Sub, sub);
owned_ops!(Mul, mul);

impl fmt::Display for CycNum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let neg = c.is_negative();
            let a = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { "-" } else { "+" })?;
            }
            first = false;
            match i {
                0 => write!(f, "{a}")?,
                _ => {
                    if !a.is_one() {
                        write!(f, "{a}*")?;
                    }
                    if i == 1 {
                        write!(f, "z{}", self.m)?;
                    } else {
                        write!(f, "z{}^{}", self.m, i)?;
                    }
                }
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_cyclotomic_polys() {
        assert_eq!(*cyclotomic_poly(1), vec![-1, 1]);
        assert_eq!(*cyclotomic_poly(4), vec![1, 0, 1]);
        assert_eq!(*cyclotomic_poly(6), vec![1, -1, 1]);
        assert_eq!(*cyclotomic_poly(12), vec![1, 0, -1, 0, 1]);
        assert_eq!(cyclotomic_poly(105).len() - 1, 48);
        assert!(cyclotomic_poly(105).contains(&-2));
    }

    #[test]
    fn root_sums_vanish() {
        for m in [3u64, 4, 5, 8, 9, 12, 15] {
            let mut s = CycNum::zero(m);
            for k in 0..m {
                s = &s + &cyc_root(m, k);
            }
            assert!(s.is_zero(), "m = {m}");
        }
    }

    #[test]
    fn i_squared() {
        let i = cyc_root(4, 1);
        assert_eq!(&i * &i, CycNum::from_int(4, -1));
        assert_eq!(i.embed(12).unwrap(), cyc_root(12, 3));
    }

    #[test]
    fn embed_errors() {
        assert_eq!(
            cyc_root(3, 1).embed(4),
            Err(CycError::NonDivisibleModulus { from: 3, to: 4 })
        );
    }

    #[test]
    fn sign_times() {
        let g = &cyc_root(3, 1) - &cyc_root(3, 2);
        assert_eq!(cyc_is_rational_sign_times(&-&g, &g), Ok(Some(-1)));
        assert_eq!(cyc_is_rational_sign_times(&g, &CycNum::zero(3)), Err(CycError::ZeroReference));
        assert_eq!(cyc_is_rational_sign_times(&CycNum::one(3), &g), Ok(None));
    }

    #[test]
    fn sqrt_minus_three() {
        let g = &cyc_root(3, 1) - &cyc_root(3, 2);
        assert_eq!(&g * &g, CycNum::from_int(3, -3));
        assert_eq!(g.conj(), -&g);
    }

    #[test]
    fn exponent_counts() {
        let x = CycNum::from_exponent_counts(5, &[1, 1, 1, 1, 1]);
        assert!(x.is_zero());
        let y = CycNum::from_exponent_counts(5, &[0, 0, 0, 0, 0, 0, 2]);
        assert_eq!(y, cyc_root(5, 1).scale(&BigInt::from(2)));
    }
}
