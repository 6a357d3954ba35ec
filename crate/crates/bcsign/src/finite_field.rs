//! Finite fields F_q, q = p^f with p odd, and their characters.
//!
//! Elements of a [`FqField`] are encoded as integers in [0, q): the base-p
//! digits are the coefficients of the residue class polynomial, lowest degree
//! first. The raw `u32` API on the field is what the hot loops use; [`FqElem`]
//! wraps a value together with its field and reports mixing errors.

use std::fmt;
use std::sync::Arc;

use num_integer::Integer;
use thiserror::Error;

use crate::cyclotomic::{cyc_root, CycNum};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("operands live in different fields")]
    MixedFields,
    #[error("multiplicative character evaluated at zero")]
    EvalAtZero,
    #[error("unsupported field parameters p = {p}, f = {f}")]
    Unsupported { p: u32, f: u32 },
}

pub const SUPPORTED_PRIMES: [u32; 5] = [3, 5, 7, 11, 13];

#[derive(Debug)]
pub struct FqField {
    p: u32,
    f: u32,
    q: u32,
    modulus: Vec<u32>,
    generator: u32,
    exp: Vec<u32>,
    log: Vec<u32>,
    trace: Vec<u32>,
    add_table: Option<Vec<u32>>,
}

fn digits(mut v: u32, p: u32, f: u32) -> Vec<u32> {
    let mut d = Vec::with_capacity(f as usize);
    for _ in 0..f {
        d.push(v % p);
        v /= p;
    }
    d
}

fn undigits(d: &[u32], p: u32) -> u32 {
    d.iter().rev().fold(0, |acc, &x| acc * p + x)
}

// monic modulus, coefficients of x^0..x^{f-1}
fn poly_mulmod(a: &[u32], b: &[u32], modulus: &[u32], p: u32) -> Vec<u32> {
    let f = modulus.len();
    let mut prod = vec![0u64; 2 * f];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            prod[i + j] += x as u64 * y as u64;
        }
    }
    for k in (f..2 * f).rev() {
        let c = prod[k] % p as u64;
        prod[k] = 0;
        if c != 0 {
            for j in 0..f {
                prod[k - f + j] += (p as u64 - c) * modulus[j] as u64;
            }
        }
    }
    prod.truncate(f);
    prod.into_iter().map(|c| (c % p as u64) as u32).collect()
}

fn has_root(low: &[u32], p: u32) -> bool {
    (0..p).any(|x| {
        let mut v: u64 = 1;
        for &c in low.iter().rev() {
            v = (v * x as u64 + c as u64) % p as u64;
        }
        v == 0
    })
}

/// Lexicographically least monic irreducible of degree f over F_p, compared on
/// (a_{f-1}, …, a_0). Only degrees ≤ 3 are supported, where irreducible means
/// root-free.
pub fn least_irreducible(p: u32, f: u32) -> Vec<u32> {
    assert!((1..=3).contains(&f));
    if f == 1 {
        return vec![0];
    }
    // idx = Σ a_i p^i puts a_{f-1} in the most significant digit
    for idx in 0..p.pow(f) {
        let low = digits(idx, p, f);
        if !has_root(&low, p) {
            return low;
        }
    }
    unreachable!("an irreducible polynomial always exists")
}

impl FqField {
    pub fn new(p: u32, f: u32) -> Result<Arc<FqField>, FieldError> {
        if !SUPPORTED_PRIMES.contains(&p) || !(1..=3).contains(&f) {
            return Err(FieldError::Unsupported { p, f });
        }
        Ok(Arc::new(Self::build(p, f)))
    }

    /// F_q for a supported prime power q.
    pub fn with_order(q: u32) -> Result<Arc<FqField>, FieldError> {
        for &p in SUPPORTED_PRIMES.iter() {
            let mut f = 0;
            let mut r = q;
            while r > 1 && r % p == 0 {
                r /= p;
                f += 1;
            }
            if r == 1 && f > 0 {
                return Self::new(p, f);
            }
        }
        Err(FieldError::Unsupported { p: q, f: 1 })
    }

    fn build(p: u32, f: u32) -> FqField {
        let q = p.pow(f);
        let modulus = least_irreducible(p, f);
        let mut generator = 0;
        let mut exp = Vec::new();
        for cand in 2..q.max(3) {
            let cd = digits(cand, p, f);
            let mut cur = vec![0u32; f as usize];
            cur[0] = 1;
            let mut seq = Vec::with_capacity(q as usize - 1);
            let mut ok = true;
            for i in 0..q - 1 {
                let v = undigits(&cur, p);
                if v == 1 && i > 0 {
                    ok = false;
                    break;
                }
                seq.push(v);
                cur = poly_mulmod(&cur, &cd, &modulus, p);
            }
            if ok && undigits(&cur, p) == 1 {
                generator = cand;
                exp = seq;
                break;
            }
        }
        assert!(generator != 0, "no generator found");
        let mut log = vec![u32::MAX; q as usize];
        for (i, &v) in exp.iter().enumerate() {
            log[v as usize] = i as u32;
        }
        let mut fld = FqField { p, f, q, modulus, generator, exp, log, trace: vec![], add_table: None };
        if f > 1 && q <= 169 {
            let mut t = vec![0u32; (q * q) as usize];
            for a in 0..q {
                for b in 0..q {
                    t[(a * q + b) as usize] = fld.add_slow(a, b);
                }
            }
            fld.add_table = Some(t);
        }
        // Tr(x) = x + x^p + … + x^{p^{f-1}}
        let mut trace = vec![0u32; q as usize];
        for x in 0..q {
            let mut acc = 0;
            let mut y = x;
            for _ in 0..f {
                acc = fld.add(acc, y);
                y = fld.pow(y, p as u64);
            }
            assert!(acc < p, "trace must land in the prime field");
            trace[x as usize] = acc;
        }
        fld.trace = trace;
        fld
    }

    pub fn p(&self) -> u32 {
        self.p
    }
    pub fn f(&self) -> u32 {
        self.f
    }
    pub fn q(&self) -> u32 {
        self.q
    }
    /// Low coefficients of the monic modulus.
    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }
    pub fn generator(&self) -> u32 {
        self.generator
    }

    pub fn same_as(&self, other: &FqField) -> bool {
        self.p == other.p && self.f == other.f && self.modulus == other.modulus
    }

    pub fn from_int(&self, k: i64) -> u32 {
        k.rem_euclid(self.p as i64) as u32
    }

    pub fn from_coeffs(&self, c: &[u32]) -> u32 {
        let mut d = vec![0u32; self.f as usize];
        for (i, &x) in c.iter().enumerate().take(self.f as usize) {
            d[i] = x % self.p;
        }
        undigits(&d, self.p)
    }

    pub fn coeffs(&self, x: u32) -> Vec<u32> {
        digits(x, self.p, self.f)
    }

    /// The class of the indeterminate (x itself), or 0 in the prime field.
    pub fn x(&self) -> u32 {
        if self.f == 1 {
            0
        } else {
            self.p
        }
    }

    fn add_slow(&self, a: u32, b: u32) -> u32 {
        let (p, f) = (self.p, self.f);
        let mut r = 0;
        let mut pw = 1;
        let (mut a, mut b) = (a, b);
        for _ in 0..f {
            r += ((a % p + b % p) % p) * pw;
            a /= p;
            b /= p;
            pw *= p;
        }
        r
    }

    #[inline]
    pub fn add(&self, a: u32, b: u32) -> u32 {
        if self.f == 1 {
            let s = a + b;
            return if s >= self.p { s - self.p } else { s };
        }
        match &self.add_table {
            Some(t) => t[(a * self.q + b) as usize],
            None => self.add_slow(a, b),
        }
    }

    #[inline]
    pub fn neg(&self, a: u32) -> u32 {
        if self.f == 1 {
            return if a == 0 { 0 } else { self.p - a };
        }
        let (p, f) = (self.p, self.f);
        let mut r = 0;
        let mut pw = 1;
        let mut a = a;
        for _ in 0..f {
            r += ((p - a % p) % p) * pw;
            a /= p;
            pw *= p;
        }
        r
    }

    #[inline]
    pub fn sub(&self, a: u32, b: u32) -> u32 {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        if a == 0 || b == 0 {
            return 0;
        }
        if self.f == 1 {
            return a * b % self.p;
        }
        let s = self.log[a as usize] + self.log[b as usize];
        let n = self.q - 1;
        self.exp[(if s >= n { s - n } else { s }) as usize]
    }

    pub fn inv(&self, a: u32) -> Option<u32> {
        if a == 0 {
            return None;
        }
        let n = self.q - 1;
        let l = self.log[a as usize];
        Some(self.exp[((n - l) % n) as usize])
    }

    pub fn div(&self, a: u32, b: u32) -> Option<u32> {
        self.inv(b).map(|bi| self.mul(a, bi))
    }

    pub fn pow(&self, a: u32, e: u64) -> u32 {
        if e == 0 {
            return 1;
        }
        if a == 0 {
            return 0;
        }
        let n = (self.q - 1) as u64;
        let l = self.log[a as usize] as u64;
        self.exp[((l * (e % n)) % n) as usize]
    }

    /// a with g^a = x.
    pub fn log(&self, x: u32) -> Option<u32> {
        if x == 0 {
            None
        } else {
            Some(self.log[x as usize])
        }
    }

    /// g^a.
    pub fn exp(&self, a: u64) -> u32 {
        self.exp[(a % (self.q as u64 - 1)) as usize]
    }

    /// Tr_{F_q/F_p}(x), as an element of {0, …, p−1}.
    #[inline]
    pub fn trace(&self, x: u32) -> u32 {
        self.trace[x as usize]
    }

    /// Frobenius x ↦ x^p.
    pub fn frob(&self, x: u32) -> u32 {
        self.pow(x, self.p as u64)
    }

    pub fn is_square(&self, x: u32) -> bool {
        x != 0 && self.log[x as usize] % 2 == 0
    }

    /// Multiplication-by-a matrix on the polynomial basis 1, x, …, x^{f−1},
    /// acting on column vectors of base-p digits. Entries are in F_p.
    pub fn mul_matrix(&self, a: u32) -> Vec<Vec<u32>> {
        let f = self.f as usize;
        let mut m = vec![vec![0u32; f]; f];
        for b in 0..f {
            let mut basis = vec![0u32; f];
            basis[b] = 1;
            let col = self.coeffs(self.mul(a, self.from_coeffs(&basis)));
            for r in 0..f {
                m[r][b] = col[r];
            }
        }
        m
    }

    /// Generator of the subfield of order p^d (d | f).
    pub fn subfield_generator(&self, d: u32) -> u32 {
        assert!(self.f % d == 0);
        let k = (self.q - 1) / (self.p.pow(d) - 1);
        self.exp(k as u64)
    }

    pub fn in_subfield(&self, x: u32, d: u32) -> bool {
        self.pow(x, self.p.pow(d) as u64) == x
    }

    /// Elements 0..q in index order.
    pub fn elements(&self) -> std::ops::Range<u32> {
        0..self.q
    }

    pub fn elem(self: &Arc<Self>, v: u32) -> FqElem {
        FqElem { field: self.clone(), v: v % self.q }
    }

    /// The ring Z[ζ_M] in which character values of this field live.
    pub fn char_ring_modulus(&self) -> u64 {
        (self.p as u64).lcm(&(self.q as u64 - 1))
    }

    pub fn fmt_elem(&self, x: u32) -> String {
        if self.f == 1 {
            return x.to_string();
        }
        let d = self.coeffs(x);
        let mut parts = Vec::new();
        for (i, &c) in d.iter().enumerate().rev() {
            if c == 0 {
                continue;
            }
            parts.push(match (i, c) {
                (0, c) => c.to_string(),
                (1, 1) => "x".to_string(),
                (1, c) => format!("{c}x"),
                (i, 1) => format!("x^{i}"),
                (i, c) => format!("{c}x^{i}"),
            });
        }
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join("+")
        }
    }
}

#[derive(Clone)]
pub struct FqElem {
    field: Arc<FqField>,
    v: u32,
}

impl fmt::Debug for FqElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} in F_{}", self.field.fmt_elem(self.v), self.field.q)
    }
}

impl PartialEq for FqElem {
    fn eq(&self, o: &Self) -> bool {
        self.field.same_as(&o.field) && self.v == o.v
    }
}

impl FqElem {
    pub fn value(&self) -> u32 {
        self.v
    }
    pub fn field(&self) -> &Arc<FqField> {
        &self.field
    }
    pub fn coeffs(&self) -> Vec<u32> {
        self.field.coeffs(self.v)
    }
    fn check(&self, o: &FqElem) -> Result<(), FieldError> {
        if self.field.same_as(&o.field) {
            Ok(())
        } else {
            Err(FieldError::MixedFields)
        }
    }
    pub fn add(&self, o: &FqElem) -> Result<FqElem, FieldError> {
        self.check(o)?;
        Ok(self.field.elem(self.field.add(self.v, o.v)))
    }
    pub fn sub(&self, o: &FqElem) -> Result<FqElem, FieldError> {
        self.check(o)?;
        Ok(self.field.elem(self.field.sub(self.v, o.v)))
    }
    pub fn mul(&self, o: &FqElem) -> Result<FqElem, FieldError> {
        self.check(o)?;
        Ok(self.field.elem(self.field.mul(self.v, o.v)))
    }
    pub fn neg(&self) -> FqElem {
        self.field.elem(self.field.neg(self.v))
    }
    pub fn inv(&self) -> Result<FqElem, FieldError> {
        self.field.inv(self.v).map(|v| self.field.elem(v)).ok_or(FieldError::DivisionByZero)
    }
    pub fn discrete_log(&self) -> Result<u32, FieldError> {
        self.field.log(self.v).ok_or(FieldError::DivisionByZero)
    }
}

/// g^a ↦ ζ_{q−1}^{k·a}.
#[derive(Clone, Debug)]
pub struct MultChar {
    pub field: Arc<FqField>,
    pub k: u64,
}

impl MultChar {
    pub fn new(field: &Arc<FqField>, k: u64) -> Self {
        let n = field.q() as u64 - 1;
        MultChar { field: field.clone(), k: k % n }
    }

    pub fn trivial(field: &Arc<FqField>) -> Self {
        Self::new(field, 0)
    }

    pub fn order_modulus(&self) -> u64 {
        self.field.q() as u64 - 1
    }

    /// Exponent of ζ_{q−1} at x.
    pub fn exponent(&self, x: u32) -> Result<u64, FieldError> {
        let a = self.field.log(x).ok_or(FieldError::EvalAtZero)? as u64;
        Ok(a * self.k % self.order_modulus())
    }

    pub fn eval(&self, x: &FqElem) -> Result<CycNum, FieldError> {
        if !self.field.same_as(x.field()) {
            return Err(FieldError::MixedFields);
        }
        let e = self.exponent(x.value())?;
        Ok(cyc_root(self.order_modulus(), e))
    }

    /// Value at x as a sign, when the character is at most quadratic.
    pub fn sign(&self, x: u32) -> Result<i8, FieldError> {
        let e = self.exponent(x)?;
        let n = self.order_modulus();
        if e == 0 {
            Ok(1)
        } else if 2 * e == n {
            Ok(-1)
        } else {
            panic!("character is not quadratic")
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.k == 0
    }

    pub fn pow(&self, n: u64) -> MultChar {
        MultChar::new(&self.field, self.k * n)
    }
}

impl PartialEq for MultChar {
    fn eq(&self, o: &Self) -> bool {
        self.field.same_as(&o.field) && self.k == o.k
    }
}

pub fn quadratic_residue_char(field: &Arc<FqField>) -> MultChar {
    MultChar::new(field, (field.q() as u64 - 1) / 2)
}

/// x ↦ ζ_p^{Tr(a·x)}.
#[derive(Clone, Debug)]
pub struct AddChar {
    pub field: Arc<FqField>,
    pub a: u32,
}

impl AddChar {
    pub fn new(field: &Arc<FqField>, a: u32) -> Self {
        AddChar { field: field.clone(), a }
    }

    pub fn standard(field: &Arc<FqField>) -> Self {
        Self::new(field, 1)
    }

    pub fn is_trivial(&self) -> bool {
        self.a == 0
    }

    /// Exponent of ζ_p at x.
    #[inline]
    pub fn exponent(&self, x: u32) -> u32 {
        self.field.trace(self.field.mul(self.a, x))
    }

    pub fn eval(&self, x: &FqElem) -> Result<CycNum, FieldError> {
        if !self.field.same_as(x.field()) {
            return Err(FieldError::MixedFields);
        }
        Ok(cyc_root(self.field.p() as u64, self.exponent(x.value()) as u64))
    }
}

pub enum Character<'a> {
    Mult(&'a MultChar),
    Add(&'a AddChar),
}

pub fn eval_char(c: Character<'_>, x: &FqElem) -> Result<CycNum, FieldError> {
    match c {
        Character::Mult(m) => m.eval(x),
        Character::Add(a) => a.eval(x),
    }
}
