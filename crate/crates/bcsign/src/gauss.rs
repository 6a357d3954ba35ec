//! Quadratic Gauss sums Σ_{x ∈ F_q^n} ψ(xᵀSx), by enumeration and in closed form.

use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::Pow;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::cyclotomic::{cyc_is_rational_sign_times, cyc_root, CycNum};
use crate::finite_field::{quadratic_residue_char, AddChar, FqField};
use crate::linalg::{self, Mat};

pub const DEFAULT_BOUND: u64 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GaussError {
    #[error("enumeration of {size} points exceeds the bound {bound}")]
    EnumerationTooLarge { size: u128, bound: u64 },
    #[error("additive character is trivial")]
    TrivialAdditiveCharacter,
    #[error("quadratic form is degenerate")]
    DegenerateForm,
    #[error("normalized sum is not a 4th root of unity")]
    NonUnitQuotient,
    #[error("gram matrix is not symmetric")]
    NotSymmetric,
    #[error("brute force and closed form disagree")]
    BruteClosedMismatch,
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

/// Q(x) = xᵀSx on F_q^n.
#[derive(Clone, Debug)]
pub struct QuadSpace {
    pub field: Arc<FqField>,
    pub gram: Mat,
}

impl QuadSpace {
    pub fn new(field: &Arc<FqField>, gram: Mat) -> Result<Self, GaussError> {
        let n = gram.len();
        for (i, row) in gram.iter().enumerate() {
            if row.len() != n {
                return Err(GaussError::NotSymmetric);
            }
            for j in 0..n {
                if row[j] != gram[j][i] {
                    return Err(GaussError::NotSymmetric);
                }
            }
        }
        Ok(QuadSpace { field: field.clone(), gram })
    }

    pub fn dim(&self) -> usize {
        self.gram.len()
    }

    pub fn det(&self) -> u32 {
        if self.dim() == 0 {
            1
        } else {
            linalg::det(&self.field, &self.gram)
        }
    }

    pub fn is_nondegenerate(&self) -> bool {
        self.det() != 0
    }

    pub fn radical_dim(&self) -> usize {
        self.dim() - linalg::rank(&self.field, &self.gram)
    }

    pub fn eval(&self, x: &[u32]) -> u32 {
        let k = &self.field;
        let sx = linalg::mat_vec(k, &self.gram, x);
        linalg::dot(k, x, &sx)
    }

    /// Orthogonal sum.
    pub fn perp(&self, other: &QuadSpace) -> QuadSpace {
        let (a, b) = (self.dim(), other.dim());
        let mut g = linalg::zeros(a + b, a + b);
        for i in 0..a {
            g[i][..a].copy_from_slice(&self.gram[i]);
        }
        for i in 0..b {
            g[a + i][a..].copy_from_slice(&other.gram[i]);
        }
        QuadSpace { field: self.field.clone(), gram: g }
    }

    /// (P, D) with PᵀSP = D diagonal, by symmetric elimination.
    pub fn diagonalize(&self) -> (Mat, Vec<u32>) {
        let k = &self.field;
        let n = self.dim();
        let mut s = self.gram.clone();
        let mut p = linalg::identity(n);
        // columns of p are the current basis vectors
        for c in 0..n {
            if s[c][c] == 0 {
                if let Some(j) = (c + 1..n).find(|&j| s[j][j] != 0) {
                    swap_basis(&mut s, &mut p, c, j);
                } else if let Some(j) = (c + 1..n).find(|&j| s[c][j] != 0) {
                    // e_c ← e_c + e_j: Q(e_c + e_j) = 2 S_cj ≠ 0
                    add_basis(k, &mut s, &mut p, c, j, 1);
                }
            }
            if s[c][c] == 0 {
                continue;
            }
            let inv = k.inv(s[c][c]).unwrap();
            for j in c + 1..n {
                if s[c][j] != 0 {
                    let f = k.neg(k.mul(s[c][j], inv));
                    add_basis(k, &mut s, &mut p, j, c, f);
                }
            }
        }
        let d = (0..n).map(|i| s[i][i]).collect();
        (p, d)
    }
}

fn swap_basis(s: &mut Mat, p: &mut Mat, a: usize, b: usize) {
    s.swap(a, b);
    for row in s.iter_mut() {
        row.swap(a, b);
    }
    for row in p.iter_mut() {
        row.swap(a, b);
    }
}

// e_a ← e_a + f·e_b
fn add_basis(k: &FqField, s: &mut Mat, p: &mut Mat, a: usize, b: usize, f: u32) {
    let n = s.len();
    for i in 0..n {
        let t = k.mul(f, s[b][i]);
        s[a][i] = k.add(s[a][i], t);
    }
    for i in 0..n {
        let t = k.mul(f, s[i][b]);
        s[i][a] = k.add(s[i][a], t);
    }
    for row in p.iter_mut() {
        let t = k.mul(f, row[b]);
        row[a] = k.add(row[a], t);
    }
}

#[derive(Clone, Copy, Debug)]
pub struct BruteOptions {
    pub bound: u64,
    pub threads: Option<usize>,
}

impl Default for BruteOptions {
    fn default() -> Self {
        BruteOptions { bound: DEFAULT_BOUND, threads: None }
    }
}

/// Runs `f` on a pool with the requested thread count, or the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, GaussError> {
    match threads {
        None => Ok(f()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| GaussError::ThreadPool(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// Counts of x with Tr(a·Q(x)) = k, for k ∈ F_p.
pub fn exponent_counts(space: &QuadSpace, psi: &AddChar, opts: BruteOptions) -> Result<Vec<i64>, GaussError> {
    if psi.is_trivial() {
        return Err(GaussError::TrivialAdditiveCharacter);
    }
    let k = &space.field;
    let n = space.dim();
    let q = k.q() as u128;
    let size = q.pow(n as u32);
    if size > opts.bound as u128 {
        return Err(GaussError::EnumerationTooLarge { size, bound: opts.bound });
    }
    let p = k.p() as usize;
    if n == 0 {
        let mut c = vec![0i64; p];
        c[0] = 1;
        return Ok(c);
    }
    let two: Vec<Vec<u32>> = space.gram.iter().map(|r| r.iter().map(|&x| k.add(x, x)).collect()).collect();
    let run = || {
        (0..k.q())
            .into_par_iter()
            .map(|x0| {
                let mut counts = vec![0i64; p];
                let mut lin = vec![0u32; n];
                let q0 = k.mul(x0, k.mul(space.gram[0][0], x0));
                for i in 1..n {
                    lin[i] = k.mul(two[0][i], x0);
                }
                walk(k, psi, &space.gram, &two, 1, q0, &lin, &mut counts);
                counts
            })
            .reduce(|| vec![0i64; p], |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            })
    };
    with_threads(opts.threads, run)
}

#[allow(clippy::too_many_arguments)]
fn walk(k: &FqField, psi: &AddChar, s: &Mat, two: &Mat, level: usize, qacc: u32, lin: &[u32], counts: &mut [i64]) {
    let n = s.len();
    if level == n {
        counts[psi.exponent(qacc) as usize] += 1;
        return;
    }
    let mut next = lin.to_vec();
    for v in 0..k.q() {
        let term = k.mul(v, k.add(lin[level], k.mul(s[level][level], v)));
        let qn = k.add(qacc, term);
        if level + 1 == n {
            counts[psi.exponent(qn) as usize] += 1;
            continue;
        }
        for i in level + 1..n {
            next[i] = k.add(lin[i], k.mul(two[level][i], v));
        }
        walk(k, psi, s, two, level + 1, qn, &next, counts);
    }
}

pub fn gauss_sum_brute(space: &QuadSpace, psi: &AddChar, opts: BruteOptions) -> Result<CycNum, GaussError> {
    let counts = exponent_counts(space, psi, opts)?;
    Ok(CycNum::from_exponent_counts(space.field.p() as u64, &counts))
}

/// g(ψ) = Σ_t ψ(t²).
pub fn basic_gauss_sum(psi: &AddChar) -> CycNum {
    let k = &psi.field;
    let mut counts = vec![0i64; k.p() as usize];
    for t in k.elements() {
        counts[psi.exponent(k.mul(t, t)) as usize] += 1;
    }
    CycNum::from_exponent_counts(k.p() as u64, &counts)
}

pub fn gauss_sum_closed(space: &QuadSpace, psi: &AddChar) -> Result<CycNum, GaussError> {
    if psi.is_trivial() {
        return Err(GaussError::TrivialAdditiveCharacter);
    }
    let k = &space.field;
    let (_, d) = space.diagonalize();
    if d.contains(&0) {
        return Err(GaussError::DegenerateForm);
    }
    let det = d.iter().fold(1, |acc, &x| k.mul(acc, x));
    let chi = quadratic_residue_char(k);
    let g = basic_gauss_sum(psi);
    let v = g.pow(space.dim() as u64);
    Ok(if chi.sign(det).unwrap() == 1 { v } else { -v })
}

/// ψ-normalized sum as a 4th root of unity ζ_4^root.
#[derive(Clone, Debug, Serialize)]
pub struct SignResult {
    pub root: u8,
    pub dim: usize,
    pub q: u32,
    #[serde(serialize_with = "ser_cyc")]
    pub brute: CycNum,
    #[serde(serialize_with = "ser_cyc")]
    pub closed: CycNum,
}

fn ser_cyc<S: serde::Serializer>(x: &CycNum, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_string())
}

impl SignResult {
    /// ±1 when the root is real.
    pub fn sign(&self) -> Option<i8> {
        match self.root {
            0 => Some(1),
            2 => Some(-1),
            _ => None,
        }
    }

    pub fn value(&self) -> CycNum {
        cyc_root(4, self.root as u64)
    }
}

/// g(ψ)/√q as ζ_4^k: χ(a)·(−1)^{f−1}·ι^f with ι = 1 for p ≡ 1 (4) and i otherwise.
pub fn basic_phase(psi: &AddChar) -> u8 {
    let k = &psi.field;
    let chi = quadratic_residue_char(k);
    let mut r = if chi.sign(psi.a).unwrap() == 1 { 0u8 } else { 2 };
    if k.f() % 2 == 0 {
        r += 2;
    }
    if k.p() % 4 == 3 {
        r += k.f() as u8;
    }
    r % 4
}

/// Normalizes by q^{n/2}; both evaluation routes are computed and must agree.
pub fn normalized_sign(space: &QuadSpace, psi: &AddChar, opts: BruteOptions) -> Result<SignResult, GaussError> {
    let closed = gauss_sum_closed(space, psi)?;
    let brute = gauss_sum_brute(space, psi, opts)?;
    if brute != closed {
        return Err(GaussError::BruteClosedMismatch);
    }
    let root = quotient_root(space.field.q(), space.dim(), &brute, psi)?;
    Ok(SignResult { root, dim: space.dim(), q: space.field.q(), brute, closed })
}

/// Closed form only, for spaces beyond the enumeration bound.
pub fn normalized_sign_closed(space: &QuadSpace, psi: &AddChar) -> Result<SignResult, GaussError> {
    let closed = gauss_sum_closed(space, psi)?;
    let root = quotient_root(space.field.q(), space.dim(), &closed, psi)?;
    Ok(SignResult { root, dim: space.dim(), q: space.field.q(), brute: closed.clone(), closed })
}

fn quotient_root(q: u32, n: usize, value: &CycNum, psi: &AddChar) -> Result<u8, GaussError> {
    let qb = BigInt::from(q);
    if n % 2 == 0 {
        let quo = value.div_exact_int(&qb.pow(n as u32 / 2)).ok_or(GaussError::NonUnitQuotient)?;
        quo.fourth_root_index().ok_or(GaussError::NonUnitQuotient)
    } else {
        let g = basic_gauss_sum(psi).scale(&qb.pow((n as u32 - 1) / 2));
        let s = cyc_is_rational_sign_times(value, &g).map_err(|_| GaussError::NonUnitQuotient)?;
        let s = s.ok_or(GaussError::NonUnitQuotient)?;
        let phase = basic_phase(psi);
        Ok(if s == 1 { phase } else { (phase + 2) % 4 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(p: u32, e: u32) -> Arc<FqField> {
        FqField::new(p, e).unwrap()
    }

    #[test]
    fn spec_examples() {
        let k = f(3, 1);
        let psi = AddChar::standard(&k);
        let o = BruteOptions::default();
        let empty = QuadSpace::new(&k, vec![]).unwrap();
        assert_eq!(gauss_sum_brute(&empty, &psi, o).unwrap(), CycNum::one(3));
        assert_eq!(normalized_sign(&empty, &psi, o).unwrap().sign(), Some(1));
        let one = QuadSpace::new(&k, vec![vec![1]]).unwrap();
        let expect = &CycNum::one(3) + &cyc_root(3, 1).scale(&2.into());
        assert_eq!(gauss_sum_brute(&one, &psi, o).unwrap(), expect);
        assert_eq!(gauss_sum_closed(&one, &psi).unwrap(), expect);
        let id = QuadSpace::new(&k, vec![vec![1, 0], vec![0, 1]]).unwrap();
        assert_eq!(gauss_sum_brute(&id, &psi, o).unwrap(), CycNum::from_int(3, -3));
        assert_eq!(normalized_sign(&id, &psi, o).unwrap().sign(), Some(-1));
        let d12 = QuadSpace::new(&k, vec![vec![1, 0], vec![0, 2]]).unwrap();
        assert_eq!(gauss_sum_closed(&d12, &psi).unwrap(), CycNum::from_int(3, 3));
        assert_eq!(normalized_sign(&d12, &psi, o).unwrap().sign(), Some(1));
        let k5 = f(5, 1);
        let psi5 = AddChar::standard(&k5);
        let s5 = QuadSpace::new(&k5, vec![vec![1]]).unwrap();
        let want = &(&CycNum::one(5) + &cyc_root(5, 1).scale(&2.into())) + &cyc_root(5, 4).scale(&2.into());
        assert_eq!(gauss_sum_closed(&s5, &psi5).unwrap(), want);
    }

    #[test]
    fn errors() {
        let k = f(3, 1);
        let psi0 = AddChar::new(&k, 0);
        let s = QuadSpace::new(&k, vec![vec![1]]).unwrap();
        assert_eq!(gauss_sum_brute(&s, &psi0, BruteOptions::default()), Err(GaussError::TrivialAdditiveCharacter));
        let deg = QuadSpace::new(&k, vec![vec![1, 1], vec![1, 1]]).unwrap();
        assert_eq!(gauss_sum_closed(&deg, &AddChar::standard(&k)), Err(GaussError::DegenerateForm));
        let big = QuadSpace::new(&k, linalg::identity(16)).unwrap();
        assert!(matches!(
            gauss_sum_brute(&big, &AddChar::standard(&k), BruteOptions::default()),
            Err(GaussError::EnumerationTooLarge { .. })
        ));
        assert_eq!(QuadSpace::new(&k, vec![vec![1, 2], vec![0, 1]]).err(), Some(GaussError::NotSymmetric));
    }

    #[test]
    fn phase_matches_floating_point() {
        for &(p, e) in &[(3, 1), (5, 1), (7, 1), (3, 2), (5, 2), (3, 3), (11, 1), (13, 1)] {
            let k = f(p, e);
            for a in 1..k.q().min(6) {
                let psi = AddChar::new(&k, a);
                let g = basic_gauss_sum(&psi);
                let (re, im) = g.to_f64_pair();
                let z = num_complex::Complex64::new(re, im) / (k.q() as f64).sqrt();
                let w = num_complex::Complex64::i().powu(basic_phase(&psi) as u32);
                assert!((z - w).norm() < 1e-9, "p={p} f={e} a={a}");
            }
        }
    }

    #[test]
    fn g_squared() {
        for &(p, e) in &[(3, 1), (5, 1), (7, 1), (11, 1), (13, 1), (3, 2), (5, 2), (7, 2), (3, 3)] {
            let k = f(p, e);
            let psi = AddChar::standard(&k);
            let g = basic_gauss_sum(&psi);
            let chi = quadratic_residue_char(&k);
            let s = chi.sign(k.from_int(-1)).unwrap() as i64 * k.q() as i64;
            assert_eq!(&g * &g, CycNum::from_int(p as u64, s));
        }
    }

    #[test]
    fn pivot_repair() {
        let k = f(5, 1);
        let s = QuadSpace::new(&k, vec![vec![0, 1, 0], vec![1, 0, 2], vec![0, 2, 0]]).unwrap();
        let (p, d) = s.diagonalize();
        let pt = linalg::transpose(&p);
        let dd = linalg::mat_mul(&k, &linalg::mat_mul(&k, &pt, &s.gram), &p);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(dd[i][j], if i == j { d[i] } else { 0 });
            }
        }
    }
}
