//! Truncated equal-characteristic model of F• ⊂ F ⊂ E and of Ã = End_F(E).
//!
//! F = 𝐤((t)) with 𝐤 = F_p, E = 𝐤_E((π)) with 𝐤_E = F_{p^f} and π^e = u·t for a
//! fixed u ∈ 𝐤^×. The conjugations are t ↦ −t on F and π ↦ −π on E.
//!
//! An element of Ã is stored by its homogeneous components: the degree-k
//! component X^{(k)} is a tuple (L_0, …, L_{e−1}) of 𝐤-linear maps of 𝐤_E
//! (f×f matrices in the basis 1, x, …, x^{f−1}) acting by
//! X^{(k)}(π^m a) = π^{m+k}·L_{m mod e}(a). Degree is the valuation for the
//! standard chain 𝔏(m) = π^m𝔬_E, so v(m_π) = 1.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::finite_field::{FieldError, FqField};
use crate::linalg::{self, Mat};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("ramification index {0} is even")]
    EvenRamification(u32),
    #[error("p = {p} divides e = {e}")]
    WildRamification { p: u32, e: u32 },
    #[error("bad subfield chain: {0}")]
    BadChain(String),
    #[error("q = {0} is not a supported prime")]
    UnsupportedResidueField(u32),
    #[error("element is zero to the working precision")]
    ZeroElement,
    #[error("element is not in any field of the tower")]
    NotInSubfield,
    #[error("critical exponent {0} is even")]
    EvenExponent(i64),
    #[error("precision {have} too low, need {need}")]
    PrecisionTooLow { have: i64, need: i64 },
    #[error("matrix is not invertible over the power series ring")]
    NonUnitPivot,
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Serializable description of a tower.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TowerConfig {
    pub q: u32,
    pub e: u32,
    pub f: u32,
    /// (e_j, f_j) of the intermediate fields E_1, …, E_d, largest first.
    #[serde(default)]
    pub chain: Vec<(u32, u32)>,
    #[serde(default)]
    pub precision: Option<i64>,
    /// π^e = u·t; u ∈ 𝐤^× given as an integer.
    #[serde(default = "one")]
    pub u: u32,
    /// λ = λ₀·π^{2l} in h(x, y) = Tr_{E/F}(λ x σ(y)); λ₀ as base-p digits of 𝐤_E.
    #[serde(default = "one")]
    pub lambda0: u32,
    #[serde(default)]
    pub lambda_shift: i64,
    /// Reject p | e. Off by default: the equal-characteristic model only needs
    /// the normalized trace, which stays nondegenerate when p | e.
    #[serde(default)]
    pub strict_tame: bool,
}

fn one() -> u32 {
    1
}

impl TowerConfig {
    pub fn new(q: u32, e: u32, f: u32) -> Self {
        TowerConfig { q, e, f, chain: vec![], precision: None, u: 1, lambda0: 1, lambda_shift: 0, strict_tame: false }
    }
}

/// A flat tuple of e matrices of size f×f over 𝐤, index m·f² + r·f + c.
pub type Layer = Vec<u32>;

#[derive(Debug)]
pub struct TowerSpec {
    pub k: Arc<FqField>,
    pub ke: Arc<FqField>,
    pub p: u32,
    pub e: u32,
    pub f: u32,
    /// (e_j, f_j) for j = 0..=d+1, from E_0 = E down to E_{d+1} = F.
    pub chain: Vec<(u32, u32)>,
    pub u: u32,
    pub lambda0: u32,
    pub lambda_shift: i64,
    pub prec: i64,
    gram: Vec<u32>,
    gram_inv: Vec<u32>,
    mulmats: Vec<Vec<u32>>,
}

pub fn build_tower(cfg: &TowerConfig) -> Result<Arc<TowerSpec>, ModelError> {
    let p = cfg.q;
    if !crate::finite_field::SUPPORTED_PRIMES.contains(&p) {
        return Err(ModelError::UnsupportedResidueField(p));
    }
    if cfg.e % 2 == 0 {
        return Err(ModelError::EvenRamification(cfg.e));
    }
    if cfg.strict_tame && cfg.e % p == 0 {
        return Err(ModelError::WildRamification { p, e: cfg.e });
    }
    if cfg.f == 0 || cfg.f > 3 {
        return Err(ModelError::BadChain(format!("residue degree {} unsupported", cfg.f)));
    }
    let mut chain = vec![(cfg.e, cfg.f)];
    chain.extend(cfg.chain.iter().copied());
    chain.push((1, 1));
    let trivial = cfg.e * cfg.f == 1 && cfg.chain.is_empty();
    for w in chain.windows(2).filter(|_| !trivial) {
        let ((e0, f0), (e1, f1)) = (w[0], w[1]);
        if e1 == 0 || f1 == 0 || e0 % e1 != 0 || f0 % f1 != 0 || e0 * f0 == e1 * f1 {
            return Err(ModelError::BadChain(format!("({e1},{f1}) is not a proper subfield of ({e0},{f0})")));
        }
    }
    let k = FqField::new(p, 1)?;
    let ke = FqField::new(p, cfg.f)?;
    let u = cfg.u % p;
    if u == 0 {
        return Err(ModelError::BadChain("u must be a unit".into()));
    }
    let lambda0 = cfg.lambda0 % ke.q();
    if lambda0 == 0 {
        return Err(ModelError::BadChain("lambda0 must be a unit".into()));
    }
    let f = cfg.f as usize;
    let mut gram = vec![0u32; f * f];
    let basis: Vec<u32> = (0..f).map(|b| ke.pow(ke.x().max(1), b as u64)).collect();
    let basis: Vec<u32> = if cfg.f == 1 { vec![1] } else { basis };
    for i in 0..f {
        for j in 0..f {
            gram[i * f + j] = ke.trace(ke.mul(lambda0, ke.mul(basis[i], basis[j])));
        }
    }
    let gm: Mat = (0..f).map(|i| gram[i * f..(i + 1) * f].to_vec()).collect();
    let gi = linalg::inverse(&k, &gm).ok_or_else(|| ModelError::BadChain("degenerate trace form".into()))?;
    let gram_inv = gi.into_iter().flatten().collect();
    let mulmats = ke.elements().map(|c| ke.mul_matrix(c).into_iter().flatten().collect()).collect();
    let prec = cfg.precision.unwrap_or(2 * cfg.e as i64 + 8);
    Ok(Arc::new(TowerSpec {
        k,
        ke,
        p,
        e: cfg.e,
        f: cfg.f,
        chain,
        u,
        lambda0,
        lambda_shift: cfg.lambda_shift,
        prec,
        gram,
        gram_inv,
        mulmats,
    }))
}

/// Element of E as a finite Laurent polynomial Σ a_i π^i, a_i ∈ 𝐤_E.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct LocalElem {
    pub coeffs: BTreeMap<i64, u32>,
}

impl LocalElem {
    pub fn monomial(a: u32, i: i64) -> Self {
        let mut coeffs = BTreeMap::new();
        if a != 0 {
            coeffs.insert(i, a);
        }
        LocalElem { coeffs }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn valuation(&self) -> Option<i64> {
        self.coeffs.keys().next().copied()
    }

    pub fn add(&self, o: &LocalElem, ke: &FqField) -> LocalElem {
        let mut c = self.coeffs.clone();
        for (&i, &a) in &o.coeffs {
            let v = ke.add(*c.get(&i).unwrap_or(&0), a);
            if v == 0 {
                c.remove(&i);
            } else {
                c.insert(i, v);
            }
        }
        LocalElem { coeffs: c }
    }

    /// σ_E: π ↦ −π.
    pub fn sigma(&self, ke: &FqField) -> LocalElem {
        LocalElem {
            coeffs: self.coeffs.iter().map(|(&i, &a)| (i, if i % 2 == 0 { a } else { ke.neg(a) })).collect(),
        }
    }

    pub fn is_skew(&self, ke: &FqField) -> bool {
        self.sigma(ke) == self.neg(ke)
    }

    pub fn neg(&self, ke: &FqField) -> LocalElem {
        LocalElem { coeffs: self.coeffs.iter().map(|(&i, &a)| (i, ke.neg(a))).collect() }
    }
}

/// Homogeneous decomposition of an element of Ã, known modulo degree `prec`.
#[derive(Clone, Debug, PartialEq)]
pub struct GElem {
    pub comps: BTreeMap<i64, Layer>,
    pub prec: i64,
}

pub const EXACT: i64 = i64::MAX;

impl GElem {
    pub fn zero() -> Self {
        GElem { comps: BTreeMap::new(), prec: EXACT }
    }

    pub fn homog(k: i64, layer: Layer) -> Self {
        let mut g = Self::zero();
        if layer.iter().any(|&x| x != 0) {
            g.comps.insert(k, layer);
        }
        g
    }

    /// Lowest degree present, or the precision bound for a (truncated) zero.
    pub fn lower_val(&self) -> i64 {
        self.comps.keys().next().copied().unwrap_or(self.prec)
    }

    pub fn comp(&self, k: i64) -> Option<&Layer> {
        self.comps.get(&k)
    }

    pub fn is_zero(&self) -> bool {
        self.comps.is_empty()
    }

    pub fn truncated(mut self, n: i64) -> Self {
        self.prec = self.prec.min(n);
        let p = self.prec;
        self.comps.retain(|&k, _| k < p);
        self
    }
}

fn sat_add(a: i64, b: i64) -> i64 {
    if a == EXACT || b == EXACT {
        EXACT
    } else {
        a + b
    }
}

impl TowerSpec {
    pub fn q_e(&self) -> u32 {
        self.ke.q()
    }
    pub fn n(&self) -> u32 {
        self.e * self.f
    }
    pub fn d(&self) -> usize {
        self.chain.len() - 2
    }
    pub fn layer_len(&self) -> usize {
        (self.e * self.f * self.f) as usize
    }
    fn ff(&self) -> usize {
        (self.f * self.f) as usize
    }

    pub fn mulmat(&self, c: u32) -> &[u32] {
        &self.mulmats[c as usize]
    }

    pub fn layer_zero(&self) -> Layer {
        vec![0; self.layer_len()]
    }

    /// Every L_m equal to multiplication by c ∈ 𝐤_E.
    pub fn layer_scalar(&self, c: u32) -> Layer {
        let m = self.mulmat(c);
        let mut l = Vec::with_capacity(self.layer_len());
        for _ in 0..self.e {
            l.extend_from_slice(m);
        }
        l
    }

    pub fn one(&self) -> GElem {
        GElem::homog(0, self.layer_scalar(1))
    }

    /// m_x for x ∈ E.
    pub fn m_elem(&self, x: &LocalElem) -> GElem {
        let mut g = GElem::zero();
        for (&i, &a) in &x.coeffs {
            g.comps.insert(i, self.layer_scalar(a));
        }
        g
    }

    pub fn m_pi(&self) -> GElem {
        self.m_elem(&LocalElem::monomial(1, 1))
    }

    /// m_t: degree e with every L_m = u⁻¹.
    pub fn m_t(&self) -> GElem {
        let ui = self.k.inv(self.u).unwrap();
        GElem::homog(self.e as i64, self.layer_scalar(ui))
    }

    fn fmul_acc(&self, a: &[u32], b: &[u32], out: &mut [u32]) {
        let f = self.f as usize;
        let p = self.p;
        for r in 0..f {
            for c in 0..f {
                let mut s = out[r * f + c];
                for l in 0..f {
                    s += a[r * f + l] * b[l * f + c];
                }
                out[r * f + c] = s % p;
            }
        }
    }

    /// Composite of homogeneous pieces A (degree i) after B (degree j).
    pub fn compose_into(&self, a: &[u32], j: i64, b: &[u32], out: &mut [u32]) {
        let e = self.e as i64;
        let ff = self.ff();
        for m in 0..e {
            let am = (m + j).rem_euclid(e) as usize;
            let mu = m as usize;
            self.fmul_acc(&a[am * ff..(am + 1) * ff], &b[mu * ff..(mu + 1) * ff], &mut out[mu * ff..(mu + 1) * ff]);
        }
    }

    pub fn add(&self, x: &GElem, y: &GElem) -> GElem {
        self.lin(x, 1, y)
    }

    pub fn sub(&self, x: &GElem, y: &GElem) -> GElem {
        self.lin(x, self.p - 1, y)
    }

    /// x + c·y.
    pub fn lin(&self, x: &GElem, c: u32, y: &GElem) -> GElem {
        let prec = x.prec.min(y.prec);
        let mut comps = x.comps.clone();
        comps.retain(|&k, _| k < prec);
        for (&k, l) in &y.comps {
            if k >= prec {
                continue;
            }
            let ent = comps.entry(k).or_insert_with(|| vec![0; l.len()]);
            for (a, &b) in ent.iter_mut().zip(l) {
                *a = (*a + c * b) % self.p;
            }
        }
        comps.retain(|_, l| l.iter().any(|&v| v != 0));
        GElem { comps, prec }
    }

    pub fn neg(&self, x: &GElem) -> GElem {
        self.scale(x, self.p - 1)
    }

    pub fn scale(&self, x: &GElem, c: u32) -> GElem {
        let c = c % self.p;
        if c == 0 {
            return GElem { comps: BTreeMap::new(), prec: x.prec };
        }
        GElem {
            comps: x.comps.iter().map(|(&k, l)| (k, l.iter().map(|&v| v * c % self.p).collect())).collect(),
            prec: x.prec,
        }
    }

    pub fn mul(&self, x: &GElem, y: &GElem) -> GElem {
        let prec = sat_add(x.prec, y.lower_val()).min(sat_add(y.prec, x.lower_val()));
        let mut comps: BTreeMap<i64, Layer> = BTreeMap::new();
        for (&i, a) in &x.comps {
            for (&j, b) in &y.comps {
                let k = i + j;
                if k >= prec {
                    continue;
                }
                let out = comps.entry(k).or_insert_with(|| self.layer_zero());
                self.compose_into(a, j, b, out);
            }
        }
        comps.retain(|_, l| l.iter().any(|&v| v != 0));
        GElem { comps, prec }
    }

    pub fn mul3(&self, x: &GElem, y: &GElem, z: &GElem) -> GElem {
        self.mul(&self.mul(x, y), z)
    }

    /// Bracket [x, y] = xy − yx.
    pub fn bracket(&self, x: &GElem, y: &GElem) -> GElem {
        self.sub(&self.mul(x, y), &self.mul(y, x))
    }

    /// (1 + z)⁻¹ modulo degree n, for v(z) ≥ 1.
    pub fn inv_one_plus(&self, z: &GElem, n: i64) -> GElem {
        assert!(z.lower_val() >= 1, "inv_one_plus needs v(z) >= 1");
        let mz = self.neg(z).truncated(n);
        let mut acc = self.one().truncated(n);
        let mut term = self.one().truncated(n);
        loop {
            term = self.mul(&term, &mz).truncated(n);
            if term.is_zero() {
                break;
            }
            acc = self.add(&acc, &term);
        }
        acc.truncated(n)
    }

    /// Inverse of a homogeneous element with invertible layers.
    pub fn inv_homog(&self, k: i64, layer: &[u32]) -> Option<GElem> {
        let e = self.e as i64;
        let f = self.f as usize;
        let ff = self.ff();
        let mut out = self.layer_zero();
        for m in 0..e {
            let lm: Mat = (0..f).map(|r| layer[m as usize * ff + r * f..m as usize * ff + (r + 1) * f].to_vec()).collect();
            let inv = linalg::inverse(&self.k, &lm)?;
            let target = (m + k).rem_euclid(e) as usize;
            for r in 0..f {
                out[target * ff + r * f..target * ff + (r + 1) * f].copy_from_slice(&inv[r]);
            }
        }
        Some(GElem::homog(-k, out))
    }

    /// Inverse of an element whose leading component is invertible, mod degree n.
    pub fn inv_unit(&self, x: &GElem, n: i64) -> Option<GElem> {
        let (&k, lead) = x.comps.iter().next()?;
        let li = self.inv_homog(k, lead)?;
        // x = L(1 + L⁻¹(x − L))
        let rest = self.mul(&li, &self.sub(x, &GElem::homog(k, lead.clone())));
        let inner = self.inv_one_plus(&rest, n - k.min(0) + k.max(0));
        Some(self.mul(&inner, &li).truncated(n))
    }

    fn ft_apply(&self, l: &[u32], dst: &mut [u32], sign_neg: bool) {
        // dst = ± G⁻¹ lᵀ G
        let f = self.f as usize;
        let p = self.p;
        let mut t = vec![0u32; f * f];
        for r in 0..f {
            for c in 0..f {
                let mut s = 0;
                for a in 0..f {
                    s += l[a * f + r] * self.gram[a * f + c];
                }
                t[r * f + c] = s % p;
            }
        }
        for r in 0..f {
            for c in 0..f {
                let mut s = 0;
                for a in 0..f {
                    s += self.gram_inv[r * f + a] * t[a * f + c];
                }
                let v = s % p;
                dst[r * f + c] = if sign_neg && v != 0 { p - v } else { v };
            }
        }
    }

    /// Adjoint for h: X̄^{(k)}_{m'} = (−1)^k (L^{(k)}_{−m'−k−2l})^*, L^* = G⁻¹LᵀG.
    pub fn bar(&self, x: &GElem) -> GElem {
        let e = self.e as i64;
        let ff = self.ff();
        let mut out = GElem { comps: BTreeMap::new(), prec: x.prec };
        for (&k, l) in &x.comps {
            let mut nl = self.layer_zero();
            for mp in 0..e {
                let src = (-mp - k - 2 * self.lambda_shift).rem_euclid(e) as usize;
                let mpu = mp as usize;
                self.ft_apply(&l[src * ff..(src + 1) * ff], &mut nl[mpu * ff..(mpu + 1) * ff], k % 2 != 0);
            }
            out.comps.insert(k, nl);
        }
        out
    }

    /// α(X) = −X̄.
    pub fn alpha(&self, x: &GElem) -> GElem {
        self.neg(&self.bar(x))
    }

    pub fn layer_alpha(&self, k: i64, l: &[u32]) -> Layer {
        self.alpha(&GElem::homog(k, l.to_vec())).comps.remove(&k).unwrap_or_else(|| self.layer_zero())
    }

    /// Σ_a tr(L^{(0)}_a), the residue of Tr_{Ã/F}(X).
    pub fn tr0(&self, x: &GElem) -> Result<u32, ModelError> {
        if x.prec <= 0 {
            return Err(ModelError::PrecisionTooLow { have: x.prec, need: 1 });
        }
        Ok(match x.comps.get(&0) {
            None => 0,
            Some(l) => self.layer_trace(l),
        })
    }

    pub fn layer_trace(&self, l: &[u32]) -> u32 {
        let f = self.f as usize;
        let ff = self.ff();
        let mut s = 0;
        for m in 0..self.e as usize {
            for r in 0..f {
                s += l[m * ff + r * f + r];
            }
        }
        s % self.p
    }

    /// Tr_{Ã/F}(X) = Σ_j (ut)^j Σ_a tr(L^{(je)}_a), as t-coefficients from t^0.
    pub fn trace_series(&self, x: &GElem, terms: usize) -> Result<Vec<u32>, ModelError> {
        let need = terms as i64 * self.e as i64 - self.e as i64 + 1;
        if x.prec < need {
            return Err(ModelError::PrecisionTooLow { have: x.prec, need });
        }
        let mut out = vec![0; terms];
        for (j, o) in out.iter_mut().enumerate() {
            if let Some(l) = x.comps.get(&(j as i64 * self.e as i64)) {
                *o = self.k.mul(self.k.pow(self.u, j as u64), self.layer_trace(l));
            }
        }
        Ok(out)
    }

    pub fn valuation(&self, x: &GElem) -> Result<i64, ModelError> {
        x.comps.keys().next().copied().ok_or(ModelError::ZeroElement)
    }

    /// F-matrix of X over 𝐤((t)), basis π^a x^b at index a·f + b; entries map t-exponent ↦ coefficient.
    pub fn to_f_matrix(&self, x: &GElem) -> Vec<Vec<BTreeMap<i64, u32>>> {
        let n = self.n() as usize;
        let (e, f) = (self.e as i64, self.f as usize);
        let ff = self.ff();
        let mut out = vec![vec![BTreeMap::new(); n]; n];
        for (&k, l) in &x.comps {
            for a in 0..e {
                let ap = (a + k).rem_euclid(e);
                let j = (a + k).div_euclid(e);
                let uj = if j >= 0 {
                    self.k.pow(self.u, j as u64)
                } else {
                    self.k.inv(self.k.pow(self.u, (-j) as u64)).unwrap()
                };
                for bp in 0..f {
                    for b in 0..f {
                        let v = l[a as usize * ff + bp * f + b];
                        if v == 0 {
                            continue;
                        }
                        let ent = out[ap as usize * f + bp][a as usize * f + b].entry(j).or_insert(0);
                        *ent = (*ent + v * uj) % self.p;
                    }
                }
            }
        }
        out
    }

    /// det_F(X) mod t^terms for X ∈ 𝔄 with unit determinant.
    pub fn det_f(&self, x: &GElem, terms: usize) -> Result<Vec<u32>, ModelError> {
        let need = terms as i64 * self.e as i64;
        if x.prec < need {
            return Err(ModelError::PrecisionTooLow { have: x.prec, need });
        }
        let m = self.to_f_matrix(x);
        let ser: Vec<Vec<Vec<u32>>> = m
            .iter()
            .map(|row| {
                row.iter()
                    .map(|ent| {
                        let mut s = vec![0u32; terms];
                        for (&j, &v) in ent {
                            assert!(j >= 0, "det_f needs an integral matrix");
                            if (j as usize) < terms {
                                s[j as usize] = v;
                            }
                        }
                        s
                    })
                    .collect()
            })
            .collect();
        det_series(&self.k, ser, terms)
    }

    /// Matrix of X ∈ End_{E₁}(E) over 𝐤_E((t)) when E₁ = 𝐤_E((t)) (e₁ = 1, f₁ = f) and
    /// every layer is multiplication by a scalar ℓ_m ∈ 𝐤_E. Basis π^a.
    pub fn to_e1_matrix(&self, x: &GElem) -> Result<Vec<Vec<BTreeMap<i64, u32>>>, ModelError> {
        let e = self.e as i64;
        let ff = self.ff();
        let n = self.e as usize;
        let mut out = vec![vec![BTreeMap::new(); n]; n];
        for (&k, l) in &x.comps {
            for a in 0..e {
                let blk = &l[a as usize * ff..(a as usize + 1) * ff];
                let ell = self.scalar_of(blk).ok_or(ModelError::NotInSubfield)?;
                if ell == 0 {
                    continue;
                }
                let ap = (a + k).rem_euclid(e);
                let j = (a + k).div_euclid(e);
                let uj = if j >= 0 {
                    self.k.pow(self.u, j as u64)
                } else {
                    self.k.inv(self.k.pow(self.u, (-j) as u64)).unwrap()
                };
                let ent = out[ap as usize][a as usize].entry(j).or_insert(0);
                *ent = self.ke.add(*ent, self.ke.mul(ell, uj));
            }
        }
        Ok(out)
    }

    /// The c ∈ 𝐤_E whose multiplication matrix is `blk`, if any.
    pub fn scalar_of(&self, blk: &[u32]) -> Option<u32> {
        // first column is the image of 1, i.e. the digits of c
        let f = self.f as usize;
        let col: Vec<u32> = (0..f).map(|r| blk[r * f]).collect();
        let c = self.ke.from_coeffs(&col);
        if self.mulmat(c) == blk {
            Some(c)
        } else {
            None
        }
    }

    /// det over E₁ = 𝐤_E((t)) mod t^terms.
    pub fn det_e1(&self, x: &GElem, terms: usize) -> Result<Vec<u32>, ModelError> {
        let need = terms as i64 * self.e as i64;
        if x.prec < need {
            return Err(ModelError::PrecisionTooLow { have: x.prec, need });
        }
        let m = self.to_e1_matrix(x)?;
        let ser = m
            .iter()
            .map(|row| {
                row.iter()
                    .map(|ent| {
                        let mut s = vec![0u32; terms];
                        for (&j, &v) in ent {
                            assert!(j >= 0);
                            if (j as usize) < terms {
                                s[j as usize] = v;
                            }
                        }
                        s
                    })
                    .collect()
            })
            .collect();
        det_series(&self.ke, ser, terms)
    }

    /// True when X lies in the 𝐤-span of `space` at degree k (and nowhere else).
    pub fn layer_in_space(&self, layer: &[u32], space: &GradedSpace) -> bool {
        linalg::in_span(&self.k, &space.basis, layer)
    }

    pub fn random_layer<R: Rng>(&self, rng: &mut R) -> Layer {
        (0..self.layer_len()).map(|_| rng.gen_range(0..self.p)).collect()
    }

    pub fn random_in_space<R: Rng>(&self, rng: &mut R, space: &GradedSpace) -> Layer {
        let mut l = self.layer_zero();
        for b in &space.basis {
            let c = rng.gen_range(0..self.p);
            for (x, &y) in l.iter_mut().zip(b) {
                *x = (*x + c * y) % self.p;
            }
        }
        l
    }

    /// Which chain level j (0 = E) contains x, searching from the smallest field.
    pub fn subfield_level(&self, x: &LocalElem) -> Option<usize> {
        (0..self.chain.len()).rev().find(|&j| self.in_level(x, j))
    }

    pub fn in_level(&self, x: &LocalElem, j: usize) -> bool {
        let (ej, fj) = self.chain[j];
        let step = (self.e / ej) as i64;
        x.coeffs.iter().all(|(&i, &a)| i.rem_euclid(step) == 0 && self.ke.in_subfield(a, fj))
    }

    /// gr^k(B̃_j): layers with L_{m+e/e_j} = L_m, each commuting with 𝐤_{E_j}.
    pub fn level_space(&self, j: usize, k: i64) -> GradedSpace {
        let (ej, fj) = self.chain[j];
        let period = (self.e / ej) as usize;
        let f = self.f as usize;
        let ff = self.ff();
        let g = self.ke.subfield_generator(fj);
        let gm = self.mulmat(g);
        // commutant of multiplication by g inside M_f(𝐤)
        let mut rows = Vec::new();
        for r in 0..f {
            for c in 0..f {
                let mut row = vec![0u32; ff];
                // (L·G − G·L)_{rc} = Σ_a L_{ra}G_{ac} − G_{ra}L_{ac}
                for a in 0..f {
                    row[r * f + a] = (row[r * f + a] + gm[a * f + c]) % self.p;
                    row[a * f + c] = (row[a * f + c] + self.p - gm[r * f + a]) % self.p;
                }
                rows.push(row);
            }
        }
        let comm = linalg::kernel(&self.k, &rows, ff);
        let mut basis = Vec::new();
        for m0 in 0..period {
            for v in &comm {
                let mut l = self.layer_zero();
                for m in (m0..self.e as usize).step_by(period) {
                    l[m * ff..(m + 1) * ff].copy_from_slice(v);
                }
                basis.push(l);
            }
        }
        GradedSpace { grade: k, basis, label: format!("gr^{k} B_{j}") }
    }

    /// {layers L of degree k : [X, γ^{(i)}] = 0 for every homogeneous part of γ}.
    pub fn centralizer_layers(&self, gamma: &LocalElem, k: i64) -> GradedSpace {
        let n = self.layer_len();
        let ff = self.ff();
        let e = self.e as i64;
        let mut rows: Vec<Vec<u32>> = Vec::new();
        let mut cols: Vec<Vec<u32>> = Vec::new();
        for idx in 0..n {
            let mut l = self.layer_zero();
            l[idx] = 1;
            let mut img = Vec::new();
            for (&i, &a) in &gamma.coeffs {
                let c = self.mulmat(a);
                for m in 0..e {
                    let src = (m + i).rem_euclid(e) as usize;
                    let mut lc = vec![0u32; ff];
                    self.fmul_acc(&l[src * ff..(src + 1) * ff], c, &mut lc);
                    let mut cl = vec![0u32; ff];
                    self.fmul_acc(c, &l[m as usize * ff..(m as usize + 1) * ff], &mut cl);
                    img.extend(lc.iter().zip(&cl).map(|(&x, &y)| (x + self.p - y) % self.p));
                }
            }
            cols.push(img);
        }
        if let Some(h) = cols.first().map(|c| c.len()) {
            for r in 0..h {
                rows.push(cols.iter().map(|c| c[r]).collect());
            }
        }
        let basis = if rows.is_empty() {
            (0..n).map(|i| {
                let mut l = self.layer_zero();
                l[i] = 1;
                l
            }).collect()
        } else {
            linalg::kernel(&self.k, &rows, n)
        };
        GradedSpace { grade: k, basis, label: format!("gr^{k} Z(gamma)") }
    }

    /// α-fixed subspace of a graded space (assumed α-stable).
    pub fn alpha_fixed(&self, space: &GradedSpace) -> GradedSpace {
        let k = space.grade;
        let diffs: Vec<Vec<u32>> = space
            .basis
            .iter()
            .map(|b| {
                let a = self.layer_alpha(k, b);
                a.iter().zip(b).map(|(&x, &y)| (x + self.p - y) % self.p).collect()
            })
            .collect();
        let m = linalg::transpose(&diffs);
        let ker = if space.basis.is_empty() {
            vec![]
        } else if m.is_empty() {
            linalg::identity(space.basis.len())
        } else {
            linalg::kernel(&self.k, &m, space.basis.len())
        };
        let basis = ker
            .iter()
            .map(|c| {
                let mut l = self.layer_zero();
                for (ci, b) in c.iter().zip(&space.basis) {
                    for (x, &y) in l.iter_mut().zip(b) {
                        *x = (*x + ci * y) % self.p;
                    }
                }
                l
            })
            .collect();
        GradedSpace { grade: k, basis, label: format!("{}^alpha", space.label) }
    }
}

/// det of a square matrix over 𝐤[[t]]/t^terms, pivoting on units only.
pub fn det_series(k: &FqField, mut m: Vec<Vec<Vec<u32>>>, terms: usize) -> Result<Vec<u32>, ModelError> {
    let n = m.len();
    let mut det = vec![0u32; terms];
    det[0] = 1;
    for c in 0..n {
        let pr = (c..n).find(|&r| m[r][c][0] != 0).ok_or(ModelError::NonUnitPivot)?;
        if pr != c {
            m.swap(pr, c);
            det = det.iter().map(|&x| k.neg(x)).collect();
        }
        let piv = m[c][c].clone();
        det = ser_mul(k, &det, &piv);
        let inv = ser_inv(k, &piv);
        for r in c + 1..n {
            if m[r][c].iter().all(|&x| x == 0) {
                continue;
            }
            let fct = ser_mul(k, &m[r][c], &inv);
            for j in c..n {
                let t = ser_mul(k, &fct, &m[c][j]);
                for (a, b) in m[r][j].iter_mut().zip(t) {
                    *a = k.sub(*a, b);
                }
            }
        }
    }
    Ok(det)
}

pub fn ser_mul(k: &FqField, a: &[u32], b: &[u32]) -> Vec<u32> {
    let n = a.len();
    let mut out = vec![0u32; n];
    for i in 0..n {
        if a[i] == 0 {
            continue;
        }
        for j in 0..n - i {
            out[i + j] = k.add(out[i + j], k.mul(a[i], b[j]));
        }
    }
    out
}

pub fn ser_inv(k: &FqField, a: &[u32]) -> Vec<u32> {
    let n = a.len();
    let a0 = k.inv(a[0]).expect("unit series");
    let mut out = vec![0u32; n];
    out[0] = a0;
    for i in 1..n {
        let mut s = 0;
        for j in 1..=i {
            s = k.add(s, k.mul(a[j], out[i - j]));
        }
        out[i] = k.neg(k.mul(s, a0));
    }
    out
}

/// A 𝐤-subspace of the degree-`grade` layers.
#[derive(Clone, Debug)]
pub struct GradedSpace {
    pub grade: i64,
    pub basis: Vec<Layer>,
    pub label: String,
}

impl GradedSpace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

pub fn embed_e_in_matrices(t: &TowerSpec, x: &LocalElem) -> GElem {
    t.m_elem(x)
}

pub fn valuation(t: &TowerSpec, x: &GElem) -> Result<i64, ModelError> {
    t.valuation(x)
}

/// 𝔓^k of the centralizer of γ, as the degree-k graded piece.
pub fn centralizer_filtration(t: &TowerSpec, gamma: &LocalElem, k: i64) -> Result<GradedSpace, ModelError> {
    if t.subfield_level(gamma).is_none() {
        return Err(ModelError::NotInSubfield);
    }
    if k >= t.prec {
        return Ok(GradedSpace { grade: k, basis: vec![], label: format!("gr^{k} beyond precision") });
    }
    Ok(t.centralizer_layers(gamma, k))
}

/// s_j = (r_j − 1)/2 for odd jumps r_0 < r_1 < … (one per level j = 0..d).
pub fn half_jumps(t: &TowerSpec, r: &[i64]) -> Result<Vec<i64>, ModelError> {
    if r.len() != t.d() + 1 {
        return Err(ModelError::BadChain(format!("{} jumps for {} levels", r.len(), t.d() + 1)));
    }
    r.iter()
        .map(|&x| if x % 2 == 0 || x < 1 { Err(ModelError::EvenExponent(x)) } else { Ok((x - 1) / 2) })
        .collect()
}

/// Level index of gr^k(𝔍): #{j : s_j + 1 ≤ k}; 𝔍 has nothing below grade 0.
pub fn j_level(s: &[i64], k: i64) -> usize {
    s.iter().filter(|&&sj| sj < k).count()
}

fn check_prec(t: &TowerSpec, s: &[i64]) -> Result<(), ModelError> {
    let need = s.iter().copied().max().unwrap_or(0) + 3;
    if t.prec < need {
        return Err(ModelError::PrecisionTooLow { have: t.prec, need });
    }
    Ok(())
}

/// α-fixed 𝐤-dimension of V/W for α-stable W ⊆ V at one grade.
pub fn alpha_quotient_dim(t: &TowerSpec, v: &GradedSpace, w: &GradedSpace) -> usize {
    t.alpha_fixed(v).dim() - t.alpha_fixed(w).dim()
}

impl TowerSpec {
    pub fn empty_space(&self, k: i64) -> GradedSpace {
        GradedSpace { grade: k, basis: vec![], label: format!("0 at {k}") }
    }

    /// gr^k of 𝔍, 𝔥¹ (k ≥ 1 part of 𝔍), shifted by ϖ^{shift}.
    fn jspace(&self, s: &[i64], k: i64, shift: i64, h1: bool) -> GradedSpace {
        let g = k - shift;
        if g < 0 || (h1 && g < 1) {
            return self.empty_space(k);
        }
        let mut sp = self.level_space(j_level(s, g), k);
        sp.grade = k;
        sp
    }
}

/// Pieces 𝔚_{z,j} = gr^{s_j}(B̃_{j+1}) / gr^{s_j}(B̃_j), by representatives.
pub fn build_wz(t: &TowerSpec, r: &[i64]) -> Result<Vec<GradedSpace>, ModelError> {
    let s = half_jumps(t, r)?;
    check_prec(t, &s)?;
    let mut out = Vec::new();
    for (j, &sj) in s.iter().enumerate() {
        let big = t.level_space(j + 1, sj);
        let small = t.level_space(j, sj);
        let dual = t.level_space(j, -sj);
        // representatives orthogonal to gr^{-s_j}(B̃_j) under tr0
        let rows: Vec<Vec<u32>> = dual
            .basis
            .iter()
            .map(|y| big.basis.iter().map(|x| t.pair(sj, x, y)).collect())
            .collect();
        let coeffs = if rows.is_empty() {
            linalg::identity(big.dim())
        } else {
            linalg::kernel(&t.k, &rows, big.dim())
        };
        let mut reps: Vec<Layer> = coeffs.iter().map(|c| t.combine(c, &big.basis)).collect();
        let mut test = small.basis.clone();
        test.extend(reps.iter().cloned());
        if reps.len() + small.dim() != big.dim() || linalg::rank(&t.k, &test) != big.dim() {
            reps = linalg::complement(&t.k, &small.basis, &big.basis);
        }
        out.push(GradedSpace { grade: sj, basis: reps, label: format!("W_z,{j}") });
    }
    Ok(out)
}

/// Exponents (over q) of the Iwahori-type indices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IwahoriIndices {
    pub q: u32,
    pub f: u32,
    pub c_y_exp: u32,
    pub c_z_exp: u32,
    /// exponent of [J_P^+ : ζ J_P^+ ζ⁻¹]
    pub delta_exp: u32,
}

impl IwahoriIndices {
    pub fn c_y(&self) -> u128 {
        (self.q as u128).pow(self.c_y_exp)
    }
    pub fn c_z(&self) -> u128 {
        (self.q as u128).pow(self.c_z_exp)
    }
    pub fn delta(&self) -> u128 {
        (self.q as u128).pow(self.delta_exp)
    }
    /// Exponents as powers of q_E.
    pub fn qe_exponents(&self) -> (u32, u32) {
        (self.c_y_exp / self.f, self.c_z_exp / self.f)
    }
}

/// Indices from the graded pieces of 𝔍, 𝔥¹ and their ϖ-shifts in the block model:
/// J_P^+ = (𝔍, ϖ⁻¹𝔥¹), J_P^- = (𝔥¹, ϖ𝔍), and the Y-coordinates counted on α-fixed parts.
pub fn iwahori_indices(t: &TowerSpec, r: &[i64]) -> Result<IwahoriIndices, ModelError> {
    let s = half_jumps(t, r)?;
    check_prec(t, &s)?;
    let top = s.iter().copied().max().unwrap_or(0) + 2;
    let f = t.f;
    let dim = |sp: &GradedSpace| sp.dim() as u32;
    // [𝔍 : 𝔥¹] = q^f
    let mut cy = f;
    let mut cz = 0u32;
    let mut delta = 0u32;
    for k in -1..=top {
        let hm1 = t.jspace(&s, k, -1, true);
        let jm1 = t.jspace(&s, k, -1, false);
        let jj = t.jspace(&s, k, 0, false);
        let pj = t.jspace(&s, k, 1, false);
        let ph = t.jspace(&s, k, 1, true);
        cy += alpha_quotient_dim(t, &hm1, &pj) as u32;
        cz += dim(&hm1) - dim(&jj).min(dim(&hm1));
        cz += alpha_quotient_dim(t, &jm1, &hm1) as u32;
        delta += dim(&jj) - dim(&pj);
        delta += alpha_quotient_dim(t, &hm1, &ph) as u32;
    }
    Ok(IwahoriIndices { q: t.p, f, c_y_exp: cy, c_z_exp: cz, delta_exp: delta })
}

/// α-fixed representatives of (gr^k 𝔥¹ / gr^k ϖ𝔍) for k ≥ 1: the free part of Y on the y-side.
pub fn y_fiber_spaces(t: &TowerSpec, r: &[i64]) -> Result<Vec<GradedSpace>, ModelError> {
    let s = half_jumps(t, r)?;
    check_prec(t, &s)?;
    let top = s.iter().copied().max().unwrap_or(0) + 2;
    let mut out = Vec::new();
    for k in 1..=top {
        let h = t.alpha_fixed(&t.jspace(&s, k, 0, true));
        let w = t.alpha_fixed(&t.jspace(&s, k, 1, false));
        let reps = linalg::complement(&t.k, &w.basis, &h.basis);
        if !reps.is_empty() {
            out.push(GradedSpace { grade: k, basis: reps, label: format!("Y fiber {k}") });
        }
    }
    Ok(out)
}

impl TowerSpec {
    /// tr0 of the composite of x (degree k) after y (degree −k).
    pub fn pair(&self, k: i64, x: &[u32], y: &[u32]) -> u32 {
        let mut out = self.layer_zero();
        self.compose_into(x, -k, y, &mut out);
        self.layer_trace(&out)
    }

    pub fn combine(&self, c: &[u32], basis: &[Layer]) -> Layer {
        let mut l = self.layer_zero();
        for (ci, b) in c.iter().zip(basis) {
            if *ci == 0 {
                continue;
            }
            for (x, &y) in l.iter_mut().zip(b) {
                *x = (*x + ci * y) % self.p;
            }
        }
        l
    }
}
