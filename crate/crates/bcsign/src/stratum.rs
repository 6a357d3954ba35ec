//! Skew simple strata over the model tower, their simple characters, the
//! forms D_j and the sign ε_z, and brute-force oracles for b_y and b_z.

use std::sync::Arc;

use num_bigint::BigInt;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::cyclotomic::CycNum;
use crate::finite_field::{quadratic_residue_char, AddChar, FieldError, MultChar};
use crate::gauss::{self, BruteOptions, GaussError, QuadSpace, SignResult};
use crate::hecke_bc::LevelZeroChar;
use crate::linalg;
use crate::local_model::{self, GElem, GradedSpace, Layer, LocalElem, ModelError, TowerSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StratumError {
    #[error("c must have negative valuation")]
    NonNegativeValuation,
    #[error("c_{0} is not a monomial")]
    NotMonomial(usize),
    #[error("c_{0} is not skew")]
    NotSkew(usize),
    #[error("c_{0} does not lie in E_{0}")]
    NotInSubfield(usize),
    #[error("c_{0} is not minimal over the next field of the chain")]
    NotMinimal(usize),
    #[error("jumps must increase strictly with the level")]
    BadOrder,
    #[error("{0} levels are not supported")]
    UnsupportedDepth(usize),
    #[error("y must be nonzero")]
    ZeroY,
    #[error("element is not in the domain of the character")]
    NotInDomain,
    #[error("precision {have} too low, need {need}")]
    PrecisionTooLow { have: i64, need: i64 },
    #[error("outside the exactness window: {0}")]
    LinearizationInvalid(String),
    #[error("no Y solves Y - α(Y) = Xα(X) in the required lattice")]
    NoSolution,
    #[error("X is not a sum of 𝔚_z representatives")]
    DegenerateX,
    #[error("T_y integrand not constant: {0} of {1} summands differ")]
    ConstancyViolated(usize, usize),
    #[error("path A = {a}, path B = {b}")]
    PathMismatch { a: String, b: String },
    #[error("enumeration of {size} points exceeds the bound {bound}")]
    EnumerationTooLarge { size: u128, bound: u64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Gauss(#[from] GaussError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
pub enum Side {
    GL,
    U,
}

/// [Λ, r, 0, β] with β = Σ c_j, c_j ∈ E_j monomial and v(c_j) = −r_j.
#[derive(Debug, Clone)]
pub struct StratumSpec {
    pub tower: Arc<TowerSpec>,
    pub c: Vec<LocalElem>,
    pub r: Vec<i64>,
    pub s: Vec<i64>,
}

impl StratumSpec {
    pub fn new(tower: Arc<TowerSpec>, c: Vec<LocalElem>) -> Result<Self, StratumError> {
        let st = Self::without_minimality(tower, c)?;
        for j in 0..st.c.len() {
            if !minimality_at(&st.tower, &st.c[j], j)? {
                return Err(StratumError::NotMinimal(j));
            }
        }
        Ok(st)
    }

    /// Shape checks only; used to exhibit degenerate forms for non-minimal data.
    pub fn without_minimality(tower: Arc<TowerSpec>, c: Vec<LocalElem>) -> Result<Self, StratumError> {
        if c.len() != tower.d() + 1 {
            return Err(StratumError::UnsupportedDepth(c.len()));
        }
        let mut r = Vec::new();
        for (j, cj) in c.iter().enumerate() {
            if cj.coeffs.len() != 1 {
                return Err(StratumError::NotMonomial(j));
            }
            let v = cj.valuation().unwrap();
            if v >= 0 {
                return Err(StratumError::NonNegativeValuation);
            }
            if !cj.is_skew(&tower.ke) {
                return Err(StratumError::NotSkew(j));
            }
            if !tower.in_level(cj, j) {
                return Err(StratumError::NotInSubfield(j));
            }
            r.push(-v);
        }
        if r.windows(2).any(|w| w[0] >= w[1]) {
            return Err(StratumError::BadOrder);
        }
        let s = local_model::half_jumps(&tower, &r)?;
        Ok(StratumSpec { tower, c, r, s })
    }

    pub fn d(&self) -> usize {
        self.c.len() - 1
    }

    /// β = Σ c_j.
    pub fn beta(&self) -> LocalElem {
        self.c.iter().fold(LocalElem::zero(), |acc, x| acc.add(x, &self.tower.ke))
    }

    pub fn wz(&self) -> Result<Vec<GradedSpace>, StratumError> {
        Ok(local_model::build_wz(&self.tower, &self.r)?)
    }

    /// dim over 𝐤
    pub fn wz_dim(&self) -> Result<usize, StratumError> {
        Ok(self.wz()?.iter().map(|g| g.dim()).sum())
    }

    /// 𝔥¹ membership at grade k (k ≥ 1).
    pub fn h1_space(&self, k: i64) -> GradedSpace {
        self.tower.level_space(local_model::j_level(&self.s, k), k)
    }
}

fn ad_kernel_dim(t: &TowerSpec, c: &LocalElem, ambient: &GradedSpace) -> usize {
    let mc = t.m_elem(c);
    let cols: Vec<Vec<u32>> = ambient
        .basis
        .iter()
        .map(|b| {
            let x = GElem::homog(0, b.clone());
            let br = t.bracket(&x, &mc);
            br.comps.values().next().cloned().unwrap_or_else(|| t.layer_zero())
        })
        .collect();
    if cols.is_empty() {
        return 0;
    }
    let m = linalg::transpose(&cols);
    ambient.dim() - linalg::rank(&t.k, &m)
}

/// c minimal over E_{j+1} with E_{j+1}[c] = E_j: the kernel of X ↦ Xc − cX on
/// gr^0 of the centralizer of E_{j+1} is exactly gr^0 of the centralizer of E_j.
pub fn minimality_at(t: &TowerSpec, c: &LocalElem, j: usize) -> Result<bool, StratumError> {
    match c.valuation() {
        Some(v) if v < 0 => {}
        _ => return Err(StratumError::NonNegativeValuation),
    }
    if !c.coeffs.keys().all(|&i| i == c.valuation().unwrap()) {
        return Err(StratumError::NotMonomial(j));
    }
    let big = t.level_space(j + 1, 0);
    let small = t.level_space(j, 0);
    Ok(ad_kernel_dim(t, c, &big) == small.dim())
}

/// Minimality of c as a generator of E over F.
pub fn minimality_check(t: &TowerSpec, c: &LocalElem) -> Result<bool, StratumError> {
    match c.valuation() {
        Some(v) if v < 0 => {}
        _ => return Err(StratumError::NonNegativeValuation),
    }
    let big = t.level_space(t.chain.len() - 1, 0);
    let small = t.level_space(0, 0);
    Ok(ad_kernel_dim(t, c, &big) == small.dim())
}

/// m_{w}·(Xc − cX) with w = y⁻¹π, for the homogeneous X.
fn twisted_commutator(t: &TowerSpec, w: &GElem, c: &GElem, x: &GElem) -> GElem {
    t.mul(w, &t.bracket(x, c))
}

/// w = ū·π: the uniformizer twisted by a residue unit (y⁻¹ in the D_y notation).
fn unit_pi(t: &TowerSpec, unit: u32) -> GElem {
    t.m_elem(&LocalElem::monomial(unit, 1))
}

/// Gram matrices of D_j(X, Y) = tr0(y⁻¹ϖ(Xc_j − c_jX)α(Y)) on the 𝔚_{z,j} bases.
pub fn build_dj_forms(s: &StratumSpec, y: u32) -> Result<Vec<QuadSpace>, StratumError> {
    let t = &s.tower;
    let yi = t.ke.inv(y).ok_or(StratumError::ZeroY)?;
    forms_for_unit(s, yi)
}

fn forms_for_unit(s: &StratumSpec, w_unit: u32) -> Result<Vec<QuadSpace>, StratumError> {
    let t = &s.tower;
    let w = unit_pi(t, w_unit);
    let wz = s.wz()?;
    let mut out = Vec::new();
    for (j, space) in wz.iter().enumerate() {
        let c = t.m_elem(&s.c[j]);
        let xs: Vec<GElem> = space.basis.iter().map(|b| GElem::homog(space.grade, b.clone())).collect();
        let left: Vec<GElem> = xs.iter().map(|x| twisted_commutator(t, &w, &c, x)).collect();
        let right: Vec<GElem> = xs.iter().map(|x| t.alpha(x)).collect();
        let n = xs.len();
        let mut gram = linalg::zeros(n, n);
        for a in 0..n {
            for b in 0..n {
                gram[a][b] = t.tr0(&t.mul(&left[a], &right[b]))?;
            }
        }
        out.push(QuadSpace::new(&t.k, gram)?);
    }
    Ok(out)
}

fn assemble(t: &TowerSpec, forms: &[QuadSpace]) -> QuadSpace {
    forms
        .iter()
        .fold(QuadSpace { field: t.k.clone(), gram: vec![] }, |acc, f| acc.perp(f))
}

fn scaled(space: &QuadSpace, c: u32) -> QuadSpace {
    let k = &space.field;
    QuadSpace { field: k.clone(), gram: space.gram.iter().map(|r| r.iter().map(|&x| k.mul(c, x)).collect()).collect() }
}

/// The form whose Gauss sum is Σ_X Π_j ψ(tr0(w(c_jX − Xc_j)α(X))).
pub fn sign_form(s: &StratumSpec, w_unit: u32) -> Result<QuadSpace, StratumError> {
    let t = &s.tower;
    let d = assemble(t, &forms_for_unit(s, w_unit)?);
    Ok(scaled(&d, t.k.neg(1)))
}

/// ε_z(ϖ_E, 𝐬, ψ), brute force and closed form, normalized by (#𝔚_z)^{1/2}.
pub fn epsilon_z(s: &StratumSpec, psi: &AddChar, opts: BruteOptions) -> Result<SignResult, StratumError> {
    epsilon_z_at(s, psi, 1, opts)
}

/// Same with ϖ_E replaced by ū·ϖ_E.
pub fn epsilon_z_at(s: &StratumSpec, psi: &AddChar, unit: u32, opts: BruteOptions) -> Result<SignResult, StratumError> {
    Ok(gauss::normalized_sign(&sign_form(s, unit)?, psi, opts)?)
}

#[derive(Clone, Debug, Serialize)]
pub struct InvarianceReport {
    /// (a, root) for ψ_a, a ∈ 𝐤^×
    pub psi_twists: Vec<(u32, u8)>,
    /// (unit, root, expected root)
    pub rechoice: Vec<(u32, u8, u8)>,
    pub base_root: u8,
    pub ok: bool,
}

/// Exhaustive ψ-twist and ϖ_E-rechoice checks.
pub fn epsilon_z_invariance(s: &StratumSpec, opts: BruteOptions) -> Result<InvarianceReport, StratumError> {
    let t = &s.tower;
    let base = epsilon_z(s, &AddChar::standard(&t.k), opts)?;
    let mut psi_twists = Vec::new();
    for a in 1..t.p {
        let r = epsilon_z(s, &AddChar::new(&t.k, a), opts)?;
        psi_twists.push((a, r.root));
    }
    let chi = quadratic_residue_char(&t.ke).pow(t.f as u64 - 1);
    let mut rechoice = Vec::new();
    for u in 1..t.q_e() {
        let r = epsilon_z_at(s, &AddChar::standard(&t.k), u, opts)?;
        let flip = if chi.exponent(u)? == 0 { 0 } else { 2 };
        rechoice.push((u, r.root, (base.root + flip) % 4));
    }
    let ok = psi_twists.iter().all(|&(_, r)| r == base.root) && rechoice.iter().all(|&(_, a, b)| a == b);
    Ok(InvarianceReport { psi_twists, rechoice, base_root: base.root, ok })
}

/// Simple character data: ψ on 𝐤 and ξ_j parameters b_j ∈ E_j (j = 1..=d+1).
#[derive(Clone, Debug)]
pub struct SimpleCharSpec {
    pub stratum: Arc<StratumSpec>,
    pub psi: AddChar,
    pub xi: Vec<LocalElem>,
    pub side: Side,
}

impl SimpleCharSpec {
    /// ξ_1 from c_1 (d = 1), ξ_F trivial.
    pub fn standard(stratum: Arc<StratumSpec>) -> Self {
        let t = stratum.tower.clone();
        let mut xi = Vec::new();
        for j in 1..=stratum.d() {
            xi.push(stratum.c[j].clone());
        }
        xi.push(LocalElem::zero());
        SimpleCharSpec { psi: AddChar::standard(&t.k), stratum, xi, side: Side::GL }
    }

    pub fn with_xi_f(mut self, b: u32) -> Self {
        let e = self.stratum.tower.e as i64;
        *self.xi.last_mut().unwrap() = LocalElem::monomial(b % self.stratum.tower.p, -e);
        self
    }

    pub fn with_side(&self, side: Side) -> Self {
        SimpleCharSpec { side, ..self.clone() }
    }

    fn tower(&self) -> &TowerSpec {
        &self.stratum.tower
    }

    /// Coefficient β of π^{−e} in b_j, after checking the linear window.
    fn xi_coeff(&self, j: usize) -> Result<u32, StratumError> {
        let t = self.tower();
        let b = &self.xi[j - 1];
        if !t.in_level(b, j) {
            return Err(StratumError::LinearizationInvalid(format!("b_{j} not in E_{j}")));
        }
        let e = t.e as i64;
        if b.valuation().is_some_and(|v| v < -e) {
            return Err(StratumError::LinearizationInvalid(format!("b_{j} below depth one")));
        }
        Ok(*b.coeffs.get(&-e).unwrap_or(&0))
    }

    pub fn required_precision(&self) -> i64 {
        let st = &self.stratum;
        (2 * self.tower().e as i64).max(st.r.iter().copied().max().unwrap_or(1) + 1)
    }

    fn check_domain(&self, g: &GElem) -> Result<GElem, StratumError> {
        let t = self.tower();
        let need = self.required_precision();
        if g.prec < need {
            return Err(StratumError::PrecisionTooLow { have: g.prec, need });
        }
        let gm1 = t.sub(g, &t.one());
        for (&k, l) in &gm1.comps {
            if k < 1 {
                return Err(StratumError::NotInDomain);
            }
            if k <= self.stratum.s.iter().copied().max().unwrap_or(0) + 1 && !t.layer_in_space(l, &self.stratum.h1_space(k)) {
                return Err(StratumError::NotInDomain);
            }
        }
        if self.side == Side::U {
            let prod = t.mul(&t.bar(g), g);
            if !t.sub(&prod, &t.one()).is_zero() {
                return Err(StratumError::NotInDomain);
            }
        }
        Ok(gm1)
    }

    /// Exponent of ζ_p in θ̃(g) (GL side) or θ(g) (U side).
    pub fn exponent(&self, g: &GElem) -> Result<u32, StratumError> {
        let t = self.tower();
        let st = &self.stratum;
        if st.d() > 1 {
            return Err(StratumError::UnsupportedDepth(st.d() + 1));
        }
        let gm1 = self.check_domain(g)?;
        let k = &t.k;
        let n = g.prec;
        let mut acc = 0u32;
        let psi_c = |c: &LocalElem, x: &GElem| -> Result<u32, StratumError> { Ok(t.tr0(&t.mul(&t.m_elem(c), x))?) };
        let xi_f = self.xi_coeff(st.d() + 1)?;
        if xi_f != 0 {
            let det = t.det_f(g, 2)?;
            acc = k.add(acc, k.mul(k.mul(xi_f, k.inv(t.u).unwrap()), det[1]));
        }
        if st.d() == 0 {
            acc = k.add(acc, psi_c(&st.c[0], &gm1)?);
        } else {
            if st.r[0] != 1 || t.chain[1].0 != 1 {
                return Err(StratumError::LinearizationInvalid("d = 1 needs r_0 = 1 and E_1/F unramified".into()));
            }
            // g = b·w with b ∈ U¹(B̃_1), w ∈ U^{s_1+1}(Ã)
            let s1 = st.s[1];
            let mut b = t.one();
            for grade in st.s[0] + 1..=s1 {
                let rest = t.mul(&t.inv_one_plus(&t.sub(&b, &t.one()), n), g).truncated(n);
                if let Some(l) = rest.comp(grade) {
                    if !t.layer_in_space(l, &t.level_space(1, grade)) {
                        return Err(StratumError::NotInDomain);
                    }
                    b = t.mul(&b, &t.add(&t.one(), &GElem::homog(grade, l.clone())));
                }
            }
            let w = t.mul(&t.inv_one_plus(&t.sub(&b, &t.one()), n), g).truncated(n);
            let wm1 = t.sub(&w, &t.one());
            if wm1.lower_val() <= s1 {
                return Err(StratumError::NotInDomain);
            }
            acc = k.add(acc, psi_c(&st.c[0], &gm1)?);
            acc = k.add(acc, psi_c(&st.c[1], &wm1)?);
            let xi1 = self.xi_coeff(1)?;
            if xi1 != 0 {
                let det = t.det_e1(&b.clone().truncated(n), 2)?;
                let v = t.ke.mul(t.ke.mul(xi1, t.ke.inv(t.u).unwrap()), det[1]);
                acc = k.add(acc, t.ke.trace(v));
            }
        }
        Ok(match self.side {
            Side::GL => acc,
            Side::U => k.mul(acc, k.inv(2).unwrap()),
        })
    }

    pub fn eval(&self, g: &GElem) -> Result<CycNum, StratumError> {
        let e = self.exponent(g)?;
        let e = self.psi.exponent(e);
        Ok(crate::cyclotomic::cyc_root(self.tower().p as u64, e as u64))
    }
}

pub fn eval_simple_char(chi: &SimpleCharSpec, g: &GElem) -> Result<CycNum, StratumError> {
    chi.eval(g)
}

/// Random element of 𝔥¹ (grades 1..n).
pub fn random_h1<R: Rng>(s: &StratumSpec, rng: &mut R, n: i64) -> GElem {
    let t = &s.tower;
    let mut x = GElem::zero();
    for k in 1..n {
        let sp = s.h1_space(k);
        x = t.add(&x, &GElem::homog(k, t.random_in_space(rng, &sp)));
    }
    x.truncated(n)
}

/// Random α-fixed element of 𝔥¹; its Cayley transform lies in H¹.
pub fn random_h1_alpha_fixed<R: Rng>(s: &StratumSpec, rng: &mut R, n: i64) -> GElem {
    let t = &s.tower;
    let mut x = GElem::zero();
    for k in 1..n {
        let sp = t.alpha_fixed(&s.h1_space(k));
        x = t.add(&x, &GElem::homog(k, t.random_in_space(rng, &sp)));
    }
    x.truncated(n)
}

/// (1 + z)(1 − z)⁻¹.
pub fn cayley(t: &TowerSpec, z: &GElem, n: i64) -> GElem {
    let minus = t.neg(z);
    t.mul(&t.add(&t.one(), z), &t.inv_one_plus(&minus, n)).truncated(n)
}

/// Y = yϖ⁻¹(1 + Y') with Y − α(Y) = Xα(X).
#[derive(Clone, Debug)]
pub struct YSolution {
    pub y: GElem,
    pub y_prime: GElem,
    pub y_inv: GElem,
}

/// X as a graded element from 𝔚_{z,j} coordinates.
pub fn x_from_coords(t: &TowerSpec, wz: &[GradedSpace], coords: &[u32]) -> GElem {
    let mut x = GElem::zero();
    let mut off = 0;
    for sp in wz {
        let c = &coords[off..off + sp.dim()];
        off += sp.dim();
        x = t.add(&x, &GElem::homog(sp.grade, t.combine(c, &sp.basis)));
    }
    x
}

pub fn solve_y_from_x(s: &StratumSpec, x: &GElem, y: u32) -> Result<YSolution, StratumError> {
    let t = &s.tower;
    let yi = t.ke.inv(y).ok_or(StratumError::ZeroY)?;
    let n = t.prec;
    for (&k, l) in &x.comps {
        let j = s.s.iter().position(|&sj| sj == k).ok_or(StratumError::DegenerateX)?;
        if !t.layer_in_space(l, &t.level_space(j + 1, k)) {
            return Err(StratumError::DegenerateX);
        }
    }
    let rhs = t.mul(x, &t.alpha(x));
    let half = t.k.inv(2).unwrap();
    let mut z = GElem::zero();
    for (&g, l) in &rhs.comps {
        let space = t.level_space(local_model::j_level(&s.s, g + 1), g);
        // the α-anti-fixed solution of (1 − α)Z = W is W/2
        if !t.layer_in_space(l, &space) {
            return Err(StratumError::NoSolution);
        }
        z = t.add(&z, &GElem::homog(g, l.iter().map(|&v| v * half % t.p).collect()));
    }
    if t.sub(&z, &t.alpha(&z)) != rhs {
        return Err(StratumError::NoSolution);
    }
    let base = t.m_elem(&LocalElem::monomial(y, -1));
    let base_inv = t.m_elem(&LocalElem::monomial(yi, 1));
    let yel = t.add(&base, &z);
    let y_prime = t.mul(&base_inv, &z).truncated(n);
    let y_inv = t.mul(&t.inv_one_plus(&y_prime, n), &base_inv).truncated(n);
    Ok(YSolution { y: yel, y_prime, y_inv })
}

/// Σ_{i} counts[i]·ζ_m^i accumulator with m = lcm(p, q_E − 1).
#[derive(Clone, Debug)]
struct Acc {
    m: u64,
    counts: Vec<i64>,
}

impl Acc {
    fn new(m: u64) -> Self {
        Acc { m, counts: vec![0; m as usize] }
    }
    fn add(&mut self, idx: u64, w: i64) {
        self.counts[(idx % self.m) as usize] += w;
    }
    fn merge(mut self, o: Acc) -> Acc {
        for (a, b) in self.counts.iter_mut().zip(o.counts) {
            *a += b;
        }
        self
    }
    fn value(&self) -> CycNum {
        CycNum::from_exponent_counts(self.m, &self.counts)
    }
}

fn lcm(a: u64, b: u64) -> u64 {
    a / num_integer::gcd(a, b) * b
}

/// Which branch ρ̃|μ falls in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum MuCase {
    /// ρ̃|μ = χ^f
    ChiF,
    /// ρ̃|μ = χ^{f−1}
    ChiFMinusOne,
}

pub fn mu_case(t: &TowerSpec, mu: &MultChar) -> Option<MuCase> {
    let chi = quadratic_residue_char(&t.ke);
    if *mu == chi.pow(t.f as u64) {
        Some(MuCase::ChiF)
    } else if *mu == chi.pow(t.f as u64 - 1) {
        Some(MuCase::ChiFMinusOne)
    } else {
        None
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BzReport {
    #[serde(serialize_with = "ser_cyc")]
    pub path_a: CycNum,
    #[serde(serialize_with = "ser_cyc")]
    pub path_b: CycNum,
    #[serde(serialize_with = "ser_cyc_opt")]
    pub closed: Option<CycNum>,
    pub case: Option<MuCase>,
    pub summands: u64,
    pub summand_mismatches: u64,
    pub det_identity_failures: u64,
    pub eps_root: u8,
}

fn ser_cyc<S: serde::Serializer>(x: &CycNum, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_string())
}

fn ser_cyc_opt<S: serde::Serializer>(x: &Option<CycNum>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => s.serialize_str(&v.to_string()),
        None => s.serialize_none(),
    }
}

fn enumeration_size(q: u32, n: usize, bound: u64) -> Result<u64, StratumError> {
    let size = (q as u128).pow(n as u32);
    if size > bound as u128 {
        return Err(StratumError::EnumerationTooLarge { size, bound });
    }
    Ok(size as u64)
}

fn digits(mut i: u64, p: u32, n: usize) -> Vec<u32> {
    let mut out = vec![0u32; n];
    for d in out.iter_mut() {
        *d = (i % p as u64) as u32;
        i /= p as u64;
    }
    out
}

/// b_z by the direct path (A) and the simplified Gauss-sum path (B).
pub fn bz_oracle(chi: &SimpleCharSpec, rho_tilde: &LevelZeroChar, opts: BruteOptions) -> Result<BzReport, StratumError> {
    Ok(bz_oracle_batch(chi, std::slice::from_ref(rho_tilde), opts)?.remove(0))
}

/// bz_oracle for several ρ̃ sharing one enumeration of 𝔚_z.
pub fn bz_oracle_batch(chi: &SimpleCharSpec, rhos: &[LevelZeroChar], opts: BruteOptions) -> Result<Vec<BzReport>, StratumError> {
    let s = &chi.stratum;
    let t = &s.tower;
    let p = t.p as u64;
    let qe1 = t.q_e() as u64 - 1;
    let m = lcm(p, qe1);
    let (mp, mq) = (m / p, m / qe1);
    let wz = s.wz()?;
    let n = wz.iter().map(|g| g.dim()).sum::<usize>();
    let size = enumeration_size(t.p, n, opts.bound)?;
    let theta_t = chi.with_side(Side::GL);
    let theta = chi.with_side(Side::U);
    let half = t.k.inv(2).unwrap();
    let psi = &chi.psi;
    let minus_one = t.ke.neg(1);
    // ρ̃(y) and ρ̃(−y) exponents, indexed by y − 1
    let mut rho_y = Vec::new();
    let mut rho_my = Vec::new();
    for r in rhos {
        let mu = &r.mu_part;
        rho_y.push((1..t.q_e()).map(|y| mu.exponent(y)).collect::<Result<Vec<_>, _>>()?);
        rho_my.push((1..t.q_e()).map(|y| mu.exponent(t.ke.mul(minus_one, y))).collect::<Result<Vec<_>, _>>()?);
    }

    // path B
    let forms: Vec<QuadSpace> = (1..t.q_e()).map(|y| sign_form(s, t.ke.inv(y).unwrap()).map(|f| scaled(&f, half))).collect::<Result<_, _>>()?;
    let mut acc_b: Vec<Acc> = rhos.iter().map(|_| Acc::new(m)).collect();
    for (yi, form) in forms.iter().enumerate() {
        let counts = gauss::exponent_counts(form, psi, opts)?;
        for (r, acc) in acc_b.iter_mut().enumerate() {
            for (e, &c) in counts.iter().enumerate() {
                acc.add(e as u64 * mp + rho_y[r][yi] * mq, c);
            }
        }
    }

    // path A, with the per-summand identity against B
    let k = rhos.len();
    let empty = || (vec![Acc::new(m); k], 0u64, 0u64);
    let run = || -> Result<(Vec<Acc>, u64, u64), StratumError> {
        (0..size)
            .into_par_iter()
            .map(|i| -> Result<(Vec<Acc>, u64, u64), StratumError> {
                let coords = digits(i, t.p, n);
                let x = x_from_coords(t, &wz, &coords);
                let ax = t.alpha(&x);
                let (mut accs, mut mism, mut detf) = empty();
                for y in 1..t.q_e() {
                    let sol = solve_y_from_x(s, &x, y)?;
                    let w = t.mul(&ax, &sol.y_inv);
                    let wx = t.mul(&w, &x).truncated(t.prec);
                    let xw = t.mul(&x, &w).truncated(t.prec);
                    let g = t.sub(&t.one(), &wx);
                    let g2 = t.sub(&t.one(), &xw);
                    if t.det_f(&g, 2)? != t.det_f(&g2, 2)? {
                        detf += 1;
                    }
                    let one_y = t.add(&t.one(), &sol.y_prime).truncated(t.prec);
                    let e1 = theta_t.exponent(&one_y)?;
                    let e2 = theta.exponent(&g)?;
                    let tot = psi.exponent(t.k.add(e1, e2));
                    let expect = psi.exponent(forms[y as usize - 1].eval(&coords));
                    if tot != expect {
                        mism += 1;
                    }
                    for (r, acc) in accs.iter_mut().enumerate() {
                        acc.add(tot as u64 * mp + rho_my[r][y as usize - 1] * mq, 1);
                    }
                }
                Ok((accs, mism, detf))
            })
            .try_reduce(empty, |a, b| Ok((a.0.into_iter().zip(b.0).map(|(x, y)| x.merge(y)).collect(), a.1 + b.1, a.2 + b.2)))
    };
    let (acc_a, mism, detf) = gauss::with_threads(opts.threads, run)??;

    let eps = epsilon_z(s, psi, opts)?;
    let mut out = Vec::with_capacity(k);
    for ((rho, a), b) in rhos.iter().zip(acc_a).zip(acc_b) {
        let mu = &rho.mu_part;
        let case = mu_case(t, mu);
        let closed = match case {
            Some(MuCase::ChiF) => Some(CycNum::zero(m)),
            Some(MuCase::ChiFMinusOne) => {
                // ρ̃(−2)·ε·(q_E − 1)·q^{n/2}
                let r2 = mu.exponent(t.ke.neg(t.ke.from_int(2)))?;
                let mag = BigInt::from(qe1) * BigInt::from(t.p).pow(n as u32 / 2);
                let v = crate::cyclotomic::cyc_root(m, r2 * mq).scale(&mag);
                Some(&v * &eps.value().embed(lcm(m, 4)).map_err(|_| StratumError::NoSolution)?)
            }
            None => None,
        };
        let (pa, pb) = (a.value(), b.value());
        if pa != pb {
            return Err(StratumError::PathMismatch { a: pa.to_string(), b: pb.to_string() });
        }
        out.push(BzReport {
            path_a: pa,
            path_b: pb,
            closed,
            case,
            summands: size * qe1,
            summand_mismatches: mism,
            det_identity_failures: detf,
            eps_root: eps.root,
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct ByReport {
    #[serde(serialize_with = "ser_cyc")]
    pub value: CycNum,
    #[serde(serialize_with = "ser_cyc")]
    pub closed: CycNum,
    pub summands: u64,
    pub nonconstant: u64,
}

/// b_y / T_y(s_y) by enumerating (X, Y₀(1 + Y'))⁻ with X ∈ 𝐤_E^×, 2Y₀ = −X².
pub fn by_oracle(chi: &SimpleCharSpec, rho_tilde_m2: i8, rho_m1: i8, opts: BruteOptions) -> Result<ByReport, StratumError> {
    let s = &chi.stratum;
    let t = &s.tower;
    let p = t.p as u64;
    let fib = local_model::y_fiber_spaces(t, &s.r)?;
    let fdim: usize = fib.iter().map(|g| g.dim()).sum();
    let size = enumeration_size(t.p, fdim, opts.bound)?;
    let theta_t = chi.with_side(Side::GL);
    let theta = chi.with_side(Side::U);
    let n = t.prec;
    let half = t.ke.inv(2).unwrap();
    let sign = (rho_tilde_m2 as i64) * (rho_m1 as i64);
    let run = || -> Result<(Vec<i64>, u64), StratumError> {
        (0..size)
            .into_par_iter()
            .map(|i| -> Result<(Vec<i64>, u64), StratumError> {
                let coords = digits(i, t.p, fdim);
                let rest = x_from_coords(t, &fib, &coords);
                let mut counts = vec![0i64; p as usize];
                let mut bad = 0;
                for xv in 1..t.q_e() {
                    let y0 = t.ke.neg(t.ke.mul(half, t.ke.mul(xv, xv)));
                    let y0i = t.ke.inv(y0).unwrap();
                    let y_prime = t.mul(&t.m_elem(&LocalElem::monomial(y0i, 0)), &rest).truncated(n);
                    let y_inv = t.mul(&t.inv_one_plus(&y_prime, n), &t.m_elem(&LocalElem::monomial(y0i, 0))).truncated(n);
                    let x = t.m_elem(&LocalElem::monomial(xv, 0));
                    // −g = −(1 − α(X)Y⁻¹X)
                    let g = t.sub(&t.one(), &t.mul3(&t.alpha(&x), &y_inv, &x));
                    let mg = t.neg(&g).truncated(n);
                    let one_y = t.add(&t.one(), &y_prime).truncated(n);
                    let e = t.k.add(theta_t.exponent(&one_y)?, theta.exponent(&mg)?);
                    let e = chi.psi.exponent(e);
                    if e != 0 {
                        bad += 1;
                    }
                    counts[e as usize] += sign;
                }
                Ok((counts, bad))
            })
            .try_reduce(
                || (vec![0i64; p as usize], 0),
                |mut a, b| {
                    for (x, y) in a.0.iter_mut().zip(b.0) {
                        *x += y;
                    }
                    Ok((a.0, a.1 + b.1))
                },
            )
    };
    let (counts, bad) = gauss::with_threads(opts.threads, run)??;
    let value = CycNum::from_exponent_counts(p, &counts);
    let mag = BigInt::from(t.q_e() - 1) * BigInt::from(t.p).pow(fdim as u32);
    let closed = CycNum::from_int(p, mag * BigInt::from(sign));
    let total = size * (t.q_e() as u64 - 1);
    if bad > 0 {
        return Err(StratumError::ConstancyViolated(bad as usize, total as usize));
    }
    Ok(ByReport { value, closed, summands: total, nonconstant: bad })
}

/// Layers helper for tests and callers building X by hand.
pub fn homog_sum(parts: &[(i64, Layer)]) -> GElem {
    parts.iter().fold(GElem::zero(), |acc, (k, l)| {
        let mut a = acc;
        a.comps.insert(*k, l.clone());
        a
    })
}
