//! Rank-two Hecke algebra data, reducibility points, the base-change map on
//! level-zero data, and the parity of conjugate-self-dual characters.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::cyclotomic::CycNum;
use crate::finite_field::{quadratic_residue_char, FqField, MultChar};
use crate::gauss::SignResult;
use crate::local_model::TowerSpec;
use crate::stratum::{mu_case, MuCase, Side};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HeckeError {
    #[error("inconsistent Hecke parameters: {0}")]
    InconsistentParams(String),
    #[error("no fourth root of unity satisfies both conditions")]
    NoConsistentValue,
    #[error("character datum is not self-dual")]
    NotSelfDual,
    #[error("the sign is not ±1")]
    MissingSign,
}

/// ζ_4^k, k mod 4.
fn sign_root(s: i8) -> u8 {
    if s < 0 {
        2
    } else {
        0
    }
}

fn root_sign(r: u8) -> Option<i8> {
    match r % 4 {
        0 => Some(1),
        2 => Some(-1),
        _ => None,
    }
}

/// Level-zero character: ρ̃ on μ_E with ρ̃(ϖ_E) = ζ_4^varpi (GL side), or the
/// unitary ρ, of which only ρ(−1) = mu_part(−1) matters (U side).
#[derive(Clone, Debug)]
pub struct LevelZeroChar {
    pub field: Arc<FqField>,
    pub mu_part: MultChar,
    pub varpi_value: u8,
    pub side: Side,
}

impl LevelZeroChar {
    pub fn general_linear(field: &Arc<FqField>, mu_part: MultChar, varpi_value: u8) -> Result<Self, HeckeError> {
        let c = LevelZeroChar { field: field.clone(), mu_part, varpi_value: varpi_value % 4, side: Side::GL };
        c.check_self_dual()?;
        Ok(c)
    }

    /// ρ with ρ(−1) = sign.
    pub fn unitary(field: &Arc<FqField>, minus_one: i8) -> Self {
        let k = if minus_one < 0 { 1 } else { 0 };
        LevelZeroChar { field: field.clone(), mu_part: MultChar::new(field, k), varpi_value: 0, side: Side::U }
    }

    pub fn minus_one(&self) -> i8 {
        let n = self.mu_part.order_modulus();
        let e = self.mu_part.exponent(self.field.neg(1)).unwrap();
        if e == 0 {
            1
        } else {
            debug_assert_eq!(2 * e, n);
            -1
        }
    }

    /// ρ̃(x) for x ∈ 𝐤_E^× as a fourth root, when ρ̃|μ is at most quadratic.
    pub fn mu_root(&self, x: u32) -> u8 {
        sign_root(self.mu_part.sign(x).unwrap())
    }

    pub fn check_self_dual(&self) -> Result<(), HeckeError> {
        if self.side == Side::U {
            return Ok(());
        }
        let n = self.mu_part.order_modulus();
        if (2 * self.mu_part.k) % n != 0 {
            return Err(HeckeError::NotSelfDual);
        }
        if (2 * self.varpi_value) % 4 != sign_root(self.minus_one()) {
            return Err(HeckeError::NotSelfDual);
        }
        Ok(())
    }

    /// Twist by the unramified quadratic character.
    pub fn unramified_twist(&self) -> Self {
        LevelZeroChar { varpi_value: (self.varpi_value + 2) % 4, ..self.clone() }
    }

    /// The same character described relative to u·ϖ_E.
    pub fn rechosen(&self, u: u32) -> Self {
        let v = (self.varpi_value + self.mu_root(u)) % 4;
        LevelZeroChar { varpi_value: v, ..self.clone() }
    }
}

impl PartialEq for LevelZeroChar {
    fn eq(&self, o: &Self) -> bool {
        self.mu_part == o.mu_part && self.varpi_value == o.varpi_value && self.side == o.side
    }
}

/// r_y = 1 always; r_z = 1 exactly when ρ̃|μ = χ^{f−1}.
pub fn rank_values(t: &TowerSpec, rho_tilde: &LevelZeroChar) -> (u32, u32) {
    match mu_case(t, &rho_tilde.mu_part) {
        Some(MuCase::ChiFMinusOne) => (1, 1),
        _ => (1, 0),
    }
}

/// sign·q_E^{half/2}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct QPow {
    pub sign: i8,
    pub half: i64,
}

impl QPow {
    pub fn mul(self, o: QPow) -> QPow {
        QPow { sign: self.sign * o.sign, half: self.half + o.half }
    }
    pub fn value(self, q: u32) -> f64 {
        self.sign as f64 * (q as f64).powf(self.half as f64 / 2.0)
    }
}

impl fmt::Display for QPow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = if self.sign < 0 { "-" } else { "" };
        if self.half % 2 == 0 {
            write!(f, "{s}q^{}", self.half / 2)
        } else {
            write!(f, "{s}q^({}/2)", self.half)
        }
    }
}

fn ser_big<S: serde::Serializer>(x: &BigInt, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_string())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HeckeParams {
    pub q_e: u32,
    pub r_y: u32,
    pub r_z: u32,
    /// c_w = q_E^{c_w_exp}
    pub c_y_exp: u32,
    pub c_z_exp: u32,
    pub eps_y: i8,
    pub eps_z: i8,
    /// b_w / T_w(s_w), exact integers
    #[serde(serialize_with = "ser_big")]
    pub b_y: BigInt,
    #[serde(serialize_with = "ser_big")]
    pub b_z: BigInt,
    /// T_z(s_z)² = ρ̃(−1)
    pub tz_square: i8,
}

impl HeckeParams {
    /// Fill eps and b from r and c in the closed form.
    pub fn closed(q_e: u32, r_y: u32, r_z: u32, c_y_exp: u32, c_z_exp: u32, eps_y: i8, eps_z: i8, tz_square: i8) -> Self {
        let b = |r: u32, c: u32, e: i8| -> BigInt {
            if r == 0 {
                BigInt::zero()
            } else {
                BigInt::from(e) * BigInt::from(q_e - 1) * qe_half_pow(q_e, c - 1).expect("q_E^((c-1)/2) is an integer")
            }
        };
        HeckeParams {
            q_e,
            r_y,
            r_z,
            c_y_exp,
            c_z_exp,
            eps_y,
            eps_z,
            b_y: b(r_y, c_y_exp, eps_y),
            b_z: b(r_z, c_z_exp, eps_z),
            tz_square,
        }
    }
}

/// q_E^{k/2} when it is an integer.
pub fn qe_half_pow(q_e: u32, k: u32) -> Option<BigInt> {
    if k % 2 == 0 {
        return Some(BigInt::from(q_e).pow(k / 2));
    }
    let r = (q_e as f64).sqrt().round() as u32;
    (r * r == q_e).then(|| BigInt::from(r).pow(k))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Spectrum {
    /// the two eigenvalues of T_w / T_w(s_w)
    pub eigen: [QPow; 2],
    /// eigenvalues normalized to {−1, q_E^{r_w}}
    pub normalized: [QPow; 2],
    pub r: u32,
}

fn spectrum(q_e: u32, r: u32, c_exp: u32, b: &BigInt) -> Result<Spectrum, HeckeError> {
    let c_half = c_exp as i64;
    if b.is_zero() {
        if r != 0 {
            return Err(HeckeError::InconsistentParams("b = 0 with r = 1".into()));
        }
        return Ok(Spectrum {
            eigen: [QPow { sign: 1, half: c_half }, QPow { sign: -1, half: c_half }],
            normalized: [QPow { sign: -1, half: 0 }, QPow { sign: 1, half: 0 }],
            r,
        });
    }
    let half = if c_exp == 0 { None } else { qe_half_pow(q_e, c_exp - 1) };
    let Some(half) = half.filter(|_| r == 1) else {
        return Err(HeckeError::InconsistentParams(format!("b ≠ 0 with r = {r}, c = q^{c_exp}")));
    };
    let mag = BigInt::from(q_e - 1) * half;
    if b.abs() != mag {
        return Err(HeckeError::InconsistentParams(format!("|b| = {} but (q-1)(c/q)^(1/2) = {mag}", b.abs())));
    }
    let eps: i8 = if b.is_negative() { -1 } else { 1 };
    // ε(c/q)^{1/2}·{q, −1}
    let base = c_half - 1;
    Ok(Spectrum {
        eigen: [QPow { sign: -eps, half: base }, QPow { sign: eps, half: base + 2 }],
        normalized: [QPow { sign: -1, half: 0 }, QPow { sign: 1, half: 2 }],
        r,
    })
}

/// Roots of T² − b_wT − c_w for both generators, with the normalized spectra.
pub fn hecke_eigenvalues(hp: &HeckeParams) -> Result<(Spectrum, Spectrum), HeckeError> {
    Ok((spectrum(hp.q_e, hp.r_y, hp.c_y_exp, &hp.b_y)?, spectrum(hp.q_e, hp.r_z, hp.c_z_exp, &hp.b_z)?))
}

/// k/2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Half(pub i64);

impl fmt::Display for Half {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

impl Serialize for Half {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

pub const IMAGINARY_OFFSET: &str = "πi/log q_E";

#[derive(Clone, Debug, Serialize)]
pub struct Branch {
    pub product: QPow,
    pub point: Half,
    pub shifted: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReducibilityReport {
    pub real_points: Vec<Half>,
    /// points s + πi/log q_E
    pub shifted_points: Vec<Half>,
    pub offset: &'static str,
    pub spectra: (Spectrum, Spectrum),
    /// normalized products of T_y and T_z eigenvalues, with the point each one yields
    pub branches: Vec<Branch>,
    /// ρ̃(ϖ_E) over the product of the signs of b_y and b_z
    pub kappa: i8,
    pub real_parts: (Half, Half),
}

impl ReducibilityReport {
    pub fn render_point(h: &Half, shifted: bool) -> String {
        if shifted {
            if h.0 == 0 {
                IMAGINARY_OFFSET.to_string()
            } else {
                format!("{h} + {IMAGINARY_OFFSET}")
            }
        } else {
            h.to_string()
        }
    }
}

/// Points s where t_P(Z) = κ q_E^s (normalized) meets a product of T_y and T_z eigenvalues.
pub fn solve_reducibility(hp: &HeckeParams, rho_tilde: &LevelZeroChar) -> Result<ReducibilityReport, HeckeError> {
    rho_tilde.check_self_dual()?;
    if rho_tilde.side != Side::GL {
        return Err(HeckeError::NotSelfDual);
    }
    let spectra = hecke_eigenvalues(hp)?;
    // κ as a fourth root: ρ̃(ϖ_E)·ε_y·ε_z, with T_z(s_z) in place of ε_z when b_z = 0
    let mut k = rho_tilde.varpi_value as i64;
    k += sign_root(if hp.b_y.is_zero() { 1 } else { hp.eps_y }) as i64;
    if hp.b_z.is_zero() {
        k -= if hp.tz_square < 0 { 1 } else { 0 };
    } else {
        k += sign_root(hp.eps_z) as i64;
    }
    let kappa = root_sign(k.rem_euclid(4) as u8).ok_or(HeckeError::NotSelfDual)?;
    let (ry, rz) = (hp.r_y as i64, hp.r_z as i64);
    let products = [
        QPow { sign: 1, half: ry + rz },
        QPow { sign: 1, half: -(ry + rz) },
        QPow { sign: -1, half: ry - rz },
        QPow { sign: -1, half: rz - ry },
    ];
    let mut real = Vec::new();
    let mut shifted = Vec::new();
    let mut branches = Vec::new();
    for pr in products {
        let is_shift = pr.sign != kappa;
        let pt = Half(pr.half);
        if is_shift {
            shifted.push(pt);
        } else {
            real.push(pt);
        }
        branches.push(Branch { product: pr, point: pt, shifted: is_shift });
    }
    for v in [&mut real, &mut shifted] {
        v.sort();
        v.dedup();
    }
    Ok(ReducibilityReport {
        real_points: real,
        shifted_points: shifted,
        offset: IMAGINARY_OFFSET,
        spectra,
        branches,
        kappa,
        real_parts: (Half(ry + rz), Half((ry - rz).abs())),
    })
}

/// Hecke data from the oracle values of b_y, b_z and the model indices.
pub fn params_from_oracles(t: &TowerSpec, c_y_exp: u32, c_z_exp: u32, b_y: &CycNum, b_z: &CycNum, rho_tilde: &LevelZeroChar) -> Result<HeckeParams, HeckeError> {
    let (r_y, r_z) = rank_values(t, rho_tilde);
    let to_int = |b: &CycNum| b.as_integer().ok_or_else(|| HeckeError::InconsistentParams(format!("b = {b} is not rational")));
    let (by, bz) = (to_int(b_y)?, to_int(b_z)?);
    let sgn = |b: &BigInt| if b.is_negative() { -1 } else { 1 };
    let f = t.f;
    if c_y_exp % f != 0 || c_z_exp % f != 0 {
        return Err(HeckeError::InconsistentParams("c not a power of q_E".into()));
    }
    let hp = HeckeParams {
        q_e: t.q_e(),
        r_y,
        r_z,
        c_y_exp: c_y_exp / f,
        c_z_exp: c_z_exp / f,
        eps_y: sgn(&by),
        eps_z: sgn(&bz),
        b_y: by,
        b_z: bz,
        tz_square: rho_tilde.minus_one(),
    };
    hecke_eigenvalues(&hp)?;
    Ok(hp)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExtensionChar {
    /// κ̃₀(ϖ_E) as ζ_4^k
    pub varpi_e: u8,
    pub varpi_f: u8,
    pub minus_one: i8,
}

/// The x ∈ μ_4 with x^e = known and x² = minus_one.
pub fn p_primary_extension(e: u32, known: u8, minus_one: i8) -> Result<ExtensionChar, HeckeError> {
    let sols = fourth_root_solutions(e, known, minus_one);
    match sols.as_slice() {
        [x] => Ok(ExtensionChar { varpi_e: *x, varpi_f: 0, minus_one }),
        [] => Err(HeckeError::NoConsistentValue),
        _ => Err(HeckeError::InconsistentParams(format!("{} solutions", sols.len()))),
    }
}

pub fn fourth_root_solutions(e: u32, known: u8, minus_one: i8) -> Vec<u8> {
    (0..4u8)
        .filter(|&x| ((x as u32 * e) % 4) as u8 == known % 4 && (2 * x) % 4 == sign_root(minus_one))
        .collect()
}

/// ρ̃|μ = χ^{f−1}, ρ̃(ϖ_E) = ρ(−1)·ε_z(ϖ_E).
pub fn base_change(rho: &LevelZeroChar, eps_z: &SignResult, tower: &TowerSpec) -> Result<LevelZeroChar, HeckeError> {
    let eps = eps_z.sign().ok_or(HeckeError::MissingSign)?;
    let mu = quadratic_residue_char(&tower.ke).pow(tower.f as u64 - 1);
    let v = sign_root(rho.minus_one() * eps);
    LevelZeroChar::general_linear(&tower.ke, mu, v)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Parity {
    ConjugateOrthogonal,
    ConjugateSymplectic,
    NotConjugateSelfDual,
}

/// Root of unity e^{2πi k/m}, normalized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Root {
    pub k: u64,
    pub m: u64,
}

impl Root {
    pub fn new(k: i64, m: u64) -> Root {
        let k = k.rem_euclid(m as i64) as u64;
        let g = num_integer::gcd(k, m).max(1);
        Root { k: k / g, m: m / g }
    }
    pub fn one() -> Root {
        Root { k: 0, m: 1 }
    }
    pub fn mul(self, o: Root) -> Root {
        let m = num_integer::lcm(self.m, o.m);
        Root::new((self.k * (m / self.m) + o.k * (m / o.m)) as i64, m)
    }
    pub fn pow(self, n: i64) -> Root {
        Root::new(self.k as i64 * n, self.m)
    }
    pub fn inv(self) -> Root {
        self.pow(-1)
    }
    pub fn is_one(self) -> bool {
        self.k == 0
    }
    pub fn to_cyc(self) -> CycNum {
        crate::cyclotomic::cyc_root(self.m, self.k)
    }
}

/// Tamely ramified character of F^×: χ|μ_F and χ(ϖ_F).
#[derive(Clone, Debug)]
pub struct TameChar {
    pub mu_part: MultChar,
    pub varpi: Root,
}

impl TameChar {
    /// χ(ζ^a ϖ_F^b) with ζ the generator of 𝐤^×.
    pub fn eval(&self, a: i64, b: i64) -> Root {
        let n = self.mu_part.order_modulus();
        Root::new(a * self.mu_part.k as i64, n).mul(self.varpi.pow(b))
    }
}

/// Classification by conjugate self-duality (σ: ϖ_F ↦ −ϖ_F) and the restriction to F•^×.
pub fn parity_classifier(chi: &TameChar, tower: &TowerSpec) -> Parity {
    let k = &tower.k;
    let n = (k.q() - 1) as i64;
    let minus_one_log = n / 2;
    // χ∘σ = χ⁻¹ on the generators ζ and ϖ_F
    let zeta_ok = chi.eval(1, 0).pow(2).is_one();
    let sig_varpi = chi.eval(minus_one_log, 1);
    let varpi_ok = sig_varpi.mul(chi.eval(0, 1)).is_one();
    if !(zeta_ok && varpi_ok) {
        return Parity::NotConjugateSelfDual;
    }
    // F•^× is generated by ζ and ϖ_F² = ϖ_{F•}
    let on_zeta = chi.eval(1, 0);
    let on_varpi = chi.eval(0, 2);
    if on_zeta.is_one() && on_varpi.is_one() {
        return Parity::ConjugateOrthogonal;
    }
    // δ_{F/F•}: quadratic residue on units, δ(−ϖ_{F•}) = 1
    let delta_zeta = Root::new(1, 2);
    let delta_varpi = Root::new(minus_one_log, 2);
    if on_zeta == delta_zeta && on_varpi == delta_varpi {
        Parity::ConjugateSymplectic
    } else {
        Parity::NotConjugateSelfDual
    }
}

/// ρ̃(x) = ρ(x/σ(x)) for E = F: ρ̃|μ trivial and ρ̃(ϖ_F) = ρ(−1).
pub fn u1_base_change(field: &Arc<FqField>, rho_minus_one: i8) -> LevelZeroChar {
    LevelZeroChar { field: field.clone(), mu_part: MultChar::trivial(field), varpi_value: sign_root(rho_minus_one), side: Side::GL }
}

pub fn root_of(value: &CycNum) -> Option<u8> {
    value.fourth_root_index()
}

pub fn to_f64(b: &BigInt) -> f64 {
    b.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::local_model::{build_tower, TowerConfig};

    #[test]
    fn eigenvalue_examples() {
        let hp = HeckeParams::closed(3, 1, 1, 1, 1, 1, 1, 1);
        let (sy, _) = hecke_eigenvalues(&hp).unwrap();
        assert_eq!(sy.eigen.map(|x| x.value(3)), [-1.0, 3.0]);
        let hp = HeckeParams::closed(3, 1, 0, 1, 4, -1, 1, 1);
        let (sy, sz) = hecke_eigenvalues(&hp).unwrap();
        assert_eq!(sy.eigen.map(|x| x.value(3)), [1.0, -3.0]);
        assert_eq!(sz.eigen.map(|x| x.value(3)), [9.0, -9.0]);
        let mut bad = HeckeParams::closed(3, 1, 1, 1, 1, 1, 1, 1);
        bad.b_y = BigInt::from(5);
        assert!(matches!(hecke_eigenvalues(&bad), Err(HeckeError::InconsistentParams(_))));
    }

    #[test]
    fn extension_examples() {
        assert_eq!(p_primary_extension(1, 0, 1).unwrap().varpi_e, 0);
        assert_eq!(p_primary_extension(3, 2, 1).unwrap().varpi_e, 2);
        assert_eq!(p_primary_extension(3, 1, 1), Err(HeckeError::NoConsistentValue));
    }

    #[test]
    fn ranks_and_points() {
        let t = build_tower(&TowerConfig::new(3, 3, 1)).unwrap();
        let triv = LevelZeroChar::general_linear(&t.ke, MultChar::trivial(&t.ke), 0).unwrap();
        let quad = LevelZeroChar::general_linear(&t.ke, quadratic_residue_char(&t.ke), 1).unwrap();
        assert_eq!(rank_values(&t, &triv), (1, 1));
        assert_eq!(rank_values(&t, &quad), (1, 0));
        let hp = HeckeParams::closed(3, 1, 1, 3, 3, 1, 1, 1);
        let rep = solve_reducibility(&hp, &triv).unwrap();
        assert_eq!(rep.real_points, vec![Half(-2), Half(2)]);
        assert_eq!(rep.shifted_points, vec![Half(0)]);
        let tw = solve_reducibility(&hp, &triv.unramified_twist()).unwrap();
        assert_eq!(tw.real_points, vec![Half(0)]);
        let hp = HeckeParams::closed(3, 1, 0, 3, 3, 1, 1, -1);
        let rep = solve_reducibility(&hp, &quad).unwrap();
        assert_eq!(rep.real_points, vec![Half(-1), Half(1)]);
        assert_eq!(rep.shifted_points, vec![Half(-1), Half(1)]);
    }

    #[test]
    fn parity_examples() {
        let t = build_tower(&TowerConfig::new(3, 1, 1)).unwrap();
        let triv = TameChar { mu_part: MultChar::trivial(&t.k), varpi: Root::one() };
        assert_eq!(parity_classifier(&triv, &t), Parity::ConjugateOrthogonal);
        let unr = TameChar { mu_part: MultChar::trivial(&t.k), varpi: Root::new(1, 2) };
        assert_eq!(parity_classifier(&unr, &t), Parity::ConjugateOrthogonal);
        let leg = TameChar { mu_part: quadratic_residue_char(&t.k), varpi: Root::one() };
        assert_eq!(parity_classifier(&leg, &t), Parity::NotConjugateSelfDual);
        let t5 = build_tower(&TowerConfig::new(5, 1, 1)).unwrap();
        let leg5 = TameChar { mu_part: quadratic_residue_char(&t5.k), varpi: Root::one() };
        assert_eq!(parity_classifier(&leg5, &t5), Parity::ConjugateSymplectic);
    }
}
