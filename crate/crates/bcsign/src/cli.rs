//! The four experiment commands behind the `bcsign` binary. Each returns a
//! serializable report with an `ok` flag and renders as an aligned table.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigError, ExperimentConfig, Monomial, MuChoice};
use crate::cyclotomic::CycNum;
use crate::finite_field::{quadratic_residue_char, AddChar, FieldError, FqField, MultChar};
use crate::gauss::{self, GaussError, QuadSpace, SignResult};
use crate::hecke_bc::{
    base_change, params_from_oracles, solve_reducibility, u1_base_change, HeckeError, HeckeParams, LevelZeroChar, ReducibilityReport,
};
use crate::local_model::{iwahori_indices, LocalElem, ModelError};
use crate::stratum::{self, bz_oracle_batch, by_oracle, epsilon_z, epsilon_z_invariance, BzReport, ByReport, InvarianceReport, StratumError, StratumSpec};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Stratum(#[from] StratumError),
    #[error(transparent)]
    Gauss(#[from] GaussError),
    #[error(transparent)]
    Hecke(#[from] HeckeError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Parameters every sign depends on.
#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub case: Option<String>,
    pub q: u32,
    pub e: u32,
    pub f: u32,
    pub chain: Vec<(u32, u32)>,
    pub precision: i64,
    pub u: u32,
    pub lambda0: u32,
    pub lambda_shift: i64,
    pub psi_twist: u32,
    pub c: Vec<Monomial>,
    pub r: Vec<i64>,
}

impl Provenance {
    fn of(cfg: &ExperimentConfig, s: &StratumSpec) -> Self {
        Provenance {
            case: cfg.name.clone(),
            q: cfg.tower.q,
            e: cfg.tower.e,
            f: cfg.tower.f,
            chain: cfg.tower.chain.clone(),
            precision: s.tower.prec,
            u: cfg.tower.u,
            lambda0: cfg.tower.lambda0,
            lambda_shift: cfg.tower.lambda_shift,
            psi_twist: cfg.character.psi_twist,
            c: cfg.stratum.c.clone(),
            r: s.r.clone(),
        }
    }

    fn render(&self, out: &mut String) {
        let _ = writeln!(
            out,
            "case {}  q={} e={} f={} chain={:?} N={}  u={} λ₀={} l={}  ψ_{}  c={}",
            self.case.as_deref().unwrap_or("-"),
            self.q,
            self.e,
            self.f,
            self.chain,
            self.precision,
            self.u,
            self.lambda0,
            self.lambda_shift,
            self.psi_twist,
            self.c.iter().map(|m| format!("{}·ϖ^-{}", m.a, m.r)).collect::<Vec<_>>().join(", ")
        );
    }
}

/// Aligned text table.
pub fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (i, c) in r.iter().enumerate() {
            w[i] = w[i].max(c.chars().count());
        }
    }
    let line = |cells: Vec<String>| -> String {
        let parts: Vec<String> = cells.iter().enumerate().map(|(i, c)| format!("{}{}", c, " ".repeat(w[i] - c.chars().count()))).collect();
        parts.join("  ").trim_end().to_string()
    };
    let mut out = line(header.iter().map(|s| s.to_string()).collect());
    out.push('\n');
    out.push_str(&line(w.iter().map(|&n| "-".repeat(n)).collect()));
    out.push('\n');
    for r in rows {
        out.push_str(&line(r.clone()));
        out.push('\n');
    }
    out
}

fn mark(ok: bool) -> String {
    if ok { "ok" } else { "FAIL" }.to_string()
}

fn sign_label(root: u8) -> String {
    ["+1", "+i", "-1", "-i"][(root % 4) as usize].to_string()
}

fn root_label(k: u8) -> String {
    ["1", "i", "-1", "-i"][(k % 4) as usize].to_string()
}

// ---------------------------------------------------------------- gauss

#[derive(Clone, Debug, Serialize)]
pub struct GaussRow {
    pub q: u32,
    pub n: usize,
    pub forms: usize,
    pub degenerate: usize,
    pub matches: usize,
    pub mismatches: usize,
    /// normalized sign counts (+1, +i, −1, −i) over nondegenerate forms
    pub signs: [usize; 4],
}

#[derive(Clone, Debug, Serialize)]
pub struct GaussReport {
    pub rows: Vec<GaussRow>,
    /// (q, g(ψ)² = χ(−1)q)
    pub g_squared: Vec<(u32, bool)>,
    pub ok: bool,
}

impl GaussReport {
    pub fn render(&self) -> String {
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.q.to_string(),
                    r.n.to_string(),
                    r.forms.to_string(),
                    r.degenerate.to_string(),
                    r.matches.to_string(),
                    r.mismatches.to_string(),
                    format!("{}/{}/{}/{}", r.signs[0], r.signs[1], r.signs[2], r.signs[3]),
                ]
            })
            .collect();
        let mut out = table(&["q", "n", "forms", "degenerate", "brute=closed", "mismatch", "sign +1/+i/-1/-i"], &rows);
        for (q, ok) in &self.g_squared {
            let _ = writeln!(out, "g(ψ)² = χ(-1)·{q}: {}", mark(*ok));
        }
        let _ = writeln!(out, "result: {}", mark(self.ok));
        out
    }
}

fn random_gram<R: Rng>(k: &FqField, n: usize, rng: &mut R) -> Vec<Vec<u32>> {
    let mut g = vec![vec![0u32; n]; n];
    for i in 0..n {
        for j in i..n {
            let v = rng.gen_range(0..k.q());
            g[i][j] = v;
            g[j][i] = v;
        }
    }
    g
}

/// Brute force against the closed form over the configured grid.
pub fn cmd_gauss(cfg: &ExperimentConfig) -> Result<GaussReport, CliError> {
    cfg.validate()?;
    let grid = &cfg.gauss;
    let opts = cfg.run.brute();
    let mut rows = Vec::new();
    let mut g_squared = Vec::new();
    for &q in &grid.q {
        let k = FqField::with_order(q)?;
        let psi = AddChar::new(&k, cfg.character.psi_twist % k.p());
        let g = gauss::basic_gauss_sum(&psi);
        let s = quadratic_residue_char(&k).sign(k.neg(1))? as i64 * q as i64;
        g_squared.push((q, &g * &g == CycNum::from_int(k.p() as u64, s)));
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.run.seed ^ ((q as u64) << 32));
        for n in 0..=grid.max_dim {
            if (q as u128).pow(n as u32) > grid.cap.min(opts.bound) as u128 {
                break;
            }
            let count = if n == 0 { 1 } else { grid.samples };
            let mut row = GaussRow { q, n, forms: count, degenerate: 0, matches: 0, mismatches: 0, signs: [0; 4] };
            for _ in 0..count {
                let space = QuadSpace::new(&k, random_gram(&k, n, &mut rng))?;
                if !space.is_nondegenerate() {
                    row.degenerate += 1;
                    continue;
                }
                let brute = gauss::gauss_sum_brute(&space, &psi, opts)?;
                if brute == gauss::gauss_sum_closed(&space, &psi)? {
                    row.matches += 1;
                } else {
                    row.mismatches += 1;
                }
                let sr = gauss::normalized_sign_closed(&space, &psi)?;
                row.signs[sr.root as usize % 4] += 1;
            }
            rows.push(row);
        }
    }
    let ok = rows.iter().all(|r| r.mismatches == 0) && g_squared.iter().all(|x| x.1);
    Ok(GaussReport { rows, g_squared, ok })
}

// ---------------------------------------------------------------- sign

#[derive(Clone, Debug, Serialize)]
pub struct FormRank {
    pub level: usize,
    pub dim: usize,
    pub rank: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SignReport {
    pub provenance: Provenance,
    pub minimal: bool,
    pub ranks: Vec<FormRank>,
    /// dim over 𝐤_E
    pub wz_dim_ke: usize,
    pub sign: Option<SignResult>,
    pub invariance: Option<InvarianceReport>,
    pub ok: bool,
}

impl SignReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.provenance.render(&mut out);
        let rows: Vec<Vec<String>> = self
            .ranks
            .iter()
            .map(|r| vec![r.level.to_string(), r.dim.to_string(), r.rank.to_string(), mark(r.rank == r.dim)])
            .collect();
        out.push_str(&table(&["level j", "dim_k 𝔚_j", "Gram rank", "nondegenerate"], &rows));
        let _ = writeln!(out, "minimal: {}   dim_kE 𝔚_z = {}", self.minimal, self.wz_dim_ke);
        if let Some(s) = &self.sign {
            let _ = writeln!(out, "ε_z = {}   (n = {}, brute = closed: {})", sign_label(s.root), s.dim, mark(s.brute == s.closed));
            let _ = writeln!(out, "  brute  = {}", s.brute);
            let _ = writeln!(out, "  closed = {}", s.closed);
        } else {
            let _ = writeln!(out, "ε_z: not defined (degenerate form)");
        }
        if let Some(inv) = &self.invariance {
            let tw: Vec<String> = inv.psi_twists.iter().map(|(a, r)| format!("ψ_{a}:{}", sign_label(*r))).collect();
            let _ = writeln!(out, "ψ-twists: {}", tw.join(" "));
            let rows: Vec<Vec<String>> = inv
                .rechoice
                .iter()
                .map(|(u, r, x)| vec![u.to_string(), sign_label(*r), sign_label(*x), mark(r == x)])
                .collect();
            out.push_str(&table(&["u", "ε(uϖ_E)", "χ^(f-1)(u)·ε", "check"], &rows));
        }
        let _ = writeln!(out, "result: {}", mark(self.ok));
        out
    }
}

/// ε_z with brute force and closed form, plus the invariance suite. A
/// non-minimal c surfaces as a degenerate Gram matrix.
pub fn cmd_sign(cfg: &ExperimentConfig) -> Result<SignReport, CliError> {
    cfg.validate()?;
    let tower = crate::local_model::build_tower(&cfg.tower)?;
    let c: Vec<LocalElem> = cfg.stratum.c.iter().map(|m| LocalElem::monomial(m.a, -m.r)).collect();
    let s = StratumSpec::without_minimality(tower.clone(), c.clone())?;
    let minimal = (0..c.len()).map(|j| stratum::minimality_at(&tower, &c[j], j)).collect::<Result<Vec<_>, _>>()?.into_iter().all(|b| b);
    let forms = stratum::build_dj_forms(&s, 1)?;
    let ranks: Vec<FormRank> = forms.iter().enumerate().map(|(j, f)| FormRank { level: j, dim: f.dim(), rank: f.dim() - f.radical_dim() }).collect();
    let nondeg = ranks.iter().all(|r| r.rank == r.dim);
    let provenance = Provenance::of(cfg, &s);
    let s = &s;
    let wz_dim_ke = s.wz_dim()? / tower.f as usize;
    if !nondeg {
        return Ok(SignReport { provenance, minimal, ranks, wz_dim_ke, sign: None, invariance: None, ok: false });
    }
    let psi = AddChar::new(&tower.k, cfg.character.psi_twist % tower.p);
    let opts = cfg.run.brute();
    let sign = epsilon_z(s, &psi, opts)?;
    let invariance = epsilon_z_invariance(s, opts)?;
    let ok = minimal && sign.brute == sign.closed && sign.sign().is_some() && invariance.ok;
    Ok(SignReport { provenance, minimal, ranks, wz_dim_ke, sign: Some(sign), invariance: Some(invariance), ok })
}

// ---------------------------------------------------------------- reducibility

#[derive(Clone, Debug, Serialize)]
pub struct RhoTildeDatum {
    pub mu: MuChoice,
    /// ρ̃(ϖ_E) = i^varpi
    pub varpi: u8,
}

#[derive(Clone, Debug, Serialize)]
pub struct Candidate {
    pub rho_tilde: RhoTildeDatum,
    /// equals base_change(ρ, ε_z)
    pub matched: bool,
    pub by: ByReport,
    pub bz: BzReport,
    pub params: HeckeParams,
    pub points: ReducibilityReport,
    pub ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReducibilityCmdReport {
    pub provenance: Provenance,
    pub epsilon_z: SignResult,
    pub c_y_exp: u32,
    pub c_z_exp: u32,
    pub delta_exp: u32,
    pub candidates: Vec<Candidate>,
    /// (μ case, the unramified-twist pair swaps real and shifted points)
    pub swaps: Vec<(MuChoice, bool)>,
    pub ok: bool,
}

impl ReducibilityCmdReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.provenance.render(&mut out);
        let _ = writeln!(out, "ε_z = {}   c_y = q^{}  c_z = q^{}  [J:ζJζ⁻¹] = q^{}", sign_label(self.epsilon_z.root), self.c_y_exp, self.c_z_exp, self.delta_exp);
        let rows: Vec<Vec<String>> = self
            .candidates
            .iter()
            .map(|c| {
                let pts = &c.points;
                let mut all: Vec<String> = pts.real_points.iter().map(|h| ReducibilityReport::render_point(h, false)).collect();
                all.extend(pts.shifted_points.iter().map(|h| ReducibilityReport::render_point(h, true)));
                vec![
                    format!("{:?}", c.rho_tilde.mu),
                    root_label(c.rho_tilde.varpi),
                    if c.matched { "*".into() } else { String::new() },
                    c.params.b_y.to_string(),
                    c.params.b_z.to_string(),
                    format!("{}/{}", c.params.r_y, c.params.r_z),
                    c.points.kappa.to_string(),
                    format!("{{{}}}", all.join(", ")),
                    mark(c.ok),
                ]
            })
            .collect();
        out.push_str(&table(&["ρ̃|μ", "ρ̃(ϖ_E)", "bc", "b_y/T_y", "b_z/T_z", "r_y/r_z", "κ", "points", "check"], &rows));
        for c in &self.candidates {
            let _ = writeln!(out, "{:?} i^{}: branches", c.rho_tilde.mu, c.rho_tilde.varpi);
            for b in &c.points.branches {
                let _ = writeln!(
                    out,
                    "  {}q_E^({}) -> {}",
                    if b.product.sign < 0 { "-" } else { "+" },
                    crate::hecke_bc::Half(b.product.half),
                    ReducibilityReport::render_point(&b.point, b.shifted)
                );
            }
        }
        for (mu, ok) in &self.swaps {
            let _ = writeln!(out, "{mu:?}: unramified twist swaps points: {}", mark(*ok));
        }
        let _ = writeln!(out, "result: {}", mark(self.ok));
        out
    }
}

fn mu_char(ke: &std::sync::Arc<FqField>, f: u32, mu: MuChoice) -> MultChar {
    let chi = quadratic_residue_char(ke);
    match mu {
        MuChoice::ChiF => chi.pow(f as u64),
        MuChoice::ChiFMinusOne => chi.pow(f as u64 - 1),
    }
}

/// The self-dual ρ̃ with the given restriction to μ_E.
pub fn self_dual_candidates(ke: &std::sync::Arc<FqField>, f: u32, mu: MuChoice) -> Vec<LevelZeroChar> {
    (0..4u8).filter_map(|v| LevelZeroChar::general_linear(ke, mu_char(ke, f, mu), v).ok()).collect()
}

/// b_y, b_z from the coset oracles, the Hecke data, and the points of reducibility.
pub fn cmd_reducibility(cfg: &ExperimentConfig) -> Result<ReducibilityCmdReport, CliError> {
    let ex = cfg.build()?;
    let t = &ex.tower;
    let opts = cfg.run.brute();
    let eps = epsilon_z(&ex.stratum, &ex.chi.psi, opts)?;
    let rho = LevelZeroChar::unitary(&t.k, cfg.character.rho_minus_one);
    let matched = base_change(&rho, &eps, t)?;
    let mut rhos = Vec::new();
    match &cfg.character.rho_tilde {
        Some(rt) => rhos.push(LevelZeroChar::general_linear(&t.ke, mu_char(&t.ke, t.f, rt.mu), rt.varpi)?),
        None => {
            for mu in [MuChoice::ChiFMinusOne, MuChoice::ChiF] {
                rhos.extend(self_dual_candidates(&t.ke, t.f, mu));
            }
        }
    }
    let idx = iwahori_indices(t, &ex.stratum.r)?;
    let bzs = bz_oracle_batch(&ex.chi, &rhos, opts)?;
    let mut by_cache: Vec<(i8, ByReport)> = Vec::new();
    let mut candidates = Vec::new();
    for (r, bz) in rhos.iter().zip(bzs) {
        let m2 = r.mu_part.sign(t.ke.neg(t.ke.from_int(2)))?;
        let by = match by_cache.iter().find(|(k, _)| *k == m2) {
            Some((_, b)) => b.clone(),
            None => {
                let b = by_oracle(&ex.chi, m2, cfg.character.rho_minus_one, opts)?;
                by_cache.push((m2, b.clone()));
                b
            }
        };
        let params = params_from_oracles(t, idx.c_y_exp, idx.c_z_exp, &by.value, &bz.path_a, r)?;
        let points = solve_reducibility(&params, r)?;
        let mu = match stratum::mu_case(t, &r.mu_part) {
            Some(stratum::MuCase::ChiF) => MuChoice::ChiF,
            _ => MuChoice::ChiFMinusOne,
        };
        let ok = by.value == by.closed
            && bz.path_a == bz.path_b
            && bz.closed.as_ref() == Some(&bz.path_a)
            && bz.summand_mismatches == 0
            && bz.det_identity_failures == 0;
        candidates.push(Candidate { rho_tilde: RhoTildeDatum { mu, varpi: r.varpi_value }, matched: *r == matched, by, bz, params, points, ok });
    }
    let mut swaps = Vec::new();
    for mu in [MuChoice::ChiFMinusOne, MuChoice::ChiF] {
        let pair: Vec<&Candidate> = candidates.iter().filter(|c| c.rho_tilde.mu == mu).collect();
        if let [a, b] = pair.as_slice() {
            let sw = a.points.real_points == b.points.shifted_points && a.points.shifted_points == b.points.real_points;
            swaps.push((mu, sw));
        }
    }
    let ok = candidates.iter().all(|c| c.ok) && swaps.iter().all(|s| s.1);
    Ok(ReducibilityCmdReport {
        provenance: Provenance::of(cfg, &ex.stratum),
        epsilon_z: eps,
        c_y_exp: idx.c_y_exp,
        c_z_exp: idx.c_z_exp,
        delta_exp: idx.delta_exp,
        candidates,
        swaps,
        ok,
    })
}

// ---------------------------------------------------------------- base change

#[derive(Clone, Debug, Serialize)]
pub struct U1Row {
    pub rho_minus_one: i8,
    /// ρ̃|μ trivial
    pub mu_trivial: bool,
    /// ρ̃(ϖ) as i^k
    pub varpi: u8,
    /// ρ̃(x) = ρ(x/σx) on ϖ and 𝐤^×, computed from σ
    pub from_sigma: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RechoiceRow {
    pub u: u32,
    pub eps_root: u8,
    pub varpi: u8,
    pub expected: u8,
    pub ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BaseChangeReport {
    pub provenance: Provenance,
    pub rho_minus_one: i8,
    pub epsilon_z: SignResult,
    pub mu: MuChoice,
    pub varpi: u8,
    pub u1: Vec<U1Row>,
    pub rechoice: Vec<RechoiceRow>,
    /// real points from the closed-form Hecke data of the base-changed ρ̃
    pub real_points: Vec<String>,
    pub ok: bool,
}

impl BaseChangeReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.provenance.render(&mut out);
        let _ = writeln!(
            out,
            "ρ(-1) = {}  ε_z = {}  ->  ρ̃|μ_E = {:?}, ρ̃(ϖ_E) = {}",
            self.rho_minus_one,
            sign_label(self.epsilon_z.root),
            self.mu,
            root_label(self.varpi)
        );
        let rows: Vec<Vec<String>> = self
            .u1
            .iter()
            .map(|r| vec![r.rho_minus_one.to_string(), r.mu_trivial.to_string(), root_label(r.varpi), mark(r.from_sigma)])
            .collect();
        out.push_str("U(1) table\n");
        out.push_str(&table(&["ρ(-1)", "ρ̃|μ trivial", "ρ̃(ϖ_F)", "ρ(x/σx)"], &rows));
        let rows: Vec<Vec<String>> = self
            .rechoice
            .iter()
            .map(|r| vec![r.u.to_string(), sign_label(r.eps_root), root_label(r.varpi), root_label(r.expected), mark(r.ok)])
            .collect();
        out.push_str(&table(&["u", "ε(uϖ_E)", "ρ̃(uϖ_E)", "ρ̃(u)ρ̃(ϖ_E)", "check"], &rows));
        let _ = writeln!(out, "real points: {{{}}}", self.real_points.join(", "));
        let _ = writeln!(out, "result: {}", mark(self.ok));
        out
    }
}

/// ρ̃(x) = ρ(x/σx) for U(1), read off from σ on x ∈ 𝐤^× and x = ϖ.
fn u1_from_sigma(field: &std::sync::Arc<FqField>, rho_minus_one: i8, row: &LevelZeroChar) -> bool {
    let rho = MultChar::new(field, if rho_minus_one < 0 { 1 } else { 0 });
    let ratio = |x: &LocalElem| -> u32 {
        let (i, a) = x.coeffs.iter().next().map(|(&i, &a)| (i, a)).unwrap();
        field.div(a, *x.sigma(field).coeffs.get(&i).unwrap()).unwrap()
    };
    let mu_ok = (1..field.q()).all(|a| rho.exponent(ratio(&LocalElem::monomial(a, 0))).unwrap() == 0);
    let rv = rho.sign(ratio(&LocalElem::monomial(1, 1))).unwrap();
    mu_ok == row.mu_part.is_trivial() && (if rv < 0 { 2 } else { 0 }) == row.varpi_value
}

/// (ρ̃|μ_E, ρ̃(ϖ_E)) from (ρ, ε_z), with the U(1) table and the ϖ_E-rechoice check.
pub fn cmd_base_change(cfg: &ExperimentConfig) -> Result<BaseChangeReport, CliError> {
    let ex = cfg.build()?;
    let t = &ex.tower;
    let opts = cfg.run.brute();
    let rm1 = cfg.character.rho_minus_one;
    let rho = LevelZeroChar::unitary(&t.k, rm1);
    let eps = epsilon_z(&ex.stratum, &ex.chi.psi, opts)?;
    let bc = base_change(&rho, &eps, t)?;

    let u1: Vec<U1Row> = [1i8, -1]
        .iter()
        .map(|&s| {
            let r = u1_base_change(&t.k, s);
            U1Row { rho_minus_one: s, mu_trivial: r.mu_part.is_trivial(), varpi: r.varpi_value, from_sigma: u1_from_sigma(&t.k, s, &r) }
        })
        .collect();
    let u1_ok = u1.iter().all(|r| r.mu_trivial && r.from_sigma && r.varpi == if r.rho_minus_one < 0 { 2 } else { 0 });

    let mut rechoice = Vec::new();
    for u in 1..t.q_e() {
        let e_u = stratum::epsilon_z_at(&ex.stratum, &ex.chi.psi, u, opts)?;
        let b_u = base_change(&rho, &e_u, t)?;
        let expected = bc.rechosen(u).varpi_value;
        rechoice.push(RechoiceRow { u, eps_root: e_u.root, varpi: b_u.varpi_value, expected, ok: b_u.varpi_value == expected && b_u.mu_part == bc.mu_part });
    }

    let idx = iwahori_indices(t, &ex.stratum.r)?;
    let m2 = bc.mu_part.sign(t.ke.neg(t.ke.from_int(2)))?;
    let (ry, rz) = crate::hecke_bc::rank_values(t, &bc);
    let eps_z = eps.sign().ok_or(HeckeError::MissingSign)?;
    let hp = HeckeParams::closed(t.q_e(), ry, rz, idx.c_y_exp / t.f, idx.c_z_exp / t.f, m2 * rm1, m2 * eps_z, bc.minus_one());
    let pts = solve_reducibility(&hp, &bc)?;
    let real_points: Vec<String> = pts.real_points.iter().map(|h| h.to_string()).collect();
    let ok = u1_ok && rechoice.iter().all(|r| r.ok) && pts.real_points.contains(&crate::hecke_bc::Half(2));
    Ok(BaseChangeReport {
        provenance: Provenance::of(cfg, &ex.stratum),
        rho_minus_one: rm1,
        epsilon_z: eps,
        mu: MuChoice::ChiFMinusOne,
        varpi: bc.varpi_value,
        u1,
        rechoice,
        real_points,
        ok,
    })
}
