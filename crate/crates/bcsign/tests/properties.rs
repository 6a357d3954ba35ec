use std::sync::Arc;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use bcsign::config::ExperimentConfig;
use bcsign::cyclotomic::{cyc_root, CycNum};
use bcsign::finite_field::{quadratic_residue_char, AddChar, FqField};
use bcsign::gauss::{gauss_sum_brute, gauss_sum_closed, normalized_sign, BruteOptions, QuadSpace};
use bcsign::hecke_bc::{fourth_root_solutions, solve_reducibility, Half, HeckeParams, LevelZeroChar};
use bcsign::local_model::{build_tower, TowerConfig};
use bcsign::stratum::{cayley, random_h1, random_h1_alpha_fixed, Side};

fn field(q: u32) -> Arc<FqField> {
    FqField::with_order(q).unwrap()
}

fn gram(q: u32, n: usize) -> impl Strategy<Value = Vec<Vec<u32>>> {
    prop::collection::vec(0..q, n * (n + 1) / 2).prop_map(move |v| {
        let mut g = vec![vec![0; n]; n];
        let mut it = v.into_iter();
        for i in 0..n {
            for j in i..n {
                let x = it.next().unwrap();
                g[i][j] = x;
                g[j][i] = x;
            }
        }
        g
    })
}

fn qn() -> impl Strategy<Value = (u32, usize)> {
    prop_oneof![Just(3u32), Just(5), Just(7), Just(9), Just(25)].prop_flat_map(|q| (Just(q), 0usize..=if q > 9 { 3 } else { 4 }))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cyclotomic_ring_laws(a in prop::collection::vec(-5i64..5, 12), b in prop::collection::vec(-5i64..5, 12)) {
        let x = CycNum::from_exponent_counts(12, &a);
        let y = CycNum::from_exponent_counts(12, &b);
        prop_assert_eq!(&x * &y, &y * &x);
        prop_assert_eq!(&(&x + &y) * &x, &(&x * &x) + &(&y * &x));
        let (xr, xi) = x.to_f64_pair();
        let (yr, yi) = y.to_f64_pair();
        let (pr, pi) = (&x * &y).to_f64_pair();
        let p = Complex64::new(xr, xi) * Complex64::new(yr, yi);
        prop_assert!((p - Complex64::new(pr, pi)).norm() < 1e-6);
        prop_assert_eq!(x.embed(24).unwrap().embed(24).unwrap(), x.embed(24).unwrap());
    }

    #[test]
    fn field_axioms(q in prop_oneof![Just(3u32), Just(9), Just(25), Just(27), Just(49)], a in 1u32..1000, b in 0u32..1000) {
        let k = field(q);
        let (a, b) = (a % k.q(), b % k.q());
        prop_assume!(a != 0);
        prop_assert_eq!(k.mul(a, k.inv(a).unwrap()), 1);
        prop_assert_eq!(k.frob(k.mul(a, b)), k.mul(k.frob(a), k.frob(b)));
        prop_assert_eq!(k.trace(k.add(a, b)), (k.trace(a) + k.trace(b)) % k.p());
        prop_assert_eq!(k.is_square(a), quadratic_residue_char(&k).sign(a).unwrap() == 1);
    }

    #[test]
    fn gauss_brute_equals_closed(case in qn().prop_flat_map(|(q, n)| (Just(q), Just(n), gram(q, n), 1u32..q))) {
        let (q, n, g, a) = case;
        let k = field(q);
        let s = QuadSpace::new(&k, g).unwrap();
        let psi = AddChar::new(&k, a);
        prop_assume!(!psi.is_trivial());
        if s.is_nondegenerate() {
            let b = gauss_sum_brute(&s, &psi, BruteOptions::default()).unwrap();
            prop_assert_eq!(&b, &gauss_sum_closed(&s, &psi).unwrap());
            let r = normalized_sign(&s, &psi, BruteOptions::default()).unwrap();
            prop_assert_eq!(&r.brute, &r.closed);
            // real when n is even or q is a square
            prop_assert!((n % 2 == 1 && k.f() % 2 == 1) || r.root % 2 == 0);
        } else {
            prop_assert!(s.radical_dim() > 0);
        }
    }

    #[test]
    fn basic_gauss_sum_squares(q in prop_oneof![Just(3u32), Just(5), Just(7), Just(11), Just(13), Just(9), Just(25), Just(27)], a in 1u32..100) {
        let k = field(q);
        let a = a % k.q();
        prop_assume!(a != 0);
        let g = bcsign::gauss::basic_gauss_sum(&AddChar::new(&k, a));
        let s = quadratic_residue_char(&k).sign(k.neg(1)).unwrap() as i64 * q as i64;
        prop_assert_eq!(&g * &g, CycNum::from_int(k.p() as u64, s));
    }

    #[test]
    fn root_sums(m in 2u64..40) {
        let mut s = CycNum::zero(m);
        for k in 0..m {
            s = &s + &cyc_root(m, k);
        }
        prop_assert!(s.is_zero());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn alpha_and_inverse(case in prop_oneof![Just((3u32, 3u32, 1u32)), Just((3, 1, 2)), Just((5, 3, 1)), Just((3, 5, 1))], seed in any::<u64>()) {
        let (q, e, f) = case;
        let t = build_tower(&TowerConfig::new(q, e, f)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = t.prec;
        let mk = |rng: &mut ChaCha8Rng| {
            let mut g = bcsign::local_model::GElem::zero();
            for k in 0..4 {
                g = t.add(&g, &bcsign::local_model::GElem::homog(k, t.random_layer(rng)));
            }
            g.truncated(n)
        };
        let x = mk(&mut rng);
        let y = mk(&mut rng);
        let lhs = t.bar(&t.mul(&x, &y)).truncated(n);
        let rhs = t.mul(&t.bar(&y), &t.bar(&x)).truncated(n);
        prop_assert_eq!(lhs, rhs);
        prop_assert_eq!(t.alpha(&t.alpha(&x)).truncated(n), x.clone());
        // (1 + z)⁻¹ for z of positive degree
        let z = t.mul(&t.m_pi(), &x).truncated(n);
        let inv = t.inv_one_plus(&z, n);
        prop_assert_eq!(t.mul(&t.add(&t.one(), &z), &inv).truncated(n), t.one().truncated(n));
    }

    #[test]
    fn simple_character_laws(name in prop_oneof![Just("u1"), Just("e3f1"), Just("e1f2"), Just("e5f1"), Just("d1-tower")], seed in any::<u64>(), xi in 0u32..3) {
        let mut cfg = ExperimentConfig::builtin(name).unwrap();
        cfg.character.xi_f = xi;
        let ex = cfg.build().unwrap();
        let s = &ex.stratum;
        let t = &ex.tower;
        let n = t.prec;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tt = ex.chi.with_side(Side::GL);
        let x = t.add(&t.one(), &random_h1(s, &mut rng, n));
        let y = t.add(&t.one(), &random_h1(s, &mut rng, n));
        let xy = t.mul(&x, &y).truncated(n);
        prop_assert_eq!(tt.exponent(&xy).unwrap(), t.k.add(tt.exponent(&x).unwrap(), tt.exponent(&y).unwrap()));
        let h = cayley(t, &random_h1_alpha_fixed(s, &mut rng, n), n);
        let u = ex.chi.with_side(Side::U);
        prop_assert_eq!(t.k.mul(2, u.exponent(&h).unwrap()), tt.exponent(&h).unwrap());
    }

    #[test]
    fn reducibility_real_parts(f in 1u32..=2, e in prop_oneof![Just(1u32), Just(3), Just(5)], chi_f in any::<bool>(), twist in any::<bool>(), eps in prop_oneof![Just(1i8), Just(-1)]) {
        let t = build_tower(&TowerConfig::new(3, e, f)).unwrap();
        let chi = quadratic_residue_char(&t.ke);
        let mu = if chi_f { chi.pow(f as u64) } else { chi.pow(f as u64 - 1) };
        let v = (0..4u8).find(|&v| LevelZeroChar::general_linear(&t.ke, mu.clone(), v).is_ok()).unwrap();
        let mut rho = LevelZeroChar::general_linear(&t.ke, mu, v).unwrap();
        if twist {
            rho = rho.unramified_twist();
        }
        let (ry, rz) = bcsign::hecke_bc::rank_values(&t, &rho);
        let c = e * f;
        let hp = HeckeParams::closed(t.q_e(), ry, rz, c, c, eps, eps, rho.minus_one());
        let rep = solve_reducibility(&hp, &rho).unwrap();
        prop_assert_eq!(rep.real_parts, (Half((ry + rz) as i64), Half((ry as i64 - rz as i64).abs())));
        let pts: Vec<i64> = rep.real_points.iter().chain(rep.shifted_points.iter()).map(|h| h.0.abs()).collect();
        prop_assert!(pts.iter().all(|&p| p == (ry + rz) as i64 || p == (ry as i64 - rz as i64).abs()));
        let tw = solve_reducibility(&hp, &rho.unramified_twist()).unwrap();
        prop_assert_eq!(&tw.real_points, &rep.shifted_points);
    }

    #[test]
    fn fourth_roots_at_most_one(e in (0u32..20).prop_map(|k| 2 * k + 1), known in 0u8..4, m in prop_oneof![Just(1i8), Just(-1)]) {
        let s = fourth_root_solutions(e, known, m);
        prop_assert!(s.len() <= 1);
        // x^e = known with e odd pins x; it is consistent iff known² = m
        prop_assert_eq!(s.len() == 1, (2 * known) % 4 == if m < 0 { 2 } else { 0 });
    }

    #[test]
    fn config_round_trip(name in prop_oneof![Just("u1"), Just("e3f1"), Just("e1f2"), Just("e3f2"), Just("e5f1"), Just("d1-tower")], seed in any::<u64>(), bound in 1u64..100_000_000, twist in 1u32..3) {
        let mut cfg = ExperimentConfig::builtin(name).unwrap();
        cfg.run.seed = seed;
        cfg.run.bound = bound;
        cfg.character.psi_twist = twist;
        let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}
