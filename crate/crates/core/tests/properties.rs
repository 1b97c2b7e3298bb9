use gnepp::gs::{detect_cycle, update_tau, TauRule};
use gnepp::instance::{parse_instance, random_instance, serialize_instance, RandomConstraint};
use gnepp::pop::{pop_minimize, PopOptions, PopStatus};
use gnepp::sdp::{SdpBuilder, SdpOptions, SdpStatus};
use gnepp::{BlockLayout, Monomial, Polynomial, Var};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn poly_strategy(vars: usize, max_deg: u32) -> impl Strategy<Value = Polynomial> {
    let term = (prop::collection::vec(0..=max_deg, vars), -3.0..3.0f64);
    prop::collection::vec(term, 0..6).prop_map(move |terms| {
        Polynomial::from_terms(terms.into_iter().map(|(exps, c)| {
            let m = Monomial::from_powers(exps.into_iter().enumerate().map(|(j, e)| (Var::new(0, j), e)));
            (m, c)
        }))
    })
}

fn at(p: &Polynomial, u: &[f64]) -> f64 {
    p.eval(|v| u.get(v.coord).copied()).unwrap()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn evaluation_is_a_ring_homomorphism(
        p in poly_strategy(2, 3),
        q in poly_strategy(2, 3),
        u in prop::collection::vec(-1.5..1.5f64, 2),
    ) {
        prop_assert!(close(at(&(&p + &q), &u), at(&p, &u) + at(&q, &u)));
        prop_assert!(close(at(&(&p * &q), &u), at(&p, &u) * at(&q, &u)));
        prop_assert!(close(at(&p.pow(2), &u), at(&p, &u).powi(2)));
        prop_assert!((&p - &p).is_zero());
    }

    #[test]
    fn restriction_agrees_with_full_evaluation(
        p in poly_strategy(2, 3),
        x in prop::collection::vec(-1.0..1.0f64, 3),
    ) {
        // rename coordinates onto a two-block layout: (x1_1, x1_2) and (x2_1)
        let layout = BlockLayout::new(vec![2, 1]).unwrap();
        let lifted = p.rename(|v| if v.coord == 0 { Var::new(0, 0) } else { Var::new(1, 0) });
        let full = lifted.eval_flat(&layout, &x).unwrap();
        let r = lifted.restrict(&layout, 0, &x).unwrap();
        prop_assert!(close(r.eval(|v| Some(x[v.coord])).unwrap(), full));
    }

    #[test]
    fn adaptive_tau_stays_in_its_window(tau in 1e-6..1.0f64, step in 0.0..2.0f64) {
        let next = update_tau(tau, step, TauRule::Adaptive);
        prop_assert!(next <= tau && next >= 0.1 * tau);
        prop_assert_eq!(update_tau(tau, step, TauRule::Fixed), tau);
        prop_assert_eq!(update_tau(tau, step, TauRule::Zero), 0.0);
    }

    #[test]
    fn periodic_sequences_report_their_period(period in 1usize..=6, reps in 3usize..5) {
        let base: Vec<Vec<f64>> = (0..period).map(|k| vec![k as f64, (k * k) as f64]).collect();
        let seq: Vec<Vec<f64>> = (0..period * reps).map(|k| base[k % period].clone()).collect();
        let got = detect_cycle(&seq, 1e-9, 12);
        // a constant sequence is a fixed point, not a cycle
        if period == 1 {
            prop_assert!(got.is_none() || got == Some(1));
        } else {
            prop_assert_eq!(got, Some(period));
        }
    }

    #[test]
    fn random_instances_survive_a_text_roundtrip(seed in 0u64..1000, ball in any::<bool>()) {
        let kind = if ball { RandomConstraint::Ball } else { RandomConstraint::Simplex };
        let inst = random_instance(&[2, 1], 2, kind, seed).unwrap();
        let back = parse_instance(&serialize_instance(&inst)).unwrap();
        prop_assert_eq!(&back.layout, &inst.layout);
        let x = [0.3, -0.2, 0.7];
        prop_assert_eq!(back.objectives(&x).unwrap(), inst.objectives(&x).unwrap());
        prop_assert_eq!(back.feasibility_residual(&x).unwrap(), inst.feasibility_residual(&x).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn univariate_minimum_matches_a_fine_grid(c in prop::collection::vec(-1.0..1.0f64, 5)) {
        let x = Polynomial::var(Var::new(0, 0));
        let f = (0..5).fold(Polynomial::zero(), |acc, k| acc + c[k] * x.pow(k as u32));
        let g = 1.0 - x.pow(2);
        let r = pop_minimize(&[Var::new(0, 0)], &f, &[g], &[], &PopOptions::default()).unwrap();
        let grid = (0..=200_000)
            .map(|i| -1.0 + i as f64 * 1e-5)
            .map(|t| at(&f, &[t]))
            .fold(f64::INFINITY, f64::min);
        prop_assert!((r.lower_bound - grid).abs() <= 1e-4, "{} vs {grid}", r.lower_bound);
        if r.status == PopStatus::MinimizersExtracted {
            for u in &r.minimizers {
                prop_assert!((at(&f, u) - r.lower_bound).abs() <= 1e-6);
                prop_assert!(u[0].abs() <= 1.0 + 1e-8);
            }
        }
    }

    #[test]
    fn optimal_sdp_solves_meet_kkt_tolerances(
        n in 1usize..=4,
        m in 1usize..=6,
        seed_vals in prop::collection::vec(-1.0..1.0f64, 200),
    ) {
        // strictly feasible primal and dual by construction
        let mut vals = seed_vals.into_iter().cycle();
        let mut next = || vals.next().unwrap();
        let m = m.min(n * (n + 1) / 2);
        let mut entries = Vec::new();
        for k in 0..m {
            for i in 0..n {
                for j in i..n {
                    entries.push((k, i, j, next()));
                }
            }
        }
        let g = DMatrix::from_fn(n, n, |_, _| next());
        let x0 = &g * g.transpose() + DMatrix::identity(n, n);
        let h = DMatrix::from_fn(n, n, |_, _| next());
        let s0 = &h * h.transpose() + DMatrix::identity(n, n);
        let y0: Vec<f64> = (0..m).map(|_| next()).collect();
        let mut b = vec![0.0; m];
        let mut c = s0;
        for &(k, i, j, v) in &entries {
            let w = if i == j { x0[(i, i)] } else { 2.0 * x0[(i, j)] };
            b[k] += v * w;
            c[(i, j)] += v * y0[k];
            if i != j {
                c[(j, i)] += v * y0[k];
            }
        }
        let mut sb = SdpBuilder::new(m);
        let blk = sb.add_block(n);
        for &(k, i, j, v) in &entries {
            sb.add_a(k, blk, i, j, if i == j { v } else { 2.0 * v });
        }
        for (k, &v) in b.iter().enumerate() {
            sb.set_b(k, v);
        }
        for i in 0..n {
            for j in 0..n {
                sb.add_c(blk, i, j, c[(i, j)]);
            }
        }
        let sol = sb.build().solve(&SdpOptions::default());
        prop_assert_eq!(sol.status, SdpStatus::Optimal);
        prop_assert!(sol.primal_res <= 1e-8 && sol.dual_res <= 1e-8 && sol.gap <= 1e-8);
    }
}
