mod common;

use common::{solved_corpus, unsat_selection, Solved, DELTA};
use rand::{Rng, SeedableRng};
use stochreach::interval::Truth;
use stochreach::solver::{icp_solve, DeltaConfig, Verdict};

#[test]
fn unsat_verdicts_survive_falsification() {
    let all = solved_corpus(30);
    let picked = unsat_selection(&all);
    assert_eq!(picked.len(), 10);
    for (i, s) in picked.iter().enumerate() {
        assert_eq!(common::falsify(&s.problem, 10_000, i as u64), None, "witness for {}", s.label);
    }
}

#[test]
fn falsifier_finds_witnesses_on_sat_problems() {
    let all = solved_corpus(30);
    let sat: Vec<&Solved> = all.iter().filter(|s| matches!(s.verdict, Verdict::DeltaSat(_))).collect();
    assert!(sat.len() >= 20);
    let found = sat.iter().enumerate().filter(|(i, s)| common::falsify(&s.problem, 2_000, *i as u64).is_some()).count();
    assert!(found * 2 >= sat.len(), "oracle found witnesses for only {found} of {} sat problems", sat.len());
}

#[test]
fn sat_witnesses_recheck() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    for s in solved_corpus(30) {
        let Verdict::DeltaSat(w) = &s.verdict else {
            continue;
        };
        let p = &s.problem;
        let weak = p.algebraic().weaken(DELTA);
        assert_eq!(weak.eval(w), Truth::True, "{}", s.label);
        for _ in 0..20 {
            let x: Vec<f64> = w.iter().map(|i| if i.width() > 0.0 { rng.random_range(i.lo..=i.hi) } else { i.lo }).collect();
            assert!(weak.holds_at(&x), "{}: point {x:?}", s.label);
        }
        let mid: Vec<f64> = w.iter().map(|i| i.mid()).collect();
        for fl in &p.flows {
            let field = |v: &[f64]| fl.field.iter().map(|f| f.eval_point(v)).collect::<Vec<f64>>();
            let t = mid[fl.t];
            let end = common::rk4(&field, &mid[fl.x..fl.x + p.n], t, ((t / 1e-3).ceil() as usize).max(1));
            for j in 0..p.n {
                let gap = (end[j] - mid[fl.xt + j]).abs();
                assert!(gap <= DELTA + 1e-9, "{}: flow {} var {j} off by {gap}", s.label, fl.step);
            }
        }
    }
}

#[test]
fn solving_is_deterministic() {
    let cfg = DeltaConfig::with_delta(DELTA);
    for s in solved_corpus(5) {
        assert_eq!(icp_solve(&s.problem, &cfg), s.verdict, "{}", s.label);
    }
}
