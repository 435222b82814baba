//! Acceptance checks, one pass/fail line each. Exits non-zero if any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stochreach::dsl::{load_model, parse_model_unchecked, preprocess_with_macros, pretty_print, Expr, Formula, RelOp, TestSpecAst};
use stochreach::engine::{run, ExecMode, RunConfig, RunReport};
use stochreach::interval::{Constraint, Interval, Term, Truth};
use stochreach::model::{desugar_pha, extract_rvs, HybridModel};
use stochreach::sampler::{sample_all, RandomStream};
use stochreach::solver::{delta_weaken, enclose_flow, FlowSettings, Verdict};
use stochreach::stats::{beta_mean, chernoff_samples, Hypothesis, Outcome, TestState};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn corpus_model(file: &str) -> HybridModel {
    let e = common::corpus().into_iter().find(|e| e.file == file).unwrap();
    HybridModel::from_ast(&common::load(&e)).unwrap()
}

fn coin_probability() -> Check {
    let m = corpus_model("coin.pdrh");
    let spec = TestSpecAst::Best { delta: 0.01, coverage: 0.99, alpha: 1.0, beta: 1.0 };
    let mut inside = 0;
    let mut slowest = Duration::ZERO;
    for seed in 1..=20 {
        let start = Instant::now();
        let r = run(&m, spec, &RunConfig::new(0, 0.001, seed)).map_err(|e| e.to_string())?;
        let took = start.elapsed();
        ensure(took < Duration::from_secs(60), || format!("seed {seed} took {took:?}"))?;
        slowest = slowest.max(took);
        let p = r.est_p().ok_or("no estimate")?;
        if (0.37..=0.43).contains(&p) {
            inside += 1;
        }
    }
    ensure(inside >= 18, || format!("only {inside}/20 estimates in [0.37, 0.43]"))?;
    Ok(format!("{inside}/20 estimates in [0.37, 0.43], slowest run {:.2}s", slowest.as_secs_f64()))
}

fn weakening_anchor() -> Check {
    let f = Formula::atom(Expr::var("x"), RelOp::Gt, Expr::Num(0.0));
    let c = Constraint::compile(&f, &|n, _| (n == "x").then_some(0)).map_err(|e| e.to_string())?;
    let w = delta_weaken(&c, 0.001);
    ensure(w.to_string() == "(x > -0.001)", || format!("weakened to {w}"))?;
    let Constraint::Atom(a) = &w else {
        return Err(format!("not an atom: {w}"));
    };
    ensure(a.strict && a.slack == 0.001, || format!("atom {a:?}"))?;
    ensure(w.holds_at(&[-0.0009]) && !w.holds_at(&[-0.001]) && !c.holds_at(&[-0.0009]), || "point semantics".into())?;
    Ok(format!("{c} weakens to {w}"))
}

fn solver_soundness() -> Check {
    let start = Instant::now();
    let all = common::solved_corpus(30);
    let picked = common::unsat_selection(&all);
    ensure(picked.len() == 10, || format!("only {} unsat problems", picked.len()))?;
    for (i, s) in picked.iter().enumerate() {
        if let Some(w) = common::falsify(&s.problem, 10_000, i as u64) {
            return Err(format!("{}: exact witness {w:?}", s.label));
        }
    }
    let mut sat = 0;
    for s in &all {
        if let Verdict::DeltaSat(b) = &s.verdict {
            sat += 1;
            let weak = s.problem.algebraic().weaken(common::DELTA);
            ensure(weak.eval(b) == Truth::True, || format!("{}: witness fails re-evaluation", s.label))?;
            let mid: Vec<f64> = b.iter().map(Interval::mid).collect();
            ensure(weak.holds_at(&mid), || format!("{}: witness midpoint fails", s.label))?;
        }
    }
    let took = start.elapsed();
    ensure(took < Duration::from_secs(300), || format!("took {took:?}"))?;
    Ok(format!("10 unsat problems x 10^4 points: no witness; {sat} delta-sat witnesses re-checked; {:.1}s", took.as_secs_f64()))
}

fn enclosure_containment() -> Check {
    let x = |_: &str, _: bool| Some(0);
    type Exact = fn(f64, f64) -> f64;
    let fields: [(&str, Expr, Exact); 3] = [
        ("x' = 1", Expr::Num(1.0), |x0, t| x0 + t),
        ("x' = -x", Expr::Neg(Box::new(Expr::var("x"))), |x0, t| x0 * (-t).exp()),
        ("x' = 0", Expr::Num(0.0), |x0, _| x0),
    ];
    let domain = [Interval::new(-100.0, 100.0)];
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut checks = 0;
    for (name, e, solution) in &fields {
        let term = Term::compile(e, &x).map_err(|e| e.to_string())?;
        for _ in 0..100 {
            let x0 = rng.random_range(-5.0..5.0);
            let t_end = rng.random_range(0.1..2.0);
            let enc = enclose_flow(std::slice::from_ref(&term), &[Interval::point(x0)], t_end, &domain, &FlowSettings::uniform(0.01, 20))
                .map_err(|e| format!("{name}: {e}"))?;
            for tile in &enc.tiles {
                for t in [tile.time.lo, tile.time.hi] {
                    let exact = solution(x0, t);
                    ensure(tile.state[0].contains(exact), || format!("{name}, x0 = {x0}: {exact} outside {} at t = {t}", tile.state[0]))?;
                    checks += 1;
                }
            }
        }
    }
    let decay = Term::compile(&fields[1].1, &x).map_err(|e| e.to_string())?;
    let enc = enclose_flow(&[decay], &[Interval::point(1.0)], 1.0, &domain, &FlowSettings::uniform(0.01, 20)).map_err(|e| e.to_string())?;
    let end = enc.terminal[0];
    ensure(end.contains((-1.0f64).exp()), || format!("terminal {end} misses e^-1"))?;
    ensure(end.lo <= 0.367879 + 5e-7 && end.hi >= 0.367879 - 5e-7, || format!("terminal {end} misses 0.367879"))?;
    Ok(format!("{checks} tile boundaries contain the oracle; x(1) in {end}"))
}

fn operating_characteristics() -> Check {
    let start = Instant::now();
    let sprt = TestSpecAst::Sprt { theta: 0.5, t: 100.0, delta: 0.1 };
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut rates = Vec::new();
    for (p, right) in [(0.4, Hypothesis::H0), (0.6, Hypothesis::H1)] {
        let mut wrong = 0;
        for _ in 0..1000 {
            let mut st = TestState::new(sprt);
            let decided = loop {
                match st.update(rng.random_bool(p)).map_err(|e| e.to_string())? {
                    Outcome::Decided(h) => break h,
                    Outcome::Continue => {}
                    o => return Err(format!("unexpected {o:?}")),
                }
            };
            if decided != right {
                wrong += 1;
            }
        }
        ensure(wrong <= 30, || format!("p = {p}: {wrong}/1000 wrong decisions"))?;
        rates.push(wrong);
    }
    let chb = TestSpecAst::Chb { delta: 0.01, coverage: 0.99 };
    let mut st = TestState::new(chb);
    let mut n = 0u64;
    while st.update(rng.random_bool(0.3)).map_err(|e| e.to_string())?.is_continue() {
        n += 1;
    }
    n += 1;
    ensure(n == 26492 && chernoff_samples(0.01, 0.99) == 26492, || format!("CHB stopped after {n}"))?;
    let best = TestSpecAst::Best { delta: 0.01, coverage: 0.99, alpha: 1.0, beta: 1.0 };
    let mut lowest = 1.0f64;
    for _ in 0..200 {
        let p = rng.random::<f64>();
        let mut st = TestState::new(best);
        let (lo, hi) = loop {
            if let Outcome::Estimate { lo, hi, .. } = st.update(rng.random_bool(p)).map_err(|e| e.to_string())? {
                break (lo, hi);
            }
        };
        let (a, b) = st.posterior().ok_or("no posterior")?;
        let mass = common::beta_cdf(hi, a, b) - common::beta_cdf(lo, a, b);
        ensure(mass >= 0.99 - 1e-12, || format!("stopped with mass {mass} on [{lo}, {hi}]"))?;
        lowest = lowest.min(mass);
    }
    let took = start.elapsed();
    ensure(took < Duration::from_secs(120), || format!("took {took:?}"))?;
    Ok(format!("SPRT wrong decisions {}/1000 and {}/1000; CHB n = {n}; BEST min stop mass {lowest:.5}", rates[0], rates[1]))
}

fn desugaring() -> Check {
    let m = corpus_model("guarded_command.pdrh");
    let d = desugar_pha(&m);
    ensure(desugar_pha(&d) == d, || "desugaring is not idempotent".into())?;
    let sel = d.rvs.iter().find(|r| r.synthetic).ok_or("no selector")?.name.clone();
    let rvs = extract_rvs(&m).map_err(|e| e.to_string())?;
    let n = 100_000u64;
    let mut first = 0u64;
    for i in 0..n {
        let s = sample_all(&rvs, &mut RandomStream::for_index(6, i)).map_err(|e| e.to_string())?;
        match s.get(&sel) {
            Some(v) if v == 1.0 => first += 1,
            Some(v) if v == 2.0 => {}
            v => return Err(format!("selector value {v:?}")),
        }
    }
    let sigma = (n as f64 * 0.7 * 0.3).sqrt();
    let dev = (first as f64 - 0.7 * n as f64).abs() / sigma;
    ensure(dev <= 3.0, || format!("branch counts {first}/{} are {dev:.2} sigma off", n - first))?;
    Ok(format!("branch frequencies {:.4}/{:.4} ({dev:.2} sigma); idempotent", first as f64 / n as f64, (n - first) as f64 / n as f64))
}

fn cache_bound() -> Check {
    let m = corpus_model("pha_selectors.pdrh");
    let spec = TestSpecAst::Nsam { n: 1000 };
    let cached = run(&m, spec, &RunConfig::new(2, 0.001, 1)).map_err(|e| e.to_string())?;
    ensure(cached.solver_calls <= 4, || format!("{} solver calls", cached.solver_calls))?;
    let mut cfg = RunConfig::new(2, 0.001, 1);
    cfg.cache = false;
    let plain = run(&m, spec, &cfg).map_err(|e| e.to_string())?;
    ensure(plain.verdicts == cached.verdicts, || "cache-disabled verdicts differ".into())?;
    Ok(format!("{} solver calls for 1000 samples; uncached rerun identical", cached.solver_calls))
}

fn sorted(r: &RunReport) -> Vec<(u64, bool)> {
    let mut v = r.verdicts.clone();
    v.sort_unstable();
    v
}

fn parallel_agreement() -> Check {
    let m = corpus_model("coin.pdrh");
    let spec = TestSpecAst::Nsam { n: 2000 };
    let seq = run(&m, spec, &RunConfig::new(0, 0.001, 5)).map_err(|e| e.to_string())?;
    let mut cfg = RunConfig::new(0, 0.001, 5);
    cfg.mode = ExecMode::Parallel(8);
    let par = run(&m, spec, &cfg).map_err(|e| e.to_string())?;
    ensure(sorted(&seq) == sorted(&par), || "verdict multisets differ".into())?;
    ensure(seq.est_p() == par.est_p(), || format!("{:?} vs {:?}", seq.est_p(), par.est_p()))?;
    let sprt = TestSpecAst::Sprt { theta: 0.5, t: 100.0, delta: 0.05 };
    for seed in 0..20 {
        let a = run(&m, sprt, &RunConfig::new(0, 0.001, seed)).map_err(|e| e.to_string())?;
        let mut cfg = RunConfig::new(0, 0.001, seed);
        cfg.mode = ExecMode::Parallel(8);
        let b = run(&m, sprt, &cfg).map_err(|e| e.to_string())?;
        ensure(a.outcome == b.outcome, || format!("seed {seed}: {:?} vs {:?}", a.outcome, b.outcome))?;
    }
    Ok(format!("NSAM(2000) est_p {:.4} both ways; 20 SPRT decisions agree", seq.est_p().unwrap_or(f64::NAN)))
}

fn round_trip() -> Check {
    let entries = common::corpus();
    for e in &entries {
        let ast = common::load(e);
        let printed = pretty_print(&ast);
        let again = if e.status == "syntax-only" {
            let pre = preprocess_with_macros(&printed).map_err(|err| format!("{}: {err}", e.file))?;
            let mut a = parse_model_unchecked(&pre.text).map_err(|err| format!("{}: {err}", e.file))?;
            a.macros = pre.macros;
            a
        } else {
            load_model(&printed).map_err(|err| format!("{}: {err}", e.file))?
        };
        ensure(again == ast, || format!("{} changes under print and reparse", e.file))?;
        if e.status == "parse-only" {
            HybridModel::from_ast(&ast).map_err(|err| format!("{}: {err}", e.file))?;
        }
    }
    Ok(format!("{} corpus files round-trip", entries.len()))
}

fn best_anchor() -> Check {
    let best = TestSpecAst::Best { delta: 0.01, coverage: 0.99, alpha: 1.0, beta: 1.0 };
    let (a, b) = TestState::from_counts(best, 0.95, 240, 240).posterior().ok_or("no posterior")?;
    let mean = beta_mean(a, b);
    ensure((mean - 241.0 / 242.0).abs() < 1e-15, || format!("mean {mean}"))?;
    let shown = format!("{mean:.3}");
    ensure(shown == "0.996", || format!("rounds to {shown}"))?;
    Ok(format!("posterior mean {mean:.4} rounds to {shown}"))
}

fn main() {
    let checks: [(&str, fn() -> Check); 10] = [
        ("analytic coin probability", coin_probability),
        ("delta-weakening anchor", weakening_anchor),
        ("solver soundness", solver_soundness),
        ("enclosure containment", enclosure_containment),
        ("statistical operating characteristics", operating_characteristics),
        ("desugaring equivalence", desugaring),
        ("cache bound", cache_bound),
        ("parallel/sequential agreement", parallel_agreement),
        ("parser round trip", round_trip),
        ("BEST posterior anchor", best_anchor),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panicked".into()))
        });
        match result {
            Ok(detail) => println!("criterion {:>2} PASS {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", checks.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
