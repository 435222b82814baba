//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

/// Fixed-step classical Runge-Kutta integration of an autonomous field.
pub fn rk4(f: &dyn Fn(&[f64]) -> Vec<f64>, x0: &[f64], t: f64, steps: usize) -> Vec<f64> {
    let h = t / steps as f64;
    let mut x = x0.to_vec();
    let axpy = |x: &[f64], a: f64, k: &[f64]| -> Vec<f64> { x.iter().zip(k).map(|(x, k)| x + a * k).collect() };
    for _ in 0..steps {
        let k1 = f(&x);
        let k2 = f(&axpy(&x, h / 2.0, &k1));
        let k3 = f(&axpy(&x, h / 2.0, &k2));
        let k4 = f(&axpy(&x, h, &k3));
        for i in 0..x.len() {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    x
}

/// Regularized lower incomplete beta by continued fraction (Lentz).
pub fn beta_cdf(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    if x > (a + 1.0) / (a + b + 2.0) {
        return 1.0 - beta_cdf(1.0 - x, b, a);
    }
    let ln_front = a * x.ln() + b * (1.0 - x).ln() - ln_beta(a, b);
    let tiny = 1e-300;
    let mut c = 1.0;
    let mut d = 1.0 - (a + b) * x / (a + 1.0);
    if d.abs() < tiny {
        d = tiny;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..10_000 {
        let m = m as f64;
        for num in [
            m * (b - m) * x / ((a + 2.0 * m - 1.0) * (a + 2.0 * m)),
            -(a + m) * (a + b + m) * x / ((a + 2.0 * m) * (a + 2.0 * m + 1.0)),
        ] {
            d = 1.0 + num * d;
            if d.abs() < tiny {
                d = tiny;
            }
            c = 1.0 + num / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            h *= d * c;
        }
        if (d * c - 1.0).abs() < 1e-15 {
            break;
        }
    }
    ln_front.exp() * h / a
}

/// ln B(a, b) through Lanczos log-gamma.
pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

pub fn ln_gamma(x: f64) -> f64 {
    const G: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return (std::f64::consts::PI / (std::f64::consts::PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut s = G[0];
    for (i, g) in G.iter().enumerate().skip(1) {
        s += g / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + s.ln()
}

/// Standard normal quantile by bisection on erfc-free series CDF.
pub fn normal_quantile(p: f64) -> f64 {
    let cdf = |z: f64| 0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2));
    let (mut lo, mut hi) = (-40.0, 40.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Error function, Abramowitz-Stegun 7.1.26 refined by Taylor series near 0.
pub fn erf(x: f64) -> f64 {
    if x.abs() < 3.0 {
        // Maclaurin series converges well on this range.
        let mut sum = 0.0f64;
        let mut term = x;
        let mut n = 0.0;
        while term.abs() > 1e-17 * sum.abs().max(1e-300) || n < 3.0 {
            sum += term / (2.0 * n + 1.0);
            n += 1.0;
            term *= -x * x / n;
            if n > 400.0 {
                break;
            }
        }
        return 2.0 / std::f64::consts::PI.sqrt() * sum;
    }
    // Asymptotic continued fraction for the tail.
    let ax = x.abs();
    let mut f = 0.0;
    for k in (1..=60).rev() {
        f = (k as f64 / 2.0) / (ax + f);
    }
    let erfc = (-ax * ax).exp() / std::f64::consts::PI.sqrt() / (ax + f);
    (1.0 - erfc).copysign(x)
}

/// One line of the corpus manifest.
#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub file: String,
    pub status: String,
    pub k: usize,
    pub options: String,
    pub expected_p: f64,
    pub budget_s: f64,
}

impl CorpusEntry {
    pub fn runnable(&self) -> bool {
        self.status == "runnable"
    }

    pub fn path(&self) -> std::path::PathBuf {
        corpus_dir().join(&self.file)
    }
}

pub fn corpus_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub fn corpus() -> Vec<CorpusEntry> {
    let text = std::fs::read_to_string(corpus_dir().join("MANIFEST.tsv")).expect("corpus manifest");
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split('\t').collect();
            CorpusEntry {
                file: f[0].to_string(),
                status: f[1].to_string(),
                k: f[2].parse().unwrap_or(0),
                options: f[3].to_string(),
                expected_p: f[4].parse().unwrap_or(f64::NAN),
                budget_s: f[5].parse().unwrap_or(f64::NAN),
            }
        })
        .collect()
}

/// Loads a corpus model; syntax-only files skip name resolution.
pub fn load(entry: &CorpusEntry) -> stochreach::dsl::ModelAst {
    use stochreach::dsl::{load_model, parse_model_unchecked, preprocess_with_macros, SourceText};
    let src = SourceText::from_file(&entry.path()).expect("corpus file");
    if entry.status == "syntax-only" {
        let pre = preprocess_with_macros(&src).unwrap();
        let mut ast = parse_model_unchecked(&pre.text).unwrap();
        ast.macros = pre.macros;
        ast
    } else {
        load_model(&src).unwrap_or_else(|e| panic!("{}: {e}", entry.file))
    }
}

/// Searches for a point that satisfies every constraint of `p` up to `tol`,
/// walking the path forward: start states and dwell times are drawn from the
/// contracted box and each flow is integrated with RK4 while the invariant
/// and the declared bounds are checked along the way.
pub fn falsify(p: &stochreach::encoder::UnfoldedProblem, tries: usize, seed: u64) -> Option<Vec<f64>> {
    use rand::{Rng, SeedableRng};
    use stochreach::interval::Interval;
    let tol = 1e-9;
    let loose = p.algebraic().weaken(tol);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut root = p.domain.clone();
    if !loose.contract(&mut root) {
        return None;
    }
    let draw = |rng: &mut rand_chacha::ChaCha8Rng, i: Interval| if i.width() > 0.0 { rng.random_range(i.lo..=i.hi) } else { i.lo };
    'attempt: for _ in 0..tries {
        let mut b = root.clone();
        for fl in &p.flows {
            let mut x = vec![0.0; p.n];
            for j in 0..p.n {
                x[j] = draw(&mut rng, b[fl.x + j]);
                b[fl.x + j] = Interval::point(x[j]);
            }
            if !loose.contract(&mut b) {
                continue 'attempt;
            }
            let t = draw(&mut rng, b[fl.t]);
            b[fl.t] = Interval::point(t);
            let inv = fl.invariant.weaken(tol);
            let field = |s: &[f64]| fl.field.iter().map(|f| f.eval_point(s)).collect::<Vec<f64>>();
            let chunks = ((t / 1e-2).ceil() as usize).max(1);
            for _ in 0..chunks {
                if !inv.holds_at(&x) || x.iter().zip(&p.state_bounds).any(|(v, d)| !(d.lo - tol..=d.hi + tol).contains(v)) {
                    continue 'attempt;
                }
                x = rk4(&field, &x, t / chunks as f64, 20);
            }
            if !inv.holds_at(&x) {
                continue 'attempt;
            }
            for j in 0..p.n {
                b[fl.xt + j] = Interval::point(x[j]);
            }
            if !loose.contract(&mut b) {
                continue 'attempt;
            }
        }
        let point: Vec<f64> = b.iter().map(|i| i.lo).collect();
        if loose.holds_at(&point) {
            return Some(point);
        }
    }
    None
}

pub const DELTA: f64 = 0.001;

pub struct Solved {
    pub label: String,
    pub problem: stochreach::encoder::UnfoldedProblem,
    pub verdict: stochreach::solver::Verdict,
}

/// Unfoldings of the first samples of every runnable corpus model, solved.
pub fn solved_corpus(samples: u64) -> Vec<Solved> {
    use stochreach::model::{extract_rvs, HybridModel};
    use stochreach::sampler::{sample_all, RandomStream};
    let cfg = stochreach::solver::DeltaConfig::with_delta(DELTA);
    let mut out = Vec::new();
    for e in corpus().iter().filter(|e| e.runnable()) {
        let m = HybridModel::from_ast(&load(e)).unwrap();
        let rvs = extract_rvs(&m).unwrap();
        for i in 0..samples {
            let Ok(s) = sample_all(&rvs, &mut RandomStream::for_index(11, i)) else {
                continue;
            };
            for (j, problem) in stochreach::engine::unfoldings(&m, &s, e.k, DELTA).unwrap().into_iter().enumerate() {
                let verdict = stochreach::solver::icp_solve(&problem, &cfg);
                out.push(Solved { label: format!("{} sample {i} path {j}", e.file), problem, verdict });
            }
        }
    }
    out
}

/// Ten unsat problems, taken round-robin across models.
pub fn unsat_selection(all: &[Solved]) -> Vec<&Solved> {
    let mut by_model: Vec<(String, Vec<&Solved>)> = Vec::new();
    for s in all.iter().filter(|s| s.verdict.is_unsat()) {
        let model = s.label.split(' ').next().unwrap().to_string();
        match by_model.iter_mut().find(|(m, _)| *m == model) {
            Some((_, v)) => v.push(s),
            None => by_model.push((model, vec![s])),
        }
    }
    let mut picked = Vec::new();
    for round in 0.. {
        let before = picked.len();
        for (_, v) in &by_model {
            if picked.len() < 10 && round < v.len() {
                picked.push(v[round]);
            }
        }
        if picked.len() == 10 || picked.len() == before {
            break;
        }
    }
    picked
}
