//! The sampling loop: draw a sample, instantiate, decide bounded
//! reachability on every path, fold the verdict into the test.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{mpsc, Arc, Mutex};
use std::time::Instant;

use thiserror::Error;

use crate::dsl::TestSpecAst;
use crate::encoder::{enumerate_paths, unfold, ReachQuery, UnfoldedProblem};
use crate::model::{desugar_pha, extract_rvs, instantiate, HybridModel, ModelError, RandomVariable, Sample};
use crate::sampler::{sample_all, RandomStream, SamplerError};
use crate::solver::{icp_solve, DeltaConfig, ExternalError, ExternalSolver, Verdict};
use crate::stats::{Outcome, StatsError, TestState, DEFAULT_NSAM_CONFIDENCE};

/// Consecutive rejected samples after which a run gives up.
pub const MAX_CONSECUTIVE_REJECTIONS: u64 = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub enum ExecMode {
    Sequential,
    Parallel(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolverChoice {
    Builtin(DeltaConfig),
    External(ExternalSolver),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub k: usize,
    pub delta: f64,
    pub seed: u64,
    pub mode: ExecMode,
    pub solver: SolverChoice,
    /// Cap on drawn sample indices; reaching it leaves the run inconclusive.
    pub max_samples: Option<u64>,
    pub cache: bool,
    pub nsam_confidence: f64,
}

impl RunConfig {
    pub fn new(k: usize, delta: f64, seed: u64) -> RunConfig {
        RunConfig {
            k,
            delta,
            seed,
            mode: ExecMode::Sequential,
            solver: SolverChoice::Builtin(DeltaConfig::with_delta(delta)),
            max_samples: None,
            cache: true,
            nsam_confidence: DEFAULT_NSAM_CONFIDENCE,
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |m: String| Err(EngineError::InvalidConfig(m));
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return bad(format!("delta must be positive, got {}", self.delta));
        }
        if let ExecMode::Parallel(0) = self.mode {
            return bad("parallel mode needs at least one worker".into());
        }
        if !(self.nsam_confidence > 0.0 && self.nsam_confidence < 1.0) {
            return bad(format!("NSAM confidence must lie in (0, 1), got {}", self.nsam_confidence));
        }
        if let SolverChoice::Builtin(c) = &self.solver {
            if c.delta != self.delta {
                return bad(format!("solver delta {} differs from run delta {}", c.delta, self.delta));
            }
            if let Some(e) = c.validate().into_iter().find(|m| !m.starts_with("warning:")) {
                return bad(e);
            }
        }
        Ok(())
    }

    fn workers(&self) -> usize {
        match self.mode {
            ExecMode::Sequential => 1,
            ExecMode::Parallel(w) => w,
        }
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    External(#[from] ExternalError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("{0} consecutive samples were rejected by probability validation")]
    AllSamplesRejected(u64),
}

/// Result of deciding one sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleVerdict {
    /// Counted as a success of the Bernoulli stream.
    pub sat: bool,
    /// No path was δ-sat but some search ran out of budget.
    pub budget_exhausted: bool,
    pub solver_calls: usize,
}

/// Unfolded problems for every path of depth `0..=k` of the instantiated model.
pub fn unfoldings(m: &HybridModel, s: &Sample, k: usize, delta: f64) -> Result<Vec<UnfoldedProblem>, ModelError> {
    let cm = instantiate(m, s)?;
    let mut out = Vec::new();
    for j in 0..=k {
        let q = ReachQuery { k: j, time_bound: cm.time_bound, delta };
        out.extend(enumerate_paths(&cm, j).iter().map(|p| unfold(&cm, p, &q)));
    }
    Ok(out)
}

/// Bounded reachability of the goal within `k` jumps for one sample.
pub fn check_sample(m: &HybridModel, s: &Sample, cfg: &RunConfig) -> Result<SampleVerdict, EngineError> {
    let cm = instantiate(m, s)?;
    match &cfg.solver {
        SolverChoice::External(ext) => {
            let v = ext.solve(&cm, cfg.k, cfg.delta)?;
            Ok(SampleVerdict { sat: !v.is_unsat(), budget_exhausted: false, solver_calls: 1 })
        }
        SolverChoice::Builtin(dc) => {
            let mut calls = 0;
            let mut exhausted = false;
            for j in 0..=cfg.k {
                let q = ReachQuery { k: j, time_bound: cm.time_bound, delta: cfg.delta };
                for path in enumerate_paths(&cm, j) {
                    calls += 1;
                    match icp_solve(&unfold(&cm, &path, &q), dc) {
                        Verdict::DeltaSat(_) => return Ok(SampleVerdict { sat: true, budget_exhausted: false, solver_calls: calls }),
                        Verdict::BudgetExhausted { .. } => exhausted = true,
                        Verdict::Unsat => {}
                    }
                }
            }
            Ok(SampleVerdict { sat: exhausted, budget_exhausted: exhausted, solver_calls: calls })
        }
    }
}

/// Verdicts keyed by the exact bit patterns of a sample. Each key has its own
/// lock, so concurrent requests for one sample solve it once.
#[derive(Debug, Default)]
pub struct VerdictCache {
    entries: Mutex<HashMap<Vec<u64>, Arc<Mutex<Option<SampleVerdict>>>>>,
}

impl VerdictCache {
    pub fn new() -> VerdictCache {
        VerdictCache::default()
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cached verdict, or the result of `solve` stored for later. The flag is
    /// true on a hit.
    pub fn get_or_solve(
        &self,
        s: &Sample,
        solve: impl FnOnce() -> Result<SampleVerdict, EngineError>,
    ) -> Result<(SampleVerdict, bool), EngineError> {
        let slot = self.entries.lock().unwrap().entry(s.key()).or_default().clone();
        let mut slot = slot.lock().unwrap();
        if let Some(v) = *slot {
            return Ok((v, true));
        }
        let v = solve()?;
        *slot = Some(v);
        Ok((v, false))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub spec: TestSpecAst,
    /// Final outcome; `Continue` when the sample cap was reached first.
    pub outcome: Outcome,
    /// Meaning of the decided hypothesis, for hypothesis tests.
    pub decision: Option<String>,
    pub sat_samples: u64,
    pub total_samples: u64,
    pub avg_time_s: f64,
    pub total_time_s: f64,
    pub cache_hits: u64,
    pub solver_calls: u64,
    pub budget_exhausted: u64,
    pub rejected_samples: u64,
    pub seed: u64,
    pub k: usize,
    pub delta: f64,
    pub workers: usize,
    pub inconclusive: bool,
    /// `(sample index, counted verdict)` in fold order.
    pub verdicts: Vec<(u64, bool)>,
}

impl RunReport {
    /// Point estimate for estimation specs.
    pub fn est_p(&self) -> Option<f64> {
        match self.outcome {
            Outcome::Estimate { point, .. } => Some(point),
            _ => None,
        }
    }

    pub fn interval(&self) -> Option<(f64, f64)> {
        match self.outcome {
            Outcome::Estimate { lo, hi, .. } => Some((lo, hi)),
            _ => None,
        }
    }
}

/// What happened at one sample index.
#[derive(Debug)]
enum Draw {
    Rejected,
    Checked { verdict: SampleVerdict, hit: bool },
}

struct Runner<'a> {
    model: &'a HybridModel,
    rvs: Vec<RandomVariable>,
    cfg: &'a RunConfig,
    cache: VerdictCache,
}

fn is_rejection(e: &EngineError) -> bool {
    matches!(
        e,
        EngineError::Model(ModelError::ProbabilityValidationError { .. })
            | EngineError::Sampler(SamplerError::Model(ModelError::ProbabilityValidationError { .. }))
    )
}

impl Runner<'_> {
    fn sample(&self, index: u64) -> Result<Sample, EngineError> {
        Ok(sample_all(&self.rvs, &mut RandomStream::for_index(self.cfg.seed, index))?)
    }

    fn draw(&self, index: u64) -> Result<Draw, EngineError> {
        let result = self.sample(index).and_then(|s| {
            let solve = || check_sample(self.model, &s, self.cfg);
            if self.cfg.cache {
                self.cache.get_or_solve(&s, solve)
            } else {
                solve().map(|v| (v, false))
            }
        });
        match result {
            Ok((verdict, hit)) => Ok(Draw::Checked { verdict, hit }),
            Err(e) if is_rejection(&e) => Ok(Draw::Rejected),
            Err(e) => Err(e),
        }
    }
}

/// Fold state shared by both execution modes.
struct Fold {
    state: TestState,
    report: RunReport,
    rejected_run: u64,
}

impl Fold {
    /// Applies one index; returns true once the test has stopped.
    fn apply(&mut self, index: u64, d: Draw) -> Result<bool, EngineError> {
        match d {
            Draw::Rejected => {
                self.report.rejected_samples += 1;
                self.rejected_run += 1;
                if self.rejected_run >= MAX_CONSECUTIVE_REJECTIONS {
                    return Err(EngineError::AllSamplesRejected(self.rejected_run));
                }
                Ok(false)
            }
            Draw::Checked { verdict, hit } => {
                self.rejected_run = 0;
                let r = &mut self.report;
                if hit {
                    r.cache_hits += 1;
                } else {
                    r.solver_calls += verdict.solver_calls as u64;
                }
                r.budget_exhausted += u64::from(verdict.budget_exhausted);
                r.sat_samples += u64::from(verdict.sat);
                r.total_samples += 1;
                r.verdicts.push((index, verdict.sat));
                Ok(!self.state.update(verdict.sat)?.is_continue())
            }
        }
    }
}

/// Runs one statistical test to completion.
pub fn run(m: &HybridModel, spec: TestSpecAst, cfg: &RunConfig) -> Result<RunReport, EngineError> {
    cfg.validate()?;
    spec.validate().map_err(EngineError::InvalidConfig)?;
    let start = Instant::now();
    let model = if m.commands.is_empty() { m.clone() } else { desugar_pha(m) };
    let runner = Runner { model: &model, rvs: extract_rvs(&model)?, cfg, cache: VerdictCache::new() };
    let mut fold = Fold {
        state: TestState::with_confidence(spec, cfg.nsam_confidence),
        report: RunReport {
            spec,
            outcome: Outcome::Continue,
            decision: None,
            sat_samples: 0,
            total_samples: 0,
            avg_time_s: 0.0,
            total_time_s: 0.0,
            cache_hits: 0,
            solver_calls: 0,
            budget_exhausted: 0,
            rejected_samples: 0,
            seed: cfg.seed,
            k: cfg.k,
            delta: cfg.delta,
            workers: cfg.workers(),
            inconclusive: false,
            verdicts: Vec::new(),
        },
        rejected_run: 0,
    };
    let cap = cfg.max_samples.unwrap_or(u64::MAX);
    let stopped = match cfg.mode {
        ExecMode::Sequential => run_sequential(&runner, &mut fold, cap)?,
        ExecMode::Parallel(w) => run_parallel(&runner, &mut fold, cap, w)?,
    };
    let mut report = fold.report;
    report.outcome = fold.state.last();
    report.inconclusive = !stopped;
    if let Outcome::Decided(h) = report.outcome {
        report.decision = Some(fold.state.describe(h));
    }
    report.total_time_s = start.elapsed().as_secs_f64();
    report.avg_time_s = if report.total_samples == 0 { 0.0 } else { report.total_time_s / report.total_samples as f64 };
    Ok(report)
}

fn run_sequential(runner: &Runner, fold: &mut Fold, cap: u64) -> Result<bool, EngineError> {
    for index in 0..cap {
        if fold.apply(index, runner.draw(index)?)? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Workers claim indices in increasing order; results are folded in index
/// order through a reorder buffer, so the fold sees the sequential stream.
fn run_parallel(runner: &Runner, fold: &mut Fold, cap: u64, workers: usize) -> Result<bool, EngineError> {
    let next = AtomicU64::new(0);
    let stop = AtomicBool::new(false);
    std::thread::scope(|scope| {
        let (tx, rx) = mpsc::channel::<(u64, Result<Draw, EngineError>)>();
        for _ in 0..workers {
            let tx = tx.clone();
            let (next, stop) = (&next, &stop);
            scope.spawn(move || {
                while !stop.load(Ordering::Relaxed) {
                    let index = next.fetch_add(1, Ordering::Relaxed);
                    if index >= cap {
                        break;
                    }
                    if tx.send((index, runner.draw(index))).is_err() {
                        break;
                    }
                }
            });
        }
        drop(tx);
        let mut pending = BTreeMap::new();
        let mut expected = 0u64;
        let result = (|| {
            for (index, d) in rx.iter() {
                pending.insert(index, d);
                while let Some(d) = pending.remove(&expected) {
                    let done = fold.apply(expected, d?)?;
                    expected += 1;
                    if done {
                        return Ok(true);
                    }
                }
            }
            Ok(false)
        })();
        stop.store(true, Ordering::Relaxed);
        result
    })
}
