//! Statistical-test option files: one test per line.

use std::fmt;

use super::ast::{Loc, SourceText};
use super::error::{DslError, DslErrorKind};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestSpecAst {
    /// Lai's sequential test with threshold and per-sample cost.
    Lai { theta: f64, cost: f64 },
    /// Bayes factor test.
    Bft { theta: f64, t: f64, alpha: f64, beta: f64 },
    /// Bayes factor test with indifference region of half-width `delta`.
    Bfti { theta: f64, t: f64, alpha: f64, beta: f64, delta: f64 },
    /// Sequential probability ratio test.
    Sprt { theta: f64, t: f64, delta: f64 },
    /// Chernoff-Hoeffding bound.
    Chb { delta: f64, coverage: f64 },
    /// Bayesian interval estimation with a Beta prior.
    Best { delta: f64, coverage: f64, alpha: f64, beta: f64 },
    /// Fixed number of samples.
    Nsam { n: u64 },
}

impl TestSpecAst {
    pub fn name(&self) -> &'static str {
        match self {
            TestSpecAst::Lai { .. } => "Lai",
            TestSpecAst::Bft { .. } => "BFT",
            TestSpecAst::Bfti { .. } => "BFTI",
            TestSpecAst::Sprt { .. } => "SPRT",
            TestSpecAst::Chb { .. } => "CHB",
            TestSpecAst::Best { .. } => "BEST",
            TestSpecAst::Nsam { .. } => "NSAM",
        }
    }

    pub fn is_estimation(&self) -> bool {
        matches!(self, TestSpecAst::Chb { .. } | TestSpecAst::Best { .. } | TestSpecAst::Nsam { .. })
    }

    fn params(&self) -> Vec<f64> {
        match *self {
            TestSpecAst::Lai { theta, cost } => vec![theta, cost],
            TestSpecAst::Bft { theta, t, alpha, beta } => vec![theta, t, alpha, beta],
            TestSpecAst::Bfti { theta, t, alpha, beta, delta } => vec![theta, t, alpha, beta, delta],
            TestSpecAst::Sprt { theta, t, delta } => vec![theta, t, delta],
            TestSpecAst::Chb { delta, coverage } => vec![delta, coverage],
            TestSpecAst::Best { delta, coverage, alpha, beta } => vec![delta, coverage, alpha, beta],
            TestSpecAst::Nsam { n } => vec![n as f64],
        }
    }

    /// Checks every parameter range; the message names the offending parameter.
    pub fn validate(&self) -> Result<(), String> {
        fn open01(name: &str, v: f64) -> Result<(), String> {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(format!("{name} = {v} must lie in (0, 1)"))
            }
        }
        fn positive(name: &str, v: f64) -> Result<(), String> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(format!("{name} = {v} must be positive"))
            }
        }
        fn ratio(v: f64) -> Result<(), String> {
            if v > 1.0 && v.is_finite() {
                Ok(())
            } else {
                Err(format!("T = {v} must be greater than 1"))
            }
        }
        fn region(theta: f64, delta: f64) -> Result<(), String> {
            positive("delta", delta)?;
            if theta - delta > 0.0 && theta + delta < 1.0 {
                Ok(())
            } else {
                Err(format!("indifference region ({}, {}) must lie inside (0, 1)", theta - delta, theta + delta))
            }
        }
        match *self {
            TestSpecAst::Lai { theta, cost } => {
                open01("theta", theta)?;
                open01("cost_per_sample", cost)
            }
            TestSpecAst::Bft { theta, t, alpha, beta } => {
                open01("theta", theta)?;
                ratio(t)?;
                positive("alpha", alpha)?;
                positive("beta", beta)
            }
            TestSpecAst::Bfti { theta, t, alpha, beta, delta } => {
                open01("theta", theta)?;
                ratio(t)?;
                positive("alpha", alpha)?;
                positive("beta", beta)?;
                region(theta, delta)
            }
            TestSpecAst::Sprt { theta, t, delta } => {
                open01("theta", theta)?;
                ratio(t)?;
                region(theta, delta)
            }
            TestSpecAst::Chb { delta, coverage } => {
                open01("delta1", delta)?;
                open01("coverage", coverage)
            }
            TestSpecAst::Best { delta, coverage, alpha, beta } => {
                open01("delta1", delta)?;
                open01("coverage", coverage)?;
                positive("alpha", alpha)?;
                positive("beta", beta)
            }
            TestSpecAst::Nsam { n } => {
                if n >= 1 {
                    Ok(())
                } else {
                    Err("number of samples must be at least 1".into())
                }
            }
        }
    }
}

impl fmt::Display for TestSpecAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())?;
        for p in self.params() {
            write!(f, " {p}")?;
        }
        Ok(())
    }
}

fn arity(name: &str) -> Option<usize> {
    Some(match name {
        "LAI" => 2,
        "BFT" => 4,
        "BFTI" => 5,
        "SPRT" => 3,
        "CHB" => 2,
        "BEST" => 4,
        "NSAM" => 1,
        _ => return None,
    })
}

/// Parses an option file. Blank lines and lines starting with `#` or `//` are skipped.
pub fn parse_test_options(src: &SourceText) -> Result<Vec<TestSpecAst>, DslError> {
    let mut out = Vec::new();
    for (idx, line) in src.content.lines().enumerate() {
        let trimmed = line.trim_start();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with("//") {
            continue;
        }
        let line_no = idx as u32 + 1;
        let col = (line.len() - trimmed.len()) as u32 + 1;
        let err = |kind| DslError::new(&src.origin, Loc::new(line_no, col), kind);

        let mut words = trimmed.split_whitespace();
        let raw_name = words.next().expect("non-empty line");
        let name = raw_name.to_ascii_uppercase();
        let expected = arity(&name).ok_or_else(|| err(DslErrorKind::UnknownTestName(raw_name.to_string())))?;
        let args: Vec<&str> = words.collect();
        if args.len() != expected {
            return Err(err(DslErrorKind::ArityError {
                name: raw_name.to_string(),
                expected,
                found: args.len(),
            }));
        }
        let spec = if name == "NSAM" {
            let n = args[0]
                .parse::<u64>()
                .map_err(|_| err(DslErrorKind::ParameterRangeError(format!("`{}` is not a sample count", args[0]))))?;
            TestSpecAst::Nsam { n }
        } else {
            let mut v = Vec::with_capacity(args.len());
            for a in &args {
                let x = a
                    .parse::<f64>()
                    .map_err(|_| err(DslErrorKind::ParameterRangeError(format!("`{a}` is not a number"))))?;
                v.push(x);
            }
            match name.as_str() {
                "LAI" => TestSpecAst::Lai { theta: v[0], cost: v[1] },
                "BFT" => TestSpecAst::Bft { theta: v[0], t: v[1], alpha: v[2], beta: v[3] },
                "BFTI" => TestSpecAst::Bfti { theta: v[0], t: v[1], alpha: v[2], beta: v[3], delta: v[4] },
                "SPRT" => TestSpecAst::Sprt { theta: v[0], t: v[1], delta: v[2] },
                "CHB" => TestSpecAst::Chb { delta: v[0], coverage: v[1] },
                _ => TestSpecAst::Best { delta: v[0], coverage: v[1], alpha: v[2], beta: v[3] },
            }
        };
        spec.validate().map_err(|m| err(DslErrorKind::ParameterRangeError(m)))?;
        out.push(spec);
    }
    Ok(out)
}
