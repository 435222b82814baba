//! One output record per test spec, rendered as text, TSV or JSON.

use serde::Serialize;
use stochreach::engine::RunReport;

/// TSV column order; JSON uses the same names.
pub const COLUMNS: [&str; 13] = [
    "spec",
    "decision",
    "est_p",
    "interval_lo",
    "interval_hi",
    "sat_samples",
    "total_samples",
    "avg_time_s",
    "total_time_s",
    "cache_hits",
    "budget_exhausted",
    "rejected_samples",
    "seed",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    pub spec: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decision: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub est_p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interval: Option<[f64; 2]>,
    pub sat_samples: u64,
    pub total_samples: u64,
    pub avg_time_s: f64,
    pub total_time_s: f64,
    pub cache_hits: u64,
    pub budget_exhausted: u64,
    pub rejected_samples: u64,
    pub seed: u64,
}

impl Record {
    pub fn from_report(r: &RunReport) -> Record {
        let decision = if r.inconclusive { Some("inconclusive".to_string()) } else { r.decision.clone() };
        Record {
            spec: r.spec.to_string(),
            decision,
            est_p: r.est_p(),
            interval: r.interval().map(|(lo, hi)| [lo, hi]),
            sat_samples: r.sat_samples,
            total_samples: r.total_samples,
            avg_time_s: r.avg_time_s,
            total_time_s: r.total_time_s,
            cache_hits: r.cache_hits,
            budget_exhausted: r.budget_exhausted,
            rejected_samples: r.rejected_samples,
            seed: r.seed,
        }
    }

    pub fn json(&self) -> String {
        serde_json::to_string(self).expect("records serialize")
    }

    pub fn tsv_header() -> String {
        COLUMNS.join("\t")
    }

    pub fn tsv(&self) -> String {
        let opt = |v: Option<String>| v.unwrap_or_else(|| "-".to_string());
        [
            self.spec.clone(),
            opt(self.decision.clone()),
            opt(self.est_p.map(|p| p.to_string())),
            opt(self.interval.map(|i| i[0].to_string())),
            opt(self.interval.map(|i| i[1].to_string())),
            self.sat_samples.to_string(),
            self.total_samples.to_string(),
            self.avg_time_s.to_string(),
            self.total_time_s.to_string(),
            self.cache_hits.to_string(),
            self.budget_exhausted.to_string(),
            self.rejected_samples.to_string(),
            self.seed.to_string(),
        ]
        .join("\t")
    }

    pub fn text(&self) -> String {
        let mut out = format!("{}\n", self.spec);
        if let Some(d) = &self.decision {
            out += &format!("  decision          {d}\n");
        }
        if let Some(p) = self.est_p {
            out += &format!("  est_p             {p:.6}\n");
        }
        if let Some([lo, hi]) = self.interval {
            out += &format!("  interval          [{lo:.6}, {hi:.6}]\n");
        }
        out += &format!("  sat/total         {}/{}\n", self.sat_samples, self.total_samples);
        out += &format!("  avg/total time    {:.6}s / {:.3}s\n", self.avg_time_s, self.total_time_s);
        out += &format!("  cache hits        {}\n", self.cache_hits);
        out += &format!("  budget exhausted  {}\n", self.budget_exhausted);
        out += &format!("  rejected samples  {}\n", self.rejected_samples);
        out += &format!("  seed              {}\n", self.seed);
        out
    }
}
