use std::path::{Path, PathBuf};

use etlab_core::{ArithFnId, ContourSpec, Method, ReferenceCurve, Sign};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// A run description, read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub function: ArithFnId,
    pub n_max: u64,
    #[serde(default)]
    pub jobs: Vec<JobSpec>,
    pub output_dir: PathBuf,
    pub cache_dir: PathBuf,
    /// Absolute accuracy target for zeta evaluations.
    #[serde(default = "default_precision")]
    pub precision: f64,
    /// Seed for Monte-Carlo oracles; the jobs themselves are deterministic.
    #[serde(default)]
    pub seed: u64,
}

fn default_precision() -> f64 {
    1e-12
}

/// Restriction of a moment integral to an oscillation set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Restriction {
    pub lambda: f64,
    pub alpha: f64,
    pub sign: Sign,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum JobSpec {
    /// Dump the sieved table.
    Sieve {},
    /// Δ on `points` equally spaced abscissae of [x1, x2].
    DeltaScan { x1: f64, x2: f64, points: usize },
    /// Threshold set measures on [T, 2T] for every window and sign.
    Measure {
        windows: Vec<f64>,
        alpha: f64,
        lambda: f64,
        signs: Vec<Sign>,
        #[serde(default)]
        reference: Option<ReferenceCurve>,
    },
    /// ∫_T^{2T} Δ^k for every window and power.
    Moment {
        windows: Vec<f64>,
        powers: Vec<u32>,
        #[serde(default)]
        restrict: Option<Restriction>,
    },
    SmoothedMoment {
        #[serde(rename = "T")]
        t: f64,
        ys: Vec<f64>,
        alpha_c: f64,
        cutoff_eps: f64,
    },
    /// A(s) at each point by each method; `s` entries are [re, im].
    Mellin {
        s: Vec<[f64; 2]>,
        methods: Vec<Method>,
        #[serde(default)]
        x_max: Option<f64>,
        #[serde(default)]
        contour: Option<ContourSpec>,
    },
    /// Truncated Perron integral against the star sum.
    Perron {
        xs: Vec<f64>,
        #[serde(rename = "T")]
        t: f64,
        #[serde(default)]
        kappa: Option<f64>,
    },
    /// Closed-form main term against summed circle residues.
    ResidueCheck {
        xs: Vec<f64>,
        #[serde(default = "default_residue_tol")]
        rel_tol: f64,
    },
}

fn default_residue_tol() -> f64 {
    1e-7
}

impl JobSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            JobSpec::Sieve {} => "sieve",
            JobSpec::DeltaScan { .. } => "delta-scan",
            JobSpec::Measure { .. } => "measure",
            JobSpec::Moment { .. } => "moment",
            JobSpec::SmoothedMoment { .. } => "smoothed-moment",
            JobSpec::Mellin { .. } => "mellin",
            JobSpec::Perron { .. } => "perron",
            JobSpec::ResidueCheck { .. } => "residue-check",
        }
    }

    /// Whether the job reads the sieve table.
    pub fn needs_table(&self) -> bool {
        match self {
            JobSpec::ResidueCheck { .. } => false,
            JobSpec::Mellin { methods, .. } => methods.contains(&Method::TruncatedIntegral),
            _ => true,
        }
    }

    /// Certificate jobs are the ones `verify` runs.
    pub fn is_certificate(&self) -> bool {
        matches!(self, JobSpec::Perron { .. } | JobSpec::ResidueCheck { .. })
    }

    /// Abscissa range the job reads, if it reads the table.
    fn span(&self) -> Option<(f64, f64)> {
        let hull = |xs: &mut dyn Iterator<Item = (f64, f64)>| {
            xs.fold(None, |acc: Option<(f64, f64)>, (a, b)| Some(acc.map_or((a, b), |(lo, hi)| (lo.min(a), hi.max(b)))))
        };
        match self {
            JobSpec::Sieve {} | JobSpec::ResidueCheck { .. } => None,
            JobSpec::DeltaScan { x1, x2, .. } => Some((*x1, *x2)),
            JobSpec::Measure { windows, .. } | JobSpec::Moment { windows, .. } => {
                hull(&mut windows.iter().map(|&t| (t, 2.0 * t)))
            }
            JobSpec::SmoothedMoment { t, .. } => Some((*t, *t)),
            JobSpec::Mellin { x_max, methods, .. } => {
                if methods.contains(&Method::TruncatedIntegral) {
                    x_max.map(|x| (1.0, x))
                } else {
                    None
                }
            }
            JobSpec::Perron { xs, .. } => hull(&mut xs.iter().map(|&x| (x, x))),
        }
    }
}

pub const MIN_PRECISION: f64 = 1e-14;
pub const MAX_PRECISION: f64 = 1e-6;

impl JobConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: JobConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.function.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if self.n_max < 2 {
            return Err(CliError::Config(format!("n_max must be at least 2, got {}", self.n_max)));
        }
        if !(MIN_PRECISION..=MAX_PRECISION).contains(&self.precision) {
            return Err(CliError::Config(format!(
                "precision {} outside [{MIN_PRECISION:e}, {MAX_PRECISION:e}]",
                self.precision
            )));
        }
        let n_max = self.n_max as f64;
        for (i, job) in self.jobs.iter().enumerate() {
            if let Some((lo, hi)) = job.span() {
                if !(lo >= 1.0 && hi <= n_max) {
                    return Err(CliError::Config(format!(
                        "job {i} ({}) reads [{lo}, {hi}], outside [1, {n_max}]",
                        job.kind()
                    )));
                }
            }
            if let JobSpec::Mellin { methods, x_max: None, .. } = job {
                if methods.contains(&Method::TruncatedIntegral) {
                    return Err(CliError::Config(format!("job {i} (mellin) needs x_max for the truncated integral")));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(jobs: &str) -> String {
        format!(
            r#"{{"function": {{"tag": "divisor"}}, "n_max": 1000, "output_dir": "o",
                 "cache_dir": "c", "jobs": {jobs}}}"#
        )
    }

    #[test]
    fn parses_every_job_kind() {
        let jobs = r#"[
            {"kind": "sieve"},
            {"kind": "delta-scan", "x1": 1, "x2": 10, "points": 5},
            {"kind": "measure", "windows": [100], "alpha": 0.25, "lambda": 0.1, "signs": ["above", "below"]},
            {"kind": "moment", "windows": [100], "powers": [2, 4],
             "restrict": {"lambda": 0.1, "alpha": 0.25, "sign": "absolute"}},
            {"kind": "smoothed-moment", "T": 100, "ys": [50], "alpha_c": 0.1, "cutoff_eps": 1e-6},
            {"kind": "mellin", "s": [[2, 0], [2, 5]], "methods": ["closed_form", "contour"]},
            {"kind": "perron", "xs": [123.5], "T": 100},
            {"kind": "residue-check", "xs": [10, 100]}
        ]"#;
        let cfg = JobConfig::from_json(&base(jobs)).unwrap();
        assert_eq!(cfg.jobs.len(), 8);
        assert_eq!(cfg.precision, 1e-12);
        let kinds: Vec<_> = cfg.jobs.iter().map(|j| j.kind()).collect();
        assert_eq!(kinds[4], "smoothed-moment");
        assert!(!cfg.jobs[5].needs_table());
        assert!(cfg.jobs[6].is_certificate());
    }

    #[test]
    fn rejects_windows_past_n_max() {
        let jobs = r#"[{"kind": "moment", "windows": [600], "powers": [2]}]"#;
        assert!(matches!(JobConfig::from_json(&base(jobs)), Err(CliError::Config(_))));
    }

    #[test]
    fn rejects_bad_precision_and_unknown_fields() {
        let text = base("[]").replace("\"jobs\"", "\"precision\": 1e-3, \"jobs\"");
        assert!(JobConfig::from_json(&text).is_err());
        let text = base(r#"[{"kind": "sieve", "extra": 1}]"#);
        assert!(JobConfig::from_json(&text).is_err());
        assert!(JobConfig::from_json("{not json").is_err());
    }

    #[test]
    fn truncated_mellin_needs_x_max() {
        let jobs = r#"[{"kind": "mellin", "s": [[2, 0]], "methods": ["truncated_integral"]}]"#;
        assert!(JobConfig::from_json(&base(jobs)).is_err());
    }
}
