use std::fs;
use std::path::Path;
use std::time::Instant;

use etlab_core::cache::FORMAT_VERSION;
use etlab_core::main_term::MainTermModel;
use etlab_core::{
    build_main_term, contour_a_many, default_kappa, eval_main_term, mellin_closed_form, mellin_truncated_many, moment,
    oscillation_measure_with_reference, perron_estimate_many, read_header, read_table, residue_main_term_sum,
    sieve_table, smoothed_second_moment, write_table, ArithFnId, Complex64, ContourSpec, DeltaEvaluator, Method,
    OscillationQuery, SieveTable, SmoothedMomentQuery, ZetaContext,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{JobConfig, JobSpec};
use crate::error::{exit, CliError};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobStatus {
    Ok,
    Failed,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobRecord {
    pub index: usize,
    pub kind: String,
    pub status: JobStatus,
    /// Set for jobs that read the sieve table: whether it came from the cache.
    pub cache_hit: Option<bool>,
    pub wall_seconds: f64,
    pub output: Option<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub file: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: JobConfig,
    pub tool_version: String,
    pub cache_version: u32,
    pub jobs: Vec<JobRecord>,
    pub outputs: Vec<OutputFile>,
    pub exit_code: i32,
}

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Run only certificate jobs (perron, residue-check); others are skipped.
    pub certificates_only: bool,
}

/// File name of the cached table for a function and size.
pub fn cache_file_name(fn_id: ArithFnId, n_max: u64) -> String {
    let theta = fn_id.theta().map(|t| format!("_theta{:016x}", t.to_bits())).unwrap_or_default();
    format!("{}{theta}_n{n_max}_v{FORMAT_VERSION}.etlb", fn_id.name())
}

/// Loads the table from the cache when the header matches, otherwise sieves
/// and stores it. Returns the table and whether it was a cache hit.
pub fn load_or_sieve(fn_id: ArithFnId, n_max: u64, cache_dir: &Path) -> Result<(SieveTable, bool), CliError> {
    let path = cache_dir.join(cache_file_name(fn_id, n_max));
    if let Ok(h) = read_header(&path) {
        if h.version == FORMAT_VERSION && h.fn_id == fn_id && h.n_max == n_max {
            if let Ok(t) = read_table(&path) {
                return Ok((t, true));
            }
        }
    }
    let table = sieve_table(fn_id, n_max)?;
    fs::create_dir_all(cache_dir)?;
    let tmp = path.with_extension("tmp");
    write_table(&table, &tmp)?;
    fs::rename(&tmp, &path)?;
    Ok((table, false))
}

/// Rows of one CSV file.
struct Csv {
    header: &'static [&'static str],
    rows: Vec<Vec<String>>,
}

impl Csv {
    fn new(header: &'static [&'static str]) -> Self {
        Self { header, rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// A job's rows plus an optional certificate failure detected after the
/// rows were computed.
struct JobOutput {
    csv: Csv,
    failure: Option<CliError>,
}

impl From<Csv> for JobOutput {
    fn from(csv: Csv) -> Self {
        Self { csv, failure: None }
    }
}

fn f(v: f64) -> String {
    v.to_string()
}

struct Context<'c> {
    config: &'c JobConfig,
    zeta: ZetaContext,
    table: Option<Result<(SieveTable, bool), etlab_core::Error>>,
    model: Option<MainTermModel>,
}

impl Context<'_> {
    fn model(&mut self) -> Result<&MainTermModel, CliError> {
        if self.model.is_none() {
            self.model = Some(build_main_term(self.config.function, &self.zeta)?);
        }
        Ok(self.model.as_ref().expect("model was just built"))
    }

    /// The table, sieved or loaded on first use. A failure is remembered
    /// and reported to every later job that needs the table.
    fn ensure_table(&mut self) -> Result<bool, CliError> {
        let config = self.config;
        let slot = self.table.get_or_insert_with(|| {
            load_or_sieve(config.function, config.n_max, &config.cache_dir).map_err(|e| match e {
                CliError::Core(e) => e,
                other => etlab_core::Error::Io(other.to_string()),
            })
        });
        match slot {
            Ok((_, hit)) => Ok(*hit),
            Err(e) => Err(CliError::Core(e.clone())),
        }
    }
}

pub fn run(config: &JobConfig) -> Result<RunManifest, CliError> {
    run_with(config, RunOptions::default())
}

/// Executes the jobs in order, writing one CSV per job and `manifest.json`.
/// Job failures are recorded in the manifest; only failures to write the
/// outputs themselves are returned as errors.
pub fn run_with(config: &JobConfig, opts: RunOptions) -> Result<RunManifest, CliError> {
    config.validate()?;
    let zeta = ZetaContext::with_target(config.precision)?;
    fs::create_dir_all(&config.output_dir)?;
    let mut ctx = Context { config, zeta, table: None, model: None };
    let mut jobs = Vec::with_capacity(config.jobs.len());
    let mut outputs = Vec::new();
    let mut codes = Vec::new();
    for (index, job) in config.jobs.iter().enumerate() {
        let kind = job.kind().to_string();
        if opts.certificates_only && !job.is_certificate() {
            jobs.push(JobRecord {
                index,
                kind,
                status: JobStatus::Skipped,
                cache_hit: None,
                wall_seconds: 0.0,
                output: None,
                error: None,
            });
            continue;
        }
        let start = Instant::now();
        let mut cache_hit = None;
        let result = (|| {
            if job.needs_table() {
                cache_hit = Some(ctx.ensure_table()?);
            }
            run_job(&mut ctx, job)
        })();
        let file = format!("{index:02}_{kind}.csv");
        let (status, output, error) = match result {
            Ok(out) => {
                let path = config.output_dir.join(&file);
                out.csv.write(&path)?;
                outputs.push(checksum(&config.output_dir, &file)?);
                match out.failure {
                    None => (JobStatus::Ok, Some(file), None),
                    Some(e) => {
                        codes.push(e.exit_code());
                        (JobStatus::Failed, Some(file), Some(e.to_string()))
                    }
                }
            }
            Err(e) => {
                codes.push(e.exit_code());
                (JobStatus::Failed, None, Some(e.to_string()))
            }
        };
        jobs.push(JobRecord {
            index,
            kind,
            status,
            cache_hit,
            wall_seconds: start.elapsed().as_secs_f64(),
            output,
            error,
        });
    }
    let manifest = RunManifest {
        config: config.clone(),
        tool_version: TOOL_VERSION.to_string(),
        cache_version: FORMAT_VERSION,
        jobs,
        outputs,
        exit_code: combine_codes(&codes),
    };
    let text = serde_json::to_string_pretty(&manifest)?;
    fs::write(config.output_dir.join(MANIFEST_FILE), text + "\n")?;
    Ok(manifest)
}

/// Capacity beats certificate failures, which beat other job failures.
fn combine_codes(codes: &[i32]) -> i32 {
    [exit::CAPACITY, exit::CERTIFICATE, exit::JOB_FAILED].into_iter().find(|c| codes.contains(c)).unwrap_or(exit::OK)
}

fn checksum(dir: &Path, file: &str) -> Result<OutputFile, CliError> {
    let bytes = fs::read(dir.join(file))?;
    Ok(OutputFile { file: file.to_string(), bytes: bytes.len() as u64, sha256: hex::encode(Sha256::digest(&bytes)) })
}

fn run_job(ctx: &mut Context<'_>, job: &JobSpec) -> Result<JobOutput, CliError> {
    let fn_id = ctx.config.function;
    match job {
        JobSpec::Sieve {} => {
            let table = table_of(ctx);
            let mut csv = Csv::new(&["n", "value", "prefix"]);
            for n in 1..=table.n_max() {
                csv.push(vec![n.to_string(), f(table.value(n)), f(table.prefix_at(n))]);
            }
            Ok(csv.into())
        }
        JobSpec::DeltaScan { x1, x2, points } => {
            if *points < 2 || !(x2 > x1) {
                return Err(CliError::Config("delta-scan needs x2 > x1 and at least 2 points".into()));
            }
            ctx.model()?;
            let ev = evaluator(ctx)?;
            let mut csv = Csv::new(&["x", "delta"]);
            for i in 0..*points {
                let x = x1 + (x2 - x1) * i as f64 / (*points - 1) as f64;
                csv.push(vec![f(x), f(ev.delta_at(x)?)]);
            }
            Ok(csv.into())
        }
        JobSpec::Measure { windows, alpha, lambda, signs, reference } => {
            ctx.model()?;
            let ev = evaluator(ctx)?;
            let mut csv = Csv::new(&["T", "alpha", "lambda", "sign", "measure", "crossings", "reference"]);
            for &t in windows {
                for &sign in signs {
                    let q = OscillationQuery::new(*lambda, *alpha, sign, t)?;
                    let r = oscillation_measure_with_reference(&ev, &q, reference.as_ref())?;
                    csv.push(vec![
                        f(t),
                        f(*alpha),
                        f(*lambda),
                        sign.name().to_string(),
                        f(r.measure),
                        r.crossing_count.to_string(),
                        r.reference_value.map(f).unwrap_or_default(),
                    ]);
                }
            }
            Ok(csv.into())
        }
        JobSpec::Moment { windows, powers, restrict } => {
            ctx.model()?;
            let ev = evaluator(ctx)?;
            let mut csv = Csv::new(&["T", "k", "restricted", "value", "certificate_delta"]);
            for &t in windows {
                let q = restrict.map(|r| OscillationQuery::new(r.lambda, r.alpha, r.sign, t)).transpose()?;
                for &k in powers {
                    let m = moment(&ev, k, t, q.as_ref())?;
                    let label = q.map_or("none", |q| q.sign.name());
                    csv.push(vec![f(t), k.to_string(), label.to_string(), f(m.value), f(m.certificate_delta)]);
                }
            }
            Ok(csv.into())
        }
        JobSpec::SmoothedMoment { t, ys, alpha_c, cutoff_eps } => {
            ctx.model()?;
            let ev = evaluator(ctx)?;
            let mut csv = Csv::new(&["T", "y", "alpha", "value", "x_stop", "truncated", "certificate_delta"]);
            for &y in ys {
                let q = SmoothedMomentQuery { alpha_c: *alpha_c, y, t: *t, cutoff_eps: *cutoff_eps };
                let r = smoothed_second_moment(&ev, &q)?;
                csv.push(vec![
                    f(*t),
                    f(y),
                    f(r.alpha),
                    f(r.value),
                    f(r.x_stop),
                    r.truncated.to_string(),
                    f(r.certificate_delta),
                ]);
            }
            Ok(csv.into())
        }
        JobSpec::Mellin { s, methods, x_max, contour } => {
            let ss: Vec<Complex64> = s.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
            ctx.model()?;
            let mut csv = Csv::new(&["re_s", "im_s", "method", "re_value", "im_value", "truncation", "est_tail"]);
            for &method in methods {
                let points = match method {
                    Method::TruncatedIntegral => {
                        let x = x_max.expect("validated: truncated integral has x_max");
                        mellin_truncated_many(&evaluator(ctx)?, &ss, x)?
                    }
                    Method::ClosedForm => {
                        let model = ctx.model.as_ref().expect("model is built above");
                        ss.iter()
                            .map(|&s| mellin_closed_form(fn_id, model, s, &ctx.zeta))
                            .collect::<Result<Vec<_>, _>>()?
                    }
                    Method::Contour => {
                        let spec = contour.unwrap_or_else(|| ContourSpec::default_for(fn_id));
                        contour_a_many(fn_id, &ss, &spec, &ctx.zeta)?
                    }
                };
                for p in points {
                    csv.push(vec![
                        f(p.s.re),
                        f(p.s.im),
                        method.name().to_string(),
                        f(p.value.re),
                        f(p.value.im),
                        f(p.truncation),
                        f(p.est_tail),
                    ]);
                }
            }
            Ok(csv.into())
        }
        JobSpec::Perron { xs, t, kappa } => {
            let table = table_of(ctx);
            let results = match kappa {
                Some(k) => perron_estimate_many(fn_id, table, xs, *k, *t, &ctx.zeta)?,
                None => xs
                    .iter()
                    .map(|&x| {
                        perron_estimate_many(fn_id, table, &[x], default_kappa(x), *t, &ctx.zeta)
                            .map(|mut v| v.remove(0))
                    })
                    .collect::<Result<Vec<_>, _>>()?,
            };
            let mut csv = Csv::new(&["x", "kappa", "T", "value", "error_bound", "star_sum", "abs_diff"]);
            let mut failed = Vec::new();
            for r in results {
                let star = table.prefix_star(r.x)?;
                let diff = (r.value - star).abs();
                if !(diff <= r.error_bound) {
                    failed.push(r.x);
                }
                csv.push(vec![f(r.x), f(r.kappa), f(r.t), f(r.value), f(r.error_bound), f(star), f(diff)]);
            }
            Ok(JobOutput { csv, failure: certificate("Perron error bound exceeded", &failed) })
        }
        JobSpec::ResidueCheck { xs, rel_tol } => {
            let residues = residue_main_term_sum(fn_id, xs, &ctx.zeta)?;
            let model = ctx.model()?;
            let mut csv = Csv::new(&["x", "closed_form", "residue", "rel_diff"]);
            let mut failed = Vec::new();
            for (&x, r) in xs.iter().zip(residues) {
                let c = eval_main_term(model, x)?;
                let rel = (c - r).abs() / c.abs().max(f64::MIN_POSITIVE);
                if !(rel <= *rel_tol) {
                    failed.push(x);
                }
                csv.push(vec![f(x), f(c), f(r), f(rel)]);
            }
            Ok(JobOutput { csv, failure: certificate("residue sum disagrees with the closed form", &failed) })
        }
    }
}

fn certificate(what: &str, failed_at: &[f64]) -> Option<CliError> {
    if failed_at.is_empty() {
        return None;
    }
    Some(CliError::Core(etlab_core::Error::NumericCertificate(format!("{what} at x = {failed_at:?}"))))
}

fn table_of<'c>(ctx: &'c Context<'_>) -> &'c SieveTable {
    match &ctx.table {
        Some(Ok((t, _))) => t,
        _ => unreachable!("table is loaded before any job that reads it"),
    }
}

fn evaluator<'c>(ctx: &'c Context<'_>) -> Result<DeltaEvaluator<'c>, CliError> {
    let model = ctx.model.as_ref().expect("model is built before the evaluator");
    Ok(DeltaEvaluator::new(table_of(ctx), model)?)
}
