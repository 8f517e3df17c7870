//! Command-line front end. `run` parses arguments, executes one verb and
//! returns the exit status together with everything written to stdout and
//! stderr, so the binary is a thin wrapper and tests can call it directly.

use std::io::Read;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::decision::Decision;
use crate::error::{Error, Result};
use crate::gram::{congruent, PointConfig};
use crate::hlinalg::{HMatrix, VectorType};
use crate::invariants::{profile, InvariantProfile};
use crate::isom::{Classification, Isometry, RealTrace};
use crate::pairs::pair_conjugate;
use crate::quat::Quaternion;
use crate::sampling::{random_config, random_isometry, task_rng, IsometrySample, PairSample, Sample};
use crate::verify::{run_all, CheckResult, SuiteConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "qhyper", version, about = "Quaternionic hyperbolic isometries, invariants and conjugacy")]
pub struct Cli {
    /// Numerical tolerance
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol: f64,
    /// Seed for sampling and verification
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Dimension n of H^n; inputs of another size are rejected
    #[arg(long, global = true)]
    pub signature: Option<usize>,
    #[command(subcommand)]
    pub verb: Verb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SampleKind {
    Isometry,
    Config,
    Pair,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    All,
    Quick,
}

#[derive(Debug, Subcommand)]
pub enum Verb {
    /// Classify an element of Sp(n,1) given as a matrix file
    Classify { matrix: String },
    /// Invariant profile of a point configuration
    Invariants { config: String },
    /// Decide congruence of two configurations
    Congruent { a: String, b: String },
    /// Decide whether (A, B) and (A', B') are conjugate
    ConjugatePair { a: String, b: String, a2: String, b2: String },
    /// Draw seeded random objects
    Sample {
        #[arg(value_enum)]
        kind: SampleKind,
        #[arg(long, default_value_t = 1)]
        count: u64,
        /// Points per configuration
        #[arg(long, default_value_t = 4)]
        m: usize,
        /// Boundary points per configuration
        #[arg(long, default_value_t = 4)]
        i: usize,
    },
    /// Run the verification suite
    Verify {
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub modulus: f64,
    pub angle: f64,
    pub multiplicity: usize,
    #[serde(rename = "type")]
    pub kind: VectorType,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyReport {
    #[serde(rename = "type")]
    pub kind: Classification,
    pub real_trace: RealTrace,
    pub classes: Vec<ClassReport>,
}

/// Runs the CLI on `args` (including the program name).
pub fn run<I, T>(args: I) -> Output
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 { Output { code, stdout: text, stderr: String::new() } } else { Output { code, stdout: String::new(), stderr: text } };
        }
    };
    match execute(&cli) {
        Ok(out) => out,
        Err(e) => Output { code: 2, stdout: String::new(), stderr: format!("error: {e}\n") },
    }
}

fn read_input(path: &str) -> Result<String> {
    let mut s = String::new();
    if path == "-" {
        std::io::stdin().read_to_string(&mut s).map_err(|e| Error::Invalid(format!("stdin: {e}")))?;
    } else {
        s = std::fs::read_to_string(path).map_err(|e| Error::Invalid(format!("{path}: {e}")))?;
    }
    Ok(s)
}

fn parse<T: serde::de::DeserializeOwned>(path: &str) -> Result<T> {
    serde_json::from_str(&read_input(path)?).map_err(|e| Error::Invalid(format!("{path}: {e}")))
}

fn check_signature(cli: &Cli, n: usize) -> Result<()> {
    match cli.signature {
        Some(s) if s != n => Err(Error::DimensionMismatch { expected: s, found: n }),
        _ => Ok(()),
    }
}

fn load_isometry(cli: &Cli, path: &str) -> Result<Isometry> {
    let m: HMatrix = parse(path)?;
    check_signature(cli, m.nrows().saturating_sub(1))?;
    Isometry::new(m, cli.tol.max(1e-12))
}

fn load_config(cli: &Cli, path: &str) -> Result<PointConfig> {
    let c: PointConfig = parse(path)?;
    check_signature(cli, c.n())?;
    Ok(c)
}

fn json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Error::Numerical(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn execute(cli: &Cli) -> Result<Output> {
    let ok = |stdout: String| Output { code: 0, stdout, stderr: String::new() };
    match &cli.verb {
        Verb::Classify { matrix } => {
            let a = load_isometry(cli, matrix)?;
            let classes = a
                .eigen_data()
                .map(|e| {
                    e.classes
                        .iter()
                        .map(|c| ClassReport { modulus: c.class.modulus, angle: c.class.angle, multiplicity: c.multiplicity, kind: c.kind })
                        .collect()
                })
                .unwrap_or_default();
            let r = ClassifyReport { kind: a.classification(), real_trace: a.real_trace().clone(), classes };
            Ok(ok(match cli.format {
                Format::Json => json(&r)?,
                Format::Csv => csv_classify(&r)?,
            }))
        }
        Verb::Invariants { config } => {
            let p = profile(&load_config(cli, config)?)?;
            Ok(ok(match cli.format {
                Format::Json => json(&p)?,
                Format::Csv => csv_profile(&p)?,
            }))
        }
        Verb::Congruent { a, b } => {
            let d = congruent(&load_config(cli, a)?, &load_config(cli, b)?, cli.tol)?;
            decision_output(cli, &d)
        }
        Verb::ConjugatePair { a, b, a2, b2 } => {
            let (a, b) = (load_isometry(cli, a)?, load_isometry(cli, b)?);
            let (a2, b2) = (load_isometry(cli, a2)?, load_isometry(cli, b2)?);
            let d = pair_conjugate(&a, &b, &a2, &b2, cli.tol)?;
            decision_output(cli, &d)
        }
        Verb::Sample { kind, count, m, i } => {
            let n = cli.signature.unwrap_or(2);
            let out = match kind {
                SampleKind::Config => {
                    let v = sample_batch(cli.seed, *count, |r| random_config(n, *m, *i, r))?;
                    render_samples(cli, &v, |o| vec![("points", o.lifts().into_iter().map(|l| l.entries).collect())])?
                }
                SampleKind::Isometry => {
                    let v = sample_batch(cli.seed, *count, |r| {
                        let (spec, a) = random_isometry(n, r)?;
                        Ok(IsometrySample { spec, matrix: a.matrix().clone() })
                    })?;
                    render_samples(cli, &v, |o| vec![("matrix", o.matrix.rows())])?
                }
                SampleKind::Pair => {
                    let v = sample_batch(cli.seed, *count, |r| {
                        let (sa, a) = random_isometry(n, r)?;
                        let (sb, b) = random_isometry(n, r)?;
                        Ok(PairSample {
                            a: IsometrySample { spec: sa, matrix: a.matrix().clone() },
                            b: IsometrySample { spec: sb, matrix: b.matrix().clone() },
                        })
                    })?;
                    render_samples(cli, &v, |o| vec![("a", o.a.matrix.rows()), ("b", o.b.matrix.rows())])?
                }
            };
            Ok(ok(out))
        }
        Verb::Verify { suite } => {
            let cfg = match suite {
                Suite::All => SuiteConfig::full(cli.seed),
                Suite::Quick => SuiteConfig::quick(cli.seed),
            };
            let rows = run_all(&cfg);
            let code = if rows.iter().all(|r| r.passed) { 0 } else { 1 };
            let stdout = match cli.format {
                Format::Json => json(&rows)?,
                Format::Csv => csv_checks(&rows)?,
            };
            Ok(Output { code, stdout, stderr: String::new() })
        }
    }
}

fn decision_output(cli: &Cli, d: &Decision) -> Result<Output> {
    let stdout = match cli.format {
        Format::Json => json(d)?,
        Format::Csv => csv_decision(d)?,
    };
    Ok(Output { code: d.exit_code(), stdout, stderr: String::new() })
}

fn sample_batch<T: Send>(seed: u64, count: u64, f: impl Fn(&mut rand_chacha::ChaCha8Rng) -> Result<T> + Sync) -> Result<Vec<Sample<T>>> {
    use rayon::prelude::*;
    (0..count)
        .into_par_iter()
        .map(|index| Ok(Sample { index, seed, object: f(&mut task_rng(seed, index))? }))
        .collect()
}

type Grid = Vec<Vec<Quaternion>>;

fn render_samples<T: Serialize>(cli: &Cli, v: &[Sample<T>], grids: impl Fn(&T) -> Vec<(&'static str, Grid)>) -> Result<String> {
    match cli.format {
        Format::Json => json(&v),
        Format::Csv => {
            let mut w = CsvOut::new(&["index", "seed", "field", "row", "col", "value.w", "value.x", "value.y", "value.z"]);
            for s in v {
                for (field, grid) in grids(&s.object) {
                    for (r, row) in grid.iter().enumerate() {
                        for (c, q) in row.iter().enumerate() {
                            let mut rec = vec![s.index.to_string(), s.seed.to_string(), field.to_string(), r.to_string(), c.to_string()];
                            rec.extend(quat_cells(*q));
                            w.row(rec)?;
                        }
                    }
                }
            }
            w.finish()
        }
    }
}

struct CsvOut {
    w: csv::Writer<Vec<u8>>,
}

impl CsvOut {
    fn new(header: &[&str]) -> Self {
        let mut w = csv::Writer::from_writer(Vec::new());
        let _ = w.write_record(header);
        CsvOut { w }
    }

    fn row(&mut self, rec: Vec<String>) -> Result<()> {
        self.w.write_record(&rec).map_err(|e| Error::Numerical(e.to_string()))
    }

    fn finish(self) -> Result<String> {
        let bytes = self.w.into_inner().map_err(|e| Error::Numerical(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Numerical(e.to_string()))
    }
}

fn quat_cells(q: Quaternion) -> Vec<String> {
    q.to_array().iter().map(|x| x.to_string()).collect()
}

fn quat_header(prefix: &str) -> Vec<String> {
    ["w", "x", "y", "z"].iter().map(|s| format!("{prefix}.{s}")).collect()
}

fn kind_name<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v).ok().and_then(|x| x.as_str().map(str::to_string)).unwrap_or_default()
}

fn csv_classify(r: &ClassifyReport) -> Result<String> {
    let mut header: Vec<String> = vec!["type".into()];
    header.extend((1..=r.real_trace.values.len()).map(|k| format!("real_trace.{k}")));
    header.extend(["modulus", "angle", "multiplicity", "class_type"].map(String::from));
    let h: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut w = CsvOut::new(&h);
    let mut base = vec![kind_name(&r.kind)];
    base.extend(r.real_trace.values.iter().map(|x| x.to_string()));
    if r.classes.is_empty() {
        let mut rec = base.clone();
        rec.extend(["", "", "", ""].map(String::from));
        w.row(rec)?;
    }
    for c in &r.classes {
        let mut rec = base.clone();
        rec.extend([c.modulus.to_string(), c.angle.to_string(), c.multiplicity.to_string(), kind_name(&c.kind)]);
        w.row(rec)?;
    }
    w.finish()
}

fn csv_profile(p: &InvariantProfile) -> Result<String> {
    let mut header = vec!["slot".to_string(), "k".into(), "j".into()];
    header.extend(quat_header("value"));
    let h: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut w = CsvOut::new(&h);
    let mut put = |slot: &str, k: usize, j: usize, q: Quaternion| {
        let mut rec = vec![slot.to_string(), k.to_string(), j.to_string()];
        rec.extend(quat_cells(q));
        w.row(rec)
    };
    put("u0", 0, 0, p.u0)?;
    put("a23", 2, 3, Quaternion::real(p.a23))?;
    for s in &p.cross_ratios {
        put("cross_ratio", s.k, s.j, s.value)?;
    }
    for s in &p.pairs {
        put("angular", s.k, s.j, Quaternion::real(s.angular))?;
        put("distance", s.k, s.j, Quaternion::real(s.distance))?;
        put("rotation", s.k, s.j, s.rotation)?;
    }
    for a in &p.anchors {
        put("anchor", 1, a.j, Quaternion::real(a.value))?;
    }
    put("d", 0, 0, Quaternion::real(p.d as f64))?;
    put("t", 0, 0, Quaternion::real(p.t as f64))?;
    w.finish()
}

fn csv_decision(d: &Decision) -> Result<String> {
    let mut header = vec!["verdict".to_string(), "reason".into(), "residual".into()];
    let mut rec = vec![kind_name(&d.verdict), d.reason.map(|r| kind_name(&r)).unwrap_or_default(), d.residual.map(|x| x.to_string()).unwrap_or_default()];
    if let Some(wm) = &d.witness {
        for (r, row) in wm.rows().iter().enumerate() {
            for (c, q) in row.iter().enumerate() {
                header.extend(quat_header(&format!("witness.{r}.{c}")));
                rec.extend(quat_cells(*q));
            }
        }
    }
    let h: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut w = CsvOut::new(&h);
    w.row(rec)?;
    w.finish()
}

fn csv_checks(rows: &[CheckResult]) -> Result<String> {
    let mut w = CsvOut::new(&["id", "name", "passed", "trials", "failures", "worst", "bound", "note"]);
    for r in rows {
        w.row(vec![
            r.id.clone(),
            r.name.clone(),
            r.passed.to_string(),
            r.trials.to_string(),
            r.failures.to_string(),
            r.metric.to_string(),
            r.bound.to_string(),
            r.note.clone().unwrap_or_default(),
        ])?;
    }
    w.finish()
}
