//! Command-line front end: argument parsing, dispatch and report rendering.
//!
//! [`run`] never exits the process; it returns the exit code and the rendered
//! output so the whole surface can be driven in-process.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use bunkbed::constructions::{
    blow_up_g1, build_d6, build_d7, build_g2, build_h4, build_h5, g2_constraints, h4_constraints,
    validate_counterexample_transcriptions, TranscriptionReport,
};
use bunkbed::exact::{
    exact_gap_with, table1, Dyadic, EnumerationOptions, GapResult, Table1Row, DEFAULT_CAP,
    TABLE1_EXPECTED,
};
use bunkbed::montecarlo::{estimate_gap, McOptions, DEFAULT_CONFIDENCE};
use bunkbed::search::{
    run_search, verify_positive_families, Generator, PairChoice, PositiveFamily, PostChoice,
    SearchTask,
};
use bunkbed::symmetry::{all_members, lemma_check};
use bunkbed::thresholds::{threshold_summary, verify_chain, Case};
use bunkbed::{
    build_bunkbed, parse_structure, BunkbedInstance, Family, Model, ModelSpec, Structure,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] bunkbed::Error),
    #[error("{0}")]
    Usage(String),
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Parser)]
#[command(
    name = "bunkbed",
    version,
    about = "Bunkbed percolation: exact enumeration, Monte Carlo, search and counterexample reproduction"
)]
pub struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Maximum worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Omit wall-clock timing so reports are byte-for-byte reproducible.
    #[arg(long, global = true)]
    pub no_timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact connection probabilities and gap by full enumeration.
    Exact(ExactArgs),
    /// Paired Monte Carlo estimate of the gap.
    Mc(McArgs),
    /// Search generated structures for violations.
    Search(SearchArgs),
    /// Check the equal-probability statement for the full family of a post cut.
    LemmaCheck(PairArgs),
    /// Reproduce the counterexample constructions.
    Paper {
        #[command(subcommand)]
        command: PaperCommand,
    },
    /// Print a structure in canonical form, optionally with its bunkbed double.
    Emit(EmitArgs),
    /// Validate a structure file, or the bundled transcriptions when no file is given.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct InstanceArgs {
    /// Structure file.
    #[arg(long)]
    pub file: PathBuf,
    /// Model name, E0 to E8.
    #[arg(long, value_parser = parse_model)]
    pub model: Model,
    /// Comma-separated post set overriding the file's `post` markers.
    #[arg(long)]
    pub posts: Option<String>,
}

#[derive(Debug, Args)]
pub struct PairArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    /// Source vertex `u` (taken in the lower bunk).
    #[arg(long)]
    pub source: String,
    /// Target vertex `v`.
    #[arg(long)]
    pub target: String,
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    #[command(flatten)]
    pub pair: PairArgs,
    /// Enumeration cap in free bits.
    #[arg(long, default_value_t = DEFAULT_CAP)]
    pub cap: usize,
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[command(flatten)]
    pub pair: PairArgs,
    #[arg(long)]
    pub samples: u64,
    /// Random seed; a fresh one is chosen and reported when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_CONFIDENCE)]
    pub confidence: f64,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// Generator: graphs:N, paths:N, cycles:N, wheels:N, random:N:P:COUNT,
    /// digraphs:N, random-digraphs:N:P:COUNT, tournaments:N, transitive:N,
    /// files (with --file), or positive:{path|cycle|wheel}:N.
    #[arg(long)]
    pub gen: String,
    #[arg(long, value_parser = parse_model)]
    pub model: Model,
    /// Restrict digraph generators to acyclic digraphs.
    #[arg(long)]
    pub acyclic: bool,
    /// Maximum number of (structure, post set) instances.
    #[arg(long)]
    pub budget: Option<usize>,
    /// Seed for random generators and Monte Carlo fallback.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Monte Carlo samples for instances above the enumeration cap.
    #[arg(long)]
    pub mc_samples: Option<u64>,
    /// Fixed post set instead of every subset.
    #[arg(long)]
    pub posts: Option<String>,
    /// Use each structure's own `post` markers.
    #[arg(long, conflicts_with = "posts")]
    pub file_posts: bool,
    /// Fixed source vertex (requires --target).
    #[arg(long, requires = "target")]
    pub source: Option<String>,
    #[arg(long, requires = "source")]
    pub target: Option<String>,
    /// Structure files for `--gen files`.
    #[arg(long)]
    pub file: Vec<PathBuf>,
    /// Drop isomorphic duplicates.
    #[arg(long)]
    pub dedup: bool,
    /// Stop at the first violation of each structure.
    #[arg(long)]
    pub early_exit: bool,
    /// Directory for finding structure files and `index.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_CAP)]
    pub cap: usize,
}

#[derive(Debug, Subcommand)]
pub enum PaperCommand {
    /// Recompute a published value.
    Verify {
        #[arg(value_enum)]
        what: VerifyTarget,
        /// Case for `chain` (all cases when omitted).
        #[arg(long)]
        case: Option<Case>,
        /// Blow-up parameter for `chain` (the stated value when omitted).
        #[arg(long)]
        k: Option<u64>,
    },
    /// Write one of the constructions as a structure file.
    Emit {
        #[arg(value_enum)]
        what: EmitTarget,
        #[arg(long)]
        k: Option<usize>,
        /// Output file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VerifyTarget {
    Prop31,
    Table1,
    Hyper,
    Digraph,
    Thresholds,
    Chain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EmitTarget {
    G2,
    G1,
    H4,
    H5,
    D6,
    D7,
}

#[derive(Debug, Args)]
pub struct EmitArgs {
    #[arg(long)]
    pub file: PathBuf,
    /// List the elements of the bunkbed double used by this model.
    #[arg(long, value_parser = parse_model)]
    pub model: Option<Model>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Transcription {
    G2,
    H4,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub file: Option<PathBuf>,
    /// Check the file against the constraints of a bundled transcription.
    #[arg(long = "as", value_enum, requires = "file")]
    pub as_: Option<Transcription>,
}

fn parse_model(s: &str) -> std::result::Result<Model, String> {
    Model::from_str(s).map_err(|e| e.to_string())
}

/// Mathematical outcome of a command; drives exit codes 0 and 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Ok,
    Violation,
    CheckFailed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

/// The machine-readable result of one invocation.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub structure_digest: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<u64>,
    pub verdict: Verdict,
    pub checks: Vec<Check>,
    pub results: Value,
    #[serde(skip)]
    text: Vec<String>,
}

impl Report {
    fn new(verdict: Verdict, results: Value) -> Self {
        Report {
            command: Vec::new(),
            structure_digest: None,
            model: None,
            seed: None,
            timing_ms: None,
            verdict,
            checks: Vec::new(),
            results,
            text: Vec::new(),
        }
    }

    fn line(&mut self, s: impl Into<String>) {
        self.text.push(s.into());
    }

    fn checks(mut self, checks: Vec<Check>, on_pass: Verdict) -> Self {
        self.verdict = if checks.iter().all(|c| c.passed) {
            on_pass
        } else {
            Verdict::CheckFailed
        };
        self.checks = checks;
        self
    }

    pub fn exit_code(&self) -> i32 {
        match self.verdict {
            Verdict::Ok => 0,
            Verdict::Violation | Verdict::CheckFailed => 1,
        }
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("command: {}\n", self.command.join(" ")));
        if let Some(d) = &self.structure_digest {
            out.push_str(&format!("structure sha256: {d}\n"));
        }
        if let Some(m) = &self.model {
            out.push_str(&format!("model: {m}\n"));
        }
        if let Some(s) = self.seed {
            out.push_str(&format!("seed: {s}\n"));
        }
        for l in &self.text {
            out.push_str(l);
            out.push('\n');
        }
        for c in &self.checks {
            out.push_str(&format!(
                "[{}] {}: {}\n",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            ));
        }
        if let Some(t) = self.timing_ms {
            out.push_str(&format!("time: {t} ms\n"));
        }
        let verdict = match self.verdict {
            Verdict::Ok => "ok",
            Verdict::Violation => "violation",
            Verdict::CheckFailed => "check failed",
        };
        out.push_str(&format!("verdict: {verdict}\n"));
        out
    }
}

/// Result of [`run`]: what `main` prints and returns.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
    pub report: Option<Report>,
}

pub fn digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn exact_text(d: Dyadic) -> String {
    format!("{} ({:.9})", d, d.to_f64())
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn load(path: &Path) -> CliResult<(Structure, String)> {
    let text = read(path)?;
    let s = parse_structure(&text)?;
    Ok((s, digest(text.as_bytes())))
}

fn name_list(s: &str) -> Vec<String> {
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(String::from)
        .collect()
}

fn spec_for(model: Model, s: &Structure, posts: &Option<String>) -> CliResult<ModelSpec> {
    match posts {
        Some(list) => {
            if !model.takes_posts() {
                return Err(CliError::Usage(format!(
                    "model {model} does not take posts"
                )));
            }
            Ok(ModelSpec::new(model, s.vertex_indices(&name_list(list))?))
        }
        None => Ok(ModelSpec::from_structure(model, s)),
    }
}

struct Loaded {
    spec: ModelSpec,
    instance: BunkbedInstance,
    digest: String,
}

fn load_instance(a: &InstanceArgs) -> CliResult<Loaded> {
    let (s, digest) = load(&a.file)?;
    if s.kind() != a.model.kind() {
        return Err(bunkbed::Error::IncompatibleModel {
            model: a.model.to_string(),
            reason: format!(
                "expects a {} but the file declares a {}",
                a.model.kind(),
                s.kind()
            ),
        }
        .into());
    }
    let spec = spec_for(a.model, &s, &a.posts)?;
    Ok(Loaded {
        spec,
        instance: a.model.instance(s),
        digest,
    })
}

fn gap_lines(r: &mut Report, u: &str, v: &str, g: &GapResult) {
    r.line(format!(
        "P({u}^(0) -> {v}^(0)) = {}",
        exact_text(g.p_same.value())
    ));
    r.line(format!(
        "P({u}^(0) -> {v}^(1)) = {}",
        exact_text(g.p_cross.value())
    ));
    r.line(format!("gap (cross - same) = {}", exact_text(g.gap)));
    r.line(format!("violation: {}", g.violation));
}

fn cmd_exact(cli: &Cli, a: &ExactArgs) -> CliResult<Report> {
    let l = load_instance(&a.pair.instance)?;
    let s = l.instance.base();
    let (u, v) = (
        s.vertex_index(&a.pair.source)?,
        s.vertex_index(&a.pair.target)?,
    );
    let fam = Family::new(l.spec.clone(), &l.instance)?;
    let g = exact_gap_with(
        &fam,
        u,
        v,
        EnumerationOptions {
            cap: a.cap,
            threads: cli.threads,
        },
    )?;
    let mut r = Report::new(
        if g.violation {
            Verdict::Violation
        } else {
            Verdict::Ok
        },
        json!({ "source": a.pair.source, "target": a.pair.target, "free_bits": fam.free_count(), "gap": g }),
    );
    r.structure_digest = Some(l.digest);
    r.model = Some(l.spec.describe(s));
    gap_lines(&mut r, &a.pair.source, &a.pair.target, &g);
    Ok(r)
}

fn cmd_mc(cli: &Cli, a: &McArgs) -> CliResult<Report> {
    let l = load_instance(&a.pair.instance)?;
    let s = l.instance.base();
    let (u, v) = (
        s.vertex_index(&a.pair.source)?,
        s.vertex_index(&a.pair.target)?,
    );
    let seed = a.seed.unwrap_or_else(rand::random);
    let fam = Family::new(l.spec.clone(), &l.instance)?;
    let opts = McOptions {
        samples: a.samples,
        seed,
        confidence: a.confidence,
        threads: cli.threads,
    };
    let e = estimate_gap(&fam, u, v, opts)?;
    let mut r = Report::new(
        if e.ci.low > 0.0 {
            Verdict::Violation
        } else {
            Verdict::Ok
        },
        json!({ "source": a.pair.source, "target": a.pair.target, "threads": cli.threads, "estimate": e }),
    );
    r.structure_digest = Some(l.digest);
    r.model = Some(l.spec.describe(s));
    r.seed = Some(seed);
    let (src, dst) = (&a.pair.source, &a.pair.target);
    r.line(format!(
        "samples: {} (same {}, cross {}, disagree {})",
        e.n, e.n_same, e.n_cross, e.n_disagree
    ));
    r.line(format!(
        "P({src}^(0) -> {dst}^(0)) ~ {:.6} [{:.6}, {:.6}] wilson",
        e.p_same, e.p_same_wilson.low, e.p_same_wilson.high
    ));
    r.line(format!(
        "P({src}^(0) -> {dst}^(1)) ~ {:.6} [{:.6}, {:.6}] wilson",
        e.p_cross, e.p_cross_wilson.low, e.p_cross_wilson.high
    ));
    r.line(format!("gap ~ {:.3e}", e.mean_gap));
    for ci in [e.ci, e.hoeffding, e.newcombe] {
        r.line(format!(
            "  {:.0}% CI ({}): [{:.3e}, {:.3e}]",
            e.confidence * 100.0,
            ci.method,
            ci.low,
            ci.high
        ));
    }
    r.line(format!("violation established: {}", e.ci.low > 0.0));
    Ok(r)
}

fn cmd_lemma(a: &PairArgs) -> CliResult<Report> {
    let l = load_instance(&a.instance)?;
    let s = l.instance.base();
    let (u, v) = (s.vertex_index(&a.source)?, s.vertex_index(&a.target)?);
    let fam = Family::new(l.spec.clone(), &l.instance)?;
    let members = all_members(&fam)?;
    let rep = lemma_check(&fam, &members, u, v)?;
    let checks = vec![
        Check::new(
            "closed under flips",
            rep.wall.closed,
            "every generating flip stays in the member set",
        ),
        Check::new(
            "paths blocked",
            rep.wall.paths_blocked,
            "every u-v path meets a quasi-post",
        ),
        Check::new(
            "counts equal",
            rep.counts_equal,
            format!("|A(0)| = {}, |A(1)| = {}", rep.same, rep.cross),
        ),
        Check::new(
            "mirror involution",
            rep.mirror_involution,
            "mirror applied twice is the identity",
        ),
        Check::new(
            "mirror swaps classes",
            rep.mirror_swaps_classes,
            format!("{} failures", rep.mirror_failures),
        ),
    ];
    let mut r = Report::new(
        Verdict::Ok,
        json!({ "members": members.len(), "lemma": rep }),
    )
    .checks(checks, Verdict::Ok);
    r.structure_digest = Some(l.digest);
    r.model = Some(l.spec.describe(s));
    r.line(format!("members: {}", members.len()));
    r.line(format!("|A(0)| = {}  |A(1)| = {}", rep.same, rep.cross));
    Ok(r)
}

fn parse_gen(a: &SearchArgs, seed: u64) -> CliResult<Generator> {
    let parts: Vec<&str> = a.gen.split(':').collect();
    let bad = || CliError::Usage(format!("cannot parse generator `{}`", a.gen));
    let int = |i: usize| {
        parts
            .get(i)
            .and_then(|x| x.parse::<usize>().ok())
            .ok_or_else(bad)
    };
    let float = |i: usize| {
        parts
            .get(i)
            .and_then(|x| x.parse::<f64>().ok())
            .filter(|p| (0.0..=1.0).contains(p))
            .ok_or_else(bad)
    };
    Ok(match parts[0] {
        "graphs" => Generator::AllGraphs { max_n: int(1)? },
        "paths" => Generator::Paths { max_n: int(1)? },
        "cycles" => Generator::Cycles { max_n: int(1)? },
        "wheels" => Generator::Wheels { max_n: int(1)? },
        "random" => Generator::RandomGraphs {
            n: int(1)?,
            p: float(2)?,
            count: int(3)?,
            seed,
        },
        "digraphs" => Generator::AllDigraphs {
            max_n: int(1)?,
            acyclic: a.acyclic,
        },
        "random-digraphs" => Generator::RandomDigraphs {
            n: int(1)?,
            p: float(2)?,
            count: int(3)?,
            seed,
            acyclic: a.acyclic,
        },
        "tournaments" => Generator::Tournaments { max_n: int(1)? },
        "transitive" => Generator::TransitiveTournaments { max_n: int(1)? },
        "files" => {
            if a.file.is_empty() {
                return Err(CliError::Usage(
                    "`--gen files` needs at least one --file".into(),
                ));
            }
            Generator::Explicit(
                a.file
                    .iter()
                    .map(|p| load(p).map(|(s, _)| s))
                    .collect::<CliResult<_>>()?,
            )
        }
        _ => return Err(bad()),
    })
}

fn cmd_positive(cli: &Cli, a: &SearchArgs) -> CliResult<Report> {
    let parts: Vec<&str> = a.gen.split(':').collect();
    let (Some(fam), Some(n)) = (
        parts.get(1),
        parts.get(2).and_then(|x| x.parse::<usize>().ok()),
    ) else {
        return Err(CliError::Usage(format!(
            "cannot parse generator `{}`",
            a.gen
        )));
    };
    let family = PositiveFamily::from_str(fam)?;
    let rep = verify_positive_families(
        family,
        n,
        EnumerationOptions {
            cap: a.cap,
            threads: cli.threads,
        },
    )?;
    let mut r = Report::new(
        if rep.passed() {
            Verdict::Ok
        } else {
            Verdict::Violation
        },
        serde_json::to_value(&rep).expect("serializable"),
    );
    for (model, instances, pairs, max) in &rep.per_model {
        let max = max.map_or("-".to_string(), exact_text);
        r.line(format!(
            "{model}: {instances} instances, {pairs} pairs, max gap {max}"
        ));
    }
    r.line(format!("violations: {}", rep.violations.len()));
    Ok(r)
}

fn cmd_search(cli: &Cli, a: &SearchArgs) -> CliResult<Report> {
    if a.gen.starts_with("positive:") {
        return cmd_positive(cli, a);
    }
    let seed = a.seed.unwrap_or_else(rand::random);
    let mut task = SearchTask::new(parse_gen(a, seed)?, a.model);
    task.posts = match (&a.posts, a.file_posts) {
        (Some(p), _) => PostChoice::Fixed(name_list(p)),
        (None, true) => PostChoice::FromStructure,
        (None, false) => PostChoice::AllSubsets,
    };
    if let (Some(u), Some(v)) = (&a.source, &a.target) {
        task.pairs = PairChoice::Fixed(u.clone(), v.clone());
    }
    task.budget = a.budget;
    task.dedup = a.dedup;
    task.early_exit = a.early_exit;
    task.mc_samples = a.mc_samples;
    task.seed = seed;
    task.enumeration = EnumerationOptions {
        cap: a.cap,
        threads: cli.threads,
    };
    let out = run_search(&task)?;
    let mut index = Vec::new();
    for (i, f) in out.findings.iter().enumerate() {
        let file = format!("finding_{:04}.bb", i + 1);
        if let Some(dir) = &a.out {
            std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
                path: dir.clone(),
                source,
            })?;
            write(&dir.join(&file), &f.structure)?;
        }
        index.push(json!({ "file": file, "digest": digest(f.structure.as_bytes()), "finding": f }));
    }
    let results = json!({ "summary": out.summary, "findings": index });
    if let Some(dir) = &a.out {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.clone(),
            source,
        })?;
        write(
            &dir.join("index.json"),
            &serde_json::to_string_pretty(&results).expect("serializable"),
        )?;
    }
    let mut r = Report::new(
        if out.findings.is_empty() {
            Verdict::Ok
        } else {
            Verdict::Violation
        },
        results,
    );
    r.model = Some(a.model.to_string());
    r.seed = Some(seed);
    let sm = &out.summary;
    r.line(format!(
        "structures {}, instances {} (exact {}, estimated {}, skipped {}), pairs {}",
        sm.structures,
        sm.instances,
        sm.exact_instances,
        sm.estimated_instances,
        sm.skipped_instances,
        sm.pairs_checked
    ));
    r.line(format!(
        "max exact gap: {}",
        sm.max_exact_gap.map_or("-".to_string(), exact_text)
    ));
    r.line(format!("complete: {}", sm.complete));
    r.line(format!("findings: {}", out.findings.len()));
    for f in out.findings.iter().take(20) {
        r.line(format!(
            "  {} T={{{}}} {} -> {} gap {:.3e}",
            f.model,
            f.posts.join(","),
            f.u,
            f.v,
            f.gap_f64()
        ));
    }
    Ok(r)
}

fn pair_gap(s: Structure, model: Model, u: &str, v: &str) -> CliResult<GapResult> {
    let spec = ModelSpec::from_structure(model, &s);
    let b = model.instance(s);
    let (ui, vi) = (b.base().vertex_index(u)?, b.base().vertex_index(v)?);
    Ok(bunkbed::exact::exact_gap(&spec, &b, ui, vi)?)
}

fn verify(what: VerifyTarget, case: Option<Case>, k: Option<u64>) -> CliResult<Report> {
    let probability = |n: i128, e: u32| Dyadic::new(n, e).expect("valid dyadic");
    Ok(match what {
        VerifyTarget::Prop31 => {
            let g = pair_gap(build_g2(), Model::E2, "v1", "v9")?;
            let checks = vec![
                Check::new(
                    "P(v1^(0) -> v9^(0)) = 12/64",
                    g.p_same.value() == probability(12, 6),
                    g.p_same.value().to_string(),
                ),
                Check::new(
                    "P(v1^(0) -> v9^(1)) = 13/64",
                    g.p_cross.value() == probability(13, 6),
                    g.p_cross.value().to_string(),
                ),
            ];
            let mut r =
                Report::new(Verdict::Ok, json!({ "gap": g })).checks(checks, Verdict::Violation);
            r.model = Some("E2^{v2,v7,v8} on G2".into());
            r.structure_digest = Some(digest(build_g2().to_text().as_bytes()));
            gap_lines(&mut r, "v1", "v9", &g);
            r
        }
        VerifyTarget::Table1 => {
            let rows: Vec<Table1Row> = table1(&build_bunkbed(build_g2()))?;
            let checks = rows
                .iter()
                .zip(TABLE1_EXPECTED)
                .enumerate()
                .map(|(i, (row, want))| {
                    Check::new(
                        format!("row {}", i + 1),
                        row.render() == want,
                        format!("got `{}`, expected `{want}`", row.render()),
                    )
                })
                .collect();
            let mut r =
                Report::new(Verdict::Ok, json!({ "rows": rows })).checks(checks, Verdict::Ok);
            r.line("v3 v4 v6 | bunks of v9 reached from v1^(0) (v1 lower, v5 upper)");
            for row in &rows {
                r.line(row.render());
            }
            r
        }
        VerifyTarget::Hyper => {
            let h = pair_gap(build_h4(), Model::E4, "u1", "u10")?;
            let g = pair_gap(build_g2(), Model::E2, "v1", "v9")?;
            let checks = vec![
                Check::new(
                    "same-bunk probability equals G2",
                    h.p_same.value() == g.p_same.value(),
                    h.p_same.value().to_string(),
                ),
                Check::new(
                    "cross-bunk probability equals G2",
                    h.p_cross.value() == g.p_cross.value(),
                    h.p_cross.value().to_string(),
                ),
            ];
            let mut r = Report::new(Verdict::Ok, json!({ "h4": h, "g2": g }))
                .checks(checks, Verdict::Violation);
            r.model = Some("E4^{u2,u7,u9} on H4".into());
            r.structure_digest = Some(digest(build_h4().to_text().as_bytes()));
            gap_lines(&mut r, "u1", "u10", &h);
            r
        }
        VerifyTarget::Digraph => {
            let d = pair_gap(build_d6(), Model::E6, "u1", "u10")?;
            let h = pair_gap(build_h4(), Model::E4, "u1", "u10")?;
            let checks = vec![
                Check::new(
                    "same-bunk probability equals H4",
                    d.p_same.value() == h.p_same.value(),
                    d.p_same.value().to_string(),
                ),
                Check::new(
                    "cross-bunk probability equals H4",
                    d.p_cross.value() == h.p_cross.value(),
                    d.p_cross.value().to_string(),
                ),
            ];
            let mut r = Report::new(Verdict::Ok, json!({ "d6": d, "h4": h }))
                .checks(checks, Verdict::Violation);
            r.model = Some("E6 on D6 (posts and double edges from the construction)".into());
            r.structure_digest = Some(digest(build_d6().to_text().as_bytes()));
            gap_lines(&mut r, "u1", "u10", &d);
            r
        }
        VerifyTarget::Thresholds => {
            let mut summaries = Vec::new();
            let mut checks = Vec::new();
            for case in Case::ALL {
                let t = threshold_summary(case)?;
                checks.push(Check::new(
                    format!("{case}: minimal k = {}", case.stated_k()),
                    t.minimal_k == case.stated_k(),
                    format!(
                        "product form {}, linear form {}, target {}",
                        t.minimal_k,
                        t.minimal_k_linear,
                        t.target.render()
                    ),
                ));
                summaries.push(t);
            }
            let mut r =
                Report::new(Verdict::Ok, json!({ "cases": summaries })).checks(checks, Verdict::Ok);
            for t in &summaries {
                let mut l = format!("{}: k = {}", t.case, t.minimal_k);
                if let Some(x) = t.linear_threshold {
                    l.push_str(&format!(" (real threshold {x:.3}"));
                    if let Some(q) = t.quoted_threshold {
                        l.push_str(&format!(", quoted expression {q:.3}"));
                    }
                    l.push(')');
                }
                r.line(l);
            }
            r
        }
        VerifyTarget::Chain => {
            let cases: Vec<Case> = case.map_or(Case::ALL.to_vec(), |c| vec![c]);
            let mut reports = Vec::new();
            let mut checks = Vec::new();
            for c in cases {
                let kk = k.unwrap_or(c.stated_k());
                let rep = verify_chain(c, kk)?;
                checks.push(Check::new(
                    format!("{c} k={kk}: P(A)·P(A^c)-bound below target"),
                    rep.inequality_holds,
                    format!("gap lower bound {}", rep.gap_lower_bound.render()),
                ));
                for ch in &rep.checks {
                    checks.push(Check::new(
                        format!("{c} k={kk}: {}", ch.name),
                        ch.passed,
                        format!("expected {}, got {}", ch.expected, ch.actual),
                    ));
                }
                reports.push(rep);
            }
            let mut r =
                Report::new(Verdict::Ok, json!({ "chains": reports })).checks(checks, Verdict::Ok);
            for rep in &reports {
                r.line(format!(
                    "{} k={}: P(B^c) = {}, P(A^c) = {}, target = {}",
                    rep.case,
                    rep.k,
                    rep.p_bc.render(),
                    rep.p_ac.render(),
                    rep.target.render()
                ));
            }
            r
        }
    })
}

fn construction(what: EmitTarget, k: Option<usize>) -> CliResult<Structure> {
    let k_or = |case: Case| k.unwrap_or(case.stated_k() as usize);
    Ok(match what {
        EmitTarget::G2 => build_g2(),
        EmitTarget::H4 => build_h4(),
        EmitTarget::D6 => build_d6(),
        EmitTarget::G1 => blow_up_g1(k_or(Case::Site))?,
        EmitTarget::H5 => build_h5(k_or(Case::Hyper))?,
        EmitTarget::D7 => build_d7(k_or(Case::Digraph))?,
    })
}

fn emit_text(s: &Structure, out: &Option<PathBuf>) -> CliResult<Report> {
    let text = s.to_text();
    if let Some(p) = out {
        write(p, &text)?;
    }
    let mut r = Report::new(
        Verdict::Ok,
        json!({
            "kind": s.kind().as_str(),
            "vertices": s.vertex_count(),
            "edges": s.edge_count(),
            "posts": s.posts().len(),
            "doubles": s.doubles().len(),
            "text": text,
        }),
    );
    r.structure_digest = Some(digest(text.as_bytes()));
    if let Some(p) = out {
        r.line(format!(
            "wrote {} ({} vertices, {} edges)",
            p.display(),
            s.vertex_count(),
            s.edge_count()
        ));
    } else {
        r.line(text.trim_end().to_string());
    }
    Ok(r)
}

fn cmd_emit(a: &EmitArgs) -> CliResult<Report> {
    let (s, _) = load(&a.file)?;
    let mut r = emit_text(&s, &a.out)?;
    if let Some(model) = a.model {
        if s.kind() != model.kind() {
            return Err(CliError::Usage(format!(
                "model {model} expects a {}",
                model.kind()
            )));
        }
        let b = model.instance(s);
        let node = |id: usize| {
            let n = b.node_ref(id);
            format!("{}^({})", b.base().vertex_name(n.vertex), n.bunk.index())
        };
        let elements: Vec<Value> = b
            .elements()
            .iter()
            .enumerate()
            .map(|(i, e)| json!({ "id": i, "nodes": e.nodes.iter().map(|&x| node(x)).collect::<Vec<_>>(), "directed": e.directed, "vertical": e.is_vertical() }))
            .collect();
        r.line(format!(
            "bunkbed double under {model}: {} nodes, {} elements",
            b.node_count(),
            elements.len()
        ));
        for e in &elements {
            let sep = if e["directed"] == true { " -> " } else { " " };
            let nodes: Vec<&str> = e["nodes"]
                .as_array()
                .into_iter()
                .flatten()
                .filter_map(Value::as_str)
                .collect();
            r.line(format!("  {:>4} {}", e["id"], nodes.join(sep)));
        }
        r.results["elements"] = Value::Array(elements);
        r.model = Some(model.to_string());
    }
    Ok(r)
}

fn transcription_checks(rep: &TranscriptionReport) -> Vec<Check> {
    rep.checks
        .iter()
        .map(|c| Check::new(c.name.clone(), c.passed, c.detail.clone()))
        .collect()
}

fn cmd_validate(a: &ValidateArgs) -> CliResult<Report> {
    let Some(path) = &a.file else {
        let rep = validate_counterexample_transcriptions();
        return Ok(Report::new(Verdict::Ok, json!({ "report": rep }))
            .checks(transcription_checks(&rep), Verdict::Ok));
    };
    let (s, digest) = load(path)?;
    let checks = match a.as_ {
        Some(Transcription::G2) => transcription_checks(&g2_constraints(&s)),
        Some(Transcription::H4) => transcription_checks(&h4_constraints(&s)),
        None => Vec::new(),
    };
    let mut r = Report::new(
        Verdict::Ok,
        json!({
            "kind": s.kind().as_str(),
            "vertices": s.vertex_count(),
            "edges": s.edge_count(),
            "posts": s.posts().len(),
            "doubles": s.doubles().len(),
            "simple": s.is_simple(),
        }),
    )
    .checks(checks, Verdict::Ok);
    r.structure_digest = Some(digest);
    r.line(format!(
        "{}: {} vertices, {} edges, {} posts, {} double edges",
        s.kind(),
        s.vertex_count(),
        s.edge_count(),
        s.posts().len(),
        s.doubles().len()
    ));
    Ok(r)
}

fn dispatch(cli: &Cli) -> CliResult<Report> {
    match &cli.command {
        Command::Exact(a) => cmd_exact(cli, a),
        Command::Mc(a) => cmd_mc(cli, a),
        Command::Search(a) => cmd_search(cli, a),
        Command::LemmaCheck(a) => cmd_lemma(a),
        Command::Paper {
            command: PaperCommand::Verify { what, case, k },
        } => verify(*what, *case, *k),
        Command::Paper {
            command: PaperCommand::Emit { what, k, out },
        } => emit_text(&construction(*what, *k)?, out),
        Command::Emit(a) => cmd_emit(a),
        Command::Validate(a) => cmd_validate(a),
    }
}

/// Parses `argv` (including the program name), runs the command and renders
/// its report. Exit codes: 0 success, 1 violation or failed check, 2 usage or
/// input error.
pub fn run<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let (stdout, stderr) = if code == 0 {
                (text, String::new())
            } else {
                (String::new(), text)
            };
            return Outcome {
                code,
                stdout,
                stderr,
                report: None,
            };
        }
    };
    if cli.threads == Some(0) {
        return Outcome {
            code: 2,
            stdout: String::new(),
            stderr: "error: --threads must be at least 1\n".into(),
            report: None,
        };
    }
    let start = Instant::now();
    match dispatch(&cli) {
        Ok(mut report) => {
            report.command = argv
                .iter()
                .skip(1)
                .map(|a| a.to_string_lossy().into_owned())
                .collect();
            if !cli.no_timing {
                report.timing_ms = Some(start.elapsed().as_millis() as u64);
            }
            let stdout = match cli.format {
                Format::Json => serde_json::to_string_pretty(&report).expect("serializable") + "\n",
                Format::Text => report.render_text(),
            };
            Outcome {
                code: report.exit_code(),
                stdout,
                stderr: String::new(),
                report: Some(report),
            }
        }
        Err(e) => Outcome {
            code: 2,
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
            report: None,
        },
    }
}
