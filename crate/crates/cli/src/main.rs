//! `bbt-lab`: one binary, one subcommand per pipeline.
//!
//! Data files go under `--out` (default `$BBT_LAB_DATA_DIR`, else
//! `./bbt-data`). Progress goes to stderr. The last line on stdout is always a
//! JSON summary.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use bbt_core::analytics::{
    correlation_study, sampler, separation_census, write_conditional_csv, write_degree_csv,
    write_marginal_csv, write_separation_csv, Diagnostic, FunctionRecord, SampleMeta, SampleMode,
};
use bbt_core::cancellation::write_cancellation_csv;
use bbt_core::certstore::{
    audit_file, create_output, load_certificates, load_universe, save_universe, CertificateStream,
};
use bbt_core::contraction::{check_bounds, contraction_profile};
use bbt_core::families::{format_2dp, generate, scaling_table, write_scaling_csv, FamilyKind, FamilySpec};
use bbt_core::influence::{format_rational, influences};
use bbt_core::minsupport::{parity_audit, support_census, BranchAndBound, Budget, SupportCensus};
use bbt_core::npn::{enumerate_universe_with_progress, npn_invariance_audit};
use bbt_core::synthesis::{synthesize_record, write_synthesis_jsonl, SynthesisStatus};
use bbt_core::walsh::{format_fid, fwht, parse_fid, universe_size, TruthTable};
use bbt_core::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "bbt-lab", version, about = "Butterfly contraction invariants and ternary threshold certificates")]
struct Cli {
    /// Worker threads (default: all cores). Never changes file contents.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory for data files.
    #[arg(long, global = true, env = "BBT_LAB_DATA_DIR")]
    out: Option<PathBuf>,
    /// Replace existing output files.
    #[arg(long, global = true)]
    force: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Spectrum, influences, contraction profile and bound slacks of one function.
    Analyze(AnalyzeArgs),
    /// log2 mu scaling table for the canonical families at odd n.
    Scaling(ScalingArgs),
    /// Heuristic masks with optional repair; writes JSON lines.
    Synth(SynthArgs),
    /// Exact minimum-support certificates and the support census.
    Minsupport(MinsupportArgs),
    /// NPN class enumeration and invariance audit.
    Npn(NpnArgs),
    /// Separation pairs and algebraic-degree histogram over a whole universe.
    Census(CensusArgs),
    /// Marginal and influence-binned correlations from a certificate file.
    Correlate(CorrelateArgs),
    /// Independent integer re-check of a certificate file.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, conflicts_with = "family")]
    fid: Option<String>,
    #[arg(long)]
    family: Option<String>,
    /// Dictator coordinate (1-based).
    #[arg(long)]
    k: Option<usize>,
    /// Tribes block width.
    #[arg(long)]
    width: Option<usize>,
}

#[derive(Args)]
struct ScalingArgs {
    /// Odd n values.
    #[arg(long, value_delimiter = ',', default_values_t = [3usize, 5, 7, 9, 11, 13, 15])]
    n_values: Vec<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SampleModeArg {
    Uniform,
    Stratified,
    Npn,
}

#[derive(Args)]
struct Selection {
    #[arg(long)]
    n: usize,
    /// Every function on n variables.
    #[arg(long, conflicts_with_all = ["fid", "sample"])]
    all: bool,
    /// Specific functions (hex or decimal), repeatable.
    #[arg(long, conflicts_with = "sample")]
    fid: Vec<String>,
    /// Sample size; requires --seed.
    #[arg(long, requires = "seed")]
    sample: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "uniform")]
    sample_mode: SampleModeArg,
    /// NPN universe file, for --sample-mode npn.
    #[arg(long)]
    universe: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    sel: Selection,
    #[arg(long, default_value_t = 0.05)]
    tau: f64,
    /// Only try the threshold mask at --tau.
    #[arg(long)]
    heuristic_only: bool,
}

#[derive(Args)]
struct MinsupportArgs {
    #[command(flatten)]
    sel: Selection,
    #[arg(long)]
    budget_nodes: Option<u64>,
    #[arg(long)]
    budget_secs: Option<f64>,
    /// Certificate output file.
    #[arg(long)]
    certs: Option<PathBuf>,
    /// Record solve times in the certificate file (breaks byte-reproducibility).
    #[arg(long)]
    timings: bool,
}

#[derive(Args)]
struct NpnArgs {
    #[arg(long)]
    n: usize,
    /// Run the invariance audit on this many sampled functions instead.
    #[arg(long, requires = "seed")]
    audit: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 100)]
    transforms: usize,
}

#[derive(Args)]
struct CensusArgs {
    #[arg(long, default_value_t = 3)]
    n: usize,
}

#[derive(Args)]
struct CorrelateArgs {
    #[arg(long)]
    certs: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    certs: PathBuf,
}

/// Failure classes and their exit codes.
enum Failure {
    Usage(String),
    Verification(String),
    Budget(String),
    Interrupted(String),
    Other(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Verification(_) => 3,
            Failure::Budget(_) => 4,
            Failure::Interrupted(_) => 130,
            Failure::Other(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m)
            | Failure::Verification(m)
            | Failure::Budget(m)
            | Failure::Interrupted(m)
            | Failure::Other(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let m = e.to_string();
        match e {
            Error::InvalidVariableCount { .. }
            | Error::InvalidLength { .. }
            | Error::LengthMismatch { .. }
            | Error::InvalidEntry { .. }
            | Error::FidOutOfRange { .. }
            | Error::Domain(_)
            | Error::InvalidSpec(_)
            | Error::UniverseMissing { .. }
            | Error::WouldOverwrite(_) => Failure::Usage(m),
            Error::VerificationFailed { .. }
            | Error::CorruptRecord { .. }
            | Error::ParityContradiction { .. }
            | Error::BoundViolation { .. }
            | Error::SchurViolation(_)
            | Error::UnsupportedFormat(_) => Failure::Verification(m),
            Error::BudgetExhausted { .. } => Failure::Budget(m),
            _ => Failure::Other(m),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Other(e.to_string())
    }
}

type Outcome = Result<Value, (Value, Failure)>;

struct Ctx {
    out: PathBuf,
    force: bool,
    interrupted: Arc<AtomicBool>,
}

impl Ctx {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn create(&self, path: &Path) -> Result<std::io::BufWriter<std::fs::File>, Failure> {
        Ok(create_output(path, self.force)?)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(k) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("thread pool: {e}");
        }
    }
    let interrupted = Arc::new(AtomicBool::new(false));
    {
        let flag = interrupted.clone();
        let _ = ctrlc::set_handler(move || {
            if flag.swap(true, Ordering::SeqCst) {
                std::process::exit(130);
            }
            eprintln!("interrupt: finishing the current chunk");
        });
    }
    let ctx = Ctx {
        out: cli.out.unwrap_or_else(|| PathBuf::from("bbt-data")),
        force: cli.force,
        interrupted,
    };
    let (name, outcome) = match &cli.command {
        Command::Analyze(a) => ("analyze", wrap(analyze(a))),
        Command::Scaling(a) => ("scaling", wrap(scaling(&ctx, a))),
        Command::Synth(a) => ("synth", wrap(synth(&ctx, a))),
        Command::Minsupport(a) => ("minsupport", minsupport(&ctx, a)),
        Command::Npn(a) => ("npn", wrap(npn(&ctx, a))),
        Command::Census(a) => ("census", wrap(census(&ctx, a))),
        Command::Correlate(a) => ("correlate", wrap(correlate(&ctx, a))),
        Command::Verify(a) => ("verify", verify(a)),
    };
    let (mut summary, code) = match outcome {
        Ok(v) => (v, 0),
        Err((mut v, f)) => {
            eprintln!("error: {}", f.message());
            v["error"] = json!(f.message());
            (v, f.code())
        }
    };
    summary["command"] = json!(name);
    summary["ok"] = json!(code == 0);
    println!("{}", serde_json::to_string(&summary).expect("json"));
    ExitCode::from(code)
}

fn wrap(r: Result<Value, Failure>) -> Outcome {
    r.map_err(|f| (json!({}), f))
}

fn progress(msg: &str) {
    eprintln!("[bbt-lab] {msg}");
}

fn table_for(n: usize, fid: Option<&str>, family: Option<&str>, k: Option<usize>, width: Option<usize>) -> Result<(TruthTable, String), Failure> {
    match (fid, family) {
        (Some(s), None) => {
            let fid = parse_fid(s)?;
            Ok((TruthTable::from_fid(n, fid)?, format_fid(fid)))
        }
        (None, Some(name)) => {
            let kind: FamilyKind = name.parse()?;
            let spec = FamilySpec { kind, n, k, width };
            Ok((generate(&spec)?, kind.to_string()))
        }
        _ => Err(Failure::Usage("give exactly one of --fid or --family".into())),
    }
}

fn analyze(a: &AnalyzeArgs) -> Result<Value, Failure> {
    let (t, label) = table_for(a.n, a.fid.as_deref(), a.family.as_deref(), a.k, a.width)?;
    let s = fwht(&t);
    let v = influences(&s);
    let p = contraction_profile(&v);
    let b = check_bounds(&p, &v)?;
    let report = json!({
        "function": label,
        "n": t.n(),
        "fid": t.fid().map(format_fid),
        "spectrum": s.coeffs(),
        "spectrum_scale": format!("2^{}", t.n()),
        "influences": v.as_rationals().iter().map(format_rational).collect::<Vec<_>>(),
        "total_influence": format_rational(&v.total()),
        "exponents": p.exponents.iter().map(format_rational).collect::<Vec<_>>(),
        "log2_mu": format_rational(&p.log2_mu),
        "log2_mu_2dp": format_2dp(&p.log2_mu),
        "algebraic_degree": p.algebraic_degree.to_string(),
        "bound_slacks": {
            "coarse_lower": format_rational(&b.coarse_lower),
            "coarse_upper": format_rational(&b.coarse_upper),
            "jensen": format_rational(&b.jensen),
        },
        "bounds_hold": true,
    });
    println!("{}", serde_json::to_string_pretty(&report).expect("json"));
    Ok(json!({
        "function": label,
        "n": t.n(),
        "log2_mu": format_rational(&p.log2_mu),
        "bounds_hold": true,
    }))
}

fn scaling(ctx: &Ctx, a: &ScalingArgs) -> Result<Value, Failure> {
    let rows = scaling_table(&a.n_values)?;
    let path = ctx.path("scaling.csv");
    let mut w = ctx.create(&path)?;
    write_scaling_csv(&rows, &mut w)?;
    w.flush()?;
    for r in &rows {
        println!("{:<9} n={:<2} log2_mu={:>7}  ({})", r.family.name(), r.n, r.log2_mu_2dp, format_rational(&r.log2_mu));
    }
    Ok(json!({
        "rows": rows.len(),
        "parity_exact": rows.iter().filter(|r| r.family == FamilyKind::Parity).all(|r| r.is_exact_parity()),
        "file": path,
    }))
}

fn select(sel: &Selection) -> Result<(Vec<u64>, SampleMeta), Failure> {
    let n = sel.n;
    if sel.all {
        let size = universe_size(n)?;
        if n > 4 {
            return Err(Failure::Usage(format!("--all is limited to n <= 4, got {n}")));
        }
        return Ok(((0..size).collect(), SampleMeta { mode: "full".into(), seed: None, size: size as usize }));
    }
    if let Some(size) = sel.sample {
        let seed = sel.seed.ok_or_else(|| Failure::Usage("--sample requires --seed".into()))?;
        let (mode, universe) = match sel.sample_mode {
            SampleModeArg::Uniform => (SampleMode::Uniform, None),
            SampleModeArg::Stratified => (SampleMode::Stratified, None),
            SampleModeArg::Npn => {
                let path = sel.universe.as_ref().ok_or(Error::UniverseMissing { n })?;
                (SampleMode::NpnCanonical, Some(load_universe(path)?))
            }
        };
        let fids = sampler(mode.clone(), n, size, seed, universe.as_ref())?;
        return Ok((fids, SampleMeta { mode: mode.name().into(), seed: Some(seed), size }));
    }
    if !sel.fid.is_empty() {
        let mut fids = sel
            .fid
            .iter()
            .map(|s| {
                let fid = parse_fid(s)?;
                TruthTable::from_fid(n, fid)?;
                Ok(fid)
            })
            .collect::<Result<Vec<u64>, Error>>()?;
        fids.sort_unstable();
        fids.dedup();
        let size = fids.len();
        return Ok((fids, SampleMeta { mode: "explicit".into(), seed: None, size }));
    }
    Err(Failure::Usage("choose --all, --fid or --sample".into()))
}

fn synth(ctx: &Ctx, a: &SynthArgs) -> Result<Value, Failure> {
    use rayon::prelude::*;
    let (fids, meta) = select(&a.sel)?;
    let n = a.sel.n;
    progress(&format!("synthesizing {} functions at n={n}", fids.len()));
    let records = fids
        .par_iter()
        .map(|&fid| synthesize_record(&TruthTable::from_fid(n, fid)?, a.tau, a.heuristic_only))
        .collect::<Result<Vec<_>, Error>>()?;
    let path = ctx.path(&format!("synth_n{n}.jsonl"));
    let mut w = ctx.create(&path)?;
    write_synthesis_jsonl(&records, &mut w)?;
    w.flush()?;
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for r in &records {
        *counts.entry(r.status.to_string()).or_default() += 1;
    }
    let successes = records.iter().filter(|r| r.status != SynthesisStatus::Failed).count();
    println!("{successes} of {} functions synthesized", records.len());
    Ok(json!({
        "n": n,
        "sample": meta,
        "total": records.len(),
        "successes": successes,
        "status_counts": counts,
        "tau": a.tau,
        "heuristic_only": a.heuristic_only,
        "file": path,
    }))
}

fn budget_of(a: &MinsupportArgs) -> Budget {
    let mut b = Budget::default_for(a.sel.n);
    if let Some(nodes) = a.budget_nodes {
        b.max_nodes = Some(nodes);
    }
    if let Some(secs) = a.budget_secs {
        b.max_time = Some(Duration::from_secs_f64(secs));
    }
    b
}

const CHUNK: usize = 1024;

fn minsupport(ctx: &Ctx, a: &MinsupportArgs) -> Outcome {
    let run = || -> Result<(Value, Option<Failure>), Failure> {
        let (fids, meta) = select(&a.sel)?;
        let n = a.sel.n;
        let budget = budget_of(a);
        let cert_path = a.certs.clone().unwrap_or_else(|| ctx.path(&format!("certs_n{n}.jsonl")));
        let census_path = ctx.path(&format!("support_census_n{n}.csv"));
        if !ctx.force {
            for p in [&cert_path, &census_path] {
                if p.exists() {
                    return Err(Error::WouldOverwrite(p.clone()).into());
                }
            }
        }
        let mut all = SupportCensus { n, certificates: Vec::new(), exhausted: Vec::new() };
        let start = Instant::now();
        let mut truncated = false;
        for (i, chunk) in fids.chunks(CHUNK).enumerate() {
            if ctx.interrupted.load(Ordering::SeqCst) {
                truncated = true;
                break;
            }
            let part = support_census(n, chunk, &BranchAndBound, &budget)?;
            all.certificates.extend(part.certificates);
            all.exhausted.extend(part.exhausted);
            let done = (i * CHUNK + chunk.len()).min(fids.len());
            if fids.len() > CHUNK {
                progress(&format!("{done}/{} solved ({:.0}s)", fids.len(), start.elapsed().as_secs_f64()));
            }
        }
        // Written once at the end so the header count is exact; an interrupt
        // still flushes everything solved so far, followed by the marker.
        let mut stream = CertificateStream::new(ctx.create(&cert_path)?, n, all.certificates.len(), a.timings)?;
        for c in &all.certificates {
            stream.push(c)?;
        }
        if truncated {
            stream.truncate()?;
        } else {
            stream.finish()?;
        }
        let mut w = ctx.create(&census_path)?;
        all.write_csv(&mut w)?;
        w.flush()?;
        let audit = parity_audit(&all.certificates)?;
        let hist: BTreeMap<String, usize> = all.histogram().into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        for (s, c) in all.histogram() {
            println!("support {s:>2}: {c}");
        }
        let summary = json!({
            "n": n,
            "sample": meta,
            "solved": all.certificates.len(),
            "optimal": all.optimal_count(),
            "exhausted": all.exhausted.iter().map(|&f| format_fid(f)).collect::<Vec<_>>(),
            "histogram": hist,
            "mean_support": all.mean(),
            "max_support": all.max(),
            "all_odd": audit.all_odd(),
            "even_optimal": audit.even_optimal_fids.iter().map(|&f| format_fid(f)).collect::<Vec<_>>(),
            "truncated": truncated,
            "certs": cert_path,
            "census": census_path,
        });
        let failure = if truncated {
            Some(Failure::Interrupted("interrupted; certificate file truncated".into()))
        } else if !all.exhausted.is_empty() {
            Some(Failure::Budget(format!("{} solves exhausted the budget", all.exhausted.len())))
        } else {
            None
        };
        Ok((summary, failure))
    };
    match run() {
        Ok((v, None)) => Ok(v),
        Ok((v, Some(f))) => Err((v, f)),
        Err(f) => Err((json!({}), f)),
    }
}

fn npn(ctx: &Ctx, a: &NpnArgs) -> Result<Value, Failure> {
    let n = a.n;
    if let Some(count) = a.audit {
        let seed = a.seed.ok_or_else(|| Failure::Usage("--audit requires --seed".into()))?;
        let fids = sampler(SampleMode::Uniform, n, count, seed, None)?;
        let budget = (n <= 3).then(Budget::unlimited);
        let report = npn_invariance_audit(n, &fids, a.transforms, seed, budget.as_ref())?;
        println!("{} functions, {} transforms, {} mismatches", report.functions, report.transforms, report.mismatches.len());
        if !report.passed() {
            return Err(Failure::Verification(report.mismatches.join("; ")));
        }
        return Ok(json!({ "n": n, "audit": report }));
    }
    let start = Instant::now();
    let total = universe_size(n)?;
    let u = enumerate_universe_with_progress(n, |done, classes| {
        if n == 5 && done > 0 {
            progress(&format!("{:.1}% scanned, {classes} classes ({:.0}s)", 100.0 * done as f64 / total as f64, start.elapsed().as_secs_f64()));
        }
    })?;
    let path = ctx.path(&format!("npn_universe_n{n}.txt"));
    save_universe(&u, &path, ctx.force)?;
    println!("n={n}: {} classes", u.class_count());
    Ok(json!({
        "n": n,
        "classes": u.class_count(),
        "expected": bbt_core::npn::expected_class_count(n),
        "file": path,
    }))
}

fn census(ctx: &Ctx, a: &CensusArgs) -> Result<Value, Failure> {
    let r = separation_census(a.n)?;
    let sep = ctx.path(&format!("separation_n{}.csv", a.n));
    let deg = ctx.path(&format!("degree_n{}.csv", a.n));
    let mut w = ctx.create(&sep)?;
    write_separation_csv(&r, &mut w)?;
    w.flush()?;
    let mut w = ctx.create(&deg)?;
    write_degree_csv(&r, &mut w)?;
    w.flush()?;
    println!("{} separation pairs over {} functions", r.separation_pair_count, r.universe_size);
    Ok(json!({
        "n": a.n,
        "universe_size": r.universe_size,
        "separation_pairs": r.separation_pair_count,
        "per_level": r.per_level,
        "witness": r.witness,
        "degree_histogram": r.degree_histogram,
        "files": [sep, deg],
    }))
}

fn correlate(ctx: &Ctx, a: &CorrelateArgs) -> Result<Value, Failure> {
    let file = load_certificates(&a.certs)?;
    let n = file.header.n;
    let optimal: Vec<_> = file.certificates.iter().filter(|c| c.optimal()).collect();
    let records: Vec<FunctionRecord> = optimal.iter().map(|c| FunctionRecord::from_certificate(c)).collect();
    let meta = SampleMeta { mode: "certificates".into(), seed: None, size: records.len() };
    let report = correlation_study(&records, &Diagnostic::ALL, meta)?;
    let marginal = ctx.path(&format!("correlation_marginal_n{n}.csv"));
    let conditional = ctx.path(&format!("correlation_conditional_n{n}.csv"));
    let cancellation = ctx.path(&format!("cancellation_n{n}.csv"));
    let mut w = ctx.create(&marginal)?;
    write_marginal_csv(&report, &mut w)?;
    w.flush()?;
    let mut w = ctx.create(&conditional)?;
    write_conditional_csv(&report, &mut w)?;
    w.flush()?;
    let rows: Vec<(u64, &bbt_core::synthesis::TernaryMask)> = optimal.iter().map(|c| (c.fid(), c.mask())).collect();
    let mut w = ctx.create(&cancellation)?;
    write_cancellation_csv(&rows, &mut w)?;
    w.flush()?;
    let largest = report.largest_bin().cloned();
    if let Some(b) = &largest {
        println!("largest bin I={} ({} functions): rho(mu, support) = {:?}", b.i_bin, b.bin_size, b.rho_mu);
    }
    Ok(json!({
        "n": n,
        "functions": records.len(),
        "largest_bin": largest,
        "marginal": report.marginal,
        "files": [marginal, conditional, cancellation],
    }))
}

fn verify(a: &VerifyArgs) -> Outcome {
    let report = audit_file(&a.certs).map_err(|e| (json!({}), Failure::from(e)))?;
    eprintln!("audit took {} ms", report.elapsed_ms);
    println!(
        "{} records, {} passed, {} failed, {} integer multiplies",
        report.records,
        report.passed,
        report.failures.len(),
        report.integer_ops
    );
    for f in &report.failures {
        println!("FAIL line {} fid {}: {}", f.line, f.fid.as_deref().unwrap_or("?"), f.reason);
    }
    let summary = json!({
        "records": report.records,
        "passed": report.passed,
        "failures": report.failures,
        "integer_ops": report.integer_ops,
        "truncated": report.truncated,
    });
    if report.ok() {
        Ok(summary)
    } else {
        let msg = format!("{} records failed the integer audit", report.failures.len());
        Err((summary, Failure::Verification(msg)))
    }
}
