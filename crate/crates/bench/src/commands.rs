//! Subcommand implementations.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use serde_json::json;
use spgemm_core::aia::{
    build_spgemm_access_plan, compare_phase, phase_trace, write_trace_dump, AccessMode,
    CacheConfig, Phase, Replacement,
};
use spgemm_core::apps::{
    build_selector, column_sums, graph_contract, mcl_observed, write_clusters, ClusterAssignment,
    LabelVector, MclParams,
};
use spgemm_core::engine::max_workers;
use spgemm_core::io::{load_matrix_market, save_matrix_market};
use spgemm_core::oracle::{compare, oracle_spgemm};
use spgemm_core::propagation::{gradient_check, PropagationInstance};
use spgemm_core::{CsrMatrix, Engine, SpgemmConfig, SpgemmStats};

use crate::cli::{
    AiaArgs, Cli, Command, ContractArgs, CorpusAction, CorpusArgs, GnnArgs, MclArgs, PhaseArg,
    SpgemmArgs,
};
use crate::corpus::{fetch_entry, verify_entry, Corpus, EntryStatus};
use crate::error::CliError;
use crate::report::{
    BenchReport, CsvTable, EngineVariant, Environment, InputDescriptor, Metrics, ModeResult,
    PhaseSeconds, VerifyStatus,
};

/// Relative tolerance of `--verify` value comparisons.
pub const VERIFY_TOL: f64 = 1e-12;

/// Everything a command produced.
#[derive(Debug)]
pub struct Outcome {
    pub report: BenchReport,
    pub csv: Option<CsvTable>,
    pub summary: Vec<String>,
    /// Set when a check ran and failed.
    pub failure: Option<String>,
}

impl Outcome {
    fn new(report: BenchReport) -> Self {
        Self {
            report,
            csv: None,
            summary: Vec::new(),
            failure: None,
        }
    }

    fn set_verify(&mut self, ok: bool, what: impl Into<String>) {
        self.report.verify = Some(if ok {
            VerifyStatus::Pass
        } else {
            VerifyStatus::Fail
        });
        if !ok {
            self.failure = Some(what.into());
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Spgemm(_) => "spgemm",
        Command::Aia(_) => "aia",
        Command::Mcl(_) => "mcl",
        Command::Contract(_) => "contract",
        Command::Gnncheck(_) => "gnncheck",
        Command::Corpus(_) => "corpus",
    }
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let workers = cli.global.workers.unwrap_or_else(max_workers);
    let warmup = !matches!(&cli.command, Command::Spgemm(a) if a.no_warmup);
    let env = Environment {
        workers,
        seed: cli.global.seed,
        warmup,
        cache: None,
    };
    let args = vec![format!("{:?}", cli.command), cli.global.verify.to_string()];
    let report = BenchReport::new(command_name(&cli.command), &args, env);
    let base = SpgemmConfig::default().with_workers(workers);
    let verify = cli.global.verify;
    match &cli.command {
        Command::Spgemm(a) => cmd_spgemm(a, base, verify, report),
        Command::Aia(a) => cmd_aia(a, base, verify, report),
        Command::Mcl(a) => cmd_mcl(a, base, verify, report),
        Command::Contract(a) => cmd_contract(a, base, verify, report),
        Command::Gnncheck(a) => cmd_gnncheck(a, base, cli.global.seed, report),
        Command::Corpus(a) => cmd_corpus(a, base, report),
    }
}

fn matrix_name(path: &Path) -> String {
    path.file_stem().map_or_else(
        || path.display().to_string(),
        |s| s.to_string_lossy().into_owned(),
    )
}

fn load(path: &Path) -> Result<CsrMatrix, CliError> {
    load_matrix_market(path, true).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn engine(config: SpgemmConfig) -> Result<Engine, CliError> {
    Ok(Engine::new(config)?)
}

fn fmt_ratio(x: f64) -> String {
    format!("{x:.6}")
}

pub fn cmd_spgemm(
    args: &SpgemmArgs,
    mut config: SpgemmConfig,
    verify: bool,
    mut report: BenchReport,
) -> Result<Outcome, CliError> {
    config.shared_table_mode = args.shared_tables;
    config.bitonic_sort = args.bitonic;
    let a = load(&args.a)?;
    let b = match &args.b {
        Some(p) => load(p)?,
        None => a.clone(),
    };
    let name = match &args.b {
        Some(p) => format!("{}*{}", matrix_name(&args.a), matrix_name(p)),
        None => matrix_name(&args.a),
    };
    let engine = engine(config)?;
    if !args.no_warmup {
        engine.multiply(&a, &b)?;
    }
    let mut best: Option<(CsrMatrix, SpgemmStats)> = None;
    for _ in 0..args.repeat.max(1) {
        let (c, stats) = engine.multiply(&a, &b)?;
        if best
            .as_ref()
            .is_none_or(|(_, s)| stats.total_secs < s.total_secs)
        {
            best = Some((c, stats));
        }
    }
    let (c, stats) = best.expect("at least one repetition");
    report.input = Some(InputDescriptor::of(&name, &a));
    let metrics = Metrics::from_engine(&stats);
    let mut out = Outcome::new(report);
    out.summary.push(format!(
        "{name}: total_ip={} nnz_out={} time={:.6}s gflops={}",
        stats.total_ip,
        stats.nnz_out,
        stats.total_secs,
        metrics.gflops.map_or("n/a".into(), |g| g.to_string())
    ));
    let mut csv = CsvTable::new(&[
        "matrix", "engine", "total_ip", "nnz_out", "seconds", "gflops",
    ]);
    csv.push(vec![
        name.clone(),
        "hash-engine".into(),
        stats.total_ip.to_string(),
        stats.nnz_out.to_string(),
        stats.total_secs.to_string(),
        metrics.gflops.map_or(String::new(), |g| g.to_string()),
    ]);
    out.report.results.push(ModeResult {
        engine: Some(EngineVariant::HashEngine),
        sim_mode: None,
        phase: None,
        metrics,
    });
    if verify {
        let t = Instant::now();
        let expected = oracle_spgemm(&a, &b)?;
        let secs = t.elapsed().as_secs_f64();
        let cmp = compare(&c, &expected);
        let oracle_metrics = Metrics {
            total_ip: Some(stats.total_ip as u64),
            nnz_out: Some(expected.nnz() as u64),
            seconds: Some(PhaseSeconds {
                total: secs,
                ..Default::default()
            }),
            ..Default::default()
        };
        csv.push(vec![
            name.clone(),
            "naive-oracle".into(),
            stats.total_ip.to_string(),
            expected.nnz().to_string(),
            secs.to_string(),
            String::new(),
        ]);
        out.report.results.push(ModeResult {
            engine: Some(EngineVariant::NaiveOracle),
            sim_mode: None,
            phase: None,
            metrics: oracle_metrics,
        });
        out.report.detail("structure_equal", cmp.structure_equal);
        out.report.detail("max_rel_error", cmp.max_rel_error);
        let ok = cmp.passes(VERIFY_TOL);
        out.summary.push(format!(
            "verify: {} (structure_equal={}, max_rel_error={:e})",
            if ok { "pass" } else { "fail" },
            cmp.structure_equal,
            cmp.max_rel_error
        ));
        out.set_verify(
            ok,
            format!("{name}: engine output differs from the reference product"),
        );
    }
    if let Some(p) = &args.out {
        save_matrix_market(p, &c)?;
    }
    out.csv = Some(csv);
    Ok(out)
}

pub fn cmd_aia(
    args: &AiaArgs,
    config: SpgemmConfig,
    verify: bool,
    mut report: BenchReport,
) -> Result<Outcome, CliError> {
    let cache = CacheConfig {
        capacity_bytes: args.cache_kib * 1024,
        line_bytes: args.line_bytes,
        associativity: args.assoc,
        replacement: Replacement::Lru,
    };
    cache.validate()?;
    let a = load(&args.a)?;
    if !a.is_square() {
        return Err(spgemm_core::Error::NotSquare {
            n_rows: a.n_rows(),
            n_cols: a.n_cols(),
        }
        .into());
    }
    let name = matrix_name(&args.a);
    let plan = engine(config)?.plan(&a, &a)?;
    report.input = Some(InputDescriptor::of(&name, &a));
    report.environment.cache = Some(cache);
    let phases: &[Phase] = match args.phase {
        PhaseArg::Allocation => &[Phase::Allocation],
        PhaseArg::Accumulation => &[Phase::Accumulation],
        PhaseArg::Both => &Phase::BOTH,
    };
    let mut out = Outcome::new(report);
    let mut csv = CsvTable::new(&[
        "matrix",
        "phase",
        "mode",
        "round_trips",
        "accesses",
        "hit_ratio",
    ]);
    let mut law_holds = true;
    let mut phase_details = Vec::new();
    for &phase in phases {
        let pr = compare_phase(&a, &a, &plan, phase, cache)?;
        let requests = build_spgemm_access_plan(&a, &a, &plan, phase)?;
        let expected_baseline: u64 = requests.iter().map(|r| 2 * r.n as u64).sum();
        let law = pr.baseline.round_trips == expected_baseline
            && pr.aia.round_trips == requests.len() as u64
            && pr.data_multiset_equal;
        law_holds &= law;
        phase_details.push(json!({
            "phase": phase,
            "requests": pr.requests,
            "data_multiset_equal": pr.data_multiset_equal,
            "round_trip_law": law,
        }));
        for mode in AccessMode::BOTH {
            let m = pr.metrics(mode);
            out.report.results.push(ModeResult {
                engine: None,
                sim_mode: Some(mode),
                phase: Some(phase),
                metrics: Metrics {
                    round_trips: Some(m.round_trips),
                    accesses: Some(m.accesses),
                    hit_ratio: Some(m.hit_ratio),
                    bytes_moved: Some(m.bytes_moved),
                    ..Default::default()
                },
            });
            csv.push(vec![
                name.clone(),
                phase.to_string(),
                mode.to_string(),
                m.round_trips.to_string(),
                m.accesses.to_string(),
                fmt_ratio(m.hit_ratio),
            ]);
            out.summary.push(format!(
                "{name} {phase} {mode}: round_trips={} accesses={} hit_ratio={} bytes_moved={}",
                m.round_trips,
                m.accesses,
                fmt_ratio(m.hit_ratio),
                m.bytes_moved
            ));
        }
    }
    out.report.detail("phases", phase_details);
    if let Some(path) = &args.trace {
        let mut w = BufWriter::new(File::create(path)?);
        for &phase in phases {
            for mode in AccessMode::BOTH {
                write_trace_dump(&mut w, &phase_trace(&a, &a, &plan, phase, mode)?)?;
            }
        }
        w.flush()?;
    }
    if verify {
        out.summary.push(format!(
            "verify: {}",
            if law_holds { "pass" } else { "fail" }
        ));
        out.set_verify(
            law_holds,
            format!("{name}: round-trip law or data multiset check failed"),
        );
    }
    out.csv = Some(csv);
    Ok(out)
}

pub fn cmd_mcl(
    args: &MclArgs,
    config: SpgemmConfig,
    verify: bool,
    mut report: BenchReport,
) -> Result<Outcome, CliError> {
    let g = load(&args.graph)?;
    let name = matrix_name(&args.graph);
    let params = MclParams {
        e: args.e,
        r: args.r,
        theta: args.theta,
        k: args.k,
        max_iter: args.max_iter,
        eps: args.eps,
    };
    let engine = engine(config)?;
    let mut worst_column_error = 0.0f64;
    let t = Instant::now();
    let outcome = mcl_observed(&g, &params, &engine, |_, m| {
        for s in column_sums(m) {
            if s != 0.0 {
                worst_column_error = worst_column_error.max((s - 1.0).abs());
            }
        }
    })?;
    let secs = t.elapsed().as_secs_f64();
    report.input = Some(InputDescriptor::of(&name, &g));
    let mut out = Outcome::new(report);
    out.report.results.push(ModeResult {
        engine: Some(EngineVariant::HashEngine),
        sim_mode: None,
        phase: None,
        metrics: Metrics {
            seconds: Some(PhaseSeconds {
                total: secs,
                ..Default::default()
            }),
            ..Default::default()
        },
    });
    let clusters = &outcome.clusters;
    out.report.detail("params", &params);
    out.report.detail("n_clusters", clusters.n_clusters);
    out.report.detail("iterations", outcome.iterations);
    out.report.detail("converged", outcome.converged);
    out.report
        .detail("max_column_sum_error", worst_column_error);
    out.summary.push(format!(
        "{name}: {} clusters after {} iterations (converged={})",
        clusters.n_clusters, outcome.iterations, outcome.converged
    ));
    let mut csv = CsvTable::new(&["node", "cluster"]);
    for (node, c) in clusters.cluster_of_node.iter().enumerate() {
        csv.push(vec![node.to_string(), c.to_string()]);
    }
    if let Some(p) = &args.out {
        write_clusters(BufWriter::new(File::create(p)?), clusters)?;
    }
    if verify {
        let components = ClusterAssignment::from_components(&g);
        let crosses = clusters.members().iter().any(|m| {
            m.iter()
                .any(|&v| components.cluster_of_node[v] != components.cluster_of_node[m[0]])
        });
        let ok = worst_column_error <= 1e-9 && !crosses;
        out.summary.push(format!(
            "verify: {} (max column sum error {worst_column_error:e}, clusters within components: {})",
            if ok { "pass" } else { "fail" },
            !crosses
        ));
        out.set_verify(
            ok,
            format!("{name}: iterates not stochastic or a cluster spans components"),
        );
    }
    out.csv = Some(csv);
    Ok(out)
}

fn dense_lines(m: &CsrMatrix) -> Vec<String> {
    (0..m.n_rows())
        .map(|i| {
            let cells: Vec<String> = (0..m.n_cols())
                .map(|j| m.get(i, j).unwrap_or(0.0).to_string())
                .collect();
            format!("  [{}]", cells.join(", "))
        })
        .collect()
}

pub fn cmd_contract(
    args: &ContractArgs,
    config: SpgemmConfig,
    verify: bool,
    mut report: BenchReport,
) -> Result<Outcome, CliError> {
    let g = load(&args.graph)?;
    let labels = LabelVector::load(&args.labels)
        .map_err(|e| CliError::input(format!("{}: {e}", args.labels.display())))?;
    let name = matrix_name(&args.graph);
    let engine = engine(config)?;
    let t = Instant::now();
    let c = graph_contract(&g, &labels, &engine)?;
    let secs = t.elapsed().as_secs_f64();
    report.input = Some(InputDescriptor::of(&name, &g));
    let mut out = Outcome::new(report);
    out.report.results.push(ModeResult {
        engine: Some(EngineVariant::HashEngine),
        sim_mode: None,
        phase: None,
        metrics: Metrics {
            nnz_out: Some(c.nnz() as u64),
            seconds: Some(PhaseSeconds {
                total: secs,
                ..Default::default()
            }),
            ..Default::default()
        },
    });
    out.report.detail("groups", c.n_rows());
    out.report.detail("mass_in", g.sum());
    out.report.detail("mass_out", c.sum());
    out.summary.push(format!(
        "{name}: contracted to {}x{} with {} nonzeros",
        c.n_rows(),
        c.n_cols(),
        c.nnz()
    ));
    if c.n_rows() <= 16 {
        out.summary.extend(dense_lines(&c));
    }
    let mut csv = CsvTable::new(&["row", "col", "value"]);
    for t in c.to_triplets() {
        csv.push(vec![
            t.row.to_string(),
            t.col.to_string(),
            t.value.to_string(),
        ]);
    }
    if let Some(p) = &args.out {
        save_matrix_market(p, &c)?;
    }
    if verify {
        let s = build_selector(&labels, g.n_rows())?;
        let expected = oracle_spgemm(&oracle_spgemm(&s, &g)?, &s.transpose())?;
        let cmp = compare(&c, &expected);
        let integral = g.values().iter().all(|v| v.fract() == 0.0);
        let mass_ok = if integral {
            c.sum() == g.sum()
        } else {
            spgemm_core::oracle::rel_error(c.sum(), g.sum()) <= VERIFY_TOL
        };
        let ok = cmp.passes(VERIFY_TOL) && mass_ok;
        out.summary.push(format!(
            "verify: {} (matches reference: {}, mass conserved: {mass_ok})",
            if ok { "pass" } else { "fail" },
            cmp.passes(VERIFY_TOL)
        ));
        out.set_verify(
            ok,
            format!("{name}: contraction differs from reference or loses mass"),
        );
    }
    out.csv = Some(csv);
    Ok(out)
}

pub fn cmd_gnncheck(
    args: &GnnArgs,
    config: SpgemmConfig,
    seed: u64,
    report: BenchReport,
) -> Result<Outcome, CliError> {
    if args.n == 0 || args.f == 0 || args.h == 0 || args.k == 0 {
        return Err(CliError::input("n, f, h and k must be positive"));
    }
    if !(args.step > 0.0) || !(0.0..=1.0).contains(&args.density) {
        return Err(CliError::input(
            "step must be positive and density within [0, 1]",
        ));
    }
    let inst = PropagationInstance::random(args.n, args.f, args.h, args.density, seed);
    let engine = engine(config)?;
    let t = Instant::now();
    let r = gradient_check(&engine, &inst.a, &inst.x, &inst.w, args.k, args.step)?;
    let secs = t.elapsed().as_secs_f64();
    let mut out = Outcome::new(report);
    out.report.input = Some(InputDescriptor::of(
        format!("random-n{}-seed{seed}", args.n),
        &inst.a,
    ));
    out.report.results.push(ModeResult {
        engine: Some(EngineVariant::HashEngine),
        sim_mode: None,
        phase: None,
        metrics: Metrics {
            seconds: Some(PhaseSeconds {
                total: secs,
                ..Default::default()
            }),
            ..Default::default()
        },
    });
    out.report.detail("max_rel_error", r.max_rel_error);
    out.report.detail("checked", r.checked);
    out.report.detail("unmasked_nonzero", r.unmasked_nonzero);
    out.report.detail("tolerance", args.tol);
    let ok = r.passes(args.tol);
    out.summary.push(format!(
        "gradient check: max_rel_error={:e} over {} masked coordinates, {} nonzero unmasked gradients: {}",
        r.max_rel_error,
        r.checked,
        r.unmasked_nonzero,
        if ok { "pass" } else { "fail" }
    ));
    let mut csv = CsvTable::new(&[
        "n",
        "f",
        "k",
        "seed",
        "max_rel_error",
        "checked",
        "unmasked_nonzero",
    ]);
    csv.push(vec![
        args.n.to_string(),
        args.f.to_string(),
        args.k.to_string(),
        seed.to_string(),
        r.max_rel_error.to_string(),
        r.checked.to_string(),
        r.unmasked_nonzero.to_string(),
    ]);
    out.csv = Some(csv);
    out.set_verify(
        ok,
        format!(
            "max relative error {:e} exceeds {:e}",
            r.max_rel_error, args.tol
        ),
    );
    Ok(out)
}

pub fn cmd_corpus(
    args: &CorpusArgs,
    config: SpgemmConfig,
    report: BenchReport,
) -> Result<Outcome, CliError> {
    let (select, action) = match &args.action {
        CorpusAction::Fetch(s) => (s, "fetch"),
        CorpusAction::Verify(s) => (s, "verify"),
        CorpusAction::List(s) => (s, "list"),
    };
    let corpus = match &select.manifest {
        Some(p) => Corpus::from_manifest(p)?,
        None => Corpus::builtin(),
    };
    let entries = corpus.select(&select.names)?;
    let engine = engine(config)?;
    let mut out = Outcome::new(report);
    out.report.detail("action", action);
    out.report
        .detail("corpus_dir", corpus.dir.display().to_string());
    let mut csv = CsvTable::new(&[
        "matrix",
        "status",
        "field",
        "expected",
        "actual",
        "informational",
    ]);
    let mut details = Vec::new();
    let mut mismatched = Vec::new();
    for e in entries {
        match action {
            "list" => {
                let present = corpus.is_present(e);
                out.summary.push(format!(
                    "{:<16} {:>10} rows {:>11} nnz  {}",
                    e.key(),
                    e.rows,
                    e.nnz,
                    if present { "present" } else { "missing" }
                ));
                details
                    .push(json!({ "name": e.name, "present": present, "file": corpus.path_of(e) }));
                continue;
            }
            "fetch" => {
                let digest = fetch_entry(&corpus, e)?;
                out.summary
                    .push(format!("{}: downloaded, sha256 {digest}", e.name));
            }
            _ => {}
        }
        let r = verify_entry(&corpus, e, &engine, action == "fetch")?;
        if r.status == EntryStatus::Mismatch {
            mismatched.push(r.name.clone());
        }
        let status = serde_json::to_value(r.status).expect("status serializes");
        let status = status.as_str().unwrap_or_default().to_string();
        if r.checks.is_empty() {
            csv.push(vec![
                r.name.clone(),
                status.clone(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
            ]);
        }
        for c in &r.checks {
            csv.push(vec![
                r.name.clone(),
                status.clone(),
                c.field.clone(),
                c.expected.to_string(),
                c.actual.to_string(),
                c.informational.to_string(),
            ]);
        }
        let line = if r.status == EntryStatus::Missing {
            format!(
                "{}: missing from {} (skipped)",
                r.name,
                corpus.dir.display()
            )
        } else {
            r.summary()
        };
        out.summary.push(line);
        details.push(serde_json::to_value(&r).expect("entry report serializes"));
    }
    out.report.detail("entries", details);
    if action != "list" {
        let ok = mismatched.is_empty();
        out.set_verify(ok, format!("mismatch in {}", mismatched.join(", ")));
    }
    out.csv = Some(csv);
    Ok(out)
}
