//! `lbench` — benchmark CLI.
//!
//! Subcommands: `probe` (capability report), `run` (one experiment),
//! `sweep` (layout x threads x memory-target product), `report` (tables,
//! CSV, SVG charts, side-by-side comparisons from JSONL records) and
//! `validate` (the built-in correctness suite).
//!
//! Exit codes: 0 success, 1 failure, 2 capability missing.

mod render;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use lb_energy::probe_rapl;
use lb_harness::{
    parse_jsonl, run_experiment, run_sweep, to_jsonl_line, HarnessError, RunRecord, SweepPlan,
    SweepRecord,
};

use render::comparison::render_comparison;
use render::csv::render_csv;
use render::svg::render_energy_chart;
use render::table::render_table;

#[derive(Parser)]
#[command(name = "lbench", version, about = "Lattice Boltzmann layout/energy benchmark suite")]
struct Cli {
    /// Emit machine-readable error JSON on stderr.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report power domains, NUMA nodes and CPU topology of this machine.
    Probe,
    /// Run one experiment from a config file and append its record.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// JSON Lines output (appended).
        #[arg(long, default_value = "records.jsonl")]
        out: PathBuf,
    },
    /// Run the sweep described by the config's [sweep] table.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// JSON Lines output (appended incrementally, crash-safe).
        #[arg(long, default_value = "records.jsonl")]
        out: PathBuf,
    },
    /// Render tables/CSV/SVG from record files; two or more --in files
    /// produce a side-by-side comparison.
    Report {
        /// Input JSONL file (repeatable).
        #[arg(long = "in", required = true)]
        input: Vec<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Kernel the SVG chart plots.
        #[arg(long, default_value = "propagate", value_parser = ["propagate", "collide"])]
        kernel: String,
    },
    /// Run the correctness suites and exit 0 only if everything passes.
    Validate,
}

struct ExitError {
    code: i32,
    message: String,
}

impl ExitError {
    fn failure(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }
}

impl From<HarnessError> for ExitError {
    fn from(e: HarnessError) -> Self {
        Self { code: if e.is_capability() { 2 } else { 1 }, message: e.to_string() }
    }
}

impl From<std::io::Error> for ExitError {
    fn from(e: std::io::Error) -> Self {
        Self { code: 1, message: e.to_string() }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = dispatch(&cli) {
        if cli.json {
            eprintln!("{}", serde_json::json!({ "error": e.message, "code": e.code }));
        } else {
            eprintln!("error: {}", e.message);
        }
        std::process::exit(e.code);
    }
}

fn dispatch(cli: &Cli) -> Result<(), ExitError> {
    match &cli.command {
        Command::Probe => probe(cli.json),
        Command::Run { config, out } => run(config, out),
        Command::Sweep { config, out } => sweep(config, out),
        Command::Report { input, csv, svg, kernel } => {
            report(input, csv.as_deref(), svg.as_deref(), kernel)
        }
        Command::Validate => validate(),
    }
}

fn probe(json: bool) -> Result<(), ExitError> {
    let rapl = probe_rapl();
    let nodes = lb_harness::numa::numa_nodes();
    let cpus = lb_harness::affinity::logical_cpus();
    let affinity_ok = lb_harness::affinity::current_affinity().is_some();
    let meta = lb_harness::MachineMeta::collect(if rapl.available() { "rapl" } else { "none" }, rapl.dram_zones > 0);

    if json {
        println!(
            "{}",
            serde_json::json!({
                "cpu_model": meta.cpu_model,
                "logical_cpus": cpus,
                "numa_nodes": nodes,
                "package": rapl.available(),
                "dram": rapl.dram_zones > 0,
                "rapl_detail": rapl.detail,
                "synthetic": true,
                "affinity": affinity_ok,
            })
        );
    } else {
        println!("cpu: {} ({} logical cpus)", meta.cpu_model, cpus);
        println!("numa nodes: {nodes:?}");
        println!("package: {}", if rapl.available() { "available" } else { "unavailable" });
        println!(
            "dram: {}",
            if rapl.available() && rapl.dram_zones > 0 { "available" } else { "unavailable" }
        );
        println!("rapl detail: {}", rapl.detail);
        println!("synthetic: available");
        println!("affinity control: {}", if affinity_ok { "available" } else { "unavailable" });
    }
    Ok(())
}

fn read_config(path: &Path) -> Result<(lb_harness::ExperimentConfig, Option<lb_harness::SweepAxes>), ExitError> {
    let text = fs::read_to_string(path)
        .map_err(|e| ExitError::failure(format!("cannot read {}: {e}", path.display())))?;
    Ok(lb_harness::config::parse_config(&text)?)
}

fn append_lines(path: &Path, lines: &[String]) -> Result<(), ExitError> {
    let mut file = fs::OpenOptions::new().create(true).append(true).open(path)?;
    for line in lines {
        writeln!(file, "{line}")?;
    }
    file.flush()?;
    Ok(())
}

fn run(config: &Path, out: &Path) -> Result<(), ExitError> {
    let (cfg, _) = read_config(config)?;
    let record = run_experiment(&cfg)?;
    append_lines(out, &[to_jsonl_line(&SweepRecord::Run(Box::new(record.clone())))])?;
    print!("{}", render_table(std::slice::from_ref(&record)));
    if !record.warnings.is_empty() {
        println!("warnings: {}", record.warnings.join("; "));
    }
    println!("checksum: {:e}", record.checksum);
    println!("record appended to {}", out.display());
    Ok(())
}

fn sweep(config: &Path, out: &Path) -> Result<(), ExitError> {
    let (base, axes) = read_config(config)?;
    let axes = axes.ok_or_else(|| {
        ExitError::failure("config has no [sweep] table; use `run` for a single experiment")
    })?;
    let plan = SweepPlan::new(base, axes)?;
    let total = plan.combinations().len();
    println!("sweep: {total} combinations -> {}", out.display());

    let mut file = fs::OpenOptions::new().create(true).append(true).open(out)?;
    let mut done = 0usize;
    let summary = run_sweep(&plan, |record| {
        writeln!(file, "{}", to_jsonl_line(record)).map_err(HarnessError::Io)?;
        file.flush().map_err(HarnessError::Io)?;
        done += 1;
        match record {
            SweepRecord::Run(r) => println!(
                "[{done}/{total}] {} threads={} target={}: ok",
                r.config.layout, r.config.threads, r.config.memory_target
            ),
            SweepRecord::Skip(s) => println!(
                "[{done}/{total}] {} threads={} target={}: skipped ({})",
                s.layout, s.threads, s.memory_target, s.reason
            ),
        }
        Ok(())
    })?;

    println!("completed {} runs, skipped {}", summary.completed, summary.skipped);
    let runs: Vec<RunRecord> =
        summary.records.iter().filter_map(|r| r.as_run().cloned()).collect();
    print!("{}", render_table(&runs));
    if !summary.checksums_consistent {
        return Err(ExitError::failure(
            "checksums differ across combinations — determinism contract violated",
        ));
    }
    Ok(())
}

fn load_records(path: &Path) -> Result<(Vec<RunRecord>, usize), ExitError> {
    let text = fs::read_to_string(path)
        .map_err(|e| ExitError::failure(format!("cannot read {}: {e}", path.display())))?;
    let parsed = parse_jsonl(&text)
        .map_err(|e| ExitError::failure(format!("{}: {e}", path.display())))?;
    let mut runs = Vec::new();
    let mut skipped = 0usize;
    for record in parsed {
        match record {
            SweepRecord::Run(r) => runs.push(*r),
            SweepRecord::Skip(_) => skipped += 1,
        }
    }
    Ok((runs, skipped))
}

fn report(
    input: &[PathBuf],
    csv: Option<&Path>,
    svg: Option<&Path>,
    kernel: &str,
) -> Result<(), ExitError> {
    let mut sets = Vec::new();
    let mut all_records = Vec::new();
    for path in input {
        let (records, skipped) = load_records(path)?;
        if skipped > 0 {
            eprintln!("note: {} skipped combination(s) in {}", skipped, path.display());
        }
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        all_records.extend(records.clone());
        sets.push((name, records));
    }

    if sets.len() == 1 {
        print!("{}", render_table(&sets[0].1));
    } else {
        print!("{}", render_comparison(&sets).map_err(ExitError::failure)?);
    }

    if let Some(path) = csv {
        fs::write(path, render_csv(&all_records))?;
        println!("csv written to {}", path.display());
    }
    if let Some(path) = svg {
        let chart = render_energy_chart(&all_records, kernel).map_err(ExitError::failure)?;
        fs::write(path, chart)?;
        println!("svg written to {}", path.display());
    }
    Ok(())
}

fn validate() -> Result<(), ExitError> {
    let results = lb_harness::validate::run_validation_suite();
    let mut all_passed = true;
    for r in &results {
        let status = if r.passed { "PASS" } else { "FAIL" };
        println!("{status}  {:<32} ({:>8.2?})  {}", r.name, r.duration, r.detail);
        all_passed &= r.passed;
    }
    if all_passed {
        println!("validate: all {} suites passed", results.len());
        Ok(())
    } else {
        Err(ExitError::failure("validation failed"))
    }
}
