//! powerprof: sample energy counters around parallel workloads and report
//! power profiles.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::sync::atomic::{AtomicBool, Ordering};

use anyhow::{Context, Result, bail};
use clap::{Args, Parser, Subcommand};

use powerprof_core::collector::{DEFAULT_PERIOD_MS, SamplingConfig, run_collection};
use powerprof_core::exporter::{
    self, COMPARED_METRICS, ComparisonReport, compare, export_report, read_report,
    write_comparison, write_report,
};
use powerprof_core::kernels::{KernelId, KernelSpec, Variant, run_kernel};
use powerprof_core::profile::profile_of;
use powerprof_core::runner::{RunSpec, run_workload};
use powerprof_core::source::{SourceKind, enumerate_domains};
use powerprof_core::trace::read_trace;

#[derive(Parser)]
#[command(
    name = "powerprof",
    version,
    about = "Power-consumption profiling for parallel programs",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SourceArgs {
    /// Energy source: powercap, msr, or replay:<path>
    #[arg(long, env = "POWERPROF_SOURCE")]
    source: String,
}

#[derive(Args)]
struct SamplingArgs {
    /// Node label; becomes the trace file name
    #[arg(long, default_value = "node0")]
    node: String,
    /// Directory receiving <node>.trace
    #[arg(long)]
    out: PathBuf,
    /// Sampling period in milliseconds
    #[arg(long, default_value_t = DEFAULT_PERIOD_MS)]
    period_ms: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Sample an energy source into a per-node trace file
    Collect {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        sampling: SamplingArgs,
        /// Stop after this many seconds (default: replay exhaustion or Ctrl-C)
        #[arg(long)]
        duration_s: Option<f64>,
        /// Metadata recorded into the trace, repeatable: --meta key=value
        #[arg(long = "meta", value_name = "KEY=VALUE")]
        meta: Vec<String>,
    },
    /// Run a command under power measurement
    Run {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        sampling: SamplingArgs,
        /// Compiler optimization flag to record (-O, -O2, -O3, ...)
        #[arg(long)]
        opt_flag: Option<String>,
        /// Platform label to record
        #[arg(long)]
        platform: Option<String>,
        /// Extra metadata, repeatable: --meta key=value
        #[arg(long = "meta", value_name = "KEY=VALUE")]
        meta: Vec<String>,
        /// Environment additions for the child, repeatable: --env key=value
        #[arg(long = "env", value_name = "KEY=VALUE")]
        env: Vec<String>,
        /// Workload command and arguments
        #[arg(trailing_var_arg = true, required = true)]
        command: Vec<String>,
    },
    /// Fold a directory of trace files into one report
    Export {
        /// Directory containing *.trace files
        trace_dir: PathBuf,
        /// Run label embedded in the report
        #[arg(long)]
        label: String,
        /// Metadata embedded in the report, repeatable: --meta key=value
        #[arg(long = "meta", value_name = "KEY=VALUE")]
        meta: Vec<String>,
        /// Output file (stdout when omitted)
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Compare two reports metric by metric
    Compare {
        /// Report taken as the base ("before")
        base: PathBuf,
        /// Report compared against the base
        other: PathBuf,
        /// Comparison file to write (summary always prints)
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Emit t_ms<TAB>total_w columns for a trace, ready for plotting
    PlotData {
        /// Trace file
        trace: PathBuf,
        /// Output file (stdout when omitted)
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a workload kernel standalone
    Bench {
        /// Kernel: copy, strided_sum, nested_loops, refactor, sortstr,
        /// dijkstra, koshi, riemann
        kernel: String,
        /// base or opt (paired kernels only)
        #[arg(long)]
        variant: Option<String>,
        /// Problem size (kernel-specific meaning)
        #[arg(long)]
        size: Option<usize>,
        /// Worker threads for the parallel kernels
        #[arg(long)]
        threads: Option<usize>,
        /// Outer repetition count
        #[arg(long)]
        repeat: Option<usize>,
        /// Input generation seed
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, hide = true)]
        tau: Option<f64>,
    },
    /// Probe energy sources available on this host
    Sources {
        /// Probe one source instead of all built-in ones
        #[arg(long)]
        source: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("powerprof: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Collect { source, sampling, duration_s, meta } => {
            cmd_collect(&source.source, sampling, duration_s, &meta)
        }
        Command::Run { source, sampling, opt_flag, platform, meta, env, command } => {
            cmd_run(&source.source, sampling, opt_flag, platform, &meta, &env, command)
        }
        Command::Export { trace_dir, label, meta, output } => {
            cmd_export(&trace_dir, &label, &meta, output.as_deref())
        }
        Command::Compare { base, other, output } => cmd_compare(&base, &other, output.as_deref()),
        Command::PlotData { trace, output } => cmd_plot_data(&trace, output.as_deref()),
        Command::Bench { kernel, variant, size, threads, repeat, seed, tau } => {
            cmd_bench(&kernel, variant.as_deref(), size, threads, repeat, seed, tau)
        }
        Command::Sources { source } => cmd_sources(source.as_deref()),
    }
}

fn parse_kv_pairs(pairs: &[String], what: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for pair in pairs {
        let (key, value) = pair
            .split_once('=')
            .with_context(|| format!("{what} {pair:?} must be key=value"))?;
        if key.is_empty() {
            bail!("{what} {pair:?} has an empty key");
        }
        map.insert(key.to_string(), value.to_string());
    }
    Ok(map)
}

fn sampling_config(args: &SamplingArgs) -> SamplingConfig {
    SamplingConfig {
        period_ms: args.period_ms,
        node_id: args.node.clone(),
        output_dir: args.out.clone(),
    }
}

/// Flag raised by SIGINT/SIGTERM; loops poll it to shut down cleanly.
static INTERRUPTED: AtomicBool = AtomicBool::new(false);

extern "C" fn on_signal(_sig: libc::c_int) {
    INTERRUPTED.store(true, Ordering::SeqCst);
}

fn install_signal_handlers() {
    let handler = on_signal as *const () as libc::sighandler_t;
    unsafe {
        libc::signal(libc::SIGINT, handler);
        libc::signal(libc::SIGTERM, handler);
    }
}

fn cmd_collect(
    source: &str,
    sampling: SamplingArgs,
    duration_s: Option<f64>,
    meta: &[String],
) -> Result<()> {
    let kind = SourceKind::parse(source)?;
    let metadata = parse_kv_pairs(meta, "--meta")?;
    let config = sampling_config(&sampling);
    install_signal_handlers();

    let stop = Arc::new(AtomicBool::new(false));
    let timer = duration_s.map(|secs| {
        let stop = Arc::clone(&stop);
        std::thread::spawn(move || {
            let deadline = std::time::Instant::now() + std::time::Duration::from_secs_f64(secs);
            while std::time::Instant::now() < deadline && !INTERRUPTED.load(Ordering::SeqCst) {
                std::thread::sleep(std::time::Duration::from_millis(20));
            }
            stop.store(true, Ordering::SeqCst);
        })
    });
    // Mirror signals into the collector's stop flag.
    let stop_for_signals = Arc::clone(&stop);
    let signal_pump = std::thread::spawn(move || {
        while !stop_for_signals.load(Ordering::SeqCst) {
            if INTERRUPTED.load(Ordering::SeqCst) {
                stop_for_signals.store(true, Ordering::SeqCst);
                break;
            }
            std::thread::sleep(std::time::Duration::from_millis(20));
        }
    });

    let mut src = powerprof_core::source::open_source(&kind)?;
    let result = run_collection(src.as_mut(), &config, &metadata, &stop);
    stop.store(true, Ordering::SeqCst);
    let _ = signal_pump.join();
    if let Some(t) = timer {
        let _ = t.join();
    }
    let trace = result?;

    let profile = profile_of(&trace)?;
    println!(
        "node={} samples={} w_max_w={:.6} w_med_w={:.6} w_avg_w={:.6} energy_j={:.6} runtime_s={:.6} trace={}",
        trace.node_id,
        trace.samples.len(),
        profile.w_max_w,
        profile.w_med_w,
        profile.w_avg_w,
        profile.energy_total_j,
        profile.runtime_s,
        config.trace_path().display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    source: &str,
    sampling: SamplingArgs,
    opt_flag: Option<String>,
    platform: Option<String>,
    meta: &[String],
    env: &[String],
    command: Vec<String>,
) -> Result<()> {
    let kind = SourceKind::parse(source)?;
    let mut metadata = parse_kv_pairs(meta, "--meta")?;
    if let Some(flag) = opt_flag {
        metadata.insert("opt_flag".to_string(), flag);
    }
    if let Some(platform) = platform {
        metadata.insert("platform".to_string(), platform);
    }
    let spec = RunSpec {
        command,
        env: parse_kv_pairs(env, "--env")?,
        source_kind: kind,
        sampling: sampling_config(&sampling),
        metadata,
    };
    install_signal_handlers();

    let result = run_workload(&spec, Some(&INTERRUPTED))?;
    let profile = profile_of(&result.trace)?;
    let trace_path = spec.sampling.trace_path();

    let result_path = spec
        .sampling
        .output_dir
        .join(format!("{}.result", spec.sampling.node_id));
    let result_json = serde_json::json!({
        "node_id": result.trace.node_id,
        "exit_status": result.exit_status,
        "wall_time_s": result.wall_time_s,
        "samples": result.trace.samples.len(),
        "trace": trace_path.to_string_lossy(),
    });
    std::fs::write(&result_path, format!("{:#}\n", result_json))
        .with_context(|| format!("writing {}", result_path.display()))?;

    println!(
        "node={} child_exit={} wall_time_s={:.3} samples={} w_max_w={:.6} w_med_w={:.6} w_avg_w={:.6} energy_j={:.6} runtime_s={:.6} trace={}",
        result.trace.node_id,
        result.exit_status,
        result.wall_time_s,
        result.trace.samples.len(),
        profile.w_max_w,
        profile.w_med_w,
        profile.w_avg_w,
        profile.energy_total_j,
        profile.runtime_s,
        trace_path.display()
    );
    Ok(())
}

fn cmd_export(
    trace_dir: &Path,
    label: &str,
    meta: &[String],
    output: Option<&Path>,
) -> Result<()> {
    let metadata = parse_kv_pairs(meta, "--meta")?;
    let report = export_report(trace_dir, label, metadata)?;
    match output {
        Some(path) => {
            write_report(&report, path)?;
            println!(
                "label={} nodes={} w_max_total_w={:.6} energy_total_j={:.6} report={}",
                report.label,
                report.aggregate.node_count,
                report.aggregate.w_max_total_w,
                report.aggregate.energy_total_j,
                path.display()
            );
        }
        None => print!("{}", exporter::render_report(&report)?),
    }
    Ok(())
}

fn cmd_compare(base: &Path, other: &Path, output: Option<&Path>) -> Result<()> {
    let base_report = read_report(base)?;
    let other_report = read_report(other)?;
    let comparison = compare(&base_report, &other_report)?;
    print_comparison_table(&comparison);
    if let Some(path) = output {
        write_comparison(&comparison, path)?;
    }
    Ok(())
}

fn print_comparison_table(cmp: &ComparisonReport) {
    println!("base={} other={}", cmp.base_label, cmp.other_label);
    println!("{:<14} {:>14} {:>14} {:>14} {:>9}", "metric", "base", "other", "delta", "delta%");
    for name in COMPARED_METRICS {
        let m = &cmp.metrics[name];
        let pct = match m.delta_pct {
            Some(p) => format!("{p:+.1}%"),
            None => "n/a".to_string(),
        };
        println!(
            "{:<14} {:>14.6} {:>14.6} {:>+14.6} {:>9}",
            name, m.base, m.other, m.delta_abs, pct
        );
    }
}

fn cmd_plot_data(trace: &Path, output: Option<&Path>) -> Result<()> {
    let trace = read_trace(trace)?;
    let data = powerprof_core::exporter::plot_data(&trace);
    match output {
        Some(path) => std::fs::write(path, data).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{data}"),
    }
    Ok(())
}

fn cmd_bench(
    kernel: &str,
    variant: Option<&str>,
    size: Option<usize>,
    threads: Option<usize>,
    repeat: Option<usize>,
    seed: Option<u64>,
    tau: Option<f64>,
) -> Result<()> {
    let id = KernelId::parse(kernel)
        .with_context(|| format!("unknown kernel {kernel:?} (try --help)"))?;
    let mut spec = KernelSpec::new(id);
    if let Some(v) = variant {
        let v = Variant::parse(v).with_context(|| format!("variant must be base or opt, got {v:?}"))?;
        spec = spec.with_variant(v);
    }
    if let Some(n) = size {
        spec.size = n;
    }
    if let Some(p) = threads {
        spec.threads = p;
    }
    if let Some(r) = repeat {
        spec.repeat = r;
    }
    if let Some(s) = seed {
        spec.seed = s;
    }
    if let Some(t) = tau {
        spec.tau = t;
    }
    let result = run_kernel(&spec)?;
    println!(
        "kernel={} variant={} size={} threads={} repeat={} wall_time_s={:.6} checksum={:016x} ops={}",
        spec.kernel,
        spec.variant.map(|v| v.as_str()).unwrap_or("-"),
        spec.size,
        spec.threads,
        spec.repeat,
        result.wall_time_s,
        result.checksum,
        result.ops_performed
    );
    Ok(())
}

fn cmd_sources(only: Option<&str>) -> Result<()> {
    let kinds: Vec<SourceKind> = match only {
        Some(s) => vec![SourceKind::parse(s)?],
        None => vec![SourceKind::Powercap, SourceKind::Msr],
    };
    for kind in kinds {
        match enumerate_domains(&kind) {
            Ok(domains) => {
                println!("{kind}: available, {} domain(s)", domains.len());
                for d in domains {
                    println!(
                        "  {} ({}) class={} range_uj={}",
                        d.name, d.domain_id, d.component_class, d.max_energy_range_uj
                    );
                }
            }
            Err(err) => println!("{kind}: unavailable: {err}"),
        }
    }
    Ok(())
}
