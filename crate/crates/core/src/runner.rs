//! Workload wrapper.
//!
//! Starts a sampling loop, launches the workload command, stops sampling
//! when the process exits, and stamps the trace with the run metadata
//! (optimization flag, platform). Energy attribution is node-wide: hardware
//! counters cover the whole package, so the measured power includes any
//! background activity, exactly like the per-node model this implements.

use std::collections::BTreeMap;
use std::process::{Command, ExitStatus};
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use crate::collector::{CollectorError, SamplingConfig, run_collection};
use crate::source::{SourceError, SourceKind, open_source};
use crate::trace::NodeTrace;

#[derive(Debug, Clone)]
pub struct RunSpec {
    /// Program and arguments.
    pub command: Vec<String>,
    /// Environment additions laid over the inherited environment.
    pub env: BTreeMap<String, String>,
    pub source_kind: SourceKind,
    pub sampling: SamplingConfig,
    /// Run metadata recorded into the trace (opt_flag, platform, ...).
    pub metadata: BTreeMap<String, String>,
}

#[derive(Debug)]
pub struct RunResult {
    /// Child exit code; signal terminations map to 128 + signal number.
    pub exit_status: i32,
    pub wall_time_s: f64,
    pub trace: NodeTrace,
}

#[derive(Debug, thiserror::Error)]
pub enum RunnerError {
    #[error("failed to spawn {command:?}: {source}")]
    SpawnFailure {
        command: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Source(#[from] SourceError),
    #[error(transparent)]
    Collector(#[from] CollectorError),
    #[error("process exited before the first sample (wall time {wall_time_s:.3} s)")]
    EmptyTrace { wall_time_s: f64 },
    #[error("invalid run spec: {0}")]
    InvalidSpec(String),
    #[error("waiting on child failed: {0}")]
    Wait(std::io::Error),
}

/// How often the child is polled for exit and the abort flag checked.
const WAIT_POLL: Duration = Duration::from_millis(10);

/// Runs the workload under measurement.
///
/// Collection starts before the process launches and stops after it exits;
/// a nonzero child exit still yields a trace. Raising `abort` kills the
/// child, which ends the run through the normal path and flushes whatever
/// trace exists.
pub fn run_workload(spec: &RunSpec, abort: Option<&AtomicBool>) -> Result<RunResult, RunnerError> {
    if spec.command.is_empty() {
        return Err(RunnerError::InvalidSpec("command is empty".into()));
    }
    if spec.metadata.keys().any(|k| k.is_empty()) {
        return Err(RunnerError::InvalidSpec("metadata keys must be nonempty".into()));
    }
    spec.sampling.validate()?;
    let mut source = open_source(&spec.source_kind)?;

    let stop = AtomicBool::new(false);
    std::thread::scope(|scope| {
        let sampler = scope.spawn(|| {
            run_collection(source.as_mut(), &spec.sampling, &spec.metadata, &stop)
        });

        let start = Instant::now();
        let mut child = match Command::new(&spec.command[0])
            .args(&spec.command[1..])
            .envs(&spec.env)
            .spawn()
        {
            Ok(child) => child,
            Err(source) => {
                stop.store(true, Ordering::SeqCst);
                let _ = sampler.join();
                // A partial trace may have been flushed before the spawn
                // failed; a failed run must leave no trace file behind.
                let _ = std::fs::remove_file(spec.sampling.trace_path());
                return Err(RunnerError::SpawnFailure {
                    command: spec.command[0].clone(),
                    source,
                });
            }
        };

        let status = loop {
            if let Some(flag) = abort {
                if flag.load(Ordering::SeqCst) {
                    let _ = child.kill();
                }
            }
            match child.try_wait() {
                Ok(Some(status)) => break status,
                Ok(None) => std::thread::sleep(WAIT_POLL),
                Err(e) => {
                    let _ = child.kill();
                    stop.store(true, Ordering::SeqCst);
                    let _ = sampler.join();
                    return Err(RunnerError::Wait(e));
                }
            }
        };
        let wall_time_s = start.elapsed().as_secs_f64();
        stop.store(true, Ordering::SeqCst);

        let trace = match sampler.join().expect("sampler thread panicked") {
            Ok(trace) => trace,
            Err(CollectorError::EmptyTrace) => {
                return Err(RunnerError::EmptyTrace { wall_time_s })
            }
            Err(e) => return Err(e.into()),
        };

        Ok(RunResult {
            exit_status: exit_code(status),
            wall_time_s,
            trace,
        })
    })
}

#[cfg(unix)]
fn exit_code(status: ExitStatus) -> i32 {
    use std::os::unix::process::ExitStatusExt;
    status
        .code()
        .unwrap_or_else(|| 128 + status.signal().unwrap_or(0))
}

#[cfg(not(unix))]
fn exit_code(status: ExitStatus) -> i32 {
    status.code().unwrap_or(-1)
}
