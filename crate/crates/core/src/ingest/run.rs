use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, SystemTime};

use serde_json::json;
use wait_timeout::ChildExt;

use super::config::{ResolvedParser, FILE_PLACEHOLDER};
use super::{FileMessageMatrix, HarnessConfig, IngestError, MatrixRow, Provenance};

/// What happened when one parser ran on one file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExecutionOutcome {
    Exited(i32),
    /// Killed by a signal (unix).
    Signaled,
    TimedOut,
    /// The process could not be started or waited on.
    Failed(String),
}

impl ExecutionOutcome {
    pub fn is_error(&self) -> bool {
        !matches!(self, ExecutionOutcome::Exited(0))
    }
}

struct Execution {
    outcome: ExecutionOutcome,
    output: String,
}

/// Runs every configured parser on every file and turns the rules into a
/// matrix, one row per file in input order.
///
/// All commands are resolved before anything runs. A parser that times out,
/// crashes or cannot be started sets its exit-code messages; its regex
/// messages are evaluated against whatever output was captured. Such events
/// are listed under `"execution_failures"` in the provenance. At most
/// `workers` executions run at once.
pub fn run_harness(
    config: &HarnessConfig,
    files: &[PathBuf],
    workers: usize,
) -> Result<FileMessageMatrix, IngestError> {
    let parsers = config.resolve()?;
    let universe = config.universe()?;
    let jobs: Vec<(usize, usize)> = (0..files.len())
        .flat_map(|f| (0..parsers.len()).map(move |p| (f, p)))
        .collect();

    let results: Mutex<Vec<Option<Execution>>> =
        Mutex::new((0..jobs.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let workers = workers.clamp(1, jobs.len().max(1));
    thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(f, p)) = jobs.get(k) else { break };
                let execution = execute(&parsers[p], &files[f]);
                results.lock().expect("no poisoned workers")[k] = Some(execution);
            });
        }
    });
    let results = results.into_inner().expect("no poisoned workers");

    let mut rows: Vec<MatrixRow> = files
        .iter()
        .map(|path| MatrixRow {
            file: path.display().to_string(),
            pattern: universe.empty_pattern(),
        })
        .collect();
    let mut failures = Vec::new();
    for (&(f, p), execution) in jobs.iter().zip(results) {
        let execution = execution.expect("every job ran");
        let parser = &parsers[p];
        let pattern = &mut rows[f].pattern;
        for (j, re) in &parser.regex_rules {
            if re.is_match(&execution.output) {
                pattern.insert(*j);
            }
        }
        if execution.outcome.is_error() {
            for &j in &parser.exit_rules {
                pattern.insert(j);
            }
        }
        let reason = match &execution.outcome {
            ExecutionOutcome::TimedOut => Some("timed out".to_owned()),
            ExecutionOutcome::Signaled => Some("killed by signal".to_owned()),
            ExecutionOutcome::Failed(e) => Some(e.clone()),
            ExecutionOutcome::Exited(_) => None,
        };
        if let Some(reason) = reason {
            failures.push(json!({
                "file": rows[f].file,
                "parser": parser.name,
                "reason": reason,
            }));
        }
    }

    let mut provenance = Provenance::default();
    provenance.insert("config_digest", config.digest());
    provenance.insert(
        "timestamp",
        humantime::format_rfc3339_seconds(SystemTime::now()).to_string(),
    );
    if !failures.is_empty() {
        provenance.insert("execution_failures", failures);
    }
    FileMessageMatrix::new(universe, rows, provenance)
}

fn execute(parser: &ResolvedParser, file: &Path) -> Execution {
    let file_arg = file.display().to_string();
    let args: Vec<String> = parser
        .args
        .iter()
        .map(|a| a.replace(FILE_PLACEHOLDER, &file_arg))
        .collect();
    let mut command = Command::new(&parser.program);
    command
        .args(&args)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped());
    #[cfg(unix)]
    {
        use std::os::unix::process::CommandExt;
        // Own process group, so a timeout can take down helpers the parser spawned.
        command.process_group(0);
    }
    let mut child = match command.spawn() {
        Ok(child) => child,
        Err(e) => {
            return Execution {
                outcome: ExecutionOutcome::Failed(format!("spawn failed: {e}")),
                output: String::new(),
            }
        }
    };

    let stdout = child.stdout.take().map(drain);
    let stderr = child.stderr.take().map(drain);
    let outcome = match child.wait_timeout(parser.timeout) {
        Ok(Some(status)) => status_outcome(status),
        Ok(None) => {
            kill_tree(&mut child);
            ExecutionOutcome::TimedOut
        }
        Err(e) => {
            kill_tree(&mut child);
            ExecutionOutcome::Failed(format!("wait failed: {e}"))
        }
    };
    let collect =
        |h: Option<thread::JoinHandle<Vec<u8>>>| h.and_then(|h| h.join().ok()).unwrap_or_default();
    let mut output = String::from_utf8_lossy(&collect(stdout)).into_owned();
    let err = collect(stderr);
    if !output.is_empty() && !output.ends_with('\n') && !err.is_empty() {
        output.push('\n');
    }
    output.push_str(&String::from_utf8_lossy(&err));
    Execution { outcome, output }
}

fn drain<R: Read + Send + 'static>(mut reader: R) -> thread::JoinHandle<Vec<u8>> {
    thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = reader.read_to_end(&mut buf);
        buf
    })
}

fn status_outcome(status: std::process::ExitStatus) -> ExecutionOutcome {
    match status.code() {
        Some(code) => ExecutionOutcome::Exited(code),
        None => ExecutionOutcome::Signaled,
    }
}

fn kill_tree(child: &mut std::process::Child) {
    #[cfg(unix)]
    {
        // SAFETY: plain syscall on the process group we created for the child.
        unsafe {
            libc::kill(-(child.id() as libc::pid_t), libc::SIGKILL);
        }
    }
    let _ = child.kill();
    let _ = child.wait_timeout(Duration::from_secs(5));
}
