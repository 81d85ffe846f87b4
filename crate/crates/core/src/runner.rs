//! Child-process execution of Python snippets against test-case input.
//!
//! Each run feeds one test case on standard input, captures both output
//! streams, and records wall time plus peak resident set size. The reaping
//! path goes through `wait4` directly because the standard library discards
//! resource usage.

use std::collections::{HashMap, VecDeque};
use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::sync::Mutex;
use std::time::{Duration, Instant};

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub stdout: String,
    pub stderr: String,
    pub exit_ok: bool,
    pub timed_out: bool,
    pub wall_time: f64,
    pub max_rss_kib: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RunnerError {
    /// The interpreter cannot be launched at all. Distinct from a failing
    /// run: callers treat this as an environment problem, not a verdict.
    #[error("interpreter `{0}` is not available")]
    Unavailable(String),
    #[error("run failed: {0}")]
    Io(String),
}

pub trait CaseRunner: Sync {
    fn run(&self, source: &str, stdin: &str, timeout: Duration)
        -> Result<RunOutcome, RunnerError>;
}

pub struct ProcessRunner {
    pub interpreter: String,
}

impl Default for ProcessRunner {
    fn default() -> Self {
        ProcessRunner {
            interpreter: "python3".to_string(),
        }
    }
}

impl CaseRunner for ProcessRunner {
    fn run(
        &self,
        source: &str,
        stdin: &str,
        timeout: Duration,
    ) -> Result<RunOutcome, RunnerError> {
        let mut script = tempfile::Builder::new()
            .prefix("case-")
            .suffix(".py")
            .tempfile()
            .map_err(|e| RunnerError::Io(format!("temp file: {e}")))?;
        script
            .write_all(source.as_bytes())
            .map_err(|e| RunnerError::Io(format!("temp file: {e}")))?;
        script
            .flush()
            .map_err(|e| RunnerError::Io(format!("temp file: {e}")))?;

        let start = Instant::now();
        let mut child = Command::new(&self.interpreter)
            .arg(script.path())
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| {
                if e.kind() == std::io::ErrorKind::NotFound {
                    RunnerError::Unavailable(self.interpreter.clone())
                } else {
                    RunnerError::Io(format!("spawn: {e}"))
                }
            })?;

        let mut stdin_pipe = child.stdin.take().expect("stdin piped");
        let input = stdin.as_bytes().to_vec();
        let feeder = std::thread::spawn(move || {
            // The child may exit without draining its input; that is its
            // business, not an error here.
            let _ = stdin_pipe.write_all(&input);
        });
        let mut stdout_pipe = child.stdout.take().expect("stdout piped");
        let collector = std::thread::spawn(move || {
            let mut buf = Vec::new();
            let _ = stdout_pipe.read_to_end(&mut buf);
            buf
        });
        let mut stderr_pipe = child.stderr.take().expect("stderr piped");
        let err_collector = std::thread::spawn(move || {
            let mut buf = Vec::new();
            let _ = stderr_pipe.read_to_end(&mut buf);
            buf
        });

        let pid = child.id() as libc::pid_t;
        let mut status: libc::c_int = 0;
        let mut usage: libc::rusage = unsafe { std::mem::zeroed() };
        let mut timed_out = false;
        loop {
            let reaped = unsafe { libc::wait4(pid, &mut status, libc::WNOHANG, &mut usage) };
            if reaped == pid {
                break;
            }
            if reaped == -1 {
                return Err(RunnerError::Io("wait4 failed".to_string()));
            }
            if start.elapsed() >= timeout {
                timed_out = true;
                unsafe {
                    libc::kill(pid, libc::SIGKILL);
                    libc::wait4(pid, &mut status, 0, &mut usage);
                }
                break;
            }
            std::thread::sleep(Duration::from_millis(1));
        }
        let wall_time = start.elapsed().as_secs_f64();

        let _ = feeder.join();
        let stdout = collector.join().unwrap_or_default();
        let stderr = err_collector.join().unwrap_or_default();
        let exited_clean = libc::WIFEXITED(status) && libc::WEXITSTATUS(status) == 0;
        Ok(RunOutcome {
            stdout: String::from_utf8_lossy(&stdout).into_owned(),
            stderr: String::from_utf8_lossy(&stderr).into_owned(),
            exit_ok: !timed_out && exited_clean,
            timed_out,
            wall_time,
            // ru_maxrss is KiB on Linux.
            max_rss_kib: usage.ru_maxrss.max(0) as u64,
        })
    }
}

enum Script {
    Sequence(Mutex<VecDeque<Result<RunOutcome, RunnerError>>>),
    /// Outcomes keyed by (source, stdin), so call order does not matter.
    Keyed(HashMap<(String, String), RunOutcome>),
}

/// Replays prepared outcomes instead of launching processes.
pub struct ScriptedRunner {
    script: Script,
    pub calls: Mutex<Vec<(String, String)>>,
}

impl ScriptedRunner {
    pub fn sequence(outcomes: Vec<Result<RunOutcome, RunnerError>>) -> Self {
        ScriptedRunner {
            script: Script::Sequence(Mutex::new(outcomes.into())),
            calls: Mutex::new(Vec::new()),
        }
    }

    pub fn keyed(map: HashMap<(String, String), RunOutcome>) -> Self {
        ScriptedRunner {
            script: Script::Keyed(map),
            calls: Mutex::new(Vec::new()),
        }
    }

    /// Every run succeeds instantly and echoes its input.
    pub fn echoing() -> Self {
        ScriptedRunner {
            script: Script::Keyed(HashMap::new()),
            calls: Mutex::new(Vec::new()),
        }
    }
}

pub fn ok_outcome(stdout: &str, wall_time: f64) -> RunOutcome {
    RunOutcome {
        stdout: stdout.to_string(),
        stderr: String::new(),
        exit_ok: true,
        timed_out: false,
        wall_time,
        max_rss_kib: 1024,
    }
}

impl CaseRunner for ScriptedRunner {
    fn run(
        &self,
        source: &str,
        stdin: &str,
        _timeout: Duration,
    ) -> Result<RunOutcome, RunnerError> {
        self.calls
            .lock()
            .unwrap()
            .push((source.to_string(), stdin.to_string()));
        match &self.script {
            Script::Sequence(queue) => queue
                .lock()
                .unwrap()
                .pop_front()
                .unwrap_or_else(|| Err(RunnerError::Io("script exhausted".to_string()))),
            Script::Keyed(map) => match map.get(&(source.to_string(), stdin.to_string())) {
                Some(outcome) => Ok(outcome.clone()),
                None if map.is_empty() => Ok(ok_outcome(stdin, 0.001)),
                None => Err(RunnerError::Io(format!(
                    "no scripted outcome for input {stdin:?}"
                ))),
            },
        }
    }
}
