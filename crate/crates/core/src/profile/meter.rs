//! Energy meter backends.
//!
//! A session brackets one measured run: `begin_session` marks the start,
//! `end_session` returns the joules consumed since. The system and file
//! backends read cumulative hardware counters, so a session is two reads and
//! a subtraction; the mock replays configured values and keeps a timeline so
//! tests can assert protocol properties.

use std::collections::VecDeque;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SessionToken(u64);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MeterError {
    #[error("meter unavailable: {0}")]
    Unavailable(String),
    #[error("meter protocol: {0}")]
    Protocol(String),
    #[error("meter read failed: {0}")]
    Read(String),
}

pub trait EnergyMeter {
    fn begin_session(&mut self) -> Result<SessionToken, MeterError>;
    /// Joules consumed since the matching `begin_session`.
    fn end_session(&mut self, token: SessionToken) -> Result<f64, MeterError>;
}

/// Shared bookkeeping: one open session at a time, tokens must match.
#[derive(Debug, Default)]
struct SessionState {
    next_token: u64,
    open: Option<(SessionToken, f64)>,
}

impl SessionState {
    fn begin(&mut self, reading: f64) -> Result<SessionToken, MeterError> {
        if self.open.is_some() {
            return Err(MeterError::Protocol(
                "a session is already open".to_string(),
            ));
        }
        let token = SessionToken(self.next_token);
        self.next_token += 1;
        self.open = Some((token, reading));
        Ok(token)
    }

    fn end(&mut self, token: SessionToken, reading: f64) -> Result<f64, MeterError> {
        match self.open {
            Some((open_token, start)) if open_token == token => {
                self.open = None;
                // Cumulative counters can wrap between reads; a negative
                // delta is clamped rather than reported as negative energy.
                Ok((reading - start).max(0.0))
            }
            Some(_) => Err(MeterError::Protocol("token does not match".to_string())),
            None => Err(MeterError::Protocol("no session is open".to_string())),
        }
    }
}

/// Wraps an external command that prints the current cumulative energy
/// counter; a capture group in `pattern` extracts the number.
pub struct SystemMeter {
    command: String,
    args: Vec<String>,
    pattern: regex::Regex,
    scale: f64,
    state: SessionState,
}

impl SystemMeter {
    pub fn new(
        command: impl Into<String>,
        args: Vec<String>,
        pattern: &str,
        scale: f64,
    ) -> Result<Self, MeterError> {
        let pattern = regex::Regex::new(pattern)
            .map_err(|e| MeterError::Protocol(format!("bad pattern: {e}")))?;
        Ok(SystemMeter {
            command: command.into(),
            args,
            pattern,
            scale,
            state: SessionState::default(),
        })
    }

    fn read_counter(&self) -> Result<f64, MeterError> {
        let output = std::process::Command::new(&self.command)
            .args(&self.args)
            .output()
            .map_err(|e| MeterError::Unavailable(format!("{}: {e}", self.command)))?;
        if !output.status.success() {
            return Err(MeterError::Read(format!(
                "{} exited with {}",
                self.command, output.status
            )));
        }
        let text = String::from_utf8_lossy(&output.stdout);
        let captured = self
            .pattern
            .captures(&text)
            .and_then(|c| c.get(1))
            .ok_or_else(|| MeterError::Read("pattern matched nothing".to_string()))?;
        captured
            .as_str()
            .parse::<f64>()
            .map_err(|e| MeterError::Read(format!("not a number: {e}")))
    }
}

impl EnergyMeter for SystemMeter {
    fn begin_session(&mut self) -> Result<SessionToken, MeterError> {
        let reading = self.read_counter()?;
        self.state.begin(reading)
    }

    fn end_session(&mut self, token: SessionToken) -> Result<f64, MeterError> {
        let reading = self.read_counter()?;
        Ok(self.state.end(token, reading)? * self.scale)
    }
}

/// Reads cumulative counter files (one per power domain) and sums them.
pub struct FileMeter {
    paths: Vec<PathBuf>,
    scale: f64,
    state: SessionState,
}

impl FileMeter {
    pub fn new(paths: Vec<PathBuf>, scale: f64) -> Self {
        FileMeter {
            paths,
            scale,
            state: SessionState::default(),
        }
    }

    fn read_counters(&self) -> Result<f64, MeterError> {
        let mut total = 0.0;
        for path in &self.paths {
            let text = std::fs::read_to_string(path)
                .map_err(|e| MeterError::Unavailable(format!("{}: {e}", path.display())))?;
            total += text
                .trim()
                .parse::<f64>()
                .map_err(|e| MeterError::Read(format!("{}: {e}", path.display())))?;
        }
        Ok(total)
    }
}

impl EnergyMeter for FileMeter {
    fn begin_session(&mut self) -> Result<SessionToken, MeterError> {
        let reading = self.read_counters()?;
        self.state.begin(reading)
    }

    fn end_session(&mut self, token: SessionToken) -> Result<f64, MeterError> {
        let reading = self.read_counters()?;
        Ok(self.state.end(token, reading)? * self.scale)
    }
}

/// Test meter: replays a configured joule value per session and records the
/// session timeline on a logical clock.
pub struct MockMeter {
    readings: VecDeque<f64>,
    available: bool,
    clock: u64,
    open: Option<(SessionToken, u64)>,
    next_token: u64,
    completed: Vec<(u64, u64)>,
}

impl MockMeter {
    pub fn with_readings(readings: Vec<f64>) -> Self {
        MockMeter {
            readings: readings.into(),
            available: true,
            clock: 0,
            open: None,
            next_token: 0,
            completed: Vec::new(),
        }
    }

    pub fn unavailable() -> Self {
        let mut meter = MockMeter::with_readings(Vec::new());
        meter.available = false;
        meter
    }

    /// (begin tick, end tick) for each completed session, in completion
    /// order. Ticks come from a logical clock advanced by every event.
    pub fn timeline(&self) -> &[(u64, u64)] {
        &self.completed
    }

    pub fn sessions_completed(&self) -> usize {
        self.completed.len()
    }
}

impl EnergyMeter for MockMeter {
    fn begin_session(&mut self) -> Result<SessionToken, MeterError> {
        if !self.available {
            return Err(MeterError::Unavailable("mock is configured off".to_string()));
        }
        if self.open.is_some() {
            return Err(MeterError::Protocol(
                "a session is already open".to_string(),
            ));
        }
        let token = SessionToken(self.next_token);
        self.next_token += 1;
        let tick = self.clock;
        self.clock += 1;
        self.open = Some((token, tick));
        Ok(token)
    }

    fn end_session(&mut self, token: SessionToken) -> Result<f64, MeterError> {
        match self.open {
            Some((open_token, begin_tick)) if open_token == token => {
                self.open = None;
                let tick = self.clock;
                self.clock += 1;
                self.completed.push((begin_tick, tick));
                self.readings.pop_front().ok_or_else(|| {
                    MeterError::Protocol("mock readings exhausted".to_string())
                })
            }
            Some(_) => Err(MeterError::Protocol("token does not match".to_string())),
            None => Err(MeterError::Protocol("no session is open".to_string())),
        }
    }
}
