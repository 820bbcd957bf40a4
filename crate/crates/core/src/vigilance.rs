//! Sleepiness decision over time: fuses the two eye states per frame, keeps
//! the running closed duration and PERCLOS, and raises or releases the alarm.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::classify::EyeState;
use crate::error::{Error, Result};

/// Slack for comparing accumulated durations against thresholds.
const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VigilanceConfig {
    /// Seconds of continuous closure before the alarm is raised.
    pub alarm_after: f64,
    /// Seconds of continuous openness before an active alarm is released.
    pub release_after: f64,
    pub perclos_window: f64,
    /// Duration credited to the very first frame, which has no predecessor.
    pub frame_period_hint: Option<f64>,
}

impl Default for VigilanceConfig {
    fn default() -> Self {
        VigilanceConfig {
            alarm_after: 1.5,
            release_after: 0.5,
            perclos_window: 30.0,
            frame_period_hint: None,
        }
    }
}

impl VigilanceConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.alarm_after) || !ok(self.release_after) || !ok(self.perclos_window) {
            return Err(Error::Config(
                "alarm_after, release_after and perclos_window must be positive".into(),
            ));
        }
        if let Some(h) = self.frame_period_hint {
            if !(h.is_finite() && h >= 0.0) {
                return Err(Error::Config(format!("bad frame_period_hint {h}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fused {
    Closed,
    Open,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlarmEvent {
    Raised,
    Released,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameEyeObservation {
    pub left: Option<EyeState>,
    pub right: Option<EyeState>,
    pub timestamp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrameVerdict {
    pub fused: Fused,
    pub closed_run: f64,
    pub perclos: f64,
    pub alarm: bool,
    pub alarm_event: AlarmEvent,
}

/// Closed only when every visible eye is closed; one visible eye decides alone.
pub fn fuse(left: Option<EyeState>, right: Option<EyeState>) -> Fused {
    match (left, right) {
        (None, None) => Fused::Unknown,
        (Some(s), None) | (None, Some(s)) => s.into(),
        (Some(EyeState::Closed), Some(EyeState::Closed)) => Fused::Closed,
        _ => Fused::Open,
    }
}

impl From<EyeState> for Fused {
    fn from(s: EyeState) -> Fused {
        match s {
            EyeState::Closed => Fused::Closed,
            EyeState::Open => Fused::Open,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    t: f64,
    dt: f64,
    fused: Fused,
}

#[derive(Debug, Clone)]
pub struct VigilanceState {
    config: VigilanceConfig,
    history: VecDeque<Entry>,
    last_t: Option<f64>,
    closed_run: f64,
    closed_run_start: Option<f64>,
    open_run: f64,
    unknown_run: f64,
    alarm_active: bool,
}

impl VigilanceState {
    pub fn new(config: VigilanceConfig) -> Result<Self> {
        config.validate()?;
        Ok(VigilanceState {
            config,
            history: VecDeque::new(),
            last_t: None,
            closed_run: 0.0,
            closed_run_start: None,
            open_run: 0.0,
            unknown_run: 0.0,
            alarm_active: false,
        })
    }

    pub fn config(&self) -> &VigilanceConfig {
        &self.config
    }

    pub fn alarm_active(&self) -> bool {
        self.alarm_active
    }

    /// Start of the current closed run (its first frame's interval start).
    pub fn closed_run_start(&self) -> Option<f64> {
        self.closed_run_start
    }

    /// Each frame is credited with the interval since the previous frame.
    /// Unknown frames freeze both runs; a closed run that sits frozen for
    /// `release_after` is dropped.
    pub fn update(&mut self, obs: &FrameEyeObservation) -> Result<FrameVerdict> {
        let t = obs.timestamp;
        if !t.is_finite() {
            return Err(Error::Domain(format!("non-finite timestamp {t}")));
        }
        let dt = match self.last_t {
            Some(prev) if t <= prev => return Err(Error::Sequencing { previous: prev, current: t }),
            Some(prev) => t - prev,
            None => self.config.frame_period_hint.unwrap_or(0.0),
        };
        self.last_t = Some(t);
        let fused = fuse(obs.left, obs.right);
        let mut event = AlarmEvent::None;

        match fused {
            Fused::Closed => {
                if self.closed_run_start.is_none() {
                    self.closed_run_start = Some(t - dt);
                }
                self.closed_run += dt;
                self.open_run = 0.0;
                self.unknown_run = 0.0;
                if !self.alarm_active && self.closed_run + TIME_EPS >= self.config.alarm_after {
                    self.alarm_active = true;
                    event = AlarmEvent::Raised;
                }
            }
            Fused::Open => {
                self.closed_run = 0.0;
                self.closed_run_start = None;
                self.unknown_run = 0.0;
                self.open_run += dt;
                if self.alarm_active && self.open_run + TIME_EPS >= self.config.release_after {
                    self.alarm_active = false;
                    event = AlarmEvent::Released;
                }
            }
            Fused::Unknown => {
                self.unknown_run += dt;
                if self.closed_run_start.is_some() && self.unknown_run + TIME_EPS >= self.config.release_after {
                    self.closed_run = 0.0;
                    self.closed_run_start = None;
                }
            }
        }

        self.history.push_back(Entry { t, dt, fused });
        let horizon = t - self.config.perclos_window;
        while self.history.front().is_some_and(|e| e.t <= horizon) {
            self.history.pop_front();
        }

        Ok(FrameVerdict {
            fused,
            closed_run: if fused == Fused::Closed { self.closed_run } else { 0.0 },
            perclos: self.perclos(),
            alarm: self.alarm_active,
            alarm_event: event,
        })
    }

    /// Closed fraction of known time in the trailing window; falls back to
    /// frame counts while no interval has been measured yet.
    pub fn perclos(&self) -> f64 {
        let (mut closed, mut known, mut closed_n, mut known_n) = (0.0, 0.0, 0usize, 0usize);
        for e in &self.history {
            match e.fused {
                Fused::Closed => {
                    closed += e.dt;
                    known += e.dt;
                    closed_n += 1;
                    known_n += 1;
                }
                Fused::Open => {
                    known += e.dt;
                    known_n += 1;
                }
                Fused::Unknown => {}
            }
        }
        if known > 0.0 {
            (closed / known).clamp(0.0, 1.0)
        } else if known_n > 0 {
            closed_n as f64 / known_n as f64
        } else {
            0.0
        }
    }
}
