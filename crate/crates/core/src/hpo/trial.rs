use std::io::{BufRead, Write};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::space::{Config, SearchSpace};
use super::tpe::{tpe_suggest, TpeSettings};
use crate::error::{Error, Result};
use crate::numerics::{derive_seed, stream_of, Rng};

pub const TRIALS_FORMAT: &str = "mufide-trials-v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialStatus {
    Ok,
    Failed,
}

/// One evaluated configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub index: usize,
    pub config: Config,
    /// Mean validation MSE; absent for failed trials.
    pub objective: Option<f64>,
    pub status: TrialStatus,
    pub seed: u64,
    /// Seconds.
    pub wall_time: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Trial {
    pub fn is_ok(&self) -> bool {
        self.status == TrialStatus::Ok
    }

    /// Objective with failed trials mapped to `+∞`.
    pub fn score(&self) -> f64 {
        match (self.status, self.objective) {
            (TrialStatus::Ok, Some(v)) => v,
            _ => f64::INFINITY,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HpoSettings {
    pub budget: usize,
    pub tpe: TpeSettings,
    pub seed: u64,
}

impl Default for HpoSettings {
    fn default() -> Self {
        Self {
            budget: 60,
            tpe: TpeSettings::default(),
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct HpoOutcome {
    pub best: Trial,
    pub trials: Vec<Trial>,
}

/// Sequential suggest → evaluate loop. `objective` gets the configuration
/// and the trial seed; errors and non-finite values mark the trial failed.
pub fn optimize(
    space: &SearchSpace,
    mut objective: impl FnMut(&Config, u64) -> Result<f64>,
    settings: &HpoSettings,
) -> Result<HpoOutcome> {
    if settings.budget == 0 {
        return Err(Error::InvalidConfig("budget must be at least 1".into()));
    }
    space.validate()?;
    let mut rng = Rng::new(derive_seed(settings.seed, stream_of("tpe")));
    let mut trials: Vec<Trial> = Vec::with_capacity(settings.budget);
    for index in 0..settings.budget {
        let config = tpe_suggest(space, &trials, &settings.tpe, &mut rng);
        let seed = derive_seed(settings.seed, index as u64);
        let start = Instant::now();
        let result = objective(&config, seed);
        let wall_time = start.elapsed().as_secs_f64();
        let (objective_value, status, error) = match result {
            Ok(v) if v.is_finite() => (Some(v), TrialStatus::Ok, None),
            Ok(v) => (None, TrialStatus::Failed, Some(format!("objective {v}"))),
            Err(e) => (None, TrialStatus::Failed, Some(e.to_string())),
        };
        trials.push(Trial {
            index,
            config,
            objective: objective_value,
            status,
            seed,
            wall_time,
            error,
        });
    }
    let best = trials
        .iter()
        .filter(|t| t.is_ok())
        .min_by(|a, b| a.score().total_cmp(&b.score()).then(a.index.cmp(&b.index)))
        .cloned()
        .ok_or(Error::AllTrialsFailed(trials.len()))?;
    Ok(HpoOutcome { best, trials })
}

#[derive(Serialize, Deserialize)]
struct TrialLine {
    format: String,
    #[serde(flatten)]
    trial: Trial,
}

/// Writes one JSON object per trial.
pub fn write_trials(mut out: impl Write, trials: &[Trial]) -> Result<()> {
    for t in trials {
        let line = TrialLine {
            format: TRIALS_FORMAT.to_string(),
            trial: t.clone(),
        };
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_trials(input: impl BufRead) -> Result<Vec<Trial>> {
    let mut trials = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: TrialLine =
            serde_json::from_str(&line).map_err(|e| Error::Format(format!("line {}: {e}", i + 1)))?;
        if parsed.format != TRIALS_FORMAT {
            return Err(Error::Format(format!(
                "line {}: expected format `{TRIALS_FORMAT}`, found `{}`",
                i + 1,
                parsed.format
            )));
        }
        trials.push(parsed.trial);
    }
    Ok(trials)
}
