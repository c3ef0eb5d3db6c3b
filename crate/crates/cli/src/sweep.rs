//! Parameter sweeps: one run per value, in parallel, each in its own
//! subdirectory.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::config::{ExperimentConfig, RawConfig};
use crate::error::CliError;
use crate::experiment::{run_experiment, Experiment};

/// `PARAM=v1,v2,...` where `PARAM` is `section.key` or a top-level key.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SweepSpec {
    pub param: String,
    pub values: Vec<String>,
}

impl FromStr for SweepSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (param, values) = s
            .split_once('=')
            .ok_or_else(|| format!("expected PARAM=v1,v2,..., got `{s}`"))?;
        let values: Vec<String> = values
            .split(',')
            .map(|v| v.trim().to_string())
            .filter(|v| !v.is_empty())
            .collect();
        if param.trim().is_empty() || values.is_empty() {
            return Err(format!("expected PARAM=v1,v2,..., got `{s}`"));
        }
        Ok(Self {
            param: param.trim().to_string(),
            values,
        })
    }
}

/// One finished member of a sweep.
#[derive(Debug)]
pub struct SweepRun {
    pub value: String,
    pub directory: PathBuf,
    pub result: Result<Experiment, CliError>,
}

/// Builds every configuration first, so a bad value fails before any run
/// starts, then runs them on scoped worker threads.
pub fn run_sweep(
    raw: &RawConfig,
    base_dir: Option<&Path>,
    sweep: &SweepSpec,
    out: &Path,
) -> Result<Vec<SweepRun>, CliError> {
    let mut jobs: Vec<(String, PathBuf, ExperimentConfig)> = Vec::new();
    for v in &sweep.values {
        let mut r = raw.clone();
        r.set(&sweep.param, v)?;
        let cfg = r.build(base_dir)?;
        jobs.push((v.clone(), out.join(format!("{}={v}", sweep.param)), cfg));
    }
    let runs = std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|(v, dir, cfg)| {
                scope.spawn(move || SweepRun {
                    value: v.clone(),
                    directory: dir.clone(),
                    result: run_experiment(cfg, dir),
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });
    Ok(runs)
}
