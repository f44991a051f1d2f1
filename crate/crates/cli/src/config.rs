//! Run configuration: one UTF-8 JSON file per run with every input pinned
//! (including the seed — there is no implicit entropy source), plus a small
//! set of command-line overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use statmem_core::machine::Machine;
use statmem_core::zoo;

use crate::error::CliError;

/// Named process with parameter map, e.g. `{"name": "nemo",
/// "params": {"p": 0.1, "q": 0.9}}`.
#[derive(Debug, Clone, Deserialize)]
pub struct ProcessSpec {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

impl ProcessSpec {
    pub fn build(&self) -> Result<Machine, CliError> {
        Ok(zoo::build(&self.name, &self.params)?)
    }

    /// Compact `k=v` list for report columns.
    pub fn params_label(&self) -> String {
        self.params
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Options consumed only by the `perturb` subcommand.
#[derive(Debug, Clone, Deserialize)]
pub struct PerturbOptions {
    /// `weyl` (eigenvalue-shift bounds on one random ΔP) or `scaling`
    /// (error vs N experiment).
    pub mode: String,
    /// Word length for the Weyl analysis (the joint uses 2L-words).
    #[serde(default = "default_perturb_l")]
    pub l: usize,
    /// ε grid for the Weyl analysis.
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
}

fn default_perturb_l() -> usize {
    3
}

fn default_epsilons() -> Vec<f64> {
    vec![1e-5, 1e-4, 1e-3]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Zoo process to build; optional when a sequence file is supplied.
    pub process: Option<ProcessSpec>,
    /// Path to an existing single-line symbol file; optional when the
    /// process is sampled directly.
    pub sequence: Option<PathBuf>,
    /// Symbols of the sequence file's alphabet (defaults to binary `01`).
    #[serde(default = "default_alphabet")]
    pub alphabet: String,
    #[serde(default)]
    pub l_values: Vec<usize>,
    #[serde(default)]
    pub n_values: Vec<u64>,
    /// Threshold for the effective-Markov-order readout.
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_r_max")]
    pub r_max: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Base seed; required so that every run is reproducible.
    pub seed: u64,
    /// Output path; report formats follow the extension (`.json` vs CSV).
    pub out: Option<PathBuf>,
    pub perturb: Option<PerturbOptions>,
}

fn default_alphabet() -> String {
    "01".into()
}

fn default_delta() -> f64 {
    0.01
}

fn default_r_max() -> usize {
    8
}

fn default_trials() -> usize {
    1
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        let config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        if config.delta <= 0.0 {
            return Err(CliError::config(format!(
                "delta must be positive, got {}",
                config.delta
            )));
        }
        if config.trials == 0 {
            return Err(CliError::config("trials must be at least 1"));
        }
        Ok(config)
    }

    pub fn require_process(&self) -> Result<&ProcessSpec, CliError> {
        self.process
            .as_ref()
            .ok_or_else(|| CliError::config("this command needs a \"process\" entry"))
    }

    pub fn require_l_values(&self) -> Result<&[usize], CliError> {
        if self.l_values.is_empty() {
            return Err(CliError::config("\"l_values\" must be a nonempty grid"));
        }
        Ok(&self.l_values)
    }

    pub fn require_n_values(&self) -> Result<&[u64], CliError> {
        if self.n_values.is_empty() {
            return Err(CliError::config("\"n_values\" must be a nonempty grid"));
        }
        Ok(&self.n_values)
    }

    /// The single N used by commands that sample one sequence.
    pub fn single_n(&self) -> Result<u64, CliError> {
        match self.n_values.as_slice() {
            [n] => Ok(*n),
            [] => Err(CliError::config(
                "\"n_values\" must hold exactly one length",
            )),
            more => Err(CliError::config(format!(
                "\"n_values\" must hold exactly one length, got {}",
                more.len()
            ))),
        }
    }
}
