//! Built-in process zoo.
//!
//! Named constructors for the benchmark processes used throughout the test
//! and experiment suites, plus a seeded random-machine generator. All
//! constructors go through full validation, so a bad parameter surfaces as
//! the underlying [`MachineError`].

use std::collections::BTreeMap;

use rand::Rng;
use thiserror::Error;

use crate::machine::{Machine, MachineDefinition, MachineError};
use crate::rng::substream_rng;

#[derive(Debug, Error)]
pub enum ZooError {
    #[error("unknown process {0:?}")]
    UnknownProcess(String),
    #[error("process {process:?} requires parameter {param:?}")]
    MissingParameter { process: String, param: String },
    #[error(transparent)]
    Machine(#[from] MachineError),
}

/// Builds a zoo process by name with named parameters.
///
/// Names: `fair-coin` (no parameters), `perturbed-coin` (`q0`, `q1`),
/// `golden-mean-3-2` (`p`), `nemo` (`p`, `q`).
pub fn build(name: &str, params: &BTreeMap<String, f64>) -> Result<Machine, ZooError> {
    let get = |param: &str| {
        params
            .get(param)
            .copied()
            .ok_or_else(|| ZooError::MissingParameter {
                process: name.to_string(),
                param: param.to_string(),
            })
    };
    match name {
        "fair-coin" => Ok(fair_coin()?),
        "perturbed-coin" => Ok(perturbed_coin(get("q0")?, get("q1")?)?),
        "golden-mean-3-2" => Ok(golden_mean_3_2(get("p")?)?),
        "nemo" => Ok(nemo(get("p")?, get("q")?)?),
        other => Err(ZooError::UnknownProcess(other.to_string())),
    }
}

/// Unbiased memoryless binary source; one causal state.
pub fn fair_coin() -> Result<Machine, MachineError> {
    Machine::new(MachineDefinition {
        name: "fair-coin".into(),
        alphabet: vec!['0', '1'],
        states: vec!["A".into()],
        edges: vec![
            ("A".into(), '0', "A".into(), 0.5),
            ("A".into(), '1', "A".into(), 0.5),
        ],
    })
}

/// Two-state noisy-persistence process: state s emits its own label and
/// flips with probability q_s. π = (q1, q0)/(q0 + q1);
/// C_μ = log₂(q0 + q1) − (q0·log₂q0 + q1·log₂q1)/(q0 + q1).
pub fn perturbed_coin(q0: f64, q1: f64) -> Result<Machine, MachineError> {
    Machine::new(MachineDefinition {
        name: "perturbed-coin".into(),
        alphabet: vec!['0', '1'],
        states: vec!["0".into(), "1".into()],
        edges: vec![
            ("0".into(), '0', "0".into(), 1.0 - q0),
            ("0".into(), '1', "1".into(), q0),
            ("1".into(), '0', "0".into(), q1),
            ("1".into(), '1', "1".into(), 1.0 - q1),
        ],
    })
}

/// Golden-mean variant emitting blocks `11000` (two 1s, three 0s): the free
/// state σ0 self-loops on `0` with probability p or starts a block with
/// `1`; the remaining four block positions are deterministic. Markov order
/// is exactly 3; π = (1, 1−p, 1−p, 1−p, 1−p)/(5 − 4p).
pub fn golden_mean_3_2(p: f64) -> Result<Machine, MachineError> {
    let s = |i: usize| format!("s{i}");
    Machine::new(MachineDefinition {
        name: "golden-mean-3-2".into(),
        alphabet: vec!['0', '1'],
        states: (0..5).map(s).collect(),
        edges: vec![
            (s(0), '0', s(0), p),
            (s(0), '1', s(1), 1.0 - p),
            (s(1), '1', s(2), 1.0),
            (s(2), '0', s(3), 1.0),
            (s(3), '0', s(4), 1.0),
            (s(4), '0', s(0), 1.0),
        ],
    })
}

/// Three-state process with infinite Markov order: A self-loops on `1` with
/// probability p, otherwise emits `00` through B and C, and C returns to A
/// emitting `1` (probability q) or `0`. π = (1, 1−p, 1−p)/(3 − 2p),
/// independent of q.
pub fn nemo(p: f64, q: f64) -> Result<Machine, MachineError> {
    Machine::new(MachineDefinition {
        name: "nemo".into(),
        alphabet: vec!['0', '1'],
        states: vec!["A".into(), "B".into(), "C".into()],
        edges: vec![
            ("A".into(), '1', "A".into(), p),
            ("A".into(), '0', "B".into(), 1.0 - p),
            ("B".into(), '0', "C".into(), 1.0),
            ("C".into(), '1', "A".into(), q),
            ("C".into(), '0', "A".into(), 1.0 - q),
        ],
    })
}

/// Draws a random strongly connected unifilar binary machine with at most
/// `max_states` states by rejection sampling. Deterministic in the seed;
/// every edge present gets a probability bounded away from 0 so validation
/// and the overlap fixed point stay well conditioned.
pub fn random_unifilar(max_states: usize, base_seed: u64, index: u64) -> Machine {
    let mut rng = substream_rng(base_seed, &[0x7a6f, index]);
    loop {
        let n = rng.gen_range(1..=max_states);
        let names: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
        let mut edges = Vec::new();
        for j in 0..n {
            // Mix pure (single-symbol) and branching states.
            let p0 = if rng.gen_bool(0.2) {
                if rng.gen_bool(0.5) {
                    1.0
                } else {
                    0.0
                }
            } else {
                rng.gen_range(0.05..0.95)
            };
            for (sym, p) in [('0', p0), ('1', 1.0 - p0)] {
                if p > 0.0 {
                    let to = rng.gen_range(0..n);
                    edges.push((names[j].clone(), sym, names[to].clone(), p));
                }
            }
        }
        let def = MachineDefinition {
            name: format!("random-{index}"),
            alphabet: vec!['0', '1'],
            states: names,
            edges,
        };
        if let Ok(m) = Machine::new(def) {
            return m;
        }
    }
}
