//! Unifilar edge-emitting hidden Markov models (ε-machines).
//!
//! A machine is a finite set of causal states with labelled edges
//! `(from, symbol, to, probability)`. Unifilarity means each `(state,
//! symbol)` pair has at most one outgoing edge, so the current state is the
//! deterministic image λ(x, j) of the previous state and emitted symbol.
//! Validation enforces per-state stochasticity, unifilarity, and a single
//! recurrent class; the stationary distribution π is solved at construction
//! time.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alphabet::{Alphabet, AlphabetError};
use crate::rng::seeded_rng;
use crate::words::WordProbs;
use rand::Rng;

/// Per-state outgoing probabilities must sum to 1 within this tolerance.
pub const STOCHASTIC_TOL: f64 = 1e-9;
/// Power-iteration successive-difference stop. Tighter than the documented
/// 1e-13 contract so slowly mixing chains still deliver π to ~1e-13.
const STATIONARY_TOL: f64 = 1e-15;
/// Residual ‖Tπ − π‖∞ accepted after the iteration stops.
const STATIONARY_RESIDUAL: f64 = 1e-12;
/// Iteration cap for the stationary solve.
const STATIONARY_MAX_ITERS: usize = 1_000_000;

#[derive(Debug, Error)]
pub enum MachineError {
    #[error("edge {from:?} --{symbol}--> {to:?} has probability {value} outside [0, 1]")]
    BadProbability {
        from: String,
        symbol: char,
        to: String,
        value: f64,
    },
    #[error("state {state:?} has more than one edge for symbol {symbol:?}")]
    NonUnifilar { state: String, symbol: char },
    #[error("outgoing probabilities of state {state:?} sum to {sum}, not 1")]
    NonStochastic { state: String, sum: f64 },
    #[error("machine is reducible: states do not form a single recurrent class")]
    Reducible,
    #[error("stationary distribution did not converge within {0} iterations")]
    NoConvergence(usize),
    #[error("edge references unknown state {0:?}")]
    UnknownState(String),
    #[error("machine has no states")]
    NoStates,
    #[error("duplicate state name {0:?}")]
    DuplicateState(String),
    #[error(transparent)]
    Alphabet(#[from] AlphabetError),
}

/// Serializable machine description.
///
/// JSON shape: `{"name": ..., "alphabet": ["0", "1"], "states": [...],
/// "edges": [["A", "0", "B", 0.5], ...]}` with edges as
/// `[from, symbol, to, probability]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MachineDefinition {
    pub name: String,
    pub alphabet: Vec<char>,
    pub states: Vec<String>,
    pub edges: Vec<(String, char, String, f64)>,
}

impl MachineDefinition {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("definition serializes")
    }
}

/// A validated machine with assembled transition structure and stationary
/// distribution.
#[derive(Debug, Clone)]
pub struct Machine {
    def: MachineDefinition,
    alphabet: Alphabet,
    /// emit[j][x] = P(x | j)
    emit: Vec<Vec<f64>>,
    /// next[j][x] = λ(x, j); None when the edge is absent or has zero weight
    next: Vec<Vec<Option<usize>>>,
    pi: Vec<f64>,
}

impl Machine {
    /// Validates a definition and assembles the machine (including π).
    pub fn new(def: MachineDefinition) -> Result<Self, MachineError> {
        let alphabet = Alphabet::new(def.alphabet.clone())?;
        let n = def.states.len();
        if n == 0 {
            return Err(MachineError::NoStates);
        }
        let mut state_index = BTreeMap::new();
        for (i, s) in def.states.iter().enumerate() {
            if state_index.insert(s.clone(), i).is_some() {
                return Err(MachineError::DuplicateState(s.clone()));
            }
        }

        let a = alphabet.len();
        let mut emit = vec![vec![0.0; a]; n];
        let mut next = vec![vec![None; a]; n];
        let mut seen = vec![vec![false; a]; n];
        for (from, symbol, to, p) in &def.edges {
            let j = *state_index
                .get(from)
                .ok_or_else(|| MachineError::UnknownState(from.clone()))?;
            let k = *state_index
                .get(to)
                .ok_or_else(|| MachineError::UnknownState(to.clone()))?;
            let x = alphabet.index_of(*symbol)? as usize;
            if !(0.0..=1.0).contains(p) || !p.is_finite() {
                return Err(MachineError::BadProbability {
                    from: from.clone(),
                    symbol: *symbol,
                    to: to.clone(),
                    value: *p,
                });
            }
            if seen[j][x] {
                return Err(MachineError::NonUnifilar {
                    state: from.clone(),
                    symbol: *symbol,
                });
            }
            seen[j][x] = true;
            emit[j][x] = *p;
            // Zero-probability edges are kept out of the reachability graph
            // and the sampler; they contribute nothing anywhere else.
            next[j][x] = if *p > 0.0 { Some(k) } else { None };
        }

        for (j, probs) in emit.iter().enumerate() {
            let sum: f64 = probs.iter().sum();
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(MachineError::NonStochastic {
                    state: def.states[j].clone(),
                    sum,
                });
            }
        }

        if !strongly_connected(&next, n) {
            return Err(MachineError::Reducible);
        }

        let pi = stationary(&emit, &next, n)?;
        Ok(Self {
            def,
            alphabet,
            emit,
            next,
            pi,
        })
    }

    pub fn definition(&self) -> &MachineDefinition {
        &self.def
    }

    pub fn name(&self) -> &str {
        &self.def.name
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn n_states(&self) -> usize {
        self.def.states.len()
    }

    pub fn state_names(&self) -> &[String] {
        &self.def.states
    }

    /// Stationary causal-state distribution π (Tπ = π, Σπ = 1).
    pub fn stationary(&self) -> &[f64] {
        &self.pi
    }

    /// P(x | j) for symbol index x.
    pub fn emission_prob(&self, state: usize, symbol: u8) -> f64 {
        self.emit[state][symbol as usize]
    }

    /// Emission distribution of a state over the alphabet.
    pub fn emission_probs(&self, state: usize) -> &[f64] {
        &self.emit[state]
    }

    /// λ(x, j): successor state, when the edge exists with positive weight.
    pub fn next_state(&self, state: usize, symbol: u8) -> Option<usize> {
        self.next[state][symbol as usize]
    }

    /// Full one-step transition operator T = Σ_x T^(x) as a dense
    /// column-stochastic matrix (row k, column j) = P(j → k).
    pub fn transition_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.n_states();
        let mut t = vec![vec![0.0; n]; n];
        for (j, (nexts, emits)) in self.next.iter().zip(&self.emit).enumerate() {
            for (next, &p) in nexts.iter().zip(emits) {
                if let Some(k) = *next {
                    t[k][j] += p;
                }
            }
        }
        t
    }

    /// Applies the symbol-resolved operator T^(x) to a state vector.
    pub fn apply_symbol(&self, v: &[f64], symbol: u8) -> Vec<f64> {
        let mut out = vec![0.0; self.n_states()];
        let x = symbol as usize;
        for (j, &vj) in v.iter().enumerate() {
            if vj != 0.0 {
                if let Some(k) = self.next[j][x] {
                    out[k] += self.emit[j][x] * vj;
                }
            }
        }
        out
    }

    /// Exact stationary probability of a word (symbol indices):
    /// P(w) = 1ᵀ T^(x_{ℓ−1}) ⋯ T^(x_0) π.
    pub fn word_probability(&self, word: &[u8]) -> f64 {
        let mut v = self.pi.clone();
        for &x in word {
            v = self.apply_symbol(&v, x);
        }
        v.iter().sum()
    }

    /// Exact distribution over all positive-probability words of length
    /// `len`, enumerated with pruning of impossible branches.
    pub fn word_distribution(&self, len: usize) -> Result<WordProbs, MachineError> {
        self.alphabet.word_space(len)?;
        let a = self.alphabet.len() as u64;
        let mut entries = BTreeMap::new();
        let mut stack = vec![(0usize, 0u64, self.pi.clone())];
        while let Some((depth, code, v)) = stack.pop() {
            if depth == len {
                entries.insert(code, v.iter().sum());
                continue;
            }
            for x in 0..self.alphabet.len() {
                let w = self.apply_symbol(&v, x as u8);
                if w.iter().sum::<f64>() > 0.0 {
                    stack.push((depth + 1, code * a + x as u64, w));
                }
            }
        }
        Ok(WordProbs::new(len, self.alphabet.clone(), entries))
    }

    /// States consistent with having just observed `word` from stationarity
    /// (the support of T^w π).
    pub fn states_consistent_with(&self, word: &[u8]) -> Vec<usize> {
        let mut v = self.pi.clone();
        for &x in word {
            v = self.apply_symbol(&v, x);
        }
        (0..self.n_states()).filter(|&j| v[j] > 0.0).collect()
    }

    /// The causal state a word synchronizes to, when unique.
    pub fn sync_state(&self, word: &[u8]) -> Option<usize> {
        let states = self.states_consistent_with(word);
        if states.len() == 1 {
            Some(states[0])
        } else {
            None
        }
    }

    /// Samples a stationary symbol sequence of length `n`. Deterministic in
    /// `seed`; the initial state is drawn from π.
    pub fn sample_sequence(&self, n: usize, seed: u64) -> SymbolSequence {
        let (symbols, _) = self.sample_with_states(n, seed);
        SymbolSequence {
            symbols,
            alphabet: self.alphabet.clone(),
            seed: Some(seed),
        }
    }

    /// Sampling with the visited state path exposed (initial state first,
    /// one state per emitted symbol thereafter).
    pub fn sample_with_states(&self, n: usize, seed: u64) -> (Vec<u8>, Vec<usize>) {
        let mut rng = seeded_rng(seed);
        let mut symbols = Vec::with_capacity(n);
        let mut states = Vec::with_capacity(n + 1);
        let mut state = draw_index(&mut rng, &self.pi);
        states.push(state);
        for _ in 0..n {
            let x = draw_index(&mut rng, &self.emit[state]);
            symbols.push(x as u8);
            state = self.next[state][x].expect("positive-probability edge exists");
            states.push(state);
        }
        (symbols, states)
    }
}

/// Draws an index from an unnormalized-free distribution (weights sum to 1
/// within STOCHASTIC_TOL). Zero-weight entries are never selected.
fn draw_index<R: Rng>(rng: &mut R, weights: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last_positive = None;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last_positive = Some(i);
            if u < acc {
                return i;
            }
        }
    }
    // Rounding pushed the cumulative sum below u; take the last valid entry.
    last_positive.expect("at least one positive weight")
}

fn strongly_connected(next: &[Vec<Option<usize>>], n: usize) -> bool {
    let mut fwd = vec![vec![]; n];
    let mut rev = vec![vec![]; n];
    for (j, row) in next.iter().enumerate() {
        for k in row.iter().flatten() {
            fwd[j].push(*k);
            rev[*k].push(j);
        }
    }
    let reach = |adj: &Vec<Vec<usize>>| {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(j) = stack.pop() {
            for &k in &adj[j] {
                if !seen[k] {
                    seen[k] = true;
                    stack.push(k);
                }
            }
        }
        seen.iter().all(|&s| s)
    };
    reach(&fwd) && reach(&rev)
}

/// Power iteration for Tπ = π on the lazy kernel (T + I)/2, which shares
/// T's stationary vector but is aperiodic, so periodic machines converge.
fn stationary(
    emit: &[Vec<f64>],
    next: &[Vec<Option<usize>>],
    n: usize,
) -> Result<Vec<f64>, MachineError> {
    let step = |v: &[f64]| {
        let mut w = vec![0.0; n];
        for j in 0..n {
            for (x, &target) in next[j].iter().enumerate() {
                if let Some(k) = target {
                    w[k] += emit[j][x] * v[j];
                }
            }
        }
        for k in 0..n {
            w[k] = 0.5 * (w[k] + v[k]);
        }
        let sum: f64 = w.iter().sum();
        for wk in &mut w {
            *wk /= sum;
        }
        w
    };

    let mut v = vec![1.0 / n as f64; n];
    let mut prev_diff = f64::INFINITY;
    let mut stalled = 0usize;
    let mut converged = false;
    for _ in 0..STATIONARY_MAX_ITERS {
        let w = step(&v);
        let diff = sup_diff(&w, &v);
        v = w;
        if diff <= STATIONARY_TOL {
            converged = true;
            break;
        }
        // Floating-point fixed points can oscillate by an ulp; accept once
        // progress stops at a residual already far below the contract.
        stalled = if diff >= prev_diff { stalled + 1 } else { 0 };
        prev_diff = diff;
        if stalled >= 64 && diff <= 1e-12 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(MachineError::NoConvergence(STATIONARY_MAX_ITERS));
    }

    // Check the fixed point against the full (non-lazy) operator.
    let mut t_v = vec![0.0; n];
    for j in 0..n {
        for (x, &target) in next[j].iter().enumerate() {
            if let Some(k) = target {
                t_v[k] += emit[j][x] * v[j];
            }
        }
    }
    if sup_diff(&t_v, &v) > STATIONARY_RESIDUAL {
        return Err(MachineError::NoConvergence(STATIONARY_MAX_ITERS));
    }
    Ok(v)
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// A finite symbol time-series over a fixed alphabet.
#[derive(Debug, Clone)]
pub struct SymbolSequence {
    symbols: Vec<u8>,
    alphabet: Alphabet,
    seed: Option<u64>,
}

impl SymbolSequence {
    pub fn new(symbols: Vec<u8>, alphabet: Alphabet) -> Self {
        Self {
            symbols,
            alphabet,
            seed: None,
        }
    }

    /// Parses a sequence from one line of symbol characters.
    pub fn from_text(text: &str, alphabet: Alphabet) -> Result<Self, AlphabetError> {
        let symbols = alphabet.parse(text.trim_end_matches(['\n', '\r']))?;
        Ok(Self {
            symbols,
            alphabet,
            seed: None,
        })
    }

    /// Renders the sequence as a single line of symbol characters.
    pub fn to_text(&self) -> String {
        self.symbols
            .iter()
            .map(|&s| self.alphabet.symbol(s))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    /// Seed used to generate the sequence, when it was sampled.
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }
}

// ---------------------------------------------------------------------------
