//! Exact and inferred memory analysis for stationary stochastic processes.
//!
//! The crate works with unifilar edge-emitting hidden Markov models
//! (ε-machines): each causal state σ_j carries emission probabilities
//! P(x|j) and a deterministic update λ(x, j), so the model's internal state
//! is a function of the observed past. Two memory figures are computed
//! exactly from a machine:
//!
//! * the statistical complexity C_μ = H(π), the Shannon entropy of the
//!   stationary causal-state distribution — the memory cost of the minimal
//!   classical predictive model;
//! * the quantum statistical memory C_q = S(ρ), the von Neumann entropy of
//!   ρ = Σ_j π_j |σ_j⟩⟨σ_j|, where the quantum memory states |σ_j⟩ have
//!   pairwise overlaps fixed by the machine's transition structure.
//!
//! The same quantities can be estimated blindly from a finite symbol
//! time-series without reconstructing any machine: length-L words act as
//! surrogate memory states, their Gram matrix is assembled from chained
//! empirical conditionals, and its spectrum yields C̃_q together with an
//! effective Markov order read off a trace-distance statistic. The
//! [`perturb`] module quantifies how both pipelines respond to probability
//! noise (first-order Gram perturbations, Weyl eigenvalue bounds, and
//! sample-size error scaling).
//!
//! All randomized entry points take explicit seeds and are deterministic
//! across runs and platforms.

pub mod alphabet;
pub mod inference;
pub mod machine;
pub mod perturb;
pub mod quantum;
pub mod report;
pub mod rng;
pub mod words;
pub mod zoo;

pub use alphabet::Alphabet;
pub use inference::{estimate_cq, InferredModel, SweepConfig, SweepRow};
pub use machine::{Machine, MachineDefinition, SymbolSequence};
pub use perturb::{PerturbationSpec, ScalingReport, WeylReport};
pub use quantum::{GramMatrix, OverlapMatrix, SpectralReport, UnitaryModel};
pub use words::{ConditionalTable, EmoProfile, WordDistribution, WordProbs};
