//! Word statistics over symbol sequences.
//!
//! Empirical quantities are built from counts over all N − ℓ + 1 linear
//! sliding windows (no smoothing, no pseudocounts): length-ℓ word
//! distributions, next-symbol conditional tables, the trace-distance
//! statistic behind the effective-Markov-order estimate, and the
//! data-driven guideline for the largest usable word length.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::alphabet::{Alphabet, AlphabetError};
use crate::machine::SymbolSequence;
use crate::report::g12;

/// Dense count tables are used while the code space stays at or below this
/// size; sparse maps otherwise.
const DENSE_COUNT_LIMIT: u64 = 1 << 22;

#[derive(Debug, Error)]
pub enum WordsError {
    #[error("cannot count words of length {len} in a sequence of {n} symbols")]
    WordTooLong { len: usize, n: usize },
    #[error("distributions have mismatched support ({0} vs {1} symbols)")]
    AlphabetMismatch(usize, usize),
    #[error("distribution sums to {0}, not 1")]
    BadDistribution(f64),
    #[error("no history pair at r = {r} has observed conditionals")]
    InsufficientData { r: usize },
    #[error("sequence of {n} symbols is too short (minimum {min})")]
    TooLittleData { n: usize, min: usize },
    #[error("threshold must be positive, got {0}")]
    BadThreshold(f64),
    #[error(transparent)]
    Alphabet(#[from] AlphabetError),
}

// ---------------------------------------------------------------------------
// count-valued word distributions

/// Empirical counts of all length-`len` words in a sequence.
#[derive(Debug, Clone)]
pub struct WordDistribution {
    len: usize,
    total: u64,
    alphabet: Alphabet,
    /// Sorted by word code; counts are strictly positive.
    entries: Vec<(u64, u64)>,
}

/// Counts every length-`len` sliding window of the sequence.
pub fn count_words(seq: &SymbolSequence, len: usize) -> Result<WordDistribution, WordsError> {
    let n = seq.len();
    if len == 0 || len > n {
        return Err(WordsError::WordTooLong { len, n });
    }
    let space = seq.alphabet().word_space(len)?;
    let a = seq.alphabet().len() as u64;
    let symbols = seq.symbols();

    let mut code: u64 = 0;
    for &s in &symbols[..len - 1] {
        code = code * a + s as u64;
    }

    let entries = if space <= DENSE_COUNT_LIMIT {
        let mut counts = vec![0u64; space as usize];
        let modulus = space / a;
        for &s in &symbols[len - 1..] {
            code = (code % modulus) * a + s as u64;
            counts[code as usize] += 1;
        }
        counts
            .into_iter()
            .enumerate()
            .filter(|&(_, c)| c > 0)
            .map(|(w, c)| (w as u64, c))
            .collect()
    } else {
        let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
        let modulus = space / a;
        for &s in &symbols[len - 1..] {
            code = (code % modulus) * a + s as u64;
            *counts.entry(code).or_insert(0) += 1;
        }
        counts.into_iter().collect()
    };

    Ok(WordDistribution {
        len,
        total: (n - len + 1) as u64,
        alphabet: seq.alphabet().clone(),
        entries,
    })
}

impl WordDistribution {
    /// Builds a distribution from explicit counts (word code → count).
    pub fn from_counts(len: usize, alphabet: Alphabet, counts: BTreeMap<u64, u64>) -> Self {
        let total = counts.values().sum();
        let entries = counts.into_iter().filter(|&(_, c)| c > 0).collect();
        Self {
            len,
            total,
            alphabet,
            entries,
        }
    }

    /// Word length ℓ.
    pub fn word_len(&self) -> usize {
        self.len
    }

    pub fn total_windows(&self) -> u64 {
        self.total
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn n_words(&self) -> usize {
        self.entries.len()
    }

    pub fn count(&self, code: u64) -> u64 {
        match self.entries.binary_search_by_key(&code, |&(w, _)| w) {
            Ok(i) => self.entries[i].1,
            Err(_) => 0,
        }
    }

    pub fn probability(&self, code: u64) -> f64 {
        self.count(code) as f64 / self.total as f64
    }

    /// Iterates `(code, count)` in word order.
    pub fn iter(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.entries.iter().copied()
    }

    /// Converts counts into a probability-valued distribution.
    pub fn to_probs(&self) -> WordProbs {
        let total = self.total as f64;
        WordProbs::new(
            self.len,
            self.alphabet.clone(),
            self.entries
                .iter()
                .map(|&(w, c)| (w, c as f64 / total))
                .collect(),
        )
    }

    /// CSV rows `word,count,probability`, words in lexicographic order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("word,count,probability\n");
        for &(code, count) in &self.entries {
            let word = self.alphabet.word_string(code, self.len);
            let p = count as f64 / self.total as f64;
            out.push_str(&format!("{word},{count},{}\n", g12(p)));
        }
        out
    }
}

// ---------------------------------------------------------------------------
// probability-valued word distributions

/// A probability-weighted set of equal-length words: exact machine
/// marginals, empirical frequencies, or constructed joints.
#[derive(Debug, Clone)]
pub struct WordProbs {
    len: usize,
    alphabet: Alphabet,
    entries: BTreeMap<u64, f64>,
}

impl WordProbs {
    pub fn new(len: usize, alphabet: Alphabet, entries: BTreeMap<u64, f64>) -> Self {
        Self {
            len,
            alphabet,
            entries,
        }
    }

    /// Word length ℓ.
    pub fn word_len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn n_words(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, code: u64) -> f64 {
        self.entries.get(&code).copied().unwrap_or(0.0)
    }

    pub fn entries(&self) -> &BTreeMap<u64, f64> {
        &self.entries
    }

    pub fn total_mass(&self) -> f64 {
        self.entries.values().sum()
    }

    /// Iterates `(code, probability)` in word order.
    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.entries.iter().map(|(&w, &p)| (w, p))
    }

    /// Marginal over the leading `prefix_len` symbols.
    pub fn prefix_marginal(&self, prefix_len: usize) -> WordProbs {
        assert!(prefix_len <= self.len);
        let shift = self
            .alphabet
            .word_space(self.len - prefix_len)
            .expect("suffix space fits");
        let mut out: BTreeMap<u64, f64> = BTreeMap::new();
        for (&code, &p) in &self.entries {
            *out.entry(code / shift).or_insert(0.0) += p;
        }
        WordProbs::new(prefix_len, self.alphabet.clone(), out)
    }
}

// ---------------------------------------------------------------------------
// conditional next-symbol tables

/// Next-symbol distribution attached to a history word.
#[derive(Debug, Clone)]
pub struct CondEntry {
    /// P(x | history), indexed by symbol.
    pub probs: Vec<f64>,
    /// Evidence behind the estimate: window count for empirical tables,
    /// probability mass for exact ones.
    pub support: f64,
}

/// Map from length-ℓ histories to their next-symbol distributions.
///
/// A history appears only if it was observed followed by at least one
/// symbol; absent histories are genuinely unobserved, never smoothed.
#[derive(Debug, Clone)]
pub struct ConditionalTable {
    hist_len: usize,
    alphabet: Alphabet,
    entries: BTreeMap<u64, CondEntry>,
}

/// Estimates P(x | w) for every observed ℓ-word from counts at length ℓ+1.
pub fn conditional_next(dist: &WordDistribution) -> Result<ConditionalTable, WordsError> {
    if dist.word_len() < 2 {
        return Err(WordsError::WordTooLong {
            len: dist.word_len(),
            n: 1,
        });
    }
    let a = dist.alphabet().len() as u64;
    let mut grouped: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for (code, count) in dist.iter() {
        let hist = code / a;
        let sym = (code % a) as usize;
        grouped.entry(hist).or_insert_with(|| vec![0.0; a as usize])[sym] = count as f64;
    }
    Ok(normalize_table(
        dist.word_len() - 1,
        dist.alphabet().clone(),
        grouped,
    ))
}

impl ConditionalTable {
    /// Exact conditionals from a probability-valued (ℓ+1)-word distribution.
    pub fn from_word_probs(probs: &WordProbs) -> Result<Self, WordsError> {
        if probs.word_len() < 2 {
            return Err(WordsError::WordTooLong {
                len: probs.word_len(),
                n: 1,
            });
        }
        let a = probs.alphabet().len() as u64;
        let mut grouped: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
        for (code, p) in probs.iter() {
            if p > 0.0 {
                let hist = code / a;
                let sym = (code % a) as usize;
                grouped.entry(hist).or_insert_with(|| vec![0.0; a as usize])[sym] = p;
            }
        }
        Ok(normalize_table(
            probs.word_len() - 1,
            probs.alphabet().clone(),
            grouped,
        ))
    }

    pub fn history_len(&self) -> usize {
        self.hist_len
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn n_histories(&self) -> usize {
        self.entries.len()
    }

    /// Next-symbol distribution for a history code, if it was observed.
    pub fn lookup(&self, hist: u64) -> Option<&CondEntry> {
        self.entries.get(&hist)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, &CondEntry)> + '_ {
        self.entries.iter().map(|(&w, e)| (w, e))
    }
}

fn normalize_table(
    hist_len: usize,
    alphabet: Alphabet,
    grouped: BTreeMap<u64, Vec<f64>>,
) -> ConditionalTable {
    let entries = grouped
        .into_iter()
        .map(|(hist, mut weights)| {
            let support: f64 = weights.iter().sum();
            for w in &mut weights {
                *w /= support;
            }
            (
                hist,
                CondEntry {
                    probs: weights,
                    support,
                },
            )
        })
        .collect();
    ConditionalTable {
        hist_len,
        alphabet,
        entries,
    }
}

// ---------------------------------------------------------------------------
// trace distance and effective Markov order

/// Total-variation (trace) distance ½ Σ_x |p(x) − q(x)| between two
/// distributions over the same alphabet.
pub fn trace_distance(p: &[f64], q: &[f64]) -> Result<f64, WordsError> {
    if p.len() != q.len() {
        return Err(WordsError::AlphabetMismatch(p.len(), q.len()));
    }
    for dist in [p, q] {
        let sum: f64 = dist.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(WordsError::BadDistribution(sum));
        }
    }
    Ok(p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0)
}

/// Trace-distance statistic per candidate order r, and the resulting
/// effective Markov order.
#[derive(Debug, Clone)]
pub struct EmoProfile {
    pub delta: f64,
    pub r_max: usize,
    /// statistic[r] = max over symbol pairs (x, x′) of the included-mass
    /// weighted expectation of D(P̃(X₀|x w), P̃(X₀|x′ w)) over r-words w.
    pub statistics: Vec<f64>,
    /// Probability mass of histories skipped (unobserved on either side)
    /// for the maximizing pair at each r.
    pub skipped_mass: Vec<f64>,
    /// Smallest r with statistic < δ, when the threshold is crossed.
    pub r_eff: Option<usize>,
}

impl EmoProfile {
    /// Re-reads the order off the stored statistics at a different
    /// threshold. Nonincreasing in δ.
    pub fn r_eff_at(&self, delta: f64) -> Option<usize> {
        self.statistics.iter().position(|&s| s < delta)
    }

    /// CSV rows `r,statistic,skipped_mass`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,statistic,skipped_mass\n");
        for (r, (s, m)) in self.statistics.iter().zip(&self.skipped_mass).enumerate() {
            out.push_str(&format!("{r},{},{}\n", g12(*s), g12(*m)));
        }
        out
    }
}

/// Estimates the effective Markov order of a sequence: the smallest r at
/// which conditioning on one extra past symbol beyond an r-word history no
/// longer moves the next-symbol distribution by more than δ on average.
///
/// For each r the statistic compares P̃(X₀ | x w) against P̃(X₀ | x′ w)
/// across symbol pairs, weighted by the empirical distribution of the
/// r-word w. History pairs with either side unobserved are skipped and the
/// expectation renormalized over the included mass; a pair with no included
/// mass is excluded from the max, and an r where every pair is excluded is
/// an error.
pub fn effective_markov_order(
    seq: &SymbolSequence,
    delta: f64,
    r_max: usize,
) -> Result<EmoProfile, WordsError> {
    if delta <= 0.0 {
        return Err(WordsError::BadThreshold(delta));
    }
    let n = seq.len();
    if n <= r_max + 2 {
        return Err(WordsError::TooLittleData { n, min: r_max + 3 });
    }
    let a = seq.alphabet().len();

    let mut statistics = Vec::with_capacity(r_max + 1);
    let mut skipped_mass = Vec::with_capacity(r_max + 1);
    for r in 0..=r_max {
        // Next-symbol conditionals for (r+1)-word histories x·w.
        let ext = count_words(seq, r + 2)?;
        let cond = conditional_next(&ext)?;

        // Weights: empirical distribution of the r-word w.
        let weights: Vec<(u64, f64)> = if r == 0 {
            vec![(0, 1.0)]
        } else {
            let marg = count_words(seq, r)?;
            let total = marg.total_windows() as f64;
            marg.iter().map(|(w, c)| (w, c as f64 / total)).collect()
        };

        let r_space = seq.alphabet().word_space(r)?;
        let mut best: Option<(f64, f64)> = None; // (statistic, included mass)
        for x in 0..a {
            for x2 in (x + 1)..a {
                let mut acc = 0.0;
                let mut mass = 0.0;
                for &(w, pw) in &weights {
                    let h1 = x as u64 * r_space + w;
                    let h2 = x2 as u64 * r_space + w;
                    if let (Some(e1), Some(e2)) = (cond.lookup(h1), cond.lookup(h2)) {
                        acc += pw * trace_distance(&e1.probs, &e2.probs)?;
                        mass += pw;
                    }
                }
                if mass > 0.0 {
                    let stat = acc / mass;
                    if best.is_none_or(|(b, _)| stat > b) {
                        best = Some((stat, mass));
                    }
                }
            }
        }
        let (stat, mass) = best.ok_or(WordsError::InsufficientData { r })?;
        statistics.push(stat);
        skipped_mass.push(1.0 - mass);
    }

    let r_eff = statistics.iter().position(|&s| s < delta);
    Ok(EmoProfile {
        delta,
        r_max,
        statistics,
        skipped_mass,
        r_eff,
    })
}

/// Largest word length with a sane expected count per word:
/// floor(log_A(N/1000)), at least 1. Sequences under 1000 symbols are
/// rejected outright.
pub fn l_max_guideline(n: usize, alphabet_size: usize) -> Result<usize, WordsError> {
    if n < 1000 {
        return Err(WordsError::TooLittleData { n, min: 1000 });
    }
    let raw = ((n as f64 / 1000.0).ln() / (alphabet_size as f64).ln() + 1e-9).floor();
    Ok((raw as usize).max(1))
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo;

    fn seq(text: &str) -> SymbolSequence {
        SymbolSequence::from_text(text, Alphabet::binary()).unwrap()
    }

    #[test]
    fn counts_all_windows() {
        let dist = count_words(&seq("0101"), 2).unwrap();
        assert_eq!(dist.total_windows(), 3);
        let get = |s: &str| {
            let a = Alphabet::binary();
            dist.count(a.encode(&a.parse(s).unwrap()).unwrap())
        };
        assert_eq!(get("01"), 2);
        assert_eq!(get("10"), 1);
        assert_eq!(get("00"), 0);
        assert_eq!(get("11"), 0);
    }

    #[test]
    fn rejects_oversized_words() {
        assert!(matches!(
            count_words(&seq("0101"), 5),
            Err(WordsError::WordTooLong { .. })
        ));
        assert!(matches!(
            count_words(&seq("0101"), 0),
            Err(WordsError::WordTooLong { .. })
        ));
    }

    #[test]
    fn empirical_frequencies_track_the_source() {
        let m = zoo::fair_coin().unwrap();
        let s = m.sample_sequence(1_000_000, 5);
        let dist = count_words(&s, 1).unwrap();
        assert!((dist.probability(0) - 0.5).abs() < 0.002);

        // Multi-word check against exact probabilities at 5/√N.
        let m = zoo::golden_mean_3_2(0.9).unwrap();
        let s = m.sample_sequence(1_000_000, 17);
        let dist = count_words(&s, 4).unwrap();
        let exact = m.word_distribution(4).unwrap();
        let bound = 5.0 / (s.len() as f64).sqrt();
        for code in 0..16u64 {
            assert!(
                (dist.probability(code) - exact.get(code)).abs() < bound,
                "word {code}"
            );
        }
    }

    #[test]
    fn conditional_from_counts() {
        let a = Alphabet::binary();
        let mut counts = BTreeMap::new();
        counts.insert(0, 1); // "00"
        counts.insert(1, 3); // "01"
        let dist = WordDistribution::from_counts(2, a, counts);
        let table = conditional_next(&dist).unwrap();
        let e = table.lookup(0).unwrap();
        assert!((e.probs[0] - 0.25).abs() < 1e-15);
        assert!((e.probs[1] - 0.75).abs() < 1e-15);
        assert_eq!(e.support, 4.0);
        // History "1" never observed with a successor.
        assert!(table.lookup(1).is_none());
    }

    #[test]
    fn exact_conditionals_match_synchronized_state() {
        // Markov order 3: every observed 3-word pins the causal state, so
        // the exact conditional equals that state's emission distribution.
        let m = zoo::golden_mean_3_2(0.9).unwrap();
        let table = ConditionalTable::from_word_probs(&m.word_distribution(4).unwrap()).unwrap();
        assert_eq!(table.history_len(), 3);
        for (hist, entry) in table.iter() {
            let word = m.alphabet().decode(hist, 3);
            let state = m.sync_state(&word).expect("3-words synchronize");
            for x in 0..2u8 {
                assert!(
                    (entry.probs[x as usize] - m.emission_prob(state, x)).abs() < 1e-12,
                    "history {hist:?}"
                );
            }
        }
    }

    #[test]
    fn trace_distance_basics() {
        assert_eq!(trace_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(trace_distance(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        assert!((trace_distance(&[0.5, 0.5], &[0.25, 0.75]).unwrap() - 0.25).abs() < 1e-15);
        assert!(matches!(
            trace_distance(&[1.0], &[0.5, 0.5]),
            Err(WordsError::AlphabetMismatch(1, 2))
        ));
        assert!(matches!(
            trace_distance(&[0.9, 0.0], &[0.5, 0.5]),
            Err(WordsError::BadDistribution(_))
        ));
    }

    #[test]
    fn memoryless_source_has_order_zero() {
        let m = zoo::fair_coin().unwrap();
        let s = m.sample_sequence(100_000, 23);
        let profile = effective_markov_order(&s, 0.01, 5).unwrap();
        assert_eq!(profile.r_eff, Some(0));
        assert!(profile.statistics[0] < 0.01);
    }

    #[test]
    fn markov_chain_has_order_one() {
        let m = zoo::perturbed_coin(0.3, 0.6).unwrap();
        let s = m.sample_sequence(100_000, 29);
        let profile = effective_markov_order(&s, 0.01, 4).unwrap();
        // statistic(0) = D((0.7, 0.3), (0.6, 0.4)) = 0.1 up to noise.
        assert!((profile.statistics[0] - 0.1).abs() < 0.02);
        assert_eq!(profile.r_eff, Some(1));
    }

    #[test]
    fn r_eff_is_monotone_in_delta() {
        let m = zoo::golden_mean_3_2(0.9).unwrap();
        let s = m.sample_sequence(200_000, 31);
        let profile = effective_markov_order(&s, 0.01, 6).unwrap();
        let mut prev = profile.r_eff_at(1e-9).unwrap_or(usize::MAX);
        for delta in [1e-4, 1e-3, 1e-2, 1e-1, 0.5] {
            let cur = profile.r_eff_at(delta).unwrap_or(usize::MAX);
            assert!(cur <= prev, "R_eff must not increase with δ");
            prev = cur;
        }
    }

    #[test]
    fn emo_input_validation() {
        let s = seq("0101");
        assert!(matches!(
            effective_markov_order(&s, 0.0, 2),
            Err(WordsError::BadThreshold(_))
        ));
        assert!(matches!(
            effective_markov_order(&s, 0.01, 4),
            Err(WordsError::TooLittleData { .. })
        ));
    }

    #[test]
    fn guideline_values() {
        assert_eq!(l_max_guideline(1_000_000, 2).unwrap(), 9);
        assert_eq!(l_max_guideline(10_000, 2).unwrap(), 3);
        assert_eq!(l_max_guideline(10_000_000, 2).unwrap(), 13);
        assert_eq!(l_max_guideline(1000, 2).unwrap(), 1);
        assert_eq!(l_max_guideline(1500, 2).unwrap(), 1);
        assert!(matches!(
            l_max_guideline(999, 2),
            Err(WordsError::TooLittleData { .. })
        ));
    }

    #[test]
    fn marginal_consistency_between_lengths() {
        // count_ℓ(w) and Σ_y count_{ℓ+1}(wy) differ by at most one window
        // (the final position has no successor).
        let m = zoo::nemo(0.1, 0.9).unwrap();
        let s = m.sample_sequence(50_000, 37);
        let short = count_words(&s, 3).unwrap();
        let long = count_words(&s, 4).unwrap();
        let mut total_gap = 0u64;
        for (w, c) in short.iter() {
            let extended: u64 = (0..2u64).map(|y| long.count(w * 2 + y)).sum();
            assert!(c >= extended && c - extended <= 1, "word {w}");
            total_gap += c - extended;
        }
        assert_eq!(total_gap, 1);
    }

    #[test]
    fn csv_schema() {
        let dist = count_words(&seq("0101"), 2).unwrap();
        let csv = dist.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("word,count,probability"));
        assert!(lines.next().unwrap().starts_with("01,2,"));

        let m = zoo::fair_coin().unwrap();
        let s = m.sample_sequence(10_000, 1);
        let profile = effective_markov_order(&s, 0.01, 2).unwrap();
        let csv = profile.to_csv();
        assert!(csv.starts_with("r,statistic,skipped_mass\n"));
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn prefix_marginal_sums_suffixes() {
        let m = zoo::nemo(0.1, 0.9).unwrap();
        let joint = m.word_distribution(5).unwrap();
        let marg = joint.prefix_marginal(2);
        let exact = m.word_distribution(2).unwrap();
        for (code, p) in marg.iter() {
            assert!((p - exact.get(code)).abs() < 1e-12);
        }
    }
}
