//! Finite Markov chains with exact rational kernels.
//!
//! State labels are strings; internally states are dense indices. Kernels are
//! stored sparsely (only positive entries) and validated to be exactly
//! row-stochastic on construction. Every operation here is exact.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::path::Path;

use num::{BigRational, One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::ScaledMatrix;
use crate::linalg;
use crate::prob::Prob;

/// A finite Markov chain: ordered state labels plus an exactly
/// row-stochastic transition kernel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkovChain {
    states: Vec<String>,
    index: HashMap<String, usize>,
    /// Sparse rows sorted by target index; only positive entries are stored.
    rows: Vec<Vec<(usize, Prob)>>,
}

impl MarkovChain {
    /// Builds a chain from labeled transitions. Pairs not listed have
    /// probability zero; explicit zero entries are accepted and dropped.
    pub fn from_transitions<I>(states: Vec<String>, transitions: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, String, Prob)>,
    {
        let index = build_index(&states)?;
        let n = states.len();
        let mut dense: Vec<BTreeMap<usize, Prob>> = vec![BTreeMap::new(); n];
        for (from, to, p) in transitions {
            let i = *index.get(&from).ok_or(Error::UnknownState { label: from.clone() })?;
            let j = *index.get(&to).ok_or(Error::UnknownState { label: to.clone() })?;
            if dense[i].contains_key(&j) {
                return Err(Error::DuplicateTransition { from, to });
            }
            dense[i].insert(j, p);
        }
        let rows = dense
            .into_iter()
            .map(|row| row.into_iter().filter(|(_, p)| !p.is_zero()).collect())
            .collect();
        let chain = MarkovChain { states, index, rows };
        chain.validate()?;
        Ok(chain)
    }

    /// Builds a chain from dense rows aligned with `states`.
    pub fn from_dense(states: Vec<String>, rows: Vec<Vec<Prob>>) -> Result<Self> {
        let index = build_index(&states)?;
        let n = states.len();
        if rows.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: rows.len() });
        }
        let mut sparse = Vec::with_capacity(n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: row.len() });
            }
            sparse.push(
                row.into_iter()
                    .enumerate()
                    .filter(|(_, p)| !p.is_zero())
                    .collect(),
            );
        }
        let chain = MarkovChain { states, index, rows: sparse };
        chain.validate()?;
        Ok(chain)
    }

    fn validate(&self) -> Result<()> {
        for (i, row) in self.rows.iter().enumerate() {
            let mut sum = BigRational::zero();
            for (_, p) in row {
                sum += p.ratio();
            }
            if !sum.is_one() {
                return Err(Error::RowSumNotOne {
                    state: self.states[i].clone(),
                    sum: sum.to_string(),
                });
            }
        }
        Ok(())
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn label(&self, i: usize) -> &str {
        &self.states[i]
    }

    pub fn state_index(&self, label: &str) -> Result<usize> {
        self.index
            .get(label)
            .copied()
            .ok_or(Error::UnknownState { label: label.to_string() })
    }

    /// Transition probability from `i` to `j` (zero when absent).
    pub fn prob(&self, i: usize, j: usize) -> Prob {
        match self.rows[i].binary_search_by_key(&j, |(to, _)| *to) {
            Ok(pos) => self.rows[i][pos].1.clone(),
            Err(_) => Prob::zero(),
        }
    }

    /// Positive transitions out of `i`, sorted by target index.
    pub fn row(&self, i: usize) -> &[(usize, Prob)] {
        &self.rows[i]
    }

    pub fn is_absorbing(&self, i: usize) -> bool {
        self.rows[i].len() == 1 && self.rows[i][0] == (i, Prob::one())
    }

    /// Same kernel with some states renamed; labels not in `renames` keep
    /// their names.
    pub fn with_renamed_states(&self, renames: &BTreeMap<String, String>) -> Result<Self> {
        let states: Vec<String> = self
            .states
            .iter()
            .map(|s| renames.get(s).cloned().unwrap_or_else(|| s.clone()))
            .collect();
        let index = build_index(&states)?;
        Ok(MarkovChain { states, index, rows: self.rows.clone() })
    }
}

fn build_index(states: &[String]) -> Result<HashMap<String, usize>> {
    if states.is_empty() {
        return Err(Error::EmptyStateSet);
    }
    let mut index = HashMap::with_capacity(states.len());
    for (i, label) in states.iter().enumerate() {
        if index.insert(label.clone(), i).is_some() {
            return Err(Error::DuplicateState { label: label.clone() });
        }
    }
    Ok(index)
}

/// An exact probability vector aligned with a chain's state order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Distribution {
    weights: Vec<Prob>,
}

impl Distribution {
    /// Validates that the weights sum to exactly 1.
    pub fn new(weights: Vec<Prob>) -> Result<Self> {
        let mut sum = BigRational::zero();
        for w in &weights {
            sum += w.ratio();
        }
        if !sum.is_one() {
            return Err(Error::WeightSumNotOne { sum: sum.to_string() });
        }
        Ok(Distribution { weights })
    }

    /// Point mass on state `i` in an `n`-state space.
    pub fn point(n: usize, i: usize) -> Self {
        let mut weights = vec![Prob::zero(); n];
        weights[i] = Prob::one();
        Distribution { weights }
    }

    /// Uniform distribution on `n` states.
    pub fn uniform(n: usize) -> Self {
        let w = Prob::new(BigRational::new(1.into(), (n as i64).into())).expect("1/n");
        Distribution { weights: vec![w; n] }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weight(&self, i: usize) -> &Prob {
        &self.weights[i]
    }

    pub fn weights(&self) -> &[Prob] {
        &self.weights
    }

    pub(crate) fn from_ratios(ratios: Vec<BigRational>) -> Result<Self> {
        let weights = ratios.into_iter().map(Prob::new).collect::<Result<_>>()?;
        Distribution::new(weights)
    }
}

/// Exact distribution after `n` kernel applications.
pub fn evolve(chain: &MarkovChain, start: &Distribution, n: u64) -> Result<Distribution> {
    if start.len() != chain.n_states() {
        return Err(Error::DimensionMismatch {
            expected: chain.n_states(),
            got: start.len(),
        });
    }
    // Iterate for short horizons; switch to integer matrix powers when the
    // step count makes per-step gcd reduction the dominant cost.
    if n <= 64 {
        let mut current: Vec<BigRational> =
            start.weights.iter().map(|p| p.ratio().clone()).collect();
        for _ in 0..n {
            current = step(chain, &current);
        }
        Distribution::from_ratios(current)
    } else {
        let power = ScaledMatrix::from_chain(chain).pow(n);
        let m = chain.n_states();
        let mut ratios = Vec::with_capacity(m);
        for j in 0..m {
            let mut acc = BigRational::zero();
            for (i, w) in start.weights.iter().enumerate() {
                if !w.is_zero() {
                    acc += w.ratio() * power.entry_ratio(i, j);
                }
            }
            ratios.push(acc);
        }
        Distribution::from_ratios(ratios)
    }
}

fn step(chain: &MarkovChain, current: &[BigRational]) -> Vec<BigRational> {
    let mut next = vec![BigRational::zero(); chain.n_states()];
    for (i, w) in current.iter().enumerate() {
        if w.is_zero() {
            continue;
        }
        for (j, p) in chain.row(i) {
            next[*j] += w * p.ratio();
        }
    }
    next
}

/// Total variation distance between two distributions: the supremum of
/// `|mu(A) - nu(A)|` over events, computed exactly as the one-sided sum of
/// positive pointwise differences.
pub fn tv_distance(mu: &Distribution, nu: &Distribution) -> Result<Prob> {
    if mu.len() != nu.len() {
        return Err(Error::DimensionMismatch { expected: mu.len(), got: nu.len() });
    }
    let mut diff = BigRational::zero();
    for (a, b) in mu.weights.iter().zip(&nu.weights) {
        if a > b {
            diff += a.ratio() - b.ratio();
        }
    }
    Ok(Prob::trusted(diff))
}

/// Worst-case total variation distance at time `n` over ordered start pairs:
/// the standard quantity usually written `d̄(n)`.
pub fn worst_pair_tv(chain: &MarkovChain, n: u64) -> Result<Prob> {
    let power = ScaledMatrix::from_chain(chain).pow(n);
    let m = chain.n_states();
    let mut max = BigRational::zero();
    for x in 0..m {
        for y in (x + 1)..m {
            let tv = power.tv_between(x, y);
            if tv > max {
                max = tv;
            }
        }
    }
    Ok(Prob::trusted(max))
}

/// Worst-case total variation distance at time `n` to a fixed reference
/// distribution: the standard quantity usually written `d(n)`. The caller
/// supplies the reference (typically the common limit of the chain).
pub fn worst_tv(chain: &MarkovChain, pi: &Distribution, n: u64) -> Result<Prob> {
    if pi.len() != chain.n_states() {
        return Err(Error::DimensionMismatch {
            expected: chain.n_states(),
            got: pi.len(),
        });
    }
    let power = ScaledMatrix::from_chain(chain).pow(n);
    let m = chain.n_states();
    let mut max = BigRational::zero();
    for x in 0..m {
        let row = power.row_ratios(x);
        let mut diff = BigRational::zero();
        for (a, b) in row.iter().zip(pi.weights()) {
            if a > b.ratio() {
                diff += a - b.ratio();
            }
        }
        if diff > max {
            max = diff;
        }
    }
    Ok(Prob::trusted(max))
}

/// Smallest `n` with `worst_tv(chain, pi, n) <= 1/4`, searched up to `cap`.
///
/// The comparison is an exact rational one. Fails with
/// [`Error::SearchCapExceeded`] when the threshold is not reached by `cap`,
/// signalling non-convergence within the search window.
pub fn mixing_time(chain: &MarkovChain, pi: &Distribution, cap: u64) -> Result<u64> {
    if pi.len() != chain.n_states() {
        return Err(Error::DimensionMismatch {
            expected: chain.n_states(),
            got: pi.len(),
        });
    }
    let quarter = BigRational::new(1.into(), 4.into());
    let m = chain.n_states();
    let mut rows: Vec<Vec<BigRational>> = (0..m)
        .map(|x| {
            (0..m)
                .map(|j| if j == x { BigRational::one() } else { BigRational::zero() })
                .collect()
        })
        .collect();
    for n in 0..=cap {
        let mut worst = BigRational::zero();
        for row in &rows {
            let mut diff = BigRational::zero();
            for (a, b) in row.iter().zip(pi.weights()) {
                if a > b.ratio() {
                    diff += a - b.ratio();
                }
            }
            if diff > worst {
                worst = diff;
            }
        }
        if worst <= quarter {
            return Ok(n);
        }
        if n < cap {
            for row in rows.iter_mut() {
                *row = step(chain, row);
            }
        }
    }
    Err(Error::SearchCapExceeded { cap })
}

/// A finite-horizon view of a chain realized as a reducible chain on
/// layer-indexed states.
#[derive(Debug, Clone)]
pub struct TimeLayeredChain {
    base: MarkovChain,
    horizon: u64,
    layered: MarkovChain,
}

impl TimeLayeredChain {
    pub fn base(&self) -> &MarkovChain {
        &self.base
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn layered(&self) -> &MarkovChain {
        &self.layered
    }

    /// Label of base state `i` in layer `n`.
    pub fn layer_label(base_label: &str, layer: u64) -> String {
        format!("{base_label}@{layer}")
    }
}

/// Unrolls evolution in time into layers of fresh states: layer `n` feeds
/// layer `n + 1` with the base kernel, and the final layer is absorbing.
///
/// The layered chain has `|S| * (T + 1)` states.
pub fn time_layer(chain: &MarkovChain, horizon: u64) -> TimeLayeredChain {
    let m = chain.n_states();
    let layers = horizon as usize + 1;
    let mut states = Vec::with_capacity(m * layers);
    for n in 0..layers {
        for s in chain.states() {
            states.push(TimeLayeredChain::layer_label(s, n as u64));
        }
    }
    let mut rows: Vec<Vec<(usize, Prob)>> = Vec::with_capacity(m * layers);
    for n in 0..layers {
        for i in 0..m {
            if n + 1 < layers {
                let base = (n + 1) * m;
                rows.push(
                    chain
                        .row(i)
                        .iter()
                        .map(|(j, p)| (base + j, p.clone()))
                        .collect(),
                );
            } else {
                rows.push(vec![(n * m + i, Prob::one())]);
            }
        }
    }
    let index = build_index(&states).expect("layer labels are unique");
    let layered = MarkovChain { states, index, rows };
    debug_assert!(layered.validate().is_ok());
    TimeLayeredChain {
        base: chain.clone(),
        horizon,
        layered,
    }
}

/// Exact limit of `P^n(start, .)` as `n` grows, for chains whose recurrent
/// classes are all single absorbing states.
///
/// The structure is checked first: every non-absorbing state must reach some
/// absorbing state with positive probability, otherwise the state-wise limit
/// may not exist and the call fails. The absorption probabilities are then
/// obtained by solving the linear absorption equations exactly.
pub fn limit_distribution(chain: &MarkovChain, start: &Distribution) -> Result<Distribution> {
    let m = chain.n_states();
    if start.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: start.len() });
    }
    let absorbing: Vec<usize> = (0..m).filter(|&i| chain.is_absorbing(i)).collect();

    // Reverse reachability from the absorbing set over positive transitions.
    let mut predecessors: Vec<Vec<usize>> = vec![Vec::new(); m];
    for i in 0..m {
        for (j, _) in chain.row(i) {
            predecessors[*j].push(i);
        }
    }
    let mut reaches = vec![false; m];
    let mut queue: VecDeque<usize> = absorbing.iter().copied().collect();
    for &a in &absorbing {
        reaches[a] = true;
    }
    while let Some(j) = queue.pop_front() {
        for &i in &predecessors[j] {
            if !reaches[i] {
                reaches[i] = true;
                queue.push_back(i);
            }
        }
    }
    if let Some(bad) = (0..m).find(|&i| !reaches[i]) {
        return Err(Error::NoAbsorbingLimit {
            witness: chain.label(bad).to_string(),
        });
    }

    let transient: Vec<usize> = (0..m).filter(|&i| !chain.is_absorbing(i)).collect();
    let slot: HashMap<usize, usize> = transient.iter().enumerate().map(|(k, &i)| (i, k)).collect();
    let a_slot: HashMap<usize, usize> = absorbing.iter().enumerate().map(|(k, &i)| (i, k)).collect();

    // Solve (I - Q) H = R for the transient-to-absorbing hitting matrix H.
    let t = transient.len();
    let mut lhs = vec![vec![BigRational::zero(); t]; t];
    let mut rhs = vec![vec![BigRational::zero(); absorbing.len()]; t];
    for (k, &i) in transient.iter().enumerate() {
        lhs[k][k] = BigRational::one();
        for (j, p) in chain.row(i) {
            if let Some(&kj) = slot.get(j) {
                lhs[k][kj] = &lhs[k][kj] - p.ratio();
            } else {
                let aj = a_slot[j];
                rhs[k][aj] = &rhs[k][aj] + p.ratio();
            }
        }
    }
    let hitting = if t > 0 { linalg::solve(lhs, rhs)? } else { Vec::new() };

    let mut out = vec![BigRational::zero(); m];
    for (i, w) in start.weights().iter().enumerate() {
        if w.is_zero() {
            continue;
        }
        if let Some(&k) = slot.get(&i) {
            for (a, &target) in absorbing.iter().enumerate() {
                out[target] = &out[target] + w.ratio() * &hitting[k][a];
            }
        } else {
            out[i] = &out[i] + w.ratio();
        }
    }
    Distribution::from_ratios(out)
}

/// Exact stationary distribution, when it exists and is unique.
pub fn stationary_distribution(chain: &MarkovChain) -> Result<Distribution> {
    let m = chain.n_states();
    // Stationarity equations P^T x = x stacked with the normalization row.
    let mut rows = vec![vec![BigRational::zero(); m]; m + 1];
    for i in 0..m {
        for (j, p) in chain.row(i) {
            rows[*j][i] = p.ratio().clone();
        }
    }
    for (j, row) in rows.iter_mut().enumerate().take(m) {
        row[j] = &row[j] - BigRational::one();
    }
    rows[m] = vec![BigRational::one(); m];
    let mut b = vec![BigRational::zero(); m + 1];
    b[m] = BigRational::one();
    let solution = linalg::solve_unique(rows, b)?.ok_or(Error::NoUniqueStationary)?;
    if solution.iter().any(|w| w.is_negative()) {
        return Err(Error::NoUniqueStationary);
    }
    Distribution::from_ratios(solution)
}

/// Exact `P^n` of a chain as reduced rational rows. Uses integer repeated
/// squaring internally, so large `n` is fine on small chains.
pub fn kernel_power_rows(chain: &MarkovChain, n: u64) -> Vec<Vec<BigRational>> {
    let power = ScaledMatrix::from_chain(chain).pow(n);
    (0..chain.n_states()).map(|i| power.row_ratios(i)).collect()
}

/// Exact total variation distance between the `n`-step laws from two start
/// states. Equivalent to evolving point masses and comparing, but stays in
/// integer arithmetic until the final reduction, which matters at horizons
/// in the tens of thousands of steps.
pub fn pair_tv(chain: &MarkovChain, x: &str, y: &str, n: u64) -> Result<Prob> {
    let xi = chain.state_index(x)?;
    let yi = chain.state_index(y)?;
    let power = ScaledMatrix::from_chain(chain).pow(n);
    Ok(Prob::trusted(power.tv_between(xi, yi)))
}

// ---------------------------------------------------------------------------
// File format
// ---------------------------------------------------------------------------

/// Serialized chain: state labels plus sparse transitions with rational
/// probability strings (`"num/den"` or a plain integer). Missing pairs mean
/// probability zero.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainFile {
    pub states: Vec<String>,
    pub transitions: Vec<TransitionRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransitionRecord {
    pub from: String,
    pub to: String,
    pub p: String,
}

impl MarkovChain {
    pub fn to_file_model(&self) -> ChainFile {
        let mut transitions = Vec::new();
        for i in 0..self.n_states() {
            for (j, p) in self.row(i) {
                transitions.push(TransitionRecord {
                    from: self.label(i).to_string(),
                    to: self.label(*j).to_string(),
                    p: p.to_string(),
                });
            }
        }
        ChainFile {
            states: self.states.clone(),
            transitions,
        }
    }

    pub fn from_file_model(file: ChainFile) -> Result<Self> {
        let transitions = file
            .transitions
            .into_iter()
            .map(|t| {
                let p: Prob = t.p.parse()?;
                Ok((t.from, t.to, p))
            })
            .collect::<Result<Vec<_>>>()?;
        MarkovChain::from_transitions(file.states, transitions)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file_model()).expect("chain file serializes")
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let file: ChainFile = serde_json::from_str(json)?;
        Self::from_file_model(file)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let json = std::fs::read_to_string(path)?;
        Self::from_json(&json)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::ratio_pow;
    use num::BigInt;

    fn p(n: i64, d: i64) -> Prob {
        Prob::from_ratio(n, d).unwrap()
    }

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    pub(crate) fn two_state(alpha: Prob) -> MarkovChain {
        let stay = alpha.complement();
        MarkovChain::from_dense(
            vec!["0".into(), "1".into()],
            vec![vec![stay.clone(), alpha.clone()], vec![alpha, stay]],
        )
        .unwrap()
    }

    fn identity_chain(n: usize) -> MarkovChain {
        let states: Vec<String> = (0..n).map(|i| i.to_string()).collect();
        let transitions: Vec<_> = (0..n)
            .map(|i| (i.to_string(), i.to_string(), Prob::one()))
            .collect();
        MarkovChain::from_transitions(states, transitions).unwrap()
    }

    /// Independent closed form for the symmetric two-state chain: the kernel
    /// has eigenvalues 1 and 1 - 2a, so P^n(0,0) = (1 + (1-2a)^n) / 2.
    fn two_state_weight_on_start(alpha: &Prob, n: u64) -> BigRational {
        let gap = BigRational::one() - BigRational::from_integer(2.into()) * alpha.ratio();
        (BigRational::one() + ratio_pow(&gap, n)) / BigRational::from_integer(2.into())
    }

    #[test]
    fn construction_rejects_bad_rows() {
        let err = MarkovChain::from_transitions(
            vec!["a".into(), "b".into()],
            vec![
                ("a".to_string(), "b".to_string(), p(9, 10)),
                ("b".to_string(), "b".to_string(), Prob::one()),
            ],
        )
        .unwrap_err();
        assert!(matches!(err, Error::RowSumNotOne { ref state, .. } if state == "a"));

        assert!(matches!(
            MarkovChain::from_transitions(
                vec!["a".into(), "a".into()],
                vec![("a".to_string(), "a".to_string(), Prob::one())],
            ),
            Err(Error::DuplicateState { .. })
        ));
    }

    #[test]
    fn evolve_identity_is_fixed() {
        let chain = identity_chain(3);
        let start = Distribution::new(vec![p(1, 2), p(1, 3), p(1, 6)]).unwrap();
        let after = evolve(&chain, &start, 5).unwrap();
        assert_eq!(after, start);
    }

    #[test]
    fn evolve_two_state_matches_eigen_oracle() {
        let alpha = p(1, 4);
        let chain = two_state(alpha.clone());
        let after = evolve(&chain, &Distribution::point(2, 0), 2).unwrap();
        // Oracle gives (1 + (1/2)^2) / 2 = 5/8.
        assert_eq!(two_state_weight_on_start(&alpha, 2), r(5, 8));
        assert_eq!(after.weight(0).ratio(), &r(5, 8));
        // Long-horizon path (matrix power) agrees with the oracle too.
        let far = evolve(&chain, &Distribution::point(2, 0), 100).unwrap();
        assert_eq!(far.weight(0).ratio(), &two_state_weight_on_start(&alpha, 100));
    }

    #[test]
    fn evolve_rejects_dimension_mismatch() {
        let chain = identity_chain(2);
        let start = Distribution::point(3, 0);
        assert!(matches!(
            evolve(&chain, &start, 1),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn tv_distance_basics() {
        let mu = Distribution::new(vec![p(1, 2), p(1, 2)]).unwrap();
        assert!(tv_distance(&mu, &mu).unwrap().is_zero());
        let dx = Distribution::point(2, 0);
        let dy = Distribution::point(2, 1);
        assert!(tv_distance(&dx, &dy).unwrap().is_one());
        assert!(tv_distance(&dx, &Distribution::point(3, 0)).is_err());
    }

    #[test]
    fn worst_pair_tv_two_state_closed_form() {
        let chain = two_state(p(1, 4));
        for n in 0..6u64 {
            let expected = ratio_pow(&r(1, 2), n);
            assert_eq!(worst_pair_tv(&chain, n).unwrap().ratio(), &expected);
        }
        assert!(worst_pair_tv(&identity_chain(1), 7).unwrap().is_zero());
    }

    #[test]
    fn worst_tv_examples() {
        // One step at a = 1/2 reaches uniform exactly.
        let chain = two_state(p(1, 2));
        let pi = Distribution::uniform(2);
        assert!(worst_tv(&chain, &pi, 1).unwrap().is_zero());

        let chain = two_state(p(1, 4));
        assert_eq!(worst_tv(&chain, &pi, 1).unwrap(), p(1, 4));

        // A chain already absorbed at s with the reference point mass there.
        let chain = identity_chain(1);
        let pi = Distribution::point(1, 0);
        for n in 0..4 {
            assert!(worst_tv(&chain, &pi, n).unwrap().is_zero());
        }
    }

    #[test]
    fn mixing_time_two_state_family() {
        let pi = Distribution::uniform(2);
        assert_eq!(mixing_time(&two_state(p(1, 2)), &pi, 10).unwrap(), 1);
        assert_eq!(mixing_time(&two_state(p(1, 4)), &pi, 10).unwrap(), 1);
        // d(n) = (3/4)^n / 2: 3/8, 9/32, 27/128 -> first n with d <= 1/4 is 3.
        assert_eq!(mixing_time(&two_state(p(1, 8)), &pi, 10).unwrap(), 3);
        assert!(matches!(
            mixing_time(&identity_chain(2), &Distribution::uniform(2), 5),
            Err(Error::SearchCapExceeded { cap: 5 })
        ));
    }

    #[test]
    fn time_layer_structure() {
        let chain = two_state(p(1, 4));
        let zero = time_layer(&chain, 0);
        assert_eq!(zero.layered().n_states(), 2);
        assert!((0..2).all(|i| zero.layered().is_absorbing(i)));

        let layered = time_layer(&chain, 2);
        assert_eq!(layered.layered().n_states(), 6);
        for i in 0..6 {
            let layer = i / 2;
            for (j, _) in layered.layered().row(i) {
                if layer < 2 {
                    assert_eq!(j / 2, layer + 1);
                } else {
                    assert_eq!(*j, i);
                }
            }
        }
    }

    #[test]
    fn time_layer_reproduces_base_marginals() {
        let states: Vec<String> = vec!["a".into(), "b".into(), "c".into()];
        let chain = MarkovChain::from_dense(
            states,
            vec![
                vec![p(1, 2), p(1, 4), p(1, 4)],
                vec![p(0, 1), p(1, 3), p(2, 3)],
                vec![p(1, 5), p(2, 5), p(2, 5)],
            ],
        )
        .unwrap();
        let layered = time_layer(&chain, 4);
        assert_eq!(layered.layered().n_states(), 15);
        for n in 0..=4u64 {
            let base_dist = evolve(&chain, &Distribution::point(3, 0), n).unwrap();
            let layer_dist =
                evolve(layered.layered(), &Distribution::point(15, 0), n).unwrap();
            for j in 0..3 {
                assert_eq!(
                    layer_dist.weight(n as usize * 3 + j),
                    base_dist.weight(j),
                    "layer {n} state {j}"
                );
            }
        }
    }

    #[test]
    fn limit_distribution_absorbed_start_is_fixed() {
        let chain = identity_chain(3);
        let start = Distribution::point(3, 1);
        assert_eq!(limit_distribution(&chain, &start).unwrap(), start);
    }

    #[test]
    fn limit_distribution_rejects_cycles() {
        let swap = MarkovChain::from_dense(
            vec!["a".into(), "b".into()],
            vec![vec![Prob::zero(), Prob::one()], vec![Prob::one(), Prob::zero()]],
        )
        .unwrap();
        assert!(matches!(
            limit_distribution(&swap, &Distribution::point(2, 0)),
            Err(Error::NoAbsorbingLimit { .. })
        ));
    }

    #[test]
    fn limit_distribution_gamblers_ruin() {
        // 0 and 2 absorbing, from 1 fair steps: limit (1/2, 0, 1/2).
        let chain = MarkovChain::from_dense(
            vec!["0".into(), "1".into(), "2".into()],
            vec![
                vec![Prob::one(), Prob::zero(), Prob::zero()],
                vec![p(1, 2), Prob::zero(), p(1, 2)],
                vec![Prob::zero(), Prob::zero(), Prob::one()],
            ],
        )
        .unwrap();
        let limit = limit_distribution(&chain, &Distribution::point(3, 1)).unwrap();
        assert_eq!(limit.weight(0), &p(1, 2));
        assert_eq!(limit.weight(2), &p(1, 2));
    }

    #[test]
    fn stationary_two_state_is_uniform() {
        let chain = two_state(p(1, 4));
        let pi = stationary_distribution(&chain).unwrap();
        assert_eq!(pi, Distribution::uniform(2));
        assert!(stationary_distribution(&identity_chain(2)).is_err());
    }

    #[test]
    fn chain_file_round_trip() {
        let chain = two_state(p(7, 10));
        let json = chain.to_json();
        let back = MarkovChain::from_json(&json).unwrap();
        assert_eq!(chain, back);

        let bad = r#"{"states":["a","b"],
            "transitions":[{"from":"a","to":"b","p":"9/10"},
                           {"from":"b","to":"b","p":"1"}]}"#;
        assert!(matches!(
            MarkovChain::from_json(bad),
            Err(Error::RowSumNotOne { ref state, .. }) if state == "a"
        ));
    }
}
