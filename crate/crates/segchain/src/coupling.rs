//! Couplings of two copies of a Markov chain.
//!
//! Two representations are provided, because both appear naturally:
//!
//! - [`CouplingKernel`]: the pair process as a (possibly time-dependent)
//!   Markov chain on `S x S`, with a designated start pair. This is the shape
//!   of explicit hand-built couplings.
//! - [`TrajectoryCoupling`]: a joint distribution over whole trajectory
//!   pairs, the shape delivered by the flow-based optimal couplings.
//!
//! A kernel converts to a trajectory coupling over any finite horizon; the
//! reverse direction loses information and is not provided.
//!
//! Faithfulness is the property that makes the sticky transformation sound:
//! conditioned on the current *pair*, each coordinate must move exactly by
//! the base kernel. Faithfulness is checked only at pair states reachable
//! from the start (the defining conditional probabilities are meaningless on
//! null events). Couplings that are correct only in the aggregate sense
//! (each coordinate is a copy of the chain, but its conditional law given
//! the pair is distorted) are exactly the interesting ones here, and
//! [`CouplingKernel::check_marginal_correctness`] verifies that weaker
//! property by exact forward propagation.

use std::collections::{BTreeMap, BTreeSet};

use num::{BigRational, One, Zero};
use serde::{Deserialize, Serialize};

use crate::chain::{evolve, tv_distance, Distribution, MarkovChain};
use crate::error::{Error, Result};
use crate::exact::min_exponent_reaching;
use crate::prob::Prob;

type Pair = (usize, usize);

/// One transition row of a pair kernel: successors with exact probabilities.
type PairRow = Vec<(Pair, Prob)>;

/// A joint transition kernel on pair states.
#[derive(Debug, Clone)]
pub(crate) struct PairKernel {
    rows: BTreeMap<Pair, PairRow>,
}

impl PairKernel {
    fn validate(&self, chain: &MarkovChain) -> Result<()> {
        for (&(x, y), row) in &self.rows {
            let mut sum = BigRational::zero();
            for (_, p) in row {
                sum += p.ratio();
            }
            if !sum.is_one() {
                return Err(Error::KernelRowSumNotOne {
                    x: chain.label(x).to_string(),
                    y: chain.label(y).to_string(),
                    sum: sum.to_string(),
                });
            }
        }
        Ok(())
    }

    fn row(&self, pair: Pair) -> Option<&PairRow> {
        self.rows.get(&pair)
    }
}

/// A Markovian coupling: the pair process is itself a Markov chain, not
/// necessarily time-homogeneous, started at a designated state pair.
#[derive(Debug, Clone)]
pub struct CouplingKernel {
    chain: MarkovChain,
    start: Pair,
    steps: KernelSteps,
}

#[derive(Debug, Clone)]
enum KernelSteps {
    Homogeneous(PairKernel),
    /// One kernel per time step; the coupling is defined up to `len()` steps.
    PerStep(Vec<PairKernel>),
}

/// Location of a faithfulness violation: the reachable pair whose conditional
/// coordinate law differs from the base kernel.
#[derive(Debug, Clone)]
pub struct FaithfulnessWitness {
    /// Step index for time-dependent kernels; `None` for homogeneous ones.
    pub step: Option<usize>,
    pub pair: (String, String),
    /// Which coordinate's law is distorted, `'X'` or `'Y'`.
    pub coordinate: char,
    /// Successor state at which the laws differ.
    pub successor: String,
    /// Base-kernel probability of that successor.
    pub expected: String,
    /// Conditional probability under the coupling.
    pub got: String,
}

impl std::fmt::Display for FaithfulnessWitness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "pair ({}, {}){}: {}-law gives {} to {}, base kernel gives {}",
            self.pair.0,
            self.pair.1,
            self.step.map(|t| format!(" at step {t}")).unwrap_or_default(),
            self.coordinate,
            self.got,
            self.successor,
            self.expected,
        )
    }
}

/// Outcome of a faithfulness check.
#[derive(Debug, Clone)]
pub struct FaithfulnessReport {
    pub faithful: bool,
    pub witness: Option<FaithfulnessWitness>,
}

impl CouplingKernel {
    /// The independent product coupling: both coordinates move by the base
    /// kernel with no correlation. Faithful by construction.
    pub fn independent(chain: &MarkovChain, x: &str, y: &str) -> Result<Self> {
        let start = (chain.state_index(x)?, chain.state_index(y)?);
        let n = chain.n_states();
        let mut rows = BTreeMap::new();
        for a in 0..n {
            for b in 0..n {
                let mut row = Vec::new();
                for (a2, pa) in chain.row(a) {
                    for (b2, pb) in chain.row(b) {
                        row.push(((*a2, *b2), pa.mul(pb)));
                    }
                }
                rows.insert((a, b), row);
            }
        }
        Ok(CouplingKernel {
            chain: chain.clone(),
            start,
            steps: KernelSteps::Homogeneous(PairKernel { rows }),
        })
    }

    /// Builds a time-homogeneous coupling from labeled pair transitions.
    pub fn from_transitions(
        chain: &MarkovChain,
        start: (&str, &str),
        transitions: Vec<((String, String), (String, String), Prob)>,
    ) -> Result<Self> {
        let kernel = build_pair_kernel(chain, transitions)?;
        kernel.validate(chain)?;
        Ok(CouplingKernel {
            chain: chain.clone(),
            start: (chain.state_index(start.0)?, chain.state_index(start.1)?),
            steps: KernelSteps::Homogeneous(kernel),
        })
    }

    /// Builds a time-dependent coupling: `per_step[t]` drives step `t`.
    pub fn from_transitions_per_step(
        chain: &MarkovChain,
        start: (&str, &str),
        per_step: Vec<Vec<((String, String), (String, String), Prob)>>,
    ) -> Result<Self> {
        let mut kernels = Vec::with_capacity(per_step.len());
        for transitions in per_step {
            let kernel = build_pair_kernel(chain, transitions)?;
            kernel.validate(chain)?;
            kernels.push(kernel);
        }
        Ok(CouplingKernel {
            chain: chain.clone(),
            start: (chain.state_index(start.0)?, chain.state_index(start.1)?),
            steps: KernelSteps::PerStep(kernels),
        })
    }

    pub(crate) fn from_parts(
        chain: MarkovChain,
        start: Pair,
        rows: BTreeMap<Pair, PairRow>,
    ) -> Result<Self> {
        let kernel = PairKernel { rows };
        kernel.validate(&chain)?;
        Ok(CouplingKernel {
            chain,
            start,
            steps: KernelSteps::Homogeneous(kernel),
        })
    }

    pub fn chain(&self) -> &MarkovChain {
        &self.chain
    }

    pub fn start(&self) -> (&str, &str) {
        (self.chain.label(self.start.0), self.chain.label(self.start.1))
    }

    /// Number of defined steps for time-dependent couplings, `None` when the
    /// kernel is time-homogeneous (defined for every horizon).
    pub fn defined_steps(&self) -> Option<usize> {
        match &self.steps {
            KernelSteps::Homogeneous(_) => None,
            KernelSteps::PerStep(ks) => Some(ks.len()),
        }
    }

    fn kernel_at(&self, t: usize) -> Result<&PairKernel> {
        match &self.steps {
            KernelSteps::Homogeneous(k) => Ok(k),
            KernelSteps::PerStep(ks) => ks.get(t).ok_or(Error::HorizonMismatch {
                expected: ks.len(),
                got: t + 1,
            }),
        }
    }

    fn row_at(&self, t: usize, pair: Pair) -> Result<&PairRow> {
        self.kernel_at(t)?.row(pair).ok_or_else(|| Error::MissingKernelRow {
            x: self.chain.label(pair.0).to_string(),
            y: self.chain.label(pair.1).to_string(),
            step: t,
        })
    }

    /// Pair states reachable at each step, starting from the start pair.
    /// For homogeneous kernels the list covers the reachability closure
    /// (one entry per BFS level until stable).
    fn reachable_levels(&self) -> Result<Vec<BTreeSet<Pair>>> {
        let mut levels: Vec<BTreeSet<Pair>> = vec![[self.start].into_iter().collect()];
        match &self.steps {
            KernelSteps::PerStep(ks) => {
                for t in 0..ks.len() {
                    let mut next = BTreeSet::new();
                    for &pair in &levels[t] {
                        for (succ, p) in self.row_at(t, pair)? {
                            if !p.is_zero() {
                                next.insert(*succ);
                            }
                        }
                    }
                    levels.push(next);
                }
            }
            KernelSteps::Homogeneous(_) => {
                let mut seen: BTreeSet<Pair> = levels[0].clone();
                loop {
                    let last = levels.last().unwrap();
                    let mut next = BTreeSet::new();
                    for &pair in last {
                        for (succ, p) in self.row_at(0, pair)? {
                            if !p.is_zero() && !seen.contains(succ) {
                                next.insert(*succ);
                            }
                        }
                    }
                    if next.is_empty() {
                        break;
                    }
                    seen.extend(next.iter().copied());
                    levels.push(next);
                }
            }
        }
        Ok(levels)
    }

    /// Checks faithfulness: at every reachable pair the conditional law of
    /// each coordinate must equal the base kernel, exactly. On failure the
    /// report carries a violating pair and successor.
    pub fn check_faithful(&self) -> Result<FaithfulnessReport> {
        let levels = self.reachable_levels()?;
        let per_step = matches!(self.steps, KernelSteps::PerStep(_));
        for (t, level) in levels.iter().enumerate() {
            if per_step && t >= self.defined_steps().unwrap_or(0) {
                break;
            }
            let step = if per_step { t } else { 0 };
            for &pair in level {
                let row = self.row_at(step, pair)?;
                for (coordinate, state) in [('X', pair.0), ('Y', pair.1)] {
                    let mut law: BTreeMap<usize, BigRational> = BTreeMap::new();
                    for ((x2, y2), p) in row {
                        let succ = if coordinate == 'X' { *x2 } else { *y2 };
                        *law.entry(succ).or_insert_with(BigRational::zero) += p.ratio();
                    }
                    if let Some(witness) = law_mismatch(&self.chain, state, &law) {
                        return Ok(FaithfulnessReport {
                            faithful: false,
                            witness: Some(FaithfulnessWitness {
                                step: per_step.then_some(t),
                                pair: (
                                    self.chain.label(pair.0).to_string(),
                                    self.chain.label(pair.1).to_string(),
                                ),
                                coordinate,
                                successor: self.chain.label(witness.0).to_string(),
                                expected: witness.1.to_string(),
                                got: witness.2.to_string(),
                            }),
                        });
                    }
                }
            }
            if !per_step && t + 1 == levels.len() {
                break;
            }
        }
        Ok(FaithfulnessReport { faithful: true, witness: None })
    }

    /// Rewires every diagonal pair `(s, s)` to move both coordinates together
    /// by the base kernel, leaving off-diagonal rows unchanged. The result is
    /// a sticky coupling: once the copies meet they stay identical forever.
    ///
    /// Only faithful couplings may be transformed: for a non-faithful
    /// coupling the altered coordinate process would no longer be a copy of
    /// the chain. Faithfulness is checked first.
    pub fn make_sticky(&self) -> Result<CouplingKernel> {
        let report = self.check_faithful()?;
        if let Some(witness) = report.witness {
            return Err(Error::NotFaithful { witness: witness.to_string() });
        }
        let synchronize = |kernel: &PairKernel| -> PairKernel {
            let mut rows = kernel.rows.clone();
            for s in 0..self.chain.n_states() {
                let row: PairRow = self
                    .chain
                    .row(s)
                    .iter()
                    .map(|(s2, p)| ((*s2, *s2), p.clone()))
                    .collect();
                rows.insert((s, s), row);
            }
            PairKernel { rows }
        };
        let steps = match &self.steps {
            KernelSteps::Homogeneous(k) => KernelSteps::Homogeneous(synchronize(k)),
            KernelSteps::PerStep(ks) => {
                KernelSteps::PerStep(ks.iter().map(synchronize).collect())
            }
        };
        Ok(CouplingKernel {
            chain: self.chain.clone(),
            start: self.start,
            steps,
        })
    }

    /// Joint pair distribution at each time `0..=horizon` by exact forward
    /// propagation.
    pub(crate) fn propagate(&self, horizon: usize) -> Result<Vec<BTreeMap<Pair, BigRational>>> {
        let mut current: BTreeMap<Pair, BigRational> = BTreeMap::new();
        current.insert(self.start, BigRational::one());
        let mut history = vec![current.clone()];
        for t in 0..horizon {
            let mut next: BTreeMap<Pair, BigRational> = BTreeMap::new();
            for (&pair, mass) in &current {
                for (succ, p) in self.row_at(t, pair)? {
                    if !p.is_zero() {
                        *next.entry(*succ).or_insert_with(BigRational::zero) +=
                            mass * p.ratio();
                    }
                }
            }
            history.push(next.clone());
            current = next;
        }
        Ok(history)
    }

    /// Exact law of the first meeting time up to `horizon`, by forward
    /// propagation of the not-yet-met mass.
    pub fn meeting_time_distribution(&self, horizon: usize) -> Result<MeetingTimeDistribution> {
        let mut unmet: BTreeMap<Pair, BigRational> = BTreeMap::new();
        let mut met = BigRational::zero();
        if self.start.0 == self.start.1 {
            met = BigRational::one();
        } else {
            unmet.insert(self.start, BigRational::one());
        }
        let mut cdf = vec![Prob::trusted(met.clone())];
        for t in 0..horizon {
            let mut next: BTreeMap<Pair, BigRational> = BTreeMap::new();
            for (&pair, mass) in &unmet {
                for (succ, p) in self.row_at(t, pair)? {
                    if p.is_zero() {
                        continue;
                    }
                    let moved = mass * p.ratio();
                    if succ.0 == succ.1 {
                        met += moved;
                    } else {
                        *next.entry(*succ).or_insert_with(BigRational::zero) += moved;
                    }
                }
            }
            unmet = next;
            cdf.push(Prob::trusted(met.clone()));
        }
        MeetingTimeDistribution::from_cdf(cdf)
    }

    /// Verifies that each coordinate is a copy of the chain in the aggregate
    /// sense: conditioned on the coordinate's current state (mass taken from
    /// exact forward propagation), its one-step law equals the base kernel.
    pub fn check_marginal_correctness(&self, horizon: usize) -> Result<()> {
        let history = self.propagate(horizon)?;
        for (t, dist) in history.iter().enumerate().take(horizon) {
            for coordinate in ['X', 'Y'] {
                // Conditional mass per current coordinate state.
                let mut occupancy: BTreeMap<usize, BigRational> = BTreeMap::new();
                let mut flux: BTreeMap<(usize, usize), BigRational> = BTreeMap::new();
                for (&pair, mass) in dist {
                    let state = if coordinate == 'X' { pair.0 } else { pair.1 };
                    *occupancy.entry(state).or_insert_with(BigRational::zero) += mass;
                    for (succ, p) in self.row_at(t, pair)? {
                        if p.is_zero() {
                            continue;
                        }
                        let to = if coordinate == 'X' { succ.0 } else { succ.1 };
                        *flux.entry((state, to)).or_insert_with(BigRational::zero) +=
                            mass * p.ratio();
                    }
                }
                for (&state, total) in &occupancy {
                    if total.is_zero() {
                        continue;
                    }
                    for j in 0..self.chain.n_states() {
                        let observed = flux
                            .get(&(state, j))
                            .cloned()
                            .unwrap_or_else(BigRational::zero);
                        let expected = total * self.chain.prob(state, j).ratio();
                        if observed != expected {
                            return Err(Error::MarginalViolation {
                                witness: format!(
                                    "{coordinate}-copy at step {t}: from {} to {}, \
                                     observed mass {observed}, kernel requires {expected}",
                                    self.chain.label(state),
                                    self.chain.label(j),
                                ),
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Expands the kernel into a joint distribution over trajectory pairs at
    /// a finite horizon.
    pub fn to_trajectory_coupling(&self, horizon: usize) -> Result<TrajectoryCoupling> {
        let mut pairs: Vec<(Vec<usize>, Vec<usize>, BigRational)> = Vec::new();
        let mut stack = vec![(
            vec![self.start.0],
            vec![self.start.1],
            BigRational::one(),
        )];
        while let Some((xs, ys, mass)) = stack.pop() {
            let t = xs.len() - 1;
            if t == horizon {
                pairs.push((xs, ys, mass));
                continue;
            }
            let pair = (xs[t], ys[t]);
            for (succ, p) in self.row_at(t, pair)? {
                if p.is_zero() {
                    continue;
                }
                let mut nxs = xs.clone();
                let mut nys = ys.clone();
                nxs.push(succ.0);
                nys.push(succ.1);
                stack.push((nxs, nys, &mass * p.ratio()));
            }
        }
        TrajectoryCoupling::from_pair_paths(&self.chain, horizon, pairs)
    }

    // -- file format --------------------------------------------------------

    /// Serializable form; only time-homogeneous kernels have one.
    pub fn to_file_model(&self) -> Result<CouplingFile> {
        let KernelSteps::Homogeneous(kernel) = &self.steps else {
            return Err(Error::InvalidParameter {
                name: "kernel",
                reason: "time-dependent coupling kernels have no file form".into(),
            });
        };
        let label = |i: usize| self.chain.label(i).to_string();
        let mut transitions = Vec::new();
        for (&(x, y), row) in &kernel.rows {
            for ((x2, y2), p) in row {
                transitions.push(CouplingTransitionRecord {
                    from: [label(x), label(y)],
                    to: [label(*x2), label(*y2)],
                    p: p.to_string(),
                });
            }
        }
        Ok(CouplingFile {
            start: [label(self.start.0), label(self.start.1)],
            transitions,
        })
    }

    pub fn from_file_model(chain: &MarkovChain, file: CouplingFile) -> Result<Self> {
        let transitions = file
            .transitions
            .into_iter()
            .map(|t| {
                let p: Prob = t.p.parse()?;
                let [fx, fy] = t.from;
                let [tx, ty] = t.to;
                Ok(((fx, fy), (tx, ty), p))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_transitions(chain, (&file.start[0], &file.start[1]), transitions)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file_model()?).expect("serializes"))
    }

    pub fn from_json(chain: &MarkovChain, json: &str) -> Result<Self> {
        let file: CouplingFile = serde_json::from_str(json)?;
        Self::from_file_model(chain, file)
    }
}

/// Compares an aggregated successor law against the base kernel row of
/// `state`; returns the first differing successor as (state, expected, got).
fn law_mismatch(
    chain: &MarkovChain,
    state: usize,
    law: &BTreeMap<usize, BigRational>,
) -> Option<(usize, BigRational, BigRational)> {
    for j in 0..chain.n_states() {
        let got = law.get(&j).cloned().unwrap_or_else(BigRational::zero);
        let expected = chain.prob(state, j).into_ratio();
        if got != expected {
            return Some((j, expected, got));
        }
    }
    None
}

fn build_pair_kernel(
    chain: &MarkovChain,
    transitions: Vec<((String, String), (String, String), Prob)>,
) -> Result<PairKernel> {
    let mut rows: BTreeMap<Pair, PairRow> = BTreeMap::new();
    for ((fx, fy), (tx, ty), p) in transitions {
        let from = (chain.state_index(&fx)?, chain.state_index(&fy)?);
        let to = (chain.state_index(&tx)?, chain.state_index(&ty)?);
        if p.is_zero() {
            rows.entry(from).or_default();
            continue;
        }
        let row = rows.entry(from).or_default();
        if row.iter().any(|(succ, _)| *succ == to) {
            return Err(Error::DuplicateTransition {
                from: format!("({fx}, {fy})"),
                to: format!("({tx}, {ty})"),
            });
        }
        row.push((to, p));
    }
    Ok(PairKernel { rows })
}

// ---------------------------------------------------------------------------
// Trajectory-pair couplings
// ---------------------------------------------------------------------------

/// A coupling given extensionally: exact mass on each pair of trajectories.
#[derive(Debug, Clone)]
pub struct TrajectoryCoupling {
    chain: MarkovChain,
    horizon: usize,
    x_paths: Vec<Vec<usize>>,
    y_paths: Vec<Vec<usize>>,
    /// Positive masses keyed by (x-path index, y-path index).
    mass: BTreeMap<(usize, usize), BigRational>,
}

impl TrajectoryCoupling {
    /// Builds from explicit trajectory pairs, interning distinct paths.
    /// Masses must be positive and sum to exactly 1.
    pub fn from_pair_paths(
        chain: &MarkovChain,
        horizon: usize,
        pairs: Vec<(Vec<usize>, Vec<usize>, BigRational)>,
    ) -> Result<Self> {
        let mut x_paths: Vec<Vec<usize>> = Vec::new();
        let mut y_paths: Vec<Vec<usize>> = Vec::new();
        let mut x_lookup: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        let mut y_lookup: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        let mut mass: BTreeMap<(usize, usize), BigRational> = BTreeMap::new();
        let mut total = BigRational::zero();
        for (xs, ys, m) in pairs {
            if xs.len() != horizon + 1 || ys.len() != horizon + 1 {
                return Err(Error::HorizonMismatch {
                    expected: horizon + 1,
                    got: xs.len().min(ys.len()),
                });
            }
            if m.is_zero() {
                continue;
            }
            total += &m;
            let xi = *x_lookup.entry(xs.clone()).or_insert_with(|| {
                x_paths.push(xs.clone());
                x_paths.len() - 1
            });
            let yi = *y_lookup.entry(ys.clone()).or_insert_with(|| {
                y_paths.push(ys.clone());
                y_paths.len() - 1
            });
            *mass.entry((xi, yi)).or_insert_with(BigRational::zero) += m;
        }
        if !total.is_one() {
            return Err(Error::WeightSumNotOne { sum: total.to_string() });
        }
        Ok(TrajectoryCoupling {
            chain: chain.clone(),
            horizon,
            x_paths,
            y_paths,
            mass,
        })
    }

    pub fn chain(&self) -> &MarkovChain {
        &self.chain
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn x_paths(&self) -> &[Vec<usize>] {
        &self.x_paths
    }

    pub fn y_paths(&self) -> &[Vec<usize>] {
        &self.y_paths
    }

    pub fn masses(&self) -> impl Iterator<Item = (&(usize, usize), &BigRational)> {
        self.mass.iter()
    }

    /// Exact probability of a path under the base kernel.
    pub fn path_probability(&self, path: &[usize]) -> BigRational {
        path.windows(2)
            .map(|w| self.chain.prob(w[0], w[1]).into_ratio())
            .fold(BigRational::one(), |acc, p| acc * p)
    }

    /// Verifies marginal correctness exactly: for each x-trajectory the mass
    /// summed over y-trajectories must equal its exact path probability, and
    /// symmetrically. All paths of each side must share their start state.
    pub fn validate_marginals(&self) -> Result<()> {
        for (paths, axis) in [(&self.x_paths, 'X'), (&self.y_paths, 'Y')] {
            if let Some(first) = paths.first() {
                if paths.iter().any(|p| p[0] != first[0]) {
                    return Err(Error::MarginalViolation {
                        witness: format!("{axis}-trajectories do not share a start state"),
                    });
                }
            }
        }
        let mut x_sums = vec![BigRational::zero(); self.x_paths.len()];
        let mut y_sums = vec![BigRational::zero(); self.y_paths.len()];
        for (&(xi, yi), m) in &self.mass {
            x_sums[xi] += m;
            y_sums[yi] += m;
        }
        for (axis, paths, sums) in [
            ('X', &self.x_paths, &x_sums),
            ('Y', &self.y_paths, &y_sums),
        ] {
            for (path, sum) in paths.iter().zip(sums) {
                let expected = self.path_probability(path);
                if *sum != expected {
                    return Err(Error::MarginalViolation {
                        witness: format!(
                            "{axis}-trajectory {} has mass {sum}, path probability {expected}",
                            self.format_path(path),
                        ),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn format_path(&self, path: &[usize]) -> String {
        path.iter()
            .map(|&s| self.chain.label(s))
            .collect::<Vec<_>>()
            .join("->")
    }

    /// Exact law of the first meeting time: mass of trajectory pairs that
    /// share a state by each time.
    pub fn meeting_time_distribution(&self) -> MeetingTimeDistribution {
        let mut met_at = vec![BigRational::zero(); self.horizon + 1];
        for (&(xi, yi), m) in &self.mass {
            let xs = &self.x_paths[xi];
            let ys = &self.y_paths[yi];
            if let Some(t) = (0..=self.horizon).find(|&t| xs[t] == ys[t]) {
                met_at[t] += m;
            }
        }
        let mut cdf = Vec::with_capacity(self.horizon + 1);
        let mut acc = BigRational::zero();
        for met in met_at {
            acc += met;
            cdf.push(Prob::trusted(acc.clone()));
        }
        MeetingTimeDistribution::from_cdf(cdf).expect("cumulative masses are monotone")
    }

    /// Checks the sticky property: on every positive-mass pair, once the
    /// trajectories coincide they coincide forever.
    pub fn is_sticky(&self) -> bool {
        self.mass.keys().all(|&(xi, yi)| {
            let xs = &self.x_paths[xi];
            let ys = &self.y_paths[yi];
            match (0..=self.horizon).find(|&t| xs[t] == ys[t]) {
                Some(first) => (first..=self.horizon).all(|t| xs[t] == ys[t]),
                None => true,
            }
        })
    }

    /// CSV export: `x_path,y_path,mass` with `->`-joined label paths.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x_path,y_path,mass\n");
        for (&(xi, yi), m) in &self.mass {
            out.push_str(&format!(
                "{},{},{}\n",
                self.format_path(&self.x_paths[xi]),
                self.format_path(&self.y_paths[yi]),
                m,
            ));
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Meeting-time distributions and the classical bounds
// ---------------------------------------------------------------------------

/// Cumulative law of the first meeting time `tau` over a finite horizon:
/// entry `t` is `P(tau <= t)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeetingTimeDistribution {
    cdf: Vec<Prob>,
}

impl MeetingTimeDistribution {
    pub fn from_cdf(cdf: Vec<Prob>) -> Result<Self> {
        if cdf.is_empty() {
            return Err(Error::InvalidParameter {
                name: "cdf",
                reason: "must cover at least time 0".into(),
            });
        }
        for w in cdf.windows(2) {
            if w[1] < w[0] {
                return Err(Error::InvalidParameter {
                    name: "cdf",
                    reason: format!("not non-decreasing: {} then {}", w[0], w[1]),
                });
            }
        }
        Ok(MeetingTimeDistribution { cdf })
    }

    pub fn horizon(&self) -> usize {
        self.cdf.len() - 1
    }

    pub fn cdf(&self) -> &[Prob] {
        &self.cdf
    }

    /// `P(tau <= t)`.
    pub fn at(&self, t: usize) -> &Prob {
        &self.cdf[t]
    }

    /// First time the meeting probability reaches 1, if it does.
    pub fn certain_by(&self) -> Option<usize> {
        self.cdf.iter().position(Prob::is_one)
    }

    /// CSV export: `t,cdf,cdf_float`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,cdf,cdf_float\n");
        for (t, p) in self.cdf.iter().enumerate() {
            out.push_str(&format!("{t},{},{}\n", p, p.to_f64()));
        }
        out
    }
}

/// Outcome of comparing an exact total variation distance against a
/// coupling-derived upper bound.
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub tv: Prob,
    pub bound: Prob,
    pub pass: bool,
}

/// The coupling inequality, valid for faithful couplings:
/// `TV(P^n(x,.), P^n(y,.)) <= 1 - P(tau <= n)`.
///
/// The caller is responsible for having verified faithfulness of the
/// coupling behind `mtd`; a failing report on a verified-faithful coupling
/// indicates an implementation bug, not a mathematical possibility.
pub fn coupling_inequality_check(
    chain: &MarkovChain,
    x: &str,
    y: &str,
    mtd: &MeetingTimeDistribution,
    n: usize,
) -> Result<BoundReport> {
    let bound = mtd_bound(mtd, n, false)?;
    bound_report(chain, x, y, n, bound)
}

/// The universal bound, valid for *any* coupling regardless of faithfulness
/// or the Markov property: `TV(P^n(x,.), P^n(y,.)) <= 1 - P(tau <= n) / 2`.
pub fn segregation_bound_check(
    chain: &MarkovChain,
    x: &str,
    y: &str,
    mtd: &MeetingTimeDistribution,
    n: usize,
) -> Result<BoundReport> {
    let bound = mtd_bound(mtd, n, true)?;
    bound_report(chain, x, y, n, bound)
}

fn mtd_bound(mtd: &MeetingTimeDistribution, n: usize, halved: bool) -> Result<Prob> {
    if n > mtd.horizon() {
        return Err(Error::HorizonMismatch { expected: mtd.horizon(), got: n });
    }
    let met = mtd.at(n).ratio();
    let bound = if halved {
        BigRational::one() - met / BigRational::from_integer(2.into())
    } else {
        BigRational::one() - met
    };
    Ok(Prob::trusted(bound))
}

fn bound_report(
    chain: &MarkovChain,
    x: &str,
    y: &str,
    n: usize,
    bound: Prob,
) -> Result<BoundReport> {
    let m = chain.n_states();
    let from_x = evolve(chain, &Distribution::point(m, chain.state_index(x)?), n as u64)?;
    let from_y = evolve(chain, &Distribution::point(m, chain.state_index(y)?), n as u64)?;
    let tv = tv_distance(&from_x, &from_y)?;
    let pass = tv <= bound;
    Ok(BoundReport { tv, bound, pass })
}

/// Mixing-time bound from meeting probabilities: if some coupling of copies
/// started at any pair meets by time `n` with probability at least `alpha`,
/// then `t_mix <= n * ceil(log(1/4) / log(1 - alpha/2))`.
///
/// The ceiling is evaluated exactly: the smallest integer `k` with
/// `(1 - alpha/2)^k <= 1/4` is located by rigorous interval-arithmetic
/// comparisons, so no floating-point rounding can shift the result.
pub fn mixing_time_upper_bound(n: u64, alpha: &Prob) -> Result<u64> {
    if alpha.is_zero() {
        return Err(Error::InvalidParameter {
            name: "alpha",
            reason: "meeting probability must be positive".into(),
        });
    }
    let quarter = BigRational::new(1.into(), 4.into());
    let base = BigRational::one() - alpha.ratio() / BigRational::from_integer(2.into());
    // alpha = 1 gives base 1/2, the one case where the power hits 1/4 exactly.
    let k = if base == BigRational::new(1.into(), 2.into()) {
        2
    } else {
        min_exponent_reaching(&base, &quarter)
    };
    n.checked_mul(k).ok_or(Error::InvalidParameter {
        name: "n",
        reason: "bound overflows u64".into(),
    })
}

// ---------------------------------------------------------------------------
// File format
// ---------------------------------------------------------------------------

/// Serialized time-homogeneous coupling kernel: pair transitions with
/// rational probability strings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CouplingFile {
    pub start: [String; 2],
    pub transitions: Vec<CouplingTransitionRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CouplingTransitionRecord {
    pub from: [String; 2],
    pub to: [String; 2],
    pub p: String,
}
