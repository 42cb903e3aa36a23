//! Separating sequences and exact separation values.
//!
//! A separating sequence assigns a state subset `A_t` to every time
//! `0..=T`. Its separation for a start pair `(x, y)` is
//!
//! ```text
//! S(x, y) = P(X_t in A_t for all t | X_0 = x)
//!         + P(X_t not in A_t for all t | X_0 = y)
//! ```
//!
//! computed exactly by alternating kernel application with restriction to
//! `A_t` (respectively its complement), starting with the restriction at
//! time 0. Separation is the dual side of optimal meeting probabilities:
//! maximizing it over all sequences gives exactly `2 - C_T(x, y)`.
//!
//! Subsets are stored as 64-bit masks, which caps the state space at 64
//! states; brute-force enumeration makes anything larger hopeless anyway.

use num::{BigRational, One, Zero};
use serde::{Deserialize, Serialize};

use crate::chain::MarkovChain;
use crate::error::{Error, Result};
use crate::exact::{add_scaled, ScaledMatrix};
use crate::prob::Prob;

const MAX_STATES: usize = 64;

/// A time-indexed sequence of state subsets `A_0..A_T` over a fixed state
/// space, stored as bitmasks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeparatingSequence {
    n_states: usize,
    sets: Vec<u64>,
}

impl SeparatingSequence {
    pub fn new(n_states: usize, sets: Vec<u64>) -> Result<Self> {
        if n_states == 0 || n_states > MAX_STATES {
            return Err(Error::StateSpaceTooLarge { n: n_states, max: MAX_STATES });
        }
        if sets.is_empty() {
            return Err(Error::InvalidParameter {
                name: "sets",
                reason: "a separating sequence covers at least time 0".into(),
            });
        }
        let space = space_mask(n_states);
        if let Some(bad) = sets.iter().find(|&&m| m & !space != 0) {
            return Err(Error::InvalidParameter {
                name: "sets",
                reason: format!("mask {bad:#x} uses states beyond index {}", n_states - 1),
            });
        }
        Ok(SeparatingSequence { n_states, sets })
    }

    /// The constant sequence repeating `set` at every time `0..=horizon`.
    pub fn constant(n_states: usize, set: u64, horizon: usize) -> Result<Self> {
        Self::new(n_states, vec![set; horizon + 1])
    }

    /// The trivial sequence `A_t = S` for all `t`.
    pub fn full(n_states: usize, horizon: usize) -> Result<Self> {
        Self::constant(n_states, space_mask(n_states), horizon)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    /// The horizon `T`; the sequence has `T + 1` sets.
    pub fn horizon(&self) -> usize {
        self.sets.len() - 1
    }

    pub fn masks(&self) -> &[u64] {
        &self.sets
    }

    pub fn contains(&self, t: usize, state: usize) -> bool {
        self.sets[t] & (1 << state) != 0
    }

    /// Index-shifted sequence: the new `A_t` is the old `A_{(t + a) mod (T + 1)}`.
    pub fn cyclic_shift(&self, offset: usize) -> Result<Self> {
        let len = self.sets.len();
        if offset >= len {
            return Err(Error::ShiftOutOfRange { offset, max: len - 1 });
        }
        let mut sets = Vec::with_capacity(len);
        for t in 0..len {
            sets.push(self.sets[(t + offset) % len]);
        }
        Ok(SeparatingSequence { n_states: self.n_states, sets })
    }

    pub fn to_file_model(&self, chain: &MarkovChain) -> SequenceFile {
        let sets = self
            .sets
            .iter()
            .map(|&mask| {
                (0..self.n_states)
                    .filter(|&i| mask & (1 << i) != 0)
                    .map(|i| chain.label(i).to_string())
                    .collect()
            })
            .collect();
        SequenceFile { sets }
    }

    pub fn from_file_model(chain: &MarkovChain, file: SequenceFile) -> Result<Self> {
        let mut sets = Vec::with_capacity(file.sets.len());
        for labels in &file.sets {
            let mut mask = 0u64;
            for label in labels {
                mask |= 1 << chain.state_index(label)?;
            }
            sets.push(mask);
        }
        Self::new(chain.n_states(), sets)
    }
}

fn space_mask(n_states: usize) -> u64 {
    if n_states == 64 {
        u64::MAX
    } else {
        (1u64 << n_states) - 1
    }
}

/// Serialized separating sequence: one array of state labels per time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SequenceFile {
    pub sets: Vec<Vec<String>>,
}

/// Exact separation value of a sequence, with its two summands.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeparationReport {
    /// `summand_x + summand_y`, in `[0, 2]`.
    pub value: BigRational,
    /// Confinement probability of the x-copy inside the sequence.
    pub summand_x: Prob,
    /// Confinement probability of the y-copy outside the sequence.
    pub summand_y: Prob,
    /// Both summands positive.
    pub nontrivial: bool,
}

impl SeparationReport {
    fn from_summands(sx: BigRational, sy: BigRational) -> Self {
        let value = &sx + &sy;
        let nontrivial = !sx.is_zero() && !sy.is_zero();
        SeparationReport {
            value,
            summand_x: Prob::trusted(sx),
            summand_y: Prob::trusted(sy),
            nontrivial,
        }
    }
}

/// Exact separation of `seq` for copies started at `x` and `y`.
pub fn separation_value(
    chain: &MarkovChain,
    x: &str,
    y: &str,
    seq: &SeparatingSequence,
) -> Result<SeparationReport> {
    if seq.n_states() != chain.n_states() {
        return Err(Error::DimensionMismatch {
            expected: chain.n_states(),
            got: seq.n_states(),
        });
    }
    let n = chain.n_states();
    let xi = chain.state_index(x)?;
    let yi = chain.state_index(y)?;

    let mut vx = restricted_point(n, xi, seq.masks()[0]);
    let mut vy = restricted_point(n, yi, !seq.masks()[0]);
    for &mask in &seq.masks()[1..] {
        vx = step_restricted(chain, &vx, mask);
        vy = step_restricted(chain, &vy, !mask);
    }
    Ok(SeparationReport::from_summands(sum(&vx), sum(&vy)))
}

fn restricted_point(n: usize, state: usize, mask: u64) -> Vec<BigRational> {
    let mut v = vec![BigRational::zero(); n];
    if mask & (1 << state) != 0 {
        v[state] = BigRational::one();
    }
    v
}

/// One kernel application followed by restriction to `mask`.
fn step_restricted(chain: &MarkovChain, v: &[BigRational], mask: u64) -> Vec<BigRational> {
    let mut next = vec![BigRational::zero(); chain.n_states()];
    for (i, w) in v.iter().enumerate() {
        if w.is_zero() {
            continue;
        }
        for (j, p) in chain.row(i) {
            if mask & (1 << *j) != 0 {
                next[*j] += w * p.ratio();
            }
        }
    }
    next
}

fn sum(v: &[BigRational]) -> BigRational {
    v.iter().fold(BigRational::zero(), |acc, w| acc + w)
}

/// Which sequences a brute-force search ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SequenceFamily {
    /// Every subset sequence.
    All,
    /// Sequences whose two summands are both positive.
    Nontrivial,
    /// Sequences with `x in A_t` and `y not in A_t` at every time.
    BoundaryRespecting,
}

/// Budget for exhaustive sequence enumeration, counted in evaluated leaves.
#[derive(Debug, Clone, Copy)]
pub struct EnumerationBudget {
    pub max_leaves: u64,
}

impl Default for EnumerationBudget {
    fn default() -> Self {
        EnumerationBudget { max_leaves: 1 << 26 }
    }
}

/// Exact optimal separation by exhaustive search over subset sequences.
///
/// The search walks time levels depth-first carrying the two restricted
/// vectors, pruning branches whose remaining value is identically zero.
/// There are `(2^|S|)^(T+1)` candidate sequences; the budget bounds the
/// number of fully evaluated ones. Ties between maximizers are broken
/// toward the lexicographically smallest mask sequence, which makes results
/// reproducible. With [`SequenceFamily::Nontrivial`] the maximum is taken
/// over non-trivial sequences only and an error is returned when none exist.
pub fn brute_force_optimal_separation(
    chain: &MarkovChain,
    x: &str,
    y: &str,
    horizon: usize,
    family: SequenceFamily,
    budget: EnumerationBudget,
) -> Result<(SeparationReport, SeparatingSequence)> {
    let n = chain.n_states();
    if n > MAX_STATES {
        return Err(Error::StateSpaceTooLarge { n, max: MAX_STATES });
    }
    let xi = chain.state_index(x)?;
    let yi = chain.state_index(y)?;

    let mut search = Search {
        chain,
        family,
        xi,
        yi,
        horizon,
        budget: budget.max_leaves,
        leaves: 0,
        best: None,
        stack_masks: Vec::with_capacity(horizon + 1),
    };
    search.descend(None, None, 0)?;

    match search.best {
        Some((value, sx, sy, masks)) => {
            let seq = SeparatingSequence::new(n, masks)?;
            let report = SeparationReport::from_summands(sx, sy);
            debug_assert_eq!(report.value, value);
            Ok((report, seq))
        }
        None => match family {
            SequenceFamily::Nontrivial => Err(Error::NoNontrivialSequence),
            // Every candidate was pruned at value zero; return the
            // lexicographically smallest member of the family.
            SequenceFamily::All => {
                let seq = SeparatingSequence::constant(n, 0, horizon)?;
                let report = separation_value(chain, x, y, &seq)?;
                Ok((report, seq))
            }
            SequenceFamily::BoundaryRespecting => {
                let seq = SeparatingSequence::constant(n, 1 << xi, horizon)?;
                let report = separation_value(chain, x, y, &seq)?;
                Ok((report, seq))
            }
        },
    }
}

struct Search<'a> {
    chain: &'a MarkovChain,
    family: SequenceFamily,
    xi: usize,
    yi: usize,
    horizon: usize,
    budget: u64,
    leaves: u64,
    best: Option<(BigRational, BigRational, BigRational, Vec<u64>)>,
    stack_masks: Vec<u64>,
}

impl Search<'_> {
    fn descend(
        &mut self,
        vx: Option<&[BigRational]>,
        vy: Option<&[BigRational]>,
        depth: usize,
    ) -> Result<()> {
        let n = self.chain.n_states();
        let space = space_mask(n);
        let mut mask: u64 = 0;
        loop {
            let admissible = match self.family {
                SequenceFamily::All | SequenceFamily::Nontrivial => true,
                SequenceFamily::BoundaryRespecting => {
                    mask & (1 << self.xi) != 0 && mask & (1 << self.yi) == 0
                }
            };
            if admissible {
                let (nvx, nvy) = match (vx, vy) {
                    (None, None) => (
                        restricted_point(n, self.xi, mask),
                        restricted_point(n, self.yi, !mask),
                    ),
                    (Some(vx), Some(vy)) => (
                        step_restricted(self.chain, vx, mask),
                        step_restricted(self.chain, vy, !mask),
                    ),
                    _ => unreachable!(),
                };
                let sx = sum(&nvx);
                let sy = sum(&nvy);
                let prune = match self.family {
                    SequenceFamily::Nontrivial => sx.is_zero() || sy.is_zero(),
                    _ => sx.is_zero() && sy.is_zero(),
                };
                if !prune {
                    self.stack_masks.push(mask);
                    if depth == self.horizon {
                        self.leaves += 1;
                        if self.leaves > self.budget {
                            return Err(Error::EnumerationBudgetExceeded {
                                budget: self.budget,
                            });
                        }
                        let value = &sx + &sy;
                        let improved = match &self.best {
                            Some((best, ..)) => value > *best,
                            None => true,
                        };
                        if improved {
                            self.best = Some((value, sx, sy, self.stack_masks.clone()));
                        }
                    } else {
                        self.descend(Some(&nvx), Some(&nvy), depth + 1)?;
                    }
                    self.stack_masks.pop();
                }
            }
            if mask == space {
                break;
            }
            mask += 1;
        }
        Ok(())
    }
}

/// Exact separation of the constant threshold sequence `A_t = {0..k}` for
/// the endpoint pair of a birth-and-death chain, via substochastic block
/// powers. Scales to horizons in the tens of thousands of steps.
pub fn constant_threshold_separation(
    chain: &MarkovChain,
    horizon: u64,
    k: usize,
) -> Result<SeparationReport> {
    let length = require_birth_death(chain)?;
    if k >= length {
        return Err(Error::InvalidParameter {
            name: "k",
            reason: format!("threshold {k} out of range 0..{length}"),
        });
    }
    let low: Vec<usize> = (0..=k).collect();
    let high: Vec<usize> = (k + 1..=length).collect();

    let low_power = ScaledMatrix::from_chain_block(chain, &low).pow(horizon);
    let high_power = ScaledMatrix::from_chain_block(chain, &high).pow(horizon);
    let nx = low_power.row_numer_sum(0);
    let ny = high_power.row_numer_sum(high.len() - 1);

    // The value is assembled from the raw scaled parts: adding the two
    // reduced summands directly would run a gcd on denominators with
    // millions of bits at large horizons.
    let value = add_scaled(&low_power, nx.clone(), &high_power, ny.clone());
    let sx = low_power.make_ratio(nx);
    let sy = high_power.make_ratio(ny);
    let nontrivial = !sx.is_zero() && !sy.is_zero();
    Ok(SeparationReport {
        value,
        summand_x: Prob::trusted(sx),
        summand_y: Prob::trusted(sy),
        nontrivial,
    })
}

/// Checks that `chain` looks like a birth-and-death chain (moves only to
/// neighbors under the natural state order) and returns `L`, the index of
/// the last state.
fn require_birth_death(chain: &MarkovChain) -> Result<usize> {
    let n = chain.n_states();
    if n < 2 {
        return Err(Error::NotBirthDeath {
            reason: "needs at least two states".into(),
        });
    }
    for i in 0..n {
        for (j, _) in chain.row(i) {
            if i.abs_diff(*j) > 1 {
                return Err(Error::NotBirthDeath {
                    reason: format!(
                        "transition {} -> {} skips a neighbor",
                        chain.label(i),
                        chain.label(*j)
                    ),
                });
            }
        }
    }
    Ok(n - 1)
}

/// Whether the sequence keeps `x` inside and `y` outside at every time,
/// the structure optimal sequences on birth-and-death chains must have for
/// the endpoint pair once the horizon is large.
pub fn respects_boundary_structure(
    chain: &MarkovChain,
    seq: &SeparatingSequence,
    x: &str,
    y: &str,
) -> Result<bool> {
    let xi = chain.state_index(x)?;
    let yi = chain.state_index(y)?;
    Ok((0..=seq.horizon()).all(|t| seq.contains(t, xi) && !seq.contains(t, yi)))
}
