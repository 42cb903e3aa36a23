//! Constructors for the example chains the theory revolves around.
//!
//! Each constructor returns a [`ZooChain`]: the chain itself plus a record
//! of designated states (the start pair, absorbing targets) and the
//! construction parameters, so downstream tooling can refer to states by
//! role instead of label.

use std::collections::BTreeMap;

use num::{BigRational, One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::chain::{time_layer, MarkovChain, TimeLayeredChain};
use crate::coupling::CouplingKernel;
use crate::error::{Error, Result};
use crate::prob::Prob;

/// A constructed example chain with named special states and its parameters.
#[derive(Debug, Clone)]
pub struct ZooChain {
    pub chain: MarkovChain,
    /// Role name (`"x"`, `"y"`, ...) to state label.
    pub designated: BTreeMap<String, String>,
    /// Construction parameters as display strings.
    pub params: BTreeMap<String, String>,
}

impl ZooChain {
    pub fn designated(&self, role: &str) -> Result<&str> {
        self.designated
            .get(role)
            .map(String::as_str)
            .ok_or(Error::UnknownState { label: format!("<role {role}>") })
    }

    pub fn sidecar(&self) -> SidecarFile {
        SidecarFile {
            designated: self.designated.clone(),
            params: self.params.clone(),
        }
    }
}

/// Sidecar emitted next to a chain file: designated states and parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SidecarFile {
    pub designated: BTreeMap<String, String>,
    pub params: BTreeMap<String, String>,
}

fn require_open_unit(name: &'static str, p: &Prob) -> Result<()> {
    if p.is_zero() || p.is_one() {
        return Err(Error::InvalidParameter {
            name,
            reason: format!("{p} must lie strictly between 0 and 1"),
        });
    }
    Ok(())
}

/// The symmetric two-state chain: states `{0, 1}`, flip probability `alpha`.
///
/// Degenerate `alpha = 0` is rejected; `alpha = 1` (deterministic swapping)
/// is allowed.
pub fn two_state_chain(alpha: &Prob) -> Result<ZooChain> {
    if alpha.is_zero() {
        return Err(Error::InvalidParameter {
            name: "alpha",
            reason: "flip probability must be positive".into(),
        });
    }
    let stay = alpha.complement();
    let chain = MarkovChain::from_dense(
        vec!["0".into(), "1".into()],
        vec![vec![stay.clone(), alpha.clone()], vec![alpha.clone(), stay]],
    )?;
    Ok(ZooChain {
        chain,
        designated: [("x", "0"), ("y", "1")]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect(),
        params: [("alpha".to_string(), alpha.to_string())].into(),
    })
}

/// Häggström's six-state segregating chain: the two-state chain with flip
/// probability `p`, unrolled over three time layers. Starts `x`, `y` feed a
/// middle layer `u`, `v` and land in the absorbing pair `a`, `b`; the
/// two-step law from `x` puts mass `1 - 2p(1-p)` on `a` and `2p(1-p)` on
/// `b`, and symmetrically from `y`.
pub fn haggstrom_chain(p: &Prob) -> Result<ZooChain> {
    require_open_unit("p", p)?;
    let base = two_state_chain(p)?;
    let layered = time_layer(&base.chain, 2);
    let renames: BTreeMap<String, String> = [
        ("0@0", "x"),
        ("1@0", "y"),
        ("0@1", "u"),
        ("1@1", "v"),
        ("0@2", "a"),
        ("1@2", "b"),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect();
    let chain = layered.layered().with_renamed_states(&renames)?;
    Ok(ZooChain {
        chain,
        designated: [("x", "x"), ("y", "y"), ("a", "a"), ("b", "b")]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect(),
        params: [("p".to_string(), p.to_string())].into(),
    })
}

/// The `3m + 5`-state chain whose absorption laws from `x` and `y` are the
/// negative binomial laws `NB(1, p)` and `NB(2, p)` truncated to `{0..m}`
/// with the overflow state `>` taking the tails, along with the mimicking
/// coupling of the two copies.
///
/// Layout: `x` feeds a main column `v0..vm` (down with probability `p`,
/// right to the absorbing state `j` with probability `1 - p`); `y` feeds a
/// prefix column `w0..w(m-1)` whose right-moves merge into the main column
/// one level down. Both copies absorb within `m + 2` steps.
///
/// The mimicking coupling lets the `x`-copy replay the `y`-copy's previous
/// move. It is Markovian and marginal-correct but deliberately not faithful,
/// and it meets with probability 1 by time `m + 2`.
pub fn negative_binomial_chain(m: u32, p: &Prob) -> Result<(ZooChain, CouplingKernel)> {
    if m < 1 {
        return Err(Error::InvalidParameter {
            name: "m",
            reason: "needs at least one level".into(),
        });
    }
    require_open_unit("p", p)?;
    let m = m as usize;
    let down = p.clone();
    let right = p.complement();

    let v = |j: usize| format!("v{j}");
    let w = |j: usize| format!("w{j}");
    let mut states = vec!["x".to_string(), "y".to_string()];
    states.extend((0..=m).map(v));
    states.extend((0..m).map(w));
    states.extend((0..=m).map(|j| j.to_string()));
    states.push(">".to_string());

    let mut t: Vec<(String, String, Prob)> = Vec::new();
    t.push(("x".into(), v(0), Prob::one()));
    t.push(("y".into(), w(0), down.clone()));
    t.push(("y".into(), v(0), right.clone()));
    for j in 0..=m {
        let down_target = if j == m { ">".to_string() } else { v(j + 1) };
        t.push((v(j), down_target, down.clone()));
        t.push((v(j), j.to_string(), right.clone()));
    }
    for j in 0..m {
        let down_target = if j == m - 1 { ">".to_string() } else { w(j + 1) };
        t.push((w(j), down_target, down.clone()));
        t.push((w(j), v(j + 1), right.clone()));
    }
    for j in 0..=m {
        t.push((j.to_string(), j.to_string(), Prob::one()));
    }
    t.push((">".into(), ">".into(), Prob::one()));

    let chain = MarkovChain::from_transitions(states, t)?;
    let coupling = mimicking_coupling(&chain, m, &down, &right)?;

    let mut designated: BTreeMap<String, String> = [
        ("x".to_string(), "x".to_string()),
        ("y".to_string(), "y".to_string()),
        ("overflow".to_string(), ">".to_string()),
    ]
    .into();
    for j in 0..=m {
        designated.insert(format!("absorbing_{j}"), j.to_string());
    }
    let zoo = ZooChain {
        chain,
        designated,
        params: [
            ("m".to_string(), m.to_string()),
            ("p".to_string(), p.to_string()),
        ]
        .into(),
    };
    Ok((zoo, coupling))
}

/// The mimicking coupling: the x-copy replays the y-copy's previous move
/// with a one-step delay until the copies meet; on meeting, the x-copy's
/// next move is to the absorbing state of the level they met at.
fn mimicking_coupling(
    chain: &MarkovChain,
    m: usize,
    down: &Prob,
    right: &Prob,
) -> Result<CouplingKernel> {
    let idx = |label: &str| chain.state_index(label).expect("zoo label");
    let v = |j: usize| idx(&format!("v{j}"));
    let w = |j: usize| idx(&format!("w{j}"));
    let a = |j: usize| idx(&j.to_string());
    let (x, y, over) = (idx("x"), idx("y"), idx(">"));

    let mut rows: BTreeMap<(usize, usize), Vec<((usize, usize), Prob)>> = BTreeMap::new();
    let absorbed = |pair: (usize, usize), rows: &mut BTreeMap<_, Vec<((usize, usize), Prob)>>| {
        rows.insert(pair, vec![(pair, Prob::one())]);
    };

    // Start: the x-copy moves down deterministically, the y-copy moves by
    // the kernel. A right-move by y lands on v0 where x already is.
    rows.insert(
        (x, y),
        vec![
            ((v(0), w(0)), down.clone()),
            ((v(0), v(0)), right.clone()),
        ],
    );
    // Pre-meeting column pairs: x mirrors y's last move, which was down.
    for j in 0..m {
        let y_down = if j == m - 1 { over } else { w(j + 1) };
        rows.insert(
            (v(j), w(j)),
            vec![
                ((v(j + 1), y_down), down.clone()),
                ((v(j + 1), v(j + 1)), right.clone()),
            ],
        );
    }
    // y ran off the prefix column; x still owes the final mimicked move.
    rows.insert((v(m), over), vec![((over, over), Prob::one())]);
    // Met at level j: x's next move is right to the absorbing state j.
    for j in 0..=m {
        let y_down = if j == m { over } else { v(j + 1) };
        rows.insert(
            (v(j), v(j)),
            vec![
                ((a(j), y_down), down.clone()),
                ((a(j), a(j)), right.clone()),
            ],
        );
    }
    // x absorbed at j, y finishing its run down the main column.
    for j in 0..=m {
        for k in (j + 1)..=m {
            let y_down = if k == m { over } else { v(k + 1) };
            rows.insert(
                (a(j), v(k)),
                vec![
                    ((a(j), y_down), down.clone()),
                    ((a(j), a(k)), right.clone()),
                ],
            );
        }
    }
    // Fully absorbed pairs.
    absorbed((over, over), &mut rows);
    for j in 0..=m {
        absorbed((a(j), over), &mut rows);
        for k in j..=m {
            absorbed((a(j), a(k)), &mut rows);
        }
    }

    CouplingKernel::from_parts(chain.clone(), (x, y), rows)
}

/// The birth-and-death chain on `{0..L}`: reflection rate `alpha` at both
/// endpoints, fair steps in the interior.
pub fn birth_death_chain(l: u32, alpha: &Prob) -> Result<ZooChain> {
    if l < 1 {
        return Err(Error::InvalidParameter {
            name: "L",
            reason: "needs at least two states".into(),
        });
    }
    if alpha.is_zero() {
        return Err(Error::InvalidParameter {
            name: "alpha",
            reason: "reflection rate must be positive".into(),
        });
    }
    let l = l as usize;
    let states: Vec<String> = (0..=l).map(|i| i.to_string()).collect();
    let half = Prob::from_ratio(1, 2)?;
    let mut t = Vec::new();
    t.push(("0".to_string(), "1".to_string(), alpha.clone()));
    if !alpha.is_one() {
        t.push(("0".to_string(), "0".to_string(), alpha.complement()));
        t.push((l.to_string(), l.to_string(), alpha.complement()));
    }
    t.push((l.to_string(), (l - 1).to_string(), alpha.clone()));
    for i in 1..l {
        t.push((i.to_string(), (i - 1).to_string(), half.clone()));
        t.push((i.to_string(), (i + 1).to_string(), half.clone()));
    }
    let chain = MarkovChain::from_transitions(states, t)?;
    Ok(ZooChain {
        chain,
        designated: [("x".to_string(), "0".to_string()), ("y".to_string(), l.to_string())]
            .into(),
        params: [
            ("L".to_string(), l.to_string()),
            ("alpha".to_string(), alpha.to_string()),
        ]
        .into(),
    })
}

/// Best rational approximation of a float within a relative tolerance, via
/// continued-fraction convergents of the float's exact value. Keeps
/// denominators as small as the tolerance allows, which keeps downstream
/// exact arithmetic cheap.
pub fn snap_to_rational(x: f64, rel_tol: f64) -> Result<BigRational> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "x",
            reason: format!("cannot snap {x} to a positive rational"),
        });
    }
    let exact = BigRational::from_float(x).expect("finite float");
    let tolerance = BigRational::from_float(rel_tol).expect("finite tolerance") * &exact;

    // Continued-fraction convergents h/k of the exact dyadic value.
    let mut remainder = exact.clone();
    let (mut h_prev, mut k_prev) = (BigRational::one(), BigRational::zero());
    let (mut h, mut k) = (remainder.floor(), BigRational::one());
    loop {
        let convergent = BigRational::new(h.numer().clone(), k.numer().clone());
        if (&convergent - &exact).abs() <= tolerance {
            return Ok(convergent);
        }
        let fractional = &remainder - remainder.floor();
        debug_assert!(!fractional.is_zero(), "exact value reached before tolerance");
        remainder = fractional.recip();
        let digit = remainder.floor();
        let h_next = &digit * &h + &h_prev;
        let k_next = &digit * &k + &k_prev;
        h_prev = h;
        k_prev = k;
        h = h_next;
        k = k_next;
    }
}

/// Relative tolerance used when snapping float-defined parameters to exact
/// rationals for the chain machinery.
pub const SNAP_REL_TOL: f64 = 1e-12;

/// The boundary-rate schedule that pushes the retained total variation of
/// the layered birth-and-death chain toward 1/2:
/// `alpha = (ln 2 + delta) (L + 1) / (2 T)`, snapped to a rational.
pub fn near_half_alpha(l: u32, delta: f64, horizon: u64) -> Result<Prob> {
    if l < 1 {
        return Err(Error::InvalidParameter {
            name: "L",
            reason: "needs at least two states".into(),
        });
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidParameter {
            name: "delta",
            reason: format!("{delta} must be a positive real"),
        });
    }
    if horizon == 0 {
        return Err(Error::InvalidParameter {
            name: "T",
            reason: "horizon must be positive".into(),
        });
    }
    let alpha = 0.5 * (std::f64::consts::LN_2 + delta) * (l as f64 + 1.0) / horizon as f64;
    if alpha >= 1.0 {
        return Err(Error::InvalidParameter {
            name: "alpha",
            reason: format!("schedule gives alpha = {alpha} >= 1; increase T or decrease delta"),
        });
    }
    let snapped = snap_to_rational(alpha, SNAP_REL_TOL)?;
    if snapped >= BigRational::one() {
        return Err(Error::InvalidParameter {
            name: "alpha",
            reason: "snapped rate reached 1".into(),
        });
    }
    Ok(Prob::new(snapped)?)
}

/// The layered birth-and-death chain with the near-half schedule: the
/// construction that retains total variation arbitrarily close to 1/2 while
/// optimal couplings still meet surely.
///
/// Returns the layered chain and the snapped rate actually used. The layered
/// chain materializes `(L + 1)(T + 1)` states; for analyses that only need
/// exact kernel powers of the base chain, use [`near_half_alpha`] and
/// [`birth_death_chain`] directly instead of building the layers.
pub fn near_half_chain(l: u32, delta: f64, horizon: u64) -> Result<(TimeLayeredChain, Prob)> {
    let alpha = near_half_alpha(l, delta, horizon)?;
    let base = birth_death_chain(l, &alpha)?;
    Ok((time_layer(&base.chain, horizon), alpha))
}
