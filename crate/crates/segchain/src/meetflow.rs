//! Optimal meeting probabilities via exact max-flow on trajectory pairs.
//!
//! For a chain, two start states and a horizon `T`, the optimal meeting
//! probability `C_T(x, y)` is the largest probability, over all couplings of
//! the two copies, that the copies share a state at some time `<= T`. It is
//! computed here through its exact dual: build a network with a node per
//! positive-probability trajectory of each copy, source arcs carrying the
//! x-trajectory probabilities, sink arcs carrying the y-trajectory
//! probabilities, and a unit-capacity arc between every pair of trajectories
//! that intersect (share a state at a common time). The maximum flow equals
//! `C_T(x, y)` and also `2 - S_T(x, y)` for the optimal separation `S_T`,
//! and a flow decomposition yields an explicit optimal coupling in the style
//! of Doeblin's coupling lemma.
//!
//! Everything is exact: capacities are rationals, the solver is a
//! shortest-augmenting-path method (termination does not depend on capacity
//! magnitudes), and the duality is asserted as a rational equality.

use std::collections::BTreeMap;

use num::{BigRational, One, Zero};
use serde::Serialize;

use crate::chain::MarkovChain;
use crate::coupling::TrajectoryCoupling;
use crate::error::{Error, Result};
use crate::prob::Prob;
use crate::separation::{
    brute_force_optimal_separation, EnumerationBudget, SequenceFamily,
};

/// All positive-probability trajectories of one copy over a finite horizon,
/// with exact path probabilities.
#[derive(Debug, Clone)]
pub struct TrajectorySet {
    start: usize,
    horizon: usize,
    paths: Vec<(Vec<usize>, BigRational)>,
}

impl TrajectorySet {
    pub fn start(&self) -> usize {
        self.start
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn paths(&self) -> &[(Vec<usize>, BigRational)] {
        &self.paths
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }
}

/// Size limits for the trajectory-level computation.
#[derive(Debug, Clone, Copy)]
pub struct MeetflowBudget {
    /// Maximum number of positive-probability paths per side.
    pub trajectory_cap: usize,
}

impl Default for MeetflowBudget {
    fn default() -> Self {
        MeetflowBudget { trajectory_cap: 200_000 }
    }
}

/// Enumerates every positive-probability trajectory from `start` over
/// `0..=horizon`, depth-first in state order.
pub fn enumerate_trajectories(
    chain: &MarkovChain,
    start: &str,
    horizon: usize,
    budget: MeetflowBudget,
) -> Result<TrajectorySet> {
    let s = chain.state_index(start)?;
    let mut paths = Vec::new();
    let mut prefix = vec![s];
    let mut weight = vec![BigRational::one()];
    descend(chain, horizon, budget.trajectory_cap, &mut prefix, &mut weight, &mut paths)?;
    Ok(TrajectorySet { start: s, horizon, paths })
}

fn descend(
    chain: &MarkovChain,
    horizon: usize,
    cap: usize,
    prefix: &mut Vec<usize>,
    weight: &mut Vec<BigRational>,
    out: &mut Vec<(Vec<usize>, BigRational)>,
) -> Result<()> {
    if prefix.len() == horizon + 1 {
        if out.len() == cap {
            return Err(Error::TrajectoryCapExceeded { cap });
        }
        out.push((prefix.clone(), weight.last().unwrap().clone()));
        return Ok(());
    }
    let here = *prefix.last().unwrap();
    for (next, p) in chain.row(here) {
        prefix.push(*next);
        weight.push(weight.last().unwrap() * p.ratio());
        descend(chain, horizon, cap, prefix, weight, out)?;
        prefix.pop();
        weight.pop();
    }
    Ok(())
}

/// The source/trajectory/sink network. Middle arcs have capacity 1 and
/// connect exactly the intersecting trajectory pairs.
#[derive(Debug, Clone)]
pub struct FlowNetwork {
    horizon: usize,
    x_caps: Vec<BigRational>,
    y_caps: Vec<BigRational>,
    /// Intersecting pairs (x index, y index), lexicographically sorted.
    middle: Vec<(usize, usize)>,
}

impl FlowNetwork {
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn n_x(&self) -> usize {
        self.x_caps.len()
    }

    pub fn n_y(&self) -> usize {
        self.y_caps.len()
    }

    pub fn x_caps(&self) -> &[BigRational] {
        &self.x_caps
    }

    pub fn y_caps(&self) -> &[BigRational] {
        &self.y_caps
    }

    pub fn middle_arcs(&self) -> &[(usize, usize)] {
        &self.middle
    }

    /// Debug dump with rational capacity strings.
    pub fn dump(&self, chain: &MarkovChain, xs: &TrajectorySet, ys: &TrajectorySet) -> NetworkDump {
        let path_name = |side: &str, path: &[usize]| {
            format!(
                "{side}:{}",
                path.iter().map(|&s| chain.label(s)).collect::<Vec<_>>().join("->")
            )
        };
        let mut nodes = vec!["source".to_string(), "sink".to_string()];
        for (path, _) in xs.paths() {
            nodes.push(path_name("x", path));
        }
        for (path, _) in ys.paths() {
            nodes.push(path_name("y", path));
        }
        let mut arcs = Vec::new();
        for (i, cap) in self.x_caps.iter().enumerate() {
            arcs.push(ArcDump {
                from: "source".into(),
                to: path_name("x", &xs.paths()[i].0),
                capacity: cap.to_string(),
            });
        }
        for &(i, j) in &self.middle {
            arcs.push(ArcDump {
                from: path_name("x", &xs.paths()[i].0),
                to: path_name("y", &ys.paths()[j].0),
                capacity: "1".into(),
            });
        }
        for (j, cap) in self.y_caps.iter().enumerate() {
            arcs.push(ArcDump {
                from: path_name("y", &ys.paths()[j].0),
                to: "sink".into(),
                capacity: cap.to_string(),
            });
        }
        NetworkDump { nodes, arcs }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NetworkDump {
    pub nodes: Vec<String>,
    pub arcs: Vec<ArcDump>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ArcDump {
    pub from: String,
    pub to: String,
    pub capacity: String,
}

/// Builds the network for two trajectory sets over the same horizon.
pub fn build_flow_network(xs: &TrajectorySet, ys: &TrajectorySet) -> Result<FlowNetwork> {
    if xs.horizon() != ys.horizon() {
        return Err(Error::HorizonMismatch {
            expected: xs.horizon(),
            got: ys.horizon(),
        });
    }
    let mut middle = Vec::new();
    for (i, (xp, _)) in xs.paths().iter().enumerate() {
        for (j, (yp, _)) in ys.paths().iter().enumerate() {
            if xp.iter().zip(yp).any(|(a, b)| a == b) {
                middle.push((i, j));
            }
        }
    }
    Ok(FlowNetwork {
        horizon: xs.horizon(),
        x_caps: xs.paths().iter().map(|(_, p)| p.clone()).collect(),
        y_caps: ys.paths().iter().map(|(_, p)| p.clone()).collect(),
        middle,
    })
}

/// A maximum flow: total value plus the flow on every arc class.
#[derive(Debug, Clone)]
pub struct FlowAssignment {
    pub value: BigRational,
    /// Flow per middle arc, parallel to `FlowNetwork::middle_arcs`.
    pub middle_flow: Vec<BigRational>,
    /// Flow absorbed from the source by each x-trajectory.
    pub x_used: Vec<BigRational>,
    /// Flow delivered to the sink by each y-trajectory.
    pub y_used: Vec<BigRational>,
}

struct ResidualEdge {
    to: usize,
    residual: BigRational,
    rev: usize,
}

struct ResidualGraph {
    adj: Vec<Vec<ResidualEdge>>,
}

impl ResidualGraph {
    fn new(nodes: usize) -> Self {
        ResidualGraph { adj: (0..nodes).map(|_| Vec::new()).collect() }
    }

    fn add_edge(&mut self, from: usize, to: usize, cap: BigRational) -> (usize, usize) {
        let fwd = self.adj[from].len();
        let rev = self.adj[to].len();
        self.adj[from].push(ResidualEdge { to, residual: cap, rev });
        self.adj[to].push(ResidualEdge { to: from, residual: BigRational::zero(), rev: fwd });
        (from, fwd)
    }
}

/// Exact maximum flow by shortest augmenting paths (breadth-first search).
///
/// With rational capacities the augmenting-path count is still bounded by
/// the Edmonds–Karp argument, so the solver terminates with the exact
/// optimum; no scaling or rounding is involved.
pub fn max_flow(net: &FlowNetwork) -> FlowAssignment {
    let n_x = net.n_x();
    let n_y = net.n_y();
    let source = 0usize;
    let sink = 1usize;
    let x_node = |i: usize| 2 + i;
    let y_node = |j: usize| 2 + n_x + j;

    let mut graph = ResidualGraph::new(2 + n_x + n_y);
    let mut source_edges = Vec::with_capacity(n_x);
    for (i, cap) in net.x_caps.iter().enumerate() {
        source_edges.push(graph.add_edge(source, x_node(i), cap.clone()));
    }
    let mut middle_edges = Vec::with_capacity(net.middle.len());
    for &(i, j) in &net.middle {
        middle_edges.push(graph.add_edge(x_node(i), y_node(j), BigRational::one()));
    }
    let mut sink_edges = Vec::with_capacity(n_y);
    for (j, cap) in net.y_caps.iter().enumerate() {
        sink_edges.push(graph.add_edge(y_node(j), sink, cap.clone()));
    }

    let mut value = BigRational::zero();
    loop {
        // BFS for a shortest residual path.
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; graph.adj.len()];
        let mut queue = std::collections::VecDeque::from([source]);
        let mut reached = vec![false; graph.adj.len()];
        reached[source] = true;
        'bfs: while let Some(u) = queue.pop_front() {
            for (k, edge) in graph.adj[u].iter().enumerate() {
                if !reached[edge.to] && !edge.residual.is_zero() {
                    reached[edge.to] = true;
                    parent[edge.to] = Some((u, k));
                    if edge.to == sink {
                        break 'bfs;
                    }
                    queue.push_back(edge.to);
                }
            }
        }
        if !reached[sink] {
            break;
        }

        // Bottleneck along the path.
        let mut delta: Option<BigRational> = None;
        let mut node = sink;
        while let Some((u, k)) = parent[node] {
            let r = &graph.adj[u][k].residual;
            delta = Some(match delta {
                Some(d) if d <= *r => d,
                _ => r.clone(),
            });
            node = u;
        }
        let delta = delta.expect("augmenting path is non-empty");

        // Apply.
        let mut node = sink;
        while let Some((u, k)) = parent[node] {
            let rev = graph.adj[u][k].rev;
            graph.adj[u][k].residual -= &delta;
            graph.adj[node][rev].residual += &delta;
            node = u;
        }
        value += delta;
    }

    let flow_on = |graph: &ResidualGraph, (node, idx): (usize, usize), cap: &BigRational| {
        cap - &graph.adj[node][idx].residual
    };
    FlowAssignment {
        value,
        middle_flow: middle_edges
            .iter()
            .map(|&loc| flow_on(&graph, loc, &BigRational::one()))
            .collect(),
        x_used: source_edges
            .iter()
            .zip(&net.x_caps)
            .map(|(&loc, cap)| flow_on(&graph, loc, cap))
            .collect(),
        y_used: sink_edges
            .iter()
            .zip(&net.y_caps)
            .map(|(&loc, cap)| flow_on(&graph, loc, cap))
            .collect(),
    }
}

/// An explicit coupling distilled from a feasible flow: trajectory pairs are
/// matched with the flow mass, and each side's leftover follows its own path
/// law independently of the other side.
#[derive(Debug, Clone)]
pub struct CouplingPlan {
    /// Positive pair masses on intersecting pairs.
    paired: BTreeMap<(usize, usize), BigRational>,
    residual_x: Vec<BigRational>,
    residual_y: Vec<BigRational>,
    total_flow: BigRational,
}

impl CouplingPlan {
    pub fn total_flow(&self) -> &BigRational {
        &self.total_flow
    }

    pub fn paired(&self) -> impl Iterator<Item = (&(usize, usize), &BigRational)> {
        self.paired.iter()
    }

    pub fn residual_x(&self) -> &[BigRational] {
        &self.residual_x
    }

    pub fn residual_y(&self) -> &[BigRational] {
        &self.residual_y
    }

    /// Joint mass assigned to the pair `(i, j)`: the matched flow plus the
    /// normalized independent residual product when the flow is short of 1.
    pub fn joint_mass(&self, i: usize, j: usize) -> BigRational {
        let mut mass = self.paired.get(&(i, j)).cloned().unwrap_or_else(BigRational::zero);
        let leftover = BigRational::one() - &self.total_flow;
        if !leftover.is_zero() {
            mass += &self.residual_x[i] * &self.residual_y[j] / leftover;
        }
        mass
    }

    /// Exact meeting probability of the plan, measured directly: all matched
    /// pairs intersect by construction, and the residual product may add
    /// further intersecting mass on top.
    pub fn meeting_probability(&self, net: &FlowNetwork) -> BigRational {
        let mut met = self.total_flow.clone();
        let leftover = BigRational::one() - &self.total_flow;
        if !leftover.is_zero() {
            let mut residual_met = BigRational::zero();
            for &(i, j) in net.middle_arcs() {
                if !self.residual_x[i].is_zero() && !self.residual_y[j].is_zero() {
                    residual_met += &self.residual_x[i] * &self.residual_y[j];
                }
            }
            met += residual_met / leftover;
        }
        met
    }

    /// Full expansion into a trajectory coupling, which carries the exact
    /// marginal-correctness checks.
    pub fn to_trajectory_coupling(
        &self,
        chain: &MarkovChain,
        xs: &TrajectorySet,
        ys: &TrajectorySet,
    ) -> Result<TrajectoryCoupling> {
        let mut pairs = Vec::new();
        for i in 0..xs.len() {
            for j in 0..ys.len() {
                let mass = self.joint_mass(i, j);
                if !mass.is_zero() {
                    pairs.push((xs.paths()[i].0.clone(), ys.paths()[j].0.clone(), mass));
                }
            }
        }
        TrajectoryCoupling::from_pair_paths(chain, xs.horizon(), pairs)
    }
}

/// Doeblin-style extraction: pair trajectories with the flow mass `q_ij`,
/// leave `P(path) - sum_j q_ij` to follow each path independently.
pub fn extract_coupling(net: &FlowNetwork, flow: &FlowAssignment) -> CouplingPlan {
    let mut paired = BTreeMap::new();
    let mut residual_x = net.x_caps.clone();
    let mut residual_y = net.y_caps.clone();
    for (&(i, j), q) in net.middle.iter().zip(&flow.middle_flow) {
        if q.is_zero() {
            continue;
        }
        paired.insert((i, j), q.clone());
        residual_x[i] -= q;
        residual_y[j] -= q;
    }
    CouplingPlan {
        paired,
        residual_x,
        residual_y,
        total_flow: flow.value.clone(),
    }
}

/// The optimal meeting probability `C_T(x, y)`: the exact max-flow value of
/// the trajectory network.
pub fn optimal_meeting_probability(
    chain: &MarkovChain,
    x: &str,
    y: &str,
    horizon: usize,
    budget: MeetflowBudget,
) -> Result<Prob> {
    let xs = enumerate_trajectories(chain, x, horizon, budget)?;
    let ys = enumerate_trajectories(chain, y, horizon, budget)?;
    let net = build_flow_network(&xs, &ys)?;
    Ok(Prob::new(max_flow(&net).value)?)
}

/// Both sides of the strong duality, certified exactly.
#[derive(Debug, Clone)]
pub struct DualityReport {
    /// Max-flow value, i.e. the optimal meeting probability.
    pub meeting_probability: BigRational,
    /// Brute-force optimal separation.
    pub optimal_separation: BigRational,
    /// Meeting probability of the extracted coupling, measured directly.
    pub extracted_meeting: BigRational,
    /// `meeting_probability == 2 - optimal_separation == extracted_meeting`.
    pub equal: bool,
}

/// Computes the optimal meeting probability three ways (max-flow,
/// `2 - S_T` with brute-force separation, and the extracted coupling's
/// directly measured meeting mass) and reports whether they agree exactly.
/// The extracted coupling is also expanded and its marginals verified.
pub fn verify_duality(
    chain: &MarkovChain,
    x: &str,
    y: &str,
    horizon: usize,
    flow_budget: MeetflowBudget,
    enum_budget: EnumerationBudget,
) -> Result<DualityReport> {
    let xs = enumerate_trajectories(chain, x, horizon, flow_budget)?;
    let ys = enumerate_trajectories(chain, y, horizon, flow_budget)?;
    let net = build_flow_network(&xs, &ys)?;
    let flow = max_flow(&net);
    let plan = extract_coupling(&net, &flow);
    plan.to_trajectory_coupling(chain, &xs, &ys)?.validate_marginals()?;
    let extracted_meeting = plan.meeting_probability(&net);

    let (sep, _) =
        brute_force_optimal_separation(chain, x, y, horizon, SequenceFamily::All, enum_budget)?;
    let two = BigRational::from_integer(2.into());
    let equal = flow.value == &two - &sep.value && extracted_meeting == flow.value;
    Ok(DualityReport {
        meeting_probability: flow.value,
        optimal_separation: sep.value,
        extracted_meeting,
        equal,
    })
}
