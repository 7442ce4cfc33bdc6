//! Time-varying communication digraphs.
//!
//! Every node is its own in- and out-neighbour, so out-degrees are at least
//! one and push-sum never divides by zero. A schedule is S-strongly connected
//! when the union of any `S` consecutive graphs is strongly connected.

use std::collections::VecDeque;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{indexed_stream, TAG_GRAPH};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Digraph {
    /// Sorted, deduplicated out-neighbour lists; `out[i]` always contains `i`.
    out: Vec<Vec<usize>>,
}

impl Digraph {
    /// Builds a graph from `(src, dst)` pairs, adding the self-loops.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Precondition("graph needs at least one node".into()));
        }
        let mut out: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for (i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::Precondition(format!(
                    "edge ({i}, {j}) out of range for {n} nodes"
                )));
            }
            out[i].push(j);
        }
        for list in &mut out {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Self { out })
    }

    pub fn self_loops(n: usize) -> Result<Self> {
        Self::from_edges(n, std::iter::empty())
    }

    pub fn complete(n: usize) -> Result<Self> {
        Self::from_edges(n, (0..n).flat_map(|i| (0..n).map(move |j| (i, j))))
    }

    /// Directed cycle `order[0] → order[1] → … → order[0]`.
    pub fn cycle(order: &[usize]) -> Result<Self> {
        let n = order.len();
        Self::from_edges(n, (0..n).map(|k| (order[k], order[(k + 1) % n])))
    }

    pub fn n_nodes(&self) -> usize {
        self.out.len()
    }

    pub fn out_neighbors(&self, i: usize) -> &[usize] {
        &self.out[i]
    }

    /// `d_i = |N_i^out|`, self included.
    pub fn out_degree(&self, i: usize) -> usize {
        self.out[i].len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.out[i].binary_search(&j).is_ok()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.out
            .iter()
            .enumerate()
            .flat_map(|(i, l)| l.iter().map(move |&j| (i, j)))
    }

    pub fn edge_count(&self) -> usize {
        self.out.iter().map(Vec::len).sum()
    }

    fn reaches_all(&self, adj: &[Vec<usize>]) -> bool {
        let n = adj.len();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        count == n
    }

    /// True iff every node reaches every other node.
    ///
    /// Node 0 reaching everyone in the graph and in its reverse is equivalent.
    pub fn is_strongly_connected(&self) -> bool {
        let n = self.n_nodes();
        if !self.reaches_all(&self.out) {
            return false;
        }
        let mut rev = vec![Vec::new(); n];
        for (i, j) in self.edges() {
            rev[j].push(i);
        }
        self.reaches_all(&rev)
    }
}

/// Union of edge sets.
pub fn union_graph<'a>(graphs: impl IntoIterator<Item = &'a Digraph>) -> Result<Digraph> {
    let mut iter = graphs.into_iter();
    let first = iter.next().ok_or(Error::EmptySequence)?;
    let mut out = first.out.clone();
    for g in iter {
        if g.n_nodes() != out.len() {
            return Err(Error::NodeCountMismatch {
                expected: out.len(),
                got: g.n_nodes(),
            });
        }
        for (list, extra) in out.iter_mut().zip(&g.out) {
            list.extend_from_slice(extra);
        }
    }
    for list in &mut out {
        list.sort_unstable();
        list.dedup();
    }
    Ok(Digraph { out })
}

/// A deterministic sequence of graphs `G(0), G(1), …` with a declared
/// connectivity window `S`.
pub trait GraphSchedule: Send + Sync {
    fn n_nodes(&self) -> usize;
    fn window(&self) -> usize;
    fn graph(&self, t: usize) -> Digraph;
}

/// Random digraphs that are S-strongly connected by construction.
///
/// Slots `t ≡ 0 (mod S)` carry a directed Hamiltonian cycle through a
/// permutation drawn for that window, so every run of `S` consecutive slots
/// contains one backbone. The remaining slots carry each off-diagonal edge
/// independently with probability `density`.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomSConnected {
    n: usize,
    s: usize,
    density: f64,
    seed: u64,
}

impl RandomSConnected {
    pub fn new(n: usize, s: usize, density: f64, seed: u64) -> Result<Self> {
        if n == 0 || s == 0 {
            return Err(Error::Precondition("need n >= 1 and s >= 1".into()));
        }
        if !(0.0..=1.0).contains(&density) {
            return Err(Error::Precondition(format!("density {density} not in [0,1]")));
        }
        Ok(Self { n, s, density, seed })
    }

    pub fn density(&self) -> f64 {
        self.density
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

impl GraphSchedule for RandomSConnected {
    fn n_nodes(&self) -> usize {
        self.n
    }

    fn window(&self) -> usize {
        self.s
    }

    fn graph(&self, t: usize) -> Digraph {
        let mut rng = indexed_stream(self.seed, TAG_GRAPH, t as u64);
        let edges: Vec<(usize, usize)> = if t.is_multiple_of(self.s) {
            let mut order: Vec<usize> = (0..self.n).collect();
            order.shuffle(&mut rng);
            (0..self.n)
                .map(|k| (order[k], order[(k + 1) % self.n]))
                .collect()
        } else {
            let mut e = Vec::new();
            for i in 0..self.n {
                for j in 0..self.n {
                    if i != j && rng.random::<f64>() < self.density {
                        e.push((i, j));
                    }
                }
            }
            e
        };
        Digraph::from_edges(self.n, edges).expect("indices in range by construction")
    }
}

/// The same graph at every slot.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantSchedule {
    graph: Digraph,
    s: usize,
}

impl ConstantSchedule {
    pub fn new(graph: Digraph, s: usize) -> Self {
        Self { graph, s: s.max(1) }
    }
}

impl GraphSchedule for ConstantSchedule {
    fn n_nodes(&self) -> usize {
        self.graph.n_nodes()
    }

    fn window(&self) -> usize {
        self.s
    }

    fn graph(&self, _t: usize) -> Digraph {
        self.graph.clone()
    }
}

/// A finite list of graphs repeated periodically.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicSchedule {
    graphs: Vec<Digraph>,
    s: usize,
}

impl PeriodicSchedule {
    pub fn new(graphs: Vec<Digraph>, s: usize) -> Result<Self> {
        // validates non-empty and equal node counts
        union_graph(&graphs)?;
        Ok(Self { graphs, s: s.max(1) })
    }

    pub fn period(&self) -> usize {
        self.graphs.len()
    }
}

impl GraphSchedule for PeriodicSchedule {
    fn n_nodes(&self) -> usize {
        self.graphs[0].n_nodes()
    }

    fn window(&self) -> usize {
        self.s
    }

    fn graph(&self, t: usize) -> Digraph {
        self.graphs[t % self.graphs.len()].clone()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConnectivityReport {
    pub window: usize,
    pub horizon: usize,
    pub windows_checked: usize,
    /// Start of the first window whose union is not strongly connected.
    pub first_violation: Option<usize>,
}

impl ConnectivityReport {
    pub fn passed(&self) -> bool {
        self.first_violation.is_none()
    }
}

/// Checks every window `[t, t+S)` with `t ∈ [0, horizon − S]`.
pub fn verify_s_strong_connectivity(
    sched: &dyn GraphSchedule,
    horizon: usize,
) -> Result<ConnectivityReport> {
    let s = sched.window();
    if horizon < s {
        return Err(Error::Precondition(format!(
            "horizon {horizon} shorter than window {s}"
        )));
    }
    let graphs: Vec<Digraph> = (0..horizon).map(|t| sched.graph(t)).collect();
    verify_graph_sequence(&graphs, s)
}

/// Window check over an explicit finite sequence.
pub fn verify_graph_sequence(graphs: &[Digraph], s: usize) -> Result<ConnectivityReport> {
    if s == 0 || graphs.len() < s {
        return Err(Error::Precondition(format!(
            "need 1 <= S <= number of graphs ({}), got S = {s}",
            graphs.len()
        )));
    }
    let mut report = ConnectivityReport {
        window: s,
        horizon: graphs.len(),
        windows_checked: 0,
        first_violation: None,
    };
    for t in 0..=graphs.len() - s {
        report.windows_checked += 1;
        if !union_graph(&graphs[t..t + s])?.is_strongly_connected() {
            report.first_violation = Some(t);
            break;
        }
    }
    Ok(report)
}

/// Writes slots `0..horizon` as `t src dst` lines after a `#` header.
pub fn write_schedule(sched: &dyn GraphSchedule, horizon: usize, mut w: impl Write) -> Result<()> {
    writeln!(w, "# nodes {}", sched.n_nodes())?;
    writeln!(w, "# window {}", sched.window())?;
    writeln!(w, "# horizon {horizon}")?;
    for t in 0..horizon {
        for (i, j) in sched.graph(t).edges() {
            writeln!(w, "{t} {i} {j}")?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleFile {
    pub n_nodes: usize,
    pub window: Option<usize>,
    pub graphs: Vec<Digraph>,
}

/// Parses the `t src dst` format. Header comments `# nodes N`, `# window S`
/// and `# horizon T` are optional; without them `N` is one past the largest
/// node index and `T` one past the largest slot.
pub fn read_schedule(r: impl BufRead) -> Result<ScheduleFile> {
    let mut nodes = None;
    let mut window = None;
    let mut horizon = None;
    let mut triples = Vec::new();
    for (k, line) in r.lines().enumerate() {
        let line = line?;
        let lineno = k + 1;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse { line: lineno, message };
        if let Some(comment) = text.strip_prefix('#') {
            let mut parts = comment.split_whitespace();
            if let (Some(key), Some(val)) = (parts.next(), parts.next()) {
                let slot = match key {
                    "nodes" => &mut nodes,
                    "window" => &mut window,
                    "horizon" => &mut horizon,
                    _ => continue,
                };
                *slot = Some(
                    val.parse::<usize>()
                        .map_err(|e| parse_err(format!("bad {key} value {val:?}: {e}")))?,
                );
            }
            continue;
        }
        let fields: Vec<&str> = text.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(parse_err(format!("expected `t src dst`, got {text:?}")));
        }
        let mut nums = [0usize; 3];
        for (slot, f) in nums.iter_mut().zip(&fields) {
            *slot = f
                .parse()
                .map_err(|e| parse_err(format!("bad integer {f:?}: {e}")))?;
        }
        triples.push((lineno, nums));
    }
    let n = match nodes {
        Some(n) => n,
        None => triples
            .iter()
            .map(|(_, [_, i, j])| i.max(j) + 1)
            .max()
            .ok_or_else(|| Error::Parse {
                line: 0,
                message: "no edges and no `# nodes` header".into(),
            })?,
    };
    let slots = horizon.unwrap_or_else(|| triples.iter().map(|(_, [t, _, _])| t + 1).max().unwrap_or(0));
    let mut edges: Vec<Vec<(usize, usize)>> = vec![Vec::new(); slots];
    for (lineno, [t, i, j]) in triples {
        if i >= n || j >= n || t >= slots {
            return Err(Error::Parse {
                line: lineno,
                message: format!("triple ({t}, {i}, {j}) outside {slots} slots x {n} nodes"),
            });
        }
        edges[t].push((i, j));
    }
    let graphs = edges
        .into_iter()
        .map(|e| Digraph::from_edges(n, e))
        .collect::<Result<_>>()?;
    Ok(ScheduleFile {
        n_nodes: n,
        window,
        graphs,
    })
}
