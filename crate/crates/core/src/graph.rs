//! Graphs, grids, the doubled graph G*, linear orders, crossing matchings,
//! lsim/lmm-width, tree and path decompositions, and exact treewidth and
//! pathwidth for tiny graphs.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::par::{self, Exec};
use crate::{Error, Result, Var};

/// An undirected edge with its endpoints in ascending order.
pub type Edge = (Var, Var);

pub fn edge(u: impl Into<Var>, v: impl Into<Var>) -> Edge {
    let (u, v) = (u.into(), v.into());
    if u <= v {
        (u, v)
    } else {
        (v, u)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Graph {
    adj: BTreeMap<Var, BTreeSet<Var>>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_edges<I, S>(edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, S)>,
        S: Into<Var>,
    {
        let mut g = Graph::new();
        for (u, v) in edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    pub fn add_vertex(&mut self, v: impl Into<Var>) {
        self.adj.entry(v.into()).or_default();
    }

    pub fn add_edge(&mut self, u: impl Into<Var>, v: impl Into<Var>) -> Result<()> {
        let (u, v) = (u.into(), v.into());
        if u == v {
            return Err(Error::Malformed(format!("self-loop at {u}")));
        }
        self.adj.entry(u.clone()).or_default().insert(v.clone());
        self.adj.entry(v).or_default().insert(u);
        Ok(())
    }

    pub fn vertices(&self) -> impl Iterator<Item = &Var> + '_ {
        self.adj.keys()
    }

    pub fn vertex_set(&self) -> BTreeSet<Var> {
        self.adj.keys().cloned().collect()
    }

    pub fn contains(&self, v: &str) -> bool {
        self.adj.contains_key(v)
    }

    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edges(&self) -> Vec<Edge> {
        self.adj
            .iter()
            .flat_map(|(u, ns)| ns.iter().filter(move |v| u < *v).map(move |v| (u.clone(), v.clone())))
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.values().map(BTreeSet::len).sum::<usize>() / 2
    }

    pub fn has_edge(&self, u: &str, v: &str) -> bool {
        self.adj.get(u).is_some_and(|ns| ns.contains(v))
    }

    pub fn neighbors(&self, v: &str) -> impl Iterator<Item = &Var> + '_ {
        self.adj.get(v).into_iter().flatten()
    }

    pub fn degree(&self, v: &str) -> usize {
        self.adj.get(v).map_or(0, BTreeSet::len)
    }

    pub fn max_degree(&self) -> usize {
        self.adj.values().map(BTreeSet::len).max().unwrap_or(0)
    }

    pub fn isolated(&self) -> Vec<Var> {
        self.adj
            .iter()
            .filter(|(_, ns)| ns.is_empty())
            .map(|(v, _)| v.clone())
            .collect()
    }

    pub fn require_no_isolated(&self) -> Result<()> {
        match self.isolated().first() {
            Some(v) => Err(Error::Precondition(format!("vertex {v} is isolated"))),
            None => Ok(()),
        }
    }

    /// `G[E]`: the graph formed by the edges `es` and their endpoints.
    pub fn edge_subgraph(es: &[Edge]) -> Graph {
        let mut g = Graph::new();
        for (u, v) in es {
            g.add_edge(u.clone(), v.clone()).expect("edges are loop-free");
        }
        g
    }

    /// Parses `v <name>` / `e <name> <name>` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Graph> {
        let mut g = Graph::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with("//") || line.starts_with("c ") {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            match toks.as_slice() {
                ["v", name] => g.add_vertex(*name),
                ["e", u, v] => g
                    .add_edge(*u, *v)
                    .map_err(|e| Error::parse(ln + 1, e.to_string()))?,
                _ => return Err(Error::parse(ln + 1, format!("unrecognised line {line:?}"))),
            }
        }
        Ok(g)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for v in self.vertices() {
            out.push_str(&format!("v {v}\n"));
        }
        for (u, v) in self.edges() {
            out.push_str(&format!("e {u} {v}\n"));
        }
        out
    }

    pub(crate) fn indexed(&self) -> Result<Indexed> {
        Indexed::new(self)
    }
}

/// Bitmask form of a graph with at most 64 vertices, names sorted.
#[derive(Debug, Clone)]
pub(crate) struct Indexed {
    pub names: Vec<Var>,
    pub index: BTreeMap<Var, usize>,
    pub adj: Vec<u64>,
}

impl Indexed {
    fn new(g: &Graph) -> Result<Self> {
        let n = g.vertex_count();
        if n > 64 {
            return Err(Error::Scale {
                what: "graph vertices",
                size: n,
                cap: 64,
            });
        }
        let names: Vec<Var> = g.vertices().cloned().collect();
        let index: BTreeMap<Var, usize> =
            names.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect();
        let adj = names
            .iter()
            .map(|v| g.neighbors(v).fold(0u64, |m, w| m | 1 << index[w]))
            .collect();
        Ok(Indexed { names, index, adj })
    }

    fn n(&self) -> usize {
        self.names.len()
    }
}

/// The n×n grid with its horizontal and vertical edges.
#[derive(Debug, Clone)]
pub struct Grid {
    pub n: usize,
    pub graph: Graph,
    pub hor: Vec<Edge>,
    pub vert: Vec<Edge>,
}

/// Name of grid vertex `(i, j)`, 1-based.
pub fn grid_vertex(i: usize, j: usize) -> Var {
    format!("v{i}_{j}").into()
}

pub fn grid(n: usize) -> Result<Grid> {
    if n == 0 {
        return Err(Error::Range("grid size must be at least 1".into()));
    }
    let mut graph = Graph::new();
    let (mut hor, mut vert) = (Vec::new(), Vec::new());
    for i in 1..=n {
        for j in 1..=n {
            graph.add_vertex(grid_vertex(i, j));
            if j < n {
                hor.push(edge(grid_vertex(i, j), grid_vertex(i, j + 1)));
            }
            if i < n {
                vert.push(edge(grid_vertex(i, j), grid_vertex(i + 1, j)));
            }
        }
    }
    for (u, v) in hor.iter().chain(&vert) {
        graph.add_edge(u.clone(), v.clone())?;
    }
    hor.sort();
    vert.sort();
    Ok(Grid {
        n,
        graph,
        hor,
        vert,
    })
}

/// The row-major ("dictionary") order of the grid vertices.
pub fn grid_dictionary_order(n: usize) -> Vec<Var> {
    (1..=n)
        .flat_map(|i| (1..=n).map(move |j| grid_vertex(i, j)))
        .collect()
}

/// The column-major order, i.e. the dictionary order with rows and columns
/// swapped.
pub fn grid_transposed_order(n: usize) -> Vec<Var> {
    (1..=n)
        .flat_map(|j| (1..=n).map(move |i| grid_vertex(i, j)))
        .collect()
}

/// Name of copy `k ∈ {1, 2}` of `v` in the doubled graph.
pub fn copy(v: &str, k: u8) -> Var {
    format!("{v}#{k}").into()
}

/// Splits a copy-tagged name into the base name and the tag.
pub fn split_copy(name: &str) -> Option<(&str, u8)> {
    let (base, tag) = name.rsplit_once('#')?;
    match tag {
        "1" => Some((base, 1)),
        "2" => Some((base, 2)),
        _ => None,
    }
}

/// `G*`: vertices `v#1`, `v#2`; each edge `{u, v}` becomes `{u#1, v#2}` and
/// `{v#1, u#2}`.
pub fn double(g: &Graph) -> Result<Graph> {
    g.require_no_isolated()?;
    let mut out = Graph::new();
    for v in g.vertices() {
        out.add_vertex(copy(v, 1));
        out.add_vertex(copy(v, 2));
    }
    for (u, v) in g.edges() {
        out.add_edge(copy(&u, 1), copy(&v, 2))?;
        out.add_edge(copy(&v, 1), copy(&u, 2))?;
    }
    Ok(out)
}

/// The doubled versions of a set of base edges.
pub fn double_edges(es: &[Edge]) -> BTreeSet<Edge> {
    es.iter()
        .flat_map(|(u, v)| [edge(copy(u, 1), copy(v, 2)), edge(copy(v, 1), copy(u, 2))])
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearOrder {
    seq: Vec<Var>,
    pos: BTreeMap<Var, usize>,
}

impl LinearOrder {
    pub fn new<I, S>(items: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<Var>,
    {
        let seq: Vec<Var> = items.into_iter().map(Into::into).collect();
        let mut pos = BTreeMap::new();
        for (i, v) in seq.iter().enumerate() {
            if pos.insert(v.clone(), i).is_some() {
                return Err(Error::Malformed(format!("{v} occurs twice in the order")));
            }
        }
        Ok(LinearOrder { seq, pos })
    }

    pub fn as_slice(&self) -> &[Var] {
        &self.seq
    }

    pub fn len(&self) -> usize {
        self.seq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seq.is_empty()
    }

    pub fn position(&self, v: &str) -> Option<usize> {
        self.pos.get(v).copied()
    }

    pub fn contains(&self, v: &str) -> bool {
        self.pos.contains_key(v)
    }

    pub fn set(&self) -> BTreeSet<Var> {
        self.pos.keys().cloned().collect()
    }

    pub fn prefix(&self, k: usize) -> &[Var] {
        &self.seq[..k.min(self.seq.len())]
    }

    /// The order restricted to the members of `keep`.
    pub fn restricted(&self, keep: &BTreeSet<Var>) -> LinearOrder {
        LinearOrder::new(self.seq.iter().filter(|v| keep.contains(*v)).cloned())
            .expect("subsequence of a permutation")
    }

    /// Errors unless every member of `vs` occurs in the order.
    pub fn require_covers<'a>(&self, vs: impl IntoIterator<Item = &'a Var>) -> Result<()> {
        for v in vs {
            if !self.contains(v) {
                return Err(Error::Precondition(format!("order does not contain {v}")));
            }
        }
        Ok(())
    }

    pub fn shuffled(items: &BTreeSet<Var>, rng: &mut ChaCha8Rng) -> LinearOrder {
        let mut v: Vec<Var> = items.iter().cloned().collect();
        v.shuffle(rng);
        LinearOrder::new(v).expect("distinct")
    }

    /// One name per line.
    pub fn parse(text: &str) -> Result<LinearOrder> {
        LinearOrder::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(Var::from),
        )
    }

    pub fn render(&self) -> String {
        self.seq.iter().map(|v| format!("{v}\n")).collect()
    }
}

impl fmt::Display for LinearOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.seq.iter().map(|v| &**v).collect();
        write!(f, "({})", names.join(","))
    }
}

/// A set of disjoint edges, each stored as `(u, w)`. When a crossing is
/// attached, `u` lies on the prefix side and `w` on the suffix side.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Matching {
    pub pairs: Vec<(Var, Var)>,
}

impl Matching {
    pub fn new(mut pairs: Vec<(Var, Var)>) -> Result<Self> {
        pairs.sort();
        let mut seen = BTreeSet::new();
        for (u, w) in &pairs {
            if u == w || !seen.insert(u.clone()) || !seen.insert(w.clone()) {
                return Err(Error::Precondition(format!(
                    "edges of the matching are not disjoint at {u}-{w}"
                )));
            }
        }
        Ok(Matching { pairs })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn vertices(&self) -> BTreeSet<Var> {
        self.pairs
            .iter()
            .flat_map(|(u, w)| [u.clone(), w.clone()])
            .collect()
    }

    pub fn edges(&self) -> Vec<Edge> {
        self.pairs.iter().map(|(u, w)| edge(u.clone(), w.clone())).collect()
    }

    /// Whether every edge is in `g` and no edge of `g` joins two distinct
    /// matching edges.
    pub fn is_induced_in(&self, g: &Graph) -> bool {
        if !self.pairs.iter().all(|(u, w)| g.has_edge(u, w)) {
            return false;
        }
        for (i, (a, b)) in self.pairs.iter().enumerate() {
            for (c, d) in &self.pairs[i + 1..] {
                if g.has_edge(a, c) || g.has_edge(a, d) || g.has_edge(b, c) || g.has_edge(b, d) {
                    return false;
                }
            }
        }
        true
    }

    /// Pairs given as `u w` per line.
    pub fn parse(text: &str) -> Result<Matching> {
        let mut pairs = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let toks: Vec<&str> = line.split_whitespace().collect();
            match toks.as_slice() {
                [] => {}
                [u, w] => pairs.push((Var::from(*u), Var::from(*w))),
                _ => return Err(Error::parse(ln + 1, "expected `<u> <w>`")),
            }
        }
        Matching::new(pairs)
    }

    pub fn render(&self) -> String {
        self.pairs.iter().map(|(u, w)| format!("{u} {w}\n")).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrossMode {
    Matching,
    InducedMatching,
}

/// A maximum crossing matching for one order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Crossing {
    pub size: usize,
    /// Length of the smallest witnessing prefix.
    pub prefix_len: usize,
    pub matching: Matching,
}

/// Maximum size of a (induced) matching of `g` crossing `pi`. With `neat`,
/// `g` must be a doubled graph and the matching must put one copy class on
/// the prefix side and the other on the suffix side.
pub fn crossing_width(g: &Graph, pi: &LinearOrder, mode: CrossMode, neat: bool) -> Result<Crossing> {
    pi.require_covers(g.vertices())?;
    let ix = g.indexed()?;
    let order: Vec<usize> = pi
        .as_slice()
        .iter()
        .filter_map(|v| ix.index.get(v).copied())
        .collect();
    let tags: Vec<u8> = if neat {
        ix.names
            .iter()
            .map(|v| {
                split_copy(v)
                    .map(|(_, t)| t)
                    .ok_or_else(|| Error::Precondition(format!("{v} carries no copy tag")))
            })
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    let n = ix.n();
    let mut best = Crossing {
        size: 0,
        prefix_len: 0,
        matching: Matching::default(),
    };
    let mut prefix = 0u64;
    for cut in 1..n {
        prefix |= 1 << order[cut - 1];
        let orientations: &[Option<u8>] = if neat { &[Some(1), Some(2)] } else { &[None] };
        for &orient in orientations {
            let mut cands: Vec<(usize, usize)> = Vec::new();
            for &u in &order[..cut] {
                if orient.is_some_and(|t| tags[u] != t) {
                    continue;
                }
                let mut ws = ix.adj[u] & !prefix;
                while ws != 0 {
                    let w = ws.trailing_zeros() as usize;
                    ws &= ws - 1;
                    if orient.is_some_and(|t| tags[w] == t) {
                        continue;
                    }
                    cands.push((u, w));
                }
            }
            if cands.len() <= best.size {
                continue;
            }
            let chosen = match mode {
                CrossMode::Matching => max_bipartite(&cands, n),
                CrossMode::InducedMatching => max_induced(&cands, &ix.adj)?,
            };
            if chosen.len() > best.size {
                best = Crossing {
                    size: chosen.len(),
                    prefix_len: cut,
                    matching: Matching::new(
                        chosen
                            .iter()
                            .map(|&(u, w)| (ix.names[u].clone(), ix.names[w].clone()))
                            .collect(),
                    )?,
                };
            }
        }
    }
    Ok(best)
}

/// Kuhn's augmenting-path matching over candidate `(left, right)` pairs.
fn max_bipartite(cands: &[(usize, usize)], n: usize) -> Vec<(usize, usize)> {
    let mut lefts: Vec<usize> = cands.iter().map(|c| c.0).collect();
    lefts.dedup();
    let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &(u, w) in cands {
        adj.entry(u).or_default().push(w);
    }
    let mut mate_of_right: Vec<Option<usize>> = vec![None; n];
    fn augment(
        u: usize,
        adj: &BTreeMap<usize, Vec<usize>>,
        seen: &mut [bool],
        mate: &mut [Option<usize>],
    ) -> bool {
        for &w in &adj[&u] {
            if seen[w] {
                continue;
            }
            seen[w] = true;
            if mate[w].is_none_or(|u2| augment(u2, adj, seen, mate)) {
                mate[w] = Some(u);
                return true;
            }
        }
        false
    }
    for &u in adj.keys() {
        let mut seen = vec![false; n];
        augment(u, &adj, &mut seen, &mut mate_of_right);
    }
    let mut out: Vec<(usize, usize)> = mate_of_right
        .iter()
        .enumerate()
        .filter_map(|(w, m)| m.map(|u| (u, w)))
        .collect();
    out.sort();
    out
}

/// Maximum induced matching among candidate edges, by branch and bound.
fn max_induced(cands: &[(usize, usize)], adj: &[u64]) -> Result<Vec<(usize, usize)>> {
    let m = cands.len();
    if m > 128 {
        return Err(Error::Scale {
            what: "crossing edges for induced-matching search",
            size: m,
            cap: 128,
        });
    }
    let closed = |(a, b): (usize, usize)| adj[a] | adj[b] | 1 << a | 1 << b;
    let conflict: Vec<u128> = (0..m)
        .map(|i| {
            let ci = closed(cands[i]);
            (0..m)
                .filter(|&j| {
                    let (c, d) = cands[j];
                    j == i || ci >> c & 1 == 1 || ci >> d & 1 == 1
                })
                .fold(0u128, |acc, j| acc | 1 << j)
        })
        .collect();
    fn rec(alive: u128, conflict: &[u128], cur: &mut Vec<usize>, best: &mut Vec<usize>) {
        if cur.len() + alive.count_ones() as usize <= best.len() {
            return;
        }
        if alive == 0 {
            *best = cur.clone();
            return;
        }
        let i = alive.trailing_zeros() as usize;
        cur.push(i);
        rec(alive & !conflict[i], conflict, cur, best);
        cur.pop();
        rec(alive & !(1u128 << i), conflict, cur, best);
    }
    let all = if m == 128 { u128::MAX } else { (1u128 << m) - 1 };
    let mut best = Vec::new();
    rec(all, &conflict, &mut Vec::new(), &mut best);
    Ok(best.into_iter().map(|i| cands[i]).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WidthMode {
    Lsim,
    Lmm,
}

impl WidthMode {
    fn cross(self) -> CrossMode {
        match self {
            WidthMode::Lsim => CrossMode::InducedMatching,
            WidthMode::Lmm => CrossMode::Matching,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderSearch {
    Exhaustive,
    Sampled { count: usize, seed: u64 },
}

/// Cap on the vertex count for exhaustive order enumeration.
pub const EXHAUSTIVE_ORDER_CAP: usize = 8;

/// The `k`-th permutation of `items` in lexicographic index order.
pub fn nth_permutation<T: Clone>(items: &[T], mut k: usize) -> Vec<T> {
    let mut pool: Vec<T> = items.to_vec();
    let mut out = Vec::with_capacity(pool.len());
    let mut fact: usize = (1..pool.len()).product();
    while !pool.is_empty() {
        let i = k / fact.max(1);
        k %= fact.max(1);
        out.push(pool.remove(i));
        if !pool.is_empty() {
            fact /= pool.len();
        }
    }
    out
}

/// Orders visited by a search, in candidate order.
pub fn search_orders(items: &BTreeSet<Var>, search: OrderSearch, exhaustive_cap: usize) -> Result<Vec<LinearOrder>> {
    match search {
        OrderSearch::Exhaustive => {
            if items.len() > exhaustive_cap {
                return Err(Error::Scale {
                    what: "exhaustive order search",
                    size: items.len(),
                    cap: exhaustive_cap,
                });
            }
            let v: Vec<Var> = items.iter().cloned().collect();
            let total: usize = (1..=v.len()).product();
            Ok((0..total)
                .map(|k| LinearOrder::new(nth_permutation(&v, k)).expect("permutation"))
                .collect())
        }
        OrderSearch::Sampled { count, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok((0..count).map(|_| LinearOrder::shuffled(items, &mut rng)).collect())
        }
    }
}

/// Minimum over the searched orders of the crossing width; ties go to the
/// earliest candidate.
pub fn width_min(g: &Graph, mode: WidthMode, search: OrderSearch) -> Result<(usize, LinearOrder)> {
    width_min_with(Exec::default(), g, mode, search)
}

pub fn width_min_with(
    exec: Exec,
    g: &Graph,
    mode: WidthMode,
    search: OrderSearch,
) -> Result<(usize, LinearOrder)> {
    let orders = search_orders(&g.vertex_set(), search, EXHAUSTIVE_ORDER_CAP)?;
    if orders.is_empty() {
        return Err(Error::Precondition("order search visited no orders".into()));
    }
    let widths: Vec<Result<usize>> = par::map_slice(exec, &orders, |pi| {
        crossing_width(g, pi, mode.cross(), false).map(|c| c.size)
    });
    let widths: Vec<usize> = widths.into_iter().collect::<Result<_>>()?;
    let (i, w) = widths
        .iter()
        .enumerate()
        .min_by_key(|(i, w)| (**w, *i))
        .expect("nonempty");
    Ok((*w, orders[i].clone()))
}

/// An induced matching of `G*` neatly crossing `pi_star`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeatMatching {
    /// Oriented: the prefix-side endpoint comes first.
    pub matching: Matching,
    pub prefix_len: usize,
    /// Copy tag of the prefix side.
    pub side: u8,
    /// Size of the crossing induced matching of `G` the lift started from.
    pub base_size: usize,
}

/// The constructive step behind the neat-crossing lemma: derive an order of
/// `V(G)` from first-copy positions, take a maximum crossing induced matching
/// of `G`, keep the majority copy class of its prefix side, and lift.
pub fn extract_neat(g: &Graph, pi_star: &LinearOrder) -> Result<NeatMatching> {
    let gs = double(g)?;
    pi_star.require_covers(gs.vertices())?;
    let pos = |v: &Var, k: u8| pi_star.position(&copy(v, k)).expect("covered");
    let ind: BTreeMap<Var, u8> = g
        .vertices()
        .map(|v| (v.clone(), if pos(v, 1) < pos(v, 2) { 1 } else { 2 }))
        .collect();
    let mut base: Vec<Var> = g.vertices().cloned().collect();
    base.sort_by_key(|v| pos(v, ind[v]));
    let pi = LinearOrder::new(base)?;
    let cross = crossing_width(g, &pi, CrossMode::InducedMatching, false)?;

    let lift = |side: u8| -> Result<Vec<(Var, Var)>> {
        let pairs = cross
            .matching
            .pairs
            .iter()
            .filter(|(u, _)| ind[u] == side)
            .map(|(u, w)| (copy(u, side), copy(w, 3 - side)))
            .collect();
        Ok(Matching::new(pairs)?.pairs)
    };
    let (l1, l2) = (lift(1)?, lift(2)?);
    let side = match l1.len().cmp(&l2.len()) {
        std::cmp::Ordering::Greater => 1,
        std::cmp::Ordering::Less => 2,
        std::cmp::Ordering::Equal => {
            if l1 <= l2 {
                1
            } else {
                2
            }
        }
    };
    let pairs = if side == 1 { l1 } else { l2 };
    let prefix_len = pairs
        .iter()
        .map(|(u, _)| pi_star.position(u).expect("covered") + 1)
        .max()
        .unwrap_or(0);
    Ok(NeatMatching {
        matching: Matching { pairs },
        prefix_len,
        side,
        base_size: cross.size,
    })
}

/// Checks that `m` is an induced matching of `gs` that neatly crosses
/// `pi_star`, returning a witnessing prefix length and the prefix-side tag.
pub fn verify_neat(gs: &Graph, pi_star: &LinearOrder, m: &Matching) -> Option<(usize, u8)> {
    if !m.is_induced_in(gs) {
        return None;
    }
    if m.is_empty() {
        return Some((0, 1));
    }
    for side in [1u8, 2] {
        let mut last_u = 0usize;
        let mut first_w = usize::MAX;
        let mut ok = true;
        for (a, b) in &m.pairs {
            let (ta, tb) = match (split_copy(a), split_copy(b)) {
                (Some((_, ta)), Some((_, tb))) => (ta, tb),
                _ => return None,
            };
            let (u, w) = if ta == side && tb == 3 - side {
                (a, b)
            } else if tb == side && ta == 3 - side {
                (b, a)
            } else {
                ok = false;
                break;
            };
            let (Some(pu), Some(pw)) = (pi_star.position(u), pi_star.position(w)) else {
                return None;
            };
            last_u = last_u.max(pu + 1);
            first_w = first_w.min(pw);
        }
        if ok && last_u <= first_w {
            return Some((last_u, side));
        }
    }
    None
}

/// The split variant: the majority of the neat matching over the doubled
/// edge sets of `G[E1]` and `G[E2]`. Returns side 1 or 2; ties go to side 1.
pub fn split_neat(g: &Graph, e1: &[Edge], e2: &[Edge], pi_star: &LinearOrder) -> Result<(u8, Matching)> {
    check_partition(g, e1, e2)?;
    let neat = extract_neat(g, pi_star)?;
    let d1 = double_edges(e1);
    let pick = |inside: bool| -> Vec<(Var, Var)> {
        neat.matching
            .pairs
            .iter()
            .filter(|(u, w)| d1.contains(&edge(u.clone(), w.clone())) == inside)
            .cloned()
            .collect()
    };
    let (m1, m2) = (pick(true), pick(false));
    if m1.len() >= m2.len() {
        Ok((1, Matching { pairs: m1 }))
    } else {
        Ok((2, Matching { pairs: m2 }))
    }
}

/// `E1, E2` partition `E(g)` and both `G[E1]`, `G[E2]` span `V(g)`.
pub fn check_partition(g: &Graph, e1: &[Edge], e2: &[Edge]) -> Result<()> {
    let all: BTreeSet<Edge> = g.edges().into_iter().collect();
    let s1: BTreeSet<Edge> = e1.iter().map(|(u, v)| edge(u.clone(), v.clone())).collect();
    let s2: BTreeSet<Edge> = e2.iter().map(|(u, v)| edge(u.clone(), v.clone())).collect();
    if let Some((u, v)) = s1.intersection(&s2).next() {
        return Err(Error::Precondition(format!("edge {u}-{v} lies in both parts")));
    }
    let union: BTreeSet<Edge> = s1.union(&s2).cloned().collect();
    if union != all {
        return Err(Error::Precondition(
            "the two edge sets do not partition the edges of the graph".into(),
        ));
    }
    for (k, s) in [(1, &s1), (2, &s2)] {
        let covered: BTreeSet<&Var> = s.iter().flat_map(|(u, v)| [u, v]).collect();
        if let Some(v) = g.vertices().find(|v| !covered.contains(v)) {
            return Err(Error::Precondition(format!(
                "edge set {k} does not span the graph (misses {v})"
            )));
        }
    }
    Ok(())
}

/// The greedy step turning a matching into an induced one: take each edge in
/// turn and discard the later edges touching its neighbourhood.
pub fn greedy_induced(g: &Graph, m: &Matching) -> Matching {
    let mut removed = vec![false; m.pairs.len()];
    let mut out = Vec::new();
    for i in 0..m.pairs.len() {
        if removed[i] {
            continue;
        }
        let (a, b) = &m.pairs[i];
        out.push(m.pairs[i].clone());
        for (j, (c, d)) in m.pairs.iter().enumerate().skip(i + 1) {
            if g.has_edge(a, c) || g.has_edge(a, d) || g.has_edge(b, c) || g.has_edge(b, d) {
                removed[j] = true;
            }
        }
    }
    Matching { pairs: out }
}

/// A tree (or path) decomposition over numbered bags.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Decomposition {
    pub bags: BTreeMap<usize, BTreeSet<Var>>,
    pub tree: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecompositionError {
    #[error("tree edge mentions unknown bag {0}")]
    UnknownBag(usize),
    #[error("bags do not form a tree")]
    NotATree,
    #[error("bag {bag} holds {vertex}, which is not a vertex of the graph")]
    UnknownVertex { bag: usize, vertex: String },
    #[error("vertex {0} is in no bag")]
    MissingVertex(String),
    #[error("containment: no bag holds edge {0}-{1}")]
    MissingEdge(String, String),
    #[error("connectivity: the bags holding {0} are not connected")]
    Disconnected(String),
}

impl Decomposition {
    pub fn width(&self) -> usize {
        self.bags
            .values()
            .map(BTreeSet::len)
            .max()
            .unwrap_or(0)
            .saturating_sub(1)
    }

    pub fn is_path(&self) -> bool {
        let mut deg: BTreeMap<usize, usize> = BTreeMap::new();
        for (a, b) in &self.tree {
            *deg.entry(*a).or_default() += 1;
            *deg.entry(*b).or_default() += 1;
        }
        deg.values().all(|d| *d <= 2)
    }

    pub fn neighbors(&self, b: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .tree
            .iter()
            .filter_map(|&(x, y)| {
                if x == b {
                    Some(y)
                } else if y == b {
                    Some(x)
                } else {
                    None
                }
            })
            .collect();
        out.sort();
        out
    }

    /// `B <id> <member>...` and `T <id> <id>` lines.
    pub fn parse(text: &str) -> Result<Decomposition> {
        let mut d = Decomposition::default();
        for (ln, line) in text.lines().enumerate() {
            let toks: Vec<&str> = line.split_whitespace().collect();
            let id = |t: &str| {
                t.parse::<usize>()
                    .map_err(|_| Error::parse(ln + 1, format!("bad bag id {t:?}")))
            };
            match toks.as_slice() {
                [] => {}
                ["B", b, rest @ ..] => {
                    let b = id(b)?;
                    if d.bags.insert(b, rest.iter().map(|s| Var::from(*s)).collect()).is_some() {
                        return Err(Error::parse(ln + 1, format!("bag {b} declared twice")));
                    }
                }
                ["T", a, b] => d.tree.push((id(a)?, id(b)?)),
                _ => return Err(Error::parse(ln + 1, format!("unrecognised line {line:?}"))),
            }
        }
        Ok(d)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (b, members) in &self.bags {
            out.push_str(&format!("B {b}"));
            for v in members {
                out.push_str(&format!(" {v}"));
            }
            out.push('\n');
        }
        for (a, b) in &self.tree {
            out.push_str(&format!("T {a} {b}\n"));
        }
        out
    }
}

/// Checks the tree shape, containment and connectivity rules; returns the
/// width.
pub fn validate_decomposition(g: &Graph, d: &Decomposition) -> Result<usize, DecompositionError> {
    for &(a, b) in &d.tree {
        for x in [a, b] {
            if !d.bags.contains_key(&x) {
                return Err(DecompositionError::UnknownBag(x));
            }
        }
    }
    let nb = d.bags.len();
    if nb > 0 {
        if d.tree.len() != nb - 1 {
            return Err(DecompositionError::NotATree);
        }
        let all: BTreeSet<usize> = d.bags.keys().copied().collect();
        if connected_within(d, &all) != all.len() {
            return Err(DecompositionError::NotATree);
        }
    }
    for (b, members) in &d.bags {
        if let Some(v) = members.iter().find(|v| !g.contains(v)) {
            return Err(DecompositionError::UnknownVertex {
                bag: *b,
                vertex: v.to_string(),
            });
        }
    }
    for v in g.vertices() {
        if !d.bags.values().any(|m| m.contains(v)) {
            return Err(DecompositionError::MissingVertex(v.to_string()));
        }
    }
    for (u, v) in g.edges() {
        if !d.bags.values().any(|m| m.contains(&u) && m.contains(&v)) {
            return Err(DecompositionError::MissingEdge(u.to_string(), v.to_string()));
        }
    }
    for v in g.vertices() {
        let holding: BTreeSet<usize> = d
            .bags
            .iter()
            .filter(|(_, m)| m.contains(v))
            .map(|(b, _)| *b)
            .collect();
        if connected_within(d, &holding) != holding.len() {
            return Err(DecompositionError::Disconnected(v.to_string()));
        }
    }
    Ok(d.width())
}

/// Size of the component of the first member of `allowed` in the tree
/// restricted to `allowed`.
fn connected_within(d: &Decomposition, allowed: &BTreeSet<usize>) -> usize {
    let Some(&start) = allowed.iter().next() else {
        return 0;
    };
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(x) = queue.pop_front() {
        for y in d.neighbors(x) {
            if allowed.contains(&y) && seen.insert(y) {
                queue.push_back(y);
            }
        }
    }
    seen.len()
}

/// Cap on the vertex count for the exact width dynamic programs.
pub const EXACT_WIDTH_CAP: usize = 10;

/// Exact treewidth with an elimination-order decomposition.
pub fn treewidth_exact(g: &Graph) -> Result<(usize, Decomposition)> {
    treewidth_exact_with_cap(g, EXACT_WIDTH_CAP)
}

pub fn treewidth_exact_with_cap(g: &Graph, cap: usize) -> Result<(usize, Decomposition)> {
    let ix = g.indexed()?;
    let n = ix.n();
    if n > cap || n > 20 {
        return Err(Error::Scale {
            what: "exact treewidth",
            size: n,
            cap: cap.min(20),
        });
    }
    if n == 0 {
        return Ok((0, Decomposition::default()));
    }
    // q(s, v): vertices outside s ∪ {v} reachable from v through s.
    let q = |s: u32, v: usize| -> u32 {
        let s = s as u64;
        let mut seen = 1u64 << v;
        let mut frontier = 1u64 << v;
        let mut out = 0u64;
        while frontier != 0 {
            let x = frontier.trailing_zeros() as usize;
            frontier &= frontier - 1;
            let nb = ix.adj[x] & !seen;
            seen |= nb;
            out |= nb & !s;
            frontier |= nb & s;
        }
        out.count_ones()
    };
    let full = (1u32 << n) - 1;
    let mut tw = vec![0u32; 1 << n];
    let mut last = vec![0u8; 1 << n];
    for s in 1..=full {
        let mut best = u32::MAX;
        let mut arg = 0;
        let mut bits = s;
        while bits != 0 {
            let v = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let rest = s & !(1 << v);
            let w = tw[rest as usize].max(q(rest, v));
            if w < best {
                best = w;
                arg = v;
            }
        }
        tw[s as usize] = best;
        last[s as usize] = arg as u8;
    }
    let mut order = Vec::with_capacity(n);
    let mut s = full;
    while s != 0 {
        let v = last[s as usize] as usize;
        order.push(v);
        s &= !(1 << v);
    }
    order.reverse();
    let names: Vec<Var> = order.iter().map(|&i| ix.names[i].clone()).collect();
    let d = elimination_decomposition(g, &names);
    Ok((tw[full as usize] as usize, d))
}

/// The tree decomposition induced by an elimination order: bag `i` holds the
/// `i`-th vertex and its later neighbours in the fill-in graph.
pub fn elimination_decomposition(g: &Graph, order: &[Var]) -> Decomposition {
    let pos: BTreeMap<&Var, usize> = order.iter().enumerate().map(|(i, v)| (v, i)).collect();
    let mut nb: Vec<BTreeSet<usize>> = order
        .iter()
        .map(|v| g.neighbors(v).map(|w| pos[w]).collect())
        .collect();
    let mut d = Decomposition::default();
    let mut roots = Vec::new();
    for i in 0..order.len() {
        let higher: BTreeSet<usize> = nb[i].iter().copied().filter(|&j| j > i).collect();
        for &a in &higher {
            for &b in &higher {
                if a != b {
                    nb[a].insert(b);
                }
            }
        }
        let mut bag: BTreeSet<Var> = higher.iter().map(|&j| order[j].clone()).collect();
        bag.insert(order[i].clone());
        d.bags.insert(i, bag);
        match higher.iter().next() {
            Some(&p) => d.tree.push((i, p)),
            None => roots.push(i),
        }
    }
    for w in roots.windows(2) {
        d.tree.push((w[0], w[1]));
    }
    d
}

/// Exact pathwidth via vertex separation, with a path decomposition.
pub fn pathwidth_exact(g: &Graph) -> Result<(usize, Decomposition)> {
    let ix = g.indexed()?;
    let n = ix.n();
    if n > EXACT_WIDTH_CAP {
        return Err(Error::Scale {
            what: "exact pathwidth",
            size: n,
            cap: EXACT_WIDTH_CAP,
        });
    }
    if n == 0 {
        return Ok((0, Decomposition::default()));
    }
    let boundary = |s: u32| -> u32 {
        (0..n)
            .filter(|&v| s >> v & 1 == 1 && ix.adj[v] & !(s as u64) != 0)
            .count() as u32
    };
    let full = (1u32 << n) - 1;
    let mut vs = vec![0u32; 1 << n];
    let mut last = vec![0u8; 1 << n];
    for s in 1..=full {
        let mut best = u32::MAX;
        let mut arg = 0;
        let mut bits = s;
        while bits != 0 {
            let v = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let w = vs[(s & !(1 << v)) as usize];
            if w < best {
                best = w;
                arg = v;
            }
        }
        vs[s as usize] = best.max(boundary(s));
        last[s as usize] = arg as u8;
    }
    let mut order = Vec::with_capacity(n);
    let mut s = full;
    while s != 0 {
        let v = last[s as usize] as usize;
        order.push(v);
        s &= !(1 << v);
    }
    order.reverse();
    let mut d = Decomposition::default();
    let mut seen = 0u32;
    for (i, &v) in order.iter().enumerate() {
        let mut bag: BTreeSet<Var> = (0..n)
            .filter(|&u| seen >> u & 1 == 1 && ix.adj[u] & !(seen as u64) != 0)
            .map(|u| ix.names[u].clone())
            .collect();
        bag.insert(ix.names[v].clone());
        d.bags.insert(i, bag);
        if i > 0 {
            d.tree.push((i - 1, i));
        }
        seen |= 1 << v;
    }
    Ok((vs[full as usize] as usize, d))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: usize) -> Graph {
        Graph::from_edges((1..n).map(|i| (format!("v{i}"), format!("v{}", i + 1)))).unwrap()
    }

    fn order(names: &[&str]) -> LinearOrder {
        LinearOrder::new(names.iter().copied()).unwrap()
    }

    #[test]
    fn grid_sizes() {
        for (n, v, e) in [(1, 1, 0), (2, 4, 4), (3, 9, 12)] {
            let gr = grid(n).unwrap();
            assert_eq!(gr.graph.vertex_count(), v);
            assert_eq!(gr.graph.edge_count(), e);
            assert_eq!(gr.hor.len(), n * (n - 1));
            assert_eq!(gr.vert.len(), n * (n - 1));
        }
        assert!(matches!(grid(0), Err(Error::Range(_))));
    }

    #[test]
    fn doubling() {
        let g = Graph::from_edges([("u", "v")]).unwrap();
        let d = double(&g).unwrap();
        assert!(d.has_edge("u#1", "v#2") && d.has_edge("v#1", "u#2"));
        assert_eq!(d.edge_count(), 2);
        let mut iso = g.clone();
        iso.add_vertex("z");
        assert!(matches!(double(&iso), Err(Error::Precondition(_))));
    }

    #[test]
    fn c5_chord_double_edges() {
        let g = Graph::from_edges([
            ("u1", "u2"),
            ("u2", "u3"),
            ("u3", "u4"),
            ("u4", "u5"),
            ("u5", "u1"),
            ("u1", "u3"),
        ])
        .unwrap();
        let d = double(&g).unwrap();
        assert_eq!(d.edge_count(), 12);
        for (a, b) in [
            ("u1#1", "u2#2"),
            ("u2#1", "u3#2"),
            ("u3#1", "u4#2"),
            ("u4#1", "u5#2"),
            ("u5#1", "u1#2"),
            ("u1#1", "u3#2"),
            ("u1#2", "u2#1"),
            ("u2#2", "u3#1"),
            ("u3#2", "u4#1"),
            ("u4#2", "u5#1"),
            ("u5#2", "u1#1"),
            ("u1#2", "u3#1"),
        ] {
            assert!(d.has_edge(a, b), "{a}-{b}");
        }
    }

    #[test]
    fn p8_crossings() {
        let g = path(8);
        let id = order(&["v1", "v2", "v3", "v4", "v5", "v6", "v7", "v8"]);
        assert_eq!(crossing_width(&g, &id, CrossMode::Matching, false).unwrap().size, 1);
        let star = order(&["v1", "v3", "v5", "v7", "v2", "v4", "v6", "v8"]);
        let c = crossing_width(&g, &star, CrossMode::Matching, false).unwrap();
        assert_eq!(c.size, 4);
        assert_eq!(c.prefix_len, 4);
        assert_eq!(
            c.matching.edges(),
            vec![edge("v1", "v2"), edge("v3", "v4"), edge("v5", "v6"), edge("v7", "v8")]
        );
        let mut empty = Graph::new();
        empty.add_vertex("a");
        empty.add_vertex("b");
        let c = crossing_width(&empty, &order(&["a", "b"]), CrossMode::Matching, false).unwrap();
        assert_eq!(c.size, 0);
    }

    #[test]
    fn widths_small() {
        let e = Graph::from_edges([("a", "b")]).unwrap();
        assert_eq!(width_min(&e, WidthMode::Lsim, OrderSearch::Exhaustive).unwrap().0, 1);
        let g2 = grid(2).unwrap().graph;
        let lsim = width_min(&g2, WidthMode::Lsim, OrderSearch::Exhaustive).unwrap().0;
        let lmm = width_min(&g2, WidthMode::Lmm, OrderSearch::Exhaustive).unwrap().0;
        assert!(lmm >= lsim);
        assert!(width_min(&path(9), WidthMode::Lsim, OrderSearch::Exhaustive).is_err());
    }

    #[test]
    fn neat_on_single_edge() {
        let g = Graph::from_edges([("u", "v")]).unwrap();
        let gs = double(&g).unwrap();
        for k in 0..24 {
            let all: Vec<Var> = gs.vertices().cloned().collect();
            let pi = LinearOrder::new(nth_permutation(&all, k)).unwrap();
            let m = extract_neat(&g, &pi).unwrap();
            assert_eq!(m.matching.len(), 1);
            assert_eq!(verify_neat(&gs, &pi, &m.matching).map(|x| x.1), Some(m.side));
        }
    }

    #[test]
    fn split_requires_spanning() {
        let gr = grid(2).unwrap();
        let pi = LinearOrder::new(double(&gr.graph).unwrap().vertex_set()).unwrap();
        let all = gr.graph.edges();
        assert!(matches!(
            split_neat(&gr.graph, &all, &[], &pi),
            Err(Error::Precondition(_))
        ));
        let (side, m) = split_neat(&gr.graph, &gr.hor, &gr.vert, &pi).unwrap();
        let chosen = double_edges(if side == 1 { &gr.hor } else { &gr.vert });
        assert!(m.edges().iter().all(|e| chosen.contains(e)));
    }

    #[test]
    fn treewidth_values() {
        assert_eq!(treewidth_exact(&path(5)).unwrap().0, 1);
        assert_eq!(treewidth_exact(&grid(2).unwrap().graph).unwrap().0, 2);
        let (tw, d) = treewidth_exact(&grid(3).unwrap().graph).unwrap();
        assert_eq!(tw, 3);
        assert_eq!(validate_decomposition(&grid(3).unwrap().graph, &d).unwrap(), 3);
        let (pw, d) = pathwidth_exact(&grid(3).unwrap().graph).unwrap();
        assert_eq!(pw, 3);
        assert!(d.is_path());
        assert_eq!(validate_decomposition(&grid(3).unwrap().graph, &d).unwrap(), 3);
    }

    #[test]
    fn decomposition_errors() {
        let g = path(3);
        let mut d = Decomposition::default();
        d.bags.insert(0, g.vertex_set());
        assert_eq!(validate_decomposition(&g, &d).unwrap(), 2);
        let mut d = Decomposition::default();
        d.bags.insert(0, ["v1", "v2"].into_iter().map(Var::from).collect());
        d.bags.insert(1, ["v3"].into_iter().map(Var::from).collect());
        d.tree.push((0, 1));
        assert_eq!(
            validate_decomposition(&g, &d),
            Err(DecompositionError::MissingEdge("v2".into(), "v3".into()))
        );
        let text = Decomposition::render(&d);
        assert_eq!(Decomposition::parse(&text).unwrap(), d);
    }

    #[test]
    fn greedy_induced_on_p4() {
        let g = path(4);
        let m = Matching::new(vec![("v1".into(), "v2".into()), ("v3".into(), "v4".into())]).unwrap();
        let r = greedy_induced(&g, &m);
        assert_eq!(r.len(), 1);
        assert!(r.is_induced_in(&g));
        assert!(greedy_induced(&g, &Matching::default()).is_empty());
    }

    #[test]
    fn file_round_trips() {
        let g = grid(2).unwrap().graph;
        assert_eq!(Graph::parse(&g.render()).unwrap(), g);
        let o = order(&["b", "a"]);
        assert_eq!(LinearOrder::parse(&o.render()).unwrap(), o);
    }
}
