//! The ∧d-FBDD model: single-source DAGs of decision, decomposable
//! conjunction and sink nodes, read-once on every path. Covers construction,
//! class validation (FBDD, OBDD, ∧d-OBDD), accepted-set semantics,
//! evaluation, model counting and the JSON / DOT formats.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_bigint::BigUint;
use serde_json::Value;
use thiserror::Error;

use crate::assign::{product, Assignment, AssignmentSet};
use crate::graph::LinearOrder;
use crate::par::{self, Exec};
use crate::{Error, Result, Var, DEFAULT_BRUTE_FORCE_CAP};

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Node {
    Decision { var: Var, lo: NodeId, hi: NodeId },
    And { left: NodeId, right: NodeId },
    Sink(bool),
}

impl Node {
    pub fn children(&self) -> Vec<NodeId> {
        match self {
            Node::Decision { lo, hi, .. } => vec![*lo, *hi],
            Node::And { left, right } => vec![*left, *right],
            Node::Sink(_) => vec![],
        }
    }

    pub fn var(&self) -> Option<&Var> {
        match self {
            Node::Decision { var, .. } => Some(var),
            _ => None,
        }
    }

    fn remap(&self, f: impl Fn(NodeId) -> NodeId) -> Node {
        match self {
            Node::Decision { var, lo, hi } => Node::Decision {
                var: var.clone(),
                lo: f(*lo),
                hi: f(*hi),
            },
            Node::And { left, right } => Node::And {
                left: f(*left),
                right: f(*right),
            },
            Node::Sink(b) => Node::Sink(*b),
        }
    }
}

/// A structural defect, named after the invariant it breaks.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("node {node} points to missing node {child}")]
    DanglingChild { node: NodeId, child: NodeId },
    #[error("source {0} does not exist")]
    MissingSource(NodeId),
    #[error("cycle through node {0}")]
    Cycle(NodeId),
    #[error("source {0} has an incoming edge")]
    SourceHasParent(NodeId),
    #[error("nodes {0:?} have no incoming edge besides the source")]
    MultipleSources(Vec<NodeId>),
    #[error("sinks {nodes:?} carry the same label {value}")]
    DuplicateSink { value: bool, nodes: Vec<NodeId> },
    #[error("conjunction node {node}: both children test {var}")]
    Decomposability { node: NodeId, var: String },
    #[error("decision node {node} on {var} reaches another test of {var}")]
    ReadOnce { node: NodeId, var: String },
    #[error("decision node {node} on {var} reaches a test of {later}, which precedes it in the order")]
    OrderViolation {
        node: NodeId,
        var: String,
        later: String,
    },
    #[error("variable {0} is not in the order")]
    VarNotInOrder(String),
}

impl Violation {
    pub fn kind(&self) -> &'static str {
        match self {
            Violation::DanglingChild { .. } => "dangling-child",
            Violation::MissingSource(_) => "missing-source",
            Violation::Cycle(_) => "cycle",
            Violation::SourceHasParent(_) => "source-has-parent",
            Violation::MultipleSources(_) => "multiple-sources",
            Violation::DuplicateSink { .. } => "duplicate-sink",
            Violation::Decomposability { .. } => "decomposability",
            Violation::ReadOnce { .. } => "read-once",
            Violation::OrderViolation { .. } => "order-violation",
            Violation::VarNotInOrder(_) => "var-not-in-order",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Diagram {
    nodes: Vec<Node>,
    source: NodeId,
    declared: BTreeSet<Var>,
    /// Children before parents.
    topo: Vec<NodeId>,
    node_vars: Vec<BTreeSet<Var>>,
}

impl PartialEq for Diagram {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.source == other.source && self.declared == other.declared
    }
}

impl Eq for Diagram {}

impl Diagram {
    /// Wraps a node table. Only referential integrity and acyclicity are
    /// checked here; [`validate`] checks the class invariants.
    pub fn from_parts(nodes: Vec<Node>, source: NodeId, declared: Option<BTreeSet<Var>>) -> Result<Self> {
        if source >= nodes.len() {
            return Err(Violation::MissingSource(source).into());
        }
        for (id, n) in nodes.iter().enumerate() {
            for c in n.children() {
                if c >= nodes.len() {
                    return Err(Violation::DanglingChild { node: id, child: c }.into());
                }
            }
        }
        // Iterative DFS post-order over all nodes; grey nodes detect cycles.
        let mut state = vec![0u8; nodes.len()];
        let mut topo = Vec::with_capacity(nodes.len());
        for root in 0..nodes.len() {
            if state[root] != 0 {
                continue;
            }
            let mut stack = vec![(root, 0usize)];
            state[root] = 1;
            while let Some((u, k)) = stack.pop() {
                let ch = nodes[u].children();
                if k < ch.len() {
                    stack.push((u, k + 1));
                    let c = ch[k];
                    match state[c] {
                        0 => {
                            state[c] = 1;
                            stack.push((c, 0));
                        }
                        1 => return Err(Violation::Cycle(c).into()),
                        _ => {}
                    }
                } else {
                    state[u] = 2;
                    topo.push(u);
                }
            }
        }
        let mut node_vars: Vec<BTreeSet<Var>> = vec![BTreeSet::new(); nodes.len()];
        for &u in &topo {
            let mut s = BTreeSet::new();
            for c in nodes[u].children() {
                s.extend(node_vars[c].iter().cloned());
            }
            if let Some(v) = nodes[u].var() {
                s.insert(v.clone());
            }
            node_vars[u] = s;
        }
        let tested: BTreeSet<Var> = node_vars.iter().flatten().cloned().collect();
        let declared = match declared {
            Some(d) => {
                if let Some(v) = tested.iter().find(|v| !d.contains(*v)) {
                    return Err(Error::Malformed(format!(
                        "tested variable {v} missing from the declared variables"
                    )));
                }
                d
            }
            None => tested,
        };
        Ok(Diagram {
            nodes,
            source,
            declared,
            topo,
            node_vars,
        })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn source(&self) -> NodeId {
        self.source
    }

    /// `|B|`, the number of nodes.
    pub fn size(&self) -> usize {
        self.nodes.len()
    }

    /// Declared variables (a superset of the tested ones).
    pub fn vars(&self) -> &BTreeSet<Var> {
        &self.declared
    }

    /// `var(B)`: variables labelling decision nodes reachable from the source.
    pub fn tested_vars(&self) -> &BTreeSet<Var> {
        &self.node_vars[self.source]
    }

    /// `var(B_u)`.
    pub fn node_vars(&self, u: NodeId) -> &BTreeSet<Var> {
        &self.node_vars[u]
    }

    /// All node ids, children before parents.
    pub fn topo(&self) -> &[NodeId] {
        &self.topo
    }

    pub fn count_kind(&self) -> (usize, usize, usize) {
        let mut c = (0, 0, 0);
        for n in &self.nodes {
            match n {
                Node::Decision { .. } => c.0 += 1,
                Node::And { .. } => c.1 += 1,
                Node::Sink(_) => c.2 += 1,
            }
        }
        c
    }

    /// Nodes reachable from `u`, ascending.
    pub fn reachable_from(&self, u: NodeId) -> BTreeSet<NodeId> {
        let mut seen = BTreeSet::from([u]);
        let mut stack = vec![u];
        while let Some(x) = stack.pop() {
            for c in self.nodes[x].children() {
                if seen.insert(c) {
                    stack.push(c);
                }
            }
        }
        seen
    }

    /// `B_u` as a standalone diagram, renumbered canonically.
    pub fn subdiagram(&self, u: NodeId) -> Diagram {
        let mut b = DiagramBuilder::new();
        let root = b.import(self, u);
        b.finish(root, None).expect("subdiagram of a diagram")
    }

    /// The same diagram with a wider declared variable set.
    pub fn with_declared(&self, extra: &BTreeSet<Var>) -> Diagram {
        let mut d = self.clone();
        d.declared.extend(extra.iter().cloned());
        d
    }
}

/// Hash-consing builder. Identical nodes are shared; `finish` prunes and
/// renumbers.
#[derive(Debug, Default)]
pub struct DiagramBuilder {
    nodes: Vec<Node>,
    unique: HashMap<Node, NodeId>,
}

impl DiagramBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn intern(&mut self, n: Node) -> NodeId {
        if let Some(&id) = self.unique.get(&n) {
            return id;
        }
        let id = self.nodes.len();
        self.nodes.push(n.clone());
        self.unique.insert(n, id);
        id
    }

    pub fn sink(&mut self, value: bool) -> NodeId {
        self.intern(Node::Sink(value))
    }

    /// A decision node, kept even when both children coincide.
    pub fn decision(&mut self, var: impl Into<Var>, lo: NodeId, hi: NodeId) -> NodeId {
        self.intern(Node::Decision {
            var: var.into(),
            lo,
            hi,
        })
    }

    /// A decision node, skipped when both children coincide.
    pub fn decision_reduced(&mut self, var: impl Into<Var>, lo: NodeId, hi: NodeId) -> NodeId {
        if lo == hi {
            lo
        } else {
            self.decision(var, lo, hi)
        }
    }

    pub fn and(&mut self, left: NodeId, right: NodeId) -> NodeId {
        self.intern(Node::And { left, right })
    }

    /// Conjunction that folds constant children.
    pub fn and_simplified(&mut self, left: NodeId, right: NodeId) -> NodeId {
        match (self.sink_value(left), self.sink_value(right)) {
            (Some(false), _) => left,
            (_, Some(false)) => right,
            (Some(true), _) => right,
            (_, Some(true)) => left,
            _ => self.and(left, right),
        }
    }

    pub fn sink_value(&self, id: NodeId) -> Option<bool> {
        match self.nodes[id] {
            Node::Sink(b) => Some(b),
            _ => None,
        }
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Copies `B_u` of another diagram into this builder.
    pub fn import(&mut self, d: &Diagram, u: NodeId) -> NodeId {
        let mut map: HashMap<NodeId, NodeId> = HashMap::new();
        let reach = d.reachable_from(u);
        for &x in d.topo() {
            if !reach.contains(&x) {
                continue;
            }
            let n = d.node(x).remap(|c| map[&c]);
            let id = self.intern(n);
            map.insert(x, id);
        }
        map[&u]
    }

    /// Keeps the nodes reachable from `source`, numbered in DFS post-order
    /// (children before parents, low/left before high/right, source last).
    pub fn finish(&self, source: NodeId, declared: Option<BTreeSet<Var>>) -> Result<Diagram> {
        let mut new_id: HashMap<NodeId, NodeId> = HashMap::new();
        let mut order = Vec::new();
        let mut stack = vec![(source, 0usize)];
        let mut open = BTreeSet::from([source]);
        while let Some((u, k)) = stack.pop() {
            let ch = self.nodes[u].children();
            if k < ch.len() {
                stack.push((u, k + 1));
                let c = ch[k];
                if !new_id.contains_key(&c) && open.insert(c) {
                    stack.push((c, 0));
                } else if !new_id.contains_key(&c) {
                    return Err(Violation::Cycle(c).into());
                }
            } else {
                new_id.insert(u, order.len());
                order.push(u);
            }
        }
        let nodes: Vec<Node> = order
            .iter()
            .map(|&u| self.nodes[u].remap(|c| new_id[&c]))
            .collect();
        Diagram::from_parts(nodes, new_id[&source], declared)
    }
}

/// Class membership established by [`validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiagramClass {
    pub and_fbdd: bool,
    pub fbdd: bool,
    pub and_obdd: bool,
    pub obdd: bool,
    /// The order checked or, without one, an order the diagram obeys.
    pub order: Option<LinearOrder>,
}

/// Checks the ∧d-FBDD invariants and, given `order`, obedience to it.
/// Without an order, reports whether some order is obeyed.
pub fn validate(b: &Diagram, order: Option<&LinearOrder>) -> Result<DiagramClass, Violation> {
    let n = b.size();
    let mut indeg = vec![0usize; n];
    for node in b.nodes() {
        for c in node.children() {
            indeg[c] += 1;
        }
    }
    if indeg[b.source] > 0 {
        return Err(Violation::SourceHasParent(b.source));
    }
    let others: Vec<NodeId> = (0..n).filter(|&u| u != b.source && indeg[u] == 0).collect();
    if !others.is_empty() {
        return Err(Violation::MultipleSources(others));
    }
    for value in [false, true] {
        let sinks: Vec<NodeId> = (0..n)
            .filter(|&u| b.nodes[u] == Node::Sink(value))
            .collect();
        if sinks.len() > 1 {
            return Err(Violation::DuplicateSink { value, nodes: sinks });
        }
    }
    for &u in b.topo() {
        match &b.nodes[u] {
            Node::And { left, right } => {
                if let Some(v) = b.node_vars[*left].intersection(&b.node_vars[*right]).next() {
                    return Err(Violation::Decomposability {
                        node: u,
                        var: v.to_string(),
                    });
                }
            }
            Node::Decision { var, lo, hi } => {
                if b.node_vars[*lo].contains(var) || b.node_vars[*hi].contains(var) {
                    return Err(Violation::ReadOnce {
                        node: u,
                        var: var.to_string(),
                    });
                }
            }
            Node::Sink(_) => {}
        }
    }
    let has_and = b.nodes.iter().any(|x| matches!(x, Node::And { .. }));
    let order = match order {
        Some(pi) => {
            check_order(b, pi)?;
            Some(pi.clone())
        }
        None => infer_order(b),
    };
    let ordered = order.is_some();
    Ok(DiagramClass {
        and_fbdd: true,
        fbdd: !has_and,
        and_obdd: ordered,
        obdd: ordered && !has_and,
        order,
    })
}

fn check_order(b: &Diagram, pi: &LinearOrder) -> Result<(), Violation> {
    for v in b.tested_vars() {
        if !pi.contains(v) {
            return Err(Violation::VarNotInOrder(v.to_string()));
        }
    }
    for &u in b.topo() {
        if let Node::Decision { var, lo, hi } = &b.nodes[u] {
            let p = pi.position(var).expect("checked above");
            for c in [lo, hi] {
                if let Some(y) = b.node_vars[*c].iter().find(|y| pi.position(y).expect("checked") <= p) {
                    return Err(Violation::OrderViolation {
                        node: u,
                        var: var.to_string(),
                        later: y.to_string(),
                    });
                }
            }
        }
    }
    Ok(())
}

/// A linear order of the declared variables obeyed by `b`, if one exists:
/// a lexicographically least topological sort of the "tested before"
/// relation.
pub fn infer_order(b: &Diagram) -> Option<LinearOrder> {
    let mut succ: BTreeMap<Var, BTreeSet<Var>> = b.vars().iter().map(|v| (v.clone(), BTreeSet::new())).collect();
    for node in b.nodes() {
        if let Node::Decision { var, lo, hi } = node {
            for c in [lo, hi] {
                for y in b.node_vars(*c) {
                    succ.get_mut(var).expect("declared").insert(y.clone());
                }
            }
        }
    }
    let mut indeg: BTreeMap<Var, usize> = succ.keys().map(|v| (v.clone(), 0)).collect();
    for ys in succ.values() {
        for y in ys {
            *indeg.get_mut(y).expect("declared") += 1;
        }
    }
    let mut ready: BTreeSet<Var> = indeg.iter().filter(|(_, d)| **d == 0).map(|(v, _)| v.clone()).collect();
    let mut out = Vec::new();
    while let Some(v) = ready.pop_first() {
        for y in &succ[&v] {
            let d = indeg.get_mut(y).expect("declared");
            *d -= 1;
            if *d == 0 {
                ready.insert(y.clone());
            }
        }
        out.push(v);
    }
    (out.len() == succ.len()).then(|| LinearOrder::new(out).expect("distinct"))
}

/// `A(B_u)` for every node, memoized. Members may be partial.
pub fn accepted(b: &Diagram) -> Result<AssignmentSet> {
    accepted_at(b, b.source)
}

pub fn accepted_at(b: &Diagram, root: NodeId) -> Result<AssignmentSet> {
    let nv = b.node_vars(root).len();
    if nv > DEFAULT_BRUTE_FORCE_CAP {
        return Err(Error::Scale {
            what: "accepted-set variables",
            size: nv,
            cap: DEFAULT_BRUTE_FORCE_CAP,
        });
    }
    let reach = b.reachable_from(root);
    let mut memo: HashMap<NodeId, AssignmentSet> = HashMap::new();
    for &u in b.topo() {
        if !reach.contains(&u) {
            continue;
        }
        let set = match &b.nodes[u] {
            Node::Sink(true) => AssignmentSet::unit(),
            Node::Sink(false) => AssignmentSet::empty(),
            Node::Decision { var, lo, hi } => {
                let mut out = AssignmentSet::empty();
                for (child, bit) in [(lo, false), (hi, true)] {
                    for a in memo[child].iter() {
                        let mut a = a.clone();
                        a.insert(var.clone(), bit);
                        out.insert(a);
                    }
                }
                out
            }
            Node::And { left, right } => product(&memo[left], &memo[right])?,
        };
        memo.insert(u, set);
    }
    Ok(memo.remove(&root).expect("root reached"))
}

/// `f(B)(a)` by a single walk.
pub fn evaluate(b: &Diagram, a: &Assignment) -> Result<bool> {
    if let Some(v) = b.tested_vars().iter().find(|v| !a.contains_var(v)) {
        return Err(Error::Scope(format!("assignment does not bind {v}")));
    }
    Ok(eval_from(b, b.source, &|v: &Var| a.get(v).expect("checked")))
}

fn eval_from(b: &Diagram, root: NodeId, value: &dyn Fn(&Var) -> bool) -> bool {
    let mut stack = vec![root];
    while let Some(u) = stack.pop() {
        match &b.nodes[u] {
            Node::Sink(true) => {}
            Node::Sink(false) => return false,
            Node::Decision { var, lo, hi } => stack.push(if value(var) { *hi } else { *lo }),
            Node::And { left, right } => {
                stack.push(*right);
                stack.push(*left);
            }
        }
    }
    true
}

/// Evaluation over a fixed variable indexing, for truth tables.
#[derive(Debug, Clone)]
pub struct MaskDiagram<'a> {
    b: &'a Diagram,
    bit: Vec<u32>,
}

impl<'a> MaskDiagram<'a> {
    pub fn new(b: &'a Diagram, universe: &[Var]) -> Result<Self> {
        Self::new_at(b, b.source, universe)
    }

    /// Like [`MaskDiagram::new`], only nodes below `root` need their
    /// variable in `universe`.
    pub fn new_at(b: &'a Diagram, root: NodeId, universe: &[Var]) -> Result<Self> {
        let below = b.reachable_from(root);
        if universe.len() > 64 {
            return Err(Error::Scale {
                what: "mask universe",
                size: universe.len(),
                cap: 64,
            });
        }
        let index: BTreeMap<&Var, u32> = universe.iter().enumerate().map(|(i, v)| (v, i as u32)).collect();
        let bit = b
            .nodes
            .iter()
            .enumerate()
            .map(|(u, n)| match n {
                Node::Decision { .. } if !below.contains(&u) => Ok(0),
                Node::Decision { var, .. } => index
                    .get(var)
                    .copied()
                    .ok_or_else(|| Error::Scope(format!("{var} is outside the universe"))),
                _ => Ok(0),
            })
            .collect::<Result<_>>()?;
        Ok(MaskDiagram { b, bit })
    }

    pub fn eval(&self, m: u64) -> bool {
        self.eval_from(self.b.source, m)
    }

    pub fn eval_from(&self, root: NodeId, m: u64) -> bool {
        let mut stack = vec![root];
        while let Some(u) = stack.pop() {
            match &self.b.nodes[u] {
                Node::Sink(true) => {}
                Node::Sink(false) => return false,
                Node::Decision { lo, hi, .. } => {
                    stack.push(if m >> self.bit[u] & 1 == 1 { *hi } else { *lo })
                }
                Node::And { left, right } => {
                    stack.push(*right);
                    stack.push(*left);
                }
            }
        }
        true
    }
}

/// Truth table of `f(B)` over `universe` (bit `i` of the index is
/// `universe[i]`).
pub fn truth_table(exec: Exec, b: &Diagram, universe: &[Var], cap: usize) -> Result<Vec<bool>> {
    if universe.len() > cap {
        return Err(Error::Scale {
            what: "brute-force universe",
            size: universe.len(),
            cap,
        });
    }
    let md = MaskDiagram::new(b, universe)?;
    Ok(par::map_range(exec, 1usize << universe.len(), |m| md.eval(m as u64)))
}

/// `S(B_u)`: the satisfying assignments of `B_u` over `var(B_u)`.
pub fn models_at(b: &Diagram, u: NodeId) -> Result<AssignmentSet> {
    let vars: Vec<Var> = b.node_vars(u).iter().cloned().collect();
    if vars.len() > DEFAULT_BRUTE_FORCE_CAP {
        return Err(Error::Scale {
            what: "brute-force universe",
            size: vars.len(),
            cap: DEFAULT_BRUTE_FORCE_CAP,
        });
    }
    let md = MaskDiagram::new_at(b, u, &vars)?;
    let hits = par::filter_range(Exec::default(), 1usize << vars.len(), |m| md.eval_from(u, m as u64));
    Ok(hits
        .into_iter()
        .map(|m| crate::cnf::mask_to_assignment(&vars, m as u64))
        .collect())
}

/// `S(B)` over `var(B)`.
pub fn models(b: &Diagram) -> Result<AssignmentSet> {
    models_at(b, b.source)
}

/// `|S(f(B))|` lifted to `universe` by one bottom-up pass.
pub fn count_models(b: &Diagram, universe: &BTreeSet<Var>) -> Result<BigUint> {
    if let Some(v) = b.tested_vars().iter().find(|v| !universe.contains(*v)) {
        return Err(Error::Scope(format!("universe does not contain {v}")));
    }
    let mut c: Vec<BigUint> = vec![BigUint::ZERO; b.size()];
    let nv = |u: NodeId| b.node_vars(u).len();
    for &u in b.topo() {
        c[u] = match &b.nodes[u] {
            Node::Sink(v) => BigUint::from(u8::from(*v)),
            Node::Decision { lo, hi, .. } => {
                let k = nv(u) - 1;
                (&c[*lo] << (k - nv(*lo))) + (&c[*hi] << (k - nv(*hi)))
            }
            Node::And { left, right } => {
                (&c[*left] * &c[*right]) << (nv(u) - nv(*left) - nv(*right))
            }
        };
    }
    Ok(&c[b.source] << (universe.len() - nv(b.source)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Lo,
    Hi,
    Left,
    Right,
}

/// `a(P)` for the path leaving `start` along `steps`; the variable of the
/// last node is not assigned.
pub fn path_assignment(b: &Diagram, start: NodeId, steps: &[Step]) -> Result<Assignment> {
    if start >= b.size() {
        return Err(Error::Precondition(format!("node {start} does not exist")));
    }
    let mut a = Assignment::new();
    let mut u = start;
    for (k, s) in steps.iter().enumerate() {
        u = match (&b.nodes[u], s) {
            (Node::Decision { var, lo, hi }, Step::Lo | Step::Hi) => {
                let bit = *s == Step::Hi;
                if a.insert(var.clone(), bit).is_some_and(|prev| prev != bit) {
                    return Err(Error::Precondition(format!("path tests {var} twice")));
                }
                if bit {
                    *hi
                } else {
                    *lo
                }
            }
            (Node::And { left, .. }, Step::Left) => *left,
            (Node::And { right, .. }, Step::Right) => *right,
            _ => {
                return Err(Error::Precondition(format!(
                    "step {k} ({s:?}) does not leave node {u}"
                )))
            }
        };
    }
    Ok(a)
}

/// `a(P)` for a path given by its nodes. Fails when a decision node's two
/// edges lead to the same child, since the label is then ambiguous.
pub fn path_assignment_nodes(b: &Diagram, path: &[NodeId]) -> Result<Assignment> {
    let Some(&start) = path.first() else {
        return Err(Error::Precondition("empty path".into()));
    };
    let mut steps = Vec::new();
    for w in path.windows(2) {
        let step = match &b.nodes[w[0]] {
            Node::Decision { lo, hi, .. } if lo == hi && *lo == w[1] => {
                return Err(Error::Precondition(format!("edge label out of node {} is ambiguous", w[0])))
            }
            Node::Decision { lo, .. } if *lo == w[1] => Step::Lo,
            Node::Decision { hi, .. } if *hi == w[1] => Step::Hi,
            Node::And { left, .. } if *left == w[1] => Step::Left,
            Node::And { right, .. } if *right == w[1] => Step::Right,
            _ => return Err(Error::Precondition(format!("{} -> {} is not an edge", w[0], w[1]))),
        };
        steps.push(step);
    }
    path_assignment(b, start, &steps)
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("string serialization")
}

/// The diagram file: one JSON object, one node per line, ascending ids.
pub fn to_json(b: &Diagram) -> String {
    let vars: Vec<String> = b.vars().iter().map(|v| json_str(v)).collect();
    let mut out = format!(
        "{{\"source\": {}, \"vars\": [{}], \"nodes\": [\n",
        b.source,
        vars.join(", ")
    );
    for (id, n) in b.nodes.iter().enumerate() {
        let body = match n {
            Node::Decision { var, lo, hi } => format!(
                "\"kind\": \"decision\", \"var\": {}, \"lo\": {lo}, \"hi\": {hi}",
                json_str(var)
            ),
            Node::And { left, right } => format!("\"kind\": \"and\", \"left\": {left}, \"right\": {right}"),
            Node::Sink(v) => format!("\"kind\": \"sink\", \"value\": {}", u8::from(*v)),
        };
        let sep = if id + 1 == b.size() { "" } else { "," };
        out.push_str(&format!("{{\"id\": {id}, {body}}}{sep}\n"));
    }
    out.push_str("]}\n");
    out
}

fn field_id(obj: &Value, key: &str, id: usize) -> Result<NodeId> {
    obj.get(key)
        .and_then(Value::as_u64)
        .map(|x| x as NodeId)
        .ok_or_else(|| Error::Malformed(format!("node {id}: missing or invalid {key:?}")))
}

pub fn from_json(text: &str) -> Result<Diagram> {
    let v: Value = serde_json::from_str(text)?;
    let source = v
        .get("source")
        .and_then(Value::as_u64)
        .ok_or_else(|| Error::Malformed("missing \"source\"".into()))? as NodeId;
    let declared = match v.get("vars") {
        None => None,
        Some(Value::Array(xs)) => Some(
            xs.iter()
                .map(|x| x.as_str().map(Var::from).ok_or_else(|| Error::Malformed("non-string variable".into())))
                .collect::<Result<BTreeSet<Var>>>()?,
        ),
        Some(_) => return Err(Error::Malformed("\"vars\" must be an array".into())),
    };
    let raw = v
        .get("nodes")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Malformed("missing \"nodes\" array".into()))?;
    let mut table: BTreeMap<usize, Node> = BTreeMap::new();
    for obj in raw {
        let id = obj
            .get("id")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Malformed("node without \"id\"".into()))? as usize;
        let kind = obj.get("kind").and_then(Value::as_str).unwrap_or("");
        let node = match kind {
            "decision" => Node::Decision {
                var: obj
                    .get("var")
                    .and_then(Value::as_str)
                    .ok_or_else(|| Error::Malformed(format!("node {id}: missing \"var\"")))?
                    .into(),
                lo: field_id(obj, "lo", id)?,
                hi: field_id(obj, "hi", id)?,
            },
            "and" => Node::And {
                left: field_id(obj, "left", id)?,
                right: field_id(obj, "right", id)?,
            },
            "sink" => match obj.get("value").and_then(Value::as_u64) {
                Some(0) => Node::Sink(false),
                Some(1) => Node::Sink(true),
                _ => return Err(Error::Malformed(format!("node {id}: sink value must be 0 or 1"))),
            },
            other => return Err(Error::Malformed(format!("node {id}: unknown kind {other:?}"))),
        };
        if table.insert(id, node).is_some() {
            return Err(Error::Malformed(format!("node id {id} repeated")));
        }
    }
    if table.keys().enumerate().any(|(i, id)| i != *id) {
        return Err(Error::Malformed("node ids must be 0..n-1".into()));
    }
    Diagram::from_parts(table.into_values().collect(), source, declared)
}

/// Graphviz rendering: decisions labelled by variable, conjunctions by ∧,
/// dashed 0-edges, T/F sinks.
pub fn to_dot(b: &Diagram) -> String {
    let mut out = String::from("digraph B {\n");
    for (id, n) in b.nodes.iter().enumerate() {
        let (label, shape) = match n {
            Node::Decision { var, .. } => (var.to_string(), "circle"),
            Node::And { .. } => ("∧".to_string(), "circle"),
            Node::Sink(v) => ((if *v { "T" } else { "F" }).to_string(), "box"),
        };
        out.push_str(&format!("  n{id} [label={}, shape={shape}];\n", json_str(&label)));
    }
    for (id, n) in b.nodes.iter().enumerate() {
        match n {
            Node::Decision { lo, hi, .. } => {
                out.push_str(&format!("  n{id} -> n{lo} [style=dashed];\n"));
                out.push_str(&format!("  n{id} -> n{hi};\n"));
            }
            Node::And { left, right } => {
                out.push_str(&format!("  n{id} -> n{left};\n"));
                out.push_str(&format!("  n{id} -> n{right};\n"));
            }
            Node::Sink(_) => {}
        }
    }
    out.push_str("}\n");
    out
}

/// The running example: `(x1∨x2)∧(x2∨x3)∧(x4∨x5)∧(x5∨x6)` as a ∧d-OBDD under
/// `(x2,x1,x3,x5,x4,x6)`, with a conjunction at the source.
pub fn figure_one() -> Diagram {
    let mut b = DiagramBuilder::new();
    let (f, t) = (b.sink(false), b.sink(true));
    let half = |b: &mut DiagramBuilder, top: &str, l: &str, r: &str| {
        let xl = b.decision(l, f, t);
        let xr = b.decision(r, f, t);
        let both = b.and(xl, xr);
        b.decision(top, both, t)
    };
    let x2 = half(&mut b, "x2", "x1", "x3");
    let x5 = half(&mut b, "x5", "x4", "x6");
    let root = b.and(x2, x5);
    b.finish(root, None).expect("well-formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assign::var_set;

    fn fig_order() -> LinearOrder {
        LinearOrder::new(["x2", "x1", "x3", "x5", "x4", "x6"]).unwrap()
    }

    #[test]
    fn figure_one_is_and_obdd() {
        let b = figure_one();
        let c = validate(&b, Some(&fig_order())).unwrap();
        assert!(c.and_obdd && c.and_fbdd && !c.fbdd && !c.obdd);
        assert_eq!(b.count_kind(), (6, 3, 2));
    }

    #[test]
    fn evaluation_examples() {
        let b = figure_one();
        let ones = Assignment::parse("x1=1,x2=1,x3=1,x4=1,x5=1,x6=1").unwrap();
        assert!(evaluate(&b, &ones).unwrap());
        let a = Assignment::parse("x1=0,x2=0,x3=1,x4=1,x5=1,x6=1").unwrap();
        assert!(!evaluate(&b, &a).unwrap());
        assert!(evaluate(&b, &Assignment::parse("x1=1").unwrap()).is_err());
    }

    #[test]
    fn accepted_examples() {
        let mut bb = DiagramBuilder::new();
        let t = bb.sink(true);
        let d = bb.finish(t, None).unwrap();
        assert_eq!(accepted(&d).unwrap(), AssignmentSet::unit());
        let f = bb.sink(false);
        assert!(accepted(&bb.finish(f, None).unwrap()).unwrap().is_empty());
        let x = bb.decision("x", t, t);
        let d = bb.finish(x, None).unwrap();
        assert_eq!(accepted(&d).unwrap().len(), 2);
    }

    #[test]
    fn counting() {
        let mut bb = DiagramBuilder::new();
        let t = bb.sink(true);
        let d = bb.finish(t, None).unwrap();
        assert_eq!(count_models(&d, &var_set(["a", "b", "c"])).unwrap(), BigUint::from(8u8));
        let b = figure_one();
        // (x1∨x2)∧(x2∨x3) has 5 models; squared for the two halves.
        assert_eq!(count_models(&b, b.vars()).unwrap(), BigUint::from(25u8));
        assert!(count_models(&b, &var_set(["x1"])).is_err());
    }

    #[test]
    fn broken_diagrams_rejected() {
        let nodes = vec![
            Node::Sink(false),
            Node::Sink(true),
            Node::Decision { var: "x".into(), lo: 0, hi: 1 },
            Node::Decision { var: "x".into(), lo: 1, hi: 0 },
            Node::And { left: 2, right: 3 },
        ];
        let d = Diagram::from_parts(nodes, 4, None).unwrap();
        assert_eq!(validate(&d, None).unwrap_err().kind(), "decomposability");
        let nodes = vec![
            Node::Sink(false),
            Node::Sink(true),
            Node::Decision { var: "x".into(), lo: 0, hi: 1 },
            Node::Decision { var: "x".into(), lo: 0, hi: 2 },
        ];
        let d = Diagram::from_parts(nodes, 3, None).unwrap();
        assert_eq!(validate(&d, None).unwrap_err().kind(), "read-once");
        let nodes = vec![Node::Sink(true), Node::Sink(true), Node::Decision { var: "x".into(), lo: 0, hi: 1 }];
        let d = Diagram::from_parts(nodes, 2, None).unwrap();
        assert_eq!(validate(&d, None).unwrap_err().kind(), "duplicate-sink");
        let nodes = vec![Node::Decision { var: "x".into(), lo: 0, hi: 0 }];
        assert!(Diagram::from_parts(nodes, 0, None).is_err());
    }

    #[test]
    fn path_assignments() {
        let b = figure_one();
        assert!(path_assignment(&b, b.source(), &[]).unwrap().is_empty());
        let a = path_assignment(&b, b.source(), &[Step::Left, Step::Lo, Step::Left]).unwrap();
        assert_eq!(a, Assignment::parse("x2=0").unwrap());
        let a = path_assignment(&b, b.source(), &[Step::Left, Step::Hi]).unwrap();
        assert_eq!(a, Assignment::parse("x2=1").unwrap());
    }

    #[test]
    fn json_round_trip() {
        let b = figure_one();
        let text = to_json(&b);
        assert_eq!(from_json(&text).unwrap(), b);
        assert_eq!(to_json(&from_json(&text).unwrap()), text);
        assert!(to_dot(&b).contains("∧"));
    }
}
