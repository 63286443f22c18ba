//! Upper-bound constructions: the clause decision tree, the tree-decomposition
//! compiler with its vtree, the long-clause split pipeline, the grid junction
//! ∧d-OBDD, the layered OBDD for ψ of the grid halves, and vtree respect
//! checks.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::assign::{project, Assignment};
use crate::cnf::{graphs_of, reduce, Clause, Cnf};
use crate::diagram::{Diagram, DiagramBuilder, Node, NodeId};
use crate::formula::{Orientation, JN};
use crate::graph::{
    copy, grid_dictionary_order, grid_transposed_order, grid_vertex, validate_decomposition, Decomposition,
    LinearOrder,
};
use crate::par::{self, Exec};
use crate::{Error, Result, Var};

// ---------------------------------------------------------------------------
// Decision trees

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DtNode {
    Leaf(bool),
    Test { var: Var, lo: usize, hi: usize },
}

/// A read-once decision tree stored as an arena.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionTree {
    nodes: Vec<DtNode>,
    root: usize,
}

impl DecisionTree {
    pub fn size(&self) -> usize {
        self.nodes.len()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn node(&self, i: usize) -> &DtNode {
        &self.nodes[i]
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                DtNode::Test { var, .. } => Some(var.clone()),
                DtNode::Leaf(_) => None,
            })
            .collect()
    }

    /// Every root-leaf path as `(a(P), leaf label)`, in 0-before-1 order.
    pub fn leaf_paths(&self) -> Vec<(Assignment, bool)> {
        let mut out = Vec::new();
        let mut stack = vec![(self.root, Assignment::new())];
        while let Some((u, a)) = stack.pop() {
            match &self.nodes[u] {
                DtNode::Leaf(b) => out.push((a, *b)),
                DtNode::Test { var, lo, hi } => {
                    let mut a1 = a.clone();
                    a1.insert(var.clone(), true);
                    let mut a0 = a;
                    a0.insert(var.clone(), false);
                    stack.push((*hi, a1));
                    stack.push((*lo, a0));
                }
            }
        }
        out
    }

    /// The tree as an FBDD (identical subtrees are shared).
    pub fn to_diagram(&self, declared: Option<BTreeSet<Var>>) -> Result<Diagram> {
        let mut bb = DiagramBuilder::new();
        let root = self.import_into(&mut bb, self.root);
        bb.finish(root, declared)
    }

    fn import_into(&self, bb: &mut DiagramBuilder, u: usize) -> NodeId {
        match &self.nodes[u] {
            DtNode::Leaf(b) => bb.sink(*b),
            DtNode::Test { var, lo, hi } => {
                let l = self.import_into(bb, *lo);
                let h = self.import_into(bb, *hi);
                bb.decision(var.clone(), l, h)
            }
        }
    }
}

/// `DT(φ)`: the least clause (by its sorted variable names) is falsified
/// along a spine in sorted variable order; the side branch leaving the spine
/// at `x_i` satisfies the clause and recurses on `φ[g_i]`.
pub fn decision_tree(phi: &Cnf) -> DecisionTree {
    let mut nodes = Vec::new();
    let root = dt_build(phi, &mut nodes);
    DecisionTree { nodes, root }
}

fn dt_build(phi: &Cnf, nodes: &mut Vec<DtNode>) -> usize {
    let push = |n: DtNode, nodes: &mut Vec<DtNode>| {
        nodes.push(n);
        nodes.len() - 1
    };
    if phi.is_empty() {
        return push(DtNode::Leaf(true), nodes);
    }
    if phi.has_empty_clause() {
        return push(DtNode::Leaf(false), nodes);
    }
    let c = phi
        .clauses()
        .iter()
        .min_by(|a, b| {
            let ka: Vec<&Var> = a.vars().collect();
            let kb: Vec<&Var> = b.vars().collect();
            ka.cmp(&kb).then_with(|| a.literals().cmp(b.literals()))
        })
        .expect("nonempty");
    let lits = c.literals().to_vec();
    let mut cur = push(DtNode::Leaf(false), nodes);
    for i in (0..lits.len()).rev() {
        let mut g: Assignment = lits[..i].iter().map(|l| (l.var.clone(), !l.positive)).collect();
        g.insert(lits[i].var.clone(), lits[i].positive);
        let side = dt_build(&reduce(phi, &g), nodes);
        let (lo, hi) = if lits[i].positive { (cur, side) } else { (side, cur) };
        cur = push(
            DtNode::Test {
                var: lits[i].var.clone(),
                lo,
                hi,
            },
            nodes,
        );
    }
    cur
}

// ---------------------------------------------------------------------------
// Vtrees

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VtNode {
    Leaf(Var),
    Internal(usize, usize),
}

/// A vtree in post-order: children precede parents and the root is last. The
/// empty vtree (no variables) has no nodes.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vtree {
    nodes: Vec<VtNode>,
}

impl Vtree {
    pub fn empty() -> Self {
        Vtree::default()
    }

    pub fn nodes(&self) -> &[VtNode] {
        &self.nodes
    }

    pub fn root(&self) -> Option<usize> {
        self.nodes.len().checked_sub(1)
    }

    pub fn leaf(&mut self, v: impl Into<Var>) -> usize {
        self.nodes.push(VtNode::Leaf(v.into()));
        self.nodes.len() - 1
    }

    pub fn internal(&mut self, l: usize, r: usize) -> usize {
        self.nodes.push(VtNode::Internal(l, r));
        self.nodes.len() - 1
    }

    /// Right chain `I(a_0, I(a_1, … a_last))` over existing node ids.
    fn chain(&mut self, items: &[usize]) -> Option<usize> {
        let (&last, rest) = items.split_last()?;
        Some(rest.iter().rev().fold(last, |acc, &x| self.internal(x, acc)))
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                VtNode::Leaf(v) => Some(v.clone()),
                VtNode::Internal(..) => None,
            })
            .collect()
    }

    /// Leaves from left to right.
    pub fn leaf_order(&self) -> Vec<Var> {
        let mut out = Vec::new();
        let Some(root) = self.root() else { return out };
        let mut stack = vec![root];
        while let Some(u) = stack.pop() {
            match &self.nodes[u] {
                VtNode::Leaf(v) => out.push(v.clone()),
                VtNode::Internal(l, r) => {
                    stack.push(*r);
                    stack.push(*l);
                }
            }
        }
        out
    }

    /// Post-order ids, distinct leaves, every non-root node used once.
    pub fn check(&self) -> Result<()> {
        let mut used = vec![false; self.nodes.len()];
        let mut leaves = BTreeSet::new();
        for (i, n) in self.nodes.iter().enumerate() {
            match n {
                VtNode::Leaf(v) => {
                    if !leaves.insert(v.clone()) {
                        return Err(Error::Malformed(format!("vtree leaf {v} repeated")));
                    }
                }
                VtNode::Internal(l, r) => {
                    for c in [*l, *r] {
                        if c >= i || std::mem::replace(&mut used[c], true) {
                            return Err(Error::Malformed(format!("vtree node {i} has a bad child {c}")));
                        }
                    }
                }
            }
        }
        if let Some(root) = self.root() {
            if let Some(i) = (0..root).find(|&i| !used[i]) {
                return Err(Error::Malformed(format!("vtree node {i} is detached")));
            }
        }
        Ok(())
    }

    /// `L <id> <var>` and `I <id> <left> <right>` lines, root last. Ids may
    /// be arbitrary but children must be declared before their parent.
    pub fn parse(text: &str) -> Result<Vtree> {
        let mut vt = Vtree::empty();
        let mut ids: BTreeMap<usize, usize> = BTreeMap::new();
        for (ln, line) in text.lines().enumerate() {
            let toks: Vec<&str> = line.split_whitespace().collect();
            let num = |t: &str| {
                t.parse::<usize>()
                    .map_err(|_| Error::parse(ln + 1, format!("bad vtree id {t:?}")))
            };
            let known = |t: &str, ids: &BTreeMap<usize, usize>| {
                let id = num(t)?;
                ids.get(&id)
                    .copied()
                    .ok_or_else(|| Error::parse(ln + 1, format!("vtree id {id} used before declaration")))
            };
            let (id, node) = match toks.as_slice() {
                [] => continue,
                ["L", id, v] => (num(id)?, vt.leaf(*v)),
                ["I", id, l, r] => {
                    let (l, r) = (known(l, &ids)?, known(r, &ids)?);
                    (num(id)?, vt.internal(l, r))
                }
                _ => return Err(Error::parse(ln + 1, format!("unrecognised line {line:?}"))),
            };
            if ids.insert(id, node).is_some() {
                return Err(Error::parse(ln + 1, format!("vtree id {id} declared twice")));
            }
        }
        vt.check()?;
        Ok(vt)
    }

    pub fn render(&self) -> String {
        self.nodes
            .iter()
            .enumerate()
            .map(|(i, n)| match n {
                VtNode::Leaf(v) => format!("L {i} {v}\n"),
                VtNode::Internal(l, r) => format!("I {i} {l} {r}\n"),
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RespectMode {
    ConjunctionOnly,
    DecisionDnnf,
}

impl RespectMode {
    pub fn parse(s: &str) -> Result<RespectMode> {
        match s {
            "conjunction-only" => Ok(RespectMode::ConjunctionOnly),
            "decision-dnnf" => Ok(RespectMode::DecisionDnnf),
            _ => Err(Error::Malformed(format!("unknown respect mode {s:?}"))),
        }
    }
}

struct VtIndex {
    vars: Vec<BTreeSet<Var>>,
    parent: Vec<Option<usize>>,
    depth: Vec<usize>,
    leaf: BTreeMap<Var, usize>,
}

impl VtIndex {
    fn new(vt: &Vtree) -> Self {
        let n = vt.nodes.len();
        let mut vars = vec![BTreeSet::new(); n];
        let mut parent = vec![None; n];
        let mut leaf = BTreeMap::new();
        for (i, node) in vt.nodes.iter().enumerate() {
            match node {
                VtNode::Leaf(v) => {
                    vars[i].insert(v.clone());
                    leaf.insert(v.clone(), i);
                }
                VtNode::Internal(l, r) => {
                    vars[i] = vars[*l].union(&vars[*r]).cloned().collect();
                    parent[*l] = Some(i);
                    parent[*r] = Some(i);
                }
            }
        }
        let mut depth = vec![0; n];
        for i in (0..n).rev() {
            if let Some(p) = parent[i] {
                depth[i] = depth[p] + 1;
            }
        }
        VtIndex {
            vars,
            parent,
            depth,
            leaf,
        }
    }

    fn lca(&self, mut a: usize, mut b: usize) -> usize {
        while a != b {
            if self.depth[a] >= self.depth[b] {
                a = self.parent[a].expect("common root");
            } else {
                b = self.parent[b].expect("common root");
            }
        }
        a
    }

    /// Whether some vtree node has `a` under one child and `b` under the
    /// other. An empty side is trivially placed.
    fn splits(&self, vt: &Vtree, a: &BTreeSet<Var>, b: &BTreeSet<Var>) -> bool {
        if a.is_empty() || b.is_empty() {
            return true;
        }
        let w = a
            .iter()
            .chain(b)
            .map(|v| self.leaf[v])
            .reduce(|x, y| self.lca(x, y))
            .expect("nonempty");
        match &vt.nodes[w] {
            VtNode::Leaf(_) => false,
            VtNode::Internal(l, r) => {
                (a.is_subset(&self.vars[*l]) && b.is_subset(&self.vars[*r]))
                    || (a.is_subset(&self.vars[*r]) && b.is_subset(&self.vars[*l]))
            }
        }
    }
}

/// Checks `b` against `vt`; returns the first violating node, if any.
pub fn respects(b: &Diagram, vt: &Vtree, mode: RespectMode) -> Result<Option<NodeId>> {
    let vv = vt.vars();
    if let Some(v) = b.tested_vars().iter().find(|v| !vv.contains(*v)) {
        return Err(Error::Scope(format!("{v} is not a vtree leaf")));
    }
    let ix = VtIndex::new(vt);
    for u in 0..b.size() {
        let ok = match b.node(u) {
            Node::And { left, right } => ix.splits(vt, b.node_vars(*left), b.node_vars(*right)),
            Node::Decision { var, lo, hi } if mode == RespectMode::DecisionDnnf => {
                let x = BTreeSet::from([var.clone()]);
                ix.splits(vt, &x, b.node_vars(*lo)) && ix.splits(vt, &x, b.node_vars(*hi))
            }
            _ => true,
        };
        if !ok {
            return Ok(Some(u));
        }
    }
    Ok(None)
}

// ---------------------------------------------------------------------------
// Tree-decomposition compiler

/// A decomposition rooted at its least bag id; each variable lives at the
/// topmost bag that holds it.
#[derive(Debug, Clone)]
pub struct RootedDecomposition {
    bags: BTreeMap<usize, BTreeSet<Var>>,
    root: Option<usize>,
    children: BTreeMap<usize, Vec<usize>>,
    /// Bags in pre-order.
    preorder: Vec<usize>,
    own: BTreeMap<usize, Vec<Var>>,
}

impl RootedDecomposition {
    pub fn new(d: &Decomposition) -> Self {
        let root = d.bags.keys().next().copied();
        let mut children: BTreeMap<usize, Vec<usize>> = d.bags.keys().map(|&b| (b, Vec::new())).collect();
        let mut preorder = Vec::new();
        let mut own: BTreeMap<usize, Vec<Var>> = BTreeMap::new();
        if let Some(r) = root {
            let mut seen = BTreeSet::from([r]);
            let mut stack = vec![r];
            let mut placed: BTreeSet<Var> = BTreeSet::new();
            while let Some(t) = stack.pop() {
                preorder.push(t);
                own.insert(
                    t,
                    d.bags[&t].iter().filter(|v| placed.insert((*v).clone())).cloned().collect(),
                );
                let kids: Vec<usize> = d.neighbors(t).into_iter().filter(|c| seen.insert(*c)).collect();
                stack.extend(kids.iter().rev());
                children.insert(t, kids);
            }
        }
        RootedDecomposition {
            bags: d.bags.clone(),
            root,
            children,
            preorder,
            own,
        }
    }

    /// `VT(t)`: the own variables of `t` as a right chain ending in the
    /// right chain of the children's vtrees.
    pub fn vtree(&self) -> Vtree {
        let mut vt = Vtree::empty();
        if let Some(r) = self.root {
            self.vtree_at(r, &mut vt);
        }
        vt
    }

    fn vtree_at(&self, t: usize, vt: &mut Vtree) -> Option<usize> {
        let mut items: Vec<usize> = self.own[&t].iter().map(|v| vt.leaf(v.clone())).collect();
        for &c in &self.children[&t] {
            if let Some(x) = self.vtree_at(c, vt) {
                items.push(x);
            }
        }
        vt.chain(&items)
    }

    pub fn bag_count(&self) -> usize {
        self.preorder.len()
    }
}

struct PrimalRun<'a> {
    rd: &'a RootedDecomposition,
    present: BTreeSet<Var>,
    clauses_at: BTreeMap<usize, Vec<&'a Clause>>,
    memo: HashMap<(usize, Assignment), NodeId>,
}

impl PrimalRun<'_> {
    fn bag(&mut self, bb: &mut DiagramBuilder, t: usize, ctx: Assignment) -> NodeId {
        if let Some(&id) = self.memo.get(&(t, ctx.clone())) {
            return id;
        }
        let own: Vec<Var> = self.rd.own[&t]
            .iter()
            .filter(|v| self.present.contains(*v))
            .cloned()
            .collect();
        let id = self.ladder(bb, t, &own, ctx.clone());
        self.memo.insert((t, ctx), id);
        id
    }

    fn ladder(&mut self, bb: &mut DiagramBuilder, t: usize, own: &[Var], a: Assignment) -> NodeId {
        if self.clauses_at[&t].iter().any(|c| c.status(&a) == Some(false)) {
            return bb.sink(false);
        }
        if let Some((x, rest)) = own.split_first() {
            let mut a0 = a.clone();
            a0.insert(x.clone(), false);
            let mut a1 = a;
            a1.insert(x.clone(), true);
            let lo = self.ladder(bb, t, rest, a0);
            let hi = self.ladder(bb, t, rest, a1);
            return bb.decision(x.clone(), lo, hi);
        }
        let kids = self.rd.children[&t].clone();
        let parts: Vec<NodeId> = kids
            .iter()
            .map(|&c| {
                let ctx = project(&a, &self.rd.bags[&c]);
                self.bag(bb, c, ctx)
            })
            .collect();
        match parts.split_last() {
            None => bb.sink(true),
            Some((&last, rest)) => rest.iter().rev().fold(last, |acc, &p| bb.and_simplified(p, acc)),
        }
    }
}

/// Compiles `phi` into `bb` along `rd`; `phi` may be a residual whose
/// variables are a subset of those `rd` was built for.
fn primal_into(bb: &mut DiagramBuilder, phi: &Cnf, rd: &RootedDecomposition) -> Result<NodeId> {
    if phi.has_empty_clause() {
        return Ok(bb.sink(false));
    }
    let mut clauses_at: BTreeMap<usize, Vec<&Clause>> = rd.preorder.iter().map(|&t| (t, Vec::new())).collect();
    for c in phi.clauses() {
        let vs: BTreeSet<Var> = c.vars().cloned().collect();
        let t = rd
            .preorder
            .iter()
            .find(|t| vs.is_subset(&rd.bags[t]))
            .ok_or_else(|| Error::Precondition(format!("no bag holds the clause {c}")))?;
        clauses_at.get_mut(t).expect("bag").push(c);
    }
    let Some(root) = rd.root else {
        return Ok(bb.sink(true));
    };
    let mut run = PrimalRun {
        rd,
        present: phi.vars(),
        clauses_at,
        memo: HashMap::new(),
    };
    Ok(run.bag(bb, root, Assignment::new()))
}

/// Size constant of the tree-decomposition compiler: at most
/// `PRIMAL_SIZE_CONSTANT · 2^{k+1} · (bags) + 2` nodes, with bags bounded by
/// `|clauses| + |vars|` for the decompositions used here.
pub const PRIMAL_SIZE_CONSTANT: usize = 2;

/// Structured ∧d-OBDD for `phi` from a tree decomposition of its primal
/// graph. Each bag enumerates its own variables as a decision ladder, prunes
/// assignments falsifying a clause placed at the bag, and conjoins its
/// children. The diagram respects the returned vtree in both modes and obeys
/// the vtree's leaf order.
pub fn compile_primal(phi: &Cnf, d: &Decomposition) -> Result<(Diagram, Vtree)> {
    let (primal, _) = graphs_of(phi);
    validate_decomposition(&primal, d)?;
    let rd = RootedDecomposition::new(d);
    let mut bb = DiagramBuilder::new();
    let root = primal_into(&mut bb, phi, &rd)?;
    Ok((bb.finish(root, Some(phi.vars()))?, rd.vtree()))
}

/// Three-stage pipeline: `DT(long)`, a primal compilation of the residual at
/// every true leaf (all against the one vtree of `d`), then a don't-care
/// chain over the untested variables in sorted order. `long` holds 0-based
/// clause positions. The returned vtree covers `vars(phi)`: the variables
/// missing from the residual CNF form a right chain above the vtree of `d`.
pub fn compile_split(phi: &Cnf, long: &BTreeSet<usize>, d: &Decomposition) -> Result<(Diagram, Vtree)> {
    if let Some(p) = long.iter().find(|p| **p >= phi.len()) {
        return Err(Error::Range(format!("clause position {p} out of range")));
    }
    let rest = phi.without(long);
    let (primal, _) = graphs_of(&rest);
    validate_decomposition(&primal, d)?;
    let rd = RootedDecomposition::new(d);
    let dt = decision_tree(&phi.select(long));

    let mut bb = DiagramBuilder::new();
    let stage2 = split_attach(&mut bb, &dt, dt.root(), &Assignment::new(), &rest, &rd)?;
    let mid = bb.finish(stage2, None)?;

    let tested = mid.tested_vars().clone();
    let mut bb = DiagramBuilder::new();
    let mut top = bb.import(&mid, mid.source());
    for x in phi.vars().iter().rev().filter(|x| !tested.contains(*x)) {
        top = bb.decision(x.clone(), top, top);
    }
    let b = bb.finish(top, Some(phi.vars()))?;

    let inner = rd.vtree();
    let mut vt = inner.clone();
    let rest_vars = rest.vars();
    let mut items: Vec<usize> = phi
        .vars()
        .iter()
        .filter(|v| !rest_vars.contains(*v))
        .map(|v| vt.leaf(v.clone()))
        .collect();
    if let Some(r) = inner.root() {
        items.push(r);
    }
    let _ = vt.chain(&items);
    Ok((b, vt))
}

fn split_attach(
    bb: &mut DiagramBuilder,
    dt: &DecisionTree,
    u: usize,
    path: &Assignment,
    rest: &Cnf,
    rd: &RootedDecomposition,
) -> Result<NodeId> {
    match dt.node(u) {
        DtNode::Leaf(false) => Ok(bb.sink(false)),
        DtNode::Leaf(true) => primal_into(bb, &reduce(rest, path), rd),
        DtNode::Test { var, lo, hi } => {
            let mut p0 = path.clone();
            p0.insert(var.clone(), false);
            let mut p1 = path.clone();
            p1.insert(var.clone(), true);
            let l = split_attach(bb, dt, *lo, &p0, rest, rd)?;
            let h = split_attach(bb, dt, *hi, &p1, rest, rd)?;
            Ok(bb.decision(var.clone(), l, h))
        }
    }
}

// ---------------------------------------------------------------------------
// Layered OBDDs

/// Reduced OBDD over `vars` (in that order) of a layered automaton: `step`
/// returns the next state or `None` for rejection, `accept` decides at the
/// end. Only forward-reachable states get nodes.
pub fn layered_obdd<S, F, A>(bb: &mut DiagramBuilder, vars: &[Var], init: S, step: F, accept: A) -> NodeId
where
    S: Copy + Ord,
    F: Fn(usize, S, bool) -> Option<S>,
    A: Fn(S) -> bool,
{
    let mut layers: Vec<BTreeSet<S>> = vec![BTreeSet::from([init])];
    for l in 0..vars.len() {
        let next = layers[l]
            .iter()
            .flat_map(|&s| [step(l, s, false), step(l, s, true)])
            .flatten()
            .collect();
        layers.push(next);
    }
    let f = bb.sink(false);
    let mut below: BTreeMap<S, NodeId> = layers[vars.len()].iter().map(|&s| (s, bb.sink(accept(s)))).collect();
    for l in (0..vars.len()).rev() {
        let mut here = BTreeMap::new();
        for &s in &layers[l] {
            let lo = step(l, s, false).map_or(f, |t| below[&t]);
            let hi = step(l, s, true).map_or(f, |t| below[&t]);
            here.insert(s, bb.decision_reduced(vars[l].clone(), lo, hi));
        }
        below = here;
    }
    below[&init]
}

/// OBDD of `φ(P)` for the path `vars[0] – vars[1] – …`, in path order.
fn path_cover_obdd(vars: &[Var]) -> Result<Diagram> {
    let mut bb = DiagramBuilder::new();
    // state: the previous vertex is in the cover
    let root = layered_obdd(
        &mut bb,
        vars,
        true,
        |_, prev, b| if !prev && !b { None } else { Some(b) },
        |_| true,
    );
    bb.finish(root, Some(vars.iter().cloned().collect()))
}

fn balanced_and(bb: &mut DiagramBuilder, parts: &[NodeId]) -> NodeId {
    match parts {
        [one] => *one,
        _ => {
            let (l, r) = parts.split_at(parts.len() / 2);
            let (l, r) = (balanced_and(bb, l), balanced_and(bb, r));
            bb.and(l, r)
        }
    }
}

/// Node-count constant of the grid junction ∧d-OBDD: at most `5·n²` nodes.
pub const GRID_JUNCTION_CONSTANT: usize = 5;

/// `π_d`: `jn`, then the grid in dictionary order.
pub fn grid_junction_order(n: usize) -> LinearOrder {
    let mut seq: Vec<Var> = vec![Var::from(JN)];
    seq.extend(grid_dictionary_order(n));
    LinearOrder::new(seq).expect("distinct")
}

/// ∧d-OBDD for the vc-junction formula of `grid(n)` with `E_hor` guarded by
/// `¬jn`: the 1-branch of `jn` conjoins the row OBDDs, the 0-branch the
/// column OBDDs, each through a balanced tree of conjunction nodes.
pub fn grid_junction_diagram(n: usize) -> Result<Diagram> {
    grid_junction_diagram_with(Exec::default(), n)
}

pub fn grid_junction_diagram_with(exec: Exec, n: usize) -> Result<Diagram> {
    if n < 2 {
        return Err(Error::Range("grid junction needs n ≥ 2".into()));
    }
    // lines 0..n are rows, n..2n columns
    let lines: Vec<Result<Diagram>> = par::map_range(exec, 2 * n, |k| {
        let vars: Vec<Var> = if k < n {
            (1..=n).map(|j| grid_vertex(k + 1, j)).collect()
        } else {
            (1..=n).map(|i| grid_vertex(i, k - n + 1)).collect()
        };
        path_cover_obdd(&vars)
    });
    let lines: Vec<Diagram> = lines.into_iter().collect::<Result<_>>()?;
    let mut bb = DiagramBuilder::new();
    let roots: Vec<NodeId> = lines.iter().map(|d| bb.import(d, d.source())).collect();
    let rows = balanced_and(&mut bb, &roots[..n]);
    let cols = balanced_and(&mut bb, &roots[n..]);
    let root = bb.decision(JN, cols, rows);
    bb.finish(root, Some(grid_junction_order(n).set()))
}

/// Variable order of the layered OBDD: `v#1, v#2` for each vertex along the
/// dictionary (hor) or transposed (vert) traversal.
pub fn psi_layer_order(n: usize, orientation: Orientation) -> LinearOrder {
    let trav = match orientation {
        Orientation::Hor => grid_dictionary_order(n),
        Orientation::Vert => grid_transposed_order(n),
    };
    LinearOrder::new(trav.iter().flat_map(|v| [copy(v, 1), copy(v, 2)])).expect("distinct")
}

// state bits of the layered ψ OBDD
const PREV1: u8 = 1;
const PREV2: u8 = 2;
const ZERO1: u8 = 4;
const ZERO2: u8 = 8;

/// OBDD for `ψ(grid(n)[E_orientation])` in [`psi_layer_order`]. The state
/// after a vertex is the bitfield (previous `v#1`, previous `v#2`, some `#1`
/// copy was 0, some `#2` copy was 0); between `v#1` and `v#2` the second bit
/// holds the fresh `v#1`. At most 16 states per layer.
pub fn psi_layer_obdd(n: usize, orientation: Orientation) -> Result<(Diagram, LinearOrder)> {
    if n < 2 {
        return Err(Error::Range("psi layer OBDD needs n ≥ 2".into()));
    }
    let order = psi_layer_order(n, orientation);
    let mut bb = DiagramBuilder::new();
    let root = psi_layer_into(&mut bb, n, &order);
    Ok((bb.finish(root, Some(order.set()))?, order))
}

fn psi_layer_into(bb: &mut DiagramBuilder, n: usize, order: &LinearOrder) -> NodeId {
    let step = |l: usize, s: u8, b: bool| -> Option<u8> {
        let k = l / 2;
        // the previous vertex on the traversal is a neighbour iff k is not a
        // line start
        let adjacent = k % n != 0;
        if l % 2 == 0 {
            if adjacent && s & PREV2 == 0 && !b {
                return None;
            }
            let p1 = if adjacent { s & PREV1 } else { PREV1 };
            Some(p1 | if b { PREV2 } else { ZERO1 } | s & (ZERO1 | ZERO2))
        } else {
            if s & PREV1 == 0 && !b {
                return None;
            }
            let c1 = if s & PREV2 != 0 { PREV1 } else { 0 };
            Some(c1 | if b { PREV2 } else { ZERO2 } | s & (ZERO1 | ZERO2))
        }
    };
    layered_obdd(bb, order.as_slice(), PREV1 | PREV2, step, |s| s & ZERO1 != 0 && s & ZERO2 != 0)
}

/// FBDD for the ψ-junction formula of `grid(n)` (`E_hor` guarded by `¬jn`):
/// `jn = 1` leads to the horizontal OBDD, `jn = 0` to the vertical one.
pub fn psi_junction_fbdd(n: usize) -> Result<Diagram> {
    if n < 2 {
        return Err(Error::Range("psi junction needs n ≥ 2".into()));
    }
    let hor = psi_layer_order(n, Orientation::Hor);
    let vert = psi_layer_order(n, Orientation::Vert);
    let mut bb = DiagramBuilder::new();
    let h = psi_layer_into(&mut bb, n, &hor);
    let v = psi_layer_into(&mut bb, n, &vert);
    let root = bb.decision(JN, v, h);
    let mut declared = hor.set();
    declared.insert(Var::from(JN));
    bb.finish(root, Some(declared))
}

/// Decision nodes per variable, listed along `order`.
pub fn layer_widths(b: &Diagram, order: &LinearOrder) -> Vec<usize> {
    let mut w = vec![0; order.len()];
    for n in b.nodes() {
        if let Node::Decision { var, .. } = n {
            if let Some(p) = order.position(var) {
                w[p] += 1;
            }
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::models;
    use crate::diagram::{models as dmodels, validate};
    use crate::formula::{junction, psi, vc, Family};
    use crate::graph::{grid, treewidth_exact, Graph};

    fn same_models(b: &Diagram, phi: &Cnf) -> bool {
        let universe = phi.vars();
        let lifted = b.with_declared(&universe);
        let expect = models(phi, &universe).unwrap();
        let got = crate::assign::product(
            &dmodels(&lifted).unwrap(),
            &crate::assign::AssignmentSet::cube(
                &universe.difference(lifted.tested_vars()).cloned().collect(),
            )
            .unwrap(),
        )
        .unwrap();
        expect == got
    }

    #[test]
    fn dtree_shapes() {
        assert_eq!(decision_tree(&Cnf::new()).size(), 1);
        let mut e = Cnf::new();
        e.push(Clause::empty());
        assert_eq!(decision_tree(&e).node(decision_tree(&e).root()), &DtNode::Leaf(false));
        let mut one = Cnf::new();
        one.push(Clause::positive(["x1", "x2"]));
        let dt = decision_tree(&one);
        assert_eq!(dt.size(), 5);
        let paths = dt.leaf_paths();
        assert_eq!(paths.len(), 3);
        assert_eq!(paths[0], (Assignment::parse("x1=0,x2=0").unwrap(), false));
    }

    #[test]
    fn primal_c4() {
        let g = Graph::from_edges([("a", "b"), ("b", "c"), ("c", "d"), ("d", "a")]).unwrap();
        let phi = vc(&g).unwrap();
        let (_, d) = treewidth_exact(&graphs_of(&phi).0).unwrap();
        let (b, vt) = compile_primal(&phi, &d).unwrap();
        assert!(same_models(&b, &phi));
        let count = crate::diagram::count_models(&b, &phi.vars()).unwrap();
        assert_eq!(count, 7u32.into());
        assert_eq!(respects(&b, &vt, RespectMode::DecisionDnnf).unwrap(), None);
        let pi = LinearOrder::new(vt.leaf_order()).unwrap();
        assert!(validate(&b, Some(&pi)).unwrap().and_obdd);
    }

    #[test]
    fn primal_empty() {
        let (b, vt) = compile_primal(&Cnf::new(), &Decomposition::default()).unwrap();
        assert_eq!(b.size(), 1);
        assert!(vt.root().is_none());
        let u = BTreeSet::from([Var::from("x")]);
        assert_eq!(crate::diagram::count_models(&b, &u).unwrap(), 2u32.into());
    }

    #[test]
    fn split_psi_edge() {
        let g = Graph::from_edges([("u", "v")]).unwrap();
        let phi = psi(&g).unwrap();
        let long: BTreeSet<usize> = [phi.len() - 2, phi.len() - 1].into();
        let (_, d) = treewidth_exact(&graphs_of(&phi.without(&long)).0).unwrap();
        let (b, vt) = compile_split(&phi, &long, &d).unwrap();
        assert!(same_models(&b, &phi));
        assert_eq!(respects(&b, &vt, RespectMode::ConjunctionOnly).unwrap(), None);
        assert_eq!(crate::diagram::count_models(&b, &phi.vars()).unwrap(), 2u32.into());
    }

    #[test]
    fn junction_grid() {
        for n in 2..=3 {
            let gr = grid(n).unwrap();
            let phi = junction(&gr.graph, &gr.hor, &gr.vert, Family::Vc).unwrap();
            let b = grid_junction_diagram(n).unwrap();
            assert!(validate(&b, Some(&grid_junction_order(n))).unwrap().and_obdd);
            assert!(same_models(&b, &phi));
            assert!(b.size() <= GRID_JUNCTION_CONSTANT * n * n);
        }
        assert_eq!(
            grid_junction_diagram_with(Exec::Sequential, 4).unwrap(),
            grid_junction_diagram_with(Exec::default(), 4).unwrap()
        );
    }

    #[test]
    fn psi_layers() {
        let gr = grid(2).unwrap();
        for (o, es) in [(Orientation::Hor, &gr.hor), (Orientation::Vert, &gr.vert)] {
            let phi = psi(&Graph::edge_subgraph(es)).unwrap();
            let (b, pi) = psi_layer_obdd(2, o).unwrap();
            assert!(validate(&b, Some(&pi)).unwrap().obdd);
            assert!(same_models(&b, &phi));
        }
        let phi = junction(&gr.graph, &gr.hor, &gr.vert, Family::Psi).unwrap();
        assert!(same_models(&psi_junction_fbdd(2).unwrap(), &phi));
    }

    #[test]
    fn vtree_roundtrip() {
        let mut vt = Vtree::empty();
        let a = vt.leaf("a");
        let b = vt.leaf("b");
        vt.internal(a, b);
        assert_eq!(Vtree::parse(&vt.render()).unwrap(), vt);
        assert!(Vtree::parse("L 0 a\nL 1 a\nI 2 0 1\n").is_err());
    }

    #[test]
    fn mixed_conjunction_rejected() {
        let mut vt = Vtree::empty();
        let (a, b, c) = (vt.leaf("a"), vt.leaf("b"), vt.leaf("c"));
        let ab = vt.internal(a, b);
        vt.internal(ab, c);
        let mut bb = DiagramBuilder::new();
        let (f, t) = (bb.sink(false), bb.sink(true));
        let x = bb.decision("a", f, t);
        let y = bb.decision("c", f, t);
        let root = bb.and(x, y);
        let d = bb.finish(root, None).unwrap();
        // {a} vs {c} splits at the root; {a} vs {b} would not with c around
        assert_eq!(respects(&d, &vt, RespectMode::ConjunctionOnly).unwrap(), None);
        let mut bb = DiagramBuilder::new();
        let (f, t) = (bb.sink(false), bb.sink(true));
        let x = bb.decision("a", f, t);
        let yc = bb.decision("c", f, t);
        let y = bb.decision("b", yc, t);
        let root = bb.and(x, y);
        let d = bb.finish(root, None).unwrap();
        assert_eq!(respects(&d, &vt, RespectMode::ConjunctionOnly).unwrap(), Some(d.source()));
    }
}
