//! Alignment `B[g]` of a ∧d-OBDD by an assignment, the frontier `L(g)` with
//! its tree `T(g)` and free set `X(g)`, the model-set decomposition check,
//! and the restriction transform `B ↦ B_{x←i}`.

use std::collections::{BTreeMap, BTreeSet};

use crate::assign::{product, product_all, restrict_set, Assignment, AssignmentSet};
use crate::diagram::{self, validate, Diagram, DiagramBuilder, Node, NodeId};
use crate::graph::LinearOrder;
use crate::par::Exec;
use crate::{Error, Result, Var, DEFAULT_BRUTE_FORCE_CAP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EdgeLabel {
    Zero,
    One,
    Left,
    Right,
}

/// `B[g]` as a subgraph of the base diagram (node ids are the base's).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignedDiagram {
    pub root: NodeId,
    pub g: Assignment,
    pub kept: BTreeSet<NodeId>,
    pub edges: Vec<(NodeId, NodeId, EdgeLabel)>,
    /// Kept decision nodes left with a single out-edge.
    pub incomplete: BTreeSet<NodeId>,
}

impl AlignedDiagram {
    pub fn out_edges(&self, u: NodeId) -> impl Iterator<Item = &(NodeId, NodeId, EdgeLabel)> + '_ {
        self.edges.iter().filter(move |e| e.0 == u)
    }

    /// JSON in the diagram format, base ids kept; incomplete nodes omit the
    /// removed child.
    pub fn to_json(&self, b: &Diagram) -> String {
        let vars: Vec<String> = b
            .node_vars(self.root)
            .iter()
            .map(|v| serde_json::to_string(v.as_ref()).expect("json"))
            .collect();
        let mut out = format!(
            "{{\"source\": {}, \"vars\": [{}], \"incomplete\": {:?}, \"nodes\": [\n",
            self.root,
            vars.join(", "),
            self.incomplete.iter().collect::<Vec<_>>()
        );
        let ids: Vec<NodeId> = self.kept.iter().copied().collect();
        for (k, &u) in ids.iter().enumerate() {
            let child = |l: EdgeLabel| self.out_edges(u).find(|e| e.2 == l).map(|e| e.1);
            let body = match b.node(u) {
                Node::Decision { var, .. } => {
                    let mut s = format!(
                        "\"kind\": \"decision\", \"var\": {}",
                        serde_json::to_string(var.as_ref()).expect("json")
                    );
                    if let Some(c) = child(EdgeLabel::Zero) {
                        s.push_str(&format!(", \"lo\": {c}"));
                    }
                    if let Some(c) = child(EdgeLabel::One) {
                        s.push_str(&format!(", \"hi\": {c}"));
                    }
                    s
                }
                Node::And { left, right } => format!("\"kind\": \"and\", \"left\": {left}, \"right\": {right}"),
                Node::Sink(v) => format!("\"kind\": \"sink\", \"value\": {}", u8::from(*v)),
            };
            let sep = if k + 1 == ids.len() { "" } else { "," };
            out.push_str(&format!("{{\"id\": {u}, {body}}}{sep}\n"));
        }
        out.push_str("]}\n");
        out
    }
}

/// `B[g]`: drop the out-edges of decision nodes that contradict `g`, then
/// keep what the source still reaches.
pub fn align(b: &Diagram, g: &Assignment) -> AlignedDiagram {
    align_at(b, b.source(), g)
}

/// `B_root[g]`.
pub fn align_at(b: &Diagram, root: NodeId, g: &Assignment) -> AlignedDiagram {
    let mut kept = BTreeSet::from([root]);
    let mut stack = vec![root];
    let mut edges = Vec::new();
    let mut incomplete = BTreeSet::new();
    while let Some(u) = stack.pop() {
        let outs: Vec<(NodeId, EdgeLabel)> = match b.node(u) {
            Node::Decision { var, lo, hi } => match g.get(var) {
                Some(false) => {
                    incomplete.insert(u);
                    vec![(*lo, EdgeLabel::Zero)]
                }
                Some(true) => {
                    incomplete.insert(u);
                    vec![(*hi, EdgeLabel::One)]
                }
                None => vec![(*lo, EdgeLabel::Zero), (*hi, EdgeLabel::One)],
            },
            Node::And { left, right } => vec![(*left, EdgeLabel::Left), (*right, EdgeLabel::Right)],
            Node::Sink(_) => vec![],
        };
        for (c, l) in outs {
            edges.push((u, c, l));
            if kept.insert(c) {
                stack.push(c);
            }
        }
    }
    edges.sort();
    AlignedDiagram {
        root,
        g: g.clone(),
        kept,
        edges,
        incomplete,
    }
}

/// `L(g)`, `T(g)` and `X(g)` of an aligned ∧d-OBDD.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frontier {
    pub l: BTreeSet<NodeId>,
    /// `(child, parent)` links of `T(g)`.
    pub tree: Vec<(NodeId, NodeId)>,
    pub x: BTreeSet<Var>,
}

impl Frontier {
    pub fn to_json(&self) -> String {
        let v = serde_json::json!({
            "L": self.l.iter().collect::<Vec<_>>(),
            "X": self.x.iter().map(|v| v.as_ref()).collect::<Vec<&str>>(),
            "tree": self.tree.iter().map(|(c, p)| [c, p]).collect::<Vec<_>>(),
        });
        format!("{}\n", serde_json::to_string(&v).expect("json"))
    }
}

/// Errors unless `vars(g)` is exactly a prefix of `pi`.
pub fn require_prefix(pi: &LinearOrder, g: &Assignment) -> Result<()> {
    let mut positions = Vec::with_capacity(g.len());
    for (v, _) in g.iter() {
        match pi.position(v) {
            Some(p) => positions.push(p),
            None => return Err(Error::Precondition(format!("{v} is not in the order"))),
        }
    }
    positions.sort_unstable();
    if positions.iter().enumerate().any(|(i, p)| i != *p) {
        return Err(Error::Precondition(
            "the assignment does not cover a prefix of the order".into(),
        ));
    }
    Ok(())
}

/// Frontier of `B` for an assignment over a prefix of `pi`; `B` must be a
/// valid ∧d-OBDD obeying `pi`.
pub fn frontier(b: &Diagram, pi: &LinearOrder, g: &Assignment) -> Result<Frontier> {
    validate(b, Some(pi))?;
    frontier_at(b, b.source(), pi, g)
}

/// Frontier of the subdiagram `B_root`. The three structural statements
/// (completeness is inherited downwards, frontier variable sets are
/// disjoint, `T(g)` is a tree) are asserted; a failure is a soundness error.
pub fn frontier_at(b: &Diagram, root: NodeId, pi: &LinearOrder, g: &Assignment) -> Result<Frontier> {
    require_prefix(pi, g)?;
    let al = align_at(b, root, g);
    let is_complete = |u: NodeId| matches!(b.node(u), Node::Decision { .. }) && !al.incomplete.contains(&u);

    // Walk from the root through conjunctions and incomplete decisions.
    let mut l = BTreeSet::new();
    let mut through = BTreeSet::new();
    let mut stack = vec![root];
    let mut seen = BTreeSet::from([root]);
    while let Some(u) = stack.pop() {
        if is_complete(u) {
            l.insert(u);
            continue;
        }
        if matches!(b.node(u), Node::Sink(_)) {
            continue;
        }
        through.insert(u);
        for e in al.out_edges(u) {
            if seen.insert(e.1) {
                stack.push(e.1);
            }
        }
    }

    // (1) no incomplete decision node below a complete one.
    let mut below = BTreeSet::new();
    let mut stack: Vec<NodeId> = al.kept.iter().copied().filter(|&u| is_complete(u)).collect();
    while let Some(u) = stack.pop() {
        for e in al.out_edges(u) {
            if below.insert(e.1) {
                stack.push(e.1);
            }
        }
    }
    if let Some(u) = below.iter().find(|u| al.incomplete.contains(u)) {
        return Err(Error::Soundness(format!(
            "incomplete decision node {u} lies below a complete one"
        )));
    }

    // (2) pairwise disjoint variable sets over the frontier.
    let mut owner: BTreeMap<&Var, NodeId> = BTreeMap::new();
    for &u in &l {
        for v in b.node_vars(u) {
            if let Some(w) = owner.insert(v, u) {
                return Err(Error::Soundness(format!(
                    "frontier nodes {w} and {u} share variable {v}"
                )));
            }
        }
    }

    // (3) T(g): nodes on walks ending in L(g), each with a single parent.
    let mut useful: BTreeSet<NodeId> = l.clone();
    loop {
        let before = useful.len();
        for &u in &through {
            if !useful.contains(&u) && al.out_edges(u).any(|e| useful.contains(&e.1)) {
                useful.insert(u);
            }
        }
        if useful.len() == before {
            break;
        }
    }
    let mut tree = Vec::new();
    let mut parents: BTreeMap<NodeId, usize> = BTreeMap::new();
    for &u in useful.iter().filter(|u| through.contains(u)) {
        for e in al.out_edges(u).filter(|e| useful.contains(&e.1)) {
            tree.push((e.1, u));
            *parents.entry(e.1).or_default() += 1;
        }
    }
    if let Some((v, _)) = parents.iter().find(|(_, k)| **k > 1) {
        return Err(Error::Soundness(format!("T(g) is not a tree: node {v} has two parents")));
    }
    if parents.contains_key(&root) {
        return Err(Error::Soundness("T(g) is not rooted at the source".into()));
    }
    tree.sort();

    let covered: BTreeSet<&Var> = owner.keys().copied().collect();
    let x = b
        .node_vars(root)
        .iter()
        .filter(|v| !g.contains_var(v) && !covered.contains(v))
        .cloned()
        .collect();
    Ok(Frontier { l, tree, x })
}

/// Checks `S(B)|g = X^{0,1} × Π_{u∈L(g)} S(B_u)` with both sides computed by
/// brute force.
pub fn check_model_decomposition(b: &Diagram, pi: &LinearOrder, g: &Assignment) -> Result<bool> {
    let fr = frontier(b, pi, g)?;
    check_model_decomposition_at(b, b.source(), g, &fr)
}

pub fn check_model_decomposition_at(b: &Diagram, root: NodeId, g: &Assignment, fr: &Frontier) -> Result<bool> {
    let lhs = restrict_set(&diagram::models_at(b, root)?, g);
    if lhs.is_empty() {
        return Err(Error::Precondition("S(B)|g is empty".into()));
    }
    let parts: Vec<AssignmentSet> = fr
        .l
        .iter()
        .map(|&u| diagram::models_at(b, u))
        .collect::<Result<_>>()?;
    let rhs = product(&AssignmentSet::cube(&fr.x)?, &product_all(&parts)?)?;
    Ok(lhs == rhs)
}

/// `B_{x←i}`: redirect every edge into an `x`-node to that node's
/// `i`-child, then prune. `B` must be a ∧d-OBDD. Unless `waiver` is set,
/// every variable of `f(B)|{x=i}` must be essential, checked by brute force
/// within the default cap.
pub fn restrict_diagram(b: &Diagram, x: &str, i: bool, waiver: bool) -> Result<Diagram> {
    if !b.tested_vars().contains(x) {
        return Ok(b.clone());
    }
    let class = validate(b, None)?;
    if !class.and_obdd {
        return Err(Error::Precondition("restriction needs a ∧d-OBDD".into()));
    }
    if !waiver {
        if let Some(v) = inessential_after(b, x, i)? {
            return Err(Error::Precondition(format!(
                "{v} is inessential in f(B)|{{{x}={}}}",
                u8::from(i)
            )));
        }
    }
    let mut bb = DiagramBuilder::new();
    let mut map: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    for &u in b.topo() {
        let id = match b.node(u) {
            Node::Decision { var, lo, hi } if var.as_ref() == x => map[if i { hi } else { lo }],
            Node::Decision { var, lo, hi } => bb.decision(var.clone(), map[lo], map[hi]),
            Node::And { left, right } => bb.and(map[left], map[right]),
            Node::Sink(v) => bb.sink(*v),
        };
        map.insert(u, id);
    }
    let mut declared = b.vars().clone();
    declared.remove(x);
    bb.finish(map[&b.source()], Some(declared))
}

/// The first variable of `vars(B) \ {x}` on which `f(B)|{x=i}` does not
/// depend, if any.
pub fn inessential_after(b: &Diagram, x: &str, i: bool) -> Result<Option<Var>> {
    let vars: Vec<Var> = b.tested_vars().iter().cloned().collect();
    let xi = vars
        .iter()
        .position(|v| v.as_ref() == x)
        .ok_or_else(|| Error::Scope(format!("{x} is not tested by the diagram")))?;
    let tt = diagram::truth_table(Exec::default(), b, &vars, DEFAULT_BRUTE_FORCE_CAP)?;
    let fixed = |m: usize| if i { m | 1 << xi } else { m & !(1 << xi) };
    for (k, v) in vars.iter().enumerate() {
        if k == xi {
            continue;
        }
        let depends = (0..tt.len())
            .filter(|m| (m >> xi & 1 == 1) == i && m >> k & 1 == 0)
            .any(|m| tt[fixed(m)] != tt[fixed(m | 1 << k)]);
        if !depends {
            return Ok(Some(v.clone()));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::figure_one;

    fn fig_order() -> LinearOrder {
        LinearOrder::new(["x2", "x1", "x3", "x5", "x4", "x6"]).unwrap()
    }

    fn node_on(b: &Diagram, var: &str) -> NodeId {
        (0..b.size())
            .find(|&u| b.node(u).var().is_some_and(|v| v.as_ref() == var))
            .unwrap()
    }

    #[test]
    fn figure_one_alignment() {
        let b = figure_one();
        let g = Assignment::parse("x2=1").unwrap();
        let al = align(&b, &g);
        // the x1/x3 conjunction and its decision nodes disappear
        assert!(!al.kept.contains(&node_on(&b, "x1")));
        assert!(!al.kept.contains(&node_on(&b, "x3")));
        assert_eq!(al.kept.len(), b.size() - 3);
        assert_eq!(al.incomplete, BTreeSet::from([node_on(&b, "x2")]));
        let fr = frontier(&b, &fig_order(), &g).unwrap();
        assert_eq!(fr.l, BTreeSet::from([node_on(&b, "x5")]));
        let x: Vec<&str> = fr.x.iter().map(|v| v.as_ref()).collect();
        assert_eq!(x, ["x1", "x3"]);
        assert!(check_model_decomposition(&b, &fig_order(), &g).unwrap());
    }

    #[test]
    fn empty_assignment() {
        let b = figure_one();
        assert_eq!(align(&b, &Assignment::new()).kept.len(), b.size());
        let fr = frontier(&b, &fig_order(), &Assignment::new()).unwrap();
        assert_eq!(fr.l, BTreeSet::from([node_on(&b, "x2"), node_on(&b, "x5")]));
        let x2 = b.subdiagram(node_on(&b, "x2"));
        let pi = LinearOrder::new(["x2", "x1", "x3"]).unwrap();
        let fr = frontier(&x2, &pi, &Assignment::new()).unwrap();
        assert_eq!(fr.l, BTreeSet::from([x2.source()]));
        assert!(fr.x.is_empty());
    }

    #[test]
    fn non_prefix_rejected() {
        let b = figure_one();
        let g = Assignment::parse("x1=1").unwrap();
        assert!(matches!(frontier(&b, &fig_order(), &g), Err(Error::Precondition(_))));
    }

    #[test]
    fn restriction_of_figure_one() {
        let b = figure_one();
        let r = restrict_diagram(&b, "x2", false, false).unwrap();
        assert!(r.size() <= b.size());
        let vars: Vec<Var> = r.tested_vars().iter().cloned().collect();
        let tt = diagram::truth_table(Exec::Sequential, &r, &vars, 22).unwrap();
        // x1 ∧ x3 ∧ (x4∨x5) ∧ (x5∨x6): 1 · 5 of 32 assignments over 5 vars
        assert_eq!(tt.iter().filter(|b| **b).count(), 5);
        assert_eq!(restrict_diagram(&b, "zz", true, false).unwrap(), b);
        // x2 = 1 satisfies both x2 clauses, leaving x1 and x3 inessential
        assert!(matches!(restrict_diagram(&b, "x2", true, false), Err(Error::Precondition(_))));
    }
}
