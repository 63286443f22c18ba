//! Fooling-set experiments: fooling assignments, unbreakable sets and their
//! extensions, location of `u(g)` on the frontier, injectivity certificates,
//! and an exact minimal-OBDD oracle by distinct-subfunction counting.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use sha2::{Digest, Sha256};

use crate::align::frontier;
use crate::assign::{breaks, restrict_set, Assignment, AssignmentSet};
use crate::cnf::{self, Cnf};
use crate::diagram::{self, validate, Diagram, DiagramBuilder, NodeId};
use crate::formula::{graph_hash, psi, vc};
use crate::graph::{double, search_orders, split_copy, verify_neat, Graph, LinearOrder, Matching, OrderSearch};
use crate::par::{self, Exec};
use crate::{Error, Result, Var, DEFAULT_BRUTE_FORCE_CAP};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    /// ∧d-OBDDs for ψ(G), with a matching of `G*` neatly crossing the order.
    AndObdd,
    /// OBDDs for φ(G), with an induced matching of `G` crossing the order.
    Obdd,
}

impl Engine {
    pub fn parse(s: &str) -> Result<Engine> {
        match s {
            "and-obdd" => Ok(Engine::AndObdd),
            "obdd" => Ok(Engine::Obdd),
            _ => Err(Error::Malformed(format!("unknown engine {s:?}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Engine::AndObdd => "and-obdd",
            Engine::Obdd => "obdd",
        }
    }
}

/// A validated experiment. `pairs[i] = (u_i, w_i)` with `u_i` on the prefix
/// side; pairs are listed by the position of `u_i` and indexed from 1.
#[derive(Debug, Clone)]
pub struct FoolingExperiment {
    pub graph: Graph,
    pub pairs: Vec<(Var, Var)>,
    pub order: LinearOrder,
    pub engine: Engine,
    /// `π0`: the prefix ending at the last `u_i`.
    pub prefix: Vec<Var>,
}

impl FoolingExperiment {
    pub fn new(graph: Graph, matching: &Matching, order: LinearOrder, engine: Engine) -> Result<Self> {
        let host = match engine {
            Engine::AndObdd => double(&graph)?,
            Engine::Obdd => {
                graph.require_no_isolated()?;
                graph.clone()
            }
        };
        if order.set() != host.vertex_set() {
            return Err(Error::Precondition(
                "the order must list exactly the formula variables".into(),
            ));
        }
        let pos = |v: &Var| order.position(v).expect("covered");
        let mut pairs: Vec<(Var, Var)> = match engine {
            Engine::AndObdd => {
                let (_, side) = verify_neat(&host, &order, matching).ok_or_else(|| {
                    Error::Precondition("the matching is not induced or does not neatly cross the order".into())
                })?;
                matching
                    .pairs
                    .iter()
                    .map(|(a, b)| {
                        if split_copy(a).map(|t| t.1) == Some(side) {
                            (a.clone(), b.clone())
                        } else {
                            (b.clone(), a.clone())
                        }
                    })
                    .collect()
            }
            Engine::Obdd => {
                if !matching.is_induced_in(&host) {
                    return Err(Error::Precondition("the matching is not induced in the graph".into()));
                }
                matching
                    .pairs
                    .iter()
                    .map(|(a, b)| if pos(a) < pos(b) { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) })
                    .collect()
            }
        };
        pairs.sort_by_key(|(u, _)| pos(u));
        let last_u = pairs.iter().map(|(u, _)| pos(u)).max();
        let first_w = pairs.iter().map(|(_, w)| pos(w)).min();
        if let (Some(lu), Some(fw)) = (last_u, first_w) {
            if lu > fw {
                return Err(Error::Precondition("some w precedes some u in the order".into()));
            }
        }
        let prefix = order.prefix(last_u.map_or(0, |p| p + 1)).to_vec();
        Ok(FoolingExperiment {
            graph,
            pairs,
            order,
            engine,
            prefix,
        })
    }

    pub fn q(&self) -> usize {
        self.pairs.len()
    }

    pub fn u_side(&self) -> Vec<Var> {
        self.pairs.iter().map(|(u, _)| u.clone()).collect()
    }

    pub fn w_side(&self) -> Vec<Var> {
        self.pairs.iter().map(|(_, w)| w.clone()).collect()
    }

    /// ψ(G) for the ∧d-OBDD engine, φ(G) for the OBDD engine.
    pub fn formula(&self) -> Result<Cnf> {
        match self.engine {
            Engine::AndObdd => psi(&self.graph),
            Engine::Obdd => vc(&self.graph),
        }
    }

    pub fn universe(&self) -> BTreeSet<Var> {
        self.order.set()
    }

    fn min_q(&self) -> usize {
        match self.engine {
            Engine::AndObdd => 3,
            Engine::Obdd => 1,
        }
    }

    fn is_fooling_pattern(&self, ones: usize) -> bool {
        let zeros = self.q() - ones;
        match self.engine {
            Engine::AndObdd => zeros >= 1 && ones >= 2,
            Engine::Obdd => zeros >= 1,
        }
    }

    /// Whether `g` is a fooling assignment of this experiment.
    pub fn is_fooling(&self, g: &Assignment) -> bool {
        if g.len() != self.prefix.len() || !self.prefix.iter().all(|v| g.contains_var(v)) {
            return false;
        }
        let us: BTreeSet<Var> = self.u_side().into_iter().collect();
        if self.prefix.iter().any(|v| !us.contains(v) && g.get(v) != Some(true)) {
            return false;
        }
        let ones = us.iter().filter(|u| g.get(u) == Some(true)).count();
        self.is_fooling_pattern(ones)
    }
}

/// Canonical bad order: the `u` side in its given order, then every other
/// variable sorted.
pub fn bad_order(universe: &BTreeSet<Var>, u_side: &[Var]) -> Result<LinearOrder> {
    let us: BTreeSet<&Var> = u_side.iter().collect();
    LinearOrder::new(u_side.iter().cloned().chain(universe.iter().filter(|v| !us.contains(v)).cloned()))
}

/// `F` (∧d-OBDD engine: `π0 \ U` set to 1, at least one 0 and two 1s on `U`)
/// or `F_0` (OBDD engine: at least one 0 on `U`).
pub fn fooling_set(exp: &FoolingExperiment) -> Result<AssignmentSet> {
    let q = exp.q();
    if q < exp.min_q() {
        return Err(Error::Precondition(format!(
            "the {} engine needs q ≥ {}, got {q}",
            exp.engine.name(),
            exp.min_q()
        )));
    }
    if q > 24 {
        return Err(Error::Scale {
            what: "fooling set matching size",
            size: q,
            cap: 24,
        });
    }
    let us = exp.u_side();
    let base: Assignment = exp
        .prefix
        .iter()
        .filter(|v| !us.contains(v))
        .map(|v| (v.clone(), true))
        .collect();
    let mut out = AssignmentSet::empty();
    for m in 0u32..(1 << q) {
        if !exp.is_fooling_pattern(m.count_ones() as usize) {
            continue;
        }
        let mut g = base.clone();
        for (i, u) in us.iter().enumerate() {
            g.insert(u.clone(), m >> i & 1 == 1);
        }
        out.insert(g);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Unbreakable {
    /// `I(g)`, 1-based.
    pub index: BTreeSet<usize>,
    /// `W_{I(g)}`.
    pub set: BTreeSet<Var>,
}

pub fn unbreakable(exp: &FoolingExperiment, g: &Assignment) -> Result<Unbreakable> {
    if !exp.is_fooling(g) {
        return Err(Error::Precondition(format!("{g} is not a fooling assignment")));
    }
    let index: BTreeSet<usize> = exp
        .pairs
        .iter()
        .enumerate()
        .filter(|(_, (u, _))| g.get(u) == Some(true))
        .map(|(i, _)| i + 1)
        .collect();
    let set = index.iter().map(|&i| exp.pairs[i - 1].1.clone()).collect();
    Ok(Unbreakable { index, set })
}

/// `h_J[g]`: extends `g` to every formula variable, with `w_j ↦ 0` for
/// `j ∈ J` and 1 elsewhere. `J` must lie inside `I(g)`.
pub fn extend(exp: &FoolingExperiment, g: &Assignment, j: &BTreeSet<usize>) -> Result<Assignment> {
    let ub = unbreakable(exp, g)?;
    if !j.is_subset(&ub.index) {
        return Err(Error::Precondition("J must be a subset of I(g)".into()));
    }
    let zeros: BTreeSet<&Var> = j.iter().map(|&i| &exp.pairs[i - 1].1).collect();
    let mut h = g.clone();
    for v in exp.order.as_slice() {
        if !h.contains_var(v) {
            h.insert(v.clone(), !zeros.contains(v));
        }
    }
    Ok(h)
}

/// Evaluates ψ on `h_J[g]` for every `J ⊆ I(g)` and checks that it is
/// satisfied exactly when `J ≠ ∅`.
pub fn check_extensions(exp: &FoolingExperiment, g: &Assignment) -> Result<bool> {
    if exp.engine != Engine::AndObdd {
        return Err(Error::Precondition("extension check applies to the and-obdd engine".into()));
    }
    let phi = exp.formula()?;
    let ub = unbreakable(exp, g)?;
    let idx: Vec<usize> = ub.index.iter().copied().collect();
    for m in 0u32..(1 << idx.len()) {
        let j: BTreeSet<usize> = idx.iter().enumerate().filter(|(k, _)| m >> k & 1 == 1).map(|(_, i)| *i).collect();
        if cnf::evaluate(&phi, &extend(exp, g, &j)?)? != !j.is_empty() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `S(B)` lifted to `universe` (untested variables are free).
pub fn models_over(b: &Diagram, universe: &BTreeSet<Var>) -> Result<AssignmentSet> {
    let vars: Vec<Var> = universe.iter().cloned().collect();
    let tt = diagram::truth_table(Exec::default(), b, &vars, DEFAULT_BRUTE_FORCE_CAP)?;
    let mut out = AssignmentSet::empty();
    for (m, hit) in tt.into_iter().enumerate() {
        if hit {
            out.insert(cnf::mask_to_assignment(&vars, m as u64));
        }
    }
    Ok(out)
}

/// Whether `S(B)|g` (over the experiment universe) breaks the unbreakable
/// set of `g`; returns the witnessing bipartition if it does.
pub fn restriction_breaks(
    b: &Diagram,
    exp: &FoolingExperiment,
    g: &Assignment,
) -> Result<Option<(BTreeSet<Var>, BTreeSet<Var>)>> {
    let ub = unbreakable(exp, g)?;
    let s = restrict_set(&models_over(b, &exp.universe())?, g);
    if s.is_empty() {
        return Err(Error::Precondition("S(B)|g is empty".into()));
    }
    breaks(&s, &ub.set)
}

/// `u(g)`: the unique frontier node whose subdiagram holds the unbreakable
/// set (∧d-OBDD engine), or the single frontier node (OBDD engine).
pub fn locate(b: &Diagram, pi: &LinearOrder, exp: &FoolingExperiment, g: &Assignment) -> Result<NodeId> {
    let class = validate(b, Some(pi))?;
    if exp.engine == Engine::Obdd && !class.obdd {
        return Err(Error::Soundness("the OBDD engine needs an OBDD".into()));
    }
    let ub = unbreakable(exp, g)?;
    let fr = frontier(b, pi, g)?;
    let found: Vec<NodeId> = match exp.engine {
        Engine::AndObdd => fr.l.iter().copied().filter(|&u| ub.set.is_subset(b.node_vars(u))).collect(),
        Engine::Obdd => fr.l.iter().copied().collect(),
    };
    match found.as_slice() {
        [u] => Ok(*u),
        [] => Err(Error::Soundness(format!("no frontier node for {g}"))),
        _ => Err(Error::Soundness(format!(
            "frontier nodes {found:?} all qualify for {g}"
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    pub engine: Engine,
    pub graph_sha256: String,
    pub pairs: Vec<(Var, Var)>,
    pub order: Vec<Var>,
    pub prefix: Vec<Var>,
    pub diagram_sha256: String,
    pub diagram_size: usize,
    pub equivalence_checked: bool,
    pub fooling_size: usize,
    /// `(g, u(g))` in assignment order.
    pub u_map: Vec<(Assignment, NodeId)>,
    pub injective: bool,
    pub bound: usize,
    pub wall_clock_ms: Option<u128>,
}

impl Certificate {
    pub fn to_json(&self) -> String {
        let strs = |vs: &[Var]| vs.iter().map(|v| v.to_string()).collect::<Vec<_>>();
        let mut v = serde_json::json!({
            "build": crate::BUILD_ID,
            "engine": self.engine.name(),
            "graph_sha256": self.graph_sha256,
            "matching": self.pairs.iter().map(|(u, w)| [u.to_string(), w.to_string()]).collect::<Vec<_>>(),
            "order": strs(&self.order),
            "prefix": strs(&self.prefix),
            "diagram_sha256": self.diagram_sha256,
            "diagram_size": self.diagram_size,
            "equivalence_checked": self.equivalence_checked,
            "fooling_size": self.fooling_size,
            "u_map": self.u_map.iter().map(|(g, u)| serde_json::json!({"g": g.to_string(), "node": u})).collect::<Vec<_>>(),
            "injective": self.injective,
            "bound": self.bound,
        });
        if let Some(ms) = self.wall_clock_ms {
            v["wall_clock_ms"] = serde_json::json!(ms);
        }
        format!("{}\n", serde_json::to_string_pretty(&v).expect("json"))
    }
}

pub fn diagram_hash(b: &Diagram) -> String {
    hex::encode(Sha256::digest(diagram::to_json(b).as_bytes()))
}

/// Locates every fooling assignment, requires pairwise distinct nodes and
/// `|B| ≥ |F|`. When the universe is within the brute-force cap the diagram
/// is also checked to compute the experiment formula.
pub fn certify(b: &Diagram, pi: &LinearOrder, exp: &FoolingExperiment) -> Result<Certificate> {
    certify_with(Exec::default(), b, pi, exp)
}

pub fn certify_with(exec: Exec, b: &Diagram, pi: &LinearOrder, exp: &FoolingExperiment) -> Result<Certificate> {
    let start = std::time::Instant::now();
    validate(b, Some(pi))?;
    let universe = exp.universe();
    let equivalence_checked = universe.len() <= DEFAULT_BRUTE_FORCE_CAP;
    if equivalence_checked {
        let phi = exp.formula()?;
        if models_over(b, &universe)? != cnf::models(&phi, &universe)? {
            return Err(Error::Soundness(
                "the diagram does not compute the experiment formula".into(),
            ));
        }
    }
    let f: Vec<Assignment> = fooling_set(exp)?.iter().cloned().collect();
    let located: Vec<Result<NodeId>> = par::map_slice(exec, &f, |g| locate(b, pi, exp, g));
    let mut u_map = Vec::with_capacity(f.len());
    let mut owner: BTreeMap<NodeId, &Assignment> = BTreeMap::new();
    for (g, u) in f.iter().zip(located) {
        let u = u?;
        if let Some(h) = owner.insert(u, g) {
            return Err(Error::Soundness(format!("{h} and {g} both reach node {u}")));
        }
        u_map.push((g.clone(), u));
    }
    if b.size() < f.len() {
        return Err(Error::Soundness(format!(
            "diagram has {} nodes but {} distinct fooling nodes",
            b.size(),
            f.len()
        )));
    }
    Ok(Certificate {
        engine: exp.engine,
        graph_sha256: graph_hash(&exp.graph),
        pairs: exp.pairs.clone(),
        order: exp.order.as_slice().to_vec(),
        prefix: exp.prefix.clone(),
        diagram_sha256: diagram_hash(b),
        diagram_size: b.size(),
        equivalence_checked,
        fooling_size: f.len(),
        u_map,
        injective: true,
        bound: f.len(),
        wall_clock_ms: Some(start.elapsed().as_millis()),
    })
}

// ---------------------------------------------------------------------------
// Minimal OBDD oracle

/// Truth table with `order[0]` as the most significant bit, so fixing a
/// prefix of the order selects a contiguous block.
fn ordered_table(phi: &Cnf, order: &LinearOrder, cap: usize) -> Result<Vec<bool>> {
    let rev: Vec<Var> = order.as_slice().iter().rev().cloned().collect();
    cnf::truth_table(Exec::Sequential, phi, &rev, cap)
}

fn require_order_over(phi: &Cnf, order: &LinearOrder) -> Result<()> {
    let vs = phi.vars();
    if !vs.is_subset(&order.set()) {
        return Err(Error::Scope("the order misses formula variables".into()));
    }
    Ok(())
}

/// Node count of the reduced OBDD of `phi` under `order` (which may list
/// extra variables): per level, the distinct subfunctions that depend on the
/// level variable, plus the sinks.
pub fn obdd_size(phi: &Cnf, order: &LinearOrder, cap: usize) -> Result<usize> {
    require_order_over(phi, order)?;
    let tt = ordered_table(phi, order, cap)?;
    let n = order.len();
    let mut size = [false, true].iter().filter(|b| tt.contains(b)).count();
    for i in 0..n {
        let len = 1usize << (n - i);
        let half = len / 2;
        let distinct: HashSet<&[bool]> = tt
            .chunks(len)
            .filter(|blk| blk[..half] != blk[half..])
            .collect();
        size += distinct.len();
    }
    Ok(size)
}

/// The reduced OBDD itself; its size equals [`obdd_size`].
pub fn obdd_for_order(phi: &Cnf, order: &LinearOrder, cap: usize) -> Result<Diagram> {
    require_order_over(phi, order)?;
    let tt = ordered_table(phi, order, cap)?;
    let mut bb = DiagramBuilder::new();
    let mut memo: HashMap<&[bool], NodeId> = HashMap::new();
    let root = obdd_node(&mut bb, &mut memo, &tt, order.as_slice(), 0);
    bb.finish(root, Some(order.set()))
}

fn obdd_node<'t>(
    bb: &mut DiagramBuilder,
    memo: &mut HashMap<&'t [bool], NodeId>,
    blk: &'t [bool],
    vars: &[Var],
    level: usize,
) -> NodeId {
    if blk.len() == 1 {
        return bb.sink(blk[0]);
    }
    if let Some(&id) = memo.get(blk) {
        return id;
    }
    let (lo, hi) = blk.split_at(blk.len() / 2);
    let l = obdd_node(bb, memo, lo, vars, level + 1);
    let h = obdd_node(bb, memo, hi, vars, level + 1);
    let id = bb.decision_reduced(vars[level].clone(), l, h);
    memo.insert(blk, id);
    id
}

/// Minimum reduced-OBDD size over the searched orders of `vars(phi)`; ties
/// go to the earliest order.
pub fn min_obdd(phi: &Cnf, search: OrderSearch) -> Result<(usize, LinearOrder)> {
    min_obdd_with(Exec::default(), phi, search, crate::graph::EXHAUSTIVE_ORDER_CAP, DEFAULT_BRUTE_FORCE_CAP)
}

pub fn min_obdd_with(
    exec: Exec,
    phi: &Cnf,
    search: OrderSearch,
    exhaustive_cap: usize,
    cap: usize,
) -> Result<(usize, LinearOrder)> {
    let vars = phi.vars();
    if vars.len() > cap {
        return Err(Error::Scale {
            what: "brute-force universe",
            size: vars.len(),
            cap,
        });
    }
    let orders = search_orders(&vars, search, exhaustive_cap)?;
    if orders.is_empty() {
        return Err(Error::Precondition("no orders to search".into()));
    }
    let (i, size) = par::argmin_range(exec, orders.len(), |i| obdd_size(phi, &orders[i], cap).ok())
        .ok_or_else(|| Error::Precondition("no order could be evaluated".into()))?;
    Ok((size, orders[i].clone()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matching_graph(q: usize) -> Graph {
        Graph::from_edges((1..=q).map(|i| (format!("u{i}"), format!("w{i}")))).unwrap()
    }

    fn fool1() -> FoolingExperiment {
        let pi = LinearOrder::new([
            "u1#1", "u2#1", "u1#2", "u2#2", "w1#1", "w2#1", "u3#1", "w1#2", "w2#2", "w3#2", "u3#2", "w3#1",
        ])
        .unwrap();
        let m = Matching::new(
            (1..=3)
                .map(|i| (Var::from(format!("u{i}#1")), Var::from(format!("w{i}#2"))))
                .collect(),
        )
        .unwrap();
        FoolingExperiment::new(matching_graph(3), &m, pi, Engine::AndObdd).unwrap()
    }

    #[test]
    fn example_fooling_set() {
        let exp = fool1();
        assert_eq!(exp.prefix.len(), 7);
        let f = fooling_set(&exp).unwrap();
        assert_eq!(f.len(), 3);
        for g in f.iter() {
            let ones = exp.u_side().iter().filter(|u| g.get(u) == Some(true)).count();
            assert_eq!(ones, 2);
            assert_eq!(g.get("w2#1"), Some(true));
        }
    }

    #[test]
    fn example_unbreakable() {
        let exp = fool1();
        let g = Assignment::parse("u1#1=0,u2#1=1,u3#1=1,u1#2=1,u2#2=1,w1#1=1,w2#1=1").unwrap();
        let ub = unbreakable(&exp, &g).unwrap();
        assert_eq!(ub.index, BTreeSet::from([2, 3]));
        let names: Vec<&str> = ub.set.iter().map(|v| v.as_ref()).collect();
        assert_eq!(names, ["w2#2", "w3#2"]);
        let h = extend(&exp, &g, &ub.index).unwrap();
        assert_eq!(h.get("w1#2"), Some(true));
        assert_eq!(h.get("w2#2"), Some(false));
        assert_eq!(h.get("w3#2"), Some(false));
        assert!(check_extensions(&exp, &g).unwrap());
    }

    #[test]
    fn certify_example_order() {
        let exp = fool1();
        let phi = exp.formula().unwrap();
        let b = obdd_for_order(&phi, &exp.order, 22).unwrap();
        assert_eq!(b.size(), obdd_size(&phi, &exp.order, 22).unwrap());
        let cert = certify(&b, &exp.order, &exp).unwrap();
        assert_eq!(cert.bound, 3);
        for g in fooling_set(&exp).unwrap().iter() {
            assert!(restriction_breaks(&b, &exp, g).unwrap().is_none());
        }
    }

    #[test]
    fn obdd_engine_q3() {
        let g = matching_graph(3);
        let us: Vec<Var> = (1..=3).map(|i| Var::from(format!("u{i}"))).collect();
        let pi = bad_order(&g.vertex_set(), &us).unwrap();
        let m = Matching::new(g.edges()).unwrap();
        let exp = FoolingExperiment::new(g, &m, pi.clone(), Engine::Obdd).unwrap();
        let phi = exp.formula().unwrap();
        let b = obdd_for_order(&phi, &pi, 22).unwrap();
        let cert = certify(&b, &pi, &exp).unwrap();
        assert_eq!(cert.bound, 7);
        assert!(obdd_size(&phi, &pi, 22).unwrap() >= 7);
    }

    #[test]
    fn min_obdd_small() {
        assert_eq!(min_obdd(&Cnf::new(), OrderSearch::Exhaustive).unwrap().0, 1);
        let phi = vc(&Graph::from_edges([("a", "b")]).unwrap()).unwrap();
        let a = obdd_size(&phi, &LinearOrder::new(["a", "b"]).unwrap(), 22).unwrap();
        let b = obdd_size(&phi, &LinearOrder::new(["b", "a"]).unwrap(), 22).unwrap();
        assert_eq!((a, b), (4, 4));
        assert_eq!(min_obdd(&phi, OrderSearch::Exhaustive).unwrap().0, 4);
    }

    #[test]
    fn too_small_q() {
        let g = matching_graph(2);
        let m = Matching::new(vec![("u1#1".into(), "w1#2".into()), ("u2#1".into(), "w2#2".into())]).unwrap();
        let us: Vec<Var> = vec!["u1#1".into(), "u2#1".into()];
        let pi = bad_order(&double(&g).unwrap().vertex_set(), &us).unwrap();
        let exp = FoolingExperiment::new(g, &m, pi, Engine::AndObdd).unwrap();
        assert!(matches!(fooling_set(&exp), Err(Error::Precondition(_))));
    }
}
