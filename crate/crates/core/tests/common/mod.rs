#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use dnnf_lab::assign::{Assignment, AssignmentSet};
use dnnf_lab::cnf::{self, graphs_of, Clause, Cnf, Literal};
use dnnf_lab::diagram::{self, validate, Diagram, DiagramBuilder, NodeId};
use dnnf_lab::formula::{junction, psi, star, vc, Family};
use dnnf_lab::graph::{
    elimination_decomposition, grid, treewidth_exact_with_cap, Decomposition, Graph, LinearOrder,
};
use dnnf_lab::par::Exec;
use dnnf_lab::Var;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const CAP: usize = 22;

pub fn v(name: &str) -> Var {
    Var::from(name)
}

pub fn matching_graph(q: usize) -> Graph {
    Graph::from_edges((1..=q).map(|i| (format!("u{i}"), format!("w{i}")))).unwrap()
}

pub fn cycle(n: usize) -> Graph {
    Graph::from_edges((1..=n).map(|i| (format!("c{i}"), format!("c{}", i % n + 1)))).unwrap()
}

pub fn path(n: usize) -> Graph {
    Graph::from_edges((1..n).map(|i| (format!("p{i}"), format!("p{}", i + 1)))).unwrap()
}

/// The 5-cycle u1..u5 with the chord u1-u3.
pub fn c5_chord() -> Graph {
    let mut es: Vec<(String, String)> = (1..=5).map(|i| (format!("u{i}"), format!("u{}", i % 5 + 1))).collect();
    es.push(("u1".into(), "u3".into()));
    Graph::from_edges(es).unwrap()
}

/// Named base graphs of the corpus.
pub fn corpus_graphs() -> Vec<(String, Graph)> {
    let mut out = Vec::new();
    for n in [2, 3] {
        out.push((format!("grid{n}"), grid(n).unwrap().graph));
    }
    for q in [1, 2, 3] {
        out.push((format!("matching{q}"), matching_graph(q)));
    }
    out.push(("C4".into(), cycle(4)));
    out.push(("C5+chord".into(), c5_chord()));
    out.push(("P3".into(), path(3)));
    out
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub name: String,
    pub family: Family,
    pub graph: Graph,
    pub grid_n: Option<usize>,
    pub phi: Cnf,
}

/// Every family over every corpus graph, junction families on grids only
/// (the other graphs admit no spanning two-part partition), capped at
/// `max_vars` variables.
pub fn corpus(max_vars: usize) -> Vec<Instance> {
    let mut out = Vec::new();
    for (name, g) in corpus_graphs() {
        let grid_n = name.strip_prefix("grid").map(|n| n.parse().unwrap());
        let mut push = |family: Family, phi: Cnf| {
            if phi.vars().len() <= max_vars {
                out.push(Instance {
                    name: format!("{}({name})", family.name()),
                    family,
                    graph: g.clone(),
                    grid_n,
                    phi,
                });
            }
        };
        push(Family::Vc, vc(&g).unwrap());
        push(Family::Psi, psi(&g).unwrap());
        push(Family::Star, star(&g).unwrap());
        if let Some(n) = grid_n {
            let gr = grid(n).unwrap();
            push(Family::VcJunction, junction(&g, &gr.hor, &gr.vert, Family::Vc).unwrap());
            push(Family::PsiJunction, junction(&g, &gr.hor, &gr.vert, Family::Psi).unwrap());
        }
    }
    out
}

/// The all-negative clauses (ignoring a junction guard): the "long" part.
pub fn long_positions(phi: &Cnf) -> BTreeSet<usize> {
    phi.clauses()
        .iter()
        .enumerate()
        .filter(|(_, c)| {
            let body: Vec<&Literal> = c.literals().iter().filter(|l| l.var.as_ref() != "jn").collect();
            body.len() >= 2 && body.iter().all(|l| !l.positive)
        })
        .map(|(i, _)| i)
        .collect()
}

/// Exact treewidth decomposition when small enough, else a min-degree
/// elimination decomposition.
pub fn decomposition(g: &Graph) -> Decomposition {
    if g.vertex_count() <= 14 {
        return treewidth_exact_with_cap(g, 14).unwrap().1;
    }
    let mut adj: BTreeMap<Var, BTreeSet<Var>> =
        g.vertices().map(|v| (v.clone(), g.neighbors(v).cloned().collect())).collect();
    let mut order = Vec::new();
    while !adj.is_empty() {
        let x = adj.iter().min_by_key(|(k, n)| (n.len(), (*k).clone())).unwrap().0.clone();
        let nb = adj.remove(&x).unwrap();
        for a in &nb {
            let s = adj.get_mut(a).unwrap();
            s.remove(&x);
            s.extend(nb.iter().filter(|b| *b != a).cloned());
        }
        order.push(x);
    }
    elimination_decomposition(g, &order)
}

pub fn primal_decomposition(phi: &Cnf) -> Decomposition {
    decomposition(&graphs_of(phi).0)
}

/// Truth tables of `phi` and `b` over the union of their variables agree.
pub fn equivalent(phi: &Cnf, b: &Diagram) -> bool {
    let mut u: BTreeSet<Var> = phi.vars();
    u.extend(b.vars().iter().cloned());
    let u: Vec<Var> = u.into_iter().collect();
    let t1 = cnf::truth_table(Exec::default(), phi, &u, CAP).unwrap();
    let t2 = diagram::truth_table(Exec::default(), b, &u, CAP).unwrap();
    t1 == t2
}

/// A random CNF over `x1..xn` with up to `m` distinct clauses of width
/// 1..=`maxw` (fewer when `n` is too small to supply them).
pub fn random_cnf(rng: &mut ChaCha8Rng, n: usize, m: usize, maxw: usize) -> Cnf {
    let vars: Vec<Var> = (1..=n).map(|i| Var::from(format!("x{i}"))).collect();
    let mut phi = Cnf::new();
    for _ in 0..100 * m.max(1) {
        if phi.len() >= m {
            break;
        }
        let w = rng.gen_range(1..=maxw.min(n));
        let chosen: Vec<&Var> = vars.choose_multiple(rng, w).collect();
        let lits = chosen.into_iter().map(|x| {
            if rng.gen_bool(0.5) {
                Literal::pos(x.clone())
            } else {
                Literal::neg(x.clone())
            }
        });
        phi.push(Clause::new(lits).unwrap());
    }
    phi
}

/// A nonempty uniform set over `vars`, each assignment kept with
/// probability `p`.
pub fn random_uniform(rng: &mut ChaCha8Rng, vars: &BTreeSet<Var>, p: f64) -> AssignmentSet {
    loop {
        let all = AssignmentSet::cube(vars).unwrap();
        let h: AssignmentSet = all.iter().filter(|_| rng.gen_bool(p)).cloned().collect();
        if !h.is_empty() {
            return h;
        }
    }
}

/// A random valid ∧d-OBDD over `x1..xn` obeying a random order. Subdiagrams
/// are shared whenever a previously built node fits the available variables.
pub fn random_and_obdd(rng: &mut ChaCha8Rng, n: usize) -> (Diagram, LinearOrder) {
    loop {
        let mut names: Vec<Var> = (1..=n).map(|i| Var::from(format!("x{i}"))).collect();
        names.shuffle(rng);
        let pi = LinearOrder::new(names.clone()).unwrap();
        let mut bb = DiagramBuilder::new();
        let mut built: Vec<(BTreeSet<Var>, NodeId)> = Vec::new();
        let root = grow(rng, &mut bb, &names, &mut built, 0);
        let Ok(b) = bb.finish(root, None) else { continue };
        if b.tested_vars().len() < 2 {
            continue;
        }
        if validate(&b, Some(&pi)).is_ok() {
            return (b, pi);
        }
    }
}

fn grow(
    rng: &mut ChaCha8Rng,
    bb: &mut DiagramBuilder,
    avail: &[Var],
    built: &mut Vec<(BTreeSet<Var>, NodeId)>,
    depth: usize,
) -> NodeId {
    if avail.is_empty() || (depth > 0 && rng.gen_bool(0.12)) {
        return bb.sink(rng.gen_bool(0.75));
    }
    let av: BTreeSet<&Var> = avail.iter().collect();
    if depth > 0 && rng.gen_bool(0.25) {
        let fits: Vec<NodeId> = built
            .iter()
            .filter(|(s, _)| !s.is_empty() && s.iter().all(|x| av.contains(x)))
            .map(|(_, u)| *u)
            .collect();
        if let Some(&u) = fits.choose(rng) {
            return u;
        }
    }
    let u = if avail.len() >= 2 && rng.gen_bool(0.35) {
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for x in avail {
            if rng.gen_bool(0.5) {
                a.push(x.clone())
            } else {
                b.push(x.clone())
            }
        }
        if a.is_empty() {
            a.push(b.pop().unwrap());
        }
        if b.is_empty() {
            b.push(a.pop().unwrap());
        }
        let l = grow(rng, bb, &a, built, depth + 1);
        let r = grow(rng, bb, &b, built, depth + 1);
        bb.and_simplified(l, r)
    } else {
        let j = rng.gen_range(0..avail.len().min(3));
        let rest = &avail[j + 1..];
        let lo = grow(rng, bb, rest, built, depth + 1);
        let hi = if rng.gen_bool(0.1) {
            lo
        } else {
            grow(rng, bb, rest, built, depth + 1)
        };
        bb.decision(avail[j].clone(), lo, hi)
    };
    let vars = node_vars(bb, u);
    built.push((vars, u));
    u
}

fn node_vars(bb: &DiagramBuilder, u: NodeId) -> BTreeSet<Var> {
    let mut out = BTreeSet::new();
    let mut stack = vec![u];
    let mut seen = BTreeSet::new();
    while let Some(x) = stack.pop() {
        if !seen.insert(x) {
            continue;
        }
        let n = bb.node(x);
        if let Some(var) = n.var() {
            out.insert(var.clone());
        }
        stack.extend(n.children());
    }
    out
}

/// A random assignment to the first `k` variables of `pi`.
pub fn random_prefix(rng: &mut ChaCha8Rng, pi: &LinearOrder, k: usize) -> Assignment {
    Assignment::from_pairs(pi.prefix(k).iter().map(|x| (x.clone(), rng.gen_bool(0.5))))
}

/// One representative per isomorphism class of graphs on 1..=6 vertices
/// (`a`, `b`, …), isolated vertices included.
pub fn graph_classes(max_n: usize) -> Vec<Graph> {
    let mut out = Vec::new();
    for n in 1..=max_n {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let perms = permutations(n);
        let mut seen: HashMap<u32, ()> = HashMap::new();
        for mask in 0u32..(1 << pairs.len()) {
            let canon = perms
                .iter()
                .map(|p| {
                    pairs.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).fold(0u32, |acc, (_, &(i, j))| {
                        let (a, b) = (p[i].min(p[j]), p[i].max(p[j]));
                        acc | 1 << pairs.iter().position(|&e| e == (a, b)).unwrap()
                    })
                })
                .min()
                .unwrap();
            if seen.insert(canon, ()).is_some() {
                continue;
            }
            let name = |i: usize| ((b'a' + i as u8) as char).to_string();
            let mut g = Graph::new();
            for i in 0..n {
                g.add_vertex(name(i));
            }
            for (k, &(i, j)) in pairs.iter().enumerate() {
                if canon >> k & 1 == 1 {
                    g.add_edge(name(i), name(j)).unwrap();
                }
            }
            out.push(g);
        }
    }
    out
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let items: Vec<usize> = (0..n).collect();
    let total: usize = (1..=n).product();
    (0..total).map(|k| dnnf_lab::graph::nth_permutation(&items, k)).collect()
}

/// The graph with its isolated vertices removed.
pub fn strip_isolated(g: &Graph) -> Graph {
    Graph::edge_subgraph(&g.edges())
}
