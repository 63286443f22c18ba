//! The CNF families built from graphs: the vertex-cover formula φ(G), the
//! doubled formula ψ(G), φ*(G), and the junction-variable variants.

use std::collections::BTreeSet;

use sha2::{Digest, Sha256};

use crate::cnf::{clause_vertex, graphs_of, Clause, Cnf, Literal};
use crate::graph::{
    check_partition, copy, double, grid, grid_dictionary_order, grid_transposed_order, grid_vertex,
    Decomposition, Edge, Graph,
};
use crate::{Error, Result, Var};

/// Name of the junction variable.
pub const JN: &str = "jn";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Vc,
    Psi,
    Star,
    VcJunction,
    PsiJunction,
}

impl Family {
    pub fn parse(s: &str) -> Result<Family> {
        Ok(match s {
            "vc" => Family::Vc,
            "psi" => Family::Psi,
            "star" => Family::Star,
            "vc-junction" => Family::VcJunction,
            "psi-junction" => Family::PsiJunction,
            _ => return Err(Error::Malformed(format!("unknown family {s:?}"))),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Vc => "vc",
            Family::Psi => "psi",
            Family::Star => "star",
            Family::VcJunction => "vc-junction",
            Family::PsiJunction => "psi-junction",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Hor,
    Vert,
}

impl Orientation {
    pub fn parse(s: &str) -> Result<Orientation> {
        match s {
            "hor" => Ok(Orientation::Hor),
            "vert" => Ok(Orientation::Vert),
            _ => Err(Error::Malformed(format!("unknown orientation {s:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FormulaFamilyRequest {
    pub family: Family,
    pub graph: Graph,
    pub partition: Option<(Vec<Edge>, Vec<Edge>)>,
}

impl FormulaFamilyRequest {
    pub fn generate(&self) -> Result<Cnf> {
        let part = || {
            self.partition
                .as_ref()
                .ok_or_else(|| Error::Precondition("junction families need an edge partition".into()))
        };
        match self.family {
            Family::Vc => vc(&self.graph),
            Family::Psi => psi(&self.graph),
            Family::Star => star(&self.graph),
            Family::VcJunction => {
                let (e1, e2) = part()?;
                junction(&self.graph, e1, e2, Family::Vc)
            }
            Family::PsiJunction => {
                let (e1, e2) = part()?;
                junction(&self.graph, e1, e2, Family::Psi)
            }
        }
    }

    /// JSON sidecar: family, graph hash and partition.
    pub fn meta_json(&self) -> String {
        let edges = |es: &[Edge]| -> serde_json::Value {
            es.iter()
                .map(|(u, v)| serde_json::json!([u.as_ref(), v.as_ref()]))
                .collect()
        };
        let partition = match &self.partition {
            Some((e1, e2)) => serde_json::json!({"e1": edges(e1), "e2": edges(e2)}),
            None => serde_json::Value::Null,
        };
        let v = serde_json::json!({
            "build": crate::BUILD_ID,
            "family": self.family.name(),
            "graph_sha256": graph_hash(&self.graph),
            "partition": partition,
        });
        format!("{}\n", serde_json::to_string_pretty(&v).expect("json"))
    }
}

pub fn graph_hash(g: &Graph) -> String {
    hex::encode(Sha256::digest(g.render().as_bytes()))
}

/// φ(G): a clause `(u ∨ v)` per edge.
pub fn vc(g: &Graph) -> Result<Cnf> {
    g.require_no_isolated()?;
    Ok(g.edges().into_iter().map(|(u, v)| Clause::positive([u, v])).collect())
}

/// The two long clauses `¬V[1]` and `¬V[2]` of ψ(G).
pub fn long_clauses(g: &Graph) -> [Clause; 2] {
    [1u8, 2].map(|k| Clause::negative(g.vertices().map(|v| copy(v, k))))
}

/// ψ(G) = φ(G*) ∧ ¬V[1] ∧ ¬V[2], long clauses last.
pub fn psi(g: &Graph) -> Result<Cnf> {
    let mut out = vc(&double(g)?)?;
    for c in long_clauses(g) {
        out.push(c);
    }
    Ok(out)
}

/// φ*(G) = φ(G) ∧ ¬V.
pub fn star(g: &Graph) -> Result<Cnf> {
    let mut out = vc(g)?;
    out.push(Clause::negative(g.vertices().cloned()));
    Ok(out)
}

/// `(jn → F(G[E1])) ∧ (¬jn → F(G[E2]))` with every clause guarded by the
/// junction literal; `kind` is [`Family::Vc`] or [`Family::Psi`].
pub fn junction(g: &Graph, e1: &[Edge], e2: &[Edge], kind: Family) -> Result<Cnf> {
    check_partition(g, e1, e2)?;
    if g.contains(JN) {
        return Err(Error::Precondition(format!("the graph already uses the name {JN}")));
    }
    let sides = [(Graph::edge_subgraph(e1), Literal::neg(JN)), (Graph::edge_subgraph(e2), Literal::pos(JN))];
    let mut out = Cnf::new();
    match kind {
        Family::Vc => {
            for (h, guard) in &sides {
                for c in vc(h)?.clauses() {
                    out.push(c.guarded(guard.clone())?);
                }
            }
        }
        Family::Psi => {
            let mut long = Vec::new();
            for (h, guard) in &sides {
                let p = psi(h)?;
                let n = p.len();
                for (i, c) in p.clauses().iter().enumerate() {
                    let gc = c.guarded(guard.clone())?;
                    if i + 2 >= n {
                        long.push(gc);
                    } else {
                        out.push(gc);
                    }
                }
            }
            for c in long {
                out.push(c);
            }
        }
        _ => return Err(Error::Precondition("junction kind must be vc or psi".into())),
    }
    Ok(out)
}

/// The width-7 path decomposition of the incidence graph of
/// ψ(grid(n)[E_hor]) (or E_vert), following the row-major (column-major)
/// vertex order. Returns the formula, its incidence graph and the
/// decomposition.
pub fn psi_grid_path_decomposition(n: usize, orientation: Orientation) -> Result<(Cnf, Graph, Decomposition)> {
    if n < 2 {
        return Err(Error::Range("grid size must be at least 2".into()));
    }
    let gr = grid(n)?;
    let edges = match orientation {
        Orientation::Hor => &gr.hor,
        Orientation::Vert => &gr.vert,
    };
    let phi = psi(&Graph::edge_subgraph(edges))?;
    let (_, incidence) = graphs_of(&phi);
    let pos = |c: &Clause| -> Result<Var> {
        phi.position(c)
            .map(clause_vertex)
            .ok_or_else(|| Error::Soundness(format!("clause {c} missing from ψ")))
    };
    let l1 = pos(&phi.clauses()[phi.len() - 2])?;
    let l2 = pos(&phi.clauses()[phi.len() - 1])?;
    let order = match orientation {
        Orientation::Hor => grid_dictionary_order(n),
        Orientation::Vert => grid_transposed_order(n),
    };
    let mut d = Decomposition::default();
    for (k, u) in order.iter().enumerate() {
        let (i, j) = (k / n + 1, k % n + 1);
        let mut bag: BTreeSet<Var> = [copy(u, 1), copy(u, 2), l1.clone(), l2.clone()].into();
        if j >= 2 {
            let v = match orientation {
                Orientation::Hor => grid_vertex(i, j - 1),
                Orientation::Vert => grid_vertex(j - 1, i),
            };
            bag.extend([copy(&v, 1), copy(&v, 2)]);
            bag.insert(pos(&Clause::positive([copy(u, 1), copy(&v, 2)]))?);
            bag.insert(pos(&Clause::positive([copy(u, 2), copy(&v, 1)]))?);
        }
        d.bags.insert(k, bag);
        if k > 0 {
            d.tree.push((k - 1, k));
        }
    }
    Ok((phi, incidence, d))
}

/// A tree decomposition of the incidence graph of ψ(G) of width at most
/// `2·w + 3`, built from a width-`w` decomposition of `G`: each bag is
/// doubled, both long clauses join every bag, and each binary clause hangs
/// off a bag holding its edge.
pub fn psi_incidence_decomposition(g: &Graph, d: &Decomposition) -> Result<(Cnf, Graph, Decomposition)> {
    let phi = psi(g)?;
    let (_, incidence) = graphs_of(&phi);
    let n = phi.len();
    let (l1, l2) = (clause_vertex(n - 2), clause_vertex(n - 1));
    let mut out = Decomposition::default();
    for (b, members) in &d.bags {
        let mut bag: BTreeSet<Var> = members.iter().flat_map(|v| [copy(v, 1), copy(v, 2)]).collect();
        bag.insert(l1.clone());
        bag.insert(l2.clone());
        out.bags.insert(*b, bag);
    }
    out.tree = d.tree.clone();
    let mut next = d.bags.keys().max().map_or(0, |m| m + 1);
    for (i, c) in phi.clauses()[..n - 2].iter().enumerate() {
        let vs: Vec<&Var> = c.vars().collect();
        let base: Vec<String> = vs
            .iter()
            .map(|v| crate::graph::split_copy(v).map(|(b, _)| b.to_string()).expect("tagged"))
            .collect();
        let host = d
            .bags
            .iter()
            .find(|(_, m)| base.iter().all(|b| m.contains(b.as_str())))
            .map(|(b, _)| *b)
            .ok_or_else(|| Error::Precondition(format!("no bag holds the edge behind clause {c}")))?;
        let mut bag: BTreeSet<Var> = vs.into_iter().cloned().collect();
        bag.extend([clause_vertex(i), l1.clone(), l2.clone()]);
        out.bags.insert(next, bag);
        out.tree.push((host, next));
        next += 1;
    }
    Ok((phi, incidence, out))
}
