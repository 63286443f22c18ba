//! CNF formulas over named variables: evaluation, brute-force model
//! enumeration, the reduction φ[g], primal/incidence graphs, and DIMACS I/O.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use crate::assign::{Assignment, AssignmentSet};
use crate::graph::Graph;
use crate::par::{self, Exec};
use crate::{Error, Result, Var, DEFAULT_BRUTE_FORCE_CAP};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub var: Var,
    pub positive: bool,
}

impl Literal {
    pub fn pos(var: impl Into<Var>) -> Self {
        Literal {
            var: var.into(),
            positive: true,
        }
    }

    pub fn neg(var: impl Into<Var>) -> Self {
        Literal {
            var: var.into(),
            positive: false,
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "{}", self.var)
        } else {
            write!(f, "¬{}", self.var)
        }
    }
}

/// A well-formed set of literals, kept sorted by variable.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Clause(Vec<Literal>);

impl Clause {
    /// Builds a clause, collapsing repeated literals. A clause containing both
    /// `x` and `¬x` is rejected.
    pub fn new(lits: impl IntoIterator<Item = Literal>) -> Result<Self> {
        let mut map: BTreeMap<Var, bool> = BTreeMap::new();
        for l in lits {
            if let Some(prev) = map.insert(l.var.clone(), l.positive) {
                if prev != l.positive {
                    return Err(Error::Malformed(format!(
                        "clause contains both {0} and ¬{0}",
                        l.var
                    )));
                }
            }
        }
        Ok(Clause(
            map.into_iter()
                .map(|(var, positive)| Literal { var, positive })
                .collect(),
        ))
    }

    pub fn positive<I, S>(vars: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<Var>,
    {
        Clause::new(vars.into_iter().map(Literal::pos)).expect("single polarity")
    }

    pub fn negative<I, S>(vars: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<Var>,
    {
        Clause::new(vars.into_iter().map(Literal::neg)).expect("single polarity")
    }

    pub fn empty() -> Self {
        Clause(Vec::new())
    }

    pub fn literals(&self) -> &[Literal] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn vars(&self) -> impl Iterator<Item = &Var> + '_ {
        self.0.iter().map(|l| &l.var)
    }

    /// Whether `a` contains a literal of the clause.
    pub fn satisfied_by(&self, a: &Assignment) -> bool {
        self.0.iter().any(|l| a.get(&l.var) == Some(l.positive))
    }

    /// `Some(false)` when `a` falsifies every literal, `Some(true)` when it
    /// satisfies one, `None` otherwise.
    pub fn status(&self, a: &Assignment) -> Option<bool> {
        let mut open = false;
        for l in &self.0 {
            match a.get(&l.var) {
                Some(b) if b == l.positive => return Some(true),
                Some(_) => {}
                None => open = true,
            }
        }
        if open {
            None
        } else {
            Some(false)
        }
    }

    /// Prepends a guard literal, as in `(¬jn ∨ C)`.
    pub fn guarded(&self, guard: Literal) -> Result<Clause> {
        Clause::new(std::iter::once(guard).chain(self.0.iter().cloned()))
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ∨ ")?;
            }
            write!(f, "{l}")?;
        }
        f.write_str(")")
    }
}

/// A set of clauses. Insertion order is kept for serialization; duplicates
/// are dropped.
#[derive(Debug, Clone, Default)]
pub struct Cnf {
    clauses: Vec<Clause>,
    seen: HashSet<Clause>,
}

impl PartialEq for Cnf {
    fn eq(&self, other: &Self) -> bool {
        self.seen == other.seen
    }
}

impl Eq for Cnf {}

impl Cnf {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a clause; returns false if it was already present.
    pub fn push(&mut self, c: Clause) -> bool {
        if self.seen.insert(c.clone()) {
            self.clauses.push(c);
            true
        } else {
            false
        }
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.clauses.iter().flat_map(|c| c.vars().cloned()).collect()
    }

    pub fn has_empty_clause(&self) -> bool {
        self.clauses.iter().any(Clause::is_empty)
    }

    /// The sub-CNF without the clauses at the given positions (0-based).
    pub fn without(&self, positions: &BTreeSet<usize>) -> Cnf {
        self.clauses
            .iter()
            .enumerate()
            .filter(|(i, _)| !positions.contains(i))
            .map(|(_, c)| c.clone())
            .collect()
    }

    /// The sub-CNF with only the clauses at the given positions (0-based).
    pub fn select(&self, positions: &BTreeSet<usize>) -> Cnf {
        self.clauses
            .iter()
            .enumerate()
            .filter(|(i, _)| positions.contains(i))
            .map(|(_, c)| c.clone())
            .collect()
    }

    pub fn position(&self, c: &Clause) -> Option<usize> {
        self.clauses.iter().position(|d| d == c)
    }
}

impl FromIterator<Clause> for Cnf {
    fn from_iter<T: IntoIterator<Item = Clause>>(iter: T) -> Self {
        let mut out = Cnf::new();
        for c in iter {
            out.push(c);
        }
        out
    }
}

impl fmt::Display for Cnf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.clauses.iter().enumerate() {
            if i > 0 {
                f.write_str(" ∧ ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Evaluates `phi` on a total assignment.
pub fn evaluate(phi: &Cnf, a: &Assignment) -> Result<bool> {
    if let Some(v) = phi.vars().into_iter().find(|v| !a.contains_var(v)) {
        return Err(Error::Scope(format!("assignment does not bind {v}")));
    }
    Ok(phi.clauses.iter().all(|c| c.satisfied_by(a)))
}

/// Clause masks over an indexed universe, for fast enumeration.
#[derive(Debug, Clone)]
pub struct MaskCnf {
    clauses: Vec<(u64, u64)>,
}

impl MaskCnf {
    /// Bit `i` of an input mask is the value of `universe[i]`.
    pub fn new(phi: &Cnf, universe: &[Var]) -> Result<Self> {
        if universe.len() > 64 {
            return Err(Error::Scale {
                what: "mask universe",
                size: universe.len(),
                cap: 64,
            });
        }
        let index: BTreeMap<&Var, usize> =
            universe.iter().enumerate().map(|(i, v)| (v, i)).collect();
        let mut clauses = Vec::with_capacity(phi.len());
        for c in phi.clauses() {
            let (mut pos, mut neg) = (0u64, 0u64);
            for l in c.literals() {
                let i = *index
                    .get(&l.var)
                    .ok_or_else(|| Error::Scope(format!("{} is outside the universe", l.var)))?;
                if l.positive {
                    pos |= 1 << i;
                } else {
                    neg |= 1 << i;
                }
            }
            clauses.push((pos, neg));
        }
        Ok(MaskCnf { clauses })
    }

    #[inline]
    pub fn eval(&self, m: u64) -> bool {
        self.clauses
            .iter()
            .all(|&(pos, neg)| m & pos != 0 || !m & neg != 0)
    }
}

fn check_cap(n: usize, cap: usize) -> Result<()> {
    if n > cap {
        Err(Error::Scale {
            what: "brute-force universe",
            size: n,
            cap,
        })
    } else {
        Ok(())
    }
}

/// Truth table of `phi` over `universe` (bit `i` of the index is `universe[i]`).
pub fn truth_table(exec: Exec, phi: &Cnf, universe: &[Var], cap: usize) -> Result<Vec<bool>> {
    check_cap(universe.len(), cap)?;
    let mc = MaskCnf::new(phi, universe)?;
    Ok(par::map_range(exec, 1usize << universe.len(), |m| {
        mc.eval(m as u64)
    }))
}

/// Decodes a mask over an indexed universe.
pub fn mask_to_assignment(universe: &[Var], m: u64) -> Assignment {
    universe
        .iter()
        .enumerate()
        .map(|(i, v)| (v.clone(), m >> i & 1 == 1))
        .collect()
}

/// All models of `phi` over `universe`, with the default cap.
pub fn models(phi: &Cnf, universe: &BTreeSet<Var>) -> Result<AssignmentSet> {
    models_with(Exec::default(), phi, universe, DEFAULT_BRUTE_FORCE_CAP)
}

pub fn models_with(
    exec: Exec,
    phi: &Cnf,
    universe: &BTreeSet<Var>,
    cap: usize,
) -> Result<AssignmentSet> {
    if let Some(v) = phi.vars().into_iter().find(|v| !universe.contains(v)) {
        return Err(Error::Scope(format!("{v} is outside the universe")));
    }
    let vars: Vec<Var> = universe.iter().cloned().collect();
    check_cap(vars.len(), cap)?;
    let mc = MaskCnf::new(phi, &vars)?;
    let hits = par::filter_range(exec, 1usize << vars.len(), |m| mc.eval(m as u64));
    Ok(hits
        .into_iter()
        .map(|m| mask_to_assignment(&vars, m as u64))
        .collect())
}

/// Number of models over `universe`, by enumeration.
pub fn count_models_brute(exec: Exec, phi: &Cnf, universe: &BTreeSet<Var>, cap: usize) -> Result<u64> {
    let vars: Vec<Var> = universe.iter().cloned().collect();
    check_cap(vars.len(), cap)?;
    let tt = truth_table(exec, phi, &vars, cap)?;
    Ok(tt.into_iter().filter(|b| *b).count() as u64)
}

/// `φ[g]`: drops the clauses satisfied by `g` and deletes the falsified
/// occurrences of `vars(g)` from the rest. Empty clauses are kept.
pub fn reduce(phi: &Cnf, g: &Assignment) -> Cnf {
    let mut out = Cnf::new();
    for c in phi.clauses() {
        if c.satisfied_by(g) {
            continue;
        }
        out.push(Clause(
            c.literals()
                .iter()
                .filter(|l| !g.contains_var(&l.var))
                .cloned()
                .collect(),
        ));
    }
    out
}

/// Name of the incidence-graph vertex for the clause at 0-based position `i`.
pub fn clause_vertex(i: usize) -> Var {
    format!("clause:{}", i + 1).into()
}

/// Primal and incidence graphs.
pub fn graphs_of(phi: &Cnf) -> (Graph, Graph) {
    let mut primal = Graph::new();
    let mut incidence = Graph::new();
    for v in phi.vars() {
        primal.add_vertex(v.clone());
        incidence.add_vertex(v);
    }
    for (i, c) in phi.clauses().iter().enumerate() {
        let cv = clause_vertex(i);
        incidence.add_vertex(cv.clone());
        let vs: Vec<&Var> = c.vars().collect();
        for (k, u) in vs.iter().enumerate() {
            incidence.add_edge(cv.clone(), (*u).clone()).expect("distinct");
            for w in &vs[k + 1..] {
                primal.add_edge((*u).clone(), (*w).clone()).expect("distinct");
            }
        }
    }
    (primal, incidence)
}

/// DIMACS text and its name-map sidecar. Variable indices follow the sorted
/// variable names.
pub fn to_dimacs(phi: &Cnf) -> (String, String) {
    let vars: Vec<Var> = phi.vars().into_iter().collect();
    let index: BTreeMap<&Var, usize> = vars.iter().enumerate().map(|(i, v)| (v, i + 1)).collect();
    let mut text = format!("p cnf {} {}\n", vars.len(), phi.len());
    for c in phi.clauses() {
        for l in c.literals() {
            let i = index[&l.var] as i64;
            text.push_str(&format!("{} ", if l.positive { i } else { -i }));
        }
        text.push_str("0\n");
    }
    let mut map = String::new();
    for (i, v) in vars.iter().enumerate() {
        map.push_str(&format!("c var {} {}\n", i + 1, v));
    }
    (text, map)
}

/// Parses DIMACS. Names come from `c var <index> <name>` lines, either inline
/// or in the optional sidecar; unnamed indices are called `x<index>`.
pub fn from_dimacs(text: &str, name_map: Option<&str>) -> Result<Cnf> {
    let mut names: BTreeMap<i64, Var> = BTreeMap::new();
    let mut read_names = |src: &str| -> Result<()> {
        for (ln, line) in src.lines().enumerate() {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() >= 2 && toks[0] == "c" && toks[1] == "var" {
                if toks.len() != 4 {
                    return Err(Error::parse(ln + 1, "expected `c var <index> <name>`"));
                }
                let i: i64 = toks[2]
                    .parse()
                    .map_err(|_| Error::parse(ln + 1, "bad variable index"))?;
                if i <= 0 {
                    return Err(Error::parse(ln + 1, "variable index must be positive"));
                }
                names.insert(i, toks[3].into());
            }
        }
        Ok(())
    };
    read_names(text)?;
    if let Some(m) = name_map {
        read_names(m)?;
    }

    let mut header: Option<(usize, usize)> = None;
    let mut clauses: Vec<Vec<i64>> = Vec::new();
    let mut current: Vec<i64> = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
            continue;
        }
        if line.starts_with('p') {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 4 || toks[1] != "cnf" {
                return Err(Error::parse(ln + 1, "expected `p cnf <vars> <clauses>`"));
            }
            let nv = toks[2]
                .parse()
                .map_err(|_| Error::parse(ln + 1, "bad variable count"))?;
            let nc = toks[3]
                .parse()
                .map_err(|_| Error::parse(ln + 1, "bad clause count"))?;
            if header.replace((nv, nc)).is_some() {
                return Err(Error::parse(ln + 1, "duplicate header"));
            }
            continue;
        }
        let Some((nv, _)) = header else {
            return Err(Error::parse(ln + 1, "clause before header"));
        };
        for tok in line.split_whitespace() {
            let x: i64 = tok
                .parse()
                .map_err(|_| Error::parse(ln + 1, format!("bad literal {tok:?}")))?;
            if x == 0 {
                clauses.push(std::mem::take(&mut current));
            } else {
                if x.unsigned_abs() as usize > nv {
                    return Err(Error::parse(ln + 1, format!("literal {x} exceeds header")));
                }
                current.push(x);
            }
        }
    }
    let Some((_, nc)) = header else {
        return Err(Error::parse(1, "missing header"));
    };
    if !current.is_empty() {
        return Err(Error::parse(text.lines().count(), "unterminated clause"));
    }
    if clauses.len() != nc {
        return Err(Error::Malformed(format!(
            "header declares {nc} clauses, found {}",
            clauses.len()
        )));
    }
    let mut cnf = Cnf::new();
    for c in clauses {
        let lits = c.into_iter().map(|x| {
            let var = names
                .get(&x.abs())
                .cloned()
                .unwrap_or_else(|| format!("x{}", x.abs()).into());
            Literal {
                var,
                positive: x > 0,
            }
        });
        cnf.push(Clause::new(lits)?);
    }
    Ok(cnf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assign::var_set;

    fn ex() -> Cnf {
        [
            Clause::positive(["x1", "x2"]),
            Clause::new([Literal::pos("x2"), Literal::neg("x3"), Literal::neg("x4")]).unwrap(),
        ]
        .into_iter()
        .collect()
    }

    fn p3() -> Cnf {
        [Clause::positive(["x1", "x2"]), Clause::positive(["x2", "x3"])]
            .into_iter()
            .collect()
    }

    #[test]
    fn evaluate_cases() {
        let ones = Assignment::parse("x1=1,x2=1,x3=1,x4=1").unwrap();
        assert!(evaluate(&ex(), &ones).unwrap());
        assert!(evaluate(&Cnf::new(), &Assignment::new()).unwrap());
        let bad: Cnf = [Clause::empty()].into_iter().collect();
        assert!(!evaluate(&bad, &ones).unwrap());
        assert!(matches!(
            evaluate(&ex(), &Assignment::parse("x1=1").unwrap()),
            Err(Error::Scope(_))
        ));
    }

    #[test]
    fn model_counts() {
        let edge: Cnf = [Clause::positive(["u", "v"])].into_iter().collect();
        assert_eq!(models(&edge, &var_set(["u", "v"])).unwrap().len(), 3);
        assert_eq!(models(&p3(), &p3().vars()).unwrap().len(), 5);
        let r = models_with(Exec::default(), &edge, &var_set(["u", "v"]), 1);
        assert!(matches!(r, Err(Error::Scale { .. })));
    }

    #[test]
    fn reduce_cases() {
        let xy: Cnf = [Clause::positive(["x", "y"])].into_iter().collect();
        assert!(reduce(&xy, &Assignment::parse("x=1").unwrap()).is_empty());
        let r = reduce(&xy, &Assignment::parse("x=0").unwrap());
        assert_eq!(r.clauses(), &[Clause::positive(["y"])]);
        let r = reduce(&p3(), &Assignment::parse("x2=1").unwrap());
        assert!(r.is_empty());
        let r = reduce(&p3(), &Assignment::parse("x1=0,x2=0").unwrap());
        assert!(r.has_empty_clause());
    }

    #[test]
    fn complementary_clause_rejected() {
        assert!(Clause::new([Literal::pos("x"), Literal::neg("x")]).is_err());
        let c = Clause::new([Literal::pos("x"), Literal::pos("x")]).unwrap();
        assert_eq!(c.len(), 1);
    }

    #[test]
    fn graphs() {
        let (primal, incidence) = graphs_of(&p3());
        assert_eq!(primal.edge_count(), 2);
        assert!(primal.has_edge("x1", "x2") && primal.has_edge("x2", "x3"));
        assert_eq!(incidence.vertex_count(), 5);
        assert_eq!(incidence.degree("clause:1"), 2);
        let k4: Cnf = [Clause::positive(["a", "b", "c", "d"])].into_iter().collect();
        assert_eq!(graphs_of(&k4).0.edge_count(), 6);
    }

    #[test]
    fn dimacs_round_trip() {
        let (text, map) = to_dimacs(&ex());
        assert!(text.starts_with("p cnf 4 2\n"));
        let back = from_dimacs(&text, Some(&map)).unwrap();
        assert_eq!(back, ex());
        assert_eq!(back.clauses(), ex().clauses());
        let inline = format!("{map}{text}");
        assert_eq!(from_dimacs(&inline, None).unwrap(), ex());
        assert!(from_dimacs("p cnf 1 1\n1 -1 0\n", None).is_err());
        assert!(from_dimacs("1 0\n", None).unwrap_err().is_malformed());
    }
}
