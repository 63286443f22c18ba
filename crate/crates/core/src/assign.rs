//! Partial truth assignments, finite sets of them, and the product /
//! restriction / rectangle algebra over such sets.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use crate::par::{self, Exec};
use crate::{Error, Result, Var};

/// A partial map from variables to bits. Each variable is bound at most once.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Assignment(BTreeMap<Var, bool>);

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, bool)>,
        S: Into<Var>,
    {
        Assignment(pairs.into_iter().map(|(v, b)| (v.into(), b)).collect())
    }

    /// Parses `name=bit` tokens separated by commas. The empty string is the
    /// empty assignment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for tok in text.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let (name, bit) = tok
                .split_once('=')
                .ok_or_else(|| Error::Malformed(format!("expected name=bit, got {tok:?}")))?;
            let bit = match bit.trim() {
                "0" => false,
                "1" => true,
                other => return Err(Error::Malformed(format!("bad bit {other:?} in {tok:?}"))),
            };
            let name: Var = name.trim().into();
            if let Some(prev) = map.insert(name.clone(), bit) {
                if prev != bit {
                    return Err(Error::Malformed(format!("variable {name} bound twice")));
                }
            }
        }
        Ok(Assignment(map))
    }

    pub fn insert(&mut self, var: impl Into<Var>, bit: bool) -> Option<bool> {
        self.0.insert(var.into(), bit)
    }

    pub fn get(&self, var: &str) -> Option<bool> {
        self.0.get(var).copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, bool)> + '_ {
        self.0.iter().map(|(v, b)| (v, *b))
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.0.keys().cloned().collect()
    }

    pub fn contains_var(&self, var: &str) -> bool {
        self.0.contains_key(var)
    }

    /// `self ⊆ other` as literal sets.
    pub fn is_subset_of(&self, other: &Assignment) -> bool {
        self.0.iter().all(|(v, b)| other.0.get(v) == Some(b))
    }

    /// Union of two assignments that agree on their common variables.
    pub fn union(&self, other: &Assignment) -> Option<Assignment> {
        let mut out = self.0.clone();
        for (v, b) in &other.0 {
            if let Some(prev) = out.insert(v.clone(), *b) {
                if prev != *b {
                    return None;
                }
            }
        }
        Some(Assignment(out))
    }

    /// Removes every variable bound by `other`.
    pub fn without_vars_of(&self, other: &Assignment) -> Assignment {
        Assignment(
            self.0
                .iter()
                .filter(|(v, _)| !other.0.contains_key(*v))
                .map(|(v, b)| (v.clone(), *b))
                .collect(),
        )
    }

    pub fn without(&self, var: &str) -> Assignment {
        let mut out = self.clone();
        out.0.remove(var);
        out
    }

    /// The literal set of this assignment: `(var, polarity)` pairs.
    pub fn literals(&self) -> impl Iterator<Item = (&Var, bool)> + '_ {
        self.iter()
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (v, b) in &self.0 {
            if !first {
                f.write_str(",")?;
            }
            first = false;
            write!(f, "{v}={}", u8::from(*b))?;
        }
        Ok(())
    }
}

impl<S: Into<Var>> FromIterator<(S, bool)> for Assignment {
    fn from_iter<T: IntoIterator<Item = (S, bool)>>(iter: T) -> Self {
        Assignment::from_pairs(iter)
    }
}

/// `Proj(a, u)`: the bindings of `a` whose variable lies in `u`.
pub fn project(a: &Assignment, u: &BTreeSet<Var>) -> Assignment {
    Assignment(
        a.0.iter()
            .filter(|(v, _)| u.contains(*v))
            .map(|(v, b)| (v.clone(), *b))
            .collect(),
    )
}

/// A finite set of assignments, not necessarily over the same variables.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AssignmentSet {
    elements: BTreeSet<Assignment>,
    universe: BTreeSet<Var>,
}

impl AssignmentSet {
    pub fn empty() -> Self {
        Self::default()
    }

    /// `{∅}`, the neutral element of [`product`].
    pub fn unit() -> Self {
        Self::from_iter([Assignment::new()])
    }

    pub fn insert(&mut self, a: Assignment) -> bool {
        self.universe.extend(a.0.keys().cloned());
        self.elements.insert(a)
    }

    pub fn elements(&self) -> &BTreeSet<Assignment> {
        &self.elements
    }

    pub fn iter(&self) -> impl Iterator<Item = &Assignment> + '_ {
        self.elements.iter()
    }

    /// `vars(H)`, the union of the member variable sets.
    pub fn universe(&self) -> &BTreeSet<Var> {
        &self.universe
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, a: &Assignment) -> bool {
        self.elements.contains(a)
    }

    pub fn is_uniform(&self) -> bool {
        self.elements.iter().all(|a| a.len() == self.universe.len())
    }

    /// All `2^|vars|` assignments over `vars`.
    pub fn cube(vars: &BTreeSet<Var>) -> Result<Self> {
        if vars.len() > 30 {
            return Err(Error::Scale {
                what: "cube size",
                size: vars.len(),
                cap: 30,
            });
        }
        let vs: Vec<&Var> = vars.iter().collect();
        let mut out = AssignmentSet::empty();
        for mask in 0u64..(1u64 << vs.len()) {
            out.insert(Assignment(
                vs.iter()
                    .enumerate()
                    .map(|(i, v)| ((*v).clone(), mask >> i & 1 == 1))
                    .collect(),
            ));
        }
        Ok(out)
    }

    /// `{Proj(a, u) | a ∈ H}`.
    pub fn project(&self, u: &BTreeSet<Var>) -> AssignmentSet {
        self.elements.iter().map(|a| project(a, u)).collect()
    }

    /// `H|a`: the members extending `Proj(a, vars(H))`, with `a`'s variables
    /// removed.
    pub fn restrict(&self, a: &Assignment) -> AssignmentSet {
        restrict_set(self, a)
    }

    /// Renders one assignment per line, LF-terminated.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for a in &self.elements {
            out.push_str(&a.to_string());
            out.push('\n');
        }
        out
    }
}

impl FromIterator<Assignment> for AssignmentSet {
    fn from_iter<T: IntoIterator<Item = Assignment>>(iter: T) -> Self {
        let mut out = AssignmentSet::empty();
        for a in iter {
            out.insert(a);
        }
        out
    }
}

/// Cartesian product `{a ∪ b | a ∈ h1, b ∈ h2}` of sets over disjoint
/// universes.
pub fn product(h1: &AssignmentSet, h2: &AssignmentSet) -> Result<AssignmentSet> {
    let overlap: Vec<String> = h1
        .universe
        .intersection(&h2.universe)
        .map(|v| v.to_string())
        .collect();
    if !overlap.is_empty() {
        return Err(Error::DomainOverlap(overlap));
    }
    let mut out = AssignmentSet::empty();
    for a in &h1.elements {
        for b in &h2.elements {
            let mut m = a.0.clone();
            m.extend(b.0.iter().map(|(v, x)| (v.clone(), *x)));
            out.elements.insert(Assignment(m));
        }
    }
    if !out.elements.is_empty() {
        out.universe = h1.universe.union(&h2.universe).cloned().collect();
    }
    Ok(out)
}

/// Product of any number of pairwise disjoint sets; the empty product is `{∅}`.
pub fn product_all<'a, I>(sets: I) -> Result<AssignmentSet>
where
    I: IntoIterator<Item = &'a AssignmentSet>,
{
    sets.into_iter()
        .try_fold(AssignmentSet::unit(), |acc, h| product(&acc, h))
}

/// `H|a = {b \ a' | b ∈ H, a' ⊆ b}` where `a' = Proj(a, vars(H))`.
pub fn restrict_set(h: &AssignmentSet, a: &Assignment) -> AssignmentSet {
    let a = project(a, &h.universe);
    let mut out = AssignmentSet::empty();
    for b in &h.elements {
        if a.is_subset_of(b) {
            out.insert(b.without_vars_of(&a));
        }
    }
    out
}

/// Whether the uniform set `h` is a rectangle splitting `y`: some bipartition
/// `(V1, V2)` of `vars(h)` meeting `y` on both sides has
/// `h = Proj(h, V1) × Proj(h, V2)`. Returns the first such bipartition in
/// mask order.
///
/// `h ⊆ Proj(h, V1) × Proj(h, V2)` always holds, so equality is decided by
/// comparing cardinalities.
pub fn breaks(
    h: &AssignmentSet,
    y: &BTreeSet<Var>,
) -> Result<Option<(BTreeSet<Var>, BTreeSet<Var>)>> {
    breaks_with(Exec::default(), h, y)
}

pub fn breaks_with(
    exec: Exec,
    h: &AssignmentSet,
    y: &BTreeSet<Var>,
) -> Result<Option<(BTreeSet<Var>, BTreeSet<Var>)>> {
    if !h.is_uniform() {
        return Err(Error::NotUniform);
    }
    if let Some(v) = y.iter().find(|v| !h.universe.contains(*v)) {
        return Err(Error::Scope(format!("{v} is not a variable of the set")));
    }
    let vars: Vec<&Var> = h.universe.iter().collect();
    let n = vars.len();
    if n > 24 {
        return Err(Error::Scale {
            what: "breaks universe",
            size: n,
            cap: 24,
        });
    }
    if y.len() < 2 {
        return Ok(None);
    }
    let rows: Vec<u64> = h
        .elements
        .iter()
        .map(|a| {
            vars.iter()
                .enumerate()
                .filter(|(_, v)| a.get(v) == Some(true))
                .fold(0u64, |m, (i, _)| m | 1 << i)
        })
        .collect();
    let ymask = vars
        .iter()
        .enumerate()
        .filter(|(_, v)| y.contains(**v))
        .fold(0u64, |m, (i, _)| m | 1 << i);
    let full = (1u64 << n) - 1;
    // Fixing variable 0 on the V1 side enumerates each bipartition once.
    let count = 1usize << (n - 1);
    let found = par::argmin_range(exec, count, |k| {
        let v1 = (k as u64) << 1 | 1;
        let v2 = full & !v1;
        if v2 == 0 || v1 & ymask == 0 || v2 & ymask == 0 {
            return None;
        }
        let p1: HashSet<u64> = rows.iter().map(|r| r & v1).collect();
        let p2: HashSet<u64> = rows.iter().map(|r| r & v2).collect();
        (p1.len() * p2.len() == rows.len()).then_some(())
    });
    Ok(found.map(|(k, ())| {
        let v1 = (k as u64) << 1 | 1;
        let mut s1 = BTreeSet::new();
        let mut s2 = BTreeSet::new();
        for (i, v) in vars.iter().enumerate() {
            if v1 >> i & 1 == 1 {
                s1.insert((*v).clone());
            } else {
                s2.insert((*v).clone());
            }
        }
        (s1, s2)
    }))
}

/// Builds a variable set from string slices.
pub fn var_set<I, S>(names: I) -> BTreeSet<Var>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    names.into_iter().map(|s| Var::from(s.as_ref())).collect()
}
