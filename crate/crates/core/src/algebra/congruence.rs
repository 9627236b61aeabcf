//! Partitions, congruence generation, congruence lattices and quotients.

use std::fmt;
use std::sync::Arc;

use super::{Elem, FiniteAlgebra, OperationTable};
use crate::clone::unary_polynomials;
use crate::error::{Error, Result};

/// Disjoint-set forest with path halving.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns `true` if two distinct classes were merged.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        // keep the smaller root so that roots are block minima
        if ra < rb {
            self.parent[rb] = ra;
        } else {
            self.parent[ra] = rb;
        }
        true
    }

    pub fn into_congruence(mut self) -> Congruence {
        let n = self.parent.len();
        let labels = (0..n).map(|x| self.find(x)).collect();
        Congruence { labels }
    }
}

/// A partition of `{0, …, n-1}` stored as the least member of each element's
/// block. Two partitions are equal iff their label vectors are.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Congruence {
    labels: Vec<Elem>,
}

impl fmt::Debug for Congruence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Congruence{}", self)
    }
}

/// Sorted block lists, e.g. `[[0,1],[2]]`.
impl fmt::Display for Congruence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, block) in self.blocks().iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "[")?;
            for (j, x) in block.iter().enumerate() {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{x}")?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

impl Congruence {
    /// Equality relation.
    pub fn zero(n: usize) -> Self {
        Congruence {
            labels: (0..n).collect(),
        }
    }

    /// Full relation.
    pub fn one(n: usize) -> Self {
        Congruence { labels: vec![0; n] }
    }

    /// Canonicalizes an arbitrary labeling: elements with equal labels share a block.
    pub fn from_labels(raw: &[usize]) -> Self {
        let mut first: std::collections::HashMap<usize, Elem> = Default::default();
        let labels = raw
            .iter()
            .enumerate()
            .map(|(x, &l)| *first.entry(l).or_insert(x))
            .collect();
        Congruence { labels }
    }

    /// Builds the partition with the given blocks; elements not mentioned
    /// become singletons.
    pub fn from_blocks(n: usize, blocks: &[Vec<Elem>]) -> Result<Self> {
        let mut uf = UnionFind::new(n);
        let mut seen = vec![false; n];
        for block in blocks {
            for &x in block {
                if x >= n {
                    return Err(Error::OutOfRange { elem: x, size: n });
                }
                if seen[x] {
                    return Err(Error::Input(format!("element {x} occurs in two blocks")));
                }
                seen[x] = true;
            }
            for w in block.windows(2) {
                uf.union(w[0], w[1]);
            }
        }
        Ok(uf.into_congruence())
    }

    /// Equivalence generated by `pairs` (no operations involved).
    pub fn generated_equivalence(n: usize, pairs: &[(Elem, Elem)]) -> Self {
        let mut uf = UnionFind::new(n);
        for &(a, b) in pairs {
            uf.union(a, b);
        }
        uf.into_congruence()
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    /// Least member of the block of `x`.
    pub fn rep(&self, x: Elem) -> Elem {
        self.labels[x]
    }

    pub fn labels(&self) -> &[Elem] {
        &self.labels
    }

    pub fn related(&self, a: Elem, b: Elem) -> bool {
        self.labels[a] == self.labels[b]
    }

    pub fn is_zero(&self) -> bool {
        self.labels.iter().enumerate().all(|(x, &l)| x == l)
    }

    pub fn is_one(&self) -> bool {
        self.labels.iter().all(|&l| l == 0)
    }

    /// Block representatives in increasing order.
    pub fn reps(&self) -> Vec<Elem> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(x, &l)| *x == l)
            .map(|(x, _)| x)
            .collect()
    }

    pub fn num_blocks(&self) -> usize {
        self.labels
            .iter()
            .enumerate()
            .filter(|(x, &l)| *x == l)
            .count()
    }

    /// Position of each element's block in the list of blocks ordered by
    /// least member.
    pub fn block_index(&self) -> Vec<usize> {
        let mut index = vec![usize::MAX; self.labels.len()];
        let mut next = 0;
        for x in 0..self.labels.len() {
            let l = self.labels[x];
            if l == x {
                index[x] = next;
                next += 1;
            } else {
                index[x] = index[l];
            }
        }
        index
    }

    pub fn blocks(&self) -> Vec<Vec<Elem>> {
        let index = self.block_index();
        let mut blocks = vec![Vec::new(); self.num_blocks()];
        for (x, &i) in index.iter().enumerate() {
            blocks[i].push(x);
        }
        blocks
    }

    /// Block containing `x`, sorted.
    pub fn block_of(&self, x: Elem) -> Vec<Elem> {
        let l = self.labels[x];
        (0..self.labels.len())
            .filter(|&y| self.labels[y] == l)
            .collect()
    }

    /// Ordered pairs in the relation.
    pub fn pairs(&self) -> Vec<(Elem, Elem)> {
        let n = self.labels.len();
        let mut out = Vec::new();
        for a in 0..n {
            for b in 0..n {
                if self.labels[a] == self.labels[b] {
                    out.push((a, b));
                }
            }
        }
        out
    }

    /// Refinement order.
    pub fn le(&self, other: &Congruence) -> bool {
        assert_eq!(self.size(), other.size());
        (0..self.size()).all(|x| other.labels[x] == other.labels[self.labels[x]])
    }

    pub fn meet(&self, other: &Congruence) -> Congruence {
        assert_eq!(self.size(), other.size());
        let pairs: Vec<(usize, usize)> = self
            .labels
            .iter()
            .zip(&other.labels)
            .map(|(&a, &b)| (a, b))
            .collect();
        let n = self.size();
        let raw: Vec<usize> = pairs.iter().map(|&(a, b)| a * n + b).collect();
        Congruence::from_labels(&raw)
    }

    pub fn join(&self, other: &Congruence) -> Congruence {
        assert_eq!(self.size(), other.size());
        let mut uf = UnionFind::new(self.size());
        for x in 0..self.size() {
            uf.union(x, self.labels[x]);
            uf.union(x, other.labels[x]);
        }
        uf.into_congruence()
    }

    /// Whether every basic operation of `a` respects the partition.
    pub fn is_congruence_of(&self, a: &FiniteAlgebra) -> bool {
        self.size() == a.size() && compatibility_violation(a, self).is_none()
    }
}

/// First (op, argument tuple, position, replacement) where changing one
/// argument within its block moves the result to another block.
fn compatibility_violation(
    a: &FiniteAlgebra,
    alpha: &Congruence,
) -> Option<(String, Vec<Elem>, usize, Elem)> {
    let n = a.size();
    for op in a.ops() {
        let m = op.arity();
        let mut args = vec![0; m];
        for code in 0..op.table().len() {
            super::decode_into(code, n, &mut args);
            let base = alpha.rep(op.table()[code]);
            for p in 0..m {
                let keep = args[p];
                for y in 0..n {
                    if y != keep && alpha.related(y, keep) {
                        args[p] = y;
                        if alpha.rep(op.apply(n, &args)) != base {
                            let mut witness = args.clone();
                            witness[p] = keep;
                            return Some((op.name().to_string(), witness, p, y));
                        }
                    }
                }
                args[p] = keep;
            }
        }
    }
    None
}

/// Least congruence of `a` containing `pairs`: every pair is pushed through
/// every unary polynomial and the results are merged until nothing changes.
pub fn cg(a: &FiniteAlgebra, pairs: &[(Elem, Elem)]) -> Result<Congruence> {
    for &(x, y) in pairs {
        a.check_elems(&[x, y])?;
    }
    let polys = unary_polynomials(a)?;
    let mut uf = UnionFind::new(a.size());
    let mut work: Vec<(Elem, Elem)> = Vec::new();
    for &(x, y) in pairs {
        if uf.union(x, y) {
            work.push((x, y));
        }
    }
    while let Some((x, y)) = work.pop() {
        for h in polys.tables() {
            let (hx, hy) = (h.table()[x], h.table()[y]);
            if uf.union(hx, hy) {
                work.push((hx, hy));
            }
        }
    }
    Ok(uf.into_congruence())
}

/// The lattice of all congruences of an algebra.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CongruenceLattice {
    /// Sorted by decreasing number of blocks, then by labels; `0` comes
    /// first and `1` last.
    pub congruences: Vec<Congruence>,
    /// `leq[i][j]` iff `congruences[i] ≤ congruences[j]`.
    pub leq: Vec<Vec<bool>>,
    /// Index pairs `(i, j)` with `congruences[i] ≺ congruences[j]`.
    pub covers: Vec<(usize, usize)>,
}

impl CongruenceLattice {
    pub fn len(&self) -> usize {
        self.congruences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.congruences.is_empty()
    }

    pub fn index_of(&self, alpha: &Congruence) -> Option<usize> {
        self.congruences.iter().position(|c| c == alpha)
    }

    pub fn zero(&self) -> &Congruence {
        &self.congruences[0]
    }

    pub fn one(&self) -> &Congruence {
        self.congruences.last().unwrap()
    }

    pub fn cover_pairs(&self) -> Vec<(Congruence, Congruence)> {
        self.covers
            .iter()
            .map(|&(i, j)| (self.congruences[i].clone(), self.congruences[j].clone()))
            .collect()
    }

    /// Congruences other than `1` with exactly one upper cover.
    pub fn meet_irreducibles(&self) -> Vec<Congruence> {
        let top = self.len() - 1;
        (0..self.len())
            .filter(|&i| i != top && self.covers.iter().filter(|c| c.0 == i).count() == 1)
            .map(|i| self.congruences[i].clone())
            .collect()
    }
}

/// All congruences of `a`, from principal congruences closed under join.
/// The result is cached on the algebra.
pub fn con(a: &FiniteAlgebra) -> Result<Arc<CongruenceLattice>> {
    if let Some(l) = a.caches.con.get() {
        return Ok(l.clone());
    }
    let lattice = Arc::new(compute_con(a)?);
    Ok(a.caches.con.get_or_init(|| lattice).clone())
}

fn compute_con(a: &FiniteAlgebra) -> Result<CongruenceLattice> {
    let n = a.size();
    let mut all: Vec<Congruence> = vec![Congruence::zero(n)];
    let mut set: std::collections::HashSet<Congruence> = all.iter().cloned().collect();
    for x in 0..n {
        for y in x + 1..n {
            let c = cg(a, &[(x, y)])?;
            if set.insert(c.clone()) {
                all.push(c);
            }
        }
    }
    let mut start = 1;
    loop {
        let end = all.len();
        let mut fresh = Vec::new();
        for i in 1..end {
            for j in start.max(i + 1)..end {
                let c = all[i].join(&all[j]);
                if !set.contains(&c) {
                    set.insert(c.clone());
                    fresh.push(c);
                }
            }
        }
        if fresh.is_empty() {
            break;
        }
        start = end;
        all.extend(fresh);
    }
    all.sort_by(|p, q| q.num_blocks().cmp(&p.num_blocks()).then(p.cmp(q)));
    let k = all.len();
    let leq: Vec<Vec<bool>> = (0..k)
        .map(|i| (0..k).map(|j| all[i].le(&all[j])).collect())
        .collect();
    let mut covers = Vec::new();
    for i in 0..k {
        for j in 0..k {
            if i != j && leq[i][j] && !(0..k).any(|m| m != i && m != j && leq[i][m] && leq[m][j]) {
                covers.push((i, j));
            }
        }
    }
    Ok(CongruenceLattice {
        congruences: all,
        leq,
        covers,
    })
}

/// Outcome of the subdirect-irreducibility test.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubdirectStatus {
    /// One-element algebra: irreducible with no monolith.
    Trivial,
    /// The least nontrivial congruence.
    Irreducible(Congruence),
    Reducible,
}

impl SubdirectStatus {
    pub fn is_irreducible(&self) -> bool {
        !matches!(self, SubdirectStatus::Reducible)
    }

    pub fn monolith(&self) -> Option<&Congruence> {
        match self {
            SubdirectStatus::Irreducible(m) => Some(m),
            _ => None,
        }
    }
}

/// Meet of all nontrivial congruences, if that meet is nontrivial.
pub fn monolith(a: &FiniteAlgebra) -> Result<SubdirectStatus> {
    if let Some(s) = a.caches.subdirect.get() {
        return Ok(s.clone());
    }
    let status = if a.size() == 1 {
        SubdirectStatus::Trivial
    } else {
        let lattice = con(a)?;
        let mut meet = Congruence::one(a.size());
        for c in lattice.congruences.iter().skip(1) {
            meet = meet.meet(c);
        }
        if meet.is_zero() {
            SubdirectStatus::Reducible
        } else {
            SubdirectStatus::Irreducible(meet)
        }
    };
    Ok(a.caches.subdirect.get_or_init(|| status).clone())
}

/// Quotient by a congruence. Elements of the quotient are the blocks in
/// order of least member; the returned map sends each element to its block.
pub fn quotient(a: &FiniteAlgebra, alpha: &Congruence) -> Result<(FiniteAlgebra, Vec<Elem>)> {
    if alpha.size() != a.size() {
        return Err(Error::NotCongruence(format!(
            "partition of {} elements for an algebra of size {}",
            alpha.size(),
            a.size()
        )));
    }
    if let Some((op, args, p, y)) = compatibility_violation(a, alpha) {
        return Err(Error::NotCongruence(format!(
            "`{op}` at {args:?} changes block when argument {p} is replaced by {y}"
        )));
    }
    let index = alpha.block_index();
    if alpha.is_zero() {
        return Ok((a.clone(), index));
    }
    let reps = alpha.reps();
    let k = reps.len();
    let n = a.size();
    let ops = a
        .ops()
        .iter()
        .map(|op| {
            let mut lifted = vec![0; op.arity()];
            OperationTable::from_fn(op.name(), op.arity(), k, |args| {
                for (l, &b) in lifted.iter_mut().zip(args) {
                    *l = reps[b];
                }
                index[op.apply(n, &lifted)]
            })
        })
        .collect();
    let q = FiniteAlgebra::new(format!("{}/{}", a.id(), alpha), k, ops)?;
    Ok((q, index))
}
