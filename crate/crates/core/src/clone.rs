//! Fragments of the clone of term operations and of the polynomial clone,
//! semilattice edges, the multiplication term and a bounded WNU search.

use std::fmt;
use std::sync::Arc;

use crate::algebra::{
    con, decode_into, quotient, replay, subpower_closure, traced_closure, ClosureLimits,
    ClosureStatus, Elem, FiniteAlgebra, OperationTable,
};
use crate::error::{Error, Result};

/// An anonymous operation on a universe, same layout as an operation table.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FunctionTable {
    arity: usize,
    size: usize,
    table: Vec<Elem>,
}

impl fmt::Debug for FunctionTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FunctionTable/{}{:?}", self.arity, self.table)
    }
}

impl FunctionTable {
    pub fn new(arity: usize, size: usize, table: Vec<Elem>) -> Result<Self> {
        let rows = size.checked_pow(arity as u32).unwrap_or(usize::MAX);
        if table.len() != rows {
            return Err(Error::BadTable {
                op: "<function>".into(),
                reason: format!("expected {} entries, found {}", rows, table.len()),
            });
        }
        if let Some(&v) = table.iter().find(|&&v| v >= size) {
            return Err(Error::OutOfRange { elem: v, size });
        }
        Ok(FunctionTable { arity, size, table })
    }

    pub fn from_fn(arity: usize, size: usize, mut f: impl FnMut(&[Elem]) -> Elem) -> Self {
        let rows = size.pow(arity as u32);
        let mut args = vec![0; arity];
        let table = (0..rows)
            .map(|code| {
                decode_into(code, size, &mut args);
                f(&args)
            })
            .collect();
        FunctionTable { arity, size, table }
    }

    pub fn projection(arity: usize, size: usize, i: usize) -> Self {
        Self::from_fn(arity, size, |args| args[i])
    }

    pub fn constant(arity: usize, size: usize, c: Elem) -> Self {
        Self::from_fn(arity, size, |_| c)
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn table(&self) -> &[Elem] {
        &self.table
    }

    #[inline]
    pub fn apply(&self, args: &[Elem]) -> Elem {
        self.table[args.iter().fold(0, |acc, &x| acc * self.size + x)]
    }

    /// Binary shorthand.
    #[inline]
    pub fn mul(&self, a: Elem, b: Elem) -> Elem {
        self.table[a * self.size + b]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FragmentKind {
    TermOps,
    Polynomials,
}

/// The `k`-ary members of a clone generated so far, in breadth-first order
/// from the generators.
#[derive(Debug, Clone)]
pub struct CloneFragment {
    pub algebra: String,
    pub arity: usize,
    pub kind: FragmentKind,
    tables: Vec<FunctionTable>,
    pub complete: bool,
}

impl CloneFragment {
    pub fn tables(&self) -> &[FunctionTable] {
        &self.tables
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    pub fn contains(&self, f: &FunctionTable) -> bool {
        self.tables.contains(f)
    }

    pub fn position(&self, f: &[Elem]) -> Option<usize> {
        self.tables.iter().position(|t| t.table == f)
    }
}

/// Default bound on the number of tables in a fragment.
pub const DEFAULT_FRAGMENT_CAP: usize = 100_000;

fn generators(a: &FiniteAlgebra, arity: usize, kind: FragmentKind) -> Vec<Vec<Elem>> {
    let n = a.size();
    let mut gens: Vec<Vec<Elem>> = (0..arity)
        .map(|i| FunctionTable::projection(arity, n, i).table)
        .collect();
    if kind == FragmentKind::Polynomials {
        gens.extend((0..n).map(|c| FunctionTable::constant(arity, n, c).table));
    }
    gens
}

/// Tables longer than this are refused outright.
const MAX_TABLE_ROWS: usize = 1 << 16;

fn generate(
    a: &FiniteAlgebra,
    arity: usize,
    kind: FragmentKind,
    limits: ClosureLimits,
) -> Result<CloneFragment> {
    if arity == 0 {
        return Err(Error::Precondition("fragment arity must be at least 1".into()));
    }
    let rows = a
        .size()
        .checked_pow(arity as u32)
        .filter(|&r| r <= MAX_TABLE_ROWS)
        .ok_or_else(|| Error::Resource(format!("{}-ary tables of `{}` are too large", arity, a.id())))?;
    let coords = vec![a; rows];
    let closure = subpower_closure(&coords, generators(a, arity, kind), limits, |_| false)?;
    let complete = closure.is_complete();
    let n = a.size();
    Ok(CloneFragment {
        algebra: a.id().to_string(),
        arity,
        kind,
        tables: closure
            .elements
            .into_iter()
            .map(|table| FunctionTable {
                arity,
                size: n,
                table,
            })
            .collect(),
        complete,
    })
}

/// `k`-ary term operations: the closure of the projections. A fragment that
/// hit `cap` is returned with `complete == false`.
pub fn term_ops(a: &FiniteAlgebra, k: usize, cap: usize) -> Result<CloneFragment> {
    generate(a, k, FragmentKind::TermOps, ClosureLimits::elements(cap))
}

/// Unary polynomials: closure of the identity and all constants. Cached.
pub fn unary_polynomials(a: &FiniteAlgebra) -> Result<Arc<CloneFragment>> {
    if let Some(f) = a.caches.unary.get() {
        return Ok(f.clone());
    }
    let frag = generate(
        a,
        1,
        FragmentKind::Polynomials,
        ClosureLimits::elements(DEFAULT_FRAGMENT_CAP),
    )?;
    if !frag.complete {
        return Err(Error::Resource(format!(
            "unary polynomials of `{}` exceed {} tables",
            a.id(),
            DEFAULT_FRAGMENT_CAP
        )));
    }
    Ok(a.caches.unary.get_or_init(|| Arc::new(frag)).clone())
}

/// Binary polynomials: closure of both projections and all constants.
/// Hitting `cap` is a resource error.
pub fn binary_polynomials(a: &FiniteAlgebra, cap: usize) -> Result<CloneFragment> {
    let frag = generate(a, 2, FragmentKind::Polynomials, ClosureLimits::elements(cap))?;
    if !frag.complete {
        return Err(Error::Resource(format!(
            "binary polynomials of `{}` exceed {} tables",
            a.id(),
            cap
        )));
    }
    Ok(frag)
}

/// Breadth-first search through a fragment for the first table satisfying
/// `pred`, without generating the rest. `Ok(None)` means the whole fragment
/// was generated and nothing qualified.
pub fn find_in_fragment(
    a: &FiniteAlgebra,
    arity: usize,
    kind: FragmentKind,
    limits: ClosureLimits,
    mut pred: impl FnMut(&FunctionTable) -> bool,
) -> Result<Option<FunctionTable>> {
    let n = a.size();
    let rows = n.checked_pow(arity as u32).unwrap_or(usize::MAX);
    if arity == 0 || rows > limits.max_elements {
        return Err(Error::Resource(format!("{}-ary tables of `{}` are too large", arity, a.id())));
    }
    let coords = vec![a; rows];
    let closure = subpower_closure(&coords, generators(a, arity, kind), limits, |t| {
        pred(&FunctionTable {
            arity,
            size: n,
            table: t.to_vec(),
        })
    })?;
    match closure.status {
        ClosureStatus::Stopped => Ok(closure.elements.last().map(|t| FunctionTable {
            arity,
            size: n,
            table: t.clone(),
        })),
        ClosureStatus::Complete => Ok(None),
        ClosureStatus::Capped => Err(Error::Resource(format!(
            "search through {}-ary fragment of `{}` hit its limit",
            arity,
            a.id()
        ))),
    }
}

/// An ordered semilattice edge: `witness` is a binary term operation with
/// `witness(lower, absorbing) = witness(absorbing, lower) = absorbing`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemilatticeEdge {
    pub lower: Elem,
    pub absorbing: Elem,
    pub witness: FunctionTable,
}

impl SemilatticeEdge {
    pub fn pair(&self) -> (Elem, Elem) {
        (self.lower, self.absorbing)
    }
}

/// Whether `(a, b)` is a semilattice edge with `b` absorbing; returns a
/// witnessing binary term operation.
///
/// The test asks whether `(b, b)` lies in the subalgebra of `A²` generated by
/// `(a, b)` and `(b, a)`; the derivation found there is then evaluated on
/// the whole square to produce the witness table.
pub fn edge_witness(a: &FiniteAlgebra, lower: Elem, absorbing: Elem) -> Result<Option<FunctionTable>> {
    if lower == absorbing {
        return Ok(None);
    }
    a.check_elems(&[lower, absorbing])?;
    let target = [absorbing, absorbing];
    let (closure, trace) = traced_closure(
        &[a, a],
        [vec![lower, absorbing], vec![absorbing, lower]],
        ClosureLimits::default(),
        |t| t == target,
    )?;
    if closure.status != ClosureStatus::Stopped {
        return Ok(None);
    }
    Ok(Some(binary_term_table(a, &trace, closure.elements.len() - 1)))
}

fn binary_term_table(a: &FiniteAlgebra, trace: &[crate::algebra::Derivation], target: usize) -> FunctionTable {
    let n = a.size();
    let coords = vec![a; n * n];
    let seeds = vec![
        FunctionTable::projection(2, n, 0).table,
        FunctionTable::projection(2, n, 1).table,
    ];
    FunctionTable {
        arity: 2,
        size: n,
        table: replay(trace, target, &coords, &seeds),
    }
}

/// All semilattice edges `(a, b)`, `b` absorbing, in lexicographic order of
/// `(a, b)`. Cached.
pub fn semilattice_edges(a: &FiniteAlgebra) -> Result<Arc<Vec<SemilatticeEdge>>> {
    a.caches
        .edges
        .get_or_init(|| {
            let mut edges = Vec::new();
            for x in 0..a.size() {
                for y in 0..a.size() {
                    if let Some(witness) = edge_witness(a, x, y)? {
                        edges.push(SemilatticeEdge {
                            lower: x,
                            absorbing: y,
                            witness,
                        });
                    }
                }
            }
            Ok(Arc::new(edges))
        })
        .clone()
}

pub fn is_semilattice_free(a: &FiniteAlgebra) -> Result<bool> {
    Ok(semilattice_edges(a)?.is_empty())
}

fn edge_matrix(a: &FiniteAlgebra) -> Result<Vec<Vec<bool>>> {
    let n = a.size();
    let mut m = vec![vec![false; n]; n];
    for e in semilattice_edges(a)?.iter() {
        m[e.lower][e.absorbing] = true;
    }
    Ok(m)
}

/// Checks both defining conditions of a multiplication on one algebra:
/// it acts as a semilattice operation on every edge (in an orientation that
/// is itself an edge), and `ab = a` or `(a, ab)` is an edge.
pub fn is_multiplication(a: &FiniteAlgebra, mul: &FunctionTable) -> Result<bool> {
    let edges = edge_matrix(a)?;
    let n = a.size();
    let value = |x: Elem, y: Elem| mul.mul(x, y);
    Ok((0..n).all(|x| (0..n).all(|y| x == y || pair_ok(&edges, x, y, true, &value))))
}

fn pair_ok(
    edges: &[Vec<bool>],
    x: Elem,
    y: Elem,
    on_edges: bool,
    value: &impl Fn(Elem, Elem) -> Elem,
) -> bool {
    let is_edge = |a: Elem, b: Elem| edges[a][b] || edges[b][a];
    let xy = value(x, y);
    if xy != x && !is_edge(x, xy) {
        return false;
    }
    // on an edge: commutative with one of the two absorbing
    if on_edges && is_edge(x, y) && (xy != value(y, x) || (xy != x && xy != y)) {
        return false;
    }
    true
}

/// What a class-wide binary term must satisfy on one member.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum TermRequirement {
    /// `ab = a` or `{a, ab}` is an edge; on a semilattice-free member this
    /// makes the term the first projection.
    EdgeBounded,
    /// [`EdgeBounded`](Self::EdgeBounded) and a semilattice operation on every edge.
    Multiplication,
}

/// One binary term applied across a class of similar algebras: the first
/// term, in breadth-first order from the projections, that is a
/// multiplication on every member. Returns one table per member.
pub fn class_multiplication(
    members: &[&FiniteAlgebra],
    limits: ClosureLimits,
) -> Result<Vec<FunctionTable>> {
    let req = vec![TermRequirement::Multiplication; members.len()];
    class_binary_term(members, &req, limits)
}

/// Like [`class_multiplication`] with a requirement per member.
pub fn class_binary_term(
    members: &[&FiniteAlgebra],
    requirements: &[TermRequirement],
    limits: ClosureLimits,
) -> Result<Vec<FunctionTable>> {
    crate::algebra::check_signature(members)?;
    // coordinates: every off-diagonal pair of every member
    let mut coords: Vec<&FiniteAlgebra> = Vec::new();
    let mut layout: Vec<(usize, Elem, Elem)> = Vec::new();
    let mut edge_sets = Vec::with_capacity(members.len());
    for (i, m) in members.iter().enumerate() {
        edge_sets.push(edge_matrix(m)?);
        for x in 0..m.size() {
            for y in 0..m.size() {
                if x != y {
                    coords.push(m);
                    layout.push((i, x, y));
                }
            }
        }
    }
    let position: Vec<Vec<Vec<usize>>> = members
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let mut p = vec![vec![usize::MAX; m.size()]; m.size()];
            for (c, &(j, x, y)) in layout.iter().enumerate() {
                if j == i {
                    p[x][y] = c;
                }
            }
            p
        })
        .collect();
    let qualifies = |v: &[Elem]| {
        members.iter().enumerate().all(|(i, m)| {
            let value = |x: Elem, y: Elem| if x == y { x } else { v[position[i][x][y]] };
            let full = requirements[i] == TermRequirement::Multiplication;
            (0..m.size()).all(|x| {
                (0..m.size()).all(|y| x == y || pair_ok(&edge_sets[i], x, y, full, &value))
            })
        })
    };
    let seeds = vec![
        layout.iter().map(|&(_, x, _)| x).collect::<Vec<_>>(),
        layout.iter().map(|&(_, _, y)| y).collect::<Vec<_>>(),
    ];
    if qualifies(&seeds[0]) {
        return Ok(members
            .iter()
            .map(|m| FunctionTable::projection(2, m.size(), 0))
            .collect());
    }
    let (closure, trace) = traced_closure(&coords, seeds, limits, |v| qualifies(v))?;
    match closure.status {
        ClosureStatus::Stopped => {
            let target = closure.elements.len() - 1;
            Ok(members
                .iter()
                .map(|m| binary_term_table(m, &trace, target))
                .collect())
        }
        ClosureStatus::Complete => Err(Error::Contract(
            "no binary term meets the requirements on the whole class".into(),
        )),
        ClosureStatus::Capped => Err(Error::Resource(
            "search for a class-wide binary term hit its limit".into(),
        )),
    }
}

/// A multiplication term of a single algebra.
pub fn multiplication_op(a: &FiniteAlgebra) -> Result<FunctionTable> {
    Ok(class_multiplication(&[a], ClosureLimits::default())?.remove(0))
}

/// Whether `a` has a Taylor term, equivalently a WNU term of some arity.
/// For a finite idempotent algebra this fails exactly when some subalgebra
/// has a two-block quotient on which every basic operation is a projection.
/// Subsets are enumerated, so this is meant for small algebras.
pub fn is_taylor(a: &FiniteAlgebra) -> Result<bool> {
    let n = a.size();
    if n > 16 {
        return Err(Error::Resource(format!(
            "Taylor test enumerates subsets; {n} elements is too many"
        )));
    }
    for mask in 1u32..(1 << n) {
        if mask.count_ones() < 2 {
            continue;
        }
        let set: Vec<Elem> = (0..n).filter(|&x| mask >> x & 1 == 1).collect();
        if !a.is_subuniverse(&set) {
            continue;
        }
        let (b, _) = a.subalgebra(&set)?;
        for alpha in con(&b)?.congruences.iter().filter(|c| c.num_blocks() == 2) {
            let (q, _) = quotient(&b, alpha)?;
            if q.ops().iter().all(is_projection) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn is_projection(op: &OperationTable) -> bool {
    let mut args = vec![0; op.arity()];
    (0..op.arity()).any(|i| {
        op.table().iter().enumerate().all(|(code, &value)| {
            decode_into(code, op.size(), &mut args);
            value == args[i]
        })
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WnuOutcome {
    Found(FunctionTable),
    NotFound,
    /// The search hit its limit.
    Unknown,
}

/// Looks for a `k`-ary weak near-unanimity term operation by generating the
/// subpower on one-position patterns `(x, …, y, …, x)` from the projections.
pub fn wnu_check(a: &FiniteAlgebra, k: usize, limits: ClosureLimits) -> Result<WnuOutcome> {
    if k < 3 {
        return Err(Error::Precondition("WNU arity must be at least 3".into()));
    }
    let n = a.size();
    let mut layout: Vec<(Elem, Elem, usize)> = Vec::new();
    for x in 0..n {
        for y in 0..n {
            if x != y {
                for i in 0..k {
                    layout.push((x, y, i));
                }
            }
        }
    }
    let coords = vec![a; layout.len()];
    let seeds: Vec<Vec<Elem>> = (0..k)
        .map(|j| {
            layout
                .iter()
                .map(|&(x, y, i)| if i == j { y } else { x })
                .collect()
        })
        .collect();
    // layout groups the k positions of a pair consecutively
    let is_wnu = |v: &[Elem]| v.chunks(k).all(|c| c.iter().all(|&z| z == c[0]));
    let (closure, trace) = traced_closure(&coords, seeds, limits, |v| is_wnu(v))?;
    match closure.status {
        ClosureStatus::Stopped => {
            let rows = n.pow(k as u32);
            let full = vec![a; rows];
            let proj: Vec<Vec<Elem>> = (0..k)
                .map(|i| FunctionTable::projection(k, n, i).table)
                .collect();
            let table = replay(&trace, closure.elements.len() - 1, &full, &proj);
            Ok(WnuOutcome::Found(FunctionTable {
                arity: k,
                size: n,
                table,
            }))
        }
        ClosureStatus::Complete => Ok(WnuOutcome::NotFound),
        ClosureStatus::Capped => Ok(WnuOutcome::Unknown),
    }
}
