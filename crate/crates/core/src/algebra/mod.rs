//! Finite idempotent algebras given by operation tables.

mod closure;
mod congruence;

use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, OnceLock};

pub use closure::{
    replay, subpower_closure, traced_closure, Closure, ClosureLimits, ClosureStatus, Derivation,
    PowerAlgebra,
};
pub(crate) use closure::check_signature;
pub use congruence::{
    cg, con, monolith, quotient, Congruence, CongruenceLattice, SubdirectStatus, UnionFind,
};

use crate::clone::{CloneFragment, SemilatticeEdge};
use crate::error::{Error, Result};

/// Universe elements are `0..n`.
pub type Elem = usize;

/// A named basic operation, stored densely in row-major order: the last
/// argument varies fastest.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct OperationTable {
    name: String,
    arity: usize,
    size: usize,
    table: Vec<Elem>,
}

impl fmt::Debug for OperationTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OperationTable")
            .field("name", &self.name)
            .field("arity", &self.arity)
            .field("table", &self.table)
            .finish()
    }
}

impl OperationTable {
    /// Validates shape and range. Idempotence is checked by [`FiniteAlgebra::new`].
    pub fn new(name: impl Into<String>, arity: usize, size: usize, table: Vec<Elem>) -> Result<Self> {
        let name = name.into();
        if arity == 0 {
            return Err(Error::BadTable {
                op: name,
                reason: "arity must be at least 1".into(),
            });
        }
        let expected = rows(size, arity).ok_or_else(|| Error::BadTable {
            op: name.clone(),
            reason: "table too large".into(),
        })?;
        if table.len() != expected {
            return Err(Error::BadTable {
                op: name,
                reason: format!("expected {} entries, found {}", expected, table.len()),
            });
        }
        if let Some(&bad) = table.iter().find(|&&v| v >= size) {
            return Err(Error::OutOfRange { elem: bad, size });
        }
        Ok(OperationTable {
            name,
            arity,
            size,
            table,
        })
    }

    /// Tabulates `f` over all argument tuples.
    pub fn from_fn(
        name: impl Into<String>,
        arity: usize,
        size: usize,
        mut f: impl FnMut(&[Elem]) -> Elem,
    ) -> Self {
        let total = rows(size, arity).expect("table too large");
        let mut table = Vec::with_capacity(total);
        let mut args = vec![0; arity];
        for code in 0..total {
            decode_into(code, size, &mut args);
            table.push(f(&args));
        }
        OperationTable {
            name: name.into(),
            arity,
            size,
            table,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
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

    /// Unchecked lookup; `n` is accepted for call sites that carry it anyway.
    #[inline]
    pub fn apply(&self, n: usize, args: &[Elem]) -> Elem {
        debug_assert_eq!(n, self.size);
        self.table[encode(n, args)]
    }
}

fn rows(size: usize, arity: usize) -> Option<usize> {
    size.checked_pow(u32::try_from(arity).ok()?)
}

#[inline]
pub(crate) fn encode(n: usize, args: &[Elem]) -> usize {
    args.iter().fold(0, |acc, &x| acc * n + x)
}

pub(crate) fn decode_into(mut code: usize, n: usize, out: &mut [Elem]) {
    for slot in out.iter_mut().rev() {
        *slot = code % n;
        code /= n;
    }
}

#[derive(Default, Clone)]
pub(crate) struct Caches {
    pub unary: OnceLock<Arc<CloneFragment>>,
    pub con: OnceLock<Arc<CongruenceLattice>>,
    pub subdirect: OnceLock<SubdirectStatus>,
    pub edges: OnceLock<Result<Arc<Vec<SemilatticeEdge>>>>,
    pub center: OnceLock<Result<bool>>,
}

/// A finite algebra `(A, F)` with `A = {0, …, size-1}`.
///
/// Equality and hashing look at the universe size and the operation tables
/// only, so two algebras built independently from the same tables compare
/// equal regardless of their ids.
#[derive(Clone)]
pub struct FiniteAlgebra {
    id: String,
    size: usize,
    ops: Vec<OperationTable>,
    pub(crate) caches: Caches,
}

impl fmt::Debug for FiniteAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FiniteAlgebra")
            .field("id", &self.id)
            .field("size", &self.size)
            .field("ops", &self.ops)
            .finish()
    }
}

impl PartialEq for FiniteAlgebra {
    fn eq(&self, other: &Self) -> bool {
        self.size == other.size && self.ops == other.ops
    }
}

impl Eq for FiniteAlgebra {}

impl Hash for FiniteAlgebra {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.size.hash(state);
        self.ops.hash(state);
    }
}

impl FiniteAlgebra {
    /// Builds an algebra and checks that every table fits the universe and
    /// that every operation is idempotent. Operation names must be distinct.
    pub fn new(id: impl Into<String>, size: usize, ops: Vec<OperationTable>) -> Result<Self> {
        let id = id.into();
        if size == 0 {
            return Err(Error::Input(format!("algebra `{id}` has an empty universe")));
        }
        for (i, op) in ops.iter().enumerate() {
            if op.size != size {
                return Err(Error::BadTable {
                    op: op.name.clone(),
                    reason: format!("built for size {}, algebra has size {}", op.size, size),
                });
            }
            if ops[..i].iter().any(|o| o.name == op.name) {
                return Err(Error::Signature(format!(
                    "operation `{}` declared twice in `{}`",
                    op.name, id
                )));
            }
            for x in 0..size {
                let diag = vec![x; op.arity];
                let value = op.apply(size, &diag);
                if value != x {
                    return Err(Error::NotIdempotent {
                        op: op.name.clone(),
                        elem: x,
                        value,
                    });
                }
            }
        }
        Ok(FiniteAlgebra {
            id,
            size,
            ops,
            caches: Caches::default(),
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn ops(&self) -> &[OperationTable] {
        &self.ops
    }

    pub fn op(&self, name: &str) -> Option<&OperationTable> {
        self.ops.iter().find(|o| o.name == name)
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    /// Same operation names with the same arities, in the same order.
    pub fn same_signature(&self, other: &FiniteAlgebra) -> bool {
        self.ops.len() == other.ops.len()
            && self
                .ops
                .iter()
                .zip(&other.ops)
                .all(|(a, b)| a.name == b.name && a.arity == b.arity)
    }

    pub fn signature(&self) -> Vec<(String, usize)> {
        self.ops.iter().map(|o| (o.name.clone(), o.arity)).collect()
    }

    /// Applies the named operation with full checking.
    pub fn eval(&self, op: &str, args: &[Elem]) -> Result<Elem> {
        let table = self.op(op).ok_or_else(|| Error::UnknownOp(op.to_string()))?;
        if args.len() != table.arity {
            return Err(Error::ArityMismatch {
                op: op.to_string(),
                expected: table.arity,
                got: args.len(),
            });
        }
        self.check_elems(args)?;
        Ok(table.apply(self.size, args))
    }

    pub(crate) fn check_elems(&self, elems: &[Elem]) -> Result<()> {
        match elems.iter().find(|&&x| x >= self.size) {
            Some(&x) => Err(Error::OutOfRange {
                elem: x,
                size: self.size,
            }),
            None => Ok(()),
        }
    }

    /// Least subuniverse containing `seed`, sorted.
    pub fn sg(&self, seed: &[Elem]) -> Result<Vec<Elem>> {
        sg(self, seed)
    }

    /// Whether `set` is closed under every basic operation.
    pub fn is_subuniverse(&self, set: &[Elem]) -> bool {
        if set.is_empty() {
            return false;
        }
        let mut member = vec![false; self.size];
        for &x in set {
            if x >= self.size {
                return false;
            }
            member[x] = true;
        }
        let k = set.len();
        for op in &self.ops {
            let m = op.arity;
            let mut idx = vec![0usize; m];
            let mut args = vec![0; m];
            'tuples: loop {
                for (a, &i) in args.iter_mut().zip(&idx) {
                    *a = set[i];
                }
                if !member[op.apply(self.size, &args)] {
                    return false;
                }
                for p in (0..m).rev() {
                    idx[p] += 1;
                    if idx[p] < k {
                        continue 'tuples;
                    }
                    idx[p] = 0;
                }
                break;
            }
        }
        true
    }

    /// The subalgebra on `subset`, relabeled `0..k` in increasing order. The
    /// second component maps new labels to old ones.
    pub fn subalgebra(&self, subset: &[Elem]) -> Result<(FiniteAlgebra, Vec<Elem>)> {
        let mut elems = subset.to_vec();
        elems.sort_unstable();
        elems.dedup();
        if elems.is_empty() {
            return Err(Error::EmptySeed);
        }
        self.check_elems(&elems)?;
        if !self.is_subuniverse(&elems) {
            return Err(Error::NotSubuniverse(format!(
                "{:?} in `{}`",
                elems, self.id
            )));
        }
        if elems.len() == self.size {
            return Ok((self.clone(), elems));
        }
        let k = elems.len();
        let mut back = vec![usize::MAX; self.size];
        for (i, &x) in elems.iter().enumerate() {
            back[x] = i;
        }
        let ops = self
            .ops
            .iter()
            .map(|op| {
                let mut old = vec![0; op.arity];
                OperationTable::from_fn(op.name.clone(), op.arity, k, |args| {
                    for (o, &a) in old.iter_mut().zip(args) {
                        *o = elems[a];
                    }
                    back[op.apply(self.size, &old)]
                })
            })
            .collect();
        let id = format!("{}{:?}", self.id, elems);
        Ok((FiniteAlgebra::new(id, k, ops)?, elems))
    }
}

/// Least subuniverse of `a` containing `seed`, returned sorted.
pub fn sg(a: &FiniteAlgebra, seed: &[Elem]) -> Result<Vec<Elem>> {
    if seed.is_empty() {
        return Err(Error::EmptySeed);
    }
    a.check_elems(seed)?;
    let closure = subpower_closure(
        &[a],
        seed.iter().map(|&x| vec![x]),
        ClosureLimits::default(),
        |_| false,
    )?;
    let mut out: Vec<Elem> = closure.elements.into_iter().map(|t| t[0]).collect();
    out.sort_unstable();
    Ok(out)
}

/// Convenience for looking up a named operation and applying it.
pub fn eval(a: &FiniteAlgebra, op: &str, args: &[Elem]) -> Result<Elem> {
    a.eval(op, args)
}
