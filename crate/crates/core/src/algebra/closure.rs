//! Closure of tuple sets under the basic operations of a (multi-sorted)
//! product of algebras. Everything that generates a subuniverse of a power
//! ends up here: subalgebras, clone fragments, invariant relations.

use std::collections::HashSet;

use super::{Elem, FiniteAlgebra};
use crate::error::{Error, Result};

/// Bounds on a closure computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClosureLimits {
    /// Maximal number of distinct tuples.
    pub max_elements: usize,
    /// Maximal number of coordinatewise operation applications.
    pub max_work: u64,
}

impl Default for ClosureLimits {
    fn default() -> Self {
        ClosureLimits {
            max_elements: 100_000,
            max_work: 50_000_000,
        }
    }
}

impl ClosureLimits {
    pub fn elements(max_elements: usize) -> Self {
        ClosureLimits {
            max_elements,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClosureStatus {
    /// The fixed point was reached.
    Complete,
    /// A limit was hit before the fixed point; the element list is partial.
    Capped,
    /// The stop predicate accepted the last element of the list.
    Stopped,
}

#[derive(Debug, Clone)]
pub struct Closure {
    pub elements: Vec<Vec<Elem>>,
    pub status: ClosureStatus,
}

impl Closure {
    pub fn is_complete(&self) -> bool {
        self.status == ClosureStatus::Complete
    }
}

/// Checks that all coordinate algebras share one signature.
pub(crate) fn check_signature(coords: &[&FiniteAlgebra]) -> Result<()> {
    if let Some((first, rest)) = coords.split_first() {
        for other in rest {
            if !first.same_signature(other) {
                return Err(Error::Signature(format!(
                    "`{}` and `{}` have different signatures",
                    first.id(),
                    other.id()
                )));
            }
        }
    }
    Ok(())
}

/// Generates the subuniverse of `coords[0] × … × coords[n-1]` spanned by
/// `seeds`, applying every basic operation coordinatewise.
///
/// Elements are produced in a deterministic breadth-first order: seeds first
/// (deduplicated, in the given order), then rounds of semi-naive expansion.
/// `stop` is consulted on every new element; returning `true` ends the
/// computation with [`ClosureStatus::Stopped`].
pub fn subpower_closure<F>(
    coords: &[&FiniteAlgebra],
    seeds: impl IntoIterator<Item = Vec<Elem>>,
    limits: ClosureLimits,
    stop: F,
) -> Result<Closure>
where
    F: FnMut(&[Elem]) -> bool,
{
    closure_impl(coords, seeds, limits, stop, None)
}

/// How an element of a closure was obtained: `None` for seeds, otherwise an
/// operation index and the positions of its arguments in the element list.
pub type Derivation = Option<(usize, Vec<usize>)>;

/// Like [`subpower_closure`], additionally recording a derivation for every
/// element so that it can be replayed on other coordinates.
pub fn traced_closure<F>(
    coords: &[&FiniteAlgebra],
    seeds: impl IntoIterator<Item = Vec<Elem>>,
    limits: ClosureLimits,
    stop: F,
) -> Result<(Closure, Vec<Derivation>)>
where
    F: FnMut(&[Elem]) -> bool,
{
    let mut trace = Vec::new();
    let closure = closure_impl(coords, seeds, limits, stop, Some(&mut trace))?;
    Ok((closure, trace))
}

/// Evaluates the derivation of element `target` over a different family of
/// coordinates, given the values of the seeds there. Returns one value per
/// coordinate.
pub fn replay(
    trace: &[Derivation],
    target: usize,
    coords: &[&FiniteAlgebra],
    seed_values: &[Vec<Elem>],
) -> Vec<Elem> {
    let mut memo: Vec<Option<Vec<Elem>>> = vec![None; target + 1];
    let mut seed_pos = 0usize;
    let mut seed_of = vec![usize::MAX; target + 1];
    for (i, d) in trace.iter().enumerate().take(target + 1) {
        if d.is_none() {
            seed_of[i] = seed_pos;
            seed_pos += 1;
        }
    }
    // derivations only point backwards, so a forward pass over the needed
    // nodes suffices
    let mut needed = vec![false; target + 1];
    needed[target] = true;
    for i in (0..=target).rev() {
        if needed[i] {
            if let Some((_, args)) = &trace[i] {
                for &a in args {
                    needed[a] = true;
                }
            }
        }
    }
    for i in 0..=target {
        if !needed[i] {
            continue;
        }
        let value = match &trace[i] {
            None => seed_values[seed_of[i]].clone(),
            Some((o, args)) => coords
                .iter()
                .enumerate()
                .map(|(c, a)| {
                    let col: Vec<Elem> = args
                        .iter()
                        .map(|&j| memo[j].as_ref().unwrap()[c])
                        .collect();
                    a.ops()[*o].apply(a.size(), &col)
                })
                .collect(),
        };
        memo[i] = Some(value);
    }
    memo[target].take().unwrap()
}

fn closure_impl<F>(
    coords: &[&FiniteAlgebra],
    seeds: impl IntoIterator<Item = Vec<Elem>>,
    limits: ClosureLimits,
    mut stop: F,
    mut trace: Option<&mut Vec<Derivation>>,
) -> Result<Closure>
where
    F: FnMut(&[Elem]) -> bool,
{
    check_signature(coords)?;
    let width = coords.len();
    let mut elements: Vec<Vec<Elem>> = Vec::new();
    let mut seen: HashSet<Vec<Elem>> = HashSet::new();

    for seed in seeds {
        if seed.len() != width {
            return Err(Error::Input(format!(
                "seed tuple of length {} in a power of width {}",
                seed.len(),
                width
            )));
        }
        for (c, &x) in seed.iter().enumerate() {
            if x >= coords[c].size() {
                return Err(Error::OutOfRange {
                    elem: x,
                    size: coords[c].size(),
                });
            }
        }
        if seen.insert(seed.clone()) {
            elements.push(seed);
            if let Some(tr) = trace.as_deref_mut() {
                tr.push(None);
            }
            if stop(elements.last().unwrap()) {
                return Ok(Closure {
                    elements,
                    status: ClosureStatus::Stopped,
                });
            }
            if elements.len() > limits.max_elements {
                return Ok(Closure {
                    elements,
                    status: ClosureStatus::Capped,
                });
            }
        }
    }

    let Some(first) = coords.first() else {
        return Ok(Closure {
            elements,
            status: ClosureStatus::Complete,
        });
    };
    let n_ops = first.ops().len();
    let mut work: u64 = 0;
    let mut done = 0usize;
    let mut buf = vec![0usize; width];

    while done < elements.len() {
        let end = elements.len();
        for o in 0..n_ops {
            let arity = first.ops()[o].arity();
            let tables: Vec<(&[Elem], usize)> = coords
                .iter()
                .map(|a| (a.ops()[o].table(), a.size()))
                .collect();
            // Index tuples with at least one entry in [done, end): split on
            // the first position holding a new element.
            for pivot in 0..arity {
                if pivot > 0 && done == 0 {
                    break;
                }
                let ranges: Vec<(usize, usize)> = (0..arity)
                    .map(|p| match p.cmp(&pivot) {
                        std::cmp::Ordering::Less => (0, done),
                        std::cmp::Ordering::Equal => (done, end),
                        std::cmp::Ordering::Greater => (0, end),
                    })
                    .collect();
                if ranges.iter().any(|&(lo, hi)| lo >= hi) {
                    continue;
                }
                let mut idx: Vec<usize> = ranges.iter().map(|r| r.0).collect();
                loop {
                    for (c, slot) in buf.iter_mut().enumerate() {
                        let (table, size) = tables[c];
                        let mut pos = 0usize;
                        for &i in &idx {
                            pos = pos * size + elements[i][c];
                        }
                        *slot = table[pos];
                    }
                    work += width as u64;
                    if !seen.contains(buf.as_slice()) {
                        seen.insert(buf.clone());
                        elements.push(buf.clone());
                        if let Some(tr) = trace.as_deref_mut() {
                            tr.push(Some((o, idx.clone())));
                        }
                        if stop(&buf) {
                            return Ok(Closure {
                                elements,
                                status: ClosureStatus::Stopped,
                            });
                        }
                        if elements.len() > limits.max_elements {
                            return Ok(Closure {
                                elements,
                                status: ClosureStatus::Capped,
                            });
                        }
                    }
                    if work > limits.max_work {
                        return Ok(Closure {
                            elements,
                            status: ClosureStatus::Capped,
                        });
                    }
                    // odometer, last position fastest
                    let mut p = arity;
                    loop {
                        if p == 0 {
                            break;
                        }
                        p -= 1;
                        idx[p] += 1;
                        if idx[p] < ranges[p].1 {
                            break;
                        }
                        idx[p] = ranges[p].0;
                        if p == 0 {
                            p = usize::MAX;
                            break;
                        }
                    }
                    if p == usize::MAX {
                        break;
                    }
                }
            }
        }
        done = end;
    }

    Ok(Closure {
        elements,
        status: ClosureStatus::Complete,
    })
}

/// A direct power `A^k` whose elements are only ever created on demand by
/// closure; the full universe is never listed unless asked for explicitly.
#[derive(Debug, Clone)]
pub struct PowerAlgebra<'a> {
    base: &'a FiniteAlgebra,
    coords: usize,
    limits: ClosureLimits,
}

impl<'a> PowerAlgebra<'a> {
    pub fn new(base: &'a FiniteAlgebra, coords: usize, limits: ClosureLimits) -> Result<Self> {
        if coords == 0 {
            return Err(Error::Precondition(
                "a power needs at least one coordinate".into(),
            ));
        }
        Ok(PowerAlgebra {
            base,
            coords,
            limits,
        })
    }

    pub fn base(&self) -> &FiniteAlgebra {
        self.base
    }

    pub fn coords(&self) -> usize {
        self.coords
    }

    /// `|A|^k`, saturating.
    pub fn universe_size(&self) -> usize {
        let mut total: usize = 1;
        for _ in 0..self.coords {
            total = total.saturating_mul(self.base.size());
        }
        total
    }

    /// Least subuniverse of the power containing `seeds`.
    pub fn sg(&self, seeds: &[Vec<Elem>]) -> Result<Vec<Vec<Elem>>> {
        if seeds.is_empty() {
            return Err(Error::EmptySeed);
        }
        let coords = vec![self.base; self.coords];
        let closure = subpower_closure(&coords, seeds.iter().cloned(), self.limits, |_| false)?;
        if !closure.is_complete() {
            return Err(Error::Resource(format!(
                "closure in {}^{} exceeded {} elements",
                self.base.id(),
                self.coords,
                self.limits.max_elements
            )));
        }
        let mut out = closure.elements;
        out.sort();
        Ok(out)
    }

    /// Materializes the power as an algebra on `0..|A|^k`, tuples encoded in
    /// row-major order. Fails if the universe exceeds the element limit.
    pub fn materialize(&self) -> Result<FiniteAlgebra> {
        let n = self.base.size();
        let total = self.universe_size();
        if total > self.limits.max_elements {
            return Err(Error::Resource(format!(
                "{}^{} has {} elements, above the limit of {}",
                self.base.id(),
                self.coords,
                total,
                self.limits.max_elements
            )));
        }
        let k = self.coords;
        let decode = |mut code: usize| -> Vec<Elem> {
            let mut t = vec![0; k];
            for slot in t.iter_mut().rev() {
                *slot = code % n;
                code /= n;
            }
            t
        };
        let encode = |t: &[Elem]| t.iter().fold(0usize, |acc, &x| acc * n + x);
        let mut ops = Vec::new();
        for op in self.base.ops() {
            let m = op.arity();
            let rows = total.checked_pow(m as u32).unwrap_or(usize::MAX);
            if rows > self.limits.max_work as usize {
                return Err(Error::Resource(format!(
                    "table of `{}` on {}^{} is too large",
                    op.name(),
                    self.base.id(),
                    k
                )));
            }
            let table = super::OperationTable::from_fn(op.name(), m, total, |args| {
                let decoded: Vec<Vec<Elem>> = args.iter().map(|&a| decode(a)).collect();
                let out: Vec<Elem> = (0..k)
                    .map(|c| {
                        let col: Vec<Elem> = decoded.iter().map(|t| t[c]).collect();
                        op.apply(n, &col)
                    })
                    .collect();
                encode(&out)
            });
            ops.push(table);
        }
        FiniteAlgebra::new(format!("{}^{}", self.base.id(), k), total, ops)
    }
}
