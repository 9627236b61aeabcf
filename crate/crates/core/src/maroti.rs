//! Multiplying instances by quotient solutions, consistent families of
//! unary maps, and retraction onto their images.

use crate::algebra::{Congruence, Elem, FiniteAlgebra, OperationTable};
use crate::clone::FunctionTable;
use crate::error::{Error, Result};
use crate::instance::{intern, Assignment, Constraint, Instance, Provenance};

/// One unary map per variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConsistentMapFamily {
    pub maps: Vec<Vec<Elem>>,
    pub idempotent: bool,
    /// The power this family was raised to, 1 for a plain family.
    pub k: usize,
}

impl ConsistentMapFamily {
    pub fn identity(p: &Instance) -> Self {
        ConsistentMapFamily {
            maps: (0..p.num_vars()).map(|v| (0..p.domain_size(v)).collect()).collect(),
            idempotent: true,
            k: 1,
        }
    }

    /// The first tuple of some constraint whose image leaves the relation.
    pub fn violation(&self, p: &Instance) -> Option<(usize, Vec<Elem>)> {
        for (ci, c) in p.constraints().iter().enumerate() {
            for t in c.relation.tuples() {
                let image: Vec<Elem> = t.iter().zip(&c.scope).map(|(&x, &v)| self.maps[v][x]).collect();
                if !c.relation.contains(&image) {
                    return Some((ci, t.clone()));
                }
            }
        }
        None
    }

    pub fn is_consistent(&self, p: &Instance) -> bool {
        self.violation(p).is_none()
    }

    /// `later ∘ self`.
    pub fn then(&self, later: &ConsistentMapFamily) -> ConsistentMapFamily {
        let maps: Vec<Vec<Elem>> = self
            .maps
            .iter()
            .zip(&later.maps)
            .map(|(f, g)| f.iter().map(|&x| g[x]).collect())
            .collect();
        let idempotent = maps.iter().all(|f| is_idempotent(f));
        ConsistentMapFamily {
            maps,
            idempotent,
            k: 1,
        }
    }

    /// `p^k` for the least `k` that makes every map idempotent at once: a
    /// multiple of every cycle length that is at least every tail length.
    pub fn idempotent_power(&self) -> ConsistentMapFamily {
        let mut period = 1usize;
        let mut tail = 0usize;
        for f in &self.maps {
            let (t, l) = tail_and_period(f);
            tail = tail.max(t);
            period = lcm(period, l);
        }
        let k = period * tail.div_ceil(period).max(1);
        let maps: Vec<Vec<Elem>> = self
            .maps
            .iter()
            .map(|f| (0..f.len()).map(|x| (0..k).fold(x, |y, _| f[y])).collect())
            .collect();
        debug_assert!(maps.iter().all(|f| is_idempotent(f)));
        ConsistentMapFamily {
            maps,
            idempotent: true,
            k,
        }
    }
}

fn is_idempotent(f: &[Elem]) -> bool {
    (0..f.len()).all(|x| f[f[x]] == f[x])
}

/// Longest path into a cycle, and the lcm of the cycle lengths.
fn tail_and_period(f: &[Elem]) -> (usize, usize) {
    let mut tail = 0;
    let mut period = 1;
    for start in 0..f.len() {
        let mut seen = vec![usize::MAX; f.len()];
        let mut x = start;
        let mut step = 0;
        while seen[x] == usize::MAX {
            seen[x] = step;
            x = f[x];
            step += 1;
        }
        tail = tail.max(seen[x]);
        period = lcm(period, step - seen[x]);
    }
    (tail, period)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

/// `P·φ`: every constraint relation `R` becomes `{ā·b̄ : ā ∈ R}` for a tuple
/// `b̄ ∈ R` whose image in the quotient by `μ*` is `φ` on the scope. The
/// first such `b̄` is used; when there is another, the result is recomputed
/// with the last one and the two must agree.
pub fn maroti_step(
    p: &Instance,
    mu_star: &[Congruence],
    phi: &Assignment,
    mult: &[FunctionTable],
) -> Result<Instance> {
    let maps: Vec<Vec<Elem>> = mu_star.iter().map(|c| c.block_index()).collect();
    let mut constraints = Vec::with_capacity(p.constraints().len());
    for (ci, c) in p.constraints().iter().enumerate() {
        let target: Vec<Elem> = c.scope.iter().map(|&v| phi.get(v)).collect();
        let witnesses: Vec<&Vec<Elem>> = c
            .relation
            .tuples()
            .iter()
            .filter(|t| t.iter().zip(&c.scope).map(|(&x, &v)| maps[v][x]).eq(target.iter().copied()))
            .collect();
        let (Some(first), Some(last)) = (witnesses.first(), witnesses.last()) else {
            return Err(Error::Precondition(format!(
                "assignment is not a solution of the quotient: constraint {ci} has no tuple above it"
            )));
        };
        let product = |b: &[Elem]| -> Vec<Vec<Elem>> {
            let mut out: Vec<Vec<Elem>> = c
                .relation
                .tuples()
                .iter()
                .map(|a| {
                    a.iter()
                        .zip(b)
                        .zip(&c.scope)
                        .map(|((&x, &y), &v)| mult[v].mul(x, y))
                        .collect()
                })
                .collect();
            out.sort();
            out.dedup();
            out
        };
        let tuples = product(first);
        if witnesses.len() > 1 && product(last) != tuples {
            return Err(Error::Contract(format!(
                "product of constraint {ci} depends on the choice of witness tuple"
            )));
        }
        constraints.push(Constraint::new(c.scope.clone(), tuples));
    }
    Ok(p.with_constraints(constraints))
}

/// The maps `x ↦ x·c_v` where `c_v` is the least element of the block
/// `φ(v)` of `μ*_v`.
pub fn multiplication_maps(
    p: &Instance,
    mu_star: &[Congruence],
    phi: &Assignment,
    mult: &[FunctionTable],
) -> Result<ConsistentMapFamily> {
    let maps: Vec<Vec<Elem>> = (0..p.num_vars())
        .map(|v| {
            let index = mu_star[v].block_index();
            let c = (0..p.domain_size(v)).find(|&x| index[x] == phi.get(v)).ok_or_else(|| {
                Error::Precondition(format!("value {} is not a block of `{}`", phi.get(v), p.name(v)))
            })?;
            Ok((0..p.domain_size(v)).map(|x| mult[v].mul(x, c)).collect())
        })
        .collect::<Result<_>>()?;
    let idempotent = maps.iter().all(|f| is_idempotent(f));
    let family = ConsistentMapFamily {
        maps,
        idempotent,
        k: 1,
    };
    if let Some((ci, t)) = family.violation(p) {
        return Err(Error::Contract(format!(
            "multiplication maps send tuple {t:?} of constraint {ci} outside the relation"
        )));
    }
    Ok(family)
}

/// The algebra on the image of an idempotent map `g` with operations `g∘f`.
fn retract_algebra(a: &FiniteAlgebra, g: &[Elem]) -> Result<(FiniteAlgebra, Vec<Elem>)> {
    let mut image: Vec<Elem> = g.to_vec();
    image.sort_unstable();
    image.dedup();
    if image.len() == a.size() {
        return Ok((a.clone(), image));
    }
    let mut back = vec![usize::MAX; a.size()];
    for (i, &x) in image.iter().enumerate() {
        back[x] = i;
    }
    let k = image.len();
    let ops = a
        .ops()
        .iter()
        .map(|op| {
            let mut args = vec![0; op.arity()];
            OperationTable::from_fn(op.name(), op.arity(), k, |xs| {
                for (o, &x) in args.iter_mut().zip(xs) {
                    *o = image[x];
                }
                back[g[op.apply(a.size(), &args)]]
            })
        })
        .collect();
    let id = format!("{}>{:?}", a.id(), image);
    Ok((FiniteAlgebra::new(id, k, ops)?, image))
}

/// Restricts `p` to the images of an idempotent consistent family. Every
/// domain becomes the retract algebra on the image and every relation its
/// image. Returns the instance and, per variable, the old label of every
/// new element.
pub fn retract(p: &Instance, family: &ConsistentMapFamily) -> Result<(Instance, Vec<Vec<Elem>>)> {
    if !family.maps.iter().all(|f| is_idempotent(f)) {
        return Err(Error::Precondition("retraction needs idempotent maps".into()));
    }
    let mut domains = Vec::with_capacity(p.num_vars());
    let mut labels = Vec::with_capacity(p.num_vars());
    let mut back = Vec::with_capacity(p.num_vars());
    for v in 0..p.num_vars() {
        let d = p.domain(v);
        let (alg, image) = retract_algebra(&d.algebra, &family.maps[v])?;
        if image.len() == d.size() {
            domains.push(d.clone());
        } else {
            domains.push(d.derive(intern(alg), Provenance::Retract(image.clone())));
        }
        let mut inv = vec![usize::MAX; d.size()];
        for (i, &x) in image.iter().enumerate() {
            inv[x] = i;
        }
        back.push(inv);
        labels.push(image);
    }
    let constraints = p
        .constraints()
        .iter()
        .map(|c| {
            let tuples = c
                .relation
                .tuples()
                .iter()
                .map(|t| {
                    t.iter()
                        .zip(&c.scope)
                        .map(|(&x, &v)| back[v][family.maps[v][x]])
                        .collect()
                })
                .collect();
            Constraint::new(c.scope.clone(), tuples)
        })
        .collect();
    let out = Instance::validated(p.names().to_vec(), domains, constraints)?;
    Ok((out, labels))
}
