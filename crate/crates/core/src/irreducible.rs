//! Replacing domains that are not subdirectly irreducible by their
//! subdirectly irreducible factors.

use crate::algebra::{con, monolith, quotient, Congruence, Elem, SubdirectStatus};
use crate::error::{Error, Result};
use crate::instance::{intern, Assignment, Constraint, Instance, Provenance, Var};

#[derive(Debug, Clone)]
enum Slot {
    Kept(Var),
    /// New variables holding the factors, and for each factor the block of
    /// every element of the old domain.
    Split { factors: Vec<(Var, Vec<Elem>)>, size: usize },
}

/// Recovers assignments of the original instance from the split one.
#[derive(Debug, Clone)]
pub struct SplitLift {
    slots: Vec<Slot>,
}

impl SplitLift {
    pub fn is_identity(&self) -> bool {
        self.slots
            .iter()
            .enumerate()
            .all(|(v, s)| matches!(s, Slot::Kept(w) if *w == v))
    }

    pub fn lift(&self, phi: &Assignment) -> Result<Assignment> {
        let mut out = Vec::with_capacity(self.slots.len());
        for slot in &self.slots {
            match slot {
                Slot::Kept(w) => out.push(phi.get(*w)),
                Slot::Split { factors, size } => {
                    let x = (0..*size)
                        .find(|&x| factors.iter().all(|(w, blocks)| blocks[x] == phi.get(*w)))
                        .ok_or_else(|| {
                            Error::Contract("factor values do not meet in a single element".into())
                        })?;
                    out.push(x);
                }
            }
        }
        Ok(Assignment(out))
    }
}

/// Splits every variable whose domain is subdirectly reducible into one
/// variable per meet-irreducible congruence, joined by a diagonal
/// constraint. One-element domains are left alone.
pub fn split_subdirectly_irreducible(p: &Instance) -> Result<(Instance, SplitLift)> {
    let mut names = Vec::new();
    let mut domains = Vec::new();
    let mut slots = Vec::with_capacity(p.num_vars());
    let mut diagonals = Vec::new();
    for v in 0..p.num_vars() {
        let a = p.algebra(v);
        if monolith(a)? != SubdirectStatus::Reducible {
            slots.push(Slot::Kept(names.len()));
            names.push(p.name(v).to_string());
            domains.push(p.domain(v).clone());
            continue;
        }
        let etas = con(a)?.meet_irreducibles();
        let meet = etas
            .iter()
            .fold(Congruence::one(a.size()), |acc, e| acc.meet(e));
        if !meet.is_zero() {
            return Err(Error::Contract(format!(
                "meet-irreducible congruences of `{}` do not meet in 0",
                a.id()
            )));
        }
        let mut factors = Vec::with_capacity(etas.len());
        for (i, eta) in etas.iter().enumerate() {
            let (q, map) = quotient(a, eta)?;
            let w = names.len();
            names.push(format!("{}/{}", p.name(v), i));
            domains.push(p.domain(v).derive(
                intern(q),
                Provenance::Factor {
                    variable: p.name(v).to_string(),
                    index: i,
                },
            ));
            factors.push((w, map));
        }
        diagonals.push(Constraint::new(
            factors.iter().map(|(w, _)| *w).collect(),
            (0..a.size())
                .map(|x| factors.iter().map(|(_, m)| m[x]).collect())
                .collect(),
        ));
        slots.push(Slot::Split {
            factors,
            size: a.size(),
        });
    }
    let lift = SplitLift { slots };
    if lift.is_identity() {
        return Ok((p.clone(), lift));
    }
    let mut constraints: Vec<Constraint> = p
        .constraints()
        .iter()
        .map(|c| {
            let scope = c
                .scope
                .iter()
                .flat_map(|&v| match &lift.slots[v] {
                    Slot::Kept(w) => vec![*w],
                    Slot::Split { factors, .. } => factors.iter().map(|(w, _)| *w).collect(),
                })
                .collect();
            let tuples = c
                .relation
                .tuples()
                .iter()
                .map(|t| {
                    t.iter()
                        .zip(&c.scope)
                        .flat_map(|(&x, &v)| match &lift.slots[v] {
                            Slot::Kept(_) => vec![x],
                            Slot::Split { factors, .. } => factors.iter().map(|(_, m)| m[x]).collect(),
                        })
                        .collect()
                })
                .collect();
            Constraint::new(scope, tuples)
        })
        .collect();
    constraints.extend(diagonals);
    Ok((Instance::from_parts(names, domains, constraints), lift))
}
