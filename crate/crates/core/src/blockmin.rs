//! Size, `MAX`, `Center` and `μ*` bookkeeping, and block-minimality.

use std::collections::HashMap;

use crate::algebra::{monolith, Congruence, Elem, SubdirectStatus};
use crate::centralizer::{centralizer, monolith_is_central};
use crate::clone::is_semilattice_free;
use crate::error::{Error, Result};
use crate::instance::{Constraint, Instance, Var};
use crate::irreducible::split_subdirectly_irreducible;
use crate::lift::{Lift, Verdict};
use crate::propagate::{establish_23_minimality, with_strategy_constraints};
use crate::strands::grown_strands;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceMeasures {
    /// Largest domain that is not semilattice free, 0 if there is none.
    pub size: usize,
    pub max: Vec<Var>,
    pub center: Vec<Var>,
    /// Per variable, the congruence playing the monolith; `None` on
    /// one-element domains.
    pub monoliths: Vec<Option<Congruence>>,
    /// The monolith on `MAX ∩ Center`, equality elsewhere.
    pub mu_star: Vec<Congruence>,
}

impl InstanceMeasures {
    pub fn in_max(&self, v: Var) -> bool {
        self.max.binary_search(&v).is_ok()
    }

    pub fn central_max(&self) -> Vec<Var> {
        self.max
            .iter()
            .copied()
            .filter(|v| self.center.binary_search(v).is_ok())
            .collect()
    }

    /// `μ^Y`: the monolith on `Y`, equality elsewhere.
    pub fn mu_y(&self, p: &Instance, y: &[Var]) -> Result<Vec<Congruence>> {
        (0..p.num_vars())
            .map(|v| match (&self.monoliths[v], y.contains(&v)) {
                (_, false) => Ok(Congruence::zero(p.domain_size(v))),
                (Some(mu), true) => Ok(mu.clone()),
                (None, true) => Err(Error::Precondition(format!(
                    "`{}` has no monolith",
                    p.name(v)
                ))),
            })
            .collect()
    }
}

/// The size measure alone; needs no irreducibility.
pub fn size_of(p: &Instance) -> Result<usize> {
    let mut size = 0;
    for v in 0..p.num_vars() {
        let a = p.algebra(v);
        if a.size() > size && !is_semilattice_free(a)? {
            size = a.size();
        }
    }
    Ok(size)
}

pub fn monolith_of(p: &Instance, v: Var) -> Result<Congruence> {
    monolith(p.algebra(v))?.monolith().cloned().ok_or_else(|| {
        Error::Precondition(format!(
            "domain of `{}` is not subdirectly irreducible",
            p.name(v)
        ))
    })
}

/// Measures of an instance whose nontrivial domains are all subdirectly
/// irreducible.
pub fn measures(p: &Instance) -> Result<InstanceMeasures> {
    let monoliths = (0..p.num_vars())
        .map(|v| {
            if p.domain_size(v) > 1 {
                monolith_of(p, v).map(Some)
            } else {
                Ok(None)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    measures_with_monoliths(p, monoliths)
}

/// Measures with the monolith of every domain given by the caller, for
/// working with a congruence that is minimal on the part that matters even
/// though the domain is not subdirectly irreducible.
pub fn measures_with_monoliths(
    p: &Instance,
    monoliths: Vec<Option<Congruence>>,
) -> Result<InstanceMeasures> {
    if monoliths.len() != p.num_vars() {
        return Err(Error::Precondition(format!(
            "{} monoliths for {} variables",
            monoliths.len(),
            p.num_vars()
        )));
    }
    let size = size_of(p)?;
    let mut max = Vec::new();
    let mut center = Vec::new();
    for v in 0..p.num_vars() {
        let a = p.algebra(v);
        if size > 0 && a.size() == size && !is_semilattice_free(a)? {
            max.push(v);
        }
        let Some(mu) = &monoliths[v] else { continue };
        if !mu.is_congruence_of(a) || mu.is_zero() {
            return Err(Error::Precondition(format!(
                "{mu} is not a nontrivial congruence of the domain of `{}`",
                p.name(v)
            )));
        }
        let central = match monolith(a)?.monolith() {
            Some(own) if own == mu => monolith_is_central(a)?,
            _ => centralizer(a, &Congruence::zero(a.size()), mu)?.is_one(),
        };
        if central {
            center.push(v);
        }
    }
    let mut mu_star: Vec<Congruence> = (0..p.num_vars())
        .map(|v| Congruence::zero(p.domain_size(v)))
        .collect();
    for &v in &max {
        if center.binary_search(&v).is_ok() {
            mu_star[v] = monoliths[v].clone().expect("central variables have a monolith");
        }
    }
    Ok(InstanceMeasures {
        size,
        max,
        center,
        monoliths,
        mu_star,
    })
}

/// `P_{/U} = P/μ^Y` with `Y = MAX − U`, the strategy included as constraints.
pub fn subproblem(p: &Instance, m: &InstanceMeasures, u: &[Var]) -> Result<Instance> {
    let y: Vec<Var> = m.max.iter().copied().filter(|v| !u.contains(v)).collect();
    with_strategy_constraints(p)?.quotient(&m.mu_y(p, &y)?)
}

/// A strand cut down to its `MAX` variables, which is all that `P_{/U}`
/// depends on.
#[derive(Debug, Clone)]
struct StrandKey {
    vars: Vec<Var>,
    classes: Vec<Vec<usize>>,
    num_classes: usize,
}

/// Strands seeded at `MAX` variables, restricted to the `MAX` variables
/// whose congruence is not full, keeping only maximal variable sets.
/// Checking those suffices: a smaller `U` quotients more domains, and a
/// homomorphic image of a minimal instance is minimal.
fn strand_keys(p: &Instance, m: &InstanceMeasures) -> Result<Vec<StrandKey>> {
    let mut keys: Vec<StrandKey> = Vec::new();
    for s in grown_strands(p, &m.max)? {
        let mut vars = Vec::new();
        let mut classes = Vec::new();
        for (i, &v) in s.vars.iter().enumerate() {
            if m.in_max(v) && !s.alphas[i].is_one() {
                vars.push(v);
                classes.push(s.classes[i].clone());
            }
        }
        keys.push(StrandKey {
            vars,
            classes,
            num_classes: s.num_classes(),
        });
    }
    let mut out: Vec<StrandKey> = Vec::new();
    for (i, k) in keys.iter().enumerate() {
        let dominated = keys.iter().enumerate().any(|(j, other)| {
            let covered = k.vars.iter().all(|v| other.vars.contains(v));
            covered && (other.vars.len() > k.vars.len() || j < i)
        });
        if !dominated {
            out.push(k.clone());
        }
    }
    Ok(out)
}

/// Outcome of one round of block-minimality checks.
#[derive(Debug, Clone)]
pub struct BlockCheck {
    /// `P` with the strategy as constraints and non-extendable tuples removed.
    pub tightened: Instance,
    pub removed: usize,
}

struct Part {
    instance: Instance,
    /// For variables of the strand, quotient label → part label.
    inverse: Vec<Vec<Option<Elem>>>,
    witnesses: Vec<Vec<Elem>>,
}

/// Checks (BM) for `p` once. `p` must be (2,3)-minimal with irreducible
/// domains. Every tuple whose image fails to extend in some `P_{/U}` is
/// removed; `decide` answers the strictly smaller part instances.
pub fn check_block_minimality(
    p: &Instance,
    m: &InstanceMeasures,
    decide: &mut dyn FnMut(&Instance) -> Result<Verdict>,
) -> Result<BlockCheck> {
    let full = with_strategy_constraints(p)?;
    let mut remove: Vec<Vec<bool>> = full
        .constraints()
        .iter()
        .map(|c| vec![false; c.relation.len()])
        .collect();
    if m.max.is_empty() {
        return Ok(BlockCheck {
            tightened: full,
            removed: 0,
        });
    }
    for key in strand_keys(p, m)? {
        let y: Vec<Var> = m.max.iter().copied().filter(|v| !key.vars.contains(v)).collect();
        let (q, maps) = full.quotient_with_maps(&m.mu_y(p, &y)?)?;
        let mut parts = Vec::with_capacity(key.num_classes);
        for class in 0..key.num_classes {
            let keep: Vec<Vec<bool>> = (0..q.num_vars())
                .map(|v| match key.vars.iter().position(|&w| w == v) {
                    Some(i) => key.classes[i].iter().map(|&c| c == class).collect(),
                    None => vec![true; q.domain_size(v)],
                })
                .collect();
            let (inst, new_to_old) = q.shrink_domains(&keep)?;
            if size_of(&inst)? >= m.size {
                return Err(Error::Contract(format!(
                    "block part {class} for strand {:?} is not smaller than the instance",
                    key.vars
                )));
            }
            let inverse = new_to_old
                .iter()
                .enumerate()
                .map(|(v, map)| {
                    let mut inv = vec![None; q.domain_size(v)];
                    for (i, &x) in map.iter().enumerate() {
                        inv[x] = Some(i);
                    }
                    inv
                })
                .collect();
            parts.push(Part {
                instance: inst,
                inverse,
                witnesses: Vec::new(),
            });
        }
        let mut memo: HashMap<(usize, usize, Vec<Elem>), bool> = HashMap::new();
        for (ci, c) in full.constraints().iter().enumerate() {
            for (ti, t) in c.relation.tuples().iter().enumerate() {
                if remove[ci][ti] {
                    continue;
                }
                let image: Vec<Elem> = t.iter().zip(&c.scope).map(|(&x, &v)| maps[v][x]).collect();
                let mut classes: Option<usize> = None;
                let mut crossing = false;
                for (&x, &v) in t.iter().zip(&c.scope) {
                    if let Some(i) = key.vars.iter().position(|&w| w == v) {
                        let cl = key.classes[i][x];
                        if classes.is_some_and(|c0| c0 != cl) {
                            crossing = true;
                        }
                        classes = Some(cl);
                    }
                }
                if crossing {
                    remove[ci][ti] = true;
                    continue;
                }
                let candidates: Vec<usize> = match classes {
                    Some(cl) => vec![cl],
                    None => (0..parts.len()).collect(),
                };
                let mut ok = false;
                for cl in candidates {
                    let part = &mut parts[cl];
                    let local: Vec<Elem> = image
                        .iter()
                        .zip(&c.scope)
                        .map(|(&x, &v)| part.inverse[v][x].expect("tuple lies in its class"))
                        .collect();
                    if part
                        .witnesses
                        .iter()
                        .any(|w| c.scope.iter().zip(&local).all(|(&v, &x)| w[v] == x))
                    {
                        ok = true;
                        break;
                    }
                    let memo_key = (cl, ci, image.clone());
                    match memo.get(&memo_key) {
                        Some(true) => {
                            ok = true;
                            break;
                        }
                        Some(false) => continue,
                        None => {}
                    }
                    let fixes: Vec<(Var, Elem)> =
                        c.scope.iter().copied().zip(local.iter().copied()).collect();
                    let verdict = decide(&part.instance.fix_values(&fixes)?)?;
                    let sat = verdict.is_sat();
                    if let Verdict::Sat(Some(w)) = verdict {
                        part.witnesses.push(w.0);
                    }
                    memo.insert(memo_key, sat);
                    if sat {
                        ok = true;
                        break;
                    }
                }
                if !ok {
                    remove[ci][ti] = true;
                }
            }
        }
    }
    let original = p.constraints().len();
    let mut removed = 0;
    let mut constraints = Vec::new();
    for (ci, (c, r)) in full.constraints().iter().zip(&remove).enumerate() {
        let gone = r.iter().filter(|&&x| x).count();
        removed += gone;
        if ci >= original && gone == 0 {
            continue;
        }
        let tuples = c
            .relation
            .tuples()
            .iter()
            .zip(r)
            .filter(|(_, &gone)| !gone)
            .map(|(t, _)| t.clone())
            .collect();
        constraints.push(Constraint::new(c.scope.clone(), tuples));
    }
    Ok(BlockCheck {
        tightened: p.with_constraints(constraints),
        removed,
    })
}

fn has_reducible_domain(p: &Instance) -> Result<bool> {
    for v in 0..p.num_vars() {
        if monolith(p.algebra(v))? == SubdirectStatus::Reducible {
            return Ok(true);
        }
    }
    Ok(false)
}

pub struct BlockMinimal {
    pub instance: Instance,
    /// Back to the input instance.
    pub lift: Lift,
    /// Tuples removed by (BM) checks over all rounds.
    pub removed: usize,
}

/// Splits reducible domains, establishes (2,3)-minimality and checks (BM),
/// repeating until nothing is removed. `None` when `p` has no solution.
pub fn establish_block_minimality(
    p: &Instance,
    decide: &mut dyn FnMut(&Instance) -> Result<Verdict>,
) -> Result<Option<BlockMinimal>> {
    let mut cur = p.clone();
    let mut lift = Lift::default();
    let mut removed = 0;
    loop {
        let (split, back) = split_subdirectly_irreducible(&cur)?;
        lift.split(back);
        let Some(t) = establish_23_minimality(&split)? else {
            return Ok(None);
        };
        lift.relabel(t.maps);
        let q = t.instance;
        if has_reducible_domain(&q)? {
            // shrinking can make a domain reducible again
            cur = with_strategy_constraints(&q)?;
            continue;
        }
        let m = measures(&q)?;
        let check = check_block_minimality(&q, &m, decide)?;
        if check.removed == 0 {
            return Ok(Some(BlockMinimal {
                instance: q,
                lift,
                removed,
            }));
        }
        removed += check.removed;
        if check.tightened.is_unsat() {
            return Ok(None);
        }
        cur = check.tightened;
    }
}
