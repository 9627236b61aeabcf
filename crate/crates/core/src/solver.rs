//! The recursive decision procedure and solution search.
//!
//! `decide` answers satisfiability and may return a solution; `search`
//! always returns one for satisfiable input, fixing values one at a time
//! when `decide` had no witness at hand.

use std::collections::HashMap;
use std::sync::Arc;

use crate::algebra::{ClosureLimits, Elem, FiniteAlgebra};
use crate::blockmin::{establish_block_minimality, measures, InstanceMeasures};
use crate::clone::{
    class_binary_term, class_multiplication, is_semilattice_free, semilattice_edges, FunctionTable,
    TermRequirement,
};
use crate::error::{Error, Result};
use crate::instance::{Assignment, Instance, Var};
use crate::lift::{Lift, Verdict};
use crate::maroti::{maroti_step, multiplication_maps, retract, ConsistentMapFamily};
use crate::propagate::{establish_1_minimality, establish_23_minimality, with_strategy_constraints};

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Recursion guard; exceeding it is reported as a resource error.
    pub max_depth: usize,
    pub trace: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_depth: 32,
            trace: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SolverStats {
    pub decide_calls: usize,
    pub memo_hits: usize,
    pub deepest: usize,
    pub reductions: usize,
    pub restarts: usize,
    /// Block-minimal instances found to have no central maximal variable.
    pub non_central: usize,
    /// Rounds of (BM) that removed tuples.
    pub block_removals: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveOutcome {
    /// A solution of the input instance, or `None` if it has none.
    pub solution: Option<Assignment>,
    pub trace: Vec<String>,
}

impl SolveOutcome {
    pub fn is_sat(&self) -> bool {
        self.solution.is_some()
    }
}

/// What the central case found for a block-minimal instance.
enum Central {
    Unsat,
    /// Elements to keep, per variable; some quotient value extends to no
    /// solution.
    Shrink(Vec<Vec<bool>>),
    Done(Verdict),
}

#[derive(Debug, Default)]
pub struct Solver {
    pub config: SolverConfig,
    pub stats: SolverStats,
    memo: HashMap<(u64, u64), Verdict>,
    trace: Vec<String>,
}

impl Solver {
    pub fn new(config: SolverConfig) -> Self {
        Solver {
            config,
            ..Default::default()
        }
    }

    /// Finds a solution or proves there is none. A returned solution is
    /// always checked against `p`.
    pub fn solve(&mut self, p: &Instance) -> Result<SolveOutcome> {
        self.trace.clear();
        let solution = self.search_at(p, 0)?;
        if let Some(w) = &solution {
            if !p.verify(w) {
                return Err(Error::Contract("solver returned an assignment that fails a constraint".into()));
            }
        }
        Ok(SolveOutcome {
            solution,
            trace: std::mem::take(&mut self.trace),
        })
    }

    pub fn decide(&mut self, p: &Instance) -> Result<Verdict> {
        self.decide_at(p, 0)
    }

    fn note(&mut self, depth: usize, msg: impl FnOnce() -> String) {
        if self.config.trace {
            self.trace.push(format!("{}{}", "  ".repeat(depth), msg()));
        }
    }

    fn decide_at(&mut self, p: &Instance, depth: usize) -> Result<Verdict> {
        if depth > self.config.max_depth {
            return Err(Error::Resource(format!(
                "recursion depth exceeded the cap of {}",
                self.config.max_depth
            )));
        }
        self.stats.decide_calls += 1;
        self.stats.deepest = self.stats.deepest.max(depth);
        if p.is_unsat() {
            return Ok(Verdict::Unsat);
        }
        let key = p.fingerprint();
        if let Some(v) = self.memo.get(&key) {
            self.stats.memo_hits += 1;
            return Ok(v.clone());
        }
        let verdict = self.decide_uncached(p, depth)?;
        if let Some(w) = verdict.witness() {
            if !p.verify(w) {
                return Err(Error::Contract(format!(
                    "witness at depth {depth} fails a constraint"
                )));
            }
        }
        self.memo.insert(key, verdict.clone());
        Ok(verdict)
    }

    fn decide_uncached(&mut self, p: &Instance, depth: usize) -> Result<Verdict> {
        let mut lift = Lift::default();
        let Some(t) = establish_1_minimality(p)? else {
            return Ok(Verdict::Unsat);
        };
        lift.relabel(t.maps);
        let mut cur = t.instance;
        let parts = components(&cur);
        if parts.len() > 1 {
            return self.decide_components(&cur, &parts, depth)?.lifted(&lift);
        }
        if all_semilattice_free(&cur)? {
            let v = match base_solve_semilattice_free(&cur)? {
                Some(w) => Verdict::Sat(Some(w)),
                None => Verdict::Unsat,
            };
            return v.lifted(&lift);
        }
        loop {
            let reduced = {
                let mut decide = |q: &Instance| self.decide_at(q, depth + 1);
                establish_block_minimality(&cur, &mut decide)?
            };
            let Some(bm) = reduced else {
                self.note(depth, || "block-minimality: no solution".into());
                return Ok(Verdict::Unsat);
            };
            if bm.removed > 0 {
                self.stats.block_removals += 1;
            }
            let q = bm.instance;
            lift.then(bm.lift);
            let m = measures(&q)?;
            if m.size == 0 {
                let v = match base_solve_semilattice_free(&q)? {
                    Some(w) => Verdict::Sat(Some(w)),
                    None => Verdict::Unsat,
                };
                return v.lifted(&lift);
            }
            if m.central_max().is_empty() {
                self.stats.non_central += 1;
                self.note(depth, || {
                    format!("non-central: size {}, {} maximal variables", m.size, m.max.len())
                });
                return Ok(Verdict::Sat(None));
            }
            match self.central_case(&q, &m, depth)? {
                Central::Unsat => return Ok(Verdict::Unsat),
                Central::Done(v) => return v.lifted(&lift),
                Central::Shrink(keep) => {
                    self.stats.restarts += 1;
                    let full = with_strategy_constraints(&q)?;
                    let (shrunk, maps) = full.shrink_domains(&keep)?;
                    lift.relabel(maps);
                    cur = shrunk;
                }
            }
        }
    }

    /// Components are independent: the instance is satisfiable iff each is.
    fn decide_components(&mut self, p: &Instance, parts: &[Vec<Var>], depth: usize) -> Result<Verdict> {
        let mut joint = vec![0; p.num_vars()];
        let mut complete = true;
        for part in parts {
            if part.len() == 1 && !p.constraints().iter().any(|c| c.scope == *part) {
                continue;
            }
            match self.decide_at(&p.restrict(part)?, depth)? {
                Verdict::Unsat => return Ok(Verdict::Unsat),
                Verdict::Sat(None) => complete = false,
                Verdict::Sat(Some(w)) => {
                    for (i, &v) in part.iter().enumerate() {
                        joint[v] = w.get(i);
                    }
                }
            }
        }
        Ok(Verdict::Sat(complete.then_some(Assignment(joint))))
    }

    fn central_case(&mut self, q: &Instance, m: &InstanceMeasures, depth: usize) -> Result<Central> {
        let full = with_strategy_constraints(q)?;
        let (star, star_maps) = full.quotient_with_maps(&m.mu_star)?;
        self.note(depth, || {
            format!(
                "central: size {}, quotienting {} of {} maximal variables",
                m.size,
                m.central_max().len(),
                m.max.len()
            )
        });

        let (witnesses, flagged) = self.global_1_minimality(&star, depth)?;
        if flagged.iter().any(|f| f.iter().all(|&x| x)) {
            return Ok(Central::Unsat);
        }
        if flagged.iter().any(|f| f.iter().any(|&x| x)) {
            self.note(depth, || "global 1-minimality removed values; starting over".into());
            let keep = (0..q.num_vars())
                .map(|v| star_maps[v].iter().map(|&b| !flagged[v][b]).collect())
                .collect();
            return Ok(Central::Shrink(keep));
        }

        let (mult_q, mult_star) = class_terms(&full, &star, m)?;
        let phis = self.edge_solutions(&star, m, &mult_star, witnesses, depth)?;
        let reduced = maroti_reduce(&full, m, &phis, &mult_q)?;
        self.stats.reductions += 1;
        self.note(depth, || {
            format!(
                "reduced domains: {:?} -> {:?}",
                (0..q.num_vars()).map(|v| q.domain_size(v)).collect::<Vec<_>>(),
                (0..q.num_vars()).map(|v| reduced.instance.domain_size(v)).collect::<Vec<_>>()
            )
        });
        let mut back = Lift::default();
        back.relabel(reduced.labels);
        let v = self.decide_at(&reduced.instance, depth + 1)?;
        Ok(Central::Done(v.lifted(&back)?))
    }

    /// Asks whether every value of every variable of `star` extends to a
    /// solution. Returns the solutions found along the way and the values
    /// that do not extend.
    pub fn global_1_minimality(
        &mut self,
        star: &Instance,
        depth: usize,
    ) -> Result<(Vec<Assignment>, Vec<Vec<bool>>)> {
        let n = star.num_vars();
        let mut covered: Vec<Vec<bool>> = (0..n).map(|v| vec![false; star.domain_size(v)]).collect();
        let mut flagged = covered.clone();
        let mut witnesses = Vec::new();
        for v in 0..n {
            for a in 0..star.domain_size(v) {
                if covered[v][a] {
                    continue;
                }
                match self.decide_at(&star.fix_value(v, a)?, depth + 1)? {
                    Verdict::Unsat => flagged[v][a] = true,
                    Verdict::Sat(Some(w)) => {
                        for (u, c) in covered.iter_mut().enumerate() {
                            c[w.get(u)] = true;
                        }
                        witnesses.push(w);
                    }
                    Verdict::Sat(None) => covered[v][a] = true,
                }
            }
        }
        Ok((witnesses, flagged))
    }

    /// For every maximal variable `v`, the first semilattice edge `(a, b)`
    /// of its quotient domain and a solution of `star` with `v ↦ b`.
    fn edge_solutions(
        &mut self,
        star: &Instance,
        m: &InstanceMeasures,
        mult_star: &[FunctionTable],
        mut known: Vec<Assignment>,
        depth: usize,
    ) -> Result<Vec<Assignment>> {
        let mut out = Vec::with_capacity(m.max.len());
        for &v in &m.max {
            let edges = semilattice_edges(star.algebra(v))?;
            let Some(edge) = edges.first() else {
                return Err(Error::Contract(format!(
                    "maximal variable `{}` has a semilattice-free quotient",
                    star.name(v)
                )));
            };
            let (a, b) = edge.pair();
            if mult_star[v].mul(a, b) != b {
                return Err(Error::Contract(format!(
                    "the class term does not absorb along edge ({a},{b}) at `{}`",
                    star.name(v)
                )));
            }
            let phi = match known.iter().find(|w| w.get(v) == b) {
                Some(w) => w.clone(),
                None => {
                    let w = self.search_at(&star.fix_value(v, b)?, depth + 1)?.ok_or_else(|| {
                        Error::Contract(format!(
                            "value {b} of `{}` passed global 1-minimality but has no solution",
                            star.name(v)
                        ))
                    })?;
                    known.push(w.clone());
                    w
                }
            };
            self.note(depth, || format!("edge ({a},{b}) at `{}`", star.name(v)));
            out.push(phi);
        }
        Ok(out)
    }

    fn search_at(&mut self, p: &Instance, depth: usize) -> Result<Option<Assignment>> {
        let parts = components(p);
        if parts.len() == 1 {
            return self.search_connected(p, depth);
        }
        let mut joint = vec![0; p.num_vars()];
        for part in &parts {
            let Some(w) = self.search_connected(&p.restrict(part)?, depth)? else {
                return Ok(None);
            };
            for (i, &v) in part.iter().enumerate() {
                joint[v] = w.get(i);
            }
        }
        Ok(Some(Assignment(joint)))
    }

    fn search_connected(&mut self, p: &Instance, depth: usize) -> Result<Option<Assignment>> {
        let mut cur = match self.decide_at(p, depth)? {
            Verdict::Unsat => return Ok(None),
            Verdict::Sat(Some(w)) => return Ok(Some(w)),
            Verdict::Sat(None) => p.clone(),
        };
        for v in 0..p.num_vars() {
            let mut next = None;
            for x in 0..p.domain_size(v) {
                let cand = cur.fix_value(v, x)?;
                match self.decide_at(&cand, depth)? {
                    Verdict::Unsat => {}
                    Verdict::Sat(Some(w)) => return Ok(Some(w)),
                    Verdict::Sat(None) => {
                        next = Some(cand);
                        break;
                    }
                }
            }
            cur = next.ok_or_else(|| {
                Error::Contract(format!("satisfiable instance has no value for `{}`", p.name(v)))
            })?;
        }
        Err(Error::Contract("every variable fixed yet no solution was produced".into()))
    }
}

/// Connected components of the constraint graph, each sorted, in order of
/// least variable.
pub fn components(p: &Instance) -> Vec<Vec<Var>> {
    let mut uf = crate::algebra::UnionFind::new(p.num_vars());
    for c in p.constraints() {
        for w in c.scope.windows(2) {
            uf.union(w[0], w[1]);
        }
    }
    let mut groups: Vec<Vec<Var>> = Vec::new();
    let mut slot = vec![usize::MAX; p.num_vars()];
    for v in 0..p.num_vars() {
        let r = uf.find(v);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(v);
    }
    groups
}

fn all_semilattice_free(p: &Instance) -> Result<bool> {
    for v in 0..p.num_vars() {
        if !is_semilattice_free(p.algebra(v))? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// One binary term for every domain of both instances, returned as tables
/// per variable. Preferably a multiplication on every domain; failing that,
/// a multiplication on the quotient domains of maximal variables, where the
/// edges driving the reduction live, that is edge-bounded elsewhere. The
/// reduction checks the properties it relies on either way.
fn class_terms(
    full: &Instance,
    star: &Instance,
    m: &InstanceMeasures,
) -> Result<(Vec<FunctionTable>, Vec<FunctionTable>)> {
    let mut members: Vec<Arc<FiniteAlgebra>> = Vec::new();
    let mut required: Vec<TermRequirement> = Vec::new();
    let mut index = |a: &Arc<FiniteAlgebra>, req: TermRequirement| {
        match members.iter().position(|b| Arc::ptr_eq(a, b) || **a == **b) {
            Some(i) => {
                required[i] = required[i].max(req);
                i
            }
            None => {
                members.push(a.clone());
                required.push(req);
                members.len() - 1
            }
        }
    };
    let qi: Vec<usize> = (0..full.num_vars())
        .map(|v| index(full.algebra(v), TermRequirement::EdgeBounded))
        .collect();
    let si: Vec<usize> = (0..star.num_vars())
        .map(|v| {
            let req = if m.in_max(v) {
                TermRequirement::Multiplication
            } else {
                TermRequirement::EdgeBounded
            };
            index(star.algebra(v), req)
        })
        .collect();
    let refs: Vec<&FiniteAlgebra> = members.iter().map(|a| a.as_ref()).collect();
    let tables = match class_multiplication(&refs, ClosureLimits::default()) {
        Err(Error::Contract(_)) => class_binary_term(&refs, &required, ClosureLimits::default())?,
        other => other?,
    };
    Ok((
        qi.iter().map(|&i| tables[i].clone()).collect(),
        si.iter().map(|&i| tables[i].clone()).collect(),
    ))
}

/// `P†` with the way back to `P`.
#[derive(Debug, Clone)]
pub struct Reduction {
    pub instance: Instance,
    pub family: ConsistentMapFamily,
    /// Per variable, the element of the old domain behind each new element.
    pub labels: Vec<Vec<Elem>>,
}

/// Composes the multiplication maps of all edge solutions, raises the
/// family to an idempotent power and retracts onto its image. Maximal
/// domains must shrink and semilattice-free domains must stay put.
pub fn maroti_reduce(
    full: &Instance,
    m: &InstanceMeasures,
    phis: &[Assignment],
    mult: &[FunctionTable],
) -> Result<Reduction> {
    let mut family = ConsistentMapFamily::identity(full);
    for phi in phis {
        let step = multiplication_maps(full, &m.mu_star, phi, mult)?;
        let product = maroti_step(full, &m.mu_star, phi, mult)?;
        for (c, d) in full.constraints().iter().zip(product.constraints()) {
            let mut image: Vec<Vec<Elem>> = c
                .relation
                .tuples()
                .iter()
                .map(|t| t.iter().zip(&c.scope).map(|(&x, &v)| step.maps[v][x]).collect())
                .collect();
            image.sort();
            image.dedup();
            if image != d.relation.tuples() {
                return Err(Error::Contract(
                    "multiplying by the witness tuple differs from multiplying by block representatives".into(),
                ));
            }
        }
        family = family.then(&step);
    }
    let family = family.idempotent_power();
    if let Some((ci, t)) = family.violation(full) {
        return Err(Error::Contract(format!(
            "idempotent power sends tuple {t:?} of constraint {ci} outside the relation"
        )));
    }
    let (instance, labels) = retract(full, &family)?;
    for &v in &m.max {
        if instance.domain_size(v) >= full.domain_size(v) {
            return Err(Error::Contract(format!(
                "reduction left the maximal domain of `{}` at size {}",
                full.name(v),
                full.domain_size(v)
            )));
        }
    }
    for v in 0..full.num_vars() {
        if is_semilattice_free(full.algebra(v))? && family.maps[v].iter().enumerate().any(|(x, &y)| x != y) {
            return Err(Error::Contract(format!(
                "reduction moved the semilattice-free domain of `{}`",
                full.name(v)
            )));
        }
    }
    Ok(Reduction {
        instance,
        family,
        labels,
    })
}

/// Backtracking with (2,3)-propagation at every node. Stands in for an
/// algorithm specific to semilattice-free domains; correct on any input.
pub fn base_solve_semilattice_free(p: &Instance) -> Result<Option<Assignment>> {
    let Some(t) = establish_23_minimality(p)? else {
        return Ok(None);
    };
    let q = &t.instance;
    let branch: Option<Var> = (0..q.num_vars())
        .filter(|&v| q.domain_size(v) > 1)
        .min_by_key(|&v| q.domain_size(v));
    let local = match branch {
        None => Some(Assignment(vec![0; q.num_vars()])),
        Some(v) => {
            let mut found = None;
            for x in 0..q.domain_size(v) {
                if let Some(w) = base_solve_semilattice_free(&q.fix_value(v, x)?)? {
                    found = Some(w);
                    break;
                }
            }
            found
        }
    };
    Ok(local.map(|w| Assignment(w.0.iter().enumerate().map(|(v, &x)| t.maps[v][x]).collect())))
}

/// Solves `p` with a fresh solver and default settings.
pub fn solve(p: &Instance) -> Result<SolveOutcome> {
    Solver::new(SolverConfig::default()).solve(p)
}
