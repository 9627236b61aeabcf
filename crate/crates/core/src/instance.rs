//! CSP instances over finite idempotent algebras.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, Mutex, OnceLock};

use crate::algebra::{quotient, Congruence, Elem, FiniteAlgebra};
use crate::error::{Error, Result};
use crate::propagate::Strategy;

pub type Var = usize;

/// Returns the shared copy of an algebra with the same tables, so that
/// cached analyses are computed once per distinct algebra.
pub fn intern(a: FiniteAlgebra) -> Arc<FiniteAlgebra> {
    static POOL: OnceLock<Mutex<HashSet<Arc<FiniteAlgebra>>>> = OnceLock::new();
    let pool = POOL.get_or_init(Default::default);
    let mut pool = pool.lock().unwrap_or_else(|e| e.into_inner());
    if let Some(found) = pool.get(&a) {
        return found.clone();
    }
    let shared = Arc::new(a);
    pool.insert(shared.clone());
    shared
}

/// One step in the history of a domain.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Provenance {
    /// An algebra as loaded.
    Base(String),
    /// Restriction to a subuniverse; entry `i` is the previous label of new element `i`.
    Subset(Vec<Elem>),
    /// Quotient; entry `x` is the block of previous element `x`.
    Quotient(Vec<Elem>),
    /// Image of an idempotent map; entry `i` is the previous label of new element `i`.
    Retract(Vec<Elem>),
    /// Factor `index` of a subdirect decomposition of the named variable.
    Factor { variable: String, index: usize },
}

#[derive(Debug, Clone)]
pub struct DomainDescriptor {
    pub algebra: Arc<FiniteAlgebra>,
    pub provenance: Vec<Provenance>,
}

impl DomainDescriptor {
    pub fn base(algebra: Arc<FiniteAlgebra>) -> Self {
        let id = algebra.id().to_string();
        DomainDescriptor {
            algebra,
            provenance: vec![Provenance::Base(id)],
        }
    }

    pub fn derive(&self, algebra: Arc<FiniteAlgebra>, step: Provenance) -> Self {
        let mut provenance = self.provenance.clone();
        provenance.push(step);
        DomainDescriptor {
            algebra,
            provenance,
        }
    }

    pub fn size(&self) -> usize {
        self.algebra.size()
    }

    /// Follows subset and retract steps back to the most recent quotient or
    /// base: the label of `x` there, if the chain is injective all the way.
    pub fn origin_of(&self, mut x: Elem) -> Option<Elem> {
        for step in self.provenance.iter().rev() {
            match step {
                Provenance::Subset(map) | Provenance::Retract(map) => x = map[x],
                Provenance::Base(_) => return Some(x),
                _ => return None,
            }
        }
        Some(x)
    }
}

/// A set of tuples, kept sorted and free of duplicates.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Relation {
    arity: usize,
    tuples: Vec<Vec<Elem>>,
}

impl Relation {
    pub fn new(arity: usize, mut tuples: Vec<Vec<Elem>>) -> Self {
        debug_assert!(tuples.iter().all(|t| t.len() == arity));
        tuples.sort_unstable();
        tuples.dedup();
        Relation { arity, tuples }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn tuples(&self) -> &[Vec<Elem>] {
        &self.tuples
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn contains(&self, t: &[Elem]) -> bool {
        self.tuples
            .binary_search_by(|probe| probe.as_slice().cmp(t))
            .is_ok()
    }

    /// Projection onto the given coordinate positions (in that order).
    pub fn project(&self, positions: &[usize]) -> Relation {
        Relation::new(
            positions.len(),
            self.tuples
                .iter()
                .map(|t| positions.iter().map(|&p| t[p]).collect())
                .collect(),
        )
    }

    /// Values occurring at position `p`, sorted.
    pub fn column(&self, p: usize) -> Vec<Elem> {
        let set: BTreeSet<Elem> = self.tuples.iter().map(|t| t[p]).collect();
        set.into_iter().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Constraint {
    pub scope: Vec<Var>,
    pub relation: Relation,
}

impl Constraint {
    pub fn new(scope: Vec<Var>, tuples: Vec<Vec<Elem>>) -> Self {
        let arity = scope.len();
        Constraint {
            scope,
            relation: Relation::new(arity, tuples),
        }
    }

    pub fn arity(&self) -> usize {
        self.scope.len()
    }

    /// Removes repeated scope variables, keeping tuples that agree on the
    /// repeated positions.
    fn diagonalize(self) -> Constraint {
        let mut first: Vec<usize> = Vec::new();
        let mut keep: Vec<usize> = Vec::new();
        let mut same_as: Vec<(usize, usize)> = Vec::new();
        for (p, &v) in self.scope.iter().enumerate() {
            match self.scope[..p].iter().position(|&u| u == v) {
                Some(q) => same_as.push((p, q)),
                None => {
                    keep.push(p);
                    first.push(v);
                }
            }
        }
        if same_as.is_empty() {
            return self;
        }
        let tuples = self
            .relation
            .tuples
            .into_iter()
            .filter(|t| same_as.iter().all(|&(p, q)| t[p] == t[q]))
            .map(|t| keep.iter().map(|&p| t[p]).collect())
            .collect();
        Constraint::new(first, tuples)
    }
}

/// A map from variables to elements of their current domains.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment(pub Vec<Elem>);

impl Assignment {
    pub fn get(&self, v: Var) -> Elem {
        self.0[v]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// An offending combination found by [`check_invariance`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvarianceViolation {
    pub op: String,
    pub arguments: Vec<Vec<Elem>>,
    pub image: Vec<Elem>,
}

impl fmt::Display for InvarianceViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "`{}` maps {:?} to {:?}, which is not in the relation",
            self.op, self.arguments, self.image
        )
    }
}

/// Exhaustively checks that every basic operation, applied coordinatewise
/// with coordinate `i` interpreted in `algebras[i]`, maps tuples of the
/// relation into the relation.
pub fn check_invariance(
    relation: &Relation,
    algebras: &[&FiniteAlgebra],
) -> std::result::Result<(), InvarianceViolation> {
    let Some(first) = algebras.first() else {
        return Ok(());
    };
    let tuples = relation.tuples();
    let k = tuples.len();
    if k == 0 {
        return Ok(());
    }
    for (o, op) in first.ops().iter().enumerate() {
        let m = op.arity();
        let mut idx = vec![0usize; m];
        let mut col = vec![0; m];
        loop {
            let image: Vec<Elem> = (0..relation.arity())
                .map(|c| {
                    for (slot, &i) in col.iter_mut().zip(&idx) {
                        *slot = tuples[i][c];
                    }
                    let a = algebras[c];
                    a.ops()[o].apply(a.size(), &col)
                })
                .collect();
            if !relation.contains(&image) {
                return Err(InvarianceViolation {
                    op: op.name().to_string(),
                    arguments: idx.iter().map(|&i| tuples[i].clone()).collect(),
                    image,
                });
            }
            let mut p = m;
            loop {
                if p == 0 {
                    break;
                }
                p -= 1;
                idx[p] += 1;
                if idx[p] < k {
                    break;
                }
                idx[p] = 0;
                if p == 0 {
                    p = usize::MAX;
                    break;
                }
            }
            if p == usize::MAX || m == 0 {
                break;
            }
        }
    }
    Ok(())
}

/// A CSP instance: variables with domains, and constraints. A (2,3)-strategy
/// is attached once (2,3)-minimality has been established.
#[derive(Debug, Clone)]
pub struct Instance {
    names: Vec<String>,
    domains: Vec<DomainDescriptor>,
    constraints: Vec<Constraint>,
    strategy: Option<Arc<Strategy>>,
}

impl Instance {
    /// Builds an instance from external data, with full validation: names
    /// are distinct, all domains share one signature, scopes and tuples are
    /// in range, and every relation is invariant. Repeated scope variables
    /// are removed by diagonalization.
    pub fn new(
        names: Vec<String>,
        domains: Vec<DomainDescriptor>,
        constraints: Vec<Constraint>,
    ) -> Result<Self> {
        let inst = Self::validated(names, domains, constraints)?;
        for (i, c) in inst.constraints.iter().enumerate() {
            let algebras: Vec<&FiniteAlgebra> =
                c.scope.iter().map(|&v| inst.domains[v].algebra.as_ref()).collect();
            if let Err(v) = check_invariance(&c.relation, &algebras) {
                return Err(Error::NotInvariant(format!("constraint {i}: {v}")));
            }
        }
        Ok(inst)
    }

    /// Same as [`Instance::new`] without the invariance check.
    pub fn validated(
        names: Vec<String>,
        domains: Vec<DomainDescriptor>,
        constraints: Vec<Constraint>,
    ) -> Result<Self> {
        if names.len() != domains.len() {
            return Err(Error::Input(format!(
                "{} variable names for {} domains",
                names.len(),
                domains.len()
            )));
        }
        let mut seen = HashSet::new();
        for n in &names {
            if !seen.insert(n) {
                return Err(Error::Input(format!("variable `{n}` declared twice")));
            }
        }
        if let Some((d0, rest)) = domains.split_first() {
            for d in rest {
                if !d0.algebra.same_signature(&d.algebra) {
                    return Err(Error::Signature(format!(
                        "domains `{}` and `{}` have different signatures",
                        d0.algebra.id(),
                        d.algebra.id()
                    )));
                }
            }
        }
        let mut out = Vec::with_capacity(constraints.len());
        for (i, c) in constraints.into_iter().enumerate() {
            if c.relation.arity() != c.scope.len() {
                return Err(Error::Input(format!(
                    "constraint {i}: scope of length {} with relation of arity {}",
                    c.scope.len(),
                    c.relation.arity()
                )));
            }
            for &v in &c.scope {
                if v >= domains.len() {
                    return Err(Error::Input(format!("constraint {i}: unknown variable {v}")));
                }
            }
            for t in c.relation.tuples() {
                for (&x, &v) in t.iter().zip(&c.scope) {
                    if x >= domains[v].size() {
                        return Err(Error::Input(format!(
                            "constraint {i}: value {x} outside the domain of `{}`",
                            names[v]
                        )));
                    }
                }
            }
            out.push(c.diagonalize());
        }
        Ok(Instance {
            names,
            domains,
            constraints: out,
            strategy: None,
        })
    }

    pub(crate) fn from_parts(
        names: Vec<String>,
        domains: Vec<DomainDescriptor>,
        constraints: Vec<Constraint>,
    ) -> Self {
        debug_assert_eq!(names.len(), domains.len());
        Instance {
            names,
            domains,
            constraints,
            strategy: None,
        }
    }

    /// Every variable gets the whole algebra as its domain.
    pub fn over_algebra(
        a: FiniteAlgebra,
        names: Vec<String>,
        constraints: Vec<Constraint>,
    ) -> Result<Self> {
        let shared = intern(a);
        let domains = names
            .iter()
            .map(|_| DomainDescriptor::base(shared.clone()))
            .collect();
        Self::new(names, domains, constraints)
    }

    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, v: Var) -> &str {
        &self.names[v]
    }

    pub fn var_by_name(&self, name: &str) -> Option<Var> {
        self.names.iter().position(|n| n == name)
    }

    pub fn domains(&self) -> &[DomainDescriptor] {
        &self.domains
    }

    pub fn domain(&self, v: Var) -> &DomainDescriptor {
        &self.domains[v]
    }

    pub fn algebra(&self, v: Var) -> &Arc<FiniteAlgebra> {
        &self.domains[v].algebra
    }

    pub fn domain_size(&self, v: Var) -> usize {
        self.domains[v].size()
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn strategy(&self) -> Option<&Strategy> {
        self.strategy.as_deref()
    }

    pub(crate) fn set_strategy(&mut self, s: Strategy) {
        self.strategy = Some(Arc::new(s));
    }

    pub fn without_strategy(mut self) -> Self {
        self.strategy = None;
        self
    }

    /// Some constraint has no tuples.
    pub fn is_unsat(&self) -> bool {
        self.constraints.iter().any(|c| c.relation.is_empty())
    }

    /// Every constraint contains the image of the assignment.
    pub fn verify(&self, phi: &Assignment) -> bool {
        if phi.len() != self.num_vars() {
            return false;
        }
        if (0..self.num_vars()).any(|v| phi.get(v) >= self.domain_size(v)) {
            return false;
        }
        self.constraints.iter().all(|c| {
            let image: Vec<Elem> = c.scope.iter().map(|&v| phi.get(v)).collect();
            c.relation.contains(&image)
        })
    }

    /// Adds the constraint `((v), {a})`.
    pub fn fix_value(&self, v: Var, a: Elem) -> Result<Instance> {
        if v >= self.num_vars() {
            return Err(Error::Input(format!("unknown variable {v}")));
        }
        if a >= self.domain_size(v) {
            return Err(Error::OutOfRange {
                elem: a,
                size: self.domain_size(v),
            });
        }
        let mut out = self.clone().without_strategy();
        out.constraints.push(Constraint::new(vec![v], vec![vec![a]]));
        Ok(out)
    }

    /// Adds several unary constant constraints at once.
    pub fn fix_values(&self, fixes: &[(Var, Elem)]) -> Result<Instance> {
        let mut out = self.clone().without_strategy();
        for &(v, a) in fixes {
            if v >= self.num_vars() || a >= self.domain_size(v) {
                return Err(Error::Input(format!("cannot fix variable {v} to {a}")));
            }
            out.constraints.push(Constraint::new(vec![v], vec![vec![a]]));
        }
        Ok(out)
    }

    /// The instance on the variables `w` (in the given order): scopes are
    /// intersected with `w` and relations projected. Constraints whose scope
    /// misses `w` entirely are dropped.
    pub fn restrict(&self, w: &[Var]) -> Result<Instance> {
        let mut new_index = vec![usize::MAX; self.num_vars()];
        for (i, &v) in w.iter().enumerate() {
            if v >= self.num_vars() {
                return Err(Error::Input(format!("unknown variable {v}")));
            }
            if new_index[v] != usize::MAX {
                return Err(Error::Input(format!("variable {v} listed twice")));
            }
            new_index[v] = i;
        }
        let constraints = self
            .constraints
            .iter()
            .filter_map(|c| {
                let positions: Vec<usize> = (0..c.arity())
                    .filter(|&p| new_index[c.scope[p]] != usize::MAX)
                    .collect();
                if positions.is_empty() {
                    return None;
                }
                Some(Constraint {
                    scope: positions.iter().map(|&p| new_index[c.scope[p]]).collect(),
                    relation: c.relation.project(&positions),
                })
            })
            .collect();
        Ok(Instance::from_parts(
            w.iter().map(|&v| self.names[v].clone()).collect(),
            w.iter().map(|&v| self.domains[v].clone()).collect(),
            constraints,
        ))
    }

    /// `P/ᾱ`: every domain is replaced by its quotient and every tuple by its
    /// image in the quotients.
    pub fn quotient(&self, alphas: &[Congruence]) -> Result<Instance> {
        Ok(self.quotient_with_maps(alphas)?.0)
    }

    /// [`Instance::quotient`], also returning for every variable the block
    /// of each old element.
    pub fn quotient_with_maps(&self, alphas: &[Congruence]) -> Result<(Instance, Vec<Vec<Elem>>)> {
        if alphas.len() != self.num_vars() {
            return Err(Error::Input(format!(
                "{} congruences for {} variables",
                alphas.len(),
                self.num_vars()
            )));
        }
        let mut domains = Vec::with_capacity(self.num_vars());
        let mut maps = Vec::with_capacity(self.num_vars());
        for (v, alpha) in alphas.iter().enumerate() {
            let d = &self.domains[v];
            if alpha.size() != d.size() {
                return Err(Error::Input(format!(
                    "congruence on {} elements for the domain of `{}`",
                    alpha.size(),
                    self.names[v]
                )));
            }
            if alpha.is_zero() {
                domains.push(d.clone());
                maps.push((0..d.size()).collect::<Vec<_>>());
                continue;
            }
            let (q, map) = quotient(&d.algebra, alpha)?;
            domains.push(d.derive(intern(q), Provenance::Quotient(map.clone())));
            maps.push(map);
        }
        let constraints = self
            .constraints
            .iter()
            .map(|c| {
                let tuples = c
                    .relation
                    .tuples()
                    .iter()
                    .map(|t| t.iter().zip(&c.scope).map(|(&x, &v)| maps[v][x]).collect())
                    .collect();
                Constraint::new(c.scope.clone(), tuples)
            })
            .collect();
        Ok((Instance::from_parts(self.names.clone(), domains, constraints), maps))
    }

    /// Keeps only the elements marked in `keep` (which must form
    /// subuniverses), relabeling each shrunk domain to `0..k`. Returns the
    /// new instance and, per variable, the old label of every new element.
    pub(crate) fn shrink_domains(&self, keep: &[Vec<bool>]) -> Result<(Instance, Vec<Vec<Elem>>)> {
        let mut domains = Vec::with_capacity(self.num_vars());
        let mut maps = Vec::with_capacity(self.num_vars());
        let mut back: Vec<Vec<usize>> = Vec::with_capacity(self.num_vars());
        for (v, d) in self.domains.iter().enumerate() {
            let elems: Vec<Elem> = (0..d.size()).filter(|&x| keep[v][x]).collect();
            if elems.is_empty() {
                return Err(Error::Contract(format!(
                    "domain of `{}` would become empty",
                    self.names[v]
                )));
            }
            let mut inverse = vec![usize::MAX; d.size()];
            for (i, &x) in elems.iter().enumerate() {
                inverse[x] = i;
            }
            if elems.len() == d.size() {
                domains.push(d.clone());
            } else {
                let (sub, map) = d.algebra.subalgebra(&elems).map_err(|e| {
                    Error::Contract(format!("tightened domain of `{}`: {e}", self.names[v]))
                })?;
                domains.push(d.derive(intern(sub), Provenance::Subset(map)));
            }
            maps.push(elems);
            back.push(inverse);
        }
        let constraints = self
            .constraints
            .iter()
            .map(|c| {
                let tuples = c
                    .relation
                    .tuples()
                    .iter()
                    .filter(|t| t.iter().zip(&c.scope).all(|(&x, &v)| keep[v][x]))
                    .map(|t| t.iter().zip(&c.scope).map(|(&x, &v)| back[v][x]).collect())
                    .collect();
                Constraint {
                    scope: c.scope.clone(),
                    relation: Relation {
                        arity: c.arity(),
                        tuples,
                    },
                }
            })
            .collect();
        Ok((
            Instance::from_parts(self.names.clone(), domains, constraints),
            maps,
        ))
    }

    /// Replaces the constraint list.
    pub(crate) fn with_constraints(&self, constraints: Vec<Constraint>) -> Instance {
        Instance::from_parts(self.names.clone(), self.domains.clone(), constraints)
    }

    /// Content hash of the domains and constraints (names and provenance
    /// are ignored). Two independent 64-bit hashes.
    pub fn fingerprint(&self) -> (u64, u64) {
        let mut h1 = DefaultHasher::new();
        let mut h2 = DefaultHasher::new();
        0x5eed_u64.hash(&mut h2);
        for h in [&mut h1, &mut h2] {
            self.num_vars().hash(h);
            for d in &self.domains {
                d.algebra.hash(h);
            }
            let mut cs: Vec<&Constraint> = self.constraints.iter().collect();
            cs.sort_by(|a, b| a.scope.cmp(&b.scope).then(a.relation.cmp(&b.relation)));
            cs.dedup();
            for c in cs {
                c.hash(h);
            }
        }
        (h1.finish(), h2.finish())
    }

    /// `name=value` lines sorted by variable name.
    pub fn format_assignment(&self, phi: &Assignment) -> String {
        let mut lines: Vec<(String, Elem)> = self
            .names
            .iter()
            .enumerate()
            .map(|(v, n)| (n.clone(), phi.get(v)))
            .collect();
        lines.sort();
        let mut out = String::new();
        for (n, x) in lines {
            out.push_str(&format!("{n}={x}\n"));
        }
        out
    }
}

/// Membership test of the assignment in every constraint.
pub fn verify_assignment(p: &Instance, phi: &Assignment) -> bool {
    p.verify(phi)
}

pub fn restrict(p: &Instance, w: &[Var]) -> Result<Instance> {
    p.restrict(w)
}

pub fn quotient_instance(p: &Instance, alphas: &[Congruence]) -> Result<Instance> {
    p.quotient(alphas)
}

pub fn fix_value(p: &Instance, v: Var, a: Elem) -> Result<Instance> {
    p.fix_value(v, a)
}
