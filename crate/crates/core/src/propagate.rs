//! Local propagation: 1-minimality (arc consistency) and (2,3)-minimality
//! with an explicit strategy of binary relations for every pair of variables.

use crate::algebra::Elem;
use crate::error::{Error, Result};
use crate::instance::{Constraint, Instance, Var};

/// Domains are limited to 64 elements so that rows fit in one word.
pub const MAX_DOMAIN: usize = 64;

/// Binary relations `R^{uv}` for all ordered pairs `u ≠ v`, stored as bit rows:
/// bit `b` of `row(u, v, a)` is set iff `(a, b) ∈ R^{uv}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Strategy {
    n: usize,
    sizes: Vec<usize>,
    rows: Vec<Vec<u64>>,
}

impl Strategy {
    pub fn num_vars(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn row(&self, u: Var, v: Var, a: Elem) -> u64 {
        self.rows[u * self.n + v][a]
    }

    #[inline]
    pub fn contains(&self, u: Var, v: Var, a: Elem, b: Elem) -> bool {
        u == v && a == b || u != v && self.row(u, v, a) >> b & 1 == 1
    }

    /// `R^{uv}` as sorted pairs.
    pub fn relation(&self, u: Var, v: Var) -> Vec<(Elem, Elem)> {
        if u == v {
            return (0..self.sizes[u]).map(|a| (a, a)).collect();
        }
        let mut out = Vec::new();
        for a in 0..self.sizes[u] {
            for b in bits(self.row(u, v, a)) {
                out.push((a, b));
            }
        }
        out
    }

    /// Whether a partial tuple on `scope` has all its pairs in the strategy.
    pub fn compatible(&self, scope: &[Var], t: &[Elem]) -> bool {
        (0..scope.len()).all(|i| {
            (i + 1..scope.len()).all(|j| self.contains(scope[i], scope[j], t[i], t[j]))
        })
    }

    /// The full product on the given pair.
    pub fn is_full(&self, u: Var, v: Var) -> bool {
        let full = mask(self.sizes[v]);
        (0..self.sizes[u]).all(|a| self.row(u, v, a) == full)
    }
}

pub(crate) fn bits(mut m: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if m == 0 {
            None
        } else {
            let b = m.trailing_zeros() as usize;
            m &= m - 1;
            Some(b)
        }
    })
}

#[inline]
pub(crate) fn mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// A successfully propagated instance, with per-variable relabeling maps
/// (new element → element of the input domain).
#[derive(Debug, Clone)]
pub struct Tightened {
    pub instance: Instance,
    pub maps: Vec<Vec<Elem>>,
}

impl Tightened {
    /// Whether any domain shrank or any tuple disappeared.
    pub fn changed_from(&self, before: &Instance) -> bool {
        (0..before.num_vars()).any(|v| self.maps[v].len() != before.domain_size(v))
            || self
                .instance
                .constraints()
                .iter()
                .zip(before.constraints())
                .any(|(a, b)| a.relation.len() != b.relation.len())
    }
}

fn check_sizes(p: &Instance) -> Result<()> {
    for v in 0..p.num_vars() {
        if p.domain_size(v) > MAX_DOMAIN {
            return Err(Error::Resource(format!(
                "domain of `{}` has {} elements; at most {} are supported",
                p.name(v),
                p.domain_size(v),
                MAX_DOMAIN
            )));
        }
    }
    Ok(())
}

fn keep_from(doms: &[u64], p: &Instance) -> Vec<Vec<bool>> {
    doms.iter()
        .enumerate()
        .map(|(v, &m)| (0..p.domain_size(v)).map(|x| m >> x & 1 == 1).collect())
        .collect()
}

/// Arc consistency to a fixed point: every domain becomes the intersection
/// of the unary projections of the constraints on it, and every constraint
/// projects onto exactly the domain. `None` means a domain or a relation
/// became empty.
pub fn establish_1_minimality(p: &Instance) -> Result<Option<Tightened>> {
    check_sizes(p)?;
    if p.is_unsat() {
        return Ok(None);
    }
    let mut doms: Vec<u64> = (0..p.num_vars()).map(|v| mask(p.domain_size(v))).collect();
    let mut tuples: Vec<Vec<Vec<Elem>>> = p
        .constraints()
        .iter()
        .map(|c| c.relation.tuples().to_vec())
        .collect();
    loop {
        let mut changed = false;
        for (c, ts) in p.constraints().iter().zip(tuples.iter_mut()) {
            ts.retain(|t| t.iter().zip(&c.scope).all(|(&x, &v)| doms[v] >> x & 1 == 1));
            if ts.is_empty() {
                return Ok(None);
            }
            for (i, &v) in c.scope.iter().enumerate() {
                let proj = ts.iter().fold(0u64, |m, t| m | 1 << t[i]);
                if doms[v] & proj != doms[v] {
                    doms[v] &= proj;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let pruned = p.with_constraints(
        p.constraints()
            .iter()
            .zip(tuples)
            .map(|(c, ts)| crate::instance::Constraint::new(c.scope.clone(), ts))
            .collect(),
    );
    let (instance, maps) = pruned.shrink_domains(&keep_from(&doms, p))?;
    Ok(Some(Tightened { instance, maps }))
}

struct State {
    n: usize,
    sizes: Vec<usize>,
    doms: Vec<u64>,
    rows: Vec<Vec<u64>>,
}

impl State {
    fn new(p: &Instance) -> Self {
        let n = p.num_vars();
        let sizes: Vec<usize> = (0..n).map(|v| p.domain_size(v)).collect();
        let doms = sizes.iter().map(|&s| mask(s)).collect();
        let mut rows = vec![Vec::new(); n * n];
        for u in 0..n {
            for v in 0..n {
                if u != v {
                    rows[u * n + v] = vec![mask(sizes[v]); sizes[u]];
                }
            }
        }
        State {
            n,
            sizes,
            doms,
            rows,
        }
    }

    fn remove_pair(&mut self, u: Var, v: Var, a: Elem, b: Elem) {
        let n = self.n;
        self.rows[u * n + v][a] &= !(1 << b);
        self.rows[v * n + u][b] &= !(1 << a);
    }

    /// Intersects `R^{uv}` with the given pairs; returns whether anything changed.
    fn restrict_pair(&mut self, u: Var, v: Var, allowed: &[u64]) -> bool {
        let mut changed = false;
        for a in 0..self.sizes[u] {
            let old = self.rows[u * self.n + v][a];
            let new = old & allowed[a];
            if new != old {
                for b in bits(old & !new) {
                    self.remove_pair(u, v, a, b);
                }
                changed = true;
            }
        }
        changed
    }

    fn restrict_dom(&mut self, u: Var, allowed: u64) -> bool {
        let old = self.doms[u];
        let new = old & allowed;
        if new == old {
            return false;
        }
        self.doms[u] = new;
        for a in bits(old & !new) {
            for v in 0..self.n {
                if v != u {
                    for b in bits(self.rows[u * self.n + v][a]) {
                        self.remove_pair(u, v, a, b);
                    }
                }
            }
        }
        true
    }

    /// Removes pairs without a witness at some third variable; also syncs
    /// domains with the supports in the strategy.
    fn path_consistency(&mut self, order: &[Var]) -> bool {
        let n = self.n;
        let mut any = false;
        loop {
            let mut changed = false;
            for &u in order {
                if n > 1 {
                    let mut support = u64::MAX;
                    for v in 0..n {
                        if v != u {
                            let rows = &self.rows[u * n + v];
                            let s = (0..self.sizes[u])
                                .filter(|&a| rows[a] != 0)
                                .fold(0u64, |m, a| m | 1 << a);
                            support &= s;
                        }
                    }
                    changed |= self.restrict_dom(u, support);
                }
                for &v in order {
                    if v == u {
                        continue;
                    }
                    for a in bits(self.doms[u]) {
                        for b in bits(self.rows[u * n + v][a]) {
                            let ok = (0..n).all(|w| {
                                w == u
                                    || w == v
                                    || self.rows[u * n + w][a] & self.rows[v * n + w][b] != 0
                            });
                            if !ok {
                                self.remove_pair(u, v, a, b);
                                changed = true;
                            }
                        }
                    }
                }
            }
            if !changed {
                return any;
            }
            any = true;
        }
    }

    fn empty(&self) -> bool {
        self.doms.iter().any(|&d| d == 0)
            || (0..self.n).any(|u| {
                (0..self.n).any(|v| u != v && self.rows[u * self.n + v].iter().all(|&r| r == 0))
            })
    }
}

/// Establishes (2,3)-minimality: a strategy `R^{uv}` for every pair, pruned
/// until every pair has a witness at every third variable, every constraint
/// tuple is compatible with the strategy, and the strategy and domains are
/// contained in the projections of the constraints. `None` means UNSAT.
pub fn establish_23_minimality(p: &Instance) -> Result<Option<Tightened>> {
    let order: Vec<Var> = (0..p.num_vars()).collect();
    establish_23_with_order(p, &order)
}

pub(crate) fn establish_23_with_order(p: &Instance, order: &[Var]) -> Result<Option<Tightened>> {
    let Some(first) = establish_1_minimality(p)? else {
        return Ok(None);
    };
    let p1 = &first.instance;
    let mut st = State::new(p1);
    let n = st.n;
    let mut tuples: Vec<Vec<Vec<Elem>>> = p1
        .constraints()
        .iter()
        .map(|c| c.relation.tuples().to_vec())
        .collect();
    loop {
        let mut changed = false;
        // project constraints into the strategy and domains
        for (c, ts) in p1.constraints().iter().zip(&tuples) {
            let k = c.scope.len();
            for i in 0..k {
                let u = c.scope[i];
                let proj = ts.iter().fold(0u64, |m, t| m | 1 << t[i]);
                changed |= st.restrict_dom(u, proj);
                for j in 0..k {
                    if i == j {
                        continue;
                    }
                    let v = c.scope[j];
                    let mut allowed = vec![0u64; st.sizes[u]];
                    for t in ts {
                        allowed[t[i]] |= 1 << t[j];
                    }
                    changed |= st.restrict_pair(u, v, &allowed);
                }
            }
        }
        changed |= st.path_consistency(order);
        if st.empty() {
            return Ok(None);
        }
        // drop tuples that are not strategy-compatible
        for (c, ts) in p1.constraints().iter().zip(tuples.iter_mut()) {
            let before = ts.len();
            ts.retain(|t| {
                let k = t.len();
                (0..k).all(|i| {
                    st.doms[c.scope[i]] >> t[i] & 1 == 1
                        && (i + 1..k).all(|j| {
                            st.rows[c.scope[i] * n + c.scope[j]][t[i]] >> t[j] & 1 == 1
                        })
                })
            });
            if ts.is_empty() {
                return Ok(None);
            }
            changed |= ts.len() != before;
        }
        if !changed {
            break;
        }
    }
    let pruned = p1.with_constraints(
        p1.constraints()
            .iter()
            .zip(tuples)
            .map(|(c, ts)| crate::instance::Constraint::new(c.scope.clone(), ts))
            .collect(),
    );
    let (mut instance, maps2) = pruned.shrink_domains(&keep_from(&st.doms, p1))?;
    // strategy in the new labels
    let sizes: Vec<usize> = maps2.iter().map(|m| m.len()).collect();
    let mut rows = vec![Vec::new(); n * n];
    for u in 0..n {
        for v in 0..n {
            if u == v {
                continue;
            }
            rows[u * n + v] = maps2[u]
                .iter()
                .map(|&old_a| {
                    let r = st.rows[u * n + v][old_a];
                    maps2[v]
                        .iter()
                        .enumerate()
                        .filter(|(_, &old_b)| r >> old_b & 1 == 1)
                        .fold(0u64, |m, (b, _)| m | 1 << b)
                })
                .collect();
        }
    }
    instance.set_strategy(Strategy { n, sizes, rows });
    let maps = maps2
        .iter()
        .enumerate()
        .map(|(v, m)| m.iter().map(|&x| first.maps[v][x]).collect())
        .collect();
    Ok(Some(Tightened { instance, maps }))
}

/// The constraints of `p` followed by one binary constraint `((u, v), R^{uv})`
/// for every pair `u < v` of the strategy, so that quotients and other
/// transformations see the strategy as ordinary constraints.
pub fn with_strategy_constraints(p: &Instance) -> Result<Instance> {
    let s = p
        .strategy()
        .ok_or_else(|| Error::Precondition("instance has no strategy".into()))?;
    let mut constraints = p.constraints().to_vec();
    for u in 0..p.num_vars() {
        for v in u + 1..p.num_vars() {
            let tuples = s.relation(u, v).into_iter().map(|(a, b)| vec![a, b]).collect();
            constraints.push(Constraint::new(vec![u, v], tuples));
        }
    }
    Ok(p.with_constraints(constraints))
}
