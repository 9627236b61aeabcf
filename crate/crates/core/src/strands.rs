//! Aligned binary relations, strands, and splitting an aligned subinstance
//! into instances over congruence blocks.

use crate::algebra::{con, Congruence, Elem, FiniteAlgebra, UnionFind};
use crate::error::{Error, Result};
use crate::instance::{Instance, Var};

/// Which coordinate of a binary relation a congruence lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

fn oriented(pairs: &[(Elem, Elem)], from: Side) -> Vec<(Elem, Elem)> {
    match from {
        Side::Left => pairs.to_vec(),
        Side::Right => pairs.iter().map(|&(a, b)| (b, a)).collect(),
    }
}

fn is_subdirect(pairs: &[(Elem, Elem)], left: usize, right: usize) -> bool {
    let mut l = vec![false; left];
    let mut r = vec![false; right];
    for &(a, b) in pairs {
        if a >= left || b >= right {
            return false;
        }
        l[a] = true;
        r[b] = true;
    }
    l.iter().chain(&r).all(|&x| x)
}

/// `R` is `αγ`-aligned: for `(a,c), (b,d) ∈ R`, `a α b` iff `c γ d`.
pub fn is_aligned(pairs: &[(Elem, Elem)], alpha: &Congruence, gamma: &Congruence) -> Result<bool> {
    if !is_subdirect(pairs, alpha.size(), gamma.size()) {
        return Err(Error::Precondition(
            "alignment is only defined for subdirect relations".into(),
        ));
    }
    Ok(pairs.iter().all(|&(a, c)| {
        pairs
            .iter()
            .all(|&(b, d)| alpha.related(a, b) == gamma.related(c, d))
    }))
}

/// Equivalence on the right coordinate generated by pairs with related left ends.
fn transfer(pairs: &[(Elem, Elem)], alpha: &Congruence, far_size: usize) -> Congruence {
    let mut uf = UnionFind::new(far_size);
    let mut first: Vec<Option<Elem>> = vec![None; alpha.size()];
    for &(a, c) in pairs {
        let r = alpha.rep(a);
        match first[r] {
            Some(c0) => {
                uf.union(c0, c);
            }
            None => first[r] = Some(c),
        }
    }
    uf.into_congruence()
}

/// Carries `α` from the `from` side of `R` to the other side. Returns the
/// congruence `γ` of `far` for which `R` is aligned, if there is one.
pub fn induced_partition(
    pairs: &[(Elem, Elem)],
    alpha: &Congruence,
    from: Side,
    far: &FiniteAlgebra,
) -> Result<Option<Congruence>> {
    let forward = oriented(pairs, from);
    if !is_subdirect(&forward, alpha.size(), far.size()) {
        return Err(Error::Precondition(
            "induced partitions need a subdirect relation".into(),
        ));
    }
    let gamma = transfer(&forward, alpha, far.size());
    if !gamma.is_congruence_of(far) {
        return Ok(None);
    }
    let backward: Vec<_> = forward.iter().map(|&(a, c)| (c, a)).collect();
    if &transfer(&backward, &gamma, alpha.size()) != alpha {
        return Ok(None);
    }
    Ok(Some(gamma))
}

/// Variables whose strategy relations are pairwise aligned for `alphas`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Strand {
    pub vars: Vec<Var>,
    pub alphas: Vec<Congruence>,
    /// `classes[i][x]`: the block class of element `x` of `vars[i]`; blocks
    /// in one class correspond to each other through the strategy.
    pub classes: Vec<Vec<usize>>,
}

impl Strand {
    pub fn num_classes(&self) -> usize {
        self.alphas[0].num_blocks()
    }

    pub fn position(&self, v: Var) -> Option<usize> {
        self.vars.iter().position(|&w| w == v)
    }

    fn singleton(v: Var, size: usize) -> Strand {
        Strand {
            vars: vec![v],
            alphas: vec![Congruence::zero(size)],
            classes: vec![(0..size).collect()],
        }
    }
}

fn grow(p: &Instance, v: Var, alpha: &Congruence) -> Result<Strand> {
    let s = p
        .strategy()
        .ok_or_else(|| Error::Precondition("strands need a (2,3)-strategy".into()))?;
    let mut vars = vec![v];
    let mut alphas = vec![alpha.clone()];
    for w in 0..p.num_vars() {
        if w == v {
            continue;
        }
        if let Some(g) = induced_partition(&s.relation(v, w), alpha, Side::Left, p.algebra(w))? {
            vars.push(w);
            alphas.push(g);
        }
    }
    for i in 0..vars.len() {
        for j in i + 1..vars.len() {
            if !is_aligned(&s.relation(vars[i], vars[j]), &alphas[i], &alphas[j])? {
                return Err(Error::Contract(format!(
                    "strand grown from `{}` is not aligned on `{}`, `{}`",
                    p.name(v),
                    p.name(vars[i]),
                    p.name(vars[j])
                )));
            }
        }
    }
    let seed_blocks = alpha.block_index();
    let classes: Vec<Vec<usize>> = vars
        .iter()
        .map(|&w| {
            (0..p.domain_size(w))
                .map(|x| {
                    let a = (0..p.domain_size(v)).find(|&a| s.contains(v, w, a, x)).unwrap();
                    seed_blocks[a]
                })
                .collect()
        })
        .collect();
    let mut order: Vec<usize> = (0..vars.len()).collect();
    order.sort_by_key(|&i| vars[i]);
    Ok(Strand {
        vars: order.iter().map(|&i| vars[i]).collect(),
        alphas: order.iter().map(|&i| alphas[i].clone()).collect(),
        classes: order.iter().map(|&i| classes[i].clone()).collect(),
    })
}

/// Every strand grown from a seed `(v, α)` with `α ≠ 1`, including
/// single-variable ones, without deduplication.
pub(crate) fn grown_strands(p: &Instance, seeds: &[Var]) -> Result<Vec<Strand>> {
    let mut out = Vec::new();
    for &v in seeds {
        let lattice = con(p.algebra(v))?;
        for alpha in &lattice.congruences {
            if !alpha.is_one() {
                out.push(grow(p, v, alpha)?);
            }
        }
    }
    Ok(out)
}

/// Maximal strands with at least two variables, followed by every
/// single-variable strand.
pub fn find_strands(p: &Instance) -> Result<Vec<Strand>> {
    let all: Vec<Var> = (0..p.num_vars()).collect();
    let grown: Vec<Strand> = grown_strands(p, &all)?
        .into_iter()
        .filter(|s| s.vars.len() > 1)
        .collect();
    let mut out: Vec<Strand> = Vec::new();
    for (i, s) in grown.iter().enumerate() {
        let dominated = grown.iter().enumerate().any(|(j, t)| {
            let covers = s.vars.iter().all(|v| t.vars.contains(v));
            covers && (t.vars.len() > s.vars.len() || j < i)
        });
        if !dominated {
            out.push(s.clone());
        }
    }
    for v in 0..p.num_vars() {
        out.push(Strand::singleton(v, p.domain_size(v)));
    }
    Ok(out)
}

/// Splits `P_W` (variables in the strand's order) into one instance per
/// block class. Domains become blocks; the parts' solution sets partition
/// the solutions of `P_W`.
pub fn decompose(pw: &Instance, strand: &Strand) -> Result<Vec<Instance>> {
    if pw.num_vars() != strand.vars.len() {
        return Err(Error::Precondition(format!(
            "instance has {} variables, strand has {}",
            pw.num_vars(),
            strand.vars.len()
        )));
    }
    for c in pw.constraints() {
        for t in c.relation.tuples() {
            let first = strand.classes[c.scope[0]][t[0]];
            if t.iter()
                .zip(&c.scope)
                .any(|(&x, &v)| strand.classes[v][x] != first)
            {
                return Err(Error::Precondition(format!(
                    "tuple {t:?} on {:?} crosses block classes",
                    c.scope
                )));
            }
        }
    }
    let mut parts = Vec::new();
    for class in 0..strand.num_classes() {
        let keep: Vec<Vec<bool>> = (0..pw.num_vars())
            .map(|v| (0..pw.domain_size(v)).map(|x| strand.classes[v][x] == class).collect())
            .collect();
        parts.push(pw.shrink_domains(&keep)?.0);
    }
    Ok(parts)
}
