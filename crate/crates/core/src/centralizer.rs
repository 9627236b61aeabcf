//! Centralizers `(α:β)` through twin polynomials, and the central variables
//! of an instance.

use crate::algebra::{
    monolith, subpower_closure, ClosureLimits, ClosureStatus, Congruence, Elem, FiniteAlgebra,
};
use crate::clone::unary_polynomials;
use crate::error::{Error, Result};
use crate::instance::{Instance, Var};

/// The relation "`c` and `d` are twins for `(α, β)`": every binary
/// polynomial `p` has `p(β, c) ⊆ α` exactly when `p(β, d) ⊆ α`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwinEquivalence {
    pub algebra: String,
    pub alpha: Congruence,
    pub beta: Congruence,
    labels: Vec<Elem>,
}

impl TwinEquivalence {
    pub fn related(&self, c: Elem, d: Elem) -> bool {
        self.labels[c] == self.labels[d]
    }

    pub fn pairs(&self) -> Vec<(Elem, Elem)> {
        let n = self.labels.len();
        let mut out = Vec::new();
        for c in 0..n {
            for d in 0..n {
                if self.related(c, d) {
                    out.push((c, d));
                }
            }
        }
        out
    }

    /// The classes as a partition (not necessarily a congruence).
    pub fn as_partition(&self) -> Congruence {
        Congruence::from_labels(&self.labels)
    }
}

fn check_pair(a: &FiniteAlgebra, alpha: &Congruence, beta: &Congruence) -> Result<()> {
    for (name, c) in [("alpha", alpha), ("beta", beta)] {
        if c.size() != a.size() || !c.is_congruence_of(a) {
            return Err(Error::NotCongruence(format!("{name} = {c} in `{}`", a.id())));
        }
    }
    if !alpha.le(beta) {
        return Err(Error::Precondition(format!(
            "centralizer needs alpha <= beta, got {alpha} and {beta}"
        )));
    }
    Ok(())
}

/// Whether some binary polynomial separates `c` from `d`. Instead of listing
/// all binary polynomials, generate their restrictions to `A × {c, d}`.
fn separated(a: &FiniteAlgebra, alpha: &Congruence, beta_pairs: &[(Elem, Elem)], c: Elem, d: Elem) -> Result<bool> {
    let n = a.size();
    let coords = vec![a; 2 * n];
    let mut seeds = vec![
        (0..n).chain(0..n).collect::<Vec<_>>(),
        std::iter::repeat(c).take(n).chain(std::iter::repeat(d).take(n)).collect(),
    ];
    seeds.extend((0..n).map(|k| vec![k; 2 * n]));
    let collapses = |g: &[Elem]| beta_pairs.iter().all(|&(x, y)| alpha.related(g[x], g[y]));
    let closure = subpower_closure(&coords, seeds, ClosureLimits::default(), |v| {
        collapses(&v[..n]) != collapses(&v[n..])
    })?;
    match closure.status {
        ClosureStatus::Stopped => Ok(true),
        ClosureStatus::Complete => Ok(false),
        ClosureStatus::Capped => Err(Error::Resource(format!(
            "binary polynomials of `{}` restricted to two columns exceed the closure limit",
            a.id()
        ))),
    }
}

pub fn twin_equivalence(a: &FiniteAlgebra, alpha: &Congruence, beta: &Congruence) -> Result<TwinEquivalence> {
    check_pair(a, alpha, beta)?;
    let n = a.size();
    let beta_pairs: Vec<_> = beta.pairs().into_iter().filter(|&(x, y)| x < y).collect();
    let mut twin = vec![vec![false; n]; n];
    for c in 0..n {
        twin[c][c] = true;
        for d in c + 1..n {
            // polynomials preserve α, so with β = α nothing is ever separated
            if alpha == beta {
                twin[c][d] = true;
                twin[d][c] = true;
                continue;
            }
            let t = !separated(a, alpha, &beta_pairs, c, d)?;
            twin[c][d] = t;
            twin[d][c] = t;
        }
    }
    let labels: Vec<Elem> = (0..n).map(|c| (0..n).find(|&d| twin[c][d]).unwrap()).collect();
    // equal predicate sets make this transitive; check it anyway
    for c in 0..n {
        for d in 0..n {
            if twin[c][d] != (labels[c] == labels[d]) {
                return Err(Error::Contract(format!(
                    "twin relation of `{}` is not transitive at ({c},{d})",
                    a.id()
                )));
            }
        }
    }
    Ok(TwinEquivalence {
        algebra: a.id().to_string(),
        alpha: alpha.clone(),
        beta: beta.clone(),
        labels,
    })
}

/// `(α:β)`: the largest congruence inside the twin equivalence, i.e. the
/// pairs that every unary polynomial maps into twins.
pub fn centralizer(a: &FiniteAlgebra, alpha: &Congruence, beta: &Congruence) -> Result<Congruence> {
    let twins = twin_equivalence(a, alpha, beta)?;
    let polys = unary_polynomials(a)?;
    let n = a.size();
    let mut labels = vec![0; n];
    for c in 0..n {
        labels[c] = (0..=c)
            .find(|&d| {
                polys
                    .tables()
                    .iter()
                    .all(|h| twins.related(h.table()[c], h.table()[d]))
            })
            .unwrap();
    }
    let out = Congruence::from_labels(&labels);
    debug_assert!(out.is_congruence_of(a));
    Ok(out)
}

/// Whether `(0 : μ) = 1` for a subdirectly irreducible algebra. Cached.
pub fn monolith_is_central(a: &FiniteAlgebra) -> Result<bool> {
    a.caches
        .center
        .get_or_init(|| {
            let status = monolith(a)?;
            let mu = status.monolith().ok_or_else(|| {
                Error::Precondition(format!("`{}` is not subdirectly irreducible", a.id()))
            })?;
            Ok(centralizer(a, &Congruence::zero(a.size()), mu)?.is_one())
        })
        .clone()
}

/// Variables whose domain has `(0 : μ) = 1`. One-element domains have no
/// monolith and are never central.
pub fn center_set(p: &Instance) -> Result<Vec<Var>> {
    let mut out = Vec::new();
    for v in 0..p.num_vars() {
        let a = p.algebra(v);
        if a.size() > 1 && monolith_is_central(a)? {
            out.push(v);
        }
    }
    Ok(out)
}
