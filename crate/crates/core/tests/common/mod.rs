//! Brute-force oracles shared by the integration tests. Everything here
//! works straight from the operation tables, independently of the library's
//! closure engine, and is only meant for algebras of at most three elements.

#![allow(dead_code)]

use dicsp_core::algebra::{Congruence, Elem, FiniteAlgebra, OperationTable};
use dicsp_core::fixtures;
use dicsp_core::harness::generate::{case_rng, random_idempotent_algebra};
use dicsp_core::instance::{Assignment, Instance};
use rand::Rng;

pub fn apply(op: &OperationTable, args: &[Elem]) -> Elem {
    let code = args.iter().fold(0, |acc, &x| acc * op.size() + x);
    op.table()[code]
}

/// All tuples of `arity` elements of `0..n`, last coordinate fastest.
pub fn tuples(n: usize, arity: usize) -> Vec<Vec<Elem>> {
    let mut out = vec![vec![]];
    for _ in 0..arity {
        out = out
            .into_iter()
            .flat_map(|t| {
                (0..n).map(move |x| {
                    let mut t = t.clone();
                    t.push(x);
                    t
                })
            })
            .collect();
    }
    out
}

/// Every partition of `0..n`, via restricted growth strings.
pub fn partitions(n: usize) -> Vec<Congruence> {
    fn rec(n: usize, labels: &mut Vec<usize>, out: &mut Vec<Congruence>) {
        if labels.len() == n {
            out.push(Congruence::from_labels(labels));
            return;
        }
        let next = labels.iter().max().map_or(0, |m| m + 1);
        for l in 0..=next {
            labels.push(l);
            rec(n, labels, out);
            labels.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, &mut Vec::new(), &mut out);
    out
}

pub fn preserves(a: &FiniteAlgebra, p: &Congruence) -> bool {
    a.ops().iter().all(|op| {
        let all = tuples(a.size(), op.arity());
        all.iter().all(|s| {
            all.iter().all(|t| {
                !s.iter().zip(t).all(|(&x, &y)| p.related(x, y))
                    || p.related(apply(op, s), apply(op, t))
            })
        })
    })
}

pub fn brute_congruences(a: &FiniteAlgebra) -> Vec<Congruence> {
    partitions(a.size()).into_iter().filter(|p| preserves(a, p)).collect()
}

pub fn brute_sg(a: &FiniteAlgebra, seed: &[Elem]) -> Vec<Elem> {
    let mut member = vec![false; a.size()];
    for &x in seed {
        member[x] = true;
    }
    loop {
        let cur: Vec<Elem> = (0..a.size()).filter(|&x| member[x]).collect();
        let mut grew = false;
        for op in a.ops() {
            for t in tuples(cur.len(), op.arity()) {
                let args: Vec<Elem> = t.iter().map(|&i| cur[i]).collect();
                let y = apply(op, &args);
                if !member[y] {
                    member[y] = true;
                    grew = true;
                }
            }
        }
        if !grew {
            return cur;
        }
    }
}

/// Least congruence containing `pairs`, as the meet of every congruence
/// that contains them.
pub fn brute_cg(a: &FiniteAlgebra, pairs: &[(Elem, Elem)]) -> Congruence {
    brute_congruences(a)
        .into_iter()
        .filter(|c| pairs.iter().all(|&(x, y)| c.related(x, y)))
        .reduce(|x, y| x.meet(&y))
        .expect("the full relation always qualifies")
}

/// Closure under the basic operations of a set of equal-length vectors;
/// `None` once it grows past `cap`.
fn vector_closure(a: &FiniteAlgebra, seeds: Vec<Vec<Elem>>, cap: usize) -> Option<Vec<Vec<Elem>>> {
    let mut seen: std::collections::HashSet<Vec<Elem>> = seeds.iter().cloned().collect();
    let mut all = seeds;
    let width = all[0].len();
    let mut fresh_from = 0;
    while fresh_from < all.len() {
        let end = all.len();
        for op in a.ops() {
            let k = op.arity();
            let mut idx = vec![0usize; k];
            'combos: loop {
                // only combinations that use at least one vector from the last round
                if idx.iter().any(|&i| i >= fresh_from) {
                    let v: Vec<Elem> = (0..width)
                        .map(|c| {
                            let args: Vec<Elem> = idx.iter().map(|&i| all[i][c]).collect();
                            apply(op, &args)
                        })
                        .collect();
                    if seen.insert(v.clone()) {
                        all.push(v);
                        if all.len() > cap {
                            return None;
                        }
                    }
                }
                for slot in (0..k).rev() {
                    idx[slot] += 1;
                    if idx[slot] < end {
                        continue 'combos;
                    }
                    idx[slot] = 0;
                }
                break;
            }
        }
        fresh_from = end;
    }
    Some(all)
}

pub const CLONE_CAP: usize = 400;

/// Every unary polynomial as a table over `A`.
pub fn unary_polynomials(a: &FiniteAlgebra) -> Vec<Vec<Elem>> {
    let n = a.size();
    let mut seeds = vec![(0..n).collect::<Vec<_>>()];
    seeds.extend((0..n).map(|k| vec![k; n]));
    vector_closure(a, seeds, usize::MAX).expect("uncapped")
}

/// Every binary term operation as a table over `A × A`; at most `n^(n²-n)`
/// of them, so always small here.
pub fn binary_terms(a: &FiniteAlgebra) -> Vec<Vec<Elem>> {
    let n = a.size();
    let seeds = vec![
        (0..n * n).map(|i| i / n).collect(),
        (0..n * n).map(|i| i % n).collect(),
    ];
    vector_closure(a, seeds, usize::MAX).expect("uncapped")
}

/// `c ~ d` iff every binary polynomial `p` has `p(β, c) ⊆ α` exactly when
/// `p(β, d) ⊆ α`.
/// Polynomials are only looked at on `A × {c, d}`, which is exactly what the
/// condition reads; `None` if some such restriction exceeds [`CLONE_CAP`].
pub fn brute_twins(a: &FiniteAlgebra, alpha: &Congruence, beta: &Congruence) -> Option<Congruence> {
    let n = a.size();
    let mut labels = vec![0; n];
    for c in 0..n {
        labels[c] = c;
        for d in 0..c {
            let polys = pair_polynomials(a, c, d)?;
            // p[x] = p(x, c) and p[n + x] = p(x, d)
            let collapses = |p: &[Elem], off: usize| {
                beta.pairs().iter().all(|&(x, y)| alpha.related(p[off + x], p[off + y]))
            };
            if polys.iter().all(|p| collapses(p, 0) == collapses(p, n)) {
                labels[c] = labels[d];
                break;
            }
        }
    }
    Some(Congruence::from_labels(&labels))
}

/// Binary polynomials restricted to the arguments `(x, c)` then `(x, d)`.
pub fn pair_polynomials(a: &FiniteAlgebra, c: Elem, d: Elem) -> Option<Vec<Vec<Elem>>> {
    let n = a.size();
    let mut seeds = vec![
        (0..2 * n).map(|i| i % n).collect::<Vec<_>>(),
        (0..2 * n).map(|i| if i < n { c } else { d }).collect(),
    ];
    seeds.extend((0..n).map(|k| vec![k; 2 * n]));
    vector_closure(a, seeds, CLONE_CAP)
}

/// The largest congruence inside the twin equivalence, found among all
/// partitions; panics if the congruences inside it have no largest member.
pub fn brute_centralizer(a: &FiniteAlgebra, alpha: &Congruence, beta: &Congruence) -> Option<Congruence> {
    let twins = brute_twins(a, alpha, beta)?;
    let inside: Vec<Congruence> = brute_congruences(a)
        .into_iter()
        .filter(|c| c.le(&twins))
        .collect();
    let top = inside
        .iter()
        .find(|c| inside.iter().all(|d| d.le(c)))
        .expect("congruences inside the twin relation have a largest one");
    Some(top.clone())
}

/// Semilattice edges `(a, b)`, `b` absorbing, straight from the binary terms.
pub fn brute_edges(a: &FiniteAlgebra) -> Vec<(Elem, Elem)> {
    let n = a.size();
    let mut out = Vec::new();
    for x in 0..n {
        for y in 0..n {
            // binary terms seen only at the arguments (x, y) and (y, x)
            let terms = vector_closure(a, vec![vec![x, y], vec![y, x]], usize::MAX).expect("uncapped");
            if x != y && terms.iter().any(|f| f[0] == y && f[1] == y) {
                out.push((x, y));
            }
        }
    }
    out
}

/// The named three-element algebras plus seeded random idempotent algebras
/// of two and three elements in their signature.
pub fn small_algebras(random: u64) -> Vec<FiniteAlgebra> {
    let mut out = vec![
        fixtures::algebra_m(),
        fixtures::algebra_n(),
        fixtures::algebra_central(),
        fixtures::semilattice2(),
        fixtures::affine2(),
        fixtures::majority2(),
    ];
    let sig = fixtures::algebra_m().signature();
    for i in 0..random {
        let mut rng = case_rng(0xa1, i);
        let size = rng.gen_range(2..=3);
        out.push(random_idempotent_algebra(&mut rng, &format!("R{i}"), size, &sig));
    }
    out
}

/// Every solution by full enumeration of the product of the domains.
pub fn brute_solutions(p: &Instance) -> Vec<Assignment> {
    let sizes: Vec<usize> = (0..p.num_vars()).map(|v| p.domain_size(v)).collect();
    let total: usize = sizes.iter().product();
    assert!(total <= 2_000_000, "instance too large for full enumeration");
    let mut out = Vec::new();
    for mut code in 0..total {
        let mut phi = vec![0; sizes.len()];
        for v in (0..sizes.len()).rev() {
            phi[v] = code % sizes[v];
            code /= sizes[v];
        }
        let phi = Assignment(phi);
        if p.verify(&phi) {
            out.push(phi);
        }
    }
    out
}
