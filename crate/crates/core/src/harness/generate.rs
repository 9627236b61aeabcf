//! Seeded random algebras and invariant instances.
//!
//! All randomness comes from ChaCha8 seeded with `seed_from_u64(seed)`; case
//! `i` of a run uses stream `i`, so any case can be regenerated alone.

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::algebra::{ClosureLimits, Elem, FiniteAlgebra, OperationTable, PowerAlgebra};
use crate::clone::is_taylor;
use crate::error::Result;
use crate::instance::{Constraint, Instance};

pub fn case_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Tables drawn uniformly except on the diagonal, where `f(x, …, x) = x`.
pub fn random_idempotent_algebra(
    rng: &mut impl Rng,
    id: &str,
    size: usize,
    signature: &[(String, usize)],
) -> FiniteAlgebra {
    let ops = signature
        .iter()
        .map(|(name, arity)| {
            OperationTable::from_fn(name.clone(), *arity, size, |args| {
                if args.iter().all(|&x| x == args[0]) {
                    args[0]
                } else {
                    rng.gen_range(0..size)
                }
            })
        })
        .collect();
    FiniteAlgebra::new(id, size, ops).expect("diagonal is fixed")
}

/// Draws random idempotent algebras until one is Taylor (has a WNU term), so
/// that the generated CSPs fall on the tractable side. `None` after
/// `attempts` misses.
pub fn random_tractable_algebra(
    rng: &mut impl Rng,
    id: &str,
    size: usize,
    signature: &[(String, usize)],
    attempts: usize,
) -> Result<Option<FiniteAlgebra>> {
    for _ in 0..attempts {
        let a = random_idempotent_algebra(rng, id, size, signature);
        if is_taylor(&a)? {
            return Ok(Some(a));
        }
    }
    Ok(None)
}

/// Every relation is the subpower generated by a few random tuples, hence
/// invariant; scopes have distinct variables.
pub fn random_invariant_instance(
    rng: &mut impl Rng,
    a: &FiniteAlgebra,
    vars: usize,
    constraints: usize,
    max_arity: usize,
) -> Result<Instance> {
    let names: Vec<String> = (0..vars).map(|i| format!("x{i}")).collect();
    let mut cs = Vec::with_capacity(constraints);
    for _ in 0..constraints {
        let arity = rng.gen_range(1..=max_arity.min(vars).max(1));
        let scope: Vec<usize> = sample(rng, vars, arity).into_vec();
        let seeds = rng.gen_range(1..=3usize);
        let tuples: Vec<Vec<Elem>> = (0..seeds)
            .map(|_| (0..arity).map(|_| rng.gen_range(0..a.size())).collect())
            .collect();
        let relation = PowerAlgebra::new(a, arity, ClosureLimits::default())?.sg(&tuples)?;
        cs.push(Constraint::new(scope, relation));
    }
    Instance::over_algebra(a.clone(), names, cs)
}

/// Parity constraints on a cubic graph: one variable per edge, and at each
/// vertex the edge values in `{0, 1}` sum to the vertex charge mod 2. Each
/// relation is generated by its parity tuples plus up to two random tuples
/// through the element 2 (when there is one), so larger domains survive propagation. With an
/// odd total charge the `{0, 1}` part alone has no solution, and local
/// consistency cannot see that.
pub fn parity_instance(
    rng: &mut impl Rng,
    a: &FiniteAlgebra,
    edges: &[(usize, usize)],
    charges: &[usize],
) -> Result<Instance> {
    let pa = PowerAlgebra::new(a, 3, ClosureLimits::default())?;
    let mut cs = Vec::with_capacity(charges.len());
    for (vertex, &charge) in charges.iter().enumerate() {
        let scope: Vec<usize> = (0..edges.len())
            .filter(|&e| edges[e].0 == vertex || edges[e].1 == vertex)
            .collect();
        if scope.len() != 3 {
            return Err(crate::Error::Input(format!("vertex {vertex} does not have degree 3")));
        }
        let mut seeds: Vec<Vec<Elem>> = (0..8usize)
            .map(|m| vec![m & 1, m >> 1 & 1, m >> 2 & 1])
            .filter(|t| t.iter().sum::<usize>() % 2 == charge % 2)
            .collect();
        if a.size() > 2 {
            for _ in 0..rng.gen_range(0..=2) {
                let mut t: Vec<Elem> = (0..3).map(|_| rng.gen_range(0..a.size())).collect();
                t[rng.gen_range(0..3)] = 2;
                seeds.push(t);
            }
        }
        cs.push(Constraint::new(scope, pa.sg(&seeds)?));
    }
    let names = (0..edges.len()).map(|e| format!("e{}_{}", edges[e].0, edges[e].1)).collect();
    Instance::over_algebra(a.clone(), names, cs)
}

/// The complete graph on four vertices.
pub const K4: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// The complete bipartite graph `K_{3,3}`, sides `0..3` and `3..6`.
pub const K33: [(usize, usize); 9] = [
    (0, 3), (0, 4), (0, 5), (1, 3), (1, 4), (1, 5), (2, 3), (2, 4), (2, 5),
];
