//! Every transformation the solver applies either keeps the solution set or
//! keeps satisfiability, checked by enumerating all assignments.

mod common;

use std::collections::BTreeSet;

use common::*;
use dicsp_core::blockmin::{check_block_minimality, establish_block_minimality, measures};
use dicsp_core::harness::diff::{generate_case, DiffConfig};
use dicsp_core::harness::generate::{case_rng, parity_instance, K33, K4};
use dicsp_core::instance::{Assignment, Constraint, Instance};
use dicsp_core::irreducible::split_subdirectly_irreducible;
use dicsp_core::propagate::{establish_1_minimality, establish_23_minimality, with_strategy_constraints};
use dicsp_core::solver::{solve, Solver, SolverConfig};
use dicsp_core::strands::{decompose, find_strands};
use dicsp_core::{fixtures, Error};
use proptest::prelude::*;

fn small_case(seed: u64, index: u64) -> Instance {
    let cfg = DiffConfig {
        seed,
        max_vars: 6,
        max_constraints: 7,
        ..Default::default()
    };
    generate_case(&cfg, index).unwrap().1
}

fn solution_set(p: &Instance) -> BTreeSet<Vec<usize>> {
    brute_solutions(p).into_iter().map(|s| s.0).collect()
}

/// Solutions of `q` relabeled into `p` through per-variable maps.
fn mapped(q: &Instance, maps: &[Vec<usize>]) -> BTreeSet<Vec<usize>> {
    brute_solutions(q)
        .into_iter()
        .map(|s| s.0.iter().enumerate().map(|(v, &x)| maps[v][x]).collect())
        .collect()
}

fn decide(p: &Instance) -> Result<dicsp_core::lift::Verdict, Error> {
    Solver::new(SolverConfig::default()).decide(p)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn arc_consistency_keeps_every_solution(seed in 0u64..1000, index in 0u64..64) {
        let p = small_case(seed, index);
        let before = solution_set(&p);
        match establish_1_minimality(&p).unwrap() {
            None => prop_assert!(before.is_empty()),
            Some(t) => prop_assert_eq!(mapped(&t.instance, &t.maps), before),
        }
    }

    #[test]
    fn pair_consistency_keeps_every_solution(seed in 0u64..1000, index in 0u64..64) {
        let p = small_case(seed, index);
        let before = solution_set(&p);
        match establish_23_minimality(&p).unwrap() {
            None => prop_assert!(before.is_empty()),
            Some(t) => {
                prop_assert_eq!(mapped(&t.instance, &t.maps), before.clone());
                let full = with_strategy_constraints(&t.instance).unwrap();
                prop_assert_eq!(mapped(&full, &t.maps), before);
            }
        }
    }

    #[test]
    fn splitting_domains_is_a_bijection_on_solutions(seed in 0u64..1000, index in 0u64..64) {
        let p = small_case(seed, index);
        let (q, back) = split_subdirectly_irreducible(&p).unwrap();
        let lifted: Vec<Vec<usize>> = brute_solutions(&q)
            .iter()
            .map(|s| back.lift(s).unwrap().0)
            .collect();
        let distinct: BTreeSet<Vec<usize>> = lifted.iter().cloned().collect();
        prop_assert_eq!(distinct.len(), lifted.len());
        prop_assert_eq!(distinct, solution_set(&p));
    }

    #[test]
    fn strand_parts_partition_the_solutions(seed in 0u64..1000, index in 0u64..64) {
        let p = small_case(seed, index);
        let Some(t) = establish_23_minimality(&p).unwrap() else { return Ok(()); };
        let q = t.instance;
        for strand in find_strands(&q).unwrap() {
            let pw = q.restrict(&strand.vars).unwrap();
            // both sides in the labels of the loaded algebras
            let whole: BTreeSet<Vec<usize>> = brute_solutions(&pw)
                .into_iter()
                .map(|s| s.0.iter().enumerate().map(|(v, &x)| pw.domain(v).origin_of(x).unwrap()).collect())
                .collect();
            let mut union = BTreeSet::new();
            for part in decompose(&pw, &strand).unwrap() {
                for s in brute_solutions(&part) {
                    let orig: Vec<usize> = s.0.iter().enumerate()
                        .map(|(v, &x)| part.domain(v).origin_of(x).unwrap())
                        .collect();
                    prop_assert!(union.insert(orig), "parts overlap");
                }
            }
            prop_assert_eq!(union, whole);
        }
    }

    #[test]
    fn block_minimality_keeps_every_solution(seed in 0u64..1000, index in 0u64..64) {
        let p = small_case(seed, index);
        let (split, _) = split_subdirectly_irreducible(&p).unwrap();
        let Some(t) = establish_23_minimality(&split).unwrap() else { return Ok(()); };
        let q = t.instance;
        let Ok(m) = measures(&q) else { return Ok(()); };
        let check = check_block_minimality(&q, &m, &mut |x| decide(x)).unwrap();
        let full = with_strategy_constraints(&q).unwrap();
        prop_assert_eq!(solution_set(&check.tightened), solution_set(&full));
    }

    #[test]
    fn block_minimal_instances_lift_back(seed in 0u64..1000, index in 0u64..64) {
        let p = small_case(seed, index);
        let sat = !brute_solutions(&p).is_empty();
        match establish_block_minimality(&p, &mut |x| decide(x)).unwrap() {
            None => prop_assert!(!sat),
            Some(bm) => {
                prop_assert!(sat);
                for s in brute_solutions(&bm.instance) {
                    prop_assert!(p.verify(&bm.lift.apply(&s).unwrap()));
                }
            }
        }
    }
}

#[test]
fn solver_matches_enumeration_on_parity_graphs() {
    let algebras = [
        fixtures::algebra_m(),
        fixtures::algebra_n(),
        fixtures::algebra_central(),
    ];
    let (mut removals, mut reductions, mut cases) = (0, 0, 0);
    for (graph, vertices) in [(&K4[..], 4), (&K33[..], 6)] {
        for a in &algebras {
            for i in 0..24u64 {
                let mut rng = case_rng(0x9a, i);
                let charges: Vec<usize> = (0..vertices).map(|v| usize::from((i >> v) & 1 == 1)).collect();
                let p = parity_instance(&mut rng, a, graph, &charges).unwrap();
                let expect = !brute_solutions(&p).is_empty();
                let mut s = Solver::new(SolverConfig::default());
                let out = s.solve(&p).unwrap();
                assert_eq!(out.is_sat(), expect, "{} on {} vertices, case {i}", a.id(), vertices);
                if let Some(w) = &out.solution {
                    assert!(p.verify(w));
                }
                cases += 1;
                removals += usize::from(s.stats.block_removals > 0);
                reductions += usize::from(s.stats.reductions > 0);
            }
        }
    }
    assert_eq!(cases, 144);
    // the family exists to reach these steps
    assert!(removals > 0, "no block-minimality removals");
    assert!(reductions > 0, "no central reductions");
}

/// Random linear systems over GF(2), at most three variables per equation.
fn linear_system(seed: u64, vars: usize, eqs: usize) -> (Instance, Vec<(Vec<usize>, usize)>) {
    use rand::seq::index::sample;
    use rand::Rng;
    let mut rng = case_rng(seed, 0);
    let mut rows = Vec::new();
    let mut cons = Vec::new();
    for _ in 0..eqs {
        let k = rng.gen_range(1..=3usize.min(vars));
        let scope = sample(&mut rng, vars, k).into_vec();
        let rhs = rng.gen_range(0..2);
        let tuples = (0..1usize << k)
            .map(|m| (0..k).map(|i| m >> i & 1).collect::<Vec<_>>())
            .filter(|t| t.iter().sum::<usize>() % 2 == rhs)
            .collect();
        rows.push((scope.clone(), rhs));
        cons.push(Constraint::new(scope, tuples));
    }
    let names = (0..vars).map(|v| format!("x{v}")).collect();
    (Instance::over_algebra(fixtures::affine2(), names, cons).unwrap(), rows)
}

/// Consistency of a GF(2) system by elimination on bit rows.
fn gf2_consistent(vars: usize, rows: &[(Vec<usize>, usize)]) -> bool {
    let mut basis: Vec<(u64, usize)> = Vec::new();
    for (scope, rhs) in rows {
        let mut bits = scope.iter().fold(0u64, |acc, &v| acc | 1 << v);
        let mut r = *rhs;
        for &(b, br) in &basis {
            if bits & (b & b.wrapping_neg()) != 0 {
                bits ^= b;
                r ^= br;
            }
        }
        if bits == 0 {
            if r == 1 {
                return false;
            }
            continue;
        }
        // keep the basis reduced on its pivots
        let pivot = bits & bits.wrapping_neg();
        for (b, br) in basis.iter_mut() {
            if *b & pivot != 0 {
                *b ^= bits;
                *br ^= r;
            }
        }
        basis.push((bits, r));
    }
    assert!(vars <= 64);
    true
}

#[test]
fn solver_matches_elimination_on_linear_systems() {
    let (mut sat, mut unsat) = (0, 0);
    for seed in 0..120u64 {
        let vars = 4 + (seed as usize % 9);
        let eqs = vars / 2 + (seed as usize % 7);
        let (p, rows) = linear_system(seed, vars, eqs);
        let expect = gf2_consistent(vars, &rows);
        let out = solve(&p).unwrap();
        assert_eq!(out.is_sat(), expect, "system {seed}");
        if let Some(w) = &out.solution {
            assert!(p.verify(w));
            for (scope, rhs) in &rows {
                assert_eq!(scope.iter().map(|&v| w.get(v)).sum::<usize>() % 2, *rhs);
            }
        }
        if expect {
            sat += 1;
        } else {
            unsat += 1;
        }
    }
    assert!(sat > 10 && unsat > 10, "{sat} sat, {unsat} unsat");
}

#[test]
fn elimination_oracle_agrees_with_enumeration() {
    for seed in 0..60u64 {
        let (p, rows) = linear_system(seed + 1000, 7, 5);
        assert_eq!(gf2_consistent(7, &rows), !brute_solutions(&p).is_empty(), "system {seed}");
    }
}

#[test]
fn every_solution_of_the_running_instance_is_found_by_enumeration() {
    let p = fixtures::running_instance();
    let all = brute_solutions(&p);
    let out = solve(&p).unwrap();
    let w: Assignment = out.solution.expect("satisfiable");
    assert!(all.contains(&w));
}
