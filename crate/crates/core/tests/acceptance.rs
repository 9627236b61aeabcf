//! Acceptance checks. Each criterion prints one PASS or FAIL line. Two
//! criteria fail on worked values that are not what the definitions give;
//! for those the test pins the exact discrepancy together with independent
//! evidence, so any drift in either direction breaks the build.

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use common::*;
use dicsp_core::algebra::{cg, con, monolith, quotient, sg, ClosureLimits, Congruence, FiniteAlgebra, SubdirectStatus};
use dicsp_core::blockmin::{check_block_minimality, measures, measures_with_monoliths, subproblem, InstanceMeasures};
use dicsp_core::centralizer::centralizer;
use dicsp_core::clone::{class_multiplication, is_multiplication, is_semilattice_free, semilattice_edges, FunctionTable};
use dicsp_core::harness::diff::{run_diff, DiffConfig, Outcome};
use dicsp_core::harness::format::load_workspace;
use dicsp_core::harness::oracle::brute_force_solve;
use dicsp_core::instance::{Assignment, Constraint, Instance};
use dicsp_core::maroti::maroti_step;
use dicsp_core::propagate::{establish_23_minimality, with_strategy_constraints};
use dicsp_core::solver::{maroti_reduce, solve, Solver, SolverConfig};
use dicsp_core::strands::{decompose, find_strands};
use dicsp_core::{fixtures, Error};

/// Time budgets.
const ANALYSIS_BUDGET: Duration = Duration::from_secs(1);
const PROPAGATION_BUDGET: Duration = Duration::from_secs(1);
const DIFF_BUDGET: Duration = Duration::from_secs(600);
/// Smallest differential run that counts.
const DIFF_CASES: u64 = 1000;

struct Verdict {
    pass: bool,
    detail: String,
}

fn pass(detail: impl Into<String>) -> Verdict {
    Verdict { pass: true, detail: detail.into() }
}

fn fail(detail: impl Into<String>) -> Verdict {
    Verdict { pass: false, detail: detail.into() }
}

fn blocks(n: usize, b: &[&[usize]]) -> Congruence {
    let v: Vec<Vec<usize>> = b.iter().map(|x| x.to_vec()).collect();
    Congruence::from_blocks(n, &v).unwrap()
}

fn pairs(list: &[(usize, usize)]) -> BTreeSet<(usize, usize)> {
    list.iter().copied().collect()
}

fn running_23() -> Instance {
    establish_23_minimality(&fixtures::running_instance())
        .unwrap()
        .expect("running instance is consistent")
        .instance
}

fn r_of(a: &FiniteAlgebra) -> FunctionTable {
    FunctionTable::from_fn(2, a.size(), |x| a.eval("r", x).unwrap())
}

/// Golden algebra analysis of A_M and A_N.
fn criterion_1() -> Verdict {
    let t0 = Instant::now();
    let am = fixtures::algebra_m();
    let an = fixtures::algebra_n();
    let theta = fixtures::theta();
    let (zero, one) = (Congruence::zero(3), Congruence::one(3));
    let psi = blocks(3, &[&[0, 2], &[1]]);

    let mut held = Vec::new();
    let mut missed = Vec::new();
    let mut check = |name: &str, ok: bool| if ok { held.push(name.to_string()) } else { missed.push(name.to_string()) };

    let lattice = con(&am).unwrap();
    check("Con = {0, θ, 1}", lattice.congruences == vec![zero.clone(), theta.clone(), one.clone()]);
    let covers: BTreeSet<(Congruence, Congruence)> = lattice
        .covers
        .iter()
        .map(|&(i, j)| (lattice.congruences[i].clone(), lattice.congruences[j].clone()))
        .collect();
    check(
        "covers (0,θ),(θ,1)",
        covers == [(zero.clone(), theta.clone()), (theta.clone(), one.clone())].into_iter().collect(),
    );
    let status = monolith(&am).unwrap();
    check("monolith θ", status.monolith() == Some(&theta));
    check("subdirectly irreducible", matches!(status, SubdirectStatus::Irreducible(_)));
    let edges: Vec<(usize, usize)> = semilattice_edges(&am).unwrap().iter().map(|e| (e.lower, e.absorbing)).collect();
    // the pair {0,2} with 0 absorbing
    check("edges {(2,0)}", edges == vec![(2, 0)]);
    check("(0:θ) = 1", centralizer(&am, &zero, &theta).unwrap().is_one());
    check("(θ:1) = θ", centralizer(&am, &theta, &one).unwrap() == theta);
    check("r is a multiplication", is_multiplication(&am, &r_of(&am)).unwrap());
    let an_edges: Vec<(usize, usize)> = semilattice_edges(&an).unwrap().iter().map(|e| (e.lower, e.absorbing)).collect();
    check("A_N edges {(2,0),(2,1)}", an_edges == vec![(2, 0), (2, 1)]);
    check("A_N (0:θ) excludes (0,2)", !centralizer(&an, &zero, &theta).unwrap().related(0, 2));
    let elapsed = t0.elapsed();
    check("under 1 s", elapsed < ANALYSIS_BUDGET);

    // The stated lattice leaves out {0,2 | 1}. Both operations preserve it
    // (checked value by value by the independent enumerator), so Con has four
    // elements, θ and ψ meet in 0, and A_M is subdirectly reducible.
    let documented: BTreeSet<&str> = ["Con = {0, θ, 1}", "covers (0,θ),(θ,1)", "monolith θ", "subdirectly irreducible"]
        .into_iter()
        .collect();
    assert!(preserves(&am, &psi), "ψ must be a congruence of A_M for the documented failure");
    let brute: BTreeSet<Congruence> = brute_congruences(&am).into_iter().collect();
    assert_eq!(brute, [zero.clone(), theta.clone(), psi.clone(), one.clone()].into_iter().collect());
    assert_eq!(status, SubdirectStatus::Reducible);
    let missed_set: BTreeSet<&str> = missed.iter().map(|s| s.as_str()).collect();
    assert_eq!(missed_set, documented, "held: {held:?}");
    fail(format!(
        "{} of {} sub-checks hold in {:.1} ms; A_M also preserves ψ = {psi}, so Con = {{0, θ, ψ, 1}}, \
         θ ∧ ψ = 0 and A_M is reducible (failing: {})",
        held.len(),
        held.len() + missed.len(),
        elapsed.as_secs_f64() * 1e3,
        missed.join("; ")
    ))
}

/// Golden (2,3)-minimality on the running instance.
fn criterion_2() -> Verdict {
    let t0 = Instant::now();
    let p = running_23();
    let elapsed = t0.elapsed();
    let s = p.strategy().expect("strategy present");
    let theta_rel = pairs(&[(0, 0), (0, 1), (1, 0), (1, 1), (2, 2)]);
    let q = pairs(&[(0, 0), (0, 1), (1, 0), (1, 1), (2, 0), (2, 2)]);
    let qt: BTreeSet<(usize, usize)> = q.iter().map(|&(a, b)| (b, a)).collect();
    let s_rel = pairs(&[(0, 0), (0, 1), (1, 0), (1, 1), (0, 2), (2, 0), (2, 2)]);
    let rel = |u: usize, v: usize| -> BTreeSet<(usize, usize)> { s.relation(u - 1, v - 1).into_iter().collect() };

    let mut matched = 0;
    for (u, v) in [(1, 2), (2, 4), (1, 4)] {
        matched += usize::from(rel(u, v) == theta_rel);
    }
    for (u, v) in [(1, 3), (2, 3), (2, 5), (4, 5)] {
        matched += usize::from(rel(u, v) == q);
    }
    matched += usize::from(rel(3, 5) == s_rel);
    let mut ok = matched == 8;
    let unchanged = p.constraints()[..2]
        .iter()
        .all(|c| c.relation.tuples().to_vec() == sorted(fixtures::running_relation()));
    ok &= unchanged && p.constraints().len() == 2;
    ok &= elapsed < PROPAGATION_BUDGET;
    assert!(ok, "everything but the two documented pairs must match");

    // The remaining two pairs differ. (0,2) on (v1,v5) would need some x at v2
    // with (0,x) in θ and (x,2) in Q, and Q has no (x,2) with x ∈ {0,1}.
    // The same argument through v2 rules out (2,0) on (v3,v4).
    let r15 = rel(1, 5);
    let r34 = rel(3, 4);
    assert_eq!(r15, q);
    assert_eq!(r34, qt);
    let through_v2 = |a: usize, b: usize| (0..3).any(|x| theta_rel.contains(&(a, x)) && q.contains(&(x, b)));
    assert!(!through_v2(0, 2));
    let sols = brute_solutions(&fixtures::running_instance());
    let proj15: BTreeSet<(usize, usize)> = sols.iter().map(|s| (s.get(0), s.get(4))).collect();
    let proj34: BTreeSet<(usize, usize)> = sols.iter().map(|s| (s.get(2), s.get(3))).collect();
    assert_eq!(proj15, q);
    assert_eq!(proj34, qt);
    fail(format!(
        "{} of 10 strategy relations and both constraints (10 tuples each) match in {:.1} ms; \
         R^(v1,v5) = Q and R^(v3,v4) = Q transposed instead of S, as forced by R^(v1,v2) = θ and \
         R^(v2,v5) = Q and equal to the projections of the {} solutions",
        matched,
        elapsed.as_secs_f64() * 1e3,
        sols.len()
    ))
}

fn sorted(mut v: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    v.sort();
    v
}

/// Strands and decomposition of the running instance.
fn criterion_3() -> Verdict {
    let p = running_23();
    let strands = find_strands(&p).unwrap();
    let theta = fixtures::theta();
    let mut sets: Vec<Vec<usize>> = strands.iter().map(|s| s.vars.clone()).collect();
    sets.sort();
    let expected_sets = vec![vec![0], vec![0, 1, 3], vec![1], vec![2], vec![3], vec![4]];
    if sets != expected_sets {
        return fail(format!("strands {sets:?}"));
    }
    let w = strands.iter().find(|s| s.vars == vec![0, 1, 3]).unwrap();
    if !w.alphas.iter().all(|a| *a == theta) {
        return fail("strand {v1,v2,v4} does not carry θ");
    }
    let pw = fixtures::running_instance().restrict(&w.vars).unwrap();
    let parts = decompose(&pw, w).unwrap();
    let original = |part: &Instance| -> Vec<Vec<Vec<usize>>> {
        part.constraints()
            .iter()
            .map(|c| {
                let mut t: Vec<Vec<usize>> = c
                    .relation
                    .tuples()
                    .iter()
                    .map(|t| t.iter().zip(&c.scope).map(|(&x, &v)| part.domain(v).origin_of(x).unwrap()).collect())
                    .collect();
                t.sort();
                t
            })
            .collect()
    };
    let square = vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]];
    let ok = parts.len() == 2
        && original(&parts[0]) == vec![square.clone(), square]
        && original(&parts[1]) == vec![vec![vec![2, 2]], vec![vec![2, 2]]];
    if !ok {
        return fail("decomposition differs");
    }
    pass("strands {v1,v2,v4} with θ plus the five singletons; parts {0,1} squares and {(2,2)}")
}

fn theta_measures(p: &Instance) -> InstanceMeasures {
    let theta = fixtures::theta();
    measures_with_monoliths(p, vec![Some(theta); p.num_vars()]).unwrap()
}

fn constraint_on<'a>(p: &'a Instance, scope: &[usize]) -> &'a Constraint {
    p.constraints().iter().find(|c| c.scope == scope).expect("constraint on scope")
}

/// Block-minimality of the running instance with θ as the designated monolith.
fn criterion_4() -> Verdict {
    let p = running_23();
    let m = theta_measures(&p);
    let check = check_block_minimality(&p, &m, &mut |q| Solver::new(SolverConfig::default()).decide(q)).unwrap();
    if check.removed != 0 {
        return fail(format!("(BM) removed {} tuples", check.removed));
    }
    // quotient labels: 0 for {0,1}, 1 for {2}
    let w = subproblem(&p, &m, &[0, 1, 3]).unwrap();
    let r_theta = vec![vec![0, 0, 0], vec![0, 1, 0], vec![1, 0, 0], vec![1, 1, 0], vec![2, 2, 0], vec![2, 2, 1]];
    let ok_w = constraint_on(&w, &[0, 1, 2]).relation.tuples() == &r_theta[..]
        && constraint_on(&w, &[1, 3, 4]).relation.tuples() == &r_theta[..];
    let v2 = subproblem(&p, &m, &[1]).unwrap();
    let r1 = vec![vec![0, 0, 0], vec![0, 1, 0], vec![1, 2, 0], vec![1, 2, 1]];
    let r2 = vec![vec![0, 0, 0], vec![1, 0, 0], vec![2, 1, 0], vec![2, 1, 1]];
    let ok_v2 = constraint_on(&v2, &[0, 1, 2]).relation.tuples() == &r1[..]
        && constraint_on(&v2, &[1, 3, 4]).relation.tuples() == &r2[..];
    if !(ok_w && ok_v2) {
        return fail("quotient relations differ");
    }
    // every tuple of every constraint extends, by enumeration
    for sub in [&w, &v2] {
        let sols = brute_solutions(sub);
        for c in sub.constraints() {
            for t in c.relation.tuples() {
                let extends = sols.iter().any(|s| c.scope.iter().zip(t).all(|(&v, &x)| s.get(v) == x));
                if !extends {
                    return fail(format!("tuple {t:?} on {:?} does not extend", c.scope));
                }
            }
        }
    }
    pass("(BM) removes nothing; R^θ (6 tuples) and both R^θθ (4 tuples) reproduced, every tuple extends")
}

/// The central-case walkthrough on the running instance with θ designated.
fn criterion_5() -> Verdict {
    let p = running_23();
    let m = theta_measures(&p);
    let theta = fixtures::theta();
    let all: Vec<usize> = (0..5).collect();
    if !(m.mu_star.iter().all(|c| *c == theta) && m.size == 3 && m.max == all && m.center == all) {
        return fail(format!("measures {m:?}"));
    }
    let full = with_strategy_constraints(&p).unwrap();
    let star = full.quotient(&m.mu_star).unwrap();
    let mut solver = Solver::new(SolverConfig::default());
    let (_, flagged) = solver.global_1_minimality(&star, 0).unwrap();
    if flagged.iter().flatten().any(|&f| f) {
        return fail("P/μ* is not globally 1-minimal");
    }
    // Stage 2: the only edge of A_M/θ is {2/θ, 0/θ} with 0/θ absorbing
    let edge = semilattice_edges(star.algebra(0)).unwrap()[0].pair();
    if edge != (1, 0) {
        return fail(format!("edge of the quotient is {edge:?}"));
    }
    let phi = Assignment(vec![0; 5]);
    let am = fixtures::algebra_m();
    let (q, _) = quotient(&am, &theta).unwrap();
    let mult = class_multiplication(&[&am, &q], ClosureLimits::default()).unwrap();
    let mult_q = vec![mult[0].clone(); 5];
    let product = maroti_step(&full, &m.mu_star, &phi, &mult_q).unwrap();
    let red = maroti_reduce(&full, &m, &vec![phi; m.max.len()], &mult_q).unwrap();
    let within = red.labels.iter().all(|l| l.iter().all(|&x| x < 2));
    let free = (0..5).all(|v| is_semilattice_free(red.instance.algebra(v)).unwrap());
    let original_ok = product.constraints()[..2].iter().all(|c| c.relation.len() == 8);
    if !(within && free && original_ok) {
        return fail("reduction did not land in {0,1}");
    }
    let out = solve(&fixtures::running_instance()).unwrap();
    let Some(w) = out.solution else { return fail("solver says UNSAT") };
    if !fixtures::running_instance().verify(&w) {
        return fail("solver witness does not verify");
    }
    // The designated-θ path is the worked one; the automatic path needs
    // irreducible domains and so splits A_M into A_M/θ and A_M/ψ first.
    assert!(measures(&p).is_err());
    pass(format!(
        "μ* = θ, MAX = Center = V, P/μ* globally 1-minimal, b = 0/θ, domains {{0,1}} and semilattice free; \
         SAT with {:?} (solver splits A_M itself)",
        w.0
    ))
}

/// Differential agreement with the brute-force oracle.
fn criterion_6() -> Verdict {
    let cfg = DiffConfig { cases: DIFF_CASES, ..Default::default() };
    assert!(cfg.max_vars <= 10 && cfg.max_constraints <= 8 && cfg.max_arity <= 3);
    let t0 = Instant::now();
    let report = run_diff(&cfg);
    let elapsed = t0.elapsed();
    let bad: Vec<u64> = report.failures().map(|c| c.index).collect();
    let algebras: BTreeSet<&str> = report.cases.iter().map(|c| c.algebra.as_str()).collect();
    let detail = format!(
        "{} cases ({} sat, {} unsat, {} algebras) in {:.1} s, disagreements {:?}",
        report.cases.len(),
        report.count(&Outcome::Sat),
        report.count(&Outcome::Unsat),
        algebras.len(),
        elapsed.as_secs_f64(),
        bad
    );
    let covers = algebras.contains("A_M") && algebras.contains("A_N") && algebras.len() > 10;
    if bad.is_empty() && covers && elapsed < DIFF_BUDGET && report.cases.len() as u64 >= DIFF_CASES {
        pass(detail)
    } else {
        fail(detail)
    }
}

/// Compact exhaustive property checks on the small algebras.
fn criterion_7() -> Verdict {
    let algebras = small_algebras(12);
    let mut counts = [0usize; 7];
    for a in &algebras {
        let n = a.size();
        // sg and cg are closure operators, checked on every generating set
        for mask in 1u32..1 << n {
            let gens: Vec<usize> = (0..n).filter(|&x| mask >> x & 1 == 1).collect();
            let s = sg(a, &gens).unwrap();
            assert_eq!(s, brute_sg(a, &gens));
            assert!(gens.iter().all(|x| s.contains(x)));
            assert_eq!(sg(a, &s).unwrap(), s);
            counts[0] += 1;
        }
        let all_pairs: Vec<(usize, usize)> = (0..n).flat_map(|x| (0..n).map(move |y| (x, y))).filter(|(x, y)| x < y).collect();
        for mask in 0u32..1 << all_pairs.len() {
            let ps: Vec<(usize, usize)> = (0..all_pairs.len()).filter(|&i| mask >> i & 1 == 1).map(|i| all_pairs[i]).collect();
            let c = cg(a, &ps).unwrap();
            assert_eq!(c, brute_cg(a, &ps));
            assert_eq!(cg(a, &c.pairs()).unwrap(), c);
            counts[1] += 1;
        }
        let cons = brute_congruences(a);
        for alpha in &cons {
            let (q, map) = quotient(a, alpha).unwrap();
            for (op, qop) in a.ops().iter().zip(q.ops()) {
                for t in tuples(n, op.arity()) {
                    let image: Vec<usize> = t.iter().map(|&x| map[x]).collect();
                    assert_eq!(map[apply(op, &t)], apply(qop, &image));
                }
            }
            counts[2] += 1;
            for beta in &cons {
                if !alpha.le(beta) {
                    continue;
                }
                if let Some(expect) = brute_centralizer(a, alpha, beta) {
                    assert_eq!(centralizer(a, alpha, beta).unwrap(), expect, "{} ({alpha}:{beta})", a.id());
                    counts[3] += 1;
                }
            }
        }
    }
    let am = fixtures::algebra_m();
    for x in 0..3 {
        assert_eq!(am.eval("r", &[x, 0]).unwrap(), am.eval("r", &[x, 1]).unwrap());
    }
    // propagation, products and decompositions on seeded small instances
    let cfg = DiffConfig { seed: 0xacc, max_vars: 6, max_constraints: 6, ..Default::default() };
    for i in 0..120 {
        let p = dicsp_core::harness::diff::generate_case(&cfg, i).unwrap().1;
        let before: BTreeSet<Vec<usize>> = brute_solutions(&p).into_iter().map(|s| s.0).collect();
        let Some(t) = establish_23_minimality(&p).unwrap() else {
            assert!(before.is_empty());
            counts[4] += 1;
            continue;
        };
        let after: BTreeSet<Vec<usize>> = brute_solutions(&t.instance)
            .into_iter()
            .map(|s| s.0.iter().enumerate().map(|(v, &x)| t.maps[v][x]).collect())
            .collect();
        assert_eq!(after, before);
        counts[4] += 1;
        let q = t.instance;
        for strand in find_strands(&q).unwrap() {
            let pw = q.restrict(&strand.vars).unwrap();
            let whole = brute_solutions(&pw).len();
            let parts: usize = decompose(&pw, &strand).unwrap().iter().map(|x| brute_solutions(x).len()).sum();
            assert_eq!(parts, whole);
            counts[6] += 1;
        }
        // products by quotient solutions, where θ is a congruence of every domain
        let theta_everywhere = (0..q.num_vars()).all(|v| q.domain_size(v) == 3 && preserves(q.algebra(v), &fixtures::theta()));
        if theta_everywhere && q.algebra(0).id() == "A_M" {
            let full = with_strategy_constraints(&q).unwrap();
            let m = theta_measures(&full);
            let sat = !brute_solutions(&full).is_empty();
            let mult = vec![class_multiplication(&[q.algebra(0).as_ref()], ClosureLimits::default()).unwrap()[0].clone(); q.num_vars()];
            for phi in brute_solutions(&full.quotient(&m.mu_star).unwrap()) {
                let prod = maroti_step(&full, &m.mu_star, &phi, &mult).unwrap();
                assert_eq!(!brute_solutions(&prod).is_empty(), sat);
                counts[5] += 1;
            }
        }
    }
    let names = ["sg sets", "cg pair sets", "quotients", "centralizers", "propagations", "products", "strand splits"];
    let detail: Vec<String> = names.iter().zip(counts).map(|(n, c)| format!("{c} {n}")).collect();
    if counts.iter().all(|&c| c > 0) {
        pass(detail.join(", "))
    } else {
        fail(detail.join(", "))
    }
}

/// Bad input is an input error and caps are resource errors, never UNSAT.
fn criterion_8() -> Verdict {
    let bad_op = r#"{"algebras":[{"name":"B","size":2,"operations":[{"name":"f","arity":2,"table":[[1,0],[0,1]]}]}]}"#;
    let bad_rel = r#"{"algebras":[{"name":"B","size":2,"operations":[{"name":"f","arity":2,"table":[[0,0],[0,1]]}]}],
        "instances":[{"algebra":"B","variables":[{"id":"x","domain":"full"},{"id":"y","domain":"full"}],
        "constraints":[{"scope":["x","y"],"tuples":[[0,1],[1,0]]}]}]}"#;
    let codes: Vec<i32> = [bad_op, bad_rel].iter().map(|t| load_workspace(t).unwrap_err().exit_code()).collect();
    // a 65-element domain is past the propagation cap
    let big = FiniteAlgebra::new("BIG", 65, vec![dicsp_core::algebra::OperationTable::from_fn("p", 2, 65, |a| a[0])]).unwrap();
    let p = Instance::over_algebra(big, vec!["x".into()], vec![Constraint::new(vec![0], (0..65).map(|x| vec![x]).collect())]).unwrap();
    let cap = solve(&p).unwrap_err();
    let budget = brute_force_solve(&fixtures::running_instance(), 3).unwrap_err();
    let ok = codes == vec![2, 2]
        && matches!(cap, Error::Resource(_))
        && cap.exit_code() == 3
        && matches!(budget, Error::Resource(_));
    let detail = format!("load errors exit {codes:?}; domain cap: {cap}; oracle budget: {budget}");
    if ok {
        pass(detail)
    } else {
        fail(detail)
    }
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Verdict); 8] = [
        ("golden algebra analysis", criterion_1),
        ("golden propagation", criterion_2),
        ("golden strands and decomposition", criterion_3),
        ("golden block-minimality", criterion_4),
        ("golden algorithm walkthrough", criterion_5),
        ("oracle equivalence", criterion_6),
        ("property suites", criterion_7),
        ("robustness", criterion_8),
    ];
    // criteria 1 and 2 fail on the worked values themselves, see above
    let expected = [false, false, true, true, true, true, true, true];
    let mut got = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let v = run();
        println!("criterion {} {}: {} ({})", i + 1, name, if v.pass { "PASS" } else { "FAIL" }, v.detail);
        got.push(v.pass);
    }
    assert_eq!(got, expected);
}
