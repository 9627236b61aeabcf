//! Twin equivalences and centralizers against the definition over binary
//! polynomials, and the consequences the reductions rely on.

mod common;

use common::*;
use dicsp_core::algebra::Congruence;
use dicsp_core::centralizer::{centralizer, twin_equivalence};
use dicsp_core::clone::multiplication_op;
use dicsp_core::{fixtures, Error};

const NAMED: [&str; 6] = ["A_M", "A_N", "A_C", "SL2", "Z2", "MAJ2"];

fn pairs_le(a: &dicsp_core::algebra::FiniteAlgebra) -> Vec<(Congruence, Congruence)> {
    let cons = brute_congruences(a);
    let mut out = Vec::new();
    for alpha in &cons {
        for beta in &cons {
            if alpha.le(beta) {
                out.push((alpha.clone(), beta.clone()));
            }
        }
    }
    out
}

#[test]
fn twins_and_centralizers_match_the_definition() {
    let (mut checked, mut skipped) = (0, 0);
    for a in small_algebras(30) {
        for (alpha, beta) in pairs_le(&a) {
            let got = twin_equivalence(&a, &alpha, &beta).unwrap();
            let cent = centralizer(&a, &alpha, &beta).unwrap();
            let Some(twins) = brute_twins(&a, &alpha, &beta) else {
                assert!(!NAMED.contains(&a.id()), "{} has too many polynomials", a.id());
                skipped += 1;
                continue;
            };
            checked += 1;
            assert_eq!(got.as_partition(), twins, "{} ({alpha}:{beta}) twins", a.id());
            let expect = brute_centralizer(&a, &alpha, &beta).unwrap();
            assert_eq!(cent, expect, "{} ({alpha}:{beta})", a.id());
        }
    }
    assert!(checked >= 2 * skipped, "checked {checked}, skipped {skipped}");
}

#[test]
fn centralizer_needs_alpha_below_beta() {
    let am = fixtures::algebra_m();
    let r = centralizer(&am, &Congruence::one(3), &fixtures::theta());
    assert!(matches!(r, Err(Error::Precondition(_))));
}

#[test]
fn unary_polynomials_of_am_include_the_worked_ones() {
    let am = fixtures::algebra_m();
    let polys = unary_polynomials(&am);
    let r = |x, y| am.eval("r", &[x, y]).unwrap();
    let h1: Vec<usize> = (0..3).map(|x| r(x, 0)).collect();
    let h1b: Vec<usize> = (0..3).map(|x| r(x, 1)).collect();
    let h2: Vec<usize> = (0..3).map(|x| r(2, x)).collect();
    let h3: Vec<usize> = (0..3).map(|x| r(0, x)).collect();
    assert_eq!(h1, vec![0, 1, 0]);
    assert_eq!(h1, h1b);
    assert_eq!(h2, vec![0, 0, 2]);
    assert_eq!(h3, vec![0, 0, 0]);
    for h in [&h1, &h2, &h3] {
        assert!(polys.contains(h));
    }
}

/// If `(α:β)` is everything and `b β c`, a multiplication gives `ab α ac`.
#[test]
fn full_centralizers_make_products_agree() {
    let mut used = 0;
    for a in small_algebras(30) {
        let m = match multiplication_op(&a) {
            Ok(m) => m,
            // no single term meets every requirement, see A_C
            Err(Error::Contract(_)) => continue,
            Err(e) => panic!("{}: {e}", a.id()),
        };
        for (alpha, beta) in pairs_le(&a) {
            if !centralizer(&a, &alpha, &beta).unwrap().is_one() {
                continue;
            }
            used += 1;
            for x in 0..a.size() {
                for (b, c) in beta.pairs() {
                    assert!(
                        alpha.related(m.mul(x, b), m.mul(x, c)),
                        "{} ({alpha}:{beta}) at {x}·{b} vs {x}·{c}",
                        a.id()
                    );
                }
            }
        }
    }
    assert!(used > 20);
}

/// With `(α:β) ≥ β`, no semilattice edge lies inside a β-block across
/// α-blocks.
#[test]
fn edges_inside_centralized_blocks_collapse() {
    for a in small_algebras(30) {
        let edges = brute_edges(&a);
        for (alpha, beta) in pairs_le(&a) {
            if !beta.le(&centralizer(&a, &alpha, &beta).unwrap()) {
                continue;
            }
            for &(x, y) in &edges {
                if beta.related(x, y) {
                    assert!(alpha.related(x, y), "{} ({alpha}:{beta}) edge ({x},{y})", a.id());
                }
            }
        }
    }
}

#[test]
fn worked_centralizers() {
    let zero = Congruence::zero(3);
    let one = Congruence::one(3);
    let theta = fixtures::theta();
    let am = fixtures::algebra_m();
    assert!(centralizer(&am, &zero, &theta).unwrap().is_one());
    assert_eq!(centralizer(&am, &theta, &one).unwrap(), theta);
    let an = fixtures::algebra_n();
    let c = centralizer(&an, &zero, &theta).unwrap();
    assert!(!c.related(0, 2));
    let ac = fixtures::algebra_central();
    assert!(centralizer(&ac, &zero, &theta).unwrap().is_one());
}
