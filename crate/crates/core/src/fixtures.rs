//! Small named algebras and instances used in tests, examples and goldens.

use crate::algebra::{ClosureLimits, Congruence, FiniteAlgebra, OperationTable, PowerAlgebra};
use crate::instance::{Constraint, Instance};

/// Affine on `{0, 1}`; off the diagonal a `2` argument is read as `two_as`.
fn ternary_t(args: &[usize], two_as: usize) -> usize {
    if args.iter().all(|&x| x == 2) {
        return 2;
    }
    let v: Vec<usize> = args.iter().map(|&x| if x == 2 { two_as } else { x }).collect();
    (v[0] + v[2] + 2 - v[1]) % 2
}

fn three_element(id: &str, r_two_one: usize, two_as: usize) -> FiniteAlgebra {
    let r = OperationTable::from_fn("r", 2, 3, |a| match (a[0], a[1]) {
        (1, _) => 1,
        (2, 2) => 2,
        (2, 1) => r_two_one,
        _ => 0,
    });
    let t = OperationTable::from_fn("t", 3, 3, |a| ternary_t(a, two_as));
    FiniteAlgebra::new(id, 3, vec![r, t]).expect("fixture algebra is valid")
}

/// The three-element algebra with a binary `r` and a ternary `t` that is
/// affine on `{0, 1}`; `{0, 2}` is a semilattice edge.
pub fn algebra_m() -> FiniteAlgebra {
    three_element("A_M", 0, 0)
}

/// Same as [`algebra_m`] except `r(2, 1) = 1`, which makes `{1, 2}` an edge too.
pub fn algebra_n() -> FiniteAlgebra {
    three_element("A_N", 1, 0)
}

/// [`algebra_m`] with `t` reading a stray `2` as `1`. This breaks the
/// congruence `{0,2 | 1}`, leaving `{0,1 | 2}` as a central monolith of a
/// subdirectly irreducible algebra with edges `(2,0)` and `(2,1)`.
pub fn algebra_central() -> FiniteAlgebra {
    three_element("A_C", 0, 1)
}

/// The congruence `{0,1 | 2}` shared by both algebras above.
pub fn theta() -> Congruence {
    Congruence::from_blocks(3, &[vec![0, 1], vec![2]]).unwrap()
}

/// Two-element meet semilattice; `0` absorbs.
pub fn semilattice2() -> FiniteAlgebra {
    let m = OperationTable::from_fn("m", 2, 2, |a| a[0].min(a[1]));
    FiniteAlgebra::new("SL2", 2, vec![m]).unwrap()
}

pub fn semilattice2_squared() -> FiniteAlgebra {
    let sl = semilattice2();
    PowerAlgebra::new(&sl, 2, ClosureLimits::default())
        .unwrap()
        .materialize()
        .unwrap()
}

/// `({0,1}, x - y + z mod 2)`.
pub fn affine2() -> FiniteAlgebra {
    let m = OperationTable::from_fn("m", 3, 2, |a| (a[0] + a[1] + a[2]) % 2);
    FiniteAlgebra::new("Z2", 2, vec![m]).unwrap()
}

/// `({0,1}, majority)`.
pub fn majority2() -> FiniteAlgebra {
    let m = OperationTable::from_fn("maj", 3, 2, |a| usize::from(a[0] + a[1] + a[2] >= 2));
    FiniteAlgebra::new("MAJ2", 2, vec![m]).unwrap()
}

/// A set with no operations.
pub fn bare_set(n: usize) -> FiniteAlgebra {
    FiniteAlgebra::new(format!("SET{n}"), n, vec![]).unwrap()
}

pub fn trivial_algebra() -> FiniteAlgebra {
    let m = OperationTable::from_fn("m", 2, 1, |_| 0);
    FiniteAlgebra::new("ONE", 1, vec![m]).unwrap()
}

/// The ten ternary tuples of the running example relation over `A_M`.
pub fn running_relation() -> Vec<Vec<usize>> {
    vec![
        vec![0, 0, 0],
        vec![0, 1, 0],
        vec![1, 1, 0],
        vec![1, 0, 0],
        vec![0, 0, 1],
        vec![0, 1, 1],
        vec![1, 1, 1],
        vec![1, 0, 1],
        vec![2, 2, 0],
        vec![2, 2, 2],
    ]
}

/// Five variables over `A_M` with the running relation on `(v1, v2, v3)`
/// and on `(v2, v4, v5)`. Variables are numbered `0..5`.
pub fn running_instance() -> Instance {
    let am = algebra_m();
    let names = ["v1", "v2", "v3", "v4", "v5"].map(String::from).to_vec();
    Instance::over_algebra(
        am,
        names,
        vec![
            Constraint::new(vec![0, 1, 2], running_relation()),
            Constraint::new(vec![1, 3, 4], running_relation()),
        ],
    )
    .expect("running instance is valid")
}
