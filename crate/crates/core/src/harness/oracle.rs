//! Exhaustive backtracking over the raw domains. Uses no algebra at all.

use crate::error::{Error, Result};
use crate::instance::{Assignment, Instance, Var};

pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// Finds the lexicographically first solution, or `None`. Each tried value
/// counts against `budget`; running out is a resource error.
pub fn brute_force_solve(p: &Instance, budget: u64) -> Result<Option<Assignment>> {
    let mut found = None;
    walk(p, budget, |x| {
        found = Some(Assignment(x.to_vec()));
        false
    })?;
    Ok(found)
}

/// Every solution in lexicographic order.
pub fn all_solutions(p: &Instance, budget: u64) -> Result<Vec<Assignment>> {
    let mut out = Vec::new();
    walk(p, budget, |x| {
        out.push(Assignment(x.to_vec()));
        true
    })?;
    Ok(out)
}

/// Depth-first enumeration; `visit` returns whether to keep going.
fn walk(p: &Instance, budget: u64, mut visit: impl FnMut(&[usize]) -> bool) -> Result<()> {
    let n = p.num_vars();
    // a constraint is checked once the last variable of its scope is set
    let mut due: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (ci, c) in p.constraints().iter().enumerate() {
        match c.scope.iter().max() {
            Some(&last) => due[last].push(ci),
            None if c.relation.is_empty() => return Ok(()),
            None => {}
        }
    }
    if n == 0 {
        visit(&[]);
        return Ok(());
    }
    let ok = |x: &[usize], v: Var| {
        due[v].iter().all(|&ci| {
            let c = &p.constraints()[ci];
            let image: Vec<usize> = c.scope.iter().map(|&u| x[u]).collect();
            c.relation.contains(&image)
        })
    };
    let mut x = vec![0; n];
    let mut spent = 0u64;
    let mut v = 0;
    loop {
        if x[v] >= p.domain_size(v) {
            x[v] = 0;
            if v == 0 {
                return Ok(());
            }
            v -= 1;
            x[v] += 1;
            continue;
        }
        spent += 1;
        if spent > budget {
            return Err(Error::Resource(format!(
                "oracle budget of {budget} assignments exhausted"
            )));
        }
        if !ok(&x, v) {
            x[v] += 1;
        } else if v + 1 < n {
            v += 1;
        } else {
            if !visit(&x) {
                return Ok(());
            }
            x[v] += 1;
        }
    }
}
