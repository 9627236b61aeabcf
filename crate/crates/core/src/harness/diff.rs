//! Differential testing of the solver against the brute-force oracle.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use crate::algebra::FiniteAlgebra;
use crate::error::Result;
use crate::fixtures;
use crate::harness::format::{algebra_to_spec, instance_to_spec, WorkspaceSpec};
use crate::harness::generate::{case_rng, random_invariant_instance, random_tractable_algebra};
use crate::harness::oracle::brute_force_solve;
use crate::instance::Instance;
use crate::solver::{Solver, SolverConfig, SolverStats};

#[derive(Debug, Clone)]
pub struct DiffConfig {
    pub seed: u64,
    pub cases: u64,
    pub max_vars: usize,
    pub max_constraints: usize,
    pub max_arity: usize,
    pub oracle_budget: u64,
}

impl Default for DiffConfig {
    fn default() -> Self {
        DiffConfig {
            seed: 0,
            cases: 1000,
            max_vars: 10,
            max_constraints: 8,
            max_arity: 3,
            oracle_budget: crate::harness::oracle::DEFAULT_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Sat,
    Unsat,
    Error(String),
}

#[derive(Debug, Clone)]
pub struct CaseReport {
    pub index: u64,
    pub seed: u64,
    pub algebra: String,
    pub vars: usize,
    pub constraints: usize,
    pub solver: Outcome,
    pub oracle: Outcome,
    /// Same verdict, and any solver witness satisfies the instance.
    pub agree: bool,
    pub solver_ms: f64,
    pub oracle_ms: f64,
    pub stats: SolverStats,
}

#[derive(Debug, Clone)]
pub struct DiffReport {
    pub cases: Vec<CaseReport>,
}

impl DiffReport {
    pub fn all_agree(&self) -> bool {
        self.cases.iter().all(|c| c.agree)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CaseReport> {
        self.cases.iter().filter(|c| !c.agree)
    }

    pub fn count(&self, o: &Outcome) -> usize {
        self.cases.iter().filter(|c| &c.oracle == o).count()
    }
}

/// Case `index`: cycles through `A_M`, `A_N`, `A_C` and a random tractable
/// algebra of size 2 or 3 with their signature.
pub fn generate_case(cfg: &DiffConfig, index: u64) -> Result<(FiniteAlgebra, Instance)> {
    let mut rng = case_rng(cfg.seed, index);
    let a = match index % 4 {
        0 => fixtures::algebra_m(),
        1 => fixtures::algebra_n(),
        2 => fixtures::algebra_central(),
        _ => {
            let size = rng.gen_range(2..=3);
            let sig = fixtures::algebra_m().signature();
            random_tractable_algebra(&mut rng, &format!("R{index}"), size, &sig, 200)?
                .unwrap_or_else(fixtures::algebra_m)
        }
    };
    let vars = rng.gen_range(2..=cfg.max_vars);
    let constraints = rng.gen_range(1..=cfg.max_constraints);
    let p = random_invariant_instance(&mut rng, &a, vars, constraints, cfg.max_arity)?;
    Ok((a, p))
}

/// The case as a workspace file, for reproducing a failure.
pub fn case_workspace(cfg: &DiffConfig, index: u64) -> Result<WorkspaceSpec> {
    let (a, p) = generate_case(cfg, index)?;
    Ok(WorkspaceSpec {
        algebras: vec![algebra_to_spec(&a)],
        instances: vec![instance_to_spec(&format!("case{index}"), a.id(), &p)],
    })
}

pub fn run_case(cfg: &DiffConfig, index: u64) -> CaseReport {
    let (algebra, p) = match generate_case(cfg, index) {
        Ok(x) => x,
        Err(e) => {
            return CaseReport {
                index,
                seed: cfg.seed,
                algebra: String::new(),
                vars: 0,
                constraints: 0,
                solver: Outcome::Error(format!("generation failed: {e}")),
                oracle: Outcome::Error(String::new()),
                agree: false,
                solver_ms: 0.0,
                oracle_ms: 0.0,
                stats: SolverStats::default(),
            }
        }
    };
    let t0 = Instant::now();
    let mut s = Solver::new(SolverConfig::default());
    let solved = s.solve(&p);
    let solver_ms = t0.elapsed().as_secs_f64() * 1e3;
    let t1 = Instant::now();
    let oracle = brute_force_solve(&p, cfg.oracle_budget);
    let oracle_ms = t1.elapsed().as_secs_f64() * 1e3;
    let (solver, witness_ok) = match &solved {
        Ok(out) => match &out.solution {
            Some(w) => (Outcome::Sat, p.verify(w)),
            None => (Outcome::Unsat, true),
        },
        Err(e) => (Outcome::Error(e.to_string()), false),
    };
    let oracle = match oracle {
        Ok(Some(_)) => Outcome::Sat,
        Ok(None) => Outcome::Unsat,
        Err(e) => Outcome::Error(e.to_string()),
    };
    let agree = witness_ok && !matches!(oracle, Outcome::Error(_)) && solver == oracle;
    CaseReport {
        index,
        seed: cfg.seed,
        algebra: algebra.id().to_string(),
        vars: p.num_vars(),
        constraints: p.constraints().len(),
        solver,
        oracle,
        agree,
        solver_ms,
        oracle_ms,
        stats: s.stats,
    }
}

/// Runs all cases, in parallel when threads are available; the report is
/// ordered by case index.
pub fn run_diff(cfg: &DiffConfig) -> DiffReport {
    let cases = (0..cfg.cases)
        .into_par_iter()
        .map(|i| run_case(cfg, i))
        .collect();
    DiffReport { cases }
}
