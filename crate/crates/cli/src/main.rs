use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dicsp_core::algebra::{con, monolith, FiniteAlgebra, SubdirectStatus};
use dicsp_core::centralizer::centralizer;
use dicsp_core::clone::{multiplication_op, semilattice_edges};
use dicsp_core::harness::diff::{case_workspace, run_diff, DiffConfig, Outcome};
use dicsp_core::harness::format::{
    algebra_to_spec, instance_to_spec, load_workspace, to_json, LoadedInstance, Workspace, WorkspaceSpec,
};
use dicsp_core::harness::generate::{case_rng, random_invariant_instance, random_tractable_algebra};
use dicsp_core::harness::oracle::{brute_force_solve, DEFAULT_BUDGET};
use dicsp_core::solver::{Solver, SolverConfig};
use dicsp_core::{fixtures, Error};

const EXIT_UNSAT: u8 = 1;
const EXIT_DISAGREE: u8 = 4;

#[derive(Parser)]
#[command(name = "dicsp", version, about = "Finite algebra analysis and CSP solving over idempotent algebras")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Congruences, edges, centralizers and a multiplication term of every algebra.
    Analyze { file: PathBuf },
    /// Solve every instance in the file (or the one named).
    Solve {
        file: PathBuf,
        #[arg(long)]
        instance: Option<String>,
        /// Also run the brute-force oracle and compare verdicts.
        #[arg(long)]
        oracle_check: bool,
        /// Print the reduction steps to the error stream.
        #[arg(long)]
        trace: bool,
    },
    /// Solve by exhaustive search only.
    Oracle {
        file: PathBuf,
        #[arg(long)]
        instance: Option<String>,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
    },
    /// Write a random tractable algebra and an invariant instance over it.
    Gen {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        size: usize,
        #[arg(long, default_value_t = 6)]
        vars: usize,
        #[arg(long, default_value_t = 5)]
        cons: usize,
        #[arg(long, default_value_t = 3)]
        arity: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the solver with the oracle on seeded random cases.
    Diff {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        cases: u64,
        /// Where reproducing workspace files of failed cases go.
        #[arg(long, default_value = ".")]
        dump_dir: PathBuf,
        /// Print one line per case.
        #[arg(long)]
        verbose: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Analyze { file } => analyze(&load(&file)?),
        Command::Solve {
            file,
            instance,
            oracle_check,
            trace,
        } => solve(&load(&file)?, instance.as_deref(), oracle_check, trace),
        Command::Oracle {
            file,
            instance,
            budget,
        } => oracle(&load(&file)?, instance.as_deref(), budget),
        Command::Gen {
            seed,
            size,
            vars,
            cons,
            arity,
            out,
        } => generate(seed, size, vars, cons, arity, out.as_deref()),
        Command::Diff {
            seed,
            cases,
            dump_dir,
            verbose,
        } => diff(seed, cases, &dump_dir, verbose),
    }
}

fn load(path: &Path) -> Result<Workspace, Error> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
    load_workspace(&text)
}

fn selected<'a>(ws: &'a Workspace, name: Option<&str>) -> Result<Vec<&'a LoadedInstance>, Error> {
    let chosen: Vec<&LoadedInstance> = ws
        .instances
        .iter()
        .filter(|i| name.is_none_or(|n| i.name == n))
        .collect();
    if chosen.is_empty() {
        return Err(Error::Input(match name {
            Some(n) => format!("no instance named `{n}`"),
            None => "the file has no instances".into(),
        }));
    }
    Ok(chosen)
}

fn analyze(ws: &Workspace) -> Result<u8, Error> {
    let mut out = String::new();
    for a in &ws.algebras {
        analyze_algebra(a, &mut out)?;
    }
    print!("{out}");
    Ok(0)
}

fn analyze_algebra(a: &FiniteAlgebra, out: &mut String) -> Result<(), Error> {
    use std::fmt::Write as _;
    let lattice = con(a)?;
    let _ = writeln!(out, "algebra {} (size {})", a.id(), a.size());
    let _ = writeln!(out, "  congruences: {}", lattice.congruences.len());
    for (i, c) in lattice.congruences.iter().enumerate() {
        let _ = writeln!(out, "    [{i}] {c}");
    }
    let covers: Vec<String> = lattice.covers.iter().map(|(i, j)| format!("{i}<{j}")).collect();
    let _ = writeln!(out, "  covers: {}", covers.join(" "));
    match monolith(a)? {
        SubdirectStatus::Irreducible(m) => {
            let _ = writeln!(out, "  subdirectly irreducible: yes, monolith {m}");
        }
        SubdirectStatus::Reducible => {
            let _ = writeln!(out, "  subdirectly irreducible: no");
        }
        other => {
            let _ = writeln!(out, "  subdirectly irreducible: {other:?}");
        }
    }
    let edges: Vec<String> = semilattice_edges(a)?
        .iter()
        .map(|e| format!("({},{})", e.lower, e.absorbing))
        .collect();
    let _ = writeln!(out, "  semilattice edges (lower,absorbing): {}", edges.join(" "));
    let _ = writeln!(out, "  centralizers over covers:");
    for &(i, j) in &lattice.covers {
        let (alpha, beta) = (&lattice.congruences[i], &lattice.congruences[j]);
        let c = centralizer(a, alpha, beta)?;
        let _ = writeln!(out, "    ({alpha}:{beta}) = {c}");
    }
    let m = multiplication_op(a)?;
    let _ = writeln!(out, "  multiplication term: {:?}", m.table());
    Ok(())
}

fn solve(ws: &Workspace, name: Option<&str>, oracle_check: bool, trace: bool) -> Result<u8, Error> {
    let mut code = 0;
    let stdout = std::io::stdout();
    for li in selected(ws, name)? {
        let mut solver = Solver::new(SolverConfig {
            trace,
            ..Default::default()
        });
        let outcome = solver.solve(&li.instance)?;
        if trace {
            for line in &outcome.trace {
                eprintln!("{line}");
            }
        }
        let mut lock = stdout.lock();
        let _ = writeln!(lock, "# {}", li.name);
        match &outcome.solution {
            Some(w) => {
                let _ = write!(lock, "SAT\n{}", li.format_solution(w));
            }
            None => {
                let _ = writeln!(lock, "UNSAT");
                code = code.max(EXIT_UNSAT);
            }
        }
        if oracle_check {
            let expected = brute_force_solve(&li.instance, DEFAULT_BUDGET)?;
            if expected.is_some() != outcome.solution.is_some() {
                eprintln!("{}: solver and oracle disagree", li.name);
                code = EXIT_DISAGREE;
            } else {
                let _ = writeln!(lock, "oracle: agrees");
            }
        }
    }
    Ok(code)
}

fn oracle(ws: &Workspace, name: Option<&str>, budget: u64) -> Result<u8, Error> {
    let mut code = 0;
    for li in selected(ws, name)? {
        println!("# {}", li.name);
        match brute_force_solve(&li.instance, budget)? {
            Some(w) => print!("SAT\n{}", li.format_solution(&w)),
            None => {
                println!("UNSAT");
                code = EXIT_UNSAT;
            }
        }
    }
    Ok(code)
}

fn generate(seed: u64, size: usize, vars: usize, cons: usize, arity: usize, out: Option<&Path>) -> Result<u8, Error> {
    if !(1..=4).contains(&size) || vars == 0 || arity == 0 {
        return Err(Error::Input("need 1 <= size <= 4, vars >= 1 and arity >= 1".into()));
    }
    let mut rng = case_rng(seed, 0);
    let sig = fixtures::algebra_m().signature();
    let a = random_tractable_algebra(&mut rng, &format!("R{seed}"), size, &sig, 1000)?
        .ok_or_else(|| Error::Resource("no Taylor algebra found in 1000 draws".into()))?;
    let p = random_invariant_instance(&mut rng, &a, vars, cons, arity)?;
    let spec = WorkspaceSpec {
        algebras: vec![algebra_to_spec(&a)],
        instances: vec![instance_to_spec("generated", a.id(), &p)],
    };
    write_or_print(&to_json(&spec), out)?;
    Ok(0)
}

fn write_or_print(text: &str, out: Option<&Path>) -> Result<(), Error> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Error::Input(format!("cannot write {}: {e}", path.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn diff(seed: u64, cases: u64, dump_dir: &Path, verbose: bool) -> Result<u8, Error> {
    let cfg = DiffConfig {
        seed,
        cases,
        ..Default::default()
    };
    let report = run_diff(&cfg);
    if verbose {
        for c in &report.cases {
            println!(
                "case {:>5} {:<6} vars {:>2} cons {:>2} solver {:?} oracle {:?} {} {:.1}ms",
                c.index,
                c.algebra,
                c.vars,
                c.constraints,
                c.solver,
                c.oracle,
                if c.agree { "ok" } else { "MISMATCH" },
                c.solver_ms
            );
        }
    }
    let total_ms: f64 = report.cases.iter().map(|c| c.solver_ms).sum();
    println!(
        "{} cases, seed {}: {} sat, {} unsat, {} disagreements, solver time {:.1}s",
        report.cases.len(),
        seed,
        report.count(&Outcome::Sat),
        report.count(&Outcome::Unsat),
        report.failures().count(),
        total_ms / 1e3
    );
    let sum = |f: fn(&dicsp_core::solver::SolverStats) -> usize| -> usize {
        report.cases.iter().map(|c| f(&c.stats)).sum()
    };
    println!(
        "cases with: block-minimality removals {}, central reductions {}, restarts {}, non-central stops {}",
        report.cases.iter().filter(|c| c.stats.block_removals > 0).count(),
        report.cases.iter().filter(|c| c.stats.reductions > 0).count(),
        sum(|s| s.restarts),
        sum(|s| s.non_central),
    );
    if report.all_agree() {
        return Ok(0);
    }
    for c in report.failures() {
        let path = dump_dir.join(format!("diff-{}-{}.json", seed, c.index));
        eprintln!(
            "case {}: solver {:?}, oracle {:?}; reproduce with {}",
            c.index,
            c.solver,
            c.oracle,
            path.display()
        );
        write_or_print(&to_json(&case_workspace(&cfg, c.index)?), Some(&path))?;
    }
    Ok(EXIT_DISAGREE)
}
