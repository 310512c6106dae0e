use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::Args;
use liftlearn_core::fixer::{
    align_permutation, extract_pseudo_labels, read_problem, write_labels, write_result, BranchAndBound, FixSolver,
    SolverOptions,
};

use crate::io::{create, load_world, open};
use crate::World;

#[derive(Args, Debug)]
pub struct FixArgs {
    #[command(flatten)]
    world: World,
    /// Fix problem file (JSON lines).
    #[arg(long)]
    problem: PathBuf,
    /// Seconds; unlimited when omitted.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Search nodes before giving up; unlimited when omitted
    #[arg(long)]
    node_limit: Option<u64>,
    /// Overrides the problem's objective (state | state+action | all).
    #[arg(long)]
    objective_mask: Option<String>,
    /// Rename the solution towards the problem's model predictions.
    #[arg(long)]
    align: bool,
    /// Largest number of renamings tried by --align.
    #[arg(long, default_value_t = 100_000)]
    permutation_cap: u64,
    /// Result file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write pseudo-labels extracted from the solution.
    #[arg(long)]
    labels: Option<PathBuf>,
}

pub fn run(a: FixArgs) -> Result<ExitCode> {
    let b = load_world(&a.world)?;
    let mut problem =
        read_problem(open(&a.problem)?, &b.domain, &b.index).with_context(|| format!("reading {}", a.problem.display()))?;
    if let Some(m) = &a.objective_mask {
        problem.mask = m.parse()?;
    }
    if let Some(t) = a.time_limit {
        anyhow::ensure!(t >= 0.0 && t.is_finite(), "--time-limit must be a non-negative number of seconds");
    }
    let solver = BranchAndBound::new(SolverOptions {
        time_limit: a.time_limit.map(Duration::from_secs_f64),
        node_limit: a.node_limit,
    });
    let mut result = solver.solve(&problem, &b.domain, &b.index)?;
    if a.align {
        result = align_permutation(&result, &problem, &b.domain, &b.index, a.permutation_cap as u128).0;
    }

    match &a.out {
        Some(p) => {
            let mut f = create(p)?;
            write_result(&mut f, &result, &b.domain, &b.index)?;
            f.flush()?;
        }
        None => write_result(std::io::stdout().lock(), &result, &b.domain, &b.index)?,
    }
    if let Some(p) = &a.labels {
        let mut f = create(p)?;
        write_labels(&mut f, &extract_pseudo_labels(&problem, &result, 0), &b.index)?;
        f.flush()?;
    }
    eprintln!(
        "status {:?}, objective {:?}, bound {}, {} nodes in {:.3}s",
        result.status, result.objective, result.bound, result.stats.nodes, result.stats.seconds
    );
    Ok(if result.assignment.is_some() { ExitCode::SUCCESS } else { ExitCode::from(3) })
}
