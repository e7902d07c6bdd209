//! Command-line front end: instance generation, solver runs with CSV traces,
//! feasibility verdicts, condition numbers, and the property-check suite.
//!
//! Exit codes: 0 success (for `feas`: approximately feasible), 1 infeasible
//! (for `verify`: a check failed), 2 undecided, 3 usage errors, 4 runtime or
//! IO errors.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use fwpoly::experiment::{run_experiment, Algo};
use fwpoly::feasibility::decide_feasibility;
use fwpoly::instance::{generate_disjoint, make_intersecting, GenConfig, Instance};
use fwpoly::polytope::VPolytope;
use fwpoly::solvers::{write_trace_csv, SolverConfig, StepRule};
use fwpoly::verify::{run_all, DEFAULT_VERIFY_SEED};

#[derive(Parser)]
#[command(name = "fwpoly", version, about = "Frank-Wolfe solvers over products of polytopes")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a seeded instance and write it as JSON.
    Gen(GenArgs),
    /// Run one solver on an instance and write its trace CSV.
    Solve(SolveArgs),
    /// Decide approximate feasibility of an instance's intersection.
    Feas(FeasArgs),
    /// Compute condition numbers of one instance block.
    Condnum(CondnumArgs),
    /// Run the property suite (composition theorems, objective identities,
    /// contraction checks).
    Verify(VerifyArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    k: usize,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: u64,
    /// Shift blocks so they share a common point.
    #[arg(long)]
    intersecting: bool,
    /// Minimum vertices per block (default n).
    #[arg(long)]
    min_verts: Option<usize>,
    /// Maximum vertices per block (default 2n).
    #[arg(long)]
    max_verts: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum StepArg {
    Short,
    Linesearch,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoArg {
    Fw,
    Afw,
    Cbcfw,
    Alm,
}

impl From<AlgoArg> for Algo {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::Fw => Algo::Fw,
            AlgoArg::Afw => Algo::Afw,
            AlgoArg::Cbcfw => Algo::Cbcfw,
            AlgoArg::Alm => Algo::Alm,
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, value_enum)]
    algo: AlgoArg,
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value_t = 1000)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-7)]
    gap_tol: f64,
    /// Step-size rule; the line search is exact for the quadratic objective.
    #[arg(long, value_enum, default_value = "linesearch")]
    step: StepArg,
    /// Trace CSV output path.
    #[arg(long)]
    log: PathBuf,
}

#[derive(Args)]
struct FeasArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    eps: f64,
    #[arg(long, default_value_t = 5000)]
    max_iters: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum WhichArg {
    Pw,
    Apw,
    Vf,
    All,
}

#[derive(Args)]
struct CondnumArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Block index, 0-based.
    #[arg(long)]
    block: usize,
    #[arg(long, value_enum)]
    which: WhichArg,
    /// Vertex cap for exhaustive face enumeration.
    #[arg(long, default_value_t = fwpoly::faces::DEFAULT_FACE_CAP)]
    face_cap: usize,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = DEFAULT_VERIFY_SEED)]
    seed: u64,
    /// Reduced sample sizes for a fast smoke run.
    #[arg(long)]
    quick: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e)
            if matches!(
                e.kind(),
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion
            ) =>
        {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(3);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(4)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.cmd {
        Cmd::Gen(args) => cmd_gen(args),
        Cmd::Solve(args) => cmd_solve(args),
        Cmd::Feas(args) => cmd_feas(args),
        Cmd::Condnum(args) => cmd_condnum(args),
        Cmd::Verify(args) => cmd_verify(args),
    }
}

fn cmd_gen(args: GenArgs) -> Result<u8> {
    let mut cfg = GenConfig::default();
    if args.min_verts.is_some() || args.max_verts.is_some() {
        let lo = args.min_verts.unwrap_or(args.n);
        let hi = args.max_verts.unwrap_or(2 * args.n);
        cfg.vertex_range = Some((lo, hi));
    }
    let mut inst = generate_disjoint(args.k, args.n, args.seed, &cfg)?;
    if args.intersecting {
        // Block sampling uses RNG streams 1..=k; the shift procedure draws
        // from stream 0 of the same seed, so one seed determines everything.
        inst = make_intersecting(&inst, args.seed)?;
    }
    inst.write_file(&args.out)
        .with_context(|| format!("writing {}", args.out.display()))?;
    println!(
        "{}",
        serde_json::json!({
            "out": args.out.display().to_string(),
            "k": inst.k,
            "n": inst.n,
            "seed": inst.meta.seed,
            "intersecting": inst.meta.intersecting,
            "vertices_per_block": inst.meta.vertices_per_block,
        })
    );
    Ok(0)
}

fn solver_config(max_iters: usize, gap_tol: f64, step: StepArg) -> SolverConfig {
    SolverConfig {
        max_iters,
        gap_tol,
        step_rule: match step {
            StepArg::Short => StepRule::ShortStep,
            StepArg::Linesearch => StepRule::LineSearch,
        },
        smoothness_l: None,
        record_trace: true,
    }
}

fn cmd_solve(args: SolveArgs) -> Result<u8> {
    let inst = Instance::read_file(&args.instance)
        .with_context(|| format!("reading {}", args.instance.display()))?;
    let config = solver_config(args.max_iters, args.gap_tol, args.step);
    let runs = run_experiment(&inst, &[args.algo.into()], &config)?;
    let run = runs.into_iter().next().expect("one algorithm requested");

    let file = File::create(&args.log)
        .with_context(|| format!("creating {}", args.log.display()))?;
    let mut w = BufWriter::new(file);
    write_trace_csv(&mut w, &run.trace)?;
    w.flush()?;

    println!("{}", serde_json::to_string(&run.summary)?);
    Ok(0)
}

fn cmd_feas(args: FeasArgs) -> Result<u8> {
    let inst = Instance::read_file(&args.instance)
        .with_context(|| format!("reading {}", args.instance.display()))?;
    let config = SolverConfig {
        max_iters: args.max_iters,
        record_trace: false,
        ..Default::default()
    };
    let verdict = decide_feasibility(&inst, args.eps, &config)?;
    println!("{}", serde_json::to_string(&verdict)?);
    Ok(u8::try_from(verdict.exit_code()).expect("verdict codes are 0..=2"))
}

fn cmd_condnum(args: CondnumArgs) -> Result<u8> {
    let inst = Instance::read_file(&args.instance)
        .with_context(|| format!("reading {}", args.instance.display()))?;
    if args.block >= inst.blocks.len() {
        bail!(
            "block {} out of range; instance has {} blocks",
            args.block,
            inst.blocks.len()
        );
    }
    let p = VPolytope::new(inst.blocks[args.block].clone())?;
    // Face enumeration needs every stored point extreme; fail with a clear
    // message rather than returning a wrong width.
    for i in 0..p.num_vertices() {
        if !fwpoly::faces::is_face(&p, &[i])? {
            bail!(
                "block {} vertex {} is not an extreme point; condition numbers \
                 need the stored list in convex position",
                args.block,
                i
            );
        }
    }
    let out = match args.which {
        WhichArg::All => {
            let report = fwpoly::condnum::condition_report_capped(&p, args.face_cap)?;
            serde_json::to_value(&report)?
        }
        WhichArg::Pw => {
            let (pw, face) = fwpoly::condnum::pyramidal_width_detailed(&p, args.face_cap)?;
            serde_json::json!({ "pw": pw, "argmin_face_pw": face })
        }
        WhichArg::Apw => {
            let (apw, face) =
                fwpoly::condnum::affine_pyramidal_width_detailed(&p, args.face_cap)?;
            serde_json::json!({ "apw": apw, "argmin_face_apw": face })
        }
        WhichArg::Vf => {
            let (vf, facet) =
                fwpoly::condnum::vertex_facet_distance_detailed(&p, args.face_cap)?;
            serde_json::json!({ "vf": vf, "argmin_facet_vf": facet })
        }
    };
    println!("{out}");
    Ok(0)
}

fn cmd_verify(args: VerifyArgs) -> Result<u8> {
    let outcomes = run_all(args.seed, args.quick);
    let mut all_ok = true;
    for o in &outcomes {
        let tag = if o.passed { "PASS" } else { "FAIL" };
        println!("{tag}  {:<26} {}", o.name, o.details);
        all_ok &= o.passed;
    }
    if all_ok {
        println!("all {} checks passed (seed {})", outcomes.len(), args.seed);
        Ok(0)
    } else {
        eprintln!("property checks failed (seed {})", args.seed);
        Ok(1)
    }
}
