//! `qsocp` command-line front end.
//!
//! Exit codes: 0 optimal, 2 primal infeasible, 3 dual infeasible, 4 iteration
//! limit, 5 numerical error, 64 usage or input error.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use qsocp::problems::{gen_lasso, gen_mars_landing, gen_portfolio_with_risk, gen_quadcopter_mpc, read_instance, write_instance};
use qsocp::profile::{perf_profiles, read_records, write_profiles, write_records, BenchRecord, FAILED};
use qsocp::{
    analyze_family, deserialize_plan, emit_parsing_info, serialize_plan, solve, CustomizationPlan, ProblemData,
    ProblemFamily, Settings, Status,
};

const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "qsocp", version, about = "Interior-point solver for quadratic second-order cone programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance file.
    Solve {
        instance: PathBuf,
        /// Customization plan produced by `analyze`.
        #[arg(long)]
        plan: Option<PathBuf>,
        #[command(flatten)]
        settings: SettingsArgs,
    },
    /// Write a generated instance file.
    Generate {
        #[command(subcommand)]
        family: Family,
    },
    /// Analyze the family of an instance and write its customization plan.
    Analyze {
        instance: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Print the map from data entries to storage locations.
    ParsingInfo {
        instance: PathBuf,
        #[arg(long)]
        plan: Option<PathBuf>,
    },
    /// Time solves of instance files and generated problems; writes CSV records.
    Bench {
        instances: Vec<PathBuf>,
        /// Generated problems, e.g. `mars:25:48`, `portfolio:5:10:1`,
        /// `lasso:10:2:1`, `quadcopter:15`.
        #[arg(long = "gen", value_name = "SPEC")]
        generated: Vec<String>,
        /// One configuration per tolerance; each sets all four termination tolerances.
        #[arg(long, value_delimiter = ',', default_value = "1e-8")]
        tolerances: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        repeats: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        settings: SettingsArgs,
    },
    /// Compute performance profiles from benchmark records.
    Profiles {
        records: Vec<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum Family {
    /// Portfolio optimization with a factor risk model.
    Portfolio {
        #[arg(long)]
        k: usize,
        /// n / k.
        #[arg(long)]
        ratio: usize,
        /// Risk aversion.
        #[arg(long, default_value_t = 1.0)]
        rho: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Sparse regression.
    Lasso {
        #[arg(long)]
        n: usize,
        /// m / n.
        #[arg(long)]
        ratio: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Fuel-optimal powered descent.
    Mars {
        #[arg(long = "N")]
        nodes: usize,
        /// Flight time in seconds.
        #[arg(long)]
        tf: f64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Quadcopter model predictive control.
    Quadcopter {
        #[arg(long = "N")]
        horizon: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Args, Clone, Copy)]
struct SettingsArgs {
    #[arg(long)]
    eps_feas: Option<f64>,
    #[arg(long)]
    eps_gap: Option<f64>,
    #[arg(long)]
    eps_abs: Option<f64>,
    #[arg(long)]
    eps_rel: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Static regularization of the KKT diagonal.
    #[arg(long)]
    static_reg: Option<f64>,
}

impl SettingsArgs {
    fn apply(self, mut s: Settings) -> Settings {
        s.eps_feas = self.eps_feas.unwrap_or(s.eps_feas);
        s.eps_gap = self.eps_gap.unwrap_or(s.eps_gap);
        s.eps_abs = self.eps_abs.unwrap_or(s.eps_abs);
        s.eps_rel = self.eps_rel.unwrap_or(s.eps_rel);
        s.max_iter = self.max_iter.unwrap_or(s.max_iter);
        s.delta_s = self.static_reg.unwrap_or(s.delta_s);
        s
    }
}

fn status_exit(status: Status) -> u8 {
    match status {
        Status::Optimal => 0,
        Status::PrimalInfeasible => 2,
        Status::DualInfeasible => 3,
        Status::MaxIterations => 4,
        Status::NumericalError => 5,
    }
}

fn load(path: &Path) -> Result<ProblemData> {
    read_instance(path).with_context(|| format!("reading instance {}", path.display()))
}

fn load_plan(path: &Path) -> Result<CustomizationPlan> {
    let bytes = std::fs::read(path).with_context(|| format!("reading plan {}", path.display()))?;
    deserialize_plan(&bytes).with_context(|| format!("decoding plan {}", path.display()))
}

fn cmd_solve(instance: &Path, plan: Option<&Path>, settings: Settings) -> Result<u8> {
    let problem = load(instance)?;
    let plan = plan.map(load_plan).transpose()?;
    let r = solve(&problem, &settings, plan.as_ref())?;
    let res = &r.residuals;
    let mut out = io::stdout().lock();
    writeln!(out, "status      {}", r.status)?;
    writeln!(out, "objective   {:.12e}", r.objective)?;
    writeln!(out, "iterations  {}", r.iterations)?;
    writeln!(out, "pres_eq     {:.3e}", res.pres_eq)?;
    writeln!(out, "pres_ineq   {:.3e}", res.pres_ineq)?;
    writeln!(out, "dres        {:.3e}", res.dres)?;
    writeln!(out, "gap         {:.3e}", res.gap)?;
    writeln!(out, "time_ms     {:.3}", r.solve_time.as_secs_f64() * 1e3)?;
    Ok(status_exit(r.status))
}

fn cmd_generate(family: &Family) -> Result<()> {
    let (problem, output) = match family {
        Family::Portfolio { k, ratio, rho, seed, output } => (gen_portfolio_with_risk(*k, *ratio, *rho, *seed)?, output),
        Family::Lasso { n, ratio, seed, output } => (gen_lasso(*n, *ratio, *seed)?, output),
        Family::Mars { nodes, tf, output } => (gen_mars_landing(*nodes, *tf)?, output),
        Family::Quadcopter { horizon, output } => (gen_quadcopter_mpc(*horizon)?, output),
    };
    write_instance(output, &problem).with_context(|| format!("writing {}", output.display()))?;
    println!("wrote {} (n={}, p={}, m={})", output.display(), problem.n(), problem.p(), problem.m());
    Ok(())
}

fn cmd_analyze(instance: &Path, output: &Path) -> Result<()> {
    let plan = analyze_family(&ProblemFamily::from_problem(&load(instance)?))?;
    std::fs::write(output, serialize_plan(&plan)).with_context(|| format!("writing {}", output.display()))?;
    println!(
        "kkt_dim {}  kkt_nnz {}  l_nnz {}  fill_in {}",
        plan.kkt_dim(),
        plan.kkt_nnz(),
        plan.l_nnz(),
        plan.fill_in()
    );
    Ok(())
}

fn cmd_parsing_info(instance: &Path, plan: Option<&Path>) -> Result<()> {
    let family = ProblemFamily::from_problem(&load(instance)?);
    let plan = match plan {
        Some(p) => load_plan(p)?,
        None => analyze_family(&family)?,
    };
    print!("{}", emit_parsing_info(&family, &plan)?.to_text());
    Ok(())
}

/// Parse a `--gen` spec into a problem id and instance.
fn generate_spec(spec: &str) -> Result<(String, ProblemData)> {
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |i: usize| -> Result<f64> {
        let s = parts.get(i).with_context(|| format!("`{spec}`: missing field {i}"))?;
        s.parse().with_context(|| format!("`{spec}`: bad number `{s}`"))
    };
    let int = |i: usize| num(i).map(|v| v as usize);
    let seed = |i: usize| parts.get(i).map_or(Ok(0), |s| s.parse::<u64>().with_context(|| format!("bad seed `{s}`")));
    let problem = match parts[0] {
        "mars" => gen_mars_landing(int(1)?, num(2)?)?,
        "portfolio" => gen_portfolio_with_risk(int(1)?, int(2)?, 1.0, seed(3)?)?,
        "lasso" => gen_lasso(int(1)?, int(2)?, seed(3)?)?,
        "quadcopter" => gen_quadcopter_mpc(int(1)?)?,
        other => bail!("unknown generator `{other}`"),
    };
    Ok((spec.to_owned(), problem))
}

fn bench_record(problem: &str, config: &str, problem_data: &ProblemData, settings: &Settings) -> BenchRecord {
    let start = Instant::now();
    let out = solve(problem_data, settings, None);
    let time_s = start.elapsed().as_secs_f64();
    let (status, objective, iterations) = match out {
        Ok(r) => (r.status.code().to_owned(), r.objective, r.iterations),
        Err(_) => (FAILED.to_owned(), f64::NAN, 0),
    };
    BenchRecord { problem: problem.to_owned(), config: config.to_owned(), time_s, status, objective, iterations }
}

fn cmd_bench(
    instances: &[PathBuf],
    generated: &[String],
    tolerances: &[f64],
    repeats: usize,
    output: Option<&Path>,
    base: Settings,
) -> Result<()> {
    let mut problems = Vec::new();
    for path in instances {
        problems.push((path.display().to_string(), load(path)?));
    }
    for spec in generated {
        problems.push(generate_spec(spec)?);
    }
    if problems.is_empty() {
        bail!("nothing to benchmark");
    }
    let mut records = Vec::new();
    for (id, p) in &problems {
        for &tol in tolerances {
            let settings = Settings { eps_feas: tol, eps_gap: tol, eps_abs: tol, eps_rel: tol, ..base };
            let config = format!("tol={tol:e}");
            for _ in 0..repeats.max(1) {
                let rec = bench_record(id, &config, p, &settings);
                eprintln!("{id:<24} {config:<10} {:<7} {:>10.3} ms", rec.status, rec.time_s * 1e3);
                records.push(rec);
            }
        }
    }
    records.sort_by(|a, b| (&a.problem, &a.config).cmp(&(&b.problem, &b.config)));
    match output {
        Some(path) => write_records(BufWriter::new(File::create(path)?), &records)?,
        None => write_records(io::stdout().lock(), &records)?,
    }
    Ok(())
}

fn cmd_profiles(paths: &[PathBuf], output: Option<&Path>) -> Result<()> {
    let mut records = Vec::new();
    for path in paths {
        let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        records.extend(read_records(BufReader::new(f)).with_context(|| format!("reading {}", path.display()))?);
    }
    let profiles = perf_profiles(&records)?;
    match output {
        Some(path) => {
            write_profiles(BufWriter::new(File::create(path)?), &profiles)?;
            println!("{:<16} {:>8} {:>8}", "config", "ρʳ(1)", "solved");
            for c in &profiles.relative {
                println!("{:<16} {:>8.3} {:>8.3}", c.solver, c.eval(1.0), c.eval(f64::MAX));
            }
        }
        None => write_profiles(io::stdout().lock(), &profiles)?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<u8> {
    match &cli.command {
        Command::Solve { instance, plan, settings } => {
            cmd_solve(instance, plan.as_deref(), settings.apply(Settings::default()))
        }
        Command::Generate { family } => cmd_generate(family).map(|_| 0),
        Command::Analyze { instance, output } => cmd_analyze(instance, output).map(|_| 0),
        Command::ParsingInfo { instance, plan } => cmd_parsing_info(instance, plan.as_deref()).map(|_| 0),
        Command::Bench { instances, generated, tolerances, repeats, output, settings } => cmd_bench(
            instances,
            generated,
            tolerances,
            *repeats,
            output.as_deref(),
            settings.apply(Settings::default()),
        )
        .map(|_| 0),
        Command::Profiles { records, output } => cmd_profiles(records, output.as_deref()).map(|_| 0),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
