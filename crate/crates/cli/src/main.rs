use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use ducap_cli::{run_bench, run_method, BenchConfig, Method, RunReport, SolveSettings};
use ducap_core::studio::{generate_instance, instance_to_json, read_instance, write_csv, GeneratorConfig, ServiceMix};
use ducap_core::ProblemInstance;

/// Capacity planning for disaggregated RAN units under demand uncertainty.
#[derive(Parser)]
#[command(name = "ducap", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance and write it as JSON.
    Generate {
        #[command(flatten)]
        gen: GenArgs,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve one instance with one method and emit a report row.
    Solve {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value = "abd", value_parser = parse_method)]
        method: Method,
        /// Shorthand for `--method abd`.
        #[arg(long)]
        abd: bool,
        #[command(flatten)]
        solver: SolverArgs,
        /// Report CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the plan (capacities, assignments, latencies) as JSON.
        #[arg(long)]
        solution: Option<PathBuf>,
    },
    /// Solve one instance with several methods, one report row each.
    Compare {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_delimiter = ',', default_value = "milp,bd,abd,fixdu", value_parser = parse_method)]
        methods: Vec<Method>,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the sweeps of a JSON bench config, one CSV per sweep.
    Bench {
        config: PathBuf,
        /// Output directory.
        #[arg(long, default_value = "bench-out")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct InputArgs {
    /// Instance JSON; generated from the generator flags when omitted.
    instance: Option<PathBuf>,
    #[command(flatten)]
    gen: GenArgs,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    users: usize,
    #[arg(long, default_value_t = 3)]
    scenarios: usize,
    #[arg(long, default_value_t = 2)]
    n_cu: usize,
    /// Service class probabilities `embb,mmtc,urllc`.
    #[arg(long, value_delimiter = ',')]
    mix: Option<Vec<f64>>,
    /// Every scenario reuses the user positions of the first.
    #[arg(long)]
    shared_positions: bool,
}

#[derive(Args)]
struct SolverArgs {
    /// Capacity weight; overrides the instance value.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Solve Benders subproblems in parallel.
    #[arg(long)]
    parallel_sp: bool,
    /// Let the Benders master MILP stop within this share of the current gap.
    #[arg(long)]
    master_gap: Option<f64>,
}

fn parse_method(s: &str) -> Result<Method> {
    s.parse()
}

impl GenArgs {
    fn config(&self) -> Result<GeneratorConfig> {
        let mut cfg = GeneratorConfig {
            seed: self.seed,
            users: self.users,
            n_scenarios: self.scenarios,
            n_cu: self.n_cu,
            shared_positions: self.shared_positions,
            ..Default::default()
        };
        if let Some(m) = &self.mix {
            let &[embb, mmtc, urllc] = m.as_slice() else { bail!("--mix takes three probabilities, got {}", m.len()) };
            cfg.mix = ServiceMix { embb, mmtc, urllc };
        }
        Ok(cfg)
    }
}

impl InputArgs {
    fn load(&self) -> Result<ProblemInstance> {
        match &self.instance {
            Some(path) => read_instance(path).with_context(|| format!("reading {}", path.display())),
            None => Ok(generate_instance(&self.gen.config()?)?),
        }
    }
}

impl SolverArgs {
    fn settings(&self) -> SolveSettings {
        let d = SolveSettings::default();
        SolveSettings {
            gamma: self.gamma,
            epsilon: self.epsilon.unwrap_or(d.epsilon),
            max_iter: self.max_iter.unwrap_or(d.max_iter),
            parallel_sp: self.parallel_sp,
            master_gap: self.master_gap.unwrap_or(d.master_gap),
        }
    }
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(io::stdout().lock()),
    })
}

/// 0 when everything finished, 2 when some Benders run stopped with an open gap.
fn exit_for(reports: &[RunReport]) -> ExitCode {
    if reports.iter().any(RunReport::is_gap_open) {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Generate { gen, out } => {
            let inst = generate_instance(&gen.config()?)?;
            sink(&out)?.write_all(instance_to_json(&inst).as_bytes())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Solve { input, method, abd, solver, out, solution } => {
            let method = if abd { Method::Abd } else { method };
            let inst = input.load()?;
            let (report, plan) = run_method(&inst, method, &solver.settings())?;
            if let Some(path) = solution {
                let Some(plan) = plan else { bail!("no plan to write: status {}", report.status) };
                let text = serde_json::to_string_pretty(&plan)? + "\n";
                fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
            }
            let reports = [report];
            write_csv(&reports, &RunReport::HEADER, sink(&out)?)?;
            Ok(exit_for(&reports))
        }
        Command::Compare { input, methods, solver, out } => {
            let inst = input.load()?;
            let settings = solver.settings();
            let mut reports = Vec::new();
            for m in methods {
                reports.push(run_method(&inst, m, &settings)?.0);
            }
            write_csv(&reports, &RunReport::HEADER, sink(&out)?)?;
            Ok(exit_for(&reports))
        }
        Command::Bench { config, out } => {
            let text = fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let cfg = BenchConfig::from_json(&text)?;
            for f in run_bench(&cfg, &out)? {
                eprintln!("wrote {}", f.display());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
