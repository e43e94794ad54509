use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use beliefplan::bench::{self, BenchConfig, Method, OracleSpec};
use beliefplan::belief::BeliefState;
use beliefplan::compile::compile;
use beliefplan::executive::{ExecConfig, DEFAULT_BUDGET};
use beliefplan::pddl::{parse_domain, parse_problem, write_domain};
use beliefplan::planner::{plan_with, PlannerConfig, SearchMode};
use beliefplan::sim::{self, GraphDoc, LoadedTask, Task};

#[derive(Parser)]
#[command(name = "beliefplan", version, about = "Belief-space task planning and symbolic benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Auto,
    Bfs,
    Gbfs,
}

impl From<Mode> for SearchMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Auto => SearchMode::Auto,
            Mode::Bfs => SearchMode::Bfs,
            Mode::Gbfs => SearchMode::Gbfs,
        }
    }
}

#[derive(clap::Args)]
struct TaskArgs {
    /// Shipped task: cup-pick-place, drawer-cleaning or sort-weight.
    #[arg(long, conflicts_with = "dir")]
    task: Option<String>,
    /// Directory holding domain.bpddl, problem.bpddl and world.json.
    #[arg(long)]
    dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the determinized classical domain.
    Compile {
        domain: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Plan from a problem's initial belief.
    Plan {
        domain: PathBuf,
        problem: PathBuf,
        #[arg(long, value_enum, default_value = "auto")]
        mode: Mode,
    },
    /// Run one episode of the agent.
    Run {
        #[command(flatten)]
        task: TaskArgs,
        /// ground-truth | noisy:<p_flip>,<p_abstain> | replay:<trace file>
        #[arg(long, default_value = "ground-truth")]
        oracle: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
        #[arg(long, value_enum, default_value = "auto")]
        mode: Mode,
        /// Write the JSONL trace here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Sweep methods, tasks and seeds.
    Bench {
        /// Comma-separated task names.
        #[arg(long, value_delimiter = ',', default_values_t = sim::TASK_NAMES.map(String::from))]
        tasks: Vec<String>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![Method::Bklva, Method::Random])]
        methods: Vec<Method>,
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
        #[arg(long, default_value = "ground-truth")]
        oracle: String,
        #[arg(long, value_enum, default_value = "auto")]
        mode: Mode,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Exit nonzero when a threshold fails.
        #[arg(long)]
        check: bool,
    },
    /// Check a graph file and print its optimal length.
    ValidateGraph { file: PathBuf },
    /// Write the expanded graph of a task variant as JSON.
    ExportGraph {
        #[command(flatten)]
        task: TaskArgs,
        #[arg(long, default_value_t = 0)]
        variant: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn emit(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn custom_task(dir: &Path) -> Result<Arc<Task>> {
    let name = dir.file_name().and_then(|s| s.to_str()).unwrap_or("task");
    let t = Task::from_sources(
        name,
        &read(&dir.join("domain.bpddl"))?,
        &read(&dir.join("problem.bpddl"))?,
        &read(&dir.join("world.json"))?,
    )?;
    Ok(Arc::new(t))
}

fn load(args: &TaskArgs, seed: u64) -> Result<LoadedTask> {
    match (&args.task, &args.dir) {
        (Some(name), _) => Ok(sim::load_task(name, seed)?),
        (None, Some(dir)) => Ok(sim::load_custom(custom_task(dir)?, seed)?),
        (None, None) => bail!("give --task or --dir"),
    }
}

fn planner(mode: Mode) -> PlannerConfig {
    PlannerConfig {
        mode: mode.into(),
        ..PlannerConfig::default()
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Compile { domain, output } => {
            let d = parse_domain(&read(&domain)?)?;
            let c = compile(&d)?;
            emit(&write_domain(&c.classical), output.as_deref())?;
        }
        Command::Plan { domain, problem, mode } => {
            let d = parse_domain(&read(&domain)?)?;
            let p = parse_problem(&read(&problem)?, &d)?;
            let c = compile(&d)?;
            let b = BeliefState::from_problem(&c, &p)?;
            let goal = c.lower_goal(&p.goal)?;
            let plan = plan_with(&b, &goal, &c, &planner(mode))?;
            for l in plan.labels() {
                println!("{l}");
            }
            println!("; {} actions", plan.len());
        }
        Command::Run {
            task,
            oracle,
            seed,
            budget,
            mode,
            trace,
        } => {
            let lt = load(&task, seed)?;
            let spec: OracleSpec = oracle.parse().map_err(anyhow::Error::msg)?;
            let mut o = spec.build(seed)?;
            let cfg = ExecConfig {
                budget,
                planner: planner(mode),
            };
            let r = bench::run_bklva(&lt, o.as_mut(), &cfg)?;
            if let Some(path) = trace {
                emit(&r.trace_jsonl(), Some(&path))?;
            }
            let optimal = lt.optimal_length();
            println!(
                "task {} variant {} seed {seed}: {} after {} steps, {} replans (optimal {optimal}, SPL {:.2})",
                lt.task.name,
                lt.graph.variant,
                r.termination,
                r.steps,
                r.replans,
                bench::spl_one(r.success, r.steps, optimal)
            );
            if !r.success {
                return Ok(ExitCode::from(2));
            }
        }
        Command::Bench {
            tasks,
            methods,
            seeds,
            budget,
            oracle,
            mode,
            csv,
            check,
        } => {
            if seeds == 0 {
                bail!("--seeds must be at least 1");
            }
            if methods.is_empty() {
                bail!("no methods given");
            }
            let config = BenchConfig {
                tasks,
                methods,
                seeds,
                budget,
                oracle: oracle.parse().map_err(anyhow::Error::msg)?,
                planner: planner(mode),
            };
            let report = bench::run_bench(&config);
            print!("{}", bench::format_table(&report.rows));
            let text = bench::to_csv(&report.rows);
            match csv {
                Some(path) => emit(&text, Some(&path))?,
                None => print!("\n{text}"),
            }
            if check {
                let failures = bench::check(&report, &config.oracle);
                for f in &failures {
                    eprintln!("FAIL {f}");
                }
                if !failures.is_empty() {
                    return Ok(ExitCode::FAILURE);
                }
            }
        }
        Command::ValidateGraph { file } => {
            let doc: GraphDoc = serde_json::from_str(&read(&file)?).context("parsing graph file")?;
            match doc.validate() {
                Ok(s) => println!(
                    "ok: {} nodes, {} edges, {} goal nodes, optimal length {}",
                    s.nodes, s.edges, s.goals, s.optimal_length
                ),
                Err(errs) => {
                    for e in errs {
                        eprintln!("{e}");
                    }
                    return Ok(ExitCode::FAILURE);
                }
            }
        }
        Command::ExportGraph { task, variant, output } => {
            let t = match (&task.task, &task.dir) {
                (Some(name), _) => sim::task(name)?,
                (None, Some(dir)) => custom_task(dir)?,
                (None, None) => bail!("give --task or --dir"),
            };
            let g = t.build_graph(variant)?;
            let doc = GraphDoc::from_graph(&g);
            emit(&(serde_json::to_string_pretty(&doc)? + "\n"), output.as_deref())?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
