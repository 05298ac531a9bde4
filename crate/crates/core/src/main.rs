use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use constraints_consensus::bounds::{epsilon_bound, min_samples, min_samples_exact};
use constraints_consensus::consensus::{EngineConfig, Simulation, StepOrder};
use constraints_consensus::removal::remove_constraints_with;
use constraints_consensus::scenarios::{build_graph, run_experiment_with, write_results_csv, Scenario};
use constraints_consensus::{
    BoxDomain, ConstraintPool, Error, Family, Protocol, Result, ScenarioKind, ScenarioSpec, Topology,
};

#[derive(Parser)]
#[command(name = "ccsim", version, about = "Distributed constraints consensus simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a constraint pool (and optionally its graph) as JSON.
    Gen {
        #[command(flatten)]
        setup: Setup,
        #[arg(long)]
        graph_out: Option<PathBuf>,
    },
    /// Run active constraints consensus.
    RunAcc(RunArgs),
    /// Run vertex constraints consensus.
    RunVcc(RunArgs),
    /// Run quantized vertex constraints consensus.
    RunQvcc {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 5)]
        bandwidth: usize,
    },
    /// Distributed removal of the `r` constraints with the largest multipliers.
    Remove {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        r: usize,
        #[arg(long, value_enum, default_value_t = ProtocolArg::Acc)]
        protocol: ProtocolArg,
        #[arg(long, default_value_t = 5)]
        bandwidth: usize,
    },
    /// Violation-probability bound, or the sample size for a target epsilon.
    Bounds {
        #[arg(long, default_value_t = 1e-9)]
        beta: f64,
        #[arg(long)]
        zeta: u64,
        #[arg(long, conflicts_with = "epsilon", required_unless_present = "epsilon")]
        n: Option<u64>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long, value_enum, default_value_t = OutFormat::Json)]
        out: OutFormat,
    },
    /// Run every protocol over a seed range and tabulate the results.
    Bench {
        #[command(flatten)]
        setup: Setup,
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        #[arg(long, default_value_t = 5)]
        bandwidth: usize,
        #[arg(long)]
        parallel: bool,
        #[arg(long, value_enum, default_value_t = OutFormat::Csv)]
        out: OutFormat,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Ellipsoid,
    Classification,
    Lp,
}

#[derive(Clone, Copy, ValueEnum)]
enum TopologyArg {
    Chain,
    Geometric,
    Complete,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProtocolArg {
    Acc,
    Vcc,
    Qvcc,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

#[derive(Args)]
struct Setup {
    #[arg(long, value_enum, default_value_t = KindArg::Ellipsoid)]
    kind: KindArg,
    #[arg(long, value_enum, default_value_t = TopologyArg::Geometric)]
    topology: TopologyArg,
    #[arg(long, default_value_t = 10)]
    nodes: usize,
    #[arg(long, default_value_t = 1000)]
    n_constraints: usize,
    /// `q` for ellipsoids, `p` for classifiers, `d` for linear programs.
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Read the pool from JSON instead of generating it.
    #[arg(long)]
    pool: Option<PathBuf>,
    /// Comma-separated objective for a linear pool read with `--pool`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    objective: Option<Vec<f64>>,
    /// Half width of the box for a linear pool read with `--pool`.
    #[arg(long, default_value_t = 10.0)]
    box_half_width: f64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    setup: Setup,
    #[arg(long, value_enum, default_value_t = OutFormat::Json)]
    out: OutFormat,
    /// Step nodes on a thread pool.
    #[arg(long)]
    parallel: bool,
    /// Write the final simulation snapshot here.
    #[arg(long)]
    snapshot: Option<PathBuf>,
}

impl Setup {
    fn spec(&self) -> ScenarioSpec {
        let kind = match self.kind {
            KindArg::Ellipsoid => ScenarioKind::EllipsoidMixture,
            KindArg::Classification => ScenarioKind::GaussianClassification,
            KindArg::Lp => ScenarioKind::UncertainLp,
        };
        ScenarioSpec::new(kind, self.n_constraints, self.dim, self.nodes, self.seed)
    }

    fn topology(&self) -> Topology {
        match self.topology {
            TopologyArg::Chain => Topology::Chain,
            TopologyArg::Geometric => Topology::Geometric,
            TopologyArg::Complete => Topology::Complete,
        }
    }

    fn scenario(&self) -> Result<Scenario> {
        let Some(path) = &self.pool else {
            return self.spec().generate();
        };
        let pool = ConstraintPool::load(path)?;
        if pool.family() != Family::LinearHalfspace {
            let p = constraints_consensus::ConvexProgram::for_pool(&pool, vec![], vec![], BoxDomain::cube(0, 1.0))?;
            let (objective, domain) = (p.objective().to_vec(), p.domain().clone());
            return Ok(Scenario { pool, objective, domain });
        }
        let d = pool.decision_dim();
        let objective = self.objective.clone().unwrap_or_else(|| vec![1.0; d]);
        Ok(Scenario {
            pool,
            objective,
            domain: BoxDomain::cube(d, self.box_half_width),
        })
    }

    fn writer(&self) -> Result<Box<dyn Write>> {
        Ok(match &self.output {
            Some(p) => Box::new(File::create(p)?),
            None => Box::new(io::stdout().lock()),
        })
    }
}

fn protocol(arg: ProtocolArg, bandwidth: usize) -> Protocol {
    match arg {
        ProtocolArg::Acc => Protocol::Acc,
        ProtocolArg::Vcc => Protocol::Vcc,
        ProtocolArg::Qvcc => Protocol::Qvcc { bandwidth },
    }
}

fn config(parallel: bool) -> EngineConfig {
    EngineConfig {
        order: if parallel { StepOrder::Parallel } else { StepOrder::Sequential },
        ..EngineConfig::default()
    }
}

fn run(args: &RunArgs, protocol: Protocol) -> Result<bool> {
    let setup = &args.setup;
    let scenario = setup.scenario()?;
    let program = scenario.program()?;
    let graph = build_graph(setup.topology(), setup.nodes, setup.seed)?;
    let partition = constraints_consensus::consensus::even_partition(scenario.pool.len(), setup.nodes);
    let mut sim = Simulation::new(&program, &graph, &partition, protocol, config(args.parallel))?;
    let report = sim.run()?;
    if let Some(path) = &args.snapshot {
        std::fs::write(path, sim.snapshot().to_json()?)?;
    }
    let mut w = setup.writer()?;
    match args.out {
        OutFormat::Json => writeln!(w, "{}", report.to_json()?)?,
        OutFormat::Csv => report.write_csv(&mut w)?,
    }
    log::info!(
        "{} finished after {} rounds, converged = {}",
        protocol.name(),
        report.rounds,
        report.converged
    );
    Ok(report.converged && !report.infeasible_detected)
}

fn execute(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Gen { setup, graph_out } => {
            let scenario = setup.scenario()?;
            writeln!(setup.writer()?, "{}", scenario.pool.to_json()?)?;
            if let Some(path) = graph_out {
                build_graph(setup.topology(), setup.nodes, setup.seed)?.save(path)?;
            }
            Ok(true)
        }
        Command::RunAcc(args) => run(&args, Protocol::Acc),
        Command::RunVcc(args) => run(&args, Protocol::Vcc),
        Command::RunQvcc { run: args, bandwidth } => run(&args, Protocol::Qvcc { bandwidth }),
        Command::Remove {
            run: args,
            r,
            protocol: p,
            bandwidth,
        } => {
            let setup = &args.setup;
            let scenario = setup.scenario()?;
            let program = scenario.program()?;
            let graph = build_graph(setup.topology(), setup.nodes, setup.seed)?;
            let partition = constraints_consensus::consensus::even_partition(scenario.pool.len(), setup.nodes);
            let report =
                remove_constraints_with(&graph, &program, &partition, r, protocol(p, bandwidth), config(args.parallel))?;
            let mut w = setup.writer()?;
            match args.out {
                OutFormat::Json => writeln!(w, "{}", report.to_json()?)?,
                OutFormat::Csv => {
                    let mut c = csv::Writer::from_writer(w);
                    c.write_record(["stage", "removed", "removed_id", "multiplier", "j_before", "j_star"])?;
                    for s in &report.per_stage {
                        c.write_record([
                            s.stage.to_string(),
                            s.removed.to_string(),
                            s.removed_id.to_string(),
                            s.multiplier.to_string(),
                            s.j_before.to_string(),
                            s.j_star.to_string(),
                        ])?;
                    }
                    c.flush()?;
                }
            }
            Ok(report.final_solution.is_feasible())
        }
        Command::Bounds {
            beta,
            zeta,
            n,
            epsilon,
            out,
        } => {
            let (n, eps, exact) = match (n, epsilon) {
                (Some(n), _) => (n, epsilon_bound(beta, zeta, n)?, None),
                (None, Some(e)) => (min_samples(beta, zeta, e)?, e, Some(min_samples_exact(beta, zeta, e)?)),
                (None, None) => return Err(Error::InvalidInput("pass --n or --epsilon".into())),
            };
            let mut w = io::stdout().lock();
            match out {
                OutFormat::Json => {
                    let v = json!({"beta": beta, "zeta": zeta, "n": n, "epsilon": eps, "n_exact": exact});
                    writeln!(w, "{}", serde_json::to_string_pretty(&v)?)?;
                }
                OutFormat::Csv => {
                    writeln!(w, "beta,zeta,n,epsilon,n_exact")?;
                    let exact = exact.map(|e| e.to_string()).unwrap_or_default();
                    writeln!(w, "{beta},{zeta},{n},{eps},{exact}")?;
                }
            }
            Ok(true)
        }
        Command::Bench {
            setup,
            seeds,
            bandwidth,
            parallel,
            out,
        } => {
            let order = if parallel { StepOrder::Parallel } else { StepOrder::Sequential };
            let mut results = Vec::new();
            for seed in setup.seed..setup.seed + seeds {
                let mut spec = setup.spec();
                spec.seed = seed;
                for p in [Protocol::Acc, Protocol::Vcc, Protocol::Qvcc { bandwidth }] {
                    results.push(run_experiment_with(&spec, setup.topology(), p, order)?);
                }
            }
            let w = setup.writer()?;
            match out {
                OutFormat::Csv => write_results_csv(&results, w)?,
                OutFormat::Json => {
                    let mut w = w;
                    writeln!(w, "{}", serde_json::to_string_pretty(&results)?)?;
                }
            }
            Ok(results.iter().all(|r| r.passed))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("no feasible consensus solution");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
