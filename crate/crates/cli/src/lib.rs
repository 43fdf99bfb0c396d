//! Command-line surface of the planner.
//!
//! Exit codes: 0 success, 1 internal error, 2 usage error (from argument
//! parsing), 3 validation failure, 4 solver stopped at a limit with a gap.

use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use mecplan_core::generate::{generate_instance, GeneratorConfig};
use mecplan_core::io;
use mecplan_core::milp::{build_p1, export_lp, SolveLimits, SolveStatus};
use mecplan_core::pipeline::{
    run_two_step_with_progress, sweep_infrastructure, sweep_task_size, Policy,
};
use mecplan_core::units::fmt_sig;
use mecplan_core::{validate_instance, validate_plan, Instance};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_GAP_LIMIT: i32 = 4;

#[derive(Parser)]
#[command(
    name = "mecplan",
    about = "Minimum-latency task-offloading planner for mmWave mesh backhaul networks",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct SolveOpts {
    /// Bandwidth policy for step 2: hbh (per link) or minR (per path).
    /// Defaults to hbh, except sweep-infra which defaults to minR.
    #[arg(long)]
    policy: Option<Policy>,
    /// Override the instance's saturation coefficient xi in (0, 1].
    #[arg(long)]
    xi: Option<f64>,
    /// Wall-clock budget for the solver, e.g. "30s", "5m", or plain seconds.
    #[arg(long, value_parser = parse_duration)]
    time_limit: Option<Duration>,
    /// Maximum number of search nodes to explore.
    #[arg(long)]
    node_limit: Option<u64>,
}

impl SolveOpts {
    fn policy(&self) -> Policy {
        self.policy.unwrap_or(Policy::Hbh)
    }

    fn limits(&self) -> SolveLimits {
        SolveLimits {
            node_limit: self.node_limit,
            time_limit: self.time_limit,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a seeded instance file.
    Generate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of base stations.
        #[arg(long, default_value_t = 6)]
        bs: usize,
        /// Antenna interfaces per base station.
        #[arg(long, default_value_t = 2)]
        interfaces: usize,
        /// Number of user tasks.
        #[arg(long, default_value_t = 10)]
        tasks: usize,
        /// Smallest task size in GB.
        #[arg(long, default_value_t = 0.1)]
        size_min: f64,
        /// Largest task size in GB.
        #[arg(long, default_value_t = 1.0)]
        size_max: f64,
        /// Edge servers as "bs:capacity_gb" pairs, comma separated.
        #[arg(long, default_value = "1:3.2,3:3.6")]
        servers: String,
        /// Cloud-attached base stations, comma separated (default: last BS).
        #[arg(long)]
        cloud: Option<String>,
        /// Wired cloud latency in seconds.
        #[arg(long, default_value_t = 0.2)]
        theta: f64,
        /// Saturation coefficient xi.
        #[arg(long, default_value_t = 0.95)]
        xi: f64,
        /// Output path for the instance file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Check an instance file against every structural invariant.
    Validate {
        instance: PathBuf,
        /// Also check a saved plan against the instance.
        #[arg(long)]
        plan: Option<PathBuf>,
    },
    /// Step 1 only: solve topology, routing, and assignment.
    Plan {
        instance: PathBuf,
        #[command(flatten)]
        opts: SolveOpts,
        /// Output path for the plan (JSON).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the built model in LP interchange format.
        #[arg(long)]
        export_lp: Option<PathBuf>,
    },
    /// Step 2 only: optimize bandwidth for a saved plan.
    Allocate {
        instance: PathBuf,
        /// Saved plan (JSON) from the plan subcommand.
        #[arg(long)]
        plan: PathBuf,
        #[command(flatten)]
        opts: SolveOpts,
        /// Output path for the allocation (JSON).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Full two-step run: plan, allocate, and report.
    Solve {
        instance: PathBuf,
        #[command(flatten)]
        opts: SolveOpts,
        /// Output path for the report (JSON).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the serving-details table (CSV).
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Also write the solved plan (JSON).
        #[arg(long)]
        plan_out: Option<PathBuf>,
    },
    /// Re-solve across task-volume scales and tabulate totals.
    SweepSize {
        instance: PathBuf,
        /// Scale percentages, comma separated.
        #[arg(long, default_value = "60,80,100,120,140,160")]
        scales: String,
        #[command(flatten)]
        opts: SolveOpts,
        /// Output path for the sweep table (CSV).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-solve across interface counts and server-capacity factors.
    SweepInfra {
        instance: PathBuf,
        /// Interface counts, comma separated.
        #[arg(long, default_value = "2,3")]
        interfaces: String,
        /// Capacity factors, comma separated.
        #[arg(long, default_value = "0,0.5,1")]
        factors: String,
        #[command(flatten)]
        opts: SolveOpts,
        /// Output path for the sweep table (CSV).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export a solved topology in DOT format.
    ExportDot {
        instance: PathBuf,
        /// Saved plan (JSON); solved fresh when omitted.
        #[arg(long)]
        plan: Option<PathBuf>,
        #[command(flatten)]
        opts: SolveOpts,
        /// Output path for the graph (DOT).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_duration(s: &str) -> Result<Duration, String> {
    let s = s.trim();
    let (num, mult) = if let Some(stripped) = s.strip_suffix("ms") {
        (stripped, 0.001)
    } else if let Some(stripped) = s.strip_suffix('s') {
        (stripped, 1.0)
    } else if let Some(stripped) = s.strip_suffix('m') {
        (stripped, 60.0)
    } else {
        (s, 1.0)
    };
    let value: f64 = num
        .parse()
        .map_err(|_| format!("invalid duration '{s}'"))?;
    if value < 0.0 {
        return Err(format!("negative duration '{s}'"));
    }
    Ok(Duration::from_secs_f64(value * mult))
}

fn parse_servers(s: &str) -> Result<Vec<(usize, f64)>, String> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|part| {
            let (bs, cap) = part
                .split_once(':')
                .ok_or_else(|| format!("expected bs:capacity_gb, got '{part}'"))?;
            Ok((
                bs.trim().parse().map_err(|_| format!("bad BS id '{bs}'"))?,
                cap.trim()
                    .parse()
                    .map_err(|_| format!("bad capacity '{cap}'"))?,
            ))
        })
        .collect()
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, String> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<T>()
                .map_err(|_| format!("bad {what} '{p}'"))
        })
        .collect()
}

fn load_instance(path: &Path, xi: Option<f64>) -> Result<Instance, (i32, String)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| (EXIT_INTERNAL, format!("cannot read {}: {e}", path.display())))?;
    let mut inst = io::load_instance_str(&text)
        .map_err(|e| (EXIT_VALIDATION, format!("{}: {e}", path.display())))?;
    if let Some(xi) = xi {
        inst.saturation = xi;
    }
    let violations = validate_instance(&inst);
    if !violations.is_empty() {
        let mut msg = format!("{} is invalid:", path.display());
        for v in violations {
            msg.push_str(&format!("\n  - {v}"));
        }
        return Err((EXIT_VALIDATION, msg));
    }
    Ok(inst)
}

fn write_out(path: Option<&Path>, content: &str) -> Result<(), (i32, String)> {
    match path {
        Some(p) => std::fs::write(p, content)
            .map_err(|e| (EXIT_INTERNAL, format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn status_exit(status: &SolveStatus) -> i32 {
    match status {
        SolveStatus::Optimal => EXIT_OK,
        SolveStatus::TimeLimitWithGap(_) => EXIT_GAP_LIMIT,
        SolveStatus::Infeasible => EXIT_VALIDATION,
    }
}

fn progress_printer() -> impl FnMut(&mecplan_core::milp::Progress) {
    |p: &mecplan_core::milp::Progress| {
        let inc = p
            .incumbent
            .map(|v| fmt_sig(v, 6))
            .unwrap_or_else(|| "-".into());
        let gap = p
            .gap
            .map(|g| fmt_sig(g * 100.0, 4) + "%")
            .unwrap_or_else(|| "-".into());
        eprintln!(
            "nodes={} bound={} incumbent={inc} gap={gap}",
            p.nodes,
            fmt_sig(p.best_bound, 6),
        );
    }
}

pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            code
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32, (i32, String)> {
    match cli.command {
        Command::Generate {
            seed,
            bs,
            interfaces,
            tasks,
            size_min,
            size_max,
            servers,
            cloud,
            theta,
            xi,
            out,
        } => {
            let servers = parse_servers(&servers).map_err(|e| (EXIT_VALIDATION, e))?;
            let cloud_bs = match cloud {
                Some(c) => parse_list(&c, "BS id").map_err(|e| (EXIT_VALIDATION, e))?,
                None => vec![bs],
            };
            let cfg = GeneratorConfig {
                seed,
                n_bs: bs,
                interfaces,
                n_tasks: tasks,
                size_range_gb: (size_min, size_max),
                servers,
                cloud_bs,
                cloud_latency_s: theta,
                saturation: xi,
                ..Default::default()
            };
            let inst = generate_instance(&cfg).map_err(|e| (EXIT_VALIDATION, e.to_string()))?;
            let file = io::from_instance(&inst, Some(seed));
            let text = io::serialize_instance_file(&file)
                .map_err(|e| (EXIT_INTERNAL, e.to_string()))?;
            write_out(Some(&out), &text)?;
            eprintln!(
                "generated {} BSs, {} tasks -> {}",
                inst.n_bs(),
                inst.n_tasks(),
                out.display()
            );
            Ok(EXIT_OK)
        }

        Command::Validate { instance, plan } => {
            let inst = load_instance(&instance, None)?;
            if let Some(plan_path) = plan {
                let text = std::fs::read_to_string(&plan_path)
                    .map_err(|e| (EXIT_INTERNAL, format!("cannot read plan: {e}")))?;
                let plan = io::plan_from_json(&text)
                    .map_err(|e| (EXIT_VALIDATION, e.to_string()))?;
                let g = inst
                    .link_graph()
                    .map_err(|e| (EXIT_VALIDATION, e))?;
                let violations = validate_plan(&inst, &g, &plan);
                if !violations.is_empty() {
                    let mut msg = format!("{} is infeasible:", plan_path.display());
                    for v in violations {
                        msg.push_str(&format!("\n  - {v}"));
                    }
                    return Err((EXIT_VALIDATION, msg));
                }
            }
            eprintln!("ok");
            Ok(EXIT_OK)
        }

        Command::Plan {
            instance,
            opts,
            out,
            export_lp: lp_path,
        } => {
            let inst = load_instance(&instance, opts.xi)?;
            let g = inst.link_graph().map_err(|e| (EXIT_VALIDATION, e))?;
            let model = build_p1(&inst, &g);
            if let Some(p) = lp_path {
                write_out(Some(&p), &export_lp(&model))?;
            }
            let mut progress = progress_printer();
            let outcome =
                mecplan_core::milp::solve_p1_with_progress(&model, &opts.limits(), &mut progress)
                    .map_err(|e| (EXIT_INTERNAL, e.to_string()))?;
            match &outcome.status {
                SolveStatus::Optimal => eprintln!(
                    "optimal: objective {} s over {} nodes",
                    fmt_sig(outcome.objective_value.unwrap(), 6),
                    outcome.nodes_explored
                ),
                SolveStatus::TimeLimitWithGap(gap) => eprintln!(
                    "stopped at limit: gap {} after {} nodes",
                    fmt_sig(*gap, 6),
                    outcome.nodes_explored
                ),
                SolveStatus::Infeasible => {
                    return Err((EXIT_VALIDATION, "no feasible routing exists".into()))
                }
            }
            if let Some(plan) = &outcome.plan {
                let json = io::plan_to_json(plan).map_err(|e| (EXIT_INTERNAL, e.to_string()))?;
                write_out(out.as_deref(), &json)?;
            }
            Ok(status_exit(&outcome.status))
        }

        Command::Allocate {
            instance,
            plan,
            opts,
            out,
        } => {
            let inst = load_instance(&instance, opts.xi)?;
            let text = std::fs::read_to_string(&plan)
                .map_err(|e| (EXIT_INTERNAL, format!("cannot read plan: {e}")))?;
            let plan = io::plan_from_json(&text).map_err(|e| (EXIT_VALIDATION, e.to_string()))?;
            let g = inst.link_graph().map_err(|e| (EXIT_VALIDATION, e))?;
            let violations = validate_plan(&inst, &g, &plan);
            if !violations.is_empty() {
                return Err((
                    EXIT_VALIDATION,
                    format!("plan is infeasible: {}", violations[0]),
                ));
            }
            let alloc = match opts.policy() {
                Policy::Hbh => mecplan_core::bwalloc::allocate_p2a(&plan, &inst, &g),
                Policy::MinR => mecplan_core::bwalloc::allocate_p2b(&plan, &inst, &g),
            }
            .map_err(|e| (EXIT_INTERNAL, e.to_string()))?;
            let report = mecplan_core::pipeline::evaluate(&plan, &inst, &g, &alloc)
                .map_err(|e| (EXIT_INTERNAL, e.to_string()))?;
            eprintln!(
                "allocated: total {} s ({})",
                fmt_sig(report.total(opts.policy()), 6),
                opts.policy()
            );
            let json = io::allocation_to_json(&alloc).map_err(|e| (EXIT_INTERNAL, e.to_string()))?;
            write_out(out.as_deref(), &json)?;
            Ok(EXIT_OK)
        }

        Command::Solve {
            instance,
            opts,
            out,
            csv,
            plan_out,
        } => {
            let inst = load_instance(&instance, opts.xi)?;
            let mut progress = progress_printer();
            let result =
                run_two_step_with_progress(&inst, opts.policy(), &opts.limits(), &mut progress)
                    .map_err(|e| (EXIT_VALIDATION, e.to_string()))?;
            let file = io::report_file(&inst, &result);
            let json = io::report_to_json(&file).map_err(|e| (EXIT_INTERNAL, e.to_string()))?;
            write_out(out.as_deref(), &json)?;
            if let Some(p) = csv {
                write_out(Some(&p), &io::report_to_csv(&file))?;
            }
            if let Some(p) = plan_out {
                let json =
                    io::plan_to_json(&result.plan).map_err(|e| (EXIT_INTERNAL, e.to_string()))?;
                write_out(Some(&p), &json)?;
            }
            eprintln!(
                "{}: equal-share {} s, optimized {} s ({})",
                match result.outcome.status {
                    SolveStatus::Optimal => "optimal".to_string(),
                    SolveStatus::TimeLimitWithGap(g) =>
                        format!("limit (gap {})", fmt_sig(g, 4)),
                    SolveStatus::Infeasible => "infeasible".to_string(),
                },
                fmt_sig(result.equal_share_report.total(opts.policy()), 6),
                fmt_sig(result.optimized_report.total(opts.policy()), 6),
                opts.policy()
            );
            Ok(status_exit(&result.outcome.status))
        }

        Command::SweepSize {
            instance,
            scales,
            opts,
            out,
        } => {
            let inst = load_instance(&instance, opts.xi)?;
            let scales: Vec<f64> =
                parse_list(&scales, "scale").map_err(|e| (EXIT_VALIDATION, e))?;
            if scales.iter().any(|&s| s <= 0.0) {
                return Err((EXIT_VALIDATION, "scales must be positive".into()));
            }
            let rows = sweep_task_size(&inst, &scales, opts.policy(), &opts.limits())
                .map_err(|e| (EXIT_VALIDATION, e.to_string()))?;
            write_out(out.as_deref(), &io::size_sweep_to_csv(&rows))?;
            Ok(EXIT_OK)
        }

        Command::SweepInfra {
            instance,
            interfaces,
            factors,
            opts,
            out,
        } => {
            let inst = load_instance(&instance, opts.xi)?;
            let interfaces: Vec<usize> =
                parse_list(&interfaces, "interface count").map_err(|e| (EXIT_VALIDATION, e))?;
            let factors: Vec<f64> =
                parse_list(&factors, "capacity factor").map_err(|e| (EXIT_VALIDATION, e))?;
            if interfaces.iter().any(|&i| i == 0) {
                return Err((EXIT_VALIDATION, "interface counts must be >= 1".into()));
            }
            // The infrastructure comparison is a minimum-rate study unless
            // explicitly overridden.
            let policy = opts.policy.unwrap_or(Policy::MinR);
            let rows = sweep_infrastructure(&inst, &interfaces, &factors, policy, &opts.limits())
                .map_err(|e| (EXIT_VALIDATION, e.to_string()))?;
            write_out(out.as_deref(), &io::infra_sweep_to_csv(&rows))?;
            Ok(EXIT_OK)
        }

        Command::ExportDot {
            instance,
            plan,
            opts,
            out,
        } => {
            let inst = load_instance(&instance, opts.xi)?;
            let g = inst.link_graph().map_err(|e| (EXIT_VALIDATION, e))?;
            let plan = match plan {
                Some(p) => {
                    let text = std::fs::read_to_string(&p)
                        .map_err(|e| (EXIT_INTERNAL, format!("cannot read plan: {e}")))?;
                    io::plan_from_json(&text).map_err(|e| (EXIT_VALIDATION, e.to_string()))?
                }
                None => {
                    let mut progress = progress_printer();
                    let result = run_two_step_with_progress(
                        &inst,
                        opts.policy(),
                        &opts.limits(),
                        &mut progress,
                    )
                    .map_err(|e| (EXIT_VALIDATION, e.to_string()))?;
                    result.plan
                }
            };
            let violations = validate_plan(&inst, &g, &plan);
            if !violations.is_empty() {
                return Err((
                    EXIT_VALIDATION,
                    format!("plan is infeasible: {}", violations[0]),
                ));
            }
            write_out(out.as_deref(), &io::export_dot(&plan, &inst))?;
            Ok(EXIT_OK)
        }
    }
}
