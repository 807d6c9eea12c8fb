//! `optcert`: first-order optimality certificates from the command line.
//!
//! Exit codes: 0 success (certified, membership, no duality violation),
//! 1 usage or IO error, 2 negative outcome (refuted, separation, probe not
//! certified, duality violation), 3 inconclusive (or a tangent-probe
//! precondition failure), 4 infeasible point.

mod input;
mod render;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use optcert::catalog::{catalog_entries, entry};
use optcert::cone::farkas_decide;
use optcert::cq::assess_cqs;
use optcert::duality::{dual_objective, weak_duality_check, DualOptions};
use optcert::kkt::{certify_first_order, Tolerances, Verdict};
use optcert::problem::check_feasible;
use optcert::tangent::{probe_tangent_licq, probe_tangent_linear_auto, ProbeOptions};
use optcert::{Error, Multipliers, Problem};
use serde_json::json;

#[derive(Parser)]
#[command(name = "optcert", version, about = "Numerical certificates for first-order (KKT) optimality")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Structured,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether a point is a KKT point.
    Certify {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        tols: TolArgs,
        /// Compare f(x) against this many feasible samples near x.
        #[arg(long, default_value_t = 0)]
        local_samples: usize,
        #[arg(long, default_value_t = 1e-3)]
        local_radius: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Decide g ∈ K for a finitely generated cone K, or separate.
    Farkas {
        /// Lines `free: v1,...,vn` and `nonneg: v1,...,vn`.
        #[arg(long)]
        generators: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        g: String,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Probe whether a direction is tangent to the feasible set at a point.
    Tangent {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        tols: TolArgs,
        #[arg(long, allow_hyphen_values = true)]
        direction: String,
        /// Sequence length of the linear-CQ probe.
        #[arg(long, default_value_t = 10)]
        steps: usize,
    },
    /// Evaluate the Lagrangian dual objective, optionally checking weak duality.
    Dual {
        #[command(flatten)]
        problem: ProblemSource,
        /// `id=value,...`; repeatable, one dual evaluation each.
        #[arg(long, allow_hyphen_values = true)]
        multipliers: Vec<String>,
        /// `ID:v1,v2,...`: vary one multiplier, others taken from `--base`.
        #[arg(long, allow_hyphen_values = true)]
        sweep: Option<String>,
        /// Base multipliers of the sweep (zeros when absent).
        #[arg(long, allow_hyphen_values = true)]
        base: Option<String>,
        /// Feasible point for the weak-duality check; repeatable.
        #[arg(long, allow_hyphen_values = true)]
        feasible_point: Vec<String>,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Seed of the convexity spot check.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// List the built-in test problems, or export one as a problem file.
    Catalog {
        #[arg(long)]
        export: Option<String>,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct ProblemSource {
    /// Problem file (JSON).
    #[arg(long)]
    problem: Option<PathBuf>,
    /// Built-in problem name (see `optcert catalog`).
    #[arg(long)]
    catalog: Option<String>,
}

#[derive(Args)]
struct Source {
    #[command(flatten)]
    problem: ProblemSource,
    /// Comma-separated coordinates.
    #[arg(long, allow_hyphen_values = true)]
    point: String,
}

#[derive(Args)]
struct TolArgs {
    #[arg(long)]
    tol_feas: Option<f64>,
    #[arg(long)]
    tol_act: Option<f64>,
    #[arg(long)]
    tol_rank: Option<f64>,
    #[arg(long)]
    tol_stat: Option<f64>,
}

impl TolArgs {
    fn tolerances(&self) -> Tolerances {
        let d = Tolerances::default();
        Tolerances {
            tol_feas: self.tol_feas.unwrap_or(d.tol_feas),
            tol_act: self.tol_act.unwrap_or(d.tol_act),
            tol_rank: self.tol_rank.unwrap_or(d.tol_rank),
            tol_stat: self.tol_stat.or(d.tol_stat),
            ..d
        }
    }
}

/// Report text and exit code.
type Outcome = Result<(String, u8), String>;

impl ProblemSource {
    fn load(&self) -> Result<Problem, String> {
        match (&self.problem, &self.catalog) {
            (Some(path), _) => {
                let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
                Problem::from_json(&text).map_err(|e| format!("{}: {e}", path.display()))
            }
            (None, Some(name)) => entry(name).map(|e| e.problem).ok_or(format!("no catalog entry named {name:?}")),
            (None, None) => Err("one of --problem or --catalog is required".into()),
        }
    }
}

impl Source {
    fn load(&self) -> Result<(Problem, Vec<f64>), String> {
        let p = self.problem.load()?;
        let x = input::parse_vector(&self.point).map_err(|e| format!("--point: {e}"))?;
        if x.len() != p.n() {
            return Err(format!("--point has {} coordinates, problem {} has n = {}", x.len(), p.name(), p.n()));
        }
        Ok((p, x))
    }
}

fn structured(value: serde_json::Value) -> String {
    serde_json::to_string_pretty(&value).expect("reports serialize") + "\n"
}

fn cmd_certify(src: &Source, tols: &TolArgs, samples: usize, radius: f64, seed: u64, format: Format) -> Outcome {
    let (p, x) = src.load()?;
    let mut report = certify_first_order(&p, &x, &tols.tolerances()).map_err(|e| e.to_string())?;
    if samples > 0 {
        report.attach_local_min_check(&p, radius, samples, seed).map_err(|e| e.to_string())?;
    }
    let code = match report.verdict {
        Verdict::Certified => 0,
        Verdict::Refuted => 2,
        Verdict::Inconclusive | Verdict::NotSatisfied => 3,
        Verdict::Infeasible => 4,
    };
    let text = match format {
        Format::Text => render::report(&report),
        Format::Structured => report.to_json() + "\n",
    };
    Ok((text, code))
}

fn cmd_farkas(generators: &PathBuf, g: &str, tol: f64, format: Format) -> Outcome {
    let g = input::parse_vector(g).map_err(|e| format!("--g: {e}"))?;
    let text = std::fs::read_to_string(generators).map_err(|e| format!("{}: {e}", generators.display()))?;
    let k = input::parse_generators(&text, g.len()).map_err(|e| format!("{}: {e}", generators.display()))?;
    let cert = farkas_decide(&k, &g, tol).map_err(|e| e.to_string())?;
    let code = if cert.is_membership() { 0 } else { 2 };
    let text = match format {
        Format::Text => render::farkas(&cert),
        Format::Structured => structured(json!(cert)),
    };
    Ok((text, code))
}

fn cmd_tangent(src: &Source, tols: &TolArgs, direction: &str, steps: usize, format: Format) -> Outcome {
    let (p, x) = src.load()?;
    let d = input::parse_vector(direction).map_err(|e| format!("--direction: {e}"))?;
    if d.len() != p.n() {
        return Err(format!("--direction has {} coordinates, problem has n = {}", d.len(), p.n()));
    }
    let t = tols.tolerances();
    let opts =
        ProbeOptions { tol_act: t.tol_act, tol_feas: t.tol_feas, tol_rank: t.tol_rank, ..ProbeOptions::default() };
    let precondition = |e: Error| -> Outcome {
        match e {
            Error::Infeasible { .. }
            | Error::CqNotSatisfied(_)
            | Error::NotLinearizedFeasible { .. }
            | Error::ZeroDirection => Ok((format!("precondition failed: {e}\n"), 3)),
            e => Err(e.to_string()),
        }
    };
    if !check_feasible(&p, &x, t.tol_feas).map_err(|e| e.to_string())?.feasible {
        return Ok(("precondition failed: point is infeasible\n".into(), 3));
    }
    let cq = match assess_cqs(&p, &x, t.tol_act, t.tol_rank) {
        Ok(cq) => cq,
        Err(e) => return precondition(e),
    };
    let (probe, result) = if cq.licq {
        ("licq", probe_tangent_licq(&p, &x, &d, &opts))
    } else {
        ("linear", probe_tangent_linear_auto(&p, &x, &d, steps, &opts))
    };
    let result = match result {
        Ok(r) => r,
        Err(e) => return precondition(e),
    };
    let code = if result.certified { 0 } else { 2 };
    let text = match format {
        Format::Text => render::tangent(probe, &result),
        Format::Structured => structured(json!({ "probe": probe, "result": result })),
    };
    Ok((text, code))
}

#[allow(clippy::too_many_arguments)]
fn cmd_dual(
    src: &ProblemSource,
    multipliers: &[String],
    sweep: Option<&str>,
    base: Option<&str>,
    feasible: &[String],
    tol: f64,
    seed: u64,
    format: Format,
) -> Outcome {
    let p = src.load()?;
    let mut samples: Vec<Multipliers> =
        multipliers.iter().map(|m| input::parse_multipliers(&p, m)).collect::<Result<_, _>>()?;
    if let Some(sweep) = sweep {
        let base = match base {
            Some(b) => input::parse_multipliers(&p, b)?,
            None => Multipliers::zeros(&p),
        };
        samples.extend(input::parse_sweep(&p, &base, sweep)?);
    }
    if samples.is_empty() {
        return Err("give at least one --multipliers or a --sweep".into());
    }
    let points: Vec<Vec<f64>> = feasible
        .iter()
        .map(|s| input::parse_vector(s).map_err(|e| format!("--feasible-point: {e}")))
        .collect::<Result<_, _>>()?;
    if let Some(x) = points.iter().find(|x| x.len() != p.n()) {
        return Err(format!("--feasible-point has {} coordinates, problem has n = {}", x.len(), p.n()));
    }
    let opts = DualOptions { guard_seed: seed, ..DualOptions::default() };
    let (values, weak) = if points.is_empty() {
        let values = samples.iter().map(|m| dual_objective(&p, m, &opts)).collect::<Result<Vec<_>, _>>();
        (values.map_err(|e| e.to_string())?, None)
    } else {
        let r = weak_duality_check(&p, &samples, &points, tol, &opts).map_err(|e| e.to_string())?;
        (r.dual_values.clone(), Some(r))
    };
    let code = if weak.as_ref().is_some_and(|w| !w.holds) { 2 } else { 0 };
    let text = match format {
        Format::Text => render::dual(&samples, &values, weak.as_ref()),
        Format::Structured => {
            let rows: Vec<_> = samples
                .iter()
                .zip(&values)
                .map(|(m, q)| json!({ "multipliers": m, "value": q.value.to_string(), "eval": q }))
                .collect();
            let weak =
                weak.map(|w| json!({ "holds": w.holds, "worst_gap": w.worst_gap.to_string(), "skipped": w.skipped }));
            structured(json!({ "problem": p.name(), "samples": rows, "weak_duality": weak }))
        }
    };
    Ok((text, code))
}

fn cmd_catalog(export: Option<&str>, format: Format) -> Outcome {
    if let Some(name) = export {
        let e = entry(name).ok_or(format!("no catalog entry named {name:?}"))?;
        return Ok((e.problem.to_json() + "\n", 0));
    }
    let entries = catalog_entries();
    let text = match format {
        Format::Text => render::catalog(&entries),
        Format::Structured => {
            let rows: Vec<_> = entries
                .iter()
                .map(|e| {
                    json!({
                        "name": e.name(),
                        "n": e.problem.n(),
                        "known_point": e.known_point,
                        "known_multipliers": e.known_multipliers,
                        "expected_verdict": e.expected_verdict,
                        "licq": e.expected_cq.licq,
                        "linear_cq": e.expected_cq.linear_cq,
                        "convex": e.convexity_declared,
                        "provenance": e.provenance,
                    })
                })
                .collect();
            structured(json!(rows))
        }
    };
    Ok((text, 0))
}

fn run(cli: &Cli) -> Outcome {
    let f = cli.format;
    match &cli.command {
        Command::Certify { source, tols, local_samples, local_radius, seed } => {
            cmd_certify(source, tols, *local_samples, *local_radius, *seed, f)
        }
        Command::Farkas { generators, g, tol } => cmd_farkas(generators, g, *tol, f),
        Command::Tangent { source, tols, direction, steps } => cmd_tangent(source, tols, direction, *steps, f),
        Command::Dual { problem, multipliers, sweep, base, feasible_point, tol, seed } => {
            cmd_dual(problem, multipliers, sweep.as_deref(), base.as_deref(), feasible_point, *tol, *seed, f)
        }
        Command::Catalog { export } => cmd_catalog(export.as_deref(), f),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok((text, code)) => {
            let written = match &cli.out {
                Some(path) => std::fs::write(path, &text).map_err(|e| format!("{}: {e}", path.display())),
                None => {
                    print!("{text}");
                    Ok(())
                }
            };
            match written {
                Ok(()) => ExitCode::from(code),
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
