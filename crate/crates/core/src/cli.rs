//! The `platoon` command-line front end.
//!
//! Aggregates go to stdout (or `--out`) as JSON; tables as CSV with a JSON
//! metadata line on stderr. Exit codes: 0 success, 1 usage or configuration
//! error, 2 numerical failure (with a diagnostic JSON object on stdout).

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::arrivals::ArrivalModel;
use crate::cost::{CostConstants, CostParams, ParamsConfig};
use crate::dp::{solve_bvi, solve_ra, BviOptions, StateGrid, ThresholdPolicy};
use crate::error::{Error, Result};
use crate::poisson::{self, PoissonOptions};
use crate::sim::{
    self, Experiment, FlowSchedule, PolicyKind, PolicySpec, RtsConfig, SimOptions, SweepParam, DAY,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "platoon", version, about = "Platoon coordination solvers and junction simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for the optimal threshold policy.
    Solve(SolveArgs),
    /// Simulate one day of junction traffic under a policy.
    Simulate(SimulateArgs),
    /// Average cost of several policies across flow levels (CSV).
    Compare(CompareArgs),
    /// Average cost as gamma or d2 varies (CSV).
    Sweep(SweepArgs),
    /// Wall time of the solvers on a common grid.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Bvi,
    Ra,
    Poisson,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON file with cost parameters and optional `grid`, `epsilon`, `seed`,
    /// `t_safety`, `v_max`, `beta`, `window` keys. Flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Write the main output here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub d2_km: Option<f64>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Lower grid end, s.
    #[arg(long, allow_hyphen_values = true)]
    pub m: Option<f64>,
    /// Upper grid end, s.
    #[arg(long)]
    pub n: Option<f64>,
    #[arg(long)]
    pub step: Option<f64>,
    /// Use the coarse grid [-50, 150] step 1.
    #[arg(long)]
    pub reduced: bool,
    /// Value-iteration stopping tolerance.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Give up value iteration after this many sweeps.
    #[arg(long, default_value_t = BviOptions::default().max_sweeps)]
    pub max_sweeps: usize,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long, value_enum)]
    pub solver: SolverKind,
    /// `exponential:0.02`, `discrete:15:0.4,8:0.6`, `constant:10` or JSON.
    #[arg(long)]
    pub arrivals: String,
    /// Include the value function on the grid.
    #[arg(long)]
    pub values: bool,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct ScheduleArgs {
    /// Hourly flow CSV (`hour,flow1_vph,flow2_vph`); bundled table by default.
    #[arg(long)]
    pub schedule: Option<PathBuf>,
    /// Share of the flow taking part in coordination.
    #[arg(long, conflicts_with = "avg_flow")]
    pub scale: Option<f64>,
    /// Pick the scale so the mean coordinable flow is this many veh/h.
    #[arg(long)]
    pub avg_flow: Option<f64>,
    /// Simulated time, s.
    #[arg(long, default_value_t = DAY)]
    pub duration: f64,
    #[arg(long, env = "PLATOON_DP_SEED")]
    pub seed: Option<u64>,
    /// Rate-estimator discount.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Rate-estimator window.
    #[arg(long)]
    pub window: Option<usize>,
    /// Re-solve only when the rate estimate moves by more than this fraction.
    #[arg(long)]
    pub resolve_threshold: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// `baseline`, `policy-a[:tau]`, `policy-b[:theta,c]` or `rts`.
    #[arg(long, default_value = "rts", allow_hyphen_values = true)]
    pub policy: String,
    /// Write per-vehicle records as CSV.
    #[arg(long)]
    pub emit_vehicles: Option<PathBuf>,
    #[command(flatten)]
    pub sched: ScheduleArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Comma-separated flow scales.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.01, 0.02, 0.03, 0.04])]
    pub scales: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = vec!["baseline".to_string(), "policy-a".to_string(), "rts".to_string()])]
    pub policies: Vec<String>,
    /// Number of seeds, counted up from `--seed`.
    #[arg(long, default_value_t = 10)]
    pub seeds: u64,
    #[command(flatten)]
    pub sched: ScheduleArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// `gamma` or `d2` (km).
    #[arg(long)]
    pub param: String,
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<f64>,
    #[arg(long, default_value = "rts")]
    pub policy: String,
    #[arg(long, default_value_t = 5)]
    pub seeds: u64,
    #[command(flatten)]
    pub sched: ScheduleArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Arrival models to time; repeatable.
    #[arg(long = "arrivals", default_values_t = vec!["exponential:0.02".to_string(), "discrete:15:0.4,8:0.6".to_string(), "constant:10".to_string()])]
    pub arrivals: Vec<String>,
    /// Repeats per solver; the minimum is reported.
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
    /// Use the full [-100, 400] step 0.25 grid instead of the coarse one.
    #[arg(long)]
    pub full: bool,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default)]
struct GridConfig {
    m: Option<f64>,
    n: Option<f64>,
    step: Option<f64>,
}

/// The `--config` file: flat cost parameters plus run settings.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default)]
struct ConfigFile {
    #[serde(flatten)]
    params: ParamsConfig,
    grid: Option<GridConfig>,
    epsilon: Option<f64>,
    seed: Option<u64>,
    t_safety: Option<f64>,
    v_max: Option<f64>,
    beta: Option<f64>,
    window: Option<usize>,
}

impl ConfigFile {
    fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => Ok(serde_json::from_str(&std::fs::read_to_string(p)?)?),
            None => Ok(Self::default()),
        }
    }
}

struct Context {
    file: ConfigFile,
    params_cfg: ParamsConfig,
    params: CostParams,
    consts: CostConstants,
}

impl Context {
    fn new(common: &CommonArgs) -> Result<Self> {
        let file = ConfigFile::load(common.config.as_deref())?;
        let mut params_cfg = file.params;
        if let Some(g) = common.gamma {
            params_cfg.gamma = g;
        }
        if let Some(d2) = common.d2_km {
            params_cfg.d2_km = d2;
        }
        let params = params_cfg.into_params()?;
        let consts = params.constants()?;
        Ok(Self {
            file,
            params_cfg,
            params,
            consts,
        })
    }

    fn grid(&self, args: &GridArgs, default: StateGrid) -> Result<StateGrid> {
        let base = if args.reduced { StateGrid::reduced() } else { default };
        let fg = self.file.grid.as_ref();
        let pick = |flag: Option<f64>, file: Option<f64>, d: f64| flag.or(file).unwrap_or(d);
        StateGrid::new(
            pick(args.m, fg.and_then(|g| g.m), base.m),
            pick(args.n, fg.and_then(|g| g.n), base.n),
            pick(args.step, fg.and_then(|g| g.step), base.step),
        )
    }

    fn bvi_options(&self, args: &GridArgs) -> BviOptions {
        BviOptions {
            epsilon: args.epsilon.or(self.file.epsilon).unwrap_or(BviOptions::default().epsilon),
            max_sweeps: args.max_sweeps,
        }
    }

    fn seed(&self, args: &ScheduleArgs) -> u64 {
        args.seed.or(self.file.seed).unwrap_or(1)
    }

    fn sim_options(&self) -> SimOptions {
        let d = SimOptions::default();
        SimOptions {
            t_safety: self.file.t_safety.unwrap_or(d.t_safety),
            v_max: self.file.v_max.unwrap_or(d.v_max),
        }
    }

    fn rts(&self, args: &ScheduleArgs) -> RtsConfig {
        let d = RtsConfig::default();
        RtsConfig {
            beta: args.beta.or(self.file.beta).unwrap_or(d.beta),
            window: args.window.or(self.file.window).unwrap_or(d.window),
            resolve_threshold: args.resolve_threshold,
        }
    }

    fn schedule(&self, args: &ScheduleArgs) -> Result<FlowSchedule> {
        let raw = match &args.schedule {
            Some(p) => FlowSchedule::from_csv_path(p, 1.0)?,
            None => FlowSchedule::table1(1.0)?,
        };
        let scale = match (args.scale, args.avg_flow) {
            (Some(s), _) => s,
            (None, Some(vph)) => raw.scale_for_mean_flow(vph),
            (None, None) => 0.04,
        };
        raw.with_scale(scale)
    }

    fn experiment(&self, args: &ScheduleArgs, n_seeds: u64) -> Experiment {
        let first = self.seed(args);
        Experiment {
            seeds: (first..first + n_seeds).collect(),
            duration: args.duration,
            opts: self.sim_options(),
            rts: self.rts(args),
            ..Experiment::default()
        }
    }

    /// Envelope shared by all JSON outputs.
    fn envelope(&self, command: &str, seed: Option<u64>, settings: Value, result: Value) -> Value {
        let hashed = json!({ "command": command, "params": self.params_cfg, "settings": settings });
        let digest = Sha256::digest(hashed.to_string().as_bytes());
        json!({
            "command": command,
            "version": VERSION,
            "seed": seed,
            "config_hash": hex::encode(digest),
            "params": self.params_cfg,
            "settings": settings,
            "result": result,
        })
    }
}

fn usage(msg: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name: "argument",
        reason: msg.into(),
    }
}

fn parse_policy(text: &str, exp: &Experiment, schedule: &FlowSchedule, ctx: &Context) -> Result<PolicySpec> {
    let (name, arg) = match text.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (text, None),
    };
    let kind = PolicyKind::parse(name).ok_or_else(|| usage(format!("unknown policy `{text}`")))?;
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| usage(format!("bad number `{t}` in policy: {e}")));
    match (kind, arg) {
        (PolicyKind::PolicyA, Some(tau)) => Ok(PolicySpec::PolicyA { tau: num(tau)? }),
        (PolicyKind::PolicyB, Some(pair)) => {
            let (t, c) = pair.split_once(',').ok_or_else(|| usage("policy-b expects `theta,c`"))?;
            Ok(PolicySpec::PolicyB {
                policy: ThresholdPolicy { theta: num(t)?, c: num(c)? },
            })
        }
        (_, Some(_)) => Err(usage(format!("policy `{name}` takes no argument"))),
        (kind, None) => exp.resolve(kind, schedule, &ctx.params, &ctx.consts),
    }
}

fn write_output(out: Option<&Path>, stdout: &mut dyn Write, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn solve_one(solver: SolverKind, model: &ArrivalModel, grid: StateGrid, bvi_opts: BviOptions, ctx: &Context, with_values: bool) -> Result<Value> {
    let start = Instant::now();
    let grid_json = json!({ "m": grid.m, "n": grid.n, "step": grid.step });
    let out = match solver {
        SolverKind::Bvi => {
            let sol = solve_bvi(grid, model, &ctx.params, &ctx.consts, &bvi_opts)?;
            json!({
                "theta": sol.policy.theta, "c": sol.policy.c, "Z": sol.z,
                "iterations": sol.iterations, "residual_norm": null,
                "epsilon": bvi_opts.epsilon, "grid": grid_json,
                "values": with_values.then_some(sol.value_function.values),
            })
        }
        SolverKind::Ra => {
            let sol = solve_ra(grid, model, &ctx.params, &ctx.consts)?;
            json!({
                "theta": sol.policy.theta, "c": sol.policy.c, "Z": sol.z,
                "iterations": sol.candidates, "residual_norm": sol.residual,
                "grid": grid_json,
                "values": with_values.then_some(sol.value_function.values),
            })
        }
        SolverKind::Poisson => {
            let ArrivalModel::Exponential { lambda } = *model else {
                return Err(usage("the poisson solver needs exponential arrivals"));
            };
            let sol = poisson::solve(lambda, &ctx.params, &ctx.consts, None, &PoissonOptions::default())?;
            let values = with_values.then(|| {
                grid.nodes()
                    .map(|s| poisson::closed_form_value(s, &sol, &ctx.params, &ctx.consts).ok())
                    .collect::<Vec<_>>()
            });
            json!({
                "theta": sol.theta, "c": sol.c, "Z": sol.z, "lambda": sol.lambda,
                "iterations": sol.iterations, "residual_norm": sol.residual_norm,
                "grid": with_values.then_some(grid_json), "values": values,
            })
        }
    };
    let mut out = out;
    out["wall_time_s"] = json!(start.elapsed().as_secs_f64());
    out["solver"] = json!(solver);
    out["arrivals"] = json!(model.to_string());
    if out.get("lambda").is_none() {
        out["lambda"] = match model {
            ArrivalModel::Exponential { lambda } => json!(lambda),
            _ => Value::Null,
        };
    }
    if out["values"].is_null() {
        out.as_object_mut().expect("object").remove("values");
    }
    Ok(out)
}

fn cmd_solve(a: &SolveArgs, stdout: &mut dyn Write) -> Result<()> {
    let ctx = Context::new(&a.common)?;
    let model: ArrivalModel = a.arrivals.parse()?;
    let grid = ctx.grid(&a.grid, StateGrid::standard())?;
    let opts = ctx.bvi_options(&a.grid);
    let eps = opts.epsilon;
    let result = solve_one(a.solver, &model, grid, opts, &ctx, a.values)?;
    let settings = json!({
        "solver": a.solver, "arrivals": model.to_string(),
        "grid": { "m": grid.m, "n": grid.n, "step": grid.step }, "epsilon": eps,
    });
    let doc = ctx.envelope("solve", None, settings, result);
    write_output(a.common.out.as_deref(), stdout, &format!("{}\n", serde_json::to_string_pretty(&doc)?))
}

fn cmd_simulate(a: &SimulateArgs, stdout: &mut dyn Write) -> Result<()> {
    let ctx = Context::new(&a.common)?;
    let schedule = ctx.schedule(&a.sched)?;
    let seed = ctx.seed(&a.sched);
    let exp = ctx.experiment(&a.sched, 1);
    let spec = parse_policy(&a.policy, &exp, &schedule, &ctx)?;
    let res = sim::simulate(&schedule, &spec, &ctx.params, &ctx.consts, seed, a.sched.duration, &exp.opts)?;
    if let Some(path) = &a.emit_vehicles {
        res.write_vehicles_csv(std::fs::File::create(path)?)?;
    }
    let settings = json!({
        "policy": spec, "scale": schedule.scale, "avg_flow_vph": schedule.mean_flow_vph(),
        "duration_s": a.sched.duration, "sim": exp.opts,
        "schedule": a.sched.schedule.as_ref().map(|p| p.display().to_string()),
    });
    let doc = ctx.envelope("simulate", Some(seed), settings, serde_json::to_value(&res)?);
    write_output(a.common.out.as_deref(), stdout, &format!("{}\n", serde_json::to_string_pretty(&doc)?))
}

fn parse_kinds(names: &[String]) -> Result<Vec<PolicyKind>> {
    names
        .iter()
        .map(|n| PolicyKind::parse(n).ok_or_else(|| usage(format!("unknown policy `{n}`"))))
        .collect()
}

fn emit_table<T: Serialize>(rows: &[T], meta: Value, out: Option<&Path>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    write_output(out, stdout, &String::from_utf8_lossy(&bytes))?;
    writeln!(stderr, "{meta}")?;
    Ok(())
}

fn cmd_compare(a: &CompareArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let ctx = Context::new(&a.common)?;
    let kinds = parse_kinds(&a.policies)?;
    let base = ctx.schedule(&a.sched)?;
    let exp = ctx.experiment(&a.sched, a.seeds);
    let rows = sim::compare(&base, &a.scales, &kinds, &ctx.params, &exp)?;
    let rows: Vec<_> = rows
        .into_iter()
        .map(|r| CompareCsv {
            policy: r.policy,
            avg_flow_vph: r.avg_flow_vph,
            ac: r.ac,
            avg_fuel_l: r.avg_fuel_l,
            avg_time_s: r.avg_time_s,
        })
        .collect();
    let settings = json!({ "scales": a.scales, "policies": a.policies, "seeds": exp.seeds, "duration_s": exp.duration, "rts": exp.rts });
    let meta = ctx.envelope("compare", exp.seeds.first().copied(), settings, json!({ "rows": rows.len() }));
    emit_table(&rows, meta, a.common.out.as_deref(), stdout, stderr)
}

#[derive(Serialize)]
struct CompareCsv {
    policy: String,
    avg_flow_vph: f64,
    #[serde(rename = "AC")]
    ac: f64,
    #[serde(rename = "avg_fuel_L")]
    avg_fuel_l: f64,
    avg_time_s: f64,
}

#[derive(Serialize)]
struct SweepCsv {
    param: SweepParam,
    value: f64,
    policy: String,
    #[serde(rename = "AC")]
    ac: f64,
    #[serde(rename = "AC_per_km")]
    ac_per_km: f64,
}

fn cmd_sweep(a: &SweepArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let param = SweepParam::parse(&a.param).ok_or_else(|| usage(format!("unknown sweep parameter `{}` (gamma or d2)", a.param)))?;
    let kind = PolicyKind::parse(&a.policy).ok_or_else(|| usage(format!("unknown policy `{}`", a.policy)))?;
    let ctx = Context::new(&a.common)?;
    let schedule = ctx.schedule(&a.sched)?;
    let exp = ctx.experiment(&a.sched, a.seeds);
    let rows = sim::sweep(&schedule, param, &a.values, kind, &ctx.params, &exp)?;
    let rows: Vec<_> = rows
        .into_iter()
        .map(|r| SweepCsv {
            param: r.param,
            value: r.value,
            policy: r.policy,
            ac: r.ac,
            ac_per_km: r.ac_per_km,
        })
        .collect();
    let settings = json!({ "param": param, "values": a.values, "policy": kind, "seeds": exp.seeds, "scale": schedule.scale, "rts": exp.rts });
    let meta = ctx.envelope("sweep", exp.seeds.first().copied(), settings, json!({ "rows": rows.len() }));
    emit_table(&rows, meta, a.common.out.as_deref(), stdout, stderr)
}

fn cmd_bench(a: &BenchArgs, stdout: &mut dyn Write) -> Result<()> {
    let ctx = Context::new(&a.common)?;
    let default = if a.full { StateGrid::standard() } else { StateGrid::reduced() };
    let grid = ctx.grid(&a.grid, default)?;
    let opts = ctx.bvi_options(&a.grid);
    let eps = opts.epsilon;
    let repeats = a.repeats.max(1);
    let mut entries = Vec::new();
    for text in &a.arrivals {
        let model: ArrivalModel = text.parse()?;
        let mut timings = serde_json::Map::new();
        for solver in [SolverKind::Poisson, SolverKind::Ra, SolverKind::Bvi] {
            if solver == SolverKind::Poisson && !model.is_exponential() {
                timings.insert("poisson".into(), json!({ "skipped": "needs exponential arrivals" }));
                continue;
            }
            let mut best = f64::INFINITY;
            let mut last = Value::Null;
            for _ in 0..repeats {
                let r = solve_one(solver, &model, grid, opts, &ctx, false)?;
                best = best.min(r["wall_time_s"].as_f64().unwrap_or(f64::INFINITY));
                last = r;
            }
            timings.insert(
                serde_json::to_value(solver)?.as_str().unwrap_or_default().to_string(),
                json!({ "wall_time_s": best, "theta": last["theta"], "c": last["c"] }),
            );
        }
        entries.push(json!({ "arrivals": model.to_string(), "solvers": timings }));
    }
    let settings = json!({ "grid": { "m": grid.m, "n": grid.n, "step": grid.step }, "epsilon": eps, "repeats": repeats });
    let doc = ctx.envelope("bench", None, settings, json!(entries));
    write_output(a.common.out.as_deref(), stdout, &format!("{}\n", serde_json::to_string_pretty(&doc)?))
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { stdout.write_all(text.as_bytes()) } else { stderr.write_all(text.as_bytes()) };
            return code;
        }
    };
    let outcome = match &cli.command {
        Command::Solve(a) => cmd_solve(a, stdout),
        Command::Simulate(a) => cmd_simulate(a, stdout),
        Command::Compare(a) => cmd_compare(a, stdout, stderr),
        Command::Sweep(a) => cmd_sweep(a, stdout, stderr),
        Command::Bench(a) => cmd_bench(a, stdout),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) if e.is_numerical() => {
            let diag = json!({ "error": e.to_string(), "kind": "numerical", "detail": format!("{e:?}"), "version": VERSION });
            let _ = writeln!(stdout, "{diag}");
            let _ = writeln!(stderr, "error: {e}");
            2
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("platoon").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn poisson_solve_json() {
        let (code, out, _) = run_str(&["solve", "--solver", "poisson", "--arrivals", "exponential:0.02"]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        let r = &v["result"];
        assert!(r["theta"].as_f64().unwrap() > 20.0);
        assert!(r["residual_norm"].as_f64().unwrap() < 1e-8);
        assert_eq!(v["config_hash"].as_str().unwrap().len(), 64);
        assert_eq!(v["version"], VERSION);
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run_str(&["solve", "--solver", "nope", "--arrivals", "constant:10"]).0, 1);
        assert_eq!(run_str(&["solve", "--solver", "poisson", "--arrivals", "constant:10"]).0, 1);
        assert_eq!(run_str(&["sweep", "--param", "speed", "--values", "1"]).0, 1);
        assert_eq!(run_str(&["simulate", "--policy", "fancy"]).0, 1);
        assert_eq!(run_str(&["--version"]).0, 0);
    }

    #[test]
    fn config_file_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        std::fs::write(&path, r#"{"gamma": 0.6, "grid": {"m": -50, "n": 150, "step": 1.0}}"#).unwrap();
        let p = path.to_str().unwrap();
        let (code, out, _) = run_str(&["solve", "--solver", "ra", "--arrivals", "constant:10", "--config", p]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["params"]["gamma"], 0.6);
        assert_eq!(v["result"]["grid"]["step"], 1.0);
        let (_, out2, _) = run_str(&["solve", "--solver", "ra", "--arrivals", "constant:10", "--config", p, "--gamma", "0.7"]);
        let v2: Value = serde_json::from_str(&out2).unwrap();
        assert_eq!(v2["params"]["gamma"], 0.7);
        assert_ne!(v["config_hash"], v2["config_hash"]);
    }
}
