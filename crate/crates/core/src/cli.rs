//! Command-line front end. `run` parses arguments, dispatches one
//! subcommand and returns the process exit code:
//! 0 success, 1 solver error, 2 invalid input, 3 unsupported regime,
//! 4 check failed.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::centralized::poa_sweep;
use crate::error::Error;
use crate::game_ne::solve_ne;
use crate::iwfa::{iwfa_solve_from, DEFAULT_MAX_ROUNDS};
use crate::model::{payoffs, validate_and_canonicalize, GameSpec, StrategyProfile};
use crate::single_wf::waterfill_closed_form;
use crate::verify::{best_response_gap, continuum_g1, kkt_check};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SOLVER: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_REGIME: i32 = 3;
pub const EXIT_CHECK: i32 = 4;

/// Instance file. `labels`, when present, names the users.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceConfig {
    pub weights: Vec<f64>,
    pub noise: Vec<f64>,
    pub g: f64,
    pub budgets: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

#[derive(Debug, Parser)]
#[command(name = "wfgame", version, about = "Water-filling optimum and water-filling game equilibria")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Instance JSON file.
    #[arg(long)]
    pub config: PathBuf,
    /// Write the JSON result here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the CSV table here.
    #[arg(long, visible_aliases = ["trace-csv", "out-csv"])]
    pub csv: Option<PathBuf>,
    /// Decimal places for CSV numbers (default: shortest exact form).
    #[arg(long)]
    pub digits: Option<usize>,
    /// Report rates in bits instead of nats.
    #[arg(long)]
    pub bits: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Single-user water-filling for one user's budget.
    Single {
        #[command(flatten)]
        common: Common,
        /// Index of the budget to use, in file order.
        #[arg(long, default_value_t = 0)]
        budget_index: usize,
    },
    /// Nash equilibrium for 0 <= g < 1, with its KKT certificate.
    Nash {
        #[command(flatten)]
        common: Common,
        /// KKT residual threshold.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Iterative water-filling, traced against the exact equilibrium.
    Iwfa {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_ROUNDS)]
        max_rounds: usize,
    },
    /// Equilibrium versus centralized optimum over a crosstalk grid.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// `start:stop:step` (inclusive) or a comma-separated list.
        #[arg(long, default_value = "0.05:0.95:0.05")]
        g_grid: String,
        #[arg(long, default_value_t = 64)]
        starts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Family of equilibria for g = 1.
    Continuum {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 3)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// KKT and best-response check of a strategy file.
    Check {
        #[command(flatten)]
        common: Common,
        /// JSON: an array of per-user power rows (file order), or an object
        /// with a `strategies` field such as the output of `nash`.
        #[arg(long)]
        strategies: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Solver(String),
    Regime(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Input(_) => EXIT_INPUT,
            Failure::Solver(_) => EXIT_SOLVER,
            Failure::Regime(_) => EXIT_REGIME,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Solver(m) | Failure::Regime(m) => m,
        }
    }
}

fn input(e: impl std::fmt::Display) -> Failure {
    Failure::Input(e.to_string())
}

fn solver(e: Error) -> Failure {
    Failure::Solver(e.to_string())
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message());
            f.code()
        }
    }
}

struct Loaded {
    spec: GameSpec,
    config: InstanceConfig,
}

fn load(path: &Path) -> Result<Loaded, Failure> {
    let text = fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
    let config: InstanceConfig =
        serde_json::from_str(&text).map_err(|e| input(format!("{}: {e}", path.display())))?;
    if let Some(labels) = &config.labels {
        if labels.len() != config.budgets.len() {
            return Err(input(format!(
                "{} labels for {} budgets",
                labels.len(),
                config.budgets.len()
            )));
        }
    }
    let spec = validate_and_canonicalize(config.weights.clone(), config.noise.clone(), config.g, config.budgets.clone())
        .map_err(input)?;
    Ok(Loaded { spec, config })
}

struct Output<'a> {
    common: &'a Common,
    stdout: &'a mut dyn Write,
}

impl Output<'_> {
    fn rate(&self, nats: f64) -> f64 {
        if self.common.bits {
            nats / std::f64::consts::LN_2
        } else {
            nats
        }
    }

    fn rates(&self, nats: &[f64]) -> Vec<f64> {
        nats.iter().map(|&x| self.rate(x)).collect()
    }

    fn num(&self, x: f64) -> String {
        match self.common.digits {
            Some(d) => format!("{x:.d$}"),
            None => format!("{x}"),
        }
    }

    fn json(&mut self, value: &Value) -> Result<(), Failure> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Solver(e.to_string()))?;
        text.push('\n');
        match &self.common.out {
            Some(path) => fs::write(path, text).map_err(|e| input(format!("{}: {e}", path.display()))),
            None => self.stdout.write_all(text.as_bytes()).map_err(|e| input(e.to_string())),
        }
    }

    fn csv(&self, header: &str, rows: impl IntoIterator<Item = String>) -> Result<(), Failure> {
        let Some(path) = &self.common.csv else { return Ok(()) };
        let mut text = String::from(header);
        text.push('\n');
        for row in rows {
            text.push_str(&row);
            text.push('\n');
        }
        fs::write(path, text).map_err(|e| input(format!("{}: {e}", path.display())))
    }
}

fn dispatch(command: Command, stdout: &mut dyn Write) -> Result<i32, Failure> {
    match command {
        Command::Single { common, budget_index } => cmd_single(&common, budget_index, stdout),
        Command::Nash { common, tol } => cmd_nash(&common, tol, stdout),
        Command::Iwfa { common, tol, max_rounds } => cmd_iwfa(&common, tol, max_rounds, stdout),
        Command::Sweep {
            common,
            g_grid,
            starts,
            seed,
        } => cmd_sweep(&common, &g_grid, starts, seed, stdout),
        Command::Continuum { common, count, seed, tol } => cmd_continuum(&common, count, seed, tol, stdout),
        Command::Check { common, strategies, tol } => cmd_check(&common, &strategies, tol, stdout),
    }
}

fn cmd_single(common: &Common, budget_index: usize, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let Loaded { spec, config } = load(&common.config)?;
    let budget = *config
        .budgets
        .get(budget_index)
        .ok_or_else(|| input(format!("budget index {budget_index} out of range")))?;
    let profile = spec.profile();
    let sol = waterfill_closed_form(profile, budget).map_err(solver)?;
    let strategy = profile.to_original(&sol.strategy.powers);
    let rate = crate::model::payoff(profile, 0.0, 0, &StrategyProfile::new(vec![sol.strategy.clone()]));
    let mut out = Output { common, stdout };
    out.csv(
        "channel,power",
        strategy.iter().enumerate().map(|(i, p)| format!("{i},{}", out.num(*p))),
    )?;
    out.json(&json!({
        "budget": budget,
        "strategy": strategy,
        "water_level": sol.water_level,
        "multiplier": sol.multiplier,
        "active_count": sol.active_count,
        "phi": sol.phi,
        "channel_order": profile.order(),
        "payoff": out.rate(rate),
    }))?;
    Ok(EXIT_OK)
}

fn refuse_unit_crosstalk(spec: &GameSpec) -> Result<(), Failure> {
    if spec.g() >= 1.0 && spec.users() > 1 {
        return Err(Failure::Regime(
            "g = 1 has a continuum of equilibria; use the `continuum` command".into(),
        ));
    }
    Ok(())
}

fn cmd_nash(common: &Common, tol: f64, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let Loaded { spec, config } = load(&common.config)?;
    refuse_unit_crosstalk(&spec)?;
    let spec = if spec.users() == 1 && spec.g() >= 1.0 {
        spec.with_g(0.0).map_err(solver)?
    } else {
        spec
    };
    let sol = solve_ne(&spec).map_err(solver)?;
    let kkt = kkt_check(&spec, &sol.canonical, tol).map_err(solver)?;
    let mut out = Output { common, stdout };
    let rows = sol.strategies.rows();
    out.csv(
        "user,channel,power",
        rows.iter().enumerate().flat_map(|(u, row)| {
            let out = &out;
            row.iter().enumerate().map(move |(i, p)| format!("{u},{i},{}", out.num(*p)))
        }),
    )?;
    out.json(&json!({
        "labels": config.labels,
        "strategies": rows,
        "payoffs": out.rates(&sol.payoffs),
        "sum_rate": out.rate(sol.payoffs.iter().sum()),
        "thresholds": sol.thresholds.t,
        "multipliers": sol.multipliers.omega,
        "breakpoints": sol.breakpoints,
        "phi": sol.phi,
        "user_order": sol.user_order,
        "channel_order": spec.profile().order(),
        "kkt": { "max_residual": kkt.max_residual, "satisfied": kkt.satisfied },
    }))?;
    Ok(EXIT_OK)
}

/// `sum_j ||a^j - b^j||_2`.
fn strategy_error(a: &StrategyProfile, b: &StrategyProfile) -> f64 {
    a.strategies
        .iter()
        .zip(&b.strategies)
        .map(|(x, y)| {
            x.powers
                .iter()
                .zip(&y.powers)
                .map(|(p, q)| (p - q) * (p - q))
                .sum::<f64>()
                .sqrt()
        })
        .sum()
}

fn cmd_iwfa(common: &Common, tol: f64, max_rounds: usize, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let Loaded { spec, .. } = load(&common.config)?;
    refuse_unit_crosstalk(&spec)?;
    if !(tol > 0.0) || max_rounds == 0 {
        return Err(input("--tol must be positive and --max-rounds at least 1"));
    }
    let spec = if spec.g() >= 1.0 { spec.with_g(0.0).map_err(solver)? } else { spec };
    let ne = solve_ne(&spec).map_err(solver)?;
    let mut errors = Vec::new();
    let start = StrategyProfile::zeros(spec.users(), spec.channels());
    let (sol, trace) = iwfa_solve_from(&spec, start, tol, max_rounds, |_, p| {
        errors.push(strategy_error(p, &ne.canonical))
    })
    .map_err(solver)?;
    let mut out = Output { common, stdout };
    out.csv(
        "round,error,delta",
        errors
            .iter()
            .zip(&trace.strategy_deltas)
            .enumerate()
            .map(|(r, (e, d))| format!("{},{},{}", r + 1, out.num(*e), out.num(*d))),
    )?;
    out.json(&json!({
        "converged": trace.converged,
        "iterations": trace.iterations,
        "rounds_executed": trace.strategy_deltas.len(),
        "final_error": errors.last().copied().unwrap_or(0.0),
        "max_multiplier_increase": trace.max_multiplier_increase,
        "strategies": sol.strategies.rows(),
        "payoffs": out.rates(&sol.payoffs),
        "equilibrium_strategies": ne.strategies.rows(),
    }))?;
    Ok(if trace.converged { EXIT_OK } else { EXIT_SOLVER })
}

/// `start:stop:step` (inclusive, values rounded to 12 decimals) or `a,b,c`.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, String> {
    let num = |s: &str| s.trim().parse::<f64>().map_err(|e| format!("bad grid value {s:?}: {e}"));
    let grid = if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let [a, b, step] = parts[..] else {
            return Err(format!("grid {text:?} is not start:stop:step"));
        };
        let (a, b, step) = (num(a)?, num(b)?, num(step)?);
        if !(step > 0.0) || b < a {
            return Err(format!("grid {text:?} needs step > 0 and stop >= start"));
        }
        let count = ((b - a) / step + 1e-9).floor() as usize;
        (0..=count).map(|k| ((a + k as f64 * step) * 1e12).round() / 1e12).collect()
    } else {
        text.split(',').map(num).collect::<Result<Vec<_>, _>>()?
    };
    if grid.is_empty() {
        return Err("empty grid".into());
    }
    if let Some(g) = grid.iter().find(|g| !(0.0..1.0).contains(*g)) {
        return Err(format!("grid value {g} outside [0, 1)"));
    }
    Ok(grid)
}

fn cmd_sweep(common: &Common, grid: &str, starts: usize, seed: u64, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let Loaded { spec, .. } = load(&common.config)?;
    let grid = parse_grid(grid).map_err(input)?;
    if starts == 0 {
        return Err(input("--starts must be at least 1"));
    }
    let points = poa_sweep(&spec, &grid, starts, seed).map_err(solver)?;
    let mut out = Output { common, stdout };
    out.csv(
        "g,ne_sum,opt_sum,poa",
        points.iter().map(|p| {
            format!(
                "{},{},{},{}",
                out.num(p.g),
                out.num(out.rate(p.ne_sum_rate)),
                out.num(out.rate(p.opt_sum_rate)),
                out.num(p.poa)
            )
        }),
    )?;
    let json_points: Vec<Value> = points
        .iter()
        .map(|p| {
            json!({
                "g": p.g,
                "ne_sum_rate": out.rate(p.ne_sum_rate),
                "opt_sum_rate": out.rate(p.opt_sum_rate),
                "poa": p.poa,
                "per_user_ne": out.rates(&p.per_user_ne),
                "per_user_opt": out.rates(&p.per_user_opt),
            })
        })
        .collect();
    out.json(&json!({ "starts": starts, "seed": seed, "points": json_points }))?;
    Ok(EXIT_OK)
}

fn cmd_continuum(common: &Common, count: usize, seed: u64, tol: f64, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let Loaded { spec, .. } = load(&common.config)?;
    if spec.g() != 1.0 {
        return Err(Failure::Regime(format!(
            "continuum needs g = 1 (got {}); use `nash` for g < 1",
            spec.g()
        )));
    }
    let family = match continuum_g1(&spec, count, seed) {
        Ok(f) => f,
        Err(e @ Error::WrongUserCount { .. }) => return Err(Failure::Regime(e.to_string())),
        Err(e) => return Err(solver(e)),
    };
    let mut entries = Vec::with_capacity(family.len());
    for p in &family {
        let kkt = kkt_check(&spec, p, tol).map_err(solver)?;
        let rates = spec.user_values_to_original(&payoffs(spec.profile(), 1.0, p));
        entries.push(json!({
            "strategies": spec.to_original(p).rows(),
            "payoffs": rates.iter().map(|&r| if common.bits { r / std::f64::consts::LN_2 } else { r }).collect::<Vec<_>>(),
            "implied_multipliers": spec.user_values_to_original(&kkt.implied_multipliers),
            "kkt": { "max_residual": kkt.max_residual, "satisfied": kkt.satisfied },
        }));
    }
    let mut out = Output { common, stdout };
    out.csv(
        "profile,user,channel,power",
        family.iter().enumerate().flat_map(|(k, p)| {
            let rows = spec.to_original(p).rows();
            let out = &out;
            rows.into_iter().enumerate().flat_map(move |(u, row)| {
                row.into_iter()
                    .enumerate()
                    .map(move |(i, v)| format!("{k},{u},{i},{}", out.num(v)))
            })
        }),
    )?;
    out.json(&json!({ "profiles": entries }))?;
    Ok(EXIT_OK)
}

fn read_rows(path: &Path) -> Result<Vec<Vec<f64>>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| input(format!("{}: {e}", path.display())))?;
    let rows = match value {
        Value::Object(mut map) => map
            .remove("strategies")
            .ok_or_else(|| input(format!("{}: no `strategies` field", path.display())))?,
        other => other,
    };
    serde_json::from_value(rows).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn cmd_check(common: &Common, strategies: &Path, tol: f64, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let Loaded { spec, .. } = load(&common.config)?;
    let original = StrategyProfile::from_rows(read_rows(strategies)?);
    let canonical = spec.to_canonical(&original).map_err(input)?;
    let kkt = kkt_check(&spec, &canonical, tol).map_err(|e| match e {
        Error::InfeasibleProfile(_) | Error::DimensionMismatch { .. } | Error::CrosstalkOutOfRange(_) => input(e),
        e => solver(e),
    })?;
    let gaps = best_response_gap(&spec, &canonical).map_err(solver)?;
    // Residual table back in file order.
    let residuals = spec.to_original(&StrategyProfile::from_rows(kkt.residuals.clone())).rows();
    let mut out = Output { common, stdout };
    out.csv(
        "user,channel,residual",
        residuals.iter().enumerate().flat_map(|(u, row)| {
            let out = &out;
            row.iter().enumerate().map(move |(i, r)| format!("{u},{i},{}", out.num(*r)))
        }),
    )?;
    out.json(&json!({
        "satisfied": kkt.satisfied,
        "max_residual": kkt.max_residual,
        "threshold": tol,
        "implied_multipliers": spec.user_values_to_original(&kkt.implied_multipliers),
        "best_response_gap": out.rates(&spec.user_values_to_original(&gaps)),
        "residuals": residuals,
    }))?;
    Ok(if kkt.satisfied { EXIT_OK } else { EXIT_CHECK })
}
