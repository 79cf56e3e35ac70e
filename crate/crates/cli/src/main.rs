use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context as _, Result};
use clap::{Parser, Subcommand};
use serde_json::Value;

use rankin::arith::{gcd, primes_up_to};
use rankin::curves::{ap_table, ap_table_from_csv, ap_table_to_csv, coefficient_table, ApTable, CurveModel};
use rankin::domain::{petersson_integral, regulator_integral, QuadratureGrid, Truncation};
use rankin::eisenstein::{epstein, epstein_lattice, UHPoint};
use rankin::lseries::{afe_eval, afe_terms_needed, direct_terms_needed, l_derivative_at_0, l_direct, l_value, RankinSeries, AFE_RANGE};
use rankin::modular::CuspFormEval;
use rankin::verify::{run_verify, JobConfig};

/// Numerical checks of Rankin-Selberg and Eisenstein identities for elliptic curves.
#[derive(Parser, Debug)]
#[command(name = "rankin", version)]
struct Cli {
    /// key=value configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a configuration key (repeatable), e.g. --set p_max=500
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Worker threads
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write ap_<label>.csv for every configured curve
    Ap,
    /// Run the check suite and write report.json and timing.json
    Verify {
        /// Comma-separated check groups or criterion numbers
        #[arg(long)]
        only: Option<String>,
        /// Pretty-print the report with this indent
        #[arg(long)]
        json_indent: Option<usize>,
    },
    /// Print `pipeline,s,value,error` rows for L(f x g, s)
    Lvalue {
        #[arg(long, allow_negative_numbers = true)]
        s: f64,
        /// Curve indices, e.g. 1,2
        #[arg(long, default_value = "1,2")]
        pair: String,
    },
    /// Petersson product of two configured curves at the lcm of their levels
    Petersson {
        #[arg(long, default_value = "1,2")]
        pair: String,
    },
    /// Evaluate E(z,s) by both the lattice sum and the Fourier expansion
    Eisenstein {
        #[arg(long, allow_negative_numbers = true)]
        x: f64,
        #[arg(long)]
        y: f64,
        #[arg(long, allow_negative_numbers = true)]
        s: f64,
    },
    /// Summarize an existing report.json
    Report {
        /// Report path (default: <out>/report.json)
        #[arg(long)]
        file: Option<PathBuf>,
    },
}

/// Errors that map to exit code 2.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl std::fmt::Display) -> anyhow::Error {
    anyhow!(Usage(msg.to_string()))
}

fn load_config(cli: &Cli) -> Result<JobConfig> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            JobConfig::parse(&text).map_err(usage)?
        }
        None => JobConfig::default(),
    };
    for kv in &cli.overrides {
        let (k, v) = kv.split_once('=').ok_or_else(|| usage(format!("--set {kv}: expected KEY=VALUE")))?;
        config.set(k.trim(), v.trim()).map_err(usage)?;
    }
    config.validate().map_err(usage)?;
    Ok(config)
}

fn out_dir(cli: &Cli, config: &JobConfig) -> Result<PathBuf> {
    let dir = cli.out.clone().or_else(|| config.out.clone()).unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn parse_pair(s: &str) -> Result<(usize, usize)> {
    let bad = || usage(format!("--pair {s}: expected two curve indices in 1..3"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let b: usize = b.trim().parse().map_err(|_| bad())?;
    if !(1..=3).contains(&a) || !(1..=3).contains(&b) {
        return Err(bad());
    }
    Ok((a - 1, b - 1))
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a as i64, b as i64) as u64 * b
}

fn cmd_ap(config: &JobConfig, dir: &Path) -> Result<bool> {
    let mut seen = BTreeSet::new();
    for curve in config.models()? {
        if !seen.insert(curve.label.clone()) {
            continue;
        }
        let path = dir.join(format!("ap_{}.csv", curve.label));
        if let Some(n) = cached_rows(&path, config.p_max) {
            println!("{}: cached, {n} rows", path.display());
            continue;
        }
        let table = ap_table(&curve, config.p_max)?;
        fs::write(&path, ap_table_to_csv(&table)).with_context(|| format!("writing {}", path.display()))?;
        println!("{}: wrote {} rows", path.display(), table.len());
    }
    Ok(true)
}

/// Row count of a cache file that holds every prime up to `p_max`.
fn cached_rows(path: &Path, p_max: u64) -> Option<usize> {
    let text = fs::read_to_string(path).ok()?;
    let table: ApTable = ap_table_from_csv(&text).ok()?;
    primes_up_to(p_max)
        .iter()
        .all(|p| table.contains_key(p))
        .then_some(table.len())
}

fn cmd_verify(config: &JobConfig, dir: &Path, only: Option<&str>, indent: Option<usize>) -> Result<bool> {
    rankin::verify::select_groups(only).map_err(usage)?;
    let (report, timings) = run_verify(config, only)?;
    for c in &report.checks {
        let status = if c.pass { "PASS" } else { "FAIL" };
        match &c.error {
            Some(e) => println!("{status} {} error: {e}", c.name),
            None => println!("{status} {} diff={:.3e} tol={:.1e}", c.name, c.diff, c.tolerance),
        }
    }
    fs::write(dir.join("report.json"), report.to_json(indent))?;
    fs::write(dir.join("timing.json"), serde_json::to_string_pretty(&timings)? + "\n")?;
    Ok(report.passed)
}

fn pair_tables(config: &JobConfig, i: usize, j: usize, n: usize) -> Result<(CurveModel, CurveModel, RankinSeries)> {
    let models = config.models()?;
    let (a, b) = (models[i].clone(), models[j].clone());
    let rs = RankinSeries::new(&coefficient_table(&a, n)?, &coefficient_table(&b, n)?)?;
    Ok((a, b, rs))
}

fn form(curve: &CurveModel) -> Result<CuspFormEval> {
    Ok(CuspFormEval::new(coefficient_table(curve, 1000)?)?)
}

fn grid(config: &JobConfig, level: u64) -> Result<QuadratureGrid> {
    Ok(QuadratureGrid::with_options(level, config.depth, config.order, config.y_cut, Truncation::CuspWidth)?)
}

const DIRECT_TERMS_CAP: usize = 200_000;

fn cmd_lvalue(config: &JobConfig, s: f64, pair: (usize, usize)) -> Result<bool> {
    if !s.is_finite() {
        return Err(usage("--s must be finite"));
    }
    let models = config.models()?;
    let level = lcm(models[pair.0].conductor, models[pair.1].conductor);
    let direct_ok = s >= 1.2;
    let mut n = afe_terms_needed(level);
    if direct_ok {
        n = n.max(direct_terms_needed(s, 1e-12).unwrap_or(DIRECT_TERMS_CAP).min(DIRECT_TERMS_CAP));
    }
    let (a, b, rs) = pair_tables(config, pair.0, pair.1, n)?;
    if rs.isogenous && (s - 1.0).abs() < 1e-9 {
        println!("# warning: L({} x {}, s) has a pole at s = 1", a.label, b.label);
        return Ok(true);
    }
    println!("pipeline,s,value,error");
    let mut rows = 0;
    if s == 0.0 {
        // L vanishes at 0 for a non-isogenous pair; report L'(0) = Φ(0) instead.
        println!("# value is L'(0)");
        let r = l_derivative_at_0(&rs)?;
        println!("{}", r.csv_row(s));
        let reg = regulator_integral(&form(&a)?, &form(&b)?, &grid(config, level)?)?;
        println!("regulator,{s},{:.17e},{:.3e}", reg.value.re, reg.error_bound());
        return Ok(true);
    }
    if direct_ok {
        let r = l_direct(&rs, s)?;
        println!("{}", r.csv_row(s));
        rows += 1;
    }
    let afe_ok = (AFE_RANGE.0..=AFE_RANGE.1).contains(&s) && (rs.m == 1 || rs.isogenous);
    if afe_ok {
        let g = rs.gamma_factor(s);
        let r = afe_eval(&rs, s)?;
        println!("afe,{s},{:.17e},{:.3e}", r.value / g, r.error / g.abs());
        rows += 1;
    }
    if rows == 0 {
        let r = l_value(&rs, s)?;
        println!("{}", r.csv_row(s));
    }
    Ok(true)
}

fn cmd_petersson(config: &JobConfig, pair: (usize, usize)) -> Result<bool> {
    let models = config.models()?;
    let (a, b) = (&models[pair.0], &models[pair.1]);
    let level = lcm(a.conductor, b.conductor);
    let p = petersson_integral(&form(a)?, &form(b)?, &grid(config, level)?)?;
    println!("pair,level,re,im,error");
    println!(
        "{}x{},{level},{:.17e},{:.17e},{:.3e}",
        a.label,
        b.label,
        p.value.re,
        p.value.im,
        p.error_bound()
    );
    Ok(true)
}

fn cmd_eisenstein(x: f64, y: f64, s: f64) -> Result<bool> {
    let z = UHPoint::new(x, y).map_err(usage)?;
    println!("pipeline,s,value,error");
    if s > 1.0 {
        let l = epstein_lattice(z, s, 1e-14)?;
        println!("lattice-sum,{s},{:.17e},{:.3e}", l.value, l.abs_error_bound);
    }
    let f = epstein(z, s)?;
    println!("fourier-bessel,{s},{:.17e},{:.3e}", f.value, f.abs_error_bound);
    Ok(true)
}

fn cmd_report(path: &Path) -> Result<bool> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let report: Value = serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let checks = report["checks"].as_array().ok_or_else(|| usage("report has no checks"))?;
    println!("criterion,name,pass,diff,tolerance");
    let mut all = true;
    for c in checks {
        let pass = c["pass"].as_bool().unwrap_or(false);
        all &= pass;
        println!(
            "{},{},{},{},{}",
            c["criterion"],
            c["name"].as_str().unwrap_or("?"),
            pass,
            c["diff"],
            c["tolerance"]
        );
    }
    if checks.is_empty() {
        bail!("report has no checks");
    }
    Ok(all)
}

fn run(cli: &Cli) -> Result<bool> {
    let config = load_config(cli)?;
    if let Some(k) = cli.workers {
        if k == 0 {
            return Err(usage("--workers must be positive"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(k).build_global()?;
    }
    match &cli.command {
        Command::Ap => {
            let dir = out_dir(cli, &config)?;
            cmd_ap(&config, &dir)
        }
        Command::Verify { only, json_indent } => {
            let dir = out_dir(cli, &config)?;
            cmd_verify(&config, &dir, only.as_deref(), *json_indent)
        }
        Command::Lvalue { s, pair } => cmd_lvalue(&config, *s, parse_pair(pair)?),
        Command::Petersson { pair } => cmd_petersson(&config, parse_pair(pair)?),
        Command::Eisenstein { x, y, s } => cmd_eisenstein(*x, *y, *s),
        Command::Report { file } => {
            let path = match file {
                Some(p) => p.clone(),
                None => cli.out.clone().or(config.out.clone()).unwrap_or_else(|| PathBuf::from(".")).join("report.json"),
            };
            cmd_report(&path)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Usage>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
