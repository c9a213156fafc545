//! `roughreg` command-line front end.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use roughreg::config::{parse_seeds, Config, ROUGH_DEFAULT, SMOOTH_DEFAULT, WEAK_DEFAULT, YOUNG_DEFAULT};
use roughreg::io::{fmt_e12, write_path_csv, write_rows, write_sidecar};
use roughreg::roughpath::exponents;
use roughreg::solver::{solve, ExperimentReport, Scheme};
use roughreg::suite::{run_experiment, ExperimentKind};
use sha2::{Digest, Sha256};

const CHEN_TOLERANCE: f64 = 1e-10;

#[derive(Parser)]
#[command(name = "roughreg", version, about = "SDEs driven by multiplicative fractional Brownian motion")]
struct Cli {
    /// Worker threads for seed-parallel runs.
    #[arg(long, global = true, env = "ROUGHREG_WORKERS")]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Young,
    Rough,
    Smooth,
    Weak,
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML configuration file.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// One of the shipped default configurations.
    #[arg(long)]
    preset: Option<Preset>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// fBm on the configured grid.
    SampleFbm(RunArgs),
    /// Geometric or Itô lift of the driver (rough regime).
    Lift(RunArgs),
    /// Solve the configured equation on one noise sample.
    Solve(RunArgs),
    /// Consistency checks.
    Check {
        #[command(subcommand)]
        what: Check,
    },
    /// Run a named experiment over seeds.
    Experiment {
        kind: String,
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Seed list: `a..b`, `a` or `a,b,c`. Defaults to the config's seeds.
        #[arg(long)]
        seeds: Option<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum Check {
    /// Max Chen defect of the lift over all stored dyadic triples.
    Chen {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Parse a configuration and print its regime and exponents.
    Config {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
}

enum Failure {
    Usage(String),
    Run(String),
}

impl From<roughreg::Error> for Failure {
    fn from(e: roughreg::Error) -> Self {
        match e {
            roughreg::Error::Config(_) | roughreg::Error::Parse(_) => Failure::Usage(e.to_string()),
            _ => Failure::Run(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Run(e.to_string())
    }
}

type Out<T> = Result<T, Failure>;

struct Loaded {
    config: Config,
    source: String,
    hash: String,
}

fn load(args: &ConfigArgs) -> Out<Loaded> {
    let (source, text) = match (&args.config, args.preset) {
        (Some(p), _) => (p.display().to_string(), fs::read_to_string(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?),
        (None, Some(p)) => {
            let (name, text) = match p {
                Preset::Young => ("young_default", YOUNG_DEFAULT),
                Preset::Rough => ("rough_default", ROUGH_DEFAULT),
                Preset::Smooth => ("smooth_default", SMOOTH_DEFAULT),
                Preset::Weak => ("weak_default", WEAK_DEFAULT),
            };
            (format!("preset:{name}"), text.to_string())
        }
        (None, None) => return Err(Failure::Usage("pass --config or --preset".into())),
    };
    let config = Config::from_toml_str(&text)?;
    let hash = Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect();
    Ok(Loaded { config, source, hash })
}

fn meta(l: &Loaded, seeds: &[u64]) -> BTreeMap<String, String> {
    let mut m = BTreeMap::new();
    m.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    m.insert("config".into(), l.source.clone());
    m.insert("config_sha256".into(), l.hash.clone());
    m.insert("seeds".into(), seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(","));
    m
}

fn out_dir(out: &Path) -> Out<()> {
    fs::create_dir_all(out)?;
    Ok(())
}

fn sample_fbm(a: &RunArgs) -> Out<bool> {
    let l = load(&a.cfg)?;
    let fbm = l.config.sample_fbm(a.seed)?;
    out_dir(&a.out)?;
    let path = a.out.join(format!("fbm_seed{}.csv", a.seed));
    let mut m = meta(&l, &[a.seed]);
    m.insert("hurst".into(), fmt_e12(fbm.hurst));
    write_path_csv(&path, &fbm.path, &m)?;
    println!("{}", path.display());
    Ok(true)
}

fn lift(a: &RunArgs) -> Out<bool> {
    let l = load(&a.cfg)?;
    let noise = l.config.sample_noise(a.seed)?;
    let lift = noise.lift.as_ref().ok_or_else(|| Failure::Usage("the configured Hurst parameter has no lift".into()))?;
    let d = lift.dim();
    let mut header = vec!["t".to_string()];
    header.extend((1..=d).map(|i| format!("x{i}")));
    for i in 1..=d {
        header.extend((1..=d).map(|j| format!("a{i}{j}")));
    }
    let rows: Vec<Vec<String>> = (0..=lift.grid().n_steps)
        .map(|k| {
            let mut r = vec![fmt_e12(lift.grid().time(k))];
            r.extend(lift.path.at(k).iter().map(|v| fmt_e12(*v)));
            r.extend(lift.area(0, k).iter().map(|v| fmt_e12(*v)));
            r
        })
        .collect();
    out_dir(&a.out)?;
    let path = a.out.join(format!("lift_seed{}.csv", a.seed));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_rows(&path, &header, &rows)?;
    let mut m = meta(&l, &[a.seed]);
    m.insert("max_chen_defect".into(), fmt_e12(lift.max_dyadic_chen_defect()));
    write_sidecar(&path, &m)?;
    println!("{}", path.display());
    Ok(true)
}

fn solve_cmd(a: &RunArgs) -> Out<bool> {
    let l = load(&a.cfg)?;
    let sc = l.config.solve_config()?;
    let noise = l.config.sample_noise(a.seed)?;
    let sol = solve(&sc, &noise)?;
    let d = sol.dim;
    let mut header = vec!["t".to_string()];
    header.extend((1..=d).map(|i| format!("x{i}")));
    let rows: Vec<Vec<String>> = sol
        .nodes
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let mut r = vec![fmt_e12(sol.grid.time(k))];
            r.extend(sol.at(i).iter().map(|v| fmt_e12(*v)));
            r
        })
        .collect();
    out_dir(&a.out)?;
    let path = a.out.join(format!("solve_seed{}.csv", a.seed));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_rows(&path, &header, &rows)?;
    let mut m = meta(&l, &[a.seed]);
    m.insert("scheme".into(), scheme_name(sc.scheme));
    m.insert("regime".into(), sol.regime.name().into());
    m.insert("stop".into(), sol.stop.map_or("none".into(), |t| fmt_e12(sol.grid.time(t))));
    write_sidecar(&path, &m)?;
    println!("{}", path.display());
    Ok(true)
}

fn scheme_name(s: Scheme) -> String {
    s.name().to_string()
}

fn check_chen(cfg: &ConfigArgs, seed: u64) -> Out<bool> {
    let l = load(cfg)?;
    let noise = l.config.sample_noise(seed)?;
    let lift = noise.lift.as_ref().ok_or_else(|| Failure::Usage("the configured Hurst parameter has no lift".into()))?;
    let defect = lift.max_dyadic_chen_defect();
    let pass = defect <= CHEN_TOLERANCE;
    println!("max_chen_defect {}", fmt_e12(defect));
    println!("chen: {}", if pass { "PASS" } else { "FAIL" });
    Ok(pass)
}

fn check_config(cfg: &ConfigArgs) -> Out<bool> {
    let l = load(cfg)?;
    let c = &l.config;
    let sc = c.solve_config()?;
    let ex = exponents(c.model.hurst, c.drift.alpha)?;
    println!("config {}", l.source);
    println!("sha256 {}", l.hash);
    println!("regime {}", ex.regime.name());
    println!("scheme {}", scheme_name(sc.scheme));
    println!("h_low {}", fmt_e12(ex.h_low));
    println!("h_mid {}", fmt_e12(ex.h_mid));
    println!("h_plus {}", fmt_e12(ex.h_plus));
    println!("alpha_eff {}", fmt_e12(ex.alpha_eff));
    println!("delta {}", fmt_e12(ex.delta));
    println!("seeds {}", c.seeds()?.len());
    Ok(true)
}

fn experiment(kind: &str, cfg: &ConfigArgs, seeds: Option<&str>, out: &Path) -> Out<bool> {
    let kind: ExperimentKind = kind.parse()?;
    let l = load(cfg)?;
    let seeds = match seeds {
        Some(s) => parse_seeds(s)?,
        None => l.config.seeds()?,
    };
    let rep = run_experiment(kind, &l.config, &seeds)?;
    out_dir(out)?;
    write_report(&rep, out, &meta(&l, &seeds))?;
    print!("{}", rep.summary());
    Ok(rep.pass())
}

fn write_report(rep: &ExperimentReport, out: &Path, m: &BTreeMap<String, String>) -> Out<()> {
    let rows = out.join(format!("{}.csv", rep.name));
    write_rows(&rows, &ExperimentReport::csv_header(), &rep.csv_rows())?;
    let mut m = m.clone();
    m.insert("experiment".into(), rep.name.clone());
    m.insert("pass".into(), rep.pass().to_string());
    write_sidecar(&rows, &m)?;
    let summary = out.join(format!("{}_summary.csv", rep.name));
    write_rows(&summary, &["kind", "name", "value"], &rep.summary_rows())?;
    write_sidecar(&summary, &m)?;
    if !rep.notes.is_empty() {
        fs::write(out.join(format!("{}_notes.txt", rep.name)), rep.notes.join("\n") + "\n")?;
    }
    Ok(())
}

fn run(cli: Cli) -> Out<bool> {
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(Failure::Usage("--workers must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(w).build_global().map_err(|e| Failure::Run(e.to_string()))?;
    }
    match &cli.command {
        Command::SampleFbm(a) => sample_fbm(a),
        Command::Lift(a) => lift(a),
        Command::Solve(a) => solve_cmd(a),
        Command::Check { what: Check::Chen { cfg, seed } } => check_chen(cfg, *seed),
        Command::Check { what: Check::Config { cfg } } => check_config(cfg),
        Command::Experiment { kind, cfg, seeds, out } => experiment(kind, cfg, seeds.as_deref(), out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
