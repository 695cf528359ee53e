use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use wavelab::lab::config::ScenarioConfig;
use wavelab::lab::fit::DEFAULT_TAIL_FRACTION;
use wavelab::lab::observe::{BILLIARD_FLOW, GIVEN_FLOW};
use wavelab::lab::scenario::write_table;
use wavelab::lab::{
    fit_decay, ray_observability, read_energy_csv, read_trace_csv, run_acceptance, write_energy_csv, Scenario,
    DEFAULT_SEED,
};
use wavelab::observability::{gramian, report_row, REPORT_HEADER};
use wavelab::rays::gcc_verify;
use wavelab::semilinear::{picard_solve, PicardSettings};
use wavelab::{Error, Result};

const DEFAULT_OUT_DIR: &str = "wavelab-out";

#[derive(Parser, Debug)]
#[command(name = "wavelab", version, about = "Damped coupled wave laboratory")]
struct Cli {
    /// Seed for data and ray sampling (overrides the config's data seed).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true, env = "WAVELAB_OUT_DIR")]
    out_dir: Option<PathBuf>,

    /// Output table format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scenario and write its energy table.
    Simulate { config: PathBuf },
    /// Fit the exponential decay rate of an energy table.
    Fit {
        csv: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TAIL_FRACTION)]
        tail: f64,
    },
    /// Check the geometric control condition for both damping regions.
    Gcc {
        config: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        rays: usize,
        #[arg(long, default_value_t = 10.0)]
        t_max: f64,
    },
    /// Ray ODE observability from a scenario (.toml) or a trace table (s,a,b).
    OdeObservability {
        input: PathBuf,
        #[arg(long, default_value_t = 16)]
        rays: usize,
        #[arg(long)]
        horizon: Option<f64>,
    },
    /// Fixed-point construction on the scenario's short window.
    Picard { config: PathBuf },
    /// Run the acceptance suite.
    Suite,
}

struct Ctx {
    seed: Option<u64>,
    out_dir: Option<PathBuf>,
}

impl Ctx {
    fn dir(&self, cfg: Option<&ScenarioConfig>) -> Result<PathBuf> {
        let dir = self
            .out_dir
            .clone()
            .or_else(|| cfg.and_then(|c| c.output.dir.clone()))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
        std::fs::create_dir_all(&dir).map_err(|e| runtime_io(&dir, e))?;
        Ok(dir)
    }

    fn scenario(&self, path: &Path) -> Result<Scenario> {
        let mut cfg = ScenarioConfig::load(path)?;
        if let Some(seed) = self.seed {
            cfg.data.seed = seed;
        }
        Scenario::build(&cfg)
    }
}

fn runtime_io(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source: e,
    }
}

fn simulate(ctx: &Ctx, config: &Path) -> Result<bool> {
    let scenario = ctx.scenario(config)?;
    if scenario.hypothesis_violating {
        println!("hypothesis-violating: supp b is not contained in omega_a");
    }
    let initial = scenario.initial_state()?;
    let record = scenario.run_from(&initial, scenario.config.time.horizon)?;
    let dir = ctx.dir(Some(&scenario.config))?;
    let path = dir.join(format!("{}_energy.csv", scenario.config.output.name));
    write_energy_csv(&path, &record)?;
    println!("wrote {}", path.display());
    if let Some(b) = &record.blow_up {
        println!("run stopped: {b:?}");
    }
    match fit_decay(&record.times, &record.totals(), DEFAULT_TAIL_FRACTION) {
        Ok(f) => println!("beta = {:.6} (R^2 = {:.4}, window [{}, {}])", f.beta, f.r_squared, f.window.0, f.window.1),
        Err(e) => println!("no fit: {e}"),
    }
    Ok(true)
}

fn fit(csv: &Path, tail: f64) -> Result<bool> {
    let (t, e) = read_energy_csv(csv)?;
    let f = fit_decay(&t, &e, tail)?;
    println!("beta = {:.6}", f.beta);
    println!("log_intercept = {:.6}", f.log_intercept);
    println!("r_squared = {:.6}", f.r_squared);
    println!("window = [{}, {}] ({} samples)", f.window.0, f.window.1, f.samples);
    if f.floor_reached {
        println!("energy floor reached");
    }
    Ok(true)
}

fn gcc(ctx: &Ctx, config: &Path, rays: usize, t_max: f64) -> Result<bool> {
    let scenario = ctx.scenario(config)?;
    let seed = ctx.seed.unwrap_or(0);
    let regions = &scenario.config.regions;
    let mut rows = Vec::new();
    for (name, region) in [("omega_a", &regions.omega_a), ("omega_b", &regions.omega_b)] {
        let report = gcc_verify(region, &scenario.grid, rays, t_max, seed)?;
        println!("{name}: {}", report.summary());
        let cert = report.certificate;
        rows.push(vec![
            name.to_string(),
            report.resolution().to_string(),
            report.certified().to_string(),
            report.t_unif.map_or_else(String::new, |t| format!("{t:.12e}")),
            cert.map_or_else(String::new, |c| format!("{:?}", c.axis)),
            cert.map_or_else(String::new, |c| format!("{:.12e}", c.offset)),
        ]);
    }
    let dir = ctx.dir(Some(&scenario.config))?;
    let path = dir.join("gcc.csv");
    write_table(
        &path,
        &["region", "resolution", "certified", "t_unif", "orbit_axis", "orbit_offset"],
        &rows,
    )?;
    println!("wrote {}", path.display());
    Ok(true)
}

fn ode_observability(ctx: &Ctx, input: &Path, rays: usize, horizon: Option<f64>) -> Result<bool> {
    let is_config = input.extension().is_some_and(|e| e == "toml");
    let (reports, flow, cfg) = if is_config {
        let scenario = ctx.scenario(input)?;
        let horizon = horizon.unwrap_or(scenario.config.time.horizon);
        let reports = ray_observability(&scenario, rays, horizon, ctx.seed.unwrap_or(0))?;
        (reports, BILLIARD_FLOW, Some(scenario.config))
    } else {
        (vec![gramian(&read_trace_csv(input)?)], GIVEN_FLOW, None)
    };
    let rows: Vec<Vec<String>> = reports.iter().enumerate().map(|(i, r)| report_row(i, r, flow)).collect();
    for (i, r) in reports.iter().enumerate() {
        println!(
            "ray {i}: lambda_min {:.6e}, criterion {}, observable {}",
            r.min_eigenvalue, r.criterion.holds, r.observable()
        );
    }
    let dir = ctx.dir(cfg.as_ref())?;
    let path = dir.join("ode_observability.csv");
    write_table(&path, &REPORT_HEADER, &rows)?;
    println!("wrote {}", path.display());
    Ok(true)
}

fn picard(ctx: &Ctx, config: &Path) -> Result<bool> {
    let scenario = ctx.scenario(config)?;
    let time = &scenario.config.time;
    let window = time.picard_window.unwrap_or(time.horizon);
    let mut settings = PicardSettings::new(window, time.picard_tol, time.picard_max_iter);
    settings.cfl_safety = time.cfl_safety;
    let initial = scenario.initial_state()?;
    let sol = picard_solve(&initial, &scenario.a, &scenario.b, &scenario.nonlinearity, &settings)?;
    let ratios = sol.residual_ratios();
    let rows: Vec<Vec<String>> = sol
        .residuals
        .iter()
        .enumerate()
        .map(|(k, r)| {
            let ratio = if k == 0 { String::new() } else { format!("{:.12e}", ratios[k - 1]) };
            vec![(k + 1).to_string(), format!("{r:.12e}"), ratio]
        })
        .collect();
    let dir = ctx.dir(Some(&scenario.config))?;
    let path = dir.join(format!("{}_picard.csv", scenario.config.output.name));
    write_table(&path, &["iteration", "residual", "ratio"], &rows)?;
    println!("converged in {} iterations on [0, {window}]", sol.iterations());
    println!("wrote {}", path.display());
    Ok(true)
}

fn suite(ctx: &Ctx) -> Result<bool> {
    let dir = ctx.dir(None)?;
    let report = run_acceptance(&dir, ctx.seed.unwrap_or(DEFAULT_SEED), |o| println!("{}", o.line()))?;
    let passed = report.outcomes.iter().filter(|o| o.passed).count();
    println!("{passed}/{} criteria passed; outputs in {}", report.outcomes.len(), dir.display());
    Ok(report.passed())
}

fn run(cli: Cli) -> Result<bool> {
    let Format::Csv = cli.format;
    let ctx = Ctx {
        seed: cli.seed,
        out_dir: cli.out_dir,
    };
    match &cli.command {
        Command::Simulate { config } => simulate(&ctx, config),
        Command::Fit { csv, tail } => fit(csv, *tail),
        Command::Gcc { config, rays, t_max } => gcc(&ctx, config, *rays, *t_max),
        Command::OdeObservability { input, rays, horizon } => ode_observability(&ctx, input, *rays, *horizon),
        Command::Picard { config } => picard(&ctx, config),
        Command::Suite => suite(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
