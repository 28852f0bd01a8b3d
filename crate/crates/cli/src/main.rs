use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use twinbeam::experiment::{self, Cutoff, ExperimentConfig, SweepParameter, SweepSpec, DEFAULT_SWEEP_POINTS};
use twinbeam::report;
use twinbeam::selfcheck::{self, SelfcheckOptions};
use twinbeam::{DarkModel, Error, Kernel};

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_PHYSICS: u8 = 3;
const EXIT_SELFCHECK: u8 = 4;

/// Twin-beam conditional state preparation and homodyne tomography of
/// s-ordered Wigner functions at the phase-space origin.
///
/// Exit codes: 0 success, 1 I/O or numerical failure, 2 invalid
/// configuration, 3 physics constraint violated (kernel bound, zero click
/// probability), 4 selfcheck failure.
#[derive(Parser)]
#[command(name = "twinbeam", version, about, long_about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a single parameter point and print one CSV row.
    Run {
        #[command(flatten)]
        params: Params,
        /// Also write the simulated quadrature samples to this file.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Simulate every point of the config's sweep block.
    Sweep {
        #[command(flatten)]
        params: Params,
        /// Number of sweep points (overrides the config).
        #[arg(long)]
        points: Option<usize>,
        /// Sweep parameter when the config has no sweep block.
        #[arg(long, value_parser = ["lambda", "eta_a"])]
        sweep: Option<String>,
        #[arg(long, requires = "sweep")]
        min: Option<f64>,
        #[arg(long, requires = "sweep")]
        max: Option<f64>,
    },
    /// Run the built-in consistency checks and print a pass/fail table.
    Selfcheck {
        /// Multiply the kernel constant by this factor (mutation hook).
        #[arg(long, hide = true, default_value_t = 1.0)]
        perturb_kernel: f64,
        /// Force the truncation used by the cutoff check.
        #[arg(long, hide = true)]
        cutoff: Option<usize>,
    },
    /// Regenerate the sweep plots from a CSV file.
    Plot {
        csv: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// List the shipped preset configurations.
    Presets,
}

#[derive(Args)]
struct Params {
    /// Config file path or preset name (fig1_top, fig1_bottom, fig3_top, fig3_bottom).
    #[arg(long)]
    config: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    /// Write CSV, metadata and plots here instead of printing CSV.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    eta_a: Option<f64>,
    #[arg(long)]
    eta_h: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    s: Option<f64>,
    #[arg(long, value_parser = ["none", "thermal", "poisson"])]
    dark: Option<String>,
    #[arg(long)]
    dark_n: Option<f64>,
    /// Fock-space cutoff ("auto" or an integer).
    #[arg(long)]
    cutoff: Option<String>,
    #[arg(long)]
    click_trials: Option<usize>,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Config(_) | Error::InvalidParameter(_) => EXIT_CONFIG,
            e if e.is_physics_constraint() => EXIT_PHYSICS,
            _ => EXIT_FAILURE,
        };
        let message = match &e {
            Error::ZeroClickProbability => format!("physics constraint violated: {e} (need lambda > 0 or dark counts)"),
            Error::UnboundedKernel { .. } => format!("physics constraint violated: {e}"),
            _ => e.to_string(),
        };
        Failure { code, message }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure {
            code: EXIT_FAILURE,
            message: e.to_string(),
        }
    }
}

fn config_error(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_CONFIG,
        message: message.into(),
    }
}

impl Params {
    /// Output file stem: preset or config file name.
    fn stem(&self, verb: &str) -> String {
        match &self.config {
            Some(c) => Path::new(c)
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| verb.to_string()),
            None => verb.to_string(),
        }
    }

    fn load(&self) -> Result<ExperimentConfig, Failure> {
        let mut config = match &self.config {
            Some(c) if experiment::PRESETS.iter().any(|(name, _)| name == c) => ExperimentConfig::preset(c)?,
            Some(c) => ExperimentConfig::from_file(Path::new(c))?,
            None => {
                let missing: Vec<_> = [
                    ("--lambda", self.lambda),
                    ("--eta-a", self.eta_a),
                    ("--eta-h", self.eta_h),
                    ("--s", self.s),
                ]
                .iter()
                .filter(|(_, v)| v.is_none())
                .map(|(n, _)| *n)
                .collect();
                if !missing.is_empty() {
                    return Err(config_error(format!(
                        "no --config given; missing {}",
                        missing.join(", ")
                    )));
                }
                ExperimentConfig {
                    lambda: 0.0,
                    eta_a: 1.0,
                    eta_h: 1.0,
                    s: 0.0,
                    dark_model: DarkModel::None,
                    dark_n: 0.0,
                    samples: 50_000,
                    cutoff: Cutoff::Auto,
                    seed: 0,
                    click_trials: experiment::DEFAULT_CLICK_TRIALS,
                    sweep: None,
                }
            }
        };
        if let Some(v) = self.lambda {
            config.lambda = v;
        }
        if let Some(v) = self.eta_a {
            config.eta_a = v;
        }
        if let Some(v) = self.eta_h {
            config.eta_h = v;
        }
        if let Some(v) = self.s {
            config.s = v;
        }
        if let Some(v) = self.seed {
            config.seed = v;
        }
        if let Some(v) = self.samples {
            config.samples = v;
        }
        if let Some(v) = self.click_trials {
            config.click_trials = v;
        }
        if let Some(d) = &self.dark {
            config.dark_model = d.parse().map_err(Failure::from)?;
            if config.dark_model == DarkModel::None {
                config.dark_n = 0.0;
            }
        }
        if let Some(v) = self.dark_n {
            config.dark_n = v;
        }
        if let Some(c) = &self.cutoff {
            config.cutoff = match c.as_str() {
                "auto" => Cutoff::Auto,
                n => Cutoff::Fixed(n.parse().map_err(|_| config_error(format!("cutoff '{n}' is not 'auto' or an integer")))?),
            };
        }
        config.validate()?;
        Ok(config)
    }
}

fn emit(params: &Params, verb: &str, config: &ExperimentConfig, rows: &[experiment::PointRecord]) -> Result<(), Failure> {
    match &params.out_dir {
        Some(dir) => {
            for path in report::write_outputs(dir, &params.stem(verb), verb, config, rows)? {
                eprintln!("wrote {}", path.display());
            }
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            report::write_csv(rows, &mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run { params, dataset } => {
            let mut config = params.load()?;
            config.sweep = None;
            let outcome = experiment::run_point_detailed(&config)?;
            if let Some(path) = dataset {
                let file = std::fs::File::create(&path)?;
                outcome.dataset.write_to(std::io::BufWriter::new(file))?;
                eprintln!("wrote {}", path.display());
            }
            emit(&params, "run", &config, &[outcome.record])
        }
        Command::Sweep {
            params,
            points,
            sweep,
            min,
            max,
        } => {
            let mut config = params.load()?;
            if let Some(name) = sweep {
                let parameter = match name.as_str() {
                    "lambda" => SweepParameter::Lambda,
                    _ => SweepParameter::EtaA,
                };
                let (Some(min), Some(max)) = (min, max) else {
                    return Err(config_error("--sweep needs --min and --max"));
                };
                config.sweep = Some(SweepSpec {
                    parameter,
                    min,
                    max,
                    points: DEFAULT_SWEEP_POINTS,
                });
            }
            let Some(spec) = config.sweep.as_mut() else {
                return Err(config_error("config has no [sweep] block; pass --sweep/--min/--max"));
            };
            if let Some(n) = points {
                spec.points = n;
            }
            config.validate()?;
            // s and eta_h are shared by every point, so reject an unbounded kernel up front
            Kernel::new(config.s, config.eta_h)?;
            let rows = experiment::run_sweep(&config)?;
            let failed = rows.iter().filter(|r| !r.is_ok()).count();
            if failed > 0 {
                eprintln!("warning: {failed} of {} sweep points failed (see status column)", rows.len());
            }
            emit(&params, "sweep", &config, &rows)
        }
        Command::Selfcheck { perturb_kernel, cutoff } => {
            let results = selfcheck::run(SelfcheckOptions {
                kernel_scale: perturb_kernel,
                truncation_cutoff: cutoff,
            });
            print!("{}", selfcheck::format_report(&results));
            if results.iter().all(|r| r.passed) {
                Ok(())
            } else {
                Err(Failure {
                    code: EXIT_SELFCHECK,
                    message: "selfcheck failed".into(),
                })
            }
        }
        Command::Plot { csv, out_dir } => {
            let rows = report::read_csv(std::fs::File::open(&csv)?)?;
            std::fs::create_dir_all(&out_dir)?;
            let stem = csv.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "plot".into());
            let ws0 = out_dir.join(format!("{stem}_ws0.svg"));
            let p1 = out_dir.join(format!("{stem}_p1.svg"));
            report::plot_ws0(&rows, &ws0)?;
            report::plot_p1(&rows, &p1)?;
            eprintln!("wrote {}\nwrote {}", ws0.display(), p1.display());
            Ok(())
        }
        Command::Presets => {
            for (name, text) in experiment::PRESETS {
                println!("# {name}\n{text}");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
