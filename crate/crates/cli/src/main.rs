use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use qds_cli::{
    cmd_check, cmd_corner, cmd_decompose, cmd_demo, cmd_dilate, cmd_evolve, DilateArgs, InputError,
    RunReport, Settings,
};
use qds_core::dilate::Scheme;

#[derive(Parser)]
#[command(
    name = "qds",
    version,
    about = "Checks, decomposes and dilates symmetric quantum dynamical semigroups"
)]
struct Cli {
    /// Base tolerance; checks compare residuals against tol · max(1, ‖ℒ‖).
    #[arg(long, global = true, env = "QDS_DEFAULT_TOL", default_value_t = 1e-9)]
    tol: f64,
    /// Seed for Monte Carlo runs.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Override the trace weights of the problem file, e.g. `--weights 2,3`.
    #[arg(long, global = true, value_delimiter = ',')]
    weights: Option<Vec<f64>>,
    /// Also write the JSON report to this file.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Conservativity, symmetry, conditional complete positivity and the center relation.
    Check { file: PathBuf },
    /// Extract a derivation family reproducing the generator.
    Decompose {
        file: PathBuf,
        /// Write the extracted family as a problem file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Apply exp(tℒ) to an element.
    Evolve {
        file: PathBuf,
        #[arg(long)]
        t: f64,
        /// `identity`, `unit:BLOCK,I,J` (1-based), `random:SEED` or `auto`.
        #[arg(long, default_value = "auto")]
        x: String,
    },
    /// Monte Carlo Brownian dilation compared with exp(tℒ).
    Dilate {
        file: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value_t = 20_000)]
        paths: usize,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        /// `unitary` or `euler-maruyama`.
        #[arg(long, default_value = "unitary")]
        scheme: String,
        #[arg(long, default_value = "auto")]
        x: String,
    },
    /// Corner-algebra checks for grid derivatives.
    Corner {
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value_t = 64)]
        size: usize,
        #[arg(long, default_value_t = 1.0)]
        spacing: f64,
        /// Corner sizes, e.g. `--m 4,8,16`.
        #[arg(long, value_delimiter = ',', default_values_t = [4, 8, 16])]
        m: Vec<usize>,
    },
    /// Built-in fixtures: dephasing, markov or grid.
    Demo { name: String },
}

fn run(cli: &Cli) -> Result<RunReport, InputError> {
    if !(cli.tol > 0.0 && cli.tol.is_finite()) {
        return Err(InputError::new(format!(
            "--tol must be positive, got {}",
            cli.tol
        )));
    }
    let settings = Settings {
        tol: cli.tol,
        seed: cli.seed,
        weights: cli.weights.clone(),
    };
    match &cli.command {
        Command::Check { file } => cmd_check(file, &settings),
        Command::Decompose { file, out } => cmd_decompose(file, out.as_deref(), &settings),
        Command::Evolve { file, t, x } => cmd_evolve(file, *t, x, &settings),
        Command::Dilate {
            file,
            t,
            paths,
            steps,
            scheme,
            x,
        } => {
            let scheme: Scheme = scheme
                .parse()
                .map_err(|e: qds_core::Error| InputError::new(format!("--scheme: {e}")))?;
            let args = DilateArgs {
                t: *t,
                paths: *paths,
                steps: *steps,
                scheme,
                x: x.clone(),
            };
            cmd_dilate(file, &args, &settings)
        }
        Command::Corner {
            dim,
            size,
            spacing,
            m,
        } => cmd_corner(*dim, *size, *spacing, m, &settings),
        Command::Demo { name } => cmd_demo(name, &settings),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let report = match run(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let rendered = match cli.format {
        Format::Text => report.to_text(),
        Format::Json => report.to_json() + "\n",
    };
    // A closed pipe (e.g. `| head`) is not an error of the run itself.
    let _ = std::io::stdout().lock().write_all(rendered.as_bytes());
    if let Some(path) = &cli.report {
        if let Err(e) = std::fs::write(path, report.to_json()) {
            eprintln!("error: {}: {e}", path.display());
            return ExitCode::from(2);
        }
    }
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
