use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ptdual::commands::{self, Outcome, EXIT_CONFIG};
use ptdual::config::{ConfigError, KeyValues, RunConfig};

/// Dual eigenbases, signatures and the C operator of PT-symmetric Hamiltonians.
#[derive(Parser)]
#[command(name = "ptdual", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues, reality classes and low-level signatures.
    Spectrum(RunArgs),
    /// Full residual report; exit 1 if any gate fails.
    Verify(RunArgs),
    /// Sweep one parameter and bracket PT phase boundaries.
    Sweep(SweepArgs),
    /// The C operator as a matrix and as a continuum kernel.
    Cmatrix(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// `key = value` configuration file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// json | csv
    #[arg(long)]
    format: Option<String>,
    /// Number of low-lying levels to analyse.
    #[arg(long)]
    levels: Option<String>,
    /// Omit the timestamp so repeated runs are byte-identical.
    #[arg(long)]
    no_timestamp: bool,
    /// grid | matrix2 | explicit
    #[arg(long)]
    model: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    nu: Option<String>,
    /// Grid half-width.
    #[arg(long = "L")]
    half_width: Option<String>,
    /// Grid points (odd).
    #[arg(long = "N")]
    points: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    r: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    s: Option<String>,
    /// Accepts multiples of pi, e.g. `pi/6`.
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<String>,
    #[arg(long = "tol.eig_tol")]
    eig_tol: Option<String>,
    #[arg(long = "tol.bi_tol")]
    bi_tol: Option<String>,
    #[arg(long = "tol.pt_tol")]
    pt_tol: Option<String>,
    #[arg(long = "tol.reality_tol")]
    reality_tol: Option<String>,
    #[arg(long = "tol.gram_tol")]
    gram_tol: Option<String>,
    #[arg(long = "tol.c_tol")]
    c_tol: Option<String>,
    #[arg(long = "tol.degeneracy_tol")]
    degeneracy_tol: Option<String>,
    #[arg(long = "tol.cond_max")]
    cond_max: Option<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// nu | theta | s | r
    #[arg(long)]
    param: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    from: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    to: Option<String>,
    #[arg(long)]
    steps: Option<String>,
}

impl RunArgs {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let mut add = |k: &'static str, v: &Option<String>| {
            if let Some(v) = v {
                out.push((k, v.clone()));
            }
        };
        add("format", &self.format);
        add("levels", &self.levels);
        add("model", &self.model);
        add("nu", &self.nu);
        add("L", &self.half_width);
        add("N", &self.points);
        add("r", &self.r);
        add("s", &self.s);
        add("theta", &self.theta);
        add("tol.eig_tol", &self.eig_tol);
        add("tol.bi_tol", &self.bi_tol);
        add("tol.pt_tol", &self.pt_tol);
        add("tol.reality_tol", &self.reality_tol);
        add("tol.gram_tol", &self.gram_tol);
        add("tol.c_tol", &self.c_tol);
        add("tol.degeneracy_tol", &self.degeneracy_tol);
        add("tol.cond_max", &self.cond_max);
        if let Some(p) = &self.out {
            out.push(("out", p.display().to_string()));
        }
        if self.no_timestamp {
            out.push(("no_timestamp", "true".into()));
        }
        out
    }
}

fn resolve(run: &RunArgs, extra: Vec<(&'static str, String)>) -> Result<RunConfig, ConfigError> {
    let mut kv = match &run.config {
        Some(path) => KeyValues::from_file(path)?,
        None => KeyValues::default(),
    };
    for (k, v) in run.overrides().into_iter().chain(extra) {
        kv.set(k, &v)?;
    }
    RunConfig::from_key_values(&kv)
}

fn emit(outcome: &Outcome, cfg: &RunConfig) -> i32 {
    for m in &outcome.messages {
        eprintln!("ptdual: {m}");
    }
    match &cfg.out {
        Some(path) if !outcome.body.is_empty() => {
            if let Err(e) = std::fs::write(path, &outcome.body) {
                eprintln!("ptdual: cannot write {}: {e}", path.display());
                return EXIT_CONFIG;
            }
        }
        _ => print!("{}", outcome.body),
    }
    outcome.exit_code
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (run, extra, command): (&RunArgs, Vec<(&'static str, String)>, fn(&RunConfig) -> Outcome) = match &cli.command {
        Command::Spectrum(a) => (a, vec![], commands::cmd_spectrum),
        Command::Verify(a) => (a, vec![], commands::cmd_verify),
        Command::Cmatrix(a) => (a, vec![], commands::cmd_cmatrix),
        Command::Sweep(a) => {
            let extra = [
                ("sweep.param", &a.param),
                ("sweep.from", &a.from),
                ("sweep.to", &a.to),
                ("sweep.steps", &a.steps),
            ]
            .into_iter()
            .filter_map(|(k, v)| v.clone().map(|v| (k, v)))
            .collect();
            (&a.run, extra, commands::cmd_sweep)
        }
    };
    let code = match resolve(run, extra) {
        Ok(cfg) => emit(&command(&cfg), &cfg),
        Err(e) => {
            eprintln!("ptdual: configuration error: {e}");
            EXIT_CONFIG
        }
    };
    ExitCode::from(code as u8)
}
