use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dualform::report::{self, CloudKind, Options, PatchSource};
use dualform::{Error, JetMethod};

#[derive(Parser)]
#[command(name = "dualform", version, about = "Dual varieties and second fundamental form checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the dual cloud and write it as CSV (and optionally PLY).
    Trace {
        #[command(flatten)]
        common: Common,
        /// Also write the dual points as ASCII PLY.
        #[arg(long, value_name = "FILE")]
        ply: Option<PathBuf>,
    },
    /// Check the decomposition and inverse-duality statements on random pairs.
    Check {
        #[command(flatten)]
        common: Common,
    },
    /// Compare the dual of the dual with the expected target.
    Bidual {
        #[command(flatten)]
        common: Common,
    },
    /// Emit whitespace-separated coordinate columns for plotting.
    Plotdata {
        #[command(flatten)]
        common: Common,
        /// Read a CSV written by `trace` instead of sampling a patch.
        #[arg(long, value_name = "FILE", conflicts_with_all = ["builtin", "dsl"])]
        input: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Cloud::Q)]
        cloud: Cloud,
        /// 1-based coordinate columns, e.g. 1,2,4.
        #[arg(long, value_delimiter = ',', value_name = "i,j,k")]
        project: Option<Vec<usize>>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Cloud {
    P,
    Q,
    Bidual,
}

#[derive(Args)]
struct Common {
    /// Catalog entry, NAME[:p1,p2,...].
    #[arg(long, value_name = "NAME[:p1,p2]", conflicts_with = "dsl")]
    builtin: Option<String>,
    /// Patch file in the parametrization DSL.
    #[arg(long, value_name = "FILE")]
    dsl: Option<PathBuf>,
    /// Samples per parameter axis [default: 256].
    #[arg(long, value_delimiter = ',', value_name = "N[,N...]")]
    grid: Option<Vec<usize>>,
    #[arg(long, default_value_t = report::DEFAULT_SAMPLES)]
    samples: usize,
    #[arg(long, default_value_t = report::DEFAULT_TOL)]
    tol: f64,
    /// Use central finite differences with this step instead of exact jets.
    #[arg(long, value_name = "H")]
    fd_step: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file [default: stdout].
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

impl Common {
    fn options(&self) -> Result<Options, String> {
        let source = match (&self.builtin, &self.dsl) {
            (Some(spec), None) => PatchSource::Builtin(spec.clone()),
            (None, Some(path)) => PatchSource::Dsl(path.clone()),
            _ => return Err("exactly one of --builtin or --dsl is required".into()),
        };
        if let Some(grid) = &self.grid {
            if grid.is_empty() || grid.contains(&0) {
                return Err("--grid entries must be positive".into());
            }
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err("--tol must be positive".into());
        }
        let method = match self.fd_step {
            None => JetMethod::Ad,
            Some(h) if h > 0.0 && h.is_finite() => JetMethod::Fd { h },
            Some(_) => return Err("--fd-step must be positive".into()),
        };
        Ok(Options {
            source,
            grid: self.grid.clone(),
            samples: self.samples,
            tol: self.tol,
            method,
            seed: self.seed,
        })
    }

    fn writer(&self) -> io::Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(path) => Box::new(BufWriter::new(File::create(path)?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }
}

/// Exit status for a failed run: 2 for bad input, 1 for everything the
/// checks themselves reject.
fn fail(e: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(2)
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Trace { common, ply } => {
            let opts = common.options().map_err(Error::InvalidParams)?;
            let (patch, cloud, rep) = report::trace(&opts)?;
            let mut w = common.writer()?;
            report::write_cloud_csv(&cloud, &patch, &mut w)?;
            w.flush()?;
            if let Some(path) = ply {
                let qs: Vec<_> = cloud.pairs.iter().map(|p| p.q.clone()).collect();
                let mut f = BufWriter::new(File::create(path)?);
                report::write_ply(&qs, &mut f)?;
                f.flush()?;
            }
            let t = rep.trace.expect("trace summary");
            eprintln!(
                "{} pairs, generic rank {} ({:.3} of pairs), grid {:?}{}",
                t.pairs,
                t.generic_rank,
                t.generic_fraction,
                rep.settings.grid,
                if rep.settings.grid_is_default { " (default)" } else { "" }
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Check { common } => {
            let opts = common.options().map_err(Error::InvalidParams)?;
            let rep = report::check(&opts)?;
            let mut w = common.writer()?;
            w.write_all(rep.to_json().as_bytes())?;
            w.flush()?;
            Ok(ExitCode::from(rep.exit_status as u8))
        }
        Command::Bidual { common } => {
            let opts = common.options().map_err(Error::InvalidParams)?;
            let (rep, _) = report::bidual(&opts)?;
            let mut w = common.writer()?;
            w.write_all(rep.to_json().as_bytes())?;
            w.flush()?;
            Ok(ExitCode::from(rep.exit_status as u8))
        }
        Command::Plotdata {
            common,
            input,
            cloud,
            project,
        } => {
            let kind = match cloud {
                Cloud::P => CloudKind::P,
                Cloud::Q => CloudKind::Q,
                Cloud::Bidual => CloudKind::Bidual,
            };
            let rows = match input {
                Some(path) => report::cloud_from_csv(&std::fs::read_to_string(path)?, kind)?,
                None => report::cloud_from_patch(&common.options().map_err(Error::InvalidParams)?, kind)?,
            };
            if rows.is_empty() {
                eprintln!("warning: empty cloud, writing an empty file");
            }
            let rows = report::project_columns(&rows, project.as_deref())?;
            let mut w = common.writer()?;
            report::write_columns(&rows, &mut w)?;
            w.flush()?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    dualform::init_threads();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    run(cli).unwrap_or_else(fail)
}
