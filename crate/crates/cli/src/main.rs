use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use osa_cli::spec::parse_config;
use osa_cli::{preset, run_with_threads, write_rows, CliError, ExperimentSpec, Format, Mode};

#[derive(Parser)]
#[command(name = "osa", version, about = "Spectrum-sharing experiments for overlaid Poisson networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiments in a JSON configuration file.
    Run {
        config: String,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run the experiments behind a figure.
    Preset {
        name: String,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Print a preset as a JSON configuration.
    Show { name: String },
}

#[derive(Args)]
struct Overrides {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Simulation window radius.
    #[arg(long)]
    r_sim: Option<f64>,
    /// Output path; `-` writes to standard output.
    #[arg(long, default_value = "-")]
    out: String,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Worker threads for simulation; 0 picks one per core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

impl Overrides {
    fn apply(&self, spec: &mut ExperimentSpec) {
        if let Some(s) = self.seed {
            spec.seed = s;
        }
        if let Some(n) = self.trials {
            spec.n_trials = n;
        }
        if let Some(m) = self.mode {
            spec.mode = m;
        }
        if let Some(r) = self.r_sim {
            spec.r_sim = r;
        }
    }
}

/// Standard output that stops writing, without error, once the reader hangs up.
struct Stdout {
    inner: io::StdoutLock<'static>,
    closed: bool,
}

impl Stdout {
    fn new() -> Self {
        Stdout {
            inner: io::stdout().lock(),
            closed: false,
        }
    }

    fn guard<T>(&mut self, r: io::Result<T>, done: T) -> io::Result<T> {
        match r {
            Err(e) if e.kind() == io::ErrorKind::BrokenPipe => {
                self.closed = true;
                Ok(done)
            }
            r => r,
        }
    }
}

impl Write for Stdout {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        if self.closed {
            return Ok(buf.len());
        }
        let r = self.inner.write(buf);
        self.guard(r, buf.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        if self.closed {
            return Ok(());
        }
        let r = self.inner.flush();
        self.guard(r, ())
    }
}

fn execute(mut specs: Vec<ExperimentSpec>, o: &Overrides) -> Result<(), CliError> {
    for spec in &mut specs {
        o.apply(spec);
        spec.validate()?;
    }
    let mut rows = Vec::new();
    for spec in &specs {
        rows.extend(run_with_threads(spec, o.threads)?);
    }
    let out: Box<dyn Write> = if o.out == "-" {
        Box::new(Stdout::new())
    } else {
        Box::new(BufWriter::new(
            File::create(&o.out).map_err(|e| CliError::Output(format!("{}: {e}", o.out)))?,
        ))
    };
    write_rows(&rows, o.format, out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, overrides } => std::fs::read_to_string(&config)
            .map_err(|source| CliError::Read {
                path: config.clone(),
                source,
            })
            .and_then(|text| parse_config(&text))
            .and_then(|specs| execute(specs, &overrides)),
        Command::Preset { name, overrides } => preset(&name).and_then(|specs| execute(specs, &overrides)),
        Command::Show { name } => preset(&name).and_then(|specs| {
            let text = serde_json::to_string_pretty(&specs)?;
            writeln!(Stdout::new(), "{text}").map_err(|e| CliError::Output(e.to_string()))
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("osa: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
