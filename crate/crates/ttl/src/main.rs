use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use ttl::{run_job, Command, JobConfig, TtlError};

#[derive(Parser, Debug)]
#[command(name = "ttl", version, about = "Exact checks of the rank-one theta transfer")]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Job file, TOML or JSON.
    #[arg(long)]
    config: PathBuf,
    /// Report path (defaults to the job's `output`, then stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    threads: Option<usize>,
    /// Highest lifting level tried before a case counts as non-stabilized.
    #[arg(long = "m-max")]
    m_max: Option<i64>,
}

fn run(cli: &Cli) -> Result<i32, TtlError> {
    let mut cfg = JobConfig::load(&cli.config)?;
    if let Some(m) = cli.m_max {
        cfg.caps.m_max = Some(m);
    }
    let report = run_job(&cfg, Some(cli.command), cli.threads)?;
    let text = serde_json::to_string_pretty(&report.to_json()).expect("report serializes");
    match cli.out.as_ref().or(cfg.output.as_ref()) {
        Some(path) => std::fs::write(path, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("ttl: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
