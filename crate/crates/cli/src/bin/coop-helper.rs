//! External helper process speaking the subprocess protocol with a built-in technique.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::Parser;
use coop_core::exchange::external::{serve, ServeRequest, ServeTechnique};
use coop_core::exchange::OutputKind;
use coop_core::frontend::PropertyEncoding;
use coop_core::helpers::HelperStatus;

#[derive(Parser, Debug)]
#[command(name = "coop-helper", about = "Invariant generator for cooperative runs")]
struct Args {
    /// interval, affine, template or trivial.
    #[arg(long, default_value = "affine")]
    technique: ServeTechnique,
    /// Output format: witness or raw.
    #[arg(long, default_value = "witness")]
    format: OutputKind,
    #[arg(long)]
    task: PathBuf,
    #[arg(long)]
    property: PropertyEncoding,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 60.0)]
    timeout: f64,
    #[arg(long, default_value_t = coop_core::frontend::DEFAULT_WIDTH)]
    width: u32,
}

fn main() -> ExitCode {
    env_logger::init();
    let args = Args::parse();
    let req = ServeRequest {
        task: args.task,
        encoding: args.property,
        output: args.output,
        timeout: Duration::from_secs_f64(args.timeout.max(0.0)),
        width: args.width,
        technique: args.technique,
        format: args.format,
    };
    match serve(&req) {
        Ok(HelperStatus::Completed) => ExitCode::SUCCESS,
        Ok(HelperStatus::TimedOut) => {
            eprintln!("timed out");
            ExitCode::from(3)
        }
        Ok(status) => {
            eprintln!("{status}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
