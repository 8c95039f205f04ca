use std::process::ExitCode;

use clap::{Parser, Subcommand};
use oa_som_cli::commands::{
    cmd_extract, cmd_histogram, cmd_run, cmd_synth, cmd_test, cmd_train, ExtractArgs,
    HistogramArgs, RunArgs, SynthArgs, TestArgs, TrainArgs,
};
use oa_som_cli::CliResult;

/// Osteoarthritis detection on hand radiographs with a winner-takes-all SOM.
#[derive(Debug, Parser)]
#[command(name = "oa-som", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic radiograph corpus.
    Synth(SynthArgs),
    /// Preprocess image folders into a normalized feature file.
    Extract(ExtractArgs),
    /// Train a SOM on a feature file and label its clusters.
    Train(TrainArgs),
    /// Classify a feature file with a trained model and write reports.
    Test(TestArgs),
    /// synth, extract, train and test in one go.
    Run(RunArgs),
    /// Dump the masked histogram of one image as CSV.
    Histogram(HistogramArgs),
}

fn execute(command: Command) -> CliResult<()> {
    match command {
        Command::Synth(args) => {
            let out = cmd_synth(&args)?;
            println!(
                "wrote {} images to {} and {}",
                out.written,
                out.normal_dir.display(),
                out.sick_dir.display()
            );
        }
        Command::Extract(args) => {
            let out = cmd_extract(&args)?;
            for skip in &out.skipped {
                eprintln!("skipped {}: {}", skip.path.display(), skip.reason);
            }
            println!(
                "wrote {} samples (k = {}) to {}",
                out.written,
                out.dims,
                args.out.display()
            );
            if let Some(test) = &args.test_out {
                println!(
                    "wrote {} held-out samples to {}",
                    out.test_written,
                    test.display()
                );
            }
            println!("min-max parameters: {}", out.params_path.display());
        }
        Command::Train(args) => {
            let out = cmd_train(&args)?;
            print!("{}", out.text);
            println!("model written to {}", args.out.display());
        }
        Command::Test(args) => {
            let out = cmd_test(&args)?;
            print!("{}", out.text);
            println!("reports: {} {}", args.out.display(), out.csv_path.display());
        }
        Command::Run(args) => {
            let out = cmd_run(&args)?;
            for skip in &out.skipped {
                eprintln!("skipped {}: {}", skip.path.display(), skip.reason);
            }
            print!("{}", out.train.text);
            println!();
            print!("{}", out.test.text);
            println!("outputs in {}", args.out.display());
        }
        Command::Histogram(args) => {
            let t = cmd_histogram(&args)?;
            println!(
                "threshold {t:.3}; histogram written to {}",
                args.out.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
