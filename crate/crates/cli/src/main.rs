mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

// Exit codes: 0 success, 1 validation/data error, 2 usage error (raised by
// clap on unknown flags or missing arguments).
fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TRIAD_LOG", "error"))
        .format_timestamp(None)
        .init();

    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("triad: cannot configure {threads} threads: {e}");
            return ExitCode::from(1);
        }
    }

    let result = match &cli.command {
        Command::Ingest { data, out } => commands::ingest(data, &out.out),
        Command::Stats { data, out } => commands::stats(data, &out.out),
        Command::Census { data, out } => commands::census_cmd(data, &out.out),
        Command::Infopass { command } => commands::infopass_cmd(command),
        Command::Trust {
            clusters,
            ratings,
            min_items,
            out,
        } => commands::trust_cmd(clusters, ratings, *min_items, &out.out),
        Command::Choice {
            data,
            graph,
            subset,
            per_category,
            split_seed,
            train_seed,
            lambda,
            epochs,
            out,
        } => commands::choice_cmd(
            data,
            graph,
            subset,
            *per_category,
            *split_seed,
            *train_seed,
            *lambda,
            *epochs,
            &out.out,
        ),
        Command::Syngen { config, seed, out } => commands::syngen_cmd(config, *seed, &out.out),
        Command::Report { input, out } => commands::report_cmd(input, &out.out),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("triad: {e}");
            ExitCode::from(1)
        }
    }
}
