use clap::Parser;
use prs_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    let level = if cli.quiet { log::LevelFilter::Error } else { log::LevelFilter::Info };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();
    if let Err(e) = run(&cli) {
        eprintln!("error: {e}");
        eprintln!("{}", e.to_json());
        std::process::exit(e.exit_code());
    }
}
