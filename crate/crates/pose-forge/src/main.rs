use clap::error::ErrorKind;

/// Exit codes: 0 success, 1 user error, 2 internal error.
fn main() {
    let cli = match pose_forge::cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            std::process::exit(0);
        }
        Err(e) => {
            eprint!("{e}");
            std::process::exit(1);
        }
    };

    let level = match cli.verbosity() {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();

    let code = match std::panic::catch_unwind(|| pose_forge::cli::run(cli)) {
        Ok(Ok(())) => 0,
        Ok(Err(e)) => {
            eprintln!("error: {e:#}");
            1
        }
        Err(_) => {
            eprintln!("internal error (panic); rerun with -vv for details");
            2
        }
    };
    std::process::exit(code);
}
