use std::process::ExitCode;

use st_lab_cli::{configure_threads, execute, parse_cli};

fn main() -> ExitCode {
    let (cli, manifest) = match parse_cli(std::env::args_os()) {
        Ok(parsed) => parsed,
        Err(e) => {
            // help and version also land here, with exit code 0
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    if let Err(e) = configure_threads(std::env::var("ST_LAB_THREADS").ok().as_deref()) {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    match execute(&cli, &manifest) {
        Ok(out) => {
            if manifest.output.is_none() {
                print!("{}", out.json);
            }
            if out.regression {
                eprintln!("regression against baseline");
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
