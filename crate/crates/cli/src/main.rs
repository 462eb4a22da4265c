use clap::Parser;
use linkage_cli::{run, Cli};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let line = serde_json::json!({
                "error": "usage",
                "message": e.to_string().lines().next().unwrap_or("").trim_start_matches("error: "),
                "exit_code": 2,
            });
            eprintln!("{line}");
            std::process::exit(2);
        }
    };
    match run(&cli) {
        Ok(files) => {
            for f in files {
                println!("{f}");
            }
        }
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            std::process::exit(e.exit_code());
        }
    }
}
