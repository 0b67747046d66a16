use clap::Parser;

fn main() {
    let cli = eanet_cli::Cli::parse();
    match eanet_cli::run(cli) {
        Ok(outcome) => print!("{}", outcome.summary),
        Err(e) => {
            eprintln!("eanet: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
