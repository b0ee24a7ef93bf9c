use clap::Parser;

fn main() {
    let cli = brachist::cli::Cli::parse();
    match brachist::cli::run(&cli) {
        Ok(text) => print!("{text}"),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    }
}
