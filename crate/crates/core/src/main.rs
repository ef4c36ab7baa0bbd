use clap::Parser;

fn main() {
    let cli = ballbasis::cli::Cli::parse();
    std::process::exit(ballbasis::cli::execute(cli));
}
