use clap::Parser;

fn main() {
    let cli = mindisp::cli::Cli::parse();
    std::process::exit(mindisp::cli::run(cli));
}
