use clap::Parser;

fn main() {
    if let Err(e) = hcn::cli::run(hcn::cli::Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
