use clap::Parser;

fn main() {
    let cli = mhlab_cli::Cli::parse();
    let mut stdout = std::io::stdout();
    if let Err(e) = mhlab_cli::run(cli, &mut stdout) {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
