use clap::Parser;
use qcnn_harness::cli::Cli;

fn main() {
    let cli = Cli::parse();
    if let Err(e) = qcnn_harness::run(&cli.command, &mut |line| eprintln!("{line}"), &mut |line| println!("{line}")) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
