use clap::Parser;

use tlsdiff_cli::{exit, run, Cli};

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(manifest) => {
            eprintln!(
                "wrote {} file(s); manifest in {}",
                manifest.outputs.len(),
                cli.command.common().out.display()
            );
            std::process::exit(exit::SUCCESS);
        }
        Err(e) => {
            eprintln!("tlsdiff: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
