use std::process::ExitCode;

fn main() -> ExitCode {
    let stdout = std::io::stdout();
    ExitCode::from(csi_rdf::cli::run(std::env::args_os(), &mut stdout.lock()))
}
