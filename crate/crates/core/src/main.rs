use std::process::ExitCode;

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let code = dnnf_lab::cli::main_with_args(&args);
    ExitCode::from(code)
}
