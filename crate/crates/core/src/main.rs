use std::panic;

fn main() {
    let code = panic::catch_unwind(|| shapevo::cli::run(std::env::args_os())).unwrap_or(shapevo::cli::EXIT_INTERNAL);
    std::process::exit(code);
}
