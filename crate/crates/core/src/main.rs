use std::io::Write;

fn main() {
    let (out, code) = mixfloor::cli::run(std::env::args_os(), &mut std::io::stderr());
    let _ = std::io::stdout().write_all(out.as_bytes());
    std::process::exit(code);
}
