use std::io;

fn main() {
    let stdin = io::stdin();
    let mut io = stexify::cli::Io {
        stdin: &mut stdin.lock(),
        stdout: &mut io::stdout(),
        stderr: &mut io::stderr(),
    };
    std::process::exit(stexify::cli::run(std::env::args_os(), &mut io));
}
