use std::io;

fn main() {
    let code = noma_mec::cli::run(std::env::args_os(), &mut io::stdout(), &mut io::stderr());
    std::process::exit(code);
}
