use std::io;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let stdin = io::stdin();
    let code = rec::cli::main(
        &args,
        &mut stdin.lock(),
        &mut io::stdout().lock(),
        &mut io::stderr().lock(),
    );
    std::process::exit(code);
}
