//! Simulated execution kernel speaking the NDJSON protocol on stdin/stdout.

fn main() {
    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    let code = stagewise::kernel::sim::serve(stdin.lock(), stdout.lock());
    std::process::exit(code);
}
