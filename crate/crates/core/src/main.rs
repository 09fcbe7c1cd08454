fn main() {
    let (code, out) = opacity::cli::run_cli(std::env::args_os());
    if code == 0 {
        print!("{out}");
    } else {
        eprint!("{out}");
    }
    std::process::exit(code);
}
