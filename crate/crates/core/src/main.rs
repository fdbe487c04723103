fn main() {
    std::process::exit(semigroup_calculus::cli::main_with_args(std::env::args_os()));
}
