fn main() {
    std::process::exit(uavtrack::cli::run(std::env::args_os()));
}
