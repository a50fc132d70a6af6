fn main() {
    std::process::exit(sptcl::cli::run(std::env::args_os()));
}
