fn main() {
    std::process::exit(sfs_cli::run(std::env::args_os()));
}
