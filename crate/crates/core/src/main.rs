fn main() {
    std::process::exit(irs_noma::harness::cli_main(std::env::args_os()));
}
