fn main() {
    std::process::exit(lmi_codesign::cli::run(std::env::args_os()));
}
