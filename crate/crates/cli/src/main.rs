fn main() {
    std::process::exit(mecplan_cli::run());
}
