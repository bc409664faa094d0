fn main() {
    std::process::exit(mpcs::run(std::env::args()));
}
