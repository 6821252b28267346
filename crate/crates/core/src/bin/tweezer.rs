fn main() {
    std::process::exit(tweezer_sim::app::main());
}
