fn main() {
    std::process::exit(sdr_bench::run(std::env::args_os()));
}
