fn main() { std::process::exit(porocontact::cli::run_cli(&std::env::args().skip(1).collect::<Vec<_>>())) }
