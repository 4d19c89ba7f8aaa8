use std::io::Write;

fn main() {
    let cli = match goalvalue_cli::parse_args(std::env::args_os().skip(1)) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            std::process::exit(e.exit_code());
        }
    };
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let code = goalvalue_cli::execute(cli, &mut stdout.lock(), &mut stderr.lock());
    let _ = stdout.lock().flush();
    std::process::exit(code);
}
