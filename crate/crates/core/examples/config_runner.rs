//! Config-driven runs, the same path the command-line tool takes. With a
//! path argument the file is loaded; otherwise a built-in config is used.
//!
//!     cargo run --release --example config_runner -- configs/reference.toml

use streaming_svrg::config::ExperimentConfig;
use streaming_svrg::runner;

const BUILT_IN: &str = r#"
seed = 11
trials = 20
n_grid = [2000, 8000]

[problem]
family = "ridge"
d = 3
lambda = 0.05

[schedule]
preset = "practical"
b = 3.0
budget = 8000
"#;

pub fn run(path: Option<&str>) -> streaming_svrg::Result<()> {
    let cfg = match path {
        Some(p) => ExperimentConfig::load(p.as_ref())?,
        None => ExperimentConfig::from_toml_str(BUILT_IN)?,
    };
    println!("# config\n{}", cfg.to_toml_string()?);
    let mut out = std::io::stdout();
    let mut log = std::io::stderr();
    println!("# simulate");
    runner::simulate(&cfg, &mut out, &mut log)?;
    if !cfg.n_grid.is_empty() {
        println!("# sweep");
        runner::sweep(&cfg, &mut out, &mut log)?;
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> streaming_svrg::Result<()> {
    let arg = std::env::args().nth(1);
    run(arg.as_deref())
}
