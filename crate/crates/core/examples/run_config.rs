//! Drives the subcommand runners from a TOML configuration, as the binary does.
//!
//! cargo run --release --example run_config -- [out_dir]

use tractdim::app::{run, Command};
use tractdim::config::RunConfig;

const CONFIG: &str = r#"
p = 1.0
seed = 7

[transfer]
moduli = [2.0, 50.0]
args = [0.0, 2.5]
t_values = [1.25, 1.75]

[pressure]
t_values = [1.1, 1.5]
nu = 96
nv = 48
"#;

fn main() -> tractdim::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "run_config_out".into());
    let mut cfg = RunConfig::from_toml(CONFIG)?;
    cfg.out = out.into();
    for cmd in [Command::Eval, Command::Transfer, Command::Pressure] {
        let res = run(cmd, &cfg, Some(2))?;
        for f in res.files {
            println!("{cmd:?}: {}", f.display());
        }
    }
    Ok(())
}
