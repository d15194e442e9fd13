//! Run every built-in scenario through `construct` and print the report
//! summaries, optionally writing outputs to a directory.
//!
//! cargo run --example scenarios -- [out-dir]

use std::path::PathBuf;

use hjkit::cli::{self, Command, Format};

fn main() -> hjkit::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from);
    for sc in cli::registry() {
        let mut cfg = sc.config.clone();
        cfg.probes = 10;
        let run = cli::run(Command::Construct, &cfg);
        println!("{}", run.report.summary());
        if let Some(dir) = &out {
            cli::write_outputs(&dir.join(sc.name()), &run.report, &run.tables, Format::Csv)?;
        }
    }
    Ok(())
}
