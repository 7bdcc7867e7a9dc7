//! Run any experiment config, the way the `gbp` binary does.
//!
//!     cargo run --release --example run_config -- crates/core/configs/pca_recovery.toml /tmp/pca

use std::path::PathBuf;

use gbp::experiments::run_file;

fn main() {
    let mut args = std::env::args().skip(1);
    let Some(config) = args.next() else {
        eprintln!("usage: run_config <config.toml> [out-dir]");
        std::process::exit(1);
    };
    let out = args.next().map(PathBuf::from);
    match run_file(config.as_ref(), None, None, out.as_deref()) {
        Ok((report, dir)) => {
            print!("{}", report.summary().render());
            println!("# wrote {}", dir.display());
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
