//! Regenerates the committed sample archive under tests/data/golden-sample.
//!
//! Run from the crate root after a deliberate format change:
//!
//! ```sh
//! cargo run -p lindstedt-core --example regen_golden_sample
//! ```
//!
//! The sample pins the archive layout: tests fail if the format drifts
//! without this file being regenerated on purpose.

use lindstedt_core::arith::preset;
use lindstedt_core::lindstedt::expand;
use lindstedt_core::store::save_archive;
use lindstedt_core::Context;

fn main() {
    let ctx = Context::new(30, 8).expect("context");
    let omega = preset("golden", ctx).expect("frequency");
    let series = expand(&omega, 3, ctx).expect("expansion");
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/golden-sample");
    if dir.exists() {
        std::fs::remove_dir_all(&dir).expect("clear old sample");
    }
    save_archive(&series, &dir, Some(0)).expect("write sample");
    println!("wrote {}", dir.display());
}
