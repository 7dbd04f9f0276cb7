//! Regenerates `assets/peg_3_6_n2400.alist`.

use idd_core::ldpc::{peg_regular, BUNDLED_SEED};

fn main() -> idd_core::Result<()> {
    let code = peg_regular(2400, 3, 6, BUNDLED_SEED)?;
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/assets/peg_3_6_n2400.alist");
    std::fs::write(path, code.to_alist())?;
    println!("wrote {path}: n={} m={} k={}", code.n(), code.m(), code.data_len());
    Ok(())
}
