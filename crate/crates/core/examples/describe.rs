//! Prints the layer table, parameter and FLOP counts of every variant.
//!
//! cargo run --release --example describe -- [width_divisor]

use mmaudio::models::{build_variant, count_flops, count_parameters, describe, FlopConvention, Variant, VariantOptions};

fn main() -> mmaudio::Result<()> {
    let divisor: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let opts = VariantOptions { width_divisor: divisor, ..VariantOptions::default() };
    for v in Variant::ALL {
        let spec = build_variant(v, opts)?;
        println!(
            "{:<16} {:>12} parameters {:>10.2}M MACs",
            spec.name,
            count_parameters(&spec)?,
            count_flops(&spec, FlopConvention::Mac)? as f64 / 1e6
        );
    }
    println!();
    print!("{}", describe(&build_variant(Variant::VggishFullconv, opts)?)?);
    Ok(())
}
