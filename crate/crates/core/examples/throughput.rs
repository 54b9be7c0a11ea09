//! Throughput of fully occupied channel grids at a few symbol rates.

use tempocomp::wdm::{format_ops, plan_matmul, throughput_estimate};

fn main() -> tempocomp::Result<()> {
    println!(
        "{:>10} {:>11} {:>7} {:>6} {:>12}",
        "rate", "wavelengths", "spatial", "guard", "throughput"
    );
    for (rate, w, s, guard) in [
        (10e9, 1, 1, 4),
        (50e9, 1, 1, 0),
        (50e9, 100, 1, 0),
        (50e9, 100, 4, 0),
        (50e9, 100, 4, 16),
    ] {
        let plan = plan_matmul(w, 784, s, w, s)?;
        let ops = throughput_estimate(&plan, rate, guard)?;
        println!(
            "{:>10} {w:>11} {s:>7} {guard:>6} {:>12}",
            format!("{} GBd", rate / 1e9),
            format_ops(ops)
        );
    }
    Ok(())
}
