//! Median |r - 1| of every reported ratio series on the sample problems.
//!
//! `cargo run --example delta_readings -p periodic-evans`

use std::path::Path;

use periodic_evans::bridge::{verify_relation, Convention, DeltaReading, Quantity, VerifyOptions};
use periodic_evans::{Complex64, SpectralProblem};

fn main() -> periodic_evans::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../problems");
    let lambdas = [Complex64::new(0.1, 0.2), Complex64::new(1.0, 0.0)];
    for name in [
        "free_scalar",
        "mathieu_q0.5",
        "system_2x2",
        "complex_scalar",
    ] {
        let p = SpectralProblem::load(dir.join(format!("{name}.json")))?;
        let report = verify_relation(
            &p,
            &lambdas,
            &[8, 16, 32, 64],
            1e-2,
            VerifyOptions::default(),
        )?;
        println!("{name}");
        for (label, q, c, d) in [
            (
                "r1 corrected a0",
                Quantity::R1,
                Some(Convention::Corrected),
                Some(DeltaReading::A0),
            ),
            (
                "r1 corrected a1",
                Quantity::R1,
                Some(Convention::Corrected),
                Some(DeltaReading::A1),
            ),
            (
                "r1 printed   a0",
                Quantity::R1,
                Some(Convention::Printed),
                Some(DeltaReading::A0),
            ),
            ("r2             ", Quantity::R2, None, None),
        ] {
            let s = report
                .series_for(q, c, d)
                .expect("every series is reported");
            let errs: Vec<String> = s.median_errors.iter().map(|e| format!("{e:.2e}")).collect();
            println!("  {label}  {}", errs.join("  "));
        }
    }
    Ok(())
}
