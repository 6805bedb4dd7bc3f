//! Times the MMD ascent on the synthetic fixture.
//!
//! `cargo run --release --example mmd_timing -- [samples] [iterations]`

use std::time::Instant;

use closedenv::data::{generate_synthetic, SyntheticConfig};
use closedenv::sanitizer::mmd::{
    fit_mmd_sanitizer, sanitize_mmd_traced, Bandwidth, BandwidthRule, MmdConfig,
};

fn main() -> closedenv::Result<()> {
    let mut args = std::env::args().skip(1);
    let samples: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(10);
    let iterations: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(10_000);
    let (train, _, user) = generate_synthetic(&SyntheticConfig::default())?;
    let cfg = MmdConfig {
        sigma: Bandwidth::Rule(BandwidthRule::MedianDistance),
        iterations,
        ..MmdConfig::default()
    };
    let san = fit_mmd_sanitizer(&train, &cfg)?;
    let start = Instant::now();
    let mut check = 0.0;
    for i in 0..samples {
        let t = sanitize_mmd_traced(user.features(i), &san, i as u64)?;
        check += t.final_cost - t.initial_cost;
    }
    let secs = start.elapsed().as_secs_f64();
    println!(
        "sigma {:.4}: {:.3} s per sample, cost gain sum {check:.6}",
        san.sigma(),
        secs / samples as f64
    );
    Ok(())
}
