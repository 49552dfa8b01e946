//! Estimates the success rate of the random covering construction for the
//! six-element example pattern at n = 4 with a 2×2×2 target box.
//!
//! Usage: `cargo run --release -p pmm-core --example calibrate [trials] [seed] [n]`

use pmm_core::capacity::RateVector;
use pmm_core::fixtures;
use pmm_core::sim::{simulate, SimConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let trials: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(100_000);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0xca11_b4a7e);
    let n: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(4);
    let mut cfg = SimConfig::new(n, RateVector::new(vec![0.25; 3])?, trials);
    cfg.seed = seed;
    let r = simulate(&fixtures::lambda_ex(), &cfg)?;
    let p = r.success_rate();
    let se = (p * (1.0 - p) / trials as f64).sqrt();
    println!("n              {n}");
    println!("targets        {:?}", r.targets);
    println!("trials         {trials}");
    println!("seed           {seed:#x}");
    println!("successes      {}", r.successes);
    println!("success rate   {p:.6}");
    println!("std error      {se:.6}");
    println!("3-sigma low    {:.6}", p - 3.0 * se);
    println!("seconds        {:.2}", r.seconds);
    Ok(())
}
