//! How many frames averaging needs to match a conventional estimate.

use std::error::Error;

use prnu_sda::analysis::{
    required_images, variance_bound_conventional, variance_bound_sda, NoiseBudget,
};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let n = 100;
    println!("{:>12} {:>6} {:>10}", "s2/s1", "depth", "frames");
    for ratio in [0.0, 0.1, 0.5, 1.0] {
        let budget = NoiseBudget::new(9.0, 9.0 * ratio)?;
        for d in [1, 5, 30] {
            let bound = required_images(n, d, budget)?;
            println!("{ratio:>12} {d:>6} {:>10}", bound.frames_needed());
        }
    }

    let budget = NoiseBudget::new(9.0, 1.0)?;
    let sum_i2 = 100.0 * 128.0f64.powi(2);
    println!(
        "variance bounds: conventional {:.3e}, depth 10 {:.3e}",
        variance_bound_conventional(budget, sum_i2)?,
        variance_bound_sda(budget, 10, sum_i2 / 10.0)?
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
