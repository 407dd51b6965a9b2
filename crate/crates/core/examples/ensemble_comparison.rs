//! Rank-based uncertainty ensemble versus probability averaging and
//! majority vote when one model is over-confident in a single category.
//!
//! Model 1's Fear column is raised to a power below 1 before renormalising,
//! which inflates Fear without changing the model's per-column ordering.
//! The (exponent 0.3, signal 1.5) cell is the frozen acceptance scenario.
//!
//! cargo run --release --example ensemble_comparison

use mater::ensemble::{averaging_ensemble, majority_ensemble, uncertainty_ensemble};
use mater::metrics::accuracy;
use mater::synth::ensemble_scenario;
use mater::Category;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("exponent signal  uncertainty averaging majority");
    for exponent in [1.0, 0.5, 0.3, 0.2] {
        for signal in [1.0, 1.5, 2.0] {
            let mut over = [1.0; 8];
            over[Category::Fear.index()] = exponent;
            let (golds, models) = ensemble_scenario(100, signal, &[over, [1.0; 8], [1.0; 8]], 2024);
            let unc = accuracy(&uncertainty_ensemble(&models)?.labels, &golds)?;
            let avg = accuracy(&averaging_ensemble(&models)?, &golds)?;
            let maj = accuracy(&majority_ensemble(&models)?, &golds)?;
            println!("{exponent:8.1} {signal:6.1}  {unc:10.1}% {avg:8.1}% {maj:7.1}%");
        }
    }
    Ok(())
}
