//! Runs the four-panel experiment for several seeds and prints 1-NN accuracy
//! per panel.
//!
//! cargo run --release -p rntk-core --example seed_sweep -- 0 1 2

use rntk_core::pipeline::{run_experiment, ExperimentConfig, Method};

fn main() -> rntk_core::Result<()> {
    let seeds: Vec<u64> = std::env::args()
        .skip(1)
        .map(|s| s.parse().expect("seeds are integers"))
        .collect();
    let seeds = if seeds.is_empty() {
        vec![0, 1, 2]
    } else {
        seeds
    };
    print!("seed");
    for m in Method::ALL {
        print!("  {:>12}", m.slug());
    }
    println!("  thresholds");
    for seed in seeds {
        let result = run_experiment(&ExperimentConfig::seeded(seed))?;
        print!("{seed:>4}");
        for m in Method::ALL {
            print!("  {:>12.3}", result.panel(m).metrics.one_nn_accuracy);
        }
        let met = result.threshold_checks().iter().all(|c| c.passed);
        println!("  {}", if met { "met" } else { "missed" });
    }
    Ok(())
}
