//! Replays the hand-worked three-client run (n = 2, K = 2, α* = 0.3) from the
//! bundled fixture and prints every entity's view.

use std::path::Path;

use polyveil::cli::RunConfig;
use polyveil::protocol::{run_fixture, ProtocolParams, ServerView, Variant};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/worked_example.json");
    let config = RunConfig::load(&path)?;
    let fixture = config.fixture.expect("fixture block");
    let params = ProtocolParams::new(Variant::Full, 2, 3, 2, 0.3);
    let t = run_fixture(&fixture, &params, 0)?;

    if let ServerView::Shuffled { matrices, f, shuffled_eta } = &t.server_view {
        for (i, d) in matrices.iter().flatten().enumerate() {
            println!("D_{} = {:?}", i + 1, d.rows());
        }
        println!("f = {f:?}");
        println!("shuffled eta = {shuffled_eta:?}");
    }
    println!("S = {} (truth {}), margin {:.2e}", t.recovered_s, t.ground_truth_s, t.recovery_margin);
    Ok(())
}
