//! Runs all four protocol variants on the same random inputs and shows what
//! the server learns in each.

use polyveil::protocol::{random_inputs, run_protocol, ProtocolParams, ServerView, Variant};

fn main() -> polyveil::Result<()> {
    let (n, k, decoys, alpha) = (16, 5, 9, 1.0 / 64.0);
    let inputs = random_inputs(n, k, 2024)?;
    for variant in [Variant::Full, Variant::Compressed, Variant::TwoLayerFull, Variant::TwoLayerCompressed] {
        let t = run_protocol(&inputs, &ProtocolParams::new(variant, n, k, decoys, alpha), 7)?;
        let seen = match &t.server_view {
            ServerView::Shuffled { matrices, f, .. } => {
                format!("{} scalars f_t, {} matrices, shuffled noise list", f.len(), matrices.as_ref().map_or(0, Vec::len))
            }
            ServerView::Aggregate { f_total, h_total } => format!("F = {f_total:.4}, H = {h_total:.4}"),
        };
        println!("{variant:?}: S = {} (truth {}), server sees {seen}", t.recovered_s, t.ground_truth_s);
    }
    Ok(())
}
