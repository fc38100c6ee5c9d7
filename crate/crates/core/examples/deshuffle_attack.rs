//! The integrality de-shuffling attack against the shuffled variants: with
//! α* = 1/32 and n = 8, the implied counts pin down each client's bit count.

use polyveil::attacks::{deshuffle_attack, DeshuffleMode};
use polyveil::protocol::{random_inputs, run_protocol, ProtocolParams, ServerView, Variant};

fn main() -> polyveil::Result<()> {
    let (n, k, decoys, alpha) = (8, 5, 3, 1.0 / 32.0);
    let runs = 200;
    let mut correct = 0;
    for run in 0..runs {
        let inputs = random_inputs(n, k, run)?;
        let truth: Vec<u64> = inputs.iter().map(|b| b.count_ones()).collect();
        let t = run_protocol(&inputs, &ProtocolParams::new(Variant::Compressed, n, k, decoys, alpha), run + 10_000)?;
        let ServerView::Shuffled { f, shuffled_eta, .. } = &t.server_view else { unreachable!() };
        let res = deshuffle_attack(f, shuffled_eta, alpha, n, 1e-9, DeshuffleMode::Enumerate)?;
        if run == 0 {
            println!("truth {truth:?}, passing assignments {:?}", res.passing_assignments);
        }
        correct += usize::from(res.correct_recovered(&truth));
    }
    println!("per-client counts recovered in {correct}/{runs} runs");
    Ok(())
}
