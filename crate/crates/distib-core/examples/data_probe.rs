//! Scratch probe: linear separability of the synthetic shapes from raw pixels.

use distib_core::data::synth_shapes;
use distib_core::eval::linear_probe_accuracy;

fn main() {
    let args: Vec<usize> = std::env::args()
        .skip(1)
        .map(|a| a.parse().expect("usize args"))
        .collect();
    let n = args.first().copied().unwrap_or(500);
    let side = args.get(1).copied().unwrap_or(14);
    let train = synth_shapes(n, side, 0).unwrap();
    let test = synth_shapes(n / 4, side, 1000).unwrap();
    let acc_train = linear_probe_accuracy(
        train.features(),
        train.labels(),
        train.features(),
        train.labels(),
        3,
        0,
    )
    .unwrap();
    let acc_test = linear_probe_accuracy(
        train.features(),
        train.labels(),
        test.features(),
        test.labels(),
        3,
        0,
    )
    .unwrap();
    println!("raw-pixel linear probe: train {acc_train:.4} test {acc_test:.4}");
}
