//! Full-objective gradient checks against central finite differences.
//!
//! Every trial re-seeds the reparameterization stream before each forward
//! pass, so the objective is a deterministic function of the parameters and
//! central differences are a valid oracle for the reverse-mode gradients.

use distib_core::models::{ModelBundle, ModelConfig};
use distib_core::objective::{distib_loss, distib_loss_on};
use distib_core::rng::{self, SeededRng};
use distib_core::tape::Tape;
use distib_core::tensor::Tensor;

const FD_STEP: f64 = 1e-5;

/// Loss at the current parameters with a fixed noise stream.
fn loss_at(bundle: &ModelBundle, x: &Tensor, labels: &[usize], beta: f64, mc: usize, noise_seed: u64) -> f64 {
    let mut noise = rng::stream(noise_seed, rng::labels::NOISE);
    distib_loss(bundle, x, labels, beta, mc, &mut noise)
        .expect("loss evaluation")
        .total
}

/// Largest guarded relative error between reverse-mode and central-difference
/// gradients over every parameter element of one randomly built network.
fn max_rel_err_one_net(trial: u64) -> f64 {
    let mut setup = rng::stream(trial, rng::labels::INIT);
    let input_dim = 2 + (rng::uniform(&mut setup) * 5.0) as usize; // 2..=6
    let n_classes = 2 + (rng::uniform(&mut setup) * 2.0) as usize; // 2..=3
    let dim_a = 1 + (rng::uniform(&mut setup) * 3.0) as usize; // 1..=3
    let dim_z = 1 + (rng::uniform(&mut setup) * 3.0) as usize;
    let hidden = 2 + (rng::uniform(&mut setup) * 4.0) as usize; // 2..=5
    let n = 2 + (rng::uniform(&mut setup) * 3.0) as usize; // 2..=4
    let beta = [0.0, 0.37, 1.0][(rng::uniform(&mut setup) * 3.0) as usize % 3];
    let mc = 1 + (rng::uniform(&mut setup) * 2.0) as usize % 2; // 1..=2

    let config = ModelConfig::new(input_dim, n_classes, dim_a, dim_z, hidden);
    let mut bundle = ModelBundle::init(config, &mut setup).expect("init");
    let x = Tensor::from_fn([n, input_dim], |_| rng::uniform(&mut setup));
    let labels: Vec<usize> = (0..n)
        .map(|_| (rng::uniform(&mut setup) * n_classes as f64) as usize % n_classes)
        .collect();
    let noise_seed = 1000 + trial;

    // Reverse-mode gradients for every parameter tensor.
    let mut tape = Tape::new();
    let bound = bundle.record(&mut tape);
    let xid = tape.constant(x.clone());
    let mut noise: SeededRng = rng::stream(noise_seed, rng::labels::NOISE);
    let nodes = distib_loss_on(&mut tape, &bound, xid, &labels, beta, mc, &mut noise).expect("loss");
    let grads = tape.backward(nodes.total).expect("backward");
    let param_ids = bound.param_ids().to_vec();
    let analytic: Vec<Tensor> = param_ids
        .iter()
        .zip(bundle.params())
        .map(|(&id, p)| grads.wrt(id, p))
        .collect();

    let mut worst = 0.0f64;
    let n_tensors = analytic.len();
    for t in 0..n_tensors {
        let numel = analytic[t].data().len();
        for j in 0..numel {
            let original = bundle.params()[t].data()[j];
            bundle.params_mut()[t].data_mut()[j] = original + FD_STEP;
            let up = loss_at(&bundle, &x, &labels, beta, mc, noise_seed);
            bundle.params_mut()[t].data_mut()[j] = original - FD_STEP;
            let down = loss_at(&bundle, &x, &labels, beta, mc, noise_seed);
            bundle.params_mut()[t].data_mut()[j] = original;

            let fd = (up - down) / (2.0 * FD_STEP);
            let ad = analytic[t].data()[j];
            // Guarded denominator: elements below 1e-3 in magnitude are held
            // to an absolute tolerance of 1e-7 instead of a relative one.
            let rel = (ad - fd).abs() / (ad.abs() + fd.abs()).max(1e-3);
            if rel > worst {
                worst = rel;
            }
        }
    }
    worst
}

#[test]
fn fifty_random_networks_match_central_differences() {
    let start = std::time::Instant::now();
    let mut suite_worst = 0.0f64;
    for trial in 0..50 {
        let worst = max_rel_err_one_net(trial);
        assert!(
            worst < 1e-4,
            "trial {trial}: max relative gradient error {worst:.3e} exceeds 1e-4"
        );
        if worst > suite_worst {
            suite_worst = worst;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(
        elapsed < 30.0,
        "gradient sweep took {elapsed:.1}s, budget is 30s"
    );
    // The suite should exercise real gradients, not vanish identically.
    assert!(suite_worst > 0.0, "all gradients compared exactly equal");
}

#[test]
fn gradient_of_input_matches_central_differences() {
    // The attack path differentiates the prediction loss with respect to the
    // input pixels; check that path with the same oracle.
    let mut setup = rng::stream(99, rng::labels::INIT);
    let config = ModelConfig::new(5, 3, 2, 2, 4);
    let bundle = ModelBundle::init(config, &mut setup).expect("init");
    let n = 3;
    let x = Tensor::from_fn([n, 5], |_| rng::uniform(&mut setup));
    let labels = vec![0, 2, 1];

    let mut tape = Tape::new();
    let bound = bundle.record_frozen(&mut tape);
    let xid = tape.leaf(x.clone());
    let g = bound
        .encode(&mut tape, xid, distib_core::models::Code::LabelRelated)
        .expect("encode");
    let logits = bound.classify_logits(&mut tape, g.mean).expect("logits");
    let loss = tape.nll_mean(logits, &labels).expect("nll");
    let grads = tape.backward(loss).expect("backward");
    let analytic = grads.wrt(xid, &x);

    let eval = |x: &Tensor| -> f64 {
        let mut tape = Tape::new();
        let bound = bundle.record_frozen(&mut tape);
        let xid = tape.constant(x.clone());
        let g = bound
            .encode(&mut tape, xid, distib_core::models::Code::LabelRelated)
            .expect("encode");
        let logits = bound.classify_logits(&mut tape, g.mean).expect("logits");
        let loss = tape.nll_mean(logits, &labels).expect("nll");
        tape.value(loss).item()
    };

    let mut probe = x.clone();
    for j in 0..probe.data().len() {
        let original = probe.data()[j];
        probe.data_mut()[j] = original + FD_STEP;
        let up = eval(&probe);
        probe.data_mut()[j] = original - FD_STEP;
        let down = eval(&probe);
        probe.data_mut()[j] = original;
        let fd = (up - down) / (2.0 * FD_STEP);
        let ad = analytic.data()[j];
        let rel = (ad - fd).abs() / (ad.abs() + fd.abs()).max(1e-3);
        assert!(rel < 1e-4, "pixel {j}: relative error {rel:.3e}");
    }
}
