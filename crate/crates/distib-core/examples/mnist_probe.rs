//! Scratch probe: MNIST training feasibility plus FGSM/swap/episode checks.
//!
//! Usage: mnist_probe [epochs hidden dim_a dim_z beta lr batch keep_hi]
//! keep_hi = 1 trains on digits 0..=4 and runs episodes on 5..=9.

use distib_core::data::Dataset;
use distib_core::eval::{fgsm_attack, sample_episode, swap_generate};
use distib_core::rng;
use distib_core::tensor::Tensor;
use distib_core::trainer::{fit, TrainConfig};

fn read_idx_images(path: &str) -> Tensor {
    let bytes = std::fs::read(path).expect("read images");
    assert_eq!(u32::from_be_bytes(bytes[0..4].try_into().unwrap()), 0x0000_0803);
    let n = u32::from_be_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let r = u32::from_be_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let c = u32::from_be_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let data: Vec<f64> = bytes[16..].iter().map(|&b| b as f64 / 255.0).collect();
    assert_eq!(data.len(), n * r * c);
    Tensor::new([n, r * c], data).unwrap()
}

fn read_idx_labels(path: &str) -> Vec<usize> {
    let bytes = std::fs::read(path).expect("read labels");
    assert_eq!(u32::from_be_bytes(bytes[0..4].try_into().unwrap()), 0x0000_0801);
    bytes[8..].iter().map(|&b| b as usize).collect()
}

fn main() {
    let args: Vec<f64> = std::env::args()
        .skip(1)
        .map(|a| a.parse().expect("numeric args"))
        .collect();
    let get = |i: usize, default: f64| args.get(i).copied().unwrap_or(default);
    let epochs = get(0, 20.0) as usize;
    let hidden = get(1, 256.0) as usize;
    let dim_a = get(2, 16.0) as usize;
    let dim_z = get(3, 16.0) as usize;
    let beta = get(4, 0.01);
    let lr = get(5, 3e-3);
    let batch = get(6, 128.0) as usize;
    let keep_lo = get(7, 0.0) as usize == 1;
    let mc = get(8, 1.0) as usize;

    let dir = std::env::var("MNIST_DIR").unwrap_or_else(|_| "data/mnist".into());
    let train_x = read_idx_images(&format!("{dir}/train-images-idx3-ubyte"));
    let train_y = read_idx_labels(&format!("{dir}/train-labels-idx1-ubyte"));
    let test_x = read_idx_images(&format!("{dir}/t10k-images-idx3-ubyte"));
    let test_y = read_idx_labels(&format!("{dir}/t10k-labels-idx1-ubyte"));
    let mut train = Dataset::new(train_x, train_y, 10).unwrap();
    let mut test = Dataset::new(test_x, test_y, 10).unwrap();
    let mut heldout = None;
    if keep_lo {
        heldout = Some(test.filter_classes(&[5, 6, 7, 8, 9]).unwrap());
        train = train.filter_classes(&[0, 1, 2, 3, 4]).unwrap();
        test = test.filter_classes(&[0, 1, 2, 3, 4]).unwrap();
    }
    println!("train {} test {}", train.len(), test.len());

    let config = TrainConfig {
        epochs,
        batch_size: batch,
        seed: 0,
        beta,
        learning_rate: lr,
        dim_a,
        dim_z,
        hidden,
        mc_samples: mc,
        log_every: 1,
    };
    let t0 = std::time::Instant::now();
    let outcome = fit(&config, &train, Some(&test)).unwrap();
    println!("train time {:.1}s", t0.elapsed().as_secs_f64());
    for m in &outcome.metrics {
        println!(
            "{:3} {:9.4} {:8.4} {:7.4} {:8.4} {:8.4} {:7.4} {:7.4} {:.4} {:.4}",
            m.epoch,
            m.total,
            m.sufficiency,
            m.prediction,
            m.kl_a,
            m.kl_z,
            m.mi.i_xa_upper,
            m.mi.i_ay_lower,
            m.train_acc,
            m.test_acc.unwrap_or(f64::NAN)
        );
    }
    let bundle = &outcome.bundle;

    // FGSM sweep on the test set.
    use distib_core::eval::eval_accuracy;
    let clean = eval_accuracy(bundle, test.features(), test.labels()).unwrap();
    print!("fgsm: clean {clean:.4}");
    for eps in [0.1, 0.2, 0.3] {
        let adv = fgsm_attack(bundle, test.features(), test.labels(), eps).unwrap();
        let acc = eval_accuracy(bundle, &adv, test.labels()).unwrap();
        print!("  eps {eps}: {acc:.4}");
    }
    println!();

    // Swap grid on the first 16 test images.
    let indices: Vec<usize> = (0..16).collect();
    let grid = swap_generate(bundle, &test, &indices).unwrap();
    println!(
        "swap: diag err {:.4}  offdiag err {:.4}",
        grid.diagonal_error(),
        grid.off_diagonal_error().unwrap()
    );

    // Episodes on held-out classes if present.
    if let Some(held) = heldout {
        use distib_core::eval::{prototype_classify, sg_prototype_classify};
        let mut rng = rng::stream(0, rng::labels::EPISODES);
        let mut plain_sum = 0.0;
        let mut sg_sum = 0.0;
        let n_ep = 20;
        for _ in 0..n_ep {
            let ep = sample_episode(&held, 5, 1, 15, &mut rng).unwrap();
            plain_sum += prototype_classify(bundle, &ep).unwrap();
            sg_sum += sg_prototype_classify(bundle, &ep, 50, &mut rng).unwrap();
        }
        println!(
            "episodes: plain {:.4}  sg {:.4}",
            plain_sum / n_ep as f64,
            sg_sum / n_ep as f64
        );
    }
}
