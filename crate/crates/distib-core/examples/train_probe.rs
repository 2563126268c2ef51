//! Scratch probe: prints per-epoch diagnostics for a synthetic-shapes run.
//!
//! Usage: train_probe [n_per_class epochs hidden dim_a dim_z beta lr batch side seed head_scale]

use distib_core::data::synth_shapes;
use distib_core::models::{ModelBundle, ModelConfig};
use distib_core::rng;
use distib_core::trainer::{fit_from, TrainConfig};

fn main() {
    let args: Vec<f64> = std::env::args()
        .skip(1)
        .map(|a| a.parse().expect("numeric args"))
        .collect();
    let get = |i: usize, default: f64| args.get(i).copied().unwrap_or(default);
    let n_per_class = get(0, 200.0) as usize;
    let epochs = get(1, 20.0) as usize;
    let hidden = get(2, 32.0) as usize;
    let dim_a = get(3, 4.0) as usize;
    let dim_z = get(4, 4.0) as usize;
    let beta = get(5, 0.01);
    let lr = get(6, 1e-3);
    let batch = get(7, 64.0) as usize;
    let side = get(8, 8.0) as usize;
    let seed = get(9, 0.0) as u64;
    let head_scale = get(10, 1.0);
    let logvar_bias_a = get(11, 0.0);
    let cls_scale = get(12, 1.0);
    let gen_a_scale = get(13, 1.0);
    let mc = get(14, 1.0) as usize;

    let train = synth_shapes(n_per_class, side, seed).unwrap();
    let test = synth_shapes(n_per_class / 4, side, seed + 1000).unwrap();
    let config = TrainConfig {
        epochs,
        batch_size: batch,
        seed,
        beta,
        learning_rate: lr,
        dim_a,
        dim_z,
        hidden,
        mc_samples: mc,
        log_every: 1,
    };
    let model_config = ModelConfig::new(train.input_dim(), train.n_classes(), dim_a, dim_z, hidden);
    let mut bundle =
        ModelBundle::init(model_config, &mut rng::stream(seed, rng::labels::INIT)).unwrap();
    {
        let enc = &mut bundle.encoder_a;
        for v in enc.mean_head.weight.data_mut() {
            *v *= head_scale;
        }
        for v in enc.log_var_head.weight.data_mut() {
            *v *= head_scale;
        }
        for v in enc.log_var_head.bias.data_mut() {
            *v = logvar_bias_a;
        }
        for v in bundle.classifier.weight.data_mut() {
            *v *= cls_scale;
        }
        // Generator layer-1 weight is (dim_a + dim_z, hidden); the first dim_a
        // rows read the label code.
        let gw = bundle.generator.l1.weight.data_mut();
        for r in 0..dim_a {
            for c in 0..hidden {
                gw[r * hidden + c] *= gen_a_scale;
            }
        }
    }
    let t0 = std::time::Instant::now();
    let outcome = fit_from(bundle, &config, &train, Some(&test)).unwrap();
    let dt = t0.elapsed().as_secs_f64();
    println!("epoch total suff pred klA klZ I_XA I_AY H_Y train_acc test_acc");
    for m in &outcome.metrics {
        println!(
            "{:3} {:8.4} {:8.4} {:7.4} {:8.4} {:8.4} {:7.4} {:7.4} {:6.4} {:.4} {:.4}",
            m.epoch,
            m.total,
            m.sufficiency,
            m.prediction,
            m.kl_a,
            m.kl_z,
            m.mi.i_xa_upper,
            m.mi.i_ay_lower,
            m.mi.h_y,
            m.train_acc,
            m.test_acc.unwrap_or(f64::NAN)
        );
    }
    println!("elapsed: {dt:.2}s");

    // Final posterior geometry of the label code on the training set.
    let bundle = &outcome.bundle;
    let g = bundle
        .encode(train.features(), distib_core::models::Code::LabelRelated)
        .unwrap();
    let m = train.len();
    let mut class_mean = vec![vec![0.0f64; dim_a]; 3];
    let mut counts = [0usize; 3];
    for i in 0..m {
        let c = train.labels()[i];
        counts[c] += 1;
        for d in 0..dim_a {
            class_mean[c][d] += g.mean().row_slice(i)[d];
        }
    }
    for c in 0..3 {
        for d in 0..dim_a {
            class_mean[c][d] /= counts[c] as f64;
        }
        println!("class {c} mean_A {:?}", class_mean[c]);
    }
    let mut within = 0.0;
    let mut sig2 = 0.0;
    for i in 0..m {
        let c = train.labels()[i];
        for d in 0..dim_a {
            let mu = g.mean().row_slice(i)[d];
            within += (mu - class_mean[c][d]) * (mu - class_mean[c][d]);
            sig2 += g.log_variance().row_slice(i)[d].exp();
        }
    }
    println!(
        "within-class var/dim {:.4}  mean sigma^2/dim {:.4}",
        within / (m * dim_a) as f64,
        sig2 / (m * dim_a) as f64
    );

    {
        use distib_core::eval::{code_features, linear_probe_accuracy};
        use distib_core::models::Code;
        let feats_a = code_features(bundle, &train, Code::LabelRelated).unwrap();
        let feats_z = code_features(bundle, &train, Code::SampleExclusive).unwrap();
        let labels = train.labels();
        let split = |t: &distib_core::tensor::Tensor, dim: usize| {
            let mut fit_rows = Vec::new();
            let mut eval_rows = Vec::new();
            let mut fit_y = Vec::new();
            let mut eval_y = Vec::new();
            for i in 0..m {
                if i % 2 == 0 {
                    fit_rows.extend_from_slice(t.row_slice(i));
                    fit_y.push(labels[i]);
                } else {
                    eval_rows.extend_from_slice(t.row_slice(i));
                    eval_y.push(labels[i]);
                }
            }
            (
                distib_core::tensor::Tensor::new([fit_y.len(), dim], fit_rows).unwrap(),
                fit_y,
                distib_core::tensor::Tensor::new([eval_y.len(), dim], eval_rows).unwrap(),
                eval_y,
            )
        };
        let (fa, fy, ea, ey) = split(&feats_a, dim_a);
        let acc_a = linear_probe_accuracy(&fa, &fy, &ea, &ey, 3, 7).unwrap();
        let (fz, fy2, ez, ey2) = split(&feats_z, dim_z);
        let acc_z = linear_probe_accuracy(&fz, &fy2, &ez, &ey2, 3, 7).unwrap();
        println!("linear probe acc: A {acc_a:.4}  Z {acc_z:.4}");
    }

    let w = &bundle.classifier.weight;
    let frob: f64 = w.data().iter().map(|v| v * v).sum::<f64>().sqrt();
    let b = bundle.classifier.bias.data();
    let mut gaps = [0.0f64; 3];
    for c in 0..3 {
        let mut logits = [0.0f64; 3];
        for k in 0..3 {
            logits[k] = b[k]
                + (0..dim_a)
                    .map(|d| class_mean[c][d] * w.data()[d * 3 + k])
                    .sum::<f64>();
        }
        let top = logits[c];
        let runner = (0..3)
            .filter(|&k| k != c)
            .map(|k| logits[k])
            .fold(f64::NEG_INFINITY, f64::max);
        gaps[c] = top - runner;
    }
    println!("classifier |W|_F {frob:.3}  logit gaps at class means {gaps:?}");
}
