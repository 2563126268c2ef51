//! Post-training evaluation: swap-generation grids, gradient-sign attacks,
//! prototype episodes, and linear probes on frozen codes.
//!
//! Every routine here treats the bundle as frozen. Paths without an explicit
//! generator argument are deterministic: they read codes at the posterior
//! mean rather than sampling.

use alloc::vec::Vec;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::gaussian::recon_error_row;
use crate::math;
use crate::models::{Code, ModelBundle};
use crate::objective::EVAL_CHUNK;
use crate::optim::{OptimSpec, Optimizer};
use crate::rng::{self, labels, SeededRng};
use crate::tape::Tape;
use crate::tensor::Tensor;

/// Index of the largest entry; ties resolve to the lowest index.
fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = k;
        }
    }
    best
}

/// Posterior-mean codes for a whole dataset, one row per sample.
pub fn code_features(bundle: &ModelBundle, ds: &Dataset, which: Code) -> Result<Tensor> {
    let dim = match which {
        Code::LabelRelated => bundle.config().dim_a,
        Code::SampleExclusive => bundle.config().dim_z,
    };
    let m = ds.len();
    let mut out = Tensor::zeros([m, dim]);
    let mut start = 0;
    while start < m {
        let end = (start + EVAL_CHUNK).min(m);
        let indices: Vec<usize> = (start..end).collect();
        let (x, _) = ds.batch(&indices)?;
        let g = bundle.encode(&x, which)?;
        let src = g.mean().data();
        out.data_mut()[start * dim..end * dim].copy_from_slice(src);
        start = end;
    }
    Ok(out)
}

/// Classifier accuracy on raw feature rows, evaluated at the posterior mean.
pub fn eval_accuracy(bundle: &ModelBundle, x: &Tensor, labels: &[usize]) -> Result<f64> {
    let (m, _) = x.dims2()?;
    if m == 0 {
        return Err(Error::EmptyDataset {
            op: "eval_accuracy",
        });
    }
    if m != labels.len() {
        return Err(Error::ShapeMismatch {
            op: "eval_accuracy",
            left: x.shape().to_vec(),
            right: alloc::vec![labels.len()],
        });
    }
    let mut correct = 0usize;
    let mut start = 0;
    while start < m {
        let end = (start + EVAL_CHUNK).min(m);
        let indices: Vec<usize> = (start..end).collect();
        let chunk = x.gather_rows(&indices)?;
        let g = bundle.encode(&chunk, Code::LabelRelated)?;
        let log_probs = bundle.classify(g.mean())?;
        for i in 0..end - start {
            if argmax(log_probs.row_slice(i)) == labels[start + i] {
                correct += 1;
            }
        }
        start = end;
    }
    Ok(correct as f64 / m as f64)
}

/// An `n x n` grid of generations crossing label codes with style codes.
///
/// Flat entry `i * n + j` is generated from the label code of sample `j`
/// (column) and the style code of sample `i` (row), both at their posterior
/// means. The diagonal therefore reconstructs the selected inputs.
#[derive(Debug, Clone)]
pub struct SwapGrid {
    n: usize,
    /// Selected input rows, `[n, input_dim]`, in selection order.
    pub inputs: Tensor,
    /// Generated rows, `[n * n, input_dim]`, flat order as described above.
    pub generations: Tensor,
    /// Dataset index donating the label code for each flat entry.
    pub a_source: Vec<usize>,
    /// Dataset index donating the style code for each flat entry.
    pub z_source: Vec<usize>,
    /// Label inherited from the label-code donor for each flat entry.
    pub gen_labels: Vec<usize>,
}

impl SwapGrid {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Mean reconstruction error of diagonal entries against their inputs.
    pub fn diagonal_error(&self) -> f64 {
        let mut total = 0.0;
        for i in 0..self.n {
            total += recon_error_row(
                self.inputs.row_slice(i),
                self.generations.row_slice(i * self.n + i),
            );
        }
        total / self.n as f64
    }

    /// Mean error of off-diagonal entries against their style donor's input,
    /// or `None` for a single-sample grid, which has no such entries.
    ///
    /// The style donor is the natural reference: an entry shares everything
    /// with that input except the label code, so a generator that ignored the
    /// label swap would score near the diagonal here.
    pub fn off_diagonal_error(&self) -> Option<f64> {
        if self.n < 2 {
            return None;
        }
        let mut total = 0.0;
        let mut count = 0usize;
        for i in 0..self.n {
            for j in 0..self.n {
                if i == j {
                    continue;
                }
                total += recon_error_row(
                    self.inputs.row_slice(i),
                    self.generations.row_slice(i * self.n + j),
                );
                count += 1;
            }
        }
        Some(total / count as f64)
    }
}

/// Generates the full code-swap grid for the selected dataset rows.
pub fn swap_generate(bundle: &ModelBundle, ds: &Dataset, indices: &[usize]) -> Result<SwapGrid> {
    if indices.is_empty() {
        return Err(Error::EmptyDataset { op: "swap_grid" });
    }
    let n = indices.len();
    let (inputs, input_labels) = ds.batch(indices)?;
    let a = bundle.encode(&inputs, Code::LabelRelated)?;
    let z = bundle.encode(&inputs, Code::SampleExclusive)?;
    let dim_a = bundle.config().dim_a;
    let dim_z = bundle.config().dim_z;

    // Tile the posterior means so one generator call covers the grid.
    let a_grid = Tensor::from_fn([n * n, dim_a], |flat| {
        let entry = flat / dim_a;
        let j = entry % n;
        a.mean().data()[j * dim_a + flat % dim_a]
    });
    let z_grid = Tensor::from_fn([n * n, dim_z], |flat| {
        let entry = flat / dim_z;
        let i = entry / n;
        z.mean().data()[i * dim_z + flat % dim_z]
    });
    let generations = bundle.generate(&a_grid, &z_grid)?;

    let mut a_source = Vec::with_capacity(n * n);
    let mut z_source = Vec::with_capacity(n * n);
    let mut gen_labels = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            a_source.push(indices[j]);
            z_source.push(indices[i]);
            gen_labels.push(input_labels[j]);
        }
    }
    Ok(SwapGrid {
        n,
        inputs,
        generations,
        a_source,
        z_source,
        gen_labels,
    })
}

/// Fast gradient-sign attack on the classifier through the label encoder.
///
/// Returns `clip(x + epsilon * sign(grad_x CE), 0, 1)` with the label code
/// read at its posterior mean, so the perturbation is deterministic. Pixels
/// with exactly zero gradient are left unchanged.
pub fn fgsm_attack(
    bundle: &ModelBundle,
    x: &Tensor,
    labels: &[usize],
    epsilon: f64,
) -> Result<Tensor> {
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(Error::InvalidConfig {
            field: "epsilon",
            reason: "must be finite and non-negative",
        });
    }
    let (m, d) = x.dims2()?;
    if m == 0 {
        return Err(Error::EmptyDataset { op: "fgsm_attack" });
    }
    if m != labels.len() {
        return Err(Error::ShapeMismatch {
            op: "fgsm_attack",
            left: x.shape().to_vec(),
            right: alloc::vec![labels.len()],
        });
    }
    let mut adv = Tensor::zeros([m, d]);
    let mut start = 0;
    while start < m {
        let end = (start + EVAL_CHUNK).min(m);
        let indices: Vec<usize> = (start..end).collect();
        let chunk = x.gather_rows(&indices)?;
        let y = &labels[start..end];

        let mut tape = Tape::new();
        let bound = bundle.record_frozen(&mut tape);
        let xid = tape.leaf(chunk.clone());
        let g = bound.encode(&mut tape, xid, Code::LabelRelated)?;
        let logits = bound.classify_logits(&mut tape, g.mean)?;
        let loss = tape.nll_mean(logits, y)?;
        let grads = tape.backward(loss)?;
        let grad_x = grads.wrt(xid, &chunk);

        let out = &mut adv.data_mut()[start * d..end * d];
        for (k, (xv, gv)) in chunk.data().iter().zip(grad_x.data()).enumerate() {
            let moved = xv + epsilon * math::sign(*gv);
            out[k] = math::fmin(1.0, math::fmax(0.0, moved));
        }
        start = end;
    }
    Ok(adv)
}

/// A few-shot episode with labels remapped to `0..way`.
#[derive(Debug, Clone)]
pub struct Episode {
    pub support_x: Tensor,
    pub support_y: Vec<usize>,
    pub query_x: Tensor,
    pub query_y: Vec<usize>,
    pub way: usize,
}

/// Draws `way` classes, then `shot` support and `queries_per_class` query
/// rows per class, without replacement. Chosen classes are relabeled to
/// `0..way` in ascending original order.
pub fn sample_episode(
    ds: &Dataset,
    way: usize,
    shot: usize,
    queries_per_class: usize,
    rng: &mut SeededRng,
) -> Result<Episode> {
    if way < 2 {
        return Err(Error::InvalidConfig {
            field: "way",
            reason: "episodes need at least two classes",
        });
    }
    if shot == 0 || queries_per_class == 0 {
        return Err(Error::InvalidConfig {
            field: "shot",
            reason: "shot and queries_per_class must be at least 1",
        });
    }
    if way > ds.n_classes() {
        return Err(Error::InvalidConfig {
            field: "way",
            reason: "more classes requested than the dataset holds",
        });
    }
    let mut class_ids: Vec<usize> = (0..ds.n_classes()).collect();
    rng::shuffle(rng, &mut class_ids);
    let mut chosen: Vec<usize> = class_ids[..way].to_vec();
    chosen.sort_unstable();

    let by_class = ds.class_indices();
    let need = shot + queries_per_class;
    let mut support_idx = Vec::with_capacity(way * shot);
    let mut query_idx = Vec::with_capacity(way * queries_per_class);
    let mut support_y = Vec::with_capacity(way * shot);
    let mut query_y = Vec::with_capacity(way * queries_per_class);
    for (new_label, &class) in chosen.iter().enumerate() {
        let mut pool = by_class[class].clone();
        if pool.len() < need {
            return Err(Error::EmptySupport { class });
        }
        rng::shuffle(rng, &mut pool);
        support_idx.extend_from_slice(&pool[..shot]);
        query_idx.extend_from_slice(&pool[shot..need]);
        support_y.extend(core::iter::repeat(new_label).take(shot));
        query_y.extend(core::iter::repeat(new_label).take(queries_per_class));
    }
    let (support_x, _) = ds.batch(&support_idx)?;
    let (query_x, _) = ds.batch(&query_idx)?;
    Ok(Episode {
        support_x,
        support_y,
        query_x,
        query_y,
        way,
    })
}

fn class_means(codes: &Tensor, labels: &[usize], way: usize) -> Result<Vec<Vec<f64>>> {
    let (_, dim) = codes.dims2()?;
    let mut sums = alloc::vec![alloc::vec![0.0f64; dim]; way];
    let mut counts = alloc::vec![0usize; way];
    for (i, &c) in labels.iter().enumerate() {
        for (s, v) in sums[c].iter_mut().zip(codes.row_slice(i)) {
            *s += v;
        }
        counts[c] += 1;
    }
    for (c, count) in counts.iter().enumerate() {
        if *count == 0 {
            return Err(Error::EmptySupport { class: c });
        }
        for s in sums[c].iter_mut() {
            *s /= *count as f64;
        }
    }
    Ok(sums)
}

fn nearest_prototype_accuracy(
    prototypes: &[Vec<f64>],
    queries: &Tensor,
    labels: &[usize],
) -> Result<f64> {
    let (m, _) = queries.dims2()?;
    let mut correct = 0usize;
    for i in 0..m {
        let q = queries.row_slice(i);
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (c, p) in prototypes.iter().enumerate() {
            let d: f64 = q.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum();
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        if best == labels[i] {
            correct += 1;
        }
    }
    Ok(correct as f64 / m as f64)
}

/// Nearest-prototype episode accuracy in the label-code space.
///
/// Prototypes are class means of the support rows' posterior-mean codes;
/// queries go to the nearest prototype in squared Euclidean distance.
pub fn prototype_classify(bundle: &ModelBundle, episode: &Episode) -> Result<f64> {
    let support = bundle.encode(&episode.support_x, Code::LabelRelated)?;
    let prototypes = class_means(support.mean(), &episode.support_y, episode.way)?;
    let queries = bundle.encode(&episode.query_x, Code::LabelRelated)?;
    nearest_prototype_accuracy(&prototypes, queries.mean(), &episode.query_y)
}

/// Prototype episode accuracy with swap-generation augmentation.
///
/// Each class prototype is refreshed with `n_gen` synthetic rows: the class
/// label code is crossed with style codes sampled from the posteriors of
/// other support rows, the generator renders the crosses, and the renders
/// are re-encoded and averaged into the prototype alongside the originals.
/// `n_gen = 0` reduces to the plain prototype rule.
pub fn sg_prototype_classify(
    bundle: &ModelBundle,
    episode: &Episode,
    n_gen: usize,
    rng: &mut SeededRng,
) -> Result<f64> {
    let support_a = bundle.encode(&episode.support_x, Code::LabelRelated)?;
    let support_z = bundle.encode(&episode.support_x, Code::SampleExclusive)?;
    let mut prototypes = class_means(support_a.mean(), &episode.support_y, episode.way)?;

    if n_gen > 0 {
        let n_support = episode.support_y.len();
        let dim_a = bundle.config().dim_a;
        let dim_z = bundle.config().dim_z;
        for (class, proto) in prototypes.iter_mut().enumerate() {
            // Style donors: support rows outside this class when any exist.
            let donors: Vec<usize> = (0..n_support)
                .filter(|&i| episode.support_y[i] != class)
                .collect();
            let donors = if donors.is_empty() {
                (0..n_support).collect()
            } else {
                donors
            };
            let mut a_rows = Tensor::zeros([n_gen, dim_a]);
            let mut z_rows = Tensor::zeros([n_gen, dim_z]);
            for g in 0..n_gen {
                let donor =
                    donors[(rng::uniform(rng) * donors.len() as f64) as usize % donors.len()];
                let z_sample = support_z.sample(rng);
                a_rows.data_mut()[g * dim_a..(g + 1) * dim_a].copy_from_slice(proto);
                z_rows.data_mut()[g * dim_z..(g + 1) * dim_z]
                    .copy_from_slice(&z_sample.row_slice(donor)[..dim_z]);
            }
            let renders = bundle.generate(&a_rows, &z_rows)?;
            let re_encoded = bundle.encode(&renders, Code::LabelRelated)?;
            let shots = episode.support_y.iter().filter(|&&y| y == class).count() as f64;
            let total = shots + n_gen as f64;
            for (d, p) in proto.iter_mut().enumerate() {
                let mut sum = *p * shots;
                for g in 0..n_gen {
                    sum += re_encoded.mean().row_slice(g)[d];
                }
                *p = sum / total;
            }
        }
    }

    let queries = bundle.encode(&episode.query_x, Code::LabelRelated)?;
    nearest_prototype_accuracy(&prototypes, queries.mean(), &episode.query_y)
}

/// Steps of full-batch Adam used to fit a linear probe.
const PROBE_STEPS: usize = 200;
const PROBE_LR: f64 = 0.05;

/// Accuracy of a softmax-linear probe trained on frozen feature rows.
///
/// The probe is fit with full-batch Adam from a small seeded init, so the
/// result is a deterministic function of the inputs and seed.
pub fn linear_probe_accuracy(
    train_x: &Tensor,
    train_y: &[usize],
    eval_x: &Tensor,
    eval_y: &[usize],
    n_classes: usize,
    seed: u64,
) -> Result<f64> {
    let (m, d) = train_x.dims2()?;
    let (m_eval, d_eval) = eval_x.dims2()?;
    if m == 0 || m_eval == 0 {
        return Err(Error::EmptyDataset { op: "linear_probe" });
    }
    if m != train_y.len() || m_eval != eval_y.len() || d != d_eval {
        return Err(Error::ShapeMismatch {
            op: "linear_probe",
            left: alloc::vec![m, d],
            right: alloc::vec![m_eval, d_eval],
        });
    }
    if n_classes < 2 {
        return Err(Error::InvalidConfig {
            field: "n_classes",
            reason: "probe needs at least two classes",
        });
    }
    for &y in eval_y {
        if y >= n_classes {
            return Err(Error::LabelOutOfRange {
                label: y,
                classes: n_classes,
            });
        }
    }

    let mut probe_rng = rng::stream(seed, labels::PROBE);
    let scale = math::sqrt(1.0 / d as f64);
    let mut weight = Tensor::from_fn([d, n_classes], |_| {
        scale * (2.0 * rng::uniform(&mut probe_rng) - 1.0)
    });
    let mut bias = Tensor::zeros([n_classes]);
    let mut optimizer = Optimizer::new(OptimSpec::adam(PROBE_LR), &[&weight, &bias])?;

    for _ in 0..PROBE_STEPS {
        let mut tape = Tape::new();
        let x = tape.constant(train_x.clone());
        let w = tape.leaf(weight.clone());
        let b = tape.leaf(bias.clone());
        let wx = tape.matmul(x, w)?;
        let logits = tape.add_row(wx, b)?;
        let loss = tape.nll_mean(logits, train_y)?;
        let grads = tape.backward(loss)?;
        let grad_list = [grads.wrt(w, &weight), grads.wrt(b, &bias)];
        let mut params = [&mut weight, &mut bias];
        optimizer.step(&mut params, &grad_list)?;
    }

    let mut correct = 0usize;
    for i in 0..m_eval {
        let row = eval_x.row_slice(i);
        let mut best = 0usize;
        let mut best_score = f64::NEG_INFINITY;
        for k in 0..n_classes {
            let mut score = bias.data()[k];
            for (j, &v) in row.iter().enumerate() {
                score += v * weight.data()[j * n_classes + k];
            }
            if score > best_score {
                best_score = score;
                best = k;
            }
        }
        if best == eval_y[i] {
            correct += 1;
        }
    }
    Ok(correct as f64 / m_eval as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synth_shapes;
    use crate::models::ModelConfig;
    use alloc::vec;

    fn small_bundle(input_dim: usize, n_classes: usize, seed: u64) -> ModelBundle {
        let config = ModelConfig::new(input_dim, n_classes, 3, 4, 8);
        ModelBundle::init(config, &mut rng::stream(seed, labels::INIT)).unwrap()
    }

    fn small_ds() -> Dataset {
        synth_shapes(12, 8, 5).unwrap()
    }

    #[test]
    fn swap_grid_layout_is_row_style_column_label() {
        let ds = small_ds();
        let bundle = small_bundle(ds.input_dim(), ds.n_classes(), 0);
        let picks = [0usize, 13, 30];
        let grid = swap_generate(&bundle, &ds, &picks).unwrap();
        assert_eq!(grid.n(), 3);
        assert_eq!(grid.generations.shape(), &[9, ds.input_dim()]);
        for i in 0..3 {
            for j in 0..3 {
                let k = i * 3 + j;
                assert_eq!(grid.a_source[k], picks[j]);
                assert_eq!(grid.z_source[k], picks[i]);
                assert_eq!(grid.gen_labels[k], ds.labels()[picks[j]]);
            }
        }
    }

    #[test]
    fn swap_diagonal_matches_direct_reconstruction() {
        let ds = small_ds();
        let bundle = small_bundle(ds.input_dim(), ds.n_classes(), 1);
        let picks = [2usize, 17];
        let grid = swap_generate(&bundle, &ds, &picks).unwrap();
        let (x, _) = ds.batch(&picks).unwrap();
        let a = bundle.encode(&x, Code::LabelRelated).unwrap();
        let z = bundle.encode(&x, Code::SampleExclusive).unwrap();
        let direct = bundle.generate(a.mean(), z.mean()).unwrap();
        for i in 0..2 {
            let got = grid.generations.row_slice(i * 2 + i);
            let want = direct.row_slice(i);
            for (g, w) in got.iter().zip(want) {
                assert!((g - w).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn single_sample_grid_has_no_off_diagonal() {
        let ds = small_ds();
        let bundle = small_bundle(ds.input_dim(), ds.n_classes(), 2);
        let grid = swap_generate(&bundle, &ds, &[4]).unwrap();
        assert_eq!(grid.generations.shape()[0], 1);
        assert!(grid.diagonal_error() >= 0.0);
        assert!(swap_generate(&bundle, &ds, &[]).is_err());
    }

    #[test]
    fn fgsm_zero_epsilon_is_identity_on_interior_pixels() {
        let ds = small_ds();
        let bundle = small_bundle(ds.input_dim(), ds.n_classes(), 3);
        let (x, y) = ds.batch(&[0, 1, 2, 20, 21]).unwrap();
        let adv = fgsm_attack(&bundle, &x, &y, 0.0).unwrap();
        assert_eq!(adv.data(), x.data());
    }

    #[test]
    fn fgsm_moves_each_pixel_by_at_most_epsilon_within_bounds() {
        let ds = small_ds();
        let bundle = small_bundle(ds.input_dim(), ds.n_classes(), 4);
        let (x, y) = ds.batch(&(0..30).collect::<Vec<_>>()).unwrap();
        let eps = 0.1;
        let adv = fgsm_attack(&bundle, &x, &y, eps).unwrap();
        for (a, b) in adv.data().iter().zip(x.data()) {
            assert!((a - b).abs() <= eps + 1e-12);
            assert!((0.0..=1.0).contains(a));
            // Unclipped moves land exactly on the epsilon lattice.
            if (0.0 + eps..=1.0 - eps).contains(b) {
                let delta = a - b;
                assert!(
                    delta == 0.0 || (delta.abs() - eps).abs() < 1e-12,
                    "delta {delta}"
                );
            }
        }
    }

    #[test]
    fn fgsm_is_chunking_invariant() {
        let side = 8;
        let m = EVAL_CHUNK + 9;
        let bundle = small_bundle(side * side, 3, 5);
        let x = Tensor::from_fn([m, side * side], |i| ((i * 37) % 256) as f64 / 255.0);
        let y: Vec<usize> = (0..m).map(|i| i % 3).collect();
        let whole = fgsm_attack(&bundle, &x, &y, 0.2).unwrap();
        let first = x.gather_rows(&(0..100).collect::<Vec<_>>()).unwrap();
        let part = fgsm_attack(&bundle, &first, &y[..100], 0.2).unwrap();
        assert_eq!(&whole.data()[..100 * side * side], part.data());
    }

    #[test]
    fn fgsm_rejects_bad_epsilon() {
        let ds = small_ds();
        let bundle = small_bundle(ds.input_dim(), ds.n_classes(), 6);
        let (x, y) = ds.batch(&[0]).unwrap();
        for eps in [-0.1, f64::NAN] {
            assert!(fgsm_attack(&bundle, &x, &y, eps).is_err());
        }
    }

    #[test]
    fn episodes_have_requested_shape_and_remapped_labels() {
        let ds = small_ds();
        let mut rng = rng::stream(0, labels::EPISODES);
        let ep = sample_episode(&ds, 3, 1, 4, &mut rng).unwrap();
        assert_eq!(ep.support_y, vec![0, 1, 2]);
        assert_eq!(ep.query_y.len(), 12);
        assert_eq!(ep.support_x.shape(), &[3, ds.input_dim()]);
        assert!(ep.query_y.iter().all(|&y| y < 3));
    }

    #[test]
    fn episode_sampling_rejects_impossible_requests() {
        let ds = small_ds();
        let mut rng = rng::stream(1, labels::EPISODES);
        assert!(sample_episode(&ds, 1, 1, 1, &mut rng).is_err());
        assert!(sample_episode(&ds, 4, 1, 1, &mut rng).is_err());
        // 12 rows per class cannot cover 1 support + 12 queries.
        let err = sample_episode(&ds, 3, 1, 12, &mut rng).unwrap_err();
        assert!(matches!(err, Error::EmptySupport { .. }));
    }

    #[test]
    fn zero_augmentation_matches_plain_prototypes() {
        let ds = small_ds();
        let bundle = small_bundle(ds.input_dim(), ds.n_classes(), 7);
        let mut rng = rng::stream(2, labels::EPISODES);
        let ep = sample_episode(&ds, 3, 2, 3, &mut rng).unwrap();
        let plain = prototype_classify(&bundle, &ep).unwrap();
        let mut gen_rng = rng::stream(3, labels::EPISODES);
        let sg = sg_prototype_classify(&bundle, &ep, 0, &mut gen_rng).unwrap();
        assert_eq!(plain, sg);
    }

    #[test]
    fn augmented_prototypes_are_deterministic_given_the_stream() {
        let ds = small_ds();
        let bundle = small_bundle(ds.input_dim(), ds.n_classes(), 8);
        let mut rng = rng::stream(4, labels::EPISODES);
        let ep = sample_episode(&ds, 3, 1, 3, &mut rng).unwrap();
        let a = sg_prototype_classify(&bundle, &ep, 5, &mut rng::stream(9, labels::EVAL)).unwrap();
        let b = sg_prototype_classify(&bundle, &ep, 5, &mut rng::stream(9, labels::EVAL)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn probe_separates_separable_codes() {
        // Two well-separated Gaussian blobs in 2-d.
        let m = 60;
        let mut rng = rng::stream(5, labels::PROBE);
        let x = Tensor::from_fn([m, 2], |flat| {
            let i = flat / 2;
            let center = if i % 2 == 0 { -2.0 } else { 2.0 };
            center + 0.3 * rng::standard_normal(&mut rng)
        });
        let y: Vec<usize> = (0..m).map(|i| i % 2).collect();
        let acc = linear_probe_accuracy(&x, &y, &x, &y, 2, 0).unwrap();
        assert!(acc >= 0.95, "separable probe accuracy {acc}");
    }

    #[test]
    fn probe_on_constant_features_is_near_chance() {
        let m = 90;
        let x = Tensor::filled([m, 4], 0.5);
        let y: Vec<usize> = (0..m).map(|i| i % 3).collect();
        let acc = linear_probe_accuracy(&x, &y, &x, &y, 3, 0).unwrap();
        assert!((acc - 1.0 / 3.0).abs() < 0.15, "uninformative probe {acc}");
    }

    #[test]
    fn probe_validates_inputs() {
        let x = Tensor::filled([4, 2], 0.1);
        let y = vec![0, 1, 0, 1];
        let empty = Tensor::zeros([0, 2]);
        assert!(linear_probe_accuracy(&empty, &[], &x, &y, 2, 0).is_err());
        assert!(linear_probe_accuracy(&x, &y, &x, &y, 1, 0).is_err());
        assert!(linear_probe_accuracy(&x, &y[..3], &x, &y, 2, 0).is_err());
        let bad_eval = vec![0, 1, 5, 1];
        assert!(linear_probe_accuracy(&x, &y, &x, &bad_eval, 2, 0).is_err());
    }

    #[test]
    fn accuracy_ties_resolve_to_lowest_class() {
        let ds = small_ds();
        let mut bundle = small_bundle(ds.input_dim(), ds.n_classes(), 9);
        // Zero classifier makes every logit equal, so argmax is class 0.
        bundle.classifier.weight = Tensor::zeros([3, 3]);
        bundle.classifier.bias = Tensor::zeros([3]);
        let (x, _) = ds.batch(&[0, 12, 24]).unwrap();
        let acc = eval_accuracy(&bundle, &x, &[0, 1, 2]).unwrap();
        assert!((acc - 1.0 / 3.0).abs() < 1e-12);
    }
}
