//! The four parameterized components and their wiring: a label-related
//! encoder, a sample-exclusive encoder, a generator, and a linear classifier.
//!
//! Wiring is the disentanglement contract: the classifier reads only the
//! label-related code `A` (its API accepts nothing else), while the generator
//! consumes the concatenation `(A, Z)`. Stochasticity never enters here; both
//! encoders emit a [`DiagGaussian`] and sampling happens in the objective.
//!
//! Parameters are enumerated in one fixed declaration order, which defines
//! the optimizer slot layout and the on-disk checkpoint layout:
//! encoder A, encoder Z (each `l1.w, l1.b, l2.w, l2.b, mean.w, mean.b,
//! log_var.w, log_var.b`), generator (`l1.w, l1.b, l2.w, l2.b, out.w,
//! out.b`), classifier (`w, b`) — 24 tensors in total.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::gaussian::{DiagGaussian, GaussNodes, LOG_VAR_MAX, LOG_VAR_MIN};
use crate::math;
use crate::rng::{self, SeededRng};
use crate::tape::{Tape, TensorId};
use crate::tensor::Tensor;

/// Negative-side slope of every LeakyReLU in the bundle.
pub const DEFAULT_LEAKY_SLOPE: f64 = 0.01;

/// Which latent code an encoder call refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Code {
    /// The label-related representation `A`.
    LabelRelated,
    /// The sample-exclusive representation `Z`.
    SampleExclusive,
}

/// Static sizes of the bundle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig {
    pub input_dim: usize,
    pub n_classes: usize,
    pub dim_a: usize,
    pub dim_z: usize,
    pub hidden: usize,
    pub leaky_slope: f64,
}

impl ModelConfig {
    pub fn new(input_dim: usize, n_classes: usize, dim_a: usize, dim_z: usize, hidden: usize) -> Self {
        Self {
            input_dim,
            n_classes,
            dim_a,
            dim_z,
            hidden,
            leaky_slope: DEFAULT_LEAKY_SLOPE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive: [(&'static str, usize); 5] = [
            ("input_dim", self.input_dim),
            ("n_classes", self.n_classes),
            ("dim_a", self.dim_a),
            ("dim_z", self.dim_z),
            ("hidden", self.hidden),
        ];
        for (field, v) in positive {
            if v == 0 {
                return Err(Error::InvalidConfig {
                    field,
                    reason: "must be positive",
                });
            }
        }
        if !(self.leaky_slope > 0.0 && self.leaky_slope < 1.0) {
            return Err(Error::InvalidConfig {
                field: "leaky_slope",
                reason: "must lie strictly between 0 and 1",
            });
        }
        Ok(())
    }
}

/// One dense layer: weight `(in, out)`, bias `(out)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl Linear {
    fn init(rng: &mut SeededRng, fan_in: usize, fan_out: usize) -> Self {
        // Uniform in +-sqrt(1/fan_in); biases start at zero.
        let scale = math::sqrt(1.0 / fan_in as f64);
        let weight = Tensor::from_fn([fan_in, fan_out], |_| {
            scale * (2.0 * rng::uniform(rng) - 1.0)
        });
        Self {
            weight,
            bias: Tensor::zeros([fan_out]),
        }
    }
}

/// Three-layer stochastic encoder with mean and log-variance heads.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoder {
    pub l1: Linear,
    pub l2: Linear,
    pub mean_head: Linear,
    pub log_var_head: Linear,
}

/// Three-layer generator mapping `(A, Z)` back to data space.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub l1: Linear,
    pub l2: Linear,
    pub out: Linear,
}

/// Softmax-linear classifier reading the label-related code only.
#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    pub weight: Tensor,
    pub bias: Tensor,
}

/// All trainable components plus their static configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    config: ModelConfig,
    pub encoder_a: Encoder,
    pub encoder_z: Encoder,
    pub generator: Generator,
    pub classifier: Classifier,
}

/// Number of parameter tensors in declaration order.
pub const PARAM_TENSORS: usize = 24;

impl ModelBundle {
    /// Fresh bundle with fan-in-scaled uniform weights and zero biases.
    pub fn init(config: ModelConfig, rng: &mut SeededRng) -> Result<Self> {
        config.validate()?;
        let enc = |rng: &mut SeededRng, dim: usize| Encoder {
            l1: Linear::init(rng, config.input_dim, config.hidden),
            l2: Linear::init(rng, config.hidden, config.hidden),
            mean_head: Linear::init(rng, config.hidden, dim),
            log_var_head: Linear::init(rng, config.hidden, dim),
        };
        let encoder_a = enc(rng, config.dim_a);
        let encoder_z = enc(rng, config.dim_z);
        let generator = Generator {
            l1: Linear::init(rng, config.dim_a + config.dim_z, config.hidden),
            l2: Linear::init(rng, config.hidden, config.hidden),
            out: Linear::init(rng, config.hidden, config.input_dim),
        };
        let classifier = {
            let lin = Linear::init(rng, config.dim_a, config.n_classes);
            Classifier {
                weight: lin.weight,
                bias: lin.bias,
            }
        };
        Ok(Self {
            config,
            encoder_a,
            encoder_z,
            generator,
            classifier,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    /// Parameter tensors in declaration order.
    pub fn params(&self) -> Vec<&Tensor> {
        fn enc(e: &Encoder) -> [&Tensor; 8] {
            [
                &e.l1.weight,
                &e.l1.bias,
                &e.l2.weight,
                &e.l2.bias,
                &e.mean_head.weight,
                &e.mean_head.bias,
                &e.log_var_head.weight,
                &e.log_var_head.bias,
            ]
        }
        let mut out: Vec<&Tensor> = Vec::with_capacity(PARAM_TENSORS);
        out.extend(enc(&self.encoder_a));
        out.extend(enc(&self.encoder_z));
        out.extend([
            &self.generator.l1.weight,
            &self.generator.l1.bias,
            &self.generator.l2.weight,
            &self.generator.l2.bias,
            &self.generator.out.weight,
            &self.generator.out.bias,
        ]);
        out.extend([&self.classifier.weight, &self.classifier.bias]);
        out
    }

    /// Mutable parameter tensors in declaration order.
    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out: Vec<&mut Tensor> = Vec::with_capacity(PARAM_TENSORS);
        for e in [&mut self.encoder_a, &mut self.encoder_z] {
            out.push(&mut e.l1.weight);
            out.push(&mut e.l1.bias);
            out.push(&mut e.l2.weight);
            out.push(&mut e.l2.bias);
            out.push(&mut e.mean_head.weight);
            out.push(&mut e.mean_head.bias);
            out.push(&mut e.log_var_head.weight);
            out.push(&mut e.log_var_head.bias);
        }
        out.push(&mut self.generator.l1.weight);
        out.push(&mut self.generator.l1.bias);
        out.push(&mut self.generator.l2.weight);
        out.push(&mut self.generator.l2.bias);
        out.push(&mut self.generator.out.weight);
        out.push(&mut self.generator.out.bias);
        out.push(&mut self.classifier.weight);
        out.push(&mut self.classifier.bias);
        out
    }

    /// Records every parameter as a differentiable leaf.
    pub fn record(&self, tape: &mut Tape) -> BoundModels {
        let ids = self.params().into_iter().map(|p| tape.leaf(p.clone())).collect();
        BoundModels {
            config: self.config,
            ids,
        }
    }

    /// Records every parameter as a constant; forward-only evaluation.
    pub fn record_frozen(&self, tape: &mut Tape) -> BoundModels {
        let ids = self
            .params()
            .into_iter()
            .map(|p| tape.constant(p.clone()))
            .collect();
        BoundModels {
            config: self.config,
            ids,
        }
    }

    /// Posterior of the requested code for a batch of inputs.
    pub fn encode(&self, x: &Tensor, which: Code) -> Result<DiagGaussian> {
        let mut tape = Tape::new();
        let bound = self.record_frozen(&mut tape);
        let xid = tape.constant(x.clone());
        let g = bound.encode(&mut tape, xid, which)?;
        g.snapshot(&tape)
    }

    /// Generator mean for row-aligned codes `a` and `z`.
    pub fn generate(&self, a: &Tensor, z: &Tensor) -> Result<Tensor> {
        let mut tape = Tape::new();
        let bound = self.record_frozen(&mut tape);
        let aid = tape.constant(a.clone());
        let zid = tape.constant(z.clone());
        let out = bound.generate(&mut tape, aid, zid)?;
        Ok(tape.value(out).clone())
    }

    /// Log-probabilities over classes for a batch of `A` codes.
    pub fn classify(&self, a: &Tensor) -> Result<Tensor> {
        let mut tape = Tape::new();
        let bound = self.record_frozen(&mut tape);
        let aid = tape.constant(a.clone());
        let out = bound.classify(&mut tape, aid)?;
        Ok(tape.value(out).clone())
    }
}

// Offsets into the declaration-order parameter list.
const ENC_A: usize = 0;
const ENC_Z: usize = 8;
const GEN: usize = 16;
const CLS: usize = 22;

/// A bundle's parameters recorded on a tape, plus the forward wiring.
pub struct BoundModels {
    config: ModelConfig,
    ids: Vec<TensorId>,
}

impl BoundModels {
    /// Recorded parameter nodes in declaration order.
    pub fn param_ids(&self) -> &[TensorId] {
        &self.ids
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    fn dense(
        &self,
        tape: &mut Tape,
        x: TensorId,
        w: TensorId,
        b: TensorId,
    ) -> Result<TensorId> {
        let h = tape.matmul(x, w)?;
        tape.add_row(h, b)
    }

    fn trunk(&self, tape: &mut Tape, x: TensorId, base: usize) -> Result<TensorId> {
        let slope = self.config.leaky_slope;
        let h1 = self.dense(tape, x, self.ids[base], self.ids[base + 1])?;
        let h1 = tape.leaky_relu(h1, slope);
        let h2 = self.dense(tape, h1, self.ids[base + 2], self.ids[base + 3])?;
        Ok(tape.leaky_relu(h2, slope))
    }

    /// Records the posterior heads of the requested encoder.
    pub fn encode(&self, tape: &mut Tape, x: TensorId, which: Code) -> Result<GaussNodes> {
        let base = match which {
            Code::LabelRelated => ENC_A,
            Code::SampleExclusive => ENC_Z,
        };
        let h = self.trunk(tape, x, base)?;
        let mean = self.dense(tape, h, self.ids[base + 4], self.ids[base + 5])?;
        let raw_lv = self.dense(tape, h, self.ids[base + 6], self.ids[base + 7])?;
        let log_variance = tape.clamp(raw_lv, LOG_VAR_MIN, LOG_VAR_MAX);
        Ok(GaussNodes {
            mean,
            log_variance,
        })
    }

    /// Records the generator mean for concatenated codes.
    pub fn generate(&self, tape: &mut Tape, a: TensorId, z: TensorId) -> Result<TensorId> {
        let slope = self.config.leaky_slope;
        let cat = tape.concat_cols(a, z)?;
        let h1 = self.dense(tape, cat, self.ids[GEN], self.ids[GEN + 1])?;
        let h1 = tape.leaky_relu(h1, slope);
        let h2 = self.dense(tape, h1, self.ids[GEN + 2], self.ids[GEN + 3])?;
        let h2 = tape.leaky_relu(h2, slope);
        self.dense(tape, h2, self.ids[GEN + 4], self.ids[GEN + 5])
    }

    /// Records classifier logits; takes only the label-related code.
    pub fn classify_logits(&self, tape: &mut Tape, a: TensorId) -> Result<TensorId> {
        self.dense(tape, a, self.ids[CLS], self.ids[CLS + 1])
    }

    /// Records row-normalized class log-probabilities.
    pub fn classify(&self, tape: &mut Tape, a: TensorId) -> Result<TensorId> {
        let logits = self.classify_logits(tape, a)?;
        tape.log_softmax(logits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::labels;
    use alloc::vec;
    use alloc::vec::Vec;

    fn tiny_config() -> ModelConfig {
        ModelConfig::new(6, 3, 2, 4, 8)
    }

    fn tiny_bundle(seed: u64) -> ModelBundle {
        ModelBundle::init(tiny_config(), &mut rng::stream(seed, labels::INIT)).unwrap()
    }

    #[test]
    fn encode_shapes_follow_config() {
        let bundle = tiny_bundle(0);
        let x = Tensor::from_fn([5, 6], |i| (i as f64) / 30.0);
        let ga = bundle.encode(&x, Code::LabelRelated).unwrap();
        assert_eq!(ga.mean().shape(), &[5, 2]);
        assert_eq!(ga.log_variance().shape(), &[5, 2]);
        let gz = bundle.encode(&x, Code::SampleExclusive).unwrap();
        assert_eq!(gz.mean().shape(), &[5, 4]);
    }

    #[test]
    fn encode_is_deterministic() {
        let bundle = tiny_bundle(1);
        let x = Tensor::from_fn([3, 6], |i| (i as f64) * 0.01 - 0.05);
        let a = bundle.encode(&x, Code::LabelRelated).unwrap();
        let b = bundle.encode(&x, Code::LabelRelated).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn extreme_inputs_keep_log_variance_clamped() {
        let bundle = tiny_bundle(2);
        for v in [1e3, -1e3] {
            let x = Tensor::filled([2, 6], v);
            let g = bundle.encode(&x, Code::SampleExclusive).unwrap();
            for &lv in g.log_variance().data() {
                assert!((LOG_VAR_MIN..=LOG_VAR_MAX).contains(&lv));
            }
        }
    }

    #[test]
    fn generate_shape_and_finiteness() {
        let bundle = tiny_bundle(3);
        let a = Tensor::from_fn([4, 2], |i| (i as f64) * 0.1);
        let z = Tensor::from_fn([4, 4], |i| 0.2 - (i as f64) * 0.05);
        let out = bundle.generate(&a, &z).unwrap();
        assert_eq!(out.shape(), &[4, 6]);
        assert!(out.all_finite());
    }

    #[test]
    fn generate_rejects_row_mismatch() {
        let bundle = tiny_bundle(3);
        let a = Tensor::zeros([4, 2]);
        let z = Tensor::zeros([3, 4]);
        assert!(matches!(
            bundle.generate(&a, &z).unwrap_err(),
            Error::ShapeMismatch { .. }
        ));
    }

    #[test]
    fn zero_classifier_is_uniform() {
        let mut bundle = tiny_bundle(4);
        bundle.classifier.weight = Tensor::zeros([2, 3]);
        bundle.classifier.bias = Tensor::zeros([3]);
        let a = Tensor::from_fn([2, 2], |i| i as f64);
        let lp = bundle.classify(&a).unwrap();
        for &v in lp.data() {
            assert!((v - math::ln(1.0 / 3.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn classify_rows_are_log_distributions() {
        let bundle = tiny_bundle(5);
        let a = Tensor::from_fn([7, 2], |i| (i as f64) * 0.3 - 1.0);
        let lp = bundle.classify(&a).unwrap();
        for i in 0..7 {
            let total: f64 = lp.row_slice(i).iter().map(|&v| math::exp(v)).sum();
            assert!((total - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn classify_hand_softmax_example() {
        let mut bundle = ModelBundle::init(
            ModelConfig::new(6, 2, 2, 4, 8),
            &mut rng::stream(6, labels::INIT),
        )
        .unwrap();
        bundle.classifier.weight = Tensor::matrix(2, 2, vec![1.0, -1.0, 0.0, 0.0]).unwrap();
        bundle.classifier.bias = Tensor::zeros([2]);
        let a = Tensor::matrix(1, 2, vec![1.0, 0.0]).unwrap();
        let lp = bundle.classify(&a).unwrap();
        let p0 = math::exp(lp.at2(0, 0));
        let p1 = math::exp(lp.at2(0, 1));
        let e = math::exp(1.0);
        let e_inv = math::exp(-1.0);
        assert!((p0 - e / (e + e_inv)).abs() < 1e-12);
        assert!((p1 - e_inv / (e + e_inv)).abs() < 1e-12);
        assert!((p0 - 0.880_797_077_977_882_3).abs() < 1e-12);
    }

    #[test]
    fn param_enumeration_matches_declared_layout() {
        let bundle = tiny_bundle(7);
        let params = bundle.params();
        assert_eq!(params.len(), PARAM_TENSORS);
        // Spot-check shapes at the declared offsets.
        assert_eq!(params[0].shape(), &[6, 8]); // encoder A l1 weight
        assert_eq!(params[5].shape(), &[2]); // encoder A mean bias
        assert_eq!(params[8].shape(), &[6, 8]); // encoder Z l1 weight
        assert_eq!(params[16].shape(), &[6, 8]); // generator l1 weight (2+4 -> 8)
        assert_eq!(params[20].shape(), &[8, 6]); // generator out weight
        assert_eq!(params[22].shape(), &[2, 3]); // classifier weight
        assert_eq!(params[23].shape(), &[3]); // classifier bias
    }

    #[test]
    fn init_respects_fan_in_bounds_and_zero_biases() {
        let bundle = tiny_bundle(8);
        let bound = math::sqrt(1.0 / 6.0);
        for &v in bundle.encoder_a.l1.weight.data() {
            assert!(v.abs() <= bound);
        }
        assert!(bundle.encoder_a.l1.bias.data().iter().all(|&v| v == 0.0));
        assert!(bundle.classifier.bias.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn same_seed_same_bundle() {
        let a = tiny_bundle(9);
        let b = tiny_bundle(9);
        let pa = a.params();
        let pb = b.params();
        for (x, y) in pa.iter().zip(&pb) {
            assert_eq!(x.data(), y.data());
        }
    }

    #[test]
    fn recorded_forward_matches_value_level_forward() {
        let bundle = tiny_bundle(10);
        let x = Tensor::from_fn([3, 6], |i| (i as f64) * 0.07 - 0.2);
        let direct = bundle.encode(&x, Code::LabelRelated).unwrap();

        let mut tape = Tape::new();
        let bound = bundle.record(&mut tape);
        let xid = tape.constant(x);
        let g = bound.encode(&mut tape, xid, Code::LabelRelated).unwrap();
        assert_eq!(tape.value(g.mean).data(), direct.mean().data());
        assert_eq!(
            tape.value(g.log_variance).data(),
            direct.log_variance().data()
        );
        assert_eq!(bound.param_ids().len(), PARAM_TENSORS);
    }

    #[test]
    fn params_mut_aligns_with_params() {
        let mut bundle = tiny_bundle(11);
        let shapes: Vec<Vec<usize>> = bundle
            .params()
            .iter()
            .map(|p| p.shape().to_vec())
            .collect();
        for (p, shape) in bundle.params_mut().into_iter().zip(&shapes) {
            assert_eq!(p.shape(), shape.as_slice());
        }
    }
}
