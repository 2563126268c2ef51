//! Mini-batch gradient training of a model bundle.
//!
//! One `fit` call is a pure function of `(config, datasets)`: parameter
//! initialization, per-epoch shuffles, and reparameterization noise all come
//! from generators derived from the configured seed, so repeated runs produce
//! bit-identical parameters and metrics.
//!
//! A non-finite loss term aborts the run with an error naming the first bad
//! term rather than silently training on poisoned gradients.

use alloc::vec::Vec;

use crate::data::{self, Dataset};
use crate::error::{Error, Result};
use crate::models::{ModelBundle, ModelConfig};
use crate::objective::{self, MiEstimates};
use crate::optim::{OptimSpec, Optimizer};
use crate::rng::{self, labels};
use crate::tape::Tape;

/// Everything a training run needs besides the data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    /// Full passes over the training set.
    pub epochs: usize,
    /// Rows per gradient step; the last batch of an epoch may be short.
    pub batch_size: usize,
    /// Master seed; all randomness in the run derives from it.
    pub seed: u64,
    /// Compression weight in `[0, 1]`.
    pub beta: f64,
    /// Adam step size.
    pub learning_rate: f64,
    /// Width of the label-related code.
    pub dim_a: usize,
    /// Width of the sample-exclusive code.
    pub dim_z: usize,
    /// Hidden width shared by encoders and generator.
    pub hidden: usize,
    /// Monte-Carlo rounds per batch for the sampled loss terms.
    pub mc_samples: usize,
    /// Epoch interval between dataset-level diagnostic evaluations.
    pub log_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 128,
            seed: 0,
            beta: 0.01,
            learning_rate: 1e-3,
            dim_a: 16,
            dim_z: 16,
            hidden: 256,
            mc_samples: 1,
            log_every: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive: [(&'static str, usize); 6] = [
            ("epochs", self.epochs),
            ("batch_size", self.batch_size),
            ("dim_a", self.dim_a),
            ("dim_z", self.dim_z),
            ("hidden", self.hidden),
            ("mc_samples", self.mc_samples),
        ];
        for (field, v) in positive {
            if v == 0 {
                return Err(Error::InvalidConfig {
                    field,
                    reason: "must be at least 1",
                });
            }
        }
        if self.log_every == 0 {
            return Err(Error::InvalidConfig {
                field: "log_every",
                reason: "must be at least 1",
            });
        }
        if !(self.beta.is_finite() && (0.0..=1.0).contains(&self.beta)) {
            return Err(Error::InvalidConfig {
                field: "beta",
                reason: "must lie in [0, 1]",
            });
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig {
                field: "learning_rate",
                reason: "must be positive and finite",
            });
        }
        Ok(())
    }
}

/// Diagnostics captured at one logged epoch.
///
/// Loss terms are averages over the epoch's batches weighted by batch size;
/// accuracies and information estimates come from a deterministic full pass
/// at the epoch boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsRecord {
    /// 1-based epoch index.
    pub epoch: usize,
    pub total: f64,
    pub sufficiency: f64,
    pub prediction: f64,
    pub kl_a: f64,
    pub kl_z: f64,
    pub mi: MiEstimates,
    pub train_acc: f64,
    /// Absent when the run has no held-out set.
    pub test_acc: Option<f64>,
}

/// A trained bundle plus the metric history of its run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub bundle: ModelBundle,
    pub metrics: Vec<MetricsRecord>,
}

impl TrainOutcome {
    /// The last logged record; the loop always logs the final epoch.
    pub fn last(&self) -> &MetricsRecord {
        self.metrics.last().expect("training logs the final epoch")
    }
}

/// Initializes a fresh bundle from the config seed and trains it.
pub fn fit(config: &TrainConfig, train: &Dataset, test: Option<&Dataset>) -> Result<TrainOutcome> {
    config.validate()?;
    let model_config = ModelConfig::new(
        train.input_dim(),
        train.n_classes(),
        config.dim_a,
        config.dim_z,
        config.hidden,
    );
    let bundle = ModelBundle::init(model_config, &mut rng::stream(config.seed, labels::INIT))?;
    fit_from(bundle, config, train, test)
}

/// Trains an existing bundle in place; entry point for warm starts.
pub fn fit_from(
    mut bundle: ModelBundle,
    config: &TrainConfig,
    train: &Dataset,
    test: Option<&Dataset>,
) -> Result<TrainOutcome> {
    config.validate()?;
    if bundle.config().input_dim != train.input_dim() {
        return Err(Error::InvalidConfig {
            field: "bundle",
            reason: "input width does not match the training set",
        });
    }
    if bundle.config().n_classes != train.n_classes() {
        return Err(Error::InvalidConfig {
            field: "bundle",
            reason: "class count does not match the training set",
        });
    }
    if let Some(t) = test {
        if t.input_dim() != train.input_dim() || t.n_classes() != train.n_classes() {
            return Err(Error::InvalidConfig {
                field: "test",
                reason: "held-out set does not match the training set",
            });
        }
    }

    let mut optimizer = {
        let params = bundle.params();
        Optimizer::new(OptimSpec::adam(config.learning_rate), &params)?
    };
    let mut noise = rng::stream(config.seed, labels::NOISE);
    let mut metrics = Vec::new();

    for epoch in 1..=config.epochs {
        let batches =
            data::batch_iter(train, config.batch_size, rng::derive(config.seed, epoch as u64))?;
        let mut sums = [0.0f64; 5];
        let mut rows_seen = 0usize;
        for (batch_idx, indices) in batches.iter().enumerate() {
            let (x, y) = train.batch(indices)?;
            let mut tape = Tape::new();
            let bound = bundle.record(&mut tape);
            let xid = tape.constant(x);
            let nodes = objective::distib_loss_on(
                &mut tape,
                &bound,
                xid,
                &y,
                config.beta,
                config.mc_samples,
                &mut noise,
            )?;
            let breakdown = nodes.breakdown(&tape);
            if let Some(term) = breakdown.first_non_finite() {
                return Err(Error::NonFiniteLoss {
                    term,
                    epoch,
                    batch: batch_idx + 1,
                });
            }
            let grads = tape.backward(nodes.total)?;
            let grad_tensors: Vec<_> = bound
                .param_ids()
                .iter()
                .zip(bundle.params())
                .map(|(&id, p)| grads.wrt(id, p))
                .collect();
            let mut params = bundle.params_mut();
            optimizer.step(&mut params, &grad_tensors)?;

            let w = indices.len() as f64;
            sums[0] += breakdown.total * w;
            sums[1] += breakdown.sufficiency * w;
            sums[2] += breakdown.prediction * w;
            sums[3] += breakdown.kl_a * w;
            sums[4] += breakdown.kl_z * w;
            rows_seen += indices.len();
        }

        if epoch % config.log_every == 0 || epoch == config.epochs {
            let inv = 1.0 / rows_seen as f64;
            let (mi, train_acc) = objective::dataset_diagnostics(&bundle, train)?;
            let test_acc = match test {
                Some(t) => Some(objective::dataset_diagnostics(&bundle, t)?.1),
                None => None,
            };
            metrics.push(MetricsRecord {
                epoch,
                total: sums[0] * inv,
                sufficiency: sums[1] * inv,
                prediction: sums[2] * inv,
                kl_a: sums[3] * inv,
                kl_z: sums[4] * inv,
                mi,
                train_acc,
                test_acc,
            });
        }
    }
    Ok(TrainOutcome { bundle, metrics })
}

/// One row of a compression-prediction trade-off sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneRow {
    pub beta: f64,
    pub i_xa_upper: f64,
    pub i_ay_lower: f64,
    pub h_y: f64,
    pub test_acc: f64,
}

/// A sweep row whose training run aborted.
#[derive(Debug)]
pub struct SweepFailure {
    pub beta: f64,
    pub error: Error,
}

/// Result of a β-sweep: completed rows in β order plus any aborted rows.
#[derive(Debug)]
pub struct SweepReport {
    pub rows: Vec<PlaneRow>,
    pub failures: Vec<SweepFailure>,
}

/// Trains one run per `beta` and reports each run's final bounds.
///
/// Run `i` uses seed `base.seed + i` so runs differ only in their weight and
/// the usual seed-to-seed variation, never in hidden shared state. A run
/// that aborts (for example on a non-finite loss) is recorded as a failure
/// and the sweep continues with the remaining values.
pub fn beta_sweep(
    base: &TrainConfig,
    betas: &[f64],
    train: &Dataset,
    test: &Dataset,
) -> Result<SweepReport> {
    if betas.is_empty() {
        return Err(Error::InvalidConfig {
            field: "betas",
            reason: "sweep needs at least one value",
        });
    }
    for &beta in betas {
        if !(beta.is_finite() && (0.0..=1.0).contains(&beta)) {
            return Err(Error::InvalidConfig {
                field: "betas",
                reason: "every sweep value must lie in [0, 1]",
            });
        }
    }
    let mut rows = Vec::with_capacity(betas.len());
    let mut failures = Vec::new();
    for (i, &beta) in betas.iter().enumerate() {
        let config = TrainConfig {
            beta,
            seed: base.seed + i as u64,
            ..*base
        };
        match fit(&config, train, Some(test)) {
            Ok(outcome) => {
                let record = outcome.last();
                rows.push(PlaneRow {
                    beta,
                    i_xa_upper: record.mi.i_xa_upper,
                    i_ay_lower: record.mi.i_ay_lower,
                    h_y: record.mi.h_y,
                    test_acc: record.test_acc.expect("sweep always has a held-out set"),
                });
            }
            Err(error) => failures.push(SweepFailure { beta, error }),
        }
    }
    Ok(SweepReport { rows, failures })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synth_shapes;

    fn tiny_config() -> TrainConfig {
        TrainConfig {
            epochs: 2,
            batch_size: 16,
            seed: 7,
            beta: 0.01,
            learning_rate: 1e-3,
            dim_a: 2,
            dim_z: 2,
            hidden: 8,
            mc_samples: 1,
            log_every: 1,
        }
    }

    fn tiny_data() -> Dataset {
        synth_shapes(20, 8, 99).unwrap()
    }

    #[test]
    fn default_config_is_valid() {
        TrainConfig::default().validate().unwrap();
    }

    #[test]
    fn bad_fields_are_rejected() {
        let base = tiny_config();
        let cases = [
            TrainConfig { epochs: 0, ..base },
            TrainConfig {
                batch_size: 0,
                ..base
            },
            TrainConfig { beta: 1.5, ..base },
            TrainConfig {
                learning_rate: 0.0,
                ..base
            },
            TrainConfig {
                log_every: 0,
                ..base
            },
            TrainConfig {
                mc_samples: 0,
                ..base
            },
        ];
        for bad in cases {
            assert!(matches!(
                bad.validate(),
                Err(Error::InvalidConfig { .. })
            ));
        }
    }

    #[test]
    fn training_is_bit_deterministic() {
        let ds = tiny_data();
        let config = tiny_config();
        let a = fit(&config, &ds, Some(&ds)).unwrap();
        let b = fit(&config, &ds, Some(&ds)).unwrap();
        assert_eq!(a.metrics, b.metrics);
        assert_eq!(a.bundle, b.bundle);
    }

    #[test]
    fn loss_improves_on_tiny_run() {
        let ds = tiny_data();
        let config = TrainConfig {
            epochs: 8,
            ..tiny_config()
        };
        let outcome = fit(&config, &ds, None).unwrap();
        let first = outcome.metrics.first().unwrap().total;
        let last = outcome.last().total;
        assert!(
            last < first,
            "loss should drop over training: first {first}, last {last}"
        );
    }

    #[test]
    fn non_finite_parameter_aborts_with_term_name() {
        let ds = tiny_data();
        let config = tiny_config();
        let model_config = ModelConfig::new(ds.input_dim(), ds.n_classes(), 2, 2, 8);
        let mut bundle =
            ModelBundle::init(model_config, &mut rng::stream(0, labels::INIT)).unwrap();
        bundle.generator.out.weight.data_mut()[0] = f64::NAN;
        let err = fit_from(bundle, &config, &ds, None).unwrap_err();
        assert!(matches!(
            err,
            Error::NonFiniteLoss {
                term: "sufficiency",
                epoch: 1,
                batch: 1,
            }
        ));
    }

    #[test]
    fn log_cadence_keeps_final_epoch() {
        let ds = tiny_data();
        let config = TrainConfig {
            epochs: 5,
            log_every: 2,
            ..tiny_config()
        };
        let outcome = fit(&config, &ds, None).unwrap();
        let epochs: Vec<usize> = outcome.metrics.iter().map(|m| m.epoch).collect();
        assert_eq!(epochs, alloc::vec![2, 4, 5]);
    }

    #[test]
    fn mismatched_bundle_is_rejected() {
        let ds = tiny_data();
        let config = tiny_config();
        let other = ModelConfig::new(ds.input_dim() + 1, ds.n_classes(), 2, 2, 8);
        let bundle = ModelBundle::init(other, &mut rng::stream(0, labels::INIT)).unwrap();
        let err = fit_from(bundle, &config, &ds, None).unwrap_err();
        assert!(matches!(
            err,
            Error::InvalidConfig { field: "bundle", .. }
        ));
    }

    #[test]
    fn warm_start_continues_from_given_weights() {
        let ds = tiny_data();
        let config = TrainConfig {
            epochs: 1,
            ..tiny_config()
        };
        let two_stage = {
            let first = fit(&config, &ds, None).unwrap();
            fit_from(first.bundle, &config, &ds, None).unwrap()
        };
        let fresh = fit(&config, &ds, None).unwrap();
        assert_ne!(two_stage.bundle, fresh.bundle);
    }

    #[test]
    fn sweep_reports_one_row_per_beta() {
        let ds = tiny_data();
        let config = TrainConfig {
            epochs: 1,
            ..tiny_config()
        };
        let report = beta_sweep(&config, &[0.0, 0.5], &ds, &ds).unwrap();
        assert_eq!(report.rows.len(), 2);
        assert!(report.failures.is_empty());
        assert_eq!(report.rows[0].beta, 0.0);
        assert_eq!(report.rows[1].beta, 0.5);
        for row in &report.rows {
            assert!(row.i_xa_upper.is_finite());
            assert!(row.test_acc.is_finite());
            assert!((row.h_y - crate::math::ln(3.0)).abs() < 0.15);
        }
        assert!(beta_sweep(&config, &[], &ds, &ds).is_err());
        assert!(beta_sweep(&config, &[0.5, 1.5], &ds, &ds).is_err());
    }

    #[test]
    fn sweep_continues_past_a_diverged_row() {
        // A hopeless step size makes every run abort on a non-finite loss;
        // the sweep must record each failure and keep going rather than
        // stop at the first. Adam steps are scale-normalized, so the rate
        // must be large enough that squared activations overflow.
        let ds = tiny_data();
        let config = TrainConfig {
            epochs: 2,
            learning_rate: 1e40,
            ..tiny_config()
        };
        let report = beta_sweep(&config, &[0.0, 1.0], &ds, &ds).unwrap();
        assert!(report.rows.is_empty());
        assert_eq!(report.failures.len(), 2);
        assert_eq!(report.failures[0].beta, 0.0);
        assert_eq!(report.failures[1].beta, 1.0);
        for failure in &report.failures {
            assert!(matches!(failure.error, Error::NonFiniteLoss { .. }));
        }
    }

    #[test]
    fn batch_average_matches_dataset_size() {
        // Epoch averages weight by rows, so a short final batch must not
        // skew the total: check the weights sum to the dataset size by
        // training one epoch with a batch size that does not divide it.
        let ds = tiny_data();
        let config = TrainConfig {
            epochs: 1,
            batch_size: 17,
            ..tiny_config()
        };
        let outcome = fit(&config, &ds, None).unwrap();
        assert!(outcome.metrics[0].total.is_finite());
        assert_eq!(outcome.metrics.len(), 1);
    }
}
