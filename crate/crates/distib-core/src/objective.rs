//! The training objective and dataset-level information diagnostics.
//!
//! The loss combines three variational estimates, all minimized:
//!
//! * `sufficiency` — reconstruction NLL of the generator fed one
//!   reparameterized draw of each code; surrogate for `-I(X; A, Z)` up to the
//!   constant `H(X)`.
//! * `prediction` — classifier cross-entropy on the sampled label-related
//!   code; surrogate for `-I(A; Y)` up to the constant `H(Y)`.
//! * `kl_A`, `kl_Z` — analytic KL of each posterior to the spherical prior;
//!   upper bounds on `I(X; A)` and `I(X; Z)`, weighted by `beta`.
//!
//! Both dropped entropies are constants of the data, so the gradient field
//! is unaffected; every reported bound is stated up to those constants.

use alloc::vec::Vec;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::gaussian;
use crate::math;
use crate::models::{BoundModels, Code, ModelBundle};
use crate::rng::SeededRng;
use crate::tape::{Tape, TensorId};
use crate::tensor::Tensor;

/// Scalar values of one loss evaluation.
///
/// Invariant: `total = sufficiency + prediction + beta * (kl_a + kl_z)`
/// within 1e-12.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub sufficiency: f64,
    pub prediction: f64,
    pub kl_a: f64,
    pub kl_z: f64,
    pub beta: f64,
    pub total: f64,
}

impl LossBreakdown {
    /// Recomposes the total from its parts; test hook for the invariant.
    pub fn composed(&self) -> f64 {
        self.sufficiency + self.prediction + self.beta * (self.kl_a + self.kl_z)
    }

    /// Name of the first non-finite term, if any, in reporting order.
    pub fn first_non_finite(&self) -> Option<&'static str> {
        let terms = [
            ("sufficiency", self.sufficiency),
            ("prediction", self.prediction),
            ("kl_A", self.kl_a),
            ("kl_Z", self.kl_z),
            ("total", self.total),
        ];
        terms.iter().find(|(_, v)| !v.is_finite()).map(|(n, _)| *n)
    }
}

/// Tape nodes of the loss terms; `total` is the node to differentiate.
#[derive(Debug, Clone, Copy)]
pub struct LossNodes {
    pub sufficiency: TensorId,
    pub prediction: TensorId,
    pub kl_a: TensorId,
    pub kl_z: TensorId,
    pub total: TensorId,
    beta: f64,
}

impl LossNodes {
    /// Materializes the scalar values of every term.
    pub fn breakdown(&self, tape: &Tape) -> LossBreakdown {
        LossBreakdown {
            sufficiency: tape.value(self.sufficiency).item(),
            prediction: tape.value(self.prediction).item(),
            kl_a: tape.value(self.kl_a).item(),
            kl_z: tape.value(self.kl_z).item(),
            beta: self.beta,
            total: tape.value(self.total).item(),
        }
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta.is_finite() && (0.0..=1.0).contains(&beta)) {
        return Err(Error::InvalidConfig {
            field: "beta",
            reason: "must lie in [0, 1]",
        });
    }
    Ok(())
}

/// Records the full objective for one batch onto `tape`.
///
/// Each of the `mc_samples` Monte-Carlo rounds draws fresh reparameterized
/// codes for both encoders; reconstruction and prediction terms are averaged
/// over rounds. The KL terms are analytic and drawn once.
pub fn distib_loss_on(
    tape: &mut Tape,
    bound: &BoundModels,
    x: TensorId,
    labels: &[usize],
    beta: f64,
    mc_samples: usize,
    rng: &mut SeededRng,
) -> Result<LossNodes> {
    check_beta(beta)?;
    if mc_samples == 0 {
        return Err(Error::InvalidConfig {
            field: "mc_samples",
            reason: "must be at least 1",
        });
    }
    let (n, _) = tape.value(x).dims2()?;
    if n == 0 || labels.is_empty() {
        return Err(Error::EmptyDataset { op: "distib_loss" });
    }

    let g_a = bound.encode(tape, x, Code::LabelRelated)?;
    let g_z = bound.encode(tape, x, Code::SampleExclusive)?;

    let mut suff_acc: Option<TensorId> = None;
    let mut pred_acc: Option<TensorId> = None;
    for _ in 0..mc_samples {
        let a = gaussian::reparameterize_on(tape, &g_a, rng)?;
        let z = gaussian::reparameterize_on(tape, &g_z, rng)?;
        let x_hat = bound.generate(tape, a, z)?;
        let suff = gaussian::recon_nll_on(tape, x, x_hat)?;
        let logits = bound.classify_logits(tape, a)?;
        let pred = tape.nll_mean(logits, labels)?;
        suff_acc = Some(match suff_acc {
            None => suff,
            Some(acc) => tape.add(acc, suff)?,
        });
        pred_acc = Some(match pred_acc {
            None => pred,
            Some(acc) => tape.add(acc, pred)?,
        });
    }
    let inv = 1.0 / mc_samples as f64;
    let sufficiency = tape.affine(suff_acc.expect("mc_samples >= 1"), inv, 0.0);
    let prediction = tape.affine(pred_acc.expect("mc_samples >= 1"), inv, 0.0);

    let kl_a = gaussian::kl_std_normal_on(tape, &g_a)?;
    let kl_z = gaussian::kl_std_normal_on(tape, &g_z)?;

    let kl_sum = tape.add(kl_a, kl_z)?;
    let weighted = tape.affine(kl_sum, beta, 0.0);
    let main = tape.add(sufficiency, prediction)?;
    let total = tape.add(main, weighted)?;
    Ok(LossNodes {
        sufficiency,
        prediction,
        kl_a,
        kl_z,
        total,
        beta,
    })
}

/// Evaluates the objective on a value-level batch without keeping the tape.
pub fn distib_loss(
    bundle: &ModelBundle,
    x: &Tensor,
    labels: &[usize],
    beta: f64,
    mc_samples: usize,
    rng: &mut SeededRng,
) -> Result<LossBreakdown> {
    let mut tape = Tape::new();
    let bound = bundle.record_frozen(&mut tape);
    let xid = tape.constant(x.clone());
    let nodes = distib_loss_on(&mut tape, &bound, xid, labels, beta, mc_samples, rng)?;
    Ok(nodes.breakdown(&tape))
}

/// Dataset-level information diagnostics, all in nats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiEstimates {
    /// Upper bound on I(X; A): mean posterior KL to the prior.
    pub i_xa_upper: f64,
    /// Upper bound on I(X; Z): mean posterior KL to the prior.
    pub i_xz_upper: f64,
    /// Lower bound on I(A; Y): `H_Y` minus the classifier cross-entropy.
    pub i_ay_lower: f64,
    /// Empirical label entropy.
    pub h_y: f64,
}

/// Empirical entropy of a label sequence in nats.
pub fn label_entropy(labels: &[usize], n_classes: usize) -> f64 {
    let mut counts = alloc::vec![0usize; n_classes];
    for &y in labels {
        counts[y] += 1;
    }
    let n = labels.len() as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * math::ln(p)
        })
        .sum()
}

/// Rows scanned per forward chunk during dataset-level evaluation.
pub(crate) const EVAL_CHUNK: usize = 256;

/// Information estimates plus classifier accuracy in one dataset pass.
///
/// The classifier is evaluated at the posterior mean of `A`, making the
/// diagnostics deterministic functions of (bundle, dataset). Ties in the
/// argmax resolve to the lowest class index.
pub fn dataset_diagnostics(bundle: &ModelBundle, ds: &Dataset) -> Result<(MiEstimates, f64)> {
    let m = ds.len();
    let mut kl_a_total = 0.0;
    let mut kl_z_total = 0.0;
    let mut ce_total = 0.0;
    let mut correct = 0usize;
    let mut start = 0;
    while start < m {
        let end = (start + EVAL_CHUNK).min(m);
        let indices: Vec<usize> = (start..end).collect();
        let (x, y) = ds.batch(&indices)?;
        let rows = end - start;
        let g_a = bundle.encode(&x, Code::LabelRelated)?;
        let g_z = bundle.encode(&x, Code::SampleExclusive)?;
        kl_a_total += g_a.kl_std_normal() * rows as f64;
        kl_z_total += g_z.kl_std_normal() * rows as f64;
        let log_probs = bundle.classify(g_a.mean())?;
        for (i, &label) in y.iter().enumerate() {
            let row = log_probs.row_slice(i);
            ce_total -= row[label];
            let mut best = 0;
            for (k, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = k;
                }
            }
            if best == label {
                correct += 1;
            }
        }
        start = end;
    }
    let h_y = label_entropy(ds.labels(), ds.n_classes());
    let mi = MiEstimates {
        i_xa_upper: kl_a_total / m as f64,
        i_xz_upper: kl_z_total / m as f64,
        i_ay_lower: h_y - ce_total / m as f64,
        h_y,
    };
    Ok((mi, correct as f64 / m as f64))
}

/// Information estimates over a full dataset.
pub fn mi_estimates(bundle: &ModelBundle, ds: &Dataset) -> Result<MiEstimates> {
    Ok(dataset_diagnostics(bundle, ds)?.0)
}
