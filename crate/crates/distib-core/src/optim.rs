//! First-order parameter updates: plain SGD and Adam.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::tensor::Tensor;

/// Update rule selection with its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimSpec {
    Sgd {
        lr: f64,
    },
    Adam {
        lr: f64,
        beta1: f64,
        beta2: f64,
        eps: f64,
    },
}

impl OptimSpec {
    /// Adam with the customary moment decays `0.9 / 0.999` and `eps = 1e-8`.
    pub fn adam(lr: f64) -> Self {
        OptimSpec::Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let lr = match self {
            OptimSpec::Sgd { lr } => *lr,
            OptimSpec::Adam { lr, .. } => *lr,
        };
        if !(lr.is_finite() && lr > 0.0) {
            return Err(Error::InvalidConfig {
                field: "learning_rate",
                reason: "must be finite and positive",
            });
        }
        Ok(())
    }
}

/// Optimizer state bound to a fixed list of parameter shapes.
pub struct Optimizer {
    spec: OptimSpec,
    step: u64,
    first_moment: Vec<Vec<f64>>,
    second_moment: Vec<Vec<f64>>,
}

impl Optimizer {
    /// Allocates moment buffers matching `params` element counts.
    pub fn new(spec: OptimSpec, params: &[&Tensor]) -> Result<Self> {
        spec.validate()?;
        let (first, second) = match spec {
            OptimSpec::Sgd { .. } => (Vec::new(), Vec::new()),
            OptimSpec::Adam { .. } => (
                params.iter().map(|p| vec![0.0; p.numel()]).collect(),
                params.iter().map(|p| vec![0.0; p.numel()]).collect(),
            ),
        };
        Ok(Self {
            spec,
            step: 0,
            first_moment: first,
            second_moment: second,
        })
    }

    /// Applies one update. `grads` aligns with `params` by index.
    pub fn step(&mut self, params: &mut [&mut Tensor], grads: &[Tensor]) -> Result<()> {
        if params.len() != grads.len() {
            return Err(Error::ShapeMismatch {
                op: "optimizer_step",
                left: vec![params.len()],
                right: vec![grads.len()],
            });
        }
        for (p, g) in params.iter().zip(grads) {
            if p.shape() != g.shape() {
                return Err(Error::ShapeMismatch {
                    op: "optimizer_step",
                    left: p.shape().to_vec(),
                    right: g.shape().to_vec(),
                });
            }
        }
        self.step += 1;
        match self.spec {
            OptimSpec::Sgd { lr } => {
                for (p, g) in params.iter_mut().zip(grads) {
                    for (pv, gv) in p.data_mut().iter_mut().zip(g.data()) {
                        *pv -= lr * gv;
                    }
                }
            }
            OptimSpec::Adam {
                lr,
                beta1,
                beta2,
                eps,
            } => {
                let bias1 = 1.0 - pow_int(beta1, self.step);
                let bias2 = 1.0 - pow_int(beta2, self.step);
                for ((p, g), (m, v)) in params
                    .iter_mut()
                    .zip(grads)
                    .zip(self.first_moment.iter_mut().zip(&mut self.second_moment))
                {
                    for ((pv, gv), (mv, vv)) in p
                        .data_mut()
                        .iter_mut()
                        .zip(g.data())
                        .zip(m.iter_mut().zip(v.iter_mut()))
                    {
                        *mv = beta1 * *mv + (1.0 - beta1) * gv;
                        *vv = beta2 * *vv + (1.0 - beta2) * gv * gv;
                        let m_hat = *mv / bias1;
                        let v_hat = *vv / bias2;
                        *pv -= lr * m_hat / (math::sqrt(v_hat) + eps);
                    }
                }
            }
        }
        Ok(())
    }

    /// Number of updates applied so far.
    pub fn steps_taken(&self) -> u64 {
        self.step
    }
}

/// `base^exp` by repeated squaring; exact for the small exponents used here.
fn pow_int(base: f64, mut exp: u64) -> f64 {
    let mut acc = 1.0;
    let mut b = base;
    while exp > 0 {
        if exp & 1 == 1 {
            acc *= b;
        }
        b *= b;
        exp >>= 1;
    }
    acc
}
