use super::config::OptimizerKind;
use super::network::{flatten, Linear, QNetwork};

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

/// Parameter update rule. Adam keeps first and second moment estimates in
/// the same flat order as [`QNetwork::params`].
#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    lr: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64, num_params: usize) -> Self {
        let moments = if kind == OptimizerKind::Adam {
            num_params
        } else {
            0
        };
        Optimizer {
            kind,
            lr,
            m: vec![0.0; moments],
            v: vec![0.0; moments],
            t: 0,
        }
    }

    pub fn step(&mut self, net: &mut QNetwork, grads: &[Linear]) {
        let g = flatten(grads);
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, d) in net.params_mut().zip(&g) {
                    *p -= self.lr * d;
                }
            }
            OptimizerKind::Adam => {
                self.t += 1;
                let c1 = 1.0 - BETA1.powi(self.t);
                let c2 = 1.0 - BETA2.powi(self.t);
                for (i, (p, d)) in net.params_mut().zip(&g).enumerate() {
                    self.m[i] = BETA1 * self.m[i] + (1.0 - BETA1) * d;
                    self.v[i] = BETA2 * self.v[i] + (1.0 - BETA2) * d * d;
                    let m_hat = self.m[i] / c1;
                    let v_hat = self.v[i] / c2;
                    *p -= self.lr * m_hat / (v_hat.sqrt() + EPS);
                }
            }
        }
    }
}
