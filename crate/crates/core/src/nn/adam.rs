use ndarray::Zip;
use serde::{Deserialize, Serialize};

use super::mlp::{Dense, Gradients, Mlp};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        Self { lr: 1e-4, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Adam moment estimates for every parameter of one network.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub hyper: AdamHyper,
    pub step: u64,
    pub m: Vec<Dense>,
    pub v: Vec<Dense>,
}

impl Adam {
    pub fn new(net: &Mlp, hyper: AdamHyper) -> Self {
        let zeros: Vec<Dense> = net.layers().iter().map(|l| Dense::zeros(l.inputs(), l.outputs())).collect();
        Self { hyper, step: 0, m: zeros.clone(), v: zeros }
    }

    /// Apply one bias-corrected Adam update.
    pub fn update(&mut self, net: &mut Mlp, grads: &Gradients) -> Result<()> {
        if grads.len() != net.layers().len() || self.m.len() != grads.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} gradient layers", net.layers().len()),
                got: format!("{}", grads.len()),
            });
        }
        self.step += 1;
        let AdamHyper { lr, beta1, beta2, eps } = self.hyper;
        let t = self.step as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        let apply = |p: &mut f64, m: &mut f64, v: &mut f64, g: f64| {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        };
        for (((layer, g), m), v) in net.layers_mut().iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            Zip::from(&mut layer.weights)
                .and(&mut m.weights)
                .and(&mut v.weights)
                .and(&g.weights)
                .for_each(|p, m, v, &g| apply(p, m, v, g));
            Zip::from(&mut layer.bias)
                .and(&mut m.bias)
                .and(&mut v.bias)
                .and(&g.bias)
                .for_each(|p, m, v, &g| apply(p, m, v, g));
        }
        Ok(())
    }
}
