use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Piecewise-constant learning rate.
///
/// Updates are numbered from 1. Update `i` uses `values[k]` where `k` is
/// the number of change points strictly below `i`, so a change at 200 means
/// updates 1..=200 use the first rate and update 201 the second.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSchedule {
    values: Vec<f64>,
    change_at: Vec<u64>,
}

impl StepSchedule {
    pub fn new(values: Vec<f64>, change_at: Vec<u64>) -> Result<Self> {
        if values.len() != change_at.len() + 1 {
            return Err(Error::invalid(alloc::format!(
                "learning-rate schedule needs one more rate than change points ({} rates, {} change points)",
                values.len(),
                change_at.len()
            )));
        }
        if values.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::invalid("learning rates must be positive and finite"));
        }
        if change_at.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("learning-rate change iterations must be strictly increasing"));
        }
        Ok(StepSchedule { values, change_at })
    }

    pub fn rate(&self, update: u64) -> f64 {
        let k = self.change_at.iter().take_while(|&&c| c < update).count();
        self.values[k]
    }
}

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    steps: i32,
}

impl Adam {
    pub fn new(n_params: usize) -> Self {
        Adam { beta1: 0.9, beta2: 0.999, eps: 1e-8, m: vec![0.0; n_params], v: vec![0.0; n_params], steps: 0 }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.steps = self.steps.saturating_add(1);
        let bc1 = 1.0 - libm::pow(self.beta1, self.steps as f64);
        let bc2 = 1.0 - libm::pow(self.beta2, self.steps as f64);
        for ((p, &g), (m, v)) in params.iter_mut().zip(grad).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= lr * m_hat / (libm::sqrt(v_hat) + self.eps);
        }
    }
}
