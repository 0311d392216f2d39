use super::{DenseMatrix, TensorError};

/// Adam with bias correction and L2 weight decay folded into the gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    step: u64,
    first: Vec<DenseMatrix>,
    second: Vec<DenseMatrix>,
}

impl AdamState {
    /// Zeroed moments shaped like `params`.
    pub fn new(params: &[&DenseMatrix], lr: f64, weight_decay: f64) -> Self {
        let first: Vec<_> = params
            .iter()
            .map(|p| DenseMatrix::zeros(p.rows(), p.cols()))
            .collect();
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
            step: 0,
            second: first.clone(),
            first,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update of every parameter in place.
    pub fn step(
        &mut self,
        params: &mut [&mut DenseMatrix],
        grads: &[&DenseMatrix],
    ) -> Result<(), TensorError> {
        if params.len() != self.first.len() || grads.len() != params.len() {
            return Err(TensorError::ParamCount {
                expected: self.first.len(),
                found: params.len().min(grads.len()),
            });
        }
        for ((p, g), m) in params.iter().zip(grads).zip(&self.first) {
            if p.shape() != g.shape() || p.shape() != m.shape() {
                return Err(TensorError::shape("adam_step", p.shape(), g.shape()));
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            let m = self.first[i].as_mut_slice();
            let v = self.second[i].as_mut_slice();
            for (((theta, &grad), m), v) in p
                .as_mut_slice()
                .iter_mut()
                .zip(g.as_slice())
                .zip(m.iter_mut())
                .zip(v.iter_mut())
            {
                let grad = grad + self.weight_decay * *theta;
                *m = self.beta1 * *m + (1.0 - self.beta1) * grad;
                *v = self.beta2 * *v + (1.0 - self.beta2) * grad * grad;
                let m_hat = *m / bc1;
                let v_hat = *v / bc2;
                *theta -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

/// Convenience wrapper matching the functional form `adam_step(params, grads, state)`.
pub fn adam_step(
    params: &mut [&mut DenseMatrix],
    grads: &[&DenseMatrix],
    state: &mut AdamState,
) -> Result<(), TensorError> {
    state.step(params, grads)
}
