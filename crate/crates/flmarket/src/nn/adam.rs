//! ADAM optimizer with bias correction.

/// Per-parameter first and second moment accumulators plus the shared step
/// counter.
#[derive(Clone, Debug)]
pub struct AdamState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    /// Moment buffers sized to match `param_sizes`, one entry per parameter
    /// tensor.
    pub fn new(param_sizes: &[usize], lr: f64) -> Self {
        Self {
            m: param_sizes.iter().map(|&s| vec![0.0; s]).collect(),
            v: param_sizes.iter().map(|&s| vec![0.0; s]).collect(),
            step: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update over all parameter tensors. `grads[k]` must match
    /// `params[k]` in length.
    pub fn step(&mut self, params: &mut [Vec<f64>], grads: &[Vec<f64>]) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grads.len(), self.m.len());
        self.step += 1;
        let t = self.step as f64;
        let bc1 = 1.0 - self.beta1.powf(t);
        let bc2 = 1.0 - self.beta2.powf(t);
        for ((param, grad), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            for k in 0..param.len() {
                let g = grad[k];
                m[k] = self.beta1 * m[k] + (1.0 - self.beta1) * g;
                v[k] = self.beta2 * v[k] + (1.0 - self.beta2) * g * g;
                let mhat = m[k] / bc1;
                let vhat = v[k] / bc2;
                param[k] -= self.lr * mhat / (vhat.sqrt() + self.epsilon);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_about_lr() {
        let mut adam = AdamState::new(&[1], 0.001);
        let mut params = vec![vec![1.0]];
        adam.step(&mut params, &[vec![1.0]]);
        // Bias-corrected first step is lr * sign(grad) up to epsilon.
        assert!((params[0][0] - (1.0 - 0.001)).abs() < 1e-6);
    }

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let mut adam = AdamState::new(&[3], 0.01);
        let mut params = vec![vec![1.0, -2.0, 0.5]];
        adam.step(&mut params, &[vec![0.0, 0.0, 0.0]]);
        assert_eq!(params[0], vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn descends_a_convex_quadratic() {
        // f(x) = (x - 3)^2, gradient 2(x - 3).
        let mut adam = AdamState::new(&[1], 0.1);
        let mut params = vec![vec![0.0]];
        let loss = |x: f64| (x - 3.0) * (x - 3.0);
        let l0 = loss(params[0][0]);
        for _ in 0..2 {
            let g = 2.0 * (params[0][0] - 3.0);
            adam.step(&mut params, &[vec![g]]);
        }
        assert!(loss(params[0][0]) < l0);
    }
}
