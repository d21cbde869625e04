use serde::{Deserialize, Serialize};

/// RMSProp: `a <- rho a + (1 - rho) g^2`, `theta <- theta - lr g / (sqrt(a) + eps)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmsProp {
    pub lr: f64,
    pub decay: f64,
    pub epsilon: f64,
    /// Squared-gradient accumulators, one per parameter tensor. Allocated on
    /// the first step.
    accum: Vec<Vec<f64>>,
}

impl RmsProp {
    pub const DEFAULT_DECAY: f64 = 0.9;
    pub const DEFAULT_EPSILON: f64 = 1e-8;

    pub fn new(lr: f64) -> Self {
        RmsProp {
            lr,
            decay: Self::DEFAULT_DECAY,
            epsilon: Self::DEFAULT_EPSILON,
            accum: Vec::new(),
        }
    }

    pub fn accumulators(&self) -> &[Vec<f64>] {
        &self.accum
    }

    /// Applies one update. `params` and `grads` must list tensors in the same
    /// order and shapes on every call.
    pub fn step(&mut self, params: Vec<&mut [f64]>, grads: Vec<&[f64]>) {
        assert_eq!(params.len(), grads.len(), "parameter/gradient tensor count");
        if self.accum.is_empty() {
            self.accum = grads.iter().map(|g| vec![0.0; g.len()]).collect();
        }
        for ((p, g), a) in params.into_iter().zip(grads).zip(self.accum.iter_mut()) {
            assert_eq!(p.len(), g.len(), "parameter/gradient shape");
            assert_eq!(a.len(), g.len(), "accumulator shape");
            for ((pi, &gi), ai) in p.iter_mut().zip(g).zip(a.iter_mut()) {
                *ai = self.decay * *ai + (1.0 - self.decay) * gi * gi;
                *pi -= self.lr * gi / (ai.sqrt() + self.epsilon);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_by_hand() {
        let mut opt = RmsProp::new(0.01);
        let mut p = vec![1.0, -2.0];
        opt.step(vec![&mut p], vec![&[0.5, -1.0]]);
        // a = 0.1 g^2, step = lr g / (sqrt(0.1) |g| + eps)
        let a0: f64 = 0.1 * 0.25;
        let a1: f64 = 0.1 * 1.0;
        assert!((p[0] - (1.0 - 0.01 * 0.5 / (a0.sqrt() + 1e-8))).abs() < 1e-15);
        assert!((p[1] - (-2.0 + 0.01 * 1.0 / (a1.sqrt() + 1e-8))).abs() < 1e-15);
        assert!(opt.accumulators()[0].iter().all(|&a| a >= 0.0));
    }

    #[test]
    fn minimizes_quadratic() {
        let mut opt = RmsProp::new(0.05);
        let mut x = vec![3.0];
        for _ in 0..500 {
            let g = [2.0 * x[0]];
            opt.step(vec![&mut x], vec![&g]);
        }
        assert!(x[0].abs() < 0.1);
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut opt = RmsProp::new(0.1);
        let mut x = vec![1.0, 2.0];
        opt.step(vec![&mut x], vec![&[0.0, 0.0]]);
        assert_eq!(x, vec![1.0, 2.0]);
    }
}
