use serde::{Deserialize, Serialize};

use super::mlp::Mlp;
use crate::error::{Error, Result};

/// Bias-corrected adaptive-moment optimizer state for one network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub step_count: u64,
}

impl Adam {
    pub fn new(learning_rate: f64, n_params: usize) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            first_moment: vec![0.0; n_params],
            second_moment: vec![0.0; n_params],
            step_count: 0,
        }
    }

    pub fn for_net(learning_rate: f64, net: &Mlp) -> Self {
        Self::new(learning_rate, net.params().len())
    }

    /// Moves `net` one step against `grad`.
    pub fn step(&mut self, net: &mut Mlp, grad: &[f64]) -> Result<()> {
        let n = net.params().len();
        if grad.len() != n || self.first_moment.len() != n {
            return Err(Error::Shape {
                expected: n,
                got: grad.len(),
            });
        }
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NumericalFault("non-finite gradient".into()));
        }
        self.step_count += 1;
        let t = self.step_count as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for (((p, g), m), v) in net
            .params_mut()
            .iter_mut()
            .zip(grad)
            .zip(self.first_moment.iter_mut())
            .zip(self.second_moment.iter_mut())
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p -= self.learning_rate * (*m / c1) / ((*v / c2).sqrt() + self.eps);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netcore::{Activation, LayerSpec};

    fn scalar(p: f64) -> Mlp {
        // a 1x1 linear layer whose weight plays the scalar parameter
        Mlp::from_params(vec![LayerSpec::new(1, 1, Activation::Linear)], vec![p, 0.0]).unwrap()
    }

    #[test]
    fn zero_grad_is_a_no_op() {
        let mut net = scalar(1.5);
        let mut opt = Adam::for_net(1e-2, &net);
        opt.step(&mut net, &[0.0, 0.0]).unwrap();
        assert_eq!(net.params(), &[1.5, 0.0]);
    }

    #[test]
    fn constant_sign_is_monotone() {
        let mut net = scalar(0.0);
        let mut opt = Adam::for_net(1e-2, &net);
        let mut last = 0.0;
        for _ in 0..100 {
            opt.step(&mut net, &[1.0, 0.0]).unwrap();
            assert!(net.params()[0] < last);
            last = net.params()[0];
        }
    }

    #[test]
    fn quadratic_converges() {
        let mut net = scalar(0.0);
        let mut opt = Adam::for_net(1e-2, &net);
        for _ in 0..5000 {
            let p = net.params()[0];
            opt.step(&mut net, &[2.0 * (p - 3.0), 0.0]).unwrap();
        }
        assert!((net.params()[0] - 3.0).abs() < 1e-3, "{}", net.params()[0]);
    }

    #[test]
    fn non_finite_gradient_faults() {
        let mut net = scalar(0.0);
        let mut opt = Adam::for_net(1e-2, &net);
        assert!(matches!(opt.step(&mut net, &[f64::NAN, 0.0]), Err(Error::NumericalFault(_))));
        assert_eq!(opt.step_count, 0);
    }
}
