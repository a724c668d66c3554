use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::seed;
use crate::{Error, Result};

/// One-hidden-layer perceptron with rectified hidden units and a scalar
/// linear output.
///
/// `w1` is stored row-major with one row per input: the weight from input
/// `i` to hidden unit `h` sits at `w1[i * hidden + h]`. Keeping an input's
/// outgoing weights contiguous makes sparse binary inputs cheap.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub input_dim: usize,
    pub hidden: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

impl MlpParams {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        Self {
            input_dim,
            hidden,
            w1: vec![0.0; input_dim * hidden],
            b1: vec![0.0; hidden],
            w2: vec![0.0; hidden],
            b2: 0.0,
        }
    }

    /// Fan-in scaled uniform initialisation; biases start at zero.
    pub fn init(input_dim: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = seed::rng(seed);
        let mut p = Self::zeros(input_dim, hidden);
        let a1 = 1.0 / (input_dim as f64).sqrt();
        let a2 = 1.0 / (hidden as f64).sqrt();
        p.w1.iter_mut().for_each(|w| *w = rng.gen_range(-a1..a1));
        p.w2.iter_mut().for_each(|w| *w = rng.gen_range(-a2..a2));
        p
    }

    pub fn check_shapes(&self) -> Result<()> {
        if self.w1.len() != self.input_dim * self.hidden
            || self.b1.len() != self.hidden
            || self.w2.len() != self.hidden
        {
            return Err(Error::invalid(format!(
                "inconsistent parameter shapes for a {}x{} network",
                self.input_dim, self.hidden
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn input_row(&self, i: usize) -> &[f64] {
        &self.w1[i * self.hidden..(i + 1) * self.hidden]
    }

    pub fn num_params(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + 1
    }

    pub fn is_finite(&self) -> bool {
        self.b2.is_finite() && self.params().all(f64::is_finite)
    }

    fn params(&self) -> impl Iterator<Item = f64> + '_ {
        self.w1.iter().chain(&self.b1).chain(&self.w2).copied()
    }

    /// Mutable access to every parameter in a fixed order
    /// (`w1`, `b1`, `w2`, `b2`).
    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> + '_ {
        self.w1
            .iter_mut()
            .chain(self.b1.iter_mut())
            .chain(self.w2.iter_mut())
            .chain(std::iter::once(&mut self.b2))
    }

    /// `self += scale · other`.
    pub fn add_scaled(&mut self, other: &MlpParams, scale: f64) {
        for (a, b) in self.w1.iter_mut().zip(&other.w1) {
            *a += scale * b;
        }
        for (a, b) in self.b1.iter_mut().zip(&other.b1) {
            *a += scale * b;
        }
        for (a, b) in self.w2.iter_mut().zip(&other.w2) {
            *a += scale * b;
        }
        self.b2 += scale * other.b2;
    }

    /// Hidden pre-activations `W₁ᵀφ + b₁`, skipping zero inputs.
    pub fn preactivations(&self, phi: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.b1);
        for (i, &x) in phi.iter().enumerate() {
            if x != 0.0 {
                for (o, w) in out.iter_mut().zip(self.input_row(i)) {
                    *o += x * w;
                }
            }
        }
    }

    /// Output for given hidden pre-activations.
    #[inline]
    pub fn output_from_preactivations(&self, pre: &[f64]) -> f64 {
        self.b2
            + pre
                .iter()
                .zip(&self.w2)
                .map(|(&z, &w)| if z > 0.0 { z * w } else { 0.0 })
                .sum::<f64>()
    }

    pub fn forward(&self, phi: &[f64]) -> Result<f64> {
        self.check_input(phi)?;
        let mut pre = vec![0.0; self.hidden];
        self.preactivations(phi, &mut pre);
        Ok(self.output_from_preactivations(&pre))
    }

    fn check_input(&self, phi: &[f64]) -> Result<()> {
        if phi.len() != self.input_dim {
            return Err(Error::invalid(format!(
                "input of length {} for a network expecting {}",
                phi.len(),
                self.input_dim
            )));
        }
        Ok(())
    }

    /// Exact gradient of the output with respect to every parameter.
    pub fn gradient(&self, phi: &[f64]) -> Result<MlpParams> {
        self.check_input(phi)?;
        let mut grad = MlpParams::zeros(self.input_dim, self.hidden);
        self.accumulate_gradient(phi, 1.0, &mut grad);
        Ok(grad)
    }

    /// `acc += scale · ∇output(φ)`, touching only rows of nonzero inputs.
    /// Returns the output value.
    pub fn accumulate_gradient(&self, phi: &[f64], scale: f64, acc: &mut MlpParams) -> f64 {
        let mut pre = vec![0.0; self.hidden];
        self.preactivations(phi, &mut pre);
        // d out / d pre_h = w2_h on active units, 0 on rectified ones
        let mut upstream = vec![0.0; self.hidden];
        for h in 0..self.hidden {
            if pre[h] > 0.0 {
                acc.w2[h] += scale * pre[h];
                upstream[h] = scale * self.w2[h];
            }
        }
        acc.b2 += scale;
        for (b, u) in acc.b1.iter_mut().zip(&upstream) {
            *b += u;
        }
        let hidden = self.hidden;
        for (i, &x) in phi.iter().enumerate() {
            if x != 0.0 {
                let row = &mut acc.w1[i * hidden..(i + 1) * hidden];
                for (g, u) in row.iter_mut().zip(&upstream) {
                    *g += x * u;
                }
            }
        }
        self.output_from_preactivations(&pre)
    }
}

pub fn q_forward(theta: &MlpParams, phi: &[f64]) -> Result<f64> {
    theta.forward(phi)
}

pub fn q_gradient(theta: &MlpParams, phi: &[f64]) -> Result<MlpParams> {
    theta.gradient(phi)
}

/// One step of `θ ← θ + α·δ·∇Q_θ`. A non-finite result leaves `theta`
/// untouched and reports divergence.
pub fn apply_update(theta: &MlpParams, delta: f64, grad: &MlpParams, learning_rate: f64) -> Result<MlpParams> {
    let mut next = theta.clone();
    next.add_scaled(grad, learning_rate * delta);
    if !delta.is_finite() || !next.is_finite() {
        return Err(Error::TrainingDiverged {
            episodes: 0,
            last_finite: Box::new(theta.clone()),
        });
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_network_outputs_zero() {
        let theta = MlpParams::zeros(5, 4);
        assert_eq!(q_forward(&theta, &[1.0, 0.0, 1.0, 0.5, 0.2]).unwrap(), 0.0);
    }

    #[test]
    fn identity_like_unit() {
        let mut theta = MlpParams::zeros(3, 1);
        theta.w1[0] = 1.0;
        theta.w2[0] = 1.0;
        assert_relative_eq!(q_forward(&theta, &[0.7, 0.0, 0.0]).unwrap(), 0.7);
    }

    #[test]
    fn rectifier_zeroes_negative_units() {
        let mut theta = MlpParams::zeros(2, 1);
        theta.w1[0] = -1.0;
        theta.w2[0] = 3.0;
        theta.b2 = 0.25;
        assert_eq!(q_forward(&theta, &[1.0, 0.0]).unwrap(), 0.25);
        let g = q_gradient(&theta, &[1.0, 0.0]).unwrap();
        assert_eq!(g.w1[0], 0.0);
        assert_eq!(g.b1[0], 0.0);
    }

    #[test]
    fn zero_input_gradient() {
        let theta = MlpParams::init(6, 5, 3);
        let g = q_gradient(&theta, &[0.0; 6]).unwrap();
        assert!(g.w1.iter().all(|&x| x == 0.0));
        assert_eq!(g.b2, 1.0);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let theta = MlpParams::zeros(4, 2);
        assert!(matches!(q_forward(&theta, &[1.0; 3]), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn update_rule_arithmetic() {
        let mut theta = MlpParams::zeros(1, 1);
        theta.b2 = 1.0;
        let mut grad = MlpParams::zeros(1, 1);
        grad.b2 = 3.0;
        let next = apply_update(&theta, 2.0, &grad, 0.1).unwrap();
        assert_relative_eq!(next.b2, 1.6, epsilon = 1e-12);
        assert_eq!(apply_update(&theta, 0.0, &grad, 0.1).unwrap(), theta);
        assert!(matches!(
            apply_update(&theta, f64::NAN, &grad, 0.1),
            Err(Error::TrainingDiverged { .. })
        ));
    }
}
