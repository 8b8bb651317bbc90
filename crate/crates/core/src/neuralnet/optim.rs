use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Adadelta accumulators, one entry per parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdadeltaState {
    pub sq_grad: Vec<f64>,
    pub sq_update: Vec<f64>,
}

impl AdadeltaState {
    pub fn new(n: usize) -> Self {
        Self {
            sq_grad: vec![0.0; n],
            sq_update: vec![0.0; n],
        }
    }
}

/// One Adadelta update:
///
/// ```text
/// E[g^2]  <- rho E[g^2] + (1 - rho) g^2
/// dx      <- -sqrt(E[dx^2] + eps) / sqrt(E[g^2] + eps) * g
/// E[dx^2] <- rho E[dx^2] + (1 - rho) dx^2
/// x       <- x + dx
/// ```
pub fn adadelta_step(
    params: &mut [f64],
    grads: &[f64],
    state: &mut AdadeltaState,
    rho: f64,
    eps: f64,
) -> Result<()> {
    let n = params.len();
    if grads.len() != n || state.sq_grad.len() != n || state.sq_update.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "adadelta: {n} params, {} grads, state of {}",
            grads.len(),
            state.sq_grad.len()
        )));
    }
    for i in 0..n {
        let g = grads[i];
        let eg = rho * state.sq_grad[i] + (1.0 - rho) * g * g;
        let dx = -((state.sq_update[i] + eps).sqrt() / (eg + eps).sqrt()) * g;
        state.sq_grad[i] = eg;
        state.sq_update[i] = rho * state.sq_update[i] + (1.0 - rho) * dx * dx;
        params[i] += dx;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_matches_hand_calculation() {
        let mut p = [0.0];
        let mut s = AdadeltaState::new(1);
        adadelta_step(&mut p, &[1.0], &mut s, 0.95, 1e-6).unwrap();
        assert!((s.sq_grad[0] - 0.05).abs() < 1e-15);
        let expected = -1e-3 / 0.050001f64.sqrt();
        assert!((p[0] - expected).abs() < 1e-15);
        assert!((p[0] + 4.472e-3).abs() < 1e-6);
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut p = [1.5, -2.0];
        let mut s = AdadeltaState::new(2);
        adadelta_step(&mut p, &[0.0, 0.0], &mut s, 0.95, 1e-6).unwrap();
        assert_eq!(p, [1.5, -2.0]);
    }

    #[test]
    fn odd_in_gradient() {
        let mut a = [0.0];
        let mut b = [0.0];
        let (mut sa, mut sb) = (AdadeltaState::new(1), AdadeltaState::new(1));
        for g in [0.3, -1.2, 2.0] {
            adadelta_step(&mut a, &[g], &mut sa, 0.95, 1e-6).unwrap();
            adadelta_step(&mut b, &[-g], &mut sb, 0.95, 1e-6).unwrap();
            assert_eq!(a[0], -b[0]);
        }
    }

    #[test]
    fn shape_mismatch() {
        let mut p = [0.0; 2];
        let mut s = AdadeltaState::new(2);
        assert!(adadelta_step(&mut p, &[1.0], &mut s, 0.95, 1e-6).is_err());
    }
}
