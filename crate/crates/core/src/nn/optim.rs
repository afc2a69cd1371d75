use super::{Param, Scalar};
use crate::error::{Error, Result};

/// One SGD-with-momentum update, then zero the gradients.
///
/// `buf ← momentum·buf + grad`, `value ← value − lr·buf`. All gradients are
/// checked before anything is modified, so a non-finite gradient leaves every
/// parameter untouched.
pub fn sgd_momentum_step<S: Scalar>(params: &mut [&mut Param<S>], lr: f64, momentum: f64) -> Result<()> {
    for p in params.iter() {
        if !p.grad.is_finite() {
            return Err(Error::numeric(format!("non-finite gradient in `{}`", p.name)));
        }
    }
    for p in params.iter_mut() {
        let Param {
            value,
            grad,
            momentum_buf,
            ..
        } = &mut **p;
        for ((v, g), b) in value
            .data_mut()
            .iter_mut()
            .zip(grad.data())
            .zip(momentum_buf.data_mut())
        {
            let nb = momentum * b.to_f64() + g.to_f64();
            *b = S::from_f64(nb);
            *v = S::from_f64(v.to_f64() - lr * nb);
        }
        grad.fill_zero();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Tensor;

    fn param(v: f64, g: f64) -> Param<f64> {
        let mut p = Param::new("p", Tensor::full(&[2], v));
        p.grad = Tensor::full(&[2], g);
        p
    }

    #[test]
    fn plain_sgd_without_momentum() {
        let mut p = param(1.0, 0.5);
        sgd_momentum_step(&mut [&mut p], 0.1, 0.0).unwrap();
        assert_eq!(p.value.data(), &[0.95, 0.95]);
        assert_eq!(p.grad.data(), &[0.0, 0.0]);
    }

    #[test]
    fn zero_grad_is_no_op() {
        let mut p = param(1.0, 0.0);
        sgd_momentum_step(&mut [&mut p], 0.1, 0.9).unwrap();
        assert_eq!(p.value.data(), &[1.0, 1.0]);
    }

    #[test]
    fn two_steps_constant_gradient() {
        // step 1 moves lr·g, step 2 moves lr·(m·g + g)
        let (lr, m, g) = (0.06, 0.66, 0.5);
        let mut p = param(0.0, g);
        sgd_momentum_step(&mut [&mut p], lr, m).unwrap();
        p.grad = Tensor::full(&[2], g);
        sgd_momentum_step(&mut [&mut p], lr, m).unwrap();
        let expect = -lr * g * (2.0 + m);
        assert!((p.value.data()[0] - expect).abs() < 1e-15);
    }

    #[test]
    fn nan_gradient_names_param() {
        let mut a = param(1.0, 0.1);
        let mut b = param(1.0, f64::NAN);
        b.name = "head.fc1.weight".into();
        let err = sgd_momentum_step(&mut [&mut a, &mut b], 0.1, 0.0).unwrap_err();
        assert!(err.to_string().contains("head.fc1.weight"));
        assert_eq!(a.value.data(), &[1.0, 1.0]);
    }
}
