use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};
use crate::model::ParamSet;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamHyper {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        Self { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// First and second moments per parameter plus the step counter.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimState<T> {
    pub m: ParamSet<T>,
    pub v: ParamSet<T>,
    pub t: u64,
}

impl<T: Scalar> OptimState<T> {
    pub fn new(params: &ParamSet<T>) -> Self {
        Self { m: params.zeros_like(), v: params.zeros_like(), t: 0 }
    }
}

/// One bias-corrected Adam update of every parameter.
pub fn adam_step<T: Scalar>(
    params: &mut ParamSet<T>,
    grads: &ParamSet<T>,
    state: &mut OptimState<T>,
    lr: f64,
    hyper: &AdamHyper,
) -> Result<()> {
    for name in params.names() {
        let g = grads.get(name).ok_or_else(|| Error::MissingGradient(name.clone()))?;
        let p = params.get(name).expect("iterating own names");
        if g.shape() != p.shape() {
            return Err(shape_err!("gradient for `{name}` is {:?}, parameter is {:?}", g.shape(), p.shape()));
        }
        if state.m.get(name).map(|m| m.shape()) != Some(p.shape()) {
            return Err(shape_err!("optimizer state does not mirror parameter `{name}`"));
        }
    }
    state.t += 1;
    let t = state.t as i32;
    let (b1, b2) = (T::of(hyper.beta1), T::of(hyper.beta2));
    let c1 = T::of(1.0 - hyper.beta1.powi(t));
    let c2 = T::of(1.0 - hyper.beta2.powi(t));
    let (lr, eps) = (T::of(lr), T::of(hyper.eps));
    let one = T::one();
    for (name, p) in params.iter_mut() {
        let g = grads.get(name).expect("checked above").data();
        let m = state.m.get_mut(name).expect("checked above").data_mut();
        for (mi, &gi) in m.iter_mut().zip(g) {
            *mi = b1 * *mi + (one - b1) * gi;
        }
        let v = state.v.get_mut(name).expect("checked above").data_mut();
        for (vi, &gi) in v.iter_mut().zip(g) {
            *vi = b2 * *vi + (one - b2) * gi * gi;
        }
        let (m, v) = (state.m.get(name).unwrap().data(), state.v.get(name).unwrap().data());
        for ((pi, &mi), &vi) in p.data_mut().iter_mut().zip(m).zip(v) {
            let m_hat = mi / c1;
            let v_hat = vi / c2;
            *pi -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor;

    fn set(vals: &[(&str, f64)]) -> ParamSet<f64> {
        let mut p = ParamSet::new();
        for (n, v) in vals {
            p.insert(*n, Tensor::new(&[1], vec![*v]).unwrap()).unwrap();
        }
        p
    }

    #[test]
    fn first_step_value() {
        let mut p = set(&[("oc.a", 0.0)]);
        let g = set(&[("oc.a", 1.0)]);
        let mut s = OptimState::new(&p);
        adam_step(&mut p, &g, &mut s, 0.1, &AdamHyper::default()).unwrap();
        assert_eq!(p.get("oc.a").unwrap().data()[0], -0.1 / (1.0 + 1e-8));
        assert_eq!(s.t, 1);
    }

    #[test]
    fn zero_gradient_and_symmetry() {
        let mut p = set(&[("oc.a", 0.3), ("oc.b", 0.3), ("uc.c", -2.0)]);
        let g = set(&[("oc.a", 0.7), ("oc.b", 0.7), ("uc.c", 0.0)]);
        let mut s = OptimState::new(&p);
        for _ in 0..3 {
            adam_step(&mut p, &g, &mut s, 0.01, &AdamHyper::default()).unwrap();
        }
        assert_eq!(p.get("uc.c").unwrap().data()[0], -2.0);
        assert_eq!(p.get("oc.a").unwrap().data(), p.get("oc.b").unwrap().data());
    }

    #[test]
    fn missing_gradient_is_named() {
        let mut p = set(&[("oc.a", 0.0), ("rm.b", 0.0)]);
        let g = set(&[("oc.a", 1.0)]);
        let mut s = OptimState::new(&p);
        let e = adam_step(&mut p, &g, &mut s, 0.1, &AdamHyper::default()).unwrap_err();
        assert!(e.to_string().contains("rm.b"));
        assert_eq!(s.t, 0);
    }
}
