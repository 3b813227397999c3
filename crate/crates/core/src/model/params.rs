use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{Graph, Tensor, Var};

/// Parameter namespace: one per trainable module.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Namespace {
    Overcomplete,
    Undercomplete,
    Refine,
}

impl Namespace {
    pub fn of(name: &str) -> Option<Namespace> {
        match name.split('.').next() {
            Some("oc") => Some(Namespace::Overcomplete),
            Some("uc") => Some(Namespace::Undercomplete),
            Some("rm") => Some(Namespace::Refine),
            _ => None,
        }
    }
}

/// Named trainable tensors, ordered by name.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ParamSet<T> {
    tensors: BTreeMap<String, Tensor<T>>,
}

/// Graph handles for a bound [`ParamSet`].
pub struct Bound {
    vars: BTreeMap<String, Var>,
}

impl Bound {
    pub fn get(&self, name: &str) -> Result<Var> {
        self.vars
            .get(name)
            .copied()
            .ok_or_else(|| Error::InvalidArgument(format!("parameter `{name}` is not bound")))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Var)> {
        self.vars.iter()
    }
}

impl<T: Scalar> ParamSet<T> {
    pub fn new() -> Self {
        Self { tensors: BTreeMap::new() }
    }

    /// Inserts a tensor. Names must start with `oc.`, `uc.` or `rm.`.
    pub fn insert(&mut self, name: impl Into<String>, t: Tensor<T>) -> Result<()> {
        let name = name.into();
        if Namespace::of(&name).is_none() {
            return Err(Error::InvalidArgument(format!(
                "parameter `{name}` is outside the oc./uc./rm. namespaces"
            )));
        }
        self.tensors.insert(name, t);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Tensor<T>> {
        self.tensors.get(name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor<T>> {
        self.tensors.get_mut(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Tensor<T>)> {
        self.tensors.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&String, &mut Tensor<T>)> {
        self.tensors.iter_mut()
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.tensors.keys()
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    /// Parameters belonging to one namespace.
    pub fn namespace(&self, ns: Namespace) -> impl Iterator<Item = (&String, &Tensor<T>)> {
        self.tensors.iter().filter(move |(k, _)| Namespace::of(k) == Some(ns))
    }

    /// Same names and shapes, all zero.
    pub fn zeros_like(&self) -> Self {
        Self {
            tensors: self.tensors.iter().map(|(k, t)| (k.clone(), Tensor::zeros(t.shape()))).collect(),
        }
    }

    /// Inserts every tensor as a graph leaf.
    pub fn bind(&self, g: &mut Graph<T>, requires_grad: bool) -> Bound {
        Bound {
            vars: self.tensors.iter().map(|(k, t)| (k.clone(), g.leaf(t.clone(), requires_grad))).collect(),
        }
    }

    /// Collects the gradients that backward produced for bound parameters.
    pub fn grads_from(g: &Graph<T>, bound: &Bound) -> ParamSet<T> {
        let mut out = ParamSet::new();
        for (k, &v) in bound.iter() {
            if let Some(gr) = g.grad(v) {
                out.tensors.insert(k.clone(), gr.clone());
            }
        }
        out
    }

    /// `self += other` by name; names missing from `other` are left as is.
    pub fn accumulate(&mut self, other: &ParamSet<T>) {
        for (k, t) in self.tensors.iter_mut() {
            if let Some(o) = other.tensors.get(k) {
                t.add_assign(o);
            }
        }
    }

    pub fn scale(&mut self, c: T) {
        for t in self.tensors.values_mut() {
            t.data_mut().iter_mut().for_each(|v| *v *= c);
        }
    }

    /// Euclidean norm over every element of every tensor.
    pub fn global_norm(&self) -> T {
        self.tensors.values().fold(T::zero(), |acc, t| acc + t.sq_norm()).sqrt()
    }

    pub fn all_finite(&self) -> bool {
        self.tensors.values().all(|t| t.all_finite())
    }

    pub fn cast<U: Scalar>(&self) -> ParamSet<U> {
        ParamSet { tensors: self.tensors.iter().map(|(k, t)| (k.clone(), t.cast())).collect() }
    }
}

/// Total number of scalar parameters.
pub fn param_count<T: Scalar>(params: &ParamSet<T>) -> usize {
    params.iter().map(|(_, t)| t.numel()).sum()
}
