use super::fft::FftCache;
use super::{conv, same_shape, Tensor};
use crate::error::{shape_err, Error, Result};
use crate::scalar::Scalar;

/// Handle to a node of a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

enum Op<T> {
    Leaf,
    Conv2d { input: Var, weight: Var, bias: Var },
    MaxPool { input: Var, argmax: Vec<u32> },
    Upsample { input: Var },
    Relu { input: Var },
    Add { a: Var, b: Var },
    Mul { a: Var, b: Var },
    Scale { input: Var, factor: T },
    Concat { a: Var, b: Var },
    Fft { input: Var, inverse: bool },
    MaskMul { input: Var, mask: Vec<T> },
    Magnitude { input: Var },
    L1 { pred: Var, target: Var },
    Sum { input: Var },
    Pick { input: Var, index: usize },
}

struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
    requires_grad: bool,
    grad: Option<Tensor<T>>,
}

/// Reverse-mode differentiation tape.
///
/// Nodes are appended in evaluation order, so node indices are a topological
/// order and backward is a single reverse sweep. A graph is single-use: one
/// call to [`Graph::backward`] per graph.
pub struct Graph<T: Scalar> {
    nodes: Vec<Node<T>>,
    fft: FftCache<T>,
    backward_done: bool,
}

impl<T: Scalar> Default for Graph<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Graph<T> {
    pub fn new() -> Self {
        Self { nodes: Vec::new(), fft: FftCache::default(), backward_done: false }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>, requires_grad: bool) -> Var {
        self.nodes.push(Node { value, op, requires_grad, grad: None });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    /// Inserts a leaf. Leaves with `requires_grad` receive a gradient on backward.
    pub fn leaf(&mut self, value: Tensor<T>, requires_grad: bool) -> Var {
        self.push(value, Op::Leaf, requires_grad)
    }

    pub fn param(&mut self, value: Tensor<T>) -> Var {
        self.leaf(value, true)
    }

    pub fn constant(&mut self, value: Tensor<T>) -> Var {
        self.leaf(value, false)
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    pub fn grad(&self, v: Var) -> Option<&Tensor<T>> {
        self.nodes[v.0].grad.as_ref()
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// 3x3 convolution, stride 1, zero padding 1.
    pub fn conv2d(&mut self, input: Var, weight: Var, bias: Var) -> Result<Var> {
        let x = self.value(input);
        let (b, cin, h, w) = x.image_dims()?;
        let wt = self.value(weight);
        let cout = match wt.shape() {
            [co, ci, 3, 3] if *ci == cin => *co,
            s => {
                return Err(shape_err!(
                    "conv2d: weight {:?} incompatible with input {:?} (need [C_out, {cin}, 3, 3])",
                    s,
                    x.shape()
                ))
            }
        };
        if self.value(bias).shape() != [cout] {
            return Err(shape_err!(
                "conv2d: bias {:?} does not match C_out = {cout}",
                self.value(bias).shape()
            ));
        }
        let mut shape = x.shape().to_vec();
        let nd = shape.len();
        shape[nd - 3] = cout;
        let mut out = Tensor::zeros(&shape);
        let (ihw, ohw) = (cin * h * w, cout * h * w);
        for n in 0..b {
            conv::forward(
                &x.data()[n * ihw..(n + 1) * ihw],
                cin,
                h,
                w,
                wt.data(),
                self.value(bias).data(),
                cout,
                &mut out.data_mut()[n * ohw..(n + 1) * ohw],
            );
        }
        let rg = self.rg(&[input, weight, bias]);
        Ok(self.push(out, Op::Conv2d { input, weight, bias }, rg))
    }

    pub fn maxpool2x2(&mut self, input: Var) -> Result<Var> {
        let x = self.value(input);
        let (b, c, h, w) = x.image_dims()?;
        if h % 2 != 0 || w % 2 != 0 {
            return Err(shape_err!("maxpool2x2: spatial dims {h}x{w} must be even"));
        }
        let mut shape = x.shape().to_vec();
        let nd = shape.len();
        shape[nd - 2] = h / 2;
        shape[nd - 1] = w / 2;
        let mut out = Tensor::zeros(&shape);
        let (ihw, ohw) = (h * w, h * w / 4);
        let mut argmax = vec![0u32; b * c * ohw];
        for p in 0..b * c {
            conv::maxpool_plane(
                &x.data()[p * ihw..(p + 1) * ihw],
                h,
                w,
                &mut out.data_mut()[p * ohw..(p + 1) * ohw],
                &mut argmax[p * ohw..(p + 1) * ohw],
            );
        }
        let rg = self.rg(&[input]);
        Ok(self.push(out, Op::MaxPool { input, argmax }, rg))
    }

    pub fn upsample_nearest2x2(&mut self, input: Var) -> Result<Var> {
        let x = self.value(input);
        let (b, c, h, w) = x.image_dims()?;
        let mut shape = x.shape().to_vec();
        let nd = shape.len();
        shape[nd - 2] = 2 * h;
        shape[nd - 1] = 2 * w;
        let mut out = Tensor::zeros(&shape);
        let (ihw, ohw) = (h * w, 4 * h * w);
        for p in 0..b * c {
            conv::upsample_plane(
                &x.data()[p * ihw..(p + 1) * ihw],
                h,
                w,
                &mut out.data_mut()[p * ohw..(p + 1) * ohw],
            );
        }
        let rg = self.rg(&[input]);
        Ok(self.push(out, Op::Upsample { input }, rg))
    }

    pub fn relu(&mut self, input: Var) -> Var {
        let out = self.value(input).map(|v| if v > T::zero() { v } else if v.is_nan() { v } else { T::zero() });
        let rg = self.rg(&[input]);
        self.push(out, Op::Relu { input }, rg)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (x, y) = (self.value(a), self.value(b));
        same_shape(x, y, "add")?;
        let data = x.data().iter().zip(y.data()).map(|(&p, &q)| p + q).collect();
        let out = Tensor::new(x.shape(), data)?;
        let rg = self.rg(&[a, b]);
        Ok(self.push(out, Op::Add { a, b }, rg))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (x, y) = (self.value(a), self.value(b));
        same_shape(x, y, "mul")?;
        let data = x.data().iter().zip(y.data()).map(|(&p, &q)| p * q).collect();
        let out = Tensor::new(x.shape(), data)?;
        let rg = self.rg(&[a, b]);
        Ok(self.push(out, Op::Mul { a, b }, rg))
    }

    pub fn scale(&mut self, input: Var, factor: T) -> Var {
        let out = self.value(input).map(|v| v * factor);
        let rg = self.rg(&[input]);
        self.push(out, Op::Scale { input, factor }, rg)
    }

    /// Stacks `a` then `b` along the channel axis.
    pub fn concat_channels(&mut self, a: Var, b: Var) -> Result<Var> {
        let (x, y) = (self.value(a), self.value(b));
        let (ba, ca, h, w) = x.image_dims()?;
        let (bb, cb, hb, wb) = y.image_dims()?;
        if x.shape().len() != y.shape().len() || ba != bb || h != hb || w != wb {
            return Err(shape_err!(
                "concat_channels: {:?} and {:?} differ outside the channel axis",
                x.shape(),
                y.shape()
            ));
        }
        let mut shape = x.shape().to_vec();
        let nd = shape.len();
        shape[nd - 3] = ca + cb;
        let hw = h * w;
        let mut data = Vec::with_capacity(ba * (ca + cb) * hw);
        for n in 0..ba {
            data.extend_from_slice(&x.data()[n * ca * hw..(n + 1) * ca * hw]);
            data.extend_from_slice(&y.data()[n * cb * hw..(n + 1) * cb * hw]);
        }
        let out = Tensor::new(&shape, data)?;
        let rg = self.rg(&[a, b]);
        Ok(self.push(out, Op::Concat { a, b }, rg))
    }

    fn fft_apply(&mut self, x: &Tensor<T>, inverse: bool) -> Result<Tensor<T>> {
        let (b, c, h, w) = x.image_dims()?;
        if c != 2 {
            return Err(shape_err!(
                "fft2c: expected 2 channels (real, imaginary), got shape {:?}",
                x.shape()
            ));
        }
        let plan = self.fft.plan(h, w)?;
        let mut out = Tensor::zeros(x.shape());
        let n = 2 * h * w;
        for k in 0..b {
            plan.apply(&x.data()[k * n..(k + 1) * n], &mut out.data_mut()[k * n..(k + 1) * n], inverse);
        }
        Ok(out)
    }

    /// Centered orthonormal 2-D DFT of a 2-channel (re, im) image.
    pub fn fft2c(&mut self, input: Var) -> Result<Var> {
        let x = self.value(input).clone();
        let out = self.fft_apply(&x, false)?;
        let rg = self.rg(&[input]);
        Ok(self.push(out, Op::Fft { input, inverse: false }, rg))
    }

    pub fn ifft2c(&mut self, input: Var) -> Result<Var> {
        let x = self.value(input).clone();
        let out = self.fft_apply(&x, true)?;
        let rg = self.rg(&[input]);
        Ok(self.push(out, Op::Fft { input, inverse: true }, rg))
    }

    /// Multiplies every channel by an `H x W` spatial mask.
    pub fn mask_mul(&mut self, input: Var, mask: &[T]) -> Result<Var> {
        let x = self.value(input);
        let (_, _, h, w) = x.image_dims()?;
        if mask.len() != h * w {
            return Err(shape_err!("mask_mul: mask has {} entries, image is {h}x{w}", mask.len()));
        }
        let hw = h * w;
        let data = x.data().iter().enumerate().map(|(i, &v)| v * mask[i % hw]).collect();
        let out = Tensor::new(x.shape(), data)?;
        let rg = self.rg(&[input]);
        Ok(self.push(out, Op::MaskMul { input, mask: mask.to_vec() }, rg))
    }

    /// `|re + i im|` per pixel: `[.., 2, H, W] -> [.., 1, H, W]`.
    pub fn magnitude(&mut self, input: Var) -> Result<Var> {
        let x = self.value(input);
        let (b, c, h, w) = x.image_dims()?;
        if c != 2 {
            return Err(shape_err!("magnitude: expected 2 channels, got {:?}", x.shape()));
        }
        let hw = h * w;
        let mut shape = x.shape().to_vec();
        let nd = shape.len();
        shape[nd - 3] = 1;
        let mut data = Vec::with_capacity(b * hw);
        for k in 0..b {
            let base = 2 * hw * k;
            for i in 0..hw {
                let (re, im) = (x.data()[base + i], x.data()[base + hw + i]);
                data.push((re * re + im * im).sqrt());
            }
        }
        let out = Tensor::new(&shape, data)?;
        let rg = self.rg(&[input]);
        Ok(self.push(out, Op::Magnitude { input }, rg))
    }

    /// Mean absolute difference; the subgradient at zero is zero.
    pub fn l1_loss(&mut self, pred: Var, target: Var) -> Result<Var> {
        let (p, t) = (self.value(pred), self.value(target));
        same_shape(p, t, "l1_loss")?;
        let n = T::of(p.numel() as f64);
        let s = p.data().iter().zip(t.data()).fold(T::zero(), |acc, (&a, &b)| acc + (a - b).abs());
        let rg = self.rg(&[pred, target]);
        Ok(self.push(Tensor::scalar(s / n), Op::L1 { pred, target }, rg))
    }

    pub fn sum(&mut self, input: Var) -> Var {
        let s = self.value(input).sum();
        let rg = self.rg(&[input]);
        self.push(Tensor::scalar(s), Op::Sum { input }, rg)
    }

    /// Selects a single element (flat index) as a scalar.
    pub fn pick(&mut self, input: Var, index: usize) -> Result<Var> {
        let x = self.value(input);
        if index >= x.numel() {
            return Err(shape_err!("pick: index {index} out of range for {:?}", x.shape()));
        }
        let v = x.data()[index];
        let rg = self.rg(&[input]);
        Ok(self.push(Tensor::scalar(v), Op::Pick { input, index }, rg))
    }

    /// Reverse sweep from a scalar node. Errors on a second call.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.backward_done {
            return Err(Error::Graph("backward already ran on this graph".into()));
        }
        let node = &self.nodes[loss.0];
        if node.value.numel() != 1 {
            return Err(Error::Graph(format!(
                "backward needs a scalar loss, got shape {:?}",
                node.value.shape()
            )));
        }
        if !node.requires_grad {
            return Err(Error::Graph("loss is detached: no input requires a gradient".into()));
        }
        self.backward_done = true;
        let shape = node.value.shape().to_vec();
        self.nodes[loss.0].grad = Some(Tensor::full(&shape, T::one()));

        for i in (0..=loss.0).rev() {
            if !self.nodes[i].requires_grad || self.nodes[i].grad.is_none() {
                continue;
            }
            if matches!(self.nodes[i].op, Op::Leaf) {
                continue;
            }
            let g = self.nodes[i].grad.take().unwrap();
            let contribs = self.input_grads(i, &g)?;
            self.nodes[i].grad = Some(g);
            for (v, cg) in contribs {
                let n = &mut self.nodes[v.0];
                if !n.requires_grad {
                    continue;
                }
                match &mut n.grad {
                    Some(acc) => acc.add_assign(&cg),
                    None => n.grad = Some(cg),
                }
            }
        }
        Ok(())
    }

    fn input_grads(&mut self, i: usize, g: &Tensor<T>) -> Result<Vec<(Var, Tensor<T>)>> {
        if let Op::Fft { input, inverse } = &self.nodes[i].op {
            // unitary: the adjoint is the opposite-direction transform
            let (input, inverse) = (*input, *inverse);
            let gi = self.fft_apply(g, !inverse)?;
            return Ok(vec![(input, gi)]);
        }
        let node = &self.nodes[i];
        let mut out = Vec::new();
        match &node.op {
            Op::Leaf => {}
            Op::Conv2d { input, weight, bias } => {
                let (input, weight, bias) = (*input, *weight, *bias);
                let x = self.value(input);
                let wt = self.value(weight);
                let (b, cin, h, w) = x.image_dims()?;
                let cout = wt.shape()[0];
                let mut gi = self.requires_grad(input).then(|| Tensor::zeros(x.shape()));
                let mut gw = self.requires_grad(weight).then(|| Tensor::zeros(wt.shape()));
                let mut gb = self.requires_grad(bias).then(|| Tensor::zeros(&[cout]));
                let (ihw, ohw) = (cin * h * w, cout * h * w);
                for n in 0..b {
                    conv::backward(
                        &x.data()[n * ihw..(n + 1) * ihw],
                        cin,
                        h,
                        w,
                        wt.data(),
                        cout,
                        &g.data()[n * ohw..(n + 1) * ohw],
                        gi.as_mut().map(|t| &mut t.data_mut()[n * ihw..(n + 1) * ihw]),
                        gw.as_mut().map(|t| t.data_mut()),
                        gb.as_mut().map(|t| t.data_mut()),
                    );
                }
                out.extend(gi.map(|t| (input, t)));
                out.extend(gw.map(|t| (weight, t)));
                out.extend(gb.map(|t| (bias, t)));
            }
            Op::MaxPool { input, argmax } => {
                let x = self.value(*input);
                let (_, _, h, w) = x.image_dims()?;
                let (ihw, ohw) = (h * w, h * w / 4);
                let mut gi = Tensor::zeros(x.shape());
                for (k, (&gv, &a)) in g.data().iter().zip(argmax).enumerate() {
                    let plane = k / ohw;
                    gi.data_mut()[plane * ihw + a as usize] += gv;
                }
                out.push((*input, gi));
            }
            Op::Upsample { input } => {
                let x = self.value(*input);
                let (b, c, h, w) = x.image_dims()?;
                let (ihw, ohw) = (h * w, 4 * h * w);
                let mut gi = Tensor::zeros(x.shape());
                for p in 0..b * c {
                    conv::upsample_plane_backward(
                        &g.data()[p * ohw..(p + 1) * ohw],
                        h,
                        w,
                        &mut gi.data_mut()[p * ihw..(p + 1) * ihw],
                    );
                }
                out.push((*input, gi));
            }
            Op::Relu { input } => {
                let x = self.value(*input);
                let data = x
                    .data()
                    .iter()
                    .zip(g.data())
                    .map(|(&v, &gv)| if v > T::zero() { gv } else { T::zero() })
                    .collect();
                out.push((*input, Tensor::new(x.shape(), data)?));
            }
            Op::Add { a, b } => {
                out.push((*a, g.clone()));
                out.push((*b, g.clone()));
            }
            Op::Mul { a, b } => {
                let (x, y) = (self.value(*a), self.value(*b));
                let ga = y.data().iter().zip(g.data()).map(|(&q, &gv)| q * gv).collect();
                let gb = x.data().iter().zip(g.data()).map(|(&p, &gv)| p * gv).collect();
                out.push((*a, Tensor::new(x.shape(), ga)?));
                out.push((*b, Tensor::new(y.shape(), gb)?));
            }
            Op::Scale { input, factor } => {
                let f = *factor;
                out.push((*input, g.map(|v| v * f)));
            }
            Op::Concat { a, b } => {
                let (x, y) = (self.value(*a), self.value(*b));
                let (nb, ca, h, w) = x.image_dims()?;
                let cb = y.image_dims()?.1;
                let hw = h * w;
                let mut ga = Vec::with_capacity(x.numel());
                let mut gb = Vec::with_capacity(y.numel());
                for n in 0..nb {
                    let base = n * (ca + cb) * hw;
                    ga.extend_from_slice(&g.data()[base..base + ca * hw]);
                    gb.extend_from_slice(&g.data()[base + ca * hw..base + (ca + cb) * hw]);
                }
                out.push((*a, Tensor::new(x.shape(), ga)?));
                out.push((*b, Tensor::new(y.shape(), gb)?));
            }
            Op::Fft { .. } => unreachable!("handled above"),
            Op::MaskMul { input, mask } => {
                let hw = mask.len();
                let data = g.data().iter().enumerate().map(|(k, &v)| v * mask[k % hw]).collect();
                out.push((*input, Tensor::new(g.shape(), data)?));
            }
            Op::Magnitude { input } => {
                let x = self.value(*input);
                let (b, _, h, w) = x.image_dims()?;
                let hw = h * w;
                let mut gi = Tensor::zeros(x.shape());
                for k in 0..b {
                    for p in 0..hw {
                        let (re, im) = (x.data()[2 * hw * k + p], x.data()[2 * hw * k + hw + p]);
                        let m = node.value.data()[hw * k + p];
                        if m > T::zero() {
                            let gv = g.data()[hw * k + p];
                            gi.data_mut()[2 * hw * k + p] = gv * re / m;
                            gi.data_mut()[2 * hw * k + hw + p] = gv * im / m;
                        }
                    }
                }
                out.push((*input, gi));
            }
            Op::L1 { pred, target } => {
                let (p, t) = (self.value(*pred), self.value(*target));
                let scale = g.data()[0] / T::of(p.numel() as f64);
                let sign = |d: T| {
                    if d > T::zero() {
                        T::one()
                    } else if d < T::zero() {
                        -T::one()
                    } else {
                        T::zero()
                    }
                };
                let gp: Vec<T> = p.data().iter().zip(t.data()).map(|(&a, &b)| sign(a - b) * scale).collect();
                let gt: Vec<T> = gp.iter().map(|&v| -v).collect();
                out.push((*pred, Tensor::new(p.shape(), gp)?));
                out.push((*target, Tensor::new(t.shape(), gt)?));
            }
            Op::Sum { input } => {
                let x = self.value(*input);
                out.push((*input, Tensor::full(x.shape(), g.data()[0])));
            }
            Op::Pick { input, index } => {
                let x = self.value(*input);
                let mut gi = Tensor::zeros(x.shape());
                gi.data_mut()[*index] = g.data()[0];
                out.push((*input, gi));
            }
        }
        // only inputs that participate in differentiation
        out.retain(|(v, _)| self.nodes[v.0].requires_grad);
        Ok(out)
    }
}
