use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::ModelConfig;
use super::params::{Bound, ParamSet};
use crate::error::{shape_err, Error, Result};
use crate::image::ComplexImage;
use crate::kspace::{data_consistency_node, zero_fill, KSpaceData, Mask};
use crate::scalar::Scalar;
use crate::tensor::{Graph, Tensor, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BranchKind {
    /// Encoder upsamples, decoder pools: the receptive field stays small.
    Overcomplete,
    /// Encoder pools, decoder upsamples.
    Undercomplete,
}

impl BranchKind {
    pub fn prefix(self) -> &'static str {
        match self {
            BranchKind::Overcomplete => "oc",
            BranchKind::Undercomplete => "uc",
        }
    }
}

/// One 3x3 convolution of the network.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvSpec {
    pub name: String,
    pub cin: usize,
    pub cout: usize,
    /// Followed by ReLU. Linear convolutions get a smaller init range.
    pub relu: bool,
}

impl ConvSpec {
    fn new(name: String, cin: usize, cout: usize, relu: bool) -> Self {
        Self { name, cin, cout, relu }
    }

    fn apply<T: Scalar>(&self, g: &mut Graph<T>, p: &Bound, x: Var) -> Result<Var> {
        let w = p.get(&format!("{}.weight", self.name))?;
        let b = p.get(&format!("{}.bias", self.name))?;
        let y = g.conv2d(x, w, b)?;
        Ok(if self.relu { g.relu(y) } else { y })
    }
}

/// Recurrent convolutional branch: encoder, residual block on the hidden
/// state at bottleneck resolution, and decoder.
#[derive(Clone, Debug)]
pub struct Branch {
    kind: BranchKind,
    enc: [ConvSpec; 2],
    res: [ConvSpec; 2],
    dec: [ConvSpec; 3],
    bottleneck_channels: usize,
    residual: bool,
}

/// Builds a branch. Channel schedule: `base` at the first convolution, then
/// doubled (undercomplete) or halved (overcomplete) after the first resample.
pub fn build_branch(kind: BranchKind, cfg: &ModelConfig) -> Result<Branch> {
    cfg.validate()?;
    let c1 = cfg.base_channels;
    let c2 = match kind {
        BranchKind::Overcomplete => (c1 / 2).max(1),
        BranchKind::Undercomplete => 2 * c1,
    };
    let p = kind.prefix();
    let n = |part: &str| format!("{p}.{part}");
    Ok(Branch {
        kind,
        enc: [ConvSpec::new(n("enc.0"), 2, c1, true), ConvSpec::new(n("enc.1"), c1, c2, true)],
        res: [ConvSpec::new(n("res.0"), c2, c2, true), ConvSpec::new(n("res.1"), c2, c2, false)],
        dec: [
            ConvSpec::new(n("dec.0"), c2, c2, true),
            ConvSpec::new(n("dec.1"), c2, c1, true),
            ConvSpec::new(n("dec.out"), c1, 2, false),
        ],
        bottleneck_channels: c2,
        residual: cfg.residual,
    })
}

/// Hidden state of one branch: a `[C, H', W']` tensor at bottleneck resolution.
#[derive(Clone, Debug, PartialEq)]
pub struct HiddenState<T> {
    pub kind: BranchKind,
    pub tensor: Tensor<T>,
}

impl Branch {
    pub fn kind(&self) -> BranchKind {
        self.kind
    }

    pub fn convs(&self) -> impl Iterator<Item = &ConvSpec> {
        self.enc.iter().chain(&self.res).chain(&self.dec)
    }

    pub fn bottleneck_channels(&self) -> usize {
        self.bottleneck_channels
    }

    /// Spatial size of the hidden state for an `h x w` image.
    pub fn bottleneck_dims(&self, h: usize, w: usize) -> Result<(usize, usize)> {
        match self.kind {
            BranchKind::Overcomplete => Ok((4 * h, 4 * w)),
            BranchKind::Undercomplete => {
                if h % 4 != 0 || w % 4 != 0 {
                    return Err(shape_err!(
                        "undercomplete branch needs spatial dims divisible by 4, got {h}x{w}"
                    ));
                }
                Ok((h / 4, w / 4))
            }
        }
    }

    fn down_or_up<T: Scalar>(&self, g: &mut Graph<T>, x: Var, encoder: bool) -> Result<Var> {
        let up = matches!(
            (self.kind, encoder),
            (BranchKind::Overcomplete, true) | (BranchKind::Undercomplete, false)
        );
        if up {
            g.upsample_nearest2x2(x)
        } else {
            g.maxpool2x2(x)
        }
    }

    /// `f_enc`: 2 x [conv -> relu -> resample].
    pub fn encode<T: Scalar>(&self, g: &mut Graph<T>, p: &Bound, y: Var) -> Result<Var> {
        let mut x = y;
        for c in &self.enc {
            x = c.apply(g, p, x)?;
            x = self.down_or_up(g, x, true)?;
        }
        Ok(x)
    }

    /// `f_res`: `h + conv(relu(conv(h)))`.
    pub fn resblock<T: Scalar>(&self, g: &mut Graph<T>, p: &Bound, h: Var) -> Result<Var> {
        let a = self.res[0].apply(g, p, h)?;
        let b = self.res[1].apply(g, p, a)?;
        g.add(h, b)
    }

    /// `f_dec`: 2 x [conv -> relu -> opposite resample], then a linear conv to 2 channels.
    pub fn decode<T: Scalar>(&self, g: &mut Graph<T>, p: &Bound, b: Var) -> Result<Var> {
        let mut x = b;
        for c in &self.dec[..2] {
            x = c.apply(g, p, x)?;
            x = self.down_or_up(g, x, false)?;
        }
        self.dec[2].apply(g, p, x)
    }

    pub fn zero_hidden<T: Scalar>(&self, h: usize, w: usize) -> Result<Tensor<T>> {
        let (bh, bw) = self.bottleneck_dims(h, w)?;
        Ok(Tensor::zeros(&[self.bottleneck_channels, bh, bw]))
    }

    /// One recurrent step:
    /// `b = f_res(h) + f_enc(y)`, `h' = b`, `y' = DC(f_dec(b) [+ y])`.
    pub fn step<T: Scalar>(
        &self,
        g: &mut Graph<T>,
        p: &Bound,
        y: Var,
        h: Var,
        x: &KSpaceData<T>,
        mask: &Mask,
    ) -> Result<(Var, Var)> {
        let r = self.resblock(g, p, h)?;
        let e = self.encode(g, p, y)?;
        let b = g.add(r, e)?;
        let d = self.decode(g, p, b)?;
        let z = if self.residual { g.add(d, y)? } else { d };
        let y_next = data_consistency_node(g, z, x, mask)?;
        Ok((y_next, b))
    }

    /// Unrolls `iterations` steps from `y0` with a zero hidden state.
    pub fn iterate_node<T: Scalar>(
        &self,
        g: &mut Graph<T>,
        p: &Bound,
        y0: Var,
        x: &KSpaceData<T>,
        mask: &Mask,
        iterations: usize,
    ) -> Result<(Var, Var)> {
        if iterations < 1 {
            return Err(Error::InvalidArgument("iterations J must be at least 1".into()));
        }
        let shape = g.value(y0).shape().to_vec();
        if shape.len() != 3 || shape[0] != 2 {
            return Err(shape_err!("branch input must be [2, H, W], got {:?}", shape));
        }
        let h0 = self.zero_hidden(shape[1], shape[2])?;
        let mut h = g.constant(h0);
        let mut y = y0;
        for _ in 0..iterations {
            let (yn, hn) = self.step(g, p, y, h, x, mask)?;
            y = yn;
            h = hn;
        }
        Ok((y, h))
    }
}

/// Value-level unrolled iteration of one branch.
pub fn crnn_iterate<T: Scalar>(
    branch: &Branch,
    params: &ParamSet<T>,
    y0: &ComplexImage<T>,
    x: &KSpaceData<T>,
    mask: &Mask,
    iterations: usize,
) -> Result<(ComplexImage<T>, HiddenState<T>)> {
    let mut g = Graph::new();
    let p = params.bind(&mut g, false);
    let y = g.constant(y0.tensor().clone());
    let (yv, hv) = branch.iterate_node(&mut g, &p, y, x, mask, iterations)?;
    Ok((
        ComplexImage::from_tensor(g.value(yv).clone())?,
        HiddenState { kind: branch.kind, tensor: g.value(hv).clone() },
    ))
}

/// Fuses the channel-concatenated branch outputs: 3 x [conv -> relu], a
/// linear conv to 2 channels, plus a global residual from the second input.
#[derive(Clone, Debug)]
pub struct RefineModule {
    convs: [ConvSpec; 4],
}

impl RefineModule {
    pub fn new(cfg: &ModelConfig) -> Self {
        let c = cfg.base_channels;
        Self {
            convs: [
                ConvSpec::new("rm.0".into(), 4, c, true),
                ConvSpec::new("rm.1".into(), c, c, true),
                ConvSpec::new("rm.2".into(), c, c, true),
                ConvSpec::new("rm.3".into(), c, 2, false),
            ],
        }
    }

    pub fn convs(&self) -> impl Iterator<Item = &ConvSpec> {
        self.convs.iter()
    }

    pub fn forward_node<T: Scalar>(&self, g: &mut Graph<T>, p: &Bound, y_oc: Var, y_uc: Var) -> Result<Var> {
        if g.value(y_oc).shape() != g.value(y_uc).shape() {
            return Err(shape_err!(
                "refine module: inputs {:?} and {:?} differ",
                g.value(y_oc).shape(),
                g.value(y_uc).shape()
            ));
        }
        let mut x = g.concat_channels(y_oc, y_uc)?;
        for c in &self.convs {
            x = c.apply(g, p, x)?;
        }
        g.add(x, y_uc)
    }
}

/// Value-level refine module.
pub fn refine_module<T: Scalar>(
    rm: &RefineModule,
    params: &ParamSet<T>,
    y_oc: &ComplexImage<T>,
    y_uc: &ComplexImage<T>,
) -> Result<ComplexImage<T>> {
    let mut g = Graph::new();
    let p = params.bind(&mut g, false);
    let a = g.constant(y_oc.tensor().clone());
    let b = g.constant(y_uc.tensor().clone());
    let out = rm.forward_node(&mut g, &p, a, b)?;
    ComplexImage::from_tensor(g.value(out).clone())
}

/// The full network: overcomplete branch, undercomplete branch, refine
/// module and a final data-consistency projection. Disabled branches act as
/// the identity.
#[derive(Clone, Debug)]
pub struct Oucr {
    cfg: ModelConfig,
    oc: Option<Branch>,
    uc: Option<Branch>,
    rm: Option<RefineModule>,
}

impl Oucr {
    pub fn new(cfg: &ModelConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg: cfg.clone(),
            oc: if cfg.use_oc { Some(build_branch(BranchKind::Overcomplete, cfg)?) } else { None },
            uc: if cfg.use_uc { Some(build_branch(BranchKind::Undercomplete, cfg)?) } else { None },
            rm: cfg.use_rm.then(|| RefineModule::new(cfg)),
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    pub fn overcomplete(&self) -> Option<&Branch> {
        self.oc.as_ref()
    }

    pub fn undercomplete(&self) -> Option<&Branch> {
        self.uc.as_ref()
    }

    pub fn refine(&self) -> Option<&RefineModule> {
        self.rm.as_ref()
    }

    pub fn convs(&self) -> Vec<&ConvSpec> {
        let mut v: Vec<&ConvSpec> = Vec::new();
        if let Some(b) = &self.oc {
            v.extend(b.convs());
        }
        if let Some(b) = &self.uc {
            v.extend(b.convs());
        }
        if let Some(r) = &self.rm {
            v.extend(r.convs());
        }
        v
    }

    /// Seeded uniform fan-in initialization: bound `sqrt(6 / fan_in)` for
    /// ReLU convolutions, `sqrt(3 / fan_in)` for linear ones; zero biases.
    pub fn init_params<T: Scalar>(&self, seed: u64) -> ParamSet<T> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = ParamSet::new();
        for c in self.convs() {
            let fan_in = (c.cin * 9) as f64;
            let bound = if c.relu { (6.0 / fan_in).sqrt() } else { (3.0 / fan_in).sqrt() };
            let w = Tensor::from_fn(&[c.cout, c.cin, 3, 3], |_| T::of(rng.gen_range(-bound..bound)));
            p.insert(format!("{}.weight", c.name), w).expect("valid namespace");
            p.insert(format!("{}.bias", c.name), Tensor::zeros(&[c.cout])).expect("valid namespace");
        }
        p
    }

    /// All parameters zero: the network reduces to data consistency of its input.
    pub fn zero_params<T: Scalar>(&self) -> ParamSet<T> {
        self.init_params::<T>(0).zeros_like()
    }

    /// Builds the forward pass on `g` and returns the reconstruction node.
    pub fn forward_node<T: Scalar>(
        &self,
        g: &mut Graph<T>,
        p: &Bound,
        x: &KSpaceData<T>,
        mask: &Mask,
    ) -> Result<Var> {
        let (h, w) = mask.dims();
        if x.values.dims() != (h, w) {
            return Err(shape_err!("k-space {:?} vs mask {:?}", x.values.dims(), mask.dims()));
        }
        if h % 4 != 0 || w % 4 != 0 {
            return Err(shape_err!("spatial dims must be divisible by 4, got {h}x{w}"));
        }
        let xbar = g.constant(zero_fill(x)?.into_tensor());
        let j = self.cfg.iterations;
        let y_oc = match &self.oc {
            Some(b) => b.iterate_node(g, p, xbar, x, mask, j)?.0,
            None => xbar,
        };
        let y_uc = match &self.uc {
            Some(b) => b.iterate_node(g, p, y_oc, x, mask, j)?.0,
            None => y_oc,
        };
        match &self.rm {
            Some(rm) => {
                let r = rm.forward_node(g, p, y_oc, y_uc)?;
                data_consistency_node(g, r, x, mask)
            }
            None => Ok(y_uc),
        }
    }
}

/// Inference: reconstructs an image from undersampled k-space.
pub fn oucr_forward<T: Scalar>(
    x: &KSpaceData<T>,
    mask: &Mask,
    params: &ParamSet<T>,
    cfg: &ModelConfig,
) -> Result<ComplexImage<T>> {
    let net = Oucr::new(cfg)?;
    let mut g = Graph::new();
    let p = params.bind(&mut g, false);
    let out = net.forward_node(&mut g, &p, x, mask)?;
    ComplexImage::from_tensor(g.value(out).clone())
}
