//! The three coordinate networks and their initialization.

use std::f64::consts::TAU;

use super::mlp::Mlp;
use super::spec::{Architecture, ModelKind, ModelSpec};
use crate::nn::{Activation, DenseLayer, Rng, SparseHeadLayer, Tensor};
use crate::{Error, Result};

/// Shared ReLU body `ψ` plus sparse rendering heads `τ_{l,k}`.
#[derive(Clone, Debug)]
pub struct MultiHeadModel {
    pub body: Mlp,
    pub heads: SparseHeadLayer,
}

impl MultiHeadModel {
    /// Body layers get `U(±sqrt(1/fan_in))` for weights and biases, heads
    /// `U(±sqrt(1/alpha))`. Draw order: body layers first to last (weights
    /// then biases), then the head layer.
    fn build(hidden: &[usize], heads: usize, alpha: usize, rng: &mut Rng) -> Result<Self> {
        let body = relu_stack(2, hidden, rng)?;
        let width = body.out_width();
        let heads = SparseHeadLayer::random(heads, width, alpha, (1.0 / alpha as f64).sqrt(), rng)?;
        Ok(MultiHeadModel { body, heads })
    }

    fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        let z = self.body.forward(x)?;
        self.heads.forward(&z)
    }

    fn infer(&self, x: &Tensor) -> Result<Tensor> {
        self.heads.infer(&self.body.infer(x)?)
    }

    fn backward(&mut self, grad: &Tensor) -> Result<()> {
        let dz = self.heads.backward(grad)?;
        self.body.backward(&dz)?;
        Ok(())
    }
}

fn relu_stack(input: usize, hidden: &[usize], rng: &mut Rng) -> Result<Mlp> {
    let mut layers = Vec::with_capacity(hidden.len());
    let mut fan_in = input;
    for &width in hidden {
        let bound = (1.0 / fan_in as f64).sqrt();
        layers.push(DenseLayer::uniform(
            fan_in,
            width,
            bound,
            bound,
            Activation::Relu,
            rng,
        )?);
        fan_in = width;
    }
    Ok(Mlp::new(layers))
}

/// SIREN initialization: first layer weights `U(±1/in)`, later layers
/// `U(±sqrt(6/in)/ω₀)`; biases `U(±1/sqrt(in))`. Every hidden layer applies
/// `sin(ω₀ z)`; the output layer is linear.
fn siren_stack(hidden: &[usize], omega0: f64, rng: &mut Rng) -> Result<Mlp> {
    let mut layers = Vec::with_capacity(hidden.len() + 1);
    let mut fan_in = 2;
    for (i, &width) in hidden.iter().enumerate() {
        let w_bound = if i == 0 {
            1.0 / fan_in as f64
        } else {
            (6.0 / fan_in as f64).sqrt() / omega0
        };
        let b_bound = 1.0 / (fan_in as f64).sqrt();
        layers.push(DenseLayer::uniform(
            fan_in,
            width,
            w_bound,
            b_bound,
            Activation::Sine { omega: omega0 },
            rng,
        )?);
        fan_in = width;
    }
    let w_bound = (6.0 / fan_in as f64).sqrt() / omega0;
    let b_bound = 1.0 / (fan_in as f64).sqrt();
    layers.push(DenseLayer::uniform(
        fan_in,
        1,
        w_bound,
        b_bound,
        Activation::Identity,
        rng,
    )?);
    Ok(Mlp::new(layers))
}

/// Fixed encoding `γ(v) = [cos(2π B v); sin(2π B v)]` with `B ~ N(0, σ²)`,
/// followed by a ReLU MLP with a linear scalar output.
#[derive(Clone, Debug)]
pub struct FourierFeatureModel {
    /// `features × 2`, not trained.
    pub projection: Tensor,
    pub mlp: Mlp,
}

impl FourierFeatureModel {
    fn build(hidden: &[usize], features: usize, sigma: f64, rng: &mut Rng) -> Result<Self> {
        let values = (0..features * 2).map(|_| sigma * rng.normal()).collect();
        let projection = Tensor::from_vec(features, 2, values)?;
        let mut layers = relu_stack(2 * features, hidden, rng)?.into_layers();
        let fan_in = layers.last().map_or(2 * features, DenseLayer::out_width);
        let bound = (1.0 / fan_in as f64).sqrt();
        layers.push(DenseLayer::uniform(
            fan_in,
            1,
            bound,
            bound,
            Activation::Identity,
            rng,
        )?);
        Ok(FourierFeatureModel {
            projection,
            mlp: Mlp::new(layers),
        })
    }

    pub fn encode(&self, x: &Tensor) -> Result<Tensor> {
        if x.rows() != 2 {
            return Err(Error::shape(
                "FourierFeatureModel::encode",
                "2 rows",
                x.rows(),
            ));
        }
        let (features, batch) = (self.projection.rows(), x.cols());
        let mut out = vec![0.0; 2 * features * batch];
        let (cos_half, sin_half) = out.split_at_mut(features * batch);
        for f in 0..features {
            let (b0, b1) = (self.projection.get(f, 0), self.projection.get(f, 1));
            for b in 0..batch {
                let phase = TAU * (b0 * x.get(0, b) + b1 * x.get(1, b));
                let (s, c) = phase.sin_cos();
                cos_half[f * batch + b] = c;
                sin_half[f * batch + b] = s;
            }
        }
        Tensor::from_vec(2 * features, batch, out)
    }
}

/// A built network of any supported kind, together with its spec.
#[derive(Clone, Debug)]
pub struct Model {
    spec: ModelSpec,
    net: Network,
}

#[derive(Clone, Debug)]
pub enum Network {
    MultiHead(MultiHeadModel),
    Siren(Mlp),
    FourierFeature(FourierFeatureModel),
}

impl Model {
    /// Builds and initializes a network; all randomness comes from `spec.seed`.
    pub fn build(spec: &ModelSpec) -> Result<Model> {
        spec.validate()?;
        let mut rng = Rng::new(spec.seed);
        let net =
            match spec.architecture {
                Architecture::MultiHead { heads, alpha } => Network::MultiHead(
                    MultiHeadModel::build(&spec.hidden, heads.count(), alpha, &mut rng)?,
                ),
                Architecture::Siren { omega0 } => {
                    Network::Siren(siren_stack(&spec.hidden, omega0, &mut rng)?)
                }
                Architecture::FourierFeature { features, sigma } => Network::FourierFeature(
                    FourierFeatureModel::build(&spec.hidden, features, sigma, &mut rng)?,
                ),
            };
        Ok(Model {
            spec: spec.clone(),
            net,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn kind(&self) -> ModelKind {
        self.spec.kind()
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn network_mut(&mut self) -> &mut Network {
        &mut self.net
    }

    /// Outputs per forward pass (the head count for the multi-head model).
    pub fn output_count(&self) -> usize {
        self.spec.head_grid().count()
    }

    /// `2 × B` coordinates to `outputs × B` values, caching for backward.
    pub fn forward(&mut self, coords: &Tensor) -> Result<Tensor> {
        match &mut self.net {
            Network::MultiHead(m) => m.forward(coords),
            Network::Siren(mlp) => mlp.forward(coords),
            Network::FourierFeature(ff) => {
                let enc = ff.encode(coords)?;
                ff.mlp.forward(&enc)
            }
        }
    }

    pub fn infer(&self, coords: &Tensor) -> Result<Tensor> {
        match &self.net {
            Network::MultiHead(m) => m.infer(coords),
            Network::Siren(mlp) => mlp.infer(coords),
            Network::FourierFeature(ff) => ff.mlp.infer(&ff.encode(coords)?),
        }
    }

    /// Accumulates parameter gradients for the preceding forward pass.
    pub fn backward(&mut self, grad: &Tensor) -> Result<()> {
        match &mut self.net {
            Network::MultiHead(m) => m.backward(grad),
            Network::Siren(mlp) => mlp.backward(grad).map(|_| ()),
            Network::FourierFeature(ff) => ff.mlp.backward(grad).map(|_| ()),
        }
    }

    /// Trainable tensors in a fixed order: layers input to output, weight then bias.
    pub fn params(&self) -> Vec<&Tensor> {
        match &self.net {
            Network::MultiHead(m) => {
                let mut p = m.body.params();
                p.extend([m.heads.weight(), m.heads.bias()]);
                p
            }
            Network::Siren(mlp) => mlp.params(),
            Network::FourierFeature(ff) => ff.mlp.params(),
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        match &mut self.net {
            Network::MultiHead(m) => {
                let mut p = m.body.params_mut();
                p.extend(m.heads.params_mut());
                p
            }
            Network::Siren(mlp) => mlp.params_mut(),
            Network::FourierFeature(ff) => ff.mlp.params_mut(),
        }
    }

    pub fn zero_grad(&mut self) {
        self.params_mut().into_iter().for_each(Tensor::zero_grad);
    }

    /// Trainable parameters counted from the allocated tensors.
    pub fn param_count(&self) -> usize {
        self.params().iter().map(|t| t.len()).sum()
    }

    /// Fixed (non-trainable) tensors that are still part of the model state.
    pub fn fixed_tensors(&self) -> Vec<&Tensor> {
        match &self.net {
            Network::FourierFeature(ff) => vec![&ff.projection],
            _ => Vec::new(),
        }
    }

    pub(crate) fn fixed_tensors_mut(&mut self) -> Vec<&mut Tensor> {
        match &mut self.net {
            Network::FourierFeature(ff) => vec![&mut ff.projection],
            _ => Vec::new(),
        }
    }

    pub fn head_indices(&self) -> Option<&[usize]> {
        match &self.net {
            Network::MultiHead(m) => Some(m.heads.indices()),
            _ => None,
        }
    }

    pub(crate) fn replace_head_indices(&mut self, indices: Vec<usize>) -> Result<()> {
        match &mut self.net {
            Network::MultiHead(m) => {
                let heads = &m.heads;
                m.heads = SparseHeadLayer::new(
                    heads.body_width(),
                    indices,
                    heads.weight().clone(),
                    heads.bias().clone(),
                )?;
                Ok(())
            }
            _ => Err(Error::Checkpoint(
                "index table given for a model without heads".into(),
            )),
        }
    }
}
