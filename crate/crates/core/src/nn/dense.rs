use super::linalg::gemm;
use super::{ensure_finite, init_uniform, Activation, Rng, Tensor};
use crate::{Error, Result};

/// Fully connected layer computing `act(W x + b)` column by column.
#[derive(Clone, Debug)]
pub struct DenseLayer {
    weight: Tensor,
    bias: Tensor,
    activation: Activation,
    cache: Option<DenseCache>,
}

#[derive(Clone, Debug)]
struct DenseCache {
    input: Vec<f64>,
    pre: Vec<f64>,
    batch: usize,
}

impl DenseLayer {
    /// `weight` is `out × in`, `bias` is `out × 1`.
    pub fn new(weight: Tensor, bias: Tensor, activation: Activation) -> Result<Self> {
        bias.expect_shape("DenseLayer::new (bias)", weight.rows(), 1)?;
        Ok(DenseLayer {
            weight,
            bias,
            activation,
            cache: None,
        })
    }

    /// Weights and biases drawn from `U[-w, w)` and `U[-b, b)`, weights first.
    pub fn uniform(
        in_width: usize,
        out_width: usize,
        weight_bound: f64,
        bias_bound: f64,
        activation: Activation,
        rng: &mut Rng,
    ) -> Result<Self> {
        let weight = init_uniform(out_width, in_width, -weight_bound, weight_bound, rng)?;
        let bias = init_uniform(out_width, 1, -bias_bound, bias_bound, rng)?;
        DenseLayer::new(weight, bias, activation)
    }

    pub fn in_width(&self) -> usize {
        self.weight.cols()
    }

    pub fn out_width(&self) -> usize {
        self.weight.rows()
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn weight(&self) -> &Tensor {
        &self.weight
    }

    pub fn bias(&self) -> &Tensor {
        &self.bias
    }

    pub fn weight_mut(&mut self) -> &mut Tensor {
        &mut self.weight
    }

    pub fn bias_mut(&mut self) -> &mut Tensor {
        &mut self.bias
    }

    pub fn params_mut(&mut self) -> [&mut Tensor; 2] {
        [&mut self.weight, &mut self.bias]
    }

    pub fn param_count(&self) -> usize {
        self.weight.len() + self.bias.len()
    }

    fn affine(&self, x: &Tensor, op: &'static str) -> Result<Vec<f64>> {
        if x.rows() != self.in_width() {
            return Err(Error::shape(
                op,
                format!("{} input rows", self.in_width()),
                format!("{} input rows", x.rows()),
            ));
        }
        let batch = x.cols();
        let out = self.out_width();
        let mut pre = Vec::with_capacity(out * batch);
        for &b in self.bias.values() {
            pre.extend(std::iter::repeat_n(b, batch));
        }
        gemm(
            out,
            self.in_width(),
            batch,
            self.weight.values(),
            false,
            x.values(),
            false,
            1.0,
            &mut pre,
        );
        Ok(pre)
    }

    /// Forward pass that caches the input and pre-activation for [`backward`](Self::backward).
    pub fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        let pre = self.affine(x, "DenseLayer::forward")?;
        let act = self.activation;
        let out: Vec<f64> = pre.iter().map(|&z| act.apply(z)).collect();
        ensure_finite(&out, "DenseLayer::forward")?;
        self.cache = Some(DenseCache {
            input: x.values().to_vec(),
            pre,
            batch: x.cols(),
        });
        Tensor::from_vec(self.out_width(), x.cols(), out)
    }

    /// Forward pass without caching.
    pub fn infer(&self, x: &Tensor) -> Result<Tensor> {
        let mut pre = self.affine(x, "DenseLayer::infer")?;
        let act = self.activation;
        pre.iter_mut().for_each(|z| *z = act.apply(*z));
        ensure_finite(&pre, "DenseLayer::infer")?;
        Tensor::from_vec(self.out_width(), x.cols(), pre)
    }

    /// Accumulates `∂L/∂W` and `∂L/∂b` and returns `∂L/∂x`.
    ///
    /// Consumes the cache written by the preceding [`forward`](Self::forward).
    pub fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        let cache = self.cache.take().ok_or_else(|| {
            Error::Contract("DenseLayer::backward called without a preceding forward".into())
        })?;
        let batch = cache.batch;
        let (out, inp) = (self.out_width(), self.in_width());
        grad_out.expect_shape("DenseLayer::backward", out, batch)?;

        let act = self.activation;
        let dpre: Vec<f64> = match act {
            Activation::Identity => grad_out.values().to_vec(),
            _ => grad_out
                .values()
                .iter()
                .zip(&cache.pre)
                .map(|(&g, &z)| g * act.derivative(z))
                .collect(),
        };

        gemm(
            out,
            batch,
            inp,
            &dpre,
            false,
            &cache.input,
            true,
            1.0,
            self.weight.grad_mut(),
        );
        for (gb, row) in self
            .bias
            .grad_mut()
            .iter_mut()
            .zip(dpre.chunks_exact(batch.max(1)))
        {
            *gb += row.iter().sum::<f64>();
        }

        let mut dx = vec![0.0; inp * batch];
        gemm(
            inp,
            out,
            batch,
            self.weight.values(),
            true,
            &dpre,
            false,
            0.0,
            &mut dx,
        );
        ensure_finite(self.weight.grad(), "DenseLayer::backward (weight grad)")?;
        ensure_finite(&dx, "DenseLayer::backward (input grad)")?;
        Tensor::from_vec(inp, batch, dx)
    }
}
