use super::{ensure_finite, init_uniform, Rng, Tensor};
use crate::{Error, Result};

/// Bank of single-neuron heads, each wired to `alpha` fixed body features.
///
/// Head `m` computes `sum_j weight[m, j] * z[indices[m, j]] + bias[m]` with
/// no activation. The index table is fixed at construction.
#[derive(Clone, Debug)]
pub struct SparseHeadLayer {
    body_width: usize,
    alpha: usize,
    indices: Vec<usize>,
    weight: Tensor,
    bias: Tensor,
    cache: Option<SparseCache>,
}

#[derive(Clone, Debug)]
struct SparseCache {
    input: Vec<f64>,
    batch: usize,
}

impl SparseHeadLayer {
    /// `indices` is `M × alpha` row-major; `weight` is `M × alpha`, `bias` is `M × 1`.
    pub fn new(
        body_width: usize,
        indices: Vec<usize>,
        weight: Tensor,
        bias: Tensor,
    ) -> Result<Self> {
        let heads = weight.rows();
        let alpha = weight.cols();
        if alpha == 0 || alpha > body_width {
            return Err(Error::InvalidSpec(format!(
                "alpha must lie in [1, {body_width}], got {alpha}"
            )));
        }
        bias.expect_shape("SparseHeadLayer::new (bias)", heads, 1)?;
        if indices.len() != heads * alpha {
            return Err(Error::shape(
                "SparseHeadLayer::new (indices)",
                heads * alpha,
                indices.len(),
            ));
        }
        let mut seen = vec![usize::MAX; body_width];
        for (m, row) in indices.chunks_exact(alpha).enumerate() {
            for &i in row {
                if i >= body_width {
                    return Err(Error::InvalidSpec(format!(
                        "head {m}: index {i} outside body width {body_width}"
                    )));
                }
                if seen[i] == m {
                    return Err(Error::InvalidSpec(format!("head {m}: duplicate index {i}")));
                }
                seen[i] = m;
            }
        }
        Ok(SparseHeadLayer {
            body_width,
            alpha,
            indices,
            weight,
            bias,
            cache: None,
        })
    }

    /// Randomly wired layer.
    ///
    /// Draw order from `rng`: for each head in turn, `alpha` distinct indices
    /// sampled uniformly without replacement; then all weights row-major from
    /// `U[-bound, bound)`; then all biases from the same range.
    pub fn random(
        heads: usize,
        body_width: usize,
        alpha: usize,
        bound: f64,
        rng: &mut Rng,
    ) -> Result<Self> {
        if alpha == 0 || alpha > body_width {
            return Err(Error::InvalidSpec(format!(
                "alpha must lie in [1, {body_width}], got {alpha}"
            )));
        }
        let mut indices = Vec::with_capacity(heads * alpha);
        for _ in 0..heads {
            indices.extend(rng.distinct_indices(body_width, alpha));
        }
        let weight = init_uniform(heads, alpha, -bound, bound, rng)?;
        let bias = init_uniform(heads, 1, -bound, bound, rng)?;
        SparseHeadLayer::new(body_width, indices, weight, bias)
    }

    pub fn head_count(&self) -> usize {
        self.weight.rows()
    }

    pub fn alpha(&self) -> usize {
        self.alpha
    }

    pub fn body_width(&self) -> usize {
        self.body_width
    }

    /// Body-feature indices of head `m`.
    pub fn head_indices(&self, m: usize) -> &[usize] {
        &self.indices[m * self.alpha..(m + 1) * self.alpha]
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
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

    fn heads_out(&self, z: &Tensor, op: &'static str) -> Result<Vec<f64>> {
        if z.rows() != self.body_width {
            return Err(Error::shape(
                op,
                format!("{} body rows", self.body_width),
                format!("{} body rows", z.rows()),
            ));
        }
        let batch = z.cols();
        let zv = z.values();
        let mut out = vec![0.0; self.head_count() * batch];
        for (m, row) in out
            .chunks_exact_mut(batch.max(1))
            .enumerate()
            .take(self.head_count())
        {
            row.fill(self.bias.values()[m]);
            let w = &self.weight.values()[m * self.alpha..(m + 1) * self.alpha];
            for (&wj, &idx) in w.iter().zip(self.head_indices(m)) {
                let zrow = &zv[idx * batch..(idx + 1) * batch];
                for (o, &zb) in row.iter_mut().zip(zrow) {
                    *o += wj * zb;
                }
            }
        }
        ensure_finite(&out, op)?;
        Ok(out)
    }

    pub fn forward(&mut self, z: &Tensor) -> Result<Tensor> {
        let out = self.heads_out(z, "SparseHeadLayer::forward")?;
        self.cache = Some(SparseCache {
            input: z.values().to_vec(),
            batch: z.cols(),
        });
        Tensor::from_vec(self.head_count(), z.cols(), out)
    }

    pub fn infer(&self, z: &Tensor) -> Result<Tensor> {
        let out = self.heads_out(z, "SparseHeadLayer::infer")?;
        Tensor::from_vec(self.head_count(), z.cols(), out)
    }

    /// Accumulates gradients for the stored `(m, j)` slots only and returns `∂L/∂z`.
    pub fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        let cache = self.cache.take().ok_or_else(|| {
            Error::Contract("SparseHeadLayer::backward called without a preceding forward".into())
        })?;
        let batch = cache.batch;
        let heads = self.head_count();
        grad_out.expect_shape("SparseHeadLayer::backward", heads, batch)?;
        let alpha = self.alpha;
        let mut dz = vec![0.0; self.body_width * batch];
        let g = grad_out.values();
        for m in 0..heads {
            let grow = &g[m * batch..(m + 1) * batch];
            self.bias.grad_mut()[m] += grow.iter().sum::<f64>();
            for j in 0..alpha {
                let idx = self.indices[m * alpha + j];
                let zrow = &cache.input[idx * batch..(idx + 1) * batch];
                let dw: f64 = grow.iter().zip(zrow).map(|(a, b)| a * b).sum();
                self.weight.grad_mut()[m * alpha + j] += dw;
                let wj = self.weight.values()[m * alpha + j];
                for (d, &gb) in dz[idx * batch..(idx + 1) * batch].iter_mut().zip(grow) {
                    *d += wj * gb;
                }
            }
        }
        ensure_finite(
            self.weight.grad(),
            "SparseHeadLayer::backward (weight grad)",
        )?;
        ensure_finite(&dz, "SparseHeadLayer::backward (input grad)")?;
        Tensor::from_vec(self.body_width, batch, dz)
    }
}
