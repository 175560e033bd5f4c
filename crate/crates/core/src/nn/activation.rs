use serde::{Deserialize, Serialize};

/// Elementwise nonlinearity applied after a dense layer's affine map.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Activation {
    Relu,
    /// `sin(omega * z)`.
    Sine {
        omega: f64,
    },
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Sine { omega } => (omega * z).sin(),
            Activation::Identity => z,
        }
    }

    /// Derivative with respect to the pre-activation `z`.
    #[inline]
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sine { omega } => omega * (omega * z).cos(),
            Activation::Identity => 1.0,
        }
    }

    /// FLOPs charged per element by the cost model; identity is free.
    pub fn flops_per_element(self) -> u64 {
        match self {
            Activation::Identity => 0,
            _ => 1,
        }
    }
}
