use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// One layer of a decoder, as written in the architecture tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LayerSpec {
    Conv2d {
        out_channels: usize,
        kernel: [usize; 2],
        stride: usize,
        padding: usize,
    },
    /// Transposed convolution, implemented as the gradient of a convolution
    /// with output size `(in - 1) * stride - 2 * padding + kernel`.
    Deconv2d {
        out_channels: usize,
        kernel: [usize; 2],
        stride: usize,
        padding: usize,
    },
    FullyConnected {
        out_features: usize,
    },
    /// Per-sample, per-channel normalization over spatial positions; no
    /// learned affine parameters.
    InstanceNorm,
    LeakyRelu {
        negative_slope: f64,
    },
    Tanh,
    Flatten,
    Reshape {
        target_shape: Vec<usize>,
    },
}

impl LayerSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            LayerSpec::Conv2d { .. } => "conv2d",
            LayerSpec::Deconv2d { .. } => "deconv2d",
            LayerSpec::FullyConnected { .. } => "fully_connected",
            LayerSpec::InstanceNorm => "instance_norm",
            LayerSpec::LeakyRelu { .. } => "leaky_relu",
            LayerSpec::Tanh => "tanh",
            LayerSpec::Flatten => "flatten",
            LayerSpec::Reshape { .. } => "reshape",
        }
    }

    fn validate(&self, index: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::spec(format!("layer {index} ({}): {msg}", self.kind_name())));
        match self {
            LayerSpec::Conv2d {
                out_channels,
                kernel,
                stride,
                ..
            }
            | LayerSpec::Deconv2d {
                out_channels,
                kernel,
                stride,
                ..
            } => {
                if *out_channels == 0 {
                    return bad("out_channels must be positive".into());
                }
                if kernel[0] == 0 || kernel[1] == 0 {
                    return bad(format!("kernel {kernel:?} must be positive"));
                }
                if *stride == 0 {
                    return bad("stride must be >= 1".into());
                }
                Ok(())
            }
            LayerSpec::FullyConnected { out_features } => {
                if *out_features == 0 {
                    return bad("out_features must be positive".into());
                }
                Ok(())
            }
            LayerSpec::LeakyRelu { negative_slope } => {
                if !(*negative_slope > 0.0 && negative_slope.is_finite()) {
                    return bad(format!("negative_slope {negative_slope} must be positive"));
                }
                Ok(())
            }
            LayerSpec::Reshape { target_shape } => {
                if target_shape.is_empty() || target_shape.iter().any(|&d| d == 0) {
                    return bad(format!("target_shape {target_shape:?} must have positive dims"));
                }
                Ok(())
            }
            LayerSpec::InstanceNorm | LayerSpec::Tanh | LayerSpec::Flatten => Ok(()),
        }
    }
}

/// Declarative decoder architecture: an input shape, a layer chain, and the
/// shape the chain must end at.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecoderSpec {
    pub input_shape: Vec<usize>,
    pub layers: Vec<LayerSpec>,
    pub expected_output_shape: Vec<usize>,
}

impl DecoderSpec {
    pub fn from_json(json: &str) -> Result<Self> {
        let spec: DecoderSpec = serde_json::from_str(json)?;
        infer_shapes(&spec)?;
        Ok(spec)
    }

    pub fn from_json_file(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }
}

fn conv_out(in_size: usize, k: usize, s: usize, p: usize) -> Result<usize> {
    let padded = in_size + 2 * p;
    if padded < k {
        return Err(Error::spec(format!(
            "kernel {k} larger than padded input {padded}"
        )));
    }
    Ok((padded - k) / s + 1)
}

fn deconv_out(in_size: usize, k: usize, s: usize, p: usize) -> Result<usize> {
    let grown = (in_size - 1) * s + k;
    if grown < 2 * p + 1 {
        return Err(Error::spec(format!(
            "padding {p} eats the whole deconv output ({grown} grown)"
        )));
    }
    Ok(grown - 2 * p)
}

/// Per-layer output shapes for a decoder spec.
///
/// Returns one shape per layer (the input shape is `spec.input_shape`).
/// Fails with a spec error naming the offending layer if the chain is
/// inconsistent or does not end at `expected_output_shape`.
pub fn infer_shapes(spec: &DecoderSpec) -> Result<Vec<Vec<usize>>> {
    if spec.input_shape.is_empty() || spec.input_shape.iter().any(|&d| d == 0) {
        return Err(Error::spec(format!(
            "input shape {:?} must have positive dims",
            spec.input_shape
        )));
    }
    if spec.layers.is_empty() {
        return Err(Error::spec("decoder needs at least one layer"));
    }
    let mut cur = spec.input_shape.clone();
    let mut out = Vec::with_capacity(spec.layers.len());
    for (i, layer) in spec.layers.iter().enumerate() {
        layer.validate(i)?;
        let err = |msg: String| -> Error {
            Error::spec(format!(
                "layer {i} ({}): {msg} (input shape {cur:?})",
                layer.kind_name()
            ))
        };
        cur = match layer {
            LayerSpec::Conv2d {
                out_channels,
                kernel,
                stride,
                padding,
            } => {
                let [_, h, w] = as_chw(&cur).ok_or_else(|| err("expects a [C,H,W] input".into()))?;
                vec![
                    *out_channels,
                    conv_out(h, kernel[0], *stride, *padding)?,
                    conv_out(w, kernel[1], *stride, *padding)?,
                ]
            }
            LayerSpec::Deconv2d {
                out_channels,
                kernel,
                stride,
                padding,
            } => {
                let [_, h, w] = as_chw(&cur).ok_or_else(|| err("expects a [C,H,W] input".into()))?;
                vec![
                    *out_channels,
                    deconv_out(h, kernel[0], *stride, *padding)?,
                    deconv_out(w, kernel[1], *stride, *padding)?,
                ]
            }
            LayerSpec::FullyConnected { out_features } => {
                if cur.len() != 1 {
                    return Err(err("expects a rank-1 input".into()));
                }
                vec![*out_features]
            }
            LayerSpec::InstanceNorm => {
                if cur.len() != 3 {
                    return Err(err("expects a [C,H,W] input".into()));
                }
                cur
            }
            LayerSpec::LeakyRelu { .. } | LayerSpec::Tanh => cur,
            LayerSpec::Flatten => vec![cur.iter().product()],
            LayerSpec::Reshape { target_shape } => {
                let have: usize = cur.iter().product();
                let want: usize = target_shape.iter().product();
                if have != want {
                    return Err(err(format!(
                        "cannot reshape {have} elements into {target_shape:?}"
                    )));
                }
                target_shape.clone()
            }
        };
        out.push(cur.clone());
    }
    if cur != spec.expected_output_shape {
        return Err(Error::spec(format!(
            "chain ends at {:?}, expected {:?}",
            cur, spec.expected_output_shape
        )));
    }
    Ok(out)
}

fn as_chw(shape: &[usize]) -> Option<[usize; 3]> {
    match shape {
        [c, h, w] => Some([*c, *h, *w]),
        _ => None,
    }
}

fn default_adam_epsilon() -> f64 {
    1e-8
}

fn default_beta1() -> f64 {
    0.5
}

fn default_beta2() -> f64 {
    0.999
}

/// Training hyperparameters for a decoder run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    #[serde(default = "default_adam_epsilon")]
    pub adam_epsilon: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-4,
            beta1: 0.5,
            beta2: 0.999,
            epochs: 40,
            batch_size: 10,
            seed: 0,
            adam_epsilon: 1e-8,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config(format!(
                "learning_rate {} must be positive",
                self.learning_rate
            )));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::config(format!("{name} {b} must lie in [0, 1)")));
            }
        }
        if self.epochs == 0 {
            return Err(Error::config("epochs must be >= 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size must be >= 1"));
        }
        if !(self.adam_epsilon > 0.0) {
            return Err(Error::config("adam_epsilon must be positive"));
        }
        Ok(())
    }

    pub fn from_json_file(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: TrainConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}
