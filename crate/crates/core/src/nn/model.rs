use super::layers::{Aux, Batch, ConvParams, FcParams, Layer, ParamGrad, Scratch};
use super::scalar::Scalar;
use super::spec::{infer_shapes, DecoderSpec, LayerSpec};
use crate::error::{Error, Result};
use crate::rng::{derive, Stream};

/// Gradients for every layer of a model, aligned with the layer chain.
#[derive(Clone, Debug)]
pub struct Grads<T> {
    pub layers: Vec<Option<ParamGrad<T>>>,
}

pub(crate) struct ForwardTrace<T> {
    /// Activations: `acts[0]` is the input, `acts[i + 1]` the output of
    /// layer `i`.
    pub acts: Vec<Batch<T>>,
    pub aux: Vec<Aux>,
}

impl<T: Scalar> ForwardTrace<T> {
    pub fn output(&self) -> &Batch<T> {
        self.acts.last().expect("trace holds at least the input")
    }
}

/// A decoder with materialized parameters.
///
/// Parameters are initialized Kaiming-uniform (fan-in, leaky-ReLU gain at
/// slope 0.2) with zero biases, from a counter-based stream keyed on the
/// seed and layer index. Construction with the same seed is bit-reproducible.
pub struct DecoderModel<T> {
    spec: DecoderSpec,
    pub(crate) layers: Vec<Layer<T>>,
    /// `shapes[0]` is the input shape, `shapes[i + 1]` layer i's output.
    shapes: Vec<Vec<usize>>,
}

const LEAKY_SLOPE_DEFAULT: f64 = 0.2;
const INSTANCE_NORM_EPS: f64 = 1e-5;

fn kaiming_uniform<T: Scalar>(stream: &mut Stream, fan_in: usize, len: usize) -> Vec<T> {
    // gain for leaky ReLU at the default slope
    let gain = (2.0 / (1.0 + LEAKY_SLOPE_DEFAULT * LEAKY_SLOPE_DEFAULT)).sqrt();
    let bound = gain * (3.0 / fan_in as f64).sqrt();
    (0..len)
        .map(|_| T::from_f64((stream.next_f64() * 2.0 - 1.0) * bound))
        .collect()
}

impl<T: Scalar> DecoderModel<T> {
    /// Build and initialize a model from its spec.
    pub fn init(spec: &DecoderSpec, seed: u64) -> Result<Self> {
        let out_shapes = infer_shapes(spec)?;
        let mut shapes = Vec::with_capacity(out_shapes.len() + 1);
        shapes.push(spec.input_shape.clone());
        shapes.extend(out_shapes);

        let mut layers = Vec::with_capacity(spec.layers.len());
        for (i, layer_spec) in spec.layers.iter().enumerate() {
            let in_shape = &shapes[i];
            let mut stream = Stream::new(derive(seed, i as u64));
            let layer = match layer_spec {
                LayerSpec::Conv2d {
                    out_channels,
                    kernel,
                    stride,
                    padding,
                } => {
                    let in_ch = in_shape[0];
                    let fan_in = in_ch * kernel[0] * kernel[1];
                    Layer::Conv(ConvParams {
                        in_ch,
                        out_ch: *out_channels,
                        kh: kernel[0],
                        kw: kernel[1],
                        stride: *stride,
                        pad: *padding,
                        weight: kaiming_uniform(&mut stream, fan_in, out_channels * fan_in),
                        bias: vec![T::ZERO; *out_channels],
                    })
                }
                LayerSpec::Deconv2d {
                    out_channels,
                    kernel,
                    stride,
                    padding,
                } => {
                    let in_ch = in_shape[0];
                    let fan_in = in_ch * kernel[0] * kernel[1];
                    Layer::Deconv(ConvParams {
                        in_ch,
                        out_ch: *out_channels,
                        kh: kernel[0],
                        kw: kernel[1],
                        stride: *stride,
                        pad: *padding,
                        weight: kaiming_uniform(
                            &mut stream,
                            fan_in,
                            in_ch * out_channels * kernel[0] * kernel[1],
                        ),
                        bias: vec![T::ZERO; *out_channels],
                    })
                }
                LayerSpec::FullyConnected { out_features } => {
                    let in_f = in_shape[0];
                    Layer::Fc(FcParams {
                        in_f,
                        out_f: *out_features,
                        weight: kaiming_uniform(&mut stream, in_f, out_features * in_f),
                        bias: vec![T::ZERO; *out_features],
                    })
                }
                LayerSpec::InstanceNorm => Layer::InstanceNorm {
                    eps: INSTANCE_NORM_EPS,
                },
                LayerSpec::LeakyRelu { negative_slope } => Layer::LeakyRelu {
                    slope: *negative_slope,
                },
                LayerSpec::Tanh => Layer::Tanh,
                LayerSpec::Flatten => Layer::Flatten,
                LayerSpec::Reshape { .. } => Layer::Reshape,
            };
            layers.push(layer);
        }
        Ok(DecoderModel {
            spec: spec.clone(),
            layers,
            shapes,
        })
    }

    pub fn spec(&self) -> &DecoderSpec {
        &self.spec
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.shapes[0]
    }

    pub fn output_shape(&self) -> &[usize] {
        self.shapes.last().unwrap()
    }

    /// Iterate parameter buffers in layer order (weights then bias per layer).
    pub fn param_buffers(&self) -> Vec<Option<(&Vec<T>, &Vec<T>)>> {
        self.layers.iter().map(|l| l.params()).collect()
    }

    pub(crate) fn check_input(&self, x: &Batch<T>) -> Result<()> {
        if x.shape != self.shapes[0] {
            return Err(Error::shape(format!(
                "batch shape {:?} does not match decoder input {:?}",
                x.shape, self.shapes[0]
            )));
        }
        Ok(())
    }

    pub(crate) fn forward_trace(
        &self,
        x: &Batch<T>,
        scratch: &mut Scratch<T>,
    ) -> Result<ForwardTrace<T>> {
        self.check_input(x)?;
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        let mut aux = Vec::with_capacity(self.layers.len());
        acts.push(x.clone());
        for (i, layer) in self.layers.iter().enumerate() {
            let (y, a) = layer.forward(&acts[i], &self.shapes[i + 1], scratch);
            if !y.all_finite() {
                return Err(Error::numerical(format!(
                    "layer {i} ({}) produced non-finite values",
                    self.spec.layers[i].kind_name()
                )));
            }
            acts.push(y);
            aux.push(a);
        }
        Ok(ForwardTrace { acts, aux })
    }

    /// Run the decoder on a batch.
    pub fn forward(&self, x: &Batch<T>) -> Result<Batch<T>> {
        let mut scratch = Scratch::new();
        let trace = self.forward_trace(x, &mut scratch)?;
        Ok(trace.acts.into_iter().next_back().unwrap())
    }

    /// Backpropagate an output gradient through the trace.
    pub(crate) fn backward_trace(
        &self,
        trace: &ForwardTrace<T>,
        grad_out: Batch<T>,
        scratch: &mut Scratch<T>,
    ) -> (Grads<T>, Batch<T>) {
        let mut grads = vec![None; self.layers.len()];
        let mut gy = grad_out;
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let (gx, pg) = layer.backward(&trace.acts[i], &trace.acts[i + 1], &trace.aux[i], &gy, scratch);
            grads[i] = pg;
            gy = gx;
        }
        (Grads { layers: grads }, gy)
    }

    /// Mean squared error over a batch and its gradient with respect to the
    /// decoder output; the mean runs over batch, channels, and pixels.
    pub(crate) fn mse_and_grad(output: &Batch<T>, targets: &Batch<T>) -> (f64, Batch<T>) {
        debug_assert_eq!(output.data.len(), targets.data.len());
        let count = output.data.len() as f64;
        let mut loss = 0.0f64;
        let mut grad = Batch::zeros(output.n, &output.shape);
        let scale = 2.0 / count;
        for ((g, o), t) in grad
            .data
            .iter_mut()
            .zip(output.data.iter())
            .zip(targets.data.iter())
        {
            let diff = o.to_f64() - t.to_f64();
            loss += diff * diff;
            *g = T::from_f64(scale * diff);
        }
        (loss / count, grad)
    }

    /// Gradients of the batch-mean MSE with respect to every parameter.
    /// Returns the gradients and the loss value.
    pub fn backward_mse(&self, batch: &Batch<T>, targets: &Batch<T>) -> Result<(Grads<T>, f64)> {
        if targets.shape != *self.output_shape() || targets.n != batch.n {
            return Err(Error::shape(format!(
                "targets {:?}x{} do not match decoder output {:?}x{}",
                targets.shape,
                targets.n,
                self.output_shape(),
                batch.n
            )));
        }
        let mut scratch = Scratch::new();
        let trace = self.forward_trace(batch, &mut scratch)?;
        let (loss, grad_out) = Self::mse_and_grad(trace.output(), targets);
        let (grads, _) = self.backward_trace(&trace, grad_out, &mut scratch);
        Ok((grads, loss))
    }

    /// Hash of all parameter bits; used for determinism checks.
    pub fn param_digest(&self) -> u64 {
        let mut h = 0xcbf29ce484222325u64; // FNV offset basis
        let mut eat = |v: u64| {
            h ^= v;
            h = h.wrapping_mul(0x100000001b3);
        };
        for layer in &self.layers {
            if let Some((w, b)) = layer.params() {
                for x in w.iter().chain(b.iter()) {
                    eat(x.to_f64().to_bits());
                }
            }
        }
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_spec() -> DecoderSpec {
        DecoderSpec {
            input_shape: vec![2, 4, 4],
            layers: vec![
                LayerSpec::Conv2d {
                    out_channels: 3,
                    kernel: [3, 3],
                    stride: 1,
                    padding: 1,
                },
                LayerSpec::InstanceNorm,
                LayerSpec::LeakyRelu {
                    negative_slope: 0.2,
                },
                LayerSpec::Tanh,
            ],
            expected_output_shape: vec![3, 4, 4],
        }
    }

    #[test]
    fn init_is_seed_deterministic() {
        let spec = toy_spec();
        let a: DecoderModel<f32> = DecoderModel::init(&spec, 7).unwrap();
        let b: DecoderModel<f32> = DecoderModel::init(&spec, 7).unwrap();
        let c: DecoderModel<f32> = DecoderModel::init(&spec, 8).unwrap();
        assert_eq!(a.param_digest(), b.param_digest());
        assert_ne!(a.param_digest(), c.param_digest());
    }

    #[test]
    fn forward_shape_matches_inference() {
        let spec = toy_spec();
        let model: DecoderModel<f64> = DecoderModel::init(&spec, 0).unwrap();
        let x = Batch::zeros(5, &[2, 4, 4]);
        let y = model.forward(&x).unwrap();
        assert_eq!(y.shape, vec![3, 4, 4]);
        assert_eq!(y.n, 5);
    }

    #[test]
    fn zero_conv_gives_tanh_zero() {
        let spec = DecoderSpec {
            input_shape: vec![1, 3, 3],
            layers: vec![
                LayerSpec::Conv2d {
                    out_channels: 2,
                    kernel: [3, 3],
                    stride: 1,
                    padding: 1,
                },
                LayerSpec::Tanh,
            ],
            expected_output_shape: vec![2, 3, 3],
        };
        let mut model: DecoderModel<f64> = DecoderModel::init(&spec, 1).unwrap();
        if let Some((w, b)) = model.layers[0].params_mut() {
            w.fill(0.0);
            b.fill(0.0);
        }
        let x = Batch::from_vec(2, &[1, 3, 3], vec![0.3; 18]);
        let y = model.forward(&x).unwrap();
        assert!(y.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mse_grad_is_linear_in_residual() {
        let out1 = Batch::from_vec(1, &[4], vec![1.0f64, 2.0, 3.0, 4.0]);
        let out2 = Batch::from_vec(1, &[4], vec![2.0f64, 4.0, 6.0, 8.0]);
        let tgt = Batch::from_vec(1, &[4], vec![0.0f64; 4]);
        let (l1, g1) = DecoderModel::<f64>::mse_and_grad(&out1, &tgt);
        let (l2, g2) = DecoderModel::<f64>::mse_and_grad(&out2, &tgt);
        assert!((l2 - 4.0 * l1).abs() < 1e-12);
        for (a, b) in g1.data.iter().zip(g2.data.iter()) {
            assert!((b - 2.0 * a).abs() < 1e-12);
        }
        // zero residual, zero gradient
        let (l0, g0) = DecoderModel::<f64>::mse_and_grad(&tgt, &tgt);
        assert_eq!(l0, 0.0);
        assert!(g0.data.iter().all(|&v| v == 0.0));
    }
}
