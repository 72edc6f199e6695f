//! Central finite-difference verification of the analytic gradients.
//!
//! Runs every kernel at f64 and compares `backward` against
//! `(loss(θ+h) - loss(θ-h)) / 2h` for every parameter and every input entry.

use super::layers::{Batch, Scratch};
use super::model::DecoderModel;
use super::spec::{DecoderSpec, LayerSpec};
use crate::error::{Error, Result};
use crate::rng::{derive, Stream};

/// Outcome of a full gradient check.
#[derive(Clone, Copy, Debug)]
pub struct GradCheckReport {
    pub max_rel_param: f64,
    pub max_rel_input: f64,
    pub checked_params: usize,
    pub checked_inputs: usize,
}

/// All layer kinds the decoder stack supports.
pub const LAYER_KINDS: [&str; 8] = [
    "conv2d",
    "deconv2d",
    "fully_connected",
    "instance_norm",
    "leaky_relu",
    "tanh",
    "flatten",
    "reshape",
];

/// A small single-layer spec of the given kind with randomized shape
/// parameters; deterministic in `seed`.
pub fn random_spec_for_kind(kind: &str, seed: u64) -> DecoderSpec {
    let mut s = Stream::new(derive(seed, 0x7368_6170)); // "shap"
    let mut pick = |lo: usize, hi: usize| lo + s.next_below((hi - lo + 1) as u64) as usize;
    match kind {
        "conv2d" => {
            let (c_in, c_out) = (pick(1, 3), pick(1, 4));
            let k = pick(1, 3);
            let stride = pick(1, 2);
            let pad = pick(0, k - 1);
            let (h, w) = (pick(k.max(3), 6), pick(k.max(3), 6));
            let ho = (h + 2 * pad - k) / stride + 1;
            let wo = (w + 2 * pad - k) / stride + 1;
            DecoderSpec {
                input_shape: vec![c_in, h, w],
                layers: vec![LayerSpec::Conv2d {
                    out_channels: c_out,
                    kernel: [k, k],
                    stride,
                    padding: pad,
                }],
                expected_output_shape: vec![c_out, ho, wo],
            }
        }
        "deconv2d" => {
            let (c_in, c_out) = (pick(1, 3), pick(1, 4));
            let k = pick(2, 4);
            let stride = pick(1, 2);
            let pad = pick(0, (k - 1) / 2);
            let (h, w) = (pick(2, 5), pick(2, 5));
            let ho = (h - 1) * stride + k - 2 * pad;
            let wo = (w - 1) * stride + k - 2 * pad;
            DecoderSpec {
                input_shape: vec![c_in, h, w],
                layers: vec![LayerSpec::Deconv2d {
                    out_channels: c_out,
                    kernel: [k, k],
                    stride,
                    padding: pad,
                }],
                expected_output_shape: vec![c_out, ho, wo],
            }
        }
        "fully_connected" => {
            let (fi, fo) = (pick(2, 6), pick(1, 7));
            DecoderSpec {
                input_shape: vec![fi],
                layers: vec![LayerSpec::FullyConnected { out_features: fo }],
                expected_output_shape: vec![fo],
            }
        }
        "instance_norm" => {
            let shape = vec![pick(1, 3), pick(2, 5), pick(2, 5)];
            DecoderSpec {
                input_shape: shape.clone(),
                layers: vec![LayerSpec::InstanceNorm],
                expected_output_shape: shape,
            }
        }
        "leaky_relu" => {
            let shape = vec![pick(1, 2), pick(2, 5), pick(2, 5)];
            DecoderSpec {
                input_shape: shape.clone(),
                layers: vec![LayerSpec::LeakyRelu {
                    negative_slope: 0.2,
                }],
                expected_output_shape: shape,
            }
        }
        "tanh" => {
            let shape = vec![pick(2, 12)];
            DecoderSpec {
                input_shape: shape.clone(),
                layers: vec![LayerSpec::Tanh],
                expected_output_shape: shape,
            }
        }
        "flatten" => {
            let shape = vec![pick(1, 3), pick(2, 4), pick(2, 4)];
            let flat = shape.iter().product();
            DecoderSpec {
                input_shape: shape,
                layers: vec![LayerSpec::Flatten],
                expected_output_shape: vec![flat],
            }
        }
        "reshape" => {
            let (c, h, w) = (pick(1, 3), pick(2, 4), pick(2, 4));
            DecoderSpec {
                input_shape: vec![c * h * w],
                layers: vec![LayerSpec::Reshape {
                    target_shape: vec![c, h, w],
                }],
                expected_output_shape: vec![c, h, w],
            }
        }
        other => panic!("unknown layer kind {other:?}"),
    }
}

fn random_batch(n: usize, shape: &[usize], key: u64, scale: f64) -> Batch<f64> {
    let mut s = Stream::new(key);
    let len = n * shape.iter().product::<usize>();
    Batch::from_vec(
        n,
        shape,
        (0..len).map(|_| (s.next_f64() * 2.0 - 1.0) * scale).collect(),
    )
}

fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-6)
}

fn loss_of(model: &DecoderModel<f64>, x: &Batch<f64>, t: &Batch<f64>) -> Result<f64> {
    let mut scratch = Scratch::new();
    let trace = model.forward_trace(x, &mut scratch)?;
    let (loss, _) = DecoderModel::mse_and_grad(trace.output(), t);
    Ok(loss)
}

/// Compare analytic parameter and input gradients of the batch-mean MSE
/// against central finite differences (step `h`), failing if any relative
/// error exceeds `tol`.
pub fn check_gradients(
    spec: &DecoderSpec,
    seed: u64,
    h: f64,
    tol: f64,
) -> Result<GradCheckReport> {
    let mut model: DecoderModel<f64> = DecoderModel::init(spec, derive(seed, 1))?;
    let batch_n = 3;
    let x = random_batch(batch_n, &spec.input_shape, derive(seed, 2), 1.0);
    let t = random_batch(batch_n, &spec.expected_output_shape, derive(seed, 3), 0.8);

    // analytic gradients
    let mut scratch = Scratch::new();
    let trace = model.forward_trace(&x, &mut scratch)?;
    let (_, gy) = DecoderModel::mse_and_grad(trace.output(), &t);
    let (grads, gx) = model.backward_trace(&trace, gy, &mut scratch);
    drop(trace);

    let mut report = GradCheckReport {
        max_rel_param: 0.0,
        max_rel_input: 0.0,
        checked_params: 0,
        checked_inputs: 0,
    };

    // parameters
    let n_layers = model.layers.len();
    for li in 0..n_layers {
        let Some(analytic) = grads.layers[li].clone() else {
            continue;
        };
        for (which, a_buf) in [(0usize, &analytic.weight), (1usize, &analytic.bias)] {
            for pi in 0..a_buf.len() {
                let orig = {
                    let (w, b) = model.layers[li].params_mut().unwrap();
                    let buf = if which == 0 { w } else { b };
                    let orig = buf[pi];
                    buf[pi] = orig + h;
                    orig
                };
                let plus = loss_of(&model, &x, &t)?;
                {
                    let (w, b) = model.layers[li].params_mut().unwrap();
                    let buf = if which == 0 { w } else { b };
                    buf[pi] = orig - h;
                }
                let minus = loss_of(&model, &x, &t)?;
                {
                    let (w, b) = model.layers[li].params_mut().unwrap();
                    let buf = if which == 0 { w } else { b };
                    buf[pi] = orig;
                }
                let numeric = (plus - minus) / (2.0 * h);
                let e = rel_err(a_buf[pi], numeric);
                report.max_rel_param = report.max_rel_param.max(e);
                report.checked_params += 1;
                if e > tol {
                    return Err(Error::numerical(format!(
                        "layer {li} param {pi} ({}): analytic {} vs numeric {numeric} (rel {e:.3e})",
                        if which == 0 { "weight" } else { "bias" },
                        a_buf[pi],
                    )));
                }
            }
        }
    }

    // inputs
    let mut xp = x.clone();
    for i in 0..x.data.len() {
        let orig = xp.data[i];
        xp.data[i] = orig + h;
        let plus = loss_of(&model, &xp, &t)?;
        xp.data[i] = orig - h;
        let minus = loss_of(&model, &xp, &t)?;
        xp.data[i] = orig;
        let numeric = (plus - minus) / (2.0 * h);
        let e = rel_err(gx.data[i], numeric);
        report.max_rel_input = report.max_rel_input.max(e);
        report.checked_inputs += 1;
        if e > tol {
            return Err(Error::numerical(format!(
                "input entry {i}: analytic {} vs numeric {numeric} (rel {e:.3e})",
                gx.data[i],
            )));
        }
    }

    Ok(report)
}
