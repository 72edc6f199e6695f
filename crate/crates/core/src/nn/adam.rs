use super::model::{DecoderModel, Grads};
use super::scalar::Scalar;
use super::spec::TrainConfig;

/// First/second moment buffers for every parameterized layer, plus the step
/// counter used for bias correction.
pub struct AdamState<T> {
    m: Vec<Option<(Vec<T>, Vec<T>)>>,
    v: Vec<Option<(Vec<T>, Vec<T>)>>,
    pub t: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(model: &DecoderModel<T>) -> Self {
        let zeros = |model: &DecoderModel<T>| -> Vec<Option<(Vec<T>, Vec<T>)>> {
            model
                .param_buffers()
                .iter()
                .map(|p| p.map(|(w, b)| (vec![T::ZERO; w.len()], vec![T::ZERO; b.len()])))
                .collect()
        };
        AdamState {
            m: zeros(model),
            v: zeros(model),
            t: 0,
        }
    }
}

fn update_buffer<T: Scalar>(
    theta: &mut [T],
    grad: &[T],
    m: &mut [T],
    v: &mut [T],
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    bc1: f64,
    bc2: f64,
) {
    for i in 0..theta.len() {
        let g = grad[i].to_f64();
        let mi = beta1 * m[i].to_f64() + (1.0 - beta1) * g;
        let vi = beta2 * v[i].to_f64() + (1.0 - beta2) * g * g;
        m[i] = T::from_f64(mi);
        v[i] = T::from_f64(vi);
        let m_hat = mi / bc1;
        let v_hat = vi / bc2;
        theta[i] = T::from_f64(theta[i].to_f64() - lr * m_hat / (v_hat.sqrt() + eps));
    }
}

/// One Adam update with bias correction; increments the step counter.
pub fn adam_step<T: Scalar>(
    model: &mut DecoderModel<T>,
    state: &mut AdamState<T>,
    grads: &Grads<T>,
    cfg: &TrainConfig,
) {
    state.t += 1;
    let bc1 = 1.0 - cfg.beta1.powi(state.t as i32);
    let bc2 = 1.0 - cfg.beta2.powi(state.t as i32);
    for (li, layer) in model.layers.iter_mut().enumerate() {
        let Some((w, b)) = layer.params_mut() else {
            continue;
        };
        let Some(g) = &grads.layers[li] else { continue };
        let (mw, mb) = state.m[li].as_mut().expect("moment layout matches params");
        let (vw, vb) = state.v[li].as_mut().expect("moment layout matches params");
        update_buffer(
            w, &g.weight, mw, vw, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_epsilon, bc1,
            bc2,
        );
        update_buffer(
            b, &g.bias, mb, vb, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_epsilon, bc1,
            bc2,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use super::super::layers::ParamGrad;
    use super::super::spec::{DecoderSpec, LayerSpec};

    fn fc_spec() -> DecoderSpec {
        DecoderSpec {
            input_shape: vec![3],
            layers: vec![LayerSpec::FullyConnected { out_features: 2 }],
            expected_output_shape: vec![2],
        }
    }

    fn params_of(model: &DecoderModel<f64>) -> (Vec<f64>, Vec<f64>) {
        let p = model.param_buffers();
        let (w, b) = p[0].unwrap();
        (w.clone(), b.clone())
    }

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        // t=1: m_hat = g, v_hat = g^2, so the update is lr * g / (|g| + eps)
        let spec = fc_spec();
        let mut model: DecoderModel<f64> = DecoderModel::init(&spec, 3).unwrap();
        let (w0, b0) = params_of(&model);
        let cfg = TrainConfig {
            learning_rate: 0.01,
            ..TrainConfig::default()
        };
        let mut state = AdamState::new(&model);
        let g = ParamGrad {
            weight: vec![0.5, -2.0, 1.0, -0.25, 3.0, 0.125],
            bias: vec![1.0, -1.0],
        };
        let grads = Grads {
            layers: vec![Some(g.clone())],
        };
        adam_step(&mut model, &mut state, &grads, &cfg);
        let (w1, b1) = params_of(&model);
        for i in 0..w0.len() {
            let expect = w0[i] - cfg.learning_rate * g.weight[i] / (g.weight[i].abs() + cfg.adam_epsilon);
            assert!((w1[i] - expect).abs() < 1e-12);
        }
        for i in 0..b0.len() {
            let expect = b0[i] - cfg.learning_rate * g.bias[i] / (g.bias[i].abs() + cfg.adam_epsilon);
            assert!((b1[i] - expect).abs() < 1e-12);
        }
        assert_eq!(state.t, 1);
    }

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let spec = fc_spec();
        let mut model: DecoderModel<f64> = DecoderModel::init(&spec, 4).unwrap();
        let (w0, b0) = params_of(&model);
        let cfg = TrainConfig::default();
        let mut state = AdamState::new(&model);
        let grads = Grads {
            layers: vec![Some(ParamGrad {
                weight: vec![0.0; 6],
                bias: vec![0.0; 2],
            })],
        };
        adam_step(&mut model, &mut state, &grads, &cfg);
        let (w1, b1) = params_of(&model);
        assert_eq!(w0, w1);
        assert_eq!(b0, b1);
    }

    #[test]
    fn equal_gradients_receive_identical_updates() {
        let spec = fc_spec();
        let mut model: DecoderModel<f64> = DecoderModel::init(&spec, 5).unwrap();
        let (w0, _) = params_of(&model);
        let cfg = TrainConfig::default();
        let mut state = AdamState::new(&model);
        let grads = Grads {
            layers: vec![Some(ParamGrad {
                weight: vec![0.7; 6],
                bias: vec![0.7; 2],
            })],
        };
        adam_step(&mut model, &mut state, &grads, &cfg);
        let (w1, _) = params_of(&model);
        let delta0 = w1[0] - w0[0];
        for i in 0..w0.len() {
            assert!((w1[i] - w0[i] - delta0).abs() < 1e-15);
        }
    }
}
