//! A small dense-network engine: batched forward pass, exact reverse-mode
//! gradients, Adam, and the soft target update used by DDPG.
//!
//! Batches are row-major: one sample per row. Weights are stored
//! `out x in`, so a layer computes `y = act(x W^T + b)`.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;

use crate::error::{Error, Result};

const FORMAT_HEADER: &str = "irs-noma-densenet v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
    Linear,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Linear => x,
        }
    }

    /// Derivative expressed through the activation's output.
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Linear => 1.0,
        }
    }

    fn tag(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Linear => "linear",
        }
    }

    fn from_tag(tag: &str) -> Result<Self> {
        match tag {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            "linear" => Ok(Activation::Linear),
            other => Err(Error::Format(format!("unknown activation tag {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// `out x in`.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn input_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.nrows()
    }
}

/// Parameter-shaped tensors: gradients, or Adam moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl Gradients {
    fn zeros_like(net: &DenseNet) -> Self {
        Gradients {
            weights: net.layers.iter().map(|l| Array2::zeros(l.weights.raw_dim())).collect(),
            biases: net.layers.iter().map(|l| Array1::zeros(l.bias.raw_dim())).collect(),
        }
    }

    /// Same ordering as [`DenseNet::params`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend(w.iter());
            out.extend(b.iter());
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.iter().all(|x| x.is_finite()))
            && self.biases.iter().all(|b| b.iter().all(|x| x.is_finite()))
    }

    pub fn scale(&mut self, factor: f64) {
        self.weights.iter_mut().for_each(|w| *w *= factor);
        self.biases.iter_mut().for_each(|b| *b *= factor);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step: u64,
    pub first_moment: Gradients,
    pub second_moment: Gradients,
}

/// Activations recorded by [`DenseNet::forward`] for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Input to each layer, `batch x in`.
    inputs: Vec<Array2<f64>>,
    /// Post-activation output of each layer, `batch x out`.
    outputs: Vec<Array2<f64>>,
}

impl ForwardCache {
    pub fn batch_size(&self) -> usize {
        self.inputs.first().map_or(0, |x| x.nrows())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet {
    layers: Vec<Layer>,
    adam: AdamState,
}

impl DenseNet {
    /// Uniform `[-1/sqrt(fan_in), 1/sqrt(fan_in)]` initialisation.
    /// `sizes` has one more entry than `activations`.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], activations: &[Activation], rng: &mut R) -> Result<Self> {
        if sizes.len() < 2 || sizes.len() != activations.len() + 1 {
            return Err(Error::Parameter(format!(
                "need one activation per layer: {} sizes, {} activations",
                sizes.len(),
                activations.len()
            )));
        }
        if sizes.contains(&0) {
            return Err(Error::Parameter("layer sizes must be positive".into()));
        }
        let layers = sizes
            .windows(2)
            .zip(activations)
            .map(|(io, &activation)| {
                let (fan_in, fan_out) = (io[0], io[1]);
                let bound = 1.0 / (fan_in as f64).sqrt();
                Layer {
                    weights: Array2::from_shape_fn((fan_out, fan_in), |_| rng.gen_range(-bound..=bound)),
                    bias: Array1::from_shape_fn(fan_out, |_| rng.gen_range(-bound..=bound)),
                    activation,
                }
            })
            .collect();
        Self::from_layers(layers)
    }

    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Parameter("network needs at least one layer".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.bias.len() != l.output_dim() {
                return Err(Error::dim("layer bias", l.output_dim(), l.bias.len()));
            }
            if i > 0 && layers[i - 1].output_dim() != l.input_dim() {
                return Err(Error::dim("layer chain", layers[i - 1].output_dim(), l.input_dim()));
            }
        }
        let mut net = DenseNet {
            layers,
            adam: AdamState {
                step: 0,
                first_moment: Gradients {
                    weights: vec![],
                    biases: vec![],
                },
                second_moment: Gradients {
                    weights: vec![],
                    biases: vec![],
                },
            },
        };
        net.adam.first_moment = Gradients::zeros_like(&net);
        net.adam.second_moment = Gradients::zeros_like(&net);
        Ok(net)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn adam_state(&self) -> &AdamState {
        &self.adam
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").output_dim()
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Multiplies the last layer's weights and bias by `factor`.
    pub fn scale_output_layer(&mut self, factor: f64) {
        let last = self.layers.last_mut().expect("non-empty");
        last.weights *= factor;
        last.bias *= factor;
    }

    fn same_architecture(&self, other: &DenseNet) -> bool {
        self.layers.len() == other.layers.len()
            && self.layers.iter().zip(&other.layers).all(|(a, b)| {
                a.weights.dim() == b.weights.dim() && a.activation == b.activation
            })
    }

    /// Batched forward pass, recording what backward needs.
    pub fn forward(&self, x: ArrayView2<f64>) -> Result<(Array2<f64>, ForwardCache)> {
        if x.ncols() != self.input_dim() {
            return Err(Error::dim("forward input", self.input_dim(), x.ncols()));
        }
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut outputs = Vec::with_capacity(self.layers.len());
        let mut current = x.to_owned();
        for layer in &self.layers {
            let mut y = current.dot(&layer.weights.t());
            y += &layer.bias;
            let act = layer.activation;
            y.mapv_inplace(|v| act.apply(v));
            inputs.push(current);
            outputs.push(y.clone());
            current = y;
        }
        Ok((current, ForwardCache { inputs, outputs }))
    }

    /// Forward pass without a cache.
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.input_dim() {
            return Err(Error::dim("forward input", self.input_dim(), x.ncols()));
        }
        let mut current = x.to_owned();
        for layer in &self.layers {
            let mut y = current.dot(&layer.weights.t());
            y += &layer.bias;
            let act = layer.activation;
            y.mapv_inplace(|v| act.apply(v));
            current = y;
        }
        Ok(current)
    }

    pub fn predict_one(&self, x: &[f64]) -> Result<Vec<f64>> {
        let view = ArrayView2::from_shape((1, x.len()), x).expect("contiguous row");
        Ok(self.predict(view)?.into_raw_vec_and_offset().0)
    }

    /// Reverse-mode pass. `output_gradient` is d(scalar)/d(output) per sample;
    /// parameter gradients are summed over the batch.
    pub fn backward(&self, cache: &ForwardCache, output_gradient: ArrayView2<f64>) -> Result<(Gradients, Array2<f64>)> {
        if cache.inputs.len() != self.layers.len()
            || self
                .layers
                .iter()
                .zip(&cache.inputs)
                .any(|(l, x)| x.ncols() != l.input_dim())
        {
            return Err(Error::State("forward cache does not match this network".into()));
        }
        let batch = cache.batch_size();
        if output_gradient.dim() != (batch, self.output_dim()) {
            return Err(Error::dim("backward output gradient", batch * self.output_dim(), output_gradient.len()));
        }
        let mut grads = Gradients::zeros_like(self);
        let mut delta = output_gradient.to_owned();
        for (idx, layer) in self.layers.iter().enumerate().rev() {
            let act = layer.activation;
            Zip::from(&mut delta)
                .and(&cache.outputs[idx])
                .for_each(|d, &y| *d *= act.derivative_from_output(y));
            grads.weights[idx] = delta.t().dot(&cache.inputs[idx]);
            grads.biases[idx] = delta.sum_axis(Axis(0));
            delta = delta.dot(&layer.weights);
        }
        Ok((grads, delta))
    }

    /// One bias-corrected Adam update. Non-finite gradients leave the network untouched.
    pub fn adam_step(&mut self, grads: &Gradients, lr: f64, cfg: AdamConfig) -> Result<()> {
        if grads.weights.len() != self.layers.len()
            || self
                .layers
                .iter()
                .zip(grads.weights.iter().zip(&grads.biases))
                .any(|(l, (w, b))| w.dim() != l.weights.dim() || b.len() != l.bias.len())
        {
            return Err(Error::Parameter("gradients are not shaped like the network".into()));
        }
        if !grads.is_finite() {
            return Err(Error::NonFinite("gradients".into()));
        }
        self.adam.step += 1;
        let t = self.adam.step as i32;
        let c1 = 1.0 - cfg.beta1.powi(t);
        let c2 = 1.0 - cfg.beta2.powi(t);
        let update = |p: &mut f64, m: &mut f64, v: &mut f64, g: f64| {
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + cfg.eps);
        };
        let (m, v) = (&mut self.adam.first_moment, &mut self.adam.second_moment);
        for (idx, layer) in self.layers.iter_mut().enumerate() {
            Zip::from(&mut layer.weights)
                .and(&mut m.weights[idx])
                .and(&mut v.weights[idx])
                .and(&grads.weights[idx])
                .for_each(|p, m, v, &g| update(p, m, v, g));
            Zip::from(&mut layer.bias)
                .and(&mut m.biases[idx])
                .and(&mut v.biases[idx])
                .and(&grads.biases[idx])
                .for_each(|p, m, v, &g| update(p, m, v, g));
        }
        Ok(())
    }

    /// `self <- tau * main + (1 - tau) * self`, parameter by parameter.
    pub fn soft_update(&mut self, main: &DenseNet, tau: f64) -> Result<()> {
        if !self.same_architecture(main) {
            return Err(Error::Parameter("soft_update between different architectures".into()));
        }
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::Parameter(format!("tau must lie in [0, 1], got {tau}")));
        }
        if tau == 0.0 {
            return Ok(());
        }
        for (t, m) in self.layers.iter_mut().zip(&main.layers) {
            if tau == 1.0 {
                t.weights.assign(&m.weights);
                t.bias.assign(&m.bias);
                continue;
            }
            Zip::from(&mut t.weights)
                .and(&m.weights)
                .for_each(|t, &m| *t = tau * m + (1.0 - tau) * *t);
            Zip::from(&mut t.bias)
                .and(&m.bias)
                .for_each(|t, &m| *t = tau * m + (1.0 - tau) * *t);
        }
        Ok(())
    }

    /// All parameters: per layer, row-major weights then bias.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend(l.weights.iter());
            out.extend(l.bias.iter());
        }
        out
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.num_params() {
            return Err(Error::dim("set_params", self.num_params(), params.len()));
        }
        let mut it = params.iter().copied();
        for l in &mut self.layers {
            l.weights.iter_mut().for_each(|w| *w = it.next().expect("length checked"));
            l.bias.iter_mut().for_each(|b| *b = it.next().expect("length checked"));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(l.bias.iter()).all(|x| x.is_finite()))
    }

    /// Writes the versioned text format: header, layer dims and activation
    /// tags, Adam step, then row-major parameters and Adam moments per layer.
    pub fn save<W: Write>(&self, mut out: W) -> Result<()> {
        let mut text = String::new();
        let _ = writeln!(text, "{FORMAT_HEADER}");
        let _ = writeln!(text, "layers {}", self.layers.len());
        for l in &self.layers {
            let _ = writeln!(text, "layer {} {} {}", l.input_dim(), l.output_dim(), l.activation.tag());
        }
        let _ = writeln!(text, "adam_step {}", self.adam.step);
        let line = |text: &mut String, tag: &str, values: &mut dyn Iterator<Item = &f64>| {
            text.push_str(tag);
            for v in values {
                let _ = write!(text, " {v:e}");
            }
            text.push('\n');
        };
        let (m, v) = (&self.adam.first_moment, &self.adam.second_moment);
        for (i, l) in self.layers.iter().enumerate() {
            line(&mut text, "w", &mut l.weights.iter());
            line(&mut text, "b", &mut l.bias.iter());
            line(&mut text, "mw", &mut m.weights[i].iter());
            line(&mut text, "mb", &mut m.biases[i].iter());
            line(&mut text, "vw", &mut v.weights[i].iter());
            line(&mut text, "vb", &mut v.biases[i].iter());
        }
        out.write_all(text.as_bytes())?;
        Ok(())
    }

    pub fn load<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let mut next = |what: &str| -> Result<String> {
            lines
                .next()
                .transpose()?
                .ok_or_else(|| Error::Format(format!("unexpected end of file, expected {what}")))
        };
        let header = next("header")?;
        if header.trim() != FORMAT_HEADER {
            return Err(Error::Format(format!("bad header {header:?}")));
        }
        let count_line = next("layer count")?;
        let count: usize = parse_tagged(&count_line, "layers")?;
        let mut shapes = Vec::with_capacity(count);
        for _ in 0..count {
            let l = next("layer")?;
            let parts: Vec<&str> = l.split_whitespace().collect();
            if parts.len() != 4 || parts[0] != "layer" {
                return Err(Error::Format(format!("bad layer line {l:?}")));
            }
            let parse_dim = |s: &str| s.parse::<usize>().map_err(|e| Error::Format(format!("bad dim {s:?}: {e}")));
            shapes.push((parse_dim(parts[1])?, parse_dim(parts[2])?, Activation::from_tag(parts[3])?));
        }
        let step: u64 = parse_tagged(&next("adam_step")?, "adam_step")?;

        let mut layers = Vec::with_capacity(count);
        let mut moments = Vec::with_capacity(count);
        for &(fan_in, fan_out, activation) in &shapes {
            let w = parse_values(&next("w")?, "w", fan_in * fan_out)?;
            let b = parse_values(&next("b")?, "b", fan_out)?;
            let mw = parse_values(&next("mw")?, "mw", fan_in * fan_out)?;
            let mb = parse_values(&next("mb")?, "mb", fan_out)?;
            let vw = parse_values(&next("vw")?, "vw", fan_in * fan_out)?;
            let vb = parse_values(&next("vb")?, "vb", fan_out)?;
            let shape = (fan_out, fan_in);
            let to2 = |v: Vec<f64>| Array2::from_shape_vec(shape, v).expect("length checked");
            layers.push(Layer {
                weights: to2(w),
                bias: Array1::from(b),
                activation,
            });
            moments.push((to2(mw), Array1::from(mb), to2(vw), Array1::from(vb)));
        }
        let mut net = DenseNet::from_layers(layers)?;
        net.adam.step = step;
        for (i, (mw, mb, vw, vb)) in moments.into_iter().enumerate() {
            net.adam.first_moment.weights[i] = mw;
            net.adam.first_moment.biases[i] = mb;
            net.adam.second_moment.weights[i] = vw;
            net.adam.second_moment.biases[i] = vb;
        }
        Ok(net)
    }

    pub fn save_to_path(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.save(std::io::BufWriter::new(file))
    }

    pub fn load_from_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::load(std::io::BufReader::new(file))
    }
}

fn parse_tagged<T: std::str::FromStr>(line: &str, tag: &str) -> Result<T> {
    let mut parts = line.split_whitespace();
    match (parts.next(), parts.next(), parts.next()) {
        (Some(t), Some(v), None) if t == tag => v
            .parse()
            .map_err(|_| Error::Format(format!("bad value in {line:?}"))),
        _ => Err(Error::Format(format!("expected `{tag} <value>`, got {line:?}"))),
    }
}

fn parse_values(line: &str, tag: &str, expected: usize) -> Result<Vec<f64>> {
    let mut parts = line.split_whitespace();
    if parts.next() != Some(tag) {
        return Err(Error::Format(format!("expected `{tag}` row")));
    }
    let values = parts
        .map(|s| s.parse::<f64>().map_err(|e| Error::Format(format!("bad number {s:?}: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    if values.len() != expected {
        return Err(Error::Format(format!(
            "`{tag}` row has {} values, expected {expected}",
            values.len()
        )));
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn single(weights: Array2<f64>, bias: Array1<f64>, activation: Activation) -> DenseNet {
        DenseNet::from_layers(vec![Layer {
            weights,
            bias,
            activation,
        }])
        .unwrap()
    }

    fn random_net(seed: u64) -> DenseNet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseNet::new(&[3, 5, 4, 2], &[Activation::Tanh, Activation::Relu, Activation::Linear], &mut rng).unwrap()
    }

    #[test]
    fn forward_examples() {
        let id = single(Array2::eye(2), Array1::zeros(2), Activation::Linear);
        let (y, _) = id.forward(array![[3.0, -4.0]].view()).unwrap();
        assert_eq!(y, array![[3.0, -4.0]]);

        let relu = single(Array2::eye(2), Array1::zeros(2), Activation::Relu);
        assert_eq!(relu.predict_one(&[-1.0, 2.0]).unwrap(), vec![0.0, 2.0]);

        let tanh = single(Array2::zeros((3, 2)), Array1::zeros(3), Activation::Tanh);
        assert_eq!(tanh.predict_one(&[7.0, -9.0]).unwrap(), vec![0.0; 3]);

        assert!(matches!(id.forward(array![[1.0, 2.0, 3.0]].view()), Err(Error::Dimension { .. })));
    }

    #[test]
    fn linear_layer_gradient() {
        let net = single(array![[1.0, 2.0], [3.0, 4.0]], array![0.5, -0.5], Activation::Linear);
        let x = array![[0.7, -1.3]];
        let (_, cache) = net.forward(x.view()).unwrap();
        let (g, gin) = net.backward(&cache, array![[1.0, 0.0]].view()).unwrap();
        assert_eq!(g.weights[0], array![[0.7, -1.3], [0.0, 0.0]]);
        assert_eq!(g.biases[0], array![1.0, 0.0]);
        assert_eq!(gin, array![[1.0, 2.0]]);
    }

    #[test]
    fn zero_output_gradient_gives_zero_gradients() {
        let net = random_net(1);
        let (_, cache) = net.forward(array![[0.1, 0.2, 0.3], [-1.0, 0.0, 2.0]].view()).unwrap();
        let (g, gin) = net.backward(&cache, Array2::zeros((2, 2)).view()).unwrap();
        assert!(g.flatten().iter().all(|&x| x == 0.0));
        assert!(gin.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn backward_rejects_mismatched_cache() {
        let a = random_net(1);
        let b = DenseNet::new(&[4, 2], &[Activation::Linear], &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let (_, cache) = b.forward(array![[1.0, 2.0, 3.0, 4.0]].view()).unwrap();
        assert!(matches!(a.backward(&cache, array![[1.0, 1.0]].view()), Err(Error::State(_))));
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut net = random_net(7);
        let x = array![[0.3, -0.8, 1.1], [0.9, 0.2, -0.4]];
        let w = array![[0.6, -1.4], [0.25, 0.8]];
        let loss = |n: &DenseNet| (n.predict(x.view()).unwrap() * &w).sum();
        let (_, cache) = net.forward(x.view()).unwrap();
        let (g, _) = net.backward(&cache, w.view()).unwrap();
        let analytic = g.flatten();
        let base = net.params();
        let h = 1e-5;
        for i in 0..base.len() {
            let mut p = base.clone();
            p[i] += h;
            net.set_params(&p).unwrap();
            let up = loss(&net);
            p[i] -= 2.0 * h;
            net.set_params(&p).unwrap();
            let down = loss(&net);
            let numeric = (up - down) / (2.0 * h);
            let err = (numeric - analytic[i]).abs() / numeric.abs().max(analytic[i].abs()).max(1e-6);
            assert!(err < 1e-4, "param {i}: numeric {numeric} analytic {}", analytic[i]);
        }
    }

    #[test]
    fn first_adam_step_is_sign_like() {
        for g in [0.3, -2.0, 1e-3] {
            let mut net = single(array![[1.0]], array![0.0], Activation::Linear);
            let grads = Gradients {
                weights: vec![array![[g]]],
                biases: vec![array![0.0]],
            };
            net.adam_step(&grads, 0.01, AdamConfig::default()).unwrap();
            let moved = net.layers()[0].weights[[0, 0]] - 1.0;
            let expected = -0.01 * g / (g.abs() + 1e-8);
            assert!((moved - expected).abs() < 1e-12, "g = {g}: moved {moved}");
            assert_eq!(net.layers()[0].bias[0], 0.0);
            assert_eq!(net.adam_state().step, 1);
        }
    }

    #[test]
    fn adam_no_ops() {
        let mut net = random_net(3);
        let before = net.params();
        let zero = Gradients::zeros_like(&net);
        net.adam_step(&zero, 0.1, AdamConfig::default()).unwrap();
        assert_eq!(net.params(), before);

        let (_, cache) = net.forward(array![[1.0, 2.0, 3.0]].view()).unwrap();
        let (g, _) = net.backward(&cache, array![[1.0, -1.0]].view()).unwrap();
        net.adam_step(&g, 0.0, AdamConfig::default()).unwrap();
        assert_eq!(net.params(), before);
        assert_eq!(net.adam_state().step, 2);
    }

    #[test]
    fn adam_rejects_non_finite() {
        let mut net = random_net(3);
        let before = net.clone();
        let mut g = Gradients::zeros_like(&net);
        g.biases[1][0] = f64::NAN;
        assert!(matches!(net.adam_step(&g, 0.1, AdamConfig::default()), Err(Error::NonFinite(_))));
        assert_eq!(net, before);
    }

    #[test]
    fn soft_update_examples() {
        let main = single(array![[1.0]], array![1.0], Activation::Linear);
        let mut target = single(array![[0.0]], array![0.0], Activation::Linear);
        target.soft_update(&main, 0.05).unwrap();
        assert_eq!(target.params(), vec![0.05, 0.05]);

        let main = random_net(1);
        let mut target = random_net(2);
        let before = target.clone();
        target.soft_update(&main, 0.0).unwrap();
        assert_eq!(target, before);
        target.soft_update(&main, 1.0).unwrap();
        assert_eq!(target.params(), main.params());

        let other = DenseNet::new(&[3, 2], &[Activation::Linear], &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(target.soft_update(&other, 0.5).is_err());
        assert!(target.soft_update(&main, 1.5).is_err());
    }

    #[test]
    fn soft_update_contracts_toward_main() {
        let main = random_net(1);
        let mut target = random_net(2);
        let tau = 0.3;
        let gap_before: Vec<f64> = target.params().iter().zip(main.params()).map(|(t, m)| t - m).collect();
        target.soft_update(&main, tau).unwrap();
        for ((t, m), gap) in target.params().iter().zip(main.params()).zip(gap_before) {
            assert!(((t - m) - (1.0 - tau) * gap).abs() < 1e-15);
        }
    }

    #[test]
    fn save_load_round_trip() {
        let mut net = random_net(5);
        let (_, cache) = net.forward(array![[1.0, 2.0, 3.0]].view()).unwrap();
        let (g, _) = net.backward(&cache, array![[0.5, -1.0]].view()).unwrap();
        net.adam_step(&g, 1e-3, AdamConfig::default()).unwrap();
        let mut buf = Vec::new();
        net.save(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("irs-noma-densenet v1\nlayers 3\nlayer 3 5 tanh\n"));
        let loaded = DenseNet::load(buf.as_slice()).unwrap();
        assert_eq!(loaded, net);

        assert!(DenseNet::load("bogus\n".as_bytes()).is_err());
        let truncated = &text[..text.len() / 2];
        assert!(DenseNet::load(truncated.as_bytes()).is_err());
    }

    #[test]
    fn init_respects_fan_in_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let net = DenseNet::new(&[16, 8], &[Activation::Relu], &mut rng).unwrap();
        assert!(net.params().iter().all(|p| p.abs() <= 0.25));
        assert!(DenseNet::new(&[4], &[], &mut rng).is_err());
        assert!(DenseNet::new(&[4, 0], &[Activation::Relu], &mut rng).is_err());
    }
}
