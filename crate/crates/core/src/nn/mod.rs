//! Neural-network forward/backward engine.
//!
//! Layers operate on flat `f64` buffers with shapes tracked separately.
//! Parameters for all layers live in one flat [`ParameterVector`] so the
//! optimizer can treat the whole network as a single vector. Gradients are
//! exact analytic derivatives, summed (not averaged) over the minibatch.

pub mod conv;
pub mod dense;
pub mod loss;
pub mod pool;
pub mod relu;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, XorShift64Star};
use crate::shape::Shape;

pub use loss::{softmax, softmax_cross_entropy};

/// One layer of the network.
///
/// Convolutions are stride-1 valid convolutions with square kernels;
/// max-pooling is fixed to 2x2 windows with stride 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LayerSpec {
    Dense {
        in_dim: usize,
        out_dim: usize,
    },
    Conv2D {
        in_channels: usize,
        out_channels: usize,
        kernel_size: usize,
    },
    MaxPool2D,
    ReLU,
    Flatten,
}

impl LayerSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            LayerSpec::Dense { .. } => "Dense",
            LayerSpec::Conv2D { .. } => "Conv2D",
            LayerSpec::MaxPool2D => "MaxPool2D",
            LayerSpec::ReLU => "ReLU",
            LayerSpec::Flatten => "Flatten",
        }
    }

    /// Number of parameters (weights + biases) this layer owns.
    pub fn param_count(&self) -> usize {
        match *self {
            LayerSpec::Dense { in_dim, out_dim } => in_dim * out_dim + out_dim,
            LayerSpec::Conv2D {
                in_channels,
                out_channels,
                kernel_size,
            } => out_channels * in_channels * kernel_size * kernel_size + out_channels,
            _ => 0,
        }
    }

    /// Fan-in used for weight initialization; zero for parameter-free layers.
    fn fan_in(&self) -> usize {
        match *self {
            LayerSpec::Dense { in_dim, .. } => in_dim,
            LayerSpec::Conv2D {
                in_channels,
                kernel_size,
                ..
            } => in_channels * kernel_size * kernel_size,
            _ => 0,
        }
    }

    /// Output shape for the given input shape, or an error describing the
    /// mismatch.
    pub fn output_shape(&self, input: Shape) -> Result<Shape> {
        match *self {
            LayerSpec::Dense { in_dim, out_dim } => {
                if in_dim == 0 || out_dim == 0 {
                    return Err(Error::Config("Dense dims must be positive".into()));
                }
                match input {
                    Shape::Flat(d) if d == in_dim => Ok(Shape::Flat(out_dim)),
                    other => Err(Error::Config(format!(
                        "Dense expects flat input of size {in_dim}, got {other}"
                    ))),
                }
            }
            LayerSpec::Conv2D {
                in_channels,
                out_channels,
                kernel_size,
            } => {
                if in_channels == 0 || out_channels == 0 || kernel_size == 0 {
                    return Err(Error::Config("Conv2D dims must be positive".into()));
                }
                match input {
                    Shape::Image {
                        channels,
                        height,
                        width,
                    } if channels == in_channels => {
                        if kernel_size > height || kernel_size > width {
                            return Err(Error::Config(format!(
                                "Conv2D kernel {kernel_size}x{kernel_size} larger than \
                                 input {height}x{width}"
                            )));
                        }
                        let (h, w) = conv::output_dims(height, width, kernel_size);
                        Ok(Shape::Image {
                            channels: out_channels,
                            height: h,
                            width: w,
                        })
                    }
                    other => Err(Error::Config(format!(
                        "Conv2D expects image input with {in_channels} channels, got {other}"
                    ))),
                }
            }
            LayerSpec::MaxPool2D => match input {
                Shape::Image {
                    channels,
                    height,
                    width,
                } => {
                    if height < 2 || width < 2 {
                        return Err(Error::Config(format!(
                            "MaxPool2D kernel 2x2 larger than input {height}x{width}"
                        )));
                    }
                    let (h, w) = pool::output_dims(height, width);
                    Ok(Shape::Image {
                        channels,
                        height: h,
                        width: w,
                    })
                }
                other => Err(Error::Config(format!(
                    "MaxPool2D expects image input, got flat {other}"
                ))),
            },
            LayerSpec::ReLU => Ok(input),
            LayerSpec::Flatten => Ok(Shape::Flat(input.len())),
        }
    }
}

/// Flat 64-bit parameter storage for all layers.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector {
    values: Vec<f64>,
}

impl ParameterVector {
    pub fn from_vec(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Errors if any entry is NaN or infinite.
    pub fn check_finite(&self, context: &str) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(i) => Err(Error::Divergence(format!(
                "non-finite parameter at index {i} {context}"
            ))),
        }
    }
}

/// Flat gradient with the same layout as [`ParameterVector`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradientVector {
    values: Vec<f64>,
}

impl GradientVector {
    pub fn zeros(len: usize) -> Self {
        Self {
            values: vec![0.0; len],
        }
    }

    pub fn from_vec(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn check_finite(&self, context: &str) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(i) => Err(Error::Divergence(format!(
                "non-finite gradient at index {i} {context}"
            ))),
        }
    }
}

/// Cached activations from one forward call, consumed by [`Network::backward`].
///
/// `activations[l]` holds the batch inputs to layer `l`; the final entry is
/// the logits. The pass remembers the parameter version it was computed
/// under, so a backward call against updated parameters is rejected.
pub struct ForwardPass {
    batch_len: usize,
    activations: Vec<Vec<f64>>,
    params_version: u64,
}

impl ForwardPass {
    pub fn batch_len(&self) -> usize {
        self.batch_len
    }

    /// Logits for the whole batch, row-major `(batch, num_classes)`.
    pub fn logits(&self) -> &[f64] {
        self.activations.last().expect("network has layers")
    }

    /// Logits for one example.
    pub fn logits_for(&self, example: usize) -> &[f64] {
        let c = self.logits().len() / self.batch_len;
        &self.logits()[example * c..(example + 1) * c]
    }
}

/// A feed-forward network: layer specs, shape chain, and flat parameters.
#[derive(Debug, Clone)]
pub struct Network {
    layers: Vec<LayerSpec>,
    /// Shape at each layer boundary; `shapes[0]` is the input shape and
    /// `shapes[layers.len()]` the logit shape.
    shapes: Vec<Shape>,
    /// Parameter offset of each layer; one extra entry holding the total.
    offsets: Vec<usize>,
    params: ParameterVector,
    params_version: u64,
}

impl Network {
    /// Builds a network and initializes its parameters.
    ///
    /// Weights are drawn uniformly from `[-1/sqrt(fan_in), 1/sqrt(fan_in))`
    /// using the crate's xorshift64* generator on the `INIT` stream; biases
    /// start at zero. Identical `(input_shape, specs, seed)` yield bitwise
    /// identical parameters.
    pub fn new(input_shape: Shape, specs: &[LayerSpec], seed: u64) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::Config("network needs at least one layer".into()));
        }
        if input_shape.is_empty() {
            return Err(Error::Config("input shape must be non-empty".into()));
        }
        let mut shapes = Vec::with_capacity(specs.len() + 1);
        shapes.push(input_shape);
        for (i, spec) in specs.iter().enumerate() {
            let out = spec.output_shape(shapes[i]).map_err(|e| {
                let upstream = if i == 0 {
                    "network input".to_string()
                } else {
                    format!("layer {} ({})", i - 1, specs[i - 1].kind_name())
                };
                Error::Config(format!(
                    "layer {i} ({}) does not chain with {upstream}: {e}",
                    spec.kind_name()
                ))
            })?;
            shapes.push(out);
        }
        match *shapes.last().expect("non-empty") {
            Shape::Flat(c) if c >= 2 => {}
            other => {
                return Err(Error::Config(format!(
                    "network must end in a flat logit vector of >= 2 classes, got {other}"
                )))
            }
        }

        let mut offsets = Vec::with_capacity(specs.len() + 1);
        let mut total = 0;
        for spec in specs {
            offsets.push(total);
            total += spec.param_count();
        }
        offsets.push(total);

        let mut values = vec![0.0; total];
        let mut rng = XorShift64Star::new(rng::derive_seed(seed, rng::stream::INIT));
        for (i, spec) in specs.iter().enumerate() {
            let weight_count = spec.param_count().saturating_sub(bias_count(spec));
            if weight_count == 0 {
                continue;
            }
            let bound = 1.0 / (spec.fan_in() as f64).sqrt();
            for w in &mut values[offsets[i]..offsets[i] + weight_count] {
                *w = rng.next_range(-bound, bound);
            }
        }
        let params = ParameterVector::from_vec(values);
        params.check_finite("after initialization")?;

        Ok(Self {
            layers: specs.to_vec(),
            shapes,
            offsets,
            params,
            params_version: 0,
        })
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn input_shape(&self) -> Shape {
        self.shapes[0]
    }

    pub fn num_classes(&self) -> usize {
        self.shapes.last().expect("non-empty").len()
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &ParameterVector {
        &self.params
    }

    /// Mutable parameter access. Invalidates every outstanding
    /// [`ForwardPass`].
    pub fn params_mut(&mut self) -> &mut ParameterVector {
        self.params_version += 1;
        &mut self.params
    }

    /// Parameter slice for one layer (weights then biases).
    pub fn layer_params(&self, layer: usize) -> &[f64] {
        &self.params.values()[self.offsets[layer]..self.offsets[layer + 1]]
    }

    /// Runs the batch through the network, caching every intermediate
    /// activation. `features` is row-major `(batch, input_len)`.
    pub fn forward(&self, features: &[f64]) -> Result<ForwardPass> {
        let input_len = self.shapes[0].len();
        if features.is_empty() || features.len() % input_len != 0 {
            return Err(Error::Config(format!(
                "batch buffer of {} values is not a non-empty multiple of input size {input_len}",
                features.len()
            )));
        }
        let n = features.len() / input_len;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(features.to_vec());
        for (l, spec) in self.layers.iter().enumerate() {
            let in_shape = self.shapes[l];
            let out_shape = self.shapes[l + 1];
            let (in_len, out_len) = (in_shape.len(), out_shape.len());
            let mut out = vec![0.0; n * out_len];
            let input = &activations[l];
            for ex in 0..n {
                let x = &input[ex * in_len..(ex + 1) * in_len];
                let y = &mut out[ex * out_len..(ex + 1) * out_len];
                self.forward_one(*spec, l, in_shape, x, y);
            }
            activations.push(out);
        }
        Ok(ForwardPass {
            batch_len: n,
            activations,
            params_version: self.params_version,
        })
    }

    fn forward_one(&self, spec: LayerSpec, layer: usize, in_shape: Shape, x: &[f64], y: &mut [f64]) {
        match spec {
            LayerSpec::Dense { in_dim, out_dim } => {
                let p = self.layer_params(layer);
                let (w, b) = p.split_at(in_dim * out_dim);
                dense::forward(w, b, in_dim, out_dim, x, y);
            }
            LayerSpec::Conv2D {
                in_channels,
                out_channels,
                kernel_size,
            } => {
                let (in_h, in_w) = image_dims(in_shape);
                let p = self.layer_params(layer);
                let (w, b) = p.split_at(p.len() - out_channels);
                conv::forward(w, b, in_channels, out_channels, kernel_size, in_h, in_w, x, y);
            }
            LayerSpec::MaxPool2D => {
                let (h, w) = image_dims(in_shape);
                let c = in_shape.len() / (h * w);
                pool::forward(c, h, w, x, y);
            }
            LayerSpec::ReLU => relu::forward(x, y),
            LayerSpec::Flatten => y.copy_from_slice(x),
        }
    }

    /// Backpropagates per-example logit gradients and returns the SUM over
    /// the batch of per-example parameter gradients.
    ///
    /// `dlogits` is row-major `(batch, num_classes)` and must come from the
    /// same parameters the pass was computed with. Examples are processed
    /// in ascending index order and accumulated into a single buffer, so
    /// the reduction order (and therefore the result) is bitwise fixed.
    pub fn backward(&self, pass: &ForwardPass, dlogits: &[f64]) -> Result<GradientVector> {
        if pass.params_version != self.params_version {
            return Err(Error::Config(
                "stale forward cache: parameters changed since the forward call".into(),
            ));
        }
        let c = self.num_classes();
        if dlogits.len() != pass.batch_len * c {
            return Err(Error::Config(format!(
                "dlogits has {} values, expected {} ({} examples x {c} classes)",
                dlogits.len(),
                pass.batch_len * c,
                pass.batch_len
            )));
        }
        let mut grad = vec![0.0; self.param_count()];
        let max_len = self.shapes.iter().map(Shape::len).max().expect("non-empty");
        let mut dcur = vec![0.0; max_len];
        let mut dprev = vec![0.0; max_len];
        for ex in 0..pass.batch_len {
            dcur[..c].copy_from_slice(&dlogits[ex * c..(ex + 1) * c]);
            for l in (0..self.layers.len()).rev() {
                let in_shape = self.shapes[l];
                let (in_len, out_len) = (in_shape.len(), self.shapes[l + 1].len());
                let x = &pass.activations[l][ex * in_len..(ex + 1) * in_len];
                let spec = self.layers[l];
                self.backward_one(
                    spec,
                    l,
                    in_shape,
                    x,
                    &dcur[..out_len],
                    &mut grad,
                    &mut dprev[..in_len],
                );
                std::mem::swap(&mut dcur, &mut dprev);
            }
        }
        Ok(GradientVector::from_vec(grad))
    }

    #[allow(clippy::too_many_arguments)]
    fn backward_one(
        &self,
        spec: LayerSpec,
        layer: usize,
        in_shape: Shape,
        x: &[f64],
        dout: &[f64],
        grad: &mut [f64],
        dinput: &mut [f64],
    ) {
        let (start, end) = (self.offsets[layer], self.offsets[layer + 1]);
        match spec {
            LayerSpec::Dense { in_dim, out_dim } => {
                let p = self.layer_params(layer);
                let (w, _) = p.split_at(in_dim * out_dim);
                let (dw, db) = grad[start..end].split_at_mut(in_dim * out_dim);
                dense::backward(w, in_dim, out_dim, x, dout, dw, db, dinput);
            }
            LayerSpec::Conv2D {
                in_channels,
                out_channels,
                kernel_size,
            } => {
                let (in_h, in_w) = image_dims(in_shape);
                let p = self.layer_params(layer);
                let split = p.len() - out_channels;
                let (w, _) = p.split_at(split);
                let (dw, db) = grad[start..end].split_at_mut(split);
                conv::backward(
                    w,
                    in_channels,
                    out_channels,
                    kernel_size,
                    in_h,
                    in_w,
                    x,
                    dout,
                    dw,
                    db,
                    dinput,
                );
            }
            LayerSpec::MaxPool2D => {
                let (h, w) = image_dims(in_shape);
                let c = in_shape.len() / (h * w);
                pool::backward(c, h, w, x, dout, dinput);
            }
            LayerSpec::ReLU => relu::backward(x, dout, dinput),
            LayerSpec::Flatten => dinput.copy_from_slice(dout),
        }
    }
}

fn bias_count(spec: &LayerSpec) -> usize {
    match *spec {
        LayerSpec::Dense { out_dim, .. } => out_dim,
        LayerSpec::Conv2D { out_channels, .. } => out_channels,
        _ => 0,
    }
}

fn image_dims(shape: Shape) -> (usize, usize) {
    match shape {
        Shape::Image { height, width, .. } => (height, width),
        Shape::Flat(_) => unreachable!("validated at construction"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_net(seed: u64) -> Network {
        Network::new(
            Shape::Flat(4),
            &[
                LayerSpec::Dense { in_dim: 4, out_dim: 5 },
                LayerSpec::ReLU,
                LayerSpec::Dense { in_dim: 5, out_dim: 3 },
            ],
            seed,
        )
        .unwrap()
    }

    #[test]
    fn param_count_and_init_bounds() {
        let net = Network::new(
            Shape::Flat(4),
            &[LayerSpec::Dense { in_dim: 4, out_dim: 3 }],
            7,
        )
        .unwrap();
        assert_eq!(net.param_count(), 15);
        let p = net.params().values();
        // 12 weights bounded by 1/sqrt(4), then 3 zero biases.
        for &w in &p[..12] {
            assert!(w.abs() <= 0.5, "weight {w} out of bound");
        }
        assert_eq!(&p[12..], &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn same_seed_bitwise_identical_params() {
        let a = dense_net(123);
        let b = dense_net(123);
        assert_eq!(a.params().values(), b.params().values());
        let c = dense_net(124);
        assert_ne!(a.params().values(), c.params().values());
    }

    #[test]
    fn uniform_init_mean_is_near_zero() {
        // 100 -> 10 layer: 1000 weights bounded by 0.1.
        let net = Network::new(
            Shape::Flat(100),
            &[LayerSpec::Dense { in_dim: 100, out_dim: 10 }],
            99,
        )
        .unwrap();
        let w = &net.params().values()[..1000];
        let mean: f64 = w.iter().sum::<f64>() / 1000.0;
        assert!(mean.abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn shape_chain_mismatch_names_both_layers() {
        let err = Network::new(
            Shape::Flat(4),
            &[
                LayerSpec::Dense { in_dim: 4, out_dim: 5 },
                LayerSpec::Dense { in_dim: 6, out_dim: 3 },
            ],
            0,
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("layer 1 (Dense)"), "{msg}");
        assert!(msg.contains("layer 0 (Dense)"), "{msg}");
    }

    #[test]
    fn zero_params_give_zero_logits() {
        let mut net = dense_net(5);
        net.params_mut().values_mut().fill(0.0);
        let pass = net.forward(&[1.0, -2.0, 3.0, 0.5]).unwrap();
        assert_eq!(pass.logits(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn forward_is_deterministic() {
        let net = dense_net(5);
        let batch = [0.1, 0.2, 0.3, 0.4, -1.0, 2.0, -3.0, 4.0];
        let a = net.forward(&batch).unwrap();
        let b = net.forward(&batch).unwrap();
        assert_eq!(a.logits(), b.logits());
        assert_eq!(a.batch_len(), 2);
    }

    #[test]
    fn stale_cache_is_rejected() {
        let mut net = dense_net(5);
        let pass = net.forward(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        net.params_mut().values_mut()[0] += 1.0;
        let dlogits = vec![0.0; 3];
        let err = net.backward(&pass, &dlogits).unwrap_err();
        assert!(err.to_string().contains("stale"), "{err}");
    }

    #[test]
    fn zero_dlogits_give_zero_gradient() {
        let net = dense_net(5);
        let pass = net.forward(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        let grad = net.backward(&pass, &[0.0, 0.0, 0.0]).unwrap();
        assert!(grad.values().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn duplicated_example_doubles_the_gradient() {
        let net = dense_net(5);
        let x = [1.0, -0.5, 0.25, 2.0];
        let single = net.forward(&x).unwrap();
        let (_, dlog) = softmax_cross_entropy(single.logits(), 1).unwrap();
        let g1 = net.backward(&single, &dlog).unwrap();

        let mut xx = x.to_vec();
        xx.extend_from_slice(&x);
        let double = net.forward(&xx).unwrap();
        let mut dlog2 = dlog.clone();
        dlog2.extend_from_slice(&dlog);
        let g2 = net.backward(&double, &dlog2).unwrap();

        for (a, b) in g1.values().iter().zip(g2.values()) {
            assert_eq!(2.0 * a, *b);
        }
    }

    #[test]
    fn gradient_is_additive_across_batches() {
        let net = dense_net(11);
        let a = [1.0, 2.0, -1.0, 0.5];
        let b = [-2.0, 0.1, 0.7, 3.0];
        let mut ab = a.to_vec();
        ab.extend_from_slice(&b);

        let dl = |pass: &ForwardPass, ex: usize, label: usize| {
            softmax_cross_entropy(pass.logits_for(ex), label).unwrap().1
        };

        let pa = net.forward(&a).unwrap();
        let ga = net.backward(&pa, &dl(&pa, 0, 0)).unwrap();
        let pb = net.forward(&b).unwrap();
        let gb = net.backward(&pb, &dl(&pb, 0, 2)).unwrap();

        let pab = net.forward(&ab).unwrap();
        let mut dlog = dl(&pab, 0, 0);
        dlog.extend(dl(&pab, 1, 2));
        let gab = net.backward(&pab, &dlog).unwrap();

        for i in 0..gab.len() {
            assert_eq!(gab.values()[i], ga.values()[i] + gb.values()[i]);
        }
    }

    #[test]
    fn conv_pool_network_shapes_chain() {
        let net = Network::new(
            Shape::Image {
                channels: 1,
                height: 8,
                width: 8,
            },
            &[
                LayerSpec::Conv2D {
                    in_channels: 1,
                    out_channels: 2,
                    kernel_size: 3,
                },
                LayerSpec::ReLU,
                LayerSpec::MaxPool2D,
                LayerSpec::Flatten,
                LayerSpec::Dense { in_dim: 18, out_dim: 4 },
            ],
            3,
        )
        .unwrap();
        // conv: 8 -> 6, pool: 6 -> 3, flatten: 2*3*3 = 18
        assert_eq!(net.num_classes(), 4);
        let input = vec![0.5; 64];
        let pass = net.forward(&input).unwrap();
        assert_eq!(pass.logits().len(), 4);
    }

    #[test]
    fn kernel_larger_than_input_is_rejected() {
        let err = Network::new(
            Shape::Image {
                channels: 1,
                height: 2,
                width: 2,
            },
            &[
                LayerSpec::Conv2D {
                    in_channels: 1,
                    out_channels: 1,
                    kernel_size: 3,
                },
                LayerSpec::Flatten,
                LayerSpec::Dense { in_dim: 0, out_dim: 2 },
            ],
            0,
        )
        .unwrap_err();
        assert!(err.to_string().contains("kernel"), "{err}");
    }
}
