//! Minimal dense function approximator with exact reverse-mode gradients.
//!
//! The architecture is fixed at two rectified-linear hidden layers with an
//! identity output; the hidden width is configurable. This single shape backs
//! every parameterized function in the crate: policy action means, the task
//! reward head, the per-strategy reward heads, and the shaping potential.
//!
//! All arithmetic is `f64`. Forward and backward are pure functions of their
//! arguments; the adaptive-moment update keeps its state in an [`Adam`]
//! struct owned by whichever training loop uses it.

use std::io::{Read as _, Write as _};
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// One dense layer: row-major `out_dim x in_dim` weights plus a bias vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Dense {
    fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Dense {
            weights: vec![0.0; in_dim * out_dim],
            biases: vec![0.0; out_dim],
            in_dim,
            out_dim,
        }
    }

    fn init_uniform(in_dim: usize, out_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        // Uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)], biases zero.
        let bound = 1.0 / (in_dim as f64).sqrt();
        let mut layer = Dense::zeros(in_dim, out_dim);
        for w in layer.weights.iter_mut() {
            *w = rng.random_range(-bound..=bound);
        }
        layer
    }

    /// y = W x + b, written into `out`.
    fn affine(&self, input: &[f64], out: &mut [f64]) {
        for (row, out_v) in out.iter_mut().enumerate() {
            let base = row * self.in_dim;
            let mut acc = self.biases[row];
            for (col, &x) in input.iter().enumerate() {
                acc += self.weights[base + col] * x;
            }
            *out_v = acc;
        }
    }

    fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.is_finite()) && self.biases.iter().all(|b| b.is_finite())
    }
}

/// Parameters of the input -> hidden -> hidden -> output network.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    layers: [Dense; 3],
}

/// Gradients, shape-congruent with an [`MlpParams`].
#[derive(Debug, Clone)]
pub struct GradBundle {
    layers: [Dense; 3],
}

pub const DEFAULT_HIDDEN: usize = 64;

impl MlpParams {
    /// Seeded initialization: weights uniform in +-1/sqrt(fan_in), biases zero.
    pub fn init(input: usize, hidden: usize, output: usize, seed: u64) -> Self {
        let mut rng = rng::derive_rng(seed, rng::Stream::PolicyInit, &[]);
        Self::init_with_rng(input, hidden, output, &mut rng)
    }

    pub fn init_with_rng(
        input: usize,
        hidden: usize,
        output: usize,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        assert!(input >= 1 && hidden >= 1 && output >= 1, "degenerate dims");
        MlpParams {
            layers: [
                Dense::init_uniform(input, hidden, rng),
                Dense::init_uniform(hidden, hidden, rng),
                Dense::init_uniform(hidden, output, rng),
            ],
        }
    }

    /// All-zero parameters (useful for tests and zeroed reward heads).
    pub fn zeros(input: usize, hidden: usize, output: usize) -> Self {
        MlpParams {
            layers: [
                Dense::zeros(input, hidden),
                Dense::zeros(hidden, hidden),
                Dense::zeros(hidden, output),
            ],
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.layers[0].out_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers[2].out_dim
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(Dense::is_finite)
    }

    pub fn layer(&self, i: usize) -> &Dense {
        &self.layers[i]
    }

    pub fn layer_mut(&mut self, i: usize) -> &mut Dense {
        &mut self.layers[i]
    }

    /// Flatten all parameters in layer order, weights before biases.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.biases);
        }
        out
    }

    /// Overwrite parameters from a flat vector produced by [`flatten`].
    ///
    /// [`flatten`]: MlpParams::flatten
    pub fn unflatten(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::Shape {
                context: "unflatten",
                expected: self.num_params(),
                actual: flat.len(),
            });
        }
        let mut at = 0;
        for l in self.layers.iter_mut() {
            let w_len = l.weights.len();
            l.weights.copy_from_slice(&flat[at..at + w_len]);
            at += w_len;
            let b_len = l.biases.len();
            l.biases.copy_from_slice(&flat[at..at + b_len]);
            at += b_len;
        }
        Ok(())
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_dim() {
            return Err(Error::Shape {
                context: "mlp input",
                expected: self.input_dim(),
                actual: input.len(),
            });
        }
        Ok(())
    }

    /// Forward pass. Pure: identical inputs give bit-identical outputs.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        let mut h1 = vec![0.0; self.hidden_dim()];
        self.layers[0].affine(input, &mut h1);
        relu_inplace(&mut h1);
        let mut h2 = vec![0.0; self.hidden_dim()];
        self.layers[1].affine(&h1, &mut h2);
        relu_inplace(&mut h2);
        let mut out = vec![0.0; self.output_dim()];
        self.layers[2].affine(&h2, &mut out);
        Ok(out)
    }

    /// Scalar-output convenience for reward heads.
    pub fn forward_scalar(&self, input: &[f64]) -> Result<f64> {
        let out = self.forward(input)?;
        debug_assert_eq!(out.len(), 1, "forward_scalar on non-scalar net");
        Ok(out[0])
    }

    /// Reverse-mode gradient of `upstream . output` with respect to every
    /// parameter. Recomputes the forward activations internally, so it is a
    /// pure function of `(self, input, upstream)`.
    pub fn backward(&self, input: &[f64], upstream: &[f64]) -> Result<GradBundle> {
        let mut grads = GradBundle::zeros_like(self);
        self.backward_into(input, upstream, &mut grads)?;
        Ok(grads)
    }

    /// As [`backward`], but accumulates into an existing bundle. Hot training
    /// loops use this to avoid reallocating per sample.
    ///
    /// [`backward`]: MlpParams::backward
    pub fn backward_into(
        &self,
        input: &[f64],
        upstream: &[f64],
        grads: &mut GradBundle,
    ) -> Result<()> {
        self.check_input(input)?;
        if upstream.len() != self.output_dim() {
            return Err(Error::Shape {
                context: "mlp upstream",
                expected: self.output_dim(),
                actual: upstream.len(),
            });
        }
        grads.check_congruent(self)?;

        // Forward, keeping pre-activations for the ReLU masks.
        let hidden = self.hidden_dim();
        let mut pre1 = vec![0.0; hidden];
        self.layers[0].affine(input, &mut pre1);
        let act1: Vec<f64> = pre1.iter().map(|&v| v.max(0.0)).collect();
        let mut pre2 = vec![0.0; hidden];
        self.layers[1].affine(&act1, &mut pre2);
        let act2: Vec<f64> = pre2.iter().map(|&v| v.max(0.0)).collect();

        // Output layer: d(out)/dW3 = upstream (x) act2.
        accumulate_layer(&mut grads.layers[2], upstream, &act2);
        let mut d_act2 = back_linear(&self.layers[2], upstream);
        relu_mask(&mut d_act2, &pre2);

        accumulate_layer(&mut grads.layers[1], &d_act2, &act1);
        let mut d_act1 = back_linear(&self.layers[1], &d_act2);
        relu_mask(&mut d_act1, &pre1);

        accumulate_layer(&mut grads.layers[0], &d_act1, input);
        Ok(())
    }
}

fn relu_inplace(v: &mut [f64]) {
    for x in v.iter_mut() {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

/// Zero the cotangent wherever the pre-activation was clipped.
fn relu_mask(cotangent: &mut [f64], pre: &[f64]) {
    for (c, &p) in cotangent.iter_mut().zip(pre.iter()) {
        if p <= 0.0 {
            *c = 0.0;
        }
    }
}

/// grads += d_out (x) input for weights, d_out for biases.
fn accumulate_layer(grads: &mut Dense, d_out: &[f64], input: &[f64]) {
    for (row, &d) in d_out.iter().enumerate() {
        if d == 0.0 {
            continue;
        }
        let base = row * grads.in_dim;
        for (col, &x) in input.iter().enumerate() {
            grads.weights[base + col] += d * x;
        }
        grads.biases[row] += d;
    }
}

/// W^T d_out: cotangent with respect to the layer input.
fn back_linear(layer: &Dense, d_out: &[f64]) -> Vec<f64> {
    let mut d_in = vec![0.0; layer.in_dim];
    for (row, &d) in d_out.iter().enumerate() {
        if d == 0.0 {
            continue;
        }
        let base = row * layer.in_dim;
        for (col, d_in_v) in d_in.iter_mut().enumerate() {
            *d_in_v += layer.weights[base + col] * d;
        }
    }
    d_in
}

impl GradBundle {
    pub fn zeros_like(params: &MlpParams) -> Self {
        GradBundle {
            layers: [
                Dense::zeros(params.layers[0].in_dim, params.layers[0].out_dim),
                Dense::zeros(params.layers[1].in_dim, params.layers[1].out_dim),
                Dense::zeros(params.layers[2].in_dim, params.layers[2].out_dim),
            ],
        }
    }

    pub fn layer(&self, i: usize) -> &Dense {
        &self.layers[i]
    }

    fn check_congruent(&self, params: &MlpParams) -> Result<()> {
        for (g, p) in self.layers.iter().zip(params.layers.iter()) {
            if g.in_dim != p.in_dim || g.out_dim != p.out_dim {
                return Err(Error::Shape {
                    context: "grad bundle congruence",
                    expected: p.in_dim * p.out_dim,
                    actual: g.in_dim * g.out_dim,
                });
            }
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(Dense::is_finite)
    }

    pub fn scale(&mut self, factor: f64) {
        for l in self.layers.iter_mut() {
            for w in l.weights.iter_mut() {
                *w *= factor;
            }
            for b in l.biases.iter_mut() {
                *b *= factor;
            }
        }
    }

    pub fn add(&mut self, other: &GradBundle) {
        for (a, b) in self.layers.iter_mut().zip(other.layers.iter()) {
            for (x, y) in a.weights.iter_mut().zip(b.weights.iter()) {
                *x += y;
            }
            for (x, y) in a.biases.iter_mut().zip(b.biases.iter()) {
                *x += y;
            }
        }
    }

    /// Add `coef * w` for every weight entry (L2 penalty gradient). Biases
    /// are not decayed.
    pub fn add_weight_penalty(&mut self, params: &MlpParams, coef: f64) {
        for (g, p) in self.layers.iter_mut().zip(params.layers.iter()) {
            for (gw, pw) in g.weights.iter_mut().zip(p.weights.iter()) {
                *gw += coef * pw;
            }
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.biases);
        }
        out
    }

    pub fn l2_norm(&self) -> f64 {
        self.flatten().iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Settings for the adaptive-moment update rule.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn with_lr(learning_rate: f64) -> Self {
        AdamConfig {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adaptive-moment optimizer state, keyed to one parameter set.
#[derive(Debug, Clone)]
pub struct Adam {
    config: AdamConfig,
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
    step_count: u64,
}

impl Adam {
    pub fn new(params: &MlpParams, config: AdamConfig) -> Result<Self> {
        if !(config.learning_rate > 0.0) {
            return Err(Error::invalid("learning rate must be > 0"));
        }
        Ok(Adam {
            config,
            first_moment: vec![0.0; params.num_params()],
            second_moment: vec![0.0; params.num_params()],
            step_count: 0,
        })
    }

    pub fn config(&self) -> AdamConfig {
        self.config
    }

    /// One descent step. Rejects non-finite gradients without touching the
    /// parameters or moments.
    pub fn step(&mut self, params: &mut MlpParams, grads: &GradBundle) -> Result<()> {
        grads.check_congruent(params)?;
        if !grads.is_finite() {
            return Err(Error::NonFinite("gradient entries in adam step"));
        }
        let flat_grads = grads.flatten();
        let mut flat = params.flatten();
        self.step_count += 1;
        let t = self.step_count as i32;
        let (b1, b2) = (self.config.beta1, self.config.beta2);
        let bias1 = 1.0 - b1.powi(t);
        let bias2 = 1.0 - b2.powi(t);
        for i in 0..flat.len() {
            let g = flat_grads[i];
            self.first_moment[i] = b1 * self.first_moment[i] + (1.0 - b1) * g;
            self.second_moment[i] = b2 * self.second_moment[i] + (1.0 - b2) * g * g;
            let m_hat = self.first_moment[i] / bias1;
            let v_hat = self.second_moment[i] / bias2;
            flat[i] -= self.config.learning_rate * m_hat / (v_hat.sqrt() + self.config.epsilon);
        }
        params.unflatten(&flat)?;
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Checkpoint format: one JSON header line with layer shapes and a format
// version, then the flat little-endian f64 parameter arrays in layer order
// (weights before biases). Round-trips bit-exactly.
// ---------------------------------------------------------------------------

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct CheckpointHeader {
    format_version: u32,
    kind: String,
    shapes: Vec<[usize; 2]>,
    extra_len: usize,
}

/// Write parameters (plus an optional trailing f64 array such as a policy's
/// log-std vector) to a checkpoint file.
pub fn write_checkpoint(path: &Path, kind: &str, params: &MlpParams, extra: &[f64]) -> Result<()> {
    let header = CheckpointHeader {
        format_version: CHECKPOINT_VERSION,
        kind: kind.to_string(),
        shapes: params
            .layers
            .iter()
            .map(|l| [l.out_dim, l.in_dim])
            .collect(),
        extra_len: extra.len(),
    };
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer(&mut file, &header)?;
    file.write_all(b"\n")?;
    for value in params.flatten().iter().chain(extra.iter()) {
        file.write_all(&value.to_le_bytes())?;
    }
    Ok(())
}

/// Read a checkpoint written by [`write_checkpoint`]. Returns the parameters,
/// the trailing array, and the stored kind tag.
pub fn read_checkpoint(path: &Path) -> Result<(MlpParams, Vec<f64>, String)> {
    let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut header_bytes = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        file.read_exact(&mut byte)
            .map_err(|_| Error::CorruptFile("missing checkpoint header".into()))?;
        if byte[0] == b'\n' {
            break;
        }
        header_bytes.push(byte[0]);
    }
    let header: CheckpointHeader = serde_json::from_slice(&header_bytes)?;
    if header.format_version != CHECKPOINT_VERSION {
        return Err(Error::FormatVersion {
            found: header.format_version,
            expected: CHECKPOINT_VERSION,
        });
    }
    if header.shapes.len() != 3 {
        return Err(Error::CorruptFile("expected exactly three layers".into()));
    }
    let (input, hidden, output) = (
        header.shapes[0][1],
        header.shapes[0][0],
        header.shapes[2][0],
    );
    if header.shapes[1] != [hidden, hidden] || header.shapes[2][1] != hidden {
        return Err(Error::CorruptFile("inconsistent layer shapes".into()));
    }
    let mut params = MlpParams::zeros(input, hidden, output);
    let total = params.num_params() + header.extra_len;
    let mut values = vec![0.0f64; total];
    let mut buf = [0u8; 8];
    for value in values.iter_mut() {
        file.read_exact(&mut buf)
            .map_err(|_| Error::CorruptFile("truncated parameter block".into()))?;
        *value = f64::from_le_bytes(buf);
    }
    let extra = values.split_off(params.num_params());
    params.unflatten(&values)?;
    Ok((params, extra, header.kind))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        rng::derive_rng(seed, rng::Stream::PolicyInit, &[99])
    }

    #[test]
    fn zero_params_zero_output() {
        let net = MlpParams::zeros(3, 8, 2);
        let out = net.forward(&[1.0, -2.0, 0.5]).unwrap();
        assert_eq!(out, vec![0.0, 0.0]);
    }

    #[test]
    fn forward_rejects_bad_input_dim() {
        let net = MlpParams::zeros(3, 8, 2);
        assert!(matches!(
            net.forward(&[1.0, 2.0]),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn hand_computed_single_path() {
        // Single unit per layer, weights 2, 3, -4 and biases 0.5, 0, 1:
        // h1 = relu(2*1 + 0.5) = 2.5, h2 = relu(3*2.5) = 7.5, y = -4*7.5 + 1.
        let mut net = MlpParams::zeros(1, 1, 1);
        net.layer_mut(0).weights[0] = 2.0;
        net.layer_mut(0).biases[0] = 0.5;
        net.layer_mut(1).weights[0] = 3.0;
        net.layer_mut(2).weights[0] = -4.0;
        net.layer_mut(2).biases[0] = 1.0;
        let out = net.forward(&[1.0]).unwrap();
        assert!((out[0] - (-29.0)).abs() < 1e-15);
    }

    #[test]
    fn forward_is_deterministic() {
        let net = MlpParams::init(4, 16, 3, 7);
        let input = [0.3, -1.2, 0.0, 2.0];
        let a = net.forward(&input).unwrap();
        let b = net.forward(&input).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn hidden_activations_nonnegative() {
        // Probe via a single-identity output layer reading one hidden unit.
        let mut r = rng(3);
        for trial in 0..20 {
            let net = MlpParams::init(3, 8, 8, 1000 + trial);
            let input: Vec<f64> = (0..3).map(|_| r.random_range(-3.0..3.0)).collect();
            // Reconstruct hidden activations through the public surface:
            // layer 2 of a zeroed copy picks out each unit.
            let mut probe = net.clone();
            for row in 0..8 {
                for col in 0..8 {
                    probe.layer_mut(2).weights[row * 8 + col] =
                        if row == col { 1.0 } else { 0.0 };
                }
                probe.layer_mut(2).biases[row] = 0.0;
            }
            let acts = probe.forward(&input).unwrap();
            assert!(acts.iter().all(|&a| a >= 0.0), "negative hidden activation");
        }
    }

    #[test]
    fn backward_zero_upstream_gives_zero_grads() {
        let net = MlpParams::init(3, 8, 2, 11);
        let grads = net.backward(&[0.7, -0.3, 1.1], &[0.0, 0.0]).unwrap();
        assert!(grads.flatten().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn backward_is_linear_in_upstream() {
        let net = MlpParams::init(3, 8, 2, 13);
        let input = [0.7, -0.3, 1.1];
        let g1 = net.backward(&input, &[0.4, -1.0]).unwrap().flatten();
        let g2 = net.backward(&input, &[0.8, -2.0]).unwrap().flatten();
        for (a, b) in g1.iter().zip(g2.iter()) {
            assert!((2.0 * a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    /// Central finite differences, valid away from ReLU kinks.
    fn finite_diff(net: &MlpParams, input: &[f64], upstream: &[f64], h: f64) -> Vec<f64> {
        let flat = net.flatten();
        let mut grads = Vec::with_capacity(flat.len());
        let mut work = net.clone();
        for i in 0..flat.len() {
            let mut plus = flat.clone();
            plus[i] += h;
            work.unflatten(&plus).unwrap();
            let f_plus: f64 = work
                .forward(input)
                .unwrap()
                .iter()
                .zip(upstream)
                .map(|(o, u)| o * u)
                .sum();
            let mut minus = flat.clone();
            minus[i] -= h;
            work.unflatten(&minus).unwrap();
            let f_minus: f64 = work
                .forward(input)
                .unwrap()
                .iter()
                .zip(upstream)
                .map(|(o, u)| o * u)
                .sum();
            grads.push((f_plus - f_minus) / (2.0 * h));
        }
        grads
    }

    /// True when every ReLU pre-activation is safely away from zero, so the
    /// finite-difference oracle is valid at perturbation size `guard`.
    fn away_from_kinks(net: &MlpParams, input: &[f64], guard: f64) -> bool {
        let mut pre1 = vec![0.0; net.hidden_dim()];
        net.layer(0).affine(input, &mut pre1);
        if pre1.iter().any(|p| p.abs() < guard) {
            return false;
        }
        let act1: Vec<f64> = pre1.iter().map(|&v| v.max(0.0)).collect();
        let mut pre2 = vec![0.0; net.hidden_dim()];
        net.layer(1).affine(&act1, &mut pre2);
        pre2.iter().all(|p| p.abs() >= guard)
    }

    #[test]
    fn gradient_check_against_central_differences() {
        // >= 100 random (params, input, upstream) triples; resample any case
        // that lands within the kink guard band where central differences
        // are not a valid derivative oracle.
        let mut r = rng(17);
        let mut checked = 0;
        let mut attempts = 0;
        let mut max_rel = 0.0f64;
        while checked < 100 {
            attempts += 1;
            assert!(attempts < 2000, "too many kink resamples");
            let net = MlpParams::init(3, 6, 2, 40_000 + attempts);
            let input: Vec<f64> = (0..3).map(|_| r.random_range(-1.5..1.5)).collect();
            let upstream: Vec<f64> = (0..2).map(|_| r.random_range(-1.0..1.0)).collect();
            if !away_from_kinks(&net, &input, 1e-3) {
                continue;
            }
            let analytic = net.backward(&input, &upstream).unwrap().flatten();
            let numeric = finite_diff(&net, &input, &upstream, 1e-5);
            for (a, n) in analytic.iter().zip(numeric.iter()) {
                let rel = (a - n).abs() / a.abs().max(n.abs()).max(1e-6);
                max_rel = max_rel.max(rel);
            }
            checked += 1;
        }
        assert!(max_rel <= 1e-4, "max relative error {max_rel:.3e}");
    }

    #[test]
    fn adam_zero_gradient_leaves_params_unchanged() {
        let mut net = MlpParams::init(3, 8, 2, 21);
        let before = net.flatten();
        let mut adam = Adam::new(&net, AdamConfig::with_lr(1e-2)).unwrap();
        let zero = GradBundle::zeros_like(&net);
        for _ in 0..5 {
            adam.step(&mut net, &zero).unwrap();
        }
        assert_eq!(net.flatten(), before);
    }

    #[test]
    fn adam_single_scalar_step_matches_hand_computation() {
        // One parameter, fresh moments, gradient g = 0.5, lr = 0.1:
        //   m = 0.1 * 0.5 / (1 - 0.9) = 0.5 after bias correction
        //   v = 0.001 * 0.25 / (1 - 0.999) = 0.25 after bias correction
        //   step = 0.1 * 0.5 / (sqrt(0.25) + 1e-8) ~= 0.1
        let mut net = MlpParams::zeros(1, 1, 1);
        net.layer_mut(2).weights[0] = 1.0;
        let mut adam = Adam::new(&net, AdamConfig::with_lr(0.1)).unwrap();
        let mut grads = GradBundle::zeros_like(&net);
        grads.layers[2].weights[0] = 0.5;
        adam.step(&mut net, &grads).unwrap();
        let expected = 1.0 - 0.1 * 0.5 / (0.25f64.sqrt() + 1e-8);
        assert!((net.layer(2).weights[0] - expected).abs() < 1e-12);
    }

    #[test]
    fn adam_rejects_non_finite_gradients() {
        let mut net = MlpParams::init(2, 4, 1, 5);
        let before = net.flatten();
        let mut adam = Adam::new(&net, AdamConfig::with_lr(1e-3)).unwrap();
        let mut grads = GradBundle::zeros_like(&net);
        grads.layers[0].weights[0] = f64::NAN;
        assert!(adam.step(&mut net, &grads).is_err());
        assert_eq!(net.flatten(), before);
    }

    #[test]
    fn checkpoint_round_trips_bit_exactly() {
        let dir = std::env::temp_dir().join(format!("flair_nn_ckpt_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("net.ckpt");
        let net = MlpParams::init(4, 16, 2, 31);
        let extra = vec![-0.5, 0.25];
        write_checkpoint(&path, "gaussian_policy_mean", &net, &extra).unwrap();
        let (loaded, loaded_extra, kind) = read_checkpoint(&path).unwrap();
        assert_eq!(kind, "gaussian_policy_mean");
        assert_eq!(loaded.flatten(), net.flatten());
        assert_eq!(loaded_extra, extra);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn checkpoint_rejects_unknown_version() {
        let dir = std::env::temp_dir().join(format!("flair_nn_ver_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("net.ckpt");
        let net = MlpParams::zeros(2, 4, 1);
        write_checkpoint(&path, "mlp", &net, &[]).unwrap();
        let text = std::fs::read(&path).unwrap();
        let tampered = String::from_utf8_lossy(&text).replace(
            "\"format_version\":1",
            "\"format_version\":9",
        );
        std::fs::write(&path, tampered).unwrap();
        assert!(matches!(
            read_checkpoint(&path),
            Err(Error::FormatVersion { found: 9, .. })
        ));
        std::fs::remove_dir_all(&dir).ok();
    }
}
