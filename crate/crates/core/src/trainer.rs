//! A small differentiable autoencoder around the quantizer, trained with plain SGD:
//!
//! ```text
//! x -> W_in x + b_in -> tanh -> bound -> snap (STE) -> unbound -> W_out u + b_out
//! ```
//!
//! The backward pass treats the snap as identity (straight-through). The surrogate
//! pipeline replaces the snap by identity in the forward pass as well, which makes it the
//! smooth function whose exact gradient the STE backward pass computes; it is what the
//! finite-difference checks differentiate.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analytics::utilization::{UtilizationAccumulator, UtilizationReport};
use crate::codebook::{CodebookLayout, TokenFrame};
use crate::error::{Error, Result};
use crate::quantizer::{ste_snap_backward, QuantizerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    /// Identity followed by a hard clamp to `[-1, 1]`.
    Clamp,
    /// No nonlinearity; only meaningful with [`Mode::Surrogate`].
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, h: f64) -> f64 {
        match self {
            Activation::Tanh => h.tanh(),
            Activation::Clamp => h.clamp(-1.0, 1.0),
            Activation::Identity => h,
        }
    }

    /// Derivative given the pre-activation `h` and output `z`.
    #[inline]
    fn derivative(self, h: f64, z: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - z * z,
            Activation::Clamp => {
                if h.abs() < 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Snap to the grid in the forward pass.
    Ste,
    /// Skip the snap: identity in bounded space.
    Surrogate,
}

/// Dense affine map `y = W x + b`, `W` row-major with `outputs` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Affine {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Affine { inputs, outputs, weights: vec![0.0; inputs * outputs], bias: vec![0.0; outputs] }
    }

    /// Uniform init in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]` for weights and biases.
    pub fn init(inputs: usize, outputs: usize, rng: &mut impl Rng) -> Self {
        let bound = 1.0 / (inputs as f64).sqrt();
        let mut draw = |n: usize| (0..n).map(|_| rng.random_range(-bound..=bound)).collect::<Vec<_>>();
        let weights = draw(inputs * outputs);
        let bias = draw(outputs);
        Affine { inputs, outputs, weights, bias }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.inputs)
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(x).fold(*b, |acc, (w, v)| acc + w * v))
            .collect()
    }

    fn backward_input(&self, grad_out: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.inputs];
        for (row, &go) in self.weights.chunks_exact(self.inputs).zip(grad_out) {
            for (gi, &w) in g.iter_mut().zip(row) {
                *gi += w * go;
            }
        }
        g
    }

    fn accumulate_grad(&self, grad: &mut Affine, input: &[f64], grad_out: &[f64], scale: f64) {
        for ((grow, &go), gb) in grad.weights.chunks_exact_mut(self.inputs).zip(grad_out).zip(&mut grad.bias) {
            for (gw, &v) in grow.iter_mut().zip(input) {
                *gw += scale * go * v;
            }
            *gb += scale * go;
        }
    }

    fn params(&self) -> impl Iterator<Item = &f64> {
        self.weights.iter().chain(&self.bias)
    }

    fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weights.iter_mut().chain(&mut self.bias)
    }
}

/// Weight gradients of the two affine maps.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w_in: Affine,
    pub w_out: Affine,
}

impl Gradients {
    fn zeros_like(p: &ToyPipeline) -> Self {
        Gradients {
            w_in: Affine::zeros(p.w_in.inputs, p.w_in.outputs),
            w_out: Affine::zeros(p.w_out.inputs, p.w_out.outputs),
        }
    }

    /// All gradient entries in parameter order (`W_in`, `b_in`, `W_out`, `b_out`).
    pub fn flatten(&self) -> Vec<f64> {
        self.w_in.params().chain(self.w_out.params()).copied().collect()
    }
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub x: Vec<f64>,
    pub pre_activation: Vec<f64>,
    pub latent: Vec<f64>,
    pub bounded: Vec<f64>,
    /// Snapped values (STE) or the bounded values themselves (surrogate).
    pub snapped: Vec<f64>,
    pub pair_codes: Option<Vec<u32>>,
    pub unbounded: Vec<f64>,
    pub output: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyPipeline {
    pub w_in: Affine,
    pub quantizer: QuantizerConfig,
    pub w_out: Affine,
    pub activation: Activation,
    pub rng_seed: u64,
}

impl ToyPipeline {
    /// Autoencoder `input_dim -> d -> input_dim` with seeded uniform initialization.
    pub fn new(input_dim: usize, quantizer: QuantizerConfig, rng_seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let d = quantizer.dim();
        ToyPipeline {
            w_in: Affine::init(input_dim, d, &mut rng),
            w_out: Affine::init(d, input_dim, &mut rng),
            quantizer,
            activation: Activation::Tanh,
            rng_seed,
        }
    }

    pub fn with_activation(mut self, activation: Activation) -> Self {
        self.activation = activation;
        self
    }

    pub fn input_dim(&self) -> usize {
        self.w_in.inputs
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::ConfigMismatch(format!(
                "input of length {} for a pipeline with input dimension {}",
                x.len(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    pub fn forward_trace(&self, x: &[f64], mode: Mode) -> Result<Trace> {
        self.check_input(x)?;
        let q = &self.quantizer;
        let pre_activation = self.w_in.apply(x);
        let latent: Vec<f64> = pre_activation.iter().map(|&h| self.activation.apply(h)).collect();
        let (bounded, snapped, pair_codes) = match mode {
            Mode::Ste => {
                let b = q.bound(&latent)?;
                let s = q.quantize_bounded(&b);
                (b.values, s.values, Some(s.pair_codes))
            }
            Mode::Surrogate => {
                let b: Vec<f64> = latent.iter().zip(q.levels()).map(|(&z, &l)| z * (l as f64 / 2.0)).collect();
                (b.clone(), b, None)
            }
        };
        let unbounded = q.unbound(&snapped);
        let output = self.w_out.apply(&unbounded);
        Ok(Trace { x: x.to_vec(), pre_activation, latent, bounded, snapped, pair_codes, unbounded, output })
    }

    /// Reconstruction and token frame for one input.
    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, TokenFrame)> {
        let trace = self.forward_trace(x, Mode::Ste)?;
        let layout = CodebookLayout::from_config(&self.quantizer)?;
        let frame = layout.frame(trace.pair_codes.as_deref().unwrap_or_default())?;
        Ok((trace.output, frame))
    }

    /// Squared reconstruction error averaged over output entries.
    pub fn frame_loss(trace: &Trace) -> f64 {
        let m = trace.output.len() as f64;
        trace.output.iter().zip(&trace.x).map(|(y, t)| (y - t) * (y - t)).sum::<f64>() / m
    }

    /// Accumulates `scale * d(frame_loss)/d(params)` into `grad`.
    pub fn backward(&self, trace: &Trace, grad: &mut Gradients, scale: f64) {
        let q = &self.quantizer;
        let m = trace.output.len() as f64;
        let grad_out: Vec<f64> = trace.output.iter().zip(&trace.x).map(|(y, t)| 2.0 * (y - t) / m).collect();
        self.w_out.accumulate_grad(&mut grad.w_out, &trace.unbounded, &grad_out, scale);
        let grad_unbounded = self.w_out.backward_input(&grad_out);
        let grad_snapped = q.unbound_backward(&grad_unbounded);
        let grad_bounded = ste_snap_backward(&grad_snapped);
        let grad_latent = q.bound_backward(&grad_bounded);
        let grad_pre: Vec<f64> = grad_latent
            .iter()
            .zip(trace.pre_activation.iter().zip(&trace.latent))
            .map(|(&g, (&h, &z))| g * self.activation.derivative(h, z))
            .collect();
        self.w_in.accumulate_grad(&mut grad.w_in, &trace.x, &grad_pre, scale);
    }

    /// Mean loss and its gradient over a batch.
    pub fn loss_and_gradients(&self, batch: &[&[f64]], mode: Mode) -> Result<(f64, Gradients)> {
        let mut grad = Gradients::zeros_like(self);
        let scale = 1.0 / batch.len() as f64;
        let mut loss = 0.0;
        for x in batch {
            let trace = self.forward_trace(x, mode)?;
            loss += Self::frame_loss(&trace);
            self.backward(&trace, &mut grad, scale);
        }
        Ok((loss * scale, grad))
    }

    pub fn mean_loss(&self, frames: &[Vec<f64>], mode: Mode) -> Result<f64> {
        let mut total = 0.0;
        for x in frames {
            total += Self::frame_loss(&self.forward_trace(x, mode)?);
        }
        Ok(total / frames.len() as f64)
    }

    fn apply_sgd(&mut self, grad: &Gradients, learning_rate: f64) {
        for (p, g) in self.w_in.params_mut().zip(grad.w_in.params()) {
            *p -= learning_rate * g;
        }
        for (p, g) in self.w_out.params_mut().zip(grad.w_out.params()) {
            *p -= learning_rate * g;
        }
    }

    fn params(&self) -> Vec<f64> {
        self.w_in.params().chain(self.w_out.params()).copied().collect()
    }

    fn set_param(&mut self, index: usize, value: f64) {
        let n_in = self.w_in.weights.len() + self.w_in.bias.len();
        let slot =
            if index < n_in { self.w_in.params_mut().nth(index) } else { self.w_out.params_mut().nth(index - n_in) };
        *slot.expect("parameter index in range") = value;
    }
}

/// Gradient of the surrogate pipeline derived directly from its closed form
/// `y = W_out ((act(W_in x + b_in) * l/2) / (l/2)) + b_out`, without the quantizer module.
#[allow(clippy::needless_range_loop)]
pub fn surrogate_gradients(pipeline: &ToyPipeline, x: &[f64]) -> Result<Gradients> {
    pipeline.check_input(x)?;
    let half: Vec<f64> = pipeline.quantizer.levels().iter().map(|&l| l as f64 / 2.0).collect();
    let h = pipeline.w_in.apply(x);
    let z: Vec<f64> = h.iter().map(|&v| pipeline.activation.apply(v)).collect();
    let u: Vec<f64> = z.iter().zip(&half).map(|(&v, &s)| (v * s) / s).collect();
    let y = pipeline.w_out.apply(&u);
    let m = y.len() as f64;
    let dy: Vec<f64> = y.iter().zip(x).map(|(a, t)| 2.0 * (a - t) / m).collect();

    let d = u.len();
    let mut grad = Gradients::zeros_like(pipeline);
    let mut du = vec![0.0; d];
    for (k, &g) in dy.iter().enumerate() {
        for i in 0..d {
            grad.w_out.weights[k * d + i] += g * u[i];
            du[i] += pipeline.w_out.weights[k * d + i] * g;
        }
        grad.w_out.bias[k] += g;
    }
    let n = x.len();
    for i in 0..d {
        let dz = (du[i] / half[i]) * half[i];
        let dh = dz * pipeline.activation.derivative(h[i], z[i]);
        for p in 0..n {
            grad.w_in.weights[i * n + p] += dh * x[p];
        }
        grad.w_in.bias[i] += dh;
    }
    Ok(grad)
}

/// Relative error `|a - b| / max(|a|, |b|, floor)`.
pub const GRAD_CHECK_FLOOR: f64 = 1e-6;

/// Largest relative error between the analytic gradient (surrogate forward, straight-through
/// backward) and central finite differences of the surrogate loss on input `x`.
pub fn grad_check(pipeline: &ToyPipeline, x: &[f64], epsilon: f64) -> Result<f64> {
    if !(1e-7..=1e-3).contains(&epsilon) {
        return Err(Error::ConfigMismatch(format!("epsilon {epsilon} outside [1e-7, 1e-3]")));
    }
    let (_, analytic) = pipeline.loss_and_gradients(&[x], Mode::Surrogate)?;
    let analytic = analytic.flatten();
    let base = pipeline.params();
    let mut probe = pipeline.clone();
    let mut worst: f64 = 0.0;
    for (i, &theta) in base.iter().enumerate() {
        probe.set_param(i, theta + epsilon);
        let plus = ToyPipeline::frame_loss(&probe.forward_trace(x, Mode::Surrogate)?);
        probe.set_param(i, theta - epsilon);
        let minus = ToyPipeline::frame_loss(&probe.forward_trace(x, Mode::Surrogate)?);
        probe.set_param(i, theta);
        let numeric = (plus - minus) / (2.0 * epsilon);
        let a = analytic[i];
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(GRAD_CHECK_FLOOR);
        worst = worst.max(rel);
    }
    Ok(worst)
}

/// Frames made of three sinusoids sampled at `input_dim` points. The three frequencies
/// are fixed per seed; each frame draws its own amplitudes and phases, and is then scaled
/// so its peak magnitude is exactly 1.
pub fn make_synthetic_dataset(seed: u64, n_frames: usize, input_dim: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let freqs: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.5..4.0));
    (0..n_frames)
        .map(|_| {
            let comps: [(f64, f64); 3] =
                std::array::from_fn(|_| (rng.random_range(0.1..=1.0), rng.random_range(0.0..2.0 * PI)));
            let frame: Vec<f64> = (0..input_dim)
                .map(|k| {
                    let t = k as f64 / input_dim as f64;
                    comps.iter().zip(&freqs).map(|(&(a, phase), &f)| a * (2.0 * PI * f * t + phase).sin()).sum::<f64>()
                })
                .collect();
            let peak = frame.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if peak > 0.0 {
                frame.iter().map(|v| v / peak).collect()
            } else {
                frame
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub steps: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Held-out loss is recorded at step 0, every `log_every` steps, and after the last step.
    pub log_every: usize,
    /// Fraction of the dataset (taken from the end) held out for evaluation.
    pub holdout_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { steps: 5000, learning_rate: 4.0, batch_size: 32, log_every: 100, holdout_fraction: 0.2, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// `(step, held-out MSE)` with the quantizer in the loop.
    pub loss_curve: Vec<(usize, f64)>,
    pub final_utilization: UtilizationReport,
    pub grad_check: f64,
}

impl TrainReport {
    pub fn initial_loss(&self) -> f64 {
        self.loss_curve[0].1
    }

    pub fn final_loss(&self) -> f64 {
        self.loss_curve[self.loss_curve.len() - 1].1
    }

    pub fn loss_csv(&self) -> String {
        let mut out = String::from("step,loss\n");
        for (step, loss) in &self.loss_curve {
            out.push_str(&format!("{step},{loss:.12e}\n"));
        }
        out
    }

    pub fn summary(&self) -> String {
        let u = &self.final_utilization;
        format!(
            "initial_loss={:.6e}\nfinal_loss={:.6e}\nloss_ratio={:.6}\npair_utilization={:.6}\ncodebook_utilization={:.6}\nheldout_frames={}\ngrad_check={:.3e}\n",
            self.initial_loss(),
            self.final_loss(),
            self.final_loss() / self.initial_loss(),
            u.pair_utilization,
            u.codebook_utilization,
            u.frames_seen,
            self.grad_check,
        )
    }
}

/// Minibatch SGD on reconstruction MSE with the straight-through estimator.
pub fn train(pipeline: &mut ToyPipeline, dataset: &[Vec<f64>], config: &TrainConfig) -> Result<TrainReport> {
    if config.steps == 0 || config.batch_size == 0 || config.log_every == 0 {
        return Err(Error::ConfigMismatch("steps, batch size and log interval must be positive".into()));
    }
    let holdout = ((dataset.len() as f64) * config.holdout_fraction).round() as usize;
    if holdout == 0 || holdout >= dataset.len() {
        return Err(Error::ConfigMismatch(format!(
            "dataset of {} frames cannot be split with holdout fraction {}",
            dataset.len(),
            config.holdout_fraction
        )));
    }
    let (train_set, held_out) = dataset.split_at(dataset.len() - holdout);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut cursor = order.len();

    let mut loss_curve = vec![(0, pipeline.mean_loss(held_out, Mode::Ste)?)];
    for step in 1..=config.steps {
        let batch: Vec<&[f64]> = (0..config.batch_size)
            .map(|_| {
                if cursor == order.len() {
                    order.shuffle(&mut rng);
                    cursor = 0;
                }
                cursor += 1;
                train_set[order[cursor - 1]].as_slice()
            })
            .collect();
        let (loss, grad) = pipeline.loss_and_gradients(&batch, Mode::Ste)?;
        if !loss.is_finite() || grad.flatten().iter().any(|g| !g.is_finite()) {
            return Err(Error::Divergence { step, loss });
        }
        pipeline.apply_sgd(&grad, config.learning_rate);
        if step % config.log_every == 0 || step == config.steps {
            let held = pipeline.mean_loss(held_out, Mode::Ste)?;
            if !held.is_finite() {
                return Err(Error::Divergence { step, loss: held });
            }
            loss_curve.push((step, held));
        }
    }

    let layout = CodebookLayout::from_config(&pipeline.quantizer)?;
    let mut util = UtilizationAccumulator::new(&layout);
    for x in held_out {
        let trace = pipeline.forward_trace(x, Mode::Ste)?;
        util.push_codes(trace.pair_codes.as_deref().unwrap_or_default())?;
    }
    Ok(TrainReport {
        loss_curve,
        final_utilization: util.report(),
        grad_check: grad_check(pipeline, &held_out[0], 1e-5)?,
    })
}

/// Final held-out loss of the tanh and clamp arms for one seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AblationRow {
    pub seed: u64,
    pub tanh_loss: f64,
    pub clamp_loss: f64,
}

impl AblationRow {
    /// True when the clamp arm is no better than tanh.
    pub fn tanh_wins(&self) -> bool {
        self.clamp_loss >= self.tanh_loss
    }
}

/// The pilot configuration: `d = 6`, levels `[7; 6]`, rhombic, 32-sample frames.
pub fn pilot_pipeline(seed: u64) -> Result<(ToyPipeline, Vec<Vec<f64>>)> {
    let quantizer = QuantizerConfig::uniform(crate::grid::TilingKind::Rhombic, vec![7; 6])?;
    Ok((ToyPipeline::new(32, quantizer, seed), make_synthetic_dataset(seed, 10_000, 32)))
}

/// Trains the pilot configuration with tanh and with clamp from the same initialization.
pub fn tanh_ablation(seeds: &[u64], config: &TrainConfig) -> Result<Vec<AblationRow>> {
    seeds
        .iter()
        .map(|&seed| {
            let cfg = TrainConfig { seed, ..*config };
            let arm = |activation| -> Result<f64> {
                let (p, data) = pilot_pipeline(seed)?;
                let mut p = p.with_activation(activation);
                Ok(train(&mut p, &data, &cfg)?.final_loss())
            };
            Ok(AblationRow { seed, tanh_loss: arm(Activation::Tanh)?, clamp_loss: arm(Activation::Clamp)? })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TilingKind;

    fn pipeline(kind: TilingKind, seed: u64) -> ToyPipeline {
        ToyPipeline::new(8, QuantizerConfig::uniform(kind, vec![7, 7, 5, 5]).unwrap(), seed)
    }

    #[test]
    fn zero_weights_reconstruct_zero() {
        let mut p = pipeline(TilingKind::Rectangle, 1);
        p.w_in = Affine::zeros(8, 4);
        p.w_out = Affine::zeros(4, 8);
        let (y, frame) = p.forward(&[0.3; 8]).unwrap();
        assert!(y.iter().all(|&v| v == 0.0));
        let q = p.quantizer.quantize(&[0.0; 4]).unwrap();
        assert_eq!(frame.pair_codes, q.pair_codes);
    }

    #[test]
    fn reconstruction_is_w_out_of_grid_point() {
        // Identity-like encoder: x already in the latent space, tanh undone by atanh.
        let q = QuantizerConfig::uniform(TilingKind::Rectangle, vec![5, 5]).unwrap();
        let mut p = ToyPipeline::new(2, q.clone(), 3);
        p.w_in = Affine { inputs: 2, outputs: 2, weights: vec![1.0, 0.0, 0.0, 1.0], bias: vec![0.0, 0.0] };
        let point = q.grid(0).points()[7];
        let z = q.unbound(&[point.x, point.y]);
        let x: Vec<f64> = z.iter().map(|v| v.atanh()).collect();
        let (y, frame) = p.forward(&x).unwrap();
        assert_eq!(frame.pair_codes, vec![7]);
        assert_eq!(y, p.w_out.apply(&z));
    }

    #[test]
    fn forward_is_deterministic() {
        let data = make_synthetic_dataset(42, 16, 8);
        let a = pipeline(TilingKind::Rhombic, 42);
        let b = pipeline(TilingKind::Rhombic, 42);
        for x in &data {
            assert_eq!(a.forward(x).unwrap(), b.forward(x).unwrap());
        }
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(pipeline(TilingKind::Hexagon, 0).forward(&[0.0; 3]), Err(Error::ConfigMismatch(_))));
    }

    #[test]
    fn dataset_properties() {
        let a = make_synthetic_dataset(9, 200, 32);
        assert_eq!(a, make_synthetic_dataset(9, 200, 32));
        assert_ne!(a, make_synthetic_dataset(10, 200, 32));
        assert!(a.iter().flatten().all(|v| v.abs() <= 1.0));
        assert_eq!(a.len(), 200);
        assert!(a.iter().all(|f| f.len() == 32));
    }

    #[test]
    fn linear_only_gradients_match_finite_differences() {
        let p = pipeline(TilingKind::Rectangle, 5).with_activation(Activation::Identity);
        let x = make_synthetic_dataset(1, 1, 8).remove(0);
        let err = grad_check(&p, &x, 1e-5).unwrap();
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn surrogate_gradients_match_finite_differences() {
        for kind in TilingKind::ALL {
            let p = pipeline(kind, 11);
            for x in make_synthetic_dataset(2, 5, 8) {
                let err = grad_check(&p, &x, 1e-5).unwrap();
                assert!(err < 1e-4, "{kind:?}: {err}");
            }
        }
        assert!(grad_check(&pipeline(TilingKind::Rhombic, 1), &[0.0; 8], 1e-2).is_err());
    }

    #[test]
    fn ste_backward_equals_closed_form_surrogate_gradient() {
        let p = pipeline(TilingKind::Rhombic, 4);
        for x in make_synthetic_dataset(3, 10, 8) {
            let (_, g) = p.loss_and_gradients(&[&x], Mode::Surrogate).unwrap();
            assert_eq!(g, surrogate_gradients(&p, &x).unwrap());
        }
    }

    #[test]
    fn zero_learning_rate_keeps_loss_constant() {
        let mut p = pipeline(TilingKind::Rhombic, 2);
        let data = make_synthetic_dataset(2, 100, 8);
        let cfg = TrainConfig { steps: 30, learning_rate: 0.0, log_every: 10, ..TrainConfig::default() };
        let report = train(&mut p, &data, &cfg).unwrap();
        assert_eq!(report.loss_curve.len(), 4);
        assert!(report.loss_curve.iter().all(|&(_, l)| l == report.initial_loss()));
    }

    #[test]
    fn divergence_is_reported_with_step() {
        let mut p = pipeline(TilingKind::Rectangle, 2).with_activation(Activation::Clamp);
        let data = make_synthetic_dataset(2, 100, 8);
        let cfg = TrainConfig { steps: 500, learning_rate: 1e6, log_every: 10, ..TrainConfig::default() };
        match train(&mut p, &data, &cfg) {
            Err(Error::Divergence { step, .. }) => assert!(step >= 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }
}
