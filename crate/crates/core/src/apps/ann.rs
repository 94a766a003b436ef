//! Fully connected MLP on MNIST: a small float trainer that produces the
//! weights, a power-of-two quantizer, and 8-bit integer inference whose
//! products go through a chosen 8x8 unit.
//!
//! Quantized values carry binary exponents: a number `v` at exponent `e` is
//! stored as `round(v * 2^e)`. Inputs are pixels at exponent 8. Each layer's
//! weights are signed 8-bit with their own exponent, accumulators live at
//! the sum of the input and weight exponents, and hidden activations are
//! shifted back down to unsigned 8-bit after the rectifier.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::apps::idx::Mnist;
use crate::error::{Error, Result};
use crate::unit::Arith;
use crate::word::UIntWord;
use crate::Real;

pub const INPUTS: usize = 784;
pub const CLASSES: usize = 10;
/// Exponent of the input activations (pixel / 256).
pub const INPUT_EXP: i32 = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloatLayer<T> {
    pub inputs: usize,
    pub outputs: usize,
    /// Row-major `outputs x inputs`.
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Real> FloatLayer<T> {
    fn forward(&self, x: &[T], out: &mut Vec<T>) {
        out.clear();
        out.extend(self.weights.chunks(self.inputs).zip(&self.bias).map(|(row, &b)| {
            row.iter().zip(x).fold(b, |acc, (&w, &v)| acc + w * v)
        }));
    }
}

/// Float reference network with rectifier hidden layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloatMlp<T> {
    pub layers: Vec<FloatLayer<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden: vec![100],
            epochs: 15,
            learning_rate: 0.1,
            batch: 16,
            seed: 7,
        }
    }
}

fn pixels_to_real<T: Real>(img: &[u8]) -> Vec<T> {
    let scale = T::exp2i(-INPUT_EXP);
    img.iter().map(|&p| T::from_u8(p).unwrap() * scale).collect()
}

fn argmax<V: PartialOrd + Copy>(v: &[V]) -> usize {
    (1..v.len()).fold(0, |best, i| if v[i] > v[best] { i } else { best })
}

impl<T: Real> FloatMlp<T> {
    /// Minibatch gradient descent on softmax cross-entropy.
    pub fn train(data: &Mnist, cfg: &TrainConfig) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyInput);
        }
        if data.images.item_size() != INPUTS {
            return Err(Error::Dimension(format!(
                "images have {} pixels, expected {INPUTS}",
                data.images.item_size()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut dims = vec![INPUTS];
        dims.extend(&cfg.hidden);
        dims.push(CLASSES);
        let mut layers: Vec<FloatLayer<T>> = dims
            .windows(2)
            .map(|d| {
                let normal = Normal::new(0.0, (2.0 / d[0] as f64).sqrt()).unwrap();
                FloatLayer {
                    inputs: d[0],
                    outputs: d[1],
                    weights: (0..d[0] * d[1]).map(|_| T::lit(normal.sample(&mut rng))).collect(),
                    bias: vec![T::zero(); d[1]],
                }
            })
            .collect();
        let inputs: Vec<Vec<T>> = (0..data.len()).map(|i| pixels_to_real(data.image(i))).collect();
        let mut order: Vec<usize> = (0..data.len()).collect();
        let lr = T::lit(cfg.learning_rate / cfg.batch as f64);
        let mut grads: Vec<FloatLayer<T>> = layers
            .iter()
            .map(|l| FloatLayer {
                weights: vec![T::zero(); l.weights.len()],
                bias: vec![T::zero(); l.bias.len()],
                ..*l
            })
            .collect();
        let mut acts: Vec<Vec<T>> = vec![Vec::new(); layers.len() + 1];
        for _ in 0..cfg.epochs {
            order.shuffle(&mut rng);
            for batch in order.chunks(cfg.batch) {
                for g in &mut grads {
                    g.weights.fill(T::zero());
                    g.bias.fill(T::zero());
                }
                for &i in batch {
                    acts[0].clone_from(&inputs[i]);
                    for (l, layer) in layers.iter().enumerate() {
                        let (done, rest) = acts.split_at_mut(l + 1);
                        layer.forward(&done[l], &mut rest[0]);
                        if l + 1 < layers.len() {
                            rest[0].iter_mut().for_each(|v| *v = v.max(T::zero()));
                        }
                    }
                    let logits = &acts[layers.len()];
                    let max = logits.iter().fold(T::neg_infinity(), |m, &v| m.max(v));
                    let exps: Vec<T> = logits.iter().map(|&v| (v - max).exp()).collect();
                    let total = exps.iter().fold(T::zero(), |s, &v| s + v);
                    let mut delta: Vec<T> = exps.iter().map(|&e| e / total).collect();
                    delta[data.label(i) as usize] = delta[data.label(i) as usize] - T::one();
                    for l in (0..layers.len()).rev() {
                        let input = &acts[l];
                        let g = &mut grads[l];
                        for (o, &d) in delta.iter().enumerate() {
                            g.bias[o] = g.bias[o] + d;
                            let row = &mut g.weights[o * g.inputs..(o + 1) * g.inputs];
                            row.iter_mut().zip(input).for_each(|(w, &x)| *w = *w + d * x);
                        }
                        if l > 0 {
                            let layer = &layers[l];
                            let mut back = vec![T::zero(); layer.inputs];
                            for (o, &d) in delta.iter().enumerate() {
                                let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                                back.iter_mut().zip(row).for_each(|(b, &w)| *b = *b + d * w);
                            }
                            for (b, &a) in back.iter_mut().zip(input) {
                                if a <= T::zero() {
                                    *b = T::zero();
                                }
                            }
                            delta = back;
                        }
                    }
                }
                for (layer, g) in layers.iter_mut().zip(&grads) {
                    layer.weights.iter_mut().zip(&g.weights).for_each(|(w, &d)| *w = *w - lr * d);
                    layer.bias.iter_mut().zip(&g.bias).for_each(|(b, &d)| *b = *b - lr * d);
                }
            }
        }
        Ok(Self { layers })
    }

    /// Activations of every layer after the rectifier (logits last).
    fn activations(&self, img: &[u8]) -> Vec<Vec<T>> {
        let mut acts = vec![pixels_to_real(img)];
        for (l, layer) in self.layers.iter().enumerate() {
            let mut out = Vec::new();
            layer.forward(acts.last().unwrap(), &mut out);
            if l + 1 < self.layers.len() {
                out.iter_mut().for_each(|v| *v = v.max(T::zero()));
            }
            acts.push(out);
        }
        acts
    }

    pub fn predict(&self, img: &[u8]) -> usize {
        argmax(self.activations(img).last().unwrap())
    }

    pub fn accuracy(&self, data: &Mnist) -> f64 {
        let correct: usize = (0..data.len())
            .into_par_iter()
            .filter(|&i| self.predict(data.image(i)) == data.label(i) as usize)
            .count();
        correct as f64 / data.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantLayer {
    pub inputs: usize,
    pub outputs: usize,
    /// Exponent of the weights.
    pub weight_exp: i32,
    /// Exponent of this layer's input activations.
    pub input_exp: i32,
    /// Right shift turning the accumulator into the next layer's 8-bit
    /// activations; zero on the output layer.
    pub shift: u32,
    /// Row-major `outputs x inputs`.
    pub weights: Vec<i8>,
    /// At the accumulator exponent `input_exp + weight_exp`.
    pub bias: Vec<i32>,
}

/// Quantized network: 8-bit signed weights, 8-bit unsigned activations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnModel {
    pub layers: Vec<QuantLayer>,
}

fn exponent_for(max_abs: f64, limit: f64) -> i32 {
    if max_abs <= 0.0 {
        return 0;
    }
    (limit / max_abs).log2().floor() as i32
}

impl AnnModel {
    /// Quantizes `float`, calibrating activation ranges on `calib`.
    pub fn quantize<T: Real>(float: &FloatMlp<T>, calib: &Mnist) -> Result<Self> {
        if calib.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut act_max = vec![0.0f64; float.layers.len()];
        for i in 0..calib.len() {
            let acts = float.activations(calib.image(i));
            for (m, a) in act_max.iter_mut().zip(&acts[1..]) {
                *m = a.iter().fold(*m, |m, v| m.max(v.to_f64().unwrap()));
            }
        }
        let mut input_exp = INPUT_EXP;
        let mut layers = Vec::with_capacity(float.layers.len());
        for (l, fl) in float.layers.iter().enumerate() {
            let wmax = fl.weights.iter().fold(0.0f64, |m, w| m.max(w.to_f64().unwrap().abs()));
            let weight_exp = exponent_for(wmax, 127.0);
            let wscale = 2f64.powi(weight_exp);
            let acc_scale = 2f64.powi(input_exp + weight_exp);
            let weights = fl
                .weights
                .iter()
                .map(|w| (w.to_f64().unwrap() * wscale).round().clamp(-127.0, 127.0) as i8)
                .collect();
            let bias = fl
                .bias
                .iter()
                .map(|b| (b.to_f64().unwrap() * acc_scale).round() as i32)
                .collect();
            let hidden = l + 1 < float.layers.len();
            let out_exp = exponent_for(act_max[l], 255.0);
            let shift = if hidden {
                (input_exp + weight_exp - out_exp).max(0) as u32
            } else {
                0
            };
            layers.push(QuantLayer {
                inputs: fl.inputs,
                outputs: fl.outputs,
                weight_exp,
                input_exp,
                shift,
                weights,
                bias,
            });
            input_exp = input_exp + weight_exp - shift as i32;
        }
        let model = Self { layers };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        let first = self.layers.first().ok_or(Error::EmptyInput)?;
        if first.inputs != INPUTS {
            return Err(Error::Dimension(format!("input dimension {} != {INPUTS}", first.inputs)));
        }
        let last = self.layers.last().unwrap();
        if last.outputs != CLASSES {
            return Err(Error::Dimension(format!("output dimension {} != {CLASSES}", last.outputs)));
        }
        for (l, layer) in self.layers.iter().enumerate() {
            if layer.weights.len() != layer.inputs * layer.outputs || layer.bias.len() != layer.outputs {
                return Err(Error::Dimension(format!("layer {l} parameter counts disagree with its shape")));
            }
            if let Some(next) = self.layers.get(l + 1) {
                if next.inputs != layer.outputs {
                    return Err(Error::Dimension(format!(
                        "layer {l} emits {} values, layer {} takes {}",
                        layer.outputs,
                        l + 1,
                        next.inputs
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let model: Self = serde_json::from_reader(BufReader::new(File::open(path)?))?;
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        serde_json::to_writer(BufWriter::new(File::create(path)?), self)?;
        Ok(())
    }

    /// Output-layer accumulators for one image.
    pub fn logits(&self, img: &[u8], arith: &Arith) -> Result<Vec<i64>> {
        if img.len() != INPUTS {
            return Err(Error::Dimension(format!("image has {} pixels, expected {INPUTS}", img.len())));
        }
        let mut act: Vec<u8> = img.to_vec();
        let mut acc = Vec::new();
        for (l, layer) in self.layers.iter().enumerate() {
            acc.clear();
            for (row, &b) in layer.weights.chunks(layer.inputs).zip(&layer.bias) {
                let mut sum = b as i64;
                for (&w, &a) in row.iter().zip(&act) {
                    let mag = arith.mul(UIntWord::u8(a), UIntWord::u8(w.unsigned_abs())).value as i64;
                    sum += if w < 0 { -mag } else { mag };
                }
                acc.push(sum);
            }
            if l + 1 < self.layers.len() {
                let shift = layer.shift;
                act = acc
                    .iter()
                    .map(|&s| {
                        let s = s.max(0);
                        let rounded = if shift == 0 { s } else { (s + (1 << (shift - 1))) >> shift };
                        rounded.min(255) as u8
                    })
                    .collect();
            }
        }
        Ok(acc)
    }

    pub fn predict(&self, img: &[u8], arith: &Arith) -> Result<usize> {
        Ok(argmax(&self.logits(img, arith)?))
    }

    /// Top-1 accuracy over the first `limit` samples (all when `None`).
    pub fn accuracy(&self, data: &Mnist, arith: &Arith, limit: Option<usize>) -> Result<AnnEval> {
        let n = limit.unwrap_or(data.len()).min(data.len());
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        let correct = (0..n)
            .into_par_iter()
            .map(|i| Ok::<_, Error>(usize::from(self.predict(data.image(i), arith)? == data.label(i) as usize)))
            .try_reduce(|| 0, |a, b| Ok(a + b))?;
        Ok(AnnEval {
            correct,
            total: n,
            accuracy: correct as f64 / n as f64,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnEval {
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correction::TablePair;
    use crate::unit::Unit;

    fn toy_model() -> AnnModel {
        let hidden = QuantLayer {
            inputs: INPUTS,
            outputs: 3,
            weight_exp: 0,
            input_exp: INPUT_EXP,
            shift: 2,
            weights: (0..3 * INPUTS).map(|i| ((i % 7) as i8) - 3).collect(),
            bias: vec![40, -8, 4],
        };
        let out = QuantLayer {
            inputs: 3,
            outputs: CLASSES,
            weight_exp: 0,
            input_exp: INPUT_EXP,
            shift: 0,
            weights: (0..3 * CLASSES).map(|i| ((i * 5 % 11) as i8) - 5).collect(),
            bias: (0..CLASSES as i32).map(|i| (i * 37) % 50).collect(),
        };
        AnnModel {
            layers: vec![hidden, out],
        }
    }

    #[test]
    fn zero_image_is_decided_by_biases() {
        let tables = TablePair::build(3, 6).unwrap();
        let model = toy_model();
        let zero = vec![0u8; INPUTS];
        // Hidden: relu(bias) >> 2 with rounding = [10, 0, 1].
        let hidden = [10i64, 0, 1];
        let out = &model.layers[1];
        let expect: Vec<i64> = (0..CLASSES)
            .map(|o| out.bias[o] as i64 + (0..3).map(|i| out.weights[o * 3 + i] as i64 * hidden[i]).sum::<i64>())
            .collect();
        for unit in Unit::ALL {
            let arith = Arith::new(unit, &tables);
            let logits = model.logits(&zero, &arith).unwrap();
            if unit == Unit::Exact {
                assert_eq!(logits, expect);
            }
            assert_eq!(model.predict(&zero, &arith).unwrap(), argmax(&expect));
        }
    }

    #[test]
    fn validation_catches_shape_errors() {
        let mut m = toy_model();
        assert!(m.validate().is_ok());
        m.layers[1].inputs = 4;
        assert!(matches!(m.validate(), Err(Error::Dimension(_))));
        let mut m = toy_model();
        m.layers[0].bias.pop();
        assert!(m.validate().is_err());
        let tables = TablePair::build(3, 6).unwrap();
        let arith = Arith::new(Unit::Exact, &tables);
        assert!(toy_model().logits(&[0; 10], &arith).is_err());
    }

    #[test]
    fn json_round_trip() {
        let m = toy_model();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        m.save(&path).unwrap();
        assert_eq!(AnnModel::load(&path).unwrap(), m);
    }

    #[test]
    fn argmax_prefers_first_of_ties() {
        assert_eq!(argmax(&[1, 3, 3, 2]), 1);
        assert_eq!(argmax(&[5i64]), 0);
    }
}
