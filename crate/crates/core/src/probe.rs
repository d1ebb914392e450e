//! Linear pairwise probe: logistic regression on `[S_i ‖ S_j]`, trained by
//! full-batch gradient descent on binary cross-entropy.

use ndarray::{s, Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimizer::EmbeddingMatrix;
use crate::pairs::{Pair, PairSet, Sign};
use crate::rng::{rng_for, STREAM_SPLIT};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub train_fraction: f64,
    pub threshold: f64,
    pub seed: u64,
    /// Train on both orientations of every pair and average the two
    /// predicted probabilities at test time.
    pub symmetrize: bool,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            epochs: 100,
            learning_rate: 1e-3,
            train_fraction: 0.8,
            threshold: 0.5,
            seed: 0,
            symmetrize: false,
        }
    }
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::invalid("learning_rate must be positive"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::invalid("train_fraction must lie in (0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::invalid("threshold must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Logistic head: `σ(wᵀh + b)` with `w` of length `2k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeWeights {
    pub w: Array1<f64>,
    pub b: f64,
}

impl ProbeWeights {
    pub fn zeros(k: usize) -> Self {
        ProbeWeights {
            w: Array1::zeros(2 * k),
            b: 0.0,
        }
    }

    /// `[w..., b]`, `2k + 1` values.
    pub fn to_flat(&self) -> Vec<f64> {
        self.w.iter().copied().chain(std::iter::once(self.b)).collect()
    }

    pub fn from_flat(values: &[f64]) -> Result<Self> {
        if values.len() < 3 || values.len().is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "probe weight vector must have odd length 2k+1, got {}",
                values.len()
            )));
        }
        let (w, b) = values.split_at(values.len() - 1);
        Ok(ProbeWeights {
            w: Array1::from(w.to_vec()),
            b: b[0],
        })
    }

    fn logit(&self, s: &EmbeddingMatrix, i: usize, j: usize) -> f64 {
        let k = s.k();
        let view = s.view();
        self.w.slice(s![..k]).dot(&view.row(i)) + self.w.slice(s![k..]).dot(&view.row(j)) + self.b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalResult {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub f1_positive: f64,
    pub f1_negative: f64,
    pub n_train: usize,
    pub n_test: usize,
}

fn check_node(s: &EmbeddingMatrix, node: usize) -> Result<()> {
    if node >= s.n() {
        return Err(Error::NodeOutOfRange { node, n: s.n() });
    }
    Ok(())
}

/// `[S_i ‖ S_j]`.
pub fn pair_features(s: &EmbeddingMatrix, i: usize, j: usize) -> Result<Array1<f64>> {
    check_node(s, i)?;
    check_node(s, j)?;
    let view = s.view();
    let row_i: ArrayView1<'_, f64> = view.row(i);
    Ok(row_i.iter().chain(view.row(j).iter()).copied().collect())
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn target(sign: Sign) -> f64 {
    match sign {
        Sign::Positive => 1.0,
        Sign::Negative => 0.0,
    }
}

/// Training examples as `(i, j, target)`, with reversed copies when
/// symmetrizing.
fn examples(pairs: &[Pair], symmetrize: bool) -> Vec<(usize, usize, f64)> {
    let mut out: Vec<_> = pairs
        .iter()
        .map(|p| (p.i as usize, p.j as usize, target(p.sign)))
        .collect();
    if symmetrize {
        out.extend(pairs.iter().map(|p| (p.j as usize, p.i as usize, target(p.sign))));
    }
    out
}

/// Mean binary cross-entropy of `weights` over `pairs` (labels `+1 → 1`,
/// `-1 → 0`).
pub fn bce_loss(s: &EmbeddingMatrix, pairs: &[Pair], weights: &ProbeWeights) -> f64 {
    let ex = examples(pairs, false);
    let total: f64 = ex
        .iter()
        .map(|&(i, j, y)| {
            let z = weights.logit(s, i, j);
            // log(1 + e^z) - y z, stable for either sign of z.
            z.max(0.0) + (-z.abs()).exp().ln_1p() - y * z
        })
        .sum();
    total / ex.len() as f64
}

/// Analytic gradient of [`bce_loss`] with respect to `[w..., b]`.
pub fn bce_gradient(s: &EmbeddingMatrix, pairs: &[Pair], weights: &ProbeWeights) -> ProbeWeights {
    gradient_over(s, &examples(pairs, false), weights)
}

fn gradient_over(
    s: &EmbeddingMatrix,
    examples: &[(usize, usize, f64)],
    weights: &ProbeWeights,
) -> ProbeWeights {
    let k = s.k();
    let view = s.view();
    let mut grad = ProbeWeights::zeros(k);
    for &(i, j, y) in examples {
        let r = sigmoid(weights.logit(s, i, j)) - y;
        grad.w.slice_mut(s![..k]).scaled_add(r, &view.row(i));
        grad.w.slice_mut(s![k..]).scaled_add(r, &view.row(j));
        grad.b += r;
    }
    let scale = 1.0 / examples.len() as f64;
    grad.w *= scale;
    grad.b *= scale;
    grad
}

/// Fits the logistic head on all of `pairs`, starting from zero weights.
pub fn train_probe(s: &EmbeddingMatrix, pairs: &[Pair], config: &ProbeConfig) -> Result<ProbeWeights> {
    config.validate()?;
    if pairs.is_empty() {
        return Err(Error::invalid("no training pairs"));
    }
    for p in pairs {
        check_node(s, p.i as usize)?;
        check_node(s, p.j as usize)?;
    }
    let has = |sign| pairs.iter().any(|p| p.sign == sign);
    if !(has(Sign::Positive) && has(Sign::Negative)) {
        return Err(Error::invalid("training pairs contain a single class"));
    }
    let ex = examples(pairs, config.symmetrize);
    let mut weights = ProbeWeights::zeros(s.k());
    for _ in 0..config.epochs {
        let grad = gradient_over(s, &ex, &weights);
        weights.w.scaled_add(-config.learning_rate, &grad.w);
        weights.b -= config.learning_rate * grad.b;
    }
    Ok(weights)
}

/// Predicted probability that `(i, j)` is a positive pair.
pub fn predict(s: &EmbeddingMatrix, weights: &ProbeWeights, i: usize, j: usize, symmetrize: bool) -> f64 {
    let forward = sigmoid(weights.logit(s, i, j));
    if symmetrize {
        0.5 * (forward + sigmoid(weights.logit(s, j, i)))
    } else {
        forward
    }
}

/// Accuracy and macro-F1 over the two pair classes. A class with no true
/// and no predicted members scores F1 = 0.
pub fn score(truth: &[Sign], predicted: &[Sign]) -> (f64, f64, f64) {
    let f1 = |class: Sign| {
        let mut tp = 0usize;
        let mut fp = 0usize;
        let mut fneg = 0usize;
        for (&t, &p) in truth.iter().zip(predicted) {
            match (t == class, p == class) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fneg += 1,
                _ => {}
            }
        }
        let denom = 2 * tp + fp + fneg;
        if denom == 0 {
            0.0
        } else {
            2.0 * tp as f64 / denom as f64
        }
    };
    let correct = truth.iter().zip(predicted).filter(|(t, p)| t == p).count();
    let accuracy = correct as f64 / truth.len().max(1) as f64;
    (accuracy, f1(Sign::Positive), f1(Sign::Negative))
}

/// Trains on `train` and scores on `test`. Used directly for freshly
/// sampled evaluation pairs.
pub fn evaluate_split(
    s: &EmbeddingMatrix,
    train: &[Pair],
    test: &[Pair],
    config: &ProbeConfig,
) -> Result<EvalResult> {
    fit_and_score(s, train, test, config).map(|(result, _)| result)
}

/// [`evaluate_split`] that also hands back the trained weights.
pub fn fit_and_score(
    s: &EmbeddingMatrix,
    train: &[Pair],
    test: &[Pair],
    config: &ProbeConfig,
) -> Result<(EvalResult, ProbeWeights)> {
    if test.is_empty() {
        return Err(Error::invalid("empty test split"));
    }
    let weights = train_probe(s, train, config)?;
    for p in test {
        check_node(s, p.i as usize)?;
        check_node(s, p.j as usize)?;
    }
    let truth: Vec<Sign> = test.iter().map(|p| p.sign).collect();
    for class in [Sign::Positive, Sign::Negative] {
        if !truth.contains(&class) {
            log::warn!("test split has no {class:?} pairs; its F1 counts as 0");
        }
    }
    let predicted: Vec<Sign> = test
        .iter()
        .map(|p| {
            let prob = predict(s, &weights, p.i as usize, p.j as usize, config.symmetrize);
            if prob >= config.threshold {
                Sign::Positive
            } else {
                Sign::Negative
            }
        })
        .collect();
    let (accuracy, f1_positive, f1_negative) = score(&truth, &predicted);
    let result = EvalResult {
        accuracy,
        macro_f1: 0.5 * (f1_positive + f1_negative),
        f1_positive,
        f1_negative,
        n_train: train.len(),
        n_test: test.len(),
    };
    Ok((result, weights))
}

/// Seeded split of `pairs` into disjoint train and test parts whose union
/// is the whole set.
pub fn split_pairs(pairs: &PairSet, train_fraction: f64, seed: u64) -> Result<(Vec<Pair>, Vec<Pair>)> {
    let total = pairs.len();
    let n_train = (train_fraction * total as f64).round() as usize;
    if n_train == 0 {
        return Err(Error::invalid("empty training split"));
    }
    if n_train >= total {
        return Err(Error::invalid("empty test split"));
    }
    let mut rng = rng_for(seed, STREAM_SPLIT);
    let order = rand::seq::index::sample(&mut rng, total, total);
    let all = pairs.pairs();
    let mut train = Vec::with_capacity(n_train);
    let mut test = Vec::with_capacity(total - n_train);
    for (rank, idx) in order.iter().enumerate() {
        if rank < n_train {
            train.push(all[idx]);
        } else {
            test.push(all[idx]);
        }
    }
    Ok((train, test))
}

/// Held-out evaluation: split by `config.train_fraction`, train, score.
pub fn evaluate(s: &EmbeddingMatrix, pairs: &PairSet, config: &ProbeConfig) -> Result<EvalResult> {
    config.validate()?;
    let (train, test) = split_pairs(pairs, config.train_fraction, config.seed)?;
    evaluate_split(s, &train, &test, config)
}
