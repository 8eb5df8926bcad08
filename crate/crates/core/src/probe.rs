//! Probing classifier: input -> dense(nhid) -> nonlinearity -> dense(classes)
//! -> softmax, trained with Adam on minibatches and early-stopped on
//! validation accuracy.
//!
//! Training runs in rounds of `epoch_size` epochs. After each round the
//! validation accuracy is measured; `tenacity` consecutive rounds without
//! improvement stop training and the best parameters are restored.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// The nine probing tasks of the multilingual benchmark.
pub const KNOWN_TASKS: [&str; 9] = [
    "SentLen",
    "WC",
    "BShift",
    "TreeDepth",
    "Tense",
    "CoordInv",
    "SubjNum",
    "ObjNum",
    "SOMO",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Sigmoid,
    Tanh,
    Relu,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
        }
    }

    /// Derivative expressed through the activation output `y`.
    fn derivative(self, y: f64) -> f64 {
        match self {
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Tanh => 1.0 - y * y,
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sigmoid" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            "relu" => Ok(Activation::Relu),
            other => Err(Error::Config(format!("unknown activation {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub kfold: usize,
    pub batch_size: usize,
    pub nhid: usize,
    pub optim: AdamConfig,
    pub tenacity: usize,
    pub epoch_size: usize,
    pub max_epoch: usize,
    pub activation: Activation,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            kfold: 10,
            batch_size: 128,
            nhid: 50,
            optim: AdamConfig::default(),
            tenacity: 5,
            epoch_size: 4,
            max_epoch: 200,
            activation: Activation::Sigmoid,
            seed: 13,
        }
    }
}

impl ProbeConfig {
    fn validate(&self) -> Result<()> {
        let counts = [
            ("kfold", self.kfold),
            ("batch_size", self.batch_size),
            ("nhid", self.nhid),
            ("tenacity", self.tenacity),
            ("epoch_size", self.epoch_size),
            ("max_epoch", self.max_epoch),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be positive")));
        }
        if self.kfold < 2 {
            return Err(Error::Config("kfold must be at least 2".into()));
        }
        if !(self.optim.lr > 0.0) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        Ok(())
    }
}

/// The network parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub w1: DMatrix<f64>,
    pub b1: DVector<f64>,
    pub w2: DMatrix<f64>,
    pub b2: DVector<f64>,
    pub activation: Activation,
}

#[derive(Debug, Clone)]
pub struct Gradients {
    pub w1: DMatrix<f64>,
    pub b1: DVector<f64>,
    pub w2: DMatrix<f64>,
    pub b2: DVector<f64>,
}

impl Mlp {
    /// Uniform `+-1/sqrt(fan_in)` initialization for weights and biases.
    pub fn new(
        inputs: usize,
        hidden: usize,
        classes: usize,
        activation: Activation,
        rng: &mut impl Rng,
    ) -> Self {
        let b1 = 1.0 / (inputs as f64).sqrt();
        let b2 = 1.0 / (hidden as f64).sqrt();
        Mlp {
            w1: DMatrix::from_fn(inputs, hidden, |_, _| rng.random_range(-b1..b1)),
            b1: DVector::from_fn(hidden, |_, _| rng.random_range(-b1..b1)),
            w2: DMatrix::from_fn(hidden, classes, |_, _| rng.random_range(-b2..b2)),
            b2: DVector::from_fn(classes, |_, _| rng.random_range(-b2..b2)),
            activation,
        }
    }

    pub fn inputs(&self) -> usize {
        self.w1.nrows()
    }

    pub fn classes(&self) -> usize {
        self.w2.ncols()
    }

    fn hidden(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut h = x * &self.w1;
        for mut row in h.row_iter_mut() {
            row += self.b1.transpose();
        }
        h.apply(|v| *v = self.activation.apply(*v));
        h
    }

    fn probabilities_from_hidden(&self, h: &DMatrix<f64>) -> DMatrix<f64> {
        let mut z = h * &self.w2;
        for mut row in z.row_iter_mut() {
            row += self.b2.transpose();
            let max = row.max();
            row.apply(|v| *v = (*v - max).exp());
            let sum = row.sum();
            row /= sum;
        }
        z
    }

    /// Softmax class probabilities, one row per input row.
    pub fn predict_proba(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.probabilities_from_hidden(&self.hidden(x))
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Vec<usize> {
        self.predict_proba(x)
            .row_iter()
            .map(|r| r.transpose().argmax().0)
            .collect()
    }

    /// Mean cross-entropy of `targets` (class indices).
    pub fn loss(&self, x: &DMatrix<f64>, targets: &[usize]) -> f64 {
        let p = self.predict_proba(x);
        let total: f64 = targets
            .iter()
            .enumerate()
            .map(|(i, &t)| -p[(i, t)].max(f64::MIN_POSITIVE).ln())
            .sum();
        total / targets.len() as f64
    }

    /// Loss and its gradient with respect to every parameter.
    pub fn loss_and_gradients(&self, x: &DMatrix<f64>, targets: &[usize]) -> (f64, Gradients) {
        let n = targets.len() as f64;
        let h = self.hidden(x);
        let mut delta = self.probabilities_from_hidden(&h);
        let mut loss = 0.0;
        for (i, &t) in targets.iter().enumerate() {
            loss -= delta[(i, t)].max(f64::MIN_POSITIVE).ln();
            delta[(i, t)] -= 1.0;
        }
        delta /= n;

        let w2 = h.tr_mul(&delta);
        let b2 = row_sums(&delta);
        let mut dh = &delta * self.w2.transpose();
        dh.zip_apply(&h, |g, y| *g *= self.activation.derivative(y));
        let w1 = x.tr_mul(&dh);
        let b1 = row_sums(&dh);
        (loss / n, Gradients { w1, b1, w2, b2 })
    }

    fn params_mut(&mut self) -> [&mut [f64]; 4] {
        [
            self.w1.as_mut_slice(),
            self.b1.as_mut_slice(),
            self.w2.as_mut_slice(),
            self.b2.as_mut_slice(),
        ]
    }
}

fn row_sums(m: &DMatrix<f64>) -> DVector<f64> {
    m.row_sum().transpose()
}

impl Gradients {
    fn slices(&self) -> [&[f64]; 4] {
        [
            self.w1.as_slice(),
            self.b1.as_slice(),
            self.w2.as_slice(),
            self.b2.as_slice(),
        ]
    }
}

struct Adam {
    config: AdamConfig,
    step: i32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    fn new(config: AdamConfig, mlp: &Mlp) -> Self {
        let sizes = [mlp.w1.len(), mlp.b1.len(), mlp.w2.len(), mlp.b2.len()];
        Adam {
            config,
            step: 0,
            m: sizes.iter().map(|&s| vec![0.0; s]).collect(),
            v: sizes.iter().map(|&s| vec![0.0; s]).collect(),
        }
    }

    fn update(&mut self, mlp: &mut Mlp, grads: &Gradients) {
        self.step += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        let c1 = 1.0 - beta1.powi(self.step);
        let c2 = 1.0 - beta2.powi(self.step);
        for (((param, grad), m), v) in mlp
            .params_mut()
            .into_iter()
            .zip(grads.slices())
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            for i in 0..param.len() {
                let g = grad[i];
                m[i] = beta1 * m[i] + (1.0 - beta1) * g;
                v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                param[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}

/// Sorted label vocabulary; class `i` is the `i`-th label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSet {
    labels: Vec<String>,
}

impl LabelSet {
    pub fn from_labels<S: AsRef<str>>(labels: &[S]) -> Self {
        let mut set: Vec<String> = labels.iter().map(|s| s.as_ref().to_owned()).collect();
        set.sort();
        set.dedup();
        LabelSet { labels: set }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index(&self, label: &str) -> Option<usize> {
        self.labels.binary_search_by(|l| l.as_str().cmp(label)).ok()
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    fn encode<S: AsRef<str>>(&self, labels: &[S]) -> Result<Vec<usize>> {
        labels
            .iter()
            .map(|l| {
                self.index(l.as_ref()).ok_or_else(|| {
                    Error::Dataset(format!("label {:?} not seen in training", l.as_ref()))
                })
            })
            .collect()
    }
}

/// How training went, for reports and early-stopping checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub epochs: usize,
    pub best_epoch: usize,
    pub best_validation_accuracy: f64,
    pub validation_rows: usize,
}

/// A trained probe.
#[derive(Debug, Clone)]
pub struct ProbeClassifier {
    pub mlp: Mlp,
    pub labels: LabelSet,
    pub summary: TrainingSummary,
}

impl ProbeClassifier {
    pub fn predict_labels(&self, x: &DMatrix<f64>) -> Result<Vec<&str>> {
        check_width(x, self.mlp.inputs())?;
        Ok(self
            .mlp
            .predict(x)
            .into_iter()
            .map(|i| self.labels.label(i))
            .collect())
    }
}

fn check_width(x: &DMatrix<f64>, width: usize) -> Result<()> {
    if x.ncols() != width {
        return Err(Error::Dimension(format!(
            "vectors have width {} but the classifier expects {width}",
            x.ncols()
        )));
    }
    Ok(())
}

fn accuracy(mlp: &Mlp, x: &DMatrix<f64>, targets: &[usize]) -> f64 {
    let hits = mlp
        .predict(x)
        .iter()
        .zip(targets)
        .filter(|(p, t)| p == t)
        .count();
    hits as f64 / targets.len() as f64
}

fn select_rows(x: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    x.select_rows(rows)
}

/// Trains a probe. Without a validation split, `1/kfold` of the training
/// rows (seeded shuffle) is held out for early stopping.
pub fn train_probe<S: AsRef<str>>(
    train_x: &DMatrix<f64>,
    train_labels: &[S],
    validation: Option<(&DMatrix<f64>, &[S])>,
    config: &ProbeConfig,
) -> Result<ProbeClassifier> {
    config.validate()?;
    if train_x.nrows() != train_labels.len() {
        return Err(Error::Dimension(format!(
            "{} training vectors but {} labels",
            train_x.nrows(),
            train_labels.len()
        )));
    }
    if train_x.nrows() == 0 {
        return Err(Error::EmptyInput("no training rows".into()));
    }
    let labels = LabelSet::from_labels(train_labels);
    if labels.len() < 2 {
        return Err(Error::DegenerateTask(format!(
            "training data has {} class(es); at least 2 are needed",
            labels.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let targets = labels.encode(train_labels)?;

    let (fit_x, fit_y, val_x, val_y) = match validation {
        Some((vx, vl)) => {
            check_width(vx, train_x.ncols())?;
            if vx.nrows() != vl.len() || vx.nrows() == 0 {
                return Err(Error::Dataset(
                    "validation split is empty or misaligned".into(),
                ));
            }
            (train_x.clone(), targets, vx.clone(), labels.encode(vl)?)
        }
        None => {
            let mut order: Vec<usize> = (0..train_x.nrows()).collect();
            order.shuffle(&mut rng);
            let n_val = (train_x.nrows() / config.kfold).max(1);
            if n_val >= train_x.nrows() {
                return Err(Error::Dataset(
                    "too few rows to hold out a validation fold".into(),
                ));
            }
            let (val, fit) = order.split_at(n_val);
            (
                select_rows(train_x, fit),
                fit.iter().map(|&i| targets[i]).collect(),
                select_rows(train_x, val),
                val.iter().map(|&i| targets[i]).collect(),
            )
        }
    };

    let mut mlp = Mlp::new(
        train_x.ncols(),
        config.nhid,
        labels.len(),
        config.activation,
        &mut rng,
    );
    let mut adam = Adam::new(config.optim, &mlp);
    let mut order: Vec<usize> = (0..fit_x.nrows()).collect();

    let mut best = (mlp.clone(), -1.0, 0usize);
    let mut epochs = 0;
    let mut stale = 0;
    while epochs < config.max_epoch && stale < config.tenacity {
        for _ in 0..config.epoch_size.min(config.max_epoch - epochs) {
            order.shuffle(&mut rng);
            for batch in order.chunks(config.batch_size) {
                let bx = select_rows(&fit_x, batch);
                let by: Vec<usize> = batch.iter().map(|&i| fit_y[i]).collect();
                let (_, grads) = mlp.loss_and_gradients(&bx, &by);
                adam.update(&mut mlp, &grads);
            }
            epochs += 1;
        }
        let acc = accuracy(&mlp, &val_x, &val_y);
        if acc > best.1 {
            best = (mlp.clone(), acc, epochs);
            stale = 0;
        } else {
            stale += 1;
        }
    }

    let (mlp, best_acc, best_epoch) = best;
    Ok(ProbeClassifier {
        mlp,
        labels,
        summary: TrainingSummary {
            epochs,
            best_epoch,
            best_validation_accuracy: best_acc,
            validation_rows: val_x.nrows(),
        },
    })
}

/// Where a report came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeMeta {
    pub task_name: String,
    pub language: String,
    pub encoder: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub task_name: String,
    pub language: String,
    pub encoder: String,
    pub accuracy: f64,
    pub n_classes: usize,
    pub n_test: usize,
}

/// Top-1 accuracy of a trained probe on held-out rows.
pub fn evaluate_probe<S: AsRef<str>>(
    state: &ProbeClassifier,
    test_x: &DMatrix<f64>,
    test_labels: &[S],
    meta: &ProbeMeta,
) -> Result<ProbeReport> {
    if test_x.nrows() == 0 || test_labels.is_empty() {
        return Err(Error::EmptyInput("empty test set".into()));
    }
    check_width(test_x, state.mlp.inputs())?;
    if test_x.nrows() != test_labels.len() {
        return Err(Error::Dimension(format!(
            "{} test vectors but {} labels",
            test_x.nrows(),
            test_labels.len()
        )));
    }
    let predicted = state.mlp.predict(test_x);
    let correct = predicted
        .iter()
        .zip(test_labels)
        .filter(|(p, l)| state.labels.label(**p) == l.as_ref())
        .count();
    Ok(ProbeReport {
        task_name: meta.task_name.clone(),
        language: meta.language.clone(),
        encoder: meta.encoder.clone(),
        accuracy: correct as f64 / test_labels.len() as f64,
        n_classes: state.labels.len(),
        n_test: test_labels.len(),
    })
}

/// Finite-difference step used by [`gradient_check`].
pub const GRAD_CHECK_EPS: f64 = 1e-5;

/// Largest relative error between analytic gradients and central
/// differences over every parameter. The relative error of a component is
/// `|a - n| / max(|a| + |n|, 1e-8)`.
pub fn gradient_check(mlp: &Mlp, x: &DMatrix<f64>, targets: &[usize]) -> f64 {
    let (_, grads) = mlp.loss_and_gradients(x, targets);
    let analytic: Vec<f64> = grads
        .slices()
        .iter()
        .flat_map(|s| s.iter().copied())
        .collect();
    let mut probe = mlp.clone();
    let mut worst: f64 = 0.0;
    let mut idx = 0;
    for block in 0..4 {
        let len = probe.params_mut()[block].len();
        for i in 0..len {
            let orig = probe.params_mut()[block][i];
            probe.params_mut()[block][i] = orig + GRAD_CHECK_EPS;
            let plus = probe.loss(x, targets);
            probe.params_mut()[block][i] = orig - GRAD_CHECK_EPS;
            let minus = probe.loss(x, targets);
            probe.params_mut()[block][i] = orig;
            let numeric = (plus - minus) / (2.0 * GRAD_CHECK_EPS);
            let a = analytic[idx];
            let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-8);
            worst = worst.max(rel);
            idx += 1;
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tr" | "train" => Ok(Split::Train),
            "va" | "dev" | "valid" => Ok(Split::Dev),
            "te" | "test" => Ok(Split::Test),
            other => Err(Error::Dataset(format!("unknown split tag {other:?}"))),
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        })
    }
}

/// A probing task as `(label, sentence)` rows per split.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeDataset {
    pub task_name: String,
    pub splits: BTreeMap<Split, Vec<(String, String)>>,
}

impl ProbeDataset {
    /// Parses `split<TAB>label<TAB>sentence` lines. Train and test splits are
    /// required; dev is optional.
    pub fn parse(task_name: &str, text: &str) -> Result<Self> {
        let mut splits: BTreeMap<Split, Vec<(String, String)>> = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.splitn(3, '\t');
            let (split, label, sentence) = match (fields.next(), fields.next(), fields.next()) {
                (Some(s), Some(l), Some(t)) => (s, l, t),
                _ => {
                    return Err(Error::Parse {
                        line: i + 1,
                        msg: "expected split<TAB>label<TAB>sentence".into(),
                    })
                }
            };
            let split: Split = split.trim().parse().map_err(|e: Error| Error::Parse {
                line: i + 1,
                msg: e.to_string(),
            })?;
            if sentence.trim().is_empty() {
                return Err(Error::Dataset(format!("line {}: empty sentence", i + 1)));
            }
            splits
                .entry(split)
                .or_default()
                .push((label.trim().to_owned(), sentence.to_owned()));
        }
        for required in [Split::Train, Split::Test] {
            if !splits.contains_key(&required) {
                return Err(Error::Dataset(format!(
                    "task {task_name} has no {required} split"
                )));
            }
        }
        Ok(ProbeDataset {
            task_name: task_name.to_owned(),
            splits,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "task".into());
        Self::parse(&name, &text)
    }

    pub fn split(&self, split: Split) -> Option<&[(String, String)]> {
        self.splits.get(&split).map(Vec::as_slice)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn toy_mlp(seed: u64) -> Mlp {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Mlp::new(3, 5, 4, Activation::Sigmoid, &mut rng)
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let mlp = toy_mlp(1);
        let x = DMatrix::from_fn(6, 3, |i, j| (i as f64 - 2.0) * (j as f64 + 0.5) * 10.0);
        for row in mlp.predict_proba(&x).row_iter() {
            assert_abs_diff_eq!(row.sum(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_input_gradients() {
        let mlp = toy_mlp(2);
        let x = DMatrix::zeros(4, 3);
        let (_, g) = mlp.loss_and_gradients(&x, &[0, 1, 2, 3]);
        assert!(g.w1.iter().all(|&v| v == 0.0));
        assert!(g.b1.iter().any(|&v| v != 0.0));
        assert!(g.b2.iter().any(|&v| v != 0.0));
    }

    #[test]
    fn single_class_is_degenerate() {
        let x = DMatrix::from_fn(10, 2, |i, j| (i + j) as f64);
        let labels = vec!["a"; 10];
        let err = train_probe(&x, &labels, None, &ProbeConfig::default()).unwrap_err();
        assert!(matches!(err, Error::DegenerateTask(_)));
    }

    #[test]
    fn empty_test_set() {
        let x = DMatrix::from_fn(
            20,
            2,
            |i, j| if i % 2 == 0 { j as f64 } else { -(j as f64) },
        );
        let labels: Vec<&str> = (0..20)
            .map(|i| if i % 2 == 0 { "a" } else { "b" })
            .collect();
        let state = train_probe(&x, &labels, None, &ProbeConfig::default()).unwrap();
        let meta = ProbeMeta {
            task_name: "t".into(),
            language: "en".into(),
            encoder: "AVG".into(),
        };
        let empty: Vec<&str> = Vec::new();
        assert!(matches!(
            evaluate_probe(&state, &DMatrix::zeros(0, 2), &empty, &meta),
            Err(Error::EmptyInput(_))
        ));
        assert!(matches!(
            evaluate_probe(&state, &DMatrix::zeros(2, 3), &["a", "b"], &meta),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn label_set_is_sorted() {
        let set = LabelSet::from_labels(&["pres", "past", "pres"]);
        assert_eq!(set.len(), 2);
        assert_eq!(set.index("past"), Some(0));
        assert_eq!(set.label(1), "pres");
        assert_eq!(set.index("future"), None);
    }

    #[test]
    fn dataset_parsing() {
        let text = "tr\tA\tthe cat\ntr\tB\ta dog\nva\tA\tcats\nte\tB\tdogs run\n";
        let ds = ProbeDataset::parse("Tense", text).unwrap();
        assert_eq!(ds.split(Split::Train).unwrap().len(), 2);
        assert_eq!(
            ds.split(Split::Dev).unwrap()[0],
            ("A".into(), "cats".into())
        );
        assert!(matches!(
            ProbeDataset::parse("Tense", "tr\tA\tx\n"),
            Err(Error::Dataset(_))
        ));
        assert!(matches!(
            ProbeDataset::parse("Tense", "xx\tA\tx\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            ProbeDataset::parse("Tense", "tr\tA\n"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn config_defaults() {
        let c = ProbeConfig::default();
        assert_eq!(
            (c.kfold, c.batch_size, c.nhid, c.tenacity, c.epoch_size),
            (10, 128, 50, 5, 4)
        );
        assert_eq!(
            c.optim,
            AdamConfig {
                lr: 1e-3,
                beta1: 0.9,
                beta2: 0.999,
                eps: 1e-8
            }
        );
        assert_eq!(c.activation, Activation::Sigmoid);
    }
}
