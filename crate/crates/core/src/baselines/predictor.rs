use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::deck::{random_deck, DeckVector};
use crate::game::WinRateEvaluator;
use crate::qdeckrec::{Checkpoint, MlpParams};
use crate::seed::{self, tag};
use crate::{Error, Result};

/// One labelled deck pair; decks are stored as index lists.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledPair {
    pub x_p: Vec<usize>,
    pub x_o: Vec<usize>,
    pub label: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictorDataset {
    pub n: usize,
    pub d: usize,
    pub matches_per_label: u32,
    pub seed: u64,
    pub samples: Vec<LabeledPair>,
}

/// Every `MIRROR_EVERY`-th pair is a mirror match.
pub const MIRROR_EVERY: usize = 20;

/// Random deck pairs labelled with their estimated win rate. A fixed
/// fraction of pairs are mirrors so the model sees the symmetric point.
pub fn build_predictor_dataset<E: WinRateEvaluator + ?Sized>(
    evaluator: &E,
    n: usize,
    d: usize,
    size: usize,
    matches_per_label: u32,
    seed: u64,
) -> Result<PredictorDataset> {
    if size == 0 {
        return Err(Error::invalid("dataset size must be at least 1"));
    }
    let samples = (0..size)
        .into_par_iter()
        .map(|i| {
            let s = seed::mix_all(seed, &[tag::DATASET, i as u64]);
            let x_o = random_deck(n, d, seed::mix(s, 0))?;
            let x_p = if i % MIRROR_EVERY == MIRROR_EVERY - 1 {
                x_o.clone()
            } else {
                random_deck(n, d, seed::mix(s, 1))?
            };
            let label = evaluator.win_rate(&x_p, &x_o, matches_per_label, seed::mix(s, tag::EVAL))?.value;
            Ok(LabeledPair {
                x_p: x_p.to_indices(),
                x_o: x_o.to_indices(),
                label,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PredictorDataset {
        n,
        d,
        matches_per_label,
        seed,
        samples,
    })
}

impl PredictorDataset {
    /// One JSON object per line.
    pub fn write_jsonl(&self, mut out: impl Write) -> Result<()> {
        for s in &self.samples {
            serde_json::to_writer(&mut out, s)?;
            writeln!(out).map_err(|e| Error::io("<dataset>", e))?;
        }
        Ok(())
    }

    pub fn read_jsonl(input: impl BufRead, n: usize, d: usize, matches_per_label: u32, seed: u64) -> Result<Self> {
        let mut samples = Vec::new();
        for line in input.lines() {
            let line = line.map_err(|e| Error::io("<dataset>", e))?;
            if !line.trim().is_empty() {
                samples.push(serde_json::from_str(&line)?);
            }
        }
        Ok(Self {
            n,
            d,
            matches_per_label,
            seed,
            samples,
        })
    }

    fn features(&self) -> Result<Vec<(Vec<f64>, f64)>> {
        self.samples
            .iter()
            .map(|s| {
                let x_p = DeckVector::from_indices(self.n, &s.x_p)?;
                let x_o = DeckVector::from_indices(self.n, &s.x_o)?;
                Ok((pair_features(&x_p, &x_o), s.label))
            })
            .collect()
    }
}

/// `x_p` bits followed by `x_o` bits.
pub fn pair_features(x_p: &DeckVector, x_o: &DeckVector) -> Vec<f64> {
    let mut phi = vec![0.0; x_p.len() + x_o.len()];
    for i in x_p.indices() {
        phi[i] = 1.0;
    }
    for i in x_o.indices() {
        phi[x_p.len() + i] = 1.0;
    }
    phi
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictorConfig {
    pub hidden: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub folds: usize,
    pub seed: u64,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        Self {
            hidden: 128,
            learning_rate: 0.01,
            momentum: 0.9,
            epochs: 60,
            batch_size: 32,
            folds: 10,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictorMetrics {
    pub cv_mse: f64,
    pub cv_r2: f64,
    pub fold_mse: Vec<f64>,
    pub fold_r2: Vec<f64>,
    pub train_mse: f64,
}

/// Regression MLP approximating the win rate of a deck pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WinRatePredictor {
    pub n: usize,
    pub d: usize,
    pub params: MlpParams,
    pub dataset_size: usize,
    pub matches_per_label: u32,
}

impl WinRatePredictor {
    /// Predicted win rate, clamped to `[0, 1]`.
    pub fn predict(&self, x_p: &DeckVector, x_o: &DeckVector) -> Result<f64> {
        if x_p.len() != self.n || x_o.len() != self.n {
            return Err(Error::invalid(format!("predictor trained for N = {}", self.n)));
        }
        Ok(self.params.forward(&pair_features(x_p, x_o))?.clamp(0.0, 1.0))
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut ck = Checkpoint::new("predictor", self.n, self.d, &self.params);
        ck.episode_count = self.dataset_size as u64;
        ck.train_config = serde_json::json!({ "matches_per_label": self.matches_per_label });
        ck
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        if ck.kind != "predictor" {
            return Err(Error::Configuration(format!("expected a predictor checkpoint, found {:?}", ck.kind)));
        }
        let matches_per_label = ck.train_config["matches_per_label"].as_u64().unwrap_or(0) as u32;
        Ok(Self {
            n: ck.n,
            d: ck.d,
            params: ck.params()?,
            dataset_size: ck.episode_count as usize,
            matches_per_label,
        })
    }
}

fn fit(data: &[(Vec<f64>, f64)], idx: &[usize], cfg: &PredictorConfig, seed: u64) -> Result<MlpParams> {
    let input_dim = data[0].0.len();
    let mut theta = MlpParams::init(input_dim, cfg.hidden, seed::mix(seed, tag::INIT));
    // start the output at the label mean
    theta.b2 = idx.iter().map(|&i| data[i].1).sum::<f64>() / idx.len() as f64;
    let mut velocity = MlpParams::zeros(input_dim, cfg.hidden);
    let mut order = idx.to_vec();
    let mut rng = seed::rng(seed::mix(seed, tag::BATCH));
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let mut grad = MlpParams::zeros(input_dim, cfg.hidden);
            for &i in batch {
                let (phi, y) = &data[i];
                let out = theta.forward(phi)?;
                theta.accumulate_gradient(phi, y - out, &mut grad);
            }
            velocity.params_mut().for_each(|v| *v *= cfg.momentum);
            velocity.add_scaled(&grad, cfg.learning_rate / batch.len() as f64);
            theta.add_scaled(&velocity, 1.0);
        }
        if !theta.is_finite() {
            return Err(Error::TrainingDiverged {
                episodes: epoch as u64,
                last_finite: Box::new(MlpParams::zeros(input_dim, cfg.hidden)),
            });
        }
    }
    Ok(theta)
}

fn mse_r2(theta: &MlpParams, data: &[(Vec<f64>, f64)], idx: &[usize]) -> Result<(f64, f64)> {
    let mean = idx.iter().map(|&i| data[i].1).sum::<f64>() / idx.len() as f64;
    let (mut sse, mut sst) = (0.0, 0.0);
    for &i in idx {
        let (phi, y) = &data[i];
        let p = theta.forward(phi)?.clamp(0.0, 1.0);
        sse += (y - p).powi(2);
        sst += (y - mean).powi(2);
    }
    let mse = sse / idx.len() as f64;
    // R² is undefined for constant labels; report 1 for a perfect fit, 0 otherwise
    let r2 = if sst > 1e-12 {
        1.0 - sse / sst
    } else if sse <= 1e-12 {
        1.0
    } else {
        0.0
    };
    Ok((mse, r2))
}

/// Fits the predictor by minibatch SGD with momentum on squared error.
/// Metrics come from k-fold cross validation; the returned model is then
/// refitted on the whole dataset.
pub fn train_predictor(dataset: &PredictorDataset, cfg: &PredictorConfig) -> Result<(WinRatePredictor, PredictorMetrics)> {
    if cfg.batch_size == 0 || cfg.hidden == 0 || cfg.folds < 2 {
        return Err(Error::invalid("predictor needs batch_size, hidden ≥ 1 and at least 2 folds"));
    }
    if dataset.samples.len() < 10 * cfg.batch_size {
        return Err(Error::InsufficientData {
            needed: 10 * cfg.batch_size,
            available: dataset.samples.len(),
        });
    }
    let data = dataset.features()?;
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut seed::rng(seed::mix(cfg.seed, tag::DATASET)));

    let folds: Vec<(f64, f64)> = (0..cfg.folds)
        .into_par_iter()
        .map(|k| {
            let test: Vec<usize> = order.iter().copied().skip(k).step_by(cfg.folds).collect();
            let train: Vec<usize> = order
                .iter()
                .enumerate()
                .filter(|(j, _)| j % cfg.folds != k)
                .map(|(_, &i)| i)
                .collect();
            let theta = fit(&data, &train, cfg, seed::mix(cfg.seed, k as u64))?;
            mse_r2(&theta, &data, &test)
        })
        .collect::<Result<_>>()?;

    let theta = fit(&data, &order, cfg, seed::mix(cfg.seed, cfg.folds as u64))?;
    let (train_mse, _) = mse_r2(&theta, &data, &order)?;
    let fold_mse: Vec<f64> = folds.iter().map(|f| f.0).collect();
    let fold_r2: Vec<f64> = folds.iter().map(|f| f.1).collect();
    let metrics = PredictorMetrics {
        cv_mse: fold_mse.iter().sum::<f64>() / cfg.folds as f64,
        cv_r2: fold_r2.iter().sum::<f64>() / cfg.folds as f64,
        fold_mse,
        fold_r2,
        train_mse,
    };
    let predictor = WinRatePredictor {
        n: dataset.n,
        d: dataset.d,
        params: theta,
        dataset_size: data.len(),
        matches_per_label: dataset.matches_per_label,
    };
    Ok((predictor, metrics))
}
