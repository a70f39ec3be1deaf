//! Supervised training of the scoring model against teacher labels.

use std::path::Path;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::knn::{build_knn_graph, KnnGraph};
use crate::nn::layers::ParamPack;
use crate::nn::loss::bce_with_logits;
use crate::nn::matrix::DenseMatrix;
use crate::nn::AdamState;
use crate::rng;
use crate::scoring::{ScoreModel, TrainSample};

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    /// Global gradient-norm clip.
    pub clip_norm: f64,
    /// Learning-rate multiplier applied every `decay_every` epochs.
    pub lr_decay: f64,
    pub decay_every: usize,
    /// Fraction of samples held out for the accuracy column.
    pub val_fraction: f64,
    pub seed: u64,
    /// Abort when the epoch loss exceeds this or stops being finite.
    pub divergence_limit: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            lr: 1e-3,
            clip_norm: 0.5,
            lr_decay: 0.55,
            decay_every: 40,
            val_fraction: 0.1,
            seed: 0,
            divergence_limit: 1e6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRow {
    pub epoch: usize,
    pub loss: f64,
    pub val_accuracy: f64,
    pub lr: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainHistory {
    pub rows: Vec<EpochRow>,
}

impl TrainHistory {
    pub fn initial_loss(&self) -> f64 {
        self.rows.first().map_or(f64::NAN, |r| r.loss)
    }

    pub fn final_loss(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.loss)
    }

    pub fn final_accuracy(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.val_accuracy)
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            detail: e.to_string(),
        })?;
        w.write_record(["epoch", "loss", "val_accuracy", "lr"])
            .and_then(|()| {
                for r in &self.rows {
                    w.write_record([
                        r.epoch.to_string(),
                        r.loss.to_string(),
                        r.val_accuracy.to_string(),
                        r.lr.to_string(),
                    ])?;
                }
                w.flush().map_err(csv::Error::from)
            })
            .map_err(|e| Error::Parse {
                path: path.display().to_string(),
                detail: e.to_string(),
            })
    }
}

/// One optimizer step per sample, samples shuffled each epoch. The loss
/// column is the epoch's mean sample loss; accuracy is the fraction of
/// held-out points whose top-scoring cluster matches the teacher.
pub fn train(model: &mut ScoreModel, samples: &[TrainSample], config: &TrainConfig) -> Result<TrainHistory> {
    if samples.is_empty() {
        return Err(Error::invalid("no training samples"));
    }
    let mut rng = rng::seeded(config.seed);

    let graphs: Vec<KnnGraph> = samples
        .iter()
        .map(|s| {
            let kappa = model.config.kappa.min(s.instance.n() - 1).max(1);
            build_knn_graph(&s.instance, kappa)
        })
        .collect::<Result<_>>()?;

    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.shuffle(&mut rng);
    let val_count = ((samples.len() as f64 * config.val_fraction).round() as usize)
        .min(samples.len().saturating_sub(1));
    let val_idx: Vec<usize> = order[..val_count].to_vec();
    let train_idx: Vec<usize> = order[val_count..].to_vec();
    // with nothing held out, accuracy is measured on the training set
    let acc_idx: &[usize] = if val_idx.is_empty() { &train_idx } else { &val_idx };

    let mut params = model.params();
    let mut adam = AdamState::new(params.len(), config.lr, Some(config.clip_norm));
    let mut history = TrainHistory::default();

    let mut epoch_order = train_idx.clone();
    for epoch in 1..=config.epochs {
        if epoch > 1 && (epoch - 1) % config.decay_every == 0 {
            adam.lr *= config.lr_decay;
        }
        epoch_order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for &s in &epoch_order {
            let sample = &samples[s];
            let (logits, cache) =
                model.forward_training(&graphs[s], &sample.centers, None)?;
            let targets = sample.targets();
            let (loss, grad_flat) = bce_with_logits(logits.data(), targets.data());
            epoch_loss += loss;
            let grad = DenseMatrix::from_vec(logits.rows, logits.cols, grad_flat)?;
            let grads_struct = model.backward(&graphs[s], &cache, &grad);
            let mut grads = Vec::with_capacity(params.len());
            grads_struct.collect_params(&mut grads);
            adam.step(&mut params, &grads);
            model.set_params(&params);
        }
        epoch_loss /= epoch_order.len() as f64;
        if !epoch_loss.is_finite() || epoch_loss > config.divergence_limit {
            return Err(Error::Diverged {
                epoch,
                loss: epoch_loss,
            });
        }
        let val_accuracy = accuracy(model, samples, &graphs, acc_idx)?;
        history.rows.push(EpochRow {
            epoch,
            loss: epoch_loss,
            val_accuracy,
            lr: adam.lr,
        });
    }
    Ok(history)
}

/// Fraction of points whose highest-scoring cluster equals the teacher
/// label, over the given sample indices.
pub fn accuracy(
    model: &ScoreModel,
    samples: &[TrainSample],
    graphs: &[KnnGraph],
    indices: &[usize],
) -> Result<f64> {
    let mut hits = 0usize;
    let mut total = 0usize;
    for &s in indices {
        let sample = &samples[s];
        let (logits, _) = model.forward_training(&graphs[s], &sample.centers, None)?;
        for i in 0..logits.rows {
            let row = logits.row(i);
            let mut arg = 0;
            for (c, &v) in row.iter().enumerate() {
                if v > row[arg] {
                    arg = c;
                }
            }
            if arg == sample.labels[i] {
                hits += 1;
            }
            total += 1;
        }
    }
    Ok(hits as f64 / total.max(1) as f64)
}
