//! Plain-SGD training loop with deterministic batching, plus the evaluation
//! paths needed for the joint-vs-post-training compression comparison.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analytics::psnr;
use crate::compression::CompressionConfig;
use crate::error::{Error, Result};
use crate::tensor::VideoTensor;

use super::model::{
    decode, encode, latent_projection, loss_and_grad, LossConfig, ModelGeom, ToyAEParams,
};

/// How compression participates in training and evaluation.
///
/// `None`: no compression anywhere. `Joint`: the projection sits inside every
/// training forward pass. `PtlcEval`: train exactly as `None`, but the
/// compressed-latent validation path is the quantity of interest
/// (post-training latent compression).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrainMode {
    None,
    Joint,
    PtlcEval,
}

/// Learning rate used by the full-scale recipe this toy is scaled down from;
/// kept as a documented reference value. The toy default is 1e-2.
pub const REFERENCE_LEARNING_RATE: f64 = 1e-5;
pub const DEFAULT_KL_WEIGHT: f64 = 1e-6;

fn default_learning_rate() -> f64 {
    1e-2
}
fn default_kl_weight() -> f64 {
    DEFAULT_KL_WEIGHT
}
fn default_batch_size() -> usize {
    4
}
fn default_eval_interval() -> usize {
    500
}
fn default_compression() -> CompressionConfig {
    CompressionConfig::fixed_multi()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub geom: ModelGeom,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_kl_weight")]
    pub kl_weight: f64,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    pub steps: usize,
    pub seed: u64,
    pub mode: TrainMode,
    #[serde(default = "default_compression")]
    pub compression: CompressionConfig,
    #[serde(default)]
    pub kl_on_compressed: bool,
    #[serde(default = "default_eval_interval")]
    pub eval_interval: usize,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rate <= 0.0 {
            return Err(Error::Config("learning rate must be > 0".into()));
        }
        if self.kl_weight < 0.0 {
            return Err(Error::Config("KL weight must be >= 0".into()));
        }
        if self.batch_size == 0 || self.steps == 0 {
            return Err(Error::Config("batch size and steps must be >= 1".into()));
        }
        self.compression.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub recon: f64,
    pub kl: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub step: usize,
    pub psnr_clean: f64,
    pub psnr_compressed: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainLog {
    pub steps: Vec<StepRecord>,
    pub evals: Vec<EvalRecord>,
}

fn fmt_db(v: f64) -> String {
    if v.is_infinite() {
        "inf".to_string()
    } else {
        format!("{v:.6}")
    }
}

impl TrainLog {
    /// CSV with one row per step; PSNR columns are filled on eval steps.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,recon,kl,total,psnr_clean,psnr_compressed\n");
        for s in &self.steps {
            let eval = self.evals.iter().find(|e| e.step == s.step);
            let (pc, px) = match eval {
                Some(e) => (fmt_db(e.psnr_clean), fmt_db(e.psnr_compressed)),
                None => (String::new(), String::new()),
            };
            out.push_str(&format!(
                "{},{:.17e},{:.17e},{:.17e},{},{}\n",
                s.step, s.recon, s.kl, s.total, pc, px
            ));
        }
        out
    }

    pub fn final_eval(&self) -> Option<&EvalRecord> {
        self.evals.last()
    }
}

/// Mean validation PSNR through the clean and compressed latent paths.
pub fn evaluate(
    params: &ToyAEParams,
    val: &[VideoTensor<f64>],
    compression: &CompressionConfig,
) -> Result<(f64, f64)> {
    let mut clean_sum = 0.0;
    let mut compressed_sum = 0.0;
    for clip in val {
        let enc = encode(params, clip, false, 0)?;
        let clean = decode(params, &enc.latent)?;
        let projected = latent_projection(&enc.latent, compression)?;
        let compressed = decode(params, &projected)?;
        clean_sum += psnr(clip, &clean, 1.0)?;
        compressed_sum += psnr(clip, &compressed, 1.0)?;
    }
    let n = val.len() as f64;
    Ok((clean_sum / n, compressed_sum / n))
}

/// Deterministic SGD training. The parameter trajectory is a pure function
/// of `(cfg, train, val)`; PTLC mode trains identically to `None` and only
/// changes which evaluation number the caller reads.
pub fn train(
    cfg: &TrainConfig,
    train_data: &[VideoTensor<f64>],
    val_data: &[VideoTensor<f64>],
) -> Result<(ToyAEParams, TrainLog)> {
    cfg.validate()?;
    if train_data.is_empty() {
        return Err(Error::Config("training set is empty".into()));
    }
    let mut params = ToyAEParams::init(cfg.geom, cfg.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x5eed));
    let loss_cfg = LossConfig {
        kl_weight: cfg.kl_weight,
        project: cfg.mode == TrainMode::Joint,
        compression: cfg.compression.clone(),
        kl_on_compressed: cfg.kl_on_compressed,
    };
    let mut log = TrainLog::default();
    for step in 0..cfg.steps {
        let batch: Vec<VideoTensor<f64>> = (0..cfg.batch_size)
            .map(|_| train_data[rng.gen_range(0..train_data.len())].clone())
            .collect();
        let eps_seed: u64 = rng.gen();
        let (parts, grads) = loss_and_grad(&params, &batch, &loss_cfg, eps_seed)?;
        if !parts.total.is_finite() {
            return Err(Error::NonFinite { step });
        }
        let lr = cfg.learning_rate;
        for ((_, p), (_, g)) in params.tensors_mut().into_iter().zip(grads.tensors()) {
            for (pi, gi) in p.iter_mut().zip(g) {
                *pi -= lr * gi;
            }
        }
        if !params.all_finite() {
            return Err(Error::NonFinite { step });
        }
        log.steps.push(StepRecord {
            step,
            recon: parts.recon,
            kl: parts.kl,
            total: parts.total,
        });
        let last = step + 1 == cfg.steps;
        if !val_data.is_empty() && (last || (step + 1) % cfg.eval_interval == 0) {
            let (clean, compressed) = evaluate(&params, val_data, &cfg.compression)?;
            log.evals.push(EvalRecord {
                step,
                psnr_clean: clean,
                psnr_compressed: compressed,
            });
        }
    }
    Ok((params, log))
}
