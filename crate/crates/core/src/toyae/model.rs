//! Per-patch variational autoencoder with hand-derived gradients.
//!
//! The backbone is deliberately tiny: each `(C, t_p, h_p, w_p)` patch is
//! flattened and pushed through affine-tanh-affine encoder heads producing
//! a per-patch latent mean and log-variance; the decoder mirrors it. The
//! patch grid becomes the latent's `(T, H, W)` axes, so the latent is a
//! regular [`VideoTensor`] that the wavelet compression pipeline accepts
//! unchanged.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::compression::{apply_mask_multi, CompressionConfig, MaskMode};
use crate::error::{Error, Result};
use crate::tensor::{Shape, VideoTensor};
use crate::wavelet::{multi_iwt, multi_wt};

use super::linalg::Mat;

/// Patch geometry and layer widths of the toy model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelGeom {
    pub in_channels: usize,
    pub patch_t: usize,
    pub patch_h: usize,
    pub patch_w: usize,
    pub hidden: usize,
    pub latent_channels: usize,
}

impl ModelGeom {
    pub fn patch_dim(&self) -> usize {
        self.in_channels * self.patch_t * self.patch_h * self.patch_w
    }

    /// Latent shape for a given video shape; errors unless the video extents
    /// divide evenly by the patch geometry.
    pub fn latent_shape(&self, video: Shape) -> Result<Shape> {
        if video.c != self.in_channels {
            return Err(Error::Shape(format!(
                "video has {} channels, model expects {}",
                video.c, self.in_channels
            )));
        }
        for (extent, patch, axis) in [
            (video.t, self.patch_t, "time"),
            (video.h, self.patch_h, "height"),
            (video.w, self.patch_w, "width"),
        ] {
            if patch == 0 || extent % patch != 0 {
                return Err(Error::Dimension {
                    axis: match axis {
                        "time" => "time",
                        "height" => "height",
                        _ => "width",
                    },
                    detail: format!("extent {extent} not divisible by patch size {patch}"),
                });
            }
        }
        Ok(Shape::new(
            self.latent_channels,
            video.t / self.patch_t,
            video.h / self.patch_h,
            video.w / self.patch_w,
        ))
    }
}

/// Weights and biases; also reused as the gradient buffer, which is
/// guaranteed shape-identical by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyAEParams {
    pub geom: ModelGeom,
    pub enc_w1: Mat,
    pub enc_b1: Vec<f64>,
    pub enc_w_mu: Mat,
    pub enc_b_mu: Vec<f64>,
    pub enc_w_lv: Mat,
    pub enc_b_lv: Vec<f64>,
    pub dec_w1: Mat,
    pub dec_b1: Vec<f64>,
    pub dec_w2: Mat,
    pub dec_b2: Vec<f64>,
}

impl ToyAEParams {
    /// Seeded uniform(-a, a) init with a = sqrt(1/fan_in); biases zero.
    pub fn init(geom: ModelGeom, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut mat = |rows: usize, cols: usize| {
            let a = (1.0 / cols as f64).sqrt();
            Mat::from_fn(rows, cols, |_, _| rng.gen_range(-a..a))
        };
        let d = geom.patch_dim();
        let h = geom.hidden;
        let cz = geom.latent_channels;
        ToyAEParams {
            geom,
            enc_w1: mat(h, d),
            enc_b1: vec![0.0; h],
            enc_w_mu: mat(cz, h),
            enc_b_mu: vec![0.0; cz],
            enc_w_lv: mat(cz, h),
            enc_b_lv: vec![0.0; cz],
            dec_w1: mat(h, cz),
            dec_b1: vec![0.0; h],
            dec_w2: mat(d, h),
            dec_b2: vec![0.0; d],
        }
    }

    pub fn zeros_like(geom: ModelGeom) -> Self {
        let d = geom.patch_dim();
        let h = geom.hidden;
        let cz = geom.latent_channels;
        ToyAEParams {
            geom,
            enc_w1: Mat::zeros(h, d),
            enc_b1: vec![0.0; h],
            enc_w_mu: Mat::zeros(cz, h),
            enc_b_mu: vec![0.0; cz],
            enc_w_lv: Mat::zeros(cz, h),
            enc_b_lv: vec![0.0; cz],
            dec_w1: Mat::zeros(h, cz),
            dec_b1: vec![0.0; h],
            dec_w2: Mat::zeros(d, h),
            dec_b2: vec![0.0; d],
        }
    }

    /// Named flat views over every parameter tensor, in a fixed order.
    pub fn tensors(&self) -> Vec<(&'static str, &[f64])> {
        vec![
            ("enc_w1", &self.enc_w1.data[..]),
            ("enc_b1", &self.enc_b1[..]),
            ("enc_w_mu", &self.enc_w_mu.data[..]),
            ("enc_b_mu", &self.enc_b_mu[..]),
            ("enc_w_lv", &self.enc_w_lv.data[..]),
            ("enc_b_lv", &self.enc_b_lv[..]),
            ("dec_w1", &self.dec_w1.data[..]),
            ("dec_b1", &self.dec_b1[..]),
            ("dec_w2", &self.dec_w2.data[..]),
            ("dec_b2", &self.dec_b2[..]),
        ]
    }

    pub fn tensors_mut(&mut self) -> Vec<(&'static str, &mut Vec<f64>)> {
        vec![
            ("enc_w1", &mut self.enc_w1.data),
            ("enc_b1", &mut self.enc_b1),
            ("enc_w_mu", &mut self.enc_w_mu.data),
            ("enc_b_mu", &mut self.enc_b_mu),
            ("enc_w_lv", &mut self.enc_w_lv.data),
            ("enc_b_lv", &mut self.enc_b_lv),
            ("dec_w1", &mut self.dec_w1.data),
            ("dec_b1", &mut self.dec_b1),
            ("dec_w2", &mut self.dec_w2.data),
            ("dec_b2", &mut self.dec_b2),
        ]
    }

    pub fn all_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|(_, t)| t.iter().all(|x| x.is_finite()))
    }
}

/// Number of patch positions of a video under the model geometry.
fn patch_grid(geom: &ModelGeom, video: Shape) -> (usize, usize, usize) {
    (
        video.t / geom.patch_t,
        video.h / geom.patch_h,
        video.w / geom.patch_w,
    )
}

/// Flatten the patch at grid position (gt, gh, gw) in (c, dt, dh, dw) order,
/// w fastest.
fn extract_patch(
    geom: &ModelGeom,
    v: &VideoTensor<f64>,
    gt: usize,
    gh: usize,
    gw: usize,
    out: &mut Vec<f64>,
) {
    out.clear();
    for c in 0..geom.in_channels {
        for dt in 0..geom.patch_t {
            for dh in 0..geom.patch_h {
                for dw in 0..geom.patch_w {
                    out.push(v.at(
                        c,
                        gt * geom.patch_t + dt,
                        gh * geom.patch_h + dh,
                        gw * geom.patch_w + dw,
                    ));
                }
            }
        }
    }
}

fn scatter_patch(
    geom: &ModelGeom,
    patch: &[f64],
    gt: usize,
    gh: usize,
    gw: usize,
    shape: Shape,
    out: &mut [f64],
) {
    let mut k = 0;
    for c in 0..geom.in_channels {
        for dt in 0..geom.patch_t {
            for dh in 0..geom.patch_h {
                for dw in 0..geom.patch_w {
                    out[shape.index(
                        c,
                        gt * geom.patch_t + dt,
                        gh * geom.patch_h + dh,
                        gw * geom.patch_w + dw,
                    )] = patch[k];
                    k += 1;
                }
            }
        }
    }
}

pub struct EncodeOutput {
    pub latent: VideoTensor<f64>,
    pub mean: VideoTensor<f64>,
    pub logvar: VideoTensor<f64>,
}

/// Encoder forward pass. With `sample` false the latent is the mean;
/// otherwise the reparameterized draw mean + exp(logvar/2) * eps with eps
/// from a ChaCha stream seeded by `seed`.
pub fn encode(
    p: &ToyAEParams,
    v: &VideoTensor<f64>,
    sample: bool,
    seed: u64,
) -> Result<EncodeOutput> {
    let latent_shape = p.geom.latent_shape(v.shape())?;
    let (gt_n, gh_n, gw_n) = patch_grid(&p.geom, v.shape());
    let cz = p.geom.latent_channels;
    let mut mean = vec![0.0; latent_shape.volume()];
    let mut logvar = vec![0.0; latent_shape.volume()];
    let mut patch = Vec::with_capacity(p.geom.patch_dim());
    let mut hidden = vec![0.0; p.geom.hidden];
    let mut mu = vec![0.0; cz];
    let mut lv = vec![0.0; cz];
    for gt in 0..gt_n {
        for gh in 0..gh_n {
            for gw in 0..gw_n {
                extract_patch(&p.geom, v, gt, gh, gw, &mut patch);
                p.enc_w1.matvec(&patch, &mut hidden);
                for (h, b) in hidden.iter_mut().zip(&p.enc_b1) {
                    *h = (*h + b).tanh();
                }
                p.enc_w_mu.matvec(&hidden, &mut mu);
                p.enc_w_lv.matvec(&hidden, &mut lv);
                for c in 0..cz {
                    let idx = latent_shape.index(c, gt, gh, gw);
                    mean[idx] = mu[c] + p.enc_b_mu[c];
                    logvar[idx] = lv[c] + p.enc_b_lv[c];
                }
            }
        }
    }
    let latent = if sample {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut z = vec![0.0; latent_shape.volume()];
        for i in 0..z.len() {
            let eps: f64 = standard_normal(&mut rng);
            z[i] = mean[i] + (logvar[i] / 2.0).exp() * eps;
        }
        z
    } else {
        mean.clone()
    };
    Ok(EncodeOutput {
        latent: VideoTensor::new(latent_shape, latent)?,
        mean: VideoTensor::new(latent_shape, mean)?,
        logvar: VideoTensor::new(latent_shape, logvar)?,
    })
}

/// Box-Muller draw; two uniforms per normal keeps the stream layout simple
/// and fully deterministic.
fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Decoder forward pass; output shape is the latent grid times the patch
/// geometry.
pub fn decode(p: &ToyAEParams, z: &VideoTensor<f64>) -> Result<VideoTensor<f64>> {
    let zs = z.shape();
    if zs.c != p.geom.latent_channels {
        return Err(Error::Shape(format!(
            "latent has {} channels, model expects {}",
            zs.c, p.geom.latent_channels
        )));
    }
    let out_shape = Shape::new(
        p.geom.in_channels,
        zs.t * p.geom.patch_t,
        zs.h * p.geom.patch_h,
        zs.w * p.geom.patch_w,
    );
    let mut out = vec![0.0; out_shape.volume()];
    let cz = p.geom.latent_channels;
    let mut zv = vec![0.0; cz];
    let mut hidden = vec![0.0; p.geom.hidden];
    let mut patch = vec![0.0; p.geom.patch_dim()];
    for gt in 0..zs.t {
        for gh in 0..zs.h {
            for gw in 0..zs.w {
                for c in 0..cz {
                    zv[c] = z.at(c, gt, gh, gw);
                }
                p.dec_w1.matvec(&zv, &mut hidden);
                for (h, b) in hidden.iter_mut().zip(&p.dec_b1) {
                    *h = (*h + b).tanh();
                }
                p.dec_w2.matvec(&hidden, &mut patch);
                for (y, b) in patch.iter_mut().zip(&p.dec_b2) {
                    *y += b;
                }
                scatter_patch(&p.geom, &patch, gt, gh, gw, out_shape, &mut out);
            }
        }
    }
    VideoTensor::new(out_shape, out)
}

/// The fixed linear projection used by joint training: transform, mask,
/// inverse transform.
pub fn latent_projection(z: &VideoTensor<f64>, cfg: &CompressionConfig) -> Result<VideoTensor<f64>> {
    cfg.validate()?;
    match cfg.mode {
        MaskMode::Multi => multi_iwt(&apply_mask_multi(&multi_wt(z)?, &cfg.mask)?),
        MaskMode::Single => {
            let masked = crate::compression::apply_mask_single(&crate::wavelet::wt3d(z)?, &cfg.mask)?;
            crate::wavelet::iwt3d(&masked)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossParts {
    /// Mean absolute reconstruction error over all video samples.
    pub recon: f64,
    /// 0.5 * sum(mu^2 + sigma^2 - 1 - log sigma^2) over all latent entries.
    pub kl: f64,
    pub total: f64,
}

/// Options consumed by [`loss_and_grad`].
#[derive(Debug, Clone)]
pub struct LossConfig {
    pub kl_weight: f64,
    /// Route the sampled latent through the compression projection before
    /// decoding (joint training).
    pub project: bool,
    pub compression: CompressionConfig,
    /// Compute the KL on the projected mean rather than the raw mean.
    pub kl_on_compressed: bool,
}

/// Full forward and hand-derived backward pass over one batch.
///
/// Deterministic in `(params, batch, cfg, seed)`: the reparameterization
/// noise comes from a ChaCha stream seeded with `seed`, replayed identically
/// on every call. The L1 subgradient at exact ties is 0.
pub fn loss_and_grad(
    p: &ToyAEParams,
    batch: &[VideoTensor<f64>],
    cfg: &LossConfig,
    seed: u64,
) -> Result<(LossParts, ToyAEParams)> {
    if batch.is_empty() {
        return Err(Error::Config("empty batch".into()));
    }
    let geom = p.geom;
    let mut grads = ToyAEParams::zeros_like(geom);
    let mut recon_sum = 0.0;
    let mut kl_sum = 0.0;
    let b_norm = 1.0 / batch.len() as f64;

    let cz = geom.latent_channels;
    let d = geom.patch_dim();
    let h_n = geom.hidden;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    for v in batch {
        let latent_shape = geom.latent_shape(v.shape())?;
        let (gt_n, gh_n, gw_n) = patch_grid(&geom, v.shape());
        let positions = gt_n * gh_n * gw_n;
        let n_video = v.shape().volume() as f64;

        // ---- encoder forward, keeping intermediates ----
        let mut patches = vec![0.0; positions * d];
        let mut hiddens = vec![0.0; positions * h_n];
        let mut mean = vec![0.0; latent_shape.volume()];
        let mut logvar = vec![0.0; latent_shape.volume()];
        let mut patch = Vec::with_capacity(d);
        let mut hid = vec![0.0; h_n];
        let mut mu = vec![0.0; cz];
        let mut lv = vec![0.0; cz];
        let mut pos = 0;
        for gt in 0..gt_n {
            for gh in 0..gh_n {
                for gw in 0..gw_n {
                    extract_patch(&geom, v, gt, gh, gw, &mut patch);
                    patches[pos * d..(pos + 1) * d].copy_from_slice(&patch);
                    p.enc_w1.matvec(&patch, &mut hid);
                    for (h, b) in hid.iter_mut().zip(&p.enc_b1) {
                        *h = (*h + b).tanh();
                    }
                    hiddens[pos * h_n..(pos + 1) * h_n].copy_from_slice(&hid);
                    p.enc_w_mu.matvec(&hid, &mut mu);
                    p.enc_w_lv.matvec(&hid, &mut lv);
                    for c in 0..cz {
                        let idx = latent_shape.index(c, gt, gh, gw);
                        mean[idx] = mu[c] + p.enc_b_mu[c];
                        logvar[idx] = lv[c] + p.enc_b_lv[c];
                    }
                    pos += 1;
                }
            }
        }

        // ---- reparameterized sample ----
        let mut eps = vec![0.0; latent_shape.volume()];
        let mut z = vec![0.0; latent_shape.volume()];
        for i in 0..z.len() {
            eps[i] = standard_normal(&mut rng);
            z[i] = mean[i] + (logvar[i] / 2.0).exp() * eps[i];
        }
        let z_t = VideoTensor::new(latent_shape, z)?;

        // ---- optional compression projection ----
        let z_dec = if cfg.project {
            latent_projection(&z_t, &cfg.compression)?
        } else {
            z_t.clone()
        };

        // ---- decoder forward + L1 backward into dz_dec ----
        let mut dz_dec = vec![0.0; latent_shape.volume()];
        let mut zv = vec![0.0; cz];
        let mut hid2 = vec![0.0; h_n];
        let mut y = vec![0.0; d];
        let mut gy = vec![0.0; d];
        let mut gh2 = vec![0.0; h_n];
        let mut gz = vec![0.0; cz];
        let l1_scale = 1.0 / n_video * b_norm;
        for gt in 0..gt_n {
            for gh in 0..gh_n {
                for gw in 0..gw_n {
                    for c in 0..cz {
                        zv[c] = z_dec.at(c, gt, gh, gw);
                    }
                    p.dec_w1.matvec(&zv, &mut hid2);
                    for (h, b) in hid2.iter_mut().zip(&p.dec_b1) {
                        *h = (*h + b).tanh();
                    }
                    p.dec_w2.matvec(&hid2, &mut y);
                    for (yi, b) in y.iter_mut().zip(&p.dec_b2) {
                        *yi += b;
                    }
                    extract_patch(&geom, v, gt, gh, gw, &mut patch);
                    for k in 0..d {
                        let diff = y[k] - patch[k];
                        recon_sum += diff.abs() / n_video * b_norm;
                        gy[k] = if diff > 0.0 {
                            l1_scale
                        } else if diff < 0.0 {
                            -l1_scale
                        } else {
                            0.0
                        };
                    }
                    grads.dec_w2.add_outer(&gy, &hid2);
                    super::linalg::axpy(1.0, &gy, &mut grads.dec_b2);
                    p.dec_w2.matvec_t(&gy, &mut gh2);
                    for k in 0..h_n {
                        gh2[k] *= 1.0 - hid2[k] * hid2[k];
                    }
                    grads.dec_w1.add_outer(&gh2, &zv);
                    super::linalg::axpy(1.0, &gh2, &mut grads.dec_b1);
                    p.dec_w1.matvec_t(&gh2, &mut gz);
                    for c in 0..cz {
                        dz_dec[latent_shape.index(c, gt, gh, gw)] = gz[c];
                    }
                }
            }
        }

        // ---- back through the projection (self-adjoint, so apply it again) ----
        let dz = if cfg.project {
            latent_projection(&VideoTensor::new(latent_shape, dz_dec)?, &cfg.compression)?
                .into_data()
        } else {
            dz_dec
        };

        // ---- KL term ----
        let (kl_mean, kl_mean_grad_src): (Vec<f64>, Option<VideoTensor<f64>>) =
            if cfg.kl_on_compressed {
                let projected = latent_projection(
                    &VideoTensor::new(latent_shape, mean.clone())?,
                    &cfg.compression,
                )?;
                (projected.data().to_vec(), Some(projected))
            } else {
                (mean.clone(), None)
            };
        for i in 0..mean.len() {
            let m = kl_mean[i];
            let l = logvar[i];
            kl_sum += 0.5 * (m * m + l.exp() - 1.0 - l) * b_norm;
        }
        // d(kl)/d(mean): raw case is mean itself; projected case needs one
        // more pass through the (idempotent, self-adjoint) projection.
        let kl_mu_grad: Vec<f64> = match &kl_mean_grad_src {
            Some(projected) => latent_projection(projected, &cfg.compression)?.into_data(),
            None => mean.clone(),
        };

        // ---- latent-level gradients into mean/logvar ----
        let kl_w = cfg.kl_weight * b_norm;
        let mut dmean = vec![0.0; mean.len()];
        let mut dlogvar = vec![0.0; mean.len()];
        for i in 0..mean.len() {
            dmean[i] = dz[i] + kl_w * kl_mu_grad[i];
            dlogvar[i] =
                dz[i] * eps[i] * (logvar[i] / 2.0).exp() * 0.5 + kl_w * 0.5 * (logvar[i].exp() - 1.0);
        }

        // ---- encoder backward ----
        let mut gmu = vec![0.0; cz];
        let mut glv = vec![0.0; cz];
        let mut ghid = vec![0.0; h_n];
        let mut ghid_lv = vec![0.0; h_n];
        let mut pos = 0;
        for gt in 0..gt_n {
            for gh in 0..gh_n {
                for gw in 0..gw_n {
                    for c in 0..cz {
                        let idx = latent_shape.index(c, gt, gh, gw);
                        gmu[c] = dmean[idx];
                        glv[c] = dlogvar[idx];
                    }
                    let hid = &hiddens[pos * h_n..(pos + 1) * h_n];
                    let x = &patches[pos * d..(pos + 1) * d];
                    grads.enc_w_mu.add_outer(&gmu, hid);
                    super::linalg::axpy(1.0, &gmu, &mut grads.enc_b_mu);
                    grads.enc_w_lv.add_outer(&glv, hid);
                    super::linalg::axpy(1.0, &glv, &mut grads.enc_b_lv);
                    p.enc_w_mu.matvec_t(&gmu, &mut ghid);
                    p.enc_w_lv.matvec_t(&glv, &mut ghid_lv);
                    for k in 0..h_n {
                        ghid[k] = (ghid[k] + ghid_lv[k]) * (1.0 - hid[k] * hid[k]);
                    }
                    grads.enc_w1.add_outer(&ghid, x);
                    super::linalg::axpy(1.0, &ghid, &mut grads.enc_b1);
                    pos += 1;
                }
            }
        }
    }

    let parts = LossParts {
        recon: recon_sum,
        kl: kl_sum,
        total: recon_sum + cfg.kl_weight * kl_sum,
    };
    Ok((parts, grads))
}
