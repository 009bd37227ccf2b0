//! Frequency diagnostics: per-subband energy, lag-1 temporal autocorrelation,
//! channel overlap between masks, and PSNR.
//!
//! All reductions accumulate in f64 in a fixed order, so reports are
//! deterministic. Reports serialize to JSON via serde and to CSV through the
//! `to_csv` methods; the column schemas are documented in `docs/formats.md`.

use serde::{Deserialize, Serialize};

use crate::compression::{slot_energies, MaskKind, SubbandMask};
use crate::error::{Error, Result};
use crate::tensor::{Element, VideoTensor};
use crate::wavelet::LABEL_NAMES;

/// Mean squared energy of one (label, channel) slot.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelEnergy {
    pub label: String,
    pub channel: usize,
    pub mean_sq: f64,
}

/// Per-label totals. `total` is the sum of squares over the whole subband;
/// `mean_sq` is the mean squared magnitude; `fraction` is of the grand total.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelEnergy {
    pub label: String,
    pub total: f64,
    pub mean_sq: f64,
    pub fraction: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnergyReport {
    pub channels: Vec<ChannelEnergy>,
    pub labels: Vec<LabelEnergy>,
    /// Sum of squares over every subband.
    pub grand_total: f64,
    /// When true all energies are zero and fractions are reported as 0.
    pub grand_total_zero: bool,
}

impl EnergyReport {
    /// Energy fraction carried by the given canonical label indices.
    pub fn fraction_of(&self, label_indices: &[usize]) -> f64 {
        label_indices.iter().map(|&i| self.labels[i].fraction).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("record,label,channel,mean_sq,total,fraction\n");
        for e in &self.channels {
            out.push_str(&format!("channel,{},{},{:.17e},,\n", e.label, e.channel, e.mean_sq));
        }
        for l in &self.labels {
            out.push_str(&format!(
                "label,{},,{:.17e},{:.17e},{:.17e}\n",
                l.label, l.mean_sq, l.total, l.fraction
            ));
        }
        out.push_str(&format!("grand,,,,{:.17e},\n", self.grand_total));
        out
    }
}

/// Per-subband/per-channel energy of an eight-band set.
pub fn subband_energy<T: Element>(bands: &[VideoTensor<T>]) -> EnergyReport {
    let per_channel = slot_energies(bands);
    let mut channels = Vec::new();
    let mut labels = Vec::new();
    let mut grand_total = 0.0f64;
    let mut totals = [0.0f64; 8];
    for (label, band) in bands.iter().enumerate() {
        let shape = band.shape();
        let slab = (shape.t * shape.h * shape.w) as f64;
        for (ch, &mean_sq) in per_channel[label].iter().enumerate() {
            channels.push(ChannelEnergy {
                label: LABEL_NAMES[label].to_string(),
                channel: ch,
                mean_sq,
            });
            totals[label] += mean_sq * slab;
        }
        grand_total += totals[label];
    }
    let grand_total_zero = grand_total == 0.0;
    for (label, band) in bands.iter().enumerate() {
        let volume = band.shape().volume() as f64;
        labels.push(LabelEnergy {
            label: LABEL_NAMES[label].to_string(),
            total: totals[label],
            mean_sq: totals[label] / volume,
            fraction: if grand_total_zero {
                0.0
            } else {
                totals[label] / grand_total
            },
        });
    }
    EnergyReport {
        channels,
        labels,
        grand_total,
        grand_total_zero,
    }
}

/// Lag-1 temporal autocorrelation of one channel. `degenerate` marks
/// zero-variance channels, reported with `rho` 0.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelAutocorr {
    pub channel: usize,
    pub rho: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AutocorrEntry {
    pub label: String,
    pub channel: usize,
    pub rho: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AutocorrReport {
    pub entries: Vec<AutocorrEntry>,
}

impl AutocorrReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,channel,rho,degenerate\n");
        for e in &self.entries {
            out.push_str(&format!("{},{},{:.17e},{}\n", e.label, e.channel, e.rho, e.degenerate));
        }
        out
    }

    pub fn mean_rho_of(&self, labels: &[&str]) -> f64 {
        let selected: Vec<f64> = self
            .entries
            .iter()
            .filter(|e| labels.contains(&e.label.as_str()) && !e.degenerate)
            .map(|e| e.rho)
            .collect();
        if selected.is_empty() {
            0.0
        } else {
            selected.iter().sum::<f64>() / selected.len() as f64
        }
    }
}

/// rho_c(1) = E_{t,h,w}[(x_t - mu_c)(x_{t+1} - mu_c)] / sigma_c^2, with mu_c
/// and sigma_c^2 taken over all (t, h, w) of channel c.
pub fn lag1_autocorr<T: Element>(t: &VideoTensor<T>) -> Result<Vec<ChannelAutocorr>> {
    let shape = t.shape();
    if shape.t < 2 {
        return Err(Error::Dimension {
            axis: "time",
            detail: format!("lag-1 autocorrelation needs T >= 2, got {}", shape.t),
        });
    }
    let mut out = Vec::with_capacity(shape.c);
    for c in 0..shape.c {
        let samples = t.channel(c);
        let n = samples.len() as f64;
        let mean = samples.iter().map(|x| x.to_f64()).sum::<f64>() / n;
        let var = samples.iter().map(|x| (x.to_f64() - mean).powi(2)).sum::<f64>() / n;
        if var == 0.0 {
            out.push(ChannelAutocorr {
                channel: c,
                rho: 0.0,
                degenerate: true,
            });
            continue;
        }
        let mut cov = 0.0f64;
        let mut count = 0usize;
        for ti in 0..shape.t - 1 {
            for h in 0..shape.h {
                for w in 0..shape.w {
                    cov += (t.at(c, ti, h, w) - mean) * (t.at(c, ti + 1, h, w) - mean);
                    count += 1;
                }
            }
        }
        out.push(ChannelAutocorr {
            channel: c,
            rho: cov / count as f64 / var,
            degenerate: false,
        });
    }
    Ok(out)
}

/// Lag-1 autocorrelation of every (label, channel) slot of an eight-band set.
pub fn set_autocorr<T: Element>(bands: &[VideoTensor<T>]) -> Result<AutocorrReport> {
    let mut entries = Vec::new();
    for (label, band) in bands.iter().enumerate() {
        for ch in lag1_autocorr(band)? {
            entries.push(AutocorrEntry {
                label: LABEL_NAMES[label].to_string(),
                channel: ch.channel,
                rho: ch.rho,
                degenerate: ch.degenerate,
            });
        }
    }
    Ok(AutocorrReport { entries })
}

/// Jaccard overlap of two masks at (label, channel) granularity.
///
/// Whole-label masks are expanded using the other side's channel count; two
/// whole-label masks compare label-wise (equivalent, since labels expand to
/// equal-sized channel blocks).
pub fn channel_overlap(a: &SubbandMask, b: &SubbandMask) -> Result<f64> {
    if a.mode != b.mode {
        return Err(Error::Config("masks have different modes".into()));
    }
    let channels = match (a.channels(), b.channels()) {
        (Some(ca), Some(cb)) if ca != cb => {
            return Err(Error::Shape(format!(
                "masks address different channel counts: {ca} vs {cb}"
            )));
        }
        (Some(c), _) | (_, Some(c)) => c,
        (None, None) => 1,
    };
    let mut intersection = 0usize;
    let mut union = 0usize;
    for label in 0..8 {
        for ch in 0..channels {
            let ra = a.retains(label, ch);
            let rb = b.retains(label, ch);
            if ra && rb {
                intersection += 1;
            }
            if ra || rb {
                union += 1;
            }
        }
    }
    if union == 0 {
        // two empty masks are identical
        return Ok(1.0);
    }
    Ok(intersection as f64 / union as f64)
}

/// Returns true if the two masks retain exactly the same slots.
pub fn masks_equal(a: &SubbandMask, b: &SubbandMask) -> bool {
    match channel_overlap(a, b) {
        Ok(v) => v == 1.0,
        Err(_) => false,
    }
}

/// Peak signal-to-noise ratio in dB; `f64::INFINITY` when MSE is zero.
pub fn psnr<T: Element>(reference: &VideoTensor<T>, test: &VideoTensor<T>, peak: f64) -> Result<f64> {
    if reference.shape() != test.shape() {
        return Err(Error::Shape(format!(
            "reference shape {} != test shape {}",
            reference.shape(),
            test.shape()
        )));
    }
    if peak <= 0.0 {
        return Err(Error::Config(format!("peak must be positive, got {peak}")));
    }
    let mse = reference
        .data()
        .iter()
        .zip(test.data())
        .map(|(a, b)| (a.to_f64() - b.to_f64()).powi(2))
        .sum::<f64>()
        / reference.shape().volume() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

/// Expose whether a mask is per-channel (used by the CLI when writing
/// container manifests).
pub fn mask_is_per_channel(mask: &SubbandMask) -> bool {
    matches!(mask.kind, MaskKind::PerChannel(_))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compression::MaskMode;
    use crate::tensor::Shape;
    use crate::wavelet::{multi_wt, wt3d};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(shape: Shape, seed: u64) -> VideoTensor<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        VideoTensor::from_fn(shape, |_, _, _, _| rng.gen_range(-1.0..1.0))
    }

    /// Scalar double-loop oracle for the lag-1 formula, kept independent of
    /// the implementation path.
    fn brute_force_rho(t: &VideoTensor<f64>, c: usize) -> f64 {
        let s = t.shape();
        let mut vals = Vec::new();
        for ti in 0..s.t {
            for h in 0..s.h {
                for w in 0..s.w {
                    vals.push(t.at(c, ti, h, w));
                }
            }
        }
        let n = vals.len() as f64;
        let mu = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / n;
        if var == 0.0 {
            return 0.0;
        }
        let mut cov = 0.0;
        let mut count = 0.0;
        for ti in 0..s.t - 1 {
            for h in 0..s.h {
                for w in 0..s.w {
                    cov += (t.at(c, ti, h, w) - mu) * (t.at(c, ti + 1, h, w) - mu);
                    count += 1.0;
                }
            }
        }
        cov / count / var
    }

    #[test]
    fn zero_set_energy_report() {
        let bands = vec![VideoTensor::<f64>::zeros(Shape::new(2, 2, 2, 2)); 8];
        let r = subband_energy(&bands);
        assert!(r.grand_total_zero);
        assert!(r.labels.iter().all(|l| l.fraction == 0.0 && l.total == 0.0));
    }

    #[test]
    fn single_nonzero_subband_gets_fraction_one() {
        let mut bands = vec![VideoTensor::<f64>::zeros(Shape::new(2, 2, 2, 2)); 8];
        bands[3] = VideoTensor::constant(Shape::new(2, 2, 2, 2), 2.0);
        let r = subband_energy(&bands);
        assert!((r.labels[3].fraction - 1.0).abs() < 1e-12);
        assert!((r.labels[0].fraction).abs() < 1e-12);
    }

    #[test]
    fn energy_report_parseval() {
        let z = random(Shape::new(3, 8, 8, 8), 1);
        let m = multi_wt(&z).unwrap();
        let r = subband_energy(m.bands());
        let input_energy = z.energy();
        assert!((r.grand_total - input_energy).abs() / input_energy <= 1e-6);

        let s = wt3d(&z).unwrap();
        let r = subband_energy(s.bands());
        assert!((r.grand_total - input_energy).abs() / input_energy <= 1e-6);
    }

    #[test]
    fn energy_channel_permutation_invariance() {
        let z = random(Shape::new(3, 4, 4, 4), 2);
        let perm = VideoTensor::<f64>::from_fn(z.shape(), |c, t, h, w| z.at((c + 1) % 3, t, h, w));
        let r1 = subband_energy(wt3d(&z).unwrap().bands());
        let r2 = subband_energy(wt3d(&perm).unwrap().bands());
        // entry for channel c of perm corresponds to channel (c+1)%3 of z
        for label in 0..8 {
            for c in 0..3 {
                let a = r1.channels[label * 3 + (c + 1) % 3].mean_sq;
                let b = r2.channels[label * 3 + c].mean_sq;
                assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
            }
            assert!((r1.labels[label].total - r2.labels[label].total).abs() < 1e-9);
        }
    }

    #[test]
    fn autocorr_matches_brute_force() {
        for seed in 0..6 {
            let t = random(Shape::new(4, 16, 8, 8), 100 + seed);
            let rhos = lag1_autocorr(&t).unwrap();
            for (c, r) in rhos.iter().enumerate() {
                let oracle = brute_force_rho(&t, c);
                assert!((r.rho - oracle).abs() <= 1e-10, "seed {seed} channel {c}");
                assert!(r.rho.abs() <= 1.0 + 1e-9);
            }
        }
    }

    #[test]
    fn autocorr_linear_ramp() {
        // linear ramp in t, constant in (h, w)
        let t = VideoTensor::<f64>::from_fn(Shape::new(1, 8, 2, 2), |_, ti, _, _| ti as f64);
        let rho = lag1_autocorr(&t).unwrap()[0].rho;
        let oracle = brute_force_rho(&t, 0);
        assert!((rho - oracle).abs() < 0.05);
        assert!(rho > 0.5, "ramp should be strongly positively correlated");
    }

    #[test]
    fn autocorr_alternating_is_negative() {
        let t = VideoTensor::<f64>::from_fn(Shape::new(1, 8, 2, 2), |_, ti, _, _| {
            if ti % 2 == 0 {
                1.0
            } else {
                -1.0
            }
        });
        let rho = lag1_autocorr(&t).unwrap()[0].rho;
        let oracle = brute_force_rho(&t, 0);
        assert!((rho - oracle).abs() <= 1e-12);
        assert!(rho < 0.0);
    }

    #[test]
    fn autocorr_constant_channel_degenerate() {
        let t = VideoTensor::<f64>::constant(Shape::new(2, 4, 2, 2), 3.0);
        let rhos = lag1_autocorr(&t).unwrap();
        for r in rhos {
            assert!(r.degenerate);
            assert_eq!(r.rho, 0.0);
        }
    }

    #[test]
    fn autocorr_requires_two_frames() {
        let t = VideoTensor::<f64>::zeros(Shape::new(1, 1, 2, 2));
        assert!(lag1_autocorr(&t).is_err());
    }

    #[test]
    fn overlap_identical_disjoint_symmetry() {
        let fixed = SubbandMask::fixed_multi();
        assert_eq!(channel_overlap(&fixed, &fixed).unwrap(), 1.0);
        let complement = SubbandMask::from_labels(MaskMode::Multi, &[3, 5, 6, 7]).unwrap();
        assert_eq!(channel_overlap(&fixed, &complement).unwrap(), 0.0);
        let partial = SubbandMask::from_labels(MaskMode::Multi, &[0, 3]).unwrap();
        let ab = channel_overlap(&fixed, &partial).unwrap();
        let ba = channel_overlap(&partial, &fixed).unwrap();
        assert_eq!(ab, ba);
        assert!(ab > 0.0 && ab < 1.0);
        assert!(!masks_equal(&fixed, &partial));
    }

    #[test]
    fn overlap_mode_mismatch_errors() {
        assert!(channel_overlap(&SubbandMask::fixed_multi(), &SubbandMask::fixed_single()).is_err());
    }

    #[test]
    fn psnr_closed_forms() {
        let a = VideoTensor::<f64>::zeros(Shape::new(1, 1, 10, 10));
        // MSE 0.01 at peak 1 -> 20 dB
        let b = VideoTensor::<f64>::constant(Shape::new(1, 1, 10, 10), 0.1);
        let v = psnr(&a, &b, 1.0).unwrap();
        assert!((v - 20.0).abs() < 1e-12);
        // peak 255 vs peak 1 differ by 20*log10(255)
        let v255 = psnr(&a, &b, 255.0).unwrap();
        assert!((v255 - v - 20.0 * 255f64.log10()).abs() < 1e-9);
        // identical tensors -> infinity sentinel
        assert!(psnr(&a, &a, 1.0).unwrap().is_infinite());
    }

    #[test]
    fn psnr_shape_mismatch_errors() {
        let a = VideoTensor::<f64>::zeros(Shape::new(1, 1, 2, 2));
        let b = VideoTensor::<f64>::zeros(Shape::new(1, 1, 2, 4));
        assert!(psnr(&a, &b, 1.0).is_err());
    }
}
