//! Subband masking, adaptive channel selection, and the LCP1 packed latent
//! container.
//!
//! The fixed mask keeps the stage labels {LLL, LLH, LHL, HLL}, exactly half
//! of the subband volume, so a packed latent holds half the elements of the
//! source latent: the 16 -> 8 and 8 -> 4 equivalent-channel accounting.
//!
//! LCP1 layout (see `docs/formats.md`):
//! ```text
//! magic "LCP1" (4) | version (1) = 1 | mode (1) | dtype (1)
//! | C,T,H,W as u64 LE (32) | group_order (8 bytes of stage-1 label indices)
//! | mask kind (1) | mask body (1 byte label bitmask, or per-channel bitmap)
//! | payload: retained subband samples in canonical label order, LE
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{Dtype, Element, Shape, VideoTensor};
use crate::wavelet::{
    iwt3d, multi_iwt, multi_wt, wt3d, MultiWTSet, SubbandLabel3D, SubbandSet, DEFAULT_GROUP_ORDER,
};

pub const LCP1_MAGIC: &[u8; 4] = b"LCP1";
pub const LCP1_VERSION: u8 = 1;

/// Whether a mask addresses single-level per-axis labels or multi-level
/// stage labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskMode {
    Single,
    Multi,
}

impl MaskMode {
    pub fn tag(self) -> u8 {
        match self {
            MaskMode::Single => 0,
            MaskMode::Multi => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(MaskMode::Single),
            1 => Ok(MaskMode::Multi),
            other => Err(Error::format("mode", format!("unknown mode tag {other}"))),
        }
    }
}

/// Retain/zero decision, either per whole label or per (label, channel) slot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum MaskKind {
    /// Bit `i` set means canonical label index `i` is retained whole.
    Labels(u8),
    /// `per_channel[label][channel]`; all 8 rows share one channel count.
    PerChannel(Vec<Vec<bool>>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubbandMask {
    pub mode: MaskMode,
    pub kind: MaskKind,
}

/// Canonical label indices of the fixed retained set {LLL, LLH, LHL, HLL}.
pub const FIXED_RETAINED_INDICES: [usize; 4] = [0, 1, 2, 4];
const FIXED_BITS: u8 = 0b0001_0111;

impl SubbandMask {
    /// The canonical fixed mask, stage labels {LLL, LLH, LHL, HLL}.
    pub fn fixed_multi() -> Self {
        SubbandMask {
            mode: MaskMode::Multi,
            kind: MaskKind::Labels(FIXED_BITS),
        }
    }

    /// Fixed retained set in single-level per-axis notation.
    pub fn fixed_single() -> Self {
        SubbandMask {
            mode: MaskMode::Single,
            kind: MaskKind::Labels(FIXED_BITS),
        }
    }

    pub fn all(mode: MaskMode) -> Self {
        SubbandMask {
            mode,
            kind: MaskKind::Labels(0xFF),
        }
    }

    /// Retains nothing; useful for tests of the zero-payload path.
    pub fn empty(mode: MaskMode) -> Self {
        SubbandMask {
            mode,
            kind: MaskKind::Labels(0),
        }
    }

    pub fn from_labels(mode: MaskMode, labels: &[usize]) -> Result<Self> {
        let mut bits = 0u8;
        for &i in labels {
            if i >= 8 {
                return Err(Error::Config(format!("label index {i} out of range")));
            }
            bits |= 1 << i;
        }
        Ok(SubbandMask {
            mode,
            kind: MaskKind::Labels(bits),
        })
    }

    pub fn per_channel(mode: MaskMode, rows: Vec<Vec<bool>>) -> Result<Self> {
        if rows.len() != 8 {
            return Err(Error::Config(format!("expected 8 label rows, got {}", rows.len())));
        }
        let channels = rows[0].len();
        if channels == 0 || rows.iter().any(|r| r.len() != channels) {
            return Err(Error::Config("per-channel rows must be non-empty and equal length".into()));
        }
        Ok(SubbandMask {
            mode,
            kind: MaskKind::PerChannel(rows),
        })
    }

    /// Per-subband channel count this mask is committed to, if any.
    pub fn channels(&self) -> Option<usize> {
        match &self.kind {
            MaskKind::Labels(_) => None,
            MaskKind::PerChannel(rows) => Some(rows[0].len()),
        }
    }

    pub fn retains(&self, label: usize, channel: usize) -> bool {
        match &self.kind {
            MaskKind::Labels(bits) => bits & (1 << label) != 0,
            MaskKind::PerChannel(rows) => rows[label][channel],
        }
    }

    pub fn retains_any(&self, label: usize) -> bool {
        match &self.kind {
            MaskKind::Labels(bits) => bits & (1 << label) != 0,
            MaskKind::PerChannel(rows) => rows[label].iter().any(|&b| b),
        }
    }

    /// Retained slot count at (label, channel) granularity for a set whose
    /// subbands have `channels` channels each.
    pub fn retained_slots(&self, channels: usize) -> usize {
        (0..8)
            .map(|l| (0..channels).filter(|&c| self.retains(l, c)).count())
            .sum()
    }

    fn check_channels(&self, channels: usize) -> Result<()> {
        if let Some(mc) = self.channels() {
            if mc != channels {
                return Err(Error::Shape(format!(
                    "mask addresses {mc} channels per subband, set has {channels}"
                )));
            }
        }
        Ok(())
    }
}

/// How a latent should be transformed and masked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressionConfig {
    pub mode: MaskMode,
    pub mask: SubbandMask,
}

impl CompressionConfig {
    pub fn fixed_multi() -> Self {
        CompressionConfig {
            mode: MaskMode::Multi,
            mask: SubbandMask::fixed_multi(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mode != self.mask.mode {
            return Err(Error::Config(format!(
                "config mode {:?} does not match mask mode {:?}",
                self.mode, self.mask.mode
            )));
        }
        Ok(())
    }
}

fn mask_bands<T: Element>(bands: &[VideoTensor<T>], mask: &SubbandMask) -> Result<Vec<VideoTensor<T>>> {
    let channels = bands[0].shape().c;
    mask.check_channels(channels)?;
    let mut out = Vec::with_capacity(8);
    for (label, band) in bands.iter().enumerate() {
        match &mask.kind {
            MaskKind::Labels(_) => {
                if mask.retains_any(label) {
                    out.push(band.clone());
                } else {
                    out.push(VideoTensor::zeros(band.shape()));
                }
            }
            MaskKind::PerChannel(_) => {
                let shape = band.shape();
                let per_channel = shape.t * shape.h * shape.w;
                let mut data = Vec::with_capacity(shape.volume());
                for ch in 0..channels {
                    if mask.retains(label, ch) {
                        data.extend_from_slice(band.channel(ch));
                    } else {
                        data.extend(std::iter::repeat(T::from_f64(0.0)).take(per_channel));
                    }
                }
                out.push(VideoTensor::new(shape, data)?);
            }
        }
    }
    Ok(out)
}

/// Zero out every subband (or channel slot) the mask does not retain.
/// Retained data passes through bit-exact.
pub fn apply_mask_multi<T: Element>(m: &MultiWTSet<T>, mask: &SubbandMask) -> Result<MultiWTSet<T>> {
    if mask.mode != MaskMode::Multi {
        return Err(Error::Config("mask mode is single, set is multi".into()));
    }
    MultiWTSet::new(mask_bands(m.bands(), mask)?, m.source_shape(), m.group_order())
}

/// Single-level counterpart of [`apply_mask_multi`].
pub fn apply_mask_single<T: Element>(s: &SubbandSet<T>, mask: &SubbandMask) -> Result<SubbandSet<T>> {
    if mask.mode != MaskMode::Single {
        return Err(Error::Config("mask mode is multi, set is single".into()));
    }
    SubbandSet::new(mask_bands(s.bands(), mask)?, s.source_shape())
}

/// Serialized container holding only retained subband data plus metadata for
/// exact zero-padded reconstruction.
#[derive(Debug, Clone, PartialEq)]
pub struct PackedLatent {
    pub mode: MaskMode,
    pub dtype: Dtype,
    pub source_shape: Shape,
    pub group_order: [SubbandLabel3D; 8],
    pub mask: SubbandMask,
    payload: Vec<u8>,
}

impl PackedLatent {
    pub fn payload_len(&self) -> usize {
        self.payload.len()
    }

    /// Number of retained elements across all subbands.
    pub fn retained_elements(&self) -> usize {
        self.payload.len() / self.dtype.size()
    }

    fn band_shape(&self) -> Result<Shape> {
        let s = self.source_shape;
        match self.mode {
            MaskMode::Single => {
                if s.t % 2 != 0 || s.h % 2 != 0 || s.w % 2 != 0 {
                    return Err(Error::format("dims", format!("shape {s} not divisible for single mode")));
                }
                Ok(Shape::new(s.c, s.t / 2, s.h / 2, s.w / 2))
            }
            MaskMode::Multi => {
                if s.t % 8 != 0 || s.h % 2 != 0 || s.w % 2 != 0 {
                    return Err(Error::format("dims", format!("shape {s} not divisible for multi mode")));
                }
                Ok(Shape::new(s.c * 4, s.t / 8, s.h / 2, s.w / 2))
            }
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(64 + self.payload.len());
        out.extend_from_slice(LCP1_MAGIC);
        out.push(LCP1_VERSION);
        out.push(self.mode.tag());
        out.push(self.dtype.tag());
        for dim in [
            self.source_shape.c,
            self.source_shape.t,
            self.source_shape.h,
            self.source_shape.w,
        ] {
            out.extend_from_slice(&(dim as u64).to_le_bytes());
        }
        for label in self.group_order {
            out.push(label.index() as u8);
        }
        match &self.mask.kind {
            MaskKind::Labels(bits) => {
                out.push(0);
                out.push(*bits);
            }
            MaskKind::PerChannel(rows) => {
                out.push(1);
                let channels = rows[0].len();
                let nbits = 8 * channels;
                let mut bitmap = vec![0u8; nbits.div_ceil(8)];
                for (label, row) in rows.iter().enumerate() {
                    for (ch, &keep) in row.iter().enumerate() {
                        if keep {
                            let slot = label * channels + ch;
                            bitmap[slot / 8] |= 1 << (slot % 8);
                        }
                    }
                }
                out.extend_from_slice(&bitmap);
            }
        }
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let fixed = 4 + 1 + 1 + 1 + 32 + 8 + 1;
        if bytes.len() < fixed {
            return Err(Error::format("header", format!("container is {} bytes, header needs {fixed}", bytes.len())));
        }
        if &bytes[0..4] != LCP1_MAGIC {
            return Err(Error::format("magic", format!("expected \"LCP1\", got {:?}", &bytes[0..4])));
        }
        if bytes[4] != LCP1_VERSION {
            return Err(Error::format("version", format!("unsupported version {}", bytes[4])));
        }
        let mode = MaskMode::from_tag(bytes[5])?;
        let dtype = Dtype::from_tag(bytes[6])?;
        let mut dims = [0usize; 4];
        for (i, d) in dims.iter_mut().enumerate() {
            let v = u64::from_le_bytes(bytes[7 + i * 8..15 + i * 8].try_into().unwrap());
            if v as usize as u64 != v {
                return Err(Error::format("dims", "dimension overflows usize".to_string()));
            }
            *d = v as usize;
        }
        let source_shape = Shape::new(dims[0], dims[1], dims[2], dims[3]);
        source_shape.validate()?;
        let mut group_order = DEFAULT_GROUP_ORDER;
        for (i, slot) in group_order.iter_mut().enumerate() {
            *slot = SubbandLabel3D::from_index(bytes[39 + i] as usize)?;
        }
        let kind_tag = bytes[47];
        let mut offset = 48;
        let tmp = PackedLatent {
            mode,
            dtype,
            source_shape,
            group_order,
            mask: SubbandMask::all(mode),
            payload: Vec::new(),
        };
        let band_shape = tmp.band_shape()?;
        let channels = band_shape.c;
        let mask = match kind_tag {
            0 => {
                if bytes.len() < offset + 1 {
                    return Err(Error::format("mask", "missing label bitmask byte".to_string()));
                }
                let bits = bytes[offset];
                offset += 1;
                SubbandMask {
                    mode,
                    kind: MaskKind::Labels(bits),
                }
            }
            1 => {
                let nbytes = (8 * channels).div_ceil(8);
                if bytes.len() < offset + nbytes {
                    return Err(Error::format("mask", "per-channel bitmap truncated".to_string()));
                }
                let bitmap = &bytes[offset..offset + nbytes];
                offset += nbytes;
                let mut rows = vec![vec![false; channels]; 8];
                for (label, row) in rows.iter_mut().enumerate() {
                    for (ch, slot_val) in row.iter_mut().enumerate() {
                        let slot = label * channels + ch;
                        *slot_val = bitmap[slot / 8] & (1 << (slot % 8)) != 0;
                    }
                }
                SubbandMask {
                    mode,
                    kind: MaskKind::PerChannel(rows),
                }
            }
            other => return Err(Error::format("mask", format!("unknown mask kind {other}"))),
        };
        let per_channel_elems = band_shape.t * band_shape.h * band_shape.w;
        let expected = mask.retained_slots(channels) * per_channel_elems * dtype.size();
        let payload = &bytes[offset..];
        if payload.len() != expected {
            return Err(Error::format(
                "truncated",
                format!("payload is {} bytes, mask requires {expected}", payload.len()),
            ));
        }
        Ok(PackedLatent {
            mode,
            dtype,
            source_shape,
            group_order,
            mask,
            payload: payload.to_vec(),
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

fn pack_bands<T: Element>(
    bands: &[VideoTensor<T>],
    source_shape: Shape,
    group_order: [SubbandLabel3D; 8],
    mode: MaskMode,
    mask: &SubbandMask,
) -> Result<PackedLatent> {
    if mask.mode != mode {
        return Err(Error::Config("mask mode does not match set mode".into()));
    }
    let channels = bands[0].shape().c;
    mask.check_channels(channels)?;
    let mut payload = Vec::new();
    for (label, band) in bands.iter().enumerate() {
        for ch in 0..channels {
            if mask.retains(label, ch) {
                for &x in band.channel(ch) {
                    x.write_le(&mut payload);
                }
            }
        }
    }
    Ok(PackedLatent {
        mode,
        dtype: T::DTYPE,
        source_shape,
        group_order,
        mask: mask.clone(),
        payload,
    })
}

/// Pack retained subbands of a multi-level set into an LCP1 container.
pub fn pack_multi<T: Element>(m: &MultiWTSet<T>, mask: &SubbandMask) -> Result<PackedLatent> {
    pack_bands(m.bands(), m.source_shape(), m.group_order(), MaskMode::Multi, mask)
}

/// Pack retained subbands of a single-level set into an LCP1 container.
pub fn pack_single<T: Element>(s: &SubbandSet<T>, mask: &SubbandMask) -> Result<PackedLatent> {
    pack_bands(s.bands(), s.source_shape(), DEFAULT_GROUP_ORDER, MaskMode::Single, mask)
}

fn unpack_bands<T: Element>(p: &PackedLatent) -> Result<Vec<VideoTensor<T>>> {
    if T::DTYPE != p.dtype {
        return Err(Error::format(
            "dtype",
            format!("container holds {}, requested {}", p.dtype, T::DTYPE),
        ));
    }
    let band_shape = p.band_shape()?;
    let channels = band_shape.c;
    let per_channel = band_shape.t * band_shape.h * band_shape.w;
    let esize = p.dtype.size();
    let mut cursor = 0usize;
    let mut bands = Vec::with_capacity(8);
    for label in 0..8 {
        let mut data = Vec::with_capacity(band_shape.volume());
        for ch in 0..channels {
            if p.mask.retains(label, ch) {
                let slab = &p.payload[cursor..cursor + per_channel * esize];
                data.extend(slab.chunks_exact(esize).map(T::read_le));
                cursor += per_channel * esize;
            } else {
                data.extend(std::iter::repeat(T::from_f64(0.0)).take(per_channel));
            }
        }
        bands.push(VideoTensor::new(band_shape, data)?);
    }
    Ok(bands)
}

/// Restore a multi-level set from a container, zero-filling everything the
/// mask dropped. `unpack_multi(pack_multi(m, mask))` equals
/// `apply_mask_multi(m, mask)` bit-exactly.
pub fn unpack_multi<T: Element>(p: &PackedLatent) -> Result<MultiWTSet<T>> {
    if p.mode != MaskMode::Multi {
        return Err(Error::format("mode", "container is single mode".to_string()));
    }
    MultiWTSet::new(unpack_bands(p)?, p.source_shape, p.group_order)
}

pub fn unpack_single<T: Element>(p: &PackedLatent) -> Result<SubbandSet<T>> {
    if p.mode != MaskMode::Single {
        return Err(Error::format("mode", "container is multi mode".to_string()));
    }
    SubbandSet::new(unpack_bands(p)?, p.source_shape)
}

/// Transform, mask, and pack a latent in one step.
pub fn compress_latent<T: Element>(z: &VideoTensor<T>, cfg: &CompressionConfig) -> Result<PackedLatent> {
    cfg.validate()?;
    match cfg.mode {
        MaskMode::Multi => pack_multi(&multi_wt(z)?, &cfg.mask),
        MaskMode::Single => pack_single(&wt3d(z)?, &cfg.mask),
    }
}

/// Zero-pad and invert: the reconstruction half of the compression round trip.
pub fn decompress_latent<T: Element>(p: &PackedLatent) -> Result<VideoTensor<T>> {
    match p.mode {
        MaskMode::Multi => multi_iwt(&unpack_multi(p)?),
        MaskMode::Single => iwt3d(&unpack_single(p)?),
    }
}

/// Per-channel mean squared energies for every (label, channel) slot.
pub fn slot_energies<T: Element>(bands: &[VideoTensor<T>]) -> Vec<Vec<f64>> {
    bands
        .iter()
        .map(|band| {
            let shape = band.shape();
            let n = (shape.t * shape.h * shape.w) as f64;
            (0..shape.c)
                .map(|ch| band.channel(ch).iter().map(|x| x.to_f64() * x.to_f64()).sum::<f64>() / n)
                .collect()
        })
        .collect()
}

/// Build a per-channel mask retaining the `ceil(keep_fraction * slots)`
/// highest-energy (label, channel) slots. Ties break on canonical label
/// order, then ascending channel index.
pub fn adaptive_select<T: Element>(m: &MultiWTSet<T>, keep_fraction: f64) -> Result<SubbandMask> {
    if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
        return Err(Error::Config(format!(
            "keep_fraction must be in (0, 1], got {keep_fraction}"
        )));
    }
    let channels = m.band_shape().c;
    let energies = slot_energies(m.bands());
    let mut slots: Vec<(usize, usize, f64)> = Vec::with_capacity(8 * channels);
    for (label, row) in energies.iter().enumerate() {
        for (ch, &e) in row.iter().enumerate() {
            slots.push((label, ch, e));
        }
    }
    // descending energy; ties by (label, channel)
    slots.sort_by(|a, b| {
        b.2.partial_cmp(&a.2)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.0.cmp(&b.0))
            .then(a.1.cmp(&b.1))
    });
    let keep = ((keep_fraction * (8 * channels) as f64).ceil() as usize).min(8 * channels);
    let mut rows = vec![vec![false; channels]; 8];
    for &(label, ch, _) in slots.iter().take(keep) {
        rows[label][ch] = true;
    }
    SubbandMask::per_channel(MaskMode::Multi, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavelet::MultiWTLabel;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random<T: Element>(shape: Shape, seed: u64) -> VideoTensor<T> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        VideoTensor::from_fn(shape, |_, _, _, _| rng.gen_range(-1.0..1.0))
    }

    fn max_abs_diff<T: Element>(a: &VideoTensor<T>, b: &VideoTensor<T>) -> f64 {
        a.data()
            .iter()
            .zip(b.data())
            .map(|(x, y)| (x.to_f64() - y.to_f64()).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn fixed_mask_zeroes_hhh_only_set() {
        let z = random::<f64>(Shape::new(2, 8, 4, 4), 1);
        let m = multi_wt(&z).unwrap();
        let band_shape = m.band_shape();
        let mut bands = vec![VideoTensor::<f64>::zeros(band_shape); 8];
        bands[MultiWTLabel::HHH.index()] = m.band(MultiWTLabel::HHH).clone();
        let set = MultiWTSet::new(bands, z.shape(), m.group_order()).unwrap();
        let masked = apply_mask_multi(&set, &SubbandMask::fixed_multi()).unwrap();
        for band in masked.bands() {
            assert!(band.data().iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn apply_mask_idempotent_and_fixed_point() {
        let z = random::<f64>(Shape::new(2, 8, 4, 4), 2);
        let m = multi_wt(&z).unwrap();
        let mask = SubbandMask::fixed_multi();
        let once = apply_mask_multi(&m, &mask).unwrap();
        let twice = apply_mask_multi(&once, &mask).unwrap();
        assert_eq!(once, twice);
        // a set already zero in non-retained labels is a fixed point
        assert_eq!(apply_mask_multi(&once, &mask).unwrap(), once);
    }

    #[test]
    fn fixed_mask_payload_is_half() {
        let z = random::<f32>(Shape::new(16, 8, 16, 16), 3);
        let p = compress_latent(&z, &CompressionConfig::fixed_multi()).unwrap();
        assert_eq!(p.payload_len(), 4 * z.shape().volume() / 2);
        assert_eq!(p.payload_len(), 65536);
        assert_eq!(p.retained_elements() * 2, z.shape().volume());

        // 8-channel latent packs to the volume of a 4-channel latent
        let z8 = random::<f32>(Shape::new(8, 8, 16, 16), 4);
        let p8 = compress_latent(&z8, &CompressionConfig::fixed_multi()).unwrap();
        assert_eq!(p8.retained_elements() * 2, z8.shape().volume());
    }

    #[test]
    fn unpack_pack_equals_apply_mask() {
        let z = random::<f32>(Shape::new(4, 8, 8, 8), 5);
        let m = multi_wt(&z).unwrap();
        let mask = SubbandMask::fixed_multi();
        let p = pack_multi(&m, &mask).unwrap();
        let back = unpack_multi::<f32>(&p).unwrap();
        assert_eq!(back, apply_mask_multi(&m, &mask).unwrap());
        // pack -> unpack -> pack is byte-identical
        let p2 = pack_multi(&back, &mask).unwrap();
        assert_eq!(p.to_bytes(), p2.to_bytes());
    }

    #[test]
    fn container_round_trip_bit_exact() {
        let z = random::<f64>(Shape::new(4, 8, 8, 8), 6);
        let p = compress_latent(&z, &CompressionConfig::fixed_multi()).unwrap();
        let back = PackedLatent::from_bytes(&p.to_bytes()).unwrap();
        assert_eq!(p, back);
    }

    #[test]
    fn truncated_container_errors() {
        let z = random::<f32>(Shape::new(2, 8, 4, 4), 7);
        let p = compress_latent(&z, &CompressionConfig::fixed_multi()).unwrap();
        let mut bytes = p.to_bytes();
        bytes.truncate(bytes.len() - 3);
        match PackedLatent::from_bytes(&bytes) {
            Err(Error::Format { field, .. }) => assert_eq!(field, "truncated"),
            other => panic!("expected truncated, got {other:?}"),
        }
    }

    #[test]
    fn bad_magic_errors() {
        match PackedLatent::from_bytes(&[0u8; 64]) {
            Err(Error::Format { field, .. }) => assert_eq!(field, "magic"),
            other => panic!("expected magic, got {other:?}"),
        }
    }

    #[test]
    fn empty_mask_round_trips_to_zero() {
        let z = random::<f64>(Shape::new(2, 8, 4, 4), 8);
        let cfg = CompressionConfig {
            mode: MaskMode::Multi,
            mask: SubbandMask::empty(MaskMode::Multi),
        };
        let p = compress_latent(&z, &cfg).unwrap();
        assert_eq!(p.payload_len(), 0);
        let out = decompress_latent::<f64>(&p).unwrap();
        assert!(out.data().iter().all(|&x| x == 0.0));
        assert_eq!(out.shape(), z.shape());
    }

    #[test]
    fn constant_latent_survives_compression() {
        let z = VideoTensor::<f64>::constant(Shape::new(2, 8, 4, 4), 0.25);
        let p = compress_latent(&z, &CompressionConfig::fixed_multi()).unwrap();
        let back = decompress_latent::<f64>(&p).unwrap();
        assert!(max_abs_diff(&z, &back) < 1e-10);
    }

    #[test]
    fn projection_idempotent_and_nonexpansive() {
        let cfg = CompressionConfig::fixed_multi();
        let z = random::<f32>(Shape::new(4, 8, 8, 8), 9);
        let once = decompress_latent::<f32>(&compress_latent(&z, &cfg).unwrap()).unwrap();
        let twice = decompress_latent::<f32>(&compress_latent(&once, &cfg).unwrap()).unwrap();
        assert!(max_abs_diff(&once, &twice) < 1e-5);
        assert!(once.energy() <= z.energy() * (1.0 + 1e-6));
    }

    #[test]
    fn projection_fixed_point_exact() {
        // a latent already in the retained subspace round-trips within 1e-5
        let cfg = CompressionConfig::fixed_multi();
        let z = random::<f32>(Shape::new(4, 8, 8, 8), 10);
        let projected = decompress_latent::<f32>(&compress_latent(&z, &cfg).unwrap()).unwrap();
        let again = decompress_latent::<f32>(&compress_latent(&projected, &cfg).unwrap()).unwrap();
        assert!(max_abs_diff(&projected, &again) < 1e-5);
    }

    #[test]
    fn f64_round_trip_tight() {
        let cfg = CompressionConfig::fixed_multi();
        let z = random::<f64>(Shape::new(4, 8, 8, 8), 11);
        let once = decompress_latent::<f64>(&compress_latent(&z, &cfg).unwrap()).unwrap();
        let twice = decompress_latent::<f64>(&compress_latent(&once, &cfg).unwrap()).unwrap();
        assert!(max_abs_diff(&once, &twice) < 1e-10);
    }

    #[test]
    fn single_mode_round_trip() {
        let cfg = CompressionConfig {
            mode: MaskMode::Single,
            mask: SubbandMask::all(MaskMode::Single),
        };
        let z = random::<f64>(Shape::new(3, 4, 6, 6), 12);
        let p = compress_latent(&z, &cfg).unwrap();
        let back = decompress_latent::<f64>(&p).unwrap();
        assert!(max_abs_diff(&z, &back) < 1e-10);
    }

    #[test]
    fn adaptive_select_dominance() {
        // all energy in stage LLL -> keep_fraction 0.5 retains LLL channels
        let z = random::<f64>(Shape::new(2, 8, 4, 4), 13);
        let m = multi_wt(&z).unwrap();
        let band_shape = m.band_shape();
        let mut bands = vec![VideoTensor::<f64>::zeros(band_shape); 8];
        bands[0] = m.band(MultiWTLabel::LLL).clone();
        let set = MultiWTSet::new(bands, z.shape(), m.group_order()).unwrap();
        let mask = adaptive_select(&set, 0.5).unwrap();
        for ch in 0..band_shape.c {
            assert!(mask.retains(0, ch));
        }
        assert_eq!(mask.retained_slots(band_shape.c), 4 * band_shape.c);
    }

    #[test]
    fn adaptive_full_fraction_is_identity() {
        let z = random::<f64>(Shape::new(2, 8, 4, 4), 14);
        let m = multi_wt(&z).unwrap();
        let mask = adaptive_select(&m, 1.0).unwrap();
        let masked = apply_mask_multi(&m, &mask).unwrap();
        assert_eq!(masked, m);
    }

    #[test]
    fn per_channel_pack_round_trip() {
        let z = random::<f32>(Shape::new(2, 8, 4, 4), 15);
        let m = multi_wt(&z).unwrap();
        let mask = adaptive_select(&m, 0.4).unwrap();
        let p = pack_multi(&m, &mask).unwrap();
        let back = PackedLatent::from_bytes(&p.to_bytes()).unwrap();
        assert_eq!(p, back);
        assert_eq!(unpack_multi::<f32>(&p).unwrap(), apply_mask_multi(&m, &mask).unwrap());
        // byte-size law
        let per = m.band_shape().t * m.band_shape().h * m.band_shape().w;
        assert_eq!(p.payload_len(), mask.retained_slots(m.band_shape().c) * per * 4);
    }

    #[test]
    fn mode_mismatch_errors() {
        let z = random::<f64>(Shape::new(2, 8, 4, 4), 16);
        let m = multi_wt(&z).unwrap();
        assert!(apply_mask_multi(&m, &SubbandMask::fixed_single()).is_err());
    }
}
