//! Orthonormal Haar analysis/synthesis along any axis, single-level 3D
//! decomposition into eight subbands, and the three-stage multi-level
//! transform used for latent compression.
//!
//! Filters are the orthonormal pair low = (1/sqrt(2), 1/sqrt(2)),
//! high = (1/sqrt(2), -1/sqrt(2)), so every transform here preserves
//! sum-of-squares energy and the zero-out mask is an orthogonal projection.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{concat_channels, split_channels, Element, Shape, VideoTensor};

/// Which tensor axis a 1-D transform runs along.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis3 {
    Time,
    Height,
    Width,
}

impl Axis3 {
    pub fn name(self) -> &'static str {
        match self {
            Axis3::Time => "time",
            Axis3::Height => "height",
            Axis3::Width => "width",
        }
    }
}

/// Subband label of one 3D wavelet level. Letter order is
/// `(temporal, height, width)` filter choice, L = low-pass, H = high-pass.
#[allow(clippy::upper_case_acronyms)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SubbandLabel3D {
    LLL,
    LLH,
    LHL,
    LHH,
    HLL,
    HLH,
    HHL,
    HHH,
}

/// Label of the three-stage multi-level transform. Letter `k` indexes
/// decomposition stage `k`, not a spatial axis.
#[allow(clippy::upper_case_acronyms)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MultiWTLabel {
    LLL,
    LLH,
    LHL,
    LHH,
    HLL,
    HLH,
    HHL,
    HHH,
}

pub const LABEL_NAMES: [&str; 8] = ["LLL", "LLH", "LHL", "LHH", "HLL", "HLH", "HHL", "HHH"];

macro_rules! label_impl {
    ($ty:ident) => {
        impl $ty {
            pub const ALL: [$ty; 8] = [
                $ty::LLL,
                $ty::LLH,
                $ty::LHL,
                $ty::LHH,
                $ty::HLL,
                $ty::HLH,
                $ty::HHL,
                $ty::HHH,
            ];

            /// Canonical (lexicographic) index, 0..8.
            pub fn index(self) -> usize {
                self as usize
            }

            pub fn from_index(i: usize) -> Result<Self> {
                Self::ALL
                    .get(i)
                    .copied()
                    .ok_or_else(|| Error::format("label", format!("label index {i} out of range")))
            }

            pub fn name(self) -> &'static str {
                LABEL_NAMES[self.index()]
            }

            pub fn from_name(s: &str) -> Result<Self> {
                LABEL_NAMES
                    .iter()
                    .position(|&n| n == s)
                    .map(|i| Self::ALL[i])
                    .ok_or_else(|| Error::format("label", format!("unknown label {s:?}")))
            }
        }

        impl std::fmt::Display for $ty {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.write_str(self.name())
            }
        }
    };
}

label_impl!(SubbandLabel3D);
label_impl!(MultiWTLabel);

impl SubbandLabel3D {
    /// Temporal filter letter: true when the first letter is H.
    pub fn temporal_high(self) -> bool {
        self.index() >= 4
    }
}

/// Stage-1 concatenation order inside the temporal L group then the H group;
/// lexicographic within each group. Stored with every multi-level set so the
/// inverse is unambiguous.
pub const DEFAULT_GROUP_ORDER: [SubbandLabel3D; 8] = [
    SubbandLabel3D::LLL,
    SubbandLabel3D::LLH,
    SubbandLabel3D::LHL,
    SubbandLabel3D::LHH,
    SubbandLabel3D::HLL,
    SubbandLabel3D::HLH,
    SubbandLabel3D::HHL,
    SubbandLabel3D::HHH,
];

/// The eight subbands of one 3D wavelet level, all of shape
/// `(C, T/2, H/2, W/2)`, indexed by [`SubbandLabel3D`].
#[derive(Debug, Clone, PartialEq)]
pub struct SubbandSet<T: Element> {
    bands: Vec<VideoTensor<T>>,
    source_shape: Shape,
}

/// The eight stage-labeled outputs of the three-stage transform, all of shape
/// `(4C, T/8, H/2, W/2)`, indexed by [`MultiWTLabel`].
#[derive(Debug, Clone, PartialEq)]
pub struct MultiWTSet<T: Element> {
    bands: Vec<VideoTensor<T>>,
    source_shape: Shape,
    group_order: [SubbandLabel3D; 8],
}

impl<T: Element> SubbandSet<T> {
    pub fn new(bands: Vec<VideoTensor<T>>, source_shape: Shape) -> Result<Self> {
        validate_bands(&bands, expected_wt3d_shape(source_shape)?)?;
        Ok(SubbandSet { bands, source_shape })
    }

    pub fn band(&self, label: SubbandLabel3D) -> &VideoTensor<T> {
        &self.bands[label.index()]
    }

    pub fn bands(&self) -> &[VideoTensor<T>] {
        &self.bands
    }

    pub fn bands_mut(&mut self) -> &mut [VideoTensor<T>] {
        &mut self.bands
    }

    pub fn source_shape(&self) -> Shape {
        self.source_shape
    }

    pub fn band_shape(&self) -> Shape {
        self.bands[0].shape()
    }
}

impl<T: Element> MultiWTSet<T> {
    pub fn new(
        bands: Vec<VideoTensor<T>>,
        source_shape: Shape,
        group_order: [SubbandLabel3D; 8],
    ) -> Result<Self> {
        validate_bands(&bands, expected_multi_shape(source_shape)?)?;
        validate_group_order(&group_order)?;
        Ok(MultiWTSet {
            bands,
            source_shape,
            group_order,
        })
    }

    pub fn band(&self, label: MultiWTLabel) -> &VideoTensor<T> {
        &self.bands[label.index()]
    }

    pub fn bands(&self) -> &[VideoTensor<T>] {
        &self.bands
    }

    pub fn bands_mut(&mut self) -> &mut [VideoTensor<T>] {
        &mut self.bands
    }

    pub fn source_shape(&self) -> Shape {
        self.source_shape
    }

    pub fn band_shape(&self) -> Shape {
        self.bands[0].shape()
    }

    pub fn group_order(&self) -> [SubbandLabel3D; 8] {
        self.group_order
    }
}

fn validate_bands<T: Element>(bands: &[VideoTensor<T>], expected: Shape) -> Result<()> {
    if bands.len() != 8 {
        return Err(Error::Shape(format!("expected 8 subbands, got {}", bands.len())));
    }
    for (i, b) in bands.iter().enumerate() {
        if b.shape() != expected {
            return Err(Error::Shape(format!(
                "subband {} has shape {}, expected {expected}",
                LABEL_NAMES[i],
                b.shape()
            )));
        }
    }
    Ok(())
}

fn validate_group_order(order: &[SubbandLabel3D; 8]) -> Result<()> {
    let mut seen = [false; 8];
    for label in order {
        seen[label.index()] = true;
    }
    if seen.iter().all(|&s| s) {
        // first four must come from the temporal L group, last four from H
        if order[..4].iter().all(|l| !l.temporal_high()) && order[4..].iter().all(|l| l.temporal_high()) {
            return Ok(());
        }
    }
    Err(Error::format(
        "group_order",
        format!("invalid stage-1 group order {order:?}"),
    ))
}

fn expected_wt3d_shape(source: Shape) -> Result<Shape> {
    require_even(source.t, "time")?;
    require_even(source.h, "height")?;
    require_even(source.w, "width")?;
    Ok(Shape::new(source.c, source.t / 2, source.h / 2, source.w / 2))
}

fn expected_multi_shape(source: Shape) -> Result<Shape> {
    if source.t % 8 != 0 {
        return Err(Error::Dimension {
            axis: "time",
            detail: format!("time extent {} must be divisible by 8", source.t),
        });
    }
    require_even(source.h, "height")?;
    require_even(source.w, "width")?;
    Ok(Shape::new(source.c * 4, source.t / 8, source.h / 2, source.w / 2))
}

fn require_even(extent: usize, axis: &'static str) -> Result<()> {
    if extent < 2 || extent % 2 != 0 {
        return Err(Error::Dimension {
            axis,
            detail: format!("extent {extent} must be even and >= 2"),
        });
    }
    Ok(())
}

fn axis_extent(shape: Shape, axis: Axis3) -> usize {
    match axis {
        Axis3::Time => shape.t,
        Axis3::Height => shape.h,
        Axis3::Width => shape.w,
    }
}

fn with_axis_extent(shape: Shape, axis: Axis3, extent: usize) -> Shape {
    let mut s = shape;
    match axis {
        Axis3::Time => s.t = extent,
        Axis3::Height => s.h = extent,
        Axis3::Width => s.w = extent,
    }
    s
}

/// One level of Haar analysis along `axis`: adjacent pairs `(a, b)` become
/// `low = (a + b)/sqrt(2)`, `high = (a - b)/sqrt(2)`; the axis extent halves.
pub fn haar_analysis_axis<T: Element>(
    t: &VideoTensor<T>,
    axis: Axis3,
) -> Result<(VideoTensor<T>, VideoTensor<T>)> {
    let shape = t.shape();
    require_even(axis_extent(shape, axis), axis.name())?;
    let out_shape = with_axis_extent(shape, axis, axis_extent(shape, axis) / 2);
    let mut low = vec![T::from_f64(0.0); out_shape.volume()];
    let mut high = vec![T::from_f64(0.0); out_shape.volume()];
    for c in 0..out_shape.c {
        for ti in 0..out_shape.t {
            for hi in 0..out_shape.h {
                for wi in 0..out_shape.w {
                    let (c0, t0, h0, w0, c1, t1, h1, w1) = match axis {
                        Axis3::Time => (c, 2 * ti, hi, wi, c, 2 * ti + 1, hi, wi),
                        Axis3::Height => (c, ti, 2 * hi, wi, c, ti, 2 * hi + 1, wi),
                        Axis3::Width => (c, ti, hi, 2 * wi, c, ti, hi, 2 * wi + 1),
                    };
                    let a = t.at(c0, t0, h0, w0);
                    let b = t.at(c1, t1, h1, w1);
                    let out = out_shape.index(c, ti, hi, wi);
                    low[out] = T::from_f64((a + b) * FRAC_1_SQRT_2);
                    high[out] = T::from_f64((a - b) * FRAC_1_SQRT_2);
                }
            }
        }
    }
    Ok((
        VideoTensor::new(out_shape, low)?,
        VideoTensor::new(out_shape, high)?,
    ))
}

/// Inverse of [`haar_analysis_axis`]: `a = (low + high)/sqrt(2)`,
/// `b = (low - high)/sqrt(2)` interleaved along `axis`.
pub fn haar_synthesis_axis<T: Element>(
    low: &VideoTensor<T>,
    high: &VideoTensor<T>,
    axis: Axis3,
) -> Result<VideoTensor<T>> {
    if low.shape() != high.shape() {
        return Err(Error::Shape(format!(
            "low shape {} != high shape {}",
            low.shape(),
            high.shape()
        )));
    }
    let in_shape = low.shape();
    let out_shape = with_axis_extent(in_shape, axis, axis_extent(in_shape, axis) * 2);
    let mut data = vec![T::from_f64(0.0); out_shape.volume()];
    for c in 0..in_shape.c {
        for ti in 0..in_shape.t {
            for hi in 0..in_shape.h {
                for wi in 0..in_shape.w {
                    let l = low.at(c, ti, hi, wi);
                    let h = high.at(c, ti, hi, wi);
                    let a = (l + h) * FRAC_1_SQRT_2;
                    let b = (l - h) * FRAC_1_SQRT_2;
                    let (ia, ib) = match axis {
                        Axis3::Time => (
                            out_shape.index(c, 2 * ti, hi, wi),
                            out_shape.index(c, 2 * ti + 1, hi, wi),
                        ),
                        Axis3::Height => (
                            out_shape.index(c, ti, 2 * hi, wi),
                            out_shape.index(c, ti, 2 * hi + 1, wi),
                        ),
                        Axis3::Width => (
                            out_shape.index(c, ti, hi, 2 * wi),
                            out_shape.index(c, ti, hi, 2 * wi + 1),
                        ),
                    };
                    data[ia] = T::from_f64(a);
                    data[ib] = T::from_f64(b);
                }
            }
        }
    }
    VideoTensor::new(out_shape, data)
}

/// Single-level 3D decomposition into the eight per-axis subbands.
pub fn wt3d<T: Element>(t: &VideoTensor<T>) -> Result<SubbandSet<T>> {
    let source_shape = t.shape();
    expected_wt3d_shape(source_shape)?;
    let (tl, th) = haar_analysis_axis(t, Axis3::Time)?;
    let mut bands = Vec::with_capacity(8);
    for temporal in [tl, th] {
        let (hl, hh) = haar_analysis_axis(&temporal, Axis3::Height)?;
        for height in [hl, hh] {
            let (wl, wh) = haar_analysis_axis(&height, Axis3::Width)?;
            bands.push(wl);
            bands.push(wh);
        }
    }
    SubbandSet::new(bands, source_shape)
}

/// Exact inverse of [`wt3d`] up to rounding.
pub fn iwt3d<T: Element>(s: &SubbandSet<T>) -> Result<VideoTensor<T>> {
    let b = s.bands();
    let mut heights = Vec::with_capacity(4);
    for pair in b.chunks(2) {
        heights.push(haar_synthesis_axis(&pair[0], &pair[1], Axis3::Width)?);
    }
    let tl = haar_synthesis_axis(&heights[0], &heights[1], Axis3::Height)?;
    let th = haar_synthesis_axis(&heights[2], &heights[3], Axis3::Height)?;
    let out = haar_synthesis_axis(&tl, &th, Axis3::Time)?;
    if out.shape() != s.source_shape() {
        return Err(Error::Shape(format!(
            "reconstructed shape {} != source shape {}",
            out.shape(),
            s.source_shape()
        )));
    }
    Ok(out)
}

/// Three-stage multi-level transform: one 3D level, then channel grouping by
/// the stage-1 temporal letter, then two temporal-only levels.
pub fn multi_wt<T: Element>(z: &VideoTensor<T>) -> Result<MultiWTSet<T>> {
    let source_shape = z.shape();
    expected_multi_shape(source_shape)?;
    let stage1 = wt3d(z)?;

    let order = DEFAULT_GROUP_ORDER;
    let l_parts: Vec<_> = order[..4].iter().map(|&l| stage1.band(l).clone()).collect();
    let h_parts: Vec<_> = order[4..].iter().map(|&l| stage1.band(l).clone()).collect();
    let l_cat = concat_channels(&l_parts)?;
    let h_cat = concat_channels(&h_parts)?;

    let (ll, lh) = haar_analysis_axis(&l_cat, Axis3::Time)?;
    let (hl, hh) = haar_analysis_axis(&h_cat, Axis3::Time)?;

    let mut bands = Vec::with_capacity(8);
    for stage2 in [ll, lh, hl, hh] {
        let (low, high) = haar_analysis_axis(&stage2, Axis3::Time)?;
        bands.push(low);
        bands.push(high);
    }
    MultiWTSet::new(bands, source_shape, order)
}

/// Exact inverse of [`multi_wt`] up to rounding.
pub fn multi_iwt<T: Element>(m: &MultiWTSet<T>) -> Result<VideoTensor<T>> {
    let b = m.bands();
    let mut stage2 = Vec::with_capacity(4);
    for pair in b.chunks(2) {
        stage2.push(haar_synthesis_axis(&pair[0], &pair[1], Axis3::Time)?);
    }
    let l_cat = haar_synthesis_axis(&stage2[0], &stage2[1], Axis3::Time)?;
    let h_cat = haar_synthesis_axis(&stage2[2], &stage2[3], Axis3::Time)?;

    let c = m.source_shape().c;
    let order = m.group_order();
    let l_parts = split_channels(&l_cat, &[c; 4])?;
    let h_parts = split_channels(&h_cat, &[c; 4])?;

    let band_shape = l_parts[0].shape();
    let mut bands = vec![VideoTensor::zeros(band_shape); 8];
    for (part, &label) in l_parts.into_iter().zip(&order[..4]) {
        bands[label.index()] = part;
    }
    for (part, &label) in h_parts.into_iter().zip(&order[4..]) {
        bands[label.index()] = part;
    }
    iwt3d(&SubbandSet::new(bands, m.source_shape())?)
}

#[cfg(test)]
mod tests {
    use super::*;
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
    fn haar_pair_values() {
        // pairs (2, 4) along time: low = 6/sqrt(2), high = -2/sqrt(2)
        let t = VideoTensor::<f64>::from_fn(Shape::new(1, 2, 1, 1), |_, ti, _, _| {
            if ti == 0 {
                2.0
            } else {
                4.0
            }
        });
        let (low, high) = haar_analysis_axis(&t, Axis3::Time).unwrap();
        assert!((low.at(0, 0, 0, 0) - 4.242640687).abs() < 1e-8);
        assert!((high.at(0, 0, 0, 0) - (-1.414213562)).abs() < 1e-8);
    }

    #[test]
    fn constant_annihilation_single_axis() {
        let t = VideoTensor::<f64>::constant(Shape::new(2, 4, 4, 4), 3.0);
        for axis in [Axis3::Time, Axis3::Height, Axis3::Width] {
            let (low, high) = haar_analysis_axis(&t, axis).unwrap();
            assert!(high.data().iter().all(|&x| x == 0.0));
            assert!(low
                .data()
                .iter()
                .all(|&x| (x - 3.0 * std::f64::consts::SQRT_2).abs() < 1e-12));
        }
    }

    #[test]
    fn synthesis_pure_cases() {
        let sqrt2 = std::f64::consts::SQRT_2;
        let low = VideoTensor::<f64>::constant(Shape::new(1, 1, 1, 1), sqrt2);
        let high = VideoTensor::<f64>::zeros(Shape::new(1, 1, 1, 1));
        let out = haar_synthesis_axis(&low, &high, Axis3::Time).unwrap();
        assert!((out.at(0, 0, 0, 0) - 1.0).abs() < 1e-12);
        assert!((out.at(0, 1, 0, 0) - 1.0).abs() < 1e-12);

        let out = haar_synthesis_axis(&high, &low, Axis3::Time).unwrap();
        assert!((out.at(0, 0, 0, 0) - 1.0).abs() < 1e-12);
        assert!((out.at(0, 1, 0, 0) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn axis_round_trip_f32() {
        let t = random::<f32>(Shape::new(3, 4, 4, 4), 11);
        for axis in [Axis3::Time, Axis3::Height, Axis3::Width] {
            let (low, high) = haar_analysis_axis(&t, axis).unwrap();
            let back = haar_synthesis_axis(&low, &high, axis).unwrap();
            assert!(max_abs_diff(&t, &back) < 1e-6);
        }
    }

    #[test]
    fn odd_extent_names_axis() {
        let t = VideoTensor::<f64>::zeros(Shape::new(1, 3, 2, 2));
        match haar_analysis_axis(&t, Axis3::Time) {
            Err(Error::Dimension { axis, .. }) => assert_eq!(axis, "time"),
            other => panic!("expected dimension error, got {other:?}"),
        }
    }

    #[test]
    fn wt3d_constant_case() {
        let t = VideoTensor::<f64>::constant(Shape::new(1, 2, 2, 2), 1.5);
        let s = wt3d(&t).unwrap();
        let expected = 1.5 * 2f64.powf(1.5);
        assert!((s.band(SubbandLabel3D::LLL).at(0, 0, 0, 0) - expected).abs() < 1e-12);
        for label in &SubbandLabel3D::ALL[1..] {
            assert!(s.band(*label).data().iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn wt3d_parseval_and_round_trip() {
        let t = random::<f32>(Shape::new(4, 8, 16, 16), 13);
        let s = wt3d(&t).unwrap();
        let in_energy = t.energy();
        let out_energy: f64 = s.bands().iter().map(|b| b.energy()).sum();
        assert!((in_energy - out_energy).abs() / in_energy <= 1e-6);
        let back = iwt3d(&s).unwrap();
        assert!(max_abs_diff(&t, &back) < 1e-5);
    }

    #[test]
    fn wt3d_axis_order_independence() {
        // time->height->width vs width->height->time must agree per subband.
        let t = random::<f64>(Shape::new(2, 4, 4, 4), 17);
        let s = wt3d(&t).unwrap();
        let (wl, wh) = haar_analysis_axis(&t, Axis3::Width).unwrap();
        for (w_letter, w_part) in [(0usize, wl), (1usize, wh)] {
            let (hl, hh) = haar_analysis_axis(&w_part, Axis3::Height).unwrap();
            for (h_letter, h_part) in [(0usize, hl), (1usize, hh)] {
                let (tl, th) = haar_analysis_axis(&h_part, Axis3::Time).unwrap();
                for (t_letter, t_part) in [(0usize, tl), (1usize, th)] {
                    let label = SubbandLabel3D::from_index(t_letter * 4 + h_letter * 2 + w_letter)
                        .unwrap();
                    assert!(max_abs_diff(s.band(label), &t_part) < 1e-6);
                }
            }
        }
    }

    #[test]
    fn wt3d_linearity() {
        let a = random::<f64>(Shape::new(2, 4, 4, 4), 19);
        let b = random::<f64>(Shape::new(2, 4, 4, 4), 23);
        let (alpha, beta) = (0.7, -1.3);
        let combo = VideoTensor::<f64>::from_fn(a.shape(), |c, t, h, w| {
            alpha * a.at(c, t, h, w) + beta * b.at(c, t, h, w)
        });
        let sa = wt3d(&a).unwrap();
        let sb = wt3d(&b).unwrap();
        let sc = wt3d(&combo).unwrap();
        for label in SubbandLabel3D::ALL {
            let expected = VideoTensor::<f64>::from_fn(sa.band(label).shape(), |c, t, h, w| {
                alpha * sa.band(label).at(c, t, h, w) + beta * sb.band(label).at(c, t, h, w)
            });
            assert!(max_abs_diff(sc.band(label), &expected) < 1e-5);
        }
    }

    #[test]
    fn multi_wt_constant_case() {
        let z = VideoTensor::<f64>::constant(Shape::new(2, 8, 4, 4), 0.5);
        let m = multi_wt(&z).unwrap();
        assert_eq!(m.band_shape(), Shape::new(8, 1, 2, 2));
        for label in &MultiWTLabel::ALL[1..] {
            assert!(m.band(*label).data().iter().all(|&x| x == 0.0));
        }
        // within stage LLL, only the channels that came from stage-1 LLL
        // (block 0 of the group order) are nonzero
        let lll = m.band(MultiWTLabel::LLL);
        for c in 0..8 {
            let nonzero = lll.channel(c).iter().any(|&x| x != 0.0);
            assert_eq!(nonzero, c < 2, "channel {c}");
        }
    }

    #[test]
    fn multi_wt_energy_and_round_trip() {
        let z = random::<f32>(Shape::new(8, 8, 16, 16), 29);
        let m = multi_wt(&z).unwrap();
        let in_energy = z.energy();
        let out_energy: f64 = m.bands().iter().map(|b| b.energy()).sum();
        assert!((in_energy - out_energy).abs() / in_energy <= 1e-6);
        let total_elems: usize = m.bands().iter().map(|b| b.shape().volume()).sum();
        assert_eq!(total_elems, z.shape().volume());
        let back = multi_iwt(&m).unwrap();
        assert!(max_abs_diff(&z, &back) < 1e-5);
    }

    #[test]
    fn multi_wt_delta_impulse() {
        let mut data = vec![0.0f64; Shape::new(2, 8, 4, 4).volume()];
        data[37] = 1.0;
        let z = VideoTensor::new(Shape::new(2, 8, 4, 4), data).unwrap();
        let back = multi_iwt(&multi_wt(&z).unwrap()).unwrap();
        assert!(max_abs_diff(&z, &back) < 1e-6);
    }

    #[test]
    fn multi_wt_divisibility_error() {
        let z = VideoTensor::<f64>::zeros(Shape::new(2, 12, 4, 4));
        let err = multi_wt(&z).unwrap_err();
        assert!(err.to_string().contains("divisible by 8"), "{err}");
    }

    #[test]
    fn multi_iwt_zero_set() {
        let shape = Shape::new(8, 1, 2, 2);
        let bands = vec![VideoTensor::<f64>::zeros(shape); 8];
        let m = MultiWTSet::new(bands, Shape::new(2, 8, 4, 4), DEFAULT_GROUP_ORDER).unwrap();
        let out = multi_iwt(&m).unwrap();
        assert!(out.data().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn iwt3d_lll_projection() {
        // keep LLL only; the result's wt3d must have zero high subbands
        let t = random::<f64>(Shape::new(2, 4, 4, 4), 31);
        let s = wt3d(&t).unwrap();
        let band_shape = s.band_shape();
        let mut bands = vec![VideoTensor::<f64>::zeros(band_shape); 8];
        bands[0] = s.band(SubbandLabel3D::LLL).clone();
        let smooth = iwt3d(&SubbandSet::new(bands, t.shape()).unwrap()).unwrap();
        let s2 = wt3d(&smooth).unwrap();
        for label in &SubbandLabel3D::ALL[1..] {
            assert!(s2.band(*label).data().iter().all(|&x| x.abs() < 1e-10));
        }
    }
}
