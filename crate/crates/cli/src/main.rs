//! `latcomp` — command-line frontend for the latent compression toolchain.
//!
//! Exit codes: 0 success, 1 runtime/numeric failure, 2 usage or format error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use latcomp::analytics::{psnr, set_autocorr, subband_energy};
use latcomp::compression::{
    adaptive_select, compress_latent, decompress_latent, CompressionConfig, MaskMode, PackedLatent,
    SubbandMask,
};
use latcomp::tensor::{Dtype, DynTensor, Element, Shape, VideoTensor};
use latcomp::toyae::{
    decode, encode, latent_projection, load_checkpoint, save_checkpoint, synth_dataset, train,
    SynthSpec, TrainConfig,
};
use latcomp::wavelet::{
    iwt3d, multi_iwt, multi_wt, wt3d, MultiWTSet, SubbandLabel3D, SubbandSet,
    LABEL_NAMES,
};
use latcomp::{Error, Result};

#[derive(Parser)]
#[command(name = "latcomp", version, about = "Frequency-aware latent compression toolchain")]
struct Cli {
    /// Element type for tensors created by this invocation (gen-data).
    #[arg(long, global = true, value_enum, default_value = "f32")]
    dtype: DtypeArg,
    /// Overrides the seed found in spec/config files.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Suppress informational output.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum DtypeArg {
    F32,
    F64,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Single,
    Multi,
}

impl From<ModeArg> for MaskMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Single => MaskMode::Single,
            ModeArg::Multi => MaskMode::Multi,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AnalyzeKind {
    Energy,
    Autocorr,
}

#[derive(Clone, Copy, ValueEnum)]
enum EvalCompression {
    None,
    Fixed,
}

#[derive(Subcommand)]
enum Cmd {
    /// Wavelet-decompose an LCT1 tensor into subband files plus a manifest.
    Wt {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, value_enum, default_value = "multi")]
        mode: ModeArg,
    },
    /// Rebuild a tensor from a wt manifest.
    Iwt {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Mask and pack a latent into an LCP1 container.
    Compress {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// `fixed` or `adaptive:FRACTION` (e.g. adaptive:0.5).
        #[arg(long, default_value = "fixed")]
        mask: String,
        #[arg(long, value_enum, default_value = "multi")]
        mode: ModeArg,
    },
    /// Unpack an LCP1 container back into a zero-filled-and-inverted LCT1 latent.
    Decompress {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Frequency diagnostics over the subbands of a tensor.
    Analyze {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        kind: AnalyzeKind,
        #[arg(long, value_enum, default_value = "multi")]
        mode: ModeArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic clip corpus from a SynthSpec JSON file.
    GenData {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Train the toy autoencoder; writes a checkpoint and a training log.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        data_dir: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Number of trailing clips held out for validation.
        #[arg(long, default_value = "8")]
        val_clips: usize,
    },
    /// Per-clip PSNR table for a checkpoint over a corpus.
    Eval {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        data_dir: PathBuf,
        #[arg(long, value_enum, default_value = "none")]
        compression: EvalCompression,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Manifest written beside multi-file artifacts (wt output, gen-data output).
#[derive(Serialize, Deserialize)]
struct WtManifest {
    mode: String,
    dtype: String,
    source_shape: [usize; 4],
    #[serde(skip_serializing_if = "Option::is_none")]
    group_order: Option<Vec<String>>,
    bands: Vec<BandEntry>,
}

#[derive(Serialize, Deserialize)]
struct BandEntry {
    label: String,
    file: String,
    shape: [usize; 4],
}

#[derive(Serialize, Deserialize)]
struct DataManifest {
    spec: SynthSpec,
    dtype: String,
    files: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Wt { input, out_dir, mode } => cmd_wt(&input, &out_dir, mode.into(), cli.quiet),
        Cmd::Iwt { manifest, out } => cmd_iwt(&manifest, &out, cli.quiet),
        Cmd::Compress { input, out, mask, mode } => {
            cmd_compress(&input, &out, &mask, mode.into(), cli.quiet)
        }
        Cmd::Decompress { input, out } => cmd_decompress(&input, &out, cli.quiet),
        Cmd::Analyze { input, kind, mode, out } => {
            cmd_analyze(&input, kind, mode.into(), &out, cli.quiet)
        }
        Cmd::GenData { spec, out_dir } => {
            cmd_gen_data(&spec, &out_dir, cli.dtype, cli.seed, cli.quiet)
        }
        Cmd::Train { config, data_dir, out_dir, val_clips } => {
            cmd_train(&config, &data_dir, &out_dir, val_clips, cli.seed, cli.quiet)
        }
        Cmd::Eval { params, data_dir, compression, out } => {
            cmd_eval(&params, &data_dir, compression, &out, cli.quiet)
        }
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::format("json", format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::format("json", e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

fn shape_array(s: Shape) -> [usize; 4] {
    [s.c, s.t, s.h, s.w]
}

fn mkdir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn cmd_wt(input: &Path, out_dir: &Path, mode: MaskMode, quiet: bool) -> Result<()> {
    let tensor = DynTensor::load(input)?;
    mkdir(out_dir)?;

    fn emit<T: Element>(
        bands: &[VideoTensor<T>],
        out_dir: &Path,
    ) -> Result<Vec<BandEntry>> {
        let mut entries = Vec::with_capacity(8);
        for (i, band) in bands.iter().enumerate() {
            let file = format!("{}.lct", LABEL_NAMES[i]);
            band.save(out_dir.join(&file))?;
            entries.push(BandEntry {
                label: LABEL_NAMES[i].to_string(),
                file,
                shape: shape_array(band.shape()),
            });
        }
        Ok(entries)
    }

    let manifest = match (&tensor, mode) {
        (DynTensor::F32(t), MaskMode::Single) => {
            let set = wt3d(t)?;
            WtManifest {
                mode: "single".into(),
                dtype: "f32".into(),
                source_shape: shape_array(set.source_shape()),
                group_order: None,
                bands: emit(set.bands(), out_dir)?,
            }
        }
        (DynTensor::F64(t), MaskMode::Single) => {
            let set = wt3d(t)?;
            WtManifest {
                mode: "single".into(),
                dtype: "f64".into(),
                source_shape: shape_array(set.source_shape()),
                group_order: None,
                bands: emit(set.bands(), out_dir)?,
            }
        }
        (DynTensor::F32(t), MaskMode::Multi) => {
            let set = multi_wt(t)?;
            WtManifest {
                mode: "multi".into(),
                dtype: "f32".into(),
                source_shape: shape_array(set.source_shape()),
                group_order: Some(set.group_order().iter().map(|l| l.name().to_string()).collect()),
                bands: emit(set.bands(), out_dir)?,
            }
        }
        (DynTensor::F64(t), MaskMode::Multi) => {
            let set = multi_wt(t)?;
            WtManifest {
                mode: "multi".into(),
                dtype: "f64".into(),
                source_shape: shape_array(set.source_shape()),
                group_order: Some(set.group_order().iter().map(|l| l.name().to_string()).collect()),
                bands: emit(set.bands(), out_dir)?,
            }
        }
    };
    write_json(&out_dir.join("manifest.json"), &manifest)?;
    if !quiet {
        println!("wrote {} subbands to {}", manifest.bands.len(), out_dir.display());
    }
    Ok(())
}

fn load_bands<T: Element>(manifest: &WtManifest, dir: &Path) -> Result<Vec<VideoTensor<T>>> {
    let mut bands = Vec::with_capacity(manifest.bands.len());
    for entry in &manifest.bands {
        let path = dir.join(&entry.file);
        if !path.exists() {
            return Err(Error::format(
                "manifest",
                format!("subband file {} is missing", path.display()),
            ));
        }
        let band = match DynTensor::load(&path)? {
            DynTensor::F32(t) => t.cast::<T>(),
            DynTensor::F64(t) => t.cast::<T>(),
        };
        bands.push(band);
    }
    Ok(bands)
}

fn cmd_iwt(manifest_path: &Path, out: &Path, quiet: bool) -> Result<()> {
    let manifest: WtManifest = read_json(manifest_path)?;
    let dir = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let source_shape = Shape::new(
        manifest.source_shape[0],
        manifest.source_shape[1],
        manifest.source_shape[2],
        manifest.source_shape[3],
    );

    fn rebuild<T: Element>(
        manifest: &WtManifest,
        dir: &Path,
        source_shape: Shape,
    ) -> Result<VideoTensor<T>> {
        let bands = load_bands::<T>(manifest, dir)?;
        match manifest.mode.as_str() {
            "single" => iwt3d(&SubbandSet::new(bands, source_shape)?),
            "multi" => {
                let names = manifest.group_order.as_ref().ok_or_else(|| {
                    Error::format("manifest", "multi manifest lacks group_order".to_string())
                })?;
                if names.len() != 8 {
                    return Err(Error::format(
                        "manifest",
                        format!("group_order has {} entries, expected 8", names.len()),
                    ));
                }
                let mut order = [SubbandLabel3D::LLL; 8];
                for (slot, name) in order.iter_mut().zip(names) {
                    *slot = SubbandLabel3D::from_name(name)?;
                }
                multi_iwt(&MultiWTSet::new(bands, source_shape, order)?)
            }
            other => Err(Error::format("manifest", format!("unknown mode {other:?}"))),
        }
    }

    match manifest.dtype.as_str() {
        "f32" => rebuild::<f32>(&manifest, dir, source_shape)?.save(out)?,
        "f64" => rebuild::<f64>(&manifest, dir, source_shape)?.save(out)?,
        other => return Err(Error::format("manifest", format!("unknown dtype {other:?}"))),
    }
    if !quiet {
        println!("wrote {}", out.display());
    }
    Ok(())
}

fn parse_mask_arg(arg: &str) -> Result<Option<f64>> {
    if arg == "fixed" {
        return Ok(None);
    }
    if let Some(frac) = arg.strip_prefix("adaptive:") {
        let frac: f64 = frac
            .parse()
            .map_err(|_| Error::Config(format!("bad adaptive fraction {frac:?}")))?;
        return Ok(Some(frac));
    }
    Err(Error::Config(format!(
        "unknown mask {arg:?}; expected `fixed` or `adaptive:FRACTION`"
    )))
}

fn cmd_compress(input: &Path, out: &Path, mask_arg: &str, mode: MaskMode, quiet: bool) -> Result<()> {
    let adaptive = parse_mask_arg(mask_arg)?;

    fn pack<T: Element>(z: &VideoTensor<T>, mode: MaskMode, adaptive: Option<f64>) -> Result<PackedLatent> {
        let mask = match (mode, adaptive) {
            (MaskMode::Multi, None) => SubbandMask::fixed_multi(),
            (MaskMode::Single, None) => SubbandMask::fixed_single(),
            (MaskMode::Multi, Some(frac)) => adaptive_select(&multi_wt(z)?, frac)?,
            (MaskMode::Single, Some(_)) => {
                return Err(Error::Config(
                    "adaptive masks are only defined for --mode multi".to_string(),
                ))
            }
        };
        compress_latent(z, &CompressionConfig { mode, mask })
    }

    let packed = match DynTensor::load(input)? {
        DynTensor::F32(z) => pack(&z, mode, adaptive)?,
        DynTensor::F64(z) => pack(&z, mode, adaptive)?,
    };
    packed.save(out)?;
    if !quiet {
        println!(
            "packed {} retained elements into {}",
            packed.retained_elements(),
            out.display()
        );
    }
    Ok(())
}

fn cmd_decompress(input: &Path, out: &Path, quiet: bool) -> Result<()> {
    let packed = PackedLatent::load(input)?;
    match packed.dtype {
        Dtype::F32 => decompress_latent::<f32>(&packed)?.save(out)?,
        Dtype::F64 => decompress_latent::<f64>(&packed)?.save(out)?,
    }
    if !quiet {
        println!("wrote {}", out.display());
    }
    Ok(())
}

fn cmd_analyze(input: &Path, kind: AnalyzeKind, mode: MaskMode, out: &Path, quiet: bool) -> Result<()> {
    fn bands_of<T: Element>(z: &VideoTensor<T>, mode: MaskMode) -> Result<Vec<VideoTensor<T>>> {
        Ok(match mode {
            MaskMode::Single => wt3d(z)?.bands().to_vec(),
            MaskMode::Multi => multi_wt(z)?.bands().to_vec(),
        })
    }

    fn render<T: Element>(z: &VideoTensor<T>, kind: AnalyzeKind, mode: MaskMode) -> Result<String> {
        let bands = bands_of(z, mode)?;
        match kind {
            AnalyzeKind::Energy => Ok(subband_energy(&bands).to_csv()),
            AnalyzeKind::Autocorr => Ok(set_autocorr(&bands)?.to_csv()),
        }
    }

    let csv = match DynTensor::load(input)? {
        DynTensor::F32(z) => render(&z, kind, mode)?,
        DynTensor::F64(z) => render(&z, kind, mode)?,
    };
    write_text(out, &csv)?;
    if !quiet {
        println!("wrote {}", out.display());
    }
    Ok(())
}

fn cmd_gen_data(
    spec_path: &Path,
    out_dir: &Path,
    dtype: DtypeArg,
    seed: Option<u64>,
    quiet: bool,
) -> Result<()> {
    let mut spec: SynthSpec = read_json(spec_path)?;
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    let clips = synth_dataset(&spec)?;
    mkdir(out_dir)?;
    let mut files = Vec::with_capacity(clips.len());
    for (i, clip) in clips.iter().enumerate() {
        let file = format!("clip_{i:03}.lct");
        match dtype {
            DtypeArg::F32 => clip.cast::<f32>().save(out_dir.join(&file))?,
            DtypeArg::F64 => clip.save(out_dir.join(&file))?,
        }
        files.push(file);
    }
    let manifest = DataManifest {
        spec,
        dtype: match dtype {
            DtypeArg::F32 => "f32".into(),
            DtypeArg::F64 => "f64".into(),
        },
        files,
    };
    write_json(&out_dir.join("manifest.json"), &manifest)?;
    if !quiet {
        println!("wrote {} clips to {}", manifest.files.len(), out_dir.display());
    }
    Ok(())
}

fn load_clips(data_dir: &Path) -> Result<Vec<VideoTensor<f64>>> {
    let manifest: DataManifest = read_json(&data_dir.join("manifest.json"))?;
    let mut clips = Vec::with_capacity(manifest.files.len());
    for file in &manifest.files {
        let path = data_dir.join(file);
        if !path.exists() {
            return Err(Error::format(
                "manifest",
                format!("clip file {} is missing", path.display()),
            ));
        }
        clips.push(match DynTensor::load(&path)? {
            DynTensor::F32(t) => t.cast::<f64>(),
            DynTensor::F64(t) => t,
        });
    }
    Ok(clips)
}

fn cmd_train(
    config_path: &Path,
    data_dir: &Path,
    out_dir: &Path,
    val_clips: usize,
    seed: Option<u64>,
    quiet: bool,
) -> Result<()> {
    let mut config: TrainConfig = read_json(config_path)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let mut clips = load_clips(data_dir)?;
    if val_clips == 0 || val_clips >= clips.len() {
        return Err(Error::Config(format!(
            "--val-clips {val_clips} leaves no training split for {} clips",
            clips.len()
        )));
    }
    let val = clips.split_off(clips.len() - val_clips);
    let (params, log) = train(&config, &clips, &val)?;
    mkdir(out_dir)?;
    save_checkpoint(out_dir, &params)?;
    write_text(&out_dir.join("trainlog.csv"), &log.to_csv())?;
    if !quiet {
        if let Some(eval) = log.final_eval() {
            println!(
                "final: psnr_clean {:.3} psnr_compressed {:.3}",
                eval.psnr_clean, eval.psnr_compressed
            );
        }
        println!("wrote checkpoint and trainlog.csv to {}", out_dir.display());
    }
    Ok(())
}

fn render_psnr(v: f64) -> String {
    if v.is_infinite() {
        "inf".to_string()
    } else {
        format!("{v:.6}")
    }
}

fn cmd_eval(
    params_path: &Path,
    data_dir: &Path,
    compression: EvalCompression,
    out: &Path,
    quiet: bool,
) -> Result<()> {
    let params = load_checkpoint(params_path)?;
    let clips = load_clips(data_dir)?;
    let cfg = CompressionConfig::fixed_multi();
    let mut csv = String::from("clip,psnr\n");
    let mut sum = 0.0;
    for (i, clip) in clips.iter().enumerate() {
        let mut z = encode(&params, clip, false, 0)?.latent;
        if matches!(compression, EvalCompression::Fixed) {
            z = latent_projection(&z, &cfg)?;
        }
        let recon = decode(&params, &z)?;
        let value = psnr(clip, &recon, 1.0)?;
        sum += value;
        csv.push_str(&format!("{i},{}\n", render_psnr(value)));
    }
    csv.push_str(&format!("mean,{}\n", render_psnr(sum / clips.len() as f64)));
    write_text(out, &csv)?;
    if !quiet {
        println!("wrote {}", out.display());
    }
    Ok(())
}
