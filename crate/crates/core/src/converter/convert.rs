use ndgrad::Scalar;
use serde::{Deserialize, Serialize};

use super::assemble::{assemble, disassemble, FeatureTensor, RowStats};
use super::lg::{lg_convert_f0, lg_map_contour};
use super::rescale::energy_rescale;
use crate::corpus::LgStats;
use crate::dsp::{energy_contour, synthesize, FeatureSet, MelBasis, SynthesisConfig, Waveform};
use crate::error::{EmovcError, Result};
use crate::model::{FeatureCombo, FeatureMapper};
use crate::prosody::{cwt_reconstruct, mean_std, CwtMatrix};
use crate::trainer::ModelBundle;

/// Longest utterance (frames) the converter will push through a generator.
pub const MAX_CONVERT_FRAMES: usize = 1 << 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    AToB,
    BToA,
}

/// Everything except the mapping network that a conversion needs.
#[derive(Debug, Clone)]
pub struct ConversionContext<'a> {
    pub combo: FeatureCombo,
    pub stats: &'a RowStats,
    pub source: LgStats,
    pub target: LgStats,
    pub bins: usize,
    pub warp: f64,
}

#[derive(Debug, Clone)]
pub struct ConvertedFeatures {
    pub features: FeatureSet,
    pub input: FeatureTensor,
    pub output: FeatureTensor,
    /// Frames left out of energy rescaling.
    pub skipped_frames: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct ConversionResult {
    pub features: FeatureSet,
    pub waveform: Waveform,
    pub combo: FeatureCombo,
    pub model_hash: u64,
    pub intermediates: Option<ConvertedFeatures>,
}

/// Invert the wavelet rows, standardize the normalized contour and
/// denormalize it with `(mean, std)`.
fn reconstruct_with(m: &CwtMatrix, (mean, std): (f64, f64)) -> Result<Vec<f64>> {
    let unit = CwtMatrix {
        mean: 0.0,
        std: 1.0,
        ..m.clone()
    };
    let z = cwt_reconstruct(&unit)?.values;
    let (zm, zs) = mean_std(&z);
    if !(zs > 0.0) {
        return Err(EmovcError::DegenerateContour("reconstructed contour is constant".into()));
    }
    Ok(z.iter().map(|v| mean + std * (v - zm) / zs).collect())
}

/// Map a feature set with `mapper` and rebuild linear-domain tracks.
pub fn convert_features<T: Scalar, M: FeatureMapper<T>>(
    mapper: &M,
    fs: &FeatureSet,
    ctx: &ConversionContext<'_>,
) -> Result<ConvertedFeatures> {
    if fs.frames() > MAX_CONVERT_FRAMES {
        return Err(EmovcError::InsufficientInput(format!(
            "{} frames exceeds the converter limit of {MAX_CONVERT_FRAMES}",
            fs.frames()
        )));
    }
    let input = assemble(fs, ctx.combo, ctx.stats)?;
    let mapped = mapper.map(&input.to_tensor::<T>())?;
    let output = input.with_data(mapped.to_f64_vec())?;
    let rows = disassemble(&output, ctx.stats)?;
    let (src, tgt) = (&ctx.source, &ctx.target);

    let log_f0: Option<Vec<f64>> = if let Some(l) = &rows.lf0 {
        Some(l.clone())
    } else if let Some(m) = &rows.lf0_cwt {
        let stats = lg_map_contour((m.mean, m.std), src.lf0_mean, src.lf0_std, tgt.lf0_mean, tgt.lf0_std);
        Some(reconstruct_with(m, stats)?)
    } else {
        None
    };
    let f0 = match log_f0 {
        Some(l) => fs
            .voicing
            .iter()
            .zip(&l)
            .map(|(&v, &x)| if v { x.exp() } else { 0.0 })
            .collect(),
        None => lg_convert_f0(&fs.f0, src, tgt),
    };
    if f0.iter().zip(&fs.voicing).any(|(f, v)| *v && !(f.is_finite() && *f > 0.0)) {
        return Err(EmovcError::Degenerate("converted F0 is not a positive finite value".into()));
    }

    let basis = MelBasis::new(ctx.bins, fs.order(), ctx.warp)?;
    let mut mcc = rows.mcc;
    let decoded = crate::dsp::mcc_decode_with(&basis, &mcc)?;
    let (energy, skipped) = if let Some(m) = &rows.le_cwt {
        let stats = lg_map_contour((m.mean, m.std), src.le_mean, src.le_std, tgt.le_mean, tgt.le_std);
        let target: Vec<f64> = reconstruct_with(m, stats)?.iter().map(|v| v.exp()).collect();
        let r = energy_rescale(&decoded, &target)?;
        mcc = crate::dsp::mcc_encode_with(&basis, &r.envelope)?;
        (energy_contour(&crate::dsp::mcc_decode_with(&basis, &mcc)?), r.skipped)
    } else {
        (energy_contour(&decoded), Vec::new())
    };

    let mut features = FeatureSet::new(
        mcc,
        f0,
        fs.voicing.clone(),
        energy,
        fs.frame_shift,
        fs.aperiodicity.clone(),
    )?;
    features.provenance = fs.provenance.clone();
    Ok(ConvertedFeatures {
        features,
        input,
        output,
        skipped_frames: skipped,
    })
}

/// Convert one utterance with a trained bundle and resynthesize it.
pub fn convert_utterance<T: Scalar>(
    bundle: &ModelBundle<T>,
    fs: &FeatureSet,
    direction: Direction,
    combo: FeatureCombo,
    synth: &SynthesisConfig,
    keep_intermediates: bool,
) -> Result<ConversionResult> {
    if combo != bundle.config.combo {
        return Err(EmovcError::Config(format!(
            "requested combo {combo} but the model was trained on {}",
            bundle.config.combo
        )));
    }
    let (source, target) = match direction {
        Direction::AToB => (bundle.lg_a, bundle.lg_b),
        Direction::BToA => (bundle.lg_b, bundle.lg_a),
    };
    let ctx = ConversionContext {
        combo,
        stats: &bundle.stats,
        source,
        target,
        bins: synth.fft_size / 2 + 1,
        warp: synth.warp,
    };
    let g = match direction {
        Direction::AToB => bundle.nets.g_ab.frozen(),
        Direction::BToA => bundle.nets.g_ba.frozen(),
    };
    let converted = convert_features(&g, fs, &ctx)?;
    let waveform = synthesize(&converted.features, synth)?;
    Ok(ConversionResult {
        features: converted.features.clone(),
        waveform,
        combo,
        model_hash: bundle.config_hash(),
        intermediates: keep_intermediates.then_some(converted),
    })
}
