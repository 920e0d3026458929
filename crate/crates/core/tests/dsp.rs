use emovc::dsp::{
    analyze, energy_contour, mcc_decode, mcc_encode, synthesize, AnalysisConfig, FeatureSet,
    SynthesisConfig, Waveform,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pulse_train(f0: f64, len: usize) -> Waveform {
    let mut phase = 0.0;
    let s = (0..len)
        .map(|_| {
            phase += f0 / 16_000.0;
            if phase >= 1.0 {
                phase -= 1.0;
                0.5
            } else {
                0.0
            }
        })
        .collect();
    Waveform::new(s, 16_000).unwrap()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v[v.len() / 2]
}

fn voiced_f0(fs: &FeatureSet) -> Vec<f64> {
    fs.f0.iter().copied().filter(|f| *f > 0.0).collect()
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    sab / (saa * sbb).sqrt()
}

#[test]
fn one_second_of_silence() {
    let cfg = AnalysisConfig::default();
    let fs = analyze(&Waveform::new(vec![0.0; 16_000], 16_000).unwrap(), &cfg).unwrap();
    assert_eq!(fs.frames(), 196);
    assert!(fs.voicing.iter().all(|v| !v));
    assert!(fs.energy.iter().all(|e| *e < 1e-6));
    for row in &fs.mcc {
        assert!((row[0] - 1e-10f64.ln()).abs() < 1e-6);
    }
}

#[test]
fn too_short_signal_is_rejected() {
    let cfg = AnalysisConfig::default();
    let w = Waveform::new(vec![0.0; 399], 16_000).unwrap();
    assert!(matches!(analyze(&w, &cfg), Err(emovc::EmovcError::InsufficientInput(_))));
}

#[test]
fn pulse_train_at_200_hz() {
    let fs = analyze(&pulse_train(200.0, 16_000), &AnalysisConfig::default()).unwrap();
    let med = median(voiced_f0(&fs));
    assert!((med - 200.0).abs() <= 4.0, "median {med}");
}

#[test]
fn gross_pitch_errors_are_rare_from_80_to_400_hz() {
    let cfg = AnalysisConfig::default();
    for f0 in [80.0, 110.0, 150.0, 200.0, 260.0, 330.0, 400.0] {
        let fs = analyze(&pulse_train(f0, 8000), &cfg).unwrap();
        let voiced = fs.voiced_count();
        assert!(voiced > fs.frames() * 8 / 10, "f0 {f0}: only {voiced} voiced");
        let gross = fs
            .f0
            .iter()
            .filter(|&&f| f > 0.0 && ((f - f0) / f0).abs() > 0.2)
            .count();
        assert!((gross as f64) < 0.05 * voiced as f64, "f0 {f0}: {gross} gross errors of {voiced}");
    }
}

#[test]
fn waveform_gain_shifts_c0_only() {
    let cfg = AnalysisConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let base: Vec<f64> = (0..4000).map(|_| rng.gen_range(-0.3..0.3)).collect();
    let w = Waveform::new(base, 16_000).unwrap();
    let c = 0.37;
    let a = analyze(&w, &cfg).unwrap();
    let b = analyze(&w.scaled(c), &cfg).unwrap();
    for (ra, rb) in a.mcc.iter().zip(&b.mcc) {
        assert!((rb[0] - ra[0] - 2.0 * c.ln()).abs() < 1e-6);
        for m in 1..36 {
            assert!((rb[m] - ra[m]).abs() < 1e-6);
        }
    }
}

#[test]
fn smooth_envelopes_survive_encode_decode() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let (a1, a2, p) = (rng.gen_range(0.5..2.0), rng.gen_range(0.2..1.0), rng.gen_range(0.0..6.0));
        let env: Vec<f64> = (0..257)
            .map(|k| {
                let x = k as f64 / 256.0;
                (a1 * (3.0 * x + p).sin() + a2 * (9.0 * x).cos() - 3.0 * x).exp()
            })
            .collect();
        let c = mcc_encode(&[env.clone()], 36, 0.42).unwrap();
        let back = mcc_decode(&c, 257, 0.42).unwrap();
        assert!(pearson(&env, &back[0]) >= 0.99);
    }
}

fn flat_unvoiced(frames: usize, c0: f64, energy: f64) -> FeatureSet {
    let mut row = vec![0.0; 36];
    row[0] = c0;
    FeatureSet::new(
        vec![row; frames],
        vec![0.0; frames],
        vec![false; frames],
        vec![energy; frames],
        0.005,
        vec![1.0; frames],
    )
    .unwrap()
}

#[test]
fn output_length_follows_frame_count() {
    let w = synthesize(&flat_unvoiced(50, 0.0, 1.0), &SynthesisConfig::default()).unwrap();
    assert_eq!(w.len(), 49 * 80 + 400);
}

#[test]
fn unvoiced_flat_envelope_gives_white_noise() {
    let cfg = AnalysisConfig::default();
    let w = synthesize(&flat_unvoiced(400, 0.0, 1.0), &SynthesisConfig::default()).unwrap();
    // Long-average power spectrum of the steady middle part.
    let mut an = emovc::dsp::EnvelopeAnalyzer::new(cfg.window, cfg.fft_size, cfg.lifter);
    let mut avg = vec![0.0; 257];
    let mut count = 0.0;
    let mut s = 800;
    while s + 400 < w.len() - 800 {
        for (a, p) in avg.iter_mut().zip(an.power(&w.samples[s..s + 400])) {
            *a += p;
        }
        count += 1.0;
        s += 200;
    }
    let band: Vec<f64> = avg[8..249].iter().map(|v| v / count).collect();
    let am = band.iter().sum::<f64>() / band.len() as f64;
    let gm = (band.iter().map(|v| v.ln()).sum::<f64>() / band.len() as f64).exp();
    assert!(gm / am > 0.85, "flatness {}", gm / am);
    // Unit envelope on the analysis scale.
    let level = am;
    assert!((level - 1.0).abs() < 0.2, "level {level}");
}

#[test]
fn zero_energy_frames_are_silent() {
    let w = synthesize(&flat_unvoiced(60, 2.0, 0.0), &SynthesisConfig::default()).unwrap();
    assert!(w.rms() < 1e-6);
}

#[test]
fn resynthesis_keeps_median_f0() {
    let cfg = AnalysisConfig::default();
    for f0 in [110.0, 180.0, 260.0] {
        let src = analyze(&pulse_train(f0, 12_000), &cfg).unwrap();
        let w = synthesize(&src, &SynthesisConfig::from_analysis(&cfg, 5)).unwrap();
        let again = analyze(&w, &cfg).unwrap();
        let (a, b) = (median(voiced_f0(&src)), median(voiced_f0(&again)));
        assert!(((b - a) / a).abs() < 0.05, "{a} -> {b}");
    }
}

#[test]
fn synthesis_is_seed_deterministic() {
    let fs = flat_unvoiced(30, 0.0, 1.0);
    let cfg = SynthesisConfig::default();
    assert_eq!(synthesize(&fs, &cfg).unwrap(), synthesize(&fs, &cfg).unwrap());
}

#[test]
fn energy_contour_is_linear() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let env: Vec<Vec<f64>> = (0..5).map(|_| (0..64).map(|_| rng.gen_range(0.0..3.0)).collect()).collect();
    let doubled: Vec<Vec<f64>> = env.iter().map(|r| r.iter().map(|v| 2.0 * v).collect()).collect();
    let (e, d) = (energy_contour(&env), energy_contour(&doubled));
    for (a, b) in e.iter().zip(&d) {
        assert_eq!(2.0 * a, *b);
    }
}
