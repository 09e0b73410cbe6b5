//! Acceptance suite. Runs every criterion in sequence (timings are measured
//! single-threaded and without competing tests) and prints one PASS/FAIL line
//! per criterion. Exits non-zero if any criterion fails.

use std::io::Cursor;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_rational::Ratio;
use prnu_sda::analysis::{
    required_images, run_bench, BenchConfig, BenchCorpus, BenchOptions, NoiseBudget, Query,
};
use prnu_sda::correlate::{ncc_surface, pce};
use prnu_sda::denoise::DenoiseParams;
use prnu_sda::fingerprint::{
    extract_with, save_fingerprint, sda_average, ExtractOptions, ExtractionMode,
};
use prnu_sda::media_io::{
    decode_netpbm, encode_netpbm, encode_netpbm_ascii, open_y4m, Colorspace, FrameBuffer,
    FrameStream, LumaPlane, Y4mWriter,
};
use prnu_sda::synthcam::{
    brute_force_correlation, corpus_frame, gen_model, write_y4m_corpus, SceneSpec, Scenes,
    SynthCameraModel,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

const THRESHOLD: f64 = 60.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn opts() -> ExtractOptions {
    ExtractOptions::with_params(DenoiseParams::default()).jobs(1)
}

fn flat() -> Scenes {
    Scenes::PerFrame {
        spec: SceneSpec::Flat { luminance: 128.0 },
        seed: 0,
    }
}

fn textured(seed: u64) -> Scenes {
    Scenes::PerFrame {
        spec: SceneSpec::Textured {
            cutoff: 8.0,
            contrast: 60.0,
        },
        seed,
    }
}

fn frames(
    model: &SynthCameraModel,
    scenes: &Scenes,
    range: std::ops::Range<u64>,
) -> Vec<LumaPlane> {
    range
        .map(|i| corpus_frame(model, scenes, i).unwrap())
        .collect()
}

fn queries(
    own: &SynthCameraModel,
    other: &SynthCameraModel,
    scenes: &Scenes,
    n: u64,
) -> Vec<Query> {
    let mut out = Vec::new();
    for i in 0..n {
        out.push(Query {
            frame: corpus_frame(own, scenes, 100_000 + i).unwrap(),
            positive: true,
        });
        out.push(Query {
            frame: corpus_frame(other, scenes, 200_000 + i).unwrap(),
            positive: false,
        });
    }
    out
}

/// TPR and mean positive score recomputed from raw trial scores.
fn tally(scores: &[prnu_sda::analysis::Labeled<f64>]) -> (f64, f64) {
    let pos: Vec<f64> = scores
        .iter()
        .filter(|s| s.positive)
        .map(|s| s.value)
        .collect();
    let hits = pos.iter().filter(|&&v| v > THRESHOLD).count();
    (
        hits as f64 / pos.len() as f64,
        pos.iter().sum::<f64>() / pos.len() as f64,
    )
}

fn fp_bytes(y4m: &[u8], mode: ExtractionMode) -> Vec<u8> {
    let stream = open_y4m(Cursor::new(y4m.to_vec())).unwrap();
    let fp = extract_with(stream, mode, &opts()).unwrap().estimate;
    let mut out = Vec::new();
    save_fingerprint(&fp, &mut out).unwrap();
    out
}

fn c1_depth_one_exactness() -> Outcome {
    let started = Instant::now();
    let model = gen_model(128, 128, 0.02, 3.0, 101).unwrap();
    let y4m = write_y4m_corpus(&model, &textured(1), 50, Vec::new()).unwrap();
    let a = fp_bytes(&y4m, ExtractionMode::Conventional);
    let b = fp_bytes(&y4m, ExtractionMode::Sda(1));
    let differing = a.iter().zip(&b).filter(|(x, y)| x != y).count() + a.len().abs_diff(b.len());
    let elapsed = started.elapsed();
    outcome(
        differing == 0 && elapsed < Duration::from_secs(30),
        format!(
            "{differing} bytes differ of {}, {:.2}s",
            a.len(),
            elapsed.as_secs_f64()
        ),
    )
}

/// The 1200-frame corpus shared by the op-count and stride criteria.
fn long_corpus() -> (SynthCameraModel, SynthCameraModel) {
    (
        gen_model(128, 128, 0.008, 3.0, 1).unwrap(),
        gen_model(128, 128, 0.008, 3.0, 2).unwrap(),
    )
}

fn c2_denoise_count_law() -> Outcome {
    let (model, _) = long_corpus();
    let depths = [1, 5, 10, 30, 50, 200, 1200];
    let expected = [1200, 240, 120, 40, 24, 6, 1];
    let corpus = frames(&model, &textured(5), 0..1200);
    let mut got = Vec::new();
    for d in depths {
        let stream = FrameStream::from_planes(128, 128, corpus.clone());
        got.push(
            extract_with(stream, ExtractionMode::Sda(d), &opts())
                .unwrap()
                .estimate
                .denoise_ops,
        );
    }
    outcome(got == expected, format!("denoise_ops {got:?}"))
}

fn c3_speedup_floor() -> Outcome {
    let started = Instant::now();
    let model = gen_model(512, 512, 0.02, 3.0, 3).unwrap();
    let corpus = frames(&model, &flat(), 0..50);
    let time = |mode| {
        let stream = FrameStream::from_planes(512, 512, corpus.clone());
        let t = Instant::now();
        extract_with(stream, mode, &opts()).unwrap();
        t.elapsed()
    };
    let conventional = time(ExtractionMode::Conventional);
    let sda = time(ExtractionMode::Sda(50));
    let speedup = conventional.as_secs_f64() / sda.as_secs_f64();
    let total = started.elapsed();
    outcome(
        speedup >= 5.0 && total < Duration::from_secs(180),
        format!(
            "conventional {:.3}s, depth 50 {:.3}s, speedup {speedup:.1}x, total {:.1}s",
            conventional.as_secs_f64(),
            sda.as_secs_f64(),
            total.as_secs_f64()
        ),
    )
}

fn c4_flat_equivalence() -> Outcome {
    let model = gen_model(256, 256, 0.02, 3.0, 41).unwrap();
    let other = gen_model(256, 256, 0.02, 3.0, 42).unwrap();
    let corpus = BenchCorpus::new(
        frames(&model, &flat(), 0..200),
        queries(&model, &other, &flat(), 200),
    )
    .unwrap();
    let configs = [
        BenchConfig::new(ExtractionMode::Conventional),
        BenchConfig::new(ExtractionMode::Sda(30)),
    ];
    let report = run_bench(
        &configs,
        &corpus,
        &BenchOptions {
            jobs: 1,
            ..Default::default()
        },
    )
    .unwrap();
    let (conv, _) = tally(&report.rows[0].scores);
    let (sda, _) = tally(&report.rows[1].scores);
    let gap = (conv - sda).abs();
    outcome(
        gap <= 0.03 && conv > 0.95 && sda > 0.95,
        format!(
            "TPR conventional {conv:.3}, sda(30) {sda:.3}, gap {:.1} pp",
            gap * 100.0
        ),
    )
}

fn c5_texture_depth_degradation() -> Outcome {
    let model = gen_model(128, 128, 0.008, 3.0, 1).unwrap();
    let other = gen_model(128, 128, 0.008, 3.0, 2).unwrap();
    let corpus = BenchCorpus::new(
        frames(&model, &textured(5), 0..50),
        queries(&model, &other, &textured(99), 20),
    )
    .unwrap();
    let depths = [1, 2, 5, 10, 25, 50];
    let opts = BenchOptions {
        jobs: 1,
        block: Some(32),
        ..Default::default()
    };
    let report = run_bench(&BenchConfig::sda_sweep(&depths), &corpus, &opts).unwrap();
    let stats: Vec<(f64, f64)> = report.rows.iter().map(|r| tally(&r.scores)).collect();
    let means: Vec<f64> = stats.iter().map(|s| s.1).collect();
    let non_increasing = means.windows(2).all(|w| w[1] <= w[0]);
    let (tpr1, tpr50) = (stats[0].0, stats[5].0);
    outcome(
        non_increasing && tpr50 < tpr1,
        format!(
            "mean block PCE {:?}, TPR depth 1 {tpr1:.3} vs depth 50 {tpr50:.3}",
            means.iter().map(|m| format!("{m:.1}")).collect::<Vec<_>>()
        ),
    )
}

fn c6_equivalence_bound() -> Outcome {
    let mut failures = 0;
    let mut checked = 0;
    for n in 1..=20u64 {
        for s1 in 1..=20i64 {
            for s2 in 0..20i64 {
                let budget = NoiseBudget::new(s1 as f64, s2 as f64).unwrap();
                let mut prev: Option<(f64, Ratio<i64>)> = None;
                for d in 1..=20usize {
                    let got = required_images(n, d, budget).unwrap().m_max;
                    let exact =
                        Ratio::from_integer(n as i64) * Ratio::new(s1 + d as i64 * s2, s1 + s2);
                    let exact_f = *exact.numer() as f64 / *exact.denom() as f64;
                    let mut ok = (got - exact_f).abs() <= 4.0 * f64::EPSILON * exact_f;
                    if d == 1 || s2 == 0 {
                        ok &= got == n as f64 && exact == Ratio::from_integer(n as i64);
                    }
                    if let Some((pg, pe)) = prev {
                        if s2 > 0 {
                            ok &= got > pg && exact > pe;
                        }
                    }
                    prev = Some((got, exact));
                    checked += 1;
                    failures += !ok as usize;
                }
            }
        }
    }
    outcome(
        failures == 0,
        format!("{checked} grid points, {failures} failures"),
    )
}

fn random_plane(w: usize, h: usize, rng: &mut ChaCha8Rng) -> LumaPlane {
    LumaPlane::from_fn(w, h, |_, _| {
        let v: f32 = StandardNormal.sample(rng);
        128.0 + 20.0 * v
    })
}

fn c7_fft_oracle() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let w = 2 + (i * 7) % 63;
        let h = 2 + (i * 13) % 63;
        let (w, h) = if i % 10 == 0 { (64, 64) } else { (w, h) };
        let a = random_plane(w, h, &mut rng);
        let b = random_plane(w, h, &mut rng);
        let fast = ncc_surface(&a, &b).unwrap();
        let slow = brute_force_correlation(&a, &b).unwrap();
        for (x, y) in fast.values().iter().zip(slow.values()) {
            worst = worst.max((x - y).abs());
        }
    }
    let elapsed = started.elapsed();
    outcome(
        worst <= 1e-4 && elapsed < Duration::from_secs(60),
        format!(
            "max abs difference {worst:.2e} over 100 pairs, {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn c8_pce_calibration() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut null_hits = 0;
    for _ in 0..200 {
        let a = random_plane(256, 256, &mut rng);
        let b = random_plane(256, 256, &mut rng);
        if pce(&ncc_surface(&a, &b).unwrap(), 5).unwrap().0 > THRESHOLD {
            null_hits += 1;
        }
    }
    // 25 cameras, each fingerprinted from 100 flat frames and probed with 4
    // held-out frames.
    let mut matched = 0;
    let mut trials = 0;
    for cam in 0..25u64 {
        let model = gen_model(256, 256, 0.02, 3.0, 800 + cam).unwrap();
        let other = gen_model(256, 256, 0.02, 3.0, 900 + cam).unwrap();
        let corpus = BenchCorpus::new(
            frames(&model, &flat(), 0..100),
            queries(&model, &other, &flat(), 4),
        )
        .unwrap();
        let report = run_bench(
            &[BenchConfig::new(ExtractionMode::Conventional)],
            &corpus,
            &BenchOptions {
                jobs: 1,
                ..Default::default()
            },
        )
        .unwrap();
        for s in report.rows[0].scores.iter().filter(|s| s.positive) {
            trials += 1;
            matched += (s.value > THRESHOLD) as usize;
        }
    }
    let null_rate = null_hits as f64 / 200.0;
    let tpr = matched as f64 / trials as f64;
    outcome(
        null_rate < 0.05 && tpr >= 0.95,
        format!("null P(pce>60) {null_rate:.3}, matched {matched}/{trials}"),
    )
}

fn c9_averaging_noise_law() -> Outcome {
    let sigma1 = 3.0f64;
    let noise = Normal::new(128.0f32, sigma1 as f32).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    for d in [2usize, 10, 30] {
        for _ in 0..30 {
            let group: Vec<LumaPlane> = (0..d)
                .map(|_| LumaPlane::from_fn(64, 64, |_, _| noise.sample(&mut rng)))
                .collect();
            let avg = sda_average(&group).unwrap();
            let n = avg.data().len() as f64;
            let mean = avg.data().iter().map(|&v| v as f64).sum::<f64>() / n;
            let var = avg
                .data()
                .iter()
                .map(|&v| (v as f64 - mean).powi(2))
                .sum::<f64>()
                / (n - 1.0);
            let target = sigma1 * sigma1 / d as f64;
            worst = worst.max((var / target - 1.0).abs());
        }
    }
    outcome(
        worst <= 0.2,
        format!("worst relative deviation {:.1}%", worst * 100.0),
    )
}

fn c10_stride_inferiority() -> Outcome {
    let (model, other) = long_corpus();
    let corpus = BenchCorpus::new(
        frames(&model, &textured(5), 0..1200),
        queries(&model, &other, &textured(99), 20),
    )
    .unwrap();
    let configs = [
        BenchConfig::new(ExtractionMode::Stride(30)),
        BenchConfig::new(ExtractionMode::Sda(30)),
    ];
    let opts = BenchOptions {
        jobs: 1,
        block: Some(32),
        ..Default::default()
    };
    let report = run_bench(&configs, &corpus, &opts).unwrap();
    let ops: Vec<u64> = report.rows.iter().map(|r| r.denoise_ops).collect();
    let (stride, _) = tally(&report.rows[0].scores);
    let (sda, _) = tally(&report.rows[1].scores);
    outcome(
        stride < sda && ops == [40, 40],
        format!("TPR stride(30) {stride:.3} vs sda(30) {sda:.3}, denoise_ops {ops:?}"),
    )
}

fn c11_parser_conformance() -> Outcome {
    let mut failures = Vec::new();
    // Netpbm: every magic, with comments between header tokens, decoded
    // against hand-computed samples and re-encoded bit-exactly.
    let samples: Vec<u8> = (0..4 * 3 * 3).map(|i| (i * 37 % 256) as u8).collect();
    for (magic, channels) in [("P2", 1), ("P3", 3), ("P5", 1), ("P6", 3)] {
        let payload = &samples[..4 * 3 * channels];
        let mut bytes =
            format!("{magic}\n# comment one\n4 # trailing\n3\n#another\n255\n").into_bytes();
        if magic == "P2" || magic == "P3" {
            let text: Vec<String> = payload.iter().map(|v| v.to_string()).collect();
            bytes.extend_from_slice(text.join(" ").as_bytes());
            bytes.push(b'\n');
        } else {
            bytes.extend_from_slice(payload);
        }
        match decode_netpbm(&bytes) {
            Ok(frame) => {
                let want: Vec<f32> = payload.iter().map(|&v| v as f32).collect();
                if frame.data() != want.as_slice() {
                    failures.push(format!("{magic} samples"));
                }
                let encoded = if magic == "P2" || magic == "P3" {
                    encode_netpbm_ascii(&frame)
                } else {
                    encode_netpbm(&frame)
                };
                if decode_netpbm(&encoded).map(|f| f == frame).unwrap_or(false) {
                    let again = FrameBuffer::new(4, 3, channels, want, 0).unwrap();
                    if encode_netpbm(&again) != encode_netpbm(&frame) {
                        failures.push(format!("{magic} re-encode"));
                    }
                } else {
                    failures.push(format!("{magic} round trip"));
                }
            }
            Err(e) => failures.push(format!("{magic}: {e}")),
        }
    }
    // Y4M: zero-frame stream, then a multi-frame stream written and re-read.
    match open_y4m(Cursor::new(b"YUV4MPEG2 W6 H4 F30:1 C420\n".to_vec())) {
        Ok(s) if s.dimensions() == (6, 4) => {
            if s.luma().count() != 0 {
                failures.push("zero-frame y4m yielded frames".into());
            }
        }
        _ => failures.push("zero-frame y4m".into()),
    }
    let planes: Vec<LumaPlane> = (0..5)
        .map(|f| LumaPlane::from_fn(6, 4, |x, y| ((x * 40 + y * 9 + f * 3) % 256) as f32))
        .collect();
    let mut writer = Y4mWriter::new(Vec::new(), 6, 4, Colorspace::C420).unwrap();
    planes.iter().for_each(|p| writer.write_luma(p).unwrap());
    let bytes = writer.finish().unwrap();
    let back: Vec<LumaPlane> = open_y4m(Cursor::new(bytes.clone()))
        .unwrap()
        .luma()
        .map(|r| r.unwrap().1)
        .collect();
    if back != planes {
        failures.push("y4m round trip".into());
    }
    let mut rewritten = Y4mWriter::new(Vec::new(), 6, 4, Colorspace::C420).unwrap();
    back.iter().for_each(|p| rewritten.write_luma(p).unwrap());
    if rewritten.finish().unwrap() != bytes {
        failures.push("y4m re-encode".into());
    }
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            "netpbm P2/P3/P5/P6 with comments, y4m zero-frame and round trip".to_string()
        } else {
            failures.join("; ")
        },
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("depth-1 exactness", c1_depth_one_exactness),
        ("denoise-count law", c2_denoise_count_law),
        ("speedup floor", c3_speedup_floor),
        ("flat-scene equivalence", c4_flat_equivalence),
        ("texture/depth degradation", c5_texture_depth_degradation),
        ("equivalence bound behaviour", c6_equivalence_bound),
        ("FFT correlation oracle", c7_fft_oracle),
        ("PCE null calibration", c8_pce_calibration),
        ("averaging noise law", c9_averaging_noise_law),
        ("stride inferiority", c10_stride_inferiority),
        ("parser conformance", c11_parser_conformance),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = (i + 1).to_string();
        if !filter.is_empty() && !filter.iter().any(|f| *f == id || name.contains(f.as_str())) {
            continue;
        }
        let started = Instant::now();
        let result = run();
        println!(
            "criterion {id:>2} {}: {name} -- {} [{:.1}s]",
            if result.pass { "PASS" } else { "FAIL" },
            result.detail,
            started.elapsed().as_secs_f64()
        );
        failed += !result.pass as usize;
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
