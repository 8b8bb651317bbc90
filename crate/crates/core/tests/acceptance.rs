//! Acceptance suite. Runs every criterion in sequence, prints one PASS/FAIL
//! line each, and exits nonzero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use harbench::data::{generate_synthetic, Dataset, Matrix, SyntheticSpec};
use harbench::evaluation::{
    accuracy, accuracy_from_confusion, lda_project, macro_f_from_confusion, macro_f_measure, unpaired_ttest, Verdict,
    EQUIVALENCE_LEVEL,
};
use harbench::experiment::{lda_train_separability, run_batch, DatasetSource, ExperimentConfig, Method};
use harbench::features::FeatureKind;
use harbench::learners::argmax;
use harbench::neuralnet::arch::{build_chen_xue, build_chen_xue_with, build_ha, build_jiang_yin_with, ChenXueParams, HaParams, JiangYinParams};
use harbench::neuralnet::train::grad_check;
use harbench::neuralnet::{fit, Activation, Dims, LayerSpec, NetSpec, Network, Shape, TrainConfig};
use harbench::rng::rng_for;
use harbench::splitplan::{audit_leakage, split_fncv, split_ltcv, split_sncv, split_snls, Combination};
use harbench::windowing::{slide_windows_exact, window_count, WindowConfig};
use harbench::Trial;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;

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

fn fixture() -> Dataset {
    generate_synthetic(&SyntheticSpec::default(), 42).unwrap()
}

fn fixture_source() -> DatasetSource {
    DatasetSource::Synthetic {
        spec: SyntheticSpec::default(),
        seed: 42,
    }
}

/// Small random dataset. Trials hold at least three 5 s semi-overlapping
/// windows; a trial with a single window cannot overlap anything.
fn random_dataset(seed: u64) -> Dataset {
    let mut rng = rng_for(seed, &[0xACCE]);
    let spec = SyntheticSpec {
        n_subjects: rng.random_range(2..=5),
        n_activities: rng.random_range(2..=4),
        trials_per_pair: rng.random_range(1..=3),
        trial_len_steps: rng.random_range(500..=1500),
        n_channels: rng.random_range(1..=4),
        trial_noise_corr: rng.random_range(0.0..0.95),
        ..SyntheticSpec::default()
    };
    generate_synthetic(&spec, seed).unwrap()
}

fn c1_leakage() -> Outcome {
    let runs: Vec<[u64; 4]> = (0..100u64)
        .into_par_iter()
        .map(|seed| {
            let ds = random_dataset(seed);
            let k = 2 + (seed as usize % 4);
            let ltcv = audit_leakage(&split_ltcv(&ds, k.min(ds.trials.len()), 5.0, seed).unwrap());
            let fncv = audit_leakage(&split_fncv(&ds, k, 5.0, seed).unwrap());
            let snls = audit_leakage(&split_snls(&ds, 5.0).unwrap());
            let sncv = audit_leakage(&split_sncv(&ds, k, 5.0, seed).unwrap());
            [ltcv.same_trial_pairs(), fncv.overlap_pairs(), snls.same_subject_pairs(), sncv.overlap_pairs()]
        })
        .collect();
    let ltcv_bad = runs.iter().filter(|r| r[0] != 0).count();
    let fncv_bad = runs.iter().filter(|r| r[1] != 0).count();
    let snls_bad = runs.iter().filter(|r| r[2] != 0).count();
    let sncv_leaky = runs.iter().filter(|r| r[3] > 0).count();
    outcome(
        ltcv_bad == 0 && fncv_bad == 0 && snls_bad == 0 && sncv_leaky >= 95,
        format!(
            "LTCV trial leaks {ltcv_bad}/100, FNCV overlaps {fncv_bad}/100, SNLS subject leaks {snls_bad}/100, SNCV overlapping {sncv_leaky}/100"
        ),
    )
}

fn c2_bias_ordering() -> Outcome {
    let ds = fixture();
    let mut lines = Vec::new();
    let mut ordered = 0;
    let mut gaps = 0;
    for seed in 0..5u64 {
        let acc: Vec<f64> = [Combination::Sncv, Combination::Fncv, Combination::Ltcv]
            .into_iter()
            .map(|comb| {
                let cfg = ExperimentConfig::new(fixture_source(), Method::Catal, comb, seed);
                let t = run_batch(&ds, &[Method::Catal], &cfg).unwrap();
                t.rows[0].summary().unwrap().mean_accuracy
            })
            .collect();
        if acc[0] >= acc[1] && acc[1] >= acc[2] {
            ordered += 1;
        }
        if acc[0] - acc[2] >= 0.03 {
            gaps += 1;
        }
        lines.push(format!("{:.1}/{:.1}/{:.1}", 100.0 * acc[0], 100.0 * acc[1], 100.0 * acc[2]));
    }
    outcome(
        ordered == 5 && gaps >= 4,
        format!("SNCV/FNCV/LTCV % per seed [{}]; ordered {ordered}/5, gap >= 3pp {gaps}/5", lines.join(", ")),
    )
}

fn c3_window_oracle() -> Outcome {
    let mismatches: usize = (0..=600usize)
        .into_par_iter()
        .map(|len| {
            let trial = Trial {
                trial_id: "t".into(),
                subject_id: "s".into(),
                activity_label: "a".into(),
                sample_rate_hz: 50.0,
                channels: vec![harbench::ChannelMeta::new("x", harbench::SensorKind::Accelerometer, "wrist")],
                data: Matrix::new(len, 1, (0..len).map(|i| i as f64).collect()).unwrap(),
            };
            let mut bad = 0;
            for w in 1..=64 {
                for s in 1..=64 {
                    // Brute-force count of admissible starts.
                    let mut brute = 0;
                    let mut start = 0;
                    while start + w <= len {
                        brute += 1;
                        start += s;
                    }
                    let windows = slide_windows_exact(&trial, w, s);
                    let aligned = windows
                        .iter()
                        .enumerate()
                        .all(|(i, win)| win.start_idx == i * s && win.data.get(0, 0) == (i * s) as f64);
                    if window_count(len, w, s) != windows.len() || windows.len() != brute || !aligned {
                        bad += 1;
                    }
                }
            }
            bad
        })
        .sum();
    outcome(mismatches == 0, format!("{mismatches} mismatches over 601 x 64 x 64 cases"))
}

fn gradient_specs() -> Vec<NetSpec> {
    let image = |h, w, d| Shape::Image(Dims::new(h, w, d));
    let head = |mut v: Vec<LayerSpec>| {
        v.extend([LayerSpec::Flatten, LayerSpec::Dense { units: 3 }, LayerSpec::Softmax]);
        v
    };
    let spec = |name: &str, input, layers| NetSpec {
        name: name.into(),
        input,
        layers,
    };
    let conv = |f, h, w| LayerSpec::Conv2d {
        filters: f,
        kernel_h: h,
        kernel_w: w,
    };
    let groups = vec![vec![0, 1, 2], vec![3, 4, 5]];
    let ha = HaParams {
        filters: [2, 3],
        kernel: 3,
        pool_h: 2,
    };
    vec![
        spec("dense", Shape::Flat(5), vec![LayerSpec::Dense { units: 3 }, LayerSpec::Softmax]),
        spec(
            "relu",
            Shape::Flat(6),
            vec![
                LayerSpec::Dense { units: 7 },
                LayerSpec::Activation { kind: Activation::Relu },
                LayerSpec::Dense { units: 3 },
                LayerSpec::Softmax,
            ],
        ),
        spec(
            "tanh",
            Shape::Flat(6),
            vec![
                LayerSpec::Dense { units: 7 },
                LayerSpec::Activation { kind: Activation::Tanh },
                LayerSpec::Dense { units: 3 },
                LayerSpec::Softmax,
            ],
        ),
        spec("conv2d", image(7, 5, 2), head(vec![conv(3, 3, 2)])),
        spec("max_pool", image(8, 6, 2), head(vec![conv(2, 2, 2), LayerSpec::MaxPool { h: 2, w: 2 }])),
        spec("avg_pool", image(8, 6, 2), head(vec![conv(2, 2, 2), LayerSpec::AvgPool { h: 2, w: 2 }])),
        spec(
            "insert_zero_columns",
            image(6, 5, 2),
            head(vec![conv(2, 2, 2), LayerSpec::InsertZeroColumns { before: vec![0, 2, 4] }, conv(2, 2, 2)]),
        ),
        build_chen_xue_with(
            Dims::new(40, 3, 1),
            3,
            &ChenXueParams {
                filters: [2, 3, 2],
                kernel_h: 3,
                first_kernel_w: 2,
                pool_h: 2,
            },
        )
        .unwrap(),
        build_jiang_yin_with(
            Dims::new(24, 12, 1),
            3,
            &JiangYinParams {
                filters: [2, 3],
                kernel: 3,
                pools: [2, 2],
            },
        )
        .unwrap(),
        build_ha(20, &groups, 3, &ha, false).unwrap(),
        build_ha(20, &groups, 3, &ha, true).unwrap(),
    ]
}

fn c4_gradients() -> Outcome {
    let mut worst = Vec::new();
    for s in gradient_specs() {
        let w = (0..50u64)
            .into_par_iter()
            .map(|seed| {
                let mut net = Network::new(s.clone(), seed).unwrap();
                let mut rng = rng_for(seed, &[0xC0FFEE]);
                // Zero biases can park a ReLU exactly on its kink.
                for p in &mut net.params {
                    *p += 0.1 * rng.sample::<f64, _>(StandardNormal);
                }
                let input: Vec<f64> = (0..net.input_len()).map(|_| rng.sample(StandardNormal)).collect();
                let target = rng.random_range(0..net.n_classes());
                grad_check(&net, &input, target, 1e-6).unwrap().max_rel_err
            })
            .reduce(|| 0.0, f64::max);
        worst.push((s.name.clone(), w));
    }
    let max = worst.iter().map(|w| w.1).fold(0.0, f64::max);
    let names: Vec<String> = worst.iter().map(|(n, w)| format!("{n} {w:.1e}")).collect();
    outcome(max < 1e-4, format!("max relative error {max:.2e} over 50 seeds [{}]", names.join(", ")))
}

fn c5_training() -> Outcome {
    // Three classes that differ in dominant frequency; noise is small.
    let (len, per_class) = (128, 20);
    let mut rng = rng_for(5, &[0x7A]);
    let noise = Normal::new(0.0, 0.3).unwrap();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for c in 0..3usize {
        let freq = [2.0, 5.0, 9.0][c];
        for _ in 0..per_class {
            let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let mut x = Vec::with_capacity(len * 3);
            for t in 0..len {
                for ch in 0..3 {
                    let arg = std::f64::consts::TAU * freq * t as f64 / len as f64 + phase + ch as f64;
                    x.push(arg.sin() + noise.sample(&mut rng));
                }
            }
            xs.push(x);
            ys.push(c);
        }
    }
    let spec = build_chen_xue(Dims::new(len, 3, 1), 3).unwrap();
    let net = Network::new(spec, 1).unwrap();
    let trained = fit(net, &xs, &ys, &TrainConfig::default().with_seed(1)).unwrap();
    let hits = xs
        .iter()
        .zip(&ys)
        .filter(|(x, &y)| argmax(&trained.predict_proba(x).unwrap()) == y)
        .count();
    let acc = hits as f64 / xs.len() as f64;
    let last = trained.log.last().map_or(f64::NAN, |l| l.loss);
    outcome(
        acc >= 0.95 && trained.log.len() <= 200,
        format!("train accuracy {:.1}% after {} epochs, final loss {last:.3}", 100.0 * acc, trained.log.len()),
    )
}

fn c6_metrics() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut rng = rng_for(6, &[0x6]);
    for _ in 0..200 {
        let c = rng.random_range(2..=6);
        let m: Vec<Vec<u64>> = (0..c).map(|_| (0..c).map(|_| rng.random_range(0..20u64)).collect()).collect();
        let mut m = m;
        m[0][0] += 1;
        let (mut pred, mut truth) = (Vec::new(), Vec::new());
        for (t, row) in m.iter().enumerate() {
            for (p, &n) in row.iter().enumerate() {
                for _ in 0..n {
                    truth.push(t);
                    pred.push(p);
                }
            }
        }
        let classes: Vec<usize> = (0..c).collect();
        let n = pred.len() as f64;
        let acc_oracle = pred.iter().zip(&truth).filter(|(p, t)| p == t).count() as f64 / n;
        let mut f_sum = 0.0;
        for k in 0..c {
            let tp = pred.iter().zip(&truth).filter(|(p, t)| **p == k && **t == k).count() as f64;
            let fp = pred.iter().zip(&truth).filter(|(p, t)| **p == k && **t != k).count() as f64;
            let fneg = pred.iter().zip(&truth).filter(|(p, t)| **p != k && **t == k).count() as f64;
            if tp > 0.0 {
                f_sum += 2.0 * tp / (2.0 * tp + fp + fneg);
            }
        }
        let f_oracle = f_sum / c as f64;
        for (got, want) in [
            (accuracy(&pred, &truth).unwrap(), acc_oracle),
            (accuracy_from_confusion(&m), acc_oracle),
            (macro_f_measure(&pred, &truth, &classes).unwrap(), f_oracle),
            (macro_f_from_confusion(&m), f_oracle),
        ] {
            worst = worst.max((got - want).abs());
        }
    }
    outcome(worst <= 1e-12, format!("max deviation {worst:.1e} over 200 matrices"))
}

fn c7_ttest() -> Outcome {
    let reps = 10_000u64;
    let sample = |rng: &mut rand_chacha::ChaCha8Rng, mu: f64| -> Vec<f64> {
        (0..10).map(|_| mu + rng.sample::<f64, _>(StandardNormal)).collect()
    };
    let rate = |shift: f64, stream: u64| {
        let different: u64 = (0..reps)
            .into_par_iter()
            .map(|r| {
                let mut rng = rng_for(r, &[stream]);
                let a = sample(&mut rng, 0.0);
                let b = sample(&mut rng, shift);
                u64::from(unpaired_ttest(&a, &b, EQUIVALENCE_LEVEL).unwrap().verdict == Verdict::Different)
            })
            .sum();
        different as f64 / reps as f64
    };
    let null = rate(0.0, 71);
    let far = rate(5.0, 72);
    outcome(
        (0.07..=0.13).contains(&null) && far >= 0.999,
        format!("equal means: {:.2}% different; 5 sd apart: {:.2}% different", 100.0 * null, 100.0 * far),
    )
}

fn c8_snls_x10() -> Outcome {
    let ds = fixture();
    let mut narrower = 0;
    let mut lines = Vec::new();
    for seed in 0..5u64 {
        let width = |comb| {
            let cfg = ExperimentConfig::new(fixture_source(), Method::Kwapisz, comb, seed);
            run_batch(&ds, &[Method::Kwapisz], &cfg).unwrap().rows[0].summary().unwrap().ci_width()
        };
        let (plain, rep) = (width(Combination::Snls), width(Combination::SnlsX10));
        if rep < plain {
            narrower += 1;
        }
        lines.push(format!("{:.2}/{:.2}", 100.0 * plain, 100.0 * rep));
    }
    outcome(
        narrower >= 4,
        format!("CI width SNLS/SNLSx10 pp per seed [{}]; narrower {narrower}/5", lines.join(", ")),
    )
}

fn c9_lda() -> Outcome {
    let mut rng = rng_for(9, &[0x9]);
    let noise = Normal::new(0.0, 0.1).unwrap();
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for i in 0..500 {
        let c = i % 2;
        x.push(vec![if c == 0 { -1.0 } else { 1.0 } + noise.sample(&mut rng), noise.sample(&mut rng)]);
        y.push(c);
    }
    let cos = lda_project(&x, &y, 2).unwrap().directions[0][0].abs();

    let ds = fixture();
    let mut monotone = 0;
    let mut lines = Vec::new();
    for seed in 0..5u64 {
        let ratio: Vec<f64> = [
            split_sncv(&ds, 10, 5.0, seed).unwrap(),
            split_fncv(&ds, 10, 5.0, seed).unwrap(),
            split_ltcv(&ds, 10, 5.0, seed).unwrap(),
        ]
        .iter()
        .map(|plan| {
            let v = lda_train_separability(&ds, plan, FeatureKind::MeanStd).unwrap();
            v.iter().sum::<f64>() / v.len() as f64
        })
        .collect();
        if ratio[0] > ratio[1] && ratio[1] > ratio[2] {
            monotone += 1;
        }
        lines.push(format!("{:.3}/{:.3}/{:.3}", ratio[0], ratio[1], ratio[2]));
    }
    outcome(
        cos > 0.99 && monotone >= 4,
        format!(
            "two-Gaussian |cos| {cos:.5}; train-fold separability SNCV/FNCV/LTCV [{}], decreasing {monotone}/5",
            lines.join(", ")
        ),
    )
}

fn c10_window_ratio() -> Outcome {
    let mut bad = 0;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for seed in 0..=100u64 {
        let ds = if seed == 100 { fixture() } else { random_dataset(seed) };
        let count = |cfg: WindowConfig| -> Vec<usize> {
            let w = cfg.window_len(ds.sample_rate_hz).unwrap();
            let s = cfg.step(w);
            ds.trials.iter().map(|t| window_count(t.len(), w, s)).collect::<Vec<_>>()
        };
        let snow_t = count(WindowConfig::semi_overlapping(5.0));
        let fnow_t = count(WindowConfig::non_overlapping(5.0));
        if snow_t.iter().zip(&fnow_t).any(|(a, b)| a < b) {
            bad += 1;
        }
        let (snow, fnow): (usize, usize) = (snow_t.iter().sum(), fnow_t.iter().sum());
        let r = snow as f64 / fnow as f64;
        lo = lo.min(r);
        hi = hi.max(r);
        if snow < fnow || !(1.0..=2.0).contains(&r) {
            bad += 1;
        }
    }
    outcome(bad == 0, format!("SNOW/FNOW ratio range [{lo:.3}, {hi:.3}] over 100 random datasets and the fixture, {bad} violations"))
}

fn main() {
    let criteria: [(&str, u64, fn() -> Outcome); 10] = [
        ("leakage invariants", 30, c1_leakage),
        ("bias ordering", 300, c2_bias_ordering),
        ("window oracle", 10, c3_window_oracle),
        ("gradient checks", 120, c4_gradients),
        ("training sanity", 120, c5_training),
        ("metric oracle", 1, c6_metrics),
        ("t-test calibration", 30, c7_ttest),
        ("SNLSx10 interval shrinkage", 300, c8_snls_x10),
        ("LDA fidelity", 300, c9_lda),
        ("FNOW/SNOW sample ratio", 30, c10_window_ratio),
    ];
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.into_iter().enumerate() {
        let started = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let elapsed = started.elapsed();
        let in_time = elapsed <= Duration::from_secs(budget);
        let pass = result.pass && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {} [{name}] {} (runtime {:.1}s, budget {budget}s{})",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            result.detail,
            elapsed.as_secs_f64(),
            if in_time { "" } else { ", over budget" }
        );
    }
    println!("acceptance: {} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
