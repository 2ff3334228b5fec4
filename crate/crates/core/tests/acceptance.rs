//! End-to-end acceptance checks. Runs as a plain binary so every criterion
//! prints its PASS/FAIL line regardless of output capture.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal};

use vsrkit::cleaner::{
    clean, cnn_forward, cnn_forward_raw, decode_weights, encode_weights, load_weights, save_weights, Activation,
    CleanerModel, CnnWeights, Conv,
};
use vsrkit::degrade::{apply_chain, DegradeRanges, VideoBackend};
use vsrkit::imgcore::{
    area_downsample, charbonnier, cleaning_loss, output_loss, psnr, FrameSequence, Image, CHARBONNIER_EPS,
};
use vsrkit::loader::{benchmark_io, BenchConfig, Scheme};
use vsrkit::metrics::{fit_ggd, fit_pristine, niqe_score, NiqeModel, NiqeParams};
use vsrkit::refine::{dynamic_refine, fixed_refine, RefineConfig, StopReason};
use vsrkit::rng::KeyedRng;
use vsrkit::schedule::{realize_timeline, Bounds, DegradationTimeline, ParamSpace, WalkSpec, LATTICE};
use vsrkit::synth::{write_sequence_corpus, DeadLeaves};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn leaves(h: usize, w: usize, c: usize, seed: u64) -> Image<f64> {
    DeadLeaves::default().render(h, w, c, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

fn add_gaussian(img: &Image<f64>, sigma: f64, seed: u64) -> Image<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = Normal::new(0.0, sigma).unwrap();
    let (h, w, c) = img.dims();
    Image::new(h, w, c, img.data().iter().map(|v| v + n.sample(&mut rng)).collect()).unwrap().clamp01()
}

fn max_abs(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

// 1. Half-load I/O.
fn io_halving() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    write_sequence_corpus(dir.path(), 2, 40, 64, 64, 11).unwrap();
    let run = |scheme| {
        let cfg = BenchConfig {
            latency: Duration::from_millis(10),
            patch_size: 4,
            ..BenchConfig::new(dir.path(), scheme, 30, 50)
        };
        benchmark_io(&cfg).unwrap()
    };
    let conv = run(Scheme::Conventional);
    let stoch = run(Scheme::Stochastic);
    println!("    {}", conv.to_record());
    println!("    {}", stoch.to_record());
    let ratio = stoch.mean_read().as_secs_f64() / conv.mean_read().as_secs_f64();
    let expected_read = |files: f64| files * 0.010;
    let conv_err = conv.mean_read().as_secs_f64() / expected_read(30.0) - 1.0;
    let stoch_err = stoch.mean_read().as_secs_f64() / expected_read(15.0) - 1.0;
    println!("    reference timing (not asserted): ~2.5 s -> ~1.5 s per iteration");
    check(stoch.total.files_read * 2 == conv.total.files_read, "files_read is not exactly half")?;
    check(conv.total.files_read == 30 * 50, "conventional read count")?;
    check((ratio - 0.5).abs() <= 0.05, format!("read-time ratio {ratio:.4} outside 0.5 +- 10%"))?;
    check(conv_err.abs() <= 0.1 && stoch_err.abs() <= 0.1, "read phase deviates from files x latency")?;
    Ok(format!(
        "read {:.1} ms vs {:.1} ms per iteration, ratio {ratio:.4}, files {} vs {}",
        stoch.mean_read().as_secs_f64() * 1e3,
        conv.mean_read().as_secs_f64() * 1e3,
        stoch.total.files_read,
        conv.total.files_read
    ))
}

fn fold(t: i64) -> i64 {
    // Mirror into [0, LATTICE] with period 2 * LATTICE.
    let p = 2 * LATTICE;
    let m = ((t % p) + p) % p;
    if m > LATTICE {
        p - m
    } else {
        m
    }
}

// 2. Random-walk replay.
fn walk_replay() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut slots = 0usize;
    for k in 0..1000u64 {
        let len = rng.gen_range(1..80);
        let fraction = [0.01, 0.1, 0.5, 3.0][rng.gen_range(0..4)];
        let spec = WalkSpec::with_step_fraction(ParamSpace::default(), fraction, rng.gen());
        let t = realize_timeline(len, &spec, k);
        let bounds: &[Bounds] = t.bounds();
        let mut ticks = *t.slot(0).ticks();
        for i in 0..t.len() {
            if i > 0 {
                for (c, r) in ticks.iter_mut().zip(&t.increments()[i - 1]) {
                    *c = fold(*c + r);
                }
            }
            let slot = t.slot(i);
            check(slot.ticks() == &ticks, format!("timeline {k} slot {i}: tick mismatch"))?;
            for (c, b) in bounds.iter().enumerate() {
                let v = slot.values()[c];
                check(v >= b.min && v <= b.max, format!("timeline {k} slot {i}: component {c} out of bounds"))?;
            }
        }
        let replayed = t.replay();
        for (a, b) in replayed.iter().zip(t.slots()) {
            let same = a.values().iter().zip(b.values()).all(|(x, y)| x.to_bits() == y.to_bits());
            check(same && a.ticks() == b.ticks(), format!("timeline {k}: replay not bit-exact"))?;
        }
        let back = DegradationTimeline::from_record(&t.to_record()).map_err(|e| e.to_string())?;
        check(back.slots() == t.slots(), format!("timeline {k}: record round trip differs"))?;
        slots += t.len();
    }
    Ok(format!("1000 timelines, {slots} slots replayed bit-exactly, all in bounds"))
}

// 3. Dynamic refinement contract.
fn refinement_contract() -> Outcome {
    let corpus: Vec<Image<f64>> = (0..100)
        .map(|i| {
            let sigma = [5.0, 10.0, 20.0, 30.0][i % 4] / 255.0;
            add_gaussian(&leaves(32, 32, 3, 300 + i as u64), sigma, 900 + i as u64)
        })
        .collect();
    let cleaners = [CleanerModel::Identity, CleanerModel::Median(3), CleanerModel::BoxBlur(3)];
    let mut report = Vec::new();
    for cleaner in &cleaners {
        let mut hist = [0usize; 11];
        for (i, img) in corpus.iter().enumerate() {
            for cfg in [RefineConfig::default(), RefineConfig::new(0.0, 10).unwrap(), RefineConfig::new(5.0, 4).unwrap()] {
                let (out, trace) = dynamic_refine(img, cleaner, &cfg).map_err(|e| e.to_string())?;
                // Oracle: explicit loop with an independent diff.
                let mut prev = img.clone();
                let mut n = 0;
                loop {
                    let next = clean(&prev, cleaner).unwrap();
                    n += 1;
                    let d = 255.0 * next.data().iter().zip(prev.data()).map(|(a, b)| (a - b).abs()).sum::<f64>()
                        / next.data().len() as f64;
                    prev = next;
                    if d < cfg.theta || n >= cfg.max_iters {
                        break;
                    }
                }
                let tag = format!("{} image {i} theta {}", cleaner.name(), cfg.theta);
                check(trace.iterations() == n, format!("{tag}: {} iterations vs oracle {n}", trace.iterations()))?;
                check(out == prev, format!("{tag}: output differs from oracle"))?;
                if cfg.theta == 0.0 {
                    check(trace.stop == StopReason::Cap && n == cfg.max_iters, format!("{tag}: did not hit the cap"))?;
                }
                if matches!(cleaner, CleanerModel::Identity) && cfg.theta > 0.0 {
                    check(n == 1 && out == *img, format!("{tag}: identity ran {n} times"))?;
                }
                if cfg == RefineConfig::default() {
                    hist[n] += 1;
                }
            }
        }
        let within3 = hist[..=3].iter().sum::<usize>();
        report.push(format!("{} {:?} (<=3: {within3}%)", cleaner.name(), &hist[1..]));
    }
    println!("    iteration histogram at theta 1.5, counts for 1..10 iterations:");
    for r in &report {
        println!("      {r}");
    }
    Ok("100 images x 3 cleaners match the loop oracle; identity stops at 1; theta 0 hits the cap".into())
}

// 4. Fixed versus dynamic refinement under NIQE.
fn fixed_vs_dynamic(model: &NiqeModel) -> Outcome {
    let cleaner = CleanerModel::GaussianDenoise(1.0);
    let clean_set: Vec<Image<f64>> = (0..8).map(|i| leaves(192, 192, 1, 400 + i)).collect();
    let mut lines = Vec::new();
    let mut ok = true;
    for (li, level) in [10.0, 20.0, 30.0].into_iter().enumerate() {
        let noisy: Vec<Image<f64>> =
            clean_set.iter().enumerate().map(|(i, x)| add_gaussian(x, level / 255.0, 50 * li as u64 + i as u64)).collect();
        let mean_niqe = |imgs: &[Image<f64>]| imgs.iter().map(|x| niqe_score(x, model).unwrap()).sum::<f64>() / imgs.len() as f64;
        let fixed: Vec<f64> = (1..=5)
            .map(|n| mean_niqe(&noisy.iter().map(|x| fixed_refine(x, &cleaner, n).unwrap()).collect::<Vec<_>>()))
            .collect();
        let dynamic = |cap: usize| {
            [0.5, 1.5, 5.0].map(|theta| {
                let cfg = RefineConfig::new(theta, cap).unwrap();
                let runs: Vec<_> = noisy.iter().map(|x| dynamic_refine(x, &cleaner, &cfg).unwrap()).collect();
                let iters = runs.iter().map(|(_, t)| t.iterations()).sum::<usize>() as f64 / runs.len() as f64;
                let outs: Vec<_> = runs.into_iter().map(|(x, _)| x).collect();
                (theta, mean_niqe(&outs), iters)
            })
        };
        let show = |d: &[(f64, f64, f64)]| {
            d.iter().map(|(t, s, n)| format!("theta {t}: {s:.3} ({n:.1} it)")).collect::<Vec<_>>().join(", ")
        };
        // The comparison range is n = 1..5, so dynamic runs share that cap.
        let capped = dynamic(5);
        let uncapped = dynamic(10);
        let bound = fixed[0].max(fixed[4]);
        let pass = capped.iter().all(|&(_, s, _)| s <= bound);
        ok &= pass;
        lines.push(format!(
            "sigma {level:>4}/255  fixed n=1..5: {}\n      dynamic cap 5: {}  {}\n      dynamic cap 10 (reported): {}",
            fixed.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>().join(" "),
            show(&capped),
            if pass { "ok" } else { "WORSE THAN BOTH EXTREMES" },
            show(&uncapped),
        ));
    }
    for l in &lines {
        println!("    {l}");
    }
    check(ok, "a dynamic setting scored worse than both fixed extremes")?;
    Ok("dynamic NIQE <= max(fixed-1, fixed-5) at every noise level".into())
}

fn oracle_conv(x: &[Vec<Vec<f64>>], conv: &Conv) -> Vec<Vec<Vec<f64>>> {
    let (h, w) = (x[0].len(), x[0][0].len());
    let (oc, ic) = (conv.weight.dims[0], conv.weight.dims[1]);
    let mut out = vec![vec![vec![0.0; w]; h]; oc];
    for o in 0..oc {
        for y in 0..h {
            for xx in 0..w {
                let mut acc = conv.bias.data[o] as f64;
                for i in 0..ic {
                    for ky in 0..3 {
                        for kx in 0..3 {
                            let (sy, sx) = (y as i64 + ky as i64 - 1, xx as i64 + kx as i64 - 1);
                            if sy >= 0 && sx >= 0 && (sy as usize) < h && (sx as usize) < w {
                                acc += conv.weight.data[((o * ic + i) * 3 + ky) * 3 + kx] as f64
                                    * x[i][sy as usize][sx as usize];
                            }
                        }
                    }
                }
                out[o][y][xx] = acc;
            }
        }
    }
    out
}

fn oracle_network(img: &Image<f64>, w: &CnnWeights) -> Vec<f64> {
    let (h, wd, c) = img.dims();
    let input: Vec<Vec<Vec<f64>>> =
        (0..c).map(|ch| (0..h).map(|y| (0..wd).map(|x| img.get(y, x, ch)).collect()).collect()).collect();
    let act = |v: f64| match w.activation {
        Activation::Relu => v.max(0.0),
        Activation::LeakyRelu => {
            if v < 0.0 {
                0.1 * v
            } else {
                v
            }
        }
    };
    let mut feat = oracle_conv(&input, &w.head);
    for b in &w.blocks {
        let mut t = oracle_conv(&feat, &b.conv1);
        for v in t.iter_mut().flatten().flatten() {
            *v = act(*v);
        }
        let t = oracle_conv(&t, &b.conv2);
        for (f, r) in feat.iter_mut().flatten().flatten().zip(t.iter().flatten().flatten()) {
            *f += r;
        }
    }
    let mut out = oracle_conv(&feat, &w.tail);
    if w.global_residual {
        for (o, i) in out.iter_mut().flatten().flatten().zip(input.iter().flatten().flatten()) {
            *o += i;
        }
    }
    // Back to interleaved order.
    let mut flat = vec![0.0; h * wd * c];
    for ch in 0..c {
        for y in 0..h {
            for x in 0..wd {
                flat[(y * wd + x) * c + ch] = out[ch][y][x];
            }
        }
    }
    flat
}

// 5. CNN executor against the brute-force oracle.
fn cnn_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let dir = tempfile::tempdir().unwrap();
    let (mut worst, mut worst32) = (0.0f64, 0.0f64);
    for k in 0..100 {
        let ic = if rng.gen() { 3 } else { 1 };
        let mut w = CnnWeights::random(ic, rng.gen_range(1..=8), rng.gen_range(0..=2), rng.gen_range(0.05..0.6), &mut rng);
        w.activation = if rng.gen() { Activation::Relu } else { Activation::LeakyRelu };
        w.global_residual = rng.gen();
        let (h, wd) = (rng.gen_range(1..=16), rng.gen_range(1..=16));
        let img = Image::<f64>::from_fn(h, wd, ic, |_, _, _| rng.gen()).unwrap();
        let want = oracle_network(&img, &w);
        let raw = cnn_forward_raw(&img, &w).map_err(|e| e.to_string())?;
        let clamped = cnn_forward(&img, &w).map_err(|e| e.to_string())?;
        let want_clamped: Vec<f64> = want.iter().map(|v| v.clamp(0.0, 1.0)).collect();
        let err = max_abs(raw.data(), &want).max(max_abs(clamped.data(), &want_clamped));
        worst = worst.max(err);
        check(err <= 1e-5, format!("config {k}: max abs error {err:e}"))?;
        let f32_out = cnn_forward(&img.cast::<f32>(), &w).unwrap();
        worst32 = worst32.max(max_abs(&f32_out.cast::<f64>().into_data(), &want_clamped));

        let path = dir.path().join(format!("{k}.rbvw"));
        save_weights(&w, &path).map_err(|e| e.to_string())?;
        let back = load_weights(&path).map_err(|e| e.to_string())?;
        let exact = back.tensors().iter().zip(w.tensors()).all(|(a, b)| {
            a.name == b.name && a.dims == b.dims && a.data.iter().zip(&b.data).all(|(x, y)| x.to_bits() == y.to_bits())
        });
        check(exact && back == w, format!("config {k}: weight file round trip not bit-exact"))?;
        check(encode_weights(&decode_weights(&encode_weights(&w).unwrap()).unwrap()).unwrap() == encode_weights(&w).unwrap(), "re-encode differs")?;
        let m = CleanerModel::Cnn(Arc::new(w));
        check(clean(&img, &m).unwrap() == clamped, format!("config {k}: clean dispatch differs"))?;
    }
    Ok(format!("100 configs, max abs error {worst:.2e} (f32 path {worst32:.2e}); weight files bit-exact"))
}

fn ggd_samples(alpha: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = Gamma::new(1.0 / alpha, 1.0).unwrap();
    (0..n)
        .map(|_| {
            let m: f64 = g.sample(&mut rng);
            let v = m.powf(1.0 / alpha);
            if rng.gen() {
                v
            } else {
                -v
            }
        })
        .collect()
}

// 6. Metric sanity.
fn metric_sanity(model: &NiqeModel) -> Outcome {
    let mut fits = Vec::new();
    for (i, alpha) in [0.5, 1.0, 2.0, 5.0].into_iter().enumerate() {
        let f = fit_ggd(&ggd_samples(alpha, 1_000_000, 60 + i as u64)).map_err(|e| e.to_string())?;
        check((f.alpha / alpha - 1.0).abs() <= 0.1, format!("alpha {alpha} fitted as {}", f.alpha))?;
        fits.push(format!("{alpha}->{:.3}", f.alpha));
    }
    let mut wins = 0;
    for i in 0..50 {
        let img = leaves(192, 192, 1, 700 + i);
        let noisy = add_gaussian(&img, 25.0 / 255.0, 800 + i);
        if niqe_score(&img, model).unwrap() < niqe_score(&noisy, model).unwrap() {
            wins += 1;
        }
    }
    println!("    absolute NIQE values of trained restorers are not reproduced or compared");
    check(wins >= 45, format!("NIQE ordering held for only {wins}/50 images"))?;
    Ok(format!("GGD fits {}; NIQE pristine < noised for {wins}/50", fits.join(", ")))
}

// 7. Degradation determinism and shape.
fn chain_determinism() -> Outcome {
    let canvas = leaves(72, 88, 3, 17);
    let hr = FrameSequence::new((0..6).map(|i| canvas.crop(i, 2 * i, 64, 64).unwrap().cast::<f32>()).collect()).unwrap();
    let timeline = realize_timeline(6, &WalkSpec::new(ParamSpace::default(), 21), 3);
    let keyed = KeyedRng::new(21);
    let first = apply_chain(&hr, &timeline, &keyed, 3, VideoBackend::Surrogate).map_err(|e| e.to_string())?;
    check(first.dims() == (16, 16, 3) && first.len() == 6, format!("output dims {:?}", first.dims()))?;
    let bits = |s: &FrameSequence<f32>| s.frames().iter().flat_map(|f| f.data().iter().map(|v| v.to_bits())).collect::<Vec<_>>();
    let reference = bits(&first);
    for run in 1..20 {
        let again = apply_chain(&hr, &timeline, &keyed, 3, VideoBackend::Surrogate).unwrap();
        check(bits(&again) == reference, format!("run {run} differs"))?;
    }
    let ranges = DegradeRanges {
        blur_sigma: (0.2, 0.2),
        resize_scale: (1.0, 1.0),
        gaussian_sigma: (0.0, 0.0),
        poisson_scale: (0.0, 0.0),
        jpeg_quality: (95.0, 95.0),
        bitrate: (4e9, 4e9),
        ..DegradeRanges::default()
    };
    let near = realize_timeline(6, &WalkSpec::new(ParamSpace::from_ranges(&ranges), 22), 0);
    let lr = apply_chain(&hr, &near, &keyed, 0, VideoBackend::Surrogate).unwrap();
    let mut worst = f64::INFINITY;
    for (l, h) in lr.frames().iter().zip(hr.frames()) {
        worst = worst.min(psnr(l, &area_downsample(h, 4).unwrap()).unwrap());
    }
    check(worst > 35.0, format!("near-identity PSNR {worst:.2} dB"))?;
    Ok(format!("20 runs byte-identical, 64x64 -> 16x16, near-identity PSNR >= {worst:.2} dB"))
}

// 8. Loss operators.
fn loss_operators() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for trial in 0..20 {
        let (h, w, c, s) = (rng.gen_range(1..6), rng.gen_range(1..6), [1, 3][rng.gen_range(0..2)], rng.gen_range(1..5));
        let eps = [CHARBONNIER_EPS, 1e-6, 0.1][trial % 3];
        let mut frames = |hh: usize, ww: usize| {
            FrameSequence::new((0..3).map(|_| Image::<f64>::from_fn(hh, ww, c, |_, _, _| rng.gen()).unwrap()).collect())
                .unwrap()
        };
        let cleaned = frames(h, w);
        let gt = frames(h * s, w * s);
        let restored = frames(h * s, w * s);
        let mut want_clean = 0.0;
        for (x, z) in cleaned.frames().iter().zip(gt.frames()) {
            let mut sum = 0.0;
            for y in 0..h {
                for xx in 0..w {
                    for ch in 0..c {
                        let mut block = 0.0;
                        for dy in 0..s {
                            for dx in 0..s {
                                block += z.get(y * s + dy, xx * s + dx, ch);
                            }
                        }
                        let d = x.get(y, xx, ch) - block / (s * s) as f64;
                        sum += (d * d + eps * eps).sqrt();
                    }
                }
            }
            want_clean += sum / (h * w * c) as f64;
        }
        let mut want_out = 0.0;
        for (y, z) in restored.frames().iter().zip(gt.frames()) {
            want_out += y.data().iter().zip(z.data()).map(|(a, b)| ((a - b).powi(2) + eps * eps).sqrt()).sum::<f64>()
                / y.data().len() as f64;
        }
        let got_clean = cleaning_loss(&cleaned, &gt, s, eps).map_err(|e| e.to_string())?;
        let got_out = output_loss(&restored, &gt, eps).map_err(|e| e.to_string())?;
        let err = (got_clean - want_clean).abs().max((got_out - want_out).abs());
        worst = worst.max(err);
        check(err <= 1e-9, format!("trial {trial}: loss error {err:e}"))?;
        for f in cleaned.frames() {
            check(charbonnier(f, f, eps).unwrap() == eps, format!("charbonnier(a, a, {eps}) != eps"))?;
        }
    }
    Ok(format!("cleaning/output losses within {worst:.1e} of the oracle; charbonnier(a, a, eps) == eps exactly"))
}

fn pristine_model() -> NiqeModel {
    let corpus: Vec<Image<f64>> = (0..20).map(|i| leaves(192, 192, 1, 100 + i)).collect();
    fit_pristine(&corpus, &NiqeParams::default()).expect("pristine model")
}

fn main() {
    let model = std::sync::OnceLock::new();
    let niqe = || model.get_or_init(pristine_model);
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("1 I/O halving", Box::new(io_halving)),
        ("2 random-walk replay", Box::new(walk_replay)),
        ("3 dynamic refinement contract", Box::new(refinement_contract)),
        ("4 fixed vs dynamic refinement", Box::new(|| fixed_vs_dynamic(niqe()))),
        ("5 CNN executor", Box::new(cnn_oracle)),
        ("6 metric sanity", Box::new(|| metric_sanity(niqe()))),
        ("7 degradation determinism", Box::new(chain_determinism)),
        ("8 loss operators", Box::new(loss_operators)),
    ];
    let mut failed = 0;
    for (name, run) in &criteria {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("criterion {name}: PASS ({secs:.1} s) {msg}"),
            Err(msg) => {
                failed += 1;
                println!("criterion {name}: FAIL ({secs:.1} s) {msg}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
