//! Subcommand implementations.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};

use vsrkit::degrade::{apply_chain, VideoBackend, CHAIN_SCALE};
use vsrkit::imgcore::io::{read_png, read_png_depth, write_png, BitDepth};
use vsrkit::imgcore::{rgb_to_gray, FrameSequence, Image};
use vsrkit::loader::{benchmark_io, budget_plans, list_frames, BenchConfig};
use vsrkit::metrics::{fit_pristine, niqe_score, NiqeModel, NiqeParams};
use vsrkit::refine::dynamic_refine;
use vsrkit::rng::KeyedRng;
use vsrkit::schedule::realize_timeline;
use vsrkit::synth::write_sequence_corpus;
use vsrkit::Image64;

use crate::config::{usage, RunConfig};

/// A frame directory: its display name and the sorted frame file names.
struct SequenceDir {
    name: String,
    dir: PathBuf,
    files: Vec<String>,
}

fn png_files(dir: &Path) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let e = e?;
        let name = e.file_name().to_string_lossy().into_owned();
        if e.path().is_file() && name.to_ascii_lowercase().ends_with(".png") {
            out.push(name);
        }
    }
    out.sort();
    Ok(out)
}

/// `root` itself when it holds frames, otherwise each sub-directory that does.
fn sequence_dirs(root: &Path, pattern: &str) -> Result<Vec<SequenceDir>> {
    if !root.is_dir() {
        bail!(usage(format!("{}: not a directory", root.display())));
    }
    let frames_in = |dir: &Path| -> Result<Vec<String>> {
        let numbers = list_frames(dir, pattern)?;
        if numbers.is_empty() {
            return png_files(dir);
        }
        Ok(numbers.into_iter().map(|n| vsrkit::degrade::format_frame_name(pattern, n as usize)).collect())
    };
    let own = frames_in(root)?;
    if !own.is_empty() {
        let name = root.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| ".".into());
        return Ok(vec![SequenceDir { name, dir: root.to_path_buf(), files: own }]);
    }
    let mut subdirs: Vec<PathBuf> = fs::read_dir(root)?.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.is_dir()).collect();
    subdirs.sort();
    let mut out = Vec::new();
    for dir in subdirs {
        let files = frames_in(&dir)?;
        if !files.is_empty() {
            let name = dir.file_name().expect("read_dir entry").to_string_lossy().into_owned();
            out.push(SequenceDir { name, dir, files });
        }
    }
    if out.is_empty() {
        bail!(usage(format!("{}: no PNG frames found", root.display())));
    }
    Ok(out)
}

fn read_sequence(seq: &SequenceDir) -> Result<FrameSequence<f32>> {
    let mut frames = Vec::with_capacity(seq.files.len());
    for f in &seq.files {
        let img: Image<f32> = read_png(seq.dir.join(f))?;
        // The chain needs sides divisible by its scale.
        let (h, w) = (img.height() / CHAIN_SCALE * CHAIN_SCALE, img.width() / CHAIN_SCALE * CHAIN_SCALE);
        if h == 0 || w == 0 {
            bail!("{}: frame smaller than {CHAIN_SCALE}x{CHAIN_SCALE}", seq.dir.join(f).display());
        }
        frames.push(img.crop(0, 0, h, w)?);
    }
    FrameSequence::new(frames).with_context(|| format!("{}: frames differ in size", seq.dir.display()))
}

fn write_sequence(seq: &FrameSequence<f32>, names: &[String], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for (frame, name) in seq.frames().iter().zip(names) {
        write_png(frame, dir.join(name), BitDepth::Eight)?;
    }
    Ok(())
}

/// Degrades every sequence under `input`. Sequence `i` (in sorted order) uses
/// stream index `i`, so the output depends only on the config and the inputs.
fn degrade_all(cfg: &RunConfig, input: &Path, mut emit: impl FnMut(&SequenceDir, &FrameSequence<f32>, &FrameSequence<f32>, &str) -> Result<()>) -> Result<()> {
    let seed = cfg.seed()?;
    let walk = cfg.walk_spec(seed)?;
    let encoder = cfg.encoder()?;
    let backend = match &encoder {
        Some(e) => VideoBackend::External(e),
        None => VideoBackend::Surrogate,
    };
    let keyed = KeyedRng::new(seed);
    for (i, seq) in sequence_dirs(input, &cfg.loader.pattern)?.iter().enumerate() {
        let hr = read_sequence(seq)?;
        let timeline = realize_timeline(hr.len(), &walk, i as u64);
        let lr = apply_chain(&hr, &timeline, &keyed, i as u64, backend)
            .with_context(|| format!("degrading {}", seq.dir.display()))?;
        log::info!("degraded {} ({} frames)", seq.name, hr.len());
        emit(seq, &hr, &lr, &timeline.to_record())?;
    }
    Ok(())
}

fn dims(s: &FrameSequence<f32>) -> String {
    let (h, w, _) = s.dims();
    format!("{h}x{w}")
}

pub fn degrade(cfg: &RunConfig, input: &Path, output: &Path, out: &mut impl Write) -> Result<()> {
    cfg.seed()?;
    let single = !sequence_dirs(input, &cfg.loader.pattern)?.iter().any(|s| s.dir != input);
    degrade_all(cfg, input, |seq, hr, lr, record| {
        let dir = if single { output.to_path_buf() } else { output.join(&seq.name) };
        write_sequence(lr, &seq.files, &dir)?;
        fs::write(dir.join("timeline.txt"), record)?;
        writeln!(out, "degrade sequence={} frames={} hr={} lr={} out={}", seq.name, lr.len(), dims(hr), dims(lr), dir.display())?;
        Ok(())
    })
}

pub fn pairs(cfg: &RunConfig, input: &Path, output: &Path, out: &mut impl Write) -> Result<()> {
    degrade_all(cfg, input, |seq, hr, lr, record| {
        let (hr_dir, lr_dir) = (output.join("hr").join(&seq.name), output.join("lr").join(&seq.name));
        write_sequence(hr, &seq.files, &hr_dir)?;
        write_sequence(lr, &seq.files, &lr_dir)?;
        fs::write(lr_dir.join("timeline.txt"), record)?;
        writeln!(out, "pair sequence={} frames={} hr={} lr={}", seq.name, hr.len(), dims(hr), dims(lr))?;
        Ok(())
    })
}

pub fn loadbench(cfg: &RunConfig, corpus: Option<&Path>, records: bool, out: &mut impl Write) -> Result<()> {
    let seed = cfg.seed()?;
    let scheme = cfg.scheme()?;
    let length = cfg.loader.length;
    // Without a corpus, synthesize one large enough for a full window.
    let synthetic;
    let corpus = match corpus {
        Some(p) => p.to_path_buf(),
        None => {
            synthetic = tempfile::tempdir()?;
            write_sequence_corpus(synthetic.path(), 2, length, 64, 64, seed)?;
            log::info!("synthesized a 2-sequence corpus in {}", synthetic.path().display());
            synthetic.path().to_path_buf()
        }
    };
    let bench = BenchConfig {
        pattern: cfg.loader.pattern.clone(),
        latency: Duration::from_secs_f64(cfg.loader.latency_ms / 1e3),
        patch_size: cfg.loader.patch_size,
        seed,
        ..BenchConfig::new(corpus, scheme, length, cfg.loader.iterations)
    };
    let report = benchmark_io(&bench)?;
    if records {
        writeln!(out, "{}", report.to_record())?;
    } else {
        write!(out, "{}", report.to_text())?;
    }
    Ok(())
}

/// Refines one PNG or every PNG in a directory, keeping file names and bit depth.
pub fn refine(cfg: &RunConfig, input: &Path, output: &Path, out: &mut impl Write) -> Result<()> {
    let cleaner = cfg.cleaner()?;
    let rc = cfg.refine_config()?;
    let jobs: Vec<(PathBuf, PathBuf)> = if input.is_dir() {
        fs::create_dir_all(output)?;
        let files = png_files(input)?;
        if files.is_empty() {
            bail!(usage(format!("{}: no PNG files", input.display())));
        }
        files.iter().map(|f| (input.join(f), output.join(f))).collect()
    } else if input.is_file() {
        if let Some(parent) = output.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent)?;
        }
        vec![(input.to_path_buf(), output.to_path_buf())]
    } else {
        bail!(usage(format!("{}: no such file or directory", input.display())));
    };
    for (src, dst) in jobs {
        let (img, depth) = read_png_depth::<f32>(&src)?;
        let (refined, trace) = dynamic_refine(&img, &cleaner, &rc).with_context(|| format!("refining {}", src.display()))?;
        write_png(&refined, &dst, depth)?;
        writeln!(out, "refine path={} {}", src.display(), trace.to_record())?;
    }
    Ok(())
}

fn read_gray(path: &Path) -> Result<Image64> {
    let img: Image64 = read_png(path)?;
    Ok(if img.channels() == 3 { rgb_to_gray(&img) } else { img })
}

fn image_paths(dir: &Path) -> Result<Vec<PathBuf>> {
    if dir.is_file() {
        return Ok(vec![dir.to_path_buf()]);
    }
    if !dir.is_dir() {
        bail!(usage(format!("{}: no such file or directory", dir.display())));
    }
    let mut paths = Vec::new();
    for seq in sequence_dirs(dir, vsrkit::loader::DEFAULT_PATTERN)? {
        paths.extend(seq.files.iter().map(|f| seq.dir.join(f)));
    }
    Ok(paths)
}

/// Optionally fits a pristine model from `fit`, then scores every image under `input`.
pub fn niqe(model_path: &Path, input: Option<&Path>, fit: Option<&Path>, patch_size: Option<usize>, out: &mut impl Write) -> Result<()> {
    let model = match fit {
        Some(dir) => {
            let params = NiqeParams { patch_size: patch_size.unwrap_or(NiqeParams::default().patch_size), ..NiqeParams::default() };
            params.validate().map_err(|e| usage(e.to_string()))?;
            let images = image_paths(dir)?.iter().map(|p| read_gray(p)).collect::<Result<Vec<_>>>()?;
            let model = fit_pristine(&images, &params).context("fitting pristine model")?;
            model.save(model_path)?;
            writeln!(out, "model path={} images={} patch_size={}", model_path.display(), images.len(), model.patch_size)?;
            model
        }
        None => NiqeModel::load(model_path).with_context(|| format!("loading {}", model_path.display()))?,
    };
    if let Some(input) = input {
        for path in image_paths(input)? {
            let score = niqe_score(&read_gray(&path)?, &model).with_context(|| format!("scoring {}", path.display()))?;
            writeln!(out, "{}, {score:.6}", path.display())?;
        }
    } else if fit.is_none() {
        bail!(usage("niqe: nothing to do; pass --in to score or --fit to build a model"));
    }
    Ok(())
}

pub fn plan(budget: usize, records: bool, out: &mut impl Write) -> Result<()> {
    if budget == 0 {
        bail!(usage("--budget must be positive"));
    }
    let plans = budget_plans(budget);
    if records {
        for p in &plans {
            let stoch = p.stochastic_files.map_or("-".to_string(), |f| f.to_string());
            writeln!(out, "plan batch={} length={} conventional_files={} stochastic_files={stoch}", p.batch, p.length, p.conventional_files)?;
        }
        return Ok(());
    }
    writeln!(out, "{:>6} {:>6} {:>14} {:>14}", "batch", "length", "files(conv)", "files(stoch)")?;
    for p in &plans {
        let stoch = p.stochastic_files.map_or("-".to_string(), |f| f.to_string());
        writeln!(out, "{:>6} {:>6} {:>14} {:>14}", p.batch, p.length, p.conventional_files, stoch)?;
    }
    Ok(())
}
