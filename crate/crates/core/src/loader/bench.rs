use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use crate::degrade::{apply_chain, VideoBackend, CHAIN_SCALE};
use crate::imgcore::FrameSequence;
use crate::rng::KeyedRng;
use crate::schedule::{realize_timeline, ParamSpace, WalkSpec};

use super::{crop_patch, load_with, LoaderError, LoaderStats, Scheme, SequenceSpec, DEFAULT_PATTERN};

/// Settings for [`benchmark_io`].
#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    /// Directory holding one sub-directory of frames per sequence.
    pub corpus: PathBuf,
    pub pattern: String,
    pub scheme: Scheme,
    pub length: usize,
    pub iterations: usize,
    /// Sleep added before every file read.
    pub latency: Duration,
    /// Low-resolution patch side; the ground-truth crop is `CHAIN_SCALE` times larger.
    pub patch_size: usize,
    pub seed: u64,
}

impl BenchConfig {
    pub fn new(corpus: impl Into<PathBuf>, scheme: Scheme, length: usize, iterations: usize) -> Self {
        Self {
            corpus: corpus.into(),
            pattern: DEFAULT_PATTERN.to_string(),
            scheme,
            length,
            iterations,
            latency: Duration::ZERO,
            patch_size: 16,
            seed: 0,
        }
    }
}

/// Aggregate of a benchmark run; `total` sums every iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub scheme: Scheme,
    pub length: usize,
    pub iterations: usize,
    pub latency: Duration,
    pub total: LoaderStats,
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

impl BenchReport {
    pub fn mean(&self, d: Duration) -> Duration {
        d / self.iterations as u32
    }

    pub fn files_per_iteration(&self) -> f64 {
        self.total.files_read as f64 / self.iterations as f64
    }

    pub fn mean_read(&self) -> Duration {
        self.mean(self.total.read)
    }

    pub fn mean_wall(&self) -> Duration {
        self.mean(self.total.wall)
    }

    /// Human-readable table, per-iteration means.
    pub fn to_text(&self) -> String {
        let t = &self.total;
        let mut s = String::new();
        let _ = writeln!(s, "scheme        {}", self.scheme.name());
        let _ = writeln!(s, "length        {}", self.length);
        let _ = writeln!(s, "iterations    {}", self.iterations);
        let _ = writeln!(s, "latency       {:.3} ms/file", ms(self.latency));
        let _ = writeln!(s, "files         {:.1} /iter", self.files_per_iteration());
        let _ = writeln!(s, "bytes         {:.0} /iter", t.bytes_read as f64 / self.iterations as f64);
        for (name, d) in [("read", t.read), ("decode", t.decode), ("crop", t.crop), ("degrade", t.degrade), ("wall", t.wall)] {
            let _ = writeln!(s, "{name:<13} {:.3} ms/iter", ms(self.mean(d)));
        }
        s
    }

    /// One machine-readable line of `key=value` fields.
    pub fn to_record(&self) -> String {
        let t = &self.total;
        format!(
            "loadbench scheme={} length={} iterations={} latency_ms={:.3} files_per_iter={} bytes_per_iter={} \
             read_ms={:.3} decode_ms={:.3} crop_ms={:.3} degrade_ms={:.3} wall_ms={:.3}",
            self.scheme.name(),
            self.length,
            self.iterations,
            ms(self.latency),
            self.files_per_iteration(),
            t.bytes_read as f64 / self.iterations as f64,
            ms(self.mean(t.read)),
            ms(self.mean(t.decode)),
            ms(self.mean(t.crop)),
            ms(self.mean(t.degrade)),
            ms(self.mean(t.wall)),
        )
    }
}

fn sequence_dirs(corpus: &PathBuf) -> Result<Vec<PathBuf>, LoaderError> {
    let list = |source| LoaderError::List { dir: corpus.clone(), source };
    let mut dirs = Vec::new();
    for e in std::fs::read_dir(corpus).map_err(list)? {
        let p = e.map_err(list)?.path();
        if p.is_dir() {
            dirs.push(p);
        }
    }
    dirs.sort();
    if dirs.is_empty() {
        return Err(LoaderError::EmptyCorpus(corpus.clone()));
    }
    Ok(dirs)
}

/// Runs read, decode, crop and degradation end to end for `iterations`
/// sequences, cycling through the corpus. Every iteration degrades with the
/// same pre-drawn timeline so only the loading scheme varies between runs.
pub fn benchmark_io(cfg: &BenchConfig) -> Result<BenchReport, LoaderError> {
    if cfg.iterations == 0 {
        return Err(LoaderError::NoIterations);
    }
    let dirs = sequence_dirs(&cfg.corpus)?;
    let timeline = realize_timeline(cfg.length, &WalkSpec::new(ParamSpace::default(), cfg.seed), 0);
    let keyed = KeyedRng::new(cfg.seed);
    let mut total = LoaderStats::default();
    for it in 0..cfg.iterations {
        let t = Instant::now();
        let spec = SequenceSpec {
            dir: dirs[it % dirs.len()].clone(),
            pattern: cfg.pattern.clone(),
            length: cfg.length,
            patch_size: cfg.patch_size,
            scheme: cfg.scheme,
            seed: cfg.seed.wrapping_add(it as u64),
            start: None,
        };
        let loaded = load_with::<f32>(&spec, cfg.latency)?;
        let mut stats = loaded.stats;

        let tc = Instant::now();
        let (h, w, _) = loaded.frames.dims();
        let side = (cfg.patch_size * CHAIN_SCALE).min(h).min(w) / CHAIN_SCALE * CHAIN_SCALE;
        let hr: FrameSequence<f32> = crop_patch(&loaded.frames, side, &mut keyed.stream(it as u64, 0, "crop"))?;
        stats.crop += tc.elapsed();

        let td = Instant::now();
        apply_chain(&hr, &timeline, &keyed, it as u64, VideoBackend::Surrogate)?;
        stats.degrade += td.elapsed();

        stats.wall = t.elapsed();
        total += stats;
    }
    Ok(BenchReport { scheme: cfg.scheme, length: cfg.length, iterations: cfg.iterations, latency: cfg.latency, total })
}

/// One batch-size / sequence-length split of a frame budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchPlan {
    pub batch: usize,
    pub length: usize,
    pub conventional_files: usize,
    /// `None` when the length is odd and the half-load scheme does not apply.
    pub stochastic_files: Option<usize>,
}

impl BatchPlan {
    pub fn product(&self) -> usize {
        self.batch * self.length
    }
}

/// Every `(B, L)` with `B * L = budget`, ordered by increasing `L`, annotated
/// with files read per iteration under both schemes. A zero budget has no plans.
pub fn budget_plans(budget: usize) -> Vec<BatchPlan> {
    (1..=budget)
        .filter(|l| budget % l == 0)
        .map(|length| {
            let batch = budget / length;
            BatchPlan {
                batch,
                length,
                conventional_files: batch * Scheme::Conventional.files_for(length),
                stochastic_files: (length % 2 == 0).then(|| batch * Scheme::Stochastic.files_for(length)),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::write_sequence_corpus;

    #[test]
    fn budget_480_contains_standard_splits() {
        let plans = budget_plans(480);
        for (b, l) in [(48, 10), (24, 20), (16, 30)] {
            let p = plans.iter().find(|p| p.batch == b && p.length == l).unwrap();
            assert_eq!(p.stochastic_files, Some(p.conventional_files / 2));
        }
        assert!(plans.iter().all(|p| p.product() == 480));
        assert_eq!(plans.len(), 24);
    }

    #[test]
    fn budget_edge_cases() {
        let one = budget_plans(1);
        assert_eq!(one.len(), 1);
        assert_eq!((one[0].batch, one[0].length, one[0].stochastic_files), (1, 1, None));
        assert!(budget_plans(0).is_empty());
    }

    #[test]
    fn benchmark_counts_files() {
        let dir = tempfile::tempdir().unwrap();
        write_sequence_corpus(dir.path(), 2, 12, 32, 32, 4).unwrap();
        let conv = benchmark_io(&BenchConfig::new(dir.path(), Scheme::Conventional, 8, 3)).unwrap();
        let stoch = benchmark_io(&BenchConfig::new(dir.path(), Scheme::Stochastic, 8, 3)).unwrap();
        assert_eq!(conv.total.files_read, 24);
        assert_eq!(stoch.total.files_read, 12);
        assert!(conv.to_record().starts_with("loadbench scheme=conventional length=8 iterations=3"));
        assert!(stoch.to_text().contains("files         4.0 /iter"));
    }

    #[test]
    fn benchmark_rejects_empty_corpus() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            benchmark_io(&BenchConfig::new(dir.path(), Scheme::Conventional, 2, 1)),
            Err(LoaderError::EmptyCorpus(_))
        ));
    }
}
