//! Sequence ingestion: conventional and half-load loading schemes, shared-window
//! patch cropping, an I/O benchmark and batch-size planning.

mod bench;
mod prefetch;

use std::ops::AddAssign;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::Rng;
use thiserror::Error;

use crate::degrade::{format_frame_name, DegradeError};
use crate::imgcore::io::{decode_png, PngError};
use crate::imgcore::{FrameSequence, ImageError};
use crate::rng::KeyedRng;
use crate::scalar::Real;

pub use bench::{benchmark_io, budget_plans, BatchPlan, BenchConfig, BenchReport};
pub use prefetch::{prefetch, Prefetcher};

pub const DEFAULT_PATTERN: &str = "%08d.png";
/// Side of the low-resolution training patch.
pub const DEFAULT_PATCH_SIZE: usize = 64;

#[derive(Debug, Error)]
pub enum LoaderError {
    #[error("sequence length must be at least 1")]
    EmptyLength,
    #[error("the stochastic scheme needs an even length, got {0}")]
    OddLength(usize),
    #[error("frame {index} is missing from {dir}")]
    MissingFrame { dir: PathBuf, index: u64 },
    #[error("cannot list {dir}: {source}")]
    List {
        dir: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Decode(#[from] PngError),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error("patch {size} exceeds frame {height}x{width}")]
    PatchTooLarge { size: usize, height: usize, width: usize },
    #[error(transparent)]
    Degrade(#[from] DegradeError),
    #[error("corpus at {0} has no sequence directories")]
    EmptyCorpus(PathBuf),
    #[error("unknown scheme '{0}' (expected conventional or stochastic)")]
    UnknownScheme(String),
    #[error("iterations must be at least 1")]
    NoIterations,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Reads all `L` frames.
    Conventional,
    /// Reads `L / 2` frames and appends their temporal reversal.
    Stochastic,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Conventional => "conventional",
            Scheme::Stochastic => "stochastic",
        }
    }

    /// Files read for a sequence of `length` frames.
    pub fn files_for(self, length: usize) -> usize {
        match self {
            Scheme::Conventional => length,
            Scheme::Stochastic => length / 2,
        }
    }
}

impl FromStr for Scheme {
    type Err = LoaderError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "conventional" => Ok(Scheme::Conventional),
            "stochastic" => Ok(Scheme::Stochastic),
            _ => Err(LoaderError::UnknownScheme(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceSpec {
    pub dir: PathBuf,
    /// printf-style frame name, e.g. `%08d.png`.
    pub pattern: String,
    pub length: usize,
    pub patch_size: usize,
    pub scheme: Scheme,
    pub seed: u64,
    /// First frame number; drawn from the seed when `None`.
    pub start: Option<u64>,
}

impl SequenceSpec {
    pub fn new(dir: impl Into<PathBuf>, length: usize, scheme: Scheme, seed: u64) -> Self {
        Self {
            dir: dir.into(),
            pattern: DEFAULT_PATTERN.to_string(),
            length,
            patch_size: DEFAULT_PATCH_SIZE,
            scheme,
            seed,
            start: None,
        }
    }

    pub fn validate(&self) -> Result<(), LoaderError> {
        if self.length == 0 {
            return Err(LoaderError::EmptyLength);
        }
        if self.scheme == Scheme::Stochastic && self.length % 2 != 0 {
            return Err(LoaderError::OddLength(self.length));
        }
        Ok(())
    }
}

/// Per-phase costs; times are totals over whatever was accumulated.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LoaderStats {
    pub files_read: usize,
    pub bytes_read: u64,
    pub read: Duration,
    pub decode: Duration,
    pub degrade: Duration,
    pub crop: Duration,
    pub wall: Duration,
}

impl AddAssign for LoaderStats {
    fn add_assign(&mut self, o: Self) {
        self.files_read += o.files_read;
        self.bytes_read += o.bytes_read;
        self.read += o.read;
        self.decode += o.decode;
        self.degrade += o.degrade;
        self.crop += o.crop;
        self.wall += o.wall;
    }
}

/// A loaded sequence with the frame numbers behind each slot.
#[derive(Debug, Clone)]
pub struct LoadedSequence<T: Real> {
    pub frames: FrameSequence<T>,
    pub numbers: Vec<u64>,
    pub stats: LoaderStats,
}

fn parse_frame_number(pattern: &str, name: &str) -> Option<u64> {
    let start = pattern.find('%')?;
    let d = start + 1 + pattern[start + 1..].find('d')?;
    let (prefix, suffix) = (&pattern[..start], &pattern[d + 1..]);
    let body = name.strip_prefix(prefix)?.strip_suffix(suffix)?.trim_start();
    if body.is_empty() || !body.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    body.parse().ok()
}

/// Sorted frame numbers present in `dir` for `pattern`.
pub fn list_frames(dir: &Path, pattern: &str) -> Result<Vec<u64>, LoaderError> {
    let entries = std::fs::read_dir(dir).map_err(|source| LoaderError::List { dir: dir.to_path_buf(), source })?;
    let mut out = Vec::new();
    for e in entries {
        let e = e.map_err(|source| LoaderError::List { dir: dir.to_path_buf(), source })?;
        if let Some(n) = e.file_name().to_str().and_then(|s| parse_frame_number(pattern, s)) {
            out.push(n);
        }
    }
    out.sort_unstable();
    Ok(out)
}

fn choose_start(spec: &SequenceSpec, reads: usize) -> Result<u64, LoaderError> {
    if let Some(s) = spec.start {
        return Ok(s);
    }
    let numbers = list_frames(&spec.dir, &spec.pattern)?;
    let Some(&first) = numbers.first() else {
        return Err(LoaderError::MissingFrame { dir: spec.dir.clone(), index: 0 });
    };
    if numbers.len() < reads {
        return Ok(first);
    }
    let mut rng = KeyedRng::new(spec.seed).stream(0, 0, "window");
    Ok(numbers[rng.gen_range(0..=numbers.len() - reads)])
}

/// Reads `count` consecutive frames from `start`, sleeping `latency` before each file.
pub(crate) fn read_frames<T: Real>(
    spec: &SequenceSpec,
    start: u64,
    count: usize,
    latency: Duration,
) -> Result<(Vec<crate::imgcore::Image<T>>, LoaderStats), LoaderError> {
    let mut stats = LoaderStats::default();
    let mut frames = Vec::with_capacity(count);
    for k in 0..count as u64 {
        let index = start + k;
        let path = spec.dir.join(format_frame_name(&spec.pattern, index as usize));
        let t = Instant::now();
        if !latency.is_zero() {
            std::thread::sleep(latency);
        }
        let bytes = match std::fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(LoaderError::MissingFrame { dir: spec.dir.clone(), index })
            }
            Err(source) => return Err(LoaderError::Read { path, source }),
        };
        stats.read += t.elapsed();
        stats.files_read += 1;
        stats.bytes_read += bytes.len() as u64;
        let t = Instant::now();
        frames.push(decode_png(&bytes)?);
        stats.decode += t.elapsed();
    }
    Ok((frames, stats))
}

pub(crate) fn load_with<T: Real>(spec: &SequenceSpec, latency: Duration) -> Result<LoadedSequence<T>, LoaderError> {
    let t = Instant::now();
    spec.validate()?;
    let reads = spec.scheme.files_for(spec.length);
    let start = choose_start(spec, reads)?;
    let (mut frames, mut stats) = read_frames(spec, start, reads, latency)?;
    let mut numbers: Vec<u64> = (start..start + reads as u64).collect();
    if spec.scheme == Scheme::Stochastic {
        let mirrored: Vec<_> = frames.iter().rev().cloned().collect();
        frames.extend(mirrored);
        numbers.extend((start..start + reads as u64).rev());
    }
    let frames = FrameSequence::new(frames)?;
    stats.wall = t.elapsed();
    Ok(LoadedSequence { frames, numbers, stats })
}

/// Reads `L` consecutive frames.
pub fn load_conventional<T: Real>(spec: &SequenceSpec) -> Result<LoadedSequence<T>, LoaderError> {
    load_with(&SequenceSpec { scheme: Scheme::Conventional, ..spec.clone() }, Duration::ZERO)
}

/// Reads `L / 2` consecutive frames and appends them in reverse order, giving
/// the palindrome `f1 .. fn fn .. f1` of length `L`.
pub fn load_stochastic<T: Real>(spec: &SequenceSpec) -> Result<LoadedSequence<T>, LoaderError> {
    load_with(&SequenceSpec { scheme: Scheme::Stochastic, ..spec.clone() }, Duration::ZERO)
}

/// Loads with the scheme named in `spec`.
pub fn load_sequence<T: Real>(spec: &SequenceSpec) -> Result<LoadedSequence<T>, LoaderError> {
    load_with(spec, Duration::ZERO)
}

/// Crops the same random `size x size` window from every frame.
pub fn crop_patch<T: Real, R: Rng + ?Sized>(
    seq: &FrameSequence<T>,
    size: usize,
    rng: &mut R,
) -> Result<FrameSequence<T>, LoaderError> {
    let (h, w, _) = seq.dims();
    if size == 0 || size > h || size > w {
        return Err(LoaderError::PatchTooLarge { size, height: h, width: w });
    }
    let top = rng.gen_range(0..=h - size);
    let left = rng.gen_range(0..=w - size);
    let frames = seq.frames().iter().map(|f| f.crop(top, left, size, size)).collect::<Result<Vec<_>, _>>()?;
    Ok(FrameSequence::new(frames)?)
}
