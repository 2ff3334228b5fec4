//! Client for an external video encoder driven by shell command templates.
//!
//! Encode placeholders: `{frames_dir}`, `{pattern}`, `{codec}`, `{bitrate}`,
//! `{out_file}`. Decode placeholders: `{in_file}`, `{frames_dir}`,
//! `{pattern}`. Frames are exchanged as 8-bit PNGs named by `pattern`
//! (printf-style `%0Nd`, numbered from 1); the decoder must write exactly as
//! many frames as it was given.

use std::path::Path;
use std::process::Command;

use serde::{Deserialize, Serialize};

use crate::imgcore::io::{read_png, write_png, BitDepth};
use crate::imgcore::FrameSequence;
use crate::scalar::Real;

use super::{CodecName, DegradeError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderTemplate {
    pub encode: String,
    pub decode: String,
    pub pattern: String,
    /// Extension of the intermediate encoded file.
    pub container: String,
}

impl Default for EncoderTemplate {
    fn default() -> Self {
        Self {
            encode: "ffmpeg -y -loglevel error -framerate 25 -i {frames_dir}/{pattern} -c:v {codec} -b:v {bitrate} -pix_fmt yuv420p {out_file}".into(),
            decode: "ffmpeg -y -loglevel error -i {in_file} {frames_dir}/{pattern}".into(),
            pattern: "%08d.png".into(),
            container: "mp4".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternalEncoder {
    template: EncoderTemplate,
}

/// Expands `%d` / `%0Nd` in a frame-name pattern.
pub fn format_frame_name(pattern: &str, index: usize) -> String {
    let Some(start) = pattern.find('%') else {
        return format!("{pattern}{index}");
    };
    let rest = &pattern[start + 1..];
    let Some(d) = rest.find('d') else {
        return format!("{pattern}{index}");
    };
    let spec = &rest[..d];
    let width: usize = spec.trim_start_matches('0').parse().unwrap_or(0);
    let body = if spec.starts_with('0') { format!("{index:0width$}") } else { format!("{index:width$}") };
    format!("{}{}{}", &pattern[..start], body, &rest[d + 1..])
}

fn quote(path: &Path) -> String {
    format!("'{}'", path.display().to_string().replace('\'', r"'\''"))
}

impl ExternalEncoder {
    pub fn new(template: EncoderTemplate) -> Self {
        Self { template }
    }

    pub fn template(&self) -> &EncoderTemplate {
        &self.template
    }

    fn run(stage: &'static str, cmd: &str) -> Result<(), DegradeError> {
        log::debug!("external encoder {stage}: {cmd}");
        let output = Command::new("sh").arg("-c").arg(cmd).output()?;
        if !output.status.success() {
            return Err(DegradeError::Encoder {
                stage,
                status: output.status.code(),
                stderr: String::from_utf8_lossy(&output.stderr).trim().to_string(),
            });
        }
        Ok(())
    }

    /// Encodes the frames at `bitrate` with `codec`, then decodes them back.
    pub fn round_trip<T: Real>(
        &self,
        seq: &FrameSequence<T>,
        codec: CodecName,
        bitrate: u32,
    ) -> Result<FrameSequence<T>, DegradeError> {
        let work = tempfile::tempdir()?;
        let in_dir = work.path().join("in");
        let out_dir = work.path().join("out");
        std::fs::create_dir_all(&in_dir)?;
        std::fs::create_dir_all(&out_dir)?;
        let encoded = work.path().join(format!("encoded.{}", self.template.container));

        for (i, frame) in seq.frames().iter().enumerate() {
            write_png(frame, in_dir.join(format_frame_name(&self.template.pattern, i + 1)), BitDepth::Eight)?;
        }
        let encode = self
            .template
            .encode
            .replace("{frames_dir}", &quote(&in_dir))
            .replace("{pattern}", &self.template.pattern)
            .replace("{codec}", codec.name())
            .replace("{bitrate}", &bitrate.to_string())
            .replace("{out_file}", &quote(&encoded));
        Self::run("encode", &encode)?;

        let decode = self
            .template
            .decode
            .replace("{in_file}", &quote(&encoded))
            .replace("{frames_dir}", &quote(&out_dir))
            .replace("{pattern}", &self.template.pattern);
        Self::run("decode", &decode)?;

        let mut names: Vec<_> = std::fs::read_dir(&out_dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("png")))
            .collect();
        names.sort();
        if names.len() != seq.len() {
            return Err(DegradeError::FrameCount { expected: seq.len(), actual: names.len() });
        }
        let frames = names.iter().map(read_png).collect::<Result<Vec<_>, _>>()?;
        let out = FrameSequence::new(frames)?;
        if out.dims() != seq.dims() {
            return Err(crate::imgcore::ImageError::DimensionMismatch { left: seq.dims(), right: out.dims() }.into());
        }
        Ok(out)
    }
}
