//! Plain-text timeline record, version 1.
//!
//! ```text
//! vsrkit-timeline 1
//! frames <L>
//! bound <component> <min> <max>            one line per component
//! discrete kernel_size=<k1>,<k2> resize_mode=<m1>,<m2> noise=<gaussian|poisson>,<..> gray_noise=<0|1>,<..> codec=<name>
//! origin <component>=<tick> ...            slot 0 on the 2^52-step lattice
//! slot 0 <component>=<value> ...
//! step 1 <component>=<tick increment> ...
//! slot 1 <component>=<value> ...
//! ```
//!
//! Only `bound`, `discrete`, `origin` and `step` lines are authoritative; the
//! `slot` lines are for auditing and are checked against the replayed walk
//! when a record is parsed.

use std::fmt::Write as _;

use thiserror::Error;

use super::params::{Bounds, Component, DiscreteChoices, ParamVector, NUM_COMPONENTS};
use super::walk::{replay, DegradationTimeline};

pub const RECORD_MAGIC: &str = "vsrkit-timeline";
pub const RECORD_VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum RecordError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unsupported timeline record version {0}")]
    Version(u32),
    #[error("missing '{0}' section")]
    Missing(&'static str),
    #[error("slot {slot} {component} is {recorded} in the record but replays to {replayed}")]
    ReplayMismatch {
        slot: usize,
        component: &'static str,
        recorded: f64,
        replayed: f64,
    },
}

fn pair<T: Copy>(v: [T; 2], f: impl Fn(T) -> String) -> String {
    format!("{},{}", f(v[0]), f(v[1]))
}

impl DegradationTimeline {
    pub fn to_record(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{RECORD_MAGIC} {RECORD_VERSION}").unwrap();
        writeln!(s, "frames {}", self.len()).unwrap();
        for c in Component::ALL {
            let b = self.bounds[c.index()];
            writeln!(s, "bound {} {:?} {:?}", c.name(), b.min, b.max).unwrap();
        }
        let d = self.slots[0].discrete();
        writeln!(
            s,
            "discrete kernel_size={} resize_mode={} noise={} gray_noise={} codec={}",
            pair(d.kernel_size, |k| k.to_string()),
            pair(d.resize_mode, |m| m.name().to_string()),
            pair(d.gaussian_noise, |g| if g { "gaussian" } else { "poisson" }.to_string()),
            pair(d.gray_noise, |g| (g as u8).to_string()),
            d.codec.name()
        )
        .unwrap();
        let fields = |vals: Vec<String>| {
            Component::ALL.iter().zip(vals).map(|(c, v)| format!("{}={}", c.name(), v)).collect::<Vec<_>>().join(" ")
        };
        writeln!(s, "origin {}", fields(self.slots[0].ticks().iter().map(|t| t.to_string()).collect())).unwrap();
        for (i, p) in self.slots.iter().enumerate() {
            if i > 0 {
                let r = &self.increments[i - 1];
                writeln!(s, "step {i} {}", fields(r.iter().map(|t| t.to_string()).collect())).unwrap();
            }
            writeln!(s, "slot {i} {}", fields(p.values().iter().map(|v| format!("{v:?}")).collect())).unwrap();
        }
        s
    }

    pub fn from_record(text: &str) -> Result<Self, RecordError> {
        let mut frames = None;
        let mut bounds: [Option<Bounds>; NUM_COMPONENTS] = [None; NUM_COMPONENTS];
        let mut discrete = None;
        let mut origin = None;
        let mut steps: Vec<[i64; NUM_COMPONENTS]> = Vec::new();
        let mut recorded: Vec<(usize, usize, [f64; NUM_COMPONENTS])> = Vec::new();
        let mut saw_header = false;

        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let err = |message: String| RecordError::Syntax { line, message };
            let raw = raw.trim();
            if raw.is_empty() || raw.starts_with('#') {
                continue;
            }
            let mut words = raw.split_whitespace();
            let head = words.next().unwrap_or_default();
            if !saw_header {
                if head != RECORD_MAGIC {
                    return Err(err(format!("expected '{RECORD_MAGIC}' header")));
                }
                let v: u32 = words.next().and_then(|v| v.parse().ok()).ok_or_else(|| err("bad version".into()))?;
                if v != RECORD_VERSION {
                    return Err(RecordError::Version(v));
                }
                saw_header = true;
                continue;
            }
            match head {
                "frames" => {
                    frames = Some(words.next().and_then(|v| v.parse::<usize>().ok()).ok_or_else(|| err("bad frame count".into()))?);
                }
                "bound" => {
                    let name = words.next().ok_or_else(|| err("missing component".into()))?;
                    let c = Component::from_name(name).ok_or_else(|| err(format!("unknown component '{name}'")))?;
                    let min: f64 = words.next().and_then(|v| v.parse().ok()).ok_or_else(|| err("bad min".into()))?;
                    let max: f64 = words.next().and_then(|v| v.parse().ok()).ok_or_else(|| err("bad max".into()))?;
                    bounds[c.index()] = Some(Bounds::new(min, max));
                }
                "discrete" => discrete = Some(parse_discrete(words).map_err(err)?),
                "origin" => origin = Some(parse_fields(words, |v| v.parse::<i64>().ok()).map_err(err)?),
                "step" => {
                    let idx: usize = words.next().and_then(|v| v.parse().ok()).ok_or_else(|| err("bad step index".into()))?;
                    if idx != steps.len() + 1 {
                        return Err(err(format!("step {idx} out of order")));
                    }
                    steps.push(parse_fields(words, |v| v.parse::<i64>().ok()).map_err(err)?);
                }
                "slot" => {
                    let idx: usize = words.next().and_then(|v| v.parse().ok()).ok_or_else(|| err("bad slot index".into()))?;
                    recorded.push((line, idx, parse_fields(words, |v| v.parse::<f64>().ok()).map_err(err)?));
                }
                other => return Err(err(format!("unknown record '{other}'"))),
            }
        }
        if !saw_header {
            return Err(RecordError::Missing(RECORD_MAGIC));
        }
        let frames = frames.ok_or(RecordError::Missing("frames"))?;
        let mut b = [Bounds::new(0.0, 0.0); NUM_COMPONENTS];
        for c in Component::ALL {
            b[c.index()] = bounds[c.index()].ok_or(RecordError::Missing("bound"))?;
        }
        let discrete = discrete.ok_or(RecordError::Missing("discrete"))?;
        let origin = origin.ok_or(RecordError::Missing("origin"))?;
        if steps.len() + 1 != frames {
            return Err(RecordError::Syntax {
                line: 0,
                message: format!("{} steps recorded for {frames} frames", steps.len()),
            });
        }
        let p0 = ParamVector::from_ticks(origin, discrete, &b);
        let slots = replay(&p0, &steps, &b);
        for (line, idx, values) in recorded {
            let p = slots
                .get(idx)
                .ok_or_else(|| RecordError::Syntax { line, message: format!("slot {idx} beyond {frames} frames") })?;
            for c in Component::ALL {
                let (rec, rep) = (values[c.index()], p.value(c));
                if rec.to_bits() != rep.to_bits() {
                    return Err(RecordError::ReplayMismatch { slot: idx, component: c.name(), recorded: rec, replayed: rep });
                }
            }
        }
        Ok(DegradationTimeline { bounds: b, slots, increments: steps })
    }
}

fn parse_fields<'a, T: Copy + Default>(
    words: impl Iterator<Item = &'a str>,
    parse: impl Fn(&str) -> Option<T>,
) -> Result<[T; NUM_COMPONENTS], String> {
    let mut out = [None; NUM_COMPONENTS];
    for w in words {
        let (k, v) = w.split_once('=').ok_or_else(|| format!("expected name=value, got '{w}'"))?;
        let c = Component::from_name(k).ok_or_else(|| format!("unknown component '{k}'"))?;
        out[c.index()] = Some(parse(v).ok_or_else(|| format!("bad value for {k}: '{v}'"))?);
    }
    let mut res = [T::default(); NUM_COMPONENTS];
    for c in Component::ALL {
        res[c.index()] = out[c.index()].ok_or_else(|| format!("missing component {}", c.name()))?;
    }
    Ok(res)
}

fn parse_discrete<'a>(words: impl Iterator<Item = &'a str>) -> Result<DiscreteChoices, String> {
    fn two<T>(v: &str, f: impl Fn(&str) -> Option<T>) -> Result<[T; 2], String> {
        let (a, b) = v.split_once(',').ok_or_else(|| format!("expected two values, got '{v}'"))?;
        Ok([f(a).ok_or_else(|| format!("bad value '{a}'"))?, f(b).ok_or_else(|| format!("bad value '{b}'"))?])
    }
    let (mut kernel, mut mode, mut noise, mut gray, mut codec) = (None, None, None, None, None);
    for w in words {
        let (k, v) = w.split_once('=').ok_or_else(|| format!("expected name=value, got '{w}'"))?;
        match k {
            "kernel_size" => kernel = Some(two(v, |s| s.parse().ok())?),
            "resize_mode" => mode = Some(two(v, |s| s.parse().ok())?),
            "noise" => {
                noise = Some(two(v, |s| match s {
                    "gaussian" => Some(true),
                    "poisson" => Some(false),
                    _ => None,
                })?)
            }
            "gray_noise" => gray = Some(two(v, |s| match s {
                "0" => Some(false),
                "1" => Some(true),
                _ => None,
            })?),
            "codec" => codec = Some(v.parse().map_err(|e| format!("{e}"))?),
            other => return Err(format!("unknown discrete field '{other}'")),
        }
    }
    Ok(DiscreteChoices {
        kernel_size: kernel.ok_or("missing kernel_size")?,
        resize_mode: mode.ok_or("missing resize_mode")?,
        gaussian_noise: noise.ok_or("missing noise")?,
        gray_noise: gray.ok_or("missing gray_noise")?,
        codec: codec.ok_or("missing codec")?,
    })
}
