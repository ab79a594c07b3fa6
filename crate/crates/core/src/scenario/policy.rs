//! Trained policy records.
//!
//! A record is a flat, line-oriented text file:
//!
//! ```text
//! vms-ldr-policy 1
//! strategy <none|genuine|ldr> <default|ldr>
//! links <link count>
//! delta <history depth>
//! vms ldr                          (only when the sign rule was trained)
//! thresholds <m1> <m2> <m3> <m4>
//! coefficients <n> <a_1> ... <a_n>
//! signal ldr                       (only when the signal rule was trained)
//! g_min <minimum green>
//! intersections <k>
//! phases <p> followed by p lines: row <n> <b_1> ... <b_n>   (k times)
//! end
//! ```
//!
//! Numbers use the shortest decimal form that parses back to the same
//! `f64`, so records round-trip exactly.

use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::LdrSignalPolicy;
use crate::vms::LdrVmsPolicy;

pub const POLICY_MAGIC: &str = "vms-ldr-policy";
pub const POLICY_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VmsMode {
    None,
    Genuine,
    Ldr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignalMode {
    Default,
    Ldr,
}

impl VmsMode {
    pub fn as_str(self) -> &'static str {
        match self {
            VmsMode::None => "none",
            VmsMode::Genuine => "genuine",
            VmsMode::Ldr => "ldr",
        }
    }
}

impl SignalMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SignalMode::Default => "default",
            SignalMode::Ldr => "ldr",
        }
    }
}

impl FromStr for VmsMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(VmsMode::None),
            "genuine" => Ok(VmsMode::Genuine),
            "ldr" => Ok(VmsMode::Ldr),
            _ => Err(Error::Data(format!("unknown VMS mode {s:?}"))),
        }
    }
}

impl FromStr for SignalMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "default" => Ok(SignalMode::Default),
            "ldr" => Ok(SignalMode::Ldr),
            _ => Err(Error::Data(format!("unknown signal mode {s:?}"))),
        }
    }
}

/// A VMS strategy paired with a signal strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Strategy {
    pub vms: VmsMode,
    pub signal: SignalMode,
}

impl Strategy {
    pub const fn new(vms: VmsMode, signal: SignalMode) -> Self {
        Self { vms, signal }
    }

    /// The four combinations compared in the study, in table order.
    pub const STUDY: [Strategy; 4] = [
        Strategy::new(VmsMode::Genuine, SignalMode::Default),
        Strategy::new(VmsMode::Genuine, SignalMode::Ldr),
        Strategy::new(VmsMode::Ldr, SignalMode::Default),
        Strategy::new(VmsMode::Ldr, SignalMode::Ldr),
    ];

    pub fn is_trainable(self) -> bool {
        self.vms == VmsMode::Ldr || self.signal == SignalMode::Ldr
    }

    /// File-name friendly label, e.g. `ldr-default`.
    pub fn tag(self) -> String {
        format!("{}-{}", self.vms.as_str(), self.signal.as_str())
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let signal = match self.signal {
            SignalMode::Default => "default signal",
            SignalMode::Ldr => "coordinated signal",
        };
        let vms = match self.vms {
            VmsMode::None => "no VMS",
            VmsMode::Genuine => "genuine VMS",
            VmsMode::Ldr => "LDR VMS",
        };
        write!(f, "{vms} + {signal}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyRecord {
    pub strategy: Strategy,
    pub link_count: usize,
    pub delta: usize,
    pub vms: Option<LdrVmsPolicy>,
    pub signal: Option<LdrSignalPolicy>,
}

impl PolicyRecord {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{POLICY_MAGIC} {POLICY_VERSION}");
        let _ = writeln!(out, "strategy {} {}", self.strategy.vms.as_str(), self.strategy.signal.as_str());
        let _ = writeln!(out, "links {}", self.link_count);
        let _ = writeln!(out, "delta {}", self.delta);
        if let Some(vms) = &self.vms {
            out.push_str("vms ldr\n");
            let _ = writeln!(out, "thresholds {}", join(&vms.thresholds));
            let _ = writeln!(out, "coefficients {} {}", vms.coefficients.len(), join(&vms.coefficients));
        }
        if let Some(sig) = &self.signal {
            out.push_str("signal ldr\n");
            let _ = writeln!(out, "g_min {}", sig.g_min);
            let _ = writeln!(out, "intersections {}", sig.matrices.len());
            for m in &sig.matrices {
                let _ = writeln!(out, "phases {}", m.len());
                for row in m {
                    let _ = writeln!(out, "row {} {}", row.len(), join(row));
                }
            }
        }
        out.push_str("end\n");
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut p = Lines::new(text);
        let header = p.expect_key(POLICY_MAGIC)?;
        let version: u32 = p.number(&header, 0)?;
        if version != POLICY_VERSION {
            return Err(Error::Version { found: version, expected: POLICY_VERSION });
        }
        let strategy = p.expect_key("strategy")?;
        let vms_mode: VmsMode = p.field(&strategy, 0)?.parse()?;
        let signal_mode: SignalMode = p.field(&strategy, 1)?.parse()?;
        let links = p.expect_key("links")?;
        let link_count: usize = p.number(&links, 0)?;
        let delta_line = p.expect_key("delta")?;
        let delta: usize = p.number(&delta_line, 0)?;
        let width = link_count * delta;

        let mut vms = None;
        let mut signal = None;
        loop {
            let line = p.next_line()?;
            match line.key {
                "vms" => {
                    let th = p.expect_key("thresholds")?;
                    let mut thresholds = [0.0; 4];
                    for (i, m) in thresholds.iter_mut().enumerate() {
                        *m = p.number(&th, i)?;
                    }
                    if th.fields.len() != 4 {
                        return Err(p.error(&th, "thresholds expects 4 values"));
                    }
                    let co = p.expect_key("coefficients")?;
                    let coefficients = p.counted(&co, width)?;
                    vms = Some(
                        LdrVmsPolicy::new(delta, thresholds, coefficients).map_err(|e| p.error(&co, &e.to_string()))?,
                    );
                }
                "signal" => {
                    let g = p.expect_key("g_min")?;
                    let g_min: f64 = p.number(&g, 0)?;
                    let k_line = p.expect_key("intersections")?;
                    let k: usize = p.number(&k_line, 0)?;
                    let mut matrices = Vec::with_capacity(k);
                    for _ in 0..k {
                        let ph = p.expect_key("phases")?;
                        let n: usize = p.number(&ph, 0)?;
                        let mut rows = Vec::with_capacity(n);
                        for _ in 0..n {
                            let row = p.expect_key("row")?;
                            rows.push(p.counted(&row, width)?);
                        }
                        matrices.push(rows);
                    }
                    signal = Some(
                        LdrSignalPolicy::new(delta, g_min, matrices).map_err(|e| p.error(&k_line, &e.to_string()))?,
                    );
                }
                "end" => break,
                other => return Err(p.error(&line, &format!("unexpected key {other:?}"))),
            }
        }
        let strategy = Strategy::new(vms_mode, signal_mode);
        if (vms_mode == VmsMode::Ldr) != vms.is_some() || (signal_mode == SignalMode::Ldr) != signal.is_some() {
            return Err(Error::Data(format!("policy record for {strategy} does not carry the matching rule segments")));
        }
        Ok(Self { strategy, link_count, delta, vms, signal })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

struct Line<'a> {
    key: &'a str,
    fields: Vec<&'a str>,
    offset: usize,
}

struct Lines<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Self { text, pos: 0 }
    }

    fn next_line(&mut self) -> Result<Line<'a>> {
        loop {
            if self.pos >= self.text.len() {
                return Err(Error::Parse { offset: self.pos, message: "unexpected end of policy record".into() });
            }
            let rest = &self.text[self.pos..];
            let end = rest.find('\n').map_or(rest.len(), |i| i + 1);
            let offset = self.pos;
            self.pos += end;
            let mut words = rest[..end].split_whitespace();
            if let Some(key) = words.next() {
                return Ok(Line { key, fields: words.collect(), offset });
            }
        }
    }

    fn expect_key(&mut self, key: &str) -> Result<Line<'a>> {
        let line = self.next_line()?;
        if line.key != key {
            return Err(self.error(&line, &format!("expected {key:?}, found {:?}", line.key)));
        }
        Ok(line)
    }

    fn error(&self, line: &Line<'_>, message: &str) -> Error {
        Error::Parse { offset: line.offset, message: message.to_string() }
    }

    fn field(&self, line: &Line<'a>, i: usize) -> Result<&'a str> {
        line.fields.get(i).copied().ok_or_else(|| self.error(line, &format!("{} is missing field {}", line.key, i + 1)))
    }

    fn number<T: FromStr>(&self, line: &Line<'a>, i: usize) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        let raw = self.field(line, i)?;
        raw.parse().map_err(|e| self.error(line, &format!("bad number {raw:?} in {}: {e}", line.key)))
    }

    /// `<n> v_1 ... v_n` with `n == expected`.
    fn counted(&self, line: &Line<'a>, expected: usize) -> Result<Vec<f64>> {
        let n: usize = self.number(line, 0)?;
        if n != expected || line.fields.len() != n + 1 {
            return Err(self.error(
                line,
                &format!("{} expects {expected} values, found {}", line.key, line.fields.len().saturating_sub(1)),
            ));
        }
        (1..=n).map(|i| self.number(line, i)).collect()
    }
}
