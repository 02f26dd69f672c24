//! Text persistence of parameter traces.
//!
//! ```text
//! # medusa-trace v1 theta1=1/7 theta2=1/3 status=converged
//! 1 6.6666666666666663e-1 0.0000000000000000e0 3.3333333333333331e-1 0.0000000000000000e0
//! ```
//!
//! Each line is `n Re(a) Im(a) Re(b) Im(b)` with 17 significant digits, which
//! round-trips every `f64` exactly.

use std::io::{self, BufRead, Write};

use num_complex::Complex64;
use thiserror::Error;

use crate::angles::RationalAngle;
use crate::medusa::{MapParams, MatingResult, Status};

const MAGIC: &str = "medusa-trace";
const VERSION: &str = "v1";

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("empty trace file")]
    Empty,
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub theta1: RationalAngle,
    pub theta2: RationalAngle,
    pub status: Status,
    /// `(a_n, b_n)` for `n = 1, 2, …`.
    pub params: Vec<MapParams>,
}

impl Trace {
    pub fn from_result(r: &MatingResult) -> Self {
        Trace {
            theta1: r.theta1,
            theta2: r.theta2,
            status: r.status,
            params: r.trace.clone(),
        }
    }

    pub fn write<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(
            w,
            "# {MAGIC} {VERSION} theta1={} theta2={} status={}",
            self.theta1, self.theta2, self.status
        )?;
        for (i, p) in self.params.iter().enumerate() {
            writeln!(
                w,
                "{} {:.16e} {:.16e} {:.16e} {:.16e}",
                i + 1,
                p.a.re,
                p.a.im,
                p.b.re,
                p.b.im
            )?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("trace text is ASCII")
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self, TraceError> {
        let mut lines = r.lines().enumerate();
        let (_, header) = lines.next().ok_or(TraceError::Empty)?;
        let (theta1, theta2, status) = parse_header(&header?)?;
        let mut params = Vec::new();
        for (idx, line) in lines {
            let line = line?;
            let lineno = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let err = |msg: String| TraceError::Parse { line: lineno, msg };
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            if fields.len() != 5 {
                return Err(err(format!("expected 5 fields, found {}", fields.len())));
            }
            let n: usize = fields[0]
                .parse()
                .map_err(|_| err(format!("bad iteration number {:?}", fields[0])))?;
            if n != params.len() + 1 {
                return Err(err(format!(
                    "expected iteration {}, found {n}",
                    params.len() + 1
                )));
            }
            let mut v = [0.0f64; 4];
            for (slot, f) in v.iter_mut().zip(&fields[1..]) {
                *slot = f.parse().map_err(|_| err(format!("bad number {f:?}")))?;
                if !slot.is_finite() {
                    return Err(err(format!("non-finite number {f:?}")));
                }
            }
            let p = MapParams::new(Complex64::new(v[0], v[1]), Complex64::new(v[2], v[3]))
                .map_err(|e| err(e.to_string()))?;
            params.push(p);
        }
        Ok(Trace {
            theta1,
            theta2,
            status,
            params,
        })
    }

    pub fn parse(text: &str) -> Result<Self, TraceError> {
        Self::read(text.as_bytes())
    }
}

fn parse_header(line: &str) -> Result<(RationalAngle, RationalAngle, Status), TraceError> {
    let err = |msg: String| TraceError::Parse { line: 1, msg };
    let mut words = line.split_whitespace();
    if words.next() != Some("#") || words.next() != Some(MAGIC) {
        return Err(err("missing '# medusa-trace' header".into()));
    }
    match words.next() {
        Some(VERSION) => {}
        other => return Err(err(format!("unsupported version {other:?}"))),
    }
    let (mut theta1, mut theta2, mut status) = (None, None, None);
    for word in words {
        let Some((key, value)) = word.split_once('=') else {
            return Err(err(format!("malformed field {word:?}")));
        };
        match key {
            "theta1" => theta1 = Some(value.parse().map_err(|e| err(format!("{e}")))?),
            "theta2" => theta2 = Some(value.parse().map_err(|e| err(format!("{e}")))?),
            "status" => {
                status = Some(
                    Status::parse(value).ok_or_else(|| err(format!("unknown status {value:?}")))?,
                )
            }
            _ => {}
        }
    }
    match (theta1, theta2, status) {
        (Some(t1), Some(t2), Some(st)) => Ok((t1, t2, st)),
        _ => Err(err("header needs theta1, theta2 and status".into())),
    }
}
