//! Exact combinatorics of rational angles under the doubling map.
//!
//! Angles are measured in turns and stored as reduced fractions in `[0, 1)`.
//! Everything here is integer arithmetic; nothing in this module touches
//! floating point except [`RationalAngle::to_f64`].

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Default bound on the rotation-number denominator searched by [`limb_of`].
pub const DEFAULT_Q_MAX: u32 = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AngleError {
    #[error("malformed angle {0:?}: expected \"p/q\" or an integer")]
    Malformed(String),
    #[error("angle {0:?} has zero denominator")]
    ZeroDenominator(String),
    #[error("no cardioid limb with denominator <= {q_max} contains {angle}")]
    NotFound { angle: RationalAngle, q_max: u32 },
    #[error("invalid rotation number {p}/{q}")]
    InvalidRotation { p: u32, q: u32 },
    #[error("malformed kneading sequence {0:?}")]
    MalformedKneading(String),
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// A rational angle `numerator / denominator` in turns, reduced and taken mod 1.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct RationalAngle {
    num: u64,
    den: u64,
}

impl RationalAngle {
    pub const ZERO: RationalAngle = RationalAngle { num: 0, den: 1 };

    /// Builds `p/q mod 1`. Returns `None` when `q == 0`.
    pub fn new(p: u64, q: u64) -> Option<Self> {
        if q == 0 {
            return None;
        }
        let p = p % q;
        let g = gcd(p as u128, q as u128) as u64;
        Some(RationalAngle {
            num: p / g,
            den: q / g,
        })
    }

    pub fn numerator(self) -> u64 {
        self.num
    }

    pub fn denominator(self) -> u64 {
        self.den
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `2θ mod 1`.
    pub fn double(self) -> Self {
        let twice = (self.num as u128 * 2) % self.den as u128;
        let g = gcd(twice, self.den as u128);
        RationalAngle {
            num: (twice / g) as u64,
            den: (self.den as u128 / g) as u64,
        }
    }

    /// `θ/2` (the preimage in `[0, 1/2)`).
    pub fn half(self) -> Self {
        let den = self.den as u128 * 2;
        let g = gcd(self.num as u128, den);
        RationalAngle {
            num: (self.num as u128 / g) as u64,
            den: (den / g) as u64,
        }
    }

    /// `(θ+1)/2` (the preimage in `[1/2, 1)`).
    pub fn half_plus(self) -> Self {
        let num = self.num as u128 + self.den as u128;
        let den = self.den as u128 * 2;
        let g = gcd(num, den);
        RationalAngle {
            num: (num / g) as u64,
            den: (den / g) as u64,
        }
    }

    /// `−θ mod 1`.
    pub fn negate(self) -> Self {
        if self.num == 0 {
            self
        } else {
            RationalAngle {
                num: self.den - self.num,
                den: self.den,
            }
        }
    }

    pub fn is_periodic(self) -> bool {
        self.den % 2 == 1
    }

    /// True when `θ` lies in `[0, 1/2)`.
    pub fn in_upper_half(self) -> bool {
        (self.num as u128) * 2 < self.den as u128
    }
}

impl Ord for RationalAngle {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num as u128 * other.den as u128).cmp(&(other.num as u128 * self.den as u128))
    }
}

impl PartialOrd for RationalAngle {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for RationalAngle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl fmt::Debug for RationalAngle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for RationalAngle {
    type Err = AngleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let (p, q) = t.split_once('/').unwrap_or((t, "1"));
        let p: u64 = p
            .trim()
            .parse()
            .map_err(|_| AngleError::Malformed(s.to_string()))?;
        let q: u64 = q
            .trim()
            .parse()
            .map_err(|_| AngleError::Malformed(s.to_string()))?;
        RationalAngle::new(p, q).ok_or_else(|| AngleError::ZeroDenominator(s.to_string()))
    }
}

/// Forward orbit of an angle under doubling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrbitInfo {
    pub preperiod: usize,
    pub period: usize,
    pub orbit: Vec<RationalAngle>,
}

impl OrbitInfo {
    pub fn len(&self) -> usize {
        self.orbit.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orbit.is_empty()
    }

    /// Index of the image of `orbit[i]` under doubling.
    pub fn next_index(&self, i: usize) -> usize {
        if i + 1 < self.orbit.len() {
            i + 1
        } else {
            self.preperiod
        }
    }
}

pub fn orbit(theta: RationalAngle) -> OrbitInfo {
    let mut seen: Vec<RationalAngle> = Vec::new();
    let mut index: HashMap<RationalAngle, usize> = HashMap::new();
    let mut t = theta;
    loop {
        if let Some(&pos) = index.get(&t) {
            let period = seen.len() - pos;
            return OrbitInfo {
                preperiod: pos,
                period,
                orbit: seen,
            };
        }
        index.insert(t, seen.len());
        seen.push(t);
        t = t.double();
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KneadingSymbol {
    A,
    B,
    StarA,
    StarB,
}

impl KneadingSymbol {
    pub fn is_star(self) -> bool {
        matches!(self, KneadingSymbol::StarA | KneadingSymbol::StarB)
    }

    fn as_str(self) -> &'static str {
        match self {
            KneadingSymbol::A => "A",
            KneadingSymbol::B => "B",
            KneadingSymbol::StarA => "*a",
            KneadingSymbol::StarB => "*b",
        }
    }
}

/// Eventually periodic itinerary, stored as prefix and repeating block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KneadingSequence {
    pub prefix: Vec<KneadingSymbol>,
    pub block: Vec<KneadingSymbol>,
}

impl KneadingSequence {
    pub fn contains_star(&self) -> bool {
        self.prefix
            .iter()
            .chain(self.block.iter())
            .any(|s| s.is_star())
    }
}

impl fmt::Display for KneadingSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.prefix {
            f.write_str(s.as_str())?;
        }
        f.write_str("|")?;
        for s in &self.block {
            f.write_str(s.as_str())?;
        }
        Ok(())
    }
}

impl FromStr for KneadingSequence {
    type Err = AngleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        fn symbols(part: &str, whole: &str) -> Result<Vec<KneadingSymbol>, AngleError> {
            let mut out = Vec::new();
            let mut chars = part.chars();
            while let Some(c) = chars.next() {
                let sym = match c {
                    'A' => KneadingSymbol::A,
                    'B' => KneadingSymbol::B,
                    '*' => match chars.next() {
                        Some('a') => KneadingSymbol::StarA,
                        Some('b') => KneadingSymbol::StarB,
                        _ => return Err(AngleError::MalformedKneading(whole.to_string())),
                    },
                    _ => return Err(AngleError::MalformedKneading(whole.to_string())),
                };
                out.push(sym);
            }
            Ok(out)
        }
        let (prefix, block) = s
            .split_once('|')
            .ok_or_else(|| AngleError::MalformedKneading(s.to_string()))?;
        let block = symbols(block, s)?;
        if block.is_empty() {
            return Err(AngleError::MalformedKneading(s.to_string()));
        }
        Ok(KneadingSequence {
            prefix: symbols(prefix, s)?,
            block,
        })
    }
}

/// Itinerary of `theta`'s orbit relative to the cut along `θ/2` and `(θ+1)/2`.
pub fn kneading(theta: RationalAngle) -> KneadingSequence {
    let lo = theta.half();
    let hi = theta.half_plus();
    let info = orbit(theta);
    // θ itself sits strictly inside (lo, hi) unless θ = 0, where it is the cut.
    let label = |t: RationalAngle| {
        if t == lo {
            KneadingSymbol::StarA
        } else if t == hi {
            KneadingSymbol::StarB
        } else if lo < t && t < hi {
            KneadingSymbol::A
        } else {
            KneadingSymbol::B
        }
    };
    let symbols: Vec<KneadingSymbol> = info.orbit.iter().map(|&t| label(t)).collect();
    let (prefix, block) = symbols.split_at(info.preperiod);
    KneadingSequence {
        prefix: prefix.to_vec(),
        block: block.to_vec(),
    }
}

/// Rotation number `p/q` of a cardioid limb, with `0 < p < q` and `gcd(p, q) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rotation {
    p: u32,
    q: u32,
}

impl Rotation {
    pub fn new(p: u32, q: u32) -> Result<Self, AngleError> {
        if p == 0 || p >= q || gcd(p as u128, q as u128) != 1 {
            return Err(AngleError::InvalidRotation { p, q });
        }
        Ok(Rotation { p, q })
    }

    pub fn p(self) -> u32 {
        self.p
    }

    pub fn q(self) -> u32 {
        self.q
    }

    pub fn conjugate(self) -> Self {
        Rotation {
            p: self.q - self.p,
            q: self.q,
        }
    }
}

impl fmt::Display for Rotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.p, self.q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LimbId {
    MainCardioid,
    Limb(Rotation),
}

impl LimbId {
    pub fn conjugate(self) -> Self {
        match self {
            LimbId::MainCardioid => LimbId::MainCardioid,
            LimbId::Limb(r) => LimbId::Limb(r.conjugate()),
        }
    }
}

/// Angle of the `i`-th smallest point of the doubling orbit with rotation
/// number `p/q`. That orbit has `p` points in `[1/2, 1)`, so the `k`-th binary
/// digit of the `i`-th point is 1 exactly when `(i + kp) mod q >= q - p`.
fn rotation_orbit_point(rot: Rotation, i: u32) -> RationalAngle {
    let (p, q) = (rot.p as u128, rot.q as u128);
    let mut num: u128 = 0;
    for k in 0..q {
        let digit = ((i as u128 + k * p) % q >= q - p) as u128;
        num = (num << 1) | digit;
    }
    let den = (1u128 << q) - 1;
    let g = gcd(num, den);
    RationalAngle {
        num: (num / g) as u64,
        den: (den / g) as u64,
    }
}

/// The two parameter angles bounding the `p/q`-limb wake, `t_minus < t_plus`.
///
/// Doubling rotates the orbit by `p` positions, so the arc around 0 between
/// the largest and smallest orbit point maps onto the arc between points
/// `p − 1` and `p`; that shortest arc is the wake.
pub fn wake_boundary(rot: Rotation) -> (RationalAngle, RationalAngle) {
    (
        rotation_orbit_point(rot, rot.p - 1),
        rotation_orbit_point(rot, rot.p),
    )
}

/// The cardioid limb containing `theta`, searching rotation numbers with `q <= q_max`.
pub fn limb_of(theta: RationalAngle, q_max: u32) -> Result<LimbId, AngleError> {
    if theta == RationalAngle::ZERO {
        return Ok(LimbId::MainCardioid);
    }
    // Denominators above 64 overflow the 2^q − 1 representation.
    for q in 2..=q_max.min(64) {
        for p in 1..q {
            let Ok(rot) = Rotation::new(p, q) else {
                continue;
            };
            let (lo, hi) = wake_boundary(rot);
            if lo <= theta && theta <= hi {
                return Ok(LimbId::Limb(rot));
            }
        }
    }
    Err(AngleError::NotFound {
        angle: theta,
        q_max,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mateability {
    Mateable,
    NotMateable,
    Unknown,
}

/// Two polynomials are mateable unless their angles sit in complex conjugate limbs.
pub fn check_mateable(theta1: RationalAngle, theta2: RationalAngle, q_max: u32) -> Mateability {
    match (limb_of(theta1, q_max), limb_of(theta2, q_max)) {
        (Ok(LimbId::MainCardioid), _) | (_, Ok(LimbId::MainCardioid)) => Mateability::Mateable,
        (Ok(l1), Ok(l2)) => {
            if l1.conjugate() == l2 {
                Mateability::NotMateable
            } else {
                Mateability::Mateable
            }
        }
        _ => Mateability::Unknown,
    }
}

/// True when the filled Julia set for `theta` is a dendrite (strictly preperiodic angle).
pub fn classify_dendrite(theta: RationalAngle) -> bool {
    theta.denominator().is_multiple_of(2)
}
