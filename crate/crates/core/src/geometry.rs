//! Riemann sphere and circline geometry.
//!
//! Arcs follow the omitted-point convention: an arc between two points is the
//! piece of the circline through them and a third point that does not contain
//! that third point. Every predicate that decides isotopy questions first
//! applies a Möbius map sending the omitted point to infinity, so arcs become
//! straight segments and only finite points need to be handled.
//!
//! Points, maps and arcs are generic over the scalar type (see [`Real`]); the
//! unfolding maps run in that type and the resulting chord-normalised
//! coordinates are handled in `f64`.

use std::f64::consts::PI;

use num_complex::{Complex, Complex64};
use thiserror::Error;

use crate::real::{cr, r, ComplexExt, Real};

/// Numerical tolerances for the geometry kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative bound below which a Möbius determinant counts as zero.
    pub det: f64,
    /// Relative bound below which a dot product counts as zero.
    pub dot: f64,
    /// Relative distance under which a point counts as lying on a curve.
    pub geom: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            det: 1e-12,
            dot: 1e-12,
            geom: 1e-9,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("degenerate Möbius map (determinant {0:e})")]
    DegenerateMap(f64),
    #[error("conic intersection is ill-conditioned (deflation residual {0:e})")]
    IllConditioned(f64),
    #[error("point lies on the loop")]
    OnBoundary,
    #[error("hyperbola arc endpoints {0} and {1} are not in a common half-plane")]
    SplitBranch(Complex64, Complex64),
}

/// A point of the Riemann sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpherePoint<T = f64> {
    Finite(Complex<T>),
    Infinity,
}

impl SpherePoint {
    pub const ZERO: SpherePoint = SpherePoint::Finite(Complex64::new(0.0, 0.0));
    pub const ONE: SpherePoint = SpherePoint::Finite(Complex64::new(1.0, 0.0));

    pub fn new(re: f64, im: f64) -> Self {
        SpherePoint::Finite(Complex64::new(re, im))
    }

    /// Point of the unit sphere under inverse stereographic projection from
    /// the north pole (infinity at `(0, 0, 1)`, zero at `(0, 0, −1)`).
    pub fn to_sphere(self) -> [f64; 3] {
        match self {
            SpherePoint::Infinity => [0.0, 0.0, 1.0],
            SpherePoint::Finite(z) => {
                let r2 = z.norm_sqr();
                if r2.is_infinite() {
                    return [0.0, 0.0, 1.0];
                }
                let d = 1.0 + r2;
                [2.0 * z.re / d, 2.0 * z.im / d, (r2 - 1.0) / d]
            }
        }
    }

    pub fn from_sphere(x: [f64; 3]) -> Self {
        let denom = 1.0 - x[2];
        if denom <= 1e-300 {
            SpherePoint::Infinity
        } else {
            SpherePoint::new(x[0] / denom, x[1] / denom)
        }
    }
}

impl<T: Real> SpherePoint<T> {
    pub fn zero() -> Self {
        SpherePoint::Finite(Complex::new(T::zero(), T::zero()))
    }

    pub fn one() -> Self {
        SpherePoint::Finite(Complex::new(T::one(), T::zero()))
    }

    pub fn finite(self) -> Option<Complex<T>> {
        match self {
            SpherePoint::Finite(z) => Some(z),
            SpherePoint::Infinity => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, SpherePoint::Infinity)
    }

    /// `1/z`, exchanging 0 and infinity.
    pub fn recip(self) -> Self {
        match self {
            SpherePoint::Infinity => Self::zero(),
            SpherePoint::Finite(z) if z.re == T::zero() && z.im == T::zero() => {
                SpherePoint::Infinity
            }
            SpherePoint::Finite(z) => SpherePoint::Finite(z.inv()),
        }
    }

    /// Modulus, with infinity mapped to `f64::INFINITY`.
    pub fn norm(self) -> f64 {
        match self {
            SpherePoint::Finite(z) => z.modulus_f64(),
            SpherePoint::Infinity => f64::INFINITY,
        }
    }

    /// Chordal distance `2|z−w| / sqrt((1+|z|²)(1+|w|²))`, bounded by 2.
    pub fn chordal(self, other: Self) -> f64 {
        let one = T::one();
        let two = r::<T>(2.0);
        match (self, other) {
            (SpherePoint::Infinity, SpherePoint::Infinity) => 0.0,
            (SpherePoint::Finite(z), SpherePoint::Infinity)
            | (SpherePoint::Infinity, SpherePoint::Finite(z)) => {
                (two / (one + z.norm_sqr()).sqrt()).to_f64()
            }
            (SpherePoint::Finite(z), SpherePoint::Finite(w)) => {
                // Evaluate through 1/z when both are large to keep precision.
                let (z, w) = if z.modulus() > one && w.modulus() > one {
                    (z.inv(), w.inv())
                } else {
                    (z, w)
                };
                (two * (z - w).modulus()
                    / ((one + z.norm_sqr()).sqrt() * (one + w.norm_sqr()).sqrt()))
                .to_f64()
            }
        }
    }

    /// The nearest `f64` point.
    pub fn to_f64(self) -> SpherePoint {
        match self {
            SpherePoint::Finite(z) => SpherePoint::from(z.to_c64()),
            SpherePoint::Infinity => SpherePoint::Infinity,
        }
    }

    pub fn from_f64(p: SpherePoint) -> Self {
        match p {
            SpherePoint::Finite(z) => SpherePoint::Finite(Complex::from_c64(z)),
            SpherePoint::Infinity => SpherePoint::Infinity,
        }
    }
}

impl<T: Real> From<Complex<T>> for SpherePoint<T> {
    fn from(z: Complex<T>) -> Self {
        if z.re.is_finite() && z.im.is_finite() {
            SpherePoint::Finite(z)
        } else {
            SpherePoint::Infinity
        }
    }
}

impl<T: Real> std::fmt::Display for SpherePoint<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SpherePoint::Finite(z) => write!(f, "{}", z.to_c64()),
            SpherePoint::Infinity => f.write_str("∞"),
        }
    }
}

/// `z ↦ (αz + β) / (γz + δ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mobius<T = f64> {
    pub alpha: Complex<T>,
    pub beta: Complex<T>,
    pub gamma: Complex<T>,
    pub delta: Complex<T>,
}

impl<T: Real> Mobius<T> {
    pub fn new(
        alpha: Complex<T>,
        beta: Complex<T>,
        gamma: Complex<T>,
        delta: Complex<T>,
        tol: &Tolerances,
    ) -> Result<Self, GeometryError> {
        let m = Mobius {
            alpha,
            beta,
            gamma,
            delta,
        };
        let scale = [alpha, beta, gamma, delta]
            .iter()
            .map(|c| c.modulus_f64())
            .fold(0.0, f64::max);
        let det = m.determinant().modulus_f64();
        if scale == 0.0 || det <= tol.det * scale * scale {
            return Err(GeometryError::DegenerateMap(det));
        }
        Ok(m)
    }

    pub fn identity() -> Self {
        let (zero, one) = (cr(0.0, 0.0), cr(1.0, 0.0));
        Mobius {
            alpha: one,
            beta: zero,
            gamma: zero,
            delta: one,
        }
    }

    /// The map `z ↦ 1/(z − p)` sending `p` to infinity, or the identity when `p = ∞`.
    pub fn unfold(p: SpherePoint<T>) -> Self {
        match p {
            SpherePoint::Infinity => Mobius::identity(),
            SpherePoint::Finite(p) => Mobius {
                alpha: cr(0.0, 0.0),
                beta: cr(1.0, 0.0),
                gamma: cr(1.0, 0.0),
                delta: -p,
            },
        }
    }

    pub fn determinant(&self) -> Complex<T> {
        self.alpha * self.delta - self.beta * self.gamma
    }

    pub fn apply(&self, z: SpherePoint<T>) -> SpherePoint<T> {
        let zero = cr(0.0, 0.0);
        match z {
            SpherePoint::Infinity => {
                if self.gamma == zero {
                    SpherePoint::Infinity
                } else {
                    SpherePoint::from(self.alpha / self.gamma)
                }
            }
            SpherePoint::Finite(z) => {
                let num = self.alpha * z + self.beta;
                let den = self.gamma * z + self.delta;
                if den == zero {
                    SpherePoint::Infinity
                } else {
                    SpherePoint::from(num / den)
                }
            }
        }
    }

    /// The adjugate, which inverts the map up to a scalar factor.
    pub fn inverse(&self) -> Self {
        Mobius {
            alpha: self.delta,
            beta: -self.beta,
            gamma: -self.gamma,
            delta: self.alpha,
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Mobius<T>) -> Self {
        Mobius {
            alpha: self.alpha * other.alpha + self.beta * other.gamma,
            beta: self.alpha * other.beta + self.beta * other.delta,
            gamma: self.gamma * other.alpha + self.delta * other.gamma,
            delta: self.gamma * other.beta + self.delta * other.delta,
        }
    }
}

/// Both square roots `(w, −w)`, with `w` the principal root.
pub fn sqrt_pair<T: Real>(z: Complex<T>) -> (Complex<T>, Complex<T>) {
    let zero = T::zero();
    let mut w = z.principal_sqrt();
    if w.re < zero || (w.re == zero && w.im < zero) {
        w = -w;
    }
    (w, -w)
}

/// True when `w1` and `w2` lie in a common open half-plane through the origin.
///
/// Perpendicular pairs are decided by the orientation of the pair taken in
/// lexicographic order, which keeps the predicate symmetric. A zero argument
/// is compatible with everything.
pub fn same_halfplane<T: Real>(w1: Complex<T>, w2: Complex<T>, tol: &Tolerances) -> bool {
    let scale = w1.modulus() * w2.modulus();
    if scale == T::zero() {
        return true;
    }
    let prod = w1.conj() * w2;
    let bound = r::<T>(tol.dot) * scale;
    if prod.re > bound {
        true
    } else if prod.re < -bound {
        false
    } else {
        let (a, b) = if (w1.re, w1.im) <= (w2.re, w2.im) {
            (w1, w2)
        } else {
            (w2, w1)
        };
        (a.conj() * b).im > T::zero()
    }
}

/// Arc of the circline through `z1`, `z2` and `omitted` that joins `z1` to `z2`
/// without passing through `omitted`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircArc<T = f64> {
    pub z1: SpherePoint<T>,
    pub z2: SpherePoint<T>,
    pub omitted: SpherePoint<T>,
}

impl<T: Real> CircArc<T> {
    pub fn new(z1: SpherePoint<T>, z2: SpherePoint<T>, omitted: SpherePoint<T>) -> Self {
        CircArc { z1, z2, omitted }
    }

    /// Position in `[0, 1]` along the arc and distance from the arc, both
    /// measured after unfolding the omitted point to infinity.
    fn locate(&self, x: SpherePoint<T>) -> Option<(f64, f64)> {
        let t = Mobius::unfold(self.omitted);
        let (a, b, p) = (
            t.apply(self.z1).finite()?,
            t.apply(self.z2).finite()?,
            t.apply(x).finite()?,
        );
        let d = b - a;
        let len2 = d.norm_sqr();
        if len2 == T::zero() {
            return None;
        }
        let q = (p - a) * d.conj();
        let s = q.re / len2;
        let rel = q.im.abs() / len2;
        Some((s.to_f64(), rel.to_f64()))
    }

    pub fn contains_interior(&self, x: SpherePoint<T>, tol: &Tolerances) -> bool {
        match self.locate(x) {
            Some((s, rel)) => s > tol.geom && s < 1.0 - tol.geom && rel < 1e-6,
            None => false,
        }
    }

    /// Points along the arc, `n + 1` samples including both endpoints.
    pub fn sample(&self, n: usize) -> Vec<SpherePoint<T>> {
        let t = Mobius::unfold(self.omitted);
        let ti = t.inverse();
        match (t.apply(self.z1).finite(), t.apply(self.z2).finite()) {
            (Some(a), Some(b)) => (0..=n)
                .map(|k| {
                    let s = r::<T>(k as f64) / r(n as f64);
                    ti.apply(SpherePoint::Finite(a + (b - a).scale(s)))
                })
                .collect(),
            _ => vec![self.z1, self.z2],
        }
    }
}

/// Branch of `{w : w² ∈ [start², end²]}` that contains `start`.
///
/// This is the lift of a straight segment under squaring; the endpoints must
/// lie in a common open half-plane, which is what makes the branch well defined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperArc<T = f64> {
    start: Complex<T>,
    end: Complex<T>,
}

impl<T: Real> HyperArc<T> {
    pub fn new(start: Complex<T>, end: Complex<T>) -> Result<Self, GeometryError> {
        let zero = cr(0.0, 0.0);
        if start != zero && end != zero && (start.conj() * end).re <= T::zero() {
            return Err(GeometryError::SplitBranch(start.to_c64(), end.to_c64()));
        }
        Ok(HyperArc { start, end })
    }

    pub fn start(&self) -> Complex<T> {
        self.start
    }

    pub fn end(&self) -> Complex<T> {
        self.end
    }

    fn reference(&self) -> Complex<T> {
        if self.start != cr(0.0, 0.0) {
            self.start
        } else {
            self.end
        }
    }

    pub fn zeta_start(&self) -> Complex<T> {
        self.start * self.start
    }

    pub fn zeta_end(&self) -> Complex<T> {
        self.end * self.end
    }

    /// Point at parameter `s ∈ [0, 1]` of the underlying segment.
    pub fn point_at(&self, s: f64) -> Complex<T> {
        if s <= 0.0 {
            return self.start;
        }
        if s >= 1.0 {
            return self.end;
        }
        let (z1, z2) = (self.zeta_start(), self.zeta_end());
        let zeta = z1 + (z2 - z1).scale(r(s));
        let (w, mw) = sqrt_pair(zeta);
        if (self.reference().conj() * w).re >= T::zero() {
            w
        } else {
            mw
        }
    }

    pub fn midpoint(&self) -> Complex<T> {
        self.point_at(0.5)
    }

    pub fn split(&self) -> (HyperArc<T>, HyperArc<T>) {
        let m = self.midpoint();
        (
            HyperArc {
                start: self.start,
                end: m,
            },
            HyperArc {
                start: m,
                end: self.end,
            },
        )
    }

    /// Parameter of `x` along the arc when `x` lies on it (within `rel` of the arc scale).
    fn parameter_of(&self, x: Complex<T>, tol: &Tolerances) -> Option<f64> {
        let (z1, z2) = (self.zeta_start(), self.zeta_end());
        let n = z2 - z1;
        let len2 = n.norm_sqr();
        if len2 == T::zero() {
            return None;
        }
        let s = (((x * x - z1) * n.conj()).re / len2).to_f64();
        if !(0.0..=1.0).contains(&s) {
            return None;
        }
        let scale = self
            .start
            .modulus_f64()
            .max(self.end.modulus_f64())
            .max(f64::MIN_POSITIVE);
        if (self.point_at(s) - x).modulus_f64() <= 1e-6 * scale.max(tol.geom) {
            Some(s)
        } else {
            None
        }
    }

    pub fn contains_interior(&self, x: Complex<T>, tol: &Tolerances) -> bool {
        matches!(self.parameter_of(x, tol), Some(s) if s > tol.geom && s < 1.0 - tol.geom)
    }
}

fn poly_mul<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Vec<Complex<T>> {
    let mut out = vec![cr(0.0, 0.0); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_sub<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Vec<Complex<T>> {
    let zero = cr(0.0, 0.0);
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| a.get(i).copied().unwrap_or(zero) - b.get(i).copied().unwrap_or(zero))
        .collect()
}

/// Synthetic division by `(t − root)`: returns quotient and remainder.
fn deflate<T: Real>(p: &[T], root: T) -> (Vec<T>, T) {
    let n = p.len();
    let mut q = vec![T::zero(); n - 1];
    let mut acc = p[n - 1];
    for k in (0..n - 1).rev() {
        q[k] = acc;
        acc = p[k] + acc * root;
    }
    (q, acc)
}

fn circumcircle<T: Real>(a: Complex<T>, b: Complex<T>, c: Complex<T>) -> Option<(Complex<T>, T)> {
    let d = r::<T>(2.0) * (a.re * (b.im - c.im) + b.re * (c.im - a.im) + c.re * (a.im - b.im));
    let scale = [(a - b).modulus(), (b - c).modulus(), (c - a).modulus()]
        .into_iter()
        .fold(T::zero(), |m, x| if x > m { x } else { m });
    if d.abs() <= r::<T>(1e-14) * scale * scale {
        return None;
    }
    let (na, nb, nc) = (a.norm_sqr(), b.norm_sqr(), c.norm_sqr());
    let ux = (na * (b.im - c.im) + nb * (c.im - a.im) + nc * (a.im - b.im)) / d;
    let uy = (na * (c.re - b.re) + nb * (a.re - c.re) + nc * (b.re - a.re)) / d;
    let center = Complex::new(ux, uy);
    Some((center, (a - center).modulus()))
}

fn max_abs<T: Real>(xs: impl IntoIterator<Item = T>) -> T {
    xs.into_iter().fold(T::zero(), |m, x| {
        let x = x.abs();
        if x > m {
            x
        } else {
            m
        }
    })
}

/// Intersections of the hyperbola `{w : w² ∈ line(start², end²)}` with the
/// circle carrying `arc_c`, other than the two shared endpoints.
///
/// The circle is parametrised by `t ∈ ℝ ∪ {∞}` with `t = ∞` at the omitted
/// point, which turns the intersection into a real quartic in `t`. The two
/// shared endpoints are known roots; deflating by them leaves a quadratic.
pub fn conic_extra_intersections<T: Real>(
    arc_h: &HyperArc<T>,
    arc_c: &CircArc<T>,
) -> Result<Vec<SpherePoint<T>>, GeometryError> {
    let (Some(z1), Some(z2)) = (arc_c.z1.finite(), arc_c.z2.finite()) else {
        return Ok(Vec::new());
    };
    // A line meets a conic in at most two points: nothing beyond the endpoints.
    let Some(p) = arc_c.omitted.finite() else {
        return Ok(Vec::new());
    };
    let Some((center, radius)) = circumcircle(z1, z2, p) else {
        return Ok(Vec::new());
    };
    let n = arc_h.zeta_end() - arc_h.zeta_start();
    if n.modulus() == T::zero() {
        return Ok(Vec::new());
    }
    let zero = T::zero();
    let one = cr::<T>(1.0, 0.0);
    let i = cr::<T>(0.0, 1.0);
    let rho = p - center;
    // w(t) = center + rho (t + i)/(t − i) = N(t)/D(t)
    let num = vec![i * (rho - center), center + rho];
    let den = vec![-i, one];
    let x = poly_sub(
        &poly_mul(&num, &num),
        &poly_mul(&[arc_h.zeta_start()], &poly_mul(&den, &den)),
    );
    let conj_den_sq = vec![-one, i + i, one];
    let y = poly_mul(&x, &conj_den_sq);
    let quartic: Vec<T> = y.iter().map(|c| (n.conj() * c).im).collect();
    let scale = max_abs(quartic.iter().copied());
    if scale == zero {
        return Ok(Vec::new());
    }

    let param = |z: Complex<T>| -> Option<T> {
        let e = (z - center) / rho;
        let denom = e - one;
        if denom.modulus_f64() <= 1e-12 {
            return None;
        }
        Some((i * (one + e) / denom).re)
    };
    let (Some(t1), Some(t2)) = (param(z1), param(z2)) else {
        return Err(GeometryError::IllConditioned(f64::INFINITY));
    };

    let eval_scale = |t: T| {
        let mut power = T::one();
        let mut sum = T::zero();
        for c in &quartic {
            sum += c.abs() * power;
            power *= t.abs();
        }
        if sum > zero {
            sum
        } else {
            r(f64::MIN_POSITIVE)
        }
    };
    let (q1, r1) = deflate(&quartic, t1);
    let (q2, r2) = deflate(&q1, t2);
    let res1 = (r1.abs() / eval_scale(t1)).to_f64();
    let res2 = (r2.abs() / eval_scale(t2)).to_f64();
    let residual = res1.max(res2);
    if residual > 1e-7 {
        return Err(GeometryError::IllConditioned(residual));
    }

    // q2 = c0 + c1 t + c2 t²
    let (c0, c1, c2) = (q2[0], q2[1], q2[2]);
    let qscale = max_abs([c0, c1, c2]);
    let mut roots = Vec::new();
    if qscale <= r::<T>(1e-14) * scale {
        return Ok(Vec::new());
    }
    if c2.abs() <= r::<T>(1e-12) * qscale {
        if c1.abs() > r::<T>(1e-12) * qscale {
            roots.push(-c0 / c1);
        }
    } else {
        let disc = c1 * c1 - r::<T>(4.0) * c2 * c0;
        if disc >= -r::<T>(1e-12) * qscale * qscale {
            let sq = if disc > zero { disc.sqrt() } else { zero };
            let qq = -r::<T>(0.5) * (if c1 >= zero { c1 + sq } else { c1 - sq });
            if qq != zero {
                roots.push(qq / c2);
                roots.push(c0 / qq);
            } else {
                roots.push(zero);
            }
        }
    }

    let near = |a: Complex<T>, b: Complex<T>| (a - b).modulus() <= r::<T>(1e-7) * radius;
    let mut out: Vec<SpherePoint<T>> = Vec::new();
    for t in roots {
        let t = Complex::new(t, zero);
        let w = center + rho * (t + i) / (t - i);
        if near(w, z1) || near(w, z2) {
            continue;
        }
        if out
            .iter()
            .any(|q| matches!(q, SpherePoint::Finite(v) if near(*v, w)))
        {
            continue;
        }
        out.push(SpherePoint::Finite(w));
    }
    Ok(out)
}

fn segment_distance<T: Real>(a: Complex<T>, b: Complex<T>, p: Complex<T>) -> T {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == T::zero() {
        return (p - a).modulus();
    }
    let s = ((p - a) * d.conj()).re / len2;
    let s = if s < T::zero() {
        T::zero()
    } else if s > T::one() {
        T::one()
    } else {
        s
    };
    (a + d.scale(s) - p).modulus()
}

/// Winding number of the closed polyline `loop_pts` (last vertex joined back
/// to the first) around `p`. `eps` is an absolute distance.
pub fn winding_number(
    loop_pts: &[Complex64],
    p: Complex64,
    eps: f64,
) -> Result<i32, GeometryError> {
    let n = loop_pts.len();
    if n == 0 {
        return Ok(0);
    }
    let mut total = 0.0;
    for k in 0..n {
        let a = loop_pts[k];
        let b = loop_pts[(k + 1) % n];
        if segment_distance(a, b, p) < eps {
            return Err(GeometryError::OnBoundary);
        }
        let (u, v) = (a - p, b - p);
        let ang = (u.conj() * v).arg();
        if (ang.abs() - PI).abs() < 1e-12 {
            return Err(GeometryError::OnBoundary);
        }
        total += ang;
    }
    Ok((total / (2.0 * PI)).round() as i32)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Replacement {
    Admissible,
    Subdivide,
}

const MAX_SAMPLE_DEPTH: u32 = 24;
const COINCIDENT_BULGE: f64 = 1e-7;

/// Decides whether `arc_h` may be replaced by `arc_c` without sweeping across
/// any point of `distinguished`.
pub fn admissible_replacement<T: Real>(
    arc_h: &HyperArc<T>,
    arc_c: &CircArc<T>,
    distinguished: &[SpherePoint<T>],
    tol: &Tolerances,
) -> Replacement {
    let unfold = Mobius::unfold(arc_c.omitted);
    let (Some(c1), Some(c2)) = (
        unfold.apply(SpherePoint::Finite(arc_h.start())).finite(),
        unfold.apply(SpherePoint::Finite(arc_h.end())).finite(),
    ) else {
        return Replacement::Subdivide;
    };
    let chord = c2 - c1;
    if chord.modulus() == T::zero() {
        return Replacement::Subdivide;
    }
    // Similarity normalising the chord to [0, 1]; winding numbers are unaffected.
    let norm = |z: Complex<T>| ((z - c1) / chord).to_c64();
    let map = |w: Complex<T>| -> Option<Complex64> {
        unfold.apply(SpherePoint::Finite(w)).finite().map(norm)
    };
    // When the two arcs agree to rounding the quartic vanishes identically and
    // its roots are noise; only the obstacle test below is meaningful then.
    let coincident = [0.25, 0.5, 0.75].iter().all(|&s| {
        map(arc_h.point_at(s))
            .is_some_and(|z| z.im.abs() <= COINCIDENT_BULGE && (0.0..=1.0).contains(&z.re))
    });
    let mut crossing_unknown = false;
    if !coincident {
        match conic_extra_intersections(arc_h, arc_c) {
            Err(_) => crossing_unknown = true,
            Ok(extra) => {
                for x in extra {
                    if let SpherePoint::Finite(w) = x {
                        if arc_h.contains_interior(w, tol) && arc_c.contains_interior(x, tol) {
                            return Replacement::Subdivide;
                        }
                    }
                }
            }
        }
    }
    let obstacles: Vec<Complex64> = distinguished
        .iter()
        .filter_map(|&d| unfold.apply(d).finite().map(norm))
        .collect();
    if obstacles.is_empty() {
        return Replacement::Admissible;
    }
    let eps = tol.geom;

    let mut poly: Vec<Complex64> = Vec::new();
    let initial = 16;
    let mut prev_s = 0.0;
    let Some(mut prev) = map(arc_h.start()) else {
        return Replacement::Subdivide;
    };
    poly.push(prev);
    for k in 1..=initial {
        let s = k as f64 / initial as f64;
        let Some(next) = map(arc_h.point_at(s)) else {
            return Replacement::Subdivide;
        };
        if !refine(
            arc_h, &map, &obstacles, prev_s, s, prev, next, eps, 0, &mut poly,
        ) {
            return Replacement::Subdivide;
        }
        prev_s = s;
        prev = next;
    }

    if crossing_unknown && crosses_chord(&poly) {
        return Replacement::Subdivide;
    }
    for &d in &obstacles {
        match winding_number(&poly, d, eps) {
            Ok(0) => {}
            _ => return Replacement::Subdivide,
        }
    }
    Replacement::Admissible
}

/// True when the sampled curve, which runs from 0 to 1, meets the open
/// segment `(0, 1)` transversally.
fn crosses_chord(poly: &[Complex64]) -> bool {
    let tiny = 1e-12;
    let mut last_sign = 0.0;
    let mut last_point = Complex64::new(0.0, 0.0);
    for &p in poly {
        if p.im.abs() <= tiny {
            continue;
        }
        let sign = p.im.signum();
        if last_sign != 0.0 && sign != last_sign {
            let t = last_point.im / (last_point.im - p.im);
            let x = last_point.re + t * (p.re - last_point.re);
            if x > tiny && x < 1.0 - tiny {
                return true;
            }
        }
        last_sign = sign;
        last_point = p;
    }
    false
}

/// Appends samples on `(s0, s1]` until every chord of the polyline stays
/// closer to the curve than a quarter of its distance to the nearest obstacle.
#[allow(clippy::too_many_arguments)]
fn refine<T: Real>(
    arc: &HyperArc<T>,
    map: &dyn Fn(Complex<T>) -> Option<Complex64>,
    obstacles: &[Complex64],
    s0: f64,
    s1: f64,
    p0: Complex64,
    p1: Complex64,
    eps: f64,
    depth: u32,
    out: &mut Vec<Complex64>,
) -> bool {
    let sm = 0.5 * (s0 + s1);
    let Some(pm) = map(arc.point_at(sm)) else {
        return false;
    };
    let sagitta = segment_distance(p0, p1, pm);
    let clearance = obstacles
        .iter()
        .map(|&d| segment_distance(p0, p1, d).min((pm - d).norm()))
        .fold(f64::INFINITY, f64::min);
    if clearance < eps {
        return false;
    }
    if sagitta <= eps || sagitta <= 0.25 * clearance {
        out.push(p1);
        return true;
    }
    if depth >= MAX_SAMPLE_DEPTH {
        return false;
    }
    refine(arc, map, obstacles, s0, sm, p0, pm, eps, depth + 1, out)
        && refine(arc, map, obstacles, sm, s1, pm, p1, eps, depth + 1, out)
}

/// True when no point of `distinguished` lies in (or within `eps` relative to
/// the triangle's size of) the closed triangle `w1 w2 w3`.
pub fn triangle_free<T: Real>(
    w1: Complex<T>,
    w2: Complex<T>,
    w3: Complex<T>,
    distinguished: &[SpherePoint<T>],
    tol: &Tolerances,
) -> bool {
    let zero = T::zero();
    let scale = max_abs([
        (w1 - w2).modulus(),
        (w2 - w3).modulus(),
        (w3 - w1).modulus(),
    ]);
    let geom = r::<T>(tol.geom);
    let eps = if scale > zero { geom * scale } else { geom };
    let cross = |a: Complex<T>, b: Complex<T>, p: Complex<T>| ((b - a).conj() * (p - a)).im;
    let area2 = cross(w1, w2, w3);
    let degenerate = area2.abs() <= geom * scale * scale;
    distinguished.iter().all(|&d| {
        let Some(p) = d.finite() else {
            return true;
        };
        let near_edge = segment_distance(w1, w2, p) < eps
            || segment_distance(w2, w3, p) < eps
            || segment_distance(w3, w1, p) < eps;
        if near_edge {
            return false;
        }
        if degenerate {
            return true;
        }
        let (c1, c2, c3) = (cross(w1, w2, p), cross(w2, w3, p), cross(w3, w1, p));
        let inside = (c1 > zero && c2 > zero && c3 > zero) || (c1 < zero && c2 < zero && c3 < zero);
        !inside
    })
}
