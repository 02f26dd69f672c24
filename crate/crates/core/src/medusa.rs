//! The Medusa iteration.
//!
//! A Medusa is stored as point lists: one for the image of the unit circle
//! (always starting at 1) and one per leg. Consecutive points are joined by
//! arcs of circles: the circle and interior legs use arcs omitting the image
//! of `y₁`, exterior legs use arcs omitting the image of `x₁`. One iteration
//! lifts the lists through the normalised rational map determined by the
//! current critical-value positions, replaces the lifted hyperbola arcs by
//! conventional circle arcs, and prunes redundant points.

use std::cell::Cell;

use num_complex::{Complex, Complex64};
use thiserror::Error;

use crate::angles::{check_mateable, orbit, Mateability, OrbitInfo, RationalAngle};
use crate::geometry::{
    admissible_replacement, same_halfplane, sqrt_pair, triangle_free, CircArc, GeometryError,
    HyperArc, Mobius, Replacement, SpherePoint, Tolerances,
};
use crate::real::{cr, noise, ComplexExt, DoubleDouble, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MedusaError {
    #[error("degenerate parameters: {0}")]
    DegenerateParameters(String),
    #[error("branch ambiguity: lifted point {0} coincides with a critical point")]
    BranchAmbiguity(SpherePoint),
    #[error("rectification exceeded depth {0}")]
    RectifyDepthExceeded(u32),
    #[error("rectification inserted more than {0} points in one step")]
    RectifyBudgetExceeded(usize),
    #[error("lifted circle does not close up: the curve no longer separates the critical values")]
    Monodromy,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// `R(z) = (a z² + 1 − a) / (b z² + 1 − b)`: critical points 0 and ∞, fixing 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapParams<T = f64> {
    pub a: Complex<T>,
    pub b: Complex<T>,
}

impl<T: Real> MapParams<T> {
    pub fn new(a: Complex<T>, b: Complex<T>) -> Result<Self, MedusaError> {
        let scale = 1.0 + a.modulus_f64().max(b.modulus_f64());
        if (a - b).modulus_f64() <= noise::<T>(1e-14) * scale {
            return Err(MedusaError::DegenerateParameters(format!(
                "a = {} equals b = {}",
                a.to_c64(),
                b.to_c64()
            )));
        }
        Ok(MapParams { a, b })
    }

    /// The map `z ↦ z²`.
    pub fn squaring() -> Self {
        MapParams {
            a: cr(1.0, 0.0),
            b: cr(0.0, 0.0),
        }
    }

    pub fn to_f64(&self) -> MapParams {
        MapParams {
            a: self.a.to_c64(),
            b: self.b.to_c64(),
        }
    }

    pub fn eval(&self, z: SpherePoint<T>) -> SpherePoint<T> {
        let one = cr::<T>(1.0, 0.0);
        let (num, den) = match z {
            SpherePoint::Infinity => (self.a, self.b),
            SpherePoint::Finite(z) if z.modulus() <= T::one() => {
                let z2 = z * z;
                (self.a * z2 + (one - self.a), self.b * z2 + (one - self.b))
            }
            SpherePoint::Finite(z) => {
                let w = z.inv();
                let w2 = w * w;
                (self.a + (one - self.a) * w2, self.b + (one - self.b) * w2)
            }
        };
        if den == cr(0.0, 0.0) {
            SpherePoint::Infinity
        } else {
            SpherePoint::from(num / den)
        }
    }

    pub fn iterate(&self, z: SpherePoint<T>, n: usize) -> SpherePoint<T> {
        (0..n).fold(z, |acc, _| self.eval(acc))
    }

    /// `u = R(0)` and `v = R(∞)`.
    pub fn critical_values(&self) -> (SpherePoint<T>, SpherePoint<T>) {
        (
            self.eval(SpherePoint::zero()),
            self.eval(SpherePoint::Infinity),
        )
    }

    /// The Möbius factor `M` with `R = M ∘ (z ↦ z²)`.
    pub fn mobius(&self) -> Mobius<T> {
        let one = cr::<T>(1.0, 0.0);
        Mobius {
            alpha: self.a,
            beta: one - self.a,
            gamma: self.b,
            delta: one - self.b,
        }
    }

    /// Parameters of `z ↦ 1/R(1/z)`.
    pub fn conjugate_by_inversion(&self) -> Self {
        let one = cr::<T>(1.0, 0.0);
        MapParams {
            a: one - self.b,
            b: one - self.a,
        }
    }
}

/// The unique map in the normalised family with `R(0) = u` and `R(∞) = v`.
pub fn params_from_critical_values<T: Real>(
    u: SpherePoint<T>,
    v: SpherePoint<T>,
    tol: &Tolerances,
) -> Result<MapParams<T>, MedusaError> {
    let one = cr::<T>(1.0, 0.0);
    if u.chordal(v) <= tol.geom
        || u.chordal(SpherePoint::one()) <= tol.geom
        || v.chordal(SpherePoint::one()) <= tol.geom
    {
        return Err(MedusaError::DegenerateParameters(format!(
            "critical values u = {u}, v = {v} collide with each other or with 1"
        )));
    }
    let params = match (u, v) {
        (SpherePoint::Finite(u), SpherePoint::Infinity) => MapParams::new(one - u, cr(0.0, 0.0))?,
        (SpherePoint::Infinity, SpherePoint::Finite(v)) => MapParams::new(v, one)?,
        (SpherePoint::Finite(u), SpherePoint::Finite(v)) => {
            let d = u - v;
            MapParams::new(v * (u - one) / d, (u - one) / d)?
        }
        (SpherePoint::Infinity, SpherePoint::Infinity) => unreachable!("rejected above"),
    };
    let (ru, rv) = params.critical_values();
    if ru.chordal(u) > 1e-10 || rv.chordal(v) > 1e-10 {
        return Err(MedusaError::DegenerateParameters(format!(
            "normalisation check failed: R(0) = {ru}, R(∞) = {rv}"
        )));
    }
    Ok(params)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Interior,
    Exterior,
}

/// Anything with a position on the sphere.
pub trait Located {
    type Scalar: Real;
    fn pos(&self) -> SpherePoint<Self::Scalar>;
}

impl<T: Real> Located for SpherePoint<T> {
    type Scalar = T;
    fn pos(&self) -> SpherePoint<T> {
        *self
    }
}

/// Where a lifted point came from in the previous Medusa.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Parent<T = f64> {
    /// Lifted from a stored point.
    Vertex(SpherePoint<T>),
    /// Inserted during rectification; its image lies on the conventional arc
    /// joining two stored points of the previous Medusa.
    Arc {
        image: SpherePoint<T>,
        from: SpherePoint<T>,
        to: SpherePoint<T>,
    },
}

impl<T: Real> Parent<T> {
    pub fn image(&self) -> SpherePoint<T> {
        match *self {
            Parent::Vertex(z) => z,
            Parent::Arc { image, .. } => image,
        }
    }

    pub fn to_f64(&self) -> Parent {
        match *self {
            Parent::Vertex(z) => Parent::Vertex(z.to_f64()),
            Parent::Arc { image, from, to } => Parent::Arc {
                image: image.to_f64(),
                from: from.to_f64(),
                to: to.to_f64(),
            },
        }
    }
}

/// A point of a freshly lifted Medusa together with its parent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lifted<T = f64> {
    pub pos: SpherePoint<T>,
    pub parent: Parent<T>,
}

impl<T: Real> Lifted<T> {
    pub fn to_f64(&self) -> Lifted {
        Lifted {
            pos: self.pos.to_f64(),
            parent: self.parent.to_f64(),
        }
    }
}

impl<T: Real> Located for Lifted<T> {
    type Scalar = T;
    fn pos(&self) -> SpherePoint<T> {
        self.pos
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Leg<P = SpherePoint> {
    /// Orbit element; exterior legs are embedded at `−angle`.
    pub angle: RationalAngle,
    pub side: Side,
    pub anchor_index: usize,
    /// From the anchor on the circle to the endpoint.
    pub points: Vec<P>,
}

impl<P: Located> Leg<P> {
    pub fn endpoint(&self) -> SpherePoint<P::Scalar> {
        self.points.last().expect("legs are never empty").pos()
    }

    /// Angle at which the leg is embedded in the standard Medusa.
    pub fn embedded_angle(&self) -> RationalAngle {
        match self.side {
            Side::Interior => self.angle,
            Side::Exterior => self.angle.negate(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Medusa<P = SpherePoint> {
    pub theta1: RationalAngle,
    pub theta2: RationalAngle,
    pub circle: Vec<P>,
    /// One leg per element of the orbit of `theta1`, in orbit order.
    pub interior_legs: Vec<Leg<P>>,
    /// One leg per element of the orbit of `theta2`, in orbit order.
    pub exterior_legs: Vec<Leg<P>>,
    orbit1: OrbitInfo,
    orbit2: OrbitInfo,
}

impl<P: Located + Clone> Medusa<P> {
    pub fn orbit1(&self) -> &OrbitInfo {
        &self.orbit1
    }

    pub fn orbit2(&self) -> &OrbitInfo {
        &self.orbit2
    }

    /// Image of `x₁`, the endpoint of the `theta1` leg.
    pub fn x1(&self) -> SpherePoint<P::Scalar> {
        self.interior_legs[0].endpoint()
    }

    /// Image of `y₁`, the endpoint of the `−theta2` leg.
    pub fn y1(&self) -> SpherePoint<P::Scalar> {
        self.exterior_legs[0].endpoint()
    }

    /// Images of all leg endpoints: interior first, then exterior.
    pub fn distinguished(&self) -> Vec<SpherePoint<P::Scalar>> {
        self.legs().map(|l| l.endpoint()).collect()
    }

    pub fn legs(&self) -> impl Iterator<Item = &Leg<P>> {
        self.interior_legs.iter().chain(self.exterior_legs.iter())
    }

    pub fn point_count(&self) -> usize {
        self.circle.len() + self.legs().map(|l| l.points.len()).sum::<usize>()
    }

    /// Omitted point of the arc convention used by a list on `side`.
    pub fn omitted(&self, side: Side) -> SpherePoint<P::Scalar> {
        match side {
            Side::Interior => self.y1(),
            Side::Exterior => self.x1(),
        }
    }

    pub fn strip(&self) -> Medusa<SpherePoint<P::Scalar>> {
        self.map_points(|p| p.pos())
    }

    /// The same Medusa with every stored point replaced by `f(point)`.
    pub fn map_points<Q>(&self, f: impl Fn(&P) -> Q) -> Medusa<Q> {
        let map_leg = |l: &Leg<P>| Leg {
            angle: l.angle,
            side: l.side,
            anchor_index: l.anchor_index,
            points: l.points.iter().map(&f).collect(),
        };
        Medusa {
            theta1: self.theta1,
            theta2: self.theta2,
            circle: self.circle.iter().map(&f).collect(),
            interior_legs: self.interior_legs.iter().map(map_leg).collect(),
            exterior_legs: self.exterior_legs.iter().map(map_leg).collect(),
            orbit1: self.orbit1.clone(),
            orbit2: self.orbit2.clone(),
        }
    }

    /// Checks the structural invariants: circle starts at 1, anchors are
    /// valid and sit at the start of their legs, endpoints are distinct.
    pub fn validate(&self) -> Result<(), String> {
        if self.circle.first().map(|p| p.pos()) != Some(SpherePoint::one()) {
            return Err("circle list must start at 1".into());
        }
        if self.interior_legs.len() != self.orbit1.len()
            || self.exterior_legs.len() != self.orbit2.len()
        {
            return Err("leg count differs from orbit length".into());
        }
        for side in [&self.interior_legs, &self.exterior_legs] {
            let mut anchors: Vec<usize> = side.iter().map(|l| l.anchor_index).collect();
            anchors.sort_unstable();
            anchors.dedup();
            if anchors.len() != side.len() {
                return Err("two legs on one side share an anchor".into());
            }
        }
        for leg in self.legs() {
            if leg.anchor_index >= self.circle.len() {
                return Err(format!("anchor {} out of range", leg.anchor_index));
            }
            if leg.points.is_empty() || leg.points[0].pos() != self.circle[leg.anchor_index].pos() {
                return Err(format!("leg {} does not start at its anchor", leg.angle));
            }
        }
        let (x1, y1) = (self.x1(), self.y1());
        if x1.chordal(y1) == 0.0 || x1 == SpherePoint::one() || y1 == SpherePoint::one() {
            return Err("x₁ and y₁ images must be distinct from each other and from 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingConfig {
    /// Largest angular gap between consecutive circle points, as `1/n` turn.
    pub circle_gap_denominator: u64,
    /// Points per leg, anchor and endpoint included (at least 3).
    pub leg_points: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            circle_gap_denominator: 16,
            leg_points: 3,
        }
    }
}

fn on_circle(t: RationalAngle, radius: f64) -> SpherePoint {
    if t == RationalAngle::ZERO {
        return SpherePoint::new(radius, 0.0);
    }
    SpherePoint::Finite(Complex64::from_polar(
        radius,
        2.0 * std::f64::consts::PI * t.to_f64(),
    ))
}

/// The identity embedding of the standard Medusa for `(theta1, theta2)`.
pub fn standard_medusa(
    theta1: RationalAngle,
    theta2: RationalAngle,
    sampling: &SamplingConfig,
) -> Medusa {
    let orbit1 = orbit(theta1);
    let orbit2 = orbit(theta2);
    let gap = sampling.circle_gap_denominator.max(2);
    let mut angles: Vec<RationalAngle> = (0..gap)
        .map(|k| RationalAngle::new(k, gap).expect("nonzero"))
        .chain([
            RationalAngle::ZERO,
            RationalAngle::new(1, 2).expect("nonzero"),
        ])
        .chain(orbit1.orbit.iter().copied())
        .chain(orbit2.orbit.iter().map(|t| t.negate()))
        .collect();
    angles.sort();
    angles.dedup();
    let circle: Vec<SpherePoint> = angles.iter().map(|&t| on_circle(t, 1.0)).collect();
    let index_of = |t: RationalAngle| {
        angles
            .binary_search(&t)
            .expect("anchor angle is on the circle")
    };

    let n = sampling.leg_points.max(3);
    let make_leg = |angle: RationalAngle, side: Side| {
        let embedded = match side {
            Side::Interior => angle,
            Side::Exterior => angle.negate(),
        };
        let anchor_index = index_of(embedded);
        let end_radius = match side {
            Side::Interior => 0.5,
            Side::Exterior => 2.0,
        };
        let points = (0..n)
            .map(|k| {
                if k == 0 {
                    circle[anchor_index]
                } else {
                    let r = 1.0 + (end_radius - 1.0) * k as f64 / (n - 1) as f64;
                    on_circle(embedded, r)
                }
            })
            .collect();
        Leg {
            angle,
            side,
            anchor_index,
            points,
        }
    };
    let interior_legs = orbit1
        .orbit
        .iter()
        .map(|&t| make_leg(t, Side::Interior))
        .collect();
    let exterior_legs = orbit2
        .orbit
        .iter()
        .map(|&t| make_leg(t, Side::Exterior))
        .collect();
    Medusa {
        theta1,
        theta2,
        circle,
        interior_legs,
        exterior_legs,
        orbit1,
        orbit2,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationConfig {
    pub tol: Tolerances,
    /// Maximum number of nested subdivisions of a single lifted arc.
    pub max_rectify_depth: u32,
    /// Maximum number of points rectification may insert in one step.
    pub max_inserted_points: usize,
}

impl Default for IterationConfig {
    fn default() -> Self {
        IterationConfig {
            tol: Tolerances::default(),
            max_rectify_depth: 40,
            max_inserted_points: 20_000,
        }
    }
}

/// Picks the square root of `zeta` in the half-plane of `prev`.
fn lift_root<T: Real>(prev: Complex<T>, zeta: Complex<T>, tol: &Tolerances) -> Complex<T> {
    let (w, mw) = sqrt_pair(zeta);
    if same_halfplane(prev, w, tol) {
        w
    } else {
        mw
    }
}

fn is_branch_point<T: Real>(zeta: Complex<T>, reference: Complex<T>) -> bool {
    zeta.modulus_f64() <= noise::<T>(1e-14) * (1.0 + reference.modulus_f64())
}

/// Lifts every list of `s` through `params`. The result's consecutive points
/// are joined by lifted (hyperbola) arcs rather than conventional arcs.
pub fn pullback_step<P: Located + Clone>(
    s: &Medusa<P>,
    params: &MapParams<P::Scalar>,
    cfg: &IterationConfig,
) -> Result<Medusa<Lifted<P::Scalar>>, MedusaError> {
    let tol = &cfg.tol;
    let m_inv = params.mobius().inverse();
    // η = 1/ζ: the chart in which exterior lists lift like interior ones.
    let eta_map = Mobius {
        alpha: m_inv.gamma,
        beta: m_inv.delta,
        gamma: m_inv.alpha,
        delta: m_inv.beta,
    };

    let old: Vec<SpherePoint<P::Scalar>> = s.circle.iter().map(|p| p.pos()).collect();
    let len = old.len();
    let one = cr::<P::Scalar>(1.0, 0.0);
    let mut upper = Vec::with_capacity(len);
    let mut lower = Vec::with_capacity(len);
    upper.push(one);
    lower.push(-one);
    for &z in &old[1..] {
        let zeta = m_inv
            .apply(z)
            .finite()
            .ok_or_else(|| MedusaError::DegenerateParameters("circle passes through v".into()))?;
        if is_branch_point(zeta, one) {
            return Err(MedusaError::BranchAmbiguity(z.to_f64()));
        }
        let last = *upper.last().expect("nonempty");
        let w = lift_root(last, zeta, tol);
        upper.push(w);
        lower.push(-w);
    }
    if !same_halfplane(*upper.last().expect("nonempty"), -one, tol) {
        return Err(MedusaError::Monodromy);
    }
    let circle: Vec<Lifted<P::Scalar>> = upper
        .iter()
        .zip(old.iter().cycle())
        .chain(lower.iter().zip(old.iter().cycle()))
        .map(|(&w, &z)| Lifted {
            pos: SpherePoint::Finite(w),
            parent: Parent::Vertex(z),
        })
        .collect();

    let new_anchor = |embedded: RationalAngle, old_anchor: usize| {
        if embedded.in_upper_half() {
            old_anchor
        } else {
            len + old_anchor
        }
    };

    let mut interior_legs = Vec::with_capacity(s.interior_legs.len());
    for (j, leg) in s.interior_legs.iter().enumerate() {
        let source_index = s.orbit1.next_index(j);
        let source = &s.interior_legs[source_index];
        let source_is_x1 = source_index == 0;
        let anchor_index = new_anchor(leg.angle, source.anchor_index);
        let mut prev = circle[anchor_index].pos.finite().expect("circle is finite");
        let mut points = vec![Lifted {
            pos: circle[anchor_index].pos,
            parent: Parent::Vertex(source.points[0].pos()),
        }];
        let last = source.points.len() - 1;
        for (k, p) in source.points.iter().enumerate().skip(1) {
            let z = p.pos();
            let zeta = m_inv.apply(z).finite().ok_or_else(|| {
                MedusaError::DegenerateParameters("interior leg passes through v".into())
            })?;
            if k < last && is_branch_point(zeta, prev * prev) {
                return Err(MedusaError::BranchAmbiguity(z.to_f64()));
            }
            // The lift of x₁ is the critical point itself.
            let w = if k == last && source_is_x1 {
                cr(0.0, 0.0)
            } else {
                lift_root(prev, zeta, tol)
            };
            points.push(Lifted {
                pos: SpherePoint::Finite(w),
                parent: Parent::Vertex(z),
            });
            prev = w;
        }
        interior_legs.push(Leg {
            angle: leg.angle,
            side: Side::Interior,
            anchor_index,
            points,
        });
    }

    let mut exterior_legs = Vec::with_capacity(s.exterior_legs.len());
    for (j, leg) in s.exterior_legs.iter().enumerate() {
        let source_index = s.orbit2.next_index(j);
        let source = &s.exterior_legs[source_index];
        let source_is_y1 = source_index == 0;
        let anchor_index = new_anchor(leg.angle.negate(), source.anchor_index);
        let mut prev = circle[anchor_index]
            .pos
            .finite()
            .expect("circle is finite")
            .inv();
        let mut points = vec![Lifted {
            pos: circle[anchor_index].pos,
            parent: Parent::Vertex(source.points[0].pos()),
        }];
        let last = source.points.len() - 1;
        for (k, p) in source.points.iter().enumerate().skip(1) {
            let z = p.pos();
            let eta = eta_map.apply(z).finite().ok_or_else(|| {
                MedusaError::DegenerateParameters("exterior leg passes through u".into())
            })?;
            if k < last && is_branch_point(eta, prev * prev) {
                return Err(MedusaError::BranchAmbiguity(z.to_f64()));
            }
            let t = if k == last && source_is_y1 {
                cr(0.0, 0.0)
            } else {
                lift_root(prev, eta, tol)
            };
            points.push(Lifted {
                pos: SpherePoint::Finite(t).recip(),
                parent: Parent::Vertex(z),
            });
            prev = t;
        }
        exterior_legs.push(Leg {
            angle: leg.angle,
            side: Side::Exterior,
            anchor_index,
            points,
        });
    }

    Ok(Medusa {
        theta1: s.theta1,
        theta2: s.theta2,
        circle,
        interior_legs,
        exterior_legs,
        orbit1: s.orbit1.clone(),
        orbit2: s.orbit2.clone(),
    })
}

/// Coordinates in which a list's lifted arcs are branches of `w² ∈ segment`.
fn chart<T: Real>(side: Side, z: SpherePoint<T>) -> SpherePoint<T> {
    match side {
        Side::Interior => z,
        Side::Exterior => z.recip(),
    }
}

fn unchart<T: Real>(side: Side, z: Complex<T>) -> SpherePoint<T> {
    match side {
        Side::Interior => SpherePoint::Finite(z),
        Side::Exterior => SpherePoint::Finite(z).recip(),
    }
}

struct ArcContext<'a, T> {
    side: Side,
    omitted: SpherePoint<T>,
    obstacles: &'a [SpherePoint<T>],
    params: &'a MapParams<T>,
    cfg: &'a IterationConfig,
    budget: &'a Cell<usize>,
}

impl<T: Real> ArcContext<'_, T> {
    /// Points to insert strictly between `a` and `b` so every sub-arc may be
    /// replaced by its conventional circle arc.
    fn rectify(&self, a: &Lifted<T>, b: &Lifted<T>) -> Result<Vec<Lifted<T>>, MedusaError> {
        let ca = chart(self.side, a.pos).finite().ok_or_else(|| {
            MedusaError::DegenerateParameters("lifted point at the chart's pole".into())
        })?;
        let cb = chart(self.side, b.pos).finite().ok_or_else(|| {
            MedusaError::DegenerateParameters("lifted point at the chart's pole".into())
        })?;
        let arc = HyperArc::new(ca, cb)?;
        let (from, to) = (a.parent.image(), b.parent.image());
        let mut out = Vec::new();
        self.subdivide(&arc, 0, from, to, &mut out)?;
        Ok(out)
    }

    fn subdivide(
        &self,
        arc: &HyperArc<T>,
        depth: u32,
        from: SpherePoint<T>,
        to: SpherePoint<T>,
        out: &mut Vec<Lifted<T>>,
    ) -> Result<(), MedusaError> {
        let conventional = CircArc::new(arc.start().into(), arc.end().into(), self.omitted);
        match admissible_replacement(arc, &conventional, self.obstacles, &self.cfg.tol) {
            Replacement::Admissible => Ok(()),
            Replacement::Subdivide => {
                if depth >= self.cfg.max_rectify_depth {
                    return Err(MedusaError::RectifyDepthExceeded(
                        self.cfg.max_rectify_depth,
                    ));
                }
                let remaining = self.budget.get();
                if remaining == 0 {
                    return Err(MedusaError::RectifyBudgetExceeded(
                        self.cfg.max_inserted_points,
                    ));
                }
                self.budget.set(remaining - 1);
                let (left, right) = arc.split();
                self.subdivide(&left, depth + 1, from, to, out)?;
                let pos = unchart(self.side, left.end());
                out.push(Lifted {
                    pos,
                    parent: Parent::Arc {
                        image: self.params.eval(pos),
                        from,
                        to,
                    },
                });
                self.subdivide(&right, depth + 1, from, to, out)
            }
        }
    }
}

/// Replaces every lifted arc of `raw` by conventional circle arcs, inserting
/// lifted midpoints wherever the replacement would sweep across a
/// distinguished point.
pub fn rectify_step<T: Real>(
    raw: &Medusa<Lifted<T>>,
    params: &MapParams<T>,
    cfg: &IterationConfig,
) -> Result<Medusa<Lifted<T>>, MedusaError> {
    let distinguished = raw.distinguished();
    let budget = Cell::new(cfg.max_inserted_points);
    let in_chart = |side: Side, skip: Option<usize>| -> Vec<SpherePoint<T>> {
        distinguished
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != skip)
            .map(|(_, &d)| chart(side, d))
            .collect()
    };

    // Circle (cyclic).
    let obstacles = in_chart(Side::Interior, None);
    let ctx = ArcContext {
        side: Side::Interior,
        omitted: chart(Side::Interior, raw.omitted(Side::Interior)),
        obstacles: &obstacles,
        params,
        cfg,
        budget: &budget,
    };
    let n = raw.circle.len();
    let mut circle = Vec::with_capacity(n);
    let mut remap = Vec::with_capacity(n);
    for k in 0..n {
        remap.push(circle.len());
        circle.push(raw.circle[k]);
        circle.extend(ctx.rectify(&raw.circle[k], &raw.circle[(k + 1) % n])?);
    }

    let n_interior = raw.interior_legs.len();
    let rectify_leg = |idx: usize, leg: &Leg<Lifted<T>>| -> Result<Leg<Lifted<T>>, MedusaError> {
        let own = Some(idx);
        let with_end = in_chart(leg.side, None);
        let without_end = in_chart(leg.side, own);
        let omitted = chart(leg.side, raw.omitted(leg.side));
        let mut points = Vec::with_capacity(leg.points.len());
        let last = leg.points.len() - 1;
        for k in 0..last {
            points.push(leg.points[k]);
            let ctx = ArcContext {
                side: leg.side,
                omitted,
                obstacles: if k + 1 == last {
                    &without_end
                } else {
                    &with_end
                },
                params,
                cfg,
                budget: &budget,
            };
            points.extend(ctx.rectify(&leg.points[k], &leg.points[k + 1])?);
        }
        points.push(leg.points[last]);
        Ok(Leg {
            angle: leg.angle,
            side: leg.side,
            anchor_index: remap[leg.anchor_index],
            points,
        })
    };
    let interior_legs = raw
        .interior_legs
        .iter()
        .enumerate()
        .map(|(i, l)| rectify_leg(i, l))
        .collect::<Result<Vec<_>, _>>()?;
    let exterior_legs = raw
        .exterior_legs
        .iter()
        .enumerate()
        .map(|(i, l)| rectify_leg(n_interior + i, l))
        .collect::<Result<Vec<_>, _>>()?;

    Ok(Medusa {
        theta1: raw.theta1,
        theta2: raw.theta2,
        circle,
        interior_legs,
        exterior_legs,
        orbit1: raw.orbit1.clone(),
        orbit2: raw.orbit2.clone(),
    })
}

/// Minimum number of points kept on the circle list.
const MIN_CIRCLE_POINTS: usize = 3;

/// Removes every point whose two adjacent arcs can be merged into one
/// conventional arc without crossing a distinguished point. Anchors, leg
/// endpoints and the circle's base point 1 are kept.
pub fn prune_step<P: Located + Clone>(s: &Medusa<P>, tol: &Tolerances) -> Medusa<P> {
    let distinguished = s.distinguished();
    let n_interior = s.interior_legs.len();
    let unfold_in = Mobius::unfold(s.omitted(Side::Interior));
    let unfold_out = Mobius::unfold(s.omitted(Side::Exterior));
    let unfolded = |m: &Mobius<P::Scalar>, skip: Option<usize>| -> Vec<SpherePoint<P::Scalar>> {
        distinguished
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != skip)
            .map(|(_, &d)| m.apply(d))
            .collect()
    };
    let removable = |m: &Mobius<P::Scalar>,
                     obstacles: &[SpherePoint<P::Scalar>],
                     a: SpherePoint<P::Scalar>,
                     b: SpherePoint<P::Scalar>,
                     c: SpherePoint<P::Scalar>| {
        let (Some(w1), Some(w2), Some(w3)) = (
            m.apply(a).finite(),
            m.apply(b).finite(),
            m.apply(c).finite(),
        ) else {
            return false;
        };
        let scale = (w1 - w2).modulus_f64().max((w2 - w3).modulus_f64());
        if (w1 - w3).modulus_f64() <= tol.geom * scale {
            return false;
        }
        triangle_free(w1, w2, w3, obstacles, tol)
    };

    let mut out = s.clone();

    // Circle: cyclic, base point and anchors protected.
    let obstacles = unfolded(&unfold_in, None);
    loop {
        let mut changed = false;
        let mut i = 1;
        while i < out.circle.len() && out.circle.len() > MIN_CIRCLE_POINTS {
            let protected = out.legs().any(|l| l.anchor_index == i);
            let n = out.circle.len();
            if !protected {
                let (a, b, c) = (
                    out.circle[i - 1].pos(),
                    out.circle[i].pos(),
                    out.circle[(i + 1) % n].pos(),
                );
                if removable(&unfold_in, &obstacles, a, b, c) {
                    out.circle.remove(i);
                    for leg in out
                        .interior_legs
                        .iter_mut()
                        .chain(out.exterior_legs.iter_mut())
                    {
                        if leg.anchor_index > i {
                            leg.anchor_index -= 1;
                        }
                    }
                    changed = true;
                    continue;
                }
            }
            i += 1;
        }
        if !changed {
            break;
        }
    }

    // Legs: anchor and endpoint protected.
    for (idx, leg) in out
        .interior_legs
        .iter_mut()
        .chain(out.exterior_legs.iter_mut())
        .enumerate()
    {
        let m = if idx < n_interior {
            &unfold_in
        } else {
            &unfold_out
        };
        let obstacles = unfolded(m, Some(idx));
        loop {
            let mut changed = false;
            let mut i = 1;
            while i + 1 < leg.points.len() {
                let (a, b, c) = (
                    leg.points[i - 1].pos(),
                    leg.points[i].pos(),
                    leg.points[i + 1].pos(),
                );
                if removable(m, &obstacles, a, b, c) {
                    leg.points.remove(i);
                    changed = true;
                } else {
                    i += 1;
                }
            }
            if !changed {
                break;
            }
        }
    }
    out
}

/// One step: parameters from the current critical-value positions, then
/// pullback, rectification and pruning.
#[derive(Debug, Clone)]
pub struct IterationStep<T = f64> {
    pub params: MapParams<T>,
    pub medusa: Medusa<Lifted<T>>,
}

impl<T: Real> IterationStep<T> {
    pub fn to_f64(&self) -> IterationStep {
        IterationStep {
            params: self.params.to_f64(),
            medusa: self.medusa.map_points(Lifted::to_f64),
        }
    }
}

pub fn iterate_once<P: Located + Clone>(
    s: &Medusa<P>,
    cfg: &IterationConfig,
) -> Result<IterationStep<P::Scalar>, MedusaError> {
    let params = params_from_critical_values(s.x1(), s.y1(), &cfg.tol)?;
    let raw = pullback_step(s, &params, cfg)?;
    let rectified = rectify_step(&raw, &params, cfg)?;
    let medusa = prune_step(&rectified, &cfg.tol);
    Ok(IterationStep { params, medusa })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    /// The step stopped shrinking without leaving the neighbourhood of the
    /// best iterate, the iteration budget ran out, or the representation broke
    /// down numerically after the step had dropped below `sqrt(tol)`.
    Stagnated,
    /// The step grew back above `sqrt(tol)` after having dropped below it.
    Diverged,
    Degenerate,
    NotMateable,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::Stagnated => "stagnated",
            Status::Diverged => "diverged",
            Status::Degenerate => "degenerate",
            Status::NotMateable => "not-mateable",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            Status::Converged,
            Status::Stagnated,
            Status::Diverged,
            Status::Degenerate,
            Status::NotMateable,
        ]
        .into_iter()
        .find(|st| st.as_str() == s)
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatingConfig {
    pub max_iter: usize,
    /// Chordal step on `(u, v)` below which an iteration counts as converged.
    pub tol: f64,
    pub patience: usize,
    pub q_max: u32,
    /// Run even when the angles lie in conjugate limbs.
    pub allow_unmateable: bool,
    pub sampling: SamplingConfig,
    pub iteration: IterationConfig,
    pub precision: Precision,
}

/// Arithmetic used for the Medusa points and maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    /// Double-double when either angle is strictly preperiodic, `f64` otherwise.
    Auto,
    Double,
    DoubleDouble,
}

impl Precision {
    /// `Double` or `DoubleDouble` for a run of `theta1 ⋈ theta2`.
    pub fn resolve(self, theta1: RationalAngle, theta2: RationalAngle) -> Precision {
        match self {
            Precision::Auto if theta1.is_periodic() && theta2.is_periodic() => Precision::Double,
            Precision::Auto => Precision::DoubleDouble,
            fixed => fixed,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Precision::Auto => "auto",
            Precision::Double => "double",
            Precision::DoubleDouble => "double-double",
        }
    }
}

impl std::fmt::Display for Precision {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Default for MatingConfig {
    fn default() -> Self {
        MatingConfig {
            max_iter: 200,
            tol: 1e-10,
            patience: 3,
            q_max: crate::angles::DEFAULT_Q_MAX,
            allow_unmateable: false,
            sampling: SamplingConfig::default(),
            iteration: IterationConfig::default(),
            precision: Precision::Auto,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MatingResult {
    pub theta1: RationalAngle,
    pub theta2: RationalAngle,
    pub mateability: Mateability,
    /// `(a_n, b_n)` for `n = 1, 2, …`.
    pub trace: Vec<MapParams>,
    /// `(u_n, v_n)`, the critical values of `trace[n − 1]`.
    pub critical_values: Vec<(SpherePoint, SpherePoint)>,
    /// Chordal step between consecutive critical-value pairs; `steps[0]` is `None`.
    pub steps: Vec<Option<f64>>,
    pub status: Status,
    pub best_index: Option<usize>,
    pub iterations_run: usize,
    pub message: Option<String>,
    pub final_medusa: Option<Medusa>,
    /// Arithmetic the iteration ran in; never `Auto`.
    pub precision: Precision,
}

impl MatingResult {
    /// The converged limit, or the best iterate otherwise.
    pub fn best(&self) -> Option<MapParams> {
        if self.status == Status::Converged {
            self.trace.last().copied()
        } else {
            self.best_index.map(|i| self.trace[i])
        }
    }
}

fn step_between<T: Real>(
    p: (SpherePoint<T>, SpherePoint<T>),
    q: (SpherePoint<T>, SpherePoint<T>),
) -> f64 {
    p.0.chordal(q.0).max(p.1.chordal(q.1))
}

/// Runs the Medusa iteration for `theta1 ⋈ theta2`.
pub fn run_mating(
    theta1: RationalAngle,
    theta2: RationalAngle,
    cfg: &MatingConfig,
) -> MatingResult {
    run_mating_observed(theta1, theta2, cfg, |_, _| {})
}

/// Like [`run_mating`], calling `observe(previous, step)` after every iteration.
pub fn run_mating_observed<F>(
    theta1: RationalAngle,
    theta2: RationalAngle,
    cfg: &MatingConfig,
    mut observe: F,
) -> MatingResult
where
    F: FnMut(&Medusa, &IterationStep),
{
    let mateability = check_mateable(theta1, theta2, cfg.q_max);
    let mut result = MatingResult {
        theta1,
        theta2,
        mateability,
        trace: Vec::new(),
        critical_values: Vec::new(),
        steps: Vec::new(),
        status: Status::Stagnated,
        best_index: None,
        iterations_run: 0,
        message: None,
        final_medusa: None,
        precision: cfg.precision.resolve(theta1, theta2),
    };
    match mateability {
        Mateability::NotMateable if !cfg.allow_unmateable => {
            result.status = Status::NotMateable;
            result.message = Some(format!("{theta1} and {theta2} lie in conjugate limbs"));
            return result;
        }
        Mateability::Unknown => {
            log::warn!(
                "limb of {theta1} or {theta2} not found with q <= {}; proceeding",
                cfg.q_max
            );
        }
        _ => {}
    }

    let start = standard_medusa(theta1, theta2, &cfg.sampling);
    match result.precision {
        Precision::Auto | Precision::Double => {
            iterate_mating(&mut result, start, cfg, &mut observe)
        }
        Precision::DoubleDouble => {
            let start = start.map_points(|&p| SpherePoint::<DoubleDouble>::from_f64(p));
            iterate_mating(&mut result, start, cfg, &mut |s, step| {
                observe(&s.map_points(|p| p.to_f64()), &step.to_f64())
            })
        }
    }
    result
}

type Observer<'a, T> = dyn FnMut(&Medusa<SpherePoint<T>>, &IterationStep<T>) + 'a;

fn iterate_mating<T: Real>(
    result: &mut MatingResult,
    mut s: Medusa<SpherePoint<T>>,
    cfg: &MatingConfig,
    observe: &mut Observer<'_, T>,
) {
    let mut previous_uv = None;
    let mut below = 0usize;
    let mut growth = 0usize;
    let mut min_step = f64::INFINITY;
    let mut status = None;
    for n in 1..=cfg.max_iter {
        let uv = (s.x1(), s.y1());
        let step = match iterate_once(&s, &cfg.iteration) {
            Ok(step) => step,
            Err(e) => {
                log::info!("iteration {n}: {e}");
                result.message = Some(e.to_string());
                // A breakdown after the iteration has settled is the precision
                // limit of the representation rather than a bad run.
                status = Some(if min_step < cfg.tol.sqrt() {
                    Status::Stagnated
                } else {
                    Status::Degenerate
                });
                break;
            }
        };
        observe(&s, &step);
        result.iterations_run = n;
        result.trace.push(step.params.to_f64());
        let delta = previous_uv.map(|prev| step_between(prev, uv));
        previous_uv = Some(uv);
        result.critical_values.push((uv.0.to_f64(), uv.1.to_f64()));
        result.steps.push(delta);
        s = step.medusa.strip();
        log::debug!(
            "iteration {n}: a = {}, b = {}, step = {:?}, points = {}",
            step.params.a.to_c64(),
            step.params.b.to_c64(),
            delta,
            s.point_count()
        );

        let Some(delta) = delta else { continue };
        if delta < min_step {
            min_step = delta;
            result.best_index = Some(n - 1);
        }
        if delta < cfg.tol {
            below += 1;
            if below >= cfg.patience {
                status = Some(Status::Converged);
                break;
            }
        } else {
            below = 0;
        }
        let previous = result.steps[n - 2];
        if min_step < cfg.tol.sqrt() && delta >= cfg.tol && previous.is_some_and(|p| delta > p) {
            growth += 1;
            if growth >= cfg.patience {
                status = Some(if delta > cfg.tol.sqrt() {
                    Status::Diverged
                } else {
                    Status::Stagnated
                });
                break;
            }
        } else {
            growth = 0;
        }
    }
    if result.best_index.is_none() && !result.trace.is_empty() {
        result.best_index = Some(0);
    }
    result.status = status.unwrap_or(Status::Stagnated);
    result.final_medusa = Some(s.map_points(|p| p.to_f64()));
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn a(s: &str) -> RationalAngle {
        s.parse().unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn params_examples() {
        let p =
            params_from_critical_values(SpherePoint::ZERO, SpherePoint::Infinity, &tol()).unwrap();
        assert_eq!((p.a, p.b), (c(1., 0.), c(0., 0.)));

        let p =
            params_from_critical_values(SpherePoint::new(2., 0.), SpherePoint::new(3., 0.), &tol())
                .unwrap();
        assert_abs_diff_eq!((p.a - c(-3., 0.)).norm(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!((p.b - c(-1., 0.)).norm(), 0.0, epsilon = 1e-14);
        assert_eq!(p.eval(SpherePoint::ZERO), SpherePoint::new(2., 0.));
        assert_eq!(p.eval(SpherePoint::Infinity), SpherePoint::new(3., 0.));
        assert_eq!(p.eval(SpherePoint::ONE), SpherePoint::ONE);

        let p = params_from_critical_values(
            SpherePoint::new(0.5, 0.),
            SpherePoint::new(2., 0.),
            &tol(),
        )
        .unwrap();
        assert_abs_diff_eq!((p.a - c(2. / 3., 0.)).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((p.b - c(1. / 3., 0.)).norm(), 0.0, epsilon = 1e-15);

        let p =
            params_from_critical_values(SpherePoint::Infinity, SpherePoint::new(0.25, 0.5), &tol())
                .unwrap();
        assert_eq!((p.a, p.b), (c(0.25, 0.5), c(1., 0.)));
        assert_eq!(p.eval(SpherePoint::ZERO), SpherePoint::Infinity);
    }

    #[test]
    fn params_reject_collisions() {
        for (u, v) in [
            (SpherePoint::new(2., 0.), SpherePoint::new(2., 0.)),
            (SpherePoint::ONE, SpherePoint::new(2., 0.)),
            (SpherePoint::new(0.3, 0.), SpherePoint::ONE),
            (SpherePoint::Infinity, SpherePoint::Infinity),
        ] {
            assert!(matches!(
                params_from_critical_values(u, v, &tol()),
                Err(MedusaError::DegenerateParameters(_))
            ));
        }
    }

    #[test]
    fn inversion_conjugacy() {
        let p = MapParams::new(c(0.3, 0.2), c(-0.7, 1.1)).unwrap();
        let q = p.conjugate_by_inversion();
        for z in [c(0.4, -0.3), c(2.0, 1.0), c(-0.1, 0.05)] {
            let lhs = q.eval(SpherePoint::Finite(z));
            let rhs = p.eval(SpherePoint::Finite(z.inv())).recip();
            assert!(lhs.chordal(rhs) < 1e-13);
        }
    }

    #[test]
    fn standard_medusa_examples() {
        let cfg = SamplingConfig::default();
        let s = standard_medusa(RationalAngle::ZERO, RationalAngle::ZERO, &cfg);
        assert_eq!(s.interior_legs.len(), 1);
        assert_eq!(s.exterior_legs.len(), 1);
        assert_eq!(s.interior_legs[0].anchor_index, 0);
        assert_eq!(s.exterior_legs[0].anchor_index, 0);
        assert_eq!(s.x1(), SpherePoint::new(0.5, 0.0));
        assert_eq!(s.y1(), SpherePoint::new(2.0, 0.0));
        s.validate().unwrap();

        let s = standard_medusa(a("1/3"), RationalAngle::ZERO, &cfg);
        let angles: Vec<_> = s.interior_legs.iter().map(|l| l.angle).collect();
        assert_eq!(angles, vec![a("1/3"), a("2/3")]);
        for leg in &s.interior_legs {
            let end = leg.endpoint().finite().unwrap();
            assert_abs_diff_eq!(end.norm(), 0.5, epsilon = 1e-15);
            let turns =
                end.arg().rem_euclid(2.0 * std::f64::consts::PI) / (2.0 * std::f64::consts::PI);
            assert_abs_diff_eq!(turns, leg.angle.to_f64(), epsilon = 1e-12);
        }
        assert_eq!(s.exterior_legs.len(), 1);

        let s = standard_medusa(a("1/6"), a("1/7"), &cfg);
        let int: Vec<_> = s.interior_legs.iter().map(|l| l.angle).collect();
        let ext: Vec<_> = s.exterior_legs.iter().map(|l| l.embedded_angle()).collect();
        assert_eq!(int, vec![a("1/6"), a("1/3"), a("2/3")]);
        assert_eq!(ext, vec![a("6/7"), a("5/7"), a("3/7")]);
        s.validate().unwrap();
        // gaps of at most 1/16 turn
        let n = s.circle.len();
        for k in 0..n {
            let z1 = s.circle[k].finite().unwrap();
            let z2 = s.circle[(k + 1) % n].finite().unwrap();
            let gap = (z2 / z1).arg().rem_euclid(2.0 * std::f64::consts::PI);
            assert!(gap <= 2.0 * std::f64::consts::PI / 16.0 + 1e-12);
        }
        assert!(s.legs().all(|l| l.points.len() >= 3));
    }

    #[test]
    fn pullback_first_step_trivial_mating() {
        let cfg = IterationConfig::default();
        let s = standard_medusa(
            RationalAngle::ZERO,
            RationalAngle::ZERO,
            &SamplingConfig::default(),
        );
        let params = params_from_critical_values(s.x1(), s.y1(), &cfg.tol).unwrap();
        let raw = pullback_step(&s, &params, &cfg).unwrap();
        assert_eq!(raw.circle.len(), 2 * s.circle.len());
        assert_eq!(raw.circle[0].pos, SpherePoint::ONE);
        assert_eq!(raw.circle[s.circle.len()].pos, SpherePoint::new(-1.0, 0.0));
        // Periodic θ1 = 0: the interior leg lifts onto the critical point 0.
        assert_eq!(raw.x1(), SpherePoint::ZERO);
        assert_eq!(raw.y1(), SpherePoint::Infinity);
        for p in raw
            .circle
            .iter()
            .chain(raw.legs().flat_map(|l| l.points.iter()))
        {
            assert!(params.eval(p.pos).chordal(p.parent.image()) < 1e-9);
        }
    }

    #[test]
    fn pullback_periodic_endpoint_is_critical_point() {
        let cfg = IterationConfig::default();
        let s = standard_medusa(a("1/7"), a("1/3"), &SamplingConfig::default());
        let params = params_from_critical_values(s.x1(), s.y1(), &cfg.tol).unwrap();
        let raw = pullback_step(&s, &params, &cfg).unwrap();
        // The leg of 4/7 doubles to 1/7 = θ1, so it lifts x₁ ↦ 0.
        let leg = raw
            .interior_legs
            .iter()
            .find(|l| l.angle == a("4/7"))
            .unwrap();
        assert_eq!(leg.endpoint(), SpherePoint::ZERO);
        let leg = raw
            .exterior_legs
            .iter()
            .find(|l| l.angle == a("2/3"))
            .unwrap();
        assert_eq!(leg.endpoint(), SpherePoint::Infinity);
    }

    #[test]
    fn rectify_is_identity_when_arcs_already_conventional() {
        // With θ2 = 0 and the first step done, y₁ = ∞ and the lifted circle
        // arcs of z ↦ z² are arcs of the unit circle; nothing needs inserting
        // once the segment images are straight. Use R = z² directly.
        let cfg = IterationConfig::default();
        let mut s = standard_medusa(
            RationalAngle::ZERO,
            RationalAngle::ZERO,
            &SamplingConfig::default(),
        );
        // Put the Medusa at the fixed point of the iteration for z².
        s.interior_legs[0].points = vec![
            SpherePoint::ONE,
            SpherePoint::new(0.5, 0.0),
            SpherePoint::ZERO,
        ];
        s.exterior_legs[0].points = vec![
            SpherePoint::ONE,
            SpherePoint::new(2.0, 0.0),
            SpherePoint::Infinity,
        ];
        let params = MapParams::squaring();
        let raw = pullback_step(&s, &params, &cfg).unwrap();
        let rect = rectify_step(&raw, &params, &cfg).unwrap();
        // Legs are radial segments and stay untouched.
        for (r, q) in raw.legs().zip(rect.legs()) {
            assert_eq!(r.points, q.points);
        }
    }

    #[test]
    fn rectify_inserts_lifted_midpoints() {
        let cfg = IterationConfig::default();
        let s = standard_medusa(a("1/7"), a("1/3"), &SamplingConfig::default());
        let params = params_from_critical_values(s.x1(), s.y1(), &cfg.tol).unwrap();
        let raw = pullback_step(&s, &params, &cfg).unwrap();
        let rect = rectify_step(&raw, &params, &cfg).unwrap();
        assert!(rect.point_count() >= raw.point_count());
        rect.validate().unwrap();
        for p in rect
            .circle
            .iter()
            .chain(rect.legs().flat_map(|l| l.points.iter()))
        {
            assert!(params.eval(p.pos).chordal(p.parent.image()) < 1e-8);
        }
    }

    #[test]
    fn prune_collinear_and_blocked() {
        // Hand-built Medusa: θ1 = θ2 = 0, x₁ ↦ 0, y₁ ↦ ∞, so arcs are segments.
        let mut s = standard_medusa(
            RationalAngle::ZERO,
            RationalAngle::ZERO,
            &SamplingConfig::default(),
        );
        s.interior_legs[0].points = vec![
            SpherePoint::ONE,
            SpherePoint::new(0.75, 0.0),
            SpherePoint::new(0.5, 0.0),
            SpherePoint::ZERO,
        ];
        s.exterior_legs[0].points = vec![
            SpherePoint::ONE,
            SpherePoint::new(2.0, 0.0),
            SpherePoint::Infinity,
        ];
        let pruned = prune_step(&s, &tol());
        // Collinear leg points go; the circle keeps enough points to surround 0.
        assert_eq!(pruned.interior_legs[0].points.len(), 2);
        assert!(pruned.circle.len() >= 3);
        pruned.validate().unwrap();
        // The pruned circle still winds once around the interior endpoint.
        let poly: Vec<_> = pruned.circle.iter().map(|p| p.finite().unwrap()).collect();
        assert_eq!(
            crate::geometry::winding_number(&poly, c(0.0, 0.0), 1e-9).unwrap(),
            1
        );
        assert_eq!(prune_step(&pruned, &tol()), pruned);
    }

    #[test]
    fn prune_keeps_point_guarding_obstacle() {
        let mut s = standard_medusa(
            RationalAngle::ZERO,
            RationalAngle::ZERO,
            &SamplingConfig::default(),
        );
        s.interior_legs[0].points = vec![
            SpherePoint::ONE,
            SpherePoint::new(0.5, 0.5),
            SpherePoint::ZERO,
        ];
        s.exterior_legs[0].points = vec![
            SpherePoint::ONE,
            SpherePoint::new(1.5, 0.0),
            SpherePoint::new(1.2, -0.6),
            SpherePoint::Infinity,
        ];
        // The bend of the interior leg only has its own endpoint as a vertex.
        let pruned = prune_step(&s, &tol());
        assert_eq!(pruned.interior_legs[0].points.len(), 2);

        let mut t = standard_medusa(
            RationalAngle::ZERO,
            RationalAngle::ZERO,
            &SamplingConfig::default(),
        );
        t.interior_legs[0].points = vec![SpherePoint::ONE, SpherePoint::new(-0.5, 0.1)];
        t.exterior_legs[0].points = vec![
            SpherePoint::ONE,
            SpherePoint::new(3.0, 0.0),
            SpherePoint::Infinity,
        ];
        t.circle = vec![
            SpherePoint::ONE,
            SpherePoint::new(0.0, 1.0),
            SpherePoint::new(-1.0, 0.0),
            SpherePoint::new(0.0, -1.0),
        ];
        // Dropping i or −1 would cut x₁ off; only −i may go.
        let pruned = prune_step(&t, &tol());
        assert_eq!(
            pruned.circle,
            vec![
                SpherePoint::ONE,
                SpherePoint::new(0.0, 1.0),
                SpherePoint::new(-1.0, 0.0)
            ]
        );
    }

    #[test]
    fn iterate_once_first_params() {
        let cfg = IterationConfig::default();
        let s = standard_medusa(
            RationalAngle::ZERO,
            RationalAngle::ZERO,
            &SamplingConfig::default(),
        );
        let step = iterate_once(&s, &cfg).unwrap();
        assert_abs_diff_eq!(
            (step.params.a - c(2. / 3., 0.)).norm(),
            0.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            (step.params.b - c(1. / 3., 0.)).norm(),
            0.0,
            epsilon = 1e-15
        );
        assert_eq!(step.medusa.circle[0].pos, SpherePoint::ONE);
    }

    #[test]
    fn run_trivial_mating() {
        let r = run_mating(
            RationalAngle::ZERO,
            RationalAngle::ZERO,
            &MatingConfig::default(),
        );
        assert_eq!(r.status, Status::Converged);
        let p = r.best().unwrap();
        assert!((p.a - c(1., 0.)).norm() < 1e-9 && p.b.norm() < 1e-9);
    }

    #[test]
    fn run_refuses_conjugate_limbs() {
        let r = run_mating(a("1/3"), a("1/3"), &MatingConfig::default());
        assert_eq!(r.status, Status::NotMateable);
        assert!(r.trace.is_empty());
    }

    #[test]
    fn precision_resolution() {
        assert_eq!(
            Precision::Auto.resolve(a("1/7"), a("1/3")),
            Precision::Double
        );
        assert_eq!(
            Precision::Auto.resolve(a("1/5"), a("1/2")),
            Precision::DoubleDouble
        );
        assert_eq!(
            Precision::Auto.resolve(a("1/4"), a("0/1")),
            Precision::DoubleDouble
        );
        assert_eq!(
            Precision::Double.resolve(a("1/4"), a("1/4")),
            Precision::Double
        );
        assert_eq!(
            Precision::DoubleDouble.resolve(a("0/1"), a("0/1")),
            Precision::DoubleDouble
        );
        let r = run_mating(a("1/2"), a("0/1"), &MatingConfig::default());
        assert_eq!(r.precision, Precision::DoubleDouble);
    }

    #[test]
    fn precisions_agree_on_periodic_pair() {
        let run = |precision| {
            let cfg = MatingConfig {
                precision,
                ..MatingConfig::default()
            };
            run_mating(a("1/7"), a("1/3"), &cfg)
        };
        let (d, dd) = (run(Precision::Double), run(Precision::DoubleDouble));
        assert_eq!(
            (d.status, dd.status),
            (Status::Converged, Status::Converged)
        );
        let (p, q) = (d.best().unwrap(), dd.best().unwrap());
        assert!((p.a - q.a).norm() + (p.b - q.b).norm() < 1e-9);
        assert!(dd.final_medusa.unwrap().point_count() > 0);
    }

    #[test]
    fn double_double_lift_is_exact_at_the_critical_point() {
        let s: Medusa<SpherePoint<DoubleDouble>> =
            standard_medusa(a("1/7"), a("1/3"), &SamplingConfig::default())
                .map_points(|&p| SpherePoint::from_f64(p));
        let cfg = IterationConfig::default();
        let params = params_from_critical_values(s.x1(), s.y1(), &cfg.tol).unwrap();
        let raw = pullback_step(&s, &params, &cfg).unwrap();
        let leg = raw
            .interior_legs
            .iter()
            .find(|l| l.angle == a("4/7"))
            .unwrap();
        assert_eq!(leg.endpoint(), SpherePoint::zero());
        for p in raw
            .circle
            .iter()
            .chain(raw.legs().flat_map(|l| l.points.iter()))
        {
            assert!(params.eval(p.pos).chordal(p.parent.image()) < 1e-25);
        }
    }

    #[test]
    fn status_names_round_trip() {
        for s in [
            Status::Converged,
            Status::Stagnated,
            Status::Diverged,
            Status::Degenerate,
            Status::NotMateable,
        ] {
            assert_eq!(Status::parse(s.as_str()), Some(s));
        }
    }
}
