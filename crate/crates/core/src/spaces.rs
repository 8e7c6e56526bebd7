//! Compact metric spaces and the homeomorphisms acting on them.
//!
//! Torus points carry either exact rational coordinates or plain floats.
//! Exact points are iterated with integer arithmetic, which is what makes
//! 60-step orbits of a hyperbolic map meaningful: a float orbit loses all
//! precision after roughly 35 iterates of the cat map.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for metric and inverse identities.
pub const FLOAT_TOL: f64 = 1e-9;

const MAX_ENTRY: i64 = 1 << 20;
const MAX_DENOMINATOR: i64 = 1 << 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn reverse(self) -> Self {
        match self {
            Direction::Forward => Direction::Backward,
            Direction::Backward => Direction::Forward,
        }
    }
}

/// Anything with a metric and an invertible map. Implemented by
/// [`SystemHandle`]; tests provide their own doubles.
pub trait Dynamics: Sync {
    fn name(&self) -> &str;
    fn apply(&self, p: &Point, dir: Direction) -> Result<Point>;
    fn dist(&self, a: &Point, b: &Point) -> Result<f64>;

    fn forward(&self, p: &Point) -> Result<Point> {
        self.apply(p, Direction::Forward)
    }

    fn backward(&self, p: &Point) -> Result<Point> {
        self.apply(p, Direction::Backward)
    }

    /// Iterate `|k|` times in the direction given by the sign of `k`.
    fn iterate(&self, p: &Point, k: i64) -> Result<Point> {
        let dir = if k >= 0 { Direction::Forward } else { Direction::Backward };
        let mut q = p.clone();
        for _ in 0..k.unsigned_abs() {
            q = self.apply(&q, dir)?;
        }
        Ok(q)
    }
}

// ---------------------------------------------------------------------------
// Matrices
// ---------------------------------------------------------------------------

/// Integer 2x2 matrix with determinant ±1 and |trace| > 2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "[[i64; 2]; 2]", into = "[[i64; 2]; 2]")]
pub struct HyperbolicMatrix {
    m: [[i64; 2]; 2],
}

impl HyperbolicMatrix {
    /// The cat map `[[2,1],[1,1]]`.
    pub const CAT: HyperbolicMatrix = HyperbolicMatrix { m: [[2, 1], [1, 1]] };

    pub fn new(m: [[i64; 2]; 2]) -> Result<Self> {
        if m.iter().flatten().any(|e| e.abs() > MAX_ENTRY) {
            return Err(Error::InvalidParameter(format!("matrix entries of {m:?} exceed {MAX_ENTRY}")));
        }
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if det.abs() != 1 {
            return Err(Error::NotUnimodular(m));
        }
        if (m[0][0] + m[1][1]).abs() <= 2 {
            return Err(Error::NonHyperbolic(m));
        }
        Ok(Self { m })
    }

    pub fn entries(&self) -> [[i64; 2]; 2] {
        self.m
    }

    pub fn det(&self) -> i64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn trace(&self) -> i64 {
        self.m[0][0] + self.m[1][1]
    }

    /// Exact integer inverse, valid because det = ±1.
    pub fn inverse(&self) -> [[i64; 2]; 2] {
        let d = self.det();
        let [[a, b], [c, e]] = self.m;
        [[d * e, -d * b], [-d * c, d * a]]
    }

    pub fn matrix_for(&self, dir: Direction) -> [[i64; 2]; 2] {
        match dir {
            Direction::Forward => self.m,
            Direction::Backward => self.inverse(),
        }
    }

    /// `A^n` for `n >= 0`, failing on i64 overflow.
    pub fn power(&self, n: u32) -> Result<[[i64; 2]; 2]> {
        let mut acc = [[1i64, 0], [0, 1]];
        for _ in 0..n {
            acc = mat_mul_checked(&acc, &self.m).ok_or(Error::Overflow("matrix power"))?;
        }
        Ok(acc)
    }

    pub fn splitting(&self) -> Splitting {
        Splitting::of(self)
    }
}

impl TryFrom<[[i64; 2]; 2]> for HyperbolicMatrix {
    type Error = Error;
    fn try_from(m: [[i64; 2]; 2]) -> Result<Self> {
        Self::new(m)
    }
}

impl From<HyperbolicMatrix> for [[i64; 2]; 2] {
    fn from(m: HyperbolicMatrix) -> Self {
        m.m
    }
}

fn mat_mul_checked(a: &[[i64; 2]; 2], b: &[[i64; 2]; 2]) -> Option<[[i64; 2]; 2]> {
    let mut out = [[0i64; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0].checked_mul(b[0][j])?.checked_add(a[i][1].checked_mul(b[1][j])?)?;
        }
    }
    Some(out)
}

/// Eigen-splitting `E^u ⊕ E^s` of a hyperbolic matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Splitting {
    /// Signed eigenvalue with |λ| > 1.
    pub unstable: f64,
    /// Signed eigenvalue with |λ| < 1.
    pub stable: f64,
    pub unstable_dir: [f64; 2],
    pub stable_dir: [f64; 2],
}

impl Splitting {
    fn of(a: &HyperbolicMatrix) -> Self {
        let t = a.trace() as f64;
        let d = a.det() as f64;
        let disc = (t * t - 4.0 * d).sqrt();
        let (l1, l2) = ((t + disc) / 2.0, (t - disc) / 2.0);
        let (unstable, stable) = if l1.abs() > l2.abs() { (l1, l2) } else { (l2, l1) };
        let [[p, q], [r, s]] = a.m;
        let eigvec = |l: f64| -> [f64; 2] {
            let v = if q != 0 {
                [q as f64, l - p as f64]
            } else {
                [l - s as f64, r as f64]
            };
            let n = v[0].hypot(v[1]);
            [v[0] / n, v[1] / n]
        };
        Self { unstable, stable, unstable_dir: eigvec(unstable), stable_dir: eigvec(stable) }
    }

    /// Coordinates `(α, β)` with `v = α·e_u + β·e_s`.
    pub fn decompose(&self, v: [f64; 2]) -> (f64, f64) {
        let [u0, u1] = self.unstable_dir;
        let [s0, s1] = self.stable_dir;
        let det = u0 * s1 - s0 * u1;
        ((v[0] * s1 - s0 * v[1]) / det, (u0 * v[1] - v[0] * u1) / det)
    }

    pub fn compose(&self, alpha: f64, beta: f64) -> [f64; 2] {
        [
            alpha * self.unstable_dir[0] + beta * self.stable_dir[0],
            alpha * self.unstable_dir[1] + beta * self.stable_dir[1],
        ]
    }

    /// Norm of the oblique projections onto either eigenline (1 when the
    /// eigenlines are orthogonal).
    pub fn projection_norm(&self) -> f64 {
        let [u0, u1] = self.unstable_dir;
        let [s0, s1] = self.stable_dir;
        1.0 / (u0 * s1 - s0 * u1).abs()
    }

    /// Shadowing constant `C` with `ε ≤ C·δ`: the two geometric series of
    /// the spectral correction, scaled by the projection norm.
    pub fn shadow_constant(&self) -> f64 {
        self.projection_norm() * (1.0 / (1.0 - self.stable.abs()) + 1.0 / (self.unstable.abs() - 1.0))
    }
}

// ---------------------------------------------------------------------------
// Torus points
// ---------------------------------------------------------------------------

/// A point of `T² = R²/Z²`, coordinates reduced into `[0,1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Torus2 {
    /// `num / den` per coordinate, reduced to lowest terms.
    Exact { num: [i64; 2], den: i64 },
    Real([f64; 2]),
}

fn reduce_unit(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn lcm(a: i64, b: i64) -> Option<i64> {
    (a / gcd(a, b)).checked_mul(b)
}

/// Signed representative of a torus difference in `(-1/2, 1/2]`.
pub fn wrap_half(x: f64) -> f64 {
    let r = x - x.round();
    if r <= -0.5 {
        r + 1.0
    } else {
        r
    }
}

impl Torus2 {
    pub fn real(x: f64, y: f64) -> Self {
        Torus2::Real([reduce_unit(x), reduce_unit(y)])
    }

    pub fn exact(num: [i64; 2], den: i64) -> Result<Self> {
        if den <= 0 || den > MAX_DENOMINATOR {
            return Err(Error::InvalidParameter(format!("denominator {den} out of range")));
        }
        let n = [num[0].rem_euclid(den), num[1].rem_euclid(den)];
        let g = gcd(gcd(n[0], n[1]), den);
        Ok(Torus2::Exact { num: [n[0] / g, n[1] / g], den: den / g })
    }

    pub fn origin() -> Self {
        Torus2::Exact { num: [0, 0], den: 1 }
    }

    pub fn coords(&self) -> [f64; 2] {
        match *self {
            Torus2::Exact { num, den } => [num[0] as f64 / den as f64, num[1] as f64 / den as f64],
            Torus2::Real(c) => c,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Torus2::Exact { .. })
    }

    pub fn to_real(&self) -> Self {
        Torus2::Real(self.coords())
    }

    /// `-x mod 1`.
    pub fn neg(&self) -> Self {
        match *self {
            Torus2::Exact { num, den } => {
                Torus2::Exact { num: [(den - num[0]) % den, (den - num[1]) % den], den }
            }
            Torus2::Real([x, y]) => Torus2::real(-x, -y),
        }
    }

    pub fn apply_matrix(&self, m: &[[i64; 2]; 2]) -> Self {
        match *self {
            Torus2::Exact { num, den } => {
                let d = den as i128;
                let row = |r: usize| {
                    ((m[r][0] as i128 * num[0] as i128 + m[r][1] as i128 * num[1] as i128).rem_euclid(d)) as i64
                };
                Torus2::Exact { num: [row(0), row(1)], den }
            }
            Torus2::Real([x, y]) => {
                let a = m[0][0] as f64 * x + m[0][1] as f64 * y;
                let b = m[1][0] as f64 * x + m[1][1] as f64 * y;
                Torus2::real(a, b)
            }
        }
    }

    /// Translate by `(dx, dy)/step_den`, staying exact when `self` is exact.
    pub fn offset(&self, dx: i64, dy: i64, step_den: i64) -> Result<Self> {
        match *self {
            Torus2::Exact { num, den } => {
                let l = lcm(den, step_den).ok_or(Error::Overflow("grid denominator"))?;
                let (a, b) = (l / den, l / step_den);
                Torus2::exact([num[0] * a + dx * b, num[1] * a + dy * b], l)
            }
            Torus2::Real([x, y]) => {
                Ok(Torus2::real(x + dx as f64 / step_den as f64, y + dy as f64 / step_den as f64))
            }
        }
    }

    /// Translate by a real vector (always produces a real point).
    pub fn shifted(&self, v: [f64; 2]) -> Self {
        let [x, y] = self.coords();
        Torus2::real(x + v[0], y + v[1])
    }

    /// Smallest lift of `self - other`, each coordinate in `(-1/2, 1/2]`.
    pub fn diff(&self, other: &Torus2) -> [f64; 2] {
        match (self, other) {
            (Torus2::Exact { num: a, den: da }, Torus2::Exact { num: b, den: db }) if da == db => {
                let d = *da;
                let w = |x: i64| {
                    let r = x.rem_euclid(d);
                    if 2 * r > d {
                        (r - d) as f64 / d as f64
                    } else {
                        r as f64 / d as f64
                    }
                };
                [w(a[0] - b[0]), w(a[1] - b[1])]
            }
            _ => {
                let (p, q) = (self.coords(), other.coords());
                [wrap_half(p[0] - q[0]), wrap_half(p[1] - q[1])]
            }
        }
    }

    /// Canonical antipodal representative: the lexicographically smaller of
    /// `{x, -x mod 1}`.
    pub fn canonical_antipodal(&self) -> Self {
        let n = self.neg();
        let smaller = match (self, &n) {
            (Torus2::Exact { num: a, .. }, Torus2::Exact { num: b, .. }) => a <= b,
            _ => {
                let (a, b) = (self.coords(), n.coords());
                a[0] < b[0] || (a[0] == b[0] && a[1] <= b[1])
            }
        };
        if smaller {
            *self
        } else {
            n
        }
    }
}

impl fmt::Display for Torus2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [x, y] = self.coords();
        write!(f, "({x:.12}, {y:.12})")
    }
}

/// `x ↦ A·x mod 1` or its exact inverse.
pub fn torus_apply(a: &HyperbolicMatrix, x: &Torus2, dir: Direction) -> Torus2 {
    x.apply_matrix(&a.matrix_for(dir))
}

/// Flat metric: Euclidean distance minimised over integer translates.
/// Coordinates live in `[0,1)`, so only the translates `{-1,0,1}²` matter,
/// and the minimum separates per axis.
pub fn torus_dist(x: &Torus2, y: &Torus2) -> f64 {
    let [dx, dy] = x.diff(y);
    dx.hypot(dy)
}

/// Distance on the antipodal quotient `T²/±`. Both antipodal lifts are
/// tried so the result is symmetric in floating point as well.
pub fn sphere_dist(x: &Torus2, y: &Torus2) -> f64 {
    torus_dist(x, y).min(torus_dist(x, &y.neg())).min(torus_dist(y, &x.neg()))
}

pub fn sphere_apply(a: &HyperbolicMatrix, x: &Torus2, dir: Direction) -> Torus2 {
    torus_apply(a, x, dir).canonical_antipodal()
}

// ---------------------------------------------------------------------------
// Example 1: a hyperbolic base compactified by countably many fixed points
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Example1Point {
    Base(Torus2),
    /// The ideal point `p_k`, `k >= 1`.
    Ideal(u64),
}

impl Example1Point {
    pub fn ideal(k: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidIdealIndex(k));
        }
        Ok(Example1Point::Ideal(k))
    }

    /// The anchor fixed point `p_0 = (0,0)` of the base map.
    pub fn anchor() -> Self {
        Example1Point::Base(Torus2::origin())
    }
}

/// The five-case metric on `M ∪ E`, with `d_0` the flat torus metric and
/// anchor `p_0 = (0,0)`.
pub fn example1_dist(x: &Example1Point, y: &Example1Point) -> f64 {
    let p0 = Torus2::origin();
    match (x, y) {
        (Example1Point::Base(a), Example1Point::Base(b)) => torus_dist(a, b),
        (Example1Point::Base(a), Example1Point::Ideal(k)) | (Example1Point::Ideal(k), Example1Point::Base(a)) => {
            1.0 / *k as f64 + torus_dist(a, &p0)
        }
        (Example1Point::Ideal(m), Example1Point::Ideal(k)) => {
            if m == k {
                0.0
            } else {
                1.0 / *m as f64 + 1.0 / *k as f64
            }
        }
    }
}

/// Cat map on base points, identity on ideal points.
pub fn example1_apply(a: &HyperbolicMatrix, x: &Example1Point, dir: Direction) -> Example1Point {
    match x {
        Example1Point::Base(t) => Example1Point::Base(torus_apply(a, t, dir)),
        Example1Point::Ideal(k) => Example1Point::Ideal(*k),
    }
}

// ---------------------------------------------------------------------------
// Full shift and the identity on the Cantor set
// ---------------------------------------------------------------------------

/// A finite window of a bi-infinite sequence; coordinate `i` of the point is
/// `symbols[origin + i]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ShiftPoint {
    pub symbols: Vec<u8>,
    pub origin: usize,
}

impl ShiftPoint {
    /// Window `[-radius, radius]` centred on the middle symbol.
    pub fn centered(symbols: Vec<u8>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::InvalidParameter("empty shift window".into()));
        }
        let origin = symbols.len() / 2;
        Ok(Self { symbols, origin })
    }

    pub fn lo(&self) -> i64 {
        -(self.origin as i64)
    }

    pub fn hi(&self) -> i64 {
        (self.symbols.len() - 1 - self.origin) as i64
    }

    pub fn symbol(&self, i: i64) -> Result<u8> {
        let idx = self.origin as i64 + i;
        if idx < 0 || idx >= self.symbols.len() as i64 {
            return Err(Error::WindowExhausted { needed: i, lo: self.lo(), hi: self.hi() });
        }
        Ok(self.symbols[idx as usize])
    }

    /// Largest `r` with `[-r, r]` inside the window.
    pub fn radius(&self) -> i64 {
        self.hi().min(-self.lo())
    }
}

/// Left shift `(σx)_i = x_{i+1}`: the window origin moves by one.
pub fn shift_apply(x: &ShiftPoint, dir: Direction) -> Result<ShiftPoint> {
    let origin = match dir {
        Direction::Forward => x.origin as i64 + 1,
        Direction::Backward => x.origin as i64 - 1,
    };
    if origin < 0 || origin >= x.symbols.len() as i64 {
        let needed = match dir {
            Direction::Forward => x.hi() + 1,
            Direction::Backward => x.lo() - 1,
        };
        return Err(Error::WindowExhausted { needed, lo: x.lo(), hi: x.hi() });
    }
    Ok(ShiftPoint { symbols: x.symbols.clone(), origin: origin as usize })
}

/// `2^(-j)` with `j` the least `|i|` where the sequences disagree, searched
/// over the symmetric window both points share. Agreement on the whole
/// shared window counts as equality at the stored resolution.
pub fn shift_dist(x: &ShiftPoint, y: &ShiftPoint) -> f64 {
    let r = x.radius().min(y.radius());
    for j in 0..=r {
        let differs = |i: i64| x.symbols[(x.origin as i64 + i) as usize] != y.symbols[(y.origin as i64 + i) as usize];
        if differs(j) || differs(-j) {
            return 0.5f64.powi(j as i32);
        }
    }
    0.0
}

/// A cylinder of the Cantor set `{0,1}^N`, stored as its binary prefix.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CantorPoint {
    pub bits: Vec<u8>,
}

/// `2^(-l)` with `l` the common prefix length; 0 for identical prefixes.
/// Distinct prefixes where one extends the other cannot be compared.
pub fn cantor_dist(x: &CantorPoint, y: &CantorPoint) -> Result<f64> {
    if x.bits == y.bits {
        return Ok(0.0);
    }
    let common = x.bits.iter().zip(&y.bits).take_while(|(a, b)| a == b).count();
    if common == x.bits.len().min(y.bits.len()) {
        return Err(Error::WindowExhausted { needed: common as i64, lo: 0, hi: common as i64 - 1 });
    }
    Ok(0.5f64.powi(common as i32))
}

pub fn cantor_identity(x: &CantorPoint) -> CantorPoint {
    x.clone()
}

// ---------------------------------------------------------------------------
// Points and system handles
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointKind {
    Torus2,
    SphereQuotient,
    Example1,
    Shift,
    Cantor,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Point {
    Torus(Torus2),
    /// Canonical representative of an antipodal class.
    Sphere(Torus2),
    Example1(Example1Point),
    Shift(ShiftPoint),
    Cantor(CantorPoint),
}

impl Point {
    pub fn kind(&self) -> PointKind {
        match self {
            Point::Torus(_) => PointKind::Torus2,
            Point::Sphere(_) => PointKind::SphereQuotient,
            Point::Example1(_) => PointKind::Example1,
            Point::Shift(_) => PointKind::Shift,
            Point::Cantor(_) => PointKind::Cantor,
        }
    }

    pub fn sphere(t: Torus2) -> Self {
        Point::Sphere(t.canonical_antipodal())
    }

    /// Underlying torus coordinates for torus-based points.
    pub fn torus(&self) -> Option<&Torus2> {
        match self {
            Point::Torus(t) | Point::Sphere(t) | Point::Example1(Example1Point::Base(t)) => Some(t),
            _ => None,
        }
    }

    /// Columns used when dumping point clouds to CSV.
    pub fn csv_fields(&self) -> [String; 3] {
        match self {
            Point::Torus(t) | Point::Sphere(t) | Point::Example1(Example1Point::Base(t)) => {
                let [x, y] = t.coords();
                [x.to_string(), y.to_string(), String::new()]
            }
            Point::Example1(Example1Point::Ideal(k)) => [String::new(), String::new(), format!("p{k}")],
            Point::Shift(s) => {
                let w: String = s.symbols.iter().map(|b| char::from(b'0' + b)).collect();
                [String::new(), String::new(), format!("{w}@{}", s.origin)]
            }
            Point::Cantor(c) => {
                let w: String = c.bits.iter().map(|b| char::from(b'0' + b)).collect();
                [String::new(), String::new(), w]
            }
        }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Torus(t) => write!(f, "{t}"),
            Point::Sphere(t) => write!(f, "[{t}]"),
            Point::Example1(Example1Point::Base(t)) => write!(f, "base{t}"),
            Point::Example1(Example1Point::Ideal(k)) => write!(f, "p{k}"),
            Point::Shift(_) | Point::Cantor(_) => write!(f, "{}", self.csv_fields()[2]),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SystemKind {
    Torus { matrix: HyperbolicMatrix },
    Sphere { matrix: HyperbolicMatrix },
    Example1 { matrix: HyperbolicMatrix },
    Shift { alphabet: u8 },
    CantorIdentity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemHandle {
    pub name: String,
    pub kind: SystemKind,
}

impl SystemHandle {
    pub fn cat() -> Self {
        Self { name: "cat".into(), kind: SystemKind::Torus { matrix: HyperbolicMatrix::CAT } }
    }

    pub fn sphere() -> Self {
        Self { name: "sphere".into(), kind: SystemKind::Sphere { matrix: HyperbolicMatrix::CAT } }
    }

    pub fn example1() -> Self {
        Self { name: "example1".into(), kind: SystemKind::Example1 { matrix: HyperbolicMatrix::CAT } }
    }

    pub fn shift2() -> Self {
        Self { name: "shift2".into(), kind: SystemKind::Shift { alphabet: 2 } }
    }

    pub fn cantor_identity() -> Self {
        Self { name: "cantor-id".into(), kind: SystemKind::CantorIdentity }
    }

    /// Resolve a CLI system id; `matrix` overrides the cat matrix for the
    /// torus-based systems.
    pub fn from_id(id: &str, matrix: Option<[[i64; 2]; 2]>) -> Result<Self> {
        let matrix = match matrix {
            Some(m) => HyperbolicMatrix::new(m)?,
            None => HyperbolicMatrix::CAT,
        };
        let kind = match id {
            "cat" => SystemKind::Torus { matrix },
            "sphere" => SystemKind::Sphere { matrix },
            "example1" => SystemKind::Example1 { matrix },
            "shift2" => SystemKind::Shift { alphabet: 2 },
            "cantor-id" => SystemKind::CantorIdentity,
            other => return Err(Error::UnknownSystem(other.to_string())),
        };
        Ok(Self { name: id.to_string(), kind })
    }

    pub fn point_kind(&self) -> PointKind {
        match self.kind {
            SystemKind::Torus { .. } => PointKind::Torus2,
            SystemKind::Sphere { .. } => PointKind::SphereQuotient,
            SystemKind::Example1 { .. } => PointKind::Example1,
            SystemKind::Shift { .. } => PointKind::Shift,
            SystemKind::CantorIdentity => PointKind::Cantor,
        }
    }

    pub fn matrix(&self) -> Option<HyperbolicMatrix> {
        match self.kind {
            SystemKind::Torus { matrix } | SystemKind::Sphere { matrix } | SystemKind::Example1 { matrix } => {
                Some(matrix)
            }
            _ => None,
        }
    }

    /// Wrap torus coordinates as a point of this system (canonicalised on
    /// the sphere, a base point for Example 1).
    pub fn torus_point(&self, t: Torus2) -> Result<Point> {
        match self.kind {
            SystemKind::Torus { .. } => Ok(Point::Torus(t)),
            SystemKind::Sphere { .. } => Ok(Point::sphere(t)),
            SystemKind::Example1 { .. } => Ok(Point::Example1(Example1Point::Base(t))),
            _ => Err(Error::KindMismatch { expected: self.point_kind(), found: PointKind::Torus2 }),
        }
    }

    fn mismatch(&self, p: &Point) -> Error {
        Error::KindMismatch { expected: self.point_kind(), found: p.kind() }
    }
}

impl Dynamics for SystemHandle {
    fn name(&self) -> &str {
        &self.name
    }

    fn apply(&self, p: &Point, dir: Direction) -> Result<Point> {
        match (&self.kind, p) {
            (SystemKind::Torus { matrix }, Point::Torus(t)) => Ok(Point::Torus(torus_apply(matrix, t, dir))),
            (SystemKind::Sphere { matrix }, Point::Sphere(t)) => Ok(Point::Sphere(sphere_apply(matrix, t, dir))),
            (SystemKind::Example1 { matrix }, Point::Example1(x)) => {
                Ok(Point::Example1(example1_apply(matrix, x, dir)))
            }
            (SystemKind::Shift { .. }, Point::Shift(s)) => Ok(Point::Shift(shift_apply(s, dir)?)),
            (SystemKind::CantorIdentity, Point::Cantor(c)) => Ok(Point::Cantor(cantor_identity(c))),
            _ => Err(self.mismatch(p)),
        }
    }

    fn dist(&self, a: &Point, b: &Point) -> Result<f64> {
        match (&self.kind, a, b) {
            (SystemKind::Torus { .. }, Point::Torus(x), Point::Torus(y)) => Ok(torus_dist(x, y)),
            (SystemKind::Sphere { .. }, Point::Sphere(x), Point::Sphere(y)) => Ok(sphere_dist(x, y)),
            (SystemKind::Example1 { .. }, Point::Example1(x), Point::Example1(y)) => Ok(example1_dist(x, y)),
            (SystemKind::Shift { .. }, Point::Shift(x), Point::Shift(y)) => Ok(shift_dist(x, y)),
            (SystemKind::CantorIdentity, Point::Cantor(x), Point::Cantor(y)) => cantor_dist(x, y),
            (_, x, y) => Err(if x.kind() != self.point_kind() { self.mismatch(x) } else { self.mismatch(y) }),
        }
    }
}
