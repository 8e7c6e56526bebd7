//! Orbit segments, δ-pseudo-orbits and shadowing.
//!
//! Shadowing is constructive for the torus-based systems: the jump errors of
//! a pseudo-orbit are split along the eigenlines of the matrix, the stable
//! part is summed forward and the unstable part backward. The resulting
//! sequence is checked step by step against the map rather than by
//! re-iterating its first point, since float iteration of a hyperbolic map
//! loses one digit every couple of steps.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spaces::{
    CantorPoint, Direction, Dynamics, Example1Point, HyperbolicMatrix, Point, ShiftPoint, SystemHandle,
    SystemKind, Torus2, torus_apply, torus_dist, FLOAT_TOL,
};

/// `points[i]` is `f^(start + i)` of the base point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitSegment {
    pub system: String,
    pub start: i64,
    pub points: Vec<Point>,
}

impl OrbitSegment {
    /// Orbit of `p` over the window `[a, b]` (with `a <= 0 <= b`).
    pub fn compute<D: Dynamics + ?Sized>(dynamics: &D, p: &Point, a: i64, b: i64) -> Result<Self> {
        if a > 0 || b < 0 {
            return Err(Error::InvalidParameter(format!("window [{a}, {b}] must contain 0")));
        }
        let mut back = Vec::with_capacity(a.unsigned_abs() as usize);
        let mut q = p.clone();
        for _ in 0..a.unsigned_abs() {
            q = dynamics.backward(&q)?;
            back.push(q.clone());
        }
        back.reverse();
        let mut points = back;
        points.push(p.clone());
        let mut q = p.clone();
        for _ in 0..b {
            q = dynamics.forward(&q)?;
            points.push(q.clone());
        }
        Ok(Self { system: dynamics.name().to_string(), start: a, points })
    }

    /// Window `[a, b]` read off a periodic orbit (`cycle[0]` at index 0).
    pub fn from_cycle(system: &str, cycle: &[Point], a: i64, b: i64) -> Self {
        let p = cycle.len() as i64;
        let points = (a..=b).map(|k| cycle[k.rem_euclid(p) as usize].clone()).collect();
        Self { system: system.to_string(), start: a, points }
    }

    pub fn window(&self) -> (i64, i64) {
        (self.start, self.start + self.points.len() as i64 - 1)
    }

    pub fn at(&self, k: i64) -> Option<&Point> {
        let i = k - self.start;
        if i < 0 {
            return None;
        }
        self.points.get(i as usize)
    }

    pub fn base(&self) -> &Point {
        self.at(0).expect("orbit segment window contains 0")
    }

    /// Largest one-step defect `d(f(points[k]), points[k+1])`.
    pub fn step_defect<D: Dynamics + ?Sized>(&self, dynamics: &D) -> Result<f64> {
        let mut worst = 0.0f64;
        for w in self.points.windows(2) {
            worst = worst.max(dynamics.dist(&dynamics.forward(&w[0])?, &w[1])?);
        }
        Ok(worst)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PseudoOrbit {
    pub points: Vec<Point>,
    pub delta: f64,
}

impl PseudoOrbit {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Jump sizes `d(f(x_k), x_{k+1})`.
    pub fn jumps<D: Dynamics + ?Sized>(&self, dynamics: &D) -> Result<Vec<f64>> {
        self.points
            .windows(2)
            .map(|w| dynamics.dist(&dynamics.forward(&w[0])?, &w[1]))
            .collect()
    }

    /// `d(f(x_last), x_0)`, the jump needed to close the window periodically.
    pub fn closing_jump<D: Dynamics + ?Sized>(&self, dynamics: &D) -> Result<f64> {
        match (self.points.last(), self.points.first()) {
            (Some(l), Some(f)) => dynamics.dist(&dynamics.forward(l)?, f),
            _ => Ok(f64::INFINITY),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpReport {
    pub valid: bool,
    pub max_jump: f64,
}

pub fn verify_pseudo_orbit<D: Dynamics + ?Sized>(dynamics: &D, po: &PseudoOrbit) -> Result<JumpReport> {
    let max_jump = po.jumps(dynamics)?.into_iter().fold(0.0, f64::max);
    Ok(JumpReport { valid: max_jump < po.delta, max_jump })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShadowResult {
    pub shadow_point: Point,
    pub epsilon_achieved: f64,
    pub verified_window: (i64, i64),
    /// Largest `d(f(y_k), y_{k+1})` along the shadow orbit, including the
    /// closing step when `periodic`.
    pub step_defect: f64,
    pub periodic: bool,
    #[serde(skip)]
    pub orbit: Vec<Point>,
}

impl ShadowResult {
    pub fn is_genuine(&self) -> bool {
        self.step_defect <= FLOAT_TOL
    }
}

/// How window ends are treated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Closure {
    /// Periodic when the closing jump is below delta, open otherwise.
    Auto,
    Periodic,
    Open,
}

// ---------------------------------------------------------------------------
// Pseudo-orbit generation
// ---------------------------------------------------------------------------

/// Seeded δ-pseudo-orbit of `length` points starting at `x0`.
pub fn perturbed_pseudo_orbit(
    system: &SystemHandle,
    x0: &Point,
    delta: f64,
    length: usize,
    seed: u64,
) -> Result<PseudoOrbit> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    if length == 0 {
        return Err(Error::InvalidParameter("pseudo-orbit length must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Square jitter of half-side δ/2 keeps every jump below δ/√2.
    let half = delta / 2.0;
    let jitter = |t: &Torus2, rng: &mut ChaCha8Rng| {
        if half == 0.0 {
            *t
        } else {
            t.shifted([rng.gen_range(-half..half), rng.gen_range(-half..half)])
        }
    };
    // Number of leading coordinates kept intact on symbolic systems.
    let keep = {
        let mut j = 0i64;
        while 0.5f64.powi(j as i32 + 1) >= delta {
            j += 1;
        }
        j
    };
    let mut points = Vec::with_capacity(length);
    points.push(x0.clone());
    while points.len() < length {
        let image = system.forward(points.last().unwrap())?;
        let next = match image {
            Point::Torus(t) => Point::Torus(jitter(&t, &mut rng)),
            Point::Sphere(t) => Point::sphere(jitter(&t, &mut rng)),
            Point::Example1(Example1Point::Base(t)) => Point::Example1(Example1Point::Base(jitter(&t, &mut rng))),
            Point::Example1(Example1Point::Ideal(k)) => Point::Example1(Example1Point::Ideal(k)),
            Point::Shift(s) => Point::Shift(resample_shift_tail(&s, keep, &mut rng)?),
            Point::Cantor(c) => Point::Cantor(resample_cantor_tail(&c, keep, &mut rng)),
        };
        points.push(next);
    }
    Ok(PseudoOrbit { points, delta })
}

/// Recentre a shifted window to its original radius and resample every
/// coordinate with `|i| > keep`.
fn resample_shift_tail(s: &ShiftPoint, keep: i64, rng: &mut ChaCha8Rng) -> Result<ShiftPoint> {
    let alphabet = s.symbols.iter().copied().max().unwrap_or(1).max(1) + 1;
    let radius = (s.symbols.len() as i64 - 1) / 2;
    if radius <= keep {
        return Err(Error::InvalidParameter(format!(
            "shift window radius {radius} too small to perturb below delta (needs > {keep})"
        )));
    }
    let mut symbols = Vec::with_capacity(2 * radius as usize + 1);
    for i in -radius..=radius {
        let sym = if i.abs() <= keep { s.symbol(i)? } else { rng.gen_range(0..alphabet) };
        symbols.push(sym);
    }
    ShiftPoint::centered(symbols)
}

fn resample_cantor_tail(c: &CantorPoint, keep: i64, rng: &mut ChaCha8Rng) -> CantorPoint {
    let bits = c
        .bits
        .iter()
        .enumerate()
        .map(|(i, &b)| if (i as i64) <= keep { b } else { rng.gen_range(0..2u8) })
        .collect();
    CantorPoint { bits }
}

// ---------------------------------------------------------------------------
// Concatenation
// ---------------------------------------------------------------------------

pub fn concatenate_segments<D: Dynamics + ?Sized>(
    dynamics: &D,
    segments: &[PseudoOrbit],
    delta: f64,
) -> Result<PseudoOrbit> {
    let mut points = Vec::with_capacity(segments.iter().map(PseudoOrbit::len).sum());
    for (i, seg) in segments.iter().enumerate() {
        if seg.is_empty() {
            return Err(Error::InvalidParameter(format!("segment {i} is empty")));
        }
        if let Some(last) = points.last() {
            let jump = dynamics.dist(&dynamics.forward(last)?, &seg.points[0])?;
            if !(jump < delta) {
                return Err(Error::SeamViolation { seam: i - 1, jump, delta });
            }
        }
        points.extend(seg.points.iter().cloned());
    }
    Ok(PseudoOrbit { points, delta })
}

// ---------------------------------------------------------------------------
// Spectral shadowing on the torus
// ---------------------------------------------------------------------------

/// Shadow orbit of a torus pseudo-orbit given as lifted coordinates.
/// Returns the orbit coordinates (as reals in `[0,1)`).
fn spectral_shadow(a: &HyperbolicMatrix, xs: &[Torus2], periodic: bool) -> Vec<Torus2> {
    let split = a.splitting();
    let (lu, ls) = (split.unstable, split.stable);
    let n = xs.len();
    let steps = if periodic { n } else { n - 1 };
    // e_k = x_{k+1} - A x_k, smallest representative.
    let errs: Vec<(f64, f64)> = (0..steps)
        .map(|k| {
            let image = torus_apply(a, &xs[k], Direction::Forward);
            split.decompose(xs[(k + 1) % n].diff(&image))
        })
        .collect();

    // Stable coordinates: β_{k+1} = λ_s β_k - e^s_k.
    let mut beta = vec![0.0; n];
    if periodic {
        let mut acc = 0.0;
        for (j, e) in errs.iter().enumerate() {
            acc += ls.powi((steps - 1 - j) as i32) * e.1;
        }
        beta[0] = -acc / (1.0 - ls.powi(steps as i32));
    }
    for k in 1..n {
        beta[k] = ls * beta[k - 1] - errs[k - 1].1;
    }

    // Unstable coordinates: α_k = (α_{k+1} + e^u_k) / λ_u.
    let mut alpha = vec![0.0; n];
    if periodic {
        let mut alpha0 = 0.0;
        for (j, e) in errs.iter().enumerate() {
            alpha0 += e.0 / lu.powi(j as i32 + 1);
        }
        alpha0 /= 1.0 - lu.powi(-(steps as i32));
        alpha[n - 1] = (alpha0 + errs[n - 1].0) / lu;
    }
    for k in (0..n - 1).rev() {
        alpha[k] = (alpha[k + 1] + errs[k].0) / lu;
    }

    xs.iter()
        .zip(alpha.iter().zip(&beta))
        .map(|(x, (&al, &be))| x.shifted(split.compose(al, be)))
        .collect()
}

fn torus_step_defect(a: &HyperbolicMatrix, ys: &[Torus2], periodic: bool) -> f64 {
    let n = ys.len();
    let steps = if periodic { n } else { n.saturating_sub(1) };
    (0..steps)
        .map(|k| torus_dist(&torus_apply(a, &ys[k], Direction::Forward), &ys[(k + 1) % n]))
        .fold(0.0, f64::max)
}

fn resolve_closure<D: Dynamics + ?Sized>(dynamics: &D, po: &PseudoOrbit, closure: Closure) -> Result<bool> {
    Ok(match closure {
        Closure::Periodic => true,
        Closure::Open => false,
        Closure::Auto => po.len() > 1 && po.closing_jump(dynamics)? < po.delta,
    })
}

fn torus_coords(po: &PseudoOrbit, expected: &SystemHandle) -> Result<Vec<Torus2>> {
    po.points
        .iter()
        .map(|p| match p {
            Point::Torus(t) => Ok(*t),
            other => Err(Error::KindMismatch { expected: expected.point_kind(), found: other.kind() }),
        })
        .collect()
}

/// Spectral shadow of a pseudo-orbit of the torus automorphism `a`.
pub fn linear_shadow(a: &HyperbolicMatrix, po: &PseudoOrbit) -> Result<ShadowResult> {
    linear_shadow_with(a, po, Closure::Auto)
}

pub fn linear_shadow_with(a: &HyperbolicMatrix, po: &PseudoOrbit, closure: Closure) -> Result<ShadowResult> {
    let system = SystemHandle { name: "torus".into(), kind: SystemKind::Torus { matrix: *a } };
    if po.is_empty() {
        return Err(Error::EmptySample);
    }
    let xs = torus_coords(po, &system)?;
    let periodic = resolve_closure(&system, po, closure)?;
    let ys = spectral_shadow(a, &xs, periodic);
    let epsilon = xs.iter().zip(&ys).map(|(x, y)| torus_dist(x, y)).fold(0.0, f64::max);
    let step_defect = torus_step_defect(a, &ys, periodic);
    let orbit: Vec<Point> = ys.into_iter().map(Point::Torus).collect();
    Ok(ShadowResult {
        shadow_point: orbit[0].clone(),
        epsilon_achieved: epsilon,
        verified_window: (0, orbit.len() as i64 - 1),
        step_defect,
        periodic,
        orbit,
    })
}

/// Shadowing on the antipodal quotient: lift to the torus, shadow there,
/// project back. A window whose lift closes onto the antipode is doubled
/// before shadowing so the periodic lift is consistent.
pub fn quotient_shadow(a: &HyperbolicMatrix, po: &PseudoOrbit) -> Result<ShadowResult> {
    quotient_shadow_with(a, po, Closure::Auto)
}

pub fn quotient_shadow_with(a: &HyperbolicMatrix, po: &PseudoOrbit, closure: Closure) -> Result<ShadowResult> {
    let sphere = SystemHandle { name: "sphere".into(), kind: SystemKind::Sphere { matrix: *a } };
    if po.is_empty() {
        return Err(Error::EmptySample);
    }
    let reps: Vec<Torus2> = po
        .points
        .iter()
        .map(|p| match p {
            Point::Sphere(t) => Ok(*t),
            other => Err(Error::KindMismatch { expected: sphere.point_kind(), found: other.kind() }),
        })
        .collect::<Result<_>>()?;
    let periodic = resolve_closure(&sphere, po, closure)?;

    let mut lift = Vec::with_capacity(reps.len());
    lift.push(reps[0]);
    for r in &reps[1..] {
        let target = torus_apply(a, lift.last().unwrap(), Direction::Forward);
        let neg = r.neg();
        lift.push(if torus_dist(r, &target) <= torus_dist(&neg, &target) { *r } else { neg });
    }
    let n = lift.len();
    if periodic {
        let target = torus_apply(a, &lift[n - 1], Direction::Forward);
        if torus_dist(&lift[0].neg(), &target) < torus_dist(&lift[0], &target) {
            let flipped: Vec<Torus2> = lift.iter().map(Torus2::neg).collect();
            lift.extend(flipped);
        }
    }
    let ys = spectral_shadow(a, &lift, periodic);
    let step_defect = {
        let projected: Vec<Point> = ys.iter().map(|y| Point::sphere(*y)).collect();
        let steps = if periodic { projected.len() } else { n - 1 };
        let mut worst = 0.0f64;
        for k in 0..steps {
            let img = sphere.forward(&projected[k])?;
            worst = worst.max(sphere.dist(&img, &projected[(k + 1) % projected.len()])?);
        }
        worst
    };
    let orbit: Vec<Point> = ys[..n].iter().map(|y| Point::sphere(*y)).collect();
    let mut epsilon = 0.0f64;
    for (x, y) in po.points.iter().zip(&orbit) {
        epsilon = epsilon.max(sphere.dist(x, y)?);
    }
    Ok(ShadowResult {
        shadow_point: orbit[0].clone(),
        epsilon_achieved: epsilon,
        verified_window: (0, n as i64 - 1),
        step_defect,
        periodic,
        orbit,
    })
}

/// Example 1 shadowing: ideal points are replaced by the anchor `p_0`, the
/// resulting base pseudo-orbit is shadowed spectrally.
pub fn example1_shadow(a: &HyperbolicMatrix, po: &PseudoOrbit) -> Result<ShadowResult> {
    let system = SystemHandle { name: "example1".into(), kind: SystemKind::Example1 { matrix: *a } };
    if po.is_empty() {
        return Err(Error::EmptySample);
    }
    let anchor = Torus2::origin();
    let base_points: Vec<Point> = po
        .points
        .iter()
        .map(|p| match p {
            Point::Example1(Example1Point::Base(t)) => Ok(Point::Torus(*t)),
            Point::Example1(Example1Point::Ideal(_)) => Ok(Point::Torus(anchor)),
            other => Err(Error::KindMismatch { expected: system.point_kind(), found: other.kind() }),
        })
        .collect::<Result<_>>()?;
    // Switching an ideal point for p_0 can enlarge a jump by up to 1/k.
    let base_delta = {
        let torus = SystemHandle { name: "torus".into(), kind: SystemKind::Torus { matrix: *a } };
        let probe = PseudoOrbit { points: base_points.clone(), delta: f64::INFINITY };
        verify_pseudo_orbit(&torus, &probe)?.max_jump.max(po.delta)
    };
    let base = linear_shadow(a, &PseudoOrbit { points: base_points, delta: base_delta * (1.0 + 1e-12) })?;
    let orbit: Vec<Point> = base
        .orbit
        .iter()
        .map(|p| match p {
            Point::Torus(t) => Point::Example1(Example1Point::Base(*t)),
            _ => unreachable!("linear shadow yields torus points"),
        })
        .collect();
    let mut epsilon = 0.0f64;
    for (x, y) in po.points.iter().zip(&orbit) {
        epsilon = epsilon.max(system.dist(x, y)?);
    }
    Ok(ShadowResult {
        shadow_point: orbit[0].clone(),
        epsilon_achieved: epsilon,
        verified_window: base.verified_window,
        step_defect: base.step_defect,
        periodic: base.periodic,
        orbit,
    })
}

/// Exact shadowing on the shift: the shadow reads off coordinate 0 of
/// every pseudo-orbit point.
pub fn shift_shadow(system: &SystemHandle, po: &PseudoOrbit) -> Result<ShadowResult> {
    let windows: Vec<&ShiftPoint> = po
        .points
        .iter()
        .map(|p| match p {
            Point::Shift(s) => Ok(s),
            other => Err(Error::KindMismatch { expected: system.point_kind(), found: other.kind() }),
        })
        .collect::<Result<_>>()?;
    let first = windows.first().ok_or(Error::EmptySample)?;
    let last = windows.last().unwrap();
    let mut symbols: Vec<u8> = first.symbols[..first.origin].to_vec();
    for w in &windows {
        symbols.push(w.symbol(0)?);
    }
    for i in 1..=last.hi() {
        symbols.push(last.symbol(i)?);
    }
    let y = Point::Shift(ShiftPoint { symbols, origin: first.origin });
    let seg = OrbitSegment::compute(system, &y, 0, po.len() as i64 - 1)?;
    let mut epsilon = 0.0f64;
    for (x, z) in po.points.iter().zip(&seg.points) {
        epsilon = epsilon.max(system.dist(x, z)?);
    }
    Ok(ShadowResult {
        shadow_point: y,
        epsilon_achieved: epsilon,
        verified_window: seg.window(),
        step_defect: seg.step_defect(system)?,
        periodic: false,
        orbit: seg.points,
    })
}

/// Shadow with the constructive method available for the system.
pub fn shadow(system: &SystemHandle, po: &PseudoOrbit) -> Result<ShadowResult> {
    match system.kind {
        SystemKind::Torus { matrix } => linear_shadow(&matrix, po),
        SystemKind::Sphere { matrix } => quotient_shadow(&matrix, po),
        SystemKind::Example1 { matrix } => example1_shadow(&matrix, po),
        SystemKind::Shift { .. } => shift_shadow(system, po),
        SystemKind::CantorIdentity => {
            // The identity is shadowed by the first point of the window.
            let y = po.points.first().ok_or(Error::EmptySample)?.clone();
            let mut epsilon = 0.0f64;
            for x in &po.points {
                epsilon = epsilon.max(system.dist(x, &y)?);
            }
            Ok(ShadowResult {
                shadow_point: y.clone(),
                epsilon_achieved: epsilon,
                verified_window: (0, po.len() as i64 - 1),
                step_defect: 0.0,
                periodic: false,
                orbit: vec![y; po.len()],
            })
        }
    }
}

/// Largest `d(y_k, x_k)` between an explicit orbit and a pseudo-orbit.
pub fn tracking_error<D: Dynamics + ?Sized>(dynamics: &D, orbit: &[Point], po: &PseudoOrbit) -> Result<f64> {
    let mut worst = 0.0f64;
    for (y, x) in orbit.iter().zip(&po.points) {
        worst = worst.max(dynamics.dist(y, x)?);
    }
    Ok(worst)
}

/// CSV dump: `index,x,y,label,jump`.
pub fn write_pseudo_orbit_csv<D: Dynamics + ?Sized, W: Write>(
    dynamics: &D,
    po: &PseudoOrbit,
    out: W,
) -> Result<()> {
    let jumps = po.jumps(dynamics)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["index", "x", "y", "label", "jump"])?;
    for (i, p) in po.points.iter().enumerate() {
        let [x, y, label] = p.csv_fields();
        let jump = jumps.get(i).map(|j| j.to_string()).unwrap_or_default();
        w.write_record([i.to_string(), x, y, label, jump])?;
    }
    w.flush()?;
    Ok(())
}
