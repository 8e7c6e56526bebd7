//! Finite-horizon dynamical balls, local stable/unstable sets and the
//! structure classification of ball members across sample refinements.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orbits::OrbitSegment;
use crate::spaces::{CantorPoint, Dynamics, Example1Point, Point, ShiftPoint, SystemHandle, SystemKind, Torus2};

/// Geometric-growth threshold for the separated count per refinement level.
pub const GEOMETRIC_RATIO: f64 = 1.8;
pub const DEFAULT_TORUS_HORIZON: i64 = 60;
pub const GRID_HALF_WIDTH: i64 = 10;
/// Grid denominators of the three refinement levels (steps 1e-2, 1e-3, 1e-4).
pub const GRID_DENOMINATORS: [i64; 3] = [100, 1_000, 10_000];
/// Number of ideal points of Example 1 included per refinement level.
pub const IDEAL_COUNTS: [u64; 3] = [100, 1_000, 10_000];

/// A sample either iterated on demand or carried with a precomputed orbit
/// window (horseshoe witnesses, whose orbits are only known as verified
/// periodic sequences).
#[derive(Clone, Debug, PartialEq)]
pub enum Sample {
    Point(Point),
    Orbit(OrbitSegment),
}

impl Sample {
    pub fn point(&self) -> &Point {
        match self {
            Sample::Point(p) => p,
            Sample::Orbit(seg) => seg.base(),
        }
    }

    /// Orbit over `[-n, n]`.
    pub fn segment<D: Dynamics + ?Sized>(&self, dynamics: &D, n: i64) -> Result<OrbitSegment> {
        match self {
            Sample::Point(p) => OrbitSegment::compute(dynamics, p, -n, n),
            Sample::Orbit(seg) => {
                let (a, b) = seg.window();
                if a > -n || b < n {
                    return Err(Error::InvalidParameter(format!(
                        "stored orbit window [{a}, {b}] does not cover [-{n}, {n}]"
                    )));
                }
                Ok(OrbitSegment {
                    system: seg.system.clone(),
                    start: -n,
                    points: (-n..=n).map(|k| seg.at(k).unwrap().clone()).collect(),
                })
            }
        }
    }
}

impl From<Point> for Sample {
    fn from(p: Point) -> Self {
        Sample::Point(p)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleLevel {
    pub label: String,
    /// Spacing of the cloud; the triviality test compares against it.
    pub resolution: f64,
    pub center: Point,
    pub points: Vec<Sample>,
}

// ---------------------------------------------------------------------------
// Sample clouds
// ---------------------------------------------------------------------------

/// Uniform grid of `(2·half_width+1)²` points around torus coordinates `t`
/// with spacing `1/step_den`. Exact centres give exact grids.
pub fn torus_grid(t: &Torus2, step_den: i64, half_width: i64) -> Result<Vec<Torus2>> {
    let mut out = Vec::with_capacity(((2 * half_width + 1) * (2 * half_width + 1)) as usize);
    for dx in -half_width..=half_width {
        for dy in -half_width..=half_width {
            out.push(t.offset(dx, dy, step_den)?);
        }
    }
    Ok(out)
}

/// Uniform global grid `{(i, j)/den}`.
pub fn global_grid(system: &SystemHandle, den: i64) -> Result<Vec<Point>> {
    let mut out = Vec::with_capacity((den * den) as usize);
    for i in 0..den {
        for j in 0..den {
            out.push(system.torus_point(Torus2::exact([i, j], den)?)?);
        }
    }
    Ok(out)
}

/// The three refinement levels used for a ball around `center`.
pub fn default_levels(system: &SystemHandle, center: &Point) -> Result<Vec<SampleLevel>> {
    let mut levels = Vec::new();
    match (&system.kind, center) {
        (SystemKind::Torus { .. } | SystemKind::Sphere { .. }, Point::Torus(t) | Point::Sphere(t)) => {
            for den in GRID_DENOMINATORS {
                let pts = torus_grid(t, den, GRID_HALF_WIDTH)?
                    .into_iter()
                    .map(|g| system.torus_point(g).map(Sample::Point))
                    .collect::<Result<Vec<_>>>()?;
                levels.push(level(format!("grid 1/{den}"), 1.0 / den as f64, center, pts));
            }
        }
        (SystemKind::Example1 { .. }, Point::Example1(e)) => {
            let base = match e {
                Example1Point::Base(t) => *t,
                Example1Point::Ideal(_) => Torus2::origin(),
            };
            for (den, k_max) in GRID_DENOMINATORS.into_iter().zip(IDEAL_COUNTS) {
                let mut pts: Vec<Sample> = torus_grid(&base, den, GRID_HALF_WIDTH)?
                    .into_iter()
                    .map(|g| Sample::Point(Point::Example1(Example1Point::Base(g))))
                    .collect();
                pts.extend((1..=k_max).map(|k| Sample::Point(Point::Example1(Example1Point::Ideal(k)))));
                levels.push(level(format!("grid 1/{den}, ideal <= {k_max}"), 1.0 / den as f64, center, pts));
            }
        }
        (SystemKind::Shift { alphabet }, Point::Shift(s)) => {
            let radius = s.radius();
            for r in [2, 3, 4].into_iter().filter(|&r| r < radius) {
                let pts = shift_cylinder(s, r, *alphabet)?.into_iter().map(|p| Sample::Point(Point::Shift(p))).collect();
                levels.push(level(format!("free radius {r}"), 0.5f64.powi(r as i32 + 1), center, pts));
            }
        }
        (SystemKind::CantorIdentity, Point::Cantor(c)) => {
            // Fixed word length so that every pair of samples is comparable;
            // level `len` frees the first `len` bits and copies the rest.
            let total = c.bits.len().max(8);
            let mut base = c.bits.clone();
            base.resize(total, 0);
            let lc = Point::Cantor(CantorPoint { bits: base.clone() });
            for len in [4usize, 6, 8] {
                let pts = all_words(len)
                    .into_iter()
                    .map(|mut b| {
                        b.extend_from_slice(&base[len..]);
                        Sample::Point(Point::Cantor(CantorPoint { bits: b }))
                    })
                    .collect();
                levels.push(level(format!("free prefix {len}"), 0.5f64.powi(total as i32), &lc, pts));
            }
        }
        _ => {
            return Err(Error::KindMismatch { expected: system.point_kind(), found: center.kind() });
        }
    }
    Ok(levels)
}

fn level(label: String, resolution: f64, center: &Point, mut points: Vec<Sample>) -> SampleLevel {
    if !points.iter().any(|s| s.point() == center) {
        points.insert(0, Sample::Point(center.clone()));
    }
    SampleLevel { label, resolution, center: center.clone(), points }
}

/// All binary words of length `len`, in lexicographic order.
pub fn all_words(len: usize) -> Vec<Vec<u8>> {
    (0..1u64 << len).map(|w| (0..len).map(|i| ((w >> (len - 1 - i)) & 1) as u8).collect()).collect()
}

/// Points agreeing with `s` outside `[-r, r]`, free inside.
fn shift_cylinder(s: &ShiftPoint, r: i64, alphabet: u8) -> Result<Vec<ShiftPoint>> {
    let width = (2 * r + 1) as u32;
    let count = (alphabet as u64).pow(width);
    let mut out = Vec::with_capacity(count as usize);
    for mut code in 0..count {
        let mut p = s.clone();
        for i in (-r..=r).rev() {
            p.symbols[(s.origin as i64 + i) as usize] = (code % alphabet as u64) as u8;
            code /= alphabet as u64;
        }
        out.push(p);
    }
    Ok(out)
}

/// Default horizon for a system.
pub fn default_horizon(system: &SystemHandle, center: &Point) -> i64 {
    match (&system.kind, center) {
        (SystemKind::Shift { .. }, Point::Shift(s)) => (s.radius() / 2).max(1),
        _ => DEFAULT_TORUS_HORIZON,
    }
}

// ---------------------------------------------------------------------------
// Membership
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct Membership {
    stable: bool,
    unstable: bool,
    asymptotic: bool,
}

/// Walk the sample's orbit alongside the centre orbit in one direction,
/// returning the distances up to the first excursion beyond `c`.
fn walk<D: Dynamics + ?Sized>(
    dynamics: &D,
    center: &OrbitSegment,
    sample: &Sample,
    c: f64,
    n: i64,
    forward: bool,
) -> Result<(bool, f64, f64)> {
    let sign = if forward { 1 } else { -1 };
    let mut max_d = 0.0f64;
    let mut last_d = 0.0;
    let mut q = sample.point().clone();
    for k in 0..=n {
        let idx = sign * k;
        if k > 0 {
            q = match sample {
                Sample::Point(_) => dynamics.apply(&q, if forward { crate::spaces::Direction::Forward } else { crate::spaces::Direction::Backward })?,
                Sample::Orbit(seg) => seg
                    .at(idx)
                    .ok_or_else(|| Error::InvalidParameter(format!("stored orbit lacks index {idx}")))?
                    .clone(),
            };
        }
        let d = dynamics.dist(center.at(idx).expect("centre window covers horizon"), &q)?;
        if d > c {
            return Ok((false, d.max(max_d), d));
        }
        max_d = max_d.max(d);
        last_d = d;
    }
    Ok((true, max_d, last_d))
}

fn converged(max_d: f64, last_d: f64, threshold: f64) -> bool {
    max_d == 0.0 || (last_d < threshold && last_d <= 0.5 * max_d)
}

fn classify_memberships<D: Dynamics + ?Sized>(
    dynamics: &D,
    center: &OrbitSegment,
    samples: &[Sample],
    c: f64,
    n: i64,
    threshold: f64,
) -> Result<Vec<Membership>> {
    samples
        .par_iter()
        .map(|s| {
            let (stable, fmax, flast) = walk(dynamics, center, s, c, n, true)?;
            let (unstable, bmax, blast) = walk(dynamics, center, s, c, n, false)?;
            Ok(Membership {
                stable,
                unstable,
                asymptotic: stable
                    && unstable
                    && converged(fmax, flast, threshold)
                    && converged(bmax, blast, threshold),
            })
        })
        .collect()
}

fn check_inputs(c: f64, n: i64, samples: &[Sample]) -> Result<()> {
    if !(c > 0.0) {
        return Err(Error::InvalidParameter(format!("radius must be positive, got {c}")));
    }
    if n < 1 {
        return Err(Error::InvalidParameter(format!("horizon must be >= 1, got {n}")));
    }
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(())
}

/// Samples `y` with `d(f^k x, f^k y) <= c` for `0 <= k <= n`.
pub fn local_stable<D: Dynamics + ?Sized>(
    dynamics: &D,
    x: &Point,
    c: f64,
    n: i64,
    samples: &[Sample],
) -> Result<Vec<Point>> {
    check_inputs(c, n, samples)?;
    let center = OrbitSegment::compute(dynamics, x, -n, n)?;
    let m = classify_memberships(dynamics, &center, samples, c, n, 0.0)?;
    Ok(select(samples, &m, |m| m.stable))
}

/// Samples `y` with `d(f^k x, f^k y) <= c` for `-n <= k <= 0`.
pub fn local_unstable<D: Dynamics + ?Sized>(
    dynamics: &D,
    x: &Point,
    c: f64,
    n: i64,
    samples: &[Sample],
) -> Result<Vec<Point>> {
    check_inputs(c, n, samples)?;
    let center = OrbitSegment::compute(dynamics, x, -n, n)?;
    let m = classify_memberships(dynamics, &center, samples, c, n, 0.0)?;
    Ok(select(samples, &m, |m| m.unstable))
}

/// Members of the finite-horizon dynamical ball whose distance to the
/// orbit of `x` has dropped below `threshold` (and to at most half its
/// running maximum) at both ends of the horizon.
pub fn asymptotic_ball<D: Dynamics + ?Sized>(
    dynamics: &D,
    x: &Point,
    c: f64,
    n: i64,
    threshold: f64,
    samples: &[Sample],
) -> Result<Vec<Point>> {
    check_inputs(c, n, samples)?;
    if !(threshold < c) {
        return Err(Error::InvalidParameter(format!("convergence threshold {threshold} must be below c = {c}")));
    }
    let center = OrbitSegment::compute(dynamics, x, -n, n)?;
    let m = classify_memberships(dynamics, &center, samples, c, n, threshold)?;
    Ok(select(samples, &m, |m| m.asymptotic))
}

fn select(samples: &[Sample], m: &[Membership], keep: impl Fn(&Membership) -> bool) -> Vec<Point> {
    samples.iter().zip(m).filter(|(_, m)| keep(m)).map(|(s, _)| s.point().clone()).collect()
}

// ---------------------------------------------------------------------------
// Structure classification
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "kebab-case")]
pub enum Classification {
    Trivial,
    Finite { count: usize },
    CountableLike,
    CantorLike,
    Inconclusive { reason: String },
}

impl Classification {
    pub fn is_trivial(&self) -> bool {
        matches!(self, Classification::Trivial)
    }

    pub fn is_cantor_like(&self) -> bool {
        matches!(self, Classification::CantorLike)
    }
}

/// Members of one refinement level, with orbits over the horizon.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelMembers {
    pub resolution: f64,
    pub center: OrbitSegment,
    pub members: Vec<OrbitSegment>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelStats {
    pub resolution: f64,
    pub members: usize,
    pub separated: usize,
    /// `max_k d(f^k x, f^k y)` over members `y`; the diameter is at most twice this.
    pub spread: f64,
    /// Largest distance from a member new at this level to the previous
    /// level's members.
    pub new_member_reach: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureVerdict {
    pub classification: Classification,
    pub separation: f64,
    pub geometric_ratio: f64,
    pub levels: Vec<LevelStats>,
}

fn bowen_dist<D: Dynamics + ?Sized>(dynamics: &D, a: &OrbitSegment, b: &OrbitSegment, stop_above: f64) -> Result<f64> {
    let mut worst = 0.0f64;
    for (p, q) in a.points.iter().zip(&b.points) {
        worst = worst.max(dynamics.dist(p, q)?);
        if worst > stop_above {
            break;
        }
    }
    Ok(worst)
}

/// Greedy count of members pairwise separated by more than `delta` in the
/// two-sided Bowen metric over the stored window.
fn separated_count<D: Dynamics + ?Sized>(dynamics: &D, members: &[OrbitSegment], delta: f64) -> Result<usize> {
    let mut kept: Vec<&OrbitSegment> = Vec::new();
    'outer: for m in members {
        for k in &kept {
            if bowen_dist(dynamics, m, k, delta)? <= delta {
                continue 'outer;
            }
        }
        kept.push(m);
    }
    Ok(kept.len())
}

/// Numerical surrogate for the trivial / finite / countable / Cantor
/// distinction, judged across at least two refinement levels.
pub fn classify_structure<D: Dynamics + ?Sized>(
    dynamics: &D,
    levels: &[LevelMembers],
    separation: f64,
) -> Result<StructureVerdict> {
    if levels.len() < 2 {
        return Err(Error::InvalidParameter("classification needs at least two refinement levels".into()));
    }
    let mut stats = Vec::with_capacity(levels.len());
    for (i, lvl) in levels.iter().enumerate() {
        let mut spread = 0.0f64;
        for m in &lvl.members {
            spread = spread.max(bowen_dist(dynamics, &lvl.center, m, f64::INFINITY)?);
        }
        let new_member_reach = if i == 0 {
            None
        } else {
            let prev: Vec<&Point> = levels[i - 1].members.iter().map(OrbitSegment::base).collect();
            let mut reach = 0.0f64;
            for m in &lvl.members {
                let p = m.base();
                if prev.contains(&p) {
                    continue;
                }
                let mut nearest = f64::INFINITY;
                for q in &prev {
                    nearest = nearest.min(dynamics.dist(p, q)?);
                }
                reach = reach.max(nearest);
            }
            Some(reach)
        };
        stats.push(LevelStats {
            resolution: lvl.resolution,
            members: lvl.members.len(),
            separated: separated_count(dynamics, &lvl.members, separation)?,
            spread,
            new_member_reach,
        });
    }

    let last = stats.last().unwrap();
    let classification = if last.spread <= last.resolution {
        Classification::Trivial
    } else if stats.windows(2).any(|w| w[1].separated < w[0].separated) {
        Classification::Inconclusive { reason: "separated counts decrease under refinement".into() }
    } else if stats.windows(2).all(|w| w[1].separated as f64 >= GEOMETRIC_RATIO * w[0].separated as f64) {
        Classification::CantorLike
    } else if stats.windows(2).all(|w| w[1].members == w[0].members) {
        Classification::Finite { count: last.members }
    } else if stats.windows(2).all(|w| w[1].members > w[0].members)
        && stats[1..]
            .windows(2)
            .all(|w| w[1].new_member_reach.unwrap_or(0.0) < w[0].new_member_reach.unwrap_or(0.0))
    {
        Classification::CountableLike
    } else if stats.windows(2).last().is_some_and(|w| w[1].separated == w[0].separated) {
        Classification::Finite { count: last.separated }
    } else {
        Classification::Inconclusive { reason: "member growth is neither geometric nor accumulating".into() }
    };
    Ok(StructureVerdict { classification, separation, geometric_ratio: GEOMETRIC_RATIO, levels: stats })
}

// ---------------------------------------------------------------------------
// Ball reports
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallReport {
    pub system: String,
    pub center: Point,
    pub radius: f64,
    pub horizon: i64,
    pub convergence_threshold: f64,
    pub level_labels: Vec<String>,
    /// Members at the finest level (plus any injected witnesses).
    pub members_gamma: Vec<Point>,
    pub members_ws: Vec<Point>,
    pub members_wu: Vec<Point>,
    pub members_asymptotic: Vec<Point>,
    pub verdict: StructureVerdict,
    pub witnesses: usize,
    #[serde(skip)]
    pub level_members: Vec<LevelMembers>,
}

impl BallReport {
    pub fn classification(&self) -> &Classification {
        &self.verdict.classification
    }

    /// `Γ = W^s ∩ W^u` and `x ∈ Γ`.
    pub fn check_set_identity(&self) -> bool {
        let both: Vec<&Point> = self.members_ws.iter().filter(|p| self.members_wu.contains(p)).collect();
        both.len() == self.members_gamma.len()
            && both.iter().all(|p| self.members_gamma.contains(p))
            && self.members_gamma.contains(&self.center)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallParams {
    pub radius: f64,
    pub horizon: i64,
    pub convergence_threshold: f64,
    pub separation: f64,
}

impl BallParams {
    pub fn new(radius: f64, horizon: i64) -> Self {
        Self { radius, horizon, convergence_threshold: radius / 100.0, separation: radius / 4.0 }
    }
}

pub fn dynamical_ball<D: Dynamics + ?Sized>(
    dynamics: &D,
    x: &Point,
    params: BallParams,
    levels: &[SampleLevel],
) -> Result<BallReport> {
    let BallParams { radius: c, horizon: n, convergence_threshold, separation } = params;
    if levels.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut level_members = Vec::with_capacity(levels.len());
    let mut finest = None;
    for lvl in levels {
        check_inputs(c, n, &lvl.points)?;
        let center = OrbitSegment::compute(dynamics, &lvl.center, -n, n)?;
        let m = classify_memberships(dynamics, &center, &lvl.points, c, n, convergence_threshold)?;
        let gamma: Vec<&Sample> = lvl.points.iter().zip(&m).filter(|(_, m)| m.stable && m.unstable).map(|(s, _)| s).collect();
        let members = gamma.par_iter().map(|s| s.segment(dynamics, n)).collect::<Result<Vec<_>>>()?;
        level_members.push(LevelMembers { resolution: lvl.resolution, center, members });
        finest = Some((lvl, m));
    }
    let (lvl, m) = finest.unwrap();
    let verdict = classify_structure(dynamics, &level_members, separation)?;
    let report = BallReport {
        system: dynamics.name().to_string(),
        center: x.clone(),
        radius: c,
        horizon: n,
        convergence_threshold,
        level_labels: levels.iter().map(|l| l.label.clone()).collect(),
        members_gamma: select(&lvl.points, &m, |m| m.stable && m.unstable),
        members_ws: select(&lvl.points, &m, |m| m.stable),
        members_wu: select(&lvl.points, &m, |m| m.unstable),
        members_asymptotic: select(&lvl.points, &m, |m| m.asymptotic),
        verdict,
        witnesses: 0,
        level_members,
    };
    Ok(report)
}

// ---------------------------------------------------------------------------
// Expansive points
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansivePoint {
    pub point: Point,
    /// Largest tested radius with a trivial ball, if any.
    pub epsilon: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansivePointReport {
    pub system: String,
    pub epsilon_grid: Vec<f64>,
    pub horizon: i64,
    pub points: Vec<ExpansivePoint>,
    pub density_radius: f64,
    /// Fraction of samples with a detected expansive point within
    /// `density_radius`.
    pub density: f64,
}

impl ExpansivePointReport {
    pub fn expansive_count(&self) -> usize {
        self.points.iter().filter(|p| p.epsilon.is_some()).count()
    }
}

pub fn expansive_points_scan(
    system: &SystemHandle,
    samples: &[Point],
    epsilon_grid: &[f64],
    horizon: i64,
    density_radius: f64,
) -> Result<ExpansivePointReport> {
    let mut grid = epsilon_grid.to_vec();
    grid.sort_by(|a, b| b.total_cmp(a));
    let mut points = Vec::with_capacity(samples.len());
    for x in samples {
        let levels = default_levels(system, x)?;
        let mut found = None;
        // Largest radius first; triviality is monotone in the radius.
        for &eps in &grid {
            let report = dynamical_ball(system, x, BallParams::new(eps, horizon), &levels)?;
            if report.classification().is_trivial() {
                found = Some(eps);
                break;
            }
        }
        points.push(ExpansivePoint { point: x.clone(), epsilon: found });
    }
    let mut covered = 0usize;
    for s in samples {
        let mut hit = false;
        for p in points.iter().filter(|p| p.epsilon.is_some()) {
            if system.dist(s, &p.point)? <= density_radius {
                hit = true;
                break;
            }
        }
        covered += hit as usize;
    }
    Ok(ExpansivePointReport {
        system: system.name.clone(),
        epsilon_grid: grid,
        horizon,
        density: if samples.is_empty() { 0.0 } else { covered as f64 / samples.len() as f64 },
        density_radius,
        points,
    })
}

/// CSV dump of a member cloud: `set,x,y,label`.
pub fn write_members_csv<W: std::io::Write>(report: &BallReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["set", "x", "y", "label"])?;
    for (name, set) in [
        ("gamma", &report.members_gamma),
        ("ws", &report.members_ws),
        ("wu", &report.members_wu),
        ("asymptotic", &report.members_asymptotic),
    ] {
        for p in set {
            let [x, y, label] = p.csv_fields();
            w.write_record([name.to_string(), x, y, label])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact(i: i64, j: i64, d: i64) -> Torus2 {
        Torus2::exact([i, j], d).unwrap()
    }

    #[test]
    fn center_is_always_a_member() {
        let sys = SystemHandle::cat();
        let x = Point::Torus(exact(1234, 5678, 10_000));
        let samples = vec![Sample::Point(x.clone())];
        assert_eq!(local_stable(&sys, &x, 0.05, 40, &samples).unwrap(), vec![x.clone()]);
        assert_eq!(local_unstable(&sys, &x, 0.05, 40, &samples).unwrap(), vec![x.clone()]);
        assert_eq!(asymptotic_ball(&sys, &x, 0.05, 40, 5e-4, &samples).unwrap(), vec![x]);
    }

    #[test]
    fn empty_samples_rejected() {
        let sys = SystemHandle::cat();
        let x = Point::Torus(Torus2::origin());
        assert!(matches!(local_stable(&sys, &x, 0.05, 10, &[]), Err(Error::EmptySample)));
    }

    #[test]
    fn cat_ball_is_trivial() {
        let sys = SystemHandle::cat();
        let x = Point::Torus(exact(31_415_927, 27_182_818, 99_730_000));
        let levels = default_levels(&sys, &x).unwrap();
        let r = dynamical_ball(&sys, &x, BallParams::new(0.05, 60), &levels).unwrap();
        assert!(r.classification().is_trivial(), "{:?}", r.verdict);
        assert!(r.check_set_identity());
        assert_eq!(r.members_gamma, vec![x]);
    }

    #[test]
    fn cat_stable_members_hug_the_stable_line() {
        let sys = SystemHandle::cat();
        let x = Point::Torus(Torus2::origin());
        let cloud: Vec<Sample> = torus_grid(&Torus2::origin(), 1000, 40)
            .unwrap()
            .into_iter()
            .map(|t| Sample::Point(Point::Torus(t)))
            .collect();
        let split = crate::spaces::HyperbolicMatrix::CAT.splitting();
        let n = 4;
        let ws = local_stable(&sys, &x, 0.05, n, &cloud).unwrap();
        assert!(ws.len() >= 2);
        for p in ws {
            let v = p.torus().unwrap().diff(&Torus2::origin());
            let (alpha, _) = split.decompose(v);
            // Unstable component must satisfy |α|·λ_u^k <= c for k <= n.
            assert!(alpha.abs() * split.unstable.powi(n as i32) <= 0.05 + 1e-12);
        }
    }

    #[test]
    fn example1_anchor_ball_holds_tail_of_ideal_points() {
        let sys = SystemHandle::example1();
        let x = Point::Example1(Example1Point::anchor());
        let samples: Vec<Sample> = (1..=200).map(|k| Sample::Point(Point::Example1(Example1Point::Ideal(k)))).collect();
        for c in [0.1, 0.07, 1.0 / 3.0] {
            let ws = local_stable(&sys, &x, c, 30, &samples).unwrap();
            let first = (1.0 / c).ceil() as u64;
            let expected: Vec<Point> =
                (first..=200).map(|k| Point::Example1(Example1Point::Ideal(k))).collect();
            assert_eq!(ws, expected, "c = {c}");
        }
    }

    #[test]
    fn example1_anchor_classifies_countable_like() {
        let sys = SystemHandle::example1();
        let x = Point::Example1(Example1Point::anchor());
        let levels = default_levels(&sys, &x).unwrap();
        let r = dynamical_ball(&sys, &x, BallParams::new(0.1, 60), &levels).unwrap();
        assert_eq!(*r.classification(), Classification::CountableLike, "{:?}", r.verdict);
        let ideal: Vec<u64> = r
            .members_gamma
            .iter()
            .filter_map(|p| match p {
                Point::Example1(Example1Point::Ideal(k)) => Some(*k),
                _ => None,
            })
            .collect();
        assert_eq!(ideal, (10..=10_000).collect::<Vec<_>>());
        let asym = asymptotic_ball(&sys, &x, 0.1, 60, 1e-3, &levels[2].points).unwrap();
        assert_eq!(asym, vec![x]);
    }

    #[test]
    fn cantor_identity_balls_are_never_trivial() {
        let sys = SystemHandle::cantor_identity();
        let x = Point::Cantor(CantorPoint { bits: vec![0, 1, 1, 0, 1, 0, 0, 1] });
        let levels = default_levels(&sys, &x).unwrap();
        for eps in [0.2, 0.1, 0.05, 0.025] {
            let r = dynamical_ball(&sys, &x, BallParams::new(eps, 10), &levels).unwrap();
            assert!(!r.classification().is_trivial(), "eps {eps}");
        }
    }

    #[test]
    fn classification_rules() {
        let sys = SystemHandle::example1();
        let seg = |k: u64| {
            OrbitSegment::compute(&sys, &Point::Example1(Example1Point::Ideal(k)), -2, 2).unwrap()
        };
        let center = seg(1);
        let single = |res| LevelMembers { resolution: res, center: center.clone(), members: vec![center.clone()] };
        let v = classify_structure(&sys, &[single(0.1), single(0.01)], 0.01).unwrap();
        assert_eq!(v.classification, Classification::Trivial);

        let fam = |k_max: u64| LevelMembers {
            resolution: 1e-6,
            center: center.clone(),
            members: (1..=k_max).map(|k| seg(k)).collect(),
        };
        let v = classify_structure(&sys, &[fam(5), fam(5)], 0.01).unwrap();
        assert_eq!(v.classification, Classification::Finite { count: 5 });
        let v = classify_structure(&sys, &[fam(50), fam(500), fam(5000)], 0.025).unwrap();
        assert_eq!(v.classification, Classification::CountableLike);
        assert!(classify_structure(&sys, &[fam(5)], 0.01).is_err());
    }

    #[test]
    fn shift_levels_cover_cylinders() {
        let sys = SystemHandle::shift2();
        let s = ShiftPoint::centered(vec![0; 21]).unwrap();
        let levels = default_levels(&sys, &Point::Shift(s)).unwrap();
        assert_eq!(levels.len(), 3);
        assert_eq!(levels[0].points.len(), 32);
        assert_eq!(levels[2].points.len(), 512);
    }
}
