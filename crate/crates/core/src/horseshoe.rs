//! Links between near-periodic orbits, word-indexed pseudo-orbits and
//! shadowed horseshoe certificates.
//!
//! A link `(x, y, n)` has `x` and `y` close at times `0` and `n`, apart by
//! `γ > ε` in between, and `f^n(x)` close to `x`. Concatenating the blocks
//! `[x, …, f^{n-1}x]` and `[y, …, f^{n-1}y]` along a binary word gives a
//! pseudo-orbit; its shadow is a genuine orbit that reads the word back.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::balls::{default_levels, dynamical_ball, BallParams, BallReport, Sample, SampleLevel};
use crate::entropy::{entropy_estimate, EntropyEstimate};
use crate::error::{Error, Result};
use crate::orbits::{concatenate_segments, quotient_shadow_with, linear_shadow_with, Closure, OrbitSegment, PseudoOrbit};
use crate::spaces::{wrap_half, Dynamics, HyperbolicMatrix, Point, SystemHandle, SystemKind, Torus2};

/// Deepest certificate the tooling will build (2^12 words).
pub const MAX_DEPTH: usize = 12;
/// Denominator of the exact offset used for antipodal candidates.
const ANTIPODAL_DEN: i64 = 1 << 24;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkParams {
    pub epsilon: f64,
    pub delta: f64,
    pub n_max: u32,
    /// Upper bound on γ; `None` accepts any separation.
    pub gamma_max: Option<f64>,
    /// The δ-cloud around each centre is a `(2h+1)²` grid inside the δ-disc.
    pub cloud_half_width: i64,
}

impl LinkParams {
    pub fn new(epsilon: f64, delta: f64, n_max: u32) -> Self {
        Self { epsilon, delta, n_max, gamma_max: None, cloud_half_width: 8 }
    }

    fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) || !(self.epsilon > self.delta) {
            return Err(Error::InvalidParameter(format!(
                "link search needs 0 < delta < epsilon, got delta = {}, epsilon = {}",
                self.delta, self.epsilon
            )));
        }
        if self.n_max == 0 || self.cloud_half_width < 1 {
            return Err(Error::InvalidParameter("n_max and cloud_half_width must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub x: Point,
    pub y: Point,
    pub n: u32,
    pub delta: f64,
    pub epsilon: f64,
    pub gamma: f64,
    /// Iterate `0 <= k < n` where `d(f^k x, f^k y) = γ`.
    pub peak: u32,
    /// `d(x, y)`.
    pub start_gap: f64,
    /// `d(f^n x, f^n y)`.
    pub end_gap: f64,
    /// `d(f^n x, x)`.
    pub closure: f64,
}

impl Link {
    /// Re-evaluate every link invariant from the stored points.
    pub fn check<D: Dynamics + ?Sized>(&self, dynamics: &D) -> Result<bool> {
        match evaluate_pair(dynamics, &self.x, &self.y, self.n, self.delta, self.epsilon, None)? {
            Some(l) => Ok((l.gamma - self.gamma).abs() <= 1e-12),
            None => Ok(false),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkScan {
    pub links: Vec<Link>,
    pub centers_scanned: usize,
    pub pairs_scanned: usize,
}

fn evaluate_pair<D: Dynamics + ?Sized>(
    dynamics: &D,
    x: &Point,
    y: &Point,
    n: u32,
    delta: f64,
    epsilon: f64,
    gamma_max: Option<f64>,
) -> Result<Option<Link>> {
    let start_gap = dynamics.dist(x, y)?;
    if !(start_gap < delta) {
        return Ok(None);
    }
    let (mut fx, mut fy) = (x.clone(), y.clone());
    let (mut gamma, mut peak) = (start_gap, 0);
    for k in 1..n {
        fx = dynamics.forward(&fx)?;
        fy = dynamics.forward(&fy)?;
        let d = dynamics.dist(&fx, &fy)?;
        if gamma_max.is_some_and(|g| d > g) {
            return Ok(None);
        }
        if d > gamma {
            gamma = d;
            peak = k;
        }
    }
    let fnx = dynamics.forward(&fx)?;
    let fny = dynamics.forward(&fy)?;
    let end_gap = dynamics.dist(&fnx, &fny)?;
    let closure = dynamics.dist(&fnx, x)?;
    if !(end_gap < delta) || !(closure < delta) || !(gamma > epsilon) {
        return Ok(None);
    }
    Ok(Some(Link {
        x: x.clone(),
        y: y.clone(),
        n,
        delta,
        epsilon,
        gamma,
        peak,
        start_gap,
        end_gap,
        closure,
    }))
}

/// Grid points strictly inside the δ-disc around `x` (torus-type points).
fn delta_cloud(system: &SystemHandle, x: &Point, delta: f64, half_width: i64) -> Result<Vec<Point>> {
    let Some(t) = x.torus() else {
        return Ok(Vec::new());
    };
    let den = ((half_width as f64) / delta).ceil() as i64 + 1;
    let mut out = Vec::new();
    for dx in -half_width..=half_width {
        for dy in -half_width..=half_width {
            if (dx, dy) == (0, 0) || ((dx * dx + dy * dy) as f64).sqrt() / den as f64 >= delta {
                continue;
            }
            out.push(system.torus_point(t.offset(dx, dy, den)?)?);
        }
    }
    Ok(out)
}

/// On the antipodal quotient: the point `y = x - a·e_u` where `2x ≡ a·e_u + b·e_s`
/// (smallest lift). The orbit of `y` leaves `x` along `E^u` and is pulled
/// onto the antipodal orbit `-f^k(x)` along `E^s`, so it rejoins `x` in the
/// quotient.
pub fn antipodal_candidate(matrix: &HyperbolicMatrix, x: &Torus2) -> Result<Torus2> {
    let [cx, cy] = x.coords();
    let r = [wrap_half(2.0 * cx), wrap_half(2.0 * cy)];
    let split = matrix.splitting();
    let (a, _) = split.decompose(r);
    let v = split.compose(-a, 0.0);
    let d = ANTIPODAL_DEN as f64;
    x.offset((v[0] * d).round() as i64, (v[1] * d).round() as i64, ANTIPODAL_DEN)
}

fn candidates(system: &SystemHandle, x: &Point, params: &LinkParams) -> Result<Vec<Point>> {
    let mut ys = delta_cloud(system, x, params.delta, params.cloud_half_width)?;
    if let (SystemKind::Sphere { matrix }, Point::Sphere(t)) = (&system.kind, x) {
        if t.is_exact() {
            ys.push(Point::sphere(antipodal_candidate(matrix, t)?));
        }
    }
    Ok(ys)
}

/// Scan δ-clouds around near-periodic centres for links. An empty result
/// is a valid outcome. At most one link (smallest gaps) is kept per
/// centre and period.
pub fn find_link(system: &SystemHandle, centers: &[Point], params: LinkParams) -> Result<LinkScan> {
    params.validate()?;
    let per_center = centers
        .par_iter()
        .map(|x| -> Result<(Vec<Link>, usize)> {
            let ys = candidates(system, x, &params)?;
            let mut found = Vec::new();
            let mut pairs = 0usize;
            let mut fx = x.clone();
            for n in 1..=params.n_max {
                fx = system.forward(&fx)?;
                if !(system.dist(&fx, x)? < params.delta) {
                    continue;
                }
                let mut best: Option<Link> = None;
                for y in &ys {
                    pairs += 1;
                    if let Some(l) =
                        evaluate_pair(system, x, y, n, params.delta, params.epsilon, params.gamma_max)?
                    {
                        let score = l.start_gap.max(l.end_gap);
                        if best.as_ref().is_none_or(|b| score < b.start_gap.max(b.end_gap)) {
                            best = Some(l);
                        }
                    }
                }
                found.extend(best);
            }
            Ok((found, pairs))
        })
        .collect::<Result<Vec<_>>>()?;
    let pairs_scanned = per_center.iter().map(|(_, p)| p).sum();
    Ok(LinkScan {
        links: per_center.into_iter().flat_map(|(l, _)| l).collect(),
        centers_scanned: centers.len(),
        pairs_scanned,
    })
}

/// Exact period-`n` points of the torus automorphism near the four
/// half-lattice points `h` (where `x ≡ -x`), with `x = h + (a·e_u + b·e_s)/2`,
/// `|a| <= a_max`, `|b| <= b_max`.
pub fn periodic_points_near_singular(
    matrix: &HyperbolicMatrix,
    n: u32,
    a_max: f64,
    b_max: f64,
) -> Result<Vec<Torus2>> {
    let an = matrix.power(n)?;
    let m = [[an[0][0] - 1, an[0][1]], [an[1][0], an[1][1] - 1]];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det == 0 {
        return Err(Error::InvalidParameter(format!("A^{n} - I is singular")));
    }
    let split = matrix.splitting();
    let (lu, ls) = (split.unstable.powi(n as i32), split.stable.powi(n as i32));
    // In eigen-coordinates (A^n - I) scales by (λ_u^n - 1) and (λ_s^n - 1).
    let (pu_max, ps_max) = ((lu - 1.0).abs() * a_max / 2.0, (ls - 1.0).abs() * b_max / 2.0);
    let [u0, u1] = split.unstable_dir;
    let [s0, s1] = split.stable_dir;
    let dd = u0 * s1 - s0 * u1;
    let adj = [[m[1][1], -m[0][1]], [-m[1][0], m[0][0]]];
    let mut out = Vec::new();
    for h in [[0.0, 0.0], [0.5, 0.0], [0.0, 0.5], [0.5, 0.5]] {
        let mh = [m[0][0] as f64 * h[0] + m[0][1] as f64 * h[1], m[1][0] as f64 * h[0] + m[1][1] as f64 * h[1]];
        let ext_x = pu_max * u0.abs() + ps_max * s0.abs();
        for mx in (mh[0] - ext_x).ceil() as i64..=(mh[0] + ext_x).floor() as i64 {
            let px = mx as f64 - mh[0];
            // pu = (px s1 - s0 py)/dd, ps = (u0 py - px u1)/dd; intersect both bands in py.
            let band = |coef: f64, offset: f64, bound: f64| -> (f64, f64) {
                if coef == 0.0 {
                    return if offset.abs() <= bound { (f64::NEG_INFINITY, f64::INFINITY) } else { (1.0, 0.0) };
                }
                let (p, q) = ((-bound - offset) / coef, (bound - offset) / coef);
                (p.min(q), p.max(q))
            };
            let (l1, h1) = band(-s0 / dd, px * s1 / dd, pu_max);
            let (l2, h2) = band(u0 / dd, -px * u1 / dd, ps_max);
            let (lo, hi) = (l1.max(l2), h1.min(h2));
            if lo > hi {
                continue;
            }
            for my in (mh[1] + lo).ceil() as i64..=(mh[1] + hi).floor() as i64 {
                let num = [adj[0][0] * mx + adj[0][1] * my, adj[1][0] * mx + adj[1][1] * my];
                let (num, den) = if det < 0 { ([-num[0], -num[1]], -det) } else { (num, det) };
                let t = Torus2::exact(num, den)?;
                if !out.contains(&t) {
                    out.push(t);
                }
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Word pseudo-orbits and certificates
// ---------------------------------------------------------------------------

pub fn word_string(word: &[u8]) -> String {
    word.iter().map(|b| if *b == 0 { '0' } else { '1' }).collect()
}

fn link_blocks<D: Dynamics + ?Sized>(dynamics: &D, link: &Link) -> Result<[Vec<Point>; 2]> {
    let n = link.n as i64 - 1;
    Ok([
        OrbitSegment::compute(dynamics, &link.x, 0, n)?.points,
        OrbitSegment::compute(dynamics, &link.y, 0, n)?.points,
    ])
}

/// Letter 0 contributes the block of `x`, letter 1 the block of `y`. Seams
/// are checked against `2δ`.
pub fn word_pseudo_orbit<D: Dynamics + ?Sized>(dynamics: &D, link: &Link, word: &[u8]) -> Result<PseudoOrbit> {
    let blocks = link_blocks(dynamics, link)?;
    word_pseudo_orbit_from(dynamics, link, &blocks, word)
}

fn word_pseudo_orbit_from<D: Dynamics + ?Sized>(
    dynamics: &D,
    link: &Link,
    blocks: &[Vec<Point>; 2],
    word: &[u8],
) -> Result<PseudoOrbit> {
    if word.is_empty() {
        return Err(Error::InvalidParameter("word must be nonempty".into()));
    }
    let segs: Vec<PseudoOrbit> = word
        .iter()
        .map(|&b| PseudoOrbit { points: blocks[(b != 0) as usize].clone(), delta: 2.0 * link.delta })
        .collect();
    concatenate_segments(dynamics, &segs, 2.0 * link.delta)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WordPoint {
    pub word: String,
    pub point: Point,
    pub shadow_epsilon: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HorseshoeCertificate {
    pub system: String,
    pub link: Link,
    pub depth: usize,
    /// Link period; the certified set is invariant under `f^(period·depth)`.
    pub period: u32,
    pub points: Vec<WordPoint>,
    pub shadow_epsilon: f64,
    /// Minimum over distinct words of the largest orbit distance in the window.
    pub separation: f64,
    /// Largest pairwise orbit distance over the window.
    pub diameter: f64,
    /// Largest distance from any certified orbit to the orbit of `x`.
    pub tube_radius: f64,
    pub readout_correct: bool,
    /// `log(2)/period`.
    pub entropy_bound: f64,
    #[serde(skip)]
    pub orbits: Vec<Vec<Point>>,
}

impl HorseshoeCertificate {
    /// Each certified point as a sample carrying its periodic orbit over `[-h, h]`.
    pub fn samples(&self, h: i64) -> Vec<Sample> {
        self.orbits
            .iter()
            .map(|o| Sample::Orbit(OrbitSegment::from_cycle(&self.system, o, -h, h)))
            .collect()
    }

    /// Greedy growth of the certified set at `n = period, 2·period, …, depth·period`.
    pub fn entropy<D: Dynamics + ?Sized>(&self, dynamics: &D, delta: f64) -> Result<EntropyEstimate> {
        let n_range: Vec<usize> = (1..=self.depth).map(|j| j * self.period as usize).collect();
        let h = (self.depth * self.period as usize) as i64;
        entropy_estimate(dynamics, &self.samples(h), delta, &n_range)
    }
}

fn shadow_periodic(system: &SystemHandle, po: &PseudoOrbit) -> Result<crate::orbits::ShadowResult> {
    match &system.kind {
        SystemKind::Torus { matrix } => linear_shadow_with(matrix, po, Closure::Periodic),
        SystemKind::Sphere { matrix } => quotient_shadow_with(matrix, po, Closure::Periodic),
        _ => Err(Error::ShadowUnavailable(system.name.clone())),
    }
}

/// Letter read from block `j` of an orbit: the nearer of the two link
/// orbits at the peak iterate.
fn read_word<D: Dynamics + ?Sized>(
    dynamics: &D,
    link: &Link,
    blocks: &[Vec<Point>; 2],
    orbit: &[Point],
    depth: usize,
) -> Result<Vec<u8>> {
    let n = link.n as usize;
    let k = link.peak as usize;
    (0..depth)
        .map(|j| {
            let p = &orbit[j * n + k];
            let dx = dynamics.dist(p, &blocks[0][k])?;
            let dy = dynamics.dist(p, &blocks[1][k])?;
            Ok((dy < dx) as u8)
        })
        .collect()
}

pub fn build_certificate(system: &SystemHandle, link: &Link, depth: usize) -> Result<HorseshoeCertificate> {
    if depth == 0 || depth > MAX_DEPTH {
        return Err(Error::InvalidParameter(format!("depth must be in 1..={MAX_DEPTH}, got {depth}")));
    }
    let blocks = link_blocks(system, link)?;
    let words = crate::balls::all_words(depth);
    let shadows = words
        .par_iter()
        .map(|w| {
            let po = word_pseudo_orbit_from(system, link, &blocks, w)?;
            let s = shadow_periodic(system, &po)?;
            if !s.is_genuine() {
                return Err(Error::ShadowUnavailable(format!(
                    "shadow of word {} is not a genuine orbit (defect {:e})",
                    word_string(w),
                    s.step_defect
                )));
            }
            Ok(s)
        })
        .collect::<Result<Vec<_>>>()?;
    let shadow_epsilon = shadows.iter().map(|s| s.epsilon_achieved).fold(0.0, f64::max);
    let limit = (link.epsilon - link.epsilon / 4.0) / 2.0;
    if !(shadow_epsilon < limit) {
        return Err(Error::IndistinguishableWords { shadow_eps: shadow_epsilon, limit });
    }

    let mut readout_correct = true;
    for (w, s) in words.iter().zip(&shadows) {
        let read = read_word(system, link, &blocks, &s.orbit, depth)?;
        if &read != w {
            return Err(Error::ReadoutFailed {
                word: word_string(w),
                block: read.iter().zip(w).position(|(a, b)| a != b).unwrap_or(0),
            });
        }
        readout_correct &= &read == w;
    }

    let orbits: Vec<Vec<Point>> = shadows.iter().map(|s| s.orbit.clone()).collect();
    let len = orbits[0].len();
    let (separation, diameter) = pairwise_extremes(system, &orbits)?;
    let mut tube_radius = 0.0f64;
    for o in &orbits {
        for (k, p) in o.iter().enumerate() {
            tube_radius = tube_radius.max(system.dist(p, &blocks[0][k % link.n as usize])?);
        }
    }
    debug_assert_eq!(len, depth * link.n as usize);
    Ok(HorseshoeCertificate {
        system: system.name.clone(),
        link: link.clone(),
        depth,
        period: link.n,
        points: words
            .iter()
            .zip(&shadows)
            .map(|(w, s)| WordPoint { word: word_string(w), point: s.shadow_point.clone(), shadow_epsilon: s.epsilon_achieved })
            .collect(),
        shadow_epsilon,
        separation,
        diameter,
        tube_radius,
        readout_correct,
        entropy_bound: std::f64::consts::LN_2 / link.n as f64,
        orbits,
    })
}

/// `(min over pairs of max_k d, max over pairs of max_k d)`.
fn pairwise_extremes<D: Dynamics + ?Sized>(dynamics: &D, orbits: &[Vec<Point>]) -> Result<(f64, f64)> {
    let rows = (0..orbits.len())
        .into_par_iter()
        .map(|i| {
            let mut sep = f64::INFINITY;
            let mut diam = 0.0f64;
            for j in i + 1..orbits.len() {
                let mut m = 0.0f64;
                for (p, q) in orbits[i].iter().zip(&orbits[j]) {
                    m = m.max(dynamics.dist(p, q)?);
                }
                sep = sep.min(m);
                diam = diam.max(m);
            }
            Ok((sep, diam))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(rows.into_iter().fold((f64::INFINITY, 0.0), |(s, d), (a, b)| (s.min(a), d.max(b))))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateCheck {
    /// Largest distance between a stored orbit and its word's pseudo-orbit.
    pub max_tracking: f64,
    /// Largest one-step defect of the stored orbits (closing step included).
    pub max_step_defect: f64,
    pub distinct_points: usize,
    pub readout_correct: bool,
    pub within_tube: bool,
    pub separated: bool,
}

impl CertificateCheck {
    pub fn passed(&self, cert: &HorseshoeCertificate) -> bool {
        self.max_tracking <= cert.shadow_epsilon + 1e-12
            && self.max_step_defect <= crate::spaces::FLOAT_TOL
            && self.distinct_points == cert.points.len()
            && self.readout_correct
            && self.within_tube
            && self.separated
    }
}

/// Recompute every certificate claim from the stored orbits and the link.
pub fn verify_certificate(system: &SystemHandle, cert: &HorseshoeCertificate) -> Result<CertificateCheck> {
    let link = &cert.link;
    let blocks = link_blocks(system, link)?;
    let words = crate::balls::all_words(cert.depth);
    let mut max_tracking = 0.0f64;
    let mut max_step_defect = 0.0f64;
    let mut readout_correct = true;
    for (w, orbit) in words.iter().zip(&cert.orbits) {
        let po = word_pseudo_orbit_from(system, link, &blocks, w)?;
        for (p, q) in po.points.iter().zip(orbit) {
            max_tracking = max_tracking.max(system.dist(p, q)?);
        }
        for k in 0..orbit.len() {
            let img = system.forward(&orbit[k])?;
            max_step_defect = max_step_defect.max(system.dist(&img, &orbit[(k + 1) % orbit.len()])?);
        }
        readout_correct &= &read_word(system, link, &blocks, orbit, cert.depth)? == w;
    }
    let (separation, diameter) = pairwise_extremes(system, &cert.orbits)?;
    let mut distinct: Vec<&Point> = Vec::new();
    for wp in &cert.points {
        let mut fresh = true;
        for q in &distinct {
            if system.dist(&wp.point, q)? == 0.0 {
                fresh = false;
                break;
            }
        }
        if fresh {
            distinct.push(&wp.point);
        }
    }
    let se = cert.shadow_epsilon;
    Ok(CertificateCheck {
        max_tracking,
        max_step_defect,
        distinct_points: distinct.len(),
        readout_correct,
        within_tube: diameter <= 2.0 * link.gamma + 2.0 * se,
        separated: separation > link.epsilon - 2.0 * se,
    })
}

// ---------------------------------------------------------------------------
// Link selection and ball witnesses
// ---------------------------------------------------------------------------

/// Parameters of the quotient-sphere horseshoe search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereSearch {
    pub link: LinkParams,
    pub n_min: u32,
    /// Bound on the stable half-offset of the centres from the singular points.
    pub b_max: f64,
}

impl Default for SphereSearch {
    fn default() -> Self {
        Self {
            link: LinkParams { epsilon: 0.012, delta: 0.004, n_max: 10, gamma_max: Some(0.025), cloud_half_width: 4 },
            n_min: 6,
            b_max: 0.3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereHorseshoe {
    pub search: SphereSearch,
    pub scan: LinkScan,
    /// Index into `scan.links` of the link the certificate was built on.
    pub chosen: Option<usize>,
    pub certificate: Option<HorseshoeCertificate>,
    pub rejected: Vec<String>,
}

/// Search periodic centres near the singular points of the quotient for a
/// link whose depth-`depth` certificate builds, shortest period first.
pub fn sphere_horseshoe(system: &SystemHandle, search: SphereSearch, depth: usize) -> Result<SphereHorseshoe> {
    let SystemKind::Sphere { matrix } = &system.kind else {
        return Err(Error::KindMismatch { expected: crate::spaces::PointKind::SphereQuotient, found: system.point_kind() });
    };
    let mut centers = Vec::new();
    for n in search.n_min..=search.link.n_max {
        for t in periodic_points_near_singular(matrix, n, search.link.delta, search.b_max)? {
            let p = Point::sphere(t);
            if !centers.contains(&p) {
                centers.push(p);
            }
        }
    }
    let mut scan = find_link(system, &centers, search.link)?;
    scan.links.sort_by(|a, b| {
        a.n.cmp(&b.n)
            .then(a.start_gap.max(a.end_gap).total_cmp(&b.start_gap.max(b.end_gap)))
    });
    let mut rejected = Vec::new();
    for (i, link) in scan.links.iter().enumerate() {
        match build_certificate(system, link, depth) {
            Ok(cert) => {
                return Ok(SphereHorseshoe { search, chosen: Some(i), certificate: Some(cert), scan, rejected });
            }
            Err(e @ (Error::IndistinguishableWords { .. } | Error::ReadoutFailed { .. } | Error::SeamViolation { .. })) => {
                rejected.push(format!("link {i}: {e}"));
            }
            Err(e) => return Err(e),
        }
    }
    Ok(SphereHorseshoe { search, chosen: None, certificate: None, scan, rejected })
}

/// Ball at `center` with horseshoe witnesses injected: refinement level `i`
/// of `L` carries the certificate of depth `depth - 2(L-1-i)`. Without a
/// link, or at depth 0, the plain ball is returned.
pub fn ball_cantor_witness(
    system: &SystemHandle,
    center: &Point,
    params: BallParams,
    link: Option<&Link>,
    depth: usize,
) -> Result<BallReport> {
    let mut levels: Vec<SampleLevel> = default_levels(system, center)?;
    let Some(link) = link.filter(|_| depth > 0) else {
        return dynamical_ball(system, center, params, &levels);
    };
    let count = levels.len();
    let mut witnesses = 0;
    for (i, level) in levels.iter_mut().enumerate() {
        let d = depth as i64 - 2 * (count - 1 - i) as i64;
        if d < 1 {
            continue;
        }
        let cert = build_certificate(system, link, d as usize)?;
        let h = params.horizon.max((d as i64) * link.n as i64);
        level.points.extend(cert.samples(h));
        witnesses = cert.points.len();
    }
    let mut report = dynamical_ball(system, center, params, &levels)?;
    report.witnesses = witnesses;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere_link() -> Link {
        let sys = SystemHandle::sphere();
        let h = sphere_horseshoe(&sys, SphereSearch::default(), 2).unwrap();
        h.scan.links[h.chosen.expect("sphere link")].clone()
    }

    #[test]
    fn delta_must_be_below_epsilon() {
        let sys = SystemHandle::cat();
        let c = [Point::Torus(Torus2::origin())];
        assert!(find_link(&sys, &c, LinkParams::new(0.01, 0.01, 3)).is_err());
        assert!(find_link(&sys, &c, LinkParams::new(0.01, 0.02, 3)).is_err());
    }

    #[test]
    fn periodic_points_are_periodic() {
        let a = HyperbolicMatrix::CAT;
        for n in 3..=8 {
            let an = a.power(n).unwrap();
            for t in periodic_points_near_singular(&a, n, 0.01, 0.3).unwrap() {
                assert_eq!(t.apply_matrix(&an), t, "period {n}");
            }
        }
    }

    #[test]
    fn cat_map_has_no_short_links() {
        let sys = SystemHandle::cat();
        let a = HyperbolicMatrix::CAT;
        let mut centers = Vec::new();
        for n in 1..=5 {
            centers.extend(periodic_points_near_singular(&a, n, 1.0, 1.0).unwrap().into_iter().map(Point::Torus));
        }
        let mut p = LinkParams::new(0.05, 1e-4, 5);
        p.gamma_max = Some(0.1);
        let scan = find_link(&sys, &centers, p).unwrap();
        assert!(scan.links.is_empty());
        assert!(scan.pairs_scanned > 0);
    }

    #[test]
    fn sphere_link_satisfies_invariants() {
        let sys = SystemHandle::sphere();
        let link = sphere_link();
        assert!(link.check(&sys).unwrap());
        assert!(link.start_gap < link.delta && link.end_gap < link.delta && link.closure < link.delta);
        assert!(link.gamma > link.epsilon);
    }

    #[test]
    fn word_pseudo_orbits_are_2delta_chains() {
        let sys = SystemHandle::sphere();
        let link = sphere_link();
        for w in [vec![0u8; 4], vec![1, 0], vec![1, 1, 0, 1]] {
            let po = word_pseudo_orbit(&sys, &link, &w).unwrap();
            assert_eq!(po.len(), w.len() * link.n as usize);
            assert!(crate::orbits::verify_pseudo_orbit(&sys, &po).unwrap().valid);
        }
        assert!(word_pseudo_orbit(&sys, &link, &[]).is_err());
    }

    #[test]
    fn depth_one_certificate() {
        let sys = SystemHandle::sphere();
        let link = sphere_link();
        let cert = build_certificate(&sys, &link, 1).unwrap();
        assert_eq!(cert.points.len(), 2);
        assert!(cert.separation > link.epsilon - 2.0 * cert.shadow_epsilon);
        let check = verify_certificate(&sys, &cert).unwrap();
        assert!(check.passed(&cert), "{check:?}");
        assert!(build_certificate(&sys, &link, 0).is_err());
        assert!(build_certificate(&sys, &link, MAX_DEPTH + 1).is_err());
    }

    #[test]
    fn cat_map_ball_is_not_augmented() {
        let sys = SystemHandle::cat();
        let x = Point::Torus(Torus2::exact([1, 2], 5).unwrap());
        let r = ball_cantor_witness(&sys, &x, BallParams::new(0.05, 60), None, 6).unwrap();
        assert_eq!(r.witnesses, 0);
        assert!(r.classification().is_trivial());
    }

    #[test]
    fn depth_zero_leaves_ball_unchanged() {
        let sys = SystemHandle::sphere();
        let link = sphere_link();
        let r = ball_cantor_witness(&sys, &link.x, BallParams::new(0.1, 60), Some(&link), 0).unwrap();
        assert_eq!(r.witnesses, 0);
        assert_eq!(r.members_gamma.len(), 1);
    }
}
