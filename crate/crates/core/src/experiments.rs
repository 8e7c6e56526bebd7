//! Named experiments: configuration, runners and JSON reports with
//! per-clause verdicts.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::balls::{
    asymptotic_ball, default_levels, dynamical_ball, expansive_points_scan, global_grid, BallParams, Classification,
};
use crate::chainrec::{example1_class_counts, transitivity_check};
use crate::entropy::{entropy_estimate, entropy_expansivity_check, entropy_expansivity_of_balls, lsq_slope};
use crate::error::{Error, Result};
use crate::horseshoe::{ball_cantor_witness, sphere_horseshoe, verify_certificate, SphereHorseshoe, SphereSearch};
use crate::orbits::{perturbed_pseudo_orbit, shadow};
use crate::spaces::{CantorPoint, Dynamics, Example1Point, HyperbolicMatrix, Point, SystemHandle, Torus2};

pub const EXPERIMENTS: [&str; 8] =
    ["shadowing", "entropy", "horseshoe", "theorem-a", "example1", "theorem-b", "asymptotic", "negative-controls"];

/// Denominator of seeded exact sample points; a multiple of every grid
/// denominator so grid offsets stay exact.
const SAMPLE_DEN: i64 = 9_970_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pass,
    Fail,
    Inconclusive,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Pass => 0,
            Outcome::Fail => 2,
            Outcome::Inconclusive => 3,
        }
    }

    fn from_bool(ok: bool) -> Self {
        if ok {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub criterion: u32,
    pub clause: String,
    pub outcome: Outcome,
    pub detail: String,
}

impl Verdict {
    fn new(criterion: u32, clause: &str, ok: bool, detail: String) -> Self {
        Self { criterion, clause: clause.to_string(), outcome: Outcome::from_bool(ok), detail }
    }
}

/// Every field is optional; each experiment fills its own defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<String>,
    pub system: Option<String>,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub horizon: Option<i64>,
    pub depth: Option<usize>,
    pub seed: Option<u64>,
    pub grid_step: Option<f64>,
    pub samples: Option<usize>,
    pub length: Option<usize>,
    pub out: Option<String>,
}

impl ExperimentConfig {
    fn seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| Error::InvalidParameter("this experiment is randomized: a seed is required".into()))
    }

    fn positive(name: &str, v: f64) -> Result<f64> {
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
        }
    }

    fn epsilon_or(&self, d: f64) -> Result<f64> {
        Self::positive("epsilon", self.epsilon.unwrap_or(d))
    }

    fn delta_or(&self, d: f64) -> Result<f64> {
        Self::positive("delta", self.delta.unwrap_or(d))
    }

    fn horizon_or(&self, d: i64) -> Result<i64> {
        let h = self.horizon.unwrap_or(d);
        if h < 1 {
            return Err(Error::InvalidParameter(format!("horizon must be >= 1, got {h}")));
        }
        Ok(h)
    }

    fn system_or(&self, d: &str) -> Result<SystemHandle> {
        SystemHandle::from_id(self.system.as_deref().unwrap_or(d), None)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub experiment: String,
    pub config: ExperimentConfig,
    pub results: Value,
    pub verdicts: Vec<Verdict>,
    pub outcome: Outcome,
    pub wall_time_s: f64,
}

impl Report {
    /// The report without its wall-time field; identical for identical
    /// configurations.
    pub fn payload(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        v.as_object_mut().unwrap().remove("wall_time_s");
        v
    }
}

fn overall(verdicts: &[Verdict]) -> Outcome {
    if verdicts.iter().any(|v| v.outcome == Outcome::Fail) {
        Outcome::Fail
    } else if verdicts.iter().any(|v| v.outcome == Outcome::Inconclusive) {
        Outcome::Inconclusive
    } else {
        Outcome::Pass
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Report> {
    let id = config
        .experiment
        .clone()
        .ok_or_else(|| Error::InvalidParameter("experiment id missing".into()))?;
    let start = Instant::now();
    let (results, verdicts) = match id.as_str() {
        "shadowing" => run_shadowing(config)?,
        "entropy" => run_entropy(config)?,
        "horseshoe" => run_horseshoe(config)?,
        "theorem-a" => run_theorem_a(config)?,
        "example1" => run_example1(config)?,
        "theorem-b" => run_theorem_b_cycle(config)?,
        "asymptotic" => run_asymptotic(config)?,
        "negative-controls" => run_negative_controls(config)?,
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown experiment {other:?}; known: {}",
                EXPERIMENTS.join(", ")
            )))
        }
    };
    Ok(Report {
        experiment: id,
        config: config.clone(),
        results,
        outcome: overall(&verdicts),
        verdicts,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

type Run = Result<(Value, Vec<Verdict>)>;

/// Seeded exact points of the torus.
pub fn sample_torus_points(seed: u64, count: usize) -> Result<Vec<Torus2>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| Torus2::exact([rng.gen_range(0..SAMPLE_DEN), rng.gen_range(0..SAMPLE_DEN)], SAMPLE_DEN))
        .collect()
}

// ---------------------------------------------------------------------------
// Criterion 1: constructive shadowing
// ---------------------------------------------------------------------------

pub fn run_shadowing(cfg: &ExperimentConfig) -> Run {
    let system = cfg.system_or("cat")?;
    let seed = cfg.seed()?;
    let delta = cfg.delta_or(1e-4)?;
    let length = cfg.length.unwrap_or(2000);
    let count = cfg.samples.unwrap_or(100);
    let matrix = system
        .matrix()
        .ok_or_else(|| Error::ShadowUnavailable(format!("{} has no shadowing constant", system.name)))?;
    let bound = matrix.splitting().shadow_constant() * delta;
    let starts = sample_torus_points(seed, count)?;
    let mut rows = Vec::with_capacity(count);
    let (mut worst_eps, mut worst_defect) = (0.0f64, 0.0f64);
    for (i, t) in starts.iter().enumerate() {
        let x0 = system.torus_point(*t)?;
        let po = perturbed_pseudo_orbit(&system, &x0, delta, length, seed.wrapping_add(i as u64))?;
        let s = shadow(&system, &po)?;
        worst_eps = worst_eps.max(s.epsilon_achieved);
        worst_defect = worst_defect.max(s.step_defect);
        rows.push(json!({"index": i, "epsilon": s.epsilon_achieved, "step_defect": s.step_defect}));
    }
    let results = json!({
        "system": system.name, "delta": delta, "length": length, "count": count,
        "shadow_constant": matrix.splitting().shadow_constant(), "bound": bound,
        "max_epsilon": worst_eps, "max_step_defect": worst_defect, "orbits": rows,
    });
    let verdicts = vec![
        Verdict::new(1, "max shadow error <= C·delta·(1+1e-6)", worst_eps <= bound * (1.0 + 1e-6),
            format!("max error {worst_eps:.6e}, bound {bound:.6e}")),
        Verdict::new(1, "shadow orbits genuine to 1e-9", worst_defect <= 1e-9,
            format!("max step defect {worst_defect:.3e}")),
    ];
    Ok((results, verdicts))
}

// ---------------------------------------------------------------------------
// Criterion 2: entropy of the cat map
// ---------------------------------------------------------------------------

pub fn run_entropy(cfg: &ExperimentConfig) -> Run {
    let system = cfg.system_or("cat")?;
    let delta = cfg.delta_or(0.05)?;
    let step = cfg.grid_step.unwrap_or(0.02);
    let den = (1.0 / ExperimentConfig::positive("grid_step", step)?).round() as i64;
    let n_max = cfg.horizon_or(16)? as usize;
    let n_range: Vec<usize> = (1..=n_max).collect();
    let cloud: Vec<_> = global_grid(&system, den)?.into_iter().map(Into::into).collect();
    let est = entropy_estimate(&system, &cloud, delta, &n_range)?;
    // Diagnostic only: growth rate before the count hits the cloud size.
    let free: Vec<_> = est.counts.iter().filter(|&&(_, s)| s < cloud.len()).collect();
    let unsaturated_slope = (free.len() >= 2).then(|| {
        let xs: Vec<f64> = free.iter().map(|&&(n, _)| n as f64).collect();
        let ys: Vec<f64> = free.iter().map(|&&(_, s)| (s as f64).ln()).collect();
        lsq_slope(&xs, &ys)
    });
    let target = system.matrix().map(|m| m.splitting().unstable.abs().ln());
    let mut verdicts = Vec::new();
    if let Some(h) = target {
        let rel = (est.slope - h).abs() / h;
        verdicts.push(Verdict::new(2, "slope within 15% of log|lambda_u|", rel <= 0.15,
            format!("slope {:.4}, target {h:.4}, relative error {:.1}%", est.slope, rel * 100.0)));
    }
    let results = json!({
        "system": system.name, "grid_den": den, "cloud": cloud.len(), "delta": delta,
        "estimate": est, "target": target,
        "count_ceiling_log": (cloud.len() as f64).ln(),
        "unsaturated_slope": unsaturated_slope,
    });
    Ok((results, verdicts))
}

// ---------------------------------------------------------------------------
// Criterion 3: horseshoe certificate
// ---------------------------------------------------------------------------

fn sphere_search(cfg: &ExperimentConfig) -> Result<SphereSearch> {
    let mut s = SphereSearch::default();
    if let Some(e) = cfg.epsilon {
        s.link.epsilon = ExperimentConfig::positive("epsilon", e)?;
    }
    if let Some(d) = cfg.delta {
        s.link.delta = ExperimentConfig::positive("delta", d)?;
    }
    Ok(s)
}

fn horseshoe_summary(h: &SphereHorseshoe) -> Value {
    json!({
        "centers_scanned": h.scan.centers_scanned,
        "pairs_scanned": h.scan.pairs_scanned,
        "links_found": h.scan.links.len(),
        "rejected": h.rejected,
        "link": h.chosen.map(|i| &h.scan.links[i]),
    })
}

pub fn run_horseshoe(cfg: &ExperimentConfig) -> Run {
    let system = cfg.system_or("sphere")?;
    let depth = cfg.depth.unwrap_or(8);
    let h = sphere_horseshoe(&system, sphere_search(cfg)?, depth)?;
    let mut results = horseshoe_summary(&h);
    let Some(cert) = &h.certificate else {
        let v = Verdict::new(3, "link found and certified", false, format!("{} links, none certified", h.scan.links.len()));
        return Ok((results, vec![v]));
    };
    let check = verify_certificate(&system, cert)?;
    let sep_delta = cert.link.epsilon / 2.0 - cert.shadow_epsilon;
    let est = cert.entropy(&system, sep_delta)?;
    let n = cert.period as f64;
    let tube = 2.0 * cert.link.gamma + 2.0 * cert.shadow_epsilon;
    results["certificate"] = json!({
        "depth": cert.depth, "period": cert.period, "points": cert.points.len(),
        "shadow_epsilon": cert.shadow_epsilon, "separation": cert.separation, "diameter": cert.diameter,
        "tube_radius": cert.tube_radius, "entropy_bound": cert.entropy_bound, "check": check,
        "entropy": est, "words": cert.points,
    });
    let expected = 1usize << depth;
    let verdicts = vec![
        Verdict::new(3, "distinct certified points", check.distinct_points == expected,
            format!("{} distinct of {expected}", check.distinct_points)),
        Verdict::new(3, "word readout correct for every word", check.readout_correct && cert.readout_correct,
            format!("readout {}", check.readout_correct)),
        Verdict::new(3, "orbits within 2·gamma + 2·shadow_eps", cert.diameter <= tube,
            format!("diameter {:.5}, tube {tube:.5}", cert.diameter)),
        Verdict::new(3, "certificate re-verified from scratch", check.passed(cert),
            format!("tracking {:.3e}, step defect {:.3e}", check.max_tracking, check.max_step_defect)),
        Verdict::new(3, "greedy slope on K >= 0.5·log(2)/N", est.slope >= 0.5 * std::f64::consts::LN_2 / n,
            format!("slope {:.4}, bound {:.4}", est.slope, 0.5 * std::f64::consts::LN_2 / n)),
    ];
    Ok((results, verdicts))
}

// ---------------------------------------------------------------------------
// Criterion 4: trivial dynamical balls on the cat map, sphere control
// ---------------------------------------------------------------------------

pub fn run_theorem_a(cfg: &ExperimentConfig) -> Run {
    let system = cfg.system_or("cat")?;
    let seed = cfg.seed()?;
    let eps = cfg.epsilon_or(0.05)?;
    let horizon = cfg.horizon_or(60)?;
    let count = cfg.samples.unwrap_or(50);
    let threshold = eps / 100.0;
    let mut verdicts = Vec::new();

    // The torus has diameter √2/2; larger radii make every ball the whole space.
    if eps > std::f64::consts::FRAC_1_SQRT_2 / 2.0 {
        verdicts.push(Verdict {
            criterion: 4,
            clause: "radius below half the diameter".into(),
            outcome: Outcome::Inconclusive,
            detail: format!("epsilon {eps} exceeds diameter/2; the test is vacuous"),
        });
        return Ok((json!({"epsilon": eps}), verdicts));
    }

    let mut points: Vec<Point> =
        sample_torus_points(seed, count)?.into_iter().map(|t| system.torus_point(t)).collect::<Result<_>>()?;
    let sphere = SystemHandle::sphere();
    let horseshoe = sphere_horseshoe(&sphere, SphereSearch::default(), 8)?;
    let link = horseshoe.chosen.map(|i| horseshoe.scan.links[i].clone());
    if system.name == "sphere" {
        points.extend(link.as_ref().map(|l| l.x.clone()));
    }

    let mut rows = Vec::new();
    let (mut trivial, mut transitive, mut ws_ok) = (0, 0, true);
    for x in &points {
        let tr = transitivity_check(&system, x, 20_000, 20)?;
        let ball = if system.name == "sphere" && link.as_ref().is_some_and(|l| &l.x == x) {
            ball_cantor_witness(&system, x, BallParams::new(eps, horizon), link.as_ref(), 8)?
        } else {
            dynamical_ball(&system, x, BallParams::new(eps, horizon), &default_levels(&system, x)?)?
        };
        // Local stable members must have converged by the horizon.
        let fx = system.iterate(x, horizon)?;
        let mut ws_gap = 0.0f64;
        for y in &ball.members_ws {
            ws_gap = ws_gap.max(system.dist(&fx, &system.iterate(y, horizon)?)?);
        }
        ws_ok &= ws_gap < threshold;
        trivial += ball.classification().is_trivial() as usize;
        transitive += tr.forward_transitive as usize;
        rows.push(json!({
            "point": x, "density_gap": tr.forward_density_gap, "classification": ball.classification(),
            "members": ball.members_gamma.len(), "ws_members": ball.members_ws.len(), "ws_gap": ws_gap,
            "set_identity": ball.check_set_identity(),
        }));
    }
    let all_transitive = transitive == points.len();
    verdicts.push(Verdict {
        criterion: 4,
        clause: "sample points pass the orbit-density check".into(),
        outcome: if all_transitive { Outcome::Pass } else { Outcome::Inconclusive },
        detail: format!("{transitive}/{} with density gap <= 0.01", points.len()),
    });
    verdicts.push(Verdict::new(4, "every dynamical ball trivial", trivial == points.len(),
        format!("{trivial}/{} trivial", points.len())));
    verdicts.push(Verdict::new(4, "local stable members converge by the horizon", ws_ok,
        format!("threshold {threshold:.1e}")));

    // Control on the quotient sphere at a horseshoe centre.
    let control = match &link {
        Some(l) => {
            let b = ball_cantor_witness(&sphere, &l.x, BallParams::new(eps, horizon), Some(l), 8)?;
            json!({"center": l.x, "classification": b.classification(), "witnesses": b.witnesses,
                   "levels": b.verdict.levels})
        }
        None => json!(null),
    };
    let cantor = control["classification"]["class"] == "cantor-like";
    verdicts.push(Verdict::new(4, "sphere control classifies cantor-like at >= 1 point", cantor,
        format!("control {}", control["classification"])));
    let results = json!({
        "system": system.name, "epsilon": eps, "horizon": horizon, "samples": rows,
        "sphere_control": control, "horseshoe": horseshoe_summary(&horseshoe),
    });
    Ok((results, verdicts))
}

// ---------------------------------------------------------------------------
// Criterion 5: Example 1
// ---------------------------------------------------------------------------

fn random_example1(rng: &mut ChaCha8Rng) -> Result<Example1Point> {
    Ok(if rng.gen_bool(0.5) {
        Example1Point::Ideal(rng.gen_range(1..=1000))
    } else {
        Example1Point::Base(Torus2::exact([rng.gen_range(0..10_000), rng.gen_range(0..10_000)], 10_000)?)
    })
}

/// Triangle inequality for three ideal points in integer arithmetic:
/// `1/a + 1/c <= (1/a + 1/b) + (1/b + 1/c)` (distinct indices).
fn ideal_triangle_exact(a: u64, b: u64, c: u64) -> bool {
    let d = |p: u64, q: u64| -> (i128, i128) {
        if p == q {
            (0, 1)
        } else {
            ((p + q) as i128, (p * q) as i128)
        }
    };
    let (n1, d1) = d(a, c);
    let (n2, d2) = d(a, b);
    let (n3, d3) = d(b, c);
    n1 * d2 * d3 <= (n2 * d3 + n3 * d2) * d1
}

pub fn run_example1(cfg: &ExperimentConfig) -> Run {
    let system = SystemHandle::example1();
    let seed = cfg.seed()?;
    let triples = cfg.samples.unwrap_or(100_000);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0usize;
    let mut exact_checked = 0usize;
    for _ in 0..triples {
        let (x, y, z) = (random_example1(&mut rng)?, random_example1(&mut rng)?, random_example1(&mut rng)?);
        let (px, py, pz) = (Point::Example1(x), Point::Example1(y), Point::Example1(z));
        let (dxy, dyz, dxz) = (system.dist(&px, &py)?, system.dist(&py, &pz)?, system.dist(&px, &pz)?);
        let mut ok = system.dist(&px, &px)? == 0.0
            && (dxy - system.dist(&py, &px)?).abs() == 0.0
            && (px == py || dxy > 0.0);
        if let (Example1Point::Ideal(a), Example1Point::Ideal(b), Example1Point::Ideal(c)) = (x, y, z) {
            exact_checked += 1;
            ok &= ideal_triangle_exact(a, b, c);
        } else {
            ok &= dxz <= dxy + dyz + 1e-12;
        }
        violations += (!ok) as usize;
    }

    let p0 = Point::Example1(Example1Point::anchor());
    let levels = default_levels(&system, &p0)?;
    let horizon = cfg.horizon_or(60)?;
    let ball = dynamical_ball(&system, &p0, BallParams::new(0.1, horizon), &levels)?;
    let ideal_members = |pts: &[Point]| -> Vec<u64> {
        pts.iter()
            .filter_map(|p| match p {
                Point::Example1(Example1Point::Ideal(k)) => Some(*k),
                _ => None,
            })
            .collect()
    };
    let members = ideal_members(&ball.members_gamma);
    let k_max = *crate::balls::IDEAL_COUNTS.last().unwrap();
    let expected: Vec<u64> = (10..=k_max).collect();
    let small = dynamical_ball(&system, &p0, BallParams::new(0.05, horizon), &levels)?;
    let small_count = ideal_members(&small.members_gamma).len();

    let deltas = [0.2, 0.1, 0.05];
    let counts = example1_class_counts(&system, &deltas, 10)?;
    let law_ok = counts.iter().all(|c| (c.singleton_ideal as i64 - (2.0 / c.delta).floor() as i64).abs() <= 2);
    let doubling_ok = counts.windows(2).all(|w| w[1].singleton_ideal as i64 >= 2 * w[0].singleton_ideal as i64 - 2);

    let verdicts = vec![
        Verdict::new(5, "metric axioms on sampled triples", violations == 0,
            format!("{violations} violations in {triples} triples ({exact_checked} ideal triples exact)")),
        Verdict::new(5, "Gamma_0.1(p0) ideal members are exactly p_m, m >= 10", members == expected,
            format!("{} ideal members, first {:?}, last {:?}", members.len(), members.first(), members.last())),
        Verdict::new(5, "singleton ideal classes equal floor(2/delta) +- 2", law_ok,
            format!("counts {:?} vs floor(2/delta) {:?}",
                counts.iter().map(|c| c.singleton_ideal).collect::<Vec<_>>(),
                deltas.iter().map(|d| (2.0 / d).floor() as i64).collect::<Vec<_>>())),
        Verdict::new(5, "singleton ideal classes double as delta halves", doubling_ok,
            format!("counts {:?}", counts.iter().map(|c| c.singleton_ideal).collect::<Vec<_>>())),
        Verdict::new(5, "|Gamma_0.05(p0)| >= 20 ideal members", small_count >= 20,
            format!("{small_count} ideal members")),
    ];
    let results = json!({
        "triples": triples, "violations": violations, "exact_ideal_triples": exact_checked,
        "ball_0.1": {"ideal_members": members.len(), "classification": ball.classification(),
                     "levels": ball.verdict.levels},
        "ball_0.05_ideal_members": small_count,
        "class_counts": counts,
    });
    Ok((results, verdicts))
}

// ---------------------------------------------------------------------------
// Criteria 6 and 8: countability radius vs entropy check, Cantor identity control
// ---------------------------------------------------------------------------

/// Largest radius of `grid` at which no sampled ball is Cantor-like, with the
/// classifications observed.
fn countability_radius(system: &SystemHandle, centers: &[Point], grid: &[f64], horizon: i64) -> Result<(Option<f64>, Value)> {
    let mut rows = Vec::new();
    let mut radius = None;
    for &c in grid {
        let mut classes = Vec::new();
        for x in centers {
            let b = dynamical_ball(system, x, BallParams::new(c, horizon), &default_levels(system, x)?)?;
            classes.push(b.verdict.classification);
        }
        let ok = classes.iter().all(|k| !matches!(k, Classification::CantorLike));
        rows.push(json!({"radius": c, "classes": classes}));
        if ok && radius.is_none() {
            radius = Some(c);
        }
    }
    Ok((radius, Value::Array(rows)))
}

const RADIUS_GRID: [f64; 3] = [0.2, 0.1, 0.05];

fn example1_centers() -> Result<Vec<Point>> {
    Ok(vec![
        Point::Example1(Example1Point::anchor()),
        Point::Example1(Example1Point::Ideal(3)),
        Point::Example1(Example1Point::Base(Torus2::exact([3_141, 2_718], 10_000)?)),
    ])
}

fn cantor_centers() -> Vec<Point> {
    [[0u8, 1, 1, 0, 1, 0, 0, 1], [1, 1, 1, 1, 0, 0, 0, 0], [0, 0, 0, 0, 0, 0, 0, 0]]
        .into_iter()
        .map(|b| Point::Cantor(CantorPoint { bits: b.to_vec() }))
        .collect()
}

fn cantor_control(horizon: i64) -> Result<(Value, Vec<Verdict>)> {
    let system = SystemHandle::cantor_identity();
    let centers = cantor_centers();
    let scan = expansive_points_scan(&system, &centers, &RADIUS_GRID, horizon.min(10), 0.1)?;
    let ent = entropy_expansivity_check(&system, 0.1, &centers, &[0.05, 0.025], &[2, 4, 6, 8], horizon.min(10))?;
    let verdicts = vec![
        Verdict::new(8, "identity on the Cantor set: no expansive point at any tested radius",
            scan.expansive_count() == 0, format!("{} expansive of {}", scan.expansive_count(), centers.len())),
        Verdict::new(8, "identity on the Cantor set passes the entropy check", ent.h_expansive,
            format!("max slope {:.4}", ent.max_slope())),
    ];
    Ok((json!({"expansive_scan": scan, "entropy": ent}), verdicts))
}

pub fn run_theorem_b_cycle(cfg: &ExperimentConfig) -> Run {
    let seed = cfg.seed()?;
    let horizon = cfg.horizon_or(60)?;
    let count = cfg.samples.unwrap_or(10);
    let mut verdicts = Vec::new();
    let mut results = serde_json::Map::new();
    let n_default = [4usize, 8, 12, 16];

    for (name, centers) in [
        ("cat", sample_torus_points(seed, count)?.into_iter().map(Point::Torus).collect::<Vec<_>>()),
        ("example1", example1_centers()?),
    ] {
        let system = SystemHandle::from_id(name, None)?;
        let (radius, classes) = countability_radius(&system, &centers, &RADIUS_GRID, horizon)?;
        let Some(c) = radius else {
            verdicts.push(Verdict::new(6, &format!("{name}: countability radius detected"), false,
                "every tested radius shows a cantor-like ball".into()));
            continue;
        };
        let half = c / 2.0;
        let ent = entropy_expansivity_check(&system, half, &centers, &[half / 2.0, half / 4.0], &n_default, horizon)?;
        verdicts.push(Verdict::new(6, &format!("{name}: entropy check passes at c/2"), ent.h_expansive,
            format!("c = {c}, max slope {:.4} (tol {})", ent.max_slope(), ent.slope_tol)));
        let mut extra = json!({"radius": c, "classes": classes, "entropy": ent});
        if name == "cat" {
            let scan = expansive_points_scan(&system, &centers, &RADIUS_GRID, horizon, 0.25)?;
            extra["expansive_density"] = json!(scan.density);
        }
        results.insert(name.into(), extra);
    }

    // Sphere: horseshoe centre, witnesses injected.
    let sphere = SystemHandle::sphere();
    let h = sphere_horseshoe(&sphere, SphereSearch::default(), 8)?;
    match &h.certificate {
        Some(cert) => {
            let c = cfg.epsilon_or(0.05)?;
            let ball = ball_cantor_witness(&sphere, &cert.link.x, BallParams::new(c, horizon), Some(&cert.link), 8)?;
            let n = cert.period as usize;
            let n_range: Vec<usize> = (1..).map(|j| j * n).take_while(|&k| k as i64 <= horizon).collect();
            let ent = entropy_expansivity_of_balls(&sphere, std::slice::from_ref(&ball), &[c / 4.0, c / 8.0], &n_range)?;
            let bound = 0.5 * std::f64::consts::LN_2 / n as f64;
            let slope = ent.max_slope();
            verdicts.push(Verdict::new(6, "sphere: cantor-like ball at a horseshoe centre", ball.classification().is_cantor_like(),
                format!("classification {:?}", ball.classification())));
            verdicts.push(Verdict::new(6, "sphere: entropy check fails with slope >= max(0.04, 0.5·log2/N)",
                !ent.h_expansive && slope >= 0.04 && slope >= bound,
                format!("slope {slope:.4}, N = {n}, 0.5·log2/N = {bound:.4}")));
            results.insert("sphere".into(), json!({"radius": c, "period": n, "entropy": ent,
                "classification": ball.classification(), "witnesses": ball.witnesses}));
        }
        None => verdicts.push(Verdict::new(6, "sphere: horseshoe centre found", false, "no certified link".into())),
    }

    let (cantor, v) = cantor_control(horizon)?;
    verdicts.extend(v);
    results.insert("cantor_identity".into(), cantor);
    Ok((Value::Object(results), verdicts))
}

pub fn run_negative_controls(cfg: &ExperimentConfig) -> Run {
    cantor_control(cfg.horizon_or(10)?)
}

// ---------------------------------------------------------------------------
// Criterion 7: asymptotic expansivity
// ---------------------------------------------------------------------------

pub fn run_asymptotic(cfg: &ExperimentConfig) -> Run {
    let seed = cfg.seed()?;
    let c = cfg.epsilon_or(0.05)?;
    let horizon = cfg.horizon_or(60)?;
    let count = cfg.samples.unwrap_or(20);
    let threshold = c / 100.0;
    let mut verdicts = Vec::new();
    let mut results = serde_json::Map::new();
    let mut ex1 = example1_centers()?;
    ex1.extend([Point::Example1(Example1Point::Ideal(20)), Point::Example1(Example1Point::Ideal(50))]);
    for (name, centers) in [
        ("cat", sample_torus_points(seed, count)?.into_iter().map(Point::Torus).collect::<Vec<_>>()),
        ("example1", ex1),
    ] {
        let system = SystemHandle::from_id(name, None)?;
        let mut sizes = Vec::new();
        for x in &centers {
            let levels = default_levels(&system, x)?;
            let finest = &levels.last().unwrap().points;
            let v = asymptotic_ball(&system, x, c, horizon, threshold, finest)?;
            sizes.push(json!({"point": x, "members": v.len(), "trivial": v == vec![x.clone()]}));
        }
        let trivial = sizes.iter().filter(|r| r["trivial"] == true).count();
        verdicts.push(Verdict::new(7, &format!("{name}: asymptotic balls trivial"), trivial == centers.len(),
            format!("{trivial}/{} trivial at c = {c}, threshold {threshold:.1e}", centers.len())));
        results.insert(name.into(), Value::Array(sizes));
    }
    Ok((Value::Object(results), verdicts))
}

/// Shadow constant of the cat map, `√5`.
pub fn cat_shadow_constant() -> f64 {
    HyperbolicMatrix::CAT.splitting().shadow_constant()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(id: &str) -> ExperimentConfig {
        ExperimentConfig { experiment: Some(id.into()), seed: Some(7), ..Default::default() }
    }

    #[test]
    fn unknown_experiment_is_rejected() {
        assert!(run_experiment(&cfg("nope")).is_err());
        assert!(run_experiment(&ExperimentConfig::default()).is_err());
    }

    #[test]
    fn randomized_runs_need_a_seed() {
        let c = ExperimentConfig { experiment: Some("shadowing".into()), ..Default::default() };
        assert!(run_experiment(&c).is_err());
    }

    #[test]
    fn nonpositive_tolerances_rejected() {
        let mut c = cfg("shadowing");
        c.delta = Some(-1.0);
        assert!(run_experiment(&c).is_err());
    }

    #[test]
    fn vacuous_radius_is_inconclusive() {
        let mut c = cfg("theorem-a");
        c.epsilon = Some(0.5);
        let r = run_experiment(&c).unwrap();
        assert_eq!(r.outcome, Outcome::Inconclusive);
        assert_eq!(r.outcome.exit_code(), 3);
    }

    #[test]
    fn exact_ideal_triangle() {
        assert!(ideal_triangle_exact(1, 2, 3));
        assert!(ideal_triangle_exact(5, 5, 7));
        assert!(ideal_triangle_exact(4, 9, 4));
    }

    #[test]
    fn small_shadowing_run_passes() {
        let mut c = cfg("shadowing");
        c.samples = Some(3);
        c.length = Some(200);
        let r = run_experiment(&c).unwrap();
        assert_eq!(r.outcome, Outcome::Pass, "{:?}", r.verdicts);
    }

    #[test]
    fn config_rejects_unknown_keys() {
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"bogus": 1}"#).is_err());
    }
}
