//! (n, δ)-separated sets, growth-rate estimates and the entropy-expansivity
//! check on dynamical-ball members.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::balls::{default_levels, dynamical_ball, BallParams, BallReport, Sample};
use crate::error::{Error, Result};
use crate::spaces::{Dynamics, Point, SystemHandle};

/// Largest cloud accepted by the exact (maximum clique) search.
pub const EXACT_MAX: usize = 25;
pub const SLOPE_TOL: f64 = 0.05;
pub const TREND_DELTAS: [f64; 3] = [0.1, 0.05, 0.025];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeparationMode {
    Greedy,
    Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparatedSetResult {
    pub cloud_size: usize,
    pub n: usize,
    pub delta: f64,
    pub count_greedy: usize,
    pub count_exact: Option<usize>,
    /// Indices into the cloud of the reported separated subset (the exact
    /// optimum when computed, the greedy set otherwise).
    pub witness: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    pub delta: f64,
    /// `(n, s_n)` with `s_n` the greedy count.
    pub counts: Vec<(usize, usize)>,
    /// Least-squares slope of `log s_n` against `n` over the upper half of the range.
    pub slope: f64,
}

impl EntropyEstimate {
    pub fn log_counts(&self) -> Vec<(usize, f64)> {
        self.counts.iter().map(|&(n, s)| (n, (s as f64).ln())).collect()
    }
}

/// Forward orbits `f^k(p)`, `0 <= k < n`, for every sample.
pub fn forward_orbits<D: Dynamics + ?Sized>(dynamics: &D, cloud: &[Sample], n: usize) -> Result<Vec<Vec<Point>>> {
    cloud
        .par_iter()
        .map(|s| match s {
            Sample::Point(p) => {
                let mut out = Vec::with_capacity(n);
                let mut q = p.clone();
                for k in 0..n {
                    if k > 0 {
                        q = dynamics.forward(&q)?;
                    }
                    out.push(q.clone());
                }
                Ok(out)
            }
            Sample::Orbit(seg) => (0..n as i64)
                .map(|k| {
                    seg.at(k).cloned().ok_or_else(|| {
                        Error::InvalidParameter(format!("stored orbit does not reach iterate {k}"))
                    })
                })
                .collect(),
        })
        .collect()
}

fn separated<D: Dynamics + ?Sized>(dynamics: &D, a: &[Point], b: &[Point], n: usize, delta: f64) -> Result<bool> {
    for k in 0..n {
        if dynamics.dist(&a[k], &b[k])? > delta {
            return Ok(true);
        }
    }
    Ok(false)
}

fn greedy<D: Dynamics + ?Sized>(dynamics: &D, orbits: &[Vec<Point>], n: usize, delta: f64) -> Result<Vec<usize>> {
    let mut kept: Vec<usize> = Vec::new();
    'outer: for (i, o) in orbits.iter().enumerate() {
        for &j in &kept {
            if !separated(dynamics, o, &orbits[j], n, delta)? {
                continue 'outer;
            }
        }
        kept.push(i);
    }
    Ok(kept)
}

/// Maximum clique of a graph on at most 32 nodes given as adjacency masks.
pub fn max_clique(adj: &[u32]) -> Vec<usize> {
    fn expand(adj: &[u32], current: u32, mut candidates: u32, best: &mut u32) {
        if candidates == 0 {
            if current.count_ones() > best.count_ones() {
                *best = current;
            }
            return;
        }
        while candidates != 0 {
            if current.count_ones() + candidates.count_ones() <= best.count_ones() {
                return;
            }
            let v = candidates.trailing_zeros() as usize;
            candidates &= !(1 << v);
            expand(adj, current | (1 << v), candidates & adj[v], best);
        }
        if current.count_ones() > best.count_ones() {
            *best = current;
        }
    }
    assert!(adj.len() <= 32);
    let mut best = 0u32;
    let all = if adj.len() == 32 { u32::MAX } else { (1u32 << adj.len()) - 1 };
    expand(adj, 0, all, &mut best);
    (0..adj.len()).filter(|&i| best & (1 << i) != 0).collect()
}

fn exact<D: Dynamics + ?Sized>(dynamics: &D, orbits: &[Vec<Point>], n: usize, delta: f64) -> Result<Vec<usize>> {
    let mut adj = vec![0u32; orbits.len()];
    for i in 0..orbits.len() {
        for j in i + 1..orbits.len() {
            if separated(dynamics, &orbits[i], &orbits[j], n, delta)? {
                adj[i] |= 1 << j;
                adj[j] |= 1 << i;
            }
        }
    }
    Ok(max_clique(&adj))
}

fn check_nd(n: usize, delta: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    Ok(())
}

pub fn max_separated<D: Dynamics + ?Sized>(
    dynamics: &D,
    cloud: &[Sample],
    n: usize,
    delta: f64,
    mode: SeparationMode,
) -> Result<SeparatedSetResult> {
    check_nd(n, delta)?;
    if mode == SeparationMode::Exact && cloud.len() > EXACT_MAX {
        return Err(Error::ExactTooLarge { size: cloud.len(), max: EXACT_MAX });
    }
    let orbits = forward_orbits(dynamics, cloud, n)?;
    let kept = greedy(dynamics, &orbits, n, delta)?;
    let (count_exact, witness) = match mode {
        SeparationMode::Greedy => (None, kept.clone()),
        SeparationMode::Exact => {
            let best = exact(dynamics, &orbits, n, delta)?;
            (Some(best.len()), best)
        }
    };
    Ok(SeparatedSetResult { cloud_size: cloud.len(), n, delta, count_greedy: kept.len(), count_exact, witness })
}

/// Independent re-check that every pair of the witness is separated.
pub fn verify_witness<D: Dynamics + ?Sized>(dynamics: &D, cloud: &[Sample], result: &SeparatedSetResult) -> Result<bool> {
    let subset: Vec<Sample> = result.witness.iter().map(|&i| cloud[i].clone()).collect();
    let orbits = forward_orbits(dynamics, &subset, result.n)?;
    for i in 0..orbits.len() {
        for j in i + 1..orbits.len() {
            let mut hit = false;
            for k in 0..result.n {
                if dynamics.dist(&orbits[i][k], &orbits[j][k])? > result.delta {
                    hit = true;
                    break;
                }
            }
            if !hit {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Least-squares slope of `ys` against `xs`.
pub fn lsq_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

pub fn entropy_estimate<D: Dynamics + ?Sized>(
    dynamics: &D,
    cloud: &[Sample],
    delta: f64,
    n_range: &[usize],
) -> Result<EntropyEstimate> {
    if n_range.len() < 2 || n_range.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("n_range needs at least two strictly ascending values".into()));
    }
    check_nd(n_range[0], delta)?;
    if cloud.is_empty() {
        return Err(Error::EmptySample);
    }
    let n_max = *n_range.last().unwrap();
    let orbits = forward_orbits(dynamics, cloud, n_max)?;
    let counts = n_range
        .par_iter()
        .map(|&n| Ok((n, greedy(dynamics, &orbits, n, delta)?.len())))
        .collect::<Result<Vec<_>>>()?;
    let top = &counts[(counts.len() - 1) / 2..];
    let xs: Vec<f64> = top.iter().map(|&(n, _)| n as f64).collect();
    let ys: Vec<f64> = top.iter().map(|&(_, s)| (s as f64).ln()).collect();
    // Counts are nondecreasing in n, so the fit is nonnegative up to rounding.
    let slope = lsq_slope(&xs, &ys).max(0.0);
    Ok(EntropyEstimate { delta, counts, slope })
}

/// Estimates over a grid of scales, for the trend of `h(F, δ)` as δ shrinks.
pub fn entropy_trend<D: Dynamics + ?Sized>(
    dynamics: &D,
    cloud: &[Sample],
    deltas: &[f64],
    n_range: &[usize],
) -> Result<Vec<EntropyEstimate>> {
    deltas.iter().map(|&d| entropy_estimate(dynamics, cloud, d, n_range)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CenterEntropy {
    pub center: Point,
    pub members: usize,
    pub estimates: Vec<EntropyEstimate>,
    pub max_slope: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyExpansivityReport {
    pub system: String,
    pub radius: f64,
    pub slope_tol: f64,
    pub centers: Vec<CenterEntropy>,
    pub h_expansive: bool,
}

impl EntropyExpansivityReport {
    pub fn max_slope(&self) -> f64 {
        self.centers.iter().map(|c| c.max_slope).fold(0.0, f64::max)
    }
}

/// Entropy of the finest-level members of precomputed balls.
pub fn entropy_expansivity_of_balls<D: Dynamics + ?Sized>(
    dynamics: &D,
    balls: &[BallReport],
    deltas: &[f64],
    n_range: &[usize],
) -> Result<EntropyExpansivityReport> {
    let mut centers = Vec::with_capacity(balls.len());
    for ball in balls {
        let finest = ball.level_members.last().ok_or(Error::EmptySample)?;
        if n_range.last().is_some_and(|&n| n as i64 > ball.horizon + 1) {
            return Err(Error::InvalidParameter(format!(
                "n_range exceeds the ball horizon {}",
                ball.horizon
            )));
        }
        let cloud: Vec<Sample> = finest.members.iter().cloned().map(Sample::Orbit).collect();
        let estimates = entropy_trend(dynamics, &cloud, deltas, n_range)?;
        let max_slope = estimates.iter().map(|e| e.slope).fold(0.0, f64::max);
        centers.push(CenterEntropy { center: ball.center.clone(), members: cloud.len(), estimates, max_slope });
    }
    let h_expansive = centers.iter().all(|c| c.max_slope <= SLOPE_TOL);
    Ok(EntropyExpansivityReport {
        system: dynamics.name().to_string(),
        radius: balls.first().map_or(0.0, |b| b.radius),
        slope_tol: SLOPE_TOL,
        centers,
        h_expansive,
    })
}

/// Computes `Γ_c^N` at each centre on the default refinement levels and
/// tests whether its members carry growth above the slope tolerance.
pub fn entropy_expansivity_check(
    system: &SystemHandle,
    c: f64,
    centers: &[Point],
    deltas: &[f64],
    n_range: &[usize],
    horizon: i64,
) -> Result<EntropyExpansivityReport> {
    let balls = centers
        .iter()
        .map(|x| dynamical_ball(system, x, BallParams::new(c, horizon), &default_levels(system, x)?))
        .collect::<Result<Vec<_>>>()?;
    entropy_expansivity_of_balls(system, &balls, deltas, n_range)
}

/// CSV rows `delta,n,count,log_count`.
pub fn write_entropy_csv<W: std::io::Write>(estimates: &[EntropyEstimate], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["delta", "n", "count", "log_count"])?;
    for e in estimates {
        for (n, s) in &e.counts {
            w.write_record([e.delta.to_string(), n.to_string(), s.to_string(), (*s as f64).ln().to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::{CantorPoint, Torus2};

    fn torus(x: f64, y: f64) -> Sample {
        Sample::Point(Point::Torus(Torus2::real(x, y)))
    }

    #[test]
    fn single_point_counts_one() {
        let sys = SystemHandle::cat();
        let r = max_separated(&sys, &[torus(0.3, 0.4)], 7, 0.01, SeparationMode::Exact).unwrap();
        assert_eq!((r.count_greedy, r.count_exact), (1, Some(1)));
    }

    #[test]
    fn immediately_separated_points() {
        let sys = SystemHandle::cat();
        let cloud: Vec<Sample> = (0..5).map(|i| torus(0.1 + 0.15 * i as f64, 0.5)).collect();
        let r = max_separated(&sys, &cloud, 1, 0.1, SeparationMode::Exact).unwrap();
        assert_eq!(r.count_exact, Some(5));
        assert!(verify_witness(&sys, &cloud, &r).unwrap());
    }

    #[test]
    fn exact_mode_rejects_large_clouds() {
        let sys = SystemHandle::cat();
        let cloud: Vec<Sample> = (0..26).map(|i| torus(i as f64 / 26.0, 0.0)).collect();
        assert!(matches!(
            max_separated(&sys, &cloud, 1, 0.1, SeparationMode::Exact),
            Err(Error::ExactTooLarge { size: 26, max: 25 })
        ));
    }

    #[test]
    fn max_clique_on_small_graphs() {
        // 5-cycle: maximum clique 2; complete graph on 4: 4.
        let c5: Vec<u32> = (0..5).map(|i| (1 << ((i + 1) % 5)) | (1 << ((i + 4) % 5))).collect();
        assert_eq!(max_clique(&c5).len(), 2);
        let k4: Vec<u32> = (0..4).map(|i| 0b1111 & !(1 << i)).collect();
        assert_eq!(max_clique(&k4), vec![0, 1, 2, 3]);
        assert!(max_clique(&[]).is_empty());
    }

    #[test]
    fn identity_on_cantor_has_zero_slope() {
        let sys = SystemHandle::cantor_identity();
        let cloud: Vec<Sample> = crate::balls::all_words(6)
            .into_iter()
            .map(|b| Sample::Point(Point::Cantor(CantorPoint { bits: b })))
            .collect();
        let e = entropy_estimate(&sys, &cloud, 0.05, &[1, 2, 4, 8]).unwrap();
        assert_eq!(e.slope, 0.0);
        assert!(e.counts.iter().all(|&(_, s)| s == e.counts[0].1));
    }

    #[test]
    fn lsq_slope_of_a_line() {
        assert!((lsq_slope(&[1.0, 2.0, 3.0], &[2.0, 4.5, 7.0]) - 2.5).abs() < 1e-12);
        assert_eq!(lsq_slope(&[1.0, 1.0], &[0.0, 3.0]), 0.0);
    }

    #[test]
    fn entropy_range_validation() {
        let sys = SystemHandle::cat();
        let cloud = vec![torus(0.1, 0.1)];
        assert!(entropy_estimate(&sys, &cloud, 0.05, &[4]).is_err());
        assert!(entropy_estimate(&sys, &cloud, 0.05, &[4, 4]).is_err());
        assert!(entropy_estimate(&sys, &[], 0.05, &[1, 2]).is_err());
    }

    #[test]
    fn cat_balls_carry_no_entropy() {
        let sys = SystemHandle::cat();
        let centers = [Point::Torus(Torus2::exact([123, 457], 1000).unwrap())];
        let r = entropy_expansivity_check(&sys, 0.05, &centers, &TREND_DELTAS, &[4, 8, 12, 16], 60).unwrap();
        assert!(r.h_expansive);
        assert_eq!(r.max_slope(), 0.0);
    }
}
