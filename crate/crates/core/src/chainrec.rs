//! δ-chain transition graphs, recurrent classes and orbit-density
//! diagnostics.

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spaces::{Dynamics, Example1Point, Point, Torus2};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainGraph {
    pub nodes: Vec<Point>,
    pub delta: f64,
    /// `u → v` iff `d(f(u), v) < δ`, sorted.
    pub edges: Vec<(usize, usize)>,
    /// Recurrent classes: strongly connected components containing a cycle
    /// (more than one node, or a self-loop). Each class is sorted and the
    /// list is ordered by smallest member.
    pub classes: Vec<Vec<usize>>,
}

impl ChainGraph {
    /// `class_of[i]` is the index of the recurrent class holding node `i`.
    pub fn class_of(&self) -> Vec<Option<usize>> {
        let mut out = vec![None; self.nodes.len()];
        for (c, class) in self.classes.iter().enumerate() {
            for &i in class {
                out[i] = Some(c);
            }
        }
        out
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.binary_search(&(u, v)).is_ok()
    }

    pub fn successors(&self, u: usize) -> impl Iterator<Item = usize> + '_ {
        let start = self.edges.partition_point(|&(a, _)| a < u);
        self.edges[start..].iter().take_while(move |&&(a, _)| a == u).map(|&(_, b)| b)
    }
}

pub fn chain_graph<D: Dynamics + ?Sized>(dynamics: &D, cloud: &[Point], delta: f64) -> Result<ChainGraph> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    let images = cloud.par_iter().map(|p| dynamics.forward(p)).collect::<Result<Vec<_>>>()?;
    let rows = images
        .par_iter()
        .enumerate()
        .map(|(u, img)| {
            let mut out = Vec::new();
            for (v, q) in cloud.iter().enumerate() {
                if dynamics.dist(img, q)? < delta {
                    out.push((u, v));
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let edges: Vec<(usize, usize)> = rows.into_iter().flatten().collect();

    let mut g = DiGraph::<(), ()>::with_capacity(cloud.len(), edges.len());
    let ids: Vec<_> = (0..cloud.len()).map(|_| g.add_node(())).collect();
    for &(u, v) in &edges {
        g.add_edge(ids[u], ids[v], ());
    }
    let mut classes: Vec<Vec<usize>> = tarjan_scc(&g)
        .into_iter()
        .map(|c| {
            let mut c: Vec<usize> = c.into_iter().map(|n| n.index()).collect();
            c.sort_unstable();
            c
        })
        .filter(|c| c.len() > 1 || g.contains_edge(ids[c[0]], ids[c[0]]))
        .collect();
    classes.sort_by_key(|c| c[0]);
    Ok(ChainGraph { nodes: cloud.to_vec(), delta, edges, classes })
}

/// Nodes lying on a directed cycle of the chain graph.
pub fn nonwandering_estimate(graph: &ChainGraph) -> Vec<usize> {
    let mut out: Vec<usize> = graph.classes.iter().flatten().copied().collect();
    out.sort_unstable();
    out
}

/// Recurrent classes consisting of a single ideal point of Example 1.
pub fn singleton_ideal_classes(graph: &ChainGraph) -> Vec<u64> {
    graph
        .classes
        .iter()
        .filter(|c| c.len() == 1)
        .filter_map(|c| match graph.nodes[c[0]] {
            Point::Example1(Example1Point::Ideal(k)) => Some(k),
            _ => None,
        })
        .collect()
}

/// Example 1 cloud: base grid of spacing `1/grid_den` (containing `p_0`)
/// and the ideal points `p_1, …, p_K` with `K = ⌈4/δ⌉`.
pub fn example1_cloud(delta: f64, grid_den: i64) -> Result<Vec<Point>> {
    if !(delta > 0.0) || grid_den < 1 {
        return Err(Error::InvalidParameter("example1 cloud needs delta > 0 and grid_den >= 1".into()));
    }
    let k_max = (4.0 / delta).ceil() as u64;
    let mut out = Vec::with_capacity((grid_den * grid_den) as usize + k_max as usize);
    for i in 0..grid_den {
        for j in 0..grid_den {
            out.push(Point::Example1(Example1Point::Base(Torus2::exact([i, j], grid_den)?)));
        }
    }
    out.extend((1..=k_max).map(|k| Point::Example1(Example1Point::Ideal(k))));
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassCount {
    pub delta: f64,
    pub nodes: usize,
    pub classes: usize,
    pub singleton_ideal: usize,
}

/// Singleton ideal class counts of Example 1 over a δ sweep.
pub fn example1_class_counts<D: Dynamics + ?Sized>(dynamics: &D, deltas: &[f64], grid_den: i64) -> Result<Vec<ClassCount>> {
    deltas
        .iter()
        .map(|&d| {
            let g = chain_graph(dynamics, &example1_cloud(d, grid_den)?, d)?;
            Ok(ClassCount {
                delta: d,
                nodes: g.nodes.len(),
                classes: g.classes.len(),
                singleton_ideal: singleton_ideal_classes(&g).len(),
            })
        })
        .collect()
}

pub fn write_class_counts_csv<W: std::io::Write>(counts: &[ClassCount], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["delta", "nodes", "classes", "singleton_ideal"])?;
    for c in counts {
        w.write_record([c.delta.to_string(), c.nodes.to_string(), c.classes.to_string(), c.singleton_ideal.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Orbit density
// ---------------------------------------------------------------------------

/// Cell labels of a point on a `g × g` partition (all cells a point may
/// occupy; antipodal classes occupy two).
fn cells(p: &Point, g: usize) -> Vec<usize> {
    let torus_cell = |t: &Torus2| {
        let [x, y] = t.coords();
        let i = ((x * g as f64) as usize).min(g - 1);
        let j = ((y * g as f64) as usize).min(g - 1);
        i * g + j
    };
    let width = ((g * g) as f64).log2().floor().max(1.0) as usize;
    match p {
        Point::Torus(t) => vec![torus_cell(t)],
        Point::Sphere(t) => vec![torus_cell(t), torus_cell(&t.neg())],
        Point::Example1(Example1Point::Base(t)) => vec![torus_cell(t)],
        // An ideal point sits above the anchor cell.
        Point::Example1(Example1Point::Ideal(_)) => vec![0],
        Point::Shift(s) => {
            let lo = -(width as i64 / 2);
            let code = (lo..lo + width as i64).fold(0usize, |acc, i| (acc << 1) | s.symbol(i).unwrap_or(0) as usize);
            vec![code]
        }
        Point::Cantor(c) => {
            vec![c.bits.iter().take(width).fold(0usize, |acc, &b| (acc << 1) | b as usize)]
        }
    }
}

fn cell_count(p: &Point, g: usize) -> usize {
    match p {
        Point::Shift(_) | Point::Cantor(_) => 1 << ((g * g) as f64).log2().floor().max(1.0) as usize,
        _ => g * g,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitivityReport {
    pub point: Point,
    pub horizon: usize,
    pub cells: usize,
    pub forward_visited: usize,
    pub backward_visited: usize,
    /// Fraction of cells the forward orbit never enters.
    pub forward_density_gap: f64,
    pub backward_density_gap: f64,
    pub forward_transitive: bool,
    pub backward_transitive: bool,
    /// One late-orbit point per cell entered in the last tenth of the
    /// forward orbit, standing in for the ω-limit set.
    pub omega_sample: Vec<Point>,
}

/// Orbit density tolerance for the transitive-point verdicts.
pub const DENSITY_GAP_TOL: f64 = 0.01;

pub fn transitivity_check<D: Dynamics + ?Sized>(
    dynamics: &D,
    x: &Point,
    horizon: usize,
    grid: usize,
) -> Result<TransitivityReport> {
    if grid == 0 {
        return Err(Error::InvalidParameter("grid must be positive".into()));
    }
    let total = cell_count(x, grid);
    let walk = |forward: bool| -> Result<(usize, Vec<Point>)> {
        let mut seen = vec![false; total];
        let mut late_seen = vec![false; total];
        let mut late = Vec::new();
        let mut q = x.clone();
        for k in 0..=horizon {
            if k > 0 {
                q = if forward { dynamics.forward(&q)? } else { dynamics.backward(&q)? };
            }
            for c in cells(&q, grid) {
                seen[c] = true;
                if forward && k * 10 >= horizon * 9 && !late_seen[c] {
                    late_seen[c] = true;
                    late.push(q.clone());
                }
            }
        }
        Ok((seen.iter().filter(|s| **s).count(), late))
    };
    let (fv, omega_sample) = walk(true)?;
    let (bv, _) = walk(false)?;
    let gap = |v: usize| 1.0 - v as f64 / total as f64;
    Ok(TransitivityReport {
        point: x.clone(),
        horizon,
        cells: total,
        forward_visited: fv,
        backward_visited: bv,
        forward_density_gap: gap(fv),
        backward_density_gap: gap(bv),
        forward_transitive: gap(fv) <= DENSITY_GAP_TOL,
        backward_transitive: gap(bv) <= DENSITY_GAP_TOL,
        omega_sample,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::{CantorPoint, SystemHandle};

    #[test]
    fn fixed_point_is_its_own_class() {
        let sys = SystemHandle::cat();
        let g = chain_graph(&sys, &[Point::Torus(Torus2::origin())], 0.01).unwrap();
        assert_eq!(g.edges, vec![(0, 0)]);
        assert_eq!(g.classes, vec![vec![0]]);
        assert_eq!(nonwandering_estimate(&g), vec![0]);
        assert!(chain_graph(&sys, &[], 0.0).is_err());
    }

    #[test]
    fn example1_singleton_classes_are_large_ideal_points() {
        let sys = SystemHandle::example1();
        for delta in [0.2, 0.1, 0.05] {
            let g = chain_graph(&sys, &example1_cloud(delta, 10).unwrap(), delta).unwrap();
            let singles = singleton_ideal_classes(&g);
            // Oracle: p_k is isolated iff every edge p_k → v needs 1/k + (≥0) < δ to fail.
            let expected: Vec<u64> = (1..).take_while(|&k| 1.0 / k as f64 >= delta).collect();
            assert_eq!(singles, expected, "delta {delta}");
        }
    }

    #[test]
    fn cat_grid_is_one_class() {
        let sys = SystemHandle::cat();
        let cloud = crate::balls::global_grid(&sys, 64).unwrap();
        let g = chain_graph(&sys, &cloud, 0.02).unwrap();
        assert_eq!(g.classes.len(), 1);
        assert_eq!(nonwandering_estimate(&g).len(), cloud.len());
    }

    #[test]
    fn cantor_identity_orbit_occupies_one_cell() {
        let sys = SystemHandle::cantor_identity();
        let x = Point::Cantor(CantorPoint { bits: vec![1, 0, 1, 1, 0, 0, 1, 0, 1, 1, 1] });
        let r = transitivity_check(&sys, &x, 100, 10).unwrap();
        assert_eq!(r.forward_visited, 1);
        assert_eq!(r.forward_density_gap, 1.0 - 1.0 / r.cells as f64);
        assert!(!r.forward_transitive);
    }

    #[test]
    fn ideal_points_do_not_move() {
        let sys = SystemHandle::example1();
        let r = transitivity_check(&sys, &Point::Example1(Example1Point::Ideal(3)), 50, 20).unwrap();
        assert_eq!((r.forward_visited, r.backward_visited), (1, 1));
        assert_eq!(r.omega_sample.len(), 1);
    }
}
