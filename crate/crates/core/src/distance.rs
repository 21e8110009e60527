//! The induced distance `ρ_λ`, approximated by a shortest path on a grid
//! graph followed by local descent on the witness broken line.

use crate::curves::Polyline;
use crate::error::{Error, Result};
use crate::metric::segment_length_unchecked;
use crate::quadrature::QuadOpts;
use crate::scene::{MetricScene, PointClass};
use crate::Point;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceOpts {
    /// Grid nodes per side of the Stage-1 search box.
    pub grid_n: usize,
    /// Relative improvement below which Stage 2 stops refining.
    pub tol: f64,
    /// Compute anyway when an endpoint may be a point at infinity.
    pub allow_infinite: bool,
    /// Vertex budget of the refined witness.
    pub max_vertices: usize,
    /// Quadrature used while refining; the final length uses the default.
    pub quad: QuadOpts,
}

impl Default for DistanceOpts {
    fn default() -> Self {
        Self {
            grid_n: 40,
            tol: 1e-4,
            allow_infinite: false,
            max_vertices: 65,
            quad: QuadOpts::loose(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceResult {
    pub value: f64,
    pub witness: Polyline,
    /// Length of the Stage-1 grid path.
    pub grid_value: f64,
    /// Witness length after each Stage-2 sweep of the retained run.
    pub history: Vec<f64>,
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

const OFFSETS: [(i64, i64); 16] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (1, -1),
    (-1, 1),
    (-1, -1),
    (1, 2),
    (2, 1),
    (-1, 2),
    (-2, 1),
    (1, -2),
    (2, -1),
    (-1, -2),
    (-2, -1),
];

fn finite_weight(w: f64) -> bool {
    w < 2.0 * PI * (1.0 - 1e-12)
}

struct Graph<'a> {
    scene: &'a MetricScene,
    quad: QuadOpts,
    nodes: Vec<Point>,
    nx: usize,
    ny: usize,
    // grid slot -> node id
    slot: Vec<Option<usize>>,
    // node id -> grid index, None for extra nodes
    grid_of: Vec<Option<(usize, usize)>>,
    extra_adj: Vec<Vec<usize>>,
    near_singular: Vec<bool>,
    sqrt_lambda: Vec<f64>,
}

impl Graph<'_> {
    fn node_sqrt_lambda(&mut self, u: usize) -> f64 {
        if self.sqrt_lambda[u].is_nan() {
            self.sqrt_lambda[u] = self.scene.sqrt_lambda(self.nodes[u]);
        }
        self.sqrt_lambda[u]
    }

    fn weight(&mut self, u: usize, v: usize) -> f64 {
        let (p, q) = (self.nodes[u], self.nodes[v]);
        if self.near_singular[u] || self.near_singular[v] {
            return segment_length_unchecked(self.scene, p, q, self.quad).value;
        }
        let mid = self.scene.sqrt_lambda(0.5 * (p + q));
        (q - p).norm() * (self.node_sqrt_lambda(u) + 4.0 * mid + self.node_sqrt_lambda(v)) / 6.0
    }

    fn neighbours(&self, u: usize) -> Vec<usize> {
        let mut out = self.extra_adj[u].clone();
        if let Some((i, j)) = self.grid_of[u] {
            for (di, dj) in OFFSETS {
                let (a, b) = (i as i64 + di, j as i64 + dj);
                if a >= 0 && b >= 0 && (a as usize) < self.nx && (b as usize) < self.ny {
                    if let Some(v) = self.slot[a as usize * self.ny + b as usize] {
                        out.push(v);
                    }
                }
            }
        }
        out
    }
}

/// Stage 1: Dijkstra on a 16-neighbour grid over the box spanned by `a`, `b`
/// and a margin, clipped to the domain. Atoms of finite weight and both
/// endpoints are extra nodes wired to grid nodes within two cells. The search
/// stops once `b` is settled, so only the metric ball of radius `ρ(a, b)`
/// about `a` is explored.
fn grid_path(scene: &MetricScene, a: Point, b: Point, n: usize, quad: QuadOpts) -> (f64, Vec<Point>) {
    let span = (b - a).norm();
    let margin = 0.6 * span;
    let lo = Point::new(a.re.min(b.re) - margin, a.im.min(b.im) - margin);
    let hi = Point::new(a.re.max(b.re) + margin, a.im.max(b.im) + margin);
    let cell = (hi.re - lo.re).max(hi.im - lo.im) / (n.max(2) - 1) as f64;
    let nx = ((hi.re - lo.re) / cell).round() as usize + 1;
    let ny = ((hi.im - lo.im) / cell).round() as usize + 1;
    let inner = |z: Point| (z - scene.domain.center).norm() < scene.domain.radius * (1.0 - 1e-9);

    let mut nodes = Vec::new();
    let mut slot = vec![None; nx * ny];
    let mut grid_of = Vec::new();
    for i in 0..nx {
        for j in 0..ny {
            let z = lo + Point::new(i as f64 * cell, j as f64 * cell);
            if inner(z) {
                slot[i * ny + j] = Some(nodes.len());
                nodes.push(z);
                grid_of.push(Some((i, j)));
            }
        }
    }
    let n_grid = nodes.len();
    let mut extras = vec![a, b];
    for &(p, w) in scene.singularities() {
        let in_box = p.re >= lo.re && p.re <= hi.re && p.im >= lo.im && p.im <= hi.im;
        if in_box && inner(p) && finite_weight(w) && p != a && p != b {
            extras.push(p);
        }
    }
    let first_extra = nodes.len();
    for &e in &extras {
        nodes.push(e);
        grid_of.push(None);
    }
    let mut extra_adj = vec![Vec::new(); nodes.len()];
    let reach = 2.0 * cell;
    for (k, &e) in extras.iter().enumerate() {
        let id = first_extra + k;
        let ci = ((e.re - lo.re) / cell).round() as i64;
        let cj = ((e.im - lo.im) / cell).round() as i64;
        for di in -3..=3 {
            for dj in -3..=3 {
                let (i, j) = (ci + di, cj + dj);
                if i < 0 || j < 0 || i as usize >= nx || j as usize >= ny {
                    continue;
                }
                if let Some(v) = slot[i as usize * ny + j as usize] {
                    if (nodes[v] - e).norm() <= reach {
                        extra_adj[id].push(v);
                        extra_adj[v].push(id);
                    }
                }
            }
        }
        for (m, &f) in extras.iter().enumerate().skip(k + 1) {
            if (f - e).norm() <= reach || (k == 0 && m == 1) {
                extra_adj[id].push(first_extra + m);
                extra_adj[first_extra + m].push(id);
            }
        }
    }
    let near_singular: Vec<bool> = nodes
        .iter()
        .enumerate()
        .map(|(u, z)| u >= n_grid || scene.singularities().iter().any(|(p, _)| (p - z).norm() < 2.5 * cell))
        .collect();
    let total = nodes.len();
    let mut g = Graph {
        scene,
        quad,
        nodes,
        nx,
        ny,
        slot,
        grid_of,
        extra_adj,
        near_singular,
        sqrt_lambda: vec![f64::NAN; total],
    };

    let (src, dst) = (first_extra, first_extra + 1);
    let mut dist = vec![f64::INFINITY; total];
    let mut prev = vec![usize::MAX; total];
    let mut done = vec![false; total];
    let mut heap = BinaryHeap::new();
    dist[src] = 0.0;
    heap.push(Entry(0.0, src));
    while let Some(Entry(d, u)) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        if u == dst {
            break;
        }
        for v in g.neighbours(u) {
            if done[v] {
                continue;
            }
            let nd = d + g.weight(u, v);
            if nd < dist[v] {
                dist[v] = nd;
                prev[v] = u;
                heap.push(Entry(nd, v));
            }
        }
    }
    if !dist[dst].is_finite() {
        return (f64::INFINITY, vec![a, b]);
    }
    let mut path = vec![g.nodes[dst]];
    let mut u = dst;
    while prev[u] != usize::MAX {
        u = prev[u];
        path.push(g.nodes[u]);
    }
    path.reverse();
    (dist[dst], path)
}

struct Refiner<'a> {
    scene: &'a MetricScene,
    quad: QuadOpts,
    negative_atoms: Vec<Point>,
}

impl Refiner<'_> {
    fn seg(&self, p: Point, q: Point) -> f64 {
        if !self.scene.domain.contains(p) || !self.scene.domain.contains(q) {
            return f64::INFINITY;
        }
        segment_length_unchecked(self.scene, p, q, self.quad).value
    }

    fn total(&self, v: &[Point]) -> f64 {
        v.windows(2).map(|w| self.seg(w[0], w[1])).sum()
    }

    // One pass of perpendicular golden-section moves over interior vertices.
    fn sweep(&self, v: &mut [Point], pinned: &mut [bool]) {
        const INV_PHI: f64 = 0.618_033_988_749_895;
        for k in 1..v.len() - 1 {
            if pinned[k] {
                continue;
            }
            let (p, q) = (v[k - 1], v[k + 1]);
            let cost = |z: Point| self.seg(p, z) + self.seg(z, q);
            let mut best = cost(v[k]);
            let reach = (v[k] - p).norm().max((q - v[k]).norm());
            for &s in &self.negative_atoms {
                if s != p && s != q && (s - v[k]).norm() <= reach {
                    let c = cost(s);
                    if c < best {
                        best = c;
                        v[k] = s;
                        pinned[k] = true;
                    }
                }
            }
            if pinned[k] {
                continue;
            }
            let chord = q - p;
            if chord.norm() == 0.0 {
                continue;
            }
            let dir = Point::new(-chord.im, chord.re) / chord.norm();
            let delta = 0.5 * (v[k] - p).norm().min((q - v[k]).norm()).max(1e-3 * chord.norm());
            let base = v[k];
            let g = |s: f64| cost(base + dir * s);
            let (mut lo, mut hi) = (-delta, delta);
            let mut x1 = hi - INV_PHI * (hi - lo);
            let mut x2 = lo + INV_PHI * (hi - lo);
            let (mut f1, mut f2) = (g(x1), g(x2));
            while hi - lo > 2e-3 * delta {
                if f1 <= f2 {
                    hi = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = hi - INV_PHI * (hi - lo);
                    f1 = g(x1);
                } else {
                    lo = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = lo + INV_PHI * (hi - lo);
                    f2 = g(x2);
                }
            }
            let (s, f) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
            if f < best * (1.0 - 1e-13) {
                v[k] = base + dir * s;
            }
        }
    }

    /// Stage 2: sweeps until stalled, then midpoint insertion, until a
    /// doubling improves the length by less than `tol` (relative).
    fn refine(&self, start: Vec<Point>, opts: &DistanceOpts) -> (Vec<Point>, Vec<f64>) {
        let mut v = start;
        let mut pinned: Vec<bool> = v.iter().map(|z| self.negative_atoms.contains(z)).collect();
        let mut len = self.total(&v);
        let mut history = vec![len];
        if !len.is_finite() {
            return (v, history);
        }
        loop {
            for _ in 0..40 {
                let mut trial = v.clone();
                let mut trial_pinned = pinned.clone();
                self.sweep(&mut trial, &mut trial_pinned);
                let new = self.total(&trial);
                if new < len {
                    v = trial;
                    pinned = trial_pinned;
                    let gain = (len - new) / new;
                    len = new;
                    history.push(len);
                    if gain < 0.1 * opts.tol {
                        break;
                    }
                } else {
                    break;
                }
            }
            if v.len() >= opts.max_vertices {
                break;
            }
            let before = len;
            let mut w = Vec::with_capacity(2 * v.len());
            let mut wp = Vec::with_capacity(2 * v.len());
            for k in 0..v.len() {
                if k > 0 {
                    w.push(0.5 * (v[k - 1] + v[k]));
                    wp.push(false);
                }
                w.push(v[k]);
                wp.push(pinned[k]);
            }
            v = w;
            pinned = wp;
            len = self.total(&v).min(len);
            let mut last = len;
            for _ in 0..40 {
                let mut trial = v.clone();
                let mut trial_pinned = pinned.clone();
                self.sweep(&mut trial, &mut trial_pinned);
                let new = self.total(&trial);
                if new < last {
                    v = trial;
                    pinned = trial_pinned;
                    let gain = (last - new) / new;
                    last = new;
                    history.push(last);
                    if gain < 0.1 * opts.tol {
                        break;
                    }
                } else {
                    break;
                }
            }
            len = last;
            if v.len() >= 9 && (before - len) / len < opts.tol {
                break;
            }
        }
        (v, history)
    }
}

fn subsample(path: &[Point], keep: &[Point], target: usize) -> Vec<Point> {
    if path.len() <= target {
        return path.to_vec();
    }
    let last = path.len() - 1;
    let mut idx: Vec<usize> = (0..target).map(|k| k * last / (target - 1)).collect();
    for (i, z) in path.iter().enumerate() {
        if keep.contains(z) {
            idx.push(i);
        }
    }
    idx.sort_unstable();
    idx.dedup();
    idx.into_iter().map(|i| path[i]).collect()
}

/// `ρ_λ(z1, z2)` with a witness broken line from `z1` to `z2`.
///
/// The pair is put in a canonical order first, so the value is exactly
/// symmetric; Stage 2 runs from both ends and keeps the shorter witness.
pub fn distance(scene: &MetricScene, z1: Point, z2: Point, opts: &DistanceOpts) -> Result<DistanceResult> {
    for z in [z1, z2] {
        if !scene.domain.contains(z) {
            return Err(Error::Precondition(format!("({}, {}) is outside the domain", z.re, z.im)));
        }
        if !opts.allow_infinite && scene.classify_point(z) != PointClass::Finite {
            return Err(Error::PossiblyAtInfinity(z, scene.atom_weight_at(z)));
        }
    }
    if z1 == z2 {
        return Ok(DistanceResult {
            value: 0.0,
            witness: Polyline::open(vec![z1, z2])?,
            grid_value: 0.0,
            history: vec![0.0],
        });
    }
    let swap = (z2.re, z2.im) < (z1.re, z1.im);
    let (a, b) = if swap { (z2, z1) } else { (z1, z2) };

    let (grid_value, path) = grid_path(scene, a, b, opts.grid_n, opts.quad);
    let negative_atoms: Vec<Point> = scene
        .singularities()
        .iter()
        .filter(|(p, w)| *w < 0.0 && *p != a && *p != b)
        .map(|(p, _)| *p)
        .collect();
    let refiner = Refiner {
        scene,
        quad: opts.quad,
        negative_atoms,
    };
    let (mut best, mut history) = (vec![a, b], vec![f64::INFINITY]);
    let mut best_len = f64::INFINITY;
    if grid_value.is_finite() {
        let mut start = subsample(&path, &refiner.negative_atoms, 9);
        if !refiner.total(&start).is_finite() {
            start = path.clone();
        }
        for forward in [true, false] {
            let mut s = start.clone();
            if !forward {
                s.reverse();
            }
            let (mut w, h) = refiner.refine(s, opts);
            if !forward {
                w.reverse();
            }
            let len = w
                .windows(2)
                .map(|e| segment_length_unchecked(scene, e[0], e[1], QuadOpts::default()).value)
                .sum::<f64>();
            if len < best_len {
                best_len = len;
                best = w;
                history = h;
            }
        }
    }
    best.dedup();
    if best.len() < 2 {
        best = vec![a, b];
    }
    if swap {
        best.reverse();
    }
    Ok(DistanceResult {
        value: best_len,
        witness: Polyline::open(best)?,
        grid_value,
        history,
    })
}

/// The point at fraction `t` of the λ-length along `p`.
pub fn point_at_fraction(scene: &MetricScene, p: &Polyline, t: f64) -> Point {
    let opts = QuadOpts::default();
    let lens: Vec<f64> = p
        .edges()
        .map(|(a, b)| segment_length_unchecked(scene, a, b, opts).value)
        .collect();
    let total: f64 = lens.iter().sum();
    let mut target = t.clamp(0.0, 1.0) * total;
    for ((a, b), l) in p.edges().zip(&lens) {
        if target <= *l {
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..48 {
                let mid = 0.5 * (lo + hi);
                if segment_length_unchecked(scene, a, a + (b - a) * mid, opts).value < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return a + (b - a) * (0.5 * (lo + hi));
        }
        target -= l;
    }
    p.end()
}
