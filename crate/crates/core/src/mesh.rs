//! Structured P1 triangulations of catalog waveguides.
//!
//! Square-based Ω are meshed on the lattice of spacing h = 1/n, with cell
//! diagonals chosen so that the lines x + y = const used by the truncated and
//! coupled shapes are unions of mesh edges. The quarter disk is
//! meshed by concentric rings of radius j·h whose angular resolution grows with
//! the ring index. Each branch carries its own grid with n nodes across and
//! near-square cells along; nodes on Γ_i coincide with those of Ω and are merged.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, SQRT_2};
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BasicDomainSpec, BranchSpec, Point, Segment, Side, WaveguideSpec};

/// Which part of D to mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    FullDomain,
    BasicOnly,
}

/// Subdomain a triangle belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Piece {
    Basic,
    Branch(usize),
}

/// One node on an interface Γ_i with its normalized arclength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub s: f64,
    pub node: usize,
    pub dirichlet: bool,
}

#[derive(Debug, Clone)]
pub struct InterfaceTrace {
    pub branch: usize,
    pub segment: Segment,
    pub points: Vec<TracePoint>,
}

/// A geometric parameter that had to be moved onto the mesh lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snap {
    pub parameter: String,
    pub requested: f64,
    pub realized: f64,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub nodes: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
    pub pieces: Vec<Piece>,
    pub dirichlet: Vec<bool>,
    pub interfaces: Vec<InterfaceTrace>,
    pub h: f64,
    pub region: Region,
    pub snaps: Vec<Snap>,
}

const KEY_SCALE: f64 = (1u64 << 24) as f64;

struct Builder {
    nodes: Vec<Point>,
    keys: HashMap<(i64, i64), usize>,
    triangles: Vec<[usize; 3]>,
    pieces: Vec<Piece>,
}

impl Builder {
    fn new() -> Self {
        Self { nodes: Vec::new(), keys: HashMap::new(), triangles: Vec::new(), pieces: Vec::new() }
    }

    fn node(&mut self, p: Point) -> usize {
        let key = ((p[0] * KEY_SCALE).round() as i64, (p[1] * KEY_SCALE).round() as i64);
        let next = self.nodes.len();
        let id = *self.keys.entry(key).or_insert(next);
        if id == next {
            self.nodes.push(p);
        }
        id
    }

    fn duplicate(&mut self, id: usize) -> usize {
        self.nodes.push(self.nodes[id]);
        self.nodes.len() - 1
    }

    fn triangle(&mut self, mut t: [usize; 3], piece: Piece) {
        if signed_area(&self.nodes, t) < 0.0 {
            t.swap(1, 2);
        }
        self.triangles.push(t);
        self.pieces.push(piece);
    }
}

fn signed_area(nodes: &[Point], t: [usize; 3]) -> f64 {
    let [a, b, c] = t.map(|i| nodes[i]);
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

/// Number of lattice cells per unit length, checking that h divides 1.
fn cells_per_unit(h: f64) -> Result<usize> {
    if !(h > 0.0) || h > 0.25 + 1e-12 {
        return Err(Error::Mesh(format!("h = {h} too coarse: need 0 < h ≤ 1/4")));
    }
    let n = (1.0 / h).round();
    if (n * h - 1.0).abs() > 1e-9 {
        return Err(Error::Mesh(format!("h = {h} does not divide the unit branch width")));
    }
    Ok(n as usize)
}

/// Build a conforming triangulation of `spec` (or of Ω alone).
pub fn generate_mesh(spec: &WaveguideSpec, h: f64, region: Region) -> Result<Mesh> {
    spec.validate()?;
    let n = cells_per_unit(h)?;
    let h = 1.0 / n as f64;
    let mut b = Builder::new();
    let mut snaps = Vec::new();
    let mut barrier: Option<Barrier> = None;

    match spec.basic {
        BasicDomainSpec::QuarterDisk => mesh_quarter_disk(&mut b, n),
        BasicDomainSpec::UnitSquare => mesh_lattice(&mut b, n, None),
        BasicDomainSpec::RightTriangle => mesh_lattice(&mut b, n, Some(0)),
        BasicDomainSpec::TruncatedSquare { ell } => {
            let k = (ell * n as f64).round() as usize;
            let realized = k as f64 / n as f64;
            if (realized - ell).abs() > 1e-12 {
                snaps.push(Snap { parameter: "ell".into(), requested: ell, realized });
            }
            mesh_lattice(&mut b, n, (k < n).then_some(k));
        }
        BasicDomainSpec::CoupledSquare { epsilon } => {
            mesh_lattice(&mut b, n, None);
            let (open, realized) = opening_edges(epsilon, n);
            if (realized - epsilon).abs() > 1e-9 {
                snaps.push(Snap { parameter: "epsilon".into(), requested: epsilon, realized });
            }
            barrier = Some(Barrier { n, open });
        }
    }

    if region == Region::FullDomain {
        for (i, branch) in spec.branches.iter().enumerate() {
            mesh_branch(&mut b, n, branch, Piece::Branch(i));
        }
    }

    if let Some(barrier) = barrier {
        barrier.cut(&mut b, spec);
    }

    let Builder { nodes, triangles, pieces, .. } = b;
    let boundary = boundary_nodes(nodes.len(), &triangles);

    let mut interfaces = Vec::with_capacity(spec.branches.len());
    for (i, branch) in spec.branches.iter().enumerate() {
        interfaces.push(collect_interface(&nodes, &triangles, &pieces, i, branch));
    }

    let mut dirichlet = boundary;
    if region == Region::BasicOnly {
        for tr in &interfaces {
            for p in &tr.points {
                if p.s > 1e-12 && p.s < 1.0 - 1e-12 {
                    dirichlet[p.node] = false;
                }
            }
        }
    }
    for tr in &mut interfaces {
        for p in &mut tr.points {
            p.dirichlet = dirichlet[p.node];
        }
    }

    let mesh = Mesh { nodes, triangles, pieces, dirichlet, interfaces, h, region, snaps };
    for (t, tri) in mesh.triangles.iter().enumerate() {
        if signed_area(&mesh.nodes, *tri) <= 0.0 {
            return Err(Error::Mesh(format!("triangle {t} is degenerate")));
        }
    }
    Ok(mesh)
}

/// Lattice on [-1, 0]².
///
/// Without a cut, cells are split along the diagonal pointing at the centre
/// of the square ("union jack"), which keeps the full symmetry of the square.
/// With `cut = Some(k)` every cell is split along its anti-diagonal and only
/// triangles above the line x + y = -1 - k·h are kept. Both patterns contain
/// the diagonal x + y = -1 as a chain of edges.
fn mesh_lattice(b: &mut Builder, n: usize, cut: Option<usize>) {
    let h = 1.0 / n as f64;
    let coord = |i: usize| -1.0 + i as f64 * h;
    let keep_above = cut.map(|k| -1.0 - k as f64 * h);
    for j in 0..n {
        for i in 0..n {
            let p00 = [coord(i), coord(j)];
            let p10 = [coord(i + 1), coord(j)];
            let p01 = [coord(i), coord(j + 1)];
            let p11 = [coord(i + 1), coord(j + 1)];
            let (cx, cy) = (coord(i) + 0.5 * h + 0.5, coord(j) + 0.5 * h + 0.5);
            let main_diagonal = keep_above.is_none() && cx * cy > 0.0;
            let pair = if main_diagonal {
                [[p00, p10, p11], [p00, p11, p01]]
            } else {
                [[p00, p10, p01], [p10, p11, p01]]
            };
            for tri in pair {
                if let Some(line) = keep_above {
                    let cx = (tri[0][0] + tri[1][0] + tri[2][0]) / 3.0;
                    let cy = (tri[0][1] + tri[1][1] + tri[2][1]) / 3.0;
                    if cx + cy < line {
                        continue;
                    }
                }
                let ids = tri.map(|p| b.node(p));
                b.triangle(ids, Piece::Basic);
            }
        }
    }
}

/// Concentric rings r_j = j/n; ring j carries ⌈jπ/2⌉ angular cells.
fn mesh_quarter_disk(b: &mut Builder, n: usize) {
    let ring_point = |r: f64, k: usize, m: usize| -> Point {
        if k == 0 {
            [0.0, -r]
        } else if k == m {
            [-r, 0.0]
        } else {
            let phi = FRAC_PI_2 * k as f64 / m as f64;
            [-r * phi.sin(), -r * phi.cos()]
        }
    };
    let cells = |j: usize| ((j as f64) * FRAC_PI_2).ceil() as usize;
    let centre = b.node([0.0, 0.0]);
    let mut inner: Vec<(f64, usize)> = vec![(0.0, centre)];
    for j in 1..=n {
        let r = j as f64 / n as f64;
        let m = cells(j);
        let outer: Vec<(f64, usize)> =
            (0..=m).map(|k| (k as f64 / m as f64, b.node(ring_point(r, k, m)))).collect();
        if inner.len() == 1 {
            for k in 0..m {
                b.triangle([inner[0].1, outer[k].1, outer[k + 1].1], Piece::Basic);
            }
        } else {
            // Merge the two rings by angle.
            let (mut a, mut c) = (0usize, 0usize);
            while a + 1 < inner.len() || c + 1 < outer.len() {
                let advance_inner = if a + 1 >= inner.len() {
                    false
                } else if c + 1 >= outer.len() {
                    true
                } else {
                    inner[a + 1].0 <= outer[c + 1].0
                };
                if advance_inner {
                    b.triangle([inner[a].1, inner[a + 1].1, outer[c].1], Piece::Basic);
                    a += 1;
                } else {
                    b.triangle([inner[a].1, outer[c].1, outer[c + 1].1], Piece::Basic);
                    c += 1;
                }
            }
        }
        inner = outer;
    }
}

fn mesh_branch(b: &mut Builder, n: usize, branch: &BranchSpec, piece: Piece) {
    let h = 1.0 / n as f64;
    let nx = ((branch.length / h - 1e-9).ceil() as usize).max(1);
    let dx = branch.length / nx as f64;
    let ny = (branch.width * n as f64).round() as usize;
    let mut ids = vec![0usize; (nx + 1) * (ny + 1)];
    for k in 0..=nx {
        for j in 0..=ny {
            let x = if k == nx { branch.length } else { k as f64 * dx };
            let y = j as f64 / ny as f64 * branch.width;
            ids[k * (ny + 1) + j] = b.node(branch.to_global(x, y));
        }
    }
    let at = |k: usize, j: usize| ids[k * (ny + 1) + j];
    // Herringbone split, mirror-symmetric about the branch centreline.
    for k in 0..nx {
        for j in 0..ny {
            if 2 * j + 1 < ny {
                b.triangle([at(k, j), at(k + 1, j), at(k + 1, j + 1)], piece);
                b.triangle([at(k, j), at(k + 1, j + 1), at(k, j + 1)], piece);
            } else {
                b.triangle([at(k, j), at(k + 1, j), at(k, j + 1)], piece);
                b.triangle([at(k + 1, j), at(k + 1, j + 1), at(k, j + 1)], piece);
            }
        }
    }
}

/// Number of open diagonal edges for an opening of length ε and the length
/// actually realized. The opening is centred, so its edge count must share
/// the parity of n.
fn opening_edges(epsilon: f64, n: usize) -> (usize, f64) {
    let edge = SQRT_2 / n as f64;
    let wanted = epsilon / edge;
    let m = if epsilon <= 0.0 {
        0
    } else if epsilon >= SQRT_2 - 1e-12 {
        n
    } else {
        let parity = n % 2;
        let lo = (wanted.floor() as usize).saturating_sub(2);
        (lo..=lo + 4)
            .filter(|m| m % 2 == parity && *m <= n)
            .min_by(|a, b| {
                (*a as f64 - wanted).abs().total_cmp(&(*b as f64 - wanted).abs())
            })
            .unwrap_or(parity)
    };
    (m, m as f64 * edge)
}

/// Zero-thickness slit along x + y = -1 with `open` centred open edges.
struct Barrier {
    n: usize,
    open: usize,
}

impl Barrier {
    fn closed(&self, i: usize) -> bool {
        if self.open == self.n {
            return false;
        }
        if self.open == 0 {
            return true;
        }
        let lo = (self.n - self.open) / 2;
        let hi = (self.n + self.open) / 2;
        i < lo || i > hi
    }

    /// Give triangles below the diagonal their own copy of every closed
    /// barrier node.
    fn cut(&self, b: &mut Builder, spec: &WaveguideSpec) {
        if self.open == self.n {
            return;
        }
        let h = 1.0 / self.n as f64;
        let mut copies: HashMap<usize, usize> = HashMap::new();
        let mut closed_ids = HashMap::new();
        for i in 0..=self.n {
            if self.closed(i) {
                let p = [-1.0 + i as f64 * h, -(i as f64) * h];
                let key = ((p[0] * KEY_SCALE).round() as i64, (p[1] * KEY_SCALE).round() as i64);
                if let Some(&id) = b.keys.get(&key) {
                    closed_ids.insert(id, ());
                }
            }
        }
        for t in 0..b.triangles.len() {
            let lower = match b.pieces[t] {
                Piece::Basic => {
                    let tri = b.triangles[t].map(|i| b.nodes[i]);
                    let cx = (tri[0][0] + tri[1][0] + tri[2][0]) / 3.0;
                    let cy = (tri[0][1] + tri[1][1] + tri[2][1]) / 3.0;
                    cx + cy < -1.0
                }
                Piece::Branch(i) => matches!(spec.branches[i].attachment, Side::Left | Side::Bottom),
            };
            if !lower {
                continue;
            }
            for v in 0..3 {
                let id = b.triangles[t][v];
                if closed_ids.contains_key(&id) {
                    let copy = match copies.get(&id) {
                        Some(&c) => c,
                        None => {
                            let c = b.duplicate(id);
                            copies.insert(id, c);
                            c
                        }
                    };
                    b.triangles[t][v] = copy;
                }
            }
        }
    }
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b { (a, b) } else { (b, a) }
}

fn edge_counts(triangles: &[[usize; 3]]) -> HashMap<(usize, usize), u32> {
    let mut counts = HashMap::with_capacity(triangles.len() * 2);
    for t in triangles {
        for e in 0..3 {
            *counts.entry(edge_key(t[e], t[(e + 1) % 3])).or_insert(0) += 1;
        }
    }
    counts
}

fn boundary_nodes(n_nodes: usize, triangles: &[[usize; 3]]) -> Vec<bool> {
    let mut flag = vec![false; n_nodes];
    for ((a, b), c) in edge_counts(triangles) {
        if c == 1 {
            flag[a] = true;
            flag[b] = true;
        }
    }
    flag
}

fn collect_interface(
    nodes: &[Point],
    triangles: &[[usize; 3]],
    pieces: &[Piece],
    index: usize,
    branch: &BranchSpec,
) -> InterfaceTrace {
    let segment = branch.interface();
    let on_segment = |p: Point| {
        let s = segment.project(p);
        segment.line_distance(p) < 1e-12 && s > -1e-12 && s < 1.0 + 1e-12
    };
    let mut seen = HashMap::new();
    for (t, tri) in triangles.iter().enumerate() {
        if pieces[t] != Piece::Basic {
            continue;
        }
        for e in 0..3 {
            let (a, b) = (tri[e], tri[(e + 1) % 3]);
            if on_segment(nodes[a]) && on_segment(nodes[b]) {
                seen.insert(a, ());
                seen.insert(b, ());
            }
        }
    }
    let mut points: Vec<TracePoint> = seen
        .into_keys()
        .map(|node| TracePoint {
            s: segment.project(nodes[node]).clamp(0.0, 1.0),
            node,
            dirichlet: false,
        })
        .collect();
    points.sort_by(|a, b| a.s.total_cmp(&b.s));
    InterfaceTrace { branch: index, segment, points }
}

impl Mesh {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        signed_area(&self.nodes, self.triangles[t])
    }

    pub fn total_area(&self) -> f64 {
        // Kahan-compensated sum keeps the tiling exact to rounding.
        let mut sum = 0.0;
        let mut c = 0.0;
        for t in 0..self.triangles.len() {
            let y = self.triangle_area(t) - c;
            let s = sum + y;
            c = (s - sum) - y;
            sum = s;
        }
        sum
    }

    /// Check that interior edges are shared by two triangles and boundary
    /// edges by one.
    pub fn check_conformity(&self) -> Result<()> {
        for ((a, b), c) in edge_counts(&self.triangles) {
            if c > 2 {
                return Err(Error::Mesh(format!("edge ({a}, {b}) shared by {c} triangles")));
            }
        }
        // A hanging node would sit in the interior of some edge.
        Ok(())
    }

    /// Interface nodes of branch `i` sorted by arclength.
    pub fn interface_trace(&self, i: usize) -> Result<&[TracePoint]> {
        self.interfaces
            .get(i)
            .map(|t| t.points.as_slice())
            .ok_or(Error::BranchIndex { index: i, count: self.interfaces.len() })
    }

    pub fn free_count(&self) -> usize {
        self.dirichlet.iter().filter(|d| !**d).count()
    }

    /// Plain-text export: header, coordinates, triangles, labeled node lists.
    pub fn write_text<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "nodes {} triangles {}", self.nodes.len(), self.triangles.len())?;
        for p in &self.nodes {
            writeln!(w, "{:.17e} {:.17e}", p[0], p[1])?;
        }
        for t in &self.triangles {
            writeln!(w, "{} {} {}", t[0], t[1], t[2])?;
        }
        let dirichlet: Vec<String> = self
            .dirichlet
            .iter()
            .enumerate()
            .filter(|(_, d)| **d)
            .map(|(i, _)| i.to_string())
            .collect();
        writeln!(w, "dirichlet {}", dirichlet.len())?;
        writeln!(w, "{}", dirichlet.join(" "))?;
        for tr in &self.interfaces {
            writeln!(w, "interface {} {}", tr.branch, tr.points.len())?;
            let ids: Vec<String> = tr.points.iter().map(|p| p.node.to_string()).collect();
            writeln!(w, "{}", ids.join(" "))?;
        }
        Ok(())
    }
}

/// Bucketed point location for interpolating nodal fields.
pub struct PointLocator<'a> {
    mesh: &'a Mesh,
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<u32>>,
}

impl<'a> PointLocator<'a> {
    pub fn new(mesh: &'a Mesh) -> Self {
        let cell = 2.0 * mesh.h;
        let mut buckets: HashMap<(i64, i64), Vec<u32>> = HashMap::new();
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let pts = tri.map(|i| mesh.nodes[i]);
            let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
            for p in pts {
                x0 = x0.min(p[0]);
                x1 = x1.max(p[0]);
                y0 = y0.min(p[1]);
                y1 = y1.max(p[1]);
            }
            let (i0, i1) = ((x0 / cell).floor() as i64, (x1 / cell).floor() as i64);
            let (j0, j1) = ((y0 / cell).floor() as i64, (y1 / cell).floor() as i64);
            for i in i0..=i1 {
                for j in j0..=j1 {
                    buckets.entry((i, j)).or_default().push(t as u32);
                }
            }
        }
        Self { mesh, cell, buckets }
    }

    /// Triangle containing `p` and barycentric coordinates, if any.
    pub fn locate(&self, p: Point) -> Option<(usize, [f64; 3])> {
        let key = ((p[0] / self.cell).floor() as i64, (p[1] / self.cell).floor() as i64);
        let candidates = self.buckets.get(&key)?;
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for &t in candidates {
            let t = t as usize;
            let bary = barycentric(self.mesh, t, p);
            let worst = bary.iter().cloned().fold(f64::MAX, f64::min);
            if worst >= -1e-12 {
                return Some((t, bary));
            }
            if best.as_ref().is_none_or(|b| worst > b.2) {
                best = Some((t, bary, worst));
            }
        }
        best.filter(|b| b.2 > -1e-9).map(|b| (b.0, b.1))
    }

    /// Linear interpolation of a nodal field at `p`.
    pub fn interpolate(&self, values: &[f64], p: Point) -> Option<f64> {
        let (t, bary) = self.locate(p)?;
        let tri = self.mesh.triangles[t];
        Some((0..3).map(|k| bary[k] * values[tri[k]]).sum())
    }
}

fn barycentric(mesh: &Mesh, t: usize, p: Point) -> [f64; 3] {
    let [a, b, c] = mesh.triangles[t].map(|i| mesh.nodes[i]);
    let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
    let l1 = ((b[0] - p[0]) * (c[1] - p[1]) - (c[0] - p[0]) * (b[1] - p[1])) / det;
    let l2 = ((c[0] - p[0]) * (a[1] - p[1]) - (a[0] - p[0]) * (c[1] - p[1])) / det;
    [l1, l2, 1.0 - l1 - l2]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_domain;
    use std::f64::consts::PI;

    #[test]
    fn l_shape_lattice_count() {
        let spec = build_domain("l_shape", &[1.0, 1.0]).unwrap();
        let mesh = generate_mesh(&spec, 1.0 / 8.0, Region::FullDomain).unwrap();
        // 9×9 square plus two 8×9 branch blocks.
        assert_eq!(mesh.node_count(), 81 + 72 + 72);
        assert!((mesh.total_area() - 3.0).abs() < 1e-12);
        mesh.check_conformity().unwrap();
    }

    #[test]
    fn unit_square_area_exact() {
        let spec = build_domain("unit_square", &[]).unwrap();
        let mesh = generate_mesh(&spec, 1.0 / 16.0, Region::FullDomain).unwrap();
        assert!((mesh.total_area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bent_strip_area_converges_quadratically() {
        let spec = build_domain("bent_strip", &[2.0, 2.0]).unwrap();
        let exact = PI / 4.0 + 4.0;
        let errs: Vec<f64> = [8usize, 16, 32]
            .iter()
            .map(|&n| {
                let mesh = generate_mesh(&spec, 1.0 / n as f64, Region::FullDomain).unwrap();
                mesh.check_conformity().unwrap();
                (exact - mesh.total_area()).abs()
            })
            .collect();
        for w in errs.windows(2) {
            let rate = (w[0] / w[1]).log2();
            assert!(rate > 1.8, "area rate {rate} from {errs:?}");
        }
        assert!(errs[2] < 2e-3);
    }

    #[test]
    fn interface_trace_nodes() {
        let spec = build_domain("l_shape", &[1.0, 1.0]).unwrap();
        let mesh = generate_mesh(&spec, 1.0 / 8.0, Region::BasicOnly).unwrap();
        let trace = mesh.interface_trace(0).unwrap();
        assert_eq!(trace.len(), 9);
        for (k, p) in trace.iter().enumerate() {
            assert!((p.s - k as f64 / 8.0).abs() < 1e-14);
            assert_eq!(p.dirichlet, k == 0 || k == 8);
        }
        assert!(matches!(mesh.interface_trace(2), Err(Error::BranchIndex { .. })));
    }

    #[test]
    fn too_coarse_or_non_dividing_h() {
        let spec = build_domain("unit_square", &[]).unwrap();
        assert!(generate_mesh(&spec, 0.5, Region::FullDomain).is_err());
        assert!(generate_mesh(&spec, 0.23, Region::FullDomain).is_err());
    }

    #[test]
    fn truncated_one_is_l_shape() {
        let l = build_domain("l_shape", &[2.0, 2.0]).unwrap();
        let t = build_domain("truncated_l", &[1.0, 2.0, 2.0]).unwrap();
        let ml = generate_mesh(&l, 1.0 / 8.0, Region::FullDomain).unwrap();
        let mt = generate_mesh(&t, 1.0 / 8.0, Region::FullDomain).unwrap();
        assert_eq!(ml.nodes, mt.nodes);
        assert_eq!(ml.triangles, mt.triangles);
    }

    #[test]
    fn coupled_fully_open_is_cross() {
        let c = build_domain("cross", &[1.0; 4]).unwrap();
        let k = build_domain("coupled_cross", &[SQRT_2, 1.0, 1.0, 1.0, 1.0]).unwrap();
        let mc = generate_mesh(&c, 1.0 / 8.0, Region::FullDomain).unwrap();
        let mk = generate_mesh(&k, 1.0 / 8.0, Region::FullDomain).unwrap();
        assert_eq!(mc.triangles, mk.triangles);
        assert_eq!(mc.dirichlet, mk.dirichlet);
    }

    #[test]
    fn closed_barrier_splits_domain() {
        let k = build_domain("coupled_cross", &[0.0, 1.0, 1.0, 1.0, 1.0]).unwrap();
        let mesh = generate_mesh(&k, 1.0 / 8.0, Region::FullDomain).unwrap();
        // Union-find over triangle connectivity through shared nodes.
        let mut parent: Vec<usize> = (0..mesh.node_count()).collect();
        fn find(p: &mut Vec<usize>, x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            p[x] = r;
            r
        }
        for t in &mesh.triangles {
            for e in 0..3 {
                let a = find(&mut parent, t[e]);
                let b = find(&mut parent, t[(e + 1) % 3]);
                parent[a] = b;
            }
        }
        let mut roots: Vec<usize> = (0..mesh.node_count()).map(|i| find(&mut parent, i)).collect();
        roots.sort();
        roots.dedup();
        assert_eq!(roots.len(), 2);
        mesh.check_conformity().unwrap();
        assert!((mesh.total_area() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn opening_snapping_is_reported() {
        let k = build_domain("coupled_cross", &[0.4 * SQRT_2, 1.0, 1.0, 1.0, 1.0]).unwrap();
        let exact = generate_mesh(&k, 1.0 / 40.0, Region::FullDomain).unwrap();
        assert!(exact.snaps.is_empty());
        let snapped = generate_mesh(&k, 1.0 / 32.0, Region::FullDomain).unwrap();
        assert_eq!(snapped.snaps.len(), 1);
        assert_eq!(snapped.snaps[0].parameter, "epsilon");
    }

    #[test]
    fn interface_nodes_on_segment_line() {
        let spec = build_domain("bent_strip", &[1.0, 1.0]).unwrap();
        let mesh = generate_mesh(&spec, 1.0 / 16.0, Region::FullDomain).unwrap();
        for tr in &mesh.interfaces {
            assert_eq!(tr.points.len(), 17);
            for p in &tr.points {
                assert!(tr.segment.line_distance(mesh.nodes[p.node]) < 1e-12);
            }
        }
    }

    #[test]
    fn locator_interpolates_linear_fields_exactly() {
        let spec = build_domain("bent_strip", &[1.0, 1.0]).unwrap();
        let mesh = generate_mesh(&spec, 1.0 / 8.0, Region::FullDomain).unwrap();
        let f: Vec<f64> = mesh.nodes.iter().map(|p| 2.0 * p[0] - 0.5 * p[1] + 1.0).collect();
        let loc = PointLocator::new(&mesh);
        for p in [[0.5, -0.3], [-0.3, 0.7], [-0.2, -0.3]] {
            let v = loc.interpolate(&f, p).unwrap();
            assert!((v - (2.0 * p[0] - 0.5 * p[1] + 1.0)).abs() < 1e-12);
        }
        assert!(loc.interpolate(&f, [3.0, 3.0]).is_none());
    }
}
