//! Conforming triangulations of the unit square with a two-part boundary
//! tagging.
//!
//! `Gamma1` carries the Bernoulli-head datum for the velocity and the
//! homogeneous Dirichlet condition for the temperature; `Gamma2` carries the
//! no-slip condition and the heat flux.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Point2, Real};

/// Side of the unit square.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Left, Side::Right, Side::Bottom, Side::Top];
}

/// Boundary part an edge belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BoundaryTag {
    Gamma1,
    Gamma2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub vertices: [usize; 2],
    pub tag: BoundaryTag,
}

/// Unique edges of a triangulation.
///
/// Local edge `k` of a triangle joins its local vertices `k` and `(k + 1) % 3`.
#[derive(Clone, Debug)]
pub struct EdgeTable {
    /// Sorted vertex pairs `[lo, hi]`, ordered lexicographically.
    pub edges: Vec<[usize; 2]>,
    /// Global edge index of each local edge of each triangle.
    pub triangle_edges: Vec<[usize; 3]>,
    /// Number of triangles adjacent to each edge.
    pub multiplicity: Vec<u8>,
}

#[derive(Clone, Debug)]
pub struct Mesh<T> {
    pub vertices: Vec<Point2<T>>,
    /// Counterclockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    /// Number of uniform refinements applied since construction.
    pub generation: usize,
}

/// Builds the unit square split into `nx` x `ny` cells, each cut along the
/// diagonal from its lower-left to its upper-right corner.
pub fn build_rectangle_mesh<T: Real>(nx: usize, ny: usize, gamma1_sides: &[Side]) -> Result<Mesh<T>> {
    if nx == 0 || ny == 0 {
        return Err(Error::Config(format!("mesh cell counts must be positive, got {nx}x{ny}")));
    }
    let sides: BTreeSet<Side> = gamma1_sides.iter().copied().collect();
    if sides.is_empty() {
        return Err(Error::Config("gamma1_sides must name at least one side".into()));
    }
    if sides.len() == Side::ALL.len() {
        return Err(Error::Config(
            "gamma1_sides cannot cover the whole boundary; Gamma2 must be nonempty".into(),
        ));
    }

    let vid = |i: usize, j: usize| j * (nx + 1) + i;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push([
                T::from_usize_lossy(i) / T::from_usize_lossy(nx),
                T::from_usize_lossy(j) / T::from_usize_lossy(ny),
            ]);
        }
    }

    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (v00, v10, v11, v01) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }

    let tag = |side: Side| {
        if sides.contains(&side) {
            BoundaryTag::Gamma1
        } else {
            BoundaryTag::Gamma2
        }
    };
    let mut boundary_edges = Vec::with_capacity(2 * (nx + ny));
    for i in 0..nx {
        boundary_edges.push(BoundaryEdge { vertices: [vid(i, 0), vid(i + 1, 0)], tag: tag(Side::Bottom) });
    }
    for j in 0..ny {
        boundary_edges.push(BoundaryEdge { vertices: [vid(nx, j), vid(nx, j + 1)], tag: tag(Side::Right) });
    }
    for i in (0..nx).rev() {
        boundary_edges.push(BoundaryEdge { vertices: [vid(i + 1, ny), vid(i, ny)], tag: tag(Side::Top) });
    }
    for j in (0..ny).rev() {
        boundary_edges.push(BoundaryEdge { vertices: [vid(0, j + 1), vid(0, j)], tag: tag(Side::Left) });
    }

    let mesh = Mesh { vertices, triangles, boundary_edges, generation: 0 };
    debug_assert!(mesh.validate().is_ok());
    Ok(mesh)
}

/// Red refinement: every triangle is split into four through its edge
/// midpoints. Boundary edges are halved and keep their tag.
pub fn refine_uniform<T: Real>(mesh: &Mesh<T>) -> Result<Mesh<T>> {
    mesh.validate()?;
    let table = mesh.edge_table();
    let nv = mesh.vertices.len();
    let half = T::lit(0.5);

    let mut vertices = mesh.vertices.clone();
    vertices.extend(table.edges.iter().map(|&[a, b]| {
        let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
        [(pa[0] + pb[0]) * half, (pa[1] + pb[1]) * half]
    }));

    let mut triangles = Vec::with_capacity(4 * mesh.triangles.len());
    for (tri, edges) in mesh.triangles.iter().zip(&table.triangle_edges) {
        let [a, b, c] = *tri;
        let (mab, mbc, mca) = (nv + edges[0], nv + edges[1], nv + edges[2]);
        triangles.push([a, mab, mca]);
        triangles.push([mab, b, mbc]);
        triangles.push([mca, mbc, c]);
        triangles.push([mab, mbc, mca]);
    }

    let lookup: BTreeMap<[usize; 2], usize> =
        table.edges.iter().enumerate().map(|(k, &e)| (e, k)).collect();
    let mut boundary_edges = Vec::with_capacity(2 * mesh.boundary_edges.len());
    for be in &mesh.boundary_edges {
        let [a, b] = be.vertices;
        let m = nv + lookup[&sorted_pair(a, b)];
        boundary_edges.push(BoundaryEdge { vertices: [a, m], tag: be.tag });
        boundary_edges.push(BoundaryEdge { vertices: [m, b], tag: be.tag });
    }

    Ok(Mesh { vertices, triangles, boundary_edges, generation: mesh.generation + 1 })
}

fn sorted_pair(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

impl<T: Real> Mesh<T> {
    pub fn signed_area(&self, t: usize) -> T {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        ((pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1])) * T::lit(0.5)
    }

    /// Compensated sum of the signed areas.
    pub fn total_area(&self) -> T {
        let (mut sum, mut carry) = (T::zero(), T::zero());
        for t in 0..self.triangles.len() {
            let a = self.signed_area(t);
            let next = sum + a;
            carry += if sum.abs() >= a.abs() { (sum - next) + a } else { (a - next) + sum };
            sum = next;
        }
        sum + carry
    }

    pub fn edge_table(&self) -> EdgeTable {
        let mut index: BTreeMap<[usize; 2], usize> = BTreeMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                index.entry(sorted_pair(tri[k], tri[(k + 1) % 3])).or_insert(0);
            }
        }
        let edges: Vec<[usize; 2]> = index.keys().copied().collect();
        for (k, v) in index.values_mut().enumerate() {
            *v = k;
        }
        let mut multiplicity = vec![0u8; edges.len()];
        let triangle_edges = self
            .triangles
            .iter()
            .map(|tri| {
                let mut out = [0; 3];
                for k in 0..3 {
                    let e = index[&sorted_pair(tri[k], tri[(k + 1) % 3])];
                    multiplicity[e] = multiplicity[e].saturating_add(1);
                    out[k] = e;
                }
                out
            })
            .collect();
        EdgeTable { edges, triangle_edges, multiplicity }
    }

    pub fn boundary_length(&self, tag: BoundaryTag) -> T {
        self.boundary_edges
            .iter()
            .filter(|e| e.tag == tag)
            .map(|e| {
                let (pa, pb) = (self.vertices[e.vertices[0]], self.vertices[e.vertices[1]]);
                (pb[0] - pa[0]).hypot(pb[1] - pa[1])
            })
            .sum()
    }

    pub fn count_tag(&self, tag: BoundaryTag) -> usize {
        self.boundary_edges.iter().filter(|e| e.tag == tag).count()
    }

    /// Checks every structural invariant of the triangulation.
    pub fn validate(&self) -> Result<()> {
        let nv = self.vertices.len();
        if self.triangles.is_empty() {
            return Err(Error::Mesh("no triangles".into()));
        }
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= nv) {
                return Err(Error::Mesh(format!("triangle {t} references a missing vertex")));
            }
            if !(self.signed_area(t) > T::zero()) {
                return Err(Error::Mesh(format!("triangle {t} has non-positive signed area")));
            }
        }

        let table = self.edge_table();
        let boundary: BTreeMap<[usize; 2], BoundaryTag> = self
            .boundary_edges
            .iter()
            .map(|e| (sorted_pair(e.vertices[0], e.vertices[1]), e.tag))
            .collect();
        if boundary.len() != self.boundary_edges.len() {
            return Err(Error::Mesh("duplicate boundary edge".into()));
        }
        for (e, &m) in table.edges.iter().zip(&table.multiplicity) {
            let on_boundary = boundary.contains_key(e);
            match (m, on_boundary) {
                (1, true) | (2, false) => {}
                (1, false) => return Err(Error::Mesh(format!("edge {e:?} is on the boundary but untagged"))),
                (2, true) => return Err(Error::Mesh(format!("interior edge {e:?} is tagged"))),
                _ => return Err(Error::Mesh(format!("edge {e:?} shared by {m} triangles"))),
            }
        }
        if boundary.keys().any(|e| table.edges.binary_search(e).is_err()) {
            return Err(Error::Mesh("tagged edge is not an edge of the triangulation".into()));
        }
        if self.count_tag(BoundaryTag::Gamma1) == 0 || self.count_tag(BoundaryTag::Gamma2) == 0 {
            return Err(Error::Mesh("both boundary parts must be nonempty".into()));
        }

        let (lo, hi) = self.bounding_box();
        let diameter = (hi[0] - lo[0]).hypot(hi[1] - lo[1]);
        let min_gap = T::lit(1e-12) * diameter;
        let mut sorted: Vec<usize> = (0..nv).collect();
        sorted.sort_by(|&a, &b| {
            let (pa, pb) = (self.vertices[a], self.vertices[b]);
            pa[0].partial_cmp(&pb[0]).unwrap_or(std::cmp::Ordering::Equal)
        });
        for (k, &a) in sorted.iter().enumerate() {
            for &b in &sorted[k + 1..] {
                let (pa, pb) = (self.vertices[a], self.vertices[b]);
                if pb[0] - pa[0] > min_gap {
                    break;
                }
                if (pb[0] - pa[0]).hypot(pb[1] - pa[1]) <= min_gap {
                    return Err(Error::Mesh(format!("vertices {a} and {b} coincide")));
                }
            }
        }

        let euler = nv as i64 - table.edges.len() as i64 + self.triangles.len() as i64;
        if euler != 1 {
            return Err(Error::Mesh(format!("Euler characteristic {euler}, expected 1 for a disk")));
        }
        Ok(())
    }

    pub fn bounding_box(&self) -> (Point2<T>, Point2<T>) {
        let mut lo = [T::infinity(); 2];
        let mut hi = [T::neg_infinity(); 2];
        for p in &self.vertices {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        (lo, hi)
    }

    /// Barycentric coordinates of `p` with respect to triangle `t`.
    pub fn barycentric(&self, t: usize, p: Point2<T>) -> [T; 3] {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        let det = (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1]);
        let l1 = ((p[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (p[1] - pa[1])) / det;
        let l2 = ((pb[0] - pa[0]) * (p[1] - pa[1]) - (p[0] - pa[0]) * (pb[1] - pa[1])) / det;
        [T::one() - l1 - l2, l1, l2]
    }
}

/// Bucket grid over triangle bounding boxes for point location.
#[derive(Clone, Debug)]
pub struct PointLocator {
    nx: usize,
    ny: usize,
    lo: [f64; 2],
    cell: [f64; 2],
    buckets: Vec<Vec<usize>>,
}

impl PointLocator {
    pub fn new<T: Real>(mesh: &Mesh<T>) -> Self {
        let (lo, hi) = mesh.bounding_box();
        let lo = [lo[0].as_f64(), lo[1].as_f64()];
        let hi = [hi[0].as_f64(), hi[1].as_f64()];
        let side = ((mesh.triangles.len() as f64) / 2.0).sqrt().ceil().max(1.0) as usize;
        let (nx, ny) = (side, side);
        let cell = [(hi[0] - lo[0]) / nx as f64, (hi[1] - lo[1]) / ny as f64];
        let mut buckets = vec![Vec::new(); nx * ny];
        let clamp = |v: f64, n: usize| (v.floor().max(0.0) as usize).min(n - 1);
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let xs = tri.map(|v| mesh.vertices[v][0].as_f64());
            let ys = tri.map(|v| mesh.vertices[v][1].as_f64());
            let (x0, x1) = (xs.iter().cloned().fold(f64::MAX, f64::min), xs.iter().cloned().fold(f64::MIN, f64::max));
            let (y0, y1) = (ys.iter().cloned().fold(f64::MAX, f64::min), ys.iter().cloned().fold(f64::MIN, f64::max));
            let eps = 1e-12;
            let (i0, i1) = (clamp((x0 - lo[0]) / cell[0] - eps, nx), clamp((x1 - lo[0]) / cell[0] + eps, nx));
            let (j0, j1) = (clamp((y0 - lo[1]) / cell[1] - eps, ny), clamp((y1 - lo[1]) / cell[1] + eps, ny));
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * nx + i].push(t);
                }
            }
        }
        PointLocator { nx, ny, lo, cell, buckets }
    }

    /// Triangle containing `p` (within a small tolerance) and its
    /// barycentric coordinates.
    pub fn locate<T: Real>(&self, mesh: &Mesh<T>, p: Point2<T>) -> Option<(usize, [T; 3])> {
        let (px, py) = (p[0].as_f64(), p[1].as_f64());
        let i = (((px - self.lo[0]) / self.cell[0]).floor().max(0.0) as usize).min(self.nx - 1);
        let j = (((py - self.lo[1]) / self.cell[1]).floor().max(0.0) as usize).min(self.ny - 1);
        let tol = T::lit(-1e-10);
        let mut best: Option<(usize, [T; 3], T)> = None;
        for &t in &self.buckets[j * self.nx + i] {
            let l = mesh.barycentric(t, p);
            let worst = l[0].min(l[1]).min(l[2]);
            if worst >= tol {
                return Some((t, l));
            }
            if best.as_ref().map_or(true, |b| worst > b.2) {
                best = Some((t, l, worst));
            }
        }
        best.filter(|b| b.2 >= T::lit(-1e-6)).map(|b| (b.0, b.1))
    }
}
