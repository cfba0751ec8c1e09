use std::sync::Arc;

use super::quadrature::{EdgeRule, TriangleRule};
use crate::error::{Error, Result};
use crate::linalg::{SparseOperator, SparsityPattern};
use crate::mesh::{BoundaryTag, EdgeTable, Mesh, PointLocator};
use crate::scalar::{Point2, Real};

/// Which discrete space a coefficient vector lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SpaceId {
    /// Continuous piecewise quadratic vector fields, dof `2 * node + component`.
    Velocity,
    /// Continuous piecewise linear scalars on the vertices.
    Head,
    /// Continuous piecewise linear scalars on the vertices.
    Temperature,
}

/// Coefficients of a discrete field.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldVector<T> {
    pub space: SpaceId,
    pub values: Vec<T>,
}

impl<T: Real> FieldVector<T> {
    pub fn zeros(spaces: &FunctionSpaces<T>, space: SpaceId) -> Self {
        FieldVector { space, values: vec![T::zero(); spaces.dim(space)] }
    }

    /// Checks the length and finiteness of `values`.
    pub fn new(spaces: &FunctionSpaces<T>, space: SpaceId, values: Vec<T>) -> Result<Self> {
        let field = FieldVector { space, values };
        spaces.check(&field, space)?;
        if let Some(i) = field.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Input(format!("{space:?} coefficient {i} is not finite")));
        }
        Ok(field)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: T, other: &Self) -> Self {
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| a + s * b).collect();
        FieldVector { space: self.space, values }
    }
}

/// Boundary edge with its quadratic trace nodes and outward normal.
#[derive(Clone, Debug)]
pub struct BoundaryFacet<T> {
    pub tag: BoundaryTag,
    /// Start vertex, midpoint node, end vertex (quadratic node numbering).
    pub nodes: [usize; 3],
    pub start: Point2<T>,
    pub end: Point2<T>,
    pub normal: Point2<T>,
    pub length: T,
    /// True when the edge is parallel to the x axis.
    pub horizontal: bool,
}

#[derive(Clone, Copy, Debug)]
pub(crate) enum Dofs {
    Velocity,
    Scalar,
}

#[derive(Clone, Debug)]
pub(crate) struct Patterns {
    pub velocity: Arc<SparsityPattern>,
    pub scalar: Arc<SparsityPattern>,
    /// Scalar rows, velocity columns.
    pub scalar_velocity: Arc<SparsityPattern>,
    /// Velocity rows, scalar columns.
    pub velocity_scalar: Arc<SparsityPattern>,
}

#[derive(Clone, Copy, Debug)]
struct Geometry<T> {
    /// Twice the triangle area.
    det: T,
    grad_lambda: [[T; 2]; 3],
}

/// Quadratic velocity, linear head and linear temperature spaces on a mesh.
#[derive(Clone, Debug)]
pub struct FunctionSpaces<T> {
    pub mesh: Mesh<T>,
    pub edges: EdgeTable,
    /// Quadratic nodes: the vertices followed by the edge midpoints.
    pub nodes: Vec<Point2<T>>,
    /// Quadratic nodes of each triangle: vertices, then the midpoints of the
    /// local edges `(0,1)`, `(1,2)`, `(2,0)`.
    pub element_nodes: Vec<[usize; 6]>,
    pub facets: Vec<BoundaryFacet<T>>,
    pub velocity_essential: Vec<usize>,
    pub temperature_essential: Vec<usize>,
    pub velocity_free: Vec<usize>,
    pub temperature_free: Vec<usize>,
    pub rule: TriangleRule<T>,
    pub edge_rule: EdgeRule<T>,
    threads: usize,
    geometry: Vec<Geometry<T>>,
    p2_values: Vec<[T; 6]>,
    p2_grads: Vec<[[T; 2]; 6]>,
    velocity_dofs: Vec<[usize; 12]>,
    pub(crate) patterns: Patterns,
}

/// Worker count for element-parallel assembly, read from `BGS_THREADS`.
pub fn threads_from_env() -> usize {
    std::env::var("BGS_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or(1)
}

impl<T: Real> FunctionSpaces<T> {
    pub fn new(mesh: &Mesh<T>) -> Result<Self> {
        Self::with_threads(mesh, threads_from_env())
    }

    pub fn with_threads(mesh: &Mesh<T>, threads: usize) -> Result<Self> {
        mesh.validate()?;
        let mesh = mesh.clone();
        let edges = mesh.edge_table();
        let nv = mesh.vertices.len();
        let half = T::lit(0.5);

        let mut nodes = mesh.vertices.clone();
        nodes.extend(edges.edges.iter().map(|&[a, b]| {
            let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
            [(pa[0] + pb[0]) * half, (pa[1] + pb[1]) * half]
        }));
        let element_nodes: Vec<[usize; 6]> = mesh
            .triangles
            .iter()
            .zip(&edges.triangle_edges)
            .map(|(t, e)| [t[0], t[1], t[2], nv + e[0], nv + e[1], nv + e[2]])
            .collect();

        let mut edge_owner = vec![usize::MAX; edges.edges.len()];
        for (t, e) in edges.triangle_edges.iter().enumerate() {
            for &id in e {
                edge_owner[id] = t;
            }
        }
        let mut facets = Vec::with_capacity(mesh.boundary_edges.len());
        for be in &mesh.boundary_edges {
            let [a, b] = be.vertices;
            let key = [a.min(b), a.max(b)];
            let id = edges
                .edges
                .binary_search(&key)
                .map_err(|_| Error::Mesh(format!("boundary edge {key:?} is not a mesh edge")))?;
            let tri = mesh.triangles[edge_owner[id]];
            let c = tri.into_iter().find(|&v| v != a && v != b).unwrap();
            let (pa, pb, pc) = (mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]);
            let d = [pb[0] - pa[0], pb[1] - pa[1]];
            let length = d[0].hypot(d[1]);
            let mut normal = [d[1] / length, -d[0] / length];
            if normal[0] * (pc[0] - pa[0]) + normal[1] * (pc[1] - pa[1]) > T::zero() {
                normal = [-normal[0], -normal[1]];
            }
            let horizontal = d[0].abs() > d[1].abs();
            if d[0].abs().min(d[1].abs()) > T::lit(1e-12) * length {
                return Err(Error::Mesh(format!("boundary edge {key:?} is not axis aligned")));
            }
            facets.push(BoundaryFacet { tag: be.tag, nodes: [a, nv + id, b], start: pa, end: pb, normal, length, horizontal });
        }

        let mut velocity_essential = Vec::new();
        let mut temperature_essential = Vec::new();
        for f in &facets {
            for &n in &f.nodes {
                match f.tag {
                    BoundaryTag::Gamma2 => velocity_essential.extend([2 * n, 2 * n + 1]),
                    // Tangential component only.
                    BoundaryTag::Gamma1 => velocity_essential.push(2 * n + usize::from(!f.horizontal)),
                }
            }
            if f.tag == BoundaryTag::Gamma1 {
                temperature_essential.extend([f.nodes[0], f.nodes[2]]);
            }
        }
        velocity_essential.sort_unstable();
        velocity_essential.dedup();
        temperature_essential.sort_unstable();
        temperature_essential.dedup();
        let velocity_free = complement(2 * nodes.len(), &velocity_essential);
        let temperature_free = complement(nv, &temperature_essential);

        let rule = TriangleRule::degree5();
        let edge_rule = EdgeRule::gauss3();
        let geometry: Vec<Geometry<T>> = mesh
            .triangles
            .iter()
            .map(|&[a, b, c]| {
                let (pa, pb, pc) = (mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]);
                let det = (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1]);
                let grad_lambda = [
                    [(pb[1] - pc[1]) / det, (pc[0] - pb[0]) / det],
                    [(pc[1] - pa[1]) / det, (pa[0] - pc[0]) / det],
                    [(pa[1] - pb[1]) / det, (pb[0] - pa[0]) / det],
                ];
                Geometry { det, grad_lambda }
            })
            .collect();
        let p2_values: Vec<[T; 6]> = rule.points.iter().map(|l| p2_basis(*l)).collect();
        let nq = rule.points.len();
        let mut p2_grads = Vec::with_capacity(geometry.len() * nq);
        for g in &geometry {
            for l in &rule.points {
                p2_grads.push(p2_gradients(*l, &g.grad_lambda));
            }
        }
        let velocity_dofs: Vec<[usize; 12]> = element_nodes
            .iter()
            .map(|n| std::array::from_fn(|l| 2 * n[l / 2] + l % 2))
            .collect();

        let nvel = 2 * nodes.len();
        let velocity_pattern = SparsityPattern::from_element_dofs(nvel, nvel, velocity_dofs.iter().map(|d| (&d[..], &d[..])));
        let scalar_pattern = SparsityPattern::from_element_dofs(nv, nv, mesh.triangles.iter().map(|d| (&d[..], &d[..])));
        let sv = SparsityPattern::from_element_dofs(
            nv,
            nvel,
            mesh.triangles.iter().zip(&velocity_dofs).map(|(s, v)| (&s[..], &v[..])),
        );
        let vs = SparsityPattern::from_element_dofs(
            nvel,
            nv,
            mesh.triangles.iter().zip(&velocity_dofs).map(|(s, v)| (&v[..], &s[..])),
        );
        let patterns = Patterns {
            velocity: Arc::new(velocity_pattern),
            scalar: Arc::new(scalar_pattern),
            scalar_velocity: Arc::new(sv),
            velocity_scalar: Arc::new(vs),
        };

        Ok(FunctionSpaces {
            mesh,
            edges,
            nodes,
            element_nodes,
            facets,
            velocity_essential,
            temperature_essential,
            velocity_free,
            temperature_free,
            rule,
            edge_rule,
            threads: threads.max(1),
            geometry,
            p2_values,
            p2_grads,
            velocity_dofs,
            patterns,
        })
    }

    pub fn threads(&self) -> usize {
        self.threads
    }

    pub fn n_elements(&self) -> usize {
        self.mesh.triangles.len()
    }

    pub fn n_quad(&self) -> usize {
        self.rule.weights.len()
    }

    pub fn dim(&self, space: SpaceId) -> usize {
        match space {
            SpaceId::Velocity => 2 * self.nodes.len(),
            SpaceId::Head | SpaceId::Temperature => self.mesh.vertices.len(),
        }
    }

    pub fn check(&self, field: &FieldVector<T>, space: SpaceId) -> Result<()> {
        let what = match space {
            SpaceId::Velocity => "velocity field",
            SpaceId::Head => "head field",
            SpaceId::Temperature => "temperature field",
        };
        let scalar_like = |s: SpaceId| matches!(s, SpaceId::Head | SpaceId::Temperature);
        let same = field.space == space || (scalar_like(field.space) && scalar_like(space));
        if !same || field.values.len() != self.dim(space) {
            return Err(Error::Dimension { what, expected: self.dim(space), got: field.values.len() });
        }
        Ok(())
    }

    /// Zeroes the essential dofs of `field`.
    pub fn constrain(&self, field: &mut FieldVector<T>) {
        let fixed = match field.space {
            SpaceId::Velocity => &self.velocity_essential,
            SpaceId::Temperature => &self.temperature_essential,
            SpaceId::Head => return,
        };
        for &i in fixed {
            field.values[i] = T::zero();
        }
    }

    pub(crate) fn dofs(&self, kind: Dofs, e: usize) -> &[usize] {
        match kind {
            Dofs::Velocity => &self.velocity_dofs[e],
            Dofs::Scalar => &self.mesh.triangles[e],
        }
    }

    /// Quadrature weight times the Jacobian of element `e` at point `q`.
    #[inline]
    pub(crate) fn weight(&self, e: usize, q: usize) -> T {
        self.rule.weights[q] * self.geometry[e].det
    }

    #[inline]
    pub(crate) fn lambda(&self, q: usize) -> [T; 3] {
        self.rule.points[q]
    }

    #[inline]
    pub(crate) fn grad_lambda(&self, e: usize) -> &[[T; 2]; 3] {
        &self.geometry[e].grad_lambda
    }

    #[inline]
    pub(crate) fn p2_values(&self, q: usize) -> &[T; 6] {
        &self.p2_values[q]
    }

    #[inline]
    pub(crate) fn p2_grads(&self, e: usize, q: usize) -> &[[T; 2]; 6] {
        &self.p2_grads[e * self.n_quad() + q]
    }

    pub fn quad_point(&self, e: usize, q: usize) -> Point2<T> {
        let l = self.lambda(q);
        let v = &self.mesh.vertices;
        let [a, b, c] = self.mesh.triangles[e];
        [
            l[0] * v[a][0] + l[1] * v[b][0] + l[2] * v[c][0],
            l[0] * v[a][1] + l[1] * v[b][1] + l[2] * v[c][1],
        ]
    }

    /// Velocity value and gradient `grad[c][d] = d z_c / d x_d` at a quadrature point.
    #[inline]
    pub(crate) fn velocity_at(&self, e: usize, q: usize, z: &[T]) -> ([T; 2], [[T; 2]; 2]) {
        let n = &self.element_nodes[e];
        let vals = self.p2_values(q);
        let grads = self.p2_grads(e, q);
        let mut v = [T::zero(); 2];
        let mut g = [[T::zero(); 2]; 2];
        for a in 0..6 {
            for c in 0..2 {
                let coef = z[2 * n[a] + c];
                v[c] += vals[a] * coef;
                g[c][0] += grads[a][0] * coef;
                g[c][1] += grads[a][1] * coef;
            }
        }
        (v, g)
    }

    /// Scalar value and gradient of a linear field at a quadrature point.
    #[inline]
    pub(crate) fn scalar_at(&self, e: usize, q: usize, w: &[T]) -> (T, [T; 2]) {
        let tri = &self.mesh.triangles[e];
        let l = self.lambda(q);
        let gl = self.grad_lambda(e);
        let mut v = T::zero();
        let mut g = [T::zero(); 2];
        for k in 0..3 {
            let coef = w[tri[k]];
            v += l[k] * coef;
            g[0] += gl[k][0] * coef;
            g[1] += gl[k][1] * coef;
        }
        (v, g)
    }

    /// Runs `f` on every element, possibly on several threads; results come
    /// back in element order.
    pub(crate) fn map_elements<R: Send>(&self, f: impl Fn(usize) -> R + Sync) -> Vec<R> {
        let n = self.n_elements();
        if self.threads <= 1 || n < 2 * self.threads {
            return (0..n).map(f).collect();
        }
        let chunk = n.div_ceil(self.threads);
        let f = &f;
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..n)
                .step_by(chunk)
                .map(|start| s.spawn(move || (start..(start + chunk).min(n)).map(f).collect::<Vec<R>>()))
                .collect();
            handles.into_iter().flat_map(|h| h.join().expect("assembly worker panicked")).collect()
        })
    }

    /// Adds row-major local matrices into a global operator in element order.
    pub(crate) fn scatter(&self, pattern: &Arc<SparsityPattern>, rows: Dofs, cols: Dofs, locals: &[Vec<T>]) -> SparseOperator<T> {
        let mut op = SparseOperator::zeros(pattern.clone());
        for (e, local) in locals.iter().enumerate() {
            let (r, c) = (self.dofs(rows, e), self.dofs(cols, e));
            for (i, &gi) in r.iter().enumerate() {
                for (j, &gj) in c.iter().enumerate() {
                    let p = pattern.position(gi, gj).expect("entry outside the element pattern");
                    op.values[p] += local[i * c.len() + j];
                }
            }
        }
        op
    }

    pub(crate) fn scatter_vector(&self, kind: Dofs, locals: &[Vec<T>], out: &mut [T]) {
        for (e, local) in locals.iter().enumerate() {
            for (&g, &v) in self.dofs(kind, e).iter().zip(local) {
                out[g] += v;
            }
        }
    }

    /// Nodal interpolant of a vector field in the velocity space.
    pub fn interpolate_velocity(&self, f: impl Fn(Point2<T>) -> [T; 2]) -> Result<FieldVector<T>> {
        let mut values = Vec::with_capacity(2 * self.nodes.len());
        for p in &self.nodes {
            let v = f(*p);
            if !(v[0].is_finite() && v[1].is_finite()) {
                return Err(Error::Input(format!("vector field is not finite at ({}, {})", p[0], p[1])));
            }
            values.extend(v);
        }
        Ok(FieldVector { space: SpaceId::Velocity, values })
    }

    /// Nodal interpolant of a scalar field in the head or temperature space.
    pub fn interpolate_scalar(&self, space: SpaceId, f: impl Fn(Point2<T>) -> T) -> Result<FieldVector<T>> {
        if space == SpaceId::Velocity {
            return Err(Error::Input("scalar interpolation into the velocity space".into()));
        }
        let mut values = Vec::with_capacity(self.mesh.vertices.len());
        for p in &self.mesh.vertices {
            let v = f(*p);
            if !v.is_finite() {
                return Err(Error::Input(format!("scalar field is not finite at ({}, {})", p[0], p[1])));
            }
            values.push(v);
        }
        Ok(FieldVector { space, values })
    }

    /// Value of a velocity field at an arbitrary point of the domain.
    pub fn eval_velocity(&self, locator: &PointLocator, z: &FieldVector<T>, p: Point2<T>) -> Option<[T; 2]> {
        let (e, l) = locator.locate(&self.mesh, p)?;
        let n = &self.element_nodes[e];
        let vals = p2_basis(l);
        let mut v = [T::zero(); 2];
        for a in 0..6 {
            v[0] += vals[a] * z.values[2 * n[a]];
            v[1] += vals[a] * z.values[2 * n[a] + 1];
        }
        Some(v)
    }

    /// Value of a linear scalar field at an arbitrary point of the domain.
    pub fn eval_scalar(&self, locator: &PointLocator, w: &FieldVector<T>, p: Point2<T>) -> Option<T> {
        let (e, l) = locator.locate(&self.mesh, p)?;
        let tri = &self.mesh.triangles[e];
        Some((0..3).map(|k| l[k] * w.values[tri[k]]).sum())
    }
}

fn complement(n: usize, sorted: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(n - sorted.len());
    let mut it = sorted.iter().peekable();
    for i in 0..n {
        if it.peek() == Some(&&i) {
            it.next();
        } else {
            out.push(i);
        }
    }
    out
}

/// Quadratic Lagrange basis in barycentric coordinates.
pub(crate) fn p2_basis<T: Real>(l: [T; 3]) -> [T; 6] {
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    [
        l[0] * (two * l[0] - T::one()),
        l[1] * (two * l[1] - T::one()),
        l[2] * (two * l[2] - T::one()),
        four * l[0] * l[1],
        four * l[1] * l[2],
        four * l[2] * l[0],
    ]
}

fn p2_gradients<T: Real>(l: [T; 3], gl: &[[T; 2]; 3]) -> [[T; 2]; 6] {
    let four = T::lit(4.0);
    let mut out = [[T::zero(); 2]; 6];
    for i in 0..3 {
        let s = four * l[i] - T::one();
        out[i] = [s * gl[i][0], s * gl[i][1]];
        let j = (i + 1) % 3;
        out[3 + i] = [
            four * (l[i] * gl[j][0] + l[j] * gl[i][0]),
            four * (l[i] * gl[j][1] + l[j] * gl[i][1]),
        ];
    }
    out
}

/// Quadratic basis on an edge parameterized by `s` in `[0, 1]`: start,
/// midpoint, end.
#[inline]
pub(crate) fn p2_edge_basis<T: Real>(s: T) -> [T; 3] {
    let two = T::lit(2.0);
    [(T::one() - s) * (T::one() - two * s), T::lit(4.0) * s * (T::one() - s), s * (two * s - T::one())]
}
