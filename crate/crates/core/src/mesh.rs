//! Uniform triangulations of the unit square.
//!
//! Every square cell of an `n × n` grid (`n = 2^level`) is split along its
//! positive-slope diagonal into two counterclockwise triangles. Homogeneous
//! Dirichlet conditions are imposed by numbering only interior vertices as
//! degrees of freedom.

use std::io::Write;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};

pub const MAX_LEVEL: u32 = 12;

static NEXT_MESH_ID: AtomicU64 = AtomicU64::new(1);

/// An edge of the triangulation.
///
/// `unit_normal` points from `left` toward `right`. Boundary facets have no
/// right neighbour and their normal points out of the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Facet {
    pub endpoints: [usize; 2],
    pub length: f64,
    pub unit_normal: [f64; 2],
    pub left: usize,
    pub right: Option<usize>,
}

impl Facet {
    pub fn is_interior(&self) -> bool {
        self.right.is_some()
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    id: u64,
    level: u32,
    cells_per_side: usize,
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary_vertex: Vec<bool>,
    dof_of_vertex: Vec<Option<usize>>,
    vertex_of_dof: Vec<usize>,
    interior_facets: Vec<Facet>,
    boundary_facets: Vec<Facet>,
    areas: Vec<f64>,
    diameters: Vec<f64>,
}

/// Builds the uniform mesh with `2^level` cells per side.
pub fn build_uniform_mesh(level: u32) -> Result<Mesh> {
    if !(1..=MAX_LEVEL).contains(&level) {
        return Err(Error::Config(format!(
            "mesh level must lie in 1..={MAX_LEVEL}, got {level}"
        )));
    }
    let n = 1usize << level;
    let side = n + 1;
    let vid = |i: usize, j: usize| j * side + i;

    let mut vertices = Vec::with_capacity(side * side);
    let mut boundary_vertex = Vec::with_capacity(side * side);
    for j in 0..side {
        for i in 0..side {
            vertices.push([i as f64 / n as f64, j as f64 / n as f64]);
            boundary_vertex.push(i == 0 || j == 0 || i == n || j == n);
        }
    }

    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (sw, se, ne, nw) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
            triangles.push([sw, se, ne]);
            triangles.push([sw, ne, nw]);
        }
    }

    let mut dof_of_vertex = vec![None; vertices.len()];
    let mut vertex_of_dof = Vec::new();
    for (v, &on_boundary) in boundary_vertex.iter().enumerate() {
        if !on_boundary {
            dof_of_vertex[v] = Some(vertex_of_dof.len());
            vertex_of_dof.push(v);
        }
    }

    let mut areas = Vec::with_capacity(triangles.len());
    let mut diameters = Vec::with_capacity(triangles.len());
    for tri in &triangles {
        let p = tri.map(|v| vertices[v]);
        areas.push(signed_area(&p));
        let d = (0..3)
            .map(|a| distance(p[a], p[(a + 1) % 3]))
            .fold(0.0, f64::max);
        diameters.push(d);
    }

    let mut mesh = Mesh {
        id: NEXT_MESH_ID.fetch_add(1, Ordering::Relaxed),
        level,
        cells_per_side: n,
        vertices,
        triangles,
        boundary_vertex,
        dof_of_vertex,
        vertex_of_dof,
        interior_facets: Vec::new(),
        boundary_facets: Vec::new(),
        areas,
        diameters,
    };
    let (interior, boundary) = enumerate_facets(&mesh);
    mesh.interior_facets = interior;
    mesh.boundary_facets = boundary;
    Ok(mesh)
}

/// Interior facets of `mesh`, each listed once, ordered by sorted endpoint pair.
pub fn facet_geometry(mesh: &Mesh) -> Vec<Facet> {
    enumerate_facets(mesh).0
}

fn enumerate_facets(mesh: &Mesh) -> (Vec<Facet>, Vec<Facet>) {
    let mut edges: Vec<([usize; 2], usize)> = Vec::with_capacity(3 * mesh.triangles.len());
    for (t, tri) in mesh.triangles.iter().enumerate() {
        for a in 0..3 {
            let (u, v) = (tri[a], tri[(a + 1) % 3]);
            edges.push(([u.min(v), u.max(v)], t));
        }
    }
    edges.sort_unstable();

    let mut interior = Vec::new();
    let mut boundary = Vec::new();
    let mut i = 0;
    while i < edges.len() {
        let (key, left) = edges[i];
        let right = match edges.get(i + 1) {
            Some(&(next, t)) if next == key => Some(t),
            _ => None,
        };
        let facet = make_facet(mesh, key, left, right);
        if right.is_some() {
            debug_assert!(edges.get(i + 2).is_none_or(|e| e.0 != key));
            interior.push(facet);
            i += 2;
        } else {
            boundary.push(facet);
            i += 1;
        }
    }
    (interior, boundary)
}

fn make_facet(mesh: &Mesh, endpoints: [usize; 2], left: usize, right: Option<usize>) -> Facet {
    let a = mesh.vertices[endpoints[0]];
    let b = mesh.vertices[endpoints[1]];
    let length = distance(a, b);
    let mut normal = [(b[1] - a[1]) / length, -(b[0] - a[0]) / length];
    let c = mesh.centroid(left);
    if normal[0] * (c[0] - a[0]) + normal[1] * (c[1] - a[1]) > 0.0 {
        normal = [-normal[0], -normal[1]];
    }
    Facet {
        endpoints,
        length,
        unit_normal: normal,
        left,
        right,
    }
}

fn signed_area(p: &[[f64; 2]; 3]) -> f64 {
    0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]))
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (b[0] - a[0]).hypot(b[1] - a[1])
}

impl Mesh {
    /// Process-unique identity, used to check that finite-element functions belong together.
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn cells_per_side(&self) -> usize {
        self.cells_per_side
    }

    /// Grid spacing `2^-level`.
    pub fn spacing(&self) -> f64 {
        1.0 / self.cells_per_side as f64
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_vertex_flags(&self) -> &[bool] {
        &self.boundary_vertex
    }

    pub fn interior_facets(&self) -> &[Facet] {
        &self.interior_facets
    }

    pub fn boundary_facets(&self) -> &[Facet] {
        &self.boundary_facets
    }

    pub fn n_dofs(&self) -> usize {
        self.vertex_of_dof.len()
    }

    pub fn dof_of_vertex(&self, v: usize) -> Option<usize> {
        self.dof_of_vertex[v]
    }

    pub fn vertex_of_dof(&self, dof: usize) -> usize {
        self.vertex_of_dof[dof]
    }

    pub fn area(&self, t: usize) -> f64 {
        self.areas[t]
    }

    /// Element diameter `h_K`.
    pub fn diameter(&self, t: usize) -> f64 {
        self.diameters[t]
    }

    pub fn max_diameter(&self) -> f64 {
        self.diameters.iter().copied().fold(0.0, f64::max)
    }

    pub fn triangle_coords(&self, t: usize) -> [[f64; 2]; 3] {
        self.triangles[t].map(|v| self.vertices[v])
    }

    pub fn centroid(&self, t: usize) -> [f64; 2] {
        let p = self.triangle_coords(t);
        [
            (p[0][0] + p[1][0] + p[2][0]) / 3.0,
            (p[0][1] + p[1][1] + p[2][1]) / 3.0,
        ]
    }

    /// Writes the debugging dump: vertex count and triangle count on the
    /// first line, then one `x y` line per vertex and one `i j k` line per
    /// triangle (0-based).
    pub fn write_node_element<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{} {}", self.vertices.len(), self.triangles.len())?;
        for v in &self.vertices {
            writeln!(out, "{} {}", v[0], v[1])?;
        }
        for t in &self.triangles {
            writeln!(out, "{} {} {}", t[0], t[1], t[2])?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::{BTreeMap, BTreeSet};

    #[test]
    fn level_one_counts() {
        let m = build_uniform_mesh(1).unwrap();
        assert_eq!(m.vertices().len(), 9);
        assert_eq!(m.triangles().len(), 8);
        assert_eq!(m.n_dofs(), 1);
        assert_eq!(m.vertex_of_dof(0), 4);
        assert!((m.max_diameter() - 2f64.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn level_three_counts_match_enumeration() {
        let m = build_uniform_mesh(3).unwrap();
        // brute force over the 9 x 9 vertex grid
        let mut interior = 0;
        for j in 0..=8 {
            for i in 0..=8 {
                if (1..8).contains(&i) && (1..8).contains(&j) {
                    interior += 1;
                }
            }
        }
        assert_eq!(m.triangles().len(), 128);
        assert_eq!(m.vertices().len(), 81);
        assert_eq!(m.n_dofs(), interior);
        assert_eq!(interior, 49);
    }

    #[test]
    fn rejects_bad_levels() {
        assert!(matches!(build_uniform_mesh(0), Err(Error::Config(_))));
        assert!(matches!(build_uniform_mesh(13), Err(Error::Config(_))));
    }

    #[test]
    fn areas_sum_to_one_and_triangles_are_ccw() {
        for level in 1..=6 {
            let m = build_uniform_mesh(level).unwrap();
            let total: f64 = (0..m.triangles().len()).map(|t| m.area(t)).sum();
            assert!((total - 1.0).abs() < 1e-12);
            assert!((0..m.triangles().len()).all(|t| m.area(t) > 0.0));
        }
    }

    #[test]
    fn diameter_is_exact() {
        for level in 1..=8 {
            let m = build_uniform_mesh(level).unwrap();
            let h = 2f64.sqrt() * 0.5f64.powi(level as i32);
            assert_eq!(m.max_diameter(), h);
        }
    }

    #[test]
    fn euler_relation_and_edge_sharing() {
        for level in 1..=5 {
            let m = build_uniform_mesh(level).unwrap();
            let e = m.interior_facets().len() + m.boundary_facets().len();
            let (v, f) = (m.vertices().len() as i64, m.triangles().len() as i64);
            assert_eq!(v - e as i64 + f, 1);
            assert_eq!(m.boundary_facets().len(), 4 * m.cells_per_side());
            assert!(m.interior_facets().iter().all(|f| f.right.is_some()));
            assert!(m.boundary_facets().iter().all(|f| f.right.is_none()));
        }
    }

    #[test]
    fn level_one_facets() {
        // 16 edges in total, 8 on the boundary. The interior ones are the six
        // edges at the centre vertex plus the diagonals of the two
        // off-diagonal cells.
        let m = build_uniform_mesh(1).unwrap();
        let facets = facet_geometry(&m);
        assert_eq!(facets.len(), 8);
        let at_centre = facets.iter().filter(|f| f.endpoints.contains(&4)).count();
        assert_eq!(at_centre, 6);
    }

    #[test]
    fn level_two_interior_count_by_edge_enumeration() {
        let m = build_uniform_mesh(2).unwrap();
        let mut all = BTreeSet::new();
        let mut on_boundary = 0;
        for tri in m.triangles() {
            for a in 0..3 {
                let (u, v) = (tri[a], tri[(a + 1) % 3]);
                if all.insert((u.min(v), u.max(v))) {
                    let (p, q) = (m.vertices()[u], m.vertices()[v]);
                    let same_side = (p[0] == q[0] && (p[0] == 0.0 || p[0] == 1.0))
                        || (p[1] == q[1] && (p[1] == 0.0 || p[1] == 1.0));
                    if same_side {
                        on_boundary += 1;
                    }
                }
            }
        }
        assert_eq!(on_boundary, 16);
        assert_eq!(facet_geometry(&m).len(), all.len() - on_boundary);
    }

    #[test]
    fn facet_normals_and_adjacency() {
        let m = build_uniform_mesh(3).unwrap();
        let mut tri_edges: BTreeMap<usize, Vec<[usize; 2]>> = BTreeMap::new();
        for (t, tri) in m.triangles().iter().enumerate() {
            for a in 0..3 {
                let (u, v) = (tri[a], tri[(a + 1) % 3]);
                tri_edges.entry(t).or_default().push([u.min(v), u.max(v)]);
            }
        }
        for f in m.interior_facets() {
            let n = f.unit_normal;
            assert!(((n[0] * n[0] + n[1] * n[1]).sqrt() - 1.0).abs() < 1e-14);
            let (cl, cr) = (m.centroid(f.left), m.centroid(f.right.unwrap()));
            assert!(n[0] * (cr[0] - cl[0]) + n[1] * (cr[1] - cl[1]) > 0.0);
            assert!(tri_edges[&f.left].contains(&f.endpoints));
            assert!(tri_edges[&f.right.unwrap()].contains(&f.endpoints));
            let len = (m.vertices()[f.endpoints[0]][0] - m.vertices()[f.endpoints[1]][0])
                .hypot(m.vertices()[f.endpoints[0]][1] - m.vertices()[f.endpoints[1]][1]);
            assert_eq!(f.length, len);
        }
    }

    #[test]
    fn refinement_is_nested() {
        for level in 1..6 {
            let coarse = build_uniform_mesh(level).unwrap();
            let fine = build_uniform_mesh(level + 1).unwrap();
            let fine_set: BTreeSet<(u64, u64)> = fine
                .vertices()
                .iter()
                .map(|v| (v[0].to_bits(), v[1].to_bits()))
                .collect();
            assert!(coarse
                .vertices()
                .iter()
                .all(|v| fine_set.contains(&(v[0].to_bits(), v[1].to_bits()))));
        }
    }

    #[test]
    fn node_element_dump() {
        let m = build_uniform_mesh(1).unwrap();
        let mut buf = Vec::new();
        m.write_node_element(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "9 8");
        assert_eq!(lines.len(), 1 + 9 + 8);
        assert_eq!(lines[1], "0 0");
        assert_eq!(lines[10], "0 1 4");
    }
}
