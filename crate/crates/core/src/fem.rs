//! Continuous piecewise-linear finite elements with homogeneous Dirichlet
//! conditions on a fixed [`Mesh`].
//!
//! [`FeSpace`] bundles the mesh with its mass and stiffness matrices and
//! provides every spatial operation the scheme and the estimators need.
//! Fields that are not finite-element functions (data, exact solutions,
//! correction terms) are handled through [`ScalarField`] or through their
//! values at the degree-4 quadrature points ([`Samples`]).

use std::io::Write;
use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::quadrature::{TriangleRule, DEGREE_4, DEGREE_5};
use crate::solver::{solve_spd, SolverConfig};
pub use crate::sparse::SparseMatrix;

/// A space-time field `g(x, y, t)`.
pub trait ScalarField: Send + Sync {
    fn eval(&self, x: f64, y: f64, t: f64) -> f64;
}

impl<F> ScalarField for F
where
    F: Fn(f64, f64, f64) -> f64 + Send + Sync,
{
    fn eval(&self, x: f64, y: f64, t: f64) -> f64 {
        self(x, y, t)
    }
}

/// Coefficients of a function in the Dirichlet P1 space of one mesh,
/// indexed by interior degree of freedom.
#[derive(Debug, Clone, PartialEq)]
pub struct FeFunction {
    mesh_id: u64,
    coeffs: Vec<f64>,
}

impl FeFunction {
    pub fn zeros(mesh: &Mesh) -> Self {
        FeFunction {
            mesh_id: mesh.id(),
            coeffs: vec![0.0; mesh.n_dofs()],
        }
    }

    pub fn from_coeffs(mesh: &Mesh, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != mesh.n_dofs() {
            return Err(Error::Usage(format!(
                "expected {} coefficients, got {}",
                mesh.n_dofs(),
                coeffs.len()
            )));
        }
        Ok(FeFunction {
            mesh_id: mesh.id(),
            coeffs,
        })
    }

    pub fn mesh_id(&self) -> u64 {
        self.mesh_id
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn scaled(&self, a: f64) -> Self {
        FeFunction {
            mesh_id: self.mesh_id,
            coeffs: self.coeffs.iter().map(|c| a * c).collect(),
        }
    }

    /// `Σ a_i f_i`. Panics on an empty list or on functions from different meshes.
    pub fn combination(terms: &[(f64, &FeFunction)]) -> Self {
        let (_, first) = terms.first().expect("empty combination");
        let mut coeffs = vec![0.0; first.len()];
        for (a, f) in terms {
            assert_eq!(f.mesh_id, first.mesh_id, "functions live on different meshes");
            for (c, v) in coeffs.iter_mut().zip(&f.coeffs) {
                *c += a * v;
            }
        }
        FeFunction {
            mesh_id: first.mesh_id,
            coeffs,
        }
    }

    /// One coefficient per line.
    pub fn write_text<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for c in &self.coeffs {
            writeln!(out, "{c:.17e}")?;
        }
        Ok(())
    }
}

impl Add for &FeFunction {
    type Output = FeFunction;
    fn add(self, rhs: &FeFunction) -> FeFunction {
        FeFunction::combination(&[(1.0, self), (1.0, rhs)])
    }
}

impl Sub for &FeFunction {
    type Output = FeFunction;
    fn sub(self, rhs: &FeFunction) -> FeFunction {
        FeFunction::combination(&[(1.0, self), (-1.0, rhs)])
    }
}

impl Mul<&FeFunction> for f64 {
    type Output = FeFunction;
    fn mul(self, rhs: &FeFunction) -> FeFunction {
        rhs.scaled(self)
    }
}

/// Values of a field at the degree-4 quadrature points of every element
/// (element-major).
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    values: Vec<f64>,
}

impl Samples {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn combination(terms: &[(f64, &Samples)]) -> Self {
        let (_, first) = terms.first().expect("empty combination");
        let mut values = vec![0.0; first.values.len()];
        for (a, s) in terms {
            assert_eq!(s.values.len(), values.len());
            for (v, x) in values.iter_mut().zip(&s.values) {
                *v += a * x;
            }
        }
        Samples { values }
    }
}

/// Which vertices carry unknowns in an assembled matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DofSet {
    /// Interior vertices only (homogeneous Dirichlet space).
    Interior,
    /// Every vertex, before boundary elimination.
    AllVertices,
}

/// Exact P1 mass matrix of a triangle with the given area.
pub fn local_mass(area: f64) -> [[f64; 3]; 3] {
    let d = area / 6.0;
    let o = area / 12.0;
    [[d, o, o], [o, d, o], [o, o, d]]
}

/// Gradients of the three barycentric coordinates (constant on the triangle).
pub fn barycentric_gradients(p: &[[f64; 2]; 3]) -> [[f64; 2]; 3] {
    let two_area = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    [
        [(p[1][1] - p[2][1]) / two_area, (p[2][0] - p[1][0]) / two_area],
        [(p[2][1] - p[0][1]) / two_area, (p[0][0] - p[2][0]) / two_area],
        [(p[0][1] - p[1][1]) / two_area, (p[1][0] - p[0][0]) / two_area],
    ]
}

/// Exact P1 stiffness matrix of a triangle.
pub fn local_stiffness(p: &[[f64; 2]; 3]) -> [[f64; 3]; 3] {
    let g = barycentric_gradients(p);
    let area = 0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]));
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = area * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
        }
    }
    k
}

fn assemble(mesh: &Mesh, dofs: DofSet, local: impl Fn(usize) -> [[f64; 3]; 3]) -> SparseMatrix {
    let index = |v: usize| match dofs {
        DofSet::Interior => mesh.dof_of_vertex(v),
        DofSet::AllVertices => Some(v),
    };
    let dim = match dofs {
        DofSet::Interior => mesh.n_dofs(),
        DofSet::AllVertices => mesh.vertices().len(),
    };
    let mut triplets = Vec::with_capacity(9 * mesh.triangles().len());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let m = local(t);
        for a in 0..3 {
            let Some(i) = index(tri[a]) else { continue };
            for b in 0..3 {
                if let Some(j) = index(tri[b]) {
                    triplets.push((i, j, m[a][b]));
                }
            }
        }
    }
    SparseMatrix::from_triplets(dim, triplets)
}

pub fn assemble_mass_on(mesh: &Mesh, dofs: DofSet) -> SparseMatrix {
    assemble(mesh, dofs, |t| local_mass(mesh.area(t)))
}

pub fn assemble_stiffness_on(mesh: &Mesh, dofs: DofSet) -> SparseMatrix {
    assemble(mesh, dofs, |t| local_stiffness(&mesh.triangle_coords(t)))
}

/// `M_ij = ∫ φ_i φ_j` over the Dirichlet space.
pub fn assemble_mass(mesh: &Mesh) -> SparseMatrix {
    assemble_mass_on(mesh, DofSet::Interior)
}

/// `K_ij = ∫ ∇φ_i · ∇φ_j` over the Dirichlet space.
pub fn assemble_stiffness(mesh: &Mesh) -> SparseMatrix {
    assemble_stiffness_on(mesh, DofSet::Interior)
}

/// Contribution of one facet to the squared jump norm:
/// `h_e^{2 power} · J² · |e|` with `J = (∇v_left − ∇v_right) · n_e`.
pub fn facet_jump_contribution(grad_left: [f64; 2], grad_right: [f64; 2], normal: [f64; 2], length: f64, power: f64) -> f64 {
    let jump = (grad_left[0] - grad_right[0]) * normal[0] + (grad_left[1] - grad_right[1]) * normal[1];
    length.powf(2.0 * power) * jump * jump * length
}

/// A mesh together with its assembled matrices and solver settings.
#[derive(Debug, Clone)]
pub struct FeSpace {
    mesh: Mesh,
    mass: SparseMatrix,
    stiffness: SparseMatrix,
    solver: SolverConfig,
}

impl FeSpace {
    pub fn new(mesh: Mesh, solver: SolverConfig) -> Result<Self> {
        solver.validate()?;
        let mass = assemble_mass(&mesh);
        let stiffness = assemble_stiffness(&mesh);
        Ok(FeSpace {
            mesh,
            mass,
            stiffness,
            solver,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn mass(&self) -> &SparseMatrix {
        &self.mass
    }

    pub fn stiffness(&self) -> &SparseMatrix {
        &self.stiffness
    }

    pub fn solver(&self) -> &SolverConfig {
        &self.solver
    }

    pub fn n_dofs(&self) -> usize {
        self.mesh.n_dofs()
    }

    pub fn zero(&self) -> FeFunction {
        FeFunction::zeros(&self.mesh)
    }

    pub fn function(&self, coeffs: Vec<f64>) -> Result<FeFunction> {
        FeFunction::from_coeffs(&self.mesh, coeffs)
    }

    fn check(&self, v: &FeFunction) {
        assert_eq!(v.mesh_id(), self.mesh.id(), "function does not belong to this space");
    }

    /// Nodal interpolant of `g(·, t)`.
    pub fn interpolate(&self, g: &dyn ScalarField, t: f64) -> FeFunction {
        let coeffs = (0..self.n_dofs())
            .map(|d| {
                let p = self.mesh.vertices()[self.mesh.vertex_of_dof(d)];
                g.eval(p[0], p[1], t)
            })
            .collect();
        FeFunction {
            mesh_id: self.mesh.id(),
            coeffs,
        }
    }

    /// Value of `v` at every vertex, zero on the boundary.
    pub fn vertex_values(&self, v: &FeFunction) -> Vec<f64> {
        self.check(v);
        let mut out = vec![0.0; self.mesh.vertices().len()];
        for (d, c) in v.coeffs().iter().enumerate() {
            out[self.mesh.vertex_of_dof(d)] = *c;
        }
        out
    }

    /// Samples `g(·, t)` at the degree-4 quadrature points.
    pub fn sample(&self, g: &dyn ScalarField, t: f64) -> Samples {
        self.sample_with(|x, y| g.eval(x, y, t))
    }

    pub fn sample_with(&self, g: impl Fn(f64, f64) -> f64) -> Samples {
        let rule = &DEGREE_4;
        let mut values = Vec::with_capacity(rule.len() * self.mesh.triangles().len());
        for t in 0..self.mesh.triangles().len() {
            let p = self.mesh.triangle_coords(t);
            for q in 0..rule.len() {
                let x = rule.map(q, &p);
                values.push(g(x[0], x[1]));
            }
        }
        Samples { values }
    }

    /// `b_i = ∫ g φ_i` from sampled values.
    pub fn load_from_samples(&self, s: &Samples) -> Vec<f64> {
        let rule = &DEGREE_4;
        let mut b = vec![0.0; self.n_dofs()];
        for (t, tri) in self.mesh.triangles().iter().enumerate() {
            let area = self.mesh.area(t);
            let vals = &s.values[t * rule.len()..(t + 1) * rule.len()];
            for a in 0..3 {
                if let Some(i) = self.mesh.dof_of_vertex(tri[a]) {
                    let mut acc = 0.0;
                    for q in 0..rule.len() {
                        acc += rule.weights[q] * vals[q] * rule.points[q][a];
                    }
                    b[i] += area * acc;
                }
            }
        }
        b
    }

    /// `b_i = ∫ g(·, t) φ_i` by the degree-4 rule.
    pub fn load_vector(&self, g: &dyn ScalarField, t: f64) -> Vec<f64> {
        self.load_from_samples(&self.sample(g, t))
    }

    /// Solves `M c = b`, i.e. the function whose L² pairings with the basis are `b`.
    pub fn solve_mass(&self, b: &[f64]) -> Result<FeFunction> {
        let coeffs = solve_spd(&self.mass, b, &self.solver)?;
        self.function(coeffs)
    }

    /// L² projection `P₀ g(·, t)`.
    pub fn l2_project(&self, g: &dyn ScalarField, t: f64) -> Result<FeFunction> {
        self.solve_mass(&self.load_vector(g, t))
    }

    /// L² projection of a sampled field.
    pub fn l2_project_samples(&self, s: &Samples) -> Result<FeFunction> {
        self.solve_mass(&self.load_from_samples(s))
    }

    /// The positive discrete Laplacian `(−Δ_h) v`, defined by `M d = K v`.
    pub fn discrete_laplacian(&self, v: &FeFunction) -> Result<FeFunction> {
        self.check(v);
        if v.is_zero() {
            return Ok(self.zero());
        }
        self.solve_mass(&self.stiffness.mul_vec(v.coeffs()))
    }

    pub fn inner(&self, v: &FeFunction, w: &FeFunction) -> f64 {
        self.check(v);
        self.check(w);
        self.mass.bilinear(v.coeffs(), w.coeffs())
    }

    pub fn l2_norm(&self, v: &FeFunction) -> f64 {
        self.inner(v, v).max(0.0).sqrt()
    }

    pub fn h1_seminorm(&self, v: &FeFunction) -> f64 {
        self.check(v);
        self.stiffness.bilinear(v.coeffs(), v.coeffs()).max(0.0).sqrt()
    }

    /// `‖h^power v‖` with the element diameter as weight; exact for P1 `v`.
    pub fn weighted_element_norm(&self, v: &FeFunction, power: f64) -> f64 {
        let vals = self.vertex_values(v);
        let mut acc = 0.0;
        for (t, tri) in self.mesh.triangles().iter().enumerate() {
            let [a, b, c] = tri.map(|i| vals[i]);
            let int_sq = self.mesh.area(t) / 6.0 * (a * a + b * b + c * c + a * b + b * c + a * c);
            acc += self.mesh.diameter(t).powf(2.0 * power) * int_sq;
        }
        acc.sqrt()
    }

    /// `‖h^power (g − v)‖` for sampled `g` (degree-4 rule); `v = None` means zero.
    pub fn weighted_sample_error(&self, g: &Samples, v: Option<&FeFunction>, power: f64) -> f64 {
        let rule = &DEGREE_4;
        let vals = v.map(|v| self.vertex_values(v));
        let mut acc = 0.0;
        for (t, tri) in self.mesh.triangles().iter().enumerate() {
            let mut int_sq = 0.0;
            for q in 0..rule.len() {
                let l = rule.points[q];
                let fe = vals
                    .as_ref()
                    .map_or(0.0, |vals| l[0] * vals[tri[0]] + l[1] * vals[tri[1]] + l[2] * vals[tri[2]]);
                let d = g.values[t * rule.len() + q] - fe;
                int_sq += rule.weights[q] * d * d;
            }
            acc += self.mesh.diameter(t).powf(2.0 * power) * self.mesh.area(t) * int_sq;
        }
        acc.sqrt()
    }

    /// L² norm of a sampled field.
    pub fn sample_l2_norm(&self, g: &Samples) -> f64 {
        self.weighted_sample_error(g, None, 0.0)
    }

    /// Constant gradient of `v` on every element.
    pub fn element_gradients(&self, v: &FeFunction) -> Vec<[f64; 2]> {
        let vals = self.vertex_values(v);
        self.mesh
            .triangles()
            .iter()
            .enumerate()
            .map(|(t, tri)| {
                let g = barycentric_gradients(&self.mesh.triangle_coords(t));
                let mut out = [0.0; 2];
                for a in 0..3 {
                    out[0] += vals[tri[a]] * g[a][0];
                    out[1] += vals[tri[a]] * g[a][1];
                }
                out
            })
            .collect()
    }

    /// `(Σ_e h_e^{2 power} ‖J[∇v]_e‖²_e)^{1/2}` over interior facets, `h_e` the facet length.
    pub fn jump_norm(&self, v: &FeFunction, power: f64) -> f64 {
        let grads = self.element_gradients(v);
        self.mesh
            .interior_facets()
            .iter()
            .map(|f| {
                let right = f.right.expect("interior facet");
                facet_jump_contribution(grads[f.left], grads[right], f.unit_normal, f.length, power)
            })
            .sum::<f64>()
            .sqrt()
    }

    fn error_by_rule(&self, rule: &TriangleRule, mut pointwise: impl FnMut(usize, [f64; 3], [f64; 2]) -> f64) -> f64 {
        let mut acc = 0.0;
        for t in 0..self.mesh.triangles().len() {
            let p = self.mesh.triangle_coords(t);
            let mut int_sq = 0.0;
            for q in 0..rule.len() {
                let x = rule.map(q, &p);
                int_sq += rule.weights[q] * pointwise(t, rule.points[q], x);
            }
            acc += self.mesh.area(t) * int_sq;
        }
        acc.sqrt()
    }

    /// `‖g(·, t) − v‖` by the degree-5 rule.
    pub fn field_error_l2(&self, g: &dyn ScalarField, t: f64, v: &FeFunction) -> f64 {
        let vals = self.vertex_values(v);
        let tris = self.mesh.triangles();
        self.error_by_rule(&DEGREE_5, |k, l, x| {
            let tri = tris[k];
            let fe = l[0] * vals[tri[0]] + l[1] * vals[tri[1]] + l[2] * vals[tri[2]];
            let d = g.eval(x[0], x[1], t) - fe;
            d * d
        })
    }

    /// `‖∇g(·, t) − ∇v‖` by the degree-5 rule, `∇g = (gx, gy)`.
    pub fn field_error_h1(&self, gx: &dyn ScalarField, gy: &dyn ScalarField, t: f64, v: &FeFunction) -> f64 {
        let grads = self.element_gradients(v);
        self.error_by_rule(&DEGREE_5, |k, _, x| {
            let dx = gx.eval(x[0], x[1], t) - grads[k][0];
            let dy = gy.eval(x[0], x[1], t) - grads[k][1];
            dx * dx + dy * dy
        })
    }
}
