//! Lowest-order Arnold–Winther mixed elasticity in two dimensions.
//!
//! Stresses live in `S_T = {τ ∈ P₃(T, S) : div τ ∈ P₁(T, ℝ²)}` (dimension 24),
//! displacements in discontinuous `P₁` vectors. A symmetric field is stored by
//! its components `(τ₁₁, τ₁₂, τ₂₂)`. Element fields are polynomials in the
//! scaled local coordinate `y = (x − centroid) / diameter`.
//!
//! Local DOF order: the three components at each vertex (0..9), then for each
//! edge `(a, b)` (ascending local vertices) the moments of `(τn)_c` against
//! `t^q`, `t = 2s − 1`, at index `9 + 4·edge + 2c + q` (9..21), then the means
//! of the three components (21..24). The edge normal is the unit rotation of
//! `v_b − v_a` by −90°.

use std::sync::{Arc, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::linalg::{
    null_space, numerical_rank, singular_values, sparse_solve, DenseMatrix, SparseMatrix,
    DEFAULT_RANK_TOL,
};
use crate::mesh::{local_subsimplices, Mesh};
use crate::par::{try_map_indexed, Execution};
use crate::poly::{homogeneous_monomials, monomials, Exponent, Poly};
use crate::quadrature::{interval_rule, triangle_rule, Rule, CELL_DEGREE, EDGE_DEGREE};

/// Dimension of the AW shape space.
pub const SHAPE_DIM: usize = 24;
/// Dimension of `P₃(T, S)`.
pub const FULL_DIM: usize = 30;
/// Displacement DOFs per cell: two components over `{1, y₁, y₂}`.
pub const DISPLACEMENT_DIM: usize = 6;

const CUBICS: usize = 10;
const ERROR_DEGREE: usize = 12;

fn cubic_monomials() -> &'static [Exponent] {
    static M: OnceLock<Vec<Exponent>> = OnceLock::new();
    M.get_or_init(|| monomials(2, 3))
}

fn rules() -> &'static (Rule, Rule) {
    static R: OnceLock<(Rule, Rule)> = OnceLock::new();
    R.get_or_init(|| (interval_rule(EDGE_DEGREE), triangle_rule(CELL_DEGREE)))
}

fn monomial_values(y: &[f64; 3]) -> [f64; CUBICS] {
    let mut out = [0.0; CUBICS];
    for (o, e) in out.iter_mut().zip(cubic_monomials()) {
        *o = y[0].powi(e[0] as i32) * y[1].powi(e[1] as i32);
    }
    out
}

/// Symmetric 2×2 matrix polynomial `(τ₁₁, τ₁₂, τ₂₂)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrixField {
    pub components: [Poly; 3],
}

impl SymMatrixField {
    pub fn new(components: [Poly; 3]) -> Self {
        Self { components }
    }

    /// From the 30 coefficients `c[10·k + m]` of component `k` on the `m`-th
    /// cubic monomial.
    pub fn from_coefficients(c: &[f64]) -> Self {
        assert_eq!(c.len(), FULL_DIM);
        let components = std::array::from_fn(|k| {
            let mut p = Poly::zero();
            for (m, e) in cubic_monomials().iter().enumerate() {
                p.add_term(*e, c[CUBICS * k + m]);
            }
            p
        });
        Self { components }
    }

    /// Inverse of [`SymMatrixField::from_coefficients`]; requires degree ≤ 3.
    pub fn coefficients(&self) -> Vec<f64> {
        assert!(self.degree() <= 3);
        let mut out = vec![0.0; FULL_DIM];
        for (k, p) in self.components.iter().enumerate() {
            for (m, e) in cubic_monomials().iter().enumerate() {
                out[CUBICS * k + m] = p.coeff(*e);
            }
        }
        out
    }

    pub fn degree(&self) -> usize {
        self.components.iter().map(Poly::degree).max().unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64; 3]) -> [f64; 3] {
        std::array::from_fn(|k| self.components[k].eval(x))
    }

    /// Row-wise divergence `(∂₁τ₁₁ + ∂₂τ₁₂, ∂₁τ₁₂ + ∂₂τ₂₂)`.
    pub fn div(&self) -> [Poly; 2] {
        let [a, b, c] = &self.components;
        [&a.deriv(0) + &b.deriv(1), &b.deriv(0) + &c.deriv(1)]
    }
}

/// Frobenius product `σ₁₁τ₁₁ + 2σ₁₂τ₁₂ + σ₂₂τ₂₂`.
pub fn frobenius(s: &[f64; 3], t: &[f64; 3]) -> f64 {
    s[0] * t[0] + 2.0 * s[1] * t[1] + s[2] * t[2]
}

/// Constant isotropic elasticity tensor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Lame {
    pub lambda: f64,
    pub mu: f64,
}

impl Lame {
    pub fn new(lambda: f64, mu: f64) -> Result<Self> {
        if !(mu > 0.0 && lambda >= 0.0) || !lambda.is_finite() || !mu.is_finite() {
            return Err(invalid(format!("Lamé parameters λ = {lambda}, μ = {mu}")));
        }
        Ok(Self { lambda, mu })
    }

    /// `C⁻¹σ = (σ − λ/(2μ + 2λ) tr σ · I) / 2μ`.
    pub fn compliance(&self, s: &[f64; 3]) -> [f64; 3] {
        let t = self.lambda / (2.0 * self.mu + 2.0 * self.lambda) * (s[0] + s[2]);
        let k = 0.5 / self.mu;
        [k * (s[0] - t), k * s[1], k * (s[2] - t)]
    }

    /// `Cε = 2με + λ tr ε · I`.
    pub fn stiffness(&self, e: &[f64; 3]) -> [f64; 3] {
        let t = self.lambda * (e[0] + e[2]);
        [2.0 * self.mu * e[0] + t, 2.0 * self.mu * e[1], 2.0 * self.mu * e[2] + t]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Triangle {
    pub vertices: [[f64; 2]; 3],
}

impl Triangle {
    pub fn new(vertices: [[f64; 2]; 3]) -> Self {
        Self { vertices }
    }

    pub fn reference() -> Self {
        Self::new([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    }

    pub fn area(&self) -> f64 {
        let [a, b, c] = self.vertices;
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])).abs()
    }

    pub fn diameter(&self) -> f64 {
        local_subsimplices(2, 1)
            .iter()
            .map(|e| {
                let (p, q) = (self.vertices[e[0]], self.vertices[e[1]]);
                (q[0] - p[0]).hypot(q[1] - p[1])
            })
            .fold(0.0, f64::max)
    }

    pub fn centroid(&self) -> [f64; 2] {
        let [a, b, c] = self.vertices;
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::new(self.vertices.map(|v| [s * v[0], s * v[1]]))
    }

    /// Rejects triangles with area below `1e−10 · diameter²`.
    pub fn validate(&self) -> Result<()> {
        let d = self.diameter();
        if !(self.area() >= 1e-10 * d * d) || d == 0.0 {
            return Err(invalid(format!("degenerate triangle {:?}", self.vertices)));
        }
        Ok(())
    }

    /// Scaled local coordinate of a physical point.
    pub fn local(&self, x: &[f64; 3]) -> [f64; 3] {
        let c = self.centroid();
        let d = self.diameter();
        [(x[0] - c[0]) / d, (x[1] - c[1]) / d, 0.0]
    }

    /// Physical point of a reference-triangle point.
    pub fn map(&self, xi: &[f64; 3]) -> [f64; 3] {
        let [a, b, c] = self.vertices;
        [
            a[0] + xi[0] * (b[0] - a[0]) + xi[1] * (c[0] - a[0]),
            a[1] + xi[0] * (b[1] - a[1]) + xi[1] * (c[1] - a[1]),
            0.0,
        ]
    }
}

/// `C[3·comp + m, j]`: coefficient of the `m`-th quadratic monomial in
/// component `comp` of `div τ_j`, over the 30 monomial fields `τ_j`.
pub fn constraint_matrix() -> DenseMatrix {
    let quad = homogeneous_monomials(2, 2);
    let cols: Vec<Vec<f64>> = (0..FULL_DIM)
        .map(|j| {
            let mut e = vec![0.0; FULL_DIM];
            e[j] = 1.0;
            let d = SymMatrixField::from_coefficients(&e).div();
            d.iter()
                .flat_map(|p| quad.iter().map(move |q| p.coeff(*q)))
                .collect()
        })
        .collect();
    DenseMatrix::from_fn(2 * quad.len(), FULL_DIM, |i, j| cols[j][i])
}

/// Orthonormal coefficient basis (columns) of the shape space. The degree-2
/// part of the divergence is invariant under translation and scaling, so the
/// same basis serves every triangle in its local coordinate.
fn shape_coefficients() -> Result<DenseMatrix> {
    let z = null_space(&constraint_matrix(), DEFAULT_RANK_TOL)?;
    if z.ncols() != SHAPE_DIM {
        return Err(invalid(format!("shape space has dimension {}", z.ncols())));
    }
    Ok(z)
}

fn column_field(m: &DenseMatrix, j: usize) -> SymMatrixField {
    let c: Vec<f64> = (0..FULL_DIM).map(|i| m[(i, j)]).collect();
    SymMatrixField::from_coefficients(&c)
}

/// Orthonormal basis of `S_T`, as fields in the local coordinate of `tri`.
pub fn aw_shape_space(tri: &Triangle) -> Result<Vec<SymMatrixField>> {
    tri.validate()?;
    let z = shape_coefficients()?;
    Ok((0..SHAPE_DIM).map(|j| column_field(&z, j)).collect())
}

/// The 24 AW functionals applied to a field given in physical coordinates.
pub fn aw_dofs(tri: &Triangle, tau: &dyn Fn(&[f64; 3]) -> [f64; 3]) -> [f64; SHAPE_DIM] {
    let (edge_rule, cell_rule) = rules();
    let mut out = [0.0; SHAPE_DIM];
    for (i, v) in tri.vertices.iter().enumerate() {
        out[3 * i..3 * i + 3].copy_from_slice(&tau(&[v[0], v[1], 0.0]));
    }
    for (e, ends) in local_subsimplices(2, 1).iter().enumerate() {
        let (a, b) = (tri.vertices[ends[0]], tri.vertices[ends[1]]);
        let t = [b[0] - a[0], b[1] - a[1]];
        let len = t[0].hypot(t[1]);
        let n = [t[1] / len, -t[0] / len];
        for (p, w) in edge_rule.points.iter().zip(&edge_rule.weights) {
            let s = p[0];
            let v = tau(&[a[0] + s * t[0], a[1] + s * t[1], 0.0]);
            let tn = [v[0] * n[0] + v[1] * n[1], v[1] * n[0] + v[2] * n[1]];
            let c = 2.0 * s - 1.0;
            for (comp, val) in tn.iter().enumerate() {
                out[9 + 4 * e + 2 * comp] += w * val;
                out[9 + 4 * e + 2 * comp + 1] += w * val * c;
            }
        }
    }
    for (p, w) in cell_rule.points.iter().zip(&cell_rule.weights) {
        let v = tau(&tri.map(p));
        for k in 0..3 {
            out[21 + k] += 2.0 * w * v[k];
        }
    }
    out
}

fn dof_matrix(tri: &Triangle, fields: &[SymMatrixField]) -> DenseMatrix {
    let cols: Vec<[f64; SHAPE_DIM]> = fields
        .iter()
        .map(|f| aw_dofs(tri, &|x| f.eval(&tri.local(x))))
        .collect();
    DenseMatrix::from_fn(SHAPE_DIM, fields.len(), |i, j| cols[j][i])
}

/// Rank and 2-norm condition number of the DOF matrix on the shape basis.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UnisolvenceReport {
    pub rank: usize,
    pub condition: f64,
    pub pass: bool,
}

pub fn aw_unisolvence_check(tri: &Triangle) -> Result<UnisolvenceReport> {
    let fields = aw_shape_space(tri)?;
    let g = dof_matrix(tri, &fields);
    let s = singular_values(&g)?;
    let rank = numerical_rank(&g, DEFAULT_RANK_TOL);
    let smin = s.last().copied().unwrap_or(0.0);
    let condition = if smin > 0.0 { s[0] / smin } else { f64::INFINITY };
    Ok(UnisolvenceReport {
        rank,
        condition,
        pass: rank == SHAPE_DIM,
    })
}

/// Reference triangle, its ×10 similarity, and a seeded sweep of random
/// triangles with vertices uniform in `[0, 1]²` and area at least 0.01.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UnisolvenceSweep {
    pub seed: u64,
    pub reference: UnisolvenceReport,
    pub scaled: UnisolvenceReport,
    pub trials: usize,
    pub failures: usize,
    pub min_rank: usize,
    pub max_condition: f64,
    pub pass: bool,
}

pub fn random_triangles(seed: u64, count: usize) -> Vec<Triangle> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let t = Triangle::new(std::array::from_fn(|_| [rng.random::<f64>(), rng.random::<f64>()]));
        if t.area() >= 0.01 {
            out.push(t);
        }
    }
    out
}

pub fn aw_unisolvence_sweep(seed: u64, trials: usize) -> Result<UnisolvenceSweep> {
    let reference = aw_unisolvence_check(&Triangle::reference())?;
    let scaled = aw_unisolvence_check(&Triangle::reference().scaled(10.0))?;
    let mut failures = 0;
    let mut min_rank = SHAPE_DIM;
    let mut max_condition = 0.0f64;
    for t in random_triangles(seed, trials) {
        let r = aw_unisolvence_check(&t)?;
        failures += usize::from(!r.pass);
        min_rank = min_rank.min(r.rank);
        max_condition = max_condition.max(r.condition);
    }
    Ok(UnisolvenceSweep {
        seed,
        pass: reference.pass && scaled.pass && failures == 0,
        reference,
        scaled,
        trials,
        failures,
        min_rank,
        max_condition,
    })
}

/// AW element on one triangle: the basis dual to the local DOFs.
#[derive(Clone, Debug)]
pub struct AwElement {
    triangle: Triangle,
    /// `FULL_DIM × SHAPE_DIM` local-coordinate coefficients of the dual basis.
    coeffs: DenseMatrix,
    /// `DISPLACEMENT_DIM × SHAPE_DIM`: physical `div ψ_j` on `{1, y₁, y₂}`.
    div: DenseMatrix,
}

impl AwElement {
    pub fn new(tri: Triangle) -> Result<Self> {
        Self::with_shape(tri, &shape_coefficients()?)
    }

    fn with_shape(tri: Triangle, z: &DenseMatrix) -> Result<Self> {
        tri.validate()?;
        let fields: Vec<SymMatrixField> = (0..SHAPE_DIM).map(|j| column_field(z, j)).collect();
        let g = dof_matrix(&tri, &fields);
        if numerical_rank(&g, DEFAULT_RANK_TOL) < SHAPE_DIM {
            return Err(Error::Singular);
        }
        use faer::linalg::solvers::Solve;
        let ginv = g
            .partial_piv_lu()
            .solve(DenseMatrix::identity(SHAPE_DIM, SHAPE_DIM));
        let coeffs = z * &ginv;
        let d = tri.diameter();
        let div_cols: Vec<Vec<f64>> = (0..SHAPE_DIM)
            .map(|j| {
                let dv = column_field(&coeffs, j).div();
                dv.iter()
                    .flat_map(|p| {
                        [[0, 0, 0], [1, 0, 0], [0, 1, 0]].map(|e| p.coeff(e) / d)
                    })
                    .collect()
            })
            .collect();
        let div = DenseMatrix::from_fn(DISPLACEMENT_DIM, SHAPE_DIM, |i, j| div_cols[j][i]);
        Ok(Self {
            triangle: tri,
            coeffs,
            div,
        })
    }

    pub fn triangle(&self) -> &Triangle {
        &self.triangle
    }

    /// Dual basis field `j` in the local coordinate.
    pub fn basis_field(&self, j: usize) -> SymMatrixField {
        column_field(&self.coeffs, j)
    }

    /// Values of all 24 basis fields at a physical point.
    pub fn tabulate(&self, x: &[f64; 3]) -> [[f64; 3]; SHAPE_DIM] {
        let m = monomial_values(&self.triangle.local(x));
        std::array::from_fn(|j| {
            std::array::from_fn(|k| (0..CUBICS).map(|i| self.coeffs[(CUBICS * k + i, j)] * m[i]).sum())
        })
    }

    /// Field with local coefficients `c` at a physical point.
    pub fn eval(&self, c: &[f64], x: &[f64; 3]) -> [f64; 3] {
        let t = self.tabulate(x);
        let mut out = [0.0; 3];
        for (cj, v) in c.iter().zip(&t) {
            for k in 0..3 {
                out[k] += cj * v[k];
            }
        }
        out
    }

    /// Physical divergence of each basis field on the displacement basis.
    pub fn div_matrix(&self) -> &DenseMatrix {
        &self.div
    }
}

/// Displacement basis `e_comp · m_k(y)`, `m = (1, y₁, y₂)`, at a point.
fn displacement_basis(tri: &Triangle, x: &[f64; 3]) -> [f64; 3] {
    let y = tri.local(x);
    [1.0, y[0], y[1]]
}

/// Global AW stress space with discontinuous `P₁` displacements.
///
/// Global stress DOFs: three per vertex, four per edge (ascending global
/// orientation), three per cell. Displacement DOF `6·cell + 3·comp + k`.
#[derive(Clone, Debug)]
pub struct AwSpace {
    mesh: Arc<Mesh>,
    elements: Vec<AwElement>,
    cell_dofs: Vec<[usize; SHAPE_DIM]>,
    ndofs: usize,
}

impl AwSpace {
    pub fn new(mesh: &Arc<Mesh>) -> Result<Self> {
        Self::new_with(mesh, Execution::default())
    }

    pub fn new_with(mesh: &Arc<Mesh>, exec: Execution) -> Result<Self> {
        if mesh.dim() != 2 {
            return Err(Error::DimensionMismatch(format!(
                "elasticity requires a 2D mesh, got dimension {}",
                mesh.dim()
            )));
        }
        let z = shape_coefficients()?;
        let elements = try_map_indexed(exec, mesh.num_cells(), |c| {
            let cell = &mesh.cells()[c];
            debug_assert!(cell.windows(2).all(|w| w[0] < w[1]));
            let v = mesh.vertices();
            let tri = Triangle::new(std::array::from_fn(|i| [v[cell[i]][0], v[cell[i]][1]]));
            AwElement::with_shape(tri, &z)
        })?;
        let nv = mesh.num_vertices();
        let ne = mesh.num_entities(1);
        let cell_dofs = (0..mesh.num_cells())
            .map(|c| {
                let verts = &mesh.cells()[c];
                let edges = mesh.cell_entities(1, c);
                let mut out = [0; SHAPE_DIM];
                for i in 0..3 {
                    for k in 0..3 {
                        out[3 * i + k] = 3 * verts[i] + k;
                    }
                }
                for e in 0..3 {
                    for s in 0..4 {
                        out[9 + 4 * e + s] = 3 * nv + 4 * edges[e] + s;
                    }
                }
                for k in 0..3 {
                    out[21 + k] = 3 * nv + 4 * ne + 3 * c + k;
                }
                out
            })
            .collect();
        Ok(Self {
            mesh: mesh.clone(),
            elements,
            cell_dofs,
            ndofs: 3 * nv + 4 * ne + 3 * mesh.num_cells(),
        })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn elements(&self) -> &[AwElement] {
        &self.elements
    }

    pub fn cell_dofs(&self, cell: usize) -> &[usize; SHAPE_DIM] {
        &self.cell_dofs[cell]
    }

    pub fn num_dofs(&self) -> usize {
        self.ndofs
    }

    pub fn num_displacement_dofs(&self) -> usize {
        DISPLACEMENT_DIM * self.mesh.num_cells()
    }

    fn local(&self, coeffs: &[f64], cell: usize) -> [f64; SHAPE_DIM] {
        self.cell_dofs[cell].map(|g| coeffs[g])
    }

    /// Stress field at a physical point of `cell`.
    pub fn evaluate(&self, coeffs: &[f64], cell: usize, x: &[f64; 3]) -> [f64; 3] {
        self.elements[cell].eval(&self.local(coeffs, cell), x)
    }

    /// Canonical interpolant of a field evaluated per cell; the first cell
    /// owning a global DOF defines it.
    pub fn interpolate_cellwise(&self, tau: &dyn Fn(usize, &[f64; 3]) -> [f64; 3]) -> Vec<f64> {
        let mut out = vec![0.0; self.ndofs];
        let mut seen = vec![false; self.ndofs];
        for (c, el) in self.elements.iter().enumerate() {
            if self.cell_dofs[c].iter().all(|&g| seen[g]) {
                continue;
            }
            let d = aw_dofs(el.triangle(), &|x| tau(c, x));
            for (i, &g) in self.cell_dofs[c].iter().enumerate() {
                if !seen[g] {
                    out[g] = d[i];
                    seen[g] = true;
                }
            }
        }
        out
    }

    pub fn interpolate(&self, tau: &dyn Fn(&[f64; 3]) -> [f64; 3]) -> Vec<f64> {
        self.interpolate_cellwise(&|_, x| tau(x))
    }

    /// Global divergence: stress DOFs to displacement coefficients.
    pub fn div_matrix(&self) -> SparseMatrix {
        let mut t = Vec::with_capacity(self.elements.len() * DISPLACEMENT_DIM * SHAPE_DIM);
        for (c, el) in self.elements.iter().enumerate() {
            let d = el.div_matrix();
            for i in 0..DISPLACEMENT_DIM {
                for (j, &g) in self.cell_dofs[c].iter().enumerate() {
                    if d[(i, j)] != 0.0 {
                        t.push((DISPLACEMENT_DIM * c + i, g, d[(i, j)]));
                    }
                }
            }
        }
        SparseMatrix::from_triplets(self.num_displacement_dofs(), self.ndofs, t)
    }

    fn displacement_cell_mass(&self, cell: usize) -> [[f64; 3]; 3] {
        let (_, rule) = rules();
        let tri = self.elements[cell].triangle();
        let jac = 2.0 * tri.area();
        let mut m = [[0.0; 3]; 3];
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let b = displacement_basis(tri, &tri.map(p));
            for k in 0..3 {
                for l in 0..3 {
                    m[k][l] += w * jac * b[k] * b[l];
                }
            }
        }
        m
    }

    /// Block-diagonal displacement mass matrix.
    pub fn displacement_mass(&self) -> SparseMatrix {
        let mut t = Vec::new();
        for c in 0..self.mesh.num_cells() {
            let m = self.displacement_cell_mass(c);
            for comp in 0..2 {
                let o = DISPLACEMENT_DIM * c + 3 * comp;
                for k in 0..3 {
                    for l in 0..3 {
                        t.push((o + k, o + l, m[k][l]));
                    }
                }
            }
        }
        SparseMatrix::from_triplets(self.num_displacement_dofs(), self.num_displacement_dofs(), t)
    }

    /// Moments `∫ f · v_i` against the displacement basis.
    pub fn displacement_load(&self, f: &dyn Fn(&[f64; 3]) -> [f64; 2]) -> Vec<f64> {
        let fine = triangle_rule(ERROR_DEGREE);
        let mut out = vec![0.0; self.num_displacement_dofs()];
        for (c, el) in self.elements.iter().enumerate() {
            let tri = el.triangle();
            let jac = 2.0 * tri.area();
            for (p, w) in fine.points.iter().zip(&fine.weights) {
                let x = tri.map(p);
                let b = displacement_basis(tri, &x);
                let v = f(&x);
                for comp in 0..2 {
                    for k in 0..3 {
                        out[DISPLACEMENT_DIM * c + 3 * comp + k] += w * jac * v[comp] * b[k];
                    }
                }
            }
        }
        out
    }

    /// Cellwise L² projection onto discontinuous `P₁` vectors.
    pub fn project_displacement(&self, f: &dyn Fn(&[f64; 3]) -> [f64; 2]) -> Result<Vec<f64>> {
        let rhs = self.displacement_load(f);
        let mut out = vec![0.0; rhs.len()];
        for c in 0..self.mesh.num_cells() {
            let m = self.displacement_cell_mass(c);
            let mm = DenseMatrix::from_fn(3, 3, |i, j| m[i][j]);
            for comp in 0..2 {
                let o = DISPLACEMENT_DIM * c + 3 * comp;
                let x = crate::linalg::cholesky_solve(&mm, &rhs[o..o + 3])?;
                out[o..o + 3].copy_from_slice(&x);
            }
        }
        Ok(out)
    }

    /// Displacement field at a physical point of `cell`.
    pub fn evaluate_displacement(&self, u: &[f64], cell: usize, x: &[f64; 3]) -> [f64; 2] {
        let b = displacement_basis(self.elements[cell].triangle(), x);
        let o = DISPLACEMENT_DIM * cell;
        std::array::from_fn(|comp| (0..3).map(|k| u[o + 3 * comp + k] * b[k]).sum())
    }

    /// `∫ C⁻¹σ : τ` on the stress space.
    pub fn compliance_matrix(&self, lame: &Lame) -> SparseMatrix {
        let (_, rule) = rules();
        let mut t = Vec::with_capacity(self.elements.len() * SHAPE_DIM * SHAPE_DIM);
        for (c, el) in self.elements.iter().enumerate() {
            let tri = el.triangle();
            let jac = 2.0 * tri.area();
            let mut a = [[0.0; SHAPE_DIM]; SHAPE_DIM];
            for (p, w) in rule.points.iter().zip(&rule.weights) {
                let v = el.tabulate(&tri.map(p));
                let cv: Vec<[f64; 3]> = v.iter().map(|s| lame.compliance(s)).collect();
                for i in 0..SHAPE_DIM {
                    for j in 0..SHAPE_DIM {
                        a[i][j] += w * jac * frobenius(&cv[j], &v[i]);
                    }
                }
            }
            let dofs = &self.cell_dofs[c];
            for i in 0..SHAPE_DIM {
                for j in 0..SHAPE_DIM {
                    t.push((dofs[i], dofs[j], a[i][j]));
                }
            }
        }
        SparseMatrix::from_triplets(self.ndofs, self.ndofs, t)
    }

    /// `B_ij = ∫ div ψ_j · v_i`.
    pub fn equilibrium_matrix(&self) -> Result<SparseMatrix> {
        self.displacement_mass().matmul(&self.div_matrix())
    }

    /// `‖σ − σ_h‖` in the Frobenius L² norm.
    pub fn stress_error(&self, coeffs: &[f64], exact: &dyn Fn(&[f64; 3]) -> [f64; 3]) -> f64 {
        let rule = triangle_rule(ERROR_DEGREE);
        let mut sum = 0.0;
        for (c, el) in self.elements.iter().enumerate() {
            let tri = el.triangle();
            let jac = 2.0 * tri.area();
            let local = self.local(coeffs, c);
            for (p, w) in rule.points.iter().zip(&rule.weights) {
                let x = tri.map(p);
                let h = el.eval(&local, &x);
                let e = exact(&x);
                let d = [h[0] - e[0], h[1] - e[1], h[2] - e[2]];
                sum += w * jac * frobenius(&d, &d);
            }
        }
        sum.sqrt()
    }

    /// `‖u − u_h‖` in L².
    pub fn displacement_error(&self, u: &[f64], exact: &dyn Fn(&[f64; 3]) -> [f64; 2]) -> f64 {
        let rule = triangle_rule(ERROR_DEGREE);
        let mut sum = 0.0;
        for (c, el) in self.elements.iter().enumerate() {
            let tri = el.triangle();
            let jac = 2.0 * tri.area();
            for (p, w) in rule.points.iter().zip(&rule.weights) {
                let x = tri.map(p);
                let h = self.evaluate_displacement(u, c, &x);
                let e = exact(&x);
                sum += w * jac * ((h[0] - e[0]).powi(2) + (h[1] - e[1]).powi(2));
            }
        }
        sum.sqrt()
    }
}

/// All fields with one symmetric slot set to a monomial of degree ≤ `degree`.
pub fn aw_battery(degree: usize) -> Vec<SymMatrixField> {
    let mut out = Vec::new();
    for slot in 0..3 {
        for e in monomials(2, degree) {
            let mut c: [Poly; 3] = std::array::from_fn(|_| Poly::zero());
            c[slot] = Poly::monomial(e, 1.0);
            out.push(SymMatrixField::new(c));
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AwCommutingReport {
    pub fields: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Max-norm residual of `div Π^S τ − Π^V div τ` over a battery of
/// physical-coordinate fields.
pub fn aw_commutativity_check(
    space: &AwSpace,
    battery: &[SymMatrixField],
    tolerance: f64,
) -> Result<AwCommutingReport> {
    let d = space.div_matrix();
    let mut max_residual = 0.0f64;
    for tau in battery {
        let lhs = d.matvec(&space.interpolate(&|x| tau.eval(x)));
        let div = tau.div();
        let rhs = space.project_displacement(&|x| [div[0].eval(x), div[1].eval(x)])?;
        for (a, b) in lhs.iter().zip(&rhs) {
            max_residual = max_residual.max((a - b).abs());
        }
    }
    Ok(AwCommutingReport {
        fields: battery.len(),
        max_residual,
        tolerance,
        pass: max_residual <= tolerance,
    })
}

/// Discrete mixed elasticity solution.
#[derive(Clone, Debug)]
pub struct ElasticitySolution {
    pub space: AwSpace,
    pub stress: Vec<f64>,
    pub displacement: Vec<f64>,
    /// `‖K x − b‖ / ‖b‖` of the saddle-point system (absolute when `b = 0`).
    pub residual: f64,
    /// Max over displacement basis functions of `|∫ (div σ_h + f) · v|`.
    pub equilibrium_residual: f64,
}

/// Solves `(C⁻¹σ, τ) + (div τ, u) = 0`, `(div σ, v) = −(f, v)` for
/// `−div σ = f`, `σ = C ε(u)`, `u = 0` on the boundary.
pub fn solve_mixed_elasticity(
    mesh: &Arc<Mesh>,
    lame: Lame,
    f: &dyn Fn(&[f64; 3]) -> [f64; 2],
) -> Result<ElasticitySolution> {
    Lame::new(lame.lambda, lame.mu)?;
    let space = AwSpace::new(mesh)?;
    let a = space.compliance_matrix(&lame);
    let b = space.equilibrium_matrix()?;
    let (ns, nu) = (space.num_dofs(), space.num_displacement_dofs());
    let mut t = a.triplets();
    for (i, j, v) in b.triplets() {
        t.push((ns + i, j, v));
        t.push((j, ns + i, v));
    }
    let k = SparseMatrix::from_triplets(ns + nu, ns + nu, t);
    let load = space.displacement_load(f);
    let mut rhs = vec![0.0; ns];
    rhs.extend(load.iter().map(|v| -v));
    let x = sparse_solve(&k, &rhs)?;
    let r: Vec<f64> = k.matvec(&x).iter().zip(&rhs).map(|(p, q)| p - q).collect();
    let bnorm = crate::linalg::norm2(&rhs);
    let residual = crate::linalg::norm2(&r) / if bnorm > 0.0 { bnorm } else { 1.0 };
    let stress = x[..ns].to_vec();
    let eq = b.matvec(&stress);
    let equilibrium_residual = eq
        .iter()
        .zip(&load)
        .map(|(p, q)| (p + q).abs())
        .fold(0.0, f64::max);
    Ok(ElasticitySolution {
        displacement: x[ns..].to_vec(),
        stress,
        residual,
        equilibrium_residual,
        space,
    })
}

/// Manufactured displacement `u = (sin πx sin πy, 0)`.
pub fn manufactured_displacement(x: &[f64; 3]) -> [f64; 2] {
    use std::f64::consts::PI;
    [(PI * x[0]).sin() * (PI * x[1]).sin(), 0.0]
}

/// `σ = C ε(u)` for [`manufactured_displacement`].
pub fn manufactured_stress(lame: &Lame, x: &[f64; 3]) -> [f64; 3] {
    use std::f64::consts::PI;
    let (sx, cx) = (PI * x[0]).sin_cos();
    let (sy, cy) = (PI * x[1]).sin_cos();
    lame.stiffness(&[PI * cx * sy, 0.5 * PI * sx * cy, 0.0])
}

/// `f = −div σ` for [`manufactured_stress`].
pub fn manufactured_load(lame: &Lame, x: &[f64; 3]) -> [f64; 2] {
    use std::f64::consts::PI;
    let (sx, cx) = (PI * x[0]).sin_cos();
    let (sy, cy) = (PI * x[1]).sin_cos();
    let (l, m) = (lame.lambda, lame.mu);
    [
        (3.0 * m + l) * PI * PI * sx * sy,
        -(m + l) * PI * PI * cx * cy,
    ]
}

/// Dimensions along `Y_h → S_h → V_h` with the Argyris count for `Y_h`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ElasticityDimensions {
    pub argyris: usize,
    pub stress: usize,
    pub displacement: usize,
    /// `dim Y_h − dim S_h + dim V_h`; equals `3χ`.
    pub alternating_sum: i64,
}

pub fn elasticity_dimensions(mesh: &Mesh) -> ElasticityDimensions {
    let (v, e, t) = (mesh.num_vertices(), mesh.num_entities(1), mesh.num_cells());
    let argyris = 6 * v + e;
    let stress = 3 * v + 4 * e + 3 * t;
    let displacement = DISPLACEMENT_DIM * t;
    ElasticityDimensions {
        argyris,
        stress,
        displacement,
        alternating_sum: argyris as i64 - stress as i64 + displacement as i64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compliance_inverts_stiffness() {
        let l = Lame::new(1.3, 0.7).unwrap();
        let e = [0.2, -0.4, 1.1];
        let s = l.compliance(&l.stiffness(&e));
        for k in 0..3 {
            assert!((s[k] - e[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn coefficient_round_trip() {
        let c: Vec<f64> = (0..FULL_DIM).map(|i| i as f64 - 11.0).collect();
        assert_eq!(SymMatrixField::from_coefficients(&c).coefficients(), c);
    }

    #[test]
    fn degenerate_triangles_are_rejected() {
        let t = Triangle::new([[0.0, 0.0], [1.0, 0.0], [2.0, 1e-12]]);
        assert!(aw_shape_space(&t).is_err());
        assert!(Lame::new(1.0, 0.0).is_err());
    }
}
