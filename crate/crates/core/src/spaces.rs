//! Global finite element spaces over a mesh.
//!
//! A global DOF is the reference functional of its entity taken in the
//! entity's canonical (ascending) orientation. Edge families map covariantly
//! (`J⁻ᵀ v̂`), face families contravariantly (`J v̂ / det J`, signed
//! determinant), scalar and density families by composition.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::elements::{local_derivative_matrix, ElementFamily, Proxy, Tabulation};
use crate::error::{invalid, Error, Result};
use crate::linalg::SparseMatrix;
use crate::mesh::{local_subsimplices, permutation_parity, Mesh};
use crate::par::{map_indexed, try_map_indexed, Execution};
use crate::quadrature::{simplex_rule, Rule, CELL_DEGREE};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    None,
    /// Eliminates every DOF on a boundary entity of dimension below the
    /// mesh dimension (no effect on discontinuous families).
    Essential,
}

/// Differential operator applied to fields before pairing in a form.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Op {
    Identity,
    Grad,
    /// 2D scalar curl `(∂₂u, −∂₁u)` or 3D vector curl.
    Curl,
    /// 2D `∂₁v₂ − ∂₂v₁`.
    Rot,
    Div,
    /// `∂_a` of every component.
    Partial(usize),
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Op::Identity => f.write_str("identity"),
            Op::Grad => f.write_str("grad"),
            Op::Curl => f.write_str("curl"),
            Op::Rot => f.write_str("rot"),
            Op::Div => f.write_str("div"),
            Op::Partial(a) => write!(f, "d{}", a + 1),
        }
    }
}

/// Weight in a bilinear form `∫ (K · op u) · op v`.
#[derive(Clone)]
pub enum Coefficient {
    Scalar(f64),
    /// Constant symmetric positive definite matrix.
    Matrix(Vec<Vec<f64>>),
    Field(Arc<dyn Fn(&[f64; 3]) -> Vec<Vec<f64>> + Send + Sync>),
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Scalar(s) => write!(f, "Scalar({s})"),
            Coefficient::Matrix(m) => write!(f, "Matrix({m:?})"),
            Coefficient::Field(_) => f.write_str("Field(..)"),
        }
    }
}

impl Coefficient {
    pub fn identity() -> Self {
        Coefficient::Scalar(1.0)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Coefficient::Scalar(s) if *s > 0.0 && s.is_finite() => Ok(()),
            Coefficient::Scalar(s) => Err(invalid(format!("coefficient must be positive, got {s}"))),
            Coefficient::Matrix(m) => check_spd(m),
            Coefficient::Field(_) => Ok(()),
        }
    }

    fn apply(&self, x: &[f64; 3], v: &[f64]) -> Result<Vec<f64>> {
        let mat = |m: &[Vec<f64>]| -> Result<Vec<f64>> {
            if m.len() != v.len() {
                return Err(Error::DimensionMismatch(format!(
                    "{}x{} coefficient applied to {} components",
                    m.len(),
                    m.len(),
                    v.len()
                )));
            }
            Ok(m.iter()
                .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
                .collect())
        };
        match self {
            Coefficient::Scalar(s) => Ok(v.iter().map(|c| s * c).collect()),
            Coefficient::Matrix(m) => mat(m),
            Coefficient::Field(f) => {
                let m = f(x);
                check_spd(&m)?;
                mat(&m)
            }
        }
    }
}

fn check_spd(m: &[Vec<f64>]) -> Result<()> {
    let n = m.len();
    if m.iter().any(|r| r.len() != n || r.iter().any(|v| !v.is_finite())) {
        return Err(invalid("coefficient must be a finite square matrix"));
    }
    let scale = m.iter().flatten().fold(0.0f64, |a, b| a.max(b.abs()));
    for i in 0..n {
        for j in 0..i {
            if (m[i][j] - m[j][i]).abs() > 1e-12 * scale {
                return Err(invalid("coefficient matrix is not symmetric"));
            }
        }
    }
    // Cholesky on the small matrix.
    let mut l = vec![vec![0.0; n]; n];
    for j in 0..n {
        let mut d = m[j][j];
        for k in 0..j {
            d -= l[j][k] * l[j][k];
        }
        if d <= 0.0 {
            return Err(Error::NotPositiveDefinite);
        }
        l[j][j] = d.sqrt();
        for i in j + 1..n {
            let mut s = m[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            l[i][j] = s / l[j][j];
        }
    }
    Ok(())
}

/// Affine map `x = origin + J x̂` of one cell.
#[derive(Clone, Copy, Debug)]
pub struct CellGeometry {
    pub dim: usize,
    pub origin: [f64; 3],
    /// `jac[i][a] = ∂x_i/∂x̂_a`, columns are `v_a − v_0`.
    pub jac: [[f64; 3]; 3],
    pub inv: [[f64; 3]; 3],
    /// Signed determinant.
    pub det: f64,
}

impl CellGeometry {
    pub fn new(mesh: &Mesh, cell: usize) -> Result<Self> {
        let p = mesh.cell_coordinates(cell);
        Self::from_vertices(mesh.dim(), &p)
    }

    pub fn from_vertices(dim: usize, p: &[[f64; 3]]) -> Result<Self> {
        let mut jac = [[0.0; 3]; 3];
        for a in 0..dim {
            for i in 0..dim {
                jac[i][a] = p[a + 1][i] - p[0][i];
            }
        }
        let (det, inv) = invert(dim, &jac);
        let diam = (1..=dim)
            .flat_map(|a| (0..a).map(move |b| (a, b)))
            .chain((1..=dim).map(|a| (a, 0)))
            .map(|(a, b)| crate::mesh::distance(&p[a], &p[b]))
            .fold(0.0, f64::max);
        if !(det.abs() > 1e-14 * diam.powi(dim as i32)) {
            return Err(invalid("degenerate cell"));
        }
        Ok(Self {
            dim,
            origin: p[0],
            jac,
            inv,
            det,
        })
    }

    pub fn map(&self, xhat: &[f64; 3]) -> [f64; 3] {
        let mut x = self.origin;
        for i in 0..self.dim {
            for a in 0..self.dim {
                x[i] += self.jac[i][a] * xhat[a];
            }
        }
        x
    }

    pub fn volume(&self) -> f64 {
        self.det.abs() / if self.dim == 2 { 2.0 } else { 6.0 }
    }

    /// Pushes a reference value forward according to the proxy type.
    pub fn push_value(&self, proxy: Proxy, v: &[f64]) -> Vec<f64> {
        let d = self.dim;
        match proxy {
            Proxy::Scalar | Proxy::Density => v.to_vec(),
            Proxy::Tangential => (0..d)
                .map(|c| (0..d).map(|a| self.inv[a][c] * v[a]).sum())
                .collect(),
            Proxy::Normal => (0..d)
                .map(|c| (0..d).map(|a| self.jac[c][a] * v[a]).sum::<f64>() / self.det)
                .collect(),
        }
    }

    /// Pulls a physical value back to the reference cell (inverse of
    /// [`push_value`](Self::push_value)).
    pub fn pull_value(&self, proxy: Proxy, f: &[f64]) -> Vec<f64> {
        let d = self.dim;
        match proxy {
            Proxy::Scalar | Proxy::Density => f.to_vec(),
            Proxy::Tangential => (0..d)
                .map(|a| (0..d).map(|c| self.jac[c][a] * f[c]).sum())
                .collect(),
            Proxy::Normal => (0..d)
                .map(|a| self.det * (0..d).map(|c| self.inv[a][c] * f[c]).sum::<f64>())
                .collect(),
        }
    }

    /// Physical value and Jacobian `g[c][k] = ∂v_c/∂x_k` from reference data.
    pub fn push(&self, proxy: Proxy, v: &[f64], dv: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let d = self.dim;
        let value = self.push_value(proxy, v);
        // Push each reference-derivative column, then apply J⁻¹ on the right.
        let cols: Vec<Vec<f64>> = (0..d)
            .map(|b| {
                let col: Vec<f64> = dv.iter().map(|row| row[b]).collect();
                self.push_value(proxy, &col)
            })
            .collect();
        let g = (0..value.len())
            .map(|c| {
                (0..d)
                    .map(|k| (0..d).map(|b| cols[b][c] * self.inv[b][k]).sum())
                    .collect()
            })
            .collect();
        (value, g)
    }
}

fn invert(dim: usize, j: &[[f64; 3]; 3]) -> (f64, [[f64; 3]; 3]) {
    let mut inv = [[0.0; 3]; 3];
    match dim {
        2 => {
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            inv[0][0] = j[1][1] / det;
            inv[0][1] = -j[0][1] / det;
            inv[1][0] = -j[1][0] / det;
            inv[1][1] = j[0][0] / det;
            (det, inv)
        }
        3 => {
            let det = j[0][0] * (j[1][1] * j[2][2] - j[1][2] * j[2][1])
                - j[0][1] * (j[1][0] * j[2][2] - j[1][2] * j[2][0])
                + j[0][2] * (j[1][0] * j[2][1] - j[1][1] * j[2][0]);
            for r in 0..3 {
                for c in 0..3 {
                    // Cofactor transpose.
                    let (r1, r2) = ((c + 1) % 3, (c + 2) % 3);
                    let (c1, c2) = ((r + 1) % 3, (r + 2) % 3);
                    inv[r][c] = (j[r1][c1] * j[r2][c2] - j[r1][c2] * j[r2][c1]) / det;
                }
            }
            (det, inv)
        }
        _ => unreachable!(),
    }
}

/// Applies `op` to a physical value `v` with Jacobian `g`.
pub fn apply_op(op: Op, dim: usize, v: &[f64], g: &[Vec<f64>]) -> Result<Vec<f64>> {
    let bad = || {
        Error::DimensionMismatch(format!(
            "operator {op} not defined for {}-component fields in {dim}D",
            v.len()
        ))
    };
    Ok(match op {
        Op::Identity => v.to_vec(),
        Op::Grad if v.len() == 1 => g[0].clone(),
        Op::Curl if dim == 2 && v.len() == 1 => vec![g[0][1], -g[0][0]],
        Op::Curl if dim == 3 && v.len() == 3 => vec![
            g[2][1] - g[1][2],
            g[0][2] - g[2][0],
            g[1][0] - g[0][1],
        ],
        Op::Rot if dim == 2 && v.len() == 2 => vec![g[1][0] - g[0][1]],
        Op::Div if v.len() == dim => vec![(0..dim).map(|i| g[i][i]).sum()],
        Op::Partial(a) if a < dim => g.iter().map(|row| row[a]).collect(),
        _ => return Err(bad()),
    })
}

#[derive(Clone, Debug)]
pub struct DiscreteSpace {
    mesh: Arc<Mesh>,
    family: Arc<ElementFamily>,
    bc: BoundaryCondition,
    ndofs: usize,
    cell_dofs: Vec<Vec<usize>>,
    cell_signs: Vec<Vec<f64>>,
    dof_entity: Vec<(usize, usize)>,
    constrained: Vec<bool>,
    free: Vec<usize>,
}

/// Builds the global space of `family` over `mesh`.
pub fn build_space(
    mesh: &Arc<Mesh>,
    family: &ElementFamily,
    bc: BoundaryCondition,
) -> Result<DiscreteSpace> {
    DiscreteSpace::new(mesh.clone(), Arc::new(family.clone()), bc)
}

impl DiscreteSpace {
    pub fn new(mesh: Arc<Mesh>, family: Arc<ElementFamily>, bc: BoundaryCondition) -> Result<Self> {
        let dim = mesh.dim();
        if family.mesh_dim() != dim {
            return Err(Error::DimensionMismatch(format!(
                "family {} is {}D but the mesh is {dim}D",
                family.name(),
                family.mesh_dim()
            )));
        }
        let per_entity = family.dofs_per_entity();
        let mut offsets = vec![0usize; dim + 2];
        for k in 0..=dim {
            offsets[k + 1] = offsets[k] + per_entity[k] * mesh.num_entities(k);
        }
        let ndofs = offsets[dim + 1];

        // Position of each local DOF within its entity.
        let mut slot = Vec::with_capacity(family.shape_dim());
        for (i, d) in family.dofs().iter().enumerate() {
            let before = family.dofs()[..i]
                .iter()
                .filter(|e| e.entity_dim == d.entity_dim && e.entity == d.entity)
                .count();
            slot.push(before);
        }
        let locals: Vec<Vec<Vec<usize>>> = (0..=dim).map(|k| local_subsimplices(dim, k)).collect();

        let mut cell_dofs = Vec::with_capacity(mesh.num_cells());
        let mut cell_signs = Vec::with_capacity(mesh.num_cells());
        let mut dof_entity = vec![(0, 0); ndofs];
        for c in 0..mesh.num_cells() {
            let verts = &mesh.cells()[c];
            let mut dofs = Vec::with_capacity(family.shape_dim());
            let mut signs = Vec::with_capacity(family.shape_dim());
            for (i, d) in family.dofs().iter().enumerate() {
                let k = d.entity_dim;
                let g_ent = mesh.cell_entities(k, c)[d.entity];
                let local_order: Vec<usize> = locals[k][d.entity].iter().map(|&l| verts[l]).collect();
                let parity = permutation_parity(&local_order, &mesh.entities(k)[g_ent]);
                let g = offsets[k] + g_ent * per_entity[k] + slot[i];
                dof_entity[g] = (k, g_ent);
                dofs.push(g);
                signs.push(d.orientation_sign(parity));
            }
            cell_dofs.push(dofs);
            cell_signs.push(signs);
        }
        let constrained: Vec<bool> = dof_entity
            .iter()
            .map(|&(k, e)| {
                bc == BoundaryCondition::Essential
                    && !family.is_discontinuous()
                    && k < dim
                    && mesh.is_boundary(k, e)
            })
            .collect();
        let free = (0..ndofs).filter(|&i| !constrained[i]).collect();
        Ok(Self {
            mesh,
            family,
            bc,
            ndofs,
            cell_dofs,
            cell_signs,
            dof_entity,
            constrained,
            free,
        })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn family(&self) -> &ElementFamily {
        &self.family
    }

    pub fn boundary_condition(&self) -> BoundaryCondition {
        self.bc
    }

    pub fn num_dofs(&self) -> usize {
        self.ndofs
    }

    pub fn cell_dofs(&self, cell: usize) -> &[usize] {
        &self.cell_dofs[cell]
    }

    pub fn cell_signs(&self, cell: usize) -> &[f64] {
        &self.cell_signs[cell]
    }

    /// `(entity dimension, entity index)` of a global DOF.
    pub fn dof_entity(&self, dof: usize) -> (usize, usize) {
        self.dof_entity[dof]
    }

    pub fn is_constrained(&self, dof: usize) -> bool {
        self.constrained[dof]
    }

    pub fn free_dofs(&self) -> &[usize] {
        &self.free
    }

    pub fn num_free(&self) -> usize {
        self.free.len()
    }

    /// Embeds free-DOF values into a full vector (constrained entries zero).
    pub fn expand(&self, free_values: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.ndofs];
        for (&g, &v) in self.free.iter().zip(free_values) {
            out[g] = v;
        }
        out
    }

    pub fn restrict_vector(&self, full: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&g| full[g]).collect()
    }

    fn same_mesh(&self, other: &DiscreteSpace) -> Result<()> {
        if Arc::ptr_eq(&self.mesh, &other.mesh)
            || (self.mesh.entity_counts() == other.mesh.entity_counts()
                && self.mesh.vertices() == other.mesh.vertices()
                && self.mesh.cells() == other.mesh.cells())
        {
            Ok(())
        } else {
            Err(Error::DimensionMismatch("spaces live on different meshes".into()))
        }
    }

    /// Physical value of `op` applied to the field with global DOFs `coeffs`
    /// at reference point `xhat` of `cell`.
    pub fn evaluate(&self, coeffs: &[f64], op: Op, cell: usize, xhat: &[f64; 3]) -> Result<Vec<f64>> {
        let geo = CellGeometry::new(&self.mesh, cell)?;
        let tab = self.family.tabulate(std::slice::from_ref(xhat));
        self.evaluate_tab(&geo, &tab, 0, cell, coeffs, op)
    }

    fn evaluate_tab(
        &self,
        geo: &CellGeometry,
        tab: &Tabulation,
        p: usize,
        cell: usize,
        coeffs: &[f64],
        op: Op,
    ) -> Result<Vec<f64>> {
        let proxy = self.family.proxy();
        let nc = self.family.value_size();
        let d = self.mesh.dim();
        let mut v = vec![0.0; nc];
        let mut dv = vec![vec![0.0; d]; nc];
        for (i, (&g, &s)) in self.cell_dofs[cell].iter().zip(&self.cell_signs[cell]).enumerate() {
            let w = s * coeffs[g];
            if w == 0.0 {
                continue;
            }
            for c in 0..nc {
                v[c] += w * tab.values[p][i][c];
                for a in 0..d {
                    dv[c][a] += w * tab.grads[p][i][c][a];
                }
            }
        }
        let (pv, pg) = geo.push(proxy, &v, &dv);
        apply_op(op, d, &pv, &pg)
    }

    /// `[Σ_cells ∫ |op u_h − exact|²]^½` with a rule of the given degree.
    pub fn l2_error(
        &self,
        coeffs: &[f64],
        op: Op,
        exact: &(dyn Fn(&[f64; 3]) -> Vec<f64> + Sync),
        degree: usize,
    ) -> Result<f64> {
        let rule = simplex_rule(self.mesh.dim(), degree);
        let tab = self.family.tabulate(&rule.points);
        let parts = try_map_indexed(Execution::default(), self.mesh.num_cells(), |c| {
            let geo = CellGeometry::new(&self.mesh, c)?;
            let mut s = 0.0;
            for (p, (xh, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
                let uh = self.evaluate_tab(&geo, &tab, p, c, coeffs, op)?;
                let ex = exact(&geo.map(xh));
                if ex.len() != uh.len() {
                    return Err(Error::DimensionMismatch(format!(
                        "exact field has {} components, discrete has {}",
                        ex.len(),
                        uh.len()
                    )));
                }
                let e2: f64 = uh.iter().zip(&ex).map(|(a, b)| (a - b) * (a - b)).sum();
                s += w * geo.det.abs() * e2;
            }
            Ok(s)
        })?;
        Ok(parts.iter().sum::<f64>().sqrt())
    }
}

fn check_consistent_size(name: &str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch(format!(
            "{name}: expected {expected} entries, got {got}"
        )));
    }
    Ok(())
}

/// Physical values of `op` on every basis function at every point of `rule`.
fn op_table(
    space: &DiscreteSpace,
    tab: &Tabulation,
    geo: &CellGeometry,
    op: Op,
    cell: usize,
    npoints: usize,
) -> Result<Vec<Vec<Vec<f64>>>> {
    let proxy = space.family.proxy();
    let d = space.mesh.dim();
    let signs = &space.cell_signs[cell];
    (0..npoints)
        .map(|p| {
            (0..space.family.shape_dim())
                .map(|i| {
                    let (v, g) = geo.push(proxy, &tab.values[p][i], &tab.grads[p][i]);
                    let mut r = apply_op(op, d, &v, &g)?;
                    for x in r.iter_mut() {
                        *x *= signs[i];
                    }
                    Ok(r)
                })
                .collect()
        })
        .collect()
}

/// `A[i][j] = ∫ (K · op_col φ_j) · op_row ψ_i`.
pub fn assemble_form_with(
    row: &DiscreteSpace,
    row_op: Op,
    col: &DiscreteSpace,
    col_op: Op,
    coeff: &Coefficient,
    exec: Execution,
) -> Result<SparseMatrix> {
    row.same_mesh(col)?;
    coeff.validate()?;
    let mesh = &row.mesh;
    let rule: Rule = simplex_rule(mesh.dim(), CELL_DEGREE);
    let rtab = row.family.tabulate(&rule.points);
    let ctab = col.family.tabulate(&rule.points);
    let blocks = try_map_indexed(exec, mesh.num_cells(), |c| -> Result<Vec<(usize, usize, f64)>> {
        let geo = CellGeometry::new(mesh, c)?;
        let rv = op_table(row, &rtab, &geo, row_op, c, rule.len())?;
        let cv = op_table(col, &ctab, &geo, col_op, c, rule.len())?;
        let nr = row.family.shape_dim();
        let nc = col.family.shape_dim();
        let mut local = vec![0.0; nr * nc];
        for (p, (xh, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let x = geo.map(xh);
            let wt = w * geo.det.abs();
            for j in 0..nc {
                let kv = coeff.apply(&x, &cv[p][j])?;
                for i in 0..nr {
                    check_consistent_size("form operands", kv.len(), rv[p][i].len())?;
                    let dot: f64 = kv.iter().zip(&rv[p][i]).map(|(a, b)| a * b).sum();
                    local[i * nc + j] += wt * dot;
                }
            }
        }
        let mut out = Vec::with_capacity(nr * nc);
        for i in 0..nr {
            for j in 0..nc {
                let v = local[i * nc + j];
                if v != 0.0 {
                    out.push((row.cell_dofs[c][i], col.cell_dofs[c][j], v));
                }
            }
        }
        Ok(out)
    })?;
    Ok(SparseMatrix::from_triplets(
        row.ndofs,
        col.ndofs,
        blocks.into_iter().flatten().collect(),
    ))
}

pub fn assemble_form(
    row: &DiscreteSpace,
    row_op: Op,
    col: &DiscreteSpace,
    col_op: Op,
    coeff: &Coefficient,
) -> Result<SparseMatrix> {
    assemble_form_with(row, row_op, col, col_op, coeff, Execution::default())
}

/// `∫ u_h v_h` on all DOFs.
pub fn assemble_mass(space: &DiscreteSpace) -> Result<SparseMatrix> {
    assemble_mass_with(space, Execution::default())
}

pub fn assemble_mass_with(space: &DiscreteSpace, exec: Execution) -> Result<SparseMatrix> {
    assemble_form_with(space, Op::Identity, space, Op::Identity, &Coefficient::identity(), exec)
}

/// `∫ (K · op u) · op v` on all DOFs.
pub fn assemble_stiffness(space: &DiscreteSpace, op: Op, coeff: &Coefficient) -> Result<SparseMatrix> {
    assemble_stiffness_with(space, op, coeff, Execution::default())
}

pub fn assemble_stiffness_with(
    space: &DiscreteSpace,
    op: Op,
    coeff: &Coefficient,
    exec: Execution,
) -> Result<SparseMatrix> {
    assemble_form_with(space, op, space, op, coeff, exec)
}

/// Global exterior derivative `D` with `DOFs(d u_h) = D · DOFs(u_h)`.
///
/// Each row is written once, by the first cell containing it; DOFs are
/// intrinsic to their entity so every containing cell yields the same row.
pub fn assemble_derivative(from: &DiscreteSpace, to: &DiscreteSpace) -> Result<SparseMatrix> {
    assemble_derivative_with(from, to, Execution::default())
}

pub fn assemble_derivative_with(
    from: &DiscreteSpace,
    to: &DiscreteSpace,
    exec: Execution,
) -> Result<SparseMatrix> {
    from.same_mesh(to)?;
    if to.family.form_degree() != from.family.form_degree() + 1 {
        return Err(Error::IncompatibleDerivative(format!(
            "{} -> {} is not a consecutive pair",
            from.family.name(),
            to.family.name()
        )));
    }
    let m = local_derivative_matrix(&from.family, &to.family)?;
    let density = to.family.proxy() == Proxy::Density;
    let mesh = &from.mesh;
    let scales = try_map_indexed(exec, mesh.num_cells(), |c| -> Result<f64> {
        if density {
            Ok(1.0 / CellGeometry::new(mesh, c)?.det)
        } else {
            Ok(1.0)
        }
    })?;
    let mut owned = vec![false; to.ndofs];
    let mut trip = Vec::new();
    for c in 0..mesh.num_cells() {
        for (i, &gi) in to.cell_dofs[c].iter().enumerate() {
            if owned[gi] {
                continue;
            }
            owned[gi] = true;
            let si = to.cell_signs[c][i];
            for (j, &gj) in from.cell_dofs[c].iter().enumerate() {
                let v = m[(i, j)];
                if v != 0.0 {
                    trip.push((gi, gj, si * from.cell_signs[c][j] * v * scales[c]));
                }
            }
        }
    }
    Ok(SparseMatrix::from_triplets(to.ndofs, from.ndofs, trip))
}

/// Cellwise DOF values of the pullback of `field` (local numbering, before
/// orientation signs).
pub fn cellwise_projection(
    space: &DiscreteSpace,
    field: &(dyn Fn(&[f64; 3]) -> Vec<f64> + Sync),
) -> Result<Vec<Vec<f64>>> {
    let fam = &space.family;
    let proxy = fam.proxy();
    let mesh = &space.mesh;
    let probe = field(&mesh.vertices()[0]);
    check_consistent_size("projected field components", fam.value_size(), probe.len())?;
    try_map_indexed(Execution::default(), mesh.num_cells(), |c| {
        let geo = CellGeometry::new(mesh, c)?;
        let pulled = |xh: &[f64; 3]| geo.pull_value(proxy, &field(&geo.map(xh)));
        Ok(fam.dof_rules().iter().map(|r| r.apply(&pulled)).collect())
    })
}

/// Canonical interpolant `Π u`: the global DOFs of `field`.
pub fn canonical_projection(
    space: &DiscreteSpace,
    field: &(dyn Fn(&[f64; 3]) -> Vec<f64> + Sync),
) -> Result<Vec<f64>> {
    let local = cellwise_projection(space, field)?;
    let mut out = vec![0.0; space.ndofs];
    let mut set = vec![false; space.ndofs];
    for (c, vals) in local.iter().enumerate() {
        for (i, &v) in vals.iter().enumerate() {
            let g = space.cell_dofs[c][i];
            if !set[g] {
                set[g] = true;
                out[g] = space.cell_signs[c][i] * v;
            }
        }
    }
    Ok(out)
}

/// Load vector `b_i = ∫ f · φ_i` with a rule of the given degree.
pub fn assemble_load(
    space: &DiscreteSpace,
    f: &(dyn Fn(&[f64; 3]) -> Vec<f64> + Sync),
    degree: usize,
) -> Result<Vec<f64>> {
    let mesh = &space.mesh;
    let rule = simplex_rule(mesh.dim(), degree);
    let tab = space.family.tabulate(&rule.points);
    let parts = try_map_indexed(Execution::default(), mesh.num_cells(), |c| -> Result<Vec<f64>> {
        let geo = CellGeometry::new(mesh, c)?;
        let vals = op_table(space, &tab, &geo, Op::Identity, c, rule.len())?;
        let mut local = vec![0.0; space.family.shape_dim()];
        for (p, (xh, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let fx = f(&geo.map(xh));
            for (i, li) in local.iter_mut().enumerate() {
                check_consistent_size("load components", vals[p][i].len(), fx.len())?;
                *li += w * geo.det.abs() * vals[p][i].iter().zip(&fx).map(|(a, b)| a * b).sum::<f64>();
            }
        }
        Ok(local)
    })?;
    let mut b = vec![0.0; space.ndofs];
    for (c, local) in parts.iter().enumerate() {
        for (i, v) in local.iter().enumerate() {
            b[space.cell_dofs[c][i]] += v;
        }
    }
    Ok(b)
}

/// Rows and columns of `a` restricted to the free DOFs of the two spaces.
pub fn restrict(a: &SparseMatrix, rows: &DiscreteSpace, cols: &DiscreteSpace) -> SparseMatrix {
    a.select(rows.free_dofs(), cols.free_dofs())
}

/// Per-cell geometry for a whole mesh.
pub fn cell_geometries(mesh: &Mesh, exec: Execution) -> Result<Vec<CellGeometry>> {
    map_indexed(exec, mesh.num_cells(), |c| CellGeometry::new(mesh, c))
        .into_iter()
        .collect()
}
