//! Reference-element catalog.
//!
//! Every family lives on the unit simplex (origin plus coordinate unit
//! points). A family is a spanning set of polynomial shape functions, a list
//! of degree-of-freedom functionals attached to local subsimplices, and the
//! DOF-dual basis obtained by inverting the DOF matrix of the spanning set.
//!
//! Entity moments are taken against powers of the centered parameter
//! `t = 2s − 1`, where `s ∈ [0,1]` runs from the lower to the higher local
//! vertex. Reversing an edge therefore multiplies a moment of degree `q` by
//! `(−1)^q` (and by a further `−1` when the functional involves the tangent or
//! normal).

use std::fmt;
use std::str::FromStr;

use faer::linalg::solvers::Solve;
use faer::Mat;

use crate::error::{Error, Result};
use crate::linalg::{numerical_rank, DenseMatrix, DEFAULT_RANK_TOL};
use crate::mesh::local_subsimplices;
use crate::poly::{
    curl_3d, curl_scalar_2d, div, grad, homogeneous_monomials, monomials, rot_2d, Exponent, Poly,
    PolyVec,
};
use crate::quadrature::{reference_volume, simplex_rule, CELL_DEGREE, EDGE_DEGREE};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FamilyKind {
    Lagrange,
    Discontinuous,
    Edge,
    Face,
}

/// Vector-proxy type of the values of a family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Proxy {
    /// Scalar 0-form, mapped by composition.
    Scalar,
    /// 1-form proxy, mapped covariantly.
    Tangential,
    /// (n−1)-form proxy, mapped contravariantly.
    Normal,
    /// n-form proxy; stored by value (cell means are preserved).
    Density,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Functional {
    /// Value at a vertex.
    PointValue,
    /// `∫₀¹ f(x(s)) t^q ds` along an edge.
    ScalarMoment { q: u8 },
    /// `∫₀¹ f(x(s)) · (v_b − v_a) t^q ds`.
    TangentialMoment { q: u8 },
    /// 2D: `∫₀¹ f · R(v_b − v_a) t^q ds`, `R(a, b) = (b, −a)`.
    /// 3D: `∫ f · ((v₁−v₀)×(v₂−v₀))` over the parameter triangle, `q = 0`.
    NormalMoment { q: u8 },
    /// `∫_T f_c x^e dx` on the cell.
    InteriorMoment { component: usize, exponent: Exponent },
    /// `∫_T f x^e dx / |T|` on the cell.
    Mean { exponent: Exponent },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DofSpec {
    pub entity_dim: usize,
    pub entity: usize,
    pub functional: Functional,
}

impl DofSpec {
    /// Moment degree along the entity parameter (0 for other functionals).
    pub fn edge_power(&self) -> u8 {
        match self.functional {
            Functional::ScalarMoment { q }
            | Functional::TangentialMoment { q }
            | Functional::NormalMoment { q } => q,
            _ => 0,
        }
    }

    /// Sign picked up by this functional when its entity's orientation has
    /// the given parity (+1 / −1).
    pub fn orientation_sign(&self, parity: i8) -> f64 {
        if parity > 0 {
            return 1.0;
        }
        let q = self.edge_power() as i32;
        let e = match self.functional {
            Functional::ScalarMoment { .. } => q,
            Functional::TangentialMoment { .. } | Functional::NormalMoment { .. } => q + 1,
            _ => 0,
        };
        if e % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

/// Quadrature form of one functional: `DOF(f) = Σ_p w_p · f(x_p)`.
#[derive(Clone, Debug)]
pub struct DofRule {
    pub points: Vec<[f64; 3]>,
    /// One weight vector (length = value components) per point.
    pub weights: Vec<Vec<f64>>,
}

impl DofRule {
    pub fn apply(&self, f: &dyn Fn(&[f64; 3]) -> Vec<f64>) -> f64 {
        let mut s = 0.0;
        for (p, w) in self.points.iter().zip(&self.weights) {
            let v = f(p);
            for (a, b) in w.iter().zip(&v) {
                s += a * b;
            }
        }
        s
    }
}

#[derive(Clone, Debug)]
pub struct ElementFamily {
    name: String,
    kind: FamilyKind,
    mesh_dim: usize,
    order: usize,
    dofs: Vec<DofSpec>,
    rules: Vec<DofRule>,
    span: Vec<PolyVec>,
    basis: Vec<PolyVec>,
}

const CATALOG_2D: [&str; 10] = [
    "lagrange1", "lagrange2", "lagrange3", "dg0", "dg1", "dg2", "edge1", "edge2", "face1", "face2",
];
const CATALOG_3D: [&str; 4] = ["lagrange1_3d", "dg0_3d", "edge1_3d", "face1_3d"];

/// Every family name accepted by [`ElementFamily::from_name`].
pub fn catalog_names() -> Vec<&'static str> {
    CATALOG_2D.iter().chain(CATALOG_3D.iter()).copied().collect()
}

impl FromStr for ElementFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ElementFamily::from_name(s)
    }
}

impl fmt::Display for ElementFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

impl ElementFamily {
    pub fn from_name(name: &str) -> Result<Self> {
        let (stem, dim) = match name.strip_suffix("_3d") {
            Some(s) => (s, 3),
            None => (name, 2),
        };
        let split = stem
            .find(|c: char| c.is_ascii_digit())
            .ok_or_else(|| Error::NotInCatalog(name.to_string()))?;
        let order: usize = stem[split..]
            .parse()
            .map_err(|_| Error::NotInCatalog(name.to_string()))?;
        let kind = match &stem[..split] {
            "lagrange" => FamilyKind::Lagrange,
            "dg" => FamilyKind::Discontinuous,
            "edge" => FamilyKind::Edge,
            "face" => FamilyKind::Face,
            _ => return Err(Error::NotInCatalog(name.to_string())),
        };
        Self::new(kind, dim, order).map_err(|_| Error::NotInCatalog(name.to_string()))
    }

    pub fn new(kind: FamilyKind, mesh_dim: usize, order: usize) -> Result<Self> {
        let in_catalog = match (mesh_dim, kind) {
            (2, FamilyKind::Lagrange) => (1..=3).contains(&order),
            (2, FamilyKind::Discontinuous) => order <= 2,
            (2, FamilyKind::Edge | FamilyKind::Face) => (1..=2).contains(&order),
            (3, FamilyKind::Discontinuous) => order == 0,
            (3, _) => order == 1,
            _ => false,
        };
        let name = family_name(kind, mesh_dim, order);
        if !in_catalog {
            return Err(Error::NotInCatalog(name));
        }
        let span = spanning_set(kind, mesh_dim, order);
        let dofs = dof_specs(kind, mesh_dim, order);
        let ncomp = span[0].len();
        let rules: Vec<DofRule> = dofs.iter().map(|d| dof_rule(mesh_dim, ncomp, d)).collect();
        let n = span.len();
        if dofs.len() != n {
            return Err(Error::InvalidInput(format!(
                "{name}: {} functionals for a {n}-dimensional space",
                dofs.len()
            )));
        }
        // G[i][j] = DOF_i(span_j); the dual basis has coefficients G⁻¹.
        let g = Mat::from_fn(n, n, |i, j| {
            let p = &span[j];
            rules[i].apply(&|x: &[f64; 3]| p.iter().map(|c| c.eval(x)).collect())
        });
        if numerical_rank(&g, DEFAULT_RANK_TOL) != n {
            return Err(Error::InvalidInput(format!("{name}: degrees of freedom not unisolvent")));
        }
        let ginv = g.partial_piv_lu().solve(Mat::<f64>::identity(n, n));
        let basis: Vec<PolyVec> = (0..n)
            .map(|j| {
                (0..ncomp)
                    .map(|c| {
                        let mut p = Poly::zero();
                        for (k, s) in span.iter().enumerate() {
                            let w = ginv[(k, j)];
                            if w != 0.0 {
                                p += &s[c].scale(w);
                            }
                        }
                        chop(&p, 1e-14)
                    })
                    .collect()
            })
            .collect();
        Ok(ElementFamily {
            name,
            kind,
            mesh_dim,
            order,
            dofs,
            rules,
            span,
            basis,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn mesh_dim(&self) -> usize {
        self.mesh_dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn shape_dim(&self) -> usize {
        self.basis.len()
    }

    /// Exterior form degree of the family (0 = scalar, mesh_dim = density).
    pub fn form_degree(&self) -> usize {
        match self.kind {
            FamilyKind::Lagrange => 0,
            FamilyKind::Edge => 1,
            FamilyKind::Face => self.mesh_dim - 1,
            FamilyKind::Discontinuous => self.mesh_dim,
        }
    }

    pub fn proxy(&self) -> Proxy {
        match self.kind {
            FamilyKind::Lagrange => Proxy::Scalar,
            FamilyKind::Edge => Proxy::Tangential,
            FamilyKind::Face => Proxy::Normal,
            FamilyKind::Discontinuous => Proxy::Density,
        }
    }

    /// Number of value components (1 or mesh_dim).
    pub fn value_size(&self) -> usize {
        match self.proxy() {
            Proxy::Scalar | Proxy::Density => 1,
            Proxy::Tangential | Proxy::Normal => self.mesh_dim,
        }
    }

    pub fn is_discontinuous(&self) -> bool {
        self.kind == FamilyKind::Discontinuous
    }

    pub fn dofs(&self) -> &[DofSpec] {
        &self.dofs
    }

    pub fn dof_rules(&self) -> &[DofRule] {
        &self.rules
    }

    /// DOFs carried by each `k`-entity, for `k = 0..=mesh_dim`.
    pub fn dofs_per_entity(&self) -> Vec<usize> {
        let mut out = vec![0; self.mesh_dim + 1];
        for k in 0..=self.mesh_dim {
            out[k] = self
                .dofs
                .iter()
                .filter(|d| d.entity_dim == k && d.entity == 0)
                .count();
        }
        out
    }

    /// The spanning set the dual basis is built from.
    pub fn spanning_set(&self) -> &[PolyVec] {
        &self.span
    }

    /// DOF-dual basis: `DOF_i(basis_j) = δ_ij`.
    pub fn reference_basis(&self) -> &[PolyVec] {
        &self.basis
    }

    /// Applies every DOF functional to a field on the reference simplex.
    pub fn apply_dofs(&self, field: &dyn Fn(&[f64; 3]) -> Vec<f64>) -> Result<Vec<f64>> {
        let probe = field(&[0.0; 3]);
        if probe.len() != self.value_size() {
            return Err(Error::DimensionMismatch(format!(
                "{} expects {} field components, got {}",
                self.name,
                self.value_size(),
                probe.len()
            )));
        }
        Ok(self.rules.iter().map(|r| r.apply(field)).collect())
    }

    /// DOF values of a polynomial field.
    pub fn apply_dofs_poly(&self, field: &[Poly]) -> Result<Vec<f64>> {
        self.apply_dofs(&|x: &[f64; 3]| field.iter().map(|p| p.eval(x)).collect())
    }

    /// Rebuilds a polynomial field from DOF values.
    pub fn combine(&self, coeffs: &[f64]) -> PolyVec {
        let mut out = vec![Poly::zero(); self.value_size()];
        for (b, &w) in self.basis.iter().zip(coeffs) {
            if w != 0.0 {
                for (o, p) in out.iter_mut().zip(b) {
                    *o += &p.scale(w);
                }
            }
        }
        out
    }

    /// Values and reference first derivatives of every basis function at
    /// the given points.
    pub fn tabulate(&self, points: &[[f64; 3]]) -> Tabulation {
        let d = self.mesh_dim;
        let nc = self.value_size();
        let derivs: Vec<Vec<PolyVec>> = self
            .basis
            .iter()
            .map(|b| b.iter().map(|p| (0..d).map(|a| p.deriv(a)).collect()).collect())
            .collect();
        let mut values = Vec::with_capacity(points.len());
        let mut grads = Vec::with_capacity(points.len());
        for x in points {
            let mut vp = Vec::with_capacity(self.basis.len());
            let mut gp = Vec::with_capacity(self.basis.len());
            for (b, db) in self.basis.iter().zip(&derivs) {
                vp.push(b.iter().map(|p| p.eval(x)).collect::<Vec<_>>());
                gp.push(
                    (0..nc)
                        .map(|c| (0..d).map(|a| db[c][a].eval(x)).collect::<Vec<_>>())
                        .collect::<Vec<_>>(),
                );
            }
            values.push(vp);
            grads.push(gp);
        }
        Tabulation { values, grads }
    }
}

/// `values[p][i][c]`, `grads[p][i][c][a]` = `∂_a` of component `c` of basis
/// function `i` at point `p`.
#[derive(Clone, Debug)]
pub struct Tabulation {
    pub values: Vec<Vec<Vec<f64>>>,
    pub grads: Vec<Vec<Vec<Vec<f64>>>>,
}

fn family_name(kind: FamilyKind, dim: usize, order: usize) -> String {
    let stem = match kind {
        FamilyKind::Lagrange => "lagrange",
        FamilyKind::Discontinuous => "dg",
        FamilyKind::Edge => "edge",
        FamilyKind::Face => "face",
    };
    if dim == 3 {
        format!("{stem}{order}_3d")
    } else {
        format!("{stem}{order}")
    }
}

fn chop(p: &Poly, tol: f64) -> Poly {
    let mut out = Poly::zero();
    for (e, c) in p.terms() {
        if c.abs() > tol {
            out.add_term(*e, *c);
        }
    }
    out
}

fn unit(dim: usize, c: usize, p: Poly) -> PolyVec {
    let mut v = vec![Poly::zero(); dim];
    v[c] = p;
    v
}

fn spanning_set(kind: FamilyKind, dim: usize, order: usize) -> Vec<PolyVec> {
    let x: Vec<Poly> = (0..dim).map(Poly::var).collect();
    match kind {
        FamilyKind::Lagrange | FamilyKind::Discontinuous => monomials(dim, order)
            .into_iter()
            .map(|e| vec![Poly::monomial(e, 1.0)])
            .collect(),
        FamilyKind::Edge | FamilyKind::Face => {
            // P_{r−1}^d plus the Koszul-type complement on homogeneous P̃_{r−1}.
            let r = order;
            let mut out = Vec::new();
            for e in monomials(dim, r - 1) {
                for c in 0..dim {
                    out.push(unit(dim, c, Poly::monomial(e, 1.0)));
                }
            }
            for e in homogeneous_monomials(dim, r - 1) {
                let m = Poly::monomial(e, 1.0);
                match (kind, dim) {
                    (FamilyKind::Face, _) => out.push(x.iter().map(|xi| xi * &m).collect()),
                    (FamilyKind::Edge, 2) => out.push(vec![-&(&x[1] * &m), &x[0] * &m]),
                    (FamilyKind::Edge, _) => {
                        // b × x for each unit b.
                        for c in 0..3 {
                            let mut b = [0.0; 3];
                            b[c] = 1.0;
                            out.push(vec![
                                (&x[2].scale(b[1]) - &x[1].scale(b[2])) * m.clone(),
                                (&x[0].scale(b[2]) - &x[2].scale(b[0])) * m.clone(),
                                (&x[1].scale(b[0]) - &x[0].scale(b[1])) * m.clone(),
                            ]);
                        }
                    }
                    _ => unreachable!(),
                }
            }
            out
        }
    }
}

fn dof_specs(kind: FamilyKind, dim: usize, order: usize) -> Vec<DofSpec> {
    let mut out = Vec::new();
    let cell = |functional| DofSpec {
        entity_dim: dim,
        entity: 0,
        functional,
    };
    match kind {
        FamilyKind::Lagrange => {
            for v in 0..=dim {
                out.push(DofSpec {
                    entity_dim: 0,
                    entity: v,
                    functional: Functional::PointValue,
                });
            }
            for e in 0..local_subsimplices(dim, 1).len() {
                for q in 0..order.saturating_sub(1) {
                    out.push(DofSpec {
                        entity_dim: 1,
                        entity: e,
                        functional: Functional::ScalarMoment { q: q as u8 },
                    });
                }
            }
            if order >= 3 {
                for e in monomials(dim, order - 3) {
                    out.push(cell(Functional::InteriorMoment { component: 0, exponent: e }));
                }
            }
        }
        FamilyKind::Discontinuous => {
            for e in monomials(dim, order) {
                out.push(cell(Functional::Mean { exponent: e }));
            }
        }
        FamilyKind::Edge | FamilyKind::Face => {
            let (edim, tangential) = match kind {
                FamilyKind::Edge => (1, true),
                _ => (dim - 1, false),
            };
            for e in 0..local_subsimplices(dim, edim).len() {
                let max_q = if edim == 1 { order } else { 1 };
                for q in 0..max_q {
                    let q = q as u8;
                    out.push(DofSpec {
                        entity_dim: edim,
                        entity: e,
                        functional: if tangential {
                            Functional::TangentialMoment { q }
                        } else {
                            Functional::NormalMoment { q }
                        },
                    });
                }
            }
            if order >= 2 {
                for e in monomials(dim, order - 2) {
                    for c in 0..dim {
                        out.push(cell(Functional::InteriorMoment { component: c, exponent: e }));
                    }
                }
            }
        }
    }
    out
}

fn ref_vertex(dim: usize, i: usize) -> [f64; 3] {
    let mut v = [0.0; 3];
    if i > 0 {
        v[i - 1] = 1.0;
    }
    debug_assert!(i <= dim);
    v
}

fn sub(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn monomial_value(e: &Exponent, x: &[f64; 3]) -> f64 {
    (0..3).map(|i| x[i].powi(e[i] as i32)).product()
}

fn dof_rule(dim: usize, ncomp: usize, d: &DofSpec) -> DofRule {
    let verts: Vec<[f64; 3]> = local_subsimplices(dim, d.entity_dim)[d.entity]
        .iter()
        .map(|&i| ref_vertex(dim, i))
        .collect();
    let mut points = Vec::new();
    let mut weights = Vec::new();
    match d.functional {
        Functional::PointValue => {
            points.push(verts[0]);
            weights.push(vec![1.0]);
        }
        Functional::ScalarMoment { q } | Functional::TangentialMoment { q } | Functional::NormalMoment { q }
            if d.entity_dim == 1 =>
        {
            let rule = simplex_rule(1, EDGE_DEGREE);
            let tau = sub(&verts[1], &verts[0]);
            for (p, w) in rule.points.iter().zip(&rule.weights) {
                let s = p[0];
                let t = 2.0 * s - 1.0;
                let x = [0, 1, 2].map(|i| verts[0][i] + s * tau[i]);
                let wt = w * t.powi(q as i32);
                points.push(x);
                weights.push(match d.functional {
                    Functional::ScalarMoment { .. } => vec![wt],
                    Functional::TangentialMoment { .. } => tau[..dim].iter().map(|c| wt * c).collect(),
                    _ => vec![wt * tau[1], -wt * tau[0]],
                });
            }
        }
        Functional::NormalMoment { .. } => {
            let rule = simplex_rule(2, CELL_DEGREE);
            let a = sub(&verts[1], &verts[0]);
            let b = sub(&verts[2], &verts[0]);
            let n = cross(&a, &b);
            for (p, w) in rule.points.iter().zip(&rule.weights) {
                points.push([0, 1, 2].map(|i| verts[0][i] + p[0] * a[i] + p[1] * b[i]));
                weights.push(n.iter().map(|c| w * c).collect());
            }
        }
        Functional::InteriorMoment { component, exponent } => {
            let rule = simplex_rule(dim, CELL_DEGREE);
                        for (p, w) in rule.points.iter().zip(&rule.weights) {
                let mut wv = vec![0.0; ncomp];
                wv[component] = w * monomial_value(&exponent, p);
                points.push(*p);
                weights.push(wv);
            }
        }
        Functional::Mean { exponent } => {
            let rule = simplex_rule(dim, CELL_DEGREE);
            let vol = reference_volume(dim);
            for (p, w) in rule.points.iter().zip(&rule.weights) {
                points.push(*p);
                weights.push(vec![w * monomial_value(&exponent, p) / vol]);
            }
        }
        Functional::ScalarMoment { .. } | Functional::TangentialMoment { .. } => {
            unreachable!("scalar and tangential moments live on edges")
        }
    }
    DofRule { points, weights }
}

/// Applies the exterior derivative appropriate to the proxy pair.
///
/// * Scalar → Tangential: `grad`
/// * Scalar → Normal (2D): `curl u = (∂₂u, −∂₁u)`
/// * Tangential → Density (2D): `rot v = ∂₁v₂ − ∂₂v₁`
/// * Tangential → Normal (3D): `curl`
/// * Normal → Density: `div`
pub fn exterior_derivative(from: Proxy, to: Proxy, dim: usize, v: &[Poly]) -> Result<PolyVec> {
    use Proxy::*;
    Ok(match (from, to, dim) {
        (Scalar, Tangential, _) => grad(&v[0], dim),
        (Scalar, Normal, 2) => curl_scalar_2d(&v[0]),
        (Tangential, Density, 2) => vec![rot_2d(v)],
        (Tangential, Normal, 3) => curl_3d(v),
        (Normal, Density, _) => vec![div(v)],
        _ => {
            return Err(Error::IncompatibleDerivative(format!(
                "no derivative from {from:?} to {to:?} in {dim}D"
            )))
        }
    })
}

/// Reference-element derivative: `DOFs(d φ_j) = M[:, j]`.
///
/// Entries within `1e−12` of an integer are snapped to it so lowest-order
/// incidence matrices are exact.
pub fn local_derivative_matrix(from: &ElementFamily, to: &ElementFamily) -> Result<DenseMatrix> {
    if from.mesh_dim != to.mesh_dim {
        return Err(Error::IncompatibleDerivative(format!(
            "{} and {} live in different dimensions",
            from.name, to.name
        )));
    }
    let dim = from.mesh_dim;
    let mut m = Mat::zeros(to.shape_dim(), from.shape_dim());
    for (j, phi) in from.basis.iter().enumerate() {
        let dphi = exterior_derivative(from.proxy(), to.proxy(), dim, phi)?;
        let dofs = to.apply_dofs_poly(&dphi)?;
        let back = to.combine(&dofs);
        let scale = 1.0 + dphi.iter().map(Poly::max_abs_coeff).fold(0.0, f64::max);
        let err = dphi
            .iter()
            .zip(&back)
            .map(|(a, b)| (a - b).max_abs_coeff())
            .fold(0.0, f64::max);
        if err > 1e-9 * scale {
            return Err(Error::IncompatibleDerivative(format!(
                "{} -> {} (basis function {j}, defect {err:.2e})",
                from.name, to.name
            )));
        }
        for (i, v) in dofs.into_iter().enumerate() {
            let r = v.round();
            m[(i, j)] = if (v - r).abs() < 1e-12 { r } else { v };
        }
    }
    Ok(m)
}
