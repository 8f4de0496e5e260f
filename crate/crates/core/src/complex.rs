//! Discrete de Rham complexes: exactness, commuting projections and the
//! Brezzi stability constants of the last pair.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::elements::{exterior_derivative, ElementFamily, FamilyKind};
use crate::error::{Error, Result};
use crate::linalg::{
    generalized_symmetric_eigenvalues, integer_rank, null_space, numerical_rank,
    symmetrize, DenseMatrix, SparseMatrix, DEFAULT_RANK_TOL,
};
use crate::mesh::Mesh;
use crate::par::{map_indexed, Execution};
use crate::poly::{monomials, Poly, PolyVec};
use crate::spaces::{
    assemble_derivative_with, canonical_projection, BoundaryCondition, DiscreteSpace,
};

/// Which vector family carries the 1-forms of a 2D complex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant2d {
    /// `lagrange_r → edge_r → dg_{r−1}` (grad, rot).
    Edge,
    /// `lagrange_r → face_r → dg_{r−1}` (curl, div).
    Face,
}

#[derive(Clone, Debug)]
pub struct DiscreteComplex {
    spaces: Vec<DiscreteSpace>,
    derivatives: Vec<SparseMatrix>,
}

impl DiscreteComplex {
    /// Assembles the derivatives between consecutive spaces and checks
    /// `D_{k+1} D_k = 0`.
    pub fn new(spaces: Vec<DiscreteSpace>) -> Result<Self> {
        Self::new_with(spaces, Execution::default())
    }

    pub fn new_with(spaces: Vec<DiscreteSpace>, exec: Execution) -> Result<Self> {
        if spaces.len() < 2 {
            return Err(Error::NotAComplex("a complex needs at least two spaces".into()));
        }
        let derivatives = spaces
            .windows(2)
            .map(|w| assemble_derivative_with(&w[0], &w[1], exec))
            .collect::<Result<Vec<_>>>()?;
        for k in 1..derivatives.len() {
            let dd = derivatives[k].matmul(&derivatives[k - 1])?;
            let scale = derivatives[k].max_abs() * derivatives[k - 1].max_abs();
            if dd.max_abs() > 1e-10 * scale.max(1.0) {
                return Err(Error::NotAComplex(format!(
                    "D{k}·D{} has entries of size {:.3e}",
                    k - 1,
                    dd.max_abs()
                )));
            }
        }
        Ok(Self { spaces, derivatives })
    }

    /// Polynomial de Rham complex of order `r` on a triangle mesh.
    pub fn de_rham_2d(
        mesh: &Arc<Mesh>,
        variant: Variant2d,
        order: usize,
        bc: BoundaryCondition,
    ) -> Result<Self> {
        let mid = match variant {
            Variant2d::Edge => FamilyKind::Edge,
            Variant2d::Face => FamilyKind::Face,
        };
        if order == 0 {
            return Err(Error::NotInCatalog("order 0 complex".into()));
        }
        let fams = [
            ElementFamily::new(FamilyKind::Lagrange, 2, order)?,
            ElementFamily::new(mid, 2, order)?,
            ElementFamily::new(FamilyKind::Discontinuous, 2, order - 1)?,
        ];
        Self::from_families(mesh, &fams, bc)
    }

    /// Lowest-order Whitney complex on a tetrahedral mesh.
    pub fn whitney_3d(mesh: &Arc<Mesh>, bc: BoundaryCondition) -> Result<Self> {
        let fams = [
            ElementFamily::new(FamilyKind::Lagrange, 3, 1)?,
            ElementFamily::new(FamilyKind::Edge, 3, 1)?,
            ElementFamily::new(FamilyKind::Face, 3, 1)?,
            ElementFamily::new(FamilyKind::Discontinuous, 3, 0)?,
        ];
        Self::from_families(mesh, &fams, bc)
    }

    /// Edge-variant complex in 2D, Whitney complex in 3D.
    pub fn de_rham(mesh: &Arc<Mesh>, order: usize, bc: BoundaryCondition) -> Result<Self> {
        match mesh.dim() {
            2 => Self::de_rham_2d(mesh, Variant2d::Edge, order, bc),
            _ if order == 1 => Self::whitney_3d(mesh, bc),
            _ => Err(Error::NotInCatalog(format!("3D complex of order {order}"))),
        }
    }

    fn from_families(mesh: &Arc<Mesh>, fams: &[ElementFamily], bc: BoundaryCondition) -> Result<Self> {
        let spaces = fams
            .iter()
            .map(|f| DiscreteSpace::new(mesh.clone(), Arc::new(f.clone()), bc))
            .collect::<Result<Vec<_>>>()?;
        Self::new(spaces)
    }

    pub fn spaces(&self) -> &[DiscreteSpace] {
        &self.spaces
    }

    pub fn derivatives(&self) -> &[SparseMatrix] {
        &self.derivatives
    }

    pub fn len(&self) -> usize {
        self.spaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spaces.is_empty()
    }

    /// `D_k` restricted to the free DOFs of both spaces.
    pub fn free_derivative(&self, k: usize) -> SparseMatrix {
        self.derivatives[k].select(self.spaces[k + 1].free_dofs(), self.spaces[k].free_dofs())
    }

    /// Whether every family is lowest order (integer incidence structure).
    pub fn is_lowest_order(&self) -> bool {
        self.spaces[0].family().order() == 1 && self.spaces.iter().skip(1).all(|s| match s.family().kind() {
            FamilyKind::Discontinuous => s.family().order() == 0,
            _ => s.family().order() == 1,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelReport {
    pub dim: usize,
    pub rank: usize,
    pub kernel: usize,
    pub cohomology: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexReport {
    pub levels: Vec<LevelReport>,
    pub alternating_sum: i64,
    pub expected_betti: Vec<i64>,
    pub pass: bool,
    /// Exact integer ranks of the normalized lowest-order derivative
    /// matrices agree with the floating-point ranks (absent above lowest
    /// order).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub integer_rank_agrees: Option<bool>,
    /// Lowest-order derivatives without boundary conditions coincide with
    /// the mesh coboundary matrices up to per-row signs.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub matches_coboundary: Option<bool>,
}

/// Rows scaled by their largest magnitude and rounded, if every entry is
/// then within `1e−9` of an integer.
pub fn integer_pattern(d: &SparseMatrix) -> Option<Vec<Vec<i64>>> {
    let mut rows = vec![vec![0i64; d.ncols()]; d.nrows()];
    for (i, row) in rows.iter_mut().enumerate() {
        let m = d.row(i).fold(0.0f64, |a, (_, v)| a.max(v.abs()));
        if m == 0.0 {
            continue;
        }
        for (j, v) in d.row(i) {
            let x = v / m;
            let r = x.round();
            if (x - r).abs() > 1e-9 {
                return None;
            }
            row[j] = r as i64;
        }
    }
    Some(rows)
}

/// Ranks, kernels and cohomology of the free-DOF complex.
///
/// `expected_betti[k]` is the expected dimension of `ker D_k / im D_{k−1}`
/// (for the full complex on a disk: `[1, 0, 0]`).
pub fn check_exactness(complex: &DiscreteComplex, expected_betti: &[i64]) -> Result<ComplexReport> {
    let n = complex.len();
    if expected_betti.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "complex has {n} levels, {} Betti numbers given",
            expected_betti.len()
        )));
    }
    let free: Vec<SparseMatrix> = (0..n - 1).map(|k| complex.free_derivative(k)).collect();
    let ranks: Vec<usize> = free
        .iter()
        .map(|d| numerical_rank(&d.to_dense(), DEFAULT_RANK_TOL))
        .chain(std::iter::once(0))
        .collect();

    let (mut integer_ok, mut cobdry_ok) = (None, None);
    if complex.is_lowest_order() {
        let mut agree = true;
        for (d, &r) in free.iter().zip(&ranks) {
            match integer_pattern(d).and_then(|p| integer_rank(&p)) {
                Some(ir) => agree &= ir == r,
                None => agree = false,
            }
        }
        integer_ok = Some(agree);
        if complex.spaces.iter().all(|s| s.num_free() == s.num_dofs()) {
            let mesh = complex.spaces[0].mesh();
            let mut same = true;
            for (k, d) in complex.derivatives.iter().enumerate() {
                let cob = mesh.coboundary(k);
                match integer_pattern(d) {
                    Some(p) => {
                        for (a, b) in p.iter().zip(&cob) {
                            let pos = a == b;
                            let neg = a.iter().zip(b).all(|(x, y)| *x == -*y);
                            same &= pos || neg;
                        }
                    }
                    None => same = false,
                }
            }
            cobdry_ok = Some(same);
        }
    }

    let mut levels = Vec::with_capacity(n);
    let mut alternating_sum = 0i64;
    for k in 0..n {
        let dim = complex.spaces[k].num_free();
        let kernel = dim - ranks[k];
        let image_in = if k == 0 { 0 } else { ranks[k - 1] };
        let cohomology = kernel as i64 - image_in as i64;
        alternating_sum += if k % 2 == 0 { dim as i64 } else { -(dim as i64) };
        levels.push(LevelReport {
            dim,
            rank: ranks[k],
            kernel,
            cohomology,
        });
    }
    let pass = levels
        .iter()
        .zip(expected_betti)
        .all(|(l, b)| l.cohomology == *b)
        && integer_ok.unwrap_or(true)
        && cobdry_ok.unwrap_or(true);
    Ok(ComplexReport {
        levels,
        alternating_sum,
        expected_betti: expected_betti.to_vec(),
        pass,
        integer_rank_agrees: integer_ok,
        matches_coboundary: cobdry_ok,
    })
}

/// All monomials of degree `<= max_degree` in every component slot.
pub fn polynomial_battery(dim: usize, components: usize, max_degree: usize) -> Vec<PolyVec> {
    let mut out = Vec::new();
    for e in monomials(dim, max_degree) {
        for c in 0..components {
            let mut v = vec![Poly::zero(); components];
            v[c] = Poly::monomial(e, 1.0);
            out.push(v);
        }
    }
    out
}

/// Degree of the fixed commuting-diagram battery.
pub const BATTERY_DEGREE: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SquareResidual {
    pub from: String,
    pub to: String,
    pub fields: usize,
    pub max_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommutingReport {
    pub squares: Vec<SquareResidual>,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// `max |D Π_k u − Π_{k+1} d u|` for one square over the given fields.
pub fn commuting_residual(
    from: &DiscreteSpace,
    to: &DiscreteSpace,
    d: &SparseMatrix,
    fields: &[PolyVec],
    exec: Execution,
) -> Result<f64> {
    let dim = from.mesh().dim();
    let res = map_indexed(exec, fields.len(), |i| -> Result<f64> {
        let u = &fields[i];
        let du = exterior_derivative(from.family().proxy(), to.family().proxy(), dim, u)?;
        let pu = canonical_projection(from, &|x: &[f64; 3]| u.iter().map(|p| p.eval(x)).collect())?;
        let pdu = canonical_projection(to, &|x: &[f64; 3]| du.iter().map(|p| p.eval(x)).collect())?;
        let dpu = d.matvec(&pu);
        Ok(dpu.iter().zip(&pdu).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
    });
    res.into_iter().try_fold(0.0f64, |m, r| Ok(m.max(r?)))
}

/// Runs the degree-≤3 monomial battery through every square of the complex.
pub fn check_commuting(complex: &DiscreteComplex, tolerance: f64) -> Result<CommutingReport> {
    check_commuting_with(complex, BATTERY_DEGREE, tolerance, Execution::default())
}

pub fn check_commuting_with(
    complex: &DiscreteComplex,
    degree: usize,
    tolerance: f64,
    exec: Execution,
) -> Result<CommutingReport> {
    let dim = complex.spaces[0].mesh().dim();
    let mut squares = Vec::new();
    for k in 0..complex.len() - 1 {
        let (from, to) = (&complex.spaces[k], &complex.spaces[k + 1]);
        let battery = polynomial_battery(dim, from.family().value_size(), degree);
        let r = commuting_residual(from, to, &complex.derivatives[k], &battery, exec)?;
        squares.push(SquareResidual {
            from: from.family().name().to_string(),
            to: to.family().name().to_string(),
            fields: battery.len(),
            max_residual: r,
        });
    }
    let max_residual = squares.iter().map(|s| s.max_residual).fold(0.0, f64::max);
    Ok(CommutingReport {
        squares,
        max_residual,
        tolerance,
        pass: max_residual <= tolerance,
    })
}

/// Outcome of the (S2) eigenproblem.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfSup {
    /// `√λ_min` over the range of `B`.
    pub gamma: f64,
    /// `√λ_min` over all of `V_h` (zero when `B` is not onto).
    pub gamma_unrestricted: f64,
    /// Eigenvalues deflated as belonging to `ker Bᵀ`.
    pub deflated: usize,
}

/// Relative threshold below which (S2) eigenvalues are deflated.
pub const INFSUP_DEFLATION: f64 = 1e-10;

/// `γ² = λ_min` of `(B a⁻¹ Bᵀ) q = λ M_V q` restricted to `range(B)`.
pub fn compute_infsup(b: &DenseMatrix, a_form: &DenseMatrix, mass_v: &DenseMatrix) -> Result<InfSup> {
    let (m, n) = (b.nrows(), b.ncols());
    if a_form.nrows() != n || a_form.ncols() != n || mass_v.nrows() != m || mass_v.ncols() != m {
        return Err(Error::DimensionMismatch(format!(
            "B is {m}x{n}, a_form {}x{}, mass_V {}x{}",
            a_form.nrows(),
            a_form.ncols(),
            mass_v.nrows(),
            mass_v.ncols()
        )));
    }
    let llt = a_form
        .llt(faer::Side::Lower)
        .map_err(|_| Error::NotPositiveDefinite)?;
    let x = faer::linalg::solvers::Solve::solve(&llt, b.transpose().to_owned());
    let s = symmetrize(&(b * &x));
    let lam = generalized_symmetric_eigenvalues(&s, mass_v)?;
    let lmax = lam.iter().cloned().fold(0.0, f64::max);
    let kept: Vec<f64> = lam
        .iter()
        .cloned()
        .filter(|&l| l > INFSUP_DEFLATION * lmax)
        .collect();
    let gamma = kept.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(InfSup {
        gamma: if kept.is_empty() { 0.0 } else { gamma.sqrt() },
        gamma_unrestricted: lam.first().map_or(0.0, |l| l.max(0.0).sqrt()),
        deflated: lam.len() - kept.len(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct S1Report {
    /// `ker B ⊆ ker div`: the discrete kernel is exactly divergence free.
    pub kernel_divergence_free: bool,
    /// `min a(τ,τ) / ‖τ‖²_{H(div)}` over `ker B`.
    pub gamma1: f64,
    pub holds: bool,
}

/// (S1): coercivity of `a_form` on `ker B` in the norm of `h_form`.
///
/// `div` is the derivative matrix of the source space into any space
/// containing its divergence; kernel inclusion is decided by comparing
/// `rank [B; div]` with `rank B`.
pub fn check_s1(
    b: &DenseMatrix,
    div: &DenseMatrix,
    a_form: &DenseMatrix,
    h_form: &DenseMatrix,
) -> Result<S1Report> {
    let n = b.ncols();
    if div.ncols() != n || a_form.nrows() != n || h_form.nrows() != n {
        return Err(Error::DimensionMismatch("check_s1 operand sizes".into()));
    }
    let stacked = DenseMatrix::from_fn(b.nrows() + div.nrows(), n, |i, j| {
        if i < b.nrows() {
            b[(i, j)]
        } else {
            div[(i - b.nrows(), j)]
        }
    });
    let kernel_divergence_free =
        numerical_rank(&stacked, DEFAULT_RANK_TOL) == numerical_rank(b, DEFAULT_RANK_TOL);
    let z = null_space(b, DEFAULT_RANK_TOL)?;
    let gamma1 = if z.ncols() == 0 {
        f64::INFINITY
    } else {
        let az = symmetrize(&(z.transpose() * a_form * &z));
        let hz = symmetrize(&(z.transpose() * h_form * &z));
        generalized_symmetric_eigenvalues(&az, &hz)?[0]
    };
    Ok(S1Report {
        kernel_divergence_free,
        gamma1,
        holds: gamma1 > 1e-10,
    })
}
