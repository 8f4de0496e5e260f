//! Eigenvalue and convergence studies built on the core modules.
//!
//! Square-domain eigenproblems are posed on `[0, side]²` (default `side = π`).
//! Zero eigenvalues are those below `zero_threshold · λ_max`; the count is
//! cross-checked against the kernel dimension of the relevant derivative
//! matrix, computed by rank. Observed orders are least-squares slopes of
//! `log err` against `log h` over the last three levels.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::complex::{compute_infsup, InfSup};
use crate::elasticity::{
    manufactured_displacement, manufactured_load, manufactured_stress, solve_mixed_elasticity,
    Lame,
};
use crate::elements::ElementFamily;
use crate::error::{invalid, Error, Result};
use crate::linalg::{
    column_space, generalized_symmetric_eig, generalized_symmetric_eigenvalues,
    norm2, numerical_rank, sparse_solve, symmetrize, DenseMatrix, SparseMatrix, DEFAULT_RANK_TOL,
};
use crate::mesh::{generate_ellipse_mesh, generate_square_mesh, Mesh, Pattern};
use crate::report::{all_pass, fmt_f64, fmt_opt, Check, Tabular};
use crate::spaces::{
    assemble_derivative, assemble_form, assemble_load, assemble_mass, assemble_stiffness,
    build_space, restrict, BoundaryCondition, Coefficient, DiscreteSpace, Op,
};

/// Quadrature degree for loads and errors of smooth data.
const SMOOTH_DEGREE: usize = 10;

/// Exact eigenvalues of the Maxwell cavity on the π-square between 0 and 10.
pub const MAXWELL_REFERENCE: [f64; 10] = [1.0, 1.0, 2.0, 4.0, 4.0, 5.0, 5.0, 8.0, 9.0, 9.0];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshSummary {
    pub domain: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub pattern: Option<Pattern>,
    pub vertices: usize,
    pub edges: usize,
    pub cells: usize,
    pub interior_vertices: usize,
    pub h: f64,
}

impl MeshSummary {
    pub fn of(mesh: &Mesh, n: Option<usize>, pattern: Option<Pattern>) -> Self {
        Self {
            domain: mesh.domain_tag().to_string(),
            n,
            pattern,
            vertices: mesh.num_vertices(),
            edges: mesh.num_entities(1),
            cells: mesh.num_cells(),
            interior_vertices: mesh.num_interior_vertices(),
            h: mesh.max_edge_length(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceValue {
    pub value: f64,
    pub multiplicity: usize,
}

/// A computed eigenvalue (position `index` in the full list) against its
/// reference.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub index: usize,
    pub computed: f64,
    pub reference: f64,
    pub relative_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub problem: String,
    pub family: String,
    pub mesh: MeshSummary,
    /// Full computed spectrum, ascending.
    pub eigenvalues: Vec<f64>,
    pub zero_threshold: f64,
    pub zero_count: usize,
    /// Kernel dimension of the derivative matrix, by rank.
    pub kernel_dimension: usize,
    pub reference: Vec<ReferenceValue>,
    pub comparisons: Vec<Comparison>,
    /// Positive eigenvalues below `window`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub window: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub window_count: Option<usize>,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl SpectrumReport {
    /// Eigenvalues classified as nonzero, ascending.
    pub fn positive(&self) -> &[f64] {
        &self.eigenvalues[self.zero_count..]
    }
}

impl Tabular for SpectrumReport {
    fn header(&self) -> Vec<String> {
        ["index", "eigenvalue", "reference", "relative_error"]
            .map(String::from)
            .to_vec()
    }
    fn rows(&self) -> Vec<Vec<String>> {
        let mut cmp = self.comparisons.iter().peekable();
        self.eigenvalues
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let c = cmp.next_if(|c| c.index == i);
                vec![
                    i.to_string(),
                    fmt_f64(*v),
                    fmt_opt(c.map(|c| c.reference)),
                    fmt_opt(c.map(|c| c.relative_error)),
                ]
            })
            .collect()
    }
}

/// Least-squares slope of `log err` over `log h`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub order: f64,
    /// Root-mean-square residual of the log–log fit.
    pub residual: f64,
    pub levels: usize,
}

/// Fits the last `min(3, len)` points; needs at least two.
pub fn fit_order(h: &[f64], err: &[f64]) -> Result<Fit> {
    if h.len() != err.len() || h.len() < 2 {
        return Err(invalid("order fit needs at least two levels"));
    }
    if err.iter().chain(h).any(|v| !(*v > 0.0)) {
        return Err(invalid("order fit needs positive h and errors"));
    }
    let k = h.len().min(3);
    let x: Vec<f64> = h[h.len() - k..].iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = err[err.len() - k..].iter().map(|v| v.ln()).collect();
    let (mx, my) = (x.iter().sum::<f64>() / k as f64, y.iter().sum::<f64>() / k as f64);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let order = sxy / sxx;
    let ss: f64 = x
        .iter()
        .zip(&y)
        .map(|(a, b)| (b - my - order * (a - mx)).powi(2))
        .sum();
    Ok(Fit {
        order,
        residual: (ss / k as f64).sqrt(),
        levels: k,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceLevel {
    pub n: usize,
    pub h: f64,
    pub err_u: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub err_sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub infsup: Option<InfSup>,
    /// Relative residual of the discrete system.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub equilibrium_residual: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub problem: String,
    pub family: String,
    /// What `err_u` and `err_sigma` measure.
    pub norms: Vec<String>,
    pub levels: Vec<ConvergenceLevel>,
    pub order_u: Fit,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub order_sigma: Option<Fit>,
    /// `(max γ − min γ) / max γ` over the levels.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub infsup_variation: Option<f64>,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl Tabular for ConvergenceReport {
    fn header(&self) -> Vec<String> {
        ["h", "err_u", "err_sigma", "order"].map(String::from).to_vec()
    }
    /// `order` is the observed order of `err_u` against the previous level.
    fn rows(&self) -> Vec<Vec<String>> {
        self.levels
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let order = (i > 0).then(|| {
                    let p = &self.levels[i - 1];
                    (p.err_u / l.err_u).ln() / (p.h / l.h).ln()
                });
                vec![fmt_f64(l.h), fmt_f64(l.err_u), fmt_opt(l.err_sigma), fmt_opt(order)]
            })
            .collect()
    }
}

fn check_levels(ns: &[usize]) -> Result<()> {
    if ns.len() < 2 || ns.windows(2).any(|w| w[0] >= w[1]) || ns[0] == 0 {
        return Err(invalid(format!(
            "mesh sequence {ns:?} must have at least two strictly increasing positive sizes"
        )));
    }
    Ok(())
}

/// Sorted `m² + n²` over `m, n ≥ min` (not both zero), first `count`.
pub fn square_reference(min: usize, count: usize) -> Vec<f64> {
    let k = count + 2;
    let mut v: Vec<f64> = (min..=k)
        .flat_map(|m| (min..=k).map(move |n| (m, n)))
        .filter(|&(m, n)| m + n > 0)
        .map(|(m, n)| (m * m + n * n) as f64)
        .collect();
    v.sort_by(f64::total_cmp);
    v.truncate(count);
    v
}

fn group(values: &[f64]) -> Vec<ReferenceValue> {
    let mut out: Vec<ReferenceValue> = Vec::new();
    for &v in values {
        match out.last_mut() {
            Some(r) if r.value == v => r.multiplicity += 1,
            _ => out.push(ReferenceValue {
                value: v,
                multiplicity: 1,
            }),
        }
    }
    out
}

fn compare(eigs: &[f64], offset: usize, reference: &[f64]) -> Vec<Comparison> {
    eigs.iter()
        .skip(offset)
        .zip(reference)
        .enumerate()
        .map(|(i, (&c, &r))| Comparison {
            index: offset + i,
            computed: c,
            reference: r,
            relative_error: (c - r).abs() / r,
        })
        .collect()
}

fn kernel_dimension(d: &SparseMatrix) -> usize {
    d.ncols() - numerical_rank(&d.to_dense(), DEFAULT_RANK_TOL)
}

fn count_zeros(eigs: &[f64], threshold: f64) -> usize {
    let lmax = eigs.iter().cloned().fold(0.0, f64::max);
    eigs.iter().filter(|&&l| l < threshold * lmax).count()
}

fn family(name: &str) -> ElementFamily {
    ElementFamily::from_name(name).expect("catalog family")
}

/// Domain of a Laplace eigenproblem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Domain {
    Square { side: f64, n: usize, pattern: Pattern },
    Ellipse { rings: usize, aspect: f64 },
}

impl Domain {
    pub fn pi_square(n: usize, pattern: Pattern) -> Self {
        Domain::Square {
            side: PI,
            n,
            pattern,
        }
    }

    pub fn mesh(&self) -> Result<Mesh> {
        match *self {
            Domain::Square { side, n, pattern } => generate_square_mesh(n, pattern, side),
            Domain::Ellipse { rings, aspect } => generate_ellipse_mesh(rings, aspect),
        }
    }

    fn summary(&self, mesh: &Mesh) -> MeshSummary {
        match *self {
            Domain::Square { n, pattern, .. } => MeshSummary::of(mesh, Some(n), Some(pattern)),
            Domain::Ellipse { rings, .. } => MeshSummary::of(mesh, Some(rings), None),
        }
    }
}

/// Dirichlet Laplacian `(K, M)` on the free DOFs of `lagrange{order}`.
pub fn laplace_pencil(mesh: &Arc<Mesh>, order: usize) -> Result<(DiscreteSpace, DenseMatrix, DenseMatrix)> {
    let space = build_space(mesh, &family(&format!("lagrange{order}")), BoundaryCondition::Essential)?;
    let k = restrict(&assemble_stiffness(&space, Op::Grad, &Coefficient::identity())?, &space, &space);
    let m = restrict(&assemble_mass(&space)?, &space, &space);
    Ok((space, k.to_dense(), m.to_dense()))
}

/// Spectrum of the Dirichlet Laplacian; square domains are compared with
/// `(m² + n²)(π/side)²`, `m, n ≥ 1`, over the first `count` eigenvalues.
pub fn laplace_eigenvalues(domain: &Domain, order: usize, count: usize) -> Result<SpectrumReport> {
    let mesh = Arc::new(domain.mesh()?);
    let (space, k, m) = laplace_pencil(&mesh, order)?;
    let eigs = generalized_symmetric_eigenvalues(&k, &m)?;
    let threshold = 1e-8;
    let zero_count = count_zeros(&eigs, threshold);
    let edge = build_space(&mesh, &family(&format!("edge{order}")), BoundaryCondition::Essential)?;
    let grad = restrict(&assemble_derivative(&space, &edge)?, &edge, &space);
    let kernel = kernel_dimension(&grad);
    let mut checks = vec![Check::new(
        "zero_count_matches_kernel",
        zero_count == kernel,
        format!("{zero_count} zero eigenvalues, kernel dimension {kernel}"),
    )];
    let (reference, comparisons) = match *domain {
        Domain::Square { side, .. } => {
            let s = (PI / side).powi(2);
            let r: Vec<f64> = square_reference(1, count.min(eigs.len())).iter().map(|v| v * s).collect();
            let c = compare(&eigs, zero_count, &r);
            let bound = c.iter().all(|c| c.computed >= c.reference * (1.0 - 1e-10));
            checks.push(Check::new(
                "upper_bounds",
                bound,
                "computed eigenvalues bound the exact ones from above",
            ));
            (group(&r), c)
        }
        Domain::Ellipse { .. } => (Vec::new(), Vec::new()),
    };
    Ok(SpectrumReport {
        problem: "laplace".into(),
        family: space.family().name().to_string(),
        mesh: domain.summary(&mesh),
        eigenvalues: eigs,
        zero_threshold: threshold,
        zero_count,
        kernel_dimension: kernel,
        reference,
        comparisons,
        window: None,
        window_count: None,
        pass: all_pass(&checks),
        checks,
    })
}

/// Vector field discretization of the Maxwell cavity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaxwellFamily {
    /// Lowest-order edge elements.
    Edge1,
    /// Two copies of continuous piecewise linears.
    Lagrange1,
}

impl std::str::FromStr for MaxwellFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "edge1" => Ok(MaxwellFamily::Edge1),
            "lagrange1" | "nodal" => Ok(MaxwellFamily::Lagrange1),
            _ => Err(Error::NotInCatalog(format!("Maxwell family '{s}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxwellOptions {
    pub family: MaxwellFamily,
    pub n: usize,
    pub pattern: Pattern,
    pub side: f64,
    pub zero_threshold: f64,
    /// Relative tolerance on the compared positive eigenvalues.
    pub tolerance: f64,
    /// Number of positive eigenvalues compared with the reference.
    pub compare: usize,
    pub window: f64,
    /// Nodal pollution: a reference value counts as matched when some
    /// computed value lies within this relative distance.
    pub match_tolerance: f64,
    /// Interior vertices move by up to `jitter · side / n` per coordinate.
    pub jitter: f64,
    pub seed: u64,
}

impl Default for MaxwellOptions {
    fn default() -> Self {
        Self {
            family: MaxwellFamily::Edge1,
            n: 16,
            pattern: Pattern::Crossed,
            side: PI,
            zero_threshold: 1e-8,
            tolerance: 0.01,
            compare: 10,
            window: 10.0,
            match_tolerance: 0.05,
            jitter: 0.0,
            seed: 0,
        }
    }
}

struct MaxwellSystem {
    mesh: Arc<Mesh>,
    k: DenseMatrix,
    m: DenseMatrix,
    /// Curl into piecewise constants, on the free DOFs.
    curl: SparseMatrix,
    /// Gradients of free potentials (edge elements only).
    grad: Option<SparseMatrix>,
    family: String,
}

fn edge_system(mesh: &Arc<Mesh>) -> Result<MaxwellSystem> {
    let e = build_space(mesh, &family("edge1"), BoundaryCondition::Essential)?;
    let p = build_space(mesh, &family("lagrange1"), BoundaryCondition::Essential)?;
    let q = build_space(mesh, &family("dg0"), BoundaryCondition::None)?;
    let k = restrict(&assemble_stiffness(&e, Op::Rot, &Coefficient::identity())?, &e, &e);
    let m = restrict(&assemble_mass(&e)?, &e, &e);
    Ok(MaxwellSystem {
        mesh: mesh.clone(),
        k: k.to_dense(),
        m: m.to_dense(),
        curl: restrict(&assemble_derivative(&e, &q)?, &q, &e),
        grad: Some(restrict(&assemble_derivative(&p, &e)?, &e, &p)),
        family: "edge1".into(),
    })
}

/// `E = (E₁, E₂)` in two Lagrange copies; `E × n = 0` removes the
/// tangential component at boundary vertices (both at corners).
fn nodal_system(mesh: &Arc<Mesh>, side: f64) -> Result<MaxwellSystem> {
    let s = build_space(mesh, &family("lagrange1"), BoundaryCondition::None)?;
    let q = build_space(mesh, &family("dg0"), BoundaryCondition::None)?;
    let one = Coefficient::identity();
    let form = |a: usize, b: usize| assemble_form(&s, Op::Partial(a), &s, Op::Partial(b), &one);
    // rot E = ∂₁E₂ − ∂₂E₁.
    let (d11, d00, d10) = (form(1, 1)?, form(0, 0)?, form(1, 0)?);
    let nv = mesh.num_vertices();
    let mut kt = Vec::new();
    for (i, j, v) in d11.triplets() {
        kt.push((i, j, v));
    }
    for (i, j, v) in d00.triplets() {
        kt.push((nv + i, nv + j, v));
    }
    for (i, j, v) in d10.triplets() {
        kt.push((i, nv + j, -v));
        kt.push((nv + j, i, -v));
    }
    let k = SparseMatrix::from_triplets(2 * nv, 2 * nv, kt);
    let mass = assemble_mass(&s)?;
    let mut mt = Vec::new();
    for (i, j, v) in mass.triplets() {
        mt.push((i, j, v));
        mt.push((nv + i, nv + j, v));
    }
    let m = SparseMatrix::from_triplets(2 * nv, 2 * nv, mt);
    let mut ct = Vec::new();
    for (i, j, v) in assemble_form(&q, Op::Identity, &s, Op::Partial(1), &one)?.triplets() {
        ct.push((i, j, -v));
    }
    for (i, j, v) in assemble_form(&q, Op::Identity, &s, Op::Partial(0), &one)?.triplets() {
        ct.push((i, nv + j, v));
    }
    let curl = SparseMatrix::from_triplets(mesh.num_cells(), 2 * nv, ct);

    let tol = 1e-12 * side;
    let on = |c: f64| c.abs() <= tol || (c - side).abs() <= tol;
    let mut free = Vec::new();
    for (comp, offset) in [(1usize, 0usize), (0, nv)] {
        // Component `1 − comp` is tangential on the sides where coordinate
        // `comp` is constant.
        for (v, x) in mesh.vertices().iter().enumerate() {
            if !on(x[comp]) {
                free.push(offset + v);
            }
        }
    }
    free.sort_unstable();
    let all: Vec<usize> = (0..mesh.num_cells()).collect();
    Ok(MaxwellSystem {
        mesh: mesh.clone(),
        k: k.select(&free, &free).to_dense(),
        m: m.select(&free, &free).to_dense(),
        curl: curl.select(&all, &free),
        grad: None,
        family: "lagrange1 (vector)".into(),
    })
}

/// Curl-curl spectrum on the square cavity with `E × n = 0`.
///
/// Edge elements must reproduce the kernel (one zero eigenvalue per
/// interior vertex, spanned by gradients) and the positive reference values.
/// For nodal elements the checks instead assert pollution: the number of
/// positive eigenvalues below `window` is off by more than a factor two, and
/// some exact value below `window` has no computed value within
/// `match_tolerance`. For both families the zero count must equal the curl
/// kernel dimension; spurious modes below the threshold fail that check.
pub fn maxwell_eigenvalues(opts: &MaxwellOptions) -> Result<SpectrumReport> {
    let mut mesh = generate_square_mesh(opts.n, opts.pattern, opts.side)?;
    if opts.jitter > 0.0 {
        mesh = mesh.perturb_interior(opts.jitter * opts.side / opts.n as f64, opts.seed)?;
    }
    let mesh = Arc::new(mesh);
    let sys = match opts.family {
        MaxwellFamily::Edge1 => edge_system(&mesh)?,
        MaxwellFamily::Lagrange1 => nodal_system(&mesh, opts.side)?,
    };
    let spectrum = generalized_symmetric_eig(&sys.k, &sys.m)?;
    let eigs = spectrum.eigenvalues.clone();
    let zero_count = count_zeros(&eigs, opts.zero_threshold);
    let kernel = kernel_dimension(&sys.curl);
    let scale = (PI / opts.side).powi(2);
    let reference: Vec<f64> = square_reference(0, opts.compare).iter().map(|v| v * scale).collect();
    let comparisons = compare(&eigs, zero_count, &reference);
    let window_count = eigs[zero_count..].iter().filter(|&&l| l < opts.window).count();
    let mut checks = vec![Check::new(
        "zero_count_matches_kernel",
        zero_count == kernel,
        format!("{zero_count} zero eigenvalues, curl kernel dimension {kernel}"),
    )];
    match opts.family {
        MaxwellFamily::Edge1 => {
            let interior = sys.mesh.num_interior_vertices();
            checks.push(Check::new(
                "zero_count_is_interior_vertices",
                zero_count == interior,
                format!("{zero_count} zero eigenvalues, {interior} interior vertices"),
            ));
            let worst = comparisons.iter().map(|c| c.relative_error).fold(0.0, f64::max);
            checks.push(Check::new(
                "positive_eigenvalues_accurate",
                comparisons.len() == opts.compare && worst <= opts.tolerance,
                format!(
                    "max relative error {:.3e} over {} eigenvalues (tolerance {})",
                    worst,
                    comparisons.len(),
                    fmt_f64(opts.tolerance)
                ),
            ));
            let grad = sys.grad.as_ref().expect("edge system has gradients");
            let residual = kernel_range_residual(&spectrum.eigenvectors, zero_count, grad)?;
            checks.push(Check::new(
                "kernel_in_gradient_range",
                residual <= 1e-8,
                format!("max relative distance {residual:.2e}"),
            ));
        }
        MaxwellFamily::Lagrange1 => {
            let target = opts.compare as f64;
            let wc = window_count as f64;
            checks.push(Check::new(
                "pollution_count",
                wc > 2.0 * target || wc < target / 2.0,
                format!(
                    "{window_count} eigenvalues in (0, {}) against {} exact",
                    fmt_f64(opts.window),
                    opts.compare
                ),
            ));
            let exact = square_reference(0, 64)
                .into_iter()
                .map(|v| v * scale)
                .filter(|&v| v < opts.window)
                .collect::<Vec<_>>();
            let unmatched: Vec<f64> = group(&exact)
                .iter()
                .map(|r| r.value)
                .filter(|&r| {
                    !eigs[zero_count..]
                        .iter()
                        .any(|&l| (l - r).abs() <= opts.match_tolerance * r)
                })
                .collect();
            checks.push(Check::new(
                "unmatched_exact_eigenvalue",
                !unmatched.is_empty(),
                format!(
                    "exact values without a computed value within {}: {unmatched:?}",
                    fmt_f64(opts.match_tolerance)
                ),
            ));
        }
    }
    Ok(SpectrumReport {
        problem: "maxwell".into(),
        family: sys.family,
        mesh: MeshSummary::of(&mesh, Some(opts.n), Some(opts.pattern)),
        eigenvalues: eigs,
        zero_threshold: opts.zero_threshold,
        zero_count,
        kernel_dimension: kernel,
        reference: group(&reference),
        comparisons,
        window: Some(opts.window),
        window_count: Some(window_count),
        pass: all_pass(&checks),
        checks,
    })
}

/// Largest relative distance of the first `k` eigenvectors from `range(D)`.
fn kernel_range_residual(vectors: &DenseMatrix, k: usize, d: &SparseMatrix) -> Result<f64> {
    if k == 0 {
        return Ok(0.0);
    }
    let q = column_space(&d.to_dense(), DEFAULT_RANK_TOL)?;
    let v = DenseMatrix::from_fn(vectors.nrows(), k, |i, j| vectors[(i, j)]);
    let r = &v - &q * (q.transpose() * &v);
    Ok((0..k)
        .map(|j| {
            let nv = norm2(&(0..v.nrows()).map(|i| v[(i, j)]).collect::<Vec<_>>());
            norm2(&(0..r.nrows()).map(|i| r[(i, j)]).collect::<Vec<_>>()) / nv
        })
        .fold(0.0, f64::max))
}

/// Mixed form on `Q_h = edge1` and `P_h = curl Q_h`:
/// `(C M_E⁻¹ Cᵀ) p = λ (Zᵀ M Z) p` with `Z` an orthonormal basis of the
/// range of the curl matrix `D` and `C = Zᵀ M D`.
///
/// The positive Galerkin spectrum is recomputed on the same mesh and
/// compared to `equivalence_tolerance`.
pub fn maxwell_mixed_eigenvalues(
    n: usize,
    pattern: Pattern,
    side: f64,
    equivalence_tolerance: f64,
) -> Result<SpectrumReport> {
    let mesh = Arc::new(generate_square_mesh(n, pattern, side)?);
    let e = build_space(&mesh, &family("edge1"), BoundaryCondition::Essential)?;
    let q = build_space(&mesh, &family("dg0"), BoundaryCondition::None)?;
    let d = restrict(&assemble_derivative(&e, &q)?, &q, &e).to_dense();
    let me = restrict(&assemble_mass(&e)?, &e, &e).to_dense();
    let mq = assemble_mass(&q)?.to_dense();
    let z = column_space(&d, DEFAULT_RANK_TOL)?;
    let c = z.transpose() * &mq * &d;
    let llt = me.llt(faer::Side::Lower).map_err(|_| Error::NotPositiveDefinite)?;
    let x = faer::linalg::solvers::Solve::solve(&llt, c.transpose().to_owned());
    let a = symmetrize(&(&c * &x));
    let b = symmetrize(&(z.transpose() * &mq * &z));
    let eigs = generalized_symmetric_eigenvalues(&a, &b)?;
    let rank = z.ncols();
    let threshold = 1e-8;
    let zero_count = count_zeros(&eigs, threshold);

    let galerkin = maxwell_eigenvalues(&MaxwellOptions {
        n,
        pattern,
        side,
        ..MaxwellOptions::default()
    })?;
    let gp = galerkin.positive();
    let diff = if gp.len() == eigs.len() {
        gp.iter()
            .zip(&eigs)
            .map(|(g, m)| (g - m).abs() / m.abs())
            .fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    let scale = (PI / side).powi(2);
    let reference: Vec<f64> = square_reference(0, 10).iter().map(|v| v * scale).collect();
    let checks = vec![
        Check::new(
            "no_zero_eigenvalues",
            zero_count == 0,
            format!("{zero_count} eigenvalues below threshold"),
        ),
        Check::new(
            "count_equals_curl_rank",
            eigs.len() == rank && rank == e.num_free() - galerkin.kernel_dimension,
            format!("{} eigenvalues, rank {rank}", eigs.len()),
        ),
        Check::new(
            "matches_galerkin",
            diff <= equivalence_tolerance,
            format!(
                "max relative difference {:.2e} over {} positive Galerkin eigenvalues",
                diff,
                gp.len()
            ),
        ),
    ];
    Ok(SpectrumReport {
        problem: "maxwell-mixed".into(),
        family: "edge1/curl(edge1)".into(),
        mesh: MeshSummary::of(&mesh, Some(n), Some(pattern)),
        comparisons: compare(&eigs, zero_count, &reference),
        eigenvalues: eigs,
        zero_threshold: threshold,
        zero_count,
        kernel_dimension: e.num_free() - rank,
        reference: group(&reference),
        window: None,
        window_count: None,
        pass: all_pass(&checks),
        checks,
    })
}

/// Solves `−Δu = f`, `u = 0` on the boundary, with `lagrange{order}`.
pub fn solve_poisson(
    mesh: &Arc<Mesh>,
    order: usize,
    f: &(dyn Fn(&[f64; 3]) -> f64 + Sync),
) -> Result<(DiscreteSpace, Vec<f64>)> {
    let space = build_space(mesh, &family(&format!("lagrange{order}")), BoundaryCondition::Essential)?;
    let k = restrict(&assemble_stiffness(&space, Op::Grad, &Coefficient::identity())?, &space, &space);
    let b = space.restrict_vector(&assemble_load(&space, &|x| vec![f(x)], SMOOTH_DEGREE)?);
    let x = if b.iter().all(|v| *v == 0.0) {
        vec![0.0; b.len()]
    } else {
        sparse_solve(&k, &b)?
    };
    Ok((space.clone(), space.expand(&x)))
}

fn sine(x: &[f64; 3]) -> f64 {
    (PI * x[0]).sin() * (PI * x[1]).sin()
}

fn sine_grad(x: &[f64; 3]) -> [f64; 2] {
    [
        PI * (PI * x[0]).cos() * (PI * x[1]).sin(),
        PI * (PI * x[0]).sin() * (PI * x[1]).cos(),
    ]
}

/// H¹ errors of the Dirichlet Poisson problem with `u = sin πx sin πy` on
/// the unit square.
pub fn galerkin_quasioptimality_demo(
    ns: &[usize],
    order: usize,
    pattern: Pattern,
    min_order: f64,
) -> Result<ConvergenceReport> {
    check_levels(ns)?;
    let mut levels = Vec::new();
    for &n in ns {
        let mesh = Arc::new(generate_square_mesh(n, pattern, 1.0)?);
        let (space, u) = solve_poisson(&mesh, order, &|x| 2.0 * PI * PI * sine(x))?;
        let l2 = space.l2_error(&u, Op::Identity, &|x| vec![sine(x)], SMOOTH_DEGREE)?;
        let h1 = space.l2_error(&u, Op::Grad, &|x| sine_grad(x).to_vec(), SMOOTH_DEGREE)?;
        levels.push(ConvergenceLevel {
            n,
            h: mesh.max_edge_length(),
            err_u: l2.hypot(h1),
            err_sigma: None,
            infsup: None,
            residual: None,
            equilibrium_residual: None,
        });
    }
    let fit = fit_level_order(&levels, |l| l.err_u)?;
    let checks = vec![order_check("order_u", &fit, min_order)];
    Ok(ConvergenceReport {
        problem: "poisson".into(),
        family: format!("lagrange{order}"),
        norms: vec!["H1".into()],
        levels,
        order_u: fit,
        order_sigma: None,
        infsup_variation: None,
        pass: all_pass(&checks),
        checks,
    })
}

fn fit_level_order(levels: &[ConvergenceLevel], err: impl Fn(&ConvergenceLevel) -> f64) -> Result<Fit> {
    let h: Vec<f64> = levels.iter().map(|l| l.h).collect();
    let e: Vec<f64> = levels.iter().map(err).collect();
    fit_order(&h, &e)
}

fn order_check(name: &str, fit: &Fit, min: f64) -> Check {
    Check::new(
        name,
        fit.order >= min,
        format!(
            "observed order {:.4} (fit residual {:.2e}) against minimum {}",
            fit.order,
            fit.residual,
            fmt_f64(min)
        ),
    )
}

/// Error of the smallest Dirichlet eigenvalue on the π-square (exact 2).
pub fn laplace_eigenvalue_convergence(
    ns: &[usize],
    order: usize,
    pattern: Pattern,
    min_order: f64,
) -> Result<ConvergenceReport> {
    check_levels(ns)?;
    let mut levels = Vec::new();
    for &n in ns {
        let mesh = Arc::new(generate_square_mesh(n, pattern, PI)?);
        let (_, k, m) = laplace_pencil(&mesh, order)?;
        let l1 = generalized_symmetric_eigenvalues(&k, &m)?[0];
        levels.push(ConvergenceLevel {
            n,
            h: mesh.max_edge_length(),
            err_u: (l1 - 2.0).abs(),
            err_sigma: None,
            infsup: None,
            residual: None,
            equilibrium_residual: None,
        });
    }
    let fit = fit_level_order(&levels, |l| l.err_u)?;
    let checks = vec![order_check("order_lambda1", &fit, min_order)];
    Ok(ConvergenceReport {
        problem: "laplace-eigenvalue".into(),
        family: format!("lagrange{order}"),
        norms: vec!["|lambda1_h - lambda1|".into()],
        levels,
        order_u: fit,
        order_sigma: None,
        infsup_variation: None,
        pass: all_pass(&checks),
        checks,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedPoissonOptions {
    pub ns: Vec<usize>,
    /// Constant SPD coefficient `C` in `σ = C grad u`.
    pub coefficient: [[f64; 2]; 2],
    pub pattern: Pattern,
    pub min_order: f64,
    pub max_infsup_variation: f64,
    pub infsup: bool,
}

impl Default for MixedPoissonOptions {
    fn default() -> Self {
        Self {
            ns: vec![4, 8, 16, 32],
            coefficient: [[1.0, 0.0], [0.0, 1.0]],
            pattern: Pattern::Uniform,
            min_order: 0.9,
            max_infsup_variation: 0.1,
            infsup: true,
        }
    }
}

fn inverse2(c: &[[f64; 2]; 2]) -> Result<[[f64; 2]; 2]> {
    let det = c[0][0] * c[1][1] - c[0][1] * c[1][0];
    let sym = (c[0][1] - c[1][0]).abs() <= 1e-14 * (c[0][1].abs() + 1.0);
    if !sym || c[0][0] <= 0.0 || det <= 0.0 {
        return Err(Error::NotPositiveDefinite);
    }
    Ok([[c[1][1] / det, -c[0][1] / det], [-c[1][0] / det, c[0][0] / det]])
}

/// `face1 × dg0` for `σ = C grad u`, `−div σ = f`, `u = sin πx sin πy` on
/// the unit square.
pub fn mixed_poisson_convergence(opts: &MixedPoissonOptions) -> Result<ConvergenceReport> {
    check_levels(&opts.ns)?;
    let c = opts.coefficient;
    let ci = inverse2(&c)?;
    let sigma = move |x: &[f64; 3]| {
        let g = sine_grad(x);
        vec![c[0][0] * g[0] + c[0][1] * g[1], c[1][0] * g[0] + c[1][1] * g[1]]
    };
    let f = move |x: &[f64; 3]| {
        let cc = (PI * x[0]).cos() * (PI * x[1]).cos();
        PI * PI * ((c[0][0] + c[1][1]) * sine(x) - (c[0][1] + c[1][0]) * cc)
    };
    let mut levels = Vec::new();
    for &n in &opts.ns {
        let mesh = Arc::new(generate_square_mesh(n, opts.pattern, 1.0)?);
        let s = build_space(&mesh, &family("face1"), BoundaryCondition::None)?;
        let q = build_space(&mesh, &family("dg0"), BoundaryCondition::None)?;
        let cinv = Coefficient::Matrix(ci.iter().map(|r| r.to_vec()).collect());
        let a = assemble_form(&s, Op::Identity, &s, Op::Identity, &cinv)?;
        let b = assemble_form(&q, Op::Identity, &s, Op::Div, &Coefficient::identity())?;
        let load = assemble_load(&q, &|x| vec![f(x)], SMOOTH_DEGREE)?;
        let (ns_, nq) = (s.num_dofs(), q.num_dofs());
        let mut t = a.triplets();
        for (i, j, v) in b.triplets() {
            t.push((ns_ + i, j, v));
            t.push((j, ns_ + i, v));
        }
        let k = SparseMatrix::from_triplets(ns_ + nq, ns_ + nq, t);
        let mut rhs = vec![0.0; ns_];
        rhs.extend(load.iter().map(|v| -v));
        let x = sparse_solve(&k, &rhs)?;
        let r: Vec<f64> = k.matvec(&x).iter().zip(&rhs).map(|(p, q)| p - q).collect();
        let (sh, uh) = x.split_at(ns_);
        let err_sigma = s.l2_error(sh, Op::Identity, &sigma, SMOOTH_DEGREE)?;
        let err_u = q.l2_error(uh, Op::Identity, &|x| vec![sine(x)], SMOOTH_DEGREE)?;
        let infsup = if opts.infsup {
            let one = Coefficient::identity();
            let hdiv = assemble_mass(&s)?.add(&assemble_form(&s, Op::Div, &s, Op::Div, &one)?)?;
            Some(compute_infsup(&b.to_dense(), &hdiv.to_dense(), &assemble_mass(&q)?.to_dense())?)
        } else {
            None
        };
        levels.push(ConvergenceLevel {
            n,
            h: mesh.max_edge_length(),
            err_u,
            err_sigma: Some(err_sigma),
            infsup,
            residual: Some(norm2(&r) / norm2(&rhs)),
            equilibrium_residual: None,
        });
    }
    let order_u = fit_level_order(&levels, |l| l.err_u)?;
    let order_sigma = fit_level_order(&levels, |l| l.err_sigma.unwrap_or(0.0))?;
    let mut checks = vec![
        order_check("order_u", &order_u, opts.min_order),
        order_check("order_sigma", &order_sigma, opts.min_order),
    ];
    let gammas: Vec<f64> = levels.iter().filter_map(|l| l.infsup.map(|g| g.gamma)).collect();
    let infsup_variation = (!gammas.is_empty()).then(|| {
        let hi = gammas.iter().cloned().fold(0.0, f64::max);
        let lo = gammas.iter().cloned().fold(f64::INFINITY, f64::min);
        (hi - lo) / hi
    });
    if let Some(v) = infsup_variation {
        let deflated: usize = levels.iter().filter_map(|l| l.infsup.map(|g| g.deflated)).sum();
        checks.push(Check::new(
            "infsup_stable",
            v < opts.max_infsup_variation && deflated == 0,
            format!("gamma varies by {v:.4}, {deflated} deflated eigenvalues"),
        ));
    }
    Ok(ConvergenceReport {
        problem: "mixed-poisson".into(),
        family: "face1/dg0".into(),
        norms: vec!["L2".into(), "L2".into()],
        levels,
        order_u,
        order_sigma: Some(order_sigma),
        infsup_variation,
        pass: all_pass(&checks),
        checks,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ElasticityOptions {
    pub ns: Vec<usize>,
    pub lame: Lame,
    pub pattern: Pattern,
    pub min_order: f64,
    pub residual_tolerance: f64,
    pub equilibrium_tolerance: f64,
}

impl Default for ElasticityOptions {
    fn default() -> Self {
        Self {
            ns: vec![4, 8, 16],
            lame: Lame {
                lambda: 1.0,
                mu: 1.0,
            },
            pattern: Pattern::Uniform,
            min_order: 1.0,
            residual_tolerance: 1e-8,
            equilibrium_tolerance: 1e-9,
        }
    }
}

/// AW stresses with discontinuous `P₁` displacements for
/// `u = (sin πx sin πy, 0)` on the unit square.
pub fn mixed_elasticity_convergence(opts: &ElasticityOptions) -> Result<ConvergenceReport> {
    check_levels(&opts.ns)?;
    let lame = Lame::new(opts.lame.lambda, opts.lame.mu)?;
    let mut levels = Vec::new();
    for &n in &opts.ns {
        let mesh = Arc::new(generate_square_mesh(n, opts.pattern, 1.0)?);
        let sol = solve_mixed_elasticity(&mesh, lame, &|x| manufactured_load(&lame, x))?;
        levels.push(ConvergenceLevel {
            n,
            h: mesh.max_edge_length(),
            err_u: sol.space.displacement_error(&sol.displacement, &manufactured_displacement),
            err_sigma: Some(sol.space.stress_error(&sol.stress, &|x| manufactured_stress(&lame, x))),
            infsup: None,
            residual: Some(sol.residual),
            equilibrium_residual: Some(sol.equilibrium_residual),
        });
    }
    let order_u = fit_level_order(&levels, |l| l.err_u)?;
    let order_sigma = fit_level_order(&levels, |l| l.err_sigma.unwrap_or(0.0))?;
    let worst_res = levels.iter().filter_map(|l| l.residual).fold(0.0, f64::max);
    let worst_eq = levels.iter().filter_map(|l| l.equilibrium_residual).fold(0.0, f64::max);
    let checks = vec![
        order_check("order_u", &order_u, opts.min_order),
        order_check("order_sigma", &order_sigma, opts.min_order),
        Check::new(
            "solver_residual",
            worst_res <= opts.residual_tolerance,
            format!("max relative residual {worst_res:.2e}"),
        ),
        Check::new(
            "equilibrium",
            worst_eq <= opts.equilibrium_tolerance,
            format!("max |moment of div σ_h + f| {worst_eq:.2e}"),
        ),
    ];
    Ok(ConvergenceReport {
        problem: "elasticity".into(),
        family: "arnold-winther/dg1".into(),
        norms: vec!["L2".into(), "L2".into()],
        levels,
        order_u,
        order_sigma: Some(order_sigma),
        infsup_variation: None,
        pass: all_pass(&checks),
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_lists() {
        assert_eq!(square_reference(0, 10), MAXWELL_REFERENCE.to_vec());
        assert_eq!(square_reference(1, 6), vec![2.0, 5.0, 5.0, 8.0, 10.0, 10.0]);
        let g = group(&MAXWELL_REFERENCE);
        assert_eq!(g.len(), 6);
        assert_eq!(g[0], ReferenceValue { value: 1.0, multiplicity: 2 });
    }

    #[test]
    fn order_fit() {
        let h = [0.5, 0.25, 0.125, 0.0625];
        let e: Vec<f64> = h.iter().map(|v: &f64| 3.0 * v.powi(2)).collect();
        let f = fit_order(&h, &e).unwrap();
        assert!((f.order - 2.0).abs() < 1e-12);
        assert!(f.residual < 1e-12);
        assert_eq!(f.levels, 3);
        assert!(fit_order(&h[..1], &e[..1]).is_err());
    }

    #[test]
    fn level_sequences_are_validated() {
        assert!(check_levels(&[4, 8]).is_ok());
        assert!(check_levels(&[8, 4]).is_err());
        assert!(check_levels(&[4]).is_err());
    }
}
