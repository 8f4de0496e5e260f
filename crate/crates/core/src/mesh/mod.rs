//! Oriented simplicial meshes in 2D and 3D.
//!
//! Every k-simplex is stored as a strictly increasing tuple of vertex
//! indices. The sub-entity tables are rebuilt from the top-dimensional cells
//! and sorted lexicographically, so two meshes with the same cells always
//! carry identical numbering.

mod generate;
mod io;

pub use generate::{
    generate_annulus_mesh, generate_annulus_mesh_with_rings, generate_cube_mesh,
    generate_disk_mesh, generate_ellipse_mesh, generate_square_mesh, Pattern,
};
pub use io::{read_mesh, write_mesh};

use std::collections::HashMap;

use crate::error::{invalid, Result};

#[derive(Clone, Debug)]
pub struct Mesh {
    dim: usize,
    vertices: Vec<[f64; 3]>,
    /// `entities[k][i]`: sorted vertex tuple of the i-th k-simplex.
    entities: Vec<Vec<Vec<usize>>>,
    /// `cell_entities[k][c]`: global indices of the local k-faces of cell `c`,
    /// in the order given by [`local_subsimplices`].
    cell_entities: Vec<Vec<Vec<usize>>>,
    /// `boundary[k][i]`: whether k-simplex `i` lies on the boundary.
    boundary: Vec<Vec<bool>>,
    domain_tag: String,
}

impl Mesh {
    /// Builds a mesh from vertex coordinates and top-dimensional simplices.
    ///
    /// Simplices are sorted into canonical (increasing) vertex order and the
    /// cell list itself is sorted lexicographically.
    pub fn from_simplices(
        dim: usize,
        vertices: Vec<[f64; 3]>,
        simplices: Vec<Vec<usize>>,
        domain_tag: impl Into<String>,
    ) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(invalid(format!("mesh dimension must be 2 or 3, got {dim}")));
        }
        if simplices.is_empty() {
            return Err(invalid("no simplices"));
        }
        for v in &vertices {
            if v.iter().any(|c| !c.is_finite()) {
                return Err(invalid("non-finite vertex coordinate"));
            }
        }
        let mut cells = Vec::with_capacity(simplices.len());
        for (i, s) in simplices.into_iter().enumerate() {
            cells.push(canonical_simplex(dim, &s, vertices.len()).map_err(|m| {
                invalid(format!("simplex {i}: {m}"))
            })?);
        }
        cells.sort();
        if let Some(w) = cells.windows(2).find(|w| w[0] == w[1]) {
            return Err(invalid(format!("duplicate simplex {:?}", w[0])));
        }

        let mut entities: Vec<Vec<Vec<usize>>> = vec![Vec::new(); dim + 1];
        entities[0] = (0..vertices.len()).map(|i| vec![i]).collect();
        for k in 1..dim {
            let mut all: Vec<Vec<usize>> = Vec::new();
            for c in &cells {
                for local in local_subsimplices(dim, k) {
                    all.push(local.iter().map(|&l| c[l]).collect());
                }
            }
            all.sort();
            all.dedup();
            entities[k] = all;
        }
        entities[dim] = cells;

        let index: Vec<HashMap<&[usize], usize>> = entities
            .iter()
            .map(|es| es.iter().enumerate().map(|(i, e)| (e.as_slice(), i)).collect())
            .collect();
        let mut cell_entities: Vec<Vec<Vec<usize>>> = vec![Vec::new(); dim + 1];
        for k in 0..=dim {
            let locals = local_subsimplices(dim, k);
            cell_entities[k] = entities[dim]
                .iter()
                .map(|c| {
                    locals
                        .iter()
                        .map(|local| {
                            let key: Vec<usize> = local.iter().map(|&l| c[l]).collect();
                            index[k][key.as_slice()]
                        })
                        .collect()
                })
                .collect();
        }

        // Facet-cell incidence decides the boundary.
        let nfacets = entities[dim - 1].len();
        let mut facet_cells = vec![0usize; nfacets];
        for cf in &cell_entities[dim - 1] {
            for &f in cf {
                facet_cells[f] += 1;
            }
        }
        if let Some(f) = facet_cells.iter().position(|&n| n > 2) {
            return Err(invalid(format!(
                "non-manifold mesh: facet {:?} shared by {} cells",
                entities[dim - 1][f], facet_cells[f]
            )));
        }
        let mut boundary: Vec<Vec<bool>> = entities.iter().map(|e| vec![false; e.len()]).collect();
        for f in 0..nfacets {
            if facet_cells[f] == 1 {
                boundary[dim - 1][f] = true;
                let verts = &entities[dim - 1][f];
                for k in 0..dim - 1 {
                    for local in local_subsimplices(dim - 1, k) {
                        let key: Vec<usize> = local.iter().map(|&l| verts[l]).collect();
                        boundary[k][index[k][key.as_slice()]] = true;
                    }
                }
            }
        }
        drop(index);

        Ok(Self {
            dim,
            vertices,
            entities,
            cell_entities,
            boundary,
            domain_tag: domain_tag.into(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain_tag(&self) -> &str {
        &self.domain_tag
    }

    pub fn vertices(&self) -> &[[f64; 3]] {
        &self.vertices
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_cells(&self) -> usize {
        self.entities[self.dim].len()
    }

    pub fn num_entities(&self, k: usize) -> usize {
        self.entities[k].len()
    }

    /// Entity counts `[V, E, (F,) T]`.
    pub fn entity_counts(&self) -> Vec<usize> {
        self.entities.iter().map(Vec::len).collect()
    }

    pub fn entities(&self, k: usize) -> &[Vec<usize>] {
        &self.entities[k]
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.entities[self.dim]
    }

    /// Global indices of the local k-faces of `cell`.
    pub fn cell_entities(&self, k: usize, cell: usize) -> &[usize] {
        &self.cell_entities[k][cell]
    }

    pub fn is_boundary(&self, k: usize, entity: usize) -> bool {
        self.boundary[k][entity]
    }

    pub fn boundary_flags(&self, k: usize) -> &[bool] {
        &self.boundary[k]
    }

    pub fn num_boundary(&self, k: usize) -> usize {
        self.boundary[k].iter().filter(|b| **b).count()
    }

    pub fn num_interior_vertices(&self) -> usize {
        self.num_vertices() - self.num_boundary(0)
    }

    /// Alternating sum of entity counts.
    pub fn euler_characteristic(&self) -> i64 {
        self.entities
            .iter()
            .enumerate()
            .map(|(k, e)| if k % 2 == 0 { e.len() as i64 } else { -(e.len() as i64) })
            .sum()
    }

    /// Coordinates of the vertices of `cell`, in canonical order.
    pub fn cell_coordinates(&self, cell: usize) -> Vec<[f64; 3]> {
        self.cells()[cell].iter().map(|&v| self.vertices[v]).collect()
    }

    /// Unsigned measure of a cell.
    pub fn cell_volume(&self, cell: usize) -> f64 {
        let p = self.cell_coordinates(cell);
        simplex_volume(&p, self.dim)
    }

    /// Largest edge length over all cells.
    pub fn max_edge_length(&self) -> f64 {
        self.entities[1]
            .iter()
            .map(|e| distance(&self.vertices[e[0]], &self.vertices[e[1]]))
            .fold(0.0, f64::max)
    }

    /// Signed coboundary matrix mapping k-entities to (k+1)-entities, as
    /// dense integer rows. Entry `(−1)^i` for the face omitting local vertex `i`.
    pub fn coboundary(&self, k: usize) -> Vec<Vec<i64>> {
        assert!(k < self.dim);
        let index: HashMap<&[usize], usize> = self.entities[k]
            .iter()
            .enumerate()
            .map(|(i, e)| (e.as_slice(), i))
            .collect();
        let ncols = self.entities[k].len();
        self.entities[k + 1]
            .iter()
            .map(|s| {
                let mut row = vec![0i64; ncols];
                for omit in 0..s.len() {
                    let face: Vec<usize> = s
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| *i != omit)
                        .map(|(_, &v)| v)
                        .collect();
                    row[index[face.as_slice()]] = if omit % 2 == 0 { 1 } else { -1 };
                }
                row
            })
            .collect()
    }

    /// Number of (k+1)-simplices containing each k-simplex.
    pub fn cofaces_count(&self, k: usize) -> Vec<usize> {
        assert!(k < self.dim);
        let index: HashMap<&[usize], usize> = self.entities[k]
            .iter()
            .enumerate()
            .map(|(i, e)| (e.as_slice(), i))
            .collect();
        let mut counts = vec![0usize; self.entities[k].len()];
        for s in &self.entities[k + 1] {
            for local in local_subsimplices(k + 1, k) {
                let key: Vec<usize> = local.iter().map(|&l| s[l]).collect();
                counts[index[key.as_slice()]] += 1;
            }
        }
        counts
    }

    /// Applies `f` to every vertex coordinate.
    pub fn map_vertices(&self, f: impl Fn([f64; 3]) -> [f64; 3], tag: &str) -> Result<Self> {
        let vertices = self.vertices.iter().map(|&v| f(v)).collect();
        Self::from_simplices(self.dim, vertices, self.cells().to_vec(), tag)
    }

    /// Moves every interior vertex by a uniform random offset of at most
    /// `amplitude` per coordinate; boundary vertices stay fixed. The
    /// connectivity is unchanged and the result is checked for inverted or
    /// degenerate cells.
    pub fn perturb_interior(&self, amplitude: f64, seed: u64) -> Result<Self> {
        use rand::{Rng, SeedableRng};
        if !(amplitude >= 0.0 && amplitude.is_finite()) {
            return Err(invalid(format!("perturbation amplitude must be finite and non-negative, got {amplitude}")));
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut vertices = self.vertices.clone();
        for (i, v) in vertices.iter_mut().enumerate() {
            if self.boundary[0][i] {
                continue;
            }
            for c in v.iter_mut().take(self.dim) {
                *c += amplitude * rng.random_range(-1.0..=1.0);
            }
        }
        let before: Vec<f64> = (0..self.num_cells()).map(|c| signed_simplex_volume(&self.cell_coordinates(c), self.dim)).collect();
        let out = Self::from_simplices(self.dim, vertices, self.cells().to_vec(), self.domain_tag.clone())?;
        for (c, v0) in before.iter().enumerate() {
            let v1 = signed_simplex_volume(&out.cell_coordinates(c), out.dim);
            if v1 * v0.signum() <= 1e-3 * v0.abs() {
                return Err(invalid(format!("perturbation of amplitude {amplitude} inverts cell {c}")));
            }
        }
        Ok(out)
    }
}

fn canonical_simplex(
    dim: usize,
    s: &[usize],
    nverts: usize,
) -> std::result::Result<Vec<usize>, String> {
    if s.len() != dim + 1 {
        return Err(format!("expected {} vertices, got {}", dim + 1, s.len()));
    }
    if let Some(&v) = s.iter().find(|&&v| v >= nverts) {
        return Err(format!("vertex index out of range: {v} of {nverts}"));
    }
    let mut c = s.to_vec();
    c.sort_unstable();
    if c.windows(2).any(|w| w[0] == w[1]) {
        return Err("repeated vertex".into());
    }
    Ok(c)
}

/// Local k-faces of a `dim`-simplex as sorted local vertex tuples, in
/// lexicographic order. For a triangle's edges: `(0,1), (0,2), (1,2)`.
pub fn local_subsimplices(dim: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, dim + 1, k + 1, &mut Vec::new(), &mut out);
    out
}

/// Parity (+1 / −1) of the permutation taking `from` to `to`. Both slices
/// must hold the same distinct values.
pub fn permutation_parity(from: &[usize], to: &[usize]) -> i8 {
    let mut perm: Vec<usize> = from
        .iter()
        .map(|v| to.iter().position(|w| w == v).expect("not a permutation"))
        .collect();
    let mut sign = 1i8;
    for i in 0..perm.len() {
        while perm[i] != i {
            let j = perm[i];
            perm.swap(i, j);
            sign = -sign;
        }
    }
    sign
}

pub(crate) fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

pub(crate) fn simplex_volume(p: &[[f64; 3]], dim: usize) -> f64 {
    signed_simplex_volume(p, dim).abs()
}

/// Positive for counter-clockwise (right-handed) vertex order.
pub(crate) fn signed_simplex_volume(p: &[[f64; 3]], dim: usize) -> f64 {
    let d = |i: usize, j: usize| p[i][j] - p[0][j];
    match dim {
        2 => 0.5 * (d(1, 0) * d(2, 1) - d(1, 1) * d(2, 0)),
        3 => {
            let det = d(1, 0) * (d(2, 1) * d(3, 2) - d(2, 2) * d(3, 1))
                - d(1, 1) * (d(2, 0) * d(3, 2) - d(2, 2) * d(3, 0))
                + d(1, 2) * (d(2, 0) * d(3, 1) - d(2, 1) * d(3, 0));
            det / 6.0
        }
        _ => unreachable!(),
    }
}
