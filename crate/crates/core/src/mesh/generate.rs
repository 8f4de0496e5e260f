use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::Mesh;
use crate::error::{invalid, Error, Result};

/// Cell subdivision pattern of the structured square generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pattern {
    /// Each grid cell split by its lower-left to upper-right diagonal.
    Uniform,
    /// Each grid cell split into four triangles through its centroid.
    Crossed,
}

impl std::str::FromStr for Pattern {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Pattern::Uniform),
            "crossed" => Ok(Pattern::Crossed),
            _ => Err(invalid(format!("unknown pattern '{s}' (expected uniform or crossed)"))),
        }
    }
}

impl std::fmt::Display for Pattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Pattern::Uniform => "uniform",
            Pattern::Crossed => "crossed",
        })
    }
}

/// Structured triangulation of `[0, side]²` with `n` cells per side.
pub fn generate_square_mesh(n: usize, pattern: Pattern, side: f64) -> Result<Mesh> {
    if n < 1 {
        return Err(invalid("n must be at least 1"));
    }
    if !(side > 0.0 && side.is_finite()) {
        return Err(invalid(format!("side must be positive, got {side}")));
    }
    let h = side / n as f64;
    let grid = |i: usize, j: usize| j * (n + 1) + i;
    let mut vertices: Vec<[f64; 3]> = Vec::new();
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([i as f64 * h, j as f64 * h, 0.0]);
        }
    }
    let mut cells = Vec::new();
    for j in 0..n {
        for i in 0..n {
            let a = grid(i, j);
            let b = grid(i + 1, j);
            let c = grid(i + 1, j + 1);
            let d = grid(i, j + 1);
            match pattern {
                Pattern::Uniform => {
                    cells.push(vec![a, b, c]);
                    cells.push(vec![a, c, d]);
                }
                Pattern::Crossed => {
                    let m = vertices.len();
                    vertices.push([(i as f64 + 0.5) * h, (j as f64 + 0.5) * h, 0.0]);
                    cells.push(vec![a, b, m]);
                    cells.push(vec![b, c, m]);
                    cells.push(vec![c, d, m]);
                    cells.push(vec![d, a, m]);
                }
            }
        }
    }
    Mesh::from_simplices(2, vertices, cells, "square")
}

/// Kuhn subdivision of `[0,1]³`: `n³` cubes, six tetrahedra each, all sharing
/// the main-diagonal direction so the result is conforming.
pub fn generate_cube_mesh(n: usize) -> Result<Mesh> {
    if n < 1 {
        return Err(invalid("n must be at least 1"));
    }
    let h = 1.0 / n as f64;
    let idx = |i: usize, j: usize, k: usize| (k * (n + 1) + j) * (n + 1) + i;
    let mut vertices = Vec::new();
    for k in 0..=n {
        for j in 0..=n {
            for i in 0..=n {
                vertices.push([i as f64 * h, j as f64 * h, k as f64 * h]);
            }
        }
    }
    const PERMS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let mut cells = Vec::new();
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                for perm in PERMS {
                    let mut p = [i, j, k];
                    let mut tet = vec![idx(p[0], p[1], p[2])];
                    for axis in perm {
                        p[axis] += 1;
                        tet.push(idx(p[0], p[1], p[2]));
                    }
                    cells.push(tet);
                }
            }
        }
    }
    Mesh::from_simplices(3, vertices, cells, "cube")
}

/// Annulus with `n` angular subdivisions and a single ring of cells.
pub fn generate_annulus_mesh(n: usize, r_inner: f64, r_outer: f64) -> Result<Mesh> {
    generate_annulus_mesh_with_rings(n, 1, r_inner, r_outer)
}

pub fn generate_annulus_mesh_with_rings(
    n: usize,
    rings: usize,
    r_inner: f64,
    r_outer: f64,
) -> Result<Mesh> {
    if n < 8 {
        return Err(invalid(format!("annulus needs at least 8 angular subdivisions, got {n}")));
    }
    if rings < 1 {
        return Err(invalid("annulus needs at least one ring"));
    }
    if !(r_inner > 0.0 && r_inner < r_outer && r_outer.is_finite()) {
        return Err(invalid(format!(
            "invalid radii: need 0 < r_inner < r_outer, got ({r_inner}, {r_outer})"
        )));
    }
    let mut vertices = Vec::with_capacity(n * (rings + 1));
    for l in 0..=rings {
        let r = r_inner + (r_outer - r_inner) * l as f64 / rings as f64;
        for a in 0..n {
            let t = 2.0 * PI * a as f64 / n as f64;
            vertices.push([r * t.cos(), r * t.sin(), 0.0]);
        }
    }
    let id = |l: usize, a: usize| l * n + a % n;
    let mut cells = Vec::new();
    for l in 0..rings {
        for a in 0..n {
            let p = id(l, a);
            let q = id(l, a + 1);
            let r = id(l + 1, a + 1);
            let s = id(l + 1, a);
            cells.push(vec![p, q, r]);
            cells.push(vec![p, r, s]);
        }
    }
    Mesh::from_simplices(2, vertices, cells, "annulus")
}

/// Structured unit-disk triangulation with `rings` concentric rings; ring `k`
/// carries `6k` vertices. The boundary is the inscribed `6·rings`-gon.
pub fn generate_disk_mesh(rings: usize) -> Result<Mesh> {
    if rings < 1 {
        return Err(invalid("disk needs at least one ring"));
    }
    let mut vertices = vec![[0.0, 0.0, 0.0]];
    let mut offsets = vec![0usize];
    for k in 1..=rings {
        offsets.push(vertices.len());
        let r = k as f64 / rings as f64;
        for a in 0..6 * k {
            let t = 2.0 * PI * a as f64 / (6 * k) as f64;
            vertices.push([r * t.cos(), r * t.sin(), 0.0]);
        }
    }
    let ring = |k: usize, a: usize| {
        if k == 0 {
            0
        } else {
            offsets[k] + a % (6 * k)
        }
    };
    let mut cells = Vec::new();
    for k in 1..=rings {
        for s in 0..6 {
            let o = |j: usize| ring(k, s * k + j);
            let i = |j: usize| ring(k - 1, s * (k - 1) + j);
            for j in 0..k {
                cells.push(vec![o(j), o(j + 1), i(j)]);
            }
            for j in 0..k.saturating_sub(1) {
                cells.push(vec![i(j), o(j + 1), i(j + 1)]);
            }
        }
    }
    Mesh::from_simplices(2, vertices, cells, "disk")
}

/// Disk triangulation stretched by `aspect` along the first axis.
pub fn generate_ellipse_mesh(rings: usize, aspect: f64) -> Result<Mesh> {
    if !(aspect > 0.0 && aspect.is_finite()) {
        return Err(invalid(format!("aspect must be positive, got {aspect}")));
    }
    generate_disk_mesh(rings)?.map_vertices(|[x, y, z]| [aspect * x, y, z], "ellipse")
}
