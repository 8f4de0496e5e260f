//! Quadrature on the reference interval, triangle and tetrahedron.
//!
//! Simplex rules are collapsed (Duffy) tensor products of Gauss–Legendre
//! rules, exact for polynomials of the requested total degree. Weights sum to
//! the reference measure (`1`, `1/2`, `1/6`).

use std::f64::consts::PI;

/// Default exactness on cells and on edges.
pub const CELL_DEGREE: usize = 8;
pub const EDGE_DEGREE: usize = 9;

#[derive(Clone, Debug)]
pub struct Rule {
    pub dim: usize,
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(&[f64; 3]) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * f(p))
            .sum()
    }
}

/// `n`-point Gauss–Legendre rule on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..n {
        // Newton on P_n starting from the Chebyshev-like guess.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        xs[i] = 0.5 * (1.0 - x);
        ws[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (xs, ws)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

pub fn interval_rule(degree: usize) -> Rule {
    let n = degree / 2 + 1;
    let (xs, ws) = gauss_legendre(n);
    Rule {
        dim: 1,
        points: xs.iter().map(|&x| [x, 0.0, 0.0]).collect(),
        weights: ws,
    }
}

pub fn triangle_rule(degree: usize) -> Rule {
    // The collapse adds one power of (1 - v).
    let n = (degree + 1) / 2 + 1;
    let (xs, ws) = gauss_legendre(n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (j, &v) in xs.iter().enumerate() {
        for (i, &u) in xs.iter().enumerate() {
            points.push([u * (1.0 - v), v, 0.0]);
            weights.push(ws[i] * ws[j] * (1.0 - v));
        }
    }
    Rule {
        dim: 2,
        points,
        weights,
    }
}

pub fn tetrahedron_rule(degree: usize) -> Rule {
    let n = (degree + 2) / 2 + 1;
    let (xs, ws) = gauss_legendre(n);
    let mut points = Vec::with_capacity(n * n * n);
    let mut weights = Vec::with_capacity(n * n * n);
    for (k, &w) in xs.iter().enumerate() {
        for (j, &v) in xs.iter().enumerate() {
            for (i, &u) in xs.iter().enumerate() {
                points.push([u * (1.0 - v) * (1.0 - w), v * (1.0 - w), w]);
                weights.push(ws[i] * ws[j] * ws[k] * (1.0 - v) * (1.0 - w) * (1.0 - w));
            }
        }
    }
    Rule {
        dim: 3,
        points,
        weights,
    }
}

pub fn simplex_rule(dim: usize, degree: usize) -> Rule {
    match dim {
        1 => interval_rule(degree),
        2 => triangle_rule(degree),
        3 => tetrahedron_rule(degree),
        _ => panic!("simplex_rule: unsupported dimension {dim}"),
    }
}

/// Volume of the reference `dim`-simplex, `1/dim!`.
pub fn reference_volume(dim: usize) -> f64 {
    1.0 / (1..=dim).product::<usize>() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).product::<u32>() as f64
    }

    // ∫_simplex x^a y^b z^c = a! b! c! / (a + b + c + d)!
    fn exact(e: [u32; 3], dim: u32) -> f64 {
        factorial(e[0]) * factorial(e[1]) * factorial(e[2]) / factorial(e[0] + e[1] + e[2] + dim)
    }

    #[test]
    fn interval_exactness() {
        let r = interval_rule(EDGE_DEGREE);
        for k in 0..=EDGE_DEGREE as i32 {
            let v = r.integrate(|p| p[0].powi(k));
            assert!((v - 1.0 / (k as f64 + 1.0)).abs() < 1e-14, "k={k}");
        }
    }

    #[test]
    fn triangle_exactness() {
        let r = triangle_rule(CELL_DEGREE);
        for a in 0..=8u32 {
            for b in 0..=(8 - a) {
                let v = r.integrate(|p| p[0].powi(a as i32) * p[1].powi(b as i32));
                assert!((v - exact([a, b, 0], 2)).abs() < 1e-15, "{a} {b}");
            }
        }
    }

    #[test]
    fn tetrahedron_exactness() {
        let r = tetrahedron_rule(CELL_DEGREE);
        for a in 0..=8u32 {
            for b in 0..=(8 - a) {
                for c in 0..=(8 - a - b) {
                    let v = r.integrate(|p| {
                        p[0].powi(a as i32) * p[1].powi(b as i32) * p[2].powi(c as i32)
                    });
                    assert!((v - exact([a, b, c], 3)).abs() < 1e-15);
                }
            }
        }
        assert!((r.weights.iter().sum::<f64>() - reference_volume(3)).abs() < 1e-15);
    }
}
