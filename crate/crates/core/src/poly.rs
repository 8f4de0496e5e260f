//! Multivariate real polynomials in up to three variables.
//!
//! Shape functions, test batteries and the Arnold–Winther constraint map are
//! all built from these. Terms are kept in a `BTreeMap` keyed by exponent
//! triples so iteration order (and therefore every derived quantity) is
//! deterministic.

use std::collections::BTreeMap;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

/// Exponents of `x`, `y`, `z`.
pub type Exponent = [u8; 3];

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Poly {
    terms: BTreeMap<Exponent, f64>,
}

/// A vector of polynomials, one per component.
pub type PolyVec = Vec<Poly>;

impl Poly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::monomial([0, 0, 0], c)
    }

    pub fn monomial(exp: Exponent, coeff: f64) -> Self {
        let mut p = Self::zero();
        if coeff != 0.0 {
            p.terms.insert(exp, coeff);
        }
        p
    }

    /// The coordinate function `x_i`.
    pub fn var(i: usize) -> Self {
        let mut e = [0u8; 3];
        e[i] = 1;
        Self::monomial(e, 1.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &f64)> {
        self.terms.iter()
    }

    pub fn coeff(&self, exp: Exponent) -> f64 {
        self.terms.get(&exp).copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.values().all(|c| *c == 0.0)
    }

    /// Total degree; the zero polynomial has degree 0.
    pub fn degree(&self) -> usize {
        self.terms
            .iter()
            .filter(|(_, c)| **c != 0.0)
            .map(|(e, _)| total(e))
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for (e, c) in &self.terms {
            let mut t = *c;
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    t *= x[i].powi(k as i32);
                }
            }
            s += t;
        }
        s
    }

    /// Partial derivative with respect to `x_i`.
    pub fn deriv(&self, i: usize) -> Self {
        let mut out = Self::zero();
        for (e, c) in &self.terms {
            if e[i] > 0 {
                let mut f = *e;
                f[i] -= 1;
                out.add_term(f, c * e[i] as f64);
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = Self::zero();
        for (e, c) in &self.terms {
            out.add_term(*e, c * s);
        }
        out
    }

    /// Terms of exactly the given total degree.
    pub fn homogeneous_part(&self, deg: usize) -> Self {
        let mut out = Self::zero();
        for (e, c) in &self.terms {
            if total(e) == deg {
                out.add_term(*e, *c);
            }
        }
        out
    }

    pub fn add_term(&mut self, exp: Exponent, coeff: f64) {
        if coeff == 0.0 {
            return;
        }
        let entry = self.terms.entry(exp).or_insert(0.0);
        *entry += coeff;
        if *entry == 0.0 {
            self.terms.remove(&exp);
        }
    }

    /// Largest coefficient magnitude.
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }
}

pub fn total(e: &Exponent) -> usize {
    e.iter().map(|&k| k as usize).sum()
}

/// All exponents in `nvars` variables with total degree `<= max_degree`,
/// graded by degree then reverse-lexicographic within a degree
/// (`1, x, y, x², xy, y², ...`).
pub fn monomials(nvars: usize, max_degree: usize) -> Vec<Exponent> {
    (0..=max_degree)
        .flat_map(|d| homogeneous_monomials(nvars, d))
        .collect()
}

/// Exponents of total degree exactly `degree`.
pub fn homogeneous_monomials(nvars: usize, degree: usize) -> Vec<Exponent> {
    let d = degree as u8;
    let mut out = Vec::new();
    match nvars {
        1 => out.push([d, 0, 0]),
        2 => {
            for b in 0..=d {
                out.push([d - b, b, 0]);
            }
        }
        3 => {
            for b in 0..=d {
                for c in 0..=(d - b) {
                    out.push([d - b - c, b, c]);
                }
            }
        }
        _ => panic!("monomials: unsupported variable count {nvars}"),
    }
    out
}

/// Dimension of the space of polynomials of degree `<= p` in `n` variables.
pub fn dim_polys(n: usize, p: usize) -> usize {
    let mut num = 1usize;
    let mut den = 1usize;
    for i in 1..=n {
        num *= p + i;
        den *= i;
    }
    num / den
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Add for Poly {
    type Output = Poly;
    fn add(mut self, rhs: Poly) -> Poly {
        self += &rhs;
        self
    }
}

impl AddAssign<&Poly> for Poly {
    fn add_assign(&mut self, rhs: &Poly) {
        for (e, c) in &rhs.terms {
            self.add_term(*e, *c);
        }
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(*e, -c);
        }
        out
    }
}

impl Sub for Poly {
    type Output = Poly;
    fn sub(self, rhs: Poly) -> Poly {
        &self - &rhs
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(-1.0)
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let e = [ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]];
                out.add_term(e, ca * cb);
            }
        }
        out
    }
}

impl Mul for Poly {
    type Output = Poly;
    fn mul(self, rhs: Poly) -> Poly {
        &self * &rhs
    }
}

/// Gradient of a scalar polynomial in `dim` variables.
pub fn grad(p: &Poly, dim: usize) -> PolyVec {
    (0..dim).map(|i| p.deriv(i)).collect()
}

/// 2D scalar curl `(∂₂u, −∂₁u)`.
pub fn curl_scalar_2d(p: &Poly) -> PolyVec {
    vec![p.deriv(1), -&p.deriv(0)]
}

/// 2D rot `∂₁v₂ − ∂₂v₁`.
pub fn rot_2d(v: &[Poly]) -> Poly {
    &v[1].deriv(0) - &v[0].deriv(1)
}

pub fn curl_3d(v: &[Poly]) -> PolyVec {
    vec![
        &v[2].deriv(1) - &v[1].deriv(2),
        &v[0].deriv(2) - &v[2].deriv(0),
        &v[1].deriv(0) - &v[0].deriv(1),
    ]
}

pub fn div(v: &[Poly]) -> Poly {
    let mut out = Poly::zero();
    for (i, c) in v.iter().enumerate() {
        out += &c.deriv(i);
    }
    out
}

pub fn eval_vec(v: &[Poly], x: &[f64]) -> Vec<f64> {
    v.iter().map(|p| p.eval(x)).collect()
}
