use whitney::elements::{
    catalog_names, exterior_derivative, local_derivative_matrix, ElementFamily, FamilyKind,
};
use whitney::linalg::{numerical_rank, DEFAULT_RANK_TOL};
use whitney::mesh::local_subsimplices;
use whitney::poly::{Poly, PolyVec};
use whitney::Error;

fn all() -> Vec<ElementFamily> {
    catalog_names()
        .into_iter()
        .map(|n| ElementFamily::from_name(n).unwrap())
        .collect()
}

fn eval(v: &[Poly], x: &[f64; 3]) -> Vec<f64> {
    v.iter().map(|p| p.eval(x)).collect()
}

#[test]
fn shape_dimensions() {
    let expect = [
        ("lagrange1", 3),
        ("lagrange2", 6),
        ("lagrange3", 10),
        ("dg0", 1),
        ("dg1", 3),
        ("dg2", 6),
        ("edge1", 3),
        ("edge2", 8),
        ("face1", 3),
        ("face2", 8),
        ("lagrange1_3d", 4),
        ("dg0_3d", 1),
        ("edge1_3d", 6),
        ("face1_3d", 4),
    ];
    for (name, n) in expect {
        let f = ElementFamily::from_name(name).unwrap();
        assert_eq!(f.shape_dim(), n, "{name}");
        assert_eq!(f.dofs().len(), n, "{name}");
        assert_eq!(f.name(), name);
    }
}

#[test]
fn unknown_families_are_rejected() {
    for bad in ["face2_3d", "edge3", "lagrange4", "lagrange0", "bogus1", "dg", "edge2_3d"] {
        let e = ElementFamily::from_name(bad).unwrap_err();
        assert!(matches!(e, Error::NotInCatalog(_)), "{bad}");
        assert!(e.to_string().contains("not in catalog"));
    }
}

#[test]
fn unisolvence_on_spanning_set() {
    for f in all() {
        let n = f.shape_dim();
        let g = faer::Mat::from_fn(n, n, |i, j| {
            let p = &f.spanning_set()[j];
            f.dof_rules()[i].apply(&|x: &[f64; 3]| eval(p, x))
        });
        assert_eq!(numerical_rank(&g, DEFAULT_RANK_TOL), n, "{}", f.name());
    }
}

#[test]
fn dual_basis() {
    for f in all() {
        for (j, b) in f.reference_basis().iter().enumerate() {
            let d = f.apply_dofs_poly(b).unwrap();
            for (i, v) in d.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((v - expect).abs() < 1e-12, "{} dof {i} of basis {j}: {v}", f.name());
            }
        }
    }
}

#[test]
fn apply_dofs_examples() {
    let dg0 = ElementFamily::from_name("dg0").unwrap();
    let v = dg0.apply_dofs(&|x: &[f64; 3]| vec![x[0]]).unwrap();
    assert!((v[0] - 1.0 / 3.0).abs() < 1e-15);

    let p1 = ElementFamily::from_name("lagrange1").unwrap();
    assert_eq!(p1.apply_dofs(&|_: &[f64; 3]| vec![1.0]).unwrap(), vec![1.0; 3]);

    let e1 = ElementFamily::from_name("edge1").unwrap();
    let v = e1.apply_dofs(&|_: &[f64; 3]| vec![1.0, 0.0]).unwrap();
    // Local edge 0 runs from (0,0) to (1,0).
    assert_eq!(local_subsimplices(2, 1)[0], vec![0, 1]);
    assert!((v[0] - 1.0).abs() < 1e-15);

    assert!(matches!(
        e1.apply_dofs(&|_: &[f64; 3]| vec![1.0]),
        Err(Error::DimensionMismatch(_))
    ));
}

#[test]
fn lagrange_to_edge_is_incidence() {
    let p1 = ElementFamily::from_name("lagrange1").unwrap();
    let e1 = ElementFamily::from_name("edge1").unwrap();
    let m = local_derivative_matrix(&p1, &e1).unwrap();
    // Oracle: tangential moment of grad λ_j along edge (a, b) is λ_j(b) − λ_j(a).
    for (r, e) in local_subsimplices(2, 1).iter().enumerate() {
        for j in 0..3 {
            let expect = (e[1] == j) as i32 as f64 - (e[0] == j) as i32 as f64;
            assert_eq!(m[(r, j)], expect);
        }
    }
}

fn pairs() -> Vec<(&'static str, &'static str, &'static str)> {
    vec![
        ("lagrange1", "edge1", "dg0"),
        ("lagrange2", "edge2", "dg1"),
        ("lagrange1", "face1", "dg0"),
        ("lagrange2", "face2", "dg1"),
    ]
}

#[test]
fn derivative_composition_vanishes() {
    for (a, b, c) in pairs() {
        let (a, b, c) = (
            ElementFamily::from_name(a).unwrap(),
            ElementFamily::from_name(b).unwrap(),
            ElementFamily::from_name(c).unwrap(),
        );
        let d0 = local_derivative_matrix(&a, &b).unwrap();
        let d1 = local_derivative_matrix(&b, &c).unwrap();
        let prod = &d1 * &d0;
        let m = whitney::linalg::max_abs(&prod);
        assert!(m < 1e-12, "{}: {m}", b.name());
    }
    let names = ["lagrange1_3d", "edge1_3d", "face1_3d", "dg0_3d"];
    let f: Vec<_> = names.iter().map(|n| ElementFamily::from_name(n).unwrap()).collect();
    let d: Vec<_> = (0..3).map(|k| local_derivative_matrix(&f[k], &f[k + 1]).unwrap()).collect();
    assert_eq!(whitney::linalg::max_abs(&(&d[1] * &d[0])), 0.0);
    assert_eq!(whitney::linalg::max_abs(&(&d[2] * &d[1])), 0.0);
}

#[test]
fn edge_to_dg_row_sums() {
    let e1 = ElementFamily::from_name("edge1").unwrap();
    let dg0 = ElementFamily::from_name("dg0").unwrap();
    let m = local_derivative_matrix(&e1, &dg0).unwrap();
    // DOF of rot φ in dg0 is its mean; rot of each basis field is constant.
    for (j, phi) in e1.reference_basis().iter().enumerate() {
        let rot = exterior_derivative(e1.proxy(), dg0.proxy(), 2, phi).unwrap();
        assert!((m[(0, j)] - rot[0].eval(&[0.3, 0.3, 0.0])).abs() < 1e-12);
    }
    // Constants map to zero.
    let c = e1.apply_dofs(&|_: &[f64; 3]| vec![0.7, -1.3]).unwrap();
    let s: f64 = (0..3).map(|j| m[(0, j)] * c[j]).sum();
    assert!(s.abs() < 1e-14);
}

#[test]
fn incompatible_pairs_are_rejected() {
    let p2 = ElementFamily::from_name("lagrange2").unwrap();
    let e1 = ElementFamily::from_name("edge1").unwrap();
    assert!(matches!(
        local_derivative_matrix(&p2, &e1),
        Err(Error::IncompatibleDerivative(_))
    ));
    let e2 = ElementFamily::from_name("edge2").unwrap();
    let dg0 = ElementFamily::from_name("dg0").unwrap();
    assert!(local_derivative_matrix(&e2, &dg0).is_err());
    let p1 = ElementFamily::from_name("lagrange1").unwrap();
    let p3d = ElementFamily::from_name("edge1_3d").unwrap();
    assert!(local_derivative_matrix(&p1, &p3d).is_err());
}

#[test]
fn containment_reconstructs_pointwise() {
    for (a, b, _) in pairs().into_iter().take(2) {
        let a = ElementFamily::from_name(a).unwrap();
        let b = ElementFamily::from_name(b).unwrap();
        for phi in a.reference_basis() {
            let g = exterior_derivative(a.proxy(), b.proxy(), 2, phi).unwrap();
            let rebuilt = b.combine(&b.apply_dofs_poly(&g).unwrap());
            for x in [[0.1, 0.2, 0.0], [0.6, 0.3, 0.0], [0.0, 0.9, 0.0]] {
                let (u, v) = (eval(&g, &x), eval(&rebuilt, &x));
                for (p, q) in u.iter().zip(&v) {
                    assert!((p - q).abs() < 1e-12);
                }
            }
        }
    }
}

/// Smallest k with vanishing k-th differences, i.e. trace degree + 1.
fn trace_degree_bound(f: &ElementFamily, field: &PolyVec, edge: &[usize]) -> usize {
    // Sample the trace along the edge and fit by divided differences: a
    // polynomial of degree q has vanishing (q+1)-th differences.
    let verts = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
    let (a, b) = (verts[edge[0]], verts[edge[1]]);
    let tau = [b[0] - a[0], b[1] - a[1]];
    let normal = [tau[1], -tau[0]];
    let tangent = tau;
    let dir = if f.kind() == FamilyKind::Face { normal } else { tangent };
    let samples: Vec<f64> = (0..8)
        .map(|i| {
            let s = i as f64 / 7.0;
            let x = [a[0] + s * tau[0], a[1] + s * tau[1], 0.0];
            let v = eval(field, &x);
            v[0] * dir[0] + v[1] * dir[1]
        })
        .collect();
    let mut diffs = samples;
    for order in 0usize..8 {
        if diffs.iter().all(|d| d.abs() < 1e-10) {
            return order;
        }
        diffs = diffs.windows(2).map(|w| w[1] - w[0]).collect();
    }
    8
}

#[test]
fn trace_degree_matches_edge_moments() {
    for name in ["edge1", "edge2", "face1", "face2"] {
        let f = ElementFamily::from_name(name).unwrap();
        for b in f.reference_basis() {
            for e in local_subsimplices(2, 1) {
                assert!(trace_degree_bound(&f, b, &e) <= f.order(), "{name}");
            }
        }
    }
}

#[test]
fn three_dimensional_shape_spaces() {
    // a + b × x and a + b x: the spanning sets specify the structure; check
    // membership of the dual basis by the defining identities.
    let e = ElementFamily::from_name("edge1_3d").unwrap();
    for b in e.reference_basis() {
        // curl is constant and b is linear with symmetric-free gradient part.
        for c in b {
            assert!(c.degree() <= 1);
        }
        let sym: f64 = (0..3)
            .flat_map(|i| (0..3).map(move |j| (i, j)))
            .map(|(i, j)| (b[i].deriv(j).eval(&[0.0; 3]) + b[j].deriv(i).eval(&[0.0; 3])).abs())
            .fold(0.0, f64::max);
        assert!(sym < 1e-12, "gradient of a + b×x is skew");
    }
    let f = ElementFamily::from_name("face1_3d").unwrap();
    for b in f.reference_basis() {
        // Gradient of a + b x is a multiple of the identity.
        let g: Vec<Vec<f64>> = (0..3)
            .map(|i| (0..3).map(|j| b[i].deriv(j).eval(&[0.0; 3])).collect())
            .collect();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { g[0][0] } else { 0.0 };
                assert!((g[i][j] - expect).abs() < 1e-12);
            }
        }
    }
}
