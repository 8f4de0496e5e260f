use std::sync::Arc;

use whitney::elements::ElementFamily;
use whitney::linalg::{generalized_symmetric_eigenvalues, DenseMatrix};
use whitney::mesh::{generate_cube_mesh, generate_square_mesh, Mesh, Pattern};
use whitney::spaces::{
    assemble_derivative, assemble_form, assemble_mass, assemble_mass_with, assemble_stiffness,
    build_space, canonical_projection, BoundaryCondition, CellGeometry, Coefficient, Op,
};
use whitney::{par::Execution, Error};

fn fam(n: &str) -> ElementFamily {
    ElementFamily::from_name(n).unwrap()
}

fn square(n: usize, p: Pattern) -> Arc<Mesh> {
    Arc::new(generate_square_mesh(n, p, 1.0).unwrap())
}

#[test]
fn dof_counts_on_single_crossed_cell() {
    let m = square(1, Pattern::Crossed);
    let p1 = build_space(&m, &fam("lagrange1"), BoundaryCondition::None).unwrap();
    assert_eq!(p1.num_dofs(), 5);
    let p1e = build_space(&m, &fam("lagrange1"), BoundaryCondition::Essential).unwrap();
    assert_eq!(p1e.num_free(), 1);
    let center = p1e.free_dofs()[0];
    assert_eq!(m.vertices()[center], [0.5, 0.5, 0.0]);

    let e1 = build_space(&m, &fam("edge1"), BoundaryCondition::None).unwrap();
    assert_eq!(e1.num_dofs(), 8);
    let e1e = build_space(&m, &fam("edge1"), BoundaryCondition::Essential).unwrap();
    assert_eq!(e1e.num_free(), 4);

    for bc in [BoundaryCondition::None, BoundaryCondition::Essential] {
        let d = build_space(&m, &fam("dg0"), bc).unwrap();
        assert_eq!(d.num_dofs(), 4);
        assert_eq!(d.num_free(), 4);
    }
}

#[test]
fn dimension_mismatch_is_rejected() {
    let m = square(1, Pattern::Uniform);
    let e = build_space(&m, &fam("edge1_3d"), BoundaryCondition::None).unwrap_err();
    assert!(matches!(e, Error::DimensionMismatch(_)));
}

#[test]
fn dof_counts_sum_over_entities() {
    let m = square(3, Pattern::Uniform);
    let [v, e, t] = [m.num_vertices(), m.num_entities(1), m.num_cells()];
    let cases = [
        ("lagrange1", v),
        ("lagrange2", v + e),
        ("lagrange3", v + 2 * e + t),
        ("edge2", 2 * e + 2 * t),
        ("face2", 2 * e + 2 * t),
        ("dg2", 6 * t),
    ];
    for (name, n) in cases {
        assert_eq!(build_space(&m, &fam(name), BoundaryCondition::None).unwrap().num_dofs(), n);
    }
}

#[test]
fn dg0_mass_is_area_diagonal() {
    let m = square(3, Pattern::Crossed);
    let s = build_space(&m, &fam("dg0"), BoundaryCondition::None).unwrap();
    let mass = assemble_mass(&s).unwrap();
    let mut trace = 0.0;
    for i in 0..s.num_dofs() {
        for (j, v) in mass.row(i) {
            if j == i {
                assert!((v - m.cell_volume(i)).abs() < 1e-15);
                trace += v;
            } else {
                assert!(v.abs() < 1e-16);
            }
        }
    }
    assert!((trace - 1.0).abs() < 1e-14);

    // Side 3 scales areas by 9.
    let big = Arc::new(generate_square_mesh(3, Pattern::Crossed, 3.0).unwrap());
    let sb = build_space(&big, &fam("dg0"), BoundaryCondition::None).unwrap();
    let mb = assemble_mass(&sb).unwrap();
    for i in 0..sb.num_dofs() {
        assert!((mb.get(i, i) - 9.0 * mass.get(i, i)).abs() < 1e-13);
    }
}

#[test]
fn lagrange_stiffness_center_entry() {
    let m = square(1, Pattern::Crossed);
    let s = build_space(&m, &fam("lagrange1"), BoundaryCondition::None).unwrap();
    let k = assemble_stiffness(&s, Op::Grad, &Coefficient::identity()).unwrap();
    // Oracle: on each of the four triangles the center hat has gradient
    // length 1/height = 2 and the area is 1/4, so each contributes 1.
    let center = 4;
    assert!((k.get(center, center) - 4.0).abs() < 1e-13);

    let k2 = assemble_stiffness(&s, Op::Grad, &Coefficient::Scalar(2.0)).unwrap();
    let km = assemble_stiffness(
        &s,
        Op::Grad,
        &Coefficient::Matrix(vec![vec![2.0, 0.0], vec![0.0, 2.0]]),
    )
    .unwrap();
    for (i, j, v) in k.triplets() {
        assert_eq!(k2.get(i, j), 2.0 * v);
        assert!((km.get(i, j) - 2.0 * v).abs() < 1e-15);
    }
}

#[test]
fn non_spd_coefficients_are_rejected() {
    let m = square(1, Pattern::Uniform);
    let s = build_space(&m, &fam("lagrange1"), BoundaryCondition::None).unwrap();
    let bad = Coefficient::Matrix(vec![vec![1.0, 2.0], vec![2.0, 1.0]]);
    assert!(matches!(
        assemble_stiffness(&s, Op::Grad, &bad),
        Err(Error::NotPositiveDefinite)
    ));
    assert!(assemble_stiffness(&s, Op::Grad, &Coefficient::Scalar(-1.0)).is_err());
    let other = square(2, Pattern::Uniform);
    let s2 = build_space(&other, &fam("lagrange1"), BoundaryCondition::None).unwrap();
    assert!(assemble_form(&s, Op::Identity, &s2, Op::Identity, &Coefficient::identity()).is_err());
}

#[test]
fn curl_curl_equals_dt_m_d() {
    for (mesh, names, op) in [
        (square(3, Pattern::Crossed), ["edge1", "dg0"], Op::Rot),
        (square(2, Pattern::Uniform), ["edge2", "dg1"], Op::Rot),
        (square(2, Pattern::Uniform), ["face2", "dg1"], Op::Div),
        (Arc::new(generate_cube_mesh(1).unwrap()), ["edge1_3d", "face1_3d"], Op::Curl),
    ] {
        let a = build_space(&mesh, &fam(names[0]), BoundaryCondition::None).unwrap();
        let b = build_space(&mesh, &fam(names[1]), BoundaryCondition::None).unwrap();
        let k = assemble_stiffness(&a, op, &Coefficient::identity()).unwrap();
        let d = assemble_derivative(&a, &b).unwrap();
        let mb = assemble_mass(&b).unwrap();
        let dtmd = d.transpose().matmul(&mb.matmul(&d).unwrap()).unwrap();
        let diff = k.add(&dtmd.scale(-1.0)).unwrap();
        assert!(diff.max_abs() <= 1e-12 * k.max_abs().max(1.0), "{names:?}: {}", diff.max_abs());
    }
}

#[test]
fn mass_matrices_are_spd() {
    let m = square(2, Pattern::Crossed);
    for name in ["lagrange1", "lagrange3", "edge2", "face2", "dg2"] {
        let s = build_space(&m, &fam(name), BoundaryCondition::None).unwrap();
        let a = assemble_mass(&s).unwrap();
        assert!(a.is_symmetric(1e-12));
        let eig = generalized_symmetric_eigenvalues(
            &a.to_dense(),
            &DenseMatrix::identity(s.num_dofs(), s.num_dofs()),
        )
        .unwrap();
        assert!(eig[0] > 0.0, "{name}");
    }
}

#[test]
fn projection_examples() {
    let m = square(1, Pattern::Uniform);
    let p1 = build_space(&m, &fam("lagrange1"), BoundaryCondition::None).unwrap();
    let ones = canonical_projection(&p1, &|_| vec![1.0]).unwrap();
    assert!(ones.iter().all(|v| (v - 1.0).abs() < 1e-15));

    let dg = build_space(&m, &fam("dg0"), BoundaryCondition::None).unwrap();
    let means = canonical_projection(&dg, &|x| vec![x[0]]).unwrap();
    let mut sorted = means.clone();
    sorted.sort_by(f64::total_cmp);
    assert!((sorted[0] - 1.0 / 3.0).abs() < 1e-15);
    assert!((sorted[1] - 2.0 / 3.0).abs() < 1e-15);
}

#[test]
fn projection_is_idempotent() {
    let m = square(2, Pattern::Crossed);
    for name in ["lagrange3", "edge2", "face2", "dg2"] {
        let s = build_space(&m, &fam(name), BoundaryCondition::None).unwrap();
        let coeffs: Vec<f64> = (0..s.num_dofs()).map(|i| ((i * 37 % 11) as f64) - 5.0).collect();
        // Evaluate the discrete field cellwise through its own basis.
        let back = canonical_projection(&s, &|x: &[f64; 3]| {
            let c = locate(&m, x);
            let xh = reference_point(&m, c, x);
            s.evaluate(&coeffs, Op::Identity, c, &xh).unwrap()
        })
        .unwrap();
        for (a, b) in coeffs.iter().zip(&back) {
            assert!((a - b).abs() < 1e-10, "{name}");
        }
    }
}

// Cell containing x, preferring the one whose barycentric coordinates are
// most interior (quadrature points never lie on cell boundaries except for
// vertex and edge DOFs, where any containing cell gives the same value for
// conforming fields).
fn locate(m: &Mesh, x: &[f64; 3]) -> usize {
    (0..m.num_cells())
        .max_by(|&a, &b| min_bary(m, a, x).total_cmp(&min_bary(m, b, x)))
        .unwrap()
}

fn reference_point(m: &Mesh, c: usize, x: &[f64; 3]) -> [f64; 3] {
    let g = CellGeometry::new(m, c).unwrap();
    let d = [x[0] - g.origin[0], x[1] - g.origin[1]];
    [
        g.inv[0][0] * d[0] + g.inv[0][1] * d[1],
        g.inv[1][0] * d[0] + g.inv[1][1] * d[1],
        0.0,
    ]
}

fn min_bary(m: &Mesh, c: usize, x: &[f64; 3]) -> f64 {
    let r = reference_point(m, c, x);
    r[0].min(r[1]).min(1.0 - r[0] - r[1])
}

#[test]
fn essential_bc_nesting() {
    let m = square(3, Pattern::Crossed);
    let p = build_space(&m, &fam("lagrange1"), BoundaryCondition::Essential).unwrap();
    let e = build_space(&m, &fam("edge1"), BoundaryCondition::Essential).unwrap();
    let d = assemble_derivative(&p, &e).unwrap();
    // Free potentials map into free edges only.
    for &j in p.free_dofs() {
        for i in 0..e.num_dofs() {
            if d.get(i, j) != 0.0 {
                assert!(!e.is_constrained(i));
            }
        }
    }
}

#[test]
fn parallel_and_sequential_assembly_agree() {
    let m = square(4, Pattern::Crossed);
    let s = build_space(&m, &fam("edge2"), BoundaryCondition::None).unwrap();
    let a = assemble_mass_with(&s, Execution::Sequential).unwrap();
    let b = assemble_mass_with(&s, Execution::Parallel).unwrap();
    assert_eq!(a.triplets(), b.triplets());
}

#[test]
fn lowest_order_derivatives_are_signed_incidences() {
    let m = square(2, Pattern::Crossed);
    let p = build_space(&m, &fam("lagrange1"), BoundaryCondition::None).unwrap();
    let e = build_space(&m, &fam("edge1"), BoundaryCondition::None).unwrap();
    let d = assemble_derivative(&p, &e).unwrap();
    for (_, _, v) in d.triplets() {
        assert!(v == 1.0 || v == -1.0);
    }
    // Row for edge (a, b): −1 at a, +1 at b.
    for (i, ed) in m.entities(1).iter().enumerate() {
        assert_eq!(d.get(i, ed[0]), -1.0);
        assert_eq!(d.get(i, ed[1]), 1.0);
    }
}
