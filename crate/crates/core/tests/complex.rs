use std::sync::Arc;

use whitney::complex::{
    check_commuting, check_exactness, check_s1, commuting_residual, compute_infsup,
    DiscreteComplex, Variant2d,
};
use whitney::elements::ElementFamily;
use whitney::linalg::{from_rows, DenseMatrix};
use whitney::mesh::{
    generate_annulus_mesh, generate_annulus_mesh_with_rings, generate_cube_mesh,
    generate_disk_mesh, generate_square_mesh, Mesh, Pattern,
};
use whitney::par::Execution;
use whitney::poly::Poly;
use whitney::spaces::{
    assemble_derivative, assemble_form, assemble_mass, build_space, BoundaryCondition,
    Coefficient, Op,
};

fn arc(m: Mesh) -> Arc<Mesh> {
    Arc::new(m)
}

fn disk_meshes() -> Vec<Arc<Mesh>> {
    vec![
        arc(generate_square_mesh(1, Pattern::Crossed, 1.0).unwrap()),
        arc(generate_square_mesh(3, Pattern::Uniform, 1.0).unwrap()),
        arc(generate_square_mesh(4, Pattern::Crossed, 2.0).unwrap()),
        arc(generate_disk_mesh(3).unwrap()),
    ]
}

#[test]
fn lowest_order_disk_is_exact() {
    for m in disk_meshes() {
        for v in [Variant2d::Edge, Variant2d::Face] {
            let c = DiscreteComplex::de_rham_2d(&m, v, 1, BoundaryCondition::None).unwrap();
            let r = check_exactness(&c, &[1, 0, 0]).unwrap();
            assert!(r.pass, "{r:?}");
            assert_eq!(r.alternating_sum, 1);
            assert_eq!(r.levels[0].rank, m.num_vertices() - 1);
            assert_eq!(r.levels[0].rank + r.levels[1].rank, m.num_entities(1));
            assert_eq!(r.integer_rank_agrees, Some(true));
            assert_eq!(r.matches_coboundary, Some(true));
        }
    }
}

#[test]
fn incidence_rank_of_crossed_cell() {
    let m = arc(generate_square_mesh(1, Pattern::Crossed, 1.0).unwrap());
    let c = DiscreteComplex::de_rham_2d(&m, Variant2d::Edge, 1, BoundaryCondition::None).unwrap();
    let d0 = c.derivatives()[0].to_dense();
    assert_eq!((d0.nrows(), d0.ncols()), (8, 5));
    // Graph oracle: V − #components.
    assert_eq!(whitney::linalg::numerical_rank(&d0, 1e-10), 4);
}

#[test]
fn higher_order_disk_is_exact() {
    for m in disk_meshes().into_iter().take(3) {
        for v in [Variant2d::Edge, Variant2d::Face] {
            let c = DiscreteComplex::de_rham_2d(&m, v, 2, BoundaryCondition::None).unwrap();
            let r = check_exactness(&c, &[1, 0, 0]).unwrap();
            assert!(r.pass, "{r:?}");
            assert_eq!(r.integer_rank_agrees, None);
        }
    }
}

#[test]
fn annulus_has_one_hole() {
    for (n, rings) in [(8, 1), (12, 2), (16, 3)] {
        let m = arc(generate_annulus_mesh_with_rings(n, rings, 0.5, 1.0).unwrap());
        for order in [1, 2] {
            let c = DiscreteComplex::de_rham_2d(&m, Variant2d::Edge, order, BoundaryCondition::None)
                .unwrap();
            let r = check_exactness(&c, &[1, 1, 0]).unwrap();
            assert!(r.pass, "{r:?}");
            if order == 1 {
                assert_eq!(r.alternating_sum, 0);
            }
        }
    }
    let m = arc(generate_annulus_mesh(8, 0.5, 1.0).unwrap());
    let c = DiscreteComplex::de_rham(&m, 1, BoundaryCondition::None).unwrap();
    assert!(!check_exactness(&c, &[1, 0, 0]).unwrap().pass);
}

#[test]
fn cohomology_is_refinement_invariant() {
    for n in [2, 4, 8] {
        let m = arc(generate_square_mesh(n, Pattern::Uniform, 1.0).unwrap());
        let c = DiscreteComplex::de_rham(&m, 1, BoundaryCondition::None).unwrap();
        let r = check_exactness(&c, &[1, 0, 0]).unwrap();
        assert_eq!(r.levels.iter().map(|l| l.cohomology).collect::<Vec<_>>(), vec![1, 0, 0]);
        assert_eq!(r.levels[0].kernel, 1);
    }
}

#[test]
fn essential_bc_complex_and_interior_kernel() {
    // With boundary conditions the cohomology moves to the top (constants
    // are excluded, the top space gains one mean-value constraint).
    let m = arc(generate_square_mesh(4, Pattern::Crossed, 1.0).unwrap());
    let c = DiscreteComplex::de_rham(&m, 1, BoundaryCondition::Essential).unwrap();
    let r = check_exactness(&c, &[0, 0, 1]).unwrap();
    assert!(r.pass, "{r:?}");
    assert_eq!(r.levels[1].kernel, m.num_interior_vertices());
}

#[test]
fn whitney_cube_is_exact() {
    for n in [1, 2] {
        let m = arc(generate_cube_mesh(n).unwrap());
        let c = DiscreteComplex::whitney_3d(&m, BoundaryCondition::None).unwrap();
        let d = c.derivatives();
        assert_eq!(d[1].matmul(&d[0]).unwrap().max_abs(), 0.0);
        assert_eq!(d[2].matmul(&d[1]).unwrap().max_abs(), 0.0);
        let r = check_exactness(&c, &[1, 0, 0, 0]).unwrap();
        assert!(r.pass, "{r:?}");
        assert_eq!(r.alternating_sum, 1);
        if n == 1 {
            let dims: Vec<usize> = r.levels.iter().map(|l| l.dim).collect();
            assert_eq!(dims, vec![8, 19, 18, 6]);
        }
    }
}

#[test]
fn report_json_shape() {
    let m = arc(generate_square_mesh(1, Pattern::Crossed, 1.0).unwrap());
    let c = DiscreteComplex::de_rham(&m, 1, BoundaryCondition::None).unwrap();
    let r = check_exactness(&c, &[1, 0, 0]).unwrap();
    let v: serde_json::Value = serde_json::to_value(&r).unwrap();
    for key in ["levels", "alternating_sum", "expected_betti", "pass"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    for key in ["dim", "rank", "kernel", "cohomology"] {
        assert!(v["levels"][0].get(key).is_some(), "{key}");
    }
}

#[test]
fn commuting_2d_and_3d() {
    let m = arc(generate_square_mesh(2, Pattern::Crossed, 1.0).unwrap());
    for order in [1, 2] {
        for v in [Variant2d::Edge, Variant2d::Face] {
            let c = DiscreteComplex::de_rham_2d(&m, v, order, BoundaryCondition::None).unwrap();
            let r = check_commuting(&c, 1e-10).unwrap();
            assert!(r.pass, "{r:?}");
        }
    }
    let cube = arc(generate_cube_mesh(1).unwrap());
    let c = DiscreteComplex::whitney_3d(&cube, BoundaryCondition::None).unwrap();
    let r = check_commuting(&c, 1e-10).unwrap();
    assert!(r.pass, "{r:?}");
    assert_eq!(r.squares.len(), 3);
}

#[test]
fn commuting_examples() {
    let m = arc(generate_square_mesh(2, Pattern::Uniform, 1.0).unwrap());
    let c = DiscreteComplex::de_rham(&m, 1, BoundaryCondition::None).unwrap();
    let (s0, s1) = (&c.spaces()[0], &c.spaces()[1]);
    let xy = vec![&Poly::var(0) * &Poly::var(1)];
    let r = commuting_residual(s0, s1, &c.derivatives()[0], &[xy], Execution::Sequential).unwrap();
    assert!(r <= 1e-10);
    let one = vec![Poly::constant(1.0)];
    let r = commuting_residual(s0, s1, &c.derivatives()[0], &[one], Execution::Sequential).unwrap();
    assert_eq!(r, 0.0);

    let cube = arc(generate_cube_mesh(2).unwrap());
    let c = DiscreteComplex::whitney_3d(&cube, BoundaryCondition::None).unwrap();
    let x = Poly::var(0);
    let y = Poly::var(1);
    let z = Poly::var(2);
    let u = vec![&(&x * &x) * &z];
    let e = vec![&y * &z, Poly::zero(), &x * &x];
    let s = c.spaces();
    let d = c.derivatives();
    assert!(commuting_residual(&s[0], &s[1], &d[0], &[u], Execution::Sequential).unwrap() <= 1e-10);
    assert!(commuting_residual(&s[1], &s[2], &d[1], &[e.clone()], Execution::Sequential).unwrap() <= 1e-10);
    assert!(commuting_residual(&s[2], &s[3], &d[2], &[e], Execution::Sequential).unwrap() <= 1e-10);
}

#[test]
fn infsup_examples() {
    let i3 = DenseMatrix::identity(3, 3);
    let r = compute_infsup(&i3, &i3, &i3).unwrap();
    assert!((r.gamma - 1.0).abs() < 1e-14);
    assert_eq!(r.deflated, 0);

    let b = from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 2.0, 0.0], vec![0.0, 0.0, 0.0]]);
    let r = compute_infsup(&b, &i3, &i3).unwrap();
    assert_eq!(r.gamma_unrestricted, 0.0);
    assert!((r.gamma - 1.0).abs() < 1e-14);
    assert_eq!(r.deflated, 1);

    let singular = from_rows(&[vec![1.0, 1.0, 0.0], vec![1.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]);
    assert!(compute_infsup(&i3, &singular, &i3).is_err());
}

struct MixedPair {
    b: DenseMatrix,
    div: DenseMatrix,
    mass_s: DenseMatrix,
    hdiv: DenseMatrix,
    mass_v: DenseMatrix,
}

fn mixed_pair(n: usize, v: &str) -> MixedPair {
    let m = arc(generate_square_mesh(n, Pattern::Uniform, 1.0).unwrap());
    let s = build_space(&m, &ElementFamily::from_name("face1").unwrap(), BoundaryCondition::None)
        .unwrap();
    let q = build_space(&m, &ElementFamily::from_name(v).unwrap(), BoundaryCondition::None).unwrap();
    let one = Coefficient::identity();
    let b = assemble_form(&q, Op::Identity, &s, Op::Div, &one).unwrap().to_dense();
    let mass_s = assemble_mass(&s).unwrap().to_dense();
    let divdiv = assemble_form(&s, Op::Div, &s, Op::Div, &one).unwrap().to_dense();
    let dg0 = build_space(&m, &ElementFamily::from_name("dg0").unwrap(), BoundaryCondition::None)
        .unwrap();
    let div = assemble_derivative(&s, &dg0).unwrap().to_dense();
    MixedPair {
        b,
        div,
        hdiv: &mass_s + &divdiv,
        mass_s,
        mass_v: assemble_mass(&q).unwrap().to_dense(),
    }
}

#[test]
fn face1_dg0_is_stable() {
    let mut gammas = Vec::new();
    for n in [4, 8, 16] {
        let p = mixed_pair(n, "dg0");
        let g = compute_infsup(&p.b, &p.hdiv, &p.mass_v).unwrap();
        assert_eq!(g.deflated, 0);
        assert!((g.gamma - g.gamma_unrestricted).abs() < 1e-12);
        gammas.push(g.gamma);
    }
    let (lo, hi) = gammas.iter().fold((f64::MAX, 0.0f64), |(a, b), &g| (a.min(g), b.max(g)));
    assert!((hi - lo) / hi < 0.1, "{gammas:?}");

    let p = mixed_pair(4, "dg0");
    let s1 = check_s1(&p.b, &p.div, &p.mass_s, &p.hdiv).unwrap();
    assert!(s1.kernel_divergence_free && s1.holds);
    assert!((s1.gamma1 - 1.0).abs() < 1e-8);
}

#[test]
fn mismatched_pair_fails_s2_only() {
    let p = mixed_pair(4, "dg1");
    let g = compute_infsup(&p.b, &p.hdiv, &p.mass_v).unwrap();
    assert!(g.gamma_unrestricted < 1e-6);
    assert!(g.deflated > 0);
    let s1 = check_s1(&p.b, &p.div, &p.mass_s, &p.hdiv).unwrap();
    assert!(s1.holds && s1.kernel_divergence_free);
}

#[test]
fn zero_coupling_reduces_s1_to_coercivity() {
    let p = mixed_pair(2, "dg0");
    let zero = DenseMatrix::zeros(p.b.nrows(), p.b.ncols());
    let s1 = check_s1(&zero, &p.div, &p.mass_s, &p.hdiv).unwrap();
    assert!(s1.holds);
    assert!(!s1.kernel_divergence_free);
    assert!(s1.gamma1 > 0.0 && s1.gamma1 < 1.0);
}
