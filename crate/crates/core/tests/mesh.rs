use std::collections::HashSet;

use proptest::prelude::*;
use whitney::mesh::{
    generate_annulus_mesh_with_rings, generate_cube_mesh, generate_disk_mesh, generate_square_mesh,
    local_subsimplices, read_mesh, write_mesh, Mesh, Pattern,
};

fn pattern() -> impl Strategy<Value = Pattern> {
    prop_oneof![Just(Pattern::Uniform), Just(Pattern::Crossed)]
}

fn assert_closure(m: &Mesh) {
    for k in 1..=m.dim() {
        let lower: HashSet<&[usize]> = m.entities(k - 1).iter().map(|e| e.as_slice()).collect();
        assert_eq!(lower.len(), m.num_entities(k - 1), "duplicate {}-entities", k - 1);
        for s in m.entities(k) {
            assert!(s.windows(2).all(|w| w[0] < w[1]));
            for face in local_subsimplices(k, k - 1) {
                let f: Vec<usize> = face.iter().map(|&l| s[l]).collect();
                assert!(lower.contains(f.as_slice()), "missing face {f:?} of {s:?}");
            }
        }
    }
}

fn assert_manifold(m: &Mesh) {
    let d = m.dim();
    for (i, c) in m.cofaces_count(d - 1).iter().enumerate() {
        let expected = if m.is_boundary(d - 1, i) { 1 } else { 2 };
        assert_eq!(*c, expected, "facet {i}");
    }
}

/// Boundary edges form closed loops: every vertex has even boundary degree.
fn assert_closed_boundary_2d(m: &Mesh) {
    let mut degree = vec![0usize; m.num_vertices()];
    for (i, e) in m.entities(1).iter().enumerate() {
        if m.is_boundary(1, i) {
            degree[e[0]] += 1;
            degree[e[1]] += 1;
        }
    }
    assert!(degree.iter().all(|d| d % 2 == 0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn square_meshes_are_closed_disks(n in 1usize..12, p in pattern(), side in 0.1f64..10.0) {
        let m = generate_square_mesh(n, p, side).unwrap();
        prop_assert_eq!(m.euler_characteristic(), 1);
        assert_closure(&m);
        assert_manifold(&m);
        assert_closed_boundary_2d(&m);
        let area: f64 = (0..m.num_cells()).map(|c| m.cell_volume(c)).sum();
        prop_assert!((area - side * side).abs() < 1e-12 * side * side);
    }

    #[test]
    fn annuli_have_euler_zero(n in 8usize..24, rings in 1usize..4, ri in 0.1f64..0.9) {
        let m = generate_annulus_mesh_with_rings(n, rings, ri, 1.0).unwrap();
        prop_assert_eq!(m.euler_characteristic(), 0);
        assert_closure(&m);
        assert_manifold(&m);
        assert_closed_boundary_2d(&m);
        for v in m.vertices() {
            let r = v[0].hypot(v[1]);
            prop_assert!(r >= ri - 1e-12 && r <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn round_trip_preserves_meshes(n in 1usize..6, p in pattern()) {
        let m = generate_square_mesh(n, p, 1.0).unwrap();
        let back = read_mesh(&write_mesh(&m)).unwrap();
        prop_assert_eq!(back.entity_counts(), m.entity_counts());
        prop_assert_eq!(back.vertices(), m.vertices());
        prop_assert_eq!(back.cells(), m.cells());
    }

    #[test]
    fn perturbation_keeps_connectivity_and_boundary(n in 2usize..10, seed in any::<u64>()) {
        let m = generate_square_mesh(n, Pattern::Crossed, 1.0).unwrap();
        let amp = 0.2 / n as f64;
        let q = m.perturb_interior(amp, seed).unwrap();
        prop_assert_eq!(q.cells(), m.cells());
        prop_assert_eq!(q.entity_counts(), m.entity_counts());
        for (i, (a, b)) in m.vertices().iter().zip(q.vertices()).enumerate() {
            if m.is_boundary(0, i) {
                prop_assert_eq!(a, b);
            } else {
                prop_assert!((a[0] - b[0]).abs() <= amp && (a[1] - b[1]).abs() <= amp);
            }
        }
        let area: f64 = (0..q.num_cells()).map(|c| q.cell_volume(c)).sum();
        prop_assert!((area - 1.0).abs() < 1e-12);
        let again = m.perturb_interior(amp, seed).unwrap();
        prop_assert_eq!(again.vertices(), q.vertices());
    }
}

#[test]
fn euler_characteristic_up_to_cap() {
    for n in 1..=3 {
        let c = generate_cube_mesh(n).unwrap();
        assert_eq!(c.euler_characteristic(), 1);
        assert_closure(&c);
        assert_manifold(&c);
    }
    for rings in 1..=6 {
        let d = generate_disk_mesh(rings).unwrap();
        assert_eq!(d.euler_characteristic(), 1);
        assert_manifold(&d);
        assert_closed_boundary_2d(&d);
    }
}

#[test]
fn coboundaries_compose_to_zero() {
    let c = generate_cube_mesh(2).unwrap();
    for k in 0..2 {
        let a = c.coboundary(k);
        let b = c.coboundary(k + 1);
        for row in &b {
            for j in 0..a[0].len() {
                let s: i64 = row.iter().zip(&a).map(|(x, r)| x * r[j]).sum();
                assert_eq!(s, 0);
            }
        }
    }
}

#[test]
fn excessive_perturbation_is_rejected() {
    let m = generate_square_mesh(4, Pattern::Uniform, 1.0).unwrap();
    assert!(m.perturb_interior(0.5, 7).is_err());
    assert!(m.perturb_interior(-1.0, 7).is_err());
    assert_eq!(m.perturb_interior(0.0, 7).unwrap().vertices(), m.vertices());
}
