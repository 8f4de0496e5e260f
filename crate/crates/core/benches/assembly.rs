//! Sequential against data-parallel execution for the cell loops.
//!
//! Without the `parallel` feature both variants run sequentially.

use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use whitney::complex::{check_commuting_with, DiscreteComplex, Variant2d};
use whitney::elasticity::AwSpace;
use whitney::elements::ElementFamily;
use whitney::mesh::{generate_cube_mesh, generate_square_mesh, Pattern};
use whitney::par::Execution;
use whitney::spaces::{
    assemble_derivative_with, assemble_mass_with, assemble_stiffness_with, build_space,
    BoundaryCondition, Coefficient, Op,
};

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn family(name: &str) -> ElementFamily {
    ElementFamily::from_name(name).unwrap()
}

fn forms(c: &mut Criterion) {
    let mesh = Arc::new(generate_square_mesh(32, Pattern::Crossed, 1.0).unwrap());
    let p3 = build_space(&mesh, &family("lagrange3"), BoundaryCondition::None).unwrap();
    let e2 = build_space(&mesh, &family("edge2"), BoundaryCondition::None).unwrap();
    let d1 = build_space(&mesh, &family("dg1"), BoundaryCondition::None).unwrap();
    let cube = Arc::new(generate_cube_mesh(6).unwrap());
    let e3 = build_space(&cube, &family("edge1_3d"), BoundaryCondition::None).unwrap();

    let mut g = c.benchmark_group("assembly");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::new("lagrange3_stiffness", name), &exec, |b, &e| {
            b.iter(|| assemble_stiffness_with(black_box(&p3), Op::Grad, &Coefficient::identity(), e).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("edge2_mass", name), &exec, |b, &e| {
            b.iter(|| assemble_mass_with(black_box(&e2), e).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("edge2_rot", name), &exec, |b, &e| {
            b.iter(|| assemble_derivative_with(black_box(&e2), &d1, e).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("edge1_3d_curl_curl", name), &exec, |b, &e| {
            b.iter(|| assemble_stiffness_with(black_box(&e3), Op::Curl, &Coefficient::identity(), e).unwrap())
        });
    }
    g.finish();
}

fn audits(c: &mut Criterion) {
    let mesh = Arc::new(generate_square_mesh(8, Pattern::Crossed, 1.0).unwrap());
    let mut g = c.benchmark_group("audits");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::new("commuting_order2", name), &exec, |b, &e| {
            b.iter(|| {
                let cx = DiscreteComplex::new_with(
                    DiscreteComplex::de_rham_2d(&mesh, Variant2d::Edge, 2, BoundaryCondition::None)
                        .unwrap()
                        .spaces()
                        .to_vec(),
                    e,
                )
                .unwrap();
                check_commuting_with(&cx, 3, 1e-10, e).unwrap()
            })
        });
        g.bench_with_input(BenchmarkId::new("aw_space", name), &exec, |b, &e| {
            b.iter(|| AwSpace::new_with(black_box(&mesh), e).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, forms, audits);
criterion_main!(benches);
