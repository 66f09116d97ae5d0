use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use sbp_core::{
    double_integral_e, make_grid, reduced_kernel_g, solve_ground_state, solve_phi, KernelMatrix, KernelSpec, Problem,
    RadialField, SbpParams, SolveOptions,
};

fn kernels(c: &mut Criterion) {
    let spec = KernelSpec::new(1.0).unwrap();
    c.bench_function("reduced_kernel_g", |b| {
        b.iter(|| reduced_kernel_g(black_box(1.3), black_box(2.1), spec).unwrap())
    });
    for n in [1024, 2048] {
        let grid = make_grid(n, 40.0, 2.0).unwrap();
        let rho = RadialField::from_fn(&grid, |r| (-r * r).exp()).unwrap();
        c.bench_function(&format!("kernel_matrix_build/{n}"), |b| b.iter(|| KernelMatrix::new(&grid, spec)));
        c.bench_function(&format!("solve_phi/{n}"), |b| b.iter(|| solve_phi(&grid, &rho, spec).unwrap()));
        c.bench_function(&format!("double_integral_e/{n}"), |b| {
            b.iter(|| double_integral_e(&grid, &rho, spec).unwrap())
        });
        let pb = Problem::new(SbpParams::new(1.0, 1.0, 1.0, 4.0).unwrap(), &grid).unwrap();
        let u = RadialField::dirichlet_from_fn(&grid, |r| (-r * r / 4.0).exp()).unwrap();
        c.bench_function(&format!("potential_matvec/{n}"), |b| b.iter(|| pb.potential(&u).unwrap()));
    }
}

fn solver(c: &mut Criterion) {
    let grid = make_grid(512, 30.0, 2.0).unwrap();
    let pb = Problem::new(SbpParams::new(1.0, 1.0, 1.0, 4.0).unwrap(), &grid).unwrap();
    let opts = SolveOptions::default();
    let mut group = c.benchmark_group("solver");
    group.sample_size(10);
    group.bench_function("ground_state/512", |b| b.iter(|| solve_ground_state(&pb, &opts, None).unwrap()));
    group.finish();
}

criterion_group!(benches, kernels, solver);
criterion_main!(benches);
