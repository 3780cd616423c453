use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use nlkernel::nlops::{Grid1D, Stencil};
use nlkernel::regression::ResponseSet;
use nlkernel_bench::{sample_dataset, sample_model};

fn stencil_apply(c: &mut Criterion) {
    let model = sample_model();
    for n in [100usize, 1000] {
        let grid = Grid1D::periodic(0.0, 1.0, n).unwrap();
        let stencil = Stencil::new(&model, grid.h());
        let u: Vec<f64> = grid.free_coords().iter().map(|x| (6.0 * x).sin()).collect();
        c.bench_function(&format!("stencil_apply_n{n}"), |b| {
            b.iter(|| stencil.apply(&grid, black_box(&u), None).unwrap())
        });
    }
}

fn assemble_and_lambda_min(c: &mut Criterion) {
    let model = sample_model();
    let grid = Grid1D::periodic(0.0, 1.0, 200).unwrap();
    let stencil = Stencil::new(&model, grid.h());
    c.bench_function("assemble_lambda_min_n200", |b| {
        b.iter(|| stencil.assemble(black_box(&grid)).unwrap().lambda_min())
    });
}

fn gram_loss(c: &mut Criterion) {
    let data = sample_dataset(200);
    let gram = ResponseSet::build(&data, 20, 0.5).unwrap().gram();
    let theta = vec![1.0; 21];
    c.bench_function("gram_loss_m20_n200", |b| b.iter(|| gram.loss(black_box(&theta))));
}

criterion_group!(benches, stencil_apply, assemble_and_lambda_min, gram_loss);
criterion_main!(benches);
