//! Timings of the numerical kernels and of one full spectrum.

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use num_complex::Complex64;
use sixq::functional::q_matrix;
use sixq::lattice::{enumerate_sector, ModelParams};
use sixq::numerics::{eig_dense, poly_roots, CMatrix, CPoly};
use sixq::qgrouprep::build_intertwiner;
use sixq::spectra::{compute_spectrum, SpectrumConfig};
use sixq::vertexops::MuParam;

fn kernels(c: &mut Criterion) {
    let a = CMatrix::from_fn(70, 70, |i, j| {
        Complex64::new(
            ((i * 7 + j * 3) % 11) as f64 - 5.0,
            ((i + 2 * j) % 5) as f64,
        )
    });
    c.bench_function("eig_dense 70x70", |b| {
        b.iter(|| eig_dense(black_box(&a)).unwrap())
    });

    let roots: Vec<Complex64> = (0..12)
        .map(|k| Complex64::from_polar(0.6 + 0.1 * k as f64, 1.7 * k as f64))
        .collect();
    let p = CPoly::from_roots(&roots);
    c.bench_function("poly_roots degree 12", |b| {
        b.iter(|| poly_roots(black_box(&p)).unwrap())
    });

    let params = ModelParams::new(3, 8).unwrap();
    let sector = enumerate_sector(&params, 0).unwrap();
    let mu = MuParam::new(Complex64::new(1.3, 0.0));
    c.bench_function("Q matrix N=3 M=8 2Sz=0", |b| {
        b.iter(|| q_matrix(mu, black_box(Complex64::new(0.4, 0.3)), &sector, &params))
    });

    let p3 = ModelParams::new(3, 2).unwrap();
    let nu = MuParam::new(Complex64::from_polar(0.8, 0.4));
    c.bench_function("intertwiner N=3", |b| {
        b.iter(|| build_intertwiner(black_box(Complex64::new(0.7, 0.2)), mu, nu, &p3).unwrap())
    });

    let p6 = ModelParams::new(3, 6).unwrap();
    let cfg = SpectrumConfig::default();
    let mut g = c.benchmark_group("spectrum");
    g.sample_size(10);
    g.bench_function("N=3 M=6", |b| {
        b.iter(|| compute_spectrum(&p6, &cfg, None).unwrap())
    });
    g.finish();
}

criterion_group!(benches, kernels);
criterion_main!(benches);
