use std::hint::black_box;
use std::sync::Arc;

use breuilkit::admissible::{enumerate_admissible, Sweep, TypeTau};
use breuilkit::breuil::flat::ExtOracle;
use breuilkit::rank1::Rank1Module;
use breuilkit::rank2::solve_transport;
use breuilkit::{Fq, TameTower, TruncPoly};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn e(l: u32) -> Arc<TameTower> {
    Arc::new(TameTower::eprime(l).unwrap())
}

fn transport(c: &mut Criterion) {
    let mut g = c.benchmark_group("transport");
    for l in [3u32, 5] {
        let t = e(l);
        let ring = t.ring();
        let q = t.field().size();
        // fixed pseudo-random T0; H = u^s T0 - u^r T0^l is solvable by construction
        let t0 = TruncPoly((0..ring.len).map(|i| Fq(((i * 7 + 3) as u32) % q)).collect());
        let (r, s) = (l - 1, 2 * (l - 1));
        let h = ring.sub(&ring.shift_up(&t0, s as usize), &ring.shift_up(&ring.frobenius(&t0), r as usize));
        g.bench_with_input(BenchmarkId::from_parameter(l), &h, |b, h| {
            b.iter(|| solve_transport(&t, black_box(h), r, s, Fq::ONE).unwrap())
        });
    }
    g.finish();
}

fn admissible(c: &mut Criterion) {
    let mut g = c.benchmark_group("admissible");
    g.sample_size(10);
    let t = e(3);
    let tau = TypeTau::new(3, 2).unwrap();
    g.bench_function("closed_form_l3", |b| b.iter(|| enumerate_admissible(&t, black_box(&tau)).unwrap()));
    g.bench_function("sweep_build_l3", |b| b.iter(|| Sweep::new(&t).unwrap()));
    let sweep = Sweep::new(&t).unwrap();
    g.bench_function("sweep_filter_l3", |b| b.iter(|| sweep.filter(black_box(&tau))));
    g.finish();
}

fn ext_oracle(c: &mut Criterion) {
    let mut g = c.benchmark_group("ext_oracle");
    g.sample_size(10);
    let t = e(3);
    let sub = Rank1Module::eprime(&t, 1, 1, 0).unwrap().to_breuil();
    let quot = Rank1Module::eprime(&t, 3, 2, 1).unwrap().to_breuil();
    g.bench_function("rank1_pair_l3", |b| {
        b.iter(|| ExtOracle::new(black_box(&sub), &quot).unwrap().dim())
    });
    g.finish();
}

criterion_group!(benches, transport, admissible, ext_oracle);
criterion_main!(benches);
