use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use streamcvi::datagen::gen_s2;
use streamcvi::engine::{run, RunConfig};
use streamcvi::par::{map_seeds, Execution};
use streamcvi::verify::run_trial;

fn seed_sweep(c: &mut Criterion) {
    let seeds: Vec<u64> = (0..16).collect();
    let streams: Vec<_> = seeds.iter().map(|&s| gen_s2(s)).collect();
    let cfg = RunConfig::default();
    let mut group = c.benchmark_group("s2_oec_sweep");
    group.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &exec| {
            b.iter(|| {
                map_seeds(&seeds, exec, |s| {
                    let st = &streams[s as usize];
                    run(&st.points, &st.change_events, &cfg).unwrap().final_k
                })
            })
        });
    }
    group.finish();
}

fn verify_trials(c: &mut Criterion) {
    let seeds: Vec<u64> = (0..64).collect();
    let mut group = c.benchmark_group("verify_trials");
    group.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &exec| {
            b.iter(|| map_seeds(&seeds, exec, |s| run_trial(s).unwrap().worst))
        });
    }
    group.finish();
}

criterion_group!(benches, seed_sweep, verify_trials);
criterion_main!(benches);
