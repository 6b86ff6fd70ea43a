use criterion::{criterion_group, criterion_main, Criterion};
use sweepvol::sweep::build_psv_into;
use sweepvol::SweepConfig;
use sweepvol_bench::sweep_fixture;

fn sweep_modes(c: &mut Criterion) {
    // Quarter-size grid so a run fits comfortably in memory.
    let mut fx = sweep_fixture(48, 156, 144, 96, 32, 7).expect("fixture");
    let modes = [
        ("ps", SweepConfig::classic(32)),
        ("d-ps", SweepConfig::depthwise(32, 1.0).with_shift_ratio(1.0 / 3.0)),
        ("group-ps", SweepConfig::grouped(32)),
    ];
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    for (name, cfg) in &modes {
        group.bench_function(*name, |b| {
            b.iter(|| build_psv_into(&fx.left, &fx.right, &fx.rig, cfg, &mut fx.volume).expect("sweep"))
        });
    }
    group.finish();
}

criterion_group!(benches, sweep_modes);
criterion_main!(benches);
