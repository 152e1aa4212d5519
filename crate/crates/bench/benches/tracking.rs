use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mvot_bench::{grid_sequence, ready_tracker};
use mvot_core::tracker::TrackerConfig;

// Each iteration tracks one 640x480 frame; the shared stage dominates for small N.
fn bench_frame(c: &mut Criterion) {
    let mut group = c.benchmark_group("track_frame_640x480");
    group.sample_size(10);
    for n in [1usize, 8, 32] {
        let (seq, boxes) = grid_sequence(n, 640, 480);
        let frame = seq.frames[1].to_tensor();
        let mut tracker = ready_tracker(&seq, &boxes, TrackerConfig::default());
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| tracker.track_frame(&frame).unwrap())
        });
    }
    group.finish();
}

criterion_group!(tracking, bench_frame);
criterion_main!(tracking);
