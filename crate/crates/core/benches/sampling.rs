use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use transpol::greens::{local_solution_unbounded, KernelMethod};
use transpol::spectral::{CosineBasis, GlobalBounded};
use transpol::{make_grid, Execution, InitialProfile, ModelParams, PointSolution, SpatialDomain};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn series(c: &mut Criterion) {
    let p = ModelParams::paper_2015();
    let dom = SpatialDomain::bounded(-1.0, 1.0).unwrap();
    let prof = InitialProfile::centered_bump(ModelParams::PAPER_2015_P0).unwrap();
    let sol = GlobalBounded::new(&p, &dom, &prof, CosineBasis::default(), 64).unwrap();
    let grid = make_grid(&dom, &p, 201, 201).unwrap();
    let mut g = c.benchmark_group("global_bounded_201");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| sol.sample(&grid, exec)));
    }
    g.finish();
}

fn kernel(c: &mut Criterion) {
    let p = ModelParams::paper_2015();
    let dom = SpatialDomain::unbounded(3.0).unwrap();
    let prof = InitialProfile::centered_bump(ModelParams::PAPER_2015_P0).unwrap();
    let grid = make_grid(&dom, &p, 101, 61).unwrap();
    let method = KernelMethod::GaussHermite { order: 64 };
    let mut g = c.benchmark_group("local_unbounded_101");
    g.sample_size(20);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| local_solution_unbounded(&p, &prof, &grid, method, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, series, kernel);
criterion_main!(benches);
