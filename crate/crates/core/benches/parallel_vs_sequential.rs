use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use dnnf_lab::cnf::{self, Cnf};
use dnnf_lab::compile::grid_junction_diagram_with;
use dnnf_lab::diagram;
use dnnf_lab::formula::{psi, vc};
use dnnf_lab::graph::{grid, width_min_with, OrderSearch, WidthMode, EXHAUSTIVE_ORDER_CAP};
use dnnf_lab::lowerbound::min_obdd_with;
use dnnf_lab::par::Exec;
use dnnf_lab::{Var, DEFAULT_BRUTE_FORCE_CAP as CAP};

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn universe(phi: &Cnf) -> Vec<Var> {
    phi.vars().into_iter().collect()
}

fn truth_tables(c: &mut Criterion) {
    let phi = psi(&grid(3).unwrap().graph).unwrap();
    let u = universe(&phi);
    let b = grid_junction_diagram_with(Exec::Sequential, 3).unwrap();
    let ub: Vec<Var> = b.vars().iter().cloned().collect();
    let mut g = c.benchmark_group("truth_table");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new("cnf psi(grid3)", name), |bn| {
            bn.iter(|| cnf::truth_table(exec, black_box(&phi), &u, CAP).unwrap())
        });
        g.bench_function(BenchmarkId::new("junction diagram n=3", name), |bn| {
            bn.iter(|| diagram::truth_table(exec, black_box(&b), &ub, CAP).unwrap())
        });
    }
    g.finish();
}

fn min_obdd(c: &mut Criterion) {
    let phi = vc(&grid(2).unwrap().graph).unwrap();
    let sampled = OrderSearch::Sampled { count: 2000, seed: 7 };
    let mut g = c.benchmark_group("min_obdd");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new("vc(grid2) exhaustive", name), |bn| {
            bn.iter(|| min_obdd_with(exec, black_box(&phi), OrderSearch::Exhaustive, EXHAUSTIVE_ORDER_CAP, CAP).unwrap())
        });
        g.bench_function(BenchmarkId::new("vc(grid2) 2000 samples", name), |bn| {
            bn.iter(|| min_obdd_with(exec, black_box(&phi), sampled, EXHAUSTIVE_ORDER_CAP, CAP).unwrap())
        });
    }
    g.finish();
}

fn widths(c: &mut Criterion) {
    let gr = grid(2).unwrap().graph;
    let mut g = c.benchmark_group("width_min");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new("lsim grid2", name), |bn| {
            bn.iter(|| width_min_with(exec, black_box(&gr), WidthMode::Lsim, OrderSearch::Exhaustive).unwrap())
        });
    }
    g.finish();
}

fn junction(c: &mut Criterion) {
    let mut g = c.benchmark_group("grid_junction");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new("n=4", name), |bn| {
            bn.iter(|| grid_junction_diagram_with(exec, black_box(4)).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, truth_tables, min_obdd, widths, junction);
criterion_main!(benches);
