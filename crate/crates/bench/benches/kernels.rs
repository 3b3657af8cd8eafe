use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use shadowvqs::estimator::estimate_nu;
use shadowvqs::hamiltonians::heisenberg;
use shadowvqs::measure::{build_derandomized, LdfGrouping};
use shadowvqs::vqs::assemble_mv;
use shadowvqs::{
    AnsatzSpec, Axis, DerandomizationParams, EvolutionConfig, EvolutionMode, PauliString, RandomSource, StateVector,
    Strategy,
};

fn pauli_algebra(c: &mut Criterion) {
    let a = PauliString::parse("XYZIXYZIXYZI").unwrap();
    let b = PauliString::parse("ZZXYIIXYZZXY").unwrap();
    c.bench_function("pauli_multiply_12", |bch| bch.iter(|| black_box(&a).multiply(black_box(&b)).unwrap()));
}

fn state_kernels(c: &mut Criterion) {
    let mut state = StateVector::zero(13).unwrap();
    for q in 0..13 {
        state.apply_hadamard(q).unwrap();
    }
    c.bench_function("rotation_13q", |bch| {
        bch.iter(|| state.apply_rotation(black_box(6), Axis::Y, black_box(0.3)).unwrap())
    });
    let basis = PauliString::parse("XYZXYZXYZXYZX").unwrap();
    let mut rng = RandomSource::new(1);
    c.bench_function("sample_100_shots_13q", |bch| {
        bch.iter(|| state.sample_in_basis(black_box(&basis), 100, &mut rng).unwrap())
    });
}

fn plan_builders(c: &mut Criterion) {
    let ext = heisenberg().extend_with_x(0.5).unwrap();
    c.bench_function("derandomize_heisenberg_120", |bch| {
        bch.iter(|| build_derandomized(black_box(&ext), 120, DerandomizationParams::default()).unwrap())
    });
    c.bench_function("ldf_heisenberg", |bch| bch.iter(|| LdfGrouping::new(black_box(&ext)).unwrap()));
}

fn estimation(c: &mut Criterion) {
    let spec = AnsatzSpec::random(6, 4, &mut RandomSource::new(0)).unwrap();
    let params: Vec<f64> = (0..spec.num_params()).map(|i| 0.1 * i as f64).collect();
    let ext = heisenberg().extend_with_x(0.5).unwrap();
    let plan = build_derandomized(&ext, 120, DerandomizationParams::default()).unwrap();
    let state = spec.prepare_v_state(&params, 3, -std::f64::consts::FRAC_PI_2).unwrap();
    let mut rng = RandomSource::new(2);
    c.bench_function("estimate_v_derand_120", |bch| {
        bch.iter(|| estimate_nu(black_box(&state), &ext, &plan, &mut rng, false).unwrap())
    });
    let mut config = EvolutionConfig::new(EvolutionMode::Ite, heisenberg(), Strategy::Derandomization);
    config.shots_total = 120;
    c.bench_function("assemble_mv_heisenberg_derand", |bch| {
        bch.iter(|| assemble_mv(&spec, black_box(&params), &config, 0).unwrap())
    });
}

criterion_group!(benches, pauli_algebra, state_kernels, plan_builders, estimation);
criterion_main!(benches);
