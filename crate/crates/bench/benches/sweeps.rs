use criterion::{criterion_group, criterion_main, Criterion};
use icetorus_core::cluster::BondConfig;
use icetorus_core::mcmc::initial_spins;
use icetorus_core::mcmc::kernels::{BondDriver, SpinDriver};
use icetorus_core::oracle::{BondEnsemble, IceEnsemble, Limits};
use icetorus_core::{ModelParams, Sector, Torus};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn spin_sweep(c: &mut Criterion) {
    let t = Torus::new(64, 64).unwrap();
    let p = ModelParams::new(2.0).unwrap();
    let mut k = SpinDriver::new(&initial_spins(t), &p);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    c.bench_function("spin sweep 64x64", |b| {
        b.iter(|| {
            for _ in 0..t.face_count() {
                k.step(&mut rng);
            }
            k.band(&mut rng)
        })
    });
}

fn bond_sweep(c: &mut Criterion) {
    let t = Torus::new(64, 64).unwrap();
    for (name, p, sector) in [
        ("bond sweep 64x64 c=2", ModelParams::new(2.0).unwrap(), Sector::All),
        ("bond sweep 64x64 c=sqrt3", ModelParams::sqrt3(), Sector::All),
        ("bond sweep 64x64 c=2 zero", ModelParams::new(2.0).unwrap(), Sector::Zero),
    ] {
        let mut k = BondDriver::new(&BondConfig::empty(t), &p, sector);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 * t.vertex_count() {
            k.step(&mut rng);
        }
        c.bench_function(name, |b| {
            b.iter(|| {
                for _ in 0..t.vertex_count() {
                    k.step(&mut rng);
                }
            })
        });
    }
}

fn enumeration(c: &mut Criterion) {
    let p = ModelParams::new(2.0).unwrap();
    let t = Torus::new(4, 4).unwrap();
    c.bench_function("ice enumeration 4x4", |b| {
        b.iter(|| IceEnsemble::new(&t, &p, &Limits::forced()).unwrap())
    });
    let t = Torus::new(4, 2).unwrap();
    c.bench_function("bond enumeration 4x2", |b| {
        b.iter(|| BondEnsemble::new(&t, &p, &Limits::default()).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = spin_sweep, bond_sweep, enumeration
}
criterion_main!(benches);
