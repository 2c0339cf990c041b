//! One line per acceptance criterion. Pass criterion numbers as arguments to
//! run a subset, e.g. `cargo test -p icetorus-validation --test acceptance -- 1 3`.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use icetorus_core::cluster::{bonds_to_loops, clusters, rc_weight};
use icetorus_core::mcmc::*;
use icetorus_core::observables::{pair_zipper, Zipper};
use icetorus_core::omega;
use icetorus_core::oracle::*;
use icetorus_core::six_vertex::cycle_increment;
use icetorus_core::stats::Estimate;
use icetorus_core::*;

const EXACT: f64 = 1e-9;

type Criterion = (u32, &'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn weights() -> [ModelParams; 3] {
    [
        ModelParams::sqrt3(),
        ModelParams::sqrt2_plus_sqrt2(),
        ModelParams::new(2.0).unwrap(),
    ]
}

fn torus(w: usize, h: usize) -> Torus {
    Torus::new(w, h).unwrap()
}

fn worst(pairs: impl IntoIterator<Item = (f64, f64)>) -> f64 {
    pairs.into_iter().map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

fn bkw() -> Outcome {
    let start = Instant::now();
    let mut dev: f64 = 0.0;
    let mut im: f64 = 0.0;
    for (w, h) in [(2, 2), (4, 2)] {
        for p in weights() {
            let ice = IceEnsemble::new(&torus(w, h), &p, &Limits::default()).unwrap();
            let s = ice.bkw_sum();
            dev = dev.max((s.re - ice.total_weight(Sector::All)).abs());
            im = im.max(s.im.abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        pass: dev < EXACT && im < EXACT && secs < 60.0,
        detail: format!("max |Z - sum w(L)| = {dev:.1e}, max |Im| = {im:.1e}, {secs:.1}s"),
    }
}

fn correlation_identity() -> Outcome {
    let start = Instant::now();
    let t = torus(4, 2);
    let mut tuples: Vec<Vec<Face>> = two_point_faces(&t)
        .into_iter()
        .chain(white_pairs(&t))
        .map(|(a, b)| vec![a, b])
        .collect();
    let quads: Vec<Vec<Face>> = correlation_tuples(&t, 24, 1)
        .into_iter()
        .filter(|f| f.len() == 4)
        .collect();
    let nquads = quads.len();
    tuples.extend(quads);

    let mut dev = BTreeMap::new();
    let mut failing = BTreeMap::new();
    let mut functional: f64 = 0.0;
    for p in weights() {
        let ice = IceEnsemble::new(&t, &p, &Limits::default()).unwrap();
        let bonds = BondEnsemble::new(&t, &p, &Limits::default()).unwrap();
        for sector in [Sector::All, Sector::Zero] {
            for f in &tuples {
                let z = Zipper::halves(t, f).unwrap();
                let spin = ice.spin_correlation(f, sector);
                let d = (spin - bonds.loop_correlation(&z, sector)).abs();
                let e = dev.entry(sector.to_string()).or_insert(0.0f64);
                *e = e.max(d);
                if d > EXACT {
                    *failing.entry(sector.to_string()).or_insert(0usize) += 1;
                }
                if sector == Sector::Zero {
                    functional = functional.max((spin - bonds.zero_sector_loop_correlation(&z)).abs());
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = dev.values().all(|&d| d <= EXACT) && secs < 600.0;
    let per: Vec<String> = dev
        .iter()
        .map(|(s, d)| {
            format!(
                "{s}: max dev {d:.1e}, {} of {} over tolerance",
                failing.get(s).copied().unwrap_or(0),
                3 * tuples.len()
            )
        })
        .collect();
    Outcome {
        pass,
        detail: format!(
            "{} tuples incl. {nquads} four-face; {}; zero-sector noncontractible functional max dev {functional:.1e}; {secs:.1}s",
            tuples.len(),
            per.join("; ")
        ),
    }
}

fn euler_ratio() -> Outcome {
    let mut spread: f64 = 0.0;
    let mut counts = Vec::new();
    for (w, h) in [(2, 2), (4, 2)] {
        let t = torus(w, h);
        for p in weights().into_iter().chain([ModelParams::new(1.5).unwrap()]) {
            let bonds = BondEnsemble::new(&t, &p, &Limits::default()).unwrap();
            let ratios: Vec<f64> = bonds
                .bonds
                .iter()
                .map(|xi| {
                    let l = bonds_to_loops(xi).loop_count() as i32;
                    let s = clusters(xi).net_indicator() as i32;
                    rc_weight(xi, &p) / (p.sqrt_q().powi(l) * p.q.powi(s))
                })
                .collect();
            spread = ratios.iter().map(|r| (r / ratios[0] - 1.0).abs()).fold(spread, f64::max);
            counts.push(ratios.len());
        }
    }
    counts.dedup();
    Outcome {
        pass: spread <= 1e-12,
        detail: format!("bond configurations {counts:?}, max relative spread {spread:.1e}"),
    }
}

fn zero_sector_marginal() -> Outcome {
    let t = torus(4, 2);
    let mut dev: f64 = 0.0;
    let mut atoms = 0;
    for p in weights() {
        let ice = IceEnsemble::new(&t, &p, &Limits::default()).unwrap();
        let bonds = BondEnsemble::new(&t, &p, &Limits::default()).unwrap();
        let pairs = marginal_pairs(&ice, &bonds, Sector::Zero);
        atoms = pairs.len();
        dev = dev.max(worst(pairs));
    }
    Outcome {
        pass: dev <= EXACT,
        detail: format!("{atoms} loop configurations per weight, max atom deviation {dev:.1e}"),
    }
}

fn omega_coupling() -> Outcome {
    let t = torus(4, 2);
    let p = ModelParams::new(2.0).unwrap();
    let lim = Limits::default();
    let ice = IceEnsemble::new(&t, &p, &lim).unwrap();
    let law = omega::OmegaLaw::new(&t, &p, &lim).unwrap();
    let pairs = two_point_faces(&t);
    let conn = worst(
        pairs
            .iter()
            .map(|&(u, u2)| (law.connect_probability(&t, u, u2), ice.spin_correlation(&[u, u2], Sector::Zero))),
    );
    let es = omega::edwards_sokal_deviation(&t, &p, &lim).unwrap();
    let bound = (p.c - 1.0) / (p.c + 1.0);
    let ins = omega::min_insertion_probability(&t, &p, &lim).unwrap();
    Outcome {
        pass: conn <= EXACT && es <= EXACT && ins >= bound - 1e-12,
        detail: format!(
            "{} black pairs, connectivity max dev {conn:.1e}; Edwards-Sokal max dev {es:.1e}; min insertion {ins:.6} vs bound {bound:.6}",
            pairs.len()
        ),
    }
}

fn special_points() -> Outcome {
    let t = torus(4, 2);
    let mut out = Vec::new();
    for (p, signed) in [(ModelParams::new(2.0).unwrap(), false), (ModelParams::sqrt2_plus_sqrt2(), true)] {
        let bonds = BondEnsemble::new(&t, &p, &Limits::default()).unwrap();
        let d = worst(two_point_faces(&t).into_iter().map(|(u, u2)| {
            let (none, sign) = special_point_sides(&bonds, u, u2).unwrap();
            let rhs = two_point_formula(&bonds, u, u2, Sector::All).unwrap();
            (rhs, if signed { sign } else { none })
        }));
        out.push(d);
    }
    Outcome {
        pass: out.iter().all(|&d| d <= EXACT),
        detail: format!(
            "c = 2 vs P(N = N' = 0): max dev {:.1e}; c = sqrt(2+sqrt2) vs signed expectation: max dev {:.1e}",
            out[0], out[1]
        ),
    }
}

struct Check {
    name: String,
    est: Estimate,
    exact: f64,
}

impl Check {
    fn z(&self) -> f64 {
        self.est.z_score(self.exact)
    }
}

fn chain_cfg(t: Torus, p: ModelParams, seed: u64, sector: Sector) -> ChainConfig {
    let mut cfg = ChainConfig::new(t, p);
    cfg.seed = seed;
    cfg.sweeps = 200_000;
    cfg.burn_in = 10_000;
    cfg.thin = 5;
    cfg.chains = 4;
    cfg.sector = sector;
    cfg
}

/// Height differences along the first row direction, `E[D^2] - E[D]^2`
/// with `D` averaged over faces as in the chain estimator.
fn exact_height_variance(ice: &IceEnsemble, d: usize) -> f64 {
    let (mut sq, mut lin, mut z) = (0.0, 0.0, 0.0);
    for i in 0..ice.len() {
        if !ice.zero[i] {
            continue;
        }
        let a = &ice.configs[i];
        let t = a.torus();
        let n = t.face_count() as f64;
        let (mut s2, mut s1) = (0.0, 0.0);
        for f in t.faces() {
            let inc = cycle_increment(a, f, Dir::East, d) as f64;
            s2 += inc * inc;
            s1 += inc;
        }
        sq += ice.weights[i] * s2 / n;
        lin += ice.weights[i] * s1 / n;
        z += ice.weights[i];
    }
    sq / z - (lin / z).powi(2)
}

fn regression_on(w: usize, h: usize) -> (Vec<Check>, Duration) {
    let start = Instant::now();
    let t = torus(w, h);
    let lim = Limits::forced();
    let mut pairs = vec![(t.face(0, 0), t.face(2, 0)), (t.face(0, 0), t.face(1, 1))];
    if h >= 4 {
        pairs.push((t.face(0, 0), t.face(0, 2)));
        pairs.push((t.face(0, 0), t.face(2, 2)));
    }
    let heights: Vec<usize> = (1..=distance_limit(&t)).collect();
    let mut checks = Vec::new();
    for (k, p) in weights().into_iter().enumerate() {
        let ice = IceEnsemble::new(&t, &p, &lim).unwrap();
        let bonds = BondEnsemble::new(&t, &p, &lim).unwrap();
        let seed = 1000 + k as u64;
        let c = format!("{:.4}", p.c);
        let spin = run_spin(
            &chain_cfg(t, p, seed, Sector::Zero),
            &SpinObservables {
                pairs: pairs.clone(),
                height_distances: heights.clone(),
            },
        )
        .unwrap();
        for (j, &(u, u2)) in pairs.iter().enumerate() {
            checks.push(Check {
                name: format!("c={c} spin {u:?}-{u2:?}"),
                est: spin.two_point[j].clone(),
                exact: ice.spin_correlation(&[u, u2], Sector::Zero),
            });
        }
        for (j, &d) in heights.iter().enumerate() {
            checks.push(Check {
                name: format!("c={c} height variance d={d}"),
                est: spin.height_variance[j].clone(),
                exact: exact_height_variance(&ice, d),
            });
        }
        for sector in [Sector::All, Sector::Zero] {
            let run = run_bond(&chain_cfg(t, p, seed, sector), &pairs).unwrap();
            for (j, &(u, u2)) in pairs.iter().enumerate() {
                let z = pair_zipper(t, u, u2).unwrap();
                let exact = match sector {
                    Sector::All => bonds.loop_correlation(&z, Sector::All),
                    Sector::Zero => bonds.zero_sector_loop_correlation(&z),
                };
                checks.push(Check {
                    name: format!("c={c} loop side {sector} {u:?}-{u2:?}"),
                    est: run.two_point[j].clone(),
                    exact,
                });
                checks.push(Check {
                    name: format!("c={c} E[N] {sector} {u:?}-{u2:?}"),
                    est: run.separating[j].clone(),
                    exact: bonds.separating_mean(u, u2, sector).unwrap().0,
                });
            }
        }
    }
    (checks, start.elapsed())
}

fn chain_regression() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (w, h) in [(4, 2), (4, 4)] {
        let (checks, took) = regression_on(w, h);
        let within = checks.iter().filter(|c| c.z() <= 3.0).count();
        let few = checks.iter().filter(|c| c.est.batches < 32).count();
        let worst = checks.iter().max_by(|a, b| a.z().total_cmp(&b.z())).unwrap();
        let ok = within == checks.len() && few == 0 && took.as_secs_f64() < 300.0;
        pass &= ok;
        parts.push(format!(
            "({w},{h}): {within}/{} within 3 SE, worst {} z = {:.2} ({:.4} vs {:.4}), {:.0}s",
            checks.len(),
            worst.name,
            worst.z(),
            worst.est.mean,
            worst.exact,
            took.as_secs_f64()
        ));
        for c in checks.iter().filter(|c| c.z() > 3.0 || c.est.batches < 32) {
            parts.push(format!(
                "  out: {} est {:.5} +- {:.5} exact {:.5} batches {}",
                c.name, c.est.mean, c.est.stderr, c.exact, c.est.batches
            ));
        }
    }
    Outcome {
        pass,
        detail: parts.join("; "),
    }
}

/// Successive estimates may move against `direction` by at most two
/// combined standard errors.
fn monotone(est: &[Estimate], direction: f64) -> bool {
    est.windows(2).all(|w| {
        let se = (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt();
        direction * (w[1].mean - w[0].mean) >= -2.0 * se
    })
}

fn show(ds: &[usize], est: &[Estimate]) -> String {
    ds.iter()
        .zip(est)
        .map(|(d, e)| format!("{d}:{:.4}+-{:.4}", e.mean, e.stderr))
        .collect::<Vec<_>>()
        .join(" ")
}

fn asymptotic_trends() -> Outcome {
    let start = Instant::now();
    let t = torus(64, 64);
    let mut cfg = ChainConfig::new(t, ModelParams::new(2.0).unwrap());
    cfg.seed = 64;
    cfg.sweeps = 1_000_000;
    cfg.burn_in = 100_000;
    cfg.thin = 100;
    let ds = [2, 4, 8, 16];
    let hs = [4, 8, 16];
    let pairs: Vec<(Face, Face)> = ds.iter().map(|&d| horizontal_pair(&t, d)).collect();
    cfg.sector = Sector::Zero;
    let spin = run_spin(
        &cfg,
        &SpinObservables {
            pairs: pairs.clone(),
            height_distances: hs.to_vec(),
        },
    )
    .unwrap();
    cfg.sector = Sector::All;
    let bond = run_bond(&cfg, &pairs).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let a = monotone(&spin.two_point, -1.0);
    let b = monotone(&spin.height_variance, 1.0);
    let c = monotone(&bond.separating, 1.0);
    let batches = spin
        .two_point
        .iter()
        .chain(&spin.height_variance)
        .chain(&bond.separating)
        .all(|e| e.batches >= 32);
    Outcome {
        pass: a && b && c && batches && secs < 1800.0,
        detail: format!(
            "spin two-point {} [{}]; Var[h] {} [{}]; E[N] {} [{}]; {secs:.0}s",
            show(&ds, &spin.two_point),
            if a { "decreasing" } else { "not decreasing" },
            show(&hs, &spin.height_variance),
            if b { "increasing" } else { "not increasing" },
            show(&ds, &bond.separating),
            if c { "increasing" } else { "not increasing" },
        ),
    }
}

fn cli_runs(dir: &Path) -> Vec<(i32, Vec<u8>)> {
    let p = |name: &str| dir.join(name).to_string_lossy().into_owned();
    let runs: Vec<Vec<String>> = vec![
        vec!["verify".into(), "--size".into(), "4x2".into(), "--c".into(), "sqrt3".into(), "--out".into(), p("verify.jsonl")],
        vec!["verify".into(), "--size".into(), "2x2".into(), "--c".into(), "1.8".into()],
        "twopoint --size 8x8 --c 2 --seed 7 --sweeps 3000 --chains 2 --threads 2 --distances 2,4"
            .split(' ')
            .map(String::from)
            .chain(["--out".into(), p("twopoint.csv")])
            .collect(),
        "twopoint --size 8x8 --c 1.5 --seed 7 --sweeps 2000 --format json --distances 2"
            .split(' ')
            .map(String::from)
            .collect(),
        "heightvar --size 8x8 --seed 3 --sweeps 3000 --distances 1,2"
            .split(' ')
            .map(String::from)
            .chain(["--out".into(), p("heightvar.csv")])
            .collect(),
        "loops --size 8x4 --seed 5 --sweeps 3000 --sector zero --format json --distances 2,4"
            .split(' ')
            .map(String::from)
            .chain(["--out".into(), p("loops.json")])
            .collect(),
    ];
    runs.into_iter()
        .map(|args| {
            let mut buf = Vec::new();
            let code = icetorus_cli::run(std::iter::once("icetorus".to_string()).chain(args), &mut buf);
            (code, buf)
        })
        .collect()
}

fn dir_contents(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

fn determinism() -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ra = cli_runs(a.path());
    let rb = cli_runs(b.path());
    // output paths are echoed in the manifests, so compare them relative
    // to their directory
    let norm = |dir: &Path, m: BTreeMap<String, Vec<u8>>| -> BTreeMap<String, Vec<u8>> {
        let prefix = dir.to_string_lossy().into_owned();
        m.into_iter()
            .map(|(k, v)| (k, String::from_utf8(v).unwrap().replace(&prefix, "<dir>").into_bytes()))
            .collect()
    };
    let fa = norm(a.path(), dir_contents(a.path()));
    let fb = norm(b.path(), dir_contents(b.path()));
    let codes_ok = ra.iter().all(|(c, _)| *c == 0);
    let stdout_same = ra == rb;
    let files_same = fa == fb && fa.values().all(|v| !v.is_empty());
    Outcome {
        pass: codes_ok && stdout_same && files_same,
        detail: format!(
            "{} runs, exit codes {:?}, {} files ({}), stdout {}, files {}",
            ra.len(),
            ra.iter().map(|r| r.0).collect::<Vec<_>>(),
            fa.len(),
            fa.keys().cloned().collect::<Vec<_>>().join(", "),
            if stdout_same { "identical" } else { "differ" },
            if files_same { "identical" } else { "differ" }
        ),
    }
}

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "BKW partition identity", bkw),
        (2, "spin/loop correlation identity", correlation_identity),
        (3, "Euler relation for bond weights", euler_ratio),
        (4, "zero-sector loop marginal", zero_sector_marginal),
        (5, "omega coupling", omega_coupling),
        (6, "special-point branches", special_points),
        (7, "chain regression against enumeration", chain_regression),
        (8, "asymptotic trends on 64x64", asymptotic_trends),
        (9, "CLI determinism", determinism),
    ];
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for (n, name, f) in criteria {
        if !wanted.is_empty() && !wanted.contains(&n) {
            continue;
        }
        let o = f();
        let mark = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {n} {mark} {name}: {}", o.detail);
        std::io::stdout().flush().unwrap();
        if !o.pass {
            failed.push(n);
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
