//! Exhaustive enumeration on small tori and the identity suite built on it.

use std::collections::BTreeMap;
use std::time::Instant;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::{bonds_to_loops, clusters, rc_weight, BondConfig};
use crate::error::{Error, Result};
use crate::geometry::{Color, Face, Torus};
use crate::loops::{
    expand_resolutions, loop_measure_weight, oriented_weight, zero_sector_weight,
    Pairing, UnorientedLoopConfig,
};
use crate::observables::{pair_zipper, product_rho, rho_of_loop, product_rho_zero_sector, separating_counts_by_flux, Zipper};
use crate::omega;
use crate::six_vertex::{config_weight, height_field, sector_increments, ArrowConfig, IPower, ModelParams};

pub const TOLERANCE: f64 = 1e-9;

/// Which measure an exact expectation is taken under.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sector {
    /// All ice configurations, `mu_n` and `phi_n`.
    All,
    /// Configurations with globally defined spins, `mu0_n` and `phi0_n`.
    Zero,
}

impl std::str::FromStr for Sector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Sector> {
        match s {
            "all" => Ok(Sector::All),
            "zero" => Ok(Sector::Zero),
            _ => Err(Error::Parse(format!("unknown sector {s:?}"))),
        }
    }
}

impl std::fmt::Display for Sector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Sector::All => "all",
            Sector::Zero => "zero",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub max_edges: usize,
    pub max_black_edges: usize,
    pub force: bool,
}

impl Default for Limits {
    fn default() -> Limits {
        Limits {
            max_edges: 20,
            max_black_edges: 16,
            force: false,
        }
    }
}

impl Limits {
    pub fn forced() -> Limits {
        Limits {
            force: true,
            ..Limits::default()
        }
    }

    fn check_arrows(&self, t: &Torus) -> Result<()> {
        if !self.force && t.edge_count() > self.max_edges {
            return Err(Error::SizeCap {
                what: "arrow enumeration",
                needed: t.edge_count(),
                unit: "edges",
                cap: self.max_edges,
            });
        }
        Ok(())
    }

    fn check_bonds(&self, t: &Torus) -> Result<()> {
        if !self.force && t.black_edge_count() > self.max_black_edges {
            return Err(Error::SizeCap {
                what: "bond enumeration",
                needed: t.black_edge_count(),
                unit: "black edges",
                cap: self.max_black_edges,
            });
        }
        Ok(())
    }
}

struct Backtrack<'a> {
    t: &'a Torus,
    ins: Vec<u8>,
    outs: Vec<u8>,
    bits: Vec<bool>,
}

impl Backtrack<'_> {
    fn ends(&self, e: usize) -> (usize, usize) {
        let v = e / 2;
        let (x, y) = self.t.vertex_xy(crate::geometry::Vertex(v));
        let w = if e.is_multiple_of(2) {
            self.t.vertex(x as isize + 1, y as isize)
        } else {
            self.t.vertex(x as isize, y as isize + 1)
        };
        (v, w.0)
    }

    fn assign(&mut self, e: usize, b: bool) -> bool {
        let (a, c) = self.ends(e);
        let (from, to) = if b { (a, c) } else { (c, a) };
        self.outs[from] += 1;
        self.ins[to] += 1;
        self.bits[e] = b;
        self.outs[from] <= 2 && self.ins[to] <= 2
    }

    fn undo(&mut self, e: usize, b: bool) {
        let (a, c) = self.ends(e);
        let (from, to) = if b { (a, c) } else { (c, a) };
        self.outs[from] -= 1;
        self.ins[to] -= 1;
    }

    fn run(&mut self, e: usize, out: &mut Vec<ArrowConfig>) {
        if e == self.bits.len() {
            out.push(ArrowConfig::from_bits(*self.t, self.bits.clone()).expect("sized"));
            return;
        }
        for b in [false, true] {
            if self.assign(e, b) {
                self.run(e + 1, out);
            }
            self.undo(e, b);
        }
    }
}

/// Every ice configuration, in lexicographic order of the edge bits (edge 0
/// most significant, `false` before `true`).
pub fn enumerate_ice(t: &Torus, limits: &Limits) -> Result<Vec<ArrowConfig>> {
    limits.check_arrows(t)?;
    let n = t.edge_count();
    let k = n.min(6);
    let chunks: Vec<Vec<ArrowConfig>> = (0..1u32 << k)
        .into_par_iter()
        .map(|prefix| {
            let mut bt = Backtrack {
                t,
                ins: vec![0; t.vertex_count()],
                outs: vec![0; t.vertex_count()],
                bits: vec![false; n],
            };
            let mut out = Vec::new();
            let mut ok = true;
            for e in 0..k {
                let b = prefix >> (k - 1 - e) & 1 == 1;
                ok &= bt.assign(e, b);
            }
            if ok {
                bt.run(k, &mut out);
            }
            out
        })
        .collect();
    Ok(chunks.into_iter().flatten().collect())
}

/// Weighted ice configurations with their sectors.
#[derive(Clone, Debug)]
pub struct IceEnsemble {
    pub params: ModelParams,
    pub configs: Vec<ArrowConfig>,
    pub weights: Vec<f64>,
    pub zero: Vec<bool>,
}

impl IceEnsemble {
    pub fn new(t: &Torus, params: &ModelParams, limits: &Limits) -> Result<IceEnsemble> {
        let configs = enumerate_ice(t, limits)?;
        let weights = configs
            .iter()
            .map(|a| config_weight(a, params))
            .collect::<Result<Vec<_>>>()?;
        let zero = configs
            .iter()
            .map(|a| sector_increments(a).map(|s| s.is_zero()))
            .collect::<Result<Vec<_>>>()?;
        Ok(IceEnsemble {
            params: *params,
            configs,
            weights,
            zero,
        })
    }

    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn in_sector(&self, i: usize, sector: Sector) -> bool {
        sector == Sector::All || self.zero[i]
    }

    pub fn total_weight(&self, sector: Sector) -> f64 {
        (0..self.len())
            .filter(|&i| self.in_sector(i, sector))
            .map(|i| self.weights[i])
            .sum()
    }

    /// `E[prod sigma(f)]`, averaged over the sign of the base face.
    pub fn spin_correlation(&self, faces: &[Face], sector: Sector) -> f64 {
        let mut num = Complex64::new(0.0, 0.0);
        let mut den = 0.0;
        for i in 0..self.len() {
            if !self.in_sector(i, sector) {
                continue;
            }
            let hf = height_field(&self.configs[i], 1).expect("ice");
            let p = faces
                .iter()
                .fold(IPower::ONE, |acc, &f| acc * IPower::new(hf.get(f) as i64));
            // the base sign -1 shifts every height by -2
            let sym = if faces.len().is_multiple_of(2) { p.to_complex() } else { Complex64::new(0.0, 0.0) };
            num += sym * self.weights[i];
            den += self.weights[i];
        }
        let v = num / den;
        assert!(v.im.abs() < 1e-12, "spin correlation has imaginary part {}", v.im);
        v.re
    }

    /// Complex loop mass per unoriented configuration, summed over the
    /// oriented resolutions of the ice configurations in the sector.
    pub fn loop_marginal(&self, sector: Sector) -> BTreeMap<Vec<Pairing>, Complex64> {
        let mut m: BTreeMap<Vec<Pairing>, Complex64> = BTreeMap::new();
        for i in 0..self.len() {
            if !self.in_sector(i, sector) {
                continue;
            }
            for o in expand_resolutions(&self.configs[i]).expect("ice") {
                *m.entry(o.pairings().to_vec()).or_default() += oriented_weight(&o, &self.params);
            }
        }
        m
    }

    /// `sum over oriented loops of the complex BKW weight`.
    pub fn bkw_sum(&self) -> Complex64 {
        self.configs
            .iter()
            .flat_map(|a| expand_resolutions(a).expect("ice"))
            .map(|o| oriented_weight(&o, &self.params))
            .sum()
    }
}

/// `Z_n = sum c^N`.
pub fn partition_function(t: &Torus, params: &ModelParams, limits: &Limits) -> Result<f64> {
    Ok(IceEnsemble::new(t, params, limits)?.total_weight(Sector::All))
}

pub fn spin_correlation_exact(
    t: &Torus,
    params: &ModelParams,
    faces: &[Face],
    sector: Sector,
    limits: &Limits,
) -> Result<f64> {
    Ok(IceEnsemble::new(t, params, limits)?.spin_correlation(faces, sector))
}

/// All bond configurations with their loops.
#[derive(Clone, Debug)]
pub struct BondEnsemble {
    pub params: ModelParams,
    pub bonds: Vec<BondConfig>,
    pub loops: Vec<UnorientedLoopConfig>,
}

impl BondEnsemble {
    pub fn new(t: &Torus, params: &ModelParams, limits: &Limits) -> Result<BondEnsemble> {
        limits.check_bonds(t)?;
        let bonds: Vec<BondConfig> = (0..1u64 << t.vertex_count())
            .map(|m| BondConfig::from_mask(*t, m))
            .collect();
        let loops = bonds.par_iter().map(bonds_to_loops).collect();
        Ok(BondEnsemble {
            params: *params,
            bonds,
            loops,
        })
    }

    pub fn weight(&self, i: usize, sector: Sector) -> f64 {
        match sector {
            Sector::All => loop_measure_weight(&self.loops[i], &self.params),
            Sector::Zero => zero_sector_weight(&self.loops[i], &self.params),
        }
    }

    pub fn expect(&self, sector: Sector, f: impl Fn(usize) -> f64) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..self.bonds.len() {
            let w = self.weight(i, sector);
            if w != 0.0 {
                num += w * f(i);
            }
            den += w;
        }
        num / den
    }

    /// `(-1)^s E[prod rho]`.
    pub fn loop_correlation(&self, z: &Zipper, sector: Sector) -> f64 {
        z.sign() * self.expect(sector, |i| product_rho(z, &self.loops[i], &self.params))
    }

    /// `(-1)^s` times the sum of `epsilon(L) w(L)` over the oriented loop
    /// configurations whose arrows lie in the zero sector, divided by the
    /// zero-sector partition function `z0`.
    pub fn zero_sector_oriented_correlation(&self, z: &Zipper, z0: f64) -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for l in &self.loops {
            for m in 0..1u64 << l.loop_count() {
                let o = l.orient(m);
                if !sector_increments(o.arrows()).expect("ice").is_zero() {
                    continue;
                }
                let eps = o
                    .loops()
                    .iter()
                    .fold(IPower::ONE, |acc, lp| acc * z.epsilon(&lp.edges));
                acc += eps.to_complex() * oriented_weight(&o, &self.params);
            }
        }
        z.sign() * acc.re / z0
    }

    /// `(-1)^s E_phi0[product_rho_zero_sector]`.
    pub fn zero_sector_loop_correlation(&self, z: &Zipper) -> f64 {
        z.sign()
            * self.expect(Sector::Zero, |i| {
                product_rho_zero_sector(z, &self.loops[i], &self.params)
            })
    }

    /// `E[N(u, u')]` under the loop measure.
    pub fn separating_mean(&self, u: Face, u2: Face, sector: Sector) -> Result<(f64, f64)> {
        let z = pair_zipper(self.bonds[0].torus(), u, u2)?;
        let n = |i: usize| {
            let (a, b) = separating_counts_by_flux(&self.loops[i], &z);
            (a as f64, b as f64)
        };
        Ok((self.expect(sector, |i| n(i).0), self.expect(sector, |i| n(i).1)))
    }
}

pub fn loop_correlation_exact(
    t: &Torus,
    params: &ModelParams,
    z: &Zipper,
    sector: Sector,
    limits: &Limits,
) -> Result<f64> {
    Ok(BondEnsemble::new(t, params, limits)?.loop_correlation(z, sector))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub identity: String,
    pub width: usize,
    pub height: usize,
    pub c: f64,
    pub left: f64,
    pub right: f64,
    pub deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration_ms: Option<f64>,
}

impl IdentityReport {
    pub fn to_json_line(&self) -> String {
        serde_json_line(self)
    }
}

fn serde_json_line(r: &IdentityReport) -> String {
    // fixed field order, numbers in shortest round-trip form
    let mut s = format!(
        "{{\"identity\":\"{}\",\"width\":{},\"height\":{},\"c\":{},\"left\":{},\"right\":{},\"deviation\":{},\"tolerance\":{},\"pass\":{}",
        r.identity,
        r.width,
        r.height,
        json_f64(r.c),
        json_f64(r.left),
        json_f64(r.right),
        json_f64(r.deviation),
        json_f64(r.tolerance),
        r.pass
    );
    if let Some(d) = r.duration_ms {
        s.push_str(&format!(",\"duration_ms\":{}", json_f64(d)));
    }
    s.push('}');
    s
}

fn json_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:?}")
    } else {
        "null".into()
    }
}

/// Options for [`verify_suite`].
#[derive(Clone, Copy, Debug)]
pub struct SuiteOptions {
    pub limits: Limits,
    pub sampled_quadruples: usize,
    pub seed: u64,
    pub record_time: bool,
    /// Measure for the correlation identity.
    pub sector: Sector,
}

impl Default for SuiteOptions {
    fn default() -> SuiteOptions {
        SuiteOptions {
            limits: Limits::default(),
            sampled_quadruples: 24,
            seed: 0,
            record_time: false,
            sector: Sector::All,
        }
    }
}

struct Reporter {
    t: Torus,
    c: f64,
    record_time: bool,
    out: Vec<IdentityReport>,
}

impl Reporter {
    fn push(&mut self, identity: &str, left: f64, right: f64, deviation: f64, start: Instant) {
        self.out.push(IdentityReport {
            identity: identity.to_string(),
            width: self.t.width(),
            height: self.t.height(),
            c: self.c,
            left,
            right,
            deviation,
            tolerance: TOLERANCE,
            pass: deviation <= TOLERANCE,
            duration_ms: self
                .record_time
                .then(|| start.elapsed().as_secs_f64() * 1e3),
        });
    }

    /// Worst of many left/right comparisons.
    fn push_worst(&mut self, identity: &str, pairs: &[(f64, f64)], start: Instant) {
        let (l, r) = pairs
            .iter()
            .copied()
            .max_by(|a, b| (a.0 - a.1).abs().total_cmp(&(b.0 - b.1).abs()))
            .unwrap_or((0.0, 0.0));
        self.push(identity, l, r, (l - r).abs(), start);
    }
}

/// Face tuples used for the correlation identities: all pairs of faces and
/// a seeded sample of four-element subsets.
pub fn correlation_tuples(t: &Torus, quadruples: usize, seed: u64) -> Vec<Vec<Face>> {
    let faces: Vec<Face> = t.faces().collect();
    let mut out = Vec::new();
    for i in 0..faces.len() {
        for j in i + 1..faces.len() {
            out.push(vec![faces[i], faces[j]]);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = std::collections::BTreeSet::new();
    let mut tries = 0;
    while seen.len() < quadruples && tries < 100 * quadruples.max(1) {
        tries += 1;
        let mut q: Vec<Face> = faces.choose_multiple(&mut rng, 4).copied().collect();
        q.sort();
        if seen.insert(q.clone()) {
            // source/sink order as drawn: first two sources
            out.push(q);
        }
    }
    out
}

/// Run every exact identity on an enumerable torus.
pub fn verify_suite(t: &Torus, params: &ModelParams, opts: &SuiteOptions) -> Result<Vec<IdentityReport>> {
    let mut rep = Reporter {
        t: *t,
        c: params.c,
        record_time: opts.record_time,
        out: Vec::new(),
    };

    let start = Instant::now();
    let ice = IceEnsemble::new(t, params, &opts.limits)?;
    let z = ice.total_weight(Sector::All);
    let bkw = ice.bkw_sum();
    rep.push("bkw_partition", z, bkw.re, (z - bkw.re).abs().max(bkw.im.abs()), start);

    let start = Instant::now();
    let bonds = BondEnsemble::new(t, params, &opts.limits)?;
    let tuples = correlation_tuples(t, opts.sampled_quadruples, opts.seed);
    let sector = opts.sector;
    let pairs: Vec<(f64, f64)> = tuples
        .iter()
        .map(|f| {
            let zp = Zipper::halves(*t, f).expect("even tuple");
            (ice.spin_correlation(f, sector), bonds.loop_correlation(&zp, sector))
        })
        .collect();
    rep.push_worst(&format!("correlation_identity_{sector}"), &pairs, start);
    if sector == Sector::Zero {
        let start = Instant::now();
        let z0 = ice.total_weight(Sector::Zero);
        let pairs: Vec<(f64, f64)> = tuples
            .iter()
            .map(|f| {
                let zp = Zipper::halves(*t, f).expect("even tuple");
                (ice.spin_correlation(f, sector), bonds.zero_sector_oriented_correlation(&zp, z0))
            })
            .collect();
        rep.push_worst("correlation_identity_zero_oriented", &pairs, start);
        let start = Instant::now();
        let pairs: Vec<(f64, f64)> = tuples
            .iter()
            .map(|f| {
                let zp = Zipper::halves(*t, f).expect("even tuple");
                (ice.spin_correlation(f, sector), bonds.zero_sector_loop_correlation(&zp))
            })
            .collect();
        rep.push_worst("correlation_identity_zero_functional", &pairs, start);
    }

    let start = Instant::now();
    let ratios: Vec<f64> = (0..bonds.bonds.len())
        .map(|i| {
            let l = bonds.loops[i].loop_count() as i32;
            let s = clusters(&bonds.bonds[i]).net_indicator() as i32;
            rc_weight(&bonds.bonds[i], params) / (params.sqrt_q().powi(l) * params.q.powi(s))
        })
        .collect();
    let spread = ratios
        .iter()
        .map(|r| (r / ratios[0] - 1.0).abs())
        .fold(0.0, f64::max);
    let (lo, hi) = ratios
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &r| (a.min(r), b.max(r)));
    rep.push("euler_ratio_constant", lo, hi, spread, start);

    let start = Instant::now();
    for sector in [Sector::All, Sector::Zero] {
        let pairs = marginal_pairs(&ice, &bonds, sector);
        rep.push_worst(&format!("loop_marginal_{sector}"), &pairs, start);
    }

    let start = Instant::now();
    let black: Vec<Face> = t.black_faces().collect();
    let mut conn = Vec::new();
    for i in 0..black.len() {
        for j in i + 1..black.len() {
            let p = omega::connect_probability_exact(t, params, black[i], black[j], &opts.limits)?;
            conn.push((p, ice.spin_correlation(&[black[i], black[j]], Sector::Zero)));
        }
    }
    rep.push_worst("omega_connectivity", &conn, start);

    let start = Instant::now();
    let es = omega::edwards_sokal_deviation(t, params, &opts.limits)?;
    rep.push("edwards_sokal", es, 0.0, es, start);

    let start = Instant::now();
    let bound = (params.c - 1.0) / (params.c + 1.0);
    let worst = omega::min_insertion_probability(t, params, &opts.limits)?;
    rep.push("insertion_tolerance", worst, bound, (bound - worst).max(0.0), start);

    Ok(rep.out)
}

/// Normalized `mu` loop marginal against the normalized loop weights, one
/// pair per unoriented configuration.
pub fn marginal_pairs(ice: &IceEnsemble, bonds: &BondEnsemble, sector: Sector) -> Vec<(f64, f64)> {
    let m = ice.loop_marginal(sector);
    let z = ice.total_weight(sector);
    let zl: f64 = (0..bonds.loops.len()).map(|i| bonds.weight(i, sector)).sum();
    let mut out = Vec::new();
    for (i, l) in bonds.loops.iter().enumerate() {
        let mass = m.get(l.pairings()).copied().unwrap_or_default();
        let lhs = mass / z;
        let rhs = bonds.weight(i, sector) / zl;
        // an imaginary residue counts against the identity
        out.push((lhs.re + lhs.im.abs(), rhs));
    }
    out
}

/// `P(N(u,u') = N(u',u) = 0)` and `E[(-1)^N]` under `phi_n`, where `N`
/// counts the separating loops the table sends to `-rho`.
pub fn special_point_sides(bonds: &BondEnsemble, u: Face, u2: Face) -> Result<(f64, f64)> {
    let z = pair_zipper(bonds.bonds[0].torus(), u, u2)?;
    let none = bonds.expect(Sector::All, |i| {
        let (a, b) = separating_counts_by_flux(&bonds.loops[i], &z);
        (a == 0 && b == 0) as u8 as f64
    });
    let signed = bonds.expect(Sector::All, |i| {
        let (a, _) = separating_counts_by_flux(&bonds.loops[i], &z);
        if a % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    });
    Ok((none, signed))
}

/// `E[rho^N (-rho)^N']` evaluated loop by loop from the table: the product
/// of `rho(l)` over contractible loops only.
pub fn two_point_formula(bonds: &BondEnsemble, u: Face, u2: Face, sector: Sector) -> Result<f64> {
    let z = pair_zipper(bonds.bonds[0].torus(), u, u2)?;
    Ok(bonds.expect(sector, |i| {
        bonds.loops[i]
            .loops()
            .iter()
            .filter(|l| l.is_contractible())
            .map(|l| rho_of_loop(&z, l, &bonds.params))
            .product()
    }))
}

pub fn two_point_faces(t: &Torus) -> Vec<(Face, Face)> {
    let black: Vec<Face> = t.black_faces().collect();
    let mut out = Vec::new();
    for i in 0..black.len() {
        for j in i + 1..black.len() {
            out.push((black[i], black[j]));
        }
    }
    out
}

pub fn white_pairs(t: &Torus) -> Vec<(Face, Face)> {
    let white: Vec<Face> = t.faces().filter(|&f| t.color(f) == Color::White).collect();
    let mut out = Vec::new();
    for i in 0..white.len() {
        for j in i + 1..white.len() {
            out.push((white[i], white[j]));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::six_vertex::{validate_ice, ctype_count};

    fn naive(t: &Torus) -> Vec<ArrowConfig> {
        (0..1u64 << t.edge_count())
            .map(|m| ArrowConfig::from_mask(*t, m))
            .filter(validate_ice)
            .collect()
    }

    #[test]
    fn backtracking_matches_brute_force() {
        for (w, h) in [(2, 2), (4, 2), (2, 4)] {
            let t = Torus::new(w, h).unwrap();
            let mut a = enumerate_ice(&t, &Limits::default()).unwrap();
            let mut b = naive(&t);
            a.sort_by_key(|c| c.to_text());
            b.sort_by_key(|c| c.to_text());
            assert_eq!(a, b, "{w}x{h}");
        }
    }

    #[test]
    fn partition_counts() {
        let t = Torus::new(4, 2).unwrap();
        let one = ModelParams::new(1.0).unwrap();
        let z1 = partition_function(&t, &one, &Limits::default()).unwrap();
        assert_eq!(z1, naive(&t).len() as f64);
        let p = ModelParams::new(2.0).unwrap();
        let z2: f64 = naive(&t)
            .iter()
            .map(|a| 2f64.powi(ctype_count(a).unwrap() as i32))
            .sum();
        let z = partition_function(&t, &p, &Limits::default()).unwrap();
        assert!((z - z2).abs() < 1e-9 * z2);
    }

    #[test]
    fn degenerate_correlations() {
        let t = Torus::new(4, 2).unwrap();
        let p = ModelParams::sqrt3();
        let l = Limits::default();
        for s in [Sector::All, Sector::Zero] {
            assert_eq!(spin_correlation_exact(&t, &p, &[], s, &l).unwrap(), 1.0);
            assert_eq!(spin_correlation_exact(&t, &p, &[t.face(0, 0)], s, &l).unwrap(), 0.0);
            for (f, sq) in [(t.face(0, 0), 1.0), (t.face(1, 0), -1.0)] {
                let v = spin_correlation_exact(&t, &p, &[f, f], s, &l).unwrap();
                assert!((v - sq).abs() < 1e-12);
            }
        }
        assert!(matches!(
            IceEnsemble::new(&Torus::new(6, 4).unwrap(), &p, &l),
            Err(Error::SizeCap { .. })
        ));
    }

    #[test]
    fn frozen_values_on_4x2() {
        // independent brute-force values, c = 2
        let t = Torus::new(4, 2).unwrap();
        let p = ModelParams::new(2.0).unwrap();
        let ice = IceEnsemble::new(&t, &p, &Limits::default()).unwrap();
        let naive_ice = naive(&t);
        let mut zero_w = 0.0;
        let mut zero_sum = 0.0;
        for a in &naive_ice {
            let inc = sector_increments(a).unwrap();
            if !inc.is_zero() {
                continue;
            }
            let w = 2f64.powi(ctype_count(a).unwrap() as i32);
            let h = height_field(a, 1).unwrap();
            let d = h.get(t.face(2, 0)) - h.get(t.face(0, 0));
            zero_w += w;
            zero_sum += w * IPower::new(d as i64).re() as f64;
        }
        let direct = zero_sum / zero_w;
        let got = ice.spin_correlation(&[t.face(0, 0), t.face(2, 0)], Sector::Zero);
        assert!((got - direct).abs() < 1e-12, "{got} {direct}");
    }

    #[test]
    fn suite_passes_in_the_full_sector() {
        let t = Torus::new(4, 2).unwrap();
        let p = ModelParams::sqrt2_plus_sqrt2();
        let reps = verify_suite(&t, &p, &SuiteOptions::default()).unwrap();
        assert_eq!(reps.len(), 8);
        for r in &reps {
            assert!(r.pass, "{}", r.to_json_line());
            assert!(r.duration_ms.is_none());
        }
    }

    #[test]
    fn zero_sector_functional_is_exact() {
        let t = Torus::new(4, 2).unwrap();
        let p = ModelParams::new(2.0).unwrap();
        let o = SuiteOptions { sector: Sector::Zero, ..Default::default() };
        let reps = verify_suite(&t, &p, &o).unwrap();
        let get = |name: &str| reps.iter().find(|r| r.identity == name).unwrap().clone();
        assert!(get("correlation_identity_zero_oriented").pass);
        assert!(get("correlation_identity_zero_functional").pass);
        assert!(!get("correlation_identity_zero").pass);
    }

    #[test]
    fn sector_parses() {
        assert_eq!("zero".parse::<Sector>().unwrap(), Sector::Zero);
        assert_eq!(Sector::All.to_string(), "all");
        assert!("none".parse::<Sector>().is_err());
    }
}
