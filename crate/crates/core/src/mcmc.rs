//! Seeded Metropolis chains for the spin measure on the zero sector and for
//! the loop measure on bond configurations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::{bond_pairings, bonds_to_loops, BondConfig};
use crate::error::{Error, Result};
use crate::geometry::{Color, Dir, DirEdge, Face, Torus, Vertex};
use crate::loops::{Pairing, UnorientedLoopConfig};
use crate::observables::{noncontractible_zero_average, rho_of_delta, right_to_left};
use crate::oracle::Sector;
use crate::six_vertex::{height_field, spins_from_height, ArrowConfig, ModelParams, SpinConfig};
use crate::stats::{batch_means, Estimate, MIN_BATCHES};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub torus: Torus,
    pub params: ModelParams,
    pub seed: u64,
    /// Sweeps per chain, burn-in included.
    pub sweeps: u64,
    pub burn_in: u64,
    pub thin: u64,
    pub chains: usize,
    /// One band-negation attempt per spin sweep.
    pub band_moves: bool,
    /// Loop measure sampled by the bond chain.
    pub sector: Sector,
}

impl ChainConfig {
    pub fn new(torus: Torus, params: ModelParams) -> ChainConfig {
        ChainConfig {
            torus,
            params,
            seed: 0,
            sweeps: 10_000,
            burn_in: 1_000,
            thin: 1,
            chains: 1,
            band_moves: true,
            sector: Sector::All,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sweeps <= self.burn_in {
            return Err(Error::Chain(format!(
                "sweeps ({}) must exceed burn-in ({})",
                self.sweeps, self.burn_in
            )));
        }
        if self.thin == 0 {
            return Err(Error::Chain("thinning interval must be at least 1".into()));
        }
        if self.chains == 0 {
            return Err(Error::Chain("chain count must be at least 1".into()));
        }
        let per_chain = self.samples_per_chain();
        if per_chain * (self.chains as u64) < MIN_BATCHES as u64 {
            return Err(Error::Chain(format!(
                "{} samples per chain give fewer than {MIN_BATCHES} batches",
                per_chain
            )));
        }
        Ok(())
    }

    pub fn samples_per_chain(&self) -> u64 {
        self.sweeps.saturating_sub(self.burn_in) / self.thin.max(1)
    }

    /// Independent stream per chain and per dynamics.
    pub fn rng(&self, chain: usize, kind: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(chain as u64 * 2 + kind);
        r
    }
}

const SPIN_STREAM: u64 = 0;
const BOND_STREAM: u64 = 1;

/// Flat zero-sector starting state.
pub fn initial_spins(torus: Torus) -> SpinConfig {
    spins_from_height(&height_field(&ArrowConfig::flat(torus), 1).expect("flat is ice"))
}

fn power_table(c: f64) -> [f64; 9] {
    let mut t = [0.0; 9];
    for (k, x) in t.iter_mut().enumerate() {
        *x = c.powi(k as i32 - 4);
    }
    t
}

/// Metropolis test with the uniform always drawn, so that a kernel may
/// decide before it knows the exact ratio.
fn metropolis<R: Rng + ?Sized>(ratio: f64, rng: &mut R) -> bool {
    rng.gen::<f64>() < ratio
}

/// Propose one face flip. Returns whether it was accepted.
pub fn spin_step<R: Rng + ?Sized>(state: &mut SpinConfig, params: &ModelParams, rng: &mut R) -> bool {
    let t = state.torus();
    let f = Face(rng.gen_range(0..t.face_count()));
    let corners = t.face_corners(f);
    let before = corners.iter().filter(|&&v| state.is_ctype(v)).count() as i32;
    state.flip(f);
    if !corners.iter().all(|&v| state.corner_ok(v)) {
        state.flip(f);
        return false;
    }
    let after = corners.iter().filter(|&&v| state.is_ctype(v)).count() as i32;
    let dn = after - before;
    if dn >= 0 || rng.gen::<f64>() < params.c.powi(dn) {
        true
    } else {
        state.flip(f);
        false
    }
}

/// Negate a band of rows or columns bounded by two straight lines, or the
/// whole torus when both lines coincide.
pub fn band_move<R: Rng + ?Sized>(state: &mut SpinConfig, rng: &mut R) -> bool {
    let t = state.torus();
    let rows = rng.gen_bool(0.5);
    let n = if rows { t.height() } else { t.width() };
    let a = rng.gen_range(0..n);
    let b = rng.gen_range(0..n);
    let m = if rows { t.width() } else { t.height() };
    let at = |line: usize, k: usize| -> Face {
        if rows {
            t.face(k as isize, line as isize)
        } else {
            t.face(line as isize, k as isize)
        }
    };
    let dir = if rows { Dir::North } else { Dir::East };
    if a != b {
        let straight = |line: usize| {
            let first = state.increment(at((line + n - 1) % n, 0), dir);
            (1..m).all(|k| state.increment(at((line + n - 1) % n, k), dir) == first)
        };
        if !straight(a) || !straight(b) {
            return false;
        }
    }
    let len = if a == b { n } else { (b + n - a) % n };
    for i in 0..len {
        for k in 0..m {
            state.flip(at((a + i) % n, k));
        }
    }
    true
}

/// Weight bookkeeping of one pairing field.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct LoopCounts {
    contractible: i32,
    noncontractible: i32,
}

fn counts(ulc: &UnorientedLoopConfig) -> LoopCounts {
    LoopCounts {
        contractible: ulc.contractible_count() as i32,
        noncontractible: ulc.noncontractible_count() as i32,
    }
}

fn bond_ratio(before: LoopCounts, after: LoopCounts, params: &ModelParams, sector: Sector) -> f64 {
    let dc = after.contractible - before.contractible;
    let dn = after.noncontractible - before.noncontractible;
    let mut r = params.loop_weight().powi(dc) * 2f64.powi(dn);
    if sector == Sector::Zero {
        let half = |c: LoopCounts| (c.noncontractible > 0) as i32;
        r *= 0.5f64.powi(half(after) - half(before));
    }
    r
}

/// Propose one bond flip under the loop measure. Returns whether it was
/// accepted.
pub fn bond_step<R: Rng + ?Sized>(
    state: &mut BondConfig,
    params: &ModelParams,
    sector: Sector,
    rng: &mut R,
) -> bool {
    let t = state.torus();
    let v = Vertex(rng.gen_range(0..t.vertex_count()));
    let before = counts(&bonds_to_loops(state));
    state.flip(crate::geometry::BlackEdge(v));
    let after = counts(&bonds_to_loops(state));
    if metropolis(bond_ratio(before, after, params, sector), rng) {
        true
    } else {
        state.flip(crate::geometry::BlackEdge(v));
        false
    }
}

/// Neighbor tables for the spin dynamics.
struct SpinKernel {
    w: usize,
    h: usize,
    black: Vec<bool>,
    /// Edge neighbors of each face.
    sides: Vec<[u32; 4]>,
    /// Diagonal neighbors of each face, one across each corner.
    diagonals: Vec<[u32; 4]>,
    powers: [f64; 9],
    signs: Vec<i8>,
}

impl SpinKernel {
    fn new(state: &SpinConfig, params: &ModelParams) -> SpinKernel {
        let t = state.torus();
        SpinKernel {
            w: t.width(),
            h: t.height(),
            black: t.faces().map(|f| t.color(f) == Color::Black).collect(),
            sides: t
                .faces()
                .map(|f| Dir::ALL.map(|d| t.face_step(f, d).to.0 as u32))
                .collect(),
            diagonals: t
                .faces()
                .map(|f| {
                    let (x, y) = t.face_xy(f);
                    let (x, y) = (x as isize, y as isize);
                    [(1, 1), (-1, 1), (-1, -1), (1, -1)].map(|(dx, dy)| t.face(x + dx, y + dy).0 as u32)
                })
                .collect(),
            powers: power_table(params.c),
            signs: state.signs().to_vec(),
        }
    }

    /// A flip is allowed iff the four edge neighbors agree. Each corner is
    /// then c-type iff the face agrees with the diagonal across it.
    fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool {
        let f = rng.gen_range(0..self.signs.len());
        let [a, b, c, d] = self.sides[f].map(|g| self.signs[g as usize]);
        if a != b || b != c || c != d {
            return false;
        }
        let s = self.signs[f];
        let equal = self.diagonals[f]
            .iter()
            .filter(|&&g| self.signs[g as usize] == s)
            .count() as i32;
        self.signs[f] = -s;
        let dn = 4 - 2 * equal;
        if dn >= 0 || rng.gen::<f64>() < self.powers[(dn + 4) as usize] {
            true
        } else {
            self.signs[f] = -self.signs[f];
            false
        }
    }

    fn face(&self, x: usize, y: usize) -> usize {
        y * self.w + x
    }

    fn value(&self, f: usize) -> i32 {
        (!self.black[f]) as i32 + if self.signs[f] < 0 { 2 } else { 0 }
    }

    fn increment(&self, a: usize, b: usize) -> i32 {
        if (self.value(b) - self.value(a)).rem_euclid(4) == 1 {
            1
        } else {
            -1
        }
    }

    fn band<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool {
        let rows = rng.gen_bool(0.5);
        let (n, m) = if rows { (self.h, self.w) } else { (self.w, self.h) };
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        let at = |line: usize, k: usize| if rows { k + line * self.w } else { line + k * self.w };
        if a != b {
            let straight = |line: usize| {
                let below = (line + n - 1) % n;
                let first = self.increment(at(below, 0), at(line, 0));
                (1..m).all(|k| self.increment(at(below, k), at(line, k)) == first)
            };
            if !straight(a) || !straight(b) {
                return false;
            }
        }
        let len = if a == b { n } else { (b + n - a) % n };
        for i in 0..len {
            for k in 0..m {
                let f = at((a + i) % n, k);
                self.signs[f] = -self.signs[f];
            }
        }
        true
    }
}

/// Translations of a face pair that keep both faces black.
fn translated_pairs(t: &Torus, u: Face, u2: Face) -> Vec<(usize, usize)> {
    let (x0, y0) = t.face_xy(u);
    let (x1, y1) = t.face_xy(u2);
    let mut out = Vec::new();
    for f in t.black_faces() {
        let (x, y) = t.face_xy(f);
        let dx = x as isize - x0 as isize;
        let dy = y as isize - y0 as isize;
        out.push((f.0, t.face(x1 as isize + dx, y1 as isize + dy).0));
    }
    out
}

fn check_black(t: &Torus, f: Face) -> Result<()> {
    if t.color(f) == Color::Black {
        Ok(())
    } else {
        let (x, y) = t.face_xy(f);
        Err(Error::NotBlack { x, y })
    }
}

/// Quarter of the smaller side.
pub fn distance_limit(t: &Torus) -> usize {
    t.width().min(t.height()) / 4
}

pub fn check_height_distance(t: &Torus, d: usize) -> Result<()> {
    let limit = distance_limit(t);
    if d > limit {
        Err(Error::DistanceGuard { distance: d, limit })
    } else {
        Ok(())
    }
}

/// Observables recorded by the spin chain.
#[derive(Clone, Debug, Default)]
pub struct SpinObservables {
    pub pairs: Vec<(Face, Face)>,
    pub height_distances: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinRun {
    /// `E[sigma(u) sigma(u')]`, averaged over black-preserving translations.
    pub two_point: Vec<Estimate>,
    /// `Var[h(f + d e_x) - h(f)]`, averaged over all faces `f`.
    pub height_variance: Vec<Estimate>,
    pub acceptance: Vec<f64>,
    pub band_moves: Vec<u64>,
}

struct SpinSeries {
    two_point: Vec<Vec<f64>>,
    square: Vec<Vec<f64>>,
    linear: Vec<Vec<f64>>,
    acceptance: f64,
    band: u64,
}

fn spin_chain(cfg: &ChainConfig, obs: &SpinObservables, pairs: &[Vec<(usize, usize)>], chain: usize) -> SpinSeries {
    let mut rng = cfg.rng(chain, SPIN_STREAM);
    let mut k = SpinKernel::new(&initial_spins(cfg.torus), &cfg.params);
    let n = k.signs.len();
    let nd = obs.height_distances.len();
    let cap = cfg.samples_per_chain() as usize;
    let mut out = SpinSeries {
        two_point: vec![Vec::with_capacity(cap); pairs.len()],
        square: vec![Vec::with_capacity(cap); nd],
        linear: vec![Vec::with_capacity(cap); nd],
        acceptance: 0.0,
        band: 0,
    };
    let (w, h) = (k.w, k.h);
    let mut prefix = vec![0i32; 2 * w + 1];
    let (mut acc, mut prop) = (0u64, 0u64);
    for sweep in 0..cfg.sweeps {
        for _ in 0..n {
            acc += k.step(&mut rng) as u64;
        }
        prop += n as u64;
        if cfg.band_moves {
            out.band += k.band(&mut rng) as u64;
        }
        if sweep < cfg.burn_in || !(sweep - cfg.burn_in + 1).is_multiple_of(cfg.thin) {
            continue;
        }
        for (series, list) in out.two_point.iter_mut().zip(pairs) {
            let s: i64 = list
                .iter()
                .map(|&(a, b)| (k.signs[a] * k.signs[b]) as i64)
                .sum();
            series.push(s as f64 / list.len() as f64);
        }
        if nd > 0 {
            let mut sq = vec![0i64; nd];
            let mut lin = vec![0i64; nd];
            for y in 0..h {
                for x in 0..2 * w {
                    let a = k.face(x % w, y);
                    let b = k.face((x + 1) % w, y);
                    prefix[x + 1] = prefix[x] + k.increment(a, b);
                }
                for (j, &d) in obs.height_distances.iter().enumerate() {
                    for x in 0..w {
                        let diff = (prefix[x + d] - prefix[x]) as i64;
                        sq[j] += diff * diff;
                        lin[j] += diff;
                    }
                }
            }
            for j in 0..nd {
                out.square[j].push(sq[j] as f64 / (w * h) as f64);
                out.linear[j].push(lin[j] as f64 / (w * h) as f64);
            }
        }
    }
    out.acceptance = acc as f64 / prop.max(1) as f64;
    out
}

pub fn run_spin(cfg: &ChainConfig, obs: &SpinObservables) -> Result<SpinRun> {
    cfg.validate()?;
    let t = cfg.torus;
    for &(u, u2) in &obs.pairs {
        check_black(&t, u)?;
        check_black(&t, u2)?;
    }
    for &d in &obs.height_distances {
        check_height_distance(&t, d)?;
    }
    let pairs: Vec<Vec<(usize, usize)>> = obs
        .pairs
        .iter()
        .map(|&(u, u2)| translated_pairs(&t, u, u2))
        .collect();
    let runs: Vec<SpinSeries> = (0..cfg.chains)
        .into_par_iter()
        .map(|i| spin_chain(cfg, obs, &pairs, i))
        .collect();
    let gather = |pick: &dyn Fn(&SpinSeries) -> &Vec<f64>| -> Vec<Vec<f64>> {
        runs.iter().map(|r| pick(r).clone()).collect()
    };
    let two_point = (0..pairs.len())
        .map(|j| batch_means(&gather(&|r| &r.two_point[j])))
        .collect();
    let height_variance = (0..obs.height_distances.len())
        .map(|j| {
            // batch the linearization D^2 - 2 m D of D^2 - m^2 so the error
            // includes the squared-mean term
            let m = batch_means(&gather(&|r| &r.linear[j])).mean;
            let series: Vec<Vec<f64>> = runs
                .iter()
                .map(|r| {
                    r.square[j]
                        .iter()
                        .zip(&r.linear[j])
                        .map(|(s, l)| s - 2.0 * m * l)
                        .collect()
                })
                .collect();
            batch_means(&series).shifted(m * m)
        })
        .collect();
    Ok(SpinRun {
        two_point,
        height_variance,
        acceptance: runs.iter().map(|r| r.acceptance).collect(),
        band_moves: runs.iter().map(|r| r.band).collect(),
    })
}

/// Traversal tables for loops on the medial graph, indexed by directed
/// edge.
struct BondKernel {
    /// End vertex of each directed edge.
    end: Vec<u32>,
    /// Side of the end vertex through which the edge arrives.
    arrive: Vec<u8>,
    /// Directed edge leaving vertex `v` through side `s`, at `4 v + s`.
    out: Vec<u32>,
    seam: Vec<(i8, i8)>,
    partner: [[u8; 4]; 2],
    pairing: Vec<bool>,
    params: ModelParams,
    sector: Sector,
    noncontractible: i32,
    trace_all: bool,
}

const NORTH: u8 = 1;
const SOUTH: u8 = 3;

impl BondKernel {
    fn new(t: &Torus, xi: &BondConfig, params: &ModelParams, sector: Sector) -> BondKernel {
        let n = 2 * t.edge_count();
        let mut end = vec![0; n];
        let mut arrive = vec![0; n];
        let mut seam = vec![(0, 0); n];
        for i in 0..n {
            let de = DirEdge::from_index(i);
            end[i] = t.endpoints(de).1 .0 as u32;
            arrive[i] = t.travel_dir(de).opposite().index() as u8;
            let s = crate::loops::seam_crossing(t, de);
            seam[i] = (s.0 as i8, s.1 as i8);
        }
        let mut out = vec![0; 4 * t.vertex_count()];
        for v in t.vertices() {
            for d in Dir::ALL {
                out[4 * v.0 + d.index()] = t.incident(v, d).index() as u32;
            }
        }
        let mut partner = [[0u8; 4]; 2];
        for (b, row) in partner.iter_mut().enumerate() {
            for d in Dir::ALL {
                row[d.index()] = Pairing::from_bit(b == 1).partner(d).index() as u8;
            }
        }
        let pairing: Vec<bool> = bond_pairings(xi).iter().map(|p| p.bit()).collect();
        let ulc = bonds_to_loops(xi);
        BondKernel {
            end,
            arrive,
            out,
            seam,
            partner,
            pairing,
            params: *params,
            sector,
            noncontractible: ulc.noncontractible_count() as i32,
            trace_all: (params.loop_weight() - 2.0).abs() > 1e-12 || sector == Sector::Zero,
        }
    }

    fn next(&self, de: u32) -> u32 {
        let w = self.end[de as usize];
        let side = self.partner[self.pairing[w as usize] as usize][self.arrive[de as usize] as usize];
        self.out[4 * w as usize + side as usize]
    }

    /// Whether the two strands at `v` lie on one loop. Walks both strands
    /// alternately until one of them first comes back to `v`.
    fn same_loop(&self, v: usize) -> bool {
        let p = self.partner[self.pairing[v] as usize];
        let (ends_a, ends_b) = (p[NORTH as usize], p[SOUTH as usize]);
        let mut a = self.out[4 * v + NORTH as usize];
        let mut b = self.out[4 * v + SOUTH as usize];
        loop {
            if self.end[a as usize] as usize == v {
                return self.arrive[a as usize] != ends_a;
            }
            if self.end[b as usize] as usize == v {
                return self.arrive[b as usize] != ends_b;
            }
            a = self.next(a);
            b = self.next(b);
        }
    }

    fn contractible_from(&self, start: u32) -> bool {
        let (mut dx, mut dy) = (0i32, 0i32);
        let mut de = start;
        loop {
            let s = self.seam[de as usize];
            dx += s.0 as i32;
            dy += s.1 as i32;
            de = self.next(de);
            if de == start {
                return dx == 0 && dy == 0;
            }
        }
    }

    /// Loops through `v`, as (contractible, noncontractible) counts.
    fn local_counts(&self, v: usize, split: bool) -> LoopCounts {
        let starts: &[u8] = if split { &[NORTH] } else { &[NORTH, SOUTH] };
        let mut c = LoopCounts {
            contractible: 0,
            noncontractible: 0,
        };
        for &s in starts {
            if self.contractible_from(self.out[4 * v + s as usize]) {
                c.contractible += 1;
            } else {
                c.noncontractible += 1;
            }
        }
        c
    }

    fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool {
        let v = rng.gen_range(0..self.pairing.len());
        if !self.trace_all {
            // ratio 2 on a split and 1/2 on a merge
            let u = rng.gen::<f64>();
            let accept = u < 0.5 || self.same_loop(v);
            if accept {
                self.pairing[v] = !self.pairing[v];
            }
            return accept;
        }
        let split = self.same_loop(v);
        let local_before = self.local_counts(v, split);
        self.pairing[v] = !self.pairing[v];
        let local_after = self.local_counts(v, !split);
        let dn = local_after.noncontractible - local_before.noncontractible;
        let before = LoopCounts {
            contractible: local_before.contractible,
            noncontractible: self.noncontractible,
        };
        let after = LoopCounts {
            contractible: local_after.contractible,
            noncontractible: self.noncontractible + dn,
        };
        // loops away from v cancel in the contractible difference
        if metropolis(bond_ratio(before, after, &self.params, self.sector), rng) {
            self.noncontractible += dn;
            true
        } else {
            self.pairing[v] = !self.pairing[v];
            false
        }
    }

    fn pairings(&self) -> Vec<Pairing> {
        self.pairing.iter().map(|&b| Pairing::from_bit(b)).collect()
    }
}

/// Crossed edges of the canonical path from `u` to `u2`: offset of the
/// edge's base vertex from `u`, whether it is horizontal, and the
/// right-to-left direction.
fn path_gamma(t: &Torus, u: Face, u2: Face) -> Vec<(isize, isize, bool, bool)> {
    let path = t.canonical_dual_path(u, u2, true);
    let (x0, y0) = t.face_xy(u);
    path.steps()
        .map(|(_, dir, e)| {
            let de = right_to_left(t, dir, e);
            let (x, y) = t.vertex_xy(t.edge_base(e));
            (
                x as isize - x0 as isize,
                y as isize - y0 as isize,
                t.is_horizontal(e),
                de.forward,
            )
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BondRun {
    /// `(-1)^s E[prod rho]` for each pair, averaged over black-preserving
    /// translations.
    pub two_point: Vec<Estimate>,
    /// `E[N(u, u')]` for each pair.
    pub separating: Vec<Estimate>,
    pub acceptance: Vec<f64>,
}

struct BondSeries {
    two_point: Vec<Vec<f64>>,
    separating: Vec<Vec<f64>>,
    acceptance: f64,
}

/// Per-edge loop membership of a loop configuration.
struct LoopIndex {
    owner: Vec<u32>,
    forward: Vec<bool>,
    winding: Vec<i32>,
    displacement: Vec<(i32, i32)>,
}

impl LoopIndex {
    fn new(ulc: &UnorientedLoopConfig) -> LoopIndex {
        let t = ulc.torus();
        let mut owner = vec![0; t.edge_count()];
        let mut forward = vec![false; t.edge_count()];
        for (i, l) in ulc.loops().iter().enumerate() {
            for de in &l.edges {
                owner[de.edge.0] = i as u32;
                forward[de.edge.0] = de.forward;
            }
        }
        LoopIndex {
            owner,
            forward,
            winding: ulc.loops().iter().map(|l| l.winding()).collect(),
            displacement: ulc.loops().iter().map(|l| l.displacement).collect(),
        }
    }
}

/// (N, N', loop-side product) for one path given as directed crossings.
fn loop_side(
    idx: &LoopIndex,
    crossings: &[(usize, bool)],
    params: &ModelParams,
    sector: Sector,
    flux: &mut Vec<(u32, i64)>,
) -> (u32, u32, f64) {
    flux.clear();
    for &(e, fwd) in crossings {
        let l = idx.owner[e];
        let s = if idx.forward[e] == fwd { 1 } else { -1 };
        match flux.iter_mut().find(|(k, _)| *k == l) {
            Some(entry) => entry.1 += s,
            None => flux.push((l, s)),
        }
    }
    let (mut n1, mut n2) = (0, 0);
    let mut p = 1.0;
    for &(l, f) in flux.iter() {
        if idx.displacement[l as usize] == (0, 0) {
            let delta = idx.winding[l as usize] as i64 * f;
            match delta {
                1 => n1 += 1,
                -1 => n2 += 1,
                _ => {}
            }
            p *= rho_of_delta(delta, params);
        } else if sector == Sector::All {
            p *= match f.rem_euclid(4) {
                0 => 1.0,
                2 => -1.0,
                _ => 0.0,
            };
        }
    }
    if sector == Sector::Zero && p != 0.0 {
        let nctr: Vec<((i32, i32), i64)> = idx
            .displacement
            .iter()
            .enumerate()
            .filter(|(_, d)| **d != (0, 0))
            .map(|(l, &d)| {
                let f = flux.iter().find(|(k, _)| *k as usize == l).map_or(0, |e| e.1);
                (d, f)
            })
            .collect();
        if !nctr.is_empty() {
            p *= noncontractible_zero_average(&nctr);
        }
    }
    (n1, n2, p)
}

fn bond_chain(cfg: &ChainConfig, paths: &[Vec<Vec<(usize, bool)>>], signs: &[f64], chain: usize) -> BondSeries {
    let t = cfg.torus;
    let mut rng = cfg.rng(chain, BOND_STREAM);
    let mut k = BondKernel::new(&t, &BondConfig::empty(t), &cfg.params, cfg.sector);
    let n = k.pairing.len();
    let cap = cfg.samples_per_chain() as usize;
    let mut out = BondSeries {
        two_point: vec![Vec::with_capacity(cap); paths.len()],
        separating: vec![Vec::with_capacity(cap); paths.len()],
        acceptance: 0.0,
    };
    let mut flux = Vec::new();
    let (mut acc, mut prop) = (0u64, 0u64);
    for sweep in 0..cfg.sweeps {
        for _ in 0..n {
            acc += k.step(&mut rng) as u64;
        }
        prop += n as u64;
        if sweep < cfg.burn_in || !(sweep - cfg.burn_in + 1).is_multiple_of(cfg.thin) {
            continue;
        }
        let ulc = UnorientedLoopConfig::from_pairings(t, k.pairings());
        let idx = LoopIndex::new(&ulc);
        for (j, list) in paths.iter().enumerate() {
            let (mut sum_p, mut sum_n) = (0.0, 0u64);
            for crossings in list {
                let (n1, _, p) = loop_side(&idx, crossings, &cfg.params, cfg.sector, &mut flux);
                sum_p += p;
                sum_n += n1 as u64;
            }
            out.two_point[j].push(signs[j] * sum_p / list.len() as f64);
            out.separating[j].push(sum_n as f64 / list.len() as f64);
        }
    }
    out.acceptance = acc as f64 / prop.max(1) as f64;
    out
}

/// Translated copies of the canonical path from `u` to `u2`, as crossed
/// edge indices with the right-to-left direction.
fn translated_paths(t: &Torus, u: Face, u2: Face) -> Vec<Vec<(usize, bool)>> {
    let base = path_gamma(t, u, u2);
    let (x0, y0) = t.face_xy(u);
    t.black_faces()
        .map(|f| {
            let (x, y) = t.face_xy(f);
            let (tx, ty) = (x as isize - x0 as isize, y as isize - y0 as isize);
            base.iter()
                .map(|&(dx, dy, horizontal, fwd)| {
                    let v = t.vertex(x0 as isize + tx + dx, y0 as isize + ty + dy);
                    let e = if horizontal { t.east_edge(v) } else { t.north_edge(v) };
                    (e.0, fwd)
                })
                .collect()
        })
        .collect()
}

pub fn run_bond(cfg: &ChainConfig, pairs: &[(Face, Face)]) -> Result<BondRun> {
    cfg.validate()?;
    let t = cfg.torus;
    if cfg.params.loop_weight() <= 0.0 {
        return Err(Error::Chain(format!(
            "the loop measure is not positive at c = {}",
            cfg.params.c
        )));
    }
    for &(u, u2) in pairs {
        check_black(&t, u)?;
        check_black(&t, u2)?;
    }
    let paths: Vec<Vec<Vec<(usize, bool)>>> = pairs.iter().map(|&(u, u2)| translated_paths(&t, u, u2)).collect();
    let signs = vec![1.0; pairs.len()];
    let runs: Vec<BondSeries> = (0..cfg.chains)
        .into_par_iter()
        .map(|i| bond_chain(cfg, &paths, &signs, i))
        .collect();
    let gather = |pick: &dyn Fn(&BondSeries) -> &Vec<f64>| -> Vec<Vec<f64>> {
        runs.iter().map(|r| pick(r).clone()).collect()
    };
    Ok(BondRun {
        two_point: (0..pairs.len())
            .map(|j| batch_means(&gather(&|r| &r.two_point[j])))
            .collect(),
        separating: (0..pairs.len())
            .map(|j| batch_means(&gather(&|r| &r.separating[j])))
            .collect(),
        acceptance: runs.iter().map(|r| r.acceptance).collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoPoint {
    pub spin: Estimate,
    pub loops: Estimate,
}

/// Spin-chain estimate of `E[sigma(u) sigma(u')]` under the zero-sector
/// measure with the bond-chain loop-side estimate alongside.
pub fn estimate_two_point(cfg: &ChainConfig, u: Face, u2: Face) -> Result<TwoPoint> {
    let spin = run_spin(
        cfg,
        &SpinObservables {
            pairs: vec![(u, u2)],
            height_distances: vec![],
        },
    )?;
    let bond = run_bond(cfg, &[(u, u2)])?;
    Ok(TwoPoint {
        spin: spin.two_point.into_iter().next().expect("one pair"),
        loops: bond.two_point.into_iter().next().expect("one pair"),
    })
}

pub fn estimate_height_variance(cfg: &ChainConfig, distances: &[usize]) -> Result<Vec<Estimate>> {
    Ok(run_spin(
        cfg,
        &SpinObservables {
            pairs: vec![],
            height_distances: distances.to_vec(),
        },
    )?
    .height_variance)
}

pub fn estimate_separating_loops(cfg: &ChainConfig, u: Face, u2: Face) -> Result<Estimate> {
    Ok(run_bond(cfg, &[(u, u2)])?
        .separating
        .into_iter()
        .next()
        .expect("one pair"))
}

/// Faces `(0, 0)` and `(d, 0)`.
pub fn horizontal_pair(t: &Torus, d: usize) -> (Face, Face) {
    (t.face(0, 0), t.face(d as isize, 0))
}

#[doc(hidden)]
pub mod kernels {
    //! Table-driven steps exposed for equivalence tests.
    use super::*;

    pub struct SpinDriver(SpinKernel);

    impl SpinDriver {
        pub fn new(state: &SpinConfig, params: &ModelParams) -> SpinDriver {
            SpinDriver(SpinKernel::new(state, params))
        }

        pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool {
            self.0.step(rng)
        }

        pub fn band<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool {
            self.0.band(rng)
        }

        pub fn signs(&self) -> &[i8] {
            &self.0.signs
        }
    }

    pub struct BondDriver(BondKernel, Torus);

    impl BondDriver {
        pub fn new(xi: &BondConfig, params: &ModelParams, sector: Sector) -> BondDriver {
            let t = xi.torus();
            BondDriver(BondKernel::new(&t, xi, params, sector), t)
        }

        pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool {
            self.0.step(rng)
        }

        pub fn same_loop(&self, v: Vertex) -> bool {
            self.0.same_loop(v.0)
        }

        pub fn loops(&self) -> UnorientedLoopConfig {
            UnorientedLoopConfig::from_pairings(self.1, self.0.pairings())
        }

        /// Tracked only when the acceptance ratio depends on it.
        pub fn noncontractible(&self) -> Option<usize> {
            self.0.trace_all.then_some(self.0.noncontractible as usize)
        }
    }

    /// Loop-side product along the canonical path from `u` to `u2`.
    pub fn loop_side_product(ulc: &UnorientedLoopConfig, u: Face, u2: Face, params: &ModelParams, sector: Sector) -> (u32, u32, f64) {
        let t = ulc.torus();
        let (x0, y0) = t.face_xy(u);
        let own: Vec<(usize, bool)> = path_gamma(&t, u, u2)
            .iter()
            .map(|&(dx, dy, horizontal, fwd)| {
                let v = t.vertex(x0 as isize + dx, y0 as isize + dy);
                let e = if horizontal { t.east_edge(v) } else { t.north_edge(v) };
                (e.0, fwd)
            })
            .collect();
        loop_side(&LoopIndex::new(ulc), &own, params, sector, &mut Vec::new())
    }
}
