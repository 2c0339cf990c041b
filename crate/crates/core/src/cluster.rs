//! Bond configurations on the black sublattice and their clusters.

use serde::{Deserialize, Serialize};

use crate::geometry::{BlackEdge, Face, Torus, Vertex};
use crate::loops::{Pairing, UnorientedLoopConfig};
use crate::six_vertex::ModelParams;

/// One open/closed bit per black edge, indexed by the torus vertex the edge
/// passes through. The white edge through the same vertex is open in the
/// dual configuration iff the black one is closed.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BondConfig {
    torus: Torus,
    open: Vec<bool>,
}

impl BondConfig {
    pub fn new(torus: Torus, open: Vec<bool>) -> BondConfig {
        assert_eq!(open.len(), torus.vertex_count(), "one bit per vertex");
        BondConfig { torus, open }
    }

    pub fn empty(torus: Torus) -> BondConfig {
        BondConfig::new(torus, vec![false; torus.vertex_count()])
    }

    pub fn full(torus: Torus) -> BondConfig {
        BondConfig::new(torus, vec![true; torus.vertex_count()])
    }

    pub fn from_mask(torus: Torus, mask: u64) -> BondConfig {
        let open = (0..torus.vertex_count()).map(|i| mask >> i & 1 == 1).collect();
        BondConfig::new(torus, open)
    }

    pub fn torus(&self) -> Torus {
        self.torus
    }

    pub fn is_open(&self, e: BlackEdge) -> bool {
        self.open[e.0 .0]
    }

    pub fn set(&mut self, e: BlackEdge, open: bool) {
        self.open[e.0 .0] = open;
    }

    pub fn flip(&mut self, e: BlackEdge) {
        self.open[e.0 .0] ^= true;
    }

    pub fn bits(&self) -> &[bool] {
        &self.open
    }

    /// `|xi|`.
    pub fn open_count(&self) -> usize {
        self.open.iter().filter(|&&b| b).count()
    }

    /// Open edges of the dual configuration, as a bit per vertex.
    pub fn dual_bits(&self) -> Vec<bool> {
        self.open.iter().map(|b| !b).collect()
    }

    pub fn dual_open_count(&self) -> usize {
        self.open.len() - self.open_count()
    }

    pub fn open_edges(&self) -> impl Iterator<Item = BlackEdge> + '_ {
        self.open
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| BlackEdge(Vertex(i)))
    }
}

/// Whether the black edge at `v` is open under `p`: the strands keep the
/// black faces on either side of the edge connected.
pub fn bond_open_under(torus: &Torus, v: Vertex, p: Pairing) -> bool {
    let (x, y) = torus.vertex_xy(v);
    // with x + y even the black diagonal is SW-NE, cut by N-E and S-W strands
    ((x + y) % 2 == 0) == (p == Pairing::NwSe)
}

pub fn pairing_for_bond(torus: &Torus, v: Vertex, open: bool) -> Pairing {
    let (x, y) = torus.vertex_xy(v);
    Pairing::from_bit(((x + y) % 2 == 0) == open)
}

pub fn loops_to_bonds(ulc: &UnorientedLoopConfig) -> BondConfig {
    let t = ulc.torus();
    let open = t
        .vertices()
        .map(|v| bond_open_under(&t, v, ulc.pairings()[v.0]))
        .collect();
    BondConfig::new(t, open)
}

pub fn bond_pairings(xi: &BondConfig) -> Vec<Pairing> {
    let t = xi.torus;
    t.vertices()
        .map(|v| pairing_for_bond(&t, v, xi.open[v.0]))
        .collect()
}

pub fn bonds_to_loops(xi: &BondConfig) -> UnorientedLoopConfig {
    UnorientedLoopConfig::from_pairings(xi.torus, bond_pairings(xi))
}

/// Subgroup of `Z^2` in Hermite normal form: spanned by `(a, b)` and
/// `(0, d)` with `a >= 0`, `d >= 0`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WrapLattice {
    a: i64,
    b: i64,
    d: i64,
}

fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        if a < 0 {
            (-a, -1, 0)
        } else {
            (a, 1, 0)
        }
    } else {
        let (g, x, y) = ext_gcd(b, a % b);
        (g, y, x - (a / b) * y)
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    ext_gcd(a, b).0
}

impl WrapLattice {
    pub fn trivial() -> WrapLattice {
        WrapLattice::default()
    }

    pub fn add(&mut self, (x, y): (i64, i64)) {
        if x == 0 {
            self.d = gcd(self.d, y);
        } else if self.a == 0 {
            // the old first row is zero; its second entry never matters
            self.a = x.abs();
            self.b = y * x.signum();
        } else {
            let (g, u, w) = ext_gcd(self.a, x);
            let (a, b) = (self.a, self.b);
            self.a = g;
            self.b = u * b + w * y;
            self.d = gcd(self.d, (x / g) * b - (a / g) * y);
        }
        if self.d != 0 {
            self.b = self.b.rem_euclid(self.d);
        }
    }

    pub fn join(&mut self, other: &WrapLattice) {
        if other.a != 0 {
            self.add((other.a, other.b));
        }
        if other.d != 0 {
            self.add((0, other.d));
        }
    }

    pub fn rank(&self) -> u8 {
        (self.a != 0) as u8 + (self.d != 0) as u8
    }

    pub fn contains(&self, (x, y): (i64, i64)) -> bool {
        if self.a == 0 {
            return x == 0 && (if self.d == 0 { y == 0 } else { y % self.d == 0 });
        }
        if x % self.a != 0 {
            return false;
        }
        let r = y - (x / self.a) * self.b;
        if self.d == 0 {
            r == 0
        } else {
            r % self.d == 0
        }
    }

    /// Basis rows, zero rows omitted.
    pub fn basis(&self) -> Vec<(i64, i64)> {
        let mut v = Vec::new();
        if self.a != 0 {
            v.push((self.a, self.b));
        }
        if self.d != 0 {
            v.push((0, self.d));
        }
        v
    }
}

/// Union-find over the black faces with the displacement of each face from
/// its root in the universal cover.
#[derive(Clone, Debug)]
pub(crate) struct WrapUnionFind {
    parent: Vec<u32>,
    offset: Vec<(i64, i64)>,
    lattice: Vec<WrapLattice>,
    size: Vec<u32>,
}

impl WrapUnionFind {
    pub fn new(n: usize) -> WrapUnionFind {
        WrapUnionFind {
            parent: (0..n as u32).collect(),
            offset: vec![(0, 0); n],
            lattice: vec![WrapLattice::trivial(); n],
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, i: usize) -> (usize, (i64, i64)) {
        let p = self.parent[i] as usize;
        if p == i {
            return (i, (0, 0));
        }
        let (r, po) = self.find(p);
        let o = (self.offset[i].0 + po.0, self.offset[i].1 + po.1);
        self.parent[i] = r as u32;
        self.offset[i] = o;
        (r, o)
    }

    /// Record that the lift of `b` sits at the lift of `a` plus `step`; a
    /// closed cycle adds its wrap vector to the component lattice.
    pub fn union(&mut self, a: usize, b: usize, step: (i64, i64), period: (i64, i64)) {
        let (ra, oa) = self.find(a);
        let (rb, ob) = self.find(b);
        // lift(b) relative to root a, through this edge
        let via = (oa.0 + step.0, oa.1 + step.1);
        if ra == rb {
            let cyc = (via.0 - ob.0, via.1 - ob.1);
            debug_assert!(cyc.0 % period.0 == 0 && cyc.1 % period.1 == 0);
            self.lattice[ra].add((cyc.0 / period.0, cyc.1 / period.1));
            return;
        }
        // place root b so that lift(b) = via in root-a coordinates
        let rel = (via.0 - ob.0, via.1 - ob.1);
        let (big, small, off) = if self.size[ra] >= self.size[rb] {
            (ra, rb, rel)
        } else {
            (rb, ra, (-rel.0, -rel.1))
        };
        self.parent[small] = big as u32;
        self.offset[small] = off;
        self.size[big] += self.size[small];
        let l = self.lattice[small];
        self.lattice[big].join(&l);
    }

    pub fn lattice_of_root(&self, r: usize) -> WrapLattice {
        self.lattice[r]
    }
}

/// Connected components of a bond configuration.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterStructure {
    /// Component label per black face, by black index; labels are dense and
    /// ordered by first appearance.
    pub labels: Vec<u32>,
    pub lattices: Vec<WrapLattice>,
    pub sizes: Vec<u32>,
}

impl ClusterStructure {
    /// `k(xi)`, isolated faces included.
    pub fn component_count(&self) -> usize {
        self.lattices.len()
    }

    /// `s(xi)`: some cluster winds in two independent directions.
    pub fn has_net(&self) -> bool {
        self.lattices.iter().any(|l| l.rank() == 2)
    }

    pub fn net_indicator(&self) -> u32 {
        self.has_net() as u32
    }

    pub fn label(&self, torus: &Torus, f: Face) -> Option<u32> {
        torus.black_index(f).map(|i| self.labels[i])
    }

    pub fn connected(&self, torus: &Torus, a: Face, b: Face) -> bool {
        match (self.label(torus, a), self.label(torus, b)) {
            (Some(x), Some(y)) => x == y,
            _ => false,
        }
    }
}

pub fn clusters(xi: &BondConfig) -> ClusterStructure {
    let t = xi.torus;
    let n = t.black_face_count();
    let period = (t.width() as i64, t.height() as i64);
    let mut uf = WrapUnionFind::new(n);
    for e in xi.open_edges() {
        let (a, b, step) = t.black_endpoints(e);
        uf.union(
            t.black_index(a).expect("black"),
            t.black_index(b).expect("black"),
            (step.0 as i64, step.1 as i64),
            period,
        );
    }
    finish(&mut uf, n)
}

fn finish(uf: &mut WrapUnionFind, n: usize) -> ClusterStructure {
    let mut label_of_root = vec![u32::MAX; n];
    let mut labels = Vec::with_capacity(n);
    let mut lattices = Vec::new();
    let mut sizes = Vec::new();
    for i in 0..n {
        let (r, _) = uf.find(i);
        if label_of_root[r] == u32::MAX {
            label_of_root[r] = lattices.len() as u32;
            lattices.push(uf.lattice_of_root(r));
            sizes.push(0);
        }
        let l = label_of_root[r];
        sizes[l as usize] += 1;
        labels.push(l);
    }
    ClusterStructure {
        labels,
        lattices,
        sizes,
    }
}

/// `q^k(xi) sqrt(q)^|xi|`.
pub fn rc_weight(xi: &BondConfig, params: &ModelParams) -> f64 {
    let k = clusters(xi).component_count();
    params.q.powi(k as i32) * params.sqrt_q().powi(xi.open_count() as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(w: usize, h: usize) -> Torus {
        Torus::new(w, h).unwrap()
    }

    #[test]
    fn bijection_on_2x2_and_4x2() {
        for tor in [t(2, 2), t(4, 2)] {
            for m in 0..1u64 << tor.vertex_count() {
                let xi = BondConfig::from_mask(tor, m);
                let l = bonds_to_loops(&xi);
                assert_eq!(loops_to_bonds(&l), xi);
                assert_eq!(xi.open_count() + xi.dual_open_count(), tor.vertex_count());
            }
        }
    }

    #[test]
    fn extreme_configurations() {
        let tor = t(2, 2);
        let p = ModelParams::new(2.0).unwrap();
        let e = BondConfig::empty(tor);
        assert_eq!(bonds_to_loops(&e).loop_count(), 2);
        let c = clusters(&e);
        assert_eq!(c.component_count(), 2);
        assert!(!c.has_net());
        assert_eq!(rc_weight(&e, &p), 16.0);
        let f = BondConfig::full(tor);
        assert_eq!(bonds_to_loops(&f).loop_count(), 2);
        let c = clusters(&f);
        assert_eq!(c.component_count(), 1);
        assert!(c.has_net());
        assert_eq!(rc_weight(&f, &p), 64.0);
    }

    #[test]
    fn empty_loops_are_black_face_boundaries() {
        let tor = t(4, 4);
        let l = bonds_to_loops(&BondConfig::empty(tor));
        assert_eq!(l.loop_count(), tor.black_face_count());
        assert!(l.loops().iter().all(|x| x.len() == 4 && x.is_contractible()));
        let l = bonds_to_loops(&BondConfig::full(tor));
        assert_eq!(l.loop_count(), tor.black_face_count());
        assert!(l.loops().iter().all(|x| x.len() == 4));
    }

    #[test]
    fn horizontal_ring() {
        // zigzag of black edges along rows 0 and 1 of an 8x8 torus
        let tor = t(8, 8);
        let mut xi = BondConfig::empty(tor);
        for x in 0..8 {
            xi.set(BlackEdge(tor.vertex(x, 1)), true);
        }
        let c = clusters(&xi);
        assert!(!c.has_net());
        let ring = c.label(&tor, tor.face(0, 0)).unwrap() as usize;
        assert_eq!(c.lattices[ring].basis(), vec![(1, 0)]);
        assert_eq!(c.sizes[ring], 8);
        assert_eq!(c.component_count(), tor.black_face_count() - 7);
    }

    #[test]
    fn diagonal_classes_form_a_net() {
        let mut l = WrapLattice::trivial();
        l.add((1, 1));
        assert_eq!(l.rank(), 1);
        assert!(l.contains((2, 2)) && !l.contains((1, 0)));
        l.add((1, -1));
        assert_eq!(l.rank(), 2);
        assert!(l.contains((2, 0)) && !l.contains((1, 0)));
        let mut m = WrapLattice::trivial();
        m.add((0, 3));
        m.add((2, 1));
        m.add((4, 0));
        assert_eq!(m.basis(), vec![(2, 0), (0, 1)]);
    }

    #[test]
    fn euler_identity() {
        for tor in [t(2, 2), t(4, 2), t(2, 4)] {
            for c in [3f64.sqrt(), 1.9] {
                let p = ModelParams::new(c).unwrap();
                let ratios: Vec<f64> = (0..1u64 << tor.vertex_count())
                    .map(|m| {
                        let xi = BondConfig::from_mask(tor, m);
                        let l = bonds_to_loops(&xi).loop_count();
                        let s = clusters(&xi).net_indicator();
                        rc_weight(&xi, &p) / (p.sqrt_q().powi(l as i32) * p.q.powi(s as i32))
                    })
                    .collect();
                for r in &ratios {
                    assert!((r / ratios[0] - 1.0).abs() < 1e-12, "{tor:?} {r} {}", ratios[0]);
                }
            }
        }
    }

    #[test]
    fn single_flip_changes_loop_count_by_one() {
        let tor = t(4, 2);
        for m in 0..1u64 << tor.vertex_count() {
            let xi = BondConfig::from_mask(tor, m);
            let n = bonds_to_loops(&xi).loop_count() as i64;
            for v in tor.vertices() {
                let mut y = xi.clone();
                y.flip(BlackEdge(v));
                let d = bonds_to_loops(&y).loop_count() as i64 - n;
                assert!(d == 1 || d == -1);
            }
        }
    }

    #[test]
    fn swap_symmetry() {
        let tor = t(4, 2);
        for m in 0..1u64 << tor.vertex_count() {
            let xi = BondConfig::from_mask(tor, m);
            let dual = xi.dual_bits();
            // shifting by one column turns white edges into black ones
            let mut shifted = vec![false; tor.vertex_count()];
            for v in tor.vertices() {
                let (x, y) = tor.vertex_xy(v);
                shifted[tor.vertex(x as isize + 1, y as isize).0] = dual[v.0];
            }
            let l1 = bonds_to_loops(&xi).loop_count();
            let l2 = bonds_to_loops(&BondConfig::new(tor, shifted)).loop_count();
            assert_eq!(l1, l2);
        }
    }

    #[test]
    fn net_is_monotone() {
        let tor = t(4, 2);
        for m in 0..1u64 << tor.vertex_count() {
            if !clusters(&BondConfig::from_mask(tor, m)).has_net() {
                continue;
            }
            for v in 0..tor.vertex_count() {
                let up = BondConfig::from_mask(tor, m | 1 << v);
                assert!(clusters(&up).has_net());
            }
        }
    }
}
