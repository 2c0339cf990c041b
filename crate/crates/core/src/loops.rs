//! Fully packed noncrossing loops on the torus.
//!
//! A loop configuration is a choice of [`Pairing`] at every vertex: the four
//! edge ends meeting at a vertex are joined in two noncrossing strands. An
//! arrow configuration fixes the pairing at unit vertices and leaves two
//! choices at every c-type vertex; oriented loops follow the arrows.

use num_complex::Complex64;

use crate::error::Result;
use crate::geometry::{Dir, DirEdge, Edge, Torus};
use crate::six_vertex::{class_of_mask, vertex_weight_class, ArrowConfig, ModelParams, VertexClass};

/// Noncrossing pairing of the four edge ends at a vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pairing {
    /// Strands N-E and S-W.
    NeSw,
    /// Strands N-W and S-E.
    NwSe,
}

impl Pairing {
    pub fn from_bit(b: bool) -> Pairing {
        if b {
            Pairing::NwSe
        } else {
            Pairing::NeSw
        }
    }

    pub fn bit(self) -> bool {
        self == Pairing::NwSe
    }

    pub fn other(self) -> Pairing {
        match self {
            Pairing::NeSw => Pairing::NwSe,
            Pairing::NwSe => Pairing::NeSw,
        }
    }

    /// The side joined to `side` by this pairing.
    pub fn partner(self, side: Dir) -> Dir {
        match (self, side) {
            (Pairing::NeSw, Dir::North) => Dir::East,
            (Pairing::NeSw, Dir::East) => Dir::North,
            (Pairing::NeSw, Dir::South) => Dir::West,
            (Pairing::NeSw, Dir::West) => Dir::South,
            (Pairing::NwSe, Dir::North) => Dir::West,
            (Pairing::NwSe, Dir::West) => Dir::North,
            (Pairing::NwSe, Dir::South) => Dir::East,
            (Pairing::NwSe, Dir::East) => Dir::South,
        }
    }

    /// Whether this pairing joins every incoming end to an outgoing one.
    pub fn follows_arrows(self, in_mask: u8) -> bool {
        let is_in = |d: Dir| in_mask >> d.index() & 1 == 1;
        [Dir::North, Dir::South]
            .into_iter()
            .all(|d| is_in(d) != is_in(self.partner(d)))
    }
}

/// Pairing forced at a unit vertex; `None` at c-type vertices and ice
/// violations.
pub fn forced_pairing(in_mask: u8) -> Option<Pairing> {
    match class_of_mask(in_mask)? {
        VertexClass::CType => None,
        VertexClass::Unit => [Pairing::NeSw, Pairing::NwSe]
            .into_iter()
            .find(|p| p.follows_arrows(in_mask)),
    }
}

/// One traced loop.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Loop {
    /// Directed edges in traversal order.
    pub edges: Vec<DirEdge>,
    pub left: u32,
    pub right: u32,
    /// Net number of seam crossings along x and y.
    pub displacement: (i32, i32),
}

impl Loop {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Winding `(left - right) / 4` of the traversal: `+1` counterclockwise,
    /// `-1` clockwise and `0` for noncontractible loops.
    pub fn winding(&self) -> i32 {
        (self.left as i32 - self.right as i32) / 4
    }

    pub fn turn_balance(&self) -> i32 {
        self.left as i32 - self.right as i32
    }

    pub fn is_contractible(&self) -> bool {
        self.displacement == (0, 0)
    }

    /// Same loop traversed backwards.
    pub fn reversed(&self) -> Loop {
        Loop {
            edges: self.edges.iter().rev().map(|e| e.reversed()).collect(),
            left: self.right,
            right: self.left,
            displacement: (-self.displacement.0, -self.displacement.1),
        }
    }

    /// `e^{i lambda w}`.
    pub fn phase(&self, params: &ModelParams) -> Complex64 {
        Complex64::from_polar(1.0, params.lambda * self.winding() as f64)
    }
}

/// Result of following the pairings for one step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Step {
    pub next: DirEdge,
    pub left: bool,
}

/// Follow `de` to its end vertex and leave through the paired side.
pub(crate) fn step(torus: &Torus, pairings: &[Pairing], de: DirEdge) -> Step {
    let d = torus.travel_dir(de);
    let (_, w) = torus.endpoints(de);
    let out = pairings[w.0].partner(d.opposite());
    Step {
        next: torus.incident(w, out),
        left: out == d.ccw(),
    }
}

/// Seam crossing of a directed edge, as a (dx, dy) contribution.
pub(crate) fn seam_crossing(torus: &Torus, de: DirEdge) -> (i32, i32) {
    let (x, y) = torus.vertex_xy(torus.edge_base(de.edge));
    let s = if de.forward { 1 } else { -1 };
    if torus.is_horizontal(de.edge) {
        if x + 1 == torus.width() {
            (s, 0)
        } else {
            (0, 0)
        }
    } else if y + 1 == torus.height() {
        (0, s)
    } else {
        (0, 0)
    }
}

pub(crate) fn trace(torus: &Torus, pairings: &[Pairing], start: DirEdge) -> Loop {
    let mut edges = Vec::new();
    let (mut left, mut right) = (0, 0);
    let mut disp = (0, 0);
    let mut de = start;
    loop {
        edges.push(de);
        let s = seam_crossing(torus, de);
        disp.0 += s.0;
        disp.1 += s.1;
        let st = step(torus, pairings, de);
        if st.left {
            left += 1;
        } else {
            right += 1;
        }
        de = st.next;
        if de == start {
            break;
        }
        debug_assert!(edges.len() <= torus.edge_count(), "runaway trace");
    }
    Loop {
        edges,
        left,
        right,
        displacement: disp,
    }
}

/// Loops of a pairing field, starting each from the lowest untraced edge.
/// `orient` gives the traversal direction of a starting edge.
fn trace_all(
    torus: &Torus,
    pairings: &[Pairing],
    mut orient: impl FnMut(Edge) -> bool,
) -> (Vec<Loop>, Vec<u32>) {
    let mut owner = vec![u32::MAX; torus.edge_count()];
    let mut loops = Vec::new();
    for e in torus.edges() {
        if owner[e.0] != u32::MAX {
            continue;
        }
        let l = trace(
            torus,
            pairings,
            DirEdge {
                edge: e,
                forward: orient(e),
            },
        );
        for de in &l.edges {
            owner[de.edge.0] = loops.len() as u32;
        }
        loops.push(l);
    }
    (loops, owner)
}

/// Fully packed oriented loops following an arrow configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrientedLoopConfig {
    arrows: ArrowConfig,
    pairings: Vec<Pairing>,
    loops: Vec<Loop>,
}

impl OrientedLoopConfig {
    /// Trace the loops of `arrows` under the given pairings. Panics if a
    /// pairing joins two incoming or two outgoing ends.
    pub fn new(arrows: ArrowConfig, pairings: Vec<Pairing>) -> OrientedLoopConfig {
        let t = arrows.torus();
        for v in t.vertices() {
            assert!(
                pairings[v.0].follows_arrows(arrows.in_mask(v)),
                "pairing at {v:?} does not follow the arrows"
            );
        }
        let (loops, _) = trace_all(&t, &pairings, |e| arrows.bit(e));
        OrientedLoopConfig {
            arrows,
            pairings,
            loops,
        }
    }

    pub fn arrows(&self) -> &ArrowConfig {
        &self.arrows
    }

    pub fn pairings(&self) -> &[Pairing] {
        &self.pairings
    }

    pub fn loops(&self) -> &[Loop] {
        &self.loops
    }

    pub fn total_left(&self) -> u32 {
        self.loops.iter().map(|l| l.left).sum()
    }

    pub fn total_right(&self) -> u32 {
        self.loops.iter().map(|l| l.right).sum()
    }
}

/// All resolutions of an arrow configuration, `2^N` of them for `N` c-type
/// vertices. Resolution bit `j` chooses the pairing at the `j`-th c-type
/// vertex: 0 for N-E/S-W, 1 for N-W/S-E.
pub fn expand_resolutions(arrows: &ArrowConfig) -> Result<Resolutions> {
    let t = arrows.torus();
    let mut base = Vec::with_capacity(t.vertex_count());
    let mut free = Vec::new();
    for v in t.vertices() {
        match vertex_weight_class(arrows, v)? {
            VertexClass::Unit => {
                base.push(forced_pairing(arrows.in_mask(v)).expect("unit vertex"))
            }
            VertexClass::CType => {
                free.push(v.0);
                base.push(Pairing::NeSw);
            }
        }
    }
    Ok(Resolutions {
        arrows: arrows.clone(),
        base,
        free,
        next: 0,
    })
}

pub struct Resolutions {
    arrows: ArrowConfig,
    base: Vec<Pairing>,
    free: Vec<usize>,
    next: u64,
}

impl Resolutions {
    pub fn ctype_vertices(&self) -> usize {
        self.free.len()
    }

    fn pairings_for(&self, choice: u64) -> Vec<Pairing> {
        let mut p = self.base.clone();
        for (j, &v) in self.free.iter().enumerate() {
            p[v] = Pairing::from_bit(choice >> j & 1 == 1);
        }
        p
    }
}

impl Iterator for Resolutions {
    type Item = OrientedLoopConfig;

    fn next(&mut self) -> Option<OrientedLoopConfig> {
        if self.next >> self.free.len() != 0 {
            return None;
        }
        let p = self.pairings_for(self.next);
        self.next += 1;
        Some(OrientedLoopConfig::new(self.arrows.clone(), p))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (1usize << self.free.len()) - self.next as usize;
        (left, Some(left))
    }
}

/// `e^{i lambda (left - right) / 4}`.
pub fn oriented_weight(olc: &OrientedLoopConfig, params: &ModelParams) -> Complex64 {
    let balance = olc.total_left() as f64 - olc.total_right() as f64;
    Complex64::from_polar(1.0, params.lambda * balance / 4.0)
}

/// Unoriented fully packed loops, determined by the pairing at each vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnorientedLoopConfig {
    torus: Torus,
    pairings: Vec<Pairing>,
    loops: Vec<Loop>,
    owner: Vec<u32>,
}

impl UnorientedLoopConfig {
    pub fn from_pairings(torus: Torus, pairings: Vec<Pairing>) -> UnorientedLoopConfig {
        assert_eq!(pairings.len(), torus.vertex_count());
        let (loops, owner) = trace_all(&torus, &pairings, |_| true);
        UnorientedLoopConfig {
            torus,
            pairings,
            loops,
            owner,
        }
    }

    pub fn torus(&self) -> Torus {
        self.torus
    }

    pub fn pairings(&self) -> &[Pairing] {
        &self.pairings
    }

    /// Loops in canonical traversal: each starts at its lowest edge, crossed
    /// in the forward direction.
    pub fn loops(&self) -> &[Loop] {
        &self.loops
    }

    pub fn loop_count(&self) -> usize {
        self.loops.len()
    }

    pub fn noncontractible_count(&self) -> usize {
        self.loops.iter().filter(|l| !l.is_contractible()).count()
    }

    pub fn contractible_count(&self) -> usize {
        self.loop_count() - self.noncontractible_count()
    }

    pub fn all_contractible(&self) -> bool {
        self.loops.iter().all(Loop::is_contractible)
    }

    /// Index of the loop running along `e`.
    pub fn loop_of(&self, e: Edge) -> usize {
        self.owner[e.0] as usize
    }

    /// Oriented configuration with loop `j` reversed iff bit `j` of `mask`.
    pub fn orient(&self, mask: u64) -> OrientedLoopConfig {
        let mut bits = vec![false; self.torus.edge_count()];
        for (j, l) in self.loops.iter().enumerate() {
            let flip = mask >> j & 1 == 1;
            for de in &l.edges {
                bits[de.edge.0] = de.forward != flip;
            }
        }
        let arrows = ArrowConfig::from_bits(self.torus, bits).expect("sized to torus");
        OrientedLoopConfig::new(arrows, self.pairings.clone())
    }
}

pub fn forget_orientation(olc: &OrientedLoopConfig) -> UnorientedLoopConfig {
    UnorientedLoopConfig::from_pairings(olc.arrows.torus(), olc.pairings.clone())
}

/// `sqrt(q)^|L| (2 / sqrt(q))^|L_nctr|`, evaluated as `(2 cos lambda)^{ctr}
/// 2^{nctr}` so that the formula stays finite at `q = 0`.
pub fn loop_measure_weight(ulc: &UnorientedLoopConfig, params: &ModelParams) -> f64 {
    params.loop_weight().powi(ulc.contractible_count() as i32)
        * 2f64.powi(ulc.noncontractible_count() as i32)
}

/// Loop weight of the zero-sector measure: halved when a noncontractible
/// loop is present.
pub fn zero_sector_weight(ulc: &UnorientedLoopConfig, params: &ModelParams) -> f64 {
    let w = loop_measure_weight(ulc, params);
    if ulc.all_contractible() {
        w
    } else {
        0.5 * w
    }
}
