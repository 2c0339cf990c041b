//! Zippers, the disorder observable `epsilon` and the loop factors `rho`.

use std::collections::VecDeque;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{Color, Dir, DirEdge, DualPath, Face, Torus};
use crate::loops::{Loop, Pairing, UnorientedLoopConfig};
use crate::six_vertex::{IPower, ModelParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Role {
    Source,
    Sink,
}

/// Dual paths from sources to sinks and the directed edges crossing them
/// from right to left, counted with multiplicity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Zipper {
    torus: Torus,
    sources: Vec<Face>,
    sinks: Vec<Face>,
    paths: Vec<DualPath>,
    gamma: Vec<u32>,
}

/// The directed edge crossing a dual step in direction `d` from right to
/// left, i.e. pointing towards `d.ccw()`.
pub fn right_to_left(torus: &Torus, step: Dir, crossed: crate::geometry::Edge) -> DirEdge {
    let forward = match step {
        Dir::East | Dir::South => true,
        Dir::North | Dir::West => false,
    };
    debug_assert_eq!(
        torus.travel_dir(DirEdge {
            edge: crossed,
            forward
        }),
        step.ccw()
    );
    DirEdge {
        edge: crossed,
        forward,
    }
}

impl Zipper {
    /// Zipper over canonical cut-respecting paths; the `i`-th source is
    /// joined to the `i`-th sink.
    pub fn build(torus: Torus, faces: &[(Face, Role)]) -> Result<Zipper> {
        let sources: Vec<Face> = faces
            .iter()
            .filter(|f| f.1 == Role::Source)
            .map(|f| f.0)
            .collect();
        let sinks: Vec<Face> = faces
            .iter()
            .filter(|f| f.1 == Role::Sink)
            .map(|f| f.0)
            .collect();
        if sources.len() != sinks.len() {
            return Err(Error::UnbalancedZipper {
                sources: sources.len(),
                sinks: sinks.len(),
            });
        }
        let paths = sources
            .iter()
            .zip(&sinks)
            .map(|(&a, &b)| torus.canonical_dual_path(a, b, true))
            .collect();
        Ok(Zipper::with_paths(torus, sources, sinks, paths))
    }

    /// First half of `faces` are sources, second half sinks.
    pub fn halves(torus: Torus, faces: &[Face]) -> Result<Zipper> {
        let h = faces.len() / 2;
        let roles: Vec<(Face, Role)> = faces
            .iter()
            .enumerate()
            .map(|(i, &f)| (f, if i < h { Role::Source } else { Role::Sink }))
            .collect();
        Zipper::build(torus, &roles)
    }

    /// Zipper over explicitly given paths, path `i` running from source `i`
    /// to sink `i`.
    pub fn with_paths(
        torus: Torus,
        sources: Vec<Face>,
        sinks: Vec<Face>,
        paths: Vec<DualPath>,
    ) -> Zipper {
        assert_eq!(sources.len(), sinks.len());
        assert_eq!(paths.len(), sources.len());
        let mut gamma = vec![0; 2 * torus.edge_count()];
        for (i, p) in paths.iter().enumerate() {
            assert_eq!((p.start(), p.end()), (sources[i], sinks[i]));
            for (_, d, e) in p.steps() {
                gamma[right_to_left(&torus, d, e).index()] += 1;
            }
        }
        Zipper {
            torus,
            sources,
            sinks,
            paths,
            gamma,
        }
    }

    pub fn empty(torus: Torus) -> Zipper {
        Zipper::with_paths(torus, vec![], vec![], vec![])
    }

    pub fn torus(&self) -> Torus {
        self.torus
    }

    pub fn sources(&self) -> &[Face] {
        &self.sources
    }

    pub fn sinks(&self) -> &[Face] {
        &self.sinks
    }

    pub fn paths(&self) -> &[DualPath] {
        &self.paths
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }

    /// Multiplicity of a directed edge.
    pub fn gamma(&self, de: DirEdge) -> u32 {
        self.gamma[de.index()]
    }

    /// Directed edges with nonzero multiplicity.
    pub fn support(&self) -> impl Iterator<Item = (DirEdge, u32)> + '_ {
        self.gamma
            .iter()
            .enumerate()
            .filter(|(_, &m)| m > 0)
            .map(|(i, &m)| (DirEdge::from_index(i), m))
    }

    /// `s`: number of white sinks.
    pub fn white_sinks(&self) -> usize {
        self.sinks
            .iter()
            .filter(|&&f| self.torus.color(f) == Color::White)
            .count()
    }

    pub fn sign(&self) -> f64 {
        if self.white_sinks().is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }

    /// Net crossings `|Gamma ∩ H| - |Gamma ∩ -H|`.
    pub fn flux<'a>(&self, h: impl IntoIterator<Item = &'a DirEdge>) -> i64 {
        h.into_iter()
            .map(|&de| self.gamma(de) as i64 - self.gamma(de.reversed()) as i64)
            .sum()
    }

    pub fn epsilon<'a>(&self, h: impl IntoIterator<Item = &'a DirEdge>) -> IPower {
        IPower::new(self.flux(h))
    }

    pub fn marked(&self) -> impl Iterator<Item = Face> + '_ {
        self.sources.iter().chain(&self.sinks).copied()
    }
}

/// Flood fill of the faces on one side of a loop, tracking lifts to the
/// universal cover; `None` when the region wraps around the torus. Faces
/// meet across edges off the loop and across the diagonal that the pairing
/// at a vertex leaves uncut.
fn fill_side(torus: &Torus, pairings: &[Pairing], on_loop: &[bool], start: Face) -> Option<Vec<Face>> {
    // corner order SW, SE, NE, NW with the step to the face across it
    const ACROSS: [(isize, isize); 4] = [(-1, -1), (1, -1), (1, 1), (-1, 1)];
    let mut lift: Vec<Option<(i64, i64)>> = vec![None; torus.face_count()];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    let (sx, sy) = torus.face_xy(start);
    lift[start.0] = Some((sx as i64, sy as i64));
    queue.push_back(start);
    let mut wraps = false;
    while let Some(f) = queue.pop_front() {
        out.push(f);
        let p = lift[f.0].expect("queued faces are lifted");
        let (fx, fy) = torus.face_xy(f);
        let mut next = Vec::with_capacity(8);
        for d in Dir::ALL {
            let st = torus.face_step(f, d);
            if !on_loop[st.crossed.0] {
                next.push((st.to, d.delta()));
            }
        }
        for (k, v) in torus.face_corners(f).into_iter().enumerate() {
            // N-E/S-W leaves the NW-SE diagonal open, i.e. corners SE and NW of f
            let open = match pairings[v.0] {
                Pairing::NeSw => k % 2 == 1,
                Pairing::NwSe => k % 2 == 0,
            };
            if open {
                let (dx, dy) = ACROSS[k];
                next.push((torus.face(fx as isize + dx, fy as isize + dy), (dx, dy)));
            }
        }
        for (to, (dx, dy)) in next {
            let q = (p.0 + dx as i64, p.1 + dy as i64);
            match lift[to.0] {
                Some(old) => wraps |= old != q,
                None => {
                    lift[to.0] = Some(q);
                    queue.push_back(to);
                }
            }
        }
    }
    if wraps {
        None
    } else {
        Some(out)
    }
}

/// Faces enclosed by a contractible loop.
pub fn loop_interior(ulc: &UnorientedLoopConfig, index: usize) -> Result<Vec<Face>> {
    let l = &ulc.loops()[index];
    if !l.is_contractible() {
        return Err(Error::Noncontractible(index));
    }
    let t = ulc.torus();
    let mut on_loop = vec![false; t.edge_count()];
    for de in &l.edges {
        on_loop[de.edge.0] = true;
    }
    let (a, b) = t.edge_faces(l.edges[0].edge);
    for side in [a, b] {
        if let Some(mut faces) = fill_side(&t, ulc.pairings(), &on_loop, side) {
            faces.sort();
            return Ok(faces);
        }
    }
    unreachable!("a contractible loop bounds a disk")
}

/// Sources minus sinks enclosed by a contractible loop.
pub fn delta(z: &Zipper, ulc: &UnorientedLoopConfig, index: usize) -> Result<i64> {
    let inside = loop_interior(ulc, index)?;
    let count = |fs: &[Face]| fs.iter().filter(|f| inside.binary_search(f).is_ok()).count() as i64;
    Ok(count(z.sources()) - count(z.sinks()))
}

/// `delta` read off the flux of the zipper through the loop traversed
/// counterclockwise.
pub fn delta_by_flux(z: &Zipper, l: &Loop) -> Result<i64> {
    if !l.is_contractible() {
        return Err(Error::Noncontractible(0));
    }
    Ok(l.winding() as i64 * z.flux(&l.edges))
}

pub fn rho_of_delta(delta: i64, params: &ModelParams) -> f64 {
    match delta.rem_euclid(4) {
        0 => 1.0,
        1 => -params.rho,
        2 => -1.0,
        _ => params.rho,
    }
}

/// `rho` of one loop: the delta table for contractible loops, the real part
/// of `epsilon` for noncontractible ones.
pub fn rho_of_loop(z: &Zipper, l: &Loop, params: &ModelParams) -> f64 {
    if l.is_contractible() {
        rho_of_delta(l.winding() as i64 * z.flux(&l.edges), params)
    } else {
        z.epsilon(&l.edges).re() as f64
    }
}

pub fn rho_loop(z: &Zipper, ulc: &UnorientedLoopConfig, index: usize, params: &ModelParams) -> f64 {
    let l = &ulc.loops()[index];
    if l.is_contractible() {
        rho_of_delta(delta(z, ulc, index).expect("contractible"), params)
    } else {
        z.epsilon(&l.edges).re() as f64
    }
}

/// The defining ratio `(e^{i lambda w} eps + e^{-i lambda w} conj eps) /
/// (e^{i lambda w} + e^{-i lambda w})`, evaluated in complex arithmetic.
pub fn rho_by_ratio(z: &Zipper, l: &Loop, params: &ModelParams) -> Complex64 {
    let phase = l.phase(params);
    let eps = z.epsilon(&l.edges).to_complex();
    let rev = z.epsilon(&l.reversed().edges).to_complex();
    (phase * eps + phase.conj() * rev) / (phase + phase.conj())
}

pub fn product_rho(z: &Zipper, ulc: &UnorientedLoopConfig, params: &ModelParams) -> f64 {
    if z.is_empty() {
        return 1.0;
    }
    let mut p = 1.0;
    for l in ulc.loops() {
        p *= rho_of_loop(z, l, params);
        if p == 0.0 {
            break;
        }
    }
    p
}

/// Loop functional whose `phi0_n` expectation gives the zero-sector
/// correlation: contractible loops contribute `rho`, and the
/// noncontractible ones are averaged over the orientations that keep both
/// cycle increments at 0 mod 4.
pub fn product_rho_zero_sector(z: &Zipper, ulc: &UnorientedLoopConfig, params: &ModelParams) -> f64 {
    let mut p = 1.0;
    let mut nctr = Vec::new();
    for l in ulc.loops() {
        if l.is_contractible() {
            p *= rho_of_delta(l.winding() as i64 * z.flux(&l.edges), params);
        } else {
            nctr.push((l.displacement, z.flux(&l.edges)));
        }
    }
    if p == 0.0 || nctr.is_empty() {
        return p;
    }
    p * noncontractible_zero_average(&nctr)
}

/// Average of `i^{sum s_j f_j}` over signs `s_j` with `sum s_j d_j = 0 mod
/// 4` in both coordinates, for loops with displacements `d_j` and fluxes
/// `f_j`.
pub(crate) fn noncontractible_zero_average(loops: &[((i32, i32), i64)]) -> f64 {
    // counts indexed by (dx mod 4, dy mod 4, phase mod 4)
    let mut dp = [0f64; 64];
    dp[0] = 1.0;
    for &((dx, dy), f) in loops {
        let mut next = [0f64; 64];
        for (k, &n) in dp.iter().enumerate() {
            if n == 0.0 {
                continue;
            }
            let (a, b, ph) = (k as i64 / 16, k as i64 / 4 % 4, k as i64 % 4);
            for s in [1i64, -1] {
                let a2 = (a + s * dx as i64).rem_euclid(4);
                let b2 = (b + s * dy as i64).rem_euclid(4);
                let p2 = (ph + s * f).rem_euclid(4);
                next[(a2 * 16 + b2 * 4 + p2) as usize] += n;
            }
        }
        dp = next;
    }
    let total: f64 = dp[..4].iter().sum();
    // real parts of 1, i, -1, -i
    (dp[0] - dp[2]) / total
}

fn check_pair(torus: &Torus, u: Face, u2: Face) -> Result<()> {
    if u == u2 {
        return Err(Error::SameFace);
    }
    for f in [u, u2] {
        if torus.color(f) != Color::Black {
            let (x, y) = torus.face_xy(f);
            return Err(Error::NotBlack { x, y });
        }
    }
    Ok(())
}

/// `(N(u, u'), N(u', u))` from loop interiors.
pub fn separating_counts(ulc: &UnorientedLoopConfig, u: Face, u2: Face) -> Result<(u32, u32)> {
    check_pair(&ulc.torus(), u, u2)?;
    let (mut a, mut b) = (0, 0);
    for (i, l) in ulc.loops().iter().enumerate() {
        if !l.is_contractible() {
            continue;
        }
        let inside = loop_interior(ulc, i)?;
        let has = |f: Face| inside.binary_search(&f).is_ok();
        match (has(u), has(u2)) {
            (true, false) => a += 1,
            (false, true) => b += 1,
            _ => {}
        }
    }
    Ok((a, b))
}

/// Same counts from the flux of a single `u -> u'` path through each loop.
pub fn separating_counts_by_flux(
    ulc: &UnorientedLoopConfig,
    z: &Zipper,
) -> (u32, u32) {
    let (mut a, mut b) = (0, 0);
    for l in ulc.loops() {
        if !l.is_contractible() {
            continue;
        }
        match l.winding() as i64 * z.flux(&l.edges) {
            1 => a += 1,
            -1 => b += 1,
            _ => {}
        }
    }
    (a, b)
}

pub fn pair_zipper(torus: Torus, u: Face, u2: Face) -> Result<Zipper> {
    check_pair(&torus, u, u2)?;
    Zipper::build(torus, &[(u, Role::Source), (u2, Role::Sink)])
}
