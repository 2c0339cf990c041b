//! Even square-lattice tori with their checkerboard face coloring.
//!
//! Vertices, faces and edges use row-major coordinates in the box
//! `[0, width) x [0, height)`. A face is the unit square whose lower-left
//! corner is the vertex with the same coordinates; it is black iff `x + y`
//! is even. Edge `2 * v` is the East edge leaving vertex `v`, edge `2 * v + 1`
//! the North edge. The cut of the box (the seam) sits between the maximal
//! coordinate and zero in both directions.
//!
//! Every torus vertex carries one edge of the black sublattice (joining the
//! two black faces that meet at the vertex diagonally) and the dual white
//! edge (the other diagonal). Black edges are therefore indexed by vertex.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Vertex(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Face(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge(pub usize);

/// Black-sublattice edge, identified by the torus vertex it passes through.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlackEdge(pub Vertex);

/// White-sublattice edge, identified by the torus vertex it passes through.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WhiteEdge(pub Vertex);

impl BlackEdge {
    pub fn dual(self) -> WhiteEdge {
        WhiteEdge(self.0)
    }
}

impl WhiteEdge {
    pub fn dual(self) -> BlackEdge {
        BlackEdge(self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Color {
    Black,
    White,
}

impl Color {
    pub fn other(self) -> Color {
        match self {
            Color::Black => Color::White,
            Color::White => Color::Black,
        }
    }
}

/// Lattice directions in counterclockwise order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dir {
    East,
    North,
    West,
    South,
}

impl Dir {
    pub const ALL: [Dir; 4] = [Dir::East, Dir::North, Dir::West, Dir::South];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Dir {
        Dir::ALL[i & 3]
    }

    pub fn ccw(self) -> Dir {
        Dir::from_index(self.index() + 1)
    }

    pub fn cw(self) -> Dir {
        Dir::from_index(self.index() + 3)
    }

    pub fn opposite(self) -> Dir {
        Dir::from_index(self.index() + 2)
    }

    pub fn delta(self) -> (isize, isize) {
        match self {
            Dir::East => (1, 0),
            Dir::North => (0, 1),
            Dir::West => (-1, 0),
            Dir::South => (0, -1),
        }
    }
}

/// An edge together with a direction of travel. `forward` means East for
/// horizontal edges and North for vertical ones.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DirEdge {
    pub edge: Edge,
    pub forward: bool,
}

impl DirEdge {
    pub fn reversed(self) -> DirEdge {
        DirEdge {
            edge: self.edge,
            forward: !self.forward,
        }
    }

    /// Dense index in `0..2 * edge_count`.
    pub fn index(self) -> usize {
        2 * self.edge.0 + usize::from(!self.forward)
    }

    pub fn from_index(i: usize) -> DirEdge {
        DirEdge {
            edge: Edge(i / 2),
            forward: i.is_multiple_of(2),
        }
    }
}

/// One step of a dual path: the face reached and the torus edge crossed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FaceStep {
    pub to: Face,
    pub crossed: Edge,
    /// The step crosses the seam of the cut box.
    pub across_cut: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Torus {
    width: usize,
    height: usize,
}

pub type TorusGeometry = Torus;

impl Torus {
    pub fn new(width: usize, height: usize) -> Result<Torus> {
        if width < 2 || height < 2 || !width.is_multiple_of(2) || !height.is_multiple_of(2) {
            return Err(Error::Dimension { width, height });
        }
        Ok(Torus { width, height })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn vertex_count(&self) -> usize {
        self.width * self.height
    }

    pub fn face_count(&self) -> usize {
        self.width * self.height
    }

    pub fn edge_count(&self) -> usize {
        2 * self.width * self.height
    }

    pub fn black_face_count(&self) -> usize {
        self.face_count() / 2
    }

    /// Black-sublattice edges, one per torus vertex.
    pub fn black_edge_count(&self) -> usize {
        self.vertex_count()
    }

    fn wrap(&self, x: isize, y: isize) -> usize {
        let w = self.width as isize;
        let h = self.height as isize;
        (y.rem_euclid(h) * w + x.rem_euclid(w)) as usize
    }

    pub fn vertex(&self, x: isize, y: isize) -> Vertex {
        Vertex(self.wrap(x, y))
    }

    pub fn face(&self, x: isize, y: isize) -> Face {
        Face(self.wrap(x, y))
    }

    pub fn vertex_xy(&self, v: Vertex) -> (usize, usize) {
        (v.0 % self.width, v.0 / self.width)
    }

    pub fn face_xy(&self, f: Face) -> (usize, usize) {
        (f.0 % self.width, f.0 / self.width)
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vertex> {
        (0..self.vertex_count()).map(Vertex)
    }

    pub fn faces(&self) -> impl Iterator<Item = Face> {
        (0..self.face_count()).map(Face)
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> {
        (0..self.edge_count()).map(Edge)
    }

    pub fn black_faces(&self) -> impl Iterator<Item = Face> + '_ {
        self.faces().filter(move |&f| self.color(f) == Color::Black)
    }

    pub fn white_faces(&self) -> impl Iterator<Item = Face> + '_ {
        self.faces().filter(move |&f| self.color(f) == Color::White)
    }

    pub fn color(&self, f: Face) -> Color {
        let (x, y) = self.face_xy(f);
        if (x + y) % 2 == 0 {
            Color::Black
        } else {
            Color::White
        }
    }

    /// Dense index of a black face in `0..black_face_count()`.
    pub fn black_index(&self, f: Face) -> Option<usize> {
        match self.color(f) {
            Color::Black => Some(f.0 / 2),
            Color::White => None,
        }
    }

    /// Inverse of [`Torus::black_index`].
    pub fn black_face(&self, index: usize) -> Face {
        let per_row = self.width / 2;
        let y = index / per_row;
        let x = 2 * (index % per_row) + (y % 2);
        Face(y * self.width + x)
    }

    /// The base white face `u0`, the one with lower-left vertex (1, 0).
    pub fn base_face(&self) -> Face {
        self.face(1, 0)
    }

    pub fn east_edge(&self, v: Vertex) -> Edge {
        Edge(2 * v.0)
    }

    pub fn north_edge(&self, v: Vertex) -> Edge {
        Edge(2 * v.0 + 1)
    }

    pub fn is_horizontal(&self, e: Edge) -> bool {
        e.0.is_multiple_of(2)
    }

    /// Vertex the edge leaves in its forward (East / North) direction.
    pub fn edge_base(&self, e: Edge) -> Vertex {
        Vertex(e.0 / 2)
    }

    /// Direction of travel along a directed edge.
    pub fn travel_dir(&self, de: DirEdge) -> Dir {
        match (self.is_horizontal(de.edge), de.forward) {
            (true, true) => Dir::East,
            (true, false) => Dir::West,
            (false, true) => Dir::North,
            (false, false) => Dir::South,
        }
    }

    /// Start and end vertex of a directed edge.
    pub fn endpoints(&self, de: DirEdge) -> (Vertex, Vertex) {
        let base = self.edge_base(de.edge);
        let (x, y) = self.vertex_xy(base);
        let (x, y) = (x as isize, y as isize);
        let other = if self.is_horizontal(de.edge) {
            self.vertex(x + 1, y)
        } else {
            self.vertex(x, y + 1)
        };
        if de.forward {
            (base, other)
        } else {
            (other, base)
        }
    }

    /// The edge incident to `v` on the given side, oriented away from `v`.
    pub fn incident(&self, v: Vertex, side: Dir) -> DirEdge {
        let (x, y) = self.vertex_xy(v);
        let (x, y) = (x as isize, y as isize);
        match side {
            Dir::East => DirEdge {
                edge: self.east_edge(v),
                forward: true,
            },
            Dir::North => DirEdge {
                edge: self.north_edge(v),
                forward: true,
            },
            Dir::West => DirEdge {
                edge: self.east_edge(self.vertex(x - 1, y)),
                forward: false,
            },
            Dir::South => DirEdge {
                edge: self.north_edge(self.vertex(x, y - 1)),
                forward: false,
            },
        }
    }

    /// Faces meeting at `v`, in the order NE, NW, SW, SE.
    pub fn corner_faces(&self, v: Vertex) -> [Face; 4] {
        let (x, y) = self.vertex_xy(v);
        let (x, y) = (x as isize, y as isize);
        [
            self.face(x, y),
            self.face(x - 1, y),
            self.face(x - 1, y - 1),
            self.face(x, y - 1),
        ]
    }

    /// Corners of a face in the order SW, SE, NE, NW.
    pub fn face_corners(&self, f: Face) -> [Vertex; 4] {
        let (x, y) = self.face_xy(f);
        let (x, y) = (x as isize, y as isize);
        [
            self.vertex(x, y),
            self.vertex(x + 1, y),
            self.vertex(x + 1, y + 1),
            self.vertex(x, y + 1),
        ]
    }

    /// Step from a face to its neighbor across one torus edge.
    pub fn face_step(&self, f: Face, dir: Dir) -> FaceStep {
        let (x, y) = self.face_xy(f);
        let (xi, yi) = (x as isize, y as isize);
        let (to, crossed, across_cut) = match dir {
            Dir::East => (
                self.face(xi + 1, yi),
                self.north_edge(self.vertex(xi + 1, yi)),
                x + 1 == self.width,
            ),
            Dir::North => (
                self.face(xi, yi + 1),
                self.east_edge(self.vertex(xi, yi + 1)),
                y + 1 == self.height,
            ),
            Dir::West => (
                self.face(xi - 1, yi),
                self.north_edge(self.vertex(xi, yi)),
                x == 0,
            ),
            Dir::South => (
                self.face(xi, yi - 1),
                self.east_edge(self.vertex(xi, yi)),
                y == 0,
            ),
        };
        FaceStep {
            to,
            crossed,
            across_cut,
        }
    }

    /// The two faces separated by an edge: (south, north) for a horizontal
    /// edge and (west, east) for a vertical one.
    pub fn edge_faces(&self, e: Edge) -> (Face, Face) {
        let (x, y) = self.vertex_xy(self.edge_base(e));
        let (x, y) = (x as isize, y as isize);
        if self.is_horizontal(e) {
            (self.face(x, y - 1), self.face(x, y))
        } else {
            (self.face(x - 1, y), self.face(x, y))
        }
    }

    /// Endpoints of the black edge through `v`, with the lattice step from
    /// the first to the second in face coordinates.
    pub fn black_endpoints(&self, e: BlackEdge) -> (Face, Face, (isize, isize)) {
        let [ne, nw, sw, se] = self.corner_faces(e.0);
        if self.color(ne) == Color::Black {
            (sw, ne, (1, 1))
        } else {
            (nw, se, (1, -1))
        }
    }

    /// Endpoints of the white edge through `v`, with the lattice step.
    pub fn white_endpoints(&self, e: WhiteEdge) -> (Face, Face, (isize, isize)) {
        let [ne, nw, sw, se] = self.corner_faces(e.0);
        if self.color(ne) == Color::White {
            (sw, ne, (1, 1))
        } else {
            (nw, se, (1, -1))
        }
    }

    /// Split of a torus vertex into its black and white sublattice edges.
    pub fn medial_split(&self, v: Vertex) -> (BlackEdge, WhiteEdge) {
        (BlackEdge(v), WhiteEdge(v))
    }

    /// Deterministic staircase path of faces from `u` to `target`: first all
    /// horizontal steps, then all vertical ones. A cut-respecting path stays
    /// inside the box; otherwise the shorter way around is taken (ties go in
    /// the positive direction).
    pub fn canonical_dual_path(&self, u: Face, target: Face, cut_respecting: bool) -> DualPath {
        let (x0, y0) = self.face_xy(u);
        let (x1, y1) = self.face_xy(target);
        let dx = self.signed_offset(x0, x1, self.width, cut_respecting);
        let dy = self.signed_offset(y0, y1, self.height, cut_respecting);
        let mut dirs = Vec::with_capacity(dx.unsigned_abs() + dy.unsigned_abs());
        let hx = if dx >= 0 { Dir::East } else { Dir::West };
        let hy = if dy >= 0 { Dir::North } else { Dir::South };
        dirs.extend(std::iter::repeat_n(hx, dx.unsigned_abs()));
        dirs.extend(std::iter::repeat_n(hy, dy.unsigned_abs()));
        DualPath::from_steps(self, u, &dirs)
    }

    fn signed_offset(&self, from: usize, to: usize, period: usize, cut: bool) -> isize {
        let d = to as isize - from as isize;
        if cut {
            return d;
        }
        let p = period as isize;
        let d = d.rem_euclid(p);
        if d > p / 2 {
            d - p
        } else {
            d
        }
    }
}

/// A path of faces, consecutive faces sharing one torus edge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DualPath {
    faces: Vec<Face>,
    dirs: Vec<Dir>,
    crossed: Vec<Edge>,
    cut_respecting: bool,
}

impl DualPath {
    pub fn from_steps(torus: &Torus, start: Face, dirs: &[Dir]) -> DualPath {
        let mut faces = Vec::with_capacity(dirs.len() + 1);
        let mut crossed = Vec::with_capacity(dirs.len());
        let mut cut_respecting = true;
        faces.push(start);
        let mut at = start;
        for &d in dirs {
            let step = torus.face_step(at, d);
            cut_respecting &= !step.across_cut;
            crossed.push(step.crossed);
            faces.push(step.to);
            at = step.to;
        }
        DualPath {
            faces,
            dirs: dirs.to_vec(),
            crossed,
            cut_respecting,
        }
    }

    pub fn len(&self) -> usize {
        self.dirs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dirs.is_empty()
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn dirs(&self) -> &[Dir] {
        &self.dirs
    }

    pub fn crossed_edges(&self) -> &[Edge] {
        &self.crossed
    }

    pub fn start(&self) -> Face {
        self.faces[0]
    }

    pub fn end(&self) -> Face {
        *self.faces.last().expect("path has a start face")
    }

    pub fn is_cut_respecting(&self) -> bool {
        self.cut_respecting
    }

    pub fn reversed(&self) -> DualPath {
        let mut faces = self.faces.clone();
        faces.reverse();
        let dirs = self.dirs.iter().rev().map(|d| d.opposite()).collect();
        let mut crossed = self.crossed.clone();
        crossed.reverse();
        DualPath {
            faces,
            dirs,
            crossed,
            cut_respecting: self.cut_respecting,
        }
    }

    /// Iterate steps as `(from, dir, crossed edge)`.
    pub fn steps(&self) -> impl Iterator<Item = (Face, Dir, Edge)> + '_ {
        self.faces
            .iter()
            .zip(self.dirs.iter())
            .zip(self.crossed.iter())
            .map(|((&f, &d), &e)| (f, d, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_on_small_tori() {
        let t = Torus::new(2, 2).unwrap();
        assert_eq!(t.vertex_count(), 4);
        assert_eq!(t.edge_count(), 8);
        assert_eq!(t.face_count(), 4);
        assert_eq!(t.black_faces().count(), 2);
        assert_eq!(t.white_faces().count(), 2);

        let t = Torus::new(4, 2).unwrap();
        assert_eq!(t.vertex_count(), 8);
        assert_eq!(t.edge_count(), 16);
        assert_eq!(t.face_count(), 8);
    }

    #[test]
    fn rejects_odd_or_zero() {
        assert_eq!(
            Torus::new(3, 2),
            Err(Error::Dimension {
                width: 3,
                height: 2
            })
        );
        assert!(Torus::new(0, 2).is_err());
        assert!(Torus::new(2, 5).is_err());
    }

    #[test]
    fn black_index_roundtrip() {
        let t = Torus::new(6, 4).unwrap();
        for (i, f) in t.black_faces().enumerate() {
            assert_eq!(t.black_index(f), Some(i));
            assert_eq!(t.black_face(i), f);
        }
        assert_eq!(t.black_index(t.base_face()), None);
    }

    #[test]
    fn medial_split_is_a_bijection_onto_black_edges() {
        let t = Torus::new(2, 2).unwrap();
        let mut seen = std::collections::HashSet::new();
        for v in t.vertices() {
            let (b, w) = t.medial_split(v);
            assert_eq!(b.dual(), w);
            assert_eq!(w.dual(), b);
            assert!(seen.insert(b));
        }
        assert_eq!(seen.len(), 4);
    }

    #[test]
    fn black_and_white_edges_are_the_two_diagonals() {
        let t = Torus::new(4, 4).unwrap();
        for v in t.vertices() {
            let (b, w) = t.medial_split(v);
            let (b0, b1, bd) = t.black_endpoints(b);
            let (w0, w1, wd) = t.white_endpoints(w);
            assert_eq!(t.color(b0), Color::Black);
            assert_eq!(t.color(b1), Color::Black);
            assert_eq!(t.color(w0), Color::White);
            assert_eq!(t.color(w1), Color::White);
            // the diagonals are perpendicular, so they cross at the vertex
            assert_eq!(bd.0 * wd.0 + bd.1 * wd.1, 0);
            let corners = t.corner_faces(v);
            for f in [b0, b1, w0, w1] {
                assert!(corners.contains(&f));
            }
        }
        // vertex (1, 0): black faces NW = (0, 0) and SE = (1, 3)
        let (a, b, _) = t.black_endpoints(BlackEdge(t.vertex(1, 0)));
        assert_eq!((t.face_xy(a), t.face_xy(b)), ((0, 0), (1, 3)));
    }

    #[test]
    fn base_face_is_white() {
        let t = Torus::new(4, 2).unwrap();
        assert_eq!(t.color(t.base_face()), Color::White);
        assert_eq!(t.face_xy(t.base_face()), (1, 0));
    }

    #[test]
    fn canonical_paths() {
        let t = Torus::new(8, 8).unwrap();
        let a = t.face(0, 0);
        assert!(t.canonical_dual_path(a, a, true).is_empty());
        let p = t.canonical_dual_path(a, t.face(1, 0), true);
        assert_eq!(p.len(), 1);
        let p = t.canonical_dual_path(a, t.face(3, 3), true);
        assert_eq!(p.len(), 6);
        assert!(p.is_cut_respecting());
        assert_eq!(p.end(), t.face(3, 3));
        // the cut-respecting path from column 7 to column 0 walks the long way
        let p = t.canonical_dual_path(t.face(7, 0), a, true);
        assert_eq!(p.len(), 7);
        assert!(p.is_cut_respecting());
        let p = t.canonical_dual_path(t.face(7, 0), a, false);
        assert_eq!(p.len(), 1);
        assert!(!p.is_cut_respecting());
    }

    #[test]
    fn path_reversal() {
        let t = Torus::new(6, 4).unwrap();
        let p = t.canonical_dual_path(t.face(0, 1), t.face(4, 3), true);
        let r = p.reversed();
        let mut fwd = p.faces().to_vec();
        fwd.reverse();
        assert_eq!(r.faces(), &fwd[..]);
        assert_eq!(DualPath::from_steps(&t, r.start(), r.dirs()), r);
    }

    #[test]
    fn face_steps_cross_the_shared_edge() {
        let t = Torus::new(4, 4).unwrap();
        for f in t.faces() {
            for d in Dir::ALL {
                let s = t.face_step(f, d);
                let (a, b) = t.edge_faces(s.crossed);
                assert!((a == f && b == s.to) || (b == f && a == s.to));
                assert_eq!(t.face_step(s.to, d.opposite()).to, f);
            }
        }
    }
}
