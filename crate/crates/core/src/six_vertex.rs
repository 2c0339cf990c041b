//! Arrow configurations of the F model, their height functions and spins.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Color, Dir, Edge, Face, Torus, Vertex};

/// Coupled constants of the model at vertex weight `c`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub c: f64,
    /// Cluster weight `(c^2 - 2)^2`.
    pub q: f64,
    /// Turning angle, with `2 cos(lambda / 2) = c`.
    pub lambda: f64,
    /// `tan(lambda)`.
    pub rho: f64,
    /// Critical bond parameter `sqrt(q) / (1 + sqrt(q))`.
    pub p_c: f64,
    /// Success probability `1 - 1/c` of the percolation coins.
    pub coin_p: f64,
}

impl ModelParams {
    pub fn new(c: f64) -> Result<ModelParams> {
        if !(1.0..=2.0).contains(&c) {
            return Err(Error::Weight(c));
        }
        let lambda = 2.0 * (c / 2.0).acos();
        let sqrt_q = (c * c - 2.0).abs();
        Ok(ModelParams {
            c,
            q: sqrt_q * sqrt_q,
            lambda,
            rho: lambda.tan(),
            p_c: sqrt_q / (1.0 + sqrt_q),
            coin_p: 1.0 - 1.0 / c,
        })
    }

    /// `c = sqrt(3)`, the lower end of the random-cluster window (`q = 1`).
    pub fn sqrt3() -> ModelParams {
        ModelParams::new(3f64.sqrt()).expect("in range")
    }

    /// `c = sqrt(2 + sqrt(2))`, where `q = 2` and `rho = 1`.
    pub fn sqrt2_plus_sqrt2() -> ModelParams {
        ModelParams::new((2.0 + 2f64.sqrt()).sqrt()).expect("in range")
    }

    /// Weight of a contractible loop, `2 cos(lambda) = c^2 - 2`. Equals
    /// `sqrt(q)` for `c >= sqrt(2)`.
    pub fn loop_weight(&self) -> f64 {
        self.c * self.c - 2.0
    }

    pub fn sqrt_q(&self) -> f64 {
        self.q.sqrt()
    }

    /// Phase `e^{i lambda / 4}` carried by one left turn.
    pub fn turn_phase(&self) -> Complex64 {
        Complex64::from_polar(1.0, self.lambda / 4.0)
    }
}

/// Parse a vertex weight given as a decimal or as one of the exact symbols
/// `sqrt3` and `sqrt2+sqrt2`.
pub fn parse_weight(s: &str) -> Result<f64> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let t = t.to_ascii_lowercase();
    match t.as_str() {
        "sqrt3" | "sqrt(3)" => Ok(3f64.sqrt()),
        "sqrt2+sqrt2" | "sqrt(2+sqrt2)" | "sqrt(2+sqrt(2))" => Ok((2.0 + 2f64.sqrt()).sqrt()),
        _ => t.parse::<f64>().map_err(|_| Error::WeightSyntax(s.to_string())),
    }
}

/// A power of the imaginary unit, `i^k` with `k` in `0..4`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct IPower(u8);

impl IPower {
    pub const ONE: IPower = IPower(0);
    pub const I: IPower = IPower(1);
    pub const MINUS_ONE: IPower = IPower(2);
    pub const MINUS_I: IPower = IPower(3);

    pub fn new(k: i64) -> IPower {
        IPower(k.rem_euclid(4) as u8)
    }

    pub fn exponent(self) -> u8 {
        self.0
    }

    pub fn is_real(self) -> bool {
        self.0.is_multiple_of(2)
    }

    /// Real part: `1`, `0`, `-1` or `0`.
    pub fn re(self) -> i32 {
        match self.0 {
            0 => 1,
            2 => -1,
            _ => 0,
        }
    }

    pub fn im(self) -> i32 {
        match self.0 {
            1 => 1,
            3 => -1,
            _ => 0,
        }
    }

    pub fn inverse(self) -> IPower {
        IPower((4 - self.0) % 4)
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.re() as f64, self.im() as f64)
    }
}

impl std::ops::Mul for IPower {
    type Output = IPower;
    fn mul(self, rhs: IPower) -> IPower {
        IPower((self.0 + rhs.0) % 4)
    }
}

impl std::ops::MulAssign for IPower {
    fn mul_assign(&mut self, rhs: IPower) {
        *self = *self * rhs;
    }
}

/// One orientation bit per torus edge; `true` points East or North.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ArrowConfig {
    torus: Torus,
    bits: Vec<bool>,
}

/// Bit set of the sides of a vertex whose arrow points into the vertex,
/// indexed by [`Dir::index`].
pub type InMask = u8;

const IN_E: InMask = 1 << 0;
const IN_N: InMask = 1 << 1;
const IN_W: InMask = 1 << 2;
const IN_S: InMask = 1 << 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VertexClass {
    /// Two adjacent incoming arrows; weight 1.
    Unit,
    /// Arrows alternate in and out around the vertex; weight `c`.
    CType,
}

/// Vertex class by in-mask; `None` for masks violating the ice rule.
const CLASS_TABLE: [Option<VertexClass>; 16] = {
    let mut t = [None; 16];
    let mut m = 0;
    while m < 16 {
        if (m as u8).count_ones() == 2 {
            t[m] = if m as u8 == IN_E | IN_W || m as u8 == IN_N | IN_S {
                Some(VertexClass::CType)
            } else {
                Some(VertexClass::Unit)
            };
        }
        m += 1;
    }
    t
};

/// Class of a vertex from its in-mask.
pub fn class_of_mask(mask: InMask) -> Option<VertexClass> {
    CLASS_TABLE[(mask & 15) as usize]
}

impl ArrowConfig {
    pub fn from_bits(torus: Torus, bits: Vec<bool>) -> Result<ArrowConfig> {
        if bits.len() != torus.edge_count() {
            return Err(Error::SizeMismatch {
                width: torus.width(),
                height: torus.height(),
            });
        }
        Ok(ArrowConfig { torus, bits })
    }

    /// Configuration with bit `e` taken from bit `e` of `mask`.
    pub fn from_mask(torus: Torus, mask: u64) -> ArrowConfig {
        let bits = (0..torus.edge_count()).map(|e| mask >> e & 1 == 1).collect();
        ArrowConfig { torus, bits }
    }

    /// All arrows pointing East and North.
    pub fn uniform(torus: Torus) -> ArrowConfig {
        ArrowConfig {
            torus,
            bits: vec![true; torus.edge_count()],
        }
    }

    /// The flat configuration with every vertex of c-type: arrows alternate
    /// along every row and every column, so both cycle increments vanish.
    pub fn flat(torus: Torus) -> ArrowConfig {
        let bits = torus
            .edges()
            .map(|e| {
                let (x, y) = torus.vertex_xy(torus.edge_base(e));
                ((x + y) % 2 == 0) == torus.is_horizontal(e)
            })
            .collect();
        ArrowConfig { torus, bits }
    }

    pub fn torus(&self) -> Torus {
        self.torus
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn bit(&self, e: Edge) -> bool {
        self.bits[e.0]
    }

    pub fn set(&mut self, e: Edge, forward: bool) {
        self.bits[e.0] = forward;
    }

    pub fn flip(&mut self, e: Edge) {
        self.bits[e.0] = !self.bits[e.0];
    }

    /// All arrows reversed.
    pub fn reversed(&self) -> ArrowConfig {
        ArrowConfig {
            torus: self.torus,
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    /// Direction the arrow on `e` points to.
    pub fn arrow_dir(&self, e: Edge) -> Dir {
        match (self.torus.is_horizontal(e), self.bit(e)) {
            (true, true) => Dir::East,
            (true, false) => Dir::West,
            (false, true) => Dir::North,
            (false, false) => Dir::South,
        }
    }

    pub fn in_mask(&self, v: Vertex) -> InMask {
        let t = &self.torus;
        let (x, y) = t.vertex_xy(v);
        let (x, y) = (x as isize, y as isize);
        let mut m = 0;
        if !self.bits[t.east_edge(v).0] {
            m |= IN_E;
        }
        if !self.bits[t.north_edge(v).0] {
            m |= IN_N;
        }
        if self.bits[t.east_edge(t.vertex(x - 1, y)).0] {
            m |= IN_W;
        }
        if self.bits[t.north_edge(t.vertex(x, y - 1)).0] {
            m |= IN_S;
        }
        m
    }

    /// Height increment for a dual step from `f` in direction `dir`: +1 when
    /// the crossed arrow points from the right side of the step to its left.
    pub fn increment(&self, f: Face, dir: Dir) -> i32 {
        let step = self.torus.face_step(f, dir);
        if self.arrow_dir(step.crossed) == dir.ccw() {
            1
        } else {
            -1
        }
    }

    /// Serialize as a header `W H` followed by one line per vertex row with
    /// the (East, North) bit pair of every vertex.
    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for ArrowConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = &self.torus;
        writeln!(f, "{} {}", t.width(), t.height())?;
        for y in 0..t.height() {
            for x in 0..t.width() {
                let v = t.vertex(x as isize, y as isize);
                let e = u8::from(self.bit(t.east_edge(v)));
                let n = u8::from(self.bit(t.north_edge(v)));
                write!(f, "{e}{n}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl FromStr for ArrowConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<ArrowConfig> {
        let mut lines = s.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("missing header".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad header {header:?}"))))
            .collect::<Result<_>>()?;
        let [w, h] = dims[..] else {
            return Err(Error::Parse(format!("bad header {header:?}")));
        };
        let torus = Torus::new(w, h)?;
        let mut bits = vec![false; torus.edge_count()];
        for y in 0..h {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("missing row {y}")))?
                .trim();
            if line.len() != 2 * w {
                return Err(Error::Parse(format!("row {y} has length {}", line.len())));
            }
            for (i, ch) in line.chars().enumerate() {
                let bit = match ch {
                    '0' => false,
                    '1' => true,
                    _ => return Err(Error::Parse(format!("bad character {ch:?}"))),
                };
                let v = torus.vertex((i / 2) as isize, y as isize);
                let e = if i % 2 == 0 {
                    torus.east_edge(v)
                } else {
                    torus.north_edge(v)
                };
                bits[e.0] = bit;
            }
        }
        if lines.next().is_some() {
            return Err(Error::Parse("trailing rows".into()));
        }
        Ok(ArrowConfig { torus, bits })
    }
}

/// True iff exactly two arrows point into every vertex.
pub fn validate_ice(arrows: &ArrowConfig) -> bool {
    arrows
        .torus
        .vertices()
        .all(|v| arrows.in_mask(v).count_ones() == 2)
}

fn ice_error(t: &Torus, v: Vertex) -> Error {
    let (x, y) = t.vertex_xy(v);
    Error::IceViolation { x, y }
}

fn require_ice(arrows: &ArrowConfig) -> Result<()> {
    match arrows
        .torus
        .vertices()
        .find(|&v| arrows.in_mask(v).count_ones() != 2)
    {
        Some(v) => Err(ice_error(&arrows.torus, v)),
        None => Ok(()),
    }
}

pub fn vertex_weight_class(arrows: &ArrowConfig, v: Vertex) -> Result<VertexClass> {
    class_of_mask(arrows.in_mask(v)).ok_or_else(|| ice_error(&arrows.torus, v))
}

/// Number of c-type vertices, `N(alpha)`.
pub fn ctype_count(arrows: &ArrowConfig) -> Result<usize> {
    let mut n = 0;
    for v in arrows.torus.vertices() {
        if vertex_weight_class(arrows, v)? == VertexClass::CType {
            n += 1;
        }
    }
    Ok(n)
}

/// Boltzmann weight `c^N`.
pub fn config_weight(arrows: &ArrowConfig, params: &ModelParams) -> Result<f64> {
    Ok(params.c.powi(ctype_count(arrows)? as i32))
}

/// Integer heights on the faces, fixed at the base face.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HeightField {
    torus: Torus,
    heights: Vec<i32>,
    base_sign: i32,
}

impl HeightField {
    pub fn torus(&self) -> Torus {
        self.torus
    }

    pub fn get(&self, f: Face) -> i32 {
        self.heights[f.0]
    }

    pub fn heights(&self) -> &[i32] {
        &self.heights
    }

    pub fn base_sign(&self) -> i32 {
        self.base_sign
    }
}

/// Heights inside the cut box: `h(u0) = base_sign`, every other face reached
/// along row 0 and then up its column without crossing the seam.
pub fn height_field(arrows: &ArrowConfig, base_sign: i32) -> Result<HeightField> {
    require_ice(arrows)?;
    assert!(base_sign == 1 || base_sign == -1, "base sign must be +-1");
    let t = arrows.torus;
    let (w, h) = (t.width(), t.height());
    let mut heights = vec![0; t.face_count()];
    let (bx, _) = t.face_xy(t.base_face());
    heights[t.base_face().0] = base_sign;
    for x in (0..bx).rev() {
        let east = t.face(x as isize + 1, 0);
        heights[t.face(x as isize, 0).0] = heights[east.0] + arrows.increment(east, Dir::West);
    }
    for x in bx + 1..w {
        let west = t.face(x as isize - 1, 0);
        heights[t.face(x as isize, 0).0] = heights[west.0] + arrows.increment(west, Dir::East);
    }
    for x in 0..w {
        for y in 1..h {
            let below = t.face(x as isize, y as isize - 1);
            heights[t.face(x as isize, y as isize).0] =
                heights[below.0] + arrows.increment(below, Dir::North);
        }
    }
    Ok(HeightField {
        torus: t,
        heights,
        base_sign,
    })
}

/// Height increments around the horizontal and vertical noncontractible
/// dual cycles through face (0, 0).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CycleIncrements {
    pub horizontal: i32,
    pub vertical: i32,
}

impl CycleIncrements {
    pub fn horizontal_mod4(&self) -> i32 {
        self.horizontal.rem_euclid(4)
    }

    pub fn vertical_mod4(&self) -> i32 {
        self.vertical.rem_euclid(4)
    }

    /// Membership in the zero sector: both increments vanish mod 4.
    pub fn is_zero(&self) -> bool {
        self.horizontal_mod4() == 0 && self.vertical_mod4() == 0
    }
}

/// Total height increment for `steps` dual steps from `start` along `dir`.
pub fn cycle_increment(arrows: &ArrowConfig, start: Face, dir: Dir, steps: usize) -> i32 {
    let mut f = start;
    let mut total = 0;
    for _ in 0..steps {
        total += arrows.increment(f, dir);
        f = arrows.torus.face_step(f, dir).to;
    }
    total
}

pub fn sector_increments(arrows: &ArrowConfig) -> Result<CycleIncrements> {
    require_ice(arrows)?;
    let t = arrows.torus;
    let o = t.face(0, 0);
    Ok(CycleIncrements {
        horizontal: cycle_increment(arrows, o, Dir::East, t.width()),
        vertical: cycle_increment(arrows, o, Dir::North, t.height()),
    })
}

/// Spins stored as one sign per face. The value is the sign on black faces
/// and `i` times the sign on white faces.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SpinConfig {
    torus: Torus,
    signs: Vec<i8>,
}

impl SpinConfig {
    pub fn from_signs(torus: Torus, signs: Vec<i8>) -> Result<SpinConfig> {
        if signs.len() != torus.face_count() {
            return Err(Error::SizeMismatch {
                width: torus.width(),
                height: torus.height(),
            });
        }
        assert!(signs.iter().all(|&s| s == 1 || s == -1), "signs must be +-1");
        Ok(SpinConfig { torus, signs })
    }

    pub fn torus(&self) -> Torus {
        self.torus
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn sign(&self, f: Face) -> i8 {
        self.signs[f.0]
    }

    pub fn flip(&mut self, f: Face) {
        self.signs[f.0] = -self.signs[f.0];
    }

    pub fn negated(&self) -> SpinConfig {
        SpinConfig {
            torus: self.torus,
            signs: self.signs.iter().map(|s| -s).collect(),
        }
    }

    /// The spin as a power of `i`.
    pub fn value(&self, f: Face) -> IPower {
        let k = match (self.torus.color(f), self.signs[f.0] > 0) {
            (Color::Black, true) => 0,
            (Color::White, true) => 1,
            (Color::Black, false) => 2,
            (Color::White, false) => 3,
        };
        IPower(k)
    }

    /// Height increment of a dual step, read off the ratio of the spins.
    pub fn increment(&self, f: Face, dir: Dir) -> i32 {
        let to = self.torus.face_step(f, dir).to;
        if self.value(to) == self.value(f) * IPower::I {
            1
        } else {
            -1
        }
    }

    /// `(sigma(u) - sigma(u'))(sigma(v) - sigma(v')) = 0` at vertex `v`,
    /// with `u, u'` and `v, v'` the diagonal face pairs.
    pub fn corner_ok(&self, v: Vertex) -> bool {
        let [ne, nw, sw, se] = self.torus.corner_faces(v);
        self.signs[ne.0] == self.signs[sw.0] || self.signs[nw.0] == self.signs[se.0]
    }

    pub fn check_corners(&self) -> Result<()> {
        match self.torus.vertices().find(|&v| !self.corner_ok(v)) {
            Some(v) => {
                let (x, y) = self.torus.vertex_xy(v);
                Err(Error::CornerConstraint { x, y })
            }
            None => Ok(()),
        }
    }

    /// A vertex is c-type iff both diagonal pairs carry equal spins.
    pub fn is_ctype(&self, v: Vertex) -> bool {
        let [ne, nw, sw, se] = self.torus.corner_faces(v);
        self.signs[ne.0] == self.signs[sw.0] && self.signs[nw.0] == self.signs[se.0]
    }
}

/// `sigma = i^h`.
pub fn spins_from_height(hf: &HeightField) -> SpinConfig {
    let signs = hf
        .heights
        .iter()
        .map(|&h| if h.rem_euclid(4) < 2 { 1 } else { -1 })
        .collect();
    SpinConfig {
        torus: hf.torus,
        signs,
    }
}

/// Recover the arrows from a globally defined spin configuration. The arrow
/// on each edge is fixed by the ratio `i^{+-1}` of the two adjacent spins.
pub fn arrows_from_spins(spin: &SpinConfig) -> Result<ArrowConfig> {
    spin.check_corners()?;
    let t = spin.torus;
    let mut bits = vec![false; t.edge_count()];
    for e in t.edges() {
        let (a, b) = t.edge_faces(e);
        let ratio = spin.value(b) * spin.value(a).inverse();
        bits[e.0] = if t.is_horizontal(e) {
            // stepping north across an East-pointing arrow lowers the height
            ratio == IPower::MINUS_I
        } else {
            ratio == IPower::I
        };
    }
    Ok(ArrowConfig { torus: t, bits })
}
