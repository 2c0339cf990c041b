//! Percolation `omega` on the black sublattice built on top of the spins.

use std::collections::BTreeMap;

use rand::Rng;

use crate::cluster::{clusters, BondConfig};
use crate::error::{Error, Result};
use crate::geometry::{BlackEdge, Face, Torus};
use crate::oracle::{IceEnsemble, Limits, Sector};
use crate::six_vertex::{height_field, spins_from_height, ModelParams, SpinConfig};

/// Black edges whose dual white edge joins unequal white spins.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContourSet {
    torus: Torus,
    edges: Vec<bool>,
}

impl ContourSet {
    pub fn contains(&self, e: BlackEdge) -> bool {
        self.edges[e.0 .0]
    }

    pub fn len(&self) -> usize {
        self.edges.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn as_bonds(&self) -> BondConfig {
        BondConfig::new(self.torus, self.edges.clone())
    }
}

pub fn contours(spin: &SpinConfig) -> Result<ContourSet> {
    spin.check_corners()?;
    let t = spin.torus();
    let edges = t
        .vertices()
        .map(|v| {
            let (a, b, _) = t.white_endpoints(crate::geometry::WhiteEdge(v));
            spin.sign(a) != spin.sign(b)
        })
        .collect();
    Ok(ContourSet { torus: t, edges })
}

/// State of a black edge before the coins are tossed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeClass {
    Contour,
    Candidate,
    Closed,
}

pub fn edge_classes(spin: &SpinConfig) -> Result<Vec<EdgeClass>> {
    let eta = contours(spin)?;
    let t = spin.torus();
    Ok(t.vertices()
        .map(|v| {
            let (a, b, _) = t.black_endpoints(BlackEdge(v));
            if eta.edges[v.0] {
                EdgeClass::Contour
            } else if spin.sign(a) == spin.sign(b) {
                EdgeClass::Candidate
            } else {
                EdgeClass::Closed
            }
        })
        .collect())
}

/// Contours open, then one coin with success probability `1 - 1/c` per
/// remaining edge with equal black spins, in edge order.
pub fn sample_omega<R: Rng + ?Sized>(spin: &SpinConfig, params: &ModelParams, rng: &mut R) -> Result<BondConfig> {
    let classes = edge_classes(spin)?;
    let open = classes
        .iter()
        .map(|c| match c {
            EdgeClass::Contour => true,
            EdgeClass::Candidate => rng.gen_bool(params.coin_p),
            EdgeClass::Closed => false,
        })
        .collect();
    Ok(BondConfig::new(spin.torus(), open))
}

/// Independent uniform sign per cluster of `omega`, returned per black
/// face in black-index order.
pub fn es_resample_black<R: Rng + ?Sized>(omega: &BondConfig, rng: &mut R) -> Vec<i8> {
    let cs = clusters(omega);
    let signs: Vec<i8> = (0..cs.component_count())
        .map(|_| if rng.gen_bool(0.5) { 1 } else { -1 })
        .collect();
    cs.labels.iter().map(|&l| signs[l as usize]).collect()
}

fn black_signs(spin: &SpinConfig) -> Vec<i8> {
    let t = spin.torus();
    t.black_faces().map(|f| spin.sign(f)).collect()
}

/// Exact joint law of black spins and `omega` under `mu0_n`.
#[derive(Clone, Debug, Default)]
pub struct OmegaLaw {
    pub joint: BTreeMap<(Vec<i8>, Vec<bool>), f64>,
}

impl OmegaLaw {
    pub fn new(t: &Torus, params: &ModelParams, limits: &Limits) -> Result<OmegaLaw> {
        let ice = IceEnsemble::new(t, params, limits)?;
        let z = ice.total_weight(Sector::Zero);
        let mut law = OmegaLaw::default();
        for i in 0..ice.len() {
            if !ice.zero[i] {
                continue;
            }
            for base in [1, -1] {
                let spin = spins_from_height(&height_field(&ice.configs[i], base)?);
                let p_spin = ice.weights[i] / z / 2.0;
                let classes = edge_classes(&spin)?;
                let cand: Vec<usize> = (0..classes.len())
                    .filter(|&j| classes[j] == EdgeClass::Candidate)
                    .collect();
                if !limits.force && cand.len() > limits.max_black_edges {
                    return Err(Error::SizeCap {
                        what: "coin enumeration",
                        needed: cand.len(),
                        unit: "candidate edges",
                        cap: limits.max_black_edges,
                    });
                }
                let signs = black_signs(&spin);
                for mask in 0..1u64 << cand.len() {
                    let mut open: Vec<bool> = classes.iter().map(|&c| c == EdgeClass::Contour).collect();
                    for (k, &j) in cand.iter().enumerate() {
                        open[j] = mask >> k & 1 == 1;
                    }
                    let on = mask.count_ones() as i32;
                    let p = p_spin
                        * params.coin_p.powi(on)
                        * (1.0 - params.coin_p).powi(cand.len() as i32 - on);
                    if p > 0.0 {
                        *law.joint.entry((signs.clone(), open)).or_default() += p;
                    }
                }
            }
        }
        Ok(law)
    }

    pub fn omega_marginal(&self) -> BTreeMap<Vec<bool>, f64> {
        let mut m = BTreeMap::new();
        for ((_, w), p) in &self.joint {
            *m.entry(w.clone()).or_default() += p;
        }
        m
    }

    pub fn connect_probability(&self, t: &Torus, u: Face, u2: Face) -> f64 {
        if u == u2 {
            return 1.0;
        }
        self.omega_marginal()
            .iter()
            .filter(|(w, _)| clusters(&BondConfig::new(*t, (*w).clone())).connected(t, u, u2))
            .map(|(_, p)| p)
            .sum()
    }
}

/// `P(u connected to u' in omega)` under `mu0_n` and the coins.
pub fn connect_probability_exact(
    t: &Torus,
    params: &ModelParams,
    u: Face,
    u2: Face,
    limits: &Limits,
) -> Result<f64> {
    for f in [u, u2] {
        if t.black_index(f).is_none() {
            let (x, y) = t.face_xy(f);
            return Err(Error::NotBlack { x, y });
        }
    }
    Ok(OmegaLaw::new(t, params, limits)?.connect_probability(t, u, u2))
}

/// Largest deviation of `P(sigma_black | omega)` from the uniform law on
/// cluster-constant assignments, over all atoms of `omega`.
pub fn edwards_sokal_deviation(t: &Torus, params: &ModelParams, limits: &Limits) -> Result<f64> {
    let law = OmegaLaw::new(t, params, limits)?;
    let marg = law.omega_marginal();
    let mut worst: f64 = 0.0;
    for (w, pw) in &marg {
        let cs = clusters(&BondConfig::new(*t, w.clone()));
        let k = cs.component_count();
        let expect = 0.5f64.powi(k as i32);
        let mut seen = 0.0;
        for mask in 0..1u64 << k {
            let signs: Vec<i8> = cs
                .labels
                .iter()
                .map(|&l| if mask >> l & 1 == 1 { -1 } else { 1 })
                .collect();
            let p = law.joint.get(&(signs, w.clone())).copied().unwrap_or(0.0) / pw;
            seen += p;
            worst = worst.max((p - expect).abs());
        }
        // mass on assignments that are not constant on clusters
        worst = worst.max((1.0 - seen).abs());
    }
    Ok(worst)
}

/// Smallest `P(omega(e) = 1 | omega off e)` over all edges and all
/// conditioning atoms of positive probability.
pub fn min_insertion_probability(t: &Torus, params: &ModelParams, limits: &Limits) -> Result<f64> {
    let marg = OmegaLaw::new(t, params, limits)?.omega_marginal();
    let mut worst: f64 = 1.0;
    for w in marg.keys() {
        for e in 0..w.len() {
            let mut on = w.clone();
            on[e] = true;
            let mut off = w.clone();
            off[e] = false;
            if w[e] && marg.contains_key(&off) {
                // visit each cylinder once, from its closed representative
                continue;
            }
            let a = marg.get(&on).copied().unwrap_or(0.0);
            let b = marg.get(&off).copied().unwrap_or(0.0);
            if a + b > 0.0 {
                worst = worst.min(a / (a + b));
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_white_spins_have_no_contours() {
        let t = Torus::new(4, 4).unwrap();
        let s = SpinConfig::from_signs(t, vec![1; 16]).unwrap();
        let eta = contours(&s).unwrap();
        assert!(eta.is_empty());
        let mut s2 = s.clone();
        s2.flip(t.face(1, 0));
        let eta = contours(&s2).unwrap();
        assert_eq!(eta.len(), 4);
        let corners = t.face_corners(t.face(1, 0));
        for v in corners {
            assert!(eta.contains(BlackEdge(v)));
        }
    }

    #[test]
    fn coins_at_the_extremes() {
        let t = Torus::new(4, 4).unwrap();
        let mut s = SpinConfig::from_signs(t, vec![1; 16]).unwrap();
        s.flip(t.face(1, 0));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = sample_omega(&s, &ModelParams::new(1.0).unwrap(), &mut rng).unwrap();
        assert_eq!(w, contours(&s).unwrap().as_bonds());
        let flat = SpinConfig::from_signs(t, vec![1; 16]).unwrap();
        let p = ModelParams::new(2.0).unwrap();
        let n = 4000;
        let open: usize = (0..n)
            .map(|_| sample_omega(&flat, &p, &mut rng).unwrap().open_count())
            .sum();
        let freq = open as f64 / (n * 16) as f64;
        assert!((freq - 0.5).abs() < 0.02, "{freq}");
    }

    #[test]
    fn resample_is_constant_on_clusters() {
        let t = Torus::new(4, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w = BondConfig::from_mask(t, 0b1011_0001_0000_0110);
        let cs = clusters(&w);
        for _ in 0..20 {
            let s = es_resample_black(&w, &mut rng);
            for i in 0..s.len() {
                for j in 0..s.len() {
                    if cs.labels[i] == cs.labels[j] {
                        assert_eq!(s[i], s[j]);
                    }
                }
            }
        }
    }
}
