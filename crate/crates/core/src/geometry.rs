//! Balls in the Cayley graph of the mapping torus for the generating set
//! `basis ∪ {t}`, and a sampled divergence estimate.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mapping_torus::{TorusElement, TorusGroup};
use crate::words::{Letter, Word};

pub const DEFAULT_BALL_CAP: usize = 4_000_000;

const NONE: u32 = u32::MAX;

/// Images `Φᵏ(x)` for every generator and `|k| ≤ reach`.
struct StepTable {
    reach: i64,
    images: Vec<Vec<Word>>,
}

impl StepTable {
    fn new(torus: &TorusGroup, reach: i64) -> Self {
        let fwd_map = torus.automorphism().endomorphism().clone();
        let back_map = torus.automorphism().inverse().endomorphism().clone();
        let images = (0..torus.rank())
            .map(|g| {
                let x = Word::generator(g);
                let mut fwd = vec![x.clone()];
                let mut back = vec![x];
                for _ in 0..reach {
                    fwd.push(fwd_map.apply_unchecked(fwd.last().unwrap()));
                    back.push(back_map.apply_unchecked(back.last().unwrap()));
                }
                back.reverse();
                back.pop();
                back.extend(fwd);
                back
            })
            .collect();
        StepTable { reach, images }
    }

    fn image(&self, gen: usize, k: i64) -> &Word {
        &self.images[gen][(k + self.reach) as usize]
    }
}

/// Right multiplication by generator `s` (`2g`, `2g+1` for fiber letters;
/// `2r`, `2r+1` for `t`, `t⁻¹`).
fn step(table: &StepTable, rank: usize, g: &TorusElement, s: usize) -> TorusElement {
    if s >= 2 * rank {
        let dk = if s == 2 * rank { 1 } else { -1 };
        return TorusElement::new(g.w.clone(), g.k + dk);
    }
    let mut w = g.w.clone();
    let img = table.image(s / 2, g.k);
    if Letter::from_code(s).is_inverse() {
        w.append_inverse(img);
    } else {
        w.append(img);
    }
    TorusElement::new(w, g.k)
}

/// Vertices within distance `r` of the identity, in BFS order.
#[derive(Clone, Debug)]
pub struct BallGraph {
    radius: u32,
    elements: Vec<TorusElement>,
    distance: Vec<u32>,
    index: HashMap<TorusElement, u32>,
    /// `2(rank+1)` neighbour slots per vertex; `u32::MAX` when outside.
    adjacency: Vec<u32>,
    degree: usize,
}

/// Exact ball `B(r)`, or [`Error::BallTooLarge`] if it would exceed `cap`
/// vertices.
pub fn cayley_ball(torus: &TorusGroup, r: u32, cap: usize) -> Result<BallGraph> {
    let rank = torus.rank();
    let degree = 2 * (rank + 1);
    let table = StepTable::new(torus, r as i64);
    let mut elements = vec![TorusElement::identity()];
    let mut distance = vec![0u32];
    let mut index = HashMap::from([(TorusElement::identity(), 0u32)]);
    let mut adjacency = Vec::new();
    let mut head = 0;
    while head < elements.len() {
        let d = distance[head];
        for s in 0..degree {
            let next = step(&table, rank, &elements[head], s);
            let slot = match index.get(&next) {
                Some(&j) => j,
                None if d < r => {
                    if elements.len() >= cap {
                        return Err(Error::BallTooLarge { cap });
                    }
                    let j = elements.len() as u32;
                    index.insert(next.clone(), j);
                    elements.push(next);
                    distance.push(d + 1);
                    j
                }
                None => NONE,
            };
            adjacency.push(slot);
        }
        head += 1;
    }
    Ok(BallGraph { radius: r, elements, distance, index, adjacency, degree })
}

impl BallGraph {
    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[TorusElement] {
        &self.elements
    }

    pub fn distances(&self) -> &[u32] {
        &self.distance
    }

    pub fn index_of(&self, g: &TorusElement) -> Option<usize> {
        self.index.get(g).map(|&i| i as usize)
    }

    pub fn distance(&self, g: &TorusElement) -> Option<u32> {
        self.index_of(g).map(|i| self.distance[i])
    }

    /// Neighbours inside the ball.
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacency[v * self.degree..(v + 1) * self.degree].iter().filter(|&&j| j != NONE).map(|&j| j as usize)
    }

    /// `|S(k)|` for `k = 0..=r`.
    pub fn sphere_sizes(&self) -> Vec<usize> {
        let mut out = vec![0; self.radius as usize + 1];
        for &d in &self.distance {
            out[d as usize] += 1;
        }
        out
    }

    /// Indices of `S(k)`, in BFS order.
    pub fn sphere(&self, k: u32) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.distance[i] == k).collect()
    }

    /// Shortest path from `p` to `q` through vertices at distance at least
    /// `floor` from the identity.
    pub fn detour(&self, p: usize, q: usize, floor: u32) -> Option<u32> {
        if self.distance[p] < floor || self.distance[q] < floor {
            return None;
        }
        let mut seen = vec![NONE; self.len()];
        seen[p] = 0;
        let mut frontier = vec![p];
        let mut d = 0;
        while !frontier.is_empty() {
            if seen[q] != NONE {
                return Some(seen[q]);
            }
            d += 1;
            let mut next = Vec::new();
            for &v in &frontier {
                for u in self.neighbors(v) {
                    if seen[u] == NONE && self.distance[u] >= floor {
                        seen[u] = d;
                        next.push(u);
                    }
                }
            }
            frontier = next;
        }
        (seen[q] != NONE).then_some(seen[q])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DivergenceSample {
    pub radius: u32,
    pub p: usize,
    pub q: usize,
    /// `d(p, q)`, or `None` when it exceeds the ball radius.
    pub distance: Option<u32>,
    pub detour: Option<u32>,
    pub reachable: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadiusSummary {
    pub radius: u32,
    pub requested: usize,
    pub sampled: usize,
    pub reachable: usize,
    pub mean_detour: Option<f64>,
    pub low_confidence: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DivergenceReport {
    pub ball_radius: u32,
    pub ball_size: usize,
    pub seed: u64,
    pub samples: Vec<DivergenceSample>,
    pub radii: Vec<RadiusSummary>,
    /// Slope of `log(mean detour)` against `log r` over `r ≥ 4`.
    pub exponent: Option<f64>,
    /// Root-mean-square residual of that fit.
    pub residual: Option<f64>,
    pub low_confidence: bool,
}

pub const MIN_FIT_RADIUS: u32 = 4;

fn draw_pairs(ball: &BallGraph, torus: &TorusGroup, r: u32, samples: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize, Option<u32>)> {
    let sphere = ball.sphere(r);
    let mut out = Vec::with_capacity(samples);
    if sphere.is_empty() {
        return out;
    }
    let attempts = samples.saturating_mul(50);
    for _ in 0..attempts {
        if out.len() == samples {
            break;
        }
        let p = sphere[rng.gen_range(0..sphere.len())];
        let q = sphere[rng.gen_range(0..sphere.len())];
        let between = torus.multiply(&torus.invert(&ball.elements[p]), &ball.elements[q]);
        let d = ball.distance(&between);
        if d.is_none_or(|d| d >= r) {
            out.push((p, q, d));
        }
    }
    out
}

/// Samples pairs on each sphere `S(r)` with `d(p,q) ≥ r` and measures the
/// shortest path between them inside `B(max r + 2)` avoiding the open ball of
/// radius `⌊r/2⌋`.
pub fn divergence_estimate(torus: &TorusGroup, radii: &[u32], samples: usize, seed: u64, cap: usize) -> Result<DivergenceReport> {
    if radii.is_empty() || samples == 0 {
        return Err(Error::InvalidArgument("divergence needs at least one radius and one sample".into()));
    }
    let outer = radii.iter().max().unwrap() + 2;
    let ball = cayley_ball(torus, outer, cap)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut all = Vec::new();
    let mut summaries = Vec::new();
    for &r in radii {
        let pairs = draw_pairs(&ball, torus, r, samples, &mut rng);
        let floor = r / 2;
        let detours: Vec<Option<u32>> = pairs.par_iter().map(|&(p, q, _)| ball.detour(p, q, floor)).collect();
        let found: Vec<u32> = detours.iter().flatten().copied().collect();
        let mean = (!found.is_empty()).then(|| found.iter().map(|&d| d as f64).sum::<f64>() / found.len() as f64);
        summaries.push(RadiusSummary {
            radius: r,
            requested: samples,
            sampled: pairs.len(),
            reachable: found.len(),
            mean_detour: mean,
            low_confidence: found.len() * 2 < samples,
        });
        for ((p, q, d), detour) in pairs.into_iter().zip(detours) {
            all.push(DivergenceSample { radius: r, p, q, distance: d, detour, reachable: detour.is_some() });
        }
    }
    let points: Vec<(f64, f64)> = summaries
        .iter()
        .filter(|s| s.radius >= MIN_FIT_RADIUS)
        .filter_map(|s| s.mean_detour.map(|m| ((s.radius as f64).ln(), m.ln())))
        .collect();
    let fit = least_squares(&points);
    let low_confidence = fit.is_none() || summaries.iter().any(|s| s.low_confidence);
    Ok(DivergenceReport {
        ball_radius: outer,
        ball_size: ball.len(),
        seed,
        samples: all,
        radii: summaries,
        exponent: fit.map(|f| f.0),
        residual: fit.map(|f| f.1),
        low_confidence,
    })
}

/// Slope and RMS residual of the line through `points`; needs two distinct
/// abscissae.
pub fn least_squares(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let icept = my - slope * mx;
    let rss: f64 = points.iter().map(|p| (p.1 - icept - slope * p.0).powi(2)).sum();
    Some((slope, (rss / n).sqrt()))
}
