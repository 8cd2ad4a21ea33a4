//! Bounded open sets (unions of balls and axis-aligned boxes), distance to
//! the boundary, κ-fatness certification, rough connectedness, the inner
//! sets B₀ ⊆ C₁ ⊆ B₂, and the cell grid used to discretize the killed
//! semigroup.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// One primitive piece of a domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Piece<R> {
    Ball { center: Vec<R>, radius: R },
    Box { min: Vec<R>, max: Vec<R> },
}

impl<R: Real> Piece<R> {
    pub fn dim(&self) -> usize {
        match self {
            Piece::Ball { center, .. } => center.len(),
            Piece::Box { min, .. } => min.len(),
        }
    }

    /// Strict interior membership.
    pub fn contains(&self, x: &[R]) -> bool {
        self.interior_depth(x) > R::zero()
    }

    /// Positive inside (distance to this piece's boundary), negative outside
    /// (minus the distance to the piece).
    pub fn interior_depth(&self, x: &[R]) -> R {
        match self {
            Piece::Ball { center, radius } => {
                let dist = dist_points(x, center);
                *radius - dist
            }
            Piece::Box { min, max } => {
                let mut inside_depth = R::infinity();
                let mut out_sq = R::zero();
                for k in 0..x.len() {
                    let lo = x[k] - min[k];
                    let hi = max[k] - x[k];
                    inside_depth = inside_depth.min(lo.min(hi));
                    if lo < R::zero() {
                        out_sq += lo * lo;
                    } else if hi < R::zero() {
                        out_sq += hi * hi;
                    }
                }
                if out_sq > R::zero() {
                    -out_sq.sqrt()
                } else {
                    inside_depth
                }
            }
        }
    }

    /// Closest point of the piece boundary.
    pub fn nearest_boundary_point(&self, x: &[R]) -> Vec<R> {
        match self {
            Piece::Ball { center, radius } => {
                let dist = dist_points(x, center);
                if dist == R::zero() {
                    let mut p = center.clone();
                    p[0] += *radius;
                    return p;
                }
                center
                    .iter()
                    .zip(x)
                    .map(|(c, xi)| *c + (*xi - *c) * *radius / dist)
                    .collect()
            }
            Piece::Box { min, max } => {
                let depth = self.interior_depth(x);
                if depth < R::zero() {
                    // outside: clamp
                    x.iter()
                        .zip(min.iter().zip(max))
                        .map(|(xi, (lo, hi))| (*xi).max(*lo).min(*hi))
                        .collect()
                } else {
                    // inside: push to the nearest face
                    let mut best_axis = 0;
                    let mut best_lo = true;
                    let mut best = R::infinity();
                    for k in 0..x.len() {
                        let lo = x[k] - min[k];
                        let hi = max[k] - x[k];
                        if lo < best {
                            best = lo;
                            best_axis = k;
                            best_lo = true;
                        }
                        if hi < best {
                            best = hi;
                            best_axis = k;
                            best_lo = false;
                        }
                    }
                    let mut p = x.to_vec();
                    p[best_axis] = if best_lo { min[best_axis] } else { max[best_axis] };
                    p
                }
            }
        }
    }

    pub fn volume(&self) -> R {
        match self {
            Piece::Ball { center, radius } => {
                let d = center.len();
                // |B_r| = pi^{d/2} r^d / Gamma(d/2 + 1)
                let mut g = if d % 2 == 0 { R::one() } else { R::PI().sqrt() };
                let mut x = if d % 2 == 0 { R::one() } else { R::of(0.5) };
                while x.as_f64() < d as f64 / 2.0 + 0.75 {
                    g = g * x;
                    x += R::one();
                }
                R::PI().powf(R::of_usize(d) / R::of(2.0)) * radius.powf(R::of_usize(d)) / g
            }
            Piece::Box { min, max } => min
                .iter()
                .zip(max)
                .map(|(lo, hi)| *hi - *lo)
                .fold(R::one(), |a, b| a * b),
        }
    }

    pub fn bbox(&self) -> (Vec<R>, Vec<R>) {
        match self {
            Piece::Ball { center, radius } => (
                center.iter().map(|c| *c - *radius).collect(),
                center.iter().map(|c| *c + *radius).collect(),
            ),
            Piece::Box { min, max } => (min.clone(), max.clone()),
        }
    }

    /// Exact distance between two pieces (as closed sets; 0 when they touch
    /// or overlap).
    pub fn distance_to(&self, other: &Piece<R>) -> R {
        match (self, other) {
            (Piece::Ball { center: c1, radius: r1 }, Piece::Ball { center: c2, radius: r2 }) => {
                (dist_points(c1, c2) - *r1 - *r2).max(R::zero())
            }
            (Piece::Ball { center, radius }, Piece::Box { min, max })
            | (Piece::Box { min, max }, Piece::Ball { center, radius }) => {
                let mut sq = R::zero();
                for k in 0..center.len() {
                    let gap = (min[k] - center[k]).max(center[k] - max[k]).max(R::zero());
                    sq += gap * gap;
                }
                (sq.sqrt() - *radius).max(R::zero())
            }
            (Piece::Box { min: a0, max: a1 }, Piece::Box { min: b0, max: b1 }) => {
                let mut sq = R::zero();
                for k in 0..a0.len() {
                    let gap = (b0[k] - a1[k]).max(a0[k] - b1[k]).max(R::zero());
                    sq += gap * gap;
                }
                sq.sqrt()
            }
        }
    }

    /// Largest distance between points of the two pieces' closures.
    fn sup_distance_to(&self, other: &Piece<R>) -> R {
        match (self, other) {
            (Piece::Ball { center: c1, radius: r1 }, Piece::Ball { center: c2, radius: r2 }) => {
                dist_points(c1, c2) + *r1 + *r2
            }
            (Piece::Ball { center, radius }, b @ Piece::Box { .. })
            | (b @ Piece::Box { .. }, Piece::Ball { center, radius }) => {
                corners(b)
                    .iter()
                    .map(|corner| dist_points(corner, center) + *radius)
                    .fold(R::zero(), |a, v| a.max(v))
            }
            (a @ Piece::Box { .. }, b @ Piece::Box { .. }) => {
                let mut best = R::zero();
                for ca in corners(a) {
                    for cb in corners(b) {
                        best = best.max(dist_points(&ca, &cb));
                    }
                }
                best
            }
        }
    }

    /// Interiors intersect.
    fn overlaps(&self, other: &Piece<R>) -> bool {
        match (self, other) {
            (Piece::Ball { center: c1, radius: r1 }, Piece::Ball { center: c2, radius: r2 }) => {
                dist_points(c1, c2) < *r1 + *r2
            }
            (Piece::Ball { center, radius }, Piece::Box { min, max })
            | (Piece::Box { min, max }, Piece::Ball { center, radius }) => {
                let mut sq = R::zero();
                for k in 0..center.len() {
                    let gap = (min[k] - center[k]).max(center[k] - max[k]).max(R::zero());
                    sq += gap * gap;
                }
                sq.sqrt() < *radius
            }
            (Piece::Box { min: a0, max: a1 }, Piece::Box { min: b0, max: b1 }) => {
                (0..a0.len()).all(|k| a0[k] < b1[k] && b0[k] < a1[k])
            }
        }
    }

    /// Deterministic samples of the piece boundary.
    fn boundary_samples(&self, n: usize, salt: u64) -> Vec<Vec<R>> {
        match self {
            Piece::Ball { center, radius } => match center.len() {
                2 => (0..n)
                    .map(|k| {
                        let theta = R::of(2.0) * R::PI() * (R::of_usize(k) + R::of(0.5))
                            / R::of_usize(n);
                        vec![
                            center[0] + *radius * theta.cos(),
                            center[1] + *radius * theta.sin(),
                        ]
                    })
                    .collect(),
                3 => {
                    let golden = R::of(1.618033988749895);
                    let two_pi = R::of(2.0) * R::PI();
                    (0..n)
                        .map(|k| {
                            let z = R::one()
                                - R::of(2.0) * (R::of_usize(k) + R::of(0.5)) / R::of_usize(n);
                            let r = (R::one() - z * z).max(R::zero()).sqrt();
                            let theta = two_pi * R::of_usize(k) / golden;
                            vec![
                                center[0] + *radius * r * theta.cos(),
                                center[1] + *radius * r * theta.sin(),
                                center[2] + *radius * z,
                            ]
                        })
                        .collect()
                }
                d => {
                    let mut rng = ChaCha8Rng::seed_from_u64(0xb0da_17 ^ salt);
                    (0..n)
                        .map(|_| {
                            let mut v: Vec<R> = (0..d).map(|_| R::std_normal(&mut rng)).collect();
                            let norm = v.iter().map(|x| *x * *x).sum::<R>().sqrt();
                            for (k, x) in v.iter_mut().enumerate() {
                                *x = center[k] + *radius * *x / norm;
                            }
                            v
                        })
                        .collect()
                }
            },
            Piece::Box { min, max } => {
                let d = min.len();
                let mut rng = ChaCha8Rng::seed_from_u64(0xb0c5_e5 ^ salt);
                (0..n)
                    .map(|_| {
                        let axis = (rng.next_u64() % d as u64) as usize;
                        let hi_side = rng.next_u64() % 2 == 1;
                        let mut p: Vec<R> = (0..d)
                            .map(|k| min[k] + (max[k] - min[k]) * R::unit_open(&mut rng))
                            .collect();
                        p[axis] = if hi_side { max[axis] } else { min[axis] };
                        p
                    })
                    .collect()
            }
        }
    }
}

use rand::RngCore;

fn corners<R: Real>(piece: &Piece<R>) -> Vec<Vec<R>> {
    let (lo, hi) = piece.bbox();
    let d = lo.len();
    (0..(1usize << d))
        .map(|mask| {
            (0..d)
                .map(|k| if mask >> k & 1 == 1 { hi[k] } else { lo[k] })
                .collect()
        })
        .collect()
}

fn dist_points<R: Real>(a: &[R], b: &[R]) -> R {
    a.iter()
        .zip(b)
        .map(|(x, y)| (*x - *y) * (*x - *y))
        .sum::<R>()
        .sqrt()
}

/// JSON-facing domain description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DomainSpec<R> {
    pub pieces: Vec<Piece<R>>,
}

/// Bounded open set: union of piece interiors, with cached samples of the
/// true boundary (piece boundaries not swallowed by other pieces).
#[derive(Debug, Clone)]
pub struct Domain<R: Real> {
    pub d: usize,
    pub pieces: Vec<Piece<R>>,
    per_piece_samples: Vec<Vec<Vec<R>>>,
    boundary_mesh: R,
    bbox: (Vec<R>, Vec<R>),
}

const DEFAULT_BOUNDARY_SAMPLES: usize = 1024;

impl<R: Real> Domain<R> {
    pub fn new(pieces: Vec<Piece<R>>) -> Result<Self> {
        Self::with_boundary_density(pieces, DEFAULT_BOUNDARY_SAMPLES)
    }

    pub fn from_spec(spec: &DomainSpec<R>) -> Result<Self> {
        Self::new(spec.pieces.clone())
    }

    pub fn to_spec(&self) -> DomainSpec<R> {
        DomainSpec { pieces: self.pieces.clone() }
    }

    pub fn with_boundary_density(pieces: Vec<Piece<R>>, samples_per_piece: usize) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidArgument("domain needs at least one piece".into()));
        }
        let d = pieces[0].dim();
        if d < 2 {
            return Err(Error::InvalidDimension(d));
        }
        for p in &pieces {
            if p.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, got: p.dim() });
            }
            match p {
                Piece::Ball { radius, center } => {
                    if !(*radius > R::zero()) || !radius.is_finite()
                        || center.iter().any(|c| !c.is_finite())
                    {
                        return Err(Error::InvalidArgument(
                            "ball needs a positive finite radius and finite center".into(),
                        ));
                    }
                }
                Piece::Box { min, max } => {
                    if min.iter().zip(max).any(|(lo, hi)| !(*lo < *hi))
                        || min.iter().chain(max).any(|v| !v.is_finite())
                    {
                        return Err(Error::InvalidArgument(
                            "box needs finite min < max on every axis".into(),
                        ));
                    }
                }
            }
        }
        let mut per_piece_samples = Vec::with_capacity(pieces.len());
        let mut mesh = R::zero();
        for (i, p) in pieces.iter().enumerate() {
            let raw = p.boundary_samples(samples_per_piece, i as u64);
            // keep only true boundary: not strictly inside any other piece
            let kept: Vec<Vec<R>> = raw
                .into_iter()
                .filter(|q| {
                    !pieces
                        .iter()
                        .enumerate()
                        .any(|(j, other)| j != i && other.interior_depth(q) > R::zero())
                })
                .collect();
            let (lo, hi) = p.bbox();
            let size = lo
                .iter()
                .zip(&hi)
                .map(|(a, b)| *b - *a)
                .fold(R::zero(), |a, v| a.max(v));
            // surface mesh spacing estimate for the sample cloud
            let spacing = size * R::PI()
                / R::of_usize(samples_per_piece).powf(R::one() / R::of_usize(d - 1));
            mesh = mesh.max(spacing);
            per_piece_samples.push(kept);
        }
        let mut lo = vec![R::infinity(); d];
        let mut hi = vec![R::neg_infinity(); d];
        for p in &pieces {
            let (plo, phi) = p.bbox();
            for k in 0..d {
                lo[k] = lo[k].min(plo[k]);
                hi[k] = hi[k].max(phi[k]);
            }
        }
        Ok(Self { d, pieces, per_piece_samples, boundary_mesh: mesh, bbox: (lo, hi) })
    }

    pub fn contains(&self, x: &[R]) -> bool {
        self.pieces.iter().any(|p| p.contains(x))
    }

    pub fn bounding_box(&self) -> (&[R], &[R]) {
        (&self.bbox.0, &self.bbox.1)
    }

    /// Resolution of the cached boundary sampling; distance queries in
    /// overlap regions are accurate to this order.
    pub fn boundary_mesh(&self) -> R {
        self.boundary_mesh
    }

    /// ρ(x) = dist(x, ∂D) for x ∈ D, and 0 outside. Exact unless the nearest
    /// piece-boundary point is swallowed by another piece, in which case the
    /// sampled true boundary bounds the error by the sampling mesh.
    pub fn dist_to_boundary(&self, x: &[R]) -> R {
        if !self.contains(x) {
            return R::zero();
        }
        let mut best = R::infinity();
        for (i, p) in self.pieces.iter().enumerate() {
            let q = p.nearest_boundary_point(x);
            let d_exact = dist_points(x, &q);
            if d_exact >= best {
                continue;
            }
            let swallowed = self
                .pieces
                .iter()
                .enumerate()
                .any(|(j, other)| j != i && other.interior_depth(&q) > R::zero());
            if !swallowed {
                best = best.min(d_exact);
            } else {
                for s in &self.per_piece_samples[i] {
                    let ds = dist_points(x, s);
                    if ds < best {
                        best = ds;
                    }
                }
            }
        }
        best
    }

    /// sup over x, y in the closure of |x − y|.
    pub fn diameter(&self) -> R {
        let mut best = R::zero();
        for (i, a) in self.pieces.iter().enumerate() {
            for b in &self.pieces[i..] {
                best = best.max(a.sup_distance_to(b));
            }
        }
        best
    }

    /// Lebesgue volume: exact when the pieces are pairwise non-overlapping,
    /// otherwise a seeded hit-or-miss estimate over the bounding box.
    pub fn volume(&self) -> (R, bool) {
        let disjoint = !self
            .pieces
            .iter()
            .enumerate()
            .any(|(i, a)| self.pieces[i + 1..].iter().any(|b| a.overlaps(b)));
        if disjoint {
            return (
                self.pieces.iter().map(|p| p.volume()).fold(R::zero(), |a, b| a + b),
                true,
            );
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x7077);
        let n = 200_000;
        let mut hits = 0u64;
        let (lo, hi) = (&self.bbox.0, &self.bbox.1);
        let mut x = vec![R::zero(); self.d];
        for _ in 0..n {
            for k in 0..self.d {
                x[k] = lo[k] + (hi[k] - lo[k]) * R::unit_open(&mut rng);
            }
            if self.contains(&x) {
                hits += 1;
            }
        }
        let vol_box = lo
            .iter()
            .zip(hi)
            .map(|(a, b)| *b - *a)
            .fold(R::one(), |a, v| a * v);
        (vol_box * R::of_usize(hits as usize) / R::of_usize(n), false)
    }

    /// Connected components of the piece-overlap graph plus the pairwise
    /// component distances and the {dist < 1} chain connectivity verdict.
    pub fn component_graph(&self) -> ComponentGraph<R> {
        let n = self.pieces.len();
        let mut uf: Vec<usize> = (0..n).collect();
        fn find(uf: &mut Vec<usize>, i: usize) -> usize {
            if uf[i] != i {
                let r = find(uf, uf[i]);
                uf[i] = r;
            }
            uf[i]
        }
        for i in 0..n {
            for j in i + 1..n {
                if self.pieces[i].overlaps(&self.pieces[j]) {
                    let (a, b) = (find(&mut uf, i), find(&mut uf, j));
                    if a != b {
                        uf[a] = b;
                    }
                }
            }
        }
        let mut roots: Vec<usize> = Vec::new();
        let mut comp_of_piece = vec![0usize; n];
        for i in 0..n {
            let r = find(&mut uf, i);
            let idx = match roots.iter().position(|&x| x == r) {
                Some(k) => k,
                None => {
                    roots.push(r);
                    roots.len() - 1
                }
            };
            comp_of_piece[i] = idx;
        }
        let m = roots.len();
        let mut components = vec![Vec::new(); m];
        for (i, &c) in comp_of_piece.iter().enumerate() {
            components[c].push(i);
        }
        let mut distances = vec![vec![R::zero(); m]; m];
        for a in 0..m {
            for b in a + 1..m {
                let mut best = R::infinity();
                for &i in &components[a] {
                    for &j in &components[b] {
                        best = best.min(self.pieces[i].distance_to(&self.pieces[j]));
                    }
                }
                distances[a][b] = best;
                distances[b][a] = best;
            }
        }
        // chain connectivity with gaps < 1
        let mut uf2: Vec<usize> = (0..m).collect();
        for a in 0..m {
            for b in a + 1..m {
                if distances[a][b] < R::one() {
                    let (x, y) = (find(&mut uf2, a), find(&mut uf2, b));
                    if x != y {
                        uf2[x] = y;
                    }
                }
            }
        }
        let root0 = find(&mut uf2, 0);
        let roughly_connected = (0..m).all(|k| find(&mut uf2, k) == root0);
        ComponentGraph { components, distances, roughly_connected }
    }

    /// Chain-connectivity verdict: every pair of components linked through
    /// gaps < 1 (the truncation radius).
    pub fn roughly_connected(&self) -> bool {
        self.component_graph().roughly_connected
    }

    /// Probabilistic κ-fatness certificate on a probe mesh of boundary points
    /// and a log mesh of radii in (0, R].
    pub fn certify_kappa_fat(
        &self,
        kappa_fat: R,
        r_max: R,
        probes: &FatProbeParams<R>,
    ) -> Result<FatCertificate<R>> {
        if !(kappa_fat > R::zero()) || kappa_fat > R::of(0.5) {
            return Err(Error::KappaFatRange(kappa_fat.as_f64()));
        }
        if !(r_max > R::zero()) {
            return Err(Error::InvalidArgument("R must be positive".into()));
        }
        let radii: Vec<R> = (0..probes.radii_count)
            .map(|k| {
                let t = R::of_usize(k) / R::of_usize(probes.radii_count.max(2) - 1);
                r_max * probes.radius_span.powf(t)
            })
            .collect();
        let mut witnesses = Vec::new();
        let mut verdict = true;
        for (i, samples) in self.per_piece_samples.iter().enumerate() {
            let take = probes.boundary_points_per_piece.min(samples.len());
            let stride = (samples.len() / take.max(1)).max(1);
            for q in samples.iter().step_by(stride) {
                for &r in &radii {
                    let search_radius = r * (R::one() - kappa_fat);
                    let (center, rho) = self.search_fat_center(q, search_radius);
                    let pass = rho >= kappa_fat * r * (R::one() - R::of(1e-9)) - R::of(1e-12);
                    if !pass {
                        verdict = false;
                    }
                    witnesses.push(FatWitness {
                        boundary_point: q.clone(),
                        radius: r,
                        center: if pass { Some(center) } else { None },
                        achieved_rho: rho,
                        pass,
                        piece: i,
                    });
                }
            }
        }
        Ok(FatCertificate { kappa_fat, r_max, verdict, witnesses })
    }

    /// Pattern search for the deepest interior point within B(q, search_radius).
    fn search_fat_center(&self, q: &[R], search_radius: R) -> (Vec<R>, R) {
        let mut best_pt = q.to_vec();
        let mut best_rho = self.dist_to_boundary(q);
        // multi-start: inward jumps toward each piece's deep direction
        for p in &self.pieces {
            let dir: Vec<R> = match p {
                Piece::Ball { center, .. } => {
                    let v: Vec<R> = center.iter().zip(q).map(|(c, qi)| *c - *qi).collect();
                    let n = v.iter().map(|x| *x * *x).sum::<R>().sqrt();
                    if n == R::zero() {
                        continue;
                    }
                    v.iter().map(|x| *x / n).collect()
                }
                Piece::Box { min, max } => {
                    let c: Vec<R> = min
                        .iter()
                        .zip(max)
                        .map(|(lo, hi)| (*lo + *hi) / R::of(2.0))
                        .collect();
                    let v: Vec<R> = c.iter().zip(q).map(|(ci, qi)| *ci - *qi).collect();
                    let n = v.iter().map(|x| *x * *x).sum::<R>().sqrt();
                    if n == R::zero() {
                        continue;
                    }
                    v.iter().map(|x| *x / n).collect()
                }
            };
            for frac in [R::one(), R::of(0.5), R::of(0.25)] {
                let cand: Vec<R> = q
                    .iter()
                    .zip(&dir)
                    .map(|(qi, di)| *qi + *di * search_radius * frac)
                    .collect();
                let rho = self.dist_to_boundary(&cand);
                if rho > best_rho {
                    best_rho = rho;
                    best_pt = cand;
                }
            }
        }
        // compass search with projection back onto the ball
        let mut h = search_radius / R::of(2.0);
        let h_min = search_radius * R::of(1e-4);
        let mut current = best_pt.clone();
        let mut current_rho = best_rho;
        while h > h_min {
            let mut improved = false;
            for axis in 0..self.d {
                for sign in [R::one(), -R::one()] {
                    let mut cand = current.clone();
                    cand[axis] += sign * h;
                    // project into the closed search ball
                    let off: Vec<R> = cand.iter().zip(q).map(|(c, qi)| *c - *qi).collect();
                    let norm = off.iter().map(|x| *x * *x).sum::<R>().sqrt();
                    if norm > search_radius {
                        for (k, c) in cand.iter_mut().enumerate() {
                            *c = q[k] + off[k] / norm * search_radius;
                        }
                    }
                    let rho = self.dist_to_boundary(&cand);
                    if rho > current_rho {
                        current_rho = rho;
                        current = cand;
                        improved = true;
                    }
                }
            }
            if !improved {
                h = h / R::of(2.0);
            }
        }
        (current, current_rho)
    }

    /// Cell grid: cubes of the given side whose centers lie in the domain.
    pub fn make_grid(&self, resolution: R) -> Result<Grid<R>> {
        if !(resolution > R::zero()) || !resolution.is_finite() {
            return Err(Error::InvalidArgument("resolution must be positive".into()));
        }
        let (lo, hi) = (&self.bbox.0, &self.bbox.1);
        let mut dims = Vec::with_capacity(self.d);
        let mut total = 1usize;
        for k in 0..self.d {
            let span = hi[k] - lo[k];
            let n = (span / resolution).as_f64().ceil() as usize;
            let n = n.max(1);
            dims.push(n);
            total = total.saturating_mul(n);
            if total > 50_000_000 {
                return Err(Error::InvalidArgument(
                    "grid lattice too large; raise the resolution".into(),
                ));
            }
        }
        let mut centers = Vec::new();
        let mut lattice_to_cell = vec![-1i32; total];
        let mut idx = vec![0usize; self.d];
        for flat in 0..total {
            let mut rem = flat;
            for k in 0..self.d {
                idx[k] = rem % dims[k];
                rem /= dims[k];
            }
            let center: Vec<R> = (0..self.d)
                .map(|k| lo[k] + resolution * (R::of_usize(idx[k]) + R::of(0.5)))
                .collect();
            if self.contains(&center) {
                lattice_to_cell[flat] = centers.len() as i32;
                centers.push(center);
            }
        }
        if centers.len() < 10 {
            return Err(Error::DegenerateResolution { cells: centers.len() });
        }
        let cell_volume = resolution.powf(R::of_usize(self.d));
        let (_, vol_exact) = self.volume();
        let fingerprint = grid_fingerprint(self.d, resolution, &centers);
        let mut grid = Grid {
            d: self.d,
            resolution,
            centers,
            cell_volume,
            anchor: lo.clone(),
            dims,
            lattice_to_cell,
            boundary_layer_fraction: R::zero(),
            volume_is_exact: vol_exact,
            fingerprint,
        };
        // boundary layer: fraction of the domain volume not covered by any
        // cell, by seeded hit-or-miss
        let mut rng = ChaCha8Rng::seed_from_u64(0x9a1d);
        let n = 200_000;
        let mut in_domain = 0u64;
        let mut uncovered = 0u64;
        let mut x = vec![R::zero(); self.d];
        for _ in 0..n {
            for k in 0..self.d {
                x[k] = lo[k] + (hi[k] - lo[k]) * R::unit_open(&mut rng);
            }
            if self.contains(&x) {
                in_domain += 1;
                if grid.cell_of(&x).is_none() {
                    uncovered += 1;
                }
            }
        }
        if in_domain > 0 {
            grid.boundary_layer_fraction =
                R::of_usize(uncovered as usize) / R::of_usize(in_domain as usize);
        }
        Ok(grid)
    }
}

/// Components of the piece-overlap graph and their pairwise distances.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComponentGraph<R> {
    /// Piece indices per connected component.
    pub components: Vec<Vec<usize>>,
    pub distances: Vec<Vec<R>>,
    pub roughly_connected: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FatProbeParams<R> {
    pub boundary_points_per_piece: usize,
    pub radii_count: usize,
    /// Smallest probed radius as a fraction of R (log mesh span).
    pub radius_span: R,
}

impl<R: Real> Default for FatProbeParams<R> {
    fn default() -> Self {
        Self { boundary_points_per_piece: 128, radii_count: 16, radius_span: R::of(0.01) }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FatWitness<R> {
    pub boundary_point: Vec<R>,
    pub radius: R,
    pub center: Option<Vec<R>>,
    pub achieved_rho: R,
    pub pass: bool,
    pub piece: usize,
}

/// Probabilistic κ-fat certificate: pass means every probed (Q, r) admitted
/// an interior ball B(A, κr) ⊆ D ∩ B(Q, r).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FatCertificate<R> {
    pub kappa_fat: R,
    pub r_max: R,
    pub verdict: bool,
    pub witnesses: Vec<FatWitness<R>>,
}

/// Which branch of the inner-set construction applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssumptionCase {
    A4a,
    A4b,
}

/// The nested sets B₀ ⊆ C₁ ⊆ B₂ ⊆ D used by the regeneration arguments:
/// concentric balls around an interior point (case a), or distance-level
/// sets {ρ > Rκ/2} ⊆ {ρ ≥ Rκ/4} ⊆ {ρ > Rκ/8} (case b).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InnerSets<R> {
    pub case: AssumptionCase,
    pub x0: Option<Vec<R>>,
    pub r0: Option<R>,
    pub rho_b0: Option<R>,
    pub rho_c1: Option<R>,
    pub rho_b2: Option<R>,
}

impl<R: Real> InnerSets<R> {
    pub fn a4a(domain: &Domain<R>, x0: Vec<R>, r0: R) -> Result<Self> {
        if x0.len() != domain.d {
            return Err(Error::DimensionMismatch { expected: domain.d, got: x0.len() });
        }
        if !(r0 > R::zero()) {
            return Err(Error::InvalidArgument("r0 must be positive".into()));
        }
        if !domain.contains(&x0) {
            return Err(Error::InnerBallNotContained);
        }
        // closure of B(x0, 2 r0) inside D: depth at the center plus a probe
        // ring on the bounding sphere
        if domain.dist_to_boundary(&x0) <= R::of(2.0) * r0 {
            return Err(Error::InnerBallNotContained);
        }
        let ring = Piece::Ball { center: x0.clone(), radius: R::of(2.0) * r0 }
            .boundary_samples(256, 0x5e11);
        if ring.iter().any(|p| !domain.contains(p)) {
            return Err(Error::InnerBallNotContained);
        }
        Ok(Self {
            case: AssumptionCase::A4a,
            x0: Some(x0),
            r0: Some(r0),
            rho_b0: None,
            rho_c1: None,
            rho_b2: None,
        })
    }

    /// Case (b): requires a passing fat certificate; when the model is
    /// truncated with constant R0, also R ≤ R0/2.
    pub fn a4b(
        domain: &Domain<R>,
        certificate: &FatCertificate<R>,
        truncation_r0: Option<R>,
    ) -> Result<Self> {
        if !certificate.verdict {
            return Err(Error::FatCertificateRequired);
        }
        if let Some(r0) = truncation_r0 {
            if certificate.r_max > r0 / R::of(2.0) {
                return Err(Error::FatRadiusTooLarge {
                    got: certificate.r_max.as_f64(),
                    max: (r0 / R::of(2.0)).as_f64(),
                });
            }
        }
        let level = certificate.r_max * certificate.kappa_fat;
        let sets = Self {
            case: AssumptionCase::A4b,
            x0: None,
            r0: None,
            rho_b0: Some(level / R::of(2.0)),
            rho_c1: Some(level / R::of(4.0)),
            rho_b2: Some(level / R::of(8.0)),
        };
        // emptiness check on B0: deep points of each piece must reach it
        let deep = domain
            .pieces
            .iter()
            .map(|p| match p {
                Piece::Ball { center, .. } => center.clone(),
                Piece::Box { min, max } => min
                    .iter()
                    .zip(max)
                    .map(|(lo, hi)| (*lo + *hi) / R::of(2.0))
                    .collect(),
            })
            .collect::<Vec<_>>();
        if !deep.iter().any(|x| sets.in_b0(domain, x)) {
            return Err(Error::EmptyInnerSet);
        }
        Ok(sets)
    }

    pub fn in_b0(&self, domain: &Domain<R>, x: &[R]) -> bool {
        match self.case {
            AssumptionCase::A4a => {
                dist_points(x, self.x0.as_ref().unwrap()) < self.r0.unwrap() / R::of(2.0)
            }
            AssumptionCase::A4b => domain.dist_to_boundary(x) > self.rho_b0.unwrap(),
        }
    }

    /// C₁ is closed.
    pub fn in_c1(&self, domain: &Domain<R>, x: &[R]) -> bool {
        match self.case {
            AssumptionCase::A4a => dist_points(x, self.x0.as_ref().unwrap()) <= self.r0.unwrap(),
            AssumptionCase::A4b => domain.dist_to_boundary(x) >= self.rho_c1.unwrap(),
        }
    }

    pub fn in_b2(&self, domain: &Domain<R>, x: &[R]) -> bool {
        match self.case {
            AssumptionCase::A4a => {
                dist_points(x, self.x0.as_ref().unwrap()) < R::of(2.0) * self.r0.unwrap()
            }
            AssumptionCase::A4b => domain.dist_to_boundary(x) > self.rho_b2.unwrap(),
        }
    }
}

/// Uniform cubical cell decomposition of a domain.
#[derive(Debug, Clone)]
pub struct Grid<R: Real> {
    pub d: usize,
    pub resolution: R,
    pub centers: Vec<Vec<R>>,
    pub cell_volume: R,
    anchor: Vec<R>,
    dims: Vec<usize>,
    lattice_to_cell: Vec<i32>,
    pub boundary_layer_fraction: R,
    pub volume_is_exact: bool,
    pub fingerprint: u64,
}

fn grid_fingerprint<R: Real>(d: usize, resolution: R, centers: &[Vec<R>]) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    let mut mix = |v: u64| {
        h ^= v;
        h = h.wrapping_mul(0x100000001b3);
    };
    mix(d as u64);
    mix(resolution.as_f64().to_bits());
    mix(centers.len() as u64);
    if let Some(first) = centers.first() {
        for c in first {
            mix(c.as_f64().to_bits());
        }
    }
    if let Some(last) = centers.last() {
        for c in last {
            mix(c.as_f64().to_bits());
        }
    }
    h
}

impl<R: Real> Grid<R> {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Cell index containing x (the cube around a center that lies in D); the
    /// boundary layer and the exterior map to None.
    pub fn cell_of(&self, x: &[R]) -> Option<usize> {
        let mut flat = 0usize;
        let mut stride = 1usize;
        for k in 0..self.d {
            let t = (x[k] - self.anchor[k]) / self.resolution;
            if t < R::zero() {
                return None;
            }
            let i = t.as_f64().floor() as usize;
            if i >= self.dims[k] {
                return None;
            }
            flat += i * stride;
            stride *= self.dims[k];
        }
        match self.lattice_to_cell[flat] {
            -1 => None,
            c => Some(c as usize),
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "cell_id")?;
        for k in 0..self.d {
            write!(w, ",center_{k}")?;
        }
        writeln!(w, ",volume")?;
        for (i, c) in self.centers.iter().enumerate() {
            write!(w, "{i}")?;
            for v in c {
                write!(w, ",{}", v.as_f64())?;
            }
            writeln!(w, ",{}", self.cell_volume.as_f64())?;
        }
        Ok(())
    }
}
