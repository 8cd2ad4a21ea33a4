//! Non-symmetric Lévy process families: strictly α-stable and truncated
//! stable models described by a spherical density, optional Brownian
//! component and drift, their duals, Lévy densities, and the characteristic
//! exponent evaluated by sphere × radial quadrature.
//!
//! The law is defined by the regime-specific characteristic function
//!
//! ```text
//! alpha in (0,1):  psi(z) = ∫_S η(dξ) ∫_0^∞ (e^{irz·ξ} − 1) r^{−1−α} dr
//! alpha = 1:       psi(z) = ∫_S η(dξ) ∫_0^∞ (e^{irz·ξ} − 1 − irz·ξ 1_{r≤1}) r^{−2} dr + iz·γ
//! alpha in (1,2):  psi(z) = ∫_S η(dξ) ∫_0^∞ (e^{irz·ξ} − 1 − irz·ξ) r^{−1−α} dr
//! ```
//!
//! with η(dξ) = φ(ξ) σ(dξ); truncated kinds integrate r over (0,1) only, with
//! the compensator −irz·ξ present for α ≥ 1. A Brownian component contributes
//! −½ z·Az.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{sym_eigen, DenseMatrix};
use crate::quad::{gauss_legendre, SphereRule};
use crate::scalar::Real;

/// Parametric form of the spherical density φ on S^{d-1}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", content = "params", rename_all = "lowercase")]
pub enum SpectralForm<R> {
    /// φ ≡ value.
    Constant { value: R },
    /// φ(ξ) = base + amplitude · (ξ · axis), axis normalized at build.
    Cosine { base: R, amplitude: R, axis: Vec<R> },
    /// d = 2 only: (angle, value) pairs, piecewise linear and periodic.
    Table { entries: Vec<(R, R)> },
}

/// Spherical density φ with its probed bound κ and cached sphere moments.
#[derive(Debug, Clone)]
pub struct SpectralDensity<R: Real> {
    pub d: usize,
    pub form: SpectralForm<R>,
    /// Evaluate φ(−ξ) instead of φ(ξ); makes dual(dual(m)) bit-exact.
    pub reflected: bool,
    kappa_spec: R,
    phi_min: R,
    phi_max: R,
    eta_total: R,
    first_moment: Vec<R>,
    second_moment: DenseMatrix<R>,
}

const PROBE_POINTS: usize = 10_000;
const CENTERING_REL_TOL: f64 = 1e-8;

impl<R: Real> SpectralDensity<R> {
    pub fn new(d: usize, form: SpectralForm<R>) -> Result<Self> {
        Self::build(d, form, false)
    }

    fn build(d: usize, form: SpectralForm<R>, reflected: bool) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidDimension(d));
        }
        let form = match form {
            SpectralForm::Constant { value } => {
                if !(value > R::zero()) || !value.is_finite() {
                    return Err(Error::SpectralBound(format!(
                        "constant value must be positive and finite, got {value}"
                    )));
                }
                SpectralForm::Constant { value }
            }
            SpectralForm::Cosine { base, amplitude, axis } => {
                if axis.len() != d {
                    return Err(Error::DimensionMismatch { expected: d, got: axis.len() });
                }
                let norm = axis.iter().map(|x| *x * *x).sum::<R>().sqrt();
                if norm == R::zero() {
                    return Err(Error::SpectralBound("cosine axis must be nonzero".into()));
                }
                let axis: Vec<R> = axis.iter().map(|x| *x / norm).collect();
                if !(base - amplitude.abs() > R::zero()) {
                    return Err(Error::SpectralBound(format!(
                        "cosine form not strictly positive: base {base} |amplitude| {}",
                        amplitude.abs()
                    )));
                }
                SpectralForm::Cosine { base, amplitude, axis }
            }
            SpectralForm::Table { mut entries } => {
                if d != 2 {
                    return Err(Error::SpectralBound(
                        "table form is supported for d = 2 only".into(),
                    ));
                }
                if entries.len() < 2 {
                    return Err(Error::SpectralBound("table needs at least 2 entries".into()));
                }
                let two_pi = R::of(2.0) * R::PI();
                for &(a, v) in &entries {
                    if !(a >= R::zero()) || a >= two_pi {
                        return Err(Error::SpectralBound(format!(
                            "table angle {a} outside [0, 2π)"
                        )));
                    }
                    if !(v > R::zero()) || !v.is_finite() {
                        return Err(Error::SpectralBound(format!(
                            "table value must be positive and finite, got {v}"
                        )));
                    }
                }
                entries.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
                for w in entries.windows(2) {
                    if w[0].0 == w[1].0 {
                        return Err(Error::SpectralBound(format!(
                            "duplicate table angle {}",
                            w[0].0
                        )));
                    }
                }
                SpectralForm::Table { entries }
            }
        };

        let mut density = Self {
            d,
            form,
            reflected,
            kappa_spec: R::zero(),
            phi_min: R::zero(),
            phi_max: R::zero(),
            eta_total: R::zero(),
            first_moment: vec![R::zero(); d],
            second_moment: DenseMatrix::zeros(d, d),
        };
        let (lo, hi) = density.probe_bounds(PROBE_POINTS);
        if !(lo > R::zero()) {
            return Err(Error::SpectralBound(format!(
                "probed inf of phi is {lo}, must be strictly positive"
            )));
        }
        density.phi_min = lo;
        density.phi_max = hi;
        density.kappa_spec = lo.min(R::one() / hi).min(R::one());

        let rule = density.quadrature_rule(fine_order(d));
        density.eta_total = rule.integrate(|xi| density.eval(xi));
        for k in 0..d {
            density.first_moment[k] = rule.integrate(|xi| xi[k] * density.eval(xi));
        }
        for i in 0..d {
            for j in 0..d {
                let v = rule.integrate(|xi| xi[i] * xi[j] * density.eval(xi));
                density.second_moment.set(i, j, v);
            }
        }
        Ok(density)
    }

    /// φ(ξ), honoring the reflection flag.
    pub fn eval(&self, xi: &[R]) -> R {
        debug_assert_eq!(xi.len(), self.d);
        let mut buf;
        let point: &[R] = if self.reflected {
            buf = xi.to_vec();
            for x in &mut buf {
                *x = -*x;
            }
            &buf
        } else {
            xi
        };
        match &self.form {
            SpectralForm::Constant { value } => *value,
            SpectralForm::Cosine { base, amplitude, axis } => {
                let dot = point.iter().zip(axis).map(|(a, b)| *a * *b).sum::<R>();
                *base + *amplitude * dot
            }
            SpectralForm::Table { entries } => {
                let two_pi = R::of(2.0) * R::PI();
                let mut theta = point[1].atan2(point[0]);
                if theta < R::zero() {
                    theta += two_pi;
                }
                // locate the segment [a_i, a_{i+1}) containing theta, wrapping
                let n = entries.len();
                let idx = match entries
                    .binary_search_by(|e| e.0.partial_cmp(&theta).unwrap())
                {
                    Ok(i) => return entries[i].1,
                    Err(0) | Err(_) if theta < entries[0].0 || theta >= entries[n - 1].0 => n - 1,
                    Err(i) => i - 1,
                };
                let (a0, v0) = entries[idx];
                let (mut a1, v1) = entries[(idx + 1) % n];
                let mut th = theta;
                if idx == n - 1 {
                    a1 += two_pi;
                    if th < a0 {
                        th += two_pi;
                    }
                }
                let t = (th - a0) / (a1 - a0);
                v0 + t * (v1 - v0)
            }
        }
    }

    /// Dual density ξ ↦ φ(−ξ).
    pub fn reflect(&self) -> Self {
        let mut out = self.clone();
        out.reflected = !self.reflected;
        for m in &mut out.first_moment {
            *m = -*m;
        }
        out
    }

    pub fn kappa_spec(&self) -> R {
        self.kappa_spec
    }

    pub fn phi_min(&self) -> R {
        self.phi_min
    }

    pub fn phi_max(&self) -> R {
        self.phi_max
    }

    /// η(S) = ∫_S φ dσ.
    pub fn eta_total(&self) -> R {
        self.eta_total
    }

    /// ∫_S ξ φ(ξ) σ(dξ).
    pub fn first_moment(&self) -> &[R] {
        &self.first_moment
    }

    /// ∫_S ξ ξ^T φ(ξ) σ(dξ).
    pub fn second_moment(&self) -> &DenseMatrix<R> {
        &self.second_moment
    }

    /// Sphere rule adapted to the form: segmented at table kinks so the
    /// piecewise-smooth integrand converges spectrally.
    pub fn quadrature_rule(&self, order: usize) -> SphereRule<R> {
        if let SpectralForm::Table { entries } = &self.form {
            let two_pi = R::of(2.0) * R::PI();
            let pi = R::PI();
            let mut breaks: Vec<R> = entries
                .iter()
                .map(|&(a, _)| {
                    if self.reflected {
                        let b = a + pi;
                        if b >= two_pi {
                            b - two_pi
                        } else {
                            b
                        }
                    } else {
                        a
                    }
                })
                .collect();
            breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let per_seg = (order / breaks.len()).max(8);
            let (nodes, weights) = gauss_legendre::<R>(per_seg);
            let mut points = Vec::new();
            let mut ws = Vec::new();
            let m = breaks.len();
            for i in 0..m {
                let a0 = breaks[i];
                let a1 = if i + 1 < m { breaks[i + 1] } else { breaks[0] + two_pi };
                let half = (a1 - a0) / R::of(2.0);
                let mid = (a1 + a0) / R::of(2.0);
                for (u, w) in nodes.iter().zip(&weights) {
                    let theta = mid + half * *u;
                    points.push(vec![theta.cos(), theta.sin()]);
                    ws.push(*w * half);
                }
            }
            SphereRule { d: 2, points, weights: ws }
        } else {
            SphereRule::new(self.d, order)
        }
    }

    fn probe_bounds(&self, n: usize) -> (R, R) {
        let mut lo = R::infinity();
        let mut hi = R::neg_infinity();
        let mut update = |v: R| {
            lo = lo.min(v);
            hi = hi.max(v);
        };
        match self.d {
            2 => {
                let two_pi = R::of(2.0) * R::PI();
                for k in 0..n {
                    let theta = two_pi * R::of_usize(k) / R::of_usize(n);
                    update(self.eval(&[theta.cos(), theta.sin()]));
                }
                if let SpectralForm::Table { entries } = &self.form {
                    for &(a, _) in entries {
                        update(self.eval(&[a.cos(), a.sin()]));
                    }
                }
            }
            3 => {
                // Fibonacci sphere
                let golden = R::of(1.618033988749895);
                let two_pi = R::of(2.0) * R::PI();
                for k in 0..n {
                    let z = R::one() - R::of(2.0) * (R::of_usize(k) + R::of(0.5)) / R::of_usize(n);
                    let r = (R::one() - z * z).max(R::zero()).sqrt();
                    let theta = two_pi * R::of_usize(k) / golden;
                    update(self.eval(&[r * theta.cos(), r * theta.sin(), z]));
                }
            }
            _ => {
                let rule = SphereRule::<R>::new(self.d, n);
                for p in &rule.points {
                    update(self.eval(p));
                }
            }
        }
        (lo, hi)
    }
}

/// Model family per the generating triplet structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Stable,
    TruncatedStable,
    StablePlusBrownian,
    TruncatedPlusBrownian,
}

impl ModelKind {
    pub fn is_truncated(self) -> bool {
        matches!(self, ModelKind::TruncatedStable | ModelKind::TruncatedPlusBrownian)
    }

    pub fn has_brownian(self) -> bool {
        matches!(self, ModelKind::StablePlusBrownian | ModelKind::TruncatedPlusBrownian)
    }

    fn with_brownian(self) -> Self {
        match self {
            ModelKind::Stable | ModelKind::StablePlusBrownian => ModelKind::StablePlusBrownian,
            ModelKind::TruncatedStable | ModelKind::TruncatedPlusBrownian => {
                ModelKind::TruncatedPlusBrownian
            }
        }
    }
}

/// A non-symmetric Lévy model: (A, ν, γ) with ν described by (α, φ) and an
/// optional truncation of jumps at radius 1.
#[derive(Debug, Clone)]
pub struct LevyModel<R: Real> {
    pub d: usize,
    pub alpha: R,
    pub kind: ModelKind,
    pub spectral: SpectralDensity<R>,
    pub diffusion: DenseMatrix<R>,
    pub drift: Vec<R>,
}

/// Classification under assumption (A1).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "case")]
pub enum AssumptionClass<R> {
    /// Lebesgue ≪ ν with L(x) = |x|^{d+α}/φ(x/|x|); carries the numerically
    /// verified integral of L over the annulus {r_lo ≤ |x| ≤ r_hi}.
    A1a { l_integral: R, r_lo: R, r_hi: R },
    /// Compactly supported ν: M = g bounded below near 0; any radius below
    /// the truncation works, R0 = 1 is reported with inf_{B(0,R0)} M ≥ inf_m.
    A1b { r0: R, inf_m: R },
}

impl<R: Real> LevyModel<R> {
    /// Strictly α-stable model with Lévy density f(x) = φ(x/|x|) |x|^{−(d+α)}.
    pub fn stable(d: usize, alpha: R, spectral: SpectralDensity<R>) -> Result<Self> {
        Self::with_kind(d, alpha, spectral, ModelKind::Stable, None)
    }

    pub fn stable_with_drift(
        d: usize,
        alpha: R,
        spectral: SpectralDensity<R>,
        gamma: Vec<R>,
    ) -> Result<Self> {
        Self::with_kind(d, alpha, spectral, ModelKind::Stable, Some(gamma))
    }

    /// Truncated stable model: density g(x) = φ(x/|x|) |x|^{−(d+α)} 1_{|x|<1}.
    pub fn truncated(d: usize, alpha: R, spectral: SpectralDensity<R>) -> Result<Self> {
        Self::with_kind(d, alpha, spectral, ModelKind::TruncatedStable, None)
    }

    pub fn truncated_with_drift(
        d: usize,
        alpha: R,
        spectral: SpectralDensity<R>,
        gamma: Vec<R>,
    ) -> Result<Self> {
        Self::with_kind(d, alpha, spectral, ModelKind::TruncatedStable, Some(gamma))
    }

    fn with_kind(
        d: usize,
        alpha: R,
        spectral: SpectralDensity<R>,
        kind: ModelKind,
        gamma: Option<Vec<R>>,
    ) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidDimension(d));
        }
        if !(alpha > R::zero()) || !(alpha < R::of(2.0)) {
            return Err(Error::InvalidAlpha(alpha.as_f64()));
        }
        if spectral.d != d {
            return Err(Error::DimensionMismatch { expected: d, got: spectral.d });
        }
        let is_one = alpha == R::one();
        if is_one {
            let norm = spectral
                .first_moment()
                .iter()
                .map(|x| *x * *x)
                .sum::<R>()
                .sqrt();
            let tol = R::of(CENTERING_REL_TOL) * spectral.eta_total();
            if norm >= tol {
                return Err(Error::CenteringViolated {
                    norm: norm.as_f64(),
                    tol: tol.as_f64(),
                });
            }
        }
        let drift = match gamma {
            Some(g) => {
                if g.len() != d {
                    return Err(Error::DimensionMismatch { expected: d, got: g.len() });
                }
                if !is_one && g.iter().any(|x| *x != R::zero()) {
                    return Err(Error::DriftOutsideAlphaOne);
                }
                g
            }
            None => vec![R::zero(); d],
        };
        Ok(Self {
            d,
            alpha,
            kind,
            spectral,
            diffusion: DenseMatrix::zeros(d, d),
            drift,
        })
    }

    /// Add an independent Gaussian component with covariance matrix `a`.
    /// A zero matrix leaves the model unchanged in law (and in kind).
    pub fn add_brownian(mut self, a: DenseMatrix<R>) -> Result<Self> {
        if a.rows != self.d || a.cols != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: a.rows });
        }
        let mut scale = R::zero();
        for i in 0..self.d {
            for j in 0..self.d {
                scale = scale.max(a.get(i, j).abs());
            }
        }
        if scale == R::zero() {
            return Ok(self);
        }
        for i in 0..self.d {
            for j in (i + 1)..self.d {
                if (a.get(i, j) - a.get(j, i)).abs() > R::of(1e-12) * scale {
                    return Err(Error::NonSymmetricDiffusion);
                }
            }
        }
        let (eig, _) = sym_eigen(&a, 50);
        for lam in &eig {
            if *lam < -R::of(1e-12) * scale {
                return Err(Error::IndefiniteDiffusion(lam.as_f64()));
            }
        }
        for i in 0..self.d {
            for j in 0..self.d {
                let v = self.diffusion.get(i, j) + a.get(i, j);
                self.diffusion.set(i, j, v);
            }
        }
        self.kind = self.kind.with_brownian();
        Ok(self)
    }

    /// The dual process −X: generating triplet (A, ν(−dx), −γ).
    pub fn dual(&self) -> Self {
        Self {
            d: self.d,
            alpha: self.alpha,
            kind: self.kind,
            spectral: self.spectral.reflect(),
            diffusion: self.diffusion.clone(),
            drift: self.drift.iter().map(|g| -*g).collect(),
        }
    }

    pub fn is_truncated(&self) -> bool {
        self.kind.is_truncated()
    }

    pub fn has_brownian(&self) -> bool {
        self.kind.has_brownian()
    }

    /// Lévy density of the model at x ≠ 0 (the truncated kinds vanish for
    /// |x| ≥ 1).
    pub fn levy_density(&self, x: &[R]) -> Result<R> {
        let r = norm(x);
        if r == R::zero() {
            return Err(Error::DensityAtOrigin);
        }
        if self.is_truncated() && r >= R::one() {
            return Ok(R::zero());
        }
        Ok(self.radial_density(x, r))
    }

    fn radial_density(&self, x: &[R], r: R) -> R {
        let xi: Vec<R> = x.iter().map(|v| *v / r).collect();
        self.spectral.eval(&xi) * r.powf(-(R::of_usize(self.d) + self.alpha))
    }

    /// Radon–Nikodym derivative L(x) = dLebesgue/dν = |x|^{d+α} / φ(x/|x|)
    /// for the (A1)(a) kinds.
    pub fn radon_nikodym_l(&self, x: &[R]) -> Result<R> {
        let r = norm(x);
        if r == R::zero() {
            return Err(Error::DensityAtOrigin);
        }
        let xi: Vec<R> = x.iter().map(|v| *v / r).collect();
        Ok(r.powf(R::of_usize(self.d) + self.alpha) / self.spectral.eval(&xi))
    }

    /// Classify under (A1): stable kinds are (a) with L as above, truncated
    /// kinds are (b) with M = g and R0 = 1.
    pub fn classify_assumption(&self) -> AssumptionClass<R> {
        if self.is_truncated() {
            AssumptionClass::A1b { r0: R::one(), inf_m: self.spectral.phi_min() }
        } else {
            let (r_lo, r_hi) = (R::of(0.5), R::of(2.0));
            AssumptionClass::A1a {
                l_integral: self.l_local_integral(r_lo, r_hi),
                r_lo,
                r_hi,
            }
        }
    }

    /// ∫ over the annulus {r_lo ≤ |x| ≤ r_hi} of L(x) dx, numerically.
    pub fn l_local_integral(&self, r_lo: R, r_hi: R) -> R {
        let rule = self.spectral.quadrature_rule(fine_order(self.d));
        let sphere_part = rule.integrate(|xi| R::one() / self.spectral.eval(xi));
        // radial: ∫ r^{d+α} r^{d−1} dr over [r_lo, r_hi]
        let (nodes, weights) = gauss_legendre::<R>(32);
        let half = (r_hi - r_lo) / R::of(2.0);
        let mid = (r_hi + r_lo) / R::of(2.0);
        let p = R::of(2.0) * R::of_usize(self.d) + self.alpha - R::one();
        let radial: R = nodes
            .iter()
            .zip(&weights)
            .map(|(u, w)| *w * half * (mid + half * *u).powf(p))
            .sum();
        sphere_part * radial
    }

    /// The split of the parent stable density f = g + h for truncated kinds,
    /// with λ = ∫ h computed by quadrature.
    pub fn truncation_split(&self) -> Result<TruncationSplit<'_, R>> {
        if !self.is_truncated() {
            return Err(Error::NotTruncated(kind_name(self.kind)));
        }
        // radial tail ∫_1^∞ r^{−1−α} dr via s = 1/r on dyadic panels of (0,1]
        let (nodes, weights) = gauss_legendre::<R>(8);
        let mut radial = R::zero();
        let mut hi = R::one();
        for _ in 0..60 {
            let lo = hi / R::of(2.0);
            let half = (hi - lo) / R::of(2.0);
            let mid = (hi + lo) / R::of(2.0);
            let panel: R = nodes
                .iter()
                .zip(&weights)
                .map(|(u, w)| *w * half * (mid + half * *u).powf(self.alpha - R::one()))
                .sum();
            radial += panel;
            hi = lo;
            if panel < R::of(1e-18) * radial {
                break;
            }
        }
        Ok(TruncationSplit { model: self, lambda: self.spectral.eta_total() * radial })
    }

    /// ψ(z) with E_0[e^{iz·X_1}] = e^{ψ(z)}. Convenience around
    /// [`PsiEvaluator`]; build the evaluator once for batches of z.
    pub fn characteristic_exponent(&self, z: &[R]) -> Result<Complex<R>> {
        PsiEvaluator::new(self)?.eval(z)
    }

    pub fn from_spec(spec: &ModelSpec<R>) -> Result<Self> {
        let mut spectral = SpectralDensity::new(spec.d, spec.spectral.clone())?;
        if spec.reflected {
            spectral = spectral.reflect();
        }
        let gamma = spec.gamma.clone();
        let base_kind = spec.kind;
        let mut model = match base_kind {
            ModelKind::Stable | ModelKind::StablePlusBrownian => match gamma {
                Some(g) => Self::stable_with_drift(spec.d, spec.alpha, spectral, g)?,
                None => Self::stable(spec.d, spec.alpha, spectral)?,
            },
            ModelKind::TruncatedStable | ModelKind::TruncatedPlusBrownian => match gamma {
                Some(g) => Self::truncated_with_drift(spec.d, spec.alpha, spectral, g)?,
                None => Self::truncated(spec.d, spec.alpha, spectral)?,
            },
        };
        if base_kind.has_brownian() {
            let a = spec.a.as_ref().ok_or_else(|| {
                Error::Config("kind *_plus_brownian requires the A matrix".into())
            })?;
            if a.len() != spec.d || a.iter().any(|row| row.len() != spec.d) {
                return Err(Error::DimensionMismatch { expected: spec.d, got: a.len() });
            }
            let m = DenseMatrix::from_rows(a);
            model = model.add_brownian(m)?;
            if model.kind != base_kind {
                return Err(Error::Config(
                    "kind *_plus_brownian requires a nonzero A matrix".into(),
                ));
            }
        } else if spec.a.is_some() {
            return Err(Error::Config(
                "A matrix given but kind is not *_plus_brownian".into(),
            ));
        }
        Ok(model)
    }

    pub fn to_spec(&self) -> ModelSpec<R> {
        let a = if self.has_brownian() {
            Some(
                (0..self.d)
                    .map(|i| self.diffusion.row(i).to_vec())
                    .collect(),
            )
        } else {
            None
        };
        let gamma = if self.drift.iter().any(|g| *g != R::zero()) {
            Some(self.drift.clone())
        } else {
            None
        };
        ModelSpec {
            d: self.d,
            alpha: self.alpha,
            kind: self.kind,
            spectral: self.spectral.form.clone(),
            reflected: self.spectral.reflected,
            a,
            gamma,
        }
    }
}

fn kind_name(kind: ModelKind) -> &'static str {
    match kind {
        ModelKind::Stable => "stable",
        ModelKind::TruncatedStable => "truncated_stable",
        ModelKind::StablePlusBrownian => "stable_plus_brownian",
        ModelKind::TruncatedPlusBrownian => "truncated_plus_brownian",
    }
}

/// JSON-facing model description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelSpec<R> {
    pub d: usize,
    pub alpha: R,
    pub kind: ModelKind,
    pub spectral: SpectralForm<R>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub reflected: bool,
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<Vec<R>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<R>>,
}

/// f = g + h split of a truncated model's parent stable density.
pub struct TruncationSplit<'a, R: Real> {
    model: &'a LevyModel<R>,
    /// λ = ∫ h(x) dx, the compound-Poisson rate of the large-jump part.
    pub lambda: R,
}

impl<R: Real> TruncationSplit<'_, R> {
    /// g: small jumps, support |x| < 1.
    pub fn small_jump_density(&self, x: &[R]) -> Result<R> {
        self.model.levy_density(x)
    }

    /// h = f − g: large jumps, support |x| ≥ 1.
    pub fn large_jump_density(&self, x: &[R]) -> Result<R> {
        let r = norm(x);
        if r == R::zero() {
            return Err(Error::DensityAtOrigin);
        }
        if r < R::one() {
            return Ok(R::zero());
        }
        Ok(self.model.radial_density(x, r))
    }

    /// The parent stable density f (no truncation).
    pub fn parent_density(&self, x: &[R]) -> Result<R> {
        let r = norm(x);
        if r == R::zero() {
            return Err(Error::DensityAtOrigin);
        }
        Ok(self.model.radial_density(x, r))
    }
}

fn norm<R: Real>(x: &[R]) -> R {
    x.iter().map(|v| *v * *v).sum::<R>().sqrt()
}

fn fine_order(d: usize) -> usize {
    match d {
        2 => 192,
        3 => 48,
        _ => 100_000,
    }
}

/// Characteristic-exponent evaluator: caches the honest radial-integral
/// constants for the α-regime and integrates over the sphere with a per-z
/// rule split along the great circle z·ξ = 0, where |z·ξ|^α kinks.
pub struct PsiEvaluator<R: Real> {
    d: usize,
    alpha: R,
    truncated: bool,
    spectral: SpectralDensity<R>,
    table_breaks: Vec<R>,
    mc_rule: Option<SphereRule<R>>,
    gl_fine: (Vec<R>, Vec<R>),
    gl_coarse: (Vec<R>, Vec<R>),
    gl_angular_fine: (Vec<R>, Vec<R>),
    gl_angular_coarse: (Vec<R>, Vec<R>),
    radial: StableRadial<R>,
    diffusion: DenseMatrix<R>,
    drift: Vec<R>,
    rel_tol: R,
}

impl<R: Real> PsiEvaluator<R> {
    pub fn new(model: &LevyModel<R>) -> Result<Self> {
        let two_pi = R::of(2.0) * R::PI();
        let pi = R::PI();
        let table_breaks = match &model.spectral.form {
            SpectralForm::Table { entries } => {
                let mut breaks: Vec<R> = entries
                    .iter()
                    .map(|&(a, _)| {
                        if model.spectral.reflected {
                            let b = a + pi;
                            if b >= two_pi {
                                b - two_pi
                            } else {
                                b
                            }
                        } else {
                            a
                        }
                    })
                    .collect();
                breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
                breaks
            }
            _ => Vec::new(),
        };
        let mc_rule = if model.d > 3 {
            Some(SphereRule::new(model.d, 100_000))
        } else {
            None
        };
        Ok(Self {
            d: model.d,
            alpha: model.alpha,
            truncated: model.is_truncated(),
            spectral: model.spectral.clone(),
            table_breaks,
            mc_rule,
            gl_fine: endpoint_graded_rule::<R>(64),
            gl_coarse: endpoint_graded_rule::<R>(40),
            gl_angular_fine: gauss_legendre::<R>(32),
            gl_angular_coarse: gauss_legendre::<R>(16),
            radial: StableRadial::new(model.alpha),
            diffusion: model.diffusion.clone(),
            drift: model.drift.clone(),
            rel_tol: R::of(1e-8),
        })
    }

    /// ψ(z), with a coarse-vs-fine quadrature convergence check (reported as
    /// statistical only for the Monte Carlo rule used when d > 3).
    pub fn eval(&self, z: &[R]) -> Result<Complex<R>> {
        if z.len() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: z.len() });
        }
        let znorm = z.iter().map(|v| *v * *v).sum::<R>().sqrt();
        let mut out = if znorm == R::zero() {
            Complex::new(R::zero(), R::zero())
        } else {
            let (fine, coarse) = match self.d {
                2 => (self.circle_part(z, true), Some(self.circle_part(z, false))),
                3 => (self.sphere3_part(z, znorm, true), Some(self.sphere3_part(z, znorm, false))),
                _ => (self.mc_part(z), None),
            };
            if let Some(coarse) = coarse {
                let achieved = (fine - coarse).norm();
                let scale = R::one() + fine.norm();
                if achieved > self.rel_tol * scale {
                    return Err(Error::QuadratureNonConvergence {
                        achieved: (achieved / scale).as_f64(),
                        requested: self.rel_tol.as_f64(),
                    });
                }
            }
            fine
        };
        // drift (nonzero only for alpha = 1 by construction)
        let zg = z.iter().zip(&self.drift).map(|(a, b)| *a * *b).sum::<R>();
        out.im += zg;
        // Brownian part −½ z·Az
        let az = self.diffusion.matvec(z);
        let zaz = z.iter().zip(&az).map(|(a, b)| *a * *b).sum::<R>();
        out.re -= zaz / R::of(2.0);
        Ok(out)
    }

    #[inline]
    fn radial_at(&self, w: R) -> Complex<R> {
        if self.truncated {
            truncated_radial(self.alpha, w)
        } else {
            self.radial.eval(w)
        }
    }

    fn circle_part(&self, z: &[R], fine: bool) -> Complex<R> {
        let two_pi = R::of(2.0) * R::PI();
        let pi = R::PI();
        let theta_z = z[1].atan2(z[0]);
        let mut breaks: Vec<R> = self.table_breaks.clone();
        for k in [theta_z + pi / R::of(2.0), theta_z + R::of(1.5) * pi] {
            let mut a = k % two_pi;
            if a < R::zero() {
                a += two_pi;
            }
            breaks.push(a);
        }
        breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        breaks.dedup_by(|a, b| (*a - *b).abs() < R::of(1e-14));
        let (nodes, weights) = if fine { &self.gl_fine } else { &self.gl_coarse };
        let mut acc = Complex::new(R::zero(), R::zero());
        let m = breaks.len();
        for i in 0..m {
            let a0 = breaks[i];
            let a1 = if i + 1 < m { breaks[i + 1] } else { breaks[0] + two_pi };
            let half = (a1 - a0) / R::of(2.0);
            let mid = (a1 + a0) / R::of(2.0);
            for (u, w) in nodes.iter().zip(weights) {
                let theta = mid + half * *u;
                let xi = [theta.cos(), theta.sin()];
                let zw = z[0] * xi[0] + z[1] * xi[1];
                let r = self.radial_at(zw);
                let f = *w * half * self.spectral.eval(&xi);
                acc.re += f * r.re;
                acc.im += f * r.im;
            }
        }
        acc
    }

    fn sphere3_part(&self, z: &[R], znorm: R, fine: bool) -> Complex<R> {
        // rotate so the polar axis is aligned with z: then z·ξ = |z| u and the
        // kink sits exactly at u = 0
        let zhat: Vec<R> = z.iter().map(|v| *v / znorm).collect();
        let (e1, e2) = orthonormal_complement3(&zhat);
        let (unodes, uweights) = if fine { &self.gl_fine } else { &self.gl_coarse };
        let (tnodes, tweights) = if fine {
            &self.gl_angular_fine
        } else {
            &self.gl_angular_coarse
        };
        let pi = R::PI();
        let mut acc = Complex::new(R::zero(), R::zero());
        for half_range in [(-R::one(), R::zero()), (R::zero(), R::one())] {
            let (lo, hi) = half_range;
            let half = (hi - lo) / R::of(2.0);
            let mid = (hi + lo) / R::of(2.0);
            for (un, uw) in unodes.iter().zip(uweights) {
                let u = mid + half * *un;
                let s = (R::one() - u * u).max(R::zero()).sqrt();
                let r = self.radial_at(znorm * u);
                let mut phi_int = R::zero();
                for (tn, tw) in tnodes.iter().zip(tweights) {
                    let theta = pi * (*tn + R::one());
                    let (ct, st) = (theta.cos(), theta.sin());
                    let xi = [
                        s * (ct * e1[0] + st * e2[0]) + u * zhat[0],
                        s * (ct * e1[1] + st * e2[1]) + u * zhat[1],
                        s * (ct * e1[2] + st * e2[2]) + u * zhat[2],
                    ];
                    phi_int += *tw * pi * self.spectral.eval(&xi);
                }
                let f = *uw * half * phi_int;
                acc.re += f * r.re;
                acc.im += f * r.im;
            }
        }
        acc
    }

    fn mc_part(&self, z: &[R]) -> Complex<R> {
        let rule = self.mc_rule.as_ref().expect("mc rule built for d > 3");
        let mut acc = Complex::new(R::zero(), R::zero());
        for (point, w) in rule.points.iter().zip(&rule.weights) {
            let zw = z.iter().zip(point).map(|(a, b)| *a * *b).sum::<R>();
            let r = self.radial_at(zw);
            let f = *w * self.spectral.eval(point);
            acc.re += f * r.re;
            acc.im += f * r.im;
        }
        acc
    }
}

/// Gauss–Legendre nodes pushed through the double-sin map
/// S(S(t)), S(t) = sin(πt/2). The map's derivative vanishes quadratically at
/// ±1, so integrands with |x − a|^α branch points at the segment endpoints
/// (the radial factor along the kink circle z·ξ = 0) integrate at high order
/// for every α ∈ (0, 2).
fn endpoint_graded_rule<R: Real>(n: usize) -> (Vec<R>, Vec<R>) {
    let (nodes, weights) = gauss_legendre::<R>(n);
    let half_pi = R::PI() / R::of(2.0);
    let mut xs = Vec::with_capacity(n);
    let mut ws = Vec::with_capacity(n);
    for (t, w) in nodes.iter().zip(&weights) {
        let s1 = (half_pi * *t).sin();
        let d1 = half_pi * (half_pi * *t).cos();
        let s2 = (half_pi * s1).sin();
        let d2 = half_pi * (half_pi * s1).cos();
        xs.push(s2);
        ws.push(*w * d1 * d2);
    }
    (xs, ws)
}

/// Two unit vectors completing zhat (unit) to an orthonormal basis of R^3.
fn orthonormal_complement3<R: Real>(zhat: &[R]) -> (Vec<R>, Vec<R>) {
    let mut seed = vec![R::zero(); 3];
    let mut min_idx = 0;
    for k in 1..3 {
        if zhat[k].abs() < zhat[min_idx].abs() {
            min_idx = k;
        }
    }
    seed[min_idx] = R::one();
    let dot = seed.iter().zip(zhat).map(|(a, b)| *a * *b).sum::<R>();
    let mut e1: Vec<R> = seed.iter().zip(zhat).map(|(s, z)| *s - dot * *z).collect();
    let n1 = e1.iter().map(|v| *v * *v).sum::<R>().sqrt();
    for v in &mut e1 {
        *v = *v / n1;
    }
    let e2 = vec![
        zhat[1] * e1[2] - zhat[2] * e1[1],
        zhat[2] * e1[0] - zhat[0] * e1[2],
        zhat[0] * e1[1] - zhat[1] * e1[0],
    ];
    (e1, e2)
}

/// Radial integral of the strictly stable regimes after the substitution
/// t = r|w|, reduced to w-independent constants computed once by quadrature:
///
/// ```text
/// J_re(α) = ∫_0^∞ (cos t − 1) t^{−1−α} dt
/// J_im(α) = ∫_0^∞ sin t · t^{−1−α} dt            (α < 1)
///           ∫_0^∞ (sin t − t 1_{t≤1}) t^{−2} dt   (α = 1)
///           ∫_0^∞ (sin t − t) t^{−1−α} dt         (α > 1)
/// ```
struct StableRadial<R: Real> {
    alpha: R,
    j_re: R,
    j_im: R,
}

impl<R: Real> StableRadial<R> {
    fn new(alpha: R) -> Self {
        let one = R::one();
        let is_one = alpha == one;
        // [0,1] by power series of the compensated integrand
        let mut series_re = R::zero();
        let mut series_im = R::zero();
        let mut fact = R::one(); // k!
        let mut k = 0usize;
        loop {
            k += 1;
            fact = fact * R::of_usize(k);
            let kf = R::of_usize(k);
            let sign = if (k / 2) % 2 == 1 { -R::one() } else { R::one() };
            if k % 2 == 0 {
                // cos series term (−1)^{k/2} t^k / k!, k ≥ 2
                series_re += sign / (fact * (kf - alpha));
            } else {
                // sin series term; compensators drop k = 1 for α ≥ 1
                let skip = k == 1 && alpha >= one;
                if !skip {
                    let denom = if is_one && k == 1 { R::one() } else { kf - alpha };
                    series_im += sign / (fact * denom);
                }
            }
            if k > 24 {
                break;
            }
        }
        // [1, T] by π-length Gauss–Legendre panels
        let t_end = R::one() + R::of(200.0) * R::PI();
        let (nodes, weights) = gauss_legendre::<R>(16);
        let mut osc_re = R::zero();
        let mut osc_im = R::zero();
        let n_panels = 200usize;
        let mut a = R::one();
        let panel_len = (t_end - R::one()) / R::of_usize(n_panels);
        let exp_re = -(R::one() + alpha);
        let exp_im = if is_one { -R::of(2.0) } else { exp_re };
        for _ in 0..n_panels {
            let b = a + panel_len;
            let half = panel_len / R::of(2.0);
            let mid = (a + b) / R::of(2.0);
            for (u, w) in nodes.iter().zip(&weights) {
                let t = mid + half * *u;
                osc_re += *w * half * t.cos() * t.powf(exp_re);
                osc_im += *w * half * t.sin() * t.powf(exp_im);
            }
            a = b;
        }
        // oscillatory tails beyond T by repeated integration by parts
        let tail_c_re = tail_rec(R::one() + alpha, t_end, true, 12);
        let tail_s_im = tail_rec(
            if is_one { R::of(2.0) } else { R::one() + alpha },
            t_end,
            false,
            12,
        );
        // exact compensator tails
        let comp_re = -R::one() / alpha; // ∫_1^∞ −t^{−1−α} dt
        let comp_im = if alpha > one {
            -R::one() / (alpha - one) // ∫_1^∞ −t^{−α} dt
        } else {
            R::zero()
        };
        let j_re = series_re + osc_re + tail_c_re + comp_re;
        let j_im = series_im + osc_im + tail_s_im + comp_im;
        Self { alpha, j_re, j_im }
    }

    fn eval(&self, w: R) -> Complex<R> {
        if w == R::zero() {
            return Complex::new(R::zero(), R::zero());
        }
        let u = w.abs();
        let s = if w > R::zero() { R::one() } else { -R::one() };
        if self.alpha == R::one() {
            Complex::new(u * self.j_re, s * u * (self.j_im - u.ln()))
        } else {
            let p = u.powf(self.alpha);
            Complex::new(p * self.j_re, s * p * self.j_im)
        }
    }
}

/// ∫_T^∞ cos/sin(t) · t^{−a} dt by iterated integration by parts;
/// remainder O((a)_K · T^{−a−K}).
fn tail_rec<R: Real>(a: R, t: R, cos_kind: bool, depth: usize) -> R {
    if depth == 0 {
        return R::zero();
    }
    let tp = t.powf(-a);
    if cos_kind {
        // ∫_T^∞ cos t t^{−a} = −T^{−a} sin T + a ∫_T^∞ sin t t^{−a−1}
        -tp * t.sin() + a * tail_rec(a + R::one(), t, false, depth - 1)
    } else {
        // ∫_T^∞ sin t t^{−a} = T^{−a} cos T − a ∫_T^∞ cos t t^{−a−1}
        tp * t.cos() - a * tail_rec(a + R::one(), t, true, depth - 1)
    }
}

/// ∫_0^1 (e^{irw} − 1 − [irw if α ≥ 1]) r^{−1−α} dr by series near 0 plus
/// oscillation-resolving Gauss–Legendre panels.
fn truncated_radial<R: Real>(alpha: R, w: R) -> Complex<R> {
    let zero = Complex::new(R::zero(), R::zero());
    if w == R::zero() {
        return zero;
    }
    let u = w.abs();
    let k0 = if alpha < R::one() { 1 } else { 2 };
    let r0 = if u > R::one() { R::one() / u } else { R::one() };
    // series Σ_{k≥k0} (iw)^k r0^{k−α} / (k! (k−α))
    let iw = Complex::new(R::zero(), w);
    let mut term = Complex::new(R::one(), R::zero());
    let mut fact = R::one();
    let mut sum = zero;
    for k in 1..=60usize {
        term = term * iw;
        fact = fact * R::of_usize(k);
        if k < k0 {
            continue;
        }
        let kf = R::of_usize(k);
        let contrib = term * Complex::new(r0.powf(kf - alpha) / (fact * (kf - alpha)), R::zero());
        sum += contrib;
        if contrib.norm() < R::of(1e-18) * (R::one() + sum.norm()) && k > 8 {
            break;
        }
    }
    if r0 < R::one() {
        // panels on [r0, 1], at least ~4 per oscillation period
        let n_panels = ((R::one() - r0) * u / R::of(1.5)).as_f64().ceil() as usize + 3;
        let (nodes, weights) = gauss_legendre::<R>(16);
        let len = (R::one() - r0) / R::of_usize(n_panels);
        let mut a = r0;
        for _ in 0..n_panels {
            let half = len / R::of(2.0);
            let mid = a + half;
            for (x, wq) in nodes.iter().zip(&weights) {
                let r = mid + half * *x;
                let rw = r * w;
                let re = rw.cos() - R::one();
                let mut im = rw.sin();
                if k0 == 2 {
                    im -= rw;
                }
                let p = r.powf(-(R::one() + alpha)) * *wq * half;
                sum.re += p * re;
                sum.im += p * im;
            }
            a += len;
        }
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iso<R: Real>(d: usize, v: f64) -> SpectralDensity<R> {
        SpectralDensity::new(d, SpectralForm::Constant { value: R::of(v) }).unwrap()
    }

    #[test]
    fn rejects_bad_dimension_and_alpha() {
        assert!(matches!(
            SpectralDensity::<f64>::new(1, SpectralForm::Constant { value: 1.0 }),
            Err(Error::InvalidDimension(1))
        ));
        assert!(matches!(
            LevyModel::stable(3, 2.0, iso::<f64>(3, 1.0)),
            Err(Error::InvalidAlpha(_))
        ));
        assert!(matches!(
            LevyModel::stable(2, 0.0, iso::<f64>(2, 1.0)),
            Err(Error::InvalidAlpha(_))
        ));
    }

    #[test]
    fn rejects_zero_spectral_mass() {
        assert!(SpectralDensity::<f64>::new(2, SpectralForm::Constant { value: 0.0 }).is_err());
    }

    #[test]
    fn stable_density_point_value() {
        // f((2,0)) = 2^{-3.5} for d=2, alpha=1.5, phi=1
        let m = LevyModel::stable(2, 1.5, iso::<f64>(2, 1.0)).unwrap();
        let f = m.levy_density(&[2.0, 0.0]).unwrap();
        assert!((f - 2.0_f64.powf(-3.5)).abs() < 1e-14);
        // L is the reciprocal up to phi
        let l = m.radon_nikodym_l(&[2.0, 0.0]).unwrap();
        assert!((l - 2.0_f64.powf(3.5)).abs() < 1e-12);
        assert!(matches!(m.levy_density(&[0.0, 0.0]), Err(Error::DensityAtOrigin)));
    }

    #[test]
    fn truncated_density_vanishes_outside_unit_ball() {
        let m = LevyModel::truncated(2, 1.5, iso::<f64>(2, 1.0)).unwrap();
        assert_eq!(m.levy_density(&[2.0, 0.0]).unwrap(), 0.0);
        assert!(m.levy_density(&[0.3, 0.0]).unwrap() > 0.0);
    }

    #[test]
    fn alpha_one_centering() {
        // phi(θ) = 1 + 0.5 cos θ has sphere moment (π/2, 0): rejected at α=1
        let cosine = SpectralDensity::<f64>::new(
            2,
            SpectralForm::Cosine { base: 1.0, amplitude: 0.5, axis: vec![1.0, 0.0] },
        )
        .unwrap();
        let fm = cosine.first_moment();
        assert!((fm[0] - std::f64::consts::FRAC_PI_2).abs() < 1e-10);
        assert!(fm[1].abs() < 1e-12);
        assert!(matches!(
            LevyModel::stable(2, 1.0, cosine),
            Err(Error::CenteringViolated { .. })
        ));
        // symmetric density accepted
        assert!(LevyModel::stable(2, 1.0, iso::<f64>(2, 1.0)).is_ok());
    }

    #[test]
    fn dual_is_involution_and_reflects_cosine() {
        let cosine = SpectralDensity::<f64>::new(
            2,
            SpectralForm::Cosine { base: 1.0, amplitude: 0.5, axis: vec![1.0, 0.0] },
        )
        .unwrap();
        let m = LevyModel::stable(2, 1.5, cosine).unwrap();
        let dd = m.dual().dual();
        // bit-exact round trip through the reflection flag
        assert_eq!(dd.spectral.reflected, m.spectral.reflected);
        let xi = [0.6_f64, 0.8];
        assert_eq!(m.spectral.eval(&xi), dd.spectral.eval(&xi));
        // dual of 1+0.5cosθ is 1−0.5cosθ
        assert!((m.dual().spectral.eval(&[1.0, 0.0]) - 0.5).abs() < 1e-14);
        assert!((m.dual().spectral.eval(&[-1.0, 0.0]) - 1.5).abs() < 1e-14);
        // isotropic model is self-dual in law
        let mi = LevyModel::stable(2, 1.5, iso::<f64>(2, 1.0)).unwrap();
        assert_eq!(mi.dual().spectral.eval(&xi), mi.spectral.eval(&xi));
    }

    #[test]
    fn classification_matches_kinds() {
        let ms = LevyModel::stable(2, 1.5, iso::<f64>(2, 1.0)).unwrap();
        match ms.classify_assumption() {
            AssumptionClass::A1a { l_integral, .. } => assert!(l_integral.is_finite()),
            _ => panic!("stable must classify as A1a"),
        }
        let mt = LevyModel::truncated(2, 0.5, iso::<f64>(2, 1.0)).unwrap();
        match mt.classify_assumption() {
            AssumptionClass::A1b { r0, inf_m } => {
                assert_eq!(r0, 1.0);
                assert!(inf_m >= 1.0 - 1e-12); // phi = 1 here
            }
            _ => panic!("truncated must classify as A1b"),
        }
    }

    #[test]
    fn truncation_split_lambda_and_pointwise_identity() {
        // λ = η(S)/α = 2π/0.5 = 4π for d=2, α=0.5, φ≡1
        let m = LevyModel::truncated(2, 0.5, iso::<f64>(2, 1.0)).unwrap();
        let split = m.truncation_split().unwrap();
        let expect = 4.0 * std::f64::consts::PI;
        assert!(
            (split.lambda - expect).abs() < 1e-6 * expect,
            "{} vs {}",
            split.lambda,
            expect
        );
        // d=3, α=1.2: λ = 4π/1.2
        let m3 = LevyModel::truncated(3, 1.2, iso::<f64>(3, 1.0)).unwrap();
        let split3 = m3.truncation_split().unwrap();
        let expect3 = 4.0 * std::f64::consts::PI / 1.2;
        assert!((split3.lambda - expect3).abs() < 1e-6 * expect3);
        // g + h = f pointwise
        for x in [[0.4, 0.1], [1.7, -0.3], [0.0, 0.99], [2.4, 2.4]] {
            let g = split.small_jump_density(&x).unwrap();
            let h = split.large_jump_density(&x).unwrap();
            let f = split.parent_density(&x).unwrap();
            assert!((g + h - f).abs() <= 1e-14 * f.max(1.0));
        }
        // stable kinds have no split
        let ms = LevyModel::stable(2, 0.5, iso::<f64>(2, 1.0)).unwrap();
        assert!(ms.truncation_split().is_err());
    }

    #[test]
    fn kappa_sandwich_holds_pointwise() {
        let cosine = SpectralDensity::<f64>::new(
            2,
            SpectralForm::Cosine { base: 1.0, amplitude: 0.5, axis: vec![1.0, 0.0] },
        )
        .unwrap();
        let kappa = cosine.kappa_spec();
        assert!(kappa > 0.0 && kappa <= 1.0);
        let m = LevyModel::stable(2, 1.2, cosine).unwrap();
        for x in [[0.3, 0.4], [-1.0, 2.0], [0.05, -0.01]] {
            let f = m.levy_density(&x).unwrap();
            let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
            let envelope = r.powf(-(2.0 + 1.2));
            assert!(f >= kappa * envelope - 1e-12);
            assert!(f <= envelope / kappa + 1e-12);
        }
    }

    #[test]
    fn brownian_addition_rules() {
        let m = LevyModel::stable(2, 1.5, iso::<f64>(2, 1.0)).unwrap();
        let id = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let mb = m.clone().add_brownian(id).unwrap();
        assert_eq!(mb.kind, ModelKind::StablePlusBrownian);
        let mt = LevyModel::truncated(2, 1.5, iso::<f64>(2, 1.0)).unwrap();
        let id = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(mt.add_brownian(id).unwrap().kind, ModelKind::TruncatedPlusBrownian);
        // zero matrix: unchanged in kind (and law)
        let z = DenseMatrix::zeros(2, 2);
        assert_eq!(m.clone().add_brownian(z).unwrap().kind, ModelKind::Stable);
        // non-symmetric rejected
        let ns = DenseMatrix::from_rows(&[vec![1.0, 0.5], vec![0.0, 1.0]]);
        assert!(matches!(m.clone().add_brownian(ns), Err(Error::NonSymmetricDiffusion)));
        // indefinite rejected
        let nd = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, -1.0]]);
        assert!(matches!(m.clone().add_brownian(nd), Err(Error::IndefiniteDiffusion(_))));
    }

    #[test]
    fn table_form_evaluates_piecewise_linear() {
        let table = SpectralDensity::<f64>::new(
            2,
            SpectralForm::Table {
                entries: vec![(0.0, 1.0), (std::f64::consts::PI, 2.0)],
            },
        )
        .unwrap();
        // midpoint of the first segment: angle π/2 should interpolate to 1.5
        let v = table.eval(&[0.0, 1.0]);
        assert!((v - 1.5).abs() < 1e-12);
        // wrap segment midpoint at 3π/2 interpolates back down to 1.5
        let v = table.eval(&[0.0, -1.0]);
        assert!((v - 1.5).abs() < 1e-12);
        // table in d=3 rejected
        assert!(SpectralDensity::<f64>::new(
            3,
            SpectralForm::Table { entries: vec![(0.0, 1.0), (1.0, 2.0)] }
        )
        .is_err());
    }

    #[test]
    fn model_spec_round_trip() {
        let cosine = SpectralDensity::<f64>::new(
            2,
            SpectralForm::Cosine { base: 1.0, amplitude: 0.5, axis: vec![1.0, 0.0] },
        )
        .unwrap();
        let m = LevyModel::stable(2, 1.5, cosine).unwrap().dual();
        let spec = m.to_spec();
        let json = serde_json::to_string(&spec).unwrap();
        let back: ModelSpec<f64> = serde_json::from_str(&json).unwrap();
        let m2 = LevyModel::from_spec(&back).unwrap();
        assert_eq!(m2.kind, m.kind);
        assert_eq!(m2.spectral.reflected, true);
        let xi = [0.28_f64, -0.96];
        assert!((m2.spectral.eval(&xi) - m.spectral.eval(&xi)).abs() < 1e-15);
    }
}
