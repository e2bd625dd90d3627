//! Finite-dimensional Hilbert modules attached to a Fell bundle.
//!
//! For a unit `u`, `X_u` consists of functions `η ↦ h(η) ∈ B_η` on `G_u`
//! with `A_u`-valued inner product `⟨h, k⟩ = Σ h(η)* k(η)`. For an arrow
//! `γ` with `u = r(γ)` and `v = s(γ)`, `W_γ` consists of functions
//! `η ↦ ξ(η) ∈ B_{ηγ}` on `G_u`, a right Hilbert `A_v`-module and a left
//! module over the compact operators `K_u` on `X_u`.

use std::sync::Arc;

use num_complex::Complex64;

use crate::algebra::{ensure_same, Section};
use crate::bundle::FellBundle;
use crate::error::{FellError, Result};
use crate::linalg::{self, flatten, CMat, CVec};
use crate::rng::SeededRng;

/// Offsets of each `B_η`, `η ∈ G_u`, inside the flattened coordinate
/// space `⊕_η B_η` (arrows ascending, fibres row-major).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct XuLayout {
    pub unit: usize,
    pub arrows: Vec<usize>,
    pub offsets: Vec<usize>,
    pub total: usize,
}

impl XuLayout {
    pub fn new(bundle: &FellBundle, u: usize) -> Result<Self> {
        let arrows = bundle.groupoid().fiber_s(u)?.to_vec();
        let mut offsets = Vec::with_capacity(arrows.len());
        let mut total = 0;
        for &a in &arrows {
            offsets.push(total);
            total += bundle.fiber_dim(a);
        }
        Ok(Self {
            unit: u,
            arrows,
            offsets,
            total,
        })
    }
}

fn check_unit_entries(bundle: &FellBundle, arrows: &[usize], entries: &[CMat], shift: Option<usize>) -> Result<()> {
    if entries.len() != arrows.len() {
        return Err(FellError::Structural(format!(
            "{} entries for a fibre with {} arrows",
            entries.len(),
            arrows.len()
        )));
    }
    let g = bundle.groupoid();
    for (&a, e) in arrows.iter().zip(entries) {
        let target = match shift {
            Some(c) => g.mul(a, c),
            None => a,
        };
        bundle.check_shape(target, e)?;
    }
    Ok(())
}

fn restrict_entries(arrows: &[usize], entries: &[CMat], support: &[usize]) -> Vec<CMat> {
    arrows
        .iter()
        .zip(entries)
        .map(|(a, e)| if support.contains(a) { e.clone() } else { CMat::zeros(e.nrows(), e.ncols()) })
        .collect()
}

/// An element of `X_u`.
#[derive(Clone, Debug)]
pub struct XuVector {
    bundle: Arc<FellBundle>,
    unit: usize,
    entries: Vec<CMat>,
}

impl XuVector {
    /// `entries` are aligned with `G_u` in ascending arrow order.
    pub fn new(bundle: &Arc<FellBundle>, u: usize, entries: Vec<CMat>) -> Result<Self> {
        let arrows = bundle.groupoid().fiber_s(u)?;
        check_unit_entries(bundle, arrows, &entries, None)?;
        Ok(Self {
            bundle: Arc::clone(bundle),
            unit: u,
            entries,
        })
    }

    pub fn zero(bundle: &Arc<FellBundle>, u: usize) -> Result<Self> {
        let entries = bundle.groupoid().fiber_s(u)?.iter().map(|&a| bundle.zero(a)).collect();
        Ok(Self {
            bundle: Arc::clone(bundle),
            unit: u,
            entries,
        })
    }

    pub fn random(bundle: &Arc<FellBundle>, u: usize, rng: &mut SeededRng) -> Result<Self> {
        let entries = bundle
            .groupoid()
            .fiber_s(u)?
            .iter()
            .map(|&a| {
                let (r, s) = bundle.shape(a);
                rng.gaussian_matrix(r, s)
            })
            .collect();
        Ok(Self {
            bundle: Arc::clone(bundle),
            unit: u,
            entries,
        })
    }

    /// `h_a^b`: value `b` at `a`, zero elsewhere on `G_{s(a)}`.
    pub fn delta(bundle: &Arc<FellBundle>, a: usize, b: CMat) -> Result<Self> {
        bundle.check_shape(a, &b)?;
        let g = bundle.groupoid();
        let mut x = Self::zero(bundle, g.source(a))?;
        x.entries[g.position_in_fiber_s(a)] = b;
        Ok(x)
    }

    /// Restriction of a section to `G_u`.
    pub fn from_section(f: &Section, u: usize) -> Result<Self> {
        let entries = f.bundle().groupoid().fiber_s(u)?.iter().map(|&a| f.value(a).clone()).collect();
        Ok(Self {
            bundle: Arc::clone(f.bundle()),
            unit: u,
            entries,
        })
    }

    pub fn bundle(&self) -> &Arc<FellBundle> {
        &self.bundle
    }

    pub fn unit(&self) -> usize {
        self.unit
    }

    pub fn arrows(&self) -> &[usize] {
        self.bundle.groupoid().fiber_s(self.unit).expect("unit checked at construction")
    }

    pub fn entries(&self) -> &[CMat] {
        &self.entries
    }

    /// Value at arrow `a`, or `None` if `a ∉ G_u`.
    pub fn get(&self, a: usize) -> Option<&CMat> {
        let g = self.bundle.groupoid();
        (a < g.arrow_count() && g.source(a) == self.unit).then(|| &self.entries[g.position_in_fiber_s(a)])
    }

    fn compatible(&self, other: &Self) -> Result<()> {
        ensure_same(&self.bundle, &other.bundle)?;
        if self.unit != other.unit {
            return Err(FellError::Domain(format!(
                "vectors over different units {} and {}",
                self.unit, other.unit
            )));
        }
        Ok(())
    }

    fn map(&self, f: impl Fn(usize, &CMat) -> CMat) -> Self {
        Self {
            bundle: Arc::clone(&self.bundle),
            unit: self.unit,
            entries: self.arrows().iter().zip(&self.entries).map(|(&a, e)| f(a, e)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.compatible(other)?;
        Ok(self.map(|a, e| e + &other.entries[self.bundle.groupoid().position_in_fiber_s(a)]))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.compatible(other)?;
        Ok(self.map(|a, e| e - &other.entries[self.bundle.groupoid().position_in_fiber_s(a)]))
    }

    pub fn scale(&self, z: Complex64) -> Self {
        self.map(|_, e| e * z)
    }

    /// `(h · c)(η) = h(η) c` for `c ∈ A_u`.
    pub fn right_act(&self, c: &CMat) -> Result<Self> {
        self.bundle.check_shape(self.unit, c)?;
        Ok(self.map(|a, e| self.bundle.right_act(a, e, c)))
    }

    /// Zero outside `support`.
    pub fn restrict(&self, support: &[usize]) -> Self {
        Self {
            bundle: Arc::clone(&self.bundle),
            unit: self.unit,
            entries: restrict_entries(self.arrows(), &self.entries, support),
        }
    }

    /// Coordinates in the flattened space of [`XuLayout`].
    pub fn flatten(&self) -> CVec {
        CVec::from_vec(self.entries.iter().flat_map(flatten).collect())
    }

    pub fn from_flat(bundle: &Arc<FellBundle>, u: usize, v: &CVec) -> Result<Self> {
        let layout = XuLayout::new(bundle, u)?;
        if v.len() != layout.total {
            return Err(FellError::ShapeMismatch {
                expected: (layout.total, 1),
                actual: (v.len(), 1),
            });
        }
        let entries = layout
            .arrows
            .iter()
            .zip(&layout.offsets)
            .map(|(&a, &off)| {
                let (r, s) = bundle.shape(a);
                linalg::unflatten(r, s, &v.as_slice()[off..off + r * s])
            })
            .collect();
        Ok(Self {
            bundle: Arc::clone(bundle),
            unit: u,
            entries,
        })
    }

    /// Extension by zero to a section of the whole bundle.
    pub fn to_section(&self) -> Section {
        let mut f = Section::zero(&self.bundle);
        for (&a, e) in self.arrows().iter().zip(&self.entries) {
            f.set(a, e.clone()).expect("entries have fibre shapes");
        }
        f
    }
}

/// An element of `W_γ`.
#[derive(Clone, Debug)]
pub struct WgVector {
    bundle: Arc<FellBundle>,
    arrow: usize,
    entries: Vec<CMat>,
}

impl WgVector {
    /// `entries[i] ∈ B_{η_i γ}` for `η_i` the `i`-th arrow of `G_{r(γ)}`.
    pub fn new(bundle: &Arc<FellBundle>, arrow: usize, entries: Vec<CMat>) -> Result<Self> {
        let g = bundle.groupoid();
        if arrow >= g.arrow_count() {
            return Err(FellError::Domain(format!("no arrow {arrow}")));
        }
        check_unit_entries(bundle, g.fiber_s(g.range(arrow))?, &entries, Some(arrow))?;
        Ok(Self {
            bundle: Arc::clone(bundle),
            arrow,
            entries,
        })
    }

    fn build(bundle: &Arc<FellBundle>, arrow: usize, f: impl FnMut(usize) -> CMat) -> Result<Self> {
        let g = bundle.groupoid();
        if arrow >= g.arrow_count() {
            return Err(FellError::Domain(format!("no arrow {arrow}")));
        }
        let entries = g.fiber_s(g.range(arrow))?.iter().map(|&e| g.mul(e, arrow)).map(f).collect();
        Ok(Self {
            bundle: Arc::clone(bundle),
            arrow,
            entries,
        })
    }

    pub fn zero(bundle: &Arc<FellBundle>, arrow: usize) -> Result<Self> {
        Self::build(bundle, arrow, |t| bundle.zero(t))
    }

    pub fn random(bundle: &Arc<FellBundle>, arrow: usize, rng: &mut SeededRng) -> Result<Self> {
        Self::build(bundle, arrow, |t| {
            let (r, s) = bundle.shape(t);
            rng.gaussian_matrix(r, s)
        })
    }

    /// `η ↦ f(ηγ)`.
    pub fn from_section(f: &Section, arrow: usize) -> Result<Self> {
        Self::build(f.bundle(), arrow, |t| f.value(t).clone())
    }

    pub fn bundle(&self) -> &Arc<FellBundle> {
        &self.bundle
    }

    pub fn arrow(&self) -> usize {
        self.arrow
    }

    /// `r(γ)`, the unit whose `G_u` indexes the entries.
    pub fn unit(&self) -> usize {
        self.bundle.groupoid().range(self.arrow)
    }

    /// `s(γ)`, the unit of the coefficient algebra.
    pub fn coefficient_unit(&self) -> usize {
        self.bundle.groupoid().source(self.arrow)
    }

    pub fn arrows(&self) -> &[usize] {
        self.bundle.groupoid().fiber_s(self.unit()).expect("range is a unit")
    }

    pub fn entries(&self) -> &[CMat] {
        &self.entries
    }

    pub fn get(&self, eta: usize) -> Option<&CMat> {
        let g = self.bundle.groupoid();
        (eta < g.arrow_count() && g.source(eta) == self.unit()).then(|| &self.entries[g.position_in_fiber_s(eta)])
    }

    fn compatible(&self, other: &Self) -> Result<()> {
        ensure_same(&self.bundle, &other.bundle)?;
        if self.arrow != other.arrow {
            return Err(FellError::Domain(format!(
                "vectors over different arrows {} and {}",
                self.arrow, other.arrow
            )));
        }
        Ok(())
    }

    fn map(&self, f: impl Fn(usize, &CMat) -> CMat) -> Self {
        Self {
            bundle: Arc::clone(&self.bundle),
            arrow: self.arrow,
            entries: self.arrows().iter().zip(&self.entries).map(|(&a, e)| f(a, e)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.compatible(other)?;
        Ok(self.map(|a, e| e + &other.entries[self.bundle.groupoid().position_in_fiber_s(a)]))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.compatible(other)?;
        Ok(self.map(|a, e| e - &other.entries[self.bundle.groupoid().position_in_fiber_s(a)]))
    }

    pub fn scale(&self, z: Complex64) -> Self {
        self.map(|_, e| e * z)
    }

    /// `(ξ · c)(η) = ξ(η) c` for `c ∈ A_{s(γ)}`.
    pub fn right_act(&self, c: &CMat) -> Result<Self> {
        self.bundle.check_shape(self.coefficient_unit(), c)?;
        let g = self.bundle.groupoid();
        Ok(self.map(|a, e| self.bundle.right_act(g.mul(a, self.arrow), e, c)))
    }

    pub fn restrict(&self, support: &[usize]) -> Self {
        Self {
            bundle: Arc::clone(&self.bundle),
            arrow: self.arrow,
            entries: restrict_entries(self.arrows(), &self.entries, support),
        }
    }
}

/// `♭x` in the conjugate module, with `c · ♭x = ♭(x · c*)`.
#[derive(Clone, Debug)]
pub struct DualVector(pub XuVector);

impl DualVector {
    pub fn inner(&self) -> &XuVector {
        &self.0
    }

    pub fn left_act(&self, c: &CMat) -> Result<Self> {
        Ok(Self(self.0.right_act(&c.adjoint())?))
    }

    /// `⟨♭x, ♭y⟩ = ⟨x, y⟩_K`, valued in the compact operators.
    pub fn inner_product(&self, other: &Self) -> Result<RankOne> {
        RankOne::new(&self.0, &other.0)
    }
}

/// A finite sum of rank-one operators `⟨x, y⟩_K: z ↦ x · ⟨y, z⟩` on `X_u`.
#[derive(Clone, Debug)]
pub struct RankOne {
    unit: usize,
    pairs: Vec<(XuVector, XuVector)>,
}

impl RankOne {
    pub fn new(x: &XuVector, y: &XuVector) -> Result<Self> {
        x.compatible(y)?;
        Ok(Self {
            unit: x.unit,
            pairs: vec![(x.clone(), y.clone())],
        })
    }

    pub fn unit(&self) -> usize {
        self.unit
    }

    pub fn pairs(&self) -> &[(XuVector, XuVector)] {
        &self.pairs
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.pairs[0].0.compatible(&other.pairs[0].0)?;
        let mut pairs = self.pairs.clone();
        pairs.extend(other.pairs.iter().cloned());
        Ok(Self { unit: self.unit, pairs })
    }

    /// `⟨x, y⟩_K* = ⟨y, x⟩_K`.
    pub fn adjoint(&self) -> Self {
        Self {
            unit: self.unit,
            pairs: self.pairs.iter().map(|(x, y)| (y.clone(), x.clone())).collect(),
        }
    }

    pub fn apply(&self, z: &XuVector) -> Result<XuVector> {
        let mut out = XuVector::zero(z.bundle(), z.unit())?;
        for (x, y) in &self.pairs {
            let c = xu_inner(y, z)?;
            out = out.add(&x.right_act(&c)?)?;
        }
        Ok(out)
    }

    /// The same operator written as a kernel `k(η, τ) = Σ x(η) y(τ)*`.
    pub fn to_kernel(&self) -> KernelOperator {
        let (x0, _) = &self.pairs[0];
        let bundle = x0.bundle();
        let g = bundle.groupoid();
        let arrows = x0.arrows();
        let mut k = KernelOperator::zero(bundle, self.unit).expect("unit checked at construction");
        for (x, y) in &self.pairs {
            for (i, (&eta, xe)) in arrows.iter().zip(&x.entries).enumerate() {
                for (j, (&tau, yt)) in arrows.iter().zip(&y.entries).enumerate() {
                    let tinv = g.inverse(tau);
                    let idx = i * arrows.len() + j;
                    k.kernel[idx] += bundle.mult(eta, tinv, xe, &bundle.invol(tau, yt));
                }
            }
        }
        k
    }
}

/// An operator on `X_u` (and on every `W_γ` with `r(γ) = u`) given by a
/// kernel `k(η, τ) ∈ B_{ητ⁻¹}` over `G_u x G_u`.
#[derive(Clone, Debug)]
pub struct KernelOperator {
    bundle: Arc<FellBundle>,
    unit: usize,
    kernel: Vec<CMat>,
}

impl KernelOperator {
    pub fn zero(bundle: &Arc<FellBundle>, u: usize) -> Result<Self> {
        let g = bundle.groupoid();
        let arrows = g.fiber_s(u)?;
        let mut kernel = Vec::with_capacity(arrows.len() * arrows.len());
        for &eta in arrows {
            for &tau in arrows {
                kernel.push(bundle.zero(g.mul(eta, g.inverse(tau))));
            }
        }
        Ok(Self {
            bundle: Arc::clone(bundle),
            unit: u,
            kernel,
        })
    }

    pub fn unit(&self) -> usize {
        self.unit
    }

    fn arrows(&self) -> &[usize] {
        self.bundle.groupoid().fiber_s(self.unit).expect("unit checked at construction")
    }

    /// `k(η, τ)` for arrows `η, τ ∈ G_u`.
    pub fn entry(&self, eta: usize, tau: usize) -> &CMat {
        let g = self.bundle.groupoid();
        let m = self.arrows().len();
        &self.kernel[g.position_in_fiber_s(eta) * m + g.position_in_fiber_s(tau)]
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        ensure_same(&self.bundle, &other.bundle)?;
        if self.unit != other.unit {
            return Err(FellError::Domain("kernels over different units".into()));
        }
        Ok(Self {
            bundle: Arc::clone(&self.bundle),
            unit: self.unit,
            kernel: self.kernel.iter().zip(&other.kernel).map(|(a, b)| a + b).collect(),
        })
    }

    /// `(k h)(η) = Σ_τ k(η, τ) h(τ)`.
    pub fn apply_xu(&self, h: &XuVector) -> Result<XuVector> {
        ensure_same(&self.bundle, h.bundle())?;
        if h.unit() != self.unit {
            return Err(FellError::Domain(format!("kernel over {} applied to X_{}", self.unit, h.unit())));
        }
        let g = self.bundle.groupoid();
        let arrows = self.arrows();
        let m = arrows.len();
        let mut out = XuVector::zero(&self.bundle, self.unit)?;
        for (i, &eta) in arrows.iter().enumerate() {
            for (j, &tau) in arrows.iter().enumerate() {
                let et = g.mul(eta, g.inverse(tau));
                out.entries[i] += self.bundle.mult(et, tau, &self.kernel[i * m + j], &h.entries[j]);
            }
        }
        Ok(out)
    }

    /// `(k ξ)(η) = Σ_τ k(η, τ) ξ(τ)` for `ξ ∈ W_γ`.
    pub fn apply_wg(&self, xi: &WgVector) -> Result<WgVector> {
        ensure_same(&self.bundle, xi.bundle())?;
        if xi.unit() != self.unit {
            return Err(FellError::Domain(format!(
                "kernel over {} applied to W_γ with r(γ) = {}",
                self.unit,
                xi.unit()
            )));
        }
        let g = self.bundle.groupoid();
        let arrows = self.arrows();
        let m = arrows.len();
        let mut out = WgVector::zero(&self.bundle, xi.arrow())?;
        for (i, &eta) in arrows.iter().enumerate() {
            for (j, &tau) in arrows.iter().enumerate() {
                let et = g.mul(eta, g.inverse(tau));
                let tg = g.mul(tau, xi.arrow());
                out.entries[i] += self.bundle.mult(et, tg, &self.kernel[i * m + j], &xi.entries[j]);
            }
        }
        Ok(out)
    }

    /// Matrix of the operator on the flattened coordinates of `X_u`.
    pub fn to_matrix(&self) -> Result<CMat> {
        let layout = XuLayout::new(&self.bundle, self.unit)?;
        let mut m = CMat::zeros(layout.total, layout.total);
        for (j, &tau) in layout.arrows.iter().enumerate() {
            for p in 0..self.bundle.fiber_dim(tau) {
                let col = layout.offsets[j] + p;
                let h = XuVector::delta(&self.bundle, tau, self.bundle.basis(tau, p))?;
                let image = self.apply_xu(&h)?.flatten();
                m.set_column(col, &image);
            }
        }
        Ok(m)
    }
}

/// `⟨h, k⟩ = Σ_η h(η)* k(η) ∈ A_u`.
pub fn xu_inner(h: &XuVector, k: &XuVector) -> Result<CMat> {
    h.compatible(k)?;
    let b = &h.bundle;
    let n = b.fibers().dim(h.unit);
    let mut out = CMat::zeros(n, n);
    for (i, &a) in h.arrows().iter().enumerate() {
        out += b.right_inner(a, &h.entries[i], &k.entries[i]);
    }
    Ok(out)
}

pub fn xu_norm(h: &XuVector) -> f64 {
    linalg::opnorm(&xu_inner(h, h).expect("a vector is compatible with itself")).sqrt()
}

/// `⟨ξ, ζ⟩ = Σ_η ξ(η)* ζ(η) ∈ A_{s(γ)}`.
pub fn wg_inner(xi: &WgVector, zeta: &WgVector) -> Result<CMat> {
    xi.compatible(zeta)?;
    let b = &xi.bundle;
    let g = b.groupoid();
    let n = b.fibers().dim(xi.coefficient_unit());
    let mut out = CMat::zeros(n, n);
    for (i, &a) in xi.arrows().iter().enumerate() {
        out += b.right_inner(g.mul(a, xi.arrow), &xi.entries[i], &zeta.entries[i]);
    }
    Ok(out)
}

pub fn wg_norm(xi: &WgVector) -> f64 {
    linalg::opnorm(&wg_inner(xi, xi).expect("a vector is compatible with itself")).sqrt()
}

pub fn rank_one_apply(t: &RankOne, z: &XuVector) -> Result<XuVector> {
    t.apply(z)
}

/// `[⟨f, g⟩_K · ξ](η) = f(η) · Σ_τ g(τ)* ξ(τ)`.
pub fn ku_action_on_wg(t: &RankOne, xi: &WgVector) -> Result<WgVector> {
    if t.unit != xi.unit() {
        return Err(FellError::Domain(format!(
            "operator on X_{} cannot act on W_γ with r(γ) = {}",
            t.unit,
            xi.unit()
        )));
    }
    let b = xi.bundle();
    let g = b.groupoid();
    let gamma = xi.arrow;
    let mut out = WgVector::zero(b, gamma)?;
    for (f, gv) in &t.pairs {
        ensure_same(f.bundle(), b)?;
        let mut s = b.zero(gamma);
        for (j, &tau) in xi.arrows().iter().enumerate() {
            s += b.mult(g.inverse(tau), g.mul(tau, gamma), &b.invol(tau, &gv.entries[j]), &xi.entries[j]);
        }
        for (i, &eta) in f.arrows().iter().enumerate() {
            out.entries[i] += b.mult(eta, gamma, &f.entries[i], &s);
        }
    }
    Ok(out)
}

/// `⟨ξ, ζ⟩_K`, the operator `ω ↦ ξ · ⟨ζ, ω⟩_{A_v}`, as a kernel
/// `k(η, τ) = ξ(η) ζ(τ)*`.
pub fn wg_ku_inner(xi: &WgVector, zeta: &WgVector) -> Result<KernelOperator> {
    xi.compatible(zeta)?;
    let b = xi.bundle();
    let g = b.groupoid();
    let gamma = xi.arrow;
    let mut k = KernelOperator::zero(b, xi.unit())?;
    let arrows = xi.arrows();
    let m = arrows.len();
    for (i, &eta) in arrows.iter().enumerate() {
        let eg = g.mul(eta, gamma);
        for (j, &tau) in arrows.iter().enumerate() {
            let tg = g.mul(tau, gamma);
            k.kernel[i * m + j] = b.mult(eg, g.inverse(tg), &xi.entries[i], &b.invol(tg, &zeta.entries[j]));
        }
    }
    Ok(k)
}

/// `Ψ(f ⊗ b)(η) = f(η) b` for `b ∈ B_γ`, `f ∈ X_{r(γ)}`.
pub fn psi(f: &XuVector, gamma: usize, b: &CMat) -> Result<WgVector> {
    let bundle = f.bundle();
    let g = bundle.groupoid();
    if gamma >= g.arrow_count() || g.range(gamma) != f.unit {
        return Err(FellError::Domain(format!("X_{} does not match the range of arrow {gamma}", f.unit)));
    }
    bundle.check_shape(gamma, b)?;
    let entries = f
        .arrows()
        .iter()
        .zip(&f.entries)
        .map(|(&eta, e)| bundle.mult(eta, gamma, e, b))
        .collect();
    WgVector::new(bundle, gamma, entries)
}

/// `⟨♭f ⊗ ξ, ♭g ⊗ ζ⟩ = ⟨⟨g, f⟩_K · ξ, ζ⟩_{A_v}` in `♭X_u ⊗_{K_u} W_γ`.
pub fn internal_tensor_inner(x1: &DualVector, y1: &WgVector, x2: &DualVector, y2: &WgVector) -> Result<CMat> {
    let t = RankOne::new(&x2.0, &x1.0)?;
    wg_inner(&ku_action_on_wg(&t, y1)?, y2)
}

/// `Φ(♭f ⊗ ξ) = Σ_{η ∈ G_u} f(η)* ξ(η) ∈ B_γ`.
pub fn phi(x: &DualVector, y: &WgVector) -> Result<CMat> {
    let f = &x.0;
    ensure_same(f.bundle(), y.bundle())?;
    if f.unit != y.unit() {
        return Err(FellError::Domain(format!(
            "♭X_{} does not match W_γ with r(γ) = {}",
            f.unit,
            y.unit()
        )));
    }
    let b = y.bundle();
    let g = b.groupoid();
    let gamma = y.arrow;
    let mut out = b.zero(gamma);
    for (i, &eta) in f.arrows().iter().enumerate() {
        out += b.mult(g.inverse(eta), g.mul(eta, gamma), &b.invol(eta, &f.entries[i]), &y.entries[i]);
    }
    Ok(out)
}
