//! The convolution *-algebra of sections of a Fell bundle.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;

use crate::bundle::FellBundle;
use crate::error::{FellError, Result};
use crate::linalg::{self, CMat, ZERO};
use crate::rng::SeededRng;

pub(crate) fn same_bundle(a: &Arc<FellBundle>, b: &Arc<FellBundle>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

pub(crate) fn ensure_same(a: &Arc<FellBundle>, b: &Arc<FellBundle>) -> Result<()> {
    if same_bundle(a, b) {
        Ok(())
    } else {
        Err(FellError::BundleMismatch)
    }
}

/// A section `γ ↦ f(γ) ∈ B_γ`, stored densely over all arrows.
#[derive(Clone, Debug)]
pub struct Section {
    bundle: Arc<FellBundle>,
    values: Vec<CMat>,
}

impl PartialEq for Section {
    fn eq(&self, other: &Self) -> bool {
        same_bundle(&self.bundle, &other.bundle) && self.values == other.values
    }
}

impl Section {
    pub fn zero(bundle: &Arc<FellBundle>) -> Self {
        let values = (0..bundle.groupoid().arrow_count()).map(|a| bundle.zero(a)).collect();
        Self {
            bundle: Arc::clone(bundle),
            values,
        }
    }

    pub fn new(bundle: &Arc<FellBundle>, values: Vec<CMat>) -> Result<Self> {
        let n = bundle.groupoid().arrow_count();
        if values.len() != n {
            return Err(FellError::Structural(format!("{} values for {n} arrows", values.len())));
        }
        for (a, v) in values.iter().enumerate() {
            bundle.check_shape(a, v)?;
        }
        Ok(Self {
            bundle: Arc::clone(bundle),
            values,
        })
    }

    /// Arrows missing from `values` get zero.
    pub fn from_map(bundle: &Arc<FellBundle>, values: BTreeMap<usize, CMat>) -> Result<Self> {
        let mut f = Self::zero(bundle);
        for (a, v) in values {
            f.set(a, v)?;
        }
        Ok(f)
    }

    /// Independent standard complex Gaussian entries in every fibre.
    pub fn random(bundle: &Arc<FellBundle>, rng: &mut SeededRng) -> Self {
        let values = (0..bundle.groupoid().arrow_count())
            .map(|a| {
                let (r, s) = bundle.shape(a);
                rng.gaussian_matrix(r, s)
            })
            .collect();
        Self {
            bundle: Arc::clone(bundle),
            values,
        }
    }

    /// The identity of the algebra: `1` on every unit fibre.
    pub fn units(bundle: &Arc<FellBundle>) -> Self {
        let mut f = Self::zero(bundle);
        for &u in bundle.groupoid().units() {
            f.values[u] = linalg::identity(bundle.fibers().dim(u));
        }
        f
    }

    pub fn bundle(&self) -> &Arc<FellBundle> {
        &self.bundle
    }

    pub fn value(&self, a: usize) -> &CMat {
        &self.values[a]
    }

    pub fn values(&self) -> &[CMat] {
        &self.values
    }

    pub fn set(&mut self, a: usize, v: CMat) -> Result<()> {
        if a >= self.values.len() {
            return Err(FellError::Domain(format!("no arrow {a}")));
        }
        self.bundle.check_shape(a, &v)?;
        self.values[a] = v;
        Ok(())
    }

    /// Arrows where the value is not identically zero.
    pub fn support(&self) -> Vec<usize> {
        (0..self.values.len())
            .filter(|&a| self.values[a].iter().any(|z| *z != ZERO))
            .collect()
    }

    fn zip(&self, other: &Self, op: impl Fn(&CMat, &CMat) -> CMat) -> Result<Self> {
        ensure_same(&self.bundle, &other.bundle)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| op(a, b)).collect();
        Ok(Self {
            bundle: Arc::clone(&self.bundle),
            values,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a - b)
    }

    pub fn scale(&self, z: Complex64) -> Self {
        Self {
            bundle: Arc::clone(&self.bundle),
            values: self.values.iter().map(|v| v * z).collect(),
        }
    }

    /// `(f * g)(γ) = Σ_{η ∈ G^{r(γ)}} f(η) g(η⁻¹γ)`.
    pub fn convolve(&self, other: &Self) -> Result<Self> {
        ensure_same(&self.bundle, &other.bundle)?;
        let b = &self.bundle;
        let mut out = Self::zero(b);
        for [x, y, xy] in b.groupoid().composition_triples() {
            let (fx, gy) = (&self.values[x], &other.values[y]);
            if is_zero(fx) || is_zero(gy) {
                continue;
            }
            out.values[xy] += b.mult(x, y, fx, gy);
        }
        Ok(out)
    }

    /// `f*(γ) = f(γ⁻¹)*`.
    pub fn involute(&self) -> Self {
        let b = &self.bundle;
        let g = b.groupoid();
        let values = (0..g.arrow_count())
            .map(|a| {
                let inv = g.inverse(a);
                b.invol(inv, &self.values[inv])
            })
            .collect();
        Self {
            bundle: Arc::clone(b),
            values,
        }
    }

    /// `max_γ ‖f(γ)‖`.
    pub fn sup_norm(&self) -> f64 {
        (0..self.values.len())
            .map(|a| self.bundle.fibernorm(a, &self.values[a]))
            .fold(0.0, f64::max)
    }

    /// `Σ_γ ‖f(γ)‖`, an upper bound for every C*-norm on the section algebra.
    pub fn l1_norm(&self) -> f64 {
        (0..self.values.len())
            .map(|a| self.bundle.fibernorm(a, &self.values[a]))
            .sum()
    }

    /// Largest entrywise modulus of `f - g`.
    pub fn max_entry_diff(&self, other: &Self) -> Result<f64> {
        ensure_same(&self.bundle, &other.bundle)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| linalg::max_abs(&(a - b)))
            .fold(0.0, f64::max))
    }
}

fn is_zero(m: &CMat) -> bool {
    m.iter().all(|z| *z == ZERO)
}

/// The section with value `b` at `a` and zero elsewhere.
pub fn delta_section(bundle: &Arc<FellBundle>, a: usize, b: CMat) -> Result<Section> {
    let mut f = Section::zero(bundle);
    f.set(a, b)?;
    Ok(f)
}
