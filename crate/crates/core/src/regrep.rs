//! Regular representations `V_u` on `X_u` and the reduced norm.
//!
//! `V_u(f)` is stored as a matrix on the flattened coordinates of `X_u`
//! (see [`XuLayout`]). Norms are taken on the Hilbert space
//! `X_u ⊗_{A_u} C^{n(u)}`, realised as the quotient of
//! `(⊕_η B_η) ⊗ C^{n(u)}` by the null space of the Gram form `P_u`;
//! in these coordinates `V_u(f)` acts as `V_u(f) ⊗ I`.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::algebra::{ensure_same, Section};
use crate::bundle::FellBundle;
use crate::error::{FellError, Result};
use crate::hilbmod::XuLayout;
use crate::linalg::{self, flatten, CMat, ZERO};

/// Eigenvalues of `P_u` at or below this fraction of the largest one are
/// treated as zero.
pub const GRAM_THRESHOLD: f64 = 1e-10;

/// Null-space leakage above `LEAKAGE_TOL * (1 + ‖M‖)` means the matrix is
/// not a module map.
pub const LEAKAGE_TOL: f64 = 1e-8;

/// A positive semidefinite form with cached factors `P = W* W`.
#[derive(Clone, Debug)]
pub struct GramForm {
    pub unit: usize,
    matrix: CMat,
    /// `rank x dim`, rows `sqrt(λ) v*` over the retained eigenpairs.
    whitening: CMat,
    /// `dim x rank`, columns `v / sqrt(λ)`; `whitening * pinv_sqrt = I`.
    pinv_sqrt: CMat,
    /// Orthonormal basis of the discarded eigenspace.
    null: CMat,
}

impl GramForm {
    /// From a block-diagonal decomposition of the form.
    pub fn from_blocks(unit: usize, blocks: &[CMat]) -> Self {
        let dim: usize = blocks.iter().map(|b| b.nrows()).sum();
        let mut matrix = CMat::zeros(dim, dim);
        let mut eig = Vec::with_capacity(blocks.len());
        let mut offset = 0;
        let mut scale: f64 = 0.0;
        for b in blocks {
            matrix.view_mut((offset, offset), b.shape()).copy_from(b);
            let (vals, vecs) = linalg::hermitian_eigen(b);
            scale = vals.iter().cloned().fold(scale, f64::max);
            eig.push((offset, vals, vecs));
            offset += b.nrows();
        }
        let cut = GRAM_THRESHOLD * scale;
        let mut kept = Vec::new();
        let mut dropped = Vec::new();
        for (off, vals, vecs) in &eig {
            for (k, &lam) in vals.iter().enumerate() {
                let mut v = linalg::CVec::zeros(dim);
                v.rows_mut(*off, vecs.nrows()).copy_from(&vecs.column(k));
                if lam > cut && lam > 0.0 {
                    kept.push((lam, v));
                } else {
                    dropped.push(v);
                }
            }
        }
        let mut whitening = CMat::zeros(kept.len(), dim);
        let mut pinv_sqrt = CMat::zeros(dim, kept.len());
        for (i, (lam, v)) in kept.iter().enumerate() {
            let s = lam.sqrt();
            whitening.set_row(i, &(v.adjoint() * linalg::c(s, 0.0)));
            pinv_sqrt.set_column(i, &(v * linalg::c(1.0 / s, 0.0)));
        }
        let mut null = CMat::zeros(dim, dropped.len());
        for (i, v) in dropped.iter().enumerate() {
            null.set_column(i, v);
        }
        Self {
            unit,
            matrix,
            whitening,
            pinv_sqrt,
            null,
        }
    }

    pub fn from_matrix(unit: usize, p: &CMat) -> Self {
        Self::from_blocks(unit, std::slice::from_ref(p))
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn rank(&self) -> usize {
        self.whitening.nrows()
    }

    pub fn null_basis(&self) -> &CMat {
        &self.null
    }

    /// `W M P^{+1/2}`: the operator `M` in an orthonormal basis of the
    /// induced Hilbert space.
    pub fn compress(&self, m: &CMat) -> CMat {
        &self.whitening * m * &self.pinv_sqrt
    }

    /// Size of the component of `M(null P)` outside `null P`.
    pub fn leakage(&self, m: &CMat) -> f64 {
        if self.null.ncols() == 0 || self.rank() == 0 {
            return 0.0;
        }
        linalg::opnorm(&(&self.whitening * m * &self.null))
    }
}

/// Gram form of the basis `h_η^{E_p} ⊗ e_m` of `(⊕_{η ∈ G_u} B_η) ⊗ C^{n(u)}`
/// under `⟨b ⊗ v, b' ⊗ v'⟩ = v* (b* b') v'`.
pub fn build_induced(bundle: &FellBundle, u: usize) -> Result<GramForm> {
    let layout = XuLayout::new(bundle, u)?;
    let n = bundle.fibers().dim(u);
    let blocks: Vec<CMat> = layout
        .arrows
        .iter()
        .map(|&a| {
            let d = bundle.fiber_dim(a);
            let basis: Vec<CMat> = (0..d).map(|p| bundle.basis(a, p)).collect();
            let mut block = CMat::zeros(d * n, d * n);
            for p in 0..d {
                for q in 0..d {
                    let ip = bundle.right_inner(a, &basis[p], &basis[q]);
                    for m in 0..n {
                        for mm in 0..n {
                            block[(p * n + m, q * n + mm)] = ip[(m, mm)];
                        }
                    }
                }
            }
            block
        })
        .collect();
    Ok(GramForm::from_blocks(u, &blocks))
}

/// Matrix of `V_u(f)` on the flattened coordinates of `X_u`: block
/// `(ζ, η)` sends `b ∈ B_η` to `f(ζη⁻¹) b ∈ B_ζ`.
pub fn represent(f: &Section, u: usize) -> Result<CMat> {
    let layout = XuLayout::new(f.bundle(), u)?;
    Ok(represent_with(f, &layout))
}

fn represent_with(f: &Section, layout: &XuLayout) -> CMat {
    let b = f.bundle();
    let g = b.groupoid();
    let mut m = CMat::zeros(layout.total, layout.total);
    for (i, &zeta) in layout.arrows.iter().enumerate() {
        for (j, &eta) in layout.arrows.iter().enumerate() {
            let x = g.mul(zeta, g.inverse(eta));
            let fx = f.value(x);
            if fx.iter().all(|z| *z == ZERO) {
                continue;
            }
            for q in 0..b.fiber_dim(eta) {
                let image = flatten(&b.mult(x, eta, fx, &b.basis(eta, q)));
                for (p, z) in image.into_iter().enumerate() {
                    m[(layout.offsets[i] + p, layout.offsets[j] + q)] = z;
                }
            }
        }
    }
    m
}

/// `‖M‖` on the Hilbert space induced by `P`; `m` acts on the same
/// coordinates as `P`.
pub fn operator_norm_p(m: &CMat, p: &GramForm) -> Result<f64> {
    if m.shape() != (p.dim(), p.dim()) {
        return Err(FellError::ShapeMismatch {
            expected: (p.dim(), p.dim()),
            actual: m.shape(),
        });
    }
    if p.rank() == 0 {
        return Ok(0.0);
    }
    let norm = linalg::opnorm(&p.compress(m));
    let leakage = p.leakage(m);
    if leakage > LEAKAGE_TOL * (1.0 + norm) {
        return Err(FellError::NotModuleMap { leakage });
    }
    Ok(norm)
}

/// Per-unit operator matrices on `X_u`, the data a `j`-recovery starts from.
#[derive(Clone, Debug)]
pub struct OperatorFamily {
    bundle: Arc<FellBundle>,
    blocks: BTreeMap<usize, CMat>,
}

impl OperatorFamily {
    pub fn new(bundle: &Arc<FellBundle>, blocks: BTreeMap<usize, CMat>) -> Result<Self> {
        for &u in bundle.groupoid().units() {
            let dim = XuLayout::new(bundle, u)?.total;
            match blocks.get(&u) {
                Some(m) if m.shape() == (dim, dim) => {}
                Some(m) => {
                    return Err(FellError::ShapeMismatch {
                        expected: (dim, dim),
                        actual: m.shape(),
                    })
                }
                None => return Err(FellError::Structural(format!("no operator for unit {u}"))),
            }
        }
        if blocks.len() != bundle.groupoid().units().len() {
            return Err(FellError::Structural("operator given for a non-unit".into()));
        }
        Ok(Self {
            bundle: Arc::clone(bundle),
            blocks,
        })
    }

    pub fn bundle(&self) -> &Arc<FellBundle> {
        &self.bundle
    }

    pub fn block(&self, u: usize) -> &CMat {
        &self.blocks[&u]
    }

    pub fn blocks(&self) -> &BTreeMap<usize, CMat> {
        &self.blocks
    }

    fn zip(&self, other: &Self, op: impl Fn(&CMat, &CMat) -> CMat) -> Result<Self> {
        ensure_same(&self.bundle, &other.bundle)?;
        let blocks = self.blocks.iter().map(|(&u, m)| (u, op(m, &other.blocks[&u]))).collect();
        Ok(Self {
            bundle: Arc::clone(&self.bundle),
            blocks,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }

    pub fn product(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a * b)
    }

    pub fn scale(&self, z: num_complex::Complex64) -> Self {
        Self {
            bundle: Arc::clone(&self.bundle),
            blocks: self.blocks.iter().map(|(&u, m)| (u, m * z)).collect(),
        }
    }
}

/// Regular representations of one bundle with the Gram forms cached.
#[derive(Clone, Debug)]
pub struct RegularRep {
    bundle: Arc<FellBundle>,
    layouts: BTreeMap<usize, XuLayout>,
    grams: BTreeMap<usize, GramForm>,
}

impl RegularRep {
    pub fn new(bundle: &Arc<FellBundle>) -> Result<Self> {
        let mut layouts = BTreeMap::new();
        let mut grams = BTreeMap::new();
        for &u in bundle.groupoid().units() {
            layouts.insert(u, XuLayout::new(bundle, u)?);
            grams.insert(u, build_induced(bundle, u)?);
        }
        Ok(Self {
            bundle: Arc::clone(bundle),
            layouts,
            grams,
        })
    }

    pub fn bundle(&self) -> &Arc<FellBundle> {
        &self.bundle
    }

    pub fn layout(&self, u: usize) -> &XuLayout {
        &self.layouts[&u]
    }

    pub fn gram(&self, u: usize) -> &GramForm {
        &self.grams[&u]
    }

    fn check(&self, f: &Section) -> Result<()> {
        ensure_same(&self.bundle, f.bundle())
    }

    fn check_unit(&self, u: usize) -> Result<()> {
        if self.layouts.contains_key(&u) {
            Ok(())
        } else {
            Err(FellError::Domain(format!("{u} is not a unit")))
        }
    }

    pub fn represent(&self, f: &Section, u: usize) -> Result<CMat> {
        self.check(f)?;
        self.check_unit(u)?;
        Ok(represent_with(f, &self.layouts[&u]))
    }

    /// `V_u(f)` for every unit.
    pub fn family(&self, f: &Section) -> Result<OperatorFamily> {
        self.check(f)?;
        let blocks = self.layouts.iter().map(|(&u, l)| (u, represent_with(f, l))).collect();
        Ok(OperatorFamily {
            bundle: Arc::clone(&self.bundle),
            blocks,
        })
    }

    /// `M ⊗ I_{n(u)}`, the action on the coordinates of the Gram form.
    pub fn lift(&self, m: &CMat, u: usize) -> CMat {
        linalg::kron_identity(m, self.bundle.fibers().dim(u))
    }

    /// Norm of an operator on `X_u` given in flattened coordinates.
    pub fn operator_norm(&self, m: &CMat, u: usize) -> Result<f64> {
        self.check_unit(u)?;
        operator_norm_p(&self.lift(m, u), &self.grams[&u])
    }

    pub fn unit_norms(&self, f: &Section) -> Result<BTreeMap<usize, f64>> {
        let fam = self.family(f)?;
        self.family_norms(&fam)
    }

    pub fn family_norms(&self, fam: &OperatorFamily) -> Result<BTreeMap<usize, f64>> {
        ensure_same(&self.bundle, fam.bundle())?;
        fam.blocks
            .iter()
            .map(|(&u, m)| Ok((u, self.operator_norm(m, u)?)))
            .collect()
    }

    /// `‖f‖_r = max_u ‖V_u(f)‖`.
    pub fn reduced_norm(&self, f: &Section) -> Result<f64> {
        Ok(self.unit_norms(f)?.into_values().fold(0.0, f64::max))
    }

    /// `‖M_f* P - P M_g‖` on lifted coordinates; zero exactly when `M_g` is
    /// the `P`-adjoint of `M_f`.
    pub fn p_adjoint_residual(&self, m_f: &CMat, m_g: &CMat, u: usize) -> Result<f64> {
        self.check_unit(u)?;
        let p = self.grams[&u].matrix();
        let (lf, lg) = (self.lift(m_f, u), self.lift(m_g, u));
        Ok(linalg::frobenius(&(lf.adjoint() * p - p * lg)))
    }
}

/// `max_u ‖V_u(f)‖` computed from scratch.
pub fn reduced_norm(f: &Section) -> Result<f64> {
    RegularRep::new(f.bundle())?.reduced_norm(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::{make_trivial_bundle, make_twist_bundle, unit_cocycle};
    use crate::groupoid::{cyclic_table, make_group_groupoid, make_pair_groupoid};
    use crate::linalg::{c, ONE};

    fn diag(xs: &[f64]) -> CMat {
        CMat::from_diagonal(&linalg::CVec::from_vec(xs.iter().map(|&x| c(x, 0.0)).collect()))
    }

    #[test]
    fn norm_with_identity_form() {
        let p = GramForm::from_matrix(0, &linalg::identity(2));
        assert!((operator_norm_p(&diag(&[3.0, 1.0]), &p).unwrap() - 3.0).abs() < 1e-14);
        assert_eq!(operator_norm_p(&CMat::zeros(2, 2), &p).unwrap(), 0.0);
    }

    #[test]
    fn degenerate_form_ignores_null_space() {
        let p = GramForm::from_matrix(0, &diag(&[1.0, 0.0]));
        assert_eq!(p.rank(), 1);
        assert!((operator_norm_p(&diag(&[2.0, 50.0]), &p).unwrap() - 2.0).abs() < 1e-14);
        // mixing the null direction into the range is not a module map
        let mut m = diag(&[2.0, 0.0]);
        m[(0, 1)] = ONE;
        assert!(matches!(operator_norm_p(&m, &p), Err(FellError::NotModuleMap { .. })));
    }

    #[test]
    fn line_bundle_gram_is_identity() {
        let z3 = make_group_groupoid(&cyclic_table(3)).unwrap();
        let b = make_twist_bundle(&z3, unit_cocycle(&z3)).unwrap();
        let p = build_induced(&b, 0).unwrap();
        assert!(linalg::frobenius(&(p.matrix() - linalg::identity(3))) < 1e-15);
    }

    #[test]
    fn gram_rank_counts_tensor_dimension() {
        // B_η ⊗_{A_u} C^{n(u)} has dimension n(r(η))
        let g = make_pair_groupoid(2).unwrap();
        let dims = BTreeMap::from([(0, 2), (3, 3)]);
        let b = make_trivial_bundle(&g, &dims).unwrap();
        let p = build_induced(&b, 3).unwrap();
        assert_eq!(p.dim(), (2 * 3 + 3 * 3) * 3);
        assert_eq!(p.rank(), 2 + 3);
    }

    #[test]
    fn z2_line_bundle_representation() {
        let z2 = make_group_groupoid(&cyclic_table(2)).unwrap();
        let b = Arc::new(make_twist_bundle(&z2, unit_cocycle(&z2)).unwrap());
        let (a, bb) = (c(2.0, 1.0), c(-0.5, 3.0));
        let f = Section::new(&b, vec![CMat::from_element(1, 1, a), CMat::from_element(1, 1, bb)]).unwrap();
        let m = represent(&f, 0).unwrap();
        let expect = CMat::from_row_slice(2, 2, &[a, bb, bb, a]);
        assert!(linalg::frobenius(&(m - expect)) < 1e-15);
        let ones = Section::new(&b, vec![CMat::from_element(1, 1, ONE); 2]).unwrap();
        assert!((reduced_norm(&ones).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn units_represent_as_identity() {
        let g = make_pair_groupoid(2).unwrap();
        let dims = BTreeMap::from([(0, 2), (3, 1)]);
        let b = Arc::new(make_trivial_bundle(&g, &dims).unwrap());
        let rep = RegularRep::new(&b).unwrap();
        let e = Section::units(&b);
        for u in [0, 3] {
            let m = rep.represent(&e, u).unwrap();
            assert!(linalg::frobenius(&(&m - linalg::identity(m.nrows()))) < 1e-15);
        }
        assert!((rep.reduced_norm(&e).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pair_groupoid_all_ones() {
        let g = make_pair_groupoid(2).unwrap();
        let dims = g.units().iter().map(|&u| (u, 1)).collect();
        let b = Arc::new(make_trivial_bundle(&g, &dims).unwrap());
        let f = Section::new(&b, vec![CMat::from_element(1, 1, ONE); 4]).unwrap();
        assert!((reduced_norm(&f).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn not_a_unit() {
        let g = make_pair_groupoid(2).unwrap();
        let dims = g.units().iter().map(|&u| (u, 1)).collect();
        let b = Arc::new(make_trivial_bundle(&g, &dims).unwrap());
        assert!(matches!(represent(&Section::zero(&b), 1), Err(FellError::Domain(_))));
    }
}
