//! Fell bundles over finite groupoids with full matrix fibres.
//!
//! The fibre over `γ` is the space of complex `n(r(γ)) x n(s(γ))` matrices,
//! where `n` assigns a positive size to every unit. What distinguishes one
//! bundle from another is the multiplication `B_γ x B_η -> B_γη` and the
//! conjugate-linear involution `B_γ -> B_γ⁻¹`, selected by [`BundleKind`].

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{FellError, Result};
use crate::groupoid::FiniteGroupoid;
use crate::linalg::{self, basis_element, flatten, frobenius, unflatten, CMat, ONE, ZERO};
use crate::validation::ValidationReport;

/// Default absolute tolerance on residual Frobenius norms.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Floor for Hermitian eigenvalues in positivity checks.
pub const POSITIVITY_FLOOR: f64 = -1e-10;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiberSpec {
    /// `n(u)` at unit indices, 0 elsewhere.
    dims: Vec<usize>,
}

impl FiberSpec {
    /// `dims` maps every unit of `g` to a positive matrix size.
    pub fn new(g: &FiniteGroupoid, dims: &BTreeMap<usize, usize>) -> Result<Self> {
        let mut out = vec![0; g.arrow_count()];
        for (&u, &n) in dims {
            if !g.is_unit(u) {
                return Err(FellError::Structural(format!("fibre size given for non-unit {u}")));
            }
            if n == 0 {
                return Err(FellError::Domain(format!("fibre size of unit {u} must be positive")));
            }
            out[u] = n;
        }
        if let Some(&u) = g.units().iter().find(|&&u| out[u] == 0) {
            return Err(FellError::Structural(format!("no fibre size for unit {u}")));
        }
        Ok(Self { dims: out })
    }

    pub fn uniform(g: &FiniteGroupoid, n: usize) -> Result<Self> {
        let dims = g.units().iter().map(|&u| (u, n)).collect();
        Self::new(g, &dims)
    }

    pub fn dim(&self, u: usize) -> usize {
        self.dims[u]
    }

    pub fn as_map(&self) -> BTreeMap<usize, usize> {
        self.dims
            .iter()
            .enumerate()
            .filter(|(_, &n)| n > 0)
            .map(|(u, &n)| (u, n))
            .collect()
    }
}

/// Coefficients of a bilinear map between matrix-unit bases:
/// `mult(E_p, E_q) = Σ_k data[(p * right + q) * out + k] E_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureTensor {
    pub left: usize,
    pub right: usize,
    pub out: usize,
    pub data: Vec<Complex64>,
}

impl StructureTensor {
    pub fn zeros(left: usize, right: usize, out: usize) -> Self {
        Self {
            left,
            right,
            out,
            data: vec![ZERO; left * right * out],
        }
    }

    #[inline]
    pub fn at(&self, p: usize, q: usize, k: usize) -> Complex64 {
        self.data[(p * self.right + q) * self.out + k]
    }

    #[inline]
    pub fn at_mut(&mut self, p: usize, q: usize, k: usize) -> &mut Complex64 {
        &mut self.data[(p * self.right + q) * self.out + k]
    }

    fn apply(&self, a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![ZERO; self.out];
        for (p, &ap) in a.iter().enumerate() {
            if ap == ZERO {
                continue;
            }
            for (q, &bq) in b.iter().enumerate() {
                let w = ap * bq;
                if w == ZERO {
                    continue;
                }
                let base = (p * self.right + q) * self.out;
                for (k, o) in out.iter_mut().enumerate() {
                    *o += w * self.data[base + k];
                }
            }
        }
        out
    }
}

/// Multiplication and involution given as raw coefficient tables.
#[derive(Clone, Debug, PartialEq)]
pub struct CustomTables {
    /// One tensor per composable pair `(γ, η)`.
    pub mult: BTreeMap<(usize, usize), StructureTensor>,
    /// Per arrow `γ`, the `dim B_γ⁻¹ x dim B_γ` matrix `J` with
    /// `vec(b*) = J · conj(vec(b))`.
    pub invol: Vec<CMat>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum BundleKind {
    /// Plain matrix product and conjugate transpose.
    Trivial,
    /// Line bundle with multiplication twisted by `sigma[γ * n + η]`.
    Twist { sigma: Vec<Complex64> },
    /// `mult(γ, η)(a, b) = a U_γ b U_γ*`, `b* = U_γ* b^H U_γ`.
    Crossed { unitaries: Vec<CMat> },
    Custom(CustomTables),
}

impl BundleKind {
    pub fn name(&self) -> &'static str {
        match self {
            BundleKind::Trivial => "trivial",
            BundleKind::Twist { .. } => "twist",
            BundleKind::Crossed { .. } => "crossed",
            BundleKind::Custom(_) => "custom",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FellBundle {
    groupoid: FiniteGroupoid,
    fibers: FiberSpec,
    kind: BundleKind,
}

impl FellBundle {
    /// Assembles a bundle, checking only that all tables have the right
    /// shapes. Use [`FellBundle::validate`] for the Fell axioms.
    pub fn from_parts(groupoid: FiniteGroupoid, fibers: FiberSpec, kind: BundleKind) -> Result<Self> {
        let b = Self {
            groupoid,
            fibers,
            kind,
        };
        b.check_structure()?;
        Ok(b)
    }

    pub fn groupoid(&self) -> &FiniteGroupoid {
        &self.groupoid
    }

    pub fn fibers(&self) -> &FiberSpec {
        &self.fibers
    }

    pub fn kind(&self) -> &BundleKind {
        &self.kind
    }

    /// `(n(r(γ)), n(s(γ)))`.
    pub fn shape(&self, a: usize) -> (usize, usize) {
        let g = &self.groupoid;
        (self.fibers.dim(g.range(a)), self.fibers.dim(g.source(a)))
    }

    pub fn fiber_dim(&self, a: usize) -> usize {
        let (r, s) = self.shape(a);
        r * s
    }

    pub fn zero(&self, a: usize) -> CMat {
        let (r, s) = self.shape(a);
        CMat::zeros(r, s)
    }

    pub fn basis(&self, a: usize, p: usize) -> CMat {
        let (r, s) = self.shape(a);
        basis_element(r, s, p)
    }

    pub fn check_shape(&self, a: usize, m: &CMat) -> Result<()> {
        let expected = self.shape(a);
        if m.shape() != expected {
            return Err(FellError::ShapeMismatch {
                expected,
                actual: m.shape(),
            });
        }
        Ok(())
    }

    /// Product of `x ∈ B_a` and `y ∈ B_b`, landing in `B_ab`.
    ///
    /// The pair must be composable.
    pub fn mult(&self, a: usize, b: usize, x: &CMat, y: &CMat) -> CMat {
        debug_assert!(self.groupoid.composable(a, b), "mult on non-composable pair ({a},{b})");
        match &self.kind {
            BundleKind::Trivial => x * y,
            BundleKind::Twist { sigma } => (x * y) * sigma[a * self.groupoid.arrow_count() + b],
            BundleKind::Crossed { unitaries } => {
                let u = &unitaries[a];
                x * (u * y * u.adjoint())
            }
            BundleKind::Custom(t) => {
                let ab = self.groupoid.mul(a, b);
                let tensor = &t.mult[&(a, b)];
                let (r, s) = self.shape(ab);
                unflatten(r, s, &tensor.apply(&flatten(x), &flatten(y)))
            }
        }
    }

    /// Involution `B_a -> B_a⁻¹`.
    pub fn invol(&self, a: usize, x: &CMat) -> CMat {
        match &self.kind {
            BundleKind::Trivial => x.adjoint(),
            BundleKind::Twist { sigma } => {
                let inv = self.groupoid.inverse(a);
                let s = sigma[a * self.groupoid.arrow_count() + inv];
                x.adjoint() * s.conj()
            }
            BundleKind::Crossed { unitaries } => {
                let u = &unitaries[a];
                u.adjoint() * x.adjoint() * u
            }
            BundleKind::Custom(t) => {
                let inv = self.groupoid.inverse(a);
                let v = linalg::CVec::from_vec(flatten(x).into_iter().map(|z| z.conj()).collect());
                let out = &t.invol[a] * v;
                let (r, s) = self.shape(inv);
                unflatten(r, s, out.as_slice())
            }
        }
    }

    /// `x* y ∈ A_{s(a)}` for `x, y ∈ B_a`.
    pub fn right_inner(&self, a: usize, x: &CMat, y: &CMat) -> CMat {
        let inv = self.groupoid.inverse(a);
        self.mult(inv, a, &self.invol(a, x), y)
    }

    /// `x y* ∈ A_{r(a)}` for `x, y ∈ B_a`.
    pub fn left_inner(&self, a: usize, x: &CMat, y: &CMat) -> CMat {
        let inv = self.groupoid.inverse(a);
        self.mult(a, inv, x, &self.invol(a, y))
    }

    /// Right action of `A_{s(a)}` on `B_a`.
    pub fn right_act(&self, a: usize, x: &CMat, c: &CMat) -> CMat {
        self.mult(a, self.groupoid.source(a), x, c)
    }

    /// Left action of `A_{r(a)}` on `B_a`.
    pub fn left_act(&self, a: usize, c: &CMat, x: &CMat) -> CMat {
        self.mult(self.groupoid.range(a), a, c, x)
    }

    /// `‖b‖ = sqrt(‖b* b‖)` with `b* b` formed through the bundle operations.
    pub fn fibernorm(&self, a: usize, x: &CMat) -> f64 {
        linalg::opnorm(&self.right_inner(a, x, x)).sqrt()
    }

    /// Tabulates multiplication and involution over matrix-unit bases.
    pub fn tables(&self) -> CustomTables {
        if let BundleKind::Custom(t) = &self.kind {
            return t.clone();
        }
        let g = &self.groupoid;
        let mut mult = BTreeMap::new();
        for [a, b, ab] in g.composition_triples() {
            let (da, db, dab) = (self.fiber_dim(a), self.fiber_dim(b), self.fiber_dim(ab));
            let mut t = StructureTensor::zeros(da, db, dab);
            for p in 0..da {
                let x = self.basis(a, p);
                for q in 0..db {
                    let prod = flatten(&self.mult(a, b, &x, &self.basis(b, q)));
                    for (k, z) in prod.into_iter().enumerate() {
                        *t.at_mut(p, q, k) = z;
                    }
                }
            }
            mult.insert((a, b), t);
        }
        let invol = (0..g.arrow_count())
            .map(|a| {
                let inv = g.inverse(a);
                let mut j = CMat::zeros(self.fiber_dim(inv), self.fiber_dim(a));
                for p in 0..self.fiber_dim(a) {
                    for (k, z) in flatten(&self.invol(a, &self.basis(a, p))).into_iter().enumerate() {
                        j[(k, p)] = z;
                    }
                }
                j
            })
            .collect();
        CustomTables { mult, invol }
    }

    /// The same bundle re-expressed through coefficient tables.
    pub fn tabulate(&self) -> FellBundle {
        FellBundle {
            groupoid: self.groupoid.clone(),
            fibers: self.fibers.clone(),
            kind: BundleKind::Custom(self.tables()),
        }
    }

    fn check_structure(&self) -> Result<()> {
        let g = &self.groupoid;
        let n = g.arrow_count();
        if self.fibers.dims.len() != n {
            return Err(FellError::Structural("fibre spec belongs to another groupoid".into()));
        }
        match &self.kind {
            BundleKind::Trivial => {}
            BundleKind::Twist { sigma } => {
                if sigma.len() != n * n {
                    return Err(FellError::Structural("cocycle table has the wrong size".into()));
                }
                if let Some(&u) = g.units().iter().find(|&&u| self.fibers.dim(u) != 1) {
                    return Err(FellError::Structural(format!("twist bundle needs scalar fibres (unit {u})")));
                }
            }
            BundleKind::Crossed { unitaries } => {
                if unitaries.len() != n {
                    return Err(FellError::Structural(format!(
                        "{} unitaries for {n} arrows",
                        unitaries.len()
                    )));
                }
                for (a, u) in unitaries.iter().enumerate() {
                    let (r, s) = self.shape(a);
                    if r != s {
                        return Err(FellError::Structural(format!(
                            "fibre size not constant on the orbit through arrow {a}"
                        )));
                    }
                    if u.shape() != (r, s) {
                        return Err(FellError::ShapeMismatch {
                            expected: (r, s),
                            actual: u.shape(),
                        });
                    }
                }
            }
            BundleKind::Custom(t) => {
                for &(a, b) in t.mult.keys() {
                    if a >= n || b >= n || !g.composable(a, b) {
                        return Err(FellError::Structural(format!(
                            "multiplication table given for non-composable pair ({a},{b})"
                        )));
                    }
                }
                for [a, b, ab] in g.composition_triples() {
                    let Some(tensor) = t.mult.get(&(a, b)) else {
                        return Err(FellError::Structural(format!("missing multiplication table for ({a},{b})")));
                    };
                    let want = (self.fiber_dim(a), self.fiber_dim(b), self.fiber_dim(ab));
                    if (tensor.left, tensor.right, tensor.out) != want
                        || tensor.data.len() != want.0 * want.1 * want.2
                    {
                        return Err(FellError::Structural(format!(
                            "multiplication table for ({a},{b}) has dimensions ({},{},{}), expected {want:?}",
                            tensor.left, tensor.right, tensor.out
                        )));
                    }
                }
                if t.invol.len() != n {
                    return Err(FellError::Structural("involution table has the wrong length".into()));
                }
                for (a, j) in t.invol.iter().enumerate() {
                    let want = (self.fiber_dim(g.inverse(a)), self.fiber_dim(a));
                    if j.shape() != want {
                        return Err(FellError::ShapeMismatch {
                            expected: want,
                            actual: j.shape(),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Brute-force check of the Fell-bundle axioms over matrix-unit bases.
    ///
    /// Structural problems are returned as errors; axiom violations are
    /// collected in the report with their worst residual.
    pub fn validate(&self, tol: f64) -> Result<ValidationReport> {
        self.check_structure()?;
        let g = &self.groupoid;
        let mut report = g.validate();
        if !report.is_empty() {
            return Ok(report);
        }
        let tables = self.tables();
        let n = g.arrow_count();

        // associativity: (ab)c = a(bc) as a tensor identity
        for (&(a, b), t_ab) in &tables.mult {
            let ab = g.mul(a, b);
            for c in g.fiber_r(g.source(b)).expect("source is a unit").iter().copied() {
                let bc = g.mul(b, c);
                let t_ab_c = &tables.mult[&(ab, c)];
                let t_bc = &tables.mult[&(b, c)];
                let t_a_bc = &tables.mult[&(a, bc)];
                let (da, db, dc, dout) = (t_ab.left, t_ab.right, t_bc.right, t_ab_c.out);
                // diff[((p * db + q) * dc + r) * dout + l] = ((E_p E_q) E_r - E_p (E_q E_r))_l
                let mut diff = vec![ZERO; da * db * dc * dout];
                for p in 0..da {
                    for q in 0..db {
                        for k in 0..t_ab.out {
                            let x = t_ab.at(p, q, k);
                            if x == ZERO {
                                continue;
                            }
                            for r in 0..dc {
                                let base = ((p * db + q) * dc + r) * dout;
                                for l in 0..dout {
                                    let y = t_ab_c.at(k, r, l);
                                    if y != ZERO {
                                        diff[base + l] += x * y;
                                    }
                                }
                            }
                        }
                    }
                }
                for q in 0..db {
                    for r in 0..dc {
                        for k in 0..t_bc.out {
                            let x = t_bc.at(q, r, k);
                            if x == ZERO {
                                continue;
                            }
                            for p in 0..da {
                                let base = ((p * db + q) * dc + r) * dout;
                                for l in 0..dout {
                                    let y = t_a_bc.at(p, k, l);
                                    if y != ZERO {
                                        diff[base + l] -= x * y;
                                    }
                                }
                            }
                        }
                    }
                }
                let mut worst = (0.0, [0usize; 3]);
                for (i, chunk) in diff.chunks(dout.max(1)).enumerate() {
                    let res = chunk.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                    if res > worst.0 {
                        worst = (res, [i / (db * dc), (i / dc) % db, i % dc]);
                    }
                }
                if worst.0 > tol {
                    let [p, q, r] = worst.1;
                    report.push(
                        "associativity",
                        vec![a, b, c, p, q, r],
                        Some(worst.0),
                        format!("(ab)c != a(bc) on arrows ({a},{b},{c})"),
                    );
                }
            }
        }

        // b** = b
        for a in 0..n {
            let inv = g.inverse(a);
            let twice = tables.invol[inv].map(|z| z.conj()) * &tables.invol[a];
            let res = frobenius(&(twice - linalg::identity(self.fiber_dim(a))));
            if res > tol {
                report.push(
                    "involution-involutive",
                    vec![a],
                    Some(res),
                    format!("b** != b on the fibre over {a}"),
                );
            }
        }

        // (xy)* = y* x*
        for [a, b, ab] in g.composition_triples() {
            let (ainv, binv) = (g.inverse(a), g.inverse(b));
            let mut worst = (0.0, [0usize; 2]);
            for p in 0..self.fiber_dim(a) {
                let x = self.basis(a, p);
                let xs = self.invol(a, &x);
                for q in 0..self.fiber_dim(b) {
                    let y = self.basis(b, q);
                    let lhs = self.invol(ab, &self.mult(a, b, &x, &y));
                    let rhs = self.mult(binv, ainv, &self.invol(b, &y), &xs);
                    let res = frobenius(&(lhs - rhs));
                    if res > worst.0 {
                        worst = (res, [p, q]);
                    }
                }
            }
            if worst.0 > tol {
                report.push(
                    "involution-antimultiplicative",
                    vec![a, b, worst.1[0], worst.1[1]],
                    Some(worst.0),
                    format!("(xy)* != y*x* on arrows ({a},{b})"),
                );
            }
        }

        // unit fibres are the matrix algebras M_n(u) with their usual structure
        for &u in g.units() {
            let d = self.fiber_dim(u);
            let mut worst: f64 = 0.0;
            for p in 0..d {
                let x = self.basis(u, p);
                worst = worst.max(frobenius(&(self.invol(u, &x) - x.adjoint())));
                for q in 0..d {
                    let y = self.basis(u, q);
                    worst = worst.max(frobenius(&(self.mult(u, u, &x, &y) - &x * &y)));
                }
            }
            if worst > tol {
                report.push(
                    "unit-fiber-algebra",
                    vec![u],
                    Some(worst),
                    format!("fibre over unit {u} is not M_n with matrix product and adjoint"),
                );
            }
        }

        for a in 0..n {
            let (r, s) = self.shape(a);
            let mut worst_pos = (0.0, 0usize);
            let mut worst_sym = (0.0, 0usize);
            let mut right_span = CMat::zeros(s * s, self.fiber_dim(a) * self.fiber_dim(a));
            let mut left_span = CMat::zeros(r * r, self.fiber_dim(a) * self.fiber_dim(a));
            for p in 0..self.fiber_dim(a) {
                let x = self.basis(a, p);
                let xx = self.right_inner(a, &x, &x);
                let herm = frobenius(&(&xx - xx.adjoint()));
                let lowest = linalg::min_hermitian_eigenvalue(&xx);
                let pos_res = herm.max(if lowest < POSITIVITY_FLOOR { -lowest } else { 0.0 });
                if pos_res > worst_pos.0 {
                    worst_pos = (pos_res, p);
                }
                let sym = (linalg::opnorm(&xx) - linalg::opnorm(&self.left_inner(a, &x, &x))).abs();
                if sym > worst_sym.0 {
                    worst_sym = (sym, p);
                }
                for q in 0..self.fiber_dim(a) {
                    let y = self.basis(a, q);
                    let col = p * self.fiber_dim(a) + q;
                    for (k, z) in flatten(&self.right_inner(a, &x, &y)).into_iter().enumerate() {
                        right_span[(k, col)] = z;
                    }
                    for (k, z) in flatten(&self.left_inner(a, &x, &y)).into_iter().enumerate() {
                        left_span[(k, col)] = z;
                    }
                }
            }
            if worst_pos.0 > tol {
                report.push(
                    "positivity",
                    vec![a, worst_pos.1],
                    Some(worst_pos.0),
                    format!("b*b is not positive semidefinite on the fibre over {a}"),
                );
            }
            if worst_sym.0 > tol {
                report.push(
                    "cstar-norm",
                    vec![a, worst_sym.1],
                    Some(worst_sym.0),
                    format!("‖b*b‖ != ‖bb*‖ on the fibre over {a}"),
                );
            }
            if linalg::rank(&right_span, 1e-10) != s * s {
                report.push(
                    "saturation",
                    vec![a],
                    None,
                    format!("inner products of B_{a} do not span A_s (right)"),
                );
            }
            if linalg::rank(&left_span, 1e-10) != r * r {
                report.push(
                    "saturation",
                    vec![a],
                    None,
                    format!("inner products of B_{a} do not span A_r (left)"),
                );
            }
        }

        Ok(report)
    }
}

fn validated(bundle: FellBundle, tol: f64) -> Result<FellBundle> {
    let report = bundle.validate(tol)?;
    if report.is_empty() {
        Ok(bundle)
    } else {
        Err(FellError::Validation(report))
    }
}

/// Plain matrix multiplication and adjoint; with all sizes 1 this is the
/// groupoid algebra itself.
pub fn make_trivial_bundle(g: &FiniteGroupoid, dims: &BTreeMap<usize, usize>) -> Result<FellBundle> {
    let fibers = FiberSpec::new(g, dims)?;
    FellBundle::from_parts(g.clone(), fibers, BundleKind::Trivial)
}

/// Cocycle table with every entry 1.
pub fn unit_cocycle(g: &FiniteGroupoid) -> Vec<Complex64> {
    vec![ONE; g.arrow_count() * g.arrow_count()]
}

/// Checks the normalised 2-cocycle identity and unit modulus.
pub fn check_cocycle(g: &FiniteGroupoid, sigma: &[Complex64], tol: f64) -> ValidationReport {
    let n = g.arrow_count();
    let s = |a: usize, b: usize| sigma[a * n + b];
    let mut report = ValidationReport::new();
    for [a, b, _] in g.composition_triples() {
        let m = s(a, b).norm();
        if (m - 1.0).abs() > tol {
            report.push("unit-modulus", vec![a, b], Some((m - 1.0).abs()), format!("|σ({a},{b})| = {m}"));
        }
    }
    for a in 0..n {
        let (r, src) = (g.range(a), g.source(a));
        let res = (s(r, a) - ONE).norm().max((s(a, src) - ONE).norm());
        if res > tol {
            report.push("normalisation", vec![a], Some(res), format!("σ is not normalised at {a}"));
        }
    }
    for [a, b, ab] in g.composition_triples() {
        for &c in g.fiber_r(g.source(b)).expect("source is a unit") {
            let bc = g.mul(b, c);
            let res = (s(a, b) * s(ab, c) - s(b, c) * s(a, bc)).norm();
            if res > tol {
                report.push(
                    "cocycle",
                    vec![a, b, c],
                    Some(res),
                    format!("σ({a},{b})σ({a}{b},{c}) != σ({b},{c})σ({a},{b}{c})"),
                );
            }
        }
    }
    report
}

/// Line bundle with `mult(γ,η)(a,b) = σ(γ,η) ab` and
/// `invol(γ)(b) = conj(σ(γ,γ⁻¹)) conj(b)`.
pub fn make_twist_bundle(g: &FiniteGroupoid, sigma: Vec<Complex64>) -> Result<FellBundle> {
    let n = g.arrow_count();
    if sigma.len() != n * n {
        return Err(FellError::Structural(format!(
            "cocycle table has {} entries, expected {}",
            sigma.len(),
            n * n
        )));
    }
    let report = check_cocycle(g, &sigma, 1e-12);
    if !report.is_empty() {
        return Err(FellError::Validation(report));
    }
    // only composable entries are meaningful
    let sigma = (0..n * n)
        .map(|i| if g.composable(i / n, i % n) { sigma[i] } else { ONE })
        .collect();
    let fibers = FiberSpec::uniform(g, 1)?;
    validated(FellBundle::from_parts(g.clone(), fibers, BundleKind::Twist { sigma })?, DEFAULT_TOL)
}

/// Bundle `r*E` of a groupoid action on matrix algebras `E_u = M_m(u)`,
/// with `α_γ = Ad(unitaries[γ])`.
pub fn make_crossed_product_bundle(
    g: &FiniteGroupoid,
    fiberdim: &BTreeMap<usize, usize>,
    unitaries: Vec<CMat>,
) -> Result<FellBundle> {
    let fibers = FiberSpec::new(g, fiberdim)?;
    let bundle = FellBundle::from_parts(g.clone(), fibers, BundleKind::Crossed { unitaries })?;
    let BundleKind::Crossed { unitaries } = &bundle.kind else { unreachable!() };
    let mut report = ValidationReport::new();
    for (a, u) in unitaries.iter().enumerate() {
        let res = frobenius(&(u.adjoint() * u - linalg::identity(u.nrows())));
        if res > 1e-10 {
            report.push("unitary", vec![a], Some(res), format!("U_{a} is not unitary"));
        }
    }
    let alpha = |a: usize, x: &CMat| &unitaries[a] * x * unitaries[a].adjoint();
    for &u in g.units() {
        let m = fibers_dim(&bundle, u);
        let res = (0..m * m)
            .map(|p| {
                let e = basis_element(m, m, p);
                frobenius(&(alpha(u, &e) - e))
            })
            .fold(0.0, f64::max);
        if res > 1e-10 {
            report.push("action-unit", vec![u], Some(res), format!("α is not the identity at unit {u}"));
        }
    }
    for [a, b, ab] in g.composition_triples() {
        let m = fibers_dim(&bundle, g.source(b));
        let res = (0..m * m)
            .map(|p| {
                let e = basis_element(m, m, p);
                frobenius(&(alpha(a, &alpha(b, &e)) - alpha(ab, &e)))
            })
            .fold(0.0, f64::max);
        if res > 1e-10 {
            report.push(
                "action-multiplicative",
                vec![a, b],
                Some(res),
                format!("α_{a} α_{b} != α_{ab}"),
            );
        }
    }
    if !report.is_empty() {
        return Err(FellError::Validation(report));
    }
    validated(bundle, DEFAULT_TOL)
}

fn fibers_dim(b: &FellBundle, u: usize) -> usize {
    b.fibers.dim(u)
}

/// Bundle given directly by coefficient tables; only shapes are checked.
pub fn make_custom_bundle(g: &FiniteGroupoid, dims: &BTreeMap<usize, usize>, tables: CustomTables) -> Result<FellBundle> {
    let fibers = FiberSpec::new(g, dims)?;
    FellBundle::from_parts(g.clone(), fibers, BundleKind::Custom(tables))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groupoid::{abelian_table, cyclic_table, make_group_groupoid, make_pair_groupoid, make_unit_groupoid};
    use crate::linalg::c;
    use crate::rng::SeededRng;

    fn uniform_dims(g: &FiniteGroupoid, n: usize) -> BTreeMap<usize, usize> {
        g.units().iter().map(|&u| (u, n)).collect()
    }

    #[test]
    fn trivial_bundles_validate() {
        let p2 = make_pair_groupoid(2).unwrap();
        let b = make_trivial_bundle(&p2, &uniform_dims(&p2, 1)).unwrap();
        assert!(b.validate(1e-12).unwrap().is_empty());

        let z2 = make_group_groupoid(&cyclic_table(2)).unwrap();
        let b = make_trivial_bundle(&z2, &uniform_dims(&z2, 2)).unwrap();
        assert!(b.validate(1e-12).unwrap().is_empty());

        let units = make_unit_groupoid(2).unwrap();
        let dims = BTreeMap::from([(0, 1), (1, 3)]);
        let b = make_trivial_bundle(&units, &dims).unwrap();
        assert_eq!(b.shape(1), (3, 3));
        assert!(b.validate(1e-12).unwrap().is_empty());

        // mixed sizes along arrows
        let dims = BTreeMap::from([(0, 1), (3, 2)]);
        let b = make_trivial_bundle(&p2, &dims).unwrap();
        assert_eq!(b.shape(1), (1, 2));
        assert!(b.validate(1e-12).unwrap().is_empty());
    }

    #[test]
    fn twist_with_unit_cocycle_matches_trivial() {
        let z3 = make_group_groupoid(&cyclic_table(3)).unwrap();
        let twist = make_twist_bundle(&z3, unit_cocycle(&z3)).unwrap();
        let trivial = make_trivial_bundle(&z3, &uniform_dims(&z3, 1)).unwrap();
        assert_eq!(twist.tables(), trivial.tables());
    }

    fn klein_sigma(g: &FiniteGroupoid) -> Vec<Complex64> {
        // element x^a y^b at index 2a + b
        let n = g.arrow_count();
        (0..n * n)
            .map(|i| {
                let (gi, hi) = (i / n, i % n);
                let b = gi % 2;
                let c = hi / 2;
                if b * c == 1 {
                    c_neg()
                } else {
                    ONE
                }
            })
            .collect()
    }

    fn c_neg() -> Complex64 {
        c(-1.0, 0.0)
    }

    #[test]
    fn klein_twist_validates() {
        let k = make_group_groupoid(&abelian_table(2, 2)).unwrap();
        let b = make_twist_bundle(&k, klein_sigma(&k)).unwrap();
        assert!(b.validate(1e-12).unwrap().is_empty());
    }

    #[test]
    fn z2_coboundary_twist() {
        let z2 = make_group_groupoid(&cyclic_table(2)).unwrap();
        let mut sigma = unit_cocycle(&z2);
        sigma[3] = c_neg();
        let b = make_twist_bundle(&z2, sigma).unwrap();
        assert_eq!(b.invol(1, &CMat::from_element(1, 1, ONE))[(0, 0)], c_neg());
    }

    #[test]
    fn broken_cocycle_rejected_with_witness() {
        let z3 = make_group_groupoid(&cyclic_table(3)).unwrap();
        let mut sigma = unit_cocycle(&z3);
        sigma[3 + 1] = c(0.0, 1.0); // σ(1,1) = i only
        match make_twist_bundle(&z3, sigma) {
            Err(FellError::Validation(r)) => {
                let v = r.violations.iter().find(|v| v.axiom == "cocycle").unwrap();
                assert_eq!(v.witness.len(), 3);
                assert!(v.residual.unwrap() > 0.1);
            }
            other => panic!("expected cocycle rejection, got {other:?}"),
        }
    }

    #[test]
    fn broken_twist_reports_associativity_in_validator() {
        // bypass the constructor and let the validator find the defect
        let z3 = make_group_groupoid(&cyclic_table(3)).unwrap();
        let mut sigma = unit_cocycle(&z3);
        sigma[3 + 1] = c(0.0, 1.0);
        let fibers = FiberSpec::uniform(&z3, 1).unwrap();
        let b = FellBundle::from_parts(z3, fibers, BundleKind::Twist { sigma }).unwrap();
        let report = b.validate(1e-10).unwrap();
        let v = report.violations.iter().find(|v| v.axiom == "associativity").unwrap();
        assert!(v.residual.unwrap() > 0.5);
    }

    fn swap() -> CMat {
        CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
    }

    #[test]
    fn crossed_swap_action_validates() {
        let z2 = make_group_groupoid(&cyclic_table(2)).unwrap();
        let b = make_crossed_product_bundle(&z2, &uniform_dims(&z2, 2), vec![linalg::identity(2), swap()]).unwrap();
        // diagonal elements are moved to diagonal elements
        let d = CMat::from_diagonal(&linalg::CVec::from_vec(vec![c(1.0, 0.0), c(5.0, 0.0)]));
        let moved = b.mult(1, 0, &linalg::identity(2), &d);
        assert_eq!(moved[(0, 0)], c(5.0, 0.0));
    }

    #[test]
    fn crossed_trivial_action_is_matrix_product() {
        let z3 = make_group_groupoid(&cyclic_table(3)).unwrap();
        let b = make_crossed_product_bundle(&z3, &uniform_dims(&z3, 2), vec![linalg::identity(2); 3]).unwrap();
        let mut rng = SeededRng::new(3);
        let (x, y) = (rng.gaussian_matrix(2, 2), rng.gaussian_matrix(2, 2));
        assert!(frobenius(&(b.mult(1, 2, &x, &y) - &x * &y)) < 1e-14);
    }

    #[test]
    fn non_multiplicative_action_rejected() {
        let z3 = make_group_groupoid(&cyclic_table(3)).unwrap();
        let mut rng = SeededRng::new(5);
        let u = vec![linalg::identity(2), rng.unitary(2), rng.unitary(2)];
        match make_crossed_product_bundle(&z3, &uniform_dims(&z3, 2), u) {
            Err(FellError::Validation(r)) => assert!(r.has("action-multiplicative")),
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn crossed_requires_constant_size_on_orbits() {
        let p2 = make_pair_groupoid(2).unwrap();
        let dims = BTreeMap::from([(0, 1), (3, 2)]);
        let u = vec![linalg::identity(1), CMat::zeros(1, 2), CMat::zeros(2, 1), linalg::identity(2)];
        assert!(matches!(
            make_crossed_product_bundle(&p2, &dims, u),
            Err(FellError::Structural(_))
        ));
    }

    #[test]
    fn fibernorm_is_largest_singular_value() {
        let mut rng = SeededRng::new(11);
        let z3 = make_group_groupoid(&cyclic_table(3)).unwrap();
        let w = rng.unitary(3);
        let d = CMat::from_diagonal(&linalg::CVec::from_vec(vec![
            ONE,
            Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0),
            Complex64::from_polar(1.0, 4.0 * std::f64::consts::PI / 3.0),
        ]));
        let gen = &w * &d * w.adjoint();
        let us = vec![linalg::identity(3), gen.clone(), &gen * &gen];
        let b = make_crossed_product_bundle(&z3, &uniform_dims(&z3, 3), us).unwrap();
        for a in 0..3 {
            let x = rng.gaussian_matrix(3, 3);
            assert!((b.fibernorm(a, &x) - linalg::opnorm(&x)).abs() < 1e-10);
        }
    }

    #[test]
    fn custom_tables_roundtrip_and_corruption() {
        let p2 = make_pair_groupoid(2).unwrap();
        let b = make_trivial_bundle(&p2, &uniform_dims(&p2, 2)).unwrap();
        let custom = b.tabulate();
        assert!(custom.validate(1e-10).unwrap().is_empty());
        let mut rng = SeededRng::new(2);
        let (x, y) = (rng.gaussian_matrix(2, 2), rng.gaussian_matrix(2, 2));
        assert!(frobenius(&(custom.mult(1, 2, &x, &y) - b.mult(1, 2, &x, &y))) < 1e-13);

        let BundleKind::Custom(mut tables) = custom.kind().clone() else { unreachable!() };
        let t = tables.mult.get_mut(&(1, 2)).unwrap();
        *t.at_mut(0, 0, 0) += c(0.5, 0.0);
        let broken = make_custom_bundle(&p2, &uniform_dims(&p2, 2), tables).unwrap();
        assert!(!broken.validate(1e-10).unwrap().is_empty());
    }

    #[test]
    fn custom_dimension_mismatch_is_structural() {
        let p2 = make_pair_groupoid(2).unwrap();
        let b = make_trivial_bundle(&p2, &uniform_dims(&p2, 1)).unwrap();
        let mut tables = b.tables();
        tables.mult.insert((1, 2), StructureTensor::zeros(2, 1, 1));
        assert!(matches!(
            make_custom_bundle(&p2, &uniform_dims(&p2, 1), tables),
            Err(FellError::Structural(_))
        ));
    }

    #[test]
    fn submultiplicative_fibernorm() {
        let p2 = make_pair_groupoid(2).unwrap();
        let dims = BTreeMap::from([(0, 2), (3, 3)]);
        let b = make_trivial_bundle(&p2, &dims).unwrap();
        let mut rng = SeededRng::new(8);
        for [x, y, _] in p2.composition_triples() {
            let (r1, s1) = b.shape(x);
            let (r2, s2) = b.shape(y);
            let (bx, by) = (rng.gaussian_matrix(r1, s1), rng.gaussian_matrix(r2, s2));
            let prod = b.mult(x, y, &bx, &by);
            assert!(b.fibernorm(p2.mul(x, y), &prod) <= b.fibernorm(x, &bx) * b.fibernorm(y, &by) + 1e-10);
        }
    }
}
