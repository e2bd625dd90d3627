//! Recovery of sections from operator families, and numerical checks of
//! the properties of the map `j` from the reduced algebra to sections.
//!
//! `j(a)(γ)` is read off from matrix coefficients of the regular
//! representation: with `u = s(γ)`,
//! `⟨h_γ^b, V_u(a) h_u^c⟩ = b* j(a)(γ) c` for `b ∈ B_γ`, `c ∈ A_u`.
//! Sweeping `b` over matrix units of `B_γ` and `c` over the diagonal
//! matrix units of `A_u` gives an overdetermined, consistent linear system.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::algebra::{ensure_same, Section};
use crate::bundle::{BundleKind, FellBundle};
use crate::error::{FellError, Result};
use crate::hilbmod::{
    internal_tensor_inner, ku_action_on_wg, phi, psi, wg_inner, wg_ku_inner, wg_norm, xu_inner, xu_norm, DualVector,
    RankOne, WgVector, XuLayout, XuVector,
};
use crate::io::round_sig;
use crate::linalg::{self, flatten, frobenius, unflatten, CMat, CVec};
use crate::regrep::{OperatorFamily, RegularRep};
use crate::rng::SeededRng;

#[derive(Clone, Debug)]
struct JSystem {
    lhs: CMat,
    pinv: CMat,
}

/// Per-arrow least-squares systems for recovering `j(a)(γ)`.
#[derive(Clone, Debug)]
pub struct JMap {
    bundle: Arc<FellBundle>,
    layouts: BTreeMap<usize, XuLayout>,
    systems: Vec<JSystem>,
    tol: f64,
}

impl JMap {
    pub fn new(bundle: &Arc<FellBundle>) -> Result<Self> {
        let g = bundle.groupoid();
        let mut layouts = BTreeMap::new();
        for &u in g.units() {
            layouts.insert(u, XuLayout::new(bundle, u)?);
        }
        let systems = (0..g.arrow_count())
            .map(|a| {
                let u = g.source(a);
                let n = bundle.fibers().dim(u);
                let d = bundle.fiber_dim(a);
                let mut lhs = CMat::zeros(d * n * n * n, d);
                for p in 0..d {
                    let b = bundle.basis(a, p);
                    for q in 0..d {
                        let inner = bundle.right_inner(a, &b, &bundle.basis(a, q));
                        for m in 0..n {
                            let c = linalg::matrix_unit(n, n, m, m);
                            let row0 = (p * n + m) * n * n;
                            for (k, z) in flatten(&bundle.mult(u, u, &inner, &c)).into_iter().enumerate() {
                                lhs[(row0 + k, q)] = z;
                            }
                        }
                    }
                }
                let pinv = linalg::pseudo_inverse(&lhs, 1e-12);
                JSystem { lhs, pinv }
            })
            .collect();
        Ok(Self {
            bundle: Arc::clone(bundle),
            layouts,
            systems,
            tol: crate::bundle::DEFAULT_TOL,
        })
    }

    /// Relative residual above which data is rejected as not coming from
    /// a section.
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn bundle(&self) -> &Arc<FellBundle> {
        &self.bundle
    }

    /// `j(V)(γ)` from the operator at `u = s(γ)`.
    pub fn recover(&self, v: &OperatorFamily, gamma: usize) -> Result<CMat> {
        ensure_same(&self.bundle, v.bundle())?;
        let b = &self.bundle;
        let g = b.groupoid();
        if gamma >= g.arrow_count() {
            return Err(FellError::Domain(format!("no arrow {gamma}")));
        }
        let u = g.source(gamma);
        let n = b.fibers().dim(u);
        let d = b.fiber_dim(gamma);
        let (r, s) = b.shape(gamma);
        let layout = &self.layouts[&u];
        let block = v.block(u);
        let row_off = layout.offsets[g.position_in_fiber_s(gamma)];
        let col_off = layout.offsets[g.position_in_fiber_s(u)];
        let mut rhs = CVec::zeros(d * n * n * n);
        for m in 0..n {
            let col = col_off + m * n + m;
            let image: Vec<Complex64> = (0..d).map(|p| block[(row_off + p, col)]).collect();
            let y = unflatten(r, s, &image);
            for p in 0..d {
                let data = b.right_inner(gamma, &b.basis(gamma, p), &y);
                let row0 = (p * n + m) * n * n;
                for (k, z) in flatten(&data).into_iter().enumerate() {
                    rhs[row0 + k] = z;
                }
            }
        }
        let sys = &self.systems[gamma];
        let x = &sys.pinv * &rhs;
        let residual = (&sys.lhs * &x - &rhs).norm();
        if residual > self.tol * (1.0 + rhs.norm()) {
            return Err(FellError::NotInImage { arrow: gamma, residual });
        }
        Ok(unflatten(r, s, x.as_slice()))
    }

    /// `j(V)` on every arrow.
    pub fn recover_section(&self, v: &OperatorFamily) -> Result<Section> {
        let values = (0..self.bundle.groupoid().arrow_count())
            .map(|a| self.recover(v, a))
            .collect::<Result<Vec<_>>>()?;
        Section::new(&self.bundle, values)
    }
}

/// One-off recovery of `j(V)(γ)`.
pub fn j_recover(v: &OperatorFamily, gamma: usize) -> Result<CMat> {
    JMap::new(v.bundle())?.recover(v, gamma)
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub claim: String,
    pub instance: String,
    pub residual: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Plain-language statement checked by each named check.
pub fn claim(name: &str) -> &'static str {
    match name {
        "norm_reducing" => "sup norm of a section is at most its reduced norm",
        "roundtrip" => "j applied to the regular representation of a section returns the section",
        "adjoint" => "j(a*)(η) = j(a)(η⁻¹)*",
        "convolution" => {
            "j(a*b)(γ) agrees across direct convolution, operator product, fibre sum and Φ routes (and the α-twisted sum for actions)"
        }
        "ju_bound" => "the restriction j_u(a) lies in X_u with norm at most the reduced norm",
        "ju_identity" => "‖j_u(f)‖² equals ‖(f*f)(u)‖",
        "phi_bound" => "‖Φ(♭x ⊗ y)‖ ≤ ‖x‖‖y‖",
        "phi_truncation" => "‖Φ(♭x ⊗ y) - Φ(♭x_F ⊗ y_F)‖ ≤ ‖x - x_F‖‖y - y_F‖ along a growing chain of supports F",
        "cstar" => "‖f*f‖_r = ‖f‖_r²",
        "star_norm" => "‖f*‖_r = ‖f‖_r",
        "linearity" => "j is linear in the operator family",
        "continuity" => "j(V(f_n)) converges to f for f_n = (1 - 2^-n) f",
        "represent_homomorphism" => "V_u(f*g) = V_u(f) V_u(g)",
        "represent_star" => "V_u(f*) is the adjoint of V_u(f) for the induced inner product",
        "psi_isometry" => "⟨Ψ(f⊗b), Ψ(g⊗c)⟩ = b*⟨f,g⟩c",
        "phi_isometry" => "⟨Φ(♭f⊗ξ), Φ(♭g⊗ζ)⟩ equals the internal tensor product inner product",
        "imprimitivity" => "⟨ξ,ζ⟩_K · ω = ξ · ⟨ζ,ω⟩",
        "ku_action" => "the compact operators act on W_γ by adjointable right-module maps",
        "cross_norm" => "‖♭x ⊗ y‖ ≤ ‖x‖‖y‖ in the internal tensor product",
        "cauchy_schwarz" => "‖⟨h,k⟩‖² ≤ ‖⟨h,h⟩‖‖⟨k,k⟩‖ in X_u and W_γ",
        "truncation" => "‖x - x_F‖ is nonincreasing along a growing chain F and vanishes at full support",
        "trivial_agreement" => "reduced norms agree with those of the untwisted bundle when the twist or action is trivial",
        "alpha_route" => "j(a*b)(γ) = Σ_η j(a)(η) α_η(j(b)(η⁻¹γ)) agrees with direct convolution",
        _ => "",
    }
}

impl CheckRecord {
    /// Passes iff `residual <= bound`; the claim is looked up by name.
    pub fn new(name: &str, instance: &str, residual: f64, bound: f64) -> Self {
        Self {
            name: name.to_string(),
            claim: claim(name).to_string(),
            instance: instance.to_string(),
            residual,
            bound,
            pass: residual <= bound,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct VerificationReport {
    pub records: Vec<CheckRecord>,
}

impl VerificationReport {
    pub fn push(&mut self, record: CheckRecord) {
        self.records.push(record);
    }

    pub fn extend(&mut self, records: impl IntoIterator<Item = CheckRecord>) {
        self.records.extend(records);
    }

    pub fn all_pass(&self) -> bool {
        self.records.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.records.iter().filter(|r| !r.pass)
    }

    pub fn named<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a CheckRecord> + 'a {
        self.records.iter().filter(move |r| r.name == name)
    }

    pub fn max_residual(&self, name: &str) -> f64 {
        self.named(name).map(|r| r.residual).fold(0.0, f64::max)
    }

    /// Summary per check name plus every failing record, floats rounded to
    /// 12 significant digits.
    pub fn to_json(&self) -> Value {
        let mut checks: BTreeMap<&str, (usize, usize, f64, f64)> = BTreeMap::new();
        for r in &self.records {
            let e = checks.entry(&r.name).or_insert((0, 0, 0.0, 0.0));
            e.0 += 1;
            if !r.pass {
                e.1 += 1;
            }
            e.2 = nan_max(e.2, r.residual);
            e.3 = nan_max(e.3, if r.bound > 0.0 { r.residual / r.bound } else { r.residual });
        }
        let checks: serde_json::Map<String, Value> = checks
            .into_iter()
            .map(|(name, (count, failed, worst, ratio))| {
                (
                    name.to_string(),
                    json!({
                        "claim": claim(name),
                        "count": count,
                        "failed": failed,
                        "max_residual": num(worst),
                        "max_residual_over_bound": num(ratio),
                    }),
                )
            })
            .collect();
        let failures: Vec<Value> = self
            .failures()
            .map(|r| {
                json!({
                    "name": r.name,
                    "claim": r.claim,
                    "instance": r.instance,
                    "residual": num(r.residual),
                    "bound": num(r.bound),
                })
            })
            .collect();
        json!({
            "all_pass": self.all_pass(),
            "checks": checks,
            "failures": failures,
        })
    }
}

fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(round_sig(x))
    } else {
        Value::Null
    }
}

/// Bound multipliers relative to the base tolerance.
const EXACT: f64 = 1.0;
const INEQUALITY: f64 = 10.0;
const CSTAR: f64 = 100.0;

/// Runs the checks for one bundle; regular representations and
/// recovery systems are built once.
#[derive(Clone, Debug)]
pub struct Verifier {
    bundle: Arc<FellBundle>,
    rep: RegularRep,
    jmap: JMap,
    tol: f64,
}

impl Verifier {
    /// Does not validate the bundle; see [`run_suite`].
    pub fn new(bundle: &Arc<FellBundle>, tol: f64) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(FellError::Domain(format!("tolerance must be positive, got {tol}")));
        }
        Ok(Self {
            bundle: Arc::clone(bundle),
            rep: RegularRep::new(bundle)?,
            jmap: JMap::new(bundle)?.with_tol(tol.max(1e-10)),
            tol,
        })
    }

    pub fn rep(&self) -> &RegularRep {
        &self.rep
    }

    pub fn jmap(&self) -> &JMap {
        &self.jmap
    }

    fn record(&self, name: &str, instance: &str, residual: f64, kind: f64, scale: f64) -> CheckRecord {
        CheckRecord::new(name, instance, residual, kind * self.tol * (1.0 + scale))
    }

    fn j_of(&self, f: &Section) -> Result<Section> {
        self.jmap.recover_section(&self.rep.family(f)?)
    }

    pub fn check_norm_reducing(&self, f: &Section, instance: &str) -> Result<CheckRecord> {
        let sup = f.sup_norm();
        let red = self.rep.reduced_norm(f)?;
        Ok(self.record("norm_reducing", instance, (sup - red).max(0.0), INEQUALITY, red))
    }

    /// Largest entrywise deviation of `j(V(f))` from `f`.
    pub fn check_roundtrip(&self, f: &Section, instance: &str) -> Result<CheckRecord> {
        let back = self.j_of(f)?;
        Ok(self.record("roundtrip", instance, back.max_entry_diff(f)?, EXACT, f.sup_norm()))
    }

    pub fn check_adjoint(&self, f: &Section, instance: &str) -> Result<CheckRecord> {
        let g = self.bundle.groupoid();
        let jf = self.j_of(f)?;
        let jfs = self.j_of(&f.involute())?;
        let residual = (0..g.arrow_count())
            .map(|eta| {
                let inv = g.inverse(eta);
                frobenius(&(jfs.value(eta) - self.bundle.invol(inv, jf.value(inv))))
            })
            .fold(0.0, f64::max);
        Ok(self.record("adjoint", instance, residual, EXACT, f.sup_norm()))
    }

    /// All routes to `j(f*g)(γ)` and their largest pairwise disagreement.
    pub fn convolution_routes(&self, f: &Section, g: &Section) -> Result<Vec<(&'static str, Section)>> {
        ensure_same(f.bundle(), g.bundle())?;
        let b = &self.bundle;
        let gr = b.groupoid();
        let (vf, vg) = (self.rep.family(f)?, self.rep.family(g)?);
        let jf = self.jmap.recover_section(&vf)?;
        let jg = self.jmap.recover_section(&vg)?;
        let jfs = self.j_of(&f.involute())?;

        let direct = f.convolve(g)?;
        let operator = self.jmap.recover_section(&vf.product(&vg)?)?;

        let mut fibre_sum = Section::zero(b);
        let mut phi_route = Section::zero(b);
        for gamma in 0..gr.arrow_count() {
            let mut acc = b.zero(gamma);
            for &eta in gr.fiber_r(gr.range(gamma))? {
                let rest = gr.mul(gr.inverse(eta), gamma);
                acc += b.mult(eta, rest, jf.value(eta), jg.value(rest));
            }
            fibre_sum.set(gamma, acc)?;
            let u = gr.range(gamma);
            let x = DualVector(XuVector::from_section(&jfs, u)?);
            let y = WgVector::from_section(&jg, gamma)?;
            phi_route.set(gamma, phi(&x, &y)?)?;
        }
        let mut routes = vec![
            ("direct", direct),
            ("operator_product", operator),
            ("fibre_sum", fibre_sum),
            ("phi", phi_route),
        ];
        if let BundleKind::Crossed { unitaries } = b.kind() {
            let mut twisted = Section::zero(b);
            for gamma in 0..gr.arrow_count() {
                let mut acc = b.zero(gamma);
                for &eta in gr.fiber_r(gr.range(gamma))? {
                    let rest = gr.mul(gr.inverse(eta), gamma);
                    let w = &unitaries[eta];
                    acc += jf.value(eta) * (w * jg.value(rest) * w.adjoint());
                }
                twisted.set(gamma, acc)?;
            }
            routes.push(("alpha_twisted", twisted));
        }
        Ok(routes)
    }

    pub fn check_convolution(&self, f: &Section, g: &Section, instance: &str) -> Result<CheckRecord> {
        let routes = self.convolution_routes(f, g)?;
        let mut residual: f64 = 0.0;
        for i in 0..routes.len() {
            for j in i + 1..routes.len() {
                for (x, y) in routes[i].1.values().iter().zip(routes[j].1.values()) {
                    residual = residual.max(frobenius(&(x - y)));
                }
            }
        }
        Ok(self.record("convolution", instance, residual, EXACT, f.l1_norm() * g.l1_norm()))
    }

    /// `ju_bound` and `ju_identity` for every unit.
    pub fn check_ju_bound(&self, f: &Section, instance: &str) -> Result<Vec<CheckRecord>> {
        let red = self.rep.reduced_norm(f)?;
        let jf = self.j_of(f)?;
        let fsf = f.involute().convolve(f)?;
        let mut out = Vec::new();
        for &u in self.bundle.groupoid().units() {
            let x = XuVector::from_section(&jf, u)?;
            let norm = xu_norm(&x);
            let inst = format!("{instance} u={u}");
            out.push(self.record("ju_bound", &inst, (norm - red).max(0.0), INEQUALITY, red));
            let direct = linalg::opnorm(fsf.value(u));
            out.push(self.record("ju_identity", &inst, (norm * norm - direct).abs(), EXACT, direct));
        }
        Ok(out)
    }

    /// `phi_bound` and `phi_truncation` for one pair of vectors.
    pub fn check_phi_bound(&self, x: &XuVector, y: &WgVector, instance: &str) -> Result<Vec<CheckRecord>> {
        let gamma = y.arrow();
        let dx = DualVector(x.clone());
        let full = phi(&dx, y)?;
        let (nx, ny) = (xu_norm(x), wg_norm(y));
        let lhs = self.bundle.fibernorm(gamma, &full);
        let mut out = vec![self.record("phi_bound", instance, (lhs - nx * ny).max(0.0), INEQUALITY, nx * ny)];

        let arrows = x.arrows().to_vec();
        let mut residual: f64 = 0.0;
        let mut last_bound = f64::INFINITY;
        for k in 0..=arrows.len() {
            let (inside, outside) = arrows.split_at(k);
            let partial = phi(&DualVector(x.restrict(inside)), &y.restrict(inside))?;
            let err = self.bundle.fibernorm(gamma, &(&full - partial));
            let bound = xu_norm(&x.restrict(outside)) * wg_norm(&y.restrict(outside));
            residual = residual.max(err - bound).max(bound - last_bound);
            last_bound = bound;
        }
        residual = residual.max(last_bound);
        out.push(self.record("phi_truncation", instance, residual.max(0.0), INEQUALITY, nx * ny));
        Ok(out)
    }

    pub fn check_cstar(&self, f: &Section, instance: &str) -> Result<CheckRecord> {
        let red = self.rep.reduced_norm(f)?;
        let sq = self.rep.reduced_norm(&f.involute().convolve(f)?)?;
        Ok(self.record("cstar", instance, (sq - red * red).abs(), CSTAR, red * red))
    }

    pub fn check_star_norm(&self, f: &Section, instance: &str) -> Result<CheckRecord> {
        let red = self.rep.reduced_norm(f)?;
        let star = self.rep.reduced_norm(&f.involute())?;
        Ok(self.record("star_norm", instance, (star - red).abs(), INEQUALITY, red))
    }

    pub fn check_linearity(&self, f: &Section, g: &Section, alpha: Complex64, instance: &str) -> Result<CheckRecord> {
        let (vf, vg) = (self.rep.family(f)?, self.rep.family(g)?);
        let combined = self.jmap.recover_section(&vf.scale(alpha).add(&vg)?)?;
        let separate = self
            .jmap
            .recover_section(&vf)?
            .scale(alpha)
            .add(&self.jmap.recover_section(&vg)?)?;
        let scale = alpha.norm() * f.sup_norm() + g.sup_norm();
        Ok(self.record("linearity", instance, combined.max_entry_diff(&separate)?, EXACT, scale))
    }

    /// `f_n = (1 - 2^-n) f` for `n = 1..=steps`; the error must shrink like
    /// `2^-n` and never grow.
    pub fn check_continuity(&self, f: &Section, steps: u32, instance: &str) -> Result<CheckRecord> {
        let size = f.values().iter().map(linalg::max_abs).fold(0.0, f64::max);
        let mut residual: f64 = 0.0;
        let mut last = f64::INFINITY;
        for n in 1..=steps {
            let t = 0.5f64.powi(n as i32);
            let fn_ = f.scale(Complex64::new(1.0 - t, 0.0));
            let err = self.j_of(&fn_)?.max_entry_diff(f)?;
            residual = residual.max((err - t * size).abs()).max(err - last);
            last = err;
        }
        Ok(self.record("continuity", instance, residual.max(0.0), EXACT, size))
    }

    pub fn check_represent_homomorphism(&self, f: &Section, g: &Section, instance: &str) -> Result<CheckRecord> {
        let fg = self.rep.family(&f.convolve(g)?)?;
        let prod = self.rep.family(f)?.product(&self.rep.family(g)?)?;
        let residual = fg
            .blocks()
            .iter()
            .map(|(u, m)| frobenius(&(m - prod.block(*u))))
            .fold(0.0, f64::max);
        Ok(self.record("represent_homomorphism", instance, residual, INEQUALITY, f.l1_norm() * g.l1_norm()))
    }

    pub fn check_represent_star(&self, f: &Section, instance: &str) -> Result<CheckRecord> {
        let vf = self.rep.family(f)?;
        let vs = self.rep.family(&f.involute())?;
        let mut residual: f64 = 0.0;
        for &u in self.bundle.groupoid().units() {
            residual = residual.max(self.rep.p_adjoint_residual(vf.block(u), vs.block(u), u)?);
        }
        Ok(self.record("represent_star", instance, residual, INEQUALITY, f.l1_norm()))
    }

    /// Hilbert-module identities and inequalities on random vectors over
    /// unit `u` and arrow `gamma`.
    pub fn check_module_invariants(
        &self,
        u: usize,
        gamma: usize,
        rng: &mut SeededRng,
        instance: &str,
    ) -> Result<Vec<CheckRecord>> {
        let b = &self.bundle;
        let gr = b.groupoid();
        let mut out = Vec::new();

        // X_u
        let h = XuVector::random(b, u, rng)?;
        let k = XuVector::random(b, u, rng)?;
        let (nh, nk) = (xu_norm(&h), xu_norm(&k));
        let hk = linalg::opnorm(&xu_inner(&h, &k)?);
        out.push(self.record(
            "cauchy_schwarz",
            &format!("{instance} X_{u}"),
            (hk * hk - (nh * nh) * (nk * nk)).max(0.0),
            INEQUALITY,
            (nh * nk).powi(2),
        ));
        let arrows = h.arrows().to_vec();
        let mut residual: f64 = 0.0;
        let mut last = f64::INFINITY;
        for k in 0..=arrows.len() {
            let tail = h.sub(&h.restrict(&arrows[..k]))?;
            let norm = xu_norm(&tail);
            residual = residual.max(norm - last);
            last = norm;
        }
        residual = residual.max(last);
        out.push(self.record("truncation", &format!("{instance} X_{u}"), residual.max(0.0), EXACT, nh));

        // W_γ with u' = r(γ), v = s(γ)
        let ur = gr.range(gamma);
        let inst = format!("{instance} γ={gamma}");
        let (r, s) = b.shape(gamma);
        let f = XuVector::random(b, ur, rng)?;
        let g = XuVector::random(b, ur, rng)?;
        let bb = rng.gaussian_matrix(r, s);
        let cc = rng.gaussian_matrix(r, s);
        let xi = WgVector::random(b, gamma, rng)?;
        let zeta = WgVector::random(b, gamma, rng)?;
        let omega = WgVector::random(b, gamma, rng)?;
        let (nf, ng) = (xu_norm(&f), xu_norm(&g));
        let (nxi, nzeta, nomega) = (wg_norm(&xi), wg_norm(&zeta), wg_norm(&omega));

        let lhs = wg_inner(&psi(&f, gamma, &bb)?, &psi(&g, gamma, &cc)?)?;
        let rhs = b.right_inner(gamma, &bb, &b.left_act(gamma, &xu_inner(&f, &g)?, &cc));
        let scale = nf * ng * linalg::opnorm(&bb) * linalg::opnorm(&cc);
        out.push(self.record("psi_isometry", &inst, frobenius(&(lhs - rhs)), INEQUALITY, scale));

        let (df, dg) = (DualVector(f.clone()), DualVector(g.clone()));
        let lhs = b.right_inner(gamma, &phi(&df, &xi)?, &phi(&dg, &zeta)?);
        let rhs = internal_tensor_inner(&df, &xi, &dg, &zeta)?;
        out.push(self.record("phi_isometry", &inst, frobenius(&(lhs - rhs)), INEQUALITY, nf * ng * nxi * nzeta));

        let lhs = wg_ku_inner(&xi, &zeta)?.apply_wg(&omega)?;
        let rhs = xi.right_act(&wg_inner(&zeta, &omega)?)?;
        out.push(self.record(
            "imprimitivity",
            &inst,
            wg_norm(&lhs.sub(&rhs)?),
            INEQUALITY,
            nxi * nzeta * nomega,
        ));

        let t = RankOne::new(&f, &g)?;
        let v = gr.source(gamma);
        let cv = rng.gaussian_matrix(b.fibers().dim(v), b.fibers().dim(v));
        let linear = wg_norm(&ku_action_on_wg(&t, &xi.right_act(&cv)?)?.sub(&ku_action_on_wg(&t, &xi)?.right_act(&cv)?)?);
        let adjointable = frobenius(
            &(wg_inner(&ku_action_on_wg(&t, &xi)?, &zeta)? - wg_inner(&xi, &ku_action_on_wg(&t.adjoint(), &zeta)?)?),
        );
        out.push(self.record(
            "ku_action",
            &inst,
            linear.max(adjointable),
            INEQUALITY,
            nf * ng * nxi * (nzeta + linalg::opnorm(&cv)),
        ));

        let tensor = internal_tensor_inner(&df, &xi, &df, &xi)?;
        let tensor_norm = linalg::opnorm(&tensor).sqrt();
        out.push(self.record(
            "cross_norm",
            &inst,
            (tensor_norm - nf * nxi).max(0.0),
            INEQUALITY,
            nf * nxi,
        ));
        let positivity = (-linalg::min_hermitian_eigenvalue(&tensor)).max(0.0);
        out.push(self.record("cross_norm", &format!("{inst} positivity"), positivity, INEQUALITY, nf * nf * nxi * nxi));

        let xz = linalg::opnorm(&wg_inner(&xi, &zeta)?);
        out.push(self.record(
            "cauchy_schwarz",
            &format!("{inst} W_γ"),
            (xz * xz - (nxi * nxi) * (nzeta * nzeta)).max(0.0),
            INEQUALITY,
            (nxi * nzeta).powi(2),
        ));

        out.extend(self.check_phi_bound(&f, &xi, &inst)?);
        // the equality case: y in the image of Ψ
        out.extend(self.check_phi_bound(&f, &psi(&f, gamma, &bb)?, &format!("{inst} psi-image"))?);
        Ok(out)
    }

    /// Every single-section check.
    pub fn check_section(&self, f: &Section, instance: &str) -> Result<Vec<CheckRecord>> {
        let mut out = vec![
            self.check_norm_reducing(f, instance)?,
            self.check_roundtrip(f, instance)?,
            self.check_adjoint(f, instance)?,
            self.check_cstar(f, instance)?,
            self.check_star_norm(f, instance)?,
            self.check_represent_star(f, instance)?,
        ];
        out.extend(self.check_ju_bound(f, instance)?);
        Ok(out)
    }

    /// Every check on a pair of sections.
    pub fn check_pair(&self, f: &Section, g: &Section, alpha: Complex64, instance: &str) -> Result<Vec<CheckRecord>> {
        Ok(vec![
            self.check_convolution(f, g, instance)?,
            self.check_represent_homomorphism(f, g, instance)?,
            self.check_linearity(f, g, alpha, instance)?,
        ])
    }
}

/// The unit section followed by an all-ones delta section at each arrow.
pub fn fixture_sections(bundle: &Arc<FellBundle>) -> Result<Vec<(String, Section)>> {
    let mut fixtures = vec![("units".to_string(), Section::units(bundle))];
    for a in 0..bundle.groupoid().arrow_count() {
        let (r, s) = bundle.shape(a);
        let ones = CMat::from_element(r, s, Complex64::new(1.0, 0.0));
        fixtures.push((format!("delta[{a}]"), crate::algebra::delta_section(bundle, a, ones)?));
    }
    Ok(fixtures)
}

/// Number of scaling steps used by the continuity check.
pub const CONTINUITY_STEPS: u32 = 8;

/// Validates `bundle`, then runs every check on fixtures (the unit section
/// and delta sections) and on `num_random` seeded random sections.
pub fn run_suite(bundle: &FellBundle, num_random: usize, seed: u64, tol: f64) -> Result<VerificationReport> {
    let validation = bundle.validate(tol.max(crate::bundle::DEFAULT_TOL))?;
    if !validation.is_empty() {
        return Err(FellError::Validation(validation));
    }
    let bundle = Arc::new(bundle.clone());
    let v = Verifier::new(&bundle, tol)?;
    let g = bundle.groupoid();
    let mut report = VerificationReport::default();

    let units = Section::units(&bundle);
    let fixtures = fixture_sections(&bundle)?;
    for (name, f) in &fixtures {
        report.extend(v.check_section(f, name)?);
        report.extend(v.check_pair(f, &units, Complex64::new(1.0, 0.0), &format!("{name}*units"))?);
    }
    report.push(v.check_continuity(&fixtures[fixtures.len() - 1].1, CONTINUITY_STEPS, &fixtures[fixtures.len() - 1].0)?);

    let mut rng = SeededRng::new(seed);
    let unit_list = g.units().to_vec();
    for i in 0..num_random {
        let inst = format!("random[{i}]");
        let f = Section::random(&bundle, &mut rng);
        let h = Section::random(&bundle, &mut rng);
        let alpha = rng.complex_gaussian();
        report.extend(v.check_section(&f, &inst)?);
        report.extend(v.check_pair(&f, &h, alpha, &inst)?);
        report.push(v.check_continuity(&f, CONTINUITY_STEPS, &inst)?);
        let u = unit_list[i % unit_list.len()];
        let gamma = i % g.arrow_count();
        report.extend(v.check_module_invariants(u, gamma, &mut rng, &inst)?);
    }
    Ok(report)
}
