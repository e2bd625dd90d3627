//! End-to-end scenarios for twisted groupoid algebras and crossed products,
//! with the standard example instances.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::algebra::Section;
use crate::bundle::{make_crossed_product_bundle, make_trivial_bundle, make_twist_bundle, FellBundle};
use crate::error::Result;
use crate::groupoid::{abelian_table, cyclic_table, make_group_groupoid, make_transformation_groupoid, FiniteGroupoid};
use crate::jmap::{fixture_sections, run_suite, CheckRecord, VerificationReport, Verifier};
use crate::linalg::{self, c, frobenius, CMat, ONE, ZERO};
use crate::regrep::RegularRep;
use crate::rng::SeededRng;

/// Fixtures followed by `num_random` seeded random sections.
fn samples(bundle: &Arc<FellBundle>, num_random: usize, seed: u64) -> Result<Vec<(String, Section)>> {
    let mut out = fixture_sections(bundle)?;
    let mut rng = SeededRng::new(seed);
    out.extend((0..num_random).map(|i| (format!("random[{i}]"), Section::random(bundle, &mut rng))));
    Ok(out)
}

/// `trivial_agreement` records comparing reduced norms of the same values
/// in `bundle` and in `plain`.
fn compare_norms(
    bundle: &Arc<FellBundle>,
    plain: &Arc<FellBundle>,
    num_random: usize,
    seed: u64,
    tol: f64,
) -> Result<Vec<CheckRecord>> {
    let (rep, plain_rep) = (RegularRep::new(bundle)?, RegularRep::new(plain)?);
    samples(bundle, num_random, seed)?
        .into_iter()
        .map(|(name, f)| {
            let ours = rep.reduced_norm(&f)?;
            let theirs = plain_rep.reduced_norm(&Section::new(plain, f.values().to_vec())?)?;
            Ok(CheckRecord::new("trivial_agreement", &name, (ours - theirs).abs(), tol * (1.0 + theirs)))
        })
        .collect()
}

/// Runs the full suite on the twist bundle of `sigma`; when `sigma ≡ 1` on
/// composable pairs, also compares reduced norms with the trivial line
/// bundle.
pub fn twist_scenario(
    g: &FiniteGroupoid,
    sigma: Vec<Complex64>,
    num_random: usize,
    seed: u64,
    tol: f64,
) -> Result<VerificationReport> {
    let n = g.arrow_count();
    let untwisted = g
        .composition_triples()
        .iter()
        .all(|&[a, b, _]| (sigma[a * n + b] - ONE).norm() <= 1e-12);
    let bundle = Arc::new(make_twist_bundle(g, sigma)?);
    let mut report = run_suite(&bundle, num_random, seed, tol)?;
    if untwisted {
        let dims = g.units().iter().map(|&u| (u, 1)).collect();
        let plain = Arc::new(make_trivial_bundle(g, &dims)?);
        report.extend(compare_norms(&bundle, &plain, num_random, seed, tol)?);
    }
    Ok(report)
}

/// Runs the full suite on the crossed-product bundle of the action
/// `Ad(unitaries[γ])`, checks the α-twisted convolution sum against direct
/// convolution, and for the trivial action compares reduced norms with the
/// trivial matrix bundle.
pub fn crossed_scenario(
    g: &FiniteGroupoid,
    fiberdim: &BTreeMap<usize, usize>,
    unitaries: Vec<CMat>,
    num_random: usize,
    seed: u64,
    tol: f64,
) -> Result<VerificationReport> {
    let trivial_action = unitaries
        .iter()
        .all(|u| frobenius(&(u - linalg::identity(u.nrows()))) <= 1e-12);
    let bundle = Arc::new(make_crossed_product_bundle(g, fiberdim, unitaries)?);
    let mut report = run_suite(&bundle, num_random, seed, tol)?;

    let v = Verifier::new(&bundle, tol)?;
    let sections = samples(&bundle, num_random, seed)?;
    let units = Section::units(&bundle);
    for (i, (name, f)) in sections.iter().enumerate() {
        let other = if i + 1 < sections.len() { &sections[i + 1].1 } else { &units };
        let routes = v.convolution_routes(f, other)?;
        let lookup = |key: &str| routes.iter().find(|(k, _)| *k == key).map(|(_, s)| s);
        let (Some(direct), Some(twisted)) = (lookup("direct"), lookup("alpha_twisted")) else {
            unreachable!("crossed bundles always have an α-twisted route")
        };
        let residual = direct.max_entry_diff(twisted)?;
        report.push(CheckRecord::new("alpha_route", name, residual, tol * (1.0 + f.l1_norm() * other.l1_norm())));
    }
    if trivial_action {
        let plain = Arc::new(make_trivial_bundle(g, fiberdim)?);
        report.extend(compare_norms(&bundle, &plain, num_random, seed, tol)?);
    }
    Ok(report)
}

/// The Klein four-group `Z_2 x Z_2` with the cocycle
/// `σ((a,b),(c,d)) = (-1)^(bc)`, realised by `(a,b) ↦ X^a Z^b`.
pub fn klein_four_twist() -> Result<(FiniteGroupoid, Vec<Complex64>)> {
    let g = make_group_groupoid(&abelian_table(2, 2))?;
    let sigma = (0..16)
        .map(|k| {
            let (x, y) = (k / 4, k % 4);
            if (x % 2) * (y / 2) == 1 {
                c(-1.0, 0.0)
            } else {
                ONE
            }
        })
        .collect();
    Ok((g, sigma))
}

/// `Z_2` acting on `M_2` by conjugation with the swap matrix, which
/// exchanges the two diagonal entries.
pub fn z2_swap_action() -> Result<(FiniteGroupoid, BTreeMap<usize, usize>, Vec<CMat>)> {
    let g = make_group_groupoid(&cyclic_table(2))?;
    let swap = CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
    Ok((g, BTreeMap::from([(0, 2)]), vec![linalg::identity(2), swap]))
}

/// Transformation groupoid of `Z_3` rotating three points, acting on `M_2`
/// fibres through `g ↦ diag(1, ω^g)` with `ω = e^{2πi/3}`.
pub fn three_cycle_action() -> Result<(FiniteGroupoid, BTreeMap<usize, usize>, Vec<CMat>)> {
    let action: Vec<Vec<usize>> = (0..3).map(|g| (0..3).map(|x| (x + g) % 3).collect()).collect();
    let g = make_transformation_groupoid(3, &cyclic_table(3), &action)?;
    let dims = g.units().iter().map(|&u| (u, 2)).collect();
    let unitaries = (0..g.arrow_count())
        .map(|a| {
            let phase = Complex64::from_polar(1.0, 2.0 * PI * (a % 3) as f64 / 3.0);
            CMat::from_diagonal(&linalg::CVec::from_vec(vec![ONE, phase]))
        })
        .collect();
    Ok((g, dims, unitaries))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::unit_cocycle;
    use crate::groupoid::make_pair_groupoid;

    #[test]
    fn untwisted_cyclic_group_matches_trivial_bundle() {
        let g = make_group_groupoid(&cyclic_table(3)).unwrap();
        let report = twist_scenario(&g, unit_cocycle(&g), 3, 1, 1e-10).unwrap();
        assert!(report.all_pass());
        assert_eq!(report.named("trivial_agreement").count(), 1 + 3 + 3);
    }

    #[test]
    fn klein_twist_passes_without_trivial_comparison() {
        let (g, sigma) = klein_four_twist().unwrap();
        let report = twist_scenario(&g, sigma, 2, 2, 1e-10).unwrap();
        assert!(report.all_pass());
        assert_eq!(report.named("trivial_agreement").count(), 0);
    }

    #[test]
    fn swap_and_three_cycle_actions_pass() {
        for (g, dims, u) in [z2_swap_action().unwrap(), three_cycle_action().unwrap()] {
            let report = crossed_scenario(&g, &dims, u, 2, 5, 1e-10).unwrap();
            let failed: Vec<_> = report.failures().collect();
            assert!(failed.is_empty(), "{failed:#?}");
            assert!(report.named("alpha_route").count() > 0);
        }
    }

    #[test]
    fn trivial_action_matches_trivial_bundle() {
        let g = make_pair_groupoid(2).unwrap();
        let dims: BTreeMap<usize, usize> = g.units().iter().map(|&u| (u, 2)).collect();
        let u = vec![linalg::identity(2); g.arrow_count()];
        let report = crossed_scenario(&g, &dims, u, 2, 3, 1e-10).unwrap();
        assert!(report.all_pass());
        assert!(report.named("trivial_agreement").count() > 0);
    }
}
