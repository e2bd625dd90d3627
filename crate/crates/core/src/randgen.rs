//! Seeded random Fell bundles over small groupoids.
//!
//! Each instance draws a groupoid shape from a fixed catalogue (every
//! shape has at most 12 arrows and comes with a homomorphism `c` onto a
//! small group `H`), then builds one of three bundle kinds on it:
//!
//! * `trivial`: matrix fibres of random sizes 1..=3 per unit;
//! * `twist`: the pullback along `c` of a bicharacter cocycle of `H`
//!   (nontrivial only for `H = Z_n x Z_m` with `gcd(n, m) > 1`), times a
//!   random coboundary;
//! * `crossed`: `U_γ = W_{r(γ)} ρ(c(γ)) W_{s(γ)}*` for random unitaries
//!   `W_u`, a projective representation `ρ` of `H` and random phases.
//!
//! Draw order from the [`SeededRng`] stream: shape index, then the
//! kind-specific draws in the order listed in [`random_bundle`].

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::bundle::{make_crossed_product_bundle, make_trivial_bundle, make_twist_bundle, FellBundle};
use crate::error::{FellError, Result};
use crate::groupoid::{
    abelian_table, disjoint_union, make_group_groupoid, make_pair_groupoid, make_transformation_groupoid,
    make_unit_groupoid, product, s3_table, FiniteGroupoid,
};
use crate::linalg::{self, CMat, ONE, ZERO};
use crate::rng::SeededRng;

/// Largest groupoid in the catalogue.
pub const MAX_ARROWS: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InstanceKind {
    Trivial,
    Twist,
    Crossed,
}

impl InstanceKind {
    pub const ALL: [InstanceKind; 3] = [InstanceKind::Trivial, InstanceKind::Twist, InstanceKind::Crossed];

    pub fn name(self) -> &'static str {
        match self {
            InstanceKind::Trivial => "trivial",
            InstanceKind::Twist => "twist",
            InstanceKind::Crossed => "crossed",
        }
    }
}

impl fmt::Display for InstanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InstanceKind {
    type Err = FellError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trivial" => Ok(InstanceKind::Trivial),
            "twist" => Ok(InstanceKind::Twist),
            "crossed" => Ok(InstanceKind::Crossed),
            other => Err(FellError::Domain(format!(
                "unknown instance kind {other:?} (expected trivial, twist or crossed)"
            ))),
        }
    }
}

/// The target group of the shape homomorphism.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Group {
    /// `Z_n x Z_m`, element `(a, b)` at index `a * m + b`.
    Abelian(usize, usize),
    /// `S_3`, element `r^a s^b` at index `2a + b`.
    S3,
}

impl Group {
    pub fn order(self) -> usize {
        match self {
            Group::Abelian(n, m) => n * m,
            Group::S3 => 6,
        }
    }

    pub fn table(self) -> Vec<Vec<usize>> {
        match self {
            Group::Abelian(n, m) => abelian_table(n, m),
            Group::S3 => s3_table(),
        }
    }

    fn name(self) -> String {
        match self {
            Group::Abelian(1, 1) => "1".into(),
            Group::Abelian(n, 1) => format!("Z{n}"),
            Group::Abelian(n, m) => format!("Z{n}xZ{m}"),
            Group::S3 => "S3".into(),
        }
    }
}

const TRIVIAL: Group = Group::Abelian(1, 1);

#[derive(Clone, Copy, Debug)]
enum Action {
    /// `Z_n` rotating `n` points.
    Rotation(usize),
    /// `Z_2` swapping `(0 1)(2 3)`.
    DoubleSwap,
    /// `Z_4` acting on 2 points through parity.
    Parity4,
    /// `Z_2 x Z_2` on 2 points, first factor swapping.
    KleinOnTwo,
    /// `Z_2 x Z_2` on 3 points, first factor swapping 0 and 1.
    KleinOnThree,
    /// `S_3` on 2 points through the sign.
    SignOnTwo,
    /// `Z_3` rotating 0, 1, 2 and fixing 3.
    RotationFixing,
    /// `Z_2` swapping 0 and 1, fixing 2.
    SwapFixing,
}

impl Action {
    fn group(self) -> Group {
        match self {
            Action::Rotation(n) => Group::Abelian(n, 1),
            Action::DoubleSwap | Action::SwapFixing => Group::Abelian(2, 1),
            Action::Parity4 => Group::Abelian(4, 1),
            Action::KleinOnTwo | Action::KleinOnThree => Group::Abelian(2, 2),
            Action::SignOnTwo => Group::S3,
            Action::RotationFixing => Group::Abelian(3, 1),
        }
    }

    fn points(self) -> usize {
        match self {
            Action::Rotation(n) => n,
            Action::DoubleSwap | Action::RotationFixing => 4,
            Action::Parity4 | Action::KleinOnTwo | Action::SignOnTwo => 2,
            Action::KleinOnThree | Action::SwapFixing => 3,
        }
    }

    fn image(self, g: usize, x: usize) -> usize {
        match self {
            Action::Rotation(n) => (x + g) % n,
            Action::DoubleSwap => x ^ g,
            Action::Parity4 => (x + g) % 2,
            Action::KleinOnTwo => (x + g / 2) % 2,
            Action::KleinOnThree | Action::SwapFixing => {
                let flip = if matches!(self, Action::KleinOnThree) { g / 2 } else { g };
                if x < 2 {
                    x ^ flip
                } else {
                    x
                }
            }
            Action::SignOnTwo => (x + g % 2) % 2,
            Action::RotationFixing => {
                if x < 3 {
                    (x + g) % 3
                } else {
                    x
                }
            }
        }
    }

    fn name(self) -> String {
        let what = match self {
            Action::Rotation(n) => format!("rotation{n}"),
            Action::DoubleSwap => "double-swap".into(),
            Action::Parity4 => "parity".into(),
            Action::KleinOnTwo => "klein-on-2".into(),
            Action::KleinOnThree => "klein-on-3".into(),
            Action::SignOnTwo => "sign-on-2".into(),
            Action::RotationFixing => "rotation-fixing".into(),
            Action::SwapFixing => "swap-fixing".into(),
        };
        format!("action[{what}]")
    }
}

/// One entry of the groupoid catalogue.
#[derive(Clone, Copy, Debug)]
enum ShapeSpec {
    Group(Group),
    Pair(usize),
    PairTimes(usize, Group),
    Action(Action),
    UnionPair(Group, usize),
    UnionUnits(Group, usize),
}

const CATALOGUE: [ShapeSpec; 30] = [
    ShapeSpec::Group(TRIVIAL),
    ShapeSpec::Group(Group::Abelian(2, 1)),
    ShapeSpec::Group(Group::Abelian(3, 1)),
    ShapeSpec::Group(Group::Abelian(4, 1)),
    ShapeSpec::Group(Group::Abelian(5, 1)),
    ShapeSpec::Group(Group::Abelian(6, 1)),
    ShapeSpec::Group(Group::Abelian(2, 2)),
    ShapeSpec::Group(Group::Abelian(2, 4)),
    ShapeSpec::Group(Group::Abelian(3, 3)),
    ShapeSpec::Group(Group::Abelian(2, 6)),
    ShapeSpec::Group(Group::S3),
    ShapeSpec::Pair(2),
    ShapeSpec::Pair(3),
    ShapeSpec::PairTimes(2, Group::Abelian(2, 1)),
    ShapeSpec::PairTimes(2, Group::Abelian(3, 1)),
    ShapeSpec::Action(Action::Rotation(2)),
    ShapeSpec::Action(Action::Rotation(3)),
    ShapeSpec::Action(Action::DoubleSwap),
    ShapeSpec::Action(Action::Parity4),
    ShapeSpec::Action(Action::KleinOnTwo),
    ShapeSpec::Action(Action::KleinOnThree),
    ShapeSpec::Action(Action::SignOnTwo),
    ShapeSpec::Action(Action::RotationFixing),
    ShapeSpec::Action(Action::SwapFixing),
    ShapeSpec::UnionPair(Group::Abelian(2, 1), 2),
    ShapeSpec::UnionPair(Group::Abelian(2, 2), 2),
    ShapeSpec::UnionPair(Group::S3, 2),
    ShapeSpec::UnionPair(Group::Abelian(3, 1), 3),
    ShapeSpec::UnionUnits(Group::Abelian(3, 1), 1),
    ShapeSpec::UnionUnits(Group::Abelian(2, 2), 2),
];

impl ShapeSpec {
    fn arrows(self) -> usize {
        match self {
            ShapeSpec::Group(h) => h.order(),
            ShapeSpec::Pair(n) => n * n,
            ShapeSpec::PairTimes(n, h) => n * n * h.order(),
            ShapeSpec::Action(a) => a.points() * a.group().order(),
            ShapeSpec::UnionPair(h, n) => h.order() + n * n,
            ShapeSpec::UnionUnits(h, k) => h.order() + k,
        }
    }

    fn build(self) -> Result<Shape> {
        let (name, groupoid, group, hom) = match self {
            ShapeSpec::Group(h) => {
                let g = make_group_groupoid(&h.table())?;
                (h.name(), g, h, (0..h.order()).collect())
            }
            ShapeSpec::Pair(n) => (format!("pair{n}"), make_pair_groupoid(n)?, TRIVIAL, vec![0; n * n]),
            ShapeSpec::PairTimes(n, h) => {
                let g = product(&make_pair_groupoid(n)?, &make_group_groupoid(&h.table())?)?;
                let hom = (0..g.arrow_count()).map(|a| a % h.order()).collect();
                (format!("pair{n}x{}", h.name()), g, h, hom)
            }
            ShapeSpec::Action(a) => {
                let h = a.group();
                let action: Vec<Vec<usize>> =
                    (0..h.order()).map(|g| (0..a.points()).map(|x| a.image(g, x)).collect()).collect();
                let g = make_transformation_groupoid(a.points(), &h.table(), &action)?;
                let hom = (0..g.arrow_count()).map(|x| x % h.order()).collect();
                (a.name(), g, h, hom)
            }
            ShapeSpec::UnionPair(h, n) => {
                let g = disjoint_union(&make_group_groupoid(&h.table())?, &make_pair_groupoid(n)?)?;
                let mut hom: Vec<usize> = (0..h.order()).collect();
                hom.resize(g.arrow_count(), 0);
                (format!("{}+pair{n}", h.name()), g, h, hom)
            }
            ShapeSpec::UnionUnits(h, k) => {
                let g = disjoint_union(&make_group_groupoid(&h.table())?, &make_unit_groupoid(k)?)?;
                let mut hom: Vec<usize> = (0..h.order()).collect();
                hom.resize(g.arrow_count(), 0);
                (format!("{}+units{k}", h.name()), g, h, hom)
            }
        };
        Ok(Shape {
            name,
            groupoid,
            group,
            hom,
        })
    }
}

/// A groupoid together with a homomorphism onto a small group.
#[derive(Clone, Debug)]
pub struct Shape {
    pub name: String,
    pub groupoid: FiniteGroupoid,
    pub group: Group,
    /// `hom[γ]` is the group element `c(γ)`.
    pub hom: Vec<usize>,
}

/// Every catalogue shape with at most `max_arrows` arrows.
pub fn shapes(max_arrows: usize) -> Result<Vec<Shape>> {
    CATALOGUE
        .iter()
        .filter(|s| s.arrows() <= max_arrows)
        .map(|s| s.build())
        .collect()
}

#[derive(Clone, Debug)]
pub struct RandomInstance {
    /// Human-readable description, e.g. `twist on Z2xZ2`.
    pub name: String,
    pub kind: InstanceKind,
    pub bundle: FellBundle,
}

fn root_of_unity(k: usize, n: usize) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * (k % n.max(1)) as f64 / n.max(1) as f64)
}

/// Bicharacter `β((a1, b1), (a2, b2)) = ω^(b1 a2)` with `ω` a `gcd(n, m)`-th
/// root of unity; `t` selects the root.
fn bicharacter(h: Group, t: usize) -> impl Fn(usize, usize) -> Complex64 {
    let (n, m) = match h {
        Group::Abelian(n, m) => (n, m),
        Group::S3 => (1, 1),
    };
    let g = gcd(n, m);
    move |x, y| {
        let b1 = x % m;
        let a2 = y / m;
        root_of_unity(t * b1 * a2, g)
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// A projective unitary representation of `h` (Ad of it is a genuine
/// action), as matrices indexed by group element.
fn representation(h: Group, rng: &mut SeededRng) -> Vec<CMat> {
    match h {
        Group::Abelian(2, 2) if rng.below(2) == 0 => {
            // Pauli: (a, b) ↦ X^a Z^b
            let x = CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
            let z = CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]);
            (0..4)
                .map(|e| {
                    let mut m = linalg::identity(2);
                    if e / 2 == 1 {
                        m = &m * &x;
                    }
                    if e % 2 == 1 {
                        m = &m * &z;
                    }
                    m
                })
                .collect()
        }
        Group::Abelian(n, m) => {
            let d = 1 + rng.below(3);
            let ks: Vec<(usize, usize)> = (0..d).map(|_| (rng.below(n), rng.below(m))).collect();
            (0..n * m)
                .map(|e| {
                    let (a, b) = (e / m, e % m);
                    let diag: Vec<Complex64> = ks
                        .iter()
                        .map(|&(k, l)| root_of_unity(a * k, n) * root_of_unity(b * l, m))
                        .collect();
                    CMat::from_diagonal(&linalg::CVec::from_vec(diag))
                })
                .collect()
        }
        Group::S3 => {
            let (r, s) = match rng.below(3) {
                0 => {
                    // permutation representation on 3 points
                    let r = CMat::from_fn(3, 3, |i, j| if i == (j + 1) % 3 { ONE } else { ZERO });
                    let s = CMat::from_fn(3, 3, |i, j| if (i + j) % 3 == 0 { ONE } else { ZERO });
                    (r, s)
                }
                1 => {
                    let (c, sn) = ((2.0 * PI / 3.0).cos(), (2.0 * PI / 3.0).sin());
                    let r = CMat::from_row_slice(
                        2,
                        2,
                        &[linalg::c(c, 0.0), linalg::c(-sn, 0.0), linalg::c(sn, 0.0), linalg::c(c, 0.0)],
                    );
                    let s = CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]);
                    (r, s)
                }
                _ => (linalg::identity(1), CMat::from_element(1, 1, -ONE)),
            };
            (0..6)
                .map(|e| {
                    let (a, b) = (e / 2, e % 2);
                    let mut m = linalg::identity(r.nrows());
                    for _ in 0..a {
                        m = &m * &r;
                    }
                    if b == 1 {
                        m = &m * &s;
                    }
                    m
                })
                .collect()
        }
    }
}

/// Builds a random bundle of the given kind on `shape`.
///
/// Draws, in order: trivial: one size per unit (ascending unit index);
/// twist: the bicharacter selector, then one phase per non-unit arrow;
/// crossed: the representation choice and exponents, one unitary per
/// unit, then one phase per non-unit arrow.
pub fn random_bundle_on(shape: &Shape, kind: InstanceKind, rng: &mut SeededRng) -> Result<FellBundle> {
    let g = &shape.groupoid;
    let n = g.arrow_count();
    match kind {
        InstanceKind::Trivial => {
            let dims: BTreeMap<usize, usize> = g.units().iter().map(|&u| (u, 1 + rng.below(3))).collect();
            make_trivial_bundle(g, &dims)
        }
        InstanceKind::Twist => {
            let t = match shape.group {
                Group::Abelian(a, b) => rng.below(gcd(a, b)),
                Group::S3 => 0,
            };
            let beta = bicharacter(shape.group, t);
            let phase: Vec<Complex64> = (0..n).map(|a| if g.is_unit(a) { ONE } else { rng.phase() }).collect();
            let mut sigma = vec![ONE; n * n];
            for [a, b, ab] in g.composition_triples() {
                sigma[a * n + b] = beta(shape.hom[a], shape.hom[b]) * phase[a] * phase[b] / phase[ab];
            }
            make_twist_bundle(g, sigma)
        }
        InstanceKind::Crossed => {
            let rho = representation(shape.group, rng);
            let m = rho[0].nrows();
            let mut w = vec![CMat::zeros(0, 0); n];
            for &u in g.units() {
                w[u] = rng.unitary(m);
            }
            let unitaries: Vec<CMat> = (0..n)
                .map(|a| {
                    let base = &w[g.range(a)] * &rho[shape.hom[a]] * w[g.source(a)].adjoint();
                    if g.is_unit(a) {
                        linalg::identity(m)
                    } else {
                        base * rng.phase()
                    }
                })
                .collect();
            let dims = g.units().iter().map(|&u| (u, m)).collect();
            make_crossed_product_bundle(g, &dims, unitaries)
        }
    }
}

/// Draws a shape with at most `max_arrows` arrows, then a bundle on it.
pub fn random_bundle(kind: InstanceKind, max_arrows: usize, rng: &mut SeededRng) -> Result<RandomInstance> {
    let candidates: Vec<ShapeSpec> = CATALOGUE.iter().copied().filter(|s| s.arrows() <= max_arrows).collect();
    if candidates.is_empty() {
        return Err(FellError::Domain(format!("no groupoid shape with at most {max_arrows} arrows")));
    }
    let shape = candidates[rng.below(candidates.len())].build()?;
    let bundle = random_bundle_on(&shape, kind, rng)?;
    Ok(RandomInstance {
        name: format!("{kind} on {}", shape.name),
        kind,
        bundle,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalogue_sizes_are_accurate() {
        for spec in CATALOGUE {
            let shape = spec.build().unwrap();
            assert_eq!(shape.groupoid.arrow_count(), spec.arrows(), "{}", shape.name);
            assert!(spec.arrows() <= MAX_ARROWS);
            // hom is a groupoid homomorphism
            let table = shape.group.table();
            for [a, b, ab] in shape.groupoid.composition_triples() {
                assert_eq!(table[shape.hom[a]][shape.hom[b]], shape.hom[ab], "{}", shape.name);
            }
        }
    }

    #[test]
    fn every_shape_and_kind_builds() {
        let mut rng = SeededRng::new(17);
        for shape in shapes(MAX_ARROWS).unwrap() {
            for kind in InstanceKind::ALL {
                let b = random_bundle_on(&shape, kind, &mut rng).unwrap();
                assert!(b.validate(1e-10).unwrap().is_empty(), "{kind} on {}", shape.name);
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = random_bundle(InstanceKind::Crossed, 12, &mut SeededRng::new(5)).unwrap();
        let b = random_bundle(InstanceKind::Crossed, 12, &mut SeededRng::new(5)).unwrap();
        assert_eq!(a.bundle, b.bundle);
        assert_eq!(a.name, b.name);
    }

    #[test]
    fn size_limit_is_respected() {
        let mut rng = SeededRng::new(1);
        for _ in 0..20 {
            let inst = random_bundle(InstanceKind::Trivial, 4, &mut rng).unwrap();
            assert!(inst.bundle.groupoid().arrow_count() <= 4);
        }
        assert!(random_bundle(InstanceKind::Trivial, 0, &mut rng).is_err());
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("twist".parse::<InstanceKind>().unwrap(), InstanceKind::Twist);
        assert!("other".parse::<InstanceKind>().is_err());
    }
}
