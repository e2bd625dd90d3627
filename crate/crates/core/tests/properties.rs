use std::sync::Arc;

use fell_core::algebra::Section;
use fell_core::bundle::FellBundle;
use fell_core::randgen::{random_bundle, InstanceKind, MAX_ARROWS};
use fell_core::regrep::RegularRep;
use fell_core::rng::SeededRng;
use proptest::prelude::*;

fn kind() -> impl Strategy<Value = InstanceKind> {
    prop_oneof![
        Just(InstanceKind::Trivial),
        Just(InstanceKind::Twist),
        Just(InstanceKind::Crossed),
    ]
}

fn instance(kind: InstanceKind, seed: u64) -> (Arc<FellBundle>, SeededRng) {
    let mut rng = SeededRng::new(seed);
    let inst = random_bundle(kind, MAX_ARROWS, &mut rng).unwrap();
    (Arc::new(inst.bundle), rng)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn generated_bundles_validate(kind in kind(), seed in any::<u64>()) {
        let (b, _) = instance(kind, seed);
        prop_assert!(b.groupoid().validate().is_empty());
        let report = b.validate(1e-10).unwrap();
        prop_assert!(report.is_empty(), "{report}");
        prop_assert!(b.groupoid().arrow_count() <= MAX_ARROWS);
        prop_assert!(b.groupoid().units().iter().all(|&u| (1..=3).contains(&b.fibers().dim(u))));
    }

    #[test]
    fn convolution_is_associative_and_involution_antimultiplicative(kind in kind(), seed in any::<u64>()) {
        let (b, mut rng) = instance(kind, seed);
        let f = Section::random(&b, &mut rng);
        let g = Section::random(&b, &mut rng);
        let h = Section::random(&b, &mut rng);
        let scale = 1.0 + f.l1_norm() * g.l1_norm() * h.l1_norm();
        let left = f.convolve(&g).unwrap().convolve(&h).unwrap();
        let right = f.convolve(&g.convolve(&h).unwrap()).unwrap();
        prop_assert!(left.max_entry_diff(&right).unwrap() <= 1e-12 * scale);
        let lhs = f.convolve(&g).unwrap().involute();
        let rhs = g.involute().convolve(&f.involute()).unwrap();
        prop_assert!(lhs.max_entry_diff(&rhs).unwrap() <= 1e-12 * scale);
        prop_assert!(f.involute().involute().max_entry_diff(&f).unwrap() <= 1e-13 * (1.0 + f.sup_norm()));
    }

    #[test]
    fn reduced_norm_sits_between_sup_and_l1(kind in kind(), seed in any::<u64>()) {
        let (b, mut rng) = instance(kind, seed);
        let rep = RegularRep::new(&b).unwrap();
        let f = Section::random(&b, &mut rng);
        let r = rep.reduced_norm(&f).unwrap();
        prop_assert!(f.sup_norm() <= r + 1e-9);
        prop_assert!(r <= f.l1_norm() + 1e-9);
    }

    #[test]
    fn reduced_norm_is_a_cstar_norm(kind in kind(), seed in any::<u64>()) {
        let (b, mut rng) = instance(kind, seed);
        let rep = RegularRep::new(&b).unwrap();
        let f = Section::random(&b, &mut rng);
        let g = Section::random(&b, &mut rng);
        let (nf, ng) = (rep.reduced_norm(&f).unwrap(), rep.reduced_norm(&g).unwrap());
        let ff = rep.reduced_norm(&f.involute().convolve(&f).unwrap()).unwrap();
        prop_assert!((ff - nf * nf).abs() <= 1e-8 * nf * nf);
        prop_assert!((rep.reduced_norm(&f.involute()).unwrap() - nf).abs() <= 1e-9 * (1.0 + nf));
        prop_assert!(rep.reduced_norm(&f.add(&g).unwrap()).unwrap() <= nf + ng + 1e-9);
        prop_assert!(rep.reduced_norm(&f.convolve(&g).unwrap()).unwrap() <= nf * ng * (1.0 + 1e-9) + 1e-9);
    }

    #[test]
    fn unit_section_has_norm_one(kind in kind(), seed in any::<u64>()) {
        let (b, _) = instance(kind, seed);
        let r = RegularRep::new(&b).unwrap().reduced_norm(&Section::units(&b)).unwrap();
        prop_assert!((r - 1.0).abs() < 1e-10);
    }
}
