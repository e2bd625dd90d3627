//! Reduced norms against closed-form or independently assembled
//! representations.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use fell_core::algebra::{delta_section, Section};
use fell_core::bundle::{make_crossed_product_bundle, make_trivial_bundle, make_twist_bundle, FellBundle};
use fell_core::groupoid::{
    abelian_table, cyclic_table, make_group_groupoid, make_pair_groupoid, make_transformation_groupoid,
    make_unit_groupoid, s3_table,
};
use fell_core::regrep::reduced_norm;
use fell_core::rng::SeededRng;
use fell_core::scenarios::{klein_four_twist, z2_swap_action};
use nalgebra::DMatrix;
use num_complex::Complex64;

type M = DMatrix<Complex64>;

fn sigma_max(m: &M) -> f64 {
    m.singular_values().iter().cloned().fold(0.0, f64::max)
}

fn scalar_dims(units: &[usize]) -> BTreeMap<usize, usize> {
    units.iter().map(|&u| (u, 1)).collect()
}

fn scalar(z: Complex64) -> M {
    M::from_element(1, 1, z)
}

fn line_section(b: &Arc<FellBundle>, coeffs: &[Complex64]) -> Section {
    Section::new(b, coeffs.iter().map(|&z| scalar(z)).collect()).unwrap()
}

fn gaussians(rng: &mut SeededRng, n: usize) -> Vec<Complex64> {
    (0..n).map(|_| rng.complex_gaussian()).collect()
}

/// `max_χ |Σ_x f(x) χ(x)|` over the characters of `Z_n x Z_m`.
fn character_max(n: usize, m: usize, f: &[Complex64]) -> f64 {
    let mut best: f64 = 0.0;
    for j in 0..n {
        for k in 0..m {
            let s: Complex64 = f
                .iter()
                .enumerate()
                .map(|(x, &c)| {
                    let (a, b) = (x / m, x % m);
                    let t = 2.0 * PI * (j as f64 * a as f64 / n as f64 + k as f64 * b as f64 / m as f64);
                    c * Complex64::from_polar(1.0, t)
                })
                .sum();
            best = best.max(s.norm());
        }
    }
    best
}

#[test]
fn abelian_group_algebras_match_character_tables() {
    let mut rng = SeededRng::new(101);
    for (n, m) in [(1, 1), (2, 1), (3, 1), (5, 1), (2, 2), (2, 3), (3, 3), (4, 2)] {
        let g = make_group_groupoid(&abelian_table(n, m)).unwrap();
        let b = Arc::new(make_trivial_bundle(&g, &scalar_dims(g.units())).unwrap());
        for _ in 0..5 {
            let f = gaussians(&mut rng, n * m);
            let got = reduced_norm(&line_section(&b, &f)).unwrap();
            let want = character_max(n, m, &f);
            assert!((got - want).abs() <= 1e-9 * (1.0 + want), "Z{n}xZ{m}: {got} vs {want}");
        }
    }
}

#[test]
fn z2_all_ones_has_norm_two() {
    let g = make_group_groupoid(&cyclic_table(2)).unwrap();
    let b = Arc::new(make_trivial_bundle(&g, &scalar_dims(g.units())).unwrap());
    let one = Complex64::new(1.0, 0.0);
    let f = line_section(&b, &[one, one]);
    assert!((reduced_norm(&f).unwrap() - 2.0).abs() < 1e-12);
    assert!((f.sup_norm() - 1.0).abs() < 1e-15);
}

/// The three irreducible representations of `S_3`, with `r^a s^b` at
/// index `2a + b`.
fn s3_irreps() -> Vec<Vec<M>> {
    let (c, s) = ((2.0 * PI / 3.0).cos(), (2.0 * PI / 3.0).sin());
    let rot = M::from_row_slice(2, 2, &[c, -s, s, c].map(|x| Complex64::new(x, 0.0)));
    let refl = M::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0].map(|x| Complex64::new(x, 0.0)));
    let standard: Vec<M> = (0..6)
        .map(|x| {
            let (a, b) = (x / 2, x % 2);
            rot.pow(a as u32) * refl.pow(b as u32)
        })
        .collect();
    let trivial = vec![scalar(Complex64::new(1.0, 0.0)); 6];
    let sign = (0..6).map(|x| scalar(Complex64::new(if x % 2 == 1 { -1.0 } else { 1.0 }, 0.0))).collect();
    vec![trivial, sign, standard]
}

#[test]
fn s3_group_algebra_matches_irreducible_representations() {
    let table = s3_table();
    let irreps = s3_irreps();
    for rho in &irreps {
        for x in 0..6 {
            for y in 0..6 {
                let err = (&rho[x] * &rho[y] - &rho[table[x][y]]).norm();
                assert!(err < 1e-12, "representation table mismatch at ({x},{y})");
            }
        }
    }
    let g = make_group_groupoid(&table).unwrap();
    let b = Arc::new(make_trivial_bundle(&g, &scalar_dims(g.units())).unwrap());
    let mut rng = SeededRng::new(7);
    for _ in 0..6 {
        let f = gaussians(&mut rng, 6);
        let want = irreps
            .iter()
            .map(|rho| {
                let mut acc = M::zeros(rho[0].nrows(), rho[0].ncols());
                for (x, &c) in f.iter().enumerate() {
                    acc += &rho[x] * c;
                }
                sigma_max(&acc)
            })
            .fold(0.0, f64::max);
        let got = reduced_norm(&line_section(&b, &f)).unwrap();
        assert!((got - want).abs() <= 1e-9 * (1.0 + want), "{got} vs {want}");
    }
}

/// Section of the pair groupoid with fibre sizes `dims` as one block matrix.
fn block_matrix(f: &Section, n: usize, dims: &[usize]) -> M {
    let offsets: Vec<usize> = dims.iter().scan(0, |acc, &d| {
        let o = *acc;
        *acc += d;
        Some(o)
    })
    .collect();
    let total: usize = dims.iter().sum();
    let mut out = M::zeros(total, total);
    for i in 0..n {
        for j in 0..n {
            out.view_mut((offsets[i], offsets[j]), (dims[i], dims[j]))
                .copy_from(f.value(i * n + j));
        }
    }
    out
}

#[test]
fn pair_groupoid_norm_is_the_block_matrix_norm() {
    let mut rng = SeededRng::new(202);
    for (n, dims) in [(1, vec![1]), (2, vec![1, 1]), (3, vec![1, 1, 1]), (4, vec![1; 4]), (2, vec![2, 1]), (3, vec![1, 3, 2])] {
        let g = make_pair_groupoid(n).unwrap();
        let map: BTreeMap<usize, usize> = dims.iter().enumerate().map(|(i, &d)| (i * n + i, d)).collect();
        let b = Arc::new(make_trivial_bundle(&g, &map).unwrap());
        for _ in 0..4 {
            let f = Section::random(&b, &mut rng);
            let want = sigma_max(&block_matrix(&f, n, &dims));
            let got = reduced_norm(&f).unwrap();
            assert!((got - want).abs() <= 1e-10 * (1.0 + want), "P{n} {dims:?}: {got} vs {want}");
        }
    }
}

#[test]
fn pair_groupoid_all_ones_has_norm_n() {
    for n in 1..=4 {
        let g = make_pair_groupoid(n).unwrap();
        let b = Arc::new(make_trivial_bundle(&g, &scalar_dims(g.units())).unwrap());
        let f = line_section(&b, &vec![Complex64::new(1.0, 0.0); n * n]);
        assert!((reduced_norm(&f).unwrap() - n as f64).abs() < 1e-10);
    }
}

#[test]
fn unit_groupoid_norm_is_the_largest_fibre_norm() {
    let g = make_unit_groupoid(3).unwrap();
    let dims = BTreeMap::from([(0, 2), (1, 1), (2, 3)]);
    let b = Arc::new(make_trivial_bundle(&g, &dims).unwrap());
    let mut rng = SeededRng::new(5);
    let f = Section::random(&b, &mut rng);
    let want = f.values().iter().map(sigma_max).fold(0.0, f64::max);
    assert!((reduced_norm(&f).unwrap() - want).abs() < 1e-10 * (1.0 + want));
}

#[test]
fn swap_action_transformation_groupoid_is_the_pair_groupoid() {
    // Z_2 swapping two points: arrow (x, g) runs from g⁻¹x to x
    let g = make_transformation_groupoid(2, &cyclic_table(2), &[vec![0, 1], vec![1, 0]]).unwrap();
    let b = Arc::new(make_trivial_bundle(&g, &scalar_dims(g.units())).unwrap());
    let mut rng = SeededRng::new(9);
    for _ in 0..5 {
        let f = Section::random(&b, &mut rng);
        let mut m = M::zeros(2, 2);
        // units are the arrows (x, e) at index 2x
        for a in 0..4 {
            m[(g.range(a) / 2, g.source(a) / 2)] = f.value(a)[(0, 0)];
        }
        let want = sigma_max(&m);
        assert!((reduced_norm(&f).unwrap() - want).abs() < 1e-10 * (1.0 + want));
    }
}

/// `Σ_x f(x) X^a Z^b` for `x = (a, b)`.
fn pauli_realisation(f: &[Complex64]) -> M {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let x = M::from_row_slice(2, 2, &[zero, one, one, zero]);
    let z = M::from_row_slice(2, 2, &[one, zero, zero, -one]);
    let mut out = M::zeros(2, 2);
    for (k, &c) in f.iter().enumerate() {
        let (a, b) = (k / 2, k % 2);
        out += x.pow(a as u32) * z.pow(b as u32) * c;
    }
    out
}

#[test]
fn klein_twist_matches_pauli_realisation() {
    let (g, sigma) = klein_four_twist().unwrap();
    let b = Arc::new(make_twist_bundle(&g, sigma).unwrap());
    let one = Complex64::new(1.0, 0.0);
    let all_ones = [one; 4];
    let got = reduced_norm(&line_section(&b, &all_ones)).unwrap();
    let want = sigma_max(&pauli_realisation(&all_ones));
    assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    assert!((want - 8f64.sqrt()).abs() < 1e-12);

    let mut rng = SeededRng::new(31);
    for _ in 0..10 {
        let f = gaussians(&mut rng, 4);
        let got = reduced_norm(&line_section(&b, &f)).unwrap();
        let want = sigma_max(&pauli_realisation(&f));
        assert!((got - want).abs() <= 1e-9 * (1.0 + want), "{got} vs {want}");
    }
}

#[test]
fn coboundary_twist_matches_rescaled_group_algebra() {
    // σ(x, y) = β(x)β(y)/β(xy); f ↦ βf identifies the twisted algebra with C*(Z_n)
    for (n, beta_g) in [(2, Complex64::new(0.0, 1.0)), (3, Complex64::from_polar(1.0, 0.7))] {
        let table = cyclic_table(n);
        let g = make_group_groupoid(&table).unwrap();
        let beta: Vec<Complex64> = (0..n).map(|x| beta_g.powi(x as i32)).collect();
        // β(x) = β_g^x is not a homomorphism on Z_n unless β_g^n = 1
        let sigma: Vec<Complex64> = (0..n * n)
            .map(|k| {
                let (x, y) = (k / n, k % n);
                beta[x] * beta[y] / beta[table[x][y]]
            })
            .collect();
        let twisted = Arc::new(make_twist_bundle(&g, sigma).unwrap());
        let mut rng = SeededRng::new(n as u64);
        for _ in 0..5 {
            let f = gaussians(&mut rng, n);
            let rescaled: Vec<Complex64> = f.iter().zip(&beta).map(|(a, b)| a * b).collect();
            let got = reduced_norm(&line_section(&twisted, &f)).unwrap();
            let want = character_max(n, 1, &rescaled);
            assert!((got - want).abs() <= 1e-10 * (1.0 + want), "Z{n}: {got} vs {want}");
        }
    }
}

/// `Σ_g π(f(g)) λ_g` on `l²(G) ⊗ C^m` with `(π(a)ξ)(h) = α_{h⁻¹}(a) ξ(h)`
/// and `(λ_g ξ)(h) = ξ(g⁻¹h)`.
fn covariant_representation(table: &[Vec<usize>], unitaries: &[M], f: &Section) -> M {
    let order = table.len();
    let m = unitaries[0].nrows();
    let inv: Vec<usize> = (0..order).map(|x| (0..order).find(|&y| table[x][y] == 0).unwrap()).collect();
    let mut out = M::zeros(order * m, order * m);
    for g in 0..order {
        for h in 0..order {
            // (π(a) λ_g ξ)(h) = α_{h⁻¹}(a) ξ(g⁻¹h)
            let u = &unitaries[inv[h]];
            let block = u * f.value(g) * u.adjoint();
            let col = table[inv[g]][h];
            let mut view = out.view_mut((h * m, col * m), (m, m));
            view += block;
        }
    }
    out
}

#[test]
fn crossed_products_match_covariant_representations() {
    let (g, dims, unitaries) = z2_swap_action().unwrap();
    let b = Arc::new(make_crossed_product_bundle(&g, &dims, unitaries.clone()).unwrap());
    let id = M::identity(2, 2);
    let f = Section::new(&b, vec![id.clone(), id]).unwrap();
    let oracle = sigma_max(&covariant_representation(&cyclic_table(2), &unitaries, &f));
    assert!((oracle - 2.0).abs() < 1e-12);
    assert!((reduced_norm(&f).unwrap() - 2.0).abs() < 1e-10);

    let z3 = cyclic_table(3);
    let g3 = make_group_groupoid(&z3).unwrap();
    let mut rng = SeededRng::new(77);
    let w = rng.unitary(2);
    let rho: Vec<M> = (0..3)
        .map(|k| {
            let d = nalgebra::DVector::from_vec(vec![
                Complex64::new(1.0, 0.0),
                Complex64::from_polar(1.0, 2.0 * PI * k as f64 / 3.0),
            ]);
            &w * M::from_diagonal(&d) * w.adjoint()
        })
        .collect();
    let b3 = Arc::new(make_crossed_product_bundle(&g3, &BTreeMap::from([(0, 2)]), rho.clone()).unwrap());
    for (table, unitaries, bundle) in [(cyclic_table(2), unitaries, b), (z3, rho, b3)] {
        for _ in 0..5 {
            let f = Section::random(&bundle, &mut rng);
            let want = sigma_max(&covariant_representation(&table, &unitaries, &f));
            let got = reduced_norm(&f).unwrap();
            assert!((got - want).abs() <= 1e-10 * (1.0 + want), "{got} vs {want}");
        }
    }
}

#[test]
fn delta_sections_of_isometric_arrows_have_norm_of_their_value() {
    let g = make_pair_groupoid(3).unwrap();
    let dims = BTreeMap::from([(0, 2), (4, 2), (8, 1)]);
    let b = Arc::new(make_trivial_bundle(&g, &dims).unwrap());
    let mut rng = SeededRng::new(3);
    for a in 0..9 {
        let (r, s) = b.shape(a);
        let x = rng.gaussian_matrix(r, s);
        let f = delta_section(&b, a, x.clone()).unwrap();
        let want = sigma_max(&x);
        assert!((reduced_norm(&f).unwrap() - want).abs() < 1e-10 * (1.0 + want));
    }
}
