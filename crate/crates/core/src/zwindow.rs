//! Truncated regular representations of the integers.
//!
//! For a finitely supported `f: Z -> C`, the regular representation on
//! `l²(Z)` is the Laurent operator with symbol `p(t) = Σ_k f(k) e^{ikt}`,
//! whose norm is `sup_t |p(t)|`. Compressing to the window `[-N, N]` gives
//! the Toeplitz matrix `T[i][j] = f(i - j)`; its norm increases with `N`
//! towards the symbol supremum and always dominates `max_k |f(k)|`.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{FellError, Result};
use crate::linalg::{CMat, ZERO};
use crate::rng::SeededRng;

/// Target width of the certified bracket around `sup |p|`.
pub const ORACLE_GAP: f64 = 1e-6;

/// Slack for the inequalities reported by [`z_window_report`].
pub const REPORT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct ZWindowInstance {
    coeffs: BTreeMap<i64, Complex64>,
    windows: Vec<usize>,
}

impl ZWindowInstance {
    /// Windows must be strictly ascending and at least the support radius.
    pub fn new(coeffs: BTreeMap<i64, Complex64>, windows: Vec<usize>) -> Result<Self> {
        if coeffs.values().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(FellError::Domain("coefficients must be finite".into()));
        }
        let coeffs: BTreeMap<i64, Complex64> = coeffs.into_iter().filter(|(_, z)| *z != ZERO).collect();
        let inst = Self { coeffs, windows };
        if inst.windows.windows(2).any(|w| w[0] >= w[1]) {
            return Err(FellError::Domain("window sizes must be strictly ascending".into()));
        }
        if let Some(&n) = inst.windows.iter().find(|&&n| (n as u64) < inst.radius()) {
            return Err(FellError::Domain(format!(
                "window {n} is smaller than the support radius {}",
                inst.radius()
            )));
        }
        Ok(inst)
    }

    pub fn coeffs(&self) -> &BTreeMap<i64, Complex64> {
        &self.coeffs
    }

    pub fn windows(&self) -> &[usize] {
        &self.windows
    }

    pub fn coeff(&self, k: i64) -> Complex64 {
        self.coeffs.get(&k).copied().unwrap_or(ZERO)
    }

    /// `max |k|` over the support.
    pub fn radius(&self) -> u64 {
        self.coeffs.keys().map(|k| k.unsigned_abs()).max().unwrap_or(0)
    }

    /// `max k - min k` over the support.
    pub fn diameter(&self) -> u64 {
        match (self.coeffs.keys().next(), self.coeffs.keys().next_back()) {
            (Some(a), Some(b)) => (b - a) as u64,
            _ => 0,
        }
    }

    pub fn max_coeff(&self) -> f64 {
        self.coeffs.values().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn l1_norm(&self) -> f64 {
        self.coeffs.values().map(|z| z.norm()).sum()
    }

    /// `Σ |k| |f(k)|`, a Lipschitz constant of `|p|`.
    pub fn lipschitz(&self) -> f64 {
        self.coeffs.iter().map(|(k, z)| k.unsigned_abs() as f64 * z.norm()).sum()
    }

    /// `p(t) = Σ_k f(k) e^{ikt}`.
    pub fn symbol(&self, t: f64) -> Complex64 {
        self.coeffs
            .iter()
            .map(|(&k, &z)| z * Complex64::from_polar(1.0, k as f64 * t))
            .sum()
    }
}

/// The `(2N+1) x (2N+1)` Toeplitz matrix `T[i][j] = f(i - j)`.
pub fn toeplitz_matrix(inst: &ZWindowInstance, n: usize) -> CMat {
    let size = 2 * n + 1;
    CMat::from_fn(size, size, |i, j| inst.coeff(i as i64 - j as i64))
}

/// Whether the Hermitian matrix `lambda I - h` is positive definite, by a
/// Cholesky factorisation restricted to half-bandwidth `bw`.
fn shifted_is_definite(h: &CMat, bw: usize, lambda: f64) -> bool {
    let n = h.nrows();
    // l[i][k] = L[i, i - bw + k]
    let mut l = vec![vec![ZERO; bw + 1]; n];
    for j in 0..n {
        let lo = j.saturating_sub(bw);
        let mut d = lambda - h[(j, j)].re;
        for k in lo..j {
            d -= l[j][k + bw - j].norm_sqr();
        }
        if !(d > 0.0) {
            return false;
        }
        let djj = d.sqrt();
        l[j][bw] = Complex64::new(djj, 0.0);
        for i in j + 1..(j + bw + 1).min(n) {
            let mut s = -h[(i, j)];
            for k in i.saturating_sub(bw).max(lo)..j {
                s -= l[i][k + bw - i] * l[j][k + bw - j].conj();
            }
            l[i][j + bw - i] = s / djj;
        }
    }
    true
}

/// Largest singular value of the window matrix of size `2N+1`.
///
/// Computed as `sqrt(λ_max(T* T))`, locating `λ_max` by bisection on the
/// definiteness of `λ I - T* T` (a banded matrix).
pub fn z_window_norm(inst: &ZWindowInstance, n: usize) -> Result<f64> {
    if (n as u64) < inst.radius() {
        return Err(FellError::Domain(format!(
            "window {n} is smaller than the support radius {}",
            inst.radius()
        )));
    }
    if inst.coeffs.is_empty() {
        return Ok(0.0);
    }
    let t = toeplitz_matrix(inst, n);
    let size = t.nrows();
    let lower_bw = inst.coeffs.keys().next_back().copied().unwrap_or(0).max(0) as usize;
    let upper_bw = (-inst.coeffs.keys().next().copied().unwrap_or(0)).max(0) as usize;
    let bw = (lower_bw + upper_bw).min(size - 1);
    let mut h = CMat::zeros(size, size);
    for i in 0..size {
        for j in i.saturating_sub(bw)..(i + bw + 1).min(size) {
            let k_lo = i.max(j).saturating_sub(upper_bw);
            let k_hi = (i.min(j) + lower_bw + 1).min(size);
            let mut s = ZERO;
            for k in k_lo..k_hi {
                s += t[(k, i)].conj() * t[(k, j)];
            }
            h[(i, j)] = s;
        }
    }
    let mut lo = (0..size).map(|j| h[(j, j)].re).fold(0.0, f64::max);
    let mut hi = inst.l1_norm().powi(2) * (1.0 + 1e-12) + f64::MIN_POSITIVE;
    for _ in 0..200 {
        if hi - lo <= 1e-15 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if shifted_is_definite(&h, bw, mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi.sqrt())
}

/// Certified enclosure of `sup_t |p(t)|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OracleBracket {
    pub lower: f64,
    pub upper: f64,
}

impl OracleBracket {
    pub fn gap(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
}

#[derive(PartialEq)]
struct Interval {
    bound: f64,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
}

impl Eq for Interval {}

impl PartialOrd for Interval {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Interval {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound.total_cmp(&other.bound)
    }
}

/// `sup_t |p(t)|` bracketed to within [`ORACLE_GAP`].
///
/// `|p|` is evaluated on `grid` equally spaced points; on each cell the
/// Lipschitz bound `Σ |k||f(k)|` gives an upper estimate, and the cell with
/// the largest estimate is bisected until the estimate is within the gap
/// of the best value seen.
pub fn fourier_oracle(inst: &ZWindowInstance, grid: usize) -> Result<OracleBracket> {
    let need = 4 * (inst.diameter() as usize + 1);
    if grid < need {
        return Err(FellError::Domain(format!("grid must have at least {need} points, got {grid}")));
    }
    let lip = inst.lipschitz();
    let eval = |t: f64| inst.symbol(t).norm();
    let cell = |a: f64, b: f64, fa: f64, fb: f64| Interval {
        bound: 0.5 * (fa + fb) + 0.5 * lip * (b - a),
        a,
        b,
        fa,
        fb,
    };
    let step = 2.0 * PI / grid as f64;
    let values: Vec<f64> = (0..=grid).map(|j| eval(j as f64 * step)).collect();
    let mut lower = values.iter().cloned().fold(0.0, f64::max);
    let mut heap: BinaryHeap<Interval> = (0..grid)
        .map(|j| cell(j as f64 * step, (j + 1) as f64 * step, values[j], values[j + 1]))
        .collect();
    for _ in 0..10_000_000 {
        let top = heap.pop().expect("heap is never empty");
        if top.bound - lower <= ORACLE_GAP {
            return Ok(OracleBracket {
                lower,
                upper: top.bound.max(lower),
            });
        }
        let m = 0.5 * (top.a + top.b);
        let fm = eval(m);
        lower = lower.max(fm);
        heap.push(cell(top.a, m, top.fa, fm));
        heap.push(cell(m, top.b, fm, top.fb));
    }
    Err(FellError::Numerical("symbol supremum did not converge".into()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ZWindowRow {
    pub n: usize,
    pub window_norm: f64,
    pub oracle_lower: f64,
    pub oracle_upper: f64,
    pub max_coeff: f64,
    pub l1_norm: f64,
    /// `max_k |f(k)| ≤ window norm`.
    pub coeff_bound: bool,
    /// `window norm ≤ oracle upper`.
    pub oracle_bound: bool,
    /// `oracle lower ≤ ‖f‖₁`.
    pub l1_bound: bool,
    /// Window norm not smaller than at the previous window.
    pub monotone: bool,
}

impl ZWindowRow {
    pub fn pass(&self) -> bool {
        self.coeff_bound && self.oracle_bound && self.l1_bound && self.monotone
    }

    /// Distance from the window norm to the top of the oracle bracket.
    pub fn gap(&self) -> f64 {
        self.oracle_upper - self.window_norm
    }
}

/// One row per window of the instance.
pub fn z_window_report(inst: &ZWindowInstance, grid: usize) -> Result<Vec<ZWindowRow>> {
    let oracle = fourier_oracle(inst, grid)?;
    let (max_coeff, l1) = (inst.max_coeff(), inst.l1_norm());
    let mut previous = 0.0;
    inst.windows
        .iter()
        .map(|&n| {
            let w = z_window_norm(inst, n)?;
            let row = ZWindowRow {
                n,
                window_norm: w,
                oracle_lower: oracle.lower,
                oracle_upper: oracle.upper,
                max_coeff,
                l1_norm: l1,
                coeff_bound: max_coeff <= w + REPORT_TOL,
                oracle_bound: w <= oracle.upper + REPORT_TOL,
                l1_bound: oracle.lower <= l1 + REPORT_TOL,
                monotone: w + REPORT_TOL >= previous,
            };
            previous = w;
            Ok(row)
        })
        .collect()
}

/// Smallest grid accepted by [`fourier_oracle`] for this instance.
pub fn default_grid(inst: &ZWindowInstance) -> usize {
    (4 * (inst.diameter() as usize + 1)).max(256)
}

/// Windows used for random instances: powers of two from the support
/// radius up to 256.
pub fn standard_windows(radius: u64) -> Vec<usize> {
    [1, 2, 4, 8, 16, 32, 64, 128, 256]
        .into_iter()
        .filter(|&n| n as u64 >= radius)
        .collect()
}

/// Gaussian coefficients on a random sub-interval of `[-reach, reach]`
/// containing 0, scaled to `‖f‖₁ = 1`, with the [`standard_windows`].
pub fn random_instance(rng: &mut SeededRng, reach: u64) -> ZWindowInstance {
    let reach = reach as usize;
    let lo = -(rng.below(reach + 1) as i64);
    let hi = rng.below(reach + 1) as i64;
    let raw: Vec<(i64, Complex64)> = (lo..=hi).map(|k| (k, rng.complex_gaussian())).collect();
    let l1: f64 = raw.iter().map(|(_, z)| z.norm()).sum();
    let coeffs: BTreeMap<i64, Complex64> = raw.into_iter().map(|(k, z)| (k, z / l1)).collect();
    let radius = coeffs.keys().map(|k| k.unsigned_abs()).max().unwrap_or(0);
    ZWindowInstance::new(coeffs, standard_windows(radius)).expect("windows cover the support")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{self, c, ONE};

    fn inst(pairs: &[(i64, Complex64)], windows: Vec<usize>) -> ZWindowInstance {
        ZWindowInstance::new(pairs.iter().copied().collect(), windows).unwrap()
    }

    #[test]
    fn delta_zero_is_identity() {
        let i = inst(&[(0, ONE)], vec![0, 3, 10]);
        for n in [0, 3, 10] {
            assert!((z_window_norm(&i, n).unwrap() - 1.0).abs() < 1e-13);
        }
        let b = fourier_oracle(&i, 256).unwrap();
        assert!(b.lower <= 1.0 + 1e-15 && b.upper >= 1.0 - 1e-15 && b.gap() <= ORACLE_GAP);
    }

    #[test]
    fn shift_pair_matches_cosine_formula() {
        let i = inst(&[(-1, ONE), (1, ONE)], vec![4, 16, 64]);
        for n in [1, 4, 16, 64] {
            let expect = 2.0 * (PI / (2 * n + 2) as f64).cos();
            assert!((z_window_norm(&i, n).unwrap() - expect).abs() < 1e-12, "N={n}");
        }
        let b = fourier_oracle(&i, 256).unwrap();
        assert!(b.lower <= 2.0 && 2.0 <= b.upper);
    }

    #[test]
    fn bisection_agrees_with_dense_svd() {
        let mut rng = SeededRng::new(12);
        for trial in 0..10 {
            let lo = -(rng.below(4) as i64);
            let hi = rng.below(4) as i64;
            let pairs: Vec<(i64, Complex64)> = (lo..=hi).map(|k| (k, rng.complex_gaussian())).collect();
            let n = 4 + trial;
            let i = inst(&pairs, vec![n]);
            let dense = linalg::opnorm(&toeplitz_matrix(&i, n));
            let banded = z_window_norm(&i, n).unwrap();
            assert!((dense - banded).abs() < 1e-10 * (1.0 + dense), "{dense} vs {banded}");
        }
    }

    #[test]
    fn report_inequalities_hold() {
        let i = inst(&[(0, ONE), (1, ONE)], vec![1, 2, 8, 32]);
        let rows = z_window_report(&i, 256).unwrap();
        assert!(rows.iter().all(|r| r.pass()), "{rows:#?}");
        assert!(rows.last().unwrap().window_norm > 1.99);
    }

    #[test]
    fn rejects_small_windows_and_grids() {
        let pairs: BTreeMap<i64, Complex64> = [(-3, ONE), (2, c(0.5, 0.0))].into_iter().collect();
        assert!(ZWindowInstance::new(pairs.clone(), vec![2]).is_err());
        assert!(ZWindowInstance::new(pairs.clone(), vec![5, 4]).is_err());
        let i = ZWindowInstance::new(pairs, vec![3]).unwrap();
        assert!(fourier_oracle(&i, 23).is_err());
        assert!(fourier_oracle(&i, 24).is_ok());
    }

    #[test]
    fn zero_instance() {
        let i = ZWindowInstance::new(BTreeMap::new(), vec![0, 1]).unwrap();
        assert_eq!(z_window_norm(&i, 1).unwrap(), 0.0);
        assert_eq!(fourier_oracle(&i, 4).unwrap().upper, 0.0);
    }
}
