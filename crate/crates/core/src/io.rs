//! JSON formats for groupoids, bundles and sections.
//!
//! Groupoid: `{"arrows": N, "units": [..], "range": [..], "source": [..],
//! "inverse": [..], "compose": [[a, b, ab], ..], "labels": [..]?}` with
//! undefined products omitted from `compose`.
//!
//! Bundle: `{"groupoid": <object or path>, "kind": "trivial" | "twist" |
//! "crossed" | "custom", "dim": {"<unit>": n}, "sigma": [[a, b, re, im], ..],
//! "alpha": {"unitaries": {"<arrow>": matrix}}, "custom": {"mult":
//! [{"pair": [a, b], "data": [[re, im], ..]}], "invol": {"<arrow>": matrix}}}`.
//! Missing dims default to 1, missing cocycle entries to 1.
//!
//! Section: `{"values": {"<arrow>": matrix}}`, missing arrows are zero.
//!
//! A matrix is a row-major list of `[re, im]` pairs; its shape comes from
//! the bundle. Parsing checks structure only; the axioms are left to the
//! validators.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::algebra::Section;
use crate::bundle::{BundleKind, CustomTables, FellBundle, FiberSpec, StructureTensor};
use crate::error::{FellError, Result};
use crate::groupoid::FiniteGroupoid;
use crate::hilbmod::XuVector;
use crate::linalg::{flatten, unflatten, CMat, ONE};

/// Rounds to 12 significant digits (ties to even in decimal).
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GroupoidFile {
    arrows: usize,
    units: Vec<usize>,
    range: Vec<usize>,
    source: Vec<usize>,
    inverse: Vec<usize>,
    compose: Vec<[usize; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
struct MultEntry {
    pair: [usize; 2],
    data: Vec<[f64; 2]>,
}

#[derive(Debug, Default, Deserialize)]
struct CustomFile {
    mult: Vec<MultEntry>,
    invol: BTreeMap<String, Vec<[f64; 2]>>,
}

#[derive(Debug, Default, Deserialize)]
struct AlphaFile {
    unitaries: BTreeMap<String, Vec<[f64; 2]>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BundleFile {
    groupoid: Value,
    kind: String,
    #[serde(default)]
    dim: BTreeMap<String, usize>,
    #[serde(default)]
    sigma: Vec<[f64; 4]>,
    #[serde(default)]
    alpha: Option<AlphaFile>,
    #[serde(default)]
    custom: Option<CustomFile>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SectionFile {
    values: BTreeMap<String, Vec<[f64; 2]>>,
}

fn index(key: &str, bound: usize, what: &str) -> Result<usize> {
    match key.parse::<usize>() {
        Ok(i) if i < bound => Ok(i),
        _ => Err(FellError::Structural(format!("{what} key {key:?} is not an index below {bound}"))),
    }
}

fn entries(data: &[[f64; 2]]) -> Vec<Complex64> {
    data.iter().map(|&[re, im]| Complex64::new(re, im)).collect()
}

fn pairs(m: &CMat) -> Value {
    Value::Array(flatten(m).into_iter().map(|z| json!([z.re, z.im])).collect())
}

fn matrix(data: &[[f64; 2]], rows: usize, cols: usize, what: &str) -> Result<CMat> {
    if data.len() != rows * cols {
        return Err(FellError::Structural(format!(
            "{what} has {} entries, expected {rows}x{cols}",
            data.len()
        )));
    }
    Ok(unflatten(rows, cols, &entries(data)))
}

fn groupoid_from_value(v: Value) -> Result<FiniteGroupoid> {
    let f: GroupoidFile = serde_json::from_value(v)?;
    FiniteGroupoid::from_raw(f.arrows, &f.units, f.range, f.source, f.inverse, &f.compose, f.labels)
}

/// Parses a groupoid without checking the axioms.
pub fn groupoid_from_json(text: &str) -> Result<FiniteGroupoid> {
    groupoid_from_value(serde_json::from_str(text)?)
}

pub fn groupoid_to_json(g: &FiniteGroupoid) -> Value {
    let n = g.arrow_count();
    let default_labels = g.labels().iter().enumerate().all(|(a, l)| *l == a.to_string());
    let file = GroupoidFile {
        arrows: n,
        units: g.units().to_vec(),
        range: (0..n).map(|a| g.range(a)).collect(),
        source: (0..n).map(|a| g.source(a)).collect(),
        inverse: (0..n).map(|a| g.inverse(a)).collect(),
        compose: g.composition_triples(),
        labels: (!default_labels).then(|| g.labels().to_vec()),
    };
    serde_json::to_value(file).expect("groupoid serialises")
}

/// Parses a bundle; a string-valued `"groupoid"` is a path resolved
/// against `base`. Only shapes are checked.
pub fn bundle_from_json(text: &str, base: Option<&Path>) -> Result<FellBundle> {
    let f: BundleFile = serde_json::from_str(text)?;
    let g = match f.groupoid {
        Value::String(p) => {
            let path = match base {
                Some(dir) => dir.join(&p),
                None => PathBuf::from(&p),
            };
            groupoid_from_json(&std::fs::read_to_string(path)?)?
        }
        v @ Value::Object(_) => groupoid_from_value(v)?,
        _ => return Err(FellError::Structural("\"groupoid\" must be an object or a path".into())),
    };
    let n = g.arrow_count();
    let mut dims: BTreeMap<usize, usize> = g.units().iter().map(|&u| (u, 1)).collect();
    for (k, &d) in &f.dim {
        let u = index(k, n, "dim")?;
        if !g.is_unit(u) {
            return Err(FellError::Structural(format!("dim given for non-unit arrow {u}")));
        }
        dims.insert(u, d);
    }
    let fibers = FiberSpec::new(&g, &dims)?;
    let fdim = |u: usize| dims[&u];
    let kind = match f.kind.as_str() {
        "trivial" => BundleKind::Trivial,
        "twist" => {
            let mut sigma = vec![ONE; n * n];
            let arrow = |x: f64| (x >= 0.0 && x.fract() == 0.0 && x < n as f64).then_some(x as usize);
            for &[a, b, re, im] in &f.sigma {
                let (Some(a), Some(b)) = (arrow(a), arrow(b)) else {
                    return Err(FellError::Structural(format!("cocycle entry ({a},{b}) is not a pair of arrows")));
                };
                sigma[a * n + b] = Complex64::new(re, im);
            }
            BundleKind::Twist { sigma }
        }
        "crossed" => {
            let alpha = f.alpha.unwrap_or_default();
            let mut unitaries: Vec<Option<CMat>> = vec![None; n];
            for (k, data) in &alpha.unitaries {
                let a = index(k, n, "unitary")?;
                let m = fdim(g.range(a));
                unitaries[a] = Some(matrix(data, m, m, &format!("unitary {a}"))?);
            }
            let unitaries = unitaries
                .into_iter()
                .enumerate()
                .map(|(a, u)| u.ok_or_else(|| FellError::Structural(format!("missing unitary for arrow {a}"))))
                .collect::<Result<_>>()?;
            BundleKind::Crossed { unitaries }
        }
        "custom" => {
            let c = f.custom.unwrap_or_default();
            let size = |a: usize| fdim(g.range(a)) * fdim(g.source(a));
            let mut mult = BTreeMap::new();
            for e in &c.mult {
                let [a, b] = e.pair;
                let Some(ab) = (a < n && b < n).then(|| g.compose(a, b)).flatten() else {
                    return Err(FellError::Structural(format!("({a},{b}) is not a composable pair")));
                };
                let (l, r, o) = (size(a), size(b), size(ab));
                if e.data.len() != l * r * o {
                    return Err(FellError::Structural(format!("multiplication table for ({a},{b}) has the wrong size")));
                }
                mult.insert(
                    (a, b),
                    StructureTensor {
                        left: l,
                        right: r,
                        out: o,
                        data: entries(&e.data),
                    },
                );
            }
            let mut invol: Vec<Option<CMat>> = vec![None; n];
            for (k, data) in &c.invol {
                let a = index(k, n, "involution")?;
                invol[a] = Some(matrix(data, size(g.inverse(a)), size(a), &format!("involution {a}"))?);
            }
            let invol = invol
                .into_iter()
                .enumerate()
                .map(|(a, j)| j.ok_or_else(|| FellError::Structural(format!("missing involution for arrow {a}"))))
                .collect::<Result<_>>()?;
            BundleKind::Custom(CustomTables { mult, invol })
        }
        other => return Err(FellError::Structural(format!("unknown bundle kind {other:?}"))),
    };
    FellBundle::from_parts(g, fibers, kind)
}

/// Serialises with the groupoid inline and full float precision, so that
/// the result parses back to an identical bundle.
pub fn bundle_to_json(b: &FellBundle) -> Value {
    let g = b.groupoid();
    let n = g.arrow_count();
    let dims: serde_json::Map<String, Value> = b
        .fibers()
        .as_map()
        .into_iter()
        .map(|(u, d)| (u.to_string(), json!(d)))
        .collect();
    let mut out = json!({
        "groupoid": groupoid_to_json(g),
        "kind": b.kind().name(),
        "dim": dims,
    });
    match b.kind() {
        BundleKind::Trivial => {}
        BundleKind::Twist { sigma } => {
            out["sigma"] = g
                .composition_triples()
                .iter()
                .map(|&[a, c, _]| {
                    let z = sigma[a * n + c];
                    json!([a, c, z.re, z.im])
                })
                .collect();
        }
        BundleKind::Crossed { unitaries } => {
            let map: serde_json::Map<String, Value> =
                unitaries.iter().enumerate().map(|(a, u)| (a.to_string(), pairs(u))).collect();
            out["alpha"] = json!({ "unitaries": map });
        }
        BundleKind::Custom(t) => {
            let mult: Vec<Value> = t
                .mult
                .iter()
                .map(|(&(a, c), s)| {
                    let data: Vec<Value> = s.data.iter().map(|z| json!([z.re, z.im])).collect();
                    json!({ "pair": [a, c], "data": data })
                })
                .collect();
            let invol: serde_json::Map<String, Value> =
                t.invol.iter().enumerate().map(|(a, j)| (a.to_string(), pairs(j))).collect();
            out["custom"] = json!({ "mult": mult, "invol": invol });
        }
    }
    out
}

/// A bundle file, or a bare groupoid file read as the groupoid algebra
/// (trivial bundle with scalar fibres).
pub fn load_bundle(path: &Path) -> Result<FellBundle> {
    let text = std::fs::read_to_string(path)?;
    let v: Value = serde_json::from_str(&text)?;
    if v.get("kind").is_some() {
        bundle_from_json(&text, path.parent())
    } else {
        let g = groupoid_from_value(v)?;
        let fibers = FiberSpec::uniform(&g, 1)?;
        FellBundle::from_parts(g, fibers, BundleKind::Trivial)
    }
}

pub fn section_from_json(text: &str, bundle: &Arc<FellBundle>) -> Result<Section> {
    let f: SectionFile = serde_json::from_str(text)?;
    let n = bundle.groupoid().arrow_count();
    let mut values = BTreeMap::new();
    for (k, data) in &f.values {
        let a = index(k, n, "section")?;
        let (r, s) = bundle.shape(a);
        values.insert(a, matrix(data, r, s, &format!("value at arrow {a}"))?);
    }
    Section::from_map(bundle, values)
}

/// Nonzero values only.
pub fn section_to_json(f: &Section) -> Value {
    let values: serde_json::Map<String, Value> = f
        .values()
        .iter()
        .enumerate()
        .filter(|(_, m)| m.iter().any(|z| z.norm() > 0.0))
        .map(|(a, m)| (a.to_string(), pairs(m)))
        .collect();
    json!({ "values": values })
}

/// The section schema keyed by the arrows of `G_u`.
pub fn xu_vector_to_json(x: &XuVector) -> Value {
    let values: serde_json::Map<String, Value> = x
        .arrows()
        .iter()
        .zip(x.entries())
        .map(|(a, m)| (a.to_string(), pairs(m)))
        .collect();
    json!({ "values": values })
}

pub fn xu_vector_from_json(text: &str, bundle: &Arc<FellBundle>, u: usize) -> Result<XuVector> {
    let f = section_from_json(text, bundle)?;
    let g = bundle.groupoid();
    if let Some(bad) = f.support().into_iter().find(|&a| g.source(a) != u) {
        return Err(FellError::Structural(format!("arrow {bad} does not have source {u}")));
    }
    XuVector::from_section(&f, u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::make_trivial_bundle;
    use crate::groupoid::make_pair_groupoid;
    use crate::rng::SeededRng;
    use crate::scenarios::{klein_four_twist, three_cycle_action};

    #[test]
    fn rounds_to_twelve_digits() {
        assert_eq!(round_sig(1.0 / 3.0), 0.333333333333);
        assert_eq!(round_sig(2.0f64.sqrt() * 1e-7), 1.41421356237e-7);
        assert_eq!(round_sig(0.0), 0.0);
    }

    #[test]
    fn bundles_round_trip() {
        let (g, sigma) = klein_four_twist().unwrap();
        let twist = crate::bundle::make_twist_bundle(&g, sigma).unwrap();
        let (g3, dims, u) = three_cycle_action().unwrap();
        let crossed = crate::bundle::make_crossed_product_bundle(&g3, &dims, u).unwrap();
        let p = make_pair_groupoid(2).unwrap();
        let trivial = make_trivial_bundle(&p, &BTreeMap::from([(0, 2), (3, 1)])).unwrap();
        let custom = trivial.tabulate();
        for b in [twist, crossed, trivial, custom] {
            let text = bundle_to_json(&b).to_string();
            assert_eq!(bundle_from_json(&text, None).unwrap(), b, "{}", b.kind().name());
        }
    }

    #[test]
    fn sections_round_trip() {
        let p = make_pair_groupoid(2).unwrap();
        let b = Arc::new(make_trivial_bundle(&p, &BTreeMap::from([(0, 2), (3, 1)])).unwrap());
        let f = Section::random(&b, &mut SeededRng::new(4));
        let back = section_from_json(&section_to_json(&f).to_string(), &b).unwrap();
        assert_eq!(back.max_entry_diff(&f).unwrap(), 0.0);
        let x = XuVector::from_section(&f, 3).unwrap();
        let y = xu_vector_from_json(&xu_vector_to_json(&x).to_string(), &b, 3).unwrap();
        assert_eq!(x.entries(), y.entries());
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(matches!(groupoid_from_json("{"), Err(FellError::Json(_))));
        let bad = r#"{"arrows": 1, "units": [0], "range": [0], "source": [0], "inverse": [0], "compose": [[0, 0, 3]]}"#;
        assert!(matches!(groupoid_from_json(bad), Err(FellError::Structural(_))));
        let g = groupoid_to_json(&make_pair_groupoid(1).unwrap());
        let wrong_kind = json!({"groupoid": g, "kind": "bogus"}).to_string();
        assert!(bundle_from_json(&wrong_kind, None).is_err());
        let b = Arc::new(make_trivial_bundle(&make_pair_groupoid(1).unwrap(), &BTreeMap::from([(0, 2)])).unwrap());
        assert!(section_from_json(r#"{"values": {"0": [[1, 0]]}}"#, &b).is_err());
        assert!(section_from_json(r#"{"values": {"5": [[1, 0]]}}"#, &b).is_err());
    }
}
