//! Finite (hence étale) groupoids.
//!
//! Arrows are dense indices `0..n`; units are identity arrows. Composition is
//! a total `n x n` table holding [`UNDEFINED`] for non-composable pairs.

use crate::error::{FellError, Result};
use crate::validation::ValidationReport;

/// Sentinel stored in the composition table for pairs that do not compose.
pub const UNDEFINED: usize = usize::MAX;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteGroupoid {
    labels: Vec<String>,
    units: Vec<usize>,
    is_unit: Vec<bool>,
    range: Vec<usize>,
    source: Vec<usize>,
    inverse: Vec<usize>,
    compose: Vec<usize>,
    fiber_r: Vec<Vec<usize>>,
    fiber_s: Vec<Vec<usize>>,
    position_s: Vec<usize>,
}

impl FiniteGroupoid {
    /// Builds a groupoid from raw tables without checking the groupoid axioms.
    ///
    /// Only structural consistency is enforced (lengths, index bounds,
    /// conflicting composition entries); call [`FiniteGroupoid::validate`]
    /// for the axioms.
    pub fn from_raw(
        arrows: usize,
        units: &[usize],
        range: Vec<usize>,
        source: Vec<usize>,
        inverse: Vec<usize>,
        compose: &[[usize; 3]],
        labels: Option<Vec<String>>,
    ) -> Result<Self> {
        if arrows == 0 {
            return Err(FellError::Structural("groupoid has no arrows".into()));
        }
        for (name, table) in [("range", &range), ("source", &source), ("inverse", &inverse)] {
            if table.len() != arrows {
                return Err(FellError::Structural(format!(
                    "{name} has length {}, expected {arrows}",
                    table.len()
                )));
            }
            if let Some(bad) = table.iter().find(|&&a| a >= arrows) {
                return Err(FellError::Structural(format!("{name} refers to arrow {bad}")));
            }
        }
        let mut is_unit = vec![false; arrows];
        for &u in units {
            if u >= arrows {
                return Err(FellError::Structural(format!("unit {u} out of range")));
            }
            if is_unit[u] {
                return Err(FellError::Structural(format!("unit {u} listed twice")));
            }
            is_unit[u] = true;
        }
        let mut table = vec![UNDEFINED; arrows * arrows];
        for &[a, b, ab] in compose {
            if a >= arrows || b >= arrows || ab >= arrows {
                return Err(FellError::Structural(format!(
                    "composition entry ({a},{b},{ab}) out of range"
                )));
            }
            let slot = &mut table[a * arrows + b];
            if *slot != UNDEFINED && *slot != ab {
                return Err(FellError::Structural(format!(
                    "conflicting composition entries for ({a},{b})"
                )));
            }
            *slot = ab;
        }
        let labels = match labels {
            Some(l) if l.len() == arrows => l,
            Some(l) => {
                return Err(FellError::Structural(format!(
                    "{} labels for {arrows} arrows",
                    l.len()
                )))
            }
            None => (0..arrows).map(|a| a.to_string()).collect(),
        };

        let mut units: Vec<usize> = units.to_vec();
        units.sort_unstable();
        let mut fiber_r = vec![Vec::new(); arrows];
        let mut fiber_s = vec![Vec::new(); arrows];
        let mut position_s = vec![0; arrows];
        for a in 0..arrows {
            fiber_r[range[a]].push(a);
            position_s[a] = fiber_s[source[a]].len();
            fiber_s[source[a]].push(a);
        }

        Ok(Self {
            labels,
            units,
            is_unit,
            range,
            source,
            inverse,
            compose: table,
            fiber_r,
            fiber_s,
            position_s,
        })
    }

    /// Like [`FiniteGroupoid::from_raw`] but rejects tables that violate the axioms.
    pub fn new(
        arrows: usize,
        units: &[usize],
        range: Vec<usize>,
        source: Vec<usize>,
        inverse: Vec<usize>,
        compose: &[[usize; 3]],
        labels: Option<Vec<String>>,
    ) -> Result<Self> {
        let g = Self::from_raw(arrows, units, range, source, inverse, compose, labels)?;
        let report = g.validate();
        if report.is_empty() {
            Ok(g)
        } else {
            Err(FellError::Validation(report))
        }
    }

    pub fn arrow_count(&self) -> usize {
        self.range.len()
    }

    pub fn units(&self) -> &[usize] {
        &self.units
    }

    pub fn is_unit(&self, a: usize) -> bool {
        self.is_unit.get(a).copied().unwrap_or(false)
    }

    pub fn range(&self, a: usize) -> usize {
        self.range[a]
    }

    pub fn source(&self, a: usize) -> usize {
        self.source[a]
    }

    pub fn inverse(&self, a: usize) -> usize {
        self.inverse[a]
    }

    pub fn label(&self, a: usize) -> &str {
        &self.labels[a]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Raw table entry; [`UNDEFINED`] if the pair does not compose.
    pub fn compose_raw(&self, a: usize, b: usize) -> usize {
        self.compose[a * self.arrow_count() + b]
    }

    pub fn compose(&self, a: usize, b: usize) -> Option<usize> {
        match self.compose_raw(a, b) {
            UNDEFINED => None,
            ab => Some(ab),
        }
    }

    /// Composition of a pair already known to be composable.
    ///
    /// Panics if the table has no entry; only valid groupoids reach callers.
    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.compose(a, b)
            .unwrap_or_else(|| panic!("arrows {a} and {b} do not compose"))
    }

    pub fn composable(&self, a: usize, b: usize) -> bool {
        self.source[a] == self.range[b]
    }

    /// All defined composition entries `(a, b, ab)` in lexicographic order.
    pub fn composition_triples(&self) -> Vec<[usize; 3]> {
        let n = self.arrow_count();
        let mut out = Vec::new();
        for a in 0..n {
            for b in 0..n {
                if let Some(ab) = self.compose(a, b) {
                    out.push([a, b, ab]);
                }
            }
        }
        out
    }

    fn check_unit(&self, u: usize) -> Result<()> {
        if self.is_unit(u) {
            Ok(())
        } else {
            Err(FellError::Domain(format!("{u} is not a unit")))
        }
    }

    /// `G^u`: arrows with range `u`, ascending.
    pub fn fiber_r(&self, u: usize) -> Result<&[usize]> {
        self.check_unit(u)?;
        Ok(&self.fiber_r[u])
    }

    /// `G_u`: arrows with source `u`, ascending.
    pub fn fiber_s(&self, u: usize) -> Result<&[usize]> {
        self.check_unit(u)?;
        Ok(&self.fiber_s[u])
    }

    /// Position of `a` inside `G_{s(a)}`.
    pub fn position_in_fiber_s(&self, a: usize) -> usize {
        self.position_s[a]
    }

    /// Checks every groupoid axiom; an empty report means `self` is a groupoid.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::new();
        let n = self.arrow_count();

        for &u in &self.units {
            if self.range[u] != u || self.source[u] != u {
                report.push(
                    "unit-fixed",
                    vec![u],
                    None,
                    format!("unit {u} has range {} and source {}", self.range[u], self.source[u]),
                );
            }
        }
        for a in 0..n {
            for (name, end) in [("range", self.range[a]), ("source", self.source[a])] {
                if !self.is_unit[end] {
                    report.push(
                        "endpoints-are-units",
                        vec![a],
                        None,
                        format!("{name} of {a} is {end}, which is not a unit"),
                    );
                }
            }
        }

        for a in 0..n {
            for b in 0..n {
                let defined = self.compose(a, b);
                let composable = self.composable(a, b);
                match (defined, composable) {
                    (Some(ab), false) => report.push(
                        "composability",
                        vec![a, b],
                        None,
                        format!("compose({a},{b}) = {ab} but source({a}) != range({b})"),
                    ),
                    (None, true) => report.push(
                        "closure",
                        vec![a, b],
                        None,
                        format!("({a},{b}) is composable but compose is undefined"),
                    ),
                    (Some(ab), true) => {
                        if self.range[ab] != self.range[a] || self.source[ab] != self.source[b] {
                            report.push(
                                "composition-endpoints",
                                vec![a, b, ab],
                                None,
                                format!("compose({a},{b}) = {ab} has wrong range or source"),
                            );
                        }
                    }
                    (None, false) => {}
                }
            }
        }

        for a in 0..n {
            let r = self.range[a];
            let s = self.source[a];
            if self.is_unit[r] && self.compose(r, a) != Some(a) {
                report.push("unit-law", vec![r, a], None, format!("compose(range, {a}) != {a}"));
            }
            if self.is_unit[s] && self.compose(a, s) != Some(a) {
                report.push("unit-law", vec![a, s], None, format!("compose({a}, source) != {a}"));
            }
        }

        for a in 0..n {
            for b in 0..n {
                let Some(ab) = self.compose(a, b) else { continue };
                for c in 0..n {
                    let Some(bc) = self.compose(b, c) else { continue };
                    let left = self.compose(ab, c);
                    let right = self.compose(a, bc);
                    if left != right || left.is_none() {
                        report.push(
                            "associativity",
                            vec![a, b, c],
                            None,
                            format!("({a}{b}){c} = {left:?} but {a}({b}{c}) = {right:?}"),
                        );
                    }
                }
            }
        }

        for a in 0..n {
            let inv = self.inverse[a];
            if self.inverse[inv] != a {
                report.push(
                    "inverse-involution",
                    vec![a],
                    None,
                    format!("inverse(inverse({a})) = {}", self.inverse[inv]),
                );
            }
            if self.compose(a, inv) != Some(self.range[a]) || self.compose(inv, a) != Some(self.source[a]) {
                report.push(
                    "inverse-law",
                    vec![a, inv],
                    None,
                    format!("{a} composed with its inverse {inv} is not a unit of the right kind"),
                );
            }
        }

        report
    }
}

/// Pair groupoid on `n` points: arrows `(i,j)` at index `i*n + j`,
/// range `i`, source `j`.
pub fn make_pair_groupoid(n: usize) -> Result<FiniteGroupoid> {
    if n == 0 {
        return Err(FellError::Domain("pair groupoid needs at least one point".into()));
    }
    let idx = |i: usize, j: usize| i * n + j;
    let mut range = Vec::with_capacity(n * n);
    let mut source = Vec::with_capacity(n * n);
    let mut inverse = Vec::with_capacity(n * n);
    let mut labels = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            range.push(idx(i, i));
            source.push(idx(j, j));
            inverse.push(idx(j, i));
            labels.push(format!("({i},{j})"));
        }
    }
    let mut compose = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                compose.push([idx(i, j), idx(j, k), idx(i, k)]);
            }
        }
    }
    let units: Vec<usize> = (0..n).map(|i| idx(i, i)).collect();
    FiniteGroupoid::new(n * n, &units, range, source, inverse, &compose, Some(labels))
}

/// Groupoid consisting of `n` units and nothing else.
pub fn make_unit_groupoid(n: usize) -> Result<FiniteGroupoid> {
    if n == 0 {
        return Err(FellError::Domain("unit groupoid needs at least one unit".into()));
    }
    let ids: Vec<usize> = (0..n).collect();
    let compose: Vec<[usize; 3]> = ids.iter().map(|&u| [u, u, u]).collect();
    FiniteGroupoid::new(n, &ids, ids.clone(), ids.clone(), ids.clone(), &compose, None)
}

/// Identity element and inverse table of a Cayley table, or the report of
/// what is missing.
fn group_structure(cayley: &[Vec<usize>]) -> Result<(usize, Vec<usize>)> {
    let n = cayley.len();
    if n == 0 {
        return Err(FellError::Domain("empty Cayley table".into()));
    }
    for (i, row) in cayley.iter().enumerate() {
        if row.len() != n {
            return Err(FellError::Structural(format!(
                "Cayley table row {i} has length {}, expected {n}",
                row.len()
            )));
        }
        if let Some(bad) = row.iter().find(|&&x| x >= n) {
            return Err(FellError::Structural(format!("Cayley table entry {bad} out of range")));
        }
    }
    let mut report = ValidationReport::new();
    let identity = (0..n).find(|&e| (0..n).all(|g| cayley[e][g] == g && cayley[g][e] == g));
    let Some(e) = identity else {
        report.push("identity", vec![], None, "Cayley table has no two-sided identity".into());
        return Err(FellError::Validation(report));
    };
    let mut inverse = vec![0; n];
    for g in 0..n {
        match (0..n).find(|&h| cayley[g][h] == e && cayley[h][g] == e) {
            Some(h) => inverse[g] = h,
            None => report.push("inverse-law", vec![g], None, format!("element {g} has no inverse")),
        }
    }
    if report.is_empty() {
        Ok((e, inverse))
    } else {
        Err(FellError::Validation(report))
    }
}

/// One-unit groupoid from a group Cayley table (`cayley[g][h] = g h`).
pub fn make_group_groupoid(cayley: &[Vec<usize>]) -> Result<FiniteGroupoid> {
    let (e, inverse) = group_structure(cayley)?;
    let n = cayley.len();
    let mut compose = Vec::with_capacity(n * n);
    for (g, row) in cayley.iter().enumerate() {
        for (h, &gh) in row.iter().enumerate() {
            compose.push([g, h, gh]);
        }
    }
    let labels = (0..n).map(|g| format!("g{g}")).collect();
    FiniteGroupoid::new(n, &[e], vec![e; n], vec![e; n], inverse, &compose, Some(labels))
}

/// Transformation groupoid `X ⋊ Γ` for a left action of `Γ` on `X = {0..space_size}`.
///
/// Arrow `(x, g)` sits at index `x * |Γ| + g`, with range `x` and source
/// `g⁻¹·x`; `action[g][x]` is the image of `x` under `g`.
pub fn make_transformation_groupoid(
    space_size: usize,
    group: &[Vec<usize>],
    action: &[Vec<usize>],
) -> Result<FiniteGroupoid> {
    if space_size == 0 {
        return Err(FellError::Domain("transformation groupoid needs a nonempty space".into()));
    }
    let (e, ginv) = group_structure(group)?;
    let order = group.len();
    if action.len() != order {
        return Err(FellError::Structural(format!(
            "action has {} permutations for a group of order {order}",
            action.len()
        )));
    }
    let mut report = ValidationReport::new();
    for (g, perm) in action.iter().enumerate() {
        if perm.len() != space_size {
            return Err(FellError::Structural(format!("permutation {g} has wrong length")));
        }
        let mut seen = vec![false; space_size];
        for &x in perm {
            if x >= space_size || std::mem::replace(&mut seen[x], true) {
                report.push("action-bijective", vec![g], None, format!("action of {g} is not a permutation"));
                break;
            }
        }
    }
    if !report.is_empty() {
        return Err(FellError::Validation(report));
    }
    for g in 0..order {
        for h in 0..order {
            let gh = group[g][h];
            for x in 0..space_size {
                if action[gh][x] != action[g][action[h][x]] {
                    report.push(
                        "action-homomorphism",
                        vec![g, h, x],
                        None,
                        format!("(g h)·x != g·(h·x) for g={g}, h={h}, x={x}"),
                    );
                }
            }
        }
    }
    if !report.is_empty() {
        return Err(FellError::Validation(report));
    }

    let idx = |x: usize, g: usize| x * order + g;
    let n = space_size * order;
    let mut range = Vec::with_capacity(n);
    let mut source = Vec::with_capacity(n);
    let mut inverse = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for x in 0..space_size {
        for g in 0..order {
            let y = action[ginv[g]][x];
            range.push(idx(x, e));
            source.push(idx(y, e));
            inverse.push(idx(y, ginv[g]));
            labels.push(format!("({x},g{g})"));
        }
    }
    let mut compose = Vec::new();
    for x in 0..space_size {
        for g in 0..order {
            let y = action[ginv[g]][x];
            for h in 0..order {
                compose.push([idx(x, g), idx(y, h), idx(x, group[g][h])]);
            }
        }
    }
    let units: Vec<usize> = (0..space_size).map(|x| idx(x, e)).collect();
    FiniteGroupoid::new(n, &units, range, source, inverse, &compose, Some(labels))
}

/// Disjoint union; arrows of `b` are shifted past those of `a`.
pub fn disjoint_union(a: &FiniteGroupoid, b: &FiniteGroupoid) -> Result<FiniteGroupoid> {
    let off = a.arrow_count();
    let shift = |v: &[usize]| v.iter().map(|&x| x + off).collect::<Vec<_>>();
    let mut units = a.units().to_vec();
    units.extend(shift(b.units()));
    let mut range = a.range.clone();
    range.extend(shift(&b.range));
    let mut source = a.source.clone();
    source.extend(shift(&b.source));
    let mut inverse = a.inverse.clone();
    inverse.extend(shift(&b.inverse));
    let mut compose = a.composition_triples();
    compose.extend(b.composition_triples().into_iter().map(|[x, y, z]| [x + off, y + off, z + off]));
    let mut labels = a.labels.clone();
    labels.extend(b.labels.iter().cloned());
    FiniteGroupoid::new(off + b.arrow_count(), &units, range, source, inverse, &compose, Some(labels))
}

/// Product groupoid; arrow `(x, y)` sits at index `x * |b| + y`.
pub fn product(a: &FiniteGroupoid, b: &FiniteGroupoid) -> Result<FiniteGroupoid> {
    let nb = b.arrow_count();
    let n = a.arrow_count() * nb;
    let idx = |x: usize, y: usize| x * nb + y;
    let mut range = Vec::with_capacity(n);
    let mut source = Vec::with_capacity(n);
    let mut inverse = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for x in 0..a.arrow_count() {
        for y in 0..nb {
            range.push(idx(a.range(x), b.range(y)));
            source.push(idx(a.source(x), b.source(y)));
            inverse.push(idx(a.inverse(x), b.inverse(y)));
            labels.push(format!("({},{})", a.label(x), b.label(y)));
        }
    }
    let mut compose = Vec::new();
    for [x1, x2, x12] in a.composition_triples() {
        for [y1, y2, y12] in b.composition_triples() {
            compose.push([idx(x1, y1), idx(x2, y2), idx(x12, y12)]);
        }
    }
    let mut units = Vec::new();
    for &u in a.units() {
        for &v in b.units() {
            units.push(idx(u, v));
        }
    }
    FiniteGroupoid::new(n, &units, range, source, inverse, &compose, Some(labels))
}

/// Cayley table of `Z_n`.
pub fn cyclic_table(n: usize) -> Vec<Vec<usize>> {
    (0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect()
}

/// Cayley table of `Z_n x Z_m`, element `(a, b)` at index `a * m + b`.
pub fn abelian_table(n: usize, m: usize) -> Vec<Vec<usize>> {
    let size = n * m;
    (0..size)
        .map(|x| {
            (0..size)
                .map(|y| ((x / m + y / m) % n) * m + (x % m + y % m) % m)
                .collect()
        })
        .collect()
}

/// Cayley table of the symmetric group `S_3`; element `r^a s^b` at index
/// `2a + b`, with `s r s = r⁻¹`.
pub fn s3_table() -> Vec<Vec<usize>> {
    // r^a s^b · r^c s^d = r^(a + (-1)^b c) s^(b + d)
    let mut t = vec![vec![0; 6]; 6];
    for x in 0..6 {
        let (a, b) = (x / 2, x % 2);
        for y in 0..6 {
            let (c, d) = (y / 2, y % 2);
            let sign_c = if b == 0 { c } else { (3 - c) % 3 };
            t[x][y] = ((a + sign_c) % 3) * 2 + (b + d) % 2;
        }
    }
    t
}
