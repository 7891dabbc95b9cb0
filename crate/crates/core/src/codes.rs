//! Translation-invariant code families, CSS validation, and instantiation on
//! finite lattices.
//!
//! Convention: `H_X` detects X-type errors, so its rows are the Z-checks and
//! `|H_X c_x|` counts violated Z-checks. It is built from the symbol `h_Z`;
//! `H_Z` (rows are X-checks) is built from `h_X`.
//!
//! Placement rules on the lattice:
//! * quantum: the check of type `j` at site `s` touches qubit `i` at site
//!   `s + v` with coefficient `h[i][j]_v` for every term `x^v`;
//! * classical: bit `i` at site `u` enters check `j` at site `u + v`, so the
//!   syndrome of a word polynomial `c` is `h^T c`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fq::{Fe, Field};
use crate::poly::{LaurentPoly, PolyMatrix};
use crate::sparse::{SparseFqMatrix, SparseWord};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sector {
    Classical,
    X,
    Z,
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sector::Classical => "classical",
            Sector::X => "x",
            Sector::Z => "z",
        })
    }
}

impl std::str::FromStr for Sector {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "classical" | "c" => Ok(Sector::Classical),
            "x" => Ok(Sector::X),
            "z" => Ok(Sector::Z),
            _ => Err(Error::Parse(format!("unknown sector '{s}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub p: u32,
    #[serde(default = "one")]
    pub e: u32,
}

fn one() -> u32 {
    1
}

impl FieldSpec {
    pub fn of(field: &Field) -> Self {
        FieldSpec {
            p: field.p(),
            e: field.e(),
        }
    }

    pub fn build(&self) -> Result<Field> {
        Field::new(self.p, self.e)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CodeKind {
    Classical,
    Quantum,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CodeBody {
    Classical { h: PolyMatrix },
    Quantum { h_x: PolyMatrix, h_z: PolyMatrix },
}

/// A translation-invariant code given by Laurent-polynomial matrices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransInvCode {
    family: String,
    field: Field,
    dim: usize,
    body: CodeBody,
}

/// The symbolic product `conj(h_X)^T h_Z`; valid iff it is zero.
#[derive(Clone, Debug)]
pub struct CssReport {
    pub product: PolyMatrix,
    /// (X-check type, Z-check type, entry) for every nonzero entry.
    pub violations: Vec<(usize, usize, String)>,
}

impl CssReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn css_product(h_x: &PolyMatrix, h_z: &PolyMatrix) -> Result<CssReport> {
    let product = h_x.conj_transpose().mul(h_z)?;
    let mut violations = Vec::new();
    for r in 0..product.rows() {
        for c in 0..product.cols() {
            let e = product.get(r, c);
            if !e.is_zero() {
                violations.push((r, c, e.to_string()));
            }
        }
    }
    Ok(CssReport {
        product,
        violations,
    })
}

impl TransInvCode {
    pub fn quantum(family: &str, h_x: PolyMatrix, h_z: PolyMatrix) -> Result<Self> {
        if h_x.field() != h_z.field() || h_x.dim() != h_z.dim() {
            return Err(Error::Mismatch(
                "h_X and h_Z live over different rings".into(),
            ));
        }
        if h_x.rows() != h_z.rows() {
            return Err(Error::Shape(format!(
                "h_X has {} qubit rows, h_Z has {}",
                h_x.rows(),
                h_z.rows()
            )));
        }
        let report = css_product(&h_x, &h_z)?;
        if !report.is_valid() {
            return Err(Error::NotCss(report.violations.len()));
        }
        Ok(TransInvCode {
            family: family.to_string(),
            field: h_x.field().clone(),
            dim: h_x.dim(),
            body: CodeBody::Quantum { h_x, h_z },
        })
    }

    pub fn classical(family: &str, h: PolyMatrix) -> Self {
        TransInvCode {
            family: family.to_string(),
            field: h.field().clone(),
            dim: h.dim(),
            body: CodeBody::Classical { h },
        }
    }

    pub fn family(&self) -> &str {
        &self.family
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn body(&self) -> &CodeBody {
        &self.body
    }

    pub fn kind(&self) -> CodeKind {
        match self.body {
            CodeBody::Classical { .. } => CodeKind::Classical,
            CodeBody::Quantum { .. } => CodeKind::Quantum,
        }
    }

    /// Coordinates per site.
    pub fn n_site(&self) -> usize {
        match &self.body {
            CodeBody::Classical { h } => h.rows(),
            CodeBody::Quantum { h_x, .. } => h_x.rows(),
        }
    }

    /// (X-checks, Z-checks) per site for quantum codes, (checks, 0) otherwise.
    pub fn checks_per_site(&self) -> (usize, usize) {
        match &self.body {
            CodeBody::Classical { h } => (h.cols(), 0),
            CodeBody::Quantum { h_x, h_z } => (h_x.cols(), h_z.cols()),
        }
    }

    pub fn validate_css(&self) -> Result<CssReport> {
        match &self.body {
            CodeBody::Quantum { h_x, h_z } => css_product(h_x, h_z),
            CodeBody::Classical { .. } => {
                Err(Error::Invalid("CSS check needs a quantum code".into()))
            }
        }
    }

    /// Classical code with check matrix `h^T`.
    pub fn transpose(&self) -> Result<Self> {
        match &self.body {
            CodeBody::Classical { h } => Ok(TransInvCode::classical(
                &format!("{}-transpose", self.family),
                h.transpose(),
            )),
            CodeBody::Quantum { .. } => Err(Error::Invalid(
                "transpose applies to classical codes".into(),
            )),
        }
    }

    /// Largest exponent spread per axis over all entries (max − min).
    pub fn exponent_span(&self) -> Vec<i64> {
        let mats: Vec<&PolyMatrix> = match &self.body {
            CodeBody::Classical { h } => vec![h],
            CodeBody::Quantum { h_x, h_z } => vec![h_x, h_z],
        };
        let mut span = vec![0i64; self.dim];
        for m in mats {
            for c in 0..m.cols() {
                // a single check's footprint spans all rows of its column
                let mut lo = vec![i64::MAX; self.dim];
                let mut hi = vec![i64::MIN; self.dim];
                for r in 0..m.rows() {
                    if let Some((a, b)) = m.get(r, c).exponent_box() {
                        for k in 0..self.dim {
                            lo[k] = lo[k].min(a[k]);
                            hi[k] = hi[k].max(b[k]);
                        }
                    }
                }
                for k in 0..self.dim {
                    if lo[k] <= hi[k] {
                        span[k] = span[k].max(hi[k] - lo[k]);
                    }
                }
            }
        }
        span
    }

    /// Explicit sparse matrices on an `L_1 × … × L_D` lattice.
    pub fn instantiate(&self, l: &[usize], boundary: Boundary) -> Result<CodeInstance> {
        let l = broadcast_l(l, self.dim)?;
        if boundary == Boundary::OpenInterior {
            let span = self.exponent_span();
            for (k, (&lk, &sk)) in l.iter().zip(&span).enumerate() {
                if (lk as i64) <= sk {
                    return Err(Error::Invalid(format!(
                        "open-interior box needs L > {sk} along axis {k}, got {lk}"
                    )));
                }
            }
        }
        let lattice = Lattice::new(l.clone(), self.n_site());
        let n = lattice.n();
        let matrices = match &self.body {
            CodeBody::Classical { h } => {
                let (m, labels) = place_classical(&lattice, h, boundary)?;
                InstanceMatrices::Classical {
                    h: m,
                    check_labels: labels,
                }
            }
            CodeBody::Quantum { h_x, h_z } => {
                let (mx, lx) = place_quantum(&lattice, h_z, boundary)?;
                let (mz, lz) = place_quantum(&lattice, h_x, boundary)?;
                InstanceMatrices::Quantum {
                    h_x: mx,
                    h_z: mz,
                    z_check_labels: lx,
                    x_check_labels: lz,
                }
            }
        };
        Ok(CodeInstance {
            field: self.field.clone(),
            n,
            matrices,
            lattice: Some(lattice),
            boundary: Some(boundary),
            provenance: Provenance {
                family: self.family.clone(),
                l,
                spec: Some(self.to_spec()),
            },
        })
    }

    /// Canonical serializable spec (explicit matrices).
    pub fn to_spec(&self) -> CodeSpec {
        let field = FieldSpec::of(&self.field);
        match &self.body {
            CodeBody::Classical { h } => CodeSpec::Classical {
                name: self.family.clone(),
                field,
                dim: self.dim,
                h: h.to_strings(),
            },
            CodeBody::Quantum { h_x, h_z } => CodeSpec::Quantum {
                name: self.family.clone(),
                field,
                dim: self.dim,
                h_x: h_x.to_strings(),
                h_z: h_z.to_strings(),
            },
        }
    }
}

fn broadcast_l(l: &[usize], dim: usize) -> Result<Vec<usize>> {
    let l = match l.len() {
        1 => vec![l[0]; dim],
        k if k == dim => l.to_vec(),
        k => {
            return Err(Error::Shape(format!(
                "L has {k} entries, lattice dimension is {dim}"
            )));
        }
    };
    if l.iter().any(|&x| x < 2) {
        return Err(Error::Invalid("every L must be at least 2".into()));
    }
    Ok(l)
}

fn poly(s: &str, field: &Field, dim: usize) -> LaurentPoly {
    LaurentPoly::parse(s, field, dim).expect("constant polynomial literal")
}

/// Toric code over F_2: `h_X = (1+x^-1; 1+y^-1)`, `h_Z = (1+y; 1+x)`.
pub fn make_toric() -> TransInvCode {
    make_toric_over(&Field::binary())
}

/// Toric code over any F_q with the signed boundary maps
/// `h_X = (1-x^-1; 1-y^-1)`, `h_Z = (1-y; x-1)`; over F_2 these are the
/// unsigned symbols above.
pub fn make_toric_over(field: &Field) -> TransInvCode {
    let h_x = PolyMatrix::column(vec![poly("1-x^-1", field, 2), poly("1-y^-1", field, 2)]).unwrap();
    let h_z = PolyMatrix::column(vec![poly("1-y", field, 2), poly("x-1", field, 2)]).unwrap();
    TransInvCode::quantum("toric", h_x, h_z).expect("toric code is CSS")
}

/// `h_X = (conj f; conj g)`, `h_Z = (g; -f)`.
pub fn make_haah_family(f: &LaurentPoly, g: &LaurentPoly) -> Result<TransInvCode> {
    if f.field() != g.field() || f.dim() != g.dim() {
        return Err(Error::Mismatch("f and g live over different rings".into()));
    }
    let h_x = PolyMatrix::column(vec![f.conj(), g.conj()])?;
    let h_z = PolyMatrix::column(vec![g.clone(), f.neg()])?;
    TransInvCode::quantum("haah", h_x, h_z)
}

/// Product of two m-vertex bipartite edge-function families.
///
/// Qubits per site: the `(j1, i2)` block (index `j1*m2 + i2`) followed by the
/// `(i1, j2)` block (index `m1*m2 + i1*m2 + j2`). X-check `(i1, i2)` has index
/// `i1*m2 + i2`, Z-check `(j1, j2)` has index `j1*m2 + j2`.
pub fn make_bipartite_product(
    f: &[Vec<LaurentPoly>],
    g: &[Vec<LaurentPoly>],
) -> Result<TransInvCode> {
    let m1 = f.len();
    let m2 = g.len();
    if m1 == 0 || m2 == 0 {
        return Err(Error::Invalid("m1 and m2 must be positive".into()));
    }
    if f.iter().any(|r| r.len() != m1) || g.iter().any(|r| r.len() != m2) {
        return Err(Error::Shape(
            "edge functions must be m1×m1 and m2×m2".into(),
        ));
    }
    let field = f[0][0].field().clone();
    let dim = f[0][0].dim();
    if f.iter()
        .chain(g)
        .flatten()
        .any(|p| p.field() != &field || p.dim() != dim)
    {
        return Err(Error::Mismatch(
            "edge functions live over different rings".into(),
        ));
    }
    let n = 2 * m1 * m2;
    let mc = m1 * m2;
    let mut h_x = PolyMatrix::zeros(&field, dim, n, mc);
    let mut h_z = PolyMatrix::zeros(&field, dim, n, mc);
    let left = |j1: usize, i2: usize| j1 * m2 + i2;
    let right = |i1: usize, j2: usize| mc + i1 * m2 + j2;
    for i1 in 0..m1 {
        for i2 in 0..m2 {
            let xc = i1 * m2 + i2;
            for j1 in 0..m1 {
                h_x.set(left(j1, i2), xc, f[i1][j1].conj())?;
            }
            for j2 in 0..m2 {
                h_x.set(right(i1, j2), xc, g[i2][j2].conj())?;
            }
        }
    }
    for j1 in 0..m1 {
        for j2 in 0..m2 {
            let zc = j1 * m2 + j2;
            for i2 in 0..m2 {
                h_z.set(left(j1, i2), zc, g[i2][j2].clone())?;
            }
            for i1 in 0..m1 {
                h_z.set(right(i1, j2), zc, f[i1][j1].neg())?;
            }
        }
    }
    let family = if m1 == 1 && m2 == 1 {
        "haah"
    } else {
        "bipartite-product"
    };
    TransInvCode::quantum(family, h_x, h_z)
}

/// Classical 2D code with `h_{i,j} = f_{i,j}`.
pub fn make_classical_grid(f: &[Vec<LaurentPoly>]) -> Result<TransInvCode> {
    let m = f.len();
    if m == 0 || f.iter().any(|r| r.len() != m) {
        return Err(Error::Shape(
            "classical grid needs an m×m matrix, m ≥ 1".into(),
        ));
    }
    let h = PolyMatrix::from_rows(f.to_vec())?;
    if h.dim() != 2 {
        return Err(Error::Mismatch(format!(
            "classical grid is two-dimensional, got D={}",
            h.dim()
        )));
    }
    Ok(TransInvCode::classical("classical-grid", h))
}

/// Random `m×m` classical grid code whose entries are F_q-combinations of
/// `1, x, y, xy` with uniform coefficients; zero entries are redrawn.
pub fn random_classical_grid<R: rand::Rng + ?Sized>(
    m: usize,
    field: &Field,
    rng: &mut R,
) -> Result<TransInvCode> {
    let support = [[0i64, 0], [1, 0], [0, 1], [1, 1]];
    let f: Vec<Vec<LaurentPoly>> = (0..m)
        .map(|_| {
            (0..m)
                .map(|_| loop {
                    let terms = support.iter().map(|e| (e.to_vec(), field.random(rng)));
                    let p =
                        LaurentPoly::from_terms(field, 2, terms).expect("two-dimensional terms");
                    if !p.is_zero() {
                        break p;
                    }
                })
                .collect()
        })
        .collect();
    make_classical_grid(&f)
}

/// Ising model: `h = (1+x)` for D=1 and the 1×2 row `(1+x, 1+y)` for D=2
/// (one bit, two bond checks per site).
pub fn make_ising(dim: usize) -> Result<TransInvCode> {
    let field = Field::binary();
    let h = match dim {
        1 => PolyMatrix::row(vec![poly("1+x", &field, 1)])?,
        2 => PolyMatrix::row(vec![poly("1+x", &field, 2), poly("1+y", &field, 2)])?,
        _ => {
            return Err(Error::Invalid(format!(
                "Ising model supports D ∈ {{1,2}}, got {dim}"
            )))
        }
    };
    Ok(TransInvCode::classical("ising", h))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    Torus,
    OpenInterior,
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundary::Torus => "torus",
            Boundary::OpenInterior => "open-interior",
        })
    }
}

impl std::str::FromStr for Boundary {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "torus" => Ok(Boundary::Torus),
            "open-interior" | "open" => Ok(Boundary::OpenInterior),
            _ => Err(Error::Parse(format!("unknown boundary '{s}'"))),
        }
    }
}

/// Site/coordinate bookkeeping for a lattice of shape `l`. Sites are
/// numbered with axis 0 varying fastest; coordinate `i` of site `s` has
/// flat index `site_index(s) * per_site + i`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Lattice {
    l: Vec<usize>,
    per_site: usize,
}

impl Lattice {
    pub fn new(l: Vec<usize>, per_site: usize) -> Self {
        Lattice { l, per_site }
    }

    pub fn shape(&self) -> &[usize] {
        &self.l
    }

    pub fn dim(&self) -> usize {
        self.l.len()
    }

    pub fn per_site(&self) -> usize {
        self.per_site
    }

    pub fn sites(&self) -> usize {
        self.l.iter().product()
    }

    pub fn n(&self) -> usize {
        self.sites() * self.per_site
    }

    /// Index of a site, reducing each component mod L.
    pub fn site_index_wrapped(&self, s: &[i64]) -> usize {
        let mut idx = 0;
        for k in (0..self.l.len()).rev() {
            idx = idx * self.l[k] + s[k].rem_euclid(self.l[k] as i64) as usize;
        }
        idx
    }

    /// Index of a site inside the box, or `None` outside.
    pub fn site_index_inside(&self, s: &[i64]) -> Option<usize> {
        if s.iter()
            .zip(&self.l)
            .all(|(&x, &l)| x >= 0 && (x as usize) < l)
        {
            Some(self.site_index_wrapped(s))
        } else {
            None
        }
    }

    pub fn site_coords(&self, mut idx: usize) -> Vec<i64> {
        let mut s = Vec::with_capacity(self.l.len());
        for &l in &self.l {
            s.push((idx % l) as i64);
            idx /= l;
        }
        s
    }

    pub fn coord_index(&self, site: &[i64], i: usize) -> usize {
        self.site_index_wrapped(site) * self.per_site + i
    }

    /// (site vector, per-site index) of a flat coordinate.
    pub fn coord_of(&self, idx: usize) -> (Vec<i64>, usize) {
        (self.site_coords(idx / self.per_site), idx % self.per_site)
    }

    pub fn all_sites(&self) -> impl Iterator<Item = Vec<i64>> + '_ {
        (0..self.sites()).map(|i| self.site_coords(i))
    }
}

/// Which check a matrix row is: (site, per-site check type).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CheckLabel {
    pub site: Vec<i64>,
    pub kind: usize,
}

fn place_quantum(
    lat: &Lattice,
    sym: &PolyMatrix,
    bc: Boundary,
) -> Result<(SparseFqMatrix, Vec<CheckLabel>)> {
    let field = sym.field().clone();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for s in lat.all_sites() {
        for j in 0..sym.cols() {
            let mut entries: BTreeMap<usize, Fe> = BTreeMap::new();
            let mut inside = true;
            for i in 0..sym.rows() {
                for (m, c) in sym.get(i, j).terms() {
                    let t: Vec<i64> = s.iter().zip(&m.0).map(|(a, b)| a + b).collect();
                    let site = match bc {
                        Boundary::Torus => lat.site_index_wrapped(&t),
                        Boundary::OpenInterior => match lat.site_index_inside(&t) {
                            Some(x) => x,
                            None => {
                                inside = false;
                                continue;
                            }
                        },
                    };
                    let e = entries.entry(site * lat.per_site() + i).or_insert(Fe::ZERO);
                    *e = field.add(*e, c);
                }
            }
            if !inside {
                continue;
            }
            rows.push(
                entries
                    .into_iter()
                    .filter(|(_, v)| !v.is_zero())
                    .collect::<Vec<_>>(),
            );
            labels.push(CheckLabel {
                site: s.clone(),
                kind: j,
            });
        }
    }
    Ok((SparseFqMatrix::from_rows(&field, lat.n(), rows), labels))
}

fn place_classical(
    lat: &Lattice,
    h: &PolyMatrix,
    bc: Boundary,
) -> Result<(SparseFqMatrix, Vec<CheckLabel>)> {
    // check j at site t reads bit i at t - v with coefficient h[i][j]_v
    let field = h.field().clone();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for t in lat.all_sites() {
        for j in 0..h.cols() {
            let mut entries: BTreeMap<usize, Fe> = BTreeMap::new();
            let mut inside = true;
            for i in 0..h.rows() {
                for (m, c) in h.get(i, j).terms() {
                    let u: Vec<i64> = t.iter().zip(&m.0).map(|(a, b)| a - b).collect();
                    let site = match bc {
                        Boundary::Torus => lat.site_index_wrapped(&u),
                        Boundary::OpenInterior => match lat.site_index_inside(&u) {
                            Some(x) => x,
                            None => {
                                inside = false;
                                continue;
                            }
                        },
                    };
                    let e = entries.entry(site * lat.per_site() + i).or_insert(Fe::ZERO);
                    *e = field.add(*e, c);
                }
            }
            if !inside {
                continue;
            }
            rows.push(
                entries
                    .into_iter()
                    .filter(|(_, v)| !v.is_zero())
                    .collect::<Vec<_>>(),
            );
            labels.push(CheckLabel {
                site: t.clone(),
                kind: j,
            });
        }
    }
    Ok((SparseFqMatrix::from_rows(&field, lat.n(), rows), labels))
}

#[derive(Clone, Debug)]
pub enum InstanceMatrices {
    Classical {
        h: SparseFqMatrix,
        check_labels: Vec<CheckLabel>,
    },
    Quantum {
        /// Rows are Z-checks.
        h_x: SparseFqMatrix,
        /// Rows are X-checks.
        h_z: SparseFqMatrix,
        z_check_labels: Vec<CheckLabel>,
        x_check_labels: Vec<CheckLabel>,
    },
}

#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub family: String,
    #[serde(rename = "L")]
    pub l: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spec: Option<CodeSpec>,
}

/// Explicit sparse parity-check matrices of a code on a finite lattice (or
/// assembled from a Tanner graph, in which case there is no lattice).
#[derive(Clone, Debug)]
pub struct CodeInstance {
    field: Field,
    n: usize,
    matrices: InstanceMatrices,
    lattice: Option<Lattice>,
    boundary: Option<Boundary>,
    provenance: Provenance,
}

impl CodeInstance {
    /// Quantum instance from explicit matrices; checks `H_X H_Z^T = 0`.
    pub fn from_quantum_matrices(
        family: &str,
        h_x: SparseFqMatrix,
        h_z: SparseFqMatrix,
    ) -> Result<Self> {
        if h_x.cols() != h_z.cols() || h_x.field() != h_z.field() {
            return Err(Error::Shape(
                "H_X and H_Z must share field and column count".into(),
            ));
        }
        let prod = h_x.mul(&h_z.transpose())?;
        if !prod.is_zero() {
            return Err(Error::NotCss(prod.nnz()));
        }
        let z_labels = (0..h_x.rows())
            .map(|r| CheckLabel {
                site: vec![],
                kind: r,
            })
            .collect();
        let x_labels = (0..h_z.rows())
            .map(|r| CheckLabel {
                site: vec![],
                kind: r,
            })
            .collect();
        Ok(CodeInstance {
            field: h_x.field().clone(),
            n: h_x.cols(),
            matrices: InstanceMatrices::Quantum {
                h_x,
                h_z,
                z_check_labels: z_labels,
                x_check_labels: x_labels,
            },
            lattice: None,
            boundary: None,
            provenance: Provenance {
                family: family.to_string(),
                l: vec![],
                spec: None,
            },
        })
    }

    pub fn from_classical_matrix(family: &str, h: SparseFqMatrix) -> Self {
        let labels = (0..h.rows())
            .map(|r| CheckLabel {
                site: vec![],
                kind: r,
            })
            .collect();
        CodeInstance {
            field: h.field().clone(),
            n: h.cols(),
            matrices: InstanceMatrices::Classical {
                h,
                check_labels: labels,
            },
            lattice: None,
            boundary: None,
            provenance: Provenance {
                family: family.to_string(),
                l: vec![],
                spec: None,
            },
        }
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> CodeKind {
        match self.matrices {
            InstanceMatrices::Classical { .. } => CodeKind::Classical,
            InstanceMatrices::Quantum { .. } => CodeKind::Quantum,
        }
    }

    pub fn is_quantum(&self) -> bool {
        self.kind() == CodeKind::Quantum
    }

    pub fn matrices(&self) -> &InstanceMatrices {
        &self.matrices
    }

    pub fn lattice(&self) -> Option<&Lattice> {
        self.lattice.as_ref()
    }

    pub fn boundary(&self) -> Option<Boundary> {
        self.boundary
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn quantum_matrices(&self) -> Result<(&SparseFqMatrix, &SparseFqMatrix)> {
        match &self.matrices {
            InstanceMatrices::Quantum { h_x, h_z, .. } => Ok((h_x, h_z)),
            InstanceMatrices::Classical { .. } => {
                Err(Error::Invalid("expected a quantum instance".into()))
            }
        }
    }

    pub fn classical_matrix(&self) -> Result<&SparseFqMatrix> {
        match &self.matrices {
            InstanceMatrices::Classical { h, .. } => Ok(h),
            InstanceMatrices::Quantum { .. } => {
                Err(Error::Invalid("expected a classical instance".into()))
            }
        }
    }

    /// Sectors with their own energy: `[Classical]` or `[X, Z]`.
    pub fn sectors(&self) -> Vec<Sector> {
        if self.is_quantum() {
            vec![Sector::X, Sector::Z]
        } else {
            vec![Sector::Classical]
        }
    }

    /// The matrix whose syndrome defines energy in a sector.
    pub fn sector_matrix(&self, sector: Sector) -> Result<&SparseFqMatrix> {
        match (&self.matrices, sector) {
            (InstanceMatrices::Classical { h, .. }, Sector::Classical) => Ok(h),
            (InstanceMatrices::Quantum { h_x, .. }, Sector::X) => Ok(h_x),
            (InstanceMatrices::Quantum { h_z, .. }, Sector::Z) => Ok(h_z),
            _ => Err(Error::Invalid(format!(
                "sector {sector} does not match a {:?} instance",
                self.kind()
            ))),
        }
    }

    /// Generators of the trivial words in a sector (`None` when only 0 is trivial).
    pub fn stabilizer_matrix(&self, sector: Sector) -> Result<Option<&SparseFqMatrix>> {
        match (&self.matrices, sector) {
            (InstanceMatrices::Classical { .. }, Sector::Classical) => Ok(None),
            (InstanceMatrices::Quantum { h_z, .. }, Sector::X) => Ok(Some(h_z)),
            (InstanceMatrices::Quantum { h_x, .. }, Sector::Z) => Ok(Some(h_x)),
            _ => Err(Error::Invalid(format!(
                "sector {sector} does not match a {:?} instance",
                self.kind()
            ))),
        }
    }

    pub fn check_labels(&self, sector: Sector) -> Result<&[CheckLabel]> {
        match (&self.matrices, sector) {
            (InstanceMatrices::Classical { check_labels, .. }, Sector::Classical) => {
                Ok(check_labels)
            }
            (InstanceMatrices::Quantum { z_check_labels, .. }, Sector::X) => Ok(z_check_labels),
            (InstanceMatrices::Quantum { x_check_labels, .. }, Sector::Z) => Ok(x_check_labels),
            _ => Err(Error::Invalid(format!(
                "sector {sector} does not match a {:?} instance",
                self.kind()
            ))),
        }
    }

    /// Cyclic shift of a word by `v` lattice units (torus instances only).
    pub fn shift_word(&self, w: &SparseWord, v: &[i64]) -> Result<SparseWord> {
        let lat = self.require_torus()?;
        let entries = w.entries().map(|(idx, c)| {
            let (s, i) = lat.coord_of(idx);
            let t: Vec<i64> = s.iter().zip(v).map(|(a, b)| a + b).collect();
            (lat.coord_index(&t, i), c)
        });
        SparseWord::from_entries(self.n, entries)
    }

    /// Cyclic shift of a syndrome vector of the given sector.
    pub fn shift_syndrome(&self, sector: Sector, s: &SparseWord, v: &[i64]) -> Result<SparseWord> {
        let lat = self.require_torus()?;
        let labels = self.check_labels(sector)?;
        let per = labels.iter().map(|l| l.kind).max().map_or(1, |k| k + 1);
        let entries = s.entries().map(|(r, c)| {
            let lab = &labels[r];
            let t: Vec<i64> = lab.site.iter().zip(v).map(|(a, b)| a + b).collect();
            (lat.site_index_wrapped(&t) * per + lab.kind, c)
        });
        SparseWord::from_entries(s.len(), entries)
    }

    fn require_torus(&self) -> Result<&Lattice> {
        match (&self.lattice, self.boundary) {
            (Some(l), Some(Boundary::Torus)) => Ok(l),
            _ => Err(Error::Invalid("operation needs a torus instance".into())),
        }
    }

    /// Word from a Laurent polynomial placed on coordinate `i` of every site
    /// (exponents reduced mod L; torus only).
    pub fn word_from_poly(&self, c: &LaurentPoly, i: usize) -> Result<SparseWord> {
        let lat = self.require_torus()?;
        if i >= lat.per_site() || c.dim() != lat.dim() {
            return Err(Error::Shape("polynomial does not fit the lattice".into()));
        }
        let mut dense = vec![Fe::ZERO; self.n];
        for (m, v) in c.terms() {
            let idx = lat.coord_index(&m.0, i);
            dense[idx] = self.field.add(dense[idx], v);
        }
        Ok(SparseWord::from_dense(&dense))
    }

    /// Inverse of [`CodeInstance::word_from_poly`] for coordinate `i`.
    pub fn poly_from_word(&self, w: &SparseWord, i: usize) -> Result<LaurentPoly> {
        let lat = self
            .lattice
            .as_ref()
            .ok_or_else(|| Error::Invalid("instance has no lattice".into()))?;
        let terms = w
            .entries()
            .filter(|(idx, _)| idx % lat.per_site() == i)
            .map(|(idx, v)| (lat.coord_of(idx).0, v));
        LaurentPoly::from_terms(&self.field, lat.dim(), terms)
    }
}

/// Hand-built classical code: explicit (check, coordinate, coefficient)
/// triples.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TannerSpec {
    pub n: usize,
    pub checks: usize,
    pub entries: Vec<(usize, usize, u32)>,
}

pub fn classical_from_tanner(spec: &TannerSpec, field: &Field) -> Result<CodeInstance> {
    let mut seen: BTreeMap<(usize, usize), Fe> = BTreeMap::new();
    for &(r, c, v) in &spec.entries {
        if r >= spec.checks || c >= spec.n {
            return Err(Error::Shape(format!(
                "entry ({r}, {c}) outside {}×{}",
                spec.checks, spec.n
            )));
        }
        let v = field.element(v)?;
        if v.is_zero() {
            return Err(Error::Invalid(format!("zero coefficient at ({r}, {c})")));
        }
        if let Some(&old) = seen.get(&(r, c)) {
            if old != v {
                return Err(Error::Invalid(format!(
                    "conflicting coefficients at ({r}, {c})"
                )));
            }
            continue;
        }
        seen.insert((r, c), v);
    }
    let h = SparseFqMatrix::from_triples(
        field,
        spec.checks,
        spec.n,
        seen.into_iter().map(|((r, c), v)| (r, c, v)),
    )?;
    Ok(CodeInstance::from_classical_matrix("tanner", h))
}

/// Human-writable code description. Family entries are expanded by
/// [`CodeSpec::build`]; [`TransInvCode::to_spec`] always emits the explicit
/// `quantum`/`classical` form, which is the canonical one.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CodeSpec {
    Toric {
        #[serde(default = "binary_spec")]
        field: FieldSpec,
    },
    Haah {
        field: FieldSpec,
        #[serde(default = "three")]
        dim: usize,
        f: String,
        g: String,
    },
    BipartiteProduct {
        field: FieldSpec,
        #[serde(default = "three")]
        dim: usize,
        f: Vec<Vec<String>>,
        g: Vec<Vec<String>>,
    },
    ClassicalGrid {
        field: FieldSpec,
        f: Vec<Vec<String>>,
        #[serde(default)]
        transpose: bool,
    },
    Ising {
        dim: usize,
    },
    Quantum {
        #[serde(default)]
        name: String,
        field: FieldSpec,
        dim: usize,
        h_x: Vec<Vec<String>>,
        h_z: Vec<Vec<String>>,
    },
    Classical {
        #[serde(default)]
        name: String,
        field: FieldSpec,
        dim: usize,
        h: Vec<Vec<String>>,
    },
}

fn binary_spec() -> FieldSpec {
    FieldSpec { p: 2, e: 1 }
}

fn three() -> usize {
    3
}

fn parse_grid(rows: &[Vec<String>], field: &Field, dim: usize) -> Result<Vec<Vec<LaurentPoly>>> {
    rows.iter()
        .map(|r| {
            r.iter()
                .map(|s| LaurentPoly::parse(s, field, dim))
                .collect()
        })
        .collect()
}

impl CodeSpec {
    pub fn build(&self) -> Result<TransInvCode> {
        match self {
            CodeSpec::Toric { field } => Ok(make_toric_over(&field.build()?)),
            CodeSpec::Haah { field, dim, f, g } => {
                let fld = field.build()?;
                make_haah_family(
                    &LaurentPoly::parse(f, &fld, *dim)?,
                    &LaurentPoly::parse(g, &fld, *dim)?,
                )
            }
            CodeSpec::BipartiteProduct { field, dim, f, g } => {
                let fld = field.build()?;
                make_bipartite_product(&parse_grid(f, &fld, *dim)?, &parse_grid(g, &fld, *dim)?)
            }
            CodeSpec::ClassicalGrid {
                field,
                f,
                transpose,
            } => {
                let code = make_classical_grid(&parse_grid(f, &field.build()?, 2)?)?;
                if *transpose {
                    code.transpose()
                } else {
                    Ok(code)
                }
            }
            CodeSpec::Ising { dim } => make_ising(*dim),
            CodeSpec::Quantum {
                name,
                field,
                dim,
                h_x,
                h_z,
            } => {
                let fld = field.build()?;
                let name = if name.is_empty() { "quantum" } else { name };
                TransInvCode::quantum(
                    name,
                    PolyMatrix::parse(h_x, &fld, *dim)?,
                    PolyMatrix::parse(h_z, &fld, *dim)?,
                )
            }
            CodeSpec::Classical {
                name,
                field,
                dim,
                h,
            } => {
                let fld = field.build()?;
                let name = if name.is_empty() { "classical" } else { name };
                Ok(TransInvCode::classical(
                    name,
                    PolyMatrix::parse(h, &fld, *dim)?,
                ))
            }
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    /// Canonical explicit form.
    pub fn canonical(&self) -> Result<CodeSpec> {
        Ok(self.build()?.to_spec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{quantum_dimension, rank};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(s: &str, field: &Field, dim: usize) -> LaurentPoly {
        LaurentPoly::parse(s, field, dim).unwrap()
    }

    fn random_poly(
        rng: &mut ChaCha8Rng,
        field: &Field,
        dim: usize,
        support: &[Vec<i64>],
    ) -> LaurentPoly {
        let terms = support.iter().map(|m| (m.clone(), field.random(rng)));
        LaurentPoly::from_terms(field, dim, terms).unwrap()
    }

    fn cube_support() -> Vec<Vec<i64>> {
        let mut v = Vec::new();
        for z in 0..2 {
            for y in 0..2 {
                for x in 0..2 {
                    v.push(vec![x, y, z]);
                }
            }
        }
        v
    }

    #[test]
    fn toric_symbolic_and_small_instances() {
        let t = make_toric();
        assert!(t.validate_css().unwrap().is_valid());
        assert_eq!(t.n_site(), 2);
        assert_eq!(t.checks_per_site(), (1, 1));
        let i2 = t.instantiate(&[2], Boundary::Torus).unwrap();
        let (hx, hz) = i2.quantum_matrices().unwrap();
        assert_eq!((i2.n(), hx.rows(), hz.rows()), (8, 4, 4));
        assert_eq!((rank(hx), rank(hz)), (3, 3));
        assert_eq!(quantum_dimension(&i2).unwrap(), 2);
        let i3 = t.instantiate(&[3], Boundary::Torus).unwrap();
        let (hx, hz) = i3.quantum_matrices().unwrap();
        assert_eq!(i3.n(), 18);
        assert!(hx.mul(&hz.transpose()).unwrap().is_zero());
        assert_eq!(quantum_dimension(&i3).unwrap(), 2);
    }

    #[test]
    fn toric_over_odd_field_commutes() {
        let f = Field::new(5, 1).unwrap();
        let inst = make_toric_over(&f)
            .instantiate(&[3], Boundary::Torus)
            .unwrap();
        assert_eq!(quantum_dimension(&inst).unwrap(), 2);
    }

    #[test]
    fn scalar_symbols_are_not_css() {
        let f = Field::binary();
        let one = PolyMatrix::row(vec![LaurentPoly::one(&f, 1)]).unwrap();
        let report = css_product(&one, &one).unwrap();
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].2, "1");
        assert_eq!(
            TransInvCode::quantum("x", one.clone(), one),
            Err(Error::NotCss(1))
        );
    }

    #[test]
    fn haah_cubic_code() {
        let f2 = Field::binary();
        let code = make_haah_family(&p("1+x+y+z", &f2, 3), &p("1+x*y+y*z+x*z", &f2, 3)).unwrap();
        let inst = code.instantiate(&[2], Boundary::Torus).unwrap();
        assert_eq!(inst.n(), 16);
        let (hx, hz) = inst.quantum_matrices().unwrap();
        assert!(hx.mul(&hz.transpose()).unwrap().is_zero());
        let same = make_haah_family(&p("1+x", &f2, 3), &p("1+x", &f2, 3)).unwrap();
        assert!(same.validate_css().unwrap().is_valid());
        let f3 = Field::new(3, 1).unwrap();
        assert!(matches!(
            make_haah_family(&p("1+x", &f2, 3), &p("1+x", &f3, 3)),
            Err(Error::Mismatch(_))
        ));
    }

    #[test]
    fn bipartite_reduces_to_haah() {
        let f5 = Field::new(5, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = random_poly(&mut rng, &f5, 3, &cube_support());
        let g = random_poly(&mut rng, &f5, 3, &cube_support());
        let a = make_haah_family(&f, &g).unwrap();
        let b = make_bipartite_product(&[vec![f]], &[vec![g]]).unwrap();
        assert_eq!(a.body(), b.body());
        let ia = a.instantiate(&[3], Boundary::Torus).unwrap();
        let ib = b.instantiate(&[3], Boundary::Torus).unwrap();
        assert_eq!(
            ia.quantum_matrices().unwrap(),
            ib.quantum_matrices().unwrap()
        );
    }

    #[test]
    fn bipartite_m2_shapes_and_entries() {
        let f7 = Field::new(7, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let fs: Vec<Vec<LaurentPoly>> = (0..2)
            .map(|_| {
                (0..2)
                    .map(|_| random_poly(&mut rng, &f7, 3, &cube_support()))
                    .collect()
            })
            .collect();
        let gs: Vec<Vec<LaurentPoly>> = (0..2)
            .map(|_| {
                (0..2)
                    .map(|_| random_poly(&mut rng, &f7, 3, &cube_support()))
                    .collect()
            })
            .collect();
        let code = make_bipartite_product(&fs, &gs).unwrap();
        let CodeBody::Quantum { h_x, h_z } = code.body() else {
            panic!()
        };
        let hxt = h_x.conj_transpose();
        assert_eq!((hxt.rows(), hxt.cols()), (4, 8));
        assert_eq!((h_z.rows(), h_z.cols()), (8, 4));
        // X-check (i1,i2) row of conj(h_X)^T: f_{i1,j1} at qubit (j1,i2), g_{i2,j2} at qubit (i1,j2)
        for i1 in 0..2 {
            for i2 in 0..2 {
                for j1 in 0..2 {
                    assert_eq!(hxt.get(i1 * 2 + i2, j1 * 2 + i2), &fs[i1][j1]);
                }
                for j2 in 0..2 {
                    assert_eq!(hxt.get(i1 * 2 + i2, 4 + i1 * 2 + j2), &gs[i2][j2]);
                }
            }
        }
        // h_Z column (j1,j2): g_{i2,j2} at qubit (j1,i2), -f_{i1,j1} at qubit (i1,j2)
        for j1 in 0..2 {
            for j2 in 0..2 {
                for i2 in 0..2 {
                    assert_eq!(h_z.get(j1 * 2 + i2, j1 * 2 + j2), &gs[i2][j2]);
                }
                for i1 in 0..2 {
                    assert_eq!(h_z.get(4 + i1 * 2 + j2, j1 * 2 + j2), &fs[i1][j1].neg());
                }
            }
        }
    }

    #[test]
    fn ising_instances() {
        let c = make_ising(2).unwrap();
        let inst = c.instantiate(&[4], Boundary::Torus).unwrap();
        let h = inst.classical_matrix().unwrap();
        assert_eq!((inst.n(), h.rows()), (16, 32));
        let single = SparseWord::from_entries(16, [(5, Fe::ONE)]).unwrap();
        assert_eq!(h.syndrome_weight(&single).unwrap(), 4);
        let i3 = c.instantiate(&[3], Boundary::Torus).unwrap();
        assert_eq!(crate::linalg::classical_dimension(&i3).unwrap(), 1);
        assert!(make_ising(3).is_err());
        let line = make_ising(1)
            .unwrap()
            .instantiate(&[5], Boundary::Torus)
            .unwrap();
        let h = line.classical_matrix().unwrap();
        assert_eq!(rank(h), 4);
        let ones = SparseWord::from_dense(&[Fe::ONE; 5]);
        assert!(h.mul_word(&ones).unwrap().is_zero());
    }

    #[test]
    fn trivial_grid_code() {
        let f2 = Field::binary();
        let code = make_classical_grid(&[vec![LaurentPoly::one(&f2, 2)]]).unwrap();
        let inst = code.instantiate(&[3], Boundary::Torus).unwrap();
        let h = inst.classical_matrix().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..20 {
            let dense: Vec<Fe> = (0..9).map(|_| f2.random(&mut rng)).collect();
            let w = SparseWord::from_dense(&dense);
            assert_eq!(h.syndrome_weight(&w).unwrap(), w.weight());
        }
    }

    #[test]
    fn classical_syndrome_is_h_transpose_times_word() {
        // the syndrome polynomial of c under h = f is f·c
        let f2 = Field::binary();
        let f = p("1+x+y", &f2, 2);
        let inst = make_classical_grid(&[vec![f.clone()]])
            .unwrap()
            .instantiate(&[8], Boundary::Torus)
            .unwrap();
        let c = p("1+x^2*y+y^3", &f2, 2);
        let w = inst.word_from_poly(&c, 0).unwrap();
        let s = inst.classical_matrix().unwrap().mul_word(&w).unwrap();
        let expect = inst.word_from_poly(&f.mul(&c).unwrap(), 0).unwrap();
        assert_eq!(s, expect);
    }

    #[test]
    fn open_interior_drops_boundary_checks() {
        let t = make_toric();
        let inst = t.instantiate(&[3], Boundary::OpenInterior).unwrap();
        let (hx, hz) = inst.quantum_matrices().unwrap();
        assert_eq!(inst.n(), 18);
        // Z-checks use offsets {0,x,y}: kept at sites with x,y ≤ 1; same count for X-checks
        assert_eq!(hx.rows(), 4);
        assert_eq!(hz.rows(), 4);
        assert!(hx.mul(&hz.transpose()).unwrap().is_zero());
        assert!(t.instantiate(&[1], Boundary::OpenInterior).is_err());
        let f2 = Field::binary();
        let wide = make_classical_grid(&[vec![p("1+x^3", &f2, 2)]]).unwrap();
        assert!(wide.instantiate(&[3], Boundary::OpenInterior).is_err());
        assert!(wide.instantiate(&[4], Boundary::OpenInterior).is_ok());
    }

    #[test]
    fn per_axis_lengths() {
        let inst = make_toric().instantiate(&[2, 3], Boundary::Torus).unwrap();
        assert_eq!(inst.n(), 12);
        assert_eq!(inst.lattice().unwrap().shape(), &[2, 3]);
        assert!(make_toric()
            .instantiate(&[2, 3, 4], Boundary::Torus)
            .is_err());
    }

    #[test]
    fn tanner_specs() {
        let f2 = Field::binary();
        let ring = TannerSpec {
            n: 4,
            checks: 4,
            entries: (0..4)
                .flat_map(|i| [(i, i, 1), (i, (i + 3) % 4, 1)])
                .collect(),
        };
        let a = classical_from_tanner(&ring, &f2).unwrap();
        let b = make_ising(1)
            .unwrap()
            .instantiate(&[4], Boundary::Torus)
            .unwrap();
        assert_eq!(a.classical_matrix().unwrap(), b.classical_matrix().unwrap());
        let empty = TannerSpec {
            n: 3,
            checks: 0,
            entries: vec![],
        };
        let e = classical_from_tanner(&empty, &f2).unwrap();
        assert_eq!(e.classical_matrix().unwrap().rows(), 0);
        let f3 = Field::new(3, 1).unwrap();
        let bad = TannerSpec {
            n: 2,
            checks: 1,
            entries: vec![(0, 0, 1), (0, 0, 2)],
        };
        assert!(classical_from_tanner(&bad, &f3).is_err());
        let dup = TannerSpec {
            n: 2,
            checks: 1,
            entries: vec![(0, 0, 1), (0, 0, 1)],
        };
        assert_eq!(
            classical_from_tanner(&dup, &f3)
                .unwrap()
                .classical_matrix()
                .unwrap()
                .nnz(),
            1
        );
        let out = TannerSpec {
            n: 2,
            checks: 1,
            entries: vec![(0, 2, 1)],
        };
        assert!(classical_from_tanner(&out, &f3).is_err());
    }

    #[test]
    fn spec_round_trip() {
        let text = r#"{"family":"haah","field":{"p":2},"f":"x+1+y+z","g":"1+x*y+y*z+z*x"}"#;
        let spec = CodeSpec::from_json(text).unwrap();
        let canon = spec.canonical().unwrap();
        let again = CodeSpec::from_json(&canon.to_json()).unwrap();
        assert_eq!(again, canon);
        assert_eq!(again.canonical().unwrap(), canon);
        assert_eq!(again.build().unwrap().body(), spec.build().unwrap().body());
        let ising = CodeSpec::from_json(r#"{"family":"ising","dim":2}"#).unwrap();
        assert_eq!(ising.build().unwrap().checks_per_site(), (2, 0));
        assert!(CodeSpec::from_json(r#"{"family":"ising","dim":2,"bogus":1}"#).is_err());
        let grid = CodeSpec::from_json(
            r#"{"family":"classical-grid","field":{"p":3},"f":[["1+x+y"]],"transpose":true}"#,
        )
        .unwrap();
        assert_eq!(grid.build().unwrap().family(), "classical-grid-transpose");
    }

    fn check_shift_equivariance(inst: &CodeInstance, rng: &mut ChaCha8Rng) {
        let field = inst.field().clone();
        let dim = inst.lattice().unwrap().dim();
        for sector in inst.sectors() {
            let h = inst.sector_matrix(sector).unwrap();
            let dense: Vec<Fe> = (0..inst.n())
                .map(|_| {
                    if rng.gen_bool(0.2) {
                        field.random(rng)
                    } else {
                        Fe::ZERO
                    }
                })
                .collect();
            let w = SparseWord::from_dense(&dense);
            for axis in 0..dim {
                let mut v = vec![0i64; dim];
                v[axis] = 1;
                let lhs = h.mul_word(&inst.shift_word(&w, &v).unwrap()).unwrap();
                let rhs = inst
                    .shift_syndrome(sector, &h.mul_word(&w).unwrap(), &v)
                    .unwrap();
                assert_eq!(lhs, rhs);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn random_families_instantiate_to_commuting_matrices(seed in any::<u64>(), fi in 0usize..4) {
            let field = [Field::binary(), Field::new(3, 1).unwrap(), Field::new(2, 2).unwrap(), Field::new(5, 1).unwrap()][fi].clone();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let sup = cube_support();
            let f = random_poly(&mut rng, &field, 3, &sup);
            let g = random_poly(&mut rng, &field, 3, &sup);
            let haah = make_haah_family(&f, &g).unwrap();
            prop_assert!(haah.validate_css().unwrap().is_valid());
            let fs: Vec<Vec<LaurentPoly>> = (0..2).map(|_| (0..2).map(|_| random_poly(&mut rng, &field, 3, &sup)).collect()).collect();
            let gs: Vec<Vec<LaurentPoly>> = (0..2).map(|_| (0..2).map(|_| random_poly(&mut rng, &field, 3, &sup)).collect()).collect();
            let bip = make_bipartite_product(&fs, &gs).unwrap();
            prop_assert!(bip.validate_css().unwrap().is_valid());
            let grid_sup = vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![1, 1]];
            let cf: Vec<Vec<LaurentPoly>> = (0..2).map(|_| (0..2).map(|_| random_poly(&mut rng, &field, 2, &grid_sup)).collect()).collect();
            let grid = make_classical_grid(&cf).unwrap();
            for l in 2..=4usize {
                for code in [&haah, &bip] {
                    let inst = code.instantiate(&[l], Boundary::Torus).unwrap();
                    let (hx, hz) = inst.quantum_matrices().unwrap();
                    prop_assert!(hx.mul(&hz.transpose()).unwrap().is_zero());
                    // LDPC: row weight bounded by the symbol's column term count
                    let CodeBody::Quantum { h_x, h_z } = code.body() else { unreachable!() };
                    let bound_z = (0..h_z.cols()).map(|c| h_z.column_weight(c)).max().unwrap();
                    let bound_x = (0..h_x.cols()).map(|c| h_x.column_weight(c)).max().unwrap();
                    prop_assert!(hx.max_row_weight() <= bound_z);
                    prop_assert!(hz.max_row_weight() <= bound_x);
                    if l == 3 {
                        check_shift_equivariance(&inst, &mut rng);
                    }
                }
                let gi = grid.instantiate(&[l], Boundary::Torus).unwrap();
                if l == 3 {
                    check_shift_equivariance(&gi, &mut rng);
                }
            }
        }
    }
}
