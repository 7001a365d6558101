//! JSON file formats. Every matrix is a list of rows, every entry a pair `[re, im]`.

use std::path::Path;

use ndarray::{Array2, Array3};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::algebra::{generate_algebra, left_regular_representation, MatrixAlgebra, StructureConstants};
use crate::certify::{Functional, SpanningCertificate};
use crate::cohomology::Bimodule;
use crate::config::ToleranceConfig;
use crate::diagonal::TensorElement;
use crate::error::{Error, Result};
use crate::linalg::{c64, CMatrix};

pub type MatrixJson = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_json(m: &CMatrix) -> MatrixJson {
    m.rows().into_iter().map(|row| row.iter().map(|z| [z.re, z.im]).collect()).collect()
}

pub fn matrix_from_json(m: &MatrixJson) -> Result<CMatrix> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    if let Some(bad) = m.iter().find(|r| r.len() != cols) {
        return Err(Error::Invalid(format!("ragged matrix: row of length {} in a {}-column matrix", bad.len(), cols)));
    }
    let flat: Vec<c64> = m.iter().flatten().map(|&[re, im]| c64::new(re, im)).collect();
    if flat.iter().any(|z| !z.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(Array2::from_shape_vec((rows, cols), flat).expect("shape checked"))
}

fn square_from_json(m: &MatrixJson, n: usize) -> Result<CMatrix> {
    let x = matrix_from_json(m)?;
    if x.nrows() != x.ncols() {
        return Err(Error::NonSquareInput { rows: x.nrows(), cols: x.ncols() });
    }
    if x.nrows() != n {
        return Err(Error::DimensionMismatch { expected: n, found: x.nrows() });
    }
    Ok(x)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StructureConstantsJson {
    pub dim: usize,
    /// `table[i][j][k]` is the coefficient of `e_k` in `e_i e_j`.
    pub table: Vec<Vec<Vec<[f64; 2]>>>,
    pub unit_index: usize,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ambient_dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generators: Option<Vec<MatrixJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structure_constants: Option<StructureConstantsJson>,
}

impl AlgebraFile {
    pub fn from_generators(n: usize, gens: &[CMatrix]) -> Self {
        Self {
            ambient_dim: Some(n),
            generators: Some(gens.iter().map(matrix_to_json).collect()),
            structure_constants: None,
        }
    }

    /// The unital algebra described by the file.
    pub fn build(&self, cfg: &ToleranceConfig) -> Result<MatrixAlgebra> {
        match (&self.generators, &self.structure_constants) {
            (Some(gens), None) => {
                let n = self
                    .ambient_dim
                    .ok_or_else(|| Error::Invalid("`ambient_dim` is required with `generators`".into()))?;
                if n == 0 {
                    return Err(Error::Invalid("`ambient_dim` must be positive".into()));
                }
                let gens = gens.iter().map(|g| square_from_json(g, n)).collect::<Result<Vec<_>>>()?;
                generate_algebra(&gens, true, n, cfg)
            }
            (None, Some(sc)) => {
                let d = sc.dim;
                if d == 0 || sc.table.len() != d || sc.table.iter().flatten().any(|r| r.len() != d) || sc.table.iter().any(|r| r.len() != d) {
                    return Err(Error::Invalid(format!("structure table must be {d}x{d}x{d}")));
                }
                if sc.unit_index >= d {
                    return Err(Error::Invalid(format!("unit_index {} out of range", sc.unit_index)));
                }
                let table = Array3::from_shape_fn((d, d, d), |(i, j, k)| {
                    let [re, im] = sc.table[i][j][k];
                    c64::new(re, im)
                });
                if table.iter().any(|z| !z.is_finite()) {
                    return Err(Error::NonFinite);
                }
                left_regular_representation(&StructureConstants::new(table, sc.unit_index)?, cfg)
            }
            _ => Err(Error::Invalid("exactly one of `generators` and `structure_constants` must be present".into())),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermJson {
    pub a: MatrixJson,
    pub b: MatrixJson,
}

pub fn tensor_to_json(u: &TensorElement) -> Vec<TermJson> {
    u.terms()
        .iter()
        .map(|(a, b)| TermJson { a: matrix_to_json(a), b: matrix_to_json(b) })
        .collect()
}

pub fn tensor_from_json(terms: &[TermJson]) -> Result<TensorElement> {
    let first = terms
        .first()
        .ok_or_else(|| Error::Invalid("tensor file has no terms".into()))?;
    let n = matrix_from_json(&first.a)?.nrows();
    let terms = terms
        .iter()
        .map(|t| Ok((square_from_json(&t.a, n)?, square_from_json(&t.b, n)?)))
        .collect::<Result<Vec<_>>>()?;
    TensorElement::new(n, terms)
}

/// Actions listed parallel to the generators of the companion algebra file
/// (for a structure-constant file, parallel to its basis).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BimoduleFile {
    pub dim: usize,
    pub left_action: Vec<MatrixJson>,
    pub right_action: Vec<MatrixJson>,
}

impl BimoduleFile {
    pub fn build(&self, alg: &MatrixAlgebra, cfg: &ToleranceConfig) -> Result<Bimodule> {
        if self.dim == 0 {
            return Err(Error::Invalid("bimodule dimension must be positive".into()));
        }
        let parse = |v: &[MatrixJson]| v.iter().map(|m| square_from_json(m, self.dim)).collect::<Result<Vec<_>>>();
        let left = parse(&self.left_action)?;
        let right = parse(&self.right_action)?;
        Bimodule::from_generator_actions(alg, alg.generators(), &left, &right, cfg)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateFile {
    pub m: usize,
    pub c: MatrixJson,
    pub k: f64,
    pub epsilon: f64,
    pub functionals: Vec<MatrixJson>,
    pub n_terms: usize,
    pub spanning_family: Vec<MatrixJson>,
    pub beta: f64,
    pub span_rank: usize,
    pub diagonal: Vec<TermJson>,
}

impl CertificateFile {
    pub fn from_certificate(cert: &SpanningCertificate) -> Self {
        Self {
            m: cert.m,
            c: matrix_to_json(&cert.c),
            k: cert.k,
            epsilon: cert.epsilon,
            functionals: cert.functionals.iter().map(|f| matrix_to_json(&f.frame)).collect(),
            n_terms: cert.n_terms,
            spanning_family: cert.spanning_family.iter().map(matrix_to_json).collect(),
            beta: cert.beta,
            span_rank: cert.span_rank,
            diagonal: tensor_to_json(&cert.diagonal),
        }
    }

    pub fn to_certificate(&self) -> Result<SpanningCertificate> {
        let diagonal = tensor_from_json(&self.diagonal)?;
        let n = diagonal.n();
        let many = |v: &[MatrixJson]| v.iter().map(|m| square_from_json(m, n)).collect::<Result<Vec<_>>>();
        Ok(SpanningCertificate {
            m: self.m,
            c: square_from_json(&self.c, n)?,
            k: self.k,
            epsilon: self.epsilon,
            functionals: many(&self.functionals)?.into_iter().map(|frame| Functional { frame }).collect(),
            n_terms: self.n_terms,
            spanning_family: many(&self.spanning_family)?,
            beta: self.beta,
            span_rank: self.span_rank,
            diagonal,
        })
    }
}

/// Reads a file, returning its parsed contents and a hex SHA-256 digest.
pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<(T, String)> {
    let bytes = std::fs::read(path)?;
    let value = serde_json::from_slice(&bytes)?;
    Ok((value, digest(&bytes)))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
