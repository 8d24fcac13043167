//! JSON input formats: symbols, variable-coefficient operators, lattice
//! functions and experiment configurations.

use super::expr::parse_expr;
use crate::error::{Error, Result};
use crate::heatkernel::BoxSpec;
use crate::lattice::LatticeFunction;
use crate::levi::{Coefficient, VarCoeffOperator};
use crate::symbol::{format_rational, parse_rational, MultiIndex, Weight, WeightedSymbol};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::PathBuf;

fn schema(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Schema { path: path.into(), message: message.into() }
}

/// Deserializes `text`, reporting the JSON path of the first violation.
pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if inner.is_data() {
            schema(path, inner.to_string())
        } else {
            Error::Json(inner)
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BasisJson {
    Named(String),
    Matrix(Vec<f64>),
}

fn identity() -> BasisJson {
    BasisJson::Named("identity".into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermJson {
    pub beta: Vec<u32>,
    #[serde(default)]
    pub re: f64,
    #[serde(default)]
    pub im: f64,
    /// `|beta:m|` as `"p/q"`; checked when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolJson {
    pub dim: usize,
    pub weight: Vec<u32>,
    #[serde(default = "identity")]
    pub basis: BasisJson,
    pub terms: Vec<TermJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

fn check_header(dim: usize, weight: &[u32]) -> Result<Weight> {
    if dim == 0 || dim > 8 {
        return Err(schema("dim", format!("dimension must be between 1 and 8, got {dim}")));
    }
    if weight.len() != dim {
        return Err(schema("weight", format!("expected {dim} entries, got {}", weight.len())));
    }
    Weight::new(weight.to_vec()).map_err(|e| schema("weight", e.to_string()))
}

fn basis_matrix(dim: usize, basis: &BasisJson) -> Result<DMatrix<f64>> {
    match basis {
        BasisJson::Named(s) if s == "identity" => Ok(DMatrix::identity(dim, dim)),
        BasisJson::Named(s) => Err(schema("basis", format!("unknown basis '{s}'; use \"identity\" or a row-major matrix"))),
        BasisJson::Matrix(v) if v.len() == dim * dim => Ok(DMatrix::from_row_slice(dim, dim, v)),
        BasisJson::Matrix(v) => Err(schema("basis", format!("expected {} entries, got {}", dim * dim, v.len()))),
    }
}

fn check_beta(path: &str, dim: usize, beta: &[u32]) -> Result<MultiIndex> {
    if beta.len() != dim {
        return Err(schema(format!("{path}.beta"), format!("expected {dim} entries, got {}", beta.len())));
    }
    Ok(MultiIndex(beta.to_vec()))
}

pub fn symbol_from_json(s: &SymbolJson) -> Result<WeightedSymbol> {
    let weight = check_header(s.dim, &s.weight)?;
    let basis = basis_matrix(s.dim, &s.basis)?;
    let mut terms = Vec::with_capacity(s.terms.len());
    for (i, t) in s.terms.iter().enumerate() {
        let path = format!("terms[{i}]");
        let beta = check_beta(&path, s.dim, &t.beta)?;
        if let Some(deg) = &t.degree {
            let actual = crate::symbol::weighted_degree_m(&beta, &weight)?;
            if parse_rational(deg) != Some(actual) {
                return Err(schema(
                    format!("{path}.degree"),
                    format!("declared {deg}, actual {}", format_rational(actual)),
                ));
            }
        }
        terms.push((beta, Complex64::new(t.re, t.im)));
    }
    let p = WeightedSymbol::with_basis(weight, terms, basis)?;
    Ok(match &s.label {
        Some(l) => p.labeled(l.clone()),
        None => p,
    })
}

/// Parses and validates a symbol file.
pub fn parse_symbol(text: &str) -> Result<WeightedSymbol> {
    symbol_from_json(&from_json(text)?)
}

pub fn symbol_to_json(p: &WeightedSymbol) -> SymbolJson {
    let d = p.dim();
    let basis = if p.has_identity_basis() {
        identity()
    } else {
        BasisJson::Matrix((0..d).flat_map(|i| (0..d).map(move |j| (i, j))).map(|(i, j)| p.basis()[(i, j)]).collect())
    };
    SymbolJson {
        dim: d,
        weight: p.weight().as_slice().to_vec(),
        basis,
        terms: p
            .terms()
            .iter()
            .map(|(b, a)| TermJson { beta: b.0.clone(), re: a.re, im: a.im, degree: Some(format_rational(p.degree_m(b))) })
            .collect(),
        label: (!p.label().is_empty()).then(|| p.label().to_string()),
    }
}

/// Pretty JSON for a symbol; reparses to an equal symbol.
pub fn serialize_symbol(p: &WeightedSymbol) -> String {
    serde_json::to_string_pretty(&symbol_to_json(p)).expect("plain data")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorTermJson {
    pub beta: Vec<u32>,
    #[serde(default)]
    pub re: Option<f64>,
    #[serde(default)]
    pub im: Option<f64>,
    /// Name of an entry of `coeffs`; excludes `re`/`im`.
    #[serde(default)]
    pub coeff: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorJson {
    pub dim: usize,
    pub weight: Vec<u32>,
    #[serde(default = "identity")]
    pub basis: BasisJson,
    pub terms: Vec<OperatorTermJson>,
    /// Named real-valued expressions over `x_1 .. x_d`.
    #[serde(default)]
    pub coeffs: BTreeMap<String, String>,
    #[serde(default)]
    pub alpha: Option<Vec<f64>>,
    #[serde(default)]
    pub hoelder: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub label: Option<String>,
}

/// Region sampled when the Hoelder constant or `delta` must be estimated.
pub const OPERATOR_SAMPLE_HALF_WIDTH: f64 = 8.0;

pub fn operator_from_json(o: &OperatorJson) -> Result<VarCoeffOperator> {
    let weight = check_header(o.dim, &o.weight)?;
    if basis_matrix(o.dim, &o.basis)? != DMatrix::identity(o.dim, o.dim) {
        return Err(schema("basis", "variable-coefficient operators must use the identity basis"));
    }
    let mut exprs = BTreeMap::new();
    for (name, text) in &o.coeffs {
        let e = parse_expr(text, o.dim).map_err(|e| schema(format!("coeffs.{name}"), e.to_string()))?;
        exprs.insert(name.clone(), e);
    }
    let mut coeffs = Vec::with_capacity(o.terms.len());
    for (i, t) in o.terms.iter().enumerate() {
        let path = format!("terms[{i}]");
        let beta = check_beta(&path, o.dim, &t.beta)?;
        let c = match (&t.coeff, t.re, t.im) {
            (Some(name), None, None) => {
                let e = exprs
                    .get(name)
                    .ok_or_else(|| schema(format!("{path}.coeff"), format!("no coefficient named '{name}'")))?
                    .clone();
                match e.as_constant() {
                    Some(v) => Coefficient::real(v),
                    None => {
                        let text = o.coeffs[name].clone();
                        Coefficient::function(text, move |x| Complex64::new(e.eval(x), 0.0))
                    }
                }
            }
            (Some(_), _, _) => return Err(schema(&path, "give either 'coeff' or 're'/'im', not both")),
            (None, re, im) => Coefficient::constant(Complex64::new(re.unwrap_or(0.0), im.unwrap_or(0.0))),
        };
        coeffs.push((beta, c));
    }
    let alpha = match &o.alpha {
        Some(a) => a.clone(),
        None => {
            let w = crate::anisotropy::omega(weight.as_slice());
            let top = w.iter().cloned().fold(0.0, f64::max);
            w.iter().map(|v| v / top).collect()
        }
    };
    let label = o.label.clone().unwrap_or_default();
    let provisional = VarCoeffOperator::new(
        weight.clone(),
        coeffs.clone(),
        alpha.clone(),
        o.hoelder.unwrap_or(0.0),
        o.delta.unwrap_or(1e-300),
    )?;
    if o.hoelder.is_some() && o.delta.is_some() {
        return Ok(provisional.labeled(label));
    }
    let bx = BoxSpec::cube(o.dim, OPERATOR_SAMPLE_HALF_WIDTH)?;
    let cert = provisional.certify(&bx, 2000)?;
    let hoelder = o.hoelder.unwrap_or(1.01 * cert.hoelder_quotient);
    let delta = match o.delta {
        Some(d) => d,
        None if cert.ellipticity > 0.0 => 0.99 * cert.ellipticity,
        None => return Err(Error::NotPositiveDefinite { min_re: cert.ellipticity }),
    };
    Ok(VarCoeffOperator::new(weight, coeffs, alpha, hoelder, delta)?.labeled(label))
}

pub fn parse_operator(text: &str) -> Result<VarCoeffOperator> {
    operator_from_json(&from_json(text)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointJson {
    pub x: Vec<i64>,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhiJson {
    pub dim: usize,
    pub points: Vec<PointJson>,
}

pub fn parse_phi(text: &str) -> Result<LatticeFunction> {
    let p: PhiJson = from_json(text)?;
    if p.dim == 0 || p.dim > 8 {
        return Err(schema("dim", format!("dimension must be between 1 and 8, got {}", p.dim)));
    }
    let mut pts = Vec::with_capacity(p.points.len());
    for (i, pt) in p.points.iter().enumerate() {
        if pt.x.len() != p.dim {
            return Err(schema(format!("points[{i}].x"), format!("expected {} entries, got {}", p.dim, pt.x.len())));
        }
        pts.push((pt.x.clone(), Complex64::new(pt.re, pt.im)));
    }
    LatticeFunction::from_points(p.dim, &pts)
}

/// `min:max` or `min:max:points`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub points: Option<usize>,
}

impl GridSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(':').collect();
        let bad = || Error::invalid(format!("grid spec '{text}' must be min:max or min:max:points"));
        if !(2..=3).contains(&parts.len()) {
            return Err(bad());
        }
        let min: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let max: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(Error::invalid(format!("grid spec '{text}' needs finite min < max")));
        }
        let points = match parts.get(2) {
            Some(p) => {
                let n: usize = p.trim().parse().map_err(|_| bad())?;
                if n < 2 {
                    return Err(Error::invalid(format!("grid spec '{text}' needs at least 2 points")));
                }
                Some(n)
            }
            None => None,
        };
        Ok(Self { min, max, points })
    }

    /// The `points` nodes `min + i (max - min) / (points - 1)`.
    pub fn nodes(&self) -> Vec<f64> {
        let n = self.points.unwrap_or(2);
        (0..n).map(|i| self.min + (self.max - self.min) * i as f64 / (n - 1) as f64).collect()
    }
}

/// Tolerances of the certificates computed by `run`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Normalized heat-equation residual of `Z`.
    pub residual: f64,
    /// Integral-equation residual relative to `sup |K|`.
    pub integral_equation: f64,
    /// Relative deviation of a decay exponent from its prediction.
    pub exponent: f64,
    /// Relative error of the sampled homogeneity identity.
    pub homogeneity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { residual: 5e-3, integral_equation: 1e-3, exponent: 0.05, homogeneity: 1e-10 }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("residual", self.residual),
            ("integral_equation", self.integral_equation),
            ("exponent", self.exponent),
            ("homogeneity", self.homogeneity),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(schema(format!("tolerances.{name}"), "must be positive"));
            }
        }
        Ok(())
    }
}

/// A reproducible run, equivalent to one subcommand invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: String,
    #[serde(default)]
    pub symbol: Option<PathBuf>,
    #[serde(default)]
    pub operator: Option<PathBuf>,
    #[serde(default)]
    pub phi: Option<PathBuf>,
    #[serde(default)]
    pub points: Option<PathBuf>,
    #[serde(default)]
    pub case: Option<u32>,
    #[serde(default)]
    pub t: Option<f64>,
    #[serde(default, rename = "T")]
    pub t_max: Option<f64>,
    #[serde(default)]
    pub n: Option<Vec<u32>>,
    #[serde(default, rename = "box")]
    pub bx: Option<String>,
    #[serde(default)]
    pub xgrid: Option<String>,
    #[serde(default)]
    pub tgrid: Option<usize>,
    #[serde(default)]
    pub method: Option<String>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub estimate: Option<PathBuf>,
    #[serde(default)]
    pub certificates: Option<PathBuf>,
    #[serde(default)]
    pub manifest: Option<PathBuf>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplacian_round_trip() {
        let text = r#"{"dim": 1, "weight": [1], "terms": [{"beta": [2], "re": 1.0}]}"#;
        let p = parse_symbol(text).unwrap();
        assert_eq!(p.mu(), 0.5);
        assert_eq!(parse_symbol(&serialize_symbol(&p)).unwrap(), p);
    }

    #[test]
    fn unknown_keys_are_rejected_with_path() {
        let text = r#"{"dim": 1, "weight": [1], "terms": [{"beta": [2], "re": 1.0, "bogus": 1}]}"#;
        match parse_symbol(text) {
            Err(Error::Schema { path, .. }) => assert!(path.starts_with("terms[0]"), "{path}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn grid_specs() {
        let g = GridSpec::parse("-8:8:5").unwrap();
        assert_eq!(g.nodes(), vec![-8.0, -4.0, 0.0, 4.0, 8.0]);
        assert!(GridSpec::parse("1:0").is_err());
        assert!(GridSpec::parse("0:1:1").is_err());
        assert!(GridSpec::parse("0:1:x").is_err());
    }
}
