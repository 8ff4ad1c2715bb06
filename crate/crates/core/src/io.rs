//! JSON input schemas and deterministic output formatting.
//!
//! Probabilities and other reals may be given as JSON numbers, decimal strings (`"0.25"`) or
//! fraction strings (`"1/18"`). Output floats carry 17 significant digits so they round-trip exactly.
//!
//! | type | shape |
//! |------|-------|
//! | [`FinitePair`] | `{"labels_x": [..], "labels_y": [..], "joint": [[..], ..]}` |
//! | [`FiniteSystem`] | `{"variables": [{"name": .., "size": ..}], "joint_flat": [..], "order": "row-major, last variable fastest"}` |
//! | [`GaussianSystem`] | `{"labels": [..], "cov": [[..], ..]}` |
//! | [`LatticeKernel`] | `{"n": .., "norm": "l1" \| "l2" \| "linf", "R": .., "values": {"(z1,..,zn)": eps}, "tail": {"model": ..}}` |
//! | [`QuadraticModel`] | `{"n": .., "gamma": g}` for nearest-neighbour couplings, or `{"coupling": <kernel shape>}` |
//! | [`OuChainParams`] | `{"m", "omega", "c", "T", "lambda", "t", "K"}` |

use crate::conv::ToeplitzKernel;
use crate::discrete::{FinitePair, FiniteSystem, Variable};
use crate::error::{invalid, Error, Result};
use crate::gaussian::GaussianSystem;
use crate::lattice::QuadraticModel;
use crate::tensor::{LatticeKernel, Norm, Tail};
use nalgebra::DMatrix;
use serde::de::{self, DeserializeOwned, Deserializer};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use std::collections::BTreeMap;

pub const ROW_MAJOR: &str = "row-major, last variable fastest";

/// A real read from a JSON number or a decimal / fraction string.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Real(pub f64);

pub fn parse_real(text: &str) -> Result<f64> {
    let t = text.trim();
    let value = match t.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num.trim().parse().map_err(|_| Error::Parse(format!("bad numerator in {t:?}")))?;
            let den: f64 = den.trim().parse().map_err(|_| Error::Parse(format!("bad denominator in {t:?}")))?;
            num / den
        }
        None => t.parse().map_err(|_| Error::Parse(format!("not a number: {t:?}")))?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Parse(format!("{t:?} is not finite")))
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(Real(x)),
            Raw::Text(s) => parse_real(&s).map(Real).map_err(de::Error::custom),
        }
    }
}

fn reals(v: &[Real]) -> Vec<f64> {
    v.iter().map(|r| r.0).collect()
}

pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

#[derive(Debug, Clone, Deserialize)]
pub struct PairJson {
    #[serde(default)]
    pub labels_x: Option<Vec<String>>,
    #[serde(default)]
    pub labels_y: Option<Vec<String>>,
    pub joint: Vec<Vec<Real>>,
}

impl PairJson {
    pub fn build(self) -> Result<FinitePair> {
        let rows: Vec<Vec<f64>> = self.joint.iter().map(|r| reals(r)).collect();
        let plain = FinitePair::from_rows(&rows)?;
        match (self.labels_x, self.labels_y) {
            (None, None) => Ok(plain),
            (lx, ly) => FinitePair::new(
                lx.unwrap_or_else(|| plain.labels_x.clone()),
                ly.unwrap_or_else(|| plain.labels_y.clone()),
                plain.joint,
            ),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct SystemJson {
    pub variables: Vec<Variable>,
    pub joint_flat: Vec<Real>,
    #[serde(default)]
    pub order: Option<String>,
}

impl SystemJson {
    pub fn build(self) -> Result<FiniteSystem> {
        if let Some(order) = &self.order {
            if order.trim() != ROW_MAJOR {
                return Err(invalid(format!("unsupported table order {order:?}; expected {ROW_MAJOR:?}")));
            }
        }
        FiniteSystem::new(self.variables, reals(&self.joint_flat))
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct CovarianceJson {
    #[serde(default)]
    pub labels: Option<Vec<String>>,
    pub cov: Vec<Vec<Real>>,
}

impl CovarianceJson {
    pub fn build(self) -> Result<GaussianSystem> {
        let n = self.cov.len();
        if self.cov.iter().any(|r| r.len() != n) {
            return Err(invalid("covariance must be square"));
        }
        let cov = DMatrix::from_fn(n, n, |r, c| self.cov[r][c].0);
        match self.labels {
            Some(labels) => GaussianSystem::new(labels, cov),
            None => GaussianSystem::unlabeled(cov),
        }
    }
}

/// Parses `"(z1, .., zn)"`, `"z1,..,zn"` or a bare integer.
pub fn parse_point(key: &str, n: usize) -> Result<Vec<i64>> {
    let inner = key.trim().trim_start_matches('(').trim_end_matches(')');
    let z: Vec<i64> = inner
        .split(',')
        .map(|s| s.trim().parse::<i64>().map_err(|_| Error::Parse(format!("bad lattice point {key:?}"))))
        .collect::<Result<_>>()?;
    if z.len() != n {
        return Err(Error::Parse(format!("lattice point {key:?} has {} coordinates, expected {n}", z.len())));
    }
    Ok(z)
}

pub fn format_point(z: &[i64]) -> String {
    let parts: Vec<String> = z.iter().map(|x| x.to_string()).collect();
    format!("({})", parts.join(","))
}

#[derive(Debug, Clone, Deserialize)]
pub struct KernelJson {
    pub n: usize,
    #[serde(default)]
    pub norm: Option<Norm>,
    #[serde(rename = "R")]
    pub radius: usize,
    pub values: BTreeMap<String, Real>,
    #[serde(default)]
    pub tail: Option<Tail>,
    /// Whether the window holds every nonzero value; defaults to true when no tail is given.
    #[serde(default)]
    pub complete: Option<bool>,
    /// Certified ℓ¹ mass outside the window, for convolution kernels.
    #[serde(default)]
    pub tail_mass: Option<Real>,
}

impl KernelJson {
    /// Dense window values; a point given without its mirror image is mirrored.
    fn dense(&self) -> Result<Vec<f64>> {
        let side = 2 * self.radius + 1;
        let total = side.checked_pow(self.n as u32).filter(|&t| t <= 1 << 24).ok_or_else(|| invalid("kernel window too large"))?;
        let r = self.radius as i64;
        let index = |z: &[i64]| z.iter().fold(0usize, |acc, &x| acc * side + (x + r) as usize);
        let mut values = vec![0.0; total];
        let mut given = vec![false; total];
        let mut points = Vec::with_capacity(self.values.len());
        for (key, v) in &self.values {
            let z = parse_point(key, self.n)?;
            if z.iter().any(|x| x.abs() > r) {
                return Err(invalid(format!("point {key} lies outside the window of radius {r}")));
            }
            values[index(&z)] = v.0;
            given[index(&z)] = true;
            points.push(z);
        }
        for z in points {
            let neg: Vec<i64> = z.iter().map(|x| -x).collect();
            let j = index(&neg);
            if !given[j] {
                values[j] = values[index(&z)];
            }
        }
        Ok(values)
    }

    pub fn build(self) -> Result<LatticeKernel> {
        let values = self.dense()?;
        let tail = self.tail.unwrap_or(Tail::None);
        let complete = self.complete.unwrap_or(matches!(tail, Tail::None));
        LatticeKernel::new(self.n, self.norm.unwrap_or(Norm::Linf), self.radius, values, tail, complete)
    }

    pub fn build_toeplitz(self) -> Result<ToeplitzKernel> {
        let values = self.dense()?;
        let mass = self.tail_mass.map(|m| m.0).unwrap_or(0.0);
        Ok(ToeplitzKernel::new(self.n, self.radius, values)?.with_tail_mass(mass))
    }
}

fn sparse_values(points: impl Iterator<Item = (Vec<i64>, f64)>) -> Value {
    let mut map = Map::new();
    for (z, v) in points.filter(|(_, v)| *v != 0.0) {
        map.insert(format_point(&z), Value::from(v));
    }
    Value::Object(map)
}

pub fn kernel_to_json(k: &LatticeKernel) -> Value {
    serde_json::json!({
        "n": k.n,
        "norm": k.norm,
        "R": k.radius,
        "values": sparse_values(k.points()),
        "tail": k.tail,
        "complete": k.complete,
    })
}

pub fn toeplitz_to_json(k: &ToeplitzKernel) -> Value {
    serde_json::json!({
        "n": k.n,
        "R": k.radius,
        "values": sparse_values(k.points()),
        "tail_mass": k.tail_mass,
        "decay": k.decay,
    })
}

pub fn pair_to_json(p: &FinitePair) -> Value {
    let joint: Vec<Vec<f64>> = p.joint.row_iter().map(|r| r.iter().copied().collect()).collect();
    serde_json::json!({ "labels_x": p.labels_x, "labels_y": p.labels_y, "joint": joint })
}

pub fn system_to_json(s: &FiniteSystem) -> Value {
    serde_json::json!({ "variables": s.variables, "joint_flat": s.joint, "order": ROW_MAJOR })
}

#[derive(Debug, Clone, Deserialize)]
pub struct QuadraticJson {
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub gamma: Option<Real>,
    #[serde(default)]
    pub coupling: Option<KernelJson>,
    #[serde(default)]
    pub norm: Option<Norm>,
}

impl QuadraticJson {
    pub fn build(self) -> Result<QuadraticModel> {
        let norm = self.norm.unwrap_or(Norm::L1);
        match (self.gamma, self.coupling) {
            (Some(g), None) => {
                let m = QuadraticModel::nearest_neighbour(self.n.unwrap_or(1), g.0)?;
                Ok(QuadraticModel { norm, ..m })
            }
            (None, Some(k)) => QuadraticModel::new(k.build_toeplitz()?, norm),
            _ => Err(invalid("give exactly one of \"gamma\" and \"coupling\"")),
        }
    }
}

/// `x` with 17 significant digits, trailing zeros trimmed; positional for moderate exponents.
pub fn fmt_f64(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "NaN".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0.0".into() } else { "0.0".into() };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            let t = s.trim_end_matches('0');
            if t.ends_with('.') { format!("{t}0") } else { t.to_string() }
        } else {
            format!("{s}.0")
        }
    } else {
        let m = mantissa.trim_end_matches('0');
        let m = if m.ends_with('.') { format!("{m}0") } else { m.to_string() };
        format!("{m}e{exp}")
    }
}

fn write_value(v: &Value, indent: usize, out: &mut String) {
    let pad = |k: usize| "  ".repeat(k);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => match (n.as_i64(), n.as_u64()) {
            (Some(i), _) if !n.is_f64() => out.push_str(&i.to_string()),
            (_, Some(u)) if !n.is_f64() => out.push_str(&u.to_string()),
            _ => {
                let x = n.as_f64().expect("finite number");
                out.push_str(&fmt_f64(x));
            }
        },
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string escapes")),
        Value::Array(items) => {
            if items.iter().all(|x| !x.is_array() && !x.is_object()) {
                out.push('[');
                for (i, x) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_value(x, indent, out);
                }
                out.push(']');
            } else {
                out.push_str("[\n");
                for (i, x) in items.iter().enumerate() {
                    out.push_str(&pad(indent + 1));
                    write_value(x, indent + 1, out);
                    out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
                }
                out.push_str(&pad(indent));
                out.push(']');
            }
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{\n");
            for (i, (k, x)) in map.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&serde_json::to_string(k).expect("key escapes"));
                out.push_str(": ");
                write_value(x, indent + 1, out);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
    }
}

/// Pretty JSON with every float printed by [`fmt_f64`]; non-finite floats become `null`.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| Error::Parse(e.to_string()))?;
    let mut out = String::new();
    write_value(&v, 0, &mut out);
    out.push('\n');
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_from_strings_and_fractions() {
        let p: PairJson = from_json(r#"{"joint": [["1/4", 0.25], ["0.25", "1/4"]]}"#).unwrap();
        let pair = p.build().unwrap();
        assert_eq!(pair.joint[(0, 0)], 0.25);
        assert!(from_json::<PairJson>(r#"{"joint": [["x"]]}"#).is_err());
    }

    #[test]
    fn system_schema() {
        let text = r#"{"variables": [{"name": "a", "size": 2}, {"name": "b", "size": 2}],
                       "joint_flat": [0.4, 0.1, 0.1, 0.4], "order": "row-major, last variable fastest"}"#;
        let sys = from_json::<SystemJson>(text).unwrap().build().unwrap();
        assert_eq!(sys.num_vars(), 2);
        let back = system_to_json(&sys);
        let again = from_json::<SystemJson>(&back.to_string()).unwrap().build().unwrap();
        assert_eq!(again, sys);
        let bad = text.replace("row-major, last variable fastest", "column-major");
        assert!(from_json::<SystemJson>(&bad).unwrap().build().is_err());
    }

    #[test]
    fn kernel_schema_round_trip() {
        let text = r#"{"n": 2, "norm": "l1", "R": 1, "values": {"(1,0)": 0.1, "(0,1)": 0.1, "(-1, 0)": 0.1},
                       "tail": {"model": "exponential", "C": 0.5, "psi": 1.0}}"#;
        let k = from_json::<KernelJson>(text).unwrap().build().unwrap();
        assert_eq!(k.get(&[0, -1]), 0.1);
        assert!(!k.complete);
        let back = kernel_to_json(&k);
        let again = from_json::<KernelJson>(&back.to_string()).unwrap().build().unwrap();
        assert_eq!(again, k);
    }

    #[test]
    fn asymmetric_kernel_is_rejected() {
        let text = r#"{"n": 1, "R": 1, "values": {"(1)": 0.1, "(-1)": 0.2}}"#;
        assert!(from_json::<KernelJson>(text).unwrap().build().is_err());
    }

    #[test]
    fn float_formatting_round_trips() {
        for x in [0.5, 5.0 / 6.0, 1.0, -2.5e-9, 1e20, 123456.789, 0.1 + 0.2, f64::MIN_POSITIVE] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(fmt_f64(0.5), "0.5");
        assert_eq!(fmt_f64(3.0), "3.0");
        assert_eq!(fmt_f64(5.0 / 6.0), "0.83333333333333337");
    }

    #[test]
    fn json_output_is_stable() {
        let v = serde_json::json!({"rho": 5.0 / 6.0, "n": 3, "xs": [1.0, 0.25]});
        assert_eq!(to_json_string(&v).unwrap(), "{\n  \"n\": 3,\n  \"rho\": 0.83333333333333337,\n  \"xs\": [1.0, 0.25]\n}\n");
    }

    #[test]
    fn quadratic_schema() {
        let m = from_json::<QuadraticJson>(r#"{"n": 2, "gamma": "0.1"}"#).unwrap().build().unwrap();
        assert!((m.gamma_total() - 0.4).abs() < 1e-15);
        let k = from_json::<QuadraticJson>(r#"{"coupling": {"n": 1, "R": 2, "values": {"(1)": 0.1, "(2)": 0.05}}}"#)
            .unwrap()
            .build()
            .unwrap();
        assert!((k.gamma_total() - 0.3).abs() < 1e-15);
    }
}
