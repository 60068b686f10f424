//! JSON formats. Complex numbers are `[re, im]`, matrices are row-major lists
//! of rows, and algebras are `{"blocks": [d_1, …]}`.
//!
//! A map document is one of
//! - a map spec `{"algebra", "k", "h", "coeffs"}` where `coeffs` nests `k`
//!   levels of basis indices around `h×h` matrices,
//! - a block spec `{"n", "entries"}` with `n²` row-major map specs or one
//!   shared spec,
//! - a generator `{"kind": "dilation" | "trace" | "eval" | "schur" | "psi", …}`
//!   with an optional complex `"scale"`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::algebra::{Algebra, AlgebraElement, MatrixOverAlgebra};
use crate::blockmap::BlockMultilinearMap;
use crate::error::{Error, Result};
use crate::factory::{self, IcpSpec};
use crate::gram::{Counterexample, GramKernel};
use crate::linalg::{self, CMat};
use crate::multimap::MultilinearMap;
use crate::stinespring::{DilationResiduals, DilationTriple, Representation};

fn format_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

pub fn complex_to_json(z: Complex64) -> Value {
    json!([z.re, z.im])
}

pub fn complex_from_json(v: &Value) -> Result<Complex64> {
    match v {
        Value::Number(x) => Ok(Complex64::new(x.as_f64().unwrap_or(f64::NAN), 0.0)),
        Value::Array(p) if p.len() == 2 => {
            let re = p[0].as_f64().ok_or_else(|| format_err("complex part is not a number"))?;
            let im = p[1].as_f64().ok_or_else(|| format_err("complex part is not a number"))?;
            Ok(Complex64::new(re, im))
        }
        _ => Err(format_err(format!("expected [re, im], got {v}"))),
    }
}

pub fn matrix_to_json(m: &CMat) -> Value {
    Value::Array(
        (0..m.nrows()).map(|i| Value::Array((0..m.ncols()).map(|j| complex_to_json(m[(i, j)])).collect())).collect(),
    )
}

pub fn matrix_from_json(v: &Value) -> Result<CMat> {
    let rows = v.as_array().ok_or_else(|| format_err("matrix must be a list of rows"))?;
    let ncols = rows.first().and_then(|r| r.as_array()).map(|r| r.len()).unwrap_or(0);
    let mut m = linalg::zeros(rows.len(), ncols);
    for (i, row) in rows.iter().enumerate() {
        let row = row.as_array().ok_or_else(|| format_err("matrix row must be a list"))?;
        if row.len() != ncols {
            return Err(format_err("ragged matrix rows"));
        }
        for (j, z) in row.iter().enumerate() {
            m[(i, j)] = complex_from_json(z)?;
        }
    }
    Ok(m)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraSpec {
    pub blocks: Vec<usize>,
}

impl AlgebraSpec {
    pub fn build(&self) -> Result<Algebra> {
        Algebra::new(self.blocks.clone())
    }
}

pub fn algebra_to_json(alg: &Algebra) -> Value {
    json!({ "blocks": alg.block_dims() })
}

/// Coordinates over the matrix-unit basis.
pub fn element_to_json(x: &AlgebraElement) -> Value {
    Value::Array(x.coords().into_iter().map(complex_to_json).collect())
}

pub fn element_from_json(alg: &Algebra, v: &Value) -> Result<AlgebraElement> {
    let coords = v
        .as_array()
        .ok_or_else(|| format_err("element must be a coordinate list"))?
        .iter()
        .map(complex_from_json)
        .collect::<Result<Vec<_>>>()?;
    AlgebraElement::from_coords(alg, &coords)
}

/// `{"size", "entries"}` with row-major entry coordinate lists.
pub fn matrix_over_algebra_to_json(x: &MatrixOverAlgebra) -> Value {
    json!({
        "size": x.size(),
        "entries": x.entries().iter().map(element_to_json).collect::<Vec<_>>(),
    })
}

pub fn matrix_over_algebra_from_json(alg: &Algebra, v: &Value) -> Result<MatrixOverAlgebra> {
    let size = v["size"].as_u64().ok_or_else(|| format_err("missing size"))? as usize;
    let entries = v["entries"]
        .as_array()
        .ok_or_else(|| format_err("missing entries"))?
        .iter()
        .map(|e| element_from_json(alg, e))
        .collect::<Result<Vec<_>>>()?;
    MatrixOverAlgebra::new(alg, size, entries)
}

fn nest_coeffs(map: &MultilinearMap, depth: usize, prefix: usize) -> Value {
    let d = map.algebra().dim();
    if depth == map.k() {
        return matrix_to_json(&map.coeffs()[prefix]);
    }
    Value::Array((0..d).map(|b| nest_coeffs(map, depth + 1, prefix * d + b)).collect())
}

pub fn map_to_json(map: &MultilinearMap) -> Value {
    json!({
        "algebra": algebra_to_json(map.algebra()),
        "k": map.k(),
        "h": map.h(),
        "coeffs": nest_coeffs(map, 0, 0),
    })
}

fn flatten_coeffs(v: &Value, depth: usize, k: usize, d: usize, h: usize, out: &mut Vec<CMat>) -> Result<()> {
    if depth == k {
        let m = matrix_from_json(v)?;
        if m.shape() != (h, h) {
            return Err(Error::Shape(format!("coefficient is {}×{}, expected {h}×{h}", m.nrows(), m.ncols())));
        }
        out.push(m);
        return Ok(());
    }
    let items = v.as_array().ok_or(Error::Arity { expected: k, got: depth })?;
    if items.len() != d {
        return Err(Error::Shape(format!("coefficient level {depth} has {} entries, expected {d}", items.len())));
    }
    for item in items {
        flatten_coeffs(item, depth + 1, k, d, h, out)?;
    }
    Ok(())
}

/// Index levels along the first path: array depth minus rows, columns and
/// the `[re, im]` pair.
fn index_levels(v: &Value) -> Result<usize> {
    let mut depth = 0usize;
    let mut cur = v;
    let mut last_pair = false;
    while let Some(a) = cur.as_array() {
        depth += 1;
        last_pair = a.len() == 2 && a.iter().all(|x| x.is_number());
        match a.first() {
            Some(x) => cur = x,
            None => break,
        }
    }
    if !last_pair {
        return Err(format_err("coefficient entries must be [re, im] pairs"));
    }
    Ok(depth.saturating_sub(3))
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapSpec {
    algebra: AlgebraSpec,
    k: usize,
    h: usize,
    coeffs: Value,
}

pub fn map_from_json(v: &Value) -> Result<MultilinearMap> {
    let spec: MapSpec = serde_json::from_value(v.clone()).map_err(|e| format_err(format!("map spec: {e}")))?;
    let alg = spec.algebra.build()?;
    if spec.k == 0 || spec.h == 0 {
        return Err(Error::Shape("k and h must be positive".into()));
    }
    let levels = index_levels(&spec.coeffs)?;
    if levels != spec.k {
        return Err(Error::Arity { expected: spec.k, got: levels });
    }
    let mut coeffs = Vec::new();
    flatten_coeffs(&spec.coeffs, 0, spec.k, alg.dim(), spec.h, &mut coeffs)?;
    MultilinearMap::new(&alg, spec.k, spec.h, coeffs)
}

pub fn block_to_json(map: &BlockMultilinearMap) -> Value {
    json!({
        "n": map.n(),
        "entries": map.entries().iter().map(map_to_json).collect::<Vec<_>>(),
    })
}

/// Built-in constructions addressable from a JSON document.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum GeneratorSpec {
    Dilation {
        block_dims: Vec<usize>,
        k: usize,
        #[serde(default = "one")]
        n: usize,
        #[serde(default = "one")]
        h: usize,
        #[serde(default)]
        seed: u64,
        #[serde(default)]
        isometric: bool,
        #[serde(default)]
        scale: Option<[f64; 2]>,
    },
    Trace {
        n: usize,
        #[serde(default)]
        scale: Option<[f64; 2]>,
    },
    Eval {
        points: usize,
        #[serde(default)]
        marked: usize,
        #[serde(default)]
        scale: Option<[f64; 2]>,
    },
    Schur {
        lambda: Value,
    },
    Psi,
}

fn one() -> usize {
    1
}

impl GeneratorSpec {
    pub fn build(&self) -> Result<BlockMultilinearMap> {
        let scaled = |map: BlockMultilinearMap, s: &Option<[f64; 2]>| match s {
            Some([re, im]) => map.scale(Complex64::new(*re, *im)),
            None => map,
        };
        match self {
            GeneratorSpec::Dilation { block_dims, k, n, h, seed, isometric, scale } => {
                let mut spec = IcpSpec::new(block_dims.clone(), *k, *n, *h);
                spec.isometric = *isometric;
                Ok(scaled(factory::random_icp(*seed, &spec)?.0, scale))
            }
            GeneratorSpec::Trace { n, scale } => {
                Ok(scaled(BlockMultilinearMap::from_single(factory::trace_example(*n)?), scale))
            }
            GeneratorSpec::Eval { points, marked, scale } => {
                Ok(scaled(BlockMultilinearMap::from_single(factory::eval_family(*points, *marked)?), scale))
            }
            GeneratorSpec::Schur { lambda } => factory::schur_block_map(&matrix_from_json(lambda)?),
            GeneratorSpec::Psi => Ok(factory::noninvariant_block_example()),
        }
    }
}

/// Reads any map document (map spec, block spec or generator).
pub fn block_from_json(v: &Value) -> Result<BlockMultilinearMap> {
    let obj = v.as_object().ok_or_else(|| format_err("map document must be a JSON object"))?;
    if obj.contains_key("kind") {
        let gen: GeneratorSpec =
            serde_json::from_value(v.clone()).map_err(|e| format_err(format!("generator spec: {e}")))?;
        return gen.build();
    }
    if !obj.contains_key("n") {
        return Ok(BlockMultilinearMap::from_single(map_from_json(v)?));
    }
    if let Some(extra) = obj.keys().find(|k| *k != "n" && *k != "entries") {
        return Err(format_err(format!("block spec: unknown field `{extra}`")));
    }
    let n =
        obj["n"].as_u64().filter(|&n| n > 0).ok_or_else(|| format_err("block spec: n must be a positive integer"))?
            as usize;
    match obj.get("entries") {
        Some(Value::Array(list)) => {
            let entries = list.iter().map(map_from_json).collect::<Result<Vec<_>>>()?;
            BlockMultilinearMap::new(n, entries)
        }
        Some(single @ Value::Object(_)) => Ok(BlockMultilinearMap::uniform(n, &map_from_json(single)?)),
        _ => Err(format_err("block spec: entries must be a list or a single map spec")),
    }
}

pub fn parse_map_document(text: &str) -> Result<BlockMultilinearMap> {
    let v: Value = serde_json::from_str(text).map_err(|e| format_err(format!("invalid JSON: {e}")))?;
    block_from_json(&v)
}

fn rep_to_json(rep: &Representation) -> Value {
    let alg = rep.algebra();
    let labelled: BTreeMap<String, Value> =
        alg.basis().iter().enumerate().map(|(b, u)| (u.to_string(), matrix_to_json(rep.image(b)))).collect();
    json!(labelled)
}

fn rep_from_json(alg: &Algebra, v: &Value) -> Result<Representation> {
    let obj = v.as_object().ok_or_else(|| format_err("representation must map basis labels to matrices"))?;
    let mut images = vec![None; alg.dim()];
    for (label, m) in obj {
        let idx = parse_label(alg, label)?;
        images[idx] = Some(matrix_from_json(m)?);
    }
    let images = images
        .into_iter()
        .enumerate()
        .map(|(b, m)| m.ok_or_else(|| format_err(format!("missing image of e[{}]", alg.unit(b)))))
        .collect::<Result<Vec<_>>>()?;
    Representation::new(alg, images)
}

/// Inverse of the `block:row,col` label.
fn parse_label(alg: &Algebra, label: &str) -> Result<usize> {
    let bad = || format_err(format!("bad basis label `{label}`"));
    let (block, rest) = label.split_once(':').ok_or_else(bad)?;
    let (row, col) = rest.split_once(',').ok_or_else(bad)?;
    let parse = |s: &str| s.trim().parse::<usize>().map_err(|_| bad());
    let (block, row, col) = (parse(block)?, parse(row)?, parse(col)?);
    let dims = alg.block_dims();
    if block >= dims.len() || row >= dims[block] || col >= dims[block] {
        return Err(bad());
    }
    Ok(alg.index_of(block, row, col))
}

pub fn residuals_to_json(r: &DilationResiduals) -> Value {
    serde_json::to_value(r).expect("plain numbers")
}

pub fn triple_to_json(triple: &DilationTriple, residuals: Option<&DilationResiduals>) -> Value {
    let mut v = json!({
        "algebra": algebra_to_json(triple.algebra()),
        "k": triple.k(),
        "kappa": triple.kappa(),
        "h": triple.h(),
        "reps": triple.reps().iter().map(rep_to_json).collect::<Vec<_>>(),
        "V": triple.v().iter().map(matrix_to_json).collect::<Vec<_>>(),
    });
    if let Some(r) = residuals {
        v["residuals"] = residuals_to_json(r);
    }
    v
}

pub fn triple_from_json(v: &Value) -> Result<DilationTriple> {
    let alg = serde_json::from_value::<AlgebraSpec>(v["algebra"].clone())
        .map_err(|e| format_err(format!("triple algebra: {e}")))?
        .build()?;
    let k = v["k"].as_u64().ok_or_else(|| format_err("triple: missing k"))? as usize;
    let reps = v["reps"]
        .as_array()
        .ok_or_else(|| format_err("triple: missing reps"))?
        .iter()
        .map(|r| rep_from_json(&alg, r))
        .collect::<Result<Vec<_>>>()?;
    let vs = v["V"]
        .as_array()
        .ok_or_else(|| format_err("triple: missing V"))?
        .iter()
        .map(matrix_from_json)
        .collect::<Result<Vec<_>>>()?;
    if let Some(kappa) = v["kappa"].as_u64() {
        if reps.first().is_some_and(|r| r.dim() != kappa as usize) {
            return Err(format_err("triple: kappa disagrees with the representation size"));
        }
    }
    DilationTriple::new(reps, vs, k)
}

/// The Gram matrix with a legend `row → (α labels, slot, component)`.
pub fn gram_to_json(g: &GramKernel, alg: &Algebra) -> Value {
    let legend: Vec<Value> = (0..g.size())
        .map(|row| {
            let (alpha, slot, comp) = g.decode(row);
            json!({
                "row": row,
                "alpha": alpha.iter().map(|&a| alg.unit(a).to_string()).collect::<Vec<_>>(),
                "slot": slot,
                "component": comp,
            })
        })
        .collect();
    json!({ "size": g.size(), "matrix": matrix_to_json(&g.matrix), "index_map": legend })
}

pub fn counterexample_to_json(c: &Counterexample) -> Value {
    json!({
        "kind": c.kind,
        "level": c.level,
        "trial": c.trial,
        "min_eigenvalue": c.min_eigenvalue,
        "hermitian_defect": c.hermitian_defect,
        "tuple": c.tuple.iter().map(matrix_over_algebra_to_json).collect::<Vec<_>>(),
        "value": matrix_to_json(&c.value),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factory::{eval_example, random_icp, trace_example};
    use crate::stinespring::{dilate, DilateOptions};

    #[test]
    fn map_round_trip() {
        let phi = trace_example(2).unwrap();
        let back = map_from_json(&map_to_json(&phi)).unwrap();
        assert_eq!(back, phi);
        let block = noninvariant();
        assert_eq!(block_from_json(&block_to_json(&block)).unwrap(), block);
    }

    fn noninvariant() -> BlockMultilinearMap {
        factory::noninvariant_block_example()
    }

    #[test]
    fn wrong_arity_is_reported() {
        let mut v = map_to_json(&eval_example());
        v["k"] = json!(4);
        assert!(matches!(map_from_json(&v), Err(Error::Arity { expected: 4, .. })));
        v["k"] = json!(2);
        assert!(map_from_json(&v).is_err());
    }

    #[test]
    fn generators() {
        let doc = json!({"kind": "trace", "n": 2, "scale": [-1.0, 0.0]});
        let m = block_from_json(&doc).unwrap();
        assert_eq!(m.entries()[0], trace_example(2).unwrap().scale(Complex64::new(-1.0, 0.0)));
        let doc = json!({"kind": "schur", "lambda": [[[1.0, 0.0], [0.5, 0.0]], [[0.5, 0.0], [1.0, 0.0]]]});
        assert_eq!(block_from_json(&doc).unwrap().n(), 2);
        assert!(block_from_json(&json!({"kind": "nope"})).is_err());
        let shared = json!({"n": 2, "entries": map_to_json(&eval_example())});
        assert_eq!(block_from_json(&shared).unwrap().entries().len(), 4);
    }

    #[test]
    fn triple_round_trip() {
        let (map, _) = random_icp(2, &IcpSpec::new(vec![1, 2], 3, 2, 1)).unwrap();
        let t = dilate(&map, &DilateOptions::default()).unwrap();
        let back = triple_from_json(&triple_to_json(&t, None)).unwrap();
        assert_eq!(back.kappa(), t.kappa());
        for (a, b) in back.v().iter().zip(t.v()) {
            assert_eq!(a, b);
        }
        let text1 = serde_json::to_string(&triple_to_json(&t, None)).unwrap();
        let text2 = serde_json::to_string(&triple_to_json(&back, None)).unwrap();
        assert_eq!(text1, text2);
    }

    #[test]
    fn labels_parse() {
        let alg = Algebra::new(vec![1, 2]).unwrap();
        for b in 0..alg.dim() {
            assert_eq!(parse_label(&alg, &alg.unit(b).to_string()).unwrap(), b);
        }
        assert!(parse_label(&alg, "1:2,0").is_err());
    }

    #[test]
    fn element_round_trip() {
        let alg = Algebra::new(vec![2, 1]).unwrap();
        let x = MatrixOverAlgebra::identity(&alg, 2);
        assert_eq!(matrix_over_algebra_from_json(&alg, &matrix_over_algebra_to_json(&x)).unwrap(), x);
    }
}
