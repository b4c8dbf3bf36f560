//! JSON interchange for structures, formulae, formula sets, and definition
//! sets. Loaders report the JSON path of the offending element, e.g.
//! `relations.E[3][1]: value 7 out of range 0..3`.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::formula::{Atom, FormulaSet, PpFormula, Var};
use crate::structure::{Signature, Structure};

fn want<'v>(v: &'v Value, key: &str, loc: &str) -> Result<&'v Value> {
    v.get(key)
        .ok_or_else(|| Error::parse(loc, format!("missing field {key:?}")))
}

fn as_obj<'v>(v: &'v Value, loc: &str) -> Result<&'v Map<String, Value>> {
    v.as_object()
        .ok_or_else(|| Error::parse(loc, "expected a JSON object"))
}

fn as_arr<'v>(v: &'v Value, loc: &str) -> Result<&'v Vec<Value>> {
    v.as_array()
        .ok_or_else(|| Error::parse(loc, "expected a JSON array"))
}

fn as_str<'v>(v: &'v Value, loc: &str) -> Result<&'v str> {
    v.as_str()
        .ok_or_else(|| Error::parse(loc, "expected a string"))
}

fn as_usize(v: &Value, loc: &str) -> Result<usize> {
    v.as_u64()
        .map(|n| n as usize)
        .ok_or_else(|| Error::parse(loc, "expected a non-negative integer"))
}

// ----- structures -----

pub fn structure_to_json(s: &Structure) -> Value {
    let signature: Vec<Value> = s
        .signature()
        .symbols()
        .map(|(name, arity)| json!({"name": name, "arity": arity}))
        .collect();
    let mut relations = Map::new();
    for (idx, (name, _)) in s.signature().symbols().enumerate() {
        let tuples: Vec<Value> = s
            .tuples(idx)
            .map(|t| Value::Array(t.iter().map(|&e| json!(e)).collect()))
            .collect();
        relations.insert(name.to_string(), Value::Array(tuples));
    }
    let mut out = Map::new();
    out.insert("signature".into(), Value::Array(signature));
    match s.labels() {
        Some(labels) => {
            out.insert(
                "labels".into(),
                Value::Array(labels.iter().map(|l| json!(l)).collect()),
            );
        }
        None => {
            out.insert("universe".into(), json!(s.universe()));
        }
    }
    out.insert("relations".into(), Value::Object(relations));
    Value::Object(out)
}

pub fn structure_from_json(v: &Value) -> Result<Structure> {
    let obj = as_obj(v, "structure")?;

    let sig_arr = as_arr(want(v, "signature", "structure")?, "signature")?;
    let mut symbols = Vec::with_capacity(sig_arr.len());
    for (i, entry) in sig_arr.iter().enumerate() {
        let loc = format!("signature[{i}]");
        let name = as_str(want(entry, "name", &loc)?, &format!("{loc}.name"))?;
        let arity = as_usize(want(entry, "arity", &loc)?, &format!("{loc}.arity"))?;
        symbols.push((name.to_string(), arity));
    }
    let sig = Signature::new(symbols)?;

    let (universe, labels) = match (obj.get("universe"), obj.get("labels")) {
        (Some(u), None) => (as_usize(u, "universe")?, None),
        (None, Some(l)) => {
            let arr = as_arr(l, "labels")?;
            let mut labels = Vec::with_capacity(arr.len());
            for (i, lv) in arr.iter().enumerate() {
                labels.push(as_str(lv, &format!("labels[{i}]"))?.to_string());
            }
            (labels.len(), Some(labels))
        }
        (Some(u), Some(l)) => {
            let n = as_usize(u, "universe")?;
            let arr = as_arr(l, "labels")?;
            if arr.len() != n {
                return Err(Error::parse(
                    "labels",
                    format!("{} labels for universe of size {n}", arr.len()),
                ));
            }
            let mut labels = Vec::with_capacity(arr.len());
            for (i, lv) in arr.iter().enumerate() {
                labels.push(as_str(lv, &format!("labels[{i}]"))?.to_string());
            }
            (n, Some(labels))
        }
        (None, None) => {
            return Err(Error::parse(
                "structure",
                "missing field \"universe\" (or \"labels\")",
            ))
        }
    };

    let mut s = Structure::new(sig, universe);
    if let Some(labels) = labels {
        s = s.with_labels(labels)?;
    }
    let rels = as_obj(want(v, "relations", "structure")?, "relations")?;
    for (name, tuples_v) in rels {
        let loc = format!("relations.{name}");
        let arity = s
            .signature()
            .arity_of(name)
            .map_err(|_| Error::parse(&loc, "symbol not in signature"))?;
        let tuples = as_arr(tuples_v, &loc)?;
        for (ti, tv) in tuples.iter().enumerate() {
            let tloc = format!("{loc}[{ti}]");
            let arr = as_arr(tv, &tloc)?;
            if arr.len() != arity {
                return Err(Error::parse(
                    &tloc,
                    format!("tuple of length {} for arity {arity}", arr.len()),
                ));
            }
            let mut tuple = Vec::with_capacity(arity);
            for (pi, pv) in arr.iter().enumerate() {
                let ploc = format!("{tloc}[{pi}]");
                let e = as_usize(pv, &ploc)?;
                if e >= universe {
                    return Err(Error::parse(
                        &ploc,
                        format!("value {e} out of range 0..{universe}"),
                    ));
                }
                tuple.push(e);
            }
            s.add(name, tuple)?;
        }
    }
    Ok(s)
}

pub fn structure_from_str(text: &str) -> Result<Structure> {
    let v: Value =
        serde_json::from_str(text).map_err(|e| Error::parse("structure", e.to_string()))?;
    structure_from_json(&v)
}

pub fn structure_to_string_pretty(s: &Structure) -> String {
    serde_json::to_string_pretty(&structure_to_json(s)).expect("structure JSON serializes")
}

// ----- formulae -----

fn var_name(v: Var) -> String {
    v.to_string()
}

pub fn formula_to_json(f: &PpFormula) -> Value {
    let free: Vec<Value> = (0..f.free()).map(|i| json!(var_name(Var::Free(i)))).collect();
    let exists: Vec<Value> = (0..f.exists())
        .map(|j| json!(var_name(Var::Exist(j))))
        .collect();
    let atoms: Vec<Value> = f
        .atoms()
        .iter()
        .map(|a| match a {
            Atom::Rel { symbol, args } => json!({
                "rel": symbol,
                "args": args.iter().map(|&v| var_name(v)).collect::<Vec<_>>(),
            }),
            Atom::Eq(a, b) => json!({ "eq": [var_name(*a), var_name(*b)] }),
        })
        .collect();
    json!({"free": free, "exists": exists, "atoms": atoms})
}

pub fn formula_from_json(v: &Value) -> Result<PpFormula> {
    let free_arr = as_arr(want(v, "free", "formula")?, "free")?;
    let exists_arr = match v.get("exists") {
        Some(e) => as_arr(e, "exists")?.clone(),
        None => Vec::new(),
    };

    let mut names: BTreeMap<String, Var> = BTreeMap::new();
    for (i, nv) in free_arr.iter().enumerate() {
        let name = as_str(nv, &format!("free[{i}]"))?;
        if names.insert(name.to_string(), Var::Free(i)).is_some() {
            return Err(Error::parse(
                &format!("free[{i}]"),
                format!("duplicate variable name {name:?}"),
            ));
        }
    }
    for (j, nv) in exists_arr.iter().enumerate() {
        let name = as_str(nv, &format!("exists[{j}]"))?;
        if names.insert(name.to_string(), Var::Exist(j)).is_some() {
            return Err(Error::parse(
                &format!("exists[{j}]"),
                format!("duplicate variable name {name:?}"),
            ));
        }
    }
    let resolve = |name: &str, loc: &str| -> Result<Var> {
        names
            .get(name)
            .copied()
            .ok_or_else(|| Error::parse(loc, format!("unknown variable {name:?}")))
    };

    let atoms_arr = as_arr(want(v, "atoms", "formula")?, "atoms")?;
    let mut atoms = Vec::with_capacity(atoms_arr.len());
    for (ai, av) in atoms_arr.iter().enumerate() {
        let loc = format!("atoms[{ai}]");
        let obj = as_obj(av, &loc)?;
        if let Some(eq) = obj.get("eq") {
            let pair = as_arr(eq, &format!("{loc}.eq"))?;
            if pair.len() != 2 {
                return Err(Error::parse(
                    &format!("{loc}.eq"),
                    "expected exactly two variable names",
                ));
            }
            let a = resolve(
                as_str(&pair[0], &format!("{loc}.eq[0]"))?,
                &format!("{loc}.eq[0]"),
            )?;
            let b = resolve(
                as_str(&pair[1], &format!("{loc}.eq[1]"))?,
                &format!("{loc}.eq[1]"),
            )?;
            atoms.push(Atom::Eq(a, b));
        } else if let Some(rel) = obj.get("rel") {
            let symbol = as_str(rel, &format!("{loc}.rel"))?.to_string();
            let args_arr = as_arr(want(av, "args", &loc)?, &format!("{loc}.args"))?;
            let mut args = Vec::with_capacity(args_arr.len());
            for (pi, pv) in args_arr.iter().enumerate() {
                let ploc = format!("{loc}.args[{pi}]");
                args.push(resolve(as_str(pv, &ploc)?, &ploc)?);
            }
            atoms.push(Atom::Rel { symbol, args });
        } else {
            return Err(Error::parse(&loc, "atom needs a \"rel\" or \"eq\" field"));
        }
    }
    PpFormula::new(free_arr.len(), exists_arr.len(), atoms)
}

pub fn formula_from_str(text: &str) -> Result<PpFormula> {
    let v: Value =
        serde_json::from_str(text).map_err(|e| Error::parse("formula", e.to_string()))?;
    formula_from_json(&v)
}

pub fn formula_set_to_json(fs: &FormulaSet) -> Value {
    Value::Array(fs.members().iter().map(formula_to_json).collect())
}

pub fn formula_set_from_json(v: &Value) -> Result<FormulaSet> {
    let arr = as_arr(v, "formula set")?;
    let mut members = Vec::with_capacity(arr.len());
    for (i, fv) in arr.iter().enumerate() {
        members.push(
            formula_from_json(fv)
                .map_err(|e| Error::parse(&format!("formulas[{i}]"), e.to_string()))?,
        );
    }
    Ok(FormulaSet::mixed(members))
}

pub fn formula_set_from_str(text: &str) -> Result<FormulaSet> {
    let v: Value =
        serde_json::from_str(text).map_err(|e| Error::parse("formula set", e.to_string()))?;
    formula_set_from_json(&v)
}

// ----- definition sets -----

/// Named pp-definitions: source symbol -> defining formula over the target
/// signature. Order is the map's key order.
pub fn definitions_to_json(defs: &BTreeMap<String, PpFormula>) -> Value {
    let mut obj = Map::new();
    for (name, f) in defs {
        obj.insert(name.clone(), formula_to_json(f));
    }
    Value::Object(obj)
}

pub fn definitions_from_json(v: &Value) -> Result<BTreeMap<String, PpFormula>> {
    let obj = as_obj(v, "definitions")?;
    let mut out = BTreeMap::new();
    for (name, fv) in obj {
        let f = formula_from_json(fv)
            .map_err(|e| Error::parse(&format!("definitions.{name}"), e.to_string()))?;
        out.insert(name.clone(), f);
    }
    Ok(out)
}

pub fn definitions_from_str(text: &str) -> Result<BTreeMap<String, PpFormula>> {
    let v: Value =
        serde_json::from_str(text).map_err(|e| Error::parse("definitions", e.to_string()))?;
    definitions_from_json(&v)
}

/// Builds the signature a definition set defines: one symbol per key, with
/// the arity given by the defining formula's free-variable count.
pub fn defined_signature(defs: &BTreeMap<String, PpFormula>) -> Result<Arc<Signature>> {
    Signature::new(
        defs.iter()
            .map(|(name, f)| (name.clone(), f.free()))
            .collect(),
    )
}
