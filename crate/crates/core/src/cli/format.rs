//! The structure file: canonical JSON with sorted keys, words written by
//! generator name, elements as sums of `c*T^{e}*e^{n}*name` terms.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::{One, Zero};
use serde_json::{json, Map, Value};

use crate::ainfty::shift;
use crate::filtquiver::{HomElement, Quiver};
use crate::levels::{DiscreteLevel, Level, LevelKind, Rational};
use crate::novikov::{NovikovScalar, RingVariant, Term};
use crate::tcoalg::{TensorElement, Window, Word};

use super::LoadError;

#[derive(Debug, Clone, PartialEq)]
pub struct FunctorDecl {
    pub src: String,
    pub dst: String,
    pub objects: BTreeMap<String, String>,
    pub components: Vec<(Word, HomElement)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoderDecl {
    pub src: String,
    pub dst: String,
    pub deg: i64,
    pub level: Level,
    pub components: Vec<(Word, HomElement)>,
}

/// ψ on the free cocategory of a quiver: objects to functor names, words to
/// combinations of coderivation names.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiDecl {
    pub quiver: String,
    pub objects: BTreeMap<String, String>,
    pub components: Vec<(Word, Vec<(NovikovScalar, String)>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FileData {
    pub kind: LevelKind,
    pub ring: RingVariant,
    pub window: Window,
    pub quivers: BTreeMap<String, Arc<Quiver>>,
    pub ainf: BTreeMap<String, Vec<(Word, HomElement)>>,
    pub functors: BTreeMap<String, FunctorDecl>,
    pub coderivations: BTreeMap<String, CoderDecl>,
    pub psi: Option<PsiDecl>,
}

fn parse_err(msg: impl Into<String>) -> LoadError {
    LoadError::Parse(msg.into())
}

fn field<'a>(obj: &'a Value, key: &str, ctx: &str) -> Result<&'a Value, LoadError> {
    obj.get(key).ok_or_else(|| parse_err(format!("{ctx}: missing \"{key}\"")))
}

fn as_str<'a>(v: &'a Value, ctx: &str) -> Result<&'a str, LoadError> {
    v.as_str().ok_or_else(|| parse_err(format!("{ctx}: expected a string")))
}

fn as_obj<'a>(v: &'a Value, ctx: &str) -> Result<&'a Map<String, Value>, LoadError> {
    v.as_object().ok_or_else(|| parse_err(format!("{ctx}: expected an object")))
}

fn as_arr<'a>(v: &'a Value, ctx: &str) -> Result<&'a Vec<Value>, LoadError> {
    v.as_array().ok_or_else(|| parse_err(format!("{ctx}: expected an array")))
}

fn as_int(v: &Value, ctx: &str) -> Result<i64, LoadError> {
    v.as_i64().ok_or_else(|| parse_err(format!("{ctx}: expected an integer")))
}

pub fn parse_rational(s: &str) -> Result<Rational, LoadError> {
    let s = s.trim();
    let bad = || parse_err(format!("bad rational \"{s}\""));
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n, d),
        None => (s, "1"),
    };
    let n: num_bigint::BigInt = n.trim().parse().map_err(|_| bad())?;
    let d: num_bigint::BigInt = d.trim().parse().map_err(|_| bad())?;
    if d.is_zero() {
        return Err(bad());
    }
    Ok(Rational::new(n, d))
}

pub fn parse_level(kind: LevelKind, s: &str) -> Result<Level, LoadError> {
    if s.trim() == "inf" {
        return Ok(match kind {
            LevelKind::Discrete => Level::Discrete(DiscreteLevel::Inf),
            _ => Level::Infinity,
        });
    }
    kind.level(parse_rational(s)?).map_err(|e| parse_err(e.to_string()))
}

pub fn print_level(l: &Level) -> String {
    match l {
        Level::Rat(q) | Level::RatPlus(q) => q.to_string(),
        Level::Discrete(DiscreteLevel::Zero) => "0".into(),
        Level::Discrete(DiscreteLevel::Inf) | Level::Infinity => "inf".into(),
    }
}

pub fn parse_kind(s: &str) -> Result<LevelKind, LoadError> {
    match s {
        "rat" => Ok(LevelKind::Rat),
        "ratplus" => Ok(LevelKind::RatPlus),
        "discrete" => Ok(LevelKind::Discrete),
        _ => Err(parse_err(format!("unknown level monoid \"{s}\""))),
    }
}

pub fn parse_ring(s: &str) -> Result<RingVariant, LoadError> {
    match s {
        "nov" => Ok(RingVariant::Nov),
        "nov0" => Ok(RingVariant::Nov0),
        "plain" => Ok(RingVariant::Plain),
        _ => Err(parse_err(format!("unknown coefficient ring \"{s}\""))),
    }
}

pub fn parse_word(q: &Quiver, s: &str) -> Result<Word, LoadError> {
    let s = s.trim();
    if let Some(obj) = s.strip_prefix('@') {
        let x = q.object_id(obj).map_err(|e| parse_err(e.to_string()))?;
        return Ok(Word::empty(x));
    }
    let letters = s
        .split_whitespace()
        .map(|n| q.gen_id(n).map_err(|e| parse_err(e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    if letters.is_empty() {
        return Err(parse_err("empty word; write @OBJECT for an identity"));
    }
    Word::from_letters(q, letters).map_err(|e| parse_err(format!("word \"{s}\": {e}")))
}

/// Splits `x + y - z` into signed terms.
fn split_terms(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let chars: Vec<char> = s.chars().collect();
    let mut depth = 0;
    let mut i = 0;
    while i < chars.len() {
        let ch = chars[i];
        match ch {
            '{' | '[' | '(' => depth += 1,
            '}' | ']' | ')' => depth -= 1,
            _ => {}
        }
        let at_sep = depth == 0 && (ch == '+' || ch == '-') && !cur.trim().is_empty() && !cur.trim_end().ends_with('*');
        if at_sep {
            out.push(cur.trim().to_string());
            cur = String::new();
            if ch == '-' {
                cur.push('-');
            }
        } else {
            cur.push(ch);
        }
        i += 1;
    }
    if !cur.trim().is_empty() {
        out.push(cur.trim().to_string());
    }
    out
}

fn parse_power(body: &str, prefix: &str) -> Option<String> {
    if body == prefix {
        return Some("1".into());
    }
    let rest = body.strip_prefix(prefix)?.strip_prefix('^')?;
    Some(rest.strip_prefix('{').and_then(|r| r.strip_suffix('}')).unwrap_or(rest).to_string())
}

/// One term `c*T^{e}*e^{n}*name` with every factor optional except the name
/// when `named`.
fn parse_term(kind: LevelKind, s: &str, named: bool) -> Result<(NovikovScalar, Option<String>), LoadError> {
    let mut s = s.trim();
    let mut coeff = Rational::one();
    if let Some(rest) = s.strip_prefix('-') {
        coeff = -coeff;
        s = rest.trim();
    }
    let mut factors: Vec<&str> = s.split('*').map(str::trim).collect();
    let name = if named {
        let last = factors.pop().filter(|n| !n.is_empty()).ok_or_else(|| parse_err(format!("term \"{s}\" lacks a name")))?;
        Some(last.to_string())
    } else {
        None
    };
    let (mut energy, mut expo) = (Rational::zero(), 0i64);
    for f in factors {
        if f.is_empty() {
            return Err(parse_err(format!("empty factor in \"{s}\"")));
        }
        if let Some(p) = parse_power(f, "T") {
            energy += parse_rational(&p)?;
        } else if let Some(p) = parse_power(f, "e") {
            expo += p.trim().parse::<i64>().map_err(|_| parse_err(format!("bad exponent \"{p}\"")))?;
        } else {
            coeff *= parse_rational(f)?;
        }
    }
    kind.level(energy.clone()).map_err(|e| parse_err(e.to_string()))?;
    Ok((NovikovScalar::monomial(coeff, energy, expo), name))
}

pub fn parse_scalar(kind: LevelKind, s: &str) -> Result<NovikovScalar, LoadError> {
    if s.trim() == "0" {
        return Ok(NovikovScalar::zero());
    }
    let mut out = NovikovScalar::zero();
    for t in split_terms(s) {
        out = &out + &parse_term(kind, &t, false)?.0;
    }
    Ok(out)
}

/// A combination of names; the caller resolves them.
pub fn parse_named(kind: LevelKind, s: &str) -> Result<Vec<(NovikovScalar, String)>, LoadError> {
    if s.trim() == "0" {
        return Ok(Vec::new());
    }
    let mut out: Vec<(NovikovScalar, String)> = Vec::new();
    for t in split_terms(s) {
        let (c, name) = parse_term(kind, &t, true)?;
        let name = name.expect("named term");
        match out.iter_mut().find(|(_, n)| *n == name) {
            Some(slot) => slot.0 = &slot.0 + &c,
            None => out.push((c, name)),
        }
    }
    out.retain(|(c, _)| !c.is_zero());
    out.sort_by(|a, b| a.1.cmp(&b.1));
    Ok(out)
}

pub fn parse_hom(q: &Quiver, s: &str) -> Result<HomElement, LoadError> {
    let mut out = HomElement::zero();
    for (c, name) in parse_named(q.kind, s)? {
        out.add_term(q.gen_id(&name).map_err(|e| parse_err(e.to_string()))?, c);
    }
    Ok(out)
}

fn term_strings(c: &NovikovScalar, name: &str) -> Vec<String> {
    c.terms().iter().map(|t: &Term| format!("{t}*{name}")).collect()
}

fn join_terms(terms: Vec<String>) -> String {
    if terms.is_empty() {
        "0".into()
    } else {
        terms.join(" + ")
    }
}

pub fn print_hom(q: &Quiver, x: &HomElement) -> String {
    join_terms(x.iter().flat_map(|(g, c)| term_strings(c, &q.gen(*g).name)).collect())
}

pub fn print_named(x: &[(NovikovScalar, String)]) -> String {
    join_terms(x.iter().flat_map(|(c, n)| term_strings(c, n)).collect())
}

pub fn print_tensor(q: &Quiver, x: &TensorElement) -> String {
    join_terms(x.iter().flat_map(|(w, c)| term_strings(c, &format!("[{}]", w.display(q)))).collect())
}

pub fn print_word(q: &Quiver, w: &Word) -> String {
    w.display(q).to_string()
}

/// Sums repeated words and drops zero values, sorted by word.
pub fn normalize_rules(rules: Vec<(Word, HomElement)>) -> Vec<(Word, HomElement)> {
    let mut map: BTreeMap<Word, HomElement> = BTreeMap::new();
    for (w, v) in rules {
        map.entry(w).or_default().add_assign(&v);
    }
    map.into_iter().filter(|(_, v)| !v.is_zero()).collect()
}

fn parse_rules(a: &Quiver, b: &Quiver, v: &Value, ctx: &str) -> Result<Vec<(Word, HomElement)>, LoadError> {
    let mut rules = Vec::new();
    for (i, r) in as_arr(v, ctx)?.iter().enumerate() {
        let ctx = format!("{ctx}[{i}]");
        let w = parse_word(a, as_str(field(r, "word", &ctx)?, &ctx)?).map_err(|e| e.within(&ctx))?;
        let value = parse_hom(b, as_str(field(r, "value", &ctx)?, &ctx)?).map_err(|e| e.within(&ctx))?;
        rules.push((w, value));
    }
    Ok(normalize_rules(rules))
}

fn parse_quiver(name: &str, kind: LevelKind, v: &Value) -> Result<Quiver, LoadError> {
    let ctx = format!("quivers.{name}");
    let mut q = Quiver::new(name, kind);
    for o in as_arr(field(v, "objects", &ctx)?, &ctx)? {
        q.add_object(as_str(o, &ctx)?).map_err(|e| parse_err(format!("{ctx}: {e}")))?;
    }
    let gens = match v.get("generators") {
        Some(g) => as_arr(g, &ctx)?.clone(),
        None => Vec::new(),
    };
    for (i, g) in gens.iter().enumerate() {
        let ctx = format!("{ctx}.generators[{i}]");
        let gname = as_str(field(g, "name", &ctx)?, &ctx)?;
        let src = q.object_id(as_str(field(g, "src", &ctx)?, &ctx)?).map_err(|e| parse_err(format!("{ctx}: {e}")))?;
        let dst = q.object_id(as_str(field(g, "dst", &ctx)?, &ctx)?).map_err(|e| parse_err(format!("{ctx}: {e}")))?;
        let sdeg = match (g.get("sdeg"), g.get("deg")) {
            (Some(s), None) => as_int(s, &ctx)?,
            (None, Some(d)) => shift(as_int(d, &ctx)?),
            _ => return Err(parse_err(format!("{ctx}: give exactly one of \"sdeg\" and \"deg\""))),
        };
        let level = match g.get("level") {
            Some(l) => parse_level(kind, as_str(l, &ctx)?).map_err(|e| e.within(&ctx))?,
            None => kind.zero(),
        };
        q.add_generator(gname, src, dst, sdeg, level).map_err(|e| parse_err(format!("{ctx}: {e}")))?;
    }
    Ok(q)
}

fn print_quiver(q: &Quiver) -> Value {
    let gens: Vec<Value> = q
        .generators()
        .iter()
        .map(|g| {
            json!({
                "name": g.name,
                "src": q.objects()[g.src],
                "dst": q.objects()[g.dst],
                "sdeg": g.sdeg,
                "level": print_level(&g.level),
            })
        })
        .collect();
    json!({"objects": q.objects(), "generators": gens})
}

fn string_map(v: &Value, ctx: &str) -> Result<BTreeMap<String, String>, LoadError> {
    as_obj(v, ctx)?.iter().map(|(k, v)| Ok((k.clone(), as_str(v, ctx)?.to_string()))).collect()
}

fn quiver_ref<'a>(quivers: &'a BTreeMap<String, Arc<Quiver>>, name: &str, ctx: &str) -> Result<&'a Arc<Quiver>, LoadError> {
    quivers.get(name).ok_or_else(|| LoadError::Resolve(format!("{ctx}: unknown quiver \"{name}\"")))
}

fn check_ring(ring: RingVariant, x: &HomElement, ctx: &str) -> Result<(), LoadError> {
    for (_, c) in x.iter() {
        if !c.in_ring(ring) {
            return Err(parse_err(format!("{ctx}: coefficient {c} is not in the {ring} ring")));
        }
    }
    Ok(())
}

impl FileData {
    pub fn parse(text: &str) -> Result<FileData, LoadError> {
        let root: Value = serde_json::from_str(text)
            .map_err(|e| parse_err(format!("invalid JSON: {e}")))?;
        let kind = parse_kind(as_str(field(&root, "level_monoid", "file")?, "level_monoid")?)?;
        let ring = parse_ring(as_str(field(&root, "coefficients", "file")?, "coefficients")?)?;
        let wv = field(&root, "window", "file")?;
        let max_len = as_int(field(wv, "max_len", "window")?, "window.max_len")?;
        if max_len < 0 {
            return Err(parse_err("window.max_len must be nonnegative"));
        }
        let cutoff = parse_level(kind, as_str(field(wv, "cutoff", "window")?, "window.cutoff")?)?;
        let window = Window::new(max_len as usize, cutoff);

        let mut quivers = BTreeMap::new();
        if let Some(qs) = root.get("quivers") {
            for (name, v) in as_obj(qs, "quivers")? {
                quivers.insert(name.clone(), Arc::new(parse_quiver(name, kind, v)?));
            }
        }

        let mut ainf = BTreeMap::new();
        if let Some(a) = root.get("ainf") {
            for (name, v) in as_obj(a, "ainf")? {
                let ctx = format!("ainf.{name}");
                let q = quiver_ref(&quivers, name, &ctx)?;
                let rules = parse_rules(q, q, v, &ctx)?;
                for (_, x) in &rules {
                    check_ring(ring, x, &ctx)?;
                }
                ainf.insert(name.clone(), rules);
            }
        }

        let mut functors = BTreeMap::new();
        if let Some(fs) = root.get("functors") {
            for (name, v) in as_obj(fs, "functors")? {
                let ctx = format!("functors.{name}");
                let src = as_str(field(v, "src", &ctx)?, &ctx)?.to_string();
                let dst = as_str(field(v, "dst", &ctx)?, &ctx)?.to_string();
                let a = quiver_ref(&quivers, &src, &ctx)?;
                quiver_ref(&quivers, &dst, &ctx)?;
                let objects = match v.get("objects") {
                    Some(o) => string_map(o, &ctx)?,
                    None => BTreeMap::new(),
                };
                let components = match v.get("components") {
                    Some(c) => parse_rules(a, &quivers[&dst], c, &ctx)?,
                    None => Vec::new(),
                };
                for (_, x) in &components {
                    check_ring(ring, x, &ctx)?;
                }
                functors.insert(name.clone(), FunctorDecl { src, dst, objects, components });
            }
        }

        let mut coderivations = BTreeMap::new();
        if let Some(cs) = root.get("coderivations") {
            for (name, v) in as_obj(cs, "coderivations")? {
                let ctx = format!("coderivations.{name}");
                let src = as_str(field(v, "src", &ctx)?, &ctx)?.to_string();
                let dst = as_str(field(v, "dst", &ctx)?, &ctx)?.to_string();
                let f = functors
                    .get(&src)
                    .ok_or_else(|| LoadError::Resolve(format!("{ctx}: unknown functor \"{src}\"")))?;
                if !functors.contains_key(&dst) {
                    return Err(LoadError::Resolve(format!("{ctx}: unknown functor \"{dst}\"")));
                }
                let deg = as_int(field(v, "deg", &ctx)?, &ctx)?;
                let level = match v.get("level") {
                    Some(l) => parse_level(kind, as_str(l, &ctx)?)?,
                    None => kind.zero(),
                };
                let components = match v.get("components") {
                    Some(c) => parse_rules(&quivers[&f.src], &quivers[&f.dst], c, &ctx)?,
                    None => Vec::new(),
                };
                for (_, x) in &components {
                    check_ring(ring, x, &ctx)?;
                }
                coderivations.insert(name.clone(), CoderDecl { src, dst, deg, level, components });
            }
        }

        let psi = match root.get("psi") {
            None => None,
            Some(p) => {
                let ctx = "psi";
                let qname = as_str(field(p, "quiver", ctx)?, ctx)?.to_string();
                let q = quiver_ref(&quivers, &qname, ctx)?;
                let objects = string_map(field(p, "objects", ctx)?, ctx)?;
                for f in objects.values() {
                    if !functors.contains_key(f) {
                        return Err(LoadError::Resolve(format!("psi: unknown functor \"{f}\"")));
                    }
                }
                let mut components: BTreeMap<Word, Vec<(NovikovScalar, String)>> = BTreeMap::new();
                if let Some(cs) = p.get("components") {
                    for (i, r) in as_arr(cs, ctx)?.iter().enumerate() {
                        let ctx = format!("psi.components[{i}]");
                        let w = parse_word(q, as_str(field(r, "word", &ctx)?, &ctx)?)?;
                        let terms = parse_named(kind, as_str(field(r, "value", &ctx)?, &ctx)?)?;
                        for (c, n) in &terms {
                            if !coderivations.contains_key(n) {
                                return Err(LoadError::Resolve(format!("{ctx}: unknown coderivation \"{n}\"")));
                            }
                            if !c.in_ring(ring) {
                                return Err(parse_err(format!("{ctx}: coefficient {c} is not in the {ring} ring")));
                            }
                        }
                        let entry = components.entry(w).or_default();
                        let mut merged = entry.clone();
                        merged.extend(terms);
                        *entry = parse_named(kind, &print_named(&merged))?;
                    }
                }
                let components = components.into_iter().filter(|(_, t)| !t.is_empty()).collect();
                Some(PsiDecl { quiver: qname, objects, components })
            }
        };

        Ok(FileData { kind, ring, window, quivers, ainf, functors, coderivations, psi })
    }

    pub fn to_value(&self) -> Value {
        let mut root = Map::new();
        root.insert("level_monoid".into(), json!(self.kind.to_string()));
        root.insert("coefficients".into(), json!(self.ring.to_string()));
        root.insert(
            "window".into(),
            json!({"max_len": self.window.max_len, "cutoff": print_level(&self.window.cutoff)}),
        );
        root.insert(
            "quivers".into(),
            Value::Object(self.quivers.iter().map(|(n, q)| (n.clone(), print_quiver(q))).collect()),
        );
        if !self.ainf.is_empty() {
            let m = self.ainf.iter().map(|(n, r)| (n.clone(), print_rules_into(&self.quivers[n], &self.quivers[n], r))).collect();
            root.insert("ainf".into(), Value::Object(m));
        }
        if !self.functors.is_empty() {
            let m = self.functors.iter().map(|(n, f)| (n.clone(), self.functor_value(f))).collect();
            root.insert("functors".into(), Value::Object(m));
        }
        if !self.coderivations.is_empty() {
            let m = self.coderivations.iter().map(|(n, r)| (n.clone(), self.coder_value(r))).collect();
            root.insert("coderivations".into(), Value::Object(m));
        }
        if let Some(p) = &self.psi {
            root.insert("psi".into(), self.psi_value(p));
        }
        Value::Object(root)
    }

    pub fn functor_value(&self, f: &FunctorDecl) -> Value {
        let a = &self.quivers[&f.src];
        let b = &self.quivers[&f.dst];
        json!({
            "src": f.src,
            "dst": f.dst,
            "objects": f.objects,
            "components": print_rules_into(a, b, &f.components),
        })
    }

    pub fn coder_value(&self, r: &CoderDecl) -> Value {
        let f = &self.functors[&r.src];
        let a = &self.quivers[&f.src];
        let b = &self.quivers[&f.dst];
        json!({
            "src": r.src,
            "dst": r.dst,
            "deg": r.deg,
            "level": print_level(&r.level),
            "components": print_rules_into(a, b, &r.components),
        })
    }

    pub fn psi_value(&self, p: &PsiDecl) -> Value {
        let q = &self.quivers[&p.quiver];
        let comps: Vec<Value> = p
            .components
            .iter()
            .map(|(w, t)| json!({"word": print_word(q, w), "value": print_named(t)}))
            .collect();
        json!({"quiver": p.quiver, "objects": p.objects, "components": comps})
    }

    pub fn to_canonical(&self) -> String {
        canonical(&self.to_value())
    }
}

pub fn canonical(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

fn print_rules_into(a: &Quiver, b: &Quiver, rules: &[(Word, HomElement)]) -> Value {
    Value::Array(
        rules
            .iter()
            .map(|(w, v)| json!({"word": print_word(a, w), "value": print_hom(b, v)}))
            .collect(),
    )
}

impl LoadError {
    fn within(self, ctx: &str) -> LoadError {
        match self {
            LoadError::Parse(m) if !m.starts_with(ctx) => LoadError::Parse(format!("{ctx}: {m}")),
            other => other,
        }
    }
}
