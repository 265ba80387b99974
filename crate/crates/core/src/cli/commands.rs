use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::{One, Zero};
use serde_json::{json, Map, Value};

use crate::ainfty::{check_ainf_functor, check_b_squared, ChainEvaluation, CoderQuiver};
use crate::evalhom::{solve_psi, Factor, PsiEv, PsiMap};
use crate::filtquiver::{GenId, HomElement, Quiver};
use crate::levels::{Level, Rational};
use crate::morphisms::{
    compose_cofunctors, evaluate_cofunctor, pull_coderivation, push_coderivation, CoderChain, Coderivation, Cofunctor,
    EvalError,
};
use crate::novikov::NovikovScalar;
use crate::tcoalg::{truncate_element, words_up_to, TailFlag, TensorElement, Word};

use super::format::{parse_word, print_hom, print_level, print_tensor, print_word, PsiDecl};
use super::report::{Check, Flag, Report};
use super::session::Session;
use super::{Common, LoadError};

const DEFAULT_N_MAX: usize = 3;
const DEFAULT_CHAIN_MAX: usize = 2;
const DEFAULT_SAMPLE_LEN: usize = 2;

pub(super) fn dispatch(name: &str, s: &Session, opts: &Common) -> Result<Report, LoadError> {
    let mut report = Report::new(name, format!("N={} E={}", s.window.max_len, print_level(&s.window.cutoff)));
    match name {
        "check-b2" => check_b2(s, opts, &mut report)?,
        "check-functor" => check_functor(s, opts, &mut report)?,
        "check-B2" => check_coder_b2(s, opts, &mut report)?,
        "compose" => compose(s, opts, &mut report)?,
        "push" => push(s, opts, &mut report)?,
        "pull" => pull(s, opts, &mut report)?,
        "eval" => eval(s, opts, &mut report)?,
        "solve-psi" => solve(s, opts, &mut report)?,
        _ => return Err(LoadError::Parse(format!("unknown command {name}"))),
    }
    Ok(report)
}

/// Undecided outcomes become report entries; everything else propagates.
fn undecided<T>(r: Result<T, EvalError>, report: &mut Report, relation: &str, index: &str) -> Result<Option<T>, LoadError> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(e @ (EvalError::Undecided(_) | EvalError::OutsideDomain { .. })) => {
            report.checks.push(Check::undecided(relation, index, e.to_string()));
            Ok(None)
        }
        Err(e) => Err(e.into()),
    }
}

fn selected<'a>(opts: &'a Common, all: impl Iterator<Item = &'a String>) -> Vec<String> {
    if opts.entities.is_empty() {
        all.cloned().collect()
    } else {
        opts.entities.clone()
    }
}

fn check_b2(s: &Session, opts: &Common, report: &mut Report) -> Result<(), LoadError> {
    let n = opts.n_max.unwrap_or(DEFAULT_N_MAX);
    for name in selected(opts, s.ainf.keys()) {
        let a = s.ainf_on(&name)?;
        let relation = format!("b2[{name}]");
        if let Some(rows) = undecided(check_b_squared(a, n), report, &relation, &format!("n<={n}"))? {
            for r in rows {
                let q = a.quiver();
                report.checks.push(Check::new(&relation, print_word(q, &r.word), print_hom(q, &r.residual), r.residual.is_zero()));
            }
        }
    }
    Ok(())
}

fn check_functor(s: &Session, opts: &Common, report: &mut Report) -> Result<(), LoadError> {
    let n = opts.n_max.unwrap_or(DEFAULT_N_MAX);
    let names = if opts.entities.is_empty() {
        s.functors
            .iter()
            .filter(|(_, f)| s.ainf.contains_key(&f.src().name) && s.ainf.contains_key(&f.dst().name))
            .map(|(n, _)| n.clone())
            .collect()
    } else {
        opts.entities.clone()
    };
    for name in names {
        let f = s.functor(&name)?;
        let (a, b) = (s.ainf_on(&f.src().name)?, s.ainf_on(&f.dst().name)?);
        let relation = format!("functor[{name}]");
        if let Some(rows) = undecided(check_ainf_functor(f, a, b, n), report, &relation, &format!("n<={n}"))? {
            for r in rows {
                let residual = print_hom(b.quiver(), &r.residual);
                report.checks.push(Check::new(&relation, print_word(a.quiver(), &r.word), residual, r.residual.is_zero()));
            }
        }
    }
    Ok(())
}

fn print_chain_eval(s: &Session, a: &Quiver, b: &Quiver, x: &ChainEvaluation) -> String {
    let names: BTreeMap<u64, &str> = s.functors.iter().map(|(n, f)| (f.id(), n.as_str())).collect();
    let mut terms = Vec::new();
    for ((fids, words, gens), c) in x.iter() {
        let fs: Vec<&str> = fids.iter().map(|id| names.get(id).copied().unwrap_or("?")).collect();
        let ws: Vec<String> = words.iter().map(|w| print_word(a, w)).collect();
        let gs: Vec<&str> = gens.iter().map(|g| b.gen(*g).name.as_str()).collect();
        let label = format!("[{} | {} | {}]", fs.join(","), ws.join(" | "), gs.join(" "));
        terms.extend(c.terms().iter().map(|t| format!("{t}*{label}")));
    }
    if terms.is_empty() {
        "0".into()
    } else {
        terms.join(" + ")
    }
}

fn check_coder_b2(s: &Session, opts: &Common, report: &mut Report) -> Result<(), LoadError> {
    let n = opts.n_max.unwrap_or(DEFAULT_CHAIN_MAX);
    let len = opts.word_len_max.unwrap_or(DEFAULT_SAMPLE_LEN);
    let mut groups: BTreeMap<(String, String), (Vec<Arc<Cofunctor>>, Vec<Arc<Coderivation>>)> = BTreeMap::new();
    let explicit = !opts.entities.is_empty();
    let names = selected(opts, s.functors.keys().chain(s.coders.keys()));
    for name in names {
        let (f, r) = match (s.functors.get(&name), s.coders.get(&name)) {
            (Some(f), _) => (f.clone(), None),
            (None, Some(r)) => (r.src().clone(), Some(r.clone())),
            (None, None) => return Err(LoadError::Resolve(format!("unknown functor or coderivation \"{name}\""))),
        };
        let key = (f.src().name.clone(), f.dst().name.clone());
        if !(s.ainf.contains_key(&key.0) && s.ainf.contains_key(&key.1)) {
            if explicit {
                s.ainf_on(&key.0)?;
                s.ainf_on(&key.1)?;
            }
            continue;
        }
        let g = groups.entry(key).or_default();
        match r {
            Some(r) => g.1.push(r),
            None => g.0.push(f),
        }
    }
    for ((a, b), (functors, coders)) in groups {
        let (aa, bb) = (s.ainf[&a].clone(), s.ainf[&b].clone());
        let (qa, qb) = (aa.quiver().clone(), bb.quiver().clone());
        let mut cq = CoderQuiver::new(aa, bb, functors, coders)?;
        let relation = format!("B2[{a},{b}]");
        for chain in cq.chains_up_to(n) {
            let index = chain.label();
            if let Some(r) = undecided(cq.b_squared_on(&chain, len), report, &relation, &index)? {
                let residual = print_chain_eval(s, &qa, &qb, &r.residual);
                report.checks.push(Check::new(&relation, index, residual, r.residual.is_zero()));
            }
        }
        let relation = format!("ev[{a},{b}]");
        for chain in cq.chains_up_to(n) {
            for w in words_up_to(&qa, len) {
                let index = format!("{} ⊠ {}", print_word(&qa, &w), chain.label());
                if let Some(r) = undecided(cq.defining_residual(&w, &chain), report, &relation, &index)? {
                    report.checks.push(Check::new(&relation, index, print_tensor(&qb, &r), r.is_zero()));
                }
            }
        }
    }
    Ok(())
}

fn nonzero_components(x: Vec<(Word, HomElement)>) -> Vec<(Word, HomElement)> {
    x.into_iter().filter(|(_, v)| !v.is_zero()).collect()
}

fn functor_snippet(f: &Cofunctor, len: usize) -> Result<Value, LoadError> {
    let (a, b) = (f.src(), f.dst());
    let objects: Map<String, Value> = a
        .objects()
        .iter()
        .zip(f.obj_map())
        .map(|(x, &y)| (x.clone(), json!(b.objects()[y])))
        .collect();
    let comps: Vec<Value> = nonzero_components(f.components_up_to(len)?)
        .iter()
        .map(|(w, v)| json!({"word": print_word(a, w), "value": print_hom(b, v)}))
        .collect();
    Ok(json!({"src": a.name, "dst": b.name, "objects": objects, "components": comps}))
}

fn coder_snippet(r: &Coderivation, len: usize) -> Result<Value, LoadError> {
    let (a, b) = (r.src().src(), r.src().dst());
    let comps: Vec<Value> = nonzero_components(r.components_up_to(len)?)
        .iter()
        .map(|(w, v)| json!({"word": print_word(a, w), "value": print_hom(b, v)}))
        .collect();
    Ok(json!({
        "src": r.src().name,
        "dst": r.dst().name,
        "deg": r.deg(),
        "level": print_level(r.lvl()),
        "components": comps,
    }))
}

fn length_flag(bound: usize, len: usize) -> Flag {
    if bound <= len {
        Flag::Sound
    } else {
        Flag::Lossy
    }
}

fn arity(opts: &Common, n: usize, usage: &str) -> Result<(), LoadError> {
    if opts.entities.len() < n {
        return Err(LoadError::Resolve(format!("expected {usage}")));
    }
    Ok(())
}

fn compose(s: &Session, opts: &Common, report: &mut Report) -> Result<(), LoadError> {
    arity(opts, 2, "at least two functors")?;
    let len = opts.word_len_max.unwrap_or(s.window.max_len);
    let mut h = s.functor(&opts.entities[0])?.clone();
    let mut bound = s.bounds[&opts.entities[0]];
    for name in &opts.entities[1..] {
        h = compose_cofunctors(&h, s.functor(name)?, &s.window)?;
        bound *= s.bounds[name];
    }
    report.output = Some(json!({"functors": {h.name.clone(): functor_snippet(&h, len)?}}));
    report.flag = Some(length_flag(bound, len));
    Ok(())
}

fn push(s: &Session, opts: &Common, report: &mut Report) -> Result<(), LoadError> {
    arity(opts, 2, "a coderivation and a functor")?;
    let len = opts.word_len_max.unwrap_or(s.window.max_len);
    let (r, h) = (s.coder(&opts.entities[0])?, s.functor(&opts.entities[1])?);
    let pushed = push_coderivation(r, h, &s.window)?;
    let (bf, bg, br, bh) = (s.bounds[&r.src().name], s.bounds[&r.dst().name], s.bounds[&r.name], s.bounds[&h.name]);
    let bound = bh * bf.max(bg).max(br);
    let functors: Map<String, Value> = [pushed.src(), pushed.dst()]
        .into_iter()
        .map(|f| Ok((f.name.clone(), functor_snippet(f, len)?)))
        .collect::<Result<_, LoadError>>()?;
    report.output = Some(json!({
        "coderivations": {pushed.name.clone(): coder_snippet(&pushed, len)?},
        "functors": functors,
    }));
    report.flag = Some(length_flag(bound, len));
    Ok(())
}

fn pull(s: &Session, opts: &Common, report: &mut Report) -> Result<(), LoadError> {
    arity(opts, 2, "a functor and a coderivation")?;
    let len = opts.word_len_max.unwrap_or(s.window.max_len);
    let (e, r) = (s.functor(&opts.entities[0])?, s.coder(&opts.entities[1])?);
    let pulled = pull_coderivation(e, r, &s.window)?;
    let (be, bf, bg, br) = (s.bounds[&e.name], s.bounds[&r.src().name], s.bounds[&r.dst().name], s.bounds[&r.name]);
    let bound = be * bf.max(bg).max(br);
    let functors: Map<String, Value> = [pulled.src(), pulled.dst()]
        .into_iter()
        .map(|f| Ok((f.name.clone(), functor_snippet(f, len)?)))
        .collect::<Result<_, LoadError>>()?;
    report.output = Some(json!({
        "coderivations": {pulled.name.clone(): coder_snippet(&pulled, len)?},
        "functors": functors,
    }));
    report.flag = Some(length_flag(bound, len));
    Ok(())
}

fn tail_flag(f: TailFlag) -> Flag {
    match f {
        TailFlag::Sound => Flag::Sound,
        TailFlag::Lossy => Flag::Lossy,
    }
}

fn eval(s: &Session, opts: &Common, report: &mut Report) -> Result<(), LoadError> {
    arity(opts, 2, "a word and a functor or coderivations")?;
    let (word, names) = (&opts.entities[0], &opts.entities[1..]);
    let result = if let [name] = names {
        if let Some(f) = s.functors.get(name) {
            let w = parse_word(f.src(), word)?;
            let x = evaluate_cofunctor(f, &TensorElement::basis(w), &s.window);
            Some((f.dst().clone(), x))
        } else {
            None
        }
    } else {
        None
    };
    let (q, x) = match result {
        Some(r) => r,
        None => {
            let items = names.iter().map(|n| s.coder(n).cloned()).collect::<Result<Vec<_>, _>>()?;
            let chain = CoderChain::new(items)?;
            let f = &chain.functors()[0];
            let w = parse_word(f.src(), word)?;
            let x = chain.eval_word(&w, &s.window.cutoff).map(|x| truncate_element(f.dst(), &x, &s.window));
            (f.dst().clone(), x)
        }
    };
    match x {
        Ok((value, flag)) => {
            report.value = Some(print_tensor(&q, &value));
            report.flag = Some(tail_flag(flag));
        }
        Err(e @ EvalError::Undecided(_)) => {
            report.value = Some(e.to_string());
            report.flag = Some(Flag::Undecided);
        }
        Err(e) => return Err(e.into()),
    }
    Ok(())
}

type Coordinate = (Word, GenId, Rational, i64);

fn coordinates(comps: &[(Word, HomElement)]) -> BTreeMap<Coordinate, Rational> {
    let mut out = BTreeMap::new();
    for (w, v) in comps {
        for (g, c) in v.iter() {
            for t in c.terms() {
                out.insert((w.clone(), *g, t.energy.clone(), t.expo), t.coeff.clone());
            }
        }
    }
    out
}

/// Coordinates whose term lies below the cutoff.
fn below(q: &Quiver, x: BTreeMap<Coordinate, Rational>, cutoff: &Level) -> BTreeMap<Coordinate, Rational> {
    x.into_iter()
        .filter(|((_, g, e, _), _)| !q.kind.energy(e).plus(&q.gen(*g).level).ge(cutoff))
        .collect()
}

/// Nonzero monomial shifts taking some term of `base` onto a term of
/// `target` with the same word and generator.
fn shifts(base: &BTreeMap<Coordinate, Rational>, target: &BTreeMap<Coordinate, Rational>) -> Vec<(Rational, i64)> {
    let mut out = Vec::new();
    for (w, g, e, n) in base.keys() {
        for (w2, g2, e2, n2) in target.keys() {
            if w == w2 && g == g2 && (e != e2 || n != n2) {
                out.push((e2 - e, n2 - n));
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

/// A solution of `Σ x_j col_j = rhs` over ℚ with free variables set to zero.
fn solve_linear(cols: &[BTreeMap<Coordinate, Rational>], rhs: &BTreeMap<Coordinate, Rational>) -> Option<Vec<Rational>> {
    let mut keys: Vec<&Coordinate> = rhs.keys().chain(cols.iter().flat_map(|c| c.keys())).collect();
    keys.sort();
    keys.dedup();
    let n = cols.len();
    let mut rows: Vec<Vec<Rational>> = keys
        .iter()
        .map(|k| {
            let mut row: Vec<Rational> = cols.iter().map(|c| c.get(*k).cloned().unwrap_or_else(Rational::zero)).collect();
            row.push(rhs.get(*k).cloned().unwrap_or_else(Rational::zero));
            row
        })
        .collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..n {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][col].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = Rational::one() / rows[r][col].clone();
        for v in rows[r].iter_mut() {
            *v = &*v * &inv;
        }
        for i in 0..rows.len() {
            if i != r && !rows[i][col].is_zero() {
                let factor = rows[i][col].clone();
                for j in 0..=n {
                    let d = &rows[r][j] * &factor;
                    rows[i][j] -= d;
                }
            }
        }
        pivots.push(col);
        r += 1;
    }
    if rows[r..].iter().any(|row| !row[n].is_zero()) {
        return None;
    }
    let mut x = vec![Rational::zero(); n];
    for (i, &col) in pivots.iter().enumerate() {
        x[col] = rows[i][n].clone();
    }
    Some(x)
}

fn solve(s: &Session, opts: &Common, report: &mut Report) -> Result<(), LoadError> {
    let n = opts.n_max.unwrap_or(DEFAULT_CHAIN_MAX);
    let len = opts.word_len_max.unwrap_or(DEFAULT_SAMPLE_LEN);
    let data = s.psi()?;
    let cq = data.quiver().clone();
    let decl = s.data.psi.as_ref().expect("psi section present");
    let solved = solve_psi(Arc::new(PsiEv(Arc::new(data))));
    let source = solved.source().clone();
    let factor = |w: &Word| [Factor::Word(cq.clone(), w.clone())];

    for c in words_up_to(&cq, n) {
        let mut bad = None;
        for a in words_up_to(&source, len) {
            match solved.verify(&a, &factor(&c), len) {
                Ok(()) => {}
                Err(EvalError::LeibnizResidual(m)) => {
                    bad = Some(m);
                    break;
                }
                Err(e) => return Err(e.into()),
            }
        }
        let zero = bad.is_none();
        report.checks.push(Check::new("psi", print_word(&cq, &c), bad.unwrap_or_else(|| "0".into()), zero));
    }

    let mut objects = BTreeMap::new();
    let mut matched = Vec::new();
    for (y, yname) in cq.objects().iter().enumerate() {
        let f = solved.object(&factor(&Word::empty(y)))?;
        let want = nonzero_components(f.components_up_to(len)?);
        let mut found = None;
        for (name, g) in &s.functors {
            if g.src().name == f.src().name
                && g.dst().name == f.dst().name
                && g.obj_map() == f.obj_map()
                && nonzero_components(g.components_up_to(len)?) == want
            {
                found = Some(name.clone());
                break;
            }
        }
        let Some(name) = found else {
            report.failure = Some(format!("ψ({yname}) matches no declared functor"));
            return Ok(());
        };
        objects.insert(yname.clone(), name.clone());
        matched.push(name);
    }

    let mut components = Vec::new();
    for c in words_up_to(&cq, n).into_iter().filter(|w| !w.is_empty()) {
        let r = solved.hat(&factor(&c))?;
        let target = coordinates(&nonzero_components(r.components_up_to(len)?));
        if target.is_empty() {
            continue;
        }
        let (fs, gs) = (&matched[c.src()], &matched[c.dst()]);
        let candidates: Vec<(&String, &Arc<Coderivation>)> = s
            .coders
            .iter()
            .filter(|(_, q)| q.src().name == *fs && q.dst().name == *gs && q.deg() == r.deg())
            .collect();
        let bases = candidates
            .iter()
            .map(|(_, q)| Ok(coordinates(&nonzero_components(q.components_up_to(len)?))))
            .collect::<Result<Vec<_>, LoadError>>()?;
        let cutoff = &s.window.cutoff;
        let target = below(r.src().dst(), target, cutoff);
        // Columns are Novikov-monomial multiples of the candidates, constant
        // multiples first so that rational solutions are preferred.
        let mut cols: Vec<(usize, (Rational, i64), BTreeMap<Coordinate, Rational>)> = Vec::new();
        for (j, base) in bases.iter().enumerate() {
            cols.push((j, (Rational::zero(), 0), below(r.src().dst(), base.clone(), cutoff)));
        }
        for (j, base) in bases.iter().enumerate() {
            for shift in shifts(base, &target) {
                let moved = base.iter().map(|((w, g, e, n), v)| ((w.clone(), *g, e + &shift.0, n + shift.1), v.clone())).collect();
                cols.push((j, shift, below(r.src().dst(), moved, cutoff)));
            }
        }
        let matrix: Vec<BTreeMap<Coordinate, Rational>> = cols.iter().map(|(_, _, c)| c.clone()).collect();
        let Some(x) = solve_linear(&matrix, &target) else {
            report.failure = Some(format!("ψ({}) is not a combination of declared coderivations", print_word(&cq, &c)));
            return Ok(());
        };
        let mut coeffs = vec![NovikovScalar::zero(); candidates.len()];
        for ((j, (e, n), _), v) in cols.iter().zip(x) {
            coeffs[*j] = &coeffs[*j] + &NovikovScalar::monomial(v, e.clone(), *n);
        }
        if let Some(bad) = coeffs.iter().find(|k| !k.in_ring(s.data.ring)) {
            report.failure = Some(format!("ψ({}) needs the coefficient {bad} outside the ring", print_word(&cq, &c)));
            return Ok(());
        }
        let terms: Vec<(NovikovScalar, String)> = candidates
            .iter()
            .zip(coeffs)
            .filter(|(_, k)| !k.is_zero())
            .map(|((name, _), k)| (k, (*name).clone()))
            .collect();
        components.push((c, terms));
    }
    let psi = PsiDecl { quiver: decl.quiver.clone(), objects, components };
    report.output = Some(json!({"psi": s.data.psi_value(&psi)}));
    report.flag = Some(Flag::Sound);
    Ok(())
}
