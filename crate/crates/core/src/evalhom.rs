//! Evaluation `ev: T̂𝔞 ⊠ T Coder → T̂𝔟`, the ψ-solver inverting
//! `ψ ↦ (𝔞⊠ψ)·ev`, and the composition cofunctor `M`.
//!
//! A box word `a ⊠ c¹ ⊠ … ⊠ c^q` has one word per factor; a factor is either
//! a word of a graded quiver or a composable chain of coderivations. A
//! cofunctor on a box product acts by cutting all factors simultaneously into
//! the same number of pieces; moving the pieces into place costs the sign
//! `Σ_{i<i', j'<j} |x^i_j||x^{i'}_{j'}|`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::ainfty::ChainSum;
use crate::filtquiver::{HomElement, ObjId, Quiver, QuiverError};
use crate::levels::Level;
use crate::morphisms::{
    CoderChain, Coderivation, Cofunctor, EvalError, LazyComponents,
};
use crate::novikov::NovikovScalar;
use crate::tcoalg::{append_hom, truncate_modulo, TensorElement, Window, Word};

#[derive(Clone, Debug)]
pub enum Factor {
    Word(Arc<Quiver>, Word),
    Chain(CoderChain),
}

/// Identity of a factor: the word itself, or the ids of a chain.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FactorKey {
    Word(Word),
    Chain(Vec<u64>),
}

impl Factor {
    pub fn len(&self) -> usize {
        match self {
            Factor::Word(_, w) => w.len(),
            Factor::Chain(c) => c.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn slice(&self, a: usize, b: usize) -> Factor {
        match self {
            Factor::Word(q, w) => Factor::Word(q.clone(), w.slice(a, b)),
            Factor::Chain(c) => Factor::Chain(c.slice(a, b)),
        }
    }

    pub fn degree(&self) -> i64 {
        match self {
            Factor::Word(q, w) => w.degree(q),
            Factor::Chain(c) => c.degree(),
        }
    }

    pub fn is_odd(&self) -> bool {
        self.degree().rem_euclid(2) == 1
    }

    pub fn level(&self) -> Level {
        match self {
            Factor::Word(q, w) => w.level(q),
            Factor::Chain(c) => c.level(),
        }
    }

    pub fn key(&self) -> FactorKey {
        match self {
            Factor::Word(_, w) => FactorKey::Word(w.clone()),
            Factor::Chain(c) => FactorKey::Chain(c.key()),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Factor::Word(q, w) => w.display(q).to_string(),
            Factor::Chain(c) => c.label(),
        }
    }
}

fn keys(c: &[Factor]) -> Vec<FactorKey> {
    c.iter().map(Factor::key).collect()
}

fn empties_at(c: &[Factor], pos: &[usize]) -> Vec<Factor> {
    c.iter().zip(pos).map(|(f, &p)| f.slice(p, p)).collect()
}

/// A cofunctor `T̂𝔞 ⊠ 𝔠 → T̂𝔟` given by its components on box words.
pub trait BoxCofunctor: Send + Sync {
    fn source(&self) -> &Arc<Quiver>;
    fn target(&self) -> &Arc<Quiver>;
    fn window(&self) -> &Window;
    /// Target object of `X ⊠ Y⃗`, the objects given as empty factors.
    fn object(&self, x: ObjId, c: &[Factor]) -> Result<ObjId, EvalError>;
    fn component(&self, a: &Word, c: &[Factor]) -> Result<HomElement, EvalError>;
}

/// Sign bookkeeping for simultaneous cuts: adding a piece of factor `i`
/// moves it past the pieces already consumed from every later factor.
fn piece_sign(factors: &[Factor], pos: &[usize], ends: &[usize]) -> bool {
    let mut odd = false;
    for i in 0..factors.len() {
        if !factors[i].slice(pos[i], ends[i]).is_odd() {
            continue;
        }
        for i2 in i + 1..factors.len() {
            odd ^= factors[i2].slice(0, pos[i2]).is_odd();
        }
    }
    odd
}

/// All end vectors `e ≥ pos` componentwise.
fn end_vectors(pos: &[usize], lens: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for (&p, &n) in pos.iter().zip(lens) {
        out = out
            .into_iter()
            .flat_map(|v| {
                (p..=n).map(move |e| {
                    let mut v = v.clone();
                    v.push(e);
                    v
                })
            })
            .collect();
    }
    out
}

/// The full value `(a ⊠ c)φ` modulo `F^cutoff`. All-empty pieces insert
/// `φ₀`, which must vanish or have positive level.
pub fn box_full(phi: &dyn BoxCofunctor, a: &Word, c: &[Factor], cutoff: &Level) -> Result<TensorElement, EvalError> {
    let mut factors = vec![Factor::Word(phi.source().clone(), a.clone())];
    factors.extend_from_slice(c);
    let lens: Vec<usize> = factors.iter().map(Factor::len).collect();
    let start = vec![0; factors.len()];
    let x = phi.object(a.src(), &empties_at(c, &start[1..]))?;
    let mut run = BoxRun { phi, factors, lens, cutoff, curvature: HashMap::new(), out: TensorElement::zero() };
    let acc = run.prune(TensorElement::basis(Word::empty(x)), &start);
    run.go(start, acc)?;
    Ok(run.out)
}

struct BoxRun<'a> {
    phi: &'a dyn BoxCofunctor,
    factors: Vec<Factor>,
    lens: Vec<usize>,
    cutoff: &'a Level,
    curvature: HashMap<Vec<usize>, HomElement>,
    out: TensorElement,
}

impl BoxRun<'_> {
    fn prune(&self, acc: TensorElement, pos: &[usize]) -> TensorElement {
        let q = self.phi.target();
        let rest = self
            .factors
            .iter()
            .zip(pos.iter().zip(&self.lens))
            .fold(q.kind.zero(), |acc, (f, (&p, &n))| acc.plus(&f.slice(p, n).level()));
        acc.truncate_with(q.kind, |w| w.level(q).plus(&rest), self.cutoff)
    }

    fn piece_value(&mut self, pos: &[usize], ends: &[usize]) -> Result<HomElement, EvalError> {
        let pieces: Vec<Factor> = self.factors.iter().zip(pos.iter().zip(ends)).map(|(f, (&p, &e))| f.slice(p, e)).collect();
        let Factor::Word(_, a) = &pieces[0] else { unreachable!("the first factor is a word") };
        if pos != ends {
            return self.phi.component(a, &pieces[1..]);
        }
        if let Some(v) = self.curvature.get(pos) {
            return Ok(v.clone());
        }
        let q = self.phi.target();
        let v = q.truncate_hom(&self.phi.component(a, &pieces[1..])?, self.cutoff);
        if !v.is_zero() && !q.hom_level(&v).is_positive() {
            return Err(EvalError::Undecided(format!("curvature of level {} in a box evaluation", q.hom_level(&v))));
        }
        self.curvature.insert(pos.to_vec(), v.clone());
        Ok(v)
    }

    fn go(&mut self, pos: Vec<usize>, acc: TensorElement) -> Result<(), EvalError> {
        if acc.is_zero() {
            return Ok(());
        }
        if pos == self.lens {
            self.out.add_assign(&acc);
        }
        for ends in end_vectors(&pos, &self.lens) {
            let v = self.piece_value(&pos, &ends)?;
            if v.is_zero() {
                continue;
            }
            let mut next = append_hom(self.phi.target(), &acc, &v);
            if piece_sign(&self.factors, &pos, &ends) {
                next = next.neg();
            }
            let next = self.prune(next, &ends);
            self.go(ends, next)?;
        }
        Ok(())
    }
}

/// All cuts of `c` into pieces that are nonempty in some factor, with the
/// sign of moving the pieces into place.
pub fn box_decompositions(c: &[Factor]) -> Vec<(bool, Vec<Vec<Factor>>)> {
    fn go(c: &[Factor], lens: &[usize], pos: Vec<usize>, odd: bool, acc: Vec<Vec<Factor>>, out: &mut Vec<(bool, Vec<Vec<Factor>>)>) {
        if pos == lens {
            out.push((odd, acc));
            return;
        }
        for ends in end_vectors(&pos, lens) {
            if ends == pos {
                continue;
            }
            let piece: Vec<Factor> = c.iter().zip(pos.iter().zip(&ends)).map(|(f, (&p, &e))| f.slice(p, e)).collect();
            let mut acc = acc.clone();
            acc.push(piece);
            go(c, lens, ends.clone(), odd ^ piece_sign(c, &pos, &ends), acc, out);
        }
    }
    let lens: Vec<usize> = c.iter().map(Factor::len).collect();
    let mut out = Vec::new();
    go(c, &lens, vec![0; c.len()], false, Vec::new(), &mut out);
    out
}

/// An augmentation-preserving cofunctor `ψ: 𝔠 → T Coder(T̂𝔞, T̂𝔟)`: objects
/// go to cofunctors, nonempty box words to coderivations.
pub trait PsiMap: Send + Sync {
    fn source(&self) -> &Arc<Quiver>;
    fn target(&self) -> &Arc<Quiver>;
    fn window(&self) -> &Window;
    fn object(&self, c: &[Factor]) -> Result<Arc<Cofunctor>, EvalError>;
    fn hat(&self, c: &[Factor]) -> Result<Arc<Coderivation>, EvalError>;
}

/// `(c)ψ` as a formal sum of chains.
pub fn psi_full(psi: &dyn PsiMap, c: &[Factor]) -> Result<ChainSum, EvalError> {
    let mut out = ChainSum::default();
    if c.iter().all(Factor::is_empty) {
        out.add(CoderChain::unit(psi.object(c)?), 1);
        return Ok(out);
    }
    for (odd, pieces) in box_decompositions(c) {
        let items = pieces.iter().map(|p| psi.hat(p)).collect::<Result<Vec<_>, _>>()?;
        out.add(CoderChain::new(items)?, if odd { -1 } else { 1 });
    }
    Ok(out)
}

/// `φ = (𝔞⊠ψ)·ev`.
pub struct PsiEv(pub Arc<dyn PsiMap>);

impl BoxCofunctor for PsiEv {
    fn source(&self) -> &Arc<Quiver> {
        self.0.source()
    }

    fn target(&self) -> &Arc<Quiver> {
        self.0.target()
    }

    fn window(&self) -> &Window {
        self.0.window()
    }

    fn object(&self, x: ObjId, c: &[Factor]) -> Result<ObjId, EvalError> {
        Ok(self.0.object(c)?.obj_map()[x])
    }

    fn component(&self, a: &Word, c: &[Factor]) -> Result<HomElement, EvalError> {
        // Chains of k ≥ 2 coderivations evaluate to words of length ≥ k, so
        // only the undivided piece reaches the first component.
        if c.iter().all(Factor::is_empty) {
            self.0.object(c)?.component(a)
        } else {
            self.0.hat(c)?.component(a)
        }
    }
}

/// `(a ⊠ c)(𝔞⊠ψ)ev` computed chain by chain.
pub fn psi_ev_full(psi: &dyn PsiMap, a: &Word, c: &[Factor], cutoff: &Level) -> Result<TensorElement, EvalError> {
    let mut out = TensorElement::zero();
    for (chain, k) in psi_full(psi, c)?.iter() {
        out.add_scaled(&chain.eval_word(a, cutoff)?, &NovikovScalar::constant(crate::levels::int(k)));
    }
    Ok(out)
}

/// The identity of `T Coder`, making `(𝔞⊠id)·ev = ev` a box cofunctor.
pub struct EvPsi {
    source: Arc<Quiver>,
    target: Arc<Quiver>,
    window: Window,
    zeros: Mutex<HashMap<Vec<u64>, Arc<Coderivation>>>,
}

impl EvPsi {
    pub fn new(source: Arc<Quiver>, target: Arc<Quiver>, window: &Window) -> Self {
        EvPsi { source, target, window: window.clone(), zeros: Mutex::new(HashMap::new()) }
    }
}

fn single_chain(c: &[Factor]) -> Result<&CoderChain, EvalError> {
    match c {
        [Factor::Chain(ch)] => Ok(ch),
        _ => Err(EvalError::Inconsistent("expected one chain factor".into())),
    }
}

impl PsiMap for EvPsi {
    fn source(&self) -> &Arc<Quiver> {
        &self.source
    }

    fn target(&self) -> &Arc<Quiver> {
        &self.target
    }

    fn window(&self) -> &Window {
        &self.window
    }

    fn object(&self, c: &[Factor]) -> Result<Arc<Cofunctor>, EvalError> {
        Ok(single_chain(c)?.functors()[0].clone())
    }

    fn hat(&self, c: &[Factor]) -> Result<Arc<Coderivation>, EvalError> {
        let ch = single_chain(c)?;
        if let [r] = ch.items() {
            return Ok(r.clone());
        }
        let mut zeros = self.zeros.lock().unwrap();
        let z = zeros.entry(ch.key()).or_insert_with(|| {
            let fs = ch.functors();
            Coderivation::zero("0", fs[0].clone(), fs[fs.len() - 1].clone(), ch.degree(), ch.level())
        });
        Ok(z.clone())
    }
}

/// ψ presented on an abstract graded quiver `𝔠¹` (so `𝔠 = T𝔠¹`): objects
/// to cofunctors, and nonempty words to linear combinations of given
/// coderivations.
pub struct PsiData {
    source: Arc<Quiver>,
    target: Arc<Quiver>,
    window: Window,
    quiver: Arc<Quiver>,
    objects: Vec<Arc<Cofunctor>>,
    rules: HashMap<Word, Arc<Coderivation>>,
    zeros: Mutex<HashMap<Word, Arc<Coderivation>>>,
}

impl PsiData {
    pub fn new(
        quiver: Arc<Quiver>,
        objects: Vec<Arc<Cofunctor>>,
        rules: Vec<(Word, Vec<(NovikovScalar, Arc<Coderivation>)>)>,
    ) -> Result<Self, EvalError> {
        let Some(first) = objects.first() else {
            return Err(EvalError::Inconsistent("ψ needs at least one object".into()));
        };
        let (source, target, window) = (first.src().clone(), first.dst().clone(), first.window().clone());
        if objects.len() != quiver.objects().len() {
            return Err(QuiverError::HomMismatch(format!("object map of ψ on {}", quiver.name)).into());
        }
        let mut table = HashMap::new();
        for (w, terms) in rules {
            let label = w.display(&quiver).to_string();
            if w.is_empty() {
                return Err(EvalError::Inconsistent(format!("ψ on the empty word {label}")));
            }
            let (f, g) = (&objects[w.src()], &objects[w.dst()]);
            for (_, r) in &terms {
                if r.src().id() != f.id() || r.dst().id() != g.id() {
                    return Err(QuiverError::HomMismatch(format!("ψ({label}) uses {} between other cofunctors", r.name)).into());
                }
                if r.deg() != w.degree(&quiver) {
                    return Err(QuiverError::DegreeMismatch { expected: w.degree(&quiver), found: r.deg(), context: format!("ψ({label})") }.into());
                }
            }
            let combo = Coderivation::linear_combination(format!("ψ({label})"), terms)?;
            if !combo.lvl().ge(&w.level(&quiver)) {
                return Err(QuiverError::LevelViolation {
                    context: format!("ψ({label})"),
                    required: w.level(&quiver),
                    found: combo.lvl().clone(),
                }
                .into());
            }
            table.insert(w, combo);
        }
        Ok(PsiData { source, target, window, quiver, objects, rules: table, zeros: Mutex::new(HashMap::new()) })
    }

    pub fn quiver(&self) -> &Arc<Quiver> {
        &self.quiver
    }

    pub fn objects(&self) -> &[Arc<Cofunctor>] {
        &self.objects
    }

    fn word<'a>(&self, c: &'a [Factor]) -> Result<&'a Word, EvalError> {
        match c {
            [Factor::Word(_, w)] => Ok(w),
            _ => Err(EvalError::Inconsistent("expected one word factor".into())),
        }
    }
}

impl PsiMap for PsiData {
    fn source(&self) -> &Arc<Quiver> {
        &self.source
    }

    fn target(&self) -> &Arc<Quiver> {
        &self.target
    }

    fn window(&self) -> &Window {
        &self.window
    }

    fn object(&self, c: &[Factor]) -> Result<Arc<Cofunctor>, EvalError> {
        Ok(self.objects[self.word(c)?.src()].clone())
    }

    fn hat(&self, c: &[Factor]) -> Result<Arc<Coderivation>, EvalError> {
        let w = self.word(c)?;
        if let Some(r) = self.rules.get(w) {
            return Ok(r.clone());
        }
        let mut zeros = self.zeros.lock().unwrap();
        let z = zeros.entry(w.clone()).or_insert_with(|| {
            let (f, g) = (self.objects[w.src()].clone(), self.objects[w.dst()].clone());
            Coderivation::zero("0", f, g, w.degree(&self.quiver), w.level(&self.quiver))
        });
        Ok(z.clone())
    }
}

/// ψ recovered from `φ` by `(a)(c)ψ̌ = (a⊠c)φ − Σ_{k≥2} pr₁(a ⊠ cΔ̄^{(k)}ψ̌^{⊗k})ev`.
/// Chains of `k` coderivations evaluate to words of length at least `k`, so
/// the correction has no first component and the recursion closes at the
/// first step; [`SolvedPsi::verify`] checks the full equation, where all
/// corrections take part.
pub struct SolvedPsi {
    phi: Arc<dyn BoxCofunctor>,
    objects: Mutex<HashMap<Vec<FactorKey>, Arc<Cofunctor>>>,
    hats: Mutex<HashMap<Vec<FactorKey>, Arc<Coderivation>>>,
}

pub fn solve_psi(phi: Arc<dyn BoxCofunctor>) -> SolvedPsi {
    SolvedPsi { phi, objects: Mutex::new(HashMap::new()), hats: Mutex::new(HashMap::new()) }
}

fn label_of(c: &[Factor]) -> String {
    c.iter().map(Factor::label).collect::<Vec<_>>().join(" ⊠ ")
}

impl SolvedPsi {
    pub fn phi(&self) -> &Arc<dyn BoxCofunctor> {
        &self.phi
    }

    /// The full equation `(a⊠c)φ = (a⊠c)(𝔞⊠ψ)ev` and the Leibniz rule for
    /// `ψ̌(c)` on words up to `leibniz_len`.
    pub fn verify(&self, a: &Word, c: &[Factor], leibniz_len: usize) -> Result<(), EvalError> {
        let cutoff = self.phi.window().cutoff.clone();
        let lhs = box_full(self.phi.as_ref(), a, c, &cutoff)?;
        let rhs = psi_ev_full(self, a, c, &cutoff)?;
        let diff = truncate_modulo(self.phi.target(), &lhs.minus(&rhs), &cutoff);
        if !diff.is_zero() {
            return Err(EvalError::LeibnizResidual(format!(
                "on {} ⊠ {}: {} terms remain",
                a.display(self.phi.source()),
                label_of(c),
                diff.len()
            )));
        }
        if !c.iter().all(Factor::is_empty) {
            let r = self.hat(c)?;
            for w in crate::tcoalg::words_up_to(self.phi.source(), leibniz_len) {
                if !crate::morphisms::leibniz_residual(&r, &w)?.is_zero() {
                    return Err(EvalError::LeibnizResidual(format!("{} on {}", r.name, w.display(self.phi.source()))));
                }
            }
        }
        Ok(())
    }
}

impl PsiMap for SolvedPsi {
    fn source(&self) -> &Arc<Quiver> {
        self.phi.source()
    }

    fn target(&self) -> &Arc<Quiver> {
        self.phi.target()
    }

    fn window(&self) -> &Window {
        self.phi.window()
    }

    fn object(&self, c: &[Factor]) -> Result<Arc<Cofunctor>, EvalError> {
        let key = keys(c);
        if let Some(f) = self.objects.lock().unwrap().get(&key) {
            return Ok(f.clone());
        }
        let a = self.phi.source().clone();
        let obj_map = (0..a.objects().len()).map(|x| self.phi.object(x, c)).collect::<Result<Vec<_>, _>>()?;
        let (phi, cc, cutoff) = (self.phi.clone(), c.to_vec(), self.phi.window().cutoff.clone());
        let comp = LazyComponents::new(move |w| Ok(phi.target().truncate_hom(&phi.component(w, &cc)?, &cutoff)));
        let name = format!("ψ[{}]", label_of(c));
        let f = Cofunctor::with_components(name, a, self.phi.target().clone(), obj_map, comp, self.phi.window())?;
        Ok(self.objects.lock().unwrap().entry(key).or_insert(f).clone())
    }

    fn hat(&self, c: &[Factor]) -> Result<Arc<Coderivation>, EvalError> {
        let key = keys(c);
        if let Some(r) = self.hats.lock().unwrap().get(&key) {
            return Ok(r.clone());
        }
        let starts: Vec<Factor> = c.iter().map(|f| f.slice(0, 0)).collect();
        let ends: Vec<Factor> = c.iter().map(|f| f.slice(f.len(), f.len())).collect();
        let (f, g) = (self.object(&starts)?, self.object(&ends)?);
        let deg = c.iter().map(Factor::degree).sum();
        let kind = self.phi.target().kind;
        let lvl = c.iter().fold(kind.zero(), |acc, f| acc.plus(&f.level()));
        let (phi, cc, cutoff) = (self.phi.clone(), c.to_vec(), self.phi.window().cutoff.clone());
        let comp = LazyComponents::new(move |w| Ok(phi.target().truncate_hom(&phi.component(w, &cc)?, &cutoff)));
        let r = Coderivation::with_components(format!("ψ[{}]", label_of(c)), f, g, deg, lvl, comp);
        Ok(self.hats.lock().unwrap().entry(key).or_insert(r).clone())
    }
}

/// `φ = (ev⊠1)·ev` on `T̂𝔞 ⊠ T Coder(𝔞,𝔟) ⊠ T Coder(𝔟,𝔠)`, with components
/// `pr₁((a⊠u)ev ⊠ v)ev`.
pub struct CompositionPhi {
    source: Arc<Quiver>,
    target: Arc<Quiver>,
    window: Window,
}

impl CompositionPhi {
    pub fn new(source: Arc<Quiver>, target: Arc<Quiver>, window: &Window) -> Self {
        CompositionPhi { source, target, window: window.clone() }
    }

    fn chains<'a>(&self, c: &'a [Factor]) -> Result<(&'a CoderChain, &'a CoderChain), EvalError> {
        match c {
            [Factor::Chain(u), Factor::Chain(v)] => Ok((u, v)),
            _ => Err(EvalError::Inconsistent("composition takes two chains".into())),
        }
    }
}

/// The part of `x` of length one.
pub fn first_component(x: &TensorElement) -> HomElement {
    let mut out = HomElement::zero();
    for (w, c) in x.iter() {
        if let [g] = w.letters() {
            out.add_term(*g, c.clone());
        }
    }
    out
}

impl BoxCofunctor for CompositionPhi {
    fn source(&self) -> &Arc<Quiver> {
        &self.source
    }

    fn target(&self) -> &Arc<Quiver> {
        &self.target
    }

    fn window(&self) -> &Window {
        &self.window
    }

    fn object(&self, x: ObjId, c: &[Factor]) -> Result<ObjId, EvalError> {
        let (u, v) = self.chains(c)?;
        Ok(v.functors()[0].obj_map()[u.functors()[0].obj_map()[x]])
    }

    fn component(&self, a: &Word, c: &[Factor]) -> Result<HomElement, EvalError> {
        let (u, v) = self.chains(c)?;
        let cutoff = &self.window.cutoff;
        let inner = u.eval_word(a, cutoff)?;
        Ok(self.target.truncate_hom(&first_component(&v.eval_element(&inner, cutoff)?), cutoff))
    }
}

/// `M: T Coder(𝔞,𝔟) ⊠ T Coder(𝔟,𝔠) → T Coder(𝔞,𝔠)`, solved from
/// `(ev⊠1)·ev = (1⊠M)·ev`.
pub fn composition_m(source: Arc<Quiver>, target: Arc<Quiver>, window: &Window) -> SolvedPsi {
    solve_psi(Arc::new(CompositionPhi::new(source, target, window)))
}

/// `(u ⊠ v)M` as a formal sum of chains.
pub fn m_full(m: &SolvedPsi, u: &CoderChain, v: &CoderChain) -> Result<ChainSum, EvalError> {
    psi_full(m, &[Factor::Chain(u.clone()), Factor::Chain(v.clone())])
}

/// `Σ k·(a)ř` over a formal sum of single coderivations; longer chains
/// are rejected.
pub fn sum_component(sum: &[(i64, Arc<Coderivation>)], a: &Word) -> Result<HomElement, EvalError> {
    let mut out = HomElement::zero();
    for (k, r) in sum {
        out.add_scaled(&r.component(a)?, &NovikovScalar::constant(crate::levels::int(*k)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levels::{int, LevelKind};
    use crate::morphisms::compose_cofunctors;
    use crate::tcoalg::words_up_to;

    fn rp(n: i64) -> Level {
        Level::RatPlus(int(n))
    }

    fn t(e: i64) -> NovikovScalar {
        NovikovScalar::monomial(int(1), int(e), 0)
    }

    fn win() -> Window {
        Window::new(6, rp(3))
    }

    fn quiver() -> Arc<Quiver> {
        let mut q = Quiver::new("A", LevelKind::RatPlus);
        let x = q.add_object("X").unwrap();
        q.add_generator("c", x, x, 0, rp(0)).unwrap();
        q.add_generator("p", x, x, 1, rp(0)).unwrap();
        Arc::new(q)
    }

    fn w(q: &Quiver, names: &[&str]) -> Word {
        Word::from_letters(q, names.iter().map(|n| q.gen_id(n).unwrap()).collect()).unwrap()
    }

    fn curved_functor(q: &Arc<Quiver>) -> Arc<Cofunctor> {
        let rules = vec![
            (Word::empty(0), HomElement::single(0, t(1))),
            (w(q, &["c"]), HomElement::basis(0)),
            (w(q, &["p"]), HomElement::basis(1)),
            (w(q, &["c", "p"]), HomElement::single(1, t(1))),
        ];
        Cofunctor::from_components("f", q.clone(), q.clone(), vec![0], rules, &win(), 16).unwrap()
    }

    fn coder(name: &str, f: &Arc<Cofunctor>, g: &Arc<Cofunctor>, deg: i64, rules: Vec<(Word, HomElement)>) -> Arc<Coderivation> {
        Coderivation::from_components(name, f.clone(), g.clone(), deg, rp(0), rules).unwrap()
    }

    fn sample_coders(q: &Arc<Quiver>, f: &Arc<Cofunctor>, id: &Arc<Cofunctor>) -> (Arc<Coderivation>, Arc<Coderivation>) {
        let r = coder("r", f, id, 1, vec![(w(q, &["c"]), HomElement::basis(1)), (Word::empty(0), HomElement::single(1, t(1)))]);
        let s = coder("s", id, id, 1, vec![(w(q, &["c", "c"]), HomElement::basis(1)), (w(q, &["c"]), HomElement::single(1, t(1)))]);
        (r, s)
    }

    #[test]
    fn box_engine_matches_pattern_engine_for_ev() {
        let q = quiver();
        let f = curved_functor(&q);
        let id = Cofunctor::identity(q.clone(), &win());
        let (r, s) = sample_coders(&q, &f, &id);
        let ev = PsiEv(Arc::new(EvPsi::new(q.clone(), q.clone(), &win())));
        let chains = [
            CoderChain::unit(f.clone()),
            CoderChain::new(vec![r.clone()]).unwrap(),
            CoderChain::new(vec![r.clone(), s.clone()]).unwrap(),
            CoderChain::new(vec![s.clone(), s.clone()]).unwrap(),
        ];
        for ch in &chains {
            for a in words_up_to(&q, 2) {
                let boxed = box_full(&ev, &a, &[Factor::Chain(ch.clone())], &rp(3)).unwrap();
                assert_eq!(boxed, ch.eval_word(&a, &rp(3)).unwrap(), "{ch:?} {a:?}");
            }
        }
        let single = CoderChain::new(vec![r.clone()]).unwrap();
        for a in words_up_to(&q, 3) {
            assert_eq!(single.eval_word(&a, &rp(3)).unwrap(), r.full(&a).unwrap());
        }
    }

    #[test]
    fn ev_on_identity_unit_is_identity() {
        let q = quiver();
        let id = Cofunctor::identity(q.clone(), &win());
        for a in words_up_to(&q, 3) {
            assert_eq!(CoderChain::unit(id.clone()).eval_word(&a, &rp(3)).unwrap(), TensorElement::basis(a));
        }
    }

    #[test]
    fn psi_roundtrip_on_a_free_quiver() {
        let q = quiver();
        let f = curved_functor(&q);
        let id = Cofunctor::identity(q.clone(), &win());
        let (r, s) = sample_coders(&q, &f, &id);
        let mut cq = Quiver::new("C", LevelKind::RatPlus);
        let y0 = cq.add_object("Y0").unwrap();
        let y1 = cq.add_object("Y1").unwrap();
        cq.add_generator("u", y0, y1, 1, rp(0)).unwrap();
        cq.add_generator("v", y1, y1, 1, rp(0)).unwrap();
        let cq = Arc::new(cq);
        let two = NovikovScalar::constant(int(2));
        let psi = PsiData::new(
            cq.clone(),
            vec![f.clone(), id.clone()],
            vec![(w(&cq, &["u"]), vec![(NovikovScalar::one(), r.clone())]), (w(&cq, &["v"]), vec![(two, s.clone())])],
        )
        .unwrap();
        let psi: Arc<dyn PsiMap> = Arc::new(psi);
        let solved = solve_psi(Arc::new(PsiEv(psi.clone())));
        for c in words_up_to(&cq, 2) {
            let c = [Factor::Word(cq.clone(), c)];
            for a in words_up_to(&q, 2) {
                solved.verify(&a, &c, 2).unwrap();
                if c[0].is_empty() {
                    assert_eq!(solved.object(&c).unwrap().component(&a).unwrap(), psi.object(&c).unwrap().component(&a).unwrap());
                } else {
                    assert_eq!(solved.hat(&c).unwrap().component(&a).unwrap(), psi.hat(&c).unwrap().component(&a).unwrap());
                }
            }
        }
    }

    #[test]
    fn composition_low_cases() {
        let q = quiver();
        let f = curved_functor(&q);
        let id = Cofunctor::identity(q.clone(), &win());
        let (r, s) = sample_coders(&q, &f, &id);
        let m = composition_m(q.clone(), q.clone(), &win());
        let unit = |g: &Arc<Cofunctor>| Factor::Chain(CoderChain::unit(g.clone()));
        let one = |x: &Arc<Coderivation>| Factor::Chain(CoderChain::new(vec![x.clone()]).unwrap());
        let fid = compose_cofunctors(&f, &f, &win()).unwrap();
        let obj = m.object(&[unit(&f), unit(&f)]).unwrap();
        assert_eq!(obj.components_up_to(3).unwrap(), fid.components_up_to(3).unwrap());
        let pushed = crate::morphisms::push_coderivation(&r, &f, &win()).unwrap();
        assert_eq!(m.hat(&[one(&r), unit(&f)]).unwrap().components_up_to(3).unwrap(), pushed.components_up_to(3).unwrap());
        let pulled = crate::morphisms::pull_coderivation(&f, &s, &win()).unwrap();
        assert_eq!(m.hat(&[unit(&f), one(&s)]).unwrap().components_up_to(3).unwrap(), pulled.components_up_to(3).unwrap());
        // Units: identity cofunctor on either side.
        assert_eq!(m.hat(&[one(&r), unit(&id)]).unwrap().components_up_to(3).unwrap(), r.components_up_to(3).unwrap());
        assert_eq!(m.hat(&[unit(&id), one(&s)]).unwrap().components_up_to(3).unwrap(), s.components_up_to(3).unwrap());
        let two = Factor::Chain(CoderChain::new(vec![s.clone(), s.clone()]).unwrap());
        assert!(m.hat(&[unit(&id), two]).unwrap().components_up_to(3).unwrap().is_empty());
        for c in [[one(&r), unit(&f)], [unit(&f), one(&s)], [one(&r), one(&s)]] {
            for a in words_up_to(&q, 2) {
                m.verify(&a, &c, 2).unwrap();
            }
        }
    }

    #[test]
    fn composition_is_associative_on_short_words() {
        let q = quiver();
        let f = curved_functor(&q);
        let id = Cofunctor::identity(q.clone(), &win());
        let (r, s) = sample_coders(&q, &f, &id);
        let m = composition_m(q.clone(), q.clone(), &win());
        let t = coder("t", &id, &id, 0, vec![(w(&q, &["c"]), HomElement::single(0, t(1))), (w(&q, &["p", "c"]), HomElement::basis(1))]);
        let factors = |x: &Option<Arc<Coderivation>>, g: &Arc<Cofunctor>| match x {
            Some(x) => CoderChain::new(vec![x.clone()]).unwrap(),
            None => CoderChain::unit(g.clone()),
        };
        for (x, y, z) in [
            (Some(r.clone()), Some(s.clone()), Some(t.clone())),
            (Some(r.clone()), None, Some(t.clone())),
            (None, Some(s.clone()), Some(t.clone())),
            (Some(r.clone()), Some(s.clone()), None),
        ] {
            let (x, y, z) = (factors(&x, &f), factors(&y, &id), factors(&z, &id));
            let mut lhs = Vec::new();
            for (chain, k) in m_full(&m, &x, &y).unwrap().iter() {
                lhs.push((k, m.hat(&[Factor::Chain(chain.clone()), Factor::Chain(z.clone())]).unwrap()));
            }
            let mut rhs = Vec::new();
            for (chain, k) in m_full(&m, &y, &z).unwrap().iter() {
                rhs.push((k, m.hat(&[Factor::Chain(x.clone()), Factor::Chain(chain.clone())]).unwrap()));
            }
            for a in words_up_to(&q, 3) {
                assert_eq!(sum_component(&lhs, &a).unwrap(), sum_component(&rhs, &a).unwrap(), "{x:?} {y:?} {z:?} {a:?}");
            }
        }
    }
}
