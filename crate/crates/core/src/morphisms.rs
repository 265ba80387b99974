//! Cofunctors and coderivations into completed tensor cocategories, given
//! by their components.
//!
//! A cofunctor `f: T̂𝔞 → T̂𝔟` is determined by `f̌ₖ: 𝔞^{⊗k} → 𝔟`, `k ≥ 0`,
//! and acts on a word by summing `f̌(piece₁)⊗…⊗f̌(pieceₖ)` over all ways of
//! cutting the word into consecutive, possibly empty, pieces. An
//! `(f, g)`-coderivation `r` is determined by `ř` and acts as
//! `Δ^{(3)}·(f⊗ř⊗g)·μ`. Both are special cases of a *pattern*: a sequence
//! of slots, each either a cofunctor consuming any number of pieces or a
//! single map consuming exactly one. Empty pieces for a cofunctor insert its
//! curvature `f̌₀`; the resulting series is summed modulo `F^E` by pruning
//! every partial term whose level, plus a lower bound for what is still to
//! come, has reached the cutoff.

use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use thiserror::Error;

use crate::filtquiver::{check_value, GenId, HomElement, Lin, ObjId, Quiver, QuiverError};
use crate::levels::{Level, LevelKind};
use crate::novikov::NovikovScalar;
use crate::tcoalg::{
    append_hom, cut_delta, mu_concat, truncate_element, truncate_modulo, words_up_to, PairElement,
    TailFlag, TensorElement, Window, Word,
};

/// Search bound for the tensor-convergence test when none is given.
pub const DEFAULT_CONVERGENCE_BOUND: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("undecided: {0}")]
    Undecided(String),
    #[error("not tensor convergent: {0}")]
    NotConvergent(String),
    #[error("word of length {len} lies outside the computed domain (length <= {domain})")]
    OutsideDomain { len: usize, domain: usize },
    #[error(transparent)]
    Invalid(#[from] QuiverError),
    #[error("inconsistent data: {0}")]
    Inconsistent(String),
    #[error("solution fails its defining equation: {0}")]
    LeibnizResidual(String),
}

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

/// Identity of a morphism, used to recognise shared endpoints and equal
/// chains without comparing infinite data.
pub fn fresh_id() -> u64 {
    NEXT_ID.fetch_add(1, Ordering::Relaxed)
}

/// A component family `w ↦ ř(w)` on words of the source quiver.
pub trait ComponentMap: Send + Sync {
    fn on_word(&self, w: &Word) -> Result<HomElement, EvalError>;
}

/// Components stored as sparse rules; absent words map to zero. A table
/// with a domain bound refuses longer words instead of claiming zero.
pub struct ComponentTable {
    rules: HashMap<Word, HomElement>,
    domain: Option<usize>,
}

impl ComponentTable {
    pub fn new(rules: impl IntoIterator<Item = (Word, HomElement)>, domain: Option<usize>) -> Self {
        let mut map: HashMap<Word, HomElement> = HashMap::new();
        for (w, v) in rules {
            map.entry(w).or_default().add_assign(&v);
        }
        map.retain(|_, v| !v.is_zero());
        ComponentTable { rules: map, domain }
    }
}

impl ComponentMap for ComponentTable {
    fn on_word(&self, w: &Word) -> Result<HomElement, EvalError> {
        if let Some(domain) = self.domain {
            if w.len() > domain {
                return Err(EvalError::OutsideDomain { len: w.len(), domain });
            }
        }
        Ok(self.rules.get(w).cloned().unwrap_or_default())
    }
}

/// `f̌₁ = id`, all other components zero.
pub struct IdentityComponents;

impl ComponentMap for IdentityComponents {
    fn on_word(&self, w: &Word) -> Result<HomElement, EvalError> {
        Ok(match w.letters() {
            [g] => HomElement::basis(*g),
            _ => HomElement::zero(),
        })
    }
}

/// A linear combination of component families with the same endpoints.
pub struct LinearComponents(pub Vec<(NovikovScalar, Arc<dyn ComponentMap>)>);

impl ComponentMap for LinearComponents {
    fn on_word(&self, w: &Word) -> Result<HomElement, EvalError> {
        let mut out = HomElement::zero();
        for (c, m) in &self.0 {
            out.add_scaled(&m.on_word(w)?, c);
        }
        Ok(out)
    }
}

type ComponentFn = dyn Fn(&Word) -> Result<HomElement, EvalError> + Send + Sync;

/// Components computed on demand and memoized.
pub struct LazyComponents {
    f: Box<ComponentFn>,
    cache: Mutex<HashMap<Word, HomElement>>,
}

impl LazyComponents {
    pub fn new(
        f: impl Fn(&Word) -> Result<HomElement, EvalError> + Send + Sync + 'static,
    ) -> Arc<dyn ComponentMap> {
        Arc::new(LazyComponents { f: Box::new(f), cache: Mutex::new(HashMap::new()) })
    }
}

impl ComponentMap for LazyComponents {
    fn on_word(&self, w: &Word) -> Result<HomElement, EvalError> {
        if let Some(v) = self.cache.lock().unwrap().get(w) {
            return Ok(v.clone());
        }
        let v = (self.f)(w)?;
        self.cache.lock().unwrap().insert(w.clone(), v.clone());
        Ok(v)
    }
}

/// `Σ c·ř(w)` over the terms of `x`.
pub fn apply_components(comp: &dyn ComponentMap, x: &TensorElement) -> Result<HomElement, EvalError> {
    let mut out = HomElement::zero();
    for (w, c) in x.iter() {
        out.add_scaled(&comp.on_word(w)?, c);
    }
    Ok(out)
}

pub struct Cofunctor {
    id: u64,
    pub name: String,
    src: Arc<Quiver>,
    dst: Arc<Quiver>,
    obj_map: Vec<ObjId>,
    comp: Arc<dyn ComponentMap>,
    window: Window,
}

impl fmt::Debug for Cofunctor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Cofunctor({} #{})", self.name, self.id)
    }
}

fn same_quiver(a: &Arc<Quiver>, b: &Arc<Quiver>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

impl Cofunctor {
    /// Validates sparse components (degree 0, level 0, right hom modules)
    /// and the tensor convergence of `f̌₀`.
    pub fn from_components(
        name: impl Into<String>,
        src: Arc<Quiver>,
        dst: Arc<Quiver>,
        obj_map: Vec<ObjId>,
        rules: Vec<(Word, HomElement)>,
        window: &Window,
        bound: usize,
    ) -> Result<Arc<Cofunctor>, EvalError> {
        let name = name.into();
        if obj_map.len() != src.objects().len() {
            return Err(QuiverError::HomMismatch(format!("object map of {name}")).into());
        }
        for (w, v) in &rules {
            let context = format!("{name} on {}", w.display(&src));
            let ends = (obj_map[w.src()], obj_map[w.dst()]);
            check_value(&dst, v, ends, w.degree(&src), &w.level(&src), &context)?;
        }
        let comp: Arc<dyn ComponentMap> = Arc::new(ComponentTable::new(rules, None));
        Self::assemble(name, src, dst, obj_map, comp, window, bound)
    }

    /// A cofunctor whose components are computed by `comp`; the
    /// convergence of `f̌₀` is checked here.
    pub fn with_components(
        name: impl Into<String>,
        src: Arc<Quiver>,
        dst: Arc<Quiver>,
        obj_map: Vec<ObjId>,
        comp: Arc<dyn ComponentMap>,
        window: &Window,
    ) -> Result<Arc<Cofunctor>, EvalError> {
        Self::assemble(name.into(), src, dst, obj_map, comp, window, DEFAULT_CONVERGENCE_BOUND)
    }

    fn assemble(
        name: String,
        src: Arc<Quiver>,
        dst: Arc<Quiver>,
        obj_map: Vec<ObjId>,
        comp: Arc<dyn ComponentMap>,
        window: &Window,
        bound: usize,
    ) -> Result<Arc<Cofunctor>, EvalError> {
        let f = Cofunctor { id: fresh_id(), name, src, dst, obj_map, comp, window: window.clone() };
        let phi0 = f.curvature()?;
        match cofunctor_convergence(&f.dst, &phi0, &window.cutoff, bound) {
            Convergence::True(_) => Ok(Arc::new(f)),
            Convergence::Undecided => Err(EvalError::Undecided(format!(
                "tensor powers of the curvature of {} do not vanish within {bound} steps",
                f.name
            ))),
            Convergence::False => Err(EvalError::NotConvergent(format!(
                "the curvature of {} has negative level",
                f.name
            ))),
        }
    }

    pub fn identity(q: Arc<Quiver>, window: &Window) -> Arc<Cofunctor> {
        let obj_map = (0..q.objects().len()).collect();
        Arc::new(Cofunctor {
            id: fresh_id(),
            name: "id".into(),
            src: q.clone(),
            dst: q,
            obj_map,
            comp: Arc::new(IdentityComponents),
            window: window.clone(),
        })
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn src(&self) -> &Arc<Quiver> {
        &self.src
    }

    pub fn dst(&self) -> &Arc<Quiver> {
        &self.dst
    }

    pub fn obj_map(&self) -> &[ObjId] {
        &self.obj_map
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn components(&self) -> &Arc<dyn ComponentMap> {
        &self.comp
    }

    /// `f̌(w)` reduced modulo the cutoff.
    pub fn component(&self, w: &Word) -> Result<HomElement, EvalError> {
        Ok(self.dst.truncate_hom(&self.comp.on_word(w)?, &self.window.cutoff))
    }

    /// `f̌₀` at each source object.
    pub fn curvature(&self) -> Result<Vec<HomElement>, EvalError> {
        (0..self.src.objects().len()).map(|x| self.component(&Word::empty(x))).collect()
    }

    /// The full value `(w)f` modulo `F^E`.
    pub fn full(&self, w: &Word) -> Result<TensorElement, EvalError> {
        self.full_below(w, &self.window.cutoff)
    }

    pub fn full_below(&self, w: &Word, cutoff: &Level) -> Result<TensorElement, EvalError> {
        run_pattern(&[Slot::Repeat(self)], w, cutoff)
    }

    pub fn full_element(&self, x: &TensorElement) -> Result<TensorElement, EvalError> {
        linear(x, |w| self.full(w))
    }

    /// Nonzero components on all words of length at most `max_len`.
    pub fn components_up_to(&self, max_len: usize) -> Result<Vec<(Word, HomElement)>, EvalError> {
        nonzero_components(&self.src, max_len, |w| self.component(w))
    }
}

pub struct Coderivation {
    id: u64,
    pub name: String,
    src: Arc<Cofunctor>,
    dst: Arc<Cofunctor>,
    deg: i64,
    lvl: Level,
    comp: Arc<dyn ComponentMap>,
}

impl fmt::Debug for Coderivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Coderivation({} #{})", self.name, self.id)
    }
}

impl Coderivation {
    /// Validates sparse components of degree `deg` and level `lvl`.
    pub fn from_components(
        name: impl Into<String>,
        src: Arc<Cofunctor>,
        dst: Arc<Cofunctor>,
        deg: i64,
        lvl: Level,
        rules: Vec<(Word, HomElement)>,
    ) -> Result<Arc<Coderivation>, EvalError> {
        let name = name.into();
        check_parallel(&src, &dst, &name)?;
        let a = src.src.clone();
        for (w, v) in &rules {
            let context = format!("{name} on {}", w.display(&a));
            let ends = (src.obj_map[w.src()], dst.obj_map[w.dst()]);
            check_value(&src.dst, v, ends, w.degree(&a) + deg, &w.level(&a).plus(&lvl), &context)?;
        }
        let comp: Arc<dyn ComponentMap> = Arc::new(ComponentTable::new(rules, None));
        Ok(Self::with_components(name, src, dst, deg, lvl, comp))
    }

    pub fn with_components(
        name: impl Into<String>,
        src: Arc<Cofunctor>,
        dst: Arc<Cofunctor>,
        deg: i64,
        lvl: Level,
        comp: Arc<dyn ComponentMap>,
    ) -> Arc<Coderivation> {
        Arc::new(Coderivation { id: fresh_id(), name: name.into(), src, dst, deg, lvl, comp })
    }

    pub fn zero(name: impl Into<String>, src: Arc<Cofunctor>, dst: Arc<Cofunctor>, deg: i64, lvl: Level) -> Arc<Coderivation> {
        Self::with_components(name, src, dst, deg, lvl, Arc::new(ComponentTable::new([], None)))
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn src(&self) -> &Arc<Cofunctor> {
        &self.src
    }

    pub fn dst(&self) -> &Arc<Cofunctor> {
        &self.dst
    }

    pub fn deg(&self) -> i64 {
        self.deg
    }

    pub fn lvl(&self) -> &Level {
        &self.lvl
    }

    pub fn components(&self) -> &Arc<dyn ComponentMap> {
        &self.comp
    }

    pub fn window(&self) -> &Window {
        &self.src.window
    }

    pub fn component(&self, w: &Word) -> Result<HomElement, EvalError> {
        Ok(self.src.dst.truncate_hom(&self.comp.on_word(w)?, &self.src.window.cutoff))
    }

    pub fn slot(&self) -> Slot<'_> {
        Slot::Once { comp: self.comp.as_ref(), deg: self.deg, lvl: self.lvl.clone() }
    }

    /// The full value `(w)r = (wΔ^{(3)})(f⊗ř⊗g)μ` modulo `F^E`.
    pub fn full(&self, w: &Word) -> Result<TensorElement, EvalError> {
        self.full_below(w, &self.src.window.cutoff)
    }

    pub fn full_below(&self, w: &Word, cutoff: &Level) -> Result<TensorElement, EvalError> {
        run_pattern(&[Slot::Repeat(&self.src), self.slot(), Slot::Repeat(&self.dst)], w, cutoff)
    }

    pub fn full_element(&self, x: &TensorElement) -> Result<TensorElement, EvalError> {
        linear(x, |w| self.full(w))
    }

    pub fn components_up_to(&self, max_len: usize) -> Result<Vec<(Word, HomElement)>, EvalError> {
        nonzero_components(&self.src.src, max_len, |w| self.component(w))
    }

    /// `Σ cᵢ rᵢ` for parallel coderivations of equal degree.
    pub fn linear_combination(
        name: impl Into<String>,
        terms: Vec<(NovikovScalar, Arc<Coderivation>)>,
    ) -> Result<Arc<Coderivation>, EvalError> {
        let name = name.into();
        let Some((_, first)) = terms.first() else {
            return Err(EvalError::Inconsistent(format!("{name}: empty combination")));
        };
        let (src, dst, deg) = (first.src.clone(), first.dst.clone(), first.deg);
        let mut lvl = Level::Infinity;
        for (c, r) in &terms {
            if r.src.id != src.id || r.dst.id != dst.id || r.deg != deg {
                return Err(EvalError::Inconsistent(format!("{name}: terms are not parallel")));
            }
            lvl = lvl.min_of(r.lvl.plus(&c.level(src.dst.kind)));
        }
        if lvl.is_infinite() {
            lvl = src.dst.kind.zero();
        }
        let comp = LinearComponents(terms.iter().map(|(c, r)| (c.clone(), r.comp.clone())).collect());
        Ok(Self::with_components(name, src, dst, deg, lvl, Arc::new(comp)))
    }
}

fn check_parallel(f: &Cofunctor, g: &Cofunctor, name: &str) -> Result<(), EvalError> {
    if !same_quiver(&f.src, &g.src) || !same_quiver(&f.dst, &g.dst) {
        return Err(QuiverError::HomMismatch(format!("endpoints of {name}")).into());
    }
    Ok(())
}

fn nonzero_components(
    q: &Quiver,
    max_len: usize,
    mut f: impl FnMut(&Word) -> Result<HomElement, EvalError>,
) -> Result<Vec<(Word, HomElement)>, EvalError> {
    let mut out = Vec::new();
    for w in words_up_to(q, max_len) {
        let v = f(&w)?;
        if !v.is_zero() {
            out.push((w, v));
        }
    }
    Ok(out)
}

pub(crate) fn linear(
    x: &TensorElement,
    mut f: impl FnMut(&Word) -> Result<TensorElement, EvalError>,
) -> Result<TensorElement, EvalError> {
    let mut out = TensorElement::zero();
    for (w, c) in x.iter() {
        out.add_scaled(&f(w)?, c);
    }
    Ok(out)
}

/// One position of an evaluation pattern.
pub enum Slot<'a> {
    /// A cofunctor: any number of consecutive pieces, empty ones inserting
    /// its curvature.
    Repeat(&'a Cofunctor),
    /// A single map of the given degree and level on exactly one piece.
    Once { comp: &'a dyn ComponentMap, deg: i64, lvl: Level },
}

/// Evaluates a word through a pattern of slots modulo `F^cutoff`. The sign
/// of a `Once` slot of degree `d` whose piece is followed by the input `z`
/// is `(−1)^{d·|z|}`. The first slot must be a cofunctor.
pub fn run_pattern(slots: &[Slot<'_>], w: &Word, cutoff: &Level) -> Result<TensorElement, EvalError> {
    let Some(Slot::Repeat(first)) = slots.first() else {
        return Err(EvalError::Inconsistent("a pattern must start with a cofunctor".into()));
    };
    let src = first.src.as_ref();
    let dst = first.dst.as_ref();
    let n = w.len();
    let mut suf_level = vec![src.kind.zero(); n + 1];
    let mut suf_odd = vec![false; n + 1];
    for i in (0..n).rev() {
        let g = src.gen(w.letters()[i]);
        suf_level[i] = suf_level[i + 1].plus(&g.level);
        suf_odd[i] = suf_odd[i + 1] ^ (g.sdeg.rem_euclid(2) == 1);
    }
    let mut once_rest = vec![src.kind.zero(); slots.len() + 1];
    for s in (0..slots.len()).rev() {
        once_rest[s] = match &slots[s] {
            Slot::Once { lvl, .. } => once_rest[s + 1].plus(lvl),
            Slot::Repeat(_) => once_rest[s + 1].clone(),
        };
    }
    let mut run = PatternRun {
        slots,
        w,
        dst,
        cutoff,
        suf_level,
        suf_odd,
        once_rest,
        curvature: HashMap::new(),
        out: TensorElement::zero(),
    };
    let start = TensorElement::basis(Word::empty(first.obj_map[w.src()]));
    let start = run.prune(start, 0, 0);
    run.go(0, 0, start)?;
    Ok(run.out)
}

struct PatternRun<'a, 's> {
    slots: &'a [Slot<'s>],
    w: &'a Word,
    dst: &'a Quiver,
    cutoff: &'a Level,
    suf_level: Vec<Level>,
    suf_odd: Vec<bool>,
    once_rest: Vec<Level>,
    curvature: HashMap<(usize, ObjId), HomElement>,
    out: TensorElement,
}

impl PatternRun<'_, '_> {
    /// Drops the parts of partial terms that are bound to land in `F^E`.
    fn prune(&self, acc: TensorElement, slot: usize, pos: usize) -> TensorElement {
        let rest = self.suf_level[pos].plus(&self.once_rest[slot]);
        acc.truncate_with(self.dst.kind, |v| v.level(self.dst).plus(&rest), self.cutoff)
    }

    fn curvature_at(&mut self, slot: usize, f: &Cofunctor, x: ObjId) -> Result<HomElement, EvalError> {
        if let Some(v) = self.curvature.get(&(slot, x)) {
            return Ok(v.clone());
        }
        let v = self.dst.truncate_hom(&f.comp.on_word(&Word::empty(x))?, self.cutoff);
        if !v.is_zero() && !self.dst.hom_level(&v).is_positive() {
            return Err(EvalError::Undecided(format!(
                "curvature of {} has level {} and the series cannot be bounded",
                f.name,
                self.dst.hom_level(&v)
            )));
        }
        self.curvature.insert((slot, x), v.clone());
        Ok(v)
    }

    fn go(&mut self, slot: usize, pos: usize, acc: TensorElement) -> Result<(), EvalError> {
        if acc.is_zero() {
            return Ok(());
        }
        let n = self.w.len();
        if slot == self.slots.len() {
            if pos == n {
                self.out.add_assign(&acc);
            }
            return Ok(());
        }
        match &self.slots[slot] {
            Slot::Repeat(f) => {
                let f: &Cofunctor = f;
                self.go(slot + 1, pos, acc.clone())?;
                for e in pos..=n {
                    let v = if e == pos {
                        self.curvature_at(slot, f, self.w.obj_at(pos))?
                    } else {
                        f.comp.on_word(&self.w.slice(pos, e))?
                    };
                    if v.is_zero() {
                        continue;
                    }
                    let next = self.prune(append_hom(self.dst, &acc, &v), slot, e);
                    self.go(slot, e, next)?;
                }
            }
            Slot::Once { comp, deg, .. } => {
                for e in pos..=n {
                    let v = comp.on_word(&self.w.slice(pos, e))?;
                    if v.is_zero() {
                        continue;
                    }
                    let mut next = append_hom(self.dst, &acc, &v);
                    if deg.rem_euclid(2) == 1 && self.suf_odd[e] {
                        next = next.neg();
                    }
                    let next = self.prune(next, slot + 1, e);
                    self.go(slot + 1, e, next)?;
                }
            }
        }
        Ok(())
    }
}

/// `(x)f` for an element, truncated to the window.
pub fn evaluate_cofunctor(
    f: &Cofunctor,
    x: &TensorElement,
    w: &Window,
) -> Result<(TensorElement, TailFlag), EvalError> {
    let full = linear(x, |v| f.full_below(v, &w.cutoff))?;
    Ok(truncate_element(&f.dst, &full, w))
}

pub fn evaluate_coderivation(
    r: &Coderivation,
    x: &TensorElement,
    w: &Window,
) -> Result<(TensorElement, TailFlag), EvalError> {
    let full = linear(x, |v| r.full_below(v, &w.cutoff))?;
    Ok(truncate_element(&r.src.dst, &full, w))
}

/// `h = f·g` with `ȟ(w) = ǧ((w)f)`, i.e. `h_l = Σ (f_{i₁}⊗…⊗f_{iₖ})g_k`.
pub fn compose_cofunctors(
    f: &Arc<Cofunctor>,
    g: &Arc<Cofunctor>,
    window: &Window,
) -> Result<Arc<Cofunctor>, EvalError> {
    if !same_quiver(&f.dst, &g.src) {
        return Err(QuiverError::HomMismatch(format!("composite {}.{}", f.name, g.name)).into());
    }
    let obj_map = f.obj_map.iter().map(|&x| g.obj_map[x]).collect();
    let (ff, gg, cutoff) = (f.clone(), g.clone(), window.cutoff.clone());
    let comp = LazyComponents::new(move |w| {
        let fw = ff.full_below(w, &cutoff)?;
        Ok(gg.dst.truncate_hom(&apply_components(gg.comp.as_ref(), &fw)?, &cutoff))
    });
    Cofunctor::with_components(
        format!("{}.{}", f.name, g.name),
        f.src.clone(),
        g.dst.clone(),
        obj_map,
        comp,
        window,
    )
}

/// `rh̃: fh → gh` with components `ȟ((w)r)`.
pub fn push_coderivation(
    r: &Arc<Coderivation>,
    h: &Arc<Cofunctor>,
    window: &Window,
) -> Result<Arc<Coderivation>, EvalError> {
    let fh = compose_cofunctors(&r.src, h, window)?;
    let gh = compose_cofunctors(&r.dst, h, window)?;
    push_between(r, h, fh, gh, window)
}

pub(crate) fn push_between(
    r: &Arc<Coderivation>,
    h: &Arc<Cofunctor>,
    fh: Arc<Cofunctor>,
    gh: Arc<Cofunctor>,
    window: &Window,
) -> Result<Arc<Coderivation>, EvalError> {
    let (rr, hh, cutoff) = (r.clone(), h.clone(), window.cutoff.clone());
    let comp = LazyComponents::new(move |w| {
        let rw = rr.full_below(w, &cutoff)?;
        Ok(hh.dst.truncate_hom(&apply_components(hh.comp.as_ref(), &rw)?, &cutoff))
    });
    let name = format!("{}.{}", r.name, h.name);
    Ok(Coderivation::with_components(name, fh, gh, r.deg, r.lvl.clone(), comp))
}

/// `er̃: ef → eg` with components `ř((w)e)`.
pub fn pull_coderivation(
    e: &Arc<Cofunctor>,
    r: &Arc<Coderivation>,
    window: &Window,
) -> Result<Arc<Coderivation>, EvalError> {
    let ef = compose_cofunctors(e, &r.src, window)?;
    let eg = compose_cofunctors(e, &r.dst, window)?;
    pull_between(e, r, ef, eg, window)
}

pub(crate) fn pull_between(
    e: &Arc<Cofunctor>,
    r: &Arc<Coderivation>,
    ef: Arc<Cofunctor>,
    eg: Arc<Cofunctor>,
    window: &Window,
) -> Result<Arc<Coderivation>, EvalError> {
    let (ee, rr, cutoff) = (e.clone(), r.clone(), window.cutoff.clone());
    let inner = window.raised_for(&r.lvl).cutoff;
    let comp = LazyComponents::new(move |w| {
        let ew = ee.full_below(w, &inner)?;
        let v = apply_components(rr.comp.as_ref(), &ew)?;
        Ok(rr.src.dst.truncate_hom(&v, &cutoff))
    });
    let name = format!("{}.{}", e.name, r.name);
    Ok(Coderivation::with_components(name, ef, eg, r.deg, r.lvl.clone(), comp))
}

/// Outcome of the tensor-convergence test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convergence {
    /// The `N`-th tensor power lies in `F^E`.
    True(usize),
    /// Certified never: a part of strictly negative level, whose powers
    /// never vanish because tensor algebras have no zero divisors.
    False,
    Undecided,
}

impl fmt::Display for Convergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Convergence::True(n) => write!(f, "true({n})"),
            Convergence::False => f.write_str("false"),
            Convergence::Undecided => f.write_str("undecided"),
        }
    }
}

/// Decides whether the tensor powers of each `φ₀(X)` eventually fall into
/// `F^cutoff`, searching up to `bound` powers. `N` is the maximum over
/// objects of the least power that vanishes modulo the cutoff.
pub fn tensor_convergent<K: Ord + Clone>(
    phi0: &[Lin<K>],
    kind: LevelKind,
    key_level: impl Fn(&K) -> Level,
    cutoff: &Level,
    bound: usize,
) -> Convergence {
    let word_level = |v: &Vec<K>| v.iter().fold(kind.zero(), |acc, k| acc.plus(&key_level(k)));
    let mut worst = 1;
    for x in phi0 {
        if x.is_zero() {
            continue;
        }
        let lowest = x.level_with(kind, &key_level);
        if matches!(&lowest, Level::Rat(q) if q < &num_traits::Zero::zero()) {
            return Convergence::False;
        }
        let base: Lin<Vec<K>> = x.map_keys(|k| vec![k.clone()]);
        let mut power = base.truncate_with(kind, word_level, cutoff);
        let mut found = None;
        for n in 1..=bound {
            if power.is_zero() {
                found = Some(n);
                break;
            }
            let mut next = Lin::zero();
            for (v, c) in power.iter() {
                for (k, d) in x.iter() {
                    let mut v = v.clone();
                    v.push(k.clone());
                    next.add_term(v, c * d);
                }
            }
            power = next.truncate_with(kind, word_level, cutoff);
        }
        match found {
            Some(n) => worst = worst.max(n),
            None => return Convergence::Undecided,
        }
    }
    Convergence::True(worst)
}

fn cofunctor_convergence(q: &Quiver, phi0: &[HomElement], cutoff: &Level, bound: usize) -> Convergence {
    tensor_convergent(phi0, q.kind, |g: &GenId| q.gen(*g).level.clone(), cutoff, bound)
}

/// `y = Σ_{n>0} f̌₀^{⊗n}` at each object of the source, truncated to the
/// window.
pub fn augmentation_defect(f: &Cofunctor, w: &Window) -> Result<(Vec<TensorElement>, TailFlag), EvalError> {
    let mut flag = TailFlag::Sound;
    let mut out = Vec::new();
    for (x, phi) in f.curvature()?.into_iter().enumerate() {
        let fx = f.obj_map[x];
        let step = phi.map_keys(|&g| Word::single(&f.dst, g));
        let (y, fl) = geometric(&f.dst, &TensorElement::basis(Word::empty(fx)), &step, 1, w)?;
        flag = flag.merge(fl);
        out.push(y);
    }
    Ok((out, flag))
}

/// `Σ_{m>0} (−1)^{m−1} y^{⊗m}`, inverting [`augmentation_defect`].
pub fn defect_to_f0(q: &Quiver, y: &TensorElement, x: ObjId, w: &Window) -> Result<(TensorElement, TailFlag), EvalError> {
    if y.keys().any(|v| v.is_empty()) {
        return Err(EvalError::Inconsistent("the defect must have no length-0 part".into()));
    }
    geometric(q, &TensorElement::basis(Word::empty(x)), y, -1, w)
}

/// `Σ_{m>0} s^{m−1} step^{⊗m}` modulo the window, for `s = ±1`.
fn geometric(
    q: &Quiver,
    unit: &TensorElement,
    step: &TensorElement,
    s: i64,
    w: &Window,
) -> Result<(TensorElement, TailFlag), EvalError> {
    let step_level = step.level_with(q.kind, |v| v.level(q));
    if !step.is_zero() && !step_level.is_positive() {
        return Err(EvalError::Undecided("the series has a part of level zero".into()));
    }
    let mut out = TensorElement::zero();
    let mut power = unit.clone();
    let mut sign = NovikovScalar::one();
    loop {
        power = truncate_modulo(q, &mu_concat(&power, step)?, &w.cutoff);
        if power.is_zero() {
            break;
        }
        out.add_scaled(&power, &sign);
        if s < 0 {
            sign = -sign;
        }
    }
    Ok(truncate_element(q, &out, w))
}

/// `(w)rΔ − Σ [(w')f ⊗ (w'')r + (−1)^{d|w''|} (w')r ⊗ (w'')g]` over the cuts
/// of `w`; zero exactly when the Leibniz rule holds on `w`.
pub fn leibniz_residual(r: &Coderivation, w: &Word) -> Result<PairElement, EvalError> {
    let a = r.src.src.as_ref();
    let b = r.src.dst.as_ref();
    let cutoff = &r.src.window.cutoff;
    let mut residual = cut_delta(&r.full(w)?);
    for k in 0..=w.len() {
        let (w1, w2) = (w.slice(0, k), w.slice(k, w.len()));
        let left = pair_product(&r.src.full(&w1)?, &r.full(&w2)?);
        let mut right = pair_product(&r.full(&w1)?, &r.dst.full(&w2)?);
        if r.deg.rem_euclid(2) == 1 && w2.is_odd(a) {
            right = right.neg();
        }
        residual.sub_assign(&left);
        residual.sub_assign(&right);
    }
    Ok(truncate_pairs(b, &residual, cutoff))
}

/// `Δ((w)f) − Σ (w')f ⊗ (w'')f`.
pub fn cofunctor_delta_residual(f: &Cofunctor, w: &Word) -> Result<PairElement, EvalError> {
    let mut residual = cut_delta(&f.full(w)?);
    for k in 0..=w.len() {
        residual.sub_assign(&pair_product(&f.full(&w.slice(0, k))?, &f.full(&w.slice(k, w.len()))?));
    }
    Ok(truncate_pairs(&f.dst, &residual, &f.window.cutoff))
}

fn pair_product(x: &TensorElement, y: &TensorElement) -> PairElement {
    let mut out = PairElement::zero();
    for (a, c) in x.iter() {
        for (b, d) in y.iter() {
            out.add_term((a.clone(), b.clone()), c * d);
        }
    }
    out
}

fn truncate_pairs(q: &Quiver, x: &PairElement, cutoff: &Level) -> PairElement {
    x.truncate_with(q.kind, |(a, b)| a.level(q).plus(&b.level(q)), cutoff)
}

/// A composable word `r¹⊗…⊗rⁿ` of coderivations `f⁰ → f¹ → … → fⁿ`; the
/// empty word is the unit `1_{f⁰}`.
#[derive(Clone)]
pub struct CoderChain {
    functors: Vec<Arc<Cofunctor>>,
    items: Vec<Arc<Coderivation>>,
}

impl fmt::Debug for CoderChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CoderChain({})", self.label())
    }
}

impl CoderChain {
    pub fn unit(f: Arc<Cofunctor>) -> Self {
        CoderChain { functors: vec![f], items: Vec::new() }
    }

    pub fn new(items: Vec<Arc<Coderivation>>) -> Result<Self, EvalError> {
        let Some(first) = items.first() else {
            return Err(EvalError::Inconsistent("a nonempty chain needs coderivations".into()));
        };
        let mut functors = vec![first.src.clone()];
        for r in &items {
            let last = functors.last().unwrap();
            if last.id != r.src.id {
                return Err(EvalError::Inconsistent(format!(
                    "{} starts at {}, expected {}",
                    r.name, r.src.name, last.name
                )));
            }
            functors.push(r.dst.clone());
        }
        Ok(CoderChain { functors, items })
    }

    pub fn functors(&self) -> &[Arc<Cofunctor>] {
        &self.functors
    }

    /// The sub-chain `r^{a+1}⊗…⊗r^b`; empty slices are units.
    pub fn slice(&self, a: usize, b: usize) -> CoderChain {
        CoderChain { functors: self.functors[a..=b].to_vec(), items: self.items[a..b].to_vec() }
    }

    pub fn items(&self) -> &[Arc<Coderivation>] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn degree(&self) -> i64 {
        self.items.iter().map(|r| r.deg).sum()
    }

    pub fn level(&self) -> Level {
        let kind = self.functors[0].dst.kind;
        self.items.iter().fold(kind.zero(), |acc, r| acc.plus(&r.lvl))
    }

    /// Functor and coderivation ids interleaved; equal keys mean equal
    /// chains.
    pub fn key(&self) -> Vec<u64> {
        let mut key = vec![self.functors[0].id];
        for (r, f) in self.items.iter().zip(&self.functors[1..]) {
            key.push(r.id);
            key.push(f.id);
        }
        key
    }

    pub fn functor_key(&self) -> Vec<u64> {
        self.functors.iter().map(|f| f.id).collect()
    }

    pub fn label(&self) -> String {
        if self.items.is_empty() {
            format!("1_{}", self.functors[0].name)
        } else {
            self.items.iter().map(|r| r.name.as_str()).collect::<Vec<_>>().join(" ⊗ ")
        }
    }

    /// `(w)ev = (wΔ^{(2n+1)})(f⁰⊗ř¹⊗f¹⊗…⊗řⁿ⊗fⁿ)μ` modulo `F^cutoff`.
    pub fn eval_word(&self, w: &Word, cutoff: &Level) -> Result<TensorElement, EvalError> {
        let mut slots = vec![Slot::Repeat(&self.functors[0])];
        for (r, f) in self.items.iter().zip(&self.functors[1..]) {
            slots.push(r.slot());
            slots.push(Slot::Repeat(f));
        }
        run_pattern(&slots, w, cutoff)
    }

    pub fn eval_element(&self, x: &TensorElement, cutoff: &Level) -> Result<TensorElement, EvalError> {
        linear(x, |w| self.eval_word(w, cutoff))
    }
}
