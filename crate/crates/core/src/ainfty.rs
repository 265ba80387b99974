//! Filtered A∞-categories, A∞-functors and the codifferential `B` on the
//! coderivation quiver.
//!
//! Generators carry shifted degrees, so `b` is a `(1, 1)`-coderivation of
//! degree 1 and level 0 on `T̂s𝒜`. Relations are checked, never imposed:
//! every checker returns the residual at each basis index.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use crate::filtquiver::{GenId, HomElement, Lin, Quiver, QuiverError};
use crate::levels::{int, Level};
use crate::morphisms::{
    apply_components, CoderChain, Coderivation, Cofunctor, EvalError, LazyComponents,
};
use crate::novikov::NovikovScalar;
use crate::tcoalg::{words_up_to, Window, Word};

/// Unshifted degree from a stored shifted degree.
pub fn unshift(sdeg: i64) -> i64 {
    sdeg + 1
}

/// Stored shifted degree from an unshifted one; `s` has degree `−1`.
pub fn shift(deg: i64) -> i64 {
    deg - 1
}

pub struct AInfCategory {
    quiver: Arc<Quiver>,
    b: Arc<Coderivation>,
}

impl AInfCategory {
    /// Accepts any components `b̌ₙ` of degree 1 and level 0; `b² = 0` is
    /// left to [`check_b_squared`].
    pub fn new(quiver: Arc<Quiver>, rules: Vec<(Word, HomElement)>, window: &Window) -> Result<Self, EvalError> {
        let id = Cofunctor::identity(quiver.clone(), window);
        let zero = quiver.kind.zero();
        let b = Coderivation::from_components(format!("b_{}", quiver.name), id.clone(), id, 1, zero, rules)?;
        Ok(AInfCategory { quiver, b })
    }

    pub fn quiver(&self) -> &Arc<Quiver> {
        &self.quiver
    }

    pub fn b(&self) -> &Arc<Coderivation> {
        &self.b
    }

    pub fn window(&self) -> &Window {
        self.b.window()
    }

    pub fn cutoff(&self) -> &Level {
        &self.b.window().cutoff
    }

    /// Whether some `b̌₀` is nonzero.
    pub fn is_curved(&self) -> Result<bool, EvalError> {
        for x in 0..self.quiver.objects().len() {
            if !self.b.component(&Word::empty(x))?.is_zero() {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

/// Residual of a relation indexed by a single basis word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordResidual {
    pub word: Word,
    pub residual: HomElement,
}

/// `Σ_{i+j+k=n} (1^{⊗i}⊗b_j⊗1^{⊗k}) b_{i+1+k}` on every basis word of
/// length at most `n_max`.
pub fn check_b_squared(a: &AInfCategory, n_max: usize) -> Result<Vec<WordResidual>, EvalError> {
    let b = &a.b;
    words_up_to(&a.quiver, n_max)
        .into_iter()
        .map(|w| {
            let v = apply_components(b.components().as_ref(), &b.full(&w)?)?;
            Ok(WordResidual { residual: a.quiver.truncate_hom(&v, a.cutoff()), word: w })
        })
        .collect()
}

/// `(b·f)ₙ − (f·b)ₙ` on every basis word of length at most `n_max`.
pub fn check_ainf_functor(
    f: &Arc<Cofunctor>,
    a: &AInfCategory,
    b: &AInfCategory,
    n_max: usize,
) -> Result<Vec<WordResidual>, EvalError> {
    let d = b0(f, a, b)?;
    words_up_to(&a.quiver, n_max)
        .into_iter()
        .map(|w| Ok(WordResidual { residual: d.component(&w)?, word: w }))
        .collect()
}

fn check_ends(f: &Cofunctor, a: &AInfCategory, b: &AInfCategory) -> Result<(), EvalError> {
    if **f.src() != *a.quiver || **f.dst() != *b.quiver {
        return Err(QuiverError::HomMismatch(format!("{} between {} and {}", f.name, a.quiver.name, b.quiver.name)).into());
    }
    Ok(())
}

/// `B₀(f)`, the `(f, f)`-coderivation with `1_f B₀ = fb − bf`.
pub fn b0(f: &Arc<Cofunctor>, a: &AInfCategory, b: &AInfCategory) -> Result<Arc<Coderivation>, EvalError> {
    check_ends(f, a, b)?;
    let (ff, ba, bb) = (f.clone(), a.b.clone(), b.b.clone());
    let cutoff = f.window().cutoff.clone();
    let comp = LazyComponents::new(move |w| {
        let mut v = apply_components(bb.components().as_ref(), &ff.full_below(w, &cutoff)?)?;
        let bw = ba.full_below(w, &cutoff)?;
        v.sub_assign(&apply_components(ff.components().as_ref(), &bw)?);
        Ok(bb.src().dst().truncate_hom(&v, &cutoff))
    });
    let zero = b.quiver.kind.zero();
    Ok(Coderivation::with_components(format!("B0({})", f.name), f.clone(), f.clone(), 1, zero, comp))
}

/// `rB₁` with components `b̌((w)r) − (−1)^d ř((w)b)`.
pub fn b1(r: &Arc<Coderivation>, a: &AInfCategory, b: &AInfCategory) -> Result<Arc<Coderivation>, EvalError> {
    check_ends(r.src(), a, b)?;
    let (rr, ba, bb) = (r.clone(), a.b.clone(), b.b.clone());
    let cutoff = r.window().cutoff.clone();
    let inner = r.window().raised_for(r.lvl()).cutoff;
    let sign = if r.deg().rem_euclid(2) == 1 { -NovikovScalar::one() } else { NovikovScalar::one() };
    let comp = LazyComponents::new(move |w| {
        let mut v = apply_components(bb.components().as_ref(), &rr.full_below(w, &cutoff)?)?;
        let bw = ba.full_below(w, &inner)?;
        v.add_scaled(&apply_components(rr.components().as_ref(), &bw)?, &-sign.clone());
        Ok(bb.src().dst().truncate_hom(&v, &cutoff))
    });
    let name = format!("B1({})", r.name);
    Ok(Coderivation::with_components(name, r.src().clone(), r.dst().clone(), r.deg() + 1, r.lvl().clone(), comp))
}

/// `(r¹⊗…⊗rⁿ)Bₙ` for `n ≥ 2`, with components `b̌((w)ev)`.
pub fn bn(chain: &CoderChain, b: &AInfCategory) -> Result<Arc<Coderivation>, EvalError> {
    if chain.len() < 2 {
        return Err(EvalError::Inconsistent("B_n needs at least two coderivations".into()));
    }
    let first = chain.functors()[0].clone();
    let last = chain.functors().last().unwrap().clone();
    if **first.dst() != *b.quiver {
        return Err(QuiverError::HomMismatch(format!("{} into {}", chain.label(), b.quiver.name)).into());
    }
    let (ch, bb) = (chain.clone(), b.b.clone());
    let cutoff = first.window().cutoff.clone();
    let comp = LazyComponents::new(move |w| {
        let v = apply_components(bb.components().as_ref(), &ch.eval_word(w, &cutoff)?)?;
        Ok(bb.src().dst().truncate_hom(&v, &cutoff))
    });
    let names: Vec<&str> = chain.items().iter().map(|r| r.name.as_str()).collect();
    let name = format!("B{}({})", chain.len(), names.join(","));
    Ok(Coderivation::with_components(name, first, last, chain.degree() + 1, chain.level(), comp))
}

/// A formal integer combination of coderivation chains, merged by chain
/// identity.
#[derive(Clone, Default, Debug)]
pub struct ChainSum {
    terms: BTreeMap<Vec<u64>, (CoderChain, i64)>,
}

impl ChainSum {
    pub fn single(c: CoderChain) -> Self {
        let mut s = ChainSum::default();
        s.add(c, 1);
        s
    }

    pub fn add(&mut self, c: CoderChain, coeff: i64) {
        let key = c.key();
        let entry = self.terms.entry(key.clone()).or_insert((c, 0));
        entry.1 += coeff;
        if entry.1 == 0 {
            self.terms.remove(&key);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&CoderChain, i64)> {
        self.terms.values().map(|(c, k)| (c, *k))
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }
}

/// Residual of `B²` on one chain: component evaluations keyed by the
/// functor ids of each homogeneous group, the tuple of source words and the
/// output generators.
pub type ChainEvaluation = Lin<(Vec<u64>, Vec<Word>, Vec<GenId>)>;

#[derive(Debug, Clone)]
pub struct ChainResidual {
    pub chain: CoderChain,
    pub residual: ChainEvaluation,
}

/// The coderivation quiver between two A∞-categories on a finite list of
/// cofunctors and coderivations, with `B` computed on demand.
pub struct CoderQuiver {
    source: Arc<AInfCategory>,
    target: Arc<AInfCategory>,
    functors: Vec<Arc<Cofunctor>>,
    coders: Vec<Arc<Coderivation>>,
    b0_cache: HashMap<u64, Arc<Coderivation>>,
    bj_cache: HashMap<Vec<u64>, Arc<Coderivation>>,
}

impl CoderQuiver {
    pub fn new(
        source: Arc<AInfCategory>,
        target: Arc<AInfCategory>,
        functors: Vec<Arc<Cofunctor>>,
        coders: Vec<Arc<Coderivation>>,
    ) -> Result<Self, EvalError> {
        let mut all = functors;
        for r in &coders {
            for f in [r.src(), r.dst()] {
                if !all.iter().any(|g| g.id() == f.id()) {
                    all.push(f.clone());
                }
            }
        }
        for f in &all {
            check_ends(f, &source, &target)?;
        }
        Ok(CoderQuiver {
            source,
            target,
            functors: all,
            coders,
            b0_cache: HashMap::new(),
            bj_cache: HashMap::new(),
        })
    }

    pub fn source(&self) -> &Arc<AInfCategory> {
        &self.source
    }

    pub fn target(&self) -> &Arc<AInfCategory> {
        &self.target
    }

    pub fn b_zero(&mut self, f: &Arc<Cofunctor>) -> Result<Arc<Coderivation>, EvalError> {
        if let Some(r) = self.b0_cache.get(&f.id()) {
            return Ok(r.clone());
        }
        let r = b0(f, &self.source, &self.target)?;
        self.b0_cache.insert(f.id(), r.clone());
        Ok(r)
    }

    /// `B_j` on a nonempty chain.
    pub fn b_j(&mut self, chain: &CoderChain) -> Result<Arc<Coderivation>, EvalError> {
        let key = chain.key();
        if let Some(r) = self.bj_cache.get(&key) {
            return Ok(r.clone());
        }
        let r = match chain.items() {
            [r] => b1(r, &self.source, &self.target)?,
            _ => bn(chain, &self.target)?,
        };
        self.bj_cache.insert(key, r.clone());
        Ok(r)
    }

    /// `(r¹⊗…⊗rⁿ) Σ 1^{⊗i}⊗B_j⊗1^{⊗k}`; the factor `B_j` passes the
    /// coderivations after it, giving the sign `(−1)^{Σ_{m>i+j} deg rᵐ}`.
    pub fn apply_b(&mut self, sum: &ChainSum) -> Result<ChainSum, EvalError> {
        let mut out = ChainSum::default();
        for (chain, coeff) in sum.iter() {
            let n = chain.len();
            let items = chain.items();
            let degs: Vec<i64> = items.iter().map(|r| r.deg()).collect();
            let tail_sign = |from: usize| -> i64 {
                if degs[from..].iter().sum::<i64>().rem_euclid(2) == 1 {
                    -1
                } else {
                    1
                }
            };
            for i in 0..=n {
                let f = &chain.functors()[i];
                let inserted = self.b_zero(f)?;
                let mut new_items = items[..i].to_vec();
                new_items.push(inserted);
                new_items.extend_from_slice(&items[i..]);
                out.add(CoderChain::new(new_items)?, coeff * tail_sign(i));
            }
            for i in 0..n {
                for j in 1..=n - i {
                    let inner = CoderChain::new(items[i..i + j].to_vec())?;
                    let replaced = self.b_j(&inner)?;
                    let mut new_items = items[..i].to_vec();
                    new_items.push(replaced);
                    new_items.extend_from_slice(&items[i + j..]);
                    out.add(CoderChain::new(new_items)?, coeff * tail_sign(i + j));
                }
            }
        }
        Ok(out)
    }

    /// Units of the listed cofunctors and all composable words of listed
    /// coderivations of length at most `n_max`.
    pub fn chains_up_to(&self, n_max: usize) -> Vec<CoderChain> {
        let mut out: Vec<CoderChain> = self.functors.iter().map(|f| CoderChain::unit(f.clone())).collect();
        let mut frontier: Vec<Vec<Arc<Coderivation>>> = vec![Vec::new()];
        for _ in 0..n_max {
            let mut next = Vec::new();
            for prefix in &frontier {
                for r in &self.coders {
                    if prefix.last().is_some_and(|p: &Arc<Coderivation>| p.dst().id() != r.src().id()) {
                        continue;
                    }
                    let mut items = prefix.clone();
                    items.push(r.clone());
                    out.push(CoderChain::new(items.clone()).expect("composable by construction"));
                    next.push(items);
                }
            }
            frontier = next;
        }
        out
    }

    /// `(c)B²`, tested for zero by evaluating each homogeneous group on all
    /// tuples of source words of total length at most `word_len_max`.
    pub fn b_squared_on(&mut self, chain: &CoderChain, word_len_max: usize) -> Result<ChainResidual, EvalError> {
        let once = self.apply_b(&ChainSum::single(chain.clone()))?;
        let twice = self.apply_b(&once)?;
        let residual = evaluate_sum(&twice, &self.source.quiver, &self.target.quiver, word_len_max)?;
        Ok(ChainResidual { chain: chain.clone(), residual })
    }

    pub fn check_b_squared(&mut self, n_max: usize, word_len_max: usize) -> Result<Vec<ChainResidual>, EvalError> {
        self.chains_up_to(n_max).iter().map(|c| self.b_squared_on(c, word_len_max)).collect()
    }

    /// `[a⊠c]ev·b − [a⊠(c)B]ev − (−1)^{deg c}[(a)b⊠c]ev` with full values
    /// modulo the cutoff.
    pub fn defining_residual(&mut self, a: &Word, chain: &CoderChain) -> Result<crate::tcoalg::TensorElement, EvalError> {
        let cutoff = self.target.cutoff().clone();
        let tb = self.target.b.clone();
        let mut out = tb.full_element(&chain.eval_word(a, &cutoff)?)?;
        for (c, k) in self.apply_b(&ChainSum::single(chain.clone()))?.iter() {
            out.sub_assign(&c.eval_word(a, &cutoff)?.scale(&NovikovScalar::constant(int(k))));
        }
        let ab = self.source.b.full(a)?;
        let mut tail = chain.eval_element(&ab, &cutoff)?;
        if chain.degree().rem_euclid(2) == 1 {
            tail = tail.neg();
        }
        out.sub_assign(&tail);
        Ok(crate::tcoalg::truncate_modulo(&self.target.quiver, &out, &cutoff))
    }
}

/// Compositions of `total ≤ max` into `m` ordered parts.
fn length_tuples(m: usize, max: usize) -> Vec<Vec<usize>> {
    if m == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for first in 0..=max {
        for mut rest in length_tuples(m - 1, max - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn evaluate_sum(sum: &ChainSum, a: &Quiver, b: &Quiver, word_len_max: usize) -> Result<ChainEvaluation, EvalError> {
    let by_len: Vec<Vec<Word>> = (0..=word_len_max)
        .map(|n| words_up_to(a, n).into_iter().filter(|w| w.len() == n).collect())
        .collect();
    let mut out = ChainEvaluation::zero();
    for (chain, coeff) in sum.iter() {
        let fkey = chain.functor_key();
        let m = chain.len();
        if m == 0 {
            out.add_term((fkey, Vec::new(), Vec::new()), NovikovScalar::constant(int(coeff)));
            continue;
        }
        let cutoff = chain.functors()[0].window().cutoff.clone();
        for lens in length_tuples(m, word_len_max) {
            let mut tuples: Vec<Vec<Word>> = vec![Vec::new()];
            for &l in &lens {
                tuples = tuples
                    .into_iter()
                    .flat_map(|t| {
                        by_len[l].iter().map(move |w| {
                            let mut t = t.clone();
                            t.push(w.clone());
                            t
                        })
                    })
                    .collect();
            }
            for tuple in tuples {
                let mut sign = coeff;
                for i in 0..m {
                    for j in i + 1..m {
                        if chain.items()[i].deg().rem_euclid(2) == 1 && tuple[j].is_odd(a) {
                            sign = -sign;
                        }
                    }
                }
                let mut product: Lin<Vec<GenId>> = Lin::basis(Vec::new());
                for (r, w) in chain.items().iter().zip(&tuple) {
                    let v = r.component(w)?;
                    let mut next = Lin::zero();
                    for (k, c) in product.iter() {
                        for (g, d) in v.iter() {
                            let mut k = k.clone();
                            k.push(*g);
                            next.add_term(k, c * d);
                        }
                    }
                    product = next;
                }
                let product = product.truncate_with(b.kind, |k| b.letters_level(k), &cutoff);
                for (k, c) in product.iter() {
                    out.add_term((fkey.clone(), tuple.clone(), k.clone()), c.scale(&int(sign)));
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levels::LevelKind;

    fn rp(n: i64) -> Level {
        Level::RatPlus(int(n))
    }

    fn t(e: i64) -> NovikovScalar {
        NovikovScalar::monomial(int(1), int(e), 0)
    }

    fn w(q: &Quiver, names: &[&str]) -> Word {
        Word::from_letters(q, names.iter().map(|n| q.gen_id(n).unwrap()).collect()).unwrap()
    }

    fn win() -> Window {
        Window::new(6, rp(3))
    }

    /// `p ↦ q ↦ 0` on one object, `sdeg p = −1`, `sdeg q = 0`.
    fn b1_only() -> AInfCategory {
        let mut q = Quiver::new("A", LevelKind::RatPlus);
        let x = q.add_object("X").unwrap();
        q.add_generator("p", x, x, -1, rp(0)).unwrap();
        q.add_generator("q", x, x, 0, rp(0)).unwrap();
        let q = Arc::new(q);
        let rules = vec![(w(&q, &["p"]), HomElement::basis(1))];
        AInfCategory::new(q, rules, &win()).unwrap()
    }

    fn curved() -> AInfCategory {
        let mut q = Quiver::new("C", LevelKind::RatPlus);
        let x = q.add_object("X").unwrap();
        q.add_generator("c", x, x, 1, rp(0)).unwrap();
        let q = Arc::new(q);
        let rules = vec![(Word::empty(0), HomElement::single(0, t(1)))];
        AInfCategory::new(q, rules, &win()).unwrap()
    }

    /// `m₂` on an algebra spanned by `u`, `v` in shifted degree `−1`, so
    /// `b₂(x⊗y) = ±xy` has degree 1 as required.
    fn product(associative: bool) -> AInfCategory {
        let mut q = Quiver::new("P", LevelKind::RatPlus);
        let x = q.add_object("X").unwrap();
        q.add_generator("e", x, x, -1, rp(0)).unwrap();
        q.add_generator("u", x, x, -1, rp(0)).unwrap();
        let q = Arc::new(q);
        let (e, u) = (0, 1);
        // e unit, u² = e (associative) or u² = e but e·u = 0 (not).
        let mut rules = vec![
            (w(&q, &["e", "e"]), HomElement::basis(e)),
            (w(&q, &["u", "u"]), HomElement::basis(e)),
            (w(&q, &["e", "u"]), HomElement::basis(u)),
        ];
        if associative {
            rules.push((w(&q, &["u", "e"]), HomElement::basis(u)));
        }
        AInfCategory::new(q, rules, &win()).unwrap()
    }

    fn all_zero(r: &[WordResidual]) -> bool {
        r.iter().all(|e| e.residual.is_zero())
    }

    #[test]
    fn b_squared_fixtures() {
        assert!(all_zero(&check_b_squared(&b1_only(), 4).unwrap()));
        assert!(all_zero(&check_b_squared(&curved(), 4).unwrap()));
        assert!(all_zero(&check_b_squared(&product(true), 4).unwrap()));
        let bad = check_b_squared(&product(false), 3).unwrap();
        let failing: Vec<_> = bad.iter().filter(|e| !e.residual.is_zero()).collect();
        assert!(!failing.is_empty());
        assert!(failing.iter().all(|e| e.word.len() == 3));
    }

    #[test]
    fn identity_is_ainf_functor() {
        let a = b1_only();
        let id = a.b().src().clone();
        assert!(all_zero(&check_ainf_functor(&id, &a, &a, 3).unwrap()));
        let c = curved();
        let id = c.b().src().clone();
        assert!(all_zero(&check_ainf_functor(&id, &c, &c, 3).unwrap()));
    }

    #[test]
    fn b0_of_non_chain_map() {
        let a = b1_only();
        let q = a.quiver().clone();
        let two = NovikovScalar::constant(int(2));
        // f₁: p ↦ p, q ↦ 2q, so (B0)₁(p) = (p)f₁b₁ − (p)b₁f₁ = q − 2q.
        let f = Cofunctor::from_components(
            "f",
            q.clone(),
            q.clone(),
            vec![0],
            vec![(w(&q, &["p"]), HomElement::basis(0)), (w(&q, &["q"]), HomElement::single(1, two))],
            &win(),
            8,
        )
        .unwrap();
        let d = b0(&f, &a, &a).unwrap();
        assert_eq!(d.component(&w(&q, &["p"])).unwrap(), HomElement::single(1, -NovikovScalar::one()));
        assert!(d.component(&w(&q, &["q"])).unwrap().is_zero());
        let residuals = check_ainf_functor(&f, &a, &a, 2).unwrap();
        assert!(residuals.iter().any(|e| e.word.len() == 1 && !e.residual.is_zero()));
    }

    #[test]
    fn b1_is_commutator_between_ainf_functors() {
        let a = b1_only();
        let q = a.quiver().clone();
        let id = a.b().src().clone();
        // r₁: q ↦ p of degree −1.
        let r = Coderivation::from_components("r", id.clone(), id, -1, rp(0), vec![(w(&q, &["q"]), HomElement::basis(0))])
            .unwrap();
        let rb = b1(&r, &a, &a).unwrap();
        // [r, b]₁: p ↦ −(−1)·r(q) = p, q ↦ b(p) = q.
        assert_eq!(rb.component(&w(&q, &["p"])).unwrap(), HomElement::basis(0));
        assert_eq!(rb.component(&w(&q, &["q"])).unwrap(), HomElement::basis(1));
        for v in words_up_to(&q, 3) {
            assert!(crate::morphisms::leibniz_residual(&rb, &v).unwrap().is_zero());
        }
    }

    fn coder_quiver(a: AInfCategory, coder_rules: Vec<(i64, Vec<(Word, HomElement)>)>) -> CoderQuiver {
        let a = Arc::new(a);
        let id = a.b().src().clone();
        let coders = coder_rules
            .into_iter()
            .enumerate()
            .map(|(i, (deg, rules))| {
                Coderivation::from_components(format!("r{i}"), id.clone(), id.clone(), deg, rp(0), rules).unwrap()
            })
            .collect();
        CoderQuiver::new(a.clone(), a, vec![id], coders).unwrap()
    }

    #[test]
    fn b_squared_on_coderivation_quiver() {
        let a = b1_only();
        let q = a.quiver().clone();
        let mut cq = coder_quiver(
            a,
            vec![(-1, vec![(w(&q, &["q"]), HomElement::basis(0))]), (0, vec![(w(&q, &["p", "q"]), HomElement::basis(0))])],
        );
        for res in cq.check_b_squared(2, 3).unwrap() {
            assert!(res.residual.is_zero(), "{:?}", res.chain);
        }
        for chain in cq.chains_up_to(2) {
            for v in words_up_to(&q, 3) {
                assert!(cq.defining_residual(&v, &chain).unwrap().is_zero(), "{chain:?} {v:?}");
            }
        }
    }

    #[test]
    fn b_squared_on_curved_coderivation_quiver() {
        let a = curved();
        let q = a.quiver().clone();
        let mut cq = coder_quiver(a, vec![(1, vec![(Word::empty(0), HomElement::single(0, t(1)))])]);
        for res in cq.check_b_squared(2, 3).unwrap() {
            assert!(res.residual.is_zero(), "{:?}", res.chain);
        }
        for chain in cq.chains_up_to(2) {
            for v in words_up_to(&q, 3) {
                assert!(cq.defining_residual(&v, &chain).unwrap().is_zero(), "{chain:?} {v:?}");
            }
        }
    }

    #[test]
    fn b_squared_with_product_structure() {
        let a = product(true);
        let q = a.quiver().clone();
        let mut cq = coder_quiver(a, vec![(0, vec![(w(&q, &["u"]), HomElement::basis(0))])]);
        for res in cq.check_b_squared(2, 2).unwrap() {
            assert!(res.residual.is_zero(), "{:?}", res.chain);
        }
        for chain in cq.chains_up_to(2) {
            for v in words_up_to(&q, 3) {
                assert!(cq.defining_residual(&v, &chain).unwrap().is_zero(), "{chain:?} {v:?}");
            }
        }
    }

    #[test]
    fn b_squared_failure_is_detected() {
        let a = product(false);
        let q = a.quiver().clone();
        let mut cq = coder_quiver(a, vec![(0, vec![(w(&q, &["u"]), HomElement::basis(0))])]);
        let residuals = cq.check_b_squared(1, 3).unwrap();
        assert!(residuals.iter().any(|r| !r.residual.is_zero()));
    }

    #[test]
    fn bn_degree_and_level() {
        let a = b1_only();
        let q = a.quiver().clone();
        let id = a.b().src().clone();
        let r = Coderivation::from_components("r", id.clone(), id.clone(), -1, rp(1), vec![(w(&q, &["q"]), HomElement::single(0, t(1)))])
            .unwrap();
        let s = Coderivation::from_components("s", id.clone(), id, 0, rp(2), vec![]).unwrap();
        let b2 = bn(&CoderChain::new(vec![r, s]).unwrap(), &a).unwrap();
        assert_eq!(b2.deg(), 0);
        assert_eq!(b2.lvl(), &rp(3));
        assert!(b2.components_up_to(3).unwrap().is_empty());
    }

    #[test]
    fn shift_roundtrip() {
        assert_eq!(shift(1), 0);
        for d in -3..4 {
            assert_eq!(unshift(shift(d)), d);
        }
    }
}
