//! The tensor cocategory `T𝔞` of a quiver: composable words, the cut
//! comultiplication and its reduced and iterated forms, counit, unit and
//! concatenation, and truncation windows standing in for the completion.
//!
//! Everything "in `T̂𝔞`" is computed modulo `F^E` and up to word length
//! `N`; a [`TailFlag`] records whether dropping long words could have lost
//! anything below the cutoff.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use crate::filtquiver::{GenId, HomElement, Lin, ObjId, Quiver, QuiverError};
use crate::levels::Level;
use crate::novikov::NovikovScalar;

/// A composable word `g₁⊗…⊗gₖ`; the empty word at `X` stands for `η(1_X)`.
/// `objs` lists the `k + 1` objects the word passes through.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word {
    objs: Vec<ObjId>,
    letters: Vec<GenId>,
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.letters
            .len()
            .cmp(&other.letters.len())
            .then_with(|| self.objs.cmp(&other.objs))
            .then_with(|| self.letters.cmp(&other.letters))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Word {
    pub fn empty(x: ObjId) -> Self {
        Word { objs: vec![x], letters: Vec::new() }
    }

    pub fn single(q: &Quiver, g: GenId) -> Self {
        let gen = q.gen(g);
        Word { objs: vec![gen.src, gen.dst], letters: vec![g] }
    }

    pub fn from_letters(q: &Quiver, letters: Vec<GenId>) -> Result<Self, QuiverError> {
        let Some(&first) = letters.first() else {
            return Err(QuiverError::NotComposable("an empty word needs an object".into()));
        };
        let mut objs = vec![q.gen(first).src];
        for &g in &letters {
            let gen = q.gen(g);
            if gen.src != *objs.last().unwrap() {
                return Err(QuiverError::NotComposable(gen.name.clone()));
            }
            objs.push(gen.dst);
        }
        Ok(Word { objs, letters })
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn src(&self) -> ObjId {
        self.objs[0]
    }

    pub fn dst(&self) -> ObjId {
        *self.objs.last().unwrap()
    }

    pub fn letters(&self) -> &[GenId] {
        &self.letters
    }

    /// The object before letter `i` (or the target when `i = len`).
    pub fn obj_at(&self, i: usize) -> ObjId {
        self.objs[i]
    }

    /// The subword of letters `a..b`; empty subwords keep their object.
    pub fn slice(&self, a: usize, b: usize) -> Word {
        Word { objs: self.objs[a..=b].to_vec(), letters: self.letters[a..b].to_vec() }
    }

    pub fn concat(&self, other: &Word) -> Option<Word> {
        if self.dst() != other.src() {
            return None;
        }
        let mut objs = self.objs.clone();
        objs.extend_from_slice(&other.objs[1..]);
        let mut letters = self.letters.clone();
        letters.extend_from_slice(&other.letters);
        Some(Word { objs, letters })
    }

    fn pushed(&self, q: &Quiver, g: GenId) -> Option<Word> {
        let gen = q.gen(g);
        if gen.src != self.dst() {
            return None;
        }
        let mut out = self.clone();
        out.objs.push(gen.dst);
        out.letters.push(g);
        Some(out)
    }

    pub fn level(&self, q: &Quiver) -> Level {
        q.letters_level(&self.letters)
    }

    pub fn degree(&self, q: &Quiver) -> i64 {
        q.letters_degree(&self.letters)
    }

    pub fn is_odd(&self, q: &Quiver) -> bool {
        q.letters_odd(&self.letters)
    }

    pub fn display<'a>(&'a self, q: &'a Quiver) -> WordDisplay<'a> {
        WordDisplay { word: self, quiver: q }
    }
}

pub struct WordDisplay<'a> {
    word: &'a Word,
    quiver: &'a Quiver,
}

impl fmt::Display for WordDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.word.is_empty() {
            return write!(f, "@{}", self.quiver.objects()[self.word.src()]);
        }
        for (i, &g) in self.word.letters.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            f.write_str(&self.quiver.gen(g).name)?;
        }
        Ok(())
    }
}

/// An element of `T𝔞`, or of `T̂𝔞` modulo a window.
pub type TensorElement = Lin<Word>;
pub type PairElement = Lin<(Word, Word)>;
pub type SplitElement = Lin<Vec<Word>>;

/// Cut points `0 = c₀ ≤ c₁ ≤ … ≤ c_k = n`; strictly increasing when
/// `nonempty`.
pub fn splits(n: usize, k: usize, nonempty: bool) -> Vec<Vec<usize>> {
    fn rec(n: usize, k: usize, nonempty: bool, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let last = *cur.last().unwrap();
        if k == 1 {
            if !nonempty || last < n {
                cur.push(n);
                out.push(cur.clone());
                cur.pop();
            }
            return;
        }
        let lo = if nonempty { last + 1 } else { last };
        for c in lo..=n {
            cur.push(c);
            rec(n, k - 1, nonempty, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k == 0 {
        if n == 0 {
            out.push(vec![0]);
        }
        return out;
    }
    rec(n, k, nonempty, &mut vec![0], &mut out);
    out
}

fn split_word(w: &Word, cuts: &[usize]) -> Vec<Word> {
    cuts.windows(2).map(|c| w.slice(c[0], c[1])).collect()
}

/// `Δ(h₁⊗…⊗hₙ) = Σₖ (h₁…hₖ)⊗(hₖ₊₁…hₙ)`, both empty ends included.
pub fn cut_delta(x: &TensorElement) -> PairElement {
    let mut out = PairElement::zero();
    for (w, c) in x.iter() {
        for k in 0..=w.len() {
            out.add_term((w.slice(0, k), w.slice(k, w.len())), c.clone());
        }
    }
    out
}

/// `Δ̄`: the splits with both sides non-empty. Length-0 terms are ignored.
pub fn reduced_delta(x: &TensorElement) -> PairElement {
    cut_delta(x).filter_keys(|(a, b)| !a.is_empty() && !b.is_empty())
}

/// `Δ^{(k)}`, `k ≥ 1`: all splits into `k` consecutive, possibly empty,
/// pieces.
pub fn delta_k(x: &TensorElement, k: usize) -> SplitElement {
    assert!(k >= 1, "delta_k needs k >= 1");
    let mut out = SplitElement::zero();
    for (w, c) in x.iter() {
        for cuts in splits(w.len(), k, false) {
            out.add_term(split_word(w, &cuts), c.clone());
        }
    }
    out
}

/// `Δ̄^{(k)}` on `T^{>0}`, with `Δ̄^{(1)} = id`: splits into `k` non-empty
/// pieces.
pub fn reduced_delta_k(x: &TensorElement, k: usize) -> SplitElement {
    assert!(k >= 1, "reduced_delta_k needs k >= 1");
    let mut out = SplitElement::zero();
    for (w, c) in x.iter() {
        if w.is_empty() {
            continue;
        }
        for cuts in splits(w.len(), k, true) {
            out.add_term(split_word(w, &cuts), c.clone());
        }
    }
    out
}

/// `ε = pr₀`, reported per object.
pub fn counit(x: &TensorElement) -> BTreeMap<ObjId, NovikovScalar> {
    x.iter()
        .filter(|(w, _)| w.is_empty())
        .map(|(w, c)| (w.src(), c.clone()))
        .collect()
}

pub fn eta(x: ObjId) -> TensorElement {
    TensorElement::basis(Word::empty(x))
}

/// Concatenation product, bilinear and sign-free.
pub fn mu_concat(x: &TensorElement, y: &TensorElement) -> Result<TensorElement, QuiverError> {
    let mut out = TensorElement::zero();
    for (a, c) in x.iter() {
        for (b, d) in y.iter() {
            let w = a
                .concat(b)
                .ok_or_else(|| QuiverError::NotComposable("concatenation".into()))?;
            out.add_term(w, c * d);
        }
    }
    Ok(out)
}

/// `acc ⊗ h`: appends one letter from a hom element to every word.
/// Terms that do not compose are a caller error and are skipped.
pub fn append_hom(q: &Quiver, acc: &TensorElement, h: &HomElement) -> TensorElement {
    let mut out = TensorElement::zero();
    for (w, c) in acc.iter() {
        for (&g, d) in h.iter() {
            match w.pushed(q, g) {
                Some(v) => out.add_term(v, c * d),
                None => debug_assert!(false, "appending a letter that does not compose"),
            }
        }
    }
    out
}

/// Maximum word length `N` and energy cutoff `E`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Window {
    pub max_len: usize,
    pub cutoff: Level,
}

impl Window {
    pub fn new(max_len: usize, cutoff: Level) -> Self {
        Window { max_len, cutoff }
    }

    /// The same window with the cutoff raised by `-lvl` when `lvl` is
    /// negative, so that a map of level `lvl` applied afterwards stays exact
    /// below the original cutoff.
    pub fn raised_for(&self, lvl: &Level) -> Window {
        match lvl {
            Level::Rat(q) if q < &num_traits::Zero::zero() => Window {
                max_len: self.max_len,
                cutoff: self.cutoff.plus(&Level::Rat(-q)),
            },
            _ => self.clone(),
        }
    }
}

/// Whether a truncation provably discarded only terms in `F^E`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default)]
pub enum TailFlag {
    #[default]
    Sound,
    Lossy,
}

impl TailFlag {
    pub fn merge(self, other: TailFlag) -> TailFlag {
        self.max(other)
    }
}

impl fmt::Display for TailFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TailFlag::Sound => "SOUND",
            TailFlag::Lossy => "LOSSY",
        })
    }
}

pub fn truncate_modulo(q: &Quiver, x: &TensorElement, cutoff: &Level) -> TensorElement {
    x.truncate_with(q.kind, |w| w.level(q), cutoff)
}

/// Drops words longer than `N` and everything in `F^E`. Lossy exactly
/// when a dropped long word had a part below the cutoff.
pub fn truncate_element(q: &Quiver, x: &TensorElement, w: &Window) -> (TensorElement, TailFlag) {
    let below = truncate_modulo(q, x, &w.cutoff);
    let mut flag = TailFlag::Sound;
    let kept = below.filter_keys(|word| {
        let keep = word.len() <= w.max_len;
        if !keep {
            flag = TailFlag::Lossy;
        }
        keep
    });
    (kept, flag)
}

/// All composable words of length exactly `n`; for `n = 0`, the empty word
/// at each object.
pub fn words_of_len(q: &Quiver, n: usize) -> Vec<Word> {
    let mut layer: Vec<Word> = (0..q.objects().len()).map(Word::empty).collect();
    for _ in 0..n {
        let mut next = Vec::new();
        for w in &layer {
            for g in 0..q.generators().len() {
                if let Some(v) = w.pushed(q, g) {
                    next.push(v);
                }
            }
        }
        layer = next;
    }
    layer.sort();
    layer
}

pub fn words_up_to(q: &Quiver, n: usize) -> Vec<Word> {
    (0..=n).flat_map(|k| words_of_len(q, k)).collect()
}

/// `Δ^{(k)}` of `c⊠d` in the ⊠-product of two tensor cocategories, with
/// the middle-four interchange sign `Σ_{i>j} |cⱼ||dᵢ|`. With `reduced`
/// only pieces other than `η⊠η` are kept.
pub fn box_delta_k(
    qc: &Quiver,
    qd: &Quiver,
    c: &Word,
    d: &Word,
    k: usize,
    reduced: bool,
) -> Lin<Vec<(Word, Word)>> {
    let mut out = Lin::zero();
    for cc in splits(c.len(), k, false) {
        let cs = split_word(c, &cc);
        for dc in splits(d.len(), k, false) {
            let ds = split_word(d, &dc);
            if reduced && cs.iter().zip(&ds).any(|(a, b)| a.is_empty() && b.is_empty()) {
                continue;
            }
            let mut odd = false;
            for j in 0..k {
                for i in 0..j {
                    odd ^= cs[j].is_odd(qc) && ds[i].is_odd(qd);
                }
            }
            let coeff = if odd { -NovikovScalar::one() } else { NovikovScalar::one() };
            out.add_term(cs.iter().cloned().zip(ds.iter().cloned()).collect(), coeff);
        }
    }
    out
}
