//! Graded filtered quivers with finite free hom modules, their elements,
//! graded filtered maps, and the Koszul sign calculus for tensor products
//! of maps.
//!
//! Maps act on the right: `(x)f`. For a tensor product of maps acting on a
//! word the convention is
//!
//! ```text
//! (x₁⊗…⊗xₙ)(f₁⊗…⊗fₙ) = (−1)^σ (x₁)f₁ ⊗ … ⊗ (xₙ)fₙ,   σ = Σ_{i<j} deg fᵢ·|xⱼ|
//! ```
//!
//! i.e. the sign of moving each `fᵢ` leftward past the letters `xⱼ`,
//! `j > i`, that stand between it and `xᵢ`. With it the interchange law
//! `(f⊗g)(h⊗k) = (−1)^{gh} fh⊗gk` holds.

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::levels::{Level, LevelKind};
use crate::novikov::NovikovScalar;
use crate::tcoalg::{TensorElement, Word};

pub type ObjId = usize;
pub type GenId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QuiverError {
    #[error("object {0} declared twice")]
    DuplicateObject(String),
    #[error("generator {0} declared twice")]
    DuplicateGenerator(String),
    #[error("unknown object {0}")]
    UnknownObject(String),
    #[error("unknown generator {0}")]
    UnknownGenerator(String),
    #[error("generator {name}: {reason}")]
    BadGenerator { name: String, reason: String },
    #[error("letters do not compose: {0}")]
    NotComposable(String),
    #[error("degree mismatch: expected {expected}, found {found} in {context}")]
    DegreeMismatch { expected: i64, found: i64, context: String },
    #[error("level violation in {context}: {found} is below {required}")]
    LevelViolation { context: String, required: Level, found: Level },
    #[error("element of the wrong hom module in {0}")]
    HomMismatch(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generator {
    pub name: String,
    pub src: ObjId,
    pub dst: ObjId,
    pub sdeg: i64,
    pub level: Level,
}

/// A graded filtered quiver whose hom modules are free on finitely many
/// generators. Generator names are unique in the whole quiver.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Quiver {
    pub name: String,
    pub kind: LevelKind,
    objects: Vec<String>,
    gens: Vec<Generator>,
}

impl Quiver {
    pub fn new(name: impl Into<String>, kind: LevelKind) -> Self {
        Quiver { name: name.into(), kind, objects: Vec::new(), gens: Vec::new() }
    }

    pub fn add_object(&mut self, name: &str) -> Result<ObjId, QuiverError> {
        if self.objects.iter().any(|o| o == name) {
            return Err(QuiverError::DuplicateObject(name.to_string()));
        }
        self.objects.push(name.to_string());
        Ok(self.objects.len() - 1)
    }

    pub fn add_generator(
        &mut self,
        name: &str,
        src: ObjId,
        dst: ObjId,
        sdeg: i64,
        level: Level,
    ) -> Result<GenId, QuiverError> {
        if self.gens.iter().any(|g| g.name == name) {
            return Err(QuiverError::DuplicateGenerator(name.to_string()));
        }
        if src >= self.objects.len() || dst >= self.objects.len() {
            return Err(QuiverError::UnknownObject(format!("endpoint of {name}")));
        }
        let bad = |reason: &str| QuiverError::BadGenerator {
            name: name.to_string(),
            reason: reason.to_string(),
        };
        match level.kind() {
            None => return Err(bad("base level must be finite")),
            Some(k) if k != self.kind => return Err(bad("base level from another monoid")),
            _ => {}
        }
        self.gens.push(Generator { name: name.to_string(), src, dst, sdeg, level });
        Ok(self.gens.len() - 1)
    }

    pub fn objects(&self) -> &[String] {
        &self.objects
    }

    pub fn generators(&self) -> &[Generator] {
        &self.gens
    }

    pub fn gen(&self, g: GenId) -> &Generator {
        &self.gens[g]
    }

    pub fn object_id(&self, name: &str) -> Result<ObjId, QuiverError> {
        self.objects
            .iter()
            .position(|o| o == name)
            .ok_or_else(|| QuiverError::UnknownObject(name.to_string()))
    }

    pub fn gen_id(&self, name: &str) -> Result<GenId, QuiverError> {
        self.gens
            .iter()
            .position(|g| g.name == name)
            .ok_or_else(|| QuiverError::UnknownGenerator(name.to_string()))
    }

    /// Generators of the hom module from `x` to `y`.
    pub fn hom(&self, x: ObjId, y: ObjId) -> Vec<GenId> {
        (0..self.gens.len())
            .filter(|&g| self.gens[g].src == x && self.gens[g].dst == y)
            .collect()
    }

    pub fn letters_level(&self, letters: &[GenId]) -> Level {
        letters
            .iter()
            .fold(self.kind.zero(), |acc, &g| acc.plus(&self.gens[g].level))
    }

    pub fn letters_degree(&self, letters: &[GenId]) -> i64 {
        letters.iter().map(|&g| self.gens[g].sdeg).sum()
    }

    /// Whether the total degree of the letters is odd.
    pub fn letters_odd(&self, letters: &[GenId]) -> bool {
        self.letters_degree(letters).rem_euclid(2) == 1
    }

    pub fn hom_level(&self, x: &HomElement) -> Level {
        x.level_with(self.kind, |&g| self.gens[g].level.clone())
    }

    /// Drops the part of `x` lying in `F^cutoff`.
    pub fn truncate_hom(&self, x: &HomElement, cutoff: &Level) -> HomElement {
        x.truncate_with(self.kind, |&g| self.gens[g].level.clone(), cutoff)
    }
}

/// A finite linear combination `Σ k·c` with Novikov coefficients, in
/// normal form: no zero coefficients, keys sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Lin<K: Ord> {
    terms: BTreeMap<K, NovikovScalar>,
}

impl<K: Ord> Default for Lin<K> {
    fn default() -> Self {
        Lin { terms: BTreeMap::new() }
    }
}

impl<K: Ord + Clone> Lin<K> {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn basis(k: K) -> Self {
        Self::single(k, NovikovScalar::one())
    }

    pub fn single(k: K, c: NovikovScalar) -> Self {
        let mut out = Self::zero();
        out.add_term(k, c);
        out
    }

    pub fn add_term(&mut self, k: K, c: NovikovScalar) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&k) {
            Some(slot) => {
                *slot = &*slot + &c;
                if slot.is_zero() {
                    self.terms.remove(&k);
                }
            }
            None => {
                self.terms.insert(k, c);
            }
        }
    }

    pub fn add_scaled(&mut self, other: &Lin<K>, c: &NovikovScalar) {
        for (k, v) in &other.terms {
            self.add_term(k.clone(), v * c);
        }
    }

    pub fn add_assign(&mut self, other: &Lin<K>) {
        for (k, v) in &other.terms {
            self.add_term(k.clone(), v.clone());
        }
    }

    pub fn sub_assign(&mut self, other: &Lin<K>) {
        for (k, v) in &other.terms {
            self.add_term(k.clone(), -v);
        }
    }

    pub fn plus(&self, other: &Lin<K>) -> Lin<K> {
        let mut out = self.clone();
        out.add_assign(other);
        out
    }

    pub fn minus(&self, other: &Lin<K>) -> Lin<K> {
        let mut out = self.clone();
        out.sub_assign(other);
        out
    }

    pub fn scale(&self, c: &NovikovScalar) -> Lin<K> {
        let mut out = Self::zero();
        out.add_scaled(self, c);
        out
    }

    pub fn neg(&self) -> Lin<K> {
        Lin { terms: self.terms.iter().map(|(k, v)| (k.clone(), -v)).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn get(&self, k: &K) -> Option<&NovikovScalar> {
        self.terms.get(k)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, &NovikovScalar)> {
        self.terms.iter()
    }

    pub fn keys(&self) -> impl Iterator<Item = &K> {
        self.terms.keys()
    }

    /// Re-keys every term; colliding keys are summed.
    pub fn map_keys<L: Ord + Clone>(&self, mut f: impl FnMut(&K) -> L) -> Lin<L> {
        let mut out = Lin::zero();
        for (k, v) in &self.terms {
            out.add_term(f(k), v.clone());
        }
        out
    }

    pub fn filter_keys(&self, mut keep: impl FnMut(&K) -> bool) -> Lin<K> {
        Lin {
            terms: self
                .terms
                .iter()
                .filter(|(k, _)| keep(k))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        }
    }

    /// Minimum over terms of `level(key) + level(coefficient)`.
    pub fn level_with(&self, kind: LevelKind, key_level: impl Fn(&K) -> Level) -> Level {
        self.terms
            .iter()
            .map(|(k, c)| key_level(k).plus(&c.level(kind)))
            .fold(Level::Infinity, Level::min_of)
    }

    pub fn truncate_with(
        &self,
        kind: LevelKind,
        key_level: impl Fn(&K) -> Level,
        cutoff: &Level,
    ) -> Lin<K> {
        let mut out = Lin::zero();
        for (k, c) in &self.terms {
            out.add_term(k.clone(), c.truncate_shifted(kind, &key_level(k), cutoff));
        }
        out
    }
}

impl<K: Ord + Clone> FromIterator<(K, NovikovScalar)> for Lin<K> {
    fn from_iter<I: IntoIterator<Item = (K, NovikovScalar)>>(iter: I) -> Self {
        let mut out = Lin::zero();
        for (k, c) in iter {
            out.add_term(k, c);
        }
        out
    }
}

/// An element of a hom module: a combination of generators.
pub type HomElement = Lin<GenId>;

/// The symmetry `τ(x⊗y) = (−1)^{|x||y|} y⊗x` on pairs.
pub fn tau<K: Ord + Clone>(x: &Lin<(K, K)>, odd: impl Fn(&K) -> bool) -> Lin<(K, K)> {
    let mut out = Lin::zero();
    for ((a, b), c) in x.iter() {
        let c = if odd(a) && odd(b) { -c } else { c.clone() };
        out.add_term((b.clone(), a.clone()), c);
    }
    out
}

/// Sign of `(x₁⊗…⊗xₙ)(f₁⊗…⊗fₙ)`, obtained by sliding each operator to the
/// left one transposition at a time, each swap of neighbours of degrees
/// `a`, `b` contributing `(−1)^{ab}`.
pub fn koszul_sign(op_degs: &[i64], letter_degs: &[i64]) -> i64 {
    assert_eq!(op_degs.len(), letter_degs.len());
    let n = op_degs.len();
    // Each entry is (degree, is_operator).
    let mut line: Vec<(i64, bool)> = letter_degs.iter().map(|&d| (d, false)).collect();
    line.extend(op_degs.iter().map(|&d| (d, true)));
    let mut sign = 1;
    for i in 0..n {
        // Operator i currently sits at n + i and must end at 2i + 1.
        let mut pos = n + i;
        while pos > 2 * i + 1 {
            let (a, b) = (line[pos - 1].0, line[pos].0);
            if (a * b).rem_euclid(2) == 1 {
                sign = -sign;
            }
            line.swap(pos - 1, pos);
            pos -= 1;
        }
    }
    debug_assert!(line.iter().enumerate().all(|(k, e)| e.1 == (k % 2 == 1)));
    sign
}

/// A graded filtered map between hom modules, given on generators:
/// membership in `F^lvl und(M, N)^deg`.
#[derive(Debug, Clone)]
pub struct GradedMap {
    pub deg: i64,
    pub lvl: Level,
    pub src: Arc<Quiver>,
    pub dst: Arc<Quiver>,
    pub obj_map: Vec<ObjId>,
    action: Vec<HomElement>,
}

impl GradedMap {
    pub fn new(
        src: Arc<Quiver>,
        dst: Arc<Quiver>,
        obj_map: Vec<ObjId>,
        deg: i64,
        lvl: Level,
        action: Vec<HomElement>,
    ) -> Result<Self, QuiverError> {
        if obj_map.len() != src.objects().len() || action.len() != src.generators().len() {
            return Err(QuiverError::HomMismatch("map data has the wrong shape".into()));
        }
        for (g, value) in action.iter().enumerate() {
            let gen = src.gen(g);
            check_value(
                &dst,
                value,
                (obj_map[gen.src], obj_map[gen.dst]),
                gen.sdeg + deg,
                &gen.level.plus(&lvl),
                &gen.name,
            )?;
        }
        Ok(GradedMap { deg, lvl, src, dst, obj_map, action })
    }

    pub fn identity(q: Arc<Quiver>) -> Self {
        let action = (0..q.generators().len()).map(HomElement::basis).collect();
        let obj_map = (0..q.objects().len()).collect();
        GradedMap { deg: 0, lvl: q.kind.zero(), src: q.clone(), dst: q, obj_map, action }
    }

    pub fn on_generator(&self, g: GenId) -> &HomElement {
        &self.action[g]
    }

    /// `(x)f`, extended linearly. All terms of `x` must lie in one hom module.
    pub fn apply(&self, x: &HomElement) -> Result<HomElement, QuiverError> {
        let mut ends = None;
        let mut out = HomElement::zero();
        for (&g, c) in x.iter() {
            let gen = self.src.gen(g);
            match ends {
                None => ends = Some((gen.src, gen.dst)),
                Some(e) if e != (gen.src, gen.dst) => {
                    return Err(QuiverError::HomMismatch("apply".into()))
                }
                _ => {}
            }
            out.add_scaled(&self.action[g], c);
        }
        Ok(out)
    }

    /// The composite `self · other`: first `self`, then `other`.
    pub fn then(&self, other: &GradedMap) -> Result<GradedMap, QuiverError> {
        if !Arc::ptr_eq(&self.dst, &other.src) && *self.dst != *other.src {
            return Err(QuiverError::HomMismatch("composite of maps".into()));
        }
        let action = self
            .action
            .iter()
            .map(|v| other.apply(v))
            .collect::<Result<Vec<_>, _>>()?;
        let obj_map = self.obj_map.iter().map(|&x| other.obj_map[x]).collect();
        Ok(GradedMap {
            deg: self.deg + other.deg,
            lvl: self.lvl.plus(&other.lvl),
            src: self.src.clone(),
            dst: other.dst.clone(),
            obj_map,
            action,
        })
    }
}

/// Checks that `value` lies in `q(ends)`, is homogeneous of degree `deg`
/// and has level at least `min_level`.
pub(crate) fn check_value(
    q: &Quiver,
    value: &HomElement,
    ends: (ObjId, ObjId),
    deg: i64,
    min_level: &Level,
    context: &str,
) -> Result<(), QuiverError> {
    for (&g, c) in value.iter() {
        let gen = q.gen(g);
        if (gen.src, gen.dst) != ends {
            return Err(QuiverError::HomMismatch(context.to_string()));
        }
        for t in c.terms() {
            let found = gen.sdeg + 2 * t.expo;
            if found != deg {
                return Err(QuiverError::DegreeMismatch {
                    expected: deg,
                    found,
                    context: context.to_string(),
                });
            }
        }
    }
    let found = q.hom_level(value);
    if !found.ge(min_level) {
        return Err(QuiverError::LevelViolation {
            context: context.to_string(),
            required: min_level.clone(),
            found,
        });
    }
    Ok(())
}

/// `(x₁⊗…⊗xₙ)(f₁⊗…⊗fₙ)` on a word of length `n`.
pub fn tensor_maps(maps: &[&GradedMap], w: &Word) -> Result<TensorElement, QuiverError> {
    if maps.len() != w.len() {
        return Err(QuiverError::NotComposable("one map per letter is required".into()));
    }
    let Some(first) = maps.first() else {
        return Ok(TensorElement::zero());
    };
    let src = &first.src;
    for i in 1..maps.len() {
        let mid = w.obj_at(i);
        if maps[i - 1].obj_map[mid] != maps[i].obj_map[mid] {
            return Err(QuiverError::NotComposable(format!("object maps disagree at position {i}")));
        }
    }
    let op_degs: Vec<i64> = maps.iter().map(|f| f.deg).collect();
    let letter_degs: Vec<i64> = w.letters().iter().map(|&g| src.gen(g).sdeg).collect();
    let sign = koszul_sign(&op_degs, &letter_degs);
    let dst = &first.dst;
    let start = first.obj_map[w.src()];
    let mut acc = TensorElement::basis(Word::empty(start));
    for (f, &g) in maps.iter().zip(w.letters()) {
        acc = crate::tcoalg::append_hom(dst, &acc, f.on_generator(g));
    }
    Ok(if sign < 0 { acc.neg() } else { acc })
}
