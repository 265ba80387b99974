use std::collections::BTreeMap;
use std::sync::Arc;

use crate::ainfty::AInfCategory;
use crate::evalhom::PsiData;
use crate::filtquiver::Quiver;
use crate::morphisms::{Coderivation, Cofunctor, DEFAULT_CONVERGENCE_BOUND};
use crate::tcoalg::Window;

use super::format::FileData;
use super::LoadError;

/// A loaded structure file with every declared object built.
pub struct Session {
    pub data: FileData,
    pub window: Window,
    pub ainf: BTreeMap<String, Arc<AInfCategory>>,
    pub functors: BTreeMap<String, Arc<Cofunctor>>,
    pub coders: BTreeMap<String, Arc<Coderivation>>,
    /// Longest word with a nonzero declared component, per functor or
    /// coderivation name.
    pub bounds: BTreeMap<String, usize>,
}

fn object_map(src: &Quiver, dst: &Quiver, given: &BTreeMap<String, String>, ctx: &str) -> Result<Vec<usize>, LoadError> {
    for k in given.keys() {
        src.object_id(k).map_err(|e| LoadError::Parse(format!("{ctx}: {e}")))?;
    }
    src.objects()
        .iter()
        .map(|x| {
            let target = given.get(x).unwrap_or(x);
            dst.object_id(target)
                .map_err(|_| LoadError::Parse(format!("{ctx}: object {x} has no image")))
        })
        .collect()
}

impl Session {
    pub fn build(data: FileData, window: Window) -> Result<Session, LoadError> {
        let mut ainf = BTreeMap::new();
        for (name, rules) in &data.ainf {
            let q = data.quivers[name].clone();
            ainf.insert(name.clone(), Arc::new(AInfCategory::new(q, rules.clone(), &window)?));
        }
        let mut functors = BTreeMap::new();
        let mut bounds = BTreeMap::new();
        for (name, decl) in &data.functors {
            let (a, b) = (data.quivers[&decl.src].clone(), data.quivers[&decl.dst].clone());
            let obj_map = object_map(&a, &b, &decl.objects, &format!("functors.{name}"))?;
            let f = Cofunctor::from_components(
                name.clone(),
                a,
                b,
                obj_map,
                decl.components.clone(),
                &window,
                DEFAULT_CONVERGENCE_BOUND,
            )?;
            bounds.insert(name.clone(), decl.components.iter().map(|(w, _)| w.len()).max().unwrap_or(0));
            functors.insert(name.clone(), f);
        }
        let mut coders = BTreeMap::new();
        for (name, decl) in &data.coderivations {
            let r = Coderivation::from_components(
                name.clone(),
                functors[&decl.src].clone(),
                functors[&decl.dst].clone(),
                decl.deg,
                decl.level.clone(),
                decl.components.clone(),
            )?;
            bounds.insert(name.clone(), decl.components.iter().map(|(w, _)| w.len()).max().unwrap_or(0));
            coders.insert(name.clone(), r);
        }
        Ok(Session { data, window, ainf, functors, coders, bounds })
    }

    pub fn load(text: &str, window: Option<Window>) -> Result<Session, LoadError> {
        let data = FileData::parse(text)?;
        let window = window.unwrap_or_else(|| data.window.clone());
        Session::build(data, window)
    }

    pub fn functor(&self, name: &str) -> Result<&Arc<Cofunctor>, LoadError> {
        self.functors.get(name).ok_or_else(|| LoadError::Resolve(format!("unknown functor \"{name}\"")))
    }

    pub fn coder(&self, name: &str) -> Result<&Arc<Coderivation>, LoadError> {
        self.coders.get(name).ok_or_else(|| LoadError::Resolve(format!("unknown coderivation \"{name}\"")))
    }

    pub fn ainf_on(&self, quiver: &str) -> Result<&Arc<AInfCategory>, LoadError> {
        self.ainf
            .get(quiver)
            .ok_or_else(|| LoadError::Resolve(format!("no A∞ structure on quiver \"{quiver}\"")))
    }

    /// The file's ψ section as a map on its quiver.
    pub fn psi(&self) -> Result<PsiData, LoadError> {
        let decl = self.data.psi.as_ref().ok_or_else(|| LoadError::Resolve("the file has no psi section".into()))?;
        let q = self.data.quivers[&decl.quiver].clone();
        let objects = q
            .objects()
            .iter()
            .map(|y| {
                let f = decl
                    .objects
                    .get(y)
                    .ok_or_else(|| LoadError::Parse(format!("psi: object {y} has no image")))?;
                Ok(self.functors[f].clone())
            })
            .collect::<Result<Vec<_>, LoadError>>()?;
        let rules = decl
            .components
            .iter()
            .map(|(w, terms)| (w.clone(), terms.iter().map(|(c, n)| (c.clone(), self.coders[n].clone())).collect()))
            .collect();
        Ok(PsiData::new(q, objects, rules)?)
    }
}
