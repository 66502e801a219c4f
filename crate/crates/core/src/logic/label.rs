//! The two-point lattice and its pointwise lifting over locations.

use std::collections::{BTreeMap, BTreeSet};

use crate::types::Label;

pub fn lub(a: Label, b: Label) -> Label {
    a.max(b)
}

pub fn glb(a: Label, b: Label) -> Label {
    a.min(b)
}

/// Lattice order, `Lo ⊑ Hi`.
pub fn lle(a: Label, b: Label) -> bool {
    a <= b
}

/// A total function `K -> Label` given by finitely many explicit entries and
/// a default for every other key. This is the lifted lattice `K -> Label`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap<K: Ord> {
    pub entries: BTreeMap<K, Label>,
    pub default: Label,
}

impl<K: Ord + Clone> LabelMap<K> {
    /// Everything `Hi` except the listed entries.
    pub fn with_default_hi(entries: impl IntoIterator<Item = (K, Label)>) -> Self {
        LabelMap { entries: entries.into_iter().collect(), default: Label::Hi }
    }

    /// Bottom of the lifted lattice: `Lo` everywhere.
    pub fn bottom() -> Self {
        LabelMap { entries: BTreeMap::new(), default: Label::Lo }
    }

    pub fn top() -> Self {
        LabelMap { entries: BTreeMap::new(), default: Label::Hi }
    }

    pub fn get(&self, k: &K) -> Label {
        self.entries.get(k).copied().unwrap_or(self.default)
    }

    pub fn set(&mut self, k: K, l: Label) {
        self.entries.insert(k, l);
    }

    fn keys_with<'a>(&'a self, other: &'a Self) -> BTreeSet<&'a K> {
        self.entries.keys().chain(other.entries.keys()).collect()
    }

    fn zip_with(&self, other: &Self, f: impl Fn(Label, Label) -> Label) -> Self {
        let entries = self
            .keys_with(other)
            .into_iter()
            .map(|k| (k.clone(), f(self.get(k), other.get(k))))
            .collect();
        LabelMap { entries, default: f(self.default, other.default) }
    }

    pub fn lub(&self, other: &Self) -> Self {
        self.zip_with(other, lub)
    }

    pub fn glb(&self, other: &Self) -> Self {
        self.zip_with(other, glb)
    }

    pub fn lle(&self, other: &Self) -> bool {
        lle(self.default, other.default)
            && self.keys_with(other).into_iter().all(|k| lle(self.get(k), other.get(k)))
    }

    /// Pointwise equality as functions (explicit entries equal to the default
    /// are irrelevant).
    pub fn same_function(&self, other: &Self) -> bool {
        self.default == other.default
            && self.keys_with(other).into_iter().all(|k| self.get(k) == other.get(k))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::*;

    #[test]
    fn two_point_tables() {
        assert_eq!(lub(Lo, Hi), Hi);
        assert_eq!(glb(Hi, Hi), Hi);
        assert!(lle(Lo, Hi));
        assert!(!lle(Hi, Lo));
    }

    #[test]
    fn lifted_join_respects_defaults() {
        let a = LabelMap::with_default_hi([("pub", Lo)]);
        let b = LabelMap::<&str>::bottom();
        let j = a.lub(&b);
        assert_eq!(j.get(&"pub"), Lo);
        assert_eq!(j.get(&"other"), Hi);
        let m = a.glb(&b);
        assert_eq!(m.get(&"other"), Lo);
        assert!(b.lle(&a));
        assert!(!a.lle(&b));
    }
}
