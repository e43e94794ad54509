use super::ModelError;

/// A forest of object types rooted at the implicit `object` type.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TypeHierarchy {
    // declaration order is kept for serialization
    entries: Vec<(String, Option<String>)>,
}

impl TypeHierarchy {
    pub const ROOT: &'static str = "object";

    pub fn new() -> Self {
        TypeHierarchy::default()
    }

    /// Declares `name` with an optional parent. Redeclaring a type replaces
    /// its parent.
    pub fn declare(&mut self, name: impl Into<String>, parent: Option<String>) {
        let name = name.into();
        if let Some(entry) = self.entries.iter_mut().find(|(n, _)| *n == name) {
            entry.1 = parent;
        } else {
            self.entries.push((name, parent));
        }
    }

    pub fn contains(&self, name: &str) -> bool {
        name == Self::ROOT || self.entries.iter().any(|(n, _)| n == name)
    }

    pub fn parent(&self, name: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(n, _)| n == name)
            .and_then(|(_, p)| p.as_deref())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Option<&str>)> {
        self.entries.iter().map(|(n, p)| (n.as_str(), p.as_deref()))
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// True when `sub` equals `sup` or descends from it. Every type is a
    /// subtype of `object`.
    pub fn is_subtype(&self, sub: &str, sup: &str) -> bool {
        if sup == Self::ROOT || sub == sup {
            return true;
        }
        let mut cur = sub;
        // bounded walk; a validated hierarchy has no cycles
        for _ in 0..=self.entries.len() {
            match self.parent(cur) {
                Some(p) if p == sup => return true,
                Some(p) => cur = p,
                None => return false,
            }
        }
        false
    }

    /// Checks that every parent resolves and that there are no cycles.
    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, parent) in &self.entries {
            if name == Self::ROOT {
                continue;
            }
            if let Some(p) = parent {
                if !self.contains(p) {
                    return Err(ModelError::UnknownType(p.clone()));
                }
            }
            let mut cur = name.as_str();
            let mut steps = 0;
            while let Some(p) = self.parent(cur) {
                steps += 1;
                if p == name || steps > self.entries.len() {
                    return Err(ModelError::TypeCycle(name.clone()));
                }
                cur = p;
            }
        }
        Ok(())
    }
}
