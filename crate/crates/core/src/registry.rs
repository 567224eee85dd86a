//! Name-keyed registries of strategy objects.
//!
//! Every swappable algorithm in the crate (component kernels, limit
//! metrics, time steppers, smooth potentials, acceptance criteria) sits
//! behind a trait and is registered here under a short name, so the CLI
//! and configuration files can pick variants at runtime.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A strategy that can be looked up by name.
pub trait Named {
    fn name(&self) -> &'static str;
}

/// Ordered map from names to shared strategy objects.
pub struct Registry<T: ?Sized> {
    kind: &'static str,
    entries: BTreeMap<&'static str, Arc<T>>,
}

impl<T: ?Sized + Named> Registry<T> {
    pub fn new(kind: &'static str) -> Self {
        Registry {
            kind,
            entries: BTreeMap::new(),
        }
    }

    /// Adds a strategy; a later registration under the same name replaces
    /// the earlier one.
    pub fn register(&mut self, item: Arc<T>) -> &mut Self {
        self.entries.insert(item.name(), item);
        self
    }

    pub fn get(&self, name: &str) -> Result<Arc<T>> {
        self.entries
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownStrategy {
                kind: self.kind,
                name: name.to_string(),
                known: self.names().join(", "),
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Arc<T>> {
        self.entries.values()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    trait Shape: Named {
        fn sides(&self) -> u32;
    }
    struct Tri;
    impl Named for Tri {
        fn name(&self) -> &'static str {
            "tri"
        }
    }
    impl Shape for Tri {
        fn sides(&self) -> u32 {
            3
        }
    }

    #[test]
    fn lookup_and_unknown_name() {
        let mut r: Registry<dyn Shape> = Registry::new("shape");
        r.register(Arc::new(Tri));
        assert_eq!(r.get("tri").unwrap().sides(), 3);
        match r.get("square") {
            Err(Error::UnknownStrategy { known, .. }) => assert_eq!(known, "tri"),
            _ => panic!("expected UnknownStrategy"),
        }
    }
}
