use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Name-keyed table of interchangeable strategies.
pub struct Registry<T: ?Sized> {
    kind: &'static str,
    entries: BTreeMap<String, Arc<T>>,
}

impl<T: ?Sized> Clone for Registry<T> {
    fn clone(&self) -> Self {
        Self { kind: self.kind, entries: self.entries.clone() }
    }
}

impl<T: ?Sized> Registry<T> {
    pub fn new(kind: &'static str) -> Self {
        Self { kind, entries: BTreeMap::new() }
    }

    /// Adds or replaces the entry for `name`.
    pub fn register(&mut self, name: &str, entry: Arc<T>) {
        self.entries.insert(name.to_ascii_lowercase(), entry);
    }

    pub fn get(&self, name: &str) -> Result<Arc<T>> {
        self.entries.get(&name.trim().to_ascii_lowercase()).cloned().ok_or_else(|| {
            Error::config(format!(
                "unknown {} {name:?}; available: {}",
                self.kind,
                self.names().join(", ")
            ))
        })
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(&name.trim().to_ascii_lowercase())
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.keys().map(String::as_str).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    trait Greeter: Send + Sync {
        fn greet(&self) -> String;
    }

    struct Hello;

    impl Greeter for Hello {
        fn greet(&self) -> String {
            "hello".into()
        }
    }

    #[test]
    fn case_insensitive_lookup() {
        let mut reg: Registry<dyn Greeter> = Registry::new("greeter");
        reg.register("Hello", Arc::new(Hello));
        assert_eq!(reg.get("HELLO").unwrap().greet(), "hello");
        assert!(reg.contains(" hello "));
        let err = reg.get("bye").err().unwrap().to_string();
        assert!(err.contains("available: hello"), "{err}");
    }
}
