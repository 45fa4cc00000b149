//! Versioned key-value registry holding a swarm's overlay configuration.
//! Last write wins; every put bumps the key's version.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KvError {
    #[error("registry keys must not be empty")]
    EmptyKey,
    #[error("key `{0}` has never been written")]
    KeyAbsent(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Versioned {
    pub value: String,
    pub version: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct KvRegistry {
    namespace: String,
    entries: BTreeMap<String, Versioned>,
}

impl KvRegistry {
    pub fn new(namespace: impl Into<String>) -> Self {
        Self {
            namespace: namespace.into(),
            entries: BTreeMap::new(),
        }
    }

    pub fn namespace(&self) -> &str {
        &self.namespace
    }

    /// Writes `value` and returns the key's new version (1 for a fresh key).
    pub fn put(&mut self, key: &str, value: impl Into<String>) -> Result<u64, KvError> {
        if key.is_empty() {
            return Err(KvError::EmptyKey);
        }
        let value = value.into();
        let entry = self
            .entries
            .entry(key.to_string())
            .and_modify(|e| e.version += 1)
            .or_insert(Versioned {
                value: String::new(),
                version: 1,
            });
        entry.value = value;
        Ok(entry.version)
    }

    pub fn get(&self, key: &str) -> Result<&str, KvError> {
        self.get_versioned(key).map(|v| v.value.as_str())
    }

    pub fn get_versioned(&self, key: &str) -> Result<&Versioned, KvError> {
        self.entries
            .get(key)
            .ok_or_else(|| KvError::KeyAbsent(key.to_string()))
    }

    pub fn keys_with_prefix<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.entries
            .range(prefix.to_string()..)
            .take_while(move |(k, _)| k.starts_with(prefix))
            .map(|(k, _)| k.as_str())
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
    use proptest::prelude::*;

    #[test]
    fn put_get_and_versions() {
        let mut kv = KvRegistry::new("swarm-1");
        assert_eq!(kv.put("overlay/subnet", "10.0.0.0/24"), Ok(1));
        assert_eq!(kv.get("overlay/subnet"), Ok("10.0.0.0/24"));
        assert_eq!(kv.put("overlay/subnet", "10.1.0.0/24"), Ok(2));
        let v = kv.get_versioned("overlay/subnet").unwrap();
        assert_eq!((v.value.as_str(), v.version), ("10.1.0.0/24", 2));
        assert_eq!(kv.get("nope"), Err(KvError::KeyAbsent("nope".into())));
        assert_eq!(kv.put("", "x"), Err(KvError::EmptyKey));
    }

    #[test]
    fn prefix_listing() {
        let mut kv = KvRegistry::new("s");
        for w in ["w1", "w2", "w3"] {
            kv.put(&format!("overlay/members/{w}"), "{}").unwrap();
        }
        kv.put("overlay/membersx", "no").unwrap();
        kv.put("overlay/subnet", "x").unwrap();
        assert_eq!(kv.keys_with_prefix("overlay/members/").count(), 3);
    }

    proptest! {
        #[test]
        fn read_your_writes(ops in proptest::collection::vec((0u8..4, any::<u16>()), 1..50)) {
            let mut kv = KvRegistry::new("s");
            let mut expected: BTreeMap<String, (String, u64)> = BTreeMap::new();
            for (k, v) in ops {
                let key = format!("k{k}");
                let version = kv.put(&key, v.to_string()).unwrap();
                let e = expected.entry(key.clone()).or_insert((String::new(), 0));
                prop_assert_eq!(version, e.1 + 1);
                *e = (v.to_string(), version);
                prop_assert_eq!(kv.get(&key).unwrap(), v.to_string());
            }
            for (k, (v, ver)) in expected {
                let got = kv.get_versioned(&k).unwrap();
                prop_assert_eq!(&got.value, &v);
                prop_assert_eq!(got.version, ver);
            }
        }
    }
}
