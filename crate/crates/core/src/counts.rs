//! Insertion-ordered item → count map.
//!
//! Plans, recipes and goal calls all carry small dictionaries of item counts.
//! Source order matters for rendering (`{'planks':3, 'stick':2}`), so this is a
//! vector-backed map rather than a `BTreeMap`.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct ItemCounts {
    entries: Vec<(String, u32)>,
}

impl ItemCounts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn single(item: impl Into<String>, count: u32) -> Self {
        let mut c = Self::new();
        c.set(item, count);
        c
    }

    pub fn get(&self, item: &str) -> u32 {
        self.entries
            .iter()
            .find(|(k, _)| k == item)
            .map(|(_, v)| *v)
            .unwrap_or(0)
    }

    pub fn contains(&self, item: &str) -> bool {
        self.entries.iter().any(|(k, _)| k == item)
    }

    /// Sets `item` to `count`, keeping its position if already present.
    pub fn set(&mut self, item: impl Into<String>, count: u32) {
        let item = item.into();
        match self.entries.iter_mut().find(|(k, _)| *k == item) {
            Some(slot) => slot.1 = count,
            None => self.entries.push((item, count)),
        }
    }

    pub fn add(&mut self, item: &str, count: u32) {
        match self.entries.iter_mut().find(|(k, _)| k == item) {
            Some(slot) => slot.1 += count,
            None => self.entries.push((String::from(item), count)),
        }
    }

    pub fn remove(&mut self, item: &str) -> Option<u32> {
        let pos = self.entries.iter().position(|(k, _)| k == item)?;
        Some(self.entries.remove(pos).1)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u32)> + '_ {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> + '_ {
        self.entries.iter().map(|(k, _)| k.as_str())
    }

    /// First entry, used as the "primary" item of a goal or recipe.
    pub fn first(&self) -> Option<(&str, u32)> {
        self.entries.first().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.entries.iter().map(|(_, v)| u64::from(*v)).sum()
    }

    /// Every count multiplied by `factor`.
    pub fn scaled(&self, factor: u32) -> Self {
        Self {
            entries: self
                .entries
                .iter()
                .map(|(k, v)| (k.clone(), v * factor))
                .collect(),
        }
    }
}

impl<K: Into<String>> FromIterator<(K, u32)> for ItemCounts {
    fn from_iter<I: IntoIterator<Item = (K, u32)>>(iter: I) -> Self {
        let mut c = Self::new();
        for (k, v) in iter {
            c.set(k, v);
        }
        c
    }
}

impl Serialize for ItemCounts {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.entries.len()))?;
        for (k, v) in &self.entries {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for ItemCounts {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct CountsVisitor;

        impl<'de> Visitor<'de> for CountsVisitor {
            type Value = ItemCounts;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a map of item ids to counts")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<ItemCounts, A::Error> {
                let mut counts = ItemCounts::new();
                while let Some((k, v)) = access.next_entry::<String, u32>()? {
                    counts.set(k, v);
                }
                Ok(counts)
            }
        }

        deserializer.deserialize_map(CountsVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keeps_insertion_order_and_positions() {
        let mut c = ItemCounts::new();
        c.set("planks", 3);
        c.set("stick", 2);
        c.set("planks", 5);
        let keys: Vec<&str> = c.keys().collect();
        assert_eq!(keys, ["planks", "stick"]);
        assert_eq!(c.get("planks"), 5);
        assert_eq!(c.get("log"), 0);
    }

    #[test]
    fn json_objects_keep_order() {
        let c: ItemCounts = serde_json::from_str(r#"{"stick":1,"cobblestone":2}"#).unwrap();
        assert_eq!(c.first(), Some(("stick", 1)));
        assert_eq!(serde_json::to_string(&c).unwrap(), r#"{"stick":1,"cobblestone":2}"#);
    }
}
