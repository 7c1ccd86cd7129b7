use alloc::collections::BTreeMap;
use alloc::string::String;

use serde::{Deserialize, Serialize};

use crate::counts::ItemCounts;

/// Item counts in acquisition order, plus the most ever held of each item.
///
/// An item that drops to zero leaves the list; getting it again puts it at
/// the end.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Inventory {
    counts: ItemCounts,
    high_water: BTreeMap<String, u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot remove {need} {item}: only {have} held")]
pub struct Shortfall {
    pub item: String,
    pub need: u32,
    pub have: u32,
}

impl Inventory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_counts(counts: &ItemCounts) -> Self {
        let mut inv = Self::new();
        for (k, v) in counts.iter() {
            inv.add(k, v);
        }
        inv
    }

    pub fn get(&self, item: &str) -> u32 {
        self.counts.get(item)
    }

    pub fn has(&self, item: &str) -> bool {
        self.get(item) > 0
    }

    pub fn add(&mut self, item: &str, n: u32) {
        if n == 0 {
            return;
        }
        self.counts.add(item, n);
        let now = self.counts.get(item);
        let hw = self.high_water.entry(String::from(item)).or_insert(0);
        *hw = (*hw).max(now);
    }

    pub fn remove(&mut self, item: &str, n: u32) -> Result<(), Shortfall> {
        let have = self.get(item);
        if have < n {
            return Err(Shortfall {
                item: String::from(item),
                need: n,
                have,
            });
        }
        if have == n {
            self.counts.remove(item);
        } else {
            self.counts.set(item, have - n);
        }
        Ok(())
    }

    pub fn high_water(&self, item: &str) -> u32 {
        self.high_water.get(item).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &ItemCounts {
        &self.counts
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u32)> + '_ {
        self.counts.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    #[test]
    fn zeroed_items_leave_and_rejoin_at_end() {
        let mut inv = Inventory::new();
        inv.add("dirt", 5);
        inv.add("planks", 4);
        inv.remove("dirt", 5).unwrap();
        inv.add("dirt", 20);
        let order: Vec<&str> = inv.iter().map(|(k, _)| k).collect();
        assert_eq!(order, ["planks", "dirt"]);
        assert_eq!(inv.high_water("dirt"), 20);
        assert!(inv.remove("planks", 5).is_err());
        assert_eq!(inv.get("planks"), 4);
    }
}
