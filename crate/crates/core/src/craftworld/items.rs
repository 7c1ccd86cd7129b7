use alloc::format;
use alloc::string::String;

use serde::{Deserialize, Serialize};

/// Tool quality gate. Ordering is the quality order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToolTier {
    #[default]
    None,
    Wooden,
    Stone,
    Iron,
}

impl ToolTier {
    pub fn prefix(self) -> Option<&'static str> {
        match self {
            ToolTier::None => None,
            ToolTier::Wooden => Some("wooden"),
            ToolTier::Stone => Some("stone"),
            ToolTier::Iron => Some("iron"),
        }
    }

    pub fn below(self) -> ToolTier {
        match self {
            ToolTier::None | ToolTier::Wooden => ToolTier::None,
            ToolTier::Stone => ToolTier::Wooden,
            ToolTier::Iron => ToolTier::Stone,
        }
    }
}

const FAMILIES: [&str; 6] = ["pickaxe", "axe", "sword", "shovel", "hoe", "shears"];

/// `stone_pickaxe` → `pickaxe`, `shears` → `shears`.
pub fn tool_family(item: &str) -> Option<&str> {
    let family = item.rsplit('_').next()?;
    FAMILIES.contains(&family).then_some(family)
}

pub fn is_tool(item: &str) -> bool {
    tool_family(item).is_some()
}

/// Tier inferred from the material prefix. Diamond tools count as iron-or-better.
pub fn tool_tier(item: &str) -> ToolTier {
    if tool_family(item).is_none() {
        return ToolTier::None;
    }
    let material = item.split('_').next().unwrap_or("");
    match material {
        "wooden" | "golden" => ToolTier::Wooden,
        "stone" => ToolTier::Stone,
        "iron" | "diamond" | "netherite" => ToolTier::Iron,
        _ => ToolTier::None,
    }
}

pub fn canonical_tool(family: &str, tier: ToolTier) -> String {
    match tier.prefix() {
        Some(p) => format!("{p}_{family}"),
        None => String::from(family),
    }
}

pub fn canonical_pickaxe(tier: ToolTier) -> Option<String> {
    (tier > ToolTier::None).then(|| canonical_tool("pickaxe", tier))
}

/// Whether holding `declared` meets a requirement for `required`.
pub fn tool_satisfies(declared: &str, required: &str) -> bool {
    if declared == required {
        return true;
    }
    match (tool_family(declared), tool_family(required)) {
        (Some(a), Some(b)) if a == b => tool_tier(declared) >= tool_tier(required),
        _ => false,
    }
}
