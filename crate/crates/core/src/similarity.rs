//! Character-trigram cosine similarity.
//!
//! Text is lowercased, runs of non-alphanumeric characters collapse to one
//! space, and the result is padded with a space on each side before trigrams
//! are counted. Exact comparisons go through integer cross-multiplication so
//! ties are detected exactly rather than through float noise.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

pub fn normalize(text: &str) -> String {
    let mut out = String::from(" ");
    let mut pending_space = false;
    for ch in text.chars().flat_map(char::to_lowercase) {
        if ch.is_alphanumeric() {
            if pending_space && out.len() > 1 {
                out.push(' ');
            }
            pending_space = false;
            out.push(ch);
        } else {
            pending_space = true;
        }
    }
    out.push(' ');
    out
}

/// Trigram bag of a string.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trigrams {
    counts: BTreeMap<[char; 3], u64>,
    norm_sq: u64,
}

impl Trigrams {
    pub fn of(text: &str) -> Self {
        let chars: Vec<char> = normalize(text).chars().collect();
        let mut counts = BTreeMap::new();
        for w in chars.windows(3) {
            *counts.entry([w[0], w[1], w[2]]).or_insert(0u64) += 1;
        }
        let norm_sq = counts.values().map(|c| c * c).sum();
        Self { counts, norm_sq }
    }

    pub fn dot(&self, other: &Self) -> u64 {
        let (small, large) = if self.counts.len() <= other.counts.len() {
            (self, other)
        } else {
            (other, self)
        };
        small
            .counts
            .iter()
            .map(|(k, v)| v * large.counts.get(k).copied().unwrap_or(0))
            .sum()
    }

    pub fn cosine(&self, other: &Self) -> f64 {
        if self.norm_sq == 0 || other.norm_sq == 0 {
            return 0.0;
        }
        self.dot(other) as f64 / libm::sqrt(self.norm_sq as f64 * other.norm_sq as f64)
    }
}

pub fn cosine(a: &str, b: &str) -> f64 {
    Trigrams::of(a).cosine(&Trigrams::of(b))
}

/// Compares `cos(q, a)` against `cos(q, b)` exactly.
///
/// Both share the query norm, so the comparison reduces to
/// `dot_a² · |b|²` versus `dot_b² · |a|²`.
pub fn compare_against(query: &Trigrams, a: &Trigrams, b: &Trigrams) -> Ordering {
    let da = u128::from(query.dot(a));
    let db = u128::from(query.dot(b));
    let lhs = da * da * u128::from(b.norm_sq.max(1));
    let rhs = db * db * u128::from(a.norm_sq.max(1));
    lhs.cmp(&rhs)
}

/// Index and score of the best match, lowest index winning exact ties.
pub fn best_match<'a, I>(query: &str, candidates: I) -> Option<(usize, f64)>
where
    I: IntoIterator<Item = &'a str>,
{
    let q = Trigrams::of(query);
    let mut best: Option<(usize, Trigrams)> = None;
    for (i, text) in candidates.into_iter().enumerate() {
        let t = Trigrams::of(text);
        let better = match &best {
            None => true,
            Some((_, cur)) => compare_against(&q, &t, cur) == Ordering::Greater,
        };
        if better {
            best = Some((i, t));
        }
    }
    best.map(|(i, t)| (i, q.cosine(&t)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_collapses_punctuation() {
        assert_eq!(normalize("Mine 1 oak-wood!!"), " mine 1 oak wood ");
        assert_eq!(normalize("   "), "  ");
    }

    #[test]
    fn identical_strings_score_one() {
        let c = cosine("kill a sheep", "Kill a SHEEP");
        assert!((c - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_tie_goes_to_lowest_index() {
        // These two descriptions tie exactly against this query.
        let (i, _) = best_match("chop a tree for wood", ["Mine 1 oak wood", "Mine birch wood"]).unwrap();
        assert_eq!(i, 0);
        let q = Trigrams::of("chop a tree for wood");
        let a = Trigrams::of("Mine 1 oak wood");
        let b = Trigrams::of("Mine birch wood");
        assert_eq!(compare_against(&q, &a, &b), Ordering::Equal);
    }
}
