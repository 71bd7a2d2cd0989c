//! Parsers for the constrained response formats the pipeline prompts ask for.

use std::collections::BTreeSet;
use std::sync::LazyLock;

use regex::Regex;
use thiserror::Error;

use crate::graph::Polarity;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("no enumerated line found in the response")]
    EmptyList,
    #[error("unparseable response: {0}")]
    Unparseable(String),
}

static ENUMERATED: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\s*(\d+)\s*[.):]\s*(\S.*?)\s*$").unwrap());
static LABEL: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b\d+'*").unwrap());
static RELATION: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?i)\b(\d+'*)[\s:.)\-=>]*\(?(partial(?:ly)?[\s_-]*attack(?:s|ing)?|supports?|supporting|attacks?|attacking)\b",
    )
    .unwrap()
});

/// Content of every `<n>. text` line (also `<n>)` and `<n>:`), in listed order.
pub fn parse_enumerated_components(text: &str) -> Result<Vec<String>, ParseError> {
    let items: Vec<String> =
        text.lines().filter_map(|line| ENUMERATED.captures(line)).map(|c| c[2].to_owned()).collect();
    if items.is_empty() {
        Err(ParseError::EmptyList)
    } else {
        Ok(items)
    }
}

/// True for the explicit "nothing" answers: `0`, `none` and trivial variants.
pub fn is_none_answer(text: &str) -> bool {
    is_nothing(text)
}

fn is_nothing(text: &str) -> bool {
    let t = text.trim().trim_end_matches('.').trim().to_ascii_lowercase();
    matches!(t.as_str(), "0" | "none" | "no" | "n/a")
}

fn mentions_zero(text: &str) -> bool {
    LABEL.find_iter(text).any(|m| m.as_str() == "0")
}

/// Labels (`6`, `6'`) mentioned in the response that are in `valid`, first
/// occurrence order, without duplicates. A bare `0` means "none".
pub fn parse_id_list(text: &str, valid: &BTreeSet<String>) -> Result<Vec<String>, ParseError> {
    if is_nothing(text) {
        return Ok(Vec::new());
    }
    let mut seen = BTreeSet::new();
    let ids: Vec<String> = LABEL
        .find_iter(text)
        .map(|m| m.as_str().to_owned())
        .filter(|l| valid.contains(l) && seen.insert(l.clone()))
        .collect();
    if ids.is_empty() && !mentions_zero(text) {
        return Err(ParseError::Unparseable(text.trim().to_owned()));
    }
    Ok(ids)
}

/// Labels per line, one group per non-empty line. Lines without labels are
/// skipped and `0` is never a label. A bare "nothing" answer gives no groups.
pub fn parse_label_groups(text: &str) -> Result<Vec<Vec<String>>, ParseError> {
    if is_nothing(text) {
        return Ok(Vec::new());
    }
    let mut groups = Vec::new();
    for line in text.lines() {
        let mut seen = BTreeSet::new();
        let group: Vec<String> = LABEL
            .find_iter(line)
            .map(|m| m.as_str().to_owned())
            .filter(|l| l != "0" && seen.insert(l.clone()))
            .collect();
        if !group.is_empty() {
            groups.push(group);
        }
    }
    if groups.is_empty() && !mentions_zero(text) {
        return Err(ParseError::Unparseable(text.trim().to_owned()));
    }
    Ok(groups)
}

/// `<label> support|attack|partial attack` pairs, one or more per line.
/// Labels outside `valid` are dropped; the first tag given for a label wins.
pub fn parse_relations(text: &str, valid: &BTreeSet<String>) -> Result<Vec<(String, Polarity)>, ParseError> {
    if is_nothing(text) {
        return Ok(Vec::new());
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let mut matched_any = false;
    for cap in RELATION.captures_iter(text) {
        matched_any = true;
        let label = cap[1].to_owned();
        let tag = cap[2].to_ascii_lowercase();
        let polarity = if tag.starts_with("partial") {
            Polarity::PartialAttack
        } else if tag.starts_with("attack") {
            Polarity::Attack
        } else {
            Polarity::Support
        };
        if valid.contains(&label) && seen.insert(label.clone()) {
            out.push((label, polarity));
        }
    }
    if !matched_any && !mentions_zero(text) {
        return Err(ParseError::Unparseable(text.trim().to_owned()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labels(ids: &[&str]) -> BTreeSet<String> {
        ids.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn enumerated_examples() {
        assert_eq!(parse_enumerated_components("1. A\n2. B").unwrap(), ["A", "B"]);
        assert_eq!(parse_enumerated_components("intro text\n1) A\n\n3: C").unwrap(), ["A", "C"]);
        assert_eq!(parse_enumerated_components("no numbers here"), Err(ParseError::EmptyList));
        assert_eq!(parse_enumerated_components("   7.   padded   ").unwrap(), ["padded"]);
    }

    #[test]
    fn id_list_examples() {
        let v = labels(&["1", "2", "3"]);
        assert_eq!(parse_id_list("0", &v).unwrap(), Vec::<String>::new());
        assert_eq!(parse_id_list("Components 2 and 3 support it", &v).unwrap(), ["2", "3"]);
        assert!(matches!(parse_id_list("banana", &labels(&["1", "2"])), Err(ParseError::Unparseable(_))));
        assert_eq!(parse_id_list("3, 1, 3", &v).unwrap(), ["3", "1"]);
        assert_eq!(parse_id_list("12", &v), Err(ParseError::Unparseable("12".into())));
        assert_eq!(parse_id_list("6' and 6", &labels(&["6'"])).unwrap(), ["6'"]);
        assert_eq!(parse_id_list("None.", &v).unwrap(), Vec::<String>::new());
    }

    #[test]
    fn relation_examples() {
        let v = labels(&["2", "3", "4", "5"]);
        assert_eq!(
            parse_relations("2 support\n3: attack\n- 5 partial attack", &v).unwrap(),
            vec![
                ("2".into(), Polarity::Support),
                ("3".into(), Polarity::Attack),
                ("5".into(), Polarity::PartialAttack)
            ]
        );
        assert_eq!(
            parse_relations("6 support, 4 attack", &labels(&["4", "6"])).unwrap(),
            vec![("6".into(), Polarity::Support), ("4".into(), Polarity::Attack)]
        );
        assert_eq!(parse_relations("0", &v).unwrap(), vec![]);
        assert_eq!(parse_relations("9 supports", &v).unwrap(), vec![]);
        assert!(parse_relations("nothing relevant", &v).is_err());
    }

    #[test]
    fn label_group_examples() {
        assert_eq!(parse_label_groups("2, 3\n5").unwrap(), vec![vec!["2", "3"], vec!["5"]]);
        assert_eq!(parse_label_groups("0").unwrap(), Vec::<Vec<String>>::new());
        assert_eq!(parse_label_groups("Group: 1 and 2\n\nnothing else").unwrap(), vec![vec!["1", "2"]]);
        assert!(parse_label_groups("no groups").is_err());
    }

    proptest! {
        #[test]
        fn id_list_is_subset_of_valid(text in "[0-9' a-z,]{0,40}", ids in proptest::collection::btree_set("[0-9]{1,2}'?", 0..6)) {
            if let Ok(out) = parse_id_list(&text, &ids) {
                let unique: BTreeSet<_> = out.iter().cloned().collect();
                prop_assert_eq!(unique.len(), out.len());
                prop_assert!(out.iter().all(|l| ids.contains(l)));
            }
        }
    }
}
