use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// Cat breeds that appear among the ILSVRC classes.
pub const DEFAULT_CAT_BREEDS: [&str; 5] = [
    "tabby",
    "tiger cat",
    "Persian cat",
    "Siamese cat",
    "Egyptian cat",
];

/// One line of a synset mapping file: an id and its descriptions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynsetEntry {
    pub synset_id: String,
    pub names: Vec<String>,
}

/// Parses `<synset_id> <desc1>, <desc2>, ...` lines. Blank lines are skipped.
pub fn parse_synset_mapping(text: &str) -> Result<Vec<SynsetEntry>> {
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let (id, rest) = line
            .split_once(' ')
            .ok_or_else(|| Error::parse(i + 1, format!("missing description in '{line}'")))?;
        let names: Vec<String> = rest
            .split(',')
            .map(|n| n.trim().to_string())
            .filter(|n| !n.is_empty())
            .collect();
        if names.is_empty() {
            return Err(Error::parse(i + 1, format!("no descriptions for '{id}'")));
        }
        entries.push(SynsetEntry {
            synset_id: id.to_string(),
            names,
        });
    }
    Ok(entries)
}

/// Converts a dash separated name to lowerCamelCase.
///
/// The first token has its first letter lowercased, every later token its
/// first letter uppercased; the remaining characters are kept as written, so
/// the conversion is idempotent.
pub fn normalize_breed_name(dash_name: &str) -> Result<String> {
    let mut tokens = dash_name
        .split('-')
        .map(str::trim)
        .filter(|t| !t.is_empty());
    let first = tokens
        .next()
        .ok_or_else(|| Error::domain(format!("empty breed name '{dash_name}'")))?;
    let mut out = String::with_capacity(dash_name.len());
    push_with_first(&mut out, first, char::to_lowercase);
    for t in tokens {
        push_with_first(&mut out, t, char::to_uppercase);
    }
    Ok(out)
}

fn push_with_first<I: Iterator<Item = char>>(out: &mut String, token: &str, f: fn(char) -> I) {
    let mut chars = token.chars();
    if let Some(c) = chars.next() {
        out.extend(f(c));
        out.push_str(chars.as_str());
    }
}

/// Comparison key for breed names: the camel-cased form, lowercased.
///
/// Spaces and underscores count as word separators, so the description
/// "German shepherd" and the breed name "german-shepherd" share a key.
pub fn match_key(name: &str) -> Option<String> {
    normalize_breed_name(&name.replace([' ', '_'], "-"))
        .ok()
        .map(|s| s.to_lowercase())
}

/// Reads a one-name-per-line list; blank lines and `#` comments are ignored.
pub fn parse_name_list(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExclusionList {
    /// Dog breeds in dash separated form.
    pub dog_breed_names: Vec<String>,
    pub cat_breed_names: Vec<String>,
}

impl ExclusionList {
    pub fn new(dog_breed_names: Vec<String>, cat_breed_names: Vec<String>) -> Self {
        ExclusionList {
            dog_breed_names,
            cat_breed_names,
        }
    }

    /// The given dog breeds plus [`DEFAULT_CAT_BREEDS`].
    pub fn with_default_cats(dog_breed_names: Vec<String>) -> Self {
        ExclusionList {
            dog_breed_names,
            cat_breed_names: DEFAULT_CAT_BREEDS.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn empty() -> Self {
        ExclusionList::new(Vec::new(), Vec::new())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ExclusionOutcome {
    pub excluded: BTreeSet<String>,
    /// Exclusion names (as given) that matched no synset.
    pub unmatched: Vec<String>,
}

impl ExclusionOutcome {
    pub fn retained<'a>(&self, entries: &'a [SynsetEntry]) -> Vec<&'a SynsetEntry> {
        entries
            .iter()
            .filter(|e| !self.excluded.contains(&e.synset_id))
            .collect()
    }
}

/// Collects the ids of every synset that has a description equal (by
/// [`match_key`]) to a normalized dog breed or a cat breed name.
pub fn build_exclusion_set(
    entries: &[SynsetEntry],
    exclusions: &ExclusionList,
) -> Result<ExclusionOutcome> {
    let mut wanted = Vec::new();
    for dog in &exclusions.dog_breed_names {
        let key = normalize_breed_name(dog)?.to_lowercase();
        wanted.push((dog.as_str(), key));
    }
    for cat in &exclusions.cat_breed_names {
        let key =
            match_key(cat).ok_or_else(|| Error::domain(format!("empty cat breed name '{cat}'")))?;
        wanted.push((cat.as_str(), key));
    }

    let entry_keys: Vec<Vec<String>> = entries
        .iter()
        .map(|e| e.names.iter().filter_map(|n| match_key(n)).collect())
        .collect();

    let mut outcome = ExclusionOutcome::default();
    for (original, key) in &wanted {
        let mut matched = false;
        for (entry, keys) in entries.iter().zip(&entry_keys) {
            if keys.contains(key) {
                outcome.excluded.insert(entry.synset_id.clone());
                matched = true;
            }
        }
        if !matched {
            outcome.unmatched.push(original.to_string());
        }
    }
    if !outcome.unmatched.is_empty() {
        log::warn!(
            "{} exclusion name(s) matched no synset: {}",
            outcome.unmatched.len(),
            outcome.unmatched.join(", ")
        );
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_standard_first_line() {
        let e = parse_synset_mapping("n01440764 tench, Tinca tinca\n").unwrap();
        assert_eq!(
            e,
            vec![SynsetEntry {
                synset_id: "n01440764".into(),
                names: vec!["tench".into(), "Tinca tinca".into()],
            }]
        );
        assert!(parse_synset_mapping("").unwrap().is_empty());
    }

    #[test]
    fn parse_counts_lines_and_reports_line_numbers() {
        let text: String = (0..1000).map(|i| format!("n{i:08} thing {i}\n")).collect();
        assert_eq!(parse_synset_mapping(&text).unwrap().len(), 1000);
        let err = parse_synset_mapping("n1 a\n\nn2b\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn camel_case_examples() {
        assert_eq!(
            normalize_breed_name("german-shepherd").unwrap(),
            "germanShepherd"
        );
        assert_eq!(normalize_breed_name("beagle").unwrap(), "beagle");
        assert_eq!(
            normalize_breed_name("soft-coated-wheaten-terrier").unwrap(),
            "softCoatedWheatenTerrier"
        );
        assert_eq!(normalize_breed_name("Great-Dane").unwrap(), "greatDane");
        assert!(normalize_breed_name("").is_err());
        assert!(normalize_breed_name("--").is_err());
    }

    #[test]
    fn keys_bridge_dashes_and_spaces() {
        assert_eq!(match_key("German shepherd"), match_key("german-shepherd"));
        assert_ne!(match_key("catamaran"), match_key("cat"));
    }

    #[test]
    fn exclusion_small_cases() {
        let entries = parse_synset_mapping("n1 tabby\nn2 catamaran\n").unwrap();
        let out = build_exclusion_set(&entries, &ExclusionList::with_default_cats(vec![])).unwrap();
        assert_eq!(out.excluded.into_iter().collect::<Vec<_>>(), vec!["n1"]);
        assert_eq!(out.unmatched.len(), 4);

        let out = build_exclusion_set(&entries, &ExclusionList::empty()).unwrap();
        assert!(out.excluded.is_empty());
        assert!(out.unmatched.is_empty());
    }

    #[test]
    fn exclusion_matches_any_description() {
        let entries = parse_synset_mapping(
            "n02106662 German shepherd, German shepherd dog, alsatian\n\
             n02123045 tabby, tabby cat\n\
             n03000000 shepherd's pie\n",
        )
        .unwrap();
        let out = build_exclusion_set(
            &entries,
            &ExclusionList::with_default_cats(vec!["german-shepherd".into()]),
        )
        .unwrap();
        let ids: Vec<_> = out.excluded.iter().cloned().collect();
        assert_eq!(ids, vec!["n02106662", "n02123045"]);
        assert_eq!(out.retained(&entries).len(), 1);
    }

    #[test]
    fn default_cat_list_is_exact() {
        let list = ExclusionList::with_default_cats(vec![]);
        assert_eq!(
            list.cat_breed_names,
            vec![
                "tabby",
                "tiger cat",
                "Persian cat",
                "Siamese cat",
                "Egyptian cat"
            ]
        );
    }

    #[test]
    fn name_list_skips_comments() {
        let names = parse_name_list("# dogs\nbeagle\n\n  german-shepherd \n#x\n");
        assert_eq!(names, vec!["beagle", "german-shepherd"]);
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(tokens in proptest::collection::vec("[a-zA-Z][a-z0-9]{0,6}", 1..5)) {
            let once = normalize_breed_name(&tokens.join("-")).unwrap();
            prop_assert_eq!(normalize_breed_name(&once).unwrap(), once.clone());
            prop_assert!(!once.contains('-'));
        }
    }
}
