#![allow(dead_code)]

use std::path::Path;

use auxlearn::curation::DEFAULT_CAT_BREEDS;

/// A 1000-line synset mapping with 120 dog breeds and the five cat breeds,
/// and the matching dog list.
pub fn synset_fixture() -> (String, String) {
    let mut lines = vec![
        "German shepherd, German shepherd dog, German police dog, alsatian".to_string(),
        "Shih-Tzu".to_string(),
        "soft-coated wheaten terrier".to_string(),
    ];
    let mut dogs = vec![
        "german-shepherd".to_string(),
        "shih-tzu".to_string(),
        "soft-coated-wheaten-terrier".to_string(),
    ];
    for i in dogs.len()..120 {
        dogs.push(format!("hound-variant-{i}"));
        lines.push(format!("Hound variant {i}"));
    }
    lines.extend(DEFAULT_CAT_BREEDS.iter().map(|c| c.to_string()));
    lines.push("catamaran".into());
    lines.push("tiger, Panthera tigris".into());
    while lines.len() < 1000 {
        lines.push(format!("object {}", lines.len()));
    }
    let mapping = lines
        .iter()
        .enumerate()
        .map(|(i, d)| format!("n{:08} {d}\n", 2_000_000 + i))
        .collect();
    let dog_list = format!("# dog breeds\n{}\n", dogs.join("\n"));
    (mapping, dog_list)
}

pub fn write(dir: &Path, name: &str, contents: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}
