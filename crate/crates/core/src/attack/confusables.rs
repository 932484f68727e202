//! Homoglyph confusables: Latin letters and the Cyrillic/Greek codepoints
//! that render identically (or near-identically) in common fonts.
//!
//! The built-in table is a small, self-contained subset of the Unicode
//! confusables data covering the Latin <-> Cyrillic/Greek letterforms the
//! attacks draw from. A larger table can be ingested from the Unicode
//! `confusables.txt` format when available.

use std::collections::BTreeMap;

use once_cell::sync::Lazy;

/// Latin original -> visually confusable alternates.
const BUILTIN: &[(char, &[char])] = &[
    // lowercase
    ('a', &['\u{0430}', '\u{03B1}']), // Cyrillic а, Greek α
    ('c', &['\u{0441}']),             // Cyrillic с
    ('e', &['\u{0435}']),             // Cyrillic е
    ('h', &['\u{04BB}']),             // Cyrillic һ
    ('i', &['\u{0456}']),             // Cyrillic і
    ('j', &['\u{0458}']),             // Cyrillic ј
    ('o', &['\u{043E}', '\u{03BF}']), // Cyrillic о, Greek ο
    ('p', &['\u{0440}']),             // Cyrillic р
    ('s', &['\u{0455}']),             // Cyrillic ѕ
    ('u', &['\u{03C5}']),             // Greek υ
    ('v', &['\u{03BD}']),             // Greek ν
    ('w', &['\u{051D}']),             // Cyrillic ԝ
    ('x', &['\u{0445}']),             // Cyrillic х
    ('y', &['\u{0443}']),             // Cyrillic у
    // uppercase
    ('A', &['\u{0410}', '\u{0391}']), // Cyrillic А, Greek Α
    ('B', &['\u{0412}', '\u{0392}']), // Cyrillic В, Greek Β
    ('C', &['\u{0421}']),             // Cyrillic С
    ('E', &['\u{0415}', '\u{0395}']), // Cyrillic Е, Greek Ε
    ('H', &['\u{041D}', '\u{0397}']), // Cyrillic Н, Greek Η
    ('I', &['\u{0406}', '\u{0399}']), // Cyrillic І, Greek Ι
    ('J', &['\u{0408}']),             // Cyrillic Ј
    ('K', &['\u{041A}', '\u{039A}']), // Cyrillic К, Greek Κ
    ('M', &['\u{041C}', '\u{039C}']), // Cyrillic М, Greek Μ
    ('N', &['\u{039D}']),             // Greek Ν
    ('O', &['\u{041E}', '\u{039F}']), // Cyrillic О, Greek Ο
    ('P', &['\u{0420}', '\u{03A1}']), // Cyrillic Р, Greek Ρ
    ('S', &['\u{0405}']),             // Cyrillic Ѕ
    ('T', &['\u{0422}', '\u{03A4}']), // Cyrillic Т, Greek Τ
    ('X', &['\u{0425}', '\u{03A7}']), // Cyrillic Х, Greek Χ
    ('Y', &['\u{0423}', '\u{03A5}']), // Cyrillic У, Greek Υ
    ('Z', &['\u{0396}']),             // Greek Ζ
];

/// Bidirectional lookup over a confusables set.
#[derive(Debug, Clone)]
pub struct ConfusablesTable {
    alternates: BTreeMap<char, Vec<char>>,
    canonical: BTreeMap<char, char>,
}

impl ConfusablesTable {
    pub fn from_pairs(pairs: &[(char, &[char])]) -> Self {
        let mut alternates = BTreeMap::new();
        let mut canonical = BTreeMap::new();
        for &(original, alts) in pairs {
            alternates.insert(original, alts.to_vec());
            for &a in alts {
                canonical.insert(a, original);
            }
        }
        ConfusablesTable { alternates, canonical }
    }

    /// The shipped Latin <-> Cyrillic/Greek subset.
    pub fn builtin() -> &'static Self {
        static TABLE: Lazy<ConfusablesTable> = Lazy::new(|| ConfusablesTable::from_pairs(BUILTIN));
        &TABLE
    }

    /// Parse lines in the Unicode `confusables.txt` format
    /// (`XXXX ; YYYY ; MA # comment`), keeping single-codepoint mappings whose
    /// target is an ASCII letter.
    pub fn from_unicode_data(data: &str) -> Self {
        let mut pairs: BTreeMap<char, Vec<char>> = BTreeMap::new();
        for line in data.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split(';').map(str::trim);
            let (Some(src), Some(dst)) = (fields.next(), fields.next()) else { continue };
            let parse = |s: &str| -> Option<char> {
                let mut cps = s.split_whitespace();
                let cp = u32::from_str_radix(cps.next()?, 16).ok()?;
                if cps.next().is_some() {
                    return None; // multi-codepoint target
                }
                char::from_u32(cp)
            };
            if let (Some(s), Some(d)) = (parse(src), parse(dst)) {
                if d.is_ascii_alphabetic() && s != d {
                    pairs.entry(d).or_default().push(s);
                }
            }
        }
        let borrowed: Vec<(char, &[char])> =
            pairs.iter().map(|(&k, v)| (k, v.as_slice())).collect();
        ConfusablesTable::from_pairs(&borrowed)
    }

    /// Alternates for a Latin original (empty when the char has none).
    pub fn alternates(&self, c: char) -> &[char] {
        self.alternates.get(&c).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Canonical-class representative: alternates map back to their Latin
    /// original, everything else maps to itself.
    pub fn canonical(&self, c: char) -> char {
        *self.canonical.get(&c).unwrap_or(&c)
    }

    /// True when `replacement` belongs to `original`'s confusable class.
    pub fn is_confusable(&self, original: char, replacement: char) -> bool {
        self.alternates(original).contains(&replacement)
    }

    pub fn len(&self) -> usize {
        self.alternates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alternates.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_round_trip() {
        let t = ConfusablesTable::builtin();
        for (&orig, alts) in &t.alternates {
            for &a in alts {
                assert_eq!(t.canonical(a), orig);
                assert_ne!(a, orig);
            }
            assert_eq!(t.canonical(orig), orig);
        }
    }

    #[test]
    fn builtin_size_is_reasonable() {
        let t = ConfusablesTable::builtin();
        assert!(t.len() >= 30, "table has {} originals", t.len());
    }

    #[test]
    fn canonical_is_idempotent() {
        let t = ConfusablesTable::builtin();
        for c in "aceopxyABCEHKMOPTXYZ".chars() {
            for &a in t.alternates(c) {
                assert_eq!(t.canonical(t.canonical(a)), t.canonical(a));
            }
        }
    }

    #[test]
    fn parses_unicode_data_lines() {
        let data = "\
# comment
0430 ; 0061 ; MA # CYRILLIC SMALL A -> LATIN SMALL A
03B1 ; 0061 ; MA
0440 0441 ; 0070 ; MA # multi-codepoint source is skipped
";
        let t = ConfusablesTable::from_unicode_data(data);
        assert_eq!(t.alternates('a'), &['\u{0430}', '\u{03B1}']);
        assert_eq!(t.canonical('\u{0430}'), 'a');
    }
}
