//! The three-level audience chain `Private < Friends < Public`, drift
//! classification between an original and a recalled scope, and mapping of
//! foreign audience labels onto the chain with narrow-first fallback.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Canonical audience scope. Variant order is the lattice order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AudienceScope {
    Private,
    Friends,
    Public,
}

impl AudienceScope {
    pub const ALL: [AudienceScope; 3] = [
        AudienceScope::Private,
        AudienceScope::Friends,
        AudienceScope::Public,
    ];

    /// Number of steps above `Private`.
    pub fn width(self) -> u32 {
        match self {
            AudienceScope::Private => 0,
            AudienceScope::Friends => 1,
            AudienceScope::Public => 2,
        }
    }

    pub fn from_width(width: u32) -> Option<Self> {
        Self::ALL.get(width as usize).copied()
    }

    /// One step broader, or `None` at `Public`.
    pub fn widen(self) -> Option<Self> {
        Self::from_width(self.width() + 1)
    }

    /// One step narrower, or `None` at `Private`.
    pub fn narrow(self) -> Option<Self> {
        self.width().checked_sub(1).and_then(Self::from_width)
    }

    pub fn step_distance(self, other: AudienceScope) -> u32 {
        self.width().abs_diff(other.width())
    }

    pub fn name(self) -> &'static str {
        match self {
            AudienceScope::Private => "Private",
            AudienceScope::Friends => "Friends",
            AudienceScope::Public => "Public",
        }
    }
}

impl fmt::Display for AudienceScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AudienceScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "private" => Ok(AudienceScope::Private),
            "friends" => Ok(AudienceScope::Friends),
            "public" => Ok(AudienceScope::Public),
            other => Err(Error::parameter(
                "scope",
                format!("unknown audience scope {other:?} (expected Private, Friends or Public)"),
            )),
        }
    }
}

/// Position of one scope relative to another.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScopeOrdering {
    Narrower,
    Equal,
    Broader,
}

impl ScopeOrdering {
    pub fn reverse(self) -> Self {
        match self {
            ScopeOrdering::Narrower => ScopeOrdering::Broader,
            ScopeOrdering::Equal => ScopeOrdering::Equal,
            ScopeOrdering::Broader => ScopeOrdering::Narrower,
        }
    }
}

/// Orders `a` relative to `b`.
pub fn compare_scopes(a: AudienceScope, b: AudienceScope) -> ScopeOrdering {
    match a.width().cmp(&b.width()) {
        Ordering::Less => ScopeOrdering::Narrower,
        Ordering::Equal => ScopeOrdering::Equal,
        Ordering::Greater => ScopeOrdering::Broader,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DriftKind {
    Correct,
    Overexposure,
    Underexposure,
}

impl DriftKind {
    pub fn mirrored(self) -> Self {
        match self {
            DriftKind::Correct => DriftKind::Correct,
            DriftKind::Overexposure => DriftKind::Underexposure,
            DriftKind::Underexposure => DriftKind::Overexposure,
        }
    }
}

/// Direction and size of a recall error. `steps == 0` iff `kind == Correct`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DriftOutcome {
    pub kind: DriftKind,
    pub steps: u32,
}

/// Classifies the recalled (outgoing) scope against the original one.
pub fn classify_drift(original: AudienceScope, recalled: AudienceScope) -> DriftOutcome {
    let steps = original.step_distance(recalled);
    let kind = match compare_scopes(recalled, original) {
        ScopeOrdering::Equal => DriftKind::Correct,
        ScopeOrdering::Broader => DriftKind::Overexposure,
        ScopeOrdering::Narrower => DriftKind::Underexposure,
    };
    DriftOutcome { kind, steps }
}

/// How a foreign label resolves onto the canonical chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MappingEntry {
    Exact(AudienceScope),
    /// Candidates, sorted narrowest-first and deduplicated.
    Ambiguous(Vec<AudienceScope>),
}

/// Degradation attached to a mapped scope.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MappingFlag {
    Exact,
    Ambiguous,
    MissingProvenance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MappedScope {
    pub scope: AudienceScope,
    pub flag: MappingFlag,
}

/// A foreign audience vocabulary with its lossy mapping onto the chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AudienceOntology {
    name: String,
    scopes: Vec<String>,
    mapping: BTreeMap<String, MappingEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OntologyFile {
    name: String,
    scopes: Vec<String>,
    #[serde(default)]
    mapping: BTreeMap<String, EntryFile>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryFile {
    target: Option<AudienceScope>,
    candidates: Option<Vec<AudienceScope>>,
}

impl AudienceOntology {
    pub fn new(
        name: impl Into<String>,
        scopes: Vec<String>,
        entries: impl IntoIterator<Item = (String, MappingEntry)>,
    ) -> Result<Self> {
        let name = name.into();
        if name.is_empty() {
            return Err(Error::config("name", "ontology name must be non-empty"));
        }
        let mut mapping = BTreeMap::new();
        for (label, entry) in entries {
            let entry = match entry {
                MappingEntry::Exact(s) => MappingEntry::Exact(s),
                MappingEntry::Ambiguous(mut c) => {
                    if c.is_empty() {
                        return Err(Error::config(
                            format!("mapping.{label}.candidates"),
                            "ambiguous entry needs at least one candidate",
                        ));
                    }
                    c.sort();
                    c.dedup();
                    MappingEntry::Ambiguous(c)
                }
            };
            if mapping.insert(label.clone(), entry).is_some() {
                return Err(Error::config(
                    format!("mapping.{label}"),
                    "foreign scope mapped more than once",
                ));
            }
        }
        Ok(AudienceOntology {
            name,
            scopes,
            mapping,
        })
    }

    pub fn from_json_str(text: &str, source_name: &str) -> Result<Self> {
        let file: OntologyFile =
            serde_json::from_str(text).map_err(|e| Error::from_json(source_name, &e))?;
        let mut entries = Vec::with_capacity(file.mapping.len());
        for (label, e) in file.mapping {
            let entry = match (e.target, e.candidates) {
                (Some(t), None) => MappingEntry::Exact(t),
                (None, Some(c)) => MappingEntry::Ambiguous(c),
                _ => {
                    return Err(Error::config(
                        format!("mapping.{label}"),
                        "entry must have exactly one of `target` or `candidates`",
                    ))
                }
            };
            entries.push((label, entry));
        }
        Self::new(file.name, file.scopes, entries)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text, &path.display().to_string())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn scopes(&self) -> &[String] {
        &self.scopes
    }

    pub fn entry(&self, label: &str) -> Option<&MappingEntry> {
        self.mapping.get(label)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &MappingEntry)> {
        self.mapping.iter().map(|(k, v)| (k.as_str(), v))
    }
}

/// Maps a foreign label onto the chain. Total: unknown labels fall back to
/// `Private`, ambiguous ones to their narrowest candidate.
pub fn map_scope(foreign: &str, ontology: &AudienceOntology) -> MappedScope {
    match ontology.entry(foreign) {
        Some(MappingEntry::Exact(scope)) => MappedScope {
            scope: *scope,
            flag: MappingFlag::Exact,
        },
        Some(MappingEntry::Ambiguous(candidates)) => MappedScope {
            scope: candidates
                .iter()
                .copied()
                .min()
                .unwrap_or(AudienceScope::Private),
            flag: MappingFlag::Ambiguous,
        },
        None => MappedScope {
            scope: AudienceScope::Private,
            flag: MappingFlag::MissingProvenance,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use AudienceScope::*;

    #[test]
    fn compare_examples() {
        assert_eq!(compare_scopes(Private, Friends), ScopeOrdering::Narrower);
        assert_eq!(compare_scopes(Friends, Friends), ScopeOrdering::Equal);
        assert_eq!(compare_scopes(Public, Private), ScopeOrdering::Broader);
    }

    #[test]
    fn compare_is_total_and_matches_width() {
        for a in AudienceScope::ALL {
            for b in AudienceScope::ALL {
                let expected = match a.width().cmp(&b.width()) {
                    Ordering::Less => ScopeOrdering::Narrower,
                    Ordering::Equal => ScopeOrdering::Equal,
                    Ordering::Greater => ScopeOrdering::Broader,
                };
                assert_eq!(compare_scopes(a, b), expected);
                assert_eq!(compare_scopes(b, a), expected.reverse());
                assert_eq!(compare_scopes(a, b), compare_scopes(a, b));
                for c in AudienceScope::ALL {
                    if compare_scopes(a, b) == ScopeOrdering::Narrower
                        && compare_scopes(b, c) == ScopeOrdering::Narrower
                    {
                        assert_eq!(compare_scopes(a, c), ScopeOrdering::Narrower);
                    }
                }
            }
        }
    }

    #[test]
    fn drift_examples() {
        assert_eq!(
            classify_drift(Friends, Public),
            DriftOutcome { kind: DriftKind::Overexposure, steps: 1 }
        );
        assert_eq!(
            classify_drift(Public, Public),
            DriftOutcome { kind: DriftKind::Correct, steps: 0 }
        );
        assert_eq!(
            classify_drift(Public, Private),
            DriftOutcome { kind: DriftKind::Underexposure, steps: 2 }
        );
    }

    #[test]
    fn drift_is_mirror_symmetric() {
        for a in AudienceScope::ALL {
            for b in AudienceScope::ALL {
                let ab = classify_drift(a, b);
                let ba = classify_drift(b, a);
                assert_eq!(ab.steps, ba.steps);
                assert_eq!(ab.kind, ba.kind.mirrored());
                assert_eq!(ab.kind == DriftKind::Correct, ab.steps == 0);
            }
        }
    }

    #[test]
    fn widen_and_narrow_stay_on_chain() {
        assert_eq!(Private.widen(), Some(Friends));
        assert_eq!(Public.widen(), None);
        assert_eq!(Private.narrow(), None);
        assert_eq!(Public.narrow(), Some(Friends));
    }

    #[test]
    fn scope_parse_is_case_insensitive() {
        assert_eq!("public".parse::<AudienceScope>().unwrap(), Public);
        assert!("everyone".parse::<AudienceScope>().is_err());
    }

    fn ontology() -> AudienceOntology {
        AudienceOntology::new(
            "test",
            vec!["followers".into(), "close".into(), "mixed".into()],
            vec![
                ("followers".to_string(), MappingEntry::Exact(Friends)),
                ("mixed".to_string(), MappingEntry::Ambiguous(vec![Public, Friends])),
            ],
        )
        .unwrap()
    }

    #[test]
    fn map_scope_examples() {
        let o = ontology();
        assert_eq!(
            map_scope("followers", &o),
            MappedScope { scope: Friends, flag: MappingFlag::Exact }
        );
        assert_eq!(
            map_scope("circle-7", &o),
            MappedScope { scope: Private, flag: MappingFlag::MissingProvenance }
        );
        assert_eq!(
            map_scope("mixed", &o),
            MappedScope { scope: Friends, flag: MappingFlag::Ambiguous }
        );
    }

    #[test]
    fn ambiguous_candidates_are_sorted_narrowest_first() {
        match ontology().entry("mixed") {
            Some(MappingEntry::Ambiguous(c)) => assert_eq!(c, &vec![Friends, Public]),
            other => panic!("unexpected entry {other:?}"),
        }
    }

    #[test]
    fn empty_candidate_set_is_rejected() {
        let err = AudienceOntology::new(
            "bad",
            vec![],
            vec![("x".to_string(), MappingEntry::Ambiguous(vec![]))],
        )
        .unwrap_err();
        assert!(matches!(err, Error::Config { .. }));
    }

    #[test]
    fn duplicate_label_is_rejected() {
        let err = AudienceOntology::new(
            "bad",
            vec![],
            vec![
                ("x".to_string(), MappingEntry::Exact(Friends)),
                ("x".to_string(), MappingEntry::Exact(Public)),
            ],
        )
        .unwrap_err();
        assert!(matches!(err, Error::Config { .. }));
    }

    #[test]
    fn json_entry_needs_exactly_one_form() {
        let text = r#"{"name":"o","scopes":["a"],"mapping":{"a":{"target":"Friends","candidates":["Public"]}}}"#;
        assert!(AudienceOntology::from_json_str(text, "inline").is_err());
        let text = r#"{"name":"o","scopes":["a"],"mapping":{"a":{"candidates":["Public","Private"]}}}"#;
        let o = AudienceOntology::from_json_str(text, "inline").unwrap();
        assert_eq!(map_scope("a", &o).scope, Private);
    }
}
