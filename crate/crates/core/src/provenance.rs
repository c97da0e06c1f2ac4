//! Audience provenance sidecars, badge text, and scope-widening detection.
//!
//! A sidecar is a single JSON object stored next to the content as
//! `<entity_id>.prov.json`. It is a projection of a PROV-DM
//! Entity/Activity/Agent triple onto six fields:
//!
//! ```text
//! {"activity":"post","agent":"agentA","created_at":"2024-05","entity_id":"e1","scope":"Friends","sensitive":false}
//! ```
//!
//! Keys are written in sorted order, compact, UTF-8, with one trailing
//! newline, so identical records always produce identical bytes.

use std::fmt;
use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::lattice::{compare_scopes, AudienceScope, ScopeOrdering};

pub const SIDECAR_SUFFIX: &str = ".prov.json";

const MONTHS: [&str; 12] = [
    "January", "February", "March", "April", "May", "June", "July", "August", "September",
    "October", "November", "December",
];

/// Calendar month, serialized as `YYYY-MM`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct YearMonth {
    year: u16,
    month: u8,
}

impl YearMonth {
    pub fn new(year: u16, month: u8) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::parameter("month", format!("{month} is not in 1..=12")));
        }
        if year > 9999 {
            return Err(Error::parameter("year", format!("{year} has more than four digits")));
        }
        Ok(YearMonth { year, month })
    }

    pub fn year(self) -> u16 {
        self.year
    }

    pub fn month(self) -> u8 {
        self.month
    }

    pub fn month_name(self) -> &'static str {
        MONTHS[usize::from(self.month - 1)]
    }

    /// Shifts by a signed number of months, saturating at year 0 / 9999.
    pub fn add_months(self, delta: i64) -> Self {
        let index = i64::from(self.year) * 12 + i64::from(self.month - 1) + delta;
        let index = index.clamp(0, 9999 * 12 + 11);
        YearMonth {
            year: (index / 12) as u16,
            month: (index % 12) as u8 + 1,
        }
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for YearMonth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::parameter("created_at", format!("{s:?} is not a YYYY-MM date"));
        let (y, m) = s.split_once('-').ok_or_else(bad)?;
        if y.len() != 4 || m.len() != 2 || !y.bytes().chain(m.bytes()).all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        YearMonth::new(y.parse().map_err(|_| bad())?, m.parse().map_err(|_| bad())?)
    }
}

impl Serialize for YearMonth {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for YearMonth {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activity {
    Post,
    Reshare,
    Import,
}

/// Provenance of one content item. `original_audience` is always a
/// canonical scope; foreign labels go through `lattice::map_scope` first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProvenanceRecord {
    // Field order is the sorted key order of the sidecar format.
    pub activity: Activity,
    pub agent: String,
    pub created_at: YearMonth,
    pub entity_id: String,
    #[serde(rename = "scope")]
    pub original_audience: AudienceScope,
    pub sensitive: bool,
}

impl ProvenanceRecord {
    pub fn new(
        entity_id: impl Into<String>,
        original_audience: AudienceScope,
        created_at: YearMonth,
        agent: impl Into<String>,
        activity: Activity,
        sensitive: bool,
    ) -> Result<Self> {
        let record = ProvenanceRecord {
            activity,
            agent: agent.into(),
            created_at,
            entity_id: entity_id.into(),
            original_audience,
            sensitive,
        };
        record.validate()?;
        Ok(record)
    }

    pub fn validate(&self) -> Result<()> {
        if self.entity_id.is_empty() {
            return Err(Error::parameter("entity_id", "must be non-empty"));
        }
        Ok(())
    }

    /// Canonical sidecar bytes.
    pub fn to_sidecar_bytes(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec(self).expect("record serializes");
        bytes.push(b'\n');
        bytes
    }

    pub fn from_sidecar_str(text: &str, source_name: &str) -> Result<Self> {
        let record: ProvenanceRecord =
            serde_json::from_str(text).map_err(|e| Error::from_json(source_name, &e))?;
        record.validate().map_err(|e| Error::Parse {
            source_name: source_name.to_string(),
            field: Some("entity_id".into()),
            message: e.to_string(),
        })?;
        Ok(record)
    }
}

/// Conventional sidecar location for an entity inside `dir`.
pub fn sidecar_path(dir: &Path, entity_id: &str) -> PathBuf {
    dir.join(format!("{entity_id}{SIDECAR_SUFFIX}"))
}

/// Writes the record's canonical serialization to `store`, replacing any
/// existing sidecar.
pub fn attach_record(record: &ProvenanceRecord, store: &Path) -> Result<()> {
    record.validate()?;
    fs::write(store, record.to_sidecar_bytes()).map_err(|e| Error::io(store, e))
}

/// Reads a sidecar. A missing file yields `Ok(None)`.
pub fn read_record(store: &Path) -> Result<Option<ProvenanceRecord>> {
    match fs::read_to_string(store) {
        Ok(text) => ProvenanceRecord::from_sidecar_str(&text, &store.display().to_string()).map(Some),
        Err(e) if e.kind() == ErrorKind::NotFound => Ok(None),
        Err(e) => Err(Error::io(store, e)),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct BadgeLabel {
    pub text: String,
    /// True when the concrete scope is withheld.
    pub abstracted: bool,
}

pub const NO_PROVENANCE_BADGE: &str = "No provenance — defaulting to Private";

pub fn render_badge(record: Option<&ProvenanceRecord>) -> BadgeLabel {
    match record {
        None => BadgeLabel {
            text: NO_PROVENANCE_BADGE.to_string(),
            abstracted: false,
        },
        Some(r) if r.sensitive => BadgeLabel {
            text: format!(
                "Limited audience — {} {}",
                r.created_at.month_name(),
                r.created_at.year()
            ),
            abstracted: true,
        },
        Some(r) => BadgeLabel {
            text: format!(
                "Original audience: {} — {} {}",
                r.original_audience,
                r.created_at.month_name(),
                r.created_at.year()
            ),
            abstracted: false,
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WideningCheck {
    Widened,
    NotWidened,
    /// No provenance to compare against.
    Unassessable,
}

pub fn check_scope_widening(record: Option<&ProvenanceRecord>, outgoing: AudienceScope) -> WideningCheck {
    match record {
        None => WideningCheck::Unassessable,
        Some(r) if compare_scopes(outgoing, r.original_audience) == ScopeOrdering::Broader => {
            WideningCheck::Widened
        }
        Some(_) => WideningCheck::NotWidened,
    }
}

/// True iff provenance is present and `outgoing` is strictly broader than
/// the original audience.
pub fn detect_scope_widening(record: Option<&ProvenanceRecord>, outgoing: AudienceScope) -> bool {
    check_scope_widening(record, outgoing) == WideningCheck::Widened
}

/// Running tally for the widening counter, including events that could not
/// be assessed for lack of provenance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WideningTally {
    pub widened: u64,
    pub not_widened: u64,
    pub missing_provenance: u64,
}

impl WideningTally {
    pub fn observe(&mut self, record: Option<&ProvenanceRecord>, outgoing: AudienceScope) -> bool {
        match check_scope_widening(record, outgoing) {
            WideningCheck::Widened => {
                self.widened += 1;
                true
            }
            WideningCheck::NotWidened => {
                self.not_widened += 1;
                false
            }
            WideningCheck::Unassessable => {
                self.missing_provenance += 1;
                false
            }
        }
    }
}
