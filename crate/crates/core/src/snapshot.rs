//! Snapshot data model: the declarative input describing one device state.
//!
//! A snapshot is a single JSON document carrying everything the analysis
//! consumes: mounts, filesystem entries, the flattened MAC policy, subject
//! and package declarations, the Android-permission-to-GID map, the
//! privilege map and ad hoc user consents. Parsing rejects unknown fields;
//! cross-reference checks live in [`validate_snapshot`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::de::{Error as DeError, Unexpected};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Schema identifier required in `meta.schema`.
pub const SNAPSHOT_SCHEMA: &str = "polyscope-snapshot/1";

pub const PERM_REX: &str = "android.permission.READ_EXTERNAL_STORAGE";
pub const PERM_WEX: &str = "android.permission.WRITE_EXTERNAL_STORAGE";
pub const PERM_MES: &str = "android.permission.MANAGE_EXTERNAL_STORAGE";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Snapshot {
    pub meta: Meta,
    pub mounts: Vec<MountInfo>,
    pub filesystem: Vec<FsEntry>,
    pub mac_policy: MacPolicy,
    pub subjects: Vec<SubjectDecl>,
    pub packages: Vec<PackageDecl>,
    /// Android permission name -> DAC GIDs granted alongside it.
    pub permission_group_map: BTreeMap<String, BTreeSet<u32>>,
    /// Ordered list; first matching pattern wins.
    pub privilege_map: Vec<PrivilegeMapEntry>,
    pub user_consents: Vec<UserConsent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Meta {
    pub schema: String,
    pub device: String,
    pub android_version: String,
    pub scoped_storage_enabled: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MountInfo {
    pub path_prefix: String,
    pub writable: bool,
    pub symlinks_allowed: bool,
    pub external_storage: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FsEntry {
    pub path: String,
    pub kind: FsKind,
    pub dac_uid: u32,
    pub dac_gid: u32,
    pub mode: Mode,
    pub selinux_type: String,
    pub mls_categories: BTreeSet<u16>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scoped: Option<ScopedMeta>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FsKind {
    File,
    Dir,
    Symlink,
}

/// 12-bit POSIX mode (setuid/setgid/sticky + rwxrwxrwx), stored numerically,
/// serialized as a textual octal string like `"0644"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mode(pub u16);

impl Mode {
    pub fn bits(self) -> u16 {
        self.0
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04o}", self.0)
    }
}

impl Serialize for Mode {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&format!("{:04o}", self.0))
    }
}

impl<'de> Deserialize<'de> for Mode {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        let parsed = u16::from_str_radix(&s, 8).ok().filter(|m| *m <= 0o7777);
        match parsed {
            Some(m) => Ok(Mode(m)),
            None => Err(D::Error::invalid_value(
                Unexpected::Str(&s),
                &"an octal mode string between \"0000\" and \"7777\"",
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScopedMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub owner_package: Option<String>,
    pub visibility: Visibility,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Visibility {
    Private,
    Shared,
    LegacyRoot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MacPolicy {
    /// Pre-expanded flat rules: no attributes or macros, one source/target
    /// type pair per rule.
    pub te_rules: Vec<TeRule>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TeRule {
    pub source_type: String,
    pub target_type: String,
    pub class: TeClass,
    pub perms: BTreeSet<TePerm>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TeClass {
    File,
    Dir,
    LnkFile,
}

impl TeClass {
    pub fn for_kind(kind: FsKind) -> TeClass {
        match kind {
            FsKind::File => TeClass::File,
            FsKind::Dir => TeClass::Dir,
            FsKind::Symlink => TeClass::LnkFile,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TePerm {
    Read,
    Write,
    Execute,
    Open,
    Search,
    AddName,
    RemoveName,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubjectDecl {
    pub mac_label: String,
    pub mls_categories: BTreeSet<u16>,
    pub uid: u32,
    pub gid: u32,
    pub supplementary_groups: BTreeSet<u32>,
    /// Empty means: take the union of all packages declared for this uid.
    pub packages: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub privilege_level: Option<PrivilegeLevel>,
    pub accepts_external_pathnames: bool,
    pub uses_file_provider: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PackageDecl {
    pub name: String,
    pub uid: u32,
    pub declared_permissions: BTreeSet<String>,
    pub legacy_storage: bool,
    pub uses_file_provider: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrivilegeMapEntry {
    /// Literal MAC label or a glob with a single trailing `*`.
    pub pattern: String,
    pub level: PrivilegeLevel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserConsent {
    pub package: String,
    pub path: String,
    pub access: BTreeSet<ConsentAccess>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConsentAccess {
    Read,
    Write,
}

/// Process trust levels, T1 lowest. T0 (isolated) is folded into T1 when a
/// snapshot is loaded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum PrivilegeLevel {
    T1,
    T2,
    T3,
    T4,
    T5,
}

impl<'de> Deserialize<'de> for PrivilegeLevel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        match s.as_str() {
            "T0" | "T1" => Ok(PrivilegeLevel::T1),
            "T2" => Ok(PrivilegeLevel::T2),
            "T3" => Ok(PrivilegeLevel::T3),
            "T4" => Ok(PrivilegeLevel::T4),
            "T5" => Ok(PrivilegeLevel::T5),
            _ => Err(D::Error::unknown_variant(
                &s,
                &["T0", "T1", "T2", "T3", "T4", "T5"],
            )),
        }
    }
}

impl fmt::Display for PrivilegeLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PrivilegeLevel::T1 => "T1",
            PrivilegeLevel::T2 => "T2",
            PrivilegeLevel::T3 => "T3",
            PrivilegeLevel::T4 => "T4",
            PrivilegeLevel::T5 => "T5",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error at line {line}, column {column}: {message}")]
    Schema {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("value error at line {line}, column {column}: {message}")]
    Value {
        line: usize,
        column: usize,
        message: String,
    },
}

fn classify_serde_error(err: serde_json::Error) -> ParseError {
    let (line, column) = (err.line(), err.column());
    let message = err.to_string();
    match err.classify() {
        serde_json::error::Category::Syntax
        | serde_json::error::Category::Eof
        | serde_json::error::Category::Io => ParseError::Syntax {
            line,
            column,
            message,
        },
        serde_json::error::Category::Data => {
            // serde distinguishes bad values ("unknown variant", "invalid
            // value") from structural problems (missing/unknown/mistyped
            // fields) only in the message text.
            if message.starts_with("unknown variant") || message.starts_with("invalid value") {
                ParseError::Value {
                    line,
                    column,
                    message,
                }
            } else {
                ParseError::Schema {
                    line,
                    column,
                    message,
                }
            }
        }
    }
}

/// Parses a snapshot document. Unknown fields are rejected, enumerations are
/// validated and the schema version is checked; cross-reference consistency
/// is left to [`validate_snapshot`].
pub fn parse_snapshot(raw: &[u8]) -> Result<Snapshot, ParseError> {
    let snapshot: Snapshot = serde_json::from_slice(raw).map_err(classify_serde_error)?;
    if snapshot.meta.schema != SNAPSHOT_SCHEMA {
        return Err(ParseError::Value {
            line: 0,
            column: 0,
            message: format!(
                "invalid value: unsupported schema \"{}\", expected \"{}\"",
                snapshot.meta.schema, SNAPSHOT_SCHEMA
            ),
        });
    }
    Ok(snapshot)
}

/// Serializes a snapshot back to its JSON document form.
pub fn serialize_snapshot(snapshot: &Snapshot) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(snapshot).expect("snapshot serialization is infallible");
    out.push(b'\n');
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Severity::Error => f.write_str("ERROR"),
            Severity::Warning => f.write_str("WARNING"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub severity: Severity,
    pub code: String,
    pub message: String,
    pub location: String,
}

impl Finding {
    fn error(code: &str, location: impl Into<String>, message: impl Into<String>) -> Finding {
        Finding {
            severity: Severity::Error,
            code: code.to_string(),
            message: message.into(),
            location: location.into(),
        }
    }

    fn warning(code: &str, location: impl Into<String>, message: impl Into<String>) -> Finding {
        Finding {
            severity: Severity::Warning,
            code: code.to_string(),
            message: message.into(),
            location: location.into(),
        }
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {}: {}",
            self.severity, self.code, self.location, self.message
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn has_errors(&self) -> bool {
        self.findings.iter().any(|f| f.severity == Severity::Error)
    }

    pub fn errors(&self) -> impl Iterator<Item = &Finding> {
        self.findings
            .iter()
            .filter(|f| f.severity == Severity::Error)
    }
}

pub mod codes {
    pub const PATH_NOT_ABSOLUTE: &str = "PATH_NOT_ABSOLUTE";
    pub const PATH_NOT_NORMALIZED: &str = "PATH_NOT_NORMALIZED";
    pub const DUPLICATE_PATH: &str = "DUPLICATE_PATH";
    pub const NO_MOUNT: &str = "NO_MOUNT";
    pub const MOUNT_PREFIX_INVALID: &str = "MOUNT_PREFIX_INVALID";
    pub const DUPLICATE_MOUNT_PREFIX: &str = "DUPLICATE_MOUNT_PREFIX";
    pub const SCOPED_OUTSIDE_EXTERNAL: &str = "SCOPED_OUTSIDE_EXTERNAL";
    pub const EXTERNAL_WITHOUT_SCOPED: &str = "EXTERNAL_WITHOUT_SCOPED";
    pub const SCOPED_OWNER_MISSING: &str = "SCOPED_OWNER_MISSING";
    pub const SCOPED_OWNER_FORBIDDEN: &str = "SCOPED_OWNER_FORBIDDEN";
    pub const EMPTY_TE_PERMS: &str = "EMPTY_TE_PERMS";
    pub const DUPLICATE_PACKAGE: &str = "DUPLICATE_PACKAGE";
    pub const UNKNOWN_PACKAGE: &str = "UNKNOWN_PACKAGE";
    pub const UNKNOWN_CONSENT_PACKAGE: &str = "UNKNOWN_CONSENT_PACKAGE";
    pub const UNMAPPED_PRIVILEGE: &str = "UNMAPPED_PRIVILEGE";
    pub const DANGLING_MAC_LABEL: &str = "DANGLING_MAC_LABEL";
}

fn is_normalized_path(path: &str) -> bool {
    if !path.starts_with('/') {
        return false;
    }
    if path == "/" {
        return true;
    }
    if path.ends_with('/') {
        return false;
    }
    path[1..]
        .split('/')
        .all(|c| !c.is_empty() && c != "." && c != "..")
}

/// Checks every cross-reference invariant of a parsed snapshot. Findings are
/// data, not failures; callers must refuse to analyze when any finding has
/// error severity. Deterministic: same snapshot, same findings, same order.
pub fn validate_snapshot(snapshot: &Snapshot) -> ValidationReport {
    let mut findings = Vec::new();

    let mut seen_prefixes = BTreeSet::new();
    for mount in &snapshot.mounts {
        let loc = format!("mounts[{}]", mount.path_prefix);
        if !is_normalized_path(&mount.path_prefix) {
            findings.push(Finding::error(
                codes::MOUNT_PREFIX_INVALID,
                loc.clone(),
                "mount prefix must be an absolute normalized path",
            ));
        }
        if !seen_prefixes.insert(mount.path_prefix.as_str()) {
            findings.push(Finding::error(
                codes::DUPLICATE_MOUNT_PREFIX,
                loc,
                "mount prefix declared more than once",
            ));
        }
    }

    let mut seen_paths = BTreeSet::new();
    for entry in &snapshot.filesystem {
        let path = entry.path.as_str();
        if !path.starts_with('/') {
            findings.push(Finding::error(
                codes::PATH_NOT_ABSOLUTE,
                path,
                "filesystem path must be absolute",
            ));
            continue;
        }
        if !is_normalized_path(path) {
            findings.push(Finding::error(
                codes::PATH_NOT_NORMALIZED,
                path,
                "filesystem path must not contain `.`, `..`, empty or trailing components",
            ));
            continue;
        }
        if !seen_paths.insert(path) {
            findings.push(Finding::error(
                codes::DUPLICATE_PATH,
                path,
                "filesystem path declared more than once",
            ));
        }
        match mount_of(snapshot, path) {
            Ok(mount) => {
                match (&entry.scoped, mount.external_storage) {
                    (Some(_), false) => findings.push(Finding::error(
                        codes::SCOPED_OUTSIDE_EXTERNAL,
                        path,
                        "scoped metadata present but the entry's mount is not external storage",
                    )),
                    (None, true) => findings.push(Finding::warning(
                        codes::EXTERNAL_WITHOUT_SCOPED,
                        path,
                        "external-storage entry has no scoped metadata; it is treated as unrestricted",
                    )),
                    _ => {}
                }
                if let Some(scoped) = &entry.scoped {
                    match (scoped.visibility, &scoped.owner_package) {
                        (Visibility::Private | Visibility::Shared, None) => {
                            findings.push(Finding::error(
                                codes::SCOPED_OWNER_MISSING,
                                path,
                                "private/shared visibility requires an owner package",
                            ))
                        }
                        (Visibility::LegacyRoot, Some(_)) => findings.push(Finding::error(
                            codes::SCOPED_OWNER_FORBIDDEN,
                            path,
                            "legacy_root visibility must not carry an owner package",
                        )),
                        _ => {}
                    }
                }
            }
            Err(_) => findings.push(Finding::error(
                codes::NO_MOUNT,
                path,
                "no mount prefix covers this path",
            )),
        }
    }

    for (i, rule) in snapshot.mac_policy.te_rules.iter().enumerate() {
        if rule.perms.is_empty() {
            findings.push(Finding::error(
                codes::EMPTY_TE_PERMS,
                format!("mac_policy.te_rules[{i}]"),
                format!(
                    "rule {} -> {} has an empty permission set",
                    rule.source_type, rule.target_type
                ),
            ));
        }
    }

    let mut package_names = BTreeSet::new();
    for package in &snapshot.packages {
        if !package_names.insert(package.name.as_str()) {
            findings.push(Finding::error(
                codes::DUPLICATE_PACKAGE,
                format!("packages[{}]", package.name),
                "package name declared more than once",
            ));
        }
    }

    let source_labels: BTreeSet<&str> = snapshot
        .mac_policy
        .te_rules
        .iter()
        .map(|r| r.source_type.as_str())
        .collect();
    for subject in &snapshot.subjects {
        let loc = format!("subjects[{} uid={}]", subject.mac_label, subject.uid);
        for package in &subject.packages {
            if !package_names.contains(package.as_str()) {
                findings.push(Finding::error(
                    codes::UNKNOWN_PACKAGE,
                    loc.clone(),
                    format!("referenced package \"{package}\" is not declared"),
                ));
            }
        }
        if !source_labels.contains(subject.mac_label.as_str()) {
            findings.push(Finding::warning(
                codes::DANGLING_MAC_LABEL,
                loc.clone(),
                "mac label appears as source type in no TE rule",
            ));
        }
        if subject.privilege_level.is_none()
            && !snapshot
                .privilege_map
                .iter()
                .any(|e| pattern_matches(&e.pattern, &subject.mac_label))
        {
            findings.push(Finding::warning(
                codes::UNMAPPED_PRIVILEGE,
                loc,
                "no privilege level mapped; subject defaults to T1 and is excluded as a victim",
            ));
        }
    }

    for consent in &snapshot.user_consents {
        if !package_names.contains(consent.package.as_str()) {
            findings.push(Finding::error(
                codes::UNKNOWN_CONSENT_PACKAGE,
                format!("user_consents[{}]", consent.path),
                format!("consent package \"{}\" is not declared", consent.package),
            ));
        }
    }

    ValidationReport { findings }
}

/// Matches a privilege-map pattern against a MAC label. Patterns are literal
/// labels or a prefix with a single trailing `*`.
pub fn pattern_matches(pattern: &str, label: &str) -> bool {
    match pattern.strip_suffix('*') {
        Some(prefix) => label.starts_with(prefix),
        None => pattern == label,
    }
}

#[derive(Debug, Error)]
#[error("no mount prefix covers path {path}")]
pub struct NoMountError {
    pub path: String,
}

fn prefix_covers(prefix: &str, path: &str) -> bool {
    if prefix == "/" {
        return path.starts_with('/');
    }
    path == prefix || (path.len() > prefix.len() && path.starts_with(prefix) && path.as_bytes()[prefix.len()] == b'/')
}

/// Resolves the longest-prefix mount for a normalized absolute path.
pub fn mount_of<'a>(snapshot: &'a Snapshot, path: &str) -> Result<&'a MountInfo, NoMountError> {
    snapshot
        .mounts
        .iter()
        .filter(|m| prefix_covers(&m.path_prefix, path))
        .max_by_key(|m| m.path_prefix.len())
        .ok_or_else(|| NoMountError {
            path: path.to_string(),
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_doc() -> String {
        r#"{
            "meta": {"schema": "polyscope-snapshot/1", "device": "d", "android_version": "11", "scoped_storage_enabled": true},
            "mounts": [],
            "filesystem": [],
            "mac_policy": {"te_rules": []},
            "subjects": [],
            "packages": [],
            "permission_group_map": {},
            "privilege_map": [],
            "user_consents": []
        }"#
        .to_string()
    }

    #[test]
    fn parses_minimal_document() {
        let snapshot = parse_snapshot(minimal_doc().as_bytes()).unwrap();
        assert_eq!(snapshot.subjects.len(), 0);
        assert_eq!(snapshot.filesystem.len(), 0);
        assert!(!validate_snapshot(&snapshot).has_errors());
    }

    #[test]
    fn parses_textual_octal_mode() {
        let entry: FsEntry = serde_json::from_str(
            r#"{"path": "/x", "kind": "file", "dac_uid": 0, "dac_gid": 0,
                "mode": "0644", "selinux_type": "t", "mls_categories": []}"#,
        )
        .unwrap();
        assert_eq!(entry.mode, Mode(0o644));
        assert_eq!(serde_json::to_string(&entry.mode).unwrap(), "\"0644\"");
    }

    #[test]
    fn rejects_bad_mode_as_value_error() {
        let doc = minimal_doc().replace(
            "\"filesystem\": []",
            r#""filesystem": [{"path": "/x", "kind": "file", "dac_uid": 0, "dac_gid": 0,
                "mode": "9999", "selinux_type": "t", "mls_categories": []}]"#,
        );
        match parse_snapshot(doc.as_bytes()) {
            Err(ParseError::Value { .. }) => {}
            other => panic!("expected value error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_negative_uid_as_value_error() {
        let doc = minimal_doc().replace(
            "\"subjects\": []",
            r#""subjects": [{"mac_label": "x", "mls_categories": [], "uid": -1, "gid": 0,
                "supplementary_groups": [], "packages": [],
                "accepts_external_pathnames": false, "uses_file_provider": false}]"#,
        );
        match parse_snapshot(doc.as_bytes()) {
            Err(ParseError::Value { .. }) => {}
            other => panic!("expected value error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_unknown_field_as_schema_error() {
        let doc = minimal_doc().replace("\"mounts\": []", "\"mounts\": [], \"extra\": 1");
        match parse_snapshot(doc.as_bytes()) {
            Err(ParseError::Schema { .. }) => {}
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_missing_field_as_schema_error() {
        let doc = minimal_doc().replace("\"user_consents\": []", "\"user_consents2\": []");
        assert!(matches!(
            parse_snapshot(doc.as_bytes()),
            Err(ParseError::Schema { .. })
        ));
    }

    #[test]
    fn rejects_malformed_json_as_syntax_error() {
        match parse_snapshot(b"{ not json") {
            Err(ParseError::Syntax { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_wrong_schema_version() {
        let doc = minimal_doc().replace("polyscope-snapshot/1", "polyscope-snapshot/2");
        assert!(matches!(
            parse_snapshot(doc.as_bytes()),
            Err(ParseError::Value { .. })
        ));
    }

    #[test]
    fn folds_t0_into_t1() {
        let level: PrivilegeLevel = serde_json::from_str("\"T0\"").unwrap();
        assert_eq!(level, PrivilegeLevel::T1);
    }

    #[test]
    fn mount_of_longest_prefix() {
        let mut snapshot = parse_snapshot(minimal_doc().as_bytes()).unwrap();
        snapshot.mounts = vec![
            MountInfo {
                path_prefix: "/".into(),
                writable: true,
                symlinks_allowed: true,
                external_storage: false,
            },
            MountInfo {
                path_prefix: "/system".into(),
                writable: false,
                symlinks_allowed: true,
                external_storage: false,
            },
        ];
        assert_eq!(
            mount_of(&snapshot, "/system/bin/sh").unwrap().path_prefix,
            "/system"
        );
        assert_eq!(mount_of(&snapshot, "/").unwrap().path_prefix, "/");
        assert_eq!(mount_of(&snapshot, "/systemx").unwrap().path_prefix, "/");
        snapshot.mounts.clear();
        assert!(mount_of(&snapshot, "/x").is_err());
    }

    #[test]
    fn validate_flags_scoped_outside_external() {
        let mut snapshot = parse_snapshot(minimal_doc().as_bytes()).unwrap();
        snapshot.mounts.push(MountInfo {
            path_prefix: "/".into(),
            writable: true,
            symlinks_allowed: true,
            external_storage: false,
        });
        snapshot.filesystem.push(FsEntry {
            path: "/data/x".into(),
            kind: FsKind::File,
            dac_uid: 0,
            dac_gid: 0,
            mode: Mode(0o644),
            selinux_type: "t".into(),
            mls_categories: BTreeSet::new(),
            scoped: Some(ScopedMeta {
                owner_package: Some("p".into()),
                visibility: Visibility::Shared,
            }),
        });
        let report = validate_snapshot(&snapshot);
        assert!(report
            .errors()
            .any(|f| f.code == codes::SCOPED_OUTSIDE_EXTERNAL));
    }

    #[test]
    fn validate_is_pure() {
        let mut snapshot = parse_snapshot(minimal_doc().as_bytes()).unwrap();
        snapshot.subjects.push(SubjectDecl {
            mac_label: "vendor_foo".into(),
            mls_categories: BTreeSet::new(),
            uid: 1,
            gid: 1,
            supplementary_groups: BTreeSet::new(),
            packages: BTreeSet::new(),
            privilege_level: None,
            accepts_external_pathnames: false,
            uses_file_provider: false,
        });
        let a = validate_snapshot(&snapshot);
        let b = validate_snapshot(&snapshot);
        assert_eq!(a, b);
        assert!(a.findings.iter().any(|f| f.code == codes::UNMAPPED_PRIVILEGE
            && f.severity == Severity::Warning));
    }

    #[test]
    fn snapshot_round_trips() {
        let snapshot = parse_snapshot(minimal_doc().as_bytes()).unwrap();
        let bytes = serialize_snapshot(&snapshot);
        let reparsed = parse_snapshot(&bytes).unwrap();
        assert_eq!(snapshot, reparsed);
    }
}
