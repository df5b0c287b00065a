//! Composite subject/object construction: joins MAC, DAC and storage
//! identities and resolves privilege levels.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::snapshot::{
    pattern_matches, FsEntry, FsKind, MountInfo, PrivilegeLevel, PrivilegeMapEntry, Snapshot,
    SubjectDecl, PERM_MES, PERM_REX, PERM_WEX,
};

/// The three storage permissions Scoped Storage cares about.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoragePerms {
    pub rex: bool,
    pub wex: bool,
    pub mes: bool,
}

impl StoragePerms {
    pub fn union(self, other: StoragePerms) -> StoragePerms {
        StoragePerms {
            rex: self.rex || other.rex,
            wex: self.wex || other.wex,
            mes: self.mes || other.mes,
        }
    }

    pub fn is_empty(self) -> bool {
        !(self.rex || self.wex || self.mes)
    }

    pub fn from_declared<'a>(perms: impl Iterator<Item = &'a str>) -> StoragePerms {
        let mut out = StoragePerms::default();
        for p in perms {
            match p {
                PERM_REX => out.rex = true,
                PERM_WEX => out.wex = true,
                PERM_MES => out.mes = true,
                _ => {}
            }
        }
        out
    }
}

/// A subject as seen by every policy model at once. Identity spans the MAC
/// label and MLS categories, the DAC uid/gids, and the Scoped Storage
/// package set with its derived legacy and storage-permission state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subject {
    pub id: usize,
    pub mac_label: String,
    pub mls_categories: BTreeSet<u16>,
    pub uid: u32,
    pub gid: u32,
    /// Base DAC groups (owner gid plus supplementary), before expansion.
    pub groups: BTreeSet<u32>,
    pub packages: BTreeSet<String>,
    /// True iff any mapped package keeps legacy storage semantics.
    pub legacy: bool,
    /// Union over the mapped packages' declared storage permissions.
    pub granted_storage_perms: StoragePerms,
    pub privilege_level: PrivilegeLevel,
    pub accepts_external_pathnames: bool,
    /// Holds only when every mapped package routes file handouts through a
    /// FileProvider and the subject declaration agrees.
    pub uses_file_provider: bool,
}

impl Subject {
    /// Subjects with no package identity are not mediated by Scoped Storage.
    pub fn scoped_exempt(&self) -> bool {
        self.packages.is_empty()
    }
}

/// A filesystem object with its per-policy labels and mount context.
/// Directories are bindings: modifying one redirects name resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FsObject {
    pub id: usize,
    pub entry: FsEntry,
    pub mount: MountInfo,
    pub is_binding: bool,
    pub owner_subjects: BTreeSet<usize>,
}

impl FsObject {
    pub fn kind(&self) -> FsKind {
        self.entry.kind
    }

    pub fn external(&self) -> bool {
        self.mount.external_storage
    }
}

/// Resolves privilege levels for a slice of declarations: an explicit level
/// wins, else the first matching pattern, else T1 (the most adversarial
/// default; validation warns about such subjects).
pub fn assign_privilege_levels(
    decls: &[SubjectDecl],
    privilege_map: &[PrivilegeMapEntry],
) -> Vec<PrivilegeLevel> {
    decls
        .iter()
        .map(|decl| resolve_privilege_level(decl, privilege_map))
        .collect()
}

fn resolve_privilege_level(
    decl: &SubjectDecl,
    privilege_map: &[PrivilegeMapEntry],
) -> PrivilegeLevel {
    if let Some(level) = decl.privilege_level {
        return level;
    }
    privilege_map
        .iter()
        .find(|entry| pattern_matches(&entry.pattern, &decl.mac_label))
        .map(|entry| entry.level)
        .unwrap_or(PrivilegeLevel::T1)
}

/// Builds one subject per declaration, ordered by `(mac_label, uid)` with
/// dense ids. A declaration without an explicit package list receives the
/// union of all packages sharing its uid, over-approximating subjects that
/// multiplex several packages behind one uid.
pub fn build_subjects(snapshot: &Snapshot) -> Vec<Subject> {
    let mut order: Vec<&SubjectDecl> = snapshot.subjects.iter().collect();
    order.sort_by(|a, b| (&a.mac_label, a.uid).cmp(&(&b.mac_label, b.uid)));

    order
        .into_iter()
        .enumerate()
        .map(|(id, decl)| {
            let packages: BTreeSet<String> = if decl.packages.is_empty() {
                snapshot
                    .packages
                    .iter()
                    .filter(|p| p.uid == decl.uid)
                    .map(|p| p.name.clone())
                    .collect()
            } else {
                decl.packages.clone()
            };

            let mapped: Vec<_> = snapshot
                .packages
                .iter()
                .filter(|p| packages.contains(&p.name))
                .collect();
            let legacy = mapped.iter().any(|p| p.legacy_storage);
            let granted_storage_perms = mapped
                .iter()
                .map(|p| StoragePerms::from_declared(p.declared_permissions.iter().map(String::as_str)))
                .fold(StoragePerms::default(), StoragePerms::union);
            // A single non-FileProvider code path behind the uid defeats the
            // luring defense, hence the conjunction.
            let uses_file_provider =
                decl.uses_file_provider && mapped.iter().all(|p| p.uses_file_provider);

            let mut groups = decl.supplementary_groups.clone();
            groups.insert(decl.gid);

            Subject {
                id,
                mac_label: decl.mac_label.clone(),
                mls_categories: decl.mls_categories.clone(),
                uid: decl.uid,
                gid: decl.gid,
                groups,
                packages,
                legacy,
                granted_storage_perms,
                privilege_level: resolve_privilege_level(decl, &snapshot.privilege_map),
                accepts_external_pathnames: decl.accepts_external_pathnames,
                uses_file_provider,
            }
        })
        .collect()
}

/// Builds one object per filesystem entry, ordered by path with dense ids.
/// Requires a validated snapshot (every path resolves to a mount).
pub fn build_objects(snapshot: &Snapshot, subjects: &[Subject]) -> Vec<FsObject> {
    let mut order: Vec<&FsEntry> = snapshot.filesystem.iter().collect();
    order.sort_by(|a, b| a.path.cmp(&b.path));

    let mut subjects_by_uid: std::collections::BTreeMap<u32, BTreeSet<usize>> =
        std::collections::BTreeMap::new();
    for subject in subjects {
        subjects_by_uid.entry(subject.uid).or_default().insert(subject.id);
    }

    order
        .into_iter()
        .enumerate()
        .map(|(id, entry)| {
            let mount = crate::snapshot::mount_of(snapshot, &entry.path)
                .expect("validated snapshot entries always have a mount")
                .clone();
            let owner_subjects = subjects_by_uid
                .get(&entry.dac_uid)
                .cloned()
                .unwrap_or_default();
            FsObject {
                id,
                entry: entry.clone(),
                mount,
                is_binding: entry.kind == FsKind::Dir,
                owner_subjects,
            }
        })
        .collect()
}

/// All subjects at a strictly lower privilege level than the victim. Never
/// contains the victim itself; empty for T1 victims.
pub fn adversaries_of(victim: &Subject, subjects: &[Subject]) -> Vec<usize> {
    subjects
        .iter()
        .filter(|s| s.privilege_level < victim.privilege_level)
        .map(|s| s.id)
        .collect()
}

/// The stock privilege map: process trust levels keyed by the well-known
/// MAC labels, from root processes down to untrusted and isolated apps.
pub fn default_privilege_map() -> Vec<PrivilegeMapEntry> {
    let entries = [
        ("kernel", PrivilegeLevel::T5),
        ("init", PrivilegeLevel::T5),
        ("system_server", PrivilegeLevel::T4),
        ("bluetooth", PrivilegeLevel::T3),
        ("mediaserver", PrivilegeLevel::T3),
        ("platform_app", PrivilegeLevel::T2),
        ("priv_app", PrivilegeLevel::T2),
        ("untrusted_app*", PrivilegeLevel::T1),
        ("isolated_app", PrivilegeLevel::T1),
        ("webview", PrivilegeLevel::T1),
    ];
    entries
        .into_iter()
        .map(|(pattern, level)| PrivilegeMapEntry {
            pattern: pattern.to_string(),
            level,
        })
        .collect()
}
