//! A deliberately naive, single-threaded reference implementation of the
//! whole rule pipeline, for exact-equivalence checks against the engine on
//! small snapshots.
//!
//! Everything that decides an outcome is re-derived here from scratch: the
//! subject/object join, privilege levels, expansion, each policy check and
//! each rule body, written as literal triple-loop evaluation. The only things
//! shared with the engine are the data types and the snapshot parsing layer.
//! A divergence between the two means one of them misreads the rules.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::analysis::{
    AttackOperation, IntegrityViolation, IvKind, OpKind, SquatPreventedRecord,
    SQUAT_PREVENTED_REASON,
};
use crate::engine::{AnalysisResult, ScopeFilter, Timing};
use crate::expansion::ExpansionConfig;
use crate::labeling::{FsObject, StoragePerms, Subject};
use crate::snapshot::{
    mount_of, validate_snapshot, ConsentAccess, FsEntry, FsKind, PrivilegeLevel, Snapshot,
    TeClass, TePerm, Visibility, PERM_MES, PERM_REX, PERM_WEX,
};

#[derive(Debug, Clone)]
pub struct OracleConfig {
    pub expansion: ExpansionConfig,
    pub scope_filter: ScopeFilter,
    /// Lifts the cubic-enumeration size guard.
    pub allow_large: bool,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            expansion: ExpansionConfig::default(),
            scope_filter: ScopeFilter::All,
            allow_large: false,
        }
    }
}

pub const ORACLE_MAX_SUBJECTS: usize = 100;
pub const ORACLE_MAX_OBJECTS: usize = 1000;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error(
        "snapshot too large for cubic enumeration ({subjects} subjects x {objects} objects; \
         guard is {ORACLE_MAX_SUBJECTS} x {ORACLE_MAX_OBJECTS})"
    )]
    SizeGuard { subjects: usize, objects: usize },
    #[error("snapshot failed validation")]
    Invalid,
}

// Per-subject state derived independently of the engine's labeling and
// expansion modules.
struct OracleSubject {
    subject: Subject,
    // adversary-expanded view of the subject itself
    exp_groups: BTreeSet<u32>,
    exp_storage: StoragePerms,
    // victim-expanded view (DAC override handled per adversary)
    vic_groups: BTreeSet<u32>,
    vic_storage: StoragePerms,
    vic_override: bool,
}

fn matches_pattern(pattern: &str, label: &str) -> bool {
    if let Some(prefix) = pattern.strip_suffix('*') {
        label.starts_with(prefix)
    } else {
        pattern == label
    }
}

fn derive_subjects(snapshot: &Snapshot, config: &OracleConfig) -> Vec<OracleSubject> {
    let mut decls: Vec<_> = snapshot.subjects.iter().collect();
    decls.sort_by(|a, b| (&a.mac_label, a.uid).cmp(&(&b.mac_label, b.uid)));

    decls
        .iter()
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
            let mut granted = StoragePerms::default();
            for p in &mapped {
                granted.rex |= p.declared_permissions.contains(PERM_REX);
                granted.wex |= p.declared_permissions.contains(PERM_WEX);
                granted.mes |= p.declared_permissions.contains(PERM_MES);
            }
            let uses_file_provider =
                decl.uses_file_provider && mapped.iter().all(|p| p.uses_file_provider);

            let privilege_level = decl.privilege_level.unwrap_or_else(|| {
                snapshot
                    .privilege_map
                    .iter()
                    .find(|e| matches_pattern(&e.pattern, &decl.mac_label))
                    .map(|e| e.level)
                    .unwrap_or(PrivilegeLevel::T1)
            });

            let mut groups = decl.supplementary_groups.clone();
            groups.insert(decl.gid);

            // adversary expansion: every declared permission of every mapped
            // package is assumed granted
            let mut exp_groups = groups.clone();
            let mut exp_storage = StoragePerms::default();
            if config.expansion.adversary_expansion {
                for p in &mapped {
                    for perm in &p.declared_permissions {
                        if let Some(gids) = snapshot.permission_group_map.get(perm) {
                            exp_groups.extend(gids.iter().copied());
                        }
                    }
                }
                exp_storage = granted;
                if snapshot.meta.scoped_storage_enabled {
                    exp_storage.wex = false;
                }
            }

            // victim expansion: owned-object override, plus assumed REX/WEX
            // (and their groups) on pre-Scoped systems
            let mut vic_groups = exp_groups.clone();
            let mut vic_storage = exp_storage;
            let mut vic_override = false;
            if config.expansion.victim_expansion {
                vic_override = true;
                if config.expansion.prescoped_assume_rex_wex
                    && !snapshot.meta.scoped_storage_enabled
                {
                    vic_storage.rex = true;
                    vic_storage.wex = true;
                    for perm in [PERM_REX, PERM_WEX] {
                        if let Some(gids) = snapshot.permission_group_map.get(perm) {
                            vic_groups.extend(gids.iter().copied());
                        }
                    }
                }
            }

            OracleSubject {
                subject: Subject {
                    id,
                    mac_label: decl.mac_label.clone(),
                    mls_categories: decl.mls_categories.clone(),
                    uid: decl.uid,
                    gid: decl.gid,
                    groups,
                    packages,
                    legacy,
                    granted_storage_perms: granted,
                    privilege_level,
                    accepts_external_pathnames: decl.accepts_external_pathnames,
                    uses_file_provider,
                },
                exp_groups,
                exp_storage,
                vic_groups,
                vic_storage,
                vic_override,
            }
        })
        .collect()
}

fn derive_objects(snapshot: &Snapshot, subjects: &[OracleSubject]) -> Vec<FsObject> {
    let mut entries: Vec<&FsEntry> = snapshot.filesystem.iter().collect();
    entries.sort_by(|a, b| a.path.cmp(&b.path));
    entries
        .iter()
        .enumerate()
        .map(|(id, entry)| FsObject {
            id,
            entry: (*entry).clone(),
            mount: mount_of(snapshot, &entry.path).expect("validated").clone(),
            is_binding: entry.kind == FsKind::Dir,
            owner_subjects: subjects
                .iter()
                .filter(|s| s.subject.uid == entry.dac_uid)
                .map(|s| s.subject.id)
                .collect(),
        })
        .collect()
}

// One literal access decision: TE, MLS, DAC and Scoped Storage in turn,
// evaluated by scanning the raw snapshot rules.
#[allow(clippy::too_many_arguments)]
fn allowed(
    snapshot: &Snapshot,
    os: &OracleSubject,
    groups: &BTreeSet<u32>,
    storage: StoragePerms,
    dac_override_vs: Option<&Subject>,
    obj: &FsObject,
    op: Op,
) -> bool {
    let subj = &os.subject;

    // --- Type Enforcement ---
    let class = match obj.entry.kind {
        FsKind::File => TeClass::File,
        FsKind::Dir => TeClass::Dir,
        FsKind::Symlink => TeClass::LnkFile,
    };
    let needed: &[TePerm] = match op {
        Op::Read => &[TePerm::Read],
        Op::Write => &[TePerm::Write],
        Op::Exec => &[TePerm::Execute],
        Op::Use => &[TePerm::Search],
        Op::WriteDir => &[TePerm::Write, TePerm::AddName],
    };
    let mut te_granted: BTreeSet<TePerm> = BTreeSet::new();
    for rule in &snapshot.mac_policy.te_rules {
        if rule.source_type == subj.mac_label
            && rule.target_type == obj.entry.selinux_type
            && rule.class == class
        {
            te_granted.extend(rule.perms.iter().copied());
        }
    }
    if !needed.iter().all(|p| te_granted.contains(p)) {
        return false;
    }

    // --- MLS dominance ---
    if !obj
        .entry
        .mls_categories
        .iter()
        .all(|c| subj.mls_categories.contains(c))
    {
        return false;
    }

    // --- DAC ---
    if subj.uid != 0 {
        let overridden =
            dac_override_vs.is_some_and(|adv| adv.uid == obj.entry.dac_uid);
        let mode = if overridden { 0o777 } else { obj.entry.mode.bits() };
        let triad = if subj.uid == obj.entry.dac_uid {
            (mode >> 6) & 0o7
        } else if subj.gid == obj.entry.dac_gid || groups.contains(&obj.entry.dac_gid) {
            (mode >> 3) & 0o7
        } else {
            mode & 0o7
        };
        let need = match op {
            Op::Read => 0o4,
            Op::Write => 0o2,
            Op::Exec | Op::Use => 0o1,
            Op::WriteDir => 0o3,
        };
        if triad & need != need {
            return false;
        }
    }

    // --- Scoped Storage ---
    if snapshot.meta.scoped_storage_enabled && obj.mount.external_storage {
        if let Some(scoped) = &obj.entry.scoped {
            if !subj.packages.is_empty() {
                let perms = subj.granted_storage_perms.union(storage);
                let owned = scoped
                    .owner_package
                    .as_ref()
                    .is_some_and(|o| subj.packages.contains(o));
                let write_like = matches!(op, Op::Write | Op::WriteDir);
                let ok = match scoped.visibility {
                    Visibility::Private => owned || perms.mes,
                    Visibility::Shared if !write_like => {
                        owned || perms.rex || perms.mes || subj.legacy
                    }
                    Visibility::Shared => {
                        owned
                            || perms.mes
                            || subj.legacy
                            || snapshot.user_consents.iter().any(|c| {
                                c.access.contains(&ConsentAccess::Write)
                                    && subj.packages.contains(&c.package)
                                    && (obj.entry.path == c.path
                                        || obj
                                            .entry
                                            .path
                                            .strip_prefix(c.path.as_str())
                                            .is_some_and(|rest| rest.starts_with('/')))
                            })
                    }
                    Visibility::LegacyRoot => subj.legacy || perms.mes,
                };
                if !ok {
                    return false;
                }
            }
        }
    }

    true
}

#[derive(Clone, Copy)]
enum Op {
    Read,
    Write,
    Exec,
    Use,
    WriteDir,
}

/// Literal triple-loop evaluation of the rule pipeline. Guarded to small
/// snapshots; outputs in the same canonical order as the engine.
pub fn oracle_analyze(
    snapshot: &Snapshot,
    config: &OracleConfig,
) -> Result<AnalysisResult, OracleError> {
    if validate_snapshot(snapshot).has_errors() {
        return Err(OracleError::Invalid);
    }
    let n_subjects = snapshot.subjects.len();
    let n_objects = snapshot.filesystem.len();
    if !config.allow_large && (n_subjects > ORACLE_MAX_SUBJECTS || n_objects > ORACLE_MAX_OBJECTS) {
        return Err(OracleError::SizeGuard {
            subjects: n_subjects,
            objects: n_objects,
        });
    }

    let subjects = derive_subjects(snapshot, config);
    let objects = derive_objects(snapshot, &subjects);

    let mut ivs: BTreeSet<IntegrityViolation> = BTreeSet::new();
    let mut ops: BTreeMap<(usize, usize, usize, OpKind), IvKind> = BTreeMap::new();
    let mut prevented: BTreeSet<SquatPreventedRecord> = BTreeSet::new();

    for obj in &objects {
        if config.scope_filter == ScopeFilter::ExternalOnly && !obj.mount.external_storage {
            continue;
        }
        let fs_writable = obj.mount.writable;
        let symlink_ok = obj.mount.symlinks_allowed;
        let scoped_active =
            snapshot.meta.scoped_storage_enabled && obj.mount.external_storage;

        for victim in &subjects {
            for adversary in &subjects {
                if adversary.subject.privilege_level >= victim.subject.privilege_level {
                    continue;
                }
                let v = victim.subject.id;
                let a = adversary.subject.id;

                match obj.entry.kind {
                    FsKind::File => {
                        // {read|write|exec}(file, victim) && adv-expand &&
                        // write(file, adversary) -> {read|write|exec}-IV
                        let adv_writes = allowed(
                            snapshot, adversary, &adversary.exp_groups, adversary.exp_storage,
                            None, obj, Op::Write,
                        );
                        if !adv_writes {
                            continue;
                        }
                        for (op, kind) in [
                            (Op::Read, IvKind::Read),
                            (Op::Write, IvKind::Write),
                            (Op::Exec, IvKind::Exec),
                        ] {
                            let victim_uses = allowed(
                                snapshot, victim, &victim.exp_groups, victim.exp_storage,
                                None, obj, op,
                            );
                            if victim_uses {
                                ivs.insert(IntegrityViolation {
                                    object: obj.id,
                                    victim: v,
                                    adversary: a,
                                    kind,
                                });
                                // file-mod needs a writable filesystem
                                if fs_writable {
                                    ops.entry((obj.id, v, a, OpKind::FileMod))
                                        .and_modify(|src| *src = (*src).min(kind))
                                        .or_insert(kind);
                                }
                            }
                        }
                    }
                    FsKind::Dir => {
                        // use(binding, victim) && adv-expand &&
                        // write(binding, adversary) -> binding-IV
                        let adv_writes = allowed(
                            snapshot, adversary, &adversary.exp_groups, adversary.exp_storage,
                            None, obj, Op::WriteDir,
                        );
                        if !adv_writes {
                            continue;
                        }
                        let victim_uses = allowed(
                            snapshot, victim, &victim.exp_groups, victim.exp_storage,
                            None, obj, Op::Use,
                        );
                        if victim_uses {
                            ivs.insert(IntegrityViolation {
                                object: obj.id,
                                victim: v,
                                adversary: a,
                                kind: IvKind::Binding,
                            });
                            if fs_writable {
                                // squat read gate: could the victim read a
                                // file the adversary plants in this binding?
                                let gate = match (&obj.entry.scoped, scoped_active) {
                                    (Some(scoped), true) => {
                                        let owns = scoped.owner_package.as_ref().is_some_and(
                                            |o| victim.subject.packages.contains(o),
                                        );
                                        let perms = victim
                                            .subject
                                            .granted_storage_perms
                                            .union(victim.exp_storage);
                                        owns || perms.rex || perms.mes || victim.subject.legacy
                                    }
                                    _ => true,
                                };
                                if gate {
                                    ops.entry((obj.id, v, a, OpKind::FileSquat))
                                        .or_insert(IvKind::Binding);
                                } else {
                                    prevented.insert(SquatPreventedRecord {
                                        object: obj.id,
                                        victim: v,
                                        adversary: a,
                                        reason: SQUAT_PREVENTED_REASON.to_string(),
                                    });
                                }
                                if symlink_ok {
                                    ops.entry((obj.id, v, a, OpKind::LinkTraversal))
                                        .or_insert(IvKind::Binding);
                                }
                            }
                        }

                        // write(ipc, adv, vic) && vic-expand && binding-IV
                        // body -> pathname-IV; no victim expansion on
                        // external storage once Scoped Storage is on
                        if victim.subject.accepts_external_pathnames {
                            let (groups, storage, override_vs) = if scoped_active {
                                (&victim.exp_groups, victim.exp_storage, None)
                            } else if victim.vic_override {
                                (
                                    &victim.vic_groups,
                                    victim.vic_storage,
                                    Some(&adversary.subject),
                                )
                            } else {
                                (&victim.vic_groups, victim.vic_storage, None)
                            };
                            let victim_lured = allowed(
                                snapshot, victim, groups, storage, override_vs, obj, Op::Use,
                            );
                            if victim_lured {
                                ivs.insert(IntegrityViolation {
                                    object: obj.id,
                                    victim: v,
                                    adversary: a,
                                    kind: IvKind::Pathname,
                                });
                                if fs_writable
                                    && symlink_ok
                                    && !victim.subject.uses_file_provider
                                {
                                    ops.entry((obj.id, v, a, OpKind::LuringTraversal))
                                        .or_insert(IvKind::Pathname);
                                }
                            }
                        }
                    }
                    FsKind::Symlink => {}
                }
            }
        }
    }

    Ok(AnalysisResult {
        subjects: subjects.into_iter().map(|s| s.subject).collect(),
        objects,
        ivs: ivs.into_iter().collect(),
        ops: ops
            .into_iter()
            .map(|((object, victim, adversary, kind), source_iv_kind)| AttackOperation {
                object,
                victim,
                adversary,
                kind,
                source_iv_kind,
            })
            .collect(),
        squat_prevented: prevented.into_iter().collect(),
        timing: Timing::default(),
    })
}
