//! Per-object rule evaluation: integrity violations and the attack
//! operations they enable. Everything here is pure over one object, so the
//! engine can fan objects out across workers freely.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::authz::{access_sets, Access, AccessContext, AccessQuery, PolicySet};
use crate::expansion::ExpansionConfig;
use crate::labeling::{FsObject, Subject};
use crate::snapshot::{FsKind, Snapshot};

/// Violation kinds, in canonical sort order.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum IvKind {
    Read,
    Write,
    Exec,
    Binding,
    Pathname,
}

impl fmt::Display for IvKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            IvKind::Read => "read-iv",
            IvKind::Write => "write-iv",
            IvKind::Exec => "exec-iv",
            IvKind::Binding => "binding-iv",
            IvKind::Pathname => "pathname-iv",
        };
        f.write_str(s)
    }
}

/// An adversary is authorized to modify something a higher-privilege victim
/// uses. File kinds target files, binding/pathname target directories.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct IntegrityViolation {
    pub object: usize,
    pub victim: usize,
    pub adversary: usize,
    pub kind: IvKind,
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum OpKind {
    FileMod,
    FileSquat,
    LinkTraversal,
    LuringTraversal,
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            OpKind::FileMod => "file-mod",
            OpKind::FileSquat => "file-squat",
            OpKind::LinkTraversal => "link-traversal",
            OpKind::LuringTraversal => "luring-traversal",
        };
        f.write_str(s)
    }
}

/// A concrete operation an adversary can launch from an integrity violation,
/// after the filesystem and program configuration gates.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct AttackOperation {
    pub object: usize,
    pub victim: usize,
    pub adversary: usize,
    pub kind: OpKind,
    pub source_iv_kind: IvKind,
}

pub const SQUAT_PREVENTED_REASON: &str =
    "missing REX/MES/legacy/ownership for victim read of adversary-created file";

/// A binding violation that failed squat conversion solely on the Scoped
/// Storage read gate: the victim could not read a file the adversary plants.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SquatPreventedRecord {
    pub object: usize,
    pub victim: usize,
    pub adversary: usize,
    pub reason: String,
}

/// Everything the per-object rules need besides the object itself. Contexts
/// are the per-subject adversary-expanded contexts; the victim-expanded
/// variants are evaluated lazily inside the pathname rule.
pub struct RuleInputs<'a> {
    pub snapshot: &'a Snapshot,
    pub subjects: &'a [Subject],
    /// Adversary-expanded context per subject id.
    pub expanded: &'a [AccessContext],
    /// Victim-expanded context per subject id (override flag set, pre-Scoped
    /// REX/WEX assumed); applied only where victim expansion is possible.
    pub victim_expanded: &'a [AccessContext],
    pub policies: &'a PolicySet,
    pub config: &'a ExpansionConfig,
}

fn is_adversary_of(inputs: &RuleInputs<'_>, adversary: usize, victim: usize) -> bool {
    inputs.subjects[adversary].privilege_level < inputs.subjects[victim].privilege_level
}

impl<'a> RuleInputs<'a> {
    fn victim_ctx_for(&self, victim: usize, obj: &FsObject) -> &AccessContext {
        // No victim expansion on external storage once Scoped Storage is on.
        if obj.mount.external_storage && self.snapshot.meta.scoped_storage_enabled {
            &self.expanded[victim]
        } else {
            &self.victim_expanded[victim]
        }
    }
}

/// File rule: victim can read/write/execute the file under its own expanded
/// context, an adversary of the victim can write it under the adversary's
/// expanded context. One violation per kind, victim and adversary.
pub fn compute_file_ivs(obj: &FsObject, inputs: &RuleInputs<'_>) -> Vec<IntegrityViolation> {
    debug_assert_eq!(obj.kind(), FsKind::File);
    let sets = access_sets(obj, inputs.subjects, inputs.expanded, inputs.policies);
    let mut out = Vec::new();
    if sets.writers.is_empty() {
        return out;
    }
    // victims are subjects that use the file at all; loop those against the
    // (typically tiny) writer set rather than the whole subject table
    let mut victims: Vec<usize> = sets
        .readers
        .iter()
        .chain(&sets.writers)
        .chain(&sets.executors)
        .copied()
        .collect();
    victims.sort_unstable();
    victims.dedup();
    for victim in victims {
        let uses: [(IvKind, bool); 3] = [
            (IvKind::Read, sets.readers.binary_search(&victim).is_ok()),
            (IvKind::Write, sets.writers.binary_search(&victim).is_ok()),
            (IvKind::Exec, sets.executors.binary_search(&victim).is_ok()),
        ];
        for &adversary in &sets.writers {
            if !is_adversary_of(inputs, adversary, victim) {
                continue;
            }
            for (kind, used) in uses {
                if used {
                    out.push(IntegrityViolation {
                        object: obj.id,
                        victim,
                        adversary,
                        kind,
                    });
                }
            }
        }
    }
    out.sort_unstable();
    out
}

/// Binding rule: the file rule shape applied to directory use/modify.
pub fn compute_binding_ivs(obj: &FsObject, inputs: &RuleInputs<'_>) -> Vec<IntegrityViolation> {
    debug_assert_eq!(obj.kind(), FsKind::Dir);
    let sets = access_sets(obj, inputs.subjects, inputs.expanded, inputs.policies);
    let mut out = Vec::new();
    for &victim in &sets.binding_users {
        for &adversary in &sets.binding_writers {
            if is_adversary_of(inputs, adversary, victim) {
                out.push(IntegrityViolation {
                    object: obj.id,
                    victim,
                    adversary,
                    kind: IvKind::Binding,
                });
            }
        }
    }
    out.sort_unstable();
    out
}

/// Pathname rule: an adversary that can reach the victim over IPC lures it
/// to a binding the victim can use under victim-expanded permissions and the
/// adversary can modify.
pub fn compute_pathname_ivs(obj: &FsObject, inputs: &RuleInputs<'_>) -> Vec<IntegrityViolation> {
    debug_assert_eq!(obj.kind(), FsKind::Dir);
    let sets = access_sets(obj, inputs.subjects, inputs.expanded, inputs.policies);
    let mut out = Vec::new();
    if sets.binding_writers.is_empty() {
        return out;
    }
    for victim_subj in inputs.subjects {
        let victim = victim_subj.id;
        if !victim_subj.accepts_external_pathnames {
            continue;
        }
        for &adversary in &sets.binding_writers {
            if !is_adversary_of(inputs, adversary, victim) {
                continue;
            }
            // POSIX triad selection is not monotone in group membership, so
            // the victim-expanded check cannot be skipped even when the base
            // binding use already holds.
            let query = AccessQuery {
                subject: victim_subj,
                ctx: inputs.victim_ctx_for(victim, obj),
                object: obj,
                access: Access::UseBinding,
                adversary: Some(&inputs.subjects[adversary]),
            };
            if inputs.policies.authorize(&query) {
                out.push(IntegrityViolation {
                    object: obj.id,
                    victim,
                    adversary,
                    kind: IvKind::Pathname,
                });
            }
        }
    }
    out.sort_unstable();
    out
}

/// The Scoped Storage read gate for squatting: can this victim read a file
/// the adversary creates inside the binding? Ownership is directory-driven.
fn squat_read_gate(victim: &Subject, victim_ctx: &AccessContext, obj: &FsObject, snapshot: &Snapshot) -> bool {
    if !snapshot.meta.scoped_storage_enabled || !obj.mount.external_storage {
        return true;
    }
    let Some(scoped) = &obj.entry.scoped else {
        return true;
    };
    let owned = scoped
        .owner_package
        .as_ref()
        .is_some_and(|owner| victim.packages.contains(owner));
    let perms = victim
        .granted_storage_perms
        .union(victim_ctx.assumed_storage_perms);
    owned || perms.rex || perms.mes || victim.legacy
}

/// Converts the violations on one object into attack operations:
/// modification needs a writable filesystem, squatting additionally clears
/// the Scoped Storage read gate (otherwise it is recorded as prevented),
/// traversals need symlink support, and luring also needs a victim that does
/// not use a FileProvider. Deduplicated by (kind, victim, adversary, object).
pub fn compute_attack_ops(
    ivs: &[IntegrityViolation],
    obj: &FsObject,
    inputs: &RuleInputs<'_>,
) -> (Vec<AttackOperation>, Vec<SquatPreventedRecord>) {
    let mut ops: BTreeSet<AttackOperation> = BTreeSet::new();
    let mut prevented: BTreeSet<SquatPreventedRecord> = BTreeSet::new();
    let writable = obj.mount.writable;
    let symlinks = obj.mount.symlinks_allowed;

    for iv in ivs {
        debug_assert_eq!(iv.object, obj.id);
        if !writable {
            continue;
        }
        match iv.kind {
            IvKind::Read | IvKind::Write | IvKind::Exec => {
                ops.insert(AttackOperation {
                    object: iv.object,
                    victim: iv.victim,
                    adversary: iv.adversary,
                    kind: OpKind::FileMod,
                    source_iv_kind: iv.kind,
                });
            }
            IvKind::Binding => {
                let victim = &inputs.subjects[iv.victim];
                if squat_read_gate(victim, &inputs.expanded[iv.victim], obj, inputs.snapshot) {
                    ops.insert(AttackOperation {
                        object: iv.object,
                        victim: iv.victim,
                        adversary: iv.adversary,
                        kind: OpKind::FileSquat,
                        source_iv_kind: IvKind::Binding,
                    });
                } else {
                    prevented.insert(SquatPreventedRecord {
                        object: iv.object,
                        victim: iv.victim,
                        adversary: iv.adversary,
                        reason: SQUAT_PREVENTED_REASON.to_string(),
                    });
                }
                if symlinks {
                    ops.insert(AttackOperation {
                        object: iv.object,
                        victim: iv.victim,
                        adversary: iv.adversary,
                        kind: OpKind::LinkTraversal,
                        source_iv_kind: IvKind::Binding,
                    });
                }
            }
            IvKind::Pathname => {
                if symlinks && !inputs.subjects[iv.victim].uses_file_provider {
                    ops.insert(AttackOperation {
                        object: iv.object,
                        victim: iv.victim,
                        adversary: iv.adversary,
                        kind: OpKind::LuringTraversal,
                        source_iv_kind: IvKind::Pathname,
                    });
                }
            }
        }
    }

    // (kind, victim, adversary, object) identity: keep the lowest source IV
    // kind when several file IVs feed the same modification op.
    let mut deduped: Vec<AttackOperation> = Vec::with_capacity(ops.len());
    for op in ops {
        match deduped.last() {
            Some(last)
                if (last.object, last.victim, last.adversary, last.kind)
                    == (op.object, op.victim, op.adversary, op.kind) => {}
            _ => deduped.push(op),
        }
    }
    (deduped, prevented.into_iter().collect())
}

/// Full per-object evaluation, the unit of parallel work.
pub fn analyze_object(
    obj: &FsObject,
    inputs: &RuleInputs<'_>,
) -> (
    Vec<IntegrityViolation>,
    Vec<AttackOperation>,
    Vec<SquatPreventedRecord>,
) {
    let mut ivs = match obj.kind() {
        FsKind::File => compute_file_ivs(obj, inputs),
        FsKind::Dir => {
            let mut ivs = compute_binding_ivs(obj, inputs);
            ivs.extend(compute_pathname_ivs(obj, inputs));
            ivs
        }
        // Symlinks are attack products, not use targets: no violations of
        // their own.
        FsKind::Symlink => Vec::new(),
    };
    ivs.sort_unstable();
    let (ops, prevented) = compute_attack_ops(&ivs, obj, inputs);
    (ivs, ops, prevented)
}
