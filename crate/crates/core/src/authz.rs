//! Per-policy authorization predicates and their restrictive composition.
//!
//! Android-style access control is restrictive: an operation is authorized
//! only when every policy model agrees. That lets each model live behind the
//! same [`PolicyModel`] trait and be evaluated independently; composing a new
//! model is registering one more trait object in the [`PolicySet`].

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::labeling::{FsObject, StoragePerms, Subject};
use crate::snapshot::{
    ConsentAccess, FsKind, MacPolicy, Snapshot, TeClass, TePerm, UserConsent, Visibility,
};

/// Access kinds. Files take `Read`/`Write`/`Exec` (symlinks too, evaluated
/// against the `lnk_file` class); directories take the binding kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Access {
    Read,
    Write,
    Exec,
    UseBinding,
    WriteBinding,
}

impl Access {
    pub fn is_write_like(self) -> bool {
        matches!(self, Access::Write | Access::WriteBinding)
    }
}

/// The permission state a subject brings to an authorization check, after
/// expansion. `dac_override_owned` is the victim-expansion mode: the paired
/// adversary is assumed to have granted world access to objects it owns.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AccessContext {
    pub effective_groups: BTreeSet<u32>,
    pub dac_override_owned: bool,
    pub assumed_storage_perms: StoragePerms,
}

impl AccessContext {
    pub fn base(subject: &Subject) -> AccessContext {
        AccessContext {
            effective_groups: subject.groups.clone(),
            dac_override_owned: false,
            assumed_storage_perms: StoragePerms::default(),
        }
    }
}

// TE permission bitmask, one bit per TePerm.
pub type TePermMask = u8;

pub const TE_READ: TePermMask = 1;
pub const TE_WRITE: TePermMask = 1 << 1;
pub const TE_EXECUTE: TePermMask = 1 << 2;
pub const TE_OPEN: TePermMask = 1 << 3;
pub const TE_SEARCH: TePermMask = 1 << 4;
pub const TE_ADD_NAME: TePermMask = 1 << 5;
pub const TE_REMOVE_NAME: TePermMask = 1 << 6;

fn te_perm_bit(perm: TePerm) -> TePermMask {
    match perm {
        TePerm::Read => TE_READ,
        TePerm::Write => TE_WRITE,
        TePerm::Execute => TE_EXECUTE,
        TePerm::Open => TE_OPEN,
        TePerm::Search => TE_SEARCH,
        TePerm::AddName => TE_ADD_NAME,
        TePerm::RemoveName => TE_REMOVE_NAME,
    }
}

/// TE perms an access kind requires: directory writes need both `write` and
/// `add_name` since squatting and link planting create directory entries.
pub fn required_te_perms(access: Access) -> TePermMask {
    match access {
        Access::Read => TE_READ,
        Access::Write => TE_WRITE,
        Access::Exec => TE_EXECUTE,
        Access::UseBinding => TE_SEARCH,
        Access::WriteBinding => TE_WRITE | TE_ADD_NAME,
    }
}

fn class_index(class: TeClass) -> usize {
    match class {
        TeClass::File => 0,
        TeClass::Dir => 1,
        TeClass::LnkFile => 2,
    }
}

/// Flattened TE rule lookup: interned labels/types, per-class permission
/// masks with duplicate rules unioned.
#[derive(Debug, Default)]
pub struct MacIndex {
    sources: HashMap<String, u32>,
    targets: HashMap<String, u32>,
    perms: HashMap<(u32, u32), [TePermMask; 3]>,
}

impl MacIndex {
    pub fn build(policy: &MacPolicy) -> MacIndex {
        let mut index = MacIndex::default();
        for rule in &policy.te_rules {
            let next_source = index.sources.len() as u32;
            let source = *index
                .sources
                .entry(rule.source_type.clone())
                .or_insert(next_source);
            let next_target = index.targets.len() as u32;
            let target = *index
                .targets
                .entry(rule.target_type.clone())
                .or_insert(next_target);
            let mask: TePermMask = rule.perms.iter().map(|p| te_perm_bit(*p)).fold(0, |a, b| a | b);
            index.perms.entry((source, target)).or_default()[class_index(rule.class)] |= mask;
        }
        index
    }

    pub fn source_id(&self, label: &str) -> Option<u32> {
        self.sources.get(label).copied()
    }

    pub fn target_id(&self, selinux_type: &str) -> Option<u32> {
        self.targets.get(selinux_type).copied()
    }

    pub fn allows_ids(
        &self,
        source: Option<u32>,
        target: Option<u32>,
        class: TeClass,
        required: TePermMask,
    ) -> bool {
        let (Some(source), Some(target)) = (source, target) else {
            return false; // default deny: the pair appears in no rule
        };
        match self.perms.get(&(source, target)) {
            Some(masks) => masks[class_index(class)] & required == required,
            None => false,
        }
    }

    pub fn allows(
        &self,
        subj_label: &str,
        selinux_type: &str,
        class: TeClass,
        required: TePermMask,
    ) -> bool {
        self.allows_ids(
            self.source_id(subj_label),
            self.target_id(selinux_type),
            class,
            required,
        )
    }
}

/// Type Enforcement decision: a rule from the subject's label to the object's
/// type, for the object's class, must grant every required permission.
pub fn mac_allows(index: &MacIndex, subj_label: &str, obj: &FsObject, access: Access) -> bool {
    index.allows(
        subj_label,
        &obj.entry.selinux_type,
        TeClass::for_kind(obj.kind()),
        required_te_perms(access),
    )
}

/// MLS decision: category-set dominance, `obj ⊆ subj`, for every access kind.
pub fn mls_allows(subj_cats: &BTreeSet<u16>, obj_cats: &BTreeSet<u16>) -> bool {
    obj_cats.is_subset(subj_cats)
}

fn dac_bits_for(access: Access) -> u16 {
    // r=4, w=2, x=1 within a triad
    match access {
        Access::Read => 0o4,
        Access::Write => 0o2,
        Access::Exec => 0o1,
        Access::UseBinding => 0o1,
        Access::WriteBinding => 0o3,
    }
}

/// POSIX mode-bit decision. Root bypasses DAC entirely. In victim-expansion
/// mode an object owned by the paired adversary is treated as mode 0777,
/// modeling the adversary chmod-ing resources it owns to lure victims.
pub fn dac_allows(
    subj: &Subject,
    ctx: &AccessContext,
    obj: &FsObject,
    access: Access,
    adversary: Option<&Subject>,
) -> bool {
    if subj.uid == 0 {
        return true;
    }
    let mode = if ctx.dac_override_owned
        && adversary.is_some_and(|adv| adv.uid == obj.entry.dac_uid)
    {
        0o777
    } else {
        obj.entry.mode.bits()
    };
    let triad = if subj.uid == obj.entry.dac_uid {
        (mode >> 6) & 0o7
    } else if subj.gid == obj.entry.dac_gid || ctx.effective_groups.contains(&obj.entry.dac_gid) {
        (mode >> 3) & 0o7
    } else {
        mode & 0o7
    };
    let required = dac_bits_for(access);
    triad & required == required
}

fn consent_covers(consent: &UserConsent, path: &str) -> bool {
    path == consent.path
        || (path.len() > consent.path.len()
            && path.starts_with(&consent.path)
            && path.as_bytes()[consent.path.len()] == b'/')
}

/// Scoped Storage decision. Applies only to external-storage objects while
/// the defense is enabled; subjects with no package identity (system daemons)
/// are outside its mediation. Shared directories open up for reads via REX
/// and for writes via SAF consent; MES holds full access; legacy subjects
/// keep pre-Scoped reach including the external-storage root, which is
/// closed to compliant subjects.
pub fn scoped_allows(
    subj: &Subject,
    ctx: &AccessContext,
    obj: &FsObject,
    access: Access,
    consents: &[UserConsent],
    scoped_storage_enabled: bool,
) -> bool {
    if !scoped_storage_enabled || !obj.mount.external_storage {
        return true;
    }
    let Some(scoped) = &obj.entry.scoped else {
        return true; // no ownership record, nothing to mediate
    };
    if subj.scoped_exempt() {
        return true;
    }

    let perms = subj.granted_storage_perms.union(ctx.assumed_storage_perms);
    let owned = scoped
        .owner_package
        .as_ref()
        .is_some_and(|owner| subj.packages.contains(owner));

    match scoped.visibility {
        Visibility::Private => owned || perms.mes,
        Visibility::Shared if !access.is_write_like() => {
            owned || perms.rex || perms.mes || subj.legacy
        }
        Visibility::Shared => {
            owned
                || perms.mes
                || subj.legacy
                || consents.iter().any(|c| {
                    c.access.contains(&ConsentAccess::Write)
                        && subj.packages.contains(&c.package)
                        && consent_covers(c, &obj.entry.path)
                })
        }
        Visibility::LegacyRoot => subj.legacy || perms.mes,
    }
}

/// Strict intersection of all four policy decisions.
#[allow(clippy::too_many_arguments)]
pub fn authorize(
    subj: &Subject,
    ctx: &AccessContext,
    obj: &FsObject,
    access: Access,
    consents: &[UserConsent],
    mac: &MacIndex,
    scoped_storage_enabled: bool,
    adversary: Option<&Subject>,
) -> bool {
    dac_allows(subj, ctx, obj, access, adversary)
        && mac_allows(mac, &subj.mac_label, obj, access)
        && mls_allows(&subj.mls_categories, &obj.entry.mls_categories)
        && scoped_allows(subj, ctx, obj, access, consents, scoped_storage_enabled)
}

/// One authorization question, shared by every policy model.
pub struct AccessQuery<'a> {
    pub subject: &'a Subject,
    pub ctx: &'a AccessContext,
    pub object: &'a FsObject,
    pub access: Access,
    pub adversary: Option<&'a Subject>,
}

/// A single policy model's view of an access decision.
pub trait PolicyModel: Send + Sync {
    fn name(&self) -> &'static str;
    fn allows(&self, query: &AccessQuery<'_>) -> bool;
}

pub struct TePolicy {
    index: MacIndex,
}

impl TePolicy {
    pub fn new(policy: &MacPolicy) -> TePolicy {
        TePolicy {
            index: MacIndex::build(policy),
        }
    }

    pub fn index(&self) -> &MacIndex {
        &self.index
    }
}

impl PolicyModel for TePolicy {
    fn name(&self) -> &'static str {
        "te"
    }

    fn allows(&self, query: &AccessQuery<'_>) -> bool {
        mac_allows(&self.index, &query.subject.mac_label, query.object, query.access)
    }
}

pub struct MlsPolicy;

impl PolicyModel for MlsPolicy {
    fn name(&self) -> &'static str {
        "mls"
    }

    fn allows(&self, query: &AccessQuery<'_>) -> bool {
        mls_allows(
            &query.subject.mls_categories,
            &query.object.entry.mls_categories,
        )
    }
}

pub struct DacPolicy;

impl PolicyModel for DacPolicy {
    fn name(&self) -> &'static str {
        "dac"
    }

    fn allows(&self, query: &AccessQuery<'_>) -> bool {
        dac_allows(
            query.subject,
            query.ctx,
            query.object,
            query.access,
            query.adversary,
        )
    }
}

pub struct ScopedStoragePolicy {
    consents: Vec<UserConsent>,
    enabled: bool,
}

impl ScopedStoragePolicy {
    pub fn new(snapshot: &Snapshot) -> ScopedStoragePolicy {
        ScopedStoragePolicy {
            consents: snapshot.user_consents.clone(),
            enabled: snapshot.meta.scoped_storage_enabled,
        }
    }
}

impl PolicyModel for ScopedStoragePolicy {
    fn name(&self) -> &'static str {
        "scoped"
    }

    fn allows(&self, query: &AccessQuery<'_>) -> bool {
        scoped_allows(
            query.subject,
            query.ctx,
            query.object,
            query.access,
            &self.consents,
            self.enabled,
        )
    }
}

#[derive(Debug, Error)]
#[error("unknown policy model \"{name}\", expected one of {STANDARD_POLICIES:?}")]
pub struct UnknownPolicyError {
    pub name: String,
}

/// The stock policy registry, in evaluation order.
pub const STANDARD_POLICIES: [&str; 4] = ["dac", "te", "mls", "scoped"];

/// A restrictive composition of policy models. Decisions are the conjunction
/// over every registered model, so models can be added or ablated without
/// touching each other.
pub struct PolicySet {
    models: Vec<Box<dyn PolicyModel>>,
}

impl PolicySet {
    /// Registers the four standard Android models (DAC, TE, MLS, Scoped
    /// Storage) for the given snapshot.
    pub fn standard(snapshot: &Snapshot) -> PolicySet {
        PolicySet::from_names(STANDARD_POLICIES.iter().copied(), snapshot)
            .expect("standard names are registered")
    }

    /// Builds a composition from model names; unknown names are rejected.
    pub fn from_names<'a>(
        names: impl IntoIterator<Item = &'a str>,
        snapshot: &Snapshot,
    ) -> Result<PolicySet, UnknownPolicyError> {
        let mut models: Vec<Box<dyn PolicyModel>> = Vec::new();
        for name in names {
            let model: Box<dyn PolicyModel> = match name {
                "te" => Box::new(TePolicy::new(&snapshot.mac_policy)),
                "mls" => Box::new(MlsPolicy),
                "dac" => Box::new(DacPolicy),
                "scoped" => Box::new(ScopedStoragePolicy::new(snapshot)),
                other => {
                    return Err(UnknownPolicyError {
                        name: other.to_string(),
                    })
                }
            };
            models.push(model);
        }
        Ok(PolicySet { models })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.models.iter().map(|m| m.name()).collect()
    }

    pub fn authorize(&self, query: &AccessQuery<'_>) -> bool {
        self.models.iter().all(|m| m.allows(query))
    }
}

/// The per-object subject sets the rule stage consumes. Mount writability is
/// deliberately not applied here; it gates attack operations, not authority.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AccessSets {
    pub readers: Vec<usize>,
    pub writers: Vec<usize>,
    pub executors: Vec<usize>,
    pub binding_users: Vec<usize>,
    pub binding_writers: Vec<usize>,
}

/// Computes the five subject sets for one object under the given per-subject
/// contexts. Deterministic: ids ascend.
pub fn access_sets(
    obj: &FsObject,
    subjects: &[Subject],
    contexts: &[AccessContext],
    policies: &PolicySet,
) -> AccessSets {
    let mut sets = AccessSets::default();
    for subject in subjects {
        let ctx = &contexts[subject.id];
        let mut query = AccessQuery {
            subject,
            ctx,
            object: obj,
            access: Access::Read,
            adversary: None,
        };
        match obj.kind() {
            FsKind::Dir => {
                query.access = Access::UseBinding;
                if policies.authorize(&query) {
                    sets.binding_users.push(subject.id);
                }
                query.access = Access::WriteBinding;
                if policies.authorize(&query) {
                    sets.binding_writers.push(subject.id);
                }
            }
            FsKind::File | FsKind::Symlink => {
                if policies.authorize(&query) {
                    sets.readers.push(subject.id);
                }
                query.access = Access::Write;
                if policies.authorize(&query) {
                    sets.writers.push(subject.id);
                }
                query.access = Access::Exec;
                if policies.authorize(&query) {
                    sets.executors.push(subject.id);
                }
            }
        }
    }
    sets
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snapshot::{FsEntry, Mode, MountInfo, PrivilegeLevel, ScopedMeta, TeRule};

    fn subject(uid: u32, label: &str) -> Subject {
        Subject {
            id: 0,
            mac_label: label.into(),
            mls_categories: BTreeSet::new(),
            uid,
            gid: uid,
            groups: [uid].into(),
            packages: BTreeSet::new(),
            legacy: false,
            granted_storage_perms: StoragePerms::default(),
            privilege_level: PrivilegeLevel::T1,
            accepts_external_pathnames: false,
            uses_file_provider: false,
        }
    }

    fn object(kind: FsKind, uid: u32, mode: u16, external: bool) -> FsObject {
        FsObject {
            id: 0,
            entry: FsEntry {
                path: "/obj".into(),
                kind,
                dac_uid: uid,
                dac_gid: uid,
                mode: Mode(mode),
                selinux_type: "obj_type".into(),
                mls_categories: BTreeSet::new(),
                scoped: None,
            },
            mount: MountInfo {
                path_prefix: "/".into(),
                writable: true,
                symlinks_allowed: true,
                external_storage: external,
            },
            is_binding: kind == FsKind::Dir,
            owner_subjects: BTreeSet::new(),
        }
    }

    fn index_with(perms: &[TePerm], class: TeClass) -> MacIndex {
        MacIndex::build(&MacPolicy {
            te_rules: vec![TeRule {
                source_type: "subj_type".into(),
                target_type: "obj_type".into(),
                class,
                perms: perms.iter().copied().collect(),
            }],
        })
    }

    #[test]
    fn mac_rule_hit_and_default_deny() {
        let index = index_with(
            &[TePerm::Search, TePerm::Write, TePerm::AddName],
            TeClass::Dir,
        );
        let dir = object(FsKind::Dir, 0, 0o777, false);
        let mut subj = subject(1, "subj_type");
        assert!(mac_allows(&index, &subj.mac_label, &dir, Access::UseBinding));
        assert!(mac_allows(&index, &subj.mac_label, &dir, Access::WriteBinding));
        subj.mac_label = "other_type".into();
        assert!(!mac_allows(&index, &subj.mac_label, &dir, Access::UseBinding));
    }

    #[test]
    fn mac_requires_every_bit() {
        let index = index_with(&[TePerm::Write], TeClass::Dir);
        let dir = object(FsKind::Dir, 0, 0o777, false);
        // write without add_name is not enough to modify a binding
        assert!(!mac_allows(&index, "subj_type", &dir, Access::WriteBinding));
    }

    #[test]
    fn mls_dominance() {
        assert!(mls_allows(&BTreeSet::new(), &BTreeSet::new()));
        assert!(mls_allows(&[12, 34].into(), &[12].into()));
        assert!(!mls_allows(&[34].into(), &[12].into()));
    }

    #[test]
    fn dac_root_bypass_and_other_bits() {
        let root = subject(0, "kernel");
        let obj = object(FsKind::File, 1000, 0o000, false);
        let ctx = AccessContext::base(&root);
        assert!(dac_allows(&root, &ctx, &obj, Access::Write, None));

        let other = subject(4242, "app");
        let ctx = AccessContext::base(&other);
        let obj = object(FsKind::File, 1000, 0o644, false);
        assert!(dac_allows(&other, &ctx, &obj, Access::Read, None));
        assert!(!dac_allows(&other, &ctx, &obj, Access::Write, None));
    }

    #[test]
    fn dac_group_triad_via_effective_groups() {
        let mut subj = subject(4242, "app");
        let mut obj = object(FsKind::File, 1000, 0o640, false);
        obj.entry.dac_gid = 1007;
        let mut ctx = AccessContext::base(&subj);
        assert!(!dac_allows(&subj, &ctx, &obj, Access::Read, None));
        ctx.effective_groups.insert(1007);
        assert!(dac_allows(&subj, &ctx, &obj, Access::Read, None));
        subj.gid = 1007;
        let ctx = AccessContext::base(&subj);
        assert!(dac_allows(&subj, &ctx, &obj, Access::Read, None));
    }

    #[test]
    fn dac_override_applies_only_to_adversary_owned() {
        let victim = subject(1000, "system_server");
        let adversary = subject(10099, "untrusted_app");
        let owned = object(FsKind::Dir, 10099, 0o700, false);
        let unowned = object(FsKind::Dir, 1023, 0o700, false);
        let mut ctx = AccessContext::base(&victim);
        ctx.dac_override_owned = true;
        assert!(dac_allows(&victim, &ctx, &owned, Access::UseBinding, Some(&adversary)));
        assert!(!dac_allows(&victim, &ctx, &unowned, Access::UseBinding, Some(&adversary)));
        let plain = AccessContext::base(&victim);
        assert!(!dac_allows(&victim, &plain, &owned, Access::UseBinding, Some(&adversary)));
    }

    fn scoped_object(visibility: Visibility, owner: Option<&str>) -> FsObject {
        let mut obj = object(FsKind::Dir, 1023, 0o777, true);
        obj.entry.scoped = Some(ScopedMeta {
            owner_package: owner.map(String::from),
            visibility,
        });
        obj
    }

    #[test]
    fn scoped_legacy_root_closed_to_compliant_apps() {
        let mut subj = subject(10001, "untrusted_app");
        subj.packages.insert("com.app".into());
        let ctx = AccessContext::base(&subj);
        let obj = scoped_object(Visibility::LegacyRoot, None);
        assert!(!scoped_allows(&subj, &ctx, &obj, Access::Read, &[], true));

        let mut legacy = subj.clone();
        legacy.legacy = true;
        assert!(scoped_allows(&legacy, &ctx, &obj, Access::WriteBinding, &[], true));

        let mut mes = subj.clone();
        mes.granted_storage_perms.mes = true;
        assert!(scoped_allows(&mes, &ctx, &obj, Access::Read, &[], true));
    }

    #[test]
    fn scoped_shared_rules() {
        let mut subj = subject(10001, "untrusted_app");
        subj.packages.insert("com.app".into());
        let ctx = AccessContext::base(&subj);
        let obj = scoped_object(Visibility::Shared, Some("com.other"));

        assert!(!scoped_allows(&subj, &ctx, &obj, Access::Read, &[], true));
        let mut rex = subj.clone();
        rex.granted_storage_perms.rex = true;
        assert!(scoped_allows(&rex, &ctx, &obj, Access::UseBinding, &[], true));
        assert!(!scoped_allows(&rex, &ctx, &obj, Access::WriteBinding, &[], true));

        let mut legacy = subj.clone();
        legacy.legacy = true;
        assert!(scoped_allows(&legacy, &ctx, &obj, Access::WriteBinding, &[], true));

        let consent = UserConsent {
            package: "com.app".into(),
            path: "/obj".into(),
            access: [ConsentAccess::Write].into(),
        };
        assert!(scoped_allows(&subj, &ctx, &obj, Access::Write, &[consent], true));
    }

    #[test]
    fn scoped_private_needs_owner_or_mes() {
        let mut owner = subject(10001, "untrusted_app");
        owner.packages.insert("com.owner".into());
        let ctx = AccessContext::base(&owner);
        let obj = scoped_object(Visibility::Private, Some("com.owner"));
        assert!(scoped_allows(&owner, &ctx, &obj, Access::Write, &[], true));

        let mut stranger = subject(10002, "untrusted_app");
        stranger.packages.insert("com.other".into());
        stranger.legacy = true;
        let sctx = AccessContext::base(&stranger);
        assert!(!scoped_allows(&stranger, &sctx, &obj, Access::Write, &[], true));
        stranger.granted_storage_perms.mes = true;
        assert!(scoped_allows(&stranger, &sctx, &obj, Access::Write, &[], true));
    }

    #[test]
    fn scoped_not_applicable_cases() {
        let subj = subject(10001, "untrusted_app");
        let ctx = AccessContext::base(&subj);
        let internal = object(FsKind::File, 0, 0o000, false);
        assert!(scoped_allows(&subj, &ctx, &internal, Access::Write, &[], true));
        let external = scoped_object(Visibility::Private, Some("com.x"));
        assert!(scoped_allows(&subj, &ctx, &external, Access::Write, &[], false));
    }

    #[test]
    fn package_less_subjects_bypass_scoped() {
        let daemon = subject(1000, "system_server");
        let ctx = AccessContext::base(&daemon);
        let obj = scoped_object(Visibility::LegacyRoot, None);
        assert!(scoped_allows(&daemon, &ctx, &obj, Access::Read, &[], true));
    }

    #[test]
    fn authorize_is_strict_intersection() {
        // one subject that passes all four, then flip each policy off in turn
        let mut subj = subject(10001, "subj_type");
        subj.packages.insert("com.app".into());
        subj.legacy = true;
        let ctx = AccessContext::base(&subj);
        let index = index_with(&[TePerm::Read], TeClass::File);
        let mut obj = object(FsKind::File, 10001, 0o600, true);
        obj.entry.scoped = Some(ScopedMeta {
            owner_package: None,
            visibility: Visibility::LegacyRoot,
        });

        assert!(authorize(&subj, &ctx, &obj, Access::Read, &[], &index, true, None));

        let mut mac_off = obj.clone();
        mac_off.entry.selinux_type = "unrelated".into();
        assert!(!authorize(&subj, &ctx, &mac_off, Access::Read, &[], &index, true, None));

        let mut mls_off = obj.clone();
        mls_off.entry.mls_categories.insert(7);
        assert!(!authorize(&subj, &ctx, &mls_off, Access::Read, &[], &index, true, None));

        let mut dac_off = obj.clone();
        dac_off.entry.dac_uid = 1;
        dac_off.entry.mode = Mode(0o700);
        assert!(!authorize(&subj, &ctx, &dac_off, Access::Read, &[], &index, true, None));

        let mut scoped_off = subj.clone();
        scoped_off.legacy = false;
        assert!(!authorize(&scoped_off, &ctx, &obj, Access::Read, &[], &index, true, None));
    }

    #[test]
    fn policy_set_rejects_unknown_names() {
        let snapshot = crate::synthgen::generate(&crate::synthgen::GenParams {
            seed: 1,
            subject_count: 0,
            object_count: 0,
            legacy_fraction: 0.0,
            external_fraction: 0.0,
            scoped_storage_enabled: true,
            skew: 1.0,
        });
        assert!(PolicySet::from_names(["dac", "rbac"], &snapshot).is_err());
        let set = PolicySet::standard(&snapshot);
        assert_eq!(set.names(), vec!["dac", "te", "mls", "scoped"]);
    }
}
