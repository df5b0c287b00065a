//! Permission expansion: the policy changes adversaries can force before any
//! attack, for themselves (obtaining their declared Android permissions) and
//! for victims (granting access to adversary-owned resources, plus assumed
//! REX/WEX on pre-Scoped systems).

use serde::{Deserialize, Serialize};

use crate::authz::AccessContext;
use crate::labeling::{FsObject, StoragePerms, Subject};
use crate::snapshot::{Snapshot, PERM_REX, PERM_WEX};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpansionConfig {
    pub adversary_expansion: bool,
    pub victim_expansion: bool,
    /// On pre-Scoped systems victims are assumed able to obtain REX/WEX,
    /// since most apps requested them for shared external storage.
    pub prescoped_assume_rex_wex: bool,
}

impl Default for ExpansionConfig {
    fn default() -> Self {
        ExpansionConfig {
            adversary_expansion: true,
            victim_expansion: true,
            prescoped_assume_rex_wex: true,
        }
    }
}

fn add_mapped_gids(ctx: &mut AccessContext, snapshot: &Snapshot, permission: &str) {
    if let Some(gids) = snapshot.permission_group_map.get(permission) {
        ctx.effective_groups.extend(gids.iter().copied());
    }
}

/// Expands a subject's own permissions: every declared permission of every
/// mapped package is assumed granted, pulling in its DAC groups through the
/// permission-group map and its REX/WEX/MES storage grants. WEX is dropped
/// from the assumed storage set on Scoped systems (deprecated there).
pub fn expand_adversary(
    subject: &Subject,
    snapshot: &Snapshot,
    config: &ExpansionConfig,
) -> AccessContext {
    let mut ctx = AccessContext::base(subject);
    if !config.adversary_expansion {
        return ctx;
    }
    let mut declared_storage = StoragePerms::default();
    for package in snapshot
        .packages
        .iter()
        .filter(|p| subject.packages.contains(&p.name))
    {
        for permission in &package.declared_permissions {
            add_mapped_gids(&mut ctx, snapshot, permission);
        }
        declared_storage = declared_storage.union(StoragePerms::from_declared(
            package.declared_permissions.iter().map(String::as_str),
        ));
    }
    if snapshot.meta.scoped_storage_enabled {
        declared_storage.wex = false;
    }
    ctx.assumed_storage_perms = declared_storage;
    ctx
}

/// The victim-side context helper: the adversary-expanded context plus the
/// owned-object DAC override, plus assumed REX/WEX (and their mapped groups)
/// on pre-Scoped snapshots. Object-independent; [`expand_victim`] decides
/// where it applies.
pub fn victim_expanded_context(
    victim: &Subject,
    snapshot: &Snapshot,
    config: &ExpansionConfig,
) -> AccessContext {
    let mut ctx = expand_adversary(victim, snapshot, config);
    if !config.victim_expansion {
        return ctx;
    }
    ctx.dac_override_owned = true;
    if config.prescoped_assume_rex_wex && !snapshot.meta.scoped_storage_enabled {
        ctx.assumed_storage_perms.rex = true;
        ctx.assumed_storage_perms.wex = true;
        add_mapped_gids(&mut ctx, snapshot, PERM_REX);
        add_mapped_gids(&mut ctx, snapshot, PERM_WEX);
    }
    ctx
}

/// Victim permission expansion against one adversary and object. On external
/// storage under Scoped Storage the context is returned unchanged: an
/// adversary cannot alter other apps' permissions there and victims no longer
/// need REX/WEX. The returned context's DAC override binds to the adversary
/// passed to the DAC check.
pub fn expand_victim(
    victim: &Subject,
    _adversary: &Subject,
    obj: &FsObject,
    snapshot: &Snapshot,
    config: &ExpansionConfig,
) -> AccessContext {
    if obj.mount.external_storage && snapshot.meta.scoped_storage_enabled {
        return expand_adversary(victim, snapshot, config);
    }
    victim_expanded_context(victim, snapshot, config)
}
