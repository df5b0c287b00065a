//! Deterministic synthetic snapshot generation for property tests and the
//! parallel-scaling benchmark. Densities are shaped by a zipf-style decay so
//! a few objects carry most of the rule-evaluation cost, mirroring real
//! policies where some types are readable by half the system.

use std::collections::{BTreeMap, BTreeSet};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::labeling::default_privilege_map;
use crate::snapshot::{
    ConsentAccess, FsEntry, FsKind, MacPolicy, Meta, Mode, MountInfo, PackageDecl,
    PrivilegeLevel, PrivilegeMapEntry, ScopedMeta, Snapshot, SubjectDecl, TeClass, TePerm,
    TeRule, UserConsent, Visibility, PERM_MES, PERM_REX, PERM_WEX, SNAPSHOT_SCHEMA,
};

#[derive(Debug, Clone, PartialEq)]
pub struct GenParams {
    pub seed: u64,
    pub subject_count: usize,
    pub object_count: usize,
    /// Probability that an app package keeps legacy storage semantics.
    pub legacy_fraction: f64,
    /// Fraction of objects placed on the external-storage mount.
    pub external_fraction: f64,
    pub scoped_storage_enabled: bool,
    /// Zipf exponent shaping per-object rule density.
    pub skew: f64,
}

impl GenParams {
    pub fn small(seed: u64, scoped_storage_enabled: bool) -> GenParams {
        GenParams {
            seed,
            subject_count: 30,
            object_count: 150,
            legacy_fraction: 0.2,
            external_fraction: 0.4,
            scoped_storage_enabled,
            skew: 1.0,
        }
    }
}

const PERM_POOL: &[(&str, &[u32])] = &[
    ("android.permission.READ_LOGS", &[1007]),
    ("android.permission.ACCESS_CACHE_FILESYSTEM", &[2001]),
    ("com.oem.permission.DATA_SERVICE", &[5001]),
    (PERM_REX, &[1028]),
    (PERM_WEX, &[1015]),
];

// Modes are drawn group-dominant (group triad grants at least the other
// triad) so that group expansion only ever widens access.
const DIR_MODES: &[u16] = &[0o777, 0o771, 0o755, 0o750, 0o700];
const FILE_MODES: &[u16] = &[0o666, 0o664, 0o644, 0o640, 0o600, 0o755];

fn pick<'a, T>(rng: &mut ChaCha8Rng, items: &'a [T]) -> &'a T {
    &items[rng.gen_range(0..items.len())]
}

struct AppSubject {
    uid: u32,
    packages: Vec<String>,
}

/// Generates a snapshot that always validates with zero errors; identical
/// params produce identical snapshots (counter-based PRNG stream).
pub fn generate(params: &GenParams) -> Snapshot {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let legacy_fraction = params.legacy_fraction.clamp(0.0, 1.0);
    let external_fraction = params.external_fraction.clamp(0.0, 1.0);

    let mounts = vec![
        MountInfo {
            path_prefix: "/".to_string(),
            writable: true,
            symlinks_allowed: true,
            external_storage: false,
        },
        MountInfo {
            path_prefix: "/system".to_string(),
            writable: false,
            symlinks_allowed: true,
            external_storage: false,
        },
        MountInfo {
            path_prefix: "/data".to_string(),
            writable: true,
            symlinks_allowed: true,
            external_storage: false,
        },
        MountInfo {
            path_prefix: "/sdcard".to_string(),
            writable: true,
            symlinks_allowed: false,
            external_storage: true,
        },
    ];

    let mut privilege_map = default_privilege_map();
    privilege_map.push(PrivilegeMapEntry {
        pattern: "app_domain_*".to_string(),
        level: PrivilegeLevel::T1,
    });

    let mut subjects = Vec::new();
    let mut packages = Vec::new();
    let mut apps: Vec<AppSubject> = Vec::new();

    for i in 0..params.subject_count {
        match i {
            // a package-less system daemon that accepts external pathnames
            0 => subjects.push(SubjectDecl {
                mac_label: "system_server".to_string(),
                mls_categories: BTreeSet::new(),
                uid: 1000,
                gid: 1000,
                supplementary_groups: [1007, 3003].into(),
                packages: BTreeSet::new(),
                privilege_level: None,
                accepts_external_pathnames: true,
                uses_file_provider: false,
            }),
            // a vetted file manager holding MES
            1 => {
                packages.push(PackageDecl {
                    name: "com.gen.filemanager".to_string(),
                    uid: 10001,
                    declared_permissions: [PERM_MES.to_string(), PERM_REX.to_string()].into(),
                    legacy_storage: false,
                    uses_file_provider: rng.gen_bool(0.5),
                });
                subjects.push(SubjectDecl {
                    mac_label: "priv_app".to_string(),
                    mls_categories: BTreeSet::new(),
                    uid: 10001,
                    gid: 10001,
                    supplementary_groups: BTreeSet::new(),
                    packages: BTreeSet::new(),
                    privilege_level: Some(PrivilegeLevel::T3),
                    accepts_external_pathnames: true,
                    uses_file_provider: false,
                });
            }
            2 => subjects.push(SubjectDecl {
                mac_label: "init".to_string(),
                mls_categories: BTreeSet::new(),
                uid: 0,
                gid: 0,
                supplementary_groups: BTreeSet::new(),
                packages: BTreeSet::new(),
                privilege_level: None,
                accepts_external_pathnames: false,
                uses_file_provider: false,
            }),
            3 => subjects.push(SubjectDecl {
                mac_label: "mediaserver".to_string(),
                mls_categories: BTreeSet::new(),
                uid: 1013,
                gid: 1013,
                supplementary_groups: [1023].into(),
                packages: BTreeSet::new(),
                privilege_level: None,
                accepts_external_pathnames: rng.gen_bool(0.5),
                uses_file_provider: rng.gen_bool(0.5),
            }),
            _ => {
                let label = format!("app_domain_{i}");
                // every fifth app shares the uid of the one before it,
                // exercising the shared-uid package union
                let shares_uid = i % 5 == 4 && !apps.is_empty();
                let uid = if shares_uid {
                    apps.last().unwrap().uid
                } else {
                    10100 + i as u32
                };
                let mut names = vec![format!("com.gen.app{i}")];
                if i % 7 == 0 {
                    names.push(format!("com.gen.app{i}.extra"));
                }
                for name in &names {
                    let mut declared = BTreeSet::new();
                    for (perm, _) in PERM_POOL {
                        if rng.gen_bool(0.25) {
                            declared.insert(perm.to_string());
                        }
                    }
                    if rng.gen_bool(0.03) {
                        declared.insert(PERM_MES.to_string());
                    }
                    packages.push(PackageDecl {
                        name: name.clone(),
                        uid,
                        declared_permissions: declared,
                        legacy_storage: rng.gen_bool(legacy_fraction),
                        uses_file_provider: rng.gen_bool(0.5),
                    });
                }
                let explicit = if i % 2 == 0 {
                    let roll = rng.gen_range(0..100);
                    let level = match roll {
                        0..=49 => PrivilegeLevel::T1,
                        50..=69 => PrivilegeLevel::T2,
                        70..=84 => PrivilegeLevel::T3,
                        85..=94 => PrivilegeLevel::T4,
                        _ => PrivilegeLevel::T5,
                    };
                    Some(level)
                } else {
                    None
                };
                let mut mls = BTreeSet::new();
                for cat in 1..=8u16 {
                    if rng.gen_bool(0.15) {
                        mls.insert(cat);
                    }
                }
                let mut supplementary = BTreeSet::new();
                if rng.gen_bool(0.3) {
                    supplementary.insert(*pick(&mut rng, &[1007u32, 3003, 9997]));
                }
                subjects.push(SubjectDecl {
                    mac_label: label.clone(),
                    mls_categories: mls,
                    uid,
                    gid: uid,
                    supplementary_groups: supplementary,
                    // explicit list on every third app, uid union elsewhere
                    packages: if i % 3 == 0 {
                        names.iter().cloned().collect()
                    } else {
                        BTreeSet::new()
                    },
                    privilege_level: explicit,
                    accepts_external_pathnames: rng.gen_bool(0.4),
                    uses_file_provider: rng.gen_bool(0.5),
                });
                apps.push(AppSubject {
                    uid,
                    packages: names,
                });
            }
        }
    }

    let mut labels: Vec<String> = subjects.iter().map(|s| s.mac_label.clone()).collect();
    labels.sort();
    labels.dedup();

    // zipf-decayed grant counts per type bucket
    let bucket_count = (params.object_count / 16).clamp(1, 64);
    let max_grants = labels.len().min(48);
    let grants_per_bucket: Vec<usize> = (0..bucket_count)
        .map(|b| {
            let weight = 1.0 / ((b + 1) as f64).powf(params.skew.max(0.0));
            ((max_grants as f64) * weight).round() as usize
        })
        .collect();

    let mut te_rules = Vec::new();
    for (bucket, &grants) in grants_per_bucket.iter().enumerate() {
        let target = format!("gen_type_{bucket:03}");
        let chosen: Vec<&String> = labels.iter().choose_multiple(&mut rng, grants);
        for label in chosen {
            let profile = rng.gen_range(0..100);
            let (file_perms, dir_perms, lnk_perms): (&[TePerm], &[TePerm], &[TePerm]) =
                match profile {
                    0..=44 => (
                        &[TePerm::Read, TePerm::Open],
                        &[TePerm::Read, TePerm::Search],
                        &[TePerm::Read],
                    ),
                    45..=69 => (
                        &[TePerm::Read, TePerm::Write, TePerm::Open],
                        &[TePerm::Read, TePerm::Search, TePerm::Write, TePerm::AddName],
                        &[TePerm::Read, TePerm::Write],
                    ),
                    70..=79 => (
                        &[TePerm::Read, TePerm::Execute, TePerm::Open],
                        &[TePerm::Read, TePerm::Search],
                        &[TePerm::Read],
                    ),
                    _ => (
                        &[TePerm::Read, TePerm::Write, TePerm::Execute, TePerm::Open],
                        &[
                            TePerm::Read,
                            TePerm::Search,
                            TePerm::Write,
                            TePerm::AddName,
                            TePerm::RemoveName,
                        ],
                        &[TePerm::Read, TePerm::Write],
                    ),
                };
            for (class, perms) in [
                (TeClass::File, file_perms),
                (TeClass::Dir, dir_perms),
                (TeClass::LnkFile, lnk_perms),
            ] {
                te_rules.push(TeRule {
                    source_type: label.clone(),
                    target_type: target.clone(),
                    class,
                    perms: perms.iter().copied().collect(),
                });
            }
        }
    }

    let package_names: Vec<String> = packages.iter().map(|p| p.name.clone()).collect();
    let mut filesystem = Vec::new();
    let mut shared_dirs: Vec<String> = Vec::new();

    for i in 0..params.object_count {
        let external = rng.gen_bool(external_fraction);
        let root = if external {
            *pick(&mut rng, &["/sdcard/gen", "/sdcard/shared", "/sdcard/app"])
        } else {
            let roll = rng.gen_range(0..100);
            match roll {
                0..=59 => "/data/gen",
                60..=84 => "/data/app",
                _ => "/system/gen",
            }
        };
        let kind = match rng.gen_range(0..100) {
            0..=24 => FsKind::Dir,
            25..=29 => FsKind::Symlink,
            _ => FsKind::File,
        };
        let bucket = rng.gen_range(0..bucket_count);

        // ownership profile: root / system / media / app-owned
        let (dac_uid, owner_app) = match rng.gen_range(0..100) {
            0..=9 => (0u32, None),
            10..=39 => (1000, None),
            40..=59 => (1023, None),
            _ => match apps.is_empty() {
                true => (1000, None),
                false => {
                    let app = pick(&mut rng, &apps);
                    (app.uid, Some(app.packages[0].clone()))
                }
            },
        };
        let dac_gid = if rng.gen_bool(0.15) {
            *pick(&mut rng, &[1007u32, 1015, 1028, 2001, 5001, 3003])
        } else {
            dac_uid
        };
        let mode = match kind {
            FsKind::Dir => *pick(&mut rng, DIR_MODES),
            _ => *pick(&mut rng, FILE_MODES),
        };
        let mut mls = BTreeSet::new();
        if rng.gen_bool(0.1) {
            mls.insert(rng.gen_range(1..=8u16));
        }

        let scoped = if external {
            let legacy_root = legacy_fraction > 0.0 && rng.gen_bool(legacy_fraction * 0.6);
            if legacy_root {
                Some(ScopedMeta {
                    owner_package: None,
                    visibility: Visibility::LegacyRoot,
                })
            } else {
                let owner = owner_app
                    .filter(|_| rng.gen_bool(0.5))
                    .or_else(|| {
                        (!package_names.is_empty() && rng.gen_bool(0.9))
                            .then(|| pick(&mut rng, &package_names).clone())
                    })
                    .unwrap_or_else(|| "system.media".to_string());
                let visibility = if rng.gen_bool(0.6) {
                    Visibility::Shared
                } else {
                    Visibility::Private
                };
                Some(ScopedMeta {
                    owner_package: Some(owner),
                    visibility,
                })
            }
        } else {
            None
        };

        let path = format!("{root}/obj_{i:06}");
        if kind == FsKind::Dir
            && matches!(&scoped, Some(s) if s.visibility == Visibility::Shared)
        {
            shared_dirs.push(path.clone());
        }
        filesystem.push(FsEntry {
            path,
            kind,
            dac_uid,
            dac_gid,
            mode: Mode(mode),
            selinux_type: format!("gen_type_{bucket:03}"),
            mls_categories: mls,
            scoped,
        });
    }

    let mut user_consents = Vec::new();
    if params.scoped_storage_enabled && !package_names.is_empty() {
        for dir in shared_dirs.iter().take(4) {
            if rng.gen_bool(0.5) {
                let write = rng.gen_bool(0.7);
                user_consents.push(UserConsent {
                    package: pick(&mut rng, &package_names).clone(),
                    path: dir.clone(),
                    access: if write {
                        [ConsentAccess::Write].into()
                    } else {
                        [ConsentAccess::Read].into()
                    },
                });
            }
        }
    }

    let mut permission_group_map = BTreeMap::new();
    for (perm, gids) in PERM_POOL {
        permission_group_map.insert(perm.to_string(), gids.iter().copied().collect());
    }

    Snapshot {
        meta: Meta {
            schema: SNAPSHOT_SCHEMA.to_string(),
            device: format!("synthetic-{}", params.seed),
            android_version: if params.scoped_storage_enabled {
                "11".to_string()
            } else {
                "9".to_string()
            },
            scoped_storage_enabled: params.scoped_storage_enabled,
        },
        mounts,
        filesystem,
        mac_policy: MacPolicy { te_rules },
        subjects,
        packages,
        permission_group_map,
        privilege_map,
        user_consents,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snapshot::validate_snapshot;

    #[test]
    fn empty_params_give_empty_valid_snapshot() {
        let params = GenParams {
            seed: 1,
            subject_count: 0,
            object_count: 0,
            legacy_fraction: 0.0,
            external_fraction: 0.0,
            scoped_storage_enabled: true,
            skew: 1.0,
        };
        let snapshot = generate(&params);
        assert!(snapshot.subjects.is_empty());
        assert!(snapshot.filesystem.is_empty());
        assert!(!validate_snapshot(&snapshot).has_errors());
    }

    #[test]
    fn generation_is_deterministic() {
        let params = GenParams::small(7, true);
        let a = crate::snapshot::serialize_snapshot(&generate(&params));
        let b = crate::snapshot::serialize_snapshot(&generate(&params));
        assert_eq!(a, b);
    }

    #[test]
    fn generated_snapshots_validate_clean() {
        for seed in [1, 7, 13] {
            for scoped in [true, false] {
                let snapshot = generate(&GenParams::small(seed, scoped));
                let report = validate_snapshot(&snapshot);
                assert!(
                    !report.has_errors(),
                    "seed {seed} scoped {scoped}: {:?}",
                    report.errors().collect::<Vec<_>>()
                );
            }
        }
    }

    #[test]
    fn guarantees_mes_holder_and_accepting_victim() {
        let snapshot = generate(&GenParams::small(5, true));
        let subjects = crate::labeling::build_subjects(&snapshot);
        assert!(subjects.iter().any(|s| s.granted_storage_perms.mes));
        assert!(subjects
            .iter()
            .any(|s| s.accepts_external_pathnames
                && s.privilege_level > PrivilegeLevel::T1));
    }

    #[test]
    fn zero_legacy_fraction_means_no_legacy_root() {
        let mut params = GenParams::small(9, true);
        params.legacy_fraction = 0.0;
        let snapshot = generate(&params);
        assert!(snapshot.filesystem.iter().all(|e| {
            e.scoped
                .as_ref()
                .is_none_or(|s| s.visibility != Visibility::LegacyRoot)
        }));
    }
}
