//! Triage aggregation: the summary tables, legacy attribution, and the
//! fully-enforced Scoped Storage what-if transform.
//!
//! Counting follows the object-set convention: a violation count is the sum
//! over victims of the distinct objects involved, and an operation count is
//! the number of distinct (kind, victim, object) triples — adversaries are
//! deduplicated in both.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{IvKind, OpKind};
use crate::authz::{dac_allows, mac_allows, mls_allows, Access, MacIndex};
use crate::engine::{AnalysisResult, Timing};
use crate::expansion::{expand_adversary, ExpansionConfig};
use crate::labeling::{build_subjects, FsObject, Subject};
use crate::snapshot::{
    mount_of, ConsentAccess, FsKind, ScopedMeta, Snapshot, Visibility, PERM_WEX,
};

pub const REPORT_SCHEMA: &str = "polyscope-report/1";

/// The synthetic owner assigned to migrated legacy-root entries nobody can
/// write under the fully-enforced regime.
pub const MIGRATED_DEFAULT_OWNER: &str = "system.media";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountPair {
    pub total: u64,
    pub external: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IvKindCounts {
    pub file_read: CountPair,
    pub file_write: CountPair,
    pub dir_pathname: CountPair,
    pub dir_binding: CountPair,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OpKindCounts {
    pub file_mod: CountPair,
    pub file_squat: CountPair,
    pub link_traversal: CountPair,
    pub luring_traversal: CountPair,
    pub squat_prevented: CountPair,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionCounts {
    pub victims: u64,
    pub objects: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LegacyAttribution {
    pub legacy_adversary: PartitionCounts,
    pub compliant_adversary: PartitionCounts,
    pub legacy_package_count: u64,
    pub compliant_package_count: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WhatIfDelta {
    pub ops_before: u64,
    pub ops_after: u64,
    /// round((before - after) / before * 100); absent when before is zero.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ops_reduction_percent: Option<i64>,
    pub adversaries_before: u64,
    pub adversaries_after: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adversaries_reduction_percent: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriageReport {
    pub schema: String,
    pub device: String,
    pub android_version: String,
    pub scoped_storage_enabled: bool,
    pub iv_total: u64,
    pub iv_external: u64,
    pub op_total: u64,
    pub op_external: u64,
    pub iv_kinds: IvKindCounts,
    pub op_kinds: OpKindCounts,
    pub adversaries_total: u64,
    pub adversaries_external: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub legacy_attribution: Option<LegacyAttribution>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub what_if_full_scoped: Option<WhatIfDelta>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("not applicable: snapshot does not have scoped storage enabled")]
    NotApplicable,
}

fn is_external(result: &AnalysisResult, object: usize) -> bool {
    result.objects[object].mount.external_storage
}

fn iv_count(result: &AnalysisResult, kind: Option<IvKind>, external_only: bool) -> u64 {
    let mut pairs = BTreeSet::new();
    for iv in &result.ivs {
        if kind.is_some_and(|k| iv.kind != k) {
            continue;
        }
        if external_only && !is_external(result, iv.object) {
            continue;
        }
        pairs.insert((iv.victim, iv.object));
    }
    pairs.len() as u64
}

fn op_count(result: &AnalysisResult, kind: Option<OpKind>, external_only: bool) -> u64 {
    let mut triples = BTreeSet::new();
    for op in &result.ops {
        if kind.is_some_and(|k| op.kind != k) {
            continue;
        }
        if external_only && !is_external(result, op.object) {
            continue;
        }
        triples.insert((op.kind, op.victim, op.object));
    }
    triples.len() as u64
}

fn squat_prevented_count(result: &AnalysisResult, external_only: bool) -> u64 {
    let mut pairs = BTreeSet::new();
    for rec in &result.squat_prevented {
        if external_only && !is_external(result, rec.object) {
            continue;
        }
        pairs.insert((rec.victim, rec.object));
    }
    pairs.len() as u64
}

fn adversary_count(result: &AnalysisResult, external_only: bool) -> u64 {
    let mut adversaries = BTreeSet::new();
    for op in &result.ops {
        if external_only && !is_external(result, op.object) {
            continue;
        }
        adversaries.insert(op.adversary);
    }
    adversaries.len() as u64
}

fn kind_pair(result: &AnalysisResult, kind: IvKind) -> CountPair {
    CountPair {
        total: iv_count(result, Some(kind), false),
        external: iv_count(result, Some(kind), true),
    }
}

fn op_pair(result: &AnalysisResult, kind: OpKind) -> CountPair {
    CountPair {
        total: op_count(result, Some(kind), false),
        external: op_count(result, Some(kind), true),
    }
}

/// Aggregates a finished analysis into the triage report.
pub fn summarize(result: &AnalysisResult, snapshot: &Snapshot) -> TriageReport {
    TriageReport {
        schema: REPORT_SCHEMA.to_string(),
        device: snapshot.meta.device.clone(),
        android_version: snapshot.meta.android_version.clone(),
        scoped_storage_enabled: snapshot.meta.scoped_storage_enabled,
        iv_total: iv_count(result, None, false),
        iv_external: iv_count(result, None, true),
        op_total: op_count(result, None, false),
        op_external: op_count(result, None, true),
        iv_kinds: IvKindCounts {
            file_read: kind_pair(result, IvKind::Read),
            file_write: kind_pair(result, IvKind::Write),
            dir_pathname: kind_pair(result, IvKind::Pathname),
            dir_binding: kind_pair(result, IvKind::Binding),
        },
        op_kinds: OpKindCounts {
            file_mod: op_pair(result, OpKind::FileMod),
            file_squat: op_pair(result, OpKind::FileSquat),
            link_traversal: op_pair(result, OpKind::LinkTraversal),
            luring_traversal: op_pair(result, OpKind::LuringTraversal),
            squat_prevented: CountPair {
                total: squat_prevented_count(result, false),
                external: squat_prevented_count(result, true),
            },
        },
        adversaries_total: adversary_count(result, false),
        adversaries_external: adversary_count(result, true),
        legacy_attribution: if snapshot.meta.scoped_storage_enabled {
            legacy_attribution(result, snapshot).ok()
        } else {
            None
        },
        what_if_full_scoped: None,
        timing: Some(result.timing.clone()),
    }
}

/// Partitions violations by whether the adversary is a legacy subject, and
/// reports unique victim and object counts per partition. A victim can show
/// up in both partitions.
pub fn legacy_attribution(
    result: &AnalysisResult,
    snapshot: &Snapshot,
) -> Result<LegacyAttribution, ReportError> {
    if !snapshot.meta.scoped_storage_enabled {
        return Err(ReportError::NotApplicable);
    }
    let mut legacy = (BTreeSet::new(), BTreeSet::new());
    let mut compliant = (BTreeSet::new(), BTreeSet::new());
    for iv in &result.ivs {
        let bucket = if result.subjects[iv.adversary].legacy {
            &mut legacy
        } else {
            &mut compliant
        };
        bucket.0.insert(iv.victim);
        bucket.1.insert(iv.object);
    }
    let legacy_package_count = snapshot.packages.iter().filter(|p| p.legacy_storage).count() as u64;
    Ok(LegacyAttribution {
        legacy_adversary: PartitionCounts {
            victims: legacy.0.len() as u64,
            objects: legacy.1.len() as u64,
        },
        compliant_adversary: PartitionCounts {
            victims: compliant.0.len() as u64,
            objects: compliant.1.len() as u64,
        },
        legacy_package_count,
        compliant_package_count: snapshot.packages.len() as u64 - legacy_package_count,
    })
}

// A compliant non-owner write to shared storage needs MES or a covering
// write consent, on top of MAC/MLS/DAC authority. Used to pick owners for
// migrated legacy-root entries.
fn compliant_writer(
    subject: &Subject,
    snapshot: &Snapshot,
    mac: &MacIndex,
    obj: &FsObject,
) -> bool {
    if subject.packages.is_empty() {
        return false;
    }
    let ctx = expand_adversary(subject, snapshot, &ExpansionConfig::default());
    let perms = subject
        .granted_storage_perms
        .union(ctx.assumed_storage_perms);
    let consent = snapshot.user_consents.iter().any(|c| {
        c.access.contains(&ConsentAccess::Write)
            && subject.packages.contains(&c.package)
            && (obj.entry.path == c.path
                || obj
                    .entry
                    .path
                    .strip_prefix(c.path.as_str())
                    .is_some_and(|rest| rest.starts_with('/')))
    });
    if !(perms.mes || consent) {
        return false;
    }
    let access = if obj.entry.kind == FsKind::Dir {
        Access::WriteBinding
    } else {
        Access::Write
    };
    mac_allows(mac, &subject.mac_label, obj, access)
        && mls_allows(&subject.mls_categories, &obj.entry.mls_categories)
        && dac_allows(subject, &ctx, obj, access, None)
}

/// The fully-enforced Scoped Storage what-if: legacy-root entries migrate
/// into shared folders owned by the lowest-uid subject still able to write
/// them once legacy access is gone (ties broken by label, then package name;
/// a synthetic owner when nobody qualifies), every package loses its legacy
/// flag, and WEX declarations are dropped.
pub fn what_if_full_scoped(snapshot: &Snapshot) -> Result<Snapshot, ReportError> {
    if !snapshot.meta.scoped_storage_enabled {
        return Err(ReportError::NotApplicable);
    }
    let mut out = snapshot.clone();
    for package in &mut out.packages {
        package.legacy_storage = false;
        package.declared_permissions.remove(PERM_WEX);
    }

    // candidate writers are judged in the already-compliant world
    let subjects = build_subjects(&out);
    let mac = MacIndex::build(&out.mac_policy);

    let mut owners: Vec<(usize, String)> = Vec::new();
    for (i, entry) in out.filesystem.iter().enumerate() {
        let is_legacy_root = entry
            .scoped
            .as_ref()
            .is_some_and(|s| s.visibility == Visibility::LegacyRoot);
        if !is_legacy_root {
            continue;
        }
        let owner = mount_of(snapshot, &entry.path).ok().and_then(|mount| {
            let obj = FsObject {
                id: 0,
                entry: entry.clone(),
                mount: mount.clone(),
                is_binding: entry.kind == FsKind::Dir,
                owner_subjects: BTreeSet::new(),
            };
            subjects
                .iter()
                .filter(|s| compliant_writer(s, &out, &mac, &obj))
                .min_by(|a, b| (a.uid, &a.mac_label).cmp(&(b.uid, &b.mac_label)))
                .and_then(|s| s.packages.iter().next().cloned())
        });
        owners.push((i, owner.unwrap_or_else(|| MIGRATED_DEFAULT_OWNER.to_string())));
    }
    for (i, owner) in owners {
        out.filesystem[i].scoped = Some(ScopedMeta {
            owner_package: Some(owner),
            visibility: Visibility::Shared,
        });
    }
    Ok(out)
}

/// Compares external-storage operation and adversary counts before and after
/// the what-if transform.
pub fn what_if_delta(before: &TriageReport, after: &TriageReport) -> WhatIfDelta {
    WhatIfDelta {
        ops_before: before.op_external,
        ops_after: after.op_external,
        ops_reduction_percent: reduction_percent(before.op_external, after.op_external),
        adversaries_before: before.adversaries_external,
        adversaries_after: after.adversaries_external,
        adversaries_reduction_percent: reduction_percent(
            before.adversaries_external,
            after.adversaries_external,
        ),
    }
}

fn reduction_percent(before: u64, after: u64) -> Option<i64> {
    if before == 0 {
        return None;
    }
    let delta = before as f64 - after as f64;
    Some((delta / before as f64 * 100.0).round() as i64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    Table,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "table" => Ok(ReportFormat::Table),
            other => Err(format!("unknown format \"{other}\" (json|csv|table)")),
        }
    }
}

pub fn group_thousands(n: u64) -> String {
    let digits = n.to_string();
    let mut out = String::with_capacity(digits.len() + digits.len() / 3);
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(c);
    }
    out
}

/// Whole-percent rounding, half away from zero.
pub fn percent_of(part: u64, total: u64) -> Option<u32> {
    if total == 0 {
        return None;
    }
    Some((part as f64 / total as f64 * 100.0).round() as u32)
}

/// "1,021 (48%)" — the external-count cell format.
fn external_cell(external: u64, total: u64) -> String {
    match percent_of(external, total) {
        Some(pct) => format!("{} ({}%)", group_thousands(external), pct),
        None => format!("{} (—)", group_thousands(external)),
    }
}

fn delta_cell(after: u64, reduction: Option<i64>) -> String {
    match reduction {
        Some(pct) if pct >= 0 => format!("{} (-{}%)", group_thousands(after), pct),
        Some(pct) => format!("{} (+{}%)", group_thousands(after), -pct),
        None => format!("{} (—)", group_thousands(after)),
    }
}

struct Row {
    metric: &'static str,
    total: String,
    external: String,
}

fn rows(report: &TriageReport) -> Vec<Row> {
    let pair_row = |metric, pair: CountPair| Row {
        metric,
        total: group_thousands(pair.total),
        external: external_cell(pair.external, pair.total),
    };
    let mut rows = vec![
        pair_row(
            "integrity violations",
            CountPair {
                total: report.iv_total,
                external: report.iv_external,
            },
        ),
        pair_row(
            "attack operations",
            CountPair {
                total: report.op_total,
                external: report.op_external,
            },
        ),
        pair_row("file read IVs", report.iv_kinds.file_read),
        pair_row("file write IVs", report.iv_kinds.file_write),
        pair_row("dir pathname IVs", report.iv_kinds.dir_pathname),
        pair_row("dir binding IVs", report.iv_kinds.dir_binding),
        pair_row("file modification ops", report.op_kinds.file_mod),
        pair_row("file squat ops", report.op_kinds.file_squat),
        pair_row("link traversal ops", report.op_kinds.link_traversal),
        pair_row("luring traversal ops", report.op_kinds.luring_traversal),
        pair_row("squat attacks prevented", report.op_kinds.squat_prevented),
        pair_row(
            "unique adversaries",
            CountPair {
                total: report.adversaries_total,
                external: report.adversaries_external,
            },
        ),
    ];
    if let Some(attr) = &report.legacy_attribution {
        rows.push(Row {
            metric: "victims of legacy adversaries",
            total: group_thousands(attr.legacy_adversary.victims),
            external: format!("{} objects", group_thousands(attr.legacy_adversary.objects)),
        });
        rows.push(Row {
            metric: "victims of compliant adversaries",
            total: group_thousands(attr.compliant_adversary.victims),
            external: format!(
                "{} objects",
                group_thousands(attr.compliant_adversary.objects)
            ),
        });
        rows.push(Row {
            metric: "legacy packages",
            total: group_thousands(attr.legacy_package_count),
            external: format!(
                "{} compliant",
                group_thousands(attr.compliant_package_count)
            ),
        });
    }
    if let Some(delta) = &report.what_if_full_scoped {
        rows.push(Row {
            metric: "what-if external attack operations",
            total: group_thousands(delta.ops_before),
            external: delta_cell(delta.ops_after, delta.ops_reduction_percent),
        });
        rows.push(Row {
            metric: "what-if external adversaries",
            total: group_thousands(delta.adversaries_before),
            external: delta_cell(delta.adversaries_after, delta.adversaries_reduction_percent),
        });
    }
    rows
}

fn csv_quote(field: &str) -> String {
    if field.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// Renders a report: `json` is the canonical machine format, `csv` one row
/// per table line with RFC-4180 quoting, `table` aligned text at a fixed 120
/// column budget. Same report, same bytes.
pub fn render(report: &TriageReport, format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Json => {
            let mut out = serde_json::to_vec_pretty(report).expect("report serialization");
            out.push(b'\n');
            out
        }
        ReportFormat::Csv => {
            let mut out = String::from("metric,total,external\r\n");
            for row in rows(report) {
                out.push_str(&format!(
                    "{},{},{}\r\n",
                    csv_quote(row.metric),
                    csv_quote(&row.total),
                    csv_quote(&row.external)
                ));
            }
            out.into_bytes()
        }
        ReportFormat::Table => {
            let mut out = String::new();
            out.push_str(&format!(
                "access-control triage report — {} (Android {}, scoped storage {})\n",
                report.device,
                report.android_version,
                if report.scoped_storage_enabled {
                    "on"
                } else {
                    "off"
                }
            ));
            out.push_str(&format!(
                "{:<44}{:>28}{:>28}\n",
                "metric", "total", "external"
            ));
            out.push_str(&"-".repeat(100));
            out.push('\n');
            for row in rows(report) {
                out.push_str(&format!(
                    "{:<44}{:>28}{:>28}\n",
                    row.metric, row.total, row.external
                ));
            }
            if let Some(timing) = &report.timing {
                out.push_str(&format!(
                    "timing: labeling {:.1} ms, expansion {:.1} ms, rules {:.1} ms, merge {:.1} ms, total {:.1} ms\n",
                    timing.labeling_ms,
                    timing.expansion_ms,
                    timing.rules_ms,
                    timing.merge_ms,
                    timing.total_ms
                ));
            }
            out.into_bytes()
        }
    }
}
