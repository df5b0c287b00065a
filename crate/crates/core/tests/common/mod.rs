//! Shared helpers for the integration suites.
#![allow(dead_code)] // not every suite uses every helper

use std::collections::BTreeSet;

use polyscope_core::analysis::{IvKind, OpKind};
use polyscope_core::engine::AnalysisResult;
use polyscope_core::snapshot::{parse_snapshot, Snapshot};

pub fn load_fixture(name: &str) -> Snapshot {
    let path = format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    let raw = std::fs::read(&path).unwrap_or_else(|err| panic!("read {path}: {err}"));
    parse_snapshot(&raw).unwrap_or_else(|err| panic!("parse {path}: {err}"))
}

pub fn f1() -> Snapshot {
    load_fixture("f1.json")
}

pub fn f1_pre() -> Snapshot {
    load_fixture("f1-pre.json")
}

/// Subject id by MAC label (unique in the fixtures).
pub fn sid(result: &AnalysisResult, label: &str) -> usize {
    result
        .subjects
        .iter()
        .find(|s| s.mac_label == label)
        .unwrap_or_else(|| panic!("no subject labeled {label}"))
        .id
}

/// Object id by path.
pub fn oid(result: &AnalysisResult, path: &str) -> usize {
    result
        .objects
        .iter()
        .find(|o| o.entry.path == path)
        .unwrap_or_else(|| panic!("no object at {path}"))
        .id
}

pub type IvKey = (IvKind, usize, usize, usize);
pub type OpKey = (OpKind, usize, usize, usize);

pub fn iv_set(result: &AnalysisResult) -> BTreeSet<IvKey> {
    result
        .ivs
        .iter()
        .map(|iv| (iv.kind, iv.victim, iv.adversary, iv.object))
        .collect()
}

pub fn op_set(result: &AnalysisResult) -> BTreeSet<OpKey> {
    result
        .ops
        .iter()
        .map(|op| (op.kind, op.victim, op.adversary, op.object))
        .collect()
}

pub fn prevented_set(result: &AnalysisResult) -> BTreeSet<(usize, usize, usize)> {
    result
        .squat_prevented
        .iter()
        .map(|rec| (rec.victim, rec.adversary, rec.object))
        .collect()
}

/// Violation triples of one kind restricted to external-storage objects.
pub fn external_dir_ivs(result: &AnalysisResult, kind: IvKind) -> BTreeSet<(usize, usize, usize)> {
    result
        .ivs
        .iter()
        .filter(|iv| iv.kind == kind && result.objects[iv.object].mount.external_storage)
        .map(|iv| (iv.victim, iv.adversary, iv.object))
        .collect()
}
