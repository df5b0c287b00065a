//! Engine vs reference-implementation equivalence and streaming parity.

mod common;

use std::collections::BTreeSet;

use common::*;
use polyscope_core::engine::{
    analyze, analyze_streaming, AnalysisRecord, EngineConfig, SinkError,
};
use polyscope_core::oracle::{oracle_analyze, OracleConfig};
use polyscope_core::synthgen::{generate, GenParams};

fn assert_equivalent(snapshot: &polyscope_core::snapshot::Snapshot, label: &str) {
    let engine = analyze(snapshot, &EngineConfig::with_workers(2)).unwrap();
    let reference = oracle_analyze(snapshot, &OracleConfig::default()).unwrap();
    assert_eq!(
        engine.canonical_json(false),
        reference.canonical_json(false),
        "engine and reference disagree on {label}"
    );
}

#[test]
fn fixtures_match_reference() {
    assert_equivalent(&f1(), "f1");
    assert_equivalent(&f1_pre(), "f1-pre");
}

#[test]
fn synthetic_seeds_match_reference() {
    for seed in [101, 202] {
        for scoped in [true, false] {
            let snapshot = generate(&GenParams::small(seed, scoped));
            assert_equivalent(&snapshot, &format!("seed {seed} scoped {scoped}"));
        }
    }
}

#[test]
fn expansion_ablation_matches_reference() {
    let snapshot = generate(&GenParams::small(77, false));
    for (adv, vic) in [(false, true), (true, false), (false, false)] {
        let mut config = EngineConfig::with_workers(2);
        config.expansion.adversary_expansion = adv;
        config.expansion.victim_expansion = vic;
        let engine = analyze(&snapshot, &config).unwrap();
        let oracle_config = OracleConfig {
            expansion: config.expansion,
            ..OracleConfig::default()
        };
        let reference = oracle_analyze(&snapshot, &oracle_config).unwrap();
        assert_eq!(
            engine.canonical_json(false),
            reference.canonical_json(false),
            "ablation adv={adv} vic={vic}"
        );
    }
}

#[test]
fn streaming_f1_sorted_equals_batch() {
    let snapshot = f1();
    let config = EngineConfig::with_workers(2);
    let batch = analyze(&snapshot, &config).unwrap();

    let mut ivs = Vec::new();
    let mut ops = Vec::new();
    let mut prevented = Vec::new();
    let mut sink = |record: AnalysisRecord| {
        match record {
            AnalysisRecord::Iv(iv) => ivs.push(iv),
            AnalysisRecord::Op(op) => ops.push(op),
            AnalysisRecord::SquatPrevented(rec) => prevented.push(rec),
        }
        Ok(())
    };
    analyze_streaming(&snapshot, &config, &mut sink).unwrap();
    ivs.sort_unstable();
    ops.sort_unstable();
    prevented.sort_unstable();
    assert_eq!(ivs, batch.ivs);
    assert_eq!(ops, batch.ops);
    assert_eq!(prevented, batch.squat_prevented);
}

#[test]
fn streaming_emits_the_same_records() {
    let snapshot = generate(&GenParams::small(303, true));
    let config = EngineConfig::with_workers(2);
    let batch = analyze(&snapshot, &config).unwrap();

    let mut streamed_ivs = BTreeSet::new();
    let mut streamed_ops = BTreeSet::new();
    let mut streamed_prevented = BTreeSet::new();
    let mut sink = |record: AnalysisRecord| {
        match record {
            AnalysisRecord::Iv(iv) => streamed_ivs.insert(iv),
            AnalysisRecord::Op(op) => streamed_ops.insert(op),
            AnalysisRecord::SquatPrevented(rec) => streamed_prevented.insert(rec),
        };
        Ok(())
    };
    let summary = analyze_streaming(&snapshot, &config, &mut sink).unwrap();

    assert!(summary.complete);
    assert_eq!(summary.iv_count as usize, batch.ivs.len());
    assert_eq!(summary.op_count as usize, batch.ops.len());
    assert_eq!(
        summary.squat_prevented_count as usize,
        batch.squat_prevented.len()
    );
    assert_eq!(streamed_ivs, batch.ivs.iter().copied().collect());
    assert_eq!(streamed_ops, batch.ops.iter().copied().collect());
    assert_eq!(
        streamed_prevented,
        batch.squat_prevented.iter().cloned().collect()
    );
}

#[test]
fn failing_sink_marks_summary_incomplete() {
    let snapshot = generate(&GenParams::small(404, true));
    let mut accepted = 0u64;
    let mut sink = |_record: AnalysisRecord| {
        if accepted >= 5 {
            return Err(SinkError("disk full".into()));
        }
        accepted += 1;
        Ok(())
    };
    let summary = analyze_streaming(&snapshot, &EngineConfig::with_workers(2), &mut sink).unwrap();
    assert!(!summary.complete);
    assert_eq!(summary.error.as_deref(), Some("sink failed: disk full"));
    assert_eq!(
        summary.iv_count + summary.op_count + summary.squat_prevented_count,
        5
    );
}

#[test]
fn streaming_handles_many_objects_with_bounded_sink() {
    // structurally memory-bounded: records cross a bounded channel and are
    // counted without being retained
    let params = GenParams {
        seed: 11,
        subject_count: 40,
        object_count: 100_000,
        legacy_fraction: 0.2,
        external_fraction: 0.3,
        scoped_storage_enabled: true,
        skew: 1.2,
    };
    let snapshot = generate(&params);
    let mut count = 0u64;
    let mut sink = |_record: AnalysisRecord| {
        count += 1;
        Ok(())
    };
    let summary = analyze_streaming(&snapshot, &EngineConfig::with_workers(2), &mut sink).unwrap();
    assert!(summary.complete);
    assert_eq!(
        count,
        summary.iv_count + summary.op_count + summary.squat_prevented_count
    );
}

#[test]
fn worker_counts_are_interchangeable() {
    let snapshot = generate(&GenParams::small(505, true));
    let base = analyze(&snapshot, &EngineConfig::with_workers(1))
        .unwrap()
        .canonical_json(false);
    for workers in [2, 3, 8] {
        let other = analyze(&snapshot, &EngineConfig::with_workers(workers))
            .unwrap()
            .canonical_json(false);
        assert_eq!(base, other, "worker count {workers} diverged");
    }
}

// The reference implementation must not lean on the engine's rule
// evaluation: only data types may be shared. This pins the module
// dependency review as a test over the source itself.
#[test]
fn oracle_module_shares_types_only() {
    let source = std::fs::read_to_string(format!(
        "{}/src/oracle.rs",
        env!("CARGO_MANIFEST_DIR")
    ))
    .unwrap();
    for forbidden in [
        "crate::authz",
        "expand_adversary",
        "victim_expanded_context",
        "expand_victim",
        "compute_file_ivs",
        "compute_binding_ivs",
        "compute_pathname_ivs",
        "compute_attack_ops",
        "analyze_object",
        "access_sets",
        "MacIndex",
        "PolicySet",
        "engine::analyze",
        "build_subjects",
        "build_objects",
        "assign_privilege_levels",
        "adversaries_of",
        "pattern_matches",
    ] {
        assert!(
            !source.contains(forbidden),
            "oracle module references engine evaluation code: {forbidden}"
        );
    }
}

// Ablating a policy model from the registry can only widen access on both
// the victim and adversary side, so the violation set grows monotonically.
#[test]
fn policy_ablation_grows_iv_set() {
    let snapshot = generate(&GenParams::small(808, true));
    let standard = analyze(&snapshot, &EngineConfig::with_workers(2)).unwrap();
    for dropped in ["scoped", "mls", "dac", "te"] {
        let mut config = EngineConfig::with_workers(2);
        config.policies.retain(|name| name != dropped);
        let ablated = analyze(&snapshot, &config).unwrap();
        assert!(
            iv_set(&standard).is_subset(&iv_set(&ablated)),
            "dropping {dropped} lost violations"
        );
    }

    let mut config = EngineConfig::with_workers(2);
    config.policies = vec!["rbac".to_string()];
    assert!(matches!(
        analyze(&snapshot, &config),
        Err(polyscope_core::engine::EngineError::UnknownPolicy(_))
    ));
}

#[test]
fn oracle_is_deterministic() {
    let snapshot = generate(&GenParams::small(606, true));
    let a = oracle_analyze(&snapshot, &OracleConfig::default()).unwrap();
    let b = oracle_analyze(&snapshot, &OracleConfig::default()).unwrap();
    assert_eq!(a.canonical_json(false), b.canonical_json(false));
}

#[test]
fn external_only_filter_matches_reference() {
    use polyscope_core::engine::ScopeFilter;
    let snapshot = generate(&GenParams::small(707, true));
    let mut config = EngineConfig::with_workers(2);
    config.scope_filter = ScopeFilter::ExternalOnly;
    let engine = analyze(&snapshot, &config).unwrap();
    let reference = oracle_analyze(
        &snapshot,
        &OracleConfig {
            scope_filter: ScopeFilter::ExternalOnly,
            ..OracleConfig::default()
        },
    )
    .unwrap();
    assert_eq!(engine.canonical_json(false), reference.canonical_json(false));
    assert!(engine
        .ivs
        .iter()
        .all(|iv| engine.objects[iv.object].mount.external_storage));
}
