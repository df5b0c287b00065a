//! Pipeline orchestration: labeling, expansion, then per-object rule
//! evaluation fanned out over workers that pull objects one at a time from a
//! shared queue. Per-object cost is wildly skewed (a few objects have many
//! readers and writers), so dynamic assignment rather than block partition
//! keeps the load balanced. Results merge into one canonical order, so the
//! outcome is identical for every worker count.

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{
    analyze_object, AttackOperation, IntegrityViolation, RuleInputs, SquatPreventedRecord,
};
use crate::authz::{AccessContext, PolicySet, STANDARD_POLICIES};
use crate::expansion::{expand_adversary, victim_expanded_context, ExpansionConfig};
use crate::labeling::{build_objects, build_subjects, FsObject, Subject};
use crate::snapshot::{validate_snapshot, Snapshot, ValidationReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScopeFilter {
    All,
    ExternalOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub worker_count: usize,
    pub expansion: ExpansionConfig,
    pub scope_filter: ScopeFilter,
    /// Policy models to compose, by registry name.
    pub policies: Vec<String>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            worker_count: std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1),
            expansion: ExpansionConfig::default(),
            scope_filter: ScopeFilter::All,
            policies: STANDARD_POLICIES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl EngineConfig {
    pub fn with_workers(worker_count: usize) -> EngineConfig {
        EngineConfig {
            worker_count: worker_count.max(1),
            ..EngineConfig::default()
        }
    }
}

/// Wall-clock phase durations in milliseconds. Excluded from canonical
/// serialization so golden comparisons stay machine-independent.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub labeling_ms: f64,
    pub expansion_ms: f64,
    pub rules_ms: f64,
    pub merge_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisResult {
    pub subjects: Vec<Subject>,
    pub objects: Vec<FsObject>,
    pub ivs: Vec<IntegrityViolation>,
    pub ops: Vec<AttackOperation>,
    pub squat_prevented: Vec<SquatPreventedRecord>,
    pub timing: Timing,
}

impl AnalysisResult {
    /// Canonical JSON form: records sorted by (object, victim, adversary,
    /// kind), timing optionally stripped. Byte-identical across runs and
    /// worker counts.
    pub fn canonical_json(&self, include_timing: bool) -> String {
        let mut value = serde_json::to_value(self).expect("result serialization is infallible");
        if !include_timing {
            value.as_object_mut().unwrap().remove("timing");
        }
        let mut out = serde_json::to_string_pretty(&value).unwrap();
        out.push('\n');
        out
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("snapshot failed validation with {} error(s)", .0.errors().count())]
    Validation(ValidationReport),
    #[error(transparent)]
    UnknownPolicy(#[from] crate::authz::UnknownPolicyError),
}

struct Prepared {
    subjects: Vec<Subject>,
    objects: Vec<FsObject>,
    expanded: Vec<AccessContext>,
    victim_expanded: Vec<AccessContext>,
    policies: PolicySet,
    dispatch: Vec<usize>,
    labeling_ms: f64,
    expansion_ms: f64,
}

fn prepare(snapshot: &Snapshot, config: &EngineConfig) -> Result<Prepared, EngineError> {
    let report = validate_snapshot(snapshot);
    if report.has_errors() {
        return Err(EngineError::Validation(report));
    }

    let start = Instant::now();
    let subjects = build_subjects(snapshot);
    let objects = build_objects(snapshot, &subjects);
    let labeling_ms = start.elapsed().as_secs_f64() * 1e3;

    let start = Instant::now();
    let expanded: Vec<AccessContext> = subjects
        .iter()
        .map(|s| expand_adversary(s, snapshot, &config.expansion))
        .collect();
    let victim_expanded: Vec<AccessContext> = subjects
        .iter()
        .map(|s| victim_expanded_context(s, snapshot, &config.expansion))
        .collect();
    let expansion_ms = start.elapsed().as_secs_f64() * 1e3;

    let policies = PolicySet::from_names(config.policies.iter().map(String::as_str), snapshot)?;

    let dispatch: Vec<usize> = objects
        .iter()
        .filter(|o| match config.scope_filter {
            ScopeFilter::All => true,
            ScopeFilter::ExternalOnly => o.mount.external_storage,
        })
        .map(|o| o.id)
        .collect();

    Ok(Prepared {
        subjects,
        objects,
        expanded,
        victim_expanded,
        policies,
        dispatch,
        labeling_ms,
        expansion_ms,
    })
}

impl Prepared {
    fn rule_inputs<'a>(&'a self, snapshot: &'a Snapshot, config: &'a EngineConfig) -> RuleInputs<'a> {
        RuleInputs {
            snapshot,
            subjects: &self.subjects,
            expanded: &self.expanded,
            victim_expanded: &self.victim_expanded,
            policies: &self.policies,
            config: &config.expansion,
        }
    }
}

#[derive(Default)]
struct Batch {
    ivs: Vec<IntegrityViolation>,
    ops: Vec<AttackOperation>,
    squat_prevented: Vec<SquatPreventedRecord>,
}

/// Runs the full analysis. The result is identical, as sets, for every
/// `worker_count`; validation errors are the only failure mode.
pub fn analyze(snapshot: &Snapshot, config: &EngineConfig) -> Result<AnalysisResult, EngineError> {
    let total_start = Instant::now();
    let prepared = prepare(snapshot, config)?;
    let workers = config.worker_count.max(1);

    let rules_start = Instant::now();
    let next = AtomicUsize::new(0);
    let mut batches: Vec<Batch> = Vec::with_capacity(workers);
    std::thread::scope(|scope| {
        let mut handles = Vec::with_capacity(workers);
        for _ in 0..workers {
            let prepared = &prepared;
            let next = &next;
            handles.push(scope.spawn(move || {
                let inputs = prepared.rule_inputs(snapshot, config);
                let mut batch = Batch::default();
                loop {
                    let slot = next.fetch_add(1, Ordering::Relaxed);
                    let Some(&obj_id) = prepared.dispatch.get(slot) else {
                        break;
                    };
                    let (ivs, ops, prevented) = analyze_object(&prepared.objects[obj_id], &inputs);
                    batch.ivs.extend(ivs);
                    batch.ops.extend(ops);
                    batch.squat_prevented.extend(prevented);
                }
                batch
            }));
        }
        for handle in handles {
            batches.push(handle.join().expect("worker panicked"));
        }
    });
    let rules_ms = rules_start.elapsed().as_secs_f64() * 1e3;

    let merge_start = Instant::now();
    let mut ivs = Vec::new();
    let mut ops = Vec::new();
    let mut squat_prevented = Vec::new();
    for batch in batches {
        ivs.extend(batch.ivs);
        ops.extend(batch.ops);
        squat_prevented.extend(batch.squat_prevented);
    }
    ivs.sort_unstable();
    ops.sort_unstable();
    squat_prevented.sort_unstable();
    let merge_ms = merge_start.elapsed().as_secs_f64() * 1e3;

    Ok(AnalysisResult {
        subjects: prepared.subjects,
        objects: prepared.objects,
        ivs,
        ops,
        squat_prevented,
        timing: Timing {
            labeling_ms: prepared.labeling_ms,
            expansion_ms: prepared.expansion_ms,
            rules_ms,
            merge_ms,
            total_ms: total_start.elapsed().as_secs_f64() * 1e3,
        },
    })
}

/// One record of streamed analysis output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalysisRecord {
    Iv(IntegrityViolation),
    Op(AttackOperation),
    SquatPrevented(SquatPreventedRecord),
}

#[derive(Debug, Error)]
#[error("sink failed: {0}")]
pub struct SinkError(pub String);

/// Receives streamed records in no particular order.
pub trait RecordSink {
    fn accept(&mut self, record: AnalysisRecord) -> Result<(), SinkError>;
}

impl<F: FnMut(AnalysisRecord) -> Result<(), SinkError>> RecordSink for F {
    fn accept(&mut self, record: AnalysisRecord) -> Result<(), SinkError> {
        self(record)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StreamSummary {
    pub iv_count: u64,
    pub op_count: u64,
    pub squat_prevented_count: u64,
    /// False when the sink failed and output is partial.
    pub complete: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Memory-bounded variant of [`analyze`]: per-object records flow through a
/// bounded channel straight into the sink instead of accumulating. Emits the
/// same multiset of records as [`analyze`]; a sink failure stops the run and
/// marks the summary incomplete.
pub fn analyze_streaming(
    snapshot: &Snapshot,
    config: &EngineConfig,
    sink: &mut dyn RecordSink,
) -> Result<StreamSummary, EngineError> {
    let prepared = prepare(snapshot, config)?;
    let workers = config.worker_count.max(1);

    let next = AtomicUsize::new(0);
    let stop = AtomicBool::new(false);
    let (tx, rx) = mpsc::sync_channel::<AnalysisRecord>(4096);

    let mut summary = StreamSummary {
        complete: true,
        ..StreamSummary::default()
    };

    std::thread::scope(|scope| {
        for _ in 0..workers {
            let prepared = &prepared;
            let next = &next;
            let stop = &stop;
            let tx = tx.clone();
            scope.spawn(move || {
                let inputs = prepared.rule_inputs(snapshot, config);
                loop {
                    if stop.load(Ordering::Relaxed) {
                        break;
                    }
                    let slot = next.fetch_add(1, Ordering::Relaxed);
                    let Some(&obj_id) = prepared.dispatch.get(slot) else {
                        break;
                    };
                    let (ivs, ops, prevented) = analyze_object(&prepared.objects[obj_id], &inputs);
                    let records = ivs
                        .into_iter()
                        .map(AnalysisRecord::Iv)
                        .chain(ops.into_iter().map(AnalysisRecord::Op))
                        .chain(prevented.into_iter().map(AnalysisRecord::SquatPrevented));
                    for record in records {
                        if tx.send(record).is_err() {
                            return; // consumer hung up after a sink failure
                        }
                    }
                }
            });
        }
        drop(tx);

        for record in rx.iter() {
            match sink.accept(record.clone()) {
                Ok(()) => match record {
                    AnalysisRecord::Iv(_) => summary.iv_count += 1,
                    AnalysisRecord::Op(_) => summary.op_count += 1,
                    AnalysisRecord::SquatPrevented(_) => summary.squat_prevented_count += 1,
                },
                Err(err) => {
                    summary.complete = false;
                    summary.error = Some(err.to_string());
                    stop.store(true, Ordering::Relaxed);
                    break;
                }
            }
        }
        // Drain so blocked producers can observe the hangup and exit.
        drop(rx);
    });

    Ok(summary)
}
