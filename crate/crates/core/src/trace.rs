//! uAIM snapshot traces, interval records, hardware configurations, and the
//! line-oriented trace file format.
//!
//! A trace is a sequence of counter snapshots taken at instruction
//! boundaries; consecutive snapshots difference into interval records that
//! carry the per-interval feature deltas and (optionally) an IPC label.

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::fnv1a;

/// Number of uAIM features per snapshot.
pub const FEATURE_COUNT: usize = 128;
/// Number of numeric hardware-config features.
pub const CFG_DIM: usize = 8;
/// Default interval width in retired instructions.
pub const DEFAULT_INTERVAL_WIDTH: u64 = 10_000_000;
/// Expected per-category feature counts: instruction/memory/branch/misc.
pub const CATEGORY_COUNTS: [usize; 4] = [61, 48, 7, 12];

/// Magic string on the first line of every trace file.
pub const TRACE_FORMAT: &str = "pai-trace";
/// Trace file format version this build reads and writes.
pub const TRACE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureCategory {
    Instruction,
    Memory,
    Branch,
    Misc,
}

impl FeatureCategory {
    /// Category inferred from a feature name prefix. The shipped schema uses
    /// `inst_*` / `mem_*` / `branch_*` prefixes; anything else is misc.
    pub fn from_name(name: &str) -> FeatureCategory {
        if name.starts_with("inst") {
            FeatureCategory::Instruction
        } else if name.starts_with("mem") {
            FeatureCategory::Memory
        } else if name.starts_with("branch") {
            FeatureCategory::Branch
        } else {
            FeatureCategory::Misc
        }
    }
}

impl fmt::Display for FeatureCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FeatureCategory::Instruction => "instruction",
            FeatureCategory::Memory => "memory",
            FeatureCategory::Branch => "branch",
            FeatureCategory::Misc => "misc",
        };
        f.write_str(s)
    }
}

/// Ordered feature names plus their categories.
///
/// The schema is file-driven: trace files carry the names, categories are
/// inferred from name prefixes, and the per-category counts must match
/// [`CATEGORY_COUNTS`]. The names shipped by [`FeatureSchema::canonical`] are
/// synthetic stand-ins; a real 128-feature schema drops in via the same file
/// header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSchema {
    names: Vec<String>,
    categories: Vec<FeatureCategory>,
    version: u32,
}

impl FeatureSchema {
    pub fn new(names: Vec<String>, version: u32) -> Result<Self> {
        if names.len() != FEATURE_COUNT {
            return Err(Error::SchemaMismatch(format!(
                "expected {} feature names, got {}",
                FEATURE_COUNT,
                names.len()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for n in &names {
            if !seen.insert(n.as_str()) {
                return Err(Error::SchemaMismatch(format!("duplicate feature name '{n}'")));
            }
        }
        let categories: Vec<_> = names.iter().map(|n| FeatureCategory::from_name(n)).collect();
        let mut counts = [0usize; 4];
        for c in &categories {
            counts[*c as usize] += 1;
        }
        if counts != CATEGORY_COUNTS {
            return Err(Error::SchemaMismatch(format!(
                "category counts {counts:?} do not match required {CATEGORY_COUNTS:?} \
                 (instruction/memory/branch/misc)"
            )));
        }
        Ok(FeatureSchema { names, categories, version })
    }

    /// The built-in synthetic schema: 61 instruction, 48 memory, 7 branch and
    /// 12 misc counters with stand-in names.
    pub fn canonical() -> Self {
        let mut names = Vec::with_capacity(FEATURE_COUNT);
        // 13 named instruction counters + 16 register-reuse bins
        // + 16 operand-histogram bins + 16 numbered categories = 61.
        for n in [
            "inst_load", "inst_store", "inst_int_alu", "inst_fp_add", "inst_fp_mul",
            "inst_fp_div", "inst_simd", "inst_mul", "inst_div", "inst_call", "inst_ret",
            "inst_nop", "inst_mov",
        ] {
            names.push(n.to_string());
        }
        for i in 0..16 {
            names.push(format!("inst_reg_reuse_{i:02}"));
        }
        for i in 0..16 {
            names.push(format!("inst_opnd_hist_{i:02}"));
        }
        for i in 0..16 {
            names.push(format!("inst_cat_{i:02}"));
        }
        // 24 data + 24 code reuse-distance bins = 48 memory counters.
        for i in 0..24 {
            names.push(format!("mem_data_reuse_{i:02}"));
        }
        for i in 0..24 {
            names.push(format!("mem_code_reuse_{i:02}"));
        }
        // 7 branch counters.
        for n in [
            "branch_taken", "branch_not_taken", "branch_fwd", "branch_bwd",
            "branch_indirect", "branch_entropy", "branch_mispred",
        ] {
            names.push(n.to_string());
        }
        // 12 misc counters.
        for n in [
            "misc_page_faults", "misc_interrupts", "misc_tlb_fills", "misc_io_ops",
            "misc_syscalls", "misc_cpu_migrations",
        ] {
            names.push(n.to_string());
        }
        for i in 0..6 {
            names.push(format!("misc_evt_{i:02}"));
        }
        FeatureSchema::new(names, TRACE_VERSION).expect("canonical schema is valid")
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn version(&self) -> u32 {
        self.version
    }

    pub fn category(&self, index: usize) -> FeatureCategory {
        self.categories[index]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn category_counts(&self) -> [usize; 4] {
        let mut counts = [0usize; 4];
        for c in &self.categories {
            counts[*c as usize] += 1;
        }
        counts
    }

    /// Stable identity hash over names and version; stored in checkpoints so
    /// prediction can reject traces recorded under a different schema.
    pub fn hash64(&self) -> u64 {
        let mut bytes = Vec::new();
        for n in &self.names {
            bytes.extend_from_slice(n.as_bytes());
            bytes.push(0);
        }
        bytes.extend_from_slice(&self.version.to_le_bytes());
        fnv1a(&bytes)
    }
}

/// Cumulative counter vector captured at an instruction boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct CounterSnapshot {
    pub instruction_index: u64,
    pub counters: Vec<f64>,
}

impl CounterSnapshot {
    pub fn new(instruction_index: u64, counters: Vec<f64>) -> Self {
        CounterSnapshot { instruction_index, counters }
    }
}

/// Differential uAIM vector for one interval plus optional performance labels.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalRecord {
    pub uaim_delta: Vec<f64>,
    /// Retired instructions in this interval.
    pub instructions: u64,
    pub ipc_label: Option<f64>,
    pub cycles_label: Option<f64>,
}

impl IntervalRecord {
    pub fn new(uaim_delta: Vec<f64>, instructions: u64) -> Self {
        IntervalRecord { uaim_delta, instructions, ipc_label: None, cycles_label: None }
    }

    /// Attaches an IPC label; the cycles label is derived as instructions/ipc.
    pub fn with_ipc(mut self, ipc: f64) -> Self {
        self.ipc_label = Some(ipc);
        self.cycles_label = Some(self.instructions as f64 / ipc);
        self
    }

    pub fn validate(&self, schema_len: usize) -> Result<()> {
        if self.uaim_delta.len() != schema_len {
            return Err(Error::SchemaMismatch(format!(
                "interval has {} features, schema has {}",
                self.uaim_delta.len(),
                schema_len
            )));
        }
        if self.instructions == 0 {
            return Err(Error::InvalidTrace("interval with zero instructions".into()));
        }
        if let Some((i, _)) = self
            .uaim_delta
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::InvalidTrace(format!("negative or non-finite delta at feature {i}")));
        }
        if let Some(ipc) = self.ipc_label {
            if !(ipc > 0.0) || !ipc.is_finite() {
                return Err(Error::InvalidTrace(format!("non-positive ipc label {ipc}")));
            }
            if let Some(cycles) = self.cycles_label {
                let implied = self.instructions as f64 / ipc;
                if ((cycles - implied) / cycles).abs() >= 1e-9 {
                    return Err(Error::InvalidTrace(format!(
                        "cycles label {cycles} inconsistent with instructions/ipc = {implied}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// SKU descriptor: the 8 numeric fields, in this declared order, form the
/// model's hardware-config feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardwareConfig {
    pub sku_id: String,
    pub core_count: u32,
    pub thread_count: u32,
    pub clock_ghz: f64,
    pub l1_kb: f64,
    pub l2_kb: f64,
    pub llc_mb: f64,
    pub issue_width: u32,
    pub rob_size: u32,
}

impl HardwareConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidSpec(format!("hardware config {}: {what}", self.sku_id)));
        if self.core_count < 1 || self.thread_count < 1 {
            return bad("core_count and thread_count must be >= 1");
        }
        if !(self.clock_ghz > 0.0) {
            return bad("clock_ghz must be > 0");
        }
        if !(self.l1_kb > 0.0 && self.l2_kb > 0.0 && self.llc_mb > 0.0) {
            return bad("cache sizes must be > 0");
        }
        if !(1..=16).contains(&self.issue_width) {
            return bad("issue_width must be in [1, 16]");
        }
        if !(32..=2048).contains(&self.rob_size) {
            return bad("rob_size must be in [32, 2048]");
        }
        Ok(())
    }

    /// Numeric feature vector in canonical field order.
    pub fn feature_vec(&self) -> [f64; CFG_DIM] {
        [
            self.core_count as f64,
            self.thread_count as f64,
            self.clock_ghz,
            self.l1_kb,
            self.l2_kb,
            self.llc_mb,
            self.issue_width as f64,
            self.rob_size as f64,
        ]
    }
}

/// One benchmark's intervals on one SKU.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkTrace {
    pub benchmark: String,
    pub sku: HardwareConfig,
    pub intervals: Vec<IntervalRecord>,
}

impl BenchmarkTrace {
    /// Validates non-emptiness and the uniform-width invariant (all intervals
    /// share the first interval's width except possibly a shorter tail).
    pub fn new(benchmark: String, sku: HardwareConfig, intervals: Vec<IntervalRecord>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::InvalidTrace(format!("trace {benchmark} has no intervals")));
        }
        sku.validate()?;
        let width = intervals[0].instructions;
        for (k, iv) in intervals.iter().enumerate() {
            if iv.instructions == 0 {
                return Err(Error::InvalidTrace(format!("interval {k} has zero instructions")));
            }
            let last = k + 1 == intervals.len();
            if !last && iv.instructions != width {
                return Err(Error::InvalidTrace(format!(
                    "interval {k} width {} differs from nominal {width}",
                    iv.instructions
                )));
            }
            if last && iv.instructions > width {
                return Err(Error::InvalidTrace(format!(
                    "tail interval width {} exceeds nominal {width}",
                    iv.instructions
                )));
            }
        }
        Ok(BenchmarkTrace { benchmark, sku, intervals })
    }

    /// Nominal interval width (the first interval's instruction count).
    pub fn width(&self) -> u64 {
        self.intervals[0].instructions
    }

    pub fn total_instructions(&self) -> u64 {
        self.intervals.iter().map(|iv| iv.instructions).sum()
    }

    /// Per-interval IPC labels; errors if any interval is unlabeled.
    pub fn label_ipcs(&self) -> Result<Vec<f64>> {
        self.intervals
            .iter()
            .enumerate()
            .map(|(k, iv)| {
                iv.ipc_label.ok_or_else(|| {
                    Error::MissingLabels(format!("trace {} interval {k}", self.benchmark))
                })
            })
            .collect()
    }
}

/// Result of differencing a snapshot sequence.
#[derive(Debug, Clone)]
pub struct DiffOutput {
    pub intervals: Vec<IntervalRecord>,
    /// Negative deltas clamped to zero under wrap tolerance.
    pub clamped: usize,
}

/// Differences consecutive snapshots into interval records.
///
/// `width` is the nominal interval width: every interval except the tail must
/// match it. With `wrap_tolerant` a negative counter delta (wrapped or corrupt
/// counter) is clamped to 0 and counted instead of failing.
pub fn diff_snapshots(
    snapshots: &[CounterSnapshot],
    width: u64,
    wrap_tolerant: bool,
) -> Result<DiffOutput> {
    if snapshots.len() < 2 {
        return Err(Error::EmptyTrace);
    }
    let n_feat = snapshots[0].counters.len();
    let mut intervals = Vec::with_capacity(snapshots.len() - 1);
    let mut clamped = 0usize;
    for k in 0..snapshots.len() - 1 {
        let (prev, next) = (&snapshots[k], &snapshots[k + 1]);
        if prev.counters.len() != n_feat || next.counters.len() != n_feat {
            return Err(Error::SchemaMismatch(format!(
                "snapshot {} has {} counters, expected {n_feat}",
                k + 1,
                next.counters.len()
            )));
        }
        if next.instruction_index <= prev.instruction_index {
            return Err(Error::InvalidTrace(format!(
                "instruction_index not strictly increasing at snapshot {}",
                k + 1
            )));
        }
        let instructions = next.instruction_index - prev.instruction_index;
        let last = k + 2 == snapshots.len();
        if !last && instructions != width {
            return Err(Error::InvalidTrace(format!(
                "interval {k} spans {instructions} instructions, nominal width is {width}"
            )));
        }
        if last && instructions > width {
            return Err(Error::InvalidTrace(format!(
                "tail interval spans {instructions} instructions, nominal width is {width}"
            )));
        }
        let mut delta = Vec::with_capacity(n_feat);
        for f in 0..n_feat {
            let d = next.counters[f] - prev.counters[f];
            if d < 0.0 {
                if wrap_tolerant {
                    clamped += 1;
                    delta.push(0.0);
                } else {
                    return Err(Error::NonMonotonicCounter { feature: f, index: k + 1 });
                }
            } else {
                delta.push(d);
            }
        }
        intervals.push(IntervalRecord::new(delta, instructions));
    }
    Ok(DiffOutput { intervals, clamped })
}

/// Inverse of [`diff_snapshots`]: rebuilds cumulative snapshots from interval
/// deltas and a base snapshot. `accumulate_intervals(diff(S).intervals, S[0])`
/// reproduces `S` exactly when counters are integer-valued.
pub fn accumulate_intervals(
    intervals: &[IntervalRecord],
    base: &CounterSnapshot,
) -> Result<Vec<CounterSnapshot>> {
    let n_feat = base.counters.len();
    let mut out = Vec::with_capacity(intervals.len() + 1);
    out.push(base.clone());
    let mut counters = base.counters.clone();
    let mut index = base.instruction_index;
    for (k, iv) in intervals.iter().enumerate() {
        if iv.uaim_delta.len() != n_feat {
            return Err(Error::SchemaMismatch(format!(
                "interval {k} has {} features, base snapshot has {n_feat}",
                iv.uaim_delta.len()
            )));
        }
        for (c, d) in counters.iter_mut().zip(&iv.uaim_delta) {
            *c += d;
        }
        index += iv.instructions;
        out.push(CounterSnapshot::new(index, counters.clone()));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Trace file format
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceMode {
    /// Rows are cumulative snapshots; `i` is the instruction index. The first
    /// row is the unlabeled base snapshot.
    Cumulative,
    /// Rows are interval records; `i` is the interval's instruction count.
    Differential,
}

#[derive(Serialize, Deserialize)]
struct TraceHeader {
    format: String,
    version: u32,
    schema: Vec<String>,
    sku: HardwareConfig,
    benchmark: String,
    mode: TraceMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TraceRowRecord {
    i: u64,
    c: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    ipc: Option<f64>,
}

/// In-memory image of one trace file. Reading preserves parsed values, so
/// `write(read(f))` is byte-identical for files this tool wrote.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceFile {
    pub schema: FeatureSchema,
    pub sku: HardwareConfig,
    pub benchmark: String,
    pub mode: TraceMode,
    rows: Vec<TraceRowRecord>,
}

impl TraceFile {
    /// Builds a cumulative-mode file from snapshots. `labels[k]` labels the
    /// interval ending at `snapshots[k + 1]`.
    pub fn from_snapshots(
        schema: FeatureSchema,
        sku: HardwareConfig,
        benchmark: String,
        snapshots: &[CounterSnapshot],
        labels: Option<&[f64]>,
    ) -> Result<Self> {
        if snapshots.len() < 2 {
            return Err(Error::EmptyTrace);
        }
        if let Some(l) = labels {
            if l.len() != snapshots.len() - 1 {
                return Err(Error::SchemaMismatch(format!(
                    "{} labels for {} intervals",
                    l.len(),
                    snapshots.len() - 1
                )));
            }
        }
        let mut rows = Vec::with_capacity(snapshots.len());
        for (k, s) in snapshots.iter().enumerate() {
            if s.counters.len() != schema.len() {
                return Err(Error::SchemaMismatch(format!(
                    "snapshot {k} has {} counters, schema has {}",
                    s.counters.len(),
                    schema.len()
                )));
            }
            let ipc = if k == 0 { None } else { labels.map(|l| l[k - 1]) };
            rows.push(TraceRowRecord { i: s.instruction_index, c: s.counters.clone(), ipc });
        }
        Ok(TraceFile { schema, sku, benchmark, mode: TraceMode::Cumulative, rows })
    }

    /// Builds a differential-mode file from a benchmark trace.
    pub fn from_trace(schema: FeatureSchema, trace: &BenchmarkTrace) -> Result<Self> {
        let mut rows = Vec::with_capacity(trace.intervals.len());
        for iv in &trace.intervals {
            iv.validate(schema.len())?;
            rows.push(TraceRowRecord {
                i: iv.instructions,
                c: iv.uaim_delta.clone(),
                ipc: iv.ipc_label,
            });
        }
        Ok(TraceFile {
            schema,
            sku: trace.sku.clone(),
            benchmark: trace.benchmark.clone(),
            mode: TraceMode::Differential,
            rows,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header_line) = lines
            .next()
            .ok_or_else(|| Error::ParseError { line: 1, reason: "empty file".into() })?;
        let header: TraceHeader = serde_json::from_str(header_line)
            .map_err(|e| Error::ParseError { line: 1, reason: e.to_string() })?;
        if header.format != TRACE_FORMAT {
            return Err(Error::ParseError {
                line: 1,
                reason: format!("format '{}' is not '{TRACE_FORMAT}'", header.format),
            });
        }
        if header.version != TRACE_VERSION {
            return Err(Error::UnsupportedVersion(header.version));
        }
        let schema = FeatureSchema::new(header.schema, header.version)?;
        header.sku.validate()?;
        let mut rows = Vec::new();
        for (idx, line) in lines {
            let line_no = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let row: TraceRowRecord = serde_json::from_str(line)
                .map_err(|e| Error::ParseError { line: line_no, reason: e.to_string() })?;
            if row.c.len() != schema.len() {
                return Err(Error::SchemaMismatch(format!(
                    "line {line_no}: record has {} features, schema has {}",
                    row.c.len(),
                    schema.len()
                )));
            }
            if let Some(bad) = row.c.iter().find(|v| !v.is_finite() || **v < 0.0) {
                return Err(Error::ParseError {
                    line: line_no,
                    reason: format!("negative or non-finite counter value {bad}"),
                });
            }
            if let Some(ipc) = row.ipc {
                if !(ipc > 0.0) || !ipc.is_finite() {
                    return Err(Error::ParseError {
                        line: line_no,
                        reason: format!("non-positive ipc label {ipc}"),
                    });
                }
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::ParseError { line: 2, reason: "no records".into() });
        }
        if header.mode == TraceMode::Cumulative {
            if rows.len() < 2 {
                return Err(Error::EmptyTrace);
            }
            if rows[0].ipc.is_some() {
                return Err(Error::ParseError {
                    line: 2,
                    reason: "base snapshot must not carry an ipc label".into(),
                });
            }
        }
        Ok(TraceFile {
            schema,
            sku: header.sku,
            benchmark: header.benchmark,
            mode: header.mode,
            rows,
        })
    }

    pub fn render(&self) -> String {
        let header = TraceHeader {
            format: TRACE_FORMAT.to_string(),
            version: self.schema.version(),
            schema: self.schema.names().to_vec(),
            sku: self.sku.clone(),
            benchmark: self.benchmark.clone(),
            mode: self.mode,
        };
        let mut out = serde_json::to_string(&header).expect("header serializes");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&serde_json::to_string(row).expect("row serializes"));
            out.push('\n');
        }
        out
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        TraceFile::parse(&text)
    }

    /// Writes atomically (temp file + rename in the target directory).
    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.render().as_bytes())
    }

    /// Converts to a differenced [`BenchmarkTrace`] (cumulative files are
    /// differenced; differential files are validated record-by-record).
    pub fn into_trace(self) -> Result<(FeatureSchema, HardwareConfig, BenchmarkTrace)> {
        let intervals = match self.mode {
            TraceMode::Cumulative => {
                let snaps: Vec<CounterSnapshot> = self
                    .rows
                    .iter()
                    .map(|r| CounterSnapshot::new(r.i, r.c.clone()))
                    .collect();
                let width = snaps[1].instruction_index.saturating_sub(snaps[0].instruction_index);
                let mut out = diff_snapshots(&snaps, width, false)?.intervals;
                for (iv, row) in out.iter_mut().zip(self.rows.iter().skip(1)) {
                    if let Some(ipc) = row.ipc {
                        iv.ipc_label = Some(ipc);
                        iv.cycles_label = Some(iv.instructions as f64 / ipc);
                    }
                }
                out
            }
            TraceMode::Differential => self
                .rows
                .iter()
                .map(|r| {
                    let iv = IntervalRecord::new(r.c.clone(), r.i);
                    match r.ipc {
                        Some(ipc) => iv.with_ipc(ipc),
                        None => iv,
                    }
                })
                .collect(),
        };
        let trace = BenchmarkTrace::new(self.benchmark, self.sku.clone(), intervals)?;
        Ok((self.schema, self.sku, trace))
    }
}

/// Reads a trace file into schema, hardware config, and differenced trace.
pub fn read_trace_file(path: &Path) -> Result<(FeatureSchema, HardwareConfig, BenchmarkTrace)> {
    TraceFile::read(path)?.into_trace()
}

/// Writes a trace in canonical differential form.
pub fn write_trace_file(path: &Path, schema: &FeatureSchema, trace: &BenchmarkTrace) -> Result<()> {
    TraceFile::from_trace(schema.clone(), trace)?.write(path)
}

/// Atomic file write: temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn snap(idx: u64, counters: &[f64]) -> CounterSnapshot {
        CounterSnapshot::new(idx, counters.to_vec())
    }

    #[test]
    fn canonical_schema_counts() {
        let s = FeatureSchema::canonical();
        assert_eq!(s.len(), FEATURE_COUNT);
        assert_eq!(s.category_counts(), CATEGORY_COUNTS);
        assert_eq!(s.hash64(), FeatureSchema::canonical().hash64());
    }

    #[test]
    fn diff_basic() {
        let snaps = [snap(0, &[100.0]), snap(10_000_000, &[250.0]), snap(20_000_000, &[400.0])];
        let out = diff_snapshots(&snaps, 10_000_000, false).unwrap();
        assert_eq!(out.clamped, 0);
        assert_eq!(out.intervals.len(), 2);
        assert_eq!(out.intervals[0].uaim_delta, vec![150.0]);
        assert_eq!(out.intervals[1].uaim_delta, vec![150.0]);
        assert_eq!(out.intervals[0].instructions, 10_000_000);
        assert_eq!(out.intervals[1].instructions, 10_000_000);
    }

    #[test]
    fn diff_single_snapshot_is_empty_trace() {
        let snaps = [snap(0, &[100.0])];
        assert!(matches!(diff_snapshots(&snaps, 1, false), Err(Error::EmptyTrace)));
    }

    #[test]
    fn diff_negative_delta_rejected_or_clamped() {
        let snaps = [snap(0, &[100.0]), snap(10, &[90.0])];
        match diff_snapshots(&snaps, 10, false) {
            Err(Error::NonMonotonicCounter { feature: 0, index: 1 }) => {}
            other => panic!("expected NonMonotonicCounter(0, 1), got {other:?}"),
        }
        let out = diff_snapshots(&snaps, 10, true).unwrap();
        assert_eq!(out.clamped, 1);
        assert_eq!(out.intervals[0].uaim_delta, vec![0.0]);
    }

    #[test]
    fn diff_rejects_irregular_interval() {
        let snaps = [snap(0, &[0.0]), snap(7, &[1.0]), snap(20, &[2.0])];
        assert!(matches!(diff_snapshots(&snaps, 10, false), Err(Error::InvalidTrace(_))));
    }

    #[test]
    fn accumulate_inverts_diff() {
        let snaps = [snap(0, &[100.0]), snap(10, &[250.0]), snap(20, &[400.0])];
        let out = diff_snapshots(&snaps, 10, false).unwrap();
        let back = accumulate_intervals(&out.intervals, &snaps[0]).unwrap();
        assert_eq!(back, snaps.to_vec());
    }

    #[test]
    fn accumulate_empty_is_base() {
        let base = snap(5, &[1.0, 2.0]);
        let back = accumulate_intervals(&[], &base).unwrap();
        assert_eq!(back, vec![base]);
    }

    #[test]
    fn accumulate_schema_mismatch() {
        let base = snap(0, &[1.0, 2.0]);
        let iv = IntervalRecord::new(vec![1.0], 10);
        assert!(matches!(accumulate_intervals(&[iv], &base), Err(Error::SchemaMismatch(_))));
    }

    fn test_sku() -> HardwareConfig {
        HardwareConfig {
            sku_id: "sku_test".into(),
            core_count: 16,
            thread_count: 32,
            clock_ghz: 3.0,
            l1_kb: 48.0,
            l2_kb: 2048.0,
            llc_mb: 64.0,
            issue_width: 4,
            rob_size: 512,
        }
    }

    #[test]
    fn hardware_config_bounds() {
        let mut cfg = test_sku();
        assert!(cfg.validate().is_ok());
        cfg.issue_width = 17;
        assert!(cfg.validate().is_err());
        cfg.issue_width = 4;
        cfg.rob_size = 31;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn trace_file_minimal_round_trip() {
        let schema = FeatureSchema::canonical();
        let zeros = vec![0.0; FEATURE_COUNT];
        let mut ones = vec![1.0; FEATURE_COUNT];
        ones[3] = 42.0;
        let snaps = [snap(0, &zeros), snap(10_000_000, &ones)];
        let tf = TraceFile::from_snapshots(
            schema.clone(),
            test_sku(),
            "bench_x".into(),
            &snaps,
            Some(&[1.25]),
        )
        .unwrap();
        let text = tf.render();
        let reparsed = TraceFile::parse(&text).unwrap();
        assert_eq!(reparsed.render(), text);
        let (s2, sku, trace) = reparsed.into_trace().unwrap();
        assert_eq!(s2, schema);
        assert_eq!(sku.sku_id, "sku_test");
        assert_eq!(trace.intervals.len(), 1);
        assert_eq!(trace.intervals[0].ipc_label, Some(1.25));
        assert_eq!(trace.intervals[0].uaim_delta[3], 42.0);
    }

    #[test]
    fn trace_file_wrong_feature_count() {
        let schema = FeatureSchema::canonical();
        let trace = BenchmarkTrace::new(
            "b".into(),
            test_sku(),
            vec![IntervalRecord::new(vec![0.0; FEATURE_COUNT], 10)],
        )
        .unwrap();
        let tf = TraceFile::from_trace(schema, &trace).unwrap();
        let mut text = tf.render();
        // Drop one value from the record line to make a 127-feature row.
        text = text.replacen("[0.0,", "[", 1);
        assert!(matches!(TraceFile::parse(&text), Err(Error::SchemaMismatch(_))));
    }

    #[test]
    fn trace_file_bad_version() {
        let schema = FeatureSchema::canonical();
        let trace = BenchmarkTrace::new(
            "b".into(),
            test_sku(),
            vec![IntervalRecord::new(vec![0.0; FEATURE_COUNT], 10)],
        )
        .unwrap();
        let text = TraceFile::from_trace(schema, &trace).unwrap().render();
        let text = text.replacen("\"version\":1", "\"version\":999", 1);
        assert!(matches!(TraceFile::parse(&text), Err(Error::UnsupportedVersion(999))));
    }

    #[test]
    fn schema_rejects_bad_counts() {
        let names: Vec<String> = (0..FEATURE_COUNT).map(|i| format!("inst_{i}")).collect();
        assert!(matches!(FeatureSchema::new(names, 1), Err(Error::SchemaMismatch(_))));
    }

    #[test]
    fn interval_label_consistency() {
        let iv = IntervalRecord::new(vec![0.0], 10_000_000).with_ipc(2.0);
        assert!(iv.validate(1).is_ok());
        let mut bad = iv.clone();
        bad.cycles_label = Some(4_000_000.0);
        assert!(bad.validate(1).is_err());
    }
}
