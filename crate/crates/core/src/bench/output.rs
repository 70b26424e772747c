use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::sweep::{SweepOutcome, SweepRow, SweepSummary};
use crate::driver::{replay_structures, EpochRecord};
use crate::error::{BbhcError, Result};
use crate::hfuncs::Problem;

pub const CSV_HEADER: [&str; 6] = ["size", "seed", "evals", "success", "structure_ok", "optimum_id"];

/// Standalone matplotlib script that plots a `summary.json`.
pub const PLOT_SCRIPT: &str = include_str!("plot_scaling.py");

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| BbhcError::io(parent, e))?;
    }
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| BbhcError::io(path, e))
}

pub fn write_rows_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.size.to_string(),
            r.seed.to_string(),
            r.evals.to_string(),
            r.success.to_string(),
            r.structure_ok.to_string(),
            r.optimum_id.map(|i| i.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| BbhcError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(|e| BbhcError::io(path, e))?;
    w.flush().map_err(|e| BbhcError::io(path, e))
}

/// One JSON object per epoch.
pub fn write_trace_jsonl(path: &Path, trace: &[EpochRecord]) -> Result<()> {
    let mut w = create(path)?;
    for rec in trace {
        serde_json::to_writer(&mut w, rec)?;
        w.write_all(b"\n").map_err(|e| BbhcError::io(path, e))?;
    }
    w.flush().map_err(|e| BbhcError::io(path, e))
}

fn node_label(loci: &[usize], problem: &Problem) -> String {
    let mut s: Vec<usize> = loci.iter().map(|&l| problem.structural_locus(l)).collect();
    s.sort_unstable();
    let contiguous = s.windows(2).all(|w| w[1] == w[0] + 1);
    match (s.first(), s.last()) {
        (Some(a), Some(b)) if a == b => format!("{a}"),
        (Some(a), Some(b)) if contiguous => format!("{a}..{b}"),
        _ => {
            let parts: Vec<String> = s.iter().map(|x| x.to_string()).collect();
            format!("{{{}}}", parts.join(","))
        }
    }
}

/// Graphviz rendering of the merge history in a trace. Node labels are in
/// structural (unshuffled) coordinates; edges point from a merged block to
/// the blocks it absorbed.
pub fn merge_tree_dot(trace: &[EpochRecord], problem: &Problem) -> String {
    let history = replay_structures(trace, problem.length());
    let mut ids: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut dot = String::from("digraph merge_tree {\n  rankdir=TB;\n  node [shape=box];\n");
    let mut node = |loci: &Vec<usize>, dot: &mut String| -> usize {
        let next = ids.len();
        *ids.entry(loci.clone()).or_insert_with(|| {
            let _ = writeln!(dot, "  n{next} [label=\"{}\"];", node_label(loci, problem));
            next
        })
    };
    for (rec, prev) in trace.iter().zip(&history) {
        for (members, loci) in rec.merges.iter().zip(&rec.new_blocks) {
            let parent = node(loci, &mut dot);
            for &m in members {
                let child = node(&prev[m], &mut dot);
                let _ = writeln!(dot, "  n{parent} -> n{child};");
            }
        }
    }
    dot.push_str("}\n");
    dot
}

/// Write the CSV, summary, plot script, and per-run traces and merge trees
/// for a finished sweep. Returns the paths written.
pub fn emit_outputs(dir: &Path, outcome: &SweepOutcome, summary: &SweepSummary) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| BbhcError::io(dir, e))?;
    let mut written = Vec::new();

    let csv_path = dir.join("sweep.csv");
    write_rows_csv(&csv_path, &outcome.rows)?;
    written.push(csv_path);

    let summary_path = dir.join("summary.json");
    write_json(&summary_path, summary)?;
    written.push(summary_path);

    let plot_path = dir.join("plot_scaling.py");
    fs::write(&plot_path, PLOT_SCRIPT).map_err(|e| BbhcError::io(&plot_path, e))?;
    written.push(plot_path);

    for t in &outcome.traced {
        let stem = format!("run_{}_{}", t.size, t.run);
        let trace_path = dir.join(format!("{stem}.trace.jsonl"));
        write_trace_jsonl(&trace_path, &t.result.trace)?;
        written.push(trace_path);
        let dot_path = dir.join(format!("{stem}.dot"));
        fs::write(&dot_path, merge_tree_dot(&t.result.trace, &t.problem))
            .map_err(|e| BbhcError::io(&dot_path, e))?;
        written.push(dot_path);
    }
    Ok(written)
}
