//! Scenario file format, report serialization, and the sweep CSV.
//!
//! Scenario files are JSON with a schema version; unknown fields are
//! rejected so typos fail loudly. Sweep tables round-trip through CSV
//! bit-exactly for all finite doubles (shortest round-trip formatting on
//! write, exact parse on read).

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cost::InvestmentProfile;
use crate::error::{Diagnostic, Error, Result};
use crate::poba::SweepRow;
use crate::scenario::{Scenario, ScenarioSpec};

/// Supported scenario / report schema version.
pub const SCHEMA_VERSION: u32 = 1;

/// Exact header of the sweep CSV.
pub const SWEEP_CSV_HEADER: &str = "alpha,budget,pne_cost,social_cost,inefficiency";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeFile {
    pub from: String,
    pub to: String,
    pub p0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssetFile {
    pub node: String,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DefenderFile {
    pub id: String,
    pub budget: f64,
    pub alpha: f64,
    pub assets: Vec<AssetFile>,
}

/// On-disk scenario representation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub version: u32,
    pub source: String,
    pub nodes: Vec<String>,
    pub edges: Vec<EdgeFile>,
    pub defenders: Vec<DefenderFile>,
}

impl ScenarioFile {
    pub fn from_spec(spec: &ScenarioSpec) -> Self {
        Self {
            version: SCHEMA_VERSION,
            source: spec.source.clone(),
            nodes: spec.nodes.clone(),
            edges: spec
                .edges
                .iter()
                .map(|(from, to, p0)| EdgeFile { from: from.clone(), to: to.clone(), p0: *p0 })
                .collect(),
            defenders: spec
                .defenders
                .iter()
                .map(|(id, budget, alpha, assets)| DefenderFile {
                    id: id.clone(),
                    budget: *budget,
                    alpha: *alpha,
                    assets: assets
                        .iter()
                        .map(|(node, loss)| AssetFile { node: node.clone(), loss: *loss })
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn to_spec(&self) -> ScenarioSpec {
        ScenarioSpec {
            nodes: self.nodes.clone(),
            source: self.source.clone(),
            edges: self.edges.iter().map(|e| (e.from.clone(), e.to.clone(), e.p0)).collect(),
            defenders: self
                .defenders
                .iter()
                .map(|d| {
                    (
                        d.id.clone(),
                        d.budget,
                        d.alpha,
                        d.assets.iter().map(|a| (a.node.clone(), a.loss)).collect(),
                    )
                })
                .collect(),
        }
    }

    /// FNV-1a hash of the canonical JSON form, used to tie reports to the
    /// scenario they were computed from.
    pub fn content_hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("scenario files always serialize");
        let mut h: u64 = 0xcbf29ce484222325;
        for b in canonical.as_bytes() {
            h ^= u64::from(*b);
            h = h.wrapping_mul(0x100000001b3);
        }
        format!("{h:016x}")
    }
}

/// Parses a scenario file without validating the model.
pub fn load_scenario_file(path: &Path) -> Result<ScenarioFile> {
    let text = std::fs::read_to_string(path)?;
    let file: ScenarioFile =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    if file.version != SCHEMA_VERSION {
        return Err(Error::VersionMismatch { found: file.version, expected: SCHEMA_VERSION });
    }
    for e in &file.edges {
        if !e.p0.is_finite() {
            return Err(Error::Parse(format!("edge ({}, {}): p0 must be finite", e.from, e.to)));
        }
    }
    for d in &file.defenders {
        if !d.budget.is_finite() || !d.alpha.is_finite() {
            return Err(Error::Parse(format!("defender {}: non-finite parameter", d.id)));
        }
        if d.assets.iter().any(|a| !a.loss.is_finite()) {
            return Err(Error::Parse(format!("defender {}: non-finite loss", d.id)));
        }
    }
    Ok(file)
}

/// Parses and validates a scenario file into a runnable [`Scenario`].
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let file = load_scenario_file(path)?;
    Scenario::from_spec(&file.to_spec())
}

pub fn save_scenario(file: &ScenarioFile, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(file).expect("scenario files always serialize");
    std::fs::write(path, text + "\n")?;
    Ok(())
}

/// One defender's per-edge investment in a report, keyed by edge endpoints
/// so the profile can be reconstructed against the scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvestmentEntry {
    pub from: String,
    pub to: String,
    pub amount: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DefenderInvestment {
    pub defender: String,
    pub edges: Vec<InvestmentEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquilibriumRecord {
    pub profile: Vec<DefenderInvestment>,
    pub perceived_costs: Vec<f64>,
    pub true_costs: Vec<f64>,
    pub total_true_cost: f64,
    pub rounds: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRecord {
    pub alpha: f64,
    pub budget: f64,
    pub pne_cost: f64,
    pub social_cost: f64,
    pub inefficiency: f64,
}

impl From<&SweepRow> for SweepRecord {
    fn from(r: &SweepRow) -> Self {
        Self {
            alpha: r.alpha,
            budget: r.budget,
            pne_cost: r.pne_cost,
            social_cost: r.social_cost,
            inefficiency: r.inefficiency,
        }
    }
}

/// The machine-readable payload of a report.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReportResult {
    Validate {
        diagnostics: Vec<Diagnostic>,
    },
    BestResponse {
        defender: String,
        investment: Vec<InvestmentEntry>,
        perceived_cost: f64,
        true_cost: f64,
        polished: bool,
    },
    Equilibria {
        equilibria: Vec<EquilibriumRecord>,
    },
    SocialOptimum {
        investment: Vec<InvestmentEntry>,
        cost: f64,
    },
    Poba {
        poba: f64,
        worst_pne_cost: f64,
        social_cost: f64,
        upper_bound: f64,
        lower_bound_ok: bool,
        upper_bound_ok: bool,
        equilibria: Vec<EquilibriumRecord>,
    },
    Sweep {
        csv_path: String,
        rows: Vec<SweepRecord>,
    },
}

/// Structured mirror of every CLI run: the result plus enough metadata to
/// reproduce it.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportFile {
    pub version: u32,
    pub command: String,
    pub scenario_path: String,
    pub scenario_hash: String,
    pub seed: Option<u64>,
    pub elapsed_seconds: f64,
    pub result: ReportResult,
}

pub fn save_report(report: &ReportFile, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(report)
        .map_err(|e| Error::Parse(format!("report serialization: {e}")))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

pub fn load_report(path: &Path) -> Result<ReportFile> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

/// Converts a joint profile into report entries, one per defender with her
/// per-edge amounts in edge-index order.
pub fn profile_to_records(scenario: &Scenario, profile: &InvestmentProfile) -> Vec<DefenderInvestment> {
    scenario
        .defenders()
        .iter()
        .enumerate()
        .map(|(k, d)| DefenderInvestment {
            defender: d.id.clone(),
            edges: investment_entries(scenario, profile.row(k)),
        })
        .collect()
}

/// Per-edge amounts (edge-index order) tagged with their endpoints.
pub fn investment_entries(scenario: &Scenario, amounts: &[f64]) -> Vec<InvestmentEntry> {
    scenario
        .graph()
        .edges()
        .iter()
        .map(|e| InvestmentEntry {
            from: scenario.graph().label(e.from).to_string(),
            to: scenario.graph().label(e.to).to_string(),
            amount: amounts[e.index],
        })
        .collect()
}

/// Rebuilds the joint profile recorded in a report against a scenario.
pub fn records_to_profile(
    scenario: &Scenario,
    records: &[DefenderInvestment],
) -> Result<InvestmentProfile> {
    let n = scenario.graph().edge_count();
    let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
    for e in scenario.graph().edges() {
        edge_index.insert((e.from, e.to), e.index);
    }
    let mut profile = InvestmentProfile::zeros(scenario.defenders().len(), n);
    for record in records {
        let k = scenario.defender_index(&record.defender)?;
        let mut row = vec![0.0; n];
        for entry in &record.edges {
            let from = scenario.graph().node_id(&entry.from)?;
            let to = scenario.graph().node_id(&entry.to)?;
            let ix = edge_index
                .get(&(from, to))
                .copied()
                .ok_or_else(|| Error::Parse(format!("no edge ({}, {})", entry.from, entry.to)))?;
            row[ix] = entry.amount;
        }
        profile.set_row(k, &row);
    }
    Ok(profile)
}

/// Writes the sweep table: exact header, one row per cell in the order
/// given, full-precision doubles (shortest form that round-trips).
pub fn emit_sweep_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::Domain("sweep table is empty".into()));
    }
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(out, "{},{},{},{},{}", r.alpha, r.budget, r.pne_cost, r.social_cost, r.inefficiency)
            .expect("writing to String cannot fail");
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Reads a sweep CSV back into memory; exact inverse of [`emit_sweep_csv`]
/// for finite values.
pub fn read_sweep_csv(path: &Path) -> Result<Vec<SweepRow>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header == SWEEP_CSV_HEADER => {}
        other => {
            return Err(Error::Parse(format!(
                "bad sweep CSV header {:?} (expected {SWEEP_CSV_HEADER:?})",
                other.unwrap_or("")
            )))
        }
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::Parse(format!("line {}: expected 5 fields", lineno + 2)));
        }
        let mut values = [0.0f64; 5];
        for (v, f) in values.iter_mut().zip(&fields) {
            *v = f
                .trim()
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 2)))?;
        }
        rows.push(SweepRow {
            alpha: values[0],
            budget: values[1],
            pne_cost: values[2],
            social_cost: values[3],
            inefficiency: values[4],
        });
    }
    Ok(rows)
}
