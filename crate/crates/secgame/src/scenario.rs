//! Scenario model: an attack graph plus the defenders playing on it, with
//! structured validation that reports every violated invariant instead of
//! stopping at the first.

use std::collections::{HashMap, HashSet};

use crate::error::{Diagnostic, Error, Result, Severity};
use crate::graph::{enumerate_paths, AttackGraph, PathSet, DEFAULT_PATH_CAP};
use crate::perception::{BehavioralLevel, ProbabilityModel};

/// One defended asset: a node and the financial loss if it is compromised.
#[derive(Debug, Clone, PartialEq)]
pub struct Asset {
    pub node: usize,
    pub loss: f64,
}

/// A defender: budget, behavioral level, and the assets she is responsible
/// for. Asset nodes may be shared across defenders.
#[derive(Debug, Clone)]
pub struct Defender {
    pub id: String,
    pub budget: f64,
    pub alpha: BehavioralLevel,
    pub assets: Vec<Asset>,
}

/// Unvalidated scenario data, as parsed from a scenario file or built by
/// hand. [`validate`] reports diagnostics; [`Scenario::from_spec`] builds
/// the typed scenario when there are no errors.
#[derive(Debug, Clone)]
pub struct ScenarioSpec {
    pub nodes: Vec<String>,
    pub source: String,
    /// (from, to, p0) triples.
    pub edges: Vec<(String, String, f64)>,
    /// (id, budget, alpha, [(asset node, loss)]) per defender.
    #[allow(clippy::type_complexity)]
    pub defenders: Vec<(String, f64, f64, Vec<(String, f64)>)>,
}

/// Checks every invariant of the scenario data and returns one diagnostic
/// per violation. Unreachable assets produce warnings, not errors. An empty
/// list (or warnings only) means the spec is buildable.
pub fn validate(spec: &ScenarioSpec) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let mut index: HashMap<&str, usize> = HashMap::new();
    for (i, n) in spec.nodes.iter().enumerate() {
        if index.insert(n.as_str(), i).is_some() {
            diags.push(Diagnostic::error(format!("duplicate node id {n:?}")));
        }
    }
    let source_ix = index.get(spec.source.as_str()).copied();
    if source_ix.is_none() {
        diags.push(Diagnostic::error(format!("source {:?} is not a listed node", spec.source)));
    }

    let mut seen_edges = HashSet::new();
    for (from, to, p0) in &spec.edges {
        if !index.contains_key(from.as_str()) {
            diags.push(Diagnostic::error(format!("edge references unknown node {from:?}")));
        }
        if !index.contains_key(to.as_str()) {
            diags.push(Diagnostic::error(format!("edge references unknown node {to:?}")));
        }
        if from == to {
            diags.push(Diagnostic::error(format!("self-loop on node {from:?}")));
        }
        if !seen_edges.insert((from.as_str(), to.as_str())) {
            diags.push(Diagnostic::error(format!("duplicate edge ({from:?}, {to:?})")));
        }
        if !(p0.is_finite() && *p0 > 0.0 && *p0 <= 1.0) {
            diags.push(Diagnostic::error(format!("edge ({from:?}, {to:?}): p0 {p0} out of (0,1]")));
        }
        if to == &spec.source {
            diags.push(Diagnostic::error(format!("source has incoming edge from {from:?}")));
        }
    }

    let mut seen_defenders = HashSet::new();
    for (id, budget, alpha, assets) in &spec.defenders {
        if !seen_defenders.insert(id.as_str()) {
            diags.push(Diagnostic::error(format!("duplicate defender id {id:?}")));
        }
        if !(budget.is_finite() && *budget >= 0.0) {
            diags.push(Diagnostic::error(format!("defender {id:?}: budget {budget} must be >= 0")));
        }
        if !(alpha.is_finite() && *alpha > 0.0 && *alpha <= 1.0) {
            diags.push(Diagnostic::error(format!("defender {id:?}: alpha {alpha} out of (0,1]")));
        }
        let mut seen_assets = HashSet::new();
        for (node, loss) in assets {
            if !index.contains_key(node.as_str()) {
                diags.push(Diagnostic::error(format!("defender {id:?}: unknown asset node {node:?}")));
            }
            if node == &spec.source {
                diags.push(Diagnostic::error(format!("defender {id:?}: the source cannot be an asset")));
            }
            if !seen_assets.insert(node.as_str()) {
                diags.push(Diagnostic::error(format!("defender {id:?}: duplicate asset node {node:?}")));
            }
            if !(loss.is_finite() && *loss >= 0.0) {
                diags.push(Diagnostic::error(format!("defender {id:?}: loss {loss} for {node:?} must be >= 0")));
            }
        }
    }

    // Reachability warnings need a well-formed graph; skip them when there
    // are structural errors.
    if diags.iter().all(|d| d.severity != Severity::Error) {
        if let Ok(graph) = AttackGraph::new(spec.nodes.clone(), &spec.source, spec.edges.clone()) {
            let reachable = graph.reachable();
            for (id, _, _, assets) in &spec.defenders {
                for (node, _) in assets {
                    let ix = graph.node_id(node).expect("validated above");
                    if !reachable[ix] {
                        diags.push(Diagnostic::warning(format!(
                            "defender {id:?}: asset {node:?} is unreachable from the source"
                        )));
                    }
                }
            }
        }
    }
    diags
}

/// A validated, immutable scenario. Path sets for every asset node are
/// enumerated once at construction and shared by all cost evaluations.
#[derive(Debug, Clone)]
pub struct Scenario {
    graph: AttackGraph,
    model: ProbabilityModel,
    defenders: Vec<Defender>,
    path_cap: usize,
    /// Exhaustive simple-path sets keyed by asset node.
    pathsets: HashMap<usize, PathSet>,
    warnings: Vec<Diagnostic>,
}

impl Scenario {
    pub fn from_spec(spec: &ScenarioSpec) -> Result<Self> {
        Self::from_spec_with_cap(spec, DEFAULT_PATH_CAP)
    }

    pub fn from_spec_with_cap(spec: &ScenarioSpec, path_cap: usize) -> Result<Self> {
        let diags = validate(spec);
        let (errors, warnings): (Vec<_>, Vec<_>) =
            diags.into_iter().partition(|d| d.severity == Severity::Error);
        if !errors.is_empty() {
            return Err(Error::Validation(errors));
        }
        let graph = AttackGraph::new(spec.nodes.clone(), &spec.source, spec.edges.clone())?;
        let mut defenders = Vec::with_capacity(spec.defenders.len());
        for (id, budget, alpha, assets) in &spec.defenders {
            let assets = assets
                .iter()
                .map(|(node, loss)| Ok(Asset { node: graph.node_id(node)?, loss: *loss }))
                .collect::<Result<Vec<_>>>()?;
            defenders.push(Defender {
                id: id.clone(),
                budget: *budget,
                alpha: BehavioralLevel::new(*alpha)?,
                assets,
            });
        }
        let mut pathsets = HashMap::new();
        for d in &defenders {
            for a in &d.assets {
                pathsets
                    .entry(a.node)
                    .or_insert_with(|| enumerate_paths(&graph, a.node, path_cap));
            }
        }
        for ps in pathsets.values() {
            ps.require_exhaustive(&graph, path_cap)?;
        }
        let model = ProbabilityModel::exponential_from_graph(&graph);
        Ok(Self { graph, model, defenders, path_cap, pathsets, warnings })
    }

    pub fn graph(&self) -> &AttackGraph {
        &self.graph
    }

    pub fn model(&self) -> &ProbabilityModel {
        &self.model
    }

    pub fn defenders(&self) -> &[Defender] {
        &self.defenders
    }

    pub fn defender_index(&self, id: &str) -> Result<usize> {
        self.defenders
            .iter()
            .position(|d| d.id == id)
            .ok_or_else(|| Error::UnknownDefender(id.to_string()))
    }

    pub fn path_cap(&self) -> usize {
        self.path_cap
    }

    /// The exhaustive path set for an asset node (present for every node
    /// that appears as some defender's asset).
    pub fn pathset(&self, node: usize) -> Option<&PathSet> {
        self.pathsets.get(&node)
    }

    pub fn warnings(&self) -> &[Diagnostic] {
        &self.warnings
    }

    pub fn total_budget(&self) -> f64 {
        self.defenders.iter().map(|d| d.budget).sum()
    }

    /// Derived copy with every defender's alpha and budget replaced; used
    /// by parameter sweeps. Budgets are scaled so their proportions match
    /// the template (an all-zero template splits equally).
    pub fn with_alpha_and_total_budget(&self, alpha: BehavioralLevel, total_budget: f64) -> Self {
        let mut out = self.clone();
        let template_total = self.total_budget();
        let k = self.defenders.len() as f64;
        for d in &mut out.defenders {
            let share = if template_total > 0.0 { d.budget / template_total } else { 1.0 / k };
            d.alpha = alpha;
            d.budget = total_budget * share;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_spec() -> ScenarioSpec {
        ScenarioSpec {
            nodes: vec!["vs".into(), "v1".into()],
            source: "vs".into(),
            edges: vec![("vs".into(), "v1".into(), 1.0)],
            defenders: vec![("D1".into(), 1.0, 0.5, vec![("v1".into(), 1.0)])],
        }
    }

    #[test]
    fn valid_line_scenario_has_no_diagnostics() {
        assert!(validate(&line_spec()).is_empty());
        assert!(Scenario::from_spec(&line_spec()).is_ok());
    }

    #[test]
    fn edge_into_source_is_diagnosed() {
        let mut s = line_spec();
        s.edges.push(("v1".into(), "vs".into(), 1.0));
        let diags = validate(&s);
        assert!(diags.iter().any(|d| d.message.contains("source has incoming edge")));
    }

    #[test]
    fn p0_out_of_range_is_diagnosed() {
        let mut s = line_spec();
        s.edges[0].2 = 1.5;
        let diags = validate(&s);
        assert!(diags.iter().any(|d| d.message.contains("out of (0,1]")));
    }

    #[test]
    fn alpha_zero_is_diagnosed() {
        let mut s = line_spec();
        s.defenders[0].2 = 0.0;
        let diags = validate(&s);
        assert!(diags.iter().any(|d| d.message.contains("alpha")));
        assert!(Scenario::from_spec(&s).is_err());
    }

    #[test]
    fn unreachable_asset_is_warning_not_error() {
        let mut s = line_spec();
        s.nodes.push("v2".into());
        s.defenders[0].3.push(("v2".into(), 1.0));
        let diags = validate(&s);
        assert!(diags.iter().any(|d| d.severity == Severity::Warning));
        let scen = Scenario::from_spec(&s).unwrap();
        assert_eq!(scen.warnings().len(), 1);
    }

    #[test]
    fn negative_budget_and_loss_are_errors() {
        let mut s = line_spec();
        s.defenders[0].1 = -1.0;
        s.defenders[0].3[0].1 = -2.0;
        let diags = validate(&s);
        assert_eq!(diags.iter().filter(|d| d.severity == Severity::Error).count(), 2);
    }

    #[test]
    fn budget_rescaling_preserves_proportions() {
        let mut s = line_spec();
        s.defenders.push(("D2".into(), 3.0, 0.5, vec![("v1".into(), 1.0)]));
        let scen = Scenario::from_spec(&s).unwrap();
        let scaled =
            scen.with_alpha_and_total_budget(BehavioralLevel::new(0.7).unwrap(), 8.0);
        assert_eq!(scaled.defenders()[0].budget, 2.0);
        assert_eq!(scaled.defenders()[1].budget, 6.0);
        assert_eq!(scaled.defenders()[0].alpha.alpha(), 0.7);
    }
}
