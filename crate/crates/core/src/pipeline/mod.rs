//! Multi-stage reconstruction of an argument graph from raw text.
//!
//! Stages, in order (optional ones marked `*`):
//! 1 identify components, 2* merge, 3* rewrite, 4 conclusion,
//! 5 breadth-first premise expansion, 6* attach unvisited components,
//! 7* linked/convergent premises, 8* implicit premises, 9* rebuttal/undercut,
//! 10 DAG enforcement, 11* transitive reduction. Diagrams are produced
//! separately by [`crate::diagram`].

mod config;
mod prompts;
mod trace;

#[cfg(test)]
mod tests;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::graph::{transitive_reduction, ArgEdge, ArgumentGraph, ComponentKind, GraphError, NodeId, Polarity, Span};
use crate::llm::{
    is_none_answer, parse_enumerated_components, parse_id_list, parse_label_groups, parse_relations, ChatBackend,
    LlmError,
};
use crate::text::align_span;

pub use config::{ConfigError, ModelConfig, PipelineConfig, StageToggles};
pub use prompts::{PromptTemplates, Stage, Template, TemplateError};
pub use trace::{PipelineTrace, StageRecord};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("input text is empty")]
    EmptyInput,
    #[error("no argumentative components found")]
    NoComponentsFound,
    #[error("main conclusion could not be identified")]
    ConclusionNotFound,
    #[error("model backend failed during {stage}: {source}")]
    Backend {
        stage: &'static str,
        #[source]
        source: LlmError,
    },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("graph invariant violated: {0}")]
    Graph(#[from] GraphError),
}

/// A component before the graph exists (stages 1 to 3).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Draft {
    pub text: String,
    pub span: Option<Span>,
}

enum Answer<T> {
    Parsed(T),
    Unparsed,
    Failed(LlmError),
}

/// Runs every enabled stage on `text`. Templates come from
/// `config.templates_dir` when set, otherwise the built-in set is used.
pub fn run_pipeline(
    backend: &dyn ChatBackend,
    text: &str,
    config: &PipelineConfig,
) -> Result<(ArgumentGraph, PipelineTrace), PipelineError> {
    config.validate()?;
    let templates = match &config.templates_dir {
        Some(dir) => PromptTemplates::load_dir(dir)?,
        None => PromptTemplates::builtin(),
    };
    Session::new(backend, text, config, &templates).run()
}

/// State of one reconstruction: the inputs plus the growing trace. Each stage
/// is exposed as a method so it can be driven on its own.
pub struct Session<'a> {
    backend: &'a dyn ChatBackend,
    text: &'a str,
    config: &'a PipelineConfig,
    templates: &'a PromptTemplates,
    pub trace: PipelineTrace,
}

impl<'a> Session<'a> {
    pub fn new(
        backend: &'a dyn ChatBackend,
        text: &'a str,
        config: &'a PipelineConfig,
        templates: &'a PromptTemplates,
    ) -> Self {
        Session { backend, text, config, templates, trace: PipelineTrace::default() }
    }

    pub fn run(mut self) -> Result<(ArgumentGraph, PipelineTrace), PipelineError> {
        if self.text.trim().is_empty() {
            return Err(PipelineError::EmptyInput);
        }
        let stages = self.config.stages;

        let clock = Instant::now();
        let mut drafts = self.identify_components()?;
        self.lap("identify", clock);
        if stages.merge {
            let clock = Instant::now();
            drafts = self.merge_related_components(drafts)?;
            self.lap("merge", clock);
        }
        if stages.rewrite {
            let clock = Instant::now();
            drafts = self.rewrite_components(drafts);
            self.lap("rewrite", clock);
        }
        let clock = Instant::now();
        let conclusion = self.identify_conclusion(&drafts)?;
        let mut graph = self.initial_graph(&drafts, conclusion)?;
        self.lap("conclusion", clock);

        let clock = Instant::now();
        let visited = self.build_graph_bfs(&mut graph)?;
        self.lap("expand", clock);
        if stages.attach_unvisited {
            let clock = Instant::now();
            let leftovers: BTreeSet<NodeId> = graph.node_ids().filter(|id| !visited.contains(id)).collect();
            self.attach_unvisited(&mut graph, &leftovers);
            self.lap("attach", clock);
        }
        if stages.linked {
            let clock = Instant::now();
            self.classify_premise_structure(&mut graph);
            self.lap("linked", clock);
        }
        if stages.implicit {
            let clock = Instant::now();
            self.generate_implicit_premises(&mut graph)?;
            self.lap("implicit", clock);
        }
        if stages.undercut {
            let clock = Instant::now();
            self.classify_undercuts(&mut graph);
            self.lap("undercut", clock);
        }

        if stages.dag_enforcement {
            graph.validate_dag()?;
        } else if !graph.is_acyclic() {
            self.note("dag_enforcement is off and the graph contains a cycle".into());
        }
        if stages.reduction {
            let clock = Instant::now();
            match transitive_reduction(&graph) {
                Ok(reduced) => graph = reduced,
                Err(e) => self.note(format!("reduction skipped: {e}")),
            }
            self.lap("reduction", clock);
        }
        Ok((graph, self.trace))
    }

    fn lap(&mut self, stage: &str, since: Instant) {
        self.trace.timings.push((stage.to_owned(), since.elapsed()));
    }

    fn note(&mut self, message: String) {
        self.trace.notes.push(message);
    }

    /// Attaches a warning to the most recent call record.
    fn warn(&mut self, message: String) {
        match self.trace.stage_records.last_mut() {
            Some(record) => record.warnings.push(message),
            None => self.trace.notes.push(message),
        }
    }

    /// Sends one stage prompt, re-asking with the format reminder appended
    /// while the response does not parse.
    fn ask<T: Serialize>(
        &mut self,
        stage: Stage,
        vars: &[(&str, &str)],
        mut parse: impl FnMut(&str) -> Result<T, String>,
    ) -> Answer<T> {
        let template = self.templates.get(stage);
        let system = prompts::render(&template.system, vars);
        let user = prompts::render(&template.user, vars);
        let reminder = prompts::render(&template.reminder, vars);

        for attempt in 0..=self.config.max_parse_retries {
            let prompt = if attempt == 0 { user.clone() } else { format!("{user}\n\n{reminder}") };
            let request = self.config.request(system.clone(), prompt);
            let response = match self.backend.complete(&request) {
                Ok(r) => r,
                Err(e) => {
                    self.note(format!("{}: backend error: {e}", stage.as_str()));
                    return Answer::Failed(e);
                }
            };
            let (parsed_result, warnings, value) = match parse(&response.text) {
                Ok(v) => (serde_json::to_value(&v).expect("parsed value serializes"), vec![], Some(v)),
                Err(msg) => (serde_json::Value::Null, vec![format!("unparseable response: {msg}")], None),
            };
            self.trace.stage_records.push(StageRecord {
                stage: stage.as_str().to_owned(),
                attempt,
                inputs_digest: request.digest(),
                raw_response: response.text,
                parsed_result,
                warnings,
            });
            if let Some(v) = value {
                return Answer::Parsed(v);
            }
        }
        Answer::Unparsed
    }

    fn relation_vocabulary(&self) -> &'static str {
        if self.config.stages.partial_attack {
            "support, attack or partial attack"
        } else {
            "support or attack"
        }
    }

    fn polarity(&mut self, polarity: Polarity) -> Polarity {
        if polarity == Polarity::PartialAttack && !self.config.stages.partial_attack {
            self.warn("partial attack read as attack (partial_attack is off)".into());
            Polarity::Attack
        } else {
            polarity
        }
    }

    fn align(&self, text: String) -> Draft {
        let span = align_span(self.text, &text, self.config.alignment_threshold).map(|(s, _)| s);
        Draft { text, span }
    }

    /// Stage 1.
    pub fn identify_components(&mut self) -> Result<Vec<Draft>, PipelineError> {
        let text = self.text;
        match self
            .ask(Stage::Identify, &[("text", text)], |r| parse_enumerated_components(r).map_err(|e| e.to_string()))
        {
            Answer::Parsed(items) => Ok(items.into_iter().map(|t| self.align(t)).collect()),
            Answer::Unparsed => Err(PipelineError::NoComponentsFound),
            Answer::Failed(source) => Err(PipelineError::Backend { stage: "identify", source }),
        }
    }

    /// Stage 2. Groups naming unknown or already grouped components are
    /// ignored with a warning.
    pub fn merge_related_components(&mut self, drafts: Vec<Draft>) -> Result<Vec<Draft>, PipelineError> {
        if drafts.len() < 2 {
            return Ok(drafts);
        }
        let listing = list_drafts(&drafts);
        let groups = match self.ask(Stage::Merge, &[("text", self.text), ("components", &listing)], |r| {
            parse_label_groups(r).map_err(|e| e.to_string())
        }) {
            Answer::Parsed(groups) => groups,
            _ => {
                self.note("merge: stage skipped".into());
                return Ok(drafts);
            }
        };

        let mut taken = BTreeSet::new();
        let mut accepted: Vec<BTreeSet<usize>> = Vec::new();
        for group in groups.into_iter().filter(|g| g.len() >= 2) {
            let indices: Option<BTreeSet<usize>> = group
                .iter()
                .map(|l| l.parse::<usize>().ok().filter(|&i| (1..=drafts.len()).contains(&i)).map(|i| i - 1))
                .collect();
            let Some(indices) = indices else {
                self.warn(format!("merge group [{}] ignored: unknown component", group.join(", ")));
                continue;
            };
            if !indices.is_disjoint(&taken) {
                self.warn(format!("merge group [{}] ignored: overlaps another group", group.join(", ")));
                continue;
            }
            taken.extend(&indices);
            accepted.push(indices);
        }
        if accepted.is_empty() {
            return Ok(drafts);
        }

        let mut graph = ArgumentGraph::new(self.text);
        let mut ids = Vec::with_capacity(drafts.len());
        for d in &drafts {
            ids.push(graph.add_component(d.text.clone(), ComponentKind::Explicit, d.span)?);
        }
        let mut placed: Vec<(usize, Draft)> = Vec::new();
        for indices in &accepted {
            let members: BTreeSet<NodeId> = indices.iter().map(|&i| ids[i]).collect();
            let merged = graph.merge_components(&members)?;
            let c = graph.node(merged).expect("merged node exists");
            let first = *indices.first().expect("group is non-empty");
            placed.push((first, Draft { text: c.text.clone(), span: c.span }));
        }
        placed.extend(drafts.into_iter().enumerate().filter(|(i, _)| !taken.contains(i)));
        placed.sort_by_key(|(i, _)| *i);
        Ok(placed.into_iter().map(|(_, d)| d).collect())
    }

    /// Stage 3. Spans are kept; they record provenance, not the new wording.
    pub fn rewrite_components(&mut self, drafts: Vec<Draft>) -> Vec<Draft> {
        let listing = list_drafts(&drafts);
        let count = drafts.len().to_string();
        let n = drafts.len();
        match self.ask(Stage::Rewrite, &[("text", self.text), ("components", &listing), ("count", &count)], |r| {
            let items = parse_enumerated_components(r).map_err(|e| e.to_string())?;
            if items.len() == n {
                Ok(items)
            } else {
                Err(format!("expected {n} rewrites, got {}", items.len()))
            }
        }) {
            Answer::Parsed(items) => {
                drafts.into_iter().zip(items).map(|(d, text)| Draft { text, span: d.span }).collect()
            }
            _ => {
                self.note("rewrite: originals kept".into());
                drafts
            }
        }
    }

    /// Stage 4. Returns the index of the conclusion in `drafts`.
    pub fn identify_conclusion(&mut self, drafts: &[Draft]) -> Result<usize, PipelineError> {
        match drafts.len() {
            0 => return Err(PipelineError::NoComponentsFound),
            1 => return Ok(0),
            _ => {}
        }
        let listing = list_drafts(drafts);
        let valid: BTreeSet<String> = (1..=drafts.len()).map(|i| i.to_string()).collect();
        match self.ask(Stage::Conclusion, &[("text", self.text), ("components", &listing)], |r| {
            let ids = parse_id_list(r, &valid).map_err(|e| e.to_string())?;
            ids.into_iter().next().ok_or_else(|| "no component number given".to_owned())
        }) {
            Answer::Parsed(label) => Ok(label.parse::<usize>().expect("validated label") - 1),
            Answer::Unparsed => Err(PipelineError::ConclusionNotFound),
            Answer::Failed(source) => Err(PipelineError::Backend { stage: "conclusion", source }),
        }
    }

    /// Creates the graph with components labeled `1..n` in list order.
    pub fn initial_graph(&self, drafts: &[Draft], conclusion: usize) -> Result<ArgumentGraph, PipelineError> {
        let mut graph = ArgumentGraph::new(self.text);
        let mut ids = Vec::with_capacity(drafts.len());
        for (i, d) in drafts.iter().enumerate() {
            ids.push(graph.add_labeled_component(
                d.text.clone(),
                ComponentKind::Explicit,
                d.span,
                Some((i + 1).to_string()),
            )?);
        }
        let id = *ids.get(conclusion).ok_or(PipelineError::ConclusionNotFound)?;
        graph.set_conclusion(id)?;
        Ok(graph)
    }

    /// Stage 5 for a single target. Only `candidates` may be returned.
    pub fn expand_premises(
        &mut self,
        graph: &ArgumentGraph,
        target: NodeId,
        candidates: &BTreeSet<NodeId>,
    ) -> Vec<(NodeId, Polarity)> {
        if candidates.is_empty() {
            return Vec::new();
        }
        let by_label: BTreeMap<String, NodeId> = candidates.iter().map(|&id| (label(graph, id), id)).collect();
        let valid: BTreeSet<String> = by_label.keys().cloned().collect();
        let listing = list_nodes(graph);
        let target_text = describe(graph, target);
        let candidate_list = join_labels(graph, candidates.iter().copied());
        let relations = self.relation_vocabulary();
        let answer = self.ask(
            Stage::Expand,
            &[
                ("text", self.text),
                ("components", &listing),
                ("target", &target_text),
                ("candidates", &candidate_list),
                ("relations", relations),
            ],
            |r| parse_relations(r, &valid).map_err(|e| e.to_string()),
        );
        match answer {
            Answer::Parsed(pairs) => pairs.into_iter().map(|(l, p)| (by_label[&l], self.polarity(p))).collect(),
            _ => {
                self.note(format!("expand {}: no premises after retries", label(graph, target)));
                Vec::new()
            }
        }
    }

    /// Stage 5: breadth-first expansion from the conclusion. Returns the
    /// visited set (expanded nodes plus the frontier).
    pub fn build_graph_bfs(&mut self, graph: &mut ArgumentGraph) -> Result<BTreeSet<NodeId>, PipelineError> {
        let conclusion = graph.conclusion().ok_or(PipelineError::ConclusionNotFound)?;
        let enforce = self.config.stages.dag_enforcement;
        let mut visited = BTreeSet::from([conclusion]);
        let mut queue = VecDeque::from([conclusion]);
        while let Some(current) = queue.pop_front() {
            let candidates: BTreeSet<NodeId> = graph
                .node_ids()
                .filter(|&id| if enforce { !visited.contains(&id) } else { id != current && id != conclusion })
                .collect();
            for (premise, polarity) in self.expand_premises(graph, current, &candidates) {
                let added = if enforce {
                    graph.add_edge(premise, current, polarity)
                } else {
                    graph.add_edge_allowing_cycles(premise, current, polarity)
                };
                if let Err(e) = added {
                    self.warn(format!("edge {} -> {} skipped: {e}", label(graph, premise), label(graph, current)));
                    continue;
                }
                if visited.insert(premise) {
                    queue.push_back(premise);
                }
            }
        }
        Ok(visited)
    }

    /// Stage 6. Attachments that would close a cycle merge the cycle into one
    /// composite, which is then asked again. The number of merges is capped
    /// at the number of leftovers.
    pub fn attach_unvisited(&mut self, graph: &mut ArgumentGraph, leftovers: &BTreeSet<NodeId>) {
        let enforce = self.config.stages.dag_enforcement;
        let cap = leftovers.len();
        let mut merges = 0;
        let mut queue: VecDeque<NodeId> = leftovers.iter().copied().collect();
        let mut unattached: Vec<NodeId> = Vec::new();

        while let Some(x) = queue.pop_front() {
            let candidates: BTreeSet<NodeId> =
                graph.nodes().filter(|c| c.id != x && !c.kind.is_join()).map(|c| c.id).collect();
            if candidates.is_empty() {
                unattached.push(x);
                continue;
            }
            let by_label: BTreeMap<String, NodeId> = candidates.iter().map(|&id| (label(graph, id), id)).collect();
            let valid: BTreeSet<String> = by_label.keys().cloned().collect();
            let listing = list_nodes(graph);
            let so_far = list_relations(graph);
            let target_text = describe(graph, x);
            let candidate_list = join_labels(graph, candidates.iter().copied());
            let relations = self.relation_vocabulary();
            let answer = self.ask(
                Stage::Attach,
                &[
                    ("text", self.text),
                    ("components", &listing),
                    ("relations_so_far", &so_far),
                    ("target", &target_text),
                    ("candidates", &candidate_list),
                    ("relations", relations),
                ],
                |r| {
                    let pairs = parse_relations(r, &valid).map_err(|e| e.to_string())?;
                    match pairs.into_iter().next() {
                        Some(pair) => Ok(Some(pair)),
                        None if is_none_answer(r) => Ok(None),
                        None => Err("no listed component named".to_owned()),
                    }
                },
            );
            let (t, polarity) = match answer {
                Answer::Parsed(Some((l, p))) => (by_label[&l], self.polarity(p)),
                _ => {
                    unattached.push(x);
                    continue;
                }
            };
            if !enforce {
                if let Err(e) = graph.add_edge_allowing_cycles(x, t, polarity) {
                    self.warn(format!("attachment skipped: {e}"));
                    unattached.push(x);
                }
                continue;
            }
            match graph.add_edge(x, t, polarity) {
                Ok(()) => {}
                Err(GraphError::CycleWouldForm { .. }) => {
                    if merges >= cap {
                        self.warn(format!("merge cap of {cap} reached; {} left unattached", label(graph, x)));
                        unattached.push(x);
                        continue;
                    }
                    let mut members = nodes_between(graph, t, x);
                    members.insert(x);
                    let names = join_labels(graph, members.iter().copied());
                    let attack_inside = polarity.is_attack()
                        || graph.edges().any(|e| {
                            e.polarity.is_attack() && members.contains(&e.source) && members.contains(&e.target)
                        });
                    if attack_inside {
                        self.warn(format!("cycle among {names} crosses an attack; not merged"));
                        unattached.push(x);
                        continue;
                    }
                    match graph.merge_components(&members) {
                        Ok(merged) => {
                            merges += 1;
                            self.warn(format!("cycle among {names} merged into {}", label(graph, merged)));
                            queue.retain(|id| !members.contains(id));
                            unattached.retain(|id| !members.contains(id));
                            queue.push_front(merged);
                        }
                        Err(e) => {
                            self.warn(format!("cycle among {names} could not be merged: {e}"));
                            unattached.push(x);
                        }
                    }
                }
                Err(e) => {
                    self.warn(format!("attachment skipped: {e}"));
                    unattached.push(x);
                }
            }
        }
        if !unattached.is_empty() {
            let names = join_labels(graph, unattached.iter().copied());
            self.note(format!("attach: left unattached: {names}"));
        }
    }

    /// Stage 7.
    pub fn classify_premise_structure(&mut self, graph: &mut ArgumentGraph) {
        let targets: Vec<NodeId> = graph.nodes().filter(|c| !c.kind.is_join()).map(|c| c.id).collect();
        for target in targets {
            let supporters: Vec<NodeId> = graph
                .incoming(target)
                .filter(|e| e.polarity == Polarity::Support && !graph.node(e.source).unwrap().kind.is_join())
                .map(|e| e.source)
                .collect();
            if supporters.len() < 2 {
                continue;
            }
            let by_label: BTreeMap<String, NodeId> = supporters.iter().map(|&id| (label(graph, id), id)).collect();
            let premises = supporters.iter().map(|&id| describe(graph, id)).collect::<Vec<_>>().join("\n");
            let target_text = describe(graph, target);
            let candidate_list = join_labels(graph, supporters.iter().copied());
            let answer = self.ask(
                Stage::Linked,
                &[
                    ("text", self.text),
                    ("target", &target_text),
                    ("premises", &premises),
                    ("candidates", &candidate_list),
                ],
                |r| {
                    let groups = parse_label_groups(r).map_err(|e| e.to_string())?;
                    let mut seen = BTreeSet::new();
                    for l in groups.iter().flatten() {
                        if !by_label.contains_key(l) {
                            return Err(format!("unknown premise {l}"));
                        }
                        if !seen.insert(l.clone()) {
                            return Err(format!("premise {l} appears in two groups"));
                        }
                    }
                    Ok(groups)
                },
            );
            let Answer::Parsed(groups) = answer else {
                self.note(format!("linked {}: premises left convergent", label(graph, target)));
                continue;
            };
            for group in groups.into_iter().filter(|g| g.len() >= 2) {
                let members: BTreeSet<NodeId> = group.iter().map(|l| by_label[l]).collect();
                if let Err(e) = graph.insert_linked_join(&members, target) {
                    self.warn(format!("linked group [{}] not inserted: {e}", group.join(", ")));
                }
            }
        }
    }

    /// Stage 8. Generated premises are not expanded further.
    pub fn generate_implicit_premises(&mut self, graph: &mut ArgumentGraph) -> Result<(), PipelineError> {
        struct Inference {
            premises: Vec<NodeId>,
            target: NodeId,
            join: Option<NodeId>,
        }
        let mut inferences = Vec::new();
        let targets: Vec<NodeId> = graph.nodes().filter(|c| !c.kind.is_join()).map(|c| c.id).collect();
        for target in targets {
            for edge in graph.incoming(target) {
                let kind = graph.node(edge.source).expect("edge endpoint exists").kind;
                if kind == ComponentKind::LinkedJoin {
                    let premises = graph.incoming(edge.source).map(|e| e.source).collect();
                    inferences.push(Inference { premises, target, join: Some(edge.source) });
                } else if !kind.is_join() && edge.polarity == Polarity::Support {
                    inferences.push(Inference { premises: vec![edge.source], target, join: None });
                }
            }
        }

        let mut next_label = graph
            .nodes()
            .filter_map(|c| c.label.as_deref())
            .filter_map(|l| l.trim_end_matches('\'').parse::<u32>().ok())
            .max()
            .unwrap_or(0)
            + 1;
        for inference in inferences {
            let listing = list_nodes(graph);
            let premises = inference.premises.iter().map(|&id| describe(graph, id)).collect::<Vec<_>>().join("\n");
            let target_text = describe(graph, inference.target);
            let answer = self.ask(
                Stage::Implicit,
                &[("text", self.text), ("components", &listing), ("premises", &premises), ("target", &target_text)],
                |r| {
                    if is_none_answer(r) {
                        Ok(Vec::new())
                    } else {
                        parse_enumerated_components(r).map_err(|e| e.to_string())
                    }
                },
            );
            let Answer::Parsed(items) = answer else {
                self.note(format!("implicit: inference into {} skipped", label(graph, inference.target)));
                continue;
            };
            for text in items {
                let id =
                    graph.add_labeled_component(text, ComponentKind::Implicit, None, Some(next_label.to_string()))?;
                next_label += 1;
                graph.add_edge(id, inference.join.unwrap_or(inference.target), Polarity::Support)?;
            }
        }
        Ok(())
    }

    /// Stage 9. Each attack is shown the support inferences into its target;
    /// the chosen one is split by an undercut join.
    pub fn classify_undercuts(&mut self, graph: &mut ArgumentGraph) {
        let attacks: Vec<ArgEdge> =
            graph.edges().filter(|e| e.polarity.is_attack() && !graph.node(e.target).unwrap().kind.is_join()).collect();
        for attack in attacks {
            if graph.edge(attack.source, attack.target).is_none() {
                continue;
            }
            let inferences: Vec<ArgEdge> = graph
                .incoming(attack.target)
                .filter(|e| {
                    e.polarity == Polarity::Support
                        && e.source != attack.source
                        && graph.node(e.source).unwrap().kind != ComponentKind::UndercutJoin
                })
                .collect();
            if inferences.is_empty() {
                continue;
            }
            let target_label = label(graph, attack.target);
            let listing = inferences
                .iter()
                .enumerate()
                .map(|(i, e)| format!("{}. {} supports {target_label}", i + 1, inference_source(graph, e.source)))
                .collect::<Vec<_>>()
                .join("\n");
            let valid: BTreeSet<String> = (1..=inferences.len()).map(|i| i.to_string()).collect();
            let attacker_text = describe(graph, attack.source);
            let target_text = describe(graph, attack.target);
            let answer = self.ask(
                Stage::Undercut,
                &[
                    ("text", self.text),
                    ("attacker", &attacker_text),
                    ("target", &target_text),
                    ("inferences", &listing),
                ],
                |r| {
                    let ids = parse_id_list(r, &valid).map_err(|e| e.to_string())?;
                    Ok(ids.into_iter().next())
                },
            );
            match answer {
                Answer::Parsed(Some(k)) => {
                    let inference = inferences[k.parse::<usize>().expect("validated index") - 1];
                    if let Err(e) = graph.insert_undercut(attack.source, inference) {
                        self.warn(format!("undercut not inserted: {e}"));
                    }
                }
                Answer::Parsed(None) => {}
                _ => self.note(format!(
                    "undercut: attack {} -> {target_label} kept as rebuttal",
                    label(graph, attack.source)
                )),
            }
        }
    }
}

fn label(graph: &ArgumentGraph, id: NodeId) -> String {
    graph.node(id).and_then(|c| c.label.clone()).unwrap_or_else(|| id.to_string())
}

fn describe(graph: &ArgumentGraph, id: NodeId) -> String {
    let text = graph.node(id).map(|c| c.text.as_str()).unwrap_or_default();
    format!("{}. {}", label(graph, id), text)
}

fn join_labels(graph: &ArgumentGraph, ids: impl Iterator<Item = NodeId>) -> String {
    ids.map(|id| label(graph, id)).collect::<Vec<_>>().join(", ")
}

fn list_drafts(drafts: &[Draft]) -> String {
    drafts.iter().enumerate().map(|(i, d)| format!("{}. {}", i + 1, d.text)).collect::<Vec<_>>().join("\n")
}

fn list_nodes(graph: &ArgumentGraph) -> String {
    graph.nodes().filter(|c| !c.kind.is_join()).map(|c| describe(graph, c.id)).collect::<Vec<_>>().join("\n")
}

/// Relations between labeled components, with join nodes collapsed.
fn list_relations(graph: &ArgumentGraph) -> String {
    let lines: Vec<String> = graph
        .edges()
        .filter(|e| !graph.node(e.source).unwrap().kind.is_join())
        .map(|e| {
            let verb = match e.polarity {
                Polarity::Support => "supports",
                Polarity::Attack => "attacks",
                Polarity::PartialAttack => "partially attacks",
            };
            format!("{} {verb} {}", label(graph, e.source), collapsed_target(graph, e.target))
        })
        .collect();
    if lines.is_empty() {
        "none".into()
    } else {
        lines.join("\n")
    }
}

fn collapsed_target(graph: &ArgumentGraph, mut id: NodeId) -> String {
    while graph.node(id).is_some_and(|c| c.kind.is_join()) {
        match graph.outgoing(id).next() {
            Some(e) => id = e.target,
            None => break,
        }
    }
    label(graph, id)
}

fn inference_source(graph: &ArgumentGraph, source: NodeId) -> String {
    match graph.node(source).map(|c| c.kind) {
        Some(ComponentKind::LinkedJoin) => {
            let members = join_labels(graph, graph.incoming(source).map(|e| e.source));
            format!("{members} (jointly)")
        }
        _ => label(graph, source),
    }
}

/// Nodes lying on some path from `from` to `to`, both ends included.
fn nodes_between(graph: &ArgumentGraph, from: NodeId, to: NodeId) -> BTreeSet<NodeId> {
    let mut forward = crate::graph::reachable_from(graph, from, |_| true);
    forward.insert(from);
    let mut backward = BTreeSet::from([to]);
    let mut stack = vec![to];
    while let Some(n) = stack.pop() {
        for e in graph.incoming(n) {
            if backward.insert(e.source) {
                stack.push(e.source);
            }
        }
    }
    forward.intersection(&backward).copied().collect()
}
