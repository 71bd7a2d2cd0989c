use super::*;
use crate::llm::{ChatRequest, ChatResponse, ScriptedBackend};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Mutex;

fn minimal() -> PipelineConfig {
    PipelineConfig::minimal()
}

fn drafts(texts: &[&str]) -> Vec<Draft> {
    texts.iter().map(|t| Draft { text: t.to_string(), span: None }).collect()
}

/// Graph with explicit nodes labeled 1..n.
fn labeled_graph(texts: &[&str]) -> (ArgumentGraph, Vec<NodeId>) {
    let mut g = ArgumentGraph::new(texts.join(" "));
    let ids = texts
        .iter()
        .enumerate()
        .map(|(i, t)| g.add_labeled_component(*t, ComponentKind::Explicit, None, Some((i + 1).to_string())).unwrap())
        .collect();
    (g, ids)
}

fn with_session<R>(
    backend: &ScriptedBackend,
    text: &str,
    config: &PipelineConfig,
    f: impl FnOnce(&mut Session) -> R,
) -> (R, PipelineTrace) {
    let templates = PromptTemplates::builtin();
    let mut session = Session::new(backend, text, config, &templates);
    let out = f(&mut session);
    (out, session.trace)
}

#[test]
fn single_sentence_component_is_aligned() {
    let backend = ScriptedBackend::new(["1. Socrates is mortal."]);
    let (out, trace) = with_session(&backend, "Socrates is mortal.", &minimal(), |s| s.identify_components());
    let out = out.unwrap();
    assert_eq!(out.len(), 1);
    assert_eq!(out[0].span, Some(Span::new(0, 19)));
    assert_eq!(trace.stage_records.len(), 1);
    assert!(backend.requests()[0].user_prompt.contains("Socrates is mortal."));
}

#[test]
fn unnumbered_prose_is_no_components_after_retries() {
    let backend = ScriptedBackend::new(["It is an argument.", "Still prose.", "Nope."]);
    let (out, trace) = with_session(&backend, "Some text.", &minimal(), |s| s.identify_components());
    assert!(matches!(out, Err(PipelineError::NoComponentsFound)));
    assert_eq!(trace.stage_records.len(), 3);
    assert_eq!(trace.stage_records[2].attempt, 2);
    let requests = backend.requests();
    assert!(!requests[0].user_prompt.contains("Format reminder"));
    assert!(requests[1].user_prompt.contains("Format reminder"));
}

#[test]
fn merge_examples() {
    let backend = ScriptedBackend::new(["0"]);
    let input = drafts(&["A", "B"]);
    let (out, _) = with_session(&backend, "A B", &minimal(), |s| s.merge_related_components(input.clone()));
    assert_eq!(out.unwrap(), input);

    let text = "If it rains, streets are wet. It rains.";
    let backend = ScriptedBackend::new(["1, 2"]);
    let input = vec![
        Draft { text: "If it rains, streets are wet".into(), span: Some(Span::new(0, 28)) },
        Draft { text: "It rains".into(), span: Some(Span::new(30, 38)) },
    ];
    let (out, _) = with_session(&backend, text, &minimal(), |s| s.merge_related_components(input));
    let out = out.unwrap();
    assert_eq!(out.len(), 1);
    assert_eq!(out[0].text, "If it rains, streets are wet It rains");
    assert_eq!(out[0].span, Some(Span::new(0, 38)));

    let backend = ScriptedBackend::new(["2, 7\n1, 3"]);
    let (out, trace) =
        with_session(&backend, "A B C", &minimal(), |s| s.merge_related_components(drafts(&["A", "B", "C"])));
    let texts: Vec<String> = out.unwrap().into_iter().map(|d| d.text).collect();
    assert_eq!(texts, ["A C", "B"]);
    assert_eq!(trace.warning_count(), 1);
    assert!(trace.stage_records[0].warnings[0].contains("unknown component"));
}

#[test]
fn rewrite_examples() {
    let input = vec![
        Draft { text: "He approved them".into(), span: Some(Span::new(0, 16)) },
        Draft { text: "Fees matter".into(), span: None },
    ];
    let backend = ScriptedBackend::new(["1. The teacher approved the students\n2. Fees matter"]);
    let (out, trace) =
        with_session(&backend, "He approved them. Fees matter.", &minimal(), |s| s.rewrite_components(input.clone()));
    assert_eq!(out[0].text, "The teacher approved the students");
    assert_eq!(out[0].span, input[0].span);
    assert_eq!(out[1], input[1]);
    assert!(trace.is_clean());

    let three = drafts(&["A", "B", "C"]);
    let backend = ScriptedBackend::new(["1. X\n2. Y"; 3]);
    let (out, trace) = with_session(&backend, "A B C", &minimal(), |s| s.rewrite_components(three.clone()));
    assert_eq!(out, three);
    assert_eq!(trace.stage_records.len(), 3);
    assert!(trace.notes.iter().any(|n| n.contains("originals kept")));
}

#[test]
fn conclusion_examples() {
    let backend = ScriptedBackend::new(Vec::<String>::new());
    let (out, trace) = with_session(&backend, "A", &minimal(), |s| s.identify_conclusion(&drafts(&["A"])));
    assert_eq!(out.unwrap(), 0);
    assert!(trace.stage_records.is_empty());

    let backend = ScriptedBackend::new(["2"]);
    let (out, _) = with_session(&backend, "A B", &minimal(), |s| s.identify_conclusion(&drafts(&["A", "B"])));
    assert_eq!(out.unwrap(), 1);

    let backend = ScriptedBackend::new(["5", "5", "5"]);
    let (out, trace) = with_session(&backend, "A B", &minimal(), |s| s.identify_conclusion(&drafts(&["A", "B"])));
    assert!(matches!(out, Err(PipelineError::ConclusionNotFound)));
    assert_eq!(trace.stage_records.len(), 3);
}

#[test]
fn expand_examples() {
    let (g, ids) = labeled_graph(&["C", "P", "Q"]);
    let backend = ScriptedBackend::new(["0"]);
    let candidates = BTreeSet::from([ids[1]]);
    let (out, _) = with_session(&backend, "C P Q", &minimal(), |s| s.expand_premises(&g, ids[0], &candidates));
    assert!(out.is_empty());

    // Nothing left to ask about: no request at all.
    let backend = ScriptedBackend::new(Vec::<String>::new());
    let (out, trace) = with_session(&backend, "C P Q", &minimal(), |s| s.expand_premises(&g, ids[0], &BTreeSet::new()));
    assert!(out.is_empty() && trace.stage_records.is_empty());

    let backend = ScriptedBackend::new(["2 support\n3 support"]);
    let candidates = BTreeSet::from([ids[1], ids[2]]);
    let (out, _) = with_session(&backend, "C P Q", &minimal(), |s| s.expand_premises(&g, ids[0], &candidates));
    assert_eq!(out, vec![(ids[1], Polarity::Support), (ids[2], Polarity::Support)]);

    // 2 is not a candidate any more.
    let backend = ScriptedBackend::new(["2 support, 3 attack"]);
    let candidates = BTreeSet::from([ids[2]]);
    let (out, _) = with_session(&backend, "C P Q", &minimal(), |s| s.expand_premises(&g, ids[0], &candidates));
    assert_eq!(out, vec![(ids[2], Polarity::Attack)]);

    let backend = ScriptedBackend::new(["3 partial attack"]);
    let (out, trace) = with_session(&backend, "C P Q", &minimal(), |s| s.expand_premises(&g, ids[0], &candidates));
    assert_eq!(out, vec![(ids[2], Polarity::Attack)]);
    assert_eq!(trace.warning_count(), 1);
    let backend = ScriptedBackend::new(["3 partial attack"]);
    let (out, _) =
        with_session(&backend, "C P Q", &PipelineConfig::external(), |s| s.expand_premises(&g, ids[0], &candidates));
    assert_eq!(out, vec![(ids[2], Polarity::PartialAttack)]);
}

#[test]
fn bfs_examples() {
    let (mut g, ids) = labeled_graph(&["Only claim"]);
    g.set_conclusion(ids[0]).unwrap();
    let backend = ScriptedBackend::new(Vec::<String>::new());
    let (visited, _) = with_session(&backend, "Only claim", &minimal(), |s| s.build_graph_bfs(&mut g));
    assert_eq!(visited.unwrap(), BTreeSet::from([ids[0]]));
    assert_eq!(g.edge_count(), 0);

    // The conclusion naming itself is filtered by the unvisited rule.
    let (mut g, ids) = labeled_graph(&["C", "P"]);
    g.set_conclusion(ids[0]).unwrap();
    let backend = ScriptedBackend::new(["1 support, 2 support"]);
    let (visited, _) = with_session(&backend, "C P", &minimal(), |s| s.build_graph_bfs(&mut g));
    assert_eq!(visited.unwrap().len(), 2);
    assert_eq!(g.edges().collect::<Vec<_>>(), vec![ArgEdge::new(ids[1], ids[0], Polarity::Support)]);
    assert_eq!(backend.remaining(), 0);
}

#[test]
fn attach_examples() {
    let (mut g, ids) = labeled_graph(&["C", "P"]);
    g.set_conclusion(ids[0]).unwrap();
    g.add_edge(ids[1], ids[0], Polarity::Support).unwrap();
    let before = g.clone();
    let backend = ScriptedBackend::new(Vec::<String>::new());
    with_session(&backend, "C P", &minimal(), |s| s.attach_unvisited(&mut g, &BTreeSet::new()));
    assert_eq!(g, before);

    // X -> Y, then Y -> X closes a cycle: merge, ask again, attach to 1.
    let (mut g, ids) = labeled_graph(&["C", "X", "Y"]);
    g.set_conclusion(ids[0]).unwrap();
    let backend = ScriptedBackend::new(["3 support", "2 support", "1 support"]);
    let leftovers = BTreeSet::from([ids[1], ids[2]]);
    let (_, trace) = with_session(&backend, "C X Y", &minimal(), |s| s.attach_unvisited(&mut g, &leftovers));
    assert_eq!(g.node_count(), 2);
    let merged = g.nodes().find(|c| c.id != ids[0]).unwrap();
    assert_eq!(merged.label.as_deref(), Some("2'"));
    assert_eq!(g.edges().collect::<Vec<_>>(), vec![ArgEdge::new(merged.id, ids[0], Polarity::Support)]);
    assert!(g.validate_dag().is_ok());
    assert_eq!(trace.stage_records.len(), 3);
    assert!(trace.notes.is_empty());

    // A cycle closed by an attack is not merged away.
    let (mut g, ids) = labeled_graph(&["C", "X", "Y"]);
    g.set_conclusion(ids[0]).unwrap();
    let backend = ScriptedBackend::new(["3 support", "2 attack"]);
    let leftovers = BTreeSet::from([ids[1], ids[2]]);
    let (_, trace) = with_session(&backend, "C X Y", &minimal(), |s| s.attach_unvisited(&mut g, &leftovers));
    assert_eq!(g.node_count(), 3);
    assert_eq!(g.edges().collect::<Vec<_>>(), vec![ArgEdge::new(ids[1], ids[2], Polarity::Support)]);
    assert!(trace.stage_records[1].warnings.iter().any(|w| w.contains("crosses an attack")));
    assert!(trace.notes[0].contains("left unattached: 3"));

    // Attaching to a mid-graph node.
    let (mut g, ids) = labeled_graph(&["C", "P", "L"]);
    g.set_conclusion(ids[0]).unwrap();
    g.add_edge(ids[1], ids[0], Polarity::Support).unwrap();
    let backend = ScriptedBackend::new(["2 attack"]);
    with_session(&backend, "C P L", &minimal(), |s| s.attach_unvisited(&mut g, &BTreeSet::from([ids[2]])));
    assert_eq!(g.edge(ids[2], ids[1]).unwrap().polarity, Polarity::Attack);
    assert!(g.is_acyclic());

    // "0" leaves the node isolated and says so.
    let (mut g, ids) = labeled_graph(&["C", "L"]);
    g.set_conclusion(ids[0]).unwrap();
    let backend = ScriptedBackend::new(["0"]);
    let (_, trace) =
        with_session(&backend, "C L", &minimal(), |s| s.attach_unvisited(&mut g, &BTreeSet::from([ids[1]])));
    assert_eq!(g.node_count(), 2);
    assert_eq!(g.edge_count(), 0);
    assert!(trace.notes[0].contains("left unattached: 2"));
}

#[test]
fn linked_examples() {
    let (mut g, ids) = labeled_graph(&["C", "A"]);
    g.add_edge(ids[1], ids[0], Polarity::Support).unwrap();
    let backend = ScriptedBackend::new(Vec::<String>::new());
    let (_, trace) = with_session(&backend, "", &minimal(), |s| s.classify_premise_structure(&mut g));
    assert!(trace.stage_records.is_empty());

    let (mut g, ids) = labeled_graph(&["C", "A", "B", "D"]);
    for &p in &ids[1..] {
        g.add_edge(p, ids[0], Polarity::Support).unwrap();
    }
    let backend = ScriptedBackend::new(["2, 3\n3", "2, 3\n4"]);
    let (_, trace) = with_session(&backend, "", &minimal(), |s| s.classify_premise_structure(&mut g));
    assert_eq!(trace.stage_records.len(), 2);
    assert!(trace.stage_records[0].warnings[0].contains("two groups"));
    let join = g.nodes().find(|c| c.kind == ComponentKind::LinkedJoin).unwrap().id;
    assert_eq!(g.in_degree(join), 2);
    assert_eq!(g.edge(join, ids[0]).unwrap().polarity, Polarity::Support);
    assert!(g.edge(ids[3], ids[0]).is_some());
    g.validate_dag().unwrap();
}

#[test]
fn implicit_examples() {
    let (mut g, ids) = labeled_graph(&["C", "A", "B"]);
    g.add_edge(ids[1], ids[0], Polarity::Support).unwrap();
    g.add_edge(ids[2], ids[0], Polarity::Support).unwrap();
    let before = g.clone();
    let backend = ScriptedBackend::new(["none", "none"]);
    with_session(&backend, "", &minimal(), |s| s.generate_implicit_premises(&mut g)).0.unwrap();
    assert_eq!(g, before);

    let join = g.insert_linked_join(&BTreeSet::from([ids[1], ids[2]]), ids[0]).unwrap();
    let backend = ScriptedBackend::new(["1. Hidden assumption."]);
    let (_, trace) = with_session(&backend, "", &minimal(), |s| s.generate_implicit_premises(&mut g));
    assert_eq!(g.in_degree(join), 3);
    assert_eq!(g.out_degree(join), 1);
    let implicit = g.nodes().find(|c| c.kind == ComponentKind::Implicit).unwrap();
    assert_eq!(implicit.label.as_deref(), Some("4"));
    assert_eq!(implicit.span, None);
    assert!(trace.stage_records[0].parsed_result.is_array());
}

#[test]
fn undercut_examples() {
    let (mut g, _) = labeled_graph(&["C", "A"]);
    let backend = ScriptedBackend::new(Vec::<String>::new());
    let (_, trace) = with_session(&backend, "", &minimal(), |s| s.classify_undercuts(&mut g));
    assert!(trace.stage_records.is_empty());

    let (mut g, ids) = labeled_graph(&["It rained.", "The lawn is wet.", "The sprinkler ran overnight."]);
    let (rained, lawn, sprinkler) = (ids[0], ids[1], ids[2]);
    g.set_conclusion(rained).unwrap();
    g.add_edge(lawn, rained, Polarity::Support).unwrap();
    g.add_edge(sprinkler, rained, Polarity::Attack).unwrap();
    let backend = ScriptedBackend::new(["1"]);
    with_session(&backend, "", &minimal(), |s| s.classify_undercuts(&mut g));
    let join = g.nodes().find(|c| c.kind == ComponentKind::UndercutJoin).unwrap().id;
    assert_eq!(g.edge(sprinkler, join).unwrap().polarity, Polarity::Attack);
    assert_eq!(g.edge(lawn, join).unwrap().polarity, Polarity::Support);
    assert_eq!(g.edge(join, rained).unwrap().polarity, Polarity::Support);
    assert!(g.edge(lawn, rained).is_none());
    assert!(backend.requests()[0].user_prompt.contains("1. 2 supports 1"));

    // A nonexistent inference: retried, then kept as a rebuttal.
    let (mut g, ids) = labeled_graph(&["C", "A", "B"]);
    g.add_edge(ids[1], ids[0], Polarity::Support).unwrap();
    g.add_edge(ids[2], ids[0], Polarity::Attack).unwrap();
    let before = g.clone();
    let backend = ScriptedBackend::new(["4", "4", "4"]);
    let (_, trace) = with_session(&backend, "", &minimal(), |s| s.classify_undercuts(&mut g));
    assert_eq!(g, before);
    assert!(trace.notes[0].contains("rebuttal"));
}

#[test]
fn minimal_run_on_two_components() {
    let text = "Socrates is a man. Therefore Socrates is mortal.";
    let backend = ScriptedBackend::new(["1. Socrates is a man.\n2. Socrates is mortal.", "2", "1 support"]);
    let (graph, trace) = run_pipeline(&backend, text, &minimal()).unwrap();
    assert_eq!(graph.node_count(), 2);
    assert_eq!(graph.edge_count(), 1);
    let conclusion = graph.node(graph.conclusion().unwrap()).unwrap();
    assert_eq!(conclusion.text, "Socrates is mortal.");
    assert_eq!(conclusion.span.unwrap().slice(text), "Socrates is mortal.");
    assert_eq!(trace.stage_records.len(), 3);
    assert!(trace.is_clean());
}

#[test]
fn backend_failure_in_first_stage_aborts() {
    let backend = ScriptedBackend::new(Vec::<String>::new());
    assert!(matches!(
        run_pipeline(&backend, "Text.", &minimal()),
        Err(PipelineError::Backend { stage: "identify", .. })
    ));
    assert!(matches!(run_pipeline(&backend, "  ", &minimal()), Err(PipelineError::EmptyInput)));
}

/// Answers every request from a seeded generator: random numbered lists,
/// random label/relation lines, occasional garbage.
struct RandomBackend {
    rng: Mutex<ChaCha8Rng>,
    n: usize,
}

impl ChatBackend for RandomBackend {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, crate::llm::LlmError> {
        let mut rng = self.rng.lock().unwrap();
        let n = self.n;
        let prompt = &request.user_prompt;
        let text = if prompt.contains("list its argumentative components") {
            (1..=n).map(|i| format!("{i}. Component number {i}")).collect::<Vec<_>>().join("\n")
        } else if rng.random_bool(0.1) {
            "I am not sure.".to_owned()
        } else if prompt.contains("numbered list of exactly") {
            (1..=n).map(|i| format!("{i}. Rewritten {i}")).collect::<Vec<_>>().join("\n")
        } else if prompt.contains("unstated assumptions") {
            if rng.random_bool(0.3) {
                "1. Assumed.".into()
            } else {
                "0".into()
            }
        } else if rng.random_bool(0.2) {
            "0".to_owned()
        } else {
            let k = rng.random_range(1..=3);
            (0..k)
                .map(|_| {
                    let label = rng.random_range(1..=n + 1);
                    let tag = ["support", "attack", "partial attack"][rng.random_range(0..3)];
                    format!("{label} {tag}")
                })
                .collect::<Vec<_>>()
                .join("\n")
        };
        Ok(ChatResponse::text(text))
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bfs_yields_bounded_acyclic_graph(seed in any::<u64>(), n in 1usize..9) {
        let text: String = (1..=n).map(|i| format!("Component number {i}. ")).collect();
        let backend = RandomBackend { rng: Mutex::new(ChaCha8Rng::seed_from_u64(seed)), n };
        let config = minimal();
        let templates = PromptTemplates::builtin();
        let mut session = Session::new(&backend, &text, &config, &templates);
        let drafts = session.identify_components().unwrap();
        let Ok(c) = session.identify_conclusion(&drafts) else { return Ok(()) };
        let mut graph = session.initial_graph(&drafts, c).unwrap();
        session.build_graph_bfs(&mut graph).unwrap();
        prop_assert!(graph.is_acyclic());
        prop_assert!(graph.edge_count() <= n * (n - 1) / 2);
        let expansions = session.trace.records_for("expand").filter(|r| r.attempt == 0).count();
        prop_assert!(expansions <= n);
    }

    #[test]
    fn full_runs_respect_graph_invariants(seed in any::<u64>(), n in 1usize..7) {
        let text: String = (1..=n).map(|i| format!("Component number {i}. ")).collect();
        let backend = RandomBackend { rng: Mutex::new(ChaCha8Rng::seed_from_u64(seed)), n };
        let config = PipelineConfig::full();
        let Ok((graph, _)) = run_pipeline(&backend, &text, &config) else { return Ok(()) };
        prop_assert!(graph.validate_dag().is_ok());
        prop_assert_eq!(&crate::graph::transitive_reduction(&graph).unwrap(), &graph);
        for c in graph.nodes() {
            if c.kind == ComponentKind::Implicit {
                prop_assert!(c.span.is_none());
            }
            if let Some(span) = c.span {
                prop_assert!(span.is_valid_for(graph.text_len()));
            }
        }
    }

    #[test]
    fn disabling_structure_stages_leaves_no_joins(seed in any::<u64>(), n in 1usize..7) {
        let text: String = (1..=n).map(|i| format!("Component number {i}. ")).collect();
        let backend = RandomBackend { rng: Mutex::new(ChaCha8Rng::seed_from_u64(seed)), n };
        let mut config = PipelineConfig::full();
        config.stages.linked = false;
        config.stages.implicit = false;
        config.stages.undercut = false;
        let Ok((graph, _)) = run_pipeline(&backend, &text, &config) else { return Ok(()) };
        prop_assert!(graph.nodes().all(|c| c.kind == ComponentKind::Explicit));
    }
}
