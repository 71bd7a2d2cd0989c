//! Corpus files, standoff annotations and graph files.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::eval::{GoldAnnotation, GoldComponent, GoldRelation};
use crate::graph::{ArgumentGraph, ComponentKind, GraphJsonError, Polarity, Role, Span};

pub const CORPUS_SCHEMA: &str = "argcorpus/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Document {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold: Option<GoldAnnotation>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, Value>,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Document { id: id.into(), text: text.into(), gold: None, metadata: BTreeMap::new() }
    }

    pub fn char_len(&self) -> usize {
        self.text.chars().count()
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CorpusFile<D> {
    schema: String,
    documents: Vec<D>,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed JSON: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("unsupported corpus schema '{0}' (expected {CORPUS_SCHEMA})")]
    UnsupportedSchema(String),
    #[error("document {document}: {field}: {message}")]
    SchemaViolation { document: String, field: String, message: String },
    #[error("{}:{line}: entity {entity}: surface {surface:?} does not match text {found:?}", path.display())]
    OffsetMismatch { path: PathBuf, line: usize, entity: String, surface: String, found: String },
    #[error("{}:{line}: unknown label '{label}'", path.display())]
    UnknownLabel { path: PathBuf, line: usize, label: String },
    #[error("{}:{line}: {message}", path.display())]
    Standoff { path: PathBuf, line: usize, message: String },
    #[error("{}: {source}", path.display())]
    Graph { path: PathBuf, source: GraphJsonError },
}

fn read(path: &Path) -> Result<String, CorpusError> {
    fs::read_to_string(path).map_err(|source| CorpusError::Io { path: path.to_owned(), source })
}

fn write(path: &Path, contents: &str) -> Result<(), CorpusError> {
    fs::write(path, contents).map_err(|source| CorpusError::Io { path: path.to_owned(), source })
}

fn violation(document: &str, field: impl Into<String>, message: impl Into<String>) -> CorpusError {
    CorpusError::SchemaViolation { document: document.to_owned(), field: field.into(), message: message.into() }
}

/// Parses a corpus file and validates every gold annotation against its text.
pub fn parse_corpus(json: &str) -> Result<Vec<Document>, CorpusError> {
    let file: CorpusFile<Value> = serde_json::from_str(json)?;
    if file.schema != CORPUS_SCHEMA {
        return Err(CorpusError::UnsupportedSchema(file.schema));
    }
    let mut ids = BTreeSet::new();
    let mut docs = Vec::with_capacity(file.documents.len());
    for (i, raw) in file.documents.into_iter().enumerate() {
        let name = raw.get("id").and_then(Value::as_str).map_or_else(|| format!("#{i}"), str::to_owned);
        let doc: Document = serde_path_to_error::deserialize(raw)
            .map_err(|e| violation(&name, e.path().to_string(), e.inner().to_string()))?;
        if !ids.insert(doc.id.clone()) {
            return Err(violation(&doc.id, "id", "duplicate document id"));
        }
        if let Some(gold) = &doc.gold {
            gold.validate(&doc.text).map_err(|e| violation(&doc.id, format!("gold.{}", e.path), e.message))?;
        }
        docs.push(doc);
    }
    Ok(docs)
}

pub fn corpus_to_json(docs: &[Document]) -> String {
    let file = CorpusFile { schema: CORPUS_SCHEMA.to_owned(), documents: docs.to_vec() };
    let mut s = serde_json::to_string_pretty(&file).expect("corpus serializes");
    s.push('\n');
    s
}

pub fn load_textbook_corpus(path: &Path) -> Result<Vec<Document>, CorpusError> {
    parse_corpus(&read(path)?)
}

pub fn save_corpus(docs: &[Document], path: &Path) -> Result<(), CorpusError> {
    write(path, &corpus_to_json(docs))
}

/// Mean document length in characters; 0 for an empty corpus.
pub fn mean_text_length(docs: &[Document]) -> f64 {
    if docs.is_empty() {
        return 0.0;
    }
    docs.iter().map(Document::char_len).sum::<usize>() as f64 / docs.len() as f64
}

/// Writes a graph file. The graph must pass structural validation.
pub fn save_graph(graph: &ArgumentGraph, path: &Path) -> Result<(), CorpusError> {
    graph
        .validate()
        .map_err(|e| CorpusError::Graph { path: path.to_owned(), source: GraphJsonError::SchemaViolation(e) })?;
    write(path, &graph.to_json())
}

pub fn load_graph(path: &Path) -> Result<ArgumentGraph, CorpusError> {
    ArgumentGraph::from_json(&read(path)?).map_err(|source| CorpusError::Graph { path: path.to_owned(), source })
}

fn component_role(label: &str) -> Option<Role> {
    match label.to_ascii_lowercase().replace(['_', '-'], "").as_str() {
        "majorclaim" => Some(Role::MajorClaim),
        "claim" => Some(Role::Claim),
        "premise" => Some(Role::Premise),
        _ => None,
    }
}

fn relation_polarity(label: &str) -> Option<Polarity> {
    let l = label.to_ascii_lowercase().replace(['_', ' '], "-");
    match l.trim_end_matches('s') {
        "support" => Some(Polarity::Support),
        "attack" => Some(Polarity::Attack),
        "partial-attack" => Some(Polarity::PartialAttack),
        _ => None,
    }
}

struct Entity {
    id: String,
    role: Role,
    span: Span,
    surface: String,
}

/// Reads a text file with its standoff annotation: entity lines
/// `T<n> <label> <start> <end> <surface>` and relation lines
/// `R<n> <label> Arg1:T<a> Arg2:T<b>`. Fields may be separated by tabs or
/// spaces. Attribute lines (`A<n> <name> <entity> <value>`) are kept as
/// document metadata; note lines are ignored.
pub fn load_standoff(txt_path: &Path, ann_path: &Path) -> Result<Document, CorpusError> {
    let text = read(txt_path)?;
    let ann = read(ann_path)?;
    let id = txt_path.file_stem().map_or_else(|| "document".to_owned(), |s| s.to_string_lossy().into_owned());
    parse_standoff(&id, &text, &ann, ann_path)
}

pub fn parse_standoff(id: &str, text: &str, ann: &str, ann_path: &Path) -> Result<Document, CorpusError> {
    let chars: Vec<char> = text.chars().collect();
    let err = |line: usize, message: String| CorpusError::Standoff { path: ann_path.to_owned(), line, message };
    let mut entities: Vec<Entity> = Vec::new();
    let mut raw_relations: Vec<(usize, String, String, Polarity)> = Vec::new();
    let mut metadata = BTreeMap::new();

    for (n, line) in ann.lines().enumerate() {
        let line_no = n + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let (key, rest) = line.split_once(['\t', ' ']).ok_or_else(|| err(line_no, "line has a single field".into()))?;
        match key.chars().next() {
            Some('T') => {
                let (head, surface) = match rest.split_once('\t') {
                    Some((h, s)) => (h.to_owned(), s.to_owned()),
                    None => {
                        let parts: Vec<&str> = rest.splitn(4, ' ').collect();
                        if parts.len() < 3 {
                            return Err(err(line_no, format!("entity {key}: expected label, start, end")));
                        }
                        (parts[..3].join(" "), parts.get(3).copied().unwrap_or("").to_owned())
                    }
                };
                let fields: Vec<&str> = head.split_whitespace().collect();
                let [label, start, end] = fields[..] else {
                    return Err(err(line_no, format!("entity {key}: expected label, start, end")));
                };
                let role = component_role(label).ok_or_else(|| CorpusError::UnknownLabel {
                    path: ann_path.to_owned(),
                    line: line_no,
                    label: label.to_owned(),
                })?;
                let parse =
                    |s: &str| s.parse::<usize>().map_err(|_| err(line_no, format!("entity {key}: bad offset '{s}'")));
                let span = Span::new(parse(start)?, parse(end)?);
                if !span.is_valid_for(chars.len()) {
                    return Err(err(
                        line_no,
                        format!("entity {key}: [{}, {}) outside text of length {}", span.start, span.end, chars.len()),
                    ));
                }
                let found: String = chars[span.start..span.end].iter().collect();
                if found != surface {
                    return Err(CorpusError::OffsetMismatch {
                        path: ann_path.to_owned(),
                        line: line_no,
                        entity: key.to_owned(),
                        surface,
                        found,
                    });
                }
                if entities.iter().any(|e| e.id == key) {
                    return Err(err(line_no, format!("duplicate entity {key}")));
                }
                entities.push(Entity { id: key.to_owned(), role, span, surface });
            }
            Some('R') => {
                let fields: Vec<&str> = rest.split_whitespace().collect();
                let [label, arg1, arg2] = fields[..] else {
                    return Err(err(line_no, format!("relation {key}: expected label, Arg1, Arg2")));
                };
                let polarity = relation_polarity(label).ok_or_else(|| CorpusError::UnknownLabel {
                    path: ann_path.to_owned(),
                    line: line_no,
                    label: label.to_owned(),
                })?;
                let source = arg1
                    .strip_prefix("Arg1:")
                    .ok_or_else(|| err(line_no, format!("relation {key}: expected Arg1:<entity>")))?;
                let target = arg2
                    .strip_prefix("Arg2:")
                    .ok_or_else(|| err(line_no, format!("relation {key}: expected Arg2:<entity>")))?;
                raw_relations.push((line_no, source.to_owned(), target.to_owned(), polarity));
            }
            Some('A') => {
                let fields: Vec<&str> = rest.split_whitespace().collect();
                if let [name, entity, value @ ..] = &fields[..] {
                    metadata.insert(format!("{}.{entity}", name.to_ascii_lowercase()), Value::from(value.join(" ")));
                }
            }
            Some('#') => {}
            _ => return Err(err(line_no, format!("unsupported annotation '{key}'"))),
        }
    }

    entities.sort_by_key(|e| (e.span.start, e.span.end));
    let index: BTreeMap<&str, usize> = entities.iter().enumerate().map(|(i, e)| (e.id.as_str(), i)).collect();
    let mut relations = Vec::with_capacity(raw_relations.len());
    for (line_no, source, target, polarity) in raw_relations {
        let lookup = |e: &str| index.get(e).copied().ok_or_else(|| err(line_no, format!("unknown entity {e}")));
        relations.push(GoldRelation {
            source: lookup(&source)?,
            target: lookup(&target)?,
            polarity,
            undercut_of: None,
        });
    }
    let majors: Vec<usize> = (0..entities.len()).filter(|&i| entities[i].role == Role::MajorClaim).collect();
    let gold = GoldAnnotation {
        components: entities
            .iter()
            .map(|e| GoldComponent {
                text: e.surface.clone(),
                span: Some(e.span),
                kind: ComponentKind::Explicit,
                role: Some(e.role),
            })
            .collect(),
        relations,
        conclusion: (majors.len() == 1).then(|| majors[0]),
    };
    gold.validate(text).map_err(|e| violation(id, format!("gold.{}", e.path), e.message))?;
    Ok(Document { id: id.to_owned(), text: text.to_owned(), gold: Some(gold), metadata })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Document {
        let text = "Cats are great. They purr.";
        let mut doc = Document::new("d1", text);
        doc.gold = Some(GoldAnnotation {
            components: vec![
                GoldComponent {
                    text: "Cats are great.".into(),
                    span: Some(Span::new(0, 15)),
                    kind: ComponentKind::Explicit,
                    role: None,
                },
                GoldComponent {
                    text: "They purr.".into(),
                    span: Some(Span::new(16, 26)),
                    kind: ComponentKind::Explicit,
                    role: None,
                },
            ],
            relations: vec![GoldRelation { source: 1, target: 0, polarity: Polarity::Support, undercut_of: None }],
            conclusion: Some(0),
        });
        doc
    }

    #[test]
    fn one_document_corpus() {
        let json = corpus_to_json(&[sample()]);
        let docs = parse_corpus(&json).unwrap();
        assert_eq!(docs, vec![sample()]);
        assert_eq!(mean_text_length(&docs), 26.0);
    }

    #[test]
    fn out_of_range_relation_is_located() {
        let mut doc = sample();
        doc.gold.as_mut().unwrap().relations[0].target = 99;
        let err = parse_corpus(&corpus_to_json(&[doc])).unwrap_err();
        match err {
            CorpusError::SchemaViolation { document, field, .. } => {
                assert_eq!(document, "d1");
                assert_eq!(field, "gold.relations[0].target");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn bad_field_type_is_located() {
        let json = r#"{"schema":"argcorpus/1","documents":[{"id":"x","text":"t","gold":{"components":[{"text":"t","span":["a",1]}]}}]}"#;
        match parse_corpus(json).unwrap_err() {
            CorpusError::SchemaViolation { document, field, .. } => {
                assert_eq!(document, "x");
                assert_eq!(field, "gold.components[0].span[0]");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn schema_and_duplicates() {
        assert!(matches!(
            parse_corpus(r#"{"schema":"other/2","documents":[]}"#),
            Err(CorpusError::UnsupportedSchema(_))
        ));
        let json = corpus_to_json(&[sample(), sample()]);
        assert!(matches!(parse_corpus(&json), Err(CorpusError::SchemaViolation { field, .. }) if field == "id"));
    }

    #[test]
    fn standoff_entities_and_relations() {
        let text = "Smoking is bad. It causes cancer.";
        let ann = "T1\tClaim 0 15\tSmoking is bad.\nT2 Premise 16 33 It causes cancer.\nR1 supports Arg1:T2 Arg2:T1\nA1\tStance T1 For\n";
        let doc = parse_standoff("e1", text, ann, Path::new("e1.ann")).unwrap();
        let gold = doc.gold.unwrap();
        assert_eq!(gold.components.len(), 2);
        assert_eq!(gold.components[0].role, Some(Role::Claim));
        assert_eq!(
            gold.relations,
            vec![GoldRelation { source: 1, target: 0, polarity: Polarity::Support, undercut_of: None }]
        );
        assert_eq!(doc.metadata["stance.T1"], "For");
        assert_eq!(gold.conclusion, None);
    }

    #[test]
    fn standoff_errors() {
        let text = "Smoking is bad.";
        let e = parse_standoff("e", text, "T1 Claim 0 7 Smoked", Path::new("e.ann")).unwrap_err();
        assert!(matches!(e, CorpusError::OffsetMismatch { ref entity, line: 1, .. } if entity == "T1"), "{e}");
        let e = parse_standoff("e", text, "T1 Conclusion 0 7 Smoking", Path::new("e.ann")).unwrap_err();
        assert!(matches!(e, CorpusError::UnknownLabel { ref label, .. } if label == "Conclusion"));
        let e = parse_standoff("e", text, "T1 Claim 0 7 Smoking\nR1 refutes Arg1:T1 Arg2:T1", Path::new("e.ann"))
            .unwrap_err();
        assert!(matches!(e, CorpusError::UnknownLabel { line: 2, .. }));
        let e = parse_standoff("e", text, "T1 Claim 0 7 Smoking\nR1 attacks Arg1:T1 Arg2:T9", Path::new("e.ann"))
            .unwrap_err();
        assert!(e.to_string().contains("unknown entity T9"), "{e}");
    }

    #[test]
    fn standoff_labels() {
        assert_eq!(relation_polarity("Partial-Attack"), Some(Polarity::PartialAttack));
        assert_eq!(relation_polarity("partial-attacks"), Some(Polarity::PartialAttack));
        assert_eq!(relation_polarity("Support"), Some(Polarity::Support));
        assert_eq!(component_role("MajorClaim"), Some(Role::MajorClaim));
    }

    #[test]
    fn graph_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.json");
        let empty = ArgumentGraph::new("");
        save_graph(&empty, &path).unwrap();
        let back = load_graph(&path).unwrap();
        assert_eq!(back.to_json(), empty.to_json());

        let json = r#"{"version":1,"source_text":"","nodes":[{"id":0,"text":"a","kind":"explicit","span":null,"label":null}],"edges":[{"source":0,"target":5,"polarity":"support"}],"conclusion":null}"#;
        fs::write(&path, json).unwrap();
        let err = load_graph(&path).unwrap_err();
        assert!(matches!(err, CorpusError::Graph { source: GraphJsonError::SchemaViolation(_), .. }), "{err}");
        fs::write(&path, json.replace("\"version\":1", "\"version\":7")).unwrap();
        assert!(matches!(
            load_graph(&path).unwrap_err(),
            CorpusError::Graph { source: GraphJsonError::UnsupportedVersion(7), .. }
        ));
    }
}
