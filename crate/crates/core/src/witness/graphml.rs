//! GraphML encoding of witnesses.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Cursor;

use quick_xml::events::{BytesDecl, BytesEnd, BytesStart, BytesText, Event};
use quick_xml::{Reader, Writer};

use super::{
    GuardType, Invariant, KeyDecl, Metadata, SourceCodeGuard, Transition, Witness, WitnessError,
    WitnessState,
};

const GRAPHML_NS: &str = "http://graphml.graphdrawing.org/xmlns";
const XSI_NS: &str = "http://www.w3.org/2001/XMLSchema-instance";

/// (id, domain, attr.name, attr.type, default)
const KEYS: &[(&str, &str, &str, &str, Option<&str>)] = &[
    ("witness-type", "graph", "witness-type", "string", None),
    ("producer", "graph", "producer", "string", None),
    ("programhash", "graph", "programhash", "string", None),
    ("creationtime", "graph", "creationtime", "string", None),
    ("entry", "node", "isEntryNode", "boolean", Some("false")),
    ("invariant", "node", "invariant", "string", None),
    ("invariant.scope", "node", "invariant.scope", "string", None),
    ("enterLoopHead", "edge", "enterLoopHead", "boolean", Some("false")),
    ("startline", "edge", "startline", "int", None),
    ("endline", "edge", "endline", "int", None),
    ("control", "edge", "control", "string", None),
    ("enterFunction", "edge", "enterFunction", "string", None),
];

fn xml_err(e: impl std::fmt::Display) -> WitnessError {
    WitnessError::Xml(e.to_string())
}

type W = Writer<Cursor<Vec<u8>>>;

fn data(w: &mut W, key: &str, value: &str) -> Result<(), WitnessError> {
    w.write_event(Event::Start(BytesStart::new("data").with_attributes([("key", key)])))
        .map_err(xml_err)?;
    w.write_event(Event::Text(BytesText::new(value)))
        .map_err(xml_err)?;
    w.write_event(Event::End(BytesEnd::new("data")))
        .map_err(xml_err)?;
    Ok(())
}

fn key_decl(
    w: &mut W,
    id: &str,
    domain: &str,
    name: &str,
    ty: &str,
    default: Option<&str>,
) -> Result<(), WitnessError> {
    let start = BytesStart::new("key").with_attributes([
        ("id", id),
        ("for", domain),
        ("attr.name", name),
        ("attr.type", ty),
    ]);
    match default {
        None => w.write_event(Event::Empty(start)).map_err(xml_err)?,
        Some(d) => {
            w.write_event(Event::Start(start)).map_err(xml_err)?;
            w.write_event(Event::Start(BytesStart::new("default")))
                .map_err(xml_err)?;
            w.write_event(Event::Text(BytesText::new(d)))
                .map_err(xml_err)?;
            w.write_event(Event::End(BytesEnd::new("default")))
                .map_err(xml_err)?;
            w.write_event(Event::End(BytesEnd::new("key")))
                .map_err(xml_err)?;
        }
    }
    Ok(())
}

/// Serializes a witness. Element order follows the witness, so output is deterministic.
pub fn write_graphml(wit: &Witness) -> Result<String, WitnessError> {
    let mut w = Writer::new_with_indent(Cursor::new(Vec::new()), b' ', 2);
    w.write_event(Event::Decl(BytesDecl::new("1.0", Some("UTF-8"), None)))
        .map_err(xml_err)?;
    w.write_event(Event::Start(
        BytesStart::new("graphml").with_attributes([("xmlns", GRAPHML_NS), ("xmlns:xsi", XSI_NS)]),
    ))
    .map_err(xml_err)?;
    for (id, domain, name, ty, default) in KEYS {
        key_decl(&mut w, id, domain, name, ty, *default)?;
    }
    for (id, k) in &wit.metadata.extra_keys {
        key_decl(&mut w, id, &k.domain, &k.name, &k.ty, None)?;
    }
    w.write_event(Event::Start(
        BytesStart::new("graph").with_attributes([("edgedefault", "directed")]),
    ))
    .map_err(xml_err)?;
    data(&mut w, "witness-type", "correctness_witness")?;
    data(&mut w, "producer", &wit.metadata.producer)?;
    data(&mut w, "programhash", &wit.metadata.program_hash)?;
    if !wit.metadata.creation_time.is_empty() {
        data(&mut w, "creationtime", &wit.metadata.creation_time)?;
    }
    for (k, v) in &wit.metadata.extra {
        data(&mut w, k, v)?;
    }
    for s in &wit.states {
        let start = BytesStart::new("node").with_attributes([("id", s.id.as_str())]);
        let is_entry = s.id == wit.initial;
        if !is_entry && s.invariant.is_none() && s.scope.is_none() && s.extra.is_empty() {
            w.write_event(Event::Empty(start)).map_err(xml_err)?;
            continue;
        }
        w.write_event(Event::Start(start)).map_err(xml_err)?;
        if is_entry {
            data(&mut w, "entry", "true")?;
        }
        if let Some(inv) = &s.invariant {
            data(&mut w, "invariant", &inv.text)?;
        }
        if let Some(scope) = &s.scope {
            data(&mut w, "invariant.scope", scope)?;
        }
        for (k, v) in &s.extra {
            data(&mut w, k, v)?;
        }
        w.write_event(Event::End(BytesEnd::new("node")))
            .map_err(xml_err)?;
    }
    for t in &wit.transitions {
        let start = BytesStart::new("edge")
            .with_attributes([("source", t.source.as_str()), ("target", t.target.as_str())]);
        let g = &t.guard;
        let empty = g.guard_type == GuardType::Otherwise
            && g.startline.is_none()
            && g.endline.is_none()
            && t.extra.is_empty();
        if empty {
            w.write_event(Event::Empty(start)).map_err(xml_err)?;
            continue;
        }
        w.write_event(Event::Start(start)).map_err(xml_err)?;
        match &g.guard_type {
            GuardType::EnterLoopHead => data(&mut w, "enterLoopHead", "true")?,
            GuardType::Then => data(&mut w, "control", "condition-true")?,
            GuardType::Else => data(&mut w, "control", "condition-false")?,
            GuardType::EnterFunction(f) => data(&mut w, "enterFunction", f)?,
            GuardType::Otherwise => {}
        }
        if let Some(l) = g.startline {
            data(&mut w, "startline", &l.to_string())?;
        }
        if let Some(l) = g.endline {
            data(&mut w, "endline", &l.to_string())?;
        }
        for (k, v) in &t.extra {
            data(&mut w, k, v)?;
        }
        w.write_event(Event::End(BytesEnd::new("edge")))
            .map_err(xml_err)?;
    }
    w.write_event(Event::End(BytesEnd::new("graph")))
        .map_err(xml_err)?;
    w.write_event(Event::End(BytesEnd::new("graphml")))
        .map_err(xml_err)?;
    let mut out = String::from_utf8(w.into_inner().into_inner()).map_err(xml_err)?;
    out.push('\n');
    Ok(out)
}

#[derive(Default)]
struct Element {
    attrs: HashMap<String, String>,
    data: Vec<(String, String)>,
}

fn attrs_of(e: &BytesStart<'_>) -> Result<HashMap<String, String>, WitnessError> {
    let mut out = HashMap::new();
    for a in e.attributes() {
        let a = a.map_err(xml_err)?;
        let key = String::from_utf8_lossy(a.key.as_ref()).into_owned();
        let value = a.unescape_value().map_err(xml_err)?.into_owned();
        out.insert(key, value);
    }
    Ok(out)
}

#[derive(Default)]
struct Collector {
    key_decls: BTreeMap<String, KeyDecl>,
    graph_data: Vec<(String, String)>,
    nodes: Vec<Element>,
    edges: Vec<Element>,
    /// Open elements of interest: "graph", "node", "edge".
    context: Vec<&'static str>,
    current: Element,
    data_key: Option<String>,
    data_text: String,
    saw_graph: bool,
}

impl Collector {
    fn open(&mut self, e: &BytesStart<'_>, empty: bool) -> Result<(), WitnessError> {
        if self.data_key.is_some() {
            return Ok(());
        }
        let name = String::from_utf8_lossy(e.local_name().as_ref()).into_owned();
        let attrs = attrs_of(e)?;
        match name.as_str() {
            "key" => {
                if let Some(id) = attrs.get("id") {
                    let decl = KeyDecl {
                        domain: attrs.get("for").cloned().unwrap_or_default(),
                        name: attrs.get("attr.name").cloned().unwrap_or(id.clone()),
                        ty: attrs
                            .get("attr.type")
                            .cloned()
                            .unwrap_or_else(|| "string".into()),
                    };
                    self.key_decls.insert(id.clone(), decl);
                }
            }
            "graph" => {
                self.saw_graph = true;
                if !empty {
                    self.context.push("graph");
                }
            }
            "node" | "edge" => {
                self.current = Element {
                    attrs,
                    data: Vec::new(),
                };
                self.context
                    .push(if name == "node" { "node" } else { "edge" });
                if empty {
                    self.close(&name);
                }
            }
            "data" => {
                self.data_key = Some(attrs.get("key").cloned().unwrap_or_default());
                self.data_text.clear();
                if empty {
                    self.close("data");
                }
            }
            _ => {}
        }
        Ok(())
    }

    fn close(&mut self, name: &str) {
        match name {
            "data" => {
                if let Some(k) = self.data_key.take() {
                    let v = std::mem::take(&mut self.data_text);
                    match self.context.last() {
                        Some(&"node") | Some(&"edge") => self.current.data.push((k, v)),
                        Some(&"graph") => self.graph_data.push((k, v)),
                        _ => {}
                    }
                }
            }
            "node" | "edge" => {
                if self.context.last() == Some(&name) {
                    self.context.pop();
                    let el = std::mem::take(&mut self.current);
                    if name == "node" {
                        self.nodes.push(el);
                    } else {
                        self.edges.push(el);
                    }
                }
            }
            "graph"
                if self.context.last() == Some(&"graph") => {
                    self.context.pop();
                }
            _ => {}
        }
    }
}

/// Parses a witness document. Unknown data keys are kept as extras.
pub fn read_graphml(doc: &str) -> Result<Witness, WitnessError> {
    let mut reader = Reader::from_str(doc);
    reader.config_mut().trim_text(false);
    let mut c = Collector::default();
    loop {
        match reader.read_event().map_err(xml_err)? {
            Event::Eof => break,
            Event::Start(e) => c.open(&e, false)?,
            Event::Empty(e) => c.open(&e, true)?,
            Event::Text(t) => {
                if c.data_key.is_some() {
                    c.data_text.push_str(&t.unescape().map_err(xml_err)?);
                }
            }
            Event::CData(t) => {
                if c.data_key.is_some() {
                    c.data_text.push_str(&String::from_utf8_lossy(&t));
                }
            }
            Event::End(e) => {
                let name = String::from_utf8_lossy(e.local_name().as_ref()).into_owned();
                c.close(&name);
            }
            _ => {}
        }
    }
    if !c.saw_graph {
        return Err(WitnessError::MissingInitial);
    }
    build(c.key_decls, c.graph_data, c.nodes, c.edges)
}

fn canonical_key(id: &str, decls: &BTreeMap<String, KeyDecl>) -> String {
    let name = decls.get(id).map_or(id, |d| d.name.as_str());
    match name {
        "isEntryNode" => "entry".into(),
        other => other.to_string(),
    }
}

fn is_known(name: &str) -> bool {
    KEYS.iter().any(|(id, ..)| *id == name)
}

fn build(
    decls: BTreeMap<String, KeyDecl>,
    graph_data: Vec<(String, String)>,
    nodes: Vec<Element>,
    edges: Vec<Element>,
) -> Result<Witness, WitnessError> {
    let mut used_extra: HashSet<String> = HashSet::new();
    let mut meta = Metadata::default();
    for (k, v) in graph_data {
        match canonical_key(&k, &decls).as_str() {
            "producer" => meta.producer = v,
            "programhash" => meta.program_hash = v,
            "creationtime" => meta.creation_time = v,
            "witness-type" => {}
            _ => {
                used_extra.insert(k.clone());
                meta.extra.insert(k, v);
            }
        }
    }
    let mut states = Vec::new();
    let mut initial: Option<String> = None;
    let mut ids = HashSet::new();
    for n in nodes {
        let id = n.attrs.get("id").cloned().unwrap_or_default();
        if !ids.insert(id.clone()) {
            return Err(WitnessError::DuplicateState(id));
        }
        let mut s = WitnessState {
            id: id.clone(),
            ..WitnessState::default()
        };
        for (k, v) in n.data {
            match canonical_key(&k, &decls).as_str() {
                "entry" => {
                    if v.trim() == "true" {
                        initial = Some(id.clone());
                    }
                }
                "invariant" => {
                    let inv = Invariant::parse(v.trim()).map_err(|e| WitnessError::BadInvariant {
                        state: id.clone(),
                        message: e.to_string(),
                    })?;
                    s.invariant = Some(inv);
                }
                "invariant.scope" => {
                    if v != "main" {
                        return Err(WitnessError::BadScope {
                            state: id.clone(),
                            scope: v,
                        });
                    }
                    s.scope = Some(v);
                }
                _ => {
                    used_extra.insert(k.clone());
                    s.extra.insert(k, v);
                }
            }
        }
        states.push(s);
    }
    let initial = initial.ok_or(WitnessError::MissingInitial)?;
    let mut transitions = Vec::new();
    for e in edges {
        let source = e.attrs.get("source").cloned().unwrap_or_default();
        let target = e.attrs.get("target").cloned().unwrap_or_default();
        if !ids.contains(&source) || !ids.contains(&target) {
            return Err(WitnessError::DanglingEndpoint { from: source, to: target });
        }
        let mut guard = SourceCodeGuard {
            startline: None,
            endline: None,
            guard_type: GuardType::Otherwise,
        };
        let mut extra = BTreeMap::new();
        let mut typed: Vec<(u8, GuardType, String, String)> = Vec::new();
        for (k, v) in e.data {
            let line = |v: &str| {
                v.trim().parse::<usize>().map_err(|_| WitnessError::BadData {
                    key: k.clone(),
                    value: v.to_string(),
                })
            };
            match canonical_key(&k, &decls).as_str() {
                "startline" => guard.startline = Some(line(&v)?),
                "endline" => guard.endline = Some(line(&v)?),
                "enterLoopHead" => {
                    if v.trim() == "true" {
                        typed.push((0, GuardType::EnterLoopHead, k, v));
                    }
                }
                "control" => {
                    let ty = match v.trim() {
                        "condition-true" => GuardType::Then,
                        "condition-false" => GuardType::Else,
                        _ => {
                            return Err(WitnessError::BadData { key: k, value: v });
                        }
                    };
                    typed.push((1, ty, k, v));
                }
                "enterFunction" => {
                    typed.push((2, GuardType::EnterFunction(v.trim().to_string()), k, v))
                }
                _ => {
                    used_extra.insert(k.clone());
                    extra.insert(k, v);
                }
            }
        }
        typed.sort_by_key(|t| t.0);
        let mut typed = typed.into_iter();
        if let Some((_, ty, _, _)) = typed.next() {
            guard.guard_type = ty;
        }
        // lower-priority type keys are kept verbatim
        for (_, _, k, v) in typed {
            used_extra.insert(k.clone());
            extra.insert(k, v);
        }
        transitions.push(Transition {
            source,
            target,
            guard,
            extra,
        });
    }
    meta.extra_keys = decls
        .into_iter()
        .filter(|(id, _)| used_extra.contains(id) && !is_known(id))
        .collect();
    Ok(Witness {
        states,
        initial,
        transitions,
        metadata: meta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::COUNTDOWN_WITNESS;
    use proptest::prelude::*;

    #[test]
    fn countdown_excerpt_parses() {
        let w = read_graphml(COUNTDOWN_WITNESS).unwrap();
        let q3 = w.state("q3").unwrap();
        assert_eq!(q3.invariant.as_ref().unwrap().text, "n == x+y");
        assert_eq!(q3.scope.as_deref(), Some("main"));
        let t = w
            .transitions
            .iter()
            .find(|t| t.source == "q2" && t.target == "q3")
            .unwrap();
        assert_eq!(t.guard, SourceCodeGuard::at(3, GuardType::EnterLoopHead));
        let doc = write_graphml(&w).unwrap();
        assert!(doc.contains("<data key=\"invariant\">n == x+y</data>"));
        assert!(doc.contains("<data key=\"enterLoopHead\">true</data>"));
        assert!(doc.contains("<data key=\"invariant.scope\">main</data>"));
    }

    #[test]
    fn empty_graph_is_rejected() {
        let doc = "<graphml><graph edgedefault=\"directed\"></graph></graphml>";
        assert_eq!(read_graphml(doc), Err(WitnessError::MissingInitial));
        let doc = "<graphml><graph edgedefault=\"directed\"/></graphml>";
        assert_eq!(read_graphml(doc), Err(WitnessError::MissingInitial));
    }

    #[test]
    fn dangling_and_bad_invariants() {
        let doc = r#"<graphml><graph>
            <node id="a"><data key="entry">true</data></node>
            <edge source="a" target="b"/>
        </graph></graphml>"#;
        assert!(matches!(
            read_graphml(doc),
            Err(WitnessError::DanglingEndpoint { .. })
        ));
        let doc = r#"<graphml><graph>
            <node id="a"><data key="entry">true</data><data key="invariant">x >=</data></node>
        </graph></graphml>"#;
        assert!(matches!(
            read_graphml(doc),
            Err(WitnessError::BadInvariant { ref state, .. }) if state == "a"
        ));
    }

    #[test]
    fn foreign_keys_survive() {
        let doc = r#"<?xml version="1.0"?>
<graphml xmlns="http://graphml.graphdrawing.org/xmlns">
 <key id="k7" for="node" attr.name="isEntryNode" attr.type="boolean"/>
 <key id="sourcecodeLanguage" for="graph" attr.name="sourcecodeLanguage" attr.type="string"/>
 <key id="assumption" for="edge" attr.name="assumption" attr.type="string"/>
 <graph edgedefault="directed">
  <data key="sourcecodeLanguage">C</data>
  <data key="producer">ExternalTool 1.0</data>
  <node id="N0"><data key="k7">true</data></node>
  <node id="N1"><data key="invariant">( x &gt;= 0 )</data><data key="invariant.scope">main</data></node>
  <edge source="N0" target="N1"><data key="startline">4</data><data key="enterLoopHead">true</data><data key="assumption">x == 0;</data></edge>
 </graph>
</graphml>"#;
        let w = read_graphml(doc).unwrap();
        assert_eq!(w.initial, "N0");
        assert_eq!(w.metadata.producer, "ExternalTool 1.0");
        assert_eq!(w.metadata.extra["sourcecodeLanguage"], "C");
        assert_eq!(w.transitions[0].extra["assumption"], "x == 0;");
        assert_eq!(w.transitions[0].guard.guard_type, GuardType::EnterLoopHead);
        assert!(w.metadata.extra_keys.contains_key("assumption"));
        let once = write_graphml(&w).unwrap();
        let twice = write_graphml(&read_graphml(&once).unwrap()).unwrap();
        assert_eq!(once, twice);
    }

    pub(crate) fn arb_witness() -> impl Strategy<Value = Witness> {
        let inv = prop::option::of(prop::sample::select(vec![
            "n == x+y",
            "x >= 0",
            "true",
            "a < b && b <= 7",
            "x - y * 2 != -3",
        ]));
        let ty = prop_oneof![
            Just(GuardType::Then),
            Just(GuardType::Else),
            Just(GuardType::EnterLoopHead),
            Just(GuardType::Otherwise),
            Just(GuardType::EnterFunction("main".into())),
        ];
        (
            prop::collection::vec(inv, 1..6),
            prop::collection::vec((0usize..6, 0usize..6, ty, prop::option::of(1usize..40)), 0..8),
            "[a-z0-9 .<>&]{0,12}",
        )
            .prop_map(|(invs, edges, producer)| {
                let n = invs.len();
                let states: Vec<WitnessState> = invs
                    .into_iter()
                    .enumerate()
                    .map(|(i, inv)| WitnessState {
                        id: format!("q{i}"),
                        scope: inv.map(|_| "main".to_string()),
                        invariant: inv.map(|t| Invariant::parse(t).unwrap()),
                        extra: BTreeMap::new(),
                    })
                    .collect();
                let transitions = edges
                    .into_iter()
                    .map(|(s, t, ty, line)| Transition {
                        source: format!("q{}", s % n),
                        target: format!("q{}", t % n),
                        guard: SourceCodeGuard {
                            startline: line,
                            endline: line.map(|l| l + s % 2),
                            guard_type: ty,
                        },
                        extra: BTreeMap::new(),
                    })
                    .collect();
                Witness {
                    states,
                    initial: "q0".into(),
                    transitions,
                    metadata: Metadata {
                        producer,
                        program_hash: "ab12".into(),
                        creation_time: "2024-01-01T00:00:00Z".into(),
                        ..Metadata::default()
                    },
                }
            })
    }

    proptest! {
        #[test]
        fn round_trip(w in arb_witness()) {
            let doc = write_graphml(&w).unwrap();
            let back = read_graphml(&doc).unwrap();
            prop_assert_eq!(&back, &w);
            prop_assert_eq!(write_graphml(&back).unwrap(), doc);
        }
    }
}
