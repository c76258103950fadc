//! Typed attribute values and the annotation store.
//!
//! Grammars never hold metadata themselves. An [`AnnotationStore`] maps node
//! ids of one grammar to their attributes, so several independent stores can
//! describe the same grammar.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::model::{Grammar, NodeId};
use crate::span::SourceSpan;

/// Characters that may appear as punctuation inside a `{{ ... }}` sequence.
pub const SEQ_PUNCTUATION: &str = "(),;.^+-*/=<>[]?!:|&@#%";

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AttributeValue {
    Id(String),
    Str(String),
    Int(i64),
    Tuple(Vec<(String, AttributeValue)>),
    Seq(Vec<SeqElement>),
    /// Presence-only attribute, written `name;`.
    None,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SeqElement {
    Ident(String),
    Str(String),
    /// Always non-negative: a leading `-` is tokenized as punctuation.
    Num(i64),
    Tuple(Vec<(String, AttributeValue)>),
    Seq(Vec<SeqElement>),
    Punct(char),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ValueType {
    Id,
    Str,
    Int,
    Tuple,
    Seq,
}

impl ValueType {
    pub fn from_name(name: &str) -> Option<ValueType> {
        Some(match name {
            "ID" => ValueType::Id,
            "STRING" => ValueType::Str,
            "INTEGER" => ValueType::Int,
            "TUPLE" => ValueType::Tuple,
            "SEQUENCE" => ValueType::Seq,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            ValueType::Id => "ID",
            ValueType::Str => "STRING",
            ValueType::Int => "INTEGER",
            ValueType::Tuple => "TUPLE",
            ValueType::Seq => "SEQUENCE",
        }
    }
}

impl AttributeValue {
    /// The kind tag, or `None` for presence-only values.
    pub fn value_type(&self) -> Option<ValueType> {
        Some(match self {
            AttributeValue::Id(_) => ValueType::Id,
            AttributeValue::Str(_) => ValueType::Str,
            AttributeValue::Int(_) => ValueType::Int,
            AttributeValue::Tuple(_) => ValueType::Tuple,
            AttributeValue::Seq(_) => ValueType::Seq,
            AttributeValue::None => return None,
        })
    }

    pub fn type_name(&self) -> &'static str {
        self.value_type().map_or("no value", ValueType::name)
    }

    pub fn as_id(&self) -> Option<&str> {
        match self {
            AttributeValue::Id(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            AttributeValue::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_seq(&self) -> Option<&[SeqElement]> {
        match self {
            AttributeValue::Seq(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_tuple(&self) -> Option<&[(String, AttributeValue)]> {
        match self {
            AttributeValue::Tuple(t) => Some(t),
            _ => None,
        }
    }

    /// Looks up a field of a tuple value.
    pub fn field(&self, name: &str) -> Option<&AttributeValue> {
        self.as_tuple()?.iter().find(|(k, _)| k == name).map(|(_, v)| v)
    }
}

fn write_quoted(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    f.write_str("'")?;
    for c in s.chars() {
        match c {
            '\r' => f.write_str("\\r")?,
            '\n' => f.write_str("\\n")?,
            '\t' => f.write_str("\\t")?,
            '\\' => f.write_str("\\\\")?,
            '\'' => f.write_str("\\'")?,
            c => write!(f, "{c}")?,
        }
    }
    f.write_str("'")
}

fn write_tuple(f: &mut fmt::Formatter<'_>, fields: &[(String, AttributeValue)]) -> fmt::Result {
    f.write_str("{")?;
    for (name, value) in fields {
        match value {
            AttributeValue::None => write!(f, " {name};")?,
            v => write!(f, " {name} = {v};")?,
        }
    }
    f.write_str(" }")
}

/// Concrete syntax, as accepted by [`crate::syntax::parse_value`].
impl fmt::Display for AttributeValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttributeValue::Id(s) => f.write_str(s),
            AttributeValue::Str(s) => write_quoted(f, s),
            AttributeValue::Int(n) => write!(f, "{n}"),
            AttributeValue::Tuple(t) => write_tuple(f, t),
            AttributeValue::Seq(items) => {
                f.write_str("{{")?;
                for item in items {
                    write!(f, " {item}")?;
                }
                f.write_str(" }}")
            }
            AttributeValue::None => Ok(()),
        }
    }
}

impl fmt::Display for SeqElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeqElement::Ident(s) => f.write_str(s),
            SeqElement::Str(s) => write_quoted(f, s),
            SeqElement::Num(n) => write!(f, "{n}"),
            SeqElement::Tuple(t) => write_tuple(f, t),
            SeqElement::Seq(items) => write!(f, "{}", AttributeValue::Seq(items.clone())),
            SeqElement::Punct(c) => write!(f, "{c}"),
        }
    }
}

/// An embedded language whose programs are the tokens of a sequence value.
///
/// This is the extension point for attribute types beyond the built-in five:
/// the value is stored as a plain sequence and interpreted by whoever reads it.
pub trait SeqDsl {
    type Output;
    type Error;

    fn parse(&self, tokens: &[SeqElement]) -> Result<Self::Output, Self::Error>;
}

/// Attributes on one node, in attachment order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Annotation {
    pub attributes: Vec<(String, AttributeValue)>,
}

impl Annotation {
    pub fn get(&self, name: &str) -> Option<&AttributeValue> {
        self.attributes.iter().find(|(k, _)| k == name).map(|(_, v)| v)
    }
}

/// Where an attribute came from, for conflict diagnostics.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Origin {
    pub aspect: String,
    pub location: String,
}

impl Origin {
    pub fn at(aspect: &str, span: &SourceSpan) -> Origin {
        Origin { aspect: aspect.to_string(), location: span.to_string() }
    }
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.location)
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum MetaError {
    #[error("attribute `{name}` is already attached to this node{}", first.as_ref().map(|o| format!(" (first attached at {o})")).unwrap_or_default())]
    Duplicate { node: NodeId, name: String, first: Option<Origin> },
    #[error("node {0} does not belong to the annotated grammar")]
    UnknownNode(NodeId),
}

/// Metadata for the nodes of one grammar.
#[derive(Clone, Debug)]
pub struct AnnotationStore {
    known: HashSet<NodeId>,
    annotations: BTreeMap<NodeId, Annotation>,
    origins: HashMap<(NodeId, String), Origin>,
}

impl AnnotationStore {
    /// An empty store accepting the nodes of `grammar`, including the grammar
    /// node itself.
    pub fn for_grammar(grammar: &Grammar) -> AnnotationStore {
        let mut known: HashSet<NodeId> = grammar.walk().into_iter().map(|v| v.id).collect();
        known.insert(grammar.id);
        AnnotationStore { known, annotations: BTreeMap::new(), origins: HashMap::new() }
    }

    pub fn attach(&mut self, node: NodeId, name: &str, value: AttributeValue) -> Result<(), MetaError> {
        self.attach_from(node, name, value, None)
    }

    pub fn attach_from(
        &mut self,
        node: NodeId,
        name: &str,
        value: AttributeValue,
        origin: Option<Origin>,
    ) -> Result<(), MetaError> {
        if !self.known.contains(&node) {
            return Err(MetaError::UnknownNode(node));
        }
        let ann = self.annotations.entry(node).or_default();
        if ann.get(name).is_some() {
            return Err(MetaError::Duplicate {
                node,
                name: name.to_string(),
                first: self.origins.get(&(node, name.to_string())).cloned(),
            });
        }
        ann.attributes.push((name.to_string(), value));
        if let Some(o) = origin {
            self.origins.insert((node, name.to_string()), o);
        }
        Ok(())
    }

    pub fn lookup(&self, node: NodeId, name: &str) -> Option<&AttributeValue> {
        self.annotations.get(&node)?.get(name)
    }

    pub fn annotation(&self, node: NodeId) -> Option<&Annotation> {
        self.annotations.get(&node)
    }

    pub fn origin(&self, node: NodeId, name: &str) -> Option<&Origin> {
        self.origins.get(&(node, name.to_string()))
    }

    pub fn contains_node(&self, node: NodeId) -> bool {
        self.known.contains(&node)
    }

    /// All annotated nodes in id order.
    pub fn iter(&self) -> impl Iterator<Item = (NodeId, &Annotation)> {
        self.annotations.iter().map(|(k, v)| (*k, v))
    }

    /// Total number of attached attributes.
    pub fn len(&self) -> usize {
        self.annotations.values().map(|a| a.attributes.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Two stores are equal when they attach the same values to the same
/// (node, name) pairs; attachment order and origins are ignored.
impl PartialEq for AnnotationStore {
    fn eq(&self, other: &Self) -> bool {
        fn flatten(s: &AnnotationStore) -> BTreeMap<(NodeId, &str), &AttributeValue> {
            s.annotations
                .iter()
                .flat_map(|(id, a)| a.attributes.iter().map(move |(k, v)| ((*id, k.as_str()), v)))
                .collect()
        }
        flatten(self) == flatten(other)
    }
}

/// A query-side restriction on one attribute of a node.
#[derive(Clone, Debug, PartialEq)]
pub enum AttributeCondition {
    /// `attr = value`
    Equals(String, AttributeValue),
    /// `attr`
    Present(String),
    /// `attr : TYPE`
    HasType(String, ValueType),
    /// `!attr`
    Absent(String),
}

impl AttributeCondition {
    pub fn attribute(&self) -> &str {
        match self {
            AttributeCondition::Equals(n, _)
            | AttributeCondition::Present(n)
            | AttributeCondition::HasType(n, _)
            | AttributeCondition::Absent(n) => n,
        }
    }
}

/// Checks `cond` against the value of its attribute (`None` when absent).
pub fn check_condition(value: Option<&AttributeValue>, cond: &AttributeCondition) -> bool {
    match cond {
        AttributeCondition::Equals(_, expected) => value == Some(expected),
        AttributeCondition::Present(_) => value.is_some(),
        AttributeCondition::HasType(_, t) => value.and_then(AttributeValue::value_type) == Some(*t),
        AttributeCondition::Absent(_) => value.is_none(),
    }
}
