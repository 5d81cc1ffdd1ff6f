//! Text and document forms of bucket trees.
//!
//! Text: a bucket is `{l1,l2,...}`, optionally followed by its children in
//! parentheses, e.g. `{1,2}({3,4}({5}),{6})`. Whitespace is ignored.
//!
//! Document: `{"capacity": b, "root": {"labels": [...], "children": [...]}}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::{BucketNode, BucketTree, Label};

pub fn encode(tree: &BucketTree) -> String {
    let mut out = String::new();
    encode_node(tree.root(), &mut out);
    out
}

fn encode_node(node: &BucketNode, out: &mut String) {
    out.push('{');
    for (i, l) in node.labels().iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&l.to_string());
    }
    out.push('}');
    if !node.children().is_empty() {
        out.push('(');
        for (i, c) in node.children().iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            encode_node(c, out);
        }
        out.push(')');
    }
}

/// Parses the text form and validates the result against capacity bound `b`.
pub fn decode(text: &str, b: u32) -> Result<BucketTree> {
    let root = parse_node_text(text)?;
    BucketTree::new(b, root)
}

/// Parses the text form without validating tree invariants.
pub fn parse_node_text(text: &str) -> Result<BucketNode> {
    let mut p = Parser { bytes: text.as_bytes(), pos: 0 };
    let node = p.node()?;
    p.skip_ws();
    if p.pos != p.bytes.len() {
        return Err(p.error("trailing input"));
    }
    Ok(node)
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> Error {
        Error::Parse { position: self.pos, message: message.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected '{}'", c as char)))
        }
    }

    fn label(&mut self) -> Result<Label> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected a label"));
        }
        let digits = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii digits");
        let value: Label = digits.parse().map_err(|_| Error::Parse {
            position: start,
            message: "label out of range".into(),
        })?;
        if value == 0 {
            return Err(Error::Parse { position: start, message: "labels start at 1".into() });
        }
        Ok(value)
    }

    fn node(&mut self) -> Result<BucketNode> {
        self.expect(b'{')?;
        let mut labels = vec![self.label()?];
        while self.peek() == Some(b',') {
            self.pos += 1;
            labels.push(self.label()?);
        }
        self.expect(b'}')?;
        let mut children = Vec::new();
        if self.peek() == Some(b'(') {
            self.pos += 1;
            children.push(self.node()?);
            while self.peek() == Some(b',') {
                self.pos += 1;
                children.push(self.node()?);
            }
            self.expect(b')')?;
        }
        Ok(BucketNode::new(labels, children))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeDoc {
    pub labels: Vec<Label>,
    #[serde(default)]
    pub children: Vec<NodeDoc>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeDoc {
    pub capacity: u32,
    pub root: NodeDoc,
}

impl From<&BucketNode> for NodeDoc {
    fn from(node: &BucketNode) -> Self {
        Self {
            labels: node.labels().to_vec(),
            children: node.children().iter().map(|c| NodeDoc::from(c.as_ref())).collect(),
        }
    }
}

impl From<&NodeDoc> for BucketNode {
    fn from(doc: &NodeDoc) -> Self {
        BucketNode::new(doc.labels.clone(), doc.children.iter().map(BucketNode::from).collect())
    }
}

pub fn to_doc(tree: &BucketTree) -> TreeDoc {
    TreeDoc { capacity: tree.capacity_bound(), root: NodeDoc::from(tree.root()) }
}

pub fn from_doc(doc: &TreeDoc) -> Result<BucketTree> {
    BucketTree::new(doc.capacity, BucketNode::from(&doc.root))
}

pub fn to_json(tree: &BucketTree) -> String {
    serde_json::to_string(&to_doc(tree)).expect("tree documents always serialise")
}

pub fn from_json(text: &str) -> Result<BucketTree> {
    let doc: TreeDoc = serde_json::from_str(text).map_err(|e| Error::Parse {
        position: e.column(),
        message: e.to_string(),
    })?;
    from_doc(&doc)
}
