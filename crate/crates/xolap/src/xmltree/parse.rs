//! Recursive-descent parser for the supported XML subset.
//!
//! Supported: elements, attributes, character data, CDATA (treated as text),
//! comments (ignored), an optional leading XML declaration. Rejected with an
//! error naming the construct: DTDs and processing instructions. Namespace
//! prefixes are kept verbatim as part of the label. Input must be UTF-8.

use std::collections::BTreeMap;

use super::{DataNode, DataTree, NodeId, XmlError};

/// Parses a document into a [`DataTree`].
///
/// Element nesting becomes tree structure, attributes become leaf children
/// labeled `@name` (in source order, before element children), and the
/// node's value is the whitespace-trimmed concatenation of its direct text
/// content (absent when empty).
pub fn parse_document(input: &[u8]) -> Result<DataTree, XmlError> {
    let text = match std::str::from_utf8(input) {
        Ok(t) => t,
        Err(e) => {
            let (line, col) = line_col_at(input, e.valid_up_to());
            return Err(XmlError::Parse { line, col, message: "input is not valid UTF-8".into() });
        }
    };
    let mut parser = Parser { chars: text.char_indices().peekable(), text, line: 1, col: 1, nodes: BTreeMap::new(), next_id: 0 };
    parser.document()
}

fn line_col_at(input: &[u8], offset: usize) -> (u32, u32) {
    let mut line = 1u32;
    let mut col = 1u32;
    for &b in &input[..offset] {
        if b == b'\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    (line, col)
}

struct Parser<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    text: &'a str,
    line: u32,
    col: u32,
    nodes: BTreeMap<NodeId, DataNode>,
    next_id: u32,
}

impl<'a> Parser<'a> {
    fn document(&mut self) -> Result<DataTree, XmlError> {
        self.skip_prolog()?;
        let root = match self.peek() {
            Some('<') => self.element()?,
            _ => return Err(self.err("expected a root element")),
        };
        // Only whitespace and comments may follow the document element.
        loop {
            self.skip_whitespace();
            match self.peek() {
                None => break,
                Some('<') if self.lookahead("<!--") => self.comment()?,
                _ => return Err(self.err("content after the document element")),
            }
        }
        DataTree::from_parts(root, std::mem::take(&mut self.nodes))
    }

    fn skip_prolog(&mut self) -> Result<(), XmlError> {
        self.skip_whitespace();
        // The XML declaration is tolerated and skipped; any other <?...?> is
        // rejected below as a processing instruction.
        if self.lookahead("<?xml") {
            while let Some(c) = self.bump() {
                if c == '>' {
                    break;
                }
            }
        }
        loop {
            self.skip_whitespace();
            if self.lookahead("<!--") {
                self.comment()?;
            } else {
                return Ok(());
            }
        }
    }

    /// Parses one element and returns its node id.
    fn element(&mut self) -> Result<NodeId, XmlError> {
        self.expect('<')?;
        self.check_markup_start()?;
        let label = self.name()?;
        let id = self.fresh_id();
        let mut children = Vec::new();
        let mut seen_attrs: Vec<String> = Vec::new();
        // Attributes.
        loop {
            let had_space = self.skip_whitespace();
            match self.peek() {
                Some('/') | Some('>') => break,
                Some(_) if had_space => {
                    let (line, col) = (self.line, self.col);
                    let attr_name = self.name()?;
                    if seen_attrs.iter().any(|a| a == &attr_name) {
                        return Err(XmlError::Parse {
                            line,
                            col,
                            message: format!("duplicate attribute '{attr_name}'"),
                        });
                    }
                    seen_attrs.push(attr_name.clone());
                    self.skip_whitespace();
                    self.expect('=')?;
                    self.skip_whitespace();
                    let value = self.attr_value()?;
                    let attr_id = self.fresh_id();
                    self.nodes.insert(
                        attr_id,
                        DataNode {
                            id: attr_id,
                            label: format!("@{attr_name}"),
                            value: Some(value),
                            children: Vec::new(),
                        },
                    );
                    children.push(attr_id);
                }
                _ => return Err(self.err("expected attribute, '>' or '/>'")),
            }
        }
        let mut value_runs = String::new();
        if self.peek() == Some('/') {
            self.bump();
            self.expect('>')?;
        } else {
            self.expect('>')?;
            // Content: text runs, child elements, CDATA, comments.
            loop {
                match self.peek() {
                    None => return Err(self.err(&format!("unexpected end of input inside <{label}>"))),
                    Some('<') => {
                        if self.lookahead("<!--") {
                            self.comment()?;
                        } else if self.lookahead("<![CDATA[") {
                            value_runs.push_str(&self.cdata()?);
                        } else if self.lookahead("</") {
                            self.bump();
                            self.bump();
                            let close = self.name()?;
                            if close != label {
                                return Err(self.err(&format!(
                                    "mismatched closing tag: expected </{label}>, found </{close}>"
                                )));
                            }
                            self.skip_whitespace();
                            self.expect('>')?;
                            break;
                        } else {
                            children.push(self.element()?);
                        }
                    }
                    Some(_) => value_runs.push_str(&self.text_run()?),
                }
            }
        }
        let trimmed = value_runs.trim();
        let value = if trimmed.is_empty() { None } else { Some(trimmed.to_string()) };
        self.nodes.insert(id, DataNode { id, label, value, children });
        Ok(id)
    }

    /// Rejects markup other than elements right after a consumed `<`.
    fn check_markup_start(&mut self) -> Result<(), XmlError> {
        match self.peek() {
            Some('?') => Err(XmlError::Unsupported {
                construct: "processing instruction".into(),
                line: self.line,
                col: self.col,
            }),
            Some('!') => {
                if self.lookahead_from_here("DOCTYPE", 1) {
                    Err(XmlError::Unsupported {
                        construct: "DTD".into(),
                        line: self.line,
                        col: self.col,
                    })
                } else {
                    Err(self.err("unsupported markup"))
                }
            }
            _ => Ok(()),
        }
    }

    fn comment(&mut self) -> Result<(), XmlError> {
        for _ in 0..4 {
            self.bump();
        }
        loop {
            if self.lookahead("-->") {
                self.bump();
                self.bump();
                self.bump();
                return Ok(());
            }
            if self.bump().is_none() {
                return Err(self.err("unterminated comment"));
            }
        }
    }

    fn cdata(&mut self) -> Result<String, XmlError> {
        for _ in 0.."<![CDATA[".len() {
            self.bump();
        }
        let mut out = String::new();
        loop {
            if self.lookahead("]]>") {
                self.bump();
                self.bump();
                self.bump();
                return Ok(out);
            }
            match self.bump() {
                Some(c) => out.push(c),
                None => return Err(self.err("unterminated CDATA section")),
            }
        }
    }

    fn text_run(&mut self) -> Result<String, XmlError> {
        let mut out = String::new();
        while let Some(c) = self.peek() {
            match c {
                '<' => break,
                '&' => out.push(self.entity()?),
                _ => {
                    out.push(c);
                    self.bump();
                }
            }
        }
        Ok(out)
    }

    fn entity(&mut self) -> Result<char, XmlError> {
        let (line, col) = (self.line, self.col);
        self.bump(); // '&'
        let mut name = String::new();
        loop {
            match self.bump() {
                Some(';') => break,
                Some(c) if name.len() < 12 => name.push(c),
                _ => {
                    return Err(XmlError::Parse { line, col, message: "malformed entity reference".into() })
                }
            }
        }
        let decoded = match name.as_str() {
            "amp" => '&',
            "lt" => '<',
            "gt" => '>',
            "quot" => '"',
            "apos" => '\'',
            _ if name.starts_with("#x") || name.starts_with("#X") => {
                u32::from_str_radix(&name[2..], 16)
                    .ok()
                    .and_then(char::from_u32)
                    .ok_or(XmlError::Parse { line, col, message: format!("bad character reference &{name};") })?
            }
            _ if name.starts_with('#') => name[1..]
                .parse::<u32>()
                .ok()
                .and_then(char::from_u32)
                .ok_or(XmlError::Parse { line, col, message: format!("bad character reference &{name};") })?,
            _ => {
                return Err(XmlError::Parse {
                    line,
                    col,
                    message: format!("unknown entity &{name};"),
                })
            }
        };
        Ok(decoded)
    }

    fn attr_value(&mut self) -> Result<String, XmlError> {
        let quote = match self.peek() {
            Some(q @ ('"' | '\'')) => {
                self.bump();
                q
            }
            _ => return Err(self.err("expected quoted attribute value")),
        };
        let mut out = String::new();
        loop {
            match self.peek() {
                Some(c) if c == quote => {
                    self.bump();
                    return Ok(out);
                }
                Some('&') => out.push(self.entity()?),
                Some('<') => return Err(self.err("'<' not allowed in attribute value")),
                Some(c) => {
                    out.push(c);
                    self.bump();
                }
                None => return Err(self.err("unterminated attribute value")),
            }
        }
    }

    fn name(&mut self) -> Result<String, XmlError> {
        let mut out = String::new();
        match self.peek() {
            Some(c) if c.is_alphabetic() || c == '_' => {
                out.push(c);
                self.bump();
            }
            _ => return Err(self.err("expected a name")),
        }
        while let Some(c) = self.peek() {
            if c.is_alphanumeric() || matches!(c, '_' | '-' | '.' | ':') {
                out.push(c);
                self.bump();
            } else {
                break;
            }
        }
        Ok(out)
    }

    fn fresh_id(&mut self) -> NodeId {
        let id = NodeId(self.next_id);
        self.next_id += 1;
        id
    }

    fn skip_whitespace(&mut self) -> bool {
        let mut any = false;
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                any = true;
                self.bump();
            } else {
                break;
            }
        }
        any
    }

    fn lookahead(&mut self, s: &str) -> bool {
        match self.chars.peek() {
            Some(&(i, _)) => self.text[i..].starts_with(s),
            None => false,
        }
    }

    fn lookahead_from_here(&mut self, s: &str, skip: usize) -> bool {
        match self.chars.peek() {
            Some(&(i, _)) => self.text[i + skip..].starts_with(s),
            None => false,
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().map(|&(_, c)| c)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next().map(|(_, c)| c);
        if let Some(c) = c {
            if c == '\n' {
                self.line += 1;
                self.col = 1;
            } else {
                self.col += 1;
            }
        }
        c
    }

    fn expect(&mut self, want: char) -> Result<(), XmlError> {
        match self.peek() {
            Some(c) if c == want => {
                self.bump();
                Ok(())
            }
            Some(c) => Err(self.err(&format!("expected '{want}', found '{c}'"))),
            None => Err(self.err(&format!("expected '{want}', found end of input"))),
        }
    }

    fn err(&self, message: &str) -> XmlError {
        XmlError::Parse { line: self.line, col: self.col, message: message.into() }
    }
}
