//! Minimal XML element-tree reader for cascade model files.
//!
//! Handles elements, attributes, character data, comments, processing
//! instructions, DOCTYPE and CDATA sections, plus the five predefined and
//! numeric character entities. No namespaces, no DTD validation.

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub name: String,
    pub attrs: Vec<(String, String)>,
    pub children: Vec<Node>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Element(Element),
    Text(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct XmlError {
    pub offset: usize,
    pub message: String,
}

impl Element {
    pub fn elements(&self) -> impl Iterator<Item = &Element> {
        self.children.iter().filter_map(|n| match n {
            Node::Element(e) => Some(e),
            Node::Text(_) => None,
        })
    }

    pub fn child(&self, name: &str) -> Option<&Element> {
        self.elements().find(|e| e.name == name)
    }

    pub fn attr(&self, name: &str) -> Option<&str> {
        self.attrs
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| v.as_str())
    }

    /// Concatenated direct character data, trimmed.
    pub fn text(&self) -> String {
        let mut s = String::new();
        for n in &self.children {
            if let Node::Text(t) = n {
                s.push_str(t);
            }
        }
        s.trim().to_string()
    }
}

pub fn parse(input: &str) -> Result<Element, XmlError> {
    let mut p = Parser {
        src: input.as_bytes(),
        text: input,
        pos: 0,
    };
    p.skip_misc()?;
    if p.peek() != Some(b'<') {
        return Err(p.err("expected root element"));
    }
    let root = p.element()?;
    p.skip_misc()?;
    if p.pos != p.src.len() {
        return Err(p.err("content after root element"));
    }
    Ok(root)
}

struct Parser<'a> {
    src: &'a [u8],
    text: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, message: impl Into<String>) -> XmlError {
        XmlError {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn starts_with(&self, s: &str) -> bool {
        self.src[self.pos..].starts_with(s.as_bytes())
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b) if b.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn skip_until(&mut self, end: &str) -> Result<&'a str, XmlError> {
        let start = self.pos;
        match self.text[self.pos..].find(end) {
            Some(i) => {
                self.pos += i + end.len();
                Ok(&self.text[start..start + i])
            }
            None => Err(self.err(format!("unterminated construct, expected {end:?}"))),
        }
    }

    /// Whitespace, comments, processing instructions and DOCTYPE outside the root.
    fn skip_misc(&mut self) -> Result<(), XmlError> {
        loop {
            self.skip_ws();
            if self.starts_with("<?") {
                self.skip_until("?>")?;
            } else if self.starts_with("<!--") {
                self.skip_until("-->")?;
            } else if self.starts_with("<!DOCTYPE") {
                self.skip_until(">")?;
            } else {
                return Ok(());
            }
        }
    }

    fn name(&mut self) -> Result<String, XmlError> {
        let start = self.pos;
        while matches!(self.peek(), Some(b) if b.is_ascii_alphanumeric() || b"_-.:".contains(&b) || b >= 0x80)
        {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected name"));
        }
        Ok(self.text[start..self.pos].to_string())
    }

    fn element(&mut self) -> Result<Element, XmlError> {
        debug_assert_eq!(self.peek(), Some(b'<'));
        self.pos += 1;
        let name = self.name()?;
        let mut attrs = Vec::new();
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'/') => {
                    self.pos += 1;
                    if self.peek() != Some(b'>') {
                        return Err(self.err("expected '>' after '/'"));
                    }
                    self.pos += 1;
                    return Ok(Element {
                        name,
                        attrs,
                        children: Vec::new(),
                    });
                }
                Some(b'>') => {
                    self.pos += 1;
                    break;
                }
                Some(_) => {
                    let key = self.name()?;
                    self.skip_ws();
                    if self.peek() != Some(b'=') {
                        return Err(self.err("expected '=' in attribute"));
                    }
                    self.pos += 1;
                    self.skip_ws();
                    let quote = match self.peek() {
                        Some(q @ (b'"' | b'\'')) => q,
                        _ => return Err(self.err("expected quoted attribute value")),
                    };
                    self.pos += 1;
                    let start = self.pos;
                    while matches!(self.peek(), Some(b) if b != quote) {
                        self.pos += 1;
                    }
                    if self.peek().is_none() {
                        return Err(self.err("unterminated attribute value"));
                    }
                    let raw = &self.text[start..self.pos];
                    self.pos += 1;
                    attrs.push((key, self.unescape(raw, start)?));
                }
                None => return Err(self.err("unexpected end of input in tag")),
            }
        }
        let mut children = Vec::new();
        loop {
            if self.starts_with("</") {
                self.pos += 2;
                let close = self.name()?;
                if close != name {
                    return Err(self.err(format!("mismatched closing tag </{close}> for <{name}>")));
                }
                self.skip_ws();
                if self.peek() != Some(b'>') {
                    return Err(self.err("expected '>'"));
                }
                self.pos += 1;
                return Ok(Element {
                    name,
                    attrs,
                    children,
                });
            } else if self.starts_with("<!--") {
                self.skip_until("-->")?;
            } else if self.starts_with("<![CDATA[") {
                self.pos += 9;
                let data = self.skip_until("]]>")?;
                children.push(Node::Text(data.to_string()));
            } else if self.starts_with("<?") {
                self.skip_until("?>")?;
            } else if self.peek() == Some(b'<') {
                children.push(Node::Element(self.element()?));
            } else if self.peek().is_none() {
                return Err(self.err(format!("unexpected end of input inside <{name}>")));
            } else {
                let start = self.pos;
                while matches!(self.peek(), Some(b) if b != b'<') {
                    self.pos += 1;
                }
                let raw = &self.text[start..self.pos];
                children.push(Node::Text(self.unescape(raw, start)?));
            }
        }
    }

    fn unescape(&self, raw: &str, at: usize) -> Result<String, XmlError> {
        if !raw.contains('&') {
            return Ok(raw.to_string());
        }
        let mut out = String::with_capacity(raw.len());
        let mut rest = raw;
        while let Some(i) = rest.find('&') {
            out.push_str(&rest[..i]);
            let tail = &rest[i..];
            let end = tail.find(';').ok_or_else(|| XmlError {
                offset: at,
                message: "unterminated entity".into(),
            })?;
            let ent = &tail[1..end];
            let ch = match ent {
                "lt" => '<',
                "gt" => '>',
                "amp" => '&',
                "quot" => '"',
                "apos" => '\'',
                _ => {
                    let code = if let Some(hex) = ent.strip_prefix("#x") {
                        u32::from_str_radix(hex, 16).ok()
                    } else if let Some(dec) = ent.strip_prefix('#') {
                        dec.parse().ok()
                    } else {
                        None
                    };
                    code.and_then(char::from_u32).ok_or_else(|| XmlError {
                        offset: at,
                        message: format!("unknown entity &{ent};"),
                    })?
                }
            };
            out.push(ch);
            rest = &tail[end + 1..];
        }
        out.push_str(rest);
        Ok(out)
    }
}
