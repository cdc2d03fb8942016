//! Line-oriented statement reader for the N-Triples subset used by entity
//! description and gold-summary files.
//!
//! One statement per line: `<s> <p> <o> .` where a term is an `<IRI>`, a
//! blank node `_:id`, or a literal `"lexical"` with an optional `@lang` or
//! `^^<datatype>` suffix. Blank lines and `#` comment lines are skipped.

use std::collections::HashMap;

use crate::error::{Error, Result};

use super::{Resource, ResourceKind, Triple};

pub const RDFS_LABEL: &str = "http://www.w3.org/2000/01/rdf-schema#label";

/// One parsed statement together with its 1-based source line.
#[derive(Debug, Clone, PartialEq)]
pub struct Statement {
    pub line: usize,
    pub subject: Resource,
    pub predicate: Resource,
    pub object: Resource,
}

/// Parses every statement in `text`.
pub fn parse_statements(text: &str) -> Result<Vec<Statement>> {
    let mut out = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(parse_line(line, line_no)?);
    }
    Ok(out)
}

/// Parses a description document and returns the triples that mention
/// `entity_iri` as subject or object, with ids in document order.
///
/// `rdfs:label` statements annotate their subject wherever it occurs in the
/// returned triples. They only become candidate triples when the subject is
/// the entity itself.
pub fn parse_triples_document(text: &str, entity_iri: &str) -> Result<Vec<Triple>> {
    let statements = parse_statements(text)?;

    let mut labels: HashMap<(ResourceKind, &str), &str> = HashMap::new();
    for st in &statements {
        if st.predicate.raw == RDFS_LABEL && st.object.kind == ResourceKind::Literal {
            // first label in document order wins
            labels
                .entry((st.subject.kind, st.subject.raw.as_str()))
                .or_insert(st.object.raw.as_str());
        }
    }
    let annotate = |r: &Resource| -> Resource {
        let mut r = r.clone();
        if r.kind != ResourceKind::Literal {
            r.label = labels.get(&(r.kind, r.raw.as_str())).map(|l| l.to_string());
        }
        r
    };

    let mut triples = Vec::new();
    for st in &statements {
        let subject_is_entity = st.subject.is_iri(entity_iri);
        let object_is_entity = st.object.is_iri(entity_iri);
        if !subject_is_entity && !object_is_entity {
            continue;
        }
        triples.push(Triple {
            id: triples.len(),
            subject: annotate(&st.subject),
            predicate: annotate(&st.predicate),
            object: annotate(&st.object),
            entity_is_subject: subject_is_entity,
        });
    }
    if triples.is_empty() {
        return Err(Error::EmptyDescription {
            entity: entity_iri.to_string(),
        });
    }
    Ok(triples)
}

fn parse_line(line: &str, line_no: usize) -> Result<Statement> {
    let mut cur = Cursor {
        rest: line,
        line: line_no,
    };
    let subject = cur.term()?;
    if subject.kind == ResourceKind::Literal {
        return Err(cur.fail("literal in subject position"));
    }
    let predicate = cur.term()?;
    if predicate.kind != ResourceKind::Iri {
        return Err(cur.fail("predicate must be an IRI"));
    }
    let object = cur.term()?;
    cur.skip_ws();
    cur.rest = cur
        .rest
        .strip_prefix('.')
        .ok_or_else(|| cur.fail("missing terminating '.'"))?;
    cur.skip_ws();
    if !(cur.rest.is_empty() || cur.rest.starts_with('#')) {
        return Err(cur.fail("trailing content after '.'"));
    }
    Ok(Statement {
        line: line_no,
        subject,
        predicate,
        object,
    })
}

struct Cursor<'a> {
    rest: &'a str,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn fail(&self, reason: &str) -> Error {
        Error::MalformedLine {
            line: self.line,
            reason: reason.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        self.rest = self.rest.trim_start();
    }

    fn term(&mut self) -> Result<Resource> {
        self.skip_ws();
        match self.rest.chars().next() {
            Some('<') => Ok(Resource::iri(self.iri_ref()?)),
            Some('_') => {
                let body = self
                    .rest
                    .strip_prefix("_:")
                    .ok_or_else(|| self.fail("expected '_:' blank node"))?;
                let end = body.find(char::is_whitespace).unwrap_or(body.len());
                if end == 0 {
                    return Err(self.fail("empty blank node label"));
                }
                self.rest = &body[end..];
                Ok(Resource::blank(&body[..end]))
            }
            Some('"') => self.literal(),
            Some(_) => Err(self.fail("expected a term")),
            None => Err(self.fail("unexpected end of line")),
        }
    }

    fn iri_ref(&mut self) -> Result<String> {
        let body = &self.rest[1..];
        let end = body.find('>').ok_or_else(|| self.fail("unterminated IRI"))?;
        let iri = &body[..end];
        if iri.is_empty() || iri.contains(char::is_whitespace) {
            return Err(self.fail("invalid IRI"));
        }
        self.rest = &body[end + 1..];
        unescape(iri).ok_or_else(|| self.fail("bad escape in IRI"))
    }

    fn literal(&mut self) -> Result<Resource> {
        let body = &self.rest[1..];
        let mut end = None;
        let mut escaped = false;
        for (i, c) in body.char_indices() {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                end = Some(i);
                break;
            }
        }
        let end = end.ok_or_else(|| self.fail("unterminated literal"))?;
        let lexical = unescape(&body[..end]).ok_or_else(|| self.fail("bad escape in literal"))?;
        self.rest = &body[end + 1..];

        let mut lit = Resource::literal(lexical);
        if let Some(tail) = self.rest.strip_prefix('@') {
            let len = tail
                .find(|c: char| !(c.is_ascii_alphanumeric() || c == '-'))
                .unwrap_or(tail.len());
            if len == 0 {
                return Err(self.fail("empty language tag"));
            }
            lit.lang = Some(tail[..len].to_string());
            self.rest = &tail[len..];
        } else if let Some(tail) = self.rest.strip_prefix("^^") {
            self.rest = tail;
            if !self.rest.starts_with('<') {
                return Err(self.fail("datatype must be an IRI"));
            }
            lit.datatype = Some(self.iri_ref()?);
        }
        if !(self.rest.is_empty() || self.rest.starts_with(char::is_whitespace) || self.rest.starts_with('.')) {
            return Err(self.fail("unexpected character after literal"));
        }
        Ok(lit)
    }
}

fn unescape(s: &str) -> Option<String> {
    if !s.contains('\\') {
        return Some(s.to_string());
    }
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next()? {
            't' => out.push('\t'),
            'b' => out.push('\u{8}'),
            'n' => out.push('\n'),
            'r' => out.push('\r'),
            'f' => out.push('\u{c}'),
            '"' => out.push('"'),
            '\'' => out.push('\''),
            '\\' => out.push('\\'),
            'u' => out.push(hex_char(&mut chars, 4)?),
            'U' => out.push(hex_char(&mut chars, 8)?),
            _ => return None,
        }
    }
    Some(out)
}

fn hex_char(chars: &mut std::str::Chars<'_>, digits: usize) -> Option<char> {
    let hex: String = chars.by_ref().take(digits).collect();
    if hex.len() != digits {
        return None;
    }
    char::from_u32(u32::from_str_radix(&hex, 16).ok()?)
}
