//! `#define` handling.
//!
//! Definition lines are blanked (line numbers of the remaining text are
//! preserved) and every whole-token occurrence of a macro name is replaced by
//! its fully expanded body.

use std::collections::BTreeMap;

use super::ast::{Loc, SourceText};
use super::error::{DslError, DslErrorKind};
use super::lexer::scan_number;

#[derive(Debug, Clone, PartialEq)]
pub struct Preprocessed {
    pub text: SourceText,
    /// Macro name to expanded body.
    pub macros: BTreeMap<String, String>,
}

pub fn preprocess(src: &SourceText) -> Result<SourceText, DslError> {
    preprocess_with_macros(src).map(|p| p.text)
}

pub fn preprocess_with_macros(src: &SourceText) -> Result<Preprocessed, DslError> {
    let origin = src.origin.as_str();
    let mut raw: BTreeMap<String, (String, Loc)> = BTreeMap::new();
    let mut lines: Vec<&str> = Vec::new();
    let mut define_lines = Vec::new();

    for (idx, line) in src.content.split('\n').enumerate() {
        let trimmed = line.trim_start();
        let indent = line.len() - trimmed.len();
        if let Some(rest) = trimmed.strip_prefix("#define") {
            let loc = Loc::new(idx as u32 + 1, indent as u32 + 1);
            if !rest.starts_with(char::is_whitespace) {
                return Err(syntax(origin, loc, "malformed #define"));
            }
            let rest = rest.trim_start();
            let name_len = rest
                .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
                .unwrap_or(rest.len());
            let name = &rest[..name_len];
            if name.is_empty() || name.starts_with(|c: char| c.is_ascii_digit()) {
                return Err(syntax(origin, loc, "#define expects an identifier"));
            }
            let body = &rest[name_len..];
            if body.starts_with('(') {
                return Err(syntax(origin, loc, "function-like macros are not supported"));
            }
            let body = strip_comment(body).trim().to_string();
            if raw.insert(name.to_string(), (body, loc)).is_some() {
                return Err(DslError::new(origin, loc, DslErrorKind::RedefinedMacro(name.to_string())));
            }
            define_lines.push(idx);
            lines.push("");
        } else {
            lines.push(line);
        }
    }

    if raw.is_empty() {
        return Ok(Preprocessed {
            text: src.clone(),
            macros: BTreeMap::new(),
        });
    }

    let mut expanded: BTreeMap<String, String> = BTreeMap::new();
    for name in raw.keys() {
        let mut stack = Vec::new();
        expand_macro(name, &raw, &mut expanded, &mut stack, origin)?;
    }

    let out: Vec<String> = lines
        .iter()
        .enumerate()
        .map(|(i, l)| {
            if define_lines.contains(&i) {
                String::new()
            } else {
                substitute(l, &|n| expanded.get(n).cloned())
            }
        })
        .collect();

    Ok(Preprocessed {
        text: SourceText::new(out.join("\n"), src.origin.clone()),
        macros: expanded,
    })
}

fn syntax(origin: &str, loc: Loc, msg: &str) -> DslError {
    DslError::new(origin, loc, DslErrorKind::Syntax(msg.to_string()))
}

fn strip_comment(s: &str) -> &str {
    match s.find("//") {
        Some(i) => &s[..i],
        None => s,
    }
}

fn expand_macro(
    name: &str,
    raw: &BTreeMap<String, (String, Loc)>,
    done: &mut BTreeMap<String, String>,
    stack: &mut Vec<String>,
    origin: &str,
) -> Result<String, DslError> {
    if let Some(v) = done.get(name) {
        return Ok(v.clone());
    }
    let (body, loc) = &raw[name];
    if stack.iter().any(|s| s == name) {
        return Err(DslError::new(origin, *loc, DslErrorKind::CyclicMacro(name.to_string())));
    }
    stack.push(name.to_string());
    // collect referenced macro names first so errors propagate
    let mut refs = Vec::new();
    for_each_ident(body, &mut |id| {
        if raw.contains_key(id) {
            refs.push(id.to_string());
        }
    });
    let mut resolved = BTreeMap::new();
    for r in refs {
        let v = expand_macro(&r, raw, done, stack, origin)?;
        resolved.insert(r, v);
    }
    stack.pop();
    let text = substitute(body, &|n| resolved.get(n).cloned());
    done.insert(name.to_string(), text.clone());
    Ok(text)
}

fn for_each_ident(text: &str, f: &mut dyn FnMut(&str)) {
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            i = scan_number(&chars, i).max(i + 1);
        } else if c.is_ascii_alphabetic() || c == '_' {
            let s = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let id: String = chars[s..i].iter().collect();
            f(&id);
        } else {
            i += 1;
        }
    }
}

fn substitute(text: &str, lookup: &dyn Fn(&str) -> Option<String>) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let e = scan_number(&chars, i).max(i + 1);
            out.extend(&chars[i..e]);
            i = e;
        } else if c.is_ascii_alphabetic() || c == '_' {
            let s = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let id: String = chars[s..i].iter().collect();
            match lookup(&id) {
                Some(body) => out.push_str(&body),
                None => out.push_str(&id),
            }
        } else {
            out.push(c);
            i += 1;
        }
    }
    out
}
