//! Parsing of `HEADER: value` blocks in model responses.

use std::collections::HashMap;

/// Strips markdown decoration models like to add around headers.
fn clean_header_line(line: &str) -> &str {
    line.trim().trim_start_matches(['#', '*', '_', ' ']).trim_end()
}

/// Splits `raw` into the named sections. A header line looks like
/// `SUMMARY: text` (case-insensitive, `_` and space interchangeable); its
/// section runs until the next recognized header.
pub fn split<'h>(raw: &str, headers: &[&'h str]) -> HashMap<&'h str, String> {
    let mut out: HashMap<&'h str, String> = HashMap::new();
    let mut current: Option<&'h str> = None;
    for line in raw.lines() {
        if let Some((header, rest)) = match_header(line, headers) {
            current = Some(header);
            let entry = out.entry(header).or_default();
            if !entry.is_empty() {
                entry.push('\n');
            }
            entry.push_str(rest.trim());
            continue;
        }
        if let Some(h) = current {
            let entry = out.get_mut(h).expect("section started");
            if !entry.is_empty() || !line.trim().is_empty() {
                if !entry.is_empty() {
                    entry.push('\n');
                }
                entry.push_str(line.trim_end());
            }
        }
    }
    for value in out.values_mut() {
        *value = value.trim().to_string();
    }
    out
}

pub fn match_header<'h, 'l>(line: &'l str, headers: &[&'h str]) -> Option<(&'h str, &'l str)> {
    let cleaned = clean_header_line(line);
    let colon = cleaned.find(':')?;
    let name = cleaned[..colon].trim().trim_end_matches(['*', '_']).trim();
    let normalized = name.replace(' ', "_").to_ascii_uppercase();
    let header = headers.iter().find(|h| h.replace(' ', "_").eq_ignore_ascii_case(&normalized))?;
    let rest = cleaned[colon + 1..].trim_start_matches(['*', '_']);
    Some((*header, rest))
}

/// Bullet items (`-`, `*`, `•` or `1.`) in a section body.
pub fn bullets(body: &str) -> Vec<String> {
    body.lines()
        .map(str::trim)
        .filter_map(|l| {
            let stripped = l
                .strip_prefix("- ")
                .or_else(|| l.strip_prefix("* "))
                .or_else(|| l.strip_prefix("• "))
                .or_else(|| {
                    let digits = l.chars().take_while(char::is_ascii_digit).count();
                    (digits > 0).then(|| l[digits..].strip_prefix(". ").or_else(|| l[digits..].strip_prefix(") "))).flatten()
                })?;
            let s = stripped.trim();
            (!s.is_empty()).then(|| s.to_string())
        })
        .collect()
}

/// Cuts `text` to at most `max_chars` characters on a char boundary.
pub fn truncate_chars(text: &str, max_chars: usize) -> String {
    match text.char_indices().nth(max_chars) {
        Some((idx, _)) => format!("{}…", &text[..idx]),
        None => text.to_string(),
    }
}
