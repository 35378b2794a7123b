//! A minimal CHAT reader.
//!
//! Supported on main lines: fillers and events (`&uh`, `&=laughs`),
//! unintelligible material (`xxx`, `yyy`), repetition and retracing markers
//! (`[/]`, `[//]`) together with their `‹…›` or `<…>` scope delimiters,
//! comments `[% …]`, error codes `[* …]`, postcodes `[+ …]` and utterance
//! terminators. Any other bracketed code is dropped and counted.
//!
//! POS tags come from a `%pos:` dependent tier holding one UPOS tag per word
//! left on the preceding main line after stripping.

use super::{CorpusError, Language, TaggedTranscript, Token, UposTag, Utterance};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StrippedUtterance {
    pub speaker: Option<String>,
    pub words: Vec<String>,
    /// Bracketed codes outside the supported subset.
    pub unrecognized_codes: usize,
}

enum Piece<'a> {
    Bracket(&'a str),
    Word(&'a str),
}

fn split_pieces(line: &str) -> Vec<Piece<'_>> {
    let mut out = Vec::new();
    let mut rest = line;
    loop {
        rest = rest.trim_start();
        if rest.is_empty() {
            break;
        }
        if let Some(inner) = rest.strip_prefix('[') {
            match inner.find(']') {
                Some(end) => {
                    out.push(Piece::Bracket(inner[..end].trim()));
                    rest = &inner[end + 1..];
                }
                None => {
                    out.push(Piece::Bracket(inner.trim()));
                    rest = "";
                }
            }
            continue;
        }
        let end = rest.find(|c: char| c.is_whitespace() || c == '[').unwrap_or(rest.len());
        out.push(Piece::Word(&rest[..end]));
        rest = &rest[end..];
    }
    out
}

fn is_scope_delimiter(c: char) -> bool {
    matches!(c, '‹' | '›' | '<' | '>' | '“' | '”' | '"')
}

fn is_speaker_marker(word: &str) -> bool {
    word.len() > 2
        && word.starts_with('*')
        && word.ends_with(':')
        && word[1..word.len() - 1].chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Removes the supported CHAT annotations from one main line, returning the
/// remaining words.
pub fn strip_chat_annotations(raw_utterance: &str) -> StrippedUtterance {
    let mut out = StrippedUtterance::default();
    for (i, piece) in split_pieces(raw_utterance).into_iter().enumerate() {
        match piece {
            Piece::Bracket(code) => {
                let known = matches!(code, "/" | "//")
                    || code.starts_with('%')
                    || code.starts_with('*')
                    || code.starts_with('+');
                if !known {
                    out.unrecognized_codes += 1;
                }
            }
            Piece::Word(word) => {
                if is_speaker_marker(word) {
                    if i == 0 {
                        out.speaker = Some(word[1..word.len() - 1].to_string());
                    } else {
                        out.unrecognized_codes += 1;
                    }
                    continue;
                }
                let word = word.trim_matches(is_scope_delimiter);
                let word = word.trim_end_matches(['.', '?', '!']);
                if word.is_empty() || word.starts_with('&') {
                    continue;
                }
                if matches!(word, "xxx" | "yyy") {
                    continue;
                }
                if word.chars().all(|c| !c.is_alphanumeric()) {
                    continue;
                }
                out.words.push(word.to_string());
            }
        }
    }
    if out.unrecognized_codes > 0 {
        log::warn!("dropped {} unrecognized CHAT code(s)", out.unrecognized_codes);
    }
    out
}

/// Parses a CHAT-subset transcript with `%pos:` tiers.
///
/// Recognised headers: `@Subject:`, `@Languages:` (language name), `@Role:`
/// (`source`/`target`), `@Accent:` and `@Label:`. Other `@` headers and
/// dependent tiers are ignored. Main lines without a `%pos:` tier are
/// skipped. Continuation lines (starting with a tab) are joined to the
/// preceding line.
pub fn parse_chat(input: &str, fallback_subject: Option<&str>) -> Result<TaggedTranscript, CorpusError> {
    // Join tab-continued lines, remembering where each logical line started.
    let mut lines: Vec<(usize, String)> = Vec::new();
    for (idx, raw) in input.lines().enumerate() {
        if raw.starts_with('\t') {
            if let Some((_, prev)) = lines.last_mut() {
                prev.push(' ');
                prev.push_str(raw.trim());
                continue;
            }
        }
        lines.push((idx + 1, raw.trim_end_matches('\r').to_string()));
    }

    let mut subject = None;
    let mut language = Language::default();
    let mut accent = super::Accent::Unknown;
    let mut label = super::Label::Unlabeled;
    let mut utterances = Vec::new();
    let mut pending: Option<(usize, StrippedUtterance)> = None;

    for (line_no, line) in &lines {
        let line_no = *line_no;
        if line.trim().is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('@') {
            let (key, value) = match header.split_once(':') {
                Some((k, v)) => (k.trim(), v.trim()),
                None => (header.trim(), ""),
            };
            match key {
                "Subject" => subject = Some(value.to_string()),
                "Languages" => language.name = value.split(',').next().unwrap_or("").trim().to_string(),
                "Role" => language.role = value.parse()?,
                "Accent" => accent = value.parse()?,
                "Label" => label = value.parse()?,
                _ => {}
            }
            continue;
        }
        if line.starts_with('*') {
            pending = Some((line_no, strip_chat_annotations(line)));
            continue;
        }
        if let Some(tier) = line.strip_prefix("%pos:") {
            let (main_line, stripped) = pending.take().ok_or_else(|| CorpusError::Parse {
                line: line_no,
                message: "%pos tier without a preceding main line".into(),
            })?;
            let tags = tier
                .split_whitespace()
                .map(|t| t.parse::<UposTag>().map_err(|_| CorpusError::UnknownTag { line: line_no, tag: t.into() }))
                .collect::<Result<Vec<_>, _>>()?;
            if tags.len() != stripped.words.len() {
                return Err(CorpusError::Parse {
                    line: line_no,
                    message: format!(
                        "%pos tier has {} tags but main line {} has {} words after stripping",
                        tags.len(),
                        main_line,
                        stripped.words.len()
                    ),
                });
            }
            let tokens = stripped.words.into_iter().zip(tags).map(|(surface, pos)| Token { surface, pos }).collect();
            utterances.push(Utterance { tokens, speaker: stripped.speaker.unwrap_or_default() });
            continue;
        }
        if line.starts_with('%') {
            continue;
        }
        return Err(CorpusError::Parse { line: line_no, message: format!("unrecognized line `{line}`") });
    }

    let subject_id = subject
        .filter(|s| !s.is_empty())
        .or_else(|| fallback_subject.map(str::to_string))
        .filter(|s| !s.is_empty())
        .ok_or(CorpusError::MissingMetadata("subject_id"))?;
    Ok(TaggedTranscript { utterances, subject_id, language, accent, label })
}
