//! CoNLL-U ingestion.
//!
//! Sentence metadata comments (`# key = value`) may carry `subject_id`,
//! `language` (name), `role` (`source`/`target`), `accent` and `label`.
//! Multiword-token ranges (`3-4`) and empty nodes (`5.1`) are skipped.

use super::{Accent, CorpusError, Label, Language, TaggedTranscript, Token, UposTag, Utterance};

/// Parses a CoNLL-U document into one transcript. The subject id must come
/// from a `# subject_id = …` comment.
pub fn parse_conllu(input: &str) -> Result<TaggedTranscript, CorpusError> {
    parse(input, None)
}

/// Like [`parse_conllu`], falling back to `subject` when the document has no
/// subject comment.
pub fn parse_conllu_with_subject(input: &str, subject: &str) -> Result<TaggedTranscript, CorpusError> {
    parse(input, Some(subject))
}

fn parse(input: &str, fallback_subject: Option<&str>) -> Result<TaggedTranscript, CorpusError> {
    let mut subject = None;
    let mut language = Language::default();
    let mut accent = Accent::Unknown;
    let mut label = Label::Unlabeled;
    let mut utterances = Vec::new();
    let mut current: Vec<Token> = Vec::new();
    let mut in_sentence = false;

    for (idx, raw) in input.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            if in_sentence {
                utterances.push(Utterance { tokens: std::mem::take(&mut current), speaker: String::new() });
                in_sentence = false;
            }
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                let value = value.trim();
                match key.trim() {
                    "subject_id" => subject = Some(value.to_string()),
                    "language" => language.name = value.to_string(),
                    "role" => language.role = value.parse()?,
                    "accent" => accent = value.parse()?,
                    "label" => label = value.parse()?,
                    _ => {}
                }
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(CorpusError::Parse {
                line: line_no,
                message: format!("expected 10 tab-separated columns, found {}", cols.len()),
            });
        }
        in_sentence = true;
        let id = cols[0];
        if id.contains('-') || id.contains('.') {
            continue;
        }
        if id.parse::<u32>().is_err() {
            return Err(CorpusError::Parse { line: line_no, message: format!("invalid token id `{id}`") });
        }
        let pos = cols[3]
            .parse::<UposTag>()
            .map_err(|_| CorpusError::UnknownTag { line: line_no, tag: cols[3].to_string() })?;
        current.push(Token { surface: cols[1].to_string(), pos });
    }
    if in_sentence {
        utterances.push(Utterance { tokens: current, speaker: String::new() });
    }

    let subject_id = subject
        .filter(|s| !s.is_empty())
        .or_else(|| fallback_subject.map(str::to_string))
        .filter(|s| !s.is_empty())
        .ok_or(CorpusError::MissingMetadata("subject_id"))?;
    Ok(TaggedTranscript { utterances, subject_id, language, accent, label })
}
