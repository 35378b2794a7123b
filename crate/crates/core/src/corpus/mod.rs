//! Transcript ingestion and POS-proportion features.

mod chat;
mod conllu;
mod features;
pub mod table;
mod ttest;

pub use chat::{parse_chat, strip_chat_annotations, StrippedUtterance};
pub use conllu::{parse_conllu, parse_conllu_with_subject};
pub use features::{pos_proportions, segment_transcript, word_count};
pub use ttest::{feature_ttests, FeatureTTest, FeatureTTestReport, BONFERRONI_ALPHA};

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Number of tracked POS proportions.
pub const FEATURE_DIM: usize = 8;

/// Column names of the feature vector, in storage order.
pub const FEATURE_NAMES: [&str; FEATURE_DIM] =
    ["noun", "verb", "sconj", "adj", "adv", "cconj", "det", "pron"];

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unknown UPOS tag `{tag}`")]
    UnknownTag { line: usize, tag: String },
    #[error("transcript has no word tokens")]
    NoWords,
    #[error("missing metadata `{0}`")]
    MissingMetadata(&'static str),
    #[error("invalid metadata value `{value}` for `{key}`")]
    BadMetadata { key: String, value: String },
    #[error("group {group} has {size} samples; at least 2 are required")]
    GroupTooSmall { group: char, size: usize },
    #[error("feature table: {0}")]
    Table(String),
}

/// The 17 Universal Dependencies part-of-speech tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum UposTag {
    Adj,
    Adp,
    Adv,
    Aux,
    Cconj,
    Det,
    Intj,
    Noun,
    Num,
    Part,
    Pron,
    Propn,
    Punct,
    Sconj,
    Sym,
    Verb,
    X,
}

impl UposTag {
    pub const ALL: [UposTag; 17] = [
        UposTag::Adj,
        UposTag::Adp,
        UposTag::Adv,
        UposTag::Aux,
        UposTag::Cconj,
        UposTag::Det,
        UposTag::Intj,
        UposTag::Noun,
        UposTag::Num,
        UposTag::Part,
        UposTag::Pron,
        UposTag::Propn,
        UposTag::Punct,
        UposTag::Sconj,
        UposTag::Sym,
        UposTag::Verb,
        UposTag::X,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            UposTag::Adj => "ADJ",
            UposTag::Adp => "ADP",
            UposTag::Adv => "ADV",
            UposTag::Aux => "AUX",
            UposTag::Cconj => "CCONJ",
            UposTag::Det => "DET",
            UposTag::Intj => "INTJ",
            UposTag::Noun => "NOUN",
            UposTag::Num => "NUM",
            UposTag::Part => "PART",
            UposTag::Pron => "PRON",
            UposTag::Propn => "PROPN",
            UposTag::Punct => "PUNCT",
            UposTag::Sconj => "SCONJ",
            UposTag::Sym => "SYM",
            UposTag::Verb => "VERB",
            UposTag::X => "X",
        }
    }

    /// Whether the tag counts as a word (everything except PUNCT and SYM).
    pub fn is_word(self) -> bool {
        !matches!(self, UposTag::Punct | UposTag::Sym)
    }

    /// Position in the feature vector, for the 8 tracked tags.
    pub fn feature_index(self) -> Option<usize> {
        match self {
            UposTag::Noun => Some(0),
            UposTag::Verb => Some(1),
            UposTag::Sconj => Some(2),
            UposTag::Adj => Some(3),
            UposTag::Adv => Some(4),
            UposTag::Cconj => Some(5),
            UposTag::Det => Some(6),
            UposTag::Pron => Some(7),
            _ => None,
        }
    }
}

impl FromStr for UposTag {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        UposTag::ALL.iter().copied().find(|t| t.as_str() == s).ok_or(())
    }
}

impl fmt::Display for UposTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub pos: UposTag,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Utterance {
    pub tokens: Vec<Token>,
    pub speaker: String,
}

impl Utterance {
    pub fn from_tags(tags: &[UposTag]) -> Self {
        let tokens = tags.iter().map(|&pos| Token { surface: String::new(), pos }).collect();
        Utterance { tokens, speaker: String::new() }
    }
}

/// Which side of the adaptation a language is on: `source` is the
/// resource-rich language the classifiers are trained in, `target` the
/// low-resource language whose features are mapped onto it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LanguageRole {
    Source,
    #[default]
    Target,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Language {
    pub role: LanguageRole,
    pub name: String,
}

impl Language {
    pub fn new(role: LanguageRole, name: impl Into<String>) -> Self {
        Language { role, name: name.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Accent {
    #[serde(rename = "NA")]
    NorthAmerican,
    #[serde(rename = "other")]
    Other,
    #[default]
    #[serde(rename = "unknown")]
    Unknown,
}

impl Accent {
    pub fn as_str(self) -> &'static str {
        match self {
            Accent::NorthAmerican => "NA",
            Accent::Other => "other",
            Accent::Unknown => "unknown",
        }
    }
}

impl FromStr for Accent {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, CorpusError> {
        match s {
            "NA" | "na" => Ok(Accent::NorthAmerican),
            "other" => Ok(Accent::Other),
            "unknown" | "" => Ok(Accent::Unknown),
            _ => Err(CorpusError::BadMetadata { key: "accent".into(), value: s.into() }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Healthy,
    Aphasic,
    #[default]
    Unlabeled,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Healthy => "healthy",
            Label::Aphasic => "aphasic",
            Label::Unlabeled => "unlabeled",
        }
    }

    /// Binary class index used by the classifiers: aphasic is the positive class.
    pub fn class(self) -> Option<usize> {
        match self {
            Label::Healthy => Some(0),
            Label::Aphasic => Some(1),
            Label::Unlabeled => None,
        }
    }
}

impl FromStr for Label {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, CorpusError> {
        match s {
            "healthy" | "control" => Ok(Label::Healthy),
            "aphasic" | "aphasia" => Ok(Label::Aphasic),
            "unlabeled" | "" => Ok(Label::Unlabeled),
            _ => Err(CorpusError::BadMetadata { key: "label".into(), value: s.into() }),
        }
    }
}

impl FromStr for LanguageRole {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, CorpusError> {
        match s {
            "source" => Ok(LanguageRole::Source),
            "target" => Ok(LanguageRole::Target),
            _ => Err(CorpusError::BadMetadata { key: "role".into(), value: s.into() }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedTranscript {
    pub utterances: Vec<Utterance>,
    pub subject_id: String,
    pub language: Language,
    pub accent: Accent,
    pub label: Label,
}

impl TaggedTranscript {
    pub fn new(subject_id: impl Into<String>, utterances: Vec<Utterance>) -> Self {
        TaggedTranscript {
            utterances,
            subject_id: subject_id.into(),
            language: Language::default(),
            accent: Accent::Unknown,
            label: Label::Unlabeled,
        }
    }

    /// Copy of the metadata with a different utterance list.
    pub fn with_utterances(&self, utterances: Vec<Utterance>) -> Self {
        TaggedTranscript {
            utterances,
            subject_id: self.subject_id.clone(),
            language: self.language.clone(),
            accent: self.accent,
            label: self.label,
        }
    }

    /// Appends another transcript's utterances (tasks of one subject are
    /// concatenated into a single transcript).
    pub fn extend(&mut self, other: TaggedTranscript) {
        self.utterances.extend(other.utterances);
    }
}

/// One POS-proportion vector with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSample {
    pub features: [f64; FEATURE_DIM],
    pub subject_id: String,
    pub language: Language,
    pub accent: Accent,
    pub label: Label,
}

impl FeatureSample {
    /// Checks the proportion invariants: components in [0, 1] summing to at most 1.
    pub fn is_proportion_vector(&self) -> bool {
        self.features.iter().all(|v| (0.0..=1.0).contains(v))
            && self.features.iter().sum::<f64>() <= 1.0 + 1e-12
    }
}
