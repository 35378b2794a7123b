//! Feature CSV files.
//!
//! Header `subject_id,language,accent,label,noun,verb,sconj,adj,adv,cconj,det,pron`,
//! UTF-8, `.` decimal separator, values written with 12 significant digits.
//! The `language` column holds the language name; the source/target role is
//! supplied by whoever reads the file.

use std::io::{Read, Write};

use super::{CorpusError, FeatureSample, Language, LanguageRole, FEATURE_DIM, FEATURE_NAMES};

pub const HEADER: [&str; 4 + FEATURE_DIM] = [
    "subject_id", "language", "accent", "label", "noun", "verb", "sconj", "adj", "adv", "cconj", "det", "pron",
];

fn table_err(e: impl std::fmt::Display) -> CorpusError {
    CorpusError::Table(e.to_string())
}

pub fn write_features<W: Write>(out: W, samples: &[FeatureSample]) -> Result<(), CorpusError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(HEADER).map_err(table_err)?;
    for s in samples {
        let mut row = vec![
            s.subject_id.clone(),
            s.language.name.clone(),
            s.accent.as_str().to_string(),
            s.label.as_str().to_string(),
        ];
        row.extend(s.features.iter().map(|&v| crate::fmt::sig(v, 12)));
        w.write_record(&row).map_err(table_err)?;
    }
    w.flush().map_err(table_err)
}

pub fn features_to_string(samples: &[FeatureSample]) -> String {
    let mut buf = Vec::new();
    write_features(&mut buf, samples).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("CSV output is UTF-8")
}

/// Reads a feature CSV, tagging every row with `role`. Values must be finite;
/// they are not required to be proportions, so transported features can be
/// read back.
pub fn read_features<R: Read>(input: R, role: LanguageRole) -> Result<Vec<FeatureSample>, CorpusError> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = r.headers().map_err(table_err)?.clone();
    if header.iter().collect::<Vec<_>>() != HEADER {
        return Err(CorpusError::Table(format!("unexpected header `{}`", header.iter().collect::<Vec<_>>().join(","))));
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(table_err)?;
        let row = i + 2;
        let mut features = [0.0; FEATURE_DIM];
        for (k, f) in features.iter_mut().enumerate() {
            let cell = &rec[4 + k];
            *f = cell
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CorpusError::Table(format!("row {row}: bad {} value `{cell}`", FEATURE_NAMES[k])))?;
        }
        if rec[0].is_empty() {
            return Err(CorpusError::Table(format!("row {row}: empty subject_id")));
        }
        out.push(FeatureSample {
            features,
            subject_id: rec[0].to_string(),
            language: Language::new(role, &rec[1]),
            accent: rec[2].parse()?,
            label: rec[3].parse()?,
        });
    }
    Ok(out)
}
