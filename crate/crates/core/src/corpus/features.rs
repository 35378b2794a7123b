use super::{CorpusError, FeatureSample, TaggedTranscript, FEATURE_DIM};

/// Splits a transcript into consecutive, non-overlapping windows of
/// `segment_len` utterances. A trailing window shorter than `segment_len` is
/// dropped. `segment_len` of zero yields no segments.
pub fn segment_transcript(t: &TaggedTranscript, segment_len: usize) -> Vec<TaggedTranscript> {
    if segment_len == 0 {
        return Vec::new();
    }
    t.utterances.chunks_exact(segment_len).map(|window| t.with_utterances(window.to_vec())).collect()
}

/// Number of word tokens (everything but PUNCT and SYM).
pub fn word_count(t: &TaggedTranscript) -> usize {
    t.utterances.iter().flat_map(|u| &u.tokens).filter(|tok| tok.pos.is_word()).count()
}

/// Proportions of the 8 tracked tags among all word tokens of the transcript.
pub fn pos_proportions(t: &TaggedTranscript) -> Result<FeatureSample, CorpusError> {
    let mut counts = [0usize; FEATURE_DIM];
    let mut words = 0usize;
    for tok in t.utterances.iter().flat_map(|u| &u.tokens) {
        if !tok.pos.is_word() {
            continue;
        }
        words += 1;
        if let Some(i) = tok.pos.feature_index() {
            counts[i] += 1;
        }
    }
    if words == 0 {
        return Err(CorpusError::NoWords);
    }
    let mut features = [0.0; FEATURE_DIM];
    for (f, c) in features.iter_mut().zip(counts) {
        *f = c as f64 / words as f64;
    }
    Ok(FeatureSample {
        features,
        subject_id: t.subject_id.clone(),
        language: t.language.clone(),
        accent: t.accent,
        label: t.label,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{UposTag, Utterance};
    use proptest::prelude::*;

    fn transcript(utts: Vec<Vec<UposTag>>) -> TaggedTranscript {
        TaggedTranscript::new("S", utts.iter().map(|u| Utterance::from_tags(u)).collect())
    }

    #[test]
    fn segmentation_windows() {
        let t = transcript(vec![vec![UposTag::Noun]; 50]);
        assert_eq!(segment_transcript(&t, 25).len(), 2);
        let t = transcript(vec![vec![UposTag::Noun]; 24]);
        assert!(segment_transcript(&t, 25).is_empty());
        let mut utts: Vec<Vec<UposTag>> = vec![vec![UposTag::Noun]; 25];
        utts.push(vec![UposTag::Verb]);
        let segs = segment_transcript(&transcript(utts), 25);
        assert_eq!(segs.len(), 1);
        assert!(segs[0].utterances.iter().all(|u| u.tokens[0].pos == UposTag::Noun));
        assert_eq!(segs[0].subject_id, "S");
    }

    #[test]
    fn proportions_hand_cases() {
        use UposTag::*;
        let f = pos_proportions(&transcript(vec![vec![Noun, Noun, Noun]])).unwrap();
        assert_eq!(f.features, [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let f = pos_proportions(&transcript(vec![vec![Noun, Verb], vec![Noun, Punct]])).unwrap();
        assert_eq!(f.features[0], 2.0 / 3.0);
        assert_eq!(f.features[1], 1.0 / 3.0);
        assert!(f.features[2..].iter().all(|&v| v == 0.0));
        assert!(matches!(pos_proportions(&transcript(vec![vec![Punct]])), Err(CorpusError::NoWords)));
    }

    fn tag() -> impl Strategy<Value = UposTag> {
        (0..UposTag::ALL.len()).prop_map(|i| UposTag::ALL[i])
    }

    fn utterances() -> impl Strategy<Value = Vec<Vec<UposTag>>> {
        prop::collection::vec(prop::collection::vec(tag(), 0..8), 1..80)
    }

    proptest! {
        #[test]
        fn proportions_are_a_sub_simplex(utts in utterances()) {
            let t = transcript(utts);
            if let Ok(f) = pos_proportions(&t) {
                prop_assert!(f.is_proportion_vector());
            }
        }

        #[test]
        fn reordering_utterances_is_invisible(utts in utterances(), seed in any::<u64>()) {
            let t = transcript(utts.clone());
            let mut shuffled = utts;
            let n = shuffled.len();
            // deterministic Fisher-Yates driven by the seed
            let mut s = seed;
            for i in (1..n).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                shuffled.swap(i, (s >> 33) as usize % (i + 1));
            }
            let a = pos_proportions(&t);
            let b = pos_proportions(&transcript(shuffled));
            match (a, b) {
                (Ok(a), Ok(b)) => {
                    for (x, y) in a.features.iter().zip(b.features) {
                        prop_assert!((x - y).abs() < 1e-15);
                    }
                }
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "one ordering failed"),
            }
        }

        #[test]
        fn word_weighted_segments_recover_the_whole(utts in utterances(), len in 1usize..10) {
            let t = transcript(utts);
            let segs = segment_transcript(&t, len);
            let covered = t.with_utterances(t.utterances[..segs.len() * len].to_vec());
            let Ok(whole) = pos_proportions(&covered) else { return Ok(()); };
            let mut acc = [0.0; FEATURE_DIM];
            let mut total = 0.0;
            for s in &segs {
                let w = word_count(s) as f64;
                if w == 0.0 { continue; }
                let f = pos_proportions(s).unwrap();
                for (a, v) in acc.iter_mut().zip(f.features) { *a += w * v; }
                total += w;
            }
            for (a, v) in acc.iter().zip(whole.features) {
                prop_assert!((a / total - v).abs() < 1e-12);
            }
        }
    }
}
