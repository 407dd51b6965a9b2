//! Text-derived features: per-word syntax and per-utterance sentiment.
//! Externally produced vectors pass through unchanged; the built-in
//! fallbacks only need the token stream.

use serde::{Deserialize, Serialize};

use super::FeatureError;

pub const SYNTAX_DIM: usize = 20;
pub const DEFAULT_SENTIMENT_DIM: usize = 517;

/// Universal part-of-speech classes, slots 0..17 of a syntax vector.
pub const UPOS: [&str; 17] = [
    "ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM", "PART", "PRON", "PROPN", "PUNCT", "SCONJ",
    "SYM", "VERB", "X",
];
/// Slots 17..20 flag first, second and third grammatical person.
pub const PERSON_OFFSET: usize = 17;

const FIRST: &[&str] = &["i", "me", "my", "mine", "myself", "we", "us", "our", "ours", "ourselves"];
const SECOND: &[&str] = &["you", "your", "yours", "yourself", "yourselves", "ya", "y'all"];
const THIRD: &[&str] = &[
    "he", "him", "his", "himself", "she", "her", "hers", "herself", "it", "its", "itself", "they", "them", "their",
    "theirs", "themselves",
];
const OTHER_PRON: &[&str] = &[
    "who", "whom", "whose", "what", "which", "this", "that", "these", "those", "someone", "somebody", "something",
    "anyone", "anybody", "anything", "everyone", "everybody", "everything", "nobody", "nothing", "one",
];

const CLOSED_CLASS: &[(&str, &[&str])] = &[
    ("DET", &["the", "a", "an", "some", "any", "every", "each", "no", "all", "both", "either", "neither", "another"]),
    (
        "ADP",
        &[
            "in", "on", "at", "by", "for", "with", "about", "against", "between", "into", "through", "during",
            "before", "after", "above", "below", "to", "from", "up", "down", "of", "off", "over", "under", "like",
        ],
    ),
    ("CCONJ", &["and", "but", "or", "nor", "yet", "so"]),
    ("SCONJ", &["if", "because", "although", "though", "while", "since", "unless", "whether", "until", "than", "as"]),
    (
        "AUX",
        &[
            "am", "is", "are", "was", "were", "be", "been", "being", "have", "has", "had", "do", "does", "did", "will",
            "would", "shall", "should", "can", "could", "may", "might", "must", "'m", "'re", "'s", "'ve", "'ll", "'d",
        ],
    ),
    ("PART", &["not", "n't", "to"]),
    (
        "INTJ",
        &["oh", "ah", "uh", "um", "hmm", "wow", "yeah", "yes", "no", "okay", "ok", "hey", "huh", "oops", "ugh", "mhm"],
    ),
    (
        "ADV",
        &["very", "really", "just", "so", "too", "also", "now", "then", "here", "there", "never", "always", "again", "still"],
    ),
];

fn upos_index(tag: &str) -> usize {
    UPOS.iter().position(|t| *t == tag).expect("known tag")
}

fn person(lower: &str) -> Option<usize> {
    if FIRST.contains(&lower) {
        Some(0)
    } else if SECOND.contains(&lower) {
        Some(1)
    } else if THIRD.contains(&lower) {
        Some(2)
    } else {
        None
    }
}

fn normalise(token: &str) -> String {
    let t = token.trim_matches(|c: char| c.is_ascii_punctuation() && c != '\'');
    let t = t.to_lowercase();
    // "I'm" -> "i", "they're" -> "they"; bare clitics ("'s") stay whole.
    match t.find('\'') {
        Some(p) if p > 0 => {
            let head = &t[..p];
            if person(head).is_some() {
                return head.to_string();
            }
            t
        }
        _ => t,
    }
}

/// Rule-based universal POS tag of a single token.
pub fn fallback_tag(token: &str) -> &'static str {
    let raw = token.trim();
    if !raw.is_empty() && raw.chars().all(|c| c.is_ascii_punctuation()) {
        return if raw.chars().all(|c| ".,;:!?\"'()-".contains(c)) { "PUNCT" } else { "SYM" };
    }
    if raw.chars().any(|c| "$%&@#+=<>".contains(c)) && !raw.chars().any(char::is_alphabetic) {
        return "SYM";
    }
    if raw.chars().any(|c| c.is_ascii_digit()) && raw.chars().all(|c| c.is_ascii_digit() || ",.".contains(c)) {
        return "NUM";
    }
    let lower = normalise(raw);
    if person(&lower).is_some() || OTHER_PRON.contains(&lower.as_str()) {
        return "PRON";
    }
    for (tag, words) in CLOSED_CLASS {
        if words.contains(&lower.as_str()) {
            return tag;
        }
    }
    const NUMBERS: &[&str] = &["one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "hundred", "thousand"];
    if NUMBERS.contains(&lower.as_str()) {
        return "NUM";
    }
    if !lower.chars().any(char::is_alphabetic) {
        return "X";
    }
    if raw.chars().next().is_some_and(char::is_uppercase) {
        return "PROPN";
    }
    if lower.ends_with("ly") && lower.len() > 4 {
        return "ADV";
    }
    if ["ing", "ed", "ize", "ise", "ify"].iter().any(|s| lower.ends_with(s) && lower.len() > s.len() + 2) {
        return "VERB";
    }
    if ["ous", "ful", "able", "ible", "ive", "less", "ish", "ic", "al"]
        .iter()
        .any(|s| lower.ends_with(s) && lower.len() > s.len() + 2)
    {
        return "ADJ";
    }
    "NOUN"
}

/// 20-slot syntax vector: a sidecar vector verbatim, otherwise the fallback
/// POS one-hot plus a person bit for personal pronouns.
pub fn word_syntax(token: &str, sidecar: Option<&[f64]>) -> Result<[f64; SYNTAX_DIM], FeatureError> {
    if let Some(v) = sidecar {
        if v.len() != SYNTAX_DIM {
            return Err(FeatureError::SidecarDimension {
                what: "syntax",
                expected: SYNTAX_DIM,
                found: v.len(),
            });
        }
        let mut out = [0.0; SYNTAX_DIM];
        out.copy_from_slice(v);
        return Ok(out);
    }
    if token.trim().is_empty() {
        return Err(FeatureError::EmptyToken);
    }
    let mut out = [0.0; SYNTAX_DIM];
    let tag = fallback_tag(token);
    out[upos_index(tag)] = 1.0;
    if tag == "PRON" {
        if let Some(p) = person(&normalise(token)) {
            out[PERSON_OFFSET + p] = 1.0;
        }
    }
    Ok(out)
}

/// Named word lists used by the fallback sentiment features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lexicons {
    pub lists: Vec<(String, Vec<String>)>,
    pub negators: Vec<String>,
    /// A hit is negated when a negator occurs within this many preceding tokens.
    pub negation_window: usize,
}

impl Default for Lexicons {
    fn default() -> Self {
        let list = |name: &str, words: &[&str]| (name.to_string(), words.iter().map(|w| w.to_string()).collect());
        Lexicons {
            lists: vec![
                list("positive", &["good", "great", "love", "nice", "happy", "glad", "wonderful", "best", "fine", "awesome", "like", "enjoy", "fun", "beautiful", "excellent", "thanks", "amazing", "cool", "better", "well"]),
                list("negative", &["bad", "terrible", "hate", "awful", "worst", "sad", "angry", "wrong", "poor", "horrible", "sick", "hurt", "problem", "stupid", "annoying", "worse", "pain", "ugly", "fail", "unfair"]),
                list("anger", &["angry", "mad", "furious", "hate", "annoyed", "rage", "outraged", "irritated", "hostile", "damn"]),
                list("fear", &["afraid", "scared", "fear", "worried", "nervous", "anxious", "panic", "terrified", "danger", "risk"]),
                list("joy", &["happy", "joy", "glad", "delighted", "excited", "cheerful", "laugh", "smile", "celebrate", "fun"]),
                list("sadness", &["sad", "cry", "lonely", "miss", "lost", "grief", "depressed", "sorry", "unhappy", "tears"]),
                list("disgust", &["gross", "disgusting", "sick", "nasty", "vile", "yuck", "filthy", "revolting", "creepy", "awful"]),
                list("surprise", &["wow", "surprised", "unexpected", "suddenly", "amazing", "shocked", "whoa", "unbelievable", "astonishing", "really"]),
                list("trust", &["trust", "believe", "sure", "honest", "true", "reliable", "safe", "faith", "promise", "certain"]),
                list("arousal", &["excited", "furious", "thrilled", "panic", "shout", "intense", "wild", "energetic", "frantic", "alarmed"]),
            ],
            negators: ["not", "no", "never", "n't", "don't", "can't", "won't", "isn't", "didn't", "nothing", "nobody", "neither", "nor"]
                .iter()
                .map(|w| w.to_string())
                .collect(),
            negation_window: 3,
        }
    }
}

pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|t| t.trim_matches(|c: char| c.is_ascii_punctuation() && c != '\'').to_lowercase())
        .filter(|t| !t.is_empty())
        .collect()
}

/// Sentiment vector of length `dim`: a sidecar vector verbatim, otherwise
/// three rates per lexicon (hits, non-negated hits, negated hits, each over
/// the token count) zero-padded or truncated to `dim`.
pub fn utterance_sentiment(
    transcript: &str,
    sidecar: Option<&[f64]>,
    lexicons: &Lexicons,
    dim: usize,
) -> Result<Vec<f64>, FeatureError> {
    if let Some(v) = sidecar {
        if v.len() != dim {
            return Err(FeatureError::SidecarDimension {
                what: "sentiment",
                expected: dim,
                found: v.len(),
            });
        }
        return Ok(v.to_vec());
    }
    let tokens = tokenize(transcript);
    let mut out = Vec::with_capacity(3 * lexicons.lists.len());
    let n = tokens.len() as f64;
    let negated: Vec<bool> = (0..tokens.len())
        .map(|i| {
            let lo = i.saturating_sub(lexicons.negation_window);
            tokens[lo..i].iter().any(|t| lexicons.negators.contains(t) || t.ends_with("n't"))
        })
        .collect();
    for (_, words) in &lexicons.lists {
        let (mut hits, mut plain, mut neg) = (0.0, 0.0, 0.0);
        for (t, &is_neg) in tokens.iter().zip(&negated) {
            if words.contains(t) {
                hits += 1.0;
                if is_neg {
                    neg += 1.0;
                } else {
                    plain += 1.0;
                }
            }
        }
        if n > 0.0 {
            out.extend([hits / n, plain / n, neg / n]);
        } else {
            out.extend([0.0; 3]);
        }
    }
    out.resize(dim, 0.0);
    Ok(out)
}
