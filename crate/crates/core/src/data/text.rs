//! Text normalisation, tokenisation and TF-IDF vectors.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Phrase rewrites applied after lowercasing. Whole contractions are listed
/// before the bare suffix rules.
const PHRASES: &[(&str, &str)] = &[
    ("what's", "what is"),
    ("don't", "do not"),
    ("doesn't", "does not"),
    ("that's", "that is"),
    ("aren't", "are not"),
    ("i'm", "i am"),
    ("he's", "he is"),
    ("she's", "she is"),
    ("it's", "it is"),
    ("isn't", "is not"),
    ("'ll", " will"),
    ("'s", " is"),
    ("'ve", " have"),
    ("'re", " are"),
    ("'d", " would"),
    ("%", " percent"),
    ("e-mail", "e mail"),
];

/// Lowercases, expands contractions, strips punctuation and collapses
/// whitespace. Idempotent.
pub fn preprocess_text(raw: &str) -> String {
    let mut text = raw.to_lowercase().replace(['\u{2019}', '\u{2018}'], "'");
    for (from, to) in PHRASES {
        if text.contains(from) {
            text = text.replace(from, to);
        }
    }
    let cleaned: String = text
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect();
    cleaned.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Rule-based suffix stripper (`ing`, `ed`, `es`, `s`), iterated to a fixed
/// point so that `stem_token(stem_token(w)) == stem_token(w)`.
pub fn stem_token(token: &str) -> String {
    let mut word = token.to_string();
    while let Some(next) = strip_once(&word) {
        word = next;
    }
    word
}

fn strip_once(word: &str) -> Option<String> {
    let n = word.chars().count();
    if !word.is_ascii() {
        return None;
    }
    let keep = |suffix: &str| -> Option<String> {
        let stem = &word[..word.len() - suffix.len()];
        (stem.len() >= 3).then(|| stem.to_string())
    };
    if word.ends_with("ing") && n >= 6 {
        return keep("ing");
    }
    if word.ends_with("ed") && n >= 5 {
        return keep("ed");
    }
    if word.ends_with("sses") || word.ends_with("xes") || word.ends_with("ches") || word.ends_with("shes") {
        return keep("es");
    }
    if word.ends_with('s') && !word.ends_with("ss") && !word.ends_with("us") && !word.ends_with("is") {
        return keep("s");
    }
    None
}

/// Normalised, stemmed tokens of a raw document.
pub fn tokenize(raw: &str) -> Vec<String> {
    preprocess_text(raw).split_whitespace().map(stem_token).collect()
}

/// Token vocabulary with document frequencies for TF-IDF weighting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    tokens: Vec<String>,
    document_frequencies: Vec<usize>,
    documents: usize,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl Vocabulary {
    fn build(tokens: Vec<String>, document_frequencies: Vec<usize>, documents: usize) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocabulary {
            tokens,
            document_frequencies,
            documents,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn token(&self, i: usize) -> &str {
        &self.tokens[i]
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn document_frequency(&self, token: &str) -> Option<usize> {
        self.index_of(token).map(|i| self.document_frequencies[i])
    }

    pub fn documents(&self) -> usize {
        self.documents
    }

    /// Smoothed inverse document frequency `ln((1 + n) / (1 + df)) + 1`.
    pub fn idf(&self, i: usize) -> f64 {
        ((1.0 + self.documents as f64) / (1.0 + self.document_frequencies[i] as f64)).ln() + 1.0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("vocabulary serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: Vocabulary = serde_json::from_str(text).map_err(|e| Error::from_json(e, text))?;
        if v.tokens.len() != v.document_frequencies.len() {
            return Err(Error::Validation(
                "vocabulary tokens and document frequencies differ in length".into(),
            ));
        }
        Ok(Vocabulary::build(v.tokens, v.document_frequencies, v.documents))
    }
}

/// Keeps the `max_features` most frequent tokens of the corpus (ties broken
/// lexicographically) and records their document frequencies.
pub fn tfidf_fit<S: AsRef<str>>(corpus: &[S], max_features: usize) -> Result<Vocabulary> {
    if corpus.is_empty() {
        return Err(Error::Degenerate("cannot fit a vocabulary on an empty corpus".into()));
    }
    let mut counts: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for doc in corpus {
        let tokens = tokenize(doc.as_ref());
        let mut seen: Vec<&String> = Vec::new();
        for t in &tokens {
            let entry = counts.entry(t.clone()).or_default();
            entry.0 += 1;
            if !seen.contains(&t) {
                entry.1 += 1;
                seen.push(t);
            }
        }
    }
    let mut ranked: Vec<(String, usize, usize)> = counts.into_iter().map(|(t, (c, df))| (t, c, df)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(max_features);
    let (tokens, dfs) = ranked.into_iter().map(|(t, _, df)| (t, df)).unzip();
    Ok(Vocabulary::build(tokens, dfs, corpus.len()))
}

/// L2-normalised TF-IDF vector of already tokenised text.
pub fn tfidf_tokens<S: AsRef<str>>(vocab: &Vocabulary, tokens: &[S]) -> Vec<f64> {
    let mut v = vec![0.0; vocab.len()];
    for t in tokens {
        if let Some(i) = vocab.index_of(t.as_ref()) {
            v[i] += 1.0;
        }
    }
    for (i, x) in v.iter_mut().enumerate() {
        if *x != 0.0 {
            *x *= vocab.idf(i);
        }
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

/// TF-IDF vector of a raw document; out-of-vocabulary tokens are dropped.
pub fn tfidf_transform(vocab: &Vocabulary, text: &str) -> Vec<f64> {
    tfidf_tokens(vocab, &tokenize(text))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phrase_table() {
        assert_eq!(preprocess_text("What's up?"), "what is up");
        assert_eq!(preprocess_text("100% done"), "100 percent done");
        assert_eq!(preprocess_text(""), "");
        assert_eq!(
            preprocess_text("You'll see, I'm SURE it's fine."),
            "you will see i am sure it is fine"
        );
        assert_eq!(preprocess_text("Send an e-mail"), "send an e mail");
        assert_eq!(preprocess_text("They'd've gone"), "they would have gone");
    }

    #[test]
    fn stemming_is_idempotent() {
        for w in [
            "classes", "winning", "offers", "claimed", "is", "this", "bus", "texts", "boxes", "news",
        ] {
            let once = stem_token(w);
            assert_eq!(stem_token(&once), once, "{w}");
        }
        assert_eq!(stem_token("winning"), "winn");
        assert_eq!(stem_token("offers"), "offer");
        assert_eq!(stem_token("classes"), "class");
        assert_eq!(stem_token("is"), "is");
    }

    #[test]
    fn fit_counts_and_ties() {
        let v = tfidf_fit(&["a b", "b c"], 10).unwrap();
        let mut tokens = v.tokens().to_vec();
        tokens.sort();
        assert_eq!(tokens, ["a", "b", "c"]);
        assert_eq!(v.document_frequency("a"), Some(1));
        assert_eq!(v.document_frequency("b"), Some(2));
        assert_eq!(v.document_frequency("c"), Some(1));

        let capped = tfidf_fit(&["a b", "b c"], 2).unwrap();
        assert_eq!(capped.tokens(), ["b", "a"]);
        assert_eq!(tfidf_fit(&["a b", "b c"], 10).unwrap(), v);
        assert!(tfidf_fit::<&str>(&[], 3).is_err());
    }

    #[test]
    fn transform_examples() {
        let v = tfidf_fit(&["a", "a b"], 10).unwrap();
        assert!((v.idf(v.index_of("a").unwrap()) - 1.0).abs() < 1e-15);
        assert!((v.idf(v.index_of("b").unwrap()) - (1.5f64.ln() + 1.0)).abs() < 1e-15);
        assert!((v.idf(v.index_of("b").unwrap()) - 1.405).abs() < 1e-3);

        assert_eq!(tfidf_transform(&v, "zzz qqq"), vec![0.0, 0.0]);
        for k in 1..5 {
            let doc = vec!["b"; k].join(" ");
            let x = tfidf_transform(&v, &doc);
            assert_eq!(x[v.index_of("b").unwrap()], 1.0);
            assert_eq!(x[v.index_of("a").unwrap()], 0.0);
        }
    }

    #[test]
    fn vocabulary_json_round_trip() {
        let v = tfidf_fit(&["free prize now", "see you at lunch"], 100).unwrap();
        let back = Vocabulary::from_json(&v.to_json()).unwrap();
        assert_eq!(back.index_of("prize"), v.index_of("prize"));
        assert_eq!(back, v);
    }
}
