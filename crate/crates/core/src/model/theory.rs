use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{parse_theory_strings, Formula, ParseError};

/// Which step produced a sentence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Input,
    Preprocess,
    Partition,
    Reznikoff,
    Complement,
    ScottFilter,
    PhiStar,
    Driver,
}

/// Provenance of one sentence: the producing step and the input indices it was built from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub origin: Origin,
    pub sources: Vec<usize>,
}

impl Provenance {
    pub fn input(index: usize) -> Self {
        Self {
            origin: Origin::Input,
            sources: vec![index],
        }
    }

    pub fn new(origin: Origin, sources: Vec<usize>) -> Self {
        Self { origin, sources }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Axiom {
    pub sentence: Arc<Formula>,
    pub label: Provenance,
}

/// An ordered list of labelled sentences. Order is significant and duplicates are allowed.
///
/// The file form is a JSON array of s-expression strings; labels are not stored there and
/// a parsed theory labels sentence `i` as input `i`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Theory {
    axioms: Vec<Axiom>,
}

impl Theory {
    pub fn new() -> Self {
        Self::default()
    }

    /// A theory whose sentences are labelled as inputs `0..n`.
    pub fn from_sentences(sentences: impl IntoIterator<Item = Arc<Formula>>) -> Self {
        Self {
            axioms: sentences
                .into_iter()
                .enumerate()
                .map(|(i, sentence)| Axiom {
                    sentence,
                    label: Provenance::input(i),
                })
                .collect(),
        }
    }

    pub fn from_axioms(axioms: Vec<Axiom>) -> Self {
        Self { axioms }
    }

    pub fn push(&mut self, sentence: Arc<Formula>, label: Provenance) {
        self.axioms.push(Axiom { sentence, label });
    }

    pub fn axioms(&self) -> &[Axiom] {
        &self.axioms
    }

    pub fn sentences(&self) -> impl ExactSizeIterator<Item = &Arc<Formula>> + '_ {
        self.axioms.iter().map(|a| &a.sentence)
    }

    pub fn get(&self, i: usize) -> Option<&Arc<Formula>> {
        self.axioms.get(i).map(|a| &a.sentence)
    }

    pub fn len(&self) -> usize {
        self.axioms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axioms.is_empty()
    }

    /// The theory with sentence `i` removed.
    pub fn without(&self, i: usize) -> Theory {
        let mut axioms = self.axioms.clone();
        axioms.remove(i);
        Theory { axioms }
    }

    /// Sentence strings in file order.
    pub fn to_strings(&self) -> Vec<String> {
        self.sentences().map(|s| s.to_string()).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_strings()).expect("strings serialize")
    }

    pub fn from_json(text: &str) -> Result<Theory, TheoryFileError> {
        let items: Vec<String> = serde_json::from_str(text).map_err(|e| TheoryFileError::Json(e.to_string()))?;
        let sentences = parse_theory_strings(&items).map_err(|(index, error)| TheoryFileError::Sentence { index, error })?;
        Ok(Theory::from_sentences(sentences))
    }
}

impl FromIterator<Arc<Formula>> for Theory {
    fn from_iter<I: IntoIterator<Item = Arc<Formula>>>(iter: I) -> Self {
        Theory::from_sentences(iter)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TheoryFileError {
    #[error("theory file is not a JSON array of strings: {0}")]
    Json(String),
    #[error("sentence {index}: {error}")]
    Sentence { index: usize, error: ParseError },
}

impl fmt::Display for Theory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.axioms.iter().enumerate() {
            writeln!(f, "{i}: {}", a.sentence)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let text = r#"["(exists x (atom P x))", "(forall x (eq x x))"]"#;
        let t = Theory::from_json(text).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.axioms()[1].label, Provenance::input(1));
        let again = Theory::from_json(&t.to_json()).unwrap();
        assert_eq!(again, t);
    }

    #[test]
    fn bad_sentence_reports_index() {
        let err = Theory::from_json(r#"["(eq x x)", "(eq x"]"#).unwrap_err();
        assert!(matches!(err, TheoryFileError::Sentence { index: 1, .. }));
        assert!(matches!(Theory::from_json("{}"), Err(TheoryFileError::Json(_))));
    }
}
