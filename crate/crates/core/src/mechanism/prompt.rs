//! Attribute-conditioned instruction prompt.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Attributes predicted for one sentence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictedAttributes {
    /// Word count, at least 1.
    pub length: u32,
    pub surprisal: f64,
    pub sentiment: String,
    pub topic: String,
}

impl PredictedAttributes {
    pub fn new(length: u32, surprisal: f64, sentiment: impl Into<String>, topic: impl Into<String>) -> Result<Self> {
        if length == 0 {
            return Err(Error::InvalidInput("predicted length must be at least 1".into()));
        }
        if !surprisal.is_finite() {
            return Err(Error::InvalidInput(format!("surprisal must be finite, got {surprisal}")));
        }
        Ok(Self {
            length,
            surprisal,
            sentiment: sentiment.into(),
            topic: topic.into(),
        })
    }
}

/// Fills the instruction template. Surprisal is printed with two decimals;
/// the other slots are substituted verbatim.
pub fn render_prompt(h: &PredictedAttributes) -> String {
    format!(
        "System: Based on the following EEG signals, reconstruct the text. \
         The length of the sentence is {} words. \
         The average surprisal value is {:.2}. \
         Sentiment: {}. Topic: {}.",
        h.length, h.surprisal, h.sentiment, h.topic
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_template() {
        let h = PredictedAttributes::new(12, 0.58, "Positive", "Movie").unwrap();
        assert_eq!(
            render_prompt(&h),
            "System: Based on the following EEG signals, reconstruct the text. The length of the sentence is 12 words. \
             The average surprisal value is 0.58. Sentiment: Positive. Topic: Movie."
        );
    }

    #[test]
    fn no_pluralization() {
        let h = PredictedAttributes::new(1, 0.0, "Negative", "Biography").unwrap();
        let p = render_prompt(&h);
        assert!(p.contains("is 1 words."));
        assert!(p.contains("value is 0.00."));
    }

    #[test]
    fn validates() {
        assert!(PredictedAttributes::new(0, 0.5, "a", "b").is_err());
        assert!(PredictedAttributes::new(3, f64::NAN, "a", "b").is_err());
    }
}
