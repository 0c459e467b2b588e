//! Back-translation through a pivot language.

use std::error::Error as StdError;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{AugmentError, Augmenter};
use crate::corpus::{Origin, Tweet};

/// Environment variable holding the bearer token for [`HttpTranslator`].
pub const TOKEN_ENV: &str = "CLAIMRANK_TRANSLATE_TOKEN";

#[derive(Debug, Error)]
#[error("translation failed: {message}")]
pub struct TranslatorError {
    pub message: String,
    #[source]
    pub cause: Option<Box<dyn StdError + Send + Sync>>,
}

impl TranslatorError {
    pub fn new(message: impl Into<String>) -> Self {
        TranslatorError { message: message.into(), cause: None }
    }

    pub fn with_cause(message: impl Into<String>, cause: impl StdError + Send + Sync + 'static) -> Self {
        TranslatorError { message: message.into(), cause: Some(Box::new(cause)) }
    }
}

pub trait Translator: Send + Sync {
    fn translate(&self, text: &str, src: &str, dst: &str) -> Result<String, TranslatorError>;
}

pub struct IdentityTranslator;

impl Translator for IdentityTranslator {
    fn translate(&self, text: &str, _: &str, _: &str) -> Result<String, TranslatorError> {
        Ok(text.to_string())
    }
}

/// Reverses whitespace-delimited word order; applying it twice restores the
/// original (modulo whitespace normalization).
pub struct ReversingTranslator;

impl Translator for ReversingTranslator {
    fn translate(&self, text: &str, _: &str, _: &str) -> Result<String, TranslatorError> {
        Ok(text.split_whitespace().rev().collect::<Vec<_>>().join(" "))
    }
}

#[derive(Serialize)]
struct TranslateRequest<'a> {
    text: &'a str,
    source: &'a str,
    target: &'a str,
}

#[derive(Deserialize)]
struct TranslateResponse {
    text: String,
}

/// POSTs `{"text", "source", "target"}` as JSON and expects `{"text"}` back.
/// Sends `Authorization: Bearer <token>` when a token is configured.
pub struct HttpTranslator {
    endpoint: String,
    token: Option<String>,
    agent: ureq::Agent,
}

impl HttpTranslator {
    pub fn new(endpoint: impl Into<String>, token: Option<String>, timeout: Duration) -> Self {
        HttpTranslator {
            endpoint: endpoint.into(),
            token,
            agent: ureq::AgentBuilder::new().timeout(timeout).build(),
        }
    }

    /// Token from [`TOKEN_ENV`], 30 s timeout.
    pub fn from_env(endpoint: impl Into<String>) -> Self {
        Self::new(endpoint, std::env::var(TOKEN_ENV).ok(), Duration::from_secs(30))
    }
}

impl Translator for HttpTranslator {
    fn translate(&self, text: &str, src: &str, dst: &str) -> Result<String, TranslatorError> {
        let mut req = self.agent.post(&self.endpoint);
        if let Some(token) = &self.token {
            req = req.set("Authorization", &format!("Bearer {token}"));
        }
        let resp = req
            .send_json(TranslateRequest { text, source: src, target: dst })
            .map_err(|e| TranslatorError::with_cause(format!("request to {} failed", self.endpoint), e))?;
        let body: TranslateResponse =
            resp.into_json().map_err(|e| TranslatorError::with_cause("unreadable translation response", e))?;
        Ok(body.text)
    }
}

/// `translate(translate(text, src → pivot), pivot → src)`, tagged as
/// back-translated with an `#bt<epoch>` id suffix.
pub fn back_translate(
    tweet: &Tweet,
    translator: &dyn Translator,
    src: &str,
    pivot: &str,
    epoch: u32,
) -> Result<Tweet, TranslatorError> {
    let there = translator.translate(&tweet.text, src, pivot)?;
    let back = translator.translate(&there, pivot, src)?;
    Ok(Tweet {
        topic_id: tweet.topic_id.clone(),
        tweet_id: format!("{}#bt{}", tweet.tweet_id, epoch),
        text: back,
        label: tweet.label,
        origin: Origin::Backtranslated,
    })
}

pub struct BackTranslateAugmenter<'a> {
    pub translator: &'a dyn Translator,
    pub source: String,
    pub pivot: String,
}

impl Augmenter for BackTranslateAugmenter<'_> {
    fn augment(&self, tweet: &Tweet, epoch: u32) -> Result<Tweet, AugmentError> {
        Ok(back_translate(tweet, self.translator, &self.source, &self.pivot, epoch)?)
    }
}
