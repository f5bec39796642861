//! Generic chat-completion client used by the service backends.
//!
//! Requests are keyed by a content hash and logged to a cache directory, so
//! a recorded run replays offline byte-for-byte. Cache writes go through a
//! temp file and an atomic rename, which keeps concurrent writers safe.

use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::Digest;
use thiserror::Error;

/// Environment variable naming the chat-completion endpoint URL.
pub const ENV_ENDPOINT: &str = "DRIFT_LLM_ENDPOINT";
/// Environment variable naming the model.
pub const ENV_MODEL: &str = "DRIFT_LLM_MODEL";
/// Environment variable holding the bearer token, if any.
pub const ENV_API_KEY: &str = "DRIFT_LLM_API_KEY";

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("{0} is not set")]
    MissingEnv(&'static str),
    #[error("request failed: {0}")]
    Transport(String),
    #[error("malformed service reply: {0}")]
    BadReply(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Connection settings for a chat-completion service.
#[derive(Debug, Clone)]
pub struct ChatClient {
    pub endpoint: String,
    pub model: String,
    pub api_key: Option<String>,
    pub cache_dir: Option<PathBuf>,
    pub timeout: Duration,
    pub max_retries: u32,
}

impl ChatClient {
    /// Build from `DRIFT_LLM_ENDPOINT` / `DRIFT_LLM_MODEL` /
    /// `DRIFT_LLM_API_KEY`.
    pub fn from_env() -> Result<Self, ServiceError> {
        let endpoint =
            std::env::var(ENV_ENDPOINT).map_err(|_| ServiceError::MissingEnv(ENV_ENDPOINT))?;
        let model = std::env::var(ENV_MODEL).map_err(|_| ServiceError::MissingEnv(ENV_MODEL))?;
        Ok(Self {
            endpoint,
            model,
            api_key: std::env::var(ENV_API_KEY).ok(),
            cache_dir: None,
            timeout: Duration::from_secs(60),
            max_retries: 1,
        })
    }

    pub fn with_cache_dir(mut self, dir: Option<PathBuf>) -> Self {
        self.cache_dir = dir;
        self
    }

    /// Hash identifying one request's content; the cache key.
    pub fn request_key(&self, system: &str, user: &str, temperature: f32) -> String {
        let canonical = serde_json::to_vec(&serde_json::json!({
            "model": self.model,
            "system": system,
            "user": user,
            "temperature": format!("{temperature:.3}"),
        }))
        .expect("json");
        let digest = sha2::Sha256::digest(&canonical);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// One chat completion: system + user turn, returning the assistant
    /// reply text. Cache hits never touch the network.
    pub fn complete(
        &self,
        system: &str,
        user: &str,
        temperature: f32,
    ) -> Result<String, ServiceError> {
        let key = self.request_key(system, user, temperature);
        if let Some(cached) = self.read_cache(&key)? {
            return Ok(cached);
        }

        let body = serde_json::json!({
            "model": self.model,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
            "temperature": temperature,
        });

        let mut last_err = String::new();
        for _ in 0..=self.max_retries {
            match self.post_once(&body) {
                Ok(content) => {
                    self.write_cache(&key, system, user, temperature, &content)?;
                    return Ok(content);
                }
                Err(ServiceError::Transport(e)) => last_err = e,
                Err(other) => return Err(other),
            }
        }
        Err(ServiceError::Transport(last_err))
    }

    fn post_once(&self, body: &serde_json::Value) -> Result<String, ServiceError> {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(self.timeout))
            .build();
        let agent: ureq::Agent = config.into();
        let mut request = agent.post(&self.endpoint);
        if let Some(key) = &self.api_key {
            request = request.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = request
            .send_json(body)
            .map_err(|e| ServiceError::Transport(e.to_string()))?;
        let value: serde_json::Value = response
            .body_mut()
            .read_json()
            .map_err(|e| ServiceError::BadReply(e.to_string()))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| ServiceError::BadReply("no choices[0].message.content".to_string()))
    }

    fn cache_path(&self, key: &str) -> Option<PathBuf> {
        self.cache_dir.as_ref().map(|d| d.join(format!("{key}.json")))
    }

    fn read_cache(&self, key: &str) -> Result<Option<String>, ServiceError> {
        let Some(path) = self.cache_path(key) else {
            return Ok(None);
        };
        match std::fs::read_to_string(&path) {
            Ok(text) => {
                let record: CacheRecord = serde_json::from_str(&text)
                    .map_err(|e| ServiceError::BadReply(format!("corrupt cache {path:?}: {e}")))?;
                Ok(Some(record.response))
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    fn write_cache(
        &self,
        key: &str,
        system: &str,
        user: &str,
        temperature: f32,
        response: &str,
    ) -> Result<(), ServiceError> {
        let Some(path) = self.cache_path(key) else {
            return Ok(());
        };
        let dir = path.parent().expect("cache path has a parent");
        std::fs::create_dir_all(dir)?;
        let record = CacheRecord {
            model: self.model.clone(),
            system: system.to_string(),
            user: user.to_string(),
            temperature,
            response: response.to_string(),
        };
        let tmp = tempfile::NamedTempFile::new_in(dir)?;
        serde_json::to_writer_pretty(&tmp, &record)
            .map_err(|e| ServiceError::BadReply(e.to_string()))?;
        tmp.persist(&path).map_err(|e| ServiceError::Io(e.error))?;
        Ok(())
    }

    /// Seed a cache entry without any network call; lets tests and recorded
    /// runs supply canned replies.
    pub fn prime_cache(
        &self,
        system: &str,
        user: &str,
        temperature: f32,
        response: &str,
    ) -> Result<(), ServiceError> {
        let key = self.request_key(system, user, temperature);
        self.write_cache(&key, system, user, temperature, response)
    }
}

#[derive(Serialize, Deserialize)]
struct CacheRecord {
    model: String,
    system: String,
    user: String,
    temperature: f32,
    response: String,
}
