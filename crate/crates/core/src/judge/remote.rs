use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::{JudgeConfig, JudgeError, JudgeVerdict, VerdictSource};

/// System prompt sent verbatim with every remote judge request.
pub const JUDGE_SYSTEM_PROMPT: &str = include_str!("../../resources/judge_system_prompt.txt");

/// Minimal OpenAI-compatible chat-completion client.
#[derive(Debug)]
pub struct ChatClient {
    agent: ureq::Agent,
    endpoint: String,
    model: String,
    token: String,
    max_retries: u32,
    cache_dir: Option<PathBuf>,
}

impl ChatClient {
    /// Reads the bearer token from the configured environment variable; fails
    /// before any request if it is unset.
    pub fn from_config(config: &JudgeConfig) -> Result<ChatClient, JudgeError> {
        let endpoint = config
            .endpoint
            .clone()
            .filter(|e| !e.is_empty())
            .ok_or_else(|| JudgeError::Config("remote judge requires an endpoint".into()))?;
        let var = config
            .auth_env
            .as_deref()
            .filter(|v| !v.is_empty())
            .ok_or_else(|| JudgeError::Config("remote judge requires an auth environment variable".into()))?;
        let token = std::env::var(var)
            .map_err(|_| JudgeError::Config(format!("environment variable {var} is not set")))?;
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_secs_f64(config.timeout_secs))
            .build();
        Ok(ChatClient {
            agent,
            endpoint,
            model: config.model.clone(),
            token,
            max_retries: config.max_retries,
            cache_dir: config.cache_dir.clone(),
        })
    }

    fn send_once(&self, system: Option<&str>, user: &str, temperature: f64) -> Result<String, JudgeError> {
        let mut messages = Vec::new();
        if let Some(s) = system {
            messages.push(json!({"role": "system", "content": s}));
        }
        messages.push(json!({"role": "user", "content": user}));
        let body = json!({"model": self.model, "messages": messages, "temperature": temperature});
        let response = self
            .agent
            .post(&self.endpoint)
            .set("Authorization", &format!("Bearer {}", self.token))
            .send_json(body);
        let response = match response {
            Ok(r) => r,
            Err(ureq::Error::Status(code, _)) if code == 401 || code == 403 => return Err(JudgeError::Auth(code)),
            Err(ureq::Error::Status(status, r)) => {
                let body = r.into_string().unwrap_or_default();
                return Err(JudgeError::Status { status, body });
            }
            Err(ureq::Error::Transport(t)) => {
                let msg = t.to_string();
                return Err(if msg.contains("timed out") { JudgeError::Timeout } else { JudgeError::Transport(msg) });
            }
        };
        let text = response.into_string().map_err(|e| JudgeError::Transport(e.to_string()))?;
        let value: Value =
            serde_json::from_str(&text).map_err(|e| JudgeError::Parse(format!("response is not JSON: {e}")))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_owned)
            .ok_or_else(|| JudgeError::Parse("missing choices[0].message.content".into()))
    }

    fn with_retries<T>(&self, mut f: impl FnMut() -> Result<T, JudgeError>) -> Result<T, JudgeError> {
        let mut attempt = 0;
        loop {
            match f() {
                Err(e) if e.is_retryable() && attempt < self.max_retries => attempt += 1,
                other => return other,
            }
        }
    }

    /// Sends one chat completion, retrying transport and parse failures.
    pub fn complete(&self, system: Option<&str>, user: &str, temperature: f64) -> Result<String, JudgeError> {
        self.with_retries(|| self.send_once(system, user, temperature))
    }
}

fn cache_key(question: &str, answer: &str) -> String {
    let mut h = Sha256::new();
    h.update(question.as_bytes());
    h.update([0u8]);
    h.update(answer.as_bytes());
    format!("{:x}", h.finalize())
}

fn cache_path(dir: &Path, question: &str, answer: &str) -> PathBuf {
    dir.join(format!("{}.json", cache_key(question, answer)))
}

/// Extracts the 0/1 label from a judge reply: a JSON object (optionally in a
/// code fence) with a `label` or `score` field.
pub fn parse_label(reply: &str) -> Result<(u8, String), JudgeError> {
    let start = reply.find('{');
    let end = reply.rfind('}');
    let (Some(start), Some(end)) = (start, end) else {
        return Err(JudgeError::Parse(format!("no JSON object in reply {reply:?}")));
    };
    if end < start {
        return Err(JudgeError::Parse(format!("no JSON object in reply {reply:?}")));
    }
    let value: Value = serde_json::from_str(&reply[start..=end])
        .map_err(|e| JudgeError::Parse(format!("reply JSON: {e}")))?;
    let raw = value.get("label").or_else(|| value.get("score"));
    let label = match raw {
        Some(Value::Number(n)) => n.as_f64(),
        Some(Value::String(s)) => s.trim().parse::<f64>().ok(),
        _ => None,
    };
    let label = match label {
        Some(l) if l == 0.0 => 0,
        Some(l) if l == 1.0 => 1,
        _ => return Err(JudgeError::Parse(format!("label must be 0 or 1, found {raw:?}"))),
    };
    let reason = value.get("reasoning").and_then(Value::as_str).unwrap_or_default().to_owned();
    Ok((label, reason))
}

/// Judges one QA pair with the remote endpoint, consulting the disk cache.
pub fn remote_judge(client: &ChatClient, question: &str, answer: &str) -> Result<JudgeVerdict, JudgeError> {
    if let Some(dir) = &client.cache_dir {
        let path = cache_path(dir, question, answer);
        if let Ok(text) = fs::read_to_string(&path) {
            if let Ok(v) = serde_json::from_str::<JudgeVerdict>(&text) {
                return Ok(v);
            }
        }
    }
    let user = format!(
        "Question: {question}\nAnswer: {answer}\n\n\
         Reply with a JSON object {{\"reasoning\": <text>, \"label\": <0 or 1>}}."
    );
    let (label, reason) = client.with_retries(|| {
        let reply = client.send_once(Some(JUDGE_SYSTEM_PROMPT), &user, 0.0)?;
        parse_label(&reply)
    })?;
    let verdict = JudgeVerdict { label, reason, source: VerdictSource::Remote };
    if let Some(dir) = &client.cache_dir {
        fs::create_dir_all(dir).map_err(|e| JudgeError::Cache(e.to_string()))?;
        let text = serde_json::to_string(&verdict).map_err(|e| JudgeError::Cache(e.to_string()))?;
        fs::write(cache_path(dir, question, answer), text).map_err(|e| JudgeError::Cache(e.to_string()))?;
    }
    Ok(verdict)
}
