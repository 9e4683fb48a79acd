//! Remote chat and embedding clients.
//!
//! Requests use the widely deployed chat-completions wire shape (model,
//! messages[], temperature); endpoint and model are fully configurable and
//! the auth token is read at call time from an environment variable named in
//! the config, so credentials never land in checkpoints or logs. Transient
//! failures retry with exponential backoff.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::artifact::Artifact;
use crate::backends::{parse_file_blocks, AgentBackend, AgentContext, Embedder};
use crate::chain::{Phase, Solution};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct RemoteConfig {
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token.
    pub token_env: String,
    pub timeout: Duration,
    pub retries: u32,
    pub temperature: f64,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        Self {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-3.5-turbo".into(),
            token_env: "EXPOOL_API_TOKEN".into(),
            timeout: Duration::from_secs(60),
            retries: 3,
            temperature: 0.2,
        }
    }
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: String,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: Vec<ChatMessage<'a>>,
    temperature: f64,
}

#[derive(Deserialize)]
struct ChatReply {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatReplyMessage,
}

#[derive(Deserialize)]
struct ChatReplyMessage {
    content: Option<String>,
}

/// Extracts the assistant text from a chat-completions response body.
pub fn parse_chat_reply(body: &str) -> Result<String> {
    let reply: ChatReply = serde_json::from_str(body)
        .map_err(|e| Error::backend(format!("malformed chat response: {e}; body: {body}")))?;
    let content = reply
        .choices
        .first()
        .and_then(|c| c.message.content.clone())
        .unwrap_or_default();
    if content.trim().is_empty() {
        return Err(Error::backend(format!(
            "chat response carried no content: {body}"
        )));
    }
    Ok(content)
}

/// Maps a transport-level failure onto the crate error type, preserving the
/// HTTP status when one exists.
pub(crate) fn map_ureq_error(err: ureq::Error) -> Error {
    match err {
        ureq::Error::StatusCode(code) => {
            Error::backend_status(format!("HTTP {code}"), code)
        }
        other => Error::backend(format!("request failed: {other}")),
    }
}

fn retryable(err: &Error) -> bool {
    match err {
        Error::Backend { status, .. } => match status {
            Some(code) => *code == 429 || *code >= 500,
            None => true, // timeouts, connection resets
        },
        _ => false,
    }
}

fn bearer_token(token_env: &str) -> Result<String> {
    std::env::var(token_env).map_err(|_| {
        Error::Config(format!(
            "auth token environment variable {token_env} is not set"
        ))
    })
}

fn post_json(
    endpoint: &str,
    token: &str,
    timeout: Duration,
    retries: u32,
    payload: &impl Serialize,
) -> Result<String> {
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(timeout))
        .build()
        .into();

    let body = serde_json::to_string(payload)
        .map_err(|e| Error::backend(format!("request serialization failed: {e}")))?;

    let mut attempt = 0;
    loop {
        let outcome = agent
            .post(endpoint)
            .header("Authorization", &format!("Bearer {token}"))
            .content_type("application/json")
            .send(body.as_str())
            .map_err(map_ureq_error)
            .and_then(|mut response| {
                response
                    .body_mut()
                    .read_to_string()
                    .map_err(map_ureq_error)
            });
        match outcome {
            Ok(body) => return Ok(body),
            Err(err) if attempt < retries && retryable(&err) => {
                std::thread::sleep(Duration::from_millis(250 * (1 << attempt)));
                attempt += 1;
            }
            Err(err) => return Err(err),
        }
    }
}

// --- prompt construction -----------------------------------------------------

const INSTRUCTIVE_SYSTEM: &str = "You are the instructive agent in a two-agent software team. \
Read the task and the current solution, then reply with exactly one imperative directive \
for improving the solution. If the solution already satisfies the task, reply exactly <DONE>.";

const RESPONSIVE_SYSTEM: &str = "You are the responsive agent in a two-agent software team. \
Apply the instruction to the current solution and reply with the complete updated software. \
Emit every file as: a line naming the file path, then the content inside a ``` fence.";

const PSEUDO_SYSTEM: &str = "You summarize code evolution. Given an earlier and a later version \
of a program, reply with a single imperative instruction that transforms the earlier version \
directly into the later one.";

fn fewshot_section(fewshot: &[(String, String)]) -> String {
    if fewshot.is_empty() {
        return String::new();
    }
    let mut s = String::from("Relevant examples from past tasks:\n");
    for (i, (key, value)) in fewshot.iter().enumerate() {
        s.push_str(&format!("--- example {} ---\n{key}\n=>\n{value}\n", i + 1));
    }
    s.push('\n');
    s
}

/// Builds the instructive-agent user prompt. The examples section is omitted
/// entirely when no experiences were retrieved.
pub fn build_instruction_prompt(
    phase: Phase,
    task_text: &str,
    current_solution: &str,
    fewshot: &[(String, String)],
) -> String {
    let solution = if current_solution.trim().is_empty() {
        "(no solution yet)"
    } else {
        current_solution
    };
    format!(
        "{}Phase: {}.\nTask: {}\n\nCurrent solution:\n{}\n\nReply with one directive.",
        fewshot_section(fewshot),
        phase.as_str(),
        task_text,
        solution
    )
}

/// Builds the responsive-agent user prompt.
pub fn build_solution_prompt(
    instruction: &str,
    current_solution: &str,
    fewshot: &[(String, String)],
) -> String {
    let solution = if current_solution.trim().is_empty() {
        "(no solution yet)"
    } else {
        current_solution
    };
    format!(
        "{}Instruction: {}\n\nCurrent solution:\n{}\n\nReply with the complete updated software.",
        fewshot_section(fewshot),
        instruction,
        solution
    )
}

/// Chat client implementing both agent roles over HTTP.
pub struct RemoteBackend {
    config: RemoteConfig,
}

impl RemoteBackend {
    pub fn new(config: RemoteConfig) -> Self {
        Self { config }
    }

    fn chat(&self, system: &str, user: String) -> Result<String> {
        let token = bearer_token(&self.config.token_env)?;
        let request = ChatRequest {
            model: &self.config.model,
            messages: vec![
                ChatMessage {
                    role: "system",
                    content: system.to_string(),
                },
                ChatMessage {
                    role: "user",
                    content: user,
                },
            ],
            temperature: self.config.temperature,
        };
        let body = post_json(
            &self.config.endpoint,
            &token,
            self.config.timeout,
            self.config.retries,
            &request,
        )?;
        parse_chat_reply(&body)
    }
}

impl AgentBackend for RemoteBackend {
    fn propose_instruction(
        &self,
        ctx: &AgentContext,
        task_text: &str,
        current_solution: &str,
        fewshot: &[(String, String)],
    ) -> Result<String> {
        let prompt = build_instruction_prompt(ctx.phase, task_text, current_solution, fewshot);
        let reply = self.chat(INSTRUCTIVE_SYSTEM, prompt)?;
        if reply.trim().is_empty() {
            return Err(Error::backend("instructive agent replied with empty text"));
        }
        Ok(reply.trim().to_string())
    }

    fn respond_solution(
        &self,
        _ctx: &AgentContext,
        instruction: &str,
        current_solution: &str,
        fewshot: &[(String, String)],
    ) -> Result<Artifact> {
        let prompt = build_solution_prompt(instruction, current_solution, fewshot);
        let reply = self.chat(RESPONSIVE_SYSTEM, prompt)?;
        parse_file_blocks(&reply)
    }

    fn pseudo_instruction(
        &self,
        _task_id: &str,
        task_text: &str,
        source: &Solution,
        target: &Solution,
    ) -> Result<String> {
        let user = format!(
            "Task: {}\n\nEarlier version:\n{}\nLater version:\n{}\nReply with one instruction.",
            task_text,
            if source.artifact.is_empty() {
                "(empty)".to_string()
            } else {
                source.artifact.flatten()
            },
            target.artifact.flatten()
        );
        let reply = self.chat(PSEUDO_SYSTEM, user)?;
        if reply.trim().is_empty() {
            return Err(Error::backend("self-instruction reply was empty"));
        }
        Ok(reply.trim().to_string())
    }
}

// --- remote embedder ----------------------------------------------------------

#[derive(Debug, Clone)]
pub struct RemoteEmbedderConfig {
    pub endpoint: String,
    pub model: String,
    pub token_env: String,
    pub dimension: usize,
    pub timeout: Duration,
    pub retries: u32,
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    model: &'a str,
    input: &'a str,
}

#[derive(Deserialize)]
struct EmbedReply {
    data: Vec<EmbedDatum>,
}

#[derive(Deserialize)]
struct EmbedDatum {
    embedding: Vec<f64>,
}

/// Extracts and unit-normalizes the first embedding of a response body.
pub fn parse_embedding_reply(body: &str, dimension: usize) -> Result<Vec<f64>> {
    let reply: EmbedReply = serde_json::from_str(body)
        .map_err(|e| Error::backend(format!("malformed embedding response: {e}")))?;
    let mut vector = reply
        .data
        .into_iter()
        .next()
        .map(|d| d.embedding)
        .ok_or_else(|| Error::backend("embedding response carried no data"))?;
    if vector.len() != dimension {
        return Err(Error::backend(format!(
            "embedding dimension {} does not match configured {}",
            vector.len(),
            dimension
        )));
    }
    let norm = vector.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::backend("embedding response was the zero vector"));
    }
    for x in &mut vector {
        *x /= norm;
    }
    Ok(vector)
}

pub struct RemoteEmbedder {
    config: RemoteEmbedderConfig,
}

impl RemoteEmbedder {
    pub fn new(config: RemoteEmbedderConfig) -> Self {
        Self { config }
    }
}

impl Embedder for RemoteEmbedder {
    fn dimension(&self) -> usize {
        self.config.dimension
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>> {
        if text.trim().is_empty() {
            return Err(Error::InvalidArgument("cannot embed empty text".into()));
        }
        let token = bearer_token(&self.config.token_env)?;
        let request = EmbedRequest {
            model: &self.config.model,
            input: text,
        };
        let body = post_json(
            &self.config.endpoint,
            &token,
            self.config.timeout,
            self.config.retries,
            &request,
        )?;
        parse_embedding_reply(&body, self.config.dimension)
    }
}
