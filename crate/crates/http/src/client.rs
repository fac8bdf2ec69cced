use asqa_core::generation::{BackendError, GenerationRequest, GenerationResponse, GeneratorBackend};
use asqa_core::metrics::{oracle_request_id, OracleError, OracleRequest, OracleResponse, QaOracle};
use reqwest::blocking::Client;
use serde::de::DeserializeOwned;
use serde::Serialize;
use std::time::Duration;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClientConfig {
    pub timeout: Duration,
}

impl Default for ClientConfig {
    fn default() -> Self {
        Self {
            timeout: Duration::from_secs(60),
        }
    }
}

enum CallError {
    Transport(String),
    Protocol(String),
}

fn post_json<Req: Serialize, Resp: DeserializeOwned>(
    client: &Client,
    url: &str,
    body: &Req,
) -> Result<Resp, CallError> {
    let resp = client
        .post(url)
        .json(body)
        .send()
        .map_err(|e| CallError::Transport(e.to_string()))?;
    let status = resp.status();
    if status.is_server_error() || status.as_u16() == 429 {
        return Err(CallError::Transport(format!("{url} answered {status}")));
    }
    if !status.is_success() {
        let text = resp.text().unwrap_or_default();
        return Err(CallError::Protocol(format!("{url} answered {status}: {text}")));
    }
    resp.json::<Resp>()
        .map_err(|e| CallError::Protocol(format!("{url}: {e}")))
}

fn build_client(config: ClientConfig) -> Result<Client, String> {
    Client::builder()
        .timeout(config.timeout)
        .build()
        .map_err(|e| e.to_string())
}

/// Generator backend reached over HTTP: `POST` a [`GenerationRequest`],
/// expect a [`GenerationResponse`] echoing the request id.
pub struct HttpGenerator {
    client: Client,
    url: String,
}

impl HttpGenerator {
    pub fn new(url: impl Into<String>, config: ClientConfig) -> Result<Self, BackendError> {
        Ok(Self {
            client: build_client(config).map_err(BackendError::Protocol)?,
            url: url.into(),
        })
    }
}

impl GeneratorBackend for HttpGenerator {
    fn generate(&self, request: &GenerationRequest) -> Result<String, BackendError> {
        let resp: GenerationResponse = post_json(&self.client, &self.url, request).map_err(|e| match e {
            CallError::Transport(message) => BackendError::Transport { attempts: 1, message },
            CallError::Protocol(m) => BackendError::Protocol(m),
        })?;
        if resp.request_id != request.request_id {
            return Err(BackendError::Protocol(format!(
                "request id mismatch: sent '{}', got '{}'",
                request.request_id, resp.request_id
            )));
        }
        Ok(resp.text)
    }

    fn name(&self) -> String {
        self.url.clone()
    }
}

/// Reading-comprehension oracle reached over HTTP: `POST` an
/// [`OracleRequest`], expect an [`OracleResponse`].
pub struct HttpOracle {
    client: Client,
    url: String,
}

impl HttpOracle {
    pub fn new(url: impl Into<String>, config: ClientConfig) -> Result<Self, OracleError> {
        Ok(Self {
            client: build_client(config).map_err(OracleError::Protocol)?,
            url: url.into(),
        })
    }
}

impl QaOracle for HttpOracle {
    fn answer(&self, context: &str, question: &str) -> Result<String, OracleError> {
        let request = OracleRequest {
            request_id: oracle_request_id(context, question),
            question: question.to_string(),
            context: context.to_string(),
        };
        let resp: OracleResponse = post_json(&self.client, &self.url, &request).map_err(|e| match e {
            CallError::Transport(message) => OracleError::Transport { attempts: 1, message },
            CallError::Protocol(m) => OracleError::Protocol(m),
        })?;
        if resp.request_id != request.request_id {
            return Err(OracleError::Protocol(format!(
                "request id mismatch: sent '{}', got '{}'",
                request.request_id, resp.request_id
            )));
        }
        Ok(resp.answer)
    }

    fn name(&self) -> String {
        self.url.clone()
    }
}
