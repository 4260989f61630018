//! Chat-completion client.
//!
//! Sends `{"model": …, "messages": [{"role": "user", "content": prompt}]}` to
//! `<base_url>/chat/completions` with a bearer token read from an environment
//! variable, and returns `choices[0].message.content`.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::Deserialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HttpConfig {
    pub base_url: String,
    pub model: String,
    #[serde(default = "default_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    /// Extra attempts after a connection failure, timeout or 5xx reply.
    #[serde(default = "default_retries")]
    pub retries: u32,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
}

fn default_key_env() -> String {
    "VEIL_API_KEY".into()
}

fn default_timeout() -> u64 {
    30
}

fn default_retries() -> u32 {
    2
}

fn default_in_flight() -> usize {
    4
}

/// Counting semaphore bounding concurrent requests.
#[derive(Debug)]
struct Slots {
    free: Mutex<usize>,
    released: Condvar,
}

impl Slots {
    fn new(n: usize) -> Self {
        Self {
            free: Mutex::new(n.max(1)),
            released: Condvar::new(),
        }
    }

    fn acquire(&self) -> SlotGuard<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.released.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        SlotGuard(self)
    }
}

struct SlotGuard<'a>(&'a Slots);

impl Drop for SlotGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.released.notify_one();
    }
}

#[derive(Debug)]
pub struct HttpClient {
    config: HttpConfig,
    agent: ureq::Agent,
    slots: Slots,
}

enum Attempt {
    Retry(Error),
    Fail(Error),
}

impl HttpClient {
    pub fn new(config: HttpConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        let slots = Slots::new(config.max_in_flight);
        Self {
            config,
            agent,
            slots,
        }
    }

    pub fn config(&self) -> &HttpConfig {
        &self.config
    }

    pub fn complete(&self, prompt: &str) -> Result<String> {
        let key = std::env::var(&self.config.api_key_env)
            .ok()
            .filter(|k| !k.is_empty())
            .ok_or_else(|| Error::AuthMissing(self.config.api_key_env.clone()))?;
        let url = format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'));
        let body = json!({
            "model": self.config.model,
            "messages": [{ "role": "user", "content": prompt }],
        });

        let _slot = self.slots.acquire();
        let mut last = None;
        for _ in 0..=self.config.retries {
            match self.attempt(&url, &key, &body) {
                Ok(text) => return Ok(text),
                Err(Attempt::Fail(e)) => return Err(e),
                Err(Attempt::Retry(e)) => last = Some(e),
            }
        }
        Err(last.expect("at least one attempt"))
    }

    fn attempt(&self, url: &str, key: &str, body: &Value) -> Result<String, Attempt> {
        let response = self
            .agent
            .post(url)
            .header("Authorization", &format!("Bearer {key}"))
            .send_json(body);
        let mut response = match response {
            Ok(r) => r,
            Err(ureq::Error::Timeout(_)) => {
                return Err(Attempt::Retry(Error::Timeout(self.config.timeout_secs)))
            }
            Err(e) => return Err(Attempt::Retry(Error::EndpointUnreachable(e.to_string()))),
        };
        let status = response.status().as_u16();
        if status >= 500 {
            return Err(Attempt::Retry(Error::EndpointUnreachable(format!("HTTP {status}"))));
        }
        if status == 401 || status == 403 {
            return Err(Attempt::Fail(Error::AuthMissing(format!(
                "{} (rejected with HTTP {status})",
                self.config.api_key_env
            ))));
        }
        if status >= 400 {
            return Err(Attempt::Fail(Error::BadReply(format!("HTTP {status}"))));
        }
        let value: Value = match response.body_mut().read_json() {
            Ok(v) => v,
            Err(ureq::Error::Timeout(_)) => {
                return Err(Attempt::Retry(Error::Timeout(self.config.timeout_secs)))
            }
            Err(e) => return Err(Attempt::Fail(Error::BadReply(e.to_string()))),
        };
        value
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| Attempt::Fail(Error::BadReply("no choices[0].message.content".into())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;
    use std::thread;

    /// Serves `replies` in order, one per connection, and hands back each
    /// request body.
    fn serve(replies: Vec<(u16, String)>) -> (String, thread::JoinHandle<Vec<String>>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let handle = thread::spawn(move || {
            let mut bodies = Vec::new();
            for (status, reply) in replies {
                let (stream, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(stream);
                let mut len = 0;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    if line == "\r\n" || line.is_empty() {
                        break;
                    }
                    let lower = line.to_ascii_lowercase();
                    if let Some(v) = lower.strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                }
                let mut body = vec![0; len];
                reader.read_exact(&mut body).unwrap();
                bodies.push(String::from_utf8(body).unwrap());
                let mut stream = reader.into_inner();
                write!(
                    stream,
                    "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{reply}",
                    reply.len()
                )
                .unwrap();
            }
            bodies
        });
        (format!("http://{addr}/v1"), handle)
    }

    static ENV_SEQ: AtomicUsize = AtomicUsize::new(0);

    fn config(base_url: String, with_key: bool) -> HttpConfig {
        let var = format!("VEIL_TEST_KEY_{}", ENV_SEQ.fetch_add(1, Ordering::SeqCst));
        if with_key {
            // each test owns a distinct variable name
            std::env::set_var(&var, "secret");
        }
        HttpConfig {
            base_url,
            model: "test-model".into(),
            api_key_env: var,
            timeout_secs: 5,
            retries: 1,
            max_in_flight: 2,
        }
    }

    const OK: &str = r#"{"choices":[{"message":{"role":"assistant","content":"Rose is a plant."}}]}"#;

    #[test]
    fn posts_chat_completion() {
        let (url, server) = serve(vec![(200, OK.into())]);
        let client = HttpClient::new(config(url, true));
        assert_eq!(client.complete("What is Mango?").unwrap(), "Rose is a plant.");
        let bodies = server.join().unwrap();
        let sent: Value = serde_json::from_str(&bodies[0]).unwrap();
        assert_eq!(sent["model"], "test-model");
        assert_eq!(sent["messages"][0]["content"], "What is Mango?");
    }

    #[test]
    fn retries_server_errors() {
        let (url, server) = serve(vec![(503, "{}".into()), (200, OK.into())]);
        let client = HttpClient::new(config(url, true));
        assert_eq!(client.complete("q").unwrap(), "Rose is a plant.");
        assert_eq!(server.join().unwrap().len(), 2);
    }

    #[test]
    fn missing_key_fails_before_sending() {
        let client = HttpClient::new(config("http://127.0.0.1:9".into(), false));
        let err = client.complete("q").unwrap_err();
        assert!(matches!(err, Error::AuthMissing(_)));
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn unreachable_endpoint() {
        let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
        let client = HttpClient::new(config(format!("http://127.0.0.1:{port}"), true));
        assert!(matches!(client.complete("q"), Err(Error::EndpointUnreachable(_))));
    }

    #[test]
    fn slow_endpoint_times_out() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}", listener.local_addr().unwrap());
        let hold = thread::spawn(move || {
            let conns: Vec<_> = (0..2).map(|_| listener.accept().unwrap()).collect();
            thread::sleep(Duration::from_millis(2500));
            drop(conns);
        });
        let mut cfg = config(url, true);
        cfg.timeout_secs = 1;
        let client = HttpClient::new(cfg);
        assert!(matches!(client.complete("q"), Err(Error::Timeout(1))));
        hold.join().unwrap();
    }

    #[test]
    fn in_flight_bound_holds() {
        let slots = Arc::new(Slots::new(2));
        let active = Arc::new(AtomicUsize::new(0));
        let peak = Arc::new(AtomicUsize::new(0));
        let workers: Vec<_> = (0..6)
            .map(|_| {
                let (slots, active, peak) = (slots.clone(), active.clone(), peak.clone());
                thread::spawn(move || {
                    let _g = slots.acquire();
                    let now = active.fetch_add(1, Ordering::SeqCst) + 1;
                    peak.fetch_max(now, Ordering::SeqCst);
                    thread::sleep(Duration::from_millis(20));
                    active.fetch_sub(1, Ordering::SeqCst);
                })
            })
            .collect();
        for w in workers {
            w.join().unwrap();
        }
        assert!(peak.load(Ordering::SeqCst) <= 2);
    }
}
