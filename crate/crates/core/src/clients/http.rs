use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::Duration;

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use super::ClientError;

/// Caps the number of concurrent requests issued through one backend.
#[derive(Debug)]
pub struct InFlightLimiter {
    max: usize,
    current: Mutex<usize>,
    freed: Condvar,
}

pub struct InFlightPermit<'a> {
    limiter: &'a InFlightLimiter,
}

impl InFlightLimiter {
    pub fn new(max: usize) -> Self {
        Self {
            max: max.max(1),
            current: Mutex::new(0),
            freed: Condvar::new(),
        }
    }

    pub fn acquire(&self) -> InFlightPermit<'_> {
        let mut n = self.current.lock().expect("limiter lock poisoned");
        while *n >= self.max {
            n = self.freed.wait(n).expect("limiter lock poisoned");
        }
        *n += 1;
        InFlightPermit { limiter: self }
    }

    pub fn in_flight(&self) -> usize {
        *self.current.lock().expect("limiter lock poisoned")
    }
}

impl Drop for InFlightPermit<'_> {
    fn drop(&mut self) {
        let mut n = self.limiter.current.lock().expect("limiter lock poisoned");
        *n -= 1;
        self.limiter.freed.notify_one();
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HttpSettings {
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    /// Extra attempts after a transport failure or 5xx/429 answer.
    #[serde(default = "default_retries")]
    pub retries: u32,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
    #[serde(default = "default_backoff")]
    pub backoff_ms: u64,
}

fn default_timeout() -> f64 {
    30.0
}

fn default_retries() -> u32 {
    2
}

fn default_in_flight() -> usize {
    4
}

fn default_backoff() -> u64 {
    250
}

impl Default for HttpSettings {
    fn default() -> Self {
        Self {
            timeout_secs: default_timeout(),
            retries: default_retries(),
            max_in_flight: default_in_flight(),
            backoff_ms: default_backoff(),
        }
    }
}

/// Blocking JSON-over-HTTP with retries and an in-flight cap.
pub struct HttpTransport {
    agent: ureq::Agent,
    limiter: InFlightLimiter,
    settings: HttpSettings,
}

pub enum Method<'a> {
    Get(&'a [(&'a str, &'a str)]),
    Post(&'a serde_json::Value),
}

impl HttpTransport {
    pub fn new(settings: HttpSettings) -> Self {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(settings.timeout_secs.max(0.001))))
            .http_status_as_error(false)
            .build();
        Self {
            agent: config.into(),
            limiter: InFlightLimiter::new(settings.max_in_flight),
            settings,
        }
    }

    pub fn limiter(&self) -> &InFlightLimiter {
        &self.limiter
    }

    /// Returns the status code and body of the first non-retryable answer.
    pub fn send(
        &self,
        url: &str,
        method: Method<'_>,
        bearer: Option<&str>,
    ) -> Result<(u16, String), ClientError> {
        let mut attempt = 0;
        loop {
            let outcome = {
                let _permit = self.limiter.acquire();
                self.send_once(url, &method, bearer)
            };
            let retryable = match &outcome {
                Ok((status, _)) => *status == 429 || *status >= 500,
                Err(_) => true,
            };
            if !retryable || attempt >= self.settings.retries {
                return match outcome {
                    Ok((status, _)) if status == 429 || status >= 500 => {
                        Err(ClientError::Transport {
                            url: url.to_string(),
                            message: format!("HTTP {status} after {} attempts", attempt + 1),
                        })
                    }
                    other => other,
                };
            }
            attempt += 1;
            warn!("retrying {url} (attempt {attempt})");
            thread::sleep(Duration::from_millis(self.settings.backoff_ms * u64::from(attempt)));
        }
    }

    /// Streams a binary resource to `dest`.
    pub fn download(&self, url: &str, dest: &std::path::Path) -> Result<(), ClientError> {
        let _permit = self.limiter.acquire();
        let err = |message: String| ClientError::Transport {
            url: url.to_string(),
            message,
        };
        let response = self.agent.get(url).call().map_err(|e| err(e.to_string()))?;
        let status = response.status().as_u16();
        if !(200..300).contains(&status) {
            return Err(ClientError::Status {
                url: url.to_string(),
                status,
            });
        }
        let mut reader = response.into_body().into_reader();
        let mut file = std::fs::File::create(dest).map_err(|e| err(e.to_string()))?;
        std::io::copy(&mut reader, &mut file).map_err(|e| err(e.to_string()))?;
        Ok(())
    }

    fn send_once(
        &self,
        url: &str,
        method: &Method<'_>,
        bearer: Option<&str>,
    ) -> Result<(u16, String), ClientError> {
        let transport = |e: ureq::Error| ClientError::Transport {
            url: url.to_string(),
            message: e.to_string(),
        };
        let auth = bearer.map(|t| format!("Bearer {t}"));
        let response = match method {
            Method::Get(query) => {
                let mut req = self.agent.get(url);
                for (k, v) in query.iter() {
                    req = req.query(*k, *v);
                }
                if let Some(a) = &auth {
                    req = req.header("Authorization", a);
                }
                req.call()
            }
            Method::Post(body) => {
                let mut req = self.agent.post(url);
                if let Some(a) = &auth {
                    req = req.header("Authorization", a);
                }
                req.send_json(body)
            }
        }
        .map_err(transport)?;
        let status = response.status().as_u16();
        let body = response
            .into_body()
            .read_to_string()
            .map_err(transport)?;
        debug!("{url} -> {status} ({} bytes)", body.len());
        Ok((status, body))
    }
}
