//! SPARQL endpoint client for roster exports, with offline fixture replay.

use std::fs;
use std::path::Path;
use std::time::Duration;

use log::warn;
use serde_json::Value;

use super::write_roster_export;
use crate::{Error, Result};

/// One result row in export column order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RosterRow {
    pub name: String,
    pub dob: String,
    pub ethnic_label: String,
    pub occupation: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FetchSource {
    Endpoint,
    Fixture,
}

#[derive(Debug)]
pub struct FetchOutcome {
    pub source: FetchSource,
    /// Endpoint failure that triggered a fixture fallback.
    pub fallback_reason: Option<Error>,
}

fn binding<'a>(row: &'a Value, keys: &[&str]) -> &'a str {
    keys.iter()
        .find_map(|k| row.get(*k).and_then(|b| b.get("value")).and_then(Value::as_str))
        .unwrap_or("")
}

/// Convert a SPARQL JSON results document into export rows. Accepts the
/// variable names of the person query (`itemLabel`, `dob`, `ethnicLabel`,
/// `occupationLabel`) as well as plain `name` / `occupation`.
pub fn sparql_json_to_rows(body: &str) -> Result<Vec<RosterRow>> {
    let doc: Value = serde_json::from_str(body)
        .map_err(|e| Error::QueryRejected(format!("unreadable results document: {e}")))?;
    let bindings = doc
        .pointer("/results/bindings")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::QueryRejected("results document has no bindings".into()))?;
    Ok(bindings
        .iter()
        .map(|row| RosterRow {
            name: binding(row, &["itemLabel", "name"]).to_string(),
            dob: binding(row, &["dob"]).to_string(),
            ethnic_label: binding(row, &["ethnicLabel"]).to_string(),
            occupation: binding(row, &["occupationLabel", "occupation"]).to_string(),
        })
        .collect())
}

fn query_endpoint(endpoint: &str, query: &str, timeout: Duration) -> Result<Vec<RosterRow>> {
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(timeout))
        .http_status_as_error(false)
        .build()
        .into();
    let mut resp = agent
        .get(endpoint)
        .query("query", query)
        .query("format", "json")
        .header("Accept", "application/sparql-results+json")
        .header("User-Agent", concat!("portrayal/", env!("CARGO_PKG_VERSION")))
        .call()
        .map_err(|e| Error::EndpointUnreachable(e.to_string()))?;
    let status = resp.status().as_u16();
    match status {
        200..=299 => {}
        400 | 414 => return Err(Error::QueryRejected(format!("HTTP {status}"))),
        _ => return Err(Error::EndpointUnreachable(format!("HTTP {status}"))),
    }
    let body = resp
        .body_mut()
        .with_config()
        .limit(1 << 30)
        .read_to_string()
        .map_err(|e| Error::EndpointUnreachable(e.to_string()))?;
    sparql_json_to_rows(&body)
}

/// Fetch the roster export into `out`.
///
/// With no endpoint the fixture is copied byte for byte. When the endpoint
/// fails (unreachable, throttled, query rejected) the fixture is used if
/// given, otherwise the endpoint error is returned.
pub fn fetch_roster(
    endpoint: Option<&str>,
    query: &str,
    fixture: Option<&Path>,
    out: &Path,
    timeout: Duration,
) -> Result<FetchOutcome> {
    let replay = |fixture: &Path| -> Result<()> {
        let bytes = fs::read(fixture).map_err(|e| Error::io(fixture, e))?;
        fs::write(out, bytes).map_err(|e| Error::io(out, e))
    };
    let Some(endpoint) = endpoint else {
        let fixture = fixture.ok_or_else(|| {
            Error::Config("offline roster fetch needs a fixture path".into())
        })?;
        replay(fixture)?;
        return Ok(FetchOutcome {
            source: FetchSource::Fixture,
            fallback_reason: None,
        });
    };
    match query_endpoint(endpoint, query, timeout) {
        Ok(rows) => {
            write_roster_export(out, &rows)?;
            Ok(FetchOutcome {
                source: FetchSource::Endpoint,
                fallback_reason: None,
            })
        }
        Err(err @ (Error::EndpointUnreachable(_) | Error::QueryRejected(_))) => match fixture {
            Some(fixture) => {
                warn!("roster endpoint failed ({err}); replaying fixture {}", fixture.display());
                replay(fixture)?;
                Ok(FetchOutcome {
                    source: FetchSource::Fixture,
                    fallback_reason: Some(err),
                })
            }
            None => Err(err),
        },
        Err(other) => Err(other),
    }
}
