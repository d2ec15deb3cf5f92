//! Bearer-token sessions. Each token names an annotator or an administrator;
//! adequate for a lab deployment, not for the open internet.

use std::collections::HashMap;

use axum::extract::FromRequestParts;
use axum::http::request::Parts;
use serde::{Deserialize, Serialize};

use crate::api::{ApiError, AppState};
use crate::config::TokenEntry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Reviewer,
    Admin,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Session {
    pub annotator_id: Option<String>,
    pub role: Role,
}

impl Session {
    pub fn is_admin(&self) -> bool {
        self.role == Role::Admin
    }

    /// Whether this session may act as `annotator_id`.
    pub fn may_act_as(&self, annotator_id: &str) -> bool {
        self.is_admin() || self.annotator_id.as_deref() == Some(annotator_id)
    }
}

pub trait Authenticator: Send + Sync {
    fn authenticate(&self, token: &str) -> Option<Session>;
}

#[derive(Debug, Default)]
pub struct TokenAuth {
    tokens: HashMap<String, Session>,
}

impl TokenAuth {
    pub fn new(entries: &[TokenEntry]) -> Self {
        TokenAuth {
            tokens: entries
                .iter()
                .map(|e| (e.token.clone(), Session { annotator_id: e.annotator_id.clone(), role: e.role }))
                .collect(),
        }
    }
}

impl Authenticator for TokenAuth {
    fn authenticate(&self, token: &str) -> Option<Session> {
        self.tokens.get(token).cloned()
    }
}

impl FromRequestParts<AppState> for Session {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &AppState) -> Result<Self, Self::Rejection> {
        let header = parts
            .headers
            .get(axum::http::header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .ok_or_else(|| ApiError::unauthorized("missing Authorization header"))?;
        let token = header.strip_prefix("Bearer ").ok_or_else(|| ApiError::unauthorized("expected a Bearer token"))?;
        state.auth.authenticate(token.trim()).ok_or_else(|| ApiError::unauthorized("unknown token"))
    }
}
