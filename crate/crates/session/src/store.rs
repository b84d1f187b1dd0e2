//! One JSON file per session, written atomically, with per-session locks.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, MutexGuard};

use crate::{Session, SessionConfig, SessionError};

type Slot = Arc<Mutex<Session>>;

#[derive(Debug)]
pub struct SessionStore {
    dir: PathBuf,
    open: Mutex<HashMap<String, Slot>>,
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|e| e.into_inner())
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

impl SessionStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, SessionError> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir, open: Mutex::new(HashMap::new()) })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.json"))
    }

    fn persist(&self, session: &Session) -> Result<(), SessionError> {
        let path = self.path(session.id());
        let tmp = path.with_extension("json.tmp");
        let bytes = serde_json::to_vec(session).map_err(|e| SessionError::Internal(e.to_string()))?;
        let mut file = fs::File::create(&tmp)?;
        file.write_all(&bytes)?;
        file.sync_all()?;
        fs::rename(&tmp, &path)?;
        Ok(())
    }

    fn slot(&self, id: &str) -> Result<Slot, SessionError> {
        if !valid_id(id) {
            return Err(SessionError::NotFound(id.to_string()));
        }
        let mut open = lock(&self.open);
        if let Some(slot) = open.get(id) {
            return Ok(slot.clone());
        }
        let bytes = match fs::read(self.path(id)) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(SessionError::NotFound(id.to_string())),
            Err(e) => return Err(e.into()),
        };
        let session: Session = serde_json::from_slice(&bytes)
            .map_err(|e| SessionError::Storage(format!("corrupt session file {id}: {e}")))?;
        let slot = Arc::new(Mutex::new(session));
        open.insert(id.to_string(), slot.clone());
        Ok(slot)
    }

    pub fn create(&self, config: SessionConfig) -> Result<Session, SessionError> {
        if !valid_id(&config.session_id) {
            return Err(SessionError::InvalidConfig(format!("bad session id {:?}", config.session_id)));
        }
        let session = Session::create(config)?;
        let mut open = lock(&self.open);
        if open.contains_key(session.id()) || self.path(session.id()).exists() {
            return Err(SessionError::InvalidConfig(format!("session {} already exists", session.id())));
        }
        self.persist(&session)?;
        open.insert(session.id().to_string(), Arc::new(Mutex::new(session.clone())));
        Ok(session)
    }

    pub fn get(&self, id: &str) -> Result<Session, SessionError> {
        let slot = self.slot(id)?;
        let session = lock(&slot).clone();
        Ok(session)
    }

    /// Applies `f` to a copy of the session; the copy is persisted and
    /// committed only when `f` succeeds. Calls on one session are serialized.
    pub fn update<R>(&self, id: &str, f: impl FnOnce(&mut Session) -> Result<R, SessionError>) -> Result<(R, Session), SessionError> {
        let slot = self.slot(id)?;
        let mut guard = lock(&slot);
        let mut next = guard.clone();
        let out = f(&mut next)?;
        self.persist(&next)?;
        *guard = next;
        Ok((out, guard.clone()))
    }
}
