//! Session snapshots, one JSON file per session.
//!
//! Files are replaced by writing a temporary sibling and renaming it, so a
//! crash leaves either the old or the new snapshot. All snapshots are also
//! kept in memory; reads never touch the disk.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use super::session::{SessionState, SNAPSHOT_FORMAT};
use super::ServiceError;

pub struct Store {
    dir: PathBuf,
    sessions: RwLock<HashMap<String, Arc<SessionState>>>,
    /// Serializes version checks with the writes that follow them.
    write: Mutex<()>,
}

fn internal(e: impl std::fmt::Display) -> ServiceError {
    ServiceError::Internal(e.to_string())
}

impl Store {
    /// Opens `dir`, creating it if needed, and loads every snapshot in it.
    pub fn open(dir: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        let mut sessions = HashMap::new();
        for entry in fs::read_dir(dir)? {
            let path = entry?.path();
            if path.extension().is_none_or(|x| x != "json") {
                continue;
            }
            let text = fs::read_to_string(&path)?;
            match serde_json::from_str::<SessionState>(&text) {
                Ok(s) if s.format == SNAPSHOT_FORMAT => {
                    sessions.insert(s.id.clone(), Arc::new(s));
                }
                Ok(s) => tracing::warn!(path = %path.display(), format = s.format, "skipping snapshot of unknown format"),
                Err(e) => tracing::warn!(path = %path.display(), error = %e, "skipping unreadable snapshot"),
            }
        }
        Ok(Self {
            dir: dir.to_path_buf(),
            sessions: RwLock::new(sessions),
            write: Mutex::new(()),
        })
    }

    pub fn get(&self, id: &str) -> Option<Arc<SessionState>> {
        self.sessions.read().expect("store lock").get(id).cloned()
    }

    /// All sessions, oldest first.
    pub fn list(&self) -> Vec<Arc<SessionState>> {
        let mut all: Vec<_> = self.sessions.read().expect("store lock").values().cloned().collect();
        all.sort_by(|a, b| (a.created_ms, &a.id).cmp(&(b.created_ms, &b.id)));
        all
    }

    fn persist(&self, state: &SessionState) -> Result<(), ServiceError> {
        let path = self.dir.join(format!("{}.json", state.id));
        let tmp = self.dir.join(format!("{}.json.tmp", state.id));
        let text = serde_json::to_vec_pretty(state).map_err(internal)?;
        fs::write(&tmp, text).map_err(internal)?;
        fs::rename(&tmp, &path).map_err(internal)
    }

    pub fn insert(&self, state: SessionState) -> Result<Arc<SessionState>, ServiceError> {
        let _guard = self.write.lock().expect("store lock");
        self.persist(&state)?;
        let state = Arc::new(state);
        self.sessions.write().expect("store lock").insert(state.id.clone(), state.clone());
        Ok(state)
    }

    /// Stores `next` if the session is still at version `base`.
    pub fn commit(&self, base: u64, next: SessionState) -> Result<Arc<SessionState>, ServiceError> {
        let _guard = self.write.lock().expect("store lock");
        let current = self.get(&next.id).ok_or_else(|| ServiceError::NotFound(next.id.clone()))?;
        if current.version != base {
            return Err(ServiceError::VersionConflict {
                expected: base,
                current: current.version,
            });
        }
        self.persist(&next)?;
        let next = Arc::new(next);
        self.sessions.write().expect("store lock").insert(next.id.clone(), next.clone());
        Ok(next)
    }
}

#[cfg(test)]
mod tests {
    use super::super::session::{create, CreateRequest};
    use super::*;

    fn session(id: &str) -> SessionState {
        let req = CreateRequest {
            graph: Some("undirected\na s t\n".into()),
            graph_path: None,
            source: "s".into(),
            target: "t".into(),
            budget: 1,
            prob: 0.5,
            heuristic: "h1".into(),
        };
        create(&req, id.into(), 5, 1000).unwrap().0
    }

    #[test]
    fn survives_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        store.insert(session("one")).unwrap();
        let mut next = session("one");
        next.version = 1;
        store.commit(0, next.clone()).unwrap();
        assert!(matches!(store.commit(0, next.clone()), Err(ServiceError::VersionConflict { current: 1, .. })));
        fs::write(dir.path().join("junk.json"), "{").unwrap();
        let reopened = Store::open(dir.path()).unwrap();
        assert_eq!(*reopened.get("one").unwrap(), next);
        assert_eq!(reopened.list().len(), 1);
        let names: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert!(!names.iter().any(|n| n.to_string_lossy().ends_with(".tmp")));
    }

    #[test]
    fn unknown_format_is_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = session("old");
        s.format = SNAPSHOT_FORMAT + 1;
        fs::write(dir.path().join("old.json"), serde_json::to_string(&s).unwrap()).unwrap();
        assert!(Store::open(dir.path()).unwrap().get("old").is_none());
    }
}
