//! Workspace state: project files discovered under the root, in-memory
//! overlays for open buffers, and the analysis results derived from the
//! effective text. The version counter bumps on every content change so
//! caches and proof sessions can detect staleness.

use crate::base_protocol::RpcError;
use crate::minispec::{analyze, CheckedFile};
use crate::slsp_types::{Diagnostic, DocumentUri};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

pub struct FileEntry {
    /// Last text read from disk; `None` for purely in-memory documents.
    disk_text: Option<String>,
    /// Open-buffer text; takes precedence over `disk_text`.
    overlay: Option<String>,
    pub checked: CheckedFile,
}

impl FileEntry {
    fn new(disk_text: Option<String>, overlay: Option<String>) -> Self {
        let text = overlay.as_deref().or(disk_text.as_deref()).unwrap_or_default();
        let checked = analyze(text);
        FileEntry { disk_text, overlay, checked }
    }

    /// Effective text: the overlay if present, else the disk snapshot.
    pub fn text(&self) -> &str {
        self.overlay.as_deref().or(self.disk_text.as_deref()).unwrap_or_default()
    }

    fn reanalyze(&mut self) {
        self.checked = analyze(&self.overlay.clone().or_else(|| self.disk_text.clone()).unwrap_or_default());
    }
}

#[derive(Default)]
pub struct Workspace {
    root_uri: Option<DocumentUri>,
    root_path: Option<PathBuf>,
    files: BTreeMap<DocumentUri, FileEntry>,
    version: u64,
}

impl Workspace {
    pub fn new() -> Self {
        Workspace::default()
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn root_uri(&self) -> Option<&DocumentUri> {
        self.root_uri.as_ref()
    }

    /// Point the workspace at a root folder and scan it for `.ms` files.
    pub fn set_root(&mut self, uri: DocumentUri) -> Result<(), RpcError> {
        let path = uri
            .to_path()
            .map_err(|e| RpcError::invalid_params(format!("rootUri: {e}")))?;
        if !path.is_dir() {
            return Err(RpcError::invalid_params(format!(
                "rootUri is not a directory: {}",
                path.display()
            )));
        }
        self.files.clear();
        for entry in walkdir::WalkDir::new(&path)
            .sort_by_file_name()
            .into_iter()
            .filter_map(Result::ok)
        {
            if !entry.file_type().is_file()
                || entry.path().extension().and_then(|e| e.to_str()) != Some("ms")
            {
                continue;
            }
            let Ok(text) = fs::read_to_string(entry.path()) else {
                continue;
            };
            let Ok(file_uri) = DocumentUri::from_path(entry.path()) else {
                continue;
            };
            self.files.insert(file_uri, FileEntry::new(Some(text), None));
        }
        self.root_path = Some(path);
        self.root_uri = Some(uri);
        self.version += 1;
        Ok(())
    }

    /// Open a buffer: its text now shadows the disk content.
    pub fn open(&mut self, uri: DocumentUri, text: String) {
        match self.files.get_mut(&uri) {
            Some(entry) => {
                entry.overlay = Some(text);
                entry.reanalyze();
            }
            None => {
                self.files.insert(uri, FileEntry::new(None, Some(text)));
            }
        }
        self.version += 1;
    }

    /// Replace a buffer's full text. Unknown uris are treated as opens so a
    /// notification never fails.
    pub fn change(&mut self, uri: DocumentUri, text: String) {
        self.open(uri, text);
    }

    /// Close a buffer: the disk snapshot becomes authoritative again; purely
    /// in-memory documents leave the project.
    pub fn close(&mut self, uri: &DocumentUri) {
        if let Some(entry) = self.files.get_mut(uri) {
            if entry.disk_text.is_some() {
                entry.overlay = None;
                entry.reanalyze();
            } else {
                self.files.remove(uri);
            }
            self.version += 1;
        }
    }

    pub fn contains(&self, uri: &DocumentUri) -> bool {
        self.files.contains_key(uri)
    }

    pub fn get(&self, uri: &DocumentUri) -> Option<&FileEntry> {
        self.files.get(uri)
    }

    /// All files in lexicographic uri order.
    pub fn iter(&self) -> impl Iterator<Item = (&DocumentUri, &FileEntry)> {
        self.files.iter()
    }

    /// Every file parses and type-checks without diagnostics.
    pub fn is_clean(&self) -> bool {
        self.files.values().all(|f| f.checked.is_clean())
    }

    /// Every file at least parses (modules available for translation).
    pub fn parses(&self) -> bool {
        self.files.values().all(|f| f.checked.module.is_some())
    }

    /// One-line summary of the first diagnostic, for error messages.
    pub fn first_error(&self) -> Option<String> {
        self.files.iter().find_map(|(uri, f)| {
            f.checked
                .diagnostics
                .first()
                .map(|d| format!("{}: {}", uri.as_str(), d.message))
        })
    }

    pub fn diagnostics_for(&self, uri: &DocumentUri) -> Vec<Diagnostic> {
        self.files
            .get(uri)
            .map(|f| f.checked.diagnostics.clone())
            .unwrap_or_default()
    }

    fn is_inside_root(&self, path: &Path) -> bool {
        self.root_path.as_deref().is_some_and(|root| path.starts_with(root))
    }

    /// Resolve a file-or-folder uri to the project files it covers, in
    /// lexicographic order. A uri outside the root, or a file uri that names
    /// no project document, is InvalidParams.
    pub fn select_scope(&self, uri: &DocumentUri) -> Result<Vec<&DocumentUri>, RpcError> {
        if Some(uri) == self.root_uri.as_ref() {
            return Ok(self.files.keys().collect());
        }
        let path = uri
            .to_path()
            .map_err(|e| RpcError::invalid_params(format!("uri: {e}")))?;
        if !self.is_inside_root(&path) {
            return Err(RpcError::invalid_params(format!(
                "uri is outside the project root: {}",
                uri.as_str()
            )));
        }
        if self.files.contains_key(uri) {
            return Ok(vec![self.files.get_key_value(uri).unwrap().0]);
        }
        if path.is_dir() {
            let covered: Vec<&DocumentUri> = self
                .files
                .iter()
                .filter(|(u, _)| {
                    u.to_path().is_ok_and(|p| p.starts_with(&path))
                })
                .map(|(u, _)| u)
                .collect();
            return Ok(covered);
        }
        Err(RpcError::invalid_params(format!(
            "document is not part of the project: {}",
            uri.as_str()
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, text: &str) -> DocumentUri {
        let path = dir.join(name);
        fs::write(&path, text).unwrap();
        DocumentUri::from_path(&path).unwrap()
    }

    fn rooted(dir: &Path) -> Workspace {
        let mut ws = Workspace::new();
        ws.set_root(DocumentUri::from_path(dir).unwrap()).unwrap();
        ws
    }

    #[test]
    fn scan_discovers_nested_ms_files() {
        let dir = tempfile::tempdir().unwrap();
        let a = write(dir.path(), "a.ms", "module A f(x: int): int == x end");
        fs::create_dir(dir.path().join("sub")).unwrap();
        let b = write(&dir.path().join("sub"), "b.ms", "module B g(): int == 1 end");
        write(dir.path(), "notes.txt", "not a spec");
        let ws = rooted(dir.path());
        assert!(ws.contains(&a));
        assert!(ws.contains(&b));
        assert_eq!(ws.iter().count(), 2);
        assert!(ws.is_clean());
    }

    #[test]
    fn overlay_shadows_disk_until_close() {
        let dir = tempfile::tempdir().unwrap();
        let uri = write(dir.path(), "a.ms", "module A f(x: int): int == x end");
        let mut ws = rooted(dir.path());
        let v0 = ws.version();

        ws.open(uri.clone(), "module A f(x: int): int == x + 1 end".into());
        assert_eq!(ws.version(), v0 + 1);
        assert!(ws.get(&uri).unwrap().text().contains("x + 1"));

        ws.change(uri.clone(), "module A f(x: int): int ==".into());
        assert_eq!(ws.version(), v0 + 2);
        assert!(!ws.is_clean());

        ws.close(&uri);
        assert_eq!(ws.version(), v0 + 3);
        assert!(ws.get(&uri).unwrap().text().contains("== x end"));
        assert!(ws.is_clean());
    }

    #[test]
    fn effective_text_is_the_last_change() {
        let dir = tempfile::tempdir().unwrap();
        let uri = write(dir.path(), "a.ms", "module A f(): int == 0 end");
        let mut ws = rooted(dir.path());
        for n in 1..=5 {
            ws.change(uri.clone(), format!("module A f(): int == {n} end"));
        }
        assert!(ws.get(&uri).unwrap().text().contains("== 5 end"));
    }

    #[test]
    fn close_drops_purely_in_memory_documents() {
        let dir = tempfile::tempdir().unwrap();
        let mut ws = rooted(dir.path());
        let uri = DocumentUri::from_path(&dir.path().join("scratch.ms")).unwrap();
        ws.open(uri.clone(), "module S f(): int == 1 end".into());
        assert!(ws.contains(&uri));
        ws.close(&uri);
        assert!(!ws.contains(&uri));
    }

    #[test]
    fn scope_selection() {
        let dir = tempfile::tempdir().unwrap();
        let a = write(dir.path(), "a.ms", "module A f(): int == 1 end");
        fs::create_dir(dir.path().join("sub")).unwrap();
        let b = write(&dir.path().join("sub"), "b.ms", "module B g(): int == 2 end");
        let ws = rooted(dir.path());

        let root = DocumentUri::from_path(dir.path()).unwrap();
        assert_eq!(ws.select_scope(&root).unwrap().len(), 2);
        assert_eq!(ws.select_scope(&a).unwrap(), vec![&a]);
        let sub = DocumentUri::from_path(&dir.path().join("sub")).unwrap();
        assert_eq!(ws.select_scope(&sub).unwrap(), vec![&b]);

        let foreign = DocumentUri::new("file:///elsewhere/x.ms");
        let err = ws.select_scope(&foreign).unwrap_err();
        assert_eq!(err.code, crate::base_protocol::codes::INVALID_PARAMS);

        let missing = DocumentUri::from_path(&dir.path().join("no.ms")).unwrap();
        assert!(ws.select_scope(&missing).is_err());
    }

    #[test]
    fn first_error_names_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let uri = write(dir.path(), "bad.ms", "module A f(): int == end");
        let ws = rooted(dir.path());
        assert!(!ws.is_clean());
        let summary = ws.first_error().unwrap();
        assert!(summary.contains(uri.as_str()));
    }
}
