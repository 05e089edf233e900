use std::fs::{self, File};
use std::io::{self, BufReader, Read, Seek, Write};
use std::path::{Path, PathBuf};

use flate2::read::MultiGzDecoder;
use sha2::{Digest, Sha256};

use super::manifest::write_stub;
use crate::error::{Error, Result};

/// Written into the destination once a fetch completes; holds the archive
/// digest.
pub const MARKER_FILE: &str = ".netscale-fetched";
const STUB_FILE: &str = "manifest.csv";
const NETWORK_EXTENSIONS: [&str; 7] = ["txt", "edges", "edgelist", "csv", "tsv", "dat", "gz"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchReport {
    pub dest: PathBuf,
    /// False when the destination was already complete.
    pub downloaded: bool,
    pub files: usize,
    /// Set when a manifest stub was written.
    pub stub: Option<PathBuf>,
}

/// `sha256sum`-style lines: `<hex digest>  <name>`.
fn parse_checksums(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (digest, name) = line
            .split_once(char::is_whitespace)
            .ok_or_else(|| Error::Manifest(format!("checksum line {}: expected '<sha256> <file>'", i + 1)))?;
        let digest = digest.to_ascii_lowercase();
        if digest.len() != 64 || !digest.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(Error::Manifest(format!("checksum line {}: not a sha256 digest", i + 1)));
        }
        let name = name.trim().trim_start_matches('*').to_string();
        out.push((digest, name));
    }
    Ok(out)
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn sha256_of(mut r: impl Read) -> io::Result<String> {
    let mut h = Sha256::new();
    io::copy(&mut r, &mut h)?;
    Ok(hex(&h.finalize()))
}

fn is_url(s: &str) -> bool {
    s.starts_with("http://") || s.starts_with("https://")
}

fn file_name(source: &str) -> String {
    let trimmed = source.split(['?', '#']).next().unwrap_or(source);
    trimmed.rsplit(['/', '\\']).next().unwrap_or(trimmed).to_string()
}

/// The archive as a readable, seekable file: the local path itself, or a
/// temporary download next to `dest`.
enum Archive {
    Local(File),
    Temp(tempfile::NamedTempFile),
}

impl Archive {
    fn file(&mut self) -> &mut File {
        match self {
            Archive::Local(f) => f,
            Archive::Temp(t) => t.as_file_mut(),
        }
    }
}

fn obtain(source: &str, scratch: &Path) -> Result<Archive> {
    if is_url(source) {
        log::info!("downloading {source}");
        let resp = ureq::get(source).call().map_err(|e| Error::Download(e.to_string()))?;
        let mut tmp = tempfile::NamedTempFile::new_in(scratch)?;
        io::copy(&mut resp.into_reader(), tmp.as_file_mut()).map_err(|e| Error::Download(e.to_string()))?;
        Ok(Archive::Temp(tmp))
    } else {
        let path = Path::new(source);
        Ok(Archive::Local(File::open(path).map_err(Error::with_path(path))?))
    }
}

fn unpack(file: &mut File, into: &Path) -> Result<()> {
    let mut magic = [0u8; 4];
    file.rewind()?;
    let got = file.read(&mut magic)?;
    file.rewind()?;
    if got >= 4 && magic == *b"PK\x03\x04" {
        let mut zip = zip::ZipArchive::new(BufReader::new(file)).map_err(|e| Error::Archive(e.to_string()))?;
        for i in 0..zip.len() {
            let mut entry = zip.by_index(i).map_err(|e| Error::Archive(e.to_string()))?;
            let rel = entry
                .enclosed_name()
                .ok_or_else(|| Error::Archive(format!("unsafe path in archive: {}", entry.name())))?;
            let target = into.join(rel);
            if entry.is_dir() {
                fs::create_dir_all(&target)?;
                continue;
            }
            if let Some(parent) = target.parent() {
                fs::create_dir_all(parent)?;
            }
            io::copy(&mut entry, &mut File::create(&target).map_err(Error::with_path(&target))?)?;
        }
    } else if got >= 2 && magic[..2] == [0x1f, 0x8b] {
        tar::Archive::new(MultiGzDecoder::new(BufReader::new(file)))
            .unpack(into)
            .map_err(|e| Error::Archive(e.to_string()))?;
    } else {
        tar::Archive::new(BufReader::new(file))
            .unpack(into)
            .map_err(|e| Error::Archive(e.to_string()))?;
    }
    Ok(())
}

fn walk(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> io::Result<()> {
    let mut entries: Vec<_> = fs::read_dir(dir)?.collect::<io::Result<_>>()?;
    entries.sort_by_key(|e| e.file_name());
    for e in entries {
        let path = e.path();
        if e.file_type()?.is_dir() {
            walk(root, &path, out)?;
        } else {
            out.push(path.strip_prefix(root).unwrap().to_path_buf());
        }
    }
    Ok(())
}

/// Download (or copy) an archive, verify it against a checksum manifest,
/// unpack it into `dest` and write a manifest stub.
///
/// The archive's own name must appear in the checksum file, and so must any
/// unpacked file listed there; a mismatch is a hard error and leaves `dest`
/// untouched. A destination holding a completion marker for the same
/// checksums is reused as is.
pub fn fetch_corpus(source: &str, checksums: &Path, dest: &Path) -> Result<FetchReport> {
    let text = fs::read_to_string(checksums).map_err(Error::with_path(checksums))?;
    let sums = parse_checksums(&text)?;
    let name = file_name(source);
    let expected = sums
        .iter()
        .find(|(_, n)| file_name(n) == name)
        .map(|(d, _)| d.clone())
        .ok_or_else(|| Error::Manifest(format!("no checksum listed for {name}")))?;

    let marker = dest.join(MARKER_FILE);
    if let Ok(done) = fs::read_to_string(&marker) {
        if done.trim() == expected {
            log::info!("{} already holds {name}; skipping download", dest.display());
            let mut files = Vec::new();
            walk(dest, dest, &mut files)?;
            return Ok(FetchReport {
                dest: dest.to_path_buf(),
                downloaded: false,
                files: files.iter().filter(|f| is_network_file(f)).count(),
                stub: None,
            });
        }
    }

    let parent = match dest.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&parent).map_err(Error::with_path(&parent))?;
    let mut archive = obtain(source, &parent)?;
    archive.file().rewind()?;
    let actual = sha256_of(BufReader::new(&mut *archive.file()))?;
    if actual != expected {
        return Err(Error::Checksum {
            file: name,
            expected,
            actual,
        });
    }

    // unpack into a sibling temp dir, verify members, then move into place
    let staging = tempfile::Builder::new().prefix(".netscale-unpack").tempdir_in(&parent)?;
    unpack(archive.file(), staging.path())?;
    for (digest, listed) in &sums {
        if file_name(listed) == name {
            continue;
        }
        let path = staging.path().join(listed);
        if path.is_file() {
            let got = sha256_of(BufReader::new(File::open(&path)?))?;
            if &got != digest {
                return Err(Error::Checksum {
                    file: listed.clone(),
                    expected: digest.clone(),
                    actual: got,
                });
            }
        }
    }
    let mut files = Vec::new();
    walk(staging.path(), staging.path(), &mut files)?;
    let networks: Vec<&PathBuf> = files.iter().filter(|f| is_network_file(f)).collect();

    let stub = if staging.path().join(STUB_FILE).exists() || dest.join(STUB_FILE).exists() {
        None
    } else {
        let rows: Vec<(String, String)> = networks
            .iter()
            .map(|p| (network_id(p), p.to_string_lossy().replace('\\', "/")))
            .collect();
        write_stub(File::create(staging.path().join(STUB_FILE))?, &rows)?;
        Some(dest.join(STUB_FILE))
    };
    let mut m = File::create(staging.path().join(MARKER_FILE))?;
    writeln!(m, "{expected}")?;
    drop(m);

    if dest.exists() {
        // merge into an existing directory
        for rel in files.iter().map(PathBuf::as_path).chain([Path::new(MARKER_FILE)]).chain(stub.as_ref().map(|_| Path::new(STUB_FILE))) {
            let target = dest.join(rel);
            if let Some(p) = target.parent() {
                fs::create_dir_all(p)?;
            }
            fs::rename(staging.path().join(rel), &target).map_err(Error::with_path(&target))?;
        }
    } else {
        let staged = staging.keep();
        fs::rename(&staged, dest).map_err(Error::with_path(dest))?;
    }
    Ok(FetchReport {
        dest: dest.to_path_buf(),
        downloaded: true,
        files: networks.len(),
        stub,
    })
}

fn is_network_file(rel: &Path) -> bool {
    let name = rel.file_name().and_then(|n| n.to_str()).unwrap_or("");
    if name.starts_with('.') || name == STUB_FILE || name.to_ascii_lowercase().contains("sha256") {
        return false;
    }
    rel.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| NETWORK_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
}

/// Relative path without extensions, `/`-separated.
fn network_id(rel: &Path) -> String {
    let s = rel.to_string_lossy().replace('\\', "/");
    let s = s.strip_suffix(".gz").unwrap_or(&s);
    match s.rsplit_once('.') {
        Some((stem, ext)) if !ext.contains('/') => stem.to_string(),
        _ => s.to_string(),
    }
}
