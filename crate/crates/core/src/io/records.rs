//! Line-delimited record files and JSON profile files.

use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{PoqError, Result};
use crate::model::{validate_records, NetworkProfile, ScoreRecord};

/// Reads one JSON record per line. Blank lines are ignored.
///
/// Each record is checked for range invariants as it is read; the error
/// names the offending line and record id.
pub fn load_records(path: &Path) -> Result<Vec<ScoreRecord>> {
    let file = File::open(path).map_err(|e| PoqError::io(path, e))?;
    let mut records = Vec::new();
    let mut seen = BTreeSet::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| PoqError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| PoqError::Parse {
            path: path.to_path_buf(),
            line: line_no,
            message,
        };
        let record: ScoreRecord =
            serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        if let Some(v) = validate_records(std::slice::from_ref(&record), None).first() {
            return Err(parse_err(v.to_string()));
        }
        if !seen.insert(record.record_id.clone()) {
            return Err(parse_err(format!(
                "record id `{}` appears more than once",
                record.record_id
            )));
        }
        records.push(record);
    }
    Ok(records)
}

pub fn records_to_jsonl(records: &[ScoreRecord]) -> String {
    let mut out = String::new();
    for record in records {
        out.push_str(&serde_json::to_string(record).expect("records are serializable"));
        out.push('\n');
    }
    out
}

pub fn save_records(path: &Path, records: &[ScoreRecord]) -> Result<()> {
    let file = File::create(path).map_err(|e| PoqError::io(path, e))?;
    let mut writer = BufWriter::new(file);
    writer
        .write_all(records_to_jsonl(records).as_bytes())
        .and_then(|_| writer.flush())
        .map_err(|e| PoqError::io(path, e))
}

pub fn load_profile(path: &Path) -> Result<NetworkProfile> {
    let text = fs::read_to_string(path).map_err(|e| PoqError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| PoqError::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}

pub fn save_profile(path: &Path, profile: &NetworkProfile) -> Result<()> {
    let text = serde_json::to_string_pretty(profile).expect("profile is serializable");
    fs::write(path, text + "\n").map_err(|e| PoqError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Task;

    fn sample() -> Vec<ScoreRecord> {
        vec![
            ScoreRecord {
                record_id: "r1".into(),
                task: Task::Qa,
                model_key: "m".into(),
                scores: [("e1".to_string(), 0.1 + 0.2), ("e2".to_string(), 10.0)].into(),
                gt_proxy: Some(6.666666666666667),
            },
            ScoreRecord {
                record_id: "r2".into(),
                task: Task::Other,
                model_key: "m".into(),
                scores: [("e1".to_string(), 0.0)].into(),
                gt_proxy: None,
            },
        ]
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("records.jsonl");
        save_records(&path, &sample()).unwrap();
        assert_eq!(load_records(&path).unwrap(), sample());
    }

    #[test]
    fn two_line_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        fs::write(
            &path,
            concat!(
                r#"{"record_id":"a","task":"qa","model_key":"m","scores":{"e":4.5}}"#, "\n",
                "\n",
                r#"{"record_id":"b","task":"summarization","model_key":"m","scores":{"e":7},"gt_proxy":3}"#, "\n",
            ),
        )
        .unwrap();
        let records = load_records(&path).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[1].gt_proxy, Some(3.0));
    }

    #[test]
    fn rejects_bad_lines_with_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        fs::write(
            &path,
            concat!(
                r#"{"record_id":"a","task":"qa","model_key":"m","scores":{"e":4.5}}"#,
                "\n",
                r#"{"record_id":"b","task":"qa","model_key":"m","scores":{"e":12}}"#,
                "\n",
            ),
        )
        .unwrap();
        match load_records(&path) {
            Err(PoqError::Parse { line, message, .. }) => {
                assert_eq!(line, 2);
                assert!(message.contains("`b`"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }

        fs::write(&path, "{not json}\n").unwrap();
        assert!(matches!(
            load_records(&path),
            Err(PoqError::Parse { line: 1, .. })
        ));

        fs::write(
            &path,
            r#"{"record_id":"a","task":"poetry","model_key":"m","scores":{"e":1}}"#,
        )
        .unwrap();
        assert!(matches!(
            load_records(&path),
            Err(PoqError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_records(Path::new("/nonexistent/records.jsonl")),
            Err(PoqError::Io { .. })
        ));
    }
}
