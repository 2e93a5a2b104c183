//! Line-delimited JSON statistics streams.

use std::io::{self, BufRead, Write};

use crate::fuzzcore::StatsEvent;

/// Writes one JSON object per line.
pub fn write_events<W: Write>(mut out: W, events: &[StatsEvent]) -> io::Result<()> {
    for e in events {
        serde_json::to_writer(&mut out, e)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// The stream as a string, exactly as [`write_events`] would write it.
pub fn events_to_string(events: &[StatsEvent]) -> String {
    let mut buf = Vec::new();
    write_events(&mut buf, events).expect("writing to memory");
    String::from_utf8(buf).expect("JSON is UTF-8")
}

/// Reads a stream back. Blank lines are skipped; a malformed line is an
/// `InvalidData` error naming its line number.
pub fn read_events<R: BufRead>(input: R) -> io::Result<Vec<StatsEvent>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let e = serde_json::from_str(&line)
            .map_err(|err| io::Error::new(io::ErrorKind::InvalidData, format!("line {}: {err}", i + 1)))?;
        out.push(e);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuzzcore::EventKind;
    use crate::minivm::PathId;

    #[test]
    fn round_trip() {
        let events = vec![
            StatsEvent {
                seq: 0,
                exec_index: 1,
                wall_ms: 0,
                kind: EventKind::NewPath {
                    pid: PathId(0xabc),
                    function: "f".into(),
                    seq_len: 1,
                },
            },
            StatsEvent {
                seq: 1,
                exec_index: 9,
                wall_ms: 3,
                kind: EventKind::CampaignEnd { executions: 9 },
            },
        ];
        let text = events_to_string(&events);
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with(r#"{"seq":0,"execIndex":1,"wallMs":0,"kind":"newPath""#));
        assert_eq!(read_events(text.as_bytes()).unwrap(), events);
    }

    #[test]
    fn bad_line_is_reported_by_number() {
        let err = read_events("\n{\"seq\":0}\n".as_bytes()).unwrap_err();
        assert_eq!(err.kind(), io::ErrorKind::InvalidData);
        assert!(err.to_string().starts_with("line 2:"), "{err}");
    }
}
