//! Binary slice encoding.
//!
//! All integers are little-endian:
//!
//! ```text
//! magic    "KRRT"            4 bytes
//! version  u8                = 1
//! site     u16 len + bytes
//! stamp    i64
//! flows    u16 count
//!   flow id   u16 len + bytes
//!   units     u32 count
//!     seq       u32
//!     samples   u32 count
//!       payload   u32 len + bytes
//! ```

use std::collections::BTreeMap;
use std::io::{self, Read};

use crate::model::{validate_slice, FlowId, InformationUnit, Sample, SiteId, SynchronousSlice};

use super::TransportError;

pub const MAGIC: [u8; 4] = *b"KRRT";
pub const WIRE_VERSION: u8 = 1;

fn put_str(out: &mut Vec<u8>, s: &str) -> Result<(), TransportError> {
    let len = u16::try_from(s.len()).map_err(|_| TransportError::TooLarge("identifier"))?;
    out.extend_from_slice(&len.to_le_bytes());
    out.extend_from_slice(s.as_bytes());
    Ok(())
}

fn put_u32_len(out: &mut Vec<u8>, n: usize, what: &'static str) -> Result<(), TransportError> {
    let n = u32::try_from(n).map_err(|_| TransportError::TooLarge(what))?;
    out.extend_from_slice(&n.to_le_bytes());
    Ok(())
}

/// Encodes a slice. Fails only when a length does not fit its field.
pub fn encode_slice(slice: &SynchronousSlice) -> Result<Vec<u8>, TransportError> {
    let mut out = Vec::with_capacity(64);
    out.extend_from_slice(&MAGIC);
    out.push(WIRE_VERSION);
    put_str(&mut out, slice.site.as_str())?;
    out.extend_from_slice(&slice.time_stamp.to_le_bytes());
    let flows =
        u16::try_from(slice.units.len()).map_err(|_| TransportError::TooLarge("flow count"))?;
    out.extend_from_slice(&flows.to_le_bytes());
    for (flow, units) in &slice.units {
        put_str(&mut out, flow.as_str())?;
        put_u32_len(&mut out, units.len(), "unit count")?;
        for unit in units {
            out.extend_from_slice(&unit.sequence_number.to_le_bytes());
            put_u32_len(&mut out, unit.samples.len(), "sample count")?;
            for sample in &unit.samples {
                put_u32_len(&mut out, sample.payload.len(), "payload")?;
                out.extend_from_slice(&sample.payload);
            }
        }
    }
    Ok(out)
}

fn malformed(e: io::Error) -> TransportError {
    if e.kind() == io::ErrorKind::UnexpectedEof {
        TransportError::MalformedFrame("truncated frame".into())
    } else {
        TransportError::Io(e.to_string())
    }
}

struct Reader<R> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N], TransportError> {
        let mut buf = [0u8; N];
        self.inner.read_exact(&mut buf).map_err(malformed)?;
        Ok(buf)
    }

    fn u8(&mut self) -> Result<u8, TransportError> {
        Ok(self.bytes::<1>()?[0])
    }

    fn u16(&mut self) -> Result<u16, TransportError> {
        Ok(u16::from_le_bytes(self.bytes()?))
    }

    fn u32(&mut self) -> Result<u32, TransportError> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }

    fn i64(&mut self) -> Result<i64, TransportError> {
        Ok(i64::from_le_bytes(self.bytes()?))
    }

    fn vec(&mut self, len: usize) -> Result<Vec<u8>, TransportError> {
        let mut buf = Vec::new();
        // take() keeps a bogus length from allocating before data shows up
        (&mut self.inner)
            .take(len as u64)
            .read_to_end(&mut buf)
            .map_err(malformed)?;
        if buf.len() != len {
            return Err(TransportError::MalformedFrame("truncated frame".into()));
        }
        Ok(buf)
    }

    fn string(&mut self) -> Result<String, TransportError> {
        let len = self.u16()? as usize;
        String::from_utf8(self.vec(len)?)
            .map_err(|_| TransportError::MalformedFrame("identifier is not UTF-8".into()))
    }
}

fn read_body<R: Read>(r: &mut Reader<R>) -> Result<SynchronousSlice, TransportError> {
    let version = r.u8()?;
    if version != WIRE_VERSION {
        return Err(TransportError::VersionMismatch(version));
    }
    let site = SiteId::new(r.string()?)
        .map_err(|_| TransportError::MalformedFrame("empty site id".into()))?;
    let time_stamp = r.i64()?;
    let flows = r.u16()?;
    let mut units = BTreeMap::new();
    for _ in 0..flows {
        let flow = FlowId::new(r.string()?)
            .map_err(|_| TransportError::MalformedFrame("empty flow id".into()))?;
        let count = r.u32()?;
        let mut list = Vec::new();
        for _ in 0..count {
            let sequence_number = r.u32()?;
            let samples = r.u32()?;
            let mut unit_samples = Vec::new();
            for _ in 0..samples {
                let len = r.u32()? as usize;
                unit_samples.push(Sample::new(r.vec(len)?));
            }
            list.push(InformationUnit::new(
                flow.clone(),
                sequence_number,
                unit_samples,
            ));
        }
        if units.insert(flow, list).is_some() {
            return Err(TransportError::MalformedFrame("flow listed twice".into()));
        }
    }
    let slice = SynchronousSlice {
        time_stamp,
        site,
        units,
    };
    validate_slice(&slice).map_err(TransportError::SequenceGap)?;
    Ok(slice)
}

/// Reads one frame from a stream. `Ok(None)` on a clean end of stream
/// before the first byte of a frame.
pub fn read_slice<R: Read>(input: R) -> Result<Option<SynchronousSlice>, TransportError> {
    let mut r = Reader { inner: input };
    let mut first = [0u8; 1];
    loop {
        match r.inner.read(&mut first) {
            Ok(0) => return Ok(None),
            Ok(_) => break,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
            Err(e) => return Err(TransportError::Io(e.to_string())),
        }
    }
    let rest: [u8; 3] = r.bytes()?;
    if first[0] != MAGIC[0] || rest != MAGIC[1..] {
        return Err(TransportError::MalformedFrame("bad magic".into()));
    }
    read_body(&mut r).map(Some)
}

/// Decodes exactly one frame.
pub fn decode_slice(bytes: &[u8]) -> Result<SynchronousSlice, TransportError> {
    let mut cursor = bytes;
    let slice = read_slice(&mut cursor)?
        .ok_or_else(|| TransportError::MalformedFrame("empty input".into()))?;
    if !cursor.is_empty() {
        return Err(TransportError::MalformedFrame(format!(
            "{} trailing bytes",
            cursor.len()
        )));
    }
    Ok(slice)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SliceViolation;

    fn sample_slice() -> SynchronousSlice {
        let a = FlowId::new("A").unwrap();
        let b = FlowId::new("b").unwrap();
        SynchronousSlice::new(
            -42,
            SiteId::new("L1").unwrap(),
            BTreeMap::from([
                (
                    a.clone(),
                    vec![
                        InformationUnit::single(a.clone(), 1, vec![1, 2, 3]),
                        InformationUnit::new(a, 2, vec![Sample::new(vec![]), Sample::new(vec![9])]),
                    ],
                ),
                (
                    b.clone(),
                    vec![InformationUnit::single(b, 1, b"x".to_vec())],
                ),
            ]),
        )
        .unwrap()
    }

    #[test]
    fn round_trip() {
        let s = sample_slice();
        assert_eq!(decode_slice(&encode_slice(&s).unwrap()).unwrap(), s);
    }

    #[test]
    fn layout_of_minimal_frame() {
        let f = FlowId::new("F").unwrap();
        let s = SynchronousSlice::single(1, SiteId::new("S").unwrap(), f, vec![0xAB]);
        let bytes = encode_slice(&s).unwrap();
        let expected: Vec<u8> = [
            &b"KRRT"[..],
            &[1],
            &[1, 0, b'S'],
            &1i64.to_le_bytes(),
            &[1, 0],
            &[1, 0, b'F'],
            &[1, 0, 0, 0],
            &[1, 0, 0, 0],
            &[1, 0, 0, 0],
            &[1, 0, 0, 0, 0xAB],
        ]
        .concat();
        assert_eq!(bytes, expected);
    }

    #[test]
    fn truncated_frames_are_malformed() {
        let bytes = encode_slice(&sample_slice()).unwrap();
        for cut in [1, 4, 5, 9, bytes.len() - 1] {
            assert!(
                matches!(
                    decode_slice(&bytes[..cut]),
                    Err(TransportError::MalformedFrame(_))
                ),
                "cut at {cut}"
            );
        }
        assert!(matches!(
            decode_slice(&[]),
            Err(TransportError::MalformedFrame(_))
        ));
    }

    #[test]
    fn trailing_bytes_and_bad_magic() {
        let mut bytes = encode_slice(&sample_slice()).unwrap();
        bytes.push(0);
        assert!(matches!(
            decode_slice(&bytes),
            Err(TransportError::MalformedFrame(_))
        ));
        let mut bytes = encode_slice(&sample_slice()).unwrap();
        bytes[0] = b'X';
        assert!(matches!(
            decode_slice(&bytes),
            Err(TransportError::MalformedFrame(_))
        ));
    }

    #[test]
    fn unknown_version_rejected() {
        let mut bytes = encode_slice(&sample_slice()).unwrap();
        bytes[4] = 2;
        assert_eq!(
            decode_slice(&bytes),
            Err(TransportError::VersionMismatch(2))
        );
    }

    #[test]
    fn duplicated_sequence_numbers_rejected() {
        let a = FlowId::new("A").unwrap();
        let bad = SynchronousSlice {
            time_stamp: 0,
            site: SiteId::new("L1").unwrap(),
            units: BTreeMap::from([(
                a.clone(),
                vec![
                    InformationUnit::single(a.clone(), 1, vec![1]),
                    InformationUnit::single(a.clone(), 1, vec![2]),
                ],
            )]),
        };
        let bytes = encode_slice(&bad).unwrap();
        match decode_slice(&bytes) {
            Err(TransportError::SequenceGap(v)) => {
                assert!(v.contains(&SliceViolation::DuplicateSequence {
                    flow: a,
                    sequence_number: 1
                }))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn stream_of_frames() {
        let s = sample_slice();
        let mut bytes = encode_slice(&s).unwrap();
        bytes.extend(encode_slice(&s).unwrap());
        let mut cursor = &bytes[..];
        assert_eq!(read_slice(&mut cursor).unwrap(), Some(s.clone()));
        assert_eq!(read_slice(&mut cursor).unwrap(), Some(s));
        assert_eq!(read_slice(&mut cursor).unwrap(), None);
    }

    #[test]
    fn huge_length_prefix_does_not_allocate() {
        let mut bytes = b"KRRT\x01".to_vec();
        bytes.extend_from_slice(&u16::MAX.to_le_bytes());
        assert!(matches!(
            decode_slice(&bytes),
            Err(TransportError::MalformedFrame(_))
        ));
    }
}
