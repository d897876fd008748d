//! Byte encoding of configuration lists.
//!
//! Each entry is written as `bag_size` varints (the mapping), a varint count
//! `k >= 1`, the first color set mask and then `k - 1` strictly positive
//! deltas between consecutive masks. Varints are little-endian base-128 with
//! the high bit as continuation flag. Entries are concatenated; the list ends
//! with the buffer.

use thiserror::Error;

use crate::coloring::ColorSet;
use crate::config::ConfigList;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DecodeError {
    #[error("truncated varint at byte {offset}")]
    Truncated { offset: usize },
    #[error("varint overflows 32 bits at byte {offset}")]
    Overflow { offset: usize },
    #[error("entry without color sets at byte {offset}")]
    EmptyEntry { offset: usize },
    #[error("non-increasing color set at byte {offset}")]
    NonIncreasing { offset: usize },
    #[error("entry out of order at byte {offset}")]
    Unsorted { offset: usize },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CompressedList(Vec<u8>);

impl CompressedList {
    pub fn from_bytes(bytes: Vec<u8>) -> Self {
        CompressedList(bytes)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[inline]
pub fn write_varint(out: &mut Vec<u8>, mut value: u32) {
    while value >= 0x80 {
        out.push(value as u8 | 0x80);
        value >>= 7;
    }
    out.push(value as u8);
}

/// Decodes one varint at `*pos`, advancing it.
#[inline]
pub fn read_varint(buf: &[u8], pos: &mut usize) -> Result<u32, DecodeError> {
    let start = *pos;
    let mut value = 0u32;
    for i in 0..5 {
        let Some(&byte) = buf.get(*pos) else {
            return Err(DecodeError::Truncated { offset: start });
        };
        *pos += 1;
        let payload = (byte & 0x7f) as u32;
        if i == 4 && payload > 0x0f {
            return Err(DecodeError::Overflow { offset: start });
        }
        value |= payload << (7 * i);
        if byte & 0x80 == 0 {
            return Ok(value);
        }
    }
    Err(DecodeError::Overflow { offset: start })
}

pub fn compress(list: &ConfigList) -> CompressedList {
    let mut out = Vec::with_capacity(list.heap_bytes() / 2);
    for entry in list.iter() {
        for &v in entry.mapping {
            write_varint(&mut out, v);
        }
        write_varint(&mut out, entry.colorsets.len() as u32);
        let mut prev = 0u32;
        for (i, set) in entry.colorsets.iter().enumerate() {
            debug_assert!(i == 0 || set.0 > prev);
            write_varint(&mut out, set.0 - prev);
            prev = set.0;
        }
    }
    CompressedList(out)
}

pub fn decompress(buf: &CompressedList, bag_size: usize) -> Result<ConfigList, DecodeError> {
    let bytes = buf.as_bytes();
    let mut list = ConfigList::new(bag_size);
    let mut mapping = vec![0u32; bag_size];
    let mut sets = Vec::new();
    let mut pos = 0;
    while pos < bytes.len() {
        let entry_start = pos;
        for slot in mapping.iter_mut() {
            *slot = read_varint(bytes, &mut pos)?;
        }
        let count_at = pos;
        let count = read_varint(bytes, &mut pos)?;
        if count == 0 {
            return Err(DecodeError::EmptyEntry { offset: count_at });
        }
        sets.clear();
        let mut prev = 0u32;
        for i in 0..count {
            let at = pos;
            let delta = read_varint(bytes, &mut pos)?;
            if i > 0 && delta == 0 {
                return Err(DecodeError::NonIncreasing { offset: at });
            }
            prev = prev
                .checked_add(delta)
                .ok_or(DecodeError::Overflow { offset: at })?;
            sets.push(ColorSet(prev));
        }
        if !list.is_empty() && list.mapping(list.len() - 1) >= &mapping[..] {
            return Err(DecodeError::Unsorted { offset: entry_start });
        }
        list.push_unchecked(&mapping, sets.iter().copied());
    }
    Ok(list)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ConfigEntry;
    use proptest::prelude::*;

    #[test]
    fn empty_list_is_empty_buffer() {
        let list = ConfigList::new(3);
        assert!(compress(&list).is_empty());
        assert_eq!(decompress(&CompressedList::default(), 3).unwrap(), list);
    }

    #[test]
    fn hand_encoded_entry() {
        // mapping (7), color sets {1} and {1,2}
        let list = ConfigList::from_entries(1, [ConfigEntry::new(vec![7], vec![ColorSet(1), ColorSet(3)])]);
        assert_eq!(compress(&list).as_bytes(), &[7, 2, 1, 2]);
    }

    #[test]
    fn multi_byte_varints() {
        let mut out = Vec::new();
        write_varint(&mut out, 300);
        write_varint(&mut out, u32::MAX);
        assert_eq!(out, vec![0xac, 0x02, 0xff, 0xff, 0xff, 0xff, 0x0f]);
        let mut pos = 0;
        assert_eq!(read_varint(&out, &mut pos), Ok(300));
        assert_eq!(read_varint(&out, &mut pos), Ok(u32::MAX));
        assert_eq!(pos, out.len());
    }

    #[test]
    fn corrupt_buffers_report_offsets() {
        let bad = |b: &[u8], bag| decompress(&CompressedList::from_bytes(b.to_vec()), bag).unwrap_err();
        assert_eq!(bad(&[7, 2, 1], 1), DecodeError::Truncated { offset: 3 });
        assert_eq!(bad(&[7, 0x80], 1), DecodeError::Truncated { offset: 1 });
        assert_eq!(bad(&[7, 0], 1), DecodeError::EmptyEntry { offset: 1 });
        assert_eq!(bad(&[7, 2, 1, 0], 1), DecodeError::NonIncreasing { offset: 3 });
        assert_eq!(bad(&[0xff, 0xff, 0xff, 0xff, 0x7f], 1), DecodeError::Overflow { offset: 0 });
        assert_eq!(bad(&[7, 1, 1, 7, 1, 2], 1), DecodeError::Unsorted { offset: 3 });
    }

    fn arb_list() -> impl Strategy<Value = ConfigList> {
        (0usize..5).prop_flat_map(|bag| {
            proptest::collection::vec(
                (
                    proptest::collection::vec(0u32..5000, bag),
                    proptest::collection::vec(1u32..u32::MAX, 1..8),
                ),
                0..20,
            )
            .prop_map(move |raw| {
                ConfigList::from_entries(
                    bag,
                    raw.into_iter().map(|(m, s)| {
                        ConfigEntry::new(m, s.into_iter().map(ColorSet).collect())
                    }),
                )
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn round_trip(list in arb_list()) {
            let buf = compress(&list);
            prop_assert_eq!(decompress(&buf, list.bag_size()).unwrap(), list);
        }
    }
}
