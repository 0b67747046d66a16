use std::fs;
use std::io;
use std::path::Path;

use super::QkdError;

/// Packs bits most significant first; a partial last byte is zero padded.
pub fn bits_to_hex(bits: &[u8]) -> String {
    let bytes: Vec<u8> = bits
        .chunks(8)
        .map(|c| c.iter().enumerate().fold(0u8, |acc, (i, &b)| acc | ((b & 1) << (7 - i))))
        .collect();
    hex::encode(bytes)
}

pub fn bits_from_hex(text: &str, len: usize) -> Result<Vec<u8>, QkdError> {
    let bytes = hex::decode(text.trim()).map_err(|e| QkdError::Invalid(format!("hex key: {e}")))?;
    if bytes.len() * 8 < len || bytes.len() > len.div_ceil(8) {
        return Err(QkdError::Invalid(format!("{} hex bytes for {len} bits", bytes.len())));
    }
    Ok((0..len).map(|i| (bytes[i / 8] >> (7 - i % 8)) & 1).collect())
}

/// `bits=<len>` on the first line and the hex payload on the second.
pub fn key_file_text(bits: &[u8]) -> String {
    format!("bits={}\n{}\n", bits.len(), bits_to_hex(bits))
}

pub fn write_key_file(path: &Path, bits: &[u8]) -> io::Result<()> {
    fs::write(path, key_file_text(bits))
}

pub fn read_key_file(path: &Path) -> Result<Vec<u8>, QkdError> {
    let text = fs::read_to_string(path).map_err(|e| QkdError::Invalid(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines();
    let len = lines
        .next()
        .and_then(|l| l.trim().strip_prefix("bits="))
        .and_then(|n| n.parse().ok())
        .ok_or_else(|| QkdError::Invalid(format!("{}: missing bits= header", path.display())))?;
    bits_from_hex(lines.next().unwrap_or(""), len)
}
