//! Huffman code construction plus the bit-level writer and reader.

use super::tables::HuffmanSpec;
use crate::error::CodecError;

/// Canonical code assignment (Annex C): `(code, length)` per symbol in order.
fn canonical_codes(counts: &[u8; 16]) -> Vec<(u16, u8)> {
    let mut codes = Vec::new();
    let mut code = 0u32;
    for (len_minus_one, &n) in counts.iter().enumerate() {
        for _ in 0..n {
            codes.push((code as u16, len_minus_one as u8 + 1));
            code += 1;
        }
        code <<= 1;
    }
    codes
}

/// Symbol -> (code, length) lookup used by the encoder.
pub(crate) struct EncodeTable {
    codes: [(u16, u8); 256],
}

impl EncodeTable {
    pub fn new(spec: &HuffmanSpec) -> Self {
        let mut codes = [(0u16, 0u8); 256];
        for (&sym, code) in spec.symbols.iter().zip(canonical_codes(&spec.counts)) {
            codes[sym as usize] = code;
        }
        Self { codes }
    }

    #[inline]
    pub fn get(&self, symbol: u8) -> (u16, u8) {
        self.codes[symbol as usize]
    }
}

pub(crate) struct BitWriter {
    out: Vec<u8>,
    acc: u64,
    bits: u32,
}

impl BitWriter {
    pub fn new(out: Vec<u8>) -> Self {
        Self { out, acc: 0, bits: 0 }
    }

    #[inline]
    pub fn put(&mut self, value: u32, len: u8) {
        if len == 0 {
            return;
        }
        let len = u32::from(len);
        self.acc = (self.acc << len) | u64::from(value & ((1u32 << len) - 1));
        self.bits += len;
        while self.bits >= 8 {
            self.bits -= 8;
            let byte = (self.acc >> self.bits) as u8;
            self.out.push(byte);
            if byte == 0xFF {
                self.out.push(0x00);
            }
        }
    }

    /// Pads the final byte with one-bits and returns the buffer.
    pub fn finish(mut self) -> Vec<u8> {
        if self.bits > 0 {
            let pad = 8 - self.bits;
            self.put((1 << pad) - 1, pad as u8);
        }
        self.out
    }
}

const LOOKAHEAD: u32 = 9;

/// Decoding table with a 9-bit fast path.
#[derive(Clone)]
pub(crate) struct DecodeTable {
    fast: Vec<(u8, u8)>,
    max_code: [i32; 18],
    val_offset: [i32; 17],
    symbols: Vec<u8>,
}

impl DecodeTable {
    pub fn new(counts: &[u8; 16], symbols: &[u8]) -> Result<Self, CodecError> {
        let total: usize = counts.iter().map(|&c| c as usize).sum();
        if total != symbols.len() || total > 256 {
            return Err(CodecError::InvalidInput("inconsistent Huffman table".into()));
        }
        let codes = canonical_codes(counts);
        let mut fast = vec![(0u8, 0u8); 1 << LOOKAHEAD];
        let mut max_code = [-1i32; 18];
        let mut val_offset = [0i32; 17];
        let mut k = 0usize;
        for len in 1..=16usize {
            let n = counts[len - 1] as usize;
            if n > 0 {
                val_offset[len] = k as i32 - i32::from(codes[k].0);
                max_code[len] = i32::from(codes[k + n - 1].0);
                if i64::from(codes[k + n - 1].0) >= 1i64 << len {
                    return Err(CodecError::InvalidInput("over-subscribed Huffman table".into()));
                }
            }
            k += n;
        }
        max_code[17] = i32::MAX;
        for (i, &(code, len)) in codes.iter().enumerate() {
            if u32::from(len) <= LOOKAHEAD {
                let shift = LOOKAHEAD - u32::from(len);
                let base = (code as usize) << shift;
                for slot in &mut fast[base..base + (1 << shift)] {
                    *slot = (len, symbols[i]);
                }
            }
        }
        Ok(Self {
            fast,
            max_code,
            val_offset,
            symbols: symbols.to_vec(),
        })
    }
}

/// Reads entropy-coded bits, removing byte stuffing and stopping at markers.
pub(crate) struct BitReader<'a> {
    data: &'a [u8],
    pub pos: usize,
    acc: u64,
    bits: u32,
    /// A marker (other than a stuffed `FF 00`) was reached at `pos`.
    pub marker: bool,
    /// The data ran out without a marker.
    pub exhausted: bool,
}

impl<'a> BitReader<'a> {
    pub fn new(data: &'a [u8], pos: usize) -> Self {
        Self {
            data,
            pos,
            acc: 0,
            bits: 0,
            marker: false,
            exhausted: false,
        }
    }

    fn fill(&mut self) {
        while self.bits <= 56 {
            let byte = if self.marker || self.exhausted {
                0
            } else if self.pos >= self.data.len() {
                self.exhausted = true;
                0
            } else {
                let b = self.data[self.pos];
                if b == 0xFF {
                    match self.data.get(self.pos + 1) {
                        Some(0x00) => {
                            self.pos += 2;
                            0xFF
                        }
                        Some(_) => {
                            self.marker = true;
                            0
                        }
                        None => {
                            self.exhausted = true;
                            0
                        }
                    }
                } else {
                    self.pos += 1;
                    b
                }
            };
            self.acc |= u64::from(byte) << (56 - self.bits);
            self.bits += 8;
        }
    }

    #[inline]
    fn peek(&mut self, n: u32) -> u32 {
        if self.bits < n {
            self.fill();
        }
        (self.acc >> (64 - n)) as u32
    }

    #[inline]
    fn consume(&mut self, n: u32) {
        self.acc <<= n;
        self.bits -= n;
    }

    #[inline]
    pub fn bits(&mut self, n: u32) -> u32 {
        if n == 0 {
            return 0;
        }
        let v = self.peek(n);
        self.consume(n);
        v
    }

    pub fn decode(&mut self, table: &DecodeTable) -> Result<u8, CodecError> {
        let look = self.peek(LOOKAHEAD);
        let (len, sym) = table.fast[look as usize];
        if len > 0 {
            self.consume(u32::from(len));
            return Ok(sym);
        }
        let mut len = LOOKAHEAD as usize + 1;
        let mut code = self.peek(len as u32) as i32;
        while len <= 16 && code > table.max_code[len] {
            len += 1;
            code = self.peek(len as u32) as i32;
        }
        if len > 16 {
            return Err(CodecError::parse(self.pos, "invalid Huffman code"));
        }
        self.consume(len as u32);
        let idx = (code + table.val_offset[len]) as usize;
        table
            .symbols
            .get(idx)
            .copied()
            .ok_or_else(|| CodecError::parse(self.pos, "invalid Huffman code"))
    }

    /// Reads `n` magnitude bits and sign-extends per the JPEG `EXTEND` procedure.
    #[inline]
    pub fn receive_extend(&mut self, n: u8) -> i32 {
        if n == 0 {
            return 0;
        }
        let v = self.bits(u32::from(n)) as i32;
        if v < 1 << (n - 1) {
            v - (1 << n) + 1
        } else {
            v
        }
    }

    /// Discards buffered bits and consumes an `RSTn` marker at the current position.
    pub fn restart(&mut self) -> Result<(), CodecError> {
        self.acc = 0;
        self.bits = 0;
        self.marker = false;
        match self.data.get(self.pos..self.pos + 2) {
            Some([0xFF, m]) if (0xD0..=0xD7).contains(m) => {
                self.pos += 2;
                Ok(())
            }
            _ => Err(CodecError::parse(self.pos, "expected RST marker")),
        }
    }
}

/// Magnitude category of a coefficient value (number of bits).
#[inline]
pub(crate) fn category(v: i32) -> u8 {
    (32 - v.unsigned_abs().leading_zeros()) as u8
}

#[cfg(test)]
mod tests {
    use super::super::tables::*;
    use super::*;

    #[test]
    fn encode_decode_symbols_round_trip() {
        for spec in [DC_LUMA, DC_CHROMA, AC_LUMA, AC_CHROMA] {
            let enc = EncodeTable::new(&spec);
            let dec = DecodeTable::new(&spec.counts, spec.symbols).unwrap();
            let mut w = BitWriter::new(Vec::new());
            for &s in spec.symbols {
                let (code, len) = enc.get(s);
                w.put(u32::from(code), len);
            }
            let bytes = w.finish();
            let mut r = BitReader::new(&bytes, 0);
            for &s in spec.symbols {
                assert_eq!(r.decode(&dec).unwrap(), s);
            }
        }
    }

    #[test]
    fn stuffing_and_extend() {
        let mut w = BitWriter::new(Vec::new());
        w.put(0xFF, 8);
        w.put(0b101, 3);
        w.put(0b010, 3);
        let bytes = w.finish();
        assert_eq!(&bytes[..2], &[0xFF, 0x00]);
        let mut r = BitReader::new(&bytes, 0);
        assert_eq!(r.bits(8), 0xFF);
        assert_eq!(r.receive_extend(3), 5);
        assert_eq!(r.receive_extend(3), -5);
    }

    #[test]
    fn categories() {
        assert_eq!(category(0), 0);
        assert_eq!(category(1), 1);
        assert_eq!(category(-1), 1);
        assert_eq!(category(-3), 2);
        assert_eq!(category(1023), 10);
        assert_eq!(category(2047), 11);
    }
}
