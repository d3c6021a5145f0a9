//! Baseline / extended-sequential Huffman JPEG decoder.

use super::frame::{Component, Frame};
use super::huffman::{BitReader, DecodeTable};
use super::tables::ZIGZAG;
use crate::error::CodecError;
use crate::raster::RgbImage;

const SOI: u8 = 0xD8;
const EOI: u8 = 0xD9;
const SOS: u8 = 0xDA;
const DQT: u8 = 0xDB;
const DRI: u8 = 0xDD;
const DHT: u8 = 0xC4;

struct Parser<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn u8(&mut self) -> Result<u8, CodecError> {
        let b = *self
            .data
            .get(self.pos)
            .ok_or_else(|| CodecError::parse(self.pos, "unexpected end of stream"))?;
        self.pos += 1;
        Ok(b)
    }

    fn u16(&mut self) -> Result<u16, CodecError> {
        Ok(u16::from(self.u8()?) << 8 | u16::from(self.u8()?))
    }

    /// Returns the payload of a length-prefixed segment.
    fn segment(&mut self) -> Result<(usize, &'a [u8]), CodecError> {
        let start = self.pos;
        let len = self.u16()? as usize;
        if len < 2 {
            return Err(CodecError::parse(start, "segment length below 2"));
        }
        let end = start + len;
        if end > self.data.len() {
            return Err(CodecError::parse(self.data.len(), "segment runs past end of stream"));
        }
        self.pos = end;
        Ok((start + 2, &self.data[start + 2..end]))
    }

    /// Finds the next marker, skipping fill bytes.
    fn marker(&mut self) -> Result<(usize, u8), CodecError> {
        let at = self.pos;
        if self.u8()? != 0xFF {
            return Err(CodecError::parse(at, "expected marker"));
        }
        let mut m = self.u8()?;
        while m == 0xFF {
            m = self.u8()?;
        }
        Ok((at, m))
    }
}

#[derive(Default)]
struct State {
    quant: [Option<[u16; 64]>; 4],
    dc: [Option<DecodeTable>; 4],
    ac: [Option<DecodeTable>; 4],
    frame: Option<Frame>,
    frame_quant_ids: Vec<usize>,
    restart_interval: usize,
}

pub(crate) fn decode(data: &[u8]) -> Result<RgbImage, CodecError> {
    let mut p = Parser { data, pos: 0 };
    if data.len() < 2 || data[0] != 0xFF || data[1] != SOI {
        return Err(CodecError::parse(0, "missing SOI marker"));
    }
    p.pos = 2;
    let mut st = State::default();
    let mut scanned = false;
    loop {
        if p.pos >= data.len() {
            return Err(CodecError::parse(data.len(), "stream truncated before EOI"));
        }
        let (at, marker) = p.marker()?;
        match marker {
            EOI => break,
            DQT => {
                let (off, payload) = p.segment()?;
                parse_dqt(off, payload, &mut st.quant)?;
            }
            DHT => {
                let (off, payload) = p.segment()?;
                parse_dht(off, payload, &mut st)?;
            }
            DRI => {
                let (off, payload) = p.segment()?;
                if payload.len() != 2 {
                    return Err(CodecError::parse(off, "bad DRI length"));
                }
                st.restart_interval = usize::from(u16::from_be_bytes([payload[0], payload[1]]));
            }
            0xC0 | 0xC1 => {
                let (off, payload) = p.segment()?;
                if st.frame.is_some() {
                    return Err(CodecError::parse(at, "multiple frames"));
                }
                parse_sof(off, payload, &mut st)?;
            }
            0xC2 | 0xC6 | 0xCA | 0xCE => {
                return Err(CodecError::unsupported(at, "progressive DCT"));
            }
            0xC3 | 0xC5 | 0xC7 | 0xC9 | 0xCB | 0xCD | 0xCF => {
                return Err(CodecError::unsupported(
                    at,
                    format!("frame type SOF{} (lossless, hierarchical or arithmetic)", marker - 0xC0),
                ));
            }
            0xCC => return Err(CodecError::unsupported(at, "arithmetic coding")),
            SOS => {
                let (off, payload) = p.segment()?;
                p.pos = decode_scan(off, payload, data, p.pos, &mut st)?;
                scanned = true;
            }
            0xD0..=0xD7 => {}
            0x01 => {}
            0xE0..=0xEF | 0xFE | 0xC8 | 0xDC | 0xDE | 0xDF | 0xF0..=0xFD => {
                p.segment()?;
            }
            other => {
                return Err(CodecError::parse(at, format!("unexpected marker 0xFF{other:02X}")));
            }
        }
    }
    let frame = st
        .frame
        .take()
        .ok_or_else(|| CodecError::parse(p.pos, "no frame header before EOI"))?;
    if !scanned {
        return Err(CodecError::parse(p.pos, "no scan before EOI"));
    }
    let mut frame = frame;
    for (slot, &id) in st.frame_quant_ids.iter().enumerate() {
        frame.quant[slot] = st.quant[id]
            .ok_or_else(|| CodecError::parse(p.pos, format!("quantization table {id} never defined")))?;
        frame.components[slot].quant_id = slot;
    }
    Ok(frame.to_rgb())
}

fn parse_dqt(off: usize, mut payload: &[u8], quant: &mut [Option<[u16; 64]>; 4]) -> Result<(), CodecError> {
    let mut at = off;
    while !payload.is_empty() {
        let pq = payload[0] >> 4;
        let tq = (payload[0] & 0x0F) as usize;
        let width = if pq == 0 { 1 } else { 2 };
        if pq > 1 || tq > 3 || payload.len() < 1 + 64 * width {
            return Err(CodecError::parse(at, "malformed DQT segment"));
        }
        let mut table = [0u16; 64];
        for k in 0..64 {
            table[ZIGZAG[k]] = if width == 1 {
                u16::from(payload[1 + k])
            } else {
                u16::from_be_bytes([payload[1 + 2 * k], payload[2 + 2 * k]])
            };
        }
        quant[tq] = Some(table);
        payload = &payload[1 + 64 * width..];
        at += 1 + 64 * width;
    }
    Ok(())
}

fn parse_dht(off: usize, mut payload: &[u8], st: &mut State) -> Result<(), CodecError> {
    let mut at = off;
    while !payload.is_empty() {
        if payload.len() < 17 {
            return Err(CodecError::parse(at, "malformed DHT segment"));
        }
        let class = payload[0] >> 4;
        let id = (payload[0] & 0x0F) as usize;
        if class > 1 || id > 3 {
            return Err(CodecError::parse(at, "bad Huffman table class or id"));
        }
        let counts: [u8; 16] = payload[1..17].try_into().expect("16 bytes");
        let n: usize = counts.iter().map(|&c| c as usize).sum();
        if payload.len() < 17 + n {
            return Err(CodecError::parse(at, "DHT symbols run past segment"));
        }
        let table = DecodeTable::new(&counts, &payload[17..17 + n])
            .map_err(|e| CodecError::parse(at, e.to_string()))?;
        if class == 0 {
            st.dc[id] = Some(table);
        } else {
            st.ac[id] = Some(table);
        }
        payload = &payload[17 + n..];
        at += 17 + n;
    }
    Ok(())
}

fn parse_sof(off: usize, payload: &[u8], st: &mut State) -> Result<(), CodecError> {
    if payload.len() < 6 {
        return Err(CodecError::parse(off, "short SOF segment"));
    }
    if payload[0] != 8 {
        return Err(CodecError::unsupported(off, format!("{}-bit samples", payload[0])));
    }
    let height = usize::from(u16::from_be_bytes([payload[1], payload[2]]));
    let width = usize::from(u16::from_be_bytes([payload[3], payload[4]]));
    let n = usize::from(payload[5]);
    if width == 0 || height == 0 {
        return Err(CodecError::unsupported(off, "zero or DNL-defined image dimensions"));
    }
    if n != 1 && n != 3 {
        return Err(CodecError::unsupported(off, format!("{n} colour components")));
    }
    if payload.len() != 6 + 3 * n {
        return Err(CodecError::parse(off, "SOF length does not match component count"));
    }
    let mut raw = Vec::with_capacity(n);
    for i in 0..n {
        let c = &payload[6 + 3 * i..9 + 3 * i];
        let (h, v) = (usize::from(c[1] >> 4), usize::from(c[1] & 0x0F));
        if !(1..=4).contains(&h) || !(1..=4).contains(&v) || c[2] > 3 {
            return Err(CodecError::parse(off + 6 + 3 * i, "bad component sampling or table id"));
        }
        raw.push((c[0], h, v, usize::from(c[2])));
    }
    let hmax = raw.iter().map(|c| c.1).max().unwrap_or(1);
    let vmax = raw.iter().map(|c| c.2).max().unwrap_or(1);
    let mcus_x = width.div_ceil(8 * hmax);
    let mcus_y = height.div_ceil(8 * vmax);
    st.frame_quant_ids = raw.iter().map(|c| c.3).collect();
    let components = raw
        .iter()
        .map(|&(id, h, v, _)| Component {
            id,
            h,
            v,
            quant_id: 0,
            blocks_w: mcus_x * h,
            blocks_h: mcus_y * v,
            coeffs: vec![[0i16; 64]; mcus_x * h * mcus_y * v],
        })
        .collect();
    st.frame = Some(Frame {
        width,
        height,
        hmax,
        vmax,
        components,
        quant: [[1; 64]; 4],
    });
    Ok(())
}

/// Decodes one scan; returns the byte position of the marker that ended it.
fn decode_scan(off: usize, payload: &[u8], data: &[u8], start: usize, st: &mut State) -> Result<usize, CodecError> {
    let frame = st
        .frame
        .as_mut()
        .ok_or_else(|| CodecError::parse(off, "scan before frame header"))?;
    let ns = usize::from(*payload.first().ok_or_else(|| CodecError::parse(off, "empty SOS"))?);
    if ns == 0 || ns > 4 || payload.len() != 4 + 2 * ns {
        return Err(CodecError::parse(off, "malformed SOS segment"));
    }
    let mut members = Vec::with_capacity(ns);
    for i in 0..ns {
        let cid = payload[1 + 2 * i];
        let tables = payload[2 + 2 * i];
        let idx = frame
            .components
            .iter()
            .position(|c| c.id == cid)
            .ok_or_else(|| CodecError::parse(off + 1 + 2 * i, format!("scan names unknown component {cid}")))?;
        let (td, ta) = (usize::from(tables >> 4), usize::from(tables & 0x0F));
        if td > 3 || ta > 3 || st.dc[td].is_none() || st.ac[ta].is_none() {
            return Err(CodecError::parse(off + 2 + 2 * i, "scan references undefined Huffman table"));
        }
        members.push((idx, td, ta));
    }
    let (ss, se) = (payload[1 + 2 * ns], payload[2 + 2 * ns]);
    if ss != 0 || se != 63 {
        return Err(CodecError::unsupported(off, "spectral selection (progressive scan)"));
    }

    let mut reader = BitReader::new(data, start);
    let mut pred = vec![0i32; ns];
    let interval = st.restart_interval;

    let units: Vec<Vec<(usize, usize, usize)>> = if ns == 1 {
        // Non-interleaved: blocks covering the component's own extent.
        let c = &frame.components[members[0].0];
        let cw = (frame.width * c.h).div_ceil(frame.hmax).div_ceil(8);
        let ch = (frame.height * c.v).div_ceil(frame.vmax).div_ceil(8);
        (0..ch)
            .flat_map(|by| (0..cw).map(move |bx| vec![(0usize, bx, by)]))
            .collect()
    } else {
        let mut units = Vec::with_capacity(frame.mcus_x() * frame.mcus_y());
        for my in 0..frame.mcus_y() {
            for mx in 0..frame.mcus_x() {
                let mut unit = Vec::new();
                for (k, &(idx, _, _)) in members.iter().enumerate() {
                    let c = &frame.components[idx];
                    for v in 0..c.v {
                        for h in 0..c.h {
                            unit.push((k, mx * c.h + h, my * c.v + v));
                        }
                    }
                }
                units.push(unit);
            }
        }
        units
    };

    for (n, unit) in units.iter().enumerate() {
        if interval > 0 && n > 0 && n % interval == 0 {
            reader.restart()?;
            pred.iter_mut().for_each(|p| *p = 0);
        }
        for &(k, bx, by) in unit {
            let (idx, td, ta) = members[k];
            let dc = st.dc[td].as_ref().expect("checked above");
            let ac = st.ac[ta].as_ref().expect("checked above");
            let comp = &mut frame.components[idx];
            let block = &mut comp.coeffs[by * comp.blocks_w + bx];
            decode_block(&mut reader, dc, ac, &mut pred[k], block)?;
        }
        if reader.exhausted {
            return Err(CodecError::parse(data.len(), "entropy-coded data truncated"));
        }
    }
    // Skip anything up to the next real marker (padding, trailing RST).
    let mut pos = reader.pos;
    while pos + 1 < data.len() && !(data[pos] == 0xFF && data[pos + 1] != 0x00 && !(0xD0..=0xD7).contains(&data[pos + 1])) {
        pos += 1;
    }
    if pos + 1 >= data.len() {
        return Err(CodecError::parse(data.len(), "stream truncated before EOI"));
    }
    Ok(pos)
}

fn decode_block(
    r: &mut BitReader<'_>,
    dc: &DecodeTable,
    ac: &DecodeTable,
    pred: &mut i32,
    block: &mut [i16; 64],
) -> Result<(), CodecError> {
    let size = r.decode(dc)?;
    if size > 11 {
        return Err(CodecError::parse(r.pos, "DC magnitude category above 11"));
    }
    *pred += r.receive_extend(size);
    block[0] = (*pred).clamp(i16::MIN.into(), i16::MAX.into()) as i16;
    let mut k = 1usize;
    while k < 64 {
        let rs = r.decode(ac)?;
        let (run, size) = (usize::from(rs >> 4), rs & 0x0F);
        if size == 0 {
            if run == 15 {
                k += 16;
                continue;
            }
            break;
        }
        k += run;
        if k > 63 {
            return Err(CodecError::parse(r.pos, "AC run past end of block"));
        }
        block[ZIGZAG[k]] = r.receive_extend(size).clamp(i16::MIN.into(), i16::MAX.into()) as i16;
        k += 1;
    }
    Ok(())
}

/// Lists every quantization table defined in a stream's DQT segments, in
/// stream order, as `(table id, natural-order entries)`.
pub fn read_quant_tables(data: &[u8]) -> Result<Vec<(u8, [u16; 64])>, CodecError> {
    let mut p = Parser { data, pos: 0 };
    if data.len() < 2 || data[0] != 0xFF || data[1] != SOI {
        return Err(CodecError::parse(0, "missing SOI marker"));
    }
    p.pos = 2;
    let mut found = Vec::new();
    loop {
        let (_, marker) = p.marker()?;
        match marker {
            DQT => {
                let (off, payload) = p.segment()?;
                let mut slots = [None; 4];
                parse_dqt(off, payload, &mut slots)?;
                // Preserve the order the tables appear in the segment.
                let mut rest = payload;
                while !rest.is_empty() {
                    let id = rest[0] & 0x0F;
                    let width = if rest[0] >> 4 == 0 { 1 } else { 2 };
                    found.push((id, slots[id as usize].expect("parsed above")));
                    rest = &rest[1 + 64 * width..];
                }
            }
            SOS | EOI => return Ok(found),
            0xD0..=0xD7 | 0x01 => {}
            _ => {
                p.segment()?;
            }
        }
    }
}
