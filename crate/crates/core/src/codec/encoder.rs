//! 4:4:4 baseline encoder: colour transform, FDCT, quantization, entropy coding.

use super::frame::{reconstruct_block, rgb_to_ycc, round_i32, ycc_to_rgb, Component, Frame};
use super::huffman::{category, BitWriter, EncodeTable};
use super::tables::{AC_CHROMA, AC_LUMA, DC_CHROMA, DC_LUMA, ZIGZAG};
use super::{dct, QuantTables};
use crate::raster::RgbImage;

/// Forward-transformed blocks of a 4:4:4 image, before quantization.
#[derive(Debug, Clone)]
pub(crate) struct Spectrum {
    width: usize,
    height: usize,
    blocks_w: usize,
    blocks_h: usize,
    planes: [Vec<[f32; 64]>; 3],
}

impl Spectrum {
    /// Colour-converts, pads by edge replication and applies the FDCT.
    pub(crate) fn new(image: &RgbImage) -> Self {
        let (w, h) = image.dimensions();
        let blocks_w = w.div_ceil(8);
        let blocks_h = h.div_ceil(8);
        let stride = blocks_w * 8;
        let padded_h = blocks_h * 8;

        let mut samples = [vec![0u8; stride * padded_h], vec![0u8; stride * padded_h], vec![0u8; stride * padded_h]];
        let [ys, cbs, crs] = &mut samples;
        for (y, ((yr, cbr), crr)) in ys
            .chunks_exact_mut(stride)
            .zip(cbs.chunks_exact_mut(stride))
            .zip(crs.chunks_exact_mut(stride))
            .enumerate()
        {
            let sy = y.min(h - 1);
            let src = &image.data()[sy * w * 3..(sy + 1) * w * 3];
            for (x, px) in src.chunks_exact(3).enumerate() {
                let [a, b, c] = rgb_to_ycc(f32::from(px[0]), f32::from(px[1]), f32::from(px[2]));
                yr[x] = a;
                cbr[x] = b;
                crr[x] = c;
            }
            // Edge replication to the right of the image.
            for row in [yr, cbr, crr] {
                let last = row[w - 1];
                row[w..].fill(last);
            }
        }
        let planes = samples.map(|plane| {
            let mut blocks = Vec::with_capacity(blocks_w * blocks_h);
            for by in 0..blocks_h {
                for bx in 0..blocks_w {
                    let mut block = [0f32; 64];
                    for y in 0..8 {
                        let row = &plane[(by * 8 + y) * stride + bx * 8..][..8];
                        for x in 0..8 {
                            block[y * 8 + x] = f32::from(row[x]) - 128.0;
                        }
                    }
                    blocks.push(dct::forward(&block));
                }
            }
            blocks
        });
        Self {
            width: w,
            height: h,
            blocks_w,
            blocks_h,
            planes,
        }
    }

    /// Quantizes every block with the luma table for Y and chroma for Cb/Cr.
    pub(crate) fn quantize(&self, tables: &QuantTables) -> Frame {
        let quant = [tables.luma, tables.chroma, tables.chroma, tables.chroma];
        let components = self
            .planes
            .iter()
            .enumerate()
            .map(|(c, blocks)| {
                let table = &quant[c];
                let coeffs = blocks.iter().map(|freq| quantize_block(freq, table)).collect();
                Component {
                    id: c as u8 + 1,
                    h: 1,
                    v: 1,
                    quant_id: usize::from(c > 0),
                    blocks_w: self.blocks_w,
                    blocks_h: self.blocks_h,
                    coeffs,
                }
            })
            .collect();
        Frame {
            width: self.width,
            height: self.height,
            hmax: 1,
            vmax: 1,
            components,
            quant,
        }
    }
}

impl Spectrum {
    /// Same pixels as `self.quantize(tables).to_rgb()`, reconstructed one
    /// band of blocks at a time without keeping the coefficients.
    pub(crate) fn reconstruct(&self, tables: &QuantTables) -> RgbImage {
        let (w, h) = (self.width, self.height);
        let stride = self.blocks_w * 8;
        let quant = [&tables.luma, &tables.chroma, &tables.chroma];
        let mut out = Vec::with_capacity(w * h * 3);
        let mut band = [vec![0u8; stride * 8], vec![0u8; stride * 8], vec![0u8; stride * 8]];
        for by in 0..self.blocks_h {
            for c in 0..3 {
                for bx in 0..self.blocks_w {
                    let coeffs = quantize_block(&self.planes[c][by * self.blocks_w + bx], quant[c]);
                    let pixels = reconstruct_block(&coeffs, quant[c]);
                    for y in 0..8 {
                        band[c][y * stride + bx * 8..][..8].copy_from_slice(&pixels[y * 8..y * 8 + 8]);
                    }
                }
            }
            for y in 0..8.min(h - by * 8) {
                let rows = y * stride..y * stride + w;
                let (ys, cbs, crs) = (&band[0][rows.clone()], &band[1][rows.clone()], &band[2][rows]);
                for x in 0..w {
                    out.extend_from_slice(&ycc_to_rgb(f32::from(ys[x]), f32::from(cbs[x]), f32::from(crs[x])));
                }
            }
        }
        RgbImage::new(w, h, out).expect("spectrum dimensions are non-zero")
    }
}

#[inline]
fn quantize_block(freq: &[f32; 64], table: &[u16; 64]) -> [i16; 64] {
    std::array::from_fn(|i| {
        let limit = if i == 0 { 2047 } else { 1023 };
        round_i32(freq[i] / f32::from(table[i])).clamp(-limit, limit) as i16
    })
}

/// Colour-converts, transforms and quantizes `image` into a 4:4:4 frame.
pub(crate) fn quantize(image: &RgbImage, tables: &QuantTables) -> Frame {
    Spectrum::new(image).quantize(tables)
}

fn segment(out: &mut Vec<u8>, marker: u8, payload: &[u8]) {
    out.extend_from_slice(&[0xFF, marker]);
    out.extend_from_slice(&((payload.len() + 2) as u16).to_be_bytes());
    out.extend_from_slice(payload);
}

/// Serializes a 4:4:4 frame produced by [`quantize`].
pub(crate) fn write_stream(frame: &Frame, tables: &QuantTables) -> Vec<u8> {
    let mut out = Vec::with_capacity(frame.width * frame.height / 2 + 1024);
    out.extend_from_slice(&[0xFF, 0xD8]);
    // APP0 JFIF 1.01, no density, no thumbnail.
    segment(&mut out, 0xE0, &[b'J', b'F', b'I', b'F', 0, 1, 1, 0, 0, 1, 0, 1, 0, 0]);

    let mut dqt = Vec::with_capacity(130);
    for (id, table) in [&tables.luma, &tables.chroma].into_iter().enumerate() {
        dqt.push(id as u8);
        dqt.extend(ZIGZAG.iter().map(|&n| table[n] as u8));
    }
    segment(&mut out, 0xDB, &dqt);

    let mut sof = vec![8];
    sof.extend_from_slice(&(frame.height as u16).to_be_bytes());
    sof.extend_from_slice(&(frame.width as u16).to_be_bytes());
    sof.push(3);
    for c in &frame.components {
        sof.extend_from_slice(&[c.id, 0x11, c.quant_id as u8]);
    }
    segment(&mut out, 0xC0, &sof);

    let mut dht = Vec::new();
    for (class_id, spec) in [(0x00u8, &DC_LUMA), (0x10, &AC_LUMA), (0x01, &DC_CHROMA), (0x11, &AC_CHROMA)] {
        dht.push(class_id);
        dht.extend_from_slice(&spec.counts);
        dht.extend_from_slice(spec.symbols);
    }
    segment(&mut out, 0xC4, &dht);

    let mut sos = vec![3];
    for c in &frame.components {
        let t = if c.quant_id == 0 { 0x00 } else { 0x11 };
        sos.extend_from_slice(&[c.id, t]);
    }
    sos.extend_from_slice(&[0, 63, 0]);
    segment(&mut out, 0xDA, &sos);

    let luma = (EncodeTable::new(&DC_LUMA), EncodeTable::new(&AC_LUMA));
    let chroma = (EncodeTable::new(&DC_CHROMA), EncodeTable::new(&AC_CHROMA));
    let mut writer = BitWriter::new(out);
    let mut pred = [0i32; 3];
    let blocks = frame.components[0].coeffs.len();
    for b in 0..blocks {
        for (c, comp) in frame.components.iter().enumerate() {
            let (dc, ac) = if c == 0 { &luma } else { &chroma };
            encode_block(&mut writer, &comp.coeffs[b], &mut pred[c], dc, ac);
        }
    }
    let mut out = writer.finish();
    out.extend_from_slice(&[0xFF, 0xD9]);
    out
}

#[inline]
fn put_value(w: &mut BitWriter, v: i32, size: u8) {
    let bits = if v < 0 { v - 1 } else { v };
    w.put(bits as u32, size);
}

fn encode_block(w: &mut BitWriter, block: &[i16; 64], pred: &mut i32, dc: &EncodeTable, ac: &EncodeTable) {
    let value = i32::from(block[0]);
    let diff = value - *pred;
    *pred = value;
    let size = category(diff);
    let (code, len) = dc.get(size);
    w.put(u32::from(code), len);
    put_value(w, diff, size);

    let mut run = 0u8;
    for &n in &ZIGZAG[1..] {
        let v = i32::from(block[n]);
        if v == 0 {
            run += 1;
            continue;
        }
        while run >= 16 {
            let (code, len) = ac.get(0xF0);
            w.put(u32::from(code), len);
            run -= 16;
        }
        let size = category(v);
        let (code, len) = ac.get((run << 4) | size);
        w.put(u32::from(code), len);
        put_value(w, v, size);
        run = 0;
    }
    if run > 0 {
        let (code, len) = ac.get(0x00);
        w.put(u32::from(code), len);
    }
}
