//! Separable 8x8 DCT-II / DCT-III in single precision.
//!
//! `F = M f Mᵀ` and `f = Mᵀ F M` with `M[u][x] = C(u)/2 · cos((2x+1)uπ/16)`,
//! which is exactly the normalisation of the JPEG FDCT/IDCT definitions.

use std::sync::LazyLock;

static BASIS: LazyLock<[[f32; 8]; 8]> = LazyLock::new(|| {
    let mut m = [[0f32; 8]; 8];
    for (u, row) in m.iter_mut().enumerate() {
        let c = if u == 0 { std::f64::consts::FRAC_1_SQRT_2 } else { 1.0 };
        for (x, v) in row.iter_mut().enumerate() {
            let angle = (2 * x + 1) as f64 * u as f64 * std::f64::consts::PI / 16.0;
            *v = (0.5 * c * angle.cos()) as f32;
        }
    }
    m
});

static BASIS_T: LazyLock<[[f32; 8]; 8]> = LazyLock::new(|| {
    let m = &*BASIS;
    std::array::from_fn(|x| std::array::from_fn(|u| m[u][x]))
});

/// Forward DCT of a level-shifted block, natural order in and out.
pub fn forward(block: &[f32; 64]) -> [f32; 64] {
    let m = &*BASIS;
    let mut tmp = [0f32; 64];
    // columns: tmp[v][x] = sum_y M[v][y] f[y][x]
    for v in 0..8 {
        for y in 0..8 {
            let w = m[v][y];
            for x in 0..8 {
                tmp[v * 8 + x] += w * block[y * 8 + x];
            }
        }
    }
    let mt = &*BASIS_T;
    let mut out = [0f32; 64];
    // rows: out[v][u] = sum_x tmp[v][x] M[u][x]
    for v in 0..8 {
        for x in 0..8 {
            let w = tmp[v * 8 + x];
            for u in 0..8 {
                out[v * 8 + u] += w * mt[x][u];
            }
        }
    }
    out
}

/// Inverse DCT, natural order in and out (no level shift).
pub fn inverse(coeffs: &[f32; 64]) -> [f32; 64] {
    let m = &*BASIS;
    let mut tmp = [0f32; 64];
    // columns: tmp[y][u] = sum_v M[v][y] F[v][u]; all-zero rows of F are skipped
    for v in 0..8 {
        let row = &coeffs[v * 8..v * 8 + 8];
        if row.iter().all(|&c| c == 0.0) {
            continue;
        }
        for y in 0..8 {
            let w = m[v][y];
            for u in 0..8 {
                tmp[y * 8 + u] += w * row[u];
            }
        }
    }
    let mut out = [0f32; 64];
    // rows: out[y][x] = sum_u tmp[y][u] M[u][x]
    for y in 0..8 {
        for u in 0..8 {
            let w = tmp[y * 8 + u];
            for x in 0..8 {
                out[y * 8 + x] += w * m[u][x];
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_forward(f: &[f32; 64]) -> [f64; 64] {
        let c = |k: usize| if k == 0 { 1.0 / 2f64.sqrt() } else { 1.0 };
        let mut out = [0f64; 64];
        for v in 0..8 {
            for u in 0..8 {
                let mut acc = 0.0;
                for y in 0..8 {
                    for x in 0..8 {
                        acc += f[y * 8 + x] as f64
                            * (((2 * x + 1) * u) as f64 * std::f64::consts::PI / 16.0).cos()
                            * (((2 * y + 1) * v) as f64 * std::f64::consts::PI / 16.0).cos();
                    }
                }
                out[v * 8 + u] = 0.25 * c(u) * c(v) * acc;
            }
        }
        out
    }

    #[test]
    fn matches_the_defining_sum() {
        let block: [f32; 64] = std::array::from_fn(|i| ((i * 37 + 11) % 255) as f32 - 128.0);
        let fast = forward(&block);
        let slow = naive_forward(&block);
        for i in 0..64 {
            assert!((fast[i] as f64 - slow[i]).abs() < 1e-3, "coef {i}");
        }
    }

    #[test]
    fn inverse_undoes_forward() {
        let block: [f32; 64] = std::array::from_fn(|i| ((i * 91 + 3) % 256) as f32 - 128.0);
        let back = inverse(&forward(&block));
        for i in 0..64 {
            assert!((back[i] - block[i]).abs() < 1e-3);
        }
    }

    #[test]
    fn constant_block_is_dc_only() {
        let coeffs = forward(&[10.0; 64]);
        assert!((coeffs[0] - 80.0).abs() < 1e-4);
        assert!(coeffs[1..].iter().all(|c| c.abs() < 1e-4));
    }
}
