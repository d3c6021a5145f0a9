//! Binary morphology with square structuring elements.
//!
//! Neighbourhoods are clipped to the image: pixels outside the frame are
//! ignored rather than treated as background or foreground.

use crate::raster::Mask;

fn sweep(mask: &Mask, radius: usize, dilate: bool) -> Mask {
    if radius == 0 {
        return mask.clone();
    }
    let (w, h) = (mask.width(), mask.height());
    // Separable: a square element is a horizontal pass followed by a vertical one.
    let mut rows = Mask::new(w, h);
    for y in 0..h {
        for x in 0..w {
            let (lo, hi) = (x.saturating_sub(radius), (x + radius).min(w - 1));
            let hit = if dilate {
                (lo..=hi).any(|i| mask.get(i, y))
            } else {
                (lo..=hi).all(|i| mask.get(i, y))
            };
            rows.set(x, y, hit);
        }
    }
    let mut out = Mask::new(w, h);
    for y in 0..h {
        let (lo, hi) = (y.saturating_sub(radius), (y + radius).min(h - 1));
        for x in 0..w {
            let hit = if dilate {
                (lo..=hi).any(|j| rows.get(x, j))
            } else {
                (lo..=hi).all(|j| rows.get(x, j))
            };
            out.set(x, y, hit);
        }
    }
    out
}

pub fn dilate(mask: &Mask, radius: usize) -> Mask {
    sweep(mask, radius, true)
}

pub fn erode(mask: &Mask, radius: usize) -> Mask {
    sweep(mask, radius, false)
}

pub fn open(mask: &Mask, radius: usize) -> Mask {
    dilate(&erode(mask, radius), radius)
}

pub fn close(mask: &Mask, radius: usize) -> Mask {
    erode(&dilate(mask, radius), radius)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::Rect;

    #[test]
    fn opening_removes_specks_and_keeps_blocks() {
        let mut m = Mask::from_rect(40, 30, Rect::new(10, 5, 10, 10));
        m.set(2, 2, true);
        m.set(30, 20, true);
        m.set(31, 20, true);
        let opened = open(&m, 1);
        assert_eq!(opened, Mask::from_rect(40, 30, Rect::new(10, 5, 10, 10)));
    }

    #[test]
    fn closing_fills_pinholes() {
        let mut m = Mask::from_rect(20, 20, Rect::new(4, 4, 8, 8));
        m.set(7, 7, false);
        assert_eq!(close(&m, 1), Mask::from_rect(20, 20, Rect::new(4, 4, 8, 8)));
    }

    #[test]
    fn rectangles_survive_open_and_close() {
        for rect in [Rect::new(0, 0, 3, 3), Rect::new(5, 6, 64, 64), Rect::new(70, 60, 10, 10)] {
            let m = Mask::from_rect(80, 70, rect);
            assert_eq!(close(&open(&m, 1), 1), m, "{rect}");
        }
    }

    #[test]
    fn dilation_grows_by_radius() {
        let m = Mask::from_rect(40, 40, Rect::new(10, 10, 10, 10));
        assert_eq!(dilate(&m, 4), Mask::from_rect(40, 40, Rect::new(6, 6, 18, 18)));
        assert_eq!(erode(&dilate(&m, 4), 4), m);
    }
}
