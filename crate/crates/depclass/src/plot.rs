//! Training-curve plots rendered straight to PNG with an embedded 5x7 bitmap
//! font. No system fonts or float-dependent rasterizer are involved, so the
//! same history always produces byte-identical image files.

use std::path::Path;

use image::{ImageBuffer, Rgb, RgbImage};

use crate::error::{Error, Result};
use crate::nn::TrainingHistory;

const WIDTH: u32 = 900;
const HEIGHT: u32 = 360;
const BG: Rgb<u8> = Rgb([255, 255, 255]);
const AXIS: Rgb<u8> = Rgb([30, 30, 30]);
const GRID: Rgb<u8> = Rgb([220, 220, 220]);
const TRAIN: Rgb<u8> = Rgb([40, 90, 200]);
const VAL: Rgb<u8> = Rgb([220, 120, 40]);

/// Two panels (loss left, accuracy right), each with the train and
/// validation series; x ticks run 1..=epochs.
pub fn plot_curves(history: &TrainingHistory, path: &Path) -> Result<()> {
    let epochs = history.epochs();
    if epochs == 0 {
        return Err(Error::Invalid("history has no recorded epochs".into()));
    }
    let mut img: RgbImage = ImageBuffer::from_pixel(WIDTH, HEIGHT, BG);
    draw_panel(
        &mut img,
        Panel { x0: 60, y0: 40, x1: 420, y1: 290 },
        "loss",
        &history.train_loss,
        &history.val_loss,
    );
    draw_panel(
        &mut img,
        Panel { x0: 500, y0: 40, x1: 860, y1: 290 },
        "accuracy",
        &history.train_accuracy,
        &history.val_accuracy,
    );
    // Shared legend.
    fill_rect(&mut img, 330, 16, 8, 8, TRAIN);
    draw_text(&mut img, 342, 16, "train", AXIS);
    fill_rect(&mut img, 390, 16, 8, 8, VAL);
    draw_text(&mut img, 402, 16, "validation", AXIS);

    img.save(path)
        .map_err(|e| Error::Invalid(format!("cannot write plot {}: {e}", path.display())))
}

struct Panel {
    x0: u32,
    y0: u32,
    x1: u32,
    y1: u32,
}

fn draw_panel(img: &mut RgbImage, p: Panel, title: &str, train: &[f64], val: &[f64]) {
    let epochs = train.len();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in train.iter().chain(val) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || !hi.is_finite() {
        lo = 0.0;
        hi = 1.0;
    }
    if (hi - lo).abs() < 1e-12 {
        lo -= 0.5;
        hi += 0.5;
    }
    let pad = (hi - lo) * 0.05;
    let (lo, hi) = (lo - pad, hi + pad);

    let x_of = |epoch: usize| -> u32 {
        if epochs == 1 {
            (p.x0 + p.x1) / 2
        } else {
            p.x0 + ((epoch - 1) as f64 / (epochs - 1) as f64 * (p.x1 - p.x0) as f64) as u32
        }
    };
    let y_of = |v: f64| -> u32 {
        let frac = (v - lo) / (hi - lo);
        p.y1 - (frac * (p.y1 - p.y0) as f64) as u32
    };

    // Horizontal grid + y tick labels (5 ticks).
    for k in 0..=4 {
        let v = lo + (hi - lo) * k as f64 / 4.0;
        let y = y_of(v);
        hline(img, p.x0, p.x1, y, GRID);
        draw_text(img, p.x0.saturating_sub(46), y.saturating_sub(3), &format!("{v:>5.2}"), AXIS);
    }
    // Axes.
    vline(img, p.x0, p.y0, p.y1, AXIS);
    hline(img, p.x0, p.x1, p.y1, AXIS);
    draw_text(img, p.x0, p.y0.saturating_sub(18), title, AXIS);
    draw_text(img, (p.x0 + p.x1) / 2 - 14, p.y1 + 26, "epoch", AXIS);

    // X ticks: every epoch up to 12, then thinned.
    let step = epochs.div_ceil(12).max(1);
    for e in (1..=epochs).step_by(step) {
        let x = x_of(e);
        vline(img, x, p.y1, p.y1 + 3, AXIS);
        let label = e.to_string();
        draw_text(img, x.saturating_sub(label.len() as u32 * 3), p.y1 + 8, &label, AXIS);
    }

    for (series, color) in [(train, TRAIN), (val, VAL)] {
        let mut prev: Option<(u32, u32)> = None;
        for (i, &v) in series.iter().enumerate() {
            let pt = (x_of(i + 1), y_of(v));
            dot(img, pt.0, pt.1, color);
            if let Some(a) = prev {
                line(img, a, pt, color);
            }
            prev = Some(pt);
        }
    }
}

fn put(img: &mut RgbImage, x: u32, y: u32, c: Rgb<u8>) {
    if x < img.width() && y < img.height() {
        img.put_pixel(x, y, c);
    }
}

fn hline(img: &mut RgbImage, x0: u32, x1: u32, y: u32, c: Rgb<u8>) {
    for x in x0..=x1 {
        put(img, x, y, c);
    }
}

fn vline(img: &mut RgbImage, x: u32, y0: u32, y1: u32, c: Rgb<u8>) {
    for y in y0..=y1 {
        put(img, x, y, c);
    }
}

fn fill_rect(img: &mut RgbImage, x: u32, y: u32, w: u32, h: u32, c: Rgb<u8>) {
    for dy in 0..h {
        for dx in 0..w {
            put(img, x + dx, y + dy, c);
        }
    }
}

fn dot(img: &mut RgbImage, x: u32, y: u32, c: Rgb<u8>) {
    for dy in -1i64..=1 {
        for dx in -1i64..=1 {
            let (nx, ny) = (x as i64 + dx, y as i64 + dy);
            if nx >= 0 && ny >= 0 {
                put(img, nx as u32, ny as u32, c);
            }
        }
    }
}

/// Bresenham line between two points.
fn line(img: &mut RgbImage, a: (u32, u32), b: (u32, u32), c: Rgb<u8>) {
    let (mut x0, mut y0) = (a.0 as i64, a.1 as i64);
    let (x1, y1) = (b.0 as i64, b.1 as i64);
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        if x0 >= 0 && y0 >= 0 {
            put(img, x0 as u32, y0 as u32, c);
        }
        if x0 == x1 && y0 == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x0 += sx;
        }
        if e2 <= dx {
            err += dx;
            y0 += sy;
        }
    }
}

fn draw_text(img: &mut RgbImage, x: u32, y: u32, text: &str, c: Rgb<u8>) {
    let mut cx = x;
    for ch in text.chars() {
        let glyph = glyph_for(ch);
        for (row, bits) in glyph.iter().enumerate() {
            for col in 0..5 {
                if bits & (1 << (4 - col)) != 0 {
                    put(img, cx + col, y + row as u32, c);
                }
            }
        }
        cx += 6;
    }
}

/// 5x7 glyphs (row bits, leftmost pixel = bit 4) for digits, lowercase
/// letters, and the punctuation the plot labels need.
fn glyph_for(ch: char) -> [u8; 7] {
    match ch {
        '0' => [0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E],
        '1' => [0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E],
        '2' => [0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F],
        '3' => [0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E],
        '4' => [0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02],
        '5' => [0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E],
        '6' => [0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E],
        '7' => [0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08],
        '8' => [0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E],
        '9' => [0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C],
        'a' => [0x00, 0x00, 0x0E, 0x01, 0x0F, 0x11, 0x0F],
        'b' => [0x10, 0x10, 0x16, 0x19, 0x11, 0x11, 0x1E],
        'c' => [0x00, 0x00, 0x0E, 0x10, 0x10, 0x11, 0x0E],
        'd' => [0x01, 0x01, 0x0D, 0x13, 0x11, 0x11, 0x0F],
        'e' => [0x00, 0x00, 0x0E, 0x11, 0x1F, 0x10, 0x0E],
        'f' => [0x06, 0x09, 0x08, 0x1C, 0x08, 0x08, 0x08],
        'g' => [0x00, 0x0F, 0x11, 0x11, 0x0F, 0x01, 0x0E],
        'h' => [0x10, 0x10, 0x16, 0x19, 0x11, 0x11, 0x11],
        'i' => [0x04, 0x00, 0x0C, 0x04, 0x04, 0x04, 0x0E],
        'j' => [0x02, 0x00, 0x06, 0x02, 0x02, 0x12, 0x0C],
        'k' => [0x10, 0x10, 0x12, 0x14, 0x18, 0x14, 0x12],
        'l' => [0x0C, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E],
        'm' => [0x00, 0x00, 0x1A, 0x15, 0x15, 0x11, 0x11],
        'n' => [0x00, 0x00, 0x16, 0x19, 0x11, 0x11, 0x11],
        'o' => [0x00, 0x00, 0x0E, 0x11, 0x11, 0x11, 0x0E],
        'p' => [0x00, 0x00, 0x1E, 0x11, 0x1E, 0x10, 0x10],
        'q' => [0x00, 0x00, 0x0D, 0x13, 0x0F, 0x01, 0x01],
        'r' => [0x00, 0x00, 0x16, 0x19, 0x10, 0x10, 0x10],
        's' => [0x00, 0x00, 0x0E, 0x10, 0x0E, 0x01, 0x1E],
        't' => [0x08, 0x08, 0x1C, 0x08, 0x08, 0x09, 0x06],
        'u' => [0x00, 0x00, 0x11, 0x11, 0x11, 0x13, 0x0D],
        'v' => [0x00, 0x00, 0x11, 0x11, 0x11, 0x0A, 0x04],
        'w' => [0x00, 0x00, 0x11, 0x11, 0x15, 0x15, 0x0A],
        'x' => [0x00, 0x00, 0x11, 0x0A, 0x04, 0x0A, 0x11],
        'y' => [0x00, 0x00, 0x11, 0x11, 0x0F, 0x01, 0x0E],
        'z' => [0x00, 0x00, 0x1F, 0x02, 0x04, 0x08, 0x1F],
        '.' => [0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C],
        '-' => [0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00],
        _ => [0x00; 7],
    }
}
