use super::cost::CostVolume;
use super::interval::DisparityInterval;

/// The eight scan directions `(dx, dy)`; the predecessor of `(x, y)` along a
/// direction is `(x - dx, y - dy)`.
pub const DIRECTIONS: [(isize, isize); 8] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (-1, -1),
    (1, -1),
    (-1, 1),
];

/// One step of the path recurrence over restricted intervals.
///
/// `prev` holds the predecessor's path costs over `prev_iv`. Disparities
/// outside an interval behave as infinite cost.
#[inline]
fn path_step(
    raw: &[u32],
    iv: DisparityInterval,
    prev: &[u32],
    prev_iv: DisparityInterval,
    p1: u32,
    p2: u32,
    out: &mut [u32],
) {
    let min_prev = prev.iter().copied().min().unwrap_or(0);
    let jump = min_prev + p2;
    let at = |d: i64| -> Option<u32> {
        if d >= i64::from(prev_iv.lo) && d <= i64::from(prev_iv.hi) {
            Some(prev[(d - i64::from(prev_iv.lo)) as usize])
        } else {
            None
        }
    };
    for (k, d) in (iv.lo..=iv.hi).enumerate() {
        let d = i64::from(d);
        let mut best = jump;
        if let Some(v) = at(d) {
            best = best.min(v);
        }
        if let Some(v) = at(d - 1) {
            best = best.min(v + p1);
        }
        if let Some(v) = at(d + 1) {
            best = best.min(v + p1);
        }
        out[k] = raw[k] + best - min_prev;
    }
}

fn accumulate_direction(volume: &CostVolume, (dx, dy): (isize, isize), p1: u32, p2: u32, sum: &mut [u32]) {
    let (w, h) = volume.dims();
    let offsets = volume.offsets();
    let row_start = |y: usize| offsets[y * w];
    let ys: Vec<usize> = if dy >= 0 { (0..h).collect() } else { (0..h).rev().collect() };
    let xs: Vec<usize> = if dx >= 0 { (0..w).collect() } else { (0..w).rev().collect() };

    let mut prev_row: Vec<u32> = Vec::new();
    let mut cur_row: Vec<u32> = Vec::new();
    let mut pred_buf: Vec<u32> = Vec::new();
    let mut prev_y: Option<usize> = None;

    for &y in &ys {
        let base = row_start(y);
        cur_row.clear();
        cur_row.resize(offsets[(y + 1) * w] - base, 0);
        for &x in &xs {
            let i = y * w + x;
            let (lo, hi) = (offsets[i] - base, offsets[i + 1] - base);
            let raw = volume.costs_at(i);
            let iv = volume.interval_at(i);
            let px = x as isize - dx;
            let py = y as isize - dy;
            let has_pred = px >= 0 && (px as usize) < w && py >= 0 && (py as usize) < h;
            if !has_pred {
                cur_row[lo..hi].copy_from_slice(raw);
            } else {
                let (px, py) = (px as usize, py as usize);
                let j = py * w + px;
                let prev_iv = volume.interval_at(j);
                pred_buf.clear();
                if dy == 0 {
                    pred_buf.extend_from_slice(&cur_row[offsets[j] - base..offsets[j + 1] - base]);
                } else {
                    debug_assert_eq!(prev_y, Some(py));
                    let pbase = row_start(py);
                    pred_buf.extend_from_slice(&prev_row[offsets[j] - pbase..offsets[j + 1] - pbase]);
                }
                path_step(raw, iv, &pred_buf, prev_iv, p1, p2, &mut cur_row[lo..hi]);
            }
        }
        for (s, v) in sum[base..base + cur_row.len()].iter_mut().zip(&cur_row) {
            *s += *v;
        }
        std::mem::swap(&mut prev_row, &mut cur_row);
        prev_y = Some(y);
    }
}

/// Sums the eight path costs
/// `L_r(p, d) = C(p, d) + min(L_r(p-r, d), L_r(p-r, d±1) + P1, min L_r(p-r, ·) + P2) - min L_r(p-r, ·)`
/// over each pixel's own interval.
pub fn aggregate_paths(volume: &CostVolume, p1: u32, p2: u32) -> CostVolume {
    let mut out = CostVolume::zeros(volume.intervals().clone());
    let sum = out.raw_mut();
    for dir in DIRECTIONS {
        accumulate_direction(volume, dir, p1, p2, sum);
    }
    out
}
