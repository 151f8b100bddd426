use super::cost::View;
use crate::types::{DisparityMap, GrayImage, ValidityMask};

fn cross_check(
    source: &DisparityMap,
    other: &DisparityMap,
    tolerance: f64,
    view: View,
) -> ValidityMask {
    let (w, h) = source.dims();
    let mut mask = ValidityMask::filled(w, h, false);
    for (x, y, d) in source.iter_valid() {
        let Some(tx) = view.target_x(x, d.round() as u32, w) else {
            continue;
        };
        if let Some(od) = other.get(tx, y) {
            if (d - od).abs() <= tolerance {
                mask.set(x, y, true);
            }
        }
    }
    mask
}

/// Left-right consistency: a left pixel survives when the right map holds a
/// valid disparity within `tolerance` at `x - round(d)`; the right mask is
/// built symmetrically at `x + round(d)`. Returns `(left_mask, right_mask)`.
pub fn lr_consistency(
    left: &DisparityMap,
    right: &DisparityMap,
    tolerance: f64,
) -> (ValidityMask, ValidityMask) {
    assert_eq!(left.dims(), right.dims(), "left and right maps differ in size");
    (
        cross_check(left, right, tolerance, View::Left),
        cross_check(right, left, tolerance, View::Right),
    )
}

/// Photometric check of a disparity map: the windowed SAD between the
/// reference patch and the disparity-shifted patch must not exceed
/// `threshold`. Pixels whose shifted centre leaves the image are rejected.
pub fn sad_check(
    left: &GrayImage,
    right: &GrayImage,
    disparity: &DisparityMap,
    window: usize,
    threshold: u32,
    view: View,
) -> ValidityMask {
    assert_eq!(left.dims(), disparity.dims(), "image and map differ in size");
    let (reference, target) = match view {
        View::Left => (left, right),
        View::Right => (right, left),
    };
    let (w, h) = disparity.dims();
    let half = (window / 2) as isize;
    let mut mask = ValidityMask::filled(w, h, false);
    for (x, y, d) in disparity.iter_valid() {
        let Some(tx) = view.target_x(x, d.round() as u32, w) else {
            continue;
        };
        let mut sad = 0u32;
        for dy in -half..=half {
            let yy = y as isize + dy;
            for dx in -half..=half {
                let a = reference.get_clamped(x as isize + dx, yy);
                let b = target.get_clamped(tx as isize + dx, yy);
                sad += u32::from(a.abs_diff(b));
            }
        }
        if sad <= threshold {
            mask.set(x, y, true);
        }
    }
    mask
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lr_agreement_and_violation() {
        let mut l = DisparityMap::invalid(120, 60).unwrap();
        let mut r = DisparityMap::invalid(120, 60).unwrap();
        l.set(100, 50, 20.0);
        r.set(80, 50, 20.0);
        let (ml, mr) = lr_consistency(&l, &r, 1.0);
        assert!(ml.get(100, 50));
        assert!(mr.get(80, 50));

        r.set(80, 50, 15.0);
        let (ml, mr) = lr_consistency(&l, &r, 1.0);
        assert!(!ml.get(100, 50));
        assert!(!mr.get(80, 50));
    }

    #[test]
    fn lr_off_image_rejected() {
        let mut l = DisparityMap::invalid(30, 4).unwrap();
        let r = DisparityMap::from_fn(30, 4, |_, _| Some(12.0)).unwrap();
        l.set(5, 2, 12.0);
        let (ml, mr) = lr_consistency(&l, &r, 1.0);
        assert!(!ml.get(5, 2));
        // Right pixels at x >= 18 look past the left image edge.
        assert!(!mr.get(20, 2));
    }

    fn texture(w: usize, h: usize) -> GrayImage {
        GrayImage::from_fn(w, h, |x, y| {
            let v = (x as u32).wrapping_mul(2654435761) ^ (y as u32).wrapping_mul(40503);
            (v.wrapping_mul(2246822519) >> 24) as u8
        })
        .unwrap()
    }

    #[test]
    fn sad_identical_zero_shift() {
        let img = texture(16, 8);
        let d = DisparityMap::from_fn(16, 8, |_, _| Some(0.0)).unwrap();
        assert_eq!(sad_check(&img, &img, &d, 3, 0, View::Left).kept(), 16 * 8);
    }

    #[test]
    fn sad_shifted_pair() {
        let (w, h) = (40, 10);
        let right = texture(w, h);
        let left = GrayImage::from_fn(w, h, |x, y| right.get_clamped(x as isize - 7, y as isize)).unwrap();
        let good = DisparityMap::from_fn(w, h, |x, _| (8..w - 1).contains(&x).then_some(7.0)).unwrap();
        let m = sad_check(&left, &right, &good, 3, 0, View::Left);
        assert_eq!(m.kept(), good.valid_count());

        let zero = DisparityMap::from_fn(w, h, |x, _| (x >= 8).then_some(0.0)).unwrap();
        let m = sad_check(&left, &right, &zero, 3, 100, View::Left);
        assert!(m.kept() < zero.valid_count() / 10);
    }

    #[test]
    fn sad_off_image_rejected() {
        let img = texture(16, 8);
        let d = DisparityMap::from_fn(16, 8, |x, _| (x < 3).then_some(5.0)).unwrap();
        assert_eq!(sad_check(&img, &img, &d, 3, u32::MAX, View::Left).kept(), 0);
    }
}
