use super::cost::CostVolume;
use super::interval::DisparityInterval;
use crate::error::Result;
use crate::types::{DisparityMap, VarianceMap};

/// Winner-take-all over each pixel's interval; ties go to the smaller
/// disparity. The output may hold `d = 0` winners; the pipeline drops those.
pub fn select_disparity(aggregated: &CostVolume) -> Result<DisparityMap> {
    let (w, h) = aggregated.dims();
    let mut map = DisparityMap::invalid(w, h)?;
    for i in 0..aggregated.pixel_count() {
        if let Some(d) = winner(aggregated.costs_at(i), aggregated.interval_at(i)) {
            map.set_index(i, f64::from(d));
        }
    }
    Ok(map)
}

/// Index-of-minimum with the smaller disparity winning ties.
pub fn winner(costs: &[u32], iv: DisparityInterval) -> Option<u32> {
    let (k, _) = costs
        .iter()
        .enumerate()
        .min_by(|(ka, a), (kb, b)| a.cmp(b).then(ka.cmp(kb)))?;
    Some(iv.lo + k as u32)
}

/// Matching variance from the cost profile around the winner.
///
/// Costs are taken relative to the winner. Walking outward from `d*` on each
/// side, neighbours are counted while the running sum of their relative costs
/// stays below `s_max`; the walk also stops at the interval bound. The
/// variance is the total count, floored at `r_min`.
pub fn matching_variance(
    costs: &[u32],
    iv: DisparityInterval,
    d_star: u32,
    s_max: f64,
    r_min: f64,
) -> f64 {
    assert!(iv.contains(d_star), "winner {d_star} outside {iv:?}");
    let k_star = (d_star - iv.lo) as usize;
    let base = costs[k_star];
    let count = |it: &mut dyn Iterator<Item = &u32>| -> usize {
        let mut sum = 0f64;
        let mut n = 0;
        for &c in it {
            sum += f64::from(c.saturating_sub(base));
            if sum < s_max {
                n += 1;
            } else {
                break;
            }
        }
        n
    };
    let n_left = count(&mut costs[..k_star].iter().rev());
    let n_right = count(&mut costs[k_star + 1..].iter());
    ((n_left + n_right) as f64).max(r_min)
}

/// Per-pixel matching variance for the selected disparities.
pub fn variance_map(
    aggregated: &CostVolume,
    selected: &DisparityMap,
    s_max: f64,
    r_min: f64,
) -> VarianceMap {
    let (w, h) = selected.dims();
    let mut out = VarianceMap::zeros(w, h).expect("dimensions come from a valid map");
    for (x, y, d) in selected.iter_valid() {
        let i = y * w + x;
        out.set_index(
            i,
            matching_variance(aggregated.costs_at(i), aggregated.interval_at(i), d as u32, s_max, r_min),
        );
    }
    out
}
