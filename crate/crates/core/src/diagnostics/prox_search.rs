use crate::penalty::Penalty;

/// Grid points per refinement level.
const GRID: usize = 2001;
/// Final grid spacing.
const RESOLUTION: f64 = 1e-8;

/// `argmin_z h(z) + (v - z)^2 / (2 gamma)` for a one-dimensional penalty,
/// found by grid search with repeated refinement around the best point.
/// Independent of the closed-form proximal operators.
pub fn brute_force_prox(penalty: &Penalty, gamma: f64, v: f64) -> f64 {
    let objective = |z: f64| penalty.block_value(&[z]) + (v - z) * (v - z) / (2.0 * gamma);
    // Points that must always be candidates: kinks and box ends.
    let mut anchors = vec![0.0, v];
    if let Penalty::Box { lo, hi } = *penalty {
        anchors.extend([lo, hi].into_iter().filter(|b| b.is_finite()));
    }
    let span = anchors.iter().fold(1.0_f64, |m, a| m.max(a.abs()));
    let (mut lo, mut hi) = (-2.0 * span - 1.0, 2.0 * span + 1.0);
    let mut best = v;
    let mut best_value = objective(v);
    loop {
        let step = (hi - lo) / (GRID - 1) as f64;
        let grid = (0..GRID).map(|k| lo + k as f64 * step);
        for z in grid.chain(anchors.iter().copied()) {
            let value = objective(z);
            if value < best_value {
                best = z;
                best_value = value;
            }
        }
        if step <= RESOLUTION {
            return best;
        }
        lo = best - 2.0 * step;
        hi = best + 2.0 * step;
    }
}
