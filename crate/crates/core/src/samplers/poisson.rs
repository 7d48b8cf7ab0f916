//! Poisson initial field: a Poisson(intensity · Lebesgue) point count on a
//! box, with positions uniform in the box.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::model::SimBox;
use crate::Point;

/// Sample the initial particle positions on `bx` with the given intensity
/// (points per unit volume). Returns an empty vector when the expected
/// count is zero (zero intensity or degenerate box).
pub fn sample_poisson_field(intensity: f64, bx: &SimBox, rng: &mut impl Rng) -> Vec<Point> {
    assert!(intensity >= 0.0 && intensity.is_finite());
    let mean = intensity * bx.volume();
    if mean == 0.0 {
        return Vec::new();
    }
    let count = Poisson::new(mean).expect("positive finite mean").sample(rng) as usize;
    let mut pts = Vec::with_capacity(count);
    for _ in 0..count {
        let mut p: Point = [0.0; 3];
        for i in 0..bx.d as usize {
            p[i] = rng.gen_range(bx.lo[i]..=bx.hi[i]);
        }
        pts.push(p);
    }
    pts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplers::stream::ReplicaStreams;

    #[test]
    fn count_moments_match_poisson() {
        let bx = SimBox::centered(2, 2.0); // volume 16
        let intensity = 1.5;
        let lam = intensity * bx.volume();
        let streams = ReplicaStreams::new(5201);
        let n = 20_000;
        let counts: Vec<f64> = (0..n)
            .map(|r| sample_poisson_field(intensity, &bx, &mut streams.replica(r)).len() as f64)
            .collect();
        let mean = counts.iter().sum::<f64>() / n as f64;
        let var = counts.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / (n as f64 - 1.0);
        // Poisson: mean = var = λ. 4σ bands.
        assert!((mean - lam).abs() < 4.0 * (lam / n as f64).sqrt(), "mean {mean} vs {lam}");
        assert!((var - lam).abs() < 4.0 * lam * (2.0 / n as f64).sqrt() + 0.1, "var {var} vs {lam}");
    }

    #[test]
    fn positions_uniform_in_box() {
        let bx = SimBox { d: 3, lo: [-1.0, 0.0, 2.0], hi: [1.0, 4.0, 3.0] };
        let mut rng = ReplicaStreams::new(5202).replica(0);
        let mut all: Vec<Point> = Vec::new();
        while all.len() < 200_000 {
            all.extend(sample_poisson_field(2.0, &bx, &mut rng));
        }
        let n = all.len() as f64;
        for i in 0..3 {
            let (lo, hi) = (bx.lo[i], bx.hi[i]);
            let mid = 0.5 * (lo + hi);
            let width = hi - lo;
            let mean = all.iter().map(|p| p[i]).sum::<f64>() / n;
            let var = all.iter().map(|p| (p[i] - mid) * (p[i] - mid)).sum::<f64>() / n;
            assert!((mean - mid).abs() < 4.0 * width / (12.0f64 * n).sqrt(), "axis {i} mean");
            // Uniform variance w²/12.
            assert!((var - width * width / 12.0).abs() < 0.01 * width * width, "axis {i} var");
            assert!(all.iter().all(|p| p[i] >= lo && p[i] <= hi));
        }
    }

    #[test]
    fn zero_intensity_and_degenerate_box() {
        let mut rng = ReplicaStreams::new(5203).replica(0);
        let bx = SimBox::centered(1, 5.0);
        assert!(sample_poisson_field(0.0, &bx, &mut rng).is_empty());
        let degenerate = SimBox { d: 2, lo: [0.0; 3], hi: [0.0; 3] };
        assert!(sample_poisson_field(3.0, &degenerate, &mut rng).is_empty());
    }
}
