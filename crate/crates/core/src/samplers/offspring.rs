//! Inverse-CDF sampling of the critical heavy-tailed offspring law.
//!
//! Draws inside the tabulated range use binary search on the cumulative
//! table; draws landing in the tail mass walk the exact probability
//! recurrence `p_{k+1} = p_k (k-1-β)/(k+1)` forward until the cumulative
//! sum covers the uniform draw, so the sampled law is the full untruncated
//! distribution, not a lumped-tail surrogate.

use rand::Rng;

use crate::model::OffspringLaw;

/// Hard stop for the tail walk. The mass beyond k = 2^30 is below 1e-13
/// for any β ∈ (0,1) (tail mass ~ k^{-(1+β)}·β/((1+β)Γ(1-β))), so bailing
/// out there biases the law at the level of the uniform draw's own
/// resolution.
const TAIL_WALK_CAP: u64 = 1 << 30;

/// Draw one offspring count.
pub fn sample_offspring(law: &OffspringLaw, rng: &mut impl Rng) -> u64 {
    let u: f64 = rng.gen();
    let cdf = &law.cdf;
    let top = *cdf.last().expect("offspring table is nonempty");
    if u < top {
        // First index with cdf[k] > u. Ties from p_1 = 0 resolve downward
        // (index 1 is unreachable, as it must be).
        return cdf.partition_point(|&c| c <= u) as u64;
    }
    // Tail walk beyond the table.
    let mut k = law.k_max() as u64;
    let mut p = law.pmf[law.k_max()];
    let mut acc = top;
    while k < TAIL_WALK_CAP {
        let kf = k as f64;
        p *= (kf - 1.0 - law.beta) / (kf + 1.0);
        k += 1;
        acc += p;
        if u < acc {
            return k;
        }
    }
    k
}
