//! Critical percolation conditioned on a long arm.
//!
//! The incipient infinite cluster is the `N → ∞` limit of `ℙ_{p_c}[· | 0 ↔ ∂B(N)]`.
//! Everything here works at finite `N`: one-arm probabilities `π(n)`,
//! box-to-boundary probabilities `ρ(m, N) = ℙ_{p_c}[B(m) ↔ ∂B(N)]`, a
//! rejection sampler for the conditioned measure, the quasi-multiplicativity
//! constant and the annulus event `E(n) = {all edges of Ann(n, 2n) open}`.

use crate::connectivity::{box_reaches, origin_reaches};
use crate::error::Error;
use crate::field::{check_probability, threshold, Configuration, EdgeWeights, ForcedOpen, SeededField};
use crate::lattice::{Annulus, BoxSpec, Window};
use crate::rng::SeedSpec;
use crate::stats::{estimate_proportion, product_estimate, ratio_estimate, scale_estimate, Estimate, Executor};
use crate::Params;

pub const ONE_ARM_TAG: &str = "one-arm";
pub const BOX_ARM_TAG: &str = "box-arm";
pub const CONDITIONED_TAG: &str = "conditioned-arm";
pub const IIC_TAG: &str = "iic";

pub const DEFAULT_ATTEMPT_CAP: u64 = 1_000_000;

/// `π(n) = ℙ_p[0 ↔ ∂B(n)]`.
pub fn one_arm_probability<X: Executor + ?Sized>(
    exec: &X,
    n: u32,
    p: f64,
    replicas: u64,
    seed: SeedSpec,
    confidence: f64,
) -> Result<Estimate, Error> {
    check_probability(p)?;
    let region = BoxSpec::new(n)?;
    if n == 0 {
        return Err(Error::EmptyBoundary);
    }
    estimate_proportion(exec, replicas, seed, confidence, |s| {
        origin_reaches(&SeededField::new(region, s).at_level(p), n).expect("radius inside region")
    })
}

/// `ρ(inner, outer) = ℙ_p[B(inner) ↔ ∂B(outer)]`; exactly 1 when `inner ≥ outer`.
pub fn box_arm_probability<X: Executor + ?Sized>(
    exec: &X,
    inner: u32,
    outer: u32,
    p: f64,
    replicas: u64,
    seed: SeedSpec,
    confidence: f64,
) -> Result<Estimate, Error> {
    check_probability(p)?;
    if inner >= outer {
        return Ok(Estimate::exact(1.0));
    }
    let region = BoxSpec::new(outer)?;
    estimate_proportion(exec, replicas, seed, confidence, |s| {
        box_reaches(&SeededField::new(region, s).at_level(p), inner, outer).expect("radii checked")
    })
}

/// `ℙ_p[0 ↔ ∂B(N) | E(n)]`, sampled with the annulus edges forced open.
///
/// By independence `ℙ[E(n), 0 ↔ ∂B(N)] = p^{|Ann(n,2n)|} · ℙ[0 ↔ ∂B(N) | E(n)]`.
pub fn conditional_arm_probability<X: Executor + ?Sized>(
    exec: &X,
    n: u32,
    big_n: u32,
    p: f64,
    replicas: u64,
    seed: SeedSpec,
    confidence: f64,
) -> Result<Estimate, Error> {
    check_probability(p)?;
    let annulus = Annulus::doubling(n)?;
    if big_n < annulus.outer() {
        return Err(Error::InvalidParameter("conditioning radius must be at least 2n"));
    }
    let region = BoxSpec::new(big_n)?;
    let window = Window::Annulus(annulus);
    estimate_proportion(exec, replicas, seed, confidence, |s| {
        let field = SeededField::new(region, s);
        let view = field.at_level(p);
        origin_reaches(&ForcedOpen { base: &view, window }, big_n).expect("radius inside region")
    })
}

/// A configuration on `B(N)` drawn from `ℙ_{p_c}[· | 0 ↔ ∂B(N)]`.
#[derive(Clone, Debug)]
pub struct ConditionedSample {
    pub config: Configuration,
    pub radius: u32,
    /// The conditioning event, re-checked on the returned configuration.
    pub accepted: bool,
    pub attempts: u64,
    pub seed: SeedSpec,
}

/// Rejection sampling: attempt `i` uses the `i`-th child stream of the
/// replica key, so the accepted attempt is fixed by the seed.
pub fn iic_rejection_sample(big_n: u32, p: f64, seed: SeedSpec, attempt_cap: u64) -> Result<ConditionedSample, Error> {
    check_probability(p)?;
    if big_n == 0 {
        return Err(Error::EmptyBoundary);
    }
    let region = BoxSpec::new(big_n)?;
    let key = seed.key();
    for attempt in 0..attempt_cap {
        let field = SeededField::with_key(region, seed, key.child(attempt));
        if origin_reaches(&field.at_level(p), big_n)? {
            let config = threshold(&field, p)?;
            let accepted = origin_reaches(&config, big_n)?;
            return Ok(ConditionedSample { config, radius: big_n, accepted, attempts: attempt + 1, seed });
        }
    }
    Err(Error::AttemptCapExceeded { attempts: attempt_cap })
}

/// The three factors of the quasi-multiplicativity display and
/// `Ĉ = π(n) ρ(2n, N) / π(N)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuasiMult {
    pub n: u32,
    pub big_n: u32,
    pub pi_n: Estimate,
    pub rho: Estimate,
    pub pi_big: Estimate,
    pub c_hat: Estimate,
}

impl QuasiMult {
    /// `Ĉ ≥ 1` within the interval.
    pub fn left_inequality_holds(&self) -> bool {
        self.c_hat.upper >= 1.0
    }
}

/// The three probabilities use distinct tags so their estimates are
/// independent, as the ratio interval assumes.
pub fn quasi_mult_constant<X: Executor + ?Sized>(
    exec: &X,
    n: u32,
    big_n: u32,
    replicas: u64,
    seed: SeedSpec,
    params: &Params,
) -> Result<QuasiMult, Error> {
    if n == 0 {
        return Err(Error::EmptyBoundary);
    }
    if big_n < 2 * n {
        return Err(Error::InvalidParameter("quasi-multiplicativity needs N >= 2n"));
    }
    let (p, conf) = (params.p_c, params.confidence);
    let pi_n = one_arm_probability(exec, n, p, replicas, seed.with_tag("qm-small"), conf)?;
    let rho = box_arm_probability(exec, 2 * n, big_n, p, replicas, seed.with_tag("qm-box"), conf)?;
    let pi_big = one_arm_probability(exec, big_n, p, replicas, seed.with_tag("qm-large"), conf)?;
    let c_hat = ratio_estimate(&product_estimate(&pi_n, &rho), &pi_big)?;
    Ok(QuasiMult { n, big_n, pi_n, rho, pi_big, c_hat })
}

/// Conservative constant for bounds at scales that were not measured:
/// the largest upper confidence bound over the measured pairs.
pub fn validated_c_hat(measured: &[QuasiMult]) -> Option<f64> {
    measured.iter().map(|q| q.c_hat.upper).reduce(f64::max)
}

/// Estimate of `ν[E(n)]` at conditioning radius `N`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NuEstimate {
    pub annulus: Annulus,
    pub big_n: u32,
    /// `ln p_c^{|Ann(n,2n)|}`.
    pub ln_prefactor: f64,
    pub conditional: Estimate,
    pub one_arm: Estimate,
    /// `ℙ[0 ↔ ∂B(N) | E(n)] / π(N)`; the estimate is this times the prefactor.
    pub ratio: Estimate,
    pub nu: Estimate,
}

impl NuEstimate {
    pub fn prefactor(&self) -> f64 {
        libm::exp(self.ln_prefactor)
    }

    pub fn lower_bound(&self) -> f64 {
        self.prefactor()
    }

    pub fn upper_bound(&self, c_hat: f64) -> f64 {
        c_hat * self.prefactor()
    }

    /// `p_c^{|Ann|} ≤ ν̂ ≤ Ĉ p_c^{|Ann|}` within the intervals of `ν̂` and `Ĉ`.
    pub fn sandwich_holds(&self, c_hat: &Estimate) -> bool {
        self.ratio.upper >= 1.0 && self.ratio.lower <= c_hat.upper
    }

    pub fn positive(&self) -> bool {
        self.nu.lower > 0.0
    }
}

pub fn nu_annulus_estimate<X: Executor + ?Sized>(
    exec: &X,
    n: u32,
    big_n: u32,
    replicas: u64,
    seed: SeedSpec,
    params: &Params,
) -> Result<NuEstimate, Error> {
    let annulus = Annulus::doubling(n)?;
    if big_n < 4 * n {
        return Err(Error::InvalidParameter("conditioning radius must be at least 4n"));
    }
    let (p, conf) = (params.p_c, params.confidence);
    let conditional = conditional_arm_probability(exec, n, big_n, p, replicas, seed.with_tag(CONDITIONED_TAG), conf)?;
    let one_arm = one_arm_probability(exec, big_n, p, replicas, seed.with_tag(ONE_ARM_TAG), conf)?;
    let ratio = ratio_estimate(&conditional, &one_arm)?;
    let ln_prefactor = annulus.edge_count() as f64 * libm::log(p);
    let nu = scale_estimate(&ratio, libm::exp(ln_prefactor));
    Ok(NuEstimate { annulus, big_n, ln_prefactor, conditional, one_arm, ratio, nu })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connectivity::cluster_of;
    use crate::field::OpenEdges;
    use crate::lattice::{Edge, Vertex};
    use crate::stats::{wilson_interval, Sequential};

    const C: f64 = 0.997;

    fn s(tag: &'static str) -> SeedSpec {
        SeedSpec::new(11, tag)
    }

    #[test]
    fn one_arm_first_shell() {
        let e = one_arm_probability(&Sequential, 1, 0.5, 20_000, s(ONE_ARM_TAG), C).unwrap();
        assert!(e.contains(15.0 / 16.0), "{e:?}");
    }

    #[test]
    fn one_arm_decreases_under_coupling() {
        // the same tag couples the fields; {0 ↔ ∂B(16)} ⊂ {0 ↔ ∂B(8)}
        let a = one_arm_probability(&Sequential, 8, 0.5, 2_000, s(ONE_ARM_TAG), C).unwrap();
        let b = one_arm_probability(&Sequential, 16, 0.5, 2_000, s(ONE_ARM_TAG), C).unwrap();
        assert!(b.value < a.value);
    }

    #[test]
    fn box_arm_degenerate() {
        let e = box_arm_probability(&Sequential, 8, 8, 0.5, 10, s(BOX_ARM_TAG), C).unwrap();
        assert_eq!(e.value, 1.0);
        assert_eq!(e.half_width(), 0.0);
    }

    #[test]
    fn forcing_open_helps() {
        let seed = s(CONDITIONED_TAG);
        let forced = conditional_arm_probability(&Sequential, 2, 4, 0.5, 2_000, seed, C).unwrap();
        let plain = one_arm_probability(&Sequential, 4, 0.5, 2_000, seed, C).unwrap();
        // same fields: forcing edges open can only add successes
        assert!(forced.successes.unwrap() >= plain.successes.unwrap());
        assert!(forced.value > plain.value);
    }

    #[test]
    fn rejection_first_shell_rate() {
        let mut attempts = 0;
        let samples = 4_000;
        for r in 0..samples {
            let smp = iic_rejection_sample(1, 0.5, s(IIC_TAG).with_replica(r), DEFAULT_ATTEMPT_CAP).unwrap();
            assert!(smp.accepted);
            attempts += smp.attempts;
        }
        let rate = wilson_interval(samples, attempts, C).unwrap();
        assert!(rate.contains(15.0 / 16.0), "{rate:?}");
    }

    #[test]
    fn rejection_cap() {
        // p = 0 never connects
        let err = iic_rejection_sample(2, 0.0, s(IIC_TAG), 50).unwrap_err();
        assert_eq!(err, Error::AttemptCapExceeded { attempts: 50 });
    }

    #[test]
    fn rejection_rate_matches_one_arm() {
        let n = 32;
        let samples = 300;
        let mut attempts = 0;
        for r in 0..samples {
            let smp = iic_rejection_sample(n, 0.5, s(IIC_TAG).with_replica(r), DEFAULT_ATTEMPT_CAP).unwrap();
            assert!(smp.accepted);
            assert!(cluster_of(&smp.config, Vertex::ORIGIN).unwrap().vertices().iter().any(|v| v.norm() == n));
            attempts += smp.attempts;
        }
        let pi = one_arm_probability(&Sequential, n, 0.5, 20_000, s(ONE_ARM_TAG), C).unwrap();
        let rate = wilson_interval(samples, attempts, C).unwrap();
        assert!(rate.lower <= pi.upper && pi.lower <= rate.upper, "{rate:?} vs {pi:?}");
    }

    /// Exact `ℙ[cylinder | 0 ↔ ∂B(2)]` at p = 1/2 by enumerating the edges
    /// that can matter: the 16 edges of the outer ring never change whether
    /// the origin reaches it, nor the cylinder.
    fn enumerate_b2(cylinder: &[Edge]) -> f64 {
        let region = BoxSpec::new(2).unwrap();
        let relevant: alloc::vec::Vec<Edge> = region.edges().filter(|e| e.a().norm() < 2 || e.b().norm() < 2).collect();
        assert_eq!(relevant.len(), 24);
        let cyl: u32 = cylinder.iter().map(|c| 1 << relevant.iter().position(|e| e == c).unwrap()).sum();
        let index = |v: Vertex| ((v.y + 1) * 3 + (v.x + 1)) as usize;
        let (mut hits, mut both) = (0u64, 0u64);
        for mask in 0u32..1 << 24 {
            // flood the 3×3 interior; reaching ∂B(2) means an open edge leaves it
            let mut seen = 1u16 << index(Vertex::ORIGIN);
            let mut out = false;
            loop {
                let before = seen;
                for (i, e) in relevant.iter().enumerate() {
                    if mask >> i & 1 == 0 {
                        continue;
                    }
                    let (a, b) = e.endpoints();
                    let ia = a.norm() < 2 && seen >> index(a) & 1 == 1;
                    let ib = b.norm() < 2 && seen >> index(b) & 1 == 1;
                    if ia || ib {
                        if a.norm() == 2 || b.norm() == 2 {
                            out = true;
                        } else {
                            seen |= 1 << index(a) | 1 << index(b);
                        }
                    }
                }
                if out || seen == before {
                    break;
                }
            }
            if out {
                hits += 1;
                if mask & cyl == cyl {
                    both += 1;
                }
            }
        }
        both as f64 / hits as f64
    }

    #[test]
    fn conditioned_measure_matches_enumeration() {
        let cylinder = [Edge::horizontal(Vertex::ORIGIN), Edge::vertical(Vertex::ORIGIN)];
        let exact = enumerate_b2(&cylinder);
        let samples = 20_000u64;
        let mut hits = 0;
        for r in 0..samples {
            let smp = iic_rejection_sample(2, 0.5, s(IIC_TAG).with_replica(r), DEFAULT_ATTEMPT_CAP).unwrap();
            if cylinder.iter().all(|e| smp.config.is_open(e)) {
                hits += 1;
            }
        }
        let freq = hits as f64 / samples as f64;
        let sigma = libm::sqrt(exact * (1.0 - exact) / samples as f64);
        assert!((freq - exact).abs() < 3.0 * sigma, "{freq} vs {exact}");
    }

    #[test]
    fn quasi_mult_boundary_case() {
        let q = quasi_mult_constant(&Sequential, 2, 4, 5_000, s("qm"), &Params::default()).unwrap();
        assert_eq!(q.rho.value, 1.0);
        assert!(q.left_inequality_holds());
        assert!((q.c_hat.value - q.pi_n.value / q.pi_big.value).abs() < 1e-12);
    }

    #[test]
    fn nu_sandwich_small() {
        let params = Params::default();
        let q = quasi_mult_constant(&Sequential, 1, 8, 20_000, s("qm"), &params).unwrap();
        let nu = nu_annulus_estimate(&Sequential, 1, 8, 20_000, s("nu"), &params).unwrap();
        assert_eq!(nu.annulus.edge_count(), 16);
        assert!((nu.prefactor() - 0.5f64.powi(16)).abs() < 1e-18);
        assert!(nu.positive());
        assert!(nu.sandwich_holds(&q.c_hat), "{nu:?} {q:?}");
    }

    #[test]
    fn rejects_small_conditioning_radius() {
        let params = Params::default();
        assert!(nu_annulus_estimate(&Sequential, 2, 7, 10, s("nu"), &params).is_err());
        assert!(quasi_mult_constant(&Sequential, 2, 3, 10, s("qm"), &params).is_err());
        assert!(conditional_arm_probability(&Sequential, 2, 3, 0.5, 10, s("nu"), C).is_err());
    }
}
