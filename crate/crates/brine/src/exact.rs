//! Exact finite-volume references: salt configuration counts in big-integer
//! arithmetic, the bulk entropy with its Stirling gap, and full enumeration
//! of the joint `(M, Q)` law on tiny 2-d lattices with a fixed boundary
//! ring. This module is the brute-force oracle for both the analytic layer
//! and the Monte Carlo sampler.

use std::collections::BTreeMap;
use std::io::{self, Write};

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::numerics::{ln_big, ln_choose, ln_factorials, LogSumExp};
use crate::params::BoundaryCondition;

/// Exact binomial coefficient.
pub fn binomial_big(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::ZERO;
    }
    let k = k.min(n - k);
    let mut acc = BigUint::from(1u8);
    for i in 1..=k {
        acc = acc * BigUint::from(n - k + i) / BigUint::from(i);
    }
    acc
}

/// Number of salt configurations with `n_salt` particles, `q_on_plus` of
/// them on plus sites, on a spin background with total magnetization `m`:
/// `C((V+M)/2, Q) C((V-M)/2, N-Q)`. Zero when any count is out of range.
pub fn salt_count(volume: u64, m: i64, n_salt: u64, q_on_plus: i64) -> Result<BigUint> {
    if volume == 0 {
        return Err(Error::domain("volume must be positive"));
    }
    if m.unsigned_abs() > volume {
        return Err(Error::domain(format!("|M| = {m} exceeds volume {volume}")));
    }
    if (volume as i64 + m) % 2 != 0 {
        return Err(Error::Parity { volume, m });
    }
    if n_salt > volume {
        return Err(Error::domain(format!(
            "salt number {n_salt} exceeds volume {volume}"
        )));
    }
    let n_plus = ((volume as i64 + m) / 2) as u64;
    let n_minus = volume - n_plus;
    if q_on_plus < 0 || q_on_plus as u64 > n_salt {
        return Ok(BigUint::ZERO);
    }
    let q = q_on_plus as u64;
    if q > n_plus || n_salt - q > n_minus {
        return Ok(BigUint::ZERO);
    }
    Ok(binomial_big(n_plus, q) * binomial_big(n_minus, n_salt - q))
}

fn entropy_term(p: f64) -> f64 {
    if p == 0.0 || p == 1.0 {
        0.0
    } else {
        p * p.ln() + (1.0 - p) * (1.0 - p).ln()
    }
}

/// Bulk entropy `Xi(m, theta; c) = -(1+m)/2 S(2 theta c/(1+m))
/// - (1-m)/2 S(2(1-theta)c/(1-m))` with `S(p) = p log p + (1-p) log(1-p)`.
pub fn entropy_xi(m: f64, theta: f64, c: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&theta) || !(0.0..=1.0).contains(&c) || !(-1.0..=1.0).contains(&m) {
        return Err(Error::domain(format!(
            "need theta, c in [0,1] and |m| <= 1; got m={m} theta={theta} c={c}"
        )));
    }
    if c == 0.0 {
        return Ok(0.0);
    }
    let wp = 0.5 * (1.0 + m);
    let wm = 0.5 * (1.0 - m);
    let p1 = if theta == 0.0 { 0.0 } else { theta * c / wp };
    let p2 = if theta == 1.0 { 0.0 } else { (1.0 - theta) * c / wm };
    if !(p1.is_finite() && p2.is_finite() && p1 <= 1.0 && p2 <= 1.0) {
        return Err(Error::domain(format!(
            "occupation out of range: 2 theta c/(1+m) = {p1}, 2(1-theta)c/(1-m) = {p2}"
        )));
    }
    Ok(-wp * entropy_term(p1) - wm * entropy_term(p2))
}

/// `|log A / V - Xi|` where `A` is the exact salt count at the
/// floor-rounded occupation numbers `M = floor(m V)` (parity-adjusted
/// downward), `N = floor(c V)`, `Q = floor(theta c V)`.
pub fn stirling_gap(volume: u64, m: f64, theta: f64, c: f64) -> Result<f64> {
    let xi = entropy_xi(m, theta, c)?;
    let mut m_int = (m * volume as f64).floor() as i64;
    if (volume as i64 + m_int) % 2 != 0 {
        m_int -= 1;
    }
    let n = (c * volume as f64).floor() as u64;
    let q = (theta * c * volume as f64).floor() as i64;
    let a = salt_count(volume, m_int, n, q)?;
    if a == BigUint::ZERO {
        return Err(Error::domain(
            "rounded occupation numbers admit no salt configuration",
        ));
    }
    Ok((ln_big(&a) / volume as f64 - xi).abs())
}

/// Exact joint law of `(M, Q)` on an `L x L` box with a fixed boundary
/// ring, `L <= 5`.
pub struct ExactDistribution {
    pub l: u32,
    pub bc: BoundaryCondition,
    pub j: f64,
    pub kappa: f64,
    pub c: f64,
    pub h: f64,
    /// Fixed salt number `floor(c L^2)`.
    pub n_salt: u64,
    /// `probs[n_plus][q]`; zero where the combinatorics forbid the cell.
    probs: Vec<Vec<f64>>,
    /// Log normalizer of the unnormalized accumulation.
    pub log_z: f64,
}

/// Enumerates all `2^(L^2)` spin configurations, weighting each by
/// `exp(J sum sigma sigma + h M)` with the boundary bonds included, and
/// attaches the salt sector analytically through the per-`Q` counts
/// `C(n_plus, Q) C(n_minus, N-Q) e^(kappa Q)`. Accumulation is done in the
/// log domain.
pub fn exact_distribution(
    l: u32,
    bc: BoundaryCondition,
    j: f64,
    kappa: f64,
    c: f64,
    h: f64,
) -> Result<ExactDistribution> {
    if l == 0 {
        return Err(Error::domain("lattice side must be positive"));
    }
    if l > 5 {
        return Err(Error::SizeLimit(l));
    }
    if !(0.0..=1.0).contains(&c) {
        return Err(Error::domain(format!("concentration must lie in [0, 1], got {c}")));
    }
    if !(j.is_finite() && kappa.is_finite() && h.is_finite()) {
        return Err(Error::domain("j, kappa, h must be finite"));
    }
    let v = (l * l) as u64;
    let n_salt = (c * v as f64).floor() as u64;

    // bit k of a configuration word is the spin at site (k / L, k % L);
    // set bit = +1. Bond disagreements come from shifted XORs, the fixed
    // ring from per-site boundary-bond counts (2 at corners, 1 at edges).
    let mut mask_right: u64 = 0;
    let mut mask_down: u64 = 0;
    let mut corner_mask: u64 = 0;
    let mut edge_mask: u64 = 0;
    for k in 0..v {
        let row = k / l as u64;
        let col = k % l as u64;
        if col + 1 < l as u64 {
            mask_right |= 1 << k;
        }
        if row + 1 < l as u64 {
            mask_down |= 1 << k;
        }
        let sides = [row == 0, row + 1 == l as u64, col == 0, col + 1 == l as u64]
            .iter()
            .filter(|&&s| s)
            .count();
        match sides {
            2 => corner_mask |= 1 << k,
            1 => edge_mask |= 1 << k,
            _ => {}
        }
    }
    let n_bonds = (2 * l * (l - 1)) as i64;
    let total_ring_bonds = (4 * l) as i64;

    let mut acc = vec![LogSumExp::new(); v as usize + 1];
    for word in 0u64..(1u64 << v) {
        let n_plus = word.count_ones() as i64;
        let m = 2 * n_plus - v as i64;
        let disagree = ((word ^ (word >> 1)) & mask_right).count_ones() as i64
            + ((word ^ (word >> l)) & mask_down).count_ones() as i64;
        let bond_sum = n_bonds - 2 * disagree;
        let ring_sum = 2
            * (2 * (word & corner_mask).count_ones() as i64
                + (word & edge_mask).count_ones() as i64)
            - total_ring_bonds;
        let log_w = j * (bond_sum as f64 + bc.sign() * ring_sum as f64) + h * m as f64;
        acc[n_plus as usize].add(log_w);
    }

    let ln_fact = ln_factorials(v as usize);
    let mut log_cells = vec![vec![f64::NEG_INFINITY; n_salt as usize + 1]; v as usize + 1];
    let mut norm = LogSumExp::new();
    for n_plus in 0..=v {
        let spin_part = acc[n_plus as usize].value();
        if spin_part == f64::NEG_INFINITY {
            continue;
        }
        let n_minus = v - n_plus;
        for q in 0..=n_salt {
            if q > n_plus || n_salt - q > n_minus {
                continue;
            }
            let lw = spin_part
                + ln_choose(&ln_fact, n_plus, q)
                + ln_choose(&ln_fact, n_minus, n_salt - q)
                + kappa * q as f64;
            log_cells[n_plus as usize][q as usize] = lw;
            norm.add(lw);
        }
    }
    let log_z = norm.value();
    let probs = log_cells
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|lw| {
                    if lw == f64::NEG_INFINITY {
                        0.0
                    } else {
                        (lw - log_z).exp()
                    }
                })
                .collect()
        })
        .collect();
    Ok(ExactDistribution {
        l,
        bc,
        j,
        kappa,
        c,
        h,
        n_salt,
        probs,
        log_z,
    })
}

impl ExactDistribution {
    pub fn volume(&self) -> u64 {
        (self.l * self.l) as u64
    }

    /// Probability of `(M, Q)`; zero for invalid or impossible pairs.
    pub fn prob(&self, m: i64, q: i64) -> f64 {
        let v = self.volume() as i64;
        if (v + m) % 2 != 0 || m.abs() > v || q < 0 || q as u64 > self.n_salt {
            return 0.0;
        }
        self.probs[((v + m) / 2) as usize][q as usize]
    }

    /// All `(M, Q, probability)` cells the combinatorics allow, ascending.
    pub fn entries(&self) -> Vec<(i64, u64, f64)> {
        let v = self.volume();
        let mut out = Vec::new();
        for n_plus in 0..=v {
            for q in 0..=self.n_salt {
                if q > n_plus || self.n_salt - q > v - n_plus {
                    continue;
                }
                out.push((
                    2 * n_plus as i64 - v as i64,
                    q,
                    self.probs[n_plus as usize][q as usize],
                ));
            }
        }
        out
    }

    /// Marginal law of `M`, indexed as `(M, probability)` pairs.
    pub fn m_marginal(&self) -> Vec<(i64, f64)> {
        let v = self.volume();
        (0..=v)
            .map(|n_plus| {
                (
                    2 * n_plus as i64 - v as i64,
                    self.probs[n_plus as usize].iter().sum(),
                )
            })
            .collect()
    }

    /// CSV rows `M,Q,probability`; `header` lines prefixed with `# `.
    pub fn write_csv<W: Write>(&self, mut w: W, header: &[String]) -> io::Result<()> {
        for line in header {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "M,Q,probability")?;
        for (m, q, p) in self.entries() {
            writeln!(w, "{m},{q},{p:.12e}")?;
        }
        Ok(())
    }

    /// Total variation distance between this law and an empirical count
    /// table over `(M, Q)`.
    pub fn total_variation(&self, counts: &BTreeMap<(i64, i64), u64>, samples: u64) -> f64 {
        let mut tv = 0.0;
        let mut seen = 0.0;
        for (m, q, p) in self.entries() {
            let emp = counts
                .get(&(m, q as i64))
                .map(|&c| c as f64 / samples as f64)
                .unwrap_or(0.0);
            tv += (p - emp).abs();
            seen += emp;
        }
        // mass observed outside the exact support (should be none)
        tv += 1.0 - seen;
        0.5 * tv
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::BoundaryCondition::{Minus, Plus};
    use proptest::prelude::Strategy;

    #[test]
    fn salt_count_examples() {
        assert_eq!(salt_count(4, 0, 2, 1).unwrap(), BigUint::from(4u8));
        assert_eq!(salt_count(4, 4, 1, 0).unwrap(), BigUint::ZERO);
        assert_eq!(salt_count(2, 0, 0, 0).unwrap(), BigUint::from(1u8));
        assert_eq!(salt_count(4, 0, 2, 3).unwrap(), BigUint::ZERO);
        assert_eq!(salt_count(4, 0, 2, -1).unwrap(), BigUint::ZERO);
        assert!(matches!(
            salt_count(4, 1, 1, 0),
            Err(Error::Parity { volume: 4, m: 1 })
        ));
        assert!(salt_count(4, 6, 1, 0).is_err());
        assert!(salt_count(4, 0, 5, 0).is_err());
    }

    #[test]
    fn salt_count_needs_big_integers() {
        // C(50,25)^2 overflows u64 by a comfortable margin
        let big = salt_count(100, 0, 50, 25).unwrap();
        assert_eq!(big.to_string(), "15979641419960227387050813504");
        assert!(big > BigUint::from(u64::MAX));
    }

    #[test]
    fn entropy_xi_trivial_cases() {
        assert!((entropy_xi(0.0, 0.5, 0.5).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(entropy_xi(0.3, 0.6, 0.0).unwrap(), 0.0);
        assert!((entropy_xi(0.0, 0.6, 0.1).unwrap() - 0.32284718152064852).abs() < 1e-14);
        // occupation beyond 1 is out of the admissible region
        assert!(entropy_xi(-0.9, 1.0, 0.9).is_err());
    }

    #[test]
    fn entropy_xi_small_c_expansion() {
        // Xi = c - c log c + c upsilon + O(c^2); the residual over c^2
        // stays bounded (it converges to about -0.506 here)
        let (m, theta) = (0.3, 0.6);
        let ups = crate::rate::upsilon(m, theta).unwrap();
        for c in [1e-2, 1e-3, 1e-4] {
            let xi = entropy_xi(m, theta, c).unwrap();
            let residual = xi - (c - c * c.ln() + c * ups);
            let ratio = residual / (c * c);
            assert!(ratio.abs() < 1.0, "c = {c}: ratio = {ratio}");
            assert!((ratio + 0.5).abs() < 0.1, "c = {c}: ratio = {ratio}");
        }
    }

    #[test]
    fn stirling_gap_frozen_and_decreasing() {
        let g100 = stirling_gap(100, 0.0, 0.6, 0.1).unwrap();
        let g1k = stirling_gap(1_000, 0.0, 0.6, 0.1).unwrap();
        let g10k = stirling_gap(10_000, 0.0, 0.6, 0.1).unwrap();
        assert!((g100 - 0.033563355).abs() < 1e-7);
        assert!((g1k - 0.005627391).abs() < 1e-7);
        assert!((g10k - 0.00079268176).abs() < 1e-8);
        assert!(g100 > g1k && g1k > g10k);
        for (v, g) in [(100u64, g100), (1_000, g1k), (10_000, g10k)] {
            assert!(g <= 4.0 * (v as f64).ln() / v as f64);
        }
    }

    /// Brute-force joint enumeration over every (spin, salt) pair; an
    /// independent path that never factorizes the salt sector.
    fn brute_joint(
        l: u32,
        bc: BoundaryCondition,
        j: f64,
        kappa: f64,
        n_salt: u32,
        h: f64,
    ) -> BTreeMap<(i64, i64), f64> {
        let lu = l as usize;
        let v = lu * lu;
        let site = |r: usize, c: usize| r * lu + c;
        let mut weights: BTreeMap<(i64, i64), f64> = BTreeMap::new();
        let mut z = 0.0;
        for word in 0u32..(1u32 << v) {
            let spin = |k: usize| if (word >> k) & 1 == 1 { 1i64 } else { -1 };
            let mut bond = 0i64;
            for r in 0..lu {
                for c in 0..lu {
                    let s = spin(site(r, c));
                    bond += if r + 1 < lu {
                        s * spin(site(r + 1, c))
                    } else {
                        s * bc.sign() as i64
                    };
                    bond += if c + 1 < lu {
                        s * spin(site(r, c + 1))
                    } else {
                        s * bc.sign() as i64
                    };
                    if r == 0 {
                        bond += s * bc.sign() as i64;
                    }
                    if c == 0 {
                        bond += s * bc.sign() as i64;
                    }
                }
            }
            let m: i64 = (0..v).map(spin).sum();
            let w_spin = (j * bond as f64 + h * m as f64).exp();
            for salt in 0u32..(1u32 << v) {
                if salt.count_ones() != n_salt {
                    continue;
                }
                let q: i64 = (0..v)
                    .filter(|&k| (salt >> k) & 1 == 1 && spin(k) == 1)
                    .count() as i64;
                let w = w_spin * (kappa * q as f64).exp();
                *weights.entry((m, q)).or_insert(0.0) += w;
                z += w;
            }
        }
        weights.into_iter().map(|(k, w)| (k, w / z)).collect()
    }

    #[test]
    fn matches_brute_force_and_frozen_table_plus_bc() {
        let dist = exact_distribution(2, Plus, 0.3, 0.7, 0.5, 0.1).unwrap();
        assert_eq!(dist.n_salt, 2);
        let brute = brute_joint(2, Plus, 0.3, 0.7, 2, 0.1);
        for ((m, q), p) in &brute {
            assert!(
                (dist.prob(*m, *q) - p).abs() < 1e-13,
                "(M={m}, Q={q}): {} vs {p}",
                dist.prob(*m, *q)
            );
        }
        // frozen external values
        let frozen = [
            (-4, 0, 0.00071500015550806373),
            (-2, 0, 0.0017466063240449988),
            (-2, 1, 0.0035172332139306728),
            (0, 0, 0.0027164975993874188),
            (0, 1, 0.021881417582413858),
            (0, 2, 0.011015940974969499),
            (2, 1, 0.057839657814660337),
            (2, 2, 0.11647476752343816),
            (4, 2, 0.78409287881164699),
        ];
        for (m, q, p) in frozen {
            assert!((dist.prob(m, q) - p).abs() < 1e-13, "(M={m}, Q={q})");
        }
        // structurally impossible cells carry no mass
        assert_eq!(dist.prob(2, 0), 0.0);
        assert_eq!(dist.prob(4, 1), 0.0);
        assert_eq!(dist.prob(3, 0), 0.0); // parity
    }

    #[test]
    fn matches_frozen_table_minus_bc() {
        let dist = exact_distribution(2, Minus, 0.4, 1.2, 0.25, -0.05).unwrap();
        assert_eq!(dist.n_salt, 1);
        let frozen = [
            (-4, 0, 0.76080953986087598),
            (-2, 0, 0.084183196857447208),
            (-2, 1, 0.09316601883215754),
            (0, 0, 0.011287569692650624),
            (0, 1, 0.037476051153137508),
            (2, 0, 0.00093648951828228657),
            (2, 1, 0.0093277640928432511),
            (4, 1, 0.0028133699926056073),
        ];
        for (m, q, p) in frozen {
            assert!((dist.prob(m, q) - p).abs() < 1e-13, "(M={m}, Q={q})");
        }
    }

    #[test]
    fn normalization_and_size_limit() {
        for (l, bc, j, kappa, c, h) in [
            (2, Plus, 0.3, 0.7, 0.5, 0.1),
            (3, Minus, 0.5, 2.0, 0.3, -0.2),
            (4, Plus, 0.25, 1.0, 0.25, 0.1),
        ] {
            let dist = exact_distribution(l, bc, j, kappa, c, h).unwrap();
            let total: f64 = dist.entries().iter().map(|e| e.2).sum();
            assert!((total - 1.0).abs() < 1e-12, "L = {l}");
        }
        assert!(matches!(
            exact_distribution(6, Plus, 0.1, 0.1, 0.1, 0.0),
            Err(Error::SizeLimit(6))
        ));
    }

    #[test]
    fn salt_conditional_is_hypergeometric_without_repulsion() {
        // kappa = 0 decouples salt from spins given M
        let dist = exact_distribution(3, Plus, 0.2, 0.0, 0.25, 0.05).unwrap();
        let n = dist.n_salt; // 2
        assert_eq!(n, 2);
        let v = dist.volume();
        let denom = binomial_big(v, n);
        for (m, p_m) in dist.m_marginal() {
            if p_m == 0.0 {
                continue;
            }
            let n_plus = ((v as i64 + m) / 2) as u64;
            for q in 0..=n {
                let hyper = binomial_big(n_plus, q) * binomial_big(v - n_plus, n - q);
                let expected =
                    p_m * (ln_big(&hyper) - ln_big(&denom)).exp();
                let expected = if hyper == BigUint::ZERO { 0.0 } else { expected };
                assert!(
                    (dist.prob(m, q as i64) - expected).abs() < 1e-12,
                    "M={m} Q={q}"
                );
            }
        }
    }

    #[test]
    fn strong_field_pins_the_magnetization() {
        let dist = exact_distribution(3, Plus, 0.1, 1.0, 0.2, 10.0).unwrap();
        let p_top: f64 = (0..=dist.n_salt).map(|q| dist.prob(9, q as i64)).sum();
        assert!(p_top > 0.999);
        assert!((p_top - 0.99999999225).abs() < 1e-9);
    }

    #[test]
    fn zero_concentration_reduces_to_the_bare_spin_model() {
        let dist = exact_distribution(3, Minus, 0.35, 2.5, 0.0, 0.15).unwrap();
        assert_eq!(dist.n_salt, 0);
        let brute = brute_joint(3, Minus, 0.35, 2.5, 0, 0.15);
        for ((m, q), p) in &brute {
            assert_eq!(*q, 0);
            assert!((dist.prob(*m, 0) - p).abs() < 1e-13, "M = {m}");
        }
    }

    #[test]
    fn equal_salt_placements_are_equiprobable_given_spins() {
        // for a fixed spin background, the conditional weight of a salt
        // configuration depends only on (N, Q)
        let l = 2usize;
        let v = l * l;
        let n_salt = 2u32;
        let kappa = 1.3;
        // an arbitrary mixed spin state
        let spin = [1i64, -1, -1, 1];
        let mut by_q: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
        let mut z = 0.0;
        for salt in 0u32..(1u32 << v) {
            if salt.count_ones() != n_salt {
                continue;
            }
            let q: i64 = (0..v)
                .filter(|&k| (salt >> k) & 1 == 1 && spin[k] == 1)
                .count() as i64;
            let w = (kappa * q as f64).exp();
            by_q.entry(q).or_default().push(w);
            z += w;
        }
        for (q, ws) in by_q {
            for w in &ws {
                assert!(
                    ((w / z) - (ws[0] / z)).abs() < 1e-16,
                    "Q = {q}: unequal conditional weights"
                );
            }
        }
    }

    proptest::proptest! {
        /// Summing the per-Q counts recovers the unconstrained placement
        /// count C(V, N) (Vandermonde convolution).
        #[test]
        fn salt_counts_sum_to_the_unconstrained_count(
            (volume, n_plus, n_salt) in (1u64..40)
                .prop_flat_map(|v| (proptest::strategy::Just(v), 0..=v, 0..=v)),
        ) {
            let m = 2 * n_plus as i64 - volume as i64;
            let mut total = BigUint::ZERO;
            for q in 0..=n_salt {
                total += salt_count(volume, m, n_salt, q as i64).unwrap();
            }
            proptest::prop_assert_eq!(total, binomial_big(volume, n_salt));
        }
    }

    #[test]
    fn csv_export_shape() {
        let dist = exact_distribution(2, Plus, 0.3, 0.7, 0.5, 0.1).unwrap();
        let mut buf = Vec::new();
        dist.write_csv(&mut buf, &["case".into()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# case\nM,Q,probability\n"));
        // cells: n_plus 0..=4 with q constraints -> 9 rows
        assert_eq!(text.lines().count(), 2 + 9);
    }
}
