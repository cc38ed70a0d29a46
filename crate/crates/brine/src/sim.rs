//! Monte Carlo sampler of the conditional lattice measure on square 2-d
//! volumes: Metropolis single-spin updates against the fixed boundary
//! ring, and an exact heat-bath redraw of the whole salt sector (all salt
//! configurations with equal `(N, Q)` are equiprobable given the spins, so
//! drawing `Q` from its marginal and placing uniformly is a perfect Gibbs
//! update). A pair-swap fallback move exists to validate the heat bath.

use std::collections::BTreeMap;
use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::numerics::{ln_choose, ln_factorials};
use crate::params::BoundaryCondition;

/// Counter-based random stream: every draw is a pure function of
/// `(seed, sweep, phase, index)`, so replay is exact no matter how the
/// consuming code is reorganized.
#[derive(Debug, Clone, Copy)]
pub struct CounterRng {
    seed: u64,
}

const PHASE_INIT: u64 = 0;
const PHASE_SPIN: u64 = 1;
const PHASE_SALT_Q: u64 = 2;
const PHASE_SALT_PLACE: u64 = 3;
const PHASE_PAIR: u64 = 4;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        CounterRng { seed }
    }

    fn word(&self, sweep: u64, phase: u64, idx: u64) -> u64 {
        let mut z = self.seed ^ 0x9e3779b97f4a7c15;
        z = mix64(z ^ sweep.wrapping_mul(0xd1342543de82ef95).wrapping_add(1));
        z = mix64(z ^ phase.wrapping_mul(0xaf251af3b0f025b5).wrapping_add(2));
        z = mix64(z ^ idx.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(3));
        z
    }

    /// Uniform draw in the open interval (0, 1).
    fn uniform(&self, sweep: u64, phase: u64, idx: u64) -> f64 {
        ((self.word(sweep, phase, idx) >> 11) as f64 + 0.5) / (1u64 << 53) as f64
    }

    /// Uniform draw in `0..bound`.
    fn below(&self, sweep: u64, phase: u64, idx: u64, bound: u64) -> u64 {
        debug_assert!(bound > 0);
        self.word(sweep, phase, idx) % bound
    }
}

/// Full simulation configuration; `seed` fixes the entire random stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub l: u32,
    pub j: f64,
    pub kappa: f64,
    pub c: f64,
    pub h: f64,
    pub bc: BoundaryCondition,
    pub seed: u64,
    pub sweeps: u64,
    pub burn_in: u64,
    pub thinning: u64,
}

impl SimConfig {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        l: u32,
        j: f64,
        kappa: f64,
        c: f64,
        h: f64,
        bc: BoundaryCondition,
        seed: u64,
        sweeps: u64,
        burn_in: u64,
        thinning: u64,
    ) -> Result<Self> {
        if l < 4 {
            return Err(Error::domain(format!("lattice side must be >= 4, got {l}")));
        }
        if !(0.0..=1.0).contains(&c) {
            return Err(Error::domain(format!(
                "concentration must lie in [0, 1], got {c}"
            )));
        }
        if !(j.is_finite() && kappa.is_finite() && h.is_finite()) {
            return Err(Error::domain("j, kappa, h must be finite"));
        }
        if sweeps <= burn_in {
            return Err(Error::domain(format!(
                "sweeps ({sweeps}) must exceed burn_in ({burn_in})"
            )));
        }
        if thinning == 0 {
            return Err(Error::domain("thinning must be >= 1"));
        }
        Ok(SimConfig {
            l,
            j,
            kappa,
            c,
            h,
            bc,
            seed,
            sweeps,
            burn_in,
            thinning,
        })
    }

    pub fn volume(&self) -> u64 {
        (self.l as u64) * (self.l as u64)
    }

    /// Conserved salt number `floor(c L^2)`.
    pub fn n_salt(&self) -> u64 {
        (self.c * self.volume() as f64).floor() as u64
    }
}

/// Spin and salt fields with incrementally maintained totals.
pub struct LatticeState {
    l: u32,
    bc: BoundaryCondition,
    spins: Vec<i8>,
    salts: Vec<u8>,
    m: i64,
    q: i64,
    n: u64,
    ln_fact: Vec<f64>,
}

impl LatticeState {
    pub fn l(&self) -> u32 {
        self.l
    }

    pub fn volume(&self) -> u64 {
        (self.l as u64) * (self.l as u64)
    }

    pub fn magnetization(&self) -> i64 {
        self.m
    }

    pub fn salt_on_plus(&self) -> i64 {
        self.q
    }

    pub fn salt_total(&self) -> u64 {
        self.n
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub fn salts(&self) -> &[u8] {
        &self.salts
    }

    /// Recomputes every running total from scratch and compares.
    pub fn totals_consistent(&self) -> bool {
        let m: i64 = self.spins.iter().map(|&s| s as i64).sum();
        let n: u64 = self.salts.iter().map(|&s| s as u64).sum();
        let q: i64 = self
            .spins
            .iter()
            .zip(&self.salts)
            .filter(|(&s, &x)| s == 1 && x == 1)
            .count() as i64;
        m == self.m && n == self.n && q == self.q
    }

    fn neighbor_sum(&self, site: usize) -> i64 {
        let l = self.l as usize;
        let (row, col) = (site / l, site % l);
        let bcs = self.bc.sign() as i64;
        let mut s = 0i64;
        s += if row > 0 { self.spins[site - l] as i64 } else { bcs };
        s += if row + 1 < l { self.spins[site + l] as i64 } else { bcs };
        s += if col > 0 { self.spins[site - 1] as i64 } else { bcs };
        s += if col + 1 < l { self.spins[site + 1] as i64 } else { bcs };
        s
    }
}

/// Fresh state: spins matching the boundary, salt placed uniformly.
pub fn init(cfg: &SimConfig) -> LatticeState {
    let v = cfg.volume() as usize;
    let n = cfg.n_salt() as usize;
    let rng = CounterRng::new(cfg.seed);
    let spin = cfg.bc.sign() as i8;
    let mut salts = vec![0u8; v];
    let mut sites: Vec<u32> = (0..v as u32).collect();
    for k in 0..n {
        let r = rng.below(0, PHASE_INIT, k as u64, (v - k) as u64) as usize;
        sites.swap(k, k + r);
        salts[sites[k] as usize] = 1;
    }
    let q = if cfg.bc == BoundaryCondition::Plus {
        n as i64
    } else {
        0
    };
    LatticeState {
        l: cfg.l,
        bc: cfg.bc,
        spins: vec![spin; v],
        salts,
        m: spin as i64 * v as i64,
        q,
        n: n as u64,
        ln_fact: ln_factorials(v),
    }
}

/// One Metropolis pass over all sites in raster order. The energy change
/// of flipping `sigma_x` is `2 J sigma_x sum_nbr sigma + 2 h sigma_x +
/// kappa S_x sigma_x`; one uniform is consumed per site whether or not it
/// is needed, keeping the stream position a function of `(sweep, site)`.
pub fn spin_sweep(state: &mut LatticeState, cfg: &SimConfig, sweep: u64) {
    let rng = CounterRng::new(cfg.seed);
    let v = state.volume() as usize;
    for site in 0..v {
        let s = state.spins[site] as f64;
        let delta = 2.0 * cfg.j * s * state.neighbor_sum(site) as f64
            + 2.0 * cfg.h * s
            + cfg.kappa * state.salts[site] as f64 * s;
        let u = rng.uniform(sweep, PHASE_SPIN, site as u64);
        if delta <= 0.0 || u < (-delta).exp() {
            let old = state.spins[site];
            state.spins[site] = -old;
            state.m -= 2 * old as i64;
            if state.salts[site] == 1 {
                state.q -= old as i64;
            }
        }
    }
}

/// Exact Gibbs redraw of the whole salt sector given the spins: `Q` is
/// drawn from its marginal `C(n_plus, Q) C(n_minus, N-Q) e^(kappa Q)` by
/// Gumbel-max over log-weights, then placed uniformly on each side.
pub fn salt_heat_bath(state: &mut LatticeState, cfg: &SimConfig, sweep: u64) {
    let rng = CounterRng::new(cfg.seed);
    let v = state.volume();
    let n = state.n;
    let n_plus = ((v as i64 + state.m) / 2) as u64;
    let n_minus = v - n_plus;
    let lo = n.saturating_sub(n_minus);
    let hi = n.min(n_plus);

    let mut best_q = lo;
    let mut best_score = f64::NEG_INFINITY;
    for (k, q) in (lo..=hi).enumerate() {
        let lw = ln_choose(&state.ln_fact, n_plus, q)
            + ln_choose(&state.ln_fact, n_minus, n - q)
            + cfg.kappa * q as f64;
        let u = rng.uniform(sweep, PHASE_SALT_Q, k as u64);
        let score = lw - (-u.ln()).ln();
        if score > best_score {
            best_score = score;
            best_q = q;
        }
    }

    state.salts.fill(0);
    let mut plus_sites: Vec<u32> = Vec::with_capacity(n_plus as usize);
    let mut minus_sites: Vec<u32> = Vec::with_capacity(n_minus as usize);
    for (k, &s) in state.spins.iter().enumerate() {
        if s == 1 {
            plus_sites.push(k as u32);
        } else {
            minus_sites.push(k as u32);
        }
    }
    let mut draw = 0u64;
    for k in 0..best_q as usize {
        let r = rng.below(sweep, PHASE_SALT_PLACE, draw, n_plus - k as u64) as usize;
        draw += 1;
        plus_sites.swap(k, k + r);
        state.salts[plus_sites[k] as usize] = 1;
    }
    for k in 0..(n - best_q) as usize {
        let r = rng.below(sweep, PHASE_SALT_PLACE, draw, n_minus - k as u64) as usize;
        draw += 1;
        minus_sites.swap(k, k + r);
        state.salts[minus_sites[k] as usize] = 1;
    }
    state.q = best_q as i64;
}

/// Fallback salt dynamics: `L^2` Metropolis swap attempts between a salted
/// and an empty site. Much slower mixing than the heat bath; kept for
/// cross-validation.
pub fn salt_pair_sweep(state: &mut LatticeState, cfg: &SimConfig, sweep: u64) {
    let v = state.volume() as usize;
    let n = state.n as usize;
    if n == 0 || n == v {
        return;
    }
    let rng = CounterRng::new(cfg.seed);
    let mut salted: Vec<u32> = Vec::with_capacity(n);
    let mut empty: Vec<u32> = Vec::with_capacity(v - n);
    for (k, &x) in state.salts.iter().enumerate() {
        if x == 1 {
            salted.push(k as u32);
        } else {
            empty.push(k as u32);
        }
    }
    for attempt in 0..v as u64 {
        let si = rng.below(sweep, PHASE_PAIR, 3 * attempt, n as u64) as usize;
        let ei = rng.below(sweep, PHASE_PAIR, 3 * attempt + 1, (v - n) as u64) as usize;
        let from = salted[si] as usize;
        let to = empty[ei] as usize;
        // moving one salt particle from `from` to `to`
        let delta = 0.5
            * cfg.kappa
            * (state.spins[from] as f64 - state.spins[to] as f64);
        let u = rng.uniform(sweep, PHASE_PAIR, 3 * attempt + 2);
        if delta <= 0.0 || u < (-delta).exp() {
            state.salts[from] = 0;
            state.salts[to] = 1;
            salted[si] = to as u32;
            empty[ei] = from as u32;
            if state.spins[from] == 1 {
                state.q -= 1;
            }
            if state.spins[to] == 1 {
                state.q += 1;
            }
        }
    }
}

/// Which salt dynamics `run_with` interleaves with the spin sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SaltMove {
    HeatBath,
    PairSwap,
}

/// One record per retained sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sample {
    pub sweep: u64,
    pub m: i64,
    pub q: i64,
}

/// Retained samples plus summary histograms.
pub struct TimeSeries {
    pub samples: Vec<Sample>,
    pub m_hist: BTreeMap<i64, u64>,
    pub mq_hist: BTreeMap<(i64, i64), u64>,
}

impl TimeSeries {
    pub fn mean_magnetization(&self) -> f64 {
        self.samples.iter().map(|s| s.m as f64).sum::<f64>() / self.samples.len() as f64
    }

    /// CSV rows `sweep,M,Q`; `header` lines prefixed with `# `.
    pub fn write_csv<W: Write>(&self, mut w: W, header: &[String]) -> io::Result<()> {
        for line in header {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "sweep,M,Q")?;
        for s in &self.samples {
            writeln!(w, "{},{},{}", s.sweep, s.m, s.q)?;
        }
        Ok(())
    }

    /// CSV rows `M,Q,count`.
    pub fn write_histogram_csv<W: Write>(&self, mut w: W, header: &[String]) -> io::Result<()> {
        for line in header {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "M,Q,count")?;
        for ((m, q), count) in &self.mq_hist {
            writeln!(w, "{m},{q},{count}")?;
        }
        Ok(())
    }
}

/// Alternates spin sweeps with the chosen salt dynamics, recording after
/// burn-in every `thinning` sweeps.
pub fn run_with(cfg: &SimConfig, salt_move: SaltMove) -> TimeSeries {
    let mut state = init(cfg);
    let mut samples = Vec::new();
    let mut m_hist = BTreeMap::new();
    let mut mq_hist = BTreeMap::new();
    for sweep in 0..cfg.sweeps {
        spin_sweep(&mut state, cfg, sweep);
        match salt_move {
            SaltMove::HeatBath => salt_heat_bath(&mut state, cfg, sweep),
            SaltMove::PairSwap => salt_pair_sweep(&mut state, cfg, sweep),
        }
        debug_assert!(state.totals_consistent(), "totals drifted at sweep {sweep}");
        if sweep >= cfg.burn_in && (sweep - cfg.burn_in).is_multiple_of(cfg.thinning) {
            samples.push(Sample {
                sweep,
                m: state.m,
                q: state.q,
            });
            *m_hist.entry(state.m).or_insert(0) += 1;
            *mq_hist.entry((state.m, state.q)).or_insert(0) += 1;
        }
    }
    TimeSeries {
        samples,
        m_hist,
        mq_hist,
    }
}

/// Heat-bath salt dynamics (the default).
pub fn run(cfg: &SimConfig) -> TimeSeries {
    run_with(cfg, SaltMove::HeatBath)
}

/// Lever-rule droplet fraction from the sampled mean magnetization, using
/// an externally supplied spontaneous magnetization.
pub fn droplet_fraction_estimate(
    series: &TimeSeries,
    bc: BoundaryCondition,
    m_star: f64,
    volume: u64,
) -> f64 {
    let mean = series.mean_magnetization() / volume as f64;
    match bc {
        BoundaryCondition::Plus => (m_star - mean) / (2.0 * m_star),
        BoundaryCondition::Minus => (mean + m_star) / (2.0 * m_star),
    }
}
