//! Discrete-event simulations of the two causal readings of the model.
//!
//! The signaling reading treats hidden vectors as observable and lets the
//! station holding the anchored pair steer the remote outcome by rotating
//! its detector: a deterministic bit channel. The conspiracy reading
//! replaces the steering with pre-shared pseudo-random streams that the
//! source and the stations replay independently; settings are forced to
//! the stream values, no influence travels anywhere, and the same joint
//! statistics emerge. A locality audit distinguishes the two by varying
//! remote choices and watching the local marginal.

use std::io;
use std::io::Write;

use rand::Rng;
use serde::Serialize;

use crate::geometry::{dot, random_direction, Settings, UnitVec3};
use crate::model::{p_cond_b_given_a, p_marginal_a, HiddenPair, Outcome, Sign};
use crate::rng::{derive_seed, substream, Stream};
use crate::{Error, Result};

/// Settings with |a.b| above this are rejected by the bit channel: the
/// anchor would be unidentifiable from a hidden-vector measurement.
pub const COLLINEAR_TOLERANCE: f64 = 1e-9;

/// One of the two measurement stations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Station {
    A,
    B,
}

/// Which of the four hidden-pair types the source emitted.
///
/// `alpha` selects the anchoring station (-1 for A, +1 for B) and `beta`
/// the sign relative to the anchoring setting. The hidden vectors follow:
/// `alpha = -1` gives `u = beta*a, v = -beta*a`; `alpha = +1` gives
/// `v = beta*b, u = -beta*b`. Either way `u = -v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AnchoredPair {
    pub alpha: Sign,
    pub beta: Sign,
}

impl AnchoredPair {
    pub fn new(alpha: Sign, beta: Sign) -> Self {
        AnchoredPair { alpha, beta }
    }

    /// Uniform draw over the four pair types.
    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        AnchoredPair {
            alpha: Sign::from_positive(rng.random::<bool>()),
            beta: Sign::from_positive(rng.random::<bool>()),
        }
    }

    pub fn anchor_station(self) -> Station {
        match self.alpha {
            Sign::Minus => Station::A,
            Sign::Plus => Station::B,
        }
    }

    fn anchor_setting(self, s: Settings) -> UnitVec3 {
        match self.anchor_station() {
            Station::A => s.a,
            Station::B => s.b,
        }
    }

    /// The hidden vectors this pair type carries under the given settings.
    pub fn hidden_pair(self, s: Settings) -> HiddenPair {
        let anchored = self.beta * self.anchor_setting(s);
        match self.anchor_station() {
            Station::A => HiddenPair::new(anchored, -anchored),
            Station::B => HiddenPair::new(-anchored, anchored),
        }
    }
}

/// Applies a setting rotation at the anchor station: the anchoring setting
/// is replaced and the hidden pair follows rigidly, the anchored vector
/// staying at `beta * new_setting` and the partner at `-beta * new_setting`
/// wherever it is. Rotations by the non-anchor station are a protocol
/// violation and are rejected.
pub fn hv_update_on_rotation(
    state: AnchoredPair,
    station: Station,
    new_setting: UnitVec3,
    s: Settings,
) -> Result<(HiddenPair, Settings)> {
    if station != state.anchor_station() {
        return Err(Error::NotAnchorStation { station });
    }
    let moved = match station {
        Station::A => Settings::new(new_setting, s.b),
        Station::B => Settings::new(s.a, new_setting),
    };
    Ok((state.hidden_pair(moved), moved))
}

/// Outcome of one steered pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Transmission {
    pub sender: Station,
    pub receiver_outcome: Sign,
    pub decoded: bool,
    /// Setting the sender rotated to.
    pub sender_setting: UnitVec3,
    /// Hidden pair after the rotation dragged it.
    pub hidden_after: HiddenPair,
}

/// Sends one bit through a shared pair: the anchor station reads its
/// hidden vector (identifying `beta`), rotates so the dragged partner
/// vector lines up with the receiver's setting, and the receiver's
/// measurement comes out forced: -1 encodes 0, +1 encodes 1.
pub fn transmit_bit<R: Rng + ?Sized>(
    bit: bool,
    state: AnchoredPair,
    s: Settings,
    rng: &mut R,
) -> Result<Transmission> {
    let abs_dot = dot(s.a, s.b).abs();
    if abs_dot > 1.0 - COLLINEAR_TOLERANCE {
        return Err(Error::CollinearSettings { abs_dot });
    }
    let sender = state.anchor_station();
    let target = Sign::from_positive(bit);
    // Force the partner vector to target * (receiver's setting): rotate the
    // anchor to -target * beta * that setting, so -beta * new = target * it.
    let receiver_setting = match sender {
        Station::A => s.b,
        Station::B => s.a,
    };
    let sender_setting = target.flip() * (state.beta * receiver_setting);
    let (hidden_after, moved) = hv_update_on_rotation(state, sender, sender_setting, s)?;

    // The receiver measures along its unchanged setting; the law is the
    // usual linear marginal, which the steering has made deterministic.
    let receiver_outcome = match sender {
        Station::A => {
            let p_plus =
                p_cond_b_given_a(Sign::Plus, Sign::Plus, hidden_after, moved).value;
            Sign::from_positive(rng.random::<f64>() < p_plus)
        }
        Station::B => {
            let p_plus = p_marginal_a(Sign::Plus, hidden_after, moved);
            Sign::from_positive(rng.random::<f64>() < p_plus)
        }
    };
    Ok(Transmission {
        sender,
        receiver_outcome,
        decoded: receiver_outcome == Sign::Plus,
        sender_setting,
        hidden_after,
    })
}

/// One pair of a signaling session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PairRecord {
    pub state: AnchoredPair,
    pub sender: Station,
    pub receiver_outcome: Sign,
    pub sent: bool,
    pub decoded: bool,
}

/// A completed bit-channel session.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignalingSession {
    pub settings: Settings,
    pub seed: u64,
    pub records: Vec<PairRecord>,
    pub successes: u64,
}

impl SignalingSession {
    pub fn n(&self) -> u64 {
        self.records.len() as u64
    }

    pub fn success_rate(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        self.successes as f64 / self.records.len() as f64
    }

    /// Fraction of pairs whose sender was station A (alpha = -1).
    pub fn sender_a_fraction(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        let a = self.records.iter().filter(|r| r.sender == Station::A).count();
        a as f64 / self.records.len() as f64
    }
}

/// Runs the bit channel over `bits`: per pair the source draws the pair
/// type uniformly (or with the anchor forced), the anchor station sends,
/// the other receives.
pub fn run_signaling(bits: &[bool], s: Settings, seed: u64) -> Result<SignalingSession> {
    run_signaling_anchored(bits, s, seed, None)
}

/// [`run_signaling`] with the anchor station forced, used by the locality
/// audit to hold the sender at one side.
pub fn run_signaling_anchored(
    bits: &[bool],
    s: Settings,
    seed: u64,
    forced_anchor: Option<Station>,
) -> Result<SignalingSession> {
    let mut records = Vec::with_capacity(bits.len());
    let mut successes = 0;
    for (i, &bit) in bits.iter().enumerate() {
        let mut rng = substream(seed, i as u64);
        let state = match forced_anchor {
            None => AnchoredPair::sample(&mut rng),
            Some(Station::A) => {
                AnchoredPair::new(Sign::Minus, Sign::from_positive(rng.random::<bool>()))
            }
            Some(Station::B) => {
                AnchoredPair::new(Sign::Plus, Sign::from_positive(rng.random::<bool>()))
            }
        };
        let t = transmit_bit(bit, state, s, &mut rng)?;
        if t.decoded == bit {
            successes += 1;
        }
        records.push(PairRecord {
            state,
            sender: t.sender,
            receiver_outcome: t.receiver_outcome,
            sent: bit,
            decoded: t.decoded,
        });
    }
    Ok(SignalingSession { settings: s, seed, records, successes })
}

/// Configuration of a conspiracy run: everything downstream is a pure
/// function of these values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConspiracyConfig {
    /// Seed of stream M (source copy and station A copy).
    pub seed_m: u64,
    /// Seed of stream N (source copy and station B copy).
    pub seed_n: u64,
    /// Seed for the source's pair-type draws.
    pub seed_pair: u64,
    /// Seed for the stations' outcome draws.
    pub seed_outcome: u64,
    /// Time-of-flight delay in ticks between emission and detection.
    /// Bookkeeping only: the stations replay the emission-tick stream
    /// entries whatever the flight time.
    pub delay: u64,
    /// Stream-desync offset: the stations read entry `tick + desync`
    /// instead of `tick`. Zero in the faithful realization; anything else
    /// breaks the anchoring.
    pub desync: u64,
    pub n_events: u64,
    /// Free-choice override: the stations ignore their streams and use
    /// these settings, which decouples settings from anchors and breaks
    /// the singlet statistics.
    pub override_settings: Option<Settings>,
}

impl ConspiracyConfig {
    /// Faithful configuration with all four seeds derived from one master
    /// seed.
    pub fn from_master_seed(seed: u64, n_events: u64) -> Self {
        ConspiracyConfig {
            seed_m: derive_seed(seed, 0),
            seed_n: derive_seed(seed, 1),
            seed_pair: derive_seed(seed, 2),
            seed_outcome: derive_seed(seed, 3),
            delay: 1,
            desync: 0,
            n_events,
            override_settings: None,
        }
    }
}

/// One emission-to-detection event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConspiracyEvent {
    /// Emission tick; detection happens at `tick + delay`.
    pub tick: u64,
    /// Source-side stream values at the emission tick.
    pub m: UnitVec3,
    pub n: UnitVec3,
    pub pair: AnchoredPair,
    pub hidden: HiddenPair,
    /// Settings the stations actually applied at detection.
    pub settings: Settings,
    pub outcome: Outcome,
}

/// A completed conspiracy run: pooled counts plus the full event log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConspiracyRun {
    pub config: ConspiracyConfig,
    /// `counts[sigma][tau]` pooled over all events.
    pub counts: [[u64; 2]; 2],
    pub events: Vec<ConspiracyEvent>,
}

fn station_stream(seed: u64, tick: u64, desync: u64) -> Stream {
    substream(seed, tick + desync)
}

/// Replays the event loop, handing each event to `visit`. The log-free
/// audit paths use this directly to avoid materializing event vectors.
pub fn run_conspiracy_with<F: FnMut(&ConspiracyEvent)>(cfg: &ConspiracyConfig, mut visit: F) {
    let seed_out_a = derive_seed(cfg.seed_outcome, 0);
    let seed_out_b = derive_seed(cfg.seed_outcome, 1);
    for tick in 0..cfg.n_events {
        // Source side: stream entries and pair type at the emission tick.
        let m = random_direction(&mut substream(cfg.seed_m, tick));
        let n = random_direction(&mut substream(cfg.seed_n, tick));
        let pair = AnchoredPair::sample(&mut substream(cfg.seed_pair, tick));
        let hidden = pair.hidden_pair(Settings::new(m, n));

        // Station side at tick + delay: replay the same streams.
        let settings = match cfg.override_settings {
            Some(s) => s,
            None => Settings::new(
                random_direction(&mut station_stream(cfg.seed_m, tick, cfg.desync)),
                random_direction(&mut station_stream(cfg.seed_n, tick, cfg.desync)),
            ),
        };

        let p_sigma = p_marginal_a(Sign::Plus, hidden, settings);
        let sigma = Sign::from_positive(
            substream(seed_out_a, tick).random::<f64>() < p_sigma,
        );
        let p_tau = p_cond_b_given_a(Sign::Plus, sigma, hidden, settings).value;
        let tau = Sign::from_positive(
            substream(seed_out_b, tick).random::<f64>() < p_tau,
        );

        visit(&ConspiracyEvent {
            tick,
            m,
            n,
            pair,
            hidden,
            settings,
            outcome: Outcome::new(sigma, tau),
        });
    }
}

/// Runs the conspiracy realization and logs every event.
pub fn run_conspiracy(cfg: &ConspiracyConfig) -> ConspiracyRun {
    let mut counts = [[0u64; 2]; 2];
    let mut events = Vec::with_capacity(cfg.n_events as usize);
    run_conspiracy_with(cfg, |e| {
        counts[e.outcome.sigma.index()][e.outcome.tau.index()] += 1;
        events.push(*e);
    });
    ConspiracyRun { config: *cfg, counts, events }
}

/// Station A's outcome frequencies `[P(sigma=+1), P(sigma=-1)]` without
/// keeping a log.
pub fn conspiracy_a_marginal(cfg: &ConspiracyConfig) -> [f64; 2] {
    let mut plus = 0u64;
    run_conspiracy_with(cfg, |e| {
        if e.outcome.sigma == Sign::Plus {
            plus += 1;
        }
    });
    let p = plus as f64 / cfg.n_events as f64;
    [p, 1.0 - p]
}

/// Per-bin comparison of the logged joint against the exact law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BinReport {
    /// Settings-dot range `[lo, hi)` of this bin (the last bin is closed).
    pub lo: f64,
    pub hi: f64,
    pub n: u64,
    /// Mean settings dot of the events in the bin.
    pub mean_dot: f64,
    pub counts: [[u64; 2]; 2],
    /// Worst cell deviation from `(1 - sigma*tau*mean_dot)/4`.
    pub max_deviation: f64,
    /// Every cell within four exact-null binomial standard errors.
    pub within_four_stderr: bool,
}

/// Bins events by the applied settings dot `a.b` into `n_bins` equal-width
/// bins over [-1, 1] and compares each bin's empirical joint against the
/// exact law at the bin's mean dot. The law is linear in the dot, so the
/// bin-mean comparison carries no discretization bias. Empty bins are
/// omitted.
pub fn binned_joint_check(events: &[ConspiracyEvent], n_bins: usize) -> Result<Vec<BinReport>> {
    if events.is_empty() || n_bins == 0 {
        return Err(Error::EmptyGrid);
    }
    let mut counts = vec![[[0u64; 2]; 2]; n_bins];
    let mut totals = vec![0u64; n_bins];
    let mut dot_sums = vec![0.0f64; n_bins];
    let width = 2.0 / n_bins as f64;
    for e in events {
        let d = dot(e.settings.a, e.settings.b);
        let k = (((d + 1.0) / width) as usize).min(n_bins - 1);
        counts[k][e.outcome.sigma.index()][e.outcome.tau.index()] += 1;
        totals[k] += 1;
        dot_sums[k] += d;
    }
    let reports = (0..n_bins)
        .filter(|&k| totals[k] > 0)
        .map(|k| {
            let n = totals[k];
            let mean_dot = dot_sums[k] / n as f64;
            let mut max_deviation = 0.0f64;
            let mut within = true;
            for out in Outcome::ALL {
                let p_exact = 0.25 * (1.0 - out.product() * mean_dot);
                let p_hat = counts[k][out.sigma.index()][out.tau.index()] as f64 / n as f64;
                let dev = (p_hat - p_exact).abs();
                max_deviation = max_deviation.max(dev);
                let stderr = (p_exact * (1.0 - p_exact) / n as f64).sqrt();
                if dev > 4.0 * stderr {
                    within = false;
                }
            }
            BinReport {
                lo: -1.0 + k as f64 * width,
                hi: -1.0 + (k + 1) as f64 * width,
                n,
                mean_dot,
                counts: counts[k],
                max_deviation,
                within_four_stderr: within,
            }
        })
        .collect();
    Ok(reports)
}

/// Outcome of a locality audit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalityReport {
    pub realization: String,
    pub n: u64,
    /// Worst shift of station A's outcome frequency across the variations.
    pub audit_max_shift: f64,
    /// Seeds of the baseline run followed by the varied runs.
    pub seeds: Vec<u64>,
}

/// Varies the B-side stream seed while holding everything on the A side
/// fixed, and reports the worst shift in A's marginal outcome frequency.
/// For the conspiracy realization the shift is statistical noise: nothing
/// at A reads anything that changed.
pub fn locality_audit(cfg: &ConspiracyConfig, remote_seeds: &[u64]) -> LocalityReport {
    let baseline = conspiracy_a_marginal(cfg);
    let mut max_shift = 0.0f64;
    let mut seeds = vec![cfg.seed_n];
    for &seed_n in remote_seeds {
        let varied = ConspiracyConfig { seed_n, ..*cfg };
        let marginal = conspiracy_a_marginal(&varied);
        max_shift = max_shift.max((marginal[0] - baseline[0]).abs());
        seeds.push(seed_n);
    }
    LocalityReport {
        realization: "conspiracy".to_owned(),
        n: cfg.n_events,
        audit_max_shift: max_shift,
        seeds,
    }
}

/// B-side message policy for the signaling audit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BitSource {
    Zeros,
    Ones,
    Seeded(u64),
}

impl BitSource {
    pub fn bits(self, n: usize) -> Vec<bool> {
        match self {
            BitSource::Zeros => vec![false; n],
            BitSource::Ones => vec![true; n],
            BitSource::Seeded(seed) => {
                let mut rng = crate::rng::stream_from_seed(seed);
                (0..n).map(|_| rng.random::<bool>()).collect()
            }
        }
    }
}

/// The same audit applied to the signaling realization with the sender
/// held at station B: A is the receiver, so B's message policy is written
/// straight into A's outcomes and the marginal shifts by order one. The
/// first policy is the baseline.
pub fn locality_audit_signaling(
    s: Settings,
    n: usize,
    seed: u64,
    policies: &[BitSource],
) -> Result<LocalityReport> {
    if policies.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let a_plus_frequency = |policy: BitSource| -> Result<f64> {
        let bits = policy.bits(n);
        let session = run_signaling_anchored(&bits, s, seed, Some(Station::B))?;
        let plus = session
            .records
            .iter()
            .filter(|r| r.receiver_outcome == Sign::Plus)
            .count();
        Ok(plus as f64 / n as f64)
    };
    let baseline = a_plus_frequency(policies[0])?;
    let mut max_shift = 0.0f64;
    for &policy in &policies[1..] {
        max_shift = max_shift.max((a_plus_frequency(policy)? - baseline).abs());
    }
    Ok(LocalityReport {
        realization: "signaling".to_owned(),
        n: n as u64,
        audit_max_shift: max_shift,
        seeds: vec![seed],
    })
}

fn write_vec(out: &mut String, v: UnitVec3) {
    use std::fmt::Write as _;
    let [x, y, z] = v.components();
    let _ = write!(out, "{x:.16e};{y:.16e};{z:.16e}");
}

/// Writes the event log as CSV with the header
/// `tick,m,n,alpha,beta,u,v,a,b,sigma,tau`; vector columns pack their
/// components as `x;y;z`. Deterministic formatting, byte-identical for
/// equal runs.
pub fn write_conspiracy_csv<W: Write>(mut w: W, events: &[ConspiracyEvent]) -> io::Result<()> {
    writeln!(w, "tick,m,n,alpha,beta,u,v,a,b,sigma,tau")?;
    for e in events {
        let mut line = String::new();
        {
            use std::fmt::Write as _;
            let _ = write!(line, "{},", e.tick);
            write_vec(&mut line, e.m);
            line.push(',');
            write_vec(&mut line, e.n);
            let _ = write!(
                line,
                ",{},{},",
                i8::from(e.pair.alpha),
                i8::from(e.pair.beta)
            );
            write_vec(&mut line, e.hidden.u);
            line.push(',');
            write_vec(&mut line, e.hidden.v);
            line.push(',');
            write_vec(&mut line, e.settings.a);
            line.push(',');
            write_vec(&mut line, e.settings.b);
            let _ = write!(
                line,
                ",{},{}",
                i8::from(e.outcome.sigma),
                i8::from(e.outcome.tau)
            );
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}
