//! Keyed noise scheduling and majority-vote disclosure analysis.
//!
//! A transmitter and its intended receivers share a secret that drives a
//! per-slot obfuscation level through a hash schedule. Holders of the secret
//! know which level (and hence which trained model) applies in each slot;
//! everyone else sees an unpredictable level sequence. The rest of the
//! module quantifies how many per-slot observations a voter needs for a
//! reliable identification, both in closed form and by simulation.

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::seed::derive_rng;

/// First eight bytes, big endian, of `SHA-256(secret || slot_be8)`.
pub fn schedule_word(secret: &[u8], slot: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(secret);
    h.update(slot.to_be_bytes());
    let digest = h.finalize();
    u64::from_be_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}

/// Obfuscation level for a slot: the schedule word reduced mod `n_levels`.
pub fn noise_level_at(secret: &[u8], slot: u64, n_levels: usize) -> Result<usize> {
    if n_levels == 0 {
        return Err(Error::InvalidConfig("n_levels must be positive".into()));
    }
    Ok((schedule_word(secret, slot) % n_levels as u64) as usize)
}

/// Probability of exactly `v` successes in `w` independent trials.
///
/// Small trial counts use the exact multiplicative binomial coefficient so
/// that dyadic probabilities come out bit-exact; larger counts switch to
/// log-space with a cumulative log-factorial table to avoid overflow.
pub fn binomial_pmf(w: u64, v: u64, p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidConfig(format!("p = {p} outside [0, 1]")));
    }
    if v > w {
        return Err(Error::InvalidConfig(format!("v = {v} exceeds w = {w}")));
    }
    if p == 0.0 {
        return Ok(if v == 0 { 1.0 } else { 0.0 });
    }
    if p == 1.0 {
        return Ok(if v == w { 1.0 } else { 0.0 });
    }
    if w <= 50 {
        let k = v.min(w - v);
        let mut c = 1.0f64;
        for i in 1..=k {
            c = c * (w - k + i) as f64 / i as f64;
        }
        Ok(c * p.powi(v as i32) * (1.0 - p).powi((w - v) as i32))
    } else {
        let mut lf = vec![0.0f64; w as usize + 1];
        for k in 1..=w as usize {
            lf[k] = lf[k - 1] + (k as f64).ln();
        }
        let ln_pmf = lf[w as usize] - lf[v as usize] - lf[(w - v) as usize]
            + v as f64 * p.ln()
            + (w - v) as f64 * (1.0 - p).ln();
        Ok(ln_pmf.exp())
    }
}

/// Probability that at least half of `votes` independent observers, each
/// correct with probability `p_correct`, vote for the true class.
///
/// Exact half counts as success, so for even vote counts this is an upper
/// bound on a tie-breaking vote and exact for odd counts.
pub fn majority_success_prob(votes: u64, p_correct: f64) -> Result<f64> {
    if votes == 0 {
        return Err(Error::InvalidConfig("votes must be positive".into()));
    }
    let from = votes.div_ceil(2);
    let mut acc = 0.0;
    for v in from..=votes {
        acc += binomial_pmf(votes, v, p_correct)?;
    }
    Ok(acc.min(1.0))
}

/// Most frequent class index; ties resolve to the smallest index.
pub fn majority_vote(votes: &[usize]) -> Result<usize> {
    if votes.is_empty() {
        return Err(Error::EmptyInput("majority_vote"));
    }
    let max_class = *votes.iter().max().expect("nonempty");
    let mut counts = vec![0usize; max_class + 1];
    for &v in votes {
        counts[v] += 1;
    }
    let best = *counts.iter().max().expect("nonempty");
    Ok(counts.iter().position(|&c| c == best).expect("nonempty"))
}

/// Monte Carlo estimate of [`majority_success_prob`] from Bernoulli draws.
pub fn mc_vote_success(votes: u64, p_correct: f64, iters: u64, seed: u64) -> Result<f64> {
    if votes == 0 || iters == 0 {
        return Err(Error::InvalidConfig(
            "votes and iters must be positive".into(),
        ));
    }
    if !(0.0..=1.0).contains(&p_correct) {
        return Err(Error::InvalidConfig(format!(
            "p_correct = {p_correct} outside [0, 1]"
        )));
    }
    let need = votes.div_ceil(2);
    let mut wins = 0u64;
    for it in 0..iters {
        let mut rng = derive_rng(seed, &[0x4d43, it]);
        let correct = (0..votes)
            .filter(|_| rng.random::<f64>() < p_correct)
            .count() as u64;
        if correct >= need {
            wins += 1;
        }
    }
    Ok(wins as f64 / iters as f64)
}

/// Per-observation accuracy tables for everyone involved in a disclosure
/// run, indexed by obfuscation level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBank {
    /// Accuracy of a secret holder using the model matched to each level.
    pub legit_accuracy: Vec<f64>,
    /// Accuracy of an outsider stuck with a mismatched model, per level.
    pub adversary_accuracy: Vec<f64>,
}

impl ModelBank {
    pub fn validate(&self, n_levels: usize) -> Result<()> {
        for (name, table) in [
            ("legit_accuracy", &self.legit_accuracy),
            ("adversary_accuracy", &self.adversary_accuracy),
        ] {
            if table.len() != n_levels {
                return Err(Error::InvalidConfig(format!(
                    "{name} has {} entries, want {n_levels}",
                    table.len()
                )));
            }
            if table.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::InvalidConfig(format!(
                    "{name} holds a value outside [0, 1]"
                )));
            }
        }
        Ok(())
    }
}

/// Disclosure simulation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisclosureConfig {
    pub secret: Vec<u8>,
    pub n_slots: u64,
    pub votes_per_slot: u64,
    pub n_levels: usize,
    pub n_classes: usize,
}

impl DisclosureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.secret.is_empty() {
            return Err(Error::EmptyInput("disclosure secret"));
        }
        if self.n_slots == 0 || self.votes_per_slot == 0 {
            return Err(Error::InvalidConfig(
                "n_slots and votes_per_slot must be positive".into(),
            ));
        }
        if self.n_levels == 0 || self.n_classes < 2 {
            return Err(Error::InvalidConfig(
                "need at least one level and two classes".into(),
            ));
        }
        Ok(())
    }
}

/// One simulated time slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotOutcome {
    pub slot: u64,
    pub level: usize,
    pub true_device: usize,
    pub legit_vote: usize,
    pub adversary_vote: usize,
}

/// Aggregate result of a disclosure simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisclosureReport {
    pub outcomes: Vec<SlotOutcome>,
    pub legit_rate: f64,
    pub adversary_rate: f64,
}

fn draw_vote<R: Rng>(rng: &mut R, truth: usize, p: f64, n_classes: usize) -> usize {
    if rng.random::<f64>() < p {
        truth
    } else {
        // uniform over the wrong classes
        let mut w = rng.random_range(0..n_classes - 1);
        if w >= truth {
            w += 1;
        }
        w
    }
}

/// Runs the slotted disclosure protocol with synthetic voters.
///
/// Each slot picks its obfuscation level from the hash schedule and a true
/// transmitter uniformly at random, then both parties cast
/// `votes_per_slot` votes at their accuracy for that level and aggregate by
/// majority. Every random stream is derived from `seed` and the slot index,
/// so reruns reproduce outcomes exactly, slot by slot.
pub fn simulate_disclosure(
    cfg: &DisclosureConfig,
    bank: &ModelBank,
    seed: u64,
) -> Result<DisclosureReport> {
    cfg.validate()?;
    bank.validate(cfg.n_levels)?;
    let mut outcomes = Vec::with_capacity(cfg.n_slots as usize);
    let (mut legit_ok, mut adv_ok) = (0u64, 0u64);
    for slot in 0..cfg.n_slots {
        let level = noise_level_at(&cfg.secret, slot, cfg.n_levels)?;
        let mut rng = derive_rng(seed, &[0x534c, slot]);
        let truth = rng.random_range(0..cfg.n_classes);

        let cast = |p: f64, rng: &mut rand_chacha::ChaCha8Rng| -> Result<usize> {
            let votes: Vec<usize> = (0..cfg.votes_per_slot)
                .map(|_| draw_vote(rng, truth, p, cfg.n_classes))
                .collect();
            majority_vote(&votes)
        };
        let legit_vote = cast(bank.legit_accuracy[level], &mut rng)?;
        let adversary_vote = cast(bank.adversary_accuracy[level], &mut rng)?;

        legit_ok += (legit_vote == truth) as u64;
        adv_ok += (adversary_vote == truth) as u64;
        outcomes.push(SlotOutcome {
            slot,
            level,
            true_device: truth,
            legit_vote,
            adversary_vote,
        });
    }
    Ok(DisclosureReport {
        outcomes,
        legit_rate: legit_ok as f64 / cfg.n_slots as f64,
        adversary_rate: adv_ok as f64 / cfg.n_slots as f64,
    })
}

/// Majority-vote success as a function of the vote count, for one voter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsuccCurve {
    /// Per-round accuracy handicap; zero on the secret holder's row.
    pub delta: f64,
    /// Per-round accuracy after the handicap.
    pub per_round: f64,
    /// Success probability for `w = 1..=w_max` votes, indexed by `w - 1`.
    pub p_succ: Vec<f64>,
}

/// Success-vs-votes table for a secret holder with per-round accuracy `p`
/// and one handicapped voter per entry of `deltas`.
///
/// The first row is the secret holder's (`delta` zero); an explicit zero in
/// `deltas` produces an identical extra row.
pub fn psucc_curves(p: f64, deltas: &[f64], w_max: u64) -> Result<Vec<PsuccCurve>> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidConfig(format!("p = {p} outside [0, 1]")));
    }
    if w_max == 0 {
        return Err(Error::InvalidConfig("w_max must be positive".into()));
    }
    let mut rows = Vec::with_capacity(deltas.len() + 1);
    for &delta in std::iter::once(&0.0).chain(deltas) {
        if delta < 0.0 || p - delta < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "delta = {delta} must lie in [0, p = {p}]"
            )));
        }
        let per_round = p - delta;
        let p_succ = (1..=w_max)
            .map(|w| majority_success_prob(w, per_round))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(PsuccCurve {
            delta,
            per_round,
            p_succ,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_is_deterministic_and_secret_sensitive() {
        let a = schedule_word(b"alpha", 7);
        assert_eq!(a, schedule_word(b"alpha", 7));
        assert_ne!(a, schedule_word(b"alpha", 8));
        assert_ne!(a, schedule_word(b"beta", 7));
    }

    #[test]
    fn adjacent_slots_flip_about_half_the_word_bits() {
        let mut flipped = 0u32;
        let pairs = 2000u64;
        for t in 0..pairs {
            let x = schedule_word(b"avalanche-check", t);
            let y = schedule_word(b"avalanche-check", t + 1);
            flipped += (x ^ y).count_ones();
        }
        let frac = flipped as f64 / (64.0 * pairs as f64);
        assert!(
            (0.4..=0.6).contains(&frac),
            "bit flip fraction {frac} outside [0.4, 0.6]"
        );
    }

    #[test]
    fn levels_are_roughly_uniform() {
        let m = 5usize;
        let mut counts = vec![0usize; m];
        let slots = 10_000u64;
        for t in 0..slots {
            counts[noise_level_at(b"uniformity", t, m).unwrap()] += 1;
        }
        for (lvl, &c) in counts.iter().enumerate() {
            let f = c as f64 / slots as f64;
            assert!(
                (0.15..=0.25).contains(&f),
                "level {lvl} frequency {f} far from 1/5"
            );
        }
    }

    #[test]
    fn six_voters_at_two_thirds_accuracy() {
        // 13_955_415_210 / 15_625_000_000, summed as a rational by hand
        let p = majority_success_prob(6, 0.66).unwrap();
        assert!((p - 0.893_146_573_44).abs() < 1e-10, "got {p}");
    }

    #[test]
    fn all_six_wrong_matches_the_sixth_power() {
        let p = binomial_pmf(6, 0, 0.66).unwrap();
        let want = 0.34f64.powi(6);
        assert!((p - want).abs() < 1e-15, "got {p}, want {want}");
        assert!((want - 0.001_544_804_416).abs() < 1e-15);
    }

    #[test]
    fn six_voters_at_high_accuracy_nearly_always_win() {
        // 244_131_840 / 244_140_625
        let p = majority_success_prob(6, 0.96).unwrap();
        assert!((p - 0.999_964_016_64).abs() < 1e-10, "got {p}");
    }

    #[test]
    fn five_fair_coins_split_evenly() {
        // every term is dyadic, so the sum must be exactly one half
        assert_eq!(majority_success_prob(5, 0.5).unwrap(), 0.5);
    }

    #[test]
    fn odd_fair_votes_stay_even_in_log_space() {
        let p = majority_success_prob(101, 0.5).unwrap();
        assert!((p - 0.5).abs() < 1e-12, "got {p}");
    }

    #[test]
    fn pmf_sums_to_one_on_both_paths() {
        for &(w, p, tol) in &[(40u64, 0.37, 1e-12), (200u64, 0.37, 1e-10)] {
            let total: f64 = (0..=w).map(|v| binomial_pmf(w, v, p).unwrap()).sum();
            assert!((total - 1.0).abs() < tol, "w={w}: sum {total}");
        }
    }

    #[test]
    fn success_grows_with_accuracy_and_vote_count() {
        let mut last = 0.0;
        for k in 1..10 {
            let p = majority_success_prob(7, 0.1 * k as f64).unwrap();
            assert!(p > last, "not increasing at p={}", 0.1 * k as f64);
            last = p;
        }
        assert!(
            majority_success_prob(11, 0.7).unwrap() > majority_success_prob(5, 0.7).unwrap()
        );
        assert!(majority_success_prob(3, 0.7).unwrap() > 0.7);
    }

    #[test]
    fn vote_counting_breaks_ties_low() {
        assert_eq!(majority_vote(&[0, 1, 1]).unwrap(), 1);
        assert_eq!(majority_vote(&[0, 0, 1, 1]).unwrap(), 0);
        assert_eq!(majority_vote(&[2, 1, 2, 1, 2]).unwrap(), 2);
        assert_eq!(majority_vote(&[4]).unwrap(), 4);
        assert!(majority_vote(&[]).is_err());
    }

    #[test]
    fn monte_carlo_agrees_with_the_closed_form() {
        let iters = 20_000u64;
        let mc = mc_vote_success(7, 0.8, iters, 99).unwrap();
        let exact = majority_success_prob(7, 0.8).unwrap();
        let se = (exact * (1.0 - exact) / iters as f64).sqrt();
        assert!(
            (mc - exact).abs() <= 3.0 * se,
            "mc {mc} vs exact {exact}, 3se {}",
            3.0 * se
        );
    }

    fn small_cfg() -> DisclosureConfig {
        DisclosureConfig {
            secret: b"slot-schedule".to_vec(),
            n_slots: 400,
            votes_per_slot: 5,
            n_levels: 5,
            n_classes: 7,
        }
    }

    #[test]
    fn secret_holders_beat_outsiders_by_a_wide_margin() {
        let cfg = small_cfg();
        let bank = ModelBank {
            legit_accuracy: vec![0.95; 5],
            adversary_accuracy: vec![1.0 / 7.0; 5],
        };
        let rep = simulate_disclosure(&cfg, &bank, 5).unwrap();
        assert!(rep.legit_rate > 0.95, "legit {}", rep.legit_rate);
        assert!(rep.adversary_rate < 0.35, "adversary {}", rep.adversary_rate);
        assert_eq!(rep.outcomes.len(), 400);
    }

    #[test]
    fn reruns_reproduce_every_slot() {
        let cfg = small_cfg();
        let bank = ModelBank {
            legit_accuracy: vec![0.9, 0.8, 0.7, 0.6, 0.5],
            adversary_accuracy: vec![0.5, 0.4, 0.3, 0.25, 0.2],
        };
        let a = simulate_disclosure(&cfg, &bank, 11).unwrap();
        let b = simulate_disclosure(&cfg, &bank, 11).unwrap();
        assert_eq!(a.outcomes, b.outcomes);
        let c = simulate_disclosure(&cfg, &bank, 12).unwrap();
        assert_ne!(a.outcomes, c.outcomes);
    }

    #[test]
    fn bank_shape_is_checked() {
        let cfg = small_cfg();
        let bank = ModelBank {
            legit_accuracy: vec![0.9; 4],
            adversary_accuracy: vec![0.2; 5],
        };
        assert!(simulate_disclosure(&cfg, &bank, 1).is_err());
    }

    #[test]
    fn success_curves_tabulate_every_voter() {
        let rows = psucc_curves(0.96, &[0.0, 0.1, 0.3, 0.5], 15).unwrap();
        assert_eq!(rows.len(), 5);
        assert_eq!(rows[0].delta, 0.0);
        assert_eq!(rows[0], rows[1], "explicit zero handicap row must match");
        for row in &rows {
            assert_eq!(row.p_succ.len(), 15);
            assert_eq!(row.p_succ[0], row.per_round, "one vote is the raw odds");
        }
        assert!(rows[0].p_succ[5] > 0.99, "six votes at 0.96 per round");
    }

    #[test]
    fn success_curves_grow_with_odd_votes_above_a_coin_flip() {
        for row in psucc_curves(0.96, &[0.1, 0.2, 0.3, 0.4], 15).unwrap() {
            if row.per_round <= 0.5 {
                continue;
            }
            let odd: Vec<f64> = row.p_succ.iter().copied().step_by(2).collect();
            for pair in odd.windows(2) {
                assert!(
                    pair[1] >= pair[0],
                    "per_round {} fell from {} to {}",
                    row.per_round,
                    pair[0],
                    pair[1]
                );
            }
        }
    }

    #[test]
    fn success_curves_reject_a_handicap_past_the_baseline() {
        assert!(psucc_curves(0.4, &[0.5], 10).is_err());
        assert!(psucc_curves(0.9, &[-0.1], 10).is_err());
        assert!(psucc_curves(0.9, &[0.1], 0).is_err());
        assert!(psucc_curves(1.2, &[], 3).is_err());
    }
}
