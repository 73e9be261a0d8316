//! Non-learning phase optimizers: random draw, coordinate greedy, exhaustive
//! search, and greedy-frequency action-space reduction.
//!
//! All searches maximize a caller-supplied objective over index vectors, so
//! the same machinery drives RSMA and NOMA secure rates alike. Every routine
//! counts its objective evaluations; those counters are the deterministic
//! cost metric reported by the experiment harness.
//!
//! The reduction pipeline runs greedy several times (one zero start, the
//! rest random restarts), aligns each run's final configuration to the first
//! run's phase reference — the objective is invariant under a global
//! codebook rotation, so different runs land in arbitrary gauges — and keeps
//! each element's `n_l` most frequently chosen indices as its candidate
//! list.

use rand::Rng;
use thiserror::Error;

use crate::channel::{generate, ChannelError, ChannelRealization};
use crate::config::LinearConfig;
use crate::rates::{make_precoders, PrecoderPolicy, RatesError, Scheme, SecureSumEvaluator};
use crate::ris::{PhaseConfig, ReducedActionSpace, RisError};

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("need at least one trial")]
    NoTrials,
    #[error("need at least one run")]
    NoRuns,
    #[error("need at least one candidate per element")]
    NoCandidates,
    #[error("no final configurations to reduce")]
    NoFinals,
    #[error("final configurations disagree on length")]
    RaggedFinals,
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Rates(#[from] RatesError),
    #[error(transparent)]
    Ris(#[from] RisError),
}

/// Best configuration a search found, with its objective value and the
/// number of objective evaluations spent.
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub phases: PhaseConfig,
    pub value: f64,
    pub evals: u64,
}

/// Draws `trials` uniform configurations and keeps the best (first best on
/// ties). One trial is the classic random-phase baseline.
pub fn random_phase<F: Fn(&[u16]) -> f64>(
    objective: F,
    l: usize,
    mu: u8,
    trials: usize,
    rng: &mut impl Rng,
) -> Result<SearchOutcome, BaselineError> {
    if trials == 0 {
        return Err(BaselineError::NoTrials);
    }
    let levels = 1u16 << mu;
    let mut best: Option<SearchOutcome> = None;
    for _ in 0..trials {
        let indices: Vec<u16> = (0..l).map(|_| rng.gen_range(0..levels)).collect();
        let value = objective(&indices);
        let better = best.as_ref().map_or(true, |b| value > b.value);
        if better {
            best = Some(SearchOutcome {
                phases: PhaseConfig::new(indices, mu)?,
                value,
                evals: 0,
            });
        }
    }
    let mut best = best.expect("trials >= 1");
    best.evals = trials as u64;
    Ok(best)
}

/// One greedy decision: during `sweep`, element `element` was set to
/// `chosen`, leaving the objective at `value`.
#[derive(Debug, Clone, PartialEq)]
pub struct GreedyStep {
    pub sweep: usize,
    pub element: usize,
    pub chosen: u16,
    pub value: f64,
}

/// Result of a coordinate-greedy run.
#[derive(Debug, Clone)]
pub struct GreedyOutcome {
    pub phases: PhaseConfig,
    pub value: f64,
    /// One entry per element visit, in visit order.
    pub log: Vec<GreedyStep>,
    /// Sweeps actually executed (early stop counts its last sweep).
    pub sweeps_run: usize,
    pub evals: u64,
}

/// Coordinate-wise greedy ascent from `start`.
///
/// Each sweep visits elements in order; each visit tries every codebook
/// index ascending and keeps the first strict improvement over the incumbent
/// value, so ties resolve to the lowest index and the current index survives
/// when nothing beats it. Stops after `max_sweeps` sweeps or the first sweep
/// that changes nothing. The incumbent value never decreases.
pub fn greedy<F: Fn(&[u16]) -> f64>(
    objective: F,
    start: &PhaseConfig,
    max_sweeps: usize,
) -> GreedyOutcome {
    let l = start.len();
    let levels = start.levels() as u16;
    let mut indices = start.indices().to_vec();
    let mut value = objective(&indices);
    let mut evals = 1u64;
    let mut log = Vec::new();
    let mut sweeps_run = 0;
    for sweep in 0..max_sweeps {
        sweeps_run = sweep + 1;
        let mut changed = false;
        for element in 0..l {
            let original = indices[element];
            let mut best_idx = original;
            let mut best_val = value;
            for cand in 0..levels {
                indices[element] = cand;
                let v = objective(&indices);
                evals += 1;
                if v > best_val {
                    best_val = v;
                    best_idx = cand;
                }
            }
            indices[element] = best_idx;
            if best_idx != original {
                changed = true;
            }
            value = best_val;
            log.push(GreedyStep {
                sweep,
                element,
                chosen: best_idx,
                value,
            });
        }
        if !changed {
            break;
        }
    }
    GreedyOutcome {
        phases: PhaseConfig::new(indices, start.mu())
            .expect("greedy only writes codebook indices"),
        value,
        log,
        sweeps_run,
        evals,
    }
}

/// Evaluates every configuration of `l` elements at resolution `mu`.
///
/// Ties resolve to the lexicographically smallest configuration, so the
/// result does not depend on enumeration order. Fails when `2^(mu L)`
/// exceeds `cap`.
pub fn exhaustive<F: Fn(&[u16]) -> f64>(
    objective: F,
    l: usize,
    mu: u8,
    cap: u64,
) -> Result<SearchOutcome, BaselineError> {
    let mut best: Option<SearchOutcome> = None;
    let mut evals = 0u64;
    for config in crate::ris::enumerate_all_capped(l, mu, cap)? {
        let value = objective(config.indices());
        evals += 1;
        let better = match &best {
            None => true,
            Some(b) => {
                value > b.value
                    || (value == b.value && config.indices() < b.phases.indices())
            }
        };
        if better {
            best = Some(SearchOutcome {
                phases: config,
                value,
                evals: 0,
            });
        }
    }
    let mut best = best.expect("enumeration yields at least one configuration");
    best.evals = evals;
    Ok(best)
}

/// Rotates `config` by the codebook shift that best matches `reference`,
/// preferring the smallest shift on ties.
fn align_to(reference: &[u16], config: &[u16], levels: u16) -> Vec<u16> {
    let mut best_shift = 0u16;
    let mut best_agree = usize::MIN;
    for shift in 0..levels {
        let agree = config
            .iter()
            .zip(reference)
            .filter(|(&c, &r)| (c + shift) % levels == r)
            .count();
        if agree > best_agree {
            best_agree = agree;
            best_shift = shift;
        }
    }
    config.iter().map(|&c| (c + best_shift) % levels).collect()
}

/// Distills final greedy configurations into per-element candidate lists.
///
/// Each run is first rotated into the first run's phase reference (the
/// objective cannot tell globally rotated configurations apart). Every
/// element then keeps the `n_l` indices it was left at most often — ties
/// prefer the lower index, and indices never chosen rank last — so the
/// reduced space always has exactly `min(n_l, 2^mu)` candidates per element.
pub fn reduce_from_logs(
    finals: &[Vec<u16>],
    n_l: usize,
    mu: u8,
) -> Result<ReducedActionSpace, BaselineError> {
    if n_l == 0 {
        return Err(BaselineError::NoCandidates);
    }
    let Some(first) = finals.first() else {
        return Err(BaselineError::NoFinals);
    };
    let l = first.len();
    if finals.iter().any(|f| f.len() != l) {
        return Err(BaselineError::RaggedFinals);
    }
    let levels = 1u16 << mu;
    let keep = n_l.min(levels as usize);
    let mut tallies = vec![vec![0u64; levels as usize]; l];
    for config in finals {
        let aligned = align_to(first, config, levels);
        for (element, idx) in aligned.iter().enumerate() {
            tallies[element][*idx as usize] += 1;
        }
    }
    let mut candidates = Vec::with_capacity(l);
    let mut counts = Vec::with_capacity(l);
    for tally in &tallies {
        let mut order: Vec<u16> = (0..levels).collect();
        order.sort_by(|&a, &b| {
            tally[b as usize]
                .cmp(&tally[a as usize])
                .then(a.cmp(&b))
        });
        let mut kept: Vec<u16> = order[..keep].to_vec();
        kept.sort_unstable();
        counts.push(kept.iter().map(|&i| tally[i as usize]).collect());
        candidates.push(kept);
    }
    let space = ReducedActionSpace {
        candidates,
        counts,
        mu,
    };
    space.validate()?;
    Ok(space)
}

/// A reduced space together with the greedy runs that produced it.
#[derive(Debug)]
pub struct ReducedBuild {
    pub space: ReducedActionSpace,
    /// Run 0 starts from the all-zero configuration; later runs restart
    /// from uniform random configurations.
    pub runs: Vec<GreedyOutcome>,
}

/// Builds a reduced action space for one channel realization by running
/// greedy `runs` times and keeping each element's `n_l` most frequent final
/// indices. Run 0's outcome doubles as the plain greedy baseline for the
/// instance. `rng` supplies restart configurations (and beamformers under
/// [`PrecoderPolicy::FixedRandom`]).
pub fn build_reduced_for_channel(
    cfg: &LinearConfig,
    ch: &ChannelRealization,
    policy: PrecoderPolicy,
    runs: usize,
    n_l: usize,
    sweeps: usize,
    rng: &mut impl Rng,
) -> Result<ReducedBuild, BaselineError> {
    if runs == 0 {
        return Err(BaselineError::NoRuns);
    }
    let reference = PhaseConfig::zeros(cfg.l, cfg.mu)?;
    let pre = make_precoders(ch, &reference, policy, rng);
    let ev = SecureSumEvaluator::new(cfg, ch, &pre, Scheme::Rsma)?;
    let objective = |idx: &[u16]| ev.secure_sum_indices(idx);
    let levels = 1u16 << cfg.mu;
    let mut outcomes = Vec::with_capacity(runs);
    for run in 0..runs {
        let start = if run == 0 {
            reference.clone()
        } else {
            let indices: Vec<u16> = (0..cfg.l).map(|_| rng.gen_range(0..levels)).collect();
            PhaseConfig::new(indices, cfg.mu)?
        };
        outcomes.push(greedy(objective, &start, sweeps));
    }
    let finals: Vec<Vec<u16>> = outcomes
        .iter()
        .map(|o| o.phases.indices().to_vec())
        .collect();
    let space = reduce_from_logs(&finals, n_l, cfg.mu)?;
    Ok(ReducedBuild {
        space,
        runs: outcomes,
    })
}

/// Builds a reduced action space from `runs` independent channel draws, one
/// zero-started greedy run each. This is the distribution-level variant: the
/// candidate statistics describe the channel ensemble rather than a single
/// realization.
pub fn build_reduced(
    cfg: &LinearConfig,
    policy: PrecoderPolicy,
    runs: usize,
    n_l: usize,
    sweeps: usize,
    rng: &mut impl Rng,
) -> Result<ReducedBuild, BaselineError> {
    if runs == 0 {
        return Err(BaselineError::NoRuns);
    }
    let reference = PhaseConfig::zeros(cfg.l, cfg.mu)?;
    let mut outcomes = Vec::with_capacity(runs);
    for _ in 0..runs {
        let ch = generate(cfg, rng)?;
        let pre = make_precoders(&ch, &reference, policy, rng);
        let ev = SecureSumEvaluator::new(cfg, &ch, &pre, Scheme::Rsma)?;
        outcomes.push(greedy(|idx| ev.secure_sum_indices(idx), &reference, sweeps));
    }
    let finals: Vec<Vec<u16>> = outcomes
        .iter()
        .map(|o| o.phases.indices().to_vec())
        .collect();
    let space = reduce_from_logs(&finals, n_l, cfg.mu)?;
    Ok(ReducedBuild {
        space,
        runs: outcomes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SystemConfig;
    use crate::stream::{Domain, Streams};

    fn desk_cfg(k: usize, m: usize, l: usize) -> LinearConfig {
        SystemConfig {
            k,
            m,
            l,
            d_rk: crate::config::spaced_user_distances(k),
            ..SystemConfig::default()
        }
        .to_linear()
        .unwrap()
    }

    fn instance_evaluator(seed: u64, k: usize, m: usize, l: usize) -> SecureSumEvaluator {
        let cfg = desk_cfg(k, m, l);
        let streams = Streams::new(seed);
        let mut rng = streams.rng(Domain::Channel, 0);
        let ch = generate(&cfg, &mut rng).unwrap();
        let zeros = PhaseConfig::zeros(l, cfg.mu).unwrap();
        let mut prng = streams.rng(Domain::Baseline, 0);
        let pre = make_precoders(&ch, &zeros, PrecoderPolicy::Matched, &mut prng);
        SecureSumEvaluator::new(&cfg, &ch, &pre, Scheme::Rsma).unwrap()
    }

    /// Tabulated objective over 2 elements at mu = 1: values[i0][i1].
    fn table_objective(values: [[f64; 2]; 2]) -> impl Fn(&[u16]) -> f64 {
        move |idx: &[u16]| values[idx[0] as usize][idx[1] as usize]
    }

    #[test]
    fn random_phase_draws_are_uniform() {
        let mut ones = 0usize;
        for seed in 0..1000u64 {
            let mut rng = Streams::new(seed).rng(Domain::Baseline, 0);
            let out = random_phase(|_| 0.0, 1, 1, 1, &mut rng).unwrap();
            ones += usize::from(out.phases.get(0) == 1);
        }
        let frac = ones as f64 / 1000.0;
        assert!((frac - 0.5).abs() < 0.05, "fraction of ones {frac}");
    }

    #[test]
    fn random_phase_keeps_the_best_of_its_trials() {
        let mut rng = Streams::new(1).rng(Domain::Baseline, 0);
        let objective = |idx: &[u16]| -((idx[0] as f64 - 2.0).abs());
        let out = random_phase(objective, 1, 2, 64, &mut rng).unwrap();
        assert_eq!(out.phases.get(0), 2);
        assert_eq!(out.evals, 64);
        assert!(random_phase(|_| 0.0, 1, 1, 0, &mut rng).is_err());
    }

    #[test]
    fn greedy_single_element_equals_exhaustive() {
        for seed in 0..20u64 {
            let ev = instance_evaluator(seed, 2, 2, 1);
            let objective = |idx: &[u16]| ev.secure_sum_indices(idx);
            let start = PhaseConfig::zeros(1, 2).unwrap();
            let g = greedy(objective, &start, 4);
            let e = exhaustive(objective, 1, 2, 1 << 20).unwrap();
            assert_eq!(g.phases.indices(), e.phases.indices(), "seed {seed}");
            assert_eq!(g.value, e.value);
        }
    }

    #[test]
    fn greedy_value_never_decreases_along_the_log() {
        let ev = instance_evaluator(7, 3, 2, 4);
        let start = PhaseConfig::zeros(4, 2).unwrap();
        let out = greedy(|idx| ev.secure_sum_indices(idx), &start, 3);
        let mut last = f64::NEG_INFINITY;
        for step in &out.log {
            assert!(step.value >= last);
            last = step.value;
        }
        assert_eq!(out.value, last);
    }

    #[test]
    fn greedy_stops_early_once_a_sweep_changes_nothing() {
        // Sweep 1 walks (0,0) -> (1,0) -> (1,1); sweep 2 unlocks (0,1),
        // the optimum; sweep 3 confirms it and stops well before the cap.
        let objective = table_objective([[0.0, 1.0], [0.2, 0.5]]);
        let start = PhaseConfig::zeros(2, 1).unwrap();
        let out = greedy(&objective, &start, 50);
        assert_eq!(out.phases.indices(), &[0, 1]);
        assert_eq!(out.value, 1.0);
        assert_eq!(out.sweeps_run, 3);
        assert_eq!(out.evals, 1 + 3 * 2 * 2);
    }

    #[test]
    fn greedy_can_stop_at_a_local_optimum() {
        // Moving element 0 first forfeits the global optimum at (0, 1).
        let objective = table_objective([[0.0, 1.0], [0.5, 0.2]]);
        let out = greedy(&objective, &PhaseConfig::zeros(2, 1).unwrap(), 50);
        assert_eq!(out.phases.indices(), &[1, 0]);
        assert_eq!(out.value, 0.5);
    }

    #[test]
    fn greedy_ties_keep_the_lowest_index() {
        // Flat objective: nothing strictly improves, so nothing moves.
        let out = greedy(|_| 1.0, &PhaseConfig::zeros(3, 2).unwrap(), 5);
        assert_eq!(out.phases.indices(), &[0, 0, 0]);
        assert_eq!(out.sweeps_run, 1);
        // Indices 1 and 3 tie strictly above index 0: 1 wins.
        let objective =
            |idx: &[u16]| if idx[0] == 1 || idx[0] == 3 { 2.0 } else { 0.0 };
        let out = greedy(objective, &PhaseConfig::zeros(1, 2).unwrap(), 5);
        assert_eq!(out.phases.get(0), 1);
    }

    #[test]
    fn greedy_zero_sweeps_only_scores_the_start() {
        let out = greedy(|_| 3.5, &PhaseConfig::zeros(2, 1).unwrap(), 0);
        assert_eq!(out.value, 3.5);
        assert_eq!(out.evals, 1);
        assert_eq!(out.sweeps_run, 0);
        assert!(out.log.is_empty());
    }

    #[test]
    fn greedy_reaches_a_large_fraction_of_exhaustive() {
        let mut ratios = Vec::new();
        for seed in 0..10u64 {
            let ev = instance_evaluator(seed, 3, 2, 3);
            let objective = |idx: &[u16]| ev.secure_sum_indices(idx);
            let g = greedy(objective, &PhaseConfig::zeros(3, 2).unwrap(), 2);
            let e = exhaustive(objective, 3, 2, 1 << 20).unwrap();
            assert!(g.value <= e.value + e.value.abs() * 1e-12);
            ratios.push(g.value / e.value);
        }
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        assert!(mean > 0.95, "mean greedy/exhaustive ratio {mean}");
    }

    #[test]
    fn exhaustive_ties_pick_the_lexicographically_smallest() {
        let objective = |idx: &[u16]| f64::from(idx[0] % 2);
        let out = exhaustive(objective, 2, 2, 1 << 20).unwrap();
        assert_eq!(out.phases.indices(), &[1, 0]);
        assert_eq!(out.evals, 16);
    }

    #[test]
    fn exhaustive_respects_the_cap() {
        assert!(exhaustive(|_| 0.0, 3, 2, 64).is_ok());
        assert!(matches!(
            exhaustive(|_| 0.0, 3, 2, 63),
            Err(BaselineError::Ris(RisError::CardinalityExceedsCap { .. }))
        ));
    }

    #[test]
    fn alignment_counting_matches_the_worked_example() {
        let finals = vec![vec![0, 2], vec![0, 2], vec![0, 0]];
        let space = reduce_from_logs(&finals, 1, 2).unwrap();
        assert_eq!(space.candidates, vec![vec![0], vec![2]]);
        assert_eq!(space.counts, vec![vec![3], vec![2]]);
    }

    #[test]
    fn alignment_folds_global_rotations_onto_the_first_run() {
        // Runs 2 and 3 are global rotations of run 1 and must collapse
        // onto it rather than vote for rotated indices.
        let finals = vec![vec![0, 1, 3], vec![1, 2, 0], vec![3, 0, 2]];
        let space = reduce_from_logs(&finals, 1, 2).unwrap();
        assert_eq!(space.candidates, vec![vec![0], vec![1], vec![3]]);
        assert_eq!(space.counts, vec![vec![3], vec![3], vec![3]]);
    }

    #[test]
    fn reduction_keeps_exactly_n_l_candidates_per_element() {
        let finals = vec![vec![2, 2], vec![2, 0], vec![2, 0], vec![2, 1]];
        let space = reduce_from_logs(&finals, 2, 2).unwrap();
        for cands in &space.candidates {
            assert_eq!(cands.len(), 2);
        }
        // Element 0 saw only index 2; the runner-up is the lowest unseen
        // index.
        assert_eq!(space.candidates[0], vec![0, 2]);
        assert_eq!(space.cardinality(), 4);
    }

    #[test]
    fn reduction_with_full_width_recovers_the_whole_codebook() {
        let finals = vec![vec![1, 3]];
        let space = reduce_from_logs(&finals, 4, 2).unwrap();
        assert_eq!(space.candidates, vec![vec![0, 1, 2, 3]; 2]);
        assert_eq!(space.cardinality(), 16);
    }

    #[test]
    fn reduction_rejects_degenerate_inputs() {
        assert!(matches!(
            reduce_from_logs(&[], 1, 2),
            Err(BaselineError::NoFinals)
        ));
        assert!(matches!(
            reduce_from_logs(&[vec![0, 1]], 0, 2),
            Err(BaselineError::NoCandidates)
        ));
        assert!(matches!(
            reduce_from_logs(&[vec![0, 1], vec![0]], 1, 2),
            Err(BaselineError::RaggedFinals)
        ));
    }

    #[test]
    fn single_run_single_candidate_reduction_is_the_greedy_configuration() {
        let cfg = desk_cfg(2, 2, 3);
        let mut rng = Streams::new(5).rng(Domain::Channel, 0);
        let ch = generate(&cfg, &mut rng).unwrap();
        let mut brng = Streams::new(5).rng(Domain::Baseline, 0);
        let build = build_reduced_for_channel(
            &cfg,
            &ch,
            PrecoderPolicy::Matched,
            1,
            1,
            2,
            &mut brng,
        )
        .unwrap();
        assert_eq!(build.runs.len(), 1);
        let greedy_final = build.runs[0].phases.indices();
        let singles: Vec<Vec<u16>> = greedy_final.iter().map(|&i| vec![i]).collect();
        assert_eq!(build.space.candidates, singles);
        assert_eq!(build.space.cardinality(), 1);
    }

    #[test]
    fn per_channel_reduction_contains_the_zero_start_greedy_final() {
        let cfg = desk_cfg(2, 2, 4);
        let mut rng = Streams::new(9).rng(Domain::Channel, 0);
        let ch = generate(&cfg, &mut rng).unwrap();
        let mut brng = Streams::new(9).rng(Domain::Baseline, 0);
        let build = build_reduced_for_channel(
            &cfg,
            &ch,
            PrecoderPolicy::Matched,
            6,
            2,
            2,
            &mut brng,
        )
        .unwrap();
        assert_eq!(build.runs.len(), 6);
        assert!(build.space.contains(&build.runs[0].phases));
        assert!(build.space.cardinality() <= 1 << 4);
        for run in &build.runs[1..] {
            assert!(run.value > 0.0);
        }
    }

    #[test]
    fn distribution_level_reduction_is_reproducible() {
        let cfg = desk_cfg(2, 2, 3);
        let mut a = Streams::new(4).rng(Domain::Baseline, 1);
        let mut b = Streams::new(4).rng(Domain::Baseline, 1);
        let one = build_reduced(&cfg, PrecoderPolicy::Matched, 4, 2, 2, &mut a).unwrap();
        let two = build_reduced(&cfg, PrecoderPolicy::Matched, 4, 2, 2, &mut b).unwrap();
        assert_eq!(one.space, two.space);
        assert_eq!(one.runs.len(), 4);
    }
}
