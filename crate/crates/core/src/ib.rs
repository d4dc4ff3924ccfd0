//! Information-bottleneck machinery: objective evaluation for both
//! compression criteria, a self-consistent alternating solver with restarts,
//! an exhaustive deterministic-encoder search with its relevance-constrained
//! variant, and a greedy agglomerative fallback for large supports.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::dist::{JointPmf, Symbol};
use crate::error::{Error, Result};
use crate::learners::{encoder_stats, Encoder, EncoderStats};
use crate::log2::kahan_sum;
use crate::rng::{chain, CounterRng};

/// Largest deterministic-encoder enumeration attempted exhaustively.
pub const ENUMERATION_CAP: u64 = 2_000_000;

/// Relevance slack, in bits, within which an encoder counts as attaining the
/// maximal achievable I(Y;X̂) when selecting the constrained optimum.
pub const RELEVANCE_TOL: f64 = 1e-9;

/// Compression cost `C(p)` used by the objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompressionCriterion {
    /// `C(p) = I(X;X̂)` — the classic bottleneck cost.
    MutualInfo,
    /// `C(p) = H(X̂)` — the deterministic-bottleneck cost.
    Entropy,
}

impl CompressionCriterion {
    pub fn label(&self) -> &'static str {
        match self {
            CompressionCriterion::MutualInfo => "mutual_info",
            CompressionCriterion::Entropy => "entropy",
        }
    }
}

/// A bottleneck instance: the joint source, the tradeoff `beta`, the cluster
/// budget `k`, and the compression criterion.
#[derive(Debug, Clone)]
pub struct IbProblem {
    joint: JointPmf,
    beta: f64,
    k: usize,
    criterion: CompressionCriterion,
}

impl IbProblem {
    pub fn new(
        joint: JointPmf,
        beta: f64,
        k: usize,
        criterion: CompressionCriterion,
    ) -> Result<Self> {
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::ParamOutOfRange {
                name: "beta",
                value: beta,
                expected: "finite and >= 0",
            });
        }
        if k == 0 {
            return Err(Error::ParamOutOfRange {
                name: "k",
                value: 0.0,
                expected: ">= 1",
            });
        }
        Ok(Self {
            joint,
            beta,
            k,
            criterion,
        })
    }

    pub fn joint(&self) -> &JointPmf {
        &self.joint
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn criterion(&self) -> CompressionCriterion {
        self.criterion
    }
}

/// `C(p) - β·I(Y;X̂)` with `C` chosen by the problem's criterion.
pub fn ib_objective(enc: &Encoder, prob: &IbProblem) -> f64 {
    let stats = encoder_stats(enc, &prob.joint);
    objective_from_stats(&stats, prob)
}

fn objective_from_stats(stats: &EncoderStats, prob: &IbProblem) -> f64 {
    let c = match prob.criterion {
        CompressionCriterion::MutualInfo => stats.i_xxhat,
        CompressionCriterion::Entropy => stats.h_xhat,
    };
    c - prob.beta * stats.i_yxhat
}

/// A solver run: the (canonicalized) encoder it settled on, its exact
/// statistics and objective, and how the iteration went.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub encoder: Encoder,
    pub stats: EncoderStats,
    pub objective: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Objective after every completed update sweep.
    pub objective_trace: Vec<f64>,
}

/// Alternating self-consistent solver for the classic (mutual-information)
/// bottleneck: rows update to `∝ p(x̂)·2^(-β·KL(p(y|x) ‖ p(y|x̂)))` against
/// the exactly marginalized cluster prior and decoder, from a seeded random
/// start, until the largest row change drops below `tol` or `iters` sweeps
/// pass (reported via `converged` rather than an error).
pub fn solve_self_consistent(
    prob: &IbProblem,
    iters: usize,
    tol: f64,
    seed: u64,
) -> Result<SolveOutcome> {
    if prob.criterion != CompressionCriterion::MutualInfo {
        return Err(Error::UnsupportedCriterion {
            criterion: prob.criterion.label(),
            operation: "solve_self_consistent",
        });
    }
    if iters == 0 {
        return Err(Error::ParamOutOfRange {
            name: "iters",
            value: 0.0,
            expected: ">= 1",
        });
    }
    if !(tol > 0.0) {
        return Err(Error::ParamOutOfRange {
            name: "tol",
            value: tol,
            expected: "> 0",
        });
    }
    let joint = &prob.joint;
    let k = prob.k;
    let n = joint.x_support();
    let px: Vec<f64> = (0..n).map(|x| joint.prob(x, 0) + joint.prob(x, 1)).collect();
    let active: Vec<usize> = (0..n).filter(|&x| px[x] > 0.0).collect();

    // Seeded random start: independent exponential weights per row.
    let mut rows: Vec<Vec<f64>> = active
        .iter()
        .map(|&x| {
            let mut rng = CounterRng::new(chain(seed, &[x as u64]));
            let w: Vec<f64> = (0..k)
                .map(|_| (-(1.0 - rng.next_f64()).ln()).max(1e-300))
                .collect();
            let total = kahan_sum(w.iter().copied());
            w.into_iter().map(|v| v / total).collect()
        })
        .collect();

    let cond: Vec<[f64; 2]> = active
        .iter()
        .map(|&x| [joint.prob(x, 0) / px[x], joint.prob(x, 1) / px[x]])
        .collect();

    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..iters {
        iterations += 1;
        // Cluster prior and decoder by exact marginalization over x.
        let p_cell: Vec<f64> = (0..k)
            .map(|c| kahan_sum(active.iter().enumerate().map(|(i, &x)| px[x] * rows[i][c])))
            .collect();
        let decoder: Vec<[f64; 2]> = (0..k)
            .map(|c| {
                if p_cell[c] > 0.0 {
                    let m0 = kahan_sum(
                        active
                            .iter()
                            .enumerate()
                            .map(|(i, &x)| joint.prob(x, 0) * rows[i][c]),
                    );
                    let m1 = kahan_sum(
                        active
                            .iter()
                            .enumerate()
                            .map(|(i, &x)| joint.prob(x, 1) * rows[i][c]),
                    );
                    [m0 / p_cell[c], m1 / p_cell[c]]
                } else {
                    [0.0, 0.0]
                }
            })
            .collect();

        let mut max_change: f64 = 0.0;
        for (i, row) in rows.iter_mut().enumerate() {
            let mut lw = vec![f64::NEG_INFINITY; k];
            let mut shift = f64::NEG_INFINITY;
            for c in 0..k {
                if p_cell[c] > 0.0 {
                    let kl = kl_bits(cond[i], decoder[c]);
                    // beta = 0 must ignore the divergence even when it is
                    // infinite (0 * inf would poison the row with NaN).
                    let penalty = if prob.beta == 0.0 { 0.0 } else { prob.beta * kl };
                    lw[c] = p_cell[c].log2() - penalty;
                    shift = shift.max(lw[c]);
                }
            }
            let weights: Vec<f64> = lw
                .iter()
                .map(|&v| {
                    if v == f64::NEG_INFINITY {
                        0.0
                    } else {
                        (v - shift).exp2()
                    }
                })
                .collect();
            let total = kahan_sum(weights.iter().copied());
            for c in 0..k {
                let updated = weights[c] / total;
                max_change = max_change.max((updated - row[c]).abs());
                row[c] = updated;
            }
        }

        trace.push(objective_from_stats(
            &stats_of_rows(&active, &rows, k, joint, &px),
            prob,
        ));
        if max_change < tol {
            converged = true;
            break;
        }
    }

    let table: BTreeMap<Symbol, Vec<f64>> = active
        .iter()
        .enumerate()
        .map(|(i, &x)| (x as Symbol, rows[i].clone()))
        .collect();
    let encoder = Encoder::new(k, table, 0)?.canonicalized();
    let stats = encoder_stats(&encoder, joint);
    Ok(SolveOutcome {
        objective: objective_from_stats(&stats, prob),
        stats,
        encoder,
        converged,
        iterations,
        objective_trace: trace,
    })
}

/// KL divergence in bits between two distributions over the binary label.
fn kl_bits(p: [f64; 2], q: [f64; 2]) -> f64 {
    let mut total = 0.0;
    for y in 0..2 {
        if p[y] > 0.0 {
            total += p[y] * (p[y] / q[y]).log2();
        }
    }
    total
}

/// Exact statistics of a soft row table without building an [`Encoder`];
/// matches [`encoder_stats`] term for term.
fn stats_of_rows(
    active: &[usize],
    rows: &[Vec<f64>],
    k: usize,
    joint: &JointPmf,
    px: &[f64],
) -> EncoderStats {
    let p_cell: Vec<f64> = (0..k)
        .map(|c| kahan_sum(active.iter().enumerate().map(|(i, &x)| px[x] * rows[i][c])))
        .collect();
    let p_cell_y: Vec<[f64; 2]> = (0..k)
        .map(|c| {
            [
                kahan_sum(
                    active
                        .iter()
                        .enumerate()
                        .map(|(i, &x)| joint.prob(x, 0) * rows[i][c]),
                ),
                kahan_sum(
                    active
                        .iter()
                        .enumerate()
                        .map(|(i, &x)| joint.prob(x, 1) * rows[i][c]),
                ),
            ]
        })
        .collect();
    let py = joint.y_marginal();
    let h_xhat = kahan_sum(
        p_cell
            .iter()
            .filter(|&&v| v > 0.0)
            .map(|&v| -v * v.log2()),
    );
    let i_xxhat = kahan_sum(active.iter().enumerate().flat_map(|(i, &x)| {
        let p_cell = &p_cell;
        let rows = &rows;
        (0..k).map(move |c| {
            let q = rows[i][c];
            if px[x] > 0.0 && q > 0.0 {
                px[x] * q * (q / p_cell[c]).log2()
            } else {
                0.0
            }
        })
    }));
    let i_yxhat = kahan_sum((0..k).flat_map(|c| {
        let cell_mass = p_cell[c];
        let cell_y = p_cell_y[c];
        (0..2).map(move |y| {
            let pcy = cell_y[y];
            if pcy > 0.0 {
                pcy * (pcy / (cell_mass * py[y])).log2()
            } else {
                0.0
            }
        })
    }));
    EncoderStats {
        i_xxhat: i_xxhat.max(0.0),
        i_yxhat: i_yxhat.max(0.0),
        h_xhat: h_xhat.max(0.0),
    }
}

/// Runs [`solve_self_consistent`] from `restarts` derived seeds in parallel
/// and keeps the lowest objective (ties to the earliest restart).
pub fn solve_best_of(
    prob: &IbProblem,
    iters: usize,
    tol: f64,
    seed: u64,
    restarts: u64,
) -> Result<SolveOutcome> {
    if restarts == 0 {
        return Err(Error::ParamOutOfRange {
            name: "restarts",
            value: 0.0,
            expected: ">= 1",
        });
    }
    let outcomes: Vec<SolveOutcome> = (0..restarts)
        .into_par_iter()
        .map(|j| solve_self_consistent(prob, iters, tol, chain(seed, &[j])))
        .collect::<Result<Vec<_>>>()?;
    Ok(outcomes
        .into_iter()
        .reduce(|best, cand| if cand.objective < best.objective { cand } else { best })
        .expect("at least one restart"))
}

/// Statistics of a deterministic cell assignment, computed with arithmetic
/// identical to [`encoder_stats`] on the corresponding one-hot encoder.
fn assignment_stats(assign: &[usize], k: usize, joint: &JointPmf) -> EncoderStats {
    let n = joint.x_support();
    let px: Vec<f64> = (0..n).map(|x| joint.prob(x, 0) + joint.prob(x, 1)).collect();
    let p_cell: Vec<f64> = (0..k)
        .map(|c| {
            kahan_sum(
                (0..n)
                    .filter(|&x| assign[x] == c && px[x] != 0.0)
                    .map(|x| px[x]),
            )
        })
        .collect();
    let p_cell_y: Vec<[f64; 2]> = (0..k)
        .map(|c| {
            [
                kahan_sum(
                    (0..n)
                        .filter(|&x| assign[x] == c && joint.prob(x, 0) != 0.0)
                        .map(|x| joint.prob(x, 0)),
                ),
                kahan_sum(
                    (0..n)
                        .filter(|&x| assign[x] == c && joint.prob(x, 1) != 0.0)
                        .map(|x| joint.prob(x, 1)),
                ),
            ]
        })
        .collect();
    let py = joint.y_marginal();
    let h_xhat = kahan_sum(
        p_cell
            .iter()
            .filter(|&&v| v > 0.0)
            .map(|&v| -v * v.log2()),
    );
    let i_xxhat = kahan_sum((0..n).map(|x| {
        if px[x] > 0.0 {
            px[x] * 1.0 * (1.0 / p_cell[assign[x]]).log2()
        } else {
            0.0
        }
    }));
    let i_yxhat = kahan_sum((0..k).flat_map(|c| {
        let cell_mass = p_cell[c];
        let cell_y = p_cell_y[c];
        (0..2).map(move |y| {
            let pcy = cell_y[y];
            if pcy > 0.0 {
                pcy * (pcy / (cell_mass * py[y])).log2()
            } else {
                0.0
            }
        })
    }));
    EncoderStats {
        i_xxhat: i_xxhat.max(0.0),
        i_yxhat: i_yxhat.max(0.0),
        h_xhat: h_xhat.max(0.0),
    }
}

fn assignment_encoder(assign: &[usize], k: usize) -> Encoder {
    let map: BTreeMap<Symbol, usize> = assign
        .iter()
        .enumerate()
        .map(|(x, &c)| (x as Symbol, c))
        .collect();
    Encoder::from_assignments(&map, k, 0)
        .expect("enumerated assignments are valid")
        .canonicalized()
}

/// The exhaustive search result: the unconstrained objective minimizer and
/// the relevance-constrained optimum (maximal achievable `I(Y;X̂)` first,
/// minimal `C(p)` among those attaining it).
#[derive(Debug, Clone)]
pub struct BruteForceOutcome {
    pub best: Encoder,
    pub best_stats: EncoderStats,
    pub best_objective: f64,
    pub constrained: Encoder,
    pub constrained_stats: EncoderStats,
    /// Maximal `I(Y;X̂)` any deterministic encoder achieves at this `k`.
    pub max_relevance: f64,
}

/// Enumerates every deterministic encoder (`k^|X|` of them) and reports both
/// the objective minimizer and the constrained optimum. Ties resolve to the
/// earliest enumerated assignment; results are canonicalized.
pub fn brute_force_encoder(prob: &IbProblem) -> Result<BruteForceOutcome> {
    let n = prob.joint.x_support();
    let count = (prob.k as u128)
        .checked_pow(n as u32)
        .filter(|&c| c <= ENUMERATION_CAP as u128)
        .ok_or(Error::EnumerationTooLarge {
            k: prob.k,
            n,
            cap: ENUMERATION_CAP,
        })? as u64;

    let decode = |index: u64| -> Vec<usize> {
        let mut digits = Vec::with_capacity(n);
        let mut rest = index;
        for _ in 0..n {
            digits.push((rest % prob.k as u64) as usize);
            rest /= prob.k as u64;
        }
        digits
    };

    // Pass 1: objective minimizer and the maximal achievable relevance.
    let (best_objective, best_index, max_relevance) = (0..count)
        .into_par_iter()
        .map(|i| {
            let stats = assignment_stats(&decode(i), prob.k, &prob.joint);
            (objective_from_stats(&stats, prob), i, stats.i_yxhat)
        })
        .reduce(
            || (f64::INFINITY, u64::MAX, f64::NEG_INFINITY),
            |a, b| {
                let best = if (b.0, b.1) < (a.0, a.1) { (b.0, b.1) } else { (a.0, a.1) };
                (best.0, best.1, a.2.max(b.2))
            },
        );

    // Pass 2: among assignments within RELEVANCE_TOL of that relevance, the
    // one with minimal compression cost.
    let threshold = max_relevance - RELEVANCE_TOL;
    let (_, constrained_index) = (0..count)
        .into_par_iter()
        .map(|i| {
            let stats = assignment_stats(&decode(i), prob.k, &prob.joint);
            if stats.i_yxhat >= threshold {
                let c = match prob.criterion {
                    CompressionCriterion::MutualInfo => stats.i_xxhat,
                    CompressionCriterion::Entropy => stats.h_xhat,
                };
                (c, i)
            } else {
                (f64::INFINITY, u64::MAX)
            }
        })
        .reduce(|| (f64::INFINITY, u64::MAX), |a, b| if b < a { b } else { a });

    let best = assignment_encoder(&decode(best_index), prob.k);
    let best_stats = encoder_stats(&best, &prob.joint);
    let constrained = assignment_encoder(&decode(constrained_index), prob.k);
    let constrained_stats = encoder_stats(&constrained, &prob.joint);
    Ok(BruteForceOutcome {
        best_objective,
        best,
        best_stats,
        constrained,
        constrained_stats,
        max_relevance,
    })
}

/// Deterministic bottleneck at entropy cost: exhaustive when the
/// enumeration fits under [`ENUMERATION_CAP`], greedy agglomerative merging
/// otherwise.
pub fn deterministic_ib(prob: &IbProblem) -> Result<SolveOutcome> {
    if prob.criterion != CompressionCriterion::Entropy {
        return Err(Error::UnsupportedCriterion {
            criterion: prob.criterion.label(),
            operation: "deterministic_ib",
        });
    }
    let n = prob.joint.x_support();
    let exhaustive = (prob.k as u128)
        .checked_pow(n as u32)
        .is_some_and(|c| c <= ENUMERATION_CAP as u128);
    if exhaustive {
        let out = brute_force_encoder(prob)?;
        let objective = objective_from_stats(&out.best_stats, prob);
        Ok(SolveOutcome {
            encoder: out.best,
            stats: out.best_stats,
            objective,
            converged: true,
            iterations: 0,
            objective_trace: vec![objective],
        })
    } else {
        greedy_deterministic_ib(prob)
    }
}

/// Greedy agglomerative bottleneck: start from the identity partition and
/// repeatedly merge the pair of clusters whose merge increases the objective
/// least (ties to the lexicographically lowest pair) until `k` clusters
/// remain. Quadratic in clusters per merge; intended for desk-scale inputs.
pub fn greedy_deterministic_ib(prob: &IbProblem) -> Result<SolveOutcome> {
    let n = prob.joint.x_support();
    let k = prob.k;
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|x| vec![x]).collect();

    let eval = |clusters: &[Vec<usize>], merge: Option<(usize, usize)>| -> f64 {
        // Cell indices follow the current cluster order: each cluster keeps
        // its slot, a merged pair occupies the lower slot and leaves the
        // higher slot empty (empty cells contribute nothing).
        let mut assign = vec![0usize; n];
        for (ci, members) in clusters.iter().enumerate() {
            let target = match merge {
                Some((i, j)) if ci == j => i,
                _ => ci,
            };
            for &x in members {
                assign[x] = target;
            }
        }
        let stats = assignment_stats(&assign, clusters.len(), &prob.joint);
        objective_from_stats(&stats, prob)
    };

    let mut trace = vec![eval(&clusters, None)];
    let mut merges = 0;
    while clusters.len() > k {
        let mut best: Option<(f64, (usize, usize))> = None;
        for i in 0..clusters.len() {
            for j in (i + 1)..clusters.len() {
                let objective = eval(&clusters, Some((i, j)));
                if best.map_or(true, |(b, _)| objective < b) {
                    best = Some((objective, (i, j)));
                }
            }
        }
        let (objective, (i, j)) = best.expect("more clusters than k implies a pair");
        let absorbed = clusters.remove(j);
        clusters[i].extend(absorbed);
        clusters[i].sort_unstable();
        trace.push(objective);
        merges += 1;
    }

    let mut assign = vec![0usize; n];
    for (ci, members) in clusters.iter().enumerate() {
        for &x in members {
            assign[x] = ci;
        }
    }
    let encoder = assignment_encoder(&assign, k);
    let stats = encoder_stats(&encoder, &prob.joint);
    Ok(SolveOutcome {
        objective: objective_from_stats(&stats, prob),
        stats,
        encoder,
        converged: true,
        iterations: merges,
        objective_trace: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::Dataset;
    use crate::learners::overfit_encoder;

    fn assert_close(got: f64, want: f64, tol: f64) {
        assert!(
            (got - want).abs() <= tol,
            "got {got}, want {want} within {tol:e}"
        );
    }

    fn random_joint(seed: u64, n: usize) -> JointPmf {
        let mut rng = CounterRng::new(chain(4242, &[seed]));
        let weights: Vec<f64> = (0..2 * n).map(|_| -(1.0 - rng.next_f64()).ln()).collect();
        let total = kahan_sum(weights.iter().copied());
        JointPmf::from_rows(
            weights
                .chunks(2)
                .map(|c| [c[0] / total, c[1] / total])
                .collect(),
        )
        .unwrap()
    }

    /// Twelve symbols whose label depends on x only through x mod 2.
    fn feature_joint() -> JointPmf {
        let total: f64 = (1..=12).sum::<i32>() as f64;
        let rows = (0..12)
            .map(|x| {
                let px = (x + 1) as f64 / total;
                let p1 = if x % 2 == 1 { 0.8 } else { 0.15 };
                [px * (1.0 - p1), px * p1]
            })
            .collect();
        JointPmf::from_rows(rows).unwrap()
    }

    fn balanced_dataset() -> Dataset {
        Dataset::new(
            (0..8).map(|x| (x as Symbol, (x % 2) as u8)).collect(),
            0,
            "t".into(),
        )
        .unwrap()
    }

    fn same_assignment(a: &Encoder, b: &Encoder, n: usize) {
        for x in 0..n as Symbol {
            assert_eq!(a.cell_of(x), b.cell_of(x), "assignments split at x = {x}");
        }
    }

    #[test]
    fn objective_matches_known_identities() {
        let joint = JointPmf::from_rows(vec![[0.4, 0.1], [0.1, 0.4]]).unwrap();
        let constant = Encoder::from_assignments(
            &(0..2u128).map(|x| (x, 0usize)).collect(),
            1,
            0,
        )
        .unwrap();
        let prob = IbProblem::new(joint.clone(), 3.0, 1, CompressionCriterion::MutualInfo).unwrap();
        assert_eq!(ib_objective(&constant, &prob), 0.0);

        let identity = Encoder::from_assignments(
            &(0..2u128).map(|x| (x, x as usize)).collect(),
            2,
            0,
        )
        .unwrap();
        let hx = joint.x_marginal().entropy_bits();
        let ixy = joint.mutual_information_bits();
        for beta in [0.0, 1.0, 2.5] {
            let prob =
                IbProblem::new(joint.clone(), beta, 2, CompressionCriterion::MutualInfo).unwrap();
            assert_close(ib_objective(&identity, &prob), hx - beta * ixy, 1e-12);
            let prob =
                IbProblem::new(joint.clone(), beta, 2, CompressionCriterion::Entropy).unwrap();
            assert_close(ib_objective(&identity, &prob), hx - beta * ixy, 1e-12);
        }

        let sample = Dataset::new(vec![(0, 0), (1, 1), (2, 0), (3, 1)], 0, "t".into()).unwrap();
        let enc = overfit_encoder(&sample).unwrap();
        let empirical = sample.empirical(4).unwrap();
        for criterion in [CompressionCriterion::MutualInfo, CompressionCriterion::Entropy] {
            let prob = IbProblem::new(empirical.clone(), 2.0, 2, criterion).unwrap();
            assert_eq!(ib_objective(&enc, &prob), -1.0, "1 - 2·1 exactly");
        }
    }

    #[test]
    fn zero_beta_collapses_to_an_uninformative_encoder() {
        let prob =
            IbProblem::new(random_joint(1, 6), 0.0, 3, CompressionCriterion::MutualInfo).unwrap();
        let out = solve_self_consistent(&prob, 100, 1e-10, 7).unwrap();
        assert!(out.converged);
        assert!(
            out.stats.i_xxhat < 1e-9,
            "compression-only limit keeps no information, got {}",
            out.stats.i_xxhat
        );
    }

    #[test]
    fn large_beta_recovers_a_planted_binary_feature() {
        let joint = feature_joint();
        let ixy = joint.mutual_information_bits();
        let prob = IbProblem::new(joint, 100.0, 2, CompressionCriterion::MutualInfo).unwrap();
        let out = solve_best_of(&prob, 10_000, 1e-9, 2024, 8).unwrap();
        assert!(out.converged);
        assert_close(out.stats.i_yxhat, ixy, 1e-6);
        // The recovered hard partition is exactly the parity feature.
        let hard = out.encoder.harden().canonicalized();
        for x in 0..12u128 {
            assert_eq!(hard.cell_of(x), (x % 2) as usize, "x = {x}");
        }
    }

    #[test]
    fn objective_trace_never_increases() {
        for seed in 0..100u64 {
            let mut rng = CounterRng::new(chain(88, &[seed]));
            let n = 4 + rng.next_below(4) as usize;
            let k = 2 + rng.next_below(2) as usize;
            let beta = 3.0 * rng.next_f64();
            let prob = IbProblem::new(
                random_joint(1000 + seed, n),
                beta,
                k,
                CompressionCriterion::MutualInfo,
            )
            .unwrap();
            let out = solve_self_consistent(&prob, 200, 1e-12, seed).unwrap();
            for w in out.objective_trace.windows(2) {
                assert!(
                    w[1] <= w[0] + 1e-9,
                    "objective rose {} -> {} (seed {seed})",
                    w[0],
                    w[1]
                );
            }
            let ixy = prob.joint().mutual_information_bits();
            assert!(out.stats.i_yxhat <= ixy + 1e-9, "seed {seed}");
            assert!(out.stats.i_xxhat >= 0.0 && out.stats.h_xhat >= 0.0);
        }
    }

    #[test]
    fn starved_iteration_budget_reports_non_convergence() {
        let prob =
            IbProblem::new(random_joint(5, 8), 2.0, 3, CompressionCriterion::MutualInfo).unwrap();
        let out = solve_self_consistent(&prob, 1, 1e-15, 3).unwrap();
        assert!(!out.converged);
        assert_eq!(out.iterations, 1);
        assert_eq!(out.objective_trace.len(), 1);
    }

    #[test]
    fn self_consistent_solver_requires_the_classic_criterion() {
        let prob =
            IbProblem::new(random_joint(9, 4), 1.0, 2, CompressionCriterion::Entropy).unwrap();
        assert!(matches!(
            solve_self_consistent(&prob, 10, 1e-9, 0),
            Err(Error::UnsupportedCriterion { .. })
        ));
        assert!(matches!(
            deterministic_ib(
                &IbProblem::new(random_joint(9, 4), 1.0, 2, CompressionCriterion::MutualInfo)
                    .unwrap()
            ),
            Err(Error::UnsupportedCriterion { .. })
        ));
    }

    #[test]
    fn exhaustive_search_certifies_the_memorizing_encoder() {
        let sample = balanced_dataset();
        let empirical = sample.empirical(8).unwrap();
        for criterion in [CompressionCriterion::MutualInfo, CompressionCriterion::Entropy] {
            let prob = IbProblem::new(empirical.clone(), 1.0, 2, criterion).unwrap();
            let out = brute_force_encoder(&prob).unwrap();
            assert_close(out.max_relevance, 1.0, 1e-12);
            assert_close(out.constrained_stats.i_yxhat, 1.0, 1e-12);
            let expected = overfit_encoder(&sample).unwrap().canonicalized();
            same_assignment(&out.constrained, &expected, 8);
        }
    }

    #[test]
    fn constrained_optimum_is_the_planted_feature() {
        let joint = feature_joint();
        let ixy = joint.mutual_information_bits();
        let prob = IbProblem::new(joint, 1.0, 2, CompressionCriterion::MutualInfo).unwrap();
        let out = brute_force_encoder(&prob).unwrap();
        assert_close(out.max_relevance, ixy, 1e-12);
        for x in 0..12u128 {
            assert_eq!(out.constrained.cell_of(x), (x % 2) as usize);
        }
    }

    #[test]
    fn oversized_enumeration_is_rejected() {
        let prob =
            IbProblem::new(random_joint(3, 21), 1.0, 2, CompressionCriterion::MutualInfo).unwrap();
        assert!(matches!(
            brute_force_encoder(&prob),
            Err(Error::EnumerationTooLarge { k: 2, n: 21, .. })
        ));
    }

    #[test]
    fn exhaustive_minimum_bounds_the_hardened_solver() {
        for seed in 0..20u64 {
            let joint = random_joint(700 + seed, 6);
            for beta in [0.5, 2.0] {
                let prob =
                    IbProblem::new(joint.clone(), beta, 2, CompressionCriterion::MutualInfo)
                        .unwrap();
                let brute = brute_force_encoder(&prob).unwrap();
                let solved = solve_self_consistent(&prob, 2000, 1e-10, seed).unwrap();
                let hardened = ib_objective(&solved.encoder.harden(), &prob);
                assert!(
                    brute.best_objective <= hardened + 1e-12,
                    "seed {seed}, beta {beta}: {} > {hardened}",
                    brute.best_objective
                );
            }
        }
    }

    #[test]
    fn deterministic_bottleneck_edge_shapes() {
        // Four symbols with well-separated label posteriors, so at large
        // beta every merge loses more relevance than it saves in entropy.
        let joint = JointPmf::from_rows(vec![
            [0.2375, 0.0125],
            [0.1625, 0.0875],
            [0.0875, 0.1625],
            [0.0125, 0.2375],
        ])
        .unwrap();
        let prob = IbProblem::new(joint.clone(), 500.0, 4, CompressionCriterion::Entropy).unwrap();
        let out = deterministic_ib(&prob).unwrap();
        let cells: std::collections::BTreeSet<usize> =
            (0..4u128).map(|x| out.encoder.cell_of(x)).collect();
        assert_eq!(cells.len(), 4, "identity partition at k = |X|");

        // A single cluster is the constant encoder with objective -beta·0.
        let prob = IbProblem::new(joint, 7.0, 1, CompressionCriterion::Entropy).unwrap();
        let out = deterministic_ib(&prob).unwrap();
        assert_close(out.objective, 0.0, 1e-12);
        assert_close(out.stats.h_xhat, 0.0, 1e-12);
        assert!((0..4u128).all(|x| out.encoder.cell_of(x) == 0));
    }

    #[test]
    fn greedy_merging_tracks_the_exhaustive_optimum() {
        let mut worst_gap: f64 = 0.0;
        let mut total_gap = 0.0;
        for seed in 0..50u64 {
            let joint = random_joint(300 + seed, 10);
            let prob = IbProblem::new(joint, 1.0, 3, CompressionCriterion::Entropy).unwrap();
            let brute = brute_force_encoder(&prob).unwrap();
            let greedy = greedy_deterministic_ib(&prob).unwrap();
            let gap = greedy.objective - brute.best_objective;
            assert!(
                gap >= -1e-12,
                "greedy cannot beat the exhaustive optimum (seed {seed}, gap {gap})"
            );
            worst_gap = worst_gap.max(gap);
            total_gap += gap.max(0.0);
        }
        println!(
            "greedy vs exhaustive objective gap: mean {:.3e}, worst {:.3e}",
            total_gap / 50.0,
            worst_gap
        );
    }

    #[test]
    fn objective_is_invariant_under_cluster_relabeling() {
        let joint = random_joint(21, 6);
        let prob = IbProblem::new(joint, 1.5, 3, CompressionCriterion::MutualInfo).unwrap();
        let assign: BTreeMap<Symbol, usize> =
            [(0u128, 0usize), (1, 1), (2, 2), (3, 0), (4, 1), (5, 2)]
                .into_iter()
                .collect();
        let permuted: BTreeMap<Symbol, usize> = assign
            .iter()
            .map(|(&x, &c)| (x, [2usize, 0, 1][c]))
            .collect();
        let a = Encoder::from_assignments(&assign, 3, 0).unwrap();
        let b = Encoder::from_assignments(&permuted, 3, 0).unwrap();
        assert_close(ib_objective(&a, &prob), ib_objective(&b, &prob), 1e-12);
        same_assignment(&a.canonicalized(), &b.canonicalized(), 6);
    }
}
