//! Box-bounded NSGA-II for two objectives with constrained domination.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{construction, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Nsga2Config {
    pub pop_size: usize,
    pub generations: usize,
    pub seed: u64,
    pub crossover_prob: f64,
    /// SBX distribution index.
    pub eta_crossover: f64,
    /// Polynomial mutation distribution index.
    pub eta_mutation: f64,
    /// Per-gene mutation probability; `None` uses `1 / genes`.
    pub mutation_prob: Option<f64>,
}

/// Objective values (both minimized) and total constraint violation
/// (`0` means feasible).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub objectives: [f64; 2],
    pub violation: f64,
}

impl Evaluation {
    pub fn is_feasible(&self) -> bool {
        self.violation <= 0.0
    }

    /// Constrained domination: feasible beats infeasible, smaller violation
    /// wins among infeasible, Pareto dominance among feasible.
    pub fn dominates(&self, other: &Evaluation) -> bool {
        match (self.is_feasible(), other.is_feasible()) {
            (true, false) => true,
            (false, true) => false,
            (false, false) => self.violation < other.violation,
            (true, true) => {
                let [a0, a1] = self.objectives;
                let [b0, b1] = other.objectives;
                a0 <= b0 && a1 <= b1 && (a0 < b0 || a1 < b1)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub genes: Vec<f64>,
    pub eval: Evaluation,
    rank: usize,
    crowding: f64,
}

/// Runs NSGA-II inside the box `[lower, upper]` and returns the feasible
/// members of the final first front.
pub fn nsga2<F>(lower: &[f64], upper: &[f64], cfg: &Nsga2Config, evaluate: F) -> Result<Vec<Individual>>
where
    F: Fn(&[f64]) -> Evaluation + Sync,
{
    if cfg.pop_size < 4 || !cfg.pop_size.is_multiple_of(2) {
        return Err(construction("population size must be even and at least 4"));
    }
    if lower.is_empty() || lower.len() != upper.len() {
        return Err(construction("bounds must be non-empty and of equal length"));
    }
    let n = lower.len();
    let pm = cfg.mutation_prob.unwrap_or(1.0 / n as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let genomes: Vec<Vec<f64>> = (0..cfg.pop_size)
        .map(|_| (0..n).map(|g| rng.gen_range(lower[g]..=upper[g])).collect())
        .collect();
    let mut pop = evaluate_all(genomes, &evaluate);
    assign_rank_and_crowding(&mut pop);

    for _ in 0..cfg.generations {
        let mut children = Vec::with_capacity(cfg.pop_size);
        while children.len() < cfg.pop_size {
            let a = tournament(&pop, &mut rng);
            let b = tournament(&pop, &mut rng);
            let (mut c1, mut c2) = if rng.gen::<f64>() < cfg.crossover_prob {
                sbx(&pop[a].genes, &pop[b].genes, lower, upper, cfg.eta_crossover, &mut rng)
            } else {
                (pop[a].genes.clone(), pop[b].genes.clone())
            };
            polynomial_mutation(&mut c1, lower, upper, cfg.eta_mutation, pm, &mut rng);
            polynomial_mutation(&mut c2, lower, upper, cfg.eta_mutation, pm, &mut rng);
            children.push(c1);
            children.push(c2);
        }
        let mut merged = pop;
        merged.extend(evaluate_all(children, &evaluate));
        pop = environmental_selection(merged, cfg.pop_size);
    }

    let best_violation = pop.iter().map(|i| i.eval.violation).fold(f64::INFINITY, f64::min);
    let front: Vec<Individual> = pop
        .into_iter()
        .filter(|i| i.rank == 0 && i.eval.is_feasible())
        .collect();
    if front.is_empty() {
        return Err(Error::Infeasible { best_violation });
    }
    Ok(front)
}

fn evaluate_all<F>(genomes: Vec<Vec<f64>>, evaluate: &F) -> Vec<Individual>
where
    F: Fn(&[f64]) -> Evaluation + Sync,
{
    genomes
        .into_par_iter()
        .map(|genes| {
            let eval = evaluate(&genes);
            Individual { genes, eval, rank: usize::MAX, crowding: 0.0 }
        })
        .collect()
}

/// Fast non-dominated sort; returns fronts as index lists.
pub(crate) fn non_dominated_fronts(evals: &[Evaluation]) -> Vec<Vec<usize>> {
    let n = evals.len();
    let mut dominated_by: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut counts = vec![0usize; n];
    for i in 0..n {
        for j in i + 1..n {
            if evals[i].dominates(&evals[j]) {
                dominated_by[i].push(j);
                counts[j] += 1;
            } else if evals[j].dominates(&evals[i]) {
                dominated_by[j].push(i);
                counts[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| counts[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominated_by[i] {
                counts[j] -= 1;
                if counts[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

fn crowding_distances(pop: &[Individual], front: &[usize]) -> Vec<f64> {
    let m = front.len();
    let mut dist = vec![0.0; m];
    if m <= 2 {
        return vec![f64::INFINITY; m];
    }
    for obj in 0..2 {
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| {
            pop[front[a]].eval.objectives[obj]
                .total_cmp(&pop[front[b]].eval.objectives[obj])
                .then(a.cmp(&b))
        });
        let lo = pop[front[order[0]]].eval.objectives[obj];
        let hi = pop[front[order[m - 1]]].eval.objectives[obj];
        dist[order[0]] = f64::INFINITY;
        dist[order[m - 1]] = f64::INFINITY;
        let range = hi - lo;
        if !(range > 0.0) || !range.is_finite() {
            continue;
        }
        for w in 1..m - 1 {
            let prev = pop[front[order[w - 1]]].eval.objectives[obj];
            let next = pop[front[order[w + 1]]].eval.objectives[obj];
            dist[order[w]] += (next - prev) / range;
        }
    }
    dist
}

fn assign_rank_and_crowding(pop: &mut [Individual]) {
    let evals: Vec<Evaluation> = pop.iter().map(|i| i.eval).collect();
    for (rank, front) in non_dominated_fronts(&evals).iter().enumerate() {
        let d = crowding_distances(pop, front);
        for (k, &i) in front.iter().enumerate() {
            pop[i].rank = rank;
            pop[i].crowding = d[k];
        }
    }
}

fn environmental_selection(mut merged: Vec<Individual>, size: usize) -> Vec<Individual> {
    let evals: Vec<Evaluation> = merged.iter().map(|i| i.eval).collect();
    let fronts = non_dominated_fronts(&evals);
    let mut chosen: Vec<usize> = Vec::with_capacity(size);
    for (rank, front) in fronts.iter().enumerate() {
        let d = crowding_distances(&merged, front);
        for (k, &i) in front.iter().enumerate() {
            merged[i].rank = rank;
            merged[i].crowding = d[k];
        }
        if chosen.len() + front.len() <= size {
            chosen.extend(front);
        } else {
            let mut rest: Vec<usize> = front.clone();
            rest.sort_by(|&a, &b| {
                merged[b].crowding.total_cmp(&merged[a].crowding).then(a.cmp(&b))
            });
            chosen.extend(rest.into_iter().take(size - chosen.len()));
        }
        if chosen.len() == size {
            break;
        }
    }
    chosen.sort_unstable();
    let mut keep = vec![false; merged.len()];
    for &i in &chosen {
        keep[i] = true;
    }
    let mut next: Vec<Individual> = merged
        .into_iter()
        .zip(keep)
        .filter_map(|(ind, k)| k.then_some(ind))
        .collect();
    // Crowding must reflect the surviving population for the next tournament.
    assign_rank_and_crowding(&mut next);
    next
}

fn crowded_less(a: &Individual, b: &Individual) -> Ordering {
    a.rank.cmp(&b.rank).then(b.crowding.total_cmp(&a.crowding))
}

fn tournament(pop: &[Individual], rng: &mut ChaCha8Rng) -> usize {
    let a = rng.gen_range(0..pop.len());
    let b = rng.gen_range(0..pop.len());
    match crowded_less(&pop[a], &pop[b]) {
        Ordering::Less => a,
        Ordering::Greater => b,
        Ordering::Equal => {
            if rng.gen::<bool>() {
                a
            } else {
                b
            }
        }
    }
}

/// Bounded simulated binary crossover.
fn sbx(
    p1: &[f64],
    p2: &[f64],
    lower: &[f64],
    upper: &[f64],
    eta: f64,
    rng: &mut ChaCha8Rng,
) -> (Vec<f64>, Vec<f64>) {
    let mut c1 = p1.to_vec();
    let mut c2 = p2.to_vec();
    for g in 0..p1.len() {
        if rng.gen::<f64>() > 0.5 || (p1[g] - p2[g]).abs() < 1e-14 {
            continue;
        }
        let (y1, y2) = if p1[g] < p2[g] { (p1[g], p2[g]) } else { (p2[g], p1[g]) };
        let (yl, yu) = (lower[g], upper[g]);
        let u: f64 = rng.gen();
        let spread = |beta: f64| {
            let alpha = 2.0 - beta.powf(-(eta + 1.0));
            if u <= 1.0 / alpha {
                (u * alpha).powf(1.0 / (eta + 1.0))
            } else {
                (1.0 / (2.0 - u * alpha)).powf(1.0 / (eta + 1.0))
            }
        };
        let beta_l = 1.0 + 2.0 * (y1 - yl) / (y2 - y1);
        let beta_u = 1.0 + 2.0 * (yu - y2) / (y2 - y1);
        let a = (0.5 * ((y1 + y2) - spread(beta_l) * (y2 - y1))).clamp(yl, yu);
        let b = (0.5 * ((y1 + y2) + spread(beta_u) * (y2 - y1))).clamp(yl, yu);
        if rng.gen::<bool>() {
            c1[g] = b;
            c2[g] = a;
        } else {
            c1[g] = a;
            c2[g] = b;
        }
    }
    (c1, c2)
}

/// Bounded polynomial mutation.
fn polynomial_mutation(
    x: &mut [f64],
    lower: &[f64],
    upper: &[f64],
    eta: f64,
    prob: f64,
    rng: &mut ChaCha8Rng,
) {
    for g in 0..x.len() {
        if rng.gen::<f64>() >= prob {
            continue;
        }
        let (yl, yu) = (lower[g], upper[g]);
        let y = x[g];
        let d1 = (y - yl) / (yu - yl);
        let d2 = (yu - y) / (yu - yl);
        let u: f64 = rng.gen();
        let pow = 1.0 / (eta + 1.0);
        let dq = if u < 0.5 {
            let v = 2.0 * u + (1.0 - 2.0 * u) * (1.0 - d1).powf(eta + 1.0);
            v.powf(pow) - 1.0
        } else {
            let v = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - d2).powf(eta + 1.0);
            1.0 - v.powf(pow)
        };
        x[g] = (y + dq * (yu - yl)).clamp(yl, yu);
    }
}
