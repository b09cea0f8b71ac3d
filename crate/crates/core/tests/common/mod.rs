//! Helpers shared by integration test targets.
#![allow(dead_code)]

use std::collections::BTreeMap;

use collective_core::agents::{loss, Agent, AgentInput, Arch, Layout, Region};
use collective_core::rng::{substream, Purpose};
use collective_core::topology::{boundary_faces, Simplex, WeightedComplex};
use rand::Rng;

/// Random filtered complex: closed under faces, values monotone, at most
/// `max_simplices` simplices, values drawn from a small grid so ties occur.
pub fn random_complex(stream: u64, max_simplices: usize) -> WeightedComplex {
    let mut rng = substream(17, Purpose::Test, stream, 0);
    let n_vertices = rng.random_range(1..=7);
    let mut c = WeightedComplex::default();
    let mut tries = 0;
    while c.simplices.len() < max_simplices && tries < 40 {
        tries += 1;
        let size = rng.random_range(1..=4usize.min(n_vertices));
        let mut s: Vec<usize> = (0..n_vertices).collect();
        for k in 0..size {
            let j = rng.random_range(k..n_vertices);
            s.swap(k, j);
        }
        let mut s: Simplex = s[..size].to_vec();
        s.sort_unstable();
        let closure = closure(&s);
        if c.simplices.len() + closure.iter().filter(|f| !c.simplices.contains_key(*f)).count() > max_simplices {
            continue;
        }
        for f in closure {
            let v = rng.random_range(0..8) as f64 * 0.5;
            c.insert(f, v);
        }
    }
    c.repair();
    c
}

fn closure(s: &[usize]) -> Vec<Simplex> {
    let mut out = vec![s.to_vec()];
    let mut k = 0;
    while k < out.len() {
        for f in boundary_faces(&out[k]) {
            if !out.contains(&f) {
                out.push(f);
            }
        }
        k += 1;
    }
    out
}

fn rank_gf2(mut rows: Vec<Vec<u8>>) -> usize {
    let cols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..rows.len()).find(|&r| rows[r][c] == 1) else {
            continue;
        };
        rows.swap(rank, p);
        for r in 0..rows.len() {
            if r != rank && rows[r][c] == 1 {
                let pivot = rows[rank].clone();
                rows[r].iter_mut().zip(&pivot).for_each(|(a, b)| *a ^= b);
            }
        }
        rank += 1;
    }
    rank
}

/// Betti numbers of the subcomplex at `alpha` from dense boundary ranks.
pub fn brute_betti(c: &WeightedComplex, alpha: f64) -> Vec<usize> {
    let mut by_dim: BTreeMap<usize, Vec<Simplex>> = BTreeMap::new();
    for s in c.at(alpha) {
        by_dim.entry(s.len() - 1).or_default().push(s.clone());
    }
    let top = by_dim.keys().next_back().copied().unwrap_or(0);
    let rank = |k: usize| -> usize {
        if k == 0 {
            return 0;
        }
        let (Some(cells), Some(faces)) = (by_dim.get(&k), by_dim.get(&(k - 1))) else {
            return 0;
        };
        let rows = faces
            .iter()
            .map(|f| cells.iter().map(|s| boundary_faces(s).contains(f) as u8).collect())
            .collect();
        rank_gf2(rows)
    };
    (0..=top)
        .map(|k| by_dim.get(&k).map_or(0, Vec::len) - rank(k) - rank(k + 1))
        .collect()
}

/// Every value in the filtration plus points between and around them.
pub fn probe_scales(c: &WeightedComplex) -> Vec<f64> {
    let mut vals: Vec<f64> = c.simplices.values().copied().filter(|v| v.is_finite()).collect();
    vals.sort_by(f64::total_cmp);
    vals.dedup();
    let mut out = vec![f64::NEG_INFINITY, -1e9, 1e9];
    for w in vals.windows(2) {
        out.push((w[0] + w[1]) / 2.0);
    }
    out.extend(vals);
    out
}

const STEP: f64 = 1e-5;
/// Denominator floor for the relative error; below it the comparison is
/// effectively absolute and limited by finite-difference round-off.
const FLOOR: f64 = 1e-6;

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(FLOOR)
}

fn random_case(trial: u64, arch: Arch) -> (Agent, AgentInput, Vec<u8>) {
    let mut rng = substream(1234, Purpose::Test, trial, 0);
    let size = rng.random_range(1..=3usize);
    let halo = rng.random_range(0..=1usize);
    let region = Region {
        x0: 0,
        y0: 0,
        size,
        halo,
    };
    let layout = Layout {
        arch,
        view_len: region.view_len(),
        n_slots: rng.random_range(0..=2),
        latent_dim: rng.random_range(2..=5),
        hidden: rng.random_range(2..=6),
        outputs: region.cell_count(),
    };
    let agent = Agent::new(trial as usize, region, layout.clone(), 0.0, trial);
    let input = AgentInput {
        view: (0..layout.view_len).map(|_| rng.random_range(0..2) as f64).collect(),
        messages: (0..layout.n_slots)
            .map(|_| (0..layout.latent_dim).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect(),
    };
    let observed = (0..layout.outputs).map(|_| rng.random_range(0..2)).collect();
    (agent, input, observed)
}

fn loss_at(agent: &Agent, input: &AgentInput, observed: &[u8]) -> f64 {
    loss(&agent.predict(input), observed)
}

/// Worst relative error between backprop and central differences over
/// `trials` random agents, for parameters and inputs alike.
pub fn gradient_check(arch: Arch, trials: u64) -> f64 {
    let mut worst: f64 = 0.0;
    for trial in 0..trials {
        let (agent, input, observed) = random_case(trial, arch);
        let pass = agent.forward(&input).unwrap();
        let grads = agent.loss_gradients(&pass, &observed);

        for i in 0..agent.params.len() {
            let mut plus = agent.clone();
            let mut minus = agent.clone();
            plus.params[i] += STEP;
            minus.params[i] -= STEP;
            let fd = (loss_at(&plus, &input, &observed) - loss_at(&minus, &input, &observed)) / (2.0 * STEP);
            worst = worst.max(rel_err(grads.params[i], fd));
        }
        // input gradients (continuous message slots and the view)
        let mut flat_grad = grads.view.clone();
        for m in &grads.messages {
            flat_grad.extend_from_slice(m);
        }
        let n_view = input.view.len();
        for (i, &g) in flat_grad.iter().enumerate() {
            let perturb = |delta: f64| {
                let mut x = input.clone();
                if i < n_view {
                    x.view[i] += delta;
                } else {
                    let j = i - n_view;
                    x.messages[j / agent.layout.latent_dim][j % agent.layout.latent_dim] += delta;
                }
                loss_at(&agent, &x, &observed)
            };
            let fd = (perturb(STEP) - perturb(-STEP)) / (2.0 * STEP);
            worst = worst.max(rel_err(g, fd));
        }
    }
    worst
}
