//! Backprop against central finite differences, and online learnability.

mod common;

use collective_core::agents::{loss, Agent, AgentInput, Arch, Layout, Region};
use common::gradient_check;

const TOLERANCE: f64 = 1e-4;

#[test]
fn mlp_backprop_matches_finite_differences() {
    let worst = gradient_check(Arch::Mlp, 100);
    assert!(worst < TOLERANCE, "max relative error {worst:e}");
}

#[test]
fn attention_backprop_matches_finite_differences() {
    let worst = gradient_check(Arch::Attention { embed_dim: 3 }, 100);
    assert!(worst < TOLERANCE, "max relative error {worst:e}");
}

#[test]
fn constant_region_is_learned_in_500_updates() {
    // a block fully inside a 4x4 tile: the next state equals the view center
    let region = Region {
        x0: 0,
        y0: 0,
        size: 4,
        halo: 1,
    };
    let layout = Layout {
        arch: Arch::Mlp,
        view_len: region.view_len(),
        n_slots: 0,
        latent_dim: 32,
        hidden: 32,
        outputs: 16,
    };
    let mut grid = collective_core::substrate::Grid::new(8, 8);
    grid.stamp(&[(0, 0), (1, 0), (0, 1), (1, 1)], 1, 1);
    let input = AgentInput::silent(region.view(&grid), 0, 32);
    let observed = region.cells(&grid);
    // plain SGD at lr 0.05 needs ~1000 steps; momentum 0.9 gets there in 500
    let mut agent = Agent::new(0, region, layout, 0.9, 5);
    for _ in 0..500 {
        agent.update(&input, &observed, 0.05).unwrap();
    }
    let l = loss(&agent.predict(&input), &observed);
    assert!(l < 0.01, "loss after 500 updates: {l}");
}
