//! Seeded random task generators for the shipped domains.
//!
//! Sizes are given as a short list of counts whose meaning depends on the
//! domain:
//! - blocksworld: `[blocks]`
//! - ferry: `[locations, cars]`
//! - satellite: `[satellites, directions, modes, images]`

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bk::ShippedDomain;
use crate::planning::{Fact, Problem};

/// A blocksworld configuration: `below[i]` is the block under block `i`,
/// `None` for the table.
pub type Config = Vec<Option<usize>>;

fn block(i: usize) -> String {
    format!("b{}", i + 1)
}

/// Every configuration of `n` blocks (towers as ordered stacks).
pub fn all_configurations(n: usize) -> Vec<Config> {
    // towers bottom-to-top, built by inserting block k into every position
    let mut acc: Vec<Vec<Vec<usize>>> = vec![Vec::new()];
    for k in 0..n {
        let mut next = Vec::new();
        for towers in &acc {
            for t in 0..towers.len() {
                for pos in 0..=towers[t].len() {
                    let mut c = towers.clone();
                    c[t].insert(pos, k);
                    next.push(c);
                }
            }
            let mut c = towers.clone();
            c.push(vec![k]);
            next.push(c);
        }
        acc = next;
    }
    acc.into_iter()
        .map(|towers| towers_to_config(n, &towers))
        .collect()
}

fn towers_to_config(n: usize, towers: &[Vec<usize>]) -> Config {
    let mut below = vec![None; n];
    for t in towers {
        for w in t.windows(2) {
            below[w[1]] = Some(w[0]);
        }
    }
    below
}

/// A random configuration of `n` blocks.
pub fn random_configuration(rng: &mut impl Rng, n: usize) -> Config {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut towers: Vec<Vec<usize>> = Vec::new();
    for b in order {
        if towers.is_empty() || rng.gen_bool(0.5) {
            towers.push(vec![b]);
        } else {
            let i = rng.gen_range(0..towers.len());
            towers[i].push(b);
        }
    }
    towers_to_config(n, &towers)
}

fn placement_facts(below: &Config) -> Vec<Fact> {
    let mut facts = Vec::new();
    for (b, under) in below.iter().enumerate() {
        match under {
            Some(u) => facts.push(Fact::new("on", &[&block(b), &block(*u)])),
            None => facts.push(Fact::new("on_table", &[&block(b)])),
        }
    }
    facts
}

/// Blocksworld task from an initial and a goal configuration; the arm
/// starts empty and the goal places every block.
pub fn blocksworld_problem(name: &str, init: &Config, goal: &Config) -> Problem {
    let n = init.len();
    let mut init_facts = placement_facts(init);
    for b in 0..n {
        if !init.contains(&Some(b)) {
            init_facts.push(Fact::new("clear", &[&block(b)]));
        }
    }
    init_facts.push(Fact::new("arm_empty", &[]));
    Problem {
        name: name.to_string(),
        domain: "blocksworld".into(),
        objects: (0..n).map(|b| (block(b), "object".to_string())).collect(),
        init: init_facts,
        goal: placement_facts(goal),
    }
}

pub fn blocksworld(rng: &mut impl Rng, name: &str, n: usize) -> Problem {
    let init = random_configuration(rng, n);
    let mut goal = random_configuration(rng, n);
    while n > 1 && goal == init {
        goal = random_configuration(rng, n);
    }
    blocksworld_problem(name, &init, &goal)
}

pub fn ferry(rng: &mut impl Rng, name: &str, locations: usize, cars: usize) -> Problem {
    assert!(locations >= 2, "ferry tasks need two locations");
    let loc = |i: usize| format!("l{}", i + 1);
    let car = |i: usize| format!("c{}", i + 1);
    let mut objects: Vec<(String, String)> = (0..locations)
        .map(|i| (loc(i), "location".into()))
        .collect();
    objects.extend((0..cars).map(|i| (car(i), "car".into())));
    let mut init = vec![
        Fact::new("at_ferry", &[&loc(rng.gen_range(0..locations))]),
        Fact::new("empty_ferry", &[]),
    ];
    let mut goal = Vec::new();
    for c in 0..cars {
        let from = rng.gen_range(0..locations);
        let mut to = rng.gen_range(0..locations);
        // every car is misplaced, so the task is never trivial
        while to == from {
            to = rng.gen_range(0..locations);
        }
        init.push(Fact::new("at", &[&car(c), &loc(from)]));
        goal.push(Fact::new("at", &[&car(c), &loc(to)]));
    }
    Problem {
        name: name.to_string(),
        domain: "ferry".into(),
        objects,
        init,
        goal,
    }
}

/// One instrument per satellite; instruments share modes so several
/// satellites can serve the same image.
pub fn satellite(
    rng: &mut impl Rng,
    name: &str,
    satellites: usize,
    directions: usize,
    modes: usize,
    images: usize,
) -> Problem {
    assert!(satellites >= 1 && directions >= 1 && modes >= 1);
    let sat = |i: usize| format!("sat{}", i + 1);
    let ins = |i: usize| format!("ins{}", i + 1);
    let dir = |i: usize| format!("d{}", i + 1);
    let mode = |i: usize| format!("m{}", i + 1);
    let mut objects: Vec<(String, String)> = Vec::new();
    objects.extend((0..satellites).map(|i| (sat(i), "satellite".into())));
    objects.extend((0..satellites).map(|i| (ins(i), "instrument".into())));
    objects.extend((0..directions).map(|i| (dir(i), "direction".into())));
    objects.extend((0..modes).map(|i| (mode(i), "mode".into())));
    let mut init = Vec::new();
    let mut supported = vec![false; modes];
    for s in 0..satellites {
        init.push(Fact::new("on_board", &[&ins(s), &sat(s)]));
        init.push(Fact::new("power_avail", &[&sat(s)]));
        init.push(Fact::new(
            "pointing",
            &[&sat(s), &dir(rng.gen_range(0..directions))],
        ));
        init.push(Fact::new(
            "calibration_target",
            &[&ins(s), &dir(rng.gen_range(0..directions))],
        ));
        let mut any = false;
        for (m, sup) in supported.iter_mut().enumerate() {
            if rng.gen_bool(0.6) {
                init.push(Fact::new("supports", &[&ins(s), &mode(m)]));
                *sup = true;
                any = true;
            }
        }
        if !any {
            let m = rng.gen_range(0..modes);
            init.push(Fact::new("supports", &[&ins(s), &mode(m)]));
            supported[m] = true;
        }
    }
    let usable: Vec<usize> = (0..modes).filter(|&m| supported[m]).collect();
    let mut pairs: Vec<(usize, usize)> = (0..directions)
        .flat_map(|d| usable.iter().map(move |&m| (d, m)))
        .collect();
    pairs.shuffle(rng);
    let mut goal: Vec<Fact> = pairs
        .into_iter()
        .take(images.max(1))
        .map(|(d, m)| Fact::new("have_image", &[&dir(d), &mode(m)]))
        .collect();
    for s in 0..satellites {
        if rng.gen_bool(0.5) {
            goal.push(Fact::new(
                "pointing",
                &[&sat(s), &dir(rng.gen_range(0..directions))],
            ));
        }
    }
    Problem {
        name: name.to_string(),
        domain: "satellite".into(),
        objects,
        init,
        goal,
    }
}

/// Generates `count` tasks per size, deterministically from `seed`.
pub fn generate(
    domain: ShippedDomain,
    sizes: &[Vec<usize>],
    count: usize,
    seed: u64,
) -> Vec<Problem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for size in sizes {
        let tag = size
            .iter()
            .map(|n| n.to_string())
            .collect::<Vec<_>>()
            .join("x");
        for k in 0..count {
            let name = format!("{}-{tag}-{k}", domain.name());
            out.push(generate_one(domain, size, &mut rng, &name));
        }
    }
    out
}

/// Builds one task of the given size.
pub fn generate_one(
    domain: ShippedDomain,
    size: &[usize],
    rng: &mut impl Rng,
    name: &str,
) -> Problem {
    let at = |i: usize, default: usize| size.get(i).copied().unwrap_or(default);
    match domain {
        ShippedDomain::Blocksworld => blocksworld(rng, name, at(0, 3)),
        ShippedDomain::Ferry => ferry(rng, name, at(0, 3), at(1, 2)),
        ShippedDomain::Satellite => satellite(rng, name, at(0, 2), at(1, 3), at(2, 2), at(3, 2)),
    }
}

/// Task sizes used for training data.
pub fn train_sizes(domain: ShippedDomain) -> Vec<Vec<usize>> {
    match domain {
        ShippedDomain::Blocksworld => vec![vec![3], vec![4]],
        ShippedDomain::Ferry => vec![vec![3, 3], vec![4, 3]],
        ShippedDomain::Satellite => vec![vec![2, 2, 2, 2], vec![2, 3, 1, 3]],
    }
}

/// Larger, held-out task sizes for evaluation.
pub fn test_sizes(domain: ShippedDomain) -> Vec<Vec<usize>> {
    match domain {
        ShippedDomain::Blocksworld => vec![vec![6], vec![7]],
        ShippedDomain::Ferry => vec![vec![4, 4], vec![5, 5]],
        ShippedDomain::Satellite => vec![vec![3, 3, 2, 3]],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn configuration_counts() {
        let counts: Vec<usize> = (1..=5).map(|n| all_configurations(n).len()).collect();
        assert_eq!(counts, [1, 3, 13, 73, 501]);
    }

    #[test]
    fn generation_is_seeded() {
        for d in ShippedDomain::ALL {
            let a = generate(d, &train_sizes(d), 3, 7);
            let b = generate(d, &train_sizes(d), 3, 7);
            assert_eq!(a, b);
            assert_eq!(a.len(), 6);
        }
    }
}
