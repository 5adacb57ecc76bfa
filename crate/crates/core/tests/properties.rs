use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use holovote::aggregate::{borda, borda_scores, network_decision, plurality};
use holovote::{
    build_network, disseminate, disseminate_oracle, generate_population, set_activity, Ballot,
    DecisionMode, Depth, Member, NetworkModel, Selection, TopologyConfig,
};

fn population(n: usize, seed: u64, fraction: f64) -> Vec<Member> {
    let mut members = set_activity(
        &generate_population(n, seed).unwrap(),
        fraction,
        seed ^ 0x55,
    )
    .unwrap();
    if !members.iter().any(|m| m.active) {
        members[0].active = true;
    }
    members
}

fn topology() -> impl Strategy<Value = TopologyConfig> {
    prop_oneof![
        Just(TopologyConfig::k0()),
        Just(TopologyConfig::model1()),
        (
            1usize..5,
            prop_oneof![Just(Depth::Unbounded), (1u32..5).prop_map(Depth::Limited)],
            any::<bool>()
        )
            .prop_map(|(k, d, random)| {
                let selection = if random {
                    Selection::Random
                } else {
                    Selection::NearestOpinion
                };
                TopologyConfig::model2(k, d).with_selection(selection)
            }),
        Just(TopologyConfig::full(Depth::Unbounded)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn networks_are_well_formed(n in 6usize..60, seed in any::<u64>(), fraction in 0.0f64..=1.0, config in topology()) {
        let members = population(n, seed, fraction);
        let net = build_network(&members, &config, seed).unwrap();
        let mut pairs = std::collections::HashSet::new();
        for e in net.edges() {
            prop_assert_ne!(e.from, e.to);
            prop_assert!(pairs.insert((e.from, e.to)));
            prop_assert!((0.0..=1.0).contains(&e.weight));
            if config.model == NetworkModel::Model1 {
                prop_assert!(!net.member(e.from).unwrap().active);
                prop_assert!(net.member(e.to).unwrap().active);
            }
        }
        for m in &members {
            let out = net.out_edges(m.id);
            if !out.is_empty() {
                prop_assert!((net.out_weight_sum(m.id) - 1.0).abs() <= 1e-12);
            }
        }
        let again = build_network(&members, &config, seed).unwrap();
        prop_assert!(net.edges().eq(again.edges()));
    }

    #[test]
    fn member_order_does_not_matter(n in 6usize..40, seed in any::<u64>(), fraction in 0.05f64..=1.0, config in topology()) {
        let members = population(n, seed, fraction);
        let mut shuffled = members.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let a = build_network(&members, &config, 3).unwrap();
        let b = build_network(&shuffled, &config, 3).unwrap();
        prop_assert_eq!(a.members(), b.members());
        prop_assert!(a.edges().eq(b.edges()));
    }

    #[test]
    fn power_is_conserved(n in 6usize..80, seed in any::<u64>(), fraction in 0.0f64..=1.0, config in topology()) {
        let members = population(n, seed, fraction);
        let net = build_network(&members, &config, seed).unwrap();
        let power = disseminate(&net, config.depth).unwrap();
        prop_assert!((power.total() - n as f64).abs() <= 1e-9);
        prop_assert!(power.absorbed.values().all(|&p| p >= 1.0));
        prop_assert!(power.stranded >= 0.0);
        if config.model == NetworkModel::Model1 {
            prop_assert_eq!(power.stranded, 0.0);
        }
    }

    #[test]
    fn deeper_flow_delivers_more(n in 6usize..60, seed in any::<u64>(), fraction in 0.05f64..0.9, k in 1usize..5) {
        let members = population(n, seed, fraction);
        let net = build_network(&members, &TopologyConfig::model2(k, Depth::Unbounded), 0).unwrap();
        let mut previous = 0.0;
        for d in 1..8 {
            let delivered = disseminate(&net, Depth::Limited(d)).unwrap().total_absorbed();
            prop_assert!(delivered >= previous - 1e-12);
            previous = delivered;
        }
        prop_assert!(disseminate(&net, Depth::Unbounded).unwrap().total_absorbed() >= previous - 1e-12);
    }

    #[test]
    fn oracle_agrees(n in 2usize..=8, seed in any::<u64>(), fraction in 0.0f64..=1.0, depth in 1u32..=5, k in 1usize..8, random in any::<bool>()) {
        let k = k.min(n - 1);
        let members = population(n, seed, fraction);
        let selection = if random { Selection::Random } else { Selection::NearestOpinion };
        let config = TopologyConfig::model2(k, Depth::Limited(depth)).with_selection(selection);
        let net = build_network(&members, &config, seed).unwrap();
        let fast = disseminate(&net, Depth::Limited(depth)).unwrap();
        let oracle = disseminate_oracle(&net, depth).unwrap();
        for (id, p) in &fast.absorbed {
            prop_assert!((p - oracle.absorbed[id]).abs() <= 1e-9);
        }
        prop_assert!((fast.stranded - oracle.stranded).abs() <= 1e-9);
    }

    #[test]
    fn full_participation_everyone_keeps_one(n in 6usize..50, seed in any::<u64>(), config in topology()) {
        let members = population(n, seed, 1.0);
        let net = build_network(&members, &config, seed).unwrap();
        let power = disseminate(&net, config.depth).unwrap();
        prop_assert!(power.absorbed.values().all(|&p| p == 1.0));
        prop_assert_eq!(power.stranded, 0.0);
    }

    #[test]
    fn renormalized_decision_stays_in_active_range(n in 6usize..60, seed in any::<u64>(), fraction in 0.05f64..=1.0, config in topology()) {
        let members = population(n, seed, fraction);
        let net = build_network(&members, &config, seed).unwrap();
        let power = disseminate(&net, config.depth).unwrap();
        let value = network_decision(&power, &members, DecisionMode::Renormalized).unwrap().value;
        let active = members.iter().filter(|m| m.active).map(|m| m.opinion);
        let lo = active.clone().fold(f64::INFINITY, f64::min);
        let hi = active.fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(value >= lo - 1e-12 && value <= hi + 1e-12);
    }
}

fn candidates(m: usize) -> Vec<String> {
    (0..m).map(|i| format!("c{i}")).collect()
}

fn ranked_ballots() -> impl Strategy<Value = (usize, Vec<Ballot>)> {
    (2usize..6).prop_flat_map(|m| {
        let ballot = (Just(candidates(m)).prop_shuffle(), 1u32..5)
            .prop_map(|(ranking, w)| (ranking, w as f64));
        (Just(m), prop::collection::vec(ballot, 1..12)).prop_map(|(m, raw)| {
            let ballots = raw
                .into_iter()
                .enumerate()
                .map(|(v, (ranking, w))| Ballot::ranking(v as u32, ranking).with_weight(w))
                .collect();
            (m, ballots)
        })
    })
}

proptest! {
    #[test]
    fn winners_ignore_ballot_order((m, ballots) in ranked_ballots(), seed in any::<u64>()) {
        let cands = candidates(m);
        let mut shuffled = ballots.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(borda(&ballots, &cands).unwrap(), borda(&shuffled, &cands).unwrap());
        prop_assert_eq!(plurality(&ballots, &cands).unwrap(), plurality(&shuffled, &cands).unwrap());
    }

    #[test]
    fn appended_first_choice_adds_full_points((m, ballots) in ranked_ballots(), pick in 0usize..6, weight in 1u32..4) {
        let cands = candidates(m);
        let favourite = cands[pick % m].clone();
        let mut ranking = vec![favourite.clone()];
        ranking.extend(cands.iter().filter(|c| **c != favourite).cloned());
        let before = borda_scores(&ballots, &cands).unwrap();
        let mut more = ballots.clone();
        more.push(Ballot::ranking(99, ranking).with_weight(weight as f64));
        let after = borda_scores(&more, &cands).unwrap();
        for ((c, b), (_, a)) in before.iter().zip(&after) {
            if *c == favourite {
                prop_assert_eq!(a - b, weight as f64 * (m - 1) as f64);
            }
        }
    }

    #[test]
    fn scaling_weights_keeps_winners((m, ballots) in ranked_ballots(), scale in prop_oneof![Just(0.5), Just(2.0), Just(4.0), Just(0.25)]) {
        let cands = candidates(m);
        let scaled: Vec<Ballot> = ballots.iter().cloned().map(|b| { let w = b.weight * scale; b.with_weight(w) }).collect();
        prop_assert_eq!(borda(&ballots, &cands).unwrap(), borda(&scaled, &cands).unwrap());
        prop_assert_eq!(plurality(&ballots, &cands).unwrap(), plurality(&scaled, &cands).unwrap());
    }
}
