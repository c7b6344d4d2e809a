use chrono::{TimeZone, Utc};
use discourse_core::corpus::{read_csv, read_jsonl};
use discourse_core::cug::{cug_test, Conditioning};
use discourse_core::extraction::{extract_from_text, Extraction};
use discourse_core::network::{ConceptNet, Stratum};
use discourse_core::pca::{eigen_sym, network_pca, PcaOptions};
use discourse_core::stats::{Digraph, Statistic};
use discourse_core::{AccountRole, Epoch, Message, MessageSet, MonthIndex};
use proptest::prelude::*;

fn digraph(n: usize, bits: &[bool]) -> Digraph {
    let arcs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|(i, j)| i != j)
        .zip(bits)
        .filter(|(_, b)| **b)
        .map(|(c, _)| c)
        .collect();
    Digraph::from_arcs(n, &arcs)
}

fn graph_and_permutation() -> impl Strategy<Value = (usize, Vec<bool>, Vec<usize>)> {
    (3usize..10).prop_flat_map(|n| {
        (
            Just(n),
            prop::collection::vec(any::<bool>(), n * (n - 1)),
            Just((0..n).collect::<Vec<_>>()).prop_shuffle(),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn statistics_ignore_node_labels((n, bits, perm) in graph_and_permutation()) {
        let g = digraph(n, &bits);
        let mut arcs = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if g.has_arc(i, j) {
                    arcs.push((perm[i], perm[j]));
                }
            }
        }
        let h = Digraph::from_arcs(n, &arcs);
        for s in Statistic::ALL {
            match (s.evaluate(&g), s.evaluate(&h)) {
                (Ok(a), Ok(b)) => prop_assert!((a - b).abs() < 1e-12, "{s:?}: {a} vs {b}"),
                (Err(_), Err(_)) => {}
                (a, b) => prop_assert!(false, "{s:?}: {a:?} vs {b:?}"),
            }
        }
    }

    #[test]
    fn corpus_serialization_is_a_fixed_point(
        rows in prop::collection::vec(
            ("[ -~]{0,40}", 0i64..100_000_000, 0usize..5, any::<u32>(), any::<u32>(), any::<bool>()),
            1..20,
        )
    ) {
        let messages: Vec<Message> = rows
            .iter()
            .enumerate()
            .map(|(k, (text, secs, role, f, y, rt))| Message {
                id: format!("id{k}"),
                text: format!("{text}é ✓"),
                timestamp: Utc.timestamp_opt(1_577_836_800 + secs, 0).unwrap(),
                account_id: format!("acct{}", k % 3),
                account_role: AccountRole::ALL[*role],
                follower_count: u64::from(*f),
                retransmission_count: u64::from(*y),
                is_retransmission: *rt,
            })
            .collect();
        let set = MessageSet::new(messages).unwrap();
        let mut first = Vec::new();
        set.write_jsonl(&mut first).unwrap();
        let loaded = read_jsonl(first.as_slice()).unwrap();
        prop_assert!(loaded.rejections.is_empty());
        prop_assert_eq!(&loaded.messages, &set);
        let mut second = Vec::new();
        loaded.messages.write_jsonl(&mut second).unwrap();
        prop_assert_eq!(&first, &second);

        let mut csv = Vec::new();
        set.write_csv(&mut csv).unwrap();
        let from_csv = read_csv(csv.as_slice()).unwrap();
        prop_assert_eq!(&from_csv.messages, &set);
    }

    #[test]
    fn extraction_reconstructs_the_split_region(
        effect in "[a-z]{1,8}( [a-z]{1,8}){0,4}",
        cause in "[a-z]{1,8}( [a-z]{1,8}){0,4}",
        conn in prop::sample::select(vec!["due to", "because of", "caused by", "Due To", "BECAUSE OF"]),
        gap in "[ ]{1,3}",
    ) {
        let text = format!("{effect}{gap}{conn}{gap}{cause}");
        prop_assume!(!effect.split(' ').any(|w| ["due", "because", "caused"].contains(&w)));
        let Extraction::Unit(u) = extract_from_text("x", &text) else {
            return Err(TestCaseError::fail(format!("no unit from {text:?}")));
        };
        prop_assert_eq!(&u.effect_text, &effect);
        let start = u.connective_offset;
        let rebuilt: String = text.chars().skip(start).take(conn.len()).collect();
        prop_assert_eq!(rebuilt.to_lowercase(), conn.to_lowercase());
        prop_assert!(text.ends_with(&u.cause_text));
    }

    #[test]
    fn eigen_decomposition_reconstructs(
        (n, vals) in (1usize..8).prop_flat_map(|n| (Just(n), prop::collection::vec(-50.0f64..50.0, n * n)))
    ) {
        let mut a = vals.clone();
        for i in 0..n {
            for j in 0..i {
                a[i * n + j] = a[j * n + i];
            }
        }
        let e = eigen_sym(&a, n).unwrap();
        let scale = a.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        for w in e.values.windows(2) {
            prop_assert!(w[0] >= w[1]);
        }
        for i in 0..n {
            for j in 0..n {
                let rebuilt: f64 = (0..n).map(|k| e.vectors[i * n + k] * e.values[k] * e.vectors[j * n + k]).sum();
                prop_assert!((rebuilt - a[i * n + j]).abs() < 1e-8 * scale);
                let dot: f64 = (0..n).map(|k| e.vectors[k * n + i] * e.vectors[k * n + j]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((dot - want).abs() < 1e-10);
            }
        }
        let trace: f64 = (0..n).map(|i| a[i * n + i]).sum();
        prop_assert!((trace - e.values.iter().sum::<f64>()).abs() < 1e-8 * scale * n as f64);
    }

    #[test]
    fn pca_eigenvalues_ignore_graph_order(
        (n, p, weights) in (3usize..7, 2usize..6).prop_flat_map(|(n, p)| {
            (Just(n), Just(p), prop::collection::vec(0u64..30, n * n * p))
        }),
        rotate in 0usize..6,
    ) {
        let nodes: Vec<String> = (0..n).map(|i| format!("c{i}")).collect();
        let nets: Vec<ConceptNet> = (0..p)
            .map(|k| {
                ConceptNet::from_matrix(
                    nodes.clone(),
                    Stratum::Month(MonthIndex::new(k as u32 + 1).unwrap()),
                    weights[k * n * n..(k + 1) * n * n].to_vec(),
                )
                .unwrap()
            })
            .collect();
        let mut shuffled = nets.clone();
        shuffled.rotate_left(rotate % p);
        let opts = PcaOptions { components: 1, ..PcaOptions::default() };
        let a = network_pca(&nets, Epoch::default(), opts).unwrap();
        let b = network_pca(&shuffled, Epoch::default(), opts).unwrap();
        let scale = a.eigenvalues[0].abs().max(1.0);
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            prop_assert!((x - y).abs() < 1e-9 * scale, "{x} vs {y}");
        }
        prop_assert!(a.eigenvalues.iter().all(|l| *l > -1e-9 * scale));
    }
}

/// Exact null expectation by enumerating every 4-node digraph that meets
/// the condition, compared with a long Monte Carlo run.
fn exact_null_mean(g: &Digraph, conditioning: Conditioning, s: Statistic) -> f64 {
    let (mut sum, mut count) = (0.0, 0usize);
    for mask in 0u32..1 << 12 {
        let bits: Vec<bool> = (0..12).map(|b| mask >> b & 1 == 1).collect();
        let h = digraph(4, &bits);
        let ok = match conditioning {
            Conditioning::Edges => h.arc_count() == g.arc_count(),
            Conditioning::DyadCensus => h.dyad_census() == g.dyad_census(),
        };
        if ok {
            if let Ok(v) = s.evaluate(&h) {
                sum += v;
                count += 1;
            }
        }
    }
    sum / count as f64
}

#[test]
fn cug_null_means_match_enumeration() {
    let g = Digraph::from_arcs(4, &[(0, 1), (1, 0), (1, 2), (2, 3), (3, 1), (0, 3)]);
    for conditioning in [Conditioning::Edges, Conditioning::DyadCensus] {
        for s in [Statistic::Transitivity, Statistic::BetweennessCentralization, Statistic::InDegreeCentralization] {
            let exact = exact_null_mean(&g, conditioning, s);
            let r = cug_test(&g, s, conditioning, 40_000, 5).unwrap();
            let mean = r.null_mean().unwrap();
            let var = r.null_draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / r.replicates as f64;
            let se = (var / r.replicates as f64).sqrt();
            assert!(
                (mean - exact).abs() < 4.0 * se + 1e-12,
                "{s:?} under {conditioning:?}: Monte Carlo {mean}, exact {exact}, se {se}"
            );
        }
    }
}
