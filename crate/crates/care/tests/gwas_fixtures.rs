//! Hand-constructed harmonization fixtures with known truth, a second
//! straight-line implementation of the pruning rule, and round-trip
//! properties.

use proptest::prelude::*;

use care::gwas::{
    harmonize, read_pairs_tsv, sigma_prune, write_pairs_tsv, GwasRecord, LdPair,
    PalindromePolicy, SummaryPair,
};

fn record(id: &str, ea: &str, oa: &str, beta: f64, eaf: Option<f64>) -> GwasRecord {
    GwasRecord {
        snp_id: id.into(),
        effect_allele: ea.into(),
        other_allele: oa.into(),
        beta,
        se: 0.004,
        eaf,
        n: None,
    }
}

fn complement(a: &str) -> String {
    a.chars()
        .map(|c| match c {
            'A' => 'T',
            'T' => 'A',
            'C' => 'G',
            'G' => 'C',
            other => other,
        })
        .collect()
}

/// 50-SNP fixture: 32 aligned, 10 with swapped outcome alleles, 5 on the
/// opposite strand, 3 palindromic. With the drop policy, 47 pairs survive
/// and every sign is predictable from the construction.
#[test]
fn fifty_snp_fixture_with_known_truth() {
    let allele_pool = [("A", "G"), ("C", "T"), ("G", "A"), ("T", "C")];
    let mut exposure = Vec::new();
    let mut outcome = Vec::new();
    let mut expected_sign = Vec::new();
    for i in 0..50 {
        let id = format!("rs{i:02}");
        let beta_x = 0.01 + 0.0002 * i as f64;
        let beta_y = 0.005 + 0.0001 * i as f64;
        if i < 3 {
            // Palindromic A/T.
            exposure.push(record(&id, "A", "T", beta_x, Some(0.3)));
            outcome.push(record(&id, "A", "T", beta_y, Some(0.3)));
            expected_sign.push(0.0); // dropped
        } else if i < 13 {
            // Outcome alleles swapped: sign flips.
            let (ea, oa) = allele_pool[i % 4];
            exposure.push(record(&id, ea, oa, beta_x, Some(0.3)));
            outcome.push(record(&id, oa, ea, beta_y, Some(0.7)));
            expected_sign.push(-1.0);
        } else if i < 18 {
            // Outcome on the other strand, same orientation: sign kept.
            let (ea, oa) = allele_pool[i % 4];
            exposure.push(record(&id, ea, oa, beta_x, Some(0.3)));
            outcome.push(record(&id, &complement(ea), &complement(oa), beta_y, Some(0.3)));
            expected_sign.push(1.0);
        } else {
            let (ea, oa) = allele_pool[i % 4];
            exposure.push(record(&id, ea, oa, beta_x, Some(0.3)));
            outcome.push(record(&id, ea, oa, beta_y, Some(0.3)));
            expected_sign.push(1.0);
        }
    }

    let result = harmonize(&exposure, &outcome, PalindromePolicy::Drop).unwrap();
    assert_eq!(result.pairs.len(), 47);
    assert_eq!(result.dropped_palindromic, 3);
    assert_eq!(result.dropped_irreconcilable, 0);

    for pair in &result.pairs {
        let i: usize = pair.snp_id[2..].parse().unwrap();
        let raw_beta_y = 0.005 + 0.0001 * i as f64;
        assert_eq!(
            pair.beta_y,
            expected_sign[i] * raw_beta_y,
            "sign mismatch at {}",
            pair.snp_id
        );
        assert_eq!(pair.beta_x, 0.01 + 0.0002 * i as f64);
    }
}

#[test]
fn palindrome_inference_uses_frequency_agreement() {
    // Same-strand palindrome with matching frequencies keeps the sign;
    // a frequency flip on the outcome side flips it.
    let exposure = vec![
        record("rs1", "A", "T", 0.02, Some(0.2)),
        record("rs2", "A", "T", 0.02, Some(0.2)),
        record("rs3", "A", "G", 0.02, Some(0.2)),
    ];
    let outcome = vec![
        record("rs1", "A", "T", 0.01, Some(0.22)),
        record("rs2", "A", "T", 0.01, Some(0.78)),
        record("rs3", "A", "G", 0.01, Some(0.2)),
    ];
    let result = harmonize(&exposure, &outcome, PalindromePolicy::Infer { eaf_window: 0.08 })
        .unwrap();
    let by_id = |id: &str| result.pairs.iter().find(|p| p.snp_id == id).unwrap();
    assert_eq!(by_id("rs1").beta_y, 0.01);
    assert_eq!(by_id("rs2").beta_y, -0.01);

    // Frequencies inside the window are ambiguous and dropped.
    let exposure = vec![
        record("rs1", "A", "T", 0.02, Some(0.45)),
        record("rs2", "A", "G", 0.02, Some(0.2)),
        record("rs3", "A", "G", 0.02, Some(0.2)),
        record("rs4", "A", "G", 0.02, Some(0.2)),
    ];
    let outcome = exposure.clone();
    let result = harmonize(&exposure, &outcome, PalindromePolicy::Infer { eaf_window: 0.08 })
        .unwrap();
    assert_eq!(result.dropped_palindromic, 1);
    assert!(result.pairs.iter().all(|p| p.snp_id != "rs1"));
}

#[test]
fn harmonization_is_idempotent() {
    let allele_pool = [("A", "G"), ("C", "T")];
    let exposure: Vec<GwasRecord> = (0..20)
        .map(|i| {
            let (ea, oa) = allele_pool[i % 2];
            record(&format!("rs{i}"), ea, oa, 0.01 + 0.001 * i as f64, Some(0.3))
        })
        .collect();
    let outcome: Vec<GwasRecord> = (0..20)
        .map(|i| {
            let (ea, oa) = allele_pool[i % 2];
            // Half swapped so the first pass does real work.
            if i % 3 == 0 {
                record(&format!("rs{i}"), oa, ea, 0.02, Some(0.7))
            } else {
                record(&format!("rs{i}"), ea, oa, 0.02, Some(0.3))
            }
        })
        .collect();
    let first = harmonize(&exposure, &outcome, PalindromePolicy::Drop).unwrap();

    // Map the harmonized output back to records on the exposure alleles.
    let back: Vec<GwasRecord> = first
        .pairs
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let (ea, oa) = allele_pool[i % 2];
            GwasRecord {
                snp_id: p.snp_id.clone(),
                effect_allele: ea.into(),
                other_allele: oa.into(),
                beta: p.beta_y,
                se: p.se_y,
                eaf: Some(0.3),
                n: None,
            }
        })
        .collect();
    let second = harmonize(&exposure, &back, PalindromePolicy::Drop).unwrap();
    assert_eq!(first.pairs, second.pairs);
}

/// Straight-line re-implementation of the greedy pruning rule: repeatedly
/// extract the argmin by (se_x, snp_id) and delete its linked neighbours.
fn prune_oracle(pairs: &[SummaryPair], ld: &[LdPair], threshold: f64) -> Vec<String> {
    let mut alive: Vec<bool> = vec![true; pairs.len()];
    let mut kept = Vec::new();
    loop {
        let mut best: Option<usize> = None;
        for (i, pair) in pairs.iter().enumerate() {
            if !alive[i] {
                continue;
            }
            let better = match best {
                None => true,
                Some(b) => {
                    pairs[i].se_x < pairs[b].se_x
                        || (pairs[i].se_x == pairs[b].se_x && pair.snp_id < pairs[b].snp_id)
                }
            };
            if better {
                best = Some(i);
            }
        }
        let Some(winner) = best else { break };
        kept.push(pairs[winner].snp_id.clone());
        alive[winner] = false;
        for link in ld {
            if link.r2 <= threshold {
                continue;
            }
            let (a, b) = (&link.snp_a, &link.snp_b);
            if *a == pairs[winner].snp_id {
                if let Some(j) = pairs.iter().position(|p| &p.snp_id == b) {
                    alive[j] = false;
                }
            } else if *b == pairs[winner].snp_id {
                if let Some(j) = pairs.iter().position(|p| &p.snp_id == a) {
                    alive[j] = false;
                }
            }
        }
    }
    kept.sort();
    kept
}

#[test]
fn pruning_matches_independent_greedy_loop() {
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
    for _ in 0..20 {
        let n = 20;
        let pairs: Vec<SummaryPair> = (0..n)
            .map(|i| SummaryPair {
                snp_id: format!("rs{i:02}"),
                beta_x: 0.01,
                se_x: rng.random_range(0.001..0.01),
                beta_y: 0.0,
                se_y: 0.01,
            })
            .collect();
        let mut ld = Vec::new();
        for a in 0..n {
            for b in (a + 1)..n {
                if rng.random::<f64>() < 0.15 {
                    ld.push(LdPair {
                        snp_a: format!("rs{a:02}"),
                        snp_b: format!("rs{b:02}"),
                        r2: rng.random_range(0.0..1.0),
                    });
                }
            }
        }
        let kept = sigma_prune(&pairs, &ld, 0.1).unwrap();
        let mut kept_ids: Vec<String> = kept.iter().map(|p| p.snp_id.clone()).collect();
        kept_ids.sort();
        assert_eq!(kept_ids, prune_oracle(&pairs, &ld, 0.1));
    }
}

proptest! {
    #[test]
    fn pruned_output_is_an_independent_set(
        se in proptest::collection::vec(1e-4f64..1e-2, 12),
        links in proptest::collection::vec((0usize..12, 0usize..12, 0.0f64..1.0), 0..30),
        threshold in 0.01f64..0.9,
    ) {
        let pairs: Vec<SummaryPair> = se
            .iter()
            .enumerate()
            .map(|(i, &se_x)| SummaryPair {
                snp_id: format!("rs{i:02}"),
                beta_x: 0.01,
                se_x,
                beta_y: 0.0,
                se_y: 0.01,
            })
            .collect();
        let ld: Vec<LdPair> = links
            .iter()
            .filter(|(a, b, _)| a != b)
            .map(|&(a, b, r2)| LdPair {
                snp_a: format!("rs{a:02}"),
                snp_b: format!("rs{b:02}"),
                r2,
            })
            .collect();
        let kept = sigma_prune(&pairs, &ld, threshold).unwrap();
        let kept_ids: std::collections::HashSet<&str> =
            kept.iter().map(|p| p.snp_id.as_str()).collect();
        for link in &ld {
            prop_assert!(
                !(link.r2 > threshold
                    && kept_ids.contains(link.snp_a.as_str())
                    && kept_ids.contains(link.snp_b.as_str())),
                "kept pair linked at r2 = {}", link.r2
            );
        }
        // Order preservation: survivors appear in input order.
        let positions: Vec<usize> = kept
            .iter()
            .map(|p| pairs.iter().position(|q| q.snp_id == p.snp_id).unwrap())
            .collect();
        prop_assert!(positions.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn pairs_tsv_round_trip_is_bit_exact(
        rows in proptest::collection::vec(
            (-1.0f64..1.0, 1e-6f64..1.0, -1.0f64..1.0, 1e-6f64..1.0),
            1..20,
        )
    ) {
        let pairs: Vec<SummaryPair> = rows
            .iter()
            .enumerate()
            .map(|(i, &(beta_x, se_x, beta_y, se_y))| SummaryPair {
                snp_id: format!("rs{i}"),
                beta_x,
                se_x,
                beta_y,
                se_y,
            })
            .collect();
        let mut buffer = Vec::new();
        write_pairs_tsv(&pairs, &mut buffer).unwrap();
        let parsed = read_pairs_tsv(buffer.as_slice()).unwrap();
        prop_assert_eq!(pairs.len(), parsed.len());
        for (a, b) in pairs.iter().zip(&parsed) {
            prop_assert_eq!(&a.snp_id, &b.snp_id);
            prop_assert_eq!(a.beta_x.to_bits(), b.beta_x.to_bits());
            prop_assert_eq!(a.se_x.to_bits(), b.se_x.to_bits());
            prop_assert_eq!(a.beta_y.to_bits(), b.beta_y.to_bits());
            prop_assert_eq!(a.se_y.to_bits(), b.se_y.to_bits());
        }
    }

    /// Re-deriving the alignment from raw allele columns reproduces the
    /// stored sign of beta_y.
    #[test]
    fn sign_consistency_under_random_orientations(
        flips in proptest::collection::vec((any::<bool>(), any::<bool>()), 3..20)
    ) {
        let exposure: Vec<GwasRecord> = flips
            .iter()
            .enumerate()
            .map(|(i, _)| record(&format!("rs{i}"), "A", "G", 0.01, Some(0.3)))
            .collect();
        let outcome: Vec<GwasRecord> = flips
            .iter()
            .enumerate()
            .map(|(i, &(swap, strand))| {
                let (mut ea, mut oa) = ("A".to_string(), "G".to_string());
                if swap {
                    std::mem::swap(&mut ea, &mut oa);
                }
                if strand {
                    ea = complement(&ea);
                    oa = complement(&oa);
                }
                GwasRecord {
                    snp_id: format!("rs{i}"),
                    effect_allele: ea,
                    other_allele: oa,
                    beta: 0.02,
                    se: 0.004,
                    eaf: Some(0.3),
                    n: None,
                }
            })
            .collect();
        let result = harmonize(&exposure, &outcome, PalindromePolicy::Drop).unwrap();
        prop_assert_eq!(result.pairs.len(), flips.len());
        for (i, pair) in result.pairs.iter().enumerate() {
            let expected = if flips[i].0 { -0.02 } else { 0.02 };
            prop_assert_eq!(pair.beta_y, expected);
        }
    }
}

fn record_for(i: usize) -> GwasRecord {
    record(&format!("rs{i}"), "A", "G", 0.01, Some(0.3))
}

#[test]
fn duplicate_ids_keep_first_occurrence() {
    let mut exposure: Vec<GwasRecord> = (0..5).map(record_for).collect();
    exposure.push(record("rs0", "A", "G", 0.9, Some(0.3)));
    let outcome: Vec<GwasRecord> = (0..5).map(record_for).collect();
    let result = harmonize(&exposure, &outcome, PalindromePolicy::Drop).unwrap();
    assert_eq!(result.pairs.len(), 5);
    assert_eq!(result.pairs[0].beta_x, 0.01);
}
