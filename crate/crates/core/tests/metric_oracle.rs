//! The privacy metrics must agree with brute-force reference computations on
//! random small tables, and satisfy their structural guarantees.

use std::collections::HashMap;

use deident_core::attack::{linkage_attack, AdversaryKnowledge};
use deident_core::dist::GroundDistance;
use deident_core::metrics::{entropy_l_diversity, k_anonymity, t_closeness};
use deident_core::table::{build_table, partition_equivalence_classes, AttributeSchema, AttributeTable};
use deident_testkit as oracle;
use proptest::prelude::*;

const ATTRS: usize = 4;
const SENSITIVE: usize = 3;

fn names() -> Vec<String> {
    (0..ATTRS).map(|i| format!("A{i}")).collect()
}

fn table_of(rows: &[Vec<u8>]) -> AttributeTable {
    let schema = AttributeSchema::binary(names()).unwrap();
    let identities: HashMap<String, String> = (0..rows.len())
        .map(|i| (format!("{i:06}.jpg"), format!("id_{i}")))
        .collect();
    build_table(
        schema,
        rows.iter()
            .enumerate()
            .map(|(i, r)| (format!("{i:06}.jpg"), r.clone()))
            .collect(),
        &identities,
    )
    .unwrap()
}

fn quasi_names(mask: &[bool]) -> Vec<String> {
    mask.iter()
        .enumerate()
        .filter(|&(_, &m)| m)
        .map(|(i, _)| format!("A{i}"))
        .collect()
}

fn quasi_indices(mask: &[bool]) -> Vec<usize> {
    mask.iter()
        .enumerate()
        .filter(|&(_, &m)| m)
        .map(|(i, _)| i)
        .collect()
}

fn arb_rows() -> impl Strategy<Value = Vec<Vec<u8>>> {
    prop::collection::vec(prop::collection::vec(0..2u8, ATTRS), 1..=12)
}

proptest! {
    #[test]
    fn k_matches_brute_force(rows in arb_rows(), mask in prop::collection::vec(any::<bool>(), SENSITIVE)) {
        let table = table_of(&rows);
        let fast = k_anonymity(&table, &quasi_names(&mask)).unwrap();
        let slow = oracle::k_anonymity(&rows, &quasi_indices(&mask));
        prop_assert_eq!(fast, slow);
        prop_assert!(fast >= 1 && fast <= rows.len());
    }

    #[test]
    fn l_matches_brute_force(rows in arb_rows(), mask in prop::collection::vec(any::<bool>(), SENSITIVE)) {
        let table = table_of(&rows);
        let fast = entropy_l_diversity(&table, &quasi_names(&mask), "A3").unwrap();
        let slow = oracle::entropy_l_diversity(&rows, &quasi_indices(&mask), SENSITIVE);
        prop_assert!((fast - slow).abs() < 1e-9, "{} vs {}", fast, slow);
        prop_assert!((1.0 - 1e-12..=2.0 + 1e-12).contains(&fast));
    }

    #[test]
    fn t_matches_brute_force(rows in arb_rows(), mask in prop::collection::vec(any::<bool>(), SENSITIVE)) {
        let table = table_of(&rows);
        let fast = t_closeness(&table, &quasi_names(&mask), "A3", GroundDistance::Binary)
            .unwrap()
            .value;
        let slow = oracle::t_closeness_max(
            &rows,
            &quasi_indices(&mask),
            SENSITIVE,
            2,
            &oracle::unit_spacing_costs(2),
        );
        prop_assert!((fast - slow).abs() < 1e-9, "{} vs {}", fast, slow);
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&fast));
    }

    /// Knowing a record's quasi-identifier values singles it out with
    /// probability at most 1/k.
    #[test]
    fn linkage_success_is_bounded_by_inverse_k(
        rows in arb_rows(),
        mask in prop::collection::vec(any::<bool>(), SENSITIVE),
    ) {
        let table = table_of(&rows);
        let quasi = quasi_names(&mask);
        let indices = quasi_indices(&mask);
        let k = k_anonymity(&table, &quasi).unwrap();
        for record in table.records() {
            let knowledge = AdversaryKnowledge {
                known: indices
                    .iter()
                    .map(|&i| (format!("A{i}"), record.values[i]))
                    .collect(),
                target_identity: Some(record.identity_id.clone()),
            };
            let outcome = linkage_attack(&table, &knowledge).unwrap();
            prop_assert!(
                outcome.success_probability <= 1.0 / k as f64 + 1e-12,
                "success {} exceeds 1/k = 1/{}",
                outcome.success_probability,
                k
            );
        }
    }

    /// Adding an attribute to the quasi set only refines classes: k cannot
    /// grow, and every refined class nests inside an original class.
    #[test]
    fn refinement_monotonicity(
        rows in arb_rows(),
        mask in prop::collection::vec(any::<bool>(), SENSITIVE),
        extra in 0..SENSITIVE,
    ) {
        let table = table_of(&rows);
        let coarse = quasi_names(&mask);
        let mut fine_mask = mask.clone();
        fine_mask[extra] = true;
        let fine = quasi_names(&fine_mask);

        let k_coarse = k_anonymity(&table, &coarse).unwrap();
        let k_fine = k_anonymity(&table, &fine).unwrap();
        prop_assert!(k_fine <= k_coarse);

        let coarse_classes = partition_equivalence_classes(&table, &coarse).unwrap();
        let fine_classes = partition_equivalence_classes(&table, &fine).unwrap();
        for fc in &fine_classes {
            let nested = coarse_classes
                .iter()
                .any(|cc| fc.members.iter().all(|m| cc.members.contains(m)));
            prop_assert!(nested, "class {:?} not nested", fc.key);
        }
    }
}
