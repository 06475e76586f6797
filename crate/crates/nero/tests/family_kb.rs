//! The committed family knowledge base matches the benchmark shape it
//! mirrors: 202 individuals, 18 named concepts, 4 roles.

mod common;

use nero::kb::{load_kb_path, validate};

#[test]
fn family_fixture_has_the_benchmark_shape() {
    let (kb, warnings) = load_kb_path(&common::family_kb_path(), None).unwrap();
    assert!(warnings.is_empty());
    assert_eq!(kb.individuals().len(), 202);
    assert_eq!(kb.concepts().len(), 18);
    assert_eq!(kb.roles().len(), 4);
    assert!(validate(&kb).is_empty());
}
