use fuzzwell::dsl::{parse_config, serialize, validate, Severity};
use fuzzwell::synth::random_config;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn random_configs_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..200 {
        let cfg = random_config(&mut rng);
        let text = serialize(&cfg);
        let back = parse_config(&text).unwrap_or_else(|e| panic!("{e}\n{text}"));
        assert_eq!(back, cfg);
        assert_eq!(serialize(&back), text);
    }
}

#[test]
fn errors_carry_positions() {
    let err = parse_config("variable x universe 0 1 {\n  term a tri 0 2;\n}").unwrap_err();
    assert_eq!((err.line, err.column), (2, 17));
    let err = parse_config("variable IF universe 0 1 { term a crisp 0 1; }").unwrap_err();
    assert_eq!((err.line, err.column), (1, 10));
}

#[test]
fn undefined_term_is_an_error() {
    let cfg = parse_config(
        "variable a universe 0 1 { term x crisp 0 1; }
         variable o universe 0 1 { term p crisp 0 1; }
         controller c inputs (a) output o { rule IF a IS nope THEN o IS p; }",
    )
    .unwrap();
    let diags = validate(&cfg);
    assert!(diags.iter().any(|d| d.severity == Severity::Error && d.message.contains("nope")), "{diags:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn parser_survives_mutations(seed in any::<u64>(), edits in prop::collection::vec((any::<usize>(), any::<u8>(), 0u8..3), 1..8)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut bytes = serialize(&random_config(&mut rng)).into_bytes();
        for (pos, byte, op) in edits {
            if bytes.is_empty() {
                bytes.push(byte);
                continue;
            }
            let i = pos % bytes.len();
            match op {
                0 => bytes[i] = byte,
                1 => bytes.insert(i, byte),
                _ => { bytes.remove(i); }
            }
        }
        let text = String::from_utf8_lossy(&bytes);
        if let Ok(cfg) = parse_config(&text) {
            let _ = validate(&cfg);
            let again = parse_config(&serialize(&cfg)).unwrap();
            prop_assert_eq!(again, cfg);
        }
    }

    #[test]
    fn parser_survives_arbitrary_text(s in "\\PC*") {
        let _ = parse_config(&s);
    }
}
