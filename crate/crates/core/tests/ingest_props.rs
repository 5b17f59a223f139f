use fuzzwell::ingest::{category_series, load_user_log, write_user_log, LabelMap};
use fuzzwell::synth::{generate_log, Profile};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn write_then_load_is_identity(seed in any::<u64>(), gz in any::<bool>()) {
        let mut p = Profile::ideal();
        p.days = 3;
        p.minutes_per_day = 50;
        let log = generate_log("USER", &p, &LabelMap::default(), seed);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(if gz { "USER.csv.gz" } else { "USER.csv" });
        write_user_log(&log, &path).unwrap();
        prop_assert_eq!(load_user_log(&path).unwrap(), log);
    }

    #[test]
    fn column_order_is_irrelevant(rows in prop::collection::vec(prop::collection::vec(0u8..3, 3), 1..40), rot in 0usize..3) {
        let names = ["SLEEPING", "RUNNING", "HAPPY"];
        let cell = |v: u8| ["1", "0", ""][v as usize];
        let write = |order: &[usize]| {
            let mut s = String::from("timestamp");
            for &i in order {
                s += &format!(",label:{}", names[i]);
            }
            s.push('\n');
            for (t, r) in rows.iter().enumerate() {
                s += &(t as i64 * 60).to_string();
                for &i in order {
                    s += ",";
                    s += cell(r[i]);
                }
                s.push('\n');
            }
            s
        };
        let order: Vec<usize> = (0..3).map(|i| (i + rot) % 3).collect();
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        std::fs::write(&a, write(&[0, 1, 2])).unwrap();
        std::fs::write(&b, write(&order)).unwrap();
        let (la, lb) = (load_user_log(&a).unwrap(), load_user_log(&b).unwrap());
        prop_assert_eq!(la.rows(), lb.rows());
        let map = LabelMap::default();
        let (sa, sb) = (category_series(&la, &map, 0.0), category_series(&lb, &map, 0.0));
        prop_assert_eq!(&sa, &sb);
        for f in sa.fractions.values().flatten().chain(&sa.coverage) {
            prop_assert!((0.0..=1.0).contains(f));
        }
    }
}
