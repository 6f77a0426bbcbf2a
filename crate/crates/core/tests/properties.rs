use proptest::prelude::*;

use mimo_ota::closed_form::{pam_codec, qam_codec, AffineSpec, ConvSpec};
use mimo_ota::config::{CodecKind, ScenarioConfig};
use mimo_ota::design::{design_codec, Codec, DesignParams, Method};
use mimo_ota::field::FunctionTable;

fn table_strategy() -> impl Strategy<Value = FunctionTable> {
    (prop::collection::vec(2u32..=4, 1..=3), 1usize..=3, 2u32..=4, any::<u64>())
        .prop_map(|(q, l, levels, seed)| FunctionTable::random(&q, l, levels, seed).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn designed_codecs_are_exact_and_survive_json(table in table_strategy(), sdp in any::<bool>()) {
        let method = if sdp { Method::Sdp } else { Method::Exact };
        let codec = design_codec(&table, &DesignParams { method, ..DesignParams::default() }).unwrap();
        prop_assert!(codec.noiseless_failures(&table).is_empty());
        let back = Codec::from_json(&codec.to_json().unwrap()).unwrap();
        prop_assert!(back.noiseless_failures(&table).is_empty());
        for row in 0..table.rows() {
            let input = table.input(row);
            prop_assert_eq!(back.decode(&back.superpose(input)), codec.decode(&codec.superpose(input)));
        }
    }

    #[test]
    fn closed_form_codecs_decode_every_input(k in 1usize..=4, l in 1usize..=3, q in 2u32..=6, seed in any::<u64>()) {
        let spec = AffineSpec::random(k, l, q, vec![q; k], seed).unwrap();
        prop_assert!(pam_codec(&spec).unwrap().noiseless_failures(&spec.table().unwrap()).is_empty());
        let spec = ConvSpec::random(k, l, q, seed).unwrap();
        prop_assert!(qam_codec(&spec).unwrap().noiseless_failures(&spec.table().unwrap()).is_empty());
    }

    #[test]
    fn scenario_text_roundtrips(
        k in 1usize..=20,
        l in 1usize..=4,
        extra in 0usize..=8,
        q in 2u32..=16,
        snr in -20.0f64..40.0,
        trials in 1usize..=100_000,
        seed in any::<u64>(),
        alpha in 0.0f64..0.99,
    ) {
        let mut cfg = ScenarioConfig::new(k, l, q, snr, trials, CodecKind::RawSum);
        cfg.n_r = Some(l + extra);
        cfg.n_t = Some(l);
        cfg.seed = seed;
        cfg.alpha_corr = alpha;
        prop_assert_eq!(ScenarioConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }
}
