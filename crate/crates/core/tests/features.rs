use discourse_core::corpus::read_jsonl;
use discourse_core::regression::{
    build_features, design_matrix, CumulativeWindow, FeatureOptions, FeatureTable, Formula, Term,
};
use discourse_core::{build_networks, code_all, extract_all, Epoch, Error, Lexicon, MessageSet, Stratifier};

const LEXICON: &str = r#"
theme_list = ["Hazards", "Impacts"]

[reference_themes]
cause = "Hazards"
effect = "Impacts"

[[themes]]
concept = "Alpha"
theme = "Hazards"

[[themes]]
concept = "Beta"
theme = "Hazards"

[[themes]]
concept = "Gamma"
theme = "Impacts"

[[themes]]
concept = "Delta"
theme = "Impacts"

[[rules]]
pattern = '\balpha\b'
concept = "Alpha"

[[rules]]
pattern = '\bbeta\b'
concept = "Beta"

[[rules]]
pattern = '\bgamma\b'
concept = "Gamma"

[[rules]]
pattern = '\bdelta\b'
concept = "Delta"
"#;

/// (id, timestamp, text, followers, retransmissions, is_retransmission)
type Row<'a> = (&'a str, &'a str, &'a str, u64, u64, bool);

fn corpus(rows: &[Row]) -> MessageSet {
    let lines: Vec<String> = rows
        .iter()
        .map(|(id, ts, text, f, y, rt)| {
            format!(
                r#"{{"id":"{id}","text":"{text}","timestamp":"{ts}","account_id":"a","account_role":"mayor","follower_count":{f},"retransmission_count":{y},"is_retransmission":{rt}}}"#
            )
        })
        .collect();
    read_jsonl(lines.join("\n").as_bytes()).unwrap().messages
}

fn features(rows: &[Row], window: CumulativeWindow) -> discourse_core::Result<FeatureTable> {
    let lexicon = Lexicon::from_toml(LEXICON).unwrap();
    let messages = corpus(rows);
    let coded = code_all(&extract_all(&messages).units, &lexicon).coded;
    let nodes = lexicon.concepts().to_vec();
    let epoch = Epoch::default();
    let total = build_networks(&coded, &messages, &nodes, Stratifier::Total, epoch)?.remove(0);
    let months = build_networks(&coded, &messages, &nodes, Stratifier::Month, epoch)?;
    let options = FeatureOptions {
        window,
        ..FeatureOptions::default()
    };
    build_features(&coded, &messages, &total, &months, &lexicon, &options)
}

const TWO_MONTHS: &[Row] = &[
    ("m1", "2020-01-03T10:00:00Z", "gamma closed due to alpha", 0, 1, false),
    ("m2", "2020-01-04T10:00:00Z", "delta closed due to alpha", 9, 0, false),
    ("m3", "2020-01-05T10:00:00Z", "gamma again because of alpha", 99, 2, false),
    ("m4", "2020-02-01T03:00:00Z", "delta closed caused by alpha", 3, 5, false),
    ("m5", "2020-02-02T03:00:00Z", "stay safe", 3, 5, false),
    ("m6", "2020-02-03T03:00:00Z", "delta closed caused by alpha", 3, 0, true),
];

fn row<'t>(t: &'t FeatureTable, id: &str) -> &'t discourse_core::regression::FeatureRow {
    t.rows.iter().find(|r| r.message_id == id).unwrap()
}

#[test]
fn first_month_has_no_prior_usage() {
    let t = features(TWO_MONTHS, CumulativeWindow::Before).unwrap();
    for id in ["m1", "m2", "m3"] {
        assert_eq!(row(&t, id).log_cum_cause_usage, 0.0);
        assert_eq!(row(&t, id).log_cum_effect_usage, 0.0);
    }
}

#[test]
fn three_prior_uses_log_to_log_four() {
    let t = features(TWO_MONTHS, CumulativeWindow::Before).unwrap();
    let r = row(&t, "m4");
    assert_eq!(r.log_cum_cause_usage, 4f64.ln());
    // Delta was an effect once in January.
    assert_eq!(r.log_cum_effect_usage, 2f64.ln());
    assert_eq!(r.months_elapsed, 2);
}

#[test]
fn through_window_includes_the_current_month() {
    let t = features(TWO_MONTHS, CumulativeWindow::Through).unwrap();
    // Alpha: three January uses plus m4 and the retransmission m6 in February.
    assert_eq!(row(&t, "m4").log_cum_cause_usage, 6f64.ln());
    assert_eq!(row(&t, "m1").log_cum_cause_usage, 4f64.ln());
}

#[test]
fn funnel_accounts_for_every_message() {
    let t = features(TWO_MONTHS, CumulativeWindow::Before).unwrap();
    let f = &t.funnel;
    assert_eq!(f.messages, 6);
    assert_eq!(f.dropped_retransmissions, 1);
    assert_eq!(f.dropped_without_coded_unit, 1);
    assert_eq!(f.rows, 4);
    assert_eq!(
        f.rows + f.dropped_retransmissions + f.dropped_without_coded_unit + f.dropped_pre_epoch,
        f.messages
    );
}

#[test]
fn message_fields_carry_through() {
    let t = features(TWO_MONTHS, CumulativeWindow::Before).unwrap();
    let r = row(&t, "m2");
    assert_eq!(r.log_follower_count, 10f64.ln());
    assert_eq!(row(&t, "m1").log_follower_count, 0.0);
    // 2020-01-04 was a Saturday.
    assert_eq!(r.day_of_week, 6);
    assert_eq!(r.hour_utc, 10);
    assert_eq!(r.cause_theme, "Hazards");
    assert_eq!(r.effect_theme, "Impacts");
    assert_eq!(r.y, 0);
}

#[test]
fn closure_needs_a_two_path_through_a_third_concept() {
    let rows: &[Row] = &[
        ("a", "2020-01-03T10:00:00Z", "beta closed due to alpha", 1, 0, false),
        ("b", "2020-01-04T10:00:00Z", "gamma closed due to beta", 1, 0, false),
        ("c", "2020-01-05T10:00:00Z", "gamma closed due to alpha", 1, 0, false),
        ("d", "2020-01-06T10:00:00Z", "delta closed due to gamma", 1, 0, false),
    ];
    let t = features(rows, CumulativeWindow::Before).unwrap();
    // Alpha→Beta→Gamma closes Alpha→Gamma.
    assert_eq!(row(&t, "c").transitive_closure, 1);
    // Nothing leads from Alpha to Beta except the arc itself.
    assert_eq!(row(&t, "a").transitive_closure, 0);
    assert_eq!(row(&t, "d").transitive_closure, 0);
    // In-degree of the cause and out-degree of the effect, dichotomized.
    assert_eq!(row(&t, "c").cause_in_degree, 0);
    assert_eq!(row(&t, "c").effect_out_degree, 1);
    assert_eq!(row(&t, "b").cause_in_degree, 1);
}

#[test]
fn repeated_arcs_do_not_inflate_degrees() {
    let t = features(TWO_MONTHS, CumulativeWindow::Before).unwrap();
    // Alpha→Gamma twice and Alpha→Delta three times: two distinct arcs.
    assert_eq!(row(&t, "m1").effect_out_degree, 0);
    assert_eq!(row(&t, "m4").cause_in_degree, 0);
    let lexicon = Lexicon::from_toml(LEXICON).unwrap();
    let messages = corpus(TWO_MONTHS);
    let coded = code_all(&extract_all(&messages).units, &lexicon).coded;
    let total = build_networks(&coded, &messages, lexicon.concepts(), Stratifier::Total, Epoch::default())
        .unwrap()
        .remove(0);
    assert_eq!(total.out_strength(0), 5);
}

#[test]
fn message_outside_network_months_is_an_error() {
    let lexicon = Lexicon::from_toml(LEXICON).unwrap();
    let messages = corpus(TWO_MONTHS);
    let coded = code_all(&extract_all(&messages).units, &lexicon).coded;
    let nodes = lexicon.concepts().to_vec();
    let epoch = Epoch::default();
    let total = build_networks(&coded, &messages, &nodes, Stratifier::Total, epoch).unwrap().remove(0);
    let months = build_networks(&coded, &messages, &nodes, Stratifier::Month, epoch).unwrap();
    let err = build_features(&coded, &messages, &total, &months[..1], &lexicon, &FeatureOptions::default())
        .unwrap_err();
    assert!(matches!(err, Error::MonthOutOfRange { month: 2, .. }), "{err}");
}

#[test]
fn design_drops_constant_and_empty_columns() {
    let t = features(TWO_MONTHS, CumulativeWindow::Before).unwrap();
    let d = design_matrix(&t, &Formula::default());
    assert_eq!(d.n_rows, 4);
    assert_eq!(d.names[0], "(Intercept)");
    // Every row has the reference themes, so the theme dummies are empty.
    assert!(d.dropped.iter().any(|n| n == "Cause Theme: Impacts"));
    assert!(d.dropped.iter().any(|n| n == "Effect Theme: Hazards"));
    // Transitive closure is zero throughout and cannot be estimated.
    assert!(d.dropped.iter().any(|n| n == "Transitive Closure"));
    assert_eq!(d.names.len() + d.dropped.len(), 1 + 6 + 1 + 1 + 6 + 23 + 1);
}

#[test]
fn formula_selects_terms() {
    let t = features(TWO_MONTHS, CumulativeWindow::Before).unwrap();
    let formula = Formula {
        terms: vec![Term::LogFollowerCount, Term::MonthsElapsed],
    };
    let d = design_matrix(&t, &formula);
    assert_eq!(d.names, ["(Intercept)", "Log Follower Count", "Num. of Months"]);
    assert_eq!(d.controls, [false, false, true]);
    assert_eq!(d.row(1), [1.0, 10f64.ln(), 1.0]);
}
