use std::path::Path;

use aifx::audit::{import_trace, render_report, EventBody, Verbosity};

fn fixture() -> Vec<u8> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/minimal_trace.json");
    std::fs::read(path).unwrap()
}

#[test]
fn hand_written_trace_imports_field_by_field() {
    let trace = import_trace(&fixture()).unwrap();
    let h = &trace.header;
    assert_eq!(h.format, "aifx-trace/1");
    assert_eq!(h.spec_hash, "hand-written");
    assert_eq!(h.seed, 17);
    assert_eq!(h.steps, 1);
    assert_eq!(h.levels.len(), 1);
    assert_eq!(h.levels[0].states, ["heads", "tails"]);
    assert_eq!(h.levels[0].actions, ["null"]);
    assert_eq!(h.levels[0].policies, 1);
    assert_eq!(h.process_states, ["heads", "tails"]);
    assert_eq!(h.agent_spec.tick_ratio, 1);
    assert_eq!(h.agent_spec.top_gamma, 1.0);
    assert_eq!(h.process_spec.transitions.len(), 1);

    assert_eq!(trace.events.len(), 1);
    let e = &trace.events[0];
    assert_eq!((e.sequence_no, e.step, e.level), (0, 1, 1));
    match &e.body {
        EventBody::Posterior { dist } => {
            assert_eq!(dist, &[0.8181818181818182, 0.1818181818181818]);
        }
        other => panic!("unexpected event {other:?}"),
    }
}

#[test]
fn hand_written_trace_renders_without_decisions() {
    let trace = import_trace(&fixture()).unwrap();
    let text = render_report(&trace, Verbosity::Full);
    assert!(text.contains("step 1: no overt decision"), "{text}");
    assert!(
        text.contains("level 1 posterior: [heads 0.8181818, tails 0.1818182]"),
        "{text}"
    );
}

#[test]
fn wrong_dimension_in_fixture_is_rejected() {
    let text = String::from_utf8(fixture()).unwrap();
    let bad = text.replace(
        "[0.8181818181818182, 0.1818181818181818]",
        "[0.5, 0.25, 0.25]",
    );
    assert!(import_trace(bad.as_bytes()).is_err());
}
