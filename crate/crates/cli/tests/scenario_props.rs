use proptest::prelude::*;

use rflow_cli::Scenario;

const KEYS: &[&str] = &["ends", "grid", "family", "amplitude", "dt", "t_end", "name", "polyakov", "seed", "bogus"];
const SECTIONS: &[&str] = &["[surface]", "[initial]", "[flow]", "[output]", "[monitors]", "[nope]"];

fn line() -> impl Strategy<Value = String> {
    prop_oneof![
        prop::sample::select(SECTIONS).prop_map(str::to_string),
        (prop::sample::select(KEYS), "[-a-z0-9.e]{0,8}").prop_map(|(k, v)| format!("{k} = {v}")),
        ".{0,20}",
    ]
}

proptest! {
    #[test]
    fn parser_never_panics(text in ".{0,200}") {
        let _ = Scenario::parse(&text);
    }

    #[test]
    fn errors_point_at_a_line(lines in prop::collection::vec(line(), 0..12)) {
        let text = lines.join("\n");
        if let Err(e) = Scenario::parse(&text) {
            prop_assert!(e.line <= lines.len().max(1), "{e}");
        }
    }
}
