//! Cross-format parser checks on the running-example fixtures.

use std::path::PathBuf;

use patgen::csv::parse_csv;
use patgen::xes::parse_xes;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

#[test]
fn xes_encoding_of_the_running_example_matches_the_csv() {
    let csv_log = parse_csv(&std::fs::read_to_string(fixture("running_example_log.csv")).unwrap()).unwrap();

    // XES has no count column; each occurrence is its own trace element.
    let mut doc = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<log xes.version=\"1.0\">\n");
    for (trace, &count) in csv_log.iter() {
        let mut body = String::from("  <trace>");
        for label in trace.iter() {
            body.push_str(&format!(
                "<event><string key=\"concept:name\" value=\"{}\"/></event>",
                label.as_str()
            ));
        }
        body.push_str("</trace>\n");
        for _ in 0..count {
            doc.push_str(&body);
        }
    }
    doc.push_str("</log>\n");

    let xes_log = parse_xes(doc.as_bytes()).unwrap();
    assert_eq!(xes_log.distinct_len(), 9);
    assert_eq!(xes_log.total(), 4500);
    assert_eq!(xes_log, csv_log);
}
