//! Parses an aspect-triple rationale, checks it against its document and
//! prints the canonical serialization.

use sumdistill::rationale::{parse_probe_response, serialize_rationale, validate_rationale, Document};

fn main() -> sumdistill::Result<()> {
    let document = Document::new(
        "harbor",
        "The council approved bridge repairs in the harbor district. Work starts in May.",
        "The council approved harbor bridge repairs starting in May.",
    )?;
    let response = "Aspects: bridge repairs ; timeline\n\
                    Triples:\n\
                    1. [council | approved | bridge repairs]\n\
                    2. [work | starts in | May]\n\
                    Summary: The council approved bridge repairs, with work from May.";

    let (rationale, summary) = parse_probe_response(response)?;
    println!("canonical form:\n{}\n", serialize_rationale(&rationale));
    println!("summary: {summary}\n");

    let report = validate_rationale(&rationale, &document);
    if report.is_clean() {
        println!("no findings");
    }
    for f in &report.findings {
        println!("{:?} {:?}: {}", f.severity, f.kind, f.message);
    }
    Ok(())
}
