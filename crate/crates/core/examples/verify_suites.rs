//! Run the self-checking suites that back `charmer verify`.

use charmer::verify::{run_suite, VerifySuite};

fn main() -> charmer::Result<()> {
    let mut all_passed = true;
    for suite in [
        VerifySuite::SentenceSpace,
        VerifySuite::Projection,
        VerifySuite::Equivalence,
    ] {
        let result = run_suite(suite, 0)?;
        println!("{result}");
        all_passed &= result.passed();
    }
    if !all_passed {
        std::process::exit(1);
    }
    Ok(())
}
