//! Regenerates the checked-in synthetic fixtures under `fixtures/`.
//!
//!     cargo run -p cfair-core --example make_fixtures

use std::path::Path;

use cfair_core::corpus::save_jsonl;
use cfair_core::synth::stereotype_corpus;

fn main() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    std::fs::create_dir_all(&root).expect("create fixtures dir");

    let train = stereotype_corpus(500, 7);
    save_jsonl(&train, &root.join("stereotype_train.jsonl")).expect("write train fixture");

    let test = stereotype_corpus(200, 8);
    save_jsonl(&test, &root.join("stereotype_test.jsonl")).expect("write test fixture");

    println!(
        "wrote {} train docs and {} test docs to {}",
        train.len(),
        test.len(),
        root.display()
    );
}
