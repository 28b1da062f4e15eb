mod serve_and_judge {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/serve_and_judge.rs"));
}

#[test]
fn serve_and_judge_runs() {
    serve_and_judge::run_example().expect("serve_and_judge example should run");
}
