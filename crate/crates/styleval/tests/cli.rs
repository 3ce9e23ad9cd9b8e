//! The shipped binary end to end: exit codes, stdout/stderr contracts, and
//! the resume behavior a user sees when re-running commands.

use std::io::BufRead;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use styleval::mockfarm::{MockServer, Script};

const DIALOGUES: &str = "\
Good morning , how are you today ? __eou__ I am doing well , thank you for asking .
Can you recommend a book for the weekend ? __eou__ You might enjoy the new mystery novel everyone mentions .
What time does the pharmacy close ? __eou__ It closes at nine on weekdays .
I missed the bus again this morning . __eou__ There is another one every twenty minutes , do not worry .
Did the package arrive yesterday ? __eou__ Yes , it was waiting at the front desk .
How was the concert last night ? __eou__ Louder than I expected , but the band was wonderful .
Could you help me move this table ? __eou__ Sure , let me grab the other end .
Is the museum open on Mondays ? __eou__ No , it is closed for maintenance that day .
The printer is out of toner again . __eou__ I will order a replacement cartridge this afternoon .
";

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_styleval")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// Writes a one-model workspace and returns the config path.
fn workspace(root: &Path, base_url: &str) -> PathBuf {
    std::fs::create_dir_all(root.join("data")).unwrap();
    std::fs::write(root.join("data/dialogues.txt"), DIALOGUES).unwrap();
    let cfg = format!(
        "[run]\neval_samples = 3\n\n\
         [[dataset]]\nid = \"dd\"\nkind = \"plain_text\"\npath = \"data/dialogues.txt\"\n\n\
         [[model]]\nid = \"alpha\"\n[model.backend]\n\
         base_url = \"{base_url}\"\nmodel_name = \"alpha-7b\"\n\n\
         [backends.judge]\nbase_url = \"{base_url}\"\nmodel_name = \"judge-9b\"\n\n\
         [backends.logprob]\nbase_url = \"{base_url}\"\nmodel_name = \"referee-7b\"\n\n\
         [backends.classifier]\nbase_url = \"{base_url}\"\nmodel_name = \"cls-base\"\n\n\
         [backends.embedding]\nbase_url = \"{base_url}\"\nmodel_name = \"embed-small\"\n\n\
         [retry]\nmax_retries = 1\nbackoff_ms = 5\ntimeout_s = 10\n"
    );
    let cfg_path = root.join("run.toml");
    std::fs::write(&cfg_path, cfg).unwrap();
    cfg_path
}

#[test]
fn missing_config_file_exits_2() {
    let out = run(&["ingest", "--config", "/no/such/run.toml"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_of(&out);
    assert!(err.starts_with("error: "), "stderr was: {err}");
    assert!(err.contains("/no/such/run.toml"));
}

#[test]
fn unknown_config_key_exits_2_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = workspace(dir.path(), "http://127.0.0.1:1");
    let text = std::fs::read_to_string(&cfg).unwrap();
    std::fs::write(&cfg, text.replace("eval_samples = 3", "eval_samples = 3\ntypo_knob = 1")).unwrap();

    let out = run(&["ingest", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("typo_knob"));
}

#[test]
fn ingest_with_missing_dataset_exits_2_with_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = workspace(dir.path(), "http://127.0.0.1:1");
    std::fs::remove_file(dir.path().join("data/dialogues.txt")).unwrap();

    let out = run(&["ingest", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("dialogues.txt"));
}

#[test]
fn report_before_score_exits_2_and_points_at_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = workspace(dir.path(), "http://127.0.0.1:1");

    let out = run(&["report", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("styleval score"));

    // An existing-but-empty store is the same usage error, not a crash.
    std::fs::create_dir_all(dir.path().join("out")).unwrap();
    std::fs::write(dir.path().join("out/metrics.jsonl"), "").unwrap();
    let out = run(&["report", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("empty"));
}

#[test]
fn bad_flag_values_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = workspace(dir.path(), "http://127.0.0.1:1");
    let cfg = cfg.to_str().unwrap();

    let out = run(&["generate", "--config", cfg, "--samples", "0"]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&["generate", "--config", cfg, "--directions", "formal,loud"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("loud"));

    let out = run(&["score", "--config", cfg, "--metrics", "bleu,bleu"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("twice"));

    let out = run(&["report", "--config", cfg, "--format", "pdf"]);
    assert_eq!(out.status.code(), Some(2));
}

#[tokio::test(flavor = "multi_thread")]
async fn the_full_flow_works_through_the_binary() {
    let server = MockServer::serve(Script::default(), 0).await.unwrap();
    let base_url = server.base_url();
    let output = tokio::task::spawn_blocking(move || {
        let dir = tempfile::tempdir().unwrap();
        let cfg_path = workspace(dir.path(), &base_url);
        let cfg = cfg_path.to_str().unwrap();

        let out = run(&["ingest", "--config", cfg]);
        assert_eq!(out.status.code(), Some(0), "ingest: {}", stderr_of(&out));
        assert!(stdout_of(&out).contains("9 samples"));

        let out = run(&["generate", "--config", cfg]);
        assert_eq!(out.status.code(), Some(0), "generate: {}", stderr_of(&out));
        assert!(
            stdout_of(&out).contains("generated 12 cells (0 reused)"),
            "3 samples x 1 model x 4 directions: {}",
            stdout_of(&out)
        );

        let out = run(&["score", "--config", cfg, "--metrics", "bleu"]);
        assert_eq!(out.status.code(), Some(0), "score: {}", stderr_of(&out));
        assert!(stdout_of(&out).contains("bleu: scored 12/12"));

        let out = run(&["report", "--config", cfg, "--format", "all"]);
        assert_eq!(out.status.code(), Some(0), "report: {}", stderr_of(&out));
        for name in ["leaderboard.csv", "leaderboard.md", "leaderboard.json"] {
            assert!(dir.path().join("out").join(name).exists(), "missing {name}");
        }

        // Idempotent rerun: nothing regenerated, exit code still 0.
        let out = run(&["generate", "--config", cfg]);
        assert_eq!(out.status.code(), Some(0));
        assert!(stdout_of(&out).contains("generated 0 cells (12 reused)"));
        stdout_of(&out)
    })
    .await
    .unwrap();
    assert!(!output.is_empty());
}

#[test]
fn mock_serve_rejects_broken_scripts() {
    let dir = tempfile::tempdir().unwrap();

    let not_json = dir.path().join("script.json");
    std::fs::write(&not_json, "{not json").unwrap();
    let out = run(&["mock-serve", "--script", not_json.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    // Well-formed JSON whose canned body violates the chat wire shape.
    let bad_body = dir.path().join("bad_body.json");
    std::fs::write(&bad_body, r#"{"chat": {"mode": "canned", "canned": [{"bogus": 1}]}}"#)
        .unwrap();
    let out = run(&["mock-serve", "--script", bad_body.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("chat"));
}

#[test]
fn mock_serve_starts_and_announces_its_url() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("script.json");
    std::fs::write(&script, "{}").unwrap();

    let mut child = Command::new(bin())
        .args(["mock-serve", "--script", script.to_str().unwrap()])
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    std::io::BufReader::new(child.stdout.as_mut().unwrap())
        .read_line(&mut line)
        .unwrap();
    child.kill().unwrap();
    child.wait().unwrap();

    assert!(
        line.starts_with("listening on http://127.0.0.1:"),
        "unexpected announcement: {line:?}"
    );
}
