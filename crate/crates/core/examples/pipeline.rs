//! The batch front end driven in-process: synth, mask, train, eval,
//! analyze and neighborhood sharing one output directory.

use bbbg::cli::{execute, parse_config};

fn main() -> bbbg::Result<()> {
    let dir = tempfile::tempdir().expect("tempdir");
    for command in ["synth", "mask", "train", "eval", "analyze", "neighborhood"] {
        let text = format!(
            "command = {command}\nout_dir = {}\nn_docs = 600\nwidth_scale = 0.125\nlatent_dim = 10\n\
             epochs = 20\nbatch_size = 32\nbaseline = true\n",
            dir.path().display()
        );
        let cfg = parse_config(Some(&text), &[])?;
        for p in execute(&cfg)? {
            println!("{command}: wrote {}", p.file_name().unwrap().to_string_lossy());
        }
    }
    print!("{}", std::fs::read_to_string(dir.path().join("eval.csv")).expect("eval table"));
    Ok(())
}
