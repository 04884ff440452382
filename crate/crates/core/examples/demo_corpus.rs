//! Writes the synthetic two-group demo corpus.
//!
//! `cargo run -p timbretone --example demo_corpus -- <dir> [per_group] [seed]`

fn main() -> timbretone::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = args.next().unwrap_or_else(|| "demo_corpus".into());
    let per_group = args.next().map_or(8, |s| s.parse().expect("per_group is an integer"));
    let seed = args.next().map_or(1, |s| s.parse().expect("seed is an integer"));
    let manifest = timbretone::synth::write_demo_corpus(dir.as_ref(), per_group, seed)?;
    println!("{}", manifest.display());
    Ok(())
}
