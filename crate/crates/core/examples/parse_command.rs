//! Parse an instruction with the bundled grammar and print frames and tree.
//!
//!     cargo run --example parse_command -- "bring me the red cup from the kitchen"

use robocmd::assets;
use robocmd::canonicalizer::tree_to_frames;
use robocmd::parser::{parse, tokenize};

fn main() {
    let sentence = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "go to the kitchen and bring me the red cup".to_string());
    let grammar = assets::grammar();
    let tokens = tokenize(&sentence);
    match parse(&grammar, &tokens) {
        Ok(tree) => {
            println!("{}", tree_to_frames(&tree, &grammar).to_json());
            print!("{}", tree.render());
        }
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(1);
        }
    }
}
