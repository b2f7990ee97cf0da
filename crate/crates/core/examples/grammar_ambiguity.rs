//! A small ambiguous grammar: list every parse and show which one wins.

use robocmd::canonicalizer::tree_to_frames;
use robocmd::parser::{enumerate_parses, load_grammar, parse, tokenize};

const GRAMMAR: &str = r#"
start: cmd;
cmd: "put" np pp @frame(Placing){Theme=2, Goal=3}
   | "put" np @frame(Placing){Theme=2};
np: "the" "box" | np pp;
pp: "on" "the" "table" | "on" "the" "shelf";
"#;

fn main() {
    let grammar = load_grammar(GRAMMAR).expect("grammar");
    let tokens = tokenize("put the box on the table on the shelf");
    let all = enumerate_parses(&grammar, &tokens, 10);
    println!("{} parses", all.len());
    for (i, tree) in all.iter().enumerate() {
        println!("#{i} ({} nodes) {}", tree.node_count(), tree_to_frames(tree, &grammar).to_json());
    }
    let chosen = parse(&grammar, &tokens).unwrap();
    println!("chosen: {}", tree_to_frames(&chosen, &grammar).to_json());
}
