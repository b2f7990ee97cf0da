//! Synonym renaming, role remapping and the structural filter on a raw LLM reply.

use robocmd::assets;
use robocmd::canonicalizer::canonicalize;
use robocmd::frames::decode;

fn main() {
    let raw = r#"Sure! {"frames":[
        {"frame":"Grabbing","elements":{"Object":"the bottle","Instrument":"the gripper"}},
        {"frame":"Closure","elements":{"Containing_portal":"the fridge door"}}]}"#;
    let schema = assets::schema();
    let decoded = decode(raw).expect("frame-shaped JSON");
    println!("decoded:   {}", decoded.frames.to_json());
    let out = canonicalize(&decoded.frames, &schema);
    println!("canonical: {}", out.frames.to_json());
    for w in &out.warnings {
        println!("  warning: {w}");
    }

    let unfiltered = canonicalize(&decoded.frames, &schema.clone().with_filter(false));
    println!("no filter: {}", unfiltered.frames.to_json());
}
