//! Light salvage vs strict validation, and the error report fed back to the model.

use robocmd::assets;
use robocmd::frames::{FrameInstance, FrameSet};
use robocmd::validator::{render_error_report, validate_light, validate_strict};

fn main() {
    let schema = assets::schema();
    let fs = FrameSet::new(vec![
        FrameInstance::new("Bringing").with("Theme", "the mug").with("Colour", "red"),
        FrameInstance::new("Teleporting").with("Goal", "the moon"),
    ]);

    let strict = validate_strict(&fs, &schema);
    println!("strict: {:?}, {} error(s)", strict.status, strict.errors.len());

    let (salvaged, light) = validate_light(&fs, &schema);
    println!("light:  {:?} -> {}", light.status, salvaged.to_json());
    println!("salvaged set strict-valid: {}", validate_strict(&salvaged, &schema).is_valid());

    println!();
    print!("{}", render_error_report(&strict, &schema).unwrap());
}
