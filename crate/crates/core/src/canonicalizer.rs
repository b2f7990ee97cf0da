//! Mapping of parse trees and raw frame sets onto the schema's canonical
//! vocabulary. The fixed order is synonyms, then key remap, then the
//! optional structural filter.

use crate::frames::{FrameInstance, FrameSet};
use crate::parser::{Capture, Grammar, ParseTree};
use crate::schema::FrameSchema;

/// Emits one frame per annotated node, in pre-order.
///
/// A position binding whose subtree covers no tokens (an epsilon
/// alternative) produces no element.
pub fn tree_to_frames(tree: &ParseTree, grammar: &Grammar) -> FrameSet {
    let mut frames = Vec::new();
    collect_frames(tree, grammar, &mut frames);
    FrameSet::new(frames)
}

fn collect_frames(node: &ParseTree, grammar: &Grammar, out: &mut Vec<FrameInstance>) {
    if let Some(ann) = node.production_id.and_then(|p| grammar.annotation(p)) {
        let mut inst = FrameInstance::new(ann.frame.clone());
        for (role, capture) in &ann.bindings {
            let value = match capture {
                Capture::Literal(s) => s.as_str(),
                Capture::Position(p) => node.children[p - 1].covered_text.as_str(),
            };
            if !value.is_empty() {
                inst.push(role.clone(), value);
            }
        }
        out.push(inst);
    }
    for child in &node.children {
        collect_frames(child, grammar, out);
    }
}

pub fn apply_synonyms(fs: &FrameSet, schema: &FrameSchema) -> FrameSet {
    FrameSet::new(
        fs.frames
            .iter()
            .map(|f| match schema.frame_synonyms().get(f.name()) {
                Some(target) => f.renamed(target),
                None => f.clone(),
            })
            .collect(),
    )
}

/// Renames aliased roles. On a collision the earlier element is kept and a
/// warning is returned.
pub fn remap_keys(fs: &FrameSet, schema: &FrameSchema) -> (FrameSet, Vec<String>) {
    let mut warnings = Vec::new();
    let frames = fs
        .frames
        .iter()
        .enumerate()
        .map(|(idx, f)| {
            let mut out = FrameInstance::new(f.name());
            for (role, value) in f.elements() {
                let canonical = schema.key_remap().get(role).unwrap_or(role);
                if !out.push(canonical.clone(), value.clone()) {
                    warnings.push(format!(
                        "frame {idx} \"{}\": element \"{role}\" remaps to \"{canonical}\" which is already set; dropped",
                        f.name()
                    ));
                }
            }
            out
        })
        .collect();
    (FrameSet::new(frames), warnings)
}

/// Removes roles a known frame does not allow. Unknown frames pass through.
pub fn filter_elements(fs: &FrameSet, schema: &FrameSchema) -> (FrameSet, Vec<(usize, String)>) {
    let mut dropped = Vec::new();
    let frames = fs
        .frames
        .iter()
        .enumerate()
        .map(|(idx, f)| {
            if !schema.is_known_frame(f.name()) {
                return f.clone();
            }
            let kept = f
                .elements()
                .iter()
                .filter(|(role, _)| {
                    let ok = schema.allows(f.name(), role);
                    if !ok {
                        dropped.push((idx, role.clone()));
                    }
                    ok
                })
                .cloned()
                .collect();
            f.with_elements(kept)
        })
        .collect();
    (FrameSet::new(frames), dropped)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Canonicalized {
    pub frames: FrameSet,
    pub warnings: Vec<String>,
    /// Elements removed by the structural filter.
    pub dropped: Vec<(usize, String)>,
}

/// Full canonicalization; the filter runs only when the schema enables it.
pub fn canonicalize(fs: &FrameSet, schema: &FrameSchema) -> Canonicalized {
    let renamed = apply_synonyms(fs, schema);
    let (remapped, mut warnings) = remap_keys(&renamed, schema);
    if !schema.filter_enabled() {
        return Canonicalized {
            frames: remapped,
            warnings,
            dropped: Vec::new(),
        };
    }
    let (frames, dropped) = filter_elements(&remapped, schema);
    for (idx, role) in &dropped {
        warnings.push(format!(
            "frame {idx} \"{}\": unsupported element \"{role}\" filtered",
            frames.frames[*idx].name()
        ));
    }
    Canonicalized {
        frames,
        warnings,
        dropped,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{load_grammar, parse, tokenize};

    fn schema() -> FrameSchema {
        FrameSchema::from_json(
            r#"{
            "element_rules": {
                "Bringing": ["Theme", "Beneficiary", "Goal", "Agent", "Source", "Area", "Manner"],
                "Taking": ["Theme", "Source"],
                "Closing": ["Containing_object", "Agent"]
            },
            "element_key_remap": {"Containing_portal": "Containing_object"},
            "frame_synonyms": {"Grabbing": "Taking"},
            "filter_enabled": true
        }"#,
        )
        .unwrap()
    }

    const GRAMMAR: &str = "start: cmd | cmd \"and\" cmd ;\n\
        cmd: TAKE_V np @frame(Taking){Theme=2}\n\
           | BRING_V np \"to\" np @frame(Bringing){Theme=2, Goal=4}\n\
           | \"look\" @frame(Looking){Manner=\"idle\"}\n\
        np: DET NOUN | NOUN ;\n\
        TAKE_V = take | grab\n\
        BRING_V = bring\n\
        DET = the | a\n\
        NOUN = laptop | book | couch\n";

    #[test]
    fn single_annotated_rule() {
        let g = load_grammar(GRAMMAR).unwrap();
        let t = parse(&g, &tokenize("take the laptop")).unwrap();
        assert_eq!(
            tree_to_frames(&t, &g),
            FrameSet::new(vec![FrameInstance::new("Taking").with("Theme", "the laptop")])
        );
    }

    #[test]
    fn frames_in_source_order() {
        let g = load_grammar(GRAMMAR).unwrap();
        let t = parse(&g, &tokenize("take the laptop and bring the book to the couch")).unwrap();
        let fs = tree_to_frames(&t, &g);
        assert_eq!(
            fs,
            FrameSet::new(vec![
                FrameInstance::new("Taking").with("Theme", "the laptop"),
                FrameInstance::new("Bringing")
                    .with("Theme", "the book")
                    .with("Goal", "the couch"),
            ])
        );
    }

    #[test]
    fn literal_binding_and_unannotated() {
        let g = load_grammar(GRAMMAR).unwrap();
        let t = parse(&g, &tokenize("look")).unwrap();
        assert_eq!(tree_to_frames(&t, &g).frames[0].get("Manner"), Some("idle"));
        let g = load_grammar("start: \"go\" ;").unwrap();
        let t = parse(&g, &tokenize("go")).unwrap();
        assert!(tree_to_frames(&t, &g).is_empty());
    }

    #[test]
    fn epsilon_capture_skipped() {
        let g = load_grammar("start: \"go\" dest @frame(Motion){Goal=2}\ndest: \"home\" | ;").unwrap();
        let t = parse(&g, &tokenize("go")).unwrap();
        assert!(tree_to_frames(&t, &g).frames[0].elements().is_empty());
    }

    #[test]
    fn synonyms() {
        let fs = FrameSet::new(vec![FrameInstance::new("Grabbing").with("Theme", "box")]);
        assert_eq!(
            apply_synonyms(&fs, &schema()),
            FrameSet::new(vec![FrameInstance::new("Taking").with("Theme", "box")])
        );
        let plain = FrameSet::new(vec![FrameInstance::new("Taking").with("Theme", "box")]);
        assert_eq!(apply_synonyms(&plain, &schema()), plain);
        assert!(apply_synonyms(&FrameSet::empty(), &schema()).is_empty());
    }

    #[test]
    fn remap() {
        let fs = FrameSet::new(vec![FrameInstance::new("Closing").with("Containing_portal", "the door")]);
        let (out, warnings) = remap_keys(&fs, &schema());
        assert_eq!(
            out,
            FrameSet::new(vec![FrameInstance::new("Closing").with("Containing_object", "the door")])
        );
        assert!(warnings.is_empty());
        let plain = FrameSet::new(vec![FrameInstance::new("Taking").with("Theme", "box")]);
        assert_eq!(remap_keys(&plain, &schema()).0, plain);
    }

    #[test]
    fn remap_collision_first_wins() {
        let fs = FrameSet::new(vec![FrameInstance::new("Closing")
            .with("Containing_portal", "the door")
            .with("Containing_object", "the window")]);
        let (out, warnings) = remap_keys(&fs, &schema());
        assert_eq!(out.frames[0].elements(), &[("Containing_object".into(), "the door".into())]);
        assert_eq!(warnings.len(), 1);
    }

    #[test]
    fn filter() {
        let fs = FrameSet::new(vec![FrameInstance::new("Bringing")
            .with("Theme", "book")
            .with("Color", "red")]);
        let (out, dropped) = filter_elements(&fs, &schema());
        assert_eq!(out, FrameSet::new(vec![FrameInstance::new("Bringing").with("Theme", "book")]));
        assert_eq!(dropped, vec![(0, "Color".to_string())]);

        let ok = FrameSet::new(vec![FrameInstance::new("Bringing").with("Goal", "couch")]);
        assert_eq!(filter_elements(&ok, &schema()), (ok.clone(), vec![]));

        let unknown = FrameSet::new(vec![FrameInstance::new("Teleporting").with("Goal", "mars")]);
        assert_eq!(filter_elements(&unknown, &schema()), (unknown.clone(), vec![]));
    }

    #[test]
    fn canonicalize_respects_filter_flag() {
        let fs = FrameSet::new(vec![FrameInstance::new("Grabbing")
            .with("Theme", "box")
            .with("Color", "red")]);
        let on = canonicalize(&fs, &schema());
        assert_eq!(on.frames, FrameSet::new(vec![FrameInstance::new("Taking").with("Theme", "box")]));
        assert_eq!(on.dropped.len(), 1);
        let off = canonicalize(&fs, &schema().with_filter(false));
        assert_eq!(off.frames.frames[0].elements().len(), 2);
        assert!(off.dropped.is_empty());
        assert_eq!(canonicalize(&on.frames, &schema()).frames, on.frames);
    }
}
