//! Render the four prompt variants for a short note.

use sectionid::llm::{build_messages, PromptStrategy};

fn main() {
    let note = "HPI: 61M with chest pain.\nPlan: serial troponins.";
    let strategies = [
        PromptStrategy::ZeroShot,
        PromptStrategy::OneShot {
            example_text: "Allergies: none\nMedications: aspirin".into(),
            example_headers: vec!["Allergies".into(), "Medications".into()],
        },
        PromptStrategy::ChainOfThought,
        PromptStrategy::CloseEnded {
            labels: vec!["History of Present Illness".into(), "Plan".into(), "Allergies".into()],
        },
    ];
    for s in &strategies {
        let m = build_messages(s, note).expect("strategy is complete");
        println!("===== {:?} =====\n[system]\n{}\n[user]\n{}\n", s.kind(), m.system, m.user);
    }
}
