//! Categorize section names and reproduce the category frequency table from
//! the shipped inventory.

use sectionid::ontology::{shipped_inventory, CategoryStats, Level};
use sectionid::Ontology;

fn main() {
    let ont = Ontology::shipped();
    for name in [
        "Medications Reviewed As Of This Encounter",
        "Orders Placed This Encounter",
        "Medication List at End of Visith",
        "Chest and Lung Exam",
        "Something Else Entirely",
    ] {
        println!(
            "{name:<45} coarse={:<22} fine={}",
            ont.categorize(name, true),
            ont.categorize_level(name, Level::Fine, true)
        );
    }

    let inventory = shipped_inventory();
    let stats = CategoryStats::from_counts(inventory.iter().map(|(s, n)| (s.as_str(), *n)), &ont).unwrap();
    println!("\n{} section occurrences", stats.total_sections);
    for c in stats.categories.iter().take(8) {
        println!("{:<28} {:>5} {:>6.2}%", c.category, c.frequency, c.frequency_pct);
    }
}
