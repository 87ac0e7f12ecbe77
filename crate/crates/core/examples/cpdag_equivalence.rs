//! Equivalence classes: the CPDAG of a DAG, its v-structures, and a DAG
//! member recovered from it.

use bnarena::graph::{cpdag_from_dag, extend_to_dag, unshielded_colliders, Dag};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let names = ["rain", "sprinkler", "wet", "slippery", "season"];
    let g = Dag::from_named_arcs(
        &names,
        &[("season", "rain"), ("season", "sprinkler"), ("rain", "wet"), ("sprinkler", "wet"), ("wet", "slippery")],
    )?;
    let class = cpdag_from_dag(&g);
    println!("DAG:\n{}", g.to_text());
    println!("CPDAG:\n{}", class.to_text());
    for (a, c, b) in unshielded_colliders(&class) {
        println!("v-structure {} -> {} <- {}", class.name(a), class.name(c), class.name(b));
    }

    // reversing season -> rain stays in the class; reversing rain -> wet does not
    let mut same = g.clone();
    same.reverse_arc(4, 0)?;
    let mut other = g.clone();
    other.reverse_arc(0, 2)?;
    println!("season <- rain equivalent: {}", cpdag_from_dag(&same) == class);
    println!("wet -> rain equivalent: {}", cpdag_from_dag(&other) == class);

    let member = extend_to_dag(&class)?;
    println!("a member of the class:\n{}", member.to_text());
    Ok(())
}
