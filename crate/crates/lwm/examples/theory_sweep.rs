//! Sweep random tabular MDPs with random state aggregations and check the
//! planning-suboptimality bound on each instance.

use lwm::theory::{run_sweep, SweepSpec};

fn main() {
    let spec = SweepSpec::default();
    println!(
        "sweeping {} instances (|S| <= {}, |A| <= {}, gamma in [{}, {}], eps_plan = {})",
        spec.instances,
        spec.max_states,
        spec.max_actions,
        spec.gamma_min,
        spec.gamma_max,
        spec.eps_plan
    );

    let rows = run_sweep(&spec).unwrap();
    let holds = rows.iter().filter(|r| r.holds).count();
    println!("bound holds on {holds}/{} instances", rows.len());

    println!();
    println!("{:>10} {:>10} {:>12} {:>12}", "eps_sim", "lhs", "rhs", "slack");
    for row in rows.iter().take(8) {
        println!(
            "{:>10.4} {:>10.4} {:>12.4} {:>12.4}",
            row.eps_sim,
            row.lhs,
            row.rhs,
            row.rhs - row.lhs
        );
    }
    println!("... ({} more rows)", rows.len().saturating_sub(8));
}
