// Pause a run, serialize it, and resume from the JSON snapshot.

use constraints_consensus::consensus::{even_partition, Snapshot};
use constraints_consensus::scenarios::gen_uncertain_lp;
use constraints_consensus::{gen_chain, EngineConfig, Protocol, Result, Simulation};

pub fn run_example() -> Result<bool> {
    let scenario = gen_uncertain_lp(500, 3, 2)?;
    let program = scenario.program()?;
    let graph = gen_chain(6)?;
    let partition = even_partition(500, 6);
    let protocol = Protocol::Qvcc { bandwidth: 3 };

    let full = Simulation::new(&program, &graph, &partition, protocol, EngineConfig::default())?.run()?;

    let mut sim = Simulation::new(&program, &graph, &partition, protocol, EngineConfig::default())?;
    for _ in 0..4 {
        sim.step()?;
    }
    let text = sim.snapshot().to_json()?;
    println!("snapshot at round {}: {} bytes", sim.round(), text.len());
    let resumed = Simulation::restore(&program, Snapshot::from_json(&text)?, EngineConfig::default())?.run()?;

    let same = resumed == full;
    println!("resumed run reproduces the uninterrupted one: {same}");
    Ok(same)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
