// Every protocol on every topology for one uncertain linear program, as CSV.

use constraints_consensus::scenarios::{run_experiment, write_results_csv, ExperimentResult};
use constraints_consensus::{Protocol, Result, ScenarioKind, ScenarioSpec, Topology};

pub fn run_example() -> Result<Vec<ExperimentResult>> {
    let spec = ScenarioSpec::new(ScenarioKind::UncertainLp, 400, 2, 12, 4);
    let mut results = Vec::new();
    for topology in [Topology::Chain, Topology::Geometric, Topology::Complete] {
        for protocol in [Protocol::Acc, Protocol::Vcc, Protocol::Qvcc { bandwidth: 5 }] {
            results.push(run_experiment(&spec, topology, protocol)?);
        }
    }
    write_results_csv(&results, std::io::stdout().lock())?;
    Ok(results)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
