//! Recurrent phenotype. One call to [`Network::activate`] is one fully
//! synchronous propagation step: every non-input node reads the activations
//! its sources held after the previous step.

use crate::genome::{Genome, NodeKind};
use crate::params::SIGMOID_SLOPE;

/// `1 / (1 + e^(-4.9 x))`
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-SIGMOID_SLOPE * x).exp())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    node_ids: Vec<u32>,
    activations: Vec<f64>,
    scratch: Vec<f64>,
    /// Incoming `(source slot, weight)` per node slot, enabled genes only.
    incoming: Vec<Vec<(usize, f64)>>,
    sensors: Vec<usize>,
    biases: Vec<usize>,
    /// Slots of hidden and output nodes, the ones recomputed each step.
    computed: Vec<usize>,
    outputs: Vec<usize>,
    output_values: Vec<f64>,
}

impl Network {
    pub fn build(genome: &Genome) -> Self {
        let node_ids: Vec<u32> = genome.nodes().iter().map(|n| n.id).collect();
        let slot = |id: u32| node_ids.binary_search(&id).expect("gene endpoint is a node");
        let mut incoming = vec![Vec::new(); node_ids.len()];
        for c in genome.connections().iter().filter(|c| c.enabled) {
            incoming[slot(c.out_node)].push((slot(c.in_node), c.weight));
        }
        let slots_of = |kind: NodeKind| -> Vec<usize> {
            genome
                .nodes()
                .iter()
                .enumerate()
                .filter(|(_, n)| n.kind == kind)
                .map(|(i, _)| i)
                .collect()
        };
        let outputs = slots_of(NodeKind::Output);
        let mut computed = slots_of(NodeKind::Hidden);
        computed.extend(&outputs);
        computed.sort_unstable();
        let mut net = Self {
            activations: vec![0.0; node_ids.len()],
            scratch: vec![0.0; node_ids.len()],
            node_ids,
            incoming,
            sensors: slots_of(NodeKind::Sensor),
            biases: slots_of(NodeKind::Bias),
            computed,
            output_values: vec![0.0; outputs.len()],
            outputs,
        };
        net.reset();
        net
    }

    /// Zeroes all activations except the bias, which is held at 1.
    pub fn reset(&mut self) {
        self.activations.fill(0.0);
        for &b in &self.biases {
            self.activations[b] = 1.0;
        }
    }

    pub fn edge_count(&self) -> usize {
        self.incoming.iter().map(Vec::len).sum()
    }

    pub fn node_ids(&self) -> &[u32] {
        &self.node_ids
    }

    /// Current activation of every node, in `node_ids` order.
    pub fn activations(&self) -> &[f64] {
        &self.activations
    }

    /// Loads `inputs` into the sensor nodes and runs one synchronous step.
    /// Returns the output activations in output-node order.
    pub fn activate(&mut self, inputs: &[f64]) -> &[f64] {
        assert_eq!(inputs.len(), self.sensors.len(), "sensor count mismatch");
        for (&s, &x) in self.sensors.iter().zip(inputs) {
            self.activations[s] = x;
        }
        for &b in &self.biases {
            self.activations[b] = 1.0;
        }
        self.scratch.copy_from_slice(&self.activations);
        for &n in &self.computed {
            let sum: f64 = self.incoming[n].iter().map(|&(src, w)| w * self.scratch[src]).sum();
            self.activations[n] = sigmoid(sum);
        }
        for (v, &o) in self.output_values.iter_mut().zip(&self.outputs) {
            *v = self.activations[o];
        }
        &self.output_values
    }
}
