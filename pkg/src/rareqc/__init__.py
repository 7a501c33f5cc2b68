"""Simulation toolkit for single rare-earth-ion qubit readout and gates.

Submodules:
    core       -- density matrices, Kraus channels, fidelity metrics
    readout    -- Monte Carlo photon statistics for direct and buffered readout
    gates      -- two-qubit conditional-NOT sequence with its error channels
    tomography -- two-qubit state tomography through the noisy readout
    scaling    -- analytic n-qubit GHZ fidelity predictions
    chain      -- doped-crystal model, blockade graph and chain discovery
    config     -- experiment configuration file handling
    cli        -- command-line entry point
"""

__version__ = "0.1.0"
