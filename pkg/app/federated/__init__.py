"""Decentralized training simulator: topologies, consensus, DPASGD and FedAvg."""
