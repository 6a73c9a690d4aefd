"""nexus-sim: deterministic simulator for reputation-driven decentralized
federated learning (Beta reputation, noisy adjudication, trust-weighted
selection, Rep-FedAvg with DP-SGD, and graduated-quorum weighted BFT)."""

__version__ = "0.1.0"
