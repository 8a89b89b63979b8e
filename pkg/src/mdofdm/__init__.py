"""Link-level Monte Carlo comparison of MMSE spatial-multiplexing MIMO-OFDM
and per-subcarrier transmit-antenna-selection OFDM (MD-OFDM)."""

__version__ = "0.1.0"
