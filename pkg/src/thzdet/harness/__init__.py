"""Monte Carlo harness: TOML configs, BER/PEP/wideband runs, results and CLI."""
