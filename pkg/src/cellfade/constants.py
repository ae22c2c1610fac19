"""Physical constants (SI)."""

FARADAY = 96485.33212       # C/mol
GAS_CONSTANT = 8.314462618  # J/(mol K)
