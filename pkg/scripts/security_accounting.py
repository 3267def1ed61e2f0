"""Hermite-factor bookkeeping for ML-KEM-768 style parameters (pure arithmetic)."""

import json

from modcdpr.harness import security_accounting

if __name__ == "__main__":
    print(json.dumps(security_accounting(), indent=2))
