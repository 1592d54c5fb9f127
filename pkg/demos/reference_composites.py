"""Recompute the composite score of every published reference row.

    python demos/reference_composites.py
"""
from decimal import Decimal

from cortex_bench.benchmarks import REFERENCE_ROWS, composite


def main():
    print(f"{'model':<24}{'printed':>9}{'recomputed':>12}{'diff':>9}")
    for row in REFERENCE_ROWS:
        value = composite(Decimal(row.v4), Decimal(row.it), Decimal(row.behavior), Decimal(row.ost))
        diff = value - Decimal(row.brain_score)
        print(f"{row.model:<24}{row.brain_score:>9}{str(value):>12}{str(diff):>9}")


if __name__ == "__main__":
    main()
