#!/usr/bin/env python3
"""Run every pipeline on the example configuration and collect the datasets.

Produces, in the output directory:
  - fpi_trace.csv              pump-on transmission transient (resonant chip)
  - fpi_characteristics.json   FSR / finesse numbers for the facet cavity
  - coupler_sweep_T*.csv/json  reflectivity vs pump power per temperature
  - opo_spectrum_delta*.csv    squeezed/antisqueezed spectra per detuning
  - opo_optimal_levels.csv     best levels vs detuning
  - spdc_spectrum_T*_P*.csv    emission spectra per temperature and power
  - homodyne_budget_*.csv      measured squeezing vs residual pump
  - squeeze_ideal.csv / squeeze_photorefractive.csv
  - fit_dn_T*.json             index-shift law recovered from the sweeps
  - fit_fpi.json               index excursion recovered from the trace

The fit stages consume the simulated (noisy) sweeps and the trace, closing
the loop from forward model to parameter recovery.
"""

import argparse
import sys
from pathlib import Path

from photoref.cli import main as cli_main

ORDER = [
    "fpi-trace",
    "fpi-char",
    "coupler-sweep",
    "homodyne",
    "opo-spectrum",
    "spdc-spectrum",
    "squeeze-budget",
    "fit-dn",
    "fit-fpi",
]


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--config",
        default=str(Path(__file__).resolve().parent.parent / "configs" / "example.yaml"),
    )
    parser.add_argument("--out", default="out")
    parser.add_argument("--seed", type=int, default=None)
    args = parser.parse_args()

    for sub in ORDER:
        argv = [sub, "--config", args.config, "--out", args.out]
        if args.seed is not None:
            argv += ["--seed", str(args.seed)]
        code = cli_main(argv)
        status = "ok" if code == 0 else f"exit {code}"
        print(f"{sub:<16} {status}")
        if code != 0:
            return code
    print(f"\nall datasets written to {args.out}/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
