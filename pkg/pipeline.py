#!/usr/bin/env python3
"""Script entrypoint for the dagreuse CLI.

The canonical entrypoint is `dagreuse.ui.cli.main`; this file lets
`python pipeline.py simulate dagreuse/fixtures/census.json` work from a checkout.
"""

from dagreuse.ui.cli.main import main


if __name__ == "__main__":
    raise SystemExit(main())
