"""Subprocess entry point: ``python -m castor_models.runner <ModelClass>``.

The executor appends the deployment's module name as the final argument;
this resolves it against the reference-model registry and runs one job.
"""
from __future__ import annotations

import json
import logging
import sys

from .adapter import run_model
from .models import MODEL_CLASSES


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO)
    argv = argv if argv is not None else sys.argv[1:]
    name = argv[0] if argv else ""
    model_class = MODEL_CLASSES.get(name)
    if model_class is None:
        known = ", ".join(sorted(MODEL_CLASSES))
        print(json.dumps({
            "status": "error",
            "message": f"UnknownModule: {name!r} (known: {known})",
        }))
        return 1
    return run_model(model_class)


if __name__ == "__main__":
    sys.exit(main())
