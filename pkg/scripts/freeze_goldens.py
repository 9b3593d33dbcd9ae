#!/usr/bin/env python3
"""Freeze the three task prompts as golden files.

Renders each task's latest shipped config in a fresh workspace and writes
the full text plus a sha256 manifest under tests/goldens/. Rerun after any
deliberate fixture change:  python scripts/freeze_goldens.py
"""

from __future__ import annotations

import hashlib
import json
import tempfile
from pathlib import Path

from scoreloop.store import Workspace

ROOT = Path(__file__).resolve().parent.parent
GOLDENS = ROOT / "tests" / "goldens"


def main() -> None:
    GOLDENS.mkdir(parents=True, exist_ok=True)
    hashes: dict[str, str] = {}
    with tempfile.TemporaryDirectory() as td:
        ws = Workspace.init(Path(td) / "data")
        for aid in ws.list_assessments():
            prompt = ws.assemble(ws.latest_config(aid))
            text_path = GOLDENS / f"{aid}_prompt.txt"
            text_path.write_text(prompt.full_text, encoding="utf-8")
            digest = hashlib.sha256(prompt.full_text.encode("utf-8")).hexdigest()
            hashes[aid] = digest
            print(f"{aid}: {prompt.estimated_tokens} tokens, sha256 {digest[:16]}…")
    (GOLDENS / "goldens.json").write_text(
        json.dumps(hashes, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(f"golden manifest written to {GOLDENS / 'goldens.json'}")


if __name__ == "__main__":
    main()
