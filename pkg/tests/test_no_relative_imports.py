"""Import hygiene checks over the package sources."""

from __future__ import annotations

import ast
from pathlib import Path

import pytest

PACKAGE_DIR = Path(__file__).resolve().parents[1] / "src" / "p2p_topk"
SOURCES = sorted(PACKAGE_DIR.rglob("*.py"))
PROTOCOL_SOURCES = sorted((PACKAGE_DIR / "protocol").glob("*.py"))


def _imports(path: Path) -> list[ast.Import | ast.ImportFrom]:
    tree = ast.parse(path.read_text(encoding="utf-8"))
    return [node for node in ast.walk(tree) if isinstance(node, ast.Import | ast.ImportFrom)]


def _module_names(node: ast.Import | ast.ImportFrom) -> list[str]:
    if isinstance(node, ast.ImportFrom):
        return [node.module or ""]
    return [alias.name for alias in node.names]


def _source_id(path: Path) -> str:
    return path.relative_to(PACKAGE_DIR).as_posix()


def test_sources_found():
    assert PACKAGE_DIR / "simkernel" / "engine.py" in SOURCES
    assert PROTOCOL_SOURCES


@pytest.mark.parametrize("path", SOURCES, ids=_source_id)
def test_no_relative_imports(path: Path) -> None:
    relative = [
        node.lineno
        for node in _imports(path)
        if isinstance(node, ast.ImportFrom) and node.level != 0
    ]
    assert not relative, f"relative import in {_source_id(path)} on line(s) {relative}"


@pytest.mark.parametrize("path", PROTOCOL_SOURCES, ids=_source_id)
def test_protocol_does_not_import_kernel(path: Path) -> None:
    offending = [
        name
        for node in _imports(path)
        for name in _module_names(node)
        if name.startswith(("p2p_topk.simkernel", "p2p_topk.experiment", "p2p_topk.cli"))
    ]
    assert not offending, f"{_source_id(path)} imports {offending}"
