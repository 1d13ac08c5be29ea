import pytest


@pytest.fixture(autouse=True)
def _results_in_tmp(monkeypatch, tmp_path) -> None:
    # Default output directories are relative to the working directory.
    monkeypatch.chdir(tmp_path)
