import importlib.util
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - exercised on Python 3.10 CI
    import tomli as tomllib


ROOT = Path(__file__).resolve().parents[1]


def _load_pyproject():
    return tomllib.loads((ROOT / "pyproject.toml").read_text(encoding="utf-8"))


def _names(requirements):
    return {item.split(";")[0].split("[")[0].split("<")[0].split(">")[0].split("=")[0].strip().lower()
            for item in requirements}


def test_runtime_dependencies_are_importable_names():
    dependencies = _names(_load_pyproject()["project"]["dependencies"])
    assert {"numpy", "pyahocorasick", "regex", "pydantic", "pyyaml", "geojson", "pycountry", "psutil"} <= dependencies
    assert not dependencies & {"fastapi", "uvicorn", "websockets", "nicegui", "torch"}

    modules = {"pyahocorasick": "ahocorasick", "pyyaml": "yaml"}
    for name in dependencies:
        assert importlib.util.find_spec(modules.get(name, name)) is not None, name


def test_optional_dependencies_cover_tests_and_lint():
    optional = _load_pyproject()["project"]["optional-dependencies"]
    assert {"pytest", "pytest-cov", "hypothesis", "statsmodels", "tomli"} <= _names(optional["test"])
    assert any(item.startswith("flake8>=") for item in optional["lint"])


def test_python_version_metadata_matches_modern_type_syntax():
    project = _load_pyproject()["project"]

    assert project["requires-python"] == ">=3.10"
    assert "Programming Language :: Python :: 3.9" not in project["classifiers"]


def test_console_scripts_point_at_cli_main():
    scripts = _load_pyproject()["project"]["scripts"]
    assert scripts == {"guestmix": "guestmix.cli:main", "gmx": "guestmix.cli:main"}


def test_packaging_includes_bundled_resources():
    package_data = _load_pyproject()["tool"]["setuptools"]["package-data"]["guestmix"]
    resources = ROOT / "guestmix" / "resources"

    assert "resources/*.tsv" in package_data
    assert "resources/*.txt" in package_data
    for name in ("nationalities_de.tsv", "veto_de.txt", "abbreviations_de.txt"):
        assert (resources / name).exists(), name


def test_flake8_ignores_local_editor_history():
    config = (ROOT / ".flake8").read_text(encoding="utf-8")

    assert ".history" in config
    assert ".venv" in config
