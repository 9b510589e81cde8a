"""
Gets the simlab version string.
An installed distribution reports its metadata version, a git checkout
reports the nearest numeric tag, anything else is an unknown build.
"""

__all__ = "get_version"

from importlib import metadata
from pathlib import Path
import subprocess

_DISTRIBUTION = "simlab"


def _git_version(root: Path) -> str:
    """Version from 'git describe', PEP 440 style, '.dev' suffix when dirty."""
    try:
        described = subprocess.check_output(
            "git describe --tags --match [0-9]*".split(), cwd=root, stderr=subprocess.DEVNULL).decode().strip()
    except (subprocess.CalledProcessError, OSError):
        return ""

    if "-" in described:
        described = ".post".join(described.split("-")[:2])

    try:
        dirty = subprocess.check_output(
            "git diff-index --name-only HEAD".split(), cwd=root, stderr=subprocess.DEVNULL).decode().strip()
    except (subprocess.CalledProcessError, OSError):
        dirty = ""
    return described + ".dev" if dirty else described


def get_version() -> str:
    """Get a version number for this build."""
    try:
        return metadata.version(_DISTRIBUTION)
    except metadata.PackageNotFoundError:
        pass

    root = Path(__file__).resolve().parent.parent
    if (root / ".git").is_dir():
        version = _git_version(root)
        if version:
            return version
    return "unknown build"


if __name__ == "__main__":
    print(get_version())
