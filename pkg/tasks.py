"""Invoke tasks for hpi (`inv --list` shows them all).

> inv test
> inv slow
> inv coverage
"""

import os
import shutil
from itertools import chain
from pathlib import Path

from invoke import task

EXCLUDE = ('venv', '.venv')


def _found(*patterns):
    p = Path('.')
    return (i for i in chain.from_iterable(p.glob(pat) for pat in patterns) if not str(i.parent).startswith(EXCLUDE))


@task
def lint(c):
    """flake8 - static check for python files"""
    c.run("flake8 hpi/ tests/ tasks.py")


@task
def cleantest(c):
    """Clean *.pyc, caches, coverage artifacts and scratch simulation output."""
    for art in _found('**/*.pyc', '**/*.pyo'):
        os.remove(art)
    for cache in _found('**/__pycache__', '**/.pytest_cache'):
        shutil.rmtree(cache)
    for leftover in ('.coverage', 'htmlcov'):
        path = Path(leftover)
        if path.is_dir():
            shutil.rmtree(path)
        elif path.exists():
            path.unlink()


@task
def cleanbuild(c):
    """Clean dist/, build/ and egg-info/."""
    for b in _found('**/dist', '**/build', '**/*.egg-info'):
        shutil.rmtree(b)


@task(cleantest, cleanbuild)
def clean(c):
    """Equivalent to both cleanbuild and cleantest..."""
    pass


@task
def test(c):
    """Fast suite; slow acceptance runs are deselected in setup.cfg."""
    c.run("pytest tests/")


@task
def slow(c):
    """Desk-scale acceptance runs, minutes each."""
    c.run("pytest tests/ -m slow")


@task
def reference(c):
    """Determinism checks with the reference stream forced."""
    c.run("pytest tests/test_cli.py -k determinism", env={"HPI_REFERENCE_MODE": "1"})


@task
def coverage(c):
    """Run the fast suite with coverage reporting."""
    c.run('coverage run --source=hpi -m pytest')
    c.run('coverage report -m')
    c.run('coverage html')


@task(cleanbuild)
def build(c):
    """Build package using python -m build."""
    c.run('python -m build')


@task(cleanbuild)
def release(c, version="patch"):
    """Build and release. Optional parameter is "patch (default) / version=minor / version=major"""  # noqa: E501
    c.run(f"bump2version {version}")
    c.run('python -m build')
    c.run("git push")
    c.run("git push --tags")
