"""Shared fixtures for the test suite."""

import os
import sys

import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.catalog import EMPLOYEE, JOB, register_study_schemas
from src.generator import NatJoin
from src.genlang import ClassRegistry
from src.meta import SchemaRegistry
from src.relations import typed_relation

VM_MODES = ('translate', 'interpret')


@pytest.fixture
def schemas():
    return register_study_schemas(SchemaRegistry())


@pytest.fixture(params=VM_MODES)
def classes(request, schemas):
    """ClassRegistry over `schemas`, once per execution tier."""
    return ClassRegistry(schemas, request.param)


@pytest.fixture
def natjoin(schemas, classes):
    return NatJoin(schemas, classes, spool=False)


@pytest.fixture
def employees():
    return typed_relation(EMPLOYEE, [
        ('ann', 'engineer', 'r&d', 1),
        ('bob', 'manager', 'sales', 2),
        ('cid', 'engineer', 'r&d', 1),
        ('dee', 'intern', 'r&d', 9),
    ])


@pytest.fixture
def jobs():
    return typed_relation(JOB, [
        ('dev', 'write code', 1),
        ('lead', 'run sales', 2),
        ('ops', 'keep it up', 3),
    ])


@pytest.fixture
def cache_dir(tmp_path):
    return tmp_path / 'joins'
