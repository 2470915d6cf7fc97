"""Shared builders for the test suite."""

import numpy as np
import pytest

from glevy import DiscreteLevyMeasure, LevyTriple, UncertaintySet


def point_mass_family(intensities, location=1.0):
    """Uncertainty set {lam * delta_location : lam in intensities}, no drift or diffusion."""
    triples = tuple(
        LevyTriple(DiscreteLevyMeasure(atoms=np.array([[location]]), weights=np.array([float(lam)])))
        for lam in intensities
    )
    return UncertaintySet(triples)


def mixture_family(alphas=(0.25, 0.5, 0.75), z1=1.0, z2=2.0):
    """Total-mass-one mixtures alpha*delta_z1 + (1-alpha)*delta_z2."""
    triples = []
    for a in alphas:
        m = DiscreteLevyMeasure(atoms=np.array([[z1], [z2]]), weights=np.array([a, 1.0 - a]))
        triples.append(LevyTriple(m))
    return UncertaintySet(tuple(triples))


def location_family(xs=(1.0, 1.5, 2.0)):
    """Unit point masses at varying locations, {delta_x : x in xs}."""
    triples = tuple(
        LevyTriple(DiscreteLevyMeasure(atoms=np.array([[float(x)]]), weights=np.array([1.0])))
        for x in xs
    )
    return UncertaintySet(triples)


@pytest.fixture
def lam_12():
    return point_mass_family(np.linspace(1.0, 2.0, 5))


@pytest.fixture
def mixtures():
    return mixture_family()


@pytest.fixture
def locations():
    return location_family()
