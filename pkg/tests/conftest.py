"""Shared fixtures: the reference link and a few perturbed parameter sets."""

import pytest

from thzrf.schemas import AlphaMuFading, NakagamiFading, PointingError
from thzrf.services.linkstats import SnrModel

# (alpha, mu, phi, s0, m, omega_m) around the reference link
PARAMETER_SETS = [
    (2.3, 2.25, 6.75, 0.56, 2.3, 1.5),
    (2.0, 1.0, 3.0, 0.8, 1.0, 1.0),
    (2.8, 3.1, 9.5, 0.4, 3.5, 2.0),
    (1.6, 1.5, 2.2, 0.7, 1.4, 0.8),
]


def make_model(alpha, mu, phi, s0, m, omega_m, snr_db=30.0) -> SnrModel:
    return SnrModel(
        thz_fading=AlphaMuFading(alpha=alpha, mu=mu, omega=1.75),
        pointing=PointingError(phi=phi, s0=s0),
        rf_fading=NakagamiFading(m=m, omega_m=omega_m),
    ).with_snr_db(snr_db)


@pytest.fixture
def reference_model():
    return SnrModel()


@pytest.fixture
def link_30db(reference_model):
    return reference_model.with_snr_db(30.0)


@pytest.fixture
def link_40db(reference_model):
    return reference_model.with_snr_db(40.0)


@pytest.fixture
def constants_30db(link_30db):
    return link_30db.constants()


@pytest.fixture(params=PARAMETER_SETS, ids=lambda p: "a{}-mu{}-phi{}-m{}".format(p[0], p[1], p[2], p[4]))
def varied_model(request):
    return make_model(*request.param)
