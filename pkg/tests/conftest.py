import io

import pytest

from flag_synth.distribution import sample_powerlaw, sizes_to_distribution
from flag_synth.models import FlagParams, ProfileSizeDistribution

HAND_COUNTS = {1: 4, 2: 2, 4: 1}

RATINGS_DAT = b"u1::i1::5::978300760\nu2::i1::3::978300761\nu3::i1::4::978300762\nu3::i2::4::978300763\n"
USERS_DAT = b"u1::F::1::10::48067\nu2::M::56::16::70072\nu3::F::25::15::55117\n"
MOVIES_DAT = (
    b"i1::Nico Icon (1995)::Documentary\n"
    b"i2::Toy Story (1995)::Animation|Children's|Comedy\n"
)


def as_stream(data: bytes) -> io.BytesIO:
    return io.BytesIO(data)


@pytest.fixture
def hand_dist() -> ProfileSizeDistribution:
    return ProfileSizeDistribution.from_counts(HAND_COUNTS)


@pytest.fixture
def hand_params() -> FlagParams:
    return FlagParams(alpha=1.0, beta=0.3)


@pytest.fixture
def ratings_file(tmp_path):
    path = tmp_path / "ratings.dat"
    path.write_bytes(RATINGS_DAT)
    return path


@pytest.fixture
def users_file(tmp_path):
    path = tmp_path / "users.dat"
    path.write_bytes(USERS_DAT)
    return path


@pytest.fixture
def hand_ratings_file(tmp_path):
    """Ratings whose user pivot is the hand distribution S={1:4, 2:2, 4:1}."""
    lines = []
    for n, size in enumerate([1, 1, 1, 1, 2, 2, 4]):
        lines += [f"h{n}::m{m}::3::0" for m in range(size)]
    path = tmp_path / "hand.dat"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def powerlaw_dist(alpha: float, k: int, n: int, seed: int) -> ProfileSizeDistribution:
    return sizes_to_distribution(sample_powerlaw(alpha, k=k, xmin=1, n=n, seed=seed))
