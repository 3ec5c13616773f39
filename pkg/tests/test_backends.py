import os
import subprocess
import sys

import numpy as np
import pytest

from shus import available_backends
from shus.adapt import LogOccupation, PartialBias, SHUS, SHUSAlpha, WLDeterministic
from shus.chain import Chain
from shus.kernel import ChainState, ProposalConfig, reference_run
from shus.model import TargetModel, potential_energy
from shus.rng import BLOCK, NoiseStream

SCHEMES = [
    SHUS(1.0),
    WLDeterministic(12.0),
    WLDeterministic(0.5, 0.8, linear=True),
    SHUSAlpha(1.0, 0.6),
    PartialBias(1.5, 0.5),
]
BACKENDS = available_backends()


@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("scheme", SCHEMES, ids=lambda s: type(s).__name__ + str(getattr(s, "linear", "")))
def test_bit_identical_to_reference(backend, scheme):
    model = TargetModel(6.0, 12)
    n = 3000
    occ = LogOccupation.uniform(12, scheme, M=1e3)
    state = ChainState(rng=NoiseStream(11))
    state, occ, rec = reference_run(model, occ, ProposalConfig(model.stratum_width), n, state)
    chain = Chain(model, scheme, seed=11, M=1e3, backend=backend)
    rows = chain.run_traced(n)
    np.testing.assert_array_equal(rows[:, 1:], rec)
    np.testing.assert_array_equal(chain.nu, occ.nu)
    assert chain.renorm_count == occ.renorm_count
    assert chain.position == state.position


def test_compiled_potential_matches():
    core = pytest.importorskip("shus._core")
    rng = np.random.default_rng(0)
    for x1, x2 in rng.uniform(-2, 2, size=(200, 2)):
        assert core.potential_energy(x1, x2) == potential_energy(x1, x2)


@pytest.mark.parametrize("backend", BACKENDS)
def test_chunking_does_not_matter(backend):
    model = TargetModel(3.0, 8)
    one = Chain(model, SHUS(), seed=4, backend=backend).run(3 * BLOCK + 17)
    many = Chain(model, SHUS(), seed=4, backend=backend)
    for m in (1, 5, BLOCK - 6, 2 * BLOCK + 17):
        many.run(m)
    assert one.n == many.n
    np.testing.assert_array_equal(one.nu, many.nu)
    assert one.position == many.position


@pytest.mark.parametrize("backend", BACKENDS)
def test_run_until_exit_matches_trace(backend):
    model = TargetModel(2.0, 6)
    for seed in range(5):
        t = Chain(model, SHUS(), sigma=0.4, seed=seed, backend=backend).run_until_exit()
        rows = Chain(model, SHUS(), sigma=0.4, seed=seed, backend=backend).run_traced(t)
        assert rows[-1, 1] > 1.0
        assert np.all(rows[:-1, 1] <= 1.0)


@pytest.mark.parametrize("backend", BACKENDS)
def test_exit_after_buffer_refill(backend):
    # threshold = running max over the first block, so the exit lies past a refill
    model = TargetModel(1.0, 4)
    rows = Chain(model, SHUS(), seed=9, backend=backend).run_traced(3 * BLOCK)
    x1 = rows[:, 1]
    thr = float(x1[:BLOCK].max())
    later = np.flatnonzero(x1 > thr)
    assert later.size and later[0] >= BLOCK
    t = Chain(model, SHUS(), seed=9, backend=backend).run_until_exit(threshold=thr)
    assert t == int(rows[later[0], 0])


def test_censoring():
    c = Chain(TargetModel(12.0, 12), SHUS(), seed=0)
    assert c.run_until_exit(cap=500) is None
    assert c.n == 500
    assert c.run_until_exit(cap=400) is None


def test_checkpoints():
    c = Chain(TargetModel(1.0, 4), SHUS(), seed=1)
    out = c.run_checkpoints([10, 100, 1000])
    d = Chain(TargetModel(1.0, 4), SHUS(), seed=1).run(1000)
    np.testing.assert_array_equal(out[-1], d.log_theta)
    with pytest.raises(ValueError):
        c.run_checkpoints([10])


def test_chain_validation():
    with pytest.raises(ValueError):
        Chain(TargetModel(1.0, 4), SHUS(), start=(2.0, 0.0))
    with pytest.raises(ValueError):
        Chain(TargetModel(1.0, 4, potential=lambda a, b: 0.0), SHUS())
    with pytest.raises(ValueError):
        Chain(TargetModel(1.0, 4), SHUS(), backend="fortran")
    with pytest.raises(ValueError):
        Chain(TargetModel(1.0, 4), PartialBias()).next_stepsize()


def test_env_var_forces_python():
    env = dict(os.environ, SHUS_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "import shus; print(shus.BACKEND)"], env=env, capture_output=True, text=True, check=True
    )
    assert out.stdout.strip() == "python"
