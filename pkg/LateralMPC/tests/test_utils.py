import numpy as np
import pytest
from numpy.testing import assert_array_equal

from LateralMPC import dump, load
from LateralMPC.solver import QpStatus, create_solution
from LateralMPC.utils import get_random_generator


@pytest.mark.fast_test
def test_dump_and_load(tmp_path):
    res = create_solution(np.array([1.0, -2.0]), np.zeros(3), np.ones(3),
                          QpStatus.SOLVED, 12, 1e-6, 2e-6, 3e-4)
    path = tmp_path / "solution.pkl"
    dump(res, path)
    loaded = load(path)
    assert_array_equal(loaded.x, res.x)
    assert loaded.status == QpStatus.SOLVED
    assert loaded.nit == 12

    dump(res, str(tmp_path / "solution.pkl.gz"), compress=9)
    assert load(str(tmp_path / "solution.pkl.gz")).nit == 12


@pytest.mark.fast_test
def test_random_generator_from_seed():
    first = get_random_generator(3).normal(size=4)
    second = get_random_generator(np.random.SeedSequence(3)).normal(size=4)
    assert_array_equal(first, second)
    rng = np.random.default_rng(0)
    assert get_random_generator(rng) is rng
    assert isinstance(get_random_generator(None), np.random.Generator)
    with pytest.raises(TypeError):
        get_random_generator(1.5)
    with pytest.raises(TypeError):
        get_random_generator("seed")
