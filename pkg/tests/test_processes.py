import numpy as np
import pytest
from scipy import stats

from itoquad.processes import PoissonPath, PoissonProcess, eval_path, sample_poisson_path
from itoquad.sampling import RngStream


def test_eval_examples():
    path = PoissonPath(1.0, 5.0, [1.0, 2.5])
    assert eval_path(path, 0.0) == 0
    assert eval_path(path, 2.5) == 2
    assert eval_path(path, 2.49999) == 1
    assert path.terminal_count == 2
    assert np.array_equal(path.eval([0.5, 1.0, 3.0]), [0.0, 1.0, 2.0])


def test_empty_path_is_zero():
    path = PoissonPath(0.1, 1.0, [])
    assert np.all(path.eval(np.linspace(0, 1, 11)) == 0)


def test_path_validation():
    with pytest.raises(ValueError):
        PoissonPath(1.0, 5.0, [2.0, 1.0])
    with pytest.raises(ValueError):
        PoissonPath(1.0, 5.0, [1.0, 6.0])
    with pytest.raises(ValueError):
        sample_poisson_path(0.0, 1.0, RngStream(0))


def test_jump_times_readonly():
    path = sample_poisson_path(1.0, 3.0, RngStream(0))
    with pytest.raises(ValueError):
        path.jump_times[0] = 0.0


def test_unit_jumps_at_jump_times():
    path = sample_poisson_path(2.0, 5.0, RngStream(1))
    s = path.jump_times
    assert np.all(s > 0) and np.all(s <= 5.0) and np.all(np.diff(s) > 0)
    after = path.eval(s)
    before = path.eval(s - 1e-12)
    assert np.array_equal(after - before, np.ones(s.size))


def test_terminal_mean_and_variance():
    counts = np.array([sample_poisson_path(0.75, 10.0, RngStream(2, i)).eval(10.0) for i in range(10**4)])
    assert abs(counts.mean() - 7.5) < 3 * np.sqrt(7.5 / counts.size)
    assert counts.var(ddof=1) == pytest.approx(7.5, rel=0.05)


def test_chi_square_at_one():
    a = 0.75
    counts = np.array([sample_poisson_path(a, 1.0, RngStream(3, i)).eval(1.0) for i in range(10**4)])
    k_max = 4
    observed = np.array([np.sum(counts == k) for k in range(k_max)] + [np.sum(counts >= k_max)])
    probs = np.append(stats.poisson.pmf(range(k_max), a), stats.poisson.sf(k_max - 1, a))
    assert stats.chisquare(observed, probs * counts.size).pvalue > 0.01


def test_disjoint_increments_uncorrelated():
    paths = [sample_poisson_path(1.0, 2.0, RngStream(4, i)) for i in range(5000)]
    first = np.array([p.eval(1.0) for p in paths])
    second = np.array([p.eval(2.0) - p.eval(1.0) for p in paths])
    assert abs(np.corrcoef(first, second)[0, 1]) < 4 / np.sqrt(5000)


def test_integral_power():
    path = PoissonPath(1.0, 5.0, [1.0, 2.5])
    # 0 on [0,1), 1 on [1,2.5), 2 on [2.5,3]
    assert path.integral_power(3.0, 2) == pytest.approx(1.5 + 4 * 0.5)
    assert path.integral_power(0.5, 2) == 0.0


def test_process_object():
    proc = PoissonProcess(0.75)
    assert proc.spec() == "poisson:a=0.75"
    a = proc.sample_path(10.0, RngStream(5))
    b = proc.sample_path(10.0, RngStream(5))
    assert np.array_equal(a.jump_times, b.jump_times)
